"""Config-driven experiment runner.

Experiments map to the device studies the library supports: the coupling
sweep over chemical potential, parametric cooling (single point and
detuning/amplitude map), cat-state generation, and the dynamical,
steady-state, criticality and temperature QFI scans.  Each run writes CSV
data files plus a key-sorted ``manifest.json`` capturing the fully resolved
configuration, library version, wall clock and convergence diagnostics;
re-running from a manifest reproduces the CSV files byte for byte.

Configuration is an INI-style text file (sections and ``key = value`` lines;
values are parsed as JSON, so lists and booleans work) overridable from the
command line with repeatable ``--set section.key=value`` flags.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (EffectiveModel, cat_fidelity, criticality_scan, fit_qfi,
                       l1_coherence, matrix_element, occupation,
                       power_law_exponent, qfi_dynamic, qfi_steady_analytic,
                       qfi_steady_numeric, wigner)
from .dynamics import evolve, local_dissipators, steady_state
from .errors import ConfigError, GjjError, TruncationError, UnstableRegimeError
from .fock import coherent, ket2dm, ptrace
from .junction import (JunctionParams, MembraneParams, circuit_params,
                       coupling_g2)
from .models import (DriveParams, build_h_driven, build_h_kerr,
                     build_h_squeezed, cat_times, effective_params,
                     EffectiveParams, resonance_detuning)

EXPERIMENTS = ("junction-sweep", "cooling", "cooling-map", "cat",
               "qfi-dynamic", "qfi-steady", "criticality-scan",
               "temperature-scan")

DEFAULTS: dict[str, dict] = {
    "run": {"experiment": "", "path": "effective", "out": "results",
            "workers": 1, "seed": 0},
    "numerics": {"n_a": 8, "n_b": 30, "dim": 60, "tol": 1e-8,
                 "leak_tol": 1e-4, "steady_tol": 1e-10,
                 "wigner_points": 101, "wigner_halfwidth": 6.0,
                 "t_points": 80},
    "effective": {"omega": 1.0, "g2": -0.02, "eta_tilde": 0.005,
                  "lambda_over_lc": 0.8, "xi": 0.0, "temperature": 0.0},
    "drive": {"amplitude": 1.0, "delta": 0.0, "resonance": True},
    "bath": {"kappa": 0.1, "q_factor": 1e6, "nbar": 10.0},
    "junction": {"delta0_ev": 0.2e-3, "length": 35e-9, "width": 0.0,
                 "mu_ev": 0.0, "fermi_velocity": 2.5e6,
                 "charging_energy_hz": 1e6, "ordinary_frequencies": False,
                 "mode_cutoff": 100000, "tail_tol": 1e-12},
    "membrane": {"frequency_hz": 1e6, "mass": 0.0, "zzpf": 0.0},
    "cat": {"beta": 2.0, "components": 2, "model": "kerr"},
    "scan": {"mu_max_ev": 0.02, "mu_points": 41,
             "delta_min": 1.2, "delta_max": 3.2, "delta_points": 11,
             "amp_min": 0.2, "amp_max": 1.4, "amp_points": 7,
             "lambda_over_lc": [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95],
             "temperatures": [0.0, 0.25, 0.5, 1.0, 2.0],
             "xis": [0.0, 5e-5]},
}


# ---------------------------------------------------------------------------
# configuration handling


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, sets: list[str]) -> tuple[dict, set[str]]:
    """Resolve configuration from defaults, an optional file (plain config or
    manifest) and --set overrides.  Returns the config and the set of
    explicitly provided "section.key" names."""
    cfg = {s: dict(v) for s, v in DEFAULTS.items()}
    explicit: set[str] = set()

    def apply(section: str, key: str, value, origin: str):
        if section not in cfg:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        if key not in cfg[section]:
            raise ConfigError(f"{origin}: unknown key {section}.{key}")
        default = DEFAULTS[section][key]
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{origin}: {section}.{key} must be a boolean")
        elif isinstance(default, (int, float)) and not isinstance(value, bool):
            if not isinstance(value, (int, float)):
                raise ConfigError(f"{origin}: {section}.{key} must be a number")
        elif isinstance(default, list):
            if not isinstance(value, list):
                raise ConfigError(f"{origin}: {section}.{key} must be a list")
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(f"{origin}: {section}.{key} must be a string")
        cfg[section][key] = value
        explicit.add(f"{section}.{key}")

    if path:
        text = Path(path).read_text(encoding="utf-8")
        stripped = text.lstrip()
        if stripped.startswith("{"):
            manifest = json.loads(text)
            if "config" not in manifest:
                raise ConfigError(f"{path}: JSON file is not a run manifest")
            for section, values in manifest["config"].items():
                for key, value in values.items():
                    apply(section, key, value, path)
        else:
            parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
            parser.read_string(text, source=path)
            for section in parser.sections():
                for key, raw in parser.items(section):
                    apply(section, key, _parse_value(raw), path)

    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        name, raw = item.split("=", 1)
        if "." not in name:
            raise ConfigError(f"--set {item!r}: expected section.key=value")
        section, key = name.split(".", 1)
        apply(section.strip(), key.strip(), _parse_value(raw.strip()), f"--set {item}")
    return cfg, explicit


def _validate(experiment: str, cfg: dict, explicit: set[str]):
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    num = cfg["numerics"]
    for key in ("n_a", "n_b", "dim", "wigner_points", "t_points"):
        if num[key] <= 0:
            raise ConfigError(f"numerics.{key} must be positive")
    for key in ("tol", "leak_tol", "steady_tol", "wigner_halfwidth"):
        if num[key] <= 0:
            raise ConfigError(f"numerics.{key} must be positive")
    path = cfg["run"]["path"]
    if path not in ("effective", "junction"):
        raise ConfigError("run.path must be 'effective' or 'junction'")
    junction_keys = {k for k in explicit if k.startswith(("junction.", "membrane."))}
    effective_keys = {k for k in explicit
                      if k.startswith("effective.") and k != "effective.omega"}
    if experiment == "junction-sweep":
        if effective_keys:
            raise ConfigError(
                f"junction-sweep takes physical inputs only; drop {sorted(effective_keys)}")
    elif experiment == "cooling":
        if path == "effective" and junction_keys:
            raise ConfigError(
                f"run.path=effective but physical inputs set: {sorted(junction_keys)}; "
                "set run.path=junction or remove them")
        if path == "junction" and effective_keys:
            raise ConfigError(
                f"run.path=junction but effective inputs set: {sorted(effective_keys)}")
    elif junction_keys:
        raise ConfigError(
            f"{experiment} uses the direct effective path; drop {sorted(junction_keys)}")


# ---------------------------------------------------------------------------
# small helpers


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    v = float(value)
    return f"{v:.17g}"


def write_csv(path: Path, header: list[str], rows: list[list]):
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _junction_inputs(cfg: dict) -> tuple[JunctionParams, MembraneParams]:
    j = cfg["junction"]
    scale = 2.0 * math.pi if j["ordinary_frequencies"] else 1.0
    params = JunctionParams(delta0=j["delta0_ev"], L0=j["length"], W=j["width"],
                            mu=j["mu_ev"], vF=j["fermi_velocity"],
                            Ec=j["charging_energy_hz"] * scale,
                            mode_cutoff=int(j["mode_cutoff"]),
                            tail_tol=j["tail_tol"])
    m = cfg["membrane"]
    omega = m["frequency_hz"] * scale
    bath = cfg["bath"]
    if m["mass"] > 0 or m["zzpf"] > 0:
        mem = MembraneParams(omega=omega, mass=m["mass"], zzpf=m["zzpf"],
                             Q=bath["q_factor"], nbar_bath=bath["nbar"])
    else:
        mem = MembraneParams.graphene_default(params, omega, Q=bath["q_factor"],
                                              nbar_bath=bath["nbar"])
    return params, mem


def _cooling_inputs(cfg: dict) -> tuple[float, float]:
    """(g2, eta_tilde) in units of the mechanical frequency."""
    if cfg["run"]["path"] == "junction":
        params, mem = _junction_inputs(cfg)
        circ = circuit_params(params)
        return coupling_g2(params, mem) / mem.omega, circ.eta_tilde / mem.omega
    eff = cfg["effective"]
    return eff["g2"], eff["eta_tilde"]


def _resolve_drive(cfg: dict, g2: float, eta_tilde: float) -> DriveParams:
    drive = cfg["drive"]
    if drive["resonance"]:
        delta = resonance_detuning(1.0, g2, eta_tilde, drive["amplitude"])
    else:
        delta = drive["delta"]
        if delta == 0.0:
            raise ConfigError("drive.delta must be set when drive.resonance is false")
    return DriveParams(A=drive["amplitude"], delta=delta)


def _effective_model(cfg: dict, Lambda: float | None = None,
                     xi: float | None = None,
                     temperature: float | None = None) -> EffectiveModel:
    eff = cfg["effective"]
    lam = eff["lambda_over_lc"] * (-0.25) if Lambda is None else Lambda
    return EffectiveModel(
        Lambda=lam,
        xi=eff["xi"] if xi is None else xi,
        omega=1.0,
        Q=cfg["bath"]["q_factor"],
        temperature=eff["temperature"] if temperature is None else temperature,
        dim=int(cfg["numerics"]["dim"]),
    )


# ---------------------------------------------------------------------------
# experiments; each returns (diagnostics, outputs) and writes its CSVs


def run_junction_sweep(cfg: dict, out: Path):
    params, mem = _junction_inputs(cfg)
    mu_grid = np.linspace(0.0, cfg["scan"]["mu_max_ev"], int(cfg["scan"]["mu_points"]))
    rows = []
    for mu in mu_grid:
        p = JunctionParams(delta0=params.delta0, L0=params.L0, W=params.W,
                           mu=float(mu), vF=params.vF, Ec=params.Ec,
                           mode_cutoff=params.mode_cutoff, tail_tol=params.tail_tol)
        circ = circuit_params(p)
        g2 = coupling_g2(p, mem)
        rows.append([mu, g2 / mem.omega, circ.EJ_tilde, circ.omega_r])
    write_csv(out / "junction_sweep.csv",
              ["mu_eV", "g2_over_omega", "ej_tilde", "omega_r"], rows)
    return {"points": len(rows), "omega_rad_s": mem.omega,
            "zzpf_m": mem.zzpf, "mass_kg": mem.mass}, ["junction_sweep.csv"]


def _cooling_point(cfg: dict, g2: float, eta_tilde: float,
                   drive: DriveParams) -> tuple[EffectiveParams, object]:
    num = cfg["numerics"]
    bath = cfg["bath"]
    dims = (int(num["n_a"]), int(num["n_b"]))
    eff = effective_params(1.0, g2, eta_tilde, drive)
    H = build_h_driven(dims, eff, eta_tilde, 1.0, g2)
    terms = local_dissipators(bath["kappa"], 1.0 / bath["q_factor"],
                              bath["nbar"], dims)
    rho = steady_state(H, terms, tol=num["steady_tol"])
    return eff, rho


def run_cooling(cfg: dict, out: Path):
    g2, eta_tilde = _cooling_inputs(cfg)
    drive = _resolve_drive(cfg, g2, eta_tilde)
    eff, rho = _cooling_point(cfg, g2, eta_tilde, drive)
    rho_b = ptrace(rho, 1)
    rho_a = ptrace(rho, 0)
    occ_b = occupation(rho, 1)
    row = [g2, eta_tilde, drive.A, drive.delta, eff.alpha, eff.Lambda,
           eff.omega_a, eff.omega_b, occ_b, occupation(rho, 0),
           matrix_element(rho_b, 0, 0).real, matrix_element(rho_b, 1, 1).real]
    write_csv(out / "cooling.csv",
              ["g2", "eta_tilde", "amplitude", "delta", "alpha", "lambda",
               "omega_a", "omega_b", "occupation_b", "occupation_a",
               "p00", "p11"], [row])
    elem_rows = []
    for i in range(4):
        for j in range(4):
            elem_rows.append([i, j, abs(matrix_element(rho_b, i, j))])
    write_csv(out / "cooling_rho.csv", ["i", "j", "abs_rho_ij"], elem_rows)
    return {"occupation_b": occ_b,
            "top_level_population_b": rho_b.top_level_population(),
            "top_level_population_a": rho_a.top_level_population(),
            "delta": drive.delta}, ["cooling.csv", "cooling_rho.csv"]


def run_cooling_map(cfg: dict, out: Path):
    g2, eta_tilde = _cooling_inputs(cfg)
    scan = cfg["scan"]
    deltas = np.linspace(scan["delta_min"], scan["delta_max"], int(scan["delta_points"]))
    amps = np.linspace(scan["amp_min"], scan["amp_max"], int(scan["amp_points"]))
    rows = []
    ridge = []
    for amp in amps:
        best = (math.inf, math.nan)
        for delta in deltas:
            try:
                _, rho = _cooling_point(cfg, g2, eta_tilde,
                                        DriveParams(A=float(amp), delta=float(delta)))
                occ = occupation(rho, 1)
                status = "ok"
            except UnstableRegimeError:
                occ, status = None, "unstable"
            except GjjError as exc:
                occ, status = None, f"error:{type(exc).__name__}"
            rows.append([delta, amp, occ, status])
            if occ is not None and occ < best[0]:
                best = (occ, float(delta))
        ridge.append([amp, best[1], best[0] if math.isfinite(best[0]) else None])
    write_csv(out / "cooling_map.csv",
              ["delta", "amplitude", "occupation_b", "status"], rows)
    write_csv(out / "cooling_ridge.csv",
              ["amplitude", "delta_min_occupation", "occupation_b"], ridge)
    return {"points": len(rows)}, ["cooling_map.csv", "cooling_ridge.csv"]


def run_cat(cfg: dict, out: Path):
    num = cfg["numerics"]
    cat = cfg["cat"]
    dim = int(num["dim"])
    model = _effective_model(cfg)
    eff = EffectiveParams.from_lambda_xi(1.0, model.Lambda, model.xi)
    if eff.kerr is None or eff.kerr <= 0:
        raise ConfigError("cat generation needs subcritical Lambda and xi > 0")
    m = int(cat["components"])
    tau0, tau1 = cat_times(eff.kerr, m)
    beta = cat["beta"]
    psi0 = coherent(beta, dim)
    if cat["model"] == "kerr":
        H = build_h_kerr(dim, eff)
        rotation = eff.Delta * tau1
    elif cat["model"] == "quartic":
        H = build_h_squeezed(dim, eff)
        # quartic number-conserving part shifts the precession by -2 kerr
        rotation = (eff.Delta - 2.0 * eff.kerr) * tau1
    else:
        raise ConfigError("cat.model must be 'kerr' or 'quartic'")
    t_grid = np.linspace(tau1 / 8.0, tau1, 8)
    traj = evolve(ket2dm(psi0), H, [], t_grid, tol=num["tol"],
                  leak_tol=num["leak_tol"])
    rho = traj.states[-1]
    fid = cat_fidelity(rho, beta, m, rotation=rotation)
    half = num["wigner_halfwidth"]
    axis = np.linspace(-half, half, int(num["wigner_points"]))
    wig = wigner(rho, axis, axis)
    wig.save_csv(out / "wigner.csv")
    min_w = float(wig.values.min())
    write_csv(out / "cat.csv",
              ["beta", "components", "model", "kerr", "tau0", "tau1",
               "fidelity", "min_wigner"],
              [[beta, m, cat["model"], eff.kerr, tau0, tau1, fid, min_w]])
    return {"fidelity": fid, "min_wigner": min_w,
            "trace_dev": float(traj.trace_dev.max())}, ["cat.csv", "wigner.csv"]


def run_qfi_dynamic(cfg: dict, out: Path):
    model = _effective_model(cfg)
    times, F = qfi_dynamic(model, t_grid=None if cfg["bath"]["q_factor"] > 0 else None)
    write_csv(out / "qfi_curve.csv", ["t", "F"],
              [[t, f] for t, f in zip(times, F)])
    fit = fit_qfi(times, F)
    write_csv(out / "qfi_fit.csv",
              ["lambda", "xi", "temperature", "C", "zeta", "beta", "t_star",
               "F_max", "residual"],
              [[model.Lambda, model.xi, model.temperature, fit.C, fit.zeta,
                fit.beta_decay, fit.t_star, fit.F_max, fit.residual]])
    return {"zeta": fit.zeta, "beta": fit.beta_decay,
            "residual": fit.residual}, ["qfi_curve.csv", "qfi_fit.csv"]


def run_qfi_steady(cfg: dict, out: Path):
    model = _effective_model(cfg)
    f_num = qfi_steady_numeric(model)
    f_analytic = (qfi_steady_analytic(1.0, model.Lambda, model.temperature)
                  if model.xi == 0.0 else None)
    write_csv(out / "qfi_steady.csv",
              ["lambda", "xi", "temperature", "f_ss_numeric", "f_ss_analytic"],
              [[model.Lambda, model.xi, model.temperature, f_num, f_analytic]])
    return {"f_ss_numeric": f_num, "f_ss_analytic": f_analytic}, ["qfi_steady.csv"]


def run_criticality_scan(cfg: dict, out: Path, workers: int = 1):
    model = _effective_model(cfg)
    fracs = cfg["scan"]["lambda_over_lc"]
    Lambdas = [-0.25 * f for f in fracs]
    rows = criticality_scan(Lambdas, xi=model.xi, T=model.temperature,
                            Q=model.Q, dim=model.dim, workers=workers)
    table = [[f, r["F_max"], r["t_star"], r["zeta"], r["beta"], r["F_ss"],
              r["C_l1_ss"]] for f, r in zip(fracs, rows)]
    write_csv(out / "criticality_scan.csv",
              ["lambda_over_lc", "F_max", "t_star", "zeta", "beta", "F_ss",
               "C_l1"], table)
    exponent = power_law_exponent(Lambdas, [r["F_max"] for r in rows])
    return {"f_max_exponent": exponent, "points": len(rows)}, ["criticality_scan.csv"]


def run_temperature_scan(cfg: dict, out: Path):
    scan = cfg["scan"]
    rows = []
    for xi in scan["xis"]:
        for T in scan["temperatures"]:
            model = _effective_model(cfg, xi=float(xi), temperature=float(T))
            f_num = qfi_steady_numeric(model)
            c_l1 = l1_coherence(model.generator().steady_state())
            f_analytic = (qfi_steady_analytic(1.0, model.Lambda, float(T))
                          if xi == 0.0 else None)
            rows.append([model.Lambda, xi, T, f_num, f_analytic, c_l1])
    write_csv(out / "temperature_scan.csv",
              ["lambda", "xi", "temperature", "f_ss_numeric", "f_ss_analytic",
               "c_l1_ss"], rows)
    return {"points": len(rows)}, ["temperature_scan.csv"]


_RUNNERS = {
    "junction-sweep": run_junction_sweep,
    "cooling": run_cooling,
    "cooling-map": run_cooling_map,
    "cat": run_cat,
    "qfi-dynamic": run_qfi_dynamic,
    "qfi-steady": run_qfi_steady,
    "criticality-scan": run_criticality_scan,
    "temperature-scan": run_temperature_scan,
}


def run(experiment: str, cfg: dict, out_dir: str | Path,
        workers: int = 1, seed: int = 0) -> dict:
    """Execute one experiment, writing CSVs and manifest.json into out_dir.
    Returns the manifest dictionary."""
    _validate(experiment, cfg, set())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = {s: dict(v) for s, v in cfg.items()}
    cfg["run"]["experiment"] = experiment
    cfg["run"]["out"] = str(out_dir)
    cfg["run"]["workers"] = workers
    cfg["run"]["seed"] = seed
    t0 = time.monotonic()
    runner = _RUNNERS[experiment]
    try:
        if experiment == "criticality-scan":
            diagnostics, outputs = runner(cfg, out, workers=workers)
        else:
            diagnostics, outputs = runner(cfg, out)
    except TruncationError:
        # one retry with a doubled mechanical truncation
        cfg["numerics"]["n_b"] = int(cfg["numerics"]["n_b"]) * 2
        cfg["numerics"]["dim"] = int(cfg["numerics"]["dim"]) * 2
        if experiment == "criticality-scan":
            diagnostics, outputs = runner(cfg, out, workers=workers)
        else:
            diagnostics, outputs = runner(cfg, out)
        diagnostics["truncation_doubled"] = True
    manifest = {
        "config": cfg,
        "diagnostics": diagnostics,
        "experiment": experiment,
        "outputs": sorted(outputs),
        "seed": seed,
        "version": __version__,
        "wall_clock_s": round(time.monotonic() - t0, 6),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2, default=float)
        f.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# generic sweep


def _sweep_point(args):
    experiment, cfg, axis, value, out_root, index = args
    section, key = axis.split(".", 1)
    cfg = {s: dict(v) for s, v in cfg.items()}
    cfg[section][key] = value
    point_dir = Path(out_root) / f"point_{index:04d}"
    try:
        manifest = run(experiment, cfg, point_dir, workers=1)
        return {"value": value, "status": "ok",
                "diagnostics": manifest["diagnostics"]}
    except GjjError as exc:
        return {"value": value, "status": f"error:{type(exc).__name__}",
                "diagnostics": {"message": str(exc)}}


def sweep(experiment: str, cfg: dict, axis: str, values: list,
          out_dir: str | Path, workers: int = 1, seed: int = 0) -> dict:
    """Run ``experiment`` once per value of ``axis`` (a section.key name).

    Points execute independently (optionally in a process pool); rows are
    merged in input order and per-point failures are recorded rather than
    aborting the sweep.
    """
    if "." not in axis:
        raise ConfigError(f"axis {axis!r} must be section.key")
    section, key = axis.split(".", 1)
    if section not in cfg or key not in cfg[section]:
        raise ConfigError(f"axis {axis!r} does not name a config field")
    if not isinstance(DEFAULTS[section][key], (int, float)) or \
            isinstance(DEFAULTS[section][key], bool):
        raise ConfigError(f"axis {axis!r} is not numeric")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(experiment, cfg, axis, v, str(out), i) for i, v in enumerate(values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    diag_keys = sorted({k for r in results if r["status"] == "ok"
                        for k in r["diagnostics"]})
    rows = []
    for r in results:
        row = [r["value"], r["status"]]
        for k in diag_keys:
            v = r["diagnostics"].get(k) if r["status"] == "ok" else None
            row.append(v if isinstance(v, (int, float)) or v is None else str(v))
        rows.append(row)
    write_csv(out / "sweep.csv", [axis, "status"] + diag_keys, rows)
    manifest = {
        "axis": axis,
        "config": {s: dict(v) for s, v in cfg.items()},
        "experiment": experiment,
        "outputs": ["sweep.csv"],
        "seed": seed,
        "values": list(values),
        "version": __version__,
    }
    with open(out / "sweep_manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, indent=2, default=float)
        f.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gjjsim",
        description="Graphene-junction hybrid device experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="config file (INI) or manifest.json")
        p.add_argument("--set", dest="sets", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override a config value")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; recorded in the manifest")

    for name in EXPERIMENTS:
        add_common(sub.add_parser(name, help=f"run the {name} experiment"))
    sp = sub.add_parser("sweep", help="run an experiment once per axis value")
    sp.add_argument("experiment", choices=EXPERIMENTS)
    sp.add_argument("--axis", required=True, metavar="SECTION.KEY")
    sp.add_argument("--values", required=True,
                    help="comma-separated numeric values")
    add_common(sp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, explicit = load_config(args.config, args.sets)
        out = args.out if args.out is not None else cfg["run"]["out"]
        workers = args.workers if args.workers is not None else int(cfg["run"]["workers"])
        seed = args.seed if args.seed is not None else int(cfg["run"]["seed"])
        if args.command == "sweep":
            values = [_parse_value(v) for v in args.values.split(",")]
            if not all(isinstance(v, (int, float)) for v in values):
                raise ConfigError(f"--values must be numeric, got {args.values!r}")
            _validate(args.experiment, cfg, explicit)
            sweep(args.experiment, cfg, args.axis, values, out,
                  workers=workers, seed=seed)
        else:
            _validate(args.command, cfg, explicit)
            run(args.command, cfg, out, workers=workers, seed=seed)
    except GjjError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
