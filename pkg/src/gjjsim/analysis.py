"""Observables and metrology: occupations, Wigner functions, coherence,
quantum Fisher information and criticality scans.

The dynamical and steady-state QFI pipelines re-derive the full generator
(Hamiltonian, eigenvectors, gaps and damping rate gamma = omega/Q) at
omega +/- h and finite-difference the state, so the estimated parameter
enters through every omega-dependence of the model.  Evolution uses the
closed-form secular solver, which stays exact out to times of order 1/gamma.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import SecularGenerator, bose_occupation
from .errors import DomainError, FitError, SupercriticalError, TruncationError
from .fock import (DensityMatrix, OperatorMatrix, _as_array, coherent, ladder,
                   number_op, ptrace, squeeze)
from .models import build_h_eff, effective_gap, squeezing_parameter

__all__ = [
    "occupation", "matrix_element", "WignerGrid", "wigner", "wigner_at",
    "l1_coherence", "qfi_from_state", "QfiFit", "fit_qfi",
    "qfi_steady_analytic", "EffectiveModel", "qfi_dynamic", "qfi_steady_numeric",
    "kerr_cat_state", "cat_fidelity", "criticality_scan", "power_law_exponent",
]


def occupation(rho, mode: int = 0) -> float:
    """Mean excitation number of one tensor factor."""
    if isinstance(rho, OperatorMatrix) and len(rho.factor_dims) > 1:
        rho = ptrace(rho, mode)
    arr = _as_array(rho)
    return float(np.sum(np.diag(arr).real * np.arange(arr.shape[0])))


def matrix_element(rho, i: int, j: int) -> complex:
    return complex(_as_array(rho)[i, j])


# ---------------------------------------------------------------------------
# Wigner function


@dataclass
class WignerGrid:
    """W(x, p) on a rectangular grid with x = sqrt(2) Re(alpha) convention."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # shape (len(p_axis), len(x_axis))

    def total(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(self.values.sum() * dx * dp)

    def marginal_x(self) -> np.ndarray:
        dp = self.p_axis[1] - self.p_axis[0]
        return self.values.sum(axis=0) * dp

    def marginal_p(self) -> np.ndarray:
        dx = self.x_axis[1] - self.x_axis[0]
        return self.values.sum(axis=1) * dx

    def save_csv(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("x,p,w\n")
            for ip, p in enumerate(self.p_axis):
                for ix, x in enumerate(self.x_axis):
                    f.write(f"{x:.17g},{p:.17g},{self.values[ip, ix]:.17g}\n")


def _laguerre_clenshaw(n_offdiag: int, x: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Clenshaw evaluation of sum_n c_n (-1)^n sqrt(L!n!/(L+n)!) Laguerre(n, L, x)."""
    L = n_offdiag
    if len(coeffs) == 1:
        y0 = coeffs[0] * np.ones_like(x)
        y1 = np.zeros_like(x)
    elif len(coeffs) == 2:
        y0 = coeffs[0] * np.ones_like(x)
        y1 = coeffs[1] * np.ones_like(x)
    else:
        k = len(coeffs)
        y0 = coeffs[-2] * np.ones_like(x)
        y1 = coeffs[-1] * np.ones_like(x)
        for i in range(3, len(coeffs) + 1):
            k -= 1
            y0, y1 = (coeffs[-i] - y1 * math.sqrt((k - 1.0) * (L + k - 1.0) / ((L + k) * k)),
                      y0 - y1 * (L + 2.0 * k - 1.0 - x) / math.sqrt((L + k) * k))
    return y0 - y1 * (L + 1.0 - x) / math.sqrt(L + 1.0)


def wigner_at(rho, x, p) -> np.ndarray:
    """W evaluated at arbitrary phase-space points (displaced-parity value,
    computed with the Clenshaw-summed Laguerre series)."""
    arr = _as_array(rho)
    if arr.ndim == 1:
        arr = np.outer(arr, arr.conj())
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    dim = arr.shape[0]
    A2 = math.sqrt(2.0) * (x + 1j * p)  # 2*alpha
    B = np.abs(A2) ** 2
    w = 2.0 * arr[0, -1] * np.ones_like(A2)
    rho2 = arr * (2.0 - np.eye(dim))
    for L in range(dim - 2, -1, -1):
        diag = np.diag(rho2, L)
        w = _laguerre_clenshaw(L, B, diag) + w * A2 / math.sqrt(L + 1.0)
    return (w.real * np.exp(-0.5 * B)) / math.pi


def wigner(rho, x_grid, p_grid) -> WignerGrid:
    """Wigner function on a grid; normalized so the integral over dx dp is 1
    for truncation-converged states and the vacuum peaks at 1/pi."""
    x_grid = np.asarray(x_grid, dtype=float)
    p_grid = np.asarray(p_grid, dtype=float)
    X, P = np.meshgrid(x_grid, p_grid)
    if isinstance(rho, DensityMatrix):
        tail = rho.top_level_population()
        if tail > 1e-4:
            raise TruncationError(
                f"state not truncation-converged (top-level population {tail:.3g})",
                leakage=tail)
    return WignerGrid(x_grid, p_grid, wigner_at(rho, X, P))


def l1_coherence(rho) -> float:
    """Half the sum of absolute off-diagonal elements (Fock basis)."""
    arr = _as_array(rho)
    return 0.5 * float(np.abs(arr).sum() - np.abs(np.diag(arr)).sum())


# ---------------------------------------------------------------------------
# quantum Fisher information


def qfi_from_state(rho, drho, cutoff: float = 1e-12) -> float:
    """QFI via the spectral sum 2 sum |<j|drho|k>|^2 / (lam_j + lam_k) over
    eigenpairs with lam_j + lam_k above the cutoff."""
    r = _as_array(rho)
    d = _as_array(drho)
    r = 0.5 * (r + r.conj().T)
    d = 0.5 * (d + d.conj().T)
    vals, vecs = np.linalg.eigh(r)
    M = vecs.conj().T @ d @ vecs
    s = vals[:, None] + vals[None, :]
    mask = s > cutoff
    return float(np.sum(2.0 * np.abs(M[mask]) ** 2 / s[mask]))


@dataclass(frozen=True)
class QfiFit:
    """Parameters of F(t) = C t^zeta exp(-beta t) fitted in the log domain."""

    C: float
    zeta: float
    beta_decay: float
    t_star: float
    F_max: float
    residual: float
    window: tuple[float, float]
    n_points: int


def fit_qfi(times, values) -> QfiFit:
    """Linear least squares of ln F = ln C + zeta ln t - beta t over the
    window of points with F > 1e-3 max(F)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    good = np.isfinite(values) & (values > 0) & (times > 0)
    if good.sum() < 8:
        raise FitError(f"need at least 8 positive samples, got {int(good.sum())}")
    t, f = times[good], values[good]
    window = f > 1e-3 * f.max()
    t, f = t[window], f[window]
    if len(t) < 8:
        raise FitError(f"fit window too small ({len(t)} points)")
    design = np.column_stack([np.ones_like(t), np.log(t), -t])
    coef, *_ = np.linalg.lstsq(design, np.log(f), rcond=None)
    ln_c, zeta, beta = coef
    resid = float(np.sqrt(np.mean((design @ coef - np.log(f)) ** 2)))
    if beta > 0:
        t_star = zeta / beta
        f_max = math.exp(ln_c) * t_star**zeta * math.exp(-zeta)
    else:
        t_star = math.inf
        f_max = math.inf
    return QfiFit(C=math.exp(ln_c), zeta=float(zeta), beta_decay=float(beta),
                  t_star=t_star, F_max=f_max, residual=resid,
                  window=(float(t[0]), float(t[-1])), n_points=len(t))


def qfi_steady_analytic(omega: float, Lambda: float, T: float) -> float:
    """Closed-form steady-state QFI of the squeezed-thermal state family:

        F = (d_omega Delta)^2 (d_Delta n)^2 / (n(n+1))
            + (4 Lambda^2 / Delta^4) * 2(2n+1)^2 / (2n^2 + 2n + 1)

    with n the Bose occupation at the effective gap; the T -> 0 limit is
    8 Lambda^2 / Delta^4.
    """
    if not (-omega / 4.0 < Lambda <= 0.0):
        raise DomainError("Lambda must lie in (-omega/4, 0]")
    if T < 0:
        raise DomainError("temperature must be non-negative")
    Delta = effective_gap(omega, Lambda)
    dDelta = (omega + 2.0 * Lambda) / Delta
    nbar = bose_occupation(Delta, T)
    if nbar > 0:
        classical = dDelta**2 * nbar * (nbar + 1.0) / (T * T)
    else:
        classical = 0.0
    squeezing = (4.0 * Lambda * Lambda / Delta**4
                 * 2.0 * (2.0 * nbar + 1.0) ** 2 / (2.0 * nbar * nbar + 2.0 * nbar + 1.0))
    return classical + squeezing


# ---------------------------------------------------------------------------
# effective-model metrology pipelines


@dataclass(frozen=True)
class EffectiveModel:
    """Single-mode effective model for the metrology pipelines.

    gamma = omega/Q is re-derived at every probe frequency, as are the
    Hamiltonian, its eigenbasis and the thermal occupations of the gaps.
    """

    Lambda: float
    xi: float = 0.0
    omega: float = 1.0
    Q: float = 1e6
    temperature: float = 0.0
    dim: int = 60

    def hamiltonian(self, omega: float | None = None) -> OperatorMatrix:
        w = self.omega if omega is None else omega
        return build_h_eff(self.dim, w, self.Lambda, self.xi)

    def generator(self, omega: float | None = None) -> SecularGenerator:
        w = self.omega if omega is None else omega
        gamma = w / self.Q if self.Q > 0 else 0.0
        return SecularGenerator(self.hamiltonian(w), ladder(self.dim),
                                gamma, self.temperature)

    def vacuum(self) -> np.ndarray:
        psi = np.zeros(self.dim, complex)
        psi[0] = 1.0
        return psi

    def auto_t_grid(self, n_points: int = 80, span: float = 15.0) -> np.ndarray:
        if self.Q <= 0:
            raise DomainError("closed system has no damping time scale; pass t_grid")
        r = squeezing_parameter(self.omega, self.Lambda)
        Gamma = (self.omega / self.Q) * math.cosh(r) ** 2
        t_max = span / Gamma
        return np.geomspace(t_max * 1e-4, t_max, n_points)


# finite-difference phase budget: |d(gap)/domega| * h * t is kept below this
_FD_PHASE_BUDGET = 1e-3


def _fd_states(model: EffectiveModel, times: np.ndarray, h0: float,
               initial: np.ndarray):
    """States and their omega-derivative on a time grid, with the step size
    tightened on late-time blocks so accumulated-phase curvature stays inside
    the finite-difference budget."""
    rho_c: list[np.ndarray] = []
    drho: list[np.ndarray] = []
    start = 0
    while start < len(times):
        t_hi = times[start] * 10.0 if times[start] > 0 else times[-1]
        stop = start
        while stop < len(times) and times[stop] <= t_hi:
            stop += 1
        block = times[start:stop]
        h = min(h0, _FD_PHASE_BUDGET / max(block[-1], 1.0))
        gens = [model.generator(w) for w in
                (model.omega - h, model.omega, model.omega + h)]
        sm, s0, sp = (g.states_at(initial, block) for g in gens)
        for i in range(len(block)):
            rho_c.append(s0[i].data)
            drho.append((sp[i].data - sm[i].data) / (2.0 * h))
        start = stop
    return rho_c, drho


def qfi_dynamic(model: EffectiveModel, t_grid=None, h: float = 1e-5,
                initial: np.ndarray | None = None,
                richardson_check: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Dynamical QFI F(t) for frequency estimation.

    Starts from the bare vacuum (or a caller-supplied omega-independent
    state), evolves under the full omega-dependent generator at omega +/- h,
    and applies the spectral QFI formula pointwise.  With
    ``richardson_check`` the h/2 curve is also computed and a relative
    discrepancy above 1% on the peak raises DomainError.
    """
    times = model.auto_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    psi0 = model.vacuum() if initial is None else np.asarray(initial, dtype=complex)
    rho_c, drho = _fd_states(model, times, h, psi0)
    F = np.array([qfi_from_state(rho_c[i], drho[i]) for i in range(len(times))])
    if richardson_check:
        rho2, drho2 = _fd_states(model, times, h / 2.0, psi0)
        F2 = np.array([qfi_from_state(rho2[i], drho2[i]) for i in range(len(times))])
        k = int(np.argmax(F))
        if F[k] > 0 and abs(F2[k] - F[k]) > 0.01 * F[k]:
            raise DomainError(
                f"finite-difference step not converged at the peak "
                f"({F[k]:.6g} vs {F2[k]:.6g} at h/2)")
    return times, F


def qfi_steady_numeric(model: EffectiveModel, h: float = 1e-4,
                       richardson_check: bool = False) -> float:
    """Steady-state QFI from finite differences of the stationary state of
    the eigenbasis generator at omega +/- h.

    The stationary family is phase-free, so the step can be taken larger
    than in the dynamical pipeline; below ~1e-5 the eigensolver noise of the
    state construction starts to feed the small-eigenvalue terms of the QFI
    sum.
    """

    def fd(step: float) -> float:
        gm = model.generator(model.omega - step).steady_state().data
        gp = model.generator(model.omega + step).steady_state().data
        rho = model.generator().steady_state().data
        return qfi_from_state(rho, (gp - gm) / (2.0 * step))

    F = fd(h)
    if richardson_check:
        F2 = fd(h / 2.0)
        if F > 0 and abs(F2 - F) > 0.01 * F:
            raise DomainError(
                f"steady-state finite difference not converged ({F:.6g} vs "
                f"{F2:.6g} at h/2)")
    return F


# ---------------------------------------------------------------------------
# cat states


def kerr_cat_state(beta: complex, m: int, dim: int,
                   rotation: float = 0.0) -> np.ndarray:
    """Closed-form Kerr evolution of |beta> at t = tau0/m: Fock amplitudes
    exp(i pi n(n-1) / (2m)) times the coherent amplitudes, optionally
    counter-rotated by a phase-space angle ``rotation`` (amplitudes pick up
    exp(-i n rotation))."""
    if m < 2:
        raise DomainError("need at least two components")
    amps = coherent(beta, dim, tail_tol=1e-6)
    n = np.arange(dim)
    amps = amps * np.exp(1j * (np.pi * n * (n - 1) / (2.0 * m) - rotation * n))
    return amps / np.linalg.norm(amps)


def cat_fidelity(rho, beta_amp: complex, m: int, frame_r: float = 0.0,
                 rotation: float = 0.0) -> float:
    """Fidelity of ``rho`` against the closed-form Kerr cat at t = tau0/m.

    frame_r != 0 maps the state into the squeezed frame first
    (rho -> S(frame_r) rho S(frame_r)'), for lab-frame inputs; ``rotation``
    compensates a harmonic precession accumulated during the evolution.
    """
    arr = _as_array(rho)
    if arr.ndim == 1:
        arr = np.outer(arr, arr.conj())
    dim = arr.shape[0]
    if abs(beta_amp) ** 2 + 4.0 * abs(beta_amp) > 0.8 * dim:
        raise TruncationError(
            f"truncation {dim} too small for |beta|={abs(beta_amp):g}")
    if frame_r != 0.0:
        S = squeeze(frame_r, dim).data
        arr = S @ arr @ S.conj().T
    target = kerr_cat_state(beta_amp, m, dim, rotation=rotation)
    return float(np.real(np.vdot(target, arr @ target)))


# ---------------------------------------------------------------------------
# criticality scan


def _scan_point(args):
    model, t_grid, h = args
    times, F = qfi_dynamic(model, t_grid=t_grid, h=h)
    fit = fit_qfi(times, F)
    f_max = fit.F_max if math.isfinite(fit.F_max) else float(F.max())
    ss = model.generator().steady_state()
    return {
        "Lambda": model.Lambda,
        "F_max": f_max,
        "t_star": fit.t_star,
        "zeta": fit.zeta,
        "beta": fit.beta_decay,
        "F_ss": qfi_steady_numeric(model),
        "C_l1_ss": l1_coherence(ss),
    }


def criticality_scan(Lambdas, xi: float = 0.0, T: float = 0.0,
                     omega: float = 1.0, Q: float = 1e6, dim: int = 60,
                     h: float = 1e-5, workers: int = 1) -> list[dict]:
    """Dynamical-QFI fit, steady-state QFI and steady-state coherence for a
    set of couplings in the subcritical window."""
    jobs = []
    for Lam in Lambdas:
        if not (-omega / 4.0 < Lam <= 0.0):
            raise DomainError(f"Lambda={Lam:g} outside (-omega/4, 0]")
        model = EffectiveModel(Lambda=float(Lam), xi=xi, omega=omega, Q=Q,
                               temperature=T, dim=dim)
        jobs.append((model, None, h))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_point, jobs))
    return [_scan_point(j) for j in jobs]


def power_law_exponent(Lambdas, values, omega: float = 1.0) -> float:
    """Slope of log(values) against log of the distance to criticality
    |Lambda_c - Lambda| = Lambda + omega/4."""
    Lambdas = np.asarray(Lambdas, dtype=float)
    values = np.asarray(values, dtype=float)
    x = np.log(Lambdas + omega / 4.0)
    return float(np.polyfit(x, np.log(values), 1)[0])
