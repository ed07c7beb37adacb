"""Andreev-mode transport and circuit-membrane coupling of a suspended
graphene Josephson junction.

Everything here is classical input processing: from the device geometry and
electronic parameters we compute mode-resolved transmissions, the effective
Josephson energy and quartic coefficient of the circuit, and the quadratic
coupling rate G2 between the circuit and the fundamental flexural mode of
the membrane.

Units: lengths in metres, energies delta0/mu in eV, Ec and all derived
circuit quantities in angular frequency (rad/s).  Evanescent modes are
handled by evaluating the longitudinal wavevector in complex arithmetic, so
a single code path covers propagating and evanescent modes and is continuous
across the crossover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipe

from .errors import DegenerateJunctionError, DomainError

HBAR = 1.054571817e-34  # J s
EV = 1.602176634e-19    # J

# area density of monolayer graphene, kg/m^2
GRAPHENE_DENSITY = 7.6e-7
# effective-mass factor of the fundamental cosine mode profile
FUNDAMENTAL_MODE_MASS_FACTOR = 0.25


@dataclass(frozen=True)
class JunctionParams:
    """Physical parameters of the graphene junction.

    delta0: superconducting gap as an energy, eV (the quoted "hbar*Delta0")
    L0: junction length, m
    W: junction width, m (defaults to 10*L0 when non-positive)
    mu: chemical potential, eV
    vF: Fermi velocity, m/s
    Ec: charging energy, rad/s
    mode_cutoff: hard cap on the number of Andreev modes in sums
    tail_tol: transmission below which the mode sum is terminated
    """

    delta0: float = 0.2e-3
    L0: float = 35e-9
    W: float = 0.0
    mu: float = 0.0
    vF: float = 2.5e6
    Ec: float = 1e6
    mode_cutoff: int = 100000
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.W <= 0.0:
            object.__setattr__(self, "W", 10.0 * self.L0)
        if min(self.delta0, self.L0, self.W, self.vF, self.Ec) <= 0.0:
            raise DomainError("delta0, L0, W, vF and Ec must all be positive")

    @property
    def delta0_rad(self) -> float:
        """Gap as angular frequency, rad/s."""
        return self.delta0 * EV / HBAR

    @property
    def mu_over_hbar_vf(self) -> float:
        """mu / (hbar vF), 1/m."""
        return self.mu * EV / (HBAR * self.vF)

    def q(self, n: int) -> float:
        """Transverse wavevector of mode n, (n + 1/2) pi / W."""
        return (n + 0.5) * math.pi / self.W


@dataclass(frozen=True)
class CircuitParams:
    """Effective circuit parameters derived from the junction (all rad/s)."""

    EJ_tilde: float
    eta: float
    omega_r: float
    eta_tilde: float


@dataclass(frozen=True)
class MembraneParams:
    """Fundamental flexural mode of the membrane.

    Exactly one of {mass, zzpf} is the independent input; the other is
    derived via zzpf = sqrt(hbar / (2 M omega)).  omega in rad/s, mass in kg,
    zzpf in m.
    """

    omega: float
    mass: float = 0.0
    zzpf: float = 0.0
    Q: float = 1e6
    nbar_bath: float = 10.0

    def __post_init__(self):
        if self.omega <= 0.0:
            raise DomainError("membrane frequency must be positive")
        if (self.mass > 0.0) == (self.zzpf > 0.0):
            raise DomainError("give exactly one of mass or zzpf")
        if self.mass > 0.0:
            object.__setattr__(self, "zzpf", math.sqrt(HBAR / (2.0 * self.mass * self.omega)))
        else:
            object.__setattr__(self, "mass", HBAR / (2.0 * self.omega * self.zzpf**2))

    @classmethod
    def graphene_default(cls, junction: JunctionParams, omega: float,
                         Q: float = 1e6, nbar_bath: float = 10.0) -> "MembraneParams":
        """Membrane with the default graphene plate mass rho*L0*W/4."""
        mass = GRAPHENE_DENSITY * junction.L0 * junction.W * FUNDAMENTAL_MODE_MASS_FACTOR
        return cls(omega=omega, mass=mass, Q=Q, nbar_bath=nbar_bath)


def _k_n(params: JunctionParams, n: int) -> complex:
    """Longitudinal wavevector, imaginary for evanescent modes."""
    m = params.mu_over_hbar_vf
    return np.sqrt(complex(m * m - params.q(n) ** 2))


def transmission(params: JunctionParams, n: int) -> float:
    """Transmission probability of Andreev mode n, in (0, 1]."""
    if n < 0:
        raise DomainError("mode index must be non-negative")
    k = _k_n(params, n)
    m = params.mu_over_hbar_vf
    kl = k * params.L0
    denom = k * k * np.cos(kl) ** 2 + m * m * np.sin(kl) ** 2
    if denom == 0.0:
        # k == 0 and mu == 0: no carriers at all in this mode
        raise DomainError(f"transmission undefined for mode {n} (k=0 at mu=0)")
    tau = k * k / denom
    if not np.isfinite(tau):
        raise DomainError(f"non-finite transmission for mode {n}")
    if abs(tau.imag) > 1e-12 * max(1.0, abs(tau.real)):
        raise DomainError(f"transmission has imaginary residue {tau.imag:g} for mode {n}")
    return float(np.clip(tau.real, 0.0, 1.0))


def transmission_dL(params: JunctionParams, n: int) -> float:
    """Analytic derivative of the transmission of mode n with respect to the
    junction length, 1/m."""
    if n < 0:
        raise DomainError("mode index must be non-negative")
    k = _k_n(params, n)
    m = params.mu_over_hbar_vf
    q = params.q(n)
    kl = k * params.L0
    denom = k * k * np.cos(kl) ** 2 + m * m * np.sin(kl) ** 2
    # d(denom)/dL = (m^2 - k^2) k sin(2kL) = q^2 k sin(2kL)
    dtau = -(k**3) * q * q * np.sin(2.0 * kl) / denom**2
    if not np.isfinite(dtau):
        raise DomainError(f"non-finite transmission derivative for mode {n}")
    if abs(dtau.imag) > 1e-12 * max(1.0, abs(dtau.real)):
        raise DomainError(f"derivative has imaginary residue {dtau.imag:g} for mode {n}")
    return float(dtau.real)


def retained_modes(params: JunctionParams) -> list[int]:
    """Mode indices kept in junction sums.

    The sum stops once the transmission has stayed below tail_tol for three
    consecutive modes (evanescent transmissions decay monotonically in n) or
    at mode_cutoff.
    """
    modes = []
    below = 0
    for n in range(params.mode_cutoff):
        tau = transmission(params, n)
        if tau < params.tail_tol:
            below += 1
            if below >= 3:
                break
        else:
            below = 0
            modes.append(n)
    return modes


def transmissions(params: JunctionParams) -> np.ndarray:
    """Transmissions of all retained modes."""
    return np.array([transmission(params, n) for n in retained_modes(params)])


def andreev_energy(params: JunctionParams, n: int, phi: float) -> float:
    """Bound-state energy of mode n at phase phi, in eV."""
    tau = transmission(params, n)
    return params.delta0 * math.sqrt(1.0 - tau * math.sin(phi / 2.0) ** 2)


def josephson_potential(params: JunctionParams, phi: float) -> float:
    """Junction potential energy -delta0 * sum_n sqrt(1 - tau_n sin^2(phi/2)),
    in eV, truncated over the retained modes."""
    taus = transmissions(params)
    s2 = math.sin(phi / 2.0) ** 2
    return -params.delta0 * float(np.sum(np.sqrt(1.0 - taus * s2)))


def circuit_params(params: JunctionParams) -> CircuitParams:
    """Effective Josephson energy, quartic coefficient, circuit frequency and
    anharmonicity (all rad/s) from the phase expansion of the potential."""
    taus = transmissions(params)
    if taus.size == 0 or taus.sum() <= 0.0:
        raise DegenerateJunctionError("no conducting Andreev modes")
    d0 = params.delta0_rad
    ej = d0 * taus.sum() / 4.0
    eta = (d0 / 24.0) * float(np.sum(4.0 * taus - 3.0 * taus**2)) / 16.0
    omega_r = math.sqrt(8.0 * params.Ec * ej)
    eta_tilde = 2.0 * params.Ec * eta / ej
    return CircuitParams(EJ_tilde=ej, eta=eta, omega_r=omega_r, eta_tilde=eta_tilde)


def coupling_g2(params: JunctionParams, mem: MembraneParams) -> float:
    """Quadratic coupling rate G2 (rad/s) between circuit and flexural mode.

    G2 = (pi^2 delta0 / 32 L0) sqrt(2 Ec / EJ_tilde) sum_n dtau_n/dL * zzpf^2.
    The sign follows the sign of the derivative sum (negative at the Dirac
    point, where lengthening the junction only weakens the transmissions).
    """
    circ = circuit_params(params)
    dsum = sum(transmission_dL(params, n) for n in retained_modes(params))
    pref = math.pi**2 * params.delta0_rad / (32.0 * params.L0)
    return pref * math.sqrt(2.0 * params.Ec / circ.EJ_tilde) * dsum * mem.zzpf**2


def bent_length(z: float, L0: float) -> float:
    """Arc length of the fundamental cosine mode profile at amplitude z.

    L(z) = (2 L0 / pi) E(-z^2 pi^2 / L0^2) with E the complete elliptic
    integral of the second kind.
    """
    if abs(z) >= L0:
        raise DomainError("amplitude must satisfy |z| < L0")
    return 2.0 * L0 / math.pi * float(ellipe(-(z * math.pi / L0) ** 2))
