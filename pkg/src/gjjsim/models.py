"""Hamiltonians of the hybrid device and the drive/displaced-frame parameter map.

All frequencies here are in units of the mechanical frequency unless a
different scale is passed explicitly; builders return Hermitian
OperatorMatrix objects on truncated Fock (tensor) spaces.

Model chain: the lab hybrid Hamiltonian (circuit + membrane + quadratic
coupling) is driven coherently; in the rotating frame of the drive and after
displacing the circuit, the weak-drive form carries an effective circuit
frequency omega_a, a mechanical quadrature term Lambda (b+b')^2, and the
parametric interaction -2 alpha G2 (a+a')(b+b')^2.  A Schrieffer-Wolff step
on that interaction leaves the mechanical mode alone with an induced quartic
attraction -xi (b+b')^4, which the squeezing transformation turns into a
gapped oscillator (gap Delta) with an amplified quartic, and a rotating-wave
reduction of the quartic gives the Kerr model used for cat-state timing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SupercriticalError
from .fock import OperatorMatrix, identity, ladder, mode_op, squeeze, tensor, _as_array
from .junction import CircuitParams

__all__ = [
    "DriveParams", "EffectiveParams", "effective_params", "resonance_detuning",
    "squeezing_parameter", "effective_gap", "build_h_hybrid", "build_h_rotating",
    "build_h_driven", "build_h_eff", "build_h_squeezed", "build_h_kerr",
    "sw_residual", "displaced_frame_residual", "to_squeezed_frame", "cat_times",
]


@dataclass(frozen=True)
class DriveParams:
    """Coherent drive on the circuit: amplitude A and detuning delta (both
    angular frequencies in the working units)."""

    A: float
    delta: float

    @classmethod
    def from_drive_frequency(cls, A: float, omega_D: float,
                             circuit: CircuitParams) -> "DriveParams":
        """delta = omega_r - omega_D - 6 eta_tilde."""
        return cls(A=A, delta=circuit.omega_r - omega_D - 6.0 * circuit.eta_tilde)


def squeezing_parameter(omega: float, Lambda: float) -> float:
    """r with tanh(2r) = -2 Lambda / (omega + 2 Lambda); positive for
    attractive (negative) Lambda."""
    if Lambda <= -omega / 4.0:
        raise SupercriticalError(
            f"Lambda={Lambda:g} at or beyond the critical point {-omega / 4.0:g}")
    return 0.5 * math.atanh(-2.0 * Lambda / (omega + 2.0 * Lambda))


def effective_gap(omega: float, Lambda: float) -> float:
    """Delta = sqrt(omega^2 + 4 omega Lambda), real only above the critical
    coupling."""
    arg = omega * omega + 4.0 * omega * Lambda
    if arg <= 0.0:
        raise SupercriticalError(
            f"Lambda={Lambda:g} at or beyond the critical point {-omega / 4.0:g}")
    return math.sqrt(arg)


@dataclass(frozen=True)
class EffectiveParams:
    """Derived frame parameters of the driven model.

    Delta, r and kerr are None in the supercritical regime Lambda <= -omega/4
    where the effective gap closes.
    """

    omega: float
    alpha: float
    omega_a: float
    Lambda: float
    omega_b: float
    xi: float
    lambda_sw: float
    r: float | None
    Delta: float | None
    kerr: float | None

    @property
    def Lambda_c(self) -> float:
        return -self.omega / 4.0

    @property
    def supercritical(self) -> bool:
        return self.Delta is None

    @classmethod
    def from_lambda_xi(cls, omega: float, Lambda: float, xi: float,
                       omega_a: float = 0.0) -> "EffectiveParams":
        """Direct effective-model inputs, bypassing the drive layer."""
        return cls._finish(omega, alpha=0.0, omega_a=omega_a, Lambda=Lambda,
                           xi=xi, lambda_sw=0.0)

    @classmethod
    def _finish(cls, omega, alpha, omega_a, Lambda, xi, lambda_sw):
        supercritical = Lambda <= -omega / 4.0
        if supercritical:
            r = Delta = kerr = None
        else:
            r = squeezing_parameter(omega, Lambda)
            Delta = effective_gap(omega, Lambda)
            kerr = 6.0 * xi * math.exp(4.0 * r)
        return cls(omega=omega, alpha=alpha, omega_a=omega_a, Lambda=Lambda,
                   omega_b=omega + 2.0 * Lambda, xi=xi, lambda_sw=lambda_sw,
                   r=r, Delta=Delta, kerr=kerr)


def effective_params(omega: float, G2: float, circuit: CircuitParams | float,
                     drive: DriveParams) -> EffectiveParams:
    """Map drive and coupling to the displaced-frame parameters:
    alpha = A/delta, omega_a = delta - 24 alpha^2 eta_tilde,
    Lambda = G2 (1 + 2 alpha), xi = 4 alpha^2 G2^2 / omega_a,
    lambda_sw = 2 alpha G2."""
    eta_tilde = circuit.eta_tilde if isinstance(circuit, CircuitParams) else float(circuit)
    if drive.delta == 0.0:
        raise DomainError("drive detuning must be non-zero (alpha = A/delta)")
    alpha = drive.A / drive.delta
    omega_a = drive.delta - 24.0 * alpha * alpha * eta_tilde
    if omega_a == 0.0:
        raise DomainError("effective circuit frequency vanished; xi undefined")
    Lambda = G2 * (1.0 + 2.0 * alpha)
    xi = 4.0 * alpha * alpha * G2 * G2 / omega_a
    return EffectiveParams._finish(omega, alpha, omega_a, Lambda, xi,
                                   lambda_sw=2.0 * alpha * G2)


def resonance_detuning(omega: float, G2: float, eta_tilde: float, A: float,
                       delta_range: tuple[float, float] = (1e-3, 1e3)) -> float:
    """Solve omega_a = 2 omega_b for the drive detuning delta.

    The implicit chain alpha = A/delta, Lambda = G2(1+2 alpha),
    omega_b = omega + 2 Lambda, omega_a = delta - 24 alpha^2 eta_tilde is
    closed by scalar root bracketing; when several roots exist the weak-drive
    branch (smallest |alpha|, i.e. largest delta) is returned.
    """
    from scipy.optimize import brentq

    def f(delta):
        alpha = A / delta
        return (delta - 24.0 * alpha * alpha * eta_tilde
                - 2.0 * (omega + 2.0 * G2 * (1.0 + 2.0 * alpha)))

    grid = np.geomspace(delta_range[0] * omega, delta_range[1] * omega, 4000)
    vals = np.array([f(d) for d in grid])
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
    if not roots:
        raise DomainError("no resonant detuning in the search range")
    return max(roots)


def _two_mode_ops(dims):
    na, nb = dims
    a = mode_op(ladder(na), 0, dims)
    b = mode_op(ladder(nb), 1, dims)
    return a, b


def build_h_hybrid(dims, circuit: CircuitParams | tuple[float, float],
                   omega: float, G2: float) -> OperatorMatrix:
    """Lab-frame hybrid Hamiltonian
    omega_r a'a - eta_tilde (a+a')^4 + omega b'b + G2 (a+a')^2 (b+b')^2."""
    if isinstance(circuit, CircuitParams):
        omega_r, eta_tilde = circuit.omega_r, circuit.eta_tilde
    else:
        omega_r, eta_tilde = circuit
    a, b = _two_mode_ops(dims)
    xa = a + a.dag()
    xb = b + b.dag()
    xa2 = xa @ xa
    xb2 = xb @ xb
    return (omega_r * (a.dag() @ a) - eta_tilde * (xa2 @ xa2)
            + omega * (b.dag() @ b) + G2 * (xa2 @ xb2))


def build_h_rotating(dims, drive: DriveParams, eta_tilde: float, omega: float,
                     G2: float) -> OperatorMatrix:
    """Drive rotating-frame Hamiltonian before displacement:
    delta a'a - 6 eta_tilde (a'a)^2 + omega b'b + 2 G2 a'a (b+b')^2
    + G2 (b+b')^2 + A (a+a')."""
    a, b = _two_mode_ops(dims)
    na = a.dag() @ a
    xb = b + b.dag()
    xb2 = xb @ xb
    return (drive.delta * na - 6.0 * eta_tilde * (na @ na)
            + omega * (b.dag() @ b) + 2.0 * G2 * (na @ xb2) + G2 * xb2
            + drive.A * (a + a.dag()))


def build_h_driven(dims, eff: EffectiveParams, circuit: CircuitParams | float,
                   omega: float, G2: float) -> OperatorMatrix:
    """Displaced weak-drive Hamiltonian
    omega_a a'a - 6 eta_tilde (a'a)^2 + omega b'b + Lambda (b+b')^2
    + 2 G2 a'a (b+b')^2 - 2 alpha G2 (a+a') (b+b')^2."""
    eta_tilde = circuit.eta_tilde if isinstance(circuit, CircuitParams) else float(circuit)
    a, b = _two_mode_ops(dims)
    na = a.dag() @ a
    xb = b + b.dag()
    xb2 = xb @ xb
    return (eff.omega_a * na - 6.0 * eta_tilde * (na @ na)
            + omega * (b.dag() @ b) + eff.Lambda * xb2
            + 2.0 * G2 * (na @ xb2)
            - 2.0 * eff.alpha * G2 * ((a + a.dag()) @ xb2))


def build_h_eff(dim: int, omega: float, Lambda: float, xi: float) -> OperatorMatrix:
    """Effective mechanical Hamiltonian
    omega b'b + Lambda (b+b')^2 - xi (b+b')^4."""
    if dim < 4:
        raise DomainError("effective Hamiltonian needs dim >= 4")
    b = ladder(dim)
    xb = b + b.dag()
    xb2 = xb @ xb
    return omega * (b.dag() @ b) + Lambda * xb2 - xi * (xb2 @ xb2)


def build_h_squeezed(dim: int, eff: EffectiveParams) -> OperatorMatrix:
    """Squeezed-frame Hamiltonian Delta b'b - xi e^{4r} (b+b')^4."""
    if eff.supercritical:
        raise SupercriticalError("no squeezed frame at or beyond the critical point")
    b = ladder(dim)
    xb = b + b.dag()
    xb2 = xb @ xb
    return eff.Delta * (b.dag() @ b) - eff.xi * math.exp(4.0 * eff.r) * (xb2 @ xb2)


def build_h_kerr(dim: int, eff: EffectiveParams) -> OperatorMatrix:
    """Kerr reduction Delta b'b - kerr b'^2 b^2 of the squeezed-frame model."""
    if eff.supercritical:
        raise SupercriticalError("no Kerr model at or beyond the critical point")
    b = ladder(dim)
    bd = b.dag()
    return eff.Delta * (bd @ b) - eff.kerr * (bd @ bd @ b @ b)


def cat_times(kerr: float, m: int) -> tuple[float, float]:
    """Cat-state times of the Kerr model: tau0 = pi/(2 kerr), tau1 = tau0/m."""
    if kerr <= 0:
        raise DomainError("Kerr strength must be positive")
    if m < 2:
        raise DomainError("need at least two components")
    tau0 = math.pi / (2.0 * kerr)
    return tau0, tau0 / m


def to_squeezed_frame(op: OperatorMatrix, r: float) -> OperatorMatrix:
    """Conjugate a single-mode operator into the squeezed frame,
    S(r) op S(r)'; with r from squeezing_parameter this diagonalizes the
    quadratic effective Hamiltonian."""
    S = squeeze(r, op.dim)
    return S @ op @ S.dag()


def _ground_block(op: OperatorMatrix, dims) -> np.ndarray:
    """Restriction of a two-mode operator to the circuit ground level."""
    na, nb = dims
    arr = _as_array(op).reshape(na, nb, na, nb)
    return arr[0, :, 0, :]


def sw_residual(dims, eff: EffectiveParams, circuit: CircuitParams | float,
                omega: float, G2: float) -> float:
    """Norm of the Schrieffer-Wolff defect on the circuit-ground block.

    Conjugates the displaced Hamiltonian with exp(S), S = lambda_sw
    (a'-a)(b+b')^2 / omega_a, subtracts the block-diagonal target
    (the alpha-free part plus the induced -xi (b+b')^4), and returns the
    operator norm of the circuit-ground block of the difference, in units of
    omega.  Scales as lambda_sw^2 at fixed omega_a and falls off with
    omega_a.
    """
    if eff.omega_a / omega <= 10.0:
        raise DomainError("Schrieffer-Wolff check requires omega_a/omega > 10")
    eta_tilde = circuit.eta_tilde if isinstance(circuit, CircuitParams) else float(circuit)
    a, b = _two_mode_ops(dims)
    xb = b + b.dag()
    xb2 = xb @ xb
    xb4 = xb2 @ xb2
    h_driven = build_h_driven(dims, eff, eta_tilde, omega, G2)
    h0 = h_driven + eff.lambda_sw * ((a + a.dag()) @ xb2)
    target = h0 - eff.xi * xb4

    gen = (eff.lambda_sw / eff.omega_a) * ((a.dag() - a) @ xb2).data
    herm = 1j * gen
    vals, vecs = np.linalg.eigh(herm)
    U = (vecs * np.exp(-1j * vals)) @ vecs.conj().T
    transformed = U.conj().T @ h_driven.data @ U
    diff = _ground_block(OperatorMatrix(transformed, dims), dims) - _ground_block(target, dims)
    return float(np.linalg.norm(diff, 2)) / omega


def displaced_frame_residual(dims, drive: DriveParams, eta_tilde: float,
                             omega: float, G2: float) -> float:
    """Difference between the exactly displaced rotating-frame Hamiltonian and
    the weak-drive form, as an operator norm over omega (constant offset
    removed).

    Quantifies what the weak-drive step discards: the residual linear circuit
    term and the alpha^2 corrections to the quadrature coefficients.
    """
    from .fock import displacement

    eff = effective_params(omega, G2, eta_tilde, drive)
    h_rot = build_h_rotating(dims, drive, eta_tilde, omega, G2)
    h_drv = build_h_driven(dims, eff, eta_tilde, omega, G2)
    # displacement with a -> a - alpha removes the drive-induced mean field
    D = mode_op(displacement(-eff.alpha, dims[0]), 0, dims)
    disp = D.dag() @ h_rot @ D
    diff = disp.data - h_drv.data
    c = np.trace(diff) / diff.shape[0]
    return float(np.linalg.norm(diff - c * np.eye(diff.shape[0]), 2)) / omega
