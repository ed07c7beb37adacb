"""Truncated bosonic Hilbert-space algebra.

Dense complex matrices on truncated Fock spaces and their tensor products.
``OperatorMatrix`` is a thin wrapper around an ndarray carrying the list of
tensor-factor dimensions; ``DensityMatrix`` adds the state invariants
(unit trace, Hermiticity, positivity).  Displacement and squeezing unitaries
are built by eigendecomposition of their Hermitian generators, which keeps
them exactly unitary on the truncated space.

Squeezing convention: S(r) = exp((r/2)(b^2 - b'^2)), so that
S'(r) b S(r) = b cosh r - b' sinh r and the quadrature (b+b')/sqrt(2) in
S(r)|0> has variance exp(-2r)/2.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, TruncationError

__all__ = [
    "OperatorMatrix", "DensityMatrix", "ladder", "number_op", "identity",
    "tensor", "ptrace", "mode_op", "displacement", "squeeze",
    "coherent", "fock_state", "thermal", "ket2dm", "expect",
]


def _as_array(op) -> np.ndarray:
    return op.data if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


class OperatorMatrix:
    """Dense complex matrix on a truncated (tensor-product) Fock space."""

    __slots__ = ("data", "factor_dims")

    def __init__(self, data, factor_dims: Sequence[int] | None = None):
        self.data = np.asarray(data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise ValueError(f"operator must be square, got shape {self.data.shape}")
        dims = tuple(factor_dims) if factor_dims is not None else (self.data.shape[0],)
        if int(np.prod(dims)) != self.data.shape[0]:
            raise ValueError(f"factor_dims {dims} inconsistent with dimension {self.data.shape[0]}")
        self.factor_dims = dims

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.data.conj().T, self.factor_dims)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.data - self.data.conj().T)) < tol)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def norm(self) -> float:
        """Largest singular value."""
        return float(np.linalg.norm(self.data, 2))

    def _wrap(self, data) -> "OperatorMatrix":
        return OperatorMatrix(data, self.factor_dims)

    def __matmul__(self, other):
        return self._wrap(self.data @ _as_array(other))

    def __rmatmul__(self, other):
        return self._wrap(_as_array(other) @ self.data)

    def __add__(self, other):
        return self._wrap(self.data + _as_array(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.data - _as_array(other))

    def __rsub__(self, other):
        return self._wrap(_as_array(other) - self.data)

    def __mul__(self, scalar):
        return self._wrap(self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.data)

    def __repr__(self):
        return f"OperatorMatrix(dim={self.dim}, factor_dims={self.factor_dims})"


class DensityMatrix(OperatorMatrix):
    """Hermitian, unit-trace, positive-semidefinite operator."""

    TRACE_TOL = 1e-9
    HERM_TOL = 1e-10
    EIG_FLOOR = -1e-9

    def __init__(self, data, factor_dims=None, check: bool = True):
        super().__init__(data, factor_dims)
        if check:
            self.validate()

    def validate(self, eig_floor: float | None = None):
        if abs(np.trace(self.data) - 1.0) > self.TRACE_TOL:
            raise DomainError(f"density matrix trace {np.trace(self.data):.12g} != 1")
        if np.max(np.abs(self.data - self.data.conj().T)) > self.HERM_TOL:
            raise DomainError("density matrix is not Hermitian")
        floor = self.EIG_FLOOR if eig_floor is None else eig_floor
        lo = float(np.linalg.eigvalsh(self.data)[0])
        if lo < floor:
            raise DomainError(f"density matrix has negative eigenvalue {lo:.3g}")
        return self

    def top_level_population(self, factor: int = 0) -> float:
        """Total population of the two highest Fock levels of one factor."""
        reduced = ptrace(self, factor) if len(self.factor_dims) > 1 else self
        pops = np.diag(reduced.data).real
        return float(pops[-2:].sum())


def ladder(dim: int, factor_dims=None) -> OperatorMatrix:
    """Annihilation operator on a dim-level truncation."""
    if dim < 2:
        raise DomainError(f"ladder operator needs dim >= 2, got {dim}")
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1), factor_dims)


def number_op(dim: int) -> OperatorMatrix:
    return OperatorMatrix(np.diag(np.arange(dim, dtype=float)))


def identity(dim: int) -> OperatorMatrix:
    return OperatorMatrix(np.eye(dim))


def tensor(ops: Iterable[OperatorMatrix]) -> OperatorMatrix:
    """Kronecker product; factor_dims concatenate."""
    ops = list(ops)
    if not ops:
        raise ValueError("tensor of no factors")
    data = _as_array(ops[0])
    dims: list[int] = list(ops[0].factor_dims if isinstance(ops[0], OperatorMatrix) else [data.shape[0]])
    for op in ops[1:]:
        arr = _as_array(op)
        data = np.kron(data, arr)
        dims.extend(op.factor_dims if isinstance(op, OperatorMatrix) else [arr.shape[0]])
    return OperatorMatrix(data, dims)


def mode_op(op: OperatorMatrix | np.ndarray, mode: int, factor_dims: Sequence[int]) -> OperatorMatrix:
    """Embed a single-mode operator at position ``mode`` of a tensor space."""
    factors = [identity(d) for d in factor_dims]
    arr = _as_array(op)
    if arr.shape[0] != factor_dims[mode]:
        raise ValueError(f"operator dim {arr.shape[0]} != factor dim {factor_dims[mode]}")
    factors[mode] = OperatorMatrix(arr)
    return tensor(factors)


def ptrace(rho: OperatorMatrix, keep: int) -> DensityMatrix:
    """Partial trace onto a single tensor factor."""
    dims = rho.factor_dims
    if not 0 <= keep < len(dims):
        raise ValueError(f"keep index {keep} out of range for {len(dims)} factors")
    t = rho.data.reshape(*dims, *dims)
    n = len(dims)
    for axis in reversed(range(n)):
        if axis == keep:
            continue
        t = np.trace(t, axis1=axis, axis2=axis + (t.ndim // 2))
    return DensityMatrix(t, (dims[keep],), check=False)


def _expm_antihermitian(gen: np.ndarray) -> np.ndarray:
    """exp(gen) for anti-Hermitian gen, via eigendecomposition of i*gen."""
    herm = 1j * gen
    vals, vecs = np.linalg.eigh(herm)
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


def displacement(alpha: complex, dim: int) -> OperatorMatrix:
    """D(alpha) = exp(alpha a' - alpha* a)."""
    a = ladder(dim).data
    return OperatorMatrix(_expm_antihermitian(alpha * a.conj().T - np.conj(alpha) * a))


def squeeze(r: float, dim: int) -> OperatorMatrix:
    """S(r) = exp((r/2)(a^2 - a'^2))."""
    a = ladder(dim).data
    a2 = a @ a
    return OperatorMatrix(_expm_antihermitian(0.5 * r * (a2 - a2.conj().T)))


def _check_tail(amps_or_pops: np.ndarray, tol: float, what: str):
    tail = float(np.sum(amps_or_pops[-2:]))
    if tail > tol:
        raise TruncationError(
            f"{what}: top-level population {tail:.3g} exceeds tolerance {tol:g}; "
            "increase the truncation dimension", leakage=tail)


def coherent(beta: complex, dim: int, tail_tol: float = 1e-8) -> np.ndarray:
    """Normalized coherent-state vector |beta> on a dim-level truncation."""
    n = np.arange(dim)
    log_beta = np.log(complex(beta)) if beta != 0 else -np.inf
    with np.errstate(invalid="ignore"):
        amps = np.exp(-0.5 * abs(beta) ** 2 + n * log_beta - 0.5 * gammaln(n + 1))
    amps = np.where(np.isfinite(amps), amps, 0.0)
    if beta == 0:
        amps = np.zeros(dim, complex)
        amps[0] = 1.0
    _check_tail(np.abs(amps) ** 2, tail_tol, f"coherent({beta})")
    return amps / np.linalg.norm(amps)


def fock_state(n: int, dim: int) -> np.ndarray:
    """Fock basis vector |n>."""
    if not 0 <= n < dim:
        raise DomainError(f"Fock index {n} outside truncation {dim}")
    v = np.zeros(dim, complex)
    v[n] = 1.0
    return v


def thermal(nbar: float, dim: int, tail_tol: float = 1e-8) -> DensityMatrix:
    """Thermal state with mean occupation nbar (geometric weights)."""
    if nbar < 0:
        raise DomainError("nbar must be non-negative")
    if nbar == 0:
        pops = np.zeros(dim)
        pops[0] = 1.0
    else:
        pops = np.exp(np.arange(dim) * math.log(nbar / (1.0 + nbar))) / (1.0 + nbar)
    _check_tail(pops, tail_tol, f"thermal({nbar})")
    return DensityMatrix(np.diag(pops / pops.sum()).astype(complex), check=False)


def ket2dm(psi: np.ndarray, factor_dims=None) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()), factor_dims, check=False)


def expect(op, rho) -> complex:
    """<op> in state rho (density matrix or ket)."""
    o = _as_array(op)
    r = _as_array(rho)
    if r.ndim == 1:
        return complex(np.vdot(r, o @ r))
    return complex(np.trace(o @ r))
