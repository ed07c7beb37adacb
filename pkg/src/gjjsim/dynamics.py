"""Lindblad time evolution and steady states.

Three dissipator families:

* local_dissipators -- bare circuit decay and mechanical damping on the
  two-mode tensor space;
* squeezed_frame_dissipators -- the Gaussian generator valid in the squeezed
  frame of the quadratic effective model, with enhanced rate
  Gamma = gamma cosh^2(r);
* eigenbasis_dissipators -- jump operators |j><k| between exact eigenstates
  of an effective Hamiltonian with rates gamma |<j|b|k>|^2, required once the
  mechanical nonlinearity makes local dissipators invalid.

``evolve`` integrates the master equation with an embedded adaptive
Runge-Kutta scheme on the vectorized density matrix, symmetrizing after each
accepted step.  ``steady_state`` solves L[rho]=0 directly: a dense
null-space solve with a trace-constraint row up to ``DENSE_BUDGET`` Hilbert
dimensions, and above that a matrix-free Krylov solve in the Hamiltonian
eigenbasis preconditioned by the exactly invertible secular generator.

``SecularGenerator`` evolves the eigenbasis master equation in closed form
(populations through the classical rate matrix, coherences analytically),
which is what makes millisecond-scale damping rates tractable over 1e7
dynamical periods.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy.integrate import RK45

from .errors import (
    DegenerateSpectrumError,
    DegenerateSteadyStateError,
    DomainError,
    StiffnessError,
    TruncationError,
    UnstableRegimeError,
)
from .fock import DensityMatrix, OperatorMatrix, ladder, mode_op, _as_array

__all__ = [
    "LindbladTerm", "Trajectory", "bose_occupation", "local_dissipators",
    "squeezed_frame_dissipators", "eigenbasis_dissipators", "liouvillian_matrix",
    "evolve", "steady_state", "SecularGenerator", "DENSE_BUDGET",
]

# largest Hilbert dimension for which the vectorized Liouvillian is built densely
DENSE_BUDGET = 64


@dataclass(frozen=True)
class LindbladTerm:
    """A jump operator with its non-negative rate."""

    jump: OperatorMatrix
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise DomainError(f"Lindblad rate must be non-negative, got {self.rate}")


def bose_occupation(gap: float, T: float) -> float:
    """Bose occupation at energy gap ``gap`` and temperature ``T`` (both in
    angular-frequency units, Boltzmann constant absorbed)."""
    if T < 0:
        raise DomainError("temperature must be non-negative")
    if T == 0.0 or gap / T > 700.0:
        return 0.0
    return 1.0 / math.expm1(gap / T)


def local_dissipators(kappa: float, gamma: float, nbar_b: float,
                      dims: tuple[int, int]) -> list[LindbladTerm]:
    """Circuit decay kappa D_a plus mechanical damping gamma(n+1) D_b and
    gamma n D_b' on the (circuit, membrane) tensor space.  Zero-rate terms
    are omitted."""
    if min(kappa, gamma, nbar_b) < 0:
        raise DomainError("rates and bath occupation must be non-negative")
    a = mode_op(ladder(dims[0]), 0, dims)
    b = mode_op(ladder(dims[1]), 1, dims)
    terms = []
    if kappa > 0:
        terms.append(LindbladTerm(a, kappa))
    if gamma > 0:
        terms.append(LindbladTerm(b, gamma * (nbar_b + 1.0)))
        if nbar_b > 0:
            terms.append(LindbladTerm(b.dag(), gamma * nbar_b))
    return terms


def squeezed_frame_dissipators(gamma: float, r: float, Delta: float, T: float,
                               dim: int) -> list[LindbladTerm]:
    """Gaussian dissipators of the squeezed frame: Gamma(n+1) D_b and
    Gamma n D_b' with Gamma = gamma cosh^2 r and n the Bose occupation at the
    effective gap Delta.  The returned jumps act on squeezed-frame states."""
    if Delta <= 0:
        raise DomainError("effective gap must be positive (subcritical regime)")
    Gamma = gamma * math.cosh(r) ** 2
    nbar = bose_occupation(Delta, T)
    b = ladder(dim)
    terms = [LindbladTerm(b, Gamma * (nbar + 1.0))]
    if nbar > 0:
        terms.append(LindbladTerm(b.dag(), Gamma * nbar))
    return terms


def _eig_hermitian(H) -> tuple[np.ndarray, np.ndarray]:
    arr = _as_array(H)
    if np.max(np.abs(arr - arr.conj().T)) > 1e-10:
        raise DomainError("Hamiltonian must be Hermitian")
    return np.linalg.eigh(arr)


def _check_nondegenerate(E: np.ndarray):
    span = float(E[-1] - E[0]) or 1.0
    gaps = np.diff(E)
    k = int(np.argmin(gaps))
    if gaps[k] < 1e-10 * span:
        raise DegenerateSpectrumError(
            f"adjacent levels {k} and {k + 1} are degenerate "
            f"(gap {gaps[k]:.3g} of span {span:.3g})", pair=(k, k + 1))


def eigenbasis_dissipators(H_eff, b, gamma: float, T: float,
                           rate_floor_factor: float = 1e-14) -> list[LindbladTerm]:
    """Dissipators between exact eigenstates of ``H_eff``.

    For every eigenpair j<k (energies ascending) a downward term |j><k| with
    rate Gamma^{jk}(n_kj+1) and an upward term |k><j| with rate Gamma^{jk}n_kj,
    where Gamma^{jk} = gamma |<j|b|k>|^2 and n_kj is the Bose occupation at
    the gap E_k - E_j.  Terms below rate_floor_factor*gamma are dropped.
    """
    if gamma < 0:
        raise DomainError("gamma must be non-negative")
    E, V = _eig_hermitian(H_eff)
    _check_nondegenerate(E)
    B = V.conj().T @ _as_array(b) @ V
    dim = len(E)
    floor = rate_floor_factor * gamma
    terms: list[LindbladTerm] = []
    for k in range(dim):
        for j in range(k):
            g = gamma * abs(B[j, k]) ** 2
            if g <= floor:
                continue
            nbar = bose_occupation(E[k] - E[j], T)
            down = np.outer(V[:, j], V[:, k].conj())
            terms.append(LindbladTerm(OperatorMatrix(down), g * (nbar + 1.0)))
            if g * nbar > floor:
                terms.append(LindbladTerm(OperatorMatrix(down.conj().T), g * nbar))
    return terms


def liouvillian_matrix(H, terms: list[LindbladTerm]) -> np.ndarray:
    """Dense matrix of the generator acting on row-major vectorized rho."""
    Harr = _as_array(H)
    d = Harr.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(Harr, eye) - np.kron(eye, Harr.T))
    for term in terms:
        J = _as_array(term.jump)
        K = J.conj().T @ J
        L += term.rate * (np.kron(J, J.conj())
                          - 0.5 * (np.kron(K, eye) + np.kron(eye, K.T)))
    return L


@dataclass
class Trajectory:
    """Stored master-equation solution with per-point diagnostics."""

    times: np.ndarray
    states: list[DensityMatrix]
    trace_dev: np.ndarray
    min_eig: np.ndarray

    def occupations(self, mode: int = 0) -> np.ndarray:
        from .analysis import occupation
        return np.array([occupation(s, mode) for s in self.states])

    def save_csv(self, path):
        """t, occupation_b, occupation_a, trace_dev rows (single-mode
        trajectories leave occupation_a empty)."""
        from .analysis import occupation
        with open(path, "w", encoding="utf-8") as f:
            f.write("t,occupation_b,occupation_a,trace_dev\n")
            for i, state in enumerate(self.states):
                two_mode = len(state.factor_dims) > 1
                occ_b = occupation(state, 1 if two_mode else 0)
                occ_a = f"{occupation(state, 0):.17g}" if two_mode else ""
                f.write(f"{self.times[i]:.17g},{occ_b:.17g},{occ_a},{self.trace_dev[i]:.17g}\n")

    def save_snapshots(self, path):
        """Binary density-matrix dump: 16-byte header (dim and snapshot count
        as little-endian uint64) then row-major interleaved re/im doubles."""
        dim = self.states[0].dim
        with open(path, "wb") as f:
            f.write(struct.pack("<QQ", dim, len(self.states)))
            for state in self.states:
                inter = np.empty((dim, dim, 2))
                inter[..., 0] = state.data.real
                inter[..., 1] = state.data.imag
                f.write(inter.astype("<f8").tobytes())

    @staticmethod
    def load_snapshots(path) -> list[np.ndarray]:
        with open(path, "rb") as f:
            dim, count = struct.unpack("<QQ", f.read(16))
            out = []
            for _ in range(count):
                raw = np.frombuffer(f.read(16 * dim * dim), dtype="<f8").reshape(dim, dim, 2)
                out.append(raw[..., 0] + 1j * raw[..., 1])
        return out


def _leakage(rho: np.ndarray, factor_dims) -> float:
    """Largest top-level population over tensor factors."""
    if len(factor_dims) == 1:
        return float(np.diag(rho).real[-1])
    worst = 0.0
    t = rho.reshape(*factor_dims, *factor_dims)
    n = len(factor_dims)
    for keep in range(n):
        red = t
        for axis in reversed(range(n)):
            if axis == keep:
                continue
            red = np.trace(red, axis1=axis, axis2=axis + (red.ndim // 2))
        worst = max(worst, float(np.diag(red).real[-1]))
    return worst


def evolve(rho0, H, terms: list[LindbladTerm], t_grid, tol: float = 1e-8,
           leak_tol: float = 1e-4) -> Trajectory:
    """Integrate rho' = -i[H, rho] + sum_k rate_k D_{J_k}[rho] over t_grid.

    Adaptive embedded Runge-Kutta with absolute/relative tolerance ``tol``;
    the state is re-symmetrized after every accepted step.  Raises
    StiffnessError on step-size underflow and TruncationError if the
    top-level population of any tensor factor exceeds ``leak_tol`` at a
    stored point.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be a non-empty strictly increasing 1-d array")
    rho = _as_array(rho0).copy()
    dims = rho0.factor_dims if isinstance(rho0, OperatorMatrix) else (rho.shape[0],)
    d = rho.shape[0]
    Harr = _as_array(H)
    jumps = [(t.rate, _as_array(t.jump)) for t in terms if t.rate > 0]
    kops = [(r, J, J.conj().T @ J) for r, J in jumps]

    def rhs(_t, y):
        x = y.reshape(d, d)
        out = -1j * (Harr @ x - x @ Harr)
        for r, J, K in kops:
            out += r * (J @ x @ J.conj().T - 0.5 * (K @ x + x @ K))
        return out.ravel()

    states: list[DensityMatrix] = []
    trace_dev = np.zeros(len(t_grid))
    min_eig = np.zeros(len(t_grid))

    def store(idx, y):
        x = y.reshape(d, d)
        x = 0.5 * (x + x.conj().T)
        trace_dev[idx] = abs(np.trace(x).real - 1.0)
        lo = float(np.linalg.eigvalsh(x)[0])
        min_eig[idx] = lo
        leak = _leakage(x, dims)
        if leak > leak_tol:
            raise TruncationError(
                f"top-level population {leak:.3g} at t={t_grid[idx]:.6g} exceeds "
                f"{leak_tol:g}", leakage=leak)
        states.append(DensityMatrix(x, dims, check=False))

    gi = 0
    if t_grid[0] == 0.0:
        store(0, rho.ravel())
        gi = 1
    t0 = 0.0
    solver = RK45(rhs, t0, rho.ravel().astype(complex), t_bound=float(t_grid[-1]),
                  rtol=tol, atol=tol)
    min_step = max(t_grid[-1], 1.0) * 1e-14
    while gi < len(t_grid):
        try:
            message = solver.step()
        except RuntimeError as exc:  # solver already failed
            raise StiffnessError(str(exc)) from exc
        if solver.status == "failed":
            raise StiffnessError(message or "integrator failed")
        if solver.step_size is not None and solver.step_size < min_step:
            raise StiffnessError(f"step size underflow ({solver.step_size:.3g})")
        dense = solver.dense_output()
        while gi < len(t_grid) and t_grid[gi] <= solver.t + 1e-30:
            store(gi, dense(min(t_grid[gi], solver.t)))
            gi += 1
        # re-symmetrize the running state after the accepted step
        x = solver.y.reshape(d, d)
        solver.y = (0.5 * (x + x.conj().T)).ravel()
        if solver.status == "finished" and gi < len(t_grid):
            store(gi, solver.y)
            gi += 1
    return Trajectory(np.array(t_grid), states, trace_dev, min_eig)


class _EigenbasisSolver:
    """Matrix-free Liouvillian in the eigenbasis of H with a secular
    preconditioner; used for steady states beyond the dense budget."""

    def __init__(self, H, terms: list[LindbladTerm]):
        E, V = _eig_hermitian(H)
        self.E, self.V = E, V
        self.d = len(E)
        self.jumps = [(t.rate, V.conj().T @ _as_array(t.jump) @ V) for t in terms
                      if t.rate > 0]
        self.kops = [(r, J, J.conj().T @ J) for r, J in self.jumps]
        self.gaps = E[:, None] - E[None, :]
        # secular pieces: population rate matrix and coherence decay factors
        pop = np.zeros((self.d, self.d))
        coh = (-1j * self.gaps).astype(complex)
        for r, J in self.jumps:
            pop += r * np.abs(J) ** 2
            coh += r * (np.diag(J)[:, None] * np.diag(J)[None, :].conj())
        out_rate = pop.sum(axis=0)
        self.pop_rate = pop - np.diag(out_rate)
        coh -= 0.5 * (out_rate[:, None] + out_rate[None, :])
        np.fill_diagonal(coh, 1.0)  # placeholder; populations handled separately
        self.coh = coh

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * self.gaps * rho
        for r, J, K in self.kops:
            out += r * (J @ rho @ J.conj().T - 0.5 * (K @ rho + rho @ K))
        return out

    def solve_null(self, tol: float, maxiter: int = 300):
        d = self.d
        Apop = self.pop_rate.copy()
        Apop[0, :] += 1.0
        try:
            lu_pop = sla.lu_factor(Apop)
        except sla.LinAlgError as exc:
            raise DegenerateSteadyStateError(
                "secular population matrix is singular even with the trace row; "
                "steady state is likely non-unique") from exc
        coh = self.coh - 1e-14  # keep invertible where no jump touches a pair

        def m_apply(y):
            Y = y.reshape(d, d)
            X = Y / coh
            pops = sla.lu_solve(lu_pop, np.diag(Y).real)
            np.fill_diagonal(X, pops)
            return X.ravel()

        def a_apply(x):
            X = x.reshape(d, d)
            out = self.apply(X)
            out.flat[0] += np.trace(X)
            return out.ravel()

        A = spla.LinearOperator((d * d, d * d), a_apply, dtype=complex)
        M = spla.LinearOperator((d * d, d * d), m_apply, dtype=complex)
        rhs = np.zeros(d * d, complex)
        rhs[0] = 1.0
        x, info = spla.lgmres(A, rhs, M=M, rtol=tol, atol=tol, maxiter=maxiter,
                              inner_m=30)
        if info != 0:
            raise DegenerateSteadyStateError(
                f"Krylov null-space solve did not converge (info={info})")
        rho = x.reshape(d, d)
        residual = float(np.linalg.norm(self.apply(rho)))
        # back to the original basis
        rho = self.V @ rho @ self.V.conj().T
        return rho, residual


def steady_state(H, terms: list[LindbladTerm], tol: float = 1e-10,
                 method: str = "auto", check_uniqueness: str = "auto",
                 psd_floor: float = 1e-7) -> DensityMatrix:
    """Stationary state of the Lindbladian defined by ``H`` and ``terms``.

    method: "direct" (dense vectorized solve with a trace-constraint row),
    "krylov" (eigenbasis matrix-free solve), or "auto" (direct up to
    DENSE_BUDGET Hilbert dimensions).  check_uniqueness: "always"/"never"/
    "auto" -- the singular-value gap test on the dense Liouvillian (auto: only
    when the Hilbert dimension is at most 32, where the SVD is cheap).

    Raises DegenerateSteadyStateError when the null space is not
    one-dimensional and UnstableRegimeError when the solution is not a
    physical state (no attracting steady state in the truncated model).
    """
    Harr = _as_array(H)
    d = Harr.shape[0]
    dims = H.factor_dims if isinstance(H, OperatorMatrix) else (d,)
    if method == "auto":
        method = "direct" if d <= DENSE_BUDGET else "krylov"

    if method == "direct":
        L = liouvillian_matrix(Harr, terms)
        if check_uniqueness == "always" or (check_uniqueness == "auto" and d <= 32):
            sv = np.linalg.svd(L, compute_uv=False)
            smallest = max(sv[-1], np.finfo(float).tiny)
            if sv[-2] <= 1e3 * smallest:
                raise DegenerateSteadyStateError(
                    f"Liouvillian null space is not unique "
                    f"(singular values {sv[-2]:.3g}, {sv[-1]:.3g})")
        A = L.copy()
        trace_idx = np.arange(0, d * d, d + 1)
        A[0, trace_idx] += 1.0
        rhs = np.zeros(d * d, complex)
        rhs[0] = 1.0
        x = np.linalg.solve(A, rhs)
        rho = x.reshape(d, d)
        residual = float(np.linalg.norm(L @ x))
    elif method == "krylov":
        rho, residual = _EigenbasisSolver(Harr, terms).solve_null(tol=min(tol, 1e-12))
    else:
        raise DomainError(f"unknown steady-state method {method!r}")

    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise DegenerateSteadyStateError("null vector has vanishing trace")
    rho = rho / tr
    scale = max(1.0, float(np.max(np.abs(rho))))
    if residual > max(tol, 1e-9 * scale) * 10:
        raise DegenerateSteadyStateError(
            f"steady-state residual {residual:.3g} above tolerance")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -psd_floor:
        raise UnstableRegimeError(
            f"stationary null vector is not positive (min eigenvalue {lo:.3g}); "
            "the model has no physical steady state in this regime")
    return DensityMatrix(rho, dims, check=False)


class SecularGenerator:
    """Closed-form solver for the eigenbasis master equation.

    In the eigenbasis of H the generator decouples: populations obey a
    classical rate equation with rates Gamma^{jk}(n+1) down and Gamma^{jk} n
    up, and each coherence evolves as exp((-i Delta_jk - (R_j+R_k)/2) t).
    Evolution is exact at any time, which is what the metrology pipelines
    need at times of order 1/gamma.
    """

    def __init__(self, H, b, gamma: float, T: float = 0.0):
        E, V = _eig_hermitian(H)
        _check_nondegenerate(E)
        self.E, self.V = E, V
        self.dim = len(E)
        self.gamma, self.T = gamma, T
        B = V.conj().T @ _as_array(b) @ V
        G = np.zeros((self.dim, self.dim))
        if gamma > 0:
            absB2 = np.abs(B) ** 2
            for k in range(self.dim):
                for j in range(k):
                    g = gamma * absB2[j, k]
                    if g == 0.0:
                        continue
                    nbar = bose_occupation(E[k] - E[j], T)
                    G[j, k] = g * (nbar + 1.0)   # k -> j
                    G[k, j] = g * nbar           # j -> k
        self.rates = G
        self.out_rate = G.sum(axis=0)
        self.rate_matrix = G - np.diag(self.out_rate)

    def lindblad_terms(self) -> list[LindbladTerm]:
        """The same generator as explicit rank-one jump terms."""
        terms = []
        for k in range(self.dim):
            for j in range(self.dim):
                if j == k or self.rates[j, k] == 0.0:
                    continue
                op = np.outer(self.V[:, j], self.V[:, k].conj())
                terms.append(LindbladTerm(OperatorMatrix(op), float(self.rates[j, k])))
        return terms

    def _initial(self, rho0) -> np.ndarray:
        arr = _as_array(rho0)
        if arr.ndim == 1:
            c = self.V.conj().T @ arr
            return np.outer(c, c.conj())
        return self.V.conj().T @ arr @ self.V

    def states_at(self, rho0, times) -> list[DensityMatrix]:
        """Exact rho(t) on an increasing grid, in the original basis."""
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) < 0):
            raise DomainError("times must be non-decreasing")
        rho_e = self._initial(rho0)
        pops = np.diag(rho_e).real.copy()
        dec = 0.5 * (self.out_rate[:, None] + self.out_rate[None, :])
        freq = self.E[:, None] - self.E[None, :]
        out = []
        tprev = 0.0
        for t in times:
            if self.gamma > 0:
                pops = sla.expm(self.rate_matrix * (t - tprev)) @ pops
            tprev = t
            rho_t = rho_e * np.exp((-1j * freq - dec) * t)
            np.fill_diagonal(rho_t, pops)
            lab = self.V @ rho_t @ self.V.conj().T
            out.append(DensityMatrix(0.5 * (lab + lab.conj().T), check=False))
        return out

    def steady_state(self) -> DensityMatrix:
        """Stationary state: coherence-free, populations from the stationary
        distribution of the classical rate matrix (detailed balance makes it
        Gibbs over the eigenstates when the jump graph is connected).

        The distribution is computed with state-elimination (GTH), which is
        free of subtractive cancellation: populations carry componentwise
        relative accuracy and levels unreachable at T=0 come out exactly
        zero, so no null-space noise leaks into the small-eigenvalue terms of
        downstream QFI sums.
        """
        if self.gamma <= 0:
            raise DegenerateSteadyStateError("no dissipation: every state is stationary")
        n = self.dim
        W = self.rates.copy()  # W[i, j] = rate j -> i
        outflow = np.zeros(n)
        for k in range(n - 1, 0, -1):
            s = W[:k, k].sum()
            if s <= 0.0:
                raise DegenerateSteadyStateError(
                    f"level {k} cannot reach the lower block; "
                    "stationary distribution is not unique")
            outflow[k] = s
            W[:k, :k] += np.outer(W[:k, k], W[k, :k]) / s
        pops = np.zeros(n)
        pops[0] = 1.0
        for k in range(1, n):
            pops[k] = (pops[:k] @ W[k, :k]) / outflow[k]
        pops /= pops.sum()
        resid = float(np.linalg.norm(self.rate_matrix @ pops))
        if resid > 1e-9 * float(np.abs(self.rate_matrix).max()):
            raise DegenerateSteadyStateError(
                f"stationary distribution residual {resid:.3g} too large")
        rho = (self.V * pops) @ self.V.conj().T
        return DensityMatrix(rho, check=False)
