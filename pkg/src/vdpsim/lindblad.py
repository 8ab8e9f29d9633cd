"""Time evolution and steady states of the effective two-oscillator model.

The effective master equation is

    drho/dt = -i[H, rho] + kappa_plus sum_i D[a_i^dag] rho
              + kappa_minus sum_i D[a_i^2] rho
              + V D[a_1 - a_2 e^{i phi}] rho,

with H = delta_1 a_1^dag a_1 + delta_2 a_2^dag a_2
       + drive_amp (a_1 e^{i drive_phase} + a_1^dag e^{-i drive_phase})
and D[L] rho = L rho L^dag - {L^dag L, rho}/2.

Two steady-state routes are provided and cross-checked in the test suite:
windowed RK4 propagation (:func:`steady_state`) and a direct null-space
solve of the Liouvillian (:func:`steady_state_direct`), which exploits the
weak-symmetry block structure of the undriven model for speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, IntegratorError, LayoutError, StateError
from .hilbert import (OperatorMatrix, QuantumState, SpaceLayout, annihilation,
                      embed, mode_annihilation)

__all__ = [
    "EffectiveParams",
    "GeneratorSpec",
    "vdp_generator",
    "single_mode_generator",
    "generator_apply",
    "evolve",
    "recommended_step",
    "steady_state",
    "steady_state_direct",
    "steady_state_family",
    "liouvillian_matrix",
    "trace_distance",
]


@dataclass(frozen=True)
class EffectiveParams:
    """Rates (rad/s) and phases of the effective model."""

    kappa_plus: float
    kappa_minus: float
    V: float = 0.0
    phi: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    drive_amp: float = 0.0
    drive_phase: float = 0.0

    def __post_init__(self):
        if not self.kappa_plus > 0:
            raise ValueError(f"kappa_plus must be > 0, got {self.kappa_plus}")
        if self.kappa_minus < 0:
            raise ValueError(f"kappa_minus must be >= 0, got {self.kappa_minus}")
        if self.V < 0:
            raise ValueError(f"V must be >= 0, got {self.V}")
        if self.drive_amp < 0:
            raise ValueError(f"drive_amp must be >= 0, got {self.drive_amp}")

    @property
    def detuning_difference(self) -> float:
        return self.delta2 - self.delta1

    def replace(self, **kw) -> "EffectiveParams":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass(frozen=True)
class GeneratorSpec:
    """Hamiltonian plus weighted jump operators, all on one layout."""

    hamiltonian: OperatorMatrix
    dissipators: tuple[tuple[float, OperatorMatrix], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(
            (float(r), op) for r, op in self.dissipators))
        for rate, op in self.dissipators:
            if rate < 0:
                raise ValueError(f"dissipator rate must be >= 0, got {rate}")
            if op.layout != self.hamiltonian.layout:
                raise LayoutError("all generator operators must share one layout")

    @property
    def layout(self) -> SpaceLayout:
        return self.hamiltonian.layout


def vdp_generator(params: EffectiveParams, layout: SpaceLayout) -> GeneratorSpec:
    """Generator of the effective two-oscillator model on a two-mode layout."""
    if layout.qubit is not None or layout.n_modes != 2:
        raise LayoutError("effective model needs a layout with exactly two mode slots")
    a1 = mode_annihilation(layout, 0)
    a2 = mode_annihilation(layout, 1)
    n1 = a1.dagger() @ a1
    n2 = a2.dagger() @ a2
    h = params.delta1 * n1.entries + params.delta2 * n2.entries
    if params.drive_amp > 0:
        h = h + params.drive_amp * (np.exp(1j * params.drive_phase) * a1.entries
                                    + np.exp(-1j * params.drive_phase) * a1.entries.conj().T)
    diss = [(params.kappa_plus, a1.dagger()), (params.kappa_plus, a2.dagger())]
    if params.kappa_minus > 0:
        diss += [(params.kappa_minus, a1 @ a1), (params.kappa_minus, a2 @ a2)]
    if params.V > 0:
        diss.append((params.V, a1 - np.exp(1j * params.phi) * a2))
    return GeneratorSpec(OperatorMatrix(layout, h), tuple(diss))


def single_mode_generator(params: EffectiveParams, cutoff: int) -> GeneratorSpec:
    """Single-oscillator restriction: one mode with gain, two-phonon loss, drive."""
    layout = SpaceLayout((cutoff,))
    a = annihilation(cutoff)
    n = a.dagger() @ a
    h = params.delta1 * n.entries
    if params.drive_amp > 0:
        h = h + params.drive_amp * (np.exp(1j * params.drive_phase) * a.entries
                                    + np.exp(-1j * params.drive_phase) * a.entries.conj().T)
    diss = [(params.kappa_plus, a.dagger())]
    if params.kappa_minus > 0:
        diss.append((params.kappa_minus, a @ a))
    return GeneratorSpec(OperatorMatrix(layout, h), tuple(diss))


def generator_apply(gen: GeneratorSpec, state: QuantumState) -> np.ndarray:
    """Right-hand side -i[H, rho] + sum_k r_k D[L_k] rho as a plain matrix."""
    if state.layout != gen.layout:
        raise LayoutError("state and generator layouts do not match")
    h = gen.hamiltonian.entries
    rho = state.rho
    out = -1j * (h @ rho - rho @ h)
    for rate, op in gen.dissipators:
        l = op.entries
        ldl = l.conj().T @ l
        out = out + rate * (l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def _spectral_norm(mat: np.ndarray) -> float:
    herm = np.abs(mat - mat.conj().T).max() <= 1e-12 * max(1.0, np.abs(mat).max())
    if herm:
        return float(np.abs(np.linalg.eigvalsh(mat)).max()) if mat.size else 0.0
    return float(np.linalg.norm(mat, 2))


def _rate_scales(gen: GeneratorSpec) -> tuple[float, float, float]:
    """(max bare rate, spectral scale of H, Liouvillian spectral-radius bound)."""
    h_scale = _spectral_norm(gen.hamiltonian.entries)
    max_rate = max((r for r, _ in gen.dissipators), default=0.0)
    radius = 2.0 * h_scale
    for rate, op in gen.dissipators:
        radius += 2.0 * rate * _spectral_norm(op.entries) ** 2
    return max_rate, h_scale, radius


def recommended_step(gen: GeneratorSpec) -> float:
    """Largest RK4 step satisfying both the accuracy and stability budgets.

    Accuracy: step * (max rate + spectral scale of H) <= 0.05.  Stability:
    step times the Liouvillian spectral-radius bound (which includes the
    operator-norm enhancement rate*||L||^2 of the truncated jump operators)
    must stay inside the RK4 stability region.
    """
    max_rate, h_scale, radius = _rate_scales(gen)
    accuracy = 0.05 / max(max_rate + h_scale, 1e-300)
    stability = 2.5 / max(radius, 1e-300)
    return min(accuracy, stability)


class _Propagator:
    """Precomputed pieces of the RK4 right-hand side."""

    def __init__(self, gen: GeneratorSpec):
        h = gen.hamiltonian.entries
        gsum = np.zeros_like(h)
        self.jumps = []
        for rate, op in gen.dissipators:
            l = op.entries
            gsum = gsum + rate * (l.conj().T @ l)
            self.jumps.append((np.sqrt(rate) * l, np.sqrt(rate) * l.conj().T))
        self.k = -1j * h - 0.5 * gsum

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        out = self.k @ rho + rho @ self.k.conj().T
        for l, ld in self.jumps:
            out += l @ rho @ ld
        return out


def evolve(state: QuantumState, gen: GeneratorSpec, duration: float,
           step: float) -> QuantumState:
    """Classic fixed-step RK4 propagation of the master equation.

    The final trace must stay within 1e-6 of 1; drift beyond that raises
    (never silently renormalizes, which would mask integrator bugs).
    """
    if state.layout != gen.layout:
        raise LayoutError("state and generator layouts do not match")
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return state
    if step <= 0:
        raise ValueError("step must be > 0")
    limit = recommended_step(gen)
    if step > limit * (1 + 1e-12):
        raise IntegratorError(
            f"step {step:.3e} exceeds the accuracy/stability budget; "
            f"use step <= {limit:.3e}")
    nsteps = max(1, int(np.ceil(duration / step)))
    h = duration / nsteps
    prop = _Propagator(gen)
    rho = state.rho.copy()
    for _ in range(nsteps):
        k1 = prop.rhs(rho)
        k2 = prop.rhs(rho + 0.5 * h * k1)
        k3 = prop.rhs(rho + 0.5 * h * k2)
        k4 = prop.rhs(rho + h * k3)
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    drift = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    if drift > 1e-6:
        raise IntegratorError(
            f"trace drifted by {drift:.2e} > 1e-6 after {nsteps} steps; "
            f"retry with step <= {h / 2:.3e}")
    return QuantumState(state.layout, rho)


def trace_distance(a: QuantumState, b: QuantumState) -> float:
    """(1/2)||a - b||_1 via eigenvalues of the Hermitian difference."""
    if a.layout != b.layout:
        raise LayoutError("state layouts do not match")
    diff = a.rho - b.rho
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def steady_state(gen: GeneratorSpec, initial: QuantumState, tol: float = 1e-6,
                 max_windows: int = 200) -> QuantumState:
    """Fixed point by iterating evolve over windows of duration 5/max-rate.

    The window length tracks the slowest dissipative relaxation scale
    (the gain rate in the regimes of interest). Converged when the trace
    distance between successive window endpoints drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    rates = [r for r, _ in gen.dissipators if r > 0]
    if not rates:
        raise ValueError("steady state undefined for a dissipator-free generator")
    window = 5.0 / max(rates)
    step = recommended_step(gen)
    current = initial
    for _ in range(max_windows):
        nxt = evolve(current, gen, window, step)
        dist = trace_distance(current, nxt)
        current = nxt
        if dist < tol:
            return current
    raise ConvergenceError(
        f"no steady state after {max_windows} windows; last distance {dist:.3e}")


# --- direct (null-space) route ----------------------------------------------

def liouvillian_matrix(gen: GeneratorSpec) -> sp.csr_matrix:
    """Sparse Liouvillian in the row-major vec convention vec(A rho B) = (A (x) B^T) vec(rho)."""
    n = gen.layout.total_dim
    eye = sp.identity(n, format="csr", dtype=complex)
    h = sp.csr_matrix(gen.hamiltonian.entries)
    liouv = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for rate, op in gen.dissipators:
        l = sp.csr_matrix(op.entries)
        ldl = (l.conj().T @ l).tocsr()
        liouv = liouv + rate * (sp.kron(l, l.conj())
                                - 0.5 * (sp.kron(ldl, eye) + sp.kron(eye, ldl.T)))
    return liouv.tocsr()


def _number_weights(layout: SpaceLayout) -> np.ndarray:
    """Total occupation of each basis state (qubit excitation counts as one)."""
    w = np.zeros(1, dtype=np.int64)
    for d in layout.dims:
        w = (w[:, None] + np.arange(d)[None, :]).ravel()
    return w


def _weight_of(mat: np.ndarray, w: np.ndarray) -> int | None:
    """Ladder weight k with mat[i,j] != 0 => w[i]-w[j] == k, or None if mixed."""
    scale = np.abs(mat).max()
    if scale == 0:
        return 0
    rows, cols = np.nonzero(np.abs(mat) > 1e-14 * scale)
    ks = np.unique(w[rows] - w[cols])
    return int(ks[0]) if len(ks) == 1 else None


def _has_u1_symmetry(gen: GeneratorSpec) -> bool:
    w = _number_weights(gen.layout)
    if _weight_of(gen.hamiltonian.entries, w) != 0:
        return False
    return all(_weight_of(op.entries, w) is not None for _, op in gen.dissipators)


def _solve_sector(gen: GeneratorSpec) -> np.ndarray:
    """Dense null-space solve restricted to the zero-coherence sector."""
    n = gen.layout.total_dim
    liouv = liouvillian_matrix(gen)
    w = _number_weights(gen.layout)
    k = (w[:, None] - w[None, :]).ravel()
    ix = np.flatnonzero(k == 0)
    a = liouv[ix][:, ix].toarray()
    diag_positions = np.arange(n) * (n + 1)
    trace_row = np.isin(ix, diag_positions).astype(complex)
    a[0, :] = trace_row
    b = np.zeros(len(ix), dtype=complex)
    b[0] = 1.0
    x = np.linalg.solve(a, b)
    full = np.zeros(n * n, dtype=complex)
    full[ix] = x
    return full


def _constrained_system(gen: GeneratorSpec):
    """Liouvillian with the first row replaced by the trace constraint."""
    n = gen.layout.total_dim
    liouv = liouvillian_matrix(gen).tolil()
    trace_row = np.zeros(n * n, dtype=complex)
    trace_row[:: n + 1] = 1.0
    liouv[0, :] = trace_row
    b = np.zeros(n * n, dtype=complex)
    b[0] = 1.0
    return liouv.tocsc(), b


def _solve_full(gen: GeneratorSpec) -> np.ndarray:
    """Sparse LU null-space solve on the full Liouvillian."""
    a, b = _constrained_system(gen)
    return spla.splu(a).solve(b)


def _vec_to_state(gen: GeneratorSpec, vec: np.ndarray,
                  residual_tol: float) -> QuantumState:
    n = gen.layout.total_dim
    liouv = liouvillian_matrix(gen)
    _, _, radius = _rate_scales(gen)
    resid = np.abs(liouv @ vec).max() / max(radius, 1e-300)
    if resid > residual_tol:
        raise ConvergenceError(f"steady-state residual {resid:.2e} > {residual_tol:.1e}")
    rho = vec.reshape(n, n)
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-8:
        raise StateError(f"null-space trace {tr} deviates from 1")
    return QuantumState(gen.layout, rho)


def steady_state_direct(gen: GeneratorSpec, residual_tol: float = 1e-8) -> QuantumState:
    """Steady state from the Liouvillian null space.

    Uses the zero-coherence sector when the generator commutes with total
    occupation (the undriven model), and the full sparse Liouvillian
    otherwise.  The residual of the full master equation is always checked.
    """
    vec = _solve_sector(gen) if _has_u1_symmetry(gen) else _solve_full(gen)
    return _vec_to_state(gen, vec, residual_tol)


class _SectorPreconditioner:
    """Block-diagonal inverse over coherence sectors of a constrained system.

    A coherent drive couples sectors k -> k +/- 1 only; dropping that
    coupling leaves independent dense blocks, factored once and reused as a
    GMRES preconditioner for every member of a parameter ensemble.
    """

    def __init__(self, gen: GeneratorSpec):
        from scipy.linalg import lu_factor
        a, _ = _constrained_system(gen)
        w = _number_weights(gen.layout)
        k = (w[:, None] - w[None, :]).ravel()
        self.groups = [np.flatnonzero(k == val) for val in np.unique(k)]
        self.factors = [lu_factor(a[ix][:, ix].toarray()) for ix in self.groups]
        self.size = a.shape[0]

    def solve(self, x: np.ndarray) -> np.ndarray:
        from scipy.linalg import lu_solve
        out = np.empty_like(x)
        for ix, fac in zip(self.groups, self.factors):
            out[ix] = lu_solve(fac, x[ix])
        return out

    def as_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator((self.size, self.size), matvec=self.solve,
                                   dtype=complex)


def steady_state_family(gens: list[GeneratorSpec],
                        residual_tol: float = 1e-8) -> list[QuantumState]:
    """Steady states of a family of nearby generators (a noise ensemble).

    Symmetric (undriven) generators use the cheap sector solve per member.
    Driven generators share one sector-block preconditioner (built from the
    first member) and solve by warm-started GMRES, falling back to a full
    sparse LU for any member where the iteration stalls.
    """
    if not gens:
        return []
    if all(_has_u1_symmetry(g) for g in gens):
        return [steady_state_direct(g, residual_tol) for g in gens]
    precond = _SectorPreconditioner(gens[0])
    m = precond.as_operator()
    out = []
    x_prev = None
    for gen in gens:
        a, b = _constrained_system(gen)
        x0 = x_prev if x_prev is not None else precond.solve(b)
        x, info = spla.gmres(a, b, x0=x0, M=m, rtol=1e-12, atol=0.0,
                             restart=80, maxiter=300)
        if info != 0:
            x = spla.splu(a).solve(b)
        out.append(_vec_to_state(gen, x, residual_tol))
        x_prev = x
    return out
