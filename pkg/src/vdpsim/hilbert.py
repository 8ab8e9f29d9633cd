"""Fock-space and composite-space operator algebra.

Conventions used throughout the package:

* A composite space is an ordered tensor product of slots. At most one slot
  is a two-level ancilla ("qubit"); all other slots are bosonic modes
  truncated at a Fock cutoff.
* Qubit basis order is (|down>, |up>), so ``sigma_z = diag(+1, -1)`` and
  ``sigma_plus = |up><down|``.
* Displacement operators use D(beta) = exp(beta a^dag - beta* a) and are
  built from the closed-form Fock matrix elements

      <n+k| D |n> = sqrt(n!/(n+k)!) beta^k e^{-|beta|^2/2} L_n^{(k)}(|beta|^2)

  rather than a matrix exponential.  The entries of the truncated matrix are
  therefore exact; products of displacements are accurate on a block whose
  distance from the truncation edge covers the phonon spread, which is what
  :func:`displacement_workspace` provides.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import prod

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import DimensionError, LayoutError, StateError, TruncationWarning

__all__ = [
    "SpaceLayout",
    "OperatorMatrix",
    "QuantumState",
    "annihilation",
    "creation",
    "number_operator",
    "identity_operator",
    "qubit_operator",
    "embed",
    "tensor_operators",
    "displacement",
    "displacement_entries",
    "displacement_workspace",
    "canonical_state",
    "vacuum_state",
    "fock_state",
    "coherent_state",
    "opposite_coherent_mixture",
    "tensor_states",
    "partial_trace",
    "expectation",
    "mode_annihilation",
    "mode_populations",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |up><down|
SIGMA_MINUS = SIGMA_PLUS.conj().T


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions, with an optional qubit slot."""

    dims: tuple[int, ...]
    qubit: int | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise LayoutError("layout needs at least one slot")
        if any(d < 1 for d in dims):
            raise LayoutError(f"all dimensions must be >= 1, got {dims}")
        if self.qubit is not None:
            if not 0 <= self.qubit < len(dims):
                raise LayoutError(f"qubit slot {self.qubit} out of range")
            if dims[self.qubit] != 2:
                raise LayoutError("qubit slot must have dimension 2")
        for slot, d in enumerate(dims):
            if slot != self.qubit and d < 2:
                raise LayoutError(f"mode cutoff at slot {slot} must be >= 2, got {d}")

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def mode_slots(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.dims)) if i != self.qubit)

    @property
    def n_modes(self) -> int:
        return len(self.mode_slots)

    def __len__(self) -> int:
        return len(self.dims)


def single_mode(cutoff: int) -> SpaceLayout:
    return SpaceLayout((cutoff,))


def two_modes(cutoff1: int, cutoff2: int | None = None) -> SpaceLayout:
    return SpaceLayout((cutoff1, cutoff2 if cutoff2 is not None else cutoff1))


def qubit_and_modes(cutoff1: int, cutoff2: int | None = None) -> SpaceLayout:
    return SpaceLayout((2, cutoff1, cutoff2 if cutoff2 is not None else cutoff1), qubit=0)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex operator tagged with the layout it acts on."""

    layout: SpaceLayout
    entries: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise LayoutError(f"entries shape {mat.shape} != layout dim {n}")
        if not np.all(np.isfinite(mat)):
            raise DimensionError("operator entries must be finite")
        object.__setattr__(self, "entries", _readonly(mat))

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.layout, self.entries.conj().T)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.layout != other.layout:
            raise LayoutError("operator layouts do not match")
        return OperatorMatrix(self.layout, self.entries @ other.entries)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.layout != other.layout:
            raise LayoutError("operator layouts do not match")
        return OperatorMatrix(self.layout, self.entries + other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.layout != other.layout:
            raise LayoutError("operator layouts do not match")
        return OperatorMatrix(self.layout, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.layout, self.entries * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class QuantumState:
    """Density operator over a composite layout.

    Construction checks only shape and finiteness; :meth:`validate` performs
    the trace/Hermiticity/positivity audit (positivity costs an eigensolve,
    so it runs at validation checkpoints rather than every integrator step).
    """

    layout: SpaceLayout
    rho: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.rho, dtype=complex)
        n = self.layout.total_dim
        if mat.shape != (n, n):
            raise LayoutError(f"rho shape {mat.shape} != layout dim {n}")
        if not np.all(np.isfinite(mat)):
            raise StateError("density matrix entries must be finite")
        object.__setattr__(self, "rho", _readonly(mat))

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def validate(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10,
                 min_eig: float = -1e-6) -> "QuantumState":
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise StateError(f"trace {tr} deviates from 1 by more than {trace_tol}")
        herm = np.abs(self.rho - self.rho.conj().T).max()
        if herm > herm_tol:
            raise StateError(f"Hermiticity deviation {herm} exceeds {herm_tol}")
        evals = np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2)
        if evals.min() < min_eig:
            raise StateError(f"minimum eigenvalue {evals.min()} below {min_eig}")
        return self

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def annihilation(cutoff: int) -> OperatorMatrix:
    """Single-mode ladder operator, <n-1|a|n> = sqrt(n)."""
    if cutoff < 2:
        raise DimensionError(f"cutoff must be >= 2, got {cutoff}")
    mat = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)
    return OperatorMatrix(single_mode(cutoff), mat)


def creation(cutoff: int) -> OperatorMatrix:
    return annihilation(cutoff).dagger()


def number_operator(cutoff: int) -> OperatorMatrix:
    if cutoff < 2:
        raise DimensionError(f"cutoff must be >= 2, got {cutoff}")
    return OperatorMatrix(single_mode(cutoff), np.diag(np.arange(cutoff, dtype=complex)))


def identity_operator(layout: SpaceLayout) -> OperatorMatrix:
    return OperatorMatrix(layout, np.eye(layout.total_dim, dtype=complex))


def qubit_operator(name: str) -> OperatorMatrix:
    """2x2 qubit operator on a bare qubit layout: x, y, z, plus, minus, down, up."""
    table = {
        "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z,
        "plus": SIGMA_PLUS, "minus": SIGMA_MINUS,
        "down": np.diag([1.0, 0.0]).astype(complex),
        "up": np.diag([0.0, 1.0]).astype(complex),
    }
    if name not in table:
        raise ValueError(f"unknown qubit operator {name!r}")
    return OperatorMatrix(SpaceLayout((2,), qubit=0), table[name])


def embed(op: OperatorMatrix, slot: int, layout: SpaceLayout) -> OperatorMatrix:
    """Kronecker-embed a single-slot operator into ``layout`` at ``slot``."""
    if not 0 <= slot < len(layout):
        raise LayoutError(f"slot {slot} out of range for layout {layout.dims}")
    d = layout.dims[slot]
    if op.entries.shape != (d, d):
        raise LayoutError(
            f"operator dimension {op.entries.shape[0]} != layout dim {d} at slot {slot}")
    left = prod(layout.dims[:slot])
    right = prod(layout.dims[slot + 1:])
    mat = np.kron(np.kron(np.eye(left), op.entries), np.eye(right))
    return OperatorMatrix(layout, mat)


def tensor_operators(ops: list[OperatorMatrix], layout: SpaceLayout) -> OperatorMatrix:
    """Tensor product of per-slot operators, in layout order."""
    if len(ops) != len(layout):
        raise LayoutError("need one operator per slot")
    mat = np.array([[1.0 + 0j]])
    for op, d in zip(ops, layout.dims):
        if op.entries.shape != (d, d):
            raise LayoutError("slot operator dimension mismatch")
        mat = np.kron(mat, op.entries)
    return OperatorMatrix(layout, mat)


def mode_annihilation(layout: SpaceLayout, mode: int) -> OperatorMatrix:
    """Annihilation operator of the ``mode``-th bosonic slot, embedded in layout."""
    slots = layout.mode_slots
    if not 0 <= mode < len(slots):
        raise LayoutError(f"mode index {mode} out of range ({len(slots)} modes)")
    slot = slots[mode]
    return embed(annihilation(layout.dims[slot]), slot, layout)


# --- displacement operators -------------------------------------------------

def displacement_entries(beta: complex, cutoff: int) -> np.ndarray:
    """Exact Fock matrix elements of D(beta) on a ``cutoff``-dim space."""
    if cutoff < 2:
        raise DimensionError(f"cutoff must be >= 2, got {cutoff}")
    beta = complex(beta)
    if beta == 0:
        return np.eye(cutoff, dtype=complex)
    n = np.arange(cutoff)
    row = n[:, None]
    col = n[None, :]
    k = row - col
    ak = np.abs(k)
    low = np.minimum(row, col)
    x = abs(beta) ** 2
    logpre = 0.5 * (gammaln(low + 1) - gammaln(low + ak + 1)) + ak * np.log(abs(beta)) - x / 2
    lag = eval_genlaguerre(low, ak, x)
    unit = beta / abs(beta)
    phase = np.where(k >= 0, unit ** ak, np.conj(-unit) ** ak)
    return np.exp(logpre) * lag * phase


def displacement_workspace(beta: complex, cutoff: int) -> int:
    """Padded dimension on which products of D(beta)-sized displacements keep
    the first ``cutoff`` rows/columns accurate to ~1e-12."""
    b = abs(complex(beta))
    return cutoff + int(np.ceil(4 * b * b + 6 * b * np.sqrt(cutoff) + 10))


def displacement(beta: complex, cutoff: int) -> OperatorMatrix:
    """Displacement operator D(beta) = exp(beta a^dag - beta* a), truncated.

    Entries are the analytic associated-Laguerre matrix elements of the
    infinite-dimensional unitary; a truncation warning is attached when
    |beta|^2 > cutoff/2 (the displaced support then reaches the edge).
    """
    if cutoff < 2:
        raise DimensionError(f"cutoff must be >= 2, got {cutoff}")
    if abs(beta) ** 2 > cutoff / 2:
        warnings.warn(
            f"displacement |beta|^2 = {abs(beta)**2:.3g} exceeds cutoff/2 = {cutoff/2}; "
            "matrix elements remain exact but applying the operator to states with "
            "support near the edge truncates population",
            TruncationWarning, stacklevel=2)
    return OperatorMatrix(single_mode(cutoff), displacement_entries(beta, cutoff))


def displacement_batch(betas: np.ndarray, cutoff: int) -> np.ndarray:
    """Stack of displacement matrices, shape (len(betas), cutoff, cutoff)."""
    betas = np.asarray(betas, dtype=complex).ravel()
    out = np.empty((betas.size, cutoff, cutoff), dtype=complex)
    for i, b in enumerate(betas):
        out[i] = displacement_entries(b, cutoff)
    return out


# --- canonical states -------------------------------------------------------

def vacuum_state(cutoff: int) -> QuantumState:
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[0, 0] = 1.0
    return QuantumState(single_mode(cutoff), rho)


def fock_state(n: int, cutoff: int) -> QuantumState:
    if not 0 <= n < cutoff:
        raise StateError(f"fock index {n} out of range for cutoff {cutoff}")
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[n, n] = 1.0
    return QuantumState(single_mode(cutoff), rho)


def _coherent_vector(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    if alpha == 0:
        vec = np.zeros(cutoff, dtype=complex)
        vec[0] = 1.0
        return vec
    logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - abs(alpha) ** 2 / 2
    vec = np.exp(logmag) * (alpha / abs(alpha)) ** n
    return vec / np.linalg.norm(vec)


def coherent_state(alpha: complex, cutoff: int) -> QuantumState:
    """|alpha><alpha| truncated and renormalized; requires |alpha|^2 <= cutoff/4."""
    if abs(alpha) ** 2 > cutoff / 4:
        raise StateError(
            f"coherent amplitude |alpha|^2 = {abs(alpha)**2:.3g} exceeds cutoff/4")
    vec = _coherent_vector(complex(alpha), cutoff)
    return QuantumState(single_mode(cutoff), np.outer(vec, vec.conj()))


def opposite_coherent_mixture(alpha: complex, cutoff: int) -> QuantumState:
    """(|alpha><alpha| + |-alpha><-alpha|)/2; requires |alpha|^2 <= cutoff/2."""
    if abs(alpha) ** 2 > cutoff / 2:
        raise StateError(
            f"mixture amplitude |alpha|^2 = {abs(alpha)**2:.3g} exceeds cutoff/2")
    vp = _coherent_vector(complex(alpha), cutoff)
    vm = _coherent_vector(-complex(alpha), cutoff)
    rho = (np.outer(vp, vp.conj()) + np.outer(vm, vm.conj())) / 2
    return QuantumState(single_mode(cutoff), rho)


def canonical_state(kind: str, cutoff: int, *, n: int | None = None,
                    alpha: complex | None = None) -> QuantumState:
    """Dispatch on kind: 'vacuum' | 'fock' | 'coherent' | 'opposite-coherent-mixture'."""
    if kind == "vacuum":
        return vacuum_state(cutoff)
    if kind == "fock":
        if n is None:
            raise StateError("fock state needs n")
        return fock_state(n, cutoff)
    if kind == "coherent":
        if alpha is None:
            raise StateError("coherent state needs alpha")
        return coherent_state(alpha, cutoff)
    if kind == "opposite-coherent-mixture":
        if alpha is None:
            raise StateError("coherent mixture needs alpha")
        return opposite_coherent_mixture(alpha, cutoff)
    raise StateError(f"unknown canonical state kind {kind!r}")


def tensor_states(*states: QuantumState) -> QuantumState:
    """Tensor product state; qubit slot (at most one) tracked through."""
    dims: list[int] = []
    qubit = None
    rho = np.array([[1.0 + 0j]])
    for st in states:
        if st.layout.qubit is not None:
            if qubit is not None:
                raise LayoutError("at most one qubit slot supported")
            qubit = len(dims) + st.layout.qubit
        dims.extend(st.layout.dims)
        rho = np.kron(rho, st.rho)
    return QuantumState(SpaceLayout(tuple(dims), qubit=qubit), rho)


def partial_trace(state: QuantumState, keep) -> QuantumState:
    """Reduced state over ``keep`` slots (kept in original order)."""
    keep = sorted(set(int(k) for k in np.atleast_1d(keep)))
    nslots = len(state.layout)
    if not keep:
        raise LayoutError("keep set must be nonempty")
    if any(not 0 <= k < nslots for k in keep):
        raise LayoutError(f"keep slots {keep} out of range for {nslots} slots")
    dims = state.layout.dims
    tensor = state.rho.reshape(dims + dims)
    traced = [s for s in range(nslots) if s not in keep]
    for count, slot in enumerate(traced):
        ax = slot - count  # axes shift as we trace out
        nax = tensor.ndim // 2
        tensor = np.trace(tensor, axis1=ax, axis2=ax + nax)
    kept_dims = tuple(dims[k] for k in keep)
    d = prod(kept_dims)
    new_qubit = None
    if state.layout.qubit in keep:
        new_qubit = keep.index(state.layout.qubit)
    return QuantumState(SpaceLayout(kept_dims, qubit=new_qubit), tensor.reshape(d, d))


def expectation(state: QuantumState, op: OperatorMatrix) -> complex:
    """Tr(rho op)."""
    if state.layout != op.layout:
        raise LayoutError("state and operator layouts do not match")
    return complex(np.einsum("ij,ji->", state.rho, op.entries))


def mode_populations(state: QuantumState, mode: int) -> np.ndarray:
    """Fock populations of one mode (reduced-state diagonal)."""
    slot = state.layout.mode_slots[mode]
    reduced = partial_trace(state, [slot])
    return np.real(np.diag(reduced.rho)).copy()
