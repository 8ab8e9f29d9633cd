"""Synchronization quantifiers.

The phase-invariant figure of merit is the sum of quadrature mutual
informations I_combined = I[x1:x2] + I[x1:p2], estimated with a plug-in
(histogram) estimator on the reconstructed joint distributions. The same
estimator is applied to exact and shot-noise samples so readout-induced
offsets cancel in trends.

Phase distributions use the canonical construction
P(phi) = (1/2pi) sum_{n,m} e^{i(m-n)phi} <n|rho|m>, which yields the mean
resultant length S = |sum_n <n+1|rho|n>|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DistributionError, LayoutError, StateError
from .hilbert import QuantumState, partial_trace
from .tomography import Grid2D, ReadoutSettings, joint_distribution, wigner

__all__ = [
    "SyncReport",
    "mutual_information_2d",
    "combined_mi",
    "von_neumann_mi",
    "phase_distribution",
    "resultant_length",
]

LOG2 = np.log(2.0)


@dataclass(frozen=True)
class SyncReport:
    """Synchronization metrics of one two-mode state (entropies in nats)."""

    I_xx: float
    I_xp: float
    I_combined: float
    I_vn: float | None
    S1: float
    S2: float
    pearson_xx: float

    def __post_init__(self):
        if self.I_xx < -1e-9 or self.I_xp < -1e-9:
            raise DistributionError("mutual information must be >= -1e-9")
        if abs(self.I_combined - (self.I_xx + self.I_xp)) > 1e-12:
            raise DistributionError("I_combined must equal I_xx + I_xp")

    def as_row(self) -> dict:
        row = {
            "I_xx_nats": self.I_xx,
            "I_xp_nats": self.I_xp,
            "I_combined_nats": self.I_combined,
            "I_vn_nats": self.I_vn,
            "I_xx_bits": self.I_xx / LOG2,
            "I_xp_bits": self.I_xp / LOG2,
            "I_combined_bits": self.I_combined / LOG2,
            "I_vn_bits": None if self.I_vn is None else self.I_vn / LOG2,
            "S1": self.S1,
            "S2": self.S2,
            "pearson_xx": self.pearson_xx,
        }
        return row


def mutual_information_2d(p: Grid2D) -> float:
    """Plug-in mutual information (nats) of a sampled joint distribution.

    Cells are treated as probability masses; the grid is renormalized
    internally (it must be normalized within a few percent to begin with).
    """
    masses = np.real(np.asarray(p.values, dtype=float)) * p.cell_area
    masses = np.clip(masses, 0.0, None)
    total = masses.sum()
    if total <= 0:
        raise DistributionError("grid carries no probability mass")
    masses /= total
    m1 = masses.sum(axis=1)
    m2 = masses.sum(axis=0)
    nz = masses > 0
    outer = np.outer(m1, m2)
    mi = float(np.sum(masses[nz] * np.log(masses[nz] / outer[nz])))
    return max(mi, 0.0)


def _pearson(p: Grid2D) -> float:
    masses = np.clip(np.real(p.values) * p.cell_area, 0.0, None)
    masses /= masses.sum()
    x1 = p.axis_values(1)
    x2 = p.axis_values(2)
    m1 = masses.sum(axis=1)
    m2 = masses.sum(axis=0)
    e1 = float(m1 @ x1)
    e2 = float(m2 @ x2)
    v1 = float(m1 @ (x1 - e1) ** 2)
    v2 = float(m2 @ (x2 - e2) ** 2)
    cov = float((x1 - e1) @ masses @ (x2 - e2))
    if v1 <= 0 or v2 <= 0:
        return 0.0
    return cov / np.sqrt(v1 * v2)


def combined_mi(state: QuantumState, settings: ReadoutSettings, seed: int = 0,
                include_von_neumann: bool = True) -> SyncReport:
    """Full synchronization report of a two-mode state.

    P(x1, x2) uses the settings' quadrature phases (phi1, phi2); the
    conjugate-pair distribution rotates the second phase by pi/2, keeping
    the combination invariant under a global phase. With shots > 0 the
    projection-noise-induced offset of the estimator is included by design.
    """
    from dataclasses import replace

    grid_xx = joint_distribution(state, settings, seed=seed)
    settings_xp = replace(settings, phi2=settings.phi2 + np.pi / 2)
    grid_xp = joint_distribution(state, settings_xp, seed=seed + 1)
    i_xx = mutual_information_2d(grid_xx)
    i_xp = mutual_information_2d(grid_xp)
    i_vn = von_neumann_mi(state) if include_von_neumann else None
    red1 = partial_trace(state, [state.layout.mode_slots[0]])
    red2 = partial_trace(state, [state.layout.mode_slots[1]])
    return SyncReport(
        I_xx=i_xx, I_xp=i_xp, I_combined=i_xx + i_xp, I_vn=i_vn,
        S1=resultant_length(red1), S2=resultant_length(red2),
        pearson_xx=_pearson(grid_xx))


def _entropy(rho: np.ndarray) -> float:
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals.min() < -1e-6:
        raise StateError(f"state not positive semidefinite (min eig {evals.min():.2e})")
    evals = np.clip(evals, 0.0, None)
    nz = evals > 0
    return float(-np.sum(evals[nz] * np.log(evals[nz])))


def von_neumann_mi(state: QuantumState) -> float:
    """I(rho_12) = S(rho_1) + S(rho_2) - S(rho_12), in nats."""
    slots = state.layout.mode_slots
    if len(slots) != 2:
        raise LayoutError("von Neumann mutual information needs two modes")
    osc = partial_trace(state, list(slots)) if state.layout.qubit is not None else state
    s1 = _entropy(partial_trace(osc, [0]).rho)
    s2 = _entropy(partial_trace(osc, [1]).rho)
    s12 = _entropy(osc.rho)
    mi = s1 + s2 - s12
    if mi < -1e-9:
        raise StateError(f"von Neumann MI {mi} below -1e-9")
    return max(mi, 0.0)


def phase_distribution(state: QuantumState, bins: int = 64) -> np.ndarray:
    """Canonical phase distribution, bin-averaged over [0, 2pi).

    Returns densities P(phi_k) at the ``bins`` bin centers. Bin averaging
    (a sinc factor per coherence) keeps sum P dphi = 1 exact for any bin
    count, since aliased coherences land on sinc zeros.
    """
    if bins < 8:
        raise ValueError("bins must be >= 8")
    osc = state
    if state.layout.qubit is not None or len(state.layout.dims) != 1:
        if state.layout.n_modes != 1:
            raise LayoutError("phase distribution needs a single mode")
        osc = partial_trace(state, [state.layout.mode_slots[0]])
    cutoff = osc.layout.dims[0]
    dphi = 2 * np.pi / bins
    centers = (np.arange(bins) + 0.5) * dphi
    k = np.arange(cutoff)[None, :] - np.arange(cutoff)[:, None]  # m - n
    weights = osc.rho * np.sinc(k * dphi / (2 * np.pi))
    phases = np.exp(1j * np.outer(centers, k.ravel()))
    dens = np.real(phases @ weights.ravel()) / (2 * np.pi)
    return np.clip(dens, 0.0, None)


def resultant_length(state: QuantumState, method: str = "canonical",
                     settings: ReadoutSettings | None = None) -> float:
    """Mean resultant length S = |<e^{i phi}>| of a single mode.

    'canonical' evaluates the closed form |sum_n <n+1|rho|n>| of the
    canonical phase distribution. 'wigner' integrates e^{i theta} against
    the angular marginal of the reconstructed Wigner function (comparison
    variant; needs readout settings).
    """
    osc = state
    if state.layout.qubit is not None or len(state.layout.dims) != 1:
        if state.layout.n_modes != 1:
            raise LayoutError("resultant length needs a single mode")
        osc = partial_trace(state, [state.layout.mode_slots[0]])
    if method == "canonical":
        first = np.sum(np.diagonal(osc.rho, offset=-1))  # sum_n <n+1|rho|n>
        return float(min(abs(first), 1.0 + 1e-9))
    if method == "wigner":
        grid = wigner(osc, settings or ReadoutSettings(shots=0))
        a1 = grid.axis_values(1)
        a2 = grid.axis_values(2)
        w = np.clip(np.real(grid.values), 0.0, None)
        theta = np.arctan2(a2[None, :], a1[:, None])
        total = w.sum()
        if total <= 0:
            raise DistributionError("Wigner mass vanished")
        z = np.sum(w * np.exp(1j * theta)) / total
        return float(abs(z))
    raise ValueError(f"unknown method {method!r}")
