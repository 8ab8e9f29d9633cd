"""Classical mean-field dynamics of the coupled oscillators.

Factorizing expectation values in the effective master equation gives

    d alpha_1/dt = (kappa_plus/2) alpha_1 - kappa_minus |alpha_1|^2 alpha_1
                   - (V/2)(alpha_1 - e^{+i phi} alpha_2) - i delta_1 alpha_1,

and symmetrically with e^{-i phi} for alpha_2.  Fixed points: the origin and
the synchronized family alpha_1 = e^{i(phi + theta)} |alpha|,
alpha_2 = e^{i theta} |alpha| with |alpha| = sqrt(kappa_plus / 2 kappa_minus).

Linear stability uses the reduced 2x2 Hermitian Jacobian whose closed-form
eigenvalues are {kappa_plus, kappa_plus - 2V} at the origin and
{-kappa_plus, -kappa_plus - 2V} at the synchronized family (growth and
relaxation rates of the mode intensities).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeanFieldError
from .lindblad import EffectiveParams

__all__ = [
    "MFState",
    "StabilityResult",
    "mf_rhs",
    "fixed_points",
    "stability",
    "integrate_mf",
    "lissajous",
    "trajectory_to_rows",
]


@dataclass(frozen=True)
class MFState:
    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha1) and np.isfinite(self.alpha2)):
            raise MeanFieldError("amplitudes must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2], dtype=complex)

    def norm(self) -> float:
        return float(np.abs(self.as_array()).max())


@dataclass(frozen=True)
class StabilityResult:
    fixed_point: MFState
    eigenvalues: tuple[float, float]
    stable: bool


def _rhs(alpha: np.ndarray, p: EffectiveParams) -> np.ndarray:
    a1, a2 = alpha
    d1 = (p.kappa_plus / 2) * a1 - p.kappa_minus * abs(a1) ** 2 * a1 \
        - (p.V / 2) * (a1 - np.exp(1j * p.phi) * a2) - 1j * p.delta1 * a1
    d2 = (p.kappa_plus / 2) * a2 - p.kappa_minus * abs(a2) ** 2 * a2 \
        - (p.V / 2) * (a2 - np.exp(-1j * p.phi) * a1) - 1j * p.delta2 * a2
    return np.array([d1, d2], dtype=complex)


def mf_rhs(state: MFState, params: EffectiveParams) -> MFState:
    """Time derivative of the mean-field amplitudes."""
    d = _rhs(state.as_array(), params)
    return MFState(complex(d[0]), complex(d[1]))


def fixed_points(params: EffectiveParams) -> list[MFState]:
    """The origin and the theta = 0 representative of the synchronized family."""
    if params.kappa_minus <= 0:
        raise MeanFieldError("kappa_minus = 0 gives unbounded amplitude; no fixed point")
    r = np.sqrt(params.kappa_plus / (2 * params.kappa_minus))
    return [MFState(0.0, 0.0), MFState(r * np.exp(1j * params.phi), r + 0j)]


def _residual(state: MFState, params: EffectiveParams) -> float:
    return float(np.abs(_rhs(state.as_array(), params)).max())


def stability(point: MFState, params: EffectiveParams) -> StabilityResult:
    """Closed-form linear stability of a fixed point.

    The reduced Jacobian is Hermitian,

        J = [[kappa_plus - 4 kappa_minus |a1|^2 - V,  V e^{+i phi}],
             [V e^{-i phi},  kappa_plus - 4 kappa_minus |a2|^2 - V]],

    reproducing the intensity growth/relaxation rates {kappa_plus,
    kappa_plus - 2V} (origin) and {-kappa_plus, -kappa_plus - 2V}
    (synchronized family).
    """
    resid = _residual(point, params)
    scale = max(params.kappa_plus, 1.0)
    if resid > 1e-9 * scale:
        raise MeanFieldError(
            f"not a fixed point: residual {resid:.3e} (scale {scale:.3e})")
    a1, a2 = point.alpha1, point.alpha2
    jac = np.array([
        [params.kappa_plus - 4 * params.kappa_minus * abs(a1) ** 2 - params.V,
         params.V * np.exp(1j * params.phi)],
        [params.V * np.exp(-1j * params.phi),
         params.kappa_plus - 4 * params.kappa_minus * abs(a2) ** 2 - params.V],
    ])
    evals = np.linalg.eigvalsh(jac)
    evals = tuple(float(v) for v in sorted(evals, reverse=True))
    return StabilityResult(point, evals, stable=all(v < 0 for v in evals))


def integrate_mf(initial: MFState, params: EffectiveParams, duration: float,
                 step: float) -> np.ndarray:
    """RK4 trajectory; rows (t, alpha1, alpha2).

    Raises when the amplitude exceeds ten times the mean-field radius,
    which signals parameters outside the stable regime.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    nsteps = max(1, int(np.ceil(duration / step)))
    h = duration / nsteps
    radius = np.sqrt(params.kappa_plus / (2 * params.kappa_minus)) \
        if params.kappa_minus > 0 else np.inf
    alpha = initial.as_array()
    out = np.empty((nsteps + 1, 3), dtype=complex)
    out[0] = (0.0, *alpha)
    for i in range(nsteps):
        k1 = _rhs(alpha, params)
        k2 = _rhs(alpha + 0.5 * h * k1, params)
        k3 = _rhs(alpha + 0.5 * h * k2, params)
        k4 = _rhs(alpha + h * k3, params)
        alpha = alpha + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.abs(alpha).max() > 10 * radius:
            raise MeanFieldError(
                f"trajectory diverged (|alpha| > 10 x mean-field radius) at t={i * h:.3e}")
        out[i + 1] = ((i + 1) * h, *alpha)
    return out


def lissajous(params: EffectiveParams, phi_values, n_points: int = 256,
              transient: float | None = None) -> dict[float, np.ndarray]:
    """Closed x1-x2 trajectories of the synchronized solution, one per phi.

    For each phi the mean-field flow is integrated from a generic initial
    condition onto the synchronized family; the emitted curve is one period
    of the free-phase orbit, x_i = sqrt(2) Re alpha_i, columns (x1, x2).
    """
    out = {}
    for phi in np.atleast_1d(phi_values):
        p = params.replace(phi=float(phi), delta1=0.0, delta2=0.0)
        duration = transient if transient is not None else 25.0 / p.kappa_plus
        step = 0.02 / p.kappa_plus
        traj = integrate_mf(MFState(0.31 + 0.17j, 0.23 - 0.11j), p, duration, step)
        a1, a2 = traj[-1, 1], traj[-1, 2]
        resid = _residual(MFState(a1, a2), p)
        if resid > 1e-4 * p.kappa_plus:
            raise MeanFieldError(
                f"flow did not reach the synchronized family (residual {resid:.2e})")
        s = np.linspace(0, 2 * np.pi, n_points, endpoint=False)
        x1 = np.sqrt(2.0) * np.real(a1 * np.exp(-1j * s))
        x2 = np.sqrt(2.0) * np.real(a2 * np.exp(-1j * s))
        out[float(phi)] = np.column_stack([x1, x2])
    return out


def trajectory_to_rows(traj: np.ndarray) -> list[dict]:
    """CSV-ready rows (t, Re/Im alpha_1, Re/Im alpha_2)."""
    rows = []
    for t, a1, a2 in traj:
        rows.append({
            "t": float(t.real),
            "re_alpha1": float(a1.real), "im_alpha1": float(a1.imag),
            "re_alpha2": float(a2.real), "im_alpha2": float(a2.imag),
        })
    return rows
