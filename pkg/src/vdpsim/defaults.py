"""Default operating points of the two-oscillator experiment.

Two regimes are built in: 'classical' (gain/loss ratio 0.14, mean occupation
near 3.5 with coupling on) and 'quantum' (ratio 0.42, occupation near 1.4).
Rates are quoted as angular frequencies; the *_KHZ tables carry the
quoted rate/2pi values in kHz and the pulse tables the sideband
parameters that realize them.

The kappa_plus formula evaluated on the quoted classical pulse set gives
~2.5x the quoted rate (see pulses.rate_report); schedules synthesized by
matched_schedule() hit target rates exactly and are used wherever formula
consistency matters (engine cross-validation).
"""

from __future__ import annotations

import numpy as np

from .lindblad import EffectiveParams
from .pulses import PulseSchedule, standard_cycle

__all__ = [
    "TWO_PI",
    "MODE_FREQUENCIES_HZ",
    "RATES_KHZ",
    "PULSE_TABLE",
    "NOISE_DEFAULTS",
    "effective_params",
    "table_schedule",
    "matched_schedule",
    "single_vdp_params",
]

TWO_PI = 2 * np.pi

# axial mode frequencies (context metadata only; dynamics live in the
# rotating frame)
MODE_FREQUENCIES_HZ = (522e3, 906e3)

# quoted effective rates, rate/2pi in kHz
RATES_KHZ = {
    "classical": {"kappa_plus": 0.12, "kappa_minus": 0.017, "V": 0.1},
    "quantum": {"kappa_plus": 0.10, "kappa_minus": 0.042, "V": 0.1},
}

# sideband parameters per regime: carrier Rabi frequencies (rad/s),
# Lamb-Dicke factors, pulse durations (s); per-mode entries ordered (M1, M2)
PULSE_TABLE = {
    "classical": {
        "eta": (0.094, 0.072),
        "bsb_rabi": (TWO_PI * 0.12e6, TWO_PI * 0.12e6),
        "rsb2_rabi": (TWO_PI * 0.22e6, TWO_PI * 0.22e6),
        "bsb_tau": (17.10e-6, 22.46e-6),
        "rsb2_tau": (48.77e-6, 84.06e-6),
        "sync_rabi1": TWO_PI * 0.048e6,
        "sync_tau": 24e-6,
    },
    "quantum": {
        "eta": (0.094, 0.072),
        "bsb_rabi": (TWO_PI * 0.11e6, TWO_PI * 0.11e6),
        "rsb2_rabi": (TWO_PI * 0.22e6, TWO_PI * 0.22e6),
        "bsb_tau": (17.10e-6, 22.45e-6),
        "rsb2_tau": (97.54e-6, 168.12e-6),
        "sync_rabi1": TWO_PI * 0.048e6,
        "sync_tau": 32e-6,
    },
}

# coupling/frequency fluctuation statistics for the noise ensembles
NOISE_DEFAULTS = {"coupling_rel_sigma": 0.02, "freq_sigma_hz": 37.0,
                  "ensemble_size": 20}


def quoted_rates_rad_s(regime: str) -> dict[str, float]:
    table = RATES_KHZ[regime]
    return {k: TWO_PI * 1e3 * v for k, v in table.items()}


def effective_params(regime: str = "classical", V_ratio: float = 1.0,
                     phi: float = 0.0, detuning_hz: float = 0.0,
                     drive_amp: float = 0.0, drive_phase: float = 0.0)\
        -> EffectiveParams:
    """Effective-model parameters at the quoted rates of a regime."""
    rates = quoted_rates_rad_s(regime)
    return EffectiveParams(
        kappa_plus=rates["kappa_plus"], kappa_minus=rates["kappa_minus"],
        V=rates["V"] * V_ratio, phi=phi,
        delta1=0.0, delta2=TWO_PI * detuning_hz,
        drive_amp=drive_amp, drive_phase=drive_phase)


def single_vdp_params(ratio: float, kappa_plus: float = TWO_PI * 110.0,
                      **kw) -> EffectiveParams:
    """Single-oscillator parameters at fixed gain and given loss ratio."""
    return EffectiveParams(kappa_plus=kappa_plus, kappa_minus=kappa_plus * ratio,
                           **kw)


def table_schedule(regime: str = "classical", phi: float = 0.0,
                   detunings: tuple[float, float] = (0.0, 0.0),
                   include_sync: bool = True) -> PulseSchedule:
    """One cycle built from the quoted sideband parameters."""
    t = PULSE_TABLE[regime]
    bsb = [(t["bsb_rabi"][m], t["eta"][m], t["bsb_tau"][m]) for m in (0, 1)]
    rsb2 = [(t["rsb2_rabi"][m], t["eta"][m], t["rsb2_tau"][m]) for m in (0, 1)]
    sync = (t["sync_rabi1"], t["eta"], phi, t["sync_tau"]) if include_sync else None
    return standard_cycle(bsb, rsb2, sync, detunings=detunings)


def matched_schedule(params: EffectiveParams, regime: str = "quantum",
                     detunings: tuple[float, float] | None = None) -> PulseSchedule:
    """Schedule whose per-cycle formula rates equal ``params`` exactly.

    Keeps the regime's carrier Rabis and Lamb-Dicke factors and solves for
    the durations; with t_j = c_j sqrt(T) and T = sum t_j the cycle period
    is T = (sum c_j)^2 in closed form.
    """
    t = PULSE_TABLE[regime]
    eta = t["eta"]
    coeffs = []
    c_bsb = [2 * np.sqrt(params.kappa_plus) / (t["bsb_rabi"][m] * eta[m])
             for m in (0, 1)]
    coeffs += c_bsb
    c_rsb2 = [4 * np.sqrt(params.kappa_minus) / (t["rsb2_rabi"][m] * eta[m] ** 2)
              for m in (0, 1)]
    coeffs += c_rsb2
    c_sync = 0.0
    if params.V > 0:
        c_sync = 2 * np.sqrt(params.V) / (t["sync_rabi1"] * eta[0])
        coeffs.append(c_sync)
    sqrt_t = sum(coeffs)
    bsb = [(t["bsb_rabi"][m], eta[m], c_bsb[m] * sqrt_t) for m in (0, 1)]
    rsb2 = [(t["rsb2_rabi"][m], eta[m], c_rsb2[m] * sqrt_t) for m in (0, 1)]
    sync = (t["sync_rabi1"], eta, params.phi, c_sync * sqrt_t) \
        if params.V > 0 else None
    if detunings is None:
        detunings = (params.delta1, params.delta2)
    return standard_cycle(bsb, rsb2, sync, detunings=detunings)
