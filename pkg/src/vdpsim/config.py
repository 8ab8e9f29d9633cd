"""Experiment configuration: JSON schema, validation, hashing.

A config file is a JSON object; all rates are entered as frequency/2pi in
Hz or kHz where the key says so, and converted to angular frequencies on
load. See README for the full schema. Example:

    {
      "scenario": "sync",
      "engine": "effective",
      "seed": 20260811,
      "cutoffs": [14, 14],
      "effective": {"regime": "classical", "v_ratio": 1.0, "phi": 0.0},
      "readout": {"beta_max": 3.0, "points": 32, "shots": 0},
      "noise": {"coupling_rel_sigma": 0.02, "freq_sigma_hz": 37.0,
                "ensemble_size": 20, "shots": 0},
      "output_dir": "runs/sync-classical"
    }

The config hash covers every semantically meaningful field (anything that
changes the produced numbers); output_dir and workers are excluded.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .defaults import NOISE_DEFAULTS, TWO_PI, effective_params, matched_schedule, table_schedule
from .errors import ConfigError
from .lindblad import EffectiveParams
from .pulses import PulseSchedule, PulseSegment
from .tomography import ReadoutSettings

__all__ = [
    "NoiseSpec",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "save_config",
    "config_hash",
    "SCENARIOS",
]

SCENARIOS = ("single-vdp", "limit-cycle", "sync", "arnold", "sense",
             "meanfield", "tomo-check")
ENGINES = ("effective", "stroboscopic")


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian parameter-fluctuation ensemble plus projection-noise shots."""

    coupling_rel_sigma: float = NOISE_DEFAULTS["coupling_rel_sigma"]
    freq_sigma_hz: float = NOISE_DEFAULTS["freq_sigma_hz"]
    ensemble_size: int = NOISE_DEFAULTS["ensemble_size"]
    shots: int = 0

    def __post_init__(self):
        if self.coupling_rel_sigma < 0 or self.freq_sigma_hz < 0:
            raise ConfigError("noise sigmas must be >= 0")
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    seed: int
    engine: str = "effective"
    output_dir: str = "runs/out"
    cutoffs: tuple[int, int] = (12, 12)
    single_cutoff: int = 30
    cycles: tuple[int, int] = (15, 10)
    readout: ReadoutSettings = field(default_factory=lambda: ReadoutSettings(shots=0))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    effective: EffectiveParams | None = None
    schedule: PulseSchedule | None = None
    regime: str = "classical"
    phis: tuple[float, ...] = (0.0, np.pi / 2, np.pi)
    ratios: tuple[float, ...] = ()
    v_ratios: tuple[float, ...] = ()
    detunings_hz: tuple[float, ...] = ()
    drive_amp_hz: float = 0.0
    equivalence_bound: float = 0.25
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if any(c < 2 for c in self.cutoffs) or self.single_cutoff < 2:
            raise ConfigError("cutoffs must be >= 2")
        if any(n < 0 for n in self.cycles):
            raise ConfigError("cycle counts must be >= 0")

    def resolved_effective(self) -> EffectiveParams:
        if self.effective is not None:
            return self.effective
        return effective_params(self.regime)

    def resolved_schedule(self) -> PulseSchedule:
        if self.schedule is not None:
            return self.schedule
        return matched_schedule(self.resolved_effective(), self.regime)


def _segment_to_dict(seg: PulseSegment) -> dict:
    return {
        "kind": seg.kind, "duration": seg.duration, "rabi": seg.rabi,
        "eta": list(seg.eta) if isinstance(seg.eta, tuple) else seg.eta,
        "phase": seg.phase, "mode": seg.mode,
    }


def _segment_from_dict(d: dict) -> PulseSegment:
    eta = d.get("eta", 0.1)
    if isinstance(eta, list):
        eta = tuple(eta)
    return PulseSegment(kind=d["kind"], duration=d.get("duration", 0.0),
                        rabi=d.get("rabi", 0.0), eta=eta,
                        phase=d.get("phase", 0.0), mode=d.get("mode", 0))


def _schedule_to_dict(sched: PulseSchedule) -> dict:
    return {"segments": [_segment_to_dict(s) for s in sched.segments],
            "detunings": list(sched.detunings)}


def _schedule_from_dict(d: dict) -> PulseSchedule:
    if "segments" in d:
        return PulseSchedule(
            tuple(_segment_from_dict(s) for s in d["segments"]),
            detunings=tuple(d.get("detunings", (0.0, 0.0))))
    # synthesized form: regime template plus target phase/detuning
    regime = d.get("regime", "classical")
    phi = float(d.get("phi", 0.0))
    det = TWO_PI * float(d.get("detuning_hz", 0.0))
    if d.get("matched", True):
        params = effective_params(regime, phi=phi).replace(delta2=det)
        return matched_schedule(params, regime)
    return table_schedule(regime, phi=phi, detunings=(0.0, det))


def _effective_from_dict(d: dict) -> EffectiveParams:
    if "kappa_plus" in d:
        return EffectiveParams(
            kappa_plus=float(d["kappa_plus"]),
            kappa_minus=float(d.get("kappa_minus", 0.0)),
            V=float(d.get("V", 0.0)), phi=float(d.get("phi", 0.0)),
            delta1=float(d.get("delta1", 0.0)), delta2=float(d.get("delta2", 0.0)),
            drive_amp=float(d.get("drive_amp", 0.0)),
            drive_phase=float(d.get("drive_phase", 0.0)))
    base = effective_params(
        d.get("regime", "classical"), V_ratio=float(d.get("v_ratio", 1.0)),
        phi=float(d.get("phi", 0.0)), detuning_hz=float(d.get("detuning_hz", 0.0)),
        drive_amp=TWO_PI * float(d.get("drive_amp_hz", 0.0)),
        drive_phase=float(d.get("drive_phase", 0.0)))
    return base


def _effective_to_dict(p: EffectiveParams) -> dict:
    return {"kappa_plus": p.kappa_plus, "kappa_minus": p.kappa_minus, "V": p.V,
            "phi": p.phi, "delta1": p.delta1, "delta2": p.delta2,
            "drive_amp": p.drive_amp, "drive_phase": p.drive_phase}


def config_from_dict(raw: dict) -> ExperimentConfig:
    try:
        readout = ReadoutSettings(**raw.get("readout", {"shots": 0}))
        noise = NoiseSpec(**raw.get("noise", {}))
        effective = _effective_from_dict(raw["effective"]) if "effective" in raw else None
        schedule = _schedule_from_dict(raw["schedule"]) if "schedule" in raw else None
        kwargs = dict(
            scenario=raw["scenario"], seed=int(raw["seed"]),
            engine=raw.get("engine", "effective"),
            output_dir=raw.get("output_dir", "runs/out"),
            cutoffs=tuple(raw.get("cutoffs", (12, 12))),
            single_cutoff=int(raw.get("single_cutoff", 30)),
            cycles=tuple(raw.get("cycles", (15, 10))),
            readout=readout, noise=noise, effective=effective, schedule=schedule,
            regime=raw.get("regime", "classical"),
            phis=tuple(raw.get("phis", (0.0, np.pi / 2, np.pi))),
            ratios=tuple(raw.get("ratios", ())),
            v_ratios=tuple(raw.get("v_ratios", ())),
            detunings_hz=tuple(raw.get("detunings_hz", ())),
            drive_amp_hz=float(raw.get("drive_amp_hz", 0.0)),
            equivalence_bound=float(raw.get("equivalence_bound", 0.25)),
            workers=int(raw.get("workers", 1)),
        )
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return ExperimentConfig(**kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = {
        "scenario": cfg.scenario, "seed": cfg.seed, "engine": cfg.engine,
        "output_dir": cfg.output_dir, "cutoffs": list(cfg.cutoffs),
        "single_cutoff": cfg.single_cutoff, "cycles": list(cfg.cycles),
        "readout": asdict(cfg.readout), "noise": asdict(cfg.noise),
        "regime": cfg.regime, "phis": list(cfg.phis), "ratios": list(cfg.ratios),
        "v_ratios": list(cfg.v_ratios), "detunings_hz": list(cfg.detunings_hz),
        "drive_amp_hz": cfg.drive_amp_hz,
        "equivalence_bound": cfg.equivalence_bound, "workers": cfg.workers,
    }
    if cfg.effective is not None:
        out["effective"] = _effective_to_dict(cfg.effective)
    if cfg.schedule is not None:
        out["schedule"] = _schedule_to_dict(cfg.schedule)
    return out


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(raw)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest over the semantic fields (excludes output_dir and workers)."""
    semantic = config_to_dict(cfg)
    semantic.pop("output_dir", None)
    semantic.pop("workers", None)
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def with_overrides(cfg: ExperimentConfig, *, seed=None, engine=None, shots=None,
                   output_dir=None, workers=None) -> ExperimentConfig:
    """CLI-style overrides on a loaded config."""
    out = cfg
    if seed is not None:
        out = replace(out, seed=int(seed))
    if engine is not None:
        out = replace(out, engine=engine)
    if shots is not None:
        out = replace(out, readout=replace(out.readout, shots=int(shots)),
                      noise=replace(out.noise, shots=int(shots)))
    if output_dir is not None:
        out = replace(out, output_dir=str(output_dir))
    if workers is not None:
        out = replace(out, workers=int(workers))
    return out
