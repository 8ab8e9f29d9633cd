"""Experiment orchestration: scenarios, sweeps, noise ensembles, persistence.

Every scenario writes plain CSV artifacts plus one ``manifest.json`` into
its output directory. Artifacts are reproducible byte-for-byte from
(config, seed): all stochastic draws derive from counter-based per-point
seeds, so parallel and serial execution agree.

Scenario map: 'single-vdp' (occupation/radius scan), 'limit-cycle'
(relaxation from a coherent mixture), 'sync' (joint distributions and
metrics per coupling phase), 'arnold' (coupling-detuning sweep of the
combined mutual information), 'sense' (phase locking of the undriven mode
versus detuning), 'meanfield' (fixed points, stability, Lissajous curves),
'tomo-check' (reconstruction round-trip report).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import ExperimentConfig, NoiseSpec, config_hash, config_to_dict
from .defaults import TWO_PI, effective_params, matched_schedule, quoted_rates_rad_s
from .errors import VdpError
from .hilbert import (QuantumState, coherent_state, expectation, fock_state,
                      mode_annihilation, mode_populations,
                      opposite_coherent_mixture, partial_trace, tensor_states,
                      two_modes, vacuum_state)
from .lindblad import (EffectiveParams, evolve, recommended_step,
                       single_mode_generator, steady_state_direct,
                       steady_state_family, trace_distance, vdp_generator)
from .meanfield import MFState, fixed_points, integrate_mf, lissajous, stability, trajectory_to_rows
from .pulses import (fresh_register, rate_report, run_protocol,
                     stroboscopic_steady_state)
from .syncmetrics import combined_mi, resultant_length
from .tomography import (Grid2D, ReadoutSettings, char_function,
                         donut_radius, joint_distribution, wigner, wigner_direct)

__all__ = [
    "SweepResult",
    "noise_ensemble",
    "arnold_sweep",
    "sense_sweep",
    "run_scenario",
    "contour_polylines",
]


# --- noise ensembles ---------------------------------------------------------

def noise_ensemble(base: EffectiveParams, spec: NoiseSpec, seed: int)\
        -> list[EffectiveParams]:
    """i.i.d. Gaussian draws of coupling strength and frequency difference."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & 0x7FFFFFFF])))
    out = []
    for _ in range(spec.ensemble_size):
        v = base.V * (1.0 + rng.normal(0.0, spec.coupling_rel_sigma)) \
            if spec.coupling_rel_sigma > 0 else base.V
        d2 = base.delta2 + TWO_PI * rng.normal(0.0, spec.freq_sigma_hz) \
            if spec.freq_sigma_hz > 0 else base.delta2
        out.append(base.replace(V=max(v, 0.0), delta2=d2))
    return out


# --- deterministic CSV/manifest writers --------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_csv(path, rows: list[dict], header_note: str = "") -> None:
    with open(path, "w") as fh:
        if header_note:
            fh.write(f"# {header_note}\n")
        if not rows:
            fh.write("\n")
            return
        cols = list(rows[0].keys())
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")


class RunContext:
    """Collects check flags and output files for the manifest."""

    def __init__(self, cfg: ExperimentConfig, out_dir):
        import pathlib
        self.cfg = cfg
        self.dir = pathlib.Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.checks: dict[str, bool] = {}
        self.info: dict = {}
        self.outputs: list[str] = []
        self.stage = "init"
        self.started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def check(self, name: str, ok: bool) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    def checkpoint(self, name: str, state: QuantumState,
                   adequacy: bool = True) -> None:
        """Conservation-law audit: trace, Hermiticity, positivity, truncation."""
        try:
            state.validate(trace_tol=1e-6, herm_tol=1e-8, min_eig=-1e-6)
            self.check(f"{name}.conservation", True)
        except VdpError:
            self.check(f"{name}.conservation", False)
            raise
        if adequacy:
            top2 = max(mode_populations(state, m)[-2:].sum()
                       for m in range(state.layout.n_modes))
            self.check(f"{name}.cutoff_adequate", top2 < 1e-4)

    def save_grid(self, grid: Grid2D, name: str) -> None:
        path = self.dir / name
        grid.to_csv(path)
        self.outputs.append(name)

    def save_rows(self, rows: list[dict], name: str, note: str = "") -> None:
        write_csv(self.dir / name, rows, note)
        self.outputs.append(name)

    def write_manifest(self, failed_stage: str | None = None,
                       error: str | None = None) -> None:
        manifest = {
            "scenario": self.cfg.scenario,
            "engine": self.cfg.engine,
            "seed": self.cfg.seed,
            "version": __version__,
            "config": config_to_dict(self.cfg),
            "config_hash": config_hash(self.cfg),
            "checks": self.checks,
            "info": self.info,
            "outputs": sorted(self.outputs),
            "failed_stage": failed_stage,
            "error": error,
            "started_utc": self.started,
            "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


# --- sweeps -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    coordinates: tuple[tuple[float, float], ...]  # (V/V0, detuning Hz)
    mean: tuple[float, ...]
    std: tuple[float, ...]
    samples: tuple[tuple[float, ...], ...]
    reports: tuple[dict, ...]

    def rows(self) -> list[dict]:
        out = []
        for (v, d), m, s in zip(self.coordinates, self.mean, self.std):
            out.append({"v_ratio": v, "detuning_hz": d,
                        "mean_I_nats": m, "std_I_nats": s})
        return out


def _metric_settings(readout: ReadoutSettings, noise: NoiseSpec) -> ReadoutSettings:
    return replace(readout, shots=noise.shots)


def _arnold_point(task) -> tuple[int, dict]:
    (index, v_ratio, det_hz, regime, cutoffs, readout, noise, seed) = task
    base = effective_params(regime, V_ratio=v_ratio, phi=0.0, detuning_hz=det_hz)
    members = noise_ensemble(base, noise, seed)
    layout = two_modes(*cutoffs)
    settings = _metric_settings(readout, noise)
    values = []
    first = {}
    top2 = 0.0
    try:
        for k, member in enumerate(members):
            ss = steady_state_direct(vdp_generator(member, layout))
            rep = combined_mi(ss, settings, seed=seed + 7919 * k,
                              include_von_neumann=(k == 0))
            values.append(rep.I_combined)
            if k == 0:
                first = rep.as_row()
                top2 = max(mode_populations(ss, m)[-2:].sum() for m in (0, 1))
    except VdpError as exc:
        return index, {"v_ratio": v_ratio, "detuning_hz": det_hz,
                       "mean": float("nan"), "std": float("nan"),
                       "samples": (), "report": first, "top2": float(top2),
                       "error": f"{type(exc).__name__}: {exc}"}
    values = np.array(values)
    return index, {
        "v_ratio": v_ratio, "detuning_hz": det_hz,
        "mean": float(values.mean()), "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
        "samples": tuple(float(v) for v in values),
        "report": first, "top2": float(top2), "error": None,
    }


def _run_tasks(tasks, fn, workers: int):
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, payload in pool.map(fn, tasks):
                results[index] = payload
    else:
        for task in tasks:
            index, payload = fn(task)
            results[index] = payload
    return [results[i] for i in range(len(tasks))]


def arnold_sweep(cfg: ExperimentConfig, v_grid=None, detuning_grid=None,
                 ctx: RunContext | None = None) -> SweepResult:
    """Combined mutual information over the coupling-detuning plane.

    Each coordinate averages the metric over the Gaussian noise ensemble
    (parameter draws per NoiseSpec); per-point failures are recorded and
    skipped, not fatal.
    """
    v_grid = tuple(v_grid if v_grid is not None else
                   (cfg.v_ratios or (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)))
    detuning_grid = tuple(detuning_grid if detuning_grid is not None else
                          (cfg.detunings_hz or (0.0, 25.0, 50.0, 75.0, 100.0,
                                                150.0, 200.0, 250.0)))
    tasks = []
    coords = []
    for i, v in enumerate(v_grid):
        for j, d in enumerate(detuning_grid):
            index = len(tasks)
            seed = int(np.random.SeedSequence(
                [cfg.seed & 0x7FFFFFFF, i, j]).generate_state(1)[0] & 0x7FFFFFFF)
            tasks.append((index, float(v), float(d), cfg.regime, cfg.cutoffs,
                          cfg.readout, cfg.noise, seed))
            coords.append((float(v), float(d)))
    results = _run_tasks(tasks, _arnold_point, cfg.workers)
    failures = {f"({r['v_ratio']}, {r['detuning_hz']})": r["error"]
                for r in results if r.get("error")}
    if ctx is not None:
        ctx.check("sweep.cutoff_adequate",
                  max(r["top2"] for r in results) < 1e-4)
        ctx.check("sweep.no_point_failures", not failures)
        if failures:
            ctx.info["failed_points"] = failures
    return SweepResult(
        coordinates=tuple(coords),
        mean=tuple(r["mean"] for r in results),
        std=tuple(r["std"] for r in results),
        samples=tuple(r["samples"] for r in results),
        reports=tuple(r["report"] for r in results))


def _sense_point(task) -> tuple[int, dict]:
    (index, det_hz, regime, cutoffs, drive_amp, noise, seed, want_grids,
     readout) = task
    base = effective_params(regime, V_ratio=1.0, phi=np.pi,
                            detuning_hz=det_hz).replace(drive_amp=drive_amp)
    members = noise_ensemble(base, noise, seed)
    layout = two_modes(*cutoffs)
    s1_vals, s2_vals = [], []
    grids = {}
    top2 = 0.0
    try:
        states = steady_state_family([vdp_generator(m, layout) for m in members])
        for k, ss in enumerate(states):
            red1 = partial_trace(ss, [0])
            red2 = partial_trace(ss, [1])
            s1_vals.append(resultant_length(red1))
            s2_vals.append(resultant_length(red2))
            if k == 0:
                top2 = max(mode_populations(ss, m)[-2:].sum() for m in (0, 1))
                if want_grids:
                    grids["m1"] = wigner(ss, replace(readout, shots=0), mode=0)
                    grids["m2"] = wigner(ss, replace(readout, shots=0), mode=1)
        # drive-off control at the same detuning (exact, no ensemble)
        off = base.replace(drive_amp=0.0)
        ss_off = steady_state_direct(vdp_generator(off, layout))
        s2_off = resultant_length(partial_trace(ss_off, [1]))
    except VdpError as exc:
        return index, {"detuning_hz": det_hz, "S2_mean": float("nan"),
                       "S2_std": float("nan"), "S1_mean": float("nan"),
                       "S1_std": float("nan"), "S2_drive_off": float("nan"),
                       "grids": {}, "top2": float(top2),
                       "error": f"{type(exc).__name__}: {exc}"}
    s1 = np.array(s1_vals)
    s2 = np.array(s2_vals)
    return index, {
        "detuning_hz": det_hz,
        "S2_mean": float(s2.mean()),
        "S2_std": float(s2.std(ddof=1)) if len(s2) > 1 else 0.0,
        "S1_mean": float(s1.mean()),
        "S1_std": float(s1.std(ddof=1)) if len(s1) > 1 else 0.0,
        "S2_drive_off": float(s2_off),
        "grids": grids, "top2": float(top2), "error": None,
    }


def sense_sweep(cfg: ExperimentConfig, detuning_grid=None,
                ctx: RunContext | None = None) -> list[dict]:
    """Mean resultant length of the undriven mode versus frequency detuning.

    The driven mode is held resonant with the external drive; the coupling
    phase is pi. Wigner grids of both modes are kept at zero detuning and at
    the largest detuning magnitude.
    """
    if cfg.drive_amp_hz <= 0:
        raise VdpError("sense scenario needs drive_amp_hz > 0")
    detuning_grid = tuple(detuning_grid if detuning_grid is not None else
                          (cfg.detunings_hz or
                           (-200.0, -150.0, -100.0, -50.0, 0.0,
                            50.0, 100.0, 150.0, 200.0)))
    extremes = (0.0, max(detuning_grid, key=abs))
    tasks = []
    for j, d in enumerate(detuning_grid):
        seed = int(np.random.SeedSequence(
            [cfg.seed & 0x7FFFFFFF, 1, j]).generate_state(1)[0] & 0x7FFFFFFF)
        tasks.append((j, float(d), cfg.regime, cfg.cutoffs,
                      TWO_PI * cfg.drive_amp_hz, cfg.noise, seed,
                      float(d) in extremes, cfg.readout))
    results = _run_tasks(tasks, _sense_point, cfg.workers)
    failures = {r["detuning_hz"]: r["error"] for r in results if r.get("error")}
    if ctx is not None:
        ctx.check("sense.cutoff_adequate",
                  max(r["top2"] for r in results) < 1e-4)
        ctx.check("sense.no_point_failures", not failures)
        if failures:
            ctx.info["failed_points"] = failures
        for r in results:
            for name, grid in r["grids"].items():
                ctx.save_grid(grid, f"wigner_{name}_det{int(r['detuning_hz'])}.csv")
            r.pop("grids")
    else:
        for r in results:
            r.pop("grids")
    return results


# --- contour extraction -------------------------------------------------------

def contour_polylines(xs, ys, z, level: float) -> list[np.ndarray]:
    """Marching-squares polylines of z(x, y) = level; z indexed [ix, iy]."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    z = np.asarray(z, float)
    segs = []

    def cross(p1, v1, p2, v2):
        t = (level - v1) / (v2 - v1)
        return (p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1]))

    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [((xs[i], ys[j]), z[i, j]),
                       ((xs[i + 1], ys[j]), z[i + 1, j]),
                       ((xs[i + 1], ys[j + 1]), z[i + 1, j + 1]),
                       ((xs[i], ys[j + 1]), z[i, j + 1])]
            pts = []
            for a in range(4):
                (p1, v1), (p2, v2) = corners[a], corners[(a + 1) % 4]
                if (v1 - level) * (v2 - level) < 0:
                    pts.append(cross(p1, v1, p2, v2))
            if len(pts) >= 2:
                segs.append((pts[0], pts[1]))
            if len(pts) == 4:  # saddle cell: keep both crossings
                segs.append((pts[2], pts[3]))
    # chain segments that share endpoints
    polylines = []
    remaining = [list(s) for s in segs]
    tol = 1e-12 + 1e-9 * (abs(xs).max() + abs(ys).max())

    def same(a, b):
        return abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol

    while remaining:
        line = remaining.pop(0)
        grew = True
        while grew:
            grew = False
            for k, seg in enumerate(remaining):
                if same(line[-1], seg[0]):
                    line.append(seg[1]); remaining.pop(k); grew = True; break
                if same(line[-1], seg[1]):
                    line.append(seg[0]); remaining.pop(k); grew = True; break
                if same(line[0], seg[1]):
                    line.insert(0, seg[0]); remaining.pop(k); grew = True; break
                if same(line[0], seg[0]):
                    line.insert(0, seg[1]); remaining.pop(k); grew = True; break
        polylines.append(np.array(line))
    return polylines


# --- scenarios -----------------------------------------------------------------

def _scenario_single_vdp(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "single-vdp scan"
    ratios = cfg.ratios or tuple(np.geomspace(0.1, 10.0, 9))
    kappa_plus = TWO_PI * 110.0
    rows = []
    for k, ratio in enumerate(ratios):
        params = EffectiveParams(kappa_plus=kappa_plus,
                                 kappa_minus=kappa_plus * float(ratio))
        gen = single_mode_generator(params, cfg.single_cutoff)
        ss = steady_state_direct(gen)
        ctx.checkpoint(f"ratio{k}", ss)
        grid = wigner(ss, replace(cfg.readout, shots=0))
        radius = donut_radius(grid)
        nbar = float(np.real(np.arange(cfg.single_cutoff) @ np.diag(ss.rho).real))
        rows.append({"ratio": float(ratio), "nbar": nbar, "alpha_p": radius,
                     "alpha_meanfield": float(np.sqrt(1 / (2 * ratio)))})
        if k in (0, len(ratios) - 1):
            ctx.save_grid(grid, f"wigner_ratio{k}.csv")
    ctx.save_rows(rows, "single_vdp_scan.csv",
                  "columns: ratio (kappa_minus/kappa_plus), nbar, alpha_p, "
                  "alpha_meanfield (dimensionless)")
    small = [r for r in rows if r["ratio"] <= 0.15]
    ctx.check("radius.matches_meanfield_small_ratio", all(
        abs(r["alpha_p"] - r["alpha_meanfield"]) <= 0.10 * r["alpha_meanfield"]
        for r in small))


def _scenario_limit_cycle(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "limit-cycle relaxation"
    ratio = 0.14
    kappa_plus = TWO_PI * 110.0
    params = EffectiveParams(kappa_plus=kappa_plus, kappa_minus=kappa_plus * ratio)
    cutoff = cfg.single_cutoff
    gen = single_mode_generator(params, cutoff)
    state = opposite_coherent_mixture(3.0, cutoff)
    step = recommended_step(gen)
    times = (0.0, 0.5, 1.0, 2.0, 5.0, 12.0)
    rows = []
    a_op = mode_annihilation(state.layout, 0)
    n_op = a_op.dagger() @ a_op
    prev_t = 0.0
    for k, t_units in enumerate(times):
        t = t_units / params.kappa_plus
        if t > prev_t:
            state = evolve(state, gen, t - prev_t, step)
            prev_t = t
        ctx.checkpoint(f"t{k}", state)
        grid = wigner(state, replace(cfg.readout, shots=0, beta_max=4.0))
        ctx.save_grid(grid, f"wigner_t{k}.csv")
        rows.append({
            "t_over_relaxation": t_units,
            "abs_mean_amplitude": abs(expectation(state, a_op)),
            "nbar": expectation(state, n_op).real,
            "radial_peak": donut_radius(grid),
        })
    ctx.save_rows(rows, "limit_cycle_timeseries.csv",
                  "columns: t (units of 1/kappa_plus), |<a>|, nbar, radial peak")
    target = steady_state_direct(gen)
    ctx.info["final_distance_to_steady_state"] = trace_distance(state, target)
    ctx.check("limit_cycle.phase_erased", rows[-1]["abs_mean_amplitude"] < 1e-6)
    ctx.check("limit_cycle.converged",
              ctx.info["final_distance_to_steady_state"] < 0.02)


def _sync_state_for_phase(cfg: ExperimentConfig, phi: float, ctx: RunContext):
    params = effective_params(cfg.regime, V_ratio=1.0, phi=phi)
    layout = two_modes(*cfg.cutoffs)
    if cfg.engine == "effective":
        return steady_state_direct(vdp_generator(params, layout)), params
    sched = matched_schedule(params, cfg.regime)
    reg = fresh_register(*cfg.cutoffs)
    out = run_protocol(reg, sched, cfg.cycles[0], cfg.cycles[1], seed=cfg.seed)
    osc = partial_trace(out, [1, 2])
    # engine cross-validation: the cycle map's fixed point must sit near the
    # effective steady state
    ss_strobo = stroboscopic_steady_state(sched, reg, tol=1e-6, seed=cfg.seed)
    target = steady_state_direct(vdp_generator(params, layout))
    dist = trace_distance(partial_trace(ss_strobo, [1, 2]), target)
    ctx.info[f"engine_distance_phi{phi:.3f}"] = dist
    ctx.check(f"engines_agree_phi{phi:.3f}", dist < cfg.equivalence_bound)
    return osc, params


def _grid_covariance(grid: Grid2D) -> float:
    masses = np.clip(np.real(grid.values), 0.0, None) * grid.cell_area
    masses /= masses.sum()
    x1 = grid.axis_values(1)
    x2 = grid.axis_values(2)
    e1 = float((masses.sum(axis=1) @ x1))
    e2 = float((masses.sum(axis=0) @ x2))
    return float((x1 - e1) @ masses @ (x2 - e2))


def _scenario_sync(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "sync phases"
    rows = []
    covs = {}
    for k, phi in enumerate(cfg.phis):
        ctx.stage = f"sync phi={phi:.3f}"
        state, params = _sync_state_for_phase(cfg, float(phi), ctx)
        ctx.checkpoint(f"phi{k}", state)
        grid = joint_distribution(state, replace(cfg.readout, phi1=0.0, phi2=0.0),
                                  seed=cfg.seed + k)
        ctx.save_grid(grid, f"pxx_phi{k}.csv")
        report = combined_mi(state, cfg.readout, seed=cfg.seed + 100 + k)
        # second moments come from the exact distribution: far-field shot
        # noise (clipped positive, weighted by x1 x2) would drown them
        exact = grid if cfg.readout.shots == 0 else joint_distribution(
            state, replace(cfg.readout, shots=0, phi1=0.0, phi2=0.0))
        cov = _grid_covariance(exact)
        covs[float(phi)] = cov
        row = {"phi": float(phi), "cov_xx": cov, **report.as_row()}
        rows.append(row)
    ctx.save_rows(rows, "sync_metrics.csv",
                  "columns: phi (rad), cov_xx (x units), MI in nats/bits, "
                  "S (resultant lengths), pearson")
    if 0.0 in covs:
        ctx.check("cov.positive_in_phase", covs[0.0] > 0)
    if any(abs(p - np.pi) < 1e-9 for p in covs):
        ctx.check("cov.negative_anti_phase", covs[np.pi] < 0)
    key_half = [p for p in covs if abs(p - np.pi / 2) < 1e-9]
    if key_half and 0.0 in covs:
        ctx.check("cov.suppressed_quarter_phase",
                  abs(covs[key_half[0]]) < 0.2 * abs(covs[0.0]))


def _scenario_arnold(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "arnold sweep"
    result = arnold_sweep(cfg, ctx=ctx)
    sample_rows = []
    for (v, d), samples in zip(result.coordinates, result.samples):
        for k, val in enumerate(samples):
            sample_rows.append({"v_ratio": v, "detuning_hz": d, "member": k,
                                "I_nats": val})
    ctx.save_rows(result.rows(), "arnold_mean.csv",
                  "columns: v_ratio (V/V0), detuning_hz (Hz), mean/std of "
                  "combined MI (nats)")
    ctx.save_rows(sample_rows, "arnold_samples.csv",
                  "per-ensemble-member combined MI (nats)")
    report_rows = [{"v_ratio": v, "detuning_hz": d, **rep}
                   for (v, d), rep in zip(result.coordinates, result.reports)
                   if rep]
    ctx.save_rows(report_rows, "arnold_reports.csv",
                  "first-ensemble-member synchronization report per coordinate")
    v_vals = sorted({c[0] for c in result.coordinates})
    d_vals = sorted({c[1] for c in result.coordinates})
    z = np.full((len(v_vals), len(d_vals)), np.nan)
    lookup = {c: m for c, m in zip(result.coordinates, result.mean)}
    for i, v in enumerate(v_vals):
        for j, d in enumerate(d_vals):
            z[i, j] = lookup[(v, d)]
    lines = contour_polylines(v_vals, d_vals, z, 0.05)
    contour_rows = []
    for pid, line in enumerate(lines):
        for x, y in line:
            contour_rows.append({"polyline": pid, "v_ratio": x, "detuning_hz": y})
    ctx.save_rows(contour_rows, "arnold_contour.csv",
                  "I = 0.05 contour polylines (v_ratio, detuning_hz)")
    ctx.info["n_coordinates"] = len(result.coordinates)
    # headline trends, each margin measured against the ensemble spread
    def mean_at(v, d):
        return lookup.get((v, d))
    def std_at(v, d):
        idx = result.coordinates.index((v, d))
        return result.std[idx]
    if mean_at(1.0, 0.0) is not None and mean_at(0.25, 0.0) is not None:
        margin = mean_at(1.0, 0.0) - mean_at(0.25, 0.0)
        ctx.check("trend.coupling_enhances_sync",
                  margin > max(std_at(1.0, 0.0), std_at(0.25, 0.0)))
    if mean_at(1.0, 0.0) is not None and mean_at(1.0, 150.0) is not None:
        margin = mean_at(1.0, 0.0) - mean_at(1.0, 150.0)
        ctx.check("trend.detuning_suppresses_sync",
                  margin > max(std_at(1.0, 0.0), std_at(1.0, 150.0)))


def _scenario_sense(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "sense scan"
    results = sense_sweep(cfg, ctx=ctx)
    rows = [{k: v for k, v in r.items() if k != "error"} for r in results]
    ctx.save_rows(rows, "sense_scan.csv",
                  "columns: detuning_hz (Hz), S2/S1 resultant lengths "
                  "(mean/std over ensemble), drive-off control")
    dets = [r["detuning_hz"] for r in results]
    s2 = [r["S2_mean"] for r in results]
    peak = dets[int(np.argmax(s2))]
    ctx.check("sense.peak_at_zero", abs(peak) < 1e-9)
    ctx.check("sense.drive_off_unpolarized",
              max(r["S2_drive_off"] for r in results) < 0.05)
    zero = next(r for r in results if r["detuning_hz"] == 0.0)
    ctx.check("sense.m1_stays_locked", all(
        r["S1_mean"] > 0.9 * zero["S1_mean"] for r in results))


def _scenario_meanfield(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "meanfield analysis"
    params = effective_params(cfg.regime, V_ratio=1.0, phi=0.0)
    pts = fixed_points(params)
    rows = []
    for label, pt in zip(("trivial", "synchronized"), pts):
        res = stability(pt, params)
        rows.append({
            "point": label,
            "re_alpha1": pt.alpha1.real, "im_alpha1": pt.alpha1.imag,
            "re_alpha2": pt.alpha2.real, "im_alpha2": pt.alpha2.imag,
            "lambda1": res.eigenvalues[0], "lambda2": res.eigenvalues[1],
            "stable": res.stable,
        })
    ctx.save_rows(rows, "fixed_points.csv",
                  "fixed points and stability eigenvalues (rad/s)")
    kp, v = params.kappa_plus, params.V
    ctx.check("stability.closed_forms",
              abs(rows[0]["lambda1"] - kp) < 1e-9 * kp
              and abs(rows[0]["lambda2"] - (kp - 2 * v)) < 1e-9 * kp
              and abs(rows[1]["lambda1"] + kp) < 1e-9 * kp
              and abs(rows[1]["lambda2"] + kp + 2 * v) < 1e-9 * kp)
    curves = lissajous(params, cfg.phis)
    for k, (phi, xy) in enumerate(sorted(curves.items())):
        ctx.save_rows([{"x1": float(x), "x2": float(y)} for x, y in xy],
                      f"lissajous_phi{k}.csv",
                      f"closed trajectory at phi={phi:.6g} rad (x units)")
    traj = integrate_mf(MFState(0.4 + 0.1j, -0.2 + 0.3j), params,
                        20.0 / params.kappa_plus, 0.02 / params.kappa_plus)
    ctx.save_rows(trajectory_to_rows(traj[::20]), "mf_trajectory.csv",
                  "columns: t (s), Re/Im alpha_1, Re/Im alpha_2")


def _scenario_tomo_check(cfg: ExperimentConfig, ctx: RunContext) -> None:
    ctx.stage = "tomography round trip"
    cutoff = 30
    states = {
        "vacuum": vacuum_state(cutoff),
        "fock1": fock_state(1, cutoff),
        "coherent2": coherent_state(2.0, cutoff),
        "mixture": opposite_coherent_mixture(2.0, cutoff),
    }
    settings = replace(cfg.readout, shots=0, beta_max=4.0)
    rows = []
    for name, state in states.items():
        grid = wigner(state, settings)
        axis = grid.axis_values(1)
        sub = np.abs(axis) <= 3.0
        direct = wigner_direct(state, axis[sub])
        err = float(np.abs(grid.values[np.ix_(sub, sub)] - direct).max())
        rows.append({"state": name, "wigner_max_error": err,
                     "mass": grid.total_mass()})
        ctx.check(f"roundtrip.{name}", err <= 0.02)
    # chi of the vacuum against the analytic Gaussian
    vac2 = tensor_states(vacuum_state(12), vacuum_state(12))
    errs = []
    for b1 in np.linspace(-2, 2, 9):
        for b2 in np.linspace(-2, 2, 9):
            got = char_function(vac2, b1 + 0.3j * b2, b2)
            want = np.exp(-(abs(b1 + 0.3j * b2) ** 2 + abs(b2) ** 2) / 2)
            errs.append(abs(got - want))
    ctx.check("chi.vacuum_analytic", max(errs) < 1e-10)
    rows.append({"state": "two-mode-vacuum-chi", "wigner_max_error": max(errs),
                 "mass": 1.0})
    ctx.save_rows(rows, "tomo_check.csv",
                  "reconstruction round-trip errors (dimensionless)")


_SCENARIOS = {
    "single-vdp": _scenario_single_vdp,
    "limit-cycle": _scenario_limit_cycle,
    "sync": _scenario_sync,
    "arnold": _scenario_arnold,
    "sense": _scenario_sense,
    "meanfield": _scenario_meanfield,
    "tomo-check": _scenario_tomo_check,
}


def run_scenario(cfg: ExperimentConfig) -> RunContext:
    """Execute one scenario; artifacts land in cfg.output_dir.

    On a numerical failure the manifest still gets written, with the failing
    stage named, and the exception propagates to the caller.
    """
    ctx = RunContext(cfg, cfg.output_dir)
    if cfg.schedule is not None or cfg.engine == "stroboscopic":
        ctx.info["rate_report"] = rate_report(
            cfg.resolved_schedule(), quoted_rates_rad_s(cfg.regime))
    try:
        _SCENARIOS[cfg.scenario](cfg, ctx)
    except VdpError as exc:
        ctx.write_manifest(failed_stage=ctx.stage, error=str(exc))
        raise
    ctx.write_manifest()
    return ctx
