"""Experiment drivers: Monte Carlo sweeps, path-wise verification, CSV output.

All experiments follow the same shape: a work list of independent trajectory
(or scan-point) tasks, executed inline or on a fork pool, merged by task
index, then aggregated.  Per-task results depend only on (master seed, task
index, config), so output CSVs are byte-identical for any worker count.

CSV conventions: first line is a `# vrrw-csv v1 kind=...` schema comment with
the generating parameters, second line the column names, then one row per
task in index order, then `# aggregate ...` footer comments.  Floats are
written with repr() (shortest round-trip), so aggregates are exactly
recomputable from the rows.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels, rng
from .config import ExperimentConfig
from .martingale import (decompose, delta_bound_margin, expected_increment,
                         mg_init, mg_update, right_increment,
                         stopped_lower_bound)
from .lemma import ScanPoint, scaling_scan
from .records import read_record, write_record
from .walk import WalkState, run_trajectory
from .weights import make_weight

CSV_SCHEMA = "vrrw-csv v1"

# pass/fail tolerances for the verify sweep
DRIFT_REL_TOL = 1e-12
DECOMPOSITION_REL_TOL = 1e-6
LITERAL_ABS_TOL = 1e-9


# --------------------------------------------------------------------------
# parallel execution
# --------------------------------------------------------------------------

def _pool_map(fn, args_list, workers: int):
    """Ordered map over tasks, inline or on a fork pool.

    Kernels and weight tables are warmed in the parent first so forked
    children inherit compiled state instead of recompiling.
    """
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    kernels.warmup()
    methods = mp.get_all_start_methods()
    ctx = mp.get_context("fork" if "fork" in methods else "spawn")
    chunk = max(1, len(args_list) // (workers * 4))
    with ctx.Pool(processes=workers) as pool:
        return pool.map(fn, args_list, chunksize=chunk)


def _prepare_tables(weight_spec: str, horizon: int) -> None:
    """Build weight tables in the parent so forked workers share them."""
    if kernels.AVAILABLE:
        kernels.weight_tables(make_weight(weight_spec), horizon)


# --------------------------------------------------------------------------
# CSV plumbing
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def csv_text(kind: str, params: dict, columns, rows, footers: dict) -> str:
    head = " ".join(f"{k}={v}" for k, v in params.items())
    lines = [f"# {CSV_SCHEMA} kind={kind} {head}".rstrip()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    for k, v in footers.items():
        lines.append(f"# aggregate {k}={_fmt(v)}")
    return "\n".join(lines) + "\n"


def _write_out(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        p = Path(path)
        if p.parent != Path(""):
            p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write output {path}: {exc}") from exc


# --------------------------------------------------------------------------
# range growth estimation
# --------------------------------------------------------------------------

def geometric_checkpoints(horizon: int, count: int) -> tuple[int, ...]:
    """Halving checkpoints ending at the horizon, e.g. n, n/2, n/4, ..."""
    return tuple(sorted({max(1, horizon >> j) for j in range(count)}))


def range_growth_exponent(checkpoint_ranges: dict[int, int]) -> float:
    """Least-squares slope of log(range) against log(n) at the checkpoints."""
    pts = sorted(checkpoint_ranges.items())
    if len(pts) < 2:
        return 0.0
    xs = [math.log(n) for n, _ in pts]
    ys = [math.log(max(r, 1)) for _, r in pts]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    if sxx == 0.0:
        return 0.0
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    return sxy / sxx


# --------------------------------------------------------------------------
# recurrence experiment
# --------------------------------------------------------------------------

@dataclass
class RecurrenceStats:
    config: ExperimentConfig
    checkpoints: tuple[int, ...]
    rows: list[tuple] = field(default_factory=list)
    fraction_min_returns: float = 0.0
    median_range_exponent: float = 0.0

    def columns(self) -> list[str]:
        cols = ["index", "n", "returns_to_origin", "min_position",
                "max_position", "range_exponent"]
        cols += [f"hit_{t}" for t in self.config.targets]
        return cols

    def csv_text(self) -> str:
        cfg = self.config
        params = dict(weight=cfg.weight, epsilon=cfg.epsilon, horizon=cfg.horizon,
                      trajectories=cfg.trajectories, seed=cfg.seed,
                      min_returns=cfg.min_returns,
                      checkpoints=";".join(map(str, self.checkpoints)))
        footers = {"fraction_min_returns": self.fraction_min_returns,
                   "median_range_exponent": self.median_range_exponent}
        return csv_text("recurrence", params, self.columns(), self.rows, footers)


def _recurrence_task(args) -> tuple:
    weight, horizon, seed, index, targets, cps = args
    summary, _ = run_trajectory(weight, horizon, seed, stream_index=index,
                                targets=targets, checkpoints=cps)
    expo = range_growth_exponent(summary.checkpoint_ranges)
    row = [index, summary.n, summary.returns_to_origin, summary.min_position,
           summary.max_position, expo]
    row += [summary.first_hit.get(t, -1) for t in targets]
    return tuple(row)


def run_recurrence_experiment(cfg: ExperimentConfig) -> RecurrenceStats:
    """Returns-to-origin and range growth across independent trajectories."""
    cps = geometric_checkpoints(cfg.horizon, cfg.checkpoints)
    _prepare_tables(cfg.weight, cfg.horizon)
    args = [(cfg.weight, cfg.horizon, cfg.seed, i, cfg.targets, cps)
            for i in range(cfg.trajectories)]
    rows = _pool_map(_recurrence_task, args, cfg.workers)
    stats = RecurrenceStats(config=cfg, checkpoints=cps, rows=rows)
    returns = [r[2] for r in rows]
    expos = [r[5] for r in rows]
    stats.fraction_min_returns = (
        sum(1 for c in returns if c >= cfg.min_returns) / len(rows))
    stats.median_range_exponent = statistics.median(expos)
    _write_out(cfg.out, stats.csv_text())
    return stats


# --------------------------------------------------------------------------
# localization experiment
# --------------------------------------------------------------------------

@dataclass
class LocalizationStats:
    config: ExperimentConfig
    rows: list[tuple] = field(default_factory=list)
    histogram: dict[int, int] = field(default_factory=dict)
    modal_size: int = 0

    def columns(self) -> list[str]:
        return ["index", "n", "final_half_sites", "min_position",
                "max_position", "returns_to_origin"]

    def fraction_in(self, sizes) -> float:
        hits = sum(self.histogram.get(s, 0) for s in sizes)
        return hits / max(1, len(self.rows))

    def csv_text(self) -> str:
        cfg = self.config
        params = dict(weight=cfg.weight, epsilon=cfg.epsilon, horizon=cfg.horizon,
                      trajectories=cfg.trajectories, seed=cfg.seed)
        hist = ";".join(f"{k}:{v}" for k, v in sorted(self.histogram.items()))
        footers = {"modal_final_half_sites": self.modal_size, "histogram": hist}
        return csv_text("localization", params, self.columns(), self.rows, footers)


def _localization_task(args) -> tuple:
    weight, horizon, seed, index = args
    summary, _ = run_trajectory(weight, horizon, seed, stream_index=index,
                                final_half=True)
    return (index, summary.n, summary.final_half_sites, summary.min_position,
            summary.max_position, summary.returns_to_origin)


def run_localization_experiment(cfg: ExperimentConfig) -> LocalizationStats:
    """Distribution of the visited-set size over the final half horizon."""
    _prepare_tables(cfg.weight, cfg.horizon)
    args = [(cfg.weight, cfg.horizon, cfg.seed, i) for i in range(cfg.trajectories)]
    rows = _pool_map(_localization_task, args, cfg.workers)
    stats = LocalizationStats(config=cfg, rows=rows)
    for r in rows:
        stats.histogram[r[2]] = stats.histogram.get(r[2], 0) + 1
    # modal size; ties broken toward the smaller size for determinism
    stats.modal_size = max(sorted(stats.histogram),
                           key=lambda s: (stats.histogram[s], -s))
    _write_out(cfg.out, stats.csv_text())
    return stats


# --------------------------------------------------------------------------
# drift sampling (reference-path check of the no-drift identity)
# --------------------------------------------------------------------------

def sample_drift_ratios(weight_spec, eps: float, horizon: int, seed: int,
                        index: int, samples: int) -> list[tuple[int, float]]:
    """(time, |conditional mean| / right increment) at sampled times.

    Runs the pure-Python walk and martingale in lockstep, evaluating the
    one-step conditional mean of the next increment at evenly spaced times.
    The ratio is 0 for a perfect martingale and must stay below ~1e-12.
    """
    w = make_weight(weight_spec)
    u = rng.uniforms(seed, index, horizon)
    state = WalkState.fresh()
    mg = mg_init(eps)
    times = sorted({max(0, ((j + 1) * horizon) // samples - 1)
                    for j in range(samples)})
    out = []
    ti = 0
    for i in range(horizon):
        if ti < len(times) and i == times[ti]:
            e = expected_increment(mg, state, w)
            scale = right_increment(mg, state, w)
            ratio = 0.0 if e == 0.0 else (abs(e) / scale if scale > 0.0 else math.inf)
            out.append((i, ratio))
            ti += 1
        mv = 1 if u[i] < state.prob_right(w) else -1
        mg_update(mg, state, mv, w)
        state.apply(mv)
    return out


# --------------------------------------------------------------------------
# verify sweep
# --------------------------------------------------------------------------

@dataclass
class VerifyReport:
    config: ExperimentConfig
    rows: list[tuple] = field(default_factory=list)
    stopped_checked: int = 0
    stopped_skipped: int = 0

    COLUMNS = ("seed", "stream_index", "n", "check", "value", "passed")

    @property
    def all_passed(self) -> bool:
        return all(r[5] for r in self.rows)

    def failures(self) -> list[tuple]:
        return [r for r in self.rows if not r[5]]

    def csv_text(self) -> str:
        cfg = self.config
        params = dict(weight=cfg.weight, epsilon=cfg.epsilon, horizon=cfg.horizon,
                      trajectories=cfg.trajectories, seed=cfg.seed,
                      stop_site=cfg.stop_site, drift_samples=cfg.drift_samples)
        footers = {"all_passed": self.all_passed,
                   "stopped_checked": self.stopped_checked,
                   "stopped_skipped": self.stopped_skipped}
        return csv_text("verify", params, self.COLUMNS, self.rows, footers)


def _check_rows_for_moves(moves, seed: int, index: int, eps: float, w,
                          stop_site: int, drift_rows) -> tuple[list[tuple], bool]:
    """All path-wise checks over one move record; returns (rows, stopped_ran)."""
    rows = list(drift_rows)
    n = int(len(moves))
    d = decompose(moves, n, eps, w)
    rel = d.grouping_error / max(d.scale, 1e-300)
    rows.append((seed, index, n, "decomposition", rel, rel <= DECOMPOSITION_REL_TOL))
    rows.append((seed, index, n, "literal_correction", d.literal_error,
                 d.literal_error <= LITERAL_ABS_TOL))
    y = -d.min_position + 1
    fl = delta_bound_margin(moves, y, n, eps, w)
    tail = min(fl.tail_step, fl.tail_final)
    partial = min(fl.partial_step, fl.partial_final)
    rows.append((seed, index, n, "floor_tail", tail, tail >= 0.0))
    rows.append((seed, index, n, "floor_partial", partial, partial >= 0.0))
    stopped_ran = False
    try:
        sb = stopped_lower_bound(moves, None, stop_site, eps, w)
        rows.append((seed, index, sb.tau_v, "stopped_bound", sb.margin,
                     sb.margin >= 0.0))
        stopped_ran = True
    except ValueError:
        pass    # site not reached within this record: nothing to check
    return rows, stopped_ran


def _verify_task(args) -> tuple[list[tuple], bool]:
    weight, eps, horizon, seed, index, drift_samples, stop_site = args
    w = make_weight(weight)
    if kernels.AVAILABLE:
        moves = kernels.simulate_moves(w, horizon, seed, index)
    else:
        _, rec = run_trajectory(w, horizon, seed, stream_index=index,
                                want_record=True, use_kernel=False)
        moves = rec.moves
    drift = [(seed, index, t, "zero_drift", ratio, ratio <= DRIFT_REL_TOL)
             for t, ratio in sample_drift_ratios(weight, eps, horizon, seed,
                                                 index, drift_samples)]
    return _check_rows_for_moves(moves, seed, index, eps, w, stop_site, drift)


def run_verify_sweep(cfg: ExperimentConfig) -> VerifyReport:
    """Run every path-wise check over fresh trajectories or stored records.

    With `record_dir` set, records are loaded from disk and additionally
    checked for replay equivalence (stored moves versus re-simulation from
    the stored stream identity); otherwise trajectories are simulated fresh.
    Drift sampling replays the walk in pure Python, so keep verify horizons
    at desk scale (~1e4); the bulk checkers stay compiled.
    """
    report = VerifyReport(config=cfg)
    if cfg.record_dir:
        paths = sorted(Path(cfg.record_dir).glob("*.vrrw"))
        if not paths:
            raise OSError(f"no .vrrw records under {cfg.record_dir}")
        for path in paths:
            rec = read_record(path)
            w = make_weight(rec.weight_spec)
            n = len(rec.moves)
            if kernels.AVAILABLE:
                resim = kernels.simulate_moves(w, n, rec.master_seed,
                                               rec.stream_index)
            else:
                _, rr = run_trajectory(w, n, rec.master_seed,
                                       stream_index=rec.stream_index,
                                       want_record=True, use_kernel=False)
                resim = rr.moves
            mism = int(np.count_nonzero(resim != rec.moves))
            report.rows.append((rec.master_seed, rec.stream_index, n,
                                "replay", float(mism), mism == 0))
            rows, ran = _check_rows_for_moves(
                rec.moves, rec.master_seed, rec.stream_index, cfg.epsilon, w,
                cfg.stop_site, [])
            report.rows.extend(rows)
            report.stopped_checked += ran
            report.stopped_skipped += not ran
    else:
        _prepare_tables(cfg.weight, cfg.horizon)
        args = [(cfg.weight, cfg.epsilon, cfg.horizon, cfg.seed, i,
                 cfg.drift_samples, cfg.stop_site)
                for i in range(cfg.trajectories)]
        for rows, ran in _pool_map(_verify_task, args, cfg.workers):
            report.rows.extend(rows)
            report.stopped_checked += ran
            report.stopped_skipped += not ran
    _write_out(cfg.out, report.csv_text())
    return report


# --------------------------------------------------------------------------
# focused bulk checkers (single check at scale, CSV per trajectory)
# --------------------------------------------------------------------------

def _drift_task(args) -> list[tuple]:
    spec, eps, horizon, seed, index, samples = args
    ratios = sample_drift_ratios(spec, eps, horizon, seed, index, samples)
    return [(spec, eps, index, t, r, r <= DRIFT_REL_TOL) for t, r in ratios]


def drift_batch(cases, horizon: int, samples: int, seed: int,
                workers: int = 1) -> tuple[list[tuple], str]:
    """Zero-drift ratios over many (weight, eps) trajectories.

    `cases` is a list of (weight spec, eps, stream index).  Returns the rows
    and a deterministic CSV text.
    """
    args = [(spec, eps, horizon, seed, idx, samples)
            for spec, eps, idx in cases]
    rows = [r for chunk in _pool_map(_drift_task, args, workers) for r in chunk]
    params = dict(horizon=horizon, samples=samples, seed=seed,
                  trajectories=len(cases))
    text = csv_text("drift", params,
                    ("weight", "epsilon", "stream_index", "t", "ratio", "passed"),
                    rows, {"all_passed": all(r[5] for r in rows)})
    return rows, text


def _decomposition_task(args) -> tuple:
    spec, eps, horizon, seed, index = args
    w = make_weight(spec)
    if kernels.AVAILABLE:
        moves = kernels.simulate_moves(w, horizon, seed, index)
    else:
        moves = run_trajectory(w, horizon, seed, stream_index=index,
                               want_record=True, use_kernel=False)[1].moves
    d = decompose(moves, len(moves), eps, w)
    rel = d.grouping_error / max(d.scale, 1e-300)
    return (index, d.n, rel, d.literal_error, d.min_position, d.underflows,
            rel <= DECOMPOSITION_REL_TOL and d.literal_error <= LITERAL_ABS_TOL)


def decomposition_batch(spec: str, eps: float, horizon: int, count: int,
                        seed: int, workers: int = 1) -> tuple[list[tuple], str]:
    """Edge-grouped decomposition identity over `count` fresh trajectories."""
    _prepare_tables(spec, horizon)
    args = [(spec, eps, horizon, seed, i) for i in range(count)]
    rows = _pool_map(_decomposition_task, args, workers)
    params = dict(weight=spec, epsilon=eps, horizon=horizon, seed=seed,
                  trajectories=count)
    text = csv_text("decomposition", params,
                    ("index", "n", "grouping_rel_err", "literal_abs_err",
                     "min_position", "underflows", "passed"),
                    rows, {"all_passed": all(r[6] for r in rows)})
    return rows, text


def _floor_task(args) -> tuple:
    spec, eps, horizon, seed, index = args
    w = make_weight(spec)
    if kernels.AVAILABLE:
        moves = kernels.simulate_moves(w, horizon, seed, index)
    else:
        moves = run_trajectory(w, horizon, seed, stream_index=index,
                               want_record=True, use_kernel=False)[1].moves
    d = decompose(moves, len(moves), eps, w)     # min position for y
    y = -d.min_position + 1
    fl = delta_bound_margin(moves, y, len(moves), eps, w)
    margins = (fl.tail_step, fl.partial_step, fl.tail_final, fl.partial_final)
    return (index, len(moves), y) + margins + (min(margins) >= 0.0,)


def floor_batch(spec: str, eps: float, horizon: int, count: int, seed: int,
                workers: int = 1) -> tuple[list[tuple], str]:
    """Ledger floor margins (log domain) with y = |min| + 1 per trajectory."""
    _prepare_tables(spec, horizon)
    args = [(spec, eps, horizon, seed, i) for i in range(count)]
    rows = _pool_map(_floor_task, args, workers)
    params = dict(weight=spec, epsilon=eps, horizon=horizon, seed=seed,
                  trajectories=count)
    text = csv_text("floors", params,
                    ("index", "n", "y", "tail_step", "partial_step",
                     "tail_final", "partial_final", "passed"),
                    rows, {"all_passed": all(r[7] for r in rows)})
    return rows, text


def _stopped_task(args) -> tuple:
    spec, eps, horizon, seed, index, v = args
    w = make_weight(spec)
    summary, rec = run_trajectory(spec, horizon, seed, stream_index=index,
                                  stop_targets=(v,), want_record=True)
    if v not in summary.first_hit:
        return (index, False, -1, 0, 0.0, 0.0, 0.0, True)
    sb = stopped_lower_bound(rec.moves, None, v, eps, w)
    return (index, True, sb.tau_v, sb.y, sb.m, sb.bound, sb.margin,
            sb.margin >= 0.0)


def stopped_batch(spec: str, eps: float, horizon: int, count: int, v: int,
                  seed: int, workers: int = 1) -> tuple[list[tuple], str]:
    """Stopped lower bound at the first visit to v, per-trajectory y."""
    _prepare_tables(spec, horizon)
    args = [(spec, eps, horizon, seed, i, v) for i in range(count)]
    rows = _pool_map(_stopped_task, args, workers)
    reached = sum(1 for r in rows if r[1])
    params = dict(weight=spec, epsilon=eps, horizon=horizon, seed=seed,
                  trajectories=count, stop_site=v)
    text = csv_text("stopped", params,
                    ("index", "reached", "tau_v", "y", "m", "bound", "margin",
                     "passed"),
                    rows, {"all_passed": all(r[7] for r in rows),
                           "reached": reached})
    return rows, text


# --------------------------------------------------------------------------
# lemma scan
# --------------------------------------------------------------------------

@dataclass
class LemmaScanStats:
    config: ExperimentConfig
    points: list[ScanPoint] = field(default_factory=list)

    COLUMNS = ("k", "alpha", "epsilon", "value", "restarts", "converged",
               "max_b", "argmax_index")

    def rows(self) -> list[tuple]:
        return [(p.k, p.alpha, p.epsilon, p.value, p.restarts, p.converged,
                 p.max_b, p.argmax_index) for p in self.points]

    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def csv_text(self) -> str:
        cfg = self.config
        params = dict(alpha=cfg.lemma_alpha, epsilon=cfg.lemma_epsilon,
                      restarts=cfg.lemma_restarts, budget=cfg.lemma_budget,
                      seed=cfg.seed)
        vals = self.values()
        footers = {"nondecreasing_98pct": all(
            b >= 0.98 * a for a, b in zip(vals, vals[1:]))}
        return csv_text("lemma", params, self.COLUMNS, self.rows(), footers)


def run_lemma_scan(cfg: ExperimentConfig) -> LemmaScanStats:
    """Estimated constrained infimum across the configured sizes."""
    if cfg.workers > 1 and len(cfg.lemma_k_list) > 1:
        kernels.warmup()
        methods = mp.get_all_start_methods()
        ctx = mp.get_context("fork" if "fork" in methods else "spawn")
        with ctx.Pool(processes=cfg.workers) as pool:
            points = scaling_scan(cfg.lemma_k_list, cfg.lemma_alpha,
                                  cfg.lemma_epsilon, cfg.lemma_restarts,
                                  cfg.lemma_budget, cfg.seed, map_fn=pool.map)
    else:
        points = scaling_scan(cfg.lemma_k_list, cfg.lemma_alpha,
                              cfg.lemma_epsilon, cfg.lemma_restarts,
                              cfg.lemma_budget, cfg.seed)
    stats = LemmaScanStats(config=cfg, points=points)
    _write_out(cfg.out, stats.csv_text())
    return stats


# --------------------------------------------------------------------------
# plain simulation batch
# --------------------------------------------------------------------------

@dataclass
class SimulateStats:
    config: ExperimentConfig
    rows: list[tuple] = field(default_factory=list)

    def columns(self) -> list[str]:
        cols = ["index", "n", "final_position", "min_position", "max_position",
                "returns_to_origin", "most_visited_edge",
                "most_visited_upcrossings"]
        cols += [f"hit_{t}" for t in self.config.targets]
        return cols

    def csv_text(self) -> str:
        cfg = self.config
        params = dict(weight=cfg.weight, epsilon=cfg.epsilon, horizon=cfg.horizon,
                      trajectories=cfg.trajectories, seed=cfg.seed)
        return csv_text("simulate", params, self.columns(), self.rows, {})


def _simulate_task(args) -> tuple:
    weight, horizon, seed, index, targets, record_dir = args
    want = record_dir is not None
    summary, rec = run_trajectory(weight, horizon, seed, stream_index=index,
                                  targets=targets, want_record=want)
    if want:
        write_record(Path(record_dir) / f"traj_{index:06d}.vrrw", rec)
    row = [index, summary.n, summary.final_position, summary.min_position,
           summary.max_position, summary.returns_to_origin,
           summary.most_visited_edge, summary.most_visited_upcrossings]
    row += [summary.first_hit.get(t, -1) for t in targets]
    return tuple(row)


def run_simulate_batch(cfg: ExperimentConfig, record: bool = False) -> SimulateStats:
    """Per-trajectory summaries; optionally emit binary records."""
    record_dir = cfg.record_dir if record else None
    if record_dir is not None:
        Path(record_dir).mkdir(parents=True, exist_ok=True)
    elif record:
        raise OSError("record output requested but record_dir is not configured")
    _prepare_tables(cfg.weight, cfg.horizon)
    args = [(cfg.weight, cfg.horizon, cfg.seed, i, cfg.targets, record_dir)
            for i in range(cfg.trajectories)]
    rows = _pool_map(_simulate_task, args, cfg.workers)
    stats = SimulateStats(config=cfg, rows=rows)
    _write_out(cfg.out, stats.csv_text())
    return stats
