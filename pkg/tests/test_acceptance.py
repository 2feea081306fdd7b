"""Acceptance suite: every criterion at its stated scale and tolerance.

Each test prints one `[ACCEPTANCE n] PASS/FAIL` line (run pytest with -s to
see them live).  The CSV-producing pipelines are cached per worker count so
the determinism criterion can reuse the canonical runs.  Master seed and the
localization thresholds were fixed by a pilot run recorded in the README.
"""

import math
import time

import pytest

from vrrw.config import ExperimentConfig
from vrrw.experiments import (decomposition_batch, drift_batch, floor_batch,
                              run_localization_experiment, run_lemma_scan,
                              run_recurrence_experiment, stopped_batch)
from vrrw.lemma import (LemmaInstance, grid_oracle, local_minimize,
                        refine_grid_minimum)

SEED = 20260810
CANONICAL_WORKERS = 4
WORKER_COUNTS = (1, 4, 16)

# 5 families x 2 exponents, replicated to 100 trajectories on unique streams
_DRIFT_BASE = [(spec, eps)
               for spec in ("constant", "linear", "power(0.3)", "power(0.45)",
                            "superlinear(1.3)")
               for eps in (0.05, 1.0)]
DRIFT_CASES = [(spec, eps, i)
               for i, (spec, eps) in enumerate(_DRIFT_BASE * 10)]

_cache: dict[tuple[str, int], object] = {}


def _recurrence_cfg(workers: int) -> ExperimentConfig:
    return ExperimentConfig.from_text(
        f"kind = recurrence\nweight = power(0.3)\nepsilon = 0.05\n"
        f"horizon = 1000000\ntrajectories = 1000\nseed = {SEED}\n"
        f"min_returns = 10\nworkers = {workers}\n")


def _localization_cfg(workers: int) -> ExperimentConfig:
    return ExperimentConfig.from_text(
        f"kind = localization\nweight = linear\nhorizon = 1000000\n"
        f"trajectories = 200\nseed = {SEED}\nworkers = {workers}\n")


def _lemma_cfg(workers: int) -> ExperimentConfig:
    return ExperimentConfig.from_text(
        f"kind = lemma\nlemma_k_list = 16,64,256,1024,4096\n"
        f"lemma_alpha = 0.4\nlemma_epsilon = 0.05\nlemma_restarts = 8\n"
        f"lemma_budget = 200\nseed = {SEED}\nworkers = {workers}\n")


def _build(name: str, workers: int):
    key = (name, workers)
    if key in _cache:
        return _cache[key]
    if name == "drift":
        rows, text = drift_batch(DRIFT_CASES, horizon=1000, samples=100,
                                 seed=SEED, workers=workers)
        out = (rows, text)
    elif name == "decomposition":
        out = decomposition_batch("power(0.3)", 0.05, 10 ** 6, 100, SEED,
                                  workers=workers)
    elif name == "floors":
        out = floor_batch("power(0.3)", 0.05, 10 ** 4, 1000, SEED,
                          workers=workers)
    elif name == "stopped":
        out = stopped_batch("power(0.3)", 0.05, 10 ** 5, 1000, 20, SEED,
                            workers=workers)
    elif name == "lemma":
        stats = run_lemma_scan(_lemma_cfg(workers))
        out = (stats, stats.csv_text())
    elif name == "recurrence":
        stats = run_recurrence_experiment(_recurrence_cfg(workers))
        out = (stats, stats.csv_text())
    elif name == "localization":
        stats = run_localization_experiment(_localization_cfg(workers))
        out = (stats, stats.csv_text())
    else:
        raise KeyError(name)
    _cache[key] = out
    return out


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[ACCEPTANCE {num}] {'PASS' if ok else 'FAIL'} {name}: {detail}")


def test_c1_zero_drift():
    t0 = time.time()
    rows, _ = _build("drift", CANONICAL_WORKERS)
    elapsed = time.time() - t0
    worst = max(r[4] for r in rows)
    ok = (len(rows) >= 10 ** 4 and len(DRIFT_CASES) >= 100
          and worst <= 1e-12 and elapsed < 60.0)
    _report(1, "zero drift", ok,
            f"{len(rows)} sampled states from {len(DRIFT_CASES)} trajectories, "
            f"max |mean|/right-inc = {worst:.3e} (tol 1e-12), {elapsed:.1f}s")
    assert len(rows) >= 10 ** 4 and len(DRIFT_CASES) >= 100
    assert worst <= 1e-12
    assert elapsed < 60.0


def test_c2_decomposition_identity():
    t0 = time.time()
    rows, _ = _build("decomposition", CANONICAL_WORKERS)
    elapsed = time.time() - t0
    worst_rel = max(r[2] for r in rows)
    worst_lit = max(r[3] for r in rows)
    ok = (len(rows) == 100 and worst_rel <= 1e-6 and worst_lit <= 1e-9
          and elapsed < 300.0)
    _report(2, "decomposition identity", ok,
            f"100 x 1e6 steps: max grouping rel err {worst_rel:.3e} (tol 1e-6), "
            f"max literal-form err {worst_lit:.3e} (tol 1e-9), {elapsed:.1f}s")
    assert worst_rel <= 1e-6
    assert worst_lit <= 1e-9
    assert elapsed < 300.0


def test_c3_ledger_floors():
    t0 = time.time()
    rows, _ = _build("floors", CANONICAL_WORKERS)
    elapsed = time.time() - t0
    worst = min(min(r[3:7]) for r in rows)
    violations = sum(1 for r in rows if not r[7])
    ok = len(rows) == 1000 and violations == 0 and elapsed < 60.0
    _report(3, "ledger floor bounds", ok,
            f"1000 x 1e4 steps, y = |min|+1: {violations} violations, "
            f"smallest log-domain margin {worst:.4f}, {elapsed:.1f}s")
    assert violations == 0
    assert worst >= 0.0
    assert elapsed < 60.0


def test_c4_stopped_bound():
    t0 = time.time()
    rows, _ = _build("stopped", CANONICAL_WORKERS)
    elapsed = time.time() - t0
    reached = [r for r in rows if r[1]]
    violations = sum(1 for r in reached if r[6] < 0.0)
    ok = (len(rows) == 1000 and violations == 0 and len(reached) >= 900
          and elapsed < 60.0)
    _report(4, "stopped lower bound (v=20)", ok,
            f"{len(reached)}/1000 paths reach 20: {violations} violations, "
            f"{elapsed:.1f}s")
    assert violations == 0
    assert len(reached) >= 900
    assert elapsed < 60.0


def test_c5_lemma_divergence_trend():
    t0 = time.time()
    stats, _ = _build("lemma", CANONICAL_WORKERS)
    vals = stats.values()
    nondec = all(b >= 0.98 * a for a, b in zip(vals, vals[1:]))
    ratio = vals[-1] / vals[0]
    # independent grid cross-checks at small sizes
    grid_ok = True
    detail_bits = []
    for k in (0, 1, 2):
        inst = LemmaInstance(k, 0.4, 0.05)
        m = local_minimize(inst, restarts=8, budget=200, seed=SEED)
        g = grid_oracle(inst)
        r = refine_grid_minimum(inst)
        one_sided = m.value <= g.value * (1 + 1e-6)
        matched = abs(m.value - r.value) <= 1e-6 * r.value
        grid_ok = grid_ok and one_sided and matched
        detail_bits.append(f"k={k}: opt-grid rel "
                           f"{(m.value - r.value) / r.value:+.2e}")
    elapsed = time.time() - t0
    ok = nondec and ratio >= 2.0 and grid_ok and elapsed < 600.0
    _report(5, "divergence trend of the constrained infimum", ok,
            f"values {['%.4f' % v for v in vals]}, growth x{ratio:.2f} "
            f"(need >= 2), nondecreasing(x0.98)={nondec}, "
            f"{'; '.join(detail_bits)}, {elapsed:.1f}s")
    assert nondec
    assert ratio >= 2.0
    assert grid_ok
    assert elapsed < 600.0


def test_c6_recurrence_phenomenology():
    t0 = time.time()
    stats, _ = _build("recurrence", CANONICAL_WORKERS)
    elapsed = time.time() - t0
    frac = stats.fraction_min_returns
    expo = stats.median_range_exponent
    ok = frac >= 0.99 and expo > 0.0 and elapsed < 900.0
    _report(6, "recurrence regime (sub-sqrt weights)", ok,
            f"1000 x 1e6 steps power(0.3): {100 * frac:.1f}% with >= 10 "
            f"returns (need >= 99%), median range exponent {expo:.3f} > 0, "
            f"{elapsed:.1f}s")
    assert frac >= 0.99
    assert expo > 0.0
    assert elapsed < 900.0


def test_c7_localization_phenomenology():
    t0 = time.time()
    stats, _ = _build("localization", CANONICAL_WORKERS)
    elapsed = time.time() - t0
    frac = stats.fraction_in((4, 5, 6))
    ok = stats.modal_size == 5 and frac >= 0.60 and elapsed < 300.0
    _report(7, "localization regime (linear weights)", ok,
            f"200 x 1e6 steps: modal final-half size {stats.modal_size} "
            f"(need 5), {100 * frac:.1f}% in {{4,5,6}} (need >= 60%), "
            f"histogram {sorted(stats.histogram.items())}, {elapsed:.1f}s")
    assert stats.modal_size == 5
    assert frac >= 0.60
    assert elapsed < 300.0


def test_c8_worker_count_determinism():
    t0 = time.time()
    mismatched = []
    for name in ("drift", "decomposition", "floors", "stopped", "lemma",
                 "recurrence", "localization"):
        texts = {w: _build(name, w)[1] for w in WORKER_COUNTS}
        baseline = texts[WORKER_COUNTS[0]]
        if any(t != baseline for t in texts.values()):
            mismatched.append(name)
    elapsed = time.time() - t0
    ok = not mismatched
    _report(8, "byte-identical CSVs across 1/4/16 workers", ok,
            f"7 pipelines x {len(WORKER_COUNTS)} worker counts, mismatches: "
            f"{mismatched or 'none'}, {elapsed:.1f}s")
    assert not mismatched
