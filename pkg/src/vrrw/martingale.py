"""Martingale instrumentation and path-wise checkers for the walk.

Construction
------------
A two-sided site coefficient sequence

    a_x = 1 - (x+2)^-(1+eps)   for x >= 0,        a_x = 1/2  for x < 0,

and its tail products A_k = prod_{x >= -k} a_x in (0,1) drive a martingale M
built along the walk.  M starts at 0 and keeps a positive ledger Delta(z) per
edge {z, z+1} (initially 1 for the negative half-line):

  * right move from x:  M gains  a_x * Delta(x-1) * w(Z(x-1)) / w(Z(x+1)),
    and that gain is written into the ledger at z = x;
  * left move from x:   M loses  a_x * Delta(x-1).

Because the gain/loss ratio equals the jump-odds ratio, the conditional
expectation of each increment is exactly zero: M has no drift, whatever the
weight function.  That identity, an edge-grouped decomposition of M, explicit
lower bounds on the ledger, and a stopped lower bound on M are all checkable
path by path, and this module implements those checks.

Numerics
--------
Ledger values shrink like tail products over deep excursions and underflow
doubles, so the ledger is kept in log domain; whenever a linear-domain
increment underflows, it contributes zero to M and an underflow counter is
bumped (the log ledger stays exact).  M and all decomposition sums use
compensated summation.  Tail products are evaluated in log domain with a
zeta-series tail so the truncation error is certified.

Everything here is the pure-Python reference path; `kernels` holds the
compiled twin used for bulk verification, and the two are cross-checked by
the test suite.  The checkers themselves are pure functions over immutable
move records and can run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from . import kernels
from .numerics import KahanSum, exp_or_zero
from .walk import TrajectoryRecord, WalkState
from .weights import WeightFunction

LOG_HALF = math.log(0.5)

#: default site-coefficient exponent; small enough that eps/(1-2a) <= 1/2
#: holds for every weight growth exponent a up to 0.45
DEFAULT_EPSILON = 0.05

#: default certified truncation tolerance for tail products
DEFAULT_PRODUCT_TOL = 1e-12


@dataclass(frozen=True)
class AParams:
    """Site-coefficient parameters: exponent and tail-product tolerance."""

    epsilon: float = DEFAULT_EPSILON
    product_tol: float = DEFAULT_PRODUCT_TOL

    def __post_init__(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive finite, got {self.epsilon}")
        if not (self.product_tol > 0.0):
            raise ValueError(f"product tolerance must be positive, got {self.product_tol}")


# --------------------------------------------------------------------------
# site coefficients and tail products
# --------------------------------------------------------------------------

def a_coeff(x: int, eps: float) -> float:
    """Site coefficient a_x in (0,1)."""
    if x < 0:
        return 0.5
    return 1.0 - (x + 2.0) ** (-(1.0 + eps))


def log_a_coeff(x: int, eps: float) -> float:
    """log a_x, computed without cancellation."""
    if x < 0:
        return LOG_HALF
    return math.log1p(-((x + 2.0) ** (-(1.0 + eps))))


_A0_CACHE: dict[tuple[float, float], float] = {}


def _log_tail_product_from_zero(eps: float, tol: float) -> float:
    """log prod_{x >= 0} a_x with certified absolute error <= tol.

    The head is summed directly; the remainder sum_{x >= N} log(1 - (x+2)^-s)
    is expanded as -sum_{j >= 1} zeta(j*s, N+2)/j, which converges
    geometrically with ratio (N+2)^-s, and is truncated once a closed-form
    bound on the rest drops below tol/2.  (Direct term-by-term truncation
    would need about (eps*tol)^(-1/eps) terms, which is astronomically many
    for small eps; the zeta form needs a few dozen.)
    """
    s = 1.0 + eps
    n_head = 64
    head = math.fsum(math.log1p(-((x + 2.0) ** (-s))) for x in range(n_head))
    m = n_head + 2.0
    terms = []
    j = 1
    while True:
        terms.append(-_hurwitz_zeta(j * s, m) / j)
        # remainder bound: sum_{i>j} zeta(i*s, m)/i
        #   <= (1/(j+1)) * (1 + m/((j+1)s - 1)) * m^{-(j+1)s} / (1 - m^{-s})
        rem = ((1.0 + m / ((j + 1) * s - 1.0)) / (j + 1)
               * m ** (-(j + 1) * s) / (1.0 - m ** (-s)))
        if rem < 0.5 * tol:
            break
        j += 1
        if j > 400:  # unreachable for eps > 0; guards an infinite loop
            raise RuntimeError("tail product expansion failed to converge")
    return head + math.fsum(terms)


def log_big_a(k: int, eps: float, tol: float = DEFAULT_PRODUCT_TOL) -> float:
    """log A_k, the log tail product over x >= -k, certified within ~tol."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if tol < 1e-12:
        raise ValueError("tolerances below 1e-12 cannot be certified in doubles")
    key = (eps, tol)
    s0 = _A0_CACHE.get(key)
    if s0 is None:
        s0 = _log_tail_product_from_zero(eps, tol)
        _A0_CACHE[key] = s0
    return k * LOG_HALF + s0


def big_a(k: int, eps: float, tol: float = DEFAULT_PRODUCT_TOL) -> float:
    """A_k = prod_{x >= -k} a_x, with certified relative error <= 2*tol.

    Computed as A_0 * 0.5^k so that consecutive values halve exactly.  For
    k beyond ~1070 the linear-domain value underflows to 0; use log_big_a
    for exact log-domain work.
    """
    a0 = math.exp(log_big_a(0, eps, tol))
    return a0 * (0.5 ** k)


# --------------------------------------------------------------------------
# incremental martingale state
# --------------------------------------------------------------------------

@dataclass
class MartingaleState:
    """Log-domain ledger plus compensated running value of M."""

    eps: float
    n: int = 0
    log_delta: dict[int, float] = field(default_factory=dict)
    underflows: int = 0
    _acc: KahanSum = field(default_factory=KahanSum)

    @property
    def m(self) -> float:
        return self._acc.value

    def log_delta_at(self, z: int) -> float:
        """log Delta(z) for an edge left of the current position."""
        v = self.log_delta.get(z)
        if v is not None:
            return v
        if z < 0:
            return 0.0      # ledger defaults to 1 on the negative half-line
        raise KeyError(f"edge {z} has never been up-crossed")

    def delta_at(self, z: int) -> float:
        return math.exp(self.log_delta_at(z))


def mg_init(params: AParams | float = DEFAULT_EPSILON) -> MartingaleState:
    """Fresh state: M = 0, ledger identically 1 left of the origin."""
    eps = params.epsilon if isinstance(params, AParams) else float(params)
    if not (eps > 0.0):
        raise ValueError(f"epsilon must be positive, got {eps}")
    return MartingaleState(eps=eps)


def _log_increments(mg: MartingaleState, state: WalkState,
                    w: WeightFunction) -> tuple[float, float]:
    """(log right-increment, log |left-increment|) at the current state."""
    x = state.position
    ld_prev = mg.log_delta.get(x - 1)
    if ld_prev is None:
        if x - 1 >= 0:
            raise RuntimeError(
                f"ledger missing at edge {x - 1}; state and martingale are out of sync")
        ld_prev = 0.0
    la = log_a_coeff(x, mg.eps)
    log_left = la + ld_prev
    log_right = (log_left + w.log_eval(state.z[x - 1]) - w.log_eval(state.z[x + 1]))
    return log_right, log_left


def mg_update(mg: MartingaleState, pre: WalkState, move: int,
              w: WeightFunction) -> float:
    """Advance M by one walk step; `pre` is the state before the move.

    Returns the increment added to M (0.0 with the underflow counter bumped
    when the linear-domain value is below the double range).  On a right
    move the increment is also written into the ledger at the departed site.
    """
    assert mg.n == pre.n, (
        f"martingale at n={mg.n} but walk at n={pre.n}: desynchronized inputs")
    log_right, log_left = _log_increments(mg, pre, w)
    if move == 1:
        v, uf = exp_or_zero(log_right)
        mg.log_delta[pre.position] = log_right
        inc = v
    elif move == -1:
        v, uf = exp_or_zero(log_left)
        inc = -v
    else:
        raise ValueError(f"move must be +-1, got {move}")
    if uf:
        mg.underflows += 1
    mg._acc.add(inc)
    mg.n += 1
    return inc


def log_current_delta(mg: MartingaleState, state: WalkState,
                      w: WeightFunction) -> float:
    """log of the prospective increment at the current position."""
    return _log_increments(mg, state, w)[0]


def expected_increment(mg: MartingaleState, state: WalkState,
                       w: WeightFunction) -> float:
    """One-step conditional mean of the next M increment.

    Algebraically zero for every state and weight function.  Evaluated with
    the same flushed linear-domain increments mg_update would apply, so it
    measures the actual drift of the implementation.
    """
    log_right, log_left = _log_increments(mg, state, w)
    inc_r, _ = exp_or_zero(log_right)
    inc_l, _ = exp_or_zero(log_left)
    p = state.prob_right(w)
    return p * inc_r + (1.0 - p) * (-inc_l)


def right_increment(mg: MartingaleState, state: WalkState,
                    w: WeightFunction) -> float:
    """Magnitude scale for drift checks: the prospective right increment."""
    v, _ = exp_or_zero(_log_increments(mg, state, w)[0])
    return v


# --------------------------------------------------------------------------
# pure-Python instrumented replay (reference twin of kernels._replay_verify)
# --------------------------------------------------------------------------

class PyReplay:
    """Reference replay result; mirrors kernels.ReplayResult."""

    def __init__(self):
        self.status = kernels.OK
        self.n_eff = 0
        self.final_pos = 0
        self.min_pos = 0
        self.max_pos = 0
        self.m = 0.0
        self.g_up = 0.0
        self.f_dec = 0.0
        self.n_fresh = 0
        self.underflows = 0
        self.step_m2 = math.inf
        self.step_m3 = math.inf
        self.final_m2 = math.inf
        self.final_m3 = math.inf
        self.tau_v = -1
        self.tau_neg = -1
        self.state: WalkState | None = None
        self.mg: MartingaleState | None = None

    def z_at(self, site: int) -> int:
        return self.state.z[site]

    def up_at(self, edge: int) -> int:
        return self.state.up[edge]


def _floor_margins(mg: MartingaleState, state: WalkState, w: WeightFunction,
                   y: int, log_ay: float) -> tuple[float, float]:
    """Floor margins of the prospective increment at the current site."""
    x = state.position
    lwb = log_current_delta(mg, state, w)
    denom = w.log_eval(state.z[x]) + w.log_eval(state.z[x + 1])
    prefix = _la_prefix(-y, x, mg.eps)
    return lwb - (log_ay - denom), lwb - (prefix - denom)


def _la_prefix(lo: int, hi: int, eps: float) -> float:
    """sum of log a_i for lo <= i <= hi."""
    neg = min(hi, -1)
    total = (neg - lo + 1) * LOG_HALF if neg >= lo else 0.0
    if hi >= 0:
        total += math.fsum(log_a_coeff(i, eps) for i in range(0, hi + 1))
    return total


def replay_verify_py(moves: Sequence[int] | np.ndarray, n: int, eps: float,
                     w: WeightFunction, *, y: int = 0, log_ay: float = 0.0,
                     stop_v: int | None = None) -> PyReplay:
    """Reference twin of kernels.replay_verify; slow but transparent."""
    res = PyReplay()
    n_rec = len(moves)
    if n > n_rec:
        raise ValueError(f"n = {n} exceeds record length {n_rec}")
    # pass A: hitting times and effective horizon
    pos = 0
    tau_v = tau_neg = -1
    n_eff = n
    for i in range(n):
        pos += int(moves[i])
        if stop_v is not None and pos == stop_v and tau_v < 0:
            tau_v = i + 1
            n_eff = tau_v
            break
        if y > 0 and pos == -y and tau_neg < 0:
            tau_neg = i + 1
    res.tau_v, res.tau_neg = tau_v, tau_neg
    if stop_v is not None:
        if tau_v < 0:
            res.status = kernels.TARGET_NOT_REACHED
            return res
        if tau_neg >= 0:
            res.status = kernels.NEG_BEFORE_TARGET
            return res
    elif y > 0 and 0 <= tau_neg < n_eff:
        res.status = kernels.EXCEEDS_TAU_NEG
        return res

    # pass B: last visit times
    last_visit = {0: 0}
    pos = 0
    for i in range(n_eff):
        pos += int(moves[i])
        last_visit[pos] = i + 1

    # pass C: instrumented replay
    state = WalkState.fresh()
    mg = mg_init(eps)
    g = KahanSum()
    f_dec = KahanSum()
    run_min = 0
    for i in range(n_eff + 1):
        if y > 0:
            m2, m3 = _floor_margins(mg, state, w, y, log_ay)
            res.step_m2 = min(res.step_m2, m2)
            res.step_m3 = min(res.step_m3, m3)
        if i == n_eff:
            break
        x = state.position
        mv = int(moves[i])
        inc = mg_update(mg, state, mv, w)
        state.apply(mv)
        if mv == 1:
            if last_visit.get(x, -1) > i:
                g.add(inc * (1.0 - math.exp(log_a_coeff(x + 1, eps))))
            else:
                g.add(inc)
        elif state.position < run_min:
            run_min = state.position
            f_dec.add(math.exp(log_a_coeff(x, eps)))
            res.n_fresh += 1

    # full floor scan at n_eff
    if y > 0:
        for s in range(-y, state.position + 1):
            if s == state.position:
                ld = log_current_delta(mg, state, w)
            else:
                ld = mg.log_delta_at(s)
            denom = w.log_eval(state.z[s]) + w.log_eval(state.z[s + 1])
            res.final_m2 = min(res.final_m2, ld - (log_ay - denom))
            res.final_m3 = min(res.final_m3,
                               ld - (_la_prefix(-y, s, eps) - denom))

    res.n_eff = n_eff
    res.final_pos = state.position
    res.min_pos = state.min_pos
    res.max_pos = state.max_pos
    res.m = mg.m
    res.g_up = g.value
    res.f_dec = f_dec.value
    res.underflows = mg.underflows
    res.state = state
    res.mg = mg
    return res


def _replay(moves, n, eps, w, *, y=0, log_ay=0.0, stop_v=None, engine="auto"):
    if engine == "reference" or (engine == "auto" and not kernels.AVAILABLE):
        return replay_verify_py(moves, n, eps, w, y=y, log_ay=log_ay, stop_v=stop_v)
    return kernels.replay_verify(moves, n, eps, w, y=y, log_ay=log_ay, stop_v=stop_v)


def _moves_of(record) -> np.ndarray:
    return record.moves if isinstance(record, TrajectoryRecord) else np.asarray(record)


# --------------------------------------------------------------------------
# checkers
# --------------------------------------------------------------------------

@dataclass
class DecompositionResult:
    """Edge-grouped decomposition of M_n versus the incremental value.

    `grouped` pairs every up-crossing gain with its later down-crossing loss
    and charges each first-time down-crossing of a negative edge its true
    cost a_{z+1}; it equals `running` up to floating-point grouping noise.
    `literal` instead charges 1/2 per fresh negative edge (written as
    (1/2) * min position); it exceeds `grouped` by exactly (a_0 - 1/2) when
    the walk has gone negative, and `correction` carries that constant.
    """

    n: int
    running: float          # incrementally accumulated M_n
    grouped: float          # exact edge-grouped decomposition
    literal: float          # decomposition with the half-per-edge convention
    correction: float       # (a_0 - 1/2) * [min < 0]
    min_position: int
    scale: float            # total contribution magnitude, for relative errors
    underflows: int

    @property
    def grouping_error(self) -> float:
        return abs(self.grouped - self.running)

    @property
    def literal_error(self) -> float:
        return abs((self.literal - self.grouped) - self.correction)


def decompose(record, n: int | None, eps: float, w: WeightFunction,
              engine: str = "auto") -> DecompositionResult:
    """Evaluate both decomposition forms of M_n over a move record."""
    moves = _moves_of(record)
    if n is None:
        n = len(moves)
    if not 0 <= n <= len(moves):
        raise ValueError(f"n = {n} out of range for record of length {len(moves)}")
    res = _replay(moves, n, eps, w, engine=engine)
    grouped = res.g_up - res.f_dec
    literal = res.g_up + 0.5 * min(0, res.min_pos)
    corr = (a_coeff(0, eps) - 0.5) if res.min_pos < 0 else 0.0
    return DecompositionResult(
        n=n, running=res.m, grouped=grouped, literal=literal, correction=corr,
        min_position=res.min_pos, scale=res.g_up + res.f_dec,
        underflows=res.underflows)


@dataclass
class DeltaFloorResult:
    """Log-domain margins of the ledger floors along a trajectory prefix.

    Margins are log Delta - log floor, so nonnegative means the floor holds.
    `tail_*` uses the constant tail-product floor A_y / (w w); `partial_*`
    the sharper partial-product floor.  `final_*` is the minimum over sites
    at time n; `step_*` the minimum over times t <= n of the margin of the
    prospective increment at the then-current site, which by monotonicity of
    the floors under growing local times covers every ledger entry at every
    intermediate time.
    """

    y: int
    n: int
    tail_final: float
    partial_final: float
    tail_step: float
    partial_step: float

    @property
    def min_margin(self) -> float:
        return min(self.tail_final, self.partial_final,
                   self.tail_step, self.partial_step)


def delta_bound_margin(record, y: int, n: int | None, eps: float,
                       w: WeightFunction, engine: str = "auto",
                       product_tol: float = DEFAULT_PRODUCT_TOL) -> DeltaFloorResult:
    """Check the ledger floors for a trajectory prefix with n <= tau_{-y}."""
    moves = _moves_of(record)
    if n is None:
        n = len(moves)
    if y < 1:
        raise ValueError(f"y must be a positive integer, got {y}")
    log_ay = log_big_a(y, eps, product_tol)
    res = _replay(moves, n, eps, w, y=y, log_ay=log_ay, engine=engine)
    if res.status == kernels.EXCEEDS_TAU_NEG:
        raise ValueError(
            f"n = {n} exceeds the first visit to {-y} at step {res.tau_neg}")
    return DeltaFloorResult(y=y, n=res.n_eff,
                            tail_final=res.final_m2, partial_final=res.final_m3,
                            tail_step=res.step_m2, partial_step=res.step_m3)


@dataclass
class StoppedBoundResult:
    """Lower bound on M at the first visit to site v.

    The bound groups the contributions of every up-crossed edge {z, z+1},
    -y < z < v, using the actual local times at the stopping time:

        A_y * sum_z (1 + (N_z - 1)(1 - a_v)) / (w(Z(z)) w(Z(z+1)))
        - (y - 1)/2 - (a_0 - 1/2) * [walk went negative]

    Edges never up-crossed before the stop contribute zero (their true
    contribution), so the inequality m >= bound holds path by path for any
    admissible y.
    """

    v: int
    y: int
    tau_v: int
    m: float
    bound: float
    min_position: int

    @property
    def margin(self) -> float:
        return self.m - self.bound


def stopped_lower_bound(record, y: int | None, v: int, eps: float,
                        w: WeightFunction, engine: str = "auto",
                        product_tol: float = DEFAULT_PRODUCT_TOL) -> StoppedBoundResult:
    """Check M_{tau_v} against its edge-grouped lower bound.

    `y = None` picks the tightest admissible value for the path:
    |min position before tau_v| + 1.  Raises if v is not reached, or if the
    walk visits -y first.
    """
    moves = _moves_of(record)
    if v < 1:
        raise ValueError(f"v must be a positive integer, got {v}")
    if y is not None and y < 1:
        raise ValueError(f"y must be a positive integer or None, got {y}")
    res = _replay(moves, len(moves), eps, w, y=y or 0,
                  log_ay=log_big_a(y, eps, product_tol) if y else 0.0,
                  stop_v=v, engine=engine)
    if res.status == kernels.TARGET_NOT_REACHED:
        raise ValueError(f"site {v} not reached within the record")
    if res.status == kernels.NEG_BEFORE_TARGET:
        raise ValueError(f"walk reached {-y} at step {res.tau_neg}, "
                         f"before reaching {v}")
    if y is None:
        y = -res.min_pos + 1
    a_v = a_coeff(v, eps)
    ay = big_a(y, eps, product_tol)
    terms = []
    for z in range(-y + 1, v):
        n_z = res.up_at(z)
        if n_z == 0:
            continue        # edge never crossed: contributes nothing to M
        terms.append((1.0 + (n_z - 1) * (1.0 - a_v))
                     / (w.eval(res.z_at(z)) * w.eval(res.z_at(z + 1))))
    bound = ay * math.fsum(terms) - (y - 1) / 2.0
    if res.min_pos < 0:
        bound -= a_coeff(0, eps) - 0.5
    return StoppedBoundResult(v=v, y=y, tau_v=res.tau_v, m=res.m, bound=bound,
                              min_position=res.min_pos)
