"""Vertex-reinforced walk state, stepping, and trajectory bookkeeping.

The walk starts at the origin of the integer lattice.  From position x it
jumps to x+1 with probability w(Z(x+1)) / (w(Z(x+1)) + w(Z(x-1))) and to x-1
otherwise, where Z(y) is the local time of site y: the number of time indices
(including time 0) the walk has spent at y.  Heavily visited neighbours
therefore attract the walk, with strength set by the weight function w.

Bookkeeping kept per trajectory:

  * sparse local times Z(x),
  * per-edge crossing counts: N_z up-crossings (jumps z -> z+1) and D_z
    down-crossings (jumps z+1 -> z) of the edge {z, z+1},
  * running min/max position, returns to the origin,
  * first hitting times of a configured target set.

Stepping consumes exactly one uniform deviate per step and thresholds it at
the right-jump probability, so a step is a pure function of (state, u) and a
trajectory is a pure function of (weight spec, seed, horizon).

`run_trajectory` uses a compiled kernel when available (the default) and an
equivalent pure-Python loop otherwise; both consume the same deviates and the
same weight values, so they produce bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .weights import WeightFunction, make_weight


class SiteArray:
    """Integer counts over signed sites, dense over the visited range.

    The visited range of a nearest-neighbour walk is contiguous, so a dense
    buffer with an offset gives O(1) lookups while staying sparse in the
    mathematical sense: unvisited sites read 0 without storage churn.  Grows
    outward by doubling.
    """

    __slots__ = ("_lo", "_buf")

    def __init__(self, lo: int = -4, hi: int = 4):
        self._lo = lo
        self._buf = [0] * (hi - lo + 1)

    def __getitem__(self, site: int) -> int:
        i = site - self._lo
        if 0 <= i < len(self._buf):
            return self._buf[i]
        return 0

    def increment(self, site: int, by: int = 1) -> None:
        i = site - self._lo
        if i < 0:
            grow = max(len(self._buf), -i)
            self._buf[:0] = [0] * grow
            self._lo -= grow
            i += grow
        elif i >= len(self._buf):
            self._buf.extend([0] * max(len(self._buf), i - len(self._buf) + 1))
        self._buf[i] += by

    def items(self):
        """(site, count) pairs with nonzero count."""
        for i, v in enumerate(self._buf):
            if v:
                yield i + self._lo, v

    def total(self) -> int:
        return sum(self._buf)


@dataclass
class WalkState:
    """Mutable walk state; confined to one worker at a time."""

    position: int = 0
    n: int = 0
    z: SiteArray = field(default_factory=SiteArray)
    up: SiteArray = field(default_factory=SiteArray)      # N_z, keyed by edge z
    down: SiteArray = field(default_factory=SiteArray)    # D_z, keyed by edge z
    min_pos: int = 0
    max_pos: int = 0
    first_hit: dict[int, int] = field(default_factory=dict)
    targets: frozenset[int] = frozenset()

    @classmethod
    def fresh(cls, targets: Iterable[int] = ()) -> "WalkState":
        st = cls(targets=frozenset(targets))
        st.z.increment(0)          # the walk occupies the origin at time 0
        if 0 in st.targets:
            st.first_hit[0] = 0
        return st

    def prob_right(self, w: WeightFunction) -> float:
        """Right-jump probability as a function of the neighbour local times."""
        wr = w.eval(self.z[self.position + 1])
        wl = w.eval(self.z[self.position - 1])
        return wr / (wr + wl)

    def apply(self, move: int) -> None:
        """Apply a +-1 move and update all bookkeeping."""
        x = self.position
        if move == 1:
            self.up.increment(x)
        elif move == -1:
            self.down.increment(x - 1)
        else:
            raise ValueError(f"move must be +-1, got {move}")
        x += move
        self.position = x
        self.n += 1
        self.z.increment(x)
        if x < self.min_pos:
            self.min_pos = x
        elif x > self.max_pos:
            self.max_pos = x
        if x in self.targets and x not in self.first_hit:
            self.first_hit[x] = self.n

    def step(self, w: WeightFunction, u: float) -> int:
        """Advance one step using uniform deviate u in [0,1); returns the move."""
        if not 0.0 <= u < 1.0:
            raise ValueError(f"deviate must lie in [0,1), got {u}")
        move = 1 if u < self.prob_right(w) else -1
        self.apply(move)
        return move

    def returns_to_origin(self) -> int:
        return self.z[0] - 1

    def check_invariants(self) -> None:
        """Assert the structural invariants; cheap enough for debug sweeps."""
        total = self.z.total()
        assert total == self.n + 1, f"sum Z = {total} != n+1 = {self.n + 1}"
        for edge in range(self.min_pos - 1, self.max_pos + 1):
            want = (1 if edge < self.position else 0) - (1 if edge < 0 else 0)
            got = self.up[edge] - self.down[edge]
            assert got == want, f"edge {edge}: N-D = {got}, expected {want}"
        for site in range(self.min_pos, self.max_pos + 1):
            want = self.up[site - 1] + self.down[site] + (1 if site == 0 else 0)
            assert self.z[site] == want, f"site {site}: Z = {self.z[site]} != {want}"


def prob_right(state: WalkState, w: WeightFunction) -> float:
    return state.prob_right(w)


def step(state: WalkState, w: WeightFunction, u: float) -> int:
    return state.step(w, u)


def crossing_counts(state: WalkState, edge: int) -> tuple[int, int]:
    """(N_z, D_z): up- and down-crossings of the edge {z, z+1}."""
    return state.up[edge], state.down[edge]


@dataclass
class TrajectoryRecord:
    """Replayable record: the move sequence plus everything that produced it."""

    moves: np.ndarray               # int8, entries +-1
    master_seed: int
    stream_index: int
    weight_spec: str
    prob_snapshots: np.ndarray | None = None   # optional per-step prob_right

    def __len__(self) -> int:
        return int(self.moves.size)


@dataclass
class TrajectorySummary:
    """Aggregate facts about one trajectory."""

    n: int
    final_position: int
    min_position: int
    max_position: int
    returns_to_origin: int
    first_hit: dict[int, int]            # target -> time index; absent if not hit
    most_visited_edge: int               # edge z with the most up-crossings
    most_visited_upcrossings: int        # N_z of that edge
    master_seed: int = 0
    stream_index: int = 0
    weight_spec: str = ""
    checkpoint_ranges: dict[int, int] = field(default_factory=dict)
    final_half_sites: int | None = None  # distinct sites in the final half
    underflows: int | None = None        # filled when a martingale is attached

    def range(self) -> int:
        return self.max_position - self.min_position


def _most_visited_edge(up: SiteArray) -> tuple[int, int]:
    best_edge, best = 0, -1
    for edge, cnt in up.items():
        if cnt > best or (cnt == best and edge < best_edge):
            best_edge, best = edge, cnt
    if best < 0:
        return 0, 0
    return best_edge, best


def summarize_state(state: WalkState, *, master_seed: int = 0, stream_index: int = 0,
                    weight_spec: str = "") -> TrajectorySummary:
    edge, cnt = _most_visited_edge(state.up)
    return TrajectorySummary(
        n=state.n,
        final_position=state.position,
        min_position=state.min_pos,
        max_position=state.max_pos,
        returns_to_origin=state.returns_to_origin(),
        first_hit=dict(state.first_hit),
        most_visited_edge=edge,
        most_visited_upcrossings=cnt,
        master_seed=master_seed,
        stream_index=stream_index,
        weight_spec=weight_spec,
    )


def prob_snapshots(moves: Sequence[int] | np.ndarray,
                   w: WeightFunction) -> np.ndarray:
    """Right-jump probability before each recorded step.

    The probability at step i is a deterministic function of the move prefix,
    so snapshots can always be reconstructed from a record after the fact.
    """
    state = WalkState.fresh()
    out = np.empty(len(moves), dtype=np.float64)
    for i in range(len(moves)):
        out[i] = state.prob_right(w)
        state.apply(int(moves[i]))
    return out


def replay_moves(moves: Sequence[int] | np.ndarray, n: int | None = None,
                 targets: Iterable[int] = (), check: bool = False) -> WalkState:
    """Rebuild the walk state after the first `n` moves of a record."""
    state = WalkState.fresh(targets)
    if n is None:
        n = len(moves)
    if n > len(moves):
        raise ValueError(f"n = {n} exceeds record length {len(moves)}")
    for i in range(n):
        state.apply(int(moves[i]))
        if check:
            state.check_invariants()
    return state


def run_trajectory(weight_spec, n_max: int, seed: int, *, stream_index: int = 0,
                   stop_targets: Iterable[int] = (), targets: Iterable[int] = (),
                   want_record: bool = False, want_probs: bool = False,
                   checkpoints: Sequence[int] = (), final_half: bool = False,
                   use_kernel: bool | None = None,
                   ) -> tuple[TrajectorySummary, TrajectoryRecord | None]:
    """Simulate one trajectory.

    Runs for `n_max` steps, stopping early if the walk hits any site in
    `stop_targets`.  `targets` are sites whose first hitting times are
    recorded (stop targets are always included).  `checkpoints` are step
    indices at which the running range max-min is snapshotted.  With
    `final_half`, the summary includes the number of distinct sites visited
    during the last ceil(n_max/2) time indices.  `want_probs` attaches
    per-step right-jump probabilities to the record.

    Deterministic given (weight_spec, seed, stream_index, n_max): the walk
    consumes stream (seed, stream_index) one deviate per step.
    """
    w = make_weight(weight_spec)
    stop_targets = tuple(dict.fromkeys(stop_targets))
    all_targets = tuple(dict.fromkeys(tuple(targets) + stop_targets))
    checkpoints = tuple(sorted(dict.fromkeys(int(c) for c in checkpoints)))
    if n_max < 0:
        raise ValueError("horizon must be nonnegative")
    if want_probs and not want_record:
        raise ValueError("want_probs requires want_record")
    if use_kernel is None or use_kernel:
        from . import kernels
        if kernels.AVAILABLE:
            summary, record = kernels.run_trajectory_fast(
                w, n_max, seed, stream_index, stop_targets, all_targets,
                want_record, checkpoints, final_half)
            if want_probs:
                record.prob_snapshots = prob_snapshots(record.moves, w)
            return summary, record
        if use_kernel:
            raise RuntimeError("compiled kernels unavailable")

    # pure-Python reference path
    u = rng.uniforms(seed, stream_index, n_max)
    state = WalkState.fresh(all_targets)
    moves = np.zeros(n_max, dtype=np.int8)
    cp_set = set(checkpoints)
    ranges: dict[int, int] = {}
    n_done = 0
    for i in range(n_max):
        moves[i] = state.step(w, u[i])
        n_done = i + 1
        if n_done in cp_set:
            ranges[n_done] = state.max_pos - state.min_pos
        if state.position in stop_targets:
            break
    state.check_invariants()
    summary = summarize_state(state, master_seed=seed, stream_index=stream_index,
                              weight_spec=w.descriptor())
    summary.checkpoint_ranges = ranges
    if final_half:
        # distinct sites during the last ceil(n_max/2) time indices
        fh_first = n_max // 2 + 1
        seen: set[int] = set()
        pos = 0
        for i in range(n_done):
            pos += int(moves[i])
            if i + 1 >= fh_first:
                seen.add(pos)
        summary.final_half_sites = len(seen)
    record = None
    if want_record:
        record = TrajectoryRecord(moves=moves[:n_done].copy(), master_seed=seed,
                                  stream_index=stream_index,
                                  weight_spec=w.descriptor())
        if want_probs:
            record.prob_snapshots = prob_snapshots(record.moves, w)
    return summary, record
