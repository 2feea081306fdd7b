"""Reinforcement weight sequences.

A weight function w maps a site's local time k = 0, 1, 2, ... to a positive
weight, is non-decreasing, and is normalized so w(0) = 1 (scaling w by a
positive constant does not change the walk, so the normalization is free).

Supported families, written as config descriptors:

    constant            w(k) = 1                       (simple random walk)
    linear              w(k) = k + 1
    power(a)            w(k) = (k + 1)^a,  a >= 0
    superlinear(b)      w(k) = (k + 1)^b,  b > 1
    table(v0,v1,...)    explicit positive non-decreasing values, divided by
                        v0; constant extension past the last entry

The power convention (k+1)^a is a choice: it makes w(0) = 1 without extra
scaling and reduces to the linear family at a = 1.  Sub-square-root growth
(a < 1/2) is the recurrent regime probed by the experiments.

Values are memoized up to `memo_cap` (default 2^24); larger arguments are
computed directly.  The memo only ever fills idempotently, so a constructed
WeightFunction may be shared freely across concurrent trajectories.
"""

from __future__ import annotations

import math
import re
from typing import Sequence

import numpy as np

DEFAULT_MEMO_CAP = 1 << 24

_POWER_RE = re.compile(r"^(power|superlinear)\(([^)]+)\)$")
_TABLE_RE = re.compile(r"^table\(([^)]*)\)$")


class WeightError(ValueError):
    """Raised for malformed weight descriptors."""


class WeightFunction:
    """Normalized non-decreasing weight sequence with memoized evaluation."""

    def __init__(self, family: str, exponent: float | None = None,
                 table: Sequence[float] | None = None,
                 memo_cap: int = DEFAULT_MEMO_CAP):
        self.family = family
        self.exponent = exponent
        self.memo_cap = memo_cap
        if table is not None:
            raw = [float(v) for v in table]
            if not raw:
                raise WeightError("table weights need at least one entry")
            for v in raw:
                if not math.isfinite(v) or v <= 0.0:
                    raise WeightError(f"table entries must be positive finite, got {v}")
            if any(b < a for a, b in zip(raw, raw[1:])):
                raise WeightError("table weights must be non-decreasing")
            self.normalization = raw[0]
            self.table = tuple(v / raw[0] for v in raw)
        else:
            self.normalization = 1.0
            self.table = None
        self._memo: list[float] = []
        self._log_memo: list[float] = []

    # -- evaluation ---------------------------------------------------------

    def _raw(self, k: int) -> float:
        fam = self.family
        if fam == "constant":
            return 1.0
        if fam == "linear":
            return float(k + 1)
        if fam in ("power", "superlinear"):
            return (k + 1.0) ** self.exponent
        # table: constant extension beyond the last entry keeps monotonicity
        t = self.table
        return t[k] if k < len(t) else t[-1]

    def eval(self, k: int) -> float:
        """w(k) for local time k >= 0."""
        if k < 0:
            raise ValueError(f"local time must be nonnegative, got {k}")
        if k >= self.memo_cap:
            return self._raw(k)
        memo = self._memo
        if k >= len(memo):
            memo.extend(self._raw(i) for i in range(len(memo), k + 1))
        return memo[k]

    __call__ = eval

    def log_eval(self, k: int) -> float:
        """log w(k), memoized alongside the linear values."""
        if k < 0:
            raise ValueError(f"local time must be nonnegative, got {k}")
        if k >= self.memo_cap:
            return math.log(self._raw(k))
        memo = self._log_memo
        if k >= len(memo):
            memo.extend(math.log(self.eval(i)) for i in range(len(memo), k + 1))
        return memo[k]

    # -- dense views for the compiled kernels -------------------------------

    def value_table(self, n: int) -> np.ndarray:
        """[w(0), ..., w(n)] as float64, bit-identical to scalar eval."""
        self.eval(min(n, self.memo_cap - 1))
        if n < self.memo_cap:
            return np.array(self._memo[: n + 1], dtype=np.float64)
        vals = list(self._memo) + [self._raw(k) for k in range(self.memo_cap, n + 1)]
        return np.array(vals, dtype=np.float64)

    def log_value_table(self, n: int) -> np.ndarray:
        """[log w(0), ..., log w(n)], bit-identical to scalar log_eval."""
        self.log_eval(min(n, self.memo_cap - 1))
        if n < self.memo_cap:
            return np.array(self._log_memo[: n + 1], dtype=np.float64)
        vals = list(self._log_memo) + [math.log(self._raw(k))
                                       for k in range(self.memo_cap, n + 1)]
        return np.array(vals, dtype=np.float64)

    # -- misc ----------------------------------------------------------------

    def descriptor(self) -> str:
        """Canonical config string that reconstructs this function."""
        if self.family in ("constant", "linear"):
            return self.family
        if self.family in ("power", "superlinear"):
            return f"{self.family}({self.exponent!r})"
        return "table(" + ",".join(repr(v * self.normalization) for v in self.table) + ")"

    def __repr__(self) -> str:
        return f"WeightFunction({self.descriptor()})"


def make_weight(spec, memo_cap: int = DEFAULT_MEMO_CAP) -> WeightFunction:
    """Build a WeightFunction from a descriptor string or pass one through.

    Accepted strings: "constant", "linear", "power(0.3)", "superlinear(1.5)",
    "table(2,2,4)".  Exponents must be finite; power needs a >= 0, superlinear
    needs b > 1; tables must be positive and non-decreasing.
    """
    if isinstance(spec, WeightFunction):
        return spec
    if not isinstance(spec, str):
        raise WeightError(f"weight spec must be a string, got {type(spec).__name__}")
    s = spec.strip().lower().replace(" ", "")
    if s == "constant":
        return WeightFunction("constant", memo_cap=memo_cap)
    if s == "linear":
        return WeightFunction("linear", memo_cap=memo_cap)
    m = _POWER_RE.match(s)
    if m:
        fam, arg = m.group(1), m.group(2)
        try:
            expo = float(arg)
        except ValueError:
            raise WeightError(f"bad exponent {arg!r} in weight spec {spec!r}") from None
        if not math.isfinite(expo):
            raise WeightError(f"exponent must be finite, got {expo}")
        if fam == "power" and expo < 0.0:
            raise WeightError(f"power exponent must be >= 0, got {expo}")
        if fam == "superlinear" and expo <= 1.0:
            raise WeightError(f"superlinear exponent must be > 1, got {expo}")
        return WeightFunction(fam, exponent=expo, memo_cap=memo_cap)
    m = _TABLE_RE.match(s)
    if m:
        parts = [p for p in m.group(1).split(",") if p]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise WeightError(f"bad table entry in weight spec {spec!r}") from None
        return WeightFunction("table", table=vals, memo_cap=memo_cap)
    raise WeightError(f"unrecognized weight spec {spec!r}")
