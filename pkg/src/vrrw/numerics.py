"""Small numerical helpers shared across the package.

Long sums of increments spanning many orders of magnitude (martingale
accumulation, decomposition checks) use compensated summation so that the
final value carries no order-of-summation noise beyond a few ulp.  Quantities
that live naturally in log space (ledger entries, tail products) are converted
back with an underflow-aware exponential.
"""

from __future__ import annotations

import math

# exp() of anything below this is zero even as a subnormal double
LOG_DBL_TRUE_MIN = -745.2
# exp() of anything above this overflows a double
LOG_DBL_MAX = 709.78


class KahanSum:
    """Running compensated sum (Neumaier variant).

    Tracks a correction term alongside the main accumulator so adding many
    small terms to a large total does not lose them.  `value` returns the
    best double approximation of the exact sum.
    """

    __slots__ = ("_s", "_c")

    def __init__(self, start: float = 0.0) -> None:
        self._s = float(start)
        self._c = 0.0

    def add(self, x: float) -> None:
        t = self._s + x
        if abs(self._s) >= abs(x):
            self._c += (self._s - t) + x
        else:
            self._c += (x - t) + self._s
        self._s = t

    @property
    def value(self) -> float:
        return self._s + self._c

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"KahanSum({self.value!r})"


def exp_or_zero(log_value: float) -> tuple[float, bool]:
    """exp(log_value) with explicit underflow flagging.

    Returns (value, underflowed).  A log value below the double range maps to
    (0.0, True) so callers can keep an exact log-domain ledger while counting
    every increment that was flushed to zero in linear domain.  Values beyond
    the overflow threshold map to +inf rather than raising.
    """
    if log_value < LOG_DBL_TRUE_MIN:
        return 0.0, True
    if log_value > LOG_DBL_MAX:
        return math.inf, False
    v = math.exp(log_value)
    if v == 0.0:
        return 0.0, True
    return v, False


def log_sum_from(values) -> float:
    """fsum of an iterable of log-domain terms (plain exact sum)."""
    return math.fsum(values)
