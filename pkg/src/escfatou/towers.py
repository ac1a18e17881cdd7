"""Exponential-tower numbers for magnitudes far beyond double range.

A :class:`Tower` stores a positive real ``x`` as ``exp^level(mantissa)``.
The representation is normalised so that ``level == 0`` iff
``x <= exp(LIFT)``; for ``level >= 1`` the mantissa is always above
``LIFT``.  Comparison is then lexicographic on ``(level, mantissa)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LIFT = 700.0


@dataclass(frozen=True, order=True)
class Tower:
    level: int
    mantissa: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("tower level must be nonnegative")
        if math.isnan(self.mantissa):
            raise ValueError("tower mantissa is NaN")

    @classmethod
    def of(cls, x: float) -> "Tower":
        if x <= 0:
            raise ValueError("towers represent positive reals only")
        return cls._normal(0, float(x))

    @classmethod
    def from_log(cls, log_x: float) -> "Tower":
        """Tower whose natural logarithm is ``log_x``."""
        return cls._normal(1, float(log_x))

    @staticmethod
    def _normal(level: int, m: float) -> "Tower":
        while level > 0 and m <= LIFT:
            m = math.exp(m)
            level -= 1
        while level == 0 and m > math.exp(LIFT):
            m = math.log(m)
            level = 1
        return Tower(level, m)

    # -- conversions -------------------------------------------------------
    def to_float(self) -> float:
        """Value as a float (``inf`` when not representable)."""
        if self.level == 0:
            return self.mantissa
        if self.level == 1 and self.mantissa < 709.7:
            return math.exp(self.mantissa)
        return math.inf

    def iterated_log(self, k: int) -> float:
        """``log^k(x)`` as a float; ``-inf`` once a log argument drops to <= 0."""
        if k <= self.level:
            rest = self.level - k
            if rest == 0:
                return self.mantissa
            if rest == 1 and self.mantissa < 709.7:
                return math.exp(self.mantissa)
            return math.inf
        v = self.mantissa
        for _ in range(k - self.level):
            if v <= 0:
                return -math.inf
            v = math.log(v)
        return v

    # -- arithmetic ----------------------------------------------------------
    def log(self) -> "Tower":
        if self.level >= 1:
            return Tower._normal(self.level - 1, self.mantissa)
        if self.mantissa <= 1.0:
            raise ValueError("log of a tower <= 1 is not a positive tower")
        return Tower(0, math.log(self.mantissa))

    def exp(self) -> "Tower":
        return Tower._normal(self.level + 1, self.mantissa)

    def add(self, a: float) -> "Tower":
        """``x + a`` (``a`` may be negative as long as the result stays > 0)."""
        if self.level == 0:
            return Tower.of(self.mantissa + a)
        if self.level == 1:
            return Tower._normal(1, self.mantissa + math.log1p(a * math.exp(-self.mantissa)))
        return self

    def mul(self, c: float) -> "Tower":
        """``c * x`` for ``c > 0``."""
        if c <= 0:
            raise ValueError("tower scale factor must be positive")
        if self.level == 0:
            return Tower.of(self.mantissa * c)
        return Tower._normal(self.level - 1, self.mantissa)._log_shift(math.log(c)).exp()

    def _log_shift(self, a: float) -> "Tower":
        # self is log(x); returns log(x) + a
        if self.level == 0:
            return Tower._normal(0, self.mantissa + a) if self.mantissa + a > 0 else Tower(0, self.mantissa + a)
        return self.add(a)

    def pow(self, k: float) -> "Tower":
        """``x ** k`` for ``k > 0`` and ``x > 1``."""
        return self.log().mul(k).exp()

    def __repr__(self):
        return f"Tower(level={self.level}, mantissa={self.mantissa!r})"

    def to_json(self):
        return {"level": self.level, "mantissa": self.mantissa}


def margin(lhs: Tower, rhs: Tower) -> tuple[int, float]:
    """Compare two towers at the top level of the larger one.

    Returns ``(k, log^k(lhs) - log^k(rhs))``; the sign matches ``lhs - rhs``.
    """
    k = max(lhs.level, rhs.level)
    return k, lhs.iterated_log(k) - rhs.iterated_log(k)
