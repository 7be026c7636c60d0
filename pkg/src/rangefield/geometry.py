"""Exact plane geometry for recursive rectangle partitions of the unit square.

Conventions used throughout the package:

* Cells of a partition are *half-open* rectangles ``(x_lo, x_hi] x (y_lo, y_hi]``,
  except that a lower edge sitting at 0 is closed, so the cells of a partition
  tile ``[0,1]^2`` exactly.
* Query rectangles are ``(a,b] x (c,d]`` with ``a <= b`` and ``c <= d``.
  Degenerate edges (``a == b`` or ``c == d``) are resolved by right continuity:
  the query interval ``(a,a]`` is read as the limit of ``(a, a+eps]``, which
  meets a cell interval iff ``x_lo <= a < x_hi``.
* All predicates are exact floating-point comparisons.  No epsilons anywhere:
  the integer cost identities checked elsewhere in the package must hold with
  zero tolerance, and they only do if membership is decided consistently.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class UnitPoint:
    """A point of the unit square."""

    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(f"point ({self.x}, {self.y}) outside the unit square")


@dataclass(frozen=True)
class QueryRect:
    """Corner parameters (a, b, c, d) of the query rectangle (a,b] x (c,d]."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.a <= self.b and self.c <= self.d):
            raise ValueError(f"query ({self.a}, {self.b}, {self.c}, {self.d}) needs a <= b and c <= d")

    @property
    def vol(self) -> float:
        """Area (b - a) * (d - c) of the query rectangle."""
        return (self.b - self.a) * (self.d - self.c)

    def swapped(self) -> "QueryRect":
        """The coordinate-swap image (c, d, a, b)."""
        return QueryRect(self.c, self.d, self.a, self.b)

    def astuple(self):
        return (self.a, self.b, self.c, self.d)


def interval_hits(lo: float, hi: float, a: float, b: float) -> bool:
    """Does the cell interval (lo, hi] (closed at lo == 0) meet the query interval (a, b]?

    For ``a == b`` the right-continuous point rule applies: the interval must
    contain points arbitrarily close above ``a``, i.e. ``lo <= a < hi``.
    Closure of the cell edge at 0 never matters because (a, b] excludes ``a``.
    """
    if a < b:
        return max(a, lo) < min(b, hi)
    return lo <= a < hi


@dataclass(frozen=True)
class HalfOpenRect:
    """A half-open cell (x_lo, x_hi] x (y_lo, y_hi]; lower edges at 0 are closed."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def x_closed_lo(self) -> bool:
        return self.x_lo == 0.0

    @property
    def y_closed_lo(self) -> bool:
        return self.y_lo == 0.0

    @property
    def area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)

    def contains(self, p: UnitPoint) -> bool:
        """Half-open membership of a point."""
        in_x = p.x <= self.x_hi and (p.x > self.x_lo or self.x_closed_lo)
        in_y = p.y <= self.y_hi and (p.y > self.y_lo or self.y_closed_lo)
        return in_x and in_y

    def intersects(self, q: QueryRect) -> bool:
        """Does this cell meet the (possibly degenerate) query rectangle?"""
        return interval_hits(self.x_lo, self.x_hi, q.a, q.b) and interval_hits(
            self.y_lo, self.y_hi, q.c, q.d
        )

    def split(self, p: UnitPoint):
        """Split at an interior point into the four children (SW, NW, SE, NE).

        The split point itself belongs to the SW child: upper edges at the
        split coordinates are closed, matching the half-open cell classes.
        """
        if not self.contains(p):
            raise ValueError(f"split point ({p.x}, {p.y}) not in {self}")
        sw = HalfOpenRect(self.x_lo, p.x, self.y_lo, p.y)
        nw = HalfOpenRect(self.x_lo, p.x, p.y, self.y_hi)
        se = HalfOpenRect(p.x, self.x_hi, self.y_lo, p.y)
        ne = HalfOpenRect(p.x, self.x_hi, p.y, self.y_hi)
        return sw, nw, se, ne

    def phi(self, t: float) -> float:
        """Rescale the first coordinate into [0,1]; 0 outside the x-projection."""
        if t <= self.x_hi and (t > self.x_lo or self.x_closed_lo):
            return (t - self.x_lo) / (self.x_hi - self.x_lo)
        return 0.0

    def phi_prime(self, s: float) -> float:
        """Rescale the second coordinate into [0,1]; 0 outside the y-projection."""
        if s <= self.y_hi and (s > self.y_lo or self.y_closed_lo):
            return (s - self.y_lo) / (self.y_hi - self.y_lo)
        return 0.0

    def swapped(self) -> "HalfOpenRect":
        return HalfOpenRect(self.y_lo, self.y_hi, self.x_lo, self.x_hi)


UNIT_SQUARE = HalfOpenRect(0.0, 1.0, 0.0, 1.0)


def vol(q: QueryRect) -> float:
    return q.vol
