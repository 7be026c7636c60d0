"""Point quadtrees over the unit square with instrumented query-cost counters.

A tree is built by sequential insertion; node ``i`` records the cell of the
partition (its insertion rectangle) that the point fell into.  A query visits
node ``i`` iff that cell meets the query rectangle, so every counter here is a
function of the stored cells and points only.  Counters are computed by tree
descent; the stored cell list doubles as the input of the scan-based oracles
in :mod:`rangefield.oracles`.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import _kernels as K
from .decomposition import CostBreakdown, compute_breakdown, placeholder_identity_residual
from .geometry import HalfOpenRect, QueryRect


def load_points_csv(path) -> np.ndarray:
    """Read points from a CSV file with header ``x,y``; values must be in [0,1]."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if [col.strip() for col in header.split(",")] != ["x", "y"]:
            raise ValueError(f"expected header 'x,y', got {header!r}")
        pts = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
    if pts.size == 0:
        return np.empty((0, 2))
    if pts.shape[1] != 2:
        raise ValueError("points file must have exactly two columns")
    return pts


def _validate_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or (pts.size and pts.shape[1] != 2):
        pts = pts.reshape(-1, 2)
    if pts.size and not (np.all(pts >= 0.0) and np.all(pts <= 1.0)):
        raise ValueError("points must lie in the unit square")
    return pts


class Quadtree:
    """Immutable quadtree over points in [0,1]^2."""

    def __init__(self, points, rng_seed=None):
        pts = _validate_points(points)
        self.n = pts.shape[0]
        self.rng_seed = rng_seed
        self.px = np.ascontiguousarray(pts[:, 0])
        self.py = np.ascontiguousarray(pts[:, 1])
        self.has_duplicate_coords = bool(
            self.n > 1
            and (np.unique(self.px).size < self.n or np.unique(self.py).size < self.n)
        )
        if self.has_duplicate_coords:
            warnings.warn("input points share an x or y coordinate; half-open membership resolves ties")
        if self.n:
            (self.xlo, self.xhi, self.ylo, self.yhi, self.child, self.depth) = K.build_quad(
                self.px, self.py
            )
        else:
            self.xlo = self.xhi = self.ylo = self.yhi = np.empty(0)
            self.child = np.full((0, 4), K.NO_CHILD, np.int32)
            self.depth = np.empty(0, np.int32)

    @classmethod
    def random(cls, n: int, seed: int) -> "Quadtree":
        """Tree on n i.i.d. uniform points drawn from a counter-based stream."""
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        return cls(rng.random((n, 2)), rng_seed=seed)

    @classmethod
    def from_csv(cls, path) -> "Quadtree":
        return cls(load_points_csv(path))

    # -- basic structure -------------------------------------------------

    def cell(self, i: int) -> HalfOpenRect:
        """R_i, the placeholder rectangle node i was inserted into."""
        return HalfOpenRect(self.xlo[i], self.xhi[i], self.ylo[i], self.yhi[i])

    def height(self) -> int:
        return int(self.depth.max()) if self.n else 0

    # -- instrumented counters -------------------------------------------

    def range_cost(self, q: QueryRect) -> int:
        """Number of stored nodes visited to answer the query (placeholders excluded)."""
        return int(K.range_count(self.xlo, self.xhi, self.ylo, self.yhi, self.child, *q.astuple()))

    def range_cost_with_placeholders(self, q: QueryRect) -> int:
        nodes, holes = K.box_count_quad(
            self.px, self.py, self.xlo, self.xhi, self.ylo, self.yhi, self.child, *q.astuple()
        )
        return int(nodes) + int(holes)

    def visited_mask(self, q: QueryRect) -> np.ndarray:
        mask = np.empty(self.n, dtype=bool)
        K.visit_mask(self.xlo, self.xhi, self.ylo, self.yhi, self.child, *q.astuple(), mask)
        return mask

    def partial_match_cost(self, t: float) -> int:
        return self.range_cost(QueryRect(t, t, 0.0, 1.0))

    def one_sided_costs(self, t: float):
        """(lt, ge): partial-match visits split by point x < t versus x >= t."""
        vis = self.visited_mask(QueryRect(t, t, 0.0, 1.0))
        ge = int(np.count_nonzero(vis & (self.px >= t)))
        return int(np.count_nonzero(vis)) - ge, ge

    def constrained_costs(self, t: float, s: float):
        """(y, y_lt, y_ge): partial-match visits at x=t with point y <= s.

        The lt side is closed in x (x <= t), matching the closed south-west
        region convention; ge is x > t.
        """
        vis = self.visited_mask(QueryRect(t, t, 0.0, 1.0))
        below = vis & (self.py <= s)
        y_lt = int(np.count_nonzero(below & (self.px <= t)))
        y_ge = int(np.count_nonzero(below)) - y_lt
        return y_lt + y_ge, y_lt, y_ge

    def constrained_costs_bar(self, t: float, s: float):
        """Coordinate-swapped variant: horizontal-line query at y=t, point x <= s."""
        vis = self.visited_mask(QueryRect(0.0, 1.0, t, t))
        within = vis & (self.px <= s)
        y_lt = int(np.count_nonzero(within & (self.py <= t)))
        y_ge = int(np.count_nonzero(within)) - y_lt
        return y_lt + y_ge, y_lt, y_ge

    def corner_region_counts(self, u: float, v: float):
        """Region tallies of the exact-match path to (u, v); see `_kernels.corner_counts`."""
        return K.corner_counts(
            self.px, self.py, self.xlo, self.xhi, self.ylo, self.yhi, self.child, u, v
        )

    def corner_visit_counts(self, q: QueryRect):
        """(d1, d2, d3, d4): outer-corner points visited via the corner exact-match paths."""
        a, b, c, d = q.astuple()
        return (
            self.corner_region_counts(a, c)[0],
            self.corner_region_counts(a, d)[1],
            self.corner_region_counts(b, c)[2],
            self.corner_region_counts(b, d)[3],
        )

    def count_points_in(self, q: QueryRect) -> int:
        a, b, c, d = q.astuple()
        return int(
            np.count_nonzero((self.px > a) & (self.px <= b) & (self.py > c) & (self.py <= d))
        )

    # -- exact identities --------------------------------------------------

    def decompose(self, q: QueryRect) -> CostBreakdown:
        return compute_breakdown(self, q)

    def verify_decomposition(self, q: QueryRect) -> bool:
        return self.decompose(q).identity_holds

    def placeholder_identity_residual(self, q: QueryRect) -> int:
        return placeholder_identity_residual(self, q)
