"""2-d trees: binary splits alternating between the two axes by depth parity.

Two root orientations exist: a horizontal-root tree splits the y-coordinate at
even depths (the root cell is cut by a horizontal line), a vertical-root tree
splits the x-coordinate there.  Building the vertical-root tree on the
coordinate-swapped point set reproduces the horizontal-root tree's costs under
the query swap (a,b,c,d) -> (c,d,a,b), exactly.

The ten-term cost decomposition carries over verbatim from the quadtree case:
it only uses the nested-rectangle structure of the partition, not the arity of
the splits.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import _kernels as K
from .decomposition import CostBreakdown, compute_breakdown
from .geometry import HalfOpenRect, QueryRect
from .quadtree import _validate_points

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


class KdTree:
    """Immutable 2-d tree over points in [0,1]^2."""

    def __init__(self, points, root_axis: str = VERTICAL, rng_seed=None):
        if root_axis not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"root_axis must be {HORIZONTAL!r} or {VERTICAL!r}")
        pts = _validate_points(points)
        self.n = pts.shape[0]
        self.root_axis = root_axis
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
            (self.xlo, self.xhi, self.ylo, self.yhi, self.child, self.depth) = K.build_kd(
                self.px, self.py, root_axis == VERTICAL
            )
        else:
            self.xlo = self.xhi = self.ylo = self.yhi = np.empty(0)
            self.child = np.full((0, 2), K.NO_CHILD, np.int32)
            self.depth = np.empty(0, np.int32)

    @classmethod
    def random(cls, n: int, seed: int, root_axis: str = VERTICAL) -> "KdTree":
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        return cls(rng.random((n, 2)), root_axis=root_axis, rng_seed=seed)

    def swapped(self) -> "KdTree":
        """The tree built on coordinate-swapped points with the other root axis."""
        other = HORIZONTAL if self.root_axis == VERTICAL else VERTICAL
        pts = np.column_stack([self.py, self.px])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return KdTree(pts, root_axis=other, rng_seed=self.rng_seed)

    def cell(self, i: int) -> HalfOpenRect:
        return HalfOpenRect(self.xlo[i], self.xhi[i], self.ylo[i], self.yhi[i])

    def height(self) -> int:
        return int(self.depth.max()) if self.n else 0

    def range_cost(self, q: QueryRect) -> int:
        return int(K.range_count(self.xlo, self.xhi, self.ylo, self.yhi, self.child, *q.astuple()))

    def visited_mask(self, q: QueryRect) -> np.ndarray:
        mask = np.empty(self.n, dtype=bool)
        K.visit_mask(self.xlo, self.xhi, self.ylo, self.yhi, self.child, *q.astuple(), mask)
        return mask

    def partial_match_cost(self, t: float) -> int:
        return self.range_cost(QueryRect(t, t, 0.0, 1.0))

    def corner_region_counts(self, u: float, v: float):
        return K.corner_counts(
            self.px, self.py, self.xlo, self.xhi, self.ylo, self.yhi, self.child, u, v
        )

    def corner_visit_counts(self, q: QueryRect):
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

    def decompose(self, q: QueryRect) -> CostBreakdown:
        return compute_breakdown(self, q)

    def verify_decomposition(self, q: QueryRect) -> bool:
        return self.decompose(q).identity_holds
