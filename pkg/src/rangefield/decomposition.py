"""Ten-term exact decomposition of the range-query visit count.

For any recursive rectangle partition (quadtree or 2-d tree) the nodes visited
by the query (a,b] x (c,d] split by the location of their stored point:

* points inside the query rectangle are always visited (N);
* points west/east of it are visited iff the vertical-line query at a resp. b
  visits them (one-sided constrained counts Y);
* points north/south are the same with the horizontal-line queries at d and c
  (coordinate-swapped counts Ybar);
* points in the four outer corner regions are visited iff the exact-match
  descent to the matching query corner passes through them (D terms).

The identity holds with exact integer equality; `verify` checks it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import QueryRect


@dataclass(frozen=True)
class CostBreakdown:
    """All ten independent terms for one (tree, query) pair."""

    o: int
    n_inside: int
    y_ge_bd: int
    y_ge_bc: int
    y_lt_ad: int
    y_lt_ac: int
    ybar_ge_db: int
    ybar_ge_da: int
    ybar_lt_cb: int
    ybar_lt_ca: int
    d1: int
    d2: int
    d3: int
    d4: int

    @property
    def reconstructed(self) -> int:
        """Right-hand side of the decomposition identity."""
        return (
            self.n_inside
            + (self.y_ge_bd - self.y_ge_bc)
            + (self.y_lt_ad - self.y_lt_ac)
            + (self.ybar_ge_db - self.ybar_ge_da)
            + (self.ybar_lt_cb - self.ybar_lt_ca)
            + self.d1
            + self.d2
            + self.d3
            + self.d4
        )

    @property
    def identity_holds(self) -> bool:
        return self.o == self.reconstructed


def compute_breakdown(tree, q: QueryRect) -> CostBreakdown:
    """Compute every term by its own definition (no rearranging of the identity).

    ``tree`` must expose ``range_cost``, ``count_points_in``, ``visited_mask``,
    ``corner_region_counts`` and point arrays ``px``/``py``.
    """
    a, b, c, d = q.astuple()
    px, py = tree.px, tree.py

    vis_a = tree.visited_mask(QueryRect(a, a, 0.0, 1.0))
    vis_b = vis_a if b == a else tree.visited_mask(QueryRect(b, b, 0.0, 1.0))
    vis_c = tree.visited_mask(QueryRect(0.0, 1.0, c, c))
    vis_d = vis_c if d == c else tree.visited_mask(QueryRect(0.0, 1.0, d, d))

    def count(mask, keep):
        return int(np.count_nonzero(mask & keep))

    y_ge_bd = count(vis_b, (px > b) & (py <= d))
    y_ge_bc = count(vis_b, (px > b) & (py <= c))
    y_lt_ad = count(vis_a, (px <= a) & (py <= d))
    y_lt_ac = count(vis_a, (px <= a) & (py <= c))

    ybar_ge_db = count(vis_d, (py > d) & (px <= b))
    ybar_ge_da = count(vis_d, (py > d) & (px <= a))
    ybar_lt_cb = count(vis_c, (py <= c) & (px <= b))
    ybar_lt_ca = count(vis_c, (py <= c) & (px <= a))

    d1 = tree.corner_region_counts(a, c)[0]
    d2 = tree.corner_region_counts(a, d)[1]
    d3 = tree.corner_region_counts(b, c)[2]
    d4 = tree.corner_region_counts(b, d)[3]

    return CostBreakdown(
        o=tree.range_cost(q),
        n_inside=tree.count_points_in(q),
        y_ge_bd=y_ge_bd,
        y_ge_bc=y_ge_bc,
        y_lt_ad=y_lt_ad,
        y_lt_ac=y_lt_ac,
        ybar_ge_db=ybar_ge_db,
        ybar_ge_da=ybar_ge_da,
        ybar_lt_cb=ybar_lt_cb,
        ybar_lt_ca=ybar_lt_ca,
        d1=d1,
        d2=d2,
        d3=d3,
        d4=d4,
    )


def placeholder_identity_residual(tree, q: QueryRect, breakdown: CostBreakdown | None = None) -> int:
    """Residual of the placeholder-counting variant; 0 iff the identity holds.

    The extended count (nodes plus placeholders whose cell meets the query)
    equals ``O + 3N + 1`` plus the eight one-sided constrained terms.
    """
    bd = breakdown if breakdown is not None else compute_breakdown(tree, q)
    box = tree.range_cost_with_placeholders(q)
    rhs = (
        bd.o
        + 3 * bd.n_inside
        + 1
        + (bd.y_ge_bd - bd.y_ge_bc)
        + (bd.y_lt_ad - bd.y_lt_ac)
        + (bd.ybar_ge_db - bd.ybar_ge_da)
        + (bd.ybar_lt_cb - bd.ybar_lt_ca)
    )
    return box - rhs
