"""Scan-based reference implementations of every tree counter.

Nothing here descends the tree: all counts are linear scans over the stored
cell list, so they are independent of the kernel descents they cross-check.
"""

from __future__ import annotations

import numpy as np

from .decomposition import CostBreakdown
from .geometry import QueryRect


def _hits_vec(lo, hi, a, b):
    if a < b:
        return np.maximum(a, lo) < np.minimum(b, hi)
    return (lo <= a) & (a < hi)


def visited_scan(tree, q: QueryRect) -> np.ndarray:
    """Visit mask by brute force over the stored insertion cells."""
    if tree.n == 0:
        return np.empty(0, dtype=bool)
    a, b, c, d = q.astuple()
    return _hits_vec(tree.xlo, tree.xhi, a, b) & _hits_vec(tree.ylo, tree.yhi, c, d)


def range_cost_scan(tree, q: QueryRect) -> int:
    return int(np.count_nonzero(visited_scan(tree, q)))


def line_stab_count(tree, t: float, axis: str = "x") -> int:
    """Cells cut by the coordinate line at t, with the right-continuous rule."""
    if tree.n == 0:
        return 0
    if axis == "x":
        return int(np.count_nonzero((tree.xlo <= t) & (t < tree.xhi)))
    return int(np.count_nonzero((tree.ylo <= t) & (t < tree.yhi)))


def corner_path_scan(tree, u: float, v: float) -> np.ndarray:
    """Mask of nodes whose cell contains the right-limit corner point (u+, v+)."""
    if tree.n == 0:
        return np.empty(0, dtype=bool)
    return (tree.xlo <= u) & (u < tree.xhi) & (tree.ylo <= v) & (v < tree.yhi)


def placeholder_count_scan(tree, q: QueryRect) -> int:
    """Placeholders of the current quadtree partition whose cell meets the query."""
    if tree.n == 0:
        return 1 if (_hits_vec(np.zeros(1), np.ones(1), q.a, q.b)
                     & _hits_vec(np.zeros(1), np.ones(1), q.c, q.d))[0] else 0
    a, b, c, d = q.astuple()
    empty = tree.child == -1
    count = 0
    for quadrant in range(4):
        if quadrant >= 2:
            lx, hx = tree.px, tree.xhi
        else:
            lx, hx = tree.xlo, tree.px
        if quadrant & 1:
            ly, hy = tree.py, tree.yhi
        else:
            ly, hy = tree.ylo, tree.py
        hit = _hits_vec(lx, hx, a, b) & _hits_vec(ly, hy, c, d)
        count += int(np.count_nonzero(hit & empty[:, quadrant]))
    return count


def breakdown_scan(tree, q: QueryRect) -> CostBreakdown:
    """Every decomposition term recomputed from scans only."""
    a, b, c, d = q.astuple()
    px, py = tree.px, tree.py
    vis_a = visited_scan(tree, QueryRect(a, a, 0.0, 1.0))
    vis_b = visited_scan(tree, QueryRect(b, b, 0.0, 1.0))
    vis_c = visited_scan(tree, QueryRect(0.0, 1.0, c, c))
    vis_d = visited_scan(tree, QueryRect(0.0, 1.0, d, d))
    path_ac = corner_path_scan(tree, a, c)
    path_ad = corner_path_scan(tree, a, d)
    path_bc = corner_path_scan(tree, b, c)
    path_bd = corner_path_scan(tree, b, d)
    cnt = lambda m: int(np.count_nonzero(m))
    return CostBreakdown(
        o=range_cost_scan(tree, q),
        n_inside=cnt((px > a) & (px <= b) & (py > c) & (py <= d)),
        y_ge_bd=cnt(vis_b & (px > b) & (py <= d)),
        y_ge_bc=cnt(vis_b & (px > b) & (py <= c)),
        y_lt_ad=cnt(vis_a & (px <= a) & (py <= d)),
        y_lt_ac=cnt(vis_a & (px <= a) & (py <= c)),
        ybar_ge_db=cnt(vis_d & (py > d) & (px <= b)),
        ybar_ge_da=cnt(vis_d & (py > d) & (px <= a)),
        ybar_lt_cb=cnt(vis_c & (py <= c) & (px <= b)),
        ybar_lt_ca=cnt(vis_c & (py <= c) & (px <= a)),
        d1=cnt(path_ac & (px <= a) & (py <= c)),
        d2=cnt(path_ad & (px <= a) & (py > d)),
        d3=cnt(path_bc & (px > b) & (py <= c)),
        d4=cnt(path_bd & (px > b) & (py > d)),
    )
