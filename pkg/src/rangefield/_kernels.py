"""Numba kernels for tree construction and instrumented query descents.

The kernels operate on flat arrays: per-node point coordinates, the stored
insertion cell (the placeholder rectangle the point fell into), child indices
(-1 for an empty slot) and depths.  All descents use an explicit stack, never
recursion, so adversarially deep trees cannot overflow the interpreter stack.

Interval semantics must match ``geometry.interval_hits`` exactly; the test
suite pins the two against each other.
"""

import numpy as np
from numba import njit

NO_CHILD = np.int32(-1)


@njit(cache=True, nogil=True, inline="always")
def _hits(lo, hi, a, b):
    # (lo, hi] (closed at lo == 0) vs (a, b]; a == b means the right-limit point rule.
    if a < b:
        lo2 = a if a > lo else lo
        hi2 = b if b < hi else hi
        return lo2 < hi2
    return lo <= a < hi


@njit(cache=True, nogil=True)
def build_quad(px, py):
    """Insert points sequentially; return per-node cells, children and depths."""
    n = px.size
    xlo = np.zeros(n)
    xhi = np.ones(n)
    ylo = np.zeros(n)
    yhi = np.ones(n)
    child = np.full((n, 4), NO_CHILD, np.int32)
    depth = np.zeros(n, np.int32)
    for i in range(1, n):
        j = 0
        lx = 0.0
        hx = 1.0
        ly = 0.0
        hy = 1.0
        d = 0
        while True:
            # child index bits: 2 = east of the split point, 1 = north of it
            q = 0
            if px[i] > px[j]:
                q += 2
                lx = px[j]
            else:
                hx = px[j]
            if py[i] > py[j]:
                q += 1
                ly = py[j]
            else:
                hy = py[j]
            d += 1
            nxt = child[j, q]
            if nxt == NO_CHILD:
                child[j, q] = i
                break
            j = nxt
        xlo[i] = lx
        xhi[i] = hx
        ylo[i] = ly
        yhi[i] = hy
        depth[i] = d
    return xlo, xhi, ylo, yhi, child, depth


@njit(cache=True, nogil=True)
def build_kd(px, py, vertical_root):
    """2-d tree insertion; the split axis alternates with depth parity.

    ``vertical_root=True`` splits the x-coordinate at even depths (vertical
    dividing lines at the root), ``False`` splits the y-coordinate there.
    """
    n = px.size
    xlo = np.zeros(n)
    xhi = np.ones(n)
    ylo = np.zeros(n)
    yhi = np.ones(n)
    child = np.full((n, 2), NO_CHILD, np.int32)
    depth = np.zeros(n, np.int32)
    for i in range(1, n):
        j = 0
        lx = 0.0
        hx = 1.0
        ly = 0.0
        hy = 1.0
        d = 0
        while True:
            vertical = vertical_root
            if d % 2 == 1:
                vertical = not vertical
            if vertical:
                if px[i] > px[j]:
                    q = 1
                    lx = px[j]
                else:
                    q = 0
                    hx = px[j]
            else:
                if py[i] > py[j]:
                    q = 1
                    ly = py[j]
                else:
                    q = 0
                    hy = py[j]
            d += 1
            nxt = child[j, q]
            if nxt == NO_CHILD:
                child[j, q] = i
                break
            j = nxt
        xlo[i] = lx
        xhi[i] = hx
        ylo[i] = ly
        yhi[i] = hy
        depth[i] = d
    return xlo, xhi, ylo, yhi, child, depth


@njit(cache=True, nogil=True)
def range_count(xlo, xhi, ylo, yhi, child, a, b, c, d):
    """Number of stored nodes visited by the query: descent over cells meeting it."""
    n = xlo.size
    if n == 0 or not (_hits(0.0, 1.0, a, b) and _hits(0.0, 1.0, c, d)):
        return 0
    stack = np.empty(n, np.int64)
    top = 0
    stack[0] = 0
    cnt = 0
    width = child.shape[1]
    while top >= 0:
        j = stack[top]
        top -= 1
        cnt += 1
        for q in range(width):
            ch = child[j, q]
            if ch != NO_CHILD and _hits(xlo[ch], xhi[ch], a, b) and _hits(ylo[ch], yhi[ch], c, d):
                top += 1
                stack[top] = ch
    return cnt


@njit(cache=True, nogil=True)
def visit_mask(xlo, xhi, ylo, yhi, child, a, b, c, d, mask):
    """Fill ``mask[i] = True`` for every stored node visited by the query."""
    n = xlo.size
    mask[:] = False
    if n == 0 or not (_hits(0.0, 1.0, a, b) and _hits(0.0, 1.0, c, d)):
        return
    stack = np.empty(n, np.int64)
    top = 0
    stack[0] = 0
    width = child.shape[1]
    while top >= 0:
        j = stack[top]
        top -= 1
        mask[j] = True
        for q in range(width):
            ch = child[j, q]
            if ch != NO_CHILD and _hits(xlo[ch], xhi[ch], a, b) and _hits(ylo[ch], yhi[ch], c, d):
                top += 1
                stack[top] = ch
    return


@njit(cache=True, nogil=True)
def box_count_quad(px, py, xlo, xhi, ylo, yhi, child, a, b, c, d):
    """(visited nodes, visited placeholders) for a quadtree query.

    Placeholder cells are the empty child slots of visited nodes; their cells
    are recomputed from the parent cell and the stored split point.
    """
    n = px.size
    if not (_hits(0.0, 1.0, a, b) and _hits(0.0, 1.0, c, d)):
        return 0, 0
    if n == 0:
        return 0, 1
    stack = np.empty(n, np.int64)
    top = 0
    stack[0] = 0
    nodes = 0
    holes = 0
    while top >= 0:
        j = stack[top]
        top -= 1
        nodes += 1
        for q in range(4):
            if q >= 2:
                clx = px[j]
                chx = xhi[j]
            else:
                clx = xlo[j]
                chx = px[j]
            if q & 1 == 1:
                cly = py[j]
                chy = yhi[j]
            else:
                cly = ylo[j]
                chy = py[j]
            if not (_hits(clx, chx, a, b) and _hits(cly, chy, c, d)):
                continue
            ch = child[j, q]
            if ch == NO_CHILD:
                holes += 1
            else:
                top += 1
                stack[top] = ch
    return nodes, holes


@njit(cache=True, nogil=True)
def corner_counts(px, py, xlo, xhi, ylo, yhi, child, u, v):
    """Region tallies along the exact-match search path of the corner (u, v).

    The path consists of the nodes whose cell contains the right-limit point
    (u+, v+).  Returns how many of those nodes store a point in each of the
    four closed/open regions around (u, v):
    (x <= u, y <= v), (x <= u, y > v), (x > u, y <= v), (x > u, y > v).
    """
    c_sw = 0
    c_nw = 0
    c_se = 0
    c_ne = 0
    n = px.size
    if n == 0 or not (0.0 <= u < 1.0 and 0.0 <= v < 1.0):
        return c_sw, c_nw, c_se, c_ne
    j = 0
    width = child.shape[1]
    while j != NO_CHILD:
        if px[j] <= u:
            if py[j] <= v:
                c_sw += 1
            else:
                c_nw += 1
        else:
            if py[j] <= v:
                c_se += 1
            else:
                c_ne += 1
        nxt = NO_CHILD
        for q in range(width):
            ch = child[j, q]
            if ch != NO_CHILD and xlo[ch] <= u < xhi[ch] and ylo[ch] <= v < yhi[ch]:
                nxt = ch
                break
        j = nxt
    return c_sw, c_nw, c_se, c_ne
