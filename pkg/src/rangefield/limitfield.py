"""Pathwise simulation of the limit random fields by their recursive constructions.

A single infinite family of independent uniform pairs ``(U^v, V^v)``, indexed
by words over {1,2,3,4}, drives a recursive partition of the unit square: the
cell of word v splits at the relative coordinates ``(U^v, V^v)`` into its four
children (SW, NW, SE, NE), whose relative volumes are ``A_1 = U V``,
``A_2 = U(1-V)``, ``A_3 = (1-U)V``, ``A_4 = (1-U)(1-V)``.

The depth-K iterate of the constrained field Y is built bottom-up from
``Y_0(t, s) = K1 h(t)`` through the one-step operators: at a cell, the point
(t, s) lies in exactly one child; that child continues at the rescaled
coordinates, and when (t, s) lies in a northern child the matching southern
sibling additionally contributes its field evaluated at second coordinate 1.
A branch pinned at second coordinate 1 is exactly a partial-match field
sample, so the partial-match field Z is the s = 1 slice of Y, bit for bit.
The coordinate-swapped field Ybar runs the same recursion on the swapped
cells: it reads the same ``(U^v, V^v)`` family with the roles of U and V (and
of the NW/SE child indices) exchanged, which couples Y and Ybar pathwise.

Exact evaluation of the depth-K iterate costs Theta(2^K) leaf terms (every
level contributes one sibling-at-1 branch, and pinned branches split into two
active children per level), which is out of reach at the default K = 30.  The
evaluator therefore prunes pinned branches whose accumulated weight falls
below ``eps`` and substitutes the branch's exact conditional mean
``weight * K1 h(t)``: the mean profile is the eigenfunction of the one-step
mean operator, so the substitution is unbiased at every remaining depth, and
the pathwise error is O(sqrt(eps)) in the noise, not a bias.  Interior
(unpinned) branches are never pruned; there are at most K of them.  Pruning
decisions depend only on weights, so a fixed seed always yields identical
output, and the s = 1 slice of a Y evaluation remains bit-identical to the
matching Z evaluation.

All uniforms come from a counter-based keyed hash of (seed, word), so any set
of evaluation points sees consistent randomness without storing the tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import QueryRect
from .meansolver import BETA, K1, GTable, h, mean_O_kd_eq

DEFAULT_EPS = 1e-3
MAX_DEPTH_QUAD = 31  # 4^31 < 2^64: word keys fit in uint64
MAX_DEPTH_KD = 62

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xBF58476D1CE4E5B9)
_M3 = np.uint64(0x94D049BB133111EB)
_SALT_U = np.uint64(0x55D1B4A1E1F0C2D3)
_SALT_V = np.uint64(0xA0761D6478BD642F)
_SALT_KD = np.uint64(0x8BB84B93962EACC9)
_TO_UNIT = 2.0 ** -53
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U2 = np.uint64(2)
_U11 = np.uint64(11)


def _mix(z):
    # wraparound multiply-xor-shift; overflow is the point
    with np.errstate(over="ignore"):
        z = z + _M1
        z = (z ^ (z >> np.uint64(30))) * _M2
        z = (z ^ (z >> np.uint64(27))) * _M3
        return z ^ (z >> np.uint64(31))


def _to_unit(bits):
    # (0, 1) strictly: 53 high bits, offset by half a ulp
    return ((bits >> _U11).astype(np.float64) + 0.5) * _TO_UNIT


def mix64(*parts) -> int:
    """Deterministic 64-bit combination of integers, for derived seeds."""
    z = np.uint64(0)
    for p in parts:
        z = _mix(z ^ np.uint64(int(p) & 0xFFFFFFFFFFFFFFFF))
    return int(z)


@dataclass
class SplitFamily:
    """Lazily generated family of uniform split pairs, keyed by tree word.

    ``(U^v, V^v)`` is a pure function of (seed, v); the small cache only
    serves the scalar word accessor.
    """

    seed: int
    _cache: dict = field(default_factory=dict, repr=False)

    def spawn(self, index: int) -> "SplitFamily":
        """An independent family with a seed derived from (seed, index)."""
        return SplitFamily(mix64(self.seed, 0x51B9D1, index))

    def uniforms(self, keys: np.ndarray):
        """Vectorized (U, V) for an array of word keys."""
        seed = np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF)
        u = _to_unit(_mix(_mix(seed ^ _SALT_U) + keys))
        v = _to_unit(_mix(_mix(seed ^ _SALT_V) + keys))
        return u, v

    def at(self, word=()):
        """(U^v, V^v) for a word given as an iterable of child indices in 1..4."""
        word = tuple(int(r) for r in word)
        if word not in self._cache:
            key = np.uint64(1)
            for r in word:
                if not 1 <= r <= 4:
                    raise ValueError(f"child indices must be in 1..4, got {r}")
                key = (key << _U2) + np.uint64(r - 1)
            u, v = self.uniforms(np.array([key], dtype=np.uint64))
            self._cache[word] = (float(u[0]), float(v[0]))
        return self._cache[word]


def _field_eval(seeds, tpts, spts, swapped, K, eps=DEFAULT_EPS, w0=None):
    """Batch depth-K evaluation of the coupled constrained fields.

    One slot per entry of the input arrays: the field of family ``seeds[i]``
    (the coordinate-swapped one where ``swapped[i]``) evaluated at
    ``(tpts[i], spts[i])``, starting from weight ``w0[i]``.
    """
    if not 0 <= K <= MAX_DEPTH_QUAD:
        raise ValueError(f"depth must be in 0..{MAX_DEPTH_QUAD}")
    seeds = np.asarray(seeds, dtype=np.uint64)
    nslots = seeds.size
    mix_u = _mix(seeds ^ _SALT_U)
    mix_v = _mix(seeds ^ _SALT_V)
    out = np.zeros(nslots)

    slot = np.arange(nslots, dtype=np.intp)
    key = np.ones(nslots, dtype=np.uint64)
    w = np.ones(nslots) if w0 is None else np.asarray(w0, dtype=float).copy()
    t = np.asarray(tpts, dtype=float).copy()
    s = np.asarray(spts, dtype=float).copy()
    sw = np.asarray(swapped, dtype=bool).copy()

    def settle(idx, weights, tvals):
        if idx.size:
            out[:] += np.bincount(slot[idx], weights=weights * (K1 * h(tvals)), minlength=nslots)

    for _ in range(K):
        if key.size == 0:
            break
        u_true = _to_unit(_mix(mix_u[slot] + key))
        v_true = _to_unit(_mix(mix_v[slot] + key))
        # the swapped field sees the family with U and V exchanged
        u = np.where(sw, v_true, u_true)
        v = np.where(sw, u_true, v_true)

        west = t <= u
        south = s <= v
        x_len = np.where(west, u, 1.0 - u)
        t_next = np.where(west, t / u, (t - u) / (1.0 - u))
        w_stay = w * (x_len * np.where(south, v, 1.0 - v)) ** BETA
        s_next = np.where(south, s / v, (s - v) / (1.0 - v))

        # child indices in the branch's own orientation: bit1 = east, bit0 = north;
        # the swapped field's children map to true-tree words with the bits exchanged
        r_local = np.where(west, _U0, _U2) + np.where(south, _U0, _U1)
        key4 = key << _U2
        k_stay = key4 + np.where(sw, ((r_local & _U1) << _U1) | (r_local >> _U1), r_local)

        # northern branches shed the southern sibling, evaluated at s = 1
        shed = np.nonzero(~south)[0]
        r_shed = r_local[shed] - _U1
        k_shed = key4[shed] + np.where(sw[shed], ((r_shed & _U1) << _U1) | (r_shed >> _U1), r_shed)
        w_shed = w[shed] * (x_len[shed] * v[shed]) ** BETA

        live_shed = w_shed >= eps
        settle(shed[~live_shed], w_shed[~live_shed], t_next[shed[~live_shed]])
        shed = shed[live_shed]

        pinned_stay = (s_next == 1.0) & (w_stay < eps)
        settle(np.nonzero(pinned_stay)[0], w_stay[pinned_stay], t_next[pinned_stay])
        keep = np.nonzero(~pinned_stay)[0]

        slot = np.concatenate([slot[keep], slot[shed]])
        key = np.concatenate([k_stay[keep], k_shed[live_shed]])
        w = np.concatenate([w_stay[keep], w_shed[live_shed]])
        t = np.concatenate([t_next[keep], t_next[shed]])
        s = np.concatenate([s_next[keep], np.ones(shed.size)])
        sw = np.concatenate([sw[keep], sw[shed]])

    settle(np.arange(slot.size, dtype=np.intp), w, t)
    return out


# -- public evaluators ---------------------------------------------------------


def z_eval(family: SplitFamily, K: int, t: float, eps: float = DEFAULT_EPS) -> float:
    """Depth-K partial-match field sample: the s = 1 slice of the constrained field."""
    return float(_field_eval([family.seed], [t], [1.0], [False], K, eps)[0])


def z_eval_grid(family: SplitFamily, K: int, ts, eps: float = DEFAULT_EPS) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    n = ts.size
    return _field_eval(np.full(n, family.seed), ts, np.ones(n), np.zeros(n, bool), K, eps)


def z_eval_seeds(seeds, K: int, t: float, eps: float = DEFAULT_EPS) -> np.ndarray:
    seeds = np.asarray(seeds)
    n = seeds.size
    return _field_eval(seeds, np.full(n, t), np.ones(n), np.zeros(n, bool), K, eps)


def yz_eval(family: SplitFamily, K: int, points, eps: float = DEFAULT_EPS):
    """(y, ybar, z) arrays at the given (t, s) points, all on one family."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    t = np.concatenate([pts[:, 0], pts[:, 0], pts[:, 0]])
    s = np.concatenate([pts[:, 1], pts[:, 1], np.ones(n)])
    sw = np.concatenate([np.zeros(n, bool), np.ones(n, bool), np.zeros(n, bool)])
    vals = _field_eval(np.full(3 * n, family.seed), t, s, sw, K, eps)
    return vals[:n], vals[n : 2 * n], vals[2 * n :]


_O_SIGNS = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]) * 0.5
_O_SWAPPED = np.array([False, False, False, False, True, True, True, True])


def _o_slots(q):
    a, b, c, d = q.astuple() if hasattr(q, "astuple") else q
    t = np.array([b, b, a, a, d, d, c, c], dtype=float)
    s = np.array([d, c, d, c, b, a, b, a], dtype=float)
    return t, s


def o_eval(family: SplitFamily, K: int, q, eps: float = DEFAULT_EPS,
           initial_weight: float = 1.0) -> float:
    """Depth-K range-field sample: the signed half-sum of eight coupled Y/Ybar values."""
    return float(o_eval_seeds([family.seed], K, q, eps, initial_weight)[0])


def o_eval_seeds(seeds, K: int, q, eps: float = DEFAULT_EPS,
                 initial_weight: float = 1.0) -> np.ndarray:
    seeds = np.asarray(seeds)
    n = seeds.size
    t, s = _o_slots(q)
    vals = _field_eval(
        np.repeat(seeds, 8),
        np.tile(t, n),
        np.tile(s, n),
        np.tile(_O_SWAPPED, n),
        K,
        eps,
        w0=np.full(8 * n, float(initial_weight)),
    )
    return vals.reshape(n, 8) @ _O_SIGNS


def o_eval_rows(seeds, K: int, queries, eps: float = DEFAULT_EPS, initial_weights=None) -> np.ndarray:
    """One o-field sample per row: family ``seeds[i]`` at query ``queries[i]``.

    ``initial_weights`` scale each row's evaluation from the start, so pruning
    thresholds act exactly as they would inside a deeper evaluation.
    """
    seeds = np.asarray(seeds)
    queries = np.asarray(queries, dtype=float).reshape(-1, 4)
    n = seeds.size
    w0 = np.ones(n) if initial_weights is None else np.asarray(initial_weights, dtype=float)
    t = np.empty(8 * n)
    s = np.empty(8 * n)
    for i, q in enumerate(queries):
        t[8 * i : 8 * i + 8], s[8 * i : 8 * i + 8] = _o_slots(q)
    vals = _field_eval(
        np.repeat(seeds, 8), t, s, np.tile(_O_SWAPPED, n), K, eps, w0=np.repeat(w0, 8)
    )
    return vals.reshape(n, 8) @ _O_SIGNS


def y_eval_points_seeds(seeds, K: int, points, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Constrained-field values, shape (seeds, points), one family per seed."""
    seeds = np.asarray(seeds)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    npts = pts.shape[0]
    vals = _field_eval(
        np.repeat(seeds, npts),
        np.tile(pts[:, 0], seeds.size),
        np.tile(pts[:, 1], seeds.size),
        np.zeros(seeds.size * npts, bool),
        K,
        eps,
    )
    return vals.reshape(seeds.size, npts)


def y_tables_seeds(seeds, K: int, tgrid, sgrid, eps: float = DEFAULT_EPS):
    """Per-seed tables Y[t, s] and Ybar[t, s] on a rectangular evaluation grid."""
    seeds = np.asarray(seeds)
    tg = np.asarray(tgrid, dtype=float)
    sg = np.asarray(sgrid, dtype=float)
    tt, ss = [x.ravel() for x in np.meshgrid(tg, sg, indexing="ij")]
    npts = tt.size
    t = np.tile(np.concatenate([tt, ss]), seeds.size)
    s = np.tile(np.concatenate([ss, tt]), seeds.size)
    sw = np.tile(np.concatenate([np.zeros(npts, bool), np.ones(npts, bool)]), seeds.size)
    vals = _field_eval(np.repeat(seeds, 2 * npts), t, s, sw, K, eps)
    vals = vals.reshape(seeds.size, 2, tg.size, sg.size)
    return vals[:, 0], vals[:, 1].transpose(0, 2, 1)


def o_grid_sup(seeds, K: int, xgrid, ygrid, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Per-seed sup of the o-field over all grid corner queries (a<=b, c<=d)."""
    xg = np.asarray(xgrid, dtype=float)
    yg = np.asarray(ygrid, dtype=float)
    yt, yb = y_tables_seeds(seeds, K, xg, yg, eps)  # yt: Y[x, y]; yb: Ybar[y, x]
    nx, ny = xg.size, yg.size
    ia, ib = np.triu_indices(nx)
    ic, id_ = np.triu_indices(ny)
    sups = np.empty(len(np.atleast_1d(seeds)))
    for k in range(sups.size):
        Y = yt[k]
        B = yb[k]
        # O[a-pair, c-pair] over feasible corner pairs
        term_x = Y[ib][:, id_] - Y[ib][:, ic] + Y[ia][:, id_] - Y[ia][:, ic]
        term_y = B[id_][:, ib].T - B[id_][:, ia].T + B[ic][:, ib].T - B[ic][:, ia].T
        sups[k] = 0.5 * float((term_x + term_y).max())
    return sups


# -- fixed-point operators -----------------------------------------------------


def fresh_uniforms(seeds):
    """An independent uniform pair per entry, keyed by the given integers."""
    keys = np.asarray(seeds, dtype=np.uint64)
    u = _to_unit(_mix(_mix(_SALT_U) + keys))
    v = _to_unit(_mix(_mix(_SALT_V) + keys))
    return u, v


def child_query_args(U: float, V: float, q):
    """Active children of a split for a query, with their volumes and sub-queries.

    Returns a list of ``(r, A_r, (a', b', c', d'))`` for the children r in
    0..3 (SW, NW, SE, NE) whose cell meets the query; the sub-query is the
    query clipped to the child's cell, affinely rescaled to its coordinates.
    """
    a, b, c, d = q.astuple() if hasattr(q, "astuple") else q
    out = []
    lo_x, hi_x = a / U, min(b / U, 1.0)
    lo_x_e, hi_x_e = max((a - U) / (1.0 - U), 0.0), (b - U) / (1.0 - U)
    lo_y, hi_y = c / V, min(d / V, 1.0)
    lo_y_n, hi_y_n = max((c - V) / (1.0 - V), 0.0), (d - V) / (1.0 - V)
    if a <= U and c <= V:
        out.append((0, U * V, (lo_x, hi_x, lo_y, hi_y)))
    if a <= U and d > V:
        out.append((1, U * (1.0 - V), (lo_x, hi_x, lo_y_n, hi_y_n)))
    if b > U and c <= V:
        out.append((2, (1.0 - U) * V, (lo_x_e, hi_x_e, lo_y, hi_y)))
    if b > U and d > V:
        out.append((3, (1.0 - U) * (1.0 - V), (lo_x_e, hi_x_e, lo_y_n, hi_y_n)))
    return out


def apply_D(fields, U: float, V: float, q) -> float:
    """One application of the four-child range-field operator sum.

    ``fields`` are four callables, the child fields in their own coordinates.
    Each child sees the query clipped to its cell and affinely rescaled; a
    child whose cell misses the query contributes nothing.
    """
    return sum(a_r ** BETA * fields[r](*args) for r, a_r, args in child_query_args(U, V, q))


def apply_D_kd(fields, V: float, q) -> float:
    """One application of the binary horizontal-split operator sum.

    The root split only refines the (c, d) pair; composing the child fields
    with the coordinate swap is the caller's choice, as in the fixed-point
    equation for the 2-d tree field.
    """
    a, b, c, d = q.astuple() if hasattr(q, "astuple") else q
    total = 0.0
    if d <= V:
        total += V ** BETA * fields[0](a, b, c / V, d / V)
    elif c > V:
        total += (1.0 - V) ** BETA * fields[1](a, b, (c - V) / (1.0 - V), (d - V) / (1.0 - V))
    else:
        total += V ** BETA * fields[0](a, b, c / V, 1.0)
        total += (1.0 - V) ** BETA * fields[1](a, b, 0.0, (d - V) / (1.0 - V))
    return total


# -- 2-d tree limit field ------------------------------------------------------

_PERP_SALT = 0x7E2D


def kd_o_eval_seeds(seeds, K: int, q, g: GTable, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Depth-K iterates of the horizontal-root 2-d tree field, one per seed.

    The iteration starts from the mean field, so the expectation is preserved
    at every depth; pruned branches settle at their exact conditional mean.
    Every branch state stores the child's evaluation argument with the
    coordinate swap already applied, so all branches are horizontal-root
    fields.
    """
    if not 0 <= K <= MAX_DEPTH_KD:
        raise ValueError(f"depth must be in 0..{MAX_DEPTH_KD}")
    seeds = np.asarray(seeds, dtype=np.uint64)
    nslots = seeds.size
    mix_kd = _mix(seeds ^ _SALT_KD)
    out = np.zeros(nslots)
    a0, b0, c0, d0 = q.astuple() if hasattr(q, "astuple") else q

    slot = np.arange(nslots, dtype=np.intp)
    key = np.ones(nslots, dtype=np.uint64)
    w = np.ones(nslots)
    qa = np.full(nslots, float(a0))
    qb = np.full(nslots, float(b0))
    qc = np.full(nslots, float(c0))
    qd = np.full(nslots, float(d0))

    def settle(slots, weights, aa, bb, cc, dd):
        if slots.size:
            vals = weights * mean_O_kd_eq(aa, bb, cc, dd, g)
            out[:] += np.bincount(slots, weights=vals, minlength=nslots)

    for _ in range(K):
        if key.size == 0:
            break
        v = _to_unit(_mix(mix_kd[slot] + key))
        low = qd <= v
        high = qc > v
        straddle = ~(low | high)

        key2 = key << _U1
        # single-child rows: refine (c, d), then swap the argument
        single = np.nonzero(~straddle)[0]
        sv = v[single]
        s_low = low[single]
        w_s = w[single] * np.where(s_low, sv, 1.0 - sv) ** BETA
        c_s = np.where(s_low, qc[single] / sv, (qc[single] - sv) / (1.0 - sv))
        d_s = np.where(s_low, qd[single] / sv, (qd[single] - sv) / (1.0 - sv))
        k_s = key2[single] + np.where(s_low, _U0, _U1)

        # straddling rows: low child clipped above, high child clipped below
        both = np.nonzero(straddle)[0]
        bv = v[both]
        w_lo = w[both] * bv ** BETA
        c_lo = qc[both] / bv
        d_lo = np.ones(both.size)
        w_hi = w[both] * (1.0 - bv) ** BETA
        c_hi = np.zeros(both.size)
        d_hi = (qd[both] - bv) / (1.0 - bv)

        new_slot = np.concatenate([slot[single], slot[both], slot[both]])
        new_key = np.concatenate([k_s, key2[both], key2[both] + _U1])
        new_w = np.concatenate([w_s, w_lo, w_hi])
        new_a = np.concatenate([c_s, c_lo, c_hi])
        new_b = np.concatenate([d_s, d_lo, d_hi])
        new_c = np.concatenate([qa[single], qa[both], qa[both]])
        new_d = np.concatenate([qb[single], qb[both], qb[both]])

        prune = new_w < eps
        settle(new_slot[prune], new_w[prune], new_a[prune], new_b[prune],
               new_c[prune], new_d[prune])
        keep = ~prune
        slot = new_slot[keep]
        key = new_key[keep]
        w = new_w[keep]
        qa = new_a[keep]
        qb = new_b[keep]
        qc = new_c[keep]
        qd = new_d[keep]

    settle(slot, w, qa, qb, qc, qd)
    return out


def kd_limit_eval(family: SplitFamily, K: int, q, g: GTable, eps: float = DEFAULT_EPS):
    """(horizontal-root, vertical-root) depth-K samples.

    The vertical-root field has the distribution of the horizontal-root field
    at the swapped query; it is sampled from an independent derived stream so
    that distributional comparisons between the two are meaningful.
    """
    o_eq = float(kd_o_eval_seeds([family.seed], K, q, g, eps)[0])
    qq = q if hasattr(q, "astuple") else QueryRect(*q)
    o_perp = float(
        kd_o_eval_seeds([mix64(family.seed, _PERP_SALT)], K, qq.swapped(), g, eps)[0]
    )
    return o_eq, o_perp


# -- field sample export -------------------------------------------------------


def write_field_csv(path, kind: str, seed: int, depth: int, points, values):
    """Write evaluated field samples: kind,seed,depth,p1,p2,p3,p4,value."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,seed,depth,p1,p2,p3,p4,value\n")
        for row, val in zip(pts, values):
            coords = [f"{x:.17g}" for x in row] + [""] * (4 - pts.shape[1])
            fh.write(f"{kind},{seed},{depth}," + ",".join(coords) + f",{val:.17g}\n")
