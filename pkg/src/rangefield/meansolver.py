"""Closed-form constants and the mean-profile fixed-point equations.

The centered, n^beta-rescaled cost of a partial-match query at t has limit
mean ``K1 * h(t)`` with ``h(t) = (t(1-t))^(beta/2)`` and
``beta = (sqrt(17)-3)/2`` (the positive root of ``x^2 + 3x - 2 = 0``).
Restricting the count to points with second coordinate below s multiplies the
mean by ``g(s)``, where g solves the one-dimensional integral fixed-point
equation

    g(s) = (beta+1)/2 * ( I1(s) + I2(s) ) + s^(beta+1)/2,
    I1(s) = int_s^1 v^beta g(s/v) dv,
    I2(s) = int_0^s (1-v)^beta g((s-v)/(1-v)) dv.

The iteration map is a sup-norm contraction with factor ``1 - 2^(-beta-1)``,
so plain fixed-point iteration from g0(s) = s converges geometrically.
``solve_g`` evaluates both integrals after the substitutions ``u = s/v`` and
``w = (s-v)/(1-v)``, which turn them into cumulative integrals over the fixed
grid:

    I1(s) = s^(beta+1)     * int_s^1 g(u) u^(-beta-2) du,
    I2(s) = (1-s)^(beta+1) * int_0^s g(w) (1-w)^(-beta-2) dw,

evaluated once per sweep by composite Gauss-Legendre panels on the grid
intervals, with g interpolated by a monotone piecewise cubic.  The endpoint
values follow from the equation itself (g(0) = g(0)/2, g(1) = g(1)/2 + 1/2)
and are updated by those exact reductions.

Note: g leaves the endpoints like ``s^((beta+1)/2)``, with unbounded
derivative.  Interpolation on a uniform grid therefore carries an endpoint
boundary layer of error ~ h^((beta+1)/2 + 1), far above the solver tolerance;
``audit_residual`` reports the off-grid residual separately for the interior
and for the full interval.

Two candidate values are kept for the uniform-query constant kappa: the
Gamma-form with numerator Gamma(2*beta+3), and K1 * int_0^1 h, which equals
the Gamma-form with numerator Gamma(2*beta+2).  They differ by the factor
2*beta+2; the Monte Carlo experiments arbitrate (`experiments.run_pm_uniform`)
rather than silently picking one.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.interpolate import PchipInterpolator


def _compute_constants():
    with mp.workdps(40):
        beta = (mp.sqrt(17) - 3) / 2
        g3 = mp.gamma(beta + 1) ** 3
        k1 = mp.gamma(2 * beta + 2) * mp.gamma(beta + 2) / (2 * g3 * mp.gamma(beta / 2 + 1) ** 2)
        kappa_printed = mp.gamma(2 * beta + 3) / (2 * g3)
        kappa_integral = mp.gamma(2 * beta + 2) / (2 * g3)
        gamma_contr = 4 / (2 * beta + 1) ** 2
        g_contr = 1 - mp.mpf(2) ** (-beta - 1)
        kd_eq = 13 * (3 - 5 * beta) / 2
        kd_perp = 13 * (2 * beta - 1)
        return tuple(float(v) for v in (beta, k1, kappa_printed, kappa_integral,
                                        gamma_contr, g_contr, kd_eq, kd_perp))


@dataclass(frozen=True)
class Constants:
    """Named constants of the limit theory, evaluated in extended precision."""

    beta: float
    k1: float
    kappa_printed: float
    kappa_integral: float
    gamma_contr: float
    g_contr: float
    kd_eq_factor: float
    kd_perp_factor: float

    def asdict(self) -> dict:
        return {
            "beta": self.beta,
            "k1": self.k1,
            "kappa_printed": self.kappa_printed,
            "kappa_integral": self.kappa_integral,
            "gamma_contr": self.gamma_contr,
            "g_contr": self.g_contr,
            "kd_eq_factor": self.kd_eq_factor,
            "kd_perp_factor": self.kd_perp_factor,
            "kappa_eq": self.kd_eq_factor * self.kappa_integral,
            "kappa_perp": self.kd_perp_factor * self.kappa_integral,
        }


CONSTANTS = Constants(*_compute_constants())
BETA = CONSTANTS.beta
K1 = CONSTANTS.k1


def h(t):
    """Limit mean profile of the partial-match cost, up to the factor K1."""
    t = np.asarray(t, dtype=float)
    out = (t * (1.0 - t)) ** (BETA / 2.0)
    return out if out.ndim else float(out)


class SolverError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class GTable:
    """Solved fixed point of the g equation, tabulated on a uniform grid."""

    def __init__(self, grid, values, residual, iterations, tol, update_norms):
        self.grid = grid
        self.values = values
        self.residual = float(residual)
        self.iterations = int(iterations)
        self.tol = float(tol)
        self.update_norms = tuple(float(u) for u in update_norms)
        self._interp = PchipInterpolator(grid, values)

    def __call__(self, s):
        out = self._interp(s)
        return out if np.ndim(out) else float(out)

    @property
    def grid_size(self) -> int:
        return self.grid.size

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.values + self.values[::-1] - 1.0)))

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0.0))

    def contraction_ratios(self, burn_in: int = 3):
        u = self.update_norms
        return tuple(u[i + 1] / u[i] for i in range(burn_in, len(u) - 1) if u[i] > 0)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("s,g\n")
            for s, g in zip(self.grid, self.values):
                fh.write(f"{s:.17g},{g:.17g}\n")


def _gl_panels(edges, order=8):
    """Gauss-Legendre nodes/weights on the panels defined by consecutive edges."""
    x, w = np.polynomial.legendre.leggauss(order)
    lo = edges[:-1]
    hi = edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]


def _g_sweep_machinery(grid, order=8):
    nodes, wts = _gl_panels(grid, order)
    w_up = nodes ** (-BETA - 2.0) * wts
    w_down = (1.0 - nodes) ** (-BETA - 2.0) * wts
    return nodes, w_up, w_down


def _g_apply(grid, values, nodes, w_up, w_down):
    """One application of the fixed-point map on the grid."""
    gv = PchipInterpolator(grid, values)(nodes)
    up_panels = (gv * w_up).sum(axis=1)
    down_panels = (gv * w_down).sum(axis=1)
    # tail/head cumulative integrals; the divergent end panels are never used
    tail = np.concatenate([np.cumsum(up_panels[::-1])[::-1], [0.0]])
    head = np.concatenate([[0.0], np.cumsum(down_panels)])
    s = grid
    out = (BETA + 1.0) / 2.0 * (s ** (BETA + 1.0) * tail + (1.0 - s) ** (BETA + 1.0) * head)
    out += 0.5 * s ** (BETA + 1.0)
    out[0] = 0.5 * values[0]
    out[-1] = 0.5 * values[-1] + 0.5
    return out


def solve_g(m: int = 4097, tol: float = 1e-10, max_iter: int = 80) -> GTable:
    """Fixed-point iteration for g on a uniform grid of m points, from g0(s) = s."""
    if m < 65:
        raise ValueError("grid size must be at least 65")
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = np.linspace(0.0, 1.0, m)
    nodes, w_up, w_down = _g_sweep_machinery(grid)
    values = grid.copy()
    updates = []
    for iteration in range(1, max_iter + 1):
        new = _g_apply(grid, values, nodes, w_up, w_down)
        upd = float(np.max(np.abs(new - values)))
        updates.append(upd)
        values = new
        if upd < tol:
            return GTable(grid, values, upd, iteration, tol, updates)
    raise SolverError(
        f"g solver did not reach tol={tol} in {max_iter} iterations (last update {updates[-1]:.3e})",
        residual=updates[-1],
    )


def audit_residual(gtable: GTable, refine: int = 2, interior: float = 1 / 16):
    """Off-grid residual of the solved table on a refine-times finer grid.

    Returns ``(sup, interior_sup)``: the full-interval sup-residual and the
    sup over grid points with ``interior <= s <= 1 - interior``.  The full sup
    is dominated by the endpoint boundary layers of the interpolant (see the
    module docstring); the interior value is the meaningful interpolation
    control.
    """
    fine = np.linspace(0.0, 1.0, refine * (gtable.grid_size - 1) + 1)
    nodes, w_up, w_down = _g_sweep_machinery(fine)
    vals = gtable(fine)
    new = _g_apply(fine, vals, nodes, w_up, w_down)
    res = np.abs(new - vals)
    inner = (fine >= interior) & (fine <= 1.0 - interior)
    return float(res.max()), float(res[inner].max())


# -- mean fields --------------------------------------------------------------


def mu(t, s, g: GTable):
    """mu(t, s) = K1 h(t) g(s), the limit mean of the constrained count."""
    return K1 * h(t) * g(s)


def mean_O(q, g: GTable):
    """Limit mean of the centered, rescaled range-query cost field."""
    a, b, c, d = _astuple(q)
    return 0.5 * (
        mu(a, d, g) - mu(a, c, g) + mu(b, d, g) - mu(b, c, g)
        + mu(c, b, g) - mu(c, a, g) + mu(d, b, g) - mu(d, a, g)
    )


def mean_O_kd(q, g: GTable):
    """(horizontal-root, vertical-root) limit means for 2-d trees.

    The vertical-root mean is the horizontal-root one at the swapped query.
    """
    a, b, c, d = _astuple(q)
    eq = mean_O_kd_eq(a, b, c, d, g)
    perp = mean_O_kd_eq(c, d, a, b, g)
    return eq, perp


def mean_O_kd_eq(a, b, c, d, g: GTable):
    """Horizontal-root 2-d tree mean; accepts scalars or broadcastable arrays.

    The group built from vertical-line profiles (mu at a and b) carries the
    larger constant 13(2 beta - 1): the horizontal root split does not
    discriminate vertical lines, so they are the expensive queries in this
    orientation.  The horizontal-line group carries 13(3 - 5 beta)/2.  The
    placement is pinned by Monte Carlo on the trees themselves and by the
    one-step mean identity of the fixed-point operators (see the tests).
    """
    first = mu(a, d, g) - mu(a, c, g) + mu(b, d, g) - mu(b, c, g)
    second = mu(c, b, g) - mu(c, a, g) + mu(d, b, g) - mu(d, a, g)
    return CONSTANTS.kd_perp_factor / 2.0 * first + CONSTANTS.kd_eq_factor / 2.0 * second


def _astuple(q):
    if hasattr(q, "astuple"):
        return q.astuple()
    return tuple(float(v) for v in q)


# -- the two-dimensional mean operator ----------------------------------------


def _graded_edges(lo, hi, panels, subdivisions=16):
    """Uniform panels on [lo, hi] with both end panels split geometrically.

    The integrands have algebraic derivative singularities where a kernel
    power or a mapped argument of h or g reaches 0 or 1, which only happens at
    segment ends; geometric cascades there restore full panel accuracy without
    starving the smooth part.
    """
    if hi <= lo:
        return None
    base = np.linspace(lo, hi, panels + 1)
    cascade = 2.0 ** -np.arange(1, subdivisions)
    head = base[0] + (base[1] - base[0]) * cascade
    tail = base[-1] - (base[-1] - base[-2]) * cascade
    return np.concatenate([[base[0]], head[::-1], base[1:-1], tail, [base[-1]]])


def _segment_rule(lo, hi, panels, order=8):
    edges = _graded_edges(lo, hi, panels)
    if edges is None:
        return None
    nodes, wts = _gl_panels(edges, order)
    return nodes.ravel(), wts.ravel()


def apply_G2D(t: float, s: float, g: GTable, panels: int = 32, order: int = 8,
              homogeneous_only: bool = False, zero_field: bool = False) -> float:
    """Evaluate the six-term two-dimensional mean operator at (t, s).

    The operator is applied to the product field ``K1 h (x) g`` (or to the zero
    field, leaving only the two inhomogeneous terms, when ``zero_field``).
    Each double integral is evaluated as a full tensor Gauss-Legendre sum with
    ``panels`` panels per axis segment, graded toward the interior breakpoints
    u = t and v = s where the mapped argument reaches an endpoint of [0, 1]
    and the integrand loses smoothness.
    """
    u_right = _segment_rule(t, 1.0, panels, order=order)
    u_left = _segment_rule(0.0, t, panels, order=order)
    v_right = _segment_rule(s, 1.0, panels, order=order)
    v_left = _segment_rule(0.0, s, panels, order=order)

    def tensor(u_rule, v_rule, u_kernel, v_kernel, u_arg, v_arg, v_is_g):
        if u_rule is None or v_rule is None:
            return 0.0
        un, uw = u_rule
        vn, vw = v_rule
        fu = u_kernel(un) * h(u_arg(un)) * uw
        vvals = g(v_arg(vn)) if v_is_g else np.ones_like(vn)
        fv = v_kernel(vn) * vvals * vw
        return float(np.sum(np.outer(fu, fv)))

    ub = lambda u: u ** BETA
    omub = lambda u: (1.0 - u) ** BETA
    right_x = lambda u: t / u
    left_x = lambda u: (t - u) / (1.0 - u)
    right_y = lambda v: s / v
    left_y = lambda v: (s - v) / (1.0 - v)

    total = 0.0
    if not zero_field:
        total += tensor(u_right, v_right, ub, ub, right_x, right_y, True)
        total += tensor(u_left, v_left, omub, omub, left_x, left_y, True)
        total += tensor(u_right, v_left, ub, omub, right_x, left_y, True)
        total += tensor(u_left, v_right, omub, ub, left_x, right_y, True)
    if not homogeneous_only:
        total += tensor(u_right, v_left, ub, ub, right_x, left_y, False)
        total += tensor(u_left, v_left, omub, ub, left_x, left_y, False)
    return K1 * total


def residual_G2D(g: GTable, grid: int = 33, panels: int = 32, order: int = 8) -> float:
    """sup over an interior grid of |G(K1 h (x) g) - K1 h g|.

    This audits, end to end, that the solved product field is a fixed point of
    the genuinely two-dimensional mean operator (not merely of its factorized
    one-dimensional reduction).
    """
    pts = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    worst = 0.0
    for t in pts:
        for s in pts:
            val = apply_G2D(float(t), float(s), g, panels=panels, order=order)
            worst = max(worst, abs(val - mu(float(t), float(s), g)))
    return worst
