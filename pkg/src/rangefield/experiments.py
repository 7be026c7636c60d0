"""Seeded Monte Carlo experiments: discrete tree costs against limit predictions.

Every experiment draws per-trial point sets from counter-based streams keyed
by (config seed, trial index), so results are byte-reproducible and invariant
under trial reordering or worker count.  Per-trial raw statistics are kept and
persisted next to the summary rows, so every reported number can be recomputed
offline.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from . import limitfield as lf
from . import meansolver as ms
from .geometry import QueryRect
from .kdtree import HORIZONTAL, VERTICAL, KdTree
from .quadtree import Quadtree

EXPERIMENTS = (
    "pm-fixed",
    "pm-uniform",
    "one-sided",
    "constrained",
    "range-field",
    "worst-case",
    "limit-vs-discrete",
    "fixpoint-residual",
    "kd-means",
)
TREES = ("quadtree", "kd-horizontal", "kd-vertical")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


@dataclass
class ExperimentConfig:
    experiment: str
    tree: str = "quadtree"
    n_values: tuple = (100_000,)
    trials: int = 200
    seed: int = 0
    depth_K: int = 30
    grid: int = 11
    queries: tuple = ((0.2, 0.7, 0.3, 0.8),)
    t_values: tuple = (0.5,)
    ts_values: tuple = ((0.5, 0.5),)
    limit_trials: int = 2000
    prune_eps: float = lf.DEFAULT_EPS

    def __post_init__(self):
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.tree not in TREES:
            problems.append(f"tree must be one of {TREES}, got {self.tree!r}")
        if not self.n_values or any(int(n) < 0 for n in self.n_values):
            problems.append("n_values must be nonempty nonnegative integers")
        elif list(self.n_values) != sorted(self.n_values):
            problems.append("n_values must be sorted ascending")
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if self.limit_trials < 1:
            problems.append("limit_trials must be >= 1")
        if not (0 <= self.depth_K <= lf.MAX_DEPTH_QUAD):
            problems.append(f"depth_K must be in 0..{lf.MAX_DEPTH_QUAD}")
        if self.grid < 2:
            problems.append("grid must be >= 2")
        for q in self.queries:
            a, b, c, d = q
            if not (0 <= a <= b <= 1 and 0 <= c <= d <= 1):
                problems.append(f"query {q} not in the feasible set")
        for t in self.t_values:
            if not 0 <= t <= 1:
                problems.append(f"t value {t} outside [0,1]")
        for t, s in self.ts_values:
            if not (0 <= t <= 1 and 0 <= s <= 1):
                problems.append(f"(t,s) value {(t, s)} outside the unit square")
        if not self.prune_eps > 0:
            problems.append("prune_eps must be positive")
        if problems:
            raise ConfigError(problems)
        self.n_values = tuple(int(n) for n in self.n_values)
        self.queries = tuple(tuple(float(x) for x in q) for q in self.queries)
        self.t_values = tuple(float(t) for t in self.t_values)
        self.ts_values = tuple((float(t), float(s)) for t, s in self.ts_values)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError([f"unknown field {f!r}" for f in unknown])
        if "experiment" not in data:
            raise ConfigError(["missing field 'experiment'"])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())

    def add_row(self, n, probe, estimate, std_error, prediction):
        prediction = float("nan") if prediction is None else float(prediction)
        ratio = estimate / prediction if np.isfinite(prediction) and prediction != 0 else float("nan")
        self.rows.append(
            {
                "experiment": self.config.experiment,
                "n": n,
                "probe": probe,
                "estimate": estimate,
                "std_error": std_error,
                "prediction": prediction if prediction is not None else float("nan"),
                "ratio": ratio,
            }
        )

    def add_raw(self, n, probe, values):
        self.raw[(n, probe)] = np.asarray(values, dtype=float)

    def write(self, outdir):
        os.makedirs(outdir, exist_ok=True)
        name = self.config.experiment
        rows_path = os.path.join(outdir, f"{name}.csv")
        with open(rows_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("experiment,n,probe,estimate,std_error,prediction,ratio\n")
            for r in self.rows:
                fh.write(
                    f"{r['experiment']},{r['n']},{r['probe']},{r['estimate']:.17g},"
                    f"{r['std_error']:.17g},{r['prediction']:.17g},{r['ratio']:.17g}\n"
                )
        trials_path = os.path.join(outdir, f"{name}_trials.csv")
        with open(trials_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("experiment,n,probe,trial,value\n")
            for (n, probe), values in self.raw.items():
                for i, v in enumerate(values):
                    fh.write(f"{name},{n},{probe},{i},{v:.17g}\n")
        summary_path = os.path.join(outdir, "summary.json")
        summary = {
            "experiment": name,
            "config": self.config.to_dict(),
            "checks": self.checks,
            "all_pass": self.all_pass,
            "notes": self.notes,
            "wall_time_s": self.wall_time,
            "version": __version__,
        }
        with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return rows_path, trials_path, summary_path


# -- shared machinery ----------------------------------------------------------

_G_TABLE = None


def g_table() -> ms.GTable:
    """Shared solved g table (the mean predictions all need it)."""
    global _G_TABLE
    if _G_TABLE is None:
        _G_TABLE = ms.solve_g()
    return _G_TABLE


def worker_count() -> int:
    env = os.environ.get("RANGEFIELD_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based per-trial stream; trial order never matters."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, trial], dtype=np.uint64)))


def _map_trials(fn, trials: int):
    workers = worker_count()
    if workers == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def _build(tree_kind: str, points):
    if tree_kind == "quadtree":
        return Quadtree(points)
    axis = HORIZONTAL if tree_kind == "kd-horizontal" else VERTICAL
    return KdTree(points, root_axis=axis)


def _mean_field(tree_kind: str, q) -> float:
    g = g_table()
    if tree_kind == "quadtree":
        return float(ms.mean_O(q, g))
    eq, perp = ms.mean_O_kd(q, g)
    return float(eq if tree_kind == "kd-horizontal" else perp)


def _limit_seeds(cfg: ExperimentConfig, salt: int = 0):
    return np.array([lf.mix64(cfg.seed, 0xF1E1D, salt, i) for i in range(cfg.limit_trials)],
                    dtype=np.uint64)


def _summarize(values):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, se


# -- experiment runners --------------------------------------------------------


def run_pm_fixed(cfg: ExperimentConfig) -> ExperimentResult:
    """Fixed-line partial-match cost against the K1 h(t) n^beta profile."""
    res = ExperimentResult(cfg)
    start = time.time()
    beta = ms.BETA
    edge_rates = {t: [] for t in cfg.t_values if ms.h(t) == 0.0}
    for n in cfg.n_values:
        def one(trial):
            tree = _build(cfg.tree, trial_rng(cfg.seed, trial).random((n, 2)))
            return [tree.partial_match_cost(t) for t in cfg.t_values]

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        for j, t in enumerate(cfg.t_values):
            mean, se = _summarize(stats[:, j])
            pred = _mean_field(cfg.tree, QueryRect(t, t, 0.0, 1.0)) * n ** beta
            probe = f"t={t:g}"
            res.add_row(n, probe, mean, se, pred)
            res.add_raw(n, probe, stats[:, j])
            if t in edge_rates:
                edge_rates[t].append(mean / n ** beta)
            if n == cfg.n_values[-1] and pred > 0:
                res.checks[f"pm-fixed:n={n}:t={t:g}:within-10pct"] = bool(abs(mean / pred - 1) <= 0.10)
    # boundary lines have a strictly smaller growth exponent (sqrt(2) - 1), so the
    # n^-beta rate must decay across n; measured ~0.30 at t=0, n=1e5
    for t, rates in edge_rates.items():
        if len(rates) >= 2:
            res.checks[f"pm-fixed:t={t:g}:edge-rate-decays"] = bool(
                all(b < a for a, b in zip(rates, rates[1:]))
            )
    res.wall_time = time.time() - start
    return res


def run_pm_uniform(cfg: ExperimentConfig) -> ExperimentResult:
    """Uniformly random partial match: arbitrates between the two kappa candidates."""
    res = ExperimentResult(cfg)
    start = time.time()
    beta = ms.BETA
    cands = {"kappa_integral": ms.CONSTANTS.kappa_integral, "kappa_printed": ms.CONSTANTS.kappa_printed}
    rates = []
    rate_ses = []
    for n in cfg.n_values:
        def one(trial):
            rng = trial_rng(cfg.seed, trial)
            pts = rng.random((n, 2))
            xi = rng.random()
            return _build(cfg.tree, pts).partial_match_cost(xi)

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        mean, se = _summarize(stats)
        rates.append(mean / n ** beta)
        rate_ses.append(se / n ** beta)
        res.add_raw(n, "xi", stats)
        for name, kappa in cands.items():
            res.add_row(n, f"xi~{name}", mean, se, kappa * n ** beta)
    n_top = cfg.n_values[-1]
    rate = rates[-1]
    consistent = [name for name, kappa in cands.items() if abs(rate / kappa - 1) <= 0.10]
    res.checks[f"pm-uniform:n={n_top}:exactly-one-candidate"] = len(consistent) == 1
    res.notes["arbitrated_kappa"] = consistent[0] if len(consistent) == 1 else None
    res.notes["rate_estimates"] = dict(zip((str(n) for n in cfg.n_values), rates))
    if len(rates) >= 2:
        # stabilization at Monte Carlo resolution: successive rates consistent
        res.checks["pm-uniform:rate-stabilizes"] = bool(
            all(
                abs(b - a) <= 3.0 * float(np.hypot(sa, sb))
                for (a, sa), (b, sb) in zip(zip(rates, rate_ses), zip(rates[1:], rate_ses[1:]))
            )
        )
    res.wall_time = time.time() - start
    return res


def run_one_sided(cfg: ExperimentConfig) -> ExperimentResult:
    """One-sided partial match halves, plus the two-line strip-query probe."""
    if cfg.tree != "quadtree":
        raise ConfigError(["one-sided requires tree='quadtree'"])
    res = ExperimentResult(cfg)
    start = time.time()
    beta, k1 = ms.BETA, ms.K1
    pairs = [(min(t, s), max(t, s)) for t, s in cfg.ts_values if t != s]
    for n in cfg.n_values:
        def one(trial):
            tree = Quadtree(trial_rng(cfg.seed, trial).random((n, 2)))
            out = []
            for t in cfg.t_values:
                lt, ge = tree.one_sided_costs(t)
                out.extend([lt, ge])
            for s, t in pairs:
                o = tree.range_cost(QueryRect(s, t, 0.0, 1.0))
                out.append((o - n * (t - s)) / n ** beta)
            return out

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        col = 0
        for t in cfg.t_values:
            lt_mean, lt_se = _summarize(stats[:, col])
            ge_mean, ge_se = _summarize(stats[:, col + 1])
            half = 0.5 * k1 * ms.h(t) * n ** beta
            res.add_row(n, f"t={t:g}:lt", lt_mean, lt_se, half)
            res.add_row(n, f"t={t:g}:ge", ge_mean, ge_se, half)
            res.add_raw(n, f"t={t:g}:lt", stats[:, col])
            res.add_raw(n, f"t={t:g}:ge", stats[:, col + 1])
            if n == cfg.n_values[-1]:
                total = lt_mean + ge_mean
                if total > 0:
                    res.checks[f"one-sided:n={n}:t={t:g}:half-ratio"] = bool(
                        0.45 <= ge_mean / total <= 0.55
                    )
                if t == 0.5:
                    diff = stats[:, col + 1] - stats[:, col]
                    dmean, dse = _summarize(diff)
                    res.checks[f"one-sided:n={n}:t=0.5:reflection-2se"] = bool(
                        abs(dmean) <= 2 * dse
                    )
            col += 2
        for s, t in pairs:
            mean, se = _summarize(stats[:, col])
            pred = 0.5 * k1 * (ms.h(t) + ms.h(s))
            probe = f"strip({s:g},{t:g})"
            res.add_row(n, probe, mean, se, pred)
            res.add_raw(n, probe, stats[:, col])
            if n == cfg.n_values[-1]:
                res.checks[f"one-sided:n={n}:{probe}:within-10pct"] = bool(abs(mean / pred - 1) <= 0.10)
            col += 1
    res.wall_time = time.time() - start
    return res


def run_constrained(cfg: ExperimentConfig) -> ExperimentResult:
    """Constrained partial match against the K1 h(t) g(s) mean surface."""
    if cfg.tree != "quadtree":
        raise ConfigError(["constrained requires tree='quadtree'"])
    res = ExperimentResult(cfg)
    start = time.time()
    beta, k1 = ms.BETA, ms.K1
    g = g_table()
    for n in cfg.n_values:
        def one(trial):
            tree = Quadtree(trial_rng(cfg.seed, trial).random((n, 2)))
            out = []
            for t, s in cfg.ts_values:
                y, _, y_ge = tree.constrained_costs(t, s)
                out.extend([y, y_ge])
            return out

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        for j, (t, s) in enumerate(cfg.ts_values):
            pred = k1 * ms.h(t) * g(s) * n ** beta
            y_mean, y_se = _summarize(stats[:, 2 * j])
            ge_mean, ge_se = _summarize(stats[:, 2 * j + 1])
            probe = f"(t,s)=({t:g},{s:g})"
            res.add_row(n, probe, y_mean, y_se, pred)
            res.add_row(n, probe + ":ge", ge_mean, ge_se, 0.5 * pred)
            res.add_raw(n, probe, stats[:, 2 * j])
            res.add_raw(n, probe + ":ge", stats[:, 2 * j + 1])
            if n == cfg.n_values[-1] and pred > 0:
                res.checks[f"constrained:n={n}:{probe}:within-10pct"] = bool(
                    abs(y_mean / pred - 1) <= 0.10
                )
    res.wall_time = time.time() - start
    return res


def run_range_field(cfg: ExperimentConfig) -> ExperimentResult:
    """Centered, rescaled range-query cost against the limit mean field."""
    res = ExperimentResult(cfg)
    start = time.time()
    beta = ms.BETA
    for n in cfg.n_values:
        def one(trial):
            tree = _build(cfg.tree, trial_rng(cfg.seed, trial).random((n, 2)))
            out = []
            for q in cfg.queries:
                qq = QueryRect(*q)
                out.append((tree.range_cost(qq) - n * qq.vol) / n ** beta)
            return out

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        for j, q in enumerate(cfg.queries):
            mean, se = _summarize(stats[:, j])
            pred = _mean_field(cfg.tree, QueryRect(*q))
            probe = "q=" + ",".join(f"{x:g}" for x in q)
            res.add_row(n, probe, mean, se, pred)
            res.add_raw(n, probe, stats[:, j])
            if n == cfg.n_values[-1] and pred != 0:
                res.checks[f"range-field:n={n}:{probe}:within-10pct"] = bool(
                    abs(mean / pred - 1) <= 0.10
                )
    res.wall_time = time.time() - start
    return res


# -- worst case over a corner grid ---------------------------------------------


def grid_tables(tree, xg, yg):
    """All decomposition ingredients tabulated on the corner grid."""
    nx, ny = xg.size, yg.size
    y_ge = np.empty((nx, ny))
    y_lt = np.empty((nx, ny))
    b_ge = np.empty((ny, nx))
    b_lt = np.empty((ny, nx))
    for i, t in enumerate(xg):
        vis = tree.visited_mask(QueryRect(t, t, 0.0, 1.0))
        vx, vy = tree.px[vis], tree.py[vis]
        east = np.sort(vy[vx > t])
        west = np.sort(vy[vx <= t])
        y_ge[i] = np.searchsorted(east, yg, side="right")
        y_lt[i] = np.searchsorted(west, yg, side="right")
    for j, t in enumerate(yg):
        vis = tree.visited_mask(QueryRect(0.0, 1.0, t, t))
        vx, vy = tree.px[vis], tree.py[vis]
        north = np.sort(vx[vy > t])
        south = np.sort(vx[vy <= t])
        b_ge[j] = np.searchsorted(north, xg, side="right")
        b_lt[j] = np.searchsorted(south, xg, side="right")
    d_tab = np.empty((4, nx, ny))
    for i, u in enumerate(xg):
        for j, v in enumerate(yg):
            d_tab[:, i, j] = tree.corner_region_counts(u, v)
    below_x = tree.px[None, :] <= xg[:, None]
    below_y = tree.py[None, :] <= yg[:, None]
    cum = below_x.astype(np.int64) @ below_y.T.astype(np.int64)
    return y_ge, y_lt, b_ge, b_lt, d_tab, cum


def grid_O(tree, xg, yg):
    """O_n over all grid corner queries, assembled from the exact decomposition."""
    y_ge, y_lt, b_ge, b_lt, d_tab, cum = grid_tables(tree, xg, yg)
    ia, ib = np.triu_indices(xg.size)
    ic, id_ = np.triu_indices(yg.size)
    n_in = cum[ib][:, id_] - cum[ia][:, id_] - cum[ib][:, ic] + cum[ia][:, ic]
    y_term = y_ge[ib][:, id_] - y_ge[ib][:, ic] + y_lt[ia][:, id_] - y_lt[ia][:, ic]
    b_term = (b_ge[id_][:, ib] - b_ge[id_][:, ia] + b_lt[ic][:, ib] - b_lt[ic][:, ia]).T
    d_term = d_tab[0][ia][:, ic] + d_tab[1][ia][:, id_] + d_tab[2][ib][:, ic] + d_tab[3][ib][:, id_]
    return n_in + y_term + b_term + d_term, (ia, ib, ic, id_)


def grid_sup_stat(tree, xg, yg) -> float:
    """sup over the grid queries of (O_n - n Vol) / n^beta."""
    O, (ia, ib, ic, id_) = grid_O(tree, xg, yg)
    vol = (xg[ib] - xg[ia])[:, None] * (yg[id_] - yg[ic])[None, :]
    n = tree.n
    return float(((O - n * vol) / n ** ms.BETA).max())


def run_worst_case(cfg: ExperimentConfig) -> ExperimentResult:
    """Grid sup of the centered cost, against the limit-field grid sup."""
    res = ExperimentResult(cfg)
    start = time.time()
    xg = np.linspace(0.0, 1.0, cfg.grid)
    yg = xg.copy()
    probe_q = QueryRect(*cfg.queries[0])
    sups = {}
    for n in cfg.n_values:
        def one(trial):
            tree = _build(cfg.tree, trial_rng(cfg.seed, trial).random((n, 2)))
            sup = grid_sup_stat(tree, xg, yg)
            fixed = (tree.range_cost(probe_q) - n * probe_q.vol) / n ** ms.BETA
            return sup, fixed

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        mean, se = _summarize(stats[:, 0])
        sups[n] = mean
        res.add_row(n, "grid-sup", mean, se, float("nan"))
        res.add_raw(n, "grid-sup", stats[:, 0])
        res.add_raw(n, "fixed-probe", stats[:, 1])
        res.checks[f"worst-case:n={n}:sup-dominates-probe"] = bool(np.all(stats[:, 0] >= stats[:, 1]))
    limit_sups = lf.o_grid_sup(_limit_seeds(cfg), cfg.depth_K, xg, yg, cfg.prune_eps)
    lmean, lse = _summarize(limit_sups)
    res.add_row(0, "limit-grid-sup", lmean, lse, float("nan"))
    res.add_raw(0, "limit-grid-sup", limit_sups)
    ns = list(cfg.n_values)
    for lo, hi in zip(ns, ns[1:]):
        res.checks[f"worst-case:stabilization:{lo}->{hi}"] = bool(abs(sups[hi] / sups[lo] - 1) <= 0.20)
    res.checks[f"worst-case:n={ns[-1]}:matches-limit-20pct"] = bool(abs(sups[ns[-1]] / lmean - 1) <= 0.20)
    res.wall_time = time.time() - start
    return res


# -- two-pipeline and fixed-point experiments -----------------------------------


def fixpoint_moment_rows(cfg: ExperimentConfig, res: ExperimentResult):
    """Depth-(K+1) field samples against one application of the child operators.

    The right side draws a fresh split pair and composes four independent
    depth-K fields, each evaluated from initial weight A_r^beta so both sides
    prune identically in law.
    """
    K = cfg.depth_K
    for q in cfg.queries:
        qq = QueryRect(*q)
        seeds = _limit_seeds(cfg, salt=101)
        lhs = lf.o_eval_seeds(seeds, K + 1, qq, cfg.prune_eps)
        uv_seeds = _limit_seeds(cfg, salt=202)
        u, v = lf.fresh_uniforms(uv_seeds)
        row_seed, row_owner, row_query, row_weight = [], [], [], []
        for k in range(uv_seeds.size):
            fam = lf.SplitFamily(int(uv_seeds[k]))
            for r, a_r, args in lf.child_query_args(float(u[k]), float(v[k]), qq):
                row_seed.append(fam.spawn(r).seed)
                row_owner.append(k)
                row_query.append(args)
                row_weight.append(a_r ** ms.BETA)
        vals = lf.o_eval_rows(row_seed, K, row_query, cfg.prune_eps, row_weight)
        rhs = np.bincount(row_owner, weights=vals, minlength=uv_seeds.size)
        probe = "q=" + ",".join(f"{x:g}" for x in q)
        for moment, label in ((1, "m1"), (2, "m2")):
            lm, lse = _summarize(lhs ** moment)
            rm, rse = _summarize(rhs ** moment)
            res.add_row(0, f"{probe}:fix-{label}", lm, lse, rm)
            gap = abs(lm - rm)
            tol = 3.0 * float(np.hypot(lse, rse))
            res.checks[f"fixpoint:{probe}:{label}-3se"] = bool(gap <= tol)
        res.add_raw(0, f"{probe}:fix-lhs", lhs)
        res.add_raw(0, f"{probe}:fix-rhs", rhs)


def run_fixpoint_residual(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(cfg)
    start = time.time()
    fixpoint_moment_rows(cfg, res)
    res.wall_time = time.time() - start
    return res


def run_limit_vs_discrete(cfg: ExperimentConfig) -> ExperimentResult:
    """Means and variances of both pipelines at fixed queries, plus the fixed-point probe."""
    res = ExperimentResult(cfg)
    start = time.time()
    beta = ms.BETA
    n = cfg.n_values[-1]

    def one(trial):
        tree = _build(cfg.tree, trial_rng(cfg.seed, trial).random((n, 2)))
        out = []
        for q in cfg.queries:
            qq = QueryRect(*q)
            o = tree.range_cost(qq)
            n_in = tree.count_points_in(qq)
            out.append(((o - n * qq.vol) / n ** beta, (o - n_in) / n ** beta))
        return out

    stats = np.array(_map_trials(one, cfg.trials), dtype=float)  # (trials, queries, 2)
    seeds = _limit_seeds(cfg)
    for j, q in enumerate(cfg.queries):
        qq = QueryRect(*q)
        limit_vals = lf.o_eval_seeds(seeds, cfg.depth_K, qq, cfg.prune_eps)
        probe = "q=" + ",".join(f"{x:g}" for x in q)
        full = stats[:, j, 0]
        perimeter = stats[:, j, 1]
        d_mean, d_se = _summarize(full)
        l_mean, l_se = _summarize(limit_vals)
        pred = _mean_field(cfg.tree, qq)
        res.add_row(n, probe + ":mean", d_mean, d_se, pred)
        res.add_row(n, probe + ":mean-vs-limit", d_mean, d_se, l_mean)
        d_var = float(full.var(ddof=1))
        l_var = float(limit_vals.var(ddof=1))
        var_se = d_var * np.sqrt(2.0 / (cfg.trials - 1))
        res.add_row(n, probe + ":var", d_var, float(var_se), l_var)
        res.add_raw(n, probe, full)
        res.add_raw(0, probe + ":limit", limit_vals)
        if pred != 0:
            res.checks[f"limit-vs-discrete:{probe}:mean-within-10pct"] = bool(abs(d_mean / pred - 1) <= 0.10)
            res.checks[f"limit-vs-discrete:{probe}:mean-vs-limit-10pct"] = bool(
                abs(d_mean / l_mean - 1) <= 0.10
            )
            res.checks[f"limit-vs-discrete:{probe}:var-within-25pct"] = bool(
                abs(d_var / l_var - 1) <= 0.25
            )
        # the full statistic carries the point-count CLT term, variance
        # Vol(1-Vol) n^(1-2 beta), on top of the limit variance; record the
        # decomposition so a variance-check failure is interpretable
        res.notes[probe + ":variance_decomposition"] = {
            "discrete_full": d_var,
            "discrete_perimeter": float(perimeter.var(ddof=1)),
            "limit": l_var,
            "point_count_term_theory": float(qq.vol * (1 - qq.vol) * n ** (1 - 2 * beta)),
            "perimeter_over_limit": float(perimeter.var(ddof=1) / l_var) if l_var else float("nan"),
        }
    fixpoint_moment_rows(cfg, res)
    res.wall_time = time.time() - start
    return res


def run_kd_means(cfg: ExperimentConfig) -> ExperimentResult:
    """2-d tree range-field means for both orientations, plus the swap check."""
    res = ExperimentResult(cfg)
    start = time.time()
    beta = ms.BETA
    g = g_table()
    for n in cfg.n_values:
        def one(trial):
            rng = trial_rng(cfg.seed, trial)
            pts = rng.random((n, 2))
            xi = rng.random()
            t_eq = KdTree(pts, root_axis=HORIZONTAL)
            t_perp = KdTree(pts, root_axis=VERTICAL)
            out = []
            for q in cfg.queries:
                qq = QueryRect(*q)
                sq = qq.swapped()
                out.append((t_eq.range_cost(qq) - n * qq.vol) / n ** beta)
                out.append((t_perp.range_cost(qq) - n * qq.vol) / n ** beta)
                out.append((t_eq.range_cost(sq) - n * sq.vol) / n ** beta)
            out.append(t_eq.partial_match_cost(xi))
            out.append(t_perp.partial_match_cost(xi))
            return out

        stats = np.array(_map_trials(one, cfg.trials), dtype=float)
        for j, q in enumerate(cfg.queries):
            probe = "q=" + ",".join(f"{x:g}" for x in q)
            eq_pred, perp_pred = ms.mean_O_kd(QueryRect(*q), g)
            eq_mean, eq_se = _summarize(stats[:, 3 * j])
            perp_mean, perp_se = _summarize(stats[:, 3 * j + 1])
            eqswap_mean, eqswap_se = _summarize(stats[:, 3 * j + 2])
            res.add_row(n, probe + ":eq", eq_mean, eq_se, float(eq_pred))
            res.add_row(n, probe + ":perp", perp_mean, perp_se, float(perp_pred))
            res.add_raw(n, probe + ":eq", stats[:, 3 * j])
            res.add_raw(n, probe + ":perp", stats[:, 3 * j + 1])
            res.add_raw(n, probe + ":eq-swapped-q", stats[:, 3 * j + 2])
            if n == cfg.n_values[-1]:
                res.checks[f"kd-means:n={n}:{probe}:eq-within-10pct"] = bool(
                    abs(eq_mean / eq_pred - 1) <= 0.10
                )
                res.checks[f"kd-means:n={n}:{probe}:perp-within-10pct"] = bool(
                    abs(perp_mean / perp_pred - 1) <= 0.10
                )
                diff = stats[:, 3 * j + 1] - stats[:, 3 * j + 2]
                dmean, dse = _summarize(diff)
                res.checks[f"kd-means:n={n}:{probe}:swap-2se"] = bool(abs(dmean) <= 2 * dse)
        pm_eq, pm_eq_se = _summarize(stats[:, -2])
        pm_perp, pm_perp_se = _summarize(stats[:, -1])
        # a vertical-line query pays the larger factor in the horizontal-root
        # tree (whose root split does not discriminate it) and vice versa
        kappa = ms.CONSTANTS.kappa_integral
        res.add_row(n, "xi:eq", pm_eq, pm_eq_se, ms.CONSTANTS.kd_perp_factor * kappa * n ** beta)
        res.add_row(n, "xi:perp", pm_perp, pm_perp_se, ms.CONSTANTS.kd_eq_factor * kappa * n ** beta)
        res.add_raw(n, "xi:eq", stats[:, -2])
        res.add_raw(n, "xi:perp", stats[:, -1])
    res.wall_time = time.time() - start
    return res


RUNNERS = {
    "pm-fixed": run_pm_fixed,
    "pm-uniform": run_pm_uniform,
    "one-sided": run_one_sided,
    "constrained": run_constrained,
    "range-field": run_range_field,
    "worst-case": run_worst_case,
    "limit-vs-discrete": run_limit_vs_discrete,
    "fixpoint-residual": run_fixpoint_residual,
    "kd-means": run_kd_means,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg)
