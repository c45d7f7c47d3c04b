"""Monte-Carlo runner comparing noisy l1, Modified-CS and Add-LS-Del.

Each realization draws its own matrices, signal sequence and noise from
independent streams keyed by ``(master_seed, realization, purpose, t)``,
so realization ``r`` is identical whatever the realization count.
Per-realization accumulators are reduced in realization order, which makes
the exported series bit-identical for a given seed.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
import csv
import json
import math

import numpy as np

from .sensing import gen_bounded_uniform_noise, gen_gaussian_unit_columns, measure
from .signal_model import MODEL_IDS, Model1Params, Model2Params, generate_sequence
from .trackers import ADD_NOISE_CAP, DELETE_NOISE_FLOOR, TrackerState, addlsdel_step, modcs_step
from .wl1 import factorize

__all__ = [
    "ALGORITHMS",
    "COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "MetricsSeries",
    "export",
    "load_json",
    "nmse",
    "run_experiment",
    "run_realization",
    "track",
    "support_errors",
    "write_svg",
]

ALGORITHMS = ("noisy_l1", "modcs", "addlsdel")
COLUMNS = ("t", "algorithm", "nmse", "extras", "misses", "violations", "nonconverged")

# stream purposes
_SIGNAL, _A0, _A, _NOISE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str = "assumptions2"
    m: int = 200
    S: int = 20
    S_a: int = 2
    # realistic model
    b: int = 3
    d_min: int = 3
    a_min: float = 1.0
    r_min: float = 1.0
    # ladder model
    r: float = 1.0
    d: int = 3
    # sensing
    n0: int = 160
    n: int = 57
    c0: float = 0.01266
    c: float = 0.1266
    matrix_mode: str = "fixed"
    # protocol
    T_max: int = 200
    realizations: int = 50
    algorithms: tuple = ALGORITHMS
    master_seed: int = 0
    thresholds: object = "auto"
    invariant_checks: bool = True
    delete_floor: float = DELETE_NOISE_FLOOR
    add_cap: float = ADD_NOISE_CAP
    steady_start: int = 20
    record_errors: bool = False
    workers: int = 1

    def __post_init__(self):
        self.algorithms = tuple(self.algorithms)

    def validate(self):
        if self.model not in MODEL_IDS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODEL_IDS}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.T_max < 1:
            raise ConfigError("T_max must be >= 1")
        if not self.algorithms:
            raise ConfigError("at least one algorithm required")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS}")
        if self.matrix_mode not in ("fixed", "varying"):
            raise ConfigError(f"matrix_mode must be 'fixed' or 'varying', got {self.matrix_mode!r}")
        if min(self.n0, self.n) < 1 or min(self.c0, self.c) < 0:
            raise ConfigError("measurement counts must be >= 1 and noise widths >= 0")
        if not (self.thresholds == "auto" or isinstance(self.thresholds, dict)):
            raise ConfigError("thresholds must be 'auto' or a mapping of fixed values")
        try:
            self.model_params()
        except ValueError as e:
            raise ConfigError(f"infeasible model parameters: {e}") from e
        return self

    def model_params(self):
        if self.model == "assumptions1":
            return Model1Params(S=self.S, S_a=self.S_a, r=self.r, d=self.d, m=self.m)
        return Model2Params(S=self.S, S_a=self.S_a, d_min=self.d_min, a_min=self.a_min,
                            r_min=self.r_min, b=self.b, m=self.m,
                            early_removal=self.model == "assumptions3")

    def to_dict(self):
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        d.pop("workers")
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class MetricsSeries:
    """Per-realization accumulators plus the reduced per-time metrics.

    Arrays indexed ``[realization, algorithm, t]`` (``[realization, t]`` for
    signal quantities).  Reduced series are ratios of means over realizations.
    """
    config: ExperimentConfig
    algorithms: tuple
    err2: np.ndarray
    energy: np.ndarray
    extras_count: np.ndarray
    misses_count: np.ndarray
    support_size: np.ndarray
    violations: np.ndarray
    nonconverged: np.ndarray
    thresholds: dict = field(default_factory=dict)
    errors_modcs: list = field(default_factory=list)
    errors_ls: list = field(default_factory=list)
    violation_log: list = field(default_factory=list)
    flag_counts: dict = field(default_factory=dict)

    @property
    def T(self):
        return self.err2.shape[-1]

    def nmse(self, alg):
        k = self.algorithms.index(alg)
        return _ratio(self.err2[:, k].sum(axis=0), self.energy.sum(axis=0))

    def extras(self, alg):
        k = self.algorithms.index(alg)
        return _ratio(self.extras_count[:, k].mean(axis=0), self.support_size.mean(axis=0))

    def misses(self, alg):
        k = self.algorithms.index(alg)
        return _ratio(self.misses_count[:, k].mean(axis=0), self.support_size.mean(axis=0))

    def steady(self, series, start=None):
        start = self.config.steady_start if start is None else start
        v = series[start:]
        v = v[~np.isnan(v)]
        return float(v.mean()) if v.size else math.nan

    def summary(self):
        out = {}
        for alg in self.algorithms:
            k = self.algorithms.index(alg)
            out[alg] = {
                "nmse": self.steady(self.nmse(alg)),
                "extras": self.steady(self.extras(alg)),
                "misses": self.steady(self.misses(alg)),
                "violations": int(self.violations[:, k].sum()),
                "nonconverged": int(self.nonconverged[:, k].sum()),
                **{f"mean_{name}": v for name, v in self.thresholds.get(alg, {}).items()},
            }
        return out

    def rows(self):
        rows = []
        for t in range(self.T):
            for alg in self.algorithms:
                k = self.algorithms.index(alg)
                rows.append((t, alg, self.nmse(alg)[t], self.extras(alg)[t], self.misses(alg)[t],
                             int(self.violations[:, k, t].sum()), int(self.nonconverged[:, k, t].sum())))
        return rows


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.full(num.shape, np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


# ----------------------------------------------------------------------------
# metric definitions
# ----------------------------------------------------------------------------

def nmse(truth, estimates):
    """``E||x_t - xhat_t||^2 / E||x_t||^2`` per time; arrays ``[realization, t, m]`` or ``[t, m]``.

    NaN where the truth is identically zero at that time.
    """
    X = np.asarray(truth, dtype=float)
    Xh = np.asarray(estimates, dtype=float)
    if X.shape != Xh.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Xh.shape}")
    if X.ndim == 2:
        X, Xh = X[None], Xh[None]
    return _ratio(((X - Xh) ** 2).sum(axis=(0, 2)), (X ** 2).sum(axis=(0, 2)))


def support_errors(truth_support, estimated_support):
    """Normalized ``(extras, misses)`` for one time index.

    Each argument is one index set or a sequence of index sets (one per
    realization); counts are averaged and divided by the mean ``|N_t|``.
    """
    def as_list(s):
        s = list(s) if not isinstance(s, np.ndarray) else s
        if len(s) and np.ndim(s[0]) > 0:
            return [np.asarray(v, dtype=np.int64) for v in s]
        return [np.asarray(s, dtype=np.int64)]

    N = as_list(truth_support)
    Nh = as_list(estimated_support)
    if len(N) != len(Nh):
        raise ValueError("truth and estimate cover different realization counts")
    size = np.mean([np.unique(n).size for n in N])
    if size == 0:
        return math.nan, math.nan
    extras = np.mean([np.setdiff1d(h, n).size for n, h in zip(N, Nh)])
    misses = np.mean([np.setdiff1d(n, h).size for n, h in zip(N, Nh)])
    return float(extras / size), float(misses / size)


# ----------------------------------------------------------------------------
# running
# ----------------------------------------------------------------------------

def _fixed(cfg, name):
    if cfg.thresholds == "auto":
        return "auto"
    return cfg.thresholds.get(name, "auto")


def track(algorithm, frames, truths=None, alpha="auto", alphas="auto", check=False,
          delete_floor=DELETE_NOISE_FLOOR, add_cap=ADD_NOISE_CAP):
    """Run one algorithm over ``frames`` (a list of ``(A, factor, MeasurementFrame)``).

    ``noisy_l1`` uses an empty prior support at every frame; the others
    feed their support estimate forward.  Returns the step outputs.
    """
    state = TrackerState()
    outputs = []
    for t, (A, F, frame) in enumerate(frames):
        x = None if truths is None else truths[t]
        if algorithm == "noisy_l1":
            # no prior support: the threshold window is still carried across frames
            state = TrackerState(xmin_window=state.xmin_window, t=state.t)
            out, state = modcs_step(state, frame, A, alpha, factor=F, truth=x, check=check)
        elif algorithm == "modcs":
            out, state = modcs_step(state, frame, A, alpha, factor=F, truth=x, check=check)
        elif algorithm == "addlsdel":
            out, state = addlsdel_step(state, frame, A, alphas, factor=F, truth=x, check=check,
                                       delete_floor=delete_floor, add_cap=add_cap)
        else:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        outputs.append(out)
    return outputs


def run_realization(cfg, r):
    """Run every selected algorithm on realization `r`; returns a dict of arrays."""
    T, m = cfg.T_max, cfg.m
    seed = cfg.master_seed
    states = generate_sequence(cfg.model_params(), T, (seed, r, _SIGNAL), model=cfg.model)
    X = np.vstack([s.x for s in states])
    A0 = gen_gaussian_unit_columns(cfg.n0, m, (seed, r, _A0))
    A_fixed = gen_gaussian_unit_columns(cfg.n, m, (seed, r, _A)) if cfg.matrix_mode == "fixed" else None
    F0 = factorize(A0)
    F_fixed = factorize(A_fixed) if A_fixed is not None else None
    frames = []
    for t in range(T):
        if t == 0:
            A, F, c = A0, F0, cfg.c0
        elif A_fixed is not None:
            A, F, c = A_fixed, F_fixed, cfg.c
        else:
            A = gen_gaussian_unit_columns(cfg.n, m, (seed, r, _A, t))
            F, c = factorize(A), cfg.c
        w = gen_bounded_uniform_noise(A.shape[0], c, (seed, r, _NOISE, t))
        frames.append((A, F, measure(A, X[t], w, t, c)))

    K = len(cfg.algorithms)
    res = {
        "err2": np.zeros((K, T)), "extras": np.zeros((K, T)), "misses": np.zeros((K, T)),
        "violations": np.zeros((K, T), dtype=np.int64), "nonconverged": np.zeros((K, T), dtype=np.int64),
        "energy": (X ** 2).sum(axis=1), "support": (X != 0).sum(axis=1).astype(float),
        "thresholds": {}, "errors_modcs": [], "errors_ls": [], "log": [], "flags": {},
    }
    alpha = _fixed(cfg, "alpha")
    alphas = (_fixed(cfg, "alpha_add"), _fixed(cfg, "alpha_del"))
    for k, alg in enumerate(cfg.algorithms):
        outputs = track(alg, frames, X, alpha=alpha, alphas=alphas, check=cfg.invariant_checks,
                        delete_floor=cfg.delete_floor, add_cap=cfg.add_cap)
        used = {}
        for t, out in enumerate(outputs):
            x = X[t]
            d = out.diagnostics
            res["err2"][k, t] = float(((x - out.x_hat) ** 2).sum())
            res["extras"][k, t] = d["delta_tilde_e"].size
            res["misses"][k, t] = d["delta_tilde"].size
            res["violations"][k, t] = len(out.violations)
            res["nonconverged"][k, t] = 0 if out.converged else 1
            for v in out.violations:
                res["log"].append((r, alg, t, v))
            for f in out.flags:
                key = (alg, f)
                res["flags"][key] = res["flags"].get(key, 0) + 1
            if t > 0:
                for name in ("alpha", "alpha_add", "alpha_del"):
                    val = getattr(out, name)
                    if val is not None:
                        used.setdefault(name, []).append(val)
                if cfg.record_errors:
                    if alg == "modcs":
                        res["errors_modcs"].append(x - out.x_hat_modcs)
                    elif alg == "addlsdel" and out.add_support is not None and out.add_support.size:
                        Ta = out.add_support
                        res["errors_ls"].append((x - out.x_hat_add)[Ta])
        res["thresholds"][alg] = {name: (float(np.sum(v)), len(v)) for name, v in used.items()}
    return res


def _run_one(args):
    return run_realization(*args)


def run_experiment(cfg):
    """Run all realizations and reduce to a :class:`MetricsSeries`."""
    cfg.validate()
    jobs = [(cfg, r) for r in range(cfg.realizations)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    def stack(key):
        return np.stack([res[key] for res in results])

    thresholds = {}
    for alg in cfg.algorithms:
        totals = {}
        for res in results:
            for name, (s, n) in res["thresholds"].get(alg, {}).items():
                a, b = totals.get(name, (0.0, 0))
                totals[name] = (a + s, b + n)
        thresholds[alg] = {name: s / n for name, (s, n) in totals.items() if n}
    flags = {}
    for res in results:
        for key, n in res["flags"].items():
            flags[key] = flags.get(key, 0) + n
    return MetricsSeries(
        config=cfg, algorithms=cfg.algorithms,
        err2=stack("err2"), energy=stack("energy"),
        extras_count=stack("extras"), misses_count=stack("misses"),
        support_size=stack("support"), violations=stack("violations"),
        nonconverged=stack("nonconverged"), thresholds=thresholds,
        errors_modcs=[e for res in results for e in res["errors_modcs"]],
        errors_ls=[e for res in results for e in res["errors_ls"]],
        violation_log=[v for res in results for v in res["log"]],
        flag_counts=flags,
    )


# ----------------------------------------------------------------------------
# export
# ----------------------------------------------------------------------------

def _num(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def export(series, destination, format="csv"):
    """Write the per-time metrics; missing values become empty cells / null."""
    rows = series.rows()
    if not rows:
        raise ValueError("empty series")
    if format == "csv":
        with open(destination, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for t, alg, a, b, c, v, nc in rows:
                w.writerow((t, alg, _num(a), _num(b), _num(c), v, nc))
    elif format == "json":
        def val(v):
            return None if math.isnan(v) else float(v)
        payload = {
            "columns": list(COLUMNS),
            "rows": [[t, alg, val(a), val(b), val(c), v, nc] for t, alg, a, b, c, v, nc in rows],
            "summary": {alg: {k: (None if isinstance(x, float) and math.isnan(x) else x) for k, x in s.items()}
                        for alg, s in series.summary().items()},
            "config": series.config.to_dict(),
        }
        with open(destination, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown export format {format!r}")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_svg(series, destination, width=720, panel_height=180):
    """Static line charts of NMSE, extras and misses against time."""
    colors = {"noisy_l1": "#d62728", "modcs": "#1f77b4", "addlsdel": "#2ca02c"}
    panels = [("NMSE", series.nmse), ("extras", series.extras), ("misses", series.misses)]
    left, top, gap = 60, 20, 40
    h = top + len(panels) * (panel_height + gap)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{h}" font-family="sans-serif" font-size="11">']
    T = series.T
    pw = width - left - 120
    for i, (name, fn) in enumerate(panels):
        y0 = top + i * (panel_height + gap)
        curves = {alg: fn(alg) for alg in series.algorithms}
        vals = np.concatenate([c[~np.isnan(c)] for c in curves.values()] or [np.zeros(1)])
        ymax = float(vals.max()) if vals.size and vals.max() > 0 else 1.0
        parts.append(f'<rect x="{left}" y="{y0}" width="{pw}" height="{panel_height}" fill="none" stroke="#888"/>')
        parts.append(f'<text x="{left}" y="{y0 - 5}">{name}</text>')
        parts.append(f'<text x="{left - 5}" y="{y0 + 10}" text-anchor="end">{ymax:.3g}</text>')
        parts.append(f'<text x="{left - 5}" y="{y0 + panel_height}" text-anchor="end">0</text>')
        for j, (alg, cur) in enumerate(curves.items()):
            pts = [f"{left + pw * t / max(T - 1, 1):.1f},{y0 + panel_height * (1 - v / ymax):.1f}"
                   for t, v in enumerate(cur) if not np.isnan(v)]
            parts.append(f'<polyline fill="none" stroke="{colors[alg]}" points="{" ".join(pts)}"/>')
            parts.append(f'<text x="{left + pw + 10}" y="{y0 + 15 + 15 * j}" fill="{colors[alg]}">{alg}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{h - 5}" text-anchor="middle">t</text>')
    parts.append("</svg>")
    with open(destination, "w") as fh:
        fh.write("\n".join(parts) + "\n")
