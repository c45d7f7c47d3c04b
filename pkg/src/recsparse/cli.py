"""Command-line driver: ``recsparse generate | run | certify | analyze``.

Exit codes: 0 success / PASS, 1 FAIL verdict (or invariant violations in
``run``), 2 usage, config or input-format error, 3 runtime error (including
a certification left incomplete because a restricted isometry constant
could not be computed within budget).

Config files are INI with sections ``[model]``, ``[sensing]``,
``[experiment]``, ``[thresholds]`` and ``[output]``; keys are the
:class:`~recsparse.harness.ExperimentConfig` field names (``id`` in
``[model]`` selects the model).  Bundled configs: ``fig5``, ``fig6``.

Sparse-sequence files are line oriented::

    # sparse-sequence v1
    m 200
    frames 3
    0 17 1.25
    0 42 -0.5
    ...

one ``t index value`` triple per nonzero entry, ``t`` from 0 to frames-1,
values printed with full float precision.  Lines starting with ``#``
after the header are comments.
"""
import argparse
import configparser
from dataclasses import fields
from importlib import resources
import json
import os
import sys

import numpy as np

from . import analysis, harness
from .sensing import gen_gaussian_unit_columns, stream
from .signal_model import MODEL_IDS, generate_sequence, verify_assumptions

__all__ = ["SequenceFormatError", "load_config", "main", "read_sequence", "write_sequence"]

HEADER = "# sparse-sequence v1"
PAPER_SCALE_REALIZATIONS = 500


class SequenceFormatError(ValueError):
    pass


class UsageError(ValueError):
    pass


# ----------------------------------------------------------------------------
# sequence files
# ----------------------------------------------------------------------------

def write_sequence(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T, m = X.shape
    with open(path, "w") as fh:
        fh.write(f"{HEADER}\nm {m}\nframes {T}\n")
        for t in range(T):
            for j in np.flatnonzero(X[t]):
                fh.write(f"{t} {j} {float(X[t, j])!r}\n")


def read_sequence(path):
    """Parse a sparse-sequence file into a ``frames x m`` array."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    if not lines or lines[0] != HEADER:
        raise SequenceFormatError(f"{path}: missing header {HEADER!r}")
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    try:
        key_m, m = body[0].split()
        key_t, T = body[1].split()
        m, T = int(m), int(T)
    except (IndexError, ValueError):
        raise SequenceFormatError(f"{path}: expected 'm <int>' and 'frames <int>' lines") from None
    if key_m != "m" or key_t != "frames":
        raise SequenceFormatError(f"{path}: expected 'm <int>' and 'frames <int>' lines")
    if T < 1:
        raise SequenceFormatError("at least one frame required")
    if m < 1:
        raise SequenceFormatError(f"{path}: dimension must be >= 1")
    X = np.zeros((T, m))
    for k, ln in enumerate(body[2:], start=1):
        parts = ln.split()
        try:
            t, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            if len(parts) != 3:
                raise ValueError
        except (IndexError, ValueError):
            raise SequenceFormatError(f"{path}: bad record {ln!r}") from None
        if not (0 <= t < T and 0 <= j < m):
            raise SequenceFormatError(f"{path}: record {ln!r} out of range")
        X[t, j] = v
    return X


# ----------------------------------------------------------------------------
# configs
# ----------------------------------------------------------------------------

def _resolve_config(name):
    if os.path.exists(name):
        return open(name).read()
    stem = name[:-4] if name.endswith(".cfg") else name
    try:
        return resources.files("recsparse").joinpath("configs", f"{stem}.cfg").read_text()
    except FileNotFoundError:
        raise UsageError(f"config {name!r} not found (neither a file nor a bundled config)") from None


def _convert(name, raw, default):
    raw = raw.strip()
    if name == "algorithms":
        return tuple(a.strip() for a in raw.split(",") if a.strip())
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise harness.ConfigError(f"{name}: expected on/off, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise harness.ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def load_config(name):
    """Parse an INI experiment config (path or bundled name); returns ``(cfg, options)``."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(_resolve_config(name))
    except configparser.Error as e:
        raise harness.ConfigError(f"unparseable config: {e}") from None
    defaults = {f.name: f.default for f in fields(harness.ExperimentConfig)}
    values, options = {}, {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if section == "output":
                options[key] = raw.strip()
                continue
            if section == "thresholds":
                if key == "mode":
                    if raw.strip() != "auto":
                        values["thresholds"] = {}
                    continue
                th = values.get("thresholds")
                values["thresholds"] = th if isinstance(th, dict) else {}
                values["thresholds"][key] = _convert(key, raw, 0.0) if raw.strip() != "auto" else "auto"
                continue
            field = "model" if (section == "model" and key == "id") else key
            if field not in defaults:
                raise harness.ConfigError(f"unknown config key [{section}] {key}")
            values[field] = _convert(field, raw, defaults[field])
    return harness.ExperimentConfig.from_dict(values), options


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def _emit(obj, as_json, text):
    if as_json:
        print(json.dumps(obj, indent=1, sort_keys=False))
    else:
        print(text)


def cmd_generate(args):
    cfg, _ = load_config(args.config)
    if args.frames is not None:
        cfg.T_max = args.frames
    if cfg.T_max < 1:
        raise harness.ConfigError("at least one frame required")
    if cfg.model not in MODEL_IDS:
        raise harness.ConfigError(f"unknown model {cfg.model!r}")
    try:
        params = cfg.model_params()
    except ValueError as e:
        raise harness.ConfigError(f"infeasible model parameters: {e}") from None
    seed = cfg.master_seed if args.seed is None else args.seed
    states = generate_sequence(params, cfg.T_max, seed, model=cfg.model)
    X = np.vstack([s.x for s in states])
    out = args.out or "sequence.txt"
    write_sequence(out, X)
    supp = (X != 0).sum(axis=1)
    changes = [int(np.count_nonzero((X[t] != 0) != (X[t - 1] != 0))) for t in range(1, len(X))]
    adds = [int(np.count_nonzero((X[t] != 0) & (X[t - 1] == 0))) for t in range(1, len(X))]
    rems = [int(np.count_nonzero((X[t] == 0) & (X[t - 1] != 0))) for t in range(1, len(X))]
    summary = {"file": out, "model": cfg.model, "frames": int(len(X)), "m": int(X.shape[1]),
               "S_observed": int(supp.max()), "S_a_observed": max(adds + rems, default=0),
               "max_support_change": max(changes, default=0)}
    _emit(summary, args.json, "\n".join(f"{k}: {v}" for k, v in summary.items()))
    return 0


def cmd_run(args):
    cfg, options = load_config(args.config)
    if args.realizations is not None:
        cfg.realizations = args.realizations
    if args.paper_scale:
        cfg.realizations = PAPER_SCALE_REALIZATIONS
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    cfg.validate()
    series = harness.run_experiment(cfg)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    harness.export(series, os.path.join(out, "metrics.csv"), "csv")
    harness.export(series, os.path.join(out, "metrics.json"), "json")
    if args.svg or options.get("svg", "off").lower() in ("1", "on", "true", "yes"):
        harness.write_svg(series, os.path.join(out, "metrics.svg"))
    summary = series.summary()
    lines = [f"steady state t >= {cfg.steady_start}, {cfg.realizations} realizations x {cfg.T_max} frames"]
    for alg, s in summary.items():
        lines.append(f"{alg:9s} nmse {s['nmse']:.4f}  extras {s['extras']:.4f}  misses {s['misses']:.4f}"
                     f"  violations {s['violations']}  nonconverged {s['nonconverged']}")
    _emit({"summary": summary, "out": out}, args.json, "\n".join(lines))
    return 1 if any(s["violations"] for s in summary.values()) else 0


def _matrix(spec, seed):
    if os.path.exists(spec):
        if spec.endswith(".npy"):
            return np.load(spec)
        return np.loadtxt(spec, delimiter="," if spec.endswith(".csv") else None, ndmin=2)
    kind, _, dims = spec.partition(":")
    try:
        sizes = [int(v) for v in dims.split(",")] if dims else []
    except ValueError:
        raise UsageError(f"bad matrix spec {spec!r}") from None
    if kind == "identity" and len(sizes) == 1:
        return np.eye(sizes[0])
    if kind == "orthonormal" and len(sizes) == 1:
        Q, R = np.linalg.qr(stream(seed, 0).standard_normal((sizes[0], sizes[0])))
        return Q * np.sign(np.diag(R))
    if kind in ("gaussian", "duplicate") and len(sizes) == 2:
        A = gen_gaussian_unit_columns(sizes[0], sizes[1], (seed, 1))
        if kind == "duplicate":
            A[:, 1] = A[:, 0]
        return A
    raise UsageError(f"bad matrix spec {spec!r}; use a file, identity:N, orthonormal:N, "
                     "gaussian:N,M or duplicate:N,M")


_PARAM_TYPES = {f.name: f.type for f in fields(analysis.TheoremParams)}


def _parse_params(items):
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in _PARAM_TYPES:
            raise UsageError(f"bad --param {item!r}; keys: {', '.join(_PARAM_TYPES)}")
        typ = _PARAM_TYPES[key]
        try:
            if typ in (int, "int"):
                out[key] = int(raw)
            elif typ in (float, "float"):
                out[key] = float(raw)
            elif key == "initial_exact":
                out[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                out[key] = raw.strip()
        except ValueError:
            raise UsageError(f"bad value in --param {item!r}") from None
    for key in ("S", "S_a", "epsilon"):
        if key not in out:
            raise UsageError(f"--param {key}=... is required")
    return analysis.TheoremParams(**out)


def _parse_asserted(items, pair):
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        try:
            k = tuple(int(v) for v in key.split(",")) if pair else int(key)
            if pair and len(k) != 2:
                raise ValueError
            out[k] = float(raw)
        except ValueError:
            raise UsageError(f"bad asserted value {item!r}") from None
        if not sep:
            raise UsageError(f"bad asserted value {item!r}")
    return out


def _report_text(rep):
    lines = [f"theorem {rep.theorem}: {rep.status}"]
    for c in rep.conditions:
        sides = "" if c.lhs is None and c.rhs is None else f"  lhs={c.lhs} {c.relation} rhs={c.rhs}"
        lines.append(f"  [{c.verdict:10s}] {c.id:16s} {c.description}{sides}  ({c.provenance})"
                     + (f"  note: {c.note}" if c.note else ""))
    lines.append("constants: " + ", ".join(f"{k}={v}" for k, v in rep.constants.items()))
    lines.append("guarantees: " + ", ".join(f"{k}<={v}" for k, v in rep.conclusions.items()))
    lines += [f"note: {n}" for n in rep.notes]
    return "\n".join(lines)


def cmd_certify(args):
    params = _parse_params(args.param)
    if params.d0 is None and args.theorem in ("4.3", "4.8", "5.5", "5.9"):
        raise UsageError(f"theorem {args.theorem} needs --param d0=...")
    A = _matrix(args.matrix, args.seed or 0) if args.matrix else None
    rip = analysis.RipAccess(A, _parse_asserted(args.assert_delta, False),
                             _parse_asserted(args.assert_theta, True), budget=args.budget)
    params = analysis.fill_prescribed(args.theorem, params, rip)
    trace = read_sequence(args.trace) if args.trace else None
    rep = analysis.check_theorem(args.theorem, params, rip, trace)
    _emit(rep.to_dict(), args.json, _report_text(rep))
    if rep.status == "PASS":
        return 0
    if rep.status == "FAIL":
        return 1
    missing = [c.note for c in rep.conditions if c.verdict == "incomplete"]
    print("certification incomplete: " + "; ".join(missing), file=sys.stderr)
    return 3


def cmd_analyze(args):
    X = read_sequence(args.sequence)
    params = None
    if args.config:
        cfg, _ = load_config(args.config)
        try:
            params = cfg.model_params()
        except ValueError as e:
            raise harness.ConfigError(f"infeasible model parameters: {e}") from None
    rep = verify_assumptions(X, args.model, params)
    d = rep.to_dict()
    text = [f"model {args.model}: {'PASS' if rep.passed else 'FAIL'}",
            f"frames {rep.n_frames}, m {rep.m}, max support {rep.max_support}, "
            f"max additions {rep.max_additions}, max removals {rep.max_removals}"]
    for k in ("a_range", "r_range", "d_range", "b"):
        text.append(f"{k}: {d.get(k)}")
    for name, verdict in rep.clauses.items():
        text.append(f"  {name:22s} {'n/a' if verdict is None else ('pass' if verdict else 'FAIL')}")
    _emit({"status": "PASS" if rep.passed else "FAIL", **d}, args.json, "\n".join(text))
    return 0 if rep.passed else 1


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser():
    p = _Parser(prog="recsparse", description="Recursive sparse reconstruction toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a sparse signal sequence")
    g.add_argument("config")
    g.add_argument("--out")
    g.add_argument("--seed", type=int)
    g.add_argument("--frames", type=int)
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run a Monte-Carlo experiment")
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--realizations", type=int)
    r.add_argument("--paper-scale", action="store_true")
    r.add_argument("--workers", type=int)
    r.add_argument("--svg", action="store_true")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="check the hypotheses of a stability theorem")
    c.add_argument("--theorem", required=True, choices=analysis.THEOREMS)
    c.add_argument("--matrix", help="file (.npy/.txt/.csv) or identity:N, orthonormal:N, gaussian:N,M, duplicate:N,M")
    c.add_argument("--param", action="append", help="theorem parameter key=value (repeatable)")
    c.add_argument("--assert-delta", action="append", help="asserted delta_S as S=value")
    c.add_argument("--assert-theta", action="append", help="asserted theta as S1,S2=value")
    c.add_argument("--trace", help="sparse-sequence file for sequence-dependent conditions")
    c.add_argument("--budget", type=int, default=analysis.DEFAULT_BUDGET)
    c.add_argument("--seed", type=int)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_certify)

    a = sub.add_parser("analyze", help="check a sparse sequence against a signal-change model")
    a.add_argument("sequence")
    a.add_argument("--model", default="assumptions2", choices=MODEL_IDS)
    a.add_argument("--config", help="model parameters (enables the clauses that need ell and b)")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, harness.ConfigError, SequenceFormatError, analysis.ParameterError,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
