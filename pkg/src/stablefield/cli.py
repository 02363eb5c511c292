"""Command-line front end: ``stablefield <subcommand> [options]``.

Exit codes: 0 success, 1 numerical failure, 2 uncovered regime or
inconclusive verification, 64 usage error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .constants import constant_eval
from .covariance import Lag, rho, scc
from .errors import ConstantEvaluationFailed, DegenerateMarginal, StableFieldError
from .field import FilterSpec, weights_from_json
from .regimes import Direction, Regime, classify, params_from_text
from .simulate import SimConfig, ecf_check, simulate_pairs, tail_rho_estimate
from .verify import CSV_HEADER, DEFAULT_N, lag_sequence, convergence_report

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SOFT = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class Options(argparse.Namespace):
    # options absent from both flags and config read as None
    def __getattr__(self, name):
        if name.startswith("__"):
            raise AttributeError(name)
        return None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------


def _common(p, symbolic):
    g = p.add_argument_group("global")
    g.add_argument("--config", help="JSON file with option values (flags win)")
    g.add_argument("--format", choices=("json", "csv"))
    g.add_argument("--tol", type=float)
    g.add_argument("--out", help="write the main output here instead of stdout")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    f = p.add_argument_group("filter")
    hint = " (rational expressions in alpha allowed)" if symbolic else ""
    f.add_argument("--alpha", help="stability index")
    f.add_argument("--beta1", help="row decay exponent" + hint)
    f.add_argument("--beta2", help="column decay exponent" + hint)
    f.add_argument("--weights", help='JSON weight family, e.g. \'{"kind": "rational", "a": 0.5}\'')
    f.add_argument("--override", help="JSON file or literal with [[i, j, c], ...] finite filter entries")


def _directional(p):
    p.add_argument("--quadrant", choices=("pos", "neg"))
    p.add_argument("--direction", help="zero, inf or a constant c > 0 (negative quadrant)")


DEFAULTS = {
    "format": None,
    "tol": None,
    "out": None,
    "seed": 0,
    "threads": 1,
    "weights": None,
    "override": None,
    "quadrant": "pos",
    "direction": None,
}


def build_parser():
    top = _Parser(prog="stablefield", description="Spectral covariance of 2-D SaS linear fields")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("cov", help="spectral covariance and correlation at one lag")
    _common(p, False)
    p.add_argument("--k", help="lag as k1,k2")

    p = sub.add_parser("classify", help="decay regime of the parameters")
    _common(p, True)
    _directional(p)

    p = sub.add_parser("constant", help="limiting constant of the regime")
    _common(p, True)
    _directional(p)

    p = sub.add_parser("verify", help="compare rho/rate with the constant along a lag sequence")
    _common(p, True)
    _directional(p)
    p.add_argument("--n", help="comma-separated increasing n values")
    p.add_argument("--shape", choices=("diagonal", "square", "sqrt"), help="positive-quadrant path")
    p.add_argument("--gap-target", type=float)

    p = sub.add_parser("simulate", help="simulate (X_0, X_k) and check it against exact formulas")
    _common(p, False)
    p.add_argument("--k", help="lag as k1,k2")
    p.add_argument("--count", type=int, help="number of pairs")
    p.add_argument("--box", help="explicit innovation box I,J")
    p.add_argument("--window", help="direction-binned window W1,W2")
    p.add_argument("--sim-tol", type=float)
    p.add_argument("--checks", help="comma list from ecf,tail")
    p.add_argument("--quantile", type=float, help="tail threshold quantile")
    p.add_argument("--confidence", type=float)
    p.add_argument("--dump", help="write pairs as a SASP binary stream")

    p = sub.add_parser("regime-map", help="case labels over a beta grid")
    _common(p, False)
    _directional(p)
    p.add_argument("--beta1-grid", help="start:stop:num")
    p.add_argument("--beta2-grid", help="start:stop:num")
    return top


def _load_config(path):
    if not os.path.isfile(path):
        raise UsageError(f"config file {path!r} not found")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def parse(argv):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError(parser.format_usage().strip())
    opts = dict(DEFAULTS)
    if ns.config:
        opts.update(_load_config(ns.config))
    opts.update({k: v for k, v in vars(ns).items() if v is not None})
    if opts.get("out"):
        d = os.path.dirname(os.path.abspath(opts["out"]))
        if not os.path.isdir(d):
            raise UsageError(f"output directory {d!r} does not exist")
    if opts.get("dump"):
        d = os.path.dirname(os.path.abspath(opts["dump"]))
        if not os.path.isdir(d):
            raise UsageError(f"dump directory {d!r} does not exist")
    if opts["format"] is None:
        opts["format"] = "csv" if ns.command == "regime-map" else "json"
    if opts["format"] not in ("json", "csv"):
        raise UsageError("--format must be json or csv")
    return Options(**opts)


def _need(o, *names):
    for n in names:
        if getattr(o, n, None) in (None, ""):
            raise UsageError(f"{o.command}: --{n.replace('_', '-')} is required")


def _pair(text, name):
    try:
        a, b = (int(v) for v in str(text).replace(" ", "").split(","))
    except ValueError:
        raise UsageError(f"--{name} must look like 'a,b'") from None
    return a, b


def _override(o):
    raw = o.override
    if isinstance(raw, str) and not raw.lstrip().startswith("["):
        if not os.path.isfile(raw):
            raise UsageError(f"override file {raw!r} not found")
        with open(raw) as fh:
            raw = fh.read()
    try:
        entries = json.loads(raw) if isinstance(raw, str) else raw
    except json.JSONDecodeError as exc:
        raise UsageError(f"override is not valid JSON: {exc}") from None
    if isinstance(entries, dict):
        entries = entries.get("entries", entries.get("override"))
    try:
        return FilterSpec.from_entries(float(o.alpha), [(int(i), int(j), float(c)) for i, j, c in entries])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, StableFieldError):
            raise
        raise UsageError(f"override entries must be [i, j, c] triples: {exc}") from None


def _weights(o):
    w = o.weights
    if w is None:
        return None
    if isinstance(w, str):
        try:
            w = json.loads(w)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--weights is not valid JSON: {exc}") from None
    return weights_from_json(w)


def make_spec(o, symbolic):
    _need(o, "alpha")
    if o.override is not None:
        return _override(o)
    _need(o, "beta1", "beta2")
    if symbolic:
        params = params_from_text(str(o.alpha), str(o.beta1), str(o.beta2))
        return FilterSpec(params, _weights(o))
    try:
        a, b1, b2 = float(o.alpha), float(o.beta1), float(o.beta2)
    except ValueError:
        raise UsageError(
            f"{o.command} takes numeric alpha/beta; symbolic values are accepted by classify, constant and verify"
        ) from None
    return FilterSpec.parametric(a, b1, b2, _weights(o))


def _direction(o):
    if o.direction is None:
        return None
    try:
        return Direction.parse(o.direction)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _clean(x):
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, (np.floating, np.integer)):
        return _clean(x.item())
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def _emit(o, text, stdout):
    if o.out:
        with open(o.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_cov(o, stdout):
    _need(o, "k")
    spec = make_spec(o, False)
    k = Lag.of(_pair(o.k, "k"))
    tol = o.tol or 1e-10
    r = rho(spec, k, tol)
    try:
        corr = scc(spec, k, tol)
    except DegenerateMarginal:
        corr = None
    doc = {**r.to_json(), "scc": corr, "lag": [k.k1, k.k2]}
    if o.format == "csv":
        _emit(o, _csv(("k1", "k2", "value", "error_bound", "terms_used", "scc"),
                      [(k.k1, k.k2, r.value, r.error_bound, r.terms_used, corr)]), stdout)
    else:
        _emit(o, dumps(doc), stdout)
    return EXIT_OK


def _uncovered(o, reg, stdout, stderr):
    stderr.write(f"uncovered: {reg.reason}\n")
    if o.format == "json":
        _emit(o, dumps(reg.to_json()), stdout)
    return EXIT_SOFT


def _regime_spec(o):
    spec = make_spec(o, True)
    if spec.is_override:
        raise ConstantEvaluationFailed("regimes are undefined for finite override filters")
    return spec


def cmd_classify(o, stdout, stderr):
    spec = _regime_spec(o)
    reg = classify(spec.params, o.quadrant, _direction(o))
    if not isinstance(reg, Regime):
        return _uncovered(o, reg, stdout, stderr)
    doc = {**reg.to_json(), "label": reg.label}
    if o.format == "csv":
        _emit(o, _csv(("alpha", "beta1", "beta2", "label"),
                      [(spec.alpha, spec.beta1, spec.beta2, reg.label)]), stdout)
    else:
        _emit(o, dumps(doc), stdout)
    return EXIT_OK


def cmd_constant(o, stdout, stderr):
    spec = _regime_spec(o)
    reg = classify(spec.params, o.quadrant, _direction(o))
    if not isinstance(reg, Regime):
        return _uncovered(o, reg, stdout, stderr)
    v, e = constant_eval(reg.constant, spec, o.tol or 1e-8)
    doc = {"value": v, "error_bound": e, "recipe": reg.constant.recipe, "regime": reg.label}
    if o.format == "csv":
        _emit(o, _csv(("regime", "recipe", "value", "error_bound"), [(reg.label, reg.constant.recipe, v, e)]), stdout)
    else:
        _emit(o, dumps(doc), stdout)
    return EXIT_OK


def _n_values(o):
    if o.n is None:
        return DEFAULT_N
    vals = o.n if isinstance(o.n, list) else str(o.n).split(",")
    try:
        return tuple(int(v) for v in vals)
    except ValueError:
        raise UsageError("--n must be a comma-separated list of integers") from None


def cmd_verify(o, stdout, stderr):
    spec = _regime_spec(o)
    direction = _direction(o)
    reg = classify(spec.params, o.quadrant, direction)
    if not isinstance(reg, Regime):
        stderr.write(f"cannot verify: the parameters fall outside every covered case ({reg.reason})\n")
        if o.format == "json":
            _emit(o, dumps({"verdict": "Uncovered", **reg.to_json()}), stdout)
        return EXIT_SOFT
    try:
        seq = lag_sequence(spec.params, direction, _n_values(o), o.quadrant, getattr(o, "shape", None) or "diagonal")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = convergence_report(spec, reg, seq, o.tol or 1e-4, getattr(o, "gap_target", None), o.threads)
    verdict = {**rep.to_json(), "direction_ok": seq.direction_ok()}
    if o.format == "csv":
        _emit(o, rep.to_csv(), stdout)
        if o.out:
            with open(o.out + ".json", "w") as fh:
                fh.write(dumps(verdict))
        else:
            stderr.write(dumps(verdict))
    else:
        _emit(o, dumps({**verdict, "table": rep.rows}), stdout)
    if rep.verdict == "Converging":
        return EXIT_OK
    return EXIT_FAIL if rep.verdict == "Diverging" else EXIT_SOFT


def cmd_simulate(o, stdout, stderr):
    _need(o, "k")
    spec = make_spec(o, False)
    k = _pair(o.k, "k")
    cfg = SimConfig(
        spec,
        seed=o.seed,
        sample_count=getattr(o, "count", None) or 100_000,
        box=_pair(o.box, "box") if getattr(o, "box", None) else (8, 8),
        window=_pair(o.window, "window") if getattr(o, "window", None) else None,
        sim_tol=getattr(o, "sim_tol", None) or 2e-3,
        threads=o.threads,
    )
    sample = simulate_pairs(cfg, k)
    if getattr(o, "dump", None):
        sample.save(o.dump)
    checks = [c for c in str(getattr(o, "checks", None) or "ecf").split(",") if c]
    report = {"count": len(sample), "lag": list(k), "sim_err": sample.sim_err, "plan": sample.info}
    ok = True
    for c in checks:
        if c == "ecf":
            r = ecf_check(sample, spec, k, confidence=getattr(o, "confidence", None) or 0.99, seed=o.seed, tol=o.tol)
            report["ecf"] = r
            ok &= r["pass"]
        elif c == "tail":
            q = getattr(o, "quantile", None) or 0.995
            est = tail_rho_estimate(sample, spec, k, q)
            exact = rho(spec, k, 1e-8 if spec.is_override else 1e-6)
            report["tail"] = {"estimate": est, "exact": exact.value, "quantile": q}
        else:
            raise UsageError(f"unknown check {c!r}")
    report["pass"] = bool(ok)
    _emit(o, dumps(report), stdout)
    return EXIT_OK if ok else EXIT_SOFT


def _grid(text, name):
    try:
        a, b, n = str(text).split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise UsageError(f"--{name} must look like start:stop:num") from None


def cmd_regime_map(o, stdout, stderr):
    _need(o, "alpha", "beta1_grid", "beta2_grid")
    direction = _direction(o)
    rows = []
    for b1 in _grid(o.beta1_grid, "beta1-grid"):
        for b2 in _grid(o.beta2_grid, "beta2-grid"):
            try:
                params = params_from_text(str(o.alpha), repr(float(b1)), repr(float(b2)))
                reg = classify(params, o.quadrant, direction)
                label = reg.label
            except StableFieldError as exc:
                label = exc.code
            rows.append((float(b1), float(b2), label))
    if o.format == "csv":
        _emit(o, _csv(("beta1", "beta2", "label"), rows), stdout)
    else:
        _emit(o, dumps([{"beta1": a, "beta2": b, "label": l} for a, b, l in rows]), stdout)
    return EXIT_OK


COMMANDS = {
    "cov": lambda o, out, err: cmd_cov(o, out),
    "classify": cmd_classify,
    "constant": cmd_constant,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "regime-map": cmd_regime_map,
}


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    o = None
    try:
        o = parse(argv)
        return COMMANDS[o.command](o, stdout, stderr)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except StableFieldError as exc:
        stderr.write(f"error: {exc}\n")
        if o is None or o.format == "json":
            stdout.write(dumps(exc.to_json()))
        return EXIT_FAIL


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
