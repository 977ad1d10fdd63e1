"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration or usage errors, 3 for
numerical failures (singular channels, rank deficiency and the like).
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .effective_noise import effective_variance
from .errors import ConfigError, RankDeficient, RcofError
from .experiments import db_to_linear, emit_csv, format_csv, load_config, read_overlay, run_sweep, sweep_manifest
from .integer_search import best_coeff_qcof, ifbf_coeffs, lll_reduce
from .rates import Scheme, rate_cifbf, rate_ifbf, rate_rcof, rate_rqcof
from .scalar_lattice import NestedLatticePair
from .scheduling import SelectionInstance, brute_force_select, greedy_select

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def parse_matrix(text, name="matrix"):
    """``"1,0;0.5,1"`` (rows separated by ``;``) or a JSON nested list."""
    text = text.strip()
    try:
        if text.startswith("["):
            m = np.array(json.loads(text), dtype=float)
        else:
            m = np.array([[float(v) for v in row.split(",")] for row in text.split(";") if row.strip()])
    except (ValueError, json.JSONDecodeError):
        raise ConfigError(name, f"cannot parse matrix {text!r}") from None
    if m.ndim != 2 or m.size == 0:
        raise ConfigError(name, "expected a nonempty 2-D matrix")
    return m


def _integer_matrix(text, name):
    m = parse_matrix(text, name)
    if not np.all(m == np.round(m)):
        raise ConfigError(name, "entries must be integers")
    return m.astype(np.int64)


def _r0(text):
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in np.asarray(obj).tolist()] if isinstance(obj, np.ndarray) else [
            _jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _print_json(obj):
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def cmd_sweep(args):
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.scheme:
        changes["schemes"] = tuple(Scheme.parse(s) for s in args.scheme)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["out"] = args.out
    if args.overlay is not None:
        changes["overlay"] = args.overlay
    if changes:
        spec = spec.replace(**changes)
    curves = run_sweep(spec)
    if spec.overlay:
        curves += read_overlay(spec.overlay)
    manifest = sweep_manifest(spec)
    if spec.out:
        emit_csv(curves, spec.out, manifest)
        print(f"wrote {spec.out}", file=sys.stderr)
    else:
        sys.stdout.write(format_csv(curves, manifest))
    return 0


def cmd_rate(args):
    scheme = Scheme.parse(args.scheme)
    h = parse_matrix(args.channel, "channel")
    snr = db_to_linear(args.snr_db)
    r0 = args.r0
    if scheme in (Scheme.QCOF, Scheme.COF):
        if h.shape[0] != 1:
            raise ConfigError("channel", f"{scheme} takes a single channel row")
        a = _integer_matrix(args.coeffs, "coeffs")[0] if args.coeffs else \
            best_coeff_qcof(h[0], snr, args.p if scheme == Scheme.QCOF else None)
        s2 = effective_variance(h[0], a, snr)
        if scheme == Scheme.QCOF:
            report = rate_rqcof([s2], NestedLatticePair.from_snr(args.p, snr))
        else:
            report = rate_rcof([s2], snr)
        out = {"scheme": str(scheme), "symmetric_rate": report.symmetric_rate, "coeffs": a,
               "components": report.components}
    elif scheme in (Scheme.RQCOF, Scheme.RCOF):
        quantized = scheme == Scheme.RQCOF
        if args.coeffs:
            a = _integer_matrix(args.coeffs, "coeffs")
        else:
            a = np.array([best_coeff_qcof(hk, snr, args.p if quantized else None) for hk in h])
        if a.shape != h.shape:
            raise ConfigError("coeffs", f"shape {a.shape} does not match the channel {h.shape}")
        inst = SelectionInstance(a, [effective_variance(hk, ak, snr) for hk, ak in zip(h, a)],
                                 args.p if quantized else None)
        if not inst.feasible:
            raise RankDeficient("the coefficient matrix is rank deficient")
        if quantized:
            report = rate_rqcof(inst.sigma2, NestedLatticePair.from_snr(args.p, snr), r0)
        else:
            report = rate_rcof(inst.sigma2, snr, r0)
        out = {**report.as_dict(), "coeffs": a}
    else:
        a = _integer_matrix(args.coeffs, "coeffs") if args.coeffs else ifbf_coeffs(h, args.p).a
        variant = "rqcof" if scheme.quantized else "rcof"
        if scheme in (Scheme.IFBF_RQCOF, Scheme.IFBF_RCOF):
            report = rate_ifbf(h, a, snr, args.p, variant)
        else:
            report = rate_cifbf(h, a, snr, args.p, r0, variant)
        out = {**report.as_dict(), "coeffs": a}
    _print_json(out)
    return 0


def cmd_select(args):
    try:
        with open(args.instance, encoding="utf-8") as fh:
            data = json.load(fh)
        inst = SelectionInstance(data["q_rows"], data["sigma2"], data.get("p"))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError("instance", f"cannot load {args.instance}: {exc}") from None
    res = greedy_select(inst) if args.method == "greedy" else brute_force_select(inst)
    _print_json({"method": args.method, "chosen": list(res.chosen), "objective": res.objective,
                 "feasible": res.feasible})
    return 0 if res.feasible else EXIT_NUMERIC


def cmd_reduce(args):
    basis = parse_matrix(args.matrix, "matrix")
    reduced, u = lll_reduce(basis, args.delta)
    _print_json({"reduced": reduced, "unimodular": u,
                 "column_norms": np.linalg.norm(reduced, axis=0)})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="rcof", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rcof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a Monte Carlo rate sweep and write CSV")
    sw.add_argument("--config", required=True, help="INI experiment file")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--trials", type=int)
    sw.add_argument("--out", help="CSV path (stdout when omitted)")
    sw.add_argument("--scheme", action="append", help="restrict to a scheme (repeatable)")
    sw.add_argument("--overlay", help="CSV of reference curves to append")
    sw.add_argument("--workers", type=int)
    sw.set_defaults(func=cmd_sweep)

    rt = sub.add_parser("rate", help="evaluate one scheme on a fixed channel")
    rt.add_argument("--scheme", required=True)
    rt.add_argument("--channel", required=True, help='rows separated by ";", e.g. "1,0;0.7,1"')
    rt.add_argument("--snr-db", type=float, required=True)
    rt.add_argument("--p", type=int, default=251)
    rt.add_argument("--r0", type=_r0, default=math.inf)
    rt.add_argument("--coeffs", help="integer coefficient matrix (searched when omitted)")
    rt.set_defaults(func=cmd_rate)

    se = sub.add_parser("select", help="choose users from a JSON instance {q_rows, sigma2, p}")
    se.add_argument("--instance", required=True)
    se.add_argument("--method", choices=("greedy", "brute"), default="greedy")
    se.set_defaults(func=cmd_select)

    rd = sub.add_parser("reduce", help="LLL-reduce the columns of a basis")
    rd.add_argument("--matrix", required=True)
    rd.add_argument("--delta", type=float, default=0.75)
    rd.set_defaults(func=cmd_reduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RcofError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
