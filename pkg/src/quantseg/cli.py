"""Command-line interface: ``quantseg <command> [options]``.

Exit codes: 0 success, 1 bad input (unreadable file, malformed CSV/JSON,
invalid option), 2 solver failure, 3 ``kkt-check`` found a violated
optimality condition.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import AdaptiveConfig, PowerRule, adaptive_penalty, fit_adaptive, kkt_verify, parse_lambda_rule
from .baselines import NotConverged, fit_lad_lasso_type, fit_ls_adaptive_lasso, fit_scad_quantile
from .core import DataError, FitResult, PenaltySpec, objective_value, read_csv, write_csv
from .experiment import FIGURES, TABLES, ConfigError, load_config, run_experiment
from .segmentation import DEFAULT_TAU, METHODS, SegmentationConfig, best_segmentation
from .selection import select_k
from .simulation import CATALOG, ERROR_LAWS, Design, generate
from .solver import SolverError, fit

DEFAULT_SEED = 20240101
FIT_METHODS = ("quantile", "alasso-quantile", "ls-alasso", "lad-lassotype", "scad")

EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_KKT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QUANTSEG_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise DataError(f"QUANTSEG_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _adaptive_cfg(args) -> AdaptiveConfig:
    rule = parse_lambda_rule(args.lambda_rule) if args.lambda_rule else PowerRule()
    return AdaptiveConfig(g=args.g, lambda_rule=rule)


def cmd_fit(args) -> int:
    data = read_csv(args.data)
    kkt = None
    if args.method == "quantile":
        res = fit(data, args.tau)
        kkt = kkt_verify(data, args.tau, PenaltySpec.zero(data.p), res)
    elif args.method == "alasso-quantile":
        res = fit_adaptive(data, args.tau, _adaptive_cfg(args))
        kkt = kkt_verify(data, args.tau, adaptive_penalty(res), res)
    elif args.method == "ls-alasso":
        res = fit_ls_adaptive_lasso(data)
    elif args.method == "lad-lassotype":
        res = fit_lad_lasso_type(data)
    else:
        res = fit_scad_quantile(data, args.tau, max_iter=args.lla_max_iter)
    out = {"tau": args.tau, **res.to_dict()}
    if kkt is not None:
        out["kkt"] = kkt.to_dict()
    if args.format == "csv":
        rows = ["term,estimate", f"intercept,{res.intercept!r}"]
        rows += [f"x{j + 1},{v!r}" for j, v in enumerate(res.coefficients.tolist())]
        _emit("\n".join(rows) + "\n", args.out)
    else:
        _emit(_json(out), args.out)
    return 0


def _seg_cfg(args) -> SegmentationConfig:
    return SegmentationConfig(tau=args.tau, min_len=args.min_len, method=args.method,
                              adaptive=_adaptive_cfg(args))


def cmd_segment(args) -> int:
    data = read_csv(args.data)
    seg = best_segmentation(data, args.k, _seg_cfg(args))
    if args.format == "csv":
        lines = ["segment,start,end,intercept," + ",".join(f"x{j + 1}" for j in range(data.p))]
        for i, ((l, k), f) in enumerate(zip(seg.bounds, seg.segment_fits), 1):
            lines.append(",".join([str(i), str(l + 1), str(k), repr(f.intercept)]
                                  + [repr(v) for v in f.coefficients.tolist()]))
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(seg.to_json(indent=2) + "\n", args.out)
    return 0


def cmd_select_k(args) -> int:
    data = read_csv(args.data)
    k, trace, seg = select_k(data, args.k_max, _seg_cfg(args))
    if args.format == "csv":
        _emit(trace.to_csv(), args.out)
    else:
        _emit(_json({**trace.to_dict(), "segmentation": seg.to_dict()}), args.out)
    return 0


def _design(args) -> Design:
    name = args.design
    if name in CATALOG:
        if args.error is None:
            return CATALOG[name]()
        if name != "D1":
            raise DataError("--error applies to the single-phase D1 design only")
        return CATALOG[name](ERROR_LAWS[args.error])
    path = Path(name)
    if not path.is_file():
        raise DataError(f"unknown design {name!r}: not a catalog name ({', '.join(CATALOG)}) "
                        "or a readable JSON file")
    try:
        return Design.from_json(path)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed design JSON: {exc}") from exc


def cmd_simulate(args) -> int:
    design = _design(args)
    seed = _seed(args)
    data, truth = generate(design, seed, args.replication)
    out = Path(args.out)
    write_csv(data, out)
    truth_path = out.with_suffix(".truth.json")
    truth_path.write_text(_json({"design_spec": design.to_dict(), **truth.to_dict(args.tau)}),
                          encoding="utf-8")
    print(f"wrote {out} and {truth_path}", file=sys.stderr)
    return 0


def cmd_reproduce(args) -> int:
    if args.table:
        if args.table not in TABLES:
            raise ConfigError(f"unknown table {args.table!r}; choose from {', '.join(TABLES)}")
        name, view = TABLES[args.table]
    else:
        if args.figure not in FIGURES:
            raise ConfigError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
        name, view = FIGURES[args.figure], "curves"
    seed = args.seed if args.seed is not None else (
        int(os.environ["QUANTSEG_SEED"]) if os.environ.get("QUANTSEG_SEED") else None)
    cfg = load_config(name).with_overrides(reps=args.reps, seed=seed)
    report = run_experiment(cfg, jobs=args.jobs)
    text = report.to_json() if args.format == "json" else report.to_csv(view)
    _emit(text, args.out)
    print(f"{cfg.name}: {cfg.reps} replications in {report.elapsed_seconds:.1f}s", file=sys.stderr)
    return 0


def cmd_kkt_check(args) -> int:
    data = read_csv(args.data)
    try:
        record = json.loads(Path(args.fit).read_text(encoding="utf-8"))
        phi = np.asarray(record["coefficients"], dtype=np.float64)
        b = float(record.get("intercept", 0.0))
    except FileNotFoundError:
        raise DataError(f"{args.fit}: no such file") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{args.fit}: malformed fit JSON: {exc}") from exc
    if record.get("method", "quantile") not in ("quantile", "alasso-quantile"):
        raise DataError(f"kkt-check certifies quantile fits, not {record['method']!r} fits")
    tau = args.tau if args.tau is not None else record.get("tau")
    if tau is None:
        raise DataError("--tau is required when the fit record does not carry one")
    if phi.shape[0] != data.p:
        raise DataError(f"fit has {phi.shape[0]} coefficients, data has p={data.p}")
    if "weights" in record and "lambda" in record:
        penalty = PenaltySpec(float(record["lambda"]), np.asarray(record["weights"]))
    else:
        penalty = PenaltySpec.zero(data.p)
    res = FitResult.build(data, b, phi, objective_value(data, b, phi, tau, penalty))
    report = kkt_verify(data, tau, penalty, res)
    _emit(_json(report.to_dict()), args.out)
    return 0 if report.all_satisfied else EXIT_KKT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quantseg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, tau_default, fmt=True):
        sp.add_argument("--data", required=True, help="CSV with header y,x1,...,xp")
        sp.add_argument("--tau", type=float, default=tau_default)
        sp.add_argument("--out", help="output file (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    def tuning(sp):
        sp.add_argument("--g", type=float, default=1.225, help="adaptive weight exponent")
        sp.add_argument("--lambda-rule", help='tuning rule such as "n^2/5" or "2*n^0.4"')

    sp = sub.add_parser("fit", help="fit one estimator to a dataset")
    common(sp, 0.5)
    sp.add_argument("--method", choices=FIT_METHODS, default="alasso-quantile")
    sp.add_argument("--lla-max-iter", type=int, default=50,
                    help="iteration limit of the SCAD local linear approximation")
    tuning(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("segment", help="best segmentation with a known number of breaks")
    common(sp, DEFAULT_TAU)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--min-len", type=int)
    sp.add_argument("--method", choices=METHODS, default="aQ")
    tuning(sp)
    sp.set_defaults(func=cmd_segment)

    sp = sub.add_parser("select-k", help="choose the number of change-points")
    common(sp, DEFAULT_TAU)
    sp.add_argument("--k-max", type=int, default=3)
    sp.add_argument("--min-len", type=int)
    sp.add_argument("--method", choices=METHODS, default="aQ")
    tuning(sp)
    sp.set_defaults(func=cmd_select_k)

    sp = sub.add_parser("simulate", help="draw a dataset from a design")
    sp.add_argument("--design", required=True, help="D1, M3, M2 or a design JSON file")
    sp.add_argument("--error", choices=sorted(ERROR_LAWS), help="error law for D1")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--replication", type=int, default=0)
    sp.add_argument("--tau", type=float, default=0.5,
                    help="quantile level for the intercepts recorded in the truth JSON")
    sp.add_argument("--out", required=True, help="CSV path; truth goes to <stem>.truth.json")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reproduce", help="run a checked-in Monte Carlo experiment")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", help=f"one of {', '.join(TABLES)}")
    g.add_argument("--figure", help=f"one of {', '.join(FIGURES)}")
    sp.add_argument("--reps", type=int, help="replications (default: the config's)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("kkt-check", help="verify optimality of a saved quantile fit")
    sp.add_argument("--data", required=True)
    sp.add_argument("--fit", required=True, help="fit JSON written by 'quantseg fit'")
    sp.add_argument("--tau", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_kkt_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SolverError, NotConverged) as exc:
        print(f"quantseg: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, ConfigError, ValueError, OSError) as exc:
        print(f"quantseg: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
