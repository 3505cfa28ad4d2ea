"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import __version__
from .bootstrap import bootstrap_ci
from .errors import DegenerateSeries, EmptyCampaign, FuzzAssureError
from .estimators import extrapolation_curve, full_report, stop_plan
from .flakiness import turning_point_test
from .incidence import Accumulator, IncidenceRecord
from .ingest import (
    FormatDescriptor,
    IngestStats,
    detect_format,
    emit_jsonl,
    input_digest,
    iter_records,
)
from .rng import default_seed
from .simulator import build_model, evaluate_estimators, simulate

TOOL = "fuzz-assure"

ORACLE_SCOPE = (
    "Estimates cover only behaviours the oracle can recognise as species; "
    "errors that no check detects are invisible to every estimate."
)
SEARCH_SPACE = (
    "Estimates cover only species reachable by this fuzzer's input distribution; "
    "behaviours outside its search space are not accounted for."
)


class UsageError(Exception):
    pass


def _probability(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _envelope(name, argv, results, *, digest=None, path=None, iid_reasons=()):
    return {
        "tool": TOOL,
        "version": __version__,
        "command": {"name": name, "argv": list(argv)},
        "input": {"path": path, "digest": digest},
        "assumptions": {
            "iid": {"caveat": bool(iid_reasons), "reasons": list(iid_reasons)},
            "oracle_scope": ORACLE_SCOPE,
            "search_space": SEARCH_SPACE,
        },
        "results": results,
    }


def _dump(obj, out):
    out.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))
    out.write("\n")


# -- shared input handling ---------------------------------------------------

def _add_input_args(p):
    p.add_argument("input", help="campaign file (jsonl, csv) or showmap directory")
    p.add_argument("--format", choices=("jsonl", "csv", "showmap"), default=None,
                   help="input format (default: detect from path)")
    p.add_argument("--prefix", default=None,
                   help="namespace prefix prepended to species ids on ingest")
    p.add_argument("--only", default=None, metavar="PREFIX",
                   help="restrict estimates to species ids starting with PREFIX")
    p.add_argument("--skip-bad-records", action="store_true",
                   help="skip malformed records instead of failing")
    p.add_argument("--species-total", type=float, default=None,
                   help="known number of discoverable species (replaces Chao1)")
    p.add_argument("--adaptive", action="store_true",
                   help="inputs come from a feedback-driven fuzzer (sets the IID caveat)")
    p.add_argument("--iid-series", default=None, metavar="FILE",
                   help="numeric series checked with the turning point test; "
                        "rejection sets the IID caveat")


def _load(args, keep_records=False):
    kind = args.format or detect_format(args.input)
    fmt = FormatDescriptor(kind, prefix=args.prefix)
    stats = IngestStats()
    acc = Accumulator()
    kept = [] if keep_records else None
    for r in iter_records(args.input, fmt, skip_bad=args.skip_bad_records, stats=stats):
        acc.observe(r)
        if kept is not None:
            kept.append(r)
    snap = acc.snapshot()
    if args.only:
        snap = snap.restrict(args.only)
    if snap.n == 0:
        raise EmptyCampaign("empty campaign: no test inputs in input")
    return snap, stats, kept


def _iid_reasons(args):
    reasons = []
    if args.adaptive:
        reasons.append("feedback-driven fuzzer declared; inputs are not sampled independently")
    if args.iid_series:
        series = _read_series(args.iid_series, 0)
        try:
            res = turning_point_test(series)
        except DegenerateSeries:
            res = None
        if res is not None and res.iid_rejected:
            reasons.append(
                f"turning point test rejected IID on {args.iid_series} (p={res.p_value:.3g})")
    return reasons


def _ingest_block(stats):
    return {"records": stats.records, "skipped": stats.skipped,
            "duplicate_pairs": stats.duplicate_pairs}


def _read_series(path, column):
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.replace(",", " ").split()
            if not fields:
                continue
            try:
                values.append(float(fields[column]))
            except (ValueError, IndexError):
                raise UsageError(f"{path}:{lineno}: no numeric value in column {column}") from None
    return values


# -- commands ----------------------------------------------------------------

def cmd_analyze(args, argv, out):
    snap, stats, records = _load(args, keep_records=args.bootstrap_reps > 0)
    report = full_report(snap, s_total=args.species_total)
    results = report.to_dict()
    results["ingest"] = _ingest_block(stats)
    if args.bootstrap_reps > 0:
        if args.only:
            records = [
                IncidenceRecord(r.input_id, frozenset(s for s in r.species
                                                      if s.startswith(args.only)), r.order)
                for r in records
            ]
        seed = args.seed if args.seed is not None else default_seed()
        results["bootstrap"] = {
            name: bootstrap_ci(records, name, args.bootstrap_reps, args.level, seed).to_dict()
            for name in ("u_hat", "s_hat")
        }
        results["bootstrap_seed"] = seed
    _dump(_envelope("analyze", argv, results, digest=input_digest(args.input),
                    path=args.input, iid_reasons=_iid_reasons(args)), out)
    return 0


def cmd_extrapolate(args, argv, out):
    snap, _, _ = _load(args)
    curve = extrapolation_curve(snap, args.horizon, args.steps, s_total=args.species_total)
    target = open(args.out, "w", encoding="utf-8", newline="") if args.out else out
    try:
        target.write("m_star,s_pred,u_pred\n")
        for p in curve.points:
            target.write(f"{p.m_star},{p.s_pred!r},{p.u_pred!r}\n")
    finally:
        if args.out:
            target.close()
    return 0


def cmd_stoprule(args, argv, out):
    snap, stats, _ = _load(args)
    report = full_report(snap, s_total=args.species_total)
    plan = stop_plan(report.n, report.f1, report.f0_hat, args.risk)
    results = {
        "n": report.n,
        "f1": report.f1,
        "f0_hat": report.f0_hat,
        "s_hat_source": report.s_hat_source,
        "u_hat": report.u_hat,
        "theta": plan.theta,
        "m_star": plan.m_star,
        "total_inputs": report.n + plan.m_star,
        "reachable": plan.reachable,
        "risk_at_m_star": plan.risk_at_m_star,
        "ingest": _ingest_block(stats),
    }
    _dump(_envelope("stoprule", argv, results, digest=input_digest(args.input),
                    path=args.input, iid_reasons=_iid_reasons(args)), out)
    return 0


def cmd_simulate(args, argv, out):
    seed = args.seed if args.seed is not None else default_seed()
    model = build_model(args.species, args.dist, args.mode, args.mean_species)
    campaign = simulate(model, args.tests, seed)
    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        emit_jsonl(campaign.records, fh)
    truth_path = out_path.with_name(out_path.name + ".truth.json")
    with open(truth_path, "w", encoding="utf-8", newline="\n") as fh:
        _dump(campaign.sidecar(), fh)
    final = campaign.truth_at(args.tests)
    results = {
        "campaign": str(out_path),
        "truth": str(truth_path),
        "seed": seed,
        "tests": args.tests,
        "distribution": str(model.distribution),
        "mode": model.mode,
        "s_true": model.s_true,
        "true_s_obs": final.s_obs,
        "true_u": final.u,
    }
    _dump(_envelope("simulate", argv, results, digest=input_digest(out_path),
                    path=str(out_path)), out)
    return 0


def cmd_turningpoint(args, argv, out):
    series = _read_series(args.input, args.column)
    digest = input_digest(args.input)
    try:
        res = turning_point_test(series, args.alpha)
    except DegenerateSeries as exc:
        print(f"DegenerateSeries: {exc}", file=sys.stderr)
        results = {"status": "degenerate", "n": len(series), "iid_rejected": False,
                   "alpha": args.alpha, "message": str(exc)}
    else:
        results = {"status": "ok", **res.to_dict()}
    reasons = ["IID rejected by turning point test"] if results["iid_rejected"] else []
    _dump(_envelope("turningpoint", argv, results, digest=digest, path=args.input,
                    iid_reasons=reasons), out)
    return 0


def cmd_evaluate(args, argv, out):
    seed = args.seed if args.seed is not None else default_seed()
    model = build_model(args.species, args.dist, args.mode, args.mean_species)
    rows = evaluate_estimators(model, args.tests, args.reps, seed,
                               horizon_factor=args.horizon_factor)
    out.write("estimator,n,reps,mean_error,rmse,mean_abs_error,mean_rel_error,coverage\n")
    for r in rows:
        cells = [r.estimator, r.n, r.reps, repr(r.mean_error), repr(r.rmse),
                 repr(r.mean_abs_error),
                 "" if r.mean_rel_error is None else repr(r.mean_rel_error),
                 "" if r.coverage is None else repr(r.coverage)]
        out.write(",".join(str(c) for c in cells) + "\n")
    return 0


def _add_model_args(p):
    p.add_argument("--dist", default="uniform",
                   help="uniform | zipf:ALPHA | geometric:Q | endemic:CORE_MASS,ISLANDS")
    p.add_argument("--species", type=_positive_int, default=1000, help="true species count")
    p.add_argument("--mode", choices=("abundance", "incidence"), default="abundance")
    p.add_argument("--mean-species", type=float, default=1.0,
                   help="expected species per input (incidence mode)")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default: $FUZZ_ASSURE_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL, description="Statistical assurances for fuzzing campaigns.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="residual risk and richness estimates as JSON")
    _add_input_args(p)
    p.add_argument("--bootstrap-reps", type=int, default=0,
                   help="add bootstrap intervals with this many resamples (>= 100)")
    p.add_argument("--level", type=_probability, default=0.95)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("extrapolate", help="extrapolation curve as CSV")
    _add_input_args(p)
    p.add_argument("--horizon", type=_positive_int, required=True)
    p.add_argument("--steps", type=_positive_int, default=20)
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_extrapolate)

    p = sub.add_parser("stoprule", help="additional inputs needed to reach a residual risk")
    _add_input_args(p)
    p.add_argument("--risk", type=_probability, required=True, metavar="THETA")
    p.set_defaults(func=cmd_stoprule)

    p = sub.add_parser("simulate", help="write a synthetic campaign and its truth sidecar")
    _add_model_args(p)
    p.add_argument("--tests", type=_positive_int, required=True)
    p.add_argument("--out", required=True, help="campaign JSONL path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("turningpoint", help="turning point test of a numeric series")
    p.add_argument("input", help="file with one number per line")
    p.add_argument("--alpha", type=_probability, default=0.05)
    p.add_argument("--column", type=int, default=0,
                   help="0-based column when lines hold several values")
    p.set_defaults(func=cmd_turningpoint)

    p = sub.add_parser("evaluate", help="bias/RMSE of all estimators against a simulated truth")
    _add_model_args(p)
    p.add_argument("--tests", type=_positive_int, required=True)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--horizon-factor", type=float, default=1.0)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "bootstrap_reps", 0) and args.bootstrap_reps < 100:
        parser.print_usage(sys.stderr)
        print(f"{TOOL}: error: --bootstrap-reps must be 0 or >= 100", file=sys.stderr)
        return 2
    if getattr(args, "steps", None) and getattr(args, "horizon", None) and args.steps > args.horizon:
        print(f"{TOOL}: error: --steps cannot exceed --horizon", file=sys.stderr)
        return 2
    try:
        return args.func(args, argv, out)
    except EmptyCampaign as exc:
        print(f"{TOOL}: empty campaign: {exc}", file=sys.stderr)
        return 2
    except (FuzzAssureError, UsageError, OSError, ValueError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def main_entry():
    sys.exit(main())
