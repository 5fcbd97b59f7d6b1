"""Command-line interface.

Exit codes: 0 success, 1 mathematical rejection, 2 input or usage error.
Machine output goes to stdout, diagnostics to stderr.  Every global flag can
also be set through an environment variable named ``MOMENT_<FLAG>`` (for
example ``MOMENT_TOL`` or ``MOMENT_RANK_TOL``); flags win over the
environment.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import io
from .extension import (
    ExtendOptions,
    ExtensionError,
    InsufficientDegreeError,
    Step0Rejected,
    enumerate_solution_family,
    extend_truncated,
)
from .lattice import Window, classical
from .moments import (
    AtomicMeasure,
    CheckReport,
    ClassicalMoments,
    ExtendedMoments,
    MissingMomentError,
    check_all,
    check_classical_positivity,
    oracle_classical,
    oracle_extended,
)
from .pipeline import RecoveryError, canonical_atoms, extended_roundtrip_residual, recover
from .spectral import MergeWarning, verify_measure

log = logging.getLogger("moment2d")

OK, REJECTED, BAD_INPUT = 0, 1, 2
DEFAULT_WINDOW = Window(3, 1)


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-9
    rank_tol: float = 1e-10
    seed: int = 0
    window: Window | None = None
    max_iters: int = 500
    json: bool = False

    def __post_init__(self):
        if not (self.tol > 0 and self.rank_tol > 0):
            raise UsageError("tolerances must be positive")
        if self.max_iters < 1:
            raise UsageError("max-iters must be at least 1")
        if self.window is not None and min(self.window) < 0:
            raise UsageError("window caps must be non-negative")


def parse_window(text: str) -> Window:
    try:
        d, r = (int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"window must look like D,R (got {text!r})") from None
    if d < 0 or r < 0:
        raise UsageError("window caps must be non-negative")
    return Window(d, r)


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


# name, env suffix, converter
_SETTINGS = (
    ("tol", "TOL", float),
    ("rank_tol", "RANK_TOL", float),
    ("seed", "SEED", int),
    ("window", "WINDOW", parse_window),
    ("max_iters", "MAX_ITERS", int),
    ("json", "JSON", _parse_bool),
)


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    for name, env, convert in _SETTINGS:
        given = getattr(args, name, None)
        if given is not None:
            values[name] = given
        elif f"MOMENT_{env}" in environ:
            try:
                values[name] = convert(environ[f"MOMENT_{env}"])
            except ValueError as exc:
                raise UsageError(f"bad value for MOMENT_{env}: {exc}") from None
    return RunConfig(**values)


# --------------------------------------------------------------------------
# output helpers


def _emit(doc, path: str | None):
    if path:
        io.write_json(path, doc)
    else:
        sys.stdout.write(json.dumps(doc, indent=1, allow_nan=False) + "\n")


def _report_line(r: CheckReport) -> str:
    status = "PASS" if r.passed else "FAIL"
    worst = ", ".join(f"{cid}={res:.3e}" for cid, res in r.details)
    extra = f" (skipped {r.skipped})" if r.skipped else ""
    return f"{status}  {r.name:<22} {worst}{extra}"


def _print_reports(reports: list[CheckReport], cfg: RunConfig, **extra):
    if cfg.json:
        doc = {"passed": all(r.passed for r in reports), "checks": [r.as_dict() for r in reports]}
        doc.update(extra)
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    else:
        for r in reports:
            print(_report_line(r))


def _require_complete(u: ExtendedMoments):
    missing = u.missing()
    if missing:
        shown = ", ".join(str(i) for i in missing[:5])
        raise UsageError(f"extended file lacks {len(missing)} required entries, e.g. {shown}")


def _require_classical(s: ClassicalMoments):
    need = [(m, d - m) for d in range(2 * s.deg_cap + 1) for m in range(d, -1, -1)]
    missing = [mn for mn in need if mn not in s]
    if missing:
        raise UsageError(f"classical file lacks {len(missing)} entries, e.g. {missing[:5]}")


def _classical_part(u: ExtendedMoments) -> ClassicalMoments:
    d = u.window.deg_cap
    s = {(m, n): u.u[classical(m, n)] for m in range(2 * d + 1) for n in range(2 * d + 1 - m)}
    return ClassicalMoments(d, s)


def _load(path: str, *kinds):
    obj = io.load(path)
    if not isinstance(obj, kinds):
        names = " or ".join(k.__name__ for k in kinds)
        raise UsageError(f"{path}: expected {names}, found {type(obj).__name__}")
    return obj


# --------------------------------------------------------------------------
# commands


def cmd_oracle(args, cfg: RunConfig) -> int:
    mu = _load(args.measure, AtomicMeasure)
    if len(mu) == 0:
        raise UsageError("measure has no atoms")
    w = cfg.window or DEFAULT_WINDOW
    s = oracle_classical(mu, w.deg_cap + w.res_cap)
    u = oracle_extended(mu, w)
    if args.classical:
        io.dump(args.classical, s)
    if args.extended:
        io.dump(args.extended, u)
    if not (args.classical or args.extended):
        _emit({"classical": io.classical_to_doc(s), "extended": io.extended_to_doc(u)}, None)
    return OK


def cmd_check(args, cfg: RunConfig) -> int:
    data = _load(args.file, ExtendedMoments, ClassicalMoments)
    if isinstance(data, ClassicalMoments):
        _require_classical(data)
        reports = [check_classical_positivity(data, cfg.tol)]
    else:
        _require_complete(data)
        anchor = _load(args.classical, ClassicalMoments) if args.classical else None
        reports = check_all(data, anchor, cfg.tol)
    _print_reports(reports, cfg)
    return OK if all(r.passed for r in reports) else REJECTED


def _extend_options(cfg: RunConfig) -> ExtendOptions:
    return ExtendOptions(max_iters=cfg.max_iters, tol=cfg.tol, seed=cfg.seed, rank_tol=cfg.rank_tol)


def _extension_window(s: ClassicalMoments, cfg: RunConfig) -> Window:
    if cfg.window is not None:
        return cfg.window
    if s.deg_cap == 0:
        return Window(0, 0)
    return Window(s.deg_cap - 1, 1)


def cmd_extend(args, cfg: RunConfig) -> int:
    s = _load(args.classical, ClassicalMoments)
    _require_classical(s)
    w = _extension_window(s, cfg)
    try:
        u = extend_truncated(s, w, _extend_options(cfg))
    except Step0Rejected as exc:
        print(f"step 0: {exc}", file=sys.stderr)
        if cfg.json:
            _print_reports([exc.report], cfg, stage="step0")
        return REJECTED
    except ExtensionError as exc:
        print(f"extension: {exc}", file=sys.stderr)
        for r in exc.reports:
            print(_report_line(r), file=sys.stderr)
        if cfg.json:
            _print_reports(exc.reports, cfg, stage="extension")
        return REJECTED
    _emit(io.extended_to_doc(u), args.output)
    for r in u.reports:
        log.info(_report_line(r))
    return OK


def _recovery_summary(mu: AtomicMeasure, u: ExtendedMoments, rec, cfg: RunConfig) -> dict:
    s = _classical_part(u)
    verify = verify_measure(mu, s, max(cfg.tol, 1e-8))
    return {
        "extended_residual": extended_roundtrip_residual(mu, u),
        "classical_residual": verify.details[0][1],
        "gns_dim": rec.space.dim,
        "flat": bool(rec.pair.flat),
        "commutator": rec.reports["commutation"].details[0][1],
        "unitarity_A": rec.reports["unitarity-A"].details[0][1],
        "unitarity_B": rec.reports["unitarity-B"].details[0][1],
        "joint_off_diagonal": rec.spectrum.off_diagonal,
        "method": rec.spectrum.method,
        "seed": cfg.seed,
    }


def cmd_recover(args, cfg: RunConfig) -> int:
    u = _load(args.extended, ExtendedMoments)
    _require_complete(u)
    reports = check_all(u, None, cfg.tol)
    if not all(r.passed for r in reports):
        print("extended moments fail the solvability checks:", file=sys.stderr)
        for r in reports:
            print(_report_line(r), file=sys.stderr)
        return REJECTED
    try:
        rec = recover(u, cfg.rank_tol, cfg.seed, max(cfg.tol, 1e-8))
    except RecoveryError as exc:
        print(f"recovery failed at {exc}", file=sys.stderr)
        return REJECTED
    doc = io.measure_to_doc(rec.measure)
    doc["verification"] = _recovery_summary(rec.measure, u, rec, cfg)
    _emit(doc, args.output)
    return OK


def _min_separation(mu: AtomicMeasure) -> float:
    p = mu.points
    if len(p) < 2:
        return float("inf")
    gaps = np.max(np.abs(p[:, None, :] - p[None, :, :]), axis=2)
    return float(np.min(gaps[np.triu_indices(len(p), 1)]))


def cmd_roundtrip(args, cfg: RunConfig) -> int:
    mu = _load(args.measure, AtomicMeasure)
    if len(mu) == 0 or mu.total_mass <= 0:
        raise UsageError("measure has zero mass")
    w = cfg.window or DEFAULT_WINDOW
    s = oracle_classical(mu, w.deg_cap + w.res_cap)
    u = oracle_extended(mu, w)
    rows: list[tuple[str, float, float, bool]] = []
    checks = check_all(u, s, cfg.tol)
    for r in checks:
        worst = max((res for _, res in r.details), default=0.0)
        if r.name == "positivity":
            worst = -min(r.min_eigenvalue, 0.0)
        rows.append((f"check:{r.name}", worst, cfg.tol, r.passed))
    if not all(r.passed for r in checks):
        _print_table(rows, cfg, None)
        return REJECTED
    vtol = max(cfg.tol, 1e-8)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rec = recover(u, cfg.rank_tol, cfg.seed, vtol)
        except RecoveryError as exc:
            rows.append((f"recover:{exc.stage}", float("nan"), vtol, False))
            _print_table(rows, cfg, None)
            print(f"recovery failed at {exc}", file=sys.stderr)
            return REJECTED
    for warning in caught:
        print(f"warning: {warning.message}", file=sys.stderr)
    merged = any(issubclass(wn.category, MergeWarning) for wn in caught)
    if _min_separation(mu) <= rec.spectrum.cluster_tol and not merged:
        print(
            f"warning: input atoms closer than the cluster tolerance {rec.spectrum.cluster_tol:.1e} "
            "cannot be told apart",
            file=sys.stderr,
        )
    summary = _recovery_summary(rec.measure, u, rec, cfg)
    rows += [
        ("commutator", summary["commutator"], vtol, summary["commutator"] <= vtol),
        ("unitarity-A", summary["unitarity_A"], 1e-10, summary["unitarity_A"] <= 1e-10),
        ("unitarity-B", summary["unitarity_B"], 1e-10, summary["unitarity_B"] <= 1e-10),
        ("verify:classical", summary["classical_residual"], vtol, summary["classical_residual"] <= vtol),
        ("verify:extended", summary["extended_residual"], 1e-7, summary["extended_residual"] <= 1e-7),
    ]
    if len(rec.measure) == len(mu):
        err = float(np.max(np.abs(canonical_atoms(rec.measure) - canonical_atoms(mu))))
        rows.append(("atoms (info)", err, 1e-6, True))
    _print_table(rows, cfg, rec.measure)
    return OK if all(row[3] for row in rows) else REJECTED


def _print_table(rows, cfg: RunConfig, measure: AtomicMeasure | None):
    if cfg.json:
        doc = {
            "passed": all(r[3] for r in rows),
            "stages": [{"stage": n, "residual": v, "tolerance": t, "passed": p} for n, v, t, p in rows],
        }
        if measure is not None:
            doc["measure"] = io.measure_to_doc(measure)
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
        return
    print(f"{'stage':<22} {'residual':>12} {'tolerance':>12}  result")
    for name, value, tol, passed in rows:
        print(f"{name:<22} {value:>12.3e} {tol:>12.1e}  {'PASS' if passed else 'FAIL'}")
    if measure is not None:
        print("recovered atoms (x1, x2, w):")
        for x1, x2, wt in measure.sorted().atoms:
            print(f"  {x1: .12g}  {x2: .12g}  {wt:.12g}")


def cmd_family(args, cfg: RunConfig) -> int:
    s = _load(args.classical, ClassicalMoments)
    _require_classical(s)
    if args.depth < 0 or args.grid < 0:
        raise UsageError("depth and grid must be non-negative")
    w = _extension_window(s, cfg)
    try:
        family = enumerate_solution_family(
            s, w, args.depth, args.grid, _extend_options(cfg), realizable_only=args.realizable
        )
    except Step0Rejected as exc:
        print(f"step 0: {exc}", file=sys.stderr)
        return REJECTED
    except ExtensionError as exc:
        print(f"extension: {exc}", file=sys.stderr)
        return REJECTED
    print(f"{len(family)} distinct feasible extension(s)", file=sys.stderr)
    _emit({"family": [io.extended_to_doc(u) for u in family]}, args.output)
    return OK


# --------------------------------------------------------------------------
# parser


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    sup = argparse.SUPPRESS
    g.add_argument("--tol", type=float, default=sup, help="check tolerance (default 1e-9)")
    g.add_argument("--rank-tol", dest="rank_tol", type=float, default=sup, help="Gram rank cutoff (default 1e-10)")
    g.add_argument("--seed", type=int, default=sup, help="random seed (default 0)")
    g.add_argument("--window", type=_window_arg, default=sup, help="truncation window D,R")
    g.add_argument("--json", action="store_const", const=True, default=sup, help="machine-readable output")
    g.add_argument("--max-iters", dest="max_iters", type=int, default=sup, help="extension iterations (default 500)")
    g.add_argument("-v", "--verbose", action="store_const", const=True, default=sup, help="log progress to stderr")
    return p


def _window_arg(text: str) -> Window:
    try:
        return parse_window(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="moment2d",
        description="Truncated two-dimensional moment problem: checks, extension and atomic recovery.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("oracle", parents=[common], help="moments of an atomic measure")
    p.add_argument("measure", help="measure file")
    p.add_argument("-c", "--classical", help="write classical moments here")
    p.add_argument("-e", "--extended", help="write extended moments here")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", parents=[common], help="solvability checks on a moment file")
    p.add_argument("file", help="extended or classical moment file")
    p.add_argument("--classical", help="classical file to check anchoring against")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("extend", parents=[common], help="extend classical moments to a window")
    p.add_argument("classical", help="classical moment file")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("recover", parents=[common], help="recover an atomic measure from extended moments")
    p.add_argument("extended", help="extended moment file")
    p.add_argument("-o", "--output", help="output measure file (default stdout)")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("roundtrip", parents=[common], help="oracle, check, recover and verify a measure")
    p.add_argument("measure", help="measure file")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("family", parents=[common], help="sample the family of feasible extensions")
    p.add_argument("classical", help="classical moment file")
    p.add_argument("--depth", type=int, default=2, help="number of steps to sweep (default 2)")
    p.add_argument("--grid", type=int, default=5, help="grid points per parameter (default 5)")
    p.add_argument("--realizable", action="store_true", help="keep only extensions that come from a measure")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_family)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(message)s",
    )
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except (UsageError, io.FormatError, MissingMomentError, InsufficientDegreeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
