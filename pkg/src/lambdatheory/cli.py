"""Command-line entry point: ``lambda-theory <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, schemas
from .errors import LambdaError, ParseError
from .exprparse import GRAMMAR, evaluate
from .galerkin import GalerkinLevel, Ultrafunction, generalized_derivative, l2_distance, project, residual_moments
from .hyperreal import Hyperreal, Kind, analyse
from .oracle import UltrafilterOracle, default_horizon
from .transfer import check_file
from .variational import SEED_ENV, MinimizeConfig, certify_infinitesimal, minimize_net

FORMULA_HELP = """\
formula files: a JSON preamble, then one s-expression sentence per line
  {"sets": {"A": {"range": [0, "omega"]}, "G": {"grid": [1, "omega", "omega"]},
            "F": {"finite": [0, 1, 2]}},
   "hyperreals": {"c": "1000000"}}
  (forall x A (>= x 0))
  (exists x A (> x c))
connectives: and or not implies forall exists; comparisons: = != < <= > >=
terms: numbers, names, + - * / min max ^, and the functions abs id sq one
lines starting with ; or # are comments"""

EPILOG = f"hr eval grammar:\n{GRAMMAR}\n\n{FORMULA_HELP}"

GLOBAL_DEFAULTS = {"horizon": None, "seed": None, "format": "json", "out": None, "oracle_replay": None}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n\n{EPILOG}\n")
        raise SystemExit(2)


# -- manifest and output --------------------------------------------------------


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class Run:
    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.started = _now()
        self.seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, "0"))
        self.horizon = args.horizon if args.horizon is not None else default_horizon()
        self._oracle = None

    @property
    def oracle(self) -> UltrafilterOracle:
        if self._oracle is None:
            replay = _load_replay(self.args.oracle_replay) if self.args.oracle_replay else None
            self._oracle = UltrafilterOracle(self.horizon, replay=replay)
        return self._oracle

    def manifest(self) -> dict:
        return {"seed": self.seed, "horizon": self.horizon, "command": self.argv, "version": __version__,
                "timestamps": {"started": self.started, "finished": _now()}}

    def emit(self, payload: dict, schema: dict, rows: list[dict] | None = None) -> None:
        payload = {**payload, "manifest": self.manifest()}
        jsonschema.validate(payload, schema)
        if self.args.format == "csv" and rows is not None:
            text = _csv(rows, payload["manifest"])
        else:
            text = json.dumps(payload, indent=2) + "\n"
        self.write(text)

    def write(self, text: str) -> None:
        if self.args.out:
            Path(self.args.out).write_text(text)
        else:
            sys.stdout.write(text)


def _csv(rows: list[dict], manifest: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps({"manifest": manifest}) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _load_replay(path: str) -> dict[str, list[bool]]:
    """Answers by label from an ``oracle log`` JSON-lines file (header lines are skipped)."""
    replay: dict[str, list[bool]] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if "label" in rec and "answer" in rec:
            replay.setdefault(rec["label"], []).append(bool(rec["answer"]))
    return replay


def _finite_or_none(v: float):
    return None if v is None or math.isnan(v) else v


# -- commands -------------------------------------------------------------------


def _describe(value, ctx) -> dict:
    if isinstance(value, bool):
        return {"value_label": str(value).lower(), "classification": None, "standard_part": None,
                "value": value, "heuristic": False}
    if isinstance(value, Fraction):
        kind = Kind.INFINITESIMAL if value == 0 else Kind.FINITE
        return {"value_label": str(value), "classification": kind.value, "standard_part": str(value),
                "value": None, "heuristic": False}
    kind, st, exact = analyse(value)
    return {"value_label": value.label, "classification": kind.value,
            "standard_part": None if st is None else str(st), "value": None, "heuristic": not exact}


def cmd_hr_eval(run: Run) -> int:
    ctx = run.oracle
    value = evaluate(run.args.expr, ctx)
    out = _describe(value, ctx)
    out["oracle_decisions_used"] = ctx.decisions_used
    rows = [{k: out[k] for k in ("value_label", "classification", "standard_part", "oracle_decisions_used")}]
    run.emit(out, schemas.HR_EVAL, rows)
    return 0


def cmd_oracle_log(run: Run) -> int:
    ctx = run.oracle
    for expr in run.args.expr:
        evaluate(expr, ctx)
    if run.args.formulas:
        check_file(run.args.formulas, ctx)
    records = ctx.log_records()
    for rec in records:
        jsonschema.validate(rec, schemas.DECISION)
    header = {"manifest": run.manifest()}
    jsonschema.validate(header, schemas.ORACLE_LOG_HEADER)
    if run.args.format == "csv":
        run.write(_csv(records, header["manifest"]))
    else:
        run.write("".join(json.dumps(r) + "\n" for r in [header] + records))
    return 0


def cmd_transfer_check(run: Run) -> int:
    ctx = run.oracle
    results = check_file(run.args.file, ctx)
    payload = {"file": run.args.file, "results": results, "decision_log": ctx.log_records()}
    run.emit(payload, schemas.TRANSFER_CHECK, results)
    return 0


def _level(args) -> GalerkinLevel:
    if args.m < 2:
        raise UsageError(f"--m must be at least 2, got {args.m}")
    return GalerkinLevel(args.m, args.basis)


def _coeff_rows(coeffs) -> list[dict]:
    return [{"index": i + 1, "coeff": float(c)} for i, c in enumerate(coeffs)]


def cmd_project(run: Run) -> int:
    args = run.args
    level = _level(args)
    u = project(args.f, level)
    payload = {"basis": level.basis.value, "m": level.m, "coeffs": u.coeffs.tolist(), "f": args.f,
               "l2_error": l2_distance(args.f, u),
               "max_residual": float(np.max(np.abs(residual_moments(args.f, u)), initial=0.0))}
    run.emit(payload, schemas.COEFFS, _coeff_rows(u.coeffs))
    return 0


def cmd_derive(run: Run) -> int:
    args = run.args
    if (args.f is None) == (args.coeffs is None):
        raise UsageError("derive needs exactly one of --f or --coeffs")
    if args.coeffs is not None:
        data = json.loads(Path(args.coeffs).read_text())
        jsonschema.validate({**data, "manifest": data.get("manifest", run.manifest())}, schemas.COEFFS)
        level = GalerkinLevel(data["m"], data["basis"])
        u = Ultrafunction(level, np.array(data["coeffs"], dtype=float))
        extra = {}
    else:
        if args.m is None:
            raise UsageError("derive --f needs --m")
        level = _level(args)
        u = project(args.f, level)
        extra = {"f": args.f}
    du = generalized_derivative(u)
    payload = {"basis": level.basis.value, "m": level.m, "coeffs": du.coeffs.tolist(),
               "input_coeffs": u.coeffs.tolist(), **extra}
    run.emit(payload, schemas.COEFFS, _coeff_rows(du.coeffs))
    return 0


def _parse_elements(text: str) -> list[int]:
    try:
        ms = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--elements must be a comma-separated list of integers, got {text!r}") from None
    bad = [m for m in ms if m < 2 or m % 2]
    if bad:
        raise UsageError(f"element counts must be even and at least 2: {bad}")
    if len(ms) < 4 or any(b <= a for a, b in zip(ms, ms[1:])):
        raise UsageError("--elements needs at least 4 strictly increasing counts")
    return ms


def cmd_variational_sweep(run: Run) -> int:
    args = run.args
    ms = _parse_elements(args.elements)
    cfg = MinimizeConfig(starts=args.starts, seed=run.seed, workers=args.workers)
    net = minimize_net(ms, cfg)
    cert = certify_infinitesimal(net)
    levels = [lv.as_dict() for lv in net.levels]
    payload = {"levels": levels, "order_j": _finite_or_none(net.order_j),
               "order_sup": _finite_or_none(net.order_sup), "certificate": cert.verdict,
               "monotone": net.monotone, "reasons": cert.reasons, "reading": cert.reading}
    run.emit(payload, schemas.SWEEP, levels)
    return 0


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # global flags may appear before or after the subcommand; SUPPRESS keeps a
    # subcommand's defaults from overwriting values given earlier
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--horizon", type=int, help="oracle sampling horizon (default: $LAMBDA_HORIZON or 100000)")
    common.add_argument("--seed", type=int, help=f"random seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--format", choices=("json", "csv"), help="output format (default: json)")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--oracle-replay", metavar="LOG", help="re-impose answers from an `oracle log` output")

    p = _Parser(prog="lambda-theory", description=__doc__, epilog=EPILOG, parents=[common],
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True, parser_class=_Parser)

    hr = group("hr", "hyperreal expressions")
    e = hr.add_parser("eval", parents=[common], help="evaluate an expression", epilog=EPILOG,
                      formatter_class=argparse.RawDescriptionHelpFormatter)
    e.add_argument("expr")
    e.set_defaults(handler=cmd_hr_eval)

    orc = group("oracle", "ultrafilter oracle")
    lg = orc.add_parser("log", parents=[common], help="print the decision log of a run as JSON lines")
    lg.add_argument("expr", nargs="*", help="hyperreal expressions to evaluate first")
    lg.add_argument("--formulas", help="also check this formula file")
    lg.set_defaults(handler=cmd_oracle_log)

    tr = group("transfer", "bounded formulas")
    ck = tr.add_parser("check", parents=[common], help="decide each sentence of a formula file",
                       epilog=FORMULA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    ck.add_argument("file")
    ck.set_defaults(handler=cmd_transfer_check)

    pj = sub.add_parser("project", parents=[common], help="L2 projection of f(x) onto a level")
    pj.add_argument("--basis", choices=("hat", "sine"), default="hat")
    pj.add_argument("--m", type=int, required=True, help="number of elements")
    pj.add_argument("--f", required=True, help='function of x, e.g. "sin(pi*x)"')
    pj.set_defaults(handler=cmd_project)

    dv = sub.add_parser("derive", parents=[common], help="generalized derivative of a projected f or of stored coefficients")
    dv.add_argument("--basis", choices=("hat", "sine"), default="hat")
    dv.add_argument("--m", type=int)
    dv.add_argument("--f")
    dv.add_argument("--coeffs", help="coefficient JSON written by `project`")
    dv.set_defaults(handler=cmd_derive)

    var = group("variational", "double-well minimization over nested levels")
    sw = var.add_parser("sweep", parents=[common], help="minimize on each level and fit decay orders")
    sw.add_argument("--elements", default="2,4,8,16,32,64", help="comma-separated even element counts")
    sw.add_argument("--starts", type=int, default=MinimizeConfig.starts, help="random starts per level")
    sw.add_argument("--workers", type=int, default=1, help="levels minimized in parallel")
    sw.set_defaults(handler=cmd_variational_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        return args.handler(Run(args, argv))
    except (UsageError, ParseError) as exc:
        sys.stderr.write(f"usage error: {exc}\n\n{EPILOG}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"usage error: {exc.strerror}: {exc.filename}\n")
        return 2
    except LambdaError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
