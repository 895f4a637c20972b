"""Command-line entry point: ``learncurve <command> ...``.

Exit codes: 0 success, 1 usage, 2 data or fit error, 3 infeasible scenario,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, curve_items, digest, load_curve, load_scenario
from .curves import (
    CurveError,
    DomainError,
    UnsupportedVariantError,
    cumulative_cost,
    effective_learning_rate,
    is_integrable,
    unit_cost,
)
from .dataset import APPENDIX_TABLES, ALL_TABLES, DatasetError, group_stats, load_packaged, load_records, query
from .expansion import InfeasibleScenarioError, MODES, compare_modes, solve_expansion, sweep_learning_rate
from .fitting import FitError, bootstrap_ci, fit, read_series
from .milp import NumericError
from .pwl import PwlPolicy, build_breakpoints

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 1, 2, 3, 4
DEFAULT_SEED = 20240101


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(header, rows) -> str:
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return fh.getvalue()


def to_table(header, rows) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return _cell(v)

    cells = [list(map(str, header))] + [[fmt(v) for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


@dataclasses.dataclass
class RunManifest:
    command: str
    argv: list
    config_digest: str | None
    tool_version: str
    seeds: dict
    started_at: str
    finished_at: str = ""
    outputs: dict = dataclasses.field(default_factory=dict)


class _Run:
    """Collects outputs of one command and writes its manifest."""

    def __init__(self, args, config_path=None, seeds=None):
        self.args = args
        self.manifest = RunManifest(
            command=args.command_name,
            argv=list(args.argv),
            config_digest=digest(Path(config_path).read_bytes()) if config_path else None,
            tool_version=__version__,
            seeds=seeds or {},
            started_at=_now(),
        )
        self.manifest_path = None

    def emit(self, text: str, path=None) -> None:
        if path is None:
            sys.stdout.write(text)
            return
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.manifest.outputs[str(path)] = digest(text)
        if self.manifest_path is None:
            self.manifest_path = path.parent / "manifest.json" if self.args.out_is_dir else path.with_name(path.name + ".manifest.json")

    def finish(self) -> None:
        target = self.args.manifest or self.manifest_path
        if target is None:
            return
        self.manifest.finished_at = _now()
        target = Path(target)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(to_json(dataclasses.asdict(self.manifest)), encoding="utf-8")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _parse_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def parse_lr_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b``) or a comma-separated list."""
    if ":" not in text:
        vals = _parse_list(text, "--lr")
        if not vals:
            raise UsageError("--lr needs at least one value")
        return vals
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--lr range must look like a:b:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--lr range must be numeric, got {text!r}") from None
    if not step > 0 or b < a:
        raise UsageError("--lr range needs step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9))
    return [round(a + k * step, 12) for k in range(n + 1)]


# ----------------------------------------------------------------------------
# commands


def _grid(args, spec) -> list[float]:
    if args.x:
        return _parse_list(args.x, "--x")
    lo = args.x_min if args.x_min is not None else float(spec.x0)
    hi = args.x_max if args.x_max is not None else lo * 1024.0
    if not (0 < lo < hi):
        raise UsageError("need 0 < --x-min < --x-max")
    if args.spacing == "geometric":
        return [float(v) for v in np.geomspace(lo, hi, args.points)]
    return [float(v) for v in np.linspace(lo, hi, args.points)]


def cmd_curve_eval(args) -> int:
    spec = load_curve(args.spec)
    run = _Run(args, args.spec)
    rows = []
    for x in _grid(args, spec):
        c = unit_cost(spec, x)
        try:
            cum = cumulative_cost(spec, x) if is_integrable(spec) else None
        except DomainError:
            cum = None
        try:
            lr = effective_learning_rate(spec, x, method=args.method)
        except UnsupportedVariantError:
            lr = None
        rows.append((x, c, cum, lr))
    header = ("x", "unit_cost", "cumulative_cost", "effective_lr")
    run.emit(to_table(header, rows) if args.pretty else to_csv(header, rows), args.out)
    run.finish()
    return EXIT_OK


def cmd_curve_show(args) -> int:
    spec = load_curve(args.spec)
    run = _Run(args, args.spec)
    if args.per_doubling is not None or args.max_rel_error is not None:
        if args.x_max is None:
            raise UsageError("breakpoints need --x-max")
        policy = PwlPolicy(per_doubling=args.per_doubling, max_rel_error=args.max_rel_error)
        pwl = build_breakpoints(spec, args.x_max, policy)
        run.emit(pwl.to_csv(), args.out)
    else:
        items, comps = curve_items(spec)
        info = {
            "type": type(spec).__name__,
            "parameters": dict(items),
            "components": [dataclasses.asdict(c) for c in comps],
            "c0": float(spec.c0),
            "x0": float(spec.x0),
            "integrable": is_integrable(spec),
        }
        try:
            info["effective_lr_at_x0"] = effective_learning_rate(spec, float(spec.x0))
        except UnsupportedVariantError:
            info["effective_lr_at_x0"] = None
        run.emit(to_json(info), args.out)
    run.finish()
    return EXIT_OK


def cmd_fit(args) -> int:
    series = read_series(args.data)
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    run = _Run(args, args.data, {"bootstrap": seed})
    result = fit(series, args.model, args.level).to_dict()
    if args.bootstrap:
        bi = bootstrap_ci(series, args.model, args.bootstrap, args.level, seed)
        result["bootstrap"] = dataclasses.asdict(bi)
    run.emit(to_json(result), args.out)
    run.finish()
    return EXIT_OK


def _records(args, default_tables):
    if args.file:
        return load_records(args.file, table="file")
    return load_packaged(args.table or default_tables)


def cmd_data_stats(args) -> int:
    run = _Run(args, args.file)
    stats = group_stats(_records(args, APPENDIX_TABLES), by=args.group_by)
    header = ("group", "n", "median", "q1", "q3", "whisker_low", "whisker_high", "outliers")
    rows = [
        (g, s.n, s.median, s.q1, s.q3, s.whisker_low, s.whisker_high, ";".join(repr(v) for v in s.outliers))
        for g, s in stats.items()
    ]
    run.emit(to_table(header, rows) if args.pretty else to_csv(header, rows), args.out)
    run.finish()
    return EXIT_OK


def cmd_data_query(args) -> int:
    run = _Run(args, args.file)
    recs = query(
        _records(args, ALL_TABLES),
        technology=args.technology,
        family=args.family,
        region=args.region,
        source=args.source,
        min_year=args.min_year,
        max_year=args.max_year,
    )
    header = ("table", "source", "technology", "family", "region", "end_year", "lbd", "lbr")
    rows = [(r.table, r.source, r.technology, r.family, r.region, r.end_year, r.lbd, r.lbr) for r in recs]
    run.emit(to_table(header, rows) if args.pretty else to_csv(header, rows), args.out)
    run.finish()
    return EXIT_OK


def _out_file(args, name):
    return None if args.out is None else Path(args.out) / name


def cmd_optimize(args) -> int:
    sc = load_scenario(args.scenario)
    if args.mode:
        sc = sc.replace(mode=args.mode)
    run = _Run(args, args.scenario)
    try:
        plan = solve_expansion(sc)
    except InfeasibleScenarioError as exc:
        run.emit(to_json({"status": "infeasible", **exc.report}), _out_file(args, "diagnosis.json"))
        run.finish()
        print(f"learncurve: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    run.emit(plan.to_json(), _out_file(args, "plan.json"))
    if args.out is not None:
        run.emit(plan.to_csv(), _out_file(args, "plan.csv"))
    run.finish()
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    lrs = parse_lr_range(args.lr)
    run = _Run(args, args.scenario)
    rows = sweep_learning_rate(sc, args.tech, lrs, jobs=args.jobs)
    header = ("lr", "status", "total_cost", "exact_cost", "total_builds", "first_build_period", "message")
    data = [dataclasses.astuple(r) for r in rows]
    run.emit(to_table(header, data) if args.pretty else to_csv(header, data), args.out)
    run.finish()
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = load_scenario(args.scenario)
    run = _Run(args, args.scenario)
    report = compare_modes(sc)
    out = report.to_dict()
    if not args.plans:
        out.pop("endogenous")
        out.pop("exogenous")
    run.emit(to_json(out), _out_file(args, "compare.json"))
    run.finish()
    return EXIT_INFEASIBLE if report.status == "infeasible" else EXIT_OK


# ----------------------------------------------------------------------------
# parser


def _common(p, out_is_dir=False):
    p.add_argument("--out", help="output directory" if out_is_dir else "output file (default: stdout)")
    p.add_argument("--manifest", help="manifest path (default: next to the outputs)")
    p.set_defaults(out_is_dir=out_is_dir)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="learncurve", description="Learning curves, rate data and capacity expansion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    curve = sub.add_parser("curve", help="evaluate or describe a curve file")
    csub = curve.add_subparsers(dest="curve_command", required=True, parser_class=_Parser)
    ev = csub.add_parser("eval", help="tabulate unit cost, cumulative cost and effective rate")
    ev.add_argument("spec")
    ev.add_argument("--x", help="comma-separated experience values")
    ev.add_argument("--x-min", type=float)
    ev.add_argument("--x-max", type=float)
    ev.add_argument("--points", type=int, default=11)
    ev.add_argument("--spacing", choices=("geometric", "linear"), default="geometric")
    ev.add_argument("--method", choices=("analytic", "fd"), default="analytic")
    ev.add_argument("--pretty", action="store_true")
    _common(ev)
    ev.set_defaults(func=cmd_curve_eval, command_name="curve eval")
    sh = csub.add_parser("show", help="describe a curve, or list PWL breakpoints")
    sh.add_argument("spec")
    sh.add_argument("--x-max", type=float)
    g = sh.add_mutually_exclusive_group()
    g.add_argument("--per-doubling", type=int)
    g.add_argument("--max-rel-error", type=float)
    _common(sh)
    sh.set_defaults(func=cmd_curve_show, command_name="curve show")

    ft = sub.add_parser("fit", help="fit a learning curve to x,cost[,y] data")
    ft.add_argument("data")
    ft.add_argument("--model", choices=("one", "two"), default="one")
    ft.add_argument("--bootstrap", type=int, default=0, metavar="N")
    ft.add_argument("--seed", type=int)
    ft.add_argument("--level", type=float, default=0.95)
    _common(ft)
    ft.set_defaults(func=cmd_fit, command_name="fit")

    data = sub.add_parser("data", help="learning-rate dataset")
    dsub = data.add_subparsers(dest="data_command", required=True, parser_class=_Parser)
    for name, func in (("stats", cmd_data_stats), ("query", cmd_data_query)):
        d = dsub.add_parser(name)
        src = d.add_mutually_exclusive_group()
        src.add_argument("--table", action="append", choices=ALL_TABLES)
        src.add_argument("--file")
        d.add_argument("--pretty", action="store_true")
        _common(d)
        d.set_defaults(func=func, command_name=f"data {name}")
        if name == "stats":
            d.add_argument("--group-by", choices=("technology", "family", "source", "region", "table"), default="technology")
        else:
            d.add_argument("--technology")
            d.add_argument("--family")
            d.add_argument("--region")
            d.add_argument("--source")
            d.add_argument("--min-year", type=int)
            d.add_argument("--max-year", type=int)

    op = sub.add_parser("optimize", help="solve an expansion scenario")
    op.add_argument("scenario")
    op.add_argument("--mode", choices=MODES)
    _common(op, out_is_dir=True)
    op.set_defaults(func=cmd_optimize, command_name="optimize")

    sw = sub.add_parser("sweep", help="re-solve a scenario over learning rates")
    sw.add_argument("scenario")
    sw.add_argument("--tech", required=True)
    sw.add_argument("--lr", required=True, help="a:b:step or comma-separated list")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--pretty", action="store_true")
    _common(sw)
    sw.set_defaults(func=cmd_sweep, command_name="sweep")

    cp = sub.add_parser("compare", help="endogenous versus exogenous learning")
    cp.add_argument("scenario")
    cp.add_argument("--plans", action="store_true", help="include both full plans")
    _common(cp, out_is_dir=True)
    cp.set_defaults(func=cmd_compare, command_name="compare")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"learncurve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleScenarioError as exc:
        print(f"learncurve: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"learncurve: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DatasetError, FitError, CurveError, ValueError, OSError) as exc:
        print(f"learncurve: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
