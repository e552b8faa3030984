"""Command-line interface.

Exit codes
----------
0  success (``run-cases``: every case ran, even if some were infeasible)
1  invalid instance or case file
2  unreadable input file
3  infeasible model
4  limit reached without a feasible solution
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from chpuc.builder import InfeasibleFixing
from chpuc.instance import (InstanceError, bundled_instance_path, check_instance, load_instance,
                            validate_instance)
from chpuc.reports import (DISPATCH_COLUMNS, NETWORK_COLUMNS, write_csv, dispatch_rows,
                           emit_reports, network_rows, slug)
from chpuc.scenario import (CaseConfig, SolverSettings, StageInfeasible, standard_cases,
                            run_coupled, run_decoupled, run_suite)
from chpuc.solver import ENGINES, elastic_rows, write_mps

EXIT_OK, EXIT_INVALID, EXIT_UNREADABLE, EXIT_INFEASIBLE, EXIT_LIMIT = 0, 1, 2, 3, 4

log = logging.getLogger("chpuc")


class UsageError(ValueError):
    pass


@dataclass
class RunManifest:
    """Everything a run needs, gathered from flags and files."""
    instance_path: Path
    cases: list
    out_dir: Path
    gap: float = 1e-6
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    engine: str = "auto"
    jobs: int = 1
    figures: bool = True
    export_mps: bool = False
    record_times: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.instance_path = Path(self.instance_path)
        self.out_dir = Path(self.out_dir)
        if not self.gap > 0:
            raise UsageError("--gap must be positive")
        if self.time_limit is not None and not self.time_limit > 0:
            raise UsageError("--time-limit must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")

    @property
    def settings(self) -> SolverSettings:
        return SolverSettings(self.gap, self.time_limit, self.node_limit, self.engine)

    def prepare_output(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(self.out_dir, os.W_OK):
            raise UsageError(f"output directory {self.out_dir} is not writable")

    def to_dict(self) -> dict:
        return {
            "instance": str(self.instance_path),
            "cases": [vars(c).copy() for c in self.cases],
            "gap": self.gap, "time_limit": self.time_limit, "node_limit": self.node_limit,
            "engine": self.engine, "figures": self.figures, "export_mps": self.export_mps,
        }


def _color(text: str, code: str) -> str:
    """ANSI colour for terminals; NO_COLOR or CHPUC_COLOR=0 turns it off."""
    if os.environ.get("NO_COLOR") or os.environ.get("CHPUC_COLOR") == "0":
        return text
    if not sys.stdout.isatty() and os.environ.get("CHPUC_COLOR") != "1":
        return text
    return f"\033[{code}m{text}\033[0m"


def _attach_log(out_dir: Path) -> logging.Handler:
    handler = logging.FileHandler(out_dir / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    return handler


def _detach_log(handler: logging.Handler) -> None:
    logging.getLogger().removeHandler(handler)
    handler.close()


def resolve_instance_path(path) -> Path:
    """``path`` itself, or the bundled instance of that name when no such file exists."""
    path = Path(path)
    if not path.exists() and path.suffix == "" and bundled_instance_path(path.name).exists():
        return bundled_instance_path(path.name)
    return path


def _read_instance(path):
    """Load and validate; returns (instance, exit code, message)."""
    path = resolve_instance_path(path)
    try:
        raw = load_instance(path)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, EXIT_UNREADABLE, f"{path}: cannot read instance: {exc}"
    except InstanceError as exc:
        return None, EXIT_INVALID, f"{path}: {exc}"
    try:
        return validate_instance(raw), EXIT_OK, ""
    except InstanceError as exc:
        return None, EXIT_INVALID, f"{path}: {exc}"


# ---- validate ------------------------------------------------------------------

def cmd_validate(args) -> int:
    path = resolve_instance_path(args.path)
    try:
        raw = load_instance(path)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"{path}: cannot read instance: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except InstanceError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = check_instance(raw)
    for p in problems:
        print(f"{path}: {p}")
    if problems:
        print(_color(f"invalid: {len(problems)} problem(s)", "31"))
        return EXIT_INVALID
    inst = validate_instance(raw)
    kinds = {}
    for u in inst.units:
        kinds[u.kind] = kinds.get(u.kind, 0) + 1
    unit_text = ", ".join(f"{n} {k}" for k, n in sorted(kinds.items()))
    print(_color("valid", "32") + f": {inst.name}, T={inst.horizon}, {len(inst.buses)} buses, "
          f"{len(inst.lines)} lines, {len(inst.zones)} zones, {len(inst.units)} units ({unit_text})")
    return EXIT_OK


# ---- solve ---------------------------------------------------------------------

def _single_case(args) -> CaseConfig:
    coupled = args.case != "decoupled"
    return CaseConfig("solve", transmission_constrained=not args.no_transmission, coupled=coupled,
                      storage_enabled=args.storage, p2h_enabled=args.p2h,
                      wind_penetration=args.wind_penetration)


def _report_infeasible(exc: StageInfeasible, out_dir: Path) -> int:
    if exc.status == "infeasible":
        rows = elastic_rows(exc.model) if exc.model is not None else []
        worst = f"; worst row {rows[0][0]} (short by {rows[0][1]:.6g})" if rows else ""
        print(_color("infeasible", "31") + f": {exc.stage} stage{worst}")
        if rows:
            with open(out_dir / "infeasibility.txt", "w", encoding="utf-8") as fh:
                fh.writelines(f"{name}\t{amount!r}\n" for name, amount in rows)
        return EXIT_INFEASIBLE
    print(_color("limit-reached", "33") + f": {exc.stage} stage has no feasible solution yet")
    return EXIT_LIMIT


def cmd_solve(args) -> int:
    inst, code, msg = _read_instance(args.path)
    if inst is None:
        print(msg, file=sys.stderr)
        return code
    try:
        manifest = RunManifest(args.path, [_single_case(args)], args.out, gap=args.gap,
                               time_limit=args.time_limit, node_limit=args.node_limit,
                               engine=args.engine, export_mps=args.export_mps)
        manifest.prepare_output()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    config = manifest.cases[0]
    out = manifest.out_dir
    handler = _attach_log(out)
    try:
        runner = run_coupled if config.coupled else run_decoupled
        t0 = time.perf_counter()
        try:
            result = runner(inst, config, manifest.settings)
        except StageInfeasible as exc:
            if exc.model is not None:
                (out / "build.log").write_text(exc.model.log_text(), encoding="utf-8")
            return _report_infeasible(exc, out)
        except InfeasibleFixing as exc:
            print(_color("infeasible", "31") + f": electric stage: {exc}")
            return EXIT_INFEASIBLE
        log.info("solve took %.3f s", time.perf_counter() - t0)
        (out / "build.log").write_text("\n\n".join(m.log_text() for m in result.models),
                                       encoding="utf-8")
        write_csv(out / "schedule.csv", DISPATCH_COLUMNS, dispatch_rows(result))
        write_csv(out / "network.csv", NETWORK_COLUMNS, network_rows(result))
        if manifest.export_mps:
            _export_models(result, out, "model")
        status = _color(result.status, "32" if result.status == "optimal" else "33")
        print(f"{status}: objective {result.total_cost:.6f} EUR, gap {result.gap:.3g}, "
              f"spill {result.spill_mwh:.3f} MWh")
        return EXIT_OK
    finally:
        _detach_log(handler)


def _export_models(result, out: Path, stem: str) -> list:
    """One MPS per case: the final (electric or coupled) model, plus the heat stage if any."""
    paths = []
    models = list(result.models)
    if not models:
        return paths
    final = models[-1]
    write_mps(final, out / f"{stem}.mps", name=stem[:8].upper())
    paths.append(out / f"{stem}.mps")
    for extra in models[:-1]:
        write_mps(extra, out / f"{stem}_heat.mps", name=(stem[:3] + "HEAT").upper())
        paths.append(out / f"{stem}_heat.mps")
    return paths


# ---- run-cases -----------------------------------------------------------------

def load_cases(path) -> list:
    """Case configs from a JSON list (or ``{"cases": [...]}``) of CaseConfig fields."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("cases")
    if not isinstance(data, list) or not data:
        raise UsageError(f"{path}: expected a non-empty list of cases")
    try:
        return [CaseConfig.from_dict(d) for d in data]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_run_cases(args) -> int:
    inst, code, msg = _read_instance(args.path)
    if inst is None:
        print(msg, file=sys.stderr)
        return code
    try:
        cases = load_cases(args.cases) if args.cases else standard_cases()
    except (OSError, json.JSONDecodeError) as exc:
        print(f"{args.cases}: cannot read cases: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        manifest = RunManifest(args.path, cases, args.out, gap=args.gap,
                               time_limit=args.time_limit, node_limit=args.node_limit,
                               engine=args.engine, jobs=args.jobs, figures=not args.no_figures,
                               export_mps=args.export_mps, record_times=args.record_times)
        manifest.prepare_output()
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = manifest.out_dir
    handler = _attach_log(out)
    try:
        t0 = time.perf_counter()
        suite = run_suite(inst, manifest.cases, manifest.settings, jobs=manifest.jobs)
        for r in suite.rows + list(suite.baselines.values()):
            log.info("%s: %s in %.3f s (gap %.3g) %s", r.label, r.status, r.solve_s, r.gap,
                     r.message)
        log.info("suite took %.3f s", time.perf_counter() - t0)
        emit_reports(suite, out, figures=manifest.figures, record_times=manifest.record_times)
        (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1) + "\n",
                                           encoding="utf-8")
        if manifest.export_mps:
            for r in suite.rows:
                _export_models(r, out, slug(r.label))
        width = max(len(r.label) for r in suite.rows)
        for r in suite.rows:
            if r.ok:
                ri = "" if r.ri is None else f"  RI {100 * r.ri:+.2f}%"
                print(f"{r.label:<{width}}  {r.total_cost:14.2f} EUR  spill "
                      f"{r.spill_mwh:9.2f} MWh{ri}")
            else:
                print(f"{r.label:<{width}}  " + _color(r.status, "31") + f"  {r.message}")
        print(f"wrote {out / 'summary.csv'}")
        return EXIT_OK
    finally:
        _detach_log(handler)


# ---- parser --------------------------------------------------------------------

def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gap", type=float, default=1e-6, help="relative MIP gap (default 1e-6)")
    p.add_argument("--time-limit", type=float, default=None, metavar="S",
                   help="wall-clock limit per MILP solve in seconds")
    p.add_argument("--node-limit", type=int, default=None, metavar="N")
    p.add_argument("--engine", choices=ENGINES, default="auto",
                   help="MILP engine: embedded branch-and-bound, HiGHS, or auto by size")
    p.add_argument("--export-mps", action="store_true", help="write the model(s) as MPS files")
    p.add_argument("--out", type=Path, default=Path("out"), metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chpuc", description="Unit commitment for coupled power and district-heating systems.",
        epilog="exit codes: 0 ok, 1 invalid input, 2 unreadable file, 3 infeasible, "
               "4 limit reached without a solution")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="build and solve one case")
    p.add_argument("path")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--coupled", dest="case", action="store_const", const="coupled")
    mode.add_argument("--decoupled", dest="case", action="store_const", const="decoupled")
    mode.add_argument("--case", dest="case", choices=("coupled", "decoupled"))
    p.add_argument("--no-transmission", action="store_true", help="ignore line ratings")
    p.add_argument("--storage", action="store_true", help="enable heat storage")
    p.add_argument("--p2h", action="store_true", help="enable power-to-heat units")
    p.add_argument("--wind-penetration", type=float, default=None, metavar="F",
                   help="rescale wind to this share of electric demand")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve, case="coupled")

    p = sub.add_parser("run-cases", help="run the seven-case comparison (or a case file)")
    p.add_argument("path")
    p.add_argument("--cases", metavar="FILE", help="JSON list of case configurations")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--record-times", action="store_true",
                   help="fill the solve_s column (makes the summary run-dependent)")
    _solver_flags(p)
    p.set_defaults(func=cmd_run_cases)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
