"""Command-line front end.

Subcommands: ``solve`` one instance to a JSON report, ``generate`` random
scheduling instances, ``oracle`` exact reference answers for small
instances, and ``bench`` a manifest of runs into CSV.  Exit codes: 0 for a
proven answer (optimal or infeasible), 2 when a resource limit fired, and
1 for usage, format, or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import rcpsp, smswt, tsptw
from .core import SolveLimits, SolveStatus, evaluate_solution
from .cost import cost_to_json, is_finite
from .parsing import ParseError, UnknownFormat
from .search import BeamConfig, PropagationMode, astar, cabs

PROBLEMS = ("smswt", "rcpsp", "tsptw")
MODES = {
    "off": PropagationMode.OFF,
    "once": PropagationMode.ONCE,
    "fixpoint": PropagationMode.FIXPOINT,
}
ORACLE_CAPS = {"smswt": 10, "rcpsp": 10, "tsptw": 10}

CSV_COLUMNS = [
    "instance",
    "problem",
    "algo",
    "propagation",
    "status",
    "cost",
    "expansions",
    "generated",
    "wall_time_s",
    "propagation_time_s",
    "final_gap",
    "solved_count",
    "error",
]


class TooLarge(Exception):
    """Instance exceeds the oracle's size cap."""


class _Parser(argparse.ArgumentParser):
    # Usage errors exit 1; argparse's default of 2 is reserved for limits.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _detect_format(path: str, problem: str, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".sm":
        return "psplib"
    if suffix == ".json":
        return "json"
    try:
        with open(path) as fh:
            head = fh.read(4096)
    except OSError as exc:
        raise ParseError(str(exc), path) from exc
    if head.lstrip().startswith("{"):
        return "json"
    if problem == "tsptw":
        return "tsptw-matrix"
    if problem == "rcpsp":
        return "psplib"
    raise UnknownFormat(f"cannot determine format of {path}")


def _load(problem: str, path: str, fmt: str):
    """Instance, model, and adapter for one problem/file pair."""
    fmt = _detect_format(path, problem, fmt)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(str(exc), path) from exc
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", path, exc.lineno) from exc
    if problem == "smswt":
        if fmt != "json":
            raise UnknownFormat("smswt instances are JSON only")
        try:
            instance = smswt.SmsInstance.from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(str(exc), path) from exc
        model = smswt.SmsModel(instance)
        return instance, model, smswt.SmsAdapter(model)
    if problem == "rcpsp":
        if fmt == "json":
            try:
                instance = rcpsp.RcpspInstance.from_json(data)
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(str(exc), path) from exc
        elif fmt == "psplib":
            instance = rcpsp.parse_psplib(text, path)
        else:
            raise UnknownFormat(f"format {fmt} not valid for rcpsp")
        model = rcpsp.RcpspModel(instance)
        return instance, model, rcpsp.RcpspAdapter(model)
    if problem == "tsptw":
        if fmt == "json":
            try:
                instance = tsptw.TsptwInstance.from_json(data)
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(str(exc), path) from exc
        elif fmt == "tsptw-matrix":
            instance = tsptw.parse_matrix(text, path)
        else:
            raise UnknownFormat(f"format {fmt} not valid for tsptw")
        model = tsptw.TsptwModel(instance)
        return instance, model, tsptw.TsptwAdapter(model)
    raise UnknownFormat(f"unknown problem kind {problem}")


def _limits_from(time_limit, mem_limit_mb, expansion_cap) -> SolveLimits:
    memory_limit = None
    if mem_limit_mb is not None:
        memory_limit = max(1, int(mem_limit_mb * 1024 * 1024))
    return SolveLimits(
        time_limit=time_limit, memory_limit=memory_limit, expansion_cap=expansion_cap
    )


def _run_solver(model, adapter, algo: str, propagation: str, limits: SolveLimits):
    mode = MODES[propagation]
    if mode is PropagationMode.OFF:
        adapter = None
    if algo == "astar":
        return astar(model, adapter, limits, mode)
    return cabs(model, adapter, limits, BeamConfig(), mode)


def _cmd_solve(args) -> int:
    _instance, model, adapter = _load(args.problem, args.instance, args.format)
    limits = _limits_from(args.time_limit, args.mem_limit, args.expansion_cap)
    started = time.perf_counter()
    result = _run_solver(model, adapter, args.algo, args.propagation, limits)
    wall = time.perf_counter() - started
    solution = None
    if result.incumbent is not None:
        cost, labels = result.incumbent
        replayed = evaluate_solution(model, labels)
        if replayed != cost:
            raise RuntimeError(
                f"solver bug: replayed cost {replayed!r} != reported {cost!r}"
            )
        solution = list(labels)
    report = {
        "instance": args.instance,
        "problem": args.problem,
        "algo": args.algo,
        "propagation": args.propagation,
        "seed": args.seed,
        "status": result.status.value,
        "cost": cost_to_json(result.cost),
        "root_dual": cost_to_json(result.root_dual),
        "gap": result.metrics.final_gap,
        "wall_time_s": wall,
        "metrics": result.metrics.to_json(),
        "solution": solution,
        "verified": solution is not None,
    }
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(payload)
    else:
        sys.stdout.write(payload)
    if result.status in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE):
        return 0
    return 2


def _cmd_generate(args) -> int:
    if args.kind != "smswt":
        raise UnknownFormat("only smswt instances can be generated")
    config = smswt.SmsGeneratorConfig(
        n=args.n, tau=args.tau, rho=args.rho, phi=args.phi, seed=args.seed, count=args.count
    )
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"smswt_n{args.n}_tau{args.tau}_rho{args.rho}_phi{args.phi}_seed{args.seed}"
    for idx, instance in enumerate(smswt.generate_instances(config)):
        path = out_dir / f"{stem}_{idx:03d}.json"
        path.write_text(json.dumps(instance.to_json(), indent=2, sort_keys=True) + "\n")
        print(path)
    return 0


def _cmd_oracle(args) -> int:
    instance, _model, _adapter = _load(args.problem, args.instance, args.format)
    cap = ORACLE_CAPS[args.problem]
    size = instance.n
    if size > cap:
        raise TooLarge(f"{args.problem} oracle refuses n={size} (cap {cap})")
    if args.problem == "smswt":
        value = smswt.permutation_optimum(instance)
    elif args.problem == "rcpsp":
        value = rcpsp.ordering_optimum(instance)
    else:
        value = tsptw.permutation_optimum(instance)
    print("INFEASIBLE" if not is_finite(value) else int(value))
    return 0


def _bench_row(row: dict) -> dict:
    out = {c: "" for c in CSV_COLUMNS}
    out["instance"] = row.get("instance", "")
    out["problem"] = row.get("problem", "")
    out["algo"] = row.get("algo", "cabs")
    out["propagation"] = row.get("propagation", "once")
    try:
        problem = row["problem"]
        if problem not in PROBLEMS:
            raise UnknownFormat(f"unknown problem kind {problem}")
        if out["algo"] not in ("astar", "cabs"):
            raise UnknownFormat(f"unknown algorithm {out['algo']}")
        if out["propagation"] not in MODES:
            raise UnknownFormat(f"unknown propagation mode {out['propagation']}")
        _instance, model, adapter = _load(problem, row["instance"], row.get("format", "auto"))
        limits = _limits_from(
            row.get("time_limit"), row.get("mem_limit_mb"), row.get("expansion_cap")
        )
        started = time.perf_counter()
        result = _run_solver(model, adapter, out["algo"], out["propagation"], limits)
        wall = time.perf_counter() - started
        out["status"] = result.status.value
        if result.cost is not None:
            out["cost"] = cost_to_json(result.cost)
        out["expansions"] = result.metrics.expansions
        out["generated"] = result.metrics.generated
        out["wall_time_s"] = f"{wall:.6f}"
        out["propagation_time_s"] = f"{result.metrics.propagation_time:.6f}"
        out["final_gap"] = repr(result.metrics.final_gap)
    except Exception as exc:  # per-row failures never abort the batch
        out["status"] = "Error"
        out["error"] = str(exc)
    return out


def _cmd_bench(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except OSError as exc:
        raise ParseError(str(exc), args.manifest) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc}", args.manifest, exc.lineno) from exc
    rows = manifest["runs"] if isinstance(manifest, dict) else manifest
    if not isinstance(rows, list):
        raise ParseError("manifest must be a list of runs or {'runs': [...]}", args.manifest)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    solved: dict = {}
    totals: dict = {}
    for row in rows:
        rendered = _bench_row(row)
        writer.writerow(rendered)
        key = (rendered["algo"], rendered["propagation"])
        totals[key] = totals.get(key, 0) + 1
        if rendered["status"] in ("Optimal", "Infeasible"):
            solved[key] = solved.get(key, 0) + 1
    for key in sorted(totals):
        summary = {c: "" for c in CSV_COLUMNS}
        summary["instance"] = "[summary]"
        summary["algo"], summary["propagation"] = key
        summary["status"] = f"solved {solved.get(key, 0)}/{totals[key]}"
        summary["solved_count"] = solved.get(key, 0)
        writer.writerow(summary)
    payload = buffer.getvalue()
    if args.output:
        Path(args.output).write_text(payload)
    else:
        sys.stdout.write(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpcp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--problem", choices=PROBLEMS, required=True)
        p.add_argument(
            "--format", choices=("auto", "json", "psplib", "tsptw-matrix"), default="auto"
        )
        p.add_argument("--seed", type=int, default=0)

    solve = sub.add_parser("solve", parents=[], help="solve one instance")
    solve.add_argument("instance")
    add_shared(solve)
    solve.add_argument("--algo", choices=("astar", "cabs"), default="cabs")
    solve.add_argument("--propagation", choices=tuple(MODES), default="once")
    solve.add_argument("--time-limit", type=float, default=None, metavar="SEC")
    solve.add_argument("--mem-limit", type=float, default=None, metavar="MB")
    solve.add_argument("--expansion-cap", type=int, default=None, metavar="N")
    solve.add_argument("--output", default=None, metavar="PATH")
    solve.set_defaults(func=_cmd_solve)

    gen = sub.add_parser("generate", help="generate random instances")
    gen.add_argument("kind", choices=PROBLEMS)
    gen.add_argument("--n", type=int, default=50)
    gen.add_argument("--tau", type=float, default=0.2)
    gen.add_argument("--rho", type=float, default=0.25)
    gen.add_argument("--phi", type=float, default=0.9)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output-dir", default=".", metavar="DIR")
    gen.set_defaults(func=_cmd_generate)

    oracle = sub.add_parser("oracle", help="exact answer for a small instance")
    oracle.add_argument("instance")
    add_shared(oracle)
    oracle.set_defaults(func=_cmd_oracle)

    bench = sub.add_parser("bench", help="run a manifest of solves into CSV")
    bench.add_argument("manifest")
    bench.add_argument("--output", default=None, metavar="PATH")
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (ParseError, UnknownFormat, TooLarge, ValueError) as exc:
        print(f"dpcp: error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
