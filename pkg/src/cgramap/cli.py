"""Command-line entry point: ``cgramap <subcommand> ...``.

Exit status is 0 on success, 1 when the answer is negative (no mapping,
violations found) and 2 for usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .arch import ArchError, load_arch
from .dfg import DfgError, read_dfg
from .driver import MAPPED, SearchConfig, expand_stages, map_loop, utilization
from .encode import AMO_ENCODINGS, UnroutableEdge, build_problem
from .schedule import (
    alap,
    asap,
    build_kms,
    compute_mii,
    format_kms,
    format_tables,
    mobility,
    mobility_schedule,
)
from .solve import (
    ExternalModelPending,
    FileExchangeSolver,
    ModelError,
    dump_mapping,
    load_mapping,
    solve,
)
from .verify import OracleSizeError, brute_force_min_ii, validate

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text):
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _inputs(p, arch=True, dfg=True):
    if dfg:
        p.add_argument("--dfg", required=True, help="dataflow graph JSON")
    if arch:
        p.add_argument("--arch", required=True, help="CGRA description JSON")
        p.add_argument("--topology", choices=("mesh", "torus"), help="override the arch file's topology")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgramap", description="Exact SAT-based modulo mapping onto CGRAs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="search for the smallest feasible II")
    _inputs(p)
    p.add_argument("--max-ii", type=_positive_int, default=50)
    p.add_argument("--per-ii-timeout", type=_positive_float, metavar="SECONDS")
    p.add_argument("--timeout", type=_positive_float, default=4000.0, metavar="SECONDS")
    p.add_argument("--solver", choices=("embedded", "dimacs-file"), default="embedded")
    p.add_argument("--workdir", help="exchange directory for --solver dimacs-file")
    p.add_argument("--amo", choices=AMO_ENCODINGS, default="pairwise")
    p.add_argument("--stages", action="store_true", help="also print prologue/kernel/epilogue to stderr")
    p.add_argument("-o", "--out", help="write the mapping here instead of stdout")

    p = sub.add_parser("schedule", help="print ASAP/ALAP/mobility tables and optionally the KMS")
    _inputs(p, arch=False)
    p.add_argument("--arch", help="also report the MII for this CGRA")
    p.add_argument("--topology", choices=("mesh", "torus"))
    p.add_argument("--ii", type=_positive_int, help="fold the mobility schedule at this II")

    p = sub.add_parser("encode", help="write the CNF for one II")
    _inputs(p)
    p.add_argument("--ii", type=_positive_int, required=True)
    p.add_argument("--dimacs", required=True, help="CNF output path")
    p.add_argument("--map", dest="litmap", help="literal map output path (default: <dimacs>.map)")
    p.add_argument("--amo", choices=AMO_ENCODINGS, default="pairwise")

    p = sub.add_parser("validate", help="check a mapping for legality")
    _inputs(p)
    p.add_argument("--mapping", required=True)

    p = sub.add_parser("oracle", help="exhaustive search for the smallest II (small graphs only)")
    _inputs(p)
    p.add_argument("--max-ii", type=_positive_int, default=12)
    p.add_argument("--allow-large", action="store_true", help="lift the node-count guard")
    p.add_argument("--no-registers", action="store_true", help="skip the register capacity check")
    p.add_argument("-o", "--out")

    p = sub.add_parser("metrics", help="report utilization and related figures for a mapping")
    p.add_argument("--mapping", required=True)
    p.add_argument("--arch", required=True)
    p.add_argument("--topology", choices=("mesh", "torus"))
    p.add_argument("--dfg", help="include MII and stage counts")
    return parser


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write_text(path, text) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _load_spec(args):
    spec = load_arch(_read_text(args.arch))
    return spec.with_topology(args.topology) if args.topology else spec


def _load_graph(args):
    try:
        return read_dfg(args.dfg)
    except OSError as exc:
        raise UsageError(f"cannot read {args.dfg}: {exc.strerror}") from None


def _emit(text, out=None) -> None:
    if out:
        _write_text(out, text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _metrics(m, spec, g=None) -> dict:
    out = {"utilization": round(utilization(m, spec), 3)}
    if g is not None:
        out["mii"] = compute_mii(g, spec).mii
    return out


def cmd_map(args) -> int:
    g, spec = _load_graph(args), _load_spec(args)
    cfg = SearchConfig(args.max_ii, args.per_ii_timeout, args.timeout, args.amo)
    if args.solver == "dimacs-file":
        if not args.workdir:
            raise UsageError("--solver dimacs-file needs --workdir")
        solver = FileExchangeSolver(args.workdir)
    else:
        solver = solve
    try:
        result = map_loop(g, spec, cfg, solver)
    except ExternalModelPending as exc:
        print(f"waiting for an external model: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    if result.outcome != MAPPED:
        print(f"no mapping: {result.outcome} (mii={result.mii}, max_ii={cfg.max_ii})", file=sys.stderr)
        return EXIT_NEGATIVE
    m = result.mapping
    _emit(dump_mapping(m, _metrics(m, spec, g)), args.out)
    if args.stages:
        kms = build_kms(mobility_schedule(g), m.ii)
        staged = expand_stages(m, kms)
        for name in ("prologue", "kernel", "epilogue"):
            for k, row in enumerate(getattr(staged, name)):
                cells = " ".join(f"{n}@pe{pe}/i{i}" for n, pe, i in row)
                print(f"{name}[{k}] {cells}", file=sys.stderr)
    return EXIT_OK


def cmd_schedule(args) -> int:
    g = _load_graph(args)
    early = asap(g)
    late = alap(g, early.length)
    ms = mobility(early, late)
    print(format_tables(early, late, ms))
    if args.arch:
        r = compute_mii(g, _load_spec(args))
        print(f"ResII={r.res_ii} RecII={r.rec_ii} MII={r.mii}")
    if args.ii:
        print(format_kms(build_kms(ms, args.ii)))
    return EXIT_OK


def cmd_encode(args) -> int:
    g, spec = _load_graph(args), _load_spec(args)
    try:
        problem = build_problem(g, spec, args.ii, args.amo)
    except UnroutableEdge as exc:
        print(f"infeasible at ii={args.ii}: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    _write_text(args.dimacs, problem.to_dimacs())
    _write_text(args.litmap or args.dimacs + ".map", problem.literal_map())
    print(f"p cnf {problem.num_vars} {len(problem.clauses)}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    g, spec = _load_graph(args), _load_spec(args)
    m = load_mapping(_read_text(args.mapping))
    problems = validate(g, spec, m)
    for v in problems:
        print(v)
    if problems:
        return EXIT_NEGATIVE
    print("ok")
    return EXIT_OK


def cmd_oracle(args) -> int:
    g, spec = _load_graph(args), _load_spec(args)
    try:
        found = brute_force_min_ii(
            g, spec, args.max_ii, allow_large=args.allow_large, check_registers=not args.no_registers
        )
    except OracleSizeError as exc:
        raise UsageError(f"{exc}; pass --allow-large to search anyway") from None
    if found is None:
        print(f"no mapping up to ii={args.max_ii}")
        return EXIT_NEGATIVE
    _emit(dump_mapping(found[1], _metrics(found[1], spec, g)), args.out)
    return EXIT_OK


def cmd_metrics(args) -> int:
    spec = _load_spec(args)
    m = load_mapping(_read_text(args.mapping))
    out = {"ii": m.ii, "nodes": len({p.node for p in m.placements}), "pes": spec.num_pes}
    out.update(_metrics(m, spec))
    if args.dfg:
        g = _load_graph(args)
        out["mii"] = compute_mii(g, spec).mii
        staged = expand_stages(m, build_kms(mobility_schedule(g), m.ii))
        out["stages"] = {
            "prologue": len(staged.prologue),
            "kernel": len(staged.kernel),
            "epilogue": len(staged.epilogue),
        }
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "map": cmd_map,
    "schedule": cmd_schedule,
    "encode": cmd_encode,
    "validate": cmd_validate,
    "oracle": cmd_oracle,
    "metrics": cmd_metrics,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger = logging.getLogger("cgramap")
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DfgError, ArchError, ModelError) as exc:
        print(f"cgramap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        logger.removeHandler(handler)


def run():
    sys.exit(main())
