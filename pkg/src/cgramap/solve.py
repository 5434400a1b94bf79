"""Solving encoded problems and turning models into mappings."""
from __future__ import annotations

import json
import time
from pathlib import Path
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from . import cdcl
from .encode import CnfProblem, VarTable


class ModelError(ValueError):
    pass


class Placement(NamedTuple):
    node: int
    pe: int
    cycle: int
    iter: int


@dataclass
class Mapping:
    ii: int
    placements: tuple
    # (pe, producer) -> register index, filled in by register allocation
    registers: dict = field(default_factory=dict)

    def __post_init__(self):
        self.placements = tuple(sorted(Placement(*p) for p in self.placements))

    def by_node(self) -> dict:
        """First placement of every node (duplicates are the validator's business)."""
        out = {}
        for p in self.placements:
            out.setdefault(p.node, p)
        return out

    def to_dict(self, metrics: Optional[dict] = None) -> dict:
        out = {
            "ii": self.ii,
            "placements": [p._asdict() for p in self.placements],
            "registers": [
                {"pe": pe, "producer": n, "reg": r}
                for (pe, n), r in sorted(self.registers.items())
            ],
        }
        if metrics is not None:
            out["metrics"] = metrics
        return out


def mapping_from_dict(obj) -> Mapping:
    if not isinstance(obj, dict) or "ii" not in obj or "placements" not in obj:
        raise ModelError("mapping needs 'ii' and 'placements'")
    try:
        placements = [
            Placement(int(p["node"]), int(p["pe"]), int(p["cycle"]), int(p["iter"]))
            for p in obj["placements"]
        ]
        registers = {
            (int(r["pe"]), int(r["producer"])): int(r["reg"])
            for r in obj.get("registers", [])
        }
        ii = int(obj["ii"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed mapping: {exc}") from None
    return Mapping(ii, placements, registers)


def load_mapping(source) -> Mapping:
    if hasattr(source, "read"):
        source = source.read()
    try:
        obj = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed JSON: {exc}") from None
    return mapping_from_dict(obj)


def dump_mapping(m: Mapping, metrics: Optional[dict] = None) -> str:
    return json.dumps(m.to_dict(metrics), indent=1, sort_keys=True)


@dataclass
class SolveOutcome:
    status: str  # sat | unsat | timeout
    model: Optional[list] = None
    decisions: int = 0
    conflicts: int = 0
    wall_time: float = 0.0


def solve(problem: CnfProblem, budget: Optional[float] = None) -> SolveOutcome:
    """Run the embedded solver; a sat model is checked against every clause."""
    start = time.monotonic()
    solver = cdcl.Solver(problem.num_vars, problem.clauses)
    if budget is not None:
        # loading clauses counts against the budget too
        budget = max(budget - (time.monotonic() - start), 0.0)
    status, model = solver.solve(budget)
    if status == cdcl.SAT:
        bad = problem.first_violation(model)
        if bad is not None:
            raise AssertionError(f"solver model falsifies clause {bad}: {problem.clauses[bad]}")
    return SolveOutcome(
        status, model, solver.decisions, solver.conflicts, time.monotonic() - start
    )


def decode(model, vt: VarTable) -> Mapping:
    chosen = {}
    for var in range(1, vt.num_placement + 1):
        if model[var]:
            pv = vt.placements[var]
            if pv.node in chosen:
                raise ModelError(f"node {pv.node} has more than one true placement")
            chosen[pv.node] = Placement(pv.node, pv.pe, pv.cycle, pv.iter)
    missing = sorted(set(vt.by_node) - set(chosen))
    if missing:
        raise ModelError(f"nodes without a placement: {missing}")
    return Mapping(vt.ii, chosen.values())


def parse_dimacs_model(text: str) -> tuple:
    """Parse solver output into (status, {var: bool}).

    Accepts competition-style ``s``/``v`` lines as well as bare literal
    lists terminated by 0.
    """
    status = None
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("s "):
            word = line[2:].strip().upper()
            if word in ("SATISFIABLE", "SAT"):
                status = cdcl.SAT
            elif word in ("UNSATISFIABLE", "UNSAT"):
                status = cdcl.UNSAT
            else:
                status = cdcl.TIMEOUT
            continue
        if line.startswith("v "):
            line = line[2:]
        elif line in ("SAT", "UNSAT"):
            status = cdcl.SAT if line == "SAT" else cdcl.UNSAT
            continue
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ModelError(f"bad token {tok!r} in model") from None
            if lit:
                values[abs(lit)] = lit > 0
    if status is None:
        status = cdcl.SAT if values else cdcl.UNSAT
    return status, values


def checked_external_model(text: str, problem: CnfProblem) -> list:
    """Full assignment from external solver output, verified against ``problem``."""
    status, values = parse_dimacs_model(text)
    if status != cdcl.SAT:
        raise ModelError(f"external solver reported {status}")
    n = problem.num_vars
    out_of_range = [v for v in values if v > n]
    if out_of_range:
        raise ModelError(f"variable {min(out_of_range)} out of range 1..{n}")
    missing = [v for v in range(1, n + 1) if v not in values]
    if missing:
        raise ModelError(f"model leaves {len(missing)} variable(s) unassigned, first {missing[0]}")
    model = [False] + [values[v] for v in range(1, n + 1)]
    bad = problem.first_violation(model)
    if bad is not None:
        raise ModelError(f"model falsifies clause {bad} ({problem.tags[bad]})")
    return model


def import_external_model(text: str, problem: CnfProblem) -> Mapping:
    """Decode an external solver's model after checking it against ``problem``."""
    return decode(checked_external_model(text, problem), problem.vartable)


def model_to_dimacs(model) -> str:
    lits = [str(v if model[v] else -v) for v in range(1, len(model))]
    return "s SATISFIABLE\nv " + " ".join(lits) + " 0\n"


class ExternalModelPending(Exception):
    """The CNF has been written but no solver output is available yet."""

    def __init__(self, cnf_path, model_path):
        super().__init__(f"run a SAT solver on {cnf_path} and save its output as {model_path}")
        self.cnf_path = cnf_path
        self.model_path = model_path


class FileExchangeSolver:
    """Hands problems to an external solver through files in ``workdir``.

    For each II it writes ``ii_<k>.cnf`` and ``ii_<k>.map``, then reads the
    solver's answer from ``ii_<k>.model`` if that file exists.
    """

    def __init__(self, workdir):
        self.workdir = Path(workdir)

    def __call__(self, problem: CnfProblem, budget: Optional[float] = None) -> SolveOutcome:
        start = time.monotonic()
        self.workdir.mkdir(parents=True, exist_ok=True)
        stem = self.workdir / f"ii_{problem.ii}"
        cnf, lits, answer = stem.with_suffix(".cnf"), stem.with_suffix(".map"), stem.with_suffix(".model")
        cnf.write_text(problem.to_dimacs())
        lits.write_text(problem.literal_map())
        if not answer.exists():
            raise ExternalModelPending(cnf, answer)
        text = answer.read_text()
        status, _ = parse_dimacs_model(text)
        if status != cdcl.SAT:
            return SolveOutcome(status, wall_time=time.monotonic() - start)
        model = checked_external_model(text, problem)
        return SolveOutcome(cdcl.SAT, model, wall_time=time.monotonic() - start)
