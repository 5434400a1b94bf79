"""The II search loop, reporting metrics and stage expansion."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from . import cdcl
from .arch import CgraSpec
from .dfg import DataflowGraph
from .encode import UnroutableEdge, build_problem, slots_suffice
from .regalloc import allocate_registers
from .schedule import KernelMobilitySchedule, compute_mii
from .solve import Mapping, decode, solve
from .verify import validate

log = logging.getLogger("cgramap.driver")

MAPPED = "mapped"
EXHAUSTED_II = "exhausted_ii"
TIMED_OUT = "timed_out"

RA_FAIL = "ra_fail"


@dataclass(frozen=True)
class SearchConfig:
    max_ii: int = 50
    per_ii_budget: Optional[float] = None
    global_budget: Optional[float] = 4000.0
    amo: str = "pairwise"

    def __post_init__(self):
        if self.max_ii < 1:
            raise ValueError("max_ii must be positive")
        for name in ("per_ii_budget", "global_budget"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class IIRecord:
    ii: int
    status: str  # sat | unsat | timeout | ra_fail
    wall_time: float
    num_vars: int
    num_clauses: int

    def log_line(self) -> str:
        return (
            f"II={self.ii} status={self.status} time={self.wall_time:.3f} "
            f"vars={self.num_vars} clauses={self.num_clauses}"
        )


@dataclass
class MapResult:
    outcome: str
    mii: int
    mapping: Optional[Mapping] = None
    trace: list = field(default_factory=list)

    @property
    def ii(self) -> Optional[int]:
        return self.mapping.ii if self.mapping else None

    def statuses(self) -> dict:
        return {r.ii: r.status for r in self.trace}


def _record(result: MapResult, rec: IIRecord) -> None:
    result.trace.append(rec)
    log.info(rec.log_line())


def map_loop(
    g: DataflowGraph, spec: CgraSpec, cfg: Optional[SearchConfig] = None, solver=solve
) -> MapResult:
    """Map ``g`` at the smallest II that is satisfiable and register-allocatable.

    UNSAT, a coloring failure and a per-II timeout all move on to the next
    II; running out of the global budget stops the search.  ``solver`` takes
    ``(problem, budget)`` and returns a SolveOutcome.
    """
    cfg = cfg or SearchConfig()
    start = time.monotonic()
    deadline = None if cfg.global_budget is None else start + cfg.global_budget
    mii = compute_mii(g, spec).mii
    result = MapResult(EXHAUSTED_II, mii)
    for ii in range(mii, cfg.max_ii + 1):
        t0 = time.monotonic()
        if deadline is not None and t0 >= deadline:
            result.outcome = TIMED_OUT
            return result
        try:
            problem = build_problem(g, spec, ii, cfg.amo)
        except UnroutableEdge:
            _record(result, IIRecord(ii, cdcl.UNSAT, time.monotonic() - t0, 0, 0))
            continue
        size = (problem.num_vars, len(problem.clauses))
        if not slots_suffice(problem.vartable):
            _record(result, IIRecord(ii, cdcl.UNSAT, time.monotonic() - t0, *size))
            continue
        budget = cfg.per_ii_budget
        if deadline is not None:
            left = max(deadline - time.monotonic(), 0.0)
            budget = left if budget is None else min(budget, left)
        outcome = solver(problem, budget)
        if outcome.status == cdcl.TIMEOUT:
            _record(result, IIRecord(ii, cdcl.TIMEOUT, time.monotonic() - t0, *size))
            if deadline is not None and time.monotonic() >= deadline:
                result.outcome = TIMED_OUT
                return result
            continue
        if outcome.status == cdcl.UNSAT:
            _record(result, IIRecord(ii, cdcl.UNSAT, time.monotonic() - t0, *size))
            continue
        mapping = decode(outcome.model, problem.vartable)
        registers = allocate_registers(g, mapping, spec.registers_per_pe)
        if registers is None:
            _record(result, IIRecord(ii, RA_FAIL, time.monotonic() - t0, *size))
            continue
        mapping.registers = registers
        problems = validate(g, spec, mapping)
        if problems:
            raise AssertionError(f"encoder produced an illegal mapping at ii={ii}: {problems[0]}")
        _record(result, IIRecord(ii, cdcl.SAT, time.monotonic() - t0, *size))
        result.outcome = MAPPED
        result.mapping = mapping
        return result
    return result


def utilization(m: Mapping, spec: CgraSpec) -> float:
    """Fraction of busy PE slots in the kernel."""
    return len({p.node for p in m.placements}) / (m.ii * spec.num_pes)


@dataclass
class StagedSchedule:
    prologue: list
    kernel: list
    epilogue: list

    def rows(self) -> list:
        return self.prologue + self.kernel + self.epilogue

    def operation_count(self) -> int:
        return sum(len(r) for r in self.rows())


def expand_stages(m: Mapping, kms: KernelMobilitySchedule) -> StagedSchedule:
    """Unroll the kernel into prologue, steady state and epilogue.

    Iterations 0..K-1 are started one II apart, enough to fill every kernel
    slot once.  Row entries are ``(node, pe, iteration)``.  Kernel row ``c``
    is exactly the mapping's cycle ``c``.
    """
    if m.ii != kms.ii:
        raise ValueError(f"mapping ii={m.ii} does not match schedule ii={kms.ii}")
    ii, folds = kms.ii, kms.fold_count
    kernel_start = kms.length - ii
    horizon = (folds - 1) * ii + kms.length
    timeline = {}
    for p in m.placements:
        t = kms.unfold(p.cycle, p.iter)
        for i in range(folds):
            timeline.setdefault(i * ii + t, []).append((p.node, p.pe, i))

    def rows(lo, hi):
        return [sorted(timeline.get(tau, ())) for tau in range(lo, hi)]

    return StagedSchedule(
        prologue=rows(0, max(kernel_start, 0)),
        kernel=rows(kernel_start, kernel_start + ii),
        epilogue=rows(kernel_start + ii, horizon),
    )
