"""ASAP/ALAP/mobility schedules, the II lower bound, and the kernel fold.

The kernel mobility schedule (KMS) folds the mobility schedule modulo II.
Row ``t`` of a ``T``-row schedule lands in kernel cycle
``(t + offset) % ii`` with iteration label ``(T - 1 - t) // ii``, where
``offset = K * ii - T`` and ``K = ceil(T / ii)``: the last row sits in
kernel cycle ``ii - 1`` with label 0 and labels grow towards the first
rows, i.e. towards the iterations that entered the pipeline last.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import networkx as nx

from .arch import CgraSpec
from .dfg import DataflowGraph, DfgValidationError, topological_order, validate_dag


@dataclass(frozen=True)
class LevelSchedule:
    rows: tuple  # rows[t] is a frozenset of node ids

    @classmethod
    def from_times(cls, times: dict, length: int) -> "LevelSchedule":
        rows = [set() for _ in range(length)]
        for n, t in times.items():
            rows[t].add(n)
        return cls(tuple(frozenset(r) for r in rows))

    @property
    def length(self) -> int:
        return len(self.rows)

    def times(self) -> dict:
        return {n: t for t, row in enumerate(self.rows) for n in row}


@dataclass(frozen=True)
class MobilitySchedule:
    rows: tuple
    windows: dict  # node -> (asap, alap)

    @property
    def length(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class MiiReport:
    res_ii: int
    rec_ii: int
    mii: int


def _require_dag(g: DataflowGraph) -> list:
    order = topological_order(g)
    if order is None:
        raise DfgValidationError(f"distance-0 cycle through nodes {validate_dag(g)}")
    return order


def asap(g: DataflowGraph) -> LevelSchedule:
    order = _require_dag(g)
    preds = g.forward_preds()
    t = {}
    for n in order:
        t[n] = 1 + max((t[p] for p in preds[n]), default=-1)
    return LevelSchedule.from_times(t, max(t.values()) + 1)


def alap(g: DataflowGraph, length: int) -> LevelSchedule:
    order = _require_dag(g)
    succs = g.forward_succs()
    t = {}
    for n in reversed(order):
        t[n] = min((t[s] for s in succs[n]), default=length) - 1
        if t[n] < 0:
            raise ValueError(f"schedule length {length} is shorter than the critical path")
    return LevelSchedule.from_times(t, length)


def mobility(early: LevelSchedule, late: LevelSchedule) -> MobilitySchedule:
    if early.length != late.length:
        raise ValueError("ASAP and ALAP schedules differ in length")
    lo, hi = early.times(), late.times()
    if set(lo) != set(hi):
        raise ValueError("ASAP and ALAP schedules cover different nodes")
    rows = [set() for _ in range(early.length)]
    for n in lo:
        for t in range(lo[n], hi[n] + 1):
            rows[t].add(n)
    windows = {n: (lo[n], hi[n]) for n in sorted(lo)}
    return MobilitySchedule(tuple(frozenset(r) for r in rows), windows)


def mobility_schedule(g: DataflowGraph) -> MobilitySchedule:
    early = asap(g)
    return mobility(early, alap(g, early.length))


def recurrence_ii(g: DataflowGraph) -> int:
    # Parallel edges collapse to their smallest distance: it maximises the ratio.
    dist = {}
    for e in g.edges:
        key = (e.src, e.dst)
        dist[key] = min(dist.get(key, e.distance), e.distance)
    digraph = nx.DiGraph()
    digraph.add_nodes_from(g.node_ids)
    digraph.add_edges_from(dist)
    best = 0
    for cycle in nx.simple_cycles(digraph):
        hops = list(zip(cycle, cycle[1:] + cycle[:1]))
        total = sum(dist[h] for h in hops)
        if total == 0:
            raise DfgValidationError(f"cycle {cycle} carries no loop distance")
        best = max(best, ceil(len(hops) / total))
    return best


def compute_mii(g: DataflowGraph, spec: CgraSpec) -> MiiReport:
    res = ceil(len(g) / spec.num_pes)
    rec = recurrence_ii(g)
    return MiiReport(res, rec, max(res, rec, 1))


@dataclass(frozen=True)
class KernelMobilitySchedule:
    ii: int
    length: int  # rows of the folded mobility schedule (T)
    slots: tuple  # slots[c] is a frozenset of (node, iteration label)

    @property
    def fold_count(self) -> int:
        return ceil(self.length / self.ii)

    @property
    def offset(self) -> int:
        return self.fold_count * self.ii - self.length

    def fold(self, t: int) -> tuple:
        return (t + self.offset) % self.ii, (self.length - 1 - t) // self.ii

    def unfold(self, cycle: int, it: int) -> int:
        return cycle - self.offset + self.ii * (self.fold_count - 1 - it)

    def occurrences(self) -> dict:
        """node -> sorted list of (cycle, label) at which it may execute."""
        occ = {}
        for c, slot in enumerate(self.slots):
            for n, it in slot:
                occ.setdefault(n, []).append((c, it))
        return {n: sorted(v) for n, v in sorted(occ.items())}

    def __contains__(self, item) -> bool:
        node, cycle, it = item
        return 0 <= cycle < self.ii and (node, it) in self.slots[cycle]


def build_kms(ms: MobilitySchedule, ii: int) -> KernelMobilitySchedule:
    if ii < 1:
        raise ValueError("ii must be positive")
    empty = KernelMobilitySchedule(ii, ms.length, ())
    slots = [set() for _ in range(ii)]
    for t, row in enumerate(ms.rows):
        c, it = empty.fold(t)
        slots[c].update((n, it) for n in row)
    return KernelMobilitySchedule(ii, ms.length, tuple(frozenset(s) for s in slots))


def format_tables(ms_early: LevelSchedule, ms_late: LevelSchedule, ms: MobilitySchedule) -> str:
    def cell(row):
        return " ".join(str(n) for n in sorted(row))

    lines = ["Time | ASAP | ALAP | MS"]
    for t in range(ms.length):
        lines.append(
            f"{t} | {cell(ms_early.rows[t])} | {cell(ms_late.rows[t])} | {cell(ms.rows[t])}"
        )
    return "\n".join(lines)


def format_kms(kms: KernelMobilitySchedule) -> str:
    lines = [f"KMS ii={kms.ii} folds={kms.fold_count}"]
    for c, slot in enumerate(kms.slots):
        groups = []
        for it in sorted({it for _, it in slot}):
            groups.append(" ".join(f"{n}_{it}" for n in sorted(n for n, i in slot if i == it)))
        lines.append(f"{c} | " + " | ".join(groups))
    return "\n".join(lines)
