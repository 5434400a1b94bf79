"""Independent mapping validator and a brute-force mapping oracle.

Nothing here looks at clauses: legality is checked directly on the
placements, using each node's schedule time recovered from its kernel
cycle and iteration label.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import ceil
from typing import Optional

from .arch import CgraSpec
from .dfg import DataflowGraph, topological_order
from .regalloc import allocate_registers, build_interference, extract_live_values
from .schedule import alap, asap, compute_mii
from .solve import Mapping, Placement

VIOLATION_KINDS = (
    "unplaced_node",
    "duplicate_placement",
    "kms_violation",
    "pe_conflict",
    "bad_timing_relation",
    "non_neighbor_route",
    "output_register_clobbered",
    "register_overflow",
)

ORACLE_NODE_LIMIT = 8


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


def _windows(g: DataflowGraph):
    early = asap(g)
    late = alap(g, early.length)
    lo, hi = early.times(), late.times()
    return {n: (lo[n], hi[n]) for n in lo}, early.length


def _schedule_time(cycle: int, it: int, ii: int, length: int) -> Optional[int]:
    """Row of the mobility schedule that (cycle, label) unfolds to, or None."""
    folds = ceil(length / ii)
    if not 0 <= it < folds:
        return None
    return cycle - (folds * ii - length) + ii * (folds - 1 - it)


def _route_problem(spec, ii, ps, pd, distance, t_s, t_d, occupied):
    """Violation kind for one edge's placements, or None if legal."""
    lifetime = distance * ii + t_d - t_s
    if not 0 < lifetime <= ii:
        return "bad_timing_relation", f"value lives {lifetime} cycles at ii={ii}"
    if pd.pe not in spec.adjacency[ps.pe]:
        return "non_neighbor_route", f"pe {ps.pe} cannot reach pe {pd.pe}"
    if lifetime == 1 or ps.pe == pd.pe:
        return None
    for j in range(1, lifetime):
        slot = (ps.cycle + j) % ii
        other = occupied.get((ps.pe, slot))
        if other is not None:
            return (
                "output_register_clobbered",
                f"node {other} runs on pe {ps.pe} at cycle {slot} before the value is read",
            )
    return None


def validate(g: DataflowGraph, spec: CgraSpec, m: Mapping) -> list:
    """All violations of ``m``; an empty list means the mapping is legal."""
    ii = m.ii
    if not isinstance(ii, int) or ii < 1:
        return [Violation("kms_violation", f"ii must be a positive integer, got {ii!r}")]
    out = []
    windows, length = _windows(g)
    where = {}
    for p in m.placements:
        if p.node not in windows:
            out.append(Violation("kms_violation", f"node {p.node} is not in the graph"))
        elif p.node in where:
            out.append(Violation("duplicate_placement", f"node {p.node} placed more than once"))
        else:
            where[p.node] = p
    for n in sorted(set(windows) - set(where)):
        out.append(Violation("unplaced_node", f"node {n} has no placement"))

    times = {}
    occupied = {}
    for n, p in sorted(where.items()):
        if not 0 <= p.pe < spec.num_pes:
            out.append(Violation("pe_conflict", f"node {n} on nonexistent pe {p.pe}"))
            continue
        if not 0 <= p.cycle < ii:
            out.append(Violation("kms_violation", f"node {n} at cycle {p.cycle} outside 0..{ii - 1}"))
            continue
        t = _schedule_time(p.cycle, p.iter, ii, length)
        lo, hi = windows[n]
        if t is None or not lo <= t <= hi:
            out.append(Violation(
                "kms_violation",
                f"node {n} at (cycle {p.cycle}, iter {p.iter}) is outside its window {lo}..{hi}",
            ))
            continue
        times[n] = t
        other = occupied.setdefault((p.pe, p.cycle), n)
        if other != n:
            out.append(Violation("pe_conflict", f"nodes {other} and {n} share pe {p.pe} at cycle {p.cycle}"))

    for e in sorted(g.edges):
        if e.src not in times or e.dst not in times:
            continue
        bad = _route_problem(
            spec, ii, where[e.src], where[e.dst], e.distance, times[e.src], times[e.dst], occupied
        )
        if bad:
            out.append(Violation(bad[0], f"edge {e.src}->{e.dst} (distance {e.distance}): {bad[1]}"))

    if not out:
        out.extend(_register_violations(g, spec, m))
    return out


def _register_violations(g, spec, m) -> list:
    k = spec.registers_per_pe
    if allocate_registers(g, m, k) is None:
        return [Violation("register_overflow", f"live values need more than {k} registers on some pe")]
    if not m.registers:
        return []
    values = extract_live_values(g, m)
    graph = build_interference(values, m.ii)
    out = []
    for v in values:
        r = m.registers.get((v.pe, v.producer))
        if r is None or not 0 <= r < k:
            out.append(Violation("register_overflow", f"value of node {v.producer} on pe {v.pe} has no valid register"))
    for pe, edges in graph.edges.items():
        for pair in edges:
            a, b = sorted(pair)
            if m.registers.get((pe, a)) is not None and m.registers.get((pe, a)) == m.registers.get((pe, b)):
                out.append(Violation("register_overflow", f"values of nodes {a} and {b} share a register on pe {pe}"))
    return out


def brute_force_at(
    g: DataflowGraph, spec: CgraSpec, ii: int, check_registers: bool = True
) -> Optional[Mapping]:
    """First legal mapping at ``ii`` in enumeration order, or None."""
    windows, length = _windows(g)
    folds = ceil(length / ii)
    offset = folds * ii - length
    order = topological_order(g)
    candidates = {}
    for n in order:
        lo, hi = windows[n]
        slots = [((t + offset) % ii, (length - 1 - t) // ii, t) for t in range(lo, hi + 1)]
        candidates[n] = [(pe, c, it, t) for pe in range(spec.num_pes) for c, it, t in slots]
    rank = {n: i for i, n in enumerate(order)}
    # edges become checkable once their later endpoint (in order) is placed
    closing = {n: [] for n in order}
    for e in g.edges:
        closing[order[max(rank[e.src], rank[e.dst])]].append(e)

    placed = {}
    times = {}
    occupied = {}
    protected = Counter()

    def extend(i):
        if i == len(order):
            m = Mapping(ii, placed.values())
            problems = validate(g, spec, m)
            if not check_registers:
                problems = [v for v in problems if v.kind != "register_overflow"]
            return m if not problems else None
        n = order[i]
        for pe, c, it, t in candidates[n]:
            if (pe, c) in occupied or protected[(pe, c)]:
                continue
            p = Placement(n, pe, c, it)
            placed[n], times[n], occupied[(pe, c)] = p, t, n
            guards = []
            ok = True
            for e in closing[n]:
                ps, pd = placed[e.src], placed[e.dst]
                if _route_problem(spec, ii, ps, pd, e.distance, times[e.src], times[e.dst], occupied):
                    ok = False
                    break
                lifetime = e.distance * ii + times[e.dst] - times[e.src]
                if lifetime > 1 and ps.pe != pd.pe:
                    guards.extend((ps.pe, (ps.cycle + j) % ii) for j in range(1, lifetime))
            if ok:
                protected.update(guards)
                found = extend(i + 1)
                if found is not None:
                    return found
                protected.subtract(guards)
            del placed[n], times[n], occupied[(pe, c)]
        return None

    return extend(0)


def brute_force_min_ii(
    g: DataflowGraph,
    spec: CgraSpec,
    ii_max: int,
    allow_large: bool = False,
    check_registers: bool = True,
):
    """Smallest II with a legal mapping as ``(ii, mapping)``, or None up to ``ii_max``."""
    if len(g) > ORACLE_NODE_LIMIT and not allow_large:
        raise OracleSizeError(
            f"{len(g)} nodes exceeds the exhaustive-search limit of {ORACLE_NODE_LIMIT}"
        )
    for ii in range(compute_mii(g, spec).mii, ii_max + 1):
        m = brute_force_at(g, spec, ii, check_registers)
        if m is not None:
            return ii, m
    return None
