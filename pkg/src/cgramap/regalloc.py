"""Register allocation for a decoded mapping.

Only values consumed on their producer's PE after more than one kernel
cycle need a register-file slot; everything else is read straight from the
producer's output register, whose protection the encoding already enforces.
Liveness is cyclic with period II: a value produced in kernel cycle ``c``
and last read ``g`` cycles later occupies slots ``c+1 .. c+g`` (mod II).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .dfg import DataflowGraph
from .encode import effective_gap

REGISTER_FILE = "register_file"
OUTPUT_REGISTER = "output_register"


class LiveValue(NamedTuple):
    producer: int
    pe: int
    start: int
    length: int
    routed_through: str = REGISTER_FILE

    def slots(self, ii: int) -> frozenset:
        return frozenset((self.start + j) % ii for j in range(1, self.length + 1))


@dataclass
class InterferenceGraph:
    ii: int
    vertices: dict  # pe -> list of LiveValue
    edges: dict  # pe -> set of frozenset({producer_a, producer_b})

    def neighbors(self, pe: int, producer: int) -> set:
        out = set()
        for e in self.edges.get(pe, ()):
            if producer in e:
                out |= e - {producer}
        return out


def extract_live_values(g: DataflowGraph, m) -> list:
    where = m.by_node()
    longest = {}
    for e in g.edges:
        ps, pd = where.get(e.src), where.get(e.dst)
        if ps is None or pd is None or ps.pe != pd.pe:
            continue
        gap = effective_gap(ps.cycle, pd.cycle, m.ii)
        if gap == 1:
            continue
        key = (ps.pe, e.src)
        longest[key] = max(longest.get(key, 0), gap)
    return [
        LiveValue(n, pe, where[n].cycle, gap)
        for (pe, n), gap in sorted(longest.items())
    ]


def build_interference(values, ii: int) -> InterferenceGraph:
    vertices = {}
    for v in values:
        if v.routed_through == REGISTER_FILE:
            vertices.setdefault(v.pe, []).append(v)
    edges = {}
    for pe, vs in vertices.items():
        slots = [v.slots(ii) for v in vs]
        edges[pe] = {
            frozenset((vs[a].producer, vs[b].producer))
            for a in range(len(vs))
            for b in range(a + 1, len(vs))
            if slots[a] & slots[b]
        }
    return InterferenceGraph(ii, vertices, edges)


def _color_pe(producers: list, adj: dict, k: int) -> Optional[dict]:
    order = sorted(producers, key=lambda n: (-len(adj[n]), n))
    colors = {}

    def place(i, used):
        if i == len(order):
            return True
        n = order[i]
        taken = {colors[m] for m in adj[n] if m in colors}
        # a fresh color is interchangeable with any other unused one
        for c in range(min(k, used + 1)):
            if c in taken:
                continue
            colors[n] = c
            if place(i + 1, max(used, c + 1)):
                return True
            del colors[n]
        return False

    return dict(colors) if place(0, 0) else None


def color(graph: InterferenceGraph, k: int) -> Optional[dict]:
    """Exact k-coloring per PE: {pe: {producer: register}} or None."""
    if k < 1:
        raise ValueError("need at least one register")
    out = {}
    for pe in sorted(graph.vertices):
        producers = [v.producer for v in graph.vertices[pe]]
        adj = {n: graph.neighbors(pe, n) for n in producers}
        colors = _color_pe(producers, adj, k)
        if colors is None:
            return None
        out[pe] = colors
    return out


def allocate_registers(g: DataflowGraph, m, k: int) -> Optional[dict]:
    """Registers keyed by (pe, producer), or None when k per PE do not suffice."""
    values = extract_live_values(g, m)
    coloring = color(build_interference(values, m.ii), k)
    if coloring is None:
        return None
    return {(pe, n): r for pe, cs in coloring.items() for n, r in cs.items()}
