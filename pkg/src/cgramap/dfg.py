"""Dataflow graph of a loop body.

Edges carry an iteration ``distance``: 0 for an ordinary data dependency,
``d >= 1`` for a loop-carried value consumed ``d`` iterations later.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Optional


class DfgError(ValueError):
    pass


class DfgParseError(DfgError):
    pass


class DfgValidationError(DfgError):
    pass


@dataclass(frozen=True, order=True)
class DfgNode:
    id: int
    op: str


@dataclass(frozen=True, order=True)
class DfgEdge:
    src: int
    dst: int
    distance: int = 0

    @property
    def is_back_edge(self) -> bool:
        return self.distance > 0


@dataclass(frozen=True)
class DataflowGraph:
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        try:
            nodes = tuple(sorted(self.nodes))
        except TypeError:  # mixed id types; check_graph rejects these
            nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(self.edges))

    def __len__(self):
        return len(self.nodes)

    @property
    def node_ids(self) -> list:
        return [n.id for n in self.nodes]

    def forward_edges(self) -> list:
        return [e for e in self.edges if e.distance == 0]

    def back_edges(self) -> list:
        return [e for e in self.edges if e.distance > 0]

    def forward_preds(self) -> dict:
        preds = {n: set() for n in self.node_ids}
        for e in self.forward_edges():
            preds[e.dst].add(e.src)
        return preds

    def forward_succs(self) -> dict:
        succs = {n: set() for n in self.node_ids}
        for e in self.forward_edges():
            succs[e.src].add(e.dst)
        return succs


def topological_order(g: DataflowGraph) -> Optional[list]:
    """Kahn order of the distance-0 subgraph, smallest id first; None if cyclic."""
    indeg = {n: 0 for n in g.node_ids}
    succs = g.forward_succs()
    for e in g.forward_edges():
        indeg[e.dst] += 1
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for m in sorted(succs[n]):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
        ready.sort()
    return order if len(order) == len(indeg) else None


def validate_dag(g: DataflowGraph) -> Optional[list]:
    """Return None when the distance-0 subgraph is acyclic, else one cycle.

    The cycle is reported as the list of node ids along it, starting from
    its smallest member.
    """
    if topological_order(g) is not None:
        return None
    succs = {n: sorted(s) for n, s in g.forward_succs().items()}
    color = dict.fromkeys(succs, 0)
    stack_pos = {}
    path = []

    def dfs(n):
        color[n] = 1
        stack_pos[n] = len(path)
        path.append(n)
        for m in succs[n]:
            if color[m] == 1:
                return path[stack_pos[m]:]
            if color[m] == 0:
                found = dfs(m)
                if found:
                    return found
        path.pop()
        color[n] = 2
        return None

    for n in sorted(succs):
        if color[n] == 0:
            cycle = dfs(n)
            if cycle:
                k = cycle.index(min(cycle))
                return cycle[k:] + cycle[:k]
    raise AssertionError("topological sort failed but no cycle found")


def check_graph(g: DataflowGraph) -> None:
    """Raise DfgValidationError naming the first violated invariant."""
    if not g.nodes:
        raise DfgValidationError("graph has no nodes")
    seen = set()
    for n in g.nodes:
        if not isinstance(n.id, int) or isinstance(n.id, bool) or n.id < 0:
            raise DfgValidationError(f"node id must be a non-negative integer: {n.id!r}")
        if n.id in seen:
            raise DfgValidationError(f"duplicate node id {n.id}")
        if not isinstance(n.op, str) or not n.op:
            raise DfgValidationError(f"node {n.id}: empty opcode")
        seen.add(n.id)
    triples = set()
    for e in g.edges:
        for field in ("src", "dst", "distance"):
            v = getattr(e, field)
            if not isinstance(v, int) or isinstance(v, bool):
                raise DfgValidationError(f"edge {e}: {field} must be an integer")
        if e.src not in seen or e.dst not in seen:
            raise DfgValidationError(f"edge {e.src}->{e.dst}: unknown node id")
        if e.distance < 0:
            raise DfgValidationError(f"edge {e.src}->{e.dst}: negative distance")
        if e.src == e.dst and e.distance == 0:
            raise DfgValidationError(f"edge {e.src}->{e.dst}: self-loop with distance 0")
        key = (e.src, e.dst, e.distance)
        if key in triples:
            raise DfgValidationError(f"duplicate edge {key}")
        triples.add(key)
    cycle = validate_dag(g)
    if cycle is not None:
        raise DfgValidationError(f"distance-0 cycle through nodes {cycle}")


def make_graph(nodes: Iterable, edges: Iterable = ()) -> DataflowGraph:
    """Build and validate a graph from plain tuples.

    ``nodes`` holds ids or ``(id, op)`` pairs; ``edges`` holds ``(src, dst)``
    or ``(src, dst, distance)``.
    """
    ns = []
    for n in nodes:
        ns.append(DfgNode(*n) if isinstance(n, tuple) else DfgNode(n, "op"))
    es = [DfgEdge(*e) for e in edges]
    g = DataflowGraph(tuple(ns), tuple(es))
    check_graph(g)
    return g


_NODE_KEYS = {"id", "op"}
_EDGE_KEYS = {"src", "dst", "distance"}


def graph_from_dict(obj) -> DataflowGraph:
    if not isinstance(obj, dict):
        raise DfgParseError("top level must be an object")
    extra = set(obj) - {"nodes", "edges"}
    if extra:
        raise DfgParseError(f"unknown keys {sorted(extra)}")
    if "nodes" not in obj:
        raise DfgParseError("missing 'nodes'")
    nodes, edges = [], []
    for raw in obj["nodes"]:
        if not isinstance(raw, dict):
            raise DfgParseError(f"node entry must be an object: {raw!r}")
        if set(raw) - _NODE_KEYS or "id" not in raw or "op" not in raw:
            raise DfgParseError(f"node entry needs exactly keys id, op: {raw!r}")
        nodes.append(DfgNode(raw["id"], raw["op"]))
    for raw in obj.get("edges", []):
        if not isinstance(raw, dict):
            raise DfgParseError(f"edge entry must be an object: {raw!r}")
        if set(raw) - _EDGE_KEYS or "src" not in raw or "dst" not in raw:
            raise DfgParseError(f"edge entry needs keys src, dst[, distance]: {raw!r}")
        edges.append(DfgEdge(raw["src"], raw["dst"], raw.get("distance", 0)))
    g = DataflowGraph(tuple(nodes), tuple(edges))
    check_graph(g)
    return g


def load_dfg(source) -> DataflowGraph:
    """Parse and validate a graph from JSON text, bytes or a readable stream."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        obj = json.loads(source)
    except json.JSONDecodeError as exc:
        raise DfgParseError(f"malformed JSON: {exc}") from None
    return graph_from_dict(obj)


def graph_to_dict(g: DataflowGraph) -> dict:
    return {
        "nodes": [{"id": n.id, "op": n.op} for n in g.nodes],
        "edges": [
            {"src": e.src, "dst": e.dst, "distance": e.distance}
            for e in sorted(g.edges)
        ],
    }


def dump_dfg(g: DataflowGraph) -> str:
    """Canonical JSON form: nodes by id, edges sorted by (src, dst, distance)."""
    return json.dumps(graph_to_dict(g), sort_keys=True)


def read_dfg(path) -> DataflowGraph:
    with io.open(path, "rb") as fh:
        return load_dfg(fh)

