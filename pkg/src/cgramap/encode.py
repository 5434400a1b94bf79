"""CNF encoding of the modulo mapping problem at a fixed II.

One placement variable per (node, pe, kernel cycle, iteration label) drawn
from the kernel mobility schedule.  Three clause families:

* C1: every node takes exactly one placement.
* C2: no two nodes share a (pe, kernel cycle).
* C3: every edge is realised by a timing-legal pair of placements whose
  value can reach the consumer, either directly through the producer's
  output register or through the local register file.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import networkx as nx

from .arch import CgraSpec
from .dfg import DataflowGraph, DfgEdge
from .schedule import KernelMobilitySchedule, build_kms, mobility_schedule

AMO_ENCODINGS = ("pairwise", "sequential")

_KIND_RANK = {"C1-exact-one": 0, "C1-pair": 1, "C2": 2, "C3-edge": 3, "aux": 4}


class UnroutableEdge(Exception):
    """No candidate placement pair can carry the edge at this II."""

    def __init__(self, edge: DfgEdge, ii: int):
        super().__init__(f"unroutable edge {edge.src}->{edge.dst} (distance {edge.distance}) at ii={ii}")
        self.edge = edge
        self.ii = ii


class PlacementVar(NamedTuple):
    node: int
    pe: int
    cycle: int
    iter: int


class Tag(NamedTuple):
    kind: str
    src: int = -1
    dst: int = -1
    distance: int = -1

    def __str__(self):
        if self.kind == "C3-edge":
            return f"C3-edge({self.src},{self.dst})"
        return self.kind

    def rank(self) -> tuple:
        return (_KIND_RANK[self.kind], self.src, self.dst, self.distance)


C1_EXACT_ONE = Tag("C1-exact-one")
C1_PAIR = Tag("C1-pair")
C2_TAG = Tag("C2")
AUX = Tag("aux")


class VarTable:
    """Bidirectional map between placements and solver variable indices.

    Placement variables take indices 1..M in (node, cycle, label, pe) order;
    auxiliary variables follow from M+1.
    """

    def __init__(self, kms: KernelMobilitySchedule, spec: CgraSpec):
        self.kms = kms
        self.spec = spec
        self.ii = kms.ii
        self.placements = [None]
        self.index = {}
        self.by_node = defaultdict(list)
        self.by_slot = defaultdict(list)
        self.by_occ = {}
        for node, occs in kms.occurrences().items():
            for cycle, it in occs:
                row = []
                for pe in range(spec.num_pes):
                    pv = PlacementVar(node, pe, cycle, it)
                    var = len(self.placements)
                    self.placements.append(pv)
                    self.index[pv] = var
                    self.by_node[node].append(var)
                    self.by_slot[(pe, cycle)].append(var)
                    row.append(var)
                self.by_occ[(node, cycle, it)] = row
        self.num_placement = len(self.placements) - 1
        self.aux_defs = {}

    @property
    def num_vars(self) -> int:
        return self.num_placement + len(self.aux_defs)

    def new_aux(self, kind: str, lits) -> int:
        """Allocate an auxiliary variable defined as AND/OR over ``lits``."""
        var = self.num_vars + 1
        self.aux_defs[var] = (kind, tuple(lits))
        return var

    def literals_of(self, node: int) -> list:
        return [self.placements[v] for v in self.by_node[node]]

    def occurrences(self, node: int) -> list:
        return sorted(k[1:] for k in self.by_occ if k[0] == node)

    def is_placement(self, var: int) -> bool:
        return 1 <= var <= self.num_placement


def build_vars(kms: KernelMobilitySchedule, spec: CgraSpec) -> VarTable:
    return VarTable(kms, spec)


def _at_most_one(vt: VarTable, lits, tag, amo: str) -> list:
    if amo == "pairwise" or len(lits) <= 4:
        return [(tag, (-a, -b)) for a, b in combinations(lits, 2)]
    # Sinz sequential counter: s_i <-> some of lits[0..i] is true.
    out = []
    prefix = []
    s_prev = None
    for i, x in enumerate(lits):
        if i == len(lits) - 1:
            out.append((tag, (-x, -s_prev)))
            break
        prefix.append(x)
        s = vt.new_aux("or", prefix)
        out.append((tag, (-x, s)))
        if s_prev is not None:
            out.append((tag, (-s_prev, s)))
            out.append((tag, (-x, -s_prev)))
        s_prev = s
    return out


def emit_c1(vt: VarTable, amo: str = "pairwise") -> list:
    clauses = []
    for node in sorted(vt.by_node):
        lits = vt.by_node[node]
        clauses.append((C1_EXACT_ONE, tuple(lits)))
        clauses.extend(_at_most_one(vt, lits, C1_PAIR, amo))
    return clauses


def emit_c2(vt: VarTable, amo: str = "pairwise") -> list:
    clauses = []
    for key in sorted(vt.by_slot):
        lits = vt.by_slot[key]
        if amo == "pairwise":
            for a, b in combinations(lits, 2):
                if vt.placements[a].node != vt.placements[b].node:
                    clauses.append((C2_TAG, (-a, -b)))
        else:
            # Same-node pairs are already excluded by C1, so a plain AMO is equivalent.
            clauses.extend(_at_most_one(vt, lits, C2_TAG, amo))
    return clauses


def kms_distance(c_s: int, c_d: int, ii: int) -> int:
    return (c_d - c_s + ii) % ii


def effective_gap(c_s: int, c_d: int, ii: int) -> int:
    """Kernel cycles from production to consumption, in 1..ii."""
    return kms_distance(c_s, c_d, ii) or ii


def pairing_ok(c_s: int, it_s: int, c_d: int, it_d: int, distance: int) -> bool:
    """Timing relation between a producer and a consumer occurrence.

    A consumer ``distance`` iterations later must run after the producer and
    no more than one II after it, or the producer's next instance would
    overwrite the value.  In label terms this is ``distance + it_s - it_d``
    equal to 0 when ``c_d > c_s`` and to 1 when ``c_d <= c_s``.
    """
    rounds = distance + it_s - it_d
    return rounds == 0 if c_d > c_s else rounds == 1


def candidate_pairings(edge: DfgEdge, kms: KernelMobilitySchedule) -> list:
    occ = kms.occurrences()
    out = []
    for c_s, it_s in occ.get(edge.src, ()):
        for c_d, it_d in occ.get(edge.dst, ()):
            if pairing_ok(c_s, it_s, c_d, it_d, edge.distance):
                out.append(((c_s, it_s), (c_d, it_d)))
    return out


def edge_terms(edge: DfgEdge, pairings, vt: VarTable, spec: CgraSpec) -> list:
    """The conjunctive terms whose disjunction realises ``edge``.

    Each term is a sorted tuple of signed literals.
    """
    ii = vt.ii
    adjacency = spec.adjacency
    terms = []
    for (c_s, it_s), (c_d, it_d) in pairings:
        src = vt.by_occ[(edge.src, c_s, it_s)]
        dst = vt.by_occ[(edge.dst, c_d, it_d)]
        gap = effective_gap(c_s, c_d, ii)
        for p, v in enumerate(src):
            if gap == 1:
                for q in sorted(adjacency[p]):
                    terms.append((v, dst[q]))
                continue
            # register-file route: consumer on the producer's PE
            terms.append((v, dst[p]))
            # output-register route: producer's PE idle until consumption
            blocked = []
            for j in range(1, gap):
                blocked.extend(vt.by_slot[(p, (c_s + j) % ii)])
            for q in sorted(adjacency[p]):
                terms.append((v, dst[q]) + tuple(-z for z in blocked))
    return [tuple(sorted(set(t), key=abs)) for t in terms]


def emit_c3(edge: DfgEdge, pairings, vt: VarTable, spec: CgraSpec) -> list:
    terms = edge_terms(edge, pairings, vt, spec)
    if not terms:
        raise UnroutableEdge(edge, vt.ii)
    tag = Tag("C3-edge", edge.src, edge.dst, edge.distance)
    clauses = []
    selectors = []
    for term in dict.fromkeys(terms):
        if len(term) == 1:
            selectors.append(term[0])
            continue
        a = vt.new_aux("and", term)
        selectors.append(a)
        clauses.extend((AUX, (-a, lit)) for lit in term)
    clauses.append((tag, tuple(selectors)))
    return clauses


@dataclass
class CnfProblem:
    vartable: VarTable
    clauses: list = field(default_factory=list)
    tags: list = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return self.vartable.num_vars

    @property
    def ii(self) -> int:
        return self.vartable.ii

    def extend(self, tagged) -> None:
        for tag, clause in tagged:
            self.tags.append(tag)
            self.clauses.append(clause)

    def first_violation(self, model):
        """Index of the first clause ``model`` falsifies, or None."""
        for k, clause in enumerate(self.clauses):
            if not any(model[abs(l)] == (l > 0) for l in clause):
                return k
        return None

    def complete_model(self, true_vars) -> list:
        """Full assignment from a set of true placement variables.

        Auxiliary variables take the value of their defining AND/OR.
        """
        vt = self.vartable
        model = [False] * (self.num_vars + 1)
        for v in true_vars:
            if not vt.is_placement(v):
                raise ValueError(f"{v} is not a placement variable")
            model[v] = True
        for a in sorted(vt.aux_defs):
            kind, lits = vt.aux_defs[a]
            vals = [model[abs(l)] == (l > 0) for l in lits]
            model[a] = all(vals) if kind == "and" else any(vals)
        return model

    def sorted_clauses(self) -> list:
        def key(item):
            tag, clause = item
            return tag.rank(), sorted(clause, key=lambda l: (abs(l), l < 0))

        return [
            tuple(sorted(c, key=lambda l: (abs(l), l < 0)))
            for _, c in sorted(zip(self.tags, self.clauses), key=key)
        ]

    def to_dimacs(self) -> str:
        body = self.sorted_clauses()
        lines = [f"p cnf {self.num_vars} {len(body)}"]
        lines.extend(" ".join(map(str, c)) + " 0" for c in body)
        return "\n".join(lines) + "\n"

    def literal_map(self) -> str:
        vt = self.vartable
        return "".join(
            f"{v} {p.node} {p.pe} {p.cycle} {p.iter}\n"
            for v, p in enumerate(vt.placements)
            if v
        )

    def tag_counts(self) -> dict:
        counts = defaultdict(int)
        for t in self.tags:
            counts[t.kind] += 1
        return dict(counts)


def slots_suffice(vt: VarTable) -> bool:
    """Whether every node can get its own (pe, cycle) slot, ignoring edges.

    Nodes compete for kernel cycles, each holding one node per PE.  When no
    such assignment exists C1 and C2 alone are unsatisfiable; CDCL refutes
    these pigeonhole patterns only with exponential effort, a max-flow check
    settles them at once.
    """
    cycles = defaultdict(set)
    for node, cycle, _ in vt.by_occ:
        cycles[node].add(cycle)
    flow = nx.DiGraph()
    for node, cs in cycles.items():
        flow.add_edge("source", ("node", node), capacity=1)
        for c in cs:
            flow.add_edge(("node", node), ("cycle", c), capacity=1)
    for c in range(vt.ii):
        flow.add_edge(("cycle", c), "sink", capacity=vt.spec.num_pes)
    return nx.maximum_flow_value(flow, "source", "sink") == len(cycles)


def build_problem(
    g: DataflowGraph, spec: CgraSpec, ii: int, amo: str = "pairwise"
) -> CnfProblem:
    """Encode mapping ``g`` onto ``spec`` at initiation interval ``ii``.

    Raises UnroutableEdge when some edge admits no legal placement pair,
    which proves the instance infeasible at this II.
    """
    if amo not in AMO_ENCODINGS:
        raise ValueError(f"unknown at-most-one encoding {amo!r}")
    kms = build_kms(mobility_schedule(g), ii)
    vt = build_vars(kms, spec)
    problem = CnfProblem(vt)
    problem.extend(emit_c1(vt, amo))
    problem.extend(emit_c2(vt, amo))
    for edge in sorted(g.edges):
        problem.extend(emit_c3(edge, candidate_pairings(edge, kms), vt, spec))
    return problem
