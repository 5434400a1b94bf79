"""CGRA array model: a rows x cols grid of PEs, row-major indexed."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

TOPOLOGIES = ("mesh", "torus")

SAME_PE = 1
NEIGHBOR = 2


class ArchError(ValueError):
    pass


@dataclass(frozen=True)
class CgraSpec:
    rows: int
    cols: int
    topology: str = "torus"
    registers_per_pe: int = 4

    def __post_init__(self):
        for name in ("rows", "cols", "registers_per_pe"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ArchError(f"{name} must be a positive integer, got {v!r}")
        if self.topology not in TOPOLOGIES:
            raise ArchError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")

    @property
    def num_pes(self) -> int:
        return self.rows * self.cols

    def coords(self, p: int) -> tuple:
        self.check_pe(p)
        return divmod(p, self.cols)

    def check_pe(self, p) -> None:
        if not isinstance(p, int) or isinstance(p, bool) or not 0 <= p < self.num_pes:
            raise ArchError(f"invalid PE {p!r} for a {self.rows}x{self.cols} array")

    @cached_property
    def adjacency(self) -> tuple:
        """Per PE, the frozenset of PEs it can read from (itself included)."""
        wrap = self.topology == "torus"
        out = []
        for p in range(self.num_pes):
            r, c = divmod(p, self.cols)
            nbrs = {p}
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if wrap:
                    rr %= self.rows
                    cc %= self.cols
                elif not (0 <= rr < self.rows and 0 <= cc < self.cols):
                    continue
                nbrs.add(rr * self.cols + cc)
            out.append(frozenset(nbrs))
        return tuple(out)

    def with_topology(self, topology: str) -> "CgraSpec":
        return CgraSpec(self.rows, self.cols, topology, self.registers_per_pe)


def neighbor_value(spec: CgraSpec, p1: int, p2: int) -> int:
    """1 for the same PE, 2 for distinct connected PEs, 0 otherwise."""
    spec.check_pe(p1)
    spec.check_pe(p2)
    if p1 == p2:
        return SAME_PE
    return NEIGHBOR if p2 in spec.adjacency[p1] else 0


def neighbors_of(spec: CgraSpec, p: int) -> frozenset:
    spec.check_pe(p)
    return spec.adjacency[p]


def arch_from_dict(obj) -> CgraSpec:
    if not isinstance(obj, dict):
        raise ArchError("arch description must be an object")
    extra = set(obj) - {"rows", "cols", "topology", "registers_per_pe"}
    if extra:
        raise ArchError(f"unknown keys {sorted(extra)}")
    try:
        return CgraSpec(
            obj["rows"],
            obj["cols"],
            obj.get("topology", "torus"),
            obj.get("registers_per_pe", 4),
        )
    except KeyError as exc:
        raise ArchError(f"missing key {exc}") from None


def load_arch(source) -> CgraSpec:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        obj = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ArchError(f"malformed JSON: {exc}") from None
    return arch_from_dict(obj)


def dump_arch(spec: CgraSpec) -> str:
    return json.dumps(
        {
            "rows": spec.rows,
            "cols": spec.cols,
            "topology": spec.topology,
            "registers_per_pe": spec.registers_per_pe,
        },
        sort_keys=True,
    )
