"""Shared builders for the test suite."""
import random
from pathlib import Path

from hypothesis import strategies as st

from cgramap.arch import CgraSpec, load_arch
from cgramap.dfg import DataflowGraph, DfgEdge, DfgNode, read_dfg

FIXTURES = Path(__file__).parent / "fixtures"
RUNNING_EXAMPLE = FIXTURES / "running_example.json"
ARCH_2X2 = FIXTURES / "arch_2x2.json"

# node -> (pe, cycle, iteration) of the worked solution at ii=3
REFERENCE_MODEL = {
    11: (1, 0, 0), 6: (2, 0, 0), 7: (3, 0, 0), 2: (0, 1, 0), 1: (1, 1, 1),
    8: (2, 1, 0), 3: (3, 1, 1), 9: (0, 2, 0), 10: (1, 2, 1), 4: (2, 2, 1), 5: (3, 2, 1),
}


def running_example() -> DataflowGraph:
    return read_dfg(RUNNING_EXAMPLE)


def arch_2x2() -> CgraSpec:
    return load_arch(ARCH_2X2.read_text())


def graph(n, edges) -> DataflowGraph:
    return DataflowGraph(
        tuple(DfgNode(i, "op") for i in range(n)),
        tuple(DfgEdge(*e) for e in edges),
    )


def random_graph(rng: random.Random, n_nodes=(3, 7), n_edges=(2, 9), max_back=2, max_distance=2):
    """Random legal loop graph: forward edges go from lower to higher id."""
    n = rng.randint(*n_nodes)
    target = rng.randint(*n_edges)
    n_back = rng.randint(0, min(max_back, target))
    edges = set()
    for _ in range(100 if n > 1 else 0):
        if len(edges) >= target - n_back:
            break
        a, b = sorted(rng.sample(range(n), 2))
        edges.add((a, b, 0))
    back = 0
    for _ in range(100):
        if back >= n_back:
            break
        a, b = rng.randrange(n), rng.randrange(n)
        e = (max(a, b), min(a, b), rng.randint(1, max_distance))
        if e not in edges:
            edges.add(e)
            back += 1
    return graph(n, sorted(edges))


@st.composite
def loop_graphs(draw, max_nodes=6, max_back=2, max_distance=2):
    n = draw(st.integers(1, max_nodes))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    forward = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=8)) if pairs else []
    back = draw(
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, max_distance)),
            max_size=max_back,
        )
    )
    edges = {(a, b, 0) for a, b in forward}
    edges |= {(max(a, b), min(a, b), d) for a, b, d in back}
    return graph(n, sorted(edges))


@st.composite
def specs(draw, max_side=2):
    return CgraSpec(
        draw(st.integers(1, max_side)),
        draw(st.integers(1, max_side)),
        draw(st.sampled_from(["mesh", "torus"])),
        draw(st.integers(1, 4)),
    )


HARD_30 = FIXTURES / "hard_30.json"
REGISTER_PRESSURE = FIXTURES / "register_pressure.json"
ARCH_1X2 = FIXTURES / "arch_1x2.json"


def register_pressure():
    """12 zero-slack nodes on a 1x2 array.

    At ii=6 every slot is busy, so each value read two or more cycles later
    stays on its producer's PE.  Folding stacks the live ranges of nodes
    0, 1, 2 (over step 3) onto those of 4, 6 (over step 9): five values in
    one slot.  Unfolded, at most four values are ever live together.
    """
    return read_dfg(REGISTER_PRESSURE), load_arch(ARCH_1X2.read_text())
