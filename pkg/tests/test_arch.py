import pytest
from hypothesis import given, strategies as st

from cgramap.arch import (
    NEIGHBOR,
    SAME_PE,
    ArchError,
    CgraSpec,
    dump_arch,
    load_arch,
    neighbor_value,
    neighbors_of,
)


def test_2x2_torus_adjacency(spec2x2):
    assert spec2x2.adjacency == (
        frozenset({0, 1, 2}),
        frozenset({0, 1, 3}),
        frozenset({0, 2, 3}),
        frozenset({1, 2, 3}),
    )
    # on a 2x2 array wrapping adds nothing
    assert spec2x2.with_topology("mesh").adjacency == spec2x2.adjacency


def test_3x3_mesh_and_torus_differ():
    mesh = CgraSpec(3, 3, "mesh")
    torus = CgraSpec(3, 3, "torus")
    assert neighbors_of(mesh, 0) == {0, 1, 3}
    assert neighbors_of(torus, 0) == {0, 1, 2, 3, 6}
    assert neighbors_of(mesh, 4) == neighbors_of(torus, 4) == {1, 3, 4, 5, 7}


def test_neighbor_values(spec2x2):
    assert neighbor_value(spec2x2, 1, 1) == SAME_PE
    assert neighbor_value(spec2x2, 0, 1) == NEIGHBOR
    assert neighbor_value(spec2x2, 0, 3) == 0
    with pytest.raises(ArchError):
        neighbor_value(spec2x2, 0, 4)


def test_single_pe():
    assert CgraSpec(1, 1).adjacency == (frozenset({0}),)


@pytest.mark.parametrize(
    "kwargs",
    [dict(rows=0, cols=2), dict(rows=2, cols=2, topology="ring"), dict(rows=2, cols=2, registers_per_pe=0),
     dict(rows=True, cols=2)],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ArchError):
        CgraSpec(**kwargs)


def test_load_errors():
    for text in ("nope", "[]", '{"rows": 2}', '{"rows": 2, "cols": 2, "color": "red"}'):
        with pytest.raises(ArchError):
            load_arch(text)


def test_defaults_and_round_trip():
    spec = load_arch('{"rows": 3, "cols": 2}')
    assert (spec.topology, spec.registers_per_pe) == ("torus", 4)
    assert load_arch(dump_arch(spec)) == spec


def _grid_oracle(spec, p, q):
    (r1, c1), (r2, c2) = spec.coords(p), spec.coords(q)
    dr, dc = abs(r1 - r2), abs(c1 - c2)
    if spec.topology == "torus":
        dr, dc = min(dr, spec.rows - dr), min(dc, spec.cols - dc)
    return dr + dc <= 1


@given(st.integers(1, 5), st.integers(1, 5), st.sampled_from(["mesh", "torus"]))
def test_adjacency_matches_grid_distance(rows, cols, topology):
    spec = CgraSpec(rows, cols, topology)
    for p in range(spec.num_pes):
        assert p in spec.adjacency[p]
        for q in range(spec.num_pes):
            assert (q in spec.adjacency[p]) == _grid_oracle(spec, p, q)
            assert (q in spec.adjacency[p]) == (p in spec.adjacency[q])
