"""End-to-end acceptance checks, one test per criterion.

The terminal summary lists a PASS/FAIL line for each criterion.
"""
import itertools
import os
import random
import subprocess
import sys
import time

import pytest

from cgramap.arch import CgraSpec
from cgramap.dfg import read_dfg
from cgramap.driver import EXHAUSTED_II, MAPPED, TIMED_OUT, SearchConfig, map_loop, utilization
from cgramap.encode import UnroutableEdge, build_problem
from cgramap.regalloc import build_interference, extract_live_values
from cgramap.schedule import (
    alap,
    asap,
    build_kms,
    compute_mii,
    format_kms,
    format_tables,
    mobility,
    mobility_schedule,
)
from cgramap.solve import Mapping, Placement, decode, solve
from cgramap.verify import brute_force_at, brute_force_min_ii, validate
from helpers import (
    ARCH_2X2,
    HARD_30,
    REFERENCE_MODEL,
    RUNNING_EXAMPLE,
    random_graph,
    register_pressure,
)
from test_schedule import GOLDEN_KMS, GOLDEN_TABLES

criterion = pytest.mark.criterion


class Stopwatch:
    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.monotonic() - self.start


@criterion(1, "schedule tables and kernel mobility schedule match the worked example")
def test_schedule_golden(example_graph):
    with Stopwatch() as sw:
        early = asap(example_graph)
        late = alap(example_graph, early.length)
        ms = mobility(early, late)
        tables = format_tables(early, late, ms)
        kms = format_kms(build_kms(ms, 3))
    assert tables == GOLDEN_TABLES
    assert kms == GOLDEN_KMS
    assert sw.elapsed < 1.0


@criterion(2, "MII of the worked example on 2x2 is (3, 2, 3)")
def test_mii(example_graph, spec2x2):
    with Stopwatch() as sw:
        r = compute_mii(example_graph, spec2x2)
    assert (r.res_ii, r.rec_ii, r.mii) == (3, 2, 3)
    assert sw.elapsed < 1.0


@criterion(3, "the reference 11-literal assignment satisfies every clause and validates")
def test_reference_model_admissible(example_graph, spec2x2):
    with Stopwatch() as sw:
        problem = build_problem(example_graph, spec2x2, 3)
        vt = problem.vartable
        model = problem.complete_model({vt.index[(n, *v)] for n, v in REFERENCE_MODEL.items()})
        violated = problem.first_violation(model)
        mapping = decode(model, vt)
        problems = validate(example_graph, spec2x2, mapping)
    assert violated is None
    assert problems == []
    assert sw.elapsed < 1.0


@criterion(4, "map_loop reaches ii = mii = 3 on the worked example")
def test_end_to_end_minimality(example_graph, spec2x2):
    with Stopwatch() as sw:
        result = map_loop(example_graph, spec2x2)
    assert result.outcome == MAPPED
    assert result.ii == 3 == result.mii
    assert validate(example_graph, spec2x2, result.mapping) == []
    assert sw.elapsed < 10.0


def _oracle_instances(count, seed=2024):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        g = random_graph(rng, n_nodes=(3, 7), n_edges=(2, 9), max_back=2, max_distance=2)
        if 2 <= len(g.edges) <= 9 and len(g.back_edges()) <= 2:
            out.append(g)
    return out


@criterion(5, "map_loop agrees with the exhaustive oracle on random graphs")
def test_oracle_equivalence():
    graphs = _oracle_instances(200)
    disagreements = []
    checked = 0
    with Stopwatch() as sw:
        for g in graphs:
            for topology in ("mesh", "torus"):
                spec = CgraSpec(2, 2, topology)
                ii_max = max(compute_mii(g, spec).mii, mobility_schedule(g).length) + 1
                result = map_loop(g, spec, SearchConfig(max_ii=ii_max))
                found = brute_force_min_ii(g, spec, ii_max)
                oracle_ii = found[0] if found else None
                for ii, status in result.statuses().items():
                    # encoder UNSAT must mean no placement exists at all at this ii
                    if status == "unsat" and brute_force_at(g, spec, ii, check_registers=False):
                        disagreements.append(("unsat but oracle maps", g, topology, ii))
                if oracle_ii != result.ii:
                    disagreements.append(("ii differs", g, topology, oracle_ii, result.ii))
                checked += 1
    print(f"oracle equivalence: {checked} instances, {len(disagreements)} disagreements, {sw.elapsed:.1f}s")
    assert checked >= 400
    assert disagreements == []
    assert sw.elapsed < 600


@criterion(6, "every SAT model decodes to a validator-accepted mapping")
def test_soundness():
    rng = random.Random(77)
    triples = sat = timeouts = 0
    failures = []
    with Stopwatch() as sw:
        while triples < 500:
            g = random_graph(rng, n_nodes=(1, 8), n_edges=(0, 12), max_back=3, max_distance=2)
            spec = CgraSpec(rng.randint(1, 3), rng.randint(1, 3), rng.choice(["mesh", "torus"]))
            ii = compute_mii(g, spec).mii + rng.randint(0, 3)
            triples += 1
            try:
                problem = build_problem(g, spec, ii)
            except UnroutableEdge:
                continue
            # a timeout says nothing about soundness, so cap hard UNSAT cases
            outcome = solve(problem, budget=5.0)
            timeouts += outcome.status == "timeout"
            if outcome.status != "sat":
                continue
            sat += 1
            problems = validate(g, spec, decode(outcome.model, problem.vartable))
            if problems:
                failures.append((g, spec, ii, problems))
    print(f"soundness: {triples} triples, {sat} sat, {timeouts} timeouts, {len(failures)} rejected, {sw.elapsed:.1f}s")
    assert sat >= 100
    assert failures == []
    assert sw.elapsed < 600


def _max_same_pe_pressure(g, m):
    values = extract_live_values(g, m)
    graph_ = build_interference(values, m.ii)
    worst = 0
    for pe, vs in graph_.vertices.items():
        for t in range(m.ii):
            worst = max(worst, sum(t in v.slots(m.ii) for v in vs))
    return worst


@criterion(7, "register pressure: ra_fail at mii, mapping at a larger ii")
def test_register_pressure_path():
    g, spec = register_pressure()
    with Stopwatch() as sw:
        mii = compute_mii(g, spec).mii
        # every node has one kernel slot at mii: enumerate all PE choices
        occ = build_kms(mobility_schedule(g), mii).occurrences()
        assert all(len(v) == 1 for v in occ.values())
        legal = 0
        for pes in itertools.product(range(spec.num_pes), repeat=len(g)):
            m = Mapping(mii, [Placement(n, pe, *occ[n][0]) for n, pe in zip(g.node_ids, pes)])
            problems = [v.kind for v in validate(g, spec, m)]
            if problems and problems != ["register_overflow"]:
                continue
            legal += 1
            assert _max_same_pe_pressure(g, m) >= 5
        result = map_loop(g, spec)
    print(f"register pressure: {legal} placements legal at ii={mii}, trace {result.statuses()}")
    assert legal > 0 and spec.registers_per_pe == 4
    assert result.statuses()[mii] == "ra_fail"
    assert result.outcome == MAPPED and result.ii > mii
    assert validate(g, spec, result.mapping) == []
    assert sw.elapsed < 30


@criterion(8, "utilization matches the reference figures")
def test_utilization_table():
    def mapping(nodes, ii, pes):
        return Mapping(ii, [Placement(n, n % pes, n // pes, 0) for n in range(nodes)])

    with Stopwatch() as sw:
        cases = [
            (mapping(9, 3, 4), CgraSpec(2, 2), 75),
            (mapping(6, 4, 4), CgraSpec(2, 2), 38),
            (mapping(16, 2, 9), CgraSpec(3, 3), 89),
        ]
        got = [round(100 * utilization(m, spec)) for m, spec, _ in cases]
    assert got == [want for _, _, want in cases]
    assert sw.elapsed < 1.0


# the solver checks its deadline after every conflict and every 64 decisions;
# one II's encoding also runs between deadline checks
POLL_SLACK = 0.5


@criterion(9, "budgeted search records timeouts and respects the global budget")
def test_budgeted_mode():
    g = read_dfg(HARD_30)
    spec = CgraSpec(2, 2)
    mii = compute_mii(g, spec).mii
    cfg = SearchConfig(max_ii=mii + 3, per_ii_budget=0.25, global_budget=30)
    with Stopwatch() as sw:
        result = map_loop(g, spec, cfg)
    statuses = [r.status for r in result.trace]
    print(f"budgeted: outcome={result.outcome} trace={statuses} in {sw.elapsed:.2f}s")
    assert "timeout" in statuses
    assert result.outcome in (MAPPED, EXHAUSTED_II)
    if result.outcome == MAPPED:
        assert result.ii > min(r.ii for r in result.trace if r.status == "timeout")
    assert sw.elapsed < cfg.global_budget + POLL_SLACK

    tight = SearchConfig(max_ii=50, per_ii_budget=0.25, global_budget=1.0)
    with Stopwatch() as sw:
        result = map_loop(g, spec, tight)
    print(f"global budget: outcome={result.outcome} after {sw.elapsed:.2f}s")
    assert result.outcome == TIMED_OUT
    assert sw.elapsed < tight.global_budget + POLL_SLACK


@criterion(10, "encode output is byte-identical across runs")
def test_dimacs_determinism(tmp_path):
    outputs = []
    for run, hash_seed in enumerate(("1", "2")):
        cnf = tmp_path / f"run{run}.cnf"
        env = dict(os.environ, PYTHONHASHSEED=hash_seed)
        proc = subprocess.run(
            [sys.executable, "-m", "cgramap", "encode", "--dfg", str(RUNNING_EXAMPLE),
             "--arch", str(ARCH_2X2), "--ii", "3", "--dimacs", str(cnf)],
            env=env, capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append((cnf.read_bytes(), (tmp_path / f"run{run}.cnf.map").read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][0].startswith(b"p cnf ")
