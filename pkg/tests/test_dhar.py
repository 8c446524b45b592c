import random
from fractions import Fraction

import pytest

from conftest import parallel_pair, single_edge
from metricfire.dhar import ReductionError, burn, dhar_firing, is_q_reduced, reduce
from metricfire.divisor import Divisor, degree, is_effective_away_from
from metricfire.exactnum import QF2
from metricfire.firing import apply_firing, is_legal
from metricfire.gadgets import build_euclid
from metricfire.instances import random_divisor, random_graph
from metricfire.metric_graph import Region, Segment, Vertex

HALF = QF2(Fraction(1, 2))


def test_empty_divisor_burns_everything():
    r = burn(single_edge(), Divisor())
    assert r.complete and r.blockers == ()


def test_midpoint_chip_blocks_fire():
    g = single_edge()
    mid = g.point("e", HALF)
    r = burn(g, Divisor({mid: 1}))
    assert r.unburnt == Region.of(["v"], [Segment("e", HALF, QF2(1))])
    assert [p for _, p in r.blockers] == [mid]


def test_parallel_pair():
    g = parallel_pair()
    assert is_q_reduced(g, Divisor({Vertex("v"): 1}))
    assert not is_q_reduced(g, Divisor({Vertex("v"): 2}))
    spec = dhar_firing(g, Divisor({Vertex("v"): 2}))
    assert spec.epsilon == 1 and len(spec.sources) == 2


def test_reduce_examples():
    g = single_edge()
    final, steps = reduce(g, Divisor({g.point("e", HALF): 1}))
    assert final == Divisor({Vertex("q"): 1}) and len(steps) == 1
    final, steps = reduce(parallel_pair(), Divisor({Vertex("v"): 2}))
    assert final == Divisor({Vertex("q"): 2}) and len(steps) == 1


def test_dhar_firing_on_reduced_raises():
    with pytest.raises(ReductionError):
        dhar_firing(single_edge(), Divisor())


def test_step_cap():
    g = single_edge(4)
    d = Divisor({Vertex("v"): 1, g.point("e", 1): 1, g.point("e", 2): 1})
    with pytest.raises(ReductionError):
        reduce(g, d, step_cap=1)


def test_euclid_initial_firing_is_legal():
    inst = build_euclid(2, 5)
    spec = dhar_firing(inst.graph, inst.divisor)
    assert is_legal(inst.graph, inst.divisor, spec)


def test_burn_is_deterministic():
    rng = random.Random(21)
    for _ in range(30):
        g = random_graph(rng)
        d = random_divisor(rng, g)
        assert burn(g, d) == burn(g, d)


def test_blockers_hold_enough_chips():
    rng = random.Random(22)
    for _ in range(60):
        g = random_graph(rng)
        d = random_divisor(rng, g)
        r = burn(g, d)
        if r.complete:
            continue
        counts = {}
        for _, p in r.blockers:
            counts[p] = counts.get(p, 0) + 1
        for p, k in counts.items():
            assert d[p] >= k


def test_reduce_properties_on_random_instances():
    rng = random.Random(23)
    for _ in range(60):
        g = random_graph(rng)
        d = random_divisor(rng, g)
        cur = d
        while not is_q_reduced(g, cur):
            cur = apply_firing(g, cur, dhar_firing(g, cur))
            assert degree(cur) == degree(d)
            assert is_effective_away_from(cur, g.q)
        final, _ = reduce(g, d)
        assert final == cur
        assert reduce(g, final)[1] == []
