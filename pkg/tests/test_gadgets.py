from fractions import Fraction

import pytest

from metricfire.dhar import reduce
from metricfire.divisor import degree, is_effective_away_from
from metricfire.exactnum import SQRT2
from metricfire.gadgets import (
    GadgetError,
    build_euclid,
    build_omega_n,
    euclid_states,
    predicted_totals,
)
from metricfire.metric_graph import Region, Vertex, validate
from metricfire.ordinal import parse_ordinal
from metricfire.transfinite import Budget, Outcome, trace_stats

LAM = SQRT2 - 1


def test_euclid_topology():
    inst = build_euclid(2, 5)
    g = inst.graph
    assert len(g.vertices) == 7 and len(g.edges) == 15
    assert all(e.length == 50 for e in g.edges.values())
    assert validate(g) == []
    assert degree(inst.divisor) == 16
    assert inst.divisor[Vertex("u1")] == 1
    assert inst.divisor[g.point("u0-v0", 48)] == 1
    assert inst.divisor[g.point("u2-v2", 45)] == 1
    assert is_effective_away_from(inst.divisor, g.q)


@pytest.mark.parametrize("a, b", [(0, 1), (2, 2), (3, 2), (-LAM, 1)])
def test_bad_parameters(a, b):
    with pytest.raises(GadgetError):
        build_euclid(a, b)


def test_omega_one_is_euclid():
    one, plain = build_omega_n(1, 2, 5), build_euclid(2, 5)
    assert one.graph == plain.graph and one.divisor == plain.divisor


def test_omega_two_topology():
    inst = build_omega_n(2, LAM, 1)
    g = inst.graph
    assert len(g.vertices) == 11
    assert len(g.edges) == 5 + 10 + 2 * 10
    assert inst.metadata["recharge_chips"]


def test_predicted_totals():
    p = predicted_totals(2, 5)
    assert (p.subtractions, p.total_length, p.sum_l, p.bound) == (4, 12, 6, 20)
    assert p.within_bound
    p = predicted_totals(1, 2)
    assert (p.subtractions, p.sum_l) == (2, 2)
    p = predicted_totals(LAM, 1)
    assert p.sum_l == SQRT2 and p.total_length == 2 * SQRT2 and p.within_bound
    assert p.terminates is False
    assert not predicted_totals(1, SQRT2 + Fraction(1, 3)).closed_form


def test_sqrt2_partial_sums_match_closed_form():
    total = 0
    for st in euclid_states(LAM, 1, 30):
        assert st.n == 2 and st.l == 2 * LAM ** (st.index + 1)
        total = total + st.l
        assert total < SQRT2
    assert SQRT2 - total < Fraction(1, 10**10)


@pytest.mark.parametrize("a, b", [(LAM, 1), (2, 5), (Fraction(13, 89), 1), (Fraction(1, 7), Fraction(22, 7))])
def test_length_sequence_bounds(a, b):
    ls = [s.l for s in euclid_states(a, b, 40)]
    for i in range(len(ls) - 1):
        assert ls[i + 1] <= ls[i]
    for i in range(len(ls) - 2):
        assert ls[i + 2] < ls[i] / 2


def test_two_five_phases():
    t = build_euclid(2, 5).run()
    eps = [s.eps for s in t.fires[: t.meta["scripted_fires"]]]
    assert eps == [2, 2, 2, 2, 1, 1, 1, 1]
    assert t.fires[0].spec.region == Region.of(["u0", "u1", "u2"])
    assert t.fires[1].spec.region == Region.of(["v0", "v1"])


def test_subtraction_fidelity():
    inst = build_euclid(2, 5)
    t = inst.run(Budget(max_fires=2), cleanup=False)
    g = inst.graph
    d = t.final
    assert d[Vertex("u1")] >= 1
    assert d[g.point("u0-v0", 48)] == 1
    assert d[g.point("u2-v2", 47)] == 1


@pytest.mark.parametrize("a, b", [(2, 5), (1, 2), (Fraction(3, 7), 1), (Fraction(5, 8), Fraction(13, 8))])
def test_rational_cleanup_matches_dhar(a, b):
    inst = build_euclid(a, b)
    t = inst.run()
    assert t.outcome is Outcome.REDUCED
    assert t.final == reduce(inst.graph, inst.divisor)[0]
    p = inst.predictions
    assert t.meta["scripted_fires"] == 2 * p.subtractions


def test_pivot_zero_limit_positions():
    t = build_euclid(LAM, 1, pivot=0).run(phases=8)
    chips = t.limits[0].chips
    assert (chips["c0"], chips["c1"], chips["c2"]) == (Vertex("u0"), Vertex("v1"), Vertex("v2"))


def test_self_similarity_needs_enough_phases():
    with pytest.raises(GadgetError):
        build_euclid(LAM, 1).run(phases=3)


@pytest.mark.slow
def test_omega_two_full_run():
    inst = build_omega_n(2, LAM, 1)
    t = inst.run()
    marks = [str(s.ordinal) for s in t.limits]
    assert marks == ["w^1", "w^1*2", "w^1*3", "w^1*4", "w^1*5", "w^2"]
    counts = trace_stats(t).limit_counts
    assert all(c >= 2 for _, level, c in counts if level == 1)
    assert all(c >= 3 for _, level, c in counts if level == 2)
    assert t.ordinal < parse_ordinal("w^3")
