import random
from fractions import Fraction

from conftest import single_edge
from metricfire.divisor import (
    Divisor,
    apply_delta,
    chips_at_combinatorial_vertices,
    degree,
    divisor_from_json,
    divisor_to_json,
    is_effective_away_from,
)
from metricfire.gadgets import build_euclid
from metricfire.instances import random_divisor, random_graph
from metricfire.metric_graph import Vertex


def test_degree_examples():
    assert degree(Divisor()) == 0
    assert degree(Divisor({Vertex("v"): 2, Vertex("q"): -2})) == 0
    assert degree(build_euclid(2, 5).divisor) == 16


def test_effective_away_from_q():
    g = single_edge()
    assert is_effective_away_from(Divisor({Vertex("v"): 1, Vertex("q"): -1}), "q")
    assert not is_effective_away_from(Divisor({g.point("e", Fraction(1, 2)): -1}), "q")
    assert is_effective_away_from(Divisor(), "q")


def test_zero_entries_dropped_and_merged():
    p = Vertex("v")
    d = Divisor([(p, 1), (p, 1), (Vertex("q"), 0)])
    assert dict(d) == {p: 2}
    assert apply_delta(Divisor({p: 1}), Divisor({p: -1, Vertex("w"): 1})) == Divisor({Vertex("w"): 1})
    assert apply_delta(d, Divisor()) == d


def test_degree_is_additive():
    rng = random.Random(3)
    for _ in range(100):
        g = random_graph(rng)
        a, b = random_divisor(rng, g), random_divisor(rng, g)
        assert degree(apply_delta(a, b)) == degree(a) + degree(b)
        assert apply_delta(a, b) == apply_delta(b, a)


def test_json_round_trip():
    rng = random.Random(5)
    for _ in range(50):
        g = random_graph(rng)
        d = random_divisor(rng, g)
        assert divisor_from_json(divisor_to_json(d), g) == d


def test_chips_at_combinatorial_vertices_ignores_q_and_mid_edge():
    g = single_edge()
    d = Divisor({Vertex("v"): 2, Vertex("q"): 5, g.point("e", Fraction(1, 3)): 1})
    assert chips_at_combinatorial_vertices(g, d) == 2
