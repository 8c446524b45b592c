"""Seeded random instances for property runs and the differential harness."""

from __future__ import annotations

import random
from fractions import Fraction

from .divisor import Divisor
from .exactnum import QF2
from .metric_graph import Edge, MetricGraph, Vertex


def random_graph(
    rng: random.Random,
    max_vertices: int = 6,
    max_edges: int = 10,
    max_den: int = 16,
    unit: bool = False,
) -> MetricGraph:
    """Connected loopless multigraph on ``q, v1, ...``; a random spanning tree plus extra edges."""
    n = rng.randint(2, max_vertices)
    names = ["q"] + [f"v{i}" for i in range(1, n)]
    pairs = []
    for i in range(1, n):
        pairs.append((names[rng.randrange(i)], names[i]))
    extra = rng.randint(0, max(0, max_edges - len(pairs)))
    for _ in range(extra):
        a, b = rng.sample(names, 2)
        pairs.append((a, b))

    def length():
        if unit:
            return QF2(1)
        return QF2(Fraction(rng.randint(1, 4 * max_den), rng.randint(1, max_den)))

    edges = [Edge(f"e{i}", a, b, length()) for i, (a, b) in enumerate(pairs)]
    return MetricGraph(names, edges, "q")


def random_divisor(
    rng: random.Random,
    g: MetricGraph,
    max_degree: int = 8,
    max_den: int = 16,
    vertex_only: bool = False,
) -> Divisor:
    """Effective divisor with up to ``max_degree`` chips, some of them mid-edge."""
    chips = []
    edge_ids = sorted(g.edges)
    for _ in range(rng.randint(0, max_degree)):
        if vertex_only or rng.random() < 0.4:
            chips.append((Vertex(rng.choice(g.vertices)), 1))
        else:
            e = g.edges[rng.choice(edge_ids)]
            den = rng.randint(2, max_den)
            k = rng.randint(1, den - 1)
            chips.append((g.point(e.id, e.length * Fraction(k, den)), 1))
    return Divisor(chips)
