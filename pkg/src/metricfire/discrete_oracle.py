"""Classical chip-firing on finite multigraphs, kept independent of the metric engine so it can act as an oracle."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations

from .dhar import reduce
from .divisor import Divisor
from .exactnum import QF2
from .metric_graph import Edge, MetricGraph, Vertex

MAX_ENUMERATION_VERTICES = 12


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteGraph:
    vertices: tuple
    edges: tuple  # (a, b) pairs; repeats are parallel edges
    q: str

    def __post_init__(self):
        if self.q not in self.vertices:
            raise OracleError(f"basepoint {self.q!r} is not a vertex")
        names = set(self.vertices)
        for a, b in self.edges:
            if a == b:
                raise OracleError(f"self-loop at {a!r}")
            if a not in names or b not in names:
                raise OracleError(f"edge ({a}, {b}) has an unknown endpoint")
        seen, stack = {self.q}, [self.q]
        adj = self.adjacency()
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != names:
            raise OracleError("graph is not connected")

    def adjacency(self) -> dict[str, Counter]:
        adj = {x: Counter() for x in self.vertices}
        for a, b in self.edges:
            adj[a][b] += 1
            adj[b][a] += 1
        return adj

    def out_degree(self, x: str, subset: frozenset) -> int:
        """Edges from ``x`` to vertices outside ``subset``."""
        return sum(k for y, k in self.adjacency()[x].items() if y not in subset)


def _check_effective(g: DiscreteGraph, d: dict) -> None:
    for x, n in d.items():
        if x not in g.vertices:
            raise OracleError(f"unknown vertex {x!r}")
        if x != g.q and n < 0:
            raise OracleError(f"negative chips at {x!r}")


def is_superstable(g: DiscreteGraph, d: dict) -> bool:
    """Every nonempty S avoiding q has a vertex with fewer chips than edges leaving S.

    Decided by enumerating all subsets, so the graph must be small.
    """
    _check_effective(g, d)
    if len(g.vertices) > MAX_ENUMERATION_VERTICES:
        raise OracleError(f"subset enumeration is capped at {MAX_ENUMERATION_VERTICES} vertices")
    others = [x for x in g.vertices if x != g.q]
    adj = g.adjacency()
    for k in range(1, len(others) + 1):
        for subset in combinations(others, k):
            s = frozenset(subset)
            if all(d.get(x, 0) >= sum(c for y, c in adj[x].items() if y not in s) for x in s):
                return False
    return True


def _fire(g: DiscreteGraph, d: dict, subset: frozenset) -> dict:
    out = dict(d)
    for x in subset:
        for y, c in g.adjacency()[x].items():
            if y not in subset:
                out[x] = out.get(x, 0) - c
                out[y] = out.get(y, 0) + c
    return {x: n for x, n in out.items() if n}


def _unburnt(g: DiscreteGraph, d: dict) -> frozenset:
    """Discrete Dhar: the largest legal set to fire (empty when superstable)."""
    adj = g.adjacency()
    burnt = {g.q}
    changed = True
    while changed:
        changed = False
        for x in g.vertices:
            if x in burnt:
                continue
            if sum(c for y, c in adj[x].items() if y in burnt) > d.get(x, 0):
                burnt.add(x)
                changed = True
    return frozenset(set(g.vertices) - burnt)


def discrete_reduce(g: DiscreteGraph, d: dict) -> dict:
    """Fire the unburnt set until nothing is left unburnt."""
    _check_effective(g, d)
    d = {x: n for x, n in d.items() if n}
    while True:
        s = _unburnt(g, d)
        if not s:
            return d
        d = _fire(g, d, s)


def to_metric(g: DiscreteGraph) -> MetricGraph:
    edges = [Edge(f"e{i}", a, b, QF2(1)) for i, (a, b) in enumerate(g.edges)]
    return MetricGraph(list(g.vertices), edges, g.q)


def from_metric(g: MetricGraph) -> DiscreteGraph:
    for e in g.edges.values():
        if e.length != 1:
            raise OracleError(f"edge {e.id} does not have unit length")
    return DiscreteGraph(tuple(g.vertices), tuple((e.u, e.v) for e in g.edges.values()), g.basepoint)


def to_metric_divisor(d: dict) -> Divisor:
    return Divisor((Vertex(x), n) for x, n in d.items())


def compare_with_metric(g: DiscreteGraph, d: dict) -> tuple[bool, str]:
    """Reduce with both engines; returns ``(agree, diagnostic)``."""
    expected = discrete_reduce(g, d)
    got, _ = reduce(to_metric(g), to_metric_divisor(d))
    mid_edge = [p for p in got if not isinstance(p, Vertex)]
    if mid_edge:
        return False, f"metric result has mid-edge chips at {mid_edge}"
    as_dict = {p.name: n for p, n in got.items()}
    if as_dict != expected:
        return False, f"metric {as_dict} != discrete {expected}"
    return True, ""


def random_discrete_instance(rng, max_vertices: int = 8, max_edges: int = 14, max_degree: int = 10):
    n = rng.randint(2, max_vertices)
    names = ["q"] + [f"v{i}" for i in range(1, n)]
    pairs = [(names[rng.randrange(i)], names[i]) for i in range(1, n)]
    for _ in range(rng.randint(0, max(0, max_edges - len(pairs)))):
        pairs.append(tuple(rng.sample(names, 2)))
    g = DiscreteGraph(tuple(names), tuple(pairs), "q")
    d = Counter()
    for _ in range(rng.randint(0, max_degree)):
        d[rng.choice(names[1:])] += 1
    return g, dict(d)


__all__ = [
    "DiscreteGraph",
    "OracleError",
    "compare_with_metric",
    "discrete_reduce",
    "from_metric",
    "is_superstable",
    "random_discrete_instance",
    "to_metric",
]
