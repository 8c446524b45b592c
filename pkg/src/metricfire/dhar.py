"""Dhar's burning algorithm on metric graphs and the reduction loop built on it."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .divisor import Divisor, degree, is_effective_away_from
from .exactnum import QF2
from .firing import FiringSpec, apply_firing, maximal_firing
from .metric_graph import (
    BoundaryCrossing,
    MetricGraph,
    OnEdge,
    Point,
    Region,
    Segment,
    Vertex,
    cut_boundary,
)

DEFAULT_STEP_CAP = 10**5


class ReductionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Piece:
    """Chip-free stretch of an edge between two consecutive nodes."""

    edge: str
    index: int
    a: Point
    b: Point


class NodeGraph:
    """``g`` subdivided at the chip points of ``d``: nodes are vertices and chip points."""

    def __init__(self, g: MetricGraph, d: Divisor):
        self.g = g
        self.d = d
        self.nodes: list[Point] = [Vertex(x) for x in g.vertices]
        self.chains: dict[str, list[Point]] = {}
        self.pieces: list[Piece] = []
        self.around: dict[Point, list[Piece]] = {p: [] for p in self.nodes}
        by_edge: dict[str, list[OnEdge]] = {}
        for p in d:
            if isinstance(p, OnEdge) and d[p] != 0:
                by_edge.setdefault(p.edge, []).append(p)
        for eid in sorted(g.edges):
            e = g.edges[eid]
            inner = sorted(by_edge.get(eid, []), key=lambda p: p.offset)
            chain = [Vertex(e.u), *inner, Vertex(e.v)]
            self.chains[eid] = chain
            for p in inner:
                self.nodes.append(p)
                self.around[p] = []
            for i, (a, b) in enumerate(zip(chain, chain[1:])):
                piece = Piece(eid, i, a, b)
                self.pieces.append(piece)
                self.around[a].append(piece)
                self.around[b].append(piece)

    def other(self, piece: Piece, x: Point) -> Point:
        return piece.b if piece.a == x else piece.a

    def offset(self, eid: str, p: Point) -> QF2:
        return self.g.offset_on(p, eid)

    def region_of(self, inside: set[Point]) -> Region:
        """Closed region spanned by ``inside`` plus pieces with both ends inside."""
        verts = {p.name for p in inside if isinstance(p, Vertex)}
        segs = []
        for eid, chain in self.chains.items():
            e = self.g.edges[eid]
            if e.u in verts and e.v in verts:
                continue
            run: list[Point] = []
            for p in chain + [None]:
                if p is not None and p in inside:
                    run.append(p)
                    continue
                if run and not (len(run) == 1 and isinstance(run[0], Vertex)):
                    segs.append(Segment(eid, self.offset(eid, run[0]), self.offset(eid, run[-1])))
                run = []
        return Region.of(verts, segs)


@dataclass(frozen=True)
class BurnResult:
    burnt: frozenset  # burnt nodes
    unburnt: Region | None  # None when everything burns
    blockers: tuple  # ((BoundaryCrossing, Point), ...)

    @property
    def complete(self) -> bool:
        return self.unburnt is None


def burn(g: MetricGraph, d: Divisor) -> BurnResult:
    """Spread fire from ``q``; a node burns once strictly more burnt directions reach it than it has chips."""
    if not is_effective_away_from(d, g.q):
        raise ReductionError("burn needs a divisor effective away from q")
    ng = NodeGraph(g, d)
    burnt = {g.q}
    arrivals: dict[Point, int] = {}
    queue = deque([g.q])
    while queue:
        x = queue.popleft()
        for piece in ng.around[x]:
            y = ng.other(piece, x)
            if y in burnt:
                continue
            arrivals[y] = arrivals.get(y, 0) + 1
            if arrivals[y] > d[y]:
                burnt.add(y)
                queue.append(y)
    unburnt = set(ng.nodes) - burnt
    if not unburnt:
        return BurnResult(frozenset(burnt), None, ())
    region = ng.region_of(unburnt)
    blockers = tuple((c, g.point(c.edge, c.position)) for c in cut_boundary(g, region, connected=False))
    return BurnResult(frozenset(burnt), region, blockers)


def is_q_reduced(g: MetricGraph, d: Divisor) -> bool:
    return burn(g, d).complete


def dhar_firing(g: MetricGraph, d: Divisor) -> FiringSpec:
    """The maximal legal firing of the unburnt set, each blocker pushing one chip per crossing."""
    result = burn(g, d)
    if result.complete:
        raise ReductionError("divisor is already q-reduced")
    return maximal_firing(g, d, result.unburnt, result.blockers, connected=False)


def reduce(g: MetricGraph, d: Divisor, step_cap: int = DEFAULT_STEP_CAP) -> tuple[Divisor, list[FiringSpec]]:
    """Fire Dhar firings until the divisor is q-reduced."""
    trace: list[FiringSpec] = []
    deg = degree(d)
    while not is_q_reduced(g, d):
        if len(trace) >= step_cap:
            raise ReductionError(f"Dhar reduction exceeded {step_cap} firings")
        spec = dhar_firing(g, d)
        d = apply_firing(g, d, spec)
        assert degree(d) == deg
        trace.append(spec)
    return d, trace


def crossing_point(g: MetricGraph, c: BoundaryCrossing) -> Point:
    return g.point(c.edge, c.position)
