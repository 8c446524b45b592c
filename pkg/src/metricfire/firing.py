"""Basic chip-firing moves: push one chip outward across each boundary crossing."""

from __future__ import annotations

from dataclasses import dataclass

from .divisor import Divisor, apply_delta, degree
from .exactnum import QF2, parse, render
from .metric_graph import (
    TOWARD_V,
    BoundaryCrossing,
    GraphError,
    MetricGraph,
    Point,
    Region,
    cut_boundary,
    headroom_end,
    point_from_json,
    point_to_json,
    region_from_json,
    region_to_json,
)


class FiringError(ValueError):
    pass


class IllegalFiring(FiringError):
    def __init__(self, point: Point, count: int):
        super().__init__(f"firing leaves {count} chips at {point}")
        self.point = point
        self.count = count


@dataclass(frozen=True)
class FiringSpec:
    """Fire ``region`` by ``epsilon``; ``sources`` pairs each crossing with the chip it pushes.

    ``connected=False`` allows a region made of several pieces fired at once
    (the unburnt set of a burn need not be connected).
    """

    region: Region
    sources: tuple  # ((BoundaryCrossing, Point), ...) in cut_boundary order
    epsilon: QF2
    connected: bool = True

    @property
    def crossings(self) -> list[BoundaryCrossing]:
        return [c for c, _ in self.sources]

    def with_epsilon(self, eps) -> "FiringSpec":
        return FiringSpec(self.region, self.sources, QF2.of(eps), self.connected)


def default_sources(g: MetricGraph, region: Region, *, connected: bool = True, overrides=None):
    """Sources at the crossing points themselves, unless ``overrides[edge]`` names another point."""
    overrides = overrides or {}
    out = []
    for c in cut_boundary(g, region, connected=connected):
        src = overrides.get(c.edge)
        out.append((c, src if src is not None else g.point(c.edge, c.position)))
    return tuple(out)


def _source_offset(g: MetricGraph, region: Region, c: BoundaryCrossing, src: Point) -> QF2:
    try:
        off = g.offset_on(src, c.edge)
    except GraphError as exc:
        raise FiringError(f"source {src} is not on edge {c.edge}") from exc
    end = headroom_end(g, region, c)
    lo, hi = (c.position, end) if c.direction == TOWARD_V else (end, c.position)
    if not (lo <= off <= hi) or off == end:
        raise FiringError(f"source {src} is not in the stretch beyond crossing on {c.edge}")
    return off


def headroom(g: MetricGraph, region: Region, c: BoundaryCrossing, src: Point) -> QF2:
    """How far the chip at ``src`` can travel outward before leaving its stretch."""
    off = _source_offset(g, region, c, src)
    return abs(headroom_end(g, region, c) - off)


def _check_spec(g: MetricGraph, spec: FiringSpec) -> None:
    expected = cut_boundary(g, spec.region, connected=spec.connected)
    got = spec.crossings
    if sorted(expected, key=_ckey) != sorted(got, key=_ckey) or len(set(got)) != len(got):
        raise FiringError("sources must name exactly one chip per boundary crossing")
    if spec.epsilon.sign() <= 0:
        raise FiringError("epsilon must be positive")


def _ckey(c: BoundaryCrossing):
    return (c.edge, c.position, c.direction)


def laplacian_divisor(g: MetricGraph, spec: FiringSpec) -> Divisor:
    """The chip movement of ``spec``: -1 at each source, +1 epsilon further outward."""
    _check_spec(g, spec)
    moves = []
    for c, src in spec.sources:
        room = headroom(g, spec.region, c, src)
        if spec.epsilon > room:
            raise FiringError(f"epsilon exceeds edge headroom on {c.edge}")
        off = g.offset_on(src, c.edge)
        dest = g.point(c.edge, off + spec.epsilon * c.sign())
        moves.append((src, -1))
        moves.append((dest, 1))
    delta = Divisor(moves)
    assert degree(delta) == 0
    return delta


def _firing_result(g: MetricGraph, d: Divisor, spec: FiringSpec) -> Divisor:
    return apply_delta(d, laplacian_divisor(g, spec))


def first_debt(g: MetricGraph, d: Divisor, spec: FiringSpec):
    """A point left negative (away from ``q``) by the firing, or None."""
    after = _firing_result(g, d, spec)
    for p, n in after.items():
        if n < 0 and p != g.q:
            return p, n
    return None


def is_legal(g: MetricGraph, d: Divisor, spec: FiringSpec) -> bool:
    try:
        return first_debt(g, d, spec) is None
    except FiringError:
        return False


def max_legal_epsilon(g: MetricGraph, d: Divisor, region: Region, sources, *, connected: bool = True) -> QF2:
    """Largest epsilon for these sources: the nearest stretch end any pushed chip reaches."""
    sources = tuple(sources)
    if not sources:
        raise FiringError("no boundary crossings")
    eps = min(headroom(g, region, c, src) for c, src in sources)
    if eps.sign() <= 0:
        raise FiringError("no legal epsilon > 0")
    spec = FiringSpec(region, sources, eps, connected)
    # legality does not depend on epsilon: only the sources lose chips
    bad = first_debt(g, d, spec)
    if bad is not None:
        raise IllegalFiring(*bad)
    return eps


def maximal_firing(g: MetricGraph, d: Divisor, region: Region, sources=None, *, connected: bool = True) -> FiringSpec:
    if sources is None:
        sources = default_sources(g, region, connected=connected)
    eps = max_legal_epsilon(g, d, region, sources, connected=connected)
    return FiringSpec(region, tuple(sources), eps, connected)


def apply_firing(g: MetricGraph, d: Divisor, spec: FiringSpec) -> Divisor:
    after = _firing_result(g, d, spec)
    for p, n in after.items():
        if n < 0 and p != g.q:
            raise IllegalFiring(p, n)
    return after


def destinations(g: MetricGraph, spec: FiringSpec) -> list[tuple[Point, Point]]:
    """``(source, destination)`` per crossing."""
    out = []
    for c, src in spec.sources:
        off = g.offset_on(src, c.edge)
        out.append((src, g.point(c.edge, off + spec.epsilon * c.sign())))
    return out


def boundary_vertices(g: MetricGraph, spec: FiringSpec) -> set[str]:
    """Inner vertices incident to an edge that carries a crossing."""
    edges = {c.edge for c in spec.crossings}
    out = set()
    for eid in edges:
        e = g.edges[eid]
        for x in (e.u, e.v):
            if x in spec.region.inner_vertices:
                out.add(x)
    return out


def spec_to_json(spec: FiringSpec) -> dict:
    return {
        "region": region_to_json(spec.region),
        "connected": spec.connected,
        "sources": [
            {"edge": c.edge, "pos": render(c.position), "dir": c.direction, "at": point_to_json(p)}
            for c, p in spec.sources
        ],
        "eps": render(spec.epsilon),
    }


def spec_from_json(obj: dict, g: MetricGraph | None = None) -> FiringSpec:
    sources = tuple(
        (BoundaryCrossing(s["edge"], parse(s["pos"]), s["dir"]), point_from_json(s["at"], g))
        for s in obj["sources"]
    )
    return FiringSpec(region_from_json(obj["region"]), sources, parse(obj["eps"]), bool(obj.get("connected", True)))
