"""Metric graphs, points on them, and fired regions with their boundaries."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Union

from .exactnum import QF2, ZERO, parse, render


class GraphError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Vertex:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class OnEdge:
    """A point strictly inside ``edge`` at ``offset`` from the edge's ``u`` end."""

    edge: str
    offset: QF2

    def __str__(self):
        return f"{self.edge}@{render(self.offset)}"


Point = Union[Vertex, OnEdge]


def point_key(p: Point):
    """Deterministic sort key for points (vertices first)."""
    if isinstance(p, Vertex):
        return (0, p.name, ZERO)
    return (1, p.edge, p.offset)


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: QF2

    def other(self, x: str) -> str:
        return self.v if x == self.u else self.u


class MetricGraph:
    """Weighted multigraph with exact lengths and a vertex basepoint ``q``.

    Construction does not validate; call :func:`validate` for a report.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge], basepoint: str):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if e.id in self.edges:
                raise GraphError(f"duplicate edge id {e.id!r}")
            self.edges[e.id] = Edge(e.id, e.u, e.v, QF2.of(e.length))
        self.basepoint = basepoint
        self._incident: dict[str, list[str]] = defaultdict(list)
        for e in self.edges.values():
            self._incident[e.u].append(e.id)
            if e.v != e.u:
                self._incident[e.v].append(e.id)

    @property
    def q(self) -> Vertex:
        return Vertex(self.basepoint)

    def edge(self, eid: str) -> Edge:
        try:
            return self.edges[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    def incident(self, vertex: str) -> list[str]:
        return list(self._incident.get(vertex, ()))

    def point(self, eid: str, offset) -> Point:
        """Canonical point at ``offset`` along ``eid``; endpoints become vertices."""
        e = self.edge(eid)
        offset = QF2.of(offset)
        if offset.sign() < 0 or offset > e.length:
            raise GraphError(f"offset {offset} outside edge {eid} of length {e.length}")
        if not offset:
            return Vertex(e.u)
        if offset == e.length:
            return Vertex(e.v)
        return OnEdge(eid, offset)

    def offset_on(self, p: Point, eid: str) -> QF2:
        """Offset of ``p`` along ``eid``; ``p`` must lie on that edge."""
        e = self.edge(eid)
        if isinstance(p, OnEdge):
            if p.edge != eid:
                raise GraphError(f"{p} is not on edge {eid}")
            return p.offset
        if p.name == e.u:
            return ZERO
        if p.name == e.v:
            return e.length
        raise GraphError(f"vertex {p} is not an endpoint of {eid}")

    def contains(self, p: Point) -> bool:
        if isinstance(p, Vertex):
            return p.name in set(self.vertices)
        e = self.edges.get(p.edge)
        return e is not None and ZERO < p.offset < e.length

    def is_combinatorial(self, vertex: str) -> bool:
        return vertex == self.basepoint or point_degree(self, Vertex(vertex)) != 2

    def __eq__(self, other):
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and self.basepoint == other.basepoint
        )

    __hash__ = None

    def __repr__(self):
        return f"MetricGraph({len(self.vertices)} vertices, {len(self.edges)} edges, q={self.basepoint!r})"


def validate(g: MetricGraph) -> list[str]:
    """Violations of the graph invariants; empty means valid."""
    problems = []
    vs = set(g.vertices)
    if len(vs) != len(g.vertices):
        problems.append("duplicate vertex ids")
    if g.basepoint not in vs:
        problems.append(f"basepoint {g.basepoint!r} is not a vertex")
    for e in g.edges.values():
        if e.u not in vs or e.v not in vs:
            problems.append(f"edge {e.id} has an unknown endpoint")
        if e.u == e.v:
            problems.append(f"edge {e.id} is a self-loop")
        if e.length.sign() <= 0:
            problems.append(f"edge {e.id} has non-positive length")
    if vs:
        start = g.basepoint if g.basepoint in vs else g.vertices[0]
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for eid in g.incident(x):
                y = g.edges[eid].other(x)
                if y in vs and y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != vs:
            problems.append("not connected")
    return problems


def point_degree(g: MetricGraph, p: Point) -> int:
    """Number of tangent directions at ``p``."""
    if not g.contains(p):
        raise GraphError(f"{p} is not on the graph")
    if isinstance(p, OnEdge):
        return 2
    return sum(2 if g.edges[eid].u == g.edges[eid].v else 1 for eid in g.incident(p.name))


# ---- regions -------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Closed piece ``[lo, hi]`` of an edge; ``lo == hi`` marks a single interior point."""

    edge: str
    lo: QF2
    hi: QF2


@dataclass(frozen=True)
class Region:
    inner_vertices: frozenset
    partial_segments: tuple = ()

    @classmethod
    def of(cls, vertices: Iterable[str] = (), segments: Iterable[Segment] = ()) -> "Region":
        segs = tuple(sorted(segments, key=lambda s: (s.edge, s.lo)))
        return cls(frozenset(vertices), segs)


TOWARD_U = "u"
TOWARD_V = "v"


@dataclass(frozen=True)
class BoundaryCrossing:
    """Where the region's boundary meets an edge; ``direction`` points away from the region."""

    edge: str
    position: QF2
    direction: str

    def sign(self) -> int:
        return 1 if self.direction == TOWARD_V else -1


def covered_intervals(g: MetricGraph, r: Region, eid: str) -> list[tuple[QF2, QF2]]:
    """Closed intervals of ``eid`` lying in ``r``, merged and sorted."""
    e = g.edge(eid)
    u_in = e.u in r.inner_vertices
    v_in = e.v in r.inner_vertices
    if u_in and v_in:
        return [(ZERO, e.length)]
    pieces = [(s.lo, s.hi) for s in r.partial_segments if s.edge == eid]
    if u_in:
        pieces.append((ZERO, ZERO))
    if v_in:
        pieces.append((e.length, e.length))
    pieces.sort(key=lambda t: (t[0], t[1]))
    merged: list[list[QF2]] = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def _region_problems(g: MetricGraph, r: Region) -> list[str]:
    problems = []
    vs = set(g.vertices)
    if not r.inner_vertices and not r.partial_segments:
        problems.append("region is empty")
    for x in r.inner_vertices:
        if x not in vs:
            problems.append(f"unknown vertex {x!r}")
    if g.basepoint in r.inner_vertices:
        problems.append("region contains the basepoint")
    by_edge = defaultdict(list)
    for s in r.partial_segments:
        if s.edge not in g.edges:
            problems.append(f"unknown edge {s.edge!r}")
            continue
        e = g.edges[s.edge]
        if s.lo.sign() < 0 or s.hi > e.length or s.lo > s.hi:
            problems.append(f"segment {s.edge}[{s.lo},{s.hi}] out of range")
            continue
        if s.lo == s.hi and (not s.lo or s.lo == e.length):
            problems.append(f"degenerate segment at an endpoint of {s.edge}")
        if not s.lo and e.u not in r.inner_vertices:
            problems.append(f"segment on {s.edge} touches {e.u} which is not inner")
        if s.hi == e.length and e.v not in r.inner_vertices:
            problems.append(f"segment on {s.edge} touches {e.v} which is not inner")
        if e.u in r.inner_vertices and e.v in r.inner_vertices:
            problems.append(f"segment on {s.edge} duplicates a full inner edge")
        by_edge[s.edge].append(s)
    for eid, segs in by_edge.items():
        segs.sort(key=lambda s: (s.lo, s.hi))
        for s1, s2 in zip(segs, segs[1:]):
            if s2.lo <= s1.hi:
                problems.append(f"overlapping segments on {eid}")
    return problems


class _DSU:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def groups(self):
        out = defaultdict(list)
        for x in list(self.parent):
            out[self.find(x)].append(x)
        return list(out.values())


def region_components(g: MetricGraph, r: Region) -> list[Region]:
    """Split a region into its connected pieces."""
    dsu = _DSU()
    for x in r.inner_vertices:
        dsu.find(("v", x))
    for e in g.edges.values():
        if e.u in r.inner_vertices and e.v in r.inner_vertices:
            dsu.union(("v", e.u), ("v", e.v))
    for s in r.partial_segments:
        e = g.edges[s.edge]
        node = ("s", s)
        dsu.find(node)
        if not s.lo:
            dsu.union(node, ("v", e.u))
        if s.hi == e.length:
            dsu.union(node, ("v", e.v))
    comps = []
    for group in dsu.groups():
        verts = [x for kind, x in group if kind == "v"]
        segs = [x for kind, x in group if kind == "s"]
        comps.append(Region.of(verts, segs))
    comps.sort(key=lambda c: (sorted(c.inner_vertices), [(s.edge, s.lo) for s in c.partial_segments]))
    return comps


def complement_gaps(g: MetricGraph, r: Region, eid: str) -> list[tuple[QF2, QF2]]:
    """Open stretches of ``eid`` outside ``r`` (endpoints included when not inner)."""
    e = g.edge(eid)
    cover = covered_intervals(g, r, eid)
    if not cover:
        return [(ZERO, e.length)]
    gaps = []
    if cover[0][0].sign() > 0:
        gaps.append((ZERO, cover[0][0]))
    for (_, hi), (lo, _) in zip(cover, cover[1:]):
        gaps.append((hi, lo))
    if cover[-1][1] < e.length:
        gaps.append((cover[-1][1], e.length))
    return gaps


def complement_is_connected(g: MetricGraph, r: Region) -> bool:
    dsu = _DSU()
    for x in g.vertices:
        if x not in r.inner_vertices:
            dsu.find(("v", x))
    for eid, e in g.edges.items():
        for i, (lo, hi) in enumerate(complement_gaps(g, r, eid)):
            node = ("g", eid, i)
            dsu.find(node)
            if not lo:
                dsu.union(node, ("v", e.u))
            if hi == e.length:
                dsu.union(node, ("v", e.v))
    return len(dsu.groups()) <= 1


def region_report(g: MetricGraph, r: Region, *, connected: bool = True) -> list[str]:
    """Reasons ``r`` cannot be fired; ``connected=False`` accepts several pieces."""
    problems = _region_problems(g, r)
    if problems:
        return problems
    if connected and len(region_components(g, r)) != 1:
        problems.append("region is not connected")
    if not complement_is_connected(g, r):
        problems.append("complement is not connected")
    return problems


def region_is_valid(g: MetricGraph, r: Region, *, connected: bool = True) -> bool:
    return not region_report(g, r, connected=connected)


def cut_boundary(g: MetricGraph, r: Region, *, connected: bool = True) -> list[BoundaryCrossing]:
    """One crossing per point where the region's boundary meets an edge."""
    problems = region_report(g, r, connected=connected)
    if problems:
        raise GraphError("invalid region: " + "; ".join(problems))
    out = []
    for eid in sorted(g.edges):
        e = g.edges[eid]
        for lo, hi in covered_intervals(g, r, eid):
            if lo.sign() > 0:
                out.append(BoundaryCrossing(eid, lo, TOWARD_U))
            if hi < e.length:
                out.append(BoundaryCrossing(eid, hi, TOWARD_V))
    return out


def headroom_end(g: MetricGraph, r: Region, c: BoundaryCrossing) -> QF2:
    """Offset where the complement stretch beyond ``c`` ends (next region piece or far endpoint)."""
    e = g.edge(c.edge)
    cover = covered_intervals(g, r, c.edge)
    if c.direction == TOWARD_V:
        ahead = [lo for lo, _ in cover if lo > c.position]
        return min(ahead, default=e.length)
    behind = [hi for _, hi in cover if hi < c.position]
    return max(behind, default=ZERO)


def region_contains(g: MetricGraph, r: Region, p: Point) -> bool:
    if isinstance(p, Vertex):
        return p.name in r.inner_vertices
    return any(lo <= p.offset <= hi for lo, hi in covered_intervals(g, r, p.edge))


# ---- JSON ------------------------------------------------------------------


def graph_to_json(g: MetricGraph) -> dict:
    return {
        "vertices": list(g.vertices),
        "edges": [
            {"id": e.id, "u": e.u, "v": e.v, "length": render(e.length)} for e in g.edges.values()
        ],
        "basepoint": g.basepoint,
    }


def graph_from_json(obj: dict) -> MetricGraph:
    """Load a graph; an interior basepoint ``{"edge", "offset"[, "name"]}`` is subdivided."""
    vertices = list(obj["vertices"])
    edges = [Edge(str(e["id"]), str(e["u"]), str(e["v"]), parse(str(e["length"]))) for e in obj["edges"]]
    base = obj["basepoint"]
    if isinstance(base, dict):
        eid = base["edge"]
        offset = parse(str(base["offset"]))
        name = base.get("name", "q")
        if name in vertices:
            raise GraphError(f"basepoint name {name!r} already used")
        target = next((e for e in edges if e.id == eid), None)
        if target is None:
            raise GraphError(f"unknown edge {eid!r}")
        if not (ZERO < offset < target.length):
            if not offset:
                return MetricGraph(vertices, edges, target.u)
            if offset == target.length:
                return MetricGraph(vertices, edges, target.v)
            raise GraphError("basepoint offset outside edge")
        edges = [e for e in edges if e.id != eid]
        edges.append(Edge(f"{eid}.0", target.u, name, offset))
        edges.append(Edge(f"{eid}.1", name, target.v, target.length - offset))
        vertices.append(name)
        base = name
    return MetricGraph(vertices, edges, str(base))


def point_to_json(p: Point) -> dict:
    if isinstance(p, Vertex):
        return {"vertex": p.name}
    return {"edge": p.edge, "offset": render(p.offset)}


def point_from_json(obj: dict, g: MetricGraph | None = None) -> Point:
    if "vertex" in obj:
        return Vertex(str(obj["vertex"]))
    offset = parse(str(obj["offset"]))
    if g is not None:
        return g.point(str(obj["edge"]), offset)
    return OnEdge(str(obj["edge"]), offset)


def region_to_json(r: Region) -> dict:
    return {
        "vertices": sorted(r.inner_vertices),
        "segments": [{"edge": s.edge, "lo": render(s.lo), "hi": render(s.hi)} for s in r.partial_segments],
    }


def region_from_json(obj: dict) -> Region:
    return Region.of(
        obj.get("vertices", ()),
        [Segment(s["edge"], parse(s["lo"]), parse(s["hi"])) for s in obj.get("segments", ())],
    )
