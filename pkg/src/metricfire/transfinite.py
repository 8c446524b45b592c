"""Greedy reduction runs clocked by ordinals, with exact limit passages."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .dhar import NodeGraph, dhar_firing, is_q_reduced
from .divisor import (
    Divisor,
    chips_at_combinatorial_vertices,
    degree,
    is_effective_away_from,
)
from .exactnum import QF2, ZERO
from .firing import (
    FiringError,
    FiringSpec,
    apply_firing,
    boundary_vertices,
    default_sources,
    max_legal_epsilon,
    maximal_firing,
)
from .metric_graph import GraphError, MetricGraph, Point, point_key
from .ordinal import Ordinal


class StrategyError(RuntimeError):
    """A strategy asked for something the runner refuses to do."""


# ---- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class Fire:
    spec: FiringSpec


@dataclass(frozen=True)
class DeclareLimit:
    """Install ``divisor`` as the limit of the current infinite run.

    ``tail`` is the exact total length of the firings skipped over and
    ``tail_per_vertex`` its share per boundary vertex; ``level`` is 1 plus
    the nesting depth of the limit.
    """

    divisor: Divisor
    level: int
    justification: str
    tail: QF2 = ZERO
    tail_per_vertex: dict = field(default_factory=dict)
    chips: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Done:
    pass


class Strategy(Protocol):
    def next(self, g: MetricGraph, divisor: Divisor, trace: "Trace"): ...


class Outcome(str, Enum):
    REDUCED = "reduced"
    BUDGET_EXHAUSTED = "budget_exhausted"
    NON_TERMINATING = "non_terminating_detected"


@dataclass
class Budget:
    max_fires: int = 10**5
    max_limits: int = 10**3


# ---- trace -------------------------------------------------------------------


@dataclass
class TraceStep:
    ordinal: Ordinal
    kind: str  # "fire" | "limit"
    cum: QF2
    spec: FiringSpec | None = None
    level: int = 0
    justification: str = ""
    tail: QF2 = ZERO
    chips: dict = field(default_factory=dict)
    divisor: Divisor | None = None
    tail_per_vertex: dict = field(default_factory=dict)

    @property
    def eps(self) -> QF2:
        return self.spec.epsilon if self.spec is not None else ZERO


@dataclass
class Trace:
    graph: MetricGraph
    initial: Divisor
    steps: list = field(default_factory=list)
    cumulative_length: QF2 = ZERO
    per_vertex_length: dict = field(default_factory=dict)
    outcome: Outcome | None = None
    final: Divisor | None = None
    ordinal: Ordinal = field(default_factory=Ordinal)
    meta: dict = field(default_factory=dict)

    @property
    def fires(self) -> list[TraceStep]:
        return [s for s in self.steps if s.kind == "fire"]

    @property
    def limits(self) -> list[TraceStep]:
        return [s for s in self.steps if s.kind == "limit"]


@dataclass
class RunState:
    graph: MetricGraph
    divisor: Divisor
    trace: Trace
    limits_used: int = 0


def _add_length(per_vertex: dict, vertices, eps: QF2) -> None:
    for v in vertices:
        per_vertex[v] = per_vertex.get(v, ZERO) + eps


def fire_step(state: RunState, spec: FiringSpec, snapshot: bool = False) -> None:
    """Validate ``spec`` as a maximal legal firing and apply it."""
    g = state.graph
    try:
        eps = max_legal_epsilon(g, state.divisor, spec.region, spec.sources, connected=spec.connected)
    except (FiringError, GraphError) as exc:
        raise StrategyError(f"illegal firing at step {len(state.trace.steps)}: {exc}") from exc
    if eps != spec.epsilon:
        raise StrategyError(f"non-maximal firing: epsilon {spec.epsilon} but maximum is {eps}")
    before = degree(state.divisor)
    state.divisor = apply_firing(g, state.divisor, spec)
    if degree(state.divisor) != before:
        raise StrategyError("firing changed the degree")
    t = state.trace
    t.ordinal = t.ordinal.successor()
    t.cumulative_length = t.cumulative_length + spec.epsilon
    _add_length(t.per_vertex_length, boundary_vertices(g, spec), spec.epsilon)
    t.steps.append(
        TraceStep(t.ordinal, "fire", t.cumulative_length, spec=spec, divisor=state.divisor if snapshot else None)
    )


def pass_to_limit(state: RunState, decl: DeclareLimit) -> RunState:
    """Install an exact limit divisor and jump the clock to the next limit ordinal."""
    g = state.graph
    if degree(decl.divisor) != degree(state.divisor):
        raise StrategyError(
            f"limit divisor has degree {degree(decl.divisor)}, current degree is {degree(state.divisor)}"
        )
    if not is_effective_away_from(decl.divisor, g.q):
        raise StrategyError("limit divisor has negative chips away from q")
    if decl.level < 1:
        raise StrategyError("limit level must be >= 1")
    if decl.tail.sign() < 0:
        raise StrategyError("negative tail length")
    t = state.trace
    t.ordinal = t.ordinal.next_limit(decl.level)
    t.cumulative_length = t.cumulative_length + decl.tail
    for v, length in decl.tail_per_vertex.items():
        _add_length(t.per_vertex_length, [v], length)
    state.divisor = decl.divisor
    state.limits_used += 1
    t.steps.append(
        TraceStep(
            t.ordinal,
            "limit",
            t.cumulative_length,
            level=decl.level,
            justification=decl.justification,
            tail=decl.tail,
            chips=dict(decl.chips),
            divisor=decl.divisor,
            tail_per_vertex=dict(decl.tail_per_vertex),
        )
    )
    return state


def run(
    g: MetricGraph,
    d0: Divisor,
    strategy: Strategy,
    budget: Budget | None = None,
    snapshot_every: int = 50,
    meta: dict | None = None,
) -> Trace:
    """Drive ``strategy`` from ``d0`` until Done, budget exhaustion, or a refused limit."""
    budget = budget or Budget()
    if not is_effective_away_from(d0, g.q):
        raise StrategyError("initial divisor must be effective away from q")
    trace = Trace(g, d0, meta=dict(meta or {}))
    state = RunState(g, d0, trace)
    fires = 0
    while True:
        action = strategy.next(g, state.divisor, trace)
        if isinstance(action, Fire):
            if fires >= budget.max_fires:
                trace.outcome = Outcome.BUDGET_EXHAUSTED
                break
            fires += 1
            fire_step(state, action.spec, snapshot=snapshot_every > 0 and fires % snapshot_every == 0)
        elif isinstance(action, DeclareLimit):
            if state.limits_used >= budget.max_limits:
                trace.outcome = Outcome.NON_TERMINATING
                break
            pass_to_limit(state, action)
        elif isinstance(action, Done):
            if not is_q_reduced(g, state.divisor):
                raise StrategyError("strategy reported Done on a divisor that is not q-reduced")
            trace.outcome = Outcome.REDUCED
            break
        else:
            raise StrategyError(f"unknown action {action!r}")
    trace.final = state.divisor
    return trace


@dataclass
class Stats:
    cumulative: QF2
    per_vertex: dict
    epsilons: list
    limit_counts: list  # (ordinal, level, chips at combinatorial vertices)


def trace_stats(t: Trace) -> Stats:
    limit_counts = [
        (s.ordinal, s.level, chips_at_combinatorial_vertices(t.graph, s.divisor)) for s in t.limits
    ]
    return Stats(
        cumulative=t.cumulative_length,
        per_vertex=dict(t.per_vertex_length),
        epsilons=[s.eps for s in t.fires],
        limit_counts=limit_counts,
    )


# ---- strategies ----------------------------------------------------------------


class DharStrategy:
    """Canonical Dhar firings until the divisor is q-reduced."""

    name = "dhar"

    def next(self, g, divisor, trace):
        if is_q_reduced(g, divisor):
            return Done()
        return Fire(dhar_firing(g, divisor))


def _shrink_to_legal(ng: NodeGraph, d: Divisor, inside: set) -> set:
    """Largest subset of ``inside`` in which every node can feed all of its outward pieces."""
    inside = set(inside)
    changed = True
    while changed:
        changed = False
        for x in sorted(inside, key=point_key):
            out = sum(1 for piece in ng.around[x] if ng.other(piece, x) not in inside)
            if d[x] < out:
                inside.discard(x)
                changed = True
    return inside


def _node_components(ng: NodeGraph, nodes: set) -> list[set]:
    comps, seen = [], set()
    for start in sorted(nodes, key=point_key):
        if start in seen:
            continue
        comp, stack = {start}, [start]
        seen.add(start)
        while stack:
            x = stack.pop()
            for piece in ng.around[x]:
                y = ng.other(piece, x)
                if y in nodes and y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        comps.append(comp)
    return comps


def random_legal_firing(g: MetricGraph, d: Divisor, rng: random.Random, attempts: int = 8) -> FiringSpec | None:
    """A maximal legal firing of a random connected region, or None when ``d`` is q-reduced."""
    ng = NodeGraph(g, d)
    candidates = sorted((p for p in ng.nodes if p != g.q), key=point_key)
    legal: set = set()
    for _ in range(attempts):
        legal = _shrink_to_legal(ng, d, {p for p in candidates if rng.random() < 0.5})
        if legal:
            break
    else:
        legal = _shrink_to_legal(ng, d, set(candidates))
        if not legal:
            return None
    comps = _node_components(ng, legal)
    chosen = comps[rng.randrange(len(comps))]
    # swallow complement pockets cut off from q so the region's complement stays connected
    outside = set(ng.nodes) - chosen
    for pocket in _node_components(ng, outside):
        if g.q not in pocket:
            chosen |= pocket
    region = ng.region_of(chosen)
    return maximal_firing(g, d, region, default_sources(g, region))


class RandomGreedyStrategy:
    """Seeded random maximal legal firings; hands off (Done) after ``max_fires`` of its own."""

    name = "random"

    def __init__(self, seed: int = 0, max_fires: int | None = None):
        self.rng = random.Random(seed)
        self.max_fires = max_fires
        self.fired = 0

    def next(self, g, divisor, trace):
        if self.max_fires is not None and self.fired >= self.max_fires:
            return Done()
        spec = random_legal_firing(g, divisor, self.rng)
        if spec is None:
            return Done()
        self.fired += 1
        return Fire(spec)


class Chain:
    """Run strategies in order; each one's Done hands over to the next."""

    def __init__(self, *strategies):
        self.strategies = list(strategies)
        self.index = 0

    def next(self, g, divisor, trace):
        while True:
            action = self.strategies[self.index].next(g, divisor, trace)
            if isinstance(action, Done) and self.index < len(self.strategies) - 1:
                self.index += 1
                continue
            return action


# ---- chip identity ---------------------------------------------------------------


class ChipTracker:
    """Labelled chips in home-edge coordinates ``(edge, offset)``.

    A chip stays on its home edge even while it sits on an endpoint, so
    per-chip displacements are signed offset differences.
    """

    def __init__(self, g: MetricGraph, chips: dict):
        self.g = g
        self.pos: dict[str, tuple[str, QF2]] = dict(chips)

    def point(self, label: str) -> Point:
        eid, off = self.pos[label]
        return self.g.point(eid, off)

    def move(self, label: str, delta: QF2) -> None:
        eid, off = self.pos[label]
        new = off + delta
        e = self.g.edges[eid]
        if new.sign() < 0 or new > e.length:
            raise StrategyError(f"chip {label} would leave its edge {eid}")
        self.pos[label] = (eid, new)

    def offsets(self) -> dict[str, QF2]:
        return {k: off for k, (_, off) in self.pos.items()}

    def divisor(self, extra: Divisor | None = None) -> Divisor:
        items = [(self.point(k), 1) for k in self.pos]
        if extra is not None:
            items += list(extra.items())
        return Divisor(items)

    def labels_at(self, p: Point) -> list[str]:
        return sorted(k for k in self.pos if self.point(k) == p)

    def points(self) -> dict[str, Point]:
        return {k: self.point(k) for k in sorted(self.pos)}
