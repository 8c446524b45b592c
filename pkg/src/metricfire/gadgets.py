"""The Euclidean gadget and its nested omega^n gluing, with scripted greedy strategies.

Rows ``0..R-1`` each carry a rung edge ``(u_i, v_i)`` with one labelled chip
``c_i``.  Every pair of ``u``'s and every pair of ``v``'s is joined, and every
``u_i``/``v_i`` is joined to ``q``.  All edges have the same length and every
edge without a labelled chip carries a chip at its midpoint.

One subtraction of ``a`` from ``b`` is the pair of firings

* Firing 1: region ``{u_p, u_x, u_y}``; the ``a``-chip hits ``v``.
* Firing 2: region ``{v_a, v_p}``; the pivot chip ``c_p`` returns to ``u_p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

from .divisor import Divisor
from .exactnum import QF2, ZERO, floor_ratio, geometric_sum, render
from .firing import FiringSpec, max_legal_epsilon
from .metric_graph import Edge, MetricGraph, Region, cut_boundary
from .transfinite import (
    Budget,
    Chain,
    ChipTracker,
    DeclareLimit,
    DharStrategy,
    Fire,
    StrategyError,
    Trace,
    run,
)


class GadgetError(ValueError):
    pass


# ---- Euclid bookkeeping ---------------------------------------------------------


@dataclass(frozen=True)
class EuclidState:
    index: int
    a: QF2
    b: QF2
    n: int
    l: QF2

    @property
    def remainder(self) -> QF2:
        return self.b - self.n * self.a


def euclid_states(a, b, max_phases: int | None = None) -> Iterator[EuclidState]:
    """Phases of the subtractive Euclidean algorithm; stops when the remainder hits 0."""
    a, b = QF2.of(a), QF2.of(b)
    if not (ZERO < a < b):
        raise GadgetError(f"need 0 < a < b, got a={a}, b={b}")
    i = 0
    while max_phases is None or i < max_phases:
        n = floor_ratio(b, a)
        st = EuclidState(i, a, b, n, n * a)
        yield st
        if not st.remainder:
            return
        a, b = st.remainder, a
        i += 1


@dataclass(frozen=True)
class PredictedTotals:
    closed_form: bool
    terminates: bool | None = None
    subtractions: int | None = None
    sum_l: QF2 | None = None
    total_length: QF2 | None = None
    quotients: tuple = ()
    ratio: QF2 | None = None
    bound: QF2 | None = None  # 4b

    @property
    def within_bound(self) -> bool | None:
        if self.sum_l is None:
            return None
        return self.sum_l <= self.bound


def predicted_totals(a, b, rational_cap: int = 10**4) -> PredictedTotals:
    """Subtraction count and scripted length for ``(a, b)``.

    Rational inputs are run to completion.  Irrational inputs get a closed
    form only when one Euclid phase rescales the pair, ``(b - n a, a) = r (a, b)``.
    """
    a, b = QF2.of(a), QF2.of(b)
    if not (ZERO < a < b):
        raise GadgetError(f"need 0 < a < b, got a={a}, b={b}")
    bound = 4 * b
    if a.is_rational() and b.is_rational():
        states = list(euclid_states(a, b, rational_cap))
        if states[-1].remainder:
            raise GadgetError("rational Euclid did not finish within the cap")
        sum_l = sum((s.l for s in states), ZERO)
        return PredictedTotals(
            True, True, sum(s.n for s in states), sum_l, 2 * sum_l, tuple(s.n for s in states), None, bound
        )
    n0 = floor_ratio(b, a)
    rem = b - n0 * a
    ratio = a / b
    if rem and rem == ratio * a:
        sum_l = geometric_sum(n0 * a, ratio)
        return PredictedTotals(True, False, None, sum_l, 2 * sum_l, (n0,), ratio, bound)
    return PredictedTotals(False, None, bound=bound)


# ---- graph construction ------------------------------------------------------------


def u(i: int) -> str:
    return f"u{i}"


def v(i: int) -> str:
    return f"v{i}"


def rung(i: int) -> str:
    return f"u{i}-v{i}"


def chip(i: int) -> str:
    return f"c{i}"


def row_graph(rows: int, length: QF2) -> MetricGraph:
    vertices = ["q"] + [u(i) for i in range(rows)] + [v(i) for i in range(rows)]
    edges = []
    for i in range(rows):
        edges.append(Edge(rung(i), u(i), v(i), length))
    for i in range(rows):
        edges.append(Edge(f"u{i}-q", u(i), "q", length))
        edges.append(Edge(f"v{i}-q", v(i), "q", length))
    for i in range(rows):
        for j in range(i + 1, rows):
            edges.append(Edge(f"u{i}-u{j}", u(i), u(j), length))
            edges.append(Edge(f"v{i}-v{j}", v(i), v(j), length))
    return MetricGraph(vertices, edges, "q")


@dataclass
class GadgetInstance:
    graph: MetricGraph
    divisor: Divisor
    chips: dict  # label -> (edge, offset)
    make_strategy: Callable[..., object]
    predictions: PredictedTotals
    metadata: dict = field(default_factory=dict)

    def strategy(self, **kwargs):
        return self.make_strategy(**kwargs)

    def run(self, budget: Budget | None = None, **kwargs) -> Trace:
        return run(self.graph, self.divisor, self.strategy(**kwargs), budget, meta=self.metadata)


# ---- scripting machinery -------------------------------------------------------------


@dataclass
class Mark:
    """Snapshot at the end of a phase (level 1) or block (higher levels)."""

    offsets: dict
    cum: QF2
    per_vertex: dict
    scale: tuple
    signature: tuple


class Script:
    """State shared by the scripted generator: chip identities and the runner's view."""

    def __init__(self, g: MetricGraph, chips: dict, drift_fraction: Fraction = Fraction(1, 10)):
        self.g = g
        self.tracker = ChipTracker(g, chips)
        self.divisor: Divisor | None = None
        self.trace: Trace | None = None
        self.euclid_log: list[EuclidState] = []
        self.drift_fraction = drift_fraction
        self.min_margin: QF2 | None = None
        self.signature: list = []
        self.terminated = False

    # -- firing helpers
    def fire(self, vertices, designated: dict) -> tuple[FiringSpec, list]:
        region = Region.of(vertices)
        sources, movers = [], []
        for c in cut_boundary(self.g, region):
            label = designated.get(c.edge, f"m:{c.edge}")
            if label not in self.tracker.pos:
                raise GadgetError(f"no chip to push across {c.edge}")
            sources.append((c, self.tracker.point(label)))
            movers.append((label, c.sign()))
        eps = max_legal_epsilon(self.g, self.divisor, region, sources)
        self.signature.append((tuple(sorted(vertices)), tuple(sorted(designated.items()))))
        return FiringSpec(region, tuple(sources), eps), movers

    def commit(self, movers, eps: QF2) -> None:
        for label, sign in movers:
            self.tracker.move(label, eps * sign)
        self.check_drift()
        if self.tracker.divisor() != self.divisor:
            raise StrategyError("chip tracker disagrees with the runner's divisor")

    def check_drift(self) -> None:
        for label, (eid, off) in self.tracker.pos.items():
            if not label.startswith("m:"):
                continue
            length = self.g.edges[eid].length
            margin = min(off, length - off)
            if self.min_margin is None or margin < self.min_margin:
                self.min_margin = margin
            if margin <= length * self.drift_fraction:
                raise StrategyError(f"drift safety violated by {label}: margin {margin}")

    def dist_to_v(self, row: int) -> QF2:
        eid, off = self.tracker.pos[chip(row)]
        return self.g.edges[eid].length - off

    def mark(self, scale: tuple) -> Mark:
        return Mark(
            self.tracker.offsets(),
            self.trace.cumulative_length,
            dict(self.trace.per_vertex_length),
            scale,
            tuple(self.signature),
        )


def subtract(s: Script, pivot: int, a_row: int, b_row: int):
    """One subtraction: two maximal legal firings of length ``dist(a_row)``."""
    a = s.dist_to_v(a_row)
    spec, movers = s.fire(
        [u(pivot), u(a_row), u(b_row)],
        {rung(pivot): chip(pivot), rung(a_row): chip(a_row), rung(b_row): chip(b_row)},
    )
    if spec.epsilon != a:
        raise GadgetError(f"Firing 1 has epsilon {spec.epsilon}, expected {a}")
    yield Fire(spec)
    s.commit(movers, spec.epsilon)
    spec, movers = s.fire([v(a_row), v(pivot)], {rung(pivot): chip(pivot), rung(a_row): chip(a_row)})
    if spec.epsilon != a:
        raise GadgetError(f"Firing 2 has epsilon {spec.epsilon}, expected {a}")
    yield Fire(spec)
    s.commit(movers, spec.epsilon)


def euclid_phase(s: Script, pivot: int, x_row: int, y_row: int, log: bool = True):
    """Subtract the nearer chip's distance from the farther one as often as possible."""
    dx, dy = s.dist_to_v(x_row), s.dist_to_v(y_row)
    a_row, b_row = (x_row, y_row) if dx < dy else (y_row, x_row)
    a, b = min(dx, dy), max(dx, dy)
    n = floor_ratio(b, a)
    if log:
        s.euclid_log.append(EuclidState(len(s.euclid_log), a, b, n, n * a))
    s.signature.append(("phase", a_row, n))
    for _ in range(n):
        yield from subtract(s, pivot, a_row, b_row)
    return not s.dist_to_v(b_row)


def recharge(s: Script, target: int, donor: int):
    """Copy the donor's distance onto the discharged ``target`` chip via ``c_0``."""
    d = s.dist_to_v(donor)
    spec, movers = s.fire([u(0), u(donor)], {rung(0): chip(0), rung(donor): chip(donor)})
    if spec.epsilon != d:
        raise GadgetError(f"recharge Firing 1 has epsilon {spec.epsilon}, expected {d}")
    yield Fire(spec)
    s.commit(movers, spec.epsilon)
    spec, movers = s.fire(
        [v(0), v(target), v(donor)],
        {rung(0): chip(0), rung(target): chip(target), rung(donor): chip(donor)},
    )
    if spec.epsilon != d:
        raise GadgetError(f"recharge Firing 2 has epsilon {spec.epsilon}, expected {d}")
    yield Fire(spec)
    s.commit(movers, spec.epsilon)


def self_similar_limit(s: Script, marks: list[Mark], level: int, what: str) -> DeclareLimit:
    """Exact limit from the last two periods of two marks each.

    Requires the same firing pattern in both periods and every increment
    (chip offsets, total length, per-vertex length, scale) multiplied by one
    ratio ``0 < r < 1``; the remaining tail is then a geometric series.
    """
    if len(marks) < 5:
        raise GadgetError("need at least four periods' worth of marks to certify self-similarity")
    m0, m1, m2 = marks[-5], marks[-3], marks[-1]
    sig1 = m1.signature[len(m0.signature):]
    sig2 = m2.signature[len(m1.signature):]
    if sig1 != sig2:
        raise GadgetError("firing pattern is not periodic")
    if not m1.scale or not m1.scale[0]:
        raise GadgetError("degenerate scale")
    ratio = m2.scale[0] / m1.scale[0]
    if not (ZERO < ratio < 1):
        raise GadgetError(f"scale ratio {ratio} is not in (0, 1)")
    for x0, x1, x2 in zip(m0.scale, m1.scale, m2.scale):
        if x2 != ratio * x1 or x1 != ratio * x0:
            raise GadgetError("scale is not geometric")

    def tail(v0: QF2, v1: QF2, v2: QF2) -> QF2:
        d1, d2 = v1 - v0, v2 - v1
        if d2 != ratio * d1:
            raise GadgetError("increments are not geometric")
        return geometric_sum(d2 * ratio, ratio)

    offsets = {}
    for label in m2.offsets:
        offsets[label] = m2.offsets[label] + tail(m0.offsets[label], m1.offsets[label], m2.offsets[label])
    cum_tail = tail(m0.cum, m1.cum, m2.cum)
    per_vertex_tail = {}
    for vx in sorted(set(m2.per_vertex) | set(m1.per_vertex) | set(m0.per_vertex)):
        t = tail(m0.per_vertex.get(vx, ZERO), m1.per_vertex.get(vx, ZERO), m2.per_vertex.get(vx, ZERO))
        if t:
            per_vertex_tail[vx] = t
    # the runner's view must be at the last mark
    if s.tracker.offsets() != m2.offsets or s.trace.cumulative_length != m2.cum:
        raise GadgetError("limit declared away from the last mark")
    for label, off in offsets.items():
        eid = s.tracker.pos[label][0]
        s.tracker.pos[label] = (eid, off)
        if off.sign() < 0 or off > s.g.edges[eid].length:
            raise GadgetError(f"chip {label} leaves its edge in the limit")
    limit = s.tracker.divisor()
    why = f"{what}: periodic pattern, increments scale by {render(ratio)}"
    return DeclareLimit(
        limit,
        level,
        why,
        tail=cum_tail,
        tail_per_vertex=per_vertex_tail,
        chips={k: s.tracker.point(k) for k in sorted(s.tracker.pos) if k.startswith("c")},
    )


class ScriptedStrategy:
    """Adapts a generator program over a :class:`Script` to the runner's strategy protocol."""

    name = "scripted"

    def __init__(self, script: Script, program):
        self.script = script
        self.program = program
        self.gen = None

    def next(self, g, divisor, trace):
        from .transfinite import Done

        self.script.divisor = divisor
        self.script.trace = trace
        if self.gen is None:
            self.gen = self.program(self.script)
        try:
            return next(self.gen)
        except StopIteration:
            if "scripted_fires" not in trace.meta:
                trace.meta["scripted_fires"] = len(trace.fires)
                trace.meta["scripted_length"] = render(trace.cumulative_length)
                trace.meta["scripted_ordinal"] = str(trace.ordinal)
            return Done()


def _limit_then_sync(s: Script, decl: DeclareLimit):
    s.signature.append(("limit", decl.level))
    yield decl
    if s.tracker.divisor() != s.divisor:
        raise StrategyError("limit divisor was not installed")


def euclid_program(pivot: int, x_row: int, y_row: int, phases: int, declare: bool = True):
    """Scripted Euclid run on rows ``x_row``/``y_row`` with pivot ``c_pivot``."""

    def program(s: Script):
        marks = [s.mark((s.dist_to_v(x_row), s.dist_to_v(y_row)))]
        for _ in range(phases):
            finished = yield from euclid_phase(s, pivot, x_row, y_row)
            marks.append(s.mark((s.dist_to_v(x_row), s.dist_to_v(y_row))))
            if finished:
                s.terminated = True
                return
        if declare:
            decl = self_similar_limit(s, marks, 1, "Euclid run")
            yield from _limit_then_sync(s, decl)

    return program


def _level_program(s: Script, level: int, phases: int, outer: int):
    """Run the level-``level`` process to its omega^level limit; returns False if it terminated."""
    if level == 1:
        marks = [s.mark((s.dist_to_v(1), s.dist_to_v(2)))]
        for _ in range(phases):
            finished = yield from euclid_phase(s, 0, 1, 2)
            marks.append(s.mark((s.dist_to_v(1), s.dist_to_v(2))))
            if finished:
                s.terminated = True
                return False
        decl = self_similar_limit(s, marks, 1, "bottom Euclid run")
        yield from _limit_then_sync(s, decl)
        return True
    x, y = 2 * level - 1, 2 * level
    ok = yield from _level_program(s, level - 1, phases, outer)
    if not ok:
        return False
    marks = [s.mark((s.dist_to_v(x), s.dist_to_v(y)))]
    for _ in range(outer - 1):
        finished = yield from euclid_phase(s, 0, x, y, log=False)
        if finished:
            s.terminated = True
            return False
        for lower in range(level, 1, -1):
            yield from recharge(s, 2 * lower - 3, 2 * lower - 1)
            yield from recharge(s, 2 * lower - 2, 2 * lower)
        ok = yield from _level_program(s, level - 1, phases, outer)
        if not ok:
            return False
        marks.append(s.mark((s.dist_to_v(x), s.dist_to_v(y))))
    decl = self_similar_limit(s, marks, level, f"level-{level} gluing")
    yield from _limit_then_sync(s, decl)
    return True


def omega_program(n: int, phases: int, outer: int):
    def program(s: Script):
        yield from _level_program(s, n, phases, outer)

    return program


# ---- constructors ----------------------------------------------------------------------


def _midpoint_chips(g: MetricGraph, skip: set) -> dict:
    return {f"m:{eid}": (eid, e.length / 2) for eid, e in g.edges.items() if eid not in skip}


def _tracker_divisor(g: MetricGraph, chips: dict) -> Divisor:
    return ChipTracker(g, chips).divisor()


def build_euclid(a, b, *, pivot: int = 1, dry_run: bool = True) -> GadgetInstance:
    """Three-row gadget: ``c_pivot`` at ``u_pivot``, the other two chips at distances ``a`` and ``b`` from ``v``."""
    a, b = QF2.of(a), QF2.of(b)
    if not (ZERO < a < b):
        raise GadgetError(f"need 0 < a < b, got a={a}, b={b}")
    if pivot not in (0, 1):
        raise GadgetError("pivot must be 0 or 1")
    length = 10 * b
    g = row_graph(3, length)
    x_row, y_row = [r for r in range(3) if r != pivot]
    chips = {
        chip(pivot): (rung(pivot), ZERO),
        chip(x_row): (rung(x_row), length - a),
        chip(y_row): (rung(y_row), length - b),
    }
    skip = {rung(x_row), rung(y_row)}
    chips.update(_midpoint_chips(g, skip))
    d = _tracker_divisor(g, chips)

    def make_strategy(phases: int = 40, declare: bool = True, cleanup: bool = True):
        script = Script(g, chips)
        strat = ScriptedStrategy(script, euclid_program(pivot, x_row, y_row, phases, declare))
        return Chain(strat, DharStrategy()) if cleanup else strat

    inst = GadgetInstance(
        g,
        d,
        chips,
        make_strategy,
        predicted_totals(a, b),
        {
            "gadget": "euclid",
            "a": render(a),
            "b": render(b),
            "pivot": pivot,
            "edge_length": render(length),
            "edges": "rungs (u_i,v_i); (u_i,q), (v_i,q); (u_i,u_j), (v_i,v_j)",
        },
    )
    if dry_run:
        _dry_run(inst, Budget(max_fires=8, max_limits=0), phases=2, declare=False)
    return inst


def build_omega_n(n: int, a, b, *, dry_run: bool = True) -> GadgetInstance:
    """``n`` glued copies: bottom three rows run Euclid, each higher row pair recharges the one below."""
    a, b = QF2.of(a), QF2.of(b)
    if n < 1:
        raise GadgetError("n must be >= 1")
    if n == 1:
        return build_euclid(a, b, dry_run=dry_run)
    if not (ZERO < a < b):
        raise GadgetError(f"need 0 < a < b, got a={a}, b={b}")
    rows = 2 * n + 1
    length = 10 * b * 4 ** (n - 1)
    g = row_graph(rows, length)
    chips = {chip(0): (rung(0), ZERO)}
    for level in range(1, n + 1):
        chips[chip(2 * level - 1)] = (rung(2 * level - 1), length - a)
        chips[chip(2 * level)] = (rung(2 * level), length - b)
    chips.update(_midpoint_chips(g, {rung(i) for i in range(1, rows)}))
    d = _tracker_divisor(g, chips)

    def make_strategy(phases: int = 4, outer: int = 5, cleanup: bool = True):
        if phases < 4 or outer < 5:
            raise GadgetError("self-similarity certification needs phases >= 4 and outer >= 5")
        script = Script(g, chips)
        strat = ScriptedStrategy(script, omega_program(n, phases, outer))
        return Chain(strat, DharStrategy()) if cleanup else strat

    inst = GadgetInstance(
        g,
        d,
        chips,
        make_strategy,
        predicted_totals(a, b),
        {
            "gadget": "omega",
            "n": n,
            "a": render(a),
            "b": render(b),
            "pivot": 0,
            "edge_length": render(length),
            "recharge_chips": "row pair (2k-1, 2k) starts at distances (a, b) from v",
        },
    )
    if dry_run:
        _dry_run(inst, Budget(max_fires=60, max_limits=1))
    return inst


def _dry_run(inst: GadgetInstance, budget: Budget, **kwargs) -> None:
    try:
        inst.run(budget, **kwargs)
    except (StrategyError, GadgetError) as exc:
        raise GadgetError(f"gadget reconstruction failed its dry run: {exc}") from exc
