"""Trace files (JSON lines) and the independent re-validation behind ``metricfire check``.

Row kinds, in file order::

    {"kind": "header", "graph": ..., "divisor": [...], "meta": {...}}
    {"kind": "fire", "ord": "w^1+3", "region": ..., "connected": true,
     "sources": [...], "eps": "...", "cum": "...", "divisor": [...]?}
    {"kind": "limit", "ord": "w^2", "level": 2, "divisor": [...], "tail": "...",
     "tail_per_vertex": {...}, "cum": "...", "chips": {...}, "why": "..."}
    {"kind": "end", "outcome": "reduced", "ord": "...", "divisor": [...],
     "cum": "...", "per_vertex": {...}}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .dhar import is_q_reduced
from .divisor import (
    chips_at_combinatorial_vertices,
    degree,
    divisor_from_json,
    divisor_to_json,
    is_effective_away_from,
    non_q_degree,
)
from .exactnum import ZERO, parse, render
from .firing import FiringError, apply_firing, boundary_vertices, max_legal_epsilon, spec_from_json, spec_to_json
from .metric_graph import GraphError, graph_from_json, graph_to_json, point_from_json, point_to_json
from .ordinal import Ordinal, parse_ordinal, render_ordinal
from .transfinite import Outcome, Trace, TraceStep


class TraceFormatError(ValueError):
    pass


def _lengths_to_json(m: dict) -> dict:
    return {k: render(v) for k, v in sorted(m.items())}


def _lengths_from_json(m: dict) -> dict:
    return {k: parse(v) for k, v in m.items()}


def trace_rows(t: Trace) -> list[dict]:
    rows = [
        {
            "kind": "header",
            "graph": graph_to_json(t.graph),
            "divisor": divisor_to_json(t.initial),
            "meta": t.meta,
        }
    ]
    for s in t.steps:
        if s.kind == "fire":
            row = {"kind": "fire", "ord": render_ordinal(s.ordinal), **spec_to_json(s.spec), "cum": render(s.cum)}
            if s.divisor is not None:
                row["divisor"] = divisor_to_json(s.divisor)
        else:
            row = {
                "kind": "limit",
                "ord": render_ordinal(s.ordinal),
                "level": s.level,
                "divisor": divisor_to_json(s.divisor),
                "tail": render(s.tail),
                "tail_per_vertex": _lengths_to_json(s.tail_per_vertex),
                "cum": render(s.cum),
                "chips": {k: point_to_json(p) for k, p in sorted(s.chips.items())},
                "why": s.justification,
            }
        rows.append(row)
    rows.append(
        {
            "kind": "end",
            "outcome": t.outcome.value if t.outcome is not None else None,
            "ord": render_ordinal(t.ordinal),
            "divisor": divisor_to_json(t.final) if t.final is not None else None,
            "cum": render(t.cumulative_length),
            "per_vertex": _lengths_to_json(t.per_vertex_length),
        }
    )
    return rows


def dumps(t: Trace) -> str:
    return "".join(json.dumps(row, separators=(",", ":")) + "\n" for row in trace_rows(t))


def write_trace(t: Trace, path: str | Path) -> None:
    Path(path).write_text(dumps(t), encoding="utf-8")


def trace_from_rows(rows: Iterable[dict]) -> Trace:
    rows = list(rows)
    if not rows or rows[0].get("kind") != "header":
        raise TraceFormatError("trace must start with a header row")
    head = rows[0]
    g = graph_from_json(head["graph"])
    t = Trace(g, divisor_from_json(head["divisor"], g), meta=dict(head.get("meta", {})))
    ended = False
    for i, row in enumerate(rows[1:], start=1):
        if ended:
            raise TraceFormatError(f"row {i}: data after the end row")
        kind = row.get("kind")
        if kind == "fire":
            snap = row.get("divisor")
            t.steps.append(
                TraceStep(
                    parse_ordinal(row["ord"]),
                    "fire",
                    parse(row["cum"]),
                    spec=spec_from_json(row, g),
                    divisor=divisor_from_json(snap, g) if snap is not None else None,
                )
            )
        elif kind == "limit":
            t.steps.append(
                TraceStep(
                    parse_ordinal(row["ord"]),
                    "limit",
                    parse(row["cum"]),
                    level=int(row["level"]),
                    justification=row.get("why", ""),
                    tail=parse(row["tail"]),
                    chips={k: point_from_json(p, g) for k, p in row.get("chips", {}).items()},
                    divisor=divisor_from_json(row["divisor"], g),
                    tail_per_vertex=_lengths_from_json(row.get("tail_per_vertex", {})),
                )
            )
        elif kind == "end":
            ended = True
            t.outcome = Outcome(row["outcome"]) if row.get("outcome") else None
            t.ordinal = parse_ordinal(row["ord"])
            t.final = divisor_from_json(row["divisor"], g) if row.get("divisor") is not None else None
            t.cumulative_length = parse(row["cum"])
            t.per_vertex_length = _lengths_from_json(row.get("per_vertex", {}))
        else:
            raise TraceFormatError(f"row {i}: unknown kind {kind!r}")
    if not ended:
        raise TraceFormatError("trace has no end row")
    return t


def loads(text: str) -> Trace:
    rows = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"line {n}: {exc}") from exc
    return trace_from_rows(rows)


def read_trace(path: str | Path) -> Trace:
    return loads(Path(path).read_text(encoding="utf-8"))


# ---- re-validation ------------------------------------------------------------------


def check(t: Trace) -> list[str]:
    """Replay ``t`` and list every invariant it violates (empty means valid).

    Replay stops at the first step that cannot be applied, since later
    steps would be checked against a meaningless divisor.
    """
    problems: list[str] = []
    g = t.graph
    d = t.initial
    if not is_effective_away_from(d, g.q):
        return ["initial divisor is not effective away from q"]
    deg = degree(d)
    ceiling = Ordinal.omega_power(non_q_degree(d, g.q))
    clock = Ordinal()
    cum = ZERO
    per_vertex: dict = {}
    for i, s in enumerate(t.steps):
        where = f"step {i} ({render_ordinal(s.ordinal)})"
        if s.kind == "fire":
            expected = clock.successor()
            if s.ordinal != expected:
                problems.append(f"{where}: clock should read {render_ordinal(expected)}")
            try:
                eps = max_legal_epsilon(g, d, s.spec.region, s.spec.sources, connected=s.spec.connected)
            except (FiringError, GraphError) as exc:
                problems.append(f"{where}: illegal firing: {exc}")
                return problems
            if eps != s.spec.epsilon:
                problems.append(f"{where}: not maximal, epsilon {render(s.spec.epsilon)} but maximum is {render(eps)}")
                return problems
            d = apply_firing(g, d, s.spec)
            cum = cum + s.spec.epsilon
            for v in boundary_vertices(g, s.spec):
                per_vertex[v] = per_vertex.get(v, ZERO) + s.spec.epsilon
        elif s.kind == "limit":
            if s.level < 1:
                problems.append(f"{where}: limit level {s.level} < 1")
                return problems
            expected = clock.next_limit(s.level)
            if s.ordinal != expected:
                problems.append(f"{where}: clock should read {render_ordinal(expected)}")
            if s.divisor is None:
                problems.append(f"{where}: limit without a divisor")
                return problems
            d = s.divisor
            if s.tail.sign() < 0:
                problems.append(f"{where}: negative tail length")
            cum = cum + s.tail
            for v, x in s.tail_per_vertex.items():
                per_vertex[v] = per_vertex.get(v, ZERO) + x
            count = chips_at_combinatorial_vertices(g, d)
            if count < s.level + 1:
                problems.append(f"{where}: only {count} chips at combinatorial vertices at a level-{s.level} limit")
        else:
            problems.append(f"{where}: unknown step kind {s.kind!r}")
            return problems
        clock = s.ordinal
        if degree(d) != deg:
            problems.append(f"{where}: degree changed from {deg} to {degree(d)}")
            return problems
        if not is_effective_away_from(d, g.q):
            problems.append(f"{where}: divisor is negative away from q")
            return problems
        if s.cum != cum:
            problems.append(f"{where}: cumulative length {render(s.cum)} should be {render(cum)}")
        if s.divisor is not None and s.divisor != d:
            problems.append(f"{where}: snapshot disagrees with replay")
        if not clock < ceiling:
            problems.append(f"{where}: clock reached {render_ordinal(ceiling)}")
    if t.ordinal != clock:
        problems.append(f"end: final ordinal {render_ordinal(t.ordinal)} should be {render_ordinal(clock)}")
    if t.cumulative_length != cum:
        problems.append(f"end: cumulative length {render(t.cumulative_length)} should be {render(cum)}")
    if t.per_vertex_length != per_vertex:
        problems.append("end: per-vertex lengths disagree with replay")
    if any(x > cum for x in per_vertex.values()):
        problems.append("end: a per-vertex length exceeds the cumulative length")
    if t.final is not None and t.final != d:
        problems.append("end: final divisor disagrees with replay")
    if t.outcome is Outcome.REDUCED and not is_q_reduced(g, d):
        problems.append("end: outcome is reduced but the final divisor is not q-reduced")
    return problems
