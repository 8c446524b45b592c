"""Divisors: finite integer chip configurations on a metric graph."""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

from .metric_graph import MetricGraph, Point, Vertex, point_from_json, point_key, point_to_json


class Divisor(Mapping):
    """Immutable map point -> nonzero chip count.  Missing points hold 0 chips."""

    __slots__ = ("_chips", "_hash")

    def __init__(self, chips: Mapping[Point, int] | Iterable[tuple[Point, int]] = ()):
        items = chips.items() if isinstance(chips, Mapping) else chips
        acc: dict[Point, int] = {}
        for p, n in items:
            acc[p] = acc.get(p, 0) + int(n)
        self._chips = {p: n for p, n in acc.items() if n}
        self._hash = None

    def __getitem__(self, p: Point) -> int:
        return self._chips.get(p, 0)

    def __iter__(self) -> Iterator[Point]:
        return iter(sorted(self._chips, key=point_key))

    def __len__(self) -> int:
        return len(self._chips)

    def __contains__(self, p) -> bool:
        return p in self._chips

    def __eq__(self, other):
        if isinstance(other, Divisor):
            return self._chips == other._chips
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._chips.items()))
        return self._hash

    def __add__(self, other: "Divisor") -> "Divisor":
        return apply_delta(self, other)

    def __neg__(self) -> "Divisor":
        return Divisor({p: -n for p, n in self._chips.items()})

    def __sub__(self, other: "Divisor") -> "Divisor":
        return apply_delta(self, -other)

    def __repr__(self):
        body = ", ".join(f"{p}: {self._chips[p]}" for p in self)
        return f"Divisor({{{body}}})"

    @property
    def support(self) -> list[Point]:
        return list(self)


def degree(d: Divisor) -> int:
    return sum(d.values())


def is_effective_away_from(d: Divisor, q: Vertex | str) -> bool:
    q = Vertex(q) if isinstance(q, str) else q
    return all(n >= 0 for p, n in d.items() if p != q)


def apply_delta(d: Divisor, delta: Divisor) -> Divisor:
    return Divisor(list(d.items()) + list(delta.items()))


def non_q_degree(d: Divisor, q: Vertex | str) -> int:
    """Chips sitting away from ``q``."""
    q = Vertex(q) if isinstance(q, str) else q
    return sum(n for p, n in d.items() if p != q and n > 0)


def chips_at_combinatorial_vertices(g: MetricGraph, d: Divisor) -> int:
    """Chips resting on combinatorial vertices other than ``q``."""
    return sum(
        n
        for p, n in d.items()
        if isinstance(p, Vertex) and p.name != g.basepoint and n > 0 and g.is_combinatorial(p.name)
    )


def divisor_problems(g: MetricGraph, d: Divisor) -> list[str]:
    return [f"{p} is not on the graph" for p in d if not g.contains(p)]


def divisor_to_json(d: Divisor) -> list[dict]:
    return [{"at": point_to_json(p), "n": n} for p, n in d.items()]


def divisor_from_json(rows: list[dict], g: MetricGraph | None = None) -> Divisor:
    return Divisor([(point_from_json(r["at"], g), int(r["n"])) for r in rows])
