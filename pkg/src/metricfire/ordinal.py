"""Ordinals below omega^omega in Cantor normal form, with just enough arithmetic for a clock."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    """``sum(omega**e * c for e, c in cnf)``; exponents strictly descending, coefficients >= 1."""

    cnf: tuple = ()

    def __post_init__(self):
        exps = [e for e, _ in self.cnf]
        if any(e < 0 for e in exps) or any(c < 1 for _, c in self.cnf):
            raise ValueError(f"bad CNF {self.cnf}")
        if any(a <= b for a, b in zip(exps, exps[1:])):
            raise ValueError(f"CNF exponents must strictly descend: {self.cnf}")

    @classmethod
    def finite(cls, n: int) -> "Ordinal":
        if n < 0:
            raise ValueError("negative ordinal")
        return cls(((0, n),)) if n else cls()

    @classmethod
    def omega_power(cls, k: int, coef: int = 1) -> "Ordinal":
        return cls(((k, coef),))

    def __lt__(self, other):
        if not isinstance(other, Ordinal):
            return NotImplemented
        return _key(self.cnf) < _key(other.cnf)

    def is_finite(self) -> bool:
        return all(e == 0 for e, _ in self.cnf)

    def successor(self) -> "Ordinal":
        if self.cnf and self.cnf[-1][0] == 0:
            return Ordinal(self.cnf[:-1] + ((0, self.cnf[-1][1] + 1),))
        return Ordinal(self.cnf + ((0, 1),))

    def next_limit(self, k: int) -> "Ordinal":
        """Least multiple of ``omega**k`` strictly above this ordinal."""
        if k < 1:
            raise ValueError("limit level must be >= 1")
        high = [(e, c) for e, c in self.cnf if e > k]
        at_k = sum(c for e, c in self.cnf if e == k)
        return Ordinal(tuple(high) + ((k, at_k + 1),))

    def __str__(self):
        return render_ordinal(self)


def _key(cnf):
    # lexicographic on (exponent, coefficient) pairs; a proper prefix is smaller
    return [(e, c) for e, c in cnf]


def advance(o: Ordinal, mode: str = "successor", level: int = 1) -> Ordinal:
    if mode == "successor":
        return o.successor()
    if mode == "next_limit":
        return o.next_limit(level)
    raise ValueError(f"unknown mode {mode!r}")


def render_ordinal(o: Ordinal) -> str:
    if not o.cnf:
        return "0"
    terms = []
    for e, c in o.cnf:
        if e == 0:
            terms.append(str(c))
        else:
            terms.append(f"w^{e}" + (f"*{c}" if c != 1 else ""))
    return "+".join(terms)


_TERM = re.compile(r"w\^(\d+)(?:\*(\d+))?|(\d+)")


def parse_ordinal(text: str) -> Ordinal:
    text = text.strip()
    if text == "0":
        return Ordinal()
    cnf = []
    for part in text.split("+"):
        m = _TERM.fullmatch(part)
        if m is None:
            raise ValueError(f"bad ordinal term {part!r} in {text!r}")
        if m.group(3) is not None:
            cnf.append((0, int(m.group(3))))
        else:
            cnf.append((int(m.group(1)), int(m.group(2) or 1)))
    return Ordinal(tuple(cnf))
