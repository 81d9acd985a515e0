"""Shannon quantities in bits on a :class:`~mtsc.probability.JointPMF`."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .probability import DistributionError, JointPMF

CLAMP = 1e-10


def _names(x) -> frozenset[str]:
    if isinstance(x, str):
        return frozenset([x])
    return frozenset(x)


def _check_present(j: JointPMF, *groups):
    for g in groups:
        for n in g:
            j.axis(n)


def _clamp(v: float) -> float:
    return 0.0 if -CLAMP < v < 0.0 else v


def entropy(j: JointPMF, vars: Iterable[str] | str, given: Iterable[str] | str = ()) -> float:
    """H(vars | given)."""
    a, c = _names(vars), _names(given)
    if not a:
        raise DistributionError("entropy needs a nonempty variable set")
    if a & c:
        raise DistributionError(f"overlap between vars and given: {sorted(a & c)}")
    _check_present(j, a, c)
    return _clamp(j.set_entropy(a | c) - j.set_entropy(c))


def mutual_information(j: JointPMF, a, b, given=()) -> float:
    """I(a; b | given); tiny negatives from cancellation are clamped to zero."""
    a, b, c = _names(a), _names(b), _names(given)
    if not a or not b:
        raise DistributionError("mutual information needs nonempty arguments")
    if a & b or a & c or b & c:
        raise DistributionError("mutual information arguments must be pairwise disjoint")
    _check_present(j, a, b, c)
    return _clamp(set_mi(j, a, b, c))


def set_mi(j: JointPMF, a, b, c=()) -> float:
    """I(A;B|C) with set-union semantics, no checks or clamping.

    Overlapping arguments are allowed: I(A;A|C) = H(A|C).
    """
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    if not (a - c) or not (b - c):
        return 0.0
    h = j.set_entropy
    return h(a | c) + h(b | c) - h(a | b | c) - h(c)


def set_h(j: JointPMF, a, c=()) -> float:
    """H(A|C) with set-union semantics."""
    a, c = frozenset(a), frozenset(c)
    return j.set_entropy(a | c) - j.set_entropy(c)


@dataclass(frozen=True)
class InfoQuery:
    left: frozenset[str]
    right: frozenset[str]
    given: frozenset[str]

    def __post_init__(self):
        if not self.left:
            raise DistributionError("query: left side is empty")
        if self.left & self.right or self.left & self.given or self.right & self.given:
            raise DistributionError("query: argument sets must be pairwise disjoint")

    @property
    def is_entropy(self) -> bool:
        return not self.right

    def evaluate(self, j: JointPMF) -> float:
        if self.is_entropy:
            return entropy(j, self.left, self.given)
        return mutual_information(j, self.left, self.right, self.given)

    def __str__(self):
        fmt = lambda s: ",".join(sorted(s))
        tail = f"|{fmt(self.given)}" if self.given else ""
        if self.is_entropy:
            return f"H({fmt(self.left)}{tail})"
        return f"I({fmt(self.left)};{fmt(self.right)}{tail})"


_QUERY = re.compile(r"^\s*([HI])\s*\((.*)\)\s*$")


def parse_query(text: str) -> InfoQuery:
    """Parse ``H(A,B|C)`` or ``I(A;B|C,D)``."""
    m = _QUERY.match(text)
    if not m:
        raise DistributionError(f"query: cannot parse {text!r}; expected H(...) or I(...;...)")
    kind, body = m.groups()
    body, _, given = body.partition("|")
    split = lambda s: frozenset(t.strip() for t in s.split(",") if t.strip())
    if kind == "H":
        if ";" in body:
            raise DistributionError("query: entropy takes no ';'")
        return InfoQuery(split(body), frozenset(), split(given))
    left, sep, right = body.partition(";")
    if not sep or not split(right):
        raise DistributionError("query: mutual information needs two sides separated by ';'")
    return InfoQuery(split(left), split(right), split(given))
