"""Exact finite probability models over product alphabets.

A :class:`JointPMF` is a dense table with one numpy axis per named variable.
Every operation returns a new object; tables are never mutated in place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORMALIZATION_SLACK = 1e-9
DEFAULT_CELL_CAP = 2 ** 24


class DistributionError(ValueError):
    """Invalid probability table or variable bookkeeping."""


@dataclass(frozen=True)
class Alphabet:
    name: str
    symbols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        if not self.symbols:
            raise DistributionError(f"alphabet {self.name!r} is empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise DistributionError(f"alphabet {self.name!r} has repeated symbols")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @classmethod
    def range(cls, name: str, size: int) -> "Alphabet":
        return cls(name, tuple(str(i) for i in range(size)))

    def renamed(self, name: str) -> "Alphabet":
        return Alphabet(name, self.symbols)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Joint pmf; ``probs`` has shape ``tuple(v.size for v in variables)``."""

    variables: tuple[Alphabet, ...]
    probs: np.ndarray
    _entropy_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.variables)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DistributionError(f"unknown variable {name!r}") from None

    def alphabet(self, name: str) -> Alphabet:
        return self.variables[self.axis(name)]

    def size_of(self, names: Iterable[str]) -> int:
        return math.prod(self.alphabet(n).size for n in names)

    def marginal_array(self, keep: Sequence[str]) -> np.ndarray:
        """Marginal table with axes ordered as ``keep``."""
        axes = [self.axis(n) for n in keep]
        if len(set(axes)) != len(axes):
            raise DistributionError("repeated variable in marginal request")
        drop = tuple(i for i in range(len(self.variables)) if i not in axes)
        m = self.probs.sum(axis=drop) if drop else self.probs
        remaining = [i for i in range(len(self.variables)) if i in axes]
        return np.transpose(m, [remaining.index(a) for a in axes])

    def set_entropy(self, names: Iterable[str]) -> float:
        """H of the variable set ``names`` in bits (memoized per set)."""
        key = frozenset(names)
        hit = self._entropy_cache.get(key)
        if hit is not None:
            return hit
        if not key:
            h = 0.0
        else:
            m = self.marginal_array(sorted(key, key=self.axis)).ravel()
            m = m[m > 0]
            h = float(-(m * np.log2(m)).sum())
        self._entropy_cache[key] = h
        return h

    def flat(self) -> np.ndarray:
        return self.probs.ravel()

    def __repr__(self):
        vs = ", ".join(f"{v.name}[{v.size}]" for v in self.variables)
        return f"JointPMF({vs})"


def build_joint(variables: Sequence[Alphabet], probs) -> JointPMF:
    """Validate and normalize a row-major probability table."""
    variables = tuple(variables)
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise DistributionError("duplicate variable names")
    p = np.asarray(probs, dtype=float)
    shape = tuple(v.size for v in variables)
    if p.size != math.prod(shape):
        raise DistributionError(
            f"dimension mismatch: {p.size} entries for alphabet product {math.prod(shape)}")
    p = p.reshape(shape)
    if not np.all(np.isfinite(p)):
        raise DistributionError("non-finite probability entry")
    if np.any(p < 0):
        raise DistributionError("negative probability entry")
    total = p.sum()
    if abs(total - 1.0) > NORMALIZATION_SLACK:
        raise DistributionError(f"not normalized: entries sum to {total:.12g}")
    return JointPMF(variables, _readonly(p / total))


def marginalize(j: JointPMF, keep: Iterable[str]) -> JointPMF:
    keep = list(keep)
    if not keep:
        raise DistributionError("empty keep set")
    for n in keep:
        j.axis(n)
    order = sorted(set(keep), key=j.axis)
    return JointPMF(tuple(j.alphabet(n) for n in order), _readonly(j.marginal_array(order)))


def reorder(j: JointPMF, order: Sequence[str]) -> JointPMF:
    if sorted(order) != sorted(j.names):
        raise DistributionError("reorder needs every variable exactly once")
    return JointPMF(tuple(j.alphabet(n) for n in order), _readonly(j.marginal_array(order)))


@dataclass(frozen=True, eq=False)
class Channel:
    """Conditional pmf of ``output`` given ``inputs``.

    ``table`` has shape ``(*input sizes, output size)``; inputs are matched by name.
    """

    inputs: tuple[str, ...]
    output: Alphabet
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.shape[-1] != self.output.size:
            raise DistributionError(
                f"channel to {self.output.name!r}: rows have {t.shape[-1]} entries, "
                f"output alphabet has {self.output.size}")
        if np.any(t < 0):
            raise DistributionError(f"channel to {self.output.name!r}: negative entry")
        sums = t.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > NORMALIZATION_SLACK):
            raise DistributionError(f"channel to {self.output.name!r}: row not normalized")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "table", _readonly(t / sums[..., None]))

    @classmethod
    def from_rows(cls, inputs: Sequence[str], output: Alphabet, rows, input_sizes: Sequence[int]):
        t = np.asarray(rows, dtype=float)
        expected = math.prod(input_sizes)
        if t.ndim != 2 or t.shape[0] != expected:
            raise DistributionError(
                f"channel to {output.name!r}: expected {expected} rows of length {output.size}")
        return cls(tuple(inputs), output, t.reshape(*input_sizes, output.size))

    @classmethod
    def identity(cls, source: Alphabet, output_name: str) -> "Channel":
        return cls((source.name,), source.renamed(output_name), np.eye(source.size))

    @classmethod
    def constant(cls, input_alphabet: Alphabet, output: Alphabet, row=None) -> "Channel":
        row = np.full(output.size, 1.0 / output.size) if row is None else np.asarray(row, float)
        return cls((input_alphabet.name,), output, np.tile(row, (input_alphabet.size, 1)))

    @classmethod
    def symmetric(cls, source: Alphabet, output_name: str, crossover: float) -> "Channel":
        """q-ary symmetric channel; binary case is the BSC."""
        a = source.size
        if a == 1:
            return cls.identity(source, output_name)
        t = np.full((a, a), crossover / (a - 1))
        np.fill_diagonal(t, 1.0 - crossover)
        return cls((source.name,), source.renamed(output_name), t)


def attach_channel(j: JointPMF, c: Channel) -> JointPMF:
    """Extend ``j`` with ``c.output`` drawn from ``c`` given ``c.inputs`` only."""
    if c.output.name in j.names:
        raise DistributionError(f"name collision: {c.output.name!r} already present")
    in_axes = []
    for n in c.inputs:
        in_axes.append(j.axis(n))
        if j.alphabet(n).size != c.table.shape[len(in_axes) - 1]:
            raise DistributionError(
                f"channel input {n!r} has size {c.table.shape[len(in_axes) - 1]}, "
                f"joint alphabet has {j.alphabet(n).size}")
    k = len(j.variables)
    probs = np.einsum(j.probs, list(range(k)), c.table, in_axes + [k], list(range(k + 1)))
    return JointPMF(j.variables + (c.output,), _readonly(probs))


def block_alphabet(a: Alphabet, n: int) -> Alphabet:
    if n == 1:
        return a
    sep = "" if all(len(s) == 1 for s in a.symbols) else ","
    syms = np.array(a.symbols, dtype=object)
    idx = np.indices((a.size,) * n).reshape(n, -1).T
    return Alphabet(a.name, tuple(sep.join(syms[row]) for row in idx))


def iid_extend(j: JointPMF, n: int, cap: int = DEFAULT_CELL_CAP) -> JointPMF:
    """Block pmf of n i.i.d. letters; variable X becomes the block X^n.

    Block symbol indices are row-major over (x(1), ..., x(n)), first letter most significant.
    """
    if n < 1:
        raise DistributionError("blocklength must be positive")
    if n == 1:
        return j
    cells = math.prod(s ** n for s in j.shape)
    if cells > cap:
        raise DistributionError(f"cap exceeded: block table needs {cells} cells (cap {cap})")
    k = len(j.variables)
    p = j.probs
    for _ in range(n - 1):
        p = np.multiply.outer(p, j.probs)
    # axes are (letter, variable) in letter-major order; regroup per variable
    perm = [letter * k + var for var in range(k) for letter in range(n)]
    p = np.transpose(p, perm).reshape(tuple(s ** n for s in j.shape))
    return JointPMF(tuple(block_alphabet(v, n) for v in j.variables), _readonly(p))


def with_point_mass(j: JointPMF, name: str, symbol: str = "0") -> JointPMF:
    """Append a deterministic one-point variable."""
    if name in j.names:
        raise DistributionError(f"name collision: {name!r} already present")
    return JointPMF(j.variables + (Alphabet(name, (symbol,)),), _readonly(j.probs[..., None]))


def independent(*parts: JointPMF) -> JointPMF:
    """Product measure of independent joints."""
    p = parts[0].probs
    variables = parts[0].variables
    for q in parts[1:]:
        p = np.multiply.outer(p, q.probs)
        variables = variables + q.variables
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise DistributionError("duplicate variable names")
    return JointPMF(variables, _readonly(p))


def dsbs(crossover: float, names=("X1", "X2")) -> JointPMF:
    """Doubly symmetric binary source: uniform X1, X2 = X1 xor Bern(crossover)."""
    a = (1 - crossover) / 2
    b = crossover / 2
    return build_joint([Alphabet.range(names[0], 2), Alphabet.range(names[1], 2)], [a, b, b, a])


def bernoulli(p: float, name: str = "X") -> JointPMF:
    return build_joint([Alphabet.range(name, 2)], [1 - p, p])


# ---------------------------------------------------------------------------
# JSON wire format

def pmf_from_dict(d: dict) -> JointPMF:
    try:
        variables = [Alphabet(v["name"], tuple(v["symbols"])) for v in d["variables"]]
        probs = d["probs"]
    except KeyError as e:
        raise DistributionError(f"pmf: missing field {e.args[0]!r}") from None
    return build_joint(variables, np.asarray(probs, dtype=float).ravel())


def pmf_to_dict(j: JointPMF) -> dict:
    return {
        "variables": [{"name": v.name, "symbols": list(v.symbols)} for v in j.variables],
        "probs": [float(x) for x in j.flat()],
    }


def channel_from_dict(d: dict, input_alphabets: dict[str, Alphabet]) -> Channel:
    try:
        inputs = list(d["inputs"])
        out = Alphabet(d["output"]["name"], tuple(d["output"]["symbols"]))
        rows = d["rows"]
    except KeyError as e:
        raise DistributionError(f"channel: missing field {e.args[0]!r}") from None
    missing = [n for n in inputs if n not in input_alphabets]
    if missing:
        raise DistributionError(f"channel to {out.name!r}: input var missing: {missing[0]!r}")
    sizes = [input_alphabets[n].size for n in inputs]
    return Channel.from_rows(inputs, out, rows, sizes)


def channel_to_dict(c: Channel) -> dict:
    return {
        "inputs": list(c.inputs),
        "output": {"name": c.output.name, "symbols": list(c.output.symbols)},
        "rows": c.table.reshape(-1, c.output.size).tolist(),
    }
