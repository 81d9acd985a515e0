"""Strong typicality and the Fano check.

A length-n sequence over the product alphabet of a joint pmf is epsilon-typical
when every symbol's empirical frequency is strictly within epsilon/|alphabet| of
its probability, zero-probability symbols included.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .info import set_h
from .probability import JointPMF
from .region import DecoderTable

# strict "<" applied with a relative guard so exact decimal boundaries
# (e.g. |5/20 - 0.3| = 0.05) are decided as in exact arithmetic
BOUNDARY_GUARD = 1e-9
EXHAUSTIVE_CAP = 2 ** 20


class TypicalityError(ValueError):
    pass


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float
    n: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise TypicalityError("epsilon must be positive")
        if self.n < 1:
            raise TypicalityError("n must be at least 1")

    @staticmethod
    def default_epsilon(n: int) -> float:
        return 0.2 if n < 32 else 0.1

    @classmethod
    def for_n(cls, n: int, epsilon: float | None = None) -> "TypicalityParams":
        return cls(cls.default_epsilon(n) if epsilon is None else epsilon, n)


def threshold(epsilon: float, alphabet_size: int) -> float:
    return epsilon / alphabet_size * (1.0 - BOUNDARY_GUARD)


def typical_counts(counts: np.ndarray, p: np.ndarray, epsilon: float) -> np.ndarray:
    """Vectorized test on count rows (..., A) against flat pmf ``p`` of length A."""
    counts = np.asarray(counts)
    n = counts.sum(axis=-1, keepdims=True)
    dev = np.abs(counts / n - p)
    return np.all(dev < threshold(epsilon, p.size), axis=-1)


def symbol_counts(seqs: np.ndarray, size: int) -> np.ndarray:
    """Rows of flat symbol indices (T, n) -> count rows (T, size)."""
    seqs = np.atleast_2d(seqs)
    t = seqs.shape[0]
    offs = seqs + size * np.arange(t)[:, None]
    return np.bincount(offs.ravel(), minlength=t * size).reshape(t, size)


def flat_symbols(j: JointPMF, seq, names: Sequence[str] | None = None) -> np.ndarray:
    """Coerce a sequence to flat indices over the product alphabet of ``names``.

    Accepts flat indices (shape (n,)) or per-variable indices (shape (n, k)).
    """
    names = list(j.names if names is None else names)
    sizes = [j.alphabet(v).size for v in names]
    a = np.asarray(seq)
    if a.ndim == 2:
        if a.shape[1] != len(sizes):
            raise TypicalityError(f"alphabet mismatch: {a.shape[1]} columns for {len(sizes)} variables")
        for c, s in enumerate(sizes):
            if a[:, c].min(initial=0) < 0 or a[:, c].max(initial=0) >= s:
                raise TypicalityError(f"alphabet mismatch: symbol out of range for {names[c]!r}")
        return np.ravel_multi_index(tuple(a.T), sizes)
    if a.ndim != 1:
        raise TypicalityError("sequence must be 1-D (flat symbols) or 2-D (per-variable symbols)")
    if a.size and (a.min() < 0 or a.max() >= math.prod(sizes)):
        raise TypicalityError("alphabet mismatch: symbol index out of range")
    return a.astype(np.int64)


def is_typical(seq, pmf: JointPMF, params: TypicalityParams, names: Sequence[str] | None = None) -> bool:
    """Strong typicality of ``seq`` w.r.t. the (marginal on ``names`` of the) joint pmf."""
    names = list(pmf.names if names is None else names)
    flat = flat_symbols(pmf, seq, names)
    if flat.size != params.n:
        raise TypicalityError(f"length mismatch: sequence has {flat.size} letters, n={params.n}")
    p = pmf.marginal_array(names).ravel()
    return bool(typical_counts(symbol_counts(flat, p.size), p, params.epsilon)[0])


@dataclass(frozen=True)
class TypicalityEstimate:
    monte_carlo: float
    exact: float | None
    trials: int

    def to_dict(self) -> dict:
        return {
            "monte_carlo": round(self.monte_carlo, 6),
            "exact": None if self.exact is None else round(self.exact, 6),
            "trials": self.trials,
        }


def exact_atypicality(pmf: JointPMF, params: TypicalityParams, cap: int = EXHAUSTIVE_CAP) -> float:
    """Sum of P(x^n) over every atypical sequence, by full enumeration."""
    p = pmf.flat()
    a, n = p.size, params.n
    total = a ** n
    if total > cap:
        raise TypicalityError(f"sequence space too large for enumeration: {total} > {cap}")
    logp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf)
    acc = 0.0
    chunk = 1 << 16
    powers = a ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % a
        counts = symbol_counts(digits, a)
        with np.errstate(invalid="ignore"):
            lp = np.where(counts > 0, counts * logp[None, :], 0.0).sum(axis=1)
        prob = np.exp(lp)
        atyp = ~typical_counts(counts, p, params.epsilon)
        acc += float(prob[atyp].sum())
    return acc


def typicality_probability(pmf: JointPMF, params: TypicalityParams, trials: int, seed: int,
                           exhaustive_cap: int = EXHAUSTIVE_CAP) -> TypicalityEstimate:
    """Monte Carlo estimate of P(X^n atypical); exact value too when enumeration is cheap."""
    if trials < 1:
        raise TypicalityError("trials must be at least 1")
    p = pmf.flat()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(params.n, p, size=trials)
    mc = float(np.mean(~typical_counts(counts, p, params.epsilon)))
    exact = None
    if p.size ** params.n <= exhaustive_cap:
        exact = exact_atypicality(pmf, params, exhaustive_cap)
    return TypicalityEstimate(mc, exact, trials)


# ---------------------------------------------------------------------------
# Fano

class FanoViolation(AssertionError):
    """H(U|V) exceeded 1 + log|U| P(U != g(V)); indicates a bug."""


@dataclass(frozen=True)
class FanoResult:
    lhs: float
    rhs: float
    holds: bool
    error_probability: float


def fano_check(joint_uv: JointPMF, g: DecoderTable, strict: bool = True) -> FanoResult:
    """Exact H(U|V) against 1 + log2|U| * P(U != g(V)); U = g.outputs, V = g.inputs."""
    u, v = list(g.outputs), list(g.inputs)
    if set(u) & set(v):
        raise TypicalityError("U and V must be disjoint")
    g.check_against(joint_uv)
    p = joint_uv.marginal_array(u + v).reshape(joint_uv.size_of(u), -1)
    guess = g.flat()
    pe = 1.0 - float(p[guess, np.arange(p.shape[1])].sum())
    pe = max(pe, 0.0)
    lhs = set_h(joint_uv, u, v)
    rhs = 1.0 + math.log2(joint_uv.size_of(u)) * pe
    holds = lhs <= rhs + 1e-12
    if strict and not holds:
        raise FanoViolation(f"Fano violated: H(U|V)={lhs:.12g} > {rhs:.12g}")
    return FanoResult(lhs, rhs, holds, pe)
