"""Corner points of the contra-polymatroid B* = {R : R_I >= I(Y_I; Z_I | Z_{I^c}, V)}.

An instance is a joint pmf over (Y_1..Y_M', Z_1..Z_M', V) in which each Z_m is
drawn from Y_m alone.  Encoder positions are 0-based internally; reports use
variable names.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .info import set_mi
from .probability import Alphabet, Channel, JointPMF, attach_channel, build_joint

DEDUP_TOL = 1e-9
FEAS_TOL = 1e-9
STRUCTURE_TOL = 1e-9
GENERIC_TOL = 1e-7
MAX_ENCODERS = 6


class StructureError(ValueError):
    """Instance lacks the product form p'(y, v) * prod q'_m(z_m | y_m)."""


@dataclass(frozen=True, eq=False)
class ChainInstance:
    joint: JointPMF
    y: tuple[str, ...]
    z: tuple[str, ...]
    v: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(self.y))
        object.__setattr__(self, "z", tuple(self.z))
        object.__setattr__(self, "v", tuple(self.v))
        if len(self.y) != len(self.z) or not self.y:
            raise StructureError("need one Z per Y and at least one pair")
        for n in self.y + self.z + self.v:
            self.joint.axis(n)

    @property
    def size(self) -> int:
        return len(self.y)

    def zs(self, idx) -> list[str]:
        return [self.z[i] for i in idx]

    def ys(self, idx) -> list[str]:
        return [self.y[i] for i in idx]

    def bound(self, I: Sequence[int]) -> float:
        """I(Y_I; Z_I | Z_{I^c}, V)."""
        rest = [i for i in range(self.size) if i not in I]
        return set_mi(self.joint, self.ys(I), self.zs(I), self.zs(rest) + list(self.v))

    def stage(self, i: int, before: Sequence[int]) -> float:
        """I(Y_i; Z_i | Z_before, V)."""
        return set_mi(self.joint, [self.y[i]], [self.z[i]], self.zs(before) + list(self.v))


def validate_structure(inst: ChainInstance, tol: float = STRUCTURE_TOL) -> float:
    """Largest I(everything else; Z_m | Y_m); raises when it exceeds ``tol``."""
    worst = 0.0
    every = set(inst.joint.names)
    for m in range(inst.size):
        rest = every - {inst.y[m], inst.z[m]}
        if rest:
            worst = max(worst, set_mi(inst.joint, rest, [inst.z[m]], [inst.y[m]]))
    if worst > tol:
        raise StructureError(f"structure validation failure: I(rest; Z_m | Y_m) = {worst:.3e}")
    return worst


def nonempty_subsets(k: int) -> list[tuple[int, ...]]:
    return [c for r in range(1, k + 1) for c in itertools.combinations(range(k), r)]


def genericity(inst: ChainInstance) -> float:
    """min over disjoint nonempty I, I' of I(Z_I; Z_I' | Z_rest, V).

    When this is positive no non-suffix constraint can be tight at a corner.
    """
    k = inst.size
    best = math.inf
    for I in nonempty_subsets(k):
        for J in nonempty_subsets(k):
            if set(I) & set(J) or I > J:
                continue
            rest = [i for i in range(k) if i not in I and i not in J]
            best = min(best, set_mi(inst.joint, inst.zs(I), inst.zs(J), inst.zs(rest) + list(inst.v)))
    return best if best is not math.inf else math.inf


def corner_point(inst: ChainInstance, pi: Sequence[int], validate: bool = True) -> np.ndarray:
    """R_{pi(i)} = I(Y_pi(i); Z_pi(i) | Z_pi(1..i-1), V)."""
    pi = tuple(pi)
    if sorted(pi) != list(range(inst.size)):
        raise ValueError(f"not a permutation of 0..{inst.size - 1}: {pi}")
    if validate:
        validate_structure(inst)
    r = np.zeros(inst.size)
    for i, m in enumerate(pi):
        r[m] = max(inst.stage(m, pi[:i]), 0.0)
    return r


@dataclass
class Corner:
    perm: tuple[int, ...]
    rates: np.ndarray
    tight: list[tuple[int, ...]]
    merged_perms: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class CornerSet:
    instance: ChainInstance
    corners: list[Corner]
    duplicates_merged: bool
    degenerate: bool
    genericity: float
    bounds: dict[tuple[int, ...], float]

    def names(self, I: Sequence[int]) -> list[str]:
        return [self.instance.y[i] for i in I]

    def to_dict(self, digits: int = 6) -> dict:
        f = lambda v: round(float(v), digits) + 0.0
        return {
            "encoders": list(self.instance.y),
            "duplicates_merged": self.duplicates_merged,
            "degenerate": self.degenerate,
            "corners": [
                {
                    "perm": self.names(c.perm),
                    "rates": [f(v) for v in c.rates],
                    "tight": [self.names(t) for t in c.tight],
                    "merged": [self.names(p) for p in c.merged_perms],
                }
                for c in self.corners
            ],
        }


def all_bounds(inst: ChainInstance) -> dict[tuple[int, ...], float]:
    return {I: inst.bound(I) for I in nonempty_subsets(inst.size)}


def tight_sets(rates: np.ndarray, bounds: dict, tol: float = FEAS_TOL) -> list[tuple[int, ...]]:
    return [I for I, b in bounds.items() if abs(sum(rates[i] for i in I) - b) <= tol]


def is_chain(sets: Sequence[Sequence[int]]) -> bool:
    """Totally ordered by inclusion."""
    ss = sorted((frozenset(s) for s in sets), key=len)
    return all(a <= b for a, b in zip(ss, ss[1:]))


def suffix_chain(pi: Sequence[int]) -> list[frozenset[int]]:
    return [frozenset(pi[m:]) for m in range(len(pi))]


def enumerate_corners(inst: ChainInstance) -> CornerSet:
    """Evaluate every permutation, merge coincident corners, check feasibility."""
    if inst.size > MAX_ENCODERS:
        raise ValueError(f"M' too large: {inst.size} > {MAX_ENCODERS}")
    validate_structure(inst)
    bounds = all_bounds(inst)
    gen = genericity(inst) if inst.size > 1 else math.inf
    out: list[Corner] = []
    merged = False
    for pi in itertools.permutations(range(inst.size)):
        r = corner_point(inst, pi, validate=False)
        for c in out:
            if np.max(np.abs(c.rates - r)) <= DEDUP_TOL:
                c.merged_perms.append(pi)
                merged = True
                break
        else:
            bad = [I for I, b in bounds.items() if sum(r[i] for i in I) < b - FEAS_TOL]
            if bad:
                raise AssertionError(f"corner {pi} infeasible on {bad}")
            out.append(Corner(pi, r, tight_sets(r, bounds)))
    return CornerSet(inst, out, merged, gen < GENERIC_TOL, gen, bounds)


@dataclass
class Membership:
    status: str  # inside | boundary | outside
    subsets: list[tuple[int, ...]]


def membership(point, inst: ChainInstance, bounds: dict | None = None, tol: float = FEAS_TOL) -> Membership:
    point = np.asarray(point, dtype=float)
    if point.shape != (inst.size,):
        raise ValueError(f"dimension mismatch: point has {point.size} entries, instance has {inst.size}")
    bounds = all_bounds(inst) if bounds is None else bounds
    violated, tight = [], []
    for I, b in bounds.items():
        s = float(point[list(I)].sum())
        if s < b - tol:
            violated.append(I)
        elif s <= b + tol:
            tight.append(I)
    if violated:
        return Membership("outside", violated)
    if tight:
        return Membership("boundary", tight)
    return Membership("inside", [])


@dataclass
class Witness:
    weights: dict[tuple[int, ...], float]
    slack: float
    evaluated: int


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        v = []
        for b in bars:
            v.append(b - prev - 1)
            prev = b
        v.append(total + parts - 2 - prev)
        yield v


def convex_witness(point, corners: CornerSet, samples: int = 200_000, tol: float = FEAS_TOL):
    """Weights lambda >= 0 summing to 1 with sum lambda_pi * corner_pi <= point.

    Two corners: exact line search (the feasible interval's midpoint).  More:
    barycentric grids of increasing resolution until ``samples`` points have been
    tried, then an exact base-point decomposition for points the grid cannot
    reach (weights off the dyadic grid).  Returns None when nothing is found; ``convex_witness.last_budget``
    records the points evaluated.
    """
    p = np.asarray(point, dtype=float)
    C = np.array([c.rates for c in corners.corners])
    keys = [c.perm for c in corners.corners]
    k = len(C)
    if k == 1:
        ok = np.all(C[0] <= p + tol)
        convex_witness.last_budget = 1
        return Witness({keys[0]: 1.0}, float(np.min(p - C[0])), 1) if ok else None
    if k == 2:
        # t*a + (1-t)*b <= p  <=>  t*(a-b) <= p-b, one interval per coordinate
        a, b = C
        lo, hi = 0.0, 1.0
        for ai, bi, pi in zip(a, b, p):
            d, rhs = ai - bi, pi - bi + tol
            if abs(d) <= 1e-15:
                if rhs < 0:
                    lo, hi = 1.0, 0.0
                continue
            if d > 0:
                hi = min(hi, rhs / d)
            else:
                lo = max(lo, rhs / d)
        convex_witness.last_budget = 1
        if lo > hi:
            return None
        t = min(max((lo + hi) / 2, 0.0), 1.0)
        return Witness({keys[0]: t, keys[1]: 1 - t}, float(np.min(p - (t * a + (1 - t) * b))), 1)
    used = 0
    best = None
    res = 1
    while True:
        count = math.comb(res + k - 1, k - 1)
        if used + count > samples:
            break
        lam = np.array(list(_compositions(res, k)), dtype=float) / res
        used += count
        slack = np.min(p[None, :] - lam @ C, axis=1)
        j = int(np.argmax(slack))
        if slack[j] >= -tol:
            best = Witness({keys[i]: float(lam[j, i]) for i in range(k)}, float(slack[j]), used)
            break
        res *= 2
    if best is None:
        best = _exact_witness(p, C, keys, corners.bounds, tol)
        if best is not None:
            best = Witness(best.weights, best.slack, used)
    convex_witness.last_budget = used
    return best


def _exact_witness(p, C, keys, bounds, tol):
    # greedy descent to a base point q <= p, then Caratheodory over corner subsets
    m = p.size
    q = p.copy()
    for i in range(m):
        room = min(sum(q[j] for j in I) - b for I, b in bounds.items() if i in I)
        if room < -tol:
            return None
        q[i] -= max(room, 0.0)
    A = np.vstack([C.T, np.ones(len(C))])
    rhs = np.append(q, 1.0)
    for sub in itertools.combinations(range(len(C)), m):
        lam, *_ = np.linalg.lstsq(A[:, sub], rhs, rcond=None)
        if lam.min() < -1e-12 or np.abs(A[:, sub] @ lam - rhs).max() > tol:
            continue
        lam = np.clip(lam, 0.0, None)
        lam /= lam.sum()
        w = {keys[i]: 0.0 for i in range(len(C))}
        for i, l in zip(sub, lam):
            w[keys[i]] = float(l)
        slack = float(np.min(p - lam @ C[list(sub)]))
        if slack >= -tol:
            return Witness(w, slack, 0)
    return None


convex_witness.last_budget = 0


def random_chain_instance(rng: np.random.Generator, m: int, alphabet_cap: int = 3,
                          v_size: int | None = None, z_cap: int | None = None) -> ChainInstance:
    """Dirichlet(1) p'(y, v) and channel rows; alphabet sizes drawn from 2..cap."""
    z_cap = alphabet_cap if z_cap is None else z_cap
    ys = [Alphabet.range(f"Y{i + 1}", int(rng.integers(2, alphabet_cap + 1))) for i in range(m)]
    vs = [] if v_size == 1 else [Alphabet.range("V", int(v_size or rng.integers(1, alphabet_cap + 1)))]
    shape = [a.size for a in ys + vs]
    j = build_joint(ys + vs, rng.dirichlet(np.ones(math.prod(shape))))
    for i, a in enumerate(ys):
        zs = int(rng.integers(2, z_cap + 1))
        rows = rng.dirichlet(np.ones(zs), size=a.size)
        j = attach_channel(j, Channel((a.name,), Alphabet.range(f"Z{i + 1}", zs), rows))
    return ChainInstance(j, tuple(a.name for a in ys), tuple(f"Z{i + 1}" for i in range(m)),
                         tuple(a.name for a in vs))


def instance_from_channels(base: JointPMF, y: Sequence[str], channels: Sequence[Channel],
                           v: Sequence[str] = ()) -> ChainInstance:
    """Attach one test channel per Y (in order) to a joint over (Y, V)."""
    j = base
    for c in channels:
        j = attach_channel(j, c)
    return ChainInstance(j, tuple(y), tuple(c.output.name for c in channels), tuple(v))
