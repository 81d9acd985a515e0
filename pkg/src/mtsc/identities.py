"""Numerical verification of the chain-structure identities used for corner points.

Every relation is checked on a :class:`~mtsc.corners.ChainInstance`.  Both sides
are evaluated independently from joint entropies.  Subset tuples use 0-based
encoder positions.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .corners import ChainInstance, nonempty_subsets, random_chain_instance, validate_structure
from .info import set_h, set_mi
from .probability import Channel, JointPMF, attach_channel, marginalize

EQ_TOL = 1e-9

CATALOG = (
    "A-EQUIV",
    "B-RULE-DISJOINT",
    "B-RULE-SUM",
    "B-RULE-SUBSET",
    "B-MID",
    "B-CHAIN-FULL",
    "B-CHAIN-TAIL",
    "B-UPPER",
)
INEQUALITIES = frozenset({"B-UPPER"})


class PreconditionError(ValueError):
    """Subset tuple does not meet the identity's hypotheses."""


@dataclass(frozen=True)
class IdentityReport:
    id: str
    instance: str
    subsets: tuple
    lhs: float
    rhs: float
    gap: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "instance": self.instance,
            "subsets": _jsonable(self.subsets),
            "lhs": f"{self.lhs:.6f}",
            "rhs": f"{self.rhs:.6f}",
            "gap": f"{self.gap:.6e}",
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(x):
    if isinstance(x, (tuple, list, frozenset)):
        return [_jsonable(v) for v in x]
    return x


def instance_hash(inst: ChainInstance) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(inst.joint.probs).tobytes())
    h.update(repr((inst.joint.names, inst.joint.shape, inst.y, inst.z, inst.v)).encode())
    return h.hexdigest()[:16]


def _verdict(id_: str, lhs: float, rhs: float) -> str:
    if id_ in INEQUALITIES:
        return "lhs_le_rhs" if lhs <= rhs + EQ_TOL else "violated"
    return "equal" if abs(lhs - rhs) <= EQ_TOL else "violated"


def _need(cond: bool, msg: str):
    if not cond:
        raise PreconditionError(msg)


def _is_subset_list(x, k) -> bool:
    return all(isinstance(i, (int, np.integer)) and 0 <= i < k for i in x) and len(set(x)) == len(x)


# ---------------------------------------------------------------------------
# the relations; each returns (lhs, rhs)

def _mi(inst, I, cond):
    """I(Y_I; Z_I | Z_cond, V)."""
    return set_mi(inst.joint, inst.ys(I), inst.zs(I), inst.zs(cond) + list(inst.v))


def _everything_but(k, *groups):
    used = set().union(*map(set, groups))
    return [i for i in range(k) if i not in used]


def _rule_disjoint(inst, I, J):
    k = inst.size
    rest = _everything_but(k, I, J)
    lhs = _mi(inst, I, rest)
    rhs = _mi(inst, I, _everything_but(k, I)) + set_mi(
        inst.joint, inst.zs(I), inst.zs(J), inst.zs(rest) + list(inst.v))
    return lhs, rhs


def _rule_sum(inst, I, J):
    k = inst.size
    rest = _everything_but(k, I, J)
    lhs = _mi(inst, list(I) + list(J), rest)
    rhs = _mi(inst, I, rest) + _mi(inst, J, _everything_but(k, J))
    return lhs, rhs


def _rule_subset(inst, hat, I, J):
    out = [i for i in hat if i not in I and i not in J]
    lhs = _mi(inst, list(I) + list(J), out)
    rhs = _mi(inst, I, out) + _mi(inst, J, [i for i in hat if i not in J])
    return lhs, rhs


def _mid(inst, order):
    k = inst.size
    lhs = _mi(inst, order, _everything_but(k, order))
    rhs = sum(_mi(inst, [order[j]], _everything_but(k, order[j:])) for j in range(len(order)))
    return lhs, rhs


def _chain_full(inst, prefix):
    lhs = _mi(inst, prefix, [])
    rhs = sum(_mi(inst, [prefix[i]], prefix[:i]) for i in range(len(prefix)))
    return lhs, rhs


def _chain_tail(inst, sigma, m):
    tail = sigma[m:]
    lhs = _mi(inst, tail, sigma[:m])
    rhs = sum(_mi(inst, [sigma[i]], sigma[:i]) for i in range(m, len(sigma)))
    return lhs, rhs


def _upper(inst, sigma, I):
    lhs = _mi(inst, I, _everything_but(inst.size, I))
    pos = {s: p for p, s in enumerate(sigma)}
    rhs = sum(_mi(inst, [i], sigma[: pos[i]]) for i in I)
    return lhs, rhs


class _LosslessView:
    """The instance with Z_m replaced by a copy of Y_m for m in J (cached per J)."""

    def __init__(self, inst: ChainInstance):
        self.inst = inst
        self._cache: dict[frozenset, JointPMF] = {}

    def joint(self, J: frozenset) -> JointPMF:
        hit = self._cache.get(J)
        if hit is None:
            inst = self.inst
            keep = [n for n in inst.joint.names if n not in {inst.z[m] for m in J}]
            hit = marginalize(inst.joint, keep)
            for m in sorted(J):
                ya = inst.joint.alphabet(inst.y[m])
                hit = attach_channel(hit, Channel.identity(ya, inst.z[m]))
            self._cache[J] = hit
        return hit


def _a_equiv(inst, J, I, view: _LosslessView | None = None):
    """Direct conditional-MI row vs the lossless/lossy split, with Z_J := Y_J."""
    view = view or _LosslessView(inst)
    j = view.joint(frozenset(J))
    k = inst.size
    V = list(inst.v)
    zs, ys = inst.zs, inst.ys
    lhs = set_mi(j, ys(I), zs(I), zs(_everything_but(k, I)) + V)
    I1 = [i for i in I if i in J]
    I2 = [i for i in I if i not in J]
    U = zs(_everything_but(k, J, I2)) + V
    rhs = 0.0
    if I1:
        rhs += set_h(j, ys(I1), ys([m for m in J if m not in I1]) + U)
    if I2:
        rhs += set_mi(j, ys(I2), zs(I2), ys(J) + U)
    return lhs, rhs


def _check_args(id_: str, inst: ChainInstance, subsets: tuple):
    k = inst.size
    if id_ in ("B-RULE-DISJOINT", "B-RULE-SUM"):
        _need(len(subsets) == 2, f"{id_}: expects (I, I')")
        I, J = subsets
        _need(_is_subset_list(I, k) and _is_subset_list(J, k) and I and J, f"{id_}: I, I' must be nonempty")
        _need(not set(I) & set(J), f"{id_}: hypothesis violation, I and I' must be disjoint")
    elif id_ == "B-RULE-SUBSET":
        _need(len(subsets) == 3, f"{id_}: expects (I_hat, I, I')")
        hat, I, J = subsets
        for s in subsets:
            _need(_is_subset_list(s, k) and s, f"{id_}: subsets must be nonempty")
        _need(not set(I) & set(J), f"{id_}: hypothesis violation, I and I' must be disjoint")
        _need(set(I) | set(J) <= set(hat), f"{id_}: hypothesis violation, I, I' must lie in I_hat")
    elif id_ in ("B-MID", "B-CHAIN-FULL"):
        _need(len(subsets) == 1 and _is_subset_list(subsets[0], k) and subsets[0],
              f"{id_}: expects one ordered nonempty subset")
        if id_ == "B-CHAIN-FULL":
            _need(len(subsets[0]) >= 2, f"{id_}: prefix length must be at least 2")
    elif id_ == "B-CHAIN-TAIL":
        _need(len(subsets) == 2, f"{id_}: expects (sigma, m)")
        sigma, m = subsets
        _need(sorted(sigma) == list(range(k)), f"{id_}: sigma must be a permutation")
        _need(1 <= m < k, f"{id_}: need 1 <= m < M'")
    elif id_ == "B-UPPER":
        _need(len(subsets) == 2, f"{id_}: expects (sigma, I)")
        sigma, I = subsets
        _need(sorted(sigma) == list(range(k)), f"{id_}: sigma must be a permutation")
        _need(_is_subset_list(I, k) and I, f"{id_}: I must be nonempty")
    elif id_ == "A-EQUIV":
        _need(len(subsets) == 2, f"{id_}: expects (J, I)")
        J, I = subsets
        _need(_is_subset_list(J, k) and _is_subset_list(I, k) and I, f"{id_}: I must be nonempty")
    else:
        raise PreconditionError(f"unknown identity {id_!r}")


_EVAL = {
    "B-RULE-DISJOINT": lambda inst, s: _rule_disjoint(inst, *s),
    "B-RULE-SUM": lambda inst, s: _rule_sum(inst, *s),
    "B-RULE-SUBSET": lambda inst, s: _rule_subset(inst, *s),
    "B-MID": lambda inst, s: _mid(inst, s[0]),
    "B-CHAIN-FULL": lambda inst, s: _chain_full(inst, s[0]),
    "B-CHAIN-TAIL": lambda inst, s: _chain_tail(inst, *s),
    "B-UPPER": lambda inst, s: _upper(inst, *s),
}


def verify_identity(id_: str, inst: ChainInstance, subsets: Sequence, *, validate: bool = True,
                    _hash: str | None = None, _view: _LosslessView | None = None) -> IdentityReport:
    """Evaluate both sides of one catalog relation on one subset tuple."""
    subsets = tuple(tuple(s) if isinstance(s, (list, tuple)) else s for s in subsets)
    _check_args(id_, inst, subsets)
    if validate:
        validate_structure(inst)
    if id_ == "A-EQUIV":
        lhs, rhs = _a_equiv(inst, *subsets, view=_view)
    else:
        lhs, rhs = _EVAL[id_](inst, subsets)
    return IdentityReport(id_, _hash or instance_hash(inst), subsets, lhs, rhs, lhs - rhs,
                          _verdict(id_, lhs, rhs))


def admissible_tuples(id_: str, k: int) -> Iterator[tuple]:
    """Every subset tuple meeting the hypotheses of ``id_`` for M' = k."""
    subs = nonempty_subsets(k)
    perms = list(itertools.permutations(range(k)))
    if id_ in ("B-RULE-DISJOINT", "B-RULE-SUM"):
        for I in subs:
            for J in subs:
                if not set(I) & set(J):
                    yield (I, J)
    elif id_ == "B-RULE-SUBSET":
        for hat in subs:
            inner = [s for s in subs if set(s) <= set(hat)]
            for I in inner:
                for J in inner:
                    if not set(I) & set(J):
                        yield (hat, I, J)
    elif id_ == "B-MID":
        for I in subs:
            for order in itertools.permutations(I):
                yield (order,)
    elif id_ == "B-CHAIN-FULL":
        for r in range(2, k + 1):
            for prefix in itertools.permutations(range(k), r):
                yield (prefix,)
    elif id_ == "B-CHAIN-TAIL":
        for sigma in perms:
            for m in range(1, k):
                yield (sigma, m)
    elif id_ == "B-UPPER":
        for sigma in perms:
            for I in subs:
                yield (sigma, I)
    elif id_ == "A-EQUIV":
        for r in range(k + 1):
            for J in itertools.combinations(range(k), r):
                for I in subs:
                    yield (J, I)
    else:
        raise PreconditionError(f"unknown identity {id_!r}")


def verify_all(inst: ChainInstance, ids: Sequence[str] = CATALOG) -> list[IdentityReport]:
    validate_structure(inst)
    h = instance_hash(inst)
    view = _LosslessView(inst)
    out = []
    for id_ in ids:
        for s in admissible_tuples(id_, inst.size):
            out.append(verify_identity(id_, inst, s, validate=False, _hash=h, _view=view))
    return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Per-trial generator keyed on (seed, trial), independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def fuzz_identities(M_prime: int, alphabet_cap: int, trials: int, seed: int,
                    workers: int = 1, ids: Sequence[str] = CATALOG) -> list[IdentityReport]:
    """Random product-structure instances; every relation on every admissible tuple."""
    if not 1 <= M_prime <= 3:
        raise ValueError("M' must be between 1 and 3")
    if not 2 <= alphabet_cap <= 3:
        raise ValueError("alphabet_cap must be 2 or 3")

    def one(t):
        inst = random_chain_instance(trial_rng(seed, t), M_prime, alphabet_cap)
        return verify_all(inst, ids)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            chunks = list(ex.map(one, range(trials)))
    else:
        chunks = [one(t) for t in range(trials)]
    return [r for c in chunks for r in c]
