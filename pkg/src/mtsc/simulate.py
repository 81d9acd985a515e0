"""Seeded random-binning / joint-typicality simulations at desk scale.

All randomness is derived from one integer seed:
  * bin assignments come from a splitmix64 hash of (seed, encoder tag, index);
  * the i-th trial draws from ``SeedSequence(seed, spawn_key=(i,))``;
  * stage codebooks draw from ``SeedSequence(seed, spawn_key=(CODEBOOK_KEY, stage))``.
Trials are independent, so reports do not depend on the worker count.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corners import ChainInstance, StructureError, corner_point, validate_structure
from .info import set_mi
from .probability import Alphabet, JointPMF, build_joint, iid_extend, reorder
from .region import DecoderTable
from .typicality import (
    FanoResult,
    TypicalityParams,
    fano_check,
    symbol_counts,
    typical_counts,
)

SEQUENCE_CAP = 2 ** 20
CODEBOOK_CAP = 2 ** 20
WORK_CAP = 2 ** 24
CHUNK = 1 << 15
CODEBOOK_KEY = 2 ** 32
_M64 = (1 << 64) - 1


class SimulationError(ValueError):
    pass


class RateError(SimulationError):
    """Rates below the stage requirement; ``stage`` is 1-based."""

    def __init__(self, msg, stage):
        super().__init__(msg)
        self.stage = stage


# ---------------------------------------------------------------------------
# hashing and binning

def splitmix64(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _key(seed: int, tag: int) -> np.uint64:
    s = splitmix64(np.array([seed & _M64], dtype=np.uint64))[0]
    return splitmix64(np.array([int(s) ^ (tag & _M64)], dtype=np.uint64))[0]


def bin_count(n: int, rate: float) -> int:
    """2^ceil(n R); exponent capped at 62."""
    if rate < 0 or not math.isfinite(rate):
        raise SimulationError(f"rates: invalid value {rate}")
    e = math.ceil(n * rate - 1e-9) if rate > 0 else 0
    return 1 << min(max(e, 0), 62)


def balanced_bins(items: int, bins: int, seed: int, tag: int) -> np.ndarray:
    """Seeded uniform binning with equal bin sizes.

    Items are ranked by a keyed hash and dealt round-robin, so doubling the
    bin count refines every bin and ``bins >= items`` is injective.
    """
    key = splitmix64(np.arange(items, dtype=np.uint64) ^ _key(seed, tag))
    order = np.argsort(key, kind="stable")
    rank = np.empty(items, dtype=np.int64)
    rank[order] = np.arange(items)
    return rank % bins if bins < items else rank


class _Groups:
    """Inverse of a bin assignment."""

    def __init__(self, assign: np.ndarray):
        self.order = np.argsort(assign, kind="stable")
        self.sorted = assign[self.order]

    def members(self, b: int) -> np.ndarray:
        lo = np.searchsorted(self.sorted, b, "left")
        hi = np.searchsorted(self.sorted, b, "right")
        return self.order[lo:hi]


def digits(idx: np.ndarray, base: int, n: int) -> np.ndarray:
    """Block indices -> letter arrays (first letter most significant)."""
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (np.asarray(idx, dtype=np.int64)[..., None] // powers) % base


def undigits(letters: np.ndarray, base: int) -> int:
    out = 0
    for x in letters:
        out = out * base + int(x)
    return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def _map_trials(fn: Callable[[int], tuple], trials: int, workers: int = 1) -> list:
    if workers <= 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    step = max(1, -(-trials // (workers * 4)))
    chunks = [range(a, min(a + step, trials)) for a in range(0, trials, step)]
    with ThreadPoolExecutor(workers) as ex:
        parts = list(ex.map(lambda r: [fn(t) for t in r], chunks))
    return [x for p in parts for x in p]


# ---------------------------------------------------------------------------
# report

@dataclass
class SimReport:
    kind: str
    trials: int
    decode_errors: int
    ambiguity_errors: int
    atypical_source: int
    rates_used: list[float]
    config: dict
    extra: dict = field(default_factory=dict)

    @property
    def error_rate(self) -> float:
        return (self.decode_errors + self.ambiguity_errors) / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        return _round({
            "kind": self.kind,
            "trials": self.trials,
            "decode_errors": self.decode_errors,
            "ambiguity_errors": self.ambiguity_errors,
            "atypical_source": self.atypical_source,
            "error_rate": self.error_rate,
            "rates_used": list(self.rates_used),
            "config": self.config,
            "extra": self.extra,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def summary(self) -> str:
        s = (f"{self.kind}: trials={self.trials} decode_errors={self.decode_errors} "
             f"ambiguity_errors={self.ambiguity_errors} atypical_source={self.atypical_source} "
             f"error_rate={self.error_rate:.6f}")
        if "success_rate" in self.extra:
            s += f" success_rate={self.extra['success_rate']:.6f}"
        if "failure_fraction" in self.extra:
            s += f" failure_fraction={self.extra['failure_fraction']:.6f}"
        return s


def _round(x):
    if isinstance(x, float):
        return round(x, 6) + 0.0
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return _round(float(x))
    return x


def _config(kind, params, trials, seed, **kw) -> dict:
    d = {"kind": kind, "n": params.n, "epsilon": params.epsilon, "trials": trials, "seed": seed}
    d.update(kw)
    return d


# ---------------------------------------------------------------------------
# Slepian-Wolf

class SlepianWolfCode:
    """Fixed seeded binning code for the encoders plus a joint-typicality decoder.

    The decoder lists every sequence of every announced bin (marginally typical
    ones only, a necessary condition for joint typicality), then scans their
    product for tuples jointly typical with the side information.
    """

    def __init__(self, source: JointPMF, rates: Sequence[float], n: int, epsilon: float, seed: int,
                 encoders: Sequence[str] | None = None, side: Sequence[str] = (),
                 work_cap: int = WORK_CAP):
        side = list(side)
        encoders = list(encoders) if encoders is not None else [v for v in source.names if v not in side]
        if rates is None:
            raise SimulationError("rates: required")
        rates = [float(r) for r in rates]
        if len(rates) != len(encoders):
            raise SimulationError(f"rates: expected {len(encoders)} values, got {len(rates)}")
        self.pmf = reorder(source, encoders + side)
        self.encoders, self.side = encoders, side
        self.p = self.pmf.flat()
        self.sizes = list(self.pmf.shape)
        self.A = self.p.size
        self.n, self.epsilon, self.seed, self.rates = n, epsilon, seed, rates
        self.work_cap = work_cap
        M = len(encoders)
        self.items = [self.sizes[m] ** n for m in range(M)]
        for m, it in enumerate(self.items):
            if it > SEQUENCE_CAP:
                raise SimulationError(f"sequence space too large: {encoders[m]} has {it} > {SEQUENCE_CAP} sequences")
        self.bins = [bin_count(n, r) for r in rates]
        self.assign = [balanced_bins(self.items[m], self.bins[m], seed, m) for m in range(M)]
        self.groups = [_Groups(a) for a in self.assign]
        self.letters = [digits(np.arange(self.items[m]), self.sizes[m], n) for m in range(M)]
        self.marginal_ok = []
        for m in range(M):
            pm = self.pmf.marginal_array([encoders[m]]).ravel()
            cnt = symbol_counts(self.letters[m], pm.size)
            self.marginal_ok.append(typical_counts(cnt, pm, epsilon))

    @property
    def M(self) -> int:
        return len(self.encoders)

    def encode(self, seqs: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(self.assign[m][seqs[m]]) for m in range(self.M))

    def decode(self, bins: Sequence[int], side_letters=None) -> tuple[str, tuple | None]:
        """('unique', seqs) or ('none' | 'multiple', None)."""
        cands = []
        for m, b in enumerate(bins):
            mem = self.groups[m].members(b)
            mem = mem[self.marginal_ok[m][mem]]
            if mem.size == 0:
                return "none", None
            cands.append(mem)
        lens = [c.size for c in cands]
        total = math.prod(lens)
        side_flat = None
        if self.side:
            side_flat = np.zeros(self.n, dtype=np.int64)
            for k, s in enumerate(self.side):
                side_flat = side_flat * self.sizes[self.M + k] + np.asarray(side_letters[k])
        side_card = math.prod(self.sizes[self.M:])
        found = []
        for start in range(0, total, CHUNK):
            if start >= self.work_cap:
                raise SimulationError(
                    f"sequence space too large: {total} candidate tuples exceed work cap {self.work_cap}")
            flat = np.arange(start, min(start + CHUNK, total))
            pos = np.unravel_index(flat, lens)
            sym = np.zeros((flat.size, self.n), dtype=np.int64)
            for m in range(self.M):
                sym = sym * self.sizes[m] + self.letters[m][cands[m][pos[m]]]
            if side_flat is not None:
                sym = sym * side_card + side_flat[None, :]
            ok = np.flatnonzero(typical_counts(symbol_counts(sym, self.A), self.p, self.epsilon))
            for i in ok:
                found.append(tuple(int(cands[m][pos[m][i]]) for m in range(self.M)))
                if len(found) > 1:
                    return "multiple", None
        if not found:
            return "none", None
        return "unique", found[0]

    def sample(self, rng: np.random.Generator):
        """One source block: (per-variable block indices, per-variable letters, flat letters)."""
        flat = rng.choice(self.A, size=self.n, p=self.p)
        per = np.unravel_index(flat, self.sizes)
        seqs = [undigits(per[k], self.sizes[k]) for k in range(len(self.sizes))]
        return seqs, per, flat

    def trial(self, rng: np.random.Generator) -> tuple[int, int, int]:
        """(decode_error, ambiguity_error, atypical_source) for one block."""
        seqs, per, flat = self.sample(rng)
        atyp = int(not typical_counts(symbol_counts(flat, self.A), self.p, self.epsilon)[0])
        status, out = self.decode(self.encode(seqs), per[self.M:])
        if status != "unique":
            return 0, 1, atyp
        return int(tuple(out) != tuple(seqs[: self.M])), 0, atyp

    def decoder_joint(self, cap: int = 2 ** 22) -> tuple[JointPMF, DecoderTable]:
        """Exact joint of U = (X_1^n..X_M^n) and V = (bin indices, side sequence) plus the decoder map."""
        block = iid_extend(self.pmf, self.n, cap=cap)
        eff_bins = [min(b, it) for b, it in zip(self.bins, self.items)]
        side_items = [self.sizes[self.M + k] ** self.n for k in range(len(self.side))]
        u_size = math.prod(self.items)
        v_shape = eff_bins + side_items
        v_size = math.prod(v_shape)
        if u_size * v_size > cap:
            raise SimulationError(f"decoder joint too large: {u_size * v_size} cells > {cap}")
        probs = np.zeros((u_size, v_size))
        g = np.zeros(v_size, dtype=np.int64)
        seen: dict[int, int] = {}
        grid = np.indices(block.shape).reshape(len(block.shape), -1).T
        flatp = block.flat()
        for cfg, pr in zip(grid, flatp):
            xs = [int(c) for c in cfg[: self.M]]
            ss = [int(c) for c in cfg[self.M:]]
            u = int(np.ravel_multi_index(xs, self.items))
            v = int(np.ravel_multi_index(list(self.encode(xs)) + ss, v_shape))
            probs[u, v] += pr
            if v not in seen:
                side_letters = [digits(np.array(s), self.sizes[self.M + k], self.n)
                                for k, s in enumerate(ss)]
                status, out = self.decode(self.encode(xs), side_letters)
                seen[v] = int(np.ravel_multi_index(list(out), self.items)) if status == "unique" else 0
                g[v] = seen[v]
        joint = build_joint([Alphabet.range("U", u_size), Alphabet.range("V", v_size)], probs.ravel())
        return joint, DecoderTable(("V",), ("U",), g)

    def fano(self, cap: int = 2 ** 22) -> FanoResult:
        j, g = self.decoder_joint(cap)
        return fano_check(j, g)


def sw_simulate(source: JointPMF, rates: Sequence[float] | None, params: TypicalityParams,
                trials: int, seed: int, *, encoders: Sequence[str] | None = None,
                side: Sequence[str] = (), workers: int = 1, fano: bool = False) -> SimReport:
    """Block error rate of a seeded binning code with a joint-typicality decoder."""
    if rates is None:
        raise SimulationError("rates: required")
    code = SlepianWolfCode(source, rates, params.n, params.epsilon, seed, encoders, side)
    res = _map_trials(lambda t: code.trial(trial_rng(seed, t)), trials, workers)
    dec = sum(r[0] for r in res)
    amb = sum(r[1] for r in res)
    aty = sum(r[2] for r in res)
    extra = {"bins": list(code.bins)}
    if fano:
        f = code.fano()
        extra["fano"] = {"lhs": f.lhs, "rhs": f.rhs, "holds": f.holds}
    cfg = _config("sw", params, trials, seed, encoders=code.encoders, side=code.side)
    return SimReport("sw", trials, dec, amb, aty, list(code.rates), cfg, extra)


# ---------------------------------------------------------------------------
# test-channel stages (single stage and sequential pipeline)

@dataclass
class _Stage:
    m: int
    cond: list[str]          # decoder-side variables (earlier Z's, then V)
    codebook: np.ndarray     # (L, n) letters of Z_m
    groups: _Groups
    assign: np.ndarray
    p_yz: np.ndarray
    p_zc: np.ndarray
    y_size: int
    z_size: int
    cond_sizes: list[int]


class _ChainCode:
    def __init__(self, inst: ChainInstance, rates, params: TypicalityParams, seed: int,
                 delta: float, order: Sequence[int] | None, check_rates: bool):
        validate_structure(inst)
        k = inst.size
        order = list(range(k)) if order is None else [int(i) for i in order]
        if sorted(order) != list(range(k)):
            raise SimulationError(f"order must be a permutation of 0..{k - 1}")
        if rates is None:
            raise SimulationError("rates: required")
        rates = [float(r) for r in rates]
        if len(rates) != k:
            raise SimulationError(f"rates: expected {k} values, got {len(rates)}")
        self.corner = corner_point(inst, order, validate=False)
        if check_rates:
            for i, m in enumerate(order):
                need = self.corner[m] + delta
                if rates[m] < need - 1e-12:
                    raise RateError(
                        f"stage {i + 1} ({inst.y[m]}): rate {rates[m]:.6f} below corner + delta = {need:.6f}",
                        i + 1)
        self.inst, self.rates, self.params, self.seed, self.delta, self.order = (
            inst, rates, params, seed, delta, order)
        n = params.n
        j = inst.joint
        self.src_names = list(inst.y) + list(inst.v)
        self.src = j.marginal_array(self.src_names).ravel()
        self.src_sizes = [j.alphabet(v).size for v in self.src_names]
        self.all_names = list(inst.y) + list(inst.z) + list(inst.v)
        self.p_all = j.marginal_array(self.all_names).ravel()
        self.stages = []
        for i, m in enumerate(order):
            y, z = inst.y[m], inst.z[m]
            bits = set_mi(j, [y], [z]) + delta
            L = 1 << max(0, math.ceil(n * bits - 1e-9))
            if L > CODEBOOK_CAP:
                raise SimulationError(f"codebook cap exceeded: stage {i + 1} needs {L} > {CODEBOOK_CAP} codewords")
            pz = j.marginal_array([z]).ravel()
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(CODEBOOK_KEY, m)))
            cb = rng.choice(pz.size, size=(L, n), p=pz)
            assign = balanced_bins(L, bin_count(n, rates[m]), seed, CODEBOOK_KEY + m)
            cond = [inst.z[o] for o in order[:i]] + list(inst.v)
            self.stages.append(_Stage(
                m, cond, cb, _Groups(assign), assign,
                j.marginal_array([y, z]).ravel(), j.marginal_array([z] + cond).ravel(),
                j.alphabet(y).size, pz.size, [j.alphabet(c).size for c in cond]))
        self.codebook_sizes = [s.codebook.shape[0] for s in self.stages]

    def trial(self, rng: np.random.Generator) -> dict:
        eps, n = self.params.epsilon, self.params.n
        flat = rng.choice(self.src.size, size=n, p=self.src)
        per = np.unravel_index(flat, self.src_sizes)
        known = {name: per[i] for i, name in enumerate(self.src_names)}
        out = {"decode": 0, "ambiguity": 0, "encoder": 0, "success": 0,
               "atypical": int(not typical_counts(symbol_counts(flat, self.src.size), self.src, eps)[0])}
        zhat = {}
        for st in self.stages:
            y = known[self.inst.y[st.m]]
            sym = y[None, :] * st.z_size + st.codebook
            ok = np.flatnonzero(typical_counts(symbol_counts(sym, st.p_yz.size), st.p_yz, eps))
            if ok.size == 0:
                out["encoder"] = 1
                return out
            chosen = int(ok[0])
            mem = st.groups.members(int(st.assign[chosen]))
            cond = np.zeros(n, dtype=np.int64)
            for c, s in zip(st.cond, st.cond_sizes):
                cond = cond * s + (zhat[c] if c in zhat else known[c])
            card = math.prod(st.cond_sizes)
            sym = st.codebook[mem] * card + cond[None, :]
            hit = mem[typical_counts(symbol_counts(sym, st.p_zc.size), st.p_zc, eps)]
            uniq = np.unique(st.codebook[hit], axis=0) if hit.size else hit
            if uniq.shape[0] != 1:
                out["ambiguity"] = 1
                return out
            if not np.array_equal(uniq[0], st.codebook[chosen]):
                out["decode"] = 1
            zhat[self.inst.z[st.m]] = uniq[0]
        flat_all = np.zeros(n, dtype=np.int64)
        for name in self.all_names:
            s = self.inst.joint.alphabet(name).size
            flat_all = flat_all * s + (zhat[name] if name in zhat else known[name])
        out["success"] = int(typical_counts(symbol_counts(flat_all, self.p_all.size), self.p_all, eps)[0])
        return out


def _chain_report(kind, code: _ChainCode, trials, seed, workers) -> SimReport:
    res = _map_trials(lambda t: code.trial(trial_rng(seed, t)), trials, workers)
    tot = {k: sum(r[k] for r in res) for k in ("decode", "ambiguity", "encoder", "success", "atypical")}
    extra = {
        "encoder_failures": tot["encoder"],
        "final_typical": tot["success"],
        "success_rate": tot["success"] / trials if trials else 0.0,
        "codebook_sizes": code.codebook_sizes,
        "corner": [float(c) for c in code.corner],
        "order": [code.inst.y[m] for m in code.order],
    }
    cfg = _config(kind, code.params, trials, seed, delta=code.delta)
    return SimReport(kind, trials, tot["decode"], tot["ambiguity"], tot["atypical"],
                     list(code.rates), cfg, extra)


def wz_stage_simulate(stage: ChainInstance, rate: float, params: TypicalityParams, trials: int,
                      seed: int, delta: float = 0.1, workers: int = 1) -> SimReport:
    """Test-channel codebook, binning, and decoding with side information V for one source."""
    if stage.size != 1:
        raise SimulationError("a single stage has exactly one (Y, Z) pair")
    code = _ChainCode(stage, [rate], params, seed, delta, None, check_rates=False)
    return _chain_report("wz", code, trials, seed, workers)


def pipeline_simulate(instance: ChainInstance, rates: Sequence[float], params: TypicalityParams,
                      trials: int, seed: int, delta: float = 0.1, order: Sequence[int] | None = None,
                      workers: int = 1) -> SimReport:
    """Chained stages; stage i decodes with the earlier reconstructions and V."""
    code = _ChainCode(instance, rates, params, seed, delta, order, check_rates=True)
    return _chain_report("pipeline", code, trials, seed, workers)


# ---------------------------------------------------------------------------
# Markov lemma

def markov_consistency_check(triple: JointPMF, params: TypicalityParams, trials: int, seed: int,
                             y1: str = "Y1", y2: str = "Y2", z1: str = "Z1", workers: int = 1) -> SimReport:
    """Among blocks with (Y1,Y2) and (Y1,Z1) pairwise typical, how often is the triple atypical?

    Z1 is drawn letter by letter from q(z1|y1) given the Y1 block.
    """
    leak = set_mi(triple, [y2], [z1], [y1])
    if leak > 1e-9:
        raise StructureError(f"structure validation failure: I({y2}; {z1} | {y1}) = {leak:.3e}")
    t = reorder(triple, [y1, y2, z1])
    a1, a2, az = t.shape
    p12 = t.marginal_array([y1, y2]).ravel()
    p1z = t.marginal_array([y1, z1]).ravel()
    p_all = t.flat()
    py1 = t.marginal_array([y1])
    pj = t.marginal_array([y1, z1])
    q = np.where(py1[:, None] > 0, pj / np.where(py1[:, None] > 0, py1[:, None], 1.0), 1.0 / az)
    cum = np.cumsum(q, axis=1)
    n, eps = params.n, params.epsilon

    def one(k):
        rng = trial_rng(seed, k)
        pair = rng.choice(p12.size, size=n, p=p12)
        ya, yb = np.divmod(pair, a2)
        u = rng.random(n)
        z = np.minimum((u[:, None] >= cum[ya]).sum(axis=1), az - 1)
        ok12 = typical_counts(symbol_counts(pair, p12.size), p12, eps)[0]
        ok1z = typical_counts(symbol_counts(ya * az + z, p1z.size), p1z, eps)[0]
        if not (ok12 and ok1z):
            return 0, 0
        tri = typical_counts(symbol_counts((ya * a2 + yb) * az + z, p_all.size), p_all, eps)[0]
        return 1, int(not tri)

    res = _map_trials(one, trials, workers)
    cond = sum(r[0] for r in res)
    fail = sum(r[1] for r in res)
    extra = {"conditioned": cond, "triple_failures": fail,
             "failure_fraction": fail / cond if cond else 0.0}
    cfg = _config("markov", params, trials, seed, variables=[y1, y2, z1])
    return SimReport("markov", trials, fail, 0, trials - cond, [], cfg, extra)
