"""Finite-blocklength constraint systems for the twelve multiterminal problems.

Encoders are the primary sources ``x`` (indices 1..M) followed by the partial
side-information sources ``w`` (indices M+1..M+K).  Complete side information
``s`` is seen directly by the decoder.  A problem instance fixes the test
channels for the lossily coded sources, so the region slice returned here is
the set of rate/distortion pairs those channels certify.

Tag grammar: first letter L (all lossless), D (all under distortion) or T
(subset ``J`` lossless); suffix ``P`` when ``w`` is present, ``C`` when ``s``
is present.  ``EST`` is the estimation problem (one unencoded target).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .info import CLAMP, set_h, set_mi
from .probability import (
    Alphabet,
    Channel,
    DistributionError,
    JointPMF,
    attach_channel,
    block_alphabet,
    iid_extend,
    marginalize,
    with_point_mass,
)

TAGS = ("L", "LC", "LP", "LPC", "D", "DC", "DP", "DPC", "T", "TC", "TP", "TPC")
EST = "EST"
DIRECTIONS = ("drop_S", "drop_W", "J_full", "J_empty")
TIE_RTOL = 1e-12


class SpecError(ValueError):
    """Inconsistent problem specification."""


def copy_name(x: str) -> str:
    """Name of the internal identity copy standing in for Z_m when m is lossless."""
    return f"{x}'"


def subsets(items: Sequence[str]) -> list[tuple[str, ...]]:
    """Nonempty subsets, by size then in the order of ``items``."""
    items = tuple(items)
    return [c for r in range(1, len(items) + 1) for c in itertools.combinations(items, r)]


def _clamp(v: float) -> float:
    return 0.0 if -CLAMP < v < 0.0 else v


# ---------------------------------------------------------------------------
# distortion and decoders

@dataclass(frozen=True, eq=False)
class DistortionCriterion:
    """Per-letter distortion d(x, xhat) over the product alphabet of the lossy sources.

    ``table[u, v]``: u and v index that product alphabet row-major.
    """

    id: str
    table: np.ndarray
    d_max: float | None = None

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise SpecError(f"distortion {self.id!r}: table must be square")
        if np.any(t < 0):
            raise SpecError(f"distortion {self.id!r}: negative entry")
        d_max = float(t.max()) if self.d_max is None else float(self.d_max)
        if t.max() > d_max + 1e-12:
            raise SpecError(f"distortion {self.id!r}: entry exceeds d_max={d_max}")
        t = np.ascontiguousarray(t)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "d_max", d_max)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @classmethod
    def hamming(cls, id: str, size: int) -> "DistortionCriterion":
        return cls(id, 1.0 - np.eye(size), 1.0)


@dataclass(frozen=True, eq=False)
class DecoderTable:
    """Deterministic map from input configurations to reconstruction symbols.

    ``table`` has shape ``input sizes`` and holds the flat (row-major) index into
    the product alphabet of ``outputs``.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    table: np.ndarray
    unresolved: int = 0

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))

    def flat(self) -> np.ndarray:
        return self.table.ravel()

    def check_against(self, j: JointPMF):
        shape = tuple(j.alphabet(n).size for n in self.inputs)
        if self.table.shape != shape:
            raise SpecError(f"decoder table shape {self.table.shape} does not match inputs {shape}")
        out = j.size_of(self.outputs)
        if self.table.size and (self.table.min() < 0 or self.table.max() >= out):
            raise SpecError("decoder output index out of range")


def _letter_sizes(block_sizes: Sequence[int], n: int) -> list[int]:
    out = []
    for s in block_sizes:
        a = int(round(s ** (1.0 / n)))
        if a ** n != s:
            raise SpecError(f"alphabet of size {s} is not a {n}-letter block alphabet")
        out.append(a)
    return out


def block_distortion_matrix(d: DistortionCriterion, block_sizes: Sequence[int], n: int = 1) -> np.ndarray:
    """(1/n) * sum_k d(x(k), xhat(k)) over the product of block alphabets."""
    letters = _letter_sizes(block_sizes, n)
    if math.prod(letters) != d.size:
        raise SpecError(
            f"distortion {d.id!r}: table size {d.size} does not match letter alphabet {math.prod(letters)}")
    if n == 1:
        return np.asarray(d.table)
    total = math.prod(block_sizes)
    blocks = np.unravel_index(np.arange(total), block_sizes)
    acc = np.zeros((total, total))
    for k in range(n):
        letter_idx = np.zeros(total, dtype=np.int64)
        for b, a in zip(blocks, letters):
            digit = (b // a ** (n - 1 - k)) % a
            letter_idx = letter_idx * a + digit
        acc += d.table[np.ix_(letter_idx, letter_idx)]
    return acc / n


def _cost_matrix(joint: JointPMF, ds, inputs, targets, n):
    ds = [ds] if isinstance(ds, DistortionCriterion) else list(ds)
    sizes = [joint.alphabet(t).size for t in targets]
    dn = sum(block_distortion_matrix(d, sizes, n) for d in ds)
    p = joint.marginal_array(list(targets) + list(inputs)).reshape(math.prod(sizes), -1)
    return p, dn


def optimal_psi(joint: JointPMF, d, inputs: Sequence[str], targets: Sequence[str], n: int = 1) -> DecoderTable:
    """Bayes-optimal reconstruction of ``targets`` from ``inputs``.

    ``d`` may be one criterion or several (their sum is minimized).  Ties go to
    the lowest symbol index; zero-probability input configurations map to
    index 0 and are counted in ``unresolved``.
    """
    inputs, targets = tuple(inputs), tuple(targets)
    if not inputs:
        raise SpecError("optimal_psi needs at least one input")
    p, dn = _cost_matrix(joint, d, inputs, targets, n)
    # expected[i, v] = sum_u p[u, i] * dn[u, v]
    expected = p.T @ dn
    best = expected.min(axis=1, keepdims=True)
    scale = np.maximum(np.abs(expected).max(axis=1, keepdims=True), 1e-300)
    choice = np.argmax(expected <= best + TIE_RTOL * scale, axis=1)
    dead = p.sum(axis=0) <= 0
    choice[dead] = 0
    shape = tuple(joint.alphabet(i).size for i in inputs)
    return DecoderTable(inputs, targets, choice.reshape(shape), int(dead.sum()))


def expected_distortion(joint: JointPMF, psi: DecoderTable, d: DistortionCriterion, n: int = 1) -> float:
    """(1/n) E d_n(targets, psi(inputs))."""
    psi.check_against(joint)
    p, dn = _cost_matrix(joint, d, psi.inputs, psi.outputs, n)
    cols = psi.flat()
    return float(np.einsum("ui,ui->", p, dn[:, cols]))


# ---------------------------------------------------------------------------
# problem specs

@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A problem tag plus an instance: per-letter source, test channels, decoder."""

    tag: str
    source: JointPMF
    x: tuple[str, ...]
    w: tuple[str, ...] = ()
    s: str | None = None
    J: frozenset[str] = frozenset()
    n: int = 1
    channels: tuple[Channel, ...] = ()
    psi: DecoderTable | str = "optimal"
    distortions: tuple[DistortionCriterion, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "w", tuple(self.w))
        object.__setattr__(self, "J", frozenset(self.J))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "distortions", tuple(self.distortions))

    @property
    def M(self) -> int:
        return len(self.x)

    @property
    def K(self) -> int:
        return len(self.w)

    @property
    def has_S(self) -> bool:
        return self.s is not None

    @property
    def encoders(self) -> tuple[str, ...]:
        return self.x + self.w

    @property
    def lossy(self) -> tuple[str, ...]:
        """X_{J^c} in encoder order."""
        return tuple(m for m in self.x if m not in self.J)

    def channel_for(self, var: str) -> Channel:
        for c in self.channels:
            if c.inputs == (var,):
                return c
        raise SpecError(f"no channel for {var!r}")

    def validate(self) -> "ProblemSpec":
        tag = self.tag
        if tag not in TAGS and tag != EST:
            raise SpecError(f"tag: unknown tag {tag!r}")
        if self.n < 1:
            raise SpecError("n: blocklength must be positive")
        names = set(self.source.names)
        declared = list(self.x) + list(self.w) + ([self.s] if self.s else [])
        if len(set(declared)) != len(declared):
            raise SpecError("source roles overlap")
        if not set(declared) <= names:
            raise SpecError(f"declared roles {sorted(set(declared) - names)} missing from source")
        if not self.x:
            raise SpecError("M: at least one primary source required")
        if not self.J <= set(self.x):
            raise SpecError("J: must be a subset of the primary sources")
        suffix = tag[1:] if tag != EST else ""
        if tag == EST:
            if self.M != 1 or self.J:
                raise SpecError("estimation shape: exactly one unencoded target, J empty")
            if not self.w:
                raise SpecError("estimation shape: at least one observation W")
        else:
            if ("P" in suffix) != bool(self.w):
                raise SpecError("K: partial side information present iff tag contains P")
            if ("C" in suffix) != self.has_S:
                raise SpecError("has_S: complete side information present iff tag contains C")
            if tag[0] == "L" and self.J != set(self.x):
                raise SpecError("J: lossless tags require J = all sources")
            if tag[0] == "D" and self.J:
                raise SpecError("J: distortion tags require J = {}")
        coded = set(self.lossy) | set(self.w) if tag != EST else set(self.w)
        covered = [c.inputs for c in self.channels]
        for c in self.channels:
            if len(c.inputs) != 1:
                raise SpecError(f"channel to {c.output.name!r}: exactly one input required")
        if sorted(i[0] for i in covered) != sorted(coded):
            raise SpecError(
                f"channels: must cover exactly {sorted(coded)}, got {sorted(i[0] for i in covered)}")
        outs = [c.output.name for c in self.channels]
        if len(set(outs)) != len(outs) or set(outs) & names:
            raise SpecError("channels: output names must be distinct and new")
        for c in self.channels:
            want = self.source.alphabet(c.inputs[0]).size ** self.n
            if c.table.shape[0] != want:
                raise SpecError(
                    f"channel to {c.output.name!r}: expects input alphabet of size {want} at n={self.n}")
        if self.distortions:
            if tag != EST and tag[0] == "L":
                raise SpecError("distortions: lossless tags take no distortion criteria")
            width = math.prod(self.source.alphabet(m).size for m in self.lossy)
            for d in self.distortions:
                if d.size != width:
                    raise SpecError(f"distortion {d.id!r}: dimension mismatch ({d.size} vs {width})")
        return self


def _active_source(spec: ProblemSpec) -> JointPMF:
    """Source restricted to declared roles; other variables are dormant."""
    declared = set(spec.encoders) | ({spec.s} if spec.s else set())
    if declared == set(spec.source.names):
        return spec.source
    return marginalize(spec.source, [v for v in spec.source.names if v in declared])


def _working_joint(spec: ProblemSpec) -> tuple[JointPMF, dict[str, str]]:
    """Block joint p_n * prod q * prod r, with identity copies for lossless sources."""
    j = iid_extend(_active_source(spec), spec.n)
    z = {}
    for m in spec.x:
        if m in spec.J:
            c = Channel.identity(j.alphabet(m), copy_name(m))
            j = attach_channel(j, c)
            z[m] = c.output.name
    for c in spec.channels:
        j = attach_channel(j, c)
        z[c.inputs[0]] = c.output.name
    return j, z


# ---------------------------------------------------------------------------
# constraint systems

@dataclass(frozen=True)
class RateRow:
    subset: tuple[str, ...]
    bound: float
    family: str


@dataclass
class ConstraintSystem:
    """Rows R_subset >= bound (bits per letter) plus achieved distortions."""

    tag: str
    n: int
    encoders: tuple[str, ...]
    rate_constraints: list[RateRow]
    distortion_values: list[tuple[str, float]] = field(default_factory=list)
    psi: DecoderTable | None = None

    def bounds(self) -> dict[tuple[str, ...], float]:
        return {r.subset: r.bound for r in self.rate_constraints}

    def row(self, subset: Iterable[str]) -> RateRow:
        key = set(subset)
        for r in self.rate_constraints:
            if set(r.subset) == key:
                return r
        raise KeyError(tuple(subset))

    def contains(self, rates, distortions=None, tol: float = 1e-9) -> bool:
        """True if ``rates`` (dict or sequence in encoder order) meets every row."""
        if not isinstance(rates, dict):
            rates = dict(zip(self.encoders, rates))
        for r in self.rate_constraints:
            if sum(rates[e] for e in r.subset) < r.bound - tol:
                return False
        if distortions is not None:
            for (id_, achieved) in self.distortion_values:
                if distortions[id_] < achieved - tol:
                    return False
        return True

    def total_rate(self) -> float:
        """Smallest admissible sum rate: the largest full-set row sum."""
        xs = [r for r in self.rate_constraints if r.family in ("source-mi", "source-entropy", "split")]
        ws = [r for r in self.rate_constraints if r.family in ("side-mi", "estimation")]
        top = lambda rows: max((r for r in rows), key=lambda r: len(r.subset)).bound if rows else 0.0
        return top(xs) + top(ws)

    def to_dict(self, digits: int | None = None) -> dict:
        fmt = (lambda v: v) if digits is None else (lambda v: round(v, digits) + 0.0)
        out = {
            "tag": self.tag,
            "n": self.n,
            "encoders": list(self.encoders),
            "rate_constraints": [
                {"subset": list(r.subset), "bound": fmt(r.bound), "family": r.family}
                for r in self.rate_constraints
            ],
            "distortion_values": [{"id": i, "value": fmt(v)} for i, v in self.distortion_values],
        }
        if self.psi is not None and self.psi.unresolved:
            out["psi_unresolved_inputs"] = self.psi.unresolved
        return out

    def to_text(self) -> str:
        lines = [f"tag {self.tag}  n={self.n}  rows={len(self.rate_constraints)}"]
        width = max([len("+".join(r.subset)) for r in self.rate_constraints] + [6])
        for r in self.rate_constraints:
            label = "R(" + ",".join(r.subset) + ")"
            lines.append(f"  {label:<{width + 3}} >= {r.bound:.6f}   [{r.family}]")
        for i, v in self.distortion_values:
            lines.append(f"  D[{i}] = {v:.6f}")
        return "\n".join(lines)


def _distortion_rows(spec: ProblemSpec, joint: JointPMF, inputs: Sequence[str], targets: Sequence[str]):
    if not targets or not spec.distortions:
        return [], None
    if isinstance(spec.psi, DecoderTable):
        psi = spec.psi
        if set(psi.inputs) - set(joint.names):
            raise SpecError(f"psi: unknown input {sorted(set(psi.inputs) - set(joint.names))}")
        if tuple(psi.outputs) != tuple(targets):
            raise SpecError(f"psi: outputs must be {list(targets)}")
    else:
        psi = optimal_psi(joint, spec.distortions, inputs, targets, spec.n)
    vals = [(d.id, expected_distortion(joint, psi, d, spec.n)) for d in spec.distortions]
    return vals, psi


def build_region(spec: ProblemSpec) -> ConstraintSystem:
    """Constraint system of the region slice certified by the problem's test channels.

    Row families:
      source-mi       (1/n) I(X_I; Z_I | Z_rest, S)             T*, D* sources
      source-entropy  (1/n) H(X_I | X_{I^c}, Z_W, S)            L* sources
      side-mi         (1/n) I(W_I; Z_I | Z_{W \\ I}, S)           partial side information
    """
    spec.validate()
    if spec.tag == EST:
        return estimation_region(spec)
    joint, z = _working_joint(spec)
    S = [spec.s] if spec.s else []
    n = spec.n
    rows = []
    for I in subsets(spec.x):
        rest = [m for m in spec.x if m not in I]
        if spec.tag[0] == "L":
            b = set_h(joint, I, rest + [z[wj] for wj in spec.w] + S)
            fam = "source-entropy"
        else:
            b = set_mi(joint, I, [z[m] for m in I], [z[e] for e in spec.encoders if e not in I] + S)
            fam = "source-mi"
        rows.append(RateRow(I, _clamp(b / n), fam))
    rows += _side_rows(spec, joint, z, S)
    inputs = [m for m in spec.x if m in spec.J] + [z[m] for m in spec.lossy] + [z[wj] for wj in spec.w] + S
    dist, psi = _distortion_rows(spec, joint, inputs, spec.lossy)
    return ConstraintSystem(spec.tag, n, spec.encoders, rows, dist, psi)


def _side_rows(spec, joint, z, S, family="side-mi"):
    rows = []
    for I in subsets(spec.w):
        rest = [z[wj] for wj in spec.w if wj not in I]
        b = set_mi(joint, I, [z[wj] for wj in I], rest + S)
        rows.append(RateRow(I, _clamp(b / spec.n), family))
    return rows


def equivalent_form_tpc(spec: ProblemSpec) -> ConstraintSystem:
    """Same rows as :func:`build_region` for T* tags, via the lossless/lossy split.

    For I = I' + I'' with I' in J and I'' outside J and U = (Z outside J and I'', S):
    bound = [H(X_I' | X_{J \\ I'}, U) + I(X_I''; Z_I'' | X_J, U)] / n.
    """
    spec.validate()
    if spec.tag not in ("TPC", "TP", "TC", "T"):
        raise SpecError(f"wrong tag: split form applies to T-family tags, not {spec.tag!r}")
    joint, z = _working_joint(spec)
    S = [spec.s] if spec.s else []
    XJ = [m for m in spec.x if m in spec.J]
    rows = []
    for I in subsets(spec.x):
        I1 = [m for m in I if m in spec.J]
        I2 = [m for m in I if m not in spec.J]
        U = [z[e] for e in spec.encoders if e not in spec.J and e not in I2] + S
        b = 0.0
        if I1:
            b += set_h(joint, I1, [m for m in XJ if m not in I1] + U)
        if I2:
            b += set_mi(joint, I2, [z[m] for m in I2], XJ + U)
        rows.append(RateRow(I, _clamp(b / spec.n), "split"))
    rows += _side_rows(spec, joint, z, S)
    inputs = XJ + [z[m] for m in spec.lossy] + [z[wj] for wj in spec.w] + S
    dist, psi = _distortion_rows(spec, joint, inputs, spec.lossy)
    return ConstraintSystem(spec.tag, spec.n, spec.encoders, rows, dist, psi)


def estimation_region(spec: ProblemSpec) -> ConstraintSystem:
    """Rate rows over the observation encoders plus the estimation distortion."""
    spec.validate()
    if spec.tag != EST:
        raise SpecError("spec not in estimation shape: tag must be EST")
    j = iid_extend(_active_source(spec), spec.n)
    z = {}
    for c in spec.channels:
        j = attach_channel(j, c)
        z[c.inputs[0]] = c.output.name
    S = [spec.s] if spec.s else []
    rows = _side_rows(spec, j, z, S, family="estimation")
    dist, psi = _distortion_rows(spec, j, [z[wj] for wj in spec.w] + S, spec.x)
    return ConstraintSystem(EST, spec.n, spec.w, rows, dist, psi)


def estimation_as_dpc(spec: ProblemSpec) -> ProblemSpec:
    """The DPC instance (M=1) whose region, minus the target's row, is the estimation region.

    The target gets a one-symbol test channel, i.e. its description is marginalized out.
    """
    spec.validate()
    if spec.tag != EST:
        raise SpecError("spec not in estimation shape: tag must be EST")
    (x,) = spec.x
    block = block_alphabet(spec.source.alphabet(x), spec.n)
    mute = Channel.constant(block, Alphabet(copy_name(x), ("*",)))
    tag = "DPC" if spec.has_S else "DP"
    psi = spec.psi
    return replace(spec, tag=tag, channels=spec.channels + (mute,), psi=psi)


# ---------------------------------------------------------------------------
# specialization lattice

def _strip(tag: str, letter: str) -> str:
    return tag[0] + tag[1:].replace(letter, "")


def _lift(d: DistortionCriterion, spec: ProblemSpec, to: Sequence[str]) -> DistortionCriterion:
    """Re-index a criterion on X_{J^c} as one on ``to`` that ignores the extra coordinates."""
    src = list(spec.lossy)
    sizes = [spec.source.alphabet(m).size for m in to]
    grid = np.unravel_index(np.arange(math.prod(sizes)), sizes)
    pos = {m: k for k, m in enumerate(to)}
    src_sizes = [spec.source.alphabet(m).size for m in src]
    idx = np.ravel_multi_index([grid[pos[m]] for m in src], src_sizes) if src else np.zeros(len(grid[0]), int)
    return DistortionCriterion(d.id, d.table[np.ix_(idx, idx)], d.d_max)


def specialize(spec: ProblemSpec, direction: str) -> ProblemSpec:
    """Child problem one step down the lattice (drop S, drop W, J=all, J={}).

    Dropped variables stay in ``source`` as dormant axes, so the order in which
    S and W are dropped does not matter, bit for bit.
    """
    spec.validate()
    tag = spec.tag
    if direction == "drop_S":
        if "C" not in tag[1:]:
            raise SpecError(f"inapplicable direction drop_S for tag {tag}")
        return replace(spec, tag=_strip(tag, "C"), s=None)
    if direction == "drop_W":
        if "P" not in tag[1:]:
            raise SpecError(f"inapplicable direction drop_W for tag {tag}")
        chans = tuple(c for c in spec.channels if c.inputs[0] not in spec.w)
        return replace(spec, tag=_strip(tag, "P"), w=(), channels=chans)
    if direction == "J_full":
        if tag[0] != "T":
            raise SpecError(f"inapplicable direction J_full for tag {tag}")
        chans = tuple(c for c in spec.channels if c.inputs[0] in spec.w)
        return replace(spec, tag="L" + tag[1:], J=frozenset(spec.x), channels=chans,
                       distortions=(), psi="optimal")
    if direction == "J_empty":
        if tag[0] != "T":
            raise SpecError(f"inapplicable direction J_empty for tag {tag}")
        if isinstance(spec.psi, DecoderTable):
            raise SpecError("J_empty: explicit psi tables are not re-indexed; use psi='optimal'")
        block = lambda m: block_alphabet(spec.source.alphabet(m), spec.n)
        ids = tuple(Channel.identity(block(m), copy_name(m)) for m in spec.x if m in spec.J)
        dists = tuple(_lift(d, spec, spec.x) for d in spec.distortions)
        return replace(spec, tag="D" + tag[1:], J=frozenset(), channels=spec.channels + ids,
                       distortions=dists)
    raise SpecError(f"unknown direction {direction!r}")


def trivialize(spec: ProblemSpec, direction: str) -> ProblemSpec:
    """The parent problem with the dropped ingredient made degenerate, tag unchanged.

    drop_S: S becomes a one-point variable.  drop_W: every W_j becomes one-point and
    its test channel a constant one.  J_full / J_empty: J set to all / none within
    the T family.  ``build_region`` of the result must agree with the region of
    ``specialize(spec, direction)`` on every shared row.
    """
    spec.validate()
    tag = spec.tag
    if direction == "drop_S":
        if "C" not in tag[1:]:
            raise SpecError(f"inapplicable direction drop_S for tag {tag}")
        keep = [v for v in spec.source.names if v != spec.s]
        src = with_point_mass(marginalize(spec.source, keep), spec.s)
        return replace(spec, source=src)
    if direction == "drop_W":
        if "P" not in tag[1:]:
            raise SpecError(f"inapplicable direction drop_W for tag {tag}")
        keep = [v for v in spec.source.names if v not in spec.w]
        src = marginalize(spec.source, keep)
        joint, z = _working_joint(spec)
        chans = []
        for c in spec.channels:
            if c.inputs[0] in spec.w:
                src = with_point_mass(src, c.inputs[0])
                row = joint.marginal_array([c.output.name])
                chans.append(Channel.constant(Alphabet(c.inputs[0], ("0",)), c.output, row))
            else:
                chans.append(c)
        return replace(spec, source=src, channels=tuple(chans))
    if direction in ("J_full", "J_empty"):
        child = specialize(spec, direction)
        return replace(child, tag=tag)
    raise SpecError(f"unknown direction {direction!r}")


def lattice_children(tag: str) -> list[tuple[str, str]]:
    """(direction, child tag) pairs applicable to ``tag``."""
    out = []
    if "C" in tag[1:]:
        out.append(("drop_S", _strip(tag, "C")))
    if "P" in tag[1:]:
        out.append(("drop_W", _strip(tag, "P")))
    if tag[0] == "T":
        out.append(("J_full", "L" + tag[1:]))
        out.append(("J_empty", "D" + tag[1:]))
    return out


def compare_systems(child: ConstraintSystem, parent: ConstraintSystem) -> float:
    """Max discrepancy between shared rows/distortions; parent-only rows must be 0.

    Raises KeyError when the child has a row the parent lacks.
    """
    pb = parent.bounds()
    cb = child.bounds()
    gap = 0.0
    for k, v in cb.items():
        gap = max(gap, abs(v - pb[k]))
    for k, v in pb.items():
        if k not in cb:
            gap = max(gap, abs(v))
    pd = dict(parent.distortion_values)
    for k, v in child.distortion_values:
        gap = max(gap, abs(v - pd[k]))
    return gap


# ---------------------------------------------------------------------------
# random instances

def random_spec(rng: np.random.Generator, tag: str = "TPC", M: int = 2, K: int = 1,
                alphabet_cap: int = 3, n: int = 1, J: Iterable[int] | None = None,
                distortions: bool = True) -> ProblemSpec:
    """Dirichlet(1) source and test channels; per-letter alphabets of size 2..cap.

    ``J`` (0-based positions) is only consulted for T-family tags; by default a
    random subset is drawn.
    """
    from .probability import build_joint

    est = tag == EST
    if est:
        M = 1
    suffix = tag[1:] if not est else ""
    K = K if ("P" in suffix or est) else 0
    has_s = "C" in suffix or (est and bool(rng.integers(0, 2)))
    size = lambda: int(rng.integers(2, alphabet_cap + 1))
    x = [f"X{i + 1}" for i in range(M)]
    w = [f"W{j + 1}" for j in range(K)]
    names = x + w + (["S"] if has_s else [])
    alph = [Alphabet.range(v, size()) for v in names]
    src = build_joint(alph, rng.dirichlet(np.ones(math.prod(a.size for a in alph))))
    if est:
        Jset = frozenset()
    elif tag[0] == "L":
        Jset = frozenset(x)
    elif tag[0] == "D":
        Jset = frozenset()
    elif J is None:
        Jset = frozenset(m for m in x if rng.integers(0, 2))
    else:
        Jset = frozenset(x[i] for i in J)
    coded = (w if est else [m for m in x if m not in Jset] + w)
    chans = []
    for v in coded:
        k = (x + w).index(v) + 1
        blk = block_alphabet(src.alphabet(v), n)
        zs = size()
        chans.append(Channel((v,), Alphabet.range(f"Z{k}", zs), rng.dirichlet(np.ones(zs), size=blk.size)))
    lossy = list(x) if est else [m for m in x if m not in Jset]
    dists = ()
    if distortions and lossy and (est or tag[0] != "L"):
        width = math.prod(src.alphabet(m).size for m in lossy)
        dists = (DistortionCriterion("d", rng.random((width, width))),)
    return ProblemSpec(tag, src, tuple(x), tuple(w), "S" if has_s else None, Jset, n,
                       tuple(chans), "optimal", dists).validate()
