"""JSON wire formats for problem specs, chain instances and sweep grids."""
from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .corners import ChainInstance
from .probability import (
    Alphabet,
    DistributionError,
    JointPMF,
    block_alphabet,
    channel_from_dict,
    pmf_from_dict,
)
from .region import DecoderTable, DistortionCriterion, ProblemSpec, SpecError


class InputError(ValueError):
    """User-facing input problem (exit code 2)."""


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: cannot read ({e.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def _field(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise InputError(f"{key}: required" + (f" in {where}" if where else ""))
    return d[key]


def _roles(j: JointPMF, d: dict):
    names = list(j.names)
    if "X" in d or "W" in d or "S" in d:
        x = list(d.get("X", []))
        w = list(d.get("W", []))
        s = d.get("S")
    else:
        x = [v for v in names if v.startswith("X")]
        w = [v for v in names if v.startswith("W")]
        ss = [v for v in names if v.startswith("S")]
        if len(ss) > 1:
            raise InputError("S: more than one variable named S*; declare roles explicitly")
        s = ss[0] if ss else None
    return x, w, s


def _resolve_J(raw, x: list[str]) -> frozenset[str]:
    out = set()
    for item in raw or []:
        if isinstance(item, int) and not isinstance(item, bool):
            if not 1 <= item <= len(x):
                raise InputError(f"J: index {item} outside 1..{len(x)}")
            out.add(x[item - 1])
        elif isinstance(item, str) and item in x:
            out.add(item)
        else:
            raise InputError(f"J: unknown source {item!r}")
    return frozenset(out)


def distortion_from_dict(d: dict, width: int) -> DistortionCriterion:
    id_ = str(_field(d, "id", "distortion"))
    if d.get("kind") == "hamming":
        return DistortionCriterion.hamming(id_, width)
    table = _field(d, "table", f"distortion {id_!r}")
    return DistortionCriterion(id_, np.asarray(table, dtype=float), d.get("d_max"))


def spec_from_dict(d: dict) -> ProblemSpec:
    try:
        tag = _field(d, "tag", "")
        source = pmf_from_dict(_field(d, "source", ""))
        n = int(d.get("n", 1))
        x, w, s = _roles(source, d)
        if tag.startswith("L"):
            J = frozenset(x) if "J" not in d else _resolve_J(d["J"], x)
        else:
            J = _resolve_J(d.get("J", []), x)
        blocks = {v: block_alphabet(source.alphabet(v), n) for v in source.names}
        channels = tuple(channel_from_dict(c, blocks) for c in d.get("channels", []))
        lossy = [m for m in x if m not in J] if tag != "EST" else list(x)
        width = math.prod(source.alphabet(m).size for m in lossy) if lossy else 1
        dists = tuple(distortion_from_dict(q, width) for q in d.get("distortions", []))
        psi = d.get("psi", "optimal")
        if isinstance(psi, dict):
            psi = decoder_from_dict(psi)
        elif psi != "optimal":
            raise InputError("psi: expected \"optimal\" or a table object")
        spec = ProblemSpec(tag, source, tuple(x), tuple(w), s, J, n, channels, psi, dists)
        return spec.validate()
    except (DistributionError, SpecError) as e:
        raise InputError(str(e)) from None


def decoder_from_dict(d: dict) -> DecoderTable:
    inputs = _field(d, "inputs", "psi")
    outputs = _field(d, "outputs", "psi")
    table = _field(d, "map", "psi")
    return DecoderTable(tuple(inputs), tuple(outputs), np.asarray(table, dtype=np.int64))


def chain_from_dict(d: dict) -> ChainInstance:
    """``{"joint": <pmf>, "Y": [...], "Z": [...], "V": [...]}`` or a pmf plus channels."""
    try:
        if "joint" in d:
            j = pmf_from_dict(d["joint"])
            y = list(_field(d, "Y", "instance"))
            z = list(_field(d, "Z", "instance"))
        else:
            from .corners import instance_from_channels
            base = pmf_from_dict(_field(d, "source", "instance"))
            y = list(_field(d, "Y", "instance"))
            chans = [channel_from_dict(c, {v: base.alphabet(v) for v in base.names})
                     for c in _field(d, "channels", "instance")]
            inst = instance_from_channels(base, y, chans, d.get("V", []))
            return inst
        return ChainInstance(j, tuple(y), tuple(z), tuple(d.get("V", [])))
    except (DistributionError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(str(e)) from None
