"""``mtsc`` command line: JSON in, aligned text or JSON out.

Exit codes: 0 ok, 2 user error, 3 internal invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from . import corners as C
from .identities import CATALOG, PreconditionError, fuzz_identities
from .info import parse_query
from .probability import Channel, DistributionError, block_alphabet, pmf_from_dict
from .region import SpecError, build_region, equivalent_form_tpc, estimation_region
from .simulate import (
    SimulationError,
    markov_consistency_check,
    pipeline_simulate,
    sw_simulate,
    wz_stage_simulate,
)
from .specio import InputError, chain_from_dict, load_json, spec_from_dict
from .typicality import FanoViolation, TypicalityError, TypicalityParams, typicality_probability

USER_ERRORS = (InputError, SpecError, DistributionError, SimulationError, TypicalityError,
               PreconditionError, C.StructureError)
SWEEP_CAP = 10_000


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# verbs

def cmd_info(a, out):
    j = pmf_from_dict(load_json(a.pmf))
    queries = a.query or [f"H({v})" for v in j.names] + [f"H({','.join(j.names)})"]
    rows = []
    for q in queries:
        iq = parse_query(q)
        rows.append((str(iq) if not a.query else q.strip(), iq.evaluate(j)))
    if a.json:
        out.write(_dump({"queries": [{"query": q, "bits": round(v, 6) + 0.0} for q, v in rows]}) + "\n")
    else:
        w = max(len(q) for q, _ in rows)
        for q, v in rows:
            out.write(f"{q:<{w}}  {v:.6f}\n")


def _emit_system(sys_, a, out):
    if a.json:
        out.write(_dump(sys_.to_dict(digits=6)) + "\n")
    else:
        out.write(sys_.to_text() + "\n")


def cmd_region(a, out):
    spec = spec_from_dict(load_json(a.spec))
    sys_ = equivalent_form_tpc(spec) if a.form == "split" else build_region(spec)
    _emit_system(sys_, a, out)


def cmd_estimate(a, out):
    spec = spec_from_dict(load_json(a.spec))
    _emit_system(estimation_region(spec), a, out)


def cmd_corners(a, out):
    inst = chain_from_dict(load_json(a.instance))
    cs = C.enumerate_corners(inst)
    if not cs.degenerate:
        for c in cs.corners:
            if not C.is_chain(c.tight):
                raise AssertionError(f"tight sets of corner {c.perm} are not nested")
    if a.json:
        out.write(_dump(cs.to_dict()) + "\n")
        return
    out.write(f"encoders {' '.join(inst.y)}  corners={len(cs.corners)}  "
              f"duplicates_merged={str(cs.duplicates_merged).lower()}  "
              f"degenerate={str(cs.degenerate).lower()}\n")
    for c in cs.corners:
        perm = ">".join(inst.y[i] for i in c.perm)
        rates = " ".join(f"{v:.6f}" for v in c.rates)
        tight = " ".join("{" + ",".join(inst.y[i] for i in t) + "}" for t in c.tight)
        out.write(f"  {perm:<12} ({rates})  tight: {tight}\n")


def cmd_member(a, out):
    inst = chain_from_dict(load_json(a.instance))
    point = np.array(_floats(a.point, "point"))
    m = C.membership(point, inst)
    res = {"status": m.status, "subsets": [[inst.y[i] for i in s] for s in m.subsets]}
    if a.witness and m.status != "outside":
        cs = C.enumerate_corners(inst)
        w = C.convex_witness(point, cs, samples=a.samples)
        res["witness"] = None if w is None else {
            ">".join(inst.y[i] for i in k): round(v, 6) + 0.0 for k, v in w.weights.items()}
        res["budget"] = C.convex_witness.last_budget
    if a.json:
        out.write(_dump(res) + "\n")
        return
    line = res["status"]
    if res["subsets"]:
        line += "  " + " ".join("{" + ",".join(s) + "}" for s in res["subsets"])
    out.write(line + "\n")
    if "witness" in res:
        if res["witness"] is None:
            out.write(f"  no witness found (budget {res['budget']})\n")
        else:
            for k, v in res["witness"].items():
                out.write(f"  lambda[{k}] = {v:.6f}\n")


def cmd_identities(a, out):
    ids = a.id or list(CATALOG)
    for i in ids:
        if i not in CATALOG:
            raise InputError(f"id: unknown identity {i!r}")
    reports = fuzz_identities(a.m, a.cap, a.trials, a.seed, workers=a.workers, ids=ids)
    bad = [r for r in reports if r.verdict == "violated"]
    if a.json:
        for r in reports:
            out.write(r.to_json() + "\n")
    else:
        counts = {}
        for r in reports:
            c = counts.setdefault(r.id, [0, 0, 0.0])
            c[0] += 1
            c[1] += r.verdict == "violated"
            if r.id != "B-UPPER":
                c[2] = max(c[2], abs(r.gap))
        out.write(f"identities M'={a.m} cap={a.cap} trials={a.trials} seed={a.seed}\n")
        for i in ids:
            n, v, g = counts.get(i, [0, 0, 0.0])
            out.write(f"  {i:<16} checks={n:<6d} violated={v:<4d} max|gap|={g:.6e}\n")
    if bad:
        raise AssertionError(f"{len(bad)} identity checks violated")


def _sim_params(a, doc):
    n = a.n if a.n is not None else doc.get("n")
    if n is None:
        raise InputError("n: required")
    eps = a.eps if a.eps is not None else doc.get("eps")
    return TypicalityParams.for_n(int(n), eps)


def cmd_simulate(a, out):
    if a.seed is None:
        raise InputError("seed: required")
    doc = load_json(a.spec)
    if not isinstance(doc, dict):
        raise InputError("spec: expected a JSON object")
    params = _sim_params(a, doc)
    rates = _floats(a.rates, "rates") if a.rates else doc.get("rates")
    kind = a.kind
    if kind == "typ":
        j = pmf_from_dict(doc["source"] if "source" in doc else doc)
        est = typicality_probability(j, params, a.trials, a.seed)
        res = {"kind": "typ", "n": params.n, "epsilon": params.epsilon, "seed": a.seed, **est.to_dict()}
        if a.json:
            out.write(json.dumps(res, sort_keys=True) + "\n")
        else:
            ex = "n/a" if est.exact is None else f"{est.exact:.6f}"
            out.write(f"typ: n={params.n} epsilon={params.epsilon} trials={est.trials} "
                      f"atypical_mc={est.monte_carlo:.6f} atypical_exact={ex}\n")
        return
    if kind == "sw":
        if rates is None:
            raise InputError("rates: required")
        j = pmf_from_dict(doc.get("source", doc))
        side = list(doc.get("side", []))
        rep = sw_simulate(j, rates, params, a.trials, a.seed, encoders=doc.get("encoders"),
                          side=side, workers=a.workers, fano=a.fano)
    elif kind in ("wz", "pipeline"):
        if rates is None:
            raise InputError("rates: required")
        inst = chain_from_dict(doc.get("instance", doc))
        delta = a.delta if a.delta is not None else float(doc.get("delta", 0.1))
        if kind == "wz":
            if len(rates) != 1:
                raise InputError("rates: a single stage takes one rate")
            rep = wz_stage_simulate(inst, rates[0], params, a.trials, a.seed, delta, workers=a.workers)
        else:
            order = doc.get("order")
            if order is not None:
                order = [inst.y.index(o) if isinstance(o, str) else int(o) for o in order]
            rep = pipeline_simulate(inst, rates, params, a.trials, a.seed, delta, order, workers=a.workers)
    else:  # markov
        j = pmf_from_dict(doc.get("source", doc))
        names = doc.get("variables", ["Y1", "Y2", "Z1"])
        rep = markov_consistency_check(j, params, a.trials, a.seed, *names, workers=a.workers)
    out.write((rep.to_json() if a.json else rep.summary()) + "\n")


def _sweep_spec(spec, target, family, q):
    chans = list(spec.channels)
    for i, c in enumerate(chans):
        if c.output.name == target:
            src = block_alphabet(spec.source.alphabet(c.inputs[0]), spec.n)
            if family in ("bsc", "symmetric"):
                if family == "bsc" and src.size != 2:
                    raise InputError("grid: bsc family needs a binary input")
                chans[i] = Channel.symmetric(src, target, q)
            else:
                raise InputError(f"grid: unknown family {family!r}")
            return replace(spec, channels=tuple(chans))
    raise InputError(f"grid: no channel with output {target!r}")


def sweep_rows(spec, grid: dict) -> tuple[list[str], list[list]]:
    target = grid.get("target")
    family = grid.get("family", "symmetric")
    values = grid.get("values")
    if values is None:
        raise InputError("values: required in grid")
    if len(values) > SWEEP_CAP:
        raise InputError(f"grid too large: {len(values)} points > {SWEEP_CAP}")
    systems = [build_region(_sweep_spec(spec, target, family, float(q))) for q in values]
    first = systems[0]
    labels = ["R(" + ",".join(r.subset) + ")" for r in first.rate_constraints]
    dlabels = [f"D[{i}]" for i, _ in first.distortion_values]
    header = ["param"] + labels + ["R_total"] + dlabels + ["on_staircase"]
    pts = [(s.total_rate(), [v for _, v in s.distortion_values]) for s in systems]

    def dominated(i):
        ri, di = pts[i]
        for k, (rk, dk) in enumerate(pts):
            if k == i:
                continue
            le = rk <= ri + 1e-12 and all(x <= y + 1e-12 for x, y in zip(dk, di))
            lt = rk < ri - 1e-12 or any(x < y - 1e-12 for x, y in zip(dk, di))
            if le and lt:
                return True
        return False

    rows = []
    for i, (q, s) in enumerate(zip(values, systems)):
        rows.append([f"{float(q):.6f}"] + [f"{r.bound:.6f}" for r in s.rate_constraints]
                    + [f"{s.total_rate():.6f}"] + [f"{v:.6f}" for _, v in s.distortion_values]
                    + [str(not dominated(i)).lower()])
    return header, rows


def cmd_sweep(a, out):
    spec = spec_from_dict(load_json(a.spec))
    grid = load_json(a.grid)
    header, rows = sweep_rows(spec, grid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    out.write(buf.getvalue())


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtsc", description="Multiterminal source coding toolkit.")
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        return sp

    sp = add("info", cmd_info, "entropies and mutual informations of a pmf")
    sp.add_argument("--pmf", required=True)
    sp.add_argument("--query", action="append", help='e.g. "I(X1;X2|S)" (repeatable)')

    sp = add("region", cmd_region, "constraint system of a problem spec")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--form", choices=("direct", "split"), default="direct")

    sp = add("estimate", cmd_estimate, "estimation region (tag EST)")
    sp.add_argument("--spec", required=True)

    sp = add("corners", cmd_corners, "corner points of a chain instance")
    sp.add_argument("--instance", required=True)

    sp = add("member", cmd_member, "classify a rate vector against a chain instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--point", required=True, help="comma-separated rates")
    sp.add_argument("--witness", action="store_true", help="also search convex weights over corners")
    sp.add_argument("--samples", type=int, default=200_000)

    sp = add("identities", cmd_identities, "fuzz the identity catalog")
    sp.add_argument("--m", type=int, default=2, help="number of encoders M'")
    sp.add_argument("--cap", type=int, default=3, help="alphabet size cap")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--id", action="append", help="restrict to one catalog id (repeatable)")

    sp = add("simulate", cmd_simulate, "seeded binning / typicality simulations")
    sp.add_argument("kind", choices=("sw", "wz", "pipeline", "markov", "typ"))
    sp.add_argument("--spec", required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--rates")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--fano", action="store_true", help="sw only: exact Fano check of the decoder")

    sp = sub.add_parser("sweep", help="channel-grid sweep, CSV out")
    sp.set_defaults(fn=cmd_sweep)
    sp.add_argument("--spec", required=True)
    sp.add_argument("--grid", required=True)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        a.fn(a, out)
        return 0
    except USER_ERRORS as e:
        err.write(f"mtsc: error: {str(e).splitlines()[0]}\n")
        return 2
    except (AssertionError, FanoViolation) as e:
        err.write(f"mtsc: invariant failure: {e}\n")
        return 3


def main(argv=None) -> int:
    sys.exit(run(argv))
