import itertools
import math

import numpy as np
import pytest

from mtsc.corners import (
    ChainInstance,
    StructureError,
    convex_witness,
    corner_point,
    enumerate_corners,
    genericity,
    instance_from_channels,
    is_chain,
    membership,
    random_chain_instance,
    suffix_chain,
)
from mtsc.info import entropy
from mtsc.probability import Alphabet, Channel, bernoulli, build_joint, dsbs, independent

H2_01 = -(0.1 * math.log2(0.1) + 0.9 * math.log2(0.9))
B = lambda n: Alphabet.range(n, 2)


def identity_dsbs():
    base = dsbs(0.1, names=("Y1", "Y2"))
    return instance_from_channels(base, ["Y1", "Y2"],
                                  [Channel.identity(B("Y1"), "Z1"), Channel.identity(B("Y2"), "Z2")])


def generic(rng, m=3):
    while True:
        inst = random_chain_instance(rng, m, 3)
        if genericity(inst) >= 1e-7:
            return inst


def test_identity_channels_on_dsbs():
    inst = identity_dsbs()
    assert np.allclose(corner_point(inst, (0, 1)), [1.0, H2_01], atol=1e-12)
    assert np.allclose(corner_point(inst, (1, 0)), [H2_01, 1.0], atol=1e-12)


def test_useless_channels_give_zero():
    base = dsbs(0.1, names=("Y1", "Y2"))
    inst = instance_from_channels(base, ["Y1", "Y2"],
                                  [Channel.constant(B("Y1"), B("Z1")), Channel.constant(B("Y2"), B("Z2"))])
    for pi in itertools.permutations(range(2)):
        assert np.all(corner_point(inst, pi) == 0)


def test_single_encoder(rng):
    inst = random_chain_instance(rng, 1, 3)
    cs = enumerate_corners(inst)
    assert len(cs.corners) == 1
    from mtsc.info import mutual_information
    want = mutual_information(inst.joint, "Y1", "Z1", list(inst.v))
    assert cs.corners[0].rates[0] == pytest.approx(want, abs=1e-12)


def test_structure_validation():
    j = build_joint([B("Y1"), B("Z1"), B("V")], np.random.default_rng(0).dirichlet(np.ones(8)))
    with pytest.raises(StructureError, match="structure validation"):
        corner_point(ChainInstance(j, ("Y1",), ("Z1",), ("V",)), (0,))


def test_two_generic_corners(rng):
    cs = enumerate_corners(generic(rng, 2))
    assert len(cs.corners) == 2 and not cs.duplicates_merged


def test_independent_source_merges_duplicates():
    base = independent(bernoulli(0.3, "Y1"), bernoulli(0.6, "Y2"))
    inst = instance_from_channels(base, ["Y1", "Y2"],
                                  [Channel.symmetric(B("Y1"), "Z1", 0.1), Channel.symmetric(B("Y2"), "Z2", 0.2)])
    cs = enumerate_corners(inst)
    assert cs.duplicates_merged and len(cs.corners) == 1 and cs.degenerate


def test_three_generic_corners(rng):
    cs = enumerate_corners(generic(rng))
    assert len(cs.corners) == 6
    for c in cs.corners:
        assert len(c.tight) == 3
        assert set(map(frozenset, c.tight)) == set(suffix_chain(c.perm))
        assert is_chain(c.tight)


def test_corner_sums(rng):
    inst = generic(rng)
    full = inst.bound((0, 1, 2))
    from mtsc.info import mutual_information
    assert full == pytest.approx(mutual_information(inst.joint, list(inst.y), list(inst.z), list(inst.v)), abs=1e-12)
    for pi in itertools.permutations(range(3)):
        r = corner_point(inst, pi)
        assert r.sum() == pytest.approx(full, abs=1e-9)
        for m in range(3):
            assert r[list(pi[m:])].sum() == pytest.approx(inst.bound(pi[m:]), abs=1e-9)


def test_subset_bounds_below_identity_corner_sums(rng):
    inst = generic(rng)
    r = corner_point(inst, (0, 1, 2))
    for I, b in enumerate_corners(inst).bounds.items():
        assert b <= r[list(I)].sum() + 1e-9


def test_membership_classes(rng):
    inst = generic(rng)
    cs = enumerate_corners(inst)
    c = cs.corners[0]
    m = membership(c.rates, inst)
    assert m.status == "boundary" and set(map(frozenset, m.subsets)) == set(suffix_chain(c.perm))
    assert membership(c.rates + 1, inst).status == "inside"
    out = membership(np.zeros(3), inst)
    assert out.status == "outside" and (0, 1, 2) in out.subsets
    with pytest.raises(ValueError, match="dimension mismatch"):
        membership(np.zeros(2), inst)


def test_witness_for_corner_and_midpoint(rng):
    cs = enumerate_corners(generic(rng, 2))
    a, b = cs.corners
    w = convex_witness(a.rates, cs)
    assert w.weights[a.perm] == pytest.approx(1.0, abs=1e-6)
    w = convex_witness((a.rates + b.rates) / 2, cs)
    assert w.weights[a.perm] == pytest.approx(0.5, abs=1e-6)
    assert w.weights[b.perm] == pytest.approx(0.5, abs=1e-6)


def test_witness_interior_points_agree_with_membership(rng):
    for _ in range(10):
        inst = generic(rng, 2)
        cs = enumerate_corners(inst)
        top = max(c.rates.max() for c in cs.corners)
        p = rng.uniform(0, 1.5 * top, size=2)
        status = membership(p, inst).status
        w = convex_witness(p, cs)
        assert (w is not None) == (status != "outside")
        if w is not None:
            mix = sum(w.weights[c.perm] * c.rates for c in cs.corners)
            assert np.all(mix <= p + 1e-9)
            assert sum(w.weights.values()) == pytest.approx(1.0)


def test_witness_three_encoders(rng):
    inst = generic(rng)
    cs = enumerate_corners(inst)
    mid = sum(c.rates for c in cs.corners) / 6
    w = convex_witness(mid, cs)
    assert w is not None
    assert convex_witness(np.zeros(3), cs) is None
    assert convex_witness.last_budget > 0


def test_too_many_encoders():
    names = [f"Y{i + 1}" for i in range(7)]
    base = independent(*[bernoulli(0.5, n) for n in names])
    chans = [Channel.identity(B(n), f"Z{n[1:]}") for n in names]
    with pytest.raises(ValueError, match="too large"):
        enumerate_corners(instance_from_channels(base, names, chans))
