import math
from dataclasses import replace

import numpy as np
import pytest

from mtsc.info import entropy, set_h
from mtsc.probability import (
    Alphabet,
    Channel,
    attach_channel,
    bernoulli,
    block_alphabet,
    build_joint,
    dsbs,
    independent,
)
from mtsc.region import (
    TAGS,
    DecoderTable,
    DistortionCriterion,
    ProblemSpec,
    SpecError,
    block_distortion_matrix,
    build_region,
    compare_systems,
    equivalent_form_tpc,
    estimation_as_dpc,
    estimation_region,
    expected_distortion,
    lattice_children,
    optimal_psi,
    random_spec,
    specialize,
    trivialize,
)

H2_01 = -(0.1 * math.log2(0.1) + 0.9 * math.log2(0.9))
B = lambda n: Alphabet.range(n, 2)
HAM = DistortionCriterion.hamming("ham", 2)


def lossless_pair(tag="L", s=None):
    j = dsbs(0.1)
    if s is not None:
        j = independent(j, s)
    return ProblemSpec(tag, j, ("X1", "X2"), s="S" if s is not None else None, J={"X1", "X2"})


def test_lossless_pair_rows():
    b = build_region(lossless_pair()).bounds()
    assert b[("X1",)] == pytest.approx(H2_01, abs=1e-12)
    assert b[("X2",)] == pytest.approx(H2_01, abs=1e-12)
    assert b[("X1", "X2")] == pytest.approx(1 + H2_01, abs=1e-12)
    assert len(b) == 3


def test_independent_side_information_is_vacuous():
    a = build_region(lossless_pair()).bounds()
    c = build_region(lossless_pair("LC", bernoulli(0.3, "S"))).bounds()
    assert all(abs(a[k] - c[k]) < 1e-12 for k in a)


def test_lossless_as_lossy_degenerate_case():
    src = dsbs(0.25, names=("X1", "S"))
    z = Channel.identity(B("X1"), "Z1")
    psi = DecoderTable(("Z1", "S"), ("X1",), np.array([[0, 0], [1, 1]]))
    spec = ProblemSpec("DC", src, ("X1",), s="S", channels=(z,), psi=psi, distortions=(HAM,))
    sys_ = build_region(spec)
    assert len(sys_.rate_constraints) == 1
    assert sys_.rate_constraints[0].bound == pytest.approx(entropy(src, "X1", "S"), abs=1e-12)
    assert sys_.distortion_values == [("ham", 0.0)]


def test_row_count_and_nonnegativity(rng):
    for M in (1, 2, 3):
        for K in (1, 2):
            s = random_spec(rng, "TPC", M=M, K=K, alphabet_cap=2)
            rows = build_region(s).rate_constraints
            assert len(rows) == 2**M + 2**K - 2
            assert all(r.bound >= -1e-10 for r in rows)


def test_split_form_lossless_everything(rng):
    s = random_spec(rng, "TPC", M=2, K=1, J=[0, 1])
    split = equivalent_form_tpc(s).bounds()
    from mtsc.region import _working_joint
    j, z = _working_joint(s)
    for I, b in split.items():
        if I[0].startswith("W"):
            continue
        rest = [m for m in s.x if m not in I]
        assert b == pytest.approx(set_h(j, I, rest + [z["W1"], "S"]), abs=1e-12)


def test_split_form_lossy_everything(rng):
    s = random_spec(rng, "TPC", M=2, K=1, J=[])
    assert compare_systems(equivalent_form_tpc(s), build_region(s)) < 1e-12


def test_split_form_matches_direct(rng):
    for _ in range(20):
        s = random_spec(rng, "TPC", M=2, K=1, J=[0])
        assert compare_systems(equivalent_form_tpc(s), build_region(s)) < 1e-9


def test_split_form_rejects_other_tags(rng):
    with pytest.raises(SpecError, match="wrong tag"):
        equivalent_form_tpc(random_spec(rng, "DPC"))


def test_drop_side_information_matches_one_point(rng):
    s = random_spec(rng, "TPC", M=2, K=1, J=[0])
    child = build_region(specialize(s, "drop_S"))
    parent = build_region(trivialize(s, "drop_S"))
    assert child.tag == "TP"
    assert compare_systems(child, parent) <= 1e-12


def test_lossless_subset_becomes_everything(rng):
    s = random_spec(rng, "TPC", M=2, K=1, J=[0])
    c = specialize(s, "J_full")
    assert c.tag == "LPC" and not c.distortions
    assert build_region(c).distortion_values == []


def test_dropping_partial_side_information(rng):
    s = random_spec(rng, "DPC", M=2, K=1)
    parent = build_region(trivialize(s, "drop_W"))
    for r in parent.rate_constraints:
        if r.subset[0].startswith("W"):
            assert abs(r.bound) < 1e-12
    child = specialize(s, "drop_W")
    assert child.tag == "DC" and all(not c.output.name == "Z3" for c in child.channels)
    assert compare_systems(build_region(child), parent) <= 1e-12


def test_inapplicable_direction(rng):
    with pytest.raises(SpecError, match="inapplicable"):
        specialize(random_spec(rng, "D"), "drop_S")
    with pytest.raises(SpecError, match="inapplicable"):
        specialize(random_spec(rng, "LP"), "J_full")


def test_drop_order_commutes(rng):
    for _ in range(5):
        s = random_spec(rng, "TPC", M=2, K=1, J=[1])
        a = build_region(specialize(specialize(s, "drop_S"), "drop_W"))
        b = build_region(specialize(specialize(s, "drop_W"), "drop_S"))
        assert a.bounds() == b.bounds()
        assert a.distortion_values == b.distortion_values


def test_lattice_reaches_every_tag(rng):
    s = random_spec(rng, "TPC", M=2, K=1, J=[0])
    seen, todo = set(), [s]
    while todo:
        cur = todo.pop()
        seen.add(cur.tag)
        for d, t in lattice_children(cur.tag):
            todo.append(specialize(cur, d))
    assert seen == set(TAGS)


@pytest.mark.parametrize("tag", ["L", "LC"])
def test_lossless_blocklength_invariance(rng, tag):
    for _ in range(3):
        s = random_spec(rng, tag, M=2, alphabet_cap=2)
        a = build_region(s).bounds()
        b = build_region(replace(s, n=2)).bounds()
        assert max(abs(a[k] - b[k]) for k in a) < 1e-9


def test_independent_refinement_never_increases(rng):
    for _ in range(5):
        s = random_spec(rng, "TPC", M=2, K=1, J=[0])
        base = build_region(s).bounds()
        chans = []
        for c in s.channels:
            t = np.kron(c.table, np.full(2, 0.5))
            chans.append(Channel(c.inputs, Alphabet.range(c.output.name, t.shape[-1]), t))
        wider = build_region(replace(s, channels=tuple(chans))).bounds()
        assert all(wider[k] <= base[k] + 1e-10 for k in base)


def test_blocklength_two_distortion_is_per_letter():
    src = dsbs(0.25, names=("X1", "S"))
    bsc = Channel.symmetric(B("X1"), "Z1", 0.1)
    one = build_region(ProblemSpec("DC", src, ("X1",), s="S", channels=(bsc,), distortions=(HAM,)))
    blk = Channel(("X1",), block_alphabet(B("Z1"), 2), np.kron(bsc.table, bsc.table))
    two = build_region(ProblemSpec("DC", src, ("X1",), s="S", n=2, channels=(blk,), distortions=(HAM,)))
    assert two.rate_constraints[0].bound == pytest.approx(one.rate_constraints[0].bound, abs=1e-12)
    assert two.distortion_values[0][1] == pytest.approx(one.distortion_values[0][1], abs=1e-12)


def test_block_distortion_matrix_average():
    d = block_distortion_matrix(HAM, [4], 2)
    assert d[0, 3] == 1.0 and d[0, 1] == 0.5 and d[2, 2] == 0.0


def test_expected_distortion_examples():
    j = attach_channel(dsbs(0.1), Channel.identity(B("X2"), "Z"))
    ident = DecoderTable(("Z",), ("X1",), np.array([0, 1]))
    assert expected_distortion(j, ident, HAM) == pytest.approx(0.1, abs=1e-12)
    perfect = DecoderTable(("Z",), ("X2",), np.array([0, 1]))
    assert expected_distortion(j, perfect, HAM) == 0.0
    blind = independent(bernoulli(0.5, "X"), bernoulli(0.5, "Z"))
    const = DecoderTable(("Z",), ("X",), np.array([0, 0]))
    assert expected_distortion(blind, const, HAM) == pytest.approx(0.5)


def test_expected_distortion_dimension_mismatch():
    j = attach_channel(dsbs(0.1), Channel.identity(B("X2"), "Z"))
    with pytest.raises(SpecError, match="does not match"):
        expected_distortion(j, DecoderTable(("Z",), ("X1",), np.array([0, 1])),
                            DistortionCriterion.hamming("h", 3))


def test_optimal_psi_examples():
    j = dsbs(0.1)
    psi = optimal_psi(j, HAM, ["X2"], ["X1"])
    assert psi.flat().tolist() == [0, 1]
    assert expected_distortion(j, psi, HAM) == pytest.approx(0.1, abs=1e-12)
    flat = DistortionCriterion("c", np.ones((2, 2)))
    assert optimal_psi(j, flat, ["X2"], ["X1"]).flat().tolist() == [0, 0]
    skew = build_joint([B("X"), B("V")], [0.1, 0.3, 0.2, 0.4])
    # MAP: V=0 -> P(X=1)=2/3, V=1 -> P(X=1)=4/7
    assert optimal_psi(skew, HAM, ["V"], ["X"]).flat().tolist() == [1, 1]


def test_optimal_psi_flags_dead_inputs():
    j = build_joint([B("X"), Alphabet.range("V", 3)], [0.5, 0.0, 0.0, 0.0, 0.5, 0.0])
    psi = optimal_psi(j, HAM, ["V"], ["X"])
    assert psi.unresolved == 1 and psi.flat()[2] == 0


def test_estimation_identity_observation():
    src = dsbs(0.2, names=("X1", "W1"))
    src = independent(src, bernoulli(0.4, "S"))
    spec = ProblemSpec("EST", src, ("X1",), ("W1",), "S",
                       channels=(Channel.identity(B("W1"), "Z2"),), distortions=(HAM,))
    sys_ = estimation_region(spec)
    assert len(sys_.rate_constraints) == 1
    assert sys_.rate_constraints[0].bound == pytest.approx(entropy(src, "W1", "S"), abs=1e-12)


def test_estimation_xor():
    p = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            p[a ^ b, a, b] = 0.25
    src = build_joint([B("X1"), B("W1"), B("W2")], p.ravel())
    chans = (Channel.identity(B("W1"), "Z2"), Channel.identity(B("W2"), "Z3"))
    sys_ = estimation_region(ProblemSpec("EST", src, ("X1",), ("W1", "W2"), channels=chans, distortions=(HAM,)))
    b = sys_.bounds()
    assert b[("W1",)] == pytest.approx(1.0) and b[("W2",)] == pytest.approx(1.0)
    assert b[("W1", "W2")] == pytest.approx(2.0)
    assert sys_.distortion_values == [("ham", 0.0)]


def test_estimation_useless_encoders():
    src = build_joint([B("X1"), B("W1")], [0.3, 0.2, 0.1, 0.4])
    mute = Channel.constant(B("W1"), B("Z2"))
    sys_ = estimation_region(ProblemSpec("EST", src, ("X1",), ("W1",), channels=(mute,), distortions=(HAM,)))
    assert sys_.rate_constraints[0].bound == 0.0
    assert sys_.distortion_values[0][1] == pytest.approx(0.5)  # P(X1=0)=0.5: any guess


def test_estimation_shape_errors(rng):
    with pytest.raises(SpecError, match="estimation shape"):
        estimation_region(random_spec(rng, "DPC"))


def test_estimation_via_dpc(rng):
    s = random_spec(rng, "EST", K=2)
    e = estimation_region(s)
    d = build_region(estimation_as_dpc(s))
    assert d.row(["X1"]).bound == 0.0
    assert compare_systems(e, d) <= 1e-12


@pytest.mark.parametrize("mutate,msg", [
    (lambda s: replace(s, J=frozenset({"X1"})), "J"),
    (lambda s: replace(s, channels=s.channels[:-1]), "channels"),
    (lambda s: replace(s, distortions=(DistortionCriterion.hamming("h", 7),)), "dimension mismatch"),
    (lambda s: replace(s, tag="QQ"), "unknown tag"),
    (lambda s: replace(s, s=None), "has_S"),
    (lambda s: replace(s, x=("X1", "Q")), "missing from source"),
])
def test_spec_validation(rng, mutate, msg):
    s = random_spec(rng, "DPC", M=2, K=1)
    with pytest.raises(SpecError, match=msg):
        mutate(s).validate()
