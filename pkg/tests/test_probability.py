import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtsc.info import entropy, mutual_information
from mtsc.probability import (
    Alphabet,
    Channel,
    DistributionError,
    attach_channel,
    bernoulli,
    build_joint,
    channel_from_dict,
    dsbs,
    iid_extend,
    independent,
    marginalize,
    pmf_from_dict,
    pmf_to_dict,
)

from conftest import random_joint

B = lambda n: Alphabet.range(n, 2)


def test_uniform_pair_is_valid():
    j = build_joint([B("A"), B("B")], [0.25] * 4)
    assert np.allclose(j.probs, 0.25)


def test_unnormalized_rejected():
    with pytest.raises(DistributionError, match="not normalized"):
        build_joint([B("A"), B("B")], [0.2, 0.2, 0.25, 0.25])


def test_small_drift_renormalized():
    j = build_joint([B("A")], [0.5 + 4e-10, 0.5])
    assert abs(j.probs.sum() - 1) < 1e-15


@pytest.mark.parametrize("probs,msg", [([0.5, 0.5, 0.0], "dimension mismatch"), ([1.5, -0.5], "negative")])
def test_bad_tables(probs, msg):
    with pytest.raises(DistributionError, match=msg):
        build_joint([B("A")], probs)


def test_dsbs_disagreement_probability():
    j = dsbs(0.1)
    assert np.allclose(j.flat(), [0.45, 0.05, 0.05, 0.45])
    p = j.marginal_array(["X1", "X2"])
    assert abs(p[0, 1] + p[1, 0] - 0.1) < 1e-15


def test_marginals():
    j = dsbs(0.1)
    assert np.allclose(marginalize(j, ["X1"]).flat(), [0.5, 0.5])
    assert np.array_equal(marginalize(j, ["X1", "X2"]).probs, j.probs)
    a, b = bernoulli(0.2, "A"), bernoulli(0.7, "B")
    assert np.allclose(marginalize(independent(a, b), ["B"]).flat(), b.flat())


def test_marginalize_errors():
    with pytest.raises(DistributionError, match="unknown variable"):
        marginalize(dsbs(0.1), ["Q"])
    with pytest.raises(DistributionError, match="empty"):
        marginalize(dsbs(0.1), [])


def test_marginalize_is_transitive(rng):
    j = random_joint(rng, ["A", "B", "C", "D"])
    once = marginalize(j, ["B"])
    twice = marginalize(marginalize(j, ["B", "D"]), ["B"])
    # equal up to float summation order
    assert np.max(np.abs(once.probs - twice.probs)) <= 1e-15


def test_identity_channel_copies():
    j = attach_channel(dsbs(0.1), Channel.identity(B("X1"), "Z"))
    p = j.marginal_array(["X1", "Z"])
    assert abs(np.trace(p) - 1) < 1e-15


def test_bsc_channel_markov():
    j = attach_channel(dsbs(0.1), Channel.symmetric(B("X1"), "Z", 0.2))
    assert mutual_information(j, "X2", "Z", "X1") == 0.0
    assert np.allclose(marginalize(j, ["X1", "X2"]).probs, dsbs(0.1).probs, atol=1e-15)


def test_uniform_channel_is_independent():
    j = attach_channel(dsbs(0.1), Channel.constant(B("X1"), Alphabet.range("Z", 3)))
    assert mutual_information(j, "X1", "Z") == 0.0


def test_attached_conditional_matches_table(rng):
    j = random_joint(rng, ["A", "B"])
    rows = rng.dirichlet(np.ones(3), size=j.alphabet("A").size)
    c = Channel(("A",), Alphabet.range("Z", 3), rows)
    k = attach_channel(j, c)
    pabz = k.marginal_array(["A", "B", "Z"])
    cond = pabz / pabz.sum(axis=2, keepdims=True)
    assert np.max(np.abs(cond - rows[:, None, :])) < 1e-12


def test_attach_errors():
    j = dsbs(0.1)
    with pytest.raises(DistributionError, match="name collision"):
        attach_channel(j, Channel.identity(B("X1"), "X2"))
    with pytest.raises(DistributionError, match="unknown variable"):
        attach_channel(j, Channel.identity(B("Q"), "Z"))


def test_iid_extend_identity_and_uniform():
    j = dsbs(0.1)
    assert iid_extend(j, 1) is j
    u = iid_extend(bernoulli(0.5), 3)
    assert np.allclose(u.flat(), 1 / 8)


def test_iid_extend_letter_order():
    j = iid_extend(bernoulli(0.3), 2)
    # index = 2*x(1) + x(2)
    assert np.allclose(j.flat(), [0.49, 0.21, 0.21, 0.09])
    assert j.alphabet("X").symbols == ("00", "01", "10", "11")


def test_iid_extend_entropy_doubles():
    j = dsbs(0.1)
    h1 = entropy(j, ["X1", "X2"])
    h2 = entropy(iid_extend(j, 2), ["X1", "X2"])
    assert abs(h2 - 2 * h1) < 1e-12


def test_iid_extend_cap():
    with pytest.raises(DistributionError, match="cap exceeded"):
        iid_extend(dsbs(0.1), 13)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_extension_entropy_property(seed, n):
    r = np.random.default_rng(seed)
    j = random_joint(r, ["A", "B"], cap=3)
    assert abs(entropy(iid_extend(j, n), ["A", "B"]) - n * entropy(j, ["A", "B"])) < 1e-9
    assert abs(iid_extend(j, n).probs.sum() - 1) < 1e-12


def test_json_round_trip(rng):
    j = random_joint(rng, ["A", "B"])
    k = pmf_from_dict(pmf_to_dict(j))
    assert np.allclose(j.probs, k.probs, atol=1e-15)
    c = channel_from_dict({"inputs": ["A"], "output": {"name": "Z", "symbols": ["a", "b"]},
                           "rows": [[0.5, 0.5]] * j.alphabet("A").size}, {"A": j.alphabet("A")})
    assert c.table.shape == (j.alphabet("A").size, 2)


def test_channel_rows_checked():
    with pytest.raises(DistributionError, match="not normalized"):
        Channel(("A",), B("Z"), [[0.5, 0.6], [0.5, 0.5]])
