import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtsc.probability import Alphabet, Channel, attach_channel, bernoulli, build_joint, dsbs
from mtsc.region import DecoderTable
from mtsc.typicality import (
    TypicalityError,
    TypicalityParams,
    exact_atypicality,
    fano_check,
    is_typical,
    typicality_probability,
)

B = lambda n, k=2: Alphabet.range(n, k)


def test_constant_sequence_atypical():
    assert not is_typical(np.zeros(10, int), bernoulli(0.5), TypicalityParams(0.1, 10))


def test_exact_frequency_is_typical_at_any_epsilon():
    seq = np.array([1] * 6 + [0] * 14)
    for eps in (1e-6, 0.01, 0.5):
        assert is_typical(seq, bernoulli(0.3), TypicalityParams(eps, 20))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=30), st.floats(1e-4, 1.0))
def test_sequence_typical_for_own_type(seq, eps):
    counts = np.bincount(seq, minlength=3)
    pmf = build_joint([B("X", 3)], counts / counts.sum())
    assert is_typical(np.array(seq), pmf, TypicalityParams(eps, len(seq)))


def test_decimal_boundary_decided_exactly():
    # |5/20 - 0.3| = 0.05 equals eps/|X| = 0.1/2, so strictly-less fails
    assert not is_typical(np.array([1] * 5 + [0] * 15), bernoulli(0.3), TypicalityParams(0.1, 20))


def test_input_errors():
    with pytest.raises(TypicalityError, match="length mismatch"):
        is_typical(np.zeros(3, int), bernoulli(0.5), TypicalityParams(0.1, 4))
    with pytest.raises(TypicalityError, match="alphabet mismatch"):
        is_typical(np.array([0, 2]), bernoulli(0.5), TypicalityParams(0.1, 2))


def test_point_mass_never_atypical():
    pm = build_joint([B("X", 3)], np.array([0.0, 1.0, 0.0]))
    est = typicality_probability(pm, TypicalityParams(0.1, 8), 1000, seed=3)
    assert est.monte_carlo == 0.0 and est.exact == 0.0


def test_single_letter_at_large_epsilon():
    # "1" deviates by 0.7 and "0" by 0.3; the threshold is 0.9/2 = 0.45
    est = typicality_probability(bernoulli(0.3), TypicalityParams(0.9, 1), 1000, seed=0)
    assert est.exact == pytest.approx(0.3, abs=1e-15)


def binomial_atypicality(n, p, eps):
    p = Fraction(p).limit_denominator(10 ** 6)
    thr = Fraction(eps).limit_denominator(10 ** 6) / 2
    return float(sum(math.comb(n, k) * p ** k * (1 - p) ** (n - k)
                     for k in range(n + 1) if abs(Fraction(k, n) - p) >= thr))


@pytest.mark.parametrize("n,p,eps", [(6, 0.3, 0.4), (12, 0.5, 0.2), (16, 0.1, 0.3)])
def test_enumeration_matches_binomial_oracle(n, p, eps):
    assert exact_atypicality(bernoulli(p), TypicalityParams(eps, n)) == pytest.approx(
        binomial_atypicality(n, p, eps), abs=1e-12)


def test_monte_carlo_within_three_sigma(rng):
    for _ in range(5):
        pmf = build_joint([B("X", 2), B("Y", 2)], rng.dirichlet(np.ones(4)))
        params = TypicalityParams(0.4, 8)
        est = typicality_probability(pmf, params, 4000, seed=int(rng.integers(1 << 30)))
        sigma = math.sqrt(max(est.exact * (1 - est.exact), 1e-12) / est.trials)
        assert abs(est.monte_carlo - est.exact) <= 3 * sigma + 1e-12


def test_large_block_estimate_small():
    est = typicality_probability(bernoulli(0.3), TypicalityParams(0.1, 500), 10_000, seed=11)
    assert est.exact is None and est.monte_carlo <= 0.1


def test_fano_perfect_decoder():
    j = dsbs(0.0, names=("U", "V"))
    r = fano_check(j, DecoderTable(("V",), ("U",), np.array([0, 1])))
    assert r.lhs == pytest.approx(0.0, abs=1e-12) and r.rhs == 1.0 and r.holds


def test_fano_independent_bit():
    j = dsbs(0.5, names=("U", "V"))
    r = fano_check(j, DecoderTable(("V",), ("U",), np.array([0, 0])))
    assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(1.5)


def test_fano_uniform_four():
    j = build_joint([B("U", 4), B("V", 2)], np.full(8, 1 / 8))
    r = fano_check(j, DecoderTable(("V",), ("U",), np.array([2, 2])))
    assert r.lhs == pytest.approx(2.0) and r.rhs == pytest.approx(2.5)


def test_fano_random_joints(rng):
    for _ in range(50):
        a, b = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        j = build_joint([B("U", a), B("V", b)], rng.dirichlet(np.ones(a * b)))
        g = DecoderTable(("V",), ("U",), rng.integers(0, a, size=b))
        assert fano_check(j, g).holds


def test_copy_channel_triple_is_pair_at_half_epsilon():
    j = attach_channel(dsbs(0.2, names=("Y1", "Y2")), Channel.identity(B("Y1"), "Z1"))
    n, eps = 6, 0.6
    for seq in itertools.product(range(2), repeat=2 * n):
        y = np.array(seq).reshape(n, 2)
        triple = np.column_stack([y, y[:, 0]])
        assert is_typical(triple, j, TypicalityParams(eps, n), ["Y1", "Y2", "Z1"]) == \
            is_typical(y, j, TypicalityParams(eps / 2, n), ["Y1", "Y2"])
