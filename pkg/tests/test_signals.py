import math

import numpy as np
import pytest

from cocoa_decoding.dist import EPS, from_logits, from_probs
from cocoa_decoding.errors import VocabMismatchError
from cocoa_decoding.signals import entropy_gap, jsd, kl_divergence, renyi_divergence

from . import oracles
from .conftest import random_dist

LN2 = math.log(2)


def _pairs(rng, vocab, n=1000):
    for _ in range(n):
        yield random_dist(rng, vocab), random_dist(rng, vocab)


class TestExamples:
    def test_identical_is_zero(self, backend, rng):
        p = random_dist(rng, 10)
        for order in (0.3, 0.5, 1.0, 2.0):
            assert renyi_divergence(p, p, order) == pytest.approx(0, abs=1e-12)
        assert kl_divergence(p, p) == pytest.approx(0, abs=1e-12)
        assert jsd(p, p) == pytest.approx(0, abs=1e-12)
        assert entropy_gap(p, p) == 0

    def test_renyi_half_near_one_hot(self, backend):
        p, q = from_probs([1 - EPS, EPS]), from_probs([0.5, 0.5])
        expected = oracles.renyi(list(p.probs), list(q.probs), 0.5)
        assert expected == pytest.approx(0.693147, abs=1e-5)
        assert renyi_divergence(p, q, 0.5) == pytest.approx(expected, abs=1e-12)

    def test_renyi_order_two(self, backend):
        expected = oracles.renyi([0.9, 0.1], [0.5, 0.5], 2)
        assert expected == pytest.approx(math.log(1.64), abs=1e-12)
        assert expected == pytest.approx(0.494696, abs=1e-6)
        assert renyi_divergence(from_probs([0.9, 0.1]), from_probs([0.5, 0.5]), 2) == pytest.approx(expected, abs=1e-11)

    def test_kl_examples(self, backend):
        a, b = from_probs([0.9, 0.1]), from_probs([0.5, 0.5])
        ab, ba = oracles.kl([0.9, 0.1], [0.5, 0.5]), oracles.kl([0.5, 0.5], [0.9, 0.1])
        assert ab == pytest.approx(0.368064, abs=1e-6)
        assert ba == pytest.approx(0.510826, abs=1e-6)
        assert kl_divergence(a, b) == pytest.approx(ab, abs=1e-11)
        assert kl_divergence(b, a) == pytest.approx(ba, abs=1e-11)

    def test_jsd_disjoint_is_ln2(self, backend):
        p, q = from_probs([1 - EPS, EPS]), from_probs([EPS, 1 - EPS])
        assert jsd(p, q) == pytest.approx(LN2, abs=1e-9)

    def test_jsd_mirror(self, backend):
        expected = oracles.jsd([0.8, 0.2], [0.2, 0.8])
        assert expected == pytest.approx(0.192745, abs=1e-6)
        assert jsd(from_probs([0.8, 0.2]), from_probs([0.2, 0.8])) == pytest.approx(expected, abs=1e-12)

    def test_entropy_gap_examples(self, backend):
        assert entropy_gap(from_probs([1, 1, 1, 1]), from_probs([1, 0, 0, 0])) == pytest.approx(math.log(4), abs=1e-9)
        expected = oracles.entropy([0.5, 0.5]) - oracles.entropy([0.9, 0.1])
        assert expected == pytest.approx(0.368064, abs=1e-6)
        assert entropy_gap(from_probs([0.5, 0.5]), from_probs([0.9, 0.1])) == pytest.approx(expected, abs=1e-12)

    def test_mismatched_vocab(self, backend):
        p, q = from_probs([0.5, 0.5]), from_probs([0.2, 0.3, 0.5])
        for fn in (kl_divergence, jsd, entropy_gap, renyi_divergence):
            with pytest.raises(VocabMismatchError):
                fn(p, q)

    def test_bad_order(self):
        p = from_probs([0.5, 0.5])
        with pytest.raises(ValueError):
            renyi_divergence(p, p, 0.0)


@pytest.mark.parametrize("vocab", [2, 8, 64])
class TestProperties:
    def test_oracle_equivalence(self, backend, rng, vocab):
        for p, q in _pairs(rng, vocab):
            pl, ql = list(p.probs), list(q.probs)
            assert renyi_divergence(p, q, 0.5) == pytest.approx(max(oracles.renyi(pl, ql, 0.5), 0), abs=1e-9)
            assert renyi_divergence(p, q, 2.0) == pytest.approx(max(oracles.renyi(pl, ql, 2.0), 0), abs=1e-9)
            assert kl_divergence(p, q) == pytest.approx(max(oracles.kl(pl, ql), 0), abs=1e-9)
            assert jsd(p, q) == pytest.approx(max(oracles.jsd(pl, ql), 0), abs=1e-9)

    def test_nonnegative_and_bounded(self, backend, rng, vocab):
        for p, q in _pairs(rng, vocab):
            assert renyi_divergence(p, q) >= 0
            assert kl_divergence(p, q) >= 0
            assert 0 <= jsd(p, q) <= LN2 + 1e-12

    def test_kl_limit(self, backend, rng, vocab):
        # Standard-normal logits; see test_kl_limit_first_order for sharp pairs.
        for _ in range(1000):
            p, q = from_logits(rng.normal(size=vocab)), from_logits(rng.normal(size=vocab))
            k = kl_divergence(p, q)
            assert abs(renyi_divergence(p, q, 1 + 1e-4) - k) <= 1e-3
            assert abs(renyi_divergence(p, q, 1 - 1e-4) - k) <= 1e-3
            assert renyi_divergence(p, q, 1.0) == k

    def test_kl_limit_first_order(self, backend, rng, vocab):
        # D_{1+h} = KL + (h/2) Var_p[log p/q] + O(h^2), whatever the sharpness.
        h = 1e-4
        for p, q in _pairs(rng, vocab, 300):
            r = p.log_probs - q.log_probs
            var = float(p.probs @ r**2 - (p.probs @ r) ** 2)
            k = kl_divergence(p, q)
            for sign in (1, -1):
                expected = k + sign * h * var / 2
                assert renyi_divergence(p, q, 1 + sign * h) == pytest.approx(expected, abs=1e-6 + 1e-4 * k)

    def test_monotone_in_order(self, backend, rng, vocab):
        for p, q in _pairs(rng, vocab, 300):
            values = [renyi_divergence(p, q, a) for a in (0.3, 0.5, 0.7, 1.0, 2.0)]
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_jsd_symmetric(self, backend, rng, vocab):
        for p, q in _pairs(rng, vocab, 300):
            assert abs(jsd(p, q) - jsd(q, p)) <= 1e-12


def test_large_vocab_no_underflow(backend):
    rng = np.random.default_rng(3)
    p = random_dist(rng, 32000)
    q = random_dist(rng, 32000)
    for order in (0.3, 0.5, 2.0):
        assert math.isfinite(renyi_divergence(p, q, order))
