import numpy as np
import pytest
from scipy import stats

from exmeas.poisson import (ResourceLimitError, inverse_cdf, inverse_cdf_rows, poisson_counts, sample_triple_pp,
                            sample_unit_pp)
from exmeas.rng import RngKey, derive, root_word, uniforms


def test_key_determinism():
    k = RngKey(42).child(3, 7)
    assert np.array_equal(k.uniforms(100), RngKey(42).child(3, 7).uniforms(100))
    assert not np.array_equal(k.uniforms(100), RngKey(42).child(3, 8).uniforms(100))
    assert not np.array_equal(k.uniforms(100), RngKey(43).child(3, 7).uniforms(100))


def test_uniforms_in_unit_interval():
    u = RngKey(1).uniforms(100_000)
    assert u.min() >= 0 and u.max() < 1
    assert stats.kstest(u, "uniform").pvalue > 0.001


def test_offsets_address_the_same_stream():
    k = RngKey(9)
    assert np.array_equal(k.uniforms(10, offset=5), k.uniforms(15)[5:])


def test_vectorised_derive_matches_scalar_keys():
    words = derive(np.uint64(RngKey(5).word), 2, np.arange(4))
    for i, w in enumerate(words):
        assert int(w) == RngKey(5).child(2, i).word
    assert root_word(5) == RngKey(5).word


def test_sibling_streams_independent():
    # chi-square test of independence on 10^4 paired draws, 4x4 bins
    a = RngKey(11).child(1, 0).uniforms(10_000)
    b = RngKey(11).child(1, 1).uniforms(10_000)
    table = np.histogram2d(a, b, bins=4, range=[[0, 1], [0, 1]])[0]
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_vanishing_area_is_empty():
    assert len(sample_unit_pp(RngKey(0), 1.0, 1e-12)) == 0


def test_unit_pp_deterministic_and_inside():
    p1 = sample_unit_pp(RngKey(3), 2.0, 3.0)
    p2 = sample_unit_pp(RngKey(3), 2.0, 3.0)
    assert np.array_equal(p1.t, p2.t) and np.array_equal(p1.mark, p2.mark)
    assert np.all((p1.t >= 0) & (p1.t <= 2)) and np.all((p1.mark >= 0) & (p1.mark <= 3))


def test_unit_pp_mean_count():
    n = np.array([len(sample_unit_pp(RngKey(0).child(1, i), 2.0, 3.0)) for i in range(10_000)])
    assert abs(n.mean() - 6.0) <= 3 * np.sqrt(6.0 / 10_000)


def test_triple_pp():
    assert all(a.size == 0 for a in sample_triple_pp(RngKey(0), 1.0, 0.0))
    a = sample_triple_pp(RngKey(5), 1.0, 2.0)
    b = sample_triple_pp(RngKey(5), 1.0, 2.0)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    n = np.array([sample_triple_pp(RngKey(1).child(1, i), 1.0, 2.0)[0].size for i in range(10_000)])
    assert abs(n.mean() - 2.0) <= 3 * np.sqrt(2.0 / 10_000)


def test_resource_guard():
    with pytest.raises(ResourceLimitError):
        sample_unit_pp(RngKey(0), 1e5, 1e5)
    with pytest.raises(ValueError):
        sample_unit_pp(RngKey(0), 0.0, 1.0)


@pytest.mark.parametrize("lam", [0.1, 3.0, 29.0, 31.0, 200.0, 5000.0])
def test_poisson_counts_law(lam):
    words = derive(np.uint64(RngKey(8).word), 0, np.arange(20_000))
    n = poisson_counts(words, lam)
    assert abs(n.mean() - lam) <= 4 * np.sqrt(lam / n.size)
    assert abs(n.var() / lam - 1) < 0.08


def test_poisson_counts_small_mean_pmf():
    words = derive(np.uint64(RngKey(4).word), 0, np.arange(50_000))
    n = poisson_counts(words, 2.0)
    k = np.arange(8)
    obs = np.array([(n == i).sum() for i in k] + [(n >= 8).sum()])
    p = stats.poisson.pmf(k, 2.0)
    exp = np.append(p, 1 - p.sum()) * n.size
    assert stats.chisquare(obs, exp).pvalue > 0.001


def test_inverse_cdf_examples():
    assert inverse_cdf([0.5, 0.5], 0.25) == 0
    assert inverse_cdf([0.5, 0.5], 0.75) == 1
    assert inverse_cdf([0.3, 0.7], 0.5) == 1
    assert inverse_cdf([0.3, 0.7], 1.5) is None
    # half-open rule at a boundary
    assert inverse_cdf([0.5, 0.5], 0.5) == 1
    with pytest.raises(ValueError):
        inverse_cdf([0.5, -0.1], 0.2)


def test_inverse_cdf_frequencies():
    w = np.array([0.2, 0.3, 0.5])
    u = RngKey(6).uniforms(100_000)
    r = inverse_cdf_rows(np.tile(np.cumsum(w), (u.size, 1)), u)
    freq = np.bincount(r, minlength=3) / u.size
    assert np.all(np.abs(freq - w) <= 3 * np.sqrt(w * (1 - w) / u.size))


def test_inverse_cdf_monotone():
    w = [0.1, 0.0, 0.4, 0.3]
    us = np.linspace(0, 1.2, 500)
    rs = [inverse_cdf(w, u) for u in us]
    rs = [len(w) if r is None else r for r in rs]
    assert all(a <= b for a, b in zip(rs, rs[1:]))


def test_restriction_in_law():
    # filtering to a smaller box matches direct sampling on it
    big = [np.sum((p.t <= 1) & (p.mark <= 2)) for p in (sample_unit_pp(RngKey(2).child(1, i), 3.0, 4.0)
                                                         for i in range(3000))]
    small = [len(sample_unit_pp(RngKey(3).child(1, i), 1.0, 2.0)) for i in range(3000)]
    assert stats.mannwhitneyu(big, small).pvalue > 0.01
