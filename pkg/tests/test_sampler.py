import math

import numpy as np
import pytest
from scipy import stats

from exmeas import harness
from exmeas.core import SQRT2, window_mass
from exmeas.models import (DustSequence, KallenbergRep, Multigraphex, PmfKernel, PoissonKernel, StarIntensity,
                           bernoulli_kernel, kallenberg_to_multigraphex)
from exmeas.quadrature import Convergence
from exmeas.rng import RngKey
from exmeas.sampler import CapExceeded, TruncationConfig, sample, sample_kallenberg, sample_multigraphex, \
    truncation_error

CE = harness.COUNTEREXAMPLE_G
TC = TruncationConfig(20.0)


def _masses(model, n, s=1.0, tc=TC, seed=0, part=None):
    f = window_mass if part is None else (lambda w: w.part_masses.get(part, 0.0))
    return np.array(harness.replicate(f, harness.ModelSampler(model, tc), s, RngKey(seed), n))


def _within_3se(x, target):
    return abs(x.mean() - target) <= 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_truncation_config():
    with pytest.raises(ValueError):
        TruncationConfig(0.0)
    with pytest.raises(ValueError):
        TruncationConfig(math.inf)


def test_zero_kallenberg_is_empty():
    w = sample_kallenberg(KallenbergRep(), 1.0, TC, RngKey(0))
    assert w.n_atoms == 0 and window_mass(w) == 0.0


def test_continuous_parts():
    w = sample_kallenberg(KallenbergRep(beta=1.0, gamma=2.0), 1.0, TC, RngKey(0))
    assert w.n_atoms == 0
    assert w.diag_mass == SQRT2 and w.plane_mass == 2.0


def test_line_masses():
    w = sample_kallenberg(KallenbergRep(h="ind(x,0,1)"), 2.0, TC, RngKey(1))
    assert all(l.orientation == "row" and l.mass == 2.0 for l in w.line_masses)
    assert len(w.line_masses) > 0


def test_kallenberg_edge_campbell():
    x = _masses(KallenbergRep(f="ind(z,0,1)*exp(-x-y)"), 10_000, part="edge")
    assert _within_3se(x, 1.0)


def test_zero_multigraphex_is_empty():
    for i in range(20):
        assert sample_multigraphex(Multigraphex(), 1.0, TC, RngKey(i)).n_atoms == 0


def test_multigraphex_poisson_campbell():
    x = _masses(Multigraphex(PoissonKernel("exp(-x-y)")), 10_000, part="edge")
    assert _within_3se(x, 1.0)


def test_multigraphex_dust_campbell():
    x = _masses(Multigraphex(I=DustSequence((0, 0.5))), 10_000, tc=TruncationConfig(0.5))
    assert _within_3se(x, 1.0)


def test_multigraphex_integer_and_symmetric():
    mg = Multigraphex(PoissonKernel("3*exp(-x-y)"), StarIntensity("ind(k,2,2)*exp(-v)", kmax=2),
                      DustSequence((0, 1.0, 0.5)))
    for i in range(50):
        w = sample_multigraphex(mg, 2.0, TC, RngKey(i))
        assert w.weights.dtype.kind in "iu"
        assert w.symmetric and harness.test_symmetry(w)


def test_seed_determinism_and_thread_independence():
    mg = Multigraphex(PoissonKernel("exp(-x-y)"), StarIntensity("ind(k,1,1)*exp(-v)", kmax=1))
    a = sample(mg, 3.0, TC, RngKey(5), workers=1)
    b = sample(mg, 3.0, TC, RngKey(5), workers=8)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys) and np.array_equal(a.weights, b.weights)
    rep = KallenbergRep(f="ind(z,0,exp(-x-y))", g="ind(y,0,1)*ind(x,0,3)", l="ind(x,0,1)")
    a = sample(rep, 2.0, TC, RngKey(6), workers=1)
    b = sample(rep, 2.0, TC, RngKey(6), workers=8)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.weights, b.weights)


def test_restriction_in_law():
    mg = Multigraphex(PoissonKernel("exp(-x-y)"))
    big = harness.replicate(lambda w: w.mass_in(0, 1, 0, 1), harness.ModelSampler(mg, TC), 2.0, RngKey(1), 2000)
    small = harness.replicate(lambda w: w.atomic_mass, harness.ModelSampler(mg, TC), 1.0, RngKey(2), 2000)
    assert stats.mannwhitneyu(big, small).pvalue > 0.01


def test_round_trip_consistency():
    f, g, l = "ind(z,0,exp(-x-y))", "ind(x,0,2)*ind(y,0,1)", "ind(x,0,0.5)"
    rep = KallenbergRep(f=f, g=g, gp=g, l=l, lp=l)
    mg = kallenberg_to_multigraphex(f=f, g=g, l=l)
    a = _masses(rep, 1000, seed=3)
    b = _masses(mg, 1000, seed=4)
    assert stats.mannwhitneyu(a, b).pvalue > 0.01


def test_star_cap_names_condition():
    rep = KallenbergRep(g=CE, gp=CE)
    with pytest.raises(CapExceeded) as info:
        sample(rep, 1.0, TruncationConfig(1000.0, max_points=100_000), RngKey(0))
    assert info.value.part == "star" and "(ii)" in str(info.value)


def test_truncation_error_examples():
    est = truncation_error(Multigraphex(bernoulli_kernel("ind(x,0,1)*ind(y,0,1)")), 1.0, 1.0)
    assert est.verdict is Convergence.CONVERGED and est.value == 0.0
    est = truncation_error(Multigraphex(PoissonKernel("exp(-x-y)")), 1.0, 10.0)
    assert est.verdict is Convergence.CONVERGED
    assert est.value < 1e-4 and est.value <= 2 * math.exp(-10) * 1.01
    est = truncation_error(KallenbergRep(g=CE, gp=CE), 1.0, 10.0)
    assert est.verdict is Convergence.DIVERGING


def test_pmf_kernel_multiplicities():
    W = PmfKernel("0.5*ind(x,0,1)*ind(y,0,1)*ind(k,3,3)", kmax=3)
    ws = [sample_multigraphex(Multigraphex(W), 1.0, TC, RngKey(i)) for i in range(100)]
    assert all(set(w.weights.tolist()) <= {3} for w in ws)
