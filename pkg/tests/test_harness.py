import math

import numpy as np
import pytest

from exmeas import harness
from exmeas.core import AdjacencyMeasureWindow, Atom
from exmeas.dsl import DSLFunction
from exmeas.harness import TestReport
from exmeas.models import DustSequence, KallenbergRep, Multigraphex, PoissonKernel
from exmeas.rng import RngKey
from exmeas.sampler import TruncationConfig, sample_multigraphex

POISSON = Multigraphex(PoissonKernel("exp(-x-y)"))
TC = TruncationConfig(10.0)


def test_report_invariants():
    with pytest.raises(ValueError):
        TestReport("t", "s", 0.0, "n", 1.5, (1,), 0.01, "x", True)
    r = TestReport("t", "s", 0.0, "n", 0.5, (3, 4), 0.01, "fail-to-reject", True)
    assert "PASS" in r.summary() and r.to_dict()["sizes"] == [3, 4]


def test_symmetry_examples():
    assert harness.test_symmetry(AdjacencyMeasureWindow(1.0))
    w = sample_multigraphex(Multigraphex(PoissonKernel("5*exp(-x-y)")), 2.0, TC, RngKey(1))
    assert w.n_atoms > 2 and harness.test_symmetry(w)
    off = next(i for i in range(w.n_atoms) if w.xs[i] != w.ys[i])
    assert not harness.test_symmetry(w.without(off))
    w = AdjacencyMeasureWindow.from_atoms(1.0, [Atom(0.1, 0.2, 1), Atom(0.2, 0.1, 2)])
    assert not harness.test_symmetry(w)


def test_swap_map():
    assert harness.swap_interval(0.0, 0.5, 1.0) == (1.0, 1.5)
    assert harness.swap_interval(1.5, 2.0, 1.0) == (0.5, 1.0)
    with pytest.raises(ValueError):
        harness.swap_interval(0.5, 1.5, 1.0)
    for A, B in harness.rectangle_battery(1.0):
        assert 0 <= A[0] < A[1] <= 2 and 0 <= B[0] < B[1] <= 2


def test_exchangeability_zero_measure():
    r = harness.test_exchangeability(Multigraphex(), 1.0, 50, RngKey(0), tc=TC)
    assert r.p_value == 1.0 and r.passed and r.degenerate


def test_reports_reproducible():
    sampler = harness.ModelSampler(POISSON, TC)
    r1 = harness.test_exchangeability(sampler, 1.0, 200, RngKey(3))
    r2 = harness.test_exchangeability(sampler, 1.0, 200, RngKey(3), workers=1)
    assert r1 == r2
    c1 = harness.campbell_check(POISSON, 1.0, 10.0, 200, RngKey(4))
    c2 = harness.campbell_check(POISSON, 1.0, 10.0, 200, RngKey(4), workers=1)
    assert c1 == c2


def test_block_independence_zero_measure():
    r = harness.test_block_independence(Multigraphex(), 1.0, 2.0, 50, RngKey(0), tc=TC)
    assert r.passed and r.degenerate and "degenerate" in r.decision


def test_block_independence_rejects_bad_radii():
    with pytest.raises(ValueError):
        harness.test_block_independence(POISSON, 2.0, 1.0, 10, RngKey(0), tc=TC)


def test_campbell_zero_and_dust():
    r = harness.campbell_check(Multigraphex(), 1.0, 10.0, 20, RngKey(0))
    assert r.passed and r.details["predicted"] == 0.0 and r.details["mean"] == 0.0
    r = harness.campbell_check(Multigraphex(I=DustSequence((0, 0.5))), 1.0, 10.0, 2000, RngKey(1))
    assert r.passed and abs(r.details["predicted"] - 1.0) < 1e-12


def test_campbell_kallenberg_parts():
    rep = KallenbergRep(f="ind(z,0,1)*exp(-x-y)", l="ind(x,0,1)", beta=1.0)
    r = harness.campbell_check(rep, 1.0, 20.0, 2000, RngKey(2))
    assert r.passed
    assert abs(r.details["parts"]["edge"] - 1.0) < 1e-4
    assert abs(r.details["parts"]["diag"] - math.sqrt(2)) < 1e-12


def test_campbell_detects_wrong_prediction():
    # the skewed sampler carries extra mass the prediction does not
    sk = harness.SkewedSampler(harness.ModelSampler(POISSON, TC), 1.0)
    assert not harness.campbell_check(sk, 1.0, 10.0, 2000, RngKey(5)).passed


def test_demo_zero_row():
    res = harness.counterexample_demo([0.0], 10, RngKey(0))
    assert res.rows == ((0.0, 0.0, 0.0),)


def test_demo_reproducible():
    a = harness.counterexample_demo([2.0, 4.0], 50, RngKey(1))
    b = harness.counterexample_demo([2.0, 4.0], 50, RngKey(1), workers=1)
    assert a == b


def test_mixture_uses_both_components():
    zero = harness.ModelSampler(Multigraphex(), TC)
    busy = harness.ModelSampler(Multigraphex(PoissonKernel("5*exp(-x-y)")), TC)
    mix = harness.MixtureSampler(zero, busy)
    masses = harness.replicate(lambda w: w.atomic_mass, mix, 1.0, RngKey(0), 200)
    assert 60 < sum(m == 0 for m in masses) < 160


def test_poisson_partial_sums_linear_oracle():
    ps = harness.poisson_partial_sums(DSLFunction("1", ("x",)), RngKey(0), 10)
    assert np.all(np.diff(ps) >= 0)
    assert abs(ps[-1] - 1024) < 5 * math.sqrt(1024)


def test_poisson_partial_sums_quadratic_counts_pairs():
    # with h = 1 the quadratic sum is N(L)^2
    one = lambda x, y: np.ones(np.broadcast(x, y).shape)
    lin = harness.poisson_partial_sums(DSLFunction("1", ("x",)), RngKey(2), 6)
    quad = harness.poisson_partial_sums(one, RngKey(2), 6, quadratic=True)
    assert np.array_equal(quad, lin ** 2)


def test_false_positive_calibration():
    # 100 keys at alpha = 0.01 on an exchangeable config: at most 5 rejections
    sampler = harness.ModelSampler(POISSON, TC)
    rejections = sum(not harness.test_exchangeability(sampler, 1.0, 100, RngKey(1000 + i)).passed
                     for i in range(100))
    assert rejections <= 5
