import numpy as np
import pytest

from exmeas.models import (DustSequence, KallenbergRep, LevelSetDivergence, Multigraphex, PmfKernel,
                           PoissonKernel, StarIntensity, bernoulli_kernel, kallenberg_to_multigraphex)


def test_kallenberg_rep_slots():
    rep = KallenbergRep(g="ind(x,0,1)", beta=1.0)
    assert rep.f.is_zero and not rep.g.is_zero
    assert not rep.is_zero and not rep.is_atomic
    assert KallenbergRep().is_zero
    with pytest.raises(ValueError):
        KallenbergRep(f="x+k")
    with pytest.raises(ValueError):
        KallenbergRep(beta=-1)


def test_poisson_kernel_row_sums():
    W = PoissonKernel("exp(-x-y)")
    rng = np.random.default_rng(1)
    x, y = rng.exponential(3, 1000), rng.exponential(3, 1000)
    assert np.max(np.abs(W.row_sum(x, y) - 1)) <= 1e-9
    assert np.allclose(W.pmf(x, y, 1), W.pmf(y, x, 1))
    assert np.allclose(W.mean(x, y), np.exp(-x - y))
    assert np.allclose(W.edge_prob(0.0, 0.0), 1 - np.exp(-1))


def test_pmf_kernel_normalises_zero_slot():
    W = PmfKernel("0.25*ind(k,1,1)+0.25*ind(k,2,2)", kmax=2)
    assert np.allclose(W.table([0.3], [0.4]), [[0.5, 0.25, 0.25]])
    with pytest.raises(ValueError):
        PmfKernel("0.7", kmax=2).table([0.0], [0.0])


def test_multigraphex_validation():
    with pytest.raises(ValueError):
        Multigraphex(bernoulli_kernel("ind(x,0,1)*ind(y,2,3)"))  # asymmetric
    with pytest.raises(ValueError):
        Multigraphex(PmfKernel("0.4", kmax=3))  # masses sum past one
    mg = Multigraphex(bernoulli_kernel("ind(x,0,1)*ind(y,0,1)"))
    assert not mg.is_zero
    assert Multigraphex().is_zero


def test_star_and_dust():
    S = StarIntensity("ind(k,1,1)*exp(-v)", kmax=3)
    assert np.allclose(S.atom_mass([0.0, 1.0]), [1.0, np.exp(-1)])
    I = DustSequence((0, 0.5, 0.25))
    assert I.atom_mass == 0.75 and I.mean == 1.0 and I.total == 0.75
    with pytest.raises(ValueError):
        DustSequence((0, -1))


def test_level_set_conversion_examples():
    mg = kallenberg_to_multigraphex(f="2*ind(z,0,0.3)")
    assert np.allclose([mg.W.pmf(1.0, 2.0, k) for k in range(3)], [0.7, 0.0, 0.3], atol=1e-9)
    mg = kallenberg_to_multigraphex(g="ind(y,0,2)")
    assert np.allclose(mg.S.table([0.0, 5.0])[:, 1], 2.0, atol=1e-9)
    assert np.allclose(mg.S.table([0.0])[:, 0], 0.0)
    mg = kallenberg_to_multigraphex()
    assert mg.I.is_zero and mg.is_zero


def test_level_set_dust_and_errors():
    mg = kallenberg_to_multigraphex(l="ind(x,0,1)+ind(x,0,0.5)")
    assert np.allclose(mg.I.values[1:3], [0.5, 0.5], atol=1e-9)
    with pytest.raises(ValueError):
        kallenberg_to_multigraphex(g="0.5*ind(y,0,1)")  # not integer valued
    with pytest.raises(LevelSetDivergence):
        kallenberg_to_multigraphex(l="1")
