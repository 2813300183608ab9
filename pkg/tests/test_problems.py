import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from nonlocal_rd.problems import (DiffusionModulator, Forcing, ReactionTerm, SamplingPlan,
                                  chafee_infante, dissipativity_constants, validate_assumptions)


def test_cubic_constants_lambda_two():
    c = dissipativity_constants(2.0, 0.5)
    # max of 2 s^2 - s^4 / 2 is 2 at s^2 = 2
    assert c.kappa == pytest.approx(2.0, abs=1e-15)
    assert c.alpha1 == 0.5
    assert c.eta == 2.0
    # max of s^2 - s^4 / 8 is 2
    assert c.kappa_t == pytest.approx(2.0, abs=1e-15)
    assert c.alpha1_t == pytest.approx(1.0 / 8.0)


def test_cubic_constants_lambda_zero():
    c = dissipativity_constants(0.0, 0.5)
    assert c.kappa == 0.0 and c.eta == 0.0


@pytest.mark.parametrize("split", [0.0, 1.0, -0.2, 1.5])
def test_split_outside_unit_interval_refused(split):
    with pytest.raises(ValueError):
        dissipativity_constants(2.0, split)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(-6.0, 6.0), split=st.floats(0.05, 0.95),
       s=st.floats(-50.0, 50.0, allow_nan=False))
def test_cubic_constants_bound_pointwise(lam, split, s):
    r = ReactionTerm.cubic(lam, split)
    fs, Fs = float(r.f(s)), float(r.F(s))
    tol = 1e-9 * (1.0 + s ** 4 + lam ** 2)
    assert fs * s <= r.kappa - r.alpha1 * s ** 4 + tol
    assert fs * s >= -r.kappa - r.alpha2 * s ** 4 - tol
    assert Fs <= r.kappa_t - r.alpha1_t * s ** 4 + tol
    assert Fs >= -r.kappa_t - r.alpha2_t * s ** 4 - tol
    assert float(r.df(s)) <= r.eta + tol
    assert s * fs <= Fs + 0.5 * r.eta * s * s + tol


@pytest.mark.parametrize("lam", [-1.0, 0.0, 0.5, 2.0, 5.0])
@pytest.mark.parametrize("diff", [
    DiffusionModulator("constant", 1.0),
    DiffusionModulator("affine", 0.5, 0.3),
    DiffusionModulator("saturating", 1.0, 1.0),
])
def test_catalog_instances_pass_every_claim(lam, diff):
    rep = validate_assumptions(chafee_infante(lam, diffusion=diff))
    for c in rep.checks:
        if c.claimed:
            assert c.passed, c
            if not c.name.endswith("_antiderivative"):
                assert c.worst_violation <= 1e-12, c


def test_uniqueness_needs_monotone_claim():
    good = validate_assumptions(chafee_infante(2.0))
    assert "uniqueness" in good.theorems
    bad_diff = DiffusionModulator("saturating", 1.0, -0.95, claim_monotone_as=True)
    bad = validate_assumptions(chafee_infante(2.0, diffusion=bad_diff))
    assert not bad["monotone_as"].passed
    assert bad["monotone_as"].worst_violation > 0.0
    assert "uniqueness" not in bad.theorems
    assert not bad.passed


def test_false_aprime_claim_detected():
    d = DiffusionModulator("affine", 1.0, -0.1, claim_aprime_nonneg=True)
    rep = validate_assumptions(chafee_infante(2.0, diffusion=d))
    assert not rep["aprime_nonneg"].passed


def test_saturating_bounds():
    d = DiffusionModulator("saturating", 1.0, 1.0)
    assert d.aprime_nonneg
    assert d.M1 == 2.0 and d.M2 == 0.0
    s = np.linspace(0.0, 1e4, 1001)
    assert np.all(d.a(s) <= 2.0) and np.all(d.a(s) >= 1.0)


@pytest.mark.parametrize("diff", [
    DiffusionModulator("constant", 1.3),
    DiffusionModulator("affine", 0.5, 0.3),
    DiffusionModulator("saturating", 1.0, 1.0),
    DiffusionModulator("saturating", 2.0, -0.5),
])
def test_A_matches_adaptive_quadrature(diff, rng):
    for s in rng.uniform(0.0, 50.0, size=50):
        ref = quad(lambda r: float(diff.a(r)), 0.0, s, epsabs=0.0, epsrel=1e-13)[0]
        assert float(diff.A(s)) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_monotone_flag_matches_sampled_check():
    for d in (DiffusionModulator("constant", 1.0), DiffusionModulator("affine", 1.0, 2.0),
              DiffusionModulator("saturating", 1.0, 3.0)):
        rep = validate_assumptions(chafee_infante(2.0, diffusion=d))
        assert d.monotone_as and rep["monotone_as"].passed
        assert rep["monotone_as"].worst_violation == 0.0


def test_kappa1_lambda_two():
    assert chafee_infante(2.0).kappa1 == pytest.approx(4.0 * math.pi)


def test_kappa1_with_constant_forcing():
    spec = chafee_infante(2.0, forcing=Forcing.constant(0.5))
    # |h|^2 = 0.25 pi, lambda1 m = 1
    assert spec.kappa1 == pytest.approx(4.0 * math.pi + 0.25 * math.pi, rel=1e-6)


def test_non_positive_m_refused():
    with pytest.raises(ValueError):
        DiffusionModulator("constant", 0.0)
    with pytest.raises(ValueError):
        DiffusionModulator("cubic", 1.0)


def test_sampling_plan_minimum():
    with pytest.raises(ValueError):
        SamplingPlan(n_points=50)
    plan = SamplingPlan(s_scale=2.0)
    assert plan.reals()[0] <= -20.0 and plan.reals()[-1] >= 20.0


def test_linear_reaction_evaluators():
    r = ReactionTerm.linear(-0.5)
    s = np.linspace(-3, 3, 7)
    assert np.allclose(r.f(s), -0.5 * s)
    assert np.allclose(r.F(s), -0.25 * s * s)
    assert np.all(r.df(s) == -0.5)


def test_grid_forcing_interpolates():
    h = Forcing.from_samples([0.0, 1.0, 2.0], [0.0, 2.0, 0.0])
    assert h(np.array([0.5, 1.5])).tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        Forcing.from_samples([0.0, 0.0], [1.0, 2.0])
