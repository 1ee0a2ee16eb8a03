"""Rescaled return maps, their closed form and convergence to the limit family."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blenders.model_cycle import REFERENCE_CONFIG, CycleConfig, HigherOrderSpec, TransitionCoeffs
from blenders.renorm import (GridSpec, InsufficientPrecision, closed_form_return_map,
                             conjugated_limit, convergence_report, default_precision, fit_kappa,
                             kappas, landau_ratios, limit_jacobian, limit_map, normal_form,
                             precision_consistency, renorm_data, return_jacobian, return_map,
                             return_polynomial, xi_of_pair)

CFG = REFERENCE_CONFIG
XI = 1.185
SCHEDULE = [(64, 61), (501, 478), (654, 624), (807, 770)]
unit = st.floats(-1, 1)


def test_renorm_data_small_pair():
    d = renorm_data(CFG, 2, 3)
    assert [float(v) for v in d.scale_factors] == pytest.approx(
        [0.0643004, 0.00413454, 0.5787037], rel=1e-6)
    assert [float(v) for v in d.psi((0, 0, 0))] == pytest.approx([1, 0.5787037, 1], rel=1e-7)
    assert [float(v) for v in d.mu_vec] == pytest.approx([-0.0025, 0.5762037, -0.0025], rel=1e-6)
    assert [float(v) for v in d.nu_vec] == pytest.approx([-0.00398107, 0.111111, 0.0113457],
                                                         rel=1e-5)


def test_renorm_data_errors():
    with pytest.raises(ValueError):
        renorm_data(CFG, 0, 3)
    with pytest.raises(InsufficientPrecision):
        renorm_data(CFG, 807, 770, precision=200)


def test_shifts_shrink_along_schedule():
    prev = None
    for m, n in SCHEDULE:
        d = renorm_data(CFG, m, n)
        size = max(abs(v) for v in d.mu_vec + d.nu_vec)
        assert prev is None or size < prev
        prev = size


@settings(max_examples=50, deadline=None)
@given(unit, unit, unit)
def test_psi_round_trip(x, y, z):
    d = renorm_data(CFG, 64, 61)
    with mpmath.workprec(d.precision):
        back = d.psi_inv(d.psi((mpmath.mpf(x), mpmath.mpf(y), mpmath.mpf(z))))
        # within 10 ulp of the double inputs
        assert max(abs(a - b) for a, b in zip(back, (x, y, z))) < 10 * np.finfo(float).eps


@pytest.mark.parametrize("m,n", [(2, 3), (64, 61)])
def test_orbit_matches_closed_form(m, n):
    rng = np.random.default_rng(m)
    poly = return_polynomial(CFG, m, n, -0.3)
    d = renorm_data(CFG, m, n, -0.3)
    # at (2, 3) the unit cube leaves the transition domain; the identity still holds
    for p in rng.uniform(-1, 1, (20, 3)):
        a = return_map(CFG, m, n, -0.3, p, data=d, check=m > 2)
        b = poly(p)
        assert max(abs(u - v) for u, v in zip(a, b)) < 1e-20


def test_closed_form_needs_zero_higher_terms():
    cfg = CycleConfig(higher=HigherOrderSpec({"H1": [(1.0, (0, 2, 0))]}))
    with pytest.raises(ValueError):
        closed_form_return_map(cfg, 2, 3, 0.0, (0, 0, 0))


def test_chain_rule_jacobian_matches_polynomial():
    poly = return_polynomial(CFG, 64, 61, 0.2)
    p = (0.3, -0.7, 0.5)
    J = return_jacobian(CFG, 64, 61, 0.2, p)
    Jp = poly.jacobian(p)
    assert max(abs(J[i, j] - Jp[i, j]) for i in range(3) for j in range(3)) < 1e-20


def test_x_coefficient_with_nonzero_alpha1_beta1():
    coeffs = TransitionCoeffs(alpha=(0.3, 1.0, 1.0), beta=(0.2, 1.0, 0.0))
    cfg = CycleConfig(coeffs=coeffs)
    m, n = 2, 3
    e = cfg.eig
    M = mpmath.mpf
    with mpmath.workprec(200):
        expect = (M(e.lam) ** n * M(e.zeta_t) ** m
                  + M(e.lam) ** n * M(e.lambda_t) ** m * 0.3
                  + M(e.lam) ** n * M(e.sigma_t) ** m * 0.2)
        J = return_jacobian(cfg, m, n, 0.0, (0, 0, 0))
        assert abs(J[0, 0] - expect) < 1e-30
        assert abs(return_polynomial(cfg, m, n).components[0].lin[0] - expect) < 1e-30


def test_limit_map_example():
    r = limit_map(CFG.coeffs, XI, -9.5, (1, 1, 0))
    assert r.point == pytest.approx((2.185, -7.095775, 1), abs=1e-9)
    assert (r.kappa1, r.kappa2) == pytest.approx((1.404225, 0.0), abs=1e-9)


def test_kappas_at_unit_coefficients():
    c = TransitionCoeffs(b=(1.0, 1.0, 1.0, 0.7))
    assert kappas(c, 1.0) == pytest.approx((1.0, 0.7))
    with pytest.raises(ZeroDivisionError):
        kappas(TransitionCoeffs(a=(1.0, 0.0, 1.0)), 1.0)


def test_normal_form_origin():
    assert normal_form(XI, 1.4, 0.0, -9.2, (0, 0, 0)) == (0, -9.2, 0)


@given(unit, unit, unit, st.floats(-10, 10))
def test_conjugated_limit_is_normal_form(x, y, z, mu):
    c = TransitionCoeffs(a=(1.0, 2.0, 1.5), b=(1.0, 0.5, 3.0, 0.4), c=(1.0, -1.3, 0.0),
                         beta=(0.0, 0.8, 0.0), gamma=(1.0, 0.0, 0.0))
    k1, k2 = kappas(c, XI)
    got = conjugated_limit(c, XI, mu, (x, y, z))
    want = normal_form(XI, k1, k2, mu, (x, y, z))
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(unit, unit, unit)
def test_limit_jacobian_differences(x, y, z):
    c = TransitionCoeffs(b=(1.0, 0.5, 3.0, 0.4))
    J = np.array(limit_jacobian(c, XI, (x, y, z)), dtype=float)
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (np.array(limit_map(c, XI, 0.0, np.add((x, y, z), e)).point)
              - np.array(limit_map(c, XI, 0.0, np.subtract((x, y, z), e)).point)) / (2 * h)
        assert np.allclose(fd, J[:, j], atol=1e-6)


def test_fit_kappa_near_formula():
    k1, k2 = fit_kappa(CFG, 64, 61, points=3)
    assert k1 == pytest.approx(kappas(CFG.coeffs, xi_of_pair(CFG, 64, 61))[0], rel=1e-3)
    assert abs(k2) < 1e-6


def test_convergence_on_small_grid():
    grid = GridSpec(k_points=3, i_points=3)
    rep = convergence_report(CFG, SCHEDULE[:2], XI, grid, order=1)
    assert rep.decreasing("d0") and rep.decreasing("d1")
    assert rep.to_csv().splitlines()[0] == "m,n,err,d0,d1,d2"
    with pytest.raises(ValueError):
        convergence_report(CFG, SCHEDULE[:1], XI, grid, order=3)


def test_landau_ratios_bounded():
    for r in landau_ratios(CFG, SCHEDULE[:2]):
        assert max(r["x_n"], r["z_n"], r["x_m"], r["z_m"]) < 10


def test_precision_doubling():
    assert precision_consistency(CFG, 64, 61, 0.0, (0.5, 0.5, 0.5)) > 50


def test_default_precision_grows_with_pair():
    assert default_precision(CFG, 807, 770) > default_precision(CFG, 64, 61) > 128
