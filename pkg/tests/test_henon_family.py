"""The two forms of the map, their Jacobians, conjugacies and the fixed point."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blenders.geom_core import IBox3
from blenders.henon_family import (DEFAULT_BOX, BlenderMap, HenonParams, NoBlenderFixedPoint,
                                   Perturbation, ThetaCoeffs, apply_conjugacy, eval_jacobian,
                                   eval_map, fixed_point_Pstar)

CONJ = HenonParams.conjugate(-9.5, 5e-5, 1.185)


def y_star_oracle(mu, kappa, xi):
    """Larger root of (1 + kappa/(xi-1)^2) y^2 - y + mu = 0 by the quadratic formula."""
    a = 1 + kappa / (xi - 1) ** 2
    return (1 + math.sqrt(1 - 4 * a * mu)) / (2 * a)


def test_eval_map_examples():
    assert np.allclose(eval_map(CONJ, (0, 0, 0)), (0, -9.5, 0))
    assert np.allclose(eval_map(CONJ, (1, 2, -10)), (2, -5.495, -9.85), atol=1e-12)
    std = HenonParams(xi=1.185, mu=-9.5, kappa=5e-5, eta=0.01, form="standard")
    assert np.allclose(eval_map(std, (1, 2, 0)), (3.185, -5.47995, 2), atol=1e-12)


def test_conjugate_form_rejects_eta():
    with pytest.raises(ValueError):
        HenonParams(xi=1.185, mu=-9.5, kappa=5e-5, eta=1e-4, form="conjugate")
    with pytest.raises(ValueError):
        HenonParams(xi=1.185, mu=math.nan, kappa=0.0)


def test_box_image_encloses_point_images():
    b = IBox3.from_bounds((-1, 1), (2, 3), (-12, -10))
    img = eval_map(CONJ, b)
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = [rng.uniform(-1, 1), rng.uniform(2, 3), rng.uniform(-12, -10)]
        assert img.contains_point(eval_map(CONJ, p))


def test_default_box_matches_defining_ranges():
    assert DEFAULT_BOX.mu == (-10.0, -9.0)
    assert DEFAULT_BOX.kappa == (0.0, 1e-4)
    assert DEFAULT_BOX.xi == (1.18, 1.19)
    assert DEFAULT_BOX.delta.widths == (8.0, 8.0, 40.0)
    assert DEFAULT_BOX.contains(HenonParams.conjugate(-9.9, 5e-5, 1.185))
    assert not DEFAULT_BOX.contains(HenonParams.conjugate(-9.9, 0.0, 1.185))


def test_jacobian_examples():
    J = eval_jacobian(CONJ, (7.0, 3.0, -10.0))
    assert np.allclose(J[1], (0, 6, -0.001))
    assert np.allclose(J @ (1, 0, 0), 0)
    assert np.allclose(J @ (0, 1, 0), (1, 6, 1))


def test_interval_jacobian_encloses_point_jacobian():
    b = IBox3.from_bounds((0, 1), (2, 3), (-20, -10))
    M = eval_jacobian(CONJ, b)
    J = eval_jacobian(CONJ, (0.5, 2.5, -15))
    for i in range(3):
        for j in range(3):
            assert M[i][j].contains(J[i][j])


point = st.tuples(st.floats(-4, 4), st.floats(-4, 4), st.floats(-40, 0))


@settings(max_examples=200)
@given(point, st.sampled_from(["conjugate", "standard"]))
def test_jacobian_matches_central_differences(p, form):
    q = HenonParams(xi=1.185, mu=-9.7, kappa=5e-5, eta=0.0005 if form == "standard" else 0.0,
                    form=form)
    J = eval_jacobian(q, p)
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (eval_map(q, np.add(p, e)) - eval_map(q, np.subtract(p, e))) / (2 * h)
        assert np.allclose(fd, J[:, j], rtol=1e-6, atol=1e-6)


@settings(max_examples=300)
@given(point)
def test_swap_conjugates_standard_to_conjugate_form(p):
    std = HenonParams(xi=1.185, mu=-9.5, kappa=5e-5, form="standard")
    lhs = apply_conjugacy("theta_tilde", None, eval_map(std, apply_conjugacy("theta_tilde", None, p)))
    assert np.array_equal(lhs, eval_map(CONJ, p))


def test_theta_tilde_examples():
    assert np.array_equal(apply_conjugacy("theta_tilde", None, (1, 2, 3)), (3, 2, 1))
    rng = np.random.default_rng(3)
    for p in rng.normal(size=(50, 3)):
        twice = apply_conjugacy("theta_tilde", None, apply_conjugacy("theta_tilde", None, p))
        assert np.array_equal(twice, p)


def test_theta_unit_coefficients_is_identity():
    p, mu = apply_conjugacy("theta", ThetaCoeffs(), (1.5, -2.0, 0.25), mu=-9.0)
    assert np.array_equal(p, (1.5, -2.0, 0.25)) and mu == -9.0


def test_theta_round_trip_and_zero_coefficient():
    c = ThetaCoeffs(a2=2.0, b2=-0.5, c2=3.0, beta2=1.5)
    p = np.array([0.3, -1.2, 2.2])
    q, mu = apply_conjugacy("theta", c, p, mu=-9.5)
    back, mu0 = apply_conjugacy("theta", c, q, mu=mu, inverse=True)
    assert np.allclose(back, p) and mu0 == pytest.approx(-9.5)
    with pytest.raises(ZeroDivisionError):
        apply_conjugacy("theta", ThetaCoeffs(a2=0.0), p)
    with pytest.raises(ValueError):
        apply_conjugacy("rotate", None, p)


def test_fixed_point_degenerate_kappa():
    fp = fixed_point_Pstar(HenonParams.conjugate(-9.5, 0.0, 1.185))
    y = (1 + math.sqrt(39)) / 2
    assert fp.y.contains(y) or abs(fp.y.mid - y) < 1e-13
    assert fp.y.mid == pytest.approx(3.62250, abs=5e-6)
    assert fp.z.mid == pytest.approx(-19.5811, abs=5e-5)


def test_fixed_point_matches_quadratic_oracle():
    fp = fixed_point_Pstar(CONJ)
    y = y_star_oracle(-9.5, 5e-5, 1.185)
    assert abs(fp.y.mid - y) < 1e-12
    assert fp.y.mid == pytest.approx(3.61943, abs=5e-6)
    assert fp.z.mid == pytest.approx(-19.5645, abs=5e-5)
    # residual of the quadratic
    a = 1 + 5e-5 / 0.185 ** 2
    assert abs(a * fp.y.mid ** 2 - fp.y.mid - 9.5) < 1e-12


def test_fixed_point_is_fixed_and_w0s_collapses():
    fp = fixed_point_Pstar(CONJ)
    P = fp.point
    assert np.allclose(eval_map(CONJ, P), P, atol=1e-10)
    assert fp.x.lo == fp.y.lo and fp.x.hi == fp.y.hi
    # the line {(x, y*, z*)} is sent to P* in one step
    for x in np.linspace(-4, 4, 9):
        assert np.allclose(eval_map(CONJ, (x, P[1], P[2])), P, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-9.999, -9.001), st.floats(1e-7, 9.99e-5), st.floats(1.1801, 1.1899))
def test_fixed_point_bounds_over_parameter_box(mu, kappa, xi):
    fp = fixed_point_Pstar(HenonParams.conjugate(mu, kappa, xi))
    assert 2.4 < fp.y.lo and fp.y.hi < 3.8
    assert -21.2 < fp.z.lo and fp.z.hi < -12.6
    assert fp.width < 1e-10


def test_no_fixed_point_errors():
    with pytest.raises(NoBlenderFixedPoint):
        fixed_point_Pstar(HenonParams.conjugate(-9.5, 5e-5, 1.0))
    with pytest.raises(NoBlenderFixedPoint):
        fixed_point_Pstar(HenonParams.conjugate(-30.0, 5e-5, 1.185))


def test_blender_map_of_standard_form_is_swap_conjugate():
    std = HenonParams(xi=1.185, mu=-9.9, kappa=5e-5, eta=5e-4, form="standard")
    F = BlenderMap(std)
    p = np.array([0.7, 2.9, -15.0])
    sw = apply_conjugacy("theta_tilde", None, p)
    assert np.allclose(F(p), apply_conjugacy("theta_tilde", None, eval_map(std, sw)))


def test_perturbation_inflates_enclosures():
    b = IBox3.from_bounds((0, 0), (3, 3), (-10, -10))
    F0 = BlenderMap(CONJ)
    F1 = BlenderMap(CONJ, Perturbation(d0=1e-3, d1=1e-3))
    assert F1.box(b).contains_box(F0.box(b))
    assert F1.jac_box(b)[1][1].width >= 2e-3
