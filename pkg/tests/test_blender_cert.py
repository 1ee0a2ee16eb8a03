"""Interval checks of the blender conditions, the strip game and the parameter scan."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blenders.blender_cert import (CERTIFIED, FAILED, CertConfig, VerticalCurve, check_H1_H2,
                                   check_H3, check_H4, check_H5_case, compute_AB_enclosures,
                                   certify, curve_net, euclidean_expansion, i_plus_oracle,
                                   i_plus_subclaim, scan_O, scan_point, slice_inner_points,
                                   strip_game, strip_width, widths_obey)
from blenders.henon_family import BlenderMap, HenonParams, fixed_point_Pstar

REF = HenonParams.conjugate(-9.9, 5e-5, 1.185)
MID = HenonParams.conjugate(-9.5, 5e-5, 1.185)


def test_slice_ends_at_top_face():
    # at z = 0 the slice I+_0 is {sqrt(5.9) <= x <= sqrt(13.9)}
    inner = slice_inner_points(REF, 1)
    assert inner.lo[-1] <= math.sqrt(5.9) <= inner.hi[-1]
    ab = compute_AB_enclosures(REF)
    assert ab.i_plus[1].contains(math.sqrt(13.9))
    assert 2.4 < ab.i_plus[0].lo and ab.i_plus[1].hi < 3.8


def test_A_misses_strong_stable_faces():
    ab = compute_AB_enclosures(REF)
    assert ab.status == CERTIFIED
    assert all(b.x.hi < 4 and b.x.lo > -4 for b in ab.A + ab.B)
    assert max(float(b.x.hi) for b in ab.B) < min(float(b.x.lo) for b in ab.A)


def test_i_plus_subclaim_fails_near_minus_nine():
    p = HenonParams.conjugate(-9.05, 5e-5, 1.185)
    inner = slice_inner_points(p, 1)
    assert abs(inner.mid[-1] - math.sqrt(5.05)) < 1e-12
    assert i_plus_subclaim(p)["verdict"] == "FAILED"
    h = check_H1_H2(p)
    assert h["H1"].verdict == CERTIFIED


def test_i_plus_verdicts_and_oracle():
    a, b = scan_point(MID), scan_point(REF)
    assert a["i_plus"] == "FAILED" and b["i_plus"] == "PASSED"
    for row, p in ((a, MID), (b, REF)):
        assert abs(row["i_plus_x_lo"] - i_plus_oracle(p)) < 1e-9


def test_H1_H2_reference():
    h = check_H1_H2(REF)
    assert h["H1"].verdict == CERTIFIED and h["H2"].verdict == CERTIFIED
    assert h["H1"].margin > 0 and h["H2"].margin > 0
    # B images sit below z = -2.4 near the top face
    assert h["H2"].details["B_gap_to_top"] > 1.99


def test_H1_H2_fails_off_box():
    h = check_H1_H2(HenonParams.conjugate(-9.9, 5e-5, 0.5))
    assert FAILED in (h["H1"].verdict, h["H2"].verdict)


def test_H3_fails_off_box():
    h = check_H3(HenonParams.conjugate(-9.9, 5e-5, 0.5))
    assert h["H3i"].verdict == FAILED


def test_H3_expansion_at_sample_point():
    J = BlenderMap(REF).jac((0.0, 3.0, -10.0))
    v1 = J @ np.array([0.0, 1.0, 0.0])
    assert np.linalg.norm(v1) >= 4.7
    assert np.allclose(J @ np.array([1.0, 0.0, 0.0]), 0)


def test_H4_reference_and_stress():
    r = check_H4(REF)
    assert r.verdict == CERTIFIED and r.margin > 0
    lo, hi = r.details["z_star"]
    assert hi - lo < 1e-10
    a = 1 + 5e-5 / 0.185 ** 2
    y = (1 + math.sqrt(1 + 4 * a * 9.9)) / (2 * a)
    assert lo <= -y / 0.185 <= hi
    assert check_H4(HenonParams.conjugate(-9.9, 5e-5, 1.01)).verdict == FAILED


def test_H5_case_A_reference_curve():
    r = check_H5_case(REF, VerticalCurve.line(0.0, -10.0))
    assert r.A.ok
    F = BlenderMap(REF)
    lo = F((0.0, 2.4, -10.0))[1]
    hi = F((0.0, 3.8, -10.0))[1]
    assert lo == pytest.approx(-4.135, abs=1e-9) and hi == pytest.approx(4.545, abs=1e-9)


def test_H5_case_A_fails_at_mid_box():
    r = check_H5_case(MID, VerticalCurve.line(0.0, -10.0))
    assert not r.A.ok
    assert BlenderMap(MID)((0.0, 2.4, -10.0))[1] == pytest.approx(-3.735, abs=1e-9)


def test_H5_case_B_image_z_range():
    r = check_H5_case(REF, VerticalCurve.line(0.0, -1.0))
    assert r.B.ok
    z = r.B.image.z
    assert -12.45 < z.min() and z.max() < -2.4
    assert np.min(np.abs(z - fixed_point_Pstar(REF).z.mid)) > 0.5


def test_curve_net_is_vertical_and_right_of_w0s():
    fp = fixed_point_Pstar(REF)
    net = curve_net(fp.z.mid, fp.y.mid)
    assert len(net) > 10
    for c in net:
        assert c.is_vertical() and c.in_box()
        assert c.crossing(fp.y.mid)[1] > fp.z.mid


def test_vertical_curve_rejects_unsorted_samples():
    with pytest.raises(ValueError):
        VerticalCurve([0, 0], [0, 0], [0, 0], [0, 0], [0, 0])


def test_strip_game_seed_crossing_hits_at_step_zero():
    zs = fixed_point_Pstar(REF).z.mid
    tr = strip_game(REF, VerticalCurve.line(0.0, zs + 0.01), steps=5)
    assert tr.found and tr.found_step == 0


def test_strip_width_of_parallel_lines():
    a, b = VerticalCurve.line(0, -10), VerticalCurve.line(0, -10.5)
    assert strip_width(a, b) == pytest.approx(0.5)


def test_widths_obey():
    assert widths_obey([1, 1.1, 1.3, 1.5], 1.2, 2)
    assert not widths_obey([1, 1.1, 1.1, 1.5], 1.2, 2)
    assert widths_obey([1.0], 5.0, 3)


@given(st.floats(1.0001, 3.0))
def test_euclidean_expansion_constant(c0):
    ell, c = euclidean_expansion(c0)
    assert c > 1 and c == pytest.approx(c0 ** ell / math.sqrt(2))
    assert ell == 1 or c0 ** (ell - 1) / math.sqrt(2) <= 1


def test_far_parameters_fail():
    cert = certify(HenonParams.conjugate(-5.0, 5e-5, 1.185))
    assert cert.overall == FAILED
    d = json.loads(cert.to_json())
    assert d["overall"] == FAILED and set(d["conditions"]) >= {"H1", "H2", "H3i", "H4", "H5"}
    assert d["conditions"]["H5"]["rigorous"] is False


def test_scan_o_grid_shape_and_oracle():
    rows = scan_O(shape=(4, 2, 2))
    assert len(rows) == 16
    for r in rows:
        assert abs(r["i_plus_x_lo"] - r["oracle_x_lo"]) < 1e-9
        assert r["z_star_in_range"] and r["y_star_in_range"]


@settings(max_examples=15, deadline=None)
@given(st.floats(-9.999, -9.85), st.floats(1e-6, 9.9e-5), st.floats(1.181, 1.189))
def test_A_B_structure_near_left_edge(mu, kappa, xi):
    p = HenonParams.conjugate(mu, kappa, xi)
    h = check_H1_H2(p, config=CertConfig(depth=10))
    assert h["H1"].verdict != FAILED and h["H2"].verdict != FAILED
