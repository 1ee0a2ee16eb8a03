"""Acceptance criteria 1 to 10.

Each test prints one ``criterion N: PASS|FAIL ...`` line to the terminal,
bypassing output capture, and then asserts the criterion at its stated
tolerance.
"""

import math
import time

import numpy as np
import pytest

from blenders.blender_cert import (CERTIFIED, CertConfig, certify, check_H3, i_plus_oracle,
                                   scan_O, scan_point, strip_game, widths_obey)
from blenders.connect import (boxpert_quotient, compare_segment_images, holder_estimate,
                              holder_threshold)
from blenders.henon_family import DEFAULT_BOX, HenonParams, fixed_point_Pstar
from blenders.model_cycle import REFERENCE_CONFIG, EigenTuple
from blenders.param_search import (check_region_P, find_neutral_pairs, lr_bounds, sample_ST,
                                   verify_pair)
from blenders.renorm import (GridSpec, convergence_report, fit_kappa, kappas, renorm_data,
                             return_map, return_polynomial)

NEUTRAL = (0.1, 9.0, 1.0, 1.185)
SCHEDULE = [(64, 61), (501, 478), (654, 624), (807, 770)]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        return ok
    return emit


@pytest.mark.slow
def test_criterion_01_certification(report):
    mus = (-9.9, -9.99, -9.93, -9.86, -9.8)
    cfg = CertConfig()
    assert cfg.depth <= 14
    rows = []
    for mu in mus:
        t = time.perf_counter()
        cert = certify(HenonParams.conjugate(mu, 5e-5, 1.185), cfg)
        rows.append((mu, cert.overall, time.perf_counter() - t))
    ok = all(v == CERTIFIED and dt < 300 for _, v, dt in rows)
    detail = "; ".join(f"mu={mu}: {v} in {dt:.0f}s" for mu, v, dt in rows)
    assert report(1, ok, detail)


def test_criterion_02_fixed_point_bounds(report):
    rng = np.random.default_rng(2)
    box = DEFAULT_BOX
    bad = []
    for _ in range(100):
        p = HenonParams.conjugate(rng.uniform(*box.mu), rng.uniform(*box.kappa),
                                  rng.uniform(*box.xi))
        if p.kappa <= 0:
            continue
        fp = fixed_point_Pstar(p)
        if not (2.4 < fp.y.lo and fp.y.hi < 3.8 and -21.2 < fp.z.lo and fp.z.hi < -12.6
                and fp.width < 1e-10):
            bad.append(p)
    assert report(2, not bad, f"{len(bad)} of 100 samples outside the bounds")


def test_criterion_03_subclaim_map(report):
    rows = scan_O((16, 8, 8))
    worst = max(abs(r["i_plus_x_lo"] - r["oracle_x_lo"]) for r in rows)
    consistent = all((r["i_plus"] == "PASSED") == (r["oracle_x_lo"] > 2.4) for r in rows)
    mid = scan_point(HenonParams.conjugate(-9.5, 5e-5, 1.185))
    ref = scan_point(HenonParams.conjugate(-9.9, 5e-5, 1.185))
    point_err = max(abs(r["i_plus_x_lo"] - i_plus_oracle(HenonParams.conjugate(mu, 5e-5, 1.185)))
                    for r, mu in ((mid, -9.5), (ref, -9.9)))
    ok = (len(rows) == 1024 and worst < 1e-9 and point_err < 1e-9 and consistent
          and mid["i_plus"] == "FAILED" and ref["i_plus"] == "PASSED")
    assert report(3, ok, f"mu=-9.5 {mid['i_plus']}, mu=-9.9 {ref['i_plus']}, "
                         f"oracle error {max(worst, point_err):.2e}")


def test_criterion_04_st_region(report):
    s = sample_ST(1_000_000, seed=4)
    t_ok = 2 / 3 < s.T_range[0] and s.T_range[1] < 1
    it_ok = 1 < s.inv_T_range[0] and s.inv_T_range[1] < 1.5
    ok = abs(s.area - 1 / 6) <= 0.002 and t_ok and it_ok
    assert report(4, ok, f"area {s.area:.5f}, T in {s.T_range}, 1/T in {s.inv_T_range}")


def random_admissible(rng):
    lam = rng.uniform(0.01, 0.5)
    zeta = rng.uniform(lam, 1.0)
    zeta_t = rng.uniform(1.5, 20.0)
    sigma_t = rng.uniform(1.0, zeta_t)
    sigma = math.exp(rng.uniform(0.0, 1.5))
    lambda_t = rng.uniform(0.0, 1.0)
    return EigenTuple(lambda_t, sigma_t, zeta_t, lam, zeta, sigma)


def test_criterion_05_region_equivalence(report):
    rng = np.random.default_rng(5)
    disagree, excluded = 0, 0
    for _ in range(10_000):
        e = random_admissible(rng)
        chk = check_region_P(e)
        L, R = lr_bounds(e.lam, e.zeta, e.sigma_t, e.zeta_t)
        ls = math.log(e.sigma)
        margins = (abs(chk.margins["ichi"]), abs(chk.margins["ni"]), abs(ls - L), abs(ls - R))
        if min(margins) < 1e-12:
            excluded += 1
            continue
        lhs = chk.margins["ichi"] > 0 and chk.margins["ni"] > 0
        disagree += lhs != (L < ls < R)
    assert report(5, disagree == 0, f"{disagree} disagreements, {excluded} excluded")


def test_criterion_06_neutral_pairs(report):
    small = find_neutral_pairs(*NEUTRAL, eps=0.02, Nmax=50)
    big = find_neutral_pairs(*NEUTRAL, eps=1e-3, Nmax=10_000)
    p = small.pairs[0] if small.pairs else None
    ok = (p is not None and [(q.m, q.n) for q in small.pairs] == [(42, 40)]
          and abs(p.err - 0.01225) <= 1e-5 and p.drift < 1 and big.best_err <= 1e-3)
    verified = all(verify_pair(q, *NEUTRAL, eps=0.02, prec=256) for q in small.pairs) and all(
        verify_pair(q, *NEUTRAL, eps=1e-3, prec=256) for q in big.pairs)
    assert report(6, ok and verified,
                  f"(42,40) err {p.err:.6f} drift {p.drift:.3g}; Nmax=1e4 best {big.best_err:.3g}; "
                  f"{len(big.pairs)} pairs verified")


@pytest.mark.slow
def test_criterion_07_renormalization(report):
    cfg = REFERENCE_CONFIG
    rep = convergence_report(cfg, SCHEDULE, 1.185, GridSpec(), order=1)
    f0, f1 = rep.factor("d0"), rep.factor("d1")
    m, n = SCHEDULE[-1]
    d = renorm_data(cfg, m, n, 0.0)
    poly = return_polynomial(cfg, m, n, 0.0)
    g = np.linspace(-1, 1, 5)
    pts = [(x, y, z) for x in g for y in g for z in g][:100]
    closed = max(max(abs(a - b) for a, b in zip(return_map(cfg, m, n, 0.0, p, data=d), poly(p)))
                 for p in pts)
    k1, k2 = kappas(cfg.coeffs, 1.185)
    fk1, fk2 = fit_kappa(cfg, m, n)
    ok = (f0 >= 10 and f1 >= 10 and closed < 1e-20 and abs(k1 - 1.404225) < 1e-6
          and abs(k2) < 1e-6 and abs(fk1 - k1) < 1e-3 and abs(fk2 - k2) < 1e-3)
    assert report(7, ok, f"d0 factor {f0:.1f}, d1 factor {f1:.1f}, closed form "
                         f"{float(closed):.1e}, kappa ({k1:.6f}, {k2:.1g}), fit ({fk1:.6f}, {fk2:.1g})")


def test_criterion_08_connection(report):
    cfg = REFERENCE_CONFIG
    on = [compare_segment_images(cfg, m, n, points=17) for m, n in SCHEDULE]
    off = [compare_segment_images(cfg, m, n, points=17, theta=False) for m, n in SCHEDULE]
    ratios = [r.ratio for r in on]
    decreasing = all(b.c1 < a.c1 for a, b in zip(on, on[1:]))
    bounded = all(0.1 <= r <= 10 for r in ratios)
    gaps = [r.stage_gap for r in off]
    converges = gaps[-1] > 0.5 and abs(gaps[-1] - gaps[-2]) < 0.05 * gaps[-1]
    separated = all(b.stage_gap >= 10 * a.stage_gap for a, b in zip(on, off))
    ok = decreasing and bounded and converges and separated
    assert report(8, ok, f"ratios {[round(r, 3) for r in ratios]}, off gaps "
                         f"{[round(g, 4) for g in gaps]}, on gap max {max(r.stage_gap for r in on):.1e}")


def test_criterion_09_holder(report):
    cfg = REFERENCE_CONFIG
    assert holder_threshold(cfg) == pytest.approx(0.25, abs=1e-5)
    ns = range(0, 61, 5)
    lo = [holder_estimate(cfg, n, 0.2, samples=1000).estimate for n in ns]
    hi = [holder_estimate(cfg, n, 0.3, samples=1000).estimate for n in ns]
    small_ratio = min(lo) / lo[0]
    below = small_ratio < 1e-3
    never = all(v >= hi[0] for v in hi)
    quot = [boxpert_quotient(cfg, m, n, z)[0] for m, n in SCHEDULE for z in np.linspace(-40, 40, 81)]
    box_ok = all(0 < q < 1 for q in quot)
    ok = below and never and box_ok
    assert report(9, ok, f"alpha=0.2 ratio at n=60 {small_ratio:.3g} (target < 1e-3); "
                         f"alpha=0.3 never below start: {never}; boxpert in (0,1): {box_ok}")


@pytest.mark.slow
def test_criterion_10_superposition(report):
    p = HenonParams.conjugate(-9.9, 5e-5, 1.185)
    cfg = CertConfig()
    tr = strip_game(p, None, 50, cfg)
    reached = bool(tr.found and tr.hit_dist is not None and tr.hit_dist < 1e-6)
    h3 = check_H3(p, cfg.theta, cfg.depth, cfg)["H3i"].details
    widths = widths_obey(tr.unsplit_widths(), h3["c0_star"], h3["ell"])
    ok = reached and widths
    assert report(10, ok, f"reached W0s: {reached} (closest z {tr.min_z:.3f}); widths obey "
                          f"c0={h3['c0_star']:.5f}, l={h3['ell']}: {widths}")
