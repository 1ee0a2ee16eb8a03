"""Connecting the blender to the saddle Q by a local perturbation.

The perturbation theta_n pushes a sub-arc of the local unstable manifold of
Q near X off the y-axis to x = lambda^n.  Its image under the transitions
then shadows the image of the segment l_hat = Phi_{m,n}({0} x (-4, 4) x {0})
that bounds the renormalized blender box, with a C^1 gap of order
lambda_t^m zeta^n sigma_t^2m sigma^2n.  This module builds both segments,
measures the gap, estimates Hoelder constants of the perturbation and checks
that the perturbation misses the renormalized box.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .henon_family import DEFAULT_BOX
from .model_cycle import (SMALL_INNER, SMALL_OUTER, CycleConfig, bump6_dx,
                          compose_return_orbit, theta_n_apply)
from .renorm import RenormData, renorm_data, theta_scales


# coordinates -----------------------------------------------------------------------------

def phi_mn(cfg: CycleConfig, m: int, n: int, p, data: RenormData | None = None):
    """Blender-box coordinates to the Q-chart: Psi o Theta^-1 o swap(x, z)."""
    d = data or renorm_data(cfg, m, n)
    sc = theta_scales(cfg.coeffs)
    with mpmath.workprec(d.precision):
        x, y, z = (mpmath.mpf(v) for v in p)
        bar = (z / sc[0], y / sc[1], x / sc[2])
        return d.psi(bar)


def phi_mn_inv(cfg: CycleConfig, m: int, n: int, q, data: RenormData | None = None):
    """Inverse of :func:`phi_mn`."""
    d = data or renorm_data(cfg, m, n)
    sc = theta_scales(cfg.coeffs)
    with mpmath.workprec(d.precision):
        bx, by, bz = d.psi_inv(tuple(mpmath.mpf(v) for v in q))
        return (bz * sc[2], by * sc[1], bx * sc[0])


# segments ----------------------------------------------------------------------------------

@dataclass
class SegmentSample:
    """Points of a segment with their parameters."""

    which: str
    m: int
    n: int
    t: list
    points: list


def _ybar_of_t(cfg: CycleConfig, t):
    return t / theta_scales(cfg.coeffs)[1]


def segment_ell(cfg: CycleConfig, m: int, n: int, ts, theta: bool = True,
                data: RenormData | None = None) -> SegmentSample:
    """The bumped arc of the local unstable manifold of Q near X.

    Points of the y-axis (0, 1 + sigma^-n sigma_t^-2m ybar, 0), pushed by
    theta_n when ``theta`` is set, which puts them at x = lambda^n.  The
    parameter t is matched to l_hat through ybar = t / (beta2^2 b2).
    """
    d = data or renorm_data(cfg, m, n)
    pts = []
    with mpmath.workprec(d.precision):
        M = mpmath.mpf
        k = d.s2 * M(cfg.eig.sigma) ** n
        for t in ts:
            p = (M(0), 1 + k * _ybar_of_t(cfg, M(t)), M(0))
            pts.append(theta_n_apply(cfg, n, p) if theta else p)
    return SegmentSample("ell" if theta else "ell_unbumped", m, n, list(ts), pts)


def segment_ell_hat(cfg: CycleConfig, m: int, n: int, ts,
                    data: RenormData | None = None) -> SegmentSample:
    """Phi_{m,n}(0, t, 0) for the given parameters."""
    d = data or renorm_data(cfg, m, n)
    return SegmentSample("ell_hat", m, n, list(ts),
                         [phi_mn(cfg, m, n, (0, t, 0), data=d) for t in ts])


@dataclass
class SegmentComparison:
    """Matched images of l and l_hat in Psi coordinates.

    Distances are mpf values: along a long schedule they fall far below
    the double-precision range.
    """

    m: int
    n: int
    t: np.ndarray
    img_ell: list
    img_hat: list
    c0: object
    c1_diff: object
    bound: object
    stage_gap: float
    theta: bool

    @property
    def c1(self):
        return max(self.c0, self.c1_diff)

    @property
    def ratio(self) -> float:
        return float(self.c1 / self.bound)

    @property
    def log10_c1(self) -> float:
        return float(mpmath.log10(self.c1)) if self.c1 > 0 else -math.inf

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "ell_x", "ell_y", "ell_z", "hat_x", "hat_y", "hat_z", "gap"])
        for t, a, b in zip(self.t, self.img_ell, self.img_hat):
            gap = max(abs(u - v) for u, v in zip(a, b))
            w.writerow([f"{t:.12g}"] + [mpmath.nstr(v, 15) for v in a]
                       + [mpmath.nstr(v, 15) for v in b] + [mpmath.nstr(gap, 6)])
        return buf.getvalue()


def gap_bound(cfg: CycleConfig, m: int, n: int):
    """lambda_t^m zeta^n sigma_t^2m sigma^2n as an mpf."""
    e = cfg.eig
    M = mpmath.mpf
    return (M(e.lambda_t) * M(e.sigma_t) ** 2) ** m * (M(e.zeta) * M(e.sigma) ** 2) ** n


def compare_segment_images(cfg: CycleConfig, m: int, n: int, points: int = 33,
                           mu_bar: float = 0.0, theta: bool = True) -> SegmentComparison:
    """C^1 distance between the images of l and of g^n(l_hat).

    l is mapped by T1, m P-steps and T2; l_hat by n Q-steps first.  Both
    images are read in Psi_{m,n} coordinates and matched by parameter.  The
    C^1 part is the sup of first differences over the parameter grid.

    ``stage_gap`` is the sup distance of the two orbits right before T2,
    which stays of order gamma_1 lambda^n zeta_t^m when ``theta`` is off.
    With ``theta`` off the transition-domain checks are skipped for l,
    since its orbit leaves the domain exactly because of that gap.
    """
    d = renorm_data(cfg, m, n, mu_bar)
    ts = np.linspace(-4, 4, points + 2)[1:-1]
    ell = segment_ell(cfg, m, n, ts, theta=theta, data=d)
    hat = segment_ell_hat(cfg, m, n, ts, data=d)
    shifts = (d.mu_vec, d.nu_vec)
    ie, ih, stage = [], [], 0.0
    with mpmath.workprec(d.precision):
        for pe, ph in zip(ell.points, hat.points):
            qe, tre = compose_return_orbit(cfg, shifts, m, 0, pe, precision=d.precision,
                                           check=theta)
            qh, trh = compose_return_orbit(cfg, shifts, m, n, ph, precision=d.precision,
                                           theta_n=n)
            ie.append(d.psi_inv(qe))
            ih.append(d.psi_inv(qh))
            stage = max(stage, float(max(abs(a - b) for a, b in
                                         zip(tre.point("P"), trh.point("P")))))
        diff = [[a - b for a, b in zip(u, v)] for u, v in zip(ie, ih)]
        c0 = max(abs(v) for row in diff for v in row)
        dt = mpmath.mpf(ts[1] - ts[0]) if len(ts) > 1 else mpmath.mpf(1)
        c1 = mpmath.mpf(0)
        for r0, r1 in zip(diff, diff[1:]):
            c1 = max(c1, max(abs(b - a) for a, b in zip(r0, r1)) / dt)
        bound = gap_bound(cfg, m, n)
    return SegmentComparison(m, n, ts, ie, ih, c0, c1, bound, stage, theta)


# perturbation size ------------------------------------------------------------------------

@dataclass
class HolderReport:
    n: int
    alpha: float
    estimate: float
    predicted_factor: float
    threshold: float

    @property
    def below_threshold(self) -> bool:
        return self.alpha < self.threshold


def holder_threshold(cfg: CycleConfig) -> float:
    """alpha* = log(lambda)/log(zeta) - 1; the perturbation is small in C^(1+alpha) below it."""
    return math.log(cfg.eig.lam) / math.log(cfg.eig.zeta) - 1


def bn_x(cfg: CycleConfig, n: int, p) -> float:
    """x-derivative of B_n: (lambda/zeta)^n b'(x/zeta^n) b(y/zeta^n) b(z/zeta^n)."""
    ze = cfg.eig.zeta ** n
    return (cfg.eig.lam / cfg.eig.zeta) ** n * bump6_dx((p[0] / ze, p[1] / ze, p[2] / ze), cfg.bump)


def holder_estimate(cfg: CycleConfig, n: int, alpha: float, samples: int = 2000,
                    seed: int = 0) -> HolderReport:
    """Sampled alpha-Hoelder quotient of (B_n)_x.

    Base points are drawn with the x coordinate in the ramp of the profile
    (where b' varies) and the displacement at scales zeta^n {1, 1/4, 1/16}.
    The same draw is used for every n, so estimates at different n are
    directly comparable.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    ze = cfg.eig.zeta ** n
    scales = (1.0, 0.25, 1.0 / 16)
    best = 0.0
    for i in range(samples):
        qx = rng.uniform(SMALL_INNER, SMALL_OUTER) * rng.choice((-1.0, 1.0))
        q = np.array([qx, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)])
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        r = scales[i % 3] * rng.uniform(0.01, 1.0)
        p, dp = q * ze, u * r * ze
        num = abs(bn_x(cfg, n, p + dp) - bn_x(cfg, n, p))
        best = max(best, num / np.linalg.norm(dp) ** alpha)
    pred = (cfg.eig.lam / cfg.eig.zeta ** (1 + alpha)) ** n
    return HolderReport(n, alpha, float(best), pred, holder_threshold(cfg))


def holder_series(cfg: CycleConfig, alpha: float, ns, samples: int = 2000, seed: int = 0) -> list:
    return [holder_estimate(cfg, n, alpha, samples, seed) for n in ns]


def boxpert_quotient(cfg: CycleConfig, m: int, n: int, z: float) -> tuple:
    """(zeta^n / 2) over the z coordinate of the n-th iterate of a box point.

    Equals 1 / (2 (sigma^-n sigma_t^-m z + 1)); a value in (0, 1) means the
    iterate lies outside the support of theta_n.
    """
    e = cfg.eig
    s = math.exp(-n * math.log(e.sigma) - m * math.log(e.sigma_t))
    den = 2 * (s * z + 1)
    if den <= 0:
        raise ValueError(f"box too large for (m, n) = ({m}, {n}): s z + 1 <= 0")
    q = 1 / den
    return q, 0 < q < 1


def theta_noninterference(cfg: CycleConfig, m: int, n: int, samples: int = 20,
                          seed: int = 0, box=None) -> bool:
    """Whether theta_n leaves the return orbit of Phi_{m,n}(Delta) bitwise unchanged."""
    box = box or DEFAULT_BOX.delta
    rng = np.random.default_rng(seed)
    d = renorm_data(cfg, m, n)
    with mpmath.workprec(d.precision):
        for _ in range(samples):
            p = [rng.uniform(float(iv.lo), float(iv.hi)) for iv in box]
            q = phi_mn(cfg, m, n, p, data=d)
            a, _ = compose_return_orbit(cfg, (d.mu_vec, d.nu_vec), m, n, q, precision=d.precision)
            b, _ = compose_return_orbit(cfg, (d.mu_vec, d.nu_vec), m, n, q, precision=d.precision,
                                        theta_n=n)
            if a != b:
                return False
    return True
