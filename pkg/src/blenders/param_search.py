"""Eigenvalue region of the cycle and the search for neutral pairs (m, n).

The region is described in the reduced coordinates

    S = log(sigma_t) / log(zeta_t),   T = log(zeta) / log(lambda),

where the first two product conditions become T > 1 - S and T > (S + 1)/2.
A neutral pair is a pair of iterate counts with c lambda^n zeta_t^m close to
a prescribed xi; such pairs make the renormalized return maps converge.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .model_cycle import EigenTuple, condition2_products

ST_AREA = Fraction(1, 6)


@dataclass(frozen=True)
class STPoint:
    S: float
    T: float

    @classmethod
    def of(cls, eig: EigenTuple) -> "STPoint":
        return cls(math.log(eig.sigma_t) / math.log(eig.zeta_t),
                   math.log(eig.zeta) / math.log(eig.lam))

    def inside(self) -> bool:
        return in_region_ST(self.S, self.T)


@dataclass
class RegionCheck:
    """Membership in the eigenvalue region with per-condition log margins."""

    ok: bool
    products: dict
    margins: dict


def check_region_P(eig: EigenTuple) -> RegionCheck:
    """All three products in (0, 1); margins are -log(product)."""
    pr = condition2_products(eig)
    return RegionCheck(all(v["ok"] for v in pr.values()),
                       {k: v["value"] for k, v in pr.items()},
                       {k: -v["log"] for k, v in pr.items()})


def lr_bounds(lam: float, zeta: float, sigma_t: float, zeta_t: float) -> tuple:
    """Bounds with (L < log sigma < R) equivalent to the first two conditions."""
    if not (0 < lam < zeta < 1 < sigma_t < zeta_t):
        raise ValueError("need 0 < lambda < zeta < 1 < sigma_t < zeta_t")
    S = math.log(sigma_t) / math.log(zeta_t)
    T = math.log(zeta) / math.log(lam)
    ll = math.log(lam)
    R = ll * (S + 1 - 2 * T)
    L = -ll * (1 - 3 * S)
    return L, R


def in_region_ST(S, T):
    """Vectorized membership of (S, T) in the reduced region."""
    S = np.asarray(S)
    T = np.asarray(T)
    return (S > 0) & (S < 1) & (T > 0) & (T < 1) & (T > 1 - S) & (T > 0.5 * (S + 1))


@dataclass
class STSample:
    """Monte Carlo or grid classification of the unit square."""

    area: float
    stderr: float
    n: int
    T_range: tuple
    inv_T_range: tuple
    S_range: tuple


def sample_ST(samples: int = 1_000_000, seed: int = 0, grid: int | None = None) -> STSample:
    """Estimate the region's area by uniform sampling (or a midpoint grid)."""
    if grid is not None:
        g = (np.arange(grid) + 0.5) / grid
        S, T = np.meshgrid(g, g, indexing="ij")
        S, T = S.ravel(), T.ravel()
    else:
        rng = np.random.default_rng(seed)
        S, T = rng.random(samples), rng.random(samples)
    inside = in_region_ST(S, T)
    n = len(S)
    p = float(inside.mean())
    Ti, Si = T[inside], S[inside]
    return STSample(area=p, stderr=math.sqrt(p * (1 - p) / n), n=n,
                    T_range=(float(Ti.min()), float(Ti.max())),
                    inv_T_range=(float((1 / Ti).min()), float((1 / Ti).max())),
                    S_range=(float(Si.min()), float(Si.max())))


def tuple_from_ST(S: float, T: float, sigma_fraction: float = 0.5,
                  lambda_t_fraction: float = 0.5, lambda_anchor: float = 0.1,
                  zeta_t: float = math.e, sigma: float | None = None,
                  lambda_t: float | None = None) -> EigenTuple:
    """Build an eigenvalue tuple from a point of the reduced region.

    lambda = lambda_anchor, zeta = lambda^T, sigma_t = zeta_t^S.  log sigma is
    placed at ``sigma_fraction`` of the admissible interval (max(0, L), R),
    and lambda_t at ``lambda_t_fraction`` times its largest admissible value.
    Explicit ``sigma`` or ``lambda_t`` override the fractions.
    """
    if not bool(in_region_ST(S, T)):
        raise ValueError(f"(S, T) = ({S}, {T}) is outside the region")
    if not 0 < lambda_anchor < 1:
        raise ValueError("lambda_anchor must lie in (0, 1)")
    lam = lambda_anchor
    zeta = lam ** T
    sigma_t = zeta_t ** S
    L, R = lr_bounds(lam, zeta, sigma_t, zeta_t)
    lo = max(0.0, L)
    if sigma is None:
        if not 0 < sigma_fraction < 1:
            raise ValueError("sigma_fraction must lie in (0, 1)")
        sigma = math.exp(lo + sigma_fraction * (R - lo))
    k = math.log(1 / lam) / math.log(zeta_t)
    lt_max = math.exp(-math.log(sigma) / k - math.log(sigma_t))
    if lambda_t is None:
        if not 0 < lambda_t_fraction < 1:
            raise ValueError("lambda_t_fraction must lie in (0, 1)")
        lambda_t = lambda_t_fraction * min(lt_max, 1.0)
    return EigenTuple(lambda_t, sigma_t, zeta_t, lam, zeta, sigma)


# neutral pairs ----------------------------------------------------------------------

@dataclass(frozen=True)
class NeutralPair:
    m: int
    n: int
    value: float
    err: float
    drift: float


@dataclass
class NeutralSearch:
    pairs: list
    note: str = ""
    best_err: float = math.inf
    k: float = float("nan")
    k_tilde: float = float("nan")
    params: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return pairs_to_csv(self.pairs)


def pairs_to_csv(pairs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "value", "err", "drift"])
    for p in pairs:
        w.writerow([p.n, p.m, f"{p.value:.15g}", f"{p.err:.15g}", f"{p.drift:.15g}"])
    return buf.getvalue()


def _exponents(lam: float, zeta_t: float, c: float, xi: float) -> tuple:
    k = math.log(1 / lam) / math.log(zeta_t)
    kt = math.log(c / xi) / math.log(zeta_t)
    return k, kt


def _candidates(lam, zeta_t, c, xi, N0, Nmax):
    k, kt = _exponents(lam, zeta_t, c, xi)
    n = np.arange(N0 + 1, Nmax + 1, dtype=np.int64)
    m = np.rint(n * k - kt).astype(np.int64)
    logv = math.log(c) + n * math.log(lam) + m * math.log(zeta_t)
    value = np.exp(logv)
    err = np.abs(value - xi)
    drift = np.abs(m - n * k + kt)
    return n, m, value, err, drift


def _likely_rational(x: float, max_den: int = 1000, tol: float = 1e-12) -> bool:
    f = Fraction(x).limit_denominator(max_den)
    return abs(float(f) - x) < tol


def find_neutral_pairs(lam: float, zeta_t: float, c: float, xi: float, eps: float,
                       N0: int = 0, Nmax: int = 50, method: str = "vectorized") -> NeutralSearch:
    """Pairs with |c lambda^n zeta_t^m - xi| < eps and drift |m - n k + k_t| < 1.

    For each n in (N0, Nmax] the only candidate is the nearest lattice point
    m = round(n k - k_t), where c lambda^n zeta_t^m = xi exactly at
    m = n k - k_t, with k = log(1/lambda)/log(zeta_t) and
    k_t = log(c/xi)/log(zeta_t).  The drift is |m - n k + k_t|, the distance
    to that exact solution.  Both
    methods enumerate these candidates; ``"loop"`` is the plain reference
    loop and ``"vectorized"`` the numpy version.  Pairs are sorted by err.
    """
    if not (0 < lam < 1 < zeta_t):
        raise ValueError("need 0 < lambda < 1 < zeta_t")
    if not (c > 0 and xi > 0):
        raise ValueError("c and xi must be positive")
    if not (0 < eps < xi):
        raise ValueError("need 0 < eps < xi")
    if N0 < 0 or Nmax < N0:
        raise ValueError("need 0 <= N0 <= Nmax")
    k, kt = _exponents(lam, zeta_t, c, xi)
    pairs = []
    best = math.inf
    if method == "loop":
        for n in range(N0 + 1, Nmax + 1):
            m = round(n * k - kt)
            v = math.exp(math.log(c) + n * math.log(lam) + m * math.log(zeta_t))
            e = abs(v - xi)
            d = abs(m - n * k + kt)
            best = min(best, e)
            if e < eps and d < 1:
                pairs.append(NeutralPair(int(m), int(n), v, e, d))
    elif method == "vectorized":
        n, m, v, e, d = _candidates(lam, zeta_t, c, xi, N0, Nmax)
        if len(e):
            best = float(e.min())
        sel = np.flatnonzero((e < eps) & (d < 1))
        pairs = [NeutralPair(int(m[i]), int(n[i]), float(v[i]), float(e[i]), float(d[i]))
                 for i in sel]
    else:
        raise ValueError("method must be 'loop' or 'vectorized'")
    pairs.sort(key=lambda p: (p.err, p.n))
    note = ""
    if not pairs:
        if _likely_rational(math.log(lam) / math.log(zeta_t)):
            note = (f"possible rational dependence of log(lambda) and log(zeta_t); "
                    f"error floor {best:.6g} exceeds eps")
        else:
            note = f"no pair within eps up to Nmax; best error {best:.6g}"
    return NeutralSearch(pairs, note, best, k, kt,
                         {"lambda": lam, "zeta_t": zeta_t, "c": c, "xi": xi, "eps": eps,
                          "N0": N0, "Nmax": Nmax})


def verify_pair(pair: NeutralPair, lam: float, zeta_t: float, c: float, xi: float,
                eps: float, prec: int = 256) -> bool:
    """Recheck both defining inequalities of a pair at ``prec`` bits."""
    with mpmath.workprec(prec):
        L, Z, C, X = (mpmath.mpf(v) for v in (lam, zeta_t, c, xi))
        v = C * L ** pair.n * Z ** pair.m
        k = mpmath.log(1 / L) / mpmath.log(Z)
        kt = mpmath.log(C / X) / mpmath.log(Z)
        return bool(abs(v - X) < eps and abs(pair.m - pair.n * k + kt) < 1)


def record_pairs(lam: float, zeta_t: float, c: float, xi: float, Nmax: int,
                 N0: int = 0) -> list:
    """Pairs whose error beats every pair with smaller n (running minima)."""
    n, m, v, e, d = _candidates(lam, zeta_t, c, xi, N0, Nmax)
    out, best = [], math.inf
    for i in range(len(n)):
        if e[i] < best:
            best = float(e[i])
            out.append(NeutralPair(int(m[i]), int(n[i]), float(v[i]), best, float(d[i])))
    return out


def neutral_schedule(lam: float, zeta_t: float, c: float, xi: float, Nmax: int = 1000,
                     count: int = 4) -> list:
    """The last ``count`` record pairs up to Nmax, in increasing n.

    Their errors decrease strictly, which is what makes the renormalized
    maps approach the limit family along the schedule.
    """
    rec = record_pairs(lam, zeta_t, c, xi, Nmax)
    return rec[-count:]


def density_curve(lam: float, zeta_t: float, c: float, xi: float, nmax_list) -> list:
    """Best achievable error for each Nmax; decreasing when logs are independent."""
    top = max(nmax_list)
    _, _, _, e, _ = _candidates(lam, zeta_t, c, xi, 0, top)
    run = np.minimum.accumulate(e)
    return [(int(N), float(run[N - 1])) for N in nmax_list]
