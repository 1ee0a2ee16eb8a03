"""Renormalization of the return map along the cycle.

For a pair (m, n) the box near Y~ is rescaled by

    Psi(x, y, z) = (1 + s x, sigma^-n + s^2 y, 1 + s z),   s = sigma^-n sigma_t^-m,

and the unfolding shifts are reparametrized so that the return map
F = Psi^-1 o f^(N2 + m + N1 + n) o Psi is close to the limit family

    G(x, y, z) = (xi x + a2 b2' y,
                  mu + b3 (xi/a3)^2 x^2 + b2' ^2 b2 y^2 + (xi/a3) b2' b4 x y,
                  c2 b2' y)

(b2' is the T1 coefficient beta_2) whenever gamma_1 a_3 lambda^n zeta_t^m
is close to xi.  F is computed by composing the orbit in mpmath; an
expanded polynomial form, built from the coefficients directly, serves as
an independent check when the higher-order terms vanish.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .model_cycle import (CycleConfig, compose_return_orbit, local_step,
                          transition_jacobian)


class InsufficientPrecision(ArithmeticError):
    """The working precision cannot resolve the rescaled coordinates."""


def default_precision(cfg: CycleConfig, m: int, n: int) -> int:
    """128 + ceil((m + n) log2(zeta_t / lambda_t)) bits."""
    e = cfg.eig
    ratio = max(e.zeta_t / e.lambda_t, e.sigma / e.lam, e.zeta_t / e.lam)
    return 128 + math.ceil((m + n) * math.log2(ratio))


def _needed_bits(cfg: CycleConfig, m: int, n: int) -> int:
    # y is stored as sigma^-n + s^2 y; resolving y to double precision needs
    # log2(sigma^-n / s^2) extra bits
    e = cfg.eig
    return 53 + math.ceil(n * math.log2(e.sigma) + 2 * m * math.log2(e.sigma_t))


@dataclass
class RenormData:
    """Scale factors and reparametrized shifts for one pair (m, n)."""

    m: int
    n: int
    mu_bar: object
    s: object
    s2: object
    sig_n: object
    mu_vec: tuple
    nu_vec: tuple
    precision: int

    @property
    def scale_factors(self) -> tuple:
        return (self.s, self.s2, self.sig_n)

    def psi(self, p):
        x, y, z = p
        return (1 + self.s * x, self.sig_n + self.s2 * y, 1 + self.s * z)

    def psi_inv(self, q):
        x, y, z = q
        return ((x - 1) / self.s, (y - self.sig_n) / self.s2, (z - 1) / self.s)


def renorm_data(cfg: CycleConfig, m: int, n: int, mu_bar=0.0,
                precision: int | None = None) -> RenormData:
    """Psi scale factors, mu_{m,n}(mu_bar) and nu_{m,n} at ``precision`` bits.

    mu = (-lt^m a1, s^2 mu_bar + sigma^-n - lt^m b1, -lt^m c1)
    nu = (-l^n alpha1 - z^n alpha3, st^-m - l^n beta1, zt^-m - l^n gamma1)
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    prec = precision or default_precision(cfg, m, n)
    if prec < _needed_bits(cfg, m, n):
        raise InsufficientPrecision(
            f"{prec} bits cannot resolve the rescaled box for (m, n) = ({m}, {n}); "
            f"increase precision to at least {_needed_bits(cfg, m, n)} bits")
    e, c = cfg.eig, cfg.coeffs
    M = mpmath.mpf
    with mpmath.workprec(prec):
        lt_m = M(e.lambda_t) ** m
        st_m = M(e.sigma_t) ** m
        zt_m = M(e.zeta_t) ** m
        l_n = M(e.lam) ** n
        z_n = M(e.zeta) ** n
        sig_n = 1 / M(e.sigma) ** n
        s = sig_n / st_m
        s2 = s * s
        mb = M(mu_bar)
        mu_vec = (-lt_m * c.a[0], s2 * mb + sig_n - lt_m * c.b[0], -lt_m * c.c[0])
        nu_vec = (-l_n * c.alpha[0] - z_n * c.alpha[2], 1 / st_m - l_n * c.beta[0],
                  1 / zt_m - l_n * c.gamma[0])
    return RenormData(m, n, mb, s, s2, sig_n, mu_vec, nu_vec, prec)


def return_map(cfg: CycleConfig, m: int, n: int, mu_bar, p_bar, precision: int | None = None,
               theta_n: int | None = None, check: bool = True, data: RenormData | None = None):
    """F_{m,n}(p_bar) by direct orbit composition at ``precision`` bits."""
    d = data if data is not None and data.mu_bar == mu_bar else renorm_data(cfg, m, n, mu_bar, precision)
    with mpmath.workprec(d.precision):
        p = d.psi(tuple(mpmath.mpf(v) for v in p_bar))
        q, _ = compose_return_orbit(cfg, (d.mu_vec, d.nu_vec), m, n, p, precision=d.precision,
                                    theta_n=theta_n, check=check)
        return d.psi_inv(q)


def return_trace(cfg: CycleConfig, m: int, n: int, mu_bar, p_bar, precision: int | None = None):
    """Stage points of the return orbit of Psi(p_bar)."""
    d = renorm_data(cfg, m, n, mu_bar, precision)
    with mpmath.workprec(d.precision):
        p = d.psi(tuple(mpmath.mpf(v) for v in p_bar))
        return compose_return_orbit(cfg, (d.mu_vec, d.nu_vec), m, n, p, precision=d.precision)[1]


def return_jacobian(cfg: CycleConfig, m: int, n: int, mu_bar, p_bar,
                    precision: int | None = None, data: RenormData | None = None):
    """Jacobian of F_{m,n} at p_bar by the chain rule over the orbit stages."""
    d = data if data is not None else renorm_data(cfg, m, n, mu_bar, precision)
    e = cfg.eig
    M = mpmath.mpf
    with mpmath.workprec(d.precision):
        p = d.psi(tuple(M(v) for v in p_bar))
        q, tr = compose_return_orbit(cfg, (d.mu_vec, d.nu_vec), m, n, p, precision=d.precision)
        J = mpmath.diag([d.s, d.s2, d.s])
        J = mpmath.diag([M(v) ** n for v in e.Q]) * J
        J = mpmath.matrix(transition_jacobian("T1", cfg, tr.point("Q"))) * J
        J = mpmath.diag([M(v) ** m for v in e.P]) * J
        J = mpmath.matrix(transition_jacobian("T2", cfg, tr.point("P"))) * J
        J = mpmath.diag([1 / d.s, 1 / d.s2, 1 / d.s]) * J
        return J


# expanded polynomial form -------------------------------------------------------------

@dataclass
class Quadratic:
    """const + lin . p + p^T quad p, with mpf entries."""

    const: object
    lin: list
    quad: list = field(default_factory=lambda: [[0] * 3 for _ in range(3)])

    @classmethod
    def affine(cls, const, lin):
        return cls(const, list(lin))

    def __add__(self, o: "Quadratic") -> "Quadratic":
        return Quadratic(self.const + o.const, [a + b for a, b in zip(self.lin, o.lin)],
                         [[a + b for a, b in zip(r, t)] for r, t in zip(self.quad, o.quad)])

    def scale(self, k) -> "Quadratic":
        return Quadratic(self.const * k, [a * k for a in self.lin],
                         [[a * k for a in r] for r in self.quad])

    def times(self, o: "Quadratic") -> "Quadratic":
        """Product of two affine forms."""
        return Quadratic(self.const * o.const,
                         [a * o.const + b * self.const for a, b in zip(self.lin, o.lin)],
                         [[a * b for b in o.lin] for a in self.lin])

    def __call__(self, p):
        out = self.const
        for i in range(3):
            out += self.lin[i] * p[i]
            for j in range(3):
                out += self.quad[i][j] * p[i] * p[j]
        return out

    def grad(self, p) -> list:
        return [self.lin[i] + sum((self.quad[i][j] + self.quad[j][i]) * p[j] for j in range(3))
                for i in range(3)]

    def hessian(self) -> list:
        return [[self.quad[i][j] + self.quad[j][i] for j in range(3)] for i in range(3)]


@dataclass
class ReturnPolynomial:
    """F_{m,n} as three quadratic polynomials in p_bar (zero higher terms)."""

    components: tuple
    data: RenormData

    def __call__(self, p_bar):
        with mpmath.workprec(self.data.precision):
            p = tuple(mpmath.mpf(v) for v in p_bar)
            return tuple(c(p) for c in self.components)

    def jacobian(self, p_bar):
        with mpmath.workprec(self.data.precision):
            p = tuple(mpmath.mpf(v) for v in p_bar)
            return mpmath.matrix([c.grad(p) for c in self.components])


def return_polynomial(cfg: CycleConfig, m: int, n: int, mu_bar=0.0,
                      precision: int | None = None) -> ReturnPolynomial:
    """Expand F_{m,n} symbolically from the transition coefficients."""
    if not cfg.higher.is_zero():
        raise ValueError("the expanded form requires zero higher-order terms")
    d = renorm_data(cfg, m, n, mu_bar, precision)
    e, c = cfg.eig, cfg.coeffs
    M = mpmath.mpf
    with mpmath.workprec(d.precision):
        l_n, sg_n, z_n = (M(v) ** n for v in e.Q)
        lt_m, st_m, zt_m = (M(v) ** m for v in e.P)
        # offsets from X after the Q stage: (l^n + l^n s x, sigma^n s^2 y, z^n + z^n s z)
        off = Quadratic.affine(0, [0, 0, 0])
        e1 = [Quadratic.affine(l_n, [l_n * d.s, 0, 0]),
              Quadratic.affine(0, [0, sg_n * d.s2, 0]),
              Quadratic.affine(z_n, [0, 0, z_n * d.s])]

        def lin(coef, shift):
            q = Quadratic.affine(shift, [0, 0, 0])
            for k, v in zip(coef, e1):
                q = q + v.scale(M(k))
            return q

        X1m1 = lin(c.alpha, d.nu_vec[0])
        u = lin(c.beta, d.nu_vec[1] - 1 / st_m)
        w = lin(c.gamma, d.nu_vec[2] - 1 / zt_m)
        # offsets from Y after the P stage
        ox = X1m1.scale(lt_m) + Quadratic.affine(lt_m, [0, 0, 0])
        oy = u.scale(st_m)
        oz = w.scale(zt_m)
        a, b, cc = [[M(v) for v in t] for t in (c.a, c.b, c.c)]
        xo = ox.scale(a[0]) + oy.scale(a[1]) + oz.scale(a[2]) + off
        xo.const += d.mu_vec[0]
        yo = (ox.scale(b[0]) + oy.times(oy).scale(b[1]) + oz.times(oz).scale(b[2])
              + oy.times(oz).scale(b[3]))
        yo.const += d.mu_vec[1] - d.sig_n
        zo = ox.scale(cc[0]) + oy.scale(cc[1]) + oz.scale(cc[2])
        zo.const += d.mu_vec[2]
        comps = (xo.scale(1 / d.s), yo.scale(1 / d.s2), zo.scale(1 / d.s))
    return ReturnPolynomial(comps, d)


def closed_form_return_map(cfg: CycleConfig, m: int, n: int, mu_bar, p_bar,
                           precision: int | None = None):
    """Evaluate the expanded polynomial form of F_{m,n}."""
    return return_polynomial(cfg, m, n, mu_bar, precision)(p_bar)


def xi_of_pair(cfg: CycleConfig, m: int, n: int) -> float:
    """gamma_1 a_3 lambda^n zeta_t^m, the neutral product of the pair."""
    e, c = cfg.eig, cfg.coeffs
    return math.exp(math.log(c.gamma[0] * c.a[2]) + n * math.log(e.lam) + m * math.log(e.zeta_t))


# limit family ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitResult:
    point: tuple
    kappa1: float
    kappa2: float


def _limit_coeffs(coeffs):
    a2, a3 = coeffs.a[1], coeffs.a[2]
    b2, b3, b4 = coeffs.b[1], coeffs.b[2], coeffs.b[3]
    c2, be2 = coeffs.c[1], coeffs.beta[1]
    for name, v in (("a2", a2), ("a3", a3), ("b2", b2), ("c2", c2), ("beta2", be2)):
        if v == 0:
            raise ZeroDivisionError(f"limit map needs {name} != 0")
    return a2, a3, b2, b3, b4, c2, be2


def kappas(coeffs, xi: float) -> tuple:
    """kappa1 = (xi a2/a3)^2 b3/b2 and kappa2 = xi a2 b4/(a3 b2)."""
    a2, a3, b2, b3, b4, _, _ = _limit_coeffs(coeffs)
    return (xi * a2 / a3) ** 2 * b3 / b2, xi * a2 * b4 / (a3 * b2)


def limit_map(coeffs, xi: float, mu_bar, p_bar) -> LimitResult:
    """The limit family G at p_bar together with (kappa1, kappa2)."""
    a2, a3, b2, b3, b4, c2, be2 = _limit_coeffs(coeffs)
    x, y, z = p_bar
    r = xi / a3
    pt = (xi * x + a2 * be2 * y,
          mu_bar + b3 * r * r * x * x + be2 * be2 * b2 * y * y + r * be2 * b4 * x * y,
          c2 * be2 * y)
    k1, k2 = kappas(coeffs, xi)
    return LimitResult(pt, k1, k2)


def limit_jacobian(coeffs, xi: float, p_bar) -> list:
    a2, a3, b2, b3, b4, c2, be2 = _limit_coeffs(coeffs)
    x, y, _ = p_bar
    r = xi / a3
    return [[xi, a2 * be2, 0],
            [2 * b3 * r * r * x + r * be2 * b4 * y, 2 * be2 * be2 * b2 * y + r * be2 * b4 * x, 0],
            [0, c2 * be2, 0]]


def theta_scales(coeffs) -> tuple:
    """Scales of the conjugacy to the normal form, for (x, y, z, mu)."""
    a2, _, b2, _, _, c2, be2 = _limit_coeffs(coeffs)
    return (be2 * b2 / a2, be2 * be2 * b2, be2 * b2 / c2, be2 * be2 * b2)


def normal_form(xi: float, kappa1: float, kappa2: float, mu, p) -> tuple:
    """(x, y, z) -> (xi x + y, mu + y^2 + kappa1 x^2 + kappa2 x y, y)."""
    x, y, _ = p
    return (xi * x + y, mu + y * y + kappa1 * x * x + kappa2 * x * y, y)


def conjugated_limit(coeffs, xi: float, mu_t, p_t) -> tuple:
    """Theta o G o Theta^-1, which equals :func:`normal_form`."""
    sc = theta_scales(coeffs)
    p = tuple(v / k for v, k in zip(p_t, sc[:3]))
    g = limit_map(coeffs, xi, mu_t / sc[3], p).point
    return tuple(v * k for v, k in zip(g, sc[:3]))


def fit_kappa(cfg: CycleConfig, m: int, n: int, points: int = 5,
              precision: int | None = None) -> tuple:
    """Least-squares quadratic fit of F's y-component, turned into (kappa1, kappa2).

    The y-component is fitted over a grid on [-1, 1]^3 at mu_bar = 0 by a
    full quadratic; kappa1 = c_xx a2^2/b2 and kappa2 = c_xy a2/(beta2 b2).
    """
    c = cfg.coeffs
    g = np.linspace(-1, 1, points)
    rows, rhs = [], []
    d = renorm_data(cfg, m, n, 0.0, precision)
    for x, y, z in itertools.product(g, g, g):
        val = return_map(cfg, m, n, 0.0, (x, y, z), data=d)[1]
        rows.append([1, x, y, z, x * x, y * y, z * z, x * y, x * z, y * z])
        rhs.append(float(val))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    cxx, cxy = coef[4], coef[7]
    return cxx * c.a[1] ** 2 / c.b[1], cxy * c.a[1] / (c.beta[1] * c.b[1])


# convergence ------------------------------------------------------------------------------

@dataclass
class GridSpec:
    """Grid on K = [-r, r]^3 and I = [-r_mu, r_mu]."""

    k_points: int = 9
    i_points: int = 9
    k_radius: float = 1.0
    i_radius: float = 1.0
    d2_points: int = 3
    d2_step: float = 0.01

    def k_grid(self, pts: int | None = None):
        g = np.linspace(-self.k_radius, self.k_radius, pts or self.k_points)
        return list(itertools.product(g, g, g))

    def i_grid(self, pts: int | None = None):
        return list(np.linspace(-self.i_radius, self.i_radius, pts or self.i_points))


@dataclass
class ConvergenceRow:
    m: int
    n: int
    err: float
    d0: float
    d1: float
    d2: float | None
    kappa1: float
    kappa2: float
    precision: int


@dataclass
class ConvergenceReport:
    rows: list
    xi: float
    grid: GridSpec

    def series(self, key: str) -> list:
        return [getattr(r, key) for r in self.rows]

    def decreasing(self, key: str = "d0") -> bool:
        s = self.series(key)
        return all(b < a for a, b in zip(s, s[1:]))

    def factor(self, key: str = "d0") -> float:
        s = self.series(key)
        return s[0] / s[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "err", "d0", "d1", "d2"])
        for r in self.rows:
            w.writerow([r.m, r.n, f"{r.err:.12g}", f"{r.d0:.12g}", f"{r.d1:.12g}",
                        "" if r.d2 is None else f"{r.d2:.12g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"xi": self.xi, "grid": asdict(self.grid),
                           "rows": [asdict(r) for r in self.rows]}, indent=2, sort_keys=True)


def _max_abs(vals) -> float:
    return max(float(abs(v)) for v in vals)


def _pair_mn(p):
    return (p.m, p.n) if hasattr(p, "m") else tuple(p)


def convergence_report(cfg: CycleConfig, schedule, xi: float, grid: GridSpec | None = None,
                       order: int = 1, precision: int | None = None) -> ConvergenceReport:
    """Distances between F_{m,n} and the limit family along ``schedule``.

    d0 = sup |F - G|, d1 = sup of Jacobian entry differences (chain rule for
    F, closed form for G), d2 = sup of second central differences of F - G
    on a coarser grid (order 2 only).
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    grid = grid or GridSpec()
    k1, k2 = kappas(cfg.coeffs, xi)
    rows = []
    for pair in schedule:
        m, n = _pair_mn(pair)
        d0 = d1 = 0.0
        d2 = None
        for mu in grid.i_grid():
            d = renorm_data(cfg, m, n, mu, precision)
            for p in grid.k_grid():
                f = return_map(cfg, m, n, mu, p, data=d)
                g = limit_map(cfg.coeffs, xi, mu, p).point
                d0 = max(d0, _max_abs(a - b for a, b in zip(f, g)))
                if order >= 1:
                    J = return_jacobian(cfg, m, n, mu, p, data=d)
                    Jg = limit_jacobian(cfg.coeffs, xi, p)
                    d1 = max(d1, _max_abs(J[i, j] - Jg[i][j] for i in range(3) for j in range(3)))
        if order == 2:
            d2 = _second_difference_distance(cfg, m, n, xi, grid, precision)
        rows.append(ConvergenceRow(m, n, abs(xi_of_pair(cfg, m, n) - xi), d0, d1, d2, k1, k2,
                                   renorm_data(cfg, m, n, 0.0, precision).precision))
    return ConvergenceReport(rows, xi, grid)


def _second_difference_distance(cfg, m, n, xi, grid, precision) -> float:
    h = grid.d2_step
    out = 0.0
    basis = np.eye(3)
    for mu in grid.i_grid(grid.d2_points):
        d = renorm_data(cfg, m, n, mu, precision)

        def diff(p):
            f = return_map(cfg, m, n, mu, p, data=d)
            g = limit_map(cfg.coeffs, xi, mu, p).point
            return [a - b for a, b in zip(f, g)]

        for p in grid.k_grid(grid.d2_points):
            p = np.array(p)
            for i in range(3):
                for j in range(i, 3):
                    ei, ej = basis[i] * h, basis[j] * h
                    vals = [diff(p + ei + ej), diff(p + ei - ej), diff(p - ei + ej), diff(p - ei - ej)]
                    sec = [(vals[0][k] - vals[1][k] - vals[2][k] + vals[3][k]) / (4 * h * h)
                           for k in range(3)]
                    out = max(out, _max_abs(sec))
    return out


def landau_ratios(cfg: CycleConfig, schedule, points=((0.5, 0.5, 0.5), (-0.5, 0.3, -0.2)),
                  mu_bar: float = 0.0) -> list:
    """Stage magnitudes divided by their predicted orders, per schedule pair.

    Returns dicts with x_n/lambda^n, z_n/zeta^n (after the Q stage),
    x_m/lambda_t^m (after the P stage) and (z_m - 1)/(sigma^-n sigma_t^-m).
    """
    e = cfg.eig
    out = []
    for pair in schedule:
        m, n = _pair_mn(pair)
        r = {"m": m, "n": n, "x_n": 0.0, "z_n": 0.0, "x_m": 0.0, "z_m": 0.0}
        d = renorm_data(cfg, m, n, mu_bar)
        with mpmath.workprec(d.precision):
            M = mpmath.mpf
            for p in points:
                tr = return_trace(cfg, m, n, mu_bar, p)
                q, pp = tr.point("Q"), tr.point("P")
                r["x_n"] = max(r["x_n"], float(abs(q[0]) / M(e.lam) ** n))
                r["z_n"] = max(r["z_n"], float(abs(q[2]) / M(e.zeta) ** n))
                r["x_m"] = max(r["x_m"], float(abs(pp[0]) / M(e.lambda_t) ** m))
                r["z_m"] = max(r["z_m"], float(abs(pp[2] - 1) / d.s))
        out.append(r)
    return out


def precision_consistency(cfg: CycleConfig, m: int, n: int, mu_bar, p_bar) -> float:
    """Number of agreeing decimal digits of F at the default and doubled precision."""
    p0 = default_precision(cfg, m, n)
    a = return_map(cfg, m, n, mu_bar, p_bar, precision=p0)
    b = return_map(cfg, m, n, mu_bar, p_bar, precision=2 * p0)
    with mpmath.workprec(2 * p0):
        diff = max(abs(x - y) for x, y in zip(a, b))
        scale = max(max(abs(y) for y in b), mpmath.mpf(1))
        if diff == 0:
            return math.inf
        return float(-mpmath.log10(diff / scale))
