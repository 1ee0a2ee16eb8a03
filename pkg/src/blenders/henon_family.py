"""Center-unstable Henon-like maps, their Jacobians and the fixed point P*.

Two forms are supported.  The standard form is

    G(x, y, z) = (xi*x + y, mu + y^2 + kappa*x^2 + eta*x*y, y)

and the conjugate form (used for all blender geometry) is

    G(x, y, z) = (y, mu + y^2 + kappa*z^2, xi*z + y),

obtained from the standard one by swapping x and z when eta = 0.  For
eta != 0 the swapped standard map is (y, mu + y^2 + kappa*z^2 + eta*y*z,
xi*z + y); :class:`BlenderMap` evaluates that map so both cases share one
certification pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom_core import IBox3, Interval, as_interval

FORMS = ("standard", "conjugate")


@dataclass(frozen=True)
class HenonParams:
    """Parameters of one map of the family.

    Attributes
    ----------
    xi, mu, kappa, eta : float
        Family parameters; ``eta`` must be 0 for the conjugate form.
    form : {"standard", "conjugate"}
        Which coordinate form ``eval_map`` uses.
    """

    xi: float
    mu: float
    kappa: float
    eta: float = 0.0
    form: str = "conjugate"

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")
        for name in ("xi", "mu", "kappa", "eta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"parameter {name} is not finite")
        if self.form == "conjugate" and self.eta != 0.0:
            raise ValueError("conjugate form requires eta = 0")

    @classmethod
    def conjugate(cls, mu: float, kappa: float, xi: float) -> "HenonParams":
        return cls(xi=xi, mu=mu, kappa=kappa, eta=0.0, form="conjugate")

    def as_dict(self) -> dict:
        return {"xi": self.xi, "mu": self.mu, "kappa": self.kappa,
                "eta": self.eta, "form": self.form}


@dataclass(frozen=True)
class BlenderBoxSpec:
    """Parameter box O, the eta half-width and the phase box Delta."""

    mu: tuple = (-10.0, -9.0)
    kappa: tuple = (0.0, 1e-4)
    xi: tuple = (1.18, 1.19)
    eta_eps: float = 1e-3
    delta: IBox3 = field(default_factory=lambda: IBox3.from_bounds((-4, 4), (-4, 4), (-40, 0)))

    def contains(self, params: HenonParams) -> bool:
        """Membership of (mu, kappa, xi) in the open box O and |eta| < eps."""
        return (self.mu[0] < params.mu < self.mu[1]
                and self.kappa[0] < params.kappa < self.kappa[1]
                and self.xi[0] < params.xi < self.xi[1]
                and abs(params.eta) < self.eta_eps)


DEFAULT_BOX = BlenderBoxSpec()


def _is_box(p) -> bool:
    return isinstance(p, IBox3)


def eval_map(params: HenonParams, p):
    """Image of a point (array-like, leading axis of length 3) or an IBox3.

    Points are evaluated in floating point with the displayed formula; an
    ``IBox3`` yields an outward-rounded enclosure of the image set.
    """
    if _is_box(p):
        return _eval_box(params, p)
    x, y, z = (np.asarray(c, dtype=float) for c in p)
    if params.form == "conjugate":
        return np.array([y, params.mu + y * y + params.kappa * z * z, params.xi * z + y])
    return np.array([params.xi * x + y,
                     params.mu + y * y + params.kappa * x * x + params.eta * x * y,
                     y])


def _eval_box(params: HenonParams, b: IBox3) -> IBox3:
    x, y, z = b
    if params.form == "conjugate":
        return IBox3(y, y.sqr() + z.sqr() * params.kappa + params.mu, z * params.xi + y)
    return IBox3(x * params.xi + y,
                 y.sqr() + x.sqr() * params.kappa + (x * y) * params.eta + params.mu,
                 y)


def eval_jacobian(params: HenonParams, p):
    """Jacobian matrix at a point (3x3 array) or over an IBox3 (interval rows)."""
    if _is_box(p):
        x, y, z = p
        zero, one = Interval(0.0), Interval(1.0)
        if params.form == "conjugate":
            return ((zero, one, zero),
                    (zero, y * 2.0, z * (2.0 * params.kappa)),
                    (zero, one, Interval(params.xi)))
        return ((Interval(params.xi), one, zero),
                (x * (2.0 * params.kappa) + y * params.eta,
                 y * 2.0 + x * params.eta, zero),
                (zero, one, zero))
    x, y, z = (float(c) for c in p)
    if params.form == "conjugate":
        return np.array([[0.0, 1.0, 0.0],
                         [0.0, 2 * y, 2 * params.kappa * z],
                         [0.0, 1.0, params.xi]])
    return np.array([[params.xi, 1.0, 0.0],
                     [2 * params.kappa * x + params.eta * y, 2 * y + params.eta * x, 0.0],
                     [0.0, 1.0, 0.0]])


# coordinate changes --------------------------------------------------------

@dataclass(frozen=True)
class ThetaCoeffs:
    """Coefficients entering the scaling conjugacy of the limit map."""

    a2: float = 1.0
    b2: float = 1.0
    c2: float = 1.0
    beta2: float = 1.0

    @classmethod
    def from_transition(cls, tc) -> "ThetaCoeffs":
        return cls(a2=tc.a[1], b2=tc.b[1], c2=tc.c[1], beta2=tc.beta[1])

    def scales(self) -> tuple:
        for name in ("a2", "b2", "c2", "beta2"):
            if getattr(self, name) == 0:
                raise ZeroDivisionError(f"conjugacy coefficient {name} is zero")
        b2, be = self.b2, self.beta2
        return (be * b2 / self.a2, be * be * b2, be * b2 / self.c2, be * be * b2)


def apply_conjugacy(name: str, coeffs, p, mu: float | None = None, inverse: bool = False):
    """Apply ``theta_tilde`` (swap x and z) or ``theta`` (diagonal scaling).

    ``theta`` maps bar coordinates to tilde coordinates,
    (x, y, z, mu) -> (beta2 b2/a2 x, beta2^2 b2 y, beta2 b2/c2 z, beta2^2 b2 mu).
    When ``mu`` is given the transformed parameter is returned as well.
    """
    p = np.asarray(p, dtype=float)
    if name == "theta_tilde":
        out = np.array([p[2], p[1], p[0]])
        return (out, mu) if mu is not None else out
    if name != "theta":
        raise ValueError(f"unknown conjugacy {name!r}")
    if coeffs is None:
        coeffs = ThetaCoeffs()
    if not isinstance(coeffs, ThetaCoeffs):
        coeffs = ThetaCoeffs.from_transition(coeffs)
    sx, sy, sz, sm = coeffs.scales()
    if inverse:
        out = np.array([p[0] / sx, p[1] / sy, p[2] / sz])
        mu_out = None if mu is None else mu / sm
    else:
        out = np.array([p[0] * sx, p[1] * sy, p[2] * sz])
        mu_out = None if mu is None else mu * sm
    return (out, mu_out) if mu is not None else out


# fixed point -----------------------------------------------------------------

class NoBlenderFixedPoint(ValueError):
    """Raised when the fixed-point quadratic has no root in (2.4, 3.8)."""


@dataclass(frozen=True)
class FixedPointEnclosure:
    """Validated enclosure of P* in the blender (conjugate) coordinates.

    In these coordinates x* = y* and z* = -y*/(xi - 1).
    """

    x: Interval
    y: Interval
    z: Interval

    @property
    def point(self) -> np.ndarray:
        return np.array([self.x.mid, self.y.mid, self.z.mid])

    @property
    def width(self) -> float:
        return float(max(self.y.hi - self.y.lo, self.z.hi - self.z.lo))


Y_RANGE = (2.4, 3.8)


def _quad_coeff(params: HenonParams) -> Interval:
    # leading coefficient of a*y^2 - y + mu = 0 after eliminating z = -y/(xi-1)
    d = Interval(params.xi) - 1.0
    if d.contains_zero():
        raise NoBlenderFixedPoint("xi = 1: the fixed point is not isolated")
    inv = Interval(1.0) / d
    return inv.sqr() * params.kappa - inv * params.eta + 1.0


def fixed_point_Pstar(params: HenonParams, y_range=Y_RANGE) -> FixedPointEnclosure:
    """Enclose the fixed point with y* in ``y_range``.

    Float bisection isolates the root of a*y^2 - y + mu, then interval Newton
    steps validate and tighten it.  Works for both forms; the enclosure is in
    the conjugate coordinates.
    """
    a = _quad_coeff(params)
    am = float(a.mid)

    def g(y):
        return am * y * y - y + params.mu

    lo, hi = y_range
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise NoBlenderFixedPoint(
            f"no blender fixed point with y in {y_range} for {params.as_dict()}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if (g(mid) > 0) == (ghi > 0):
            hi, ghi = mid, g(mid)
        else:
            lo, glo = mid, g(mid)
    y0 = 0.5 * (lo + hi)
    rad = 1e-12 * max(1.0, abs(y0))
    Y = Interval(y0 - rad, y0 + rad)
    mu = Interval(params.mu)
    validated = False
    for _ in range(8):
        m = Interval(Y.mid)
        fm = a * m.sqr() - m + mu
        dfY = a * Y * 2.0 - 1.0
        N = m - fm / dfY
        if Y.interior_contains(N) or Y.contains(N):
            validated = True
            if N == Y:
                break
            Y = N
        else:
            newY = Interval.hull(Y, N)
            Y = Interval(newY.lo - rad, newY.hi + rad)
    if not validated or not (y_range[0] < Y.lo and Y.hi < y_range[1]):
        raise NoBlenderFixedPoint(
            f"interval Newton failed to validate the fixed point for {params.as_dict()}")
    Z = -Y / (Interval(params.xi) - 1.0)
    return FixedPointEnclosure(x=Y, y=Y, z=Z)


# map used by certification ---------------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    """C^1-size bound of an unspecified perturbation of the map.

    Certification inflates every image coordinate by ``d0`` and every
    Jacobian entry by ``d1``, covering all maps within these bounds.
    """

    d0: float = 0.0
    d1: float = 0.0


class BlenderMap:
    """The map in blender coordinates, (y, mu + y^2 + kappa z^2 + eta y z, xi z + y).

    For a conjugate-form ``HenonParams`` this is the map itself; for the
    standard form it is the map conjugated by the x/z swap.
    """

    def __init__(self, params: HenonParams, perturbation: Perturbation | None = None):
        self.params = params
        self.pert = perturbation or Perturbation()

    def __call__(self, p):
        x, y, z = (np.asarray(c, dtype=float) for c in p)
        q = self.params
        return np.array([y, q.mu + y * y + q.kappa * z * z + q.eta * y * z, q.xi * z + y])

    def jac(self, p) -> np.ndarray:
        x, y, z = (float(c) for c in p)
        q = self.params
        return np.array([[0.0, 1.0, 0.0],
                         [0.0, 2 * y + q.eta * z, 2 * q.kappa * z + q.eta * y],
                         [0.0, 1.0, q.xi]])

    def box(self, b: IBox3) -> IBox3:
        q = self.params
        x, y, z = b
        Y = y.sqr() + z.sqr() * q.kappa + q.mu
        if q.eta != 0:
            Y = Y + (y * z) * q.eta
        out = IBox3(y, Y, z * q.xi + y)
        return _inflate_box(out, self.pert.d0)

    def jac_box(self, b: IBox3):
        q = self.params
        x, y, z = b
        zero, one = Interval(0.0), Interval(1.0)
        r1 = y * 2.0
        r2 = z * (2.0 * q.kappa)
        if q.eta != 0:
            r1 = r1 + z * q.eta
            r2 = r2 + y * q.eta
        M = ((zero, one, zero), (zero, r1, r2), (zero, one, Interval(q.xi)))
        d1 = self.pert.d1
        if d1 > 0:
            M = tuple(tuple(e + Interval(-d1, d1) for e in row) for row in M)
        return M

    def fixed_point(self) -> FixedPointEnclosure:
        return fixed_point_Pstar(self.params)


def _inflate_box(b: IBox3, d: float) -> IBox3:
    if d <= 0:
        return b
    e = Interval(-d, d)
    return IBox3(b.x + e, b.y + e, b.z + e)
