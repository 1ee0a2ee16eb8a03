"""Chart-wise model of a diffeomorphism with a non-transverse cycle.

The dynamics is described in two linearizing charts, at a saddle P (index
2, eigenvalues lambda_t < 1 < sigma_t < zeta_t) and at a saddle Q (index 1,
eigenvalues lambda < zeta < 1 < sigma), glued by two transitions:

* ``T1`` from a neighbourhood of X = (0, 1, 0) in the Q-chart to one of
  X~ = (1, 0, 0) in the P-chart (quasi-transverse orbit), affine plus
  higher-order terms;
* ``T2`` from a neighbourhood of Y = (0, 1, 1) in the P-chart to one of
  Y~ = (1, 0, 1) in the Q-chart (heterodimensional tangency), quadratic in
  the y, z offsets.

The six-parameter unfolding adds a constant shift after each transition
(valid where the bump equals 1), and the local perturbation ``theta_n`` near
X shifts the x coordinate by a rescaled bump.

All functions accept floats or ``mpmath.mpf`` values; arithmetic follows
the type of the point, so orbits can be composed at any precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import mpmath


class TransitionDomainError(ValueError):
    """A point left the region where a transition formula is valid."""


# eigenvalues ---------------------------------------------------------------------

@dataclass(frozen=True)
class EigenTuple:
    """Eigenvalues (lambda_t, sigma_t, zeta_t) at P and (lambda, zeta, sigma) at Q."""

    lambda_t: float
    sigma_t: float
    zeta_t: float
    lam: float
    zeta: float
    sigma: float

    def __post_init__(self):
        if not (0 < self.lambda_t < 1 < self.sigma_t < self.zeta_t):
            raise ValueError("P eigenvalues must satisfy 0 < lambda_t < 1 < sigma_t < zeta_t")
        if not (0 < self.lam < self.zeta < 1 < self.sigma):
            raise ValueError("Q eigenvalues must satisfy 0 < lambda < zeta < 1 < sigma")

    @property
    def k(self) -> float:
        """The exponent log(1/lambda) / log(zeta_t)."""
        return math.log(1 / self.lam) / math.log(self.zeta_t)

    @property
    def P(self) -> tuple:
        return (self.lambda_t, self.sigma_t, self.zeta_t)

    @property
    def Q(self) -> tuple:
        return (self.lam, self.sigma, self.zeta)

    def as_dict(self) -> dict:
        return asdict(self)


REFERENCE_EIGEN = EigenTuple(0.05, 3.0, 9.0, 0.1, 0.158489, 1.2)


def condition2_products(eig: EigenTuple) -> dict:
    """The three products that must lie in (0, 1), evaluated in log space.

    Returns the logarithms and the products under the keys ``ichi``, ``ni``
    and ``san`` (cycle expansion, contraction and the lambda_t balance).
    """
    k = eig.k
    logs = {
        "ichi": k * (math.log(eig.sigma_t) + math.log(eig.zeta_t))
        + math.log(eig.sigma) + 2 * math.log(eig.zeta),
        "ni": k * (-3 * math.log(eig.sigma_t) + math.log(eig.zeta_t)) - math.log(eig.sigma),
        "san": k * (math.log(eig.lambda_t) + math.log(eig.sigma_t)) + math.log(eig.sigma),
    }
    return {name: {"log": v, "value": math.exp(v), "ok": v < 0} for name, v in logs.items()}


# transitions ---------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionCoeffs:
    """Linear coefficients of T1 (alpha, beta, gamma) and Taylor ones of T2 (a, b, c).

    ``b`` has four entries: b1 x + b2 y^2 + b3 z^2 + b4 y z.
    """

    alpha: tuple = (0.0, 1.0, 1.0)
    beta: tuple = (0.0, 1.0, 0.0)
    gamma: tuple = (1.0, 0.0, 0.0)
    a: tuple = (1.0, 1.0, 1.0)
    b: tuple = (1.0, 1.0, 1.0, 0.0)
    c: tuple = (1.0, 1.0, 0.0)

    def __post_init__(self):
        for name, n in (("alpha", 3), ("beta", 3), ("gamma", 3), ("a", 3), ("b", 4), ("c", 3)):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != n:
                raise ValueError(f"{name} needs {n} entries")
            object.__setattr__(self, name, v)

    def violations(self) -> list:
        """Human-readable list of violated structural assumptions."""
        al, be, ga = self.alpha, self.beta, self.gamma
        a, b, c = self.a, self.b, self.c
        out = []
        if not (be[2] == 0 and ga[1] == 0 and ga[2] == 0):
            out.append("β₃=γ₂=γ₃=0 violated")
        if be[1] * ga[0] == 0:
            out.append("β₂γ₁≠0 violated")
        if c[2] != 0:
            out.append("c₃=0 violated")
        if b[1] * b[2] == 0:
            out.append("b₂b₃≠0 violated")
        if not ga[0] * a[2] > 0:
            out.append("γ₁a₃>0 violated")
        return out

    def as_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}


REFERENCE_COEFFS = TransitionCoeffs()

HIGHER_NAMES = ("Ht1", "Ht2", "Ht3", "H1", "H2", "H3")


@dataclass(frozen=True)
class HigherOrderSpec:
    """Polynomial higher-order terms of the transitions.

    ``terms`` maps a name in ``HIGHER_NAMES`` (Ht* for T1, H* for T2) to a
    tuple of monomials ``(coef, (i, j, k))`` meaning coef x^i y^j z^k in the
    offset variables.  Missing names are zero.
    """

    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, monos in dict(self.terms).items():
            if name not in HIGHER_NAMES:
                raise ValueError(f"unknown higher-order term {name!r}")
            clean[name] = tuple((float(cf), tuple(int(e) for e in ex)) for cf, ex in monos)
        object.__setattr__(self, "terms", clean)

    def violations(self) -> list:
        out = []
        for name, monos in self.terms.items():
            for cf, ex in monos:
                if cf == 0:
                    continue
                if len(ex) != 3 or min(ex) < 0:
                    out.append(f"{name}: bad exponent {ex}")
                elif sum(ex) < 2:
                    out.append(f"{name}: monomial {ex} is not higher order")
                elif name == "H2" and sum(ex) == 2 and ex[0] == 0:
                    out.append(f"H2: second-order term {ex} in y, z is not allowed")
        return out

    def value(self, name: str, x, y, z):
        s = 0
        for cf, (i, j, k) in self.terms.get(name, ()):
            s = s + cf * x ** i * y ** j * z ** k
        return s

    def grad(self, name: str, x, y, z) -> list:
        g = [0, 0, 0]
        for cf, (i, j, k) in self.terms.get(name, ()):
            if i:
                g[0] = g[0] + cf * i * x ** (i - 1) * y ** j * z ** k
            if j:
                g[1] = g[1] + cf * j * x ** i * y ** (j - 1) * z ** k
            if k:
                g[2] = g[2] + cf * k * x ** i * y ** j * z ** (k - 1)
        return g

    def is_zero(self) -> bool:
        return all(cf == 0 for monos in self.terms.values() for cf, _ in monos)

    def as_dict(self) -> dict:
        return {k: [[cf, list(ex)] for cf, ex in v] for k, v in self.terms.items()}


BUMP_PROFILES = ("smooth", "quintic")


@dataclass(frozen=True)
class CycleConfig:
    """Everything defining the model diffeomorphism.

    ``N1`` and ``N2`` (transition times) are metadata; the transitions are
    given directly.  ``rho`` is the plateau half-width of the unfolding bump.
    """

    eig: EigenTuple = REFERENCE_EIGEN
    coeffs: TransitionCoeffs = REFERENCE_COEFFS
    higher: HigherOrderSpec = field(default_factory=HigherOrderSpec)
    N1: int = 1
    N2: int = 1
    rho: float = 0.05
    bump: str = "smooth"

    def __post_init__(self):
        if self.bump not in BUMP_PROFILES:
            raise ValueError(f"bump must be one of {BUMP_PROFILES}")
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    def to_dict(self) -> dict:
        return {"eigenvalues": self.eig.as_dict(), "coefficients": self.coeffs.as_dict(),
                "higher_order": self.higher.as_dict(), "N1": self.N1, "N2": self.N2,
                "rho": self.rho, "bump": self.bump}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CycleConfig":
        d = dict(d)
        known = {"eigenvalues", "coefficients", "higher_order", "N1", "N2", "rho", "bump"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        kw = {}
        if "eigenvalues" in d:
            kw["eig"] = EigenTuple(**d["eigenvalues"])
        if "coefficients" in d:
            kw["coeffs"] = TransitionCoeffs(**{k: tuple(v) for k, v in d["coefficients"].items()})
        if "higher_order" in d:
            kw["higher"] = HigherOrderSpec({k: [(cf, tuple(ex)) for cf, ex in v]
                                            for k, v in d["higher_order"].items()})
        for k in ("N1", "N2", "rho", "bump"):
            if k in d:
                kw[k] = d[k]
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "CycleConfig":
        return cls.from_dict(json.loads(text))


REFERENCE_CONFIG = CycleConfig()


@dataclass
class Diagnostics:
    """Per-check outcome of :func:`validate_config`."""

    items: list

    @property
    def ok(self) -> bool:
        return all(it["ok"] for it in self.items)

    def failures(self) -> list:
        return [it for it in self.items if not it["ok"]]

    def messages(self) -> list:
        return [it["message"] for it in self.failures()]


def _unfolding_margin(cfg: CycleConfig) -> dict:
    """Separation of f(U) from U for the 2 rho cubes around X~ and Y~.

    Around X~ = (1,0,0) the P-chart map scales x by lambda_t, so the image
    of the cube lies at x <= lambda_t (1 + 2 rho); around Y~ = (1,0,1) the
    Q-chart map scales x by lambda.  The margin is the gap to 1 - 2 rho.
    """
    r2 = 2 * cfg.rho
    gx = (1 - r2) - cfg.eig.lambda_t * (1 + r2)
    gy = (1 - r2) - cfg.eig.lam * (1 + r2)
    return {"X": gx, "Y": gy}


def validate_config(cfg: CycleConfig) -> Diagnostics:
    """Check eigenvalue, coefficient and bump-size conditions with margins."""
    items = []
    e = cfg.eig
    items.append({"name": "eigen_P", "ok": True,
                  "margin": min(1 - e.lambda_t, e.sigma_t - 1, e.zeta_t - e.sigma_t),
                  "message": "0<λ̃<1<σ̃<ζ̃"})
    items.append({"name": "eigen_Q", "ok": True,
                  "margin": min(e.lam, e.zeta - e.lam, 1 - e.zeta, e.sigma - 1),
                  "message": "0<λ<ζ<1<σ"})
    for name, r in condition2_products(e).items():
        items.append({"name": name, "ok": r["ok"], "margin": -r["log"],
                      "message": f"condition ({name}) product {r['value']:.6g} must be < 1"})
    bad = cfg.coeffs.violations()
    for msg in bad:
        items.append({"name": "coefficients", "ok": False, "margin": 0.0, "message": msg})
    if not bad:
        items.append({"name": "coefficients", "ok": True, "margin": float("nan"),
                      "message": "transition coefficient assumptions"})
    hb = cfg.higher.violations()
    for msg in hb:
        items.append({"name": "higher_order", "ok": False, "margin": 0.0, "message": msg})
    um = _unfolding_margin(cfg)
    for key, m in um.items():
        items.append({"name": f"rho_{key}", "ok": m > 0, "margin": m,
                      "message": f"f(U_{key}~) must miss U_{key}~ for rho={cfg.rho}"})
    return Diagnostics(items)


# local dynamics and transitions ----------------------------------------------------

def local_step(chart: str, cfg: CycleConfig, p, n: int = 1):
    """Apply the linear chart map ``n`` times: coordinatewise eigenvalue powers."""
    if chart == "P":
        ev = cfg.eig.P
    elif chart == "Q":
        ev = cfg.eig.Q
    else:
        raise ValueError("chart must be 'P' or 'Q'")
    if n < 0:
        raise ValueError("n must be non-negative")
    return tuple(pi * _pow(e, n, pi) for pi, e in zip(p, ev))


def _pow(base: float, n: int, like):
    if isinstance(like, mpmath.mpf):
        return mpmath.mpf(base) ** n
    return base ** n


BASES = {"T1": ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0)),
         "T2": ((0.0, 1.0, 1.0), (1.0, 0.0, 1.0))}


def _offsets(which: str, p):
    base = BASES[which][0]
    return tuple(pi - b for pi, b in zip(p, base))


def _check_inner(which: str, cfg: CycleConfig, off, stage: str):
    r = max(abs(float(v)) for v in off)
    if not r < cfg.rho:
        raise TransitionDomainError(
            f"transition domain violated at {stage}: offset {r:.3g} from the base point "
            f"is not below rho={cfg.rho}")


def transition(which: str, cfg: CycleConfig, p, shift=(0.0, 0.0, 0.0), check: bool = True):
    """Evaluate T1 or T2 at ``p`` and add ``shift``.

    The constant-shift form is valid where the unfolding bump equals 1, so
    with ``check`` the input offset from X (or Y) and the unshifted image's
    offset from X~ (or Y~) must both be below rho.
    """
    if which not in BASES:
        raise ValueError("which must be 'T1' or 'T2'")
    x, y, z = _offsets(which, p)
    if check:
        _check_inner(which, cfg, (x, y, z), f"{which} input")
    h = cfg.higher
    c = cfg.coeffs
    if which == "T1":
        al, be, ga = c.alpha, c.beta, c.gamma
        out = (1 + al[0] * x + al[1] * y + al[2] * z + h.value("Ht1", x, y, z),
               be[0] * x + be[1] * y + be[2] * z + h.value("Ht2", x, y, z),
               ga[0] * x + ga[1] * y + ga[2] * z + h.value("Ht3", x, y, z))
    else:
        a, b, cc = c.a, c.b, c.c
        out = (1 + a[0] * x + a[1] * y + a[2] * z + h.value("H1", x, y, z),
               b[0] * x + b[1] * y * y + b[2] * z * z + b[3] * y * z + h.value("H2", x, y, z),
               1 + cc[0] * x + cc[1] * y + cc[2] * z + h.value("H3", x, y, z))
    if check:
        tgt = BASES[which][1]
        _check_inner(which, cfg, tuple(o - t for o, t in zip(out, tgt)), f"{which} output")
    return tuple(o + s for o, s in zip(out, shift))


def transition_jacobian(which: str, cfg: CycleConfig, p) -> list:
    """Jacobian of T1 or T2 at ``p`` as a list of rows."""
    x, y, z = _offsets(which, p)
    h = cfg.higher
    c = cfg.coeffs
    if which == "T1":
        rows = [list(c.alpha), list(c.beta), list(c.gamma)]
        names = ("Ht1", "Ht2", "Ht3")
    elif which == "T2":
        a, b, cc = c.a, c.b, c.c
        rows = [list(a),
                [b[0], 2 * b[1] * y + b[3] * z, 2 * b[2] * z + b[3] * y],
                list(cc)]
        names = ("H1", "H2", "H3")
    else:
        raise ValueError("which must be 'T1' or 'T2'")
    for r, name in zip(rows, names):
        g = h.grad(name, x, y, z)
        for j in range(3):
            r[j] = r[j] + g[j]
    return rows


# bumps ---------------------------------------------------------------------------

def _h(s):
    return mpmath.exp(-1 / s) if isinstance(s, mpmath.mpf) else math.exp(-1 / s)


def ramp(s, profile: str = "smooth"):
    """Monotone ramp from 0 (s <= 0) to 1 (s >= 1)."""
    if s <= 0:
        return 0 * s
    if s >= 1:
        return 0 * s + 1
    if profile == "quintic":
        return s ** 3 * (10 - 15 * s + 6 * s * s)
    a, b = _h(s), _h(1 - s)
    return a / (a + b)


def ramp_deriv(s, profile: str = "smooth"):
    if s <= 0 or s >= 1:
        return 0 * s
    if profile == "quintic":
        return 30 * s * s * (1 - s) ** 2
    a, b = _h(s), _h(1 - s)
    da, db = a / (s * s), -b / ((1 - s) ** 2)
    return (da * b - a * db) / (a + b) ** 2


def profile_b(t, inner: float, outer: float, profile: str = "smooth"):
    """1 on |t| <= inner, 0 on |t| >= outer, monotone in between."""
    return 1 - ramp((abs(t) - inner) / (outer - inner), profile)


def profile_db(t, inner: float, outer: float, profile: str = "smooth"):
    sgn = 1 if t >= 0 else -1
    return -sgn * ramp_deriv((abs(t) - inner) / (outer - inner), profile) / (outer - inner)


# plateau/support of the profile used by the rescaled bump near X
SMALL_INNER, SMALL_OUTER = 1.0 / 3.0, 0.5


def bump(kind: str, cfg: CycleConfig, p, n: int | None = None):
    """The unfolding bump ``B`` or the rescaled bump ``Bn`` at offset ``p``.

    ``B`` = b(x) b(y) b(z) with plateau |t| <= rho and support |t| < 2 rho.
    ``Bn`` = lambda^n B6(p / zeta^n), where B6 has plateau |t| < 1/3 and
    support |t| < 1/2.
    """
    x, y, z = p
    if kind == "B":
        r = cfg.rho
        return (profile_b(x, r, 2 * r, cfg.bump) * profile_b(y, r, 2 * r, cfg.bump)
                * profile_b(z, r, 2 * r, cfg.bump))
    if kind == "Bn":
        if n is None or n < 0:
            raise ValueError("Bn needs n >= 0")
        lam, ze = _pow(cfg.eig.lam, n, x), _pow(cfg.eig.zeta, n, x)
        return lam * bump6((x / ze, y / ze, z / ze), cfg.bump)
    raise ValueError("kind must be 'B' or 'Bn'")


def bump6(p, profile: str = "smooth"):
    """The product bump with plateau |t| < 1/3 and support |t| < 1/2."""
    out = 1
    for t in p:
        out = out * profile_b(t, SMALL_INNER, SMALL_OUTER, profile)
    return out


def bump6_dx(p, profile: str = "smooth"):
    """Partial derivative of :func:`bump6` in its first argument."""
    x, y, z = p
    return (profile_db(x, SMALL_INNER, SMALL_OUTER, profile)
            * profile_b(y, SMALL_INNER, SMALL_OUTER, profile)
            * profile_b(z, SMALL_INNER, SMALL_OUTER, profile))


def theta_n_apply(cfg: CycleConfig, n: int, p):
    """Shift the x coordinate by B_n near X = (0, 1, 0); identity elsewhere."""
    x, y1, z = p
    y = y1 - 1
    ze = _pow(cfg.eig.zeta, n, x)
    if not (abs(x) < ze / 2 and abs(y) < ze / 2 and abs(z) < ze / 2):
        return tuple(p)
    return (x + bump("Bn", cfg, (x, y, z), n), y1, z)


# orbit composition -----------------------------------------------------------------

@dataclass
class OrbitTrace:
    """Points after each stage of a return orbit."""

    stages: list

    def point(self, name: str):
        for s, p in self.stages:
            if s == name:
                return p
        raise KeyError(name)


def _mp(p):
    return tuple(mpmath.mpf(v) for v in p)


def compose_return_orbit(cfg: CycleConfig, shifts, m: int, n: int, p,
                         precision: int | None = None, theta_n: int | None = None,
                         check: bool = True):
    """n Q-steps, T1 + nu, m P-steps, T2 + mu, starting near Y~ in the Q-chart.

    ``shifts`` is ``(mu_vec, nu_vec)``.  With ``precision`` (bits) the orbit
    is computed in mpmath at that working precision and mpf values are
    returned.  ``theta_n`` applies the local perturbation with that index
    right before T1.  Returns ``(point, OrbitTrace)``.
    """
    mu_vec, nu_vec = shifts
    if m < 0 or n < 0:
        raise ValueError("m and n must be non-negative")
    ctx = mpmath.workprec(precision) if precision else _null()
    with ctx:
        q = _mp(p) if precision else tuple(p)
        if precision:
            mu_vec, nu_vec = _mp(mu_vec), _mp(nu_vec)
        st = [("start", q)]
        q = local_step("Q", cfg, q, n)
        st.append(("Q", q))
        if theta_n is not None:
            q = theta_n_apply(cfg, theta_n, q)
            st.append(("theta", q))
        q = transition("T1", cfg, q, nu_vec, check)
        st.append(("T1", q))
        q = local_step("P", cfg, q, m)
        st.append(("P", q))
        q = transition("T2", cfg, q, mu_vec, check)
        st.append(("T2", q))
    return q, OrbitTrace(st)


class _null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False
