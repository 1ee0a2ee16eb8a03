"""Certification of the blender conditions for the cu-Henon-like maps.

Conditions H1 to H4 are checked with interval arithmetic over adaptive box
subdivisions of the phase box Delta = [-4,4] x [-4,4] x [-40,0].  Condition
H5 and the strip game are verified on finite nets of vertical curves and are
reported as sampled (non-rigorous) verdicts.

All geometry is done in the blender coordinates, where the map reads
(x, y, z) -> (y, mu + y^2 + kappa z^2 + eta y z, xi z + y).  The image does
not depend on x, so subdivisions only split the y and z axes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .geom_core import (CERTIFIED, FAILED, UNRESOLVED, Cone, IBox3, Interval,
                        cone_map_check, cone_mapped_into_interior,
                        cone_violation_witness, expansion_witness, imatrix, s_cone_inverse_expansion,
                        subdivide)
from .henon_family import (DEFAULT_BOX, BlenderBoxSpec, BlenderMap, HenonParams, NoBlenderFixedPoint,
                           Perturbation, fixed_point_Pstar)

DELTA = DEFAULT_BOX.delta
YZ = (1, 2)

# sets used by the H5 dichotomy: (y range, z range)
A_PRIME = ((2.4, 3.8), (-22.0, -3.3))
B_PRIME = ((-3.8, -2.4), (-7.3, 0.0))


@dataclass
class CertConfig:
    """Knobs of the certification pipeline.

    ``nbhd`` is the z half-width used for the neighbourhoods U (of W0s) and
    U+ (of the face z = 0).  ``prefer`` picks the H5 case when both verify.
    """

    theta: float = 2.0
    depth: int = 12
    n_dirs: int = 64
    cone_margin: float = 1e-9
    nbhd: float = 0.25
    net_offsets: int = 11
    net_slopes: tuple = (-0.45, 0.0, 0.45)
    net_samples: int = 257
    strip_width: float = 0.02
    strip_curves: int = 5
    strip_steps: int = 50
    strip_tol: float = 1e-6
    prefer: str = "A"
    run_strip: bool = True
    max_evals: int = 4000
    scan_points: int = 33
    perturbation: Perturbation = field(default_factory=Perturbation)


@dataclass
class ConditionResult:
    """Verdict of one condition with its margin and subdivision statistics."""

    name: str
    verdict: str
    margin: float = float("nan")
    depth: int = 0
    rigorous: bool = True
    details: dict = field(default_factory=dict)


@dataclass
class Certificate:
    """Aggregate verdicts; ``overall`` is CERTIFIED, FAILED or UNRESOLVED."""

    params: dict
    conditions: dict
    subclaims: list
    overall: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "overall": self.overall,
            "conditions": {k: _clean(asdict(v)) for k, v in self.conditions.items()},
            "subclaims": [_clean(s) for s in self.subclaims],
            "config": _clean(self.config),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _combine(verdicts) -> str:
    verdicts = list(verdicts)
    if any(v == FAILED for v in verdicts):
        return FAILED
    if all(v == CERTIFIED for v in verdicts):
        return CERTIFIED
    return UNRESOLVED


def _blender_map(params: HenonParams, config: CertConfig | None) -> BlenderMap:
    pert = config.perturbation if config is not None else None
    return BlenderMap(params, pert)


def _budget(config: CertConfig | None) -> int:
    return (config or CertConfig()).max_evals


def _inside_delta_point(img: IBox3) -> bool:
    """Image of a single point certainly in the interior of Delta."""
    return DELTA.x.interior_contains(img.x) and DELTA.y.interior_contains(img.y) \
        and DELTA.z.interior_contains(img.z)


def _center(b: IBox3) -> IBox3:
    return IBox3(Interval(float(b.x.mid)), Interval(float(b.y.mid)), Interval(float(b.z.mid)))


# A and B ---------------------------------------------------------------------

@dataclass
class ABEnclosure:
    """Outer box enclosures of A = G(Delta+) & Delta and B = G(Delta-) & Delta.

    ``preimage`` holds the leaves of Delta whose image meets Delta; they cover
    the preimage of A and B and are the domain of the cone checks.  The I+
    and I- entries are interval enclosures of the x-ranges of the slice
    segments over z in [-40, 0].
    """

    A: list
    B: list
    preimage: list
    status: str
    depth: int
    i_plus: tuple
    i_minus: tuple
    margins: dict


def _half(sign: int) -> IBox3:
    y = (0.0, 4.0) if sign > 0 else (-4.0, 0.0)
    return IBox3.from_bounds((-4, 4), y, (-40, 0))


def _slice_root(params: HenonParams, z: Interval, level: float, sign: int) -> Interval:
    """Root y of mu + y^2 + kappa z^2 + eta y z = level on the branch ``sign``."""
    c = Interval(params.mu) + z.sqr() * params.kappa - level
    b = z * params.eta
    disc = b.sqr() - c * 4.0
    r = disc.sqrt()
    return (r - b) * 0.5 if sign > 0 else (-r - b) * 0.5


def slice_x_range(params: HenonParams, sign: int = 1, n_pieces: int = 64):
    """Enclosure of the x-range of the slice segments I+_z (sign=1) or I-_z.

    Returns ``(inner_end, outer_end)`` intervals: the end closest to x = 0 and
    the end closest to |x| = 4, each hulled over z in [-40, 0].  With eta = 0
    the inner end of I+ is sqrt(-4 - mu - kappa z^2), smallest at z = -40.
    """
    edges = np.linspace(-40.0, 0.0, n_pieces + 1)
    z = Interval(edges[:-1], edges[1:])
    inner = _slice_root(params, z, -4.0, sign)
    o = _slice_root(params, z, 4.0, sign)
    # the segment is clipped by the faces |x| = 4
    outer = Interval(np.clip(o.lo, -4, 4), np.clip(o.hi, -4, 4))
    return (Interval(float(np.min(inner.lo)), float(np.max(inner.hi))),
            Interval(float(np.min(outer.lo)), float(np.max(outer.hi))))


def slice_inner_points(params: HenonParams, sign: int = 1, n_pieces: int = 64) -> Interval:
    """Enclosures of the inner end of the slice at the grid levels z_k."""
    edges = np.linspace(-40.0, 0.0, n_pieces + 1)
    return _slice_root(params, Interval(edges, edges), -4.0, sign)


def compute_AB_enclosures(params: HenonParams, depth: int = 12,
                          config: CertConfig | None = None) -> ABEnclosure:
    """Subdivide Delta+ and Delta- and enclose the images meeting Delta."""
    F = _blender_map(params, config)
    A, B, pre = [], [], []
    reps = []
    for sign in (1, -1):
        def pred(leaf, sign=sign):
            img = F.box(leaf)
            if not img.overlaps(DELTA):
                return True
            if sign > 0:
                return bool(img.x.lo > 0 and img.x.hi < 4)
            return bool(img.x.hi < 0 and img.x.lo > -4 and img.z.hi < 0)

        rep = subdivide(_half(sign), pred, depth, axes=YZ, max_evals=_budget(config))
        reps.append(rep)
        for _, _, leaf in rep.certified:
            img = F.box(leaf)
            if img.overlaps(DELTA):
                pre.append(leaf)
                (A if sign > 0 else B).append(img.intersect(DELTA))
    status = CERTIFIED if all(r.ok for r in reps) else UNRESOLVED
    if A and B:
        ax_lo = min(float(b.x.lo) for b in A)
        bx_hi = max(float(b.x.hi) for b in B)
        if not bx_hi < ax_lo:
            status = UNRESOLVED
    margins = {}
    if A:
        margins["A_gap_to_ss"] = 4.0 - max(float(b.x.hi) for b in A)
        margins["A_x_min"] = min(float(b.x.lo) for b in A)
    if B:
        margins["B_gap_to_ss"] = 4.0 + min(float(b.x.lo) for b in B)
        margins["B_gap_to_top"] = -max(float(b.z.hi) for b in B)
    return ABEnclosure(A=A, B=B, preimage=pre, status=status,
                       depth=max(r.max_depth_used for r in reps),
                       i_plus=slice_x_range(params, 1), i_minus=slice_x_range(params, -1),
                       margins=margins)


def _faces():
    """Parts of the boundary of Delta as (label, box, axis to split)."""
    out = []
    for y in (-4.0, 4.0):
        out.append(("uu", IBox3(Interval(-4, 4), Interval(y), Interval(-40, 0)), (2,)))
    for z in (0.0, -40.0):
        out.append(("u", IBox3(Interval(-4, 4), Interval(-4, 4), Interval(z)), (1,)))
    return out


def check_H1_H2(params: HenonParams, depth: int = 12, config: CertConfig | None = None,
                ab: ABEnclosure | None = None) -> dict:
    """Interval checks of H1 and H2; returns ``{"H1": ..., "H2": ...}``."""
    F = _blender_map(params, config)
    ab = ab or compute_AB_enclosures(params, depth, config)
    face_status = {"H1": CERTIFIED, "H2": CERTIFIED}
    uu_gap = math.inf
    face_depth = 0
    for label, face, axes in _faces():
        def pred(leaf, label=label):
            img = F.box(leaf)
            if not img.overlaps(DELTA):
                return True
            ok_a = not any(img.overlaps(a) for a in ab.A)
            ok_b = label != "uu" or not any(img.overlaps(b) for b in ab.B)
            if ok_a and ok_b:
                return True
            c = _center(leaf)
            ci = F.box(c)
            if _inside_delta_point(ci) and (c.y.lo > 0 or (label == "uu" and c.y.hi < 0)):
                return FAILED
            return False

        rep = subdivide(face, pred, depth, axes=axes, max_evals=_budget(config),
                        stop_on_failure=True)
        face_depth = max(face_depth, rep.max_depth_used)
        for _, _, leaf in rep.failed:
            key = "H2" if (label == "uu" and leaf.y.hi < 0) else "H1"
            face_status[key] = FAILED
        if rep.unresolved and face_status["H1"] != FAILED:
            face_status["H1"] = UNRESOLVED
            if label == "uu" and face_status["H2"] != FAILED:
                face_status["H2"] = UNRESOLVED
        if label == "uu":
            for _, _, leaf in rep.certified:
                uu_gap = min(uu_gap, float(F.box(leaf).y.lo) - 4.0)
    m = ab.margins
    h1_margin = min(m.get("A_gap_to_ss", -math.inf), m.get("A_x_min", -math.inf))
    h2_margin = min(m.get("B_gap_to_ss", -math.inf), m.get("B_gap_to_top", -math.inf))
    if not ab.A:
        v1 = FAILED
    else:
        v1 = _combine([ab.status, face_status["H1"]])
    if not ab.B:
        v2 = FAILED
    else:
        v2 = _combine([ab.status, face_status["H2"]])
    d = max(ab.depth, face_depth)
    details = {"n_A_boxes": len(ab.A), "n_B_boxes": len(ab.B), "uu_face_gap": uu_gap,
               **ab.margins}
    return {
        "H1": ConditionResult("H1", v1, h1_margin, d, True, dict(details)),
        "H2": ConditionResult("H2", v2, h2_margin, d, True, dict(details)),
    }


def i_plus_subclaim(params: HenonParams, ab: ABEnclosure | None = None) -> dict:
    """The slice bounds 2.4 < x < 3.8 on I+_z and -3.8 < x < -2.4 on I-_z."""
    ip_in, ip_out = ab.i_plus if ab else slice_x_range(params, 1)
    im_in, im_out = ab.i_minus if ab else slice_x_range(params, -1)
    plus_ok = bool(ip_in.lo > 2.4 and ip_out.hi < 3.8)
    # a single slice whose inner end is certainly past 2.4 refutes the bound
    pts = slice_inner_points(params, 1)
    mpts = slice_inner_points(params, -1)
    plus_bad = bool(np.any(pts.hi < 2.4) or ip_out.lo > 3.8)
    minus_ok = bool(im_in.hi < -2.4 and im_out.lo > -3.8)
    minus_bad = bool(np.any(mpts.lo > -2.4) or im_out.hi < -3.8)
    return {
        "name": "I+_z x-range in (2.4, 3.8)",
        "verdict": "PASSED" if plus_ok else ("FAILED" if plus_bad else UNRESOLVED),
        "x_lo": float(ip_in.lo), "x_lo_hi": float(ip_in.hi), "x_hi": float(ip_out.hi),
        "minus_verdict": "PASSED" if minus_ok else ("FAILED" if minus_bad else UNRESOLVED),
        "minus_x_range": [float(im_out.lo), float(im_in.hi)],
    }


# H3 --------------------------------------------------------------------------

def check_H3(params: HenonParams, theta: float = 2.0, depth: int = 12,
             config: CertConfig | None = None) -> dict:
    """Cone invariance and expansion over the preimage of A and B.

    Returns results for ``H3i``, ``H3ii`` and ``H3iii``.  The expansion of
    (i) is certified in the norm max(|u|, sqrt(v^2 + w^2)); the Euclidean
    constants (c, l) follow from |v|_* <= |v| <= sqrt(2) |v|_*.
    """
    cfg = config or CertConfig()
    F = _blender_map(params, cfg)
    cu, cuu, cs = Cone("u", theta), Cone("uu", theta), Cone("s", theta)
    stats = {"c0": math.inf, "slack_u": math.inf, "slack_uu": math.inf, "c_s": math.inf}

    def make_pred(kind):
        def pred(leaf):
            img = F.box(leaf)
            if not img.overlaps(DELTA):
                return True
            M = F.jac_box(leaf)
            if kind == "i":
                r = cone_map_check(cu, M, cu, cfg.cone_margin, cfg.n_dirs)
                if r.ok and r.expansion > 1.0:
                    return True
                src = dst = cu
            elif kind == "ii":
                r = cone_map_check(cuu, M, cuu, cfg.cone_margin, cfg.n_dirs)
                if r.ok:
                    return True
                src = dst = cuu
            else:
                if cone_mapped_into_interior(cs, M, cs, cfg.cone_margin, cfg.n_dirs):
                    c = s_cone_inverse_expansion(M, theta, cfg.n_dirs)
                    if c > 1.0:
                        return True
                return False
            c = _center(leaf)
            if _inside_delta_point(F.box(c)):
                Mc = imatrix(F.jac_box(c))
                if cone_violation_witness(src, Mc, dst, cfg.n_dirs) is not None:
                    return FAILED
                if kind == "i" and expansion_witness(src, Mc, cfg.n_dirs) is not None:
                    return FAILED
            return False
        return pred

    def scan(kind):
        """Point witnesses on a grid of Delta; each one is a rigorous failure."""
        if kind == "iii":
            return None
        src = cu if kind == "i" else cuu
        for y in np.linspace(-4, 4, cfg.scan_points):
            for z in np.linspace(-40, 0, cfg.scan_points):
                c = IBox3(Interval(0.0), Interval(float(y)), Interval(float(z)))
                if not _inside_delta_point(F.box(c)):
                    continue
                Mc = imatrix(F.jac_box(c))
                if cone_violation_witness(src, Mc, src, cfg.n_dirs) is not None:
                    return (float(y), float(z))
                if kind == "i" and expansion_witness(src, Mc, cfg.n_dirs) is not None:
                    return (float(y), float(z))
        return None

    out = {}
    for kind, name in (("i", "H3i"), ("ii", "H3ii"), ("iii", "H3iii")):
        w = scan(kind)
        if w is not None:
            out[name] = ConditionResult(name, FAILED, -math.inf, 0, True,
                                        {"witness_yz": list(w)})
            continue
        rep = subdivide(DELTA, make_pred(kind), depth, axes=YZ, max_evals=cfg.max_evals,
                        stop_on_failure=True)
        verdict = FAILED if rep.failed else (CERTIFIED if rep.ok else UNRESOLVED)
        margin = math.inf
        for _, _, leaf in rep.certified:
            if not F.box(leaf).overlaps(DELTA):
                continue
            M = F.jac_box(leaf)
            if kind == "i":
                r = cone_map_check(cu, M, cu, cfg.cone_margin, cfg.n_dirs)
                stats["c0"] = min(stats["c0"], r.expansion)
                stats["slack_u"] = min(stats["slack_u"], r.slack)
                margin = min(margin, r.slack)
            elif kind == "ii":
                r = cone_map_check(cuu, M, cuu, cfg.cone_margin, cfg.n_dirs)
                stats["slack_uu"] = min(stats["slack_uu"], r.slack)
                margin = min(margin, r.slack)
            else:
                stats["c_s"] = min(stats["c_s"], s_cone_inverse_expansion(M, theta, cfg.n_dirs))
                margin = min(margin, stats["c_s"] - 1.0)
        det = {"n_leaves": rep.n_leaves, "n_unresolved": len(rep.unresolved), "truncated": rep.truncated,
               "n_failed": len(rep.failed)}
        if kind == "i" and math.isfinite(stats["c0"]) and stats["c0"] > 1:
            ell, c = euclidean_expansion(stats["c0"])
            det.update({"c0_star": stats["c0"], "ell": ell, "c_euclid": c})
        if kind == "iii":
            det["c_inverse"] = stats["c_s"]
        out[name] = ConditionResult(name, verdict, margin, rep.max_depth_used, True, det)
    return out


def euclidean_expansion(c0: float) -> tuple:
    """Smallest l with c0^l / sqrt(2) > 1 and the resulting constant c."""
    if not c0 > 1:
        raise ValueError("c0 must exceed 1")
    ell = 1
    while c0 ** ell / math.sqrt(2) <= 1:
        ell += 1
    return ell, c0 ** ell / math.sqrt(2)


# H4 --------------------------------------------------------------------------

Z_STAR_RANGE = (-21.2, -12.6)


def check_H4(params: HenonParams, theta: float = 2.0) -> ConditionResult:
    """Vertical curves to the right of W0s stay away from the face z = -40.

    A vertical curve has |dz/dy| <= 1/theta and crosses the plane y = y* at
    some z > z*, so it stays above z* - max(4 + y*, 4 - y*)/theta.  The
    margin is the gap of that bound to z = -40.
    """
    try:
        fp = fixed_point_Pstar(params)
    except NoBlenderFixedPoint as exc:
        return ConditionResult("H4", FAILED, -math.inf, 0, True, {"error": str(exc)})
    ys, zs = fp.y, fp.z
    drop = max(4.0 + float(ys.hi), 4.0 - float(ys.lo)) / theta
    drop = float(np.nextafter(drop, math.inf))
    gap = float(zs.lo) - drop + 40.0
    z_in_delta = bool(zs.lo > -40 and zs.hi < 0)
    z_claim = bool(zs.lo > Z_STAR_RANGE[0] and zs.hi < Z_STAR_RANGE[1])
    y_claim = bool(ys.lo > 2.4 and ys.hi < 3.8)
    if z_in_delta and gap > 0:
        verdict = CERTIFIED
    elif zs.hi < -40 or zs.lo > 0 or gap < 0:
        verdict = FAILED
    else:
        verdict = UNRESOLVED
    det = {"y_star": [float(ys.lo), float(ys.hi)], "z_star": [float(zs.lo), float(zs.hi)],
           "enclosure_width": fp.width, "z_star_in_claimed_range": z_claim,
           "y_star_in_claimed_range": y_claim}
    return ConditionResult("H4", verdict, gap, 0, True, det)


# vertical curves ---------------------------------------------------------------

class VerticalCurve:
    """Curve x = x(y), z = z(y) sampled on an increasing y grid.

    Stores positions and derivatives with respect to y at the samples and
    interpolates with cubic Hermite splines in between.  Being a graph over
    y, the tangent (dx/dy, 1, dz/dy) is in the uu cone of aperture theta
    iff theta * sqrt(dx^2 + dz^2) <= 1.
    """

    def __init__(self, y, x, z, dx, dz, theta: float = 2.0):
        self.y = np.asarray(y, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.z = np.asarray(z, dtype=float)
        self.dx = np.asarray(dx, dtype=float)
        self.dz = np.asarray(dz, dtype=float)
        self.theta = theta
        if self.y.ndim != 1 or len(self.y) < 2 or np.any(np.diff(self.y) <= 0):
            raise ValueError("curve samples must be strictly increasing in y")
        self._sx = CubicHermiteSpline(self.y, self.x, self.dx)
        self._sz = CubicHermiteSpline(self.y, self.z, self.dz)

    @classmethod
    def line(cls, x0: float = 0.0, z0: float = 0.0, slope: float = 0.0,
             y_range=(-4.0, 4.0), n: int = 257, theta: float = 2.0) -> "VerticalCurve":
        """The segment {(x0, y, z0 + slope * y)}."""
        y = np.linspace(y_range[0], y_range[1], n)
        return cls(y, np.full(n, x0), z0 + slope * y, np.zeros(n), np.full(n, slope), theta)

    def shifted(self, dz: float) -> "VerticalCurve":
        return VerticalCurve(self.y, self.x, self.z + dz, self.dx, self.dz, self.theta)

    @property
    def y_range(self) -> tuple:
        return float(self.y[0]), float(self.y[-1])

    def at(self, yq):
        yq = np.asarray(yq, dtype=float)
        return self._sx(yq), self._sz(yq), self._sx(yq, 1), self._sz(yq, 1)

    def points(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def max_slope(self) -> float:
        return float(np.max(np.hypot(self.dx, self.dz)))

    def is_vertical(self, y_range=(-4.0, 4.0), tol: float = 1e-12) -> bool:
        """Tangents strictly inside the uu cone and end points on y = y_range."""
        return (self.theta * self.max_slope() < 1.0
                and abs(self.y[0] - y_range[0]) <= tol and abs(self.y[-1] - y_range[1]) <= tol)

    def in_box(self, xr=(-4.0, 4.0), zr=(-40.0, 0.0)) -> bool:
        return bool(np.all((self.x >= xr[0]) & (self.x <= xr[1])
                           & (self.z >= zr[0]) & (self.z <= zr[1])))

    def restrict(self, ylo: float, yhi: float, n: int | None = None) -> "VerticalCurve":
        n = n or len(self.y)
        if ylo < self.y[0] - 1e-12 or yhi > self.y[-1] + 1e-12:
            raise ValueError("restriction outside the curve's y-range")
        yq = np.linspace(ylo, yhi, n)
        x, z, dx, dz = self.at(yq)
        return VerticalCurve(yq, x, z, dx, dz, self.theta)

    def crossing(self, level: float):
        """(x, z) where the curve meets the plane y = level, or None."""
        if not (self.y[0] <= level <= self.y[-1]):
            return None
        x, z, _, _ = self.at(level)
        return float(x), float(z)


def _map_piece(F: BlenderMap, curve: VerticalCurve, ylo: float, yhi: float, targets):
    """Old-curve points on [ylo, yhi] whose image has second coordinate ``targets``.

    The image second coordinate Y is monotone on the piece; solved by
    vectorized bisection.  Returns old (y, x, z, dx, dz).
    """
    targets = np.asarray(targets, dtype=float)

    def Yof(y):
        x, z, _, _ = curve.at(y)
        return F(np.array([x, y, z]))[1]

    increasing = Yof(yhi) > Yof(ylo)
    lo = np.full(targets.shape, ylo)
    hi = np.full(targets.shape, yhi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        above = Yof(mid) > targets
        if increasing:
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        else:
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
    y = 0.5 * (lo + hi)
    x, z, dx, dz = curve.at(y)
    return y, x, z, dx, dz


def image_curve(F: BlenderMap, curve: VerticalCurve, ylo: float, yhi: float,
                Y_range=(-4.0, 4.0), n: int | None = None):
    """Image of the piece y in [ylo, yhi] cut to Y in ``Y_range``.

    Returns ``(image, span)`` where ``span`` is the pair of image Y values at
    the piece ends, or ``(None, span)`` when the image does not cross the
    whole range.
    """
    n = n or len(curve.y)
    xa, za, _, _ = curve.at(np.array([ylo, yhi]))
    Ya = F(np.array([xa, np.array([ylo, yhi]), za]))[1]
    span = (float(Ya[0]), float(Ya[1]))
    if not (min(span) < Y_range[0] and max(span) > Y_range[1]):
        return None, span
    targets = np.linspace(Y_range[0], Y_range[1], n)
    y, x, z, dx, dz = _map_piece(F, curve, ylo, yhi, targets)
    pts = F(np.array([x, y, z]))
    q = F.params
    # derivative of the image along the old tangent (dx, 1, dz)
    Yp = 2 * y + 2 * q.kappa * z * dz + q.eta * (z + y * dz)
    dX = 1.0 / Yp
    dZ = (q.xi * dz + 1.0) / Yp
    return VerticalCurve(targets, pts[0], pts[2], dX, dZ, curve.theta), span


@dataclass
class CaseCheck:
    """Outcome of one H5 case (A' or B') for one curve."""

    ok: bool
    reason: str = ""
    image: VerticalCurve | None = None
    margin: float = float("nan")
    crossing: float = float("nan")


@dataclass
class H5CaseResult:
    case: str
    A: CaseCheck
    B: CaseCheck


def _check_case(F: BlenderMap, curve: VerticalCurve, which: str, z_star: float,
                y_star: float, nbhd: float, n: int) -> CaseCheck:
    (ya, yb), (za, zb) = A_PRIME if which == "A" else B_PRIME
    piece = curve.restrict(ya, yb, n)
    if not piece.in_box((-4, 4), (za, zb)):
        return CaseCheck(False, f"curve piece not inside {which}'")
    if curve.theta * piece.max_slope() >= 1:
        return CaseCheck(False, "curve piece not tangent to the uu cone")
    img, span = image_curve(F, curve, ya, yb, n=n)
    if img is None:
        return CaseCheck(False, f"image spans Y in {span}, not all of [-4, 4]")
    if img.theta * img.max_slope() >= 1:
        return CaseCheck(False, "image not tangent to the uu cone")
    if not img.in_box():
        return CaseCheck(False, "image leaves Delta", img)
    cr = img.crossing(y_star)
    off = cr[1] - z_star
    if off <= 0:
        return CaseCheck(False, "image not to the right of W0s", img, crossing=off)
    if which == "A":
        m = -nbhd - float(np.max(img.z))
        if m <= 0:
            return CaseCheck(False, "image meets U+", img, m, off)
    else:
        m = float(np.min(np.abs(img.z - z_star))) - nbhd
        if m <= 0:
            return CaseCheck(False, "image meets U", img, m, off)
    return CaseCheck(True, "", img, min(m, off), off)


def check_H5_case(params: HenonParams, curve: VerticalCurve,
                  config: CertConfig | None = None, z_star: float | None = None,
                  y_star: float | None = None) -> H5CaseResult:
    """Which of the two H5 cases verify for ``curve`` on its sample net.

    Case A': the piece over 2.4 <= y <= 3.8 lies in A' and its image contains
    a vertical curve through Delta to the right of W0s missing U+ (z > -nbhd).
    Case B': same for B' with the image missing U (|z - z*| < nbhd).
    """
    cfg = config or CertConfig()
    F = _blender_map(params, cfg)
    if z_star is None or y_star is None:
        fp = fixed_point_Pstar(params)
        y_star, z_star = float(fp.y.mid), float(fp.z.mid)
    n = cfg.net_samples
    a = _check_case(F, curve, "A", z_star, y_star, cfg.nbhd, n)
    b = _check_case(F, curve, "B", z_star, y_star, cfg.nbhd, n)
    case = {(True, True): "both", (True, False): "A", (False, True): "B",
            (False, False): "neither"}[(a.ok, b.ok)]
    return H5CaseResult(case, a, b)


def curve_net(z_star: float, y_star: float, config: CertConfig | None = None) -> list:
    """Vertical segments right of W0s: crossings z_c at y* times slopes.

    Offsets run from z* + 0.3 to -0.3; segments leaving Delta are dropped.
    """
    cfg = config or CertConfig()
    out = []
    for zc in np.linspace(z_star + 0.3, -0.3, cfg.net_offsets):
        for s in cfg.net_slopes:
            c = VerticalCurve.line(0.0, zc - s * y_star, s, n=cfg.net_samples, theta=cfg.theta)
            if c.in_box():
                out.append(c)
    return out


def check_H5_sampled(params: HenonParams, config: CertConfig | None = None) -> ConditionResult:
    """Every net curve must verify case A' or case B' (sampled check)."""
    cfg = config or CertConfig()
    try:
        fp = fixed_point_Pstar(params)
    except NoBlenderFixedPoint as exc:
        return ConditionResult("H5", FAILED, -math.inf, 0, False, {"error": str(exc)})
    ys, zs = float(fp.y.mid), float(fp.z.mid)
    net = curve_net(zs, ys, cfg)
    counts = {"A": 0, "B": 0, "both": 0, "neither": 0}
    margin = math.inf
    reasons = []
    a_span_bottom = math.nan
    for c in net:
        r = check_H5_case(params, c, cfg, zs, ys)
        counts[r.case] += 1
        good = [x.margin for x in (r.A, r.B) if x.ok]
        if good:
            margin = min(margin, max(good))
        else:
            margin = -math.inf
            reasons.append({"z_at_ystar": float(c.crossing(ys)[1]),
                            "slope": float(c.dz[0]), "A": r.A.reason, "B": r.B.reason})
    # the A' crossing sub-claim: image of y = 2.4 must lie below Y = -4
    F = _blender_map(params, cfg)
    a_span_bottom = float(F(np.array([0.0, 2.4, A_PRIME[1][0]]))[1])
    verdict = CERTIFIED if counts["neither"] == 0 and net else FAILED
    det = {"n_curves": len(net), "counts": counts, "failures": reasons[:5],
           "A_image_bottom": a_span_bottom}
    return ConditionResult("H5", verdict, margin, 0, False, det)


# strip game -------------------------------------------------------------------

@dataclass
class StripTrace:
    """Per-step record of the strip game.

    ``rows`` hold ``step, case, width, dist, split``; ``dist`` is the
    smallest |z - z*| over the strip curves at the plane y = y*, ``split``
    marks steps where the members disagreed on the case and the game kept
    the widest sub-strip sharing one case.  When the strip (or the image of
    one of its branches) straddles W0s, ``found_step`` is set and the seed
    offset ``hit_offset`` of a curve that comes within ``hit_dist`` of W0s
    is recorded.
    """

    rows: list
    found: bool
    found_step: int | None
    hit_offset: float | None
    hit_dist: float | None
    branch: str | None
    aborted: bool
    cases: list
    min_z: float = float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "case", "width", "dist"])
        for r in self.rows:
            w.writerow([r["step"], r["case"], f"{r['width']:.12g}", f"{r['dist']:.12g}"])
        return buf.getvalue()

    def widths(self) -> list:
        return [r["width"] for r in self.rows]

    @property
    def first_split(self) -> int | None:
        for r in self.rows:
            if r.get("split"):
                return r["step"]
        return None

    def unsplit_widths(self) -> list:
        """Widths of the steps before the first split (one strip throughout)."""
        out = []
        for r in self.rows:
            out.append(r["width"])
            if r.get("split") or r["case"] not in ("A", "B"):
                break
        return out


def widths_obey(widths, c0: float, ell: int) -> bool:
    """True when w[k + ell] >= c0 * w[k] for every admissible k."""
    w = np.asarray(widths, dtype=float)
    if len(w) <= ell:
        return True
    return bool(np.all(w[ell:] >= c0 * w[:-ell]))


def strip_width(c1: VerticalCurve, c2: VerticalCurve, n: int = 257) -> float:
    """Smallest (x, z) distance between two curves over a common y grid."""
    lo = max(c1.y[0], c2.y[0])
    hi = min(c1.y[-1], c2.y[-1])
    y = np.linspace(lo, hi, n)
    x1, z1, _, _ = c1.at(y)
    x2, z2, _, _ = c2.at(y)
    return float(np.min(np.hypot(x1 - x2, z1 - z2)))


def _branch_crossing(F: BlenderMap, curve: VerticalCurve, sign: int, y_star: float):
    """z of the image of the branch y*sign > 0 at the plane Y = y*, or None."""
    ylo, yhi = (0.0, curve.y[-1]) if sign > 0 else (curve.y[0], 0.0)
    # Y is monotone on each branch since dY/dy = 2y + O(kappa, eta)
    ends = np.array([ylo, yhi])
    x, z, _, _ = curve.at(ends)
    Y = F(np.array([x, ends, z]))[1]
    if not (min(Y) <= y_star <= max(Y)):
        return None
    y, x, z, _, _ = _map_piece(F, curve, ylo, yhi, np.array([y_star]))
    if not (-40.0 <= z[0] <= 0.0):
        return None
    return float(F(np.array([x, y, z]))[2][0])


def _advance(F, curve, case, n):
    (ya, yb), _ = A_PRIME if case == "A" else B_PRIME
    img, _ = image_curve(F, curve, ya, yb, n=n)
    return img


def _runs(flags):
    """Maximal runs of True as (start, end) index pairs."""
    out, start = [], None
    for i, f in enumerate(list(flags) + [False]):
        if f and start is None:
            start = i
        elif not f and start is not None:
            out.append((start, i - 1))
            start = None
    return out


def strip_game(params: HenonParams, seed: VerticalCurve | None = None, steps: int = 50,
               config: CertConfig | None = None) -> StripTrace:
    """Iterate the H5 case selection on a strip until it straddles W0s.

    The strip is the family ``seed + (0, 0, s)`` for s in an offset interval
    (initially [-w0, 0] with w0 = ``config.strip_width``), represented by
    ``config.strip_curves`` members.  Each step applies the case shared by
    all members; if members disagree, the widest run of members sharing a
    case is kept.  A member verifying neither case aborts the game.  The
    default seed is the segment {(0, t, 0) : |t| <= 4}.
    """
    cfg = config or CertConfig()
    F = _blender_map(params, cfg)
    fp = fixed_point_Pstar(params)
    ys, zs = float(fp.y.mid), float(fp.z.mid)
    n = cfg.net_samples
    K = cfg.strip_curves
    if seed is None:
        seed = VerticalCurve.line(0.0, 0.0, 0.0, n=n, theta=cfg.theta)
    offsets = np.linspace(-cfg.strip_width, 0.0, K)
    members = [seed.shifted(s) for s in offsets]
    rows, cases = [], []
    min_z = math.inf

    def offs(curves):
        return np.array([c.crossing(ys)[1] - zs for c in curves])

    def trace(found, step, s, d, branch, aborted):
        return StripTrace(rows, found, step, s, d, branch, aborted, cases, min_z)

    for step in range(steps + 1):
        min_z = min(min_z, min(float(np.min(m.z)) for m in members))
        c = offs(members)
        width = strip_width(members[0], members[-1], n)
        dist = float(np.min(np.abs(c)))
        if bool(np.min(c) < 0 < np.max(c)) or dist < cfg.strip_tol:
            rows.append({"step": step, "case": "hit", "width": width, "dist": dist,
                         "split": False})
            s, d = _refine_hit(F, seed, offsets, c, cases, None, ys, zs, cfg)
            rows[-1]["dist"] = d
            return trace(True, step, s, d, "strip", False)
        for sign, name in ((-1, "B"), (1, "A")):
            bc = [_branch_crossing(F, m, sign, ys) for m in members]
            if all(v is not None for v in bc):
                bc = np.array(bc) - zs
                if np.min(bc) < 0 < np.max(bc):
                    rows.append({"step": step, "case": f"cross-{name}", "width": width,
                                 "dist": dist, "split": False})
                    s, d = _refine_hit(F, seed, offsets, bc, cases, sign, ys, zs, cfg)
                    rows.append({"step": step + 1, "case": "hit", "width": 0.0, "dist": d,
                                 "split": False})
                    return trace(True, step + 1, s, d, name, False)
        if step == steps:
            rows.append({"step": step, "case": "stop", "width": width, "dist": dist,
                         "split": False})
            break
        split = False
        for _ in range(8):
            res = [check_H5_case(params, m, cfg, zs, ys) for m in members]
            okA = [r.A.ok for r in res]
            okB = [r.B.ok for r in res]
            if all(okA) or all(okB):
                break
            if not all(a or b for a, b in zip(okA, okB)):
                res = None
                break
            split = True
            best = None
            order = (cfg.prefer, "B" if cfg.prefer == "A" else "A")
            for name in order:
                for i, j in _runs(okA if name == "A" else okB):
                    w = strip_width(members[i], members[j], n) if j > i else 0.0
                    if best is None or w > best[0]:
                        best = (w, i, j)
            _, i, j = best
            if j == i:
                h = 0.5 * (offsets[1] - offsets[0])
                lo, hi = max(offsets[0], offsets[i] - h), min(offsets[-1], offsets[i] + h)
            else:
                lo, hi = offsets[i], offsets[j]
            offsets = np.linspace(lo, hi, K)
            members = [_replay(F, seed, s, cases, n) for s in offsets]
        else:
            res = None
        if res is None:
            rows.append({"step": step, "case": "neither", "width": width, "dist": dist,
                         "split": split})
            return trace(False, None, None, None, None, True)
        okA = all(r.A.ok for r in res)
        okB = all(r.B.ok for r in res)
        case = cfg.prefer if (okA and okB) else ("A" if okA else "B")
        rows.append({"step": step, "case": case, "width": width, "dist": dist, "split": split})
        cases.append(case)
        members = [(r.A if case == "A" else r.B).image for r in res]
    return trace(False, None, None, None, None, False)


def _replay(F, seed, s, cases, n):
    c = seed.shifted(s)
    for case in cases:
        c = _advance(F, c, case, n)
        if c is None:
            return None
    return c


def _refine_hit(F, seed, offsets, c, cases, sign, ys, zs, cfg):
    """Bisect the seed offset between two members with opposite signs."""
    n = cfg.net_samples

    def g(s):
        cur = _replay(F, seed, s, cases, n)
        if cur is None:
            return math.nan
        if sign is None:
            return cur.crossing(ys)[1] - zs
        v = _branch_crossing(F, cur, sign, ys)
        return math.nan if v is None else v - zs

    k = int(np.argmin(np.abs(c)))
    if abs(c[k]) < cfg.strip_tol:
        return float(offsets[k]), float(abs(c[k]))
    idx = [i for i in range(len(c) - 1) if c[i] * c[i + 1] < 0]
    if not idx:
        return float(offsets[k]), float(abs(c[k]))
    i = idx[0]
    a, b = float(offsets[i]), float(offsets[i + 1])
    ga = c[i]
    best = (a, abs(ga))
    for _ in range(80):
        m = 0.5 * (a + b)
        gm = g(m)
        if not math.isfinite(gm):
            break
        if abs(gm) < best[1]:
            best = (m, abs(gm))
        if abs(gm) < cfg.strip_tol * 1e-3:
            break
        if (gm < 0) == (ga < 0):
            a, ga = m, gm
        else:
            b = m
    return best


# aggregate ----------------------------------------------------------------------

def certify(params: HenonParams, config: CertConfig | None = None) -> Certificate:
    """Run every check and aggregate the verdicts.

    The overall verdict is CERTIFIED only when H1 to H4 are interval-certified
    and the sampled H5 net and the strip game pass.
    """
    cfg = config or CertConfig()
    conds = {}
    ab = compute_AB_enclosures(params, cfg.depth, cfg)
    conds.update(check_H1_H2(params, cfg.depth, cfg, ab))
    conds.update(check_H3(params, cfg.theta, cfg.depth, cfg))
    conds["H4"] = check_H4(params, cfg.theta)
    conds["H5"] = check_H5_sampled(params, cfg)
    subclaims = [i_plus_subclaim(params, ab)]
    h4 = conds["H4"].details
    subclaims.append({"name": "z* in (-21.2, -12.6)",
                      "verdict": "PASSED" if h4.get("z_star_in_claimed_range") else "FAILED",
                      "z_star": h4.get("z_star")})
    subclaims.append({"name": "A' image reaches below Y = -4",
                      "verdict": "PASSED" if conds["H5"].details.get("A_image_bottom", 0) < -4
                      else "FAILED",
                      "A_image_bottom": conds["H5"].details.get("A_image_bottom")})
    if cfg.run_strip and conds["H4"].verdict != FAILED:
        tr = strip_game(params, None, cfg.strip_steps, cfg)
        # the game supports H5 when every member verifies a case at every step
        det = {"found_step": tr.found_step, "hit_dist": tr.hit_dist, "branch": tr.branch,
               "reached_W0s": bool(tr.found and tr.hit_dist is not None
                                   and tr.hit_dist < cfg.strip_tol),
               "first_split": tr.first_split, "steps_run": len(tr.cases),
               "cases": "".join(tr.cases), "min_z": tr.min_z}
        h3 = conds["H3i"].details
        if "c0_star" in h3:
            det["widths_obey_growth"] = widths_obey(tr.unsplit_widths(), h3["c0_star"],
                                                    h3["ell"])
        conds["strip"] = ConditionResult(
            "strip", FAILED if tr.aborted else CERTIFIED,
            float(len(tr.cases)), 0, False, det)
    overall = _combine(c.verdict for c in conds.values())
    cfg_d = asdict(cfg)
    return Certificate(params.as_dict(), conds, subclaims, overall, cfg_d)


# parameter sweep ---------------------------------------------------------------

def _open_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """n points strictly inside (lo, hi), cell midpoints."""
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def i_plus_oracle(params: HenonParams) -> float:
    """Inner end of I+ at z = -40 for eta = 0: sqrt(-4 - mu - 1600 kappa)."""
    return math.sqrt(-4.0 - params.mu - params.kappa * 1600.0)


def scan_point(params: HenonParams, config: CertConfig | None = None,
               full: bool = False) -> dict:
    """Sub-claim verdicts at one parameter, optionally with the full certificate."""
    ip = i_plus_subclaim(params)
    fp = check_H4(params, (config or CertConfig()).theta)
    row = {"mu": params.mu, "kappa": params.kappa, "xi": params.xi, "eta": params.eta,
           "i_plus": ip["verdict"], "i_plus_x_lo": ip["x_lo"],
           "i_minus": ip["minus_verdict"],
           "H4": fp.verdict, "z_star_in_range": bool(fp.details.get("z_star_in_claimed_range")),
           "y_star_in_range": bool(fp.details.get("y_star_in_claimed_range"))}
    if params.eta == 0 and -4.0 - params.mu - params.kappa * 1600.0 >= 0:
        row["oracle_x_lo"] = i_plus_oracle(params)
    if full:
        row["overall"] = certify(params, config).overall
    return row


def scan_O(shape=(16, 8, 8), box: BlenderBoxSpec | None = None, eta: float = 0.0,
           config: CertConfig | None = None, full: bool = False) -> list:
    """Sweep a grid of cell midpoints of the parameter box (mu, kappa, xi).

    Each row reports the I+ slice sub-claim, the fixed-point bounds and,
    with ``full``, the overall certificate verdict, so the certified
    sub-region of the box can be mapped.
    """
    box = box or DEFAULT_BOX
    rows = []
    for mu in _open_grid(*box.mu, shape[0]):
        for ka in _open_grid(*box.kappa, shape[1]):
            for xi in _open_grid(*box.xi, shape[2]):
                p = HenonParams(xi=float(xi), mu=float(mu), kappa=float(ka), eta=eta,
                                form="standard" if eta else "conjugate")
                rows.append(scan_point(p, config, full))
    return rows
