"""Intervals, boxes, cone fields and adaptive box subdivision.

Every interval operation rounds outward by one unit in the last place, so a
result always encloses the exact result of the operation on the exact
operands.  ``Interval`` works both on Python floats and on numpy arrays of
equal shape; the array form is used by the cone checks to process a whole
net of directions in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

_INF = math.inf


def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


class Interval:
    """Closed interval ``[lo, hi]`` with outward-rounded arithmetic.

    Parameters
    ----------
    lo, hi : float or ndarray
        End points.  ``hi`` defaults to ``lo`` (a degenerate interval).

    Notes
    -----
    A float operation returns the correctly rounded result, so moving it one
    ulp outward gives an enclosure of the exact value.  Division by an
    interval containing zero raises ``ZeroDivisionError``.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.ndim == 0:
            lo = float(lo)
            hi = float(hi)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("interval end point is NaN")
        if np.any(lo > hi):
            raise ValueError(f"empty interval: lo={lo!r} > hi={hi!r}")
        self.lo = lo
        self.hi = hi

    # construction helpers
    @classmethod
    def hull(cls, *values) -> "Interval":
        """Smallest interval containing the given floats or intervals."""
        los, his = [], []
        for v in values:
            v = as_interval(v)
            los.append(v.lo)
            his.append(v.hi)
        return cls(np.minimum.reduce(los), np.maximum.reduce(his))

    @classmethod
    def _raw(cls, lo, hi) -> "Interval":
        obj = cls.__new__(cls)
        if np.ndim(lo) == 0:
            lo, hi = float(lo), float(hi)
        obj.lo = lo
        obj.hi = hi
        return obj

    # basic properties
    @property
    def width(self):
        return _up(self.hi - self.lo)

    @property
    def mid(self):
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def mag(self):
        """Largest absolute value in the interval."""
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    @property
    def mig(self):
        """Smallest absolute value in the interval."""
        out = np.minimum(np.abs(self.lo), np.abs(self.hi))
        return np.where((self.lo <= 0) & (self.hi >= 0), 0.0, out)

    def contains(self, x) -> bool:
        x = as_interval(x)
        return bool(np.all((self.lo <= x.lo) & (x.hi <= self.hi)))

    def contains_zero(self) -> bool:
        return bool(np.any((self.lo <= 0) & (self.hi >= 0)))

    def interior_contains(self, x) -> bool:
        x = as_interval(x)
        return bool(np.all((self.lo < x.lo) & (x.hi < self.hi)))

    def overlaps(self, other) -> bool:
        other = as_interval(other)
        return bool(np.any((self.lo <= other.hi) & (other.lo <= self.hi)))

    def intersect(self, other) -> "Interval | None":
        other = as_interval(other)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return None
        return Interval(lo, hi)

    def bisect(self) -> tuple["Interval", "Interval"]:
        m = self.mid
        return Interval(self.lo, m), Interval(m, self.hi)

    # arithmetic
    def __add__(self, other):
        other = as_interval(other)
        return Interval._raw(_down(self.lo + other.lo), _up(self.hi + other.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = as_interval(other)
        return Interval._raw(_down(self.lo - other.hi), _up(self.hi - other.lo))

    def __rsub__(self, other):
        return as_interval(other) - self

    def __mul__(self, other):
        other = as_interval(other)
        p = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        lo = np.minimum.reduce(p)
        hi = np.maximum.reduce(p)
        # a zero product is exact only when a factor is zero (not underflow)
        zero_lo = (lo == 0) & _has_zero_factor(self, other)
        zero_hi = (hi == 0) & _has_zero_factor(self, other)
        return Interval._raw(np.where(zero_lo, 0.0, _down(lo)),
                             np.where(zero_hi, 0.0, _up(hi)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_interval(other)
        if other.contains_zero():
            raise ZeroDivisionError("interval divisor contains zero")
        q = (self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi)
        lo = np.minimum.reduce(q)
        hi = np.maximum.reduce(q)
        return Interval._raw(_down(lo), _up(hi))

    def __rtruediv__(self, other):
        return as_interval(other) / self

    def sqr(self) -> "Interval":
        """Square, tighter than ``self * self`` when the interval spans 0."""
        a = self.lo * self.lo
        b = self.hi * self.hi
        hi = np.maximum(a, b)
        spans = (self.lo <= 0) & (self.hi >= 0)
        lo = np.where(spans, 0.0, np.maximum(_down(np.minimum(a, b)), 0.0))
        return Interval._raw(lo, _up(hi))

    def __pow__(self, k: int):
        if k != 2:
            raise NotImplementedError("only squaring is supported")
        return self.sqr()

    def sqrt(self) -> "Interval":
        # restricted to the non-negative part, as usual for interval sqrt
        if np.any(self.hi < 0):
            raise ValueError("sqrt of a negative interval")
        base = np.maximum(self.lo, 0.0)
        lo = np.where(base == 0, 0.0, np.maximum(_down(np.sqrt(base)), 0.0))
        hi = np.where(self.hi == 0, 0.0, _up(np.sqrt(self.hi)))
        return Interval._raw(lo, hi)

    def __abs__(self):
        return Interval._raw(self.mig, self.mag)

    # order predicates (certain comparisons)
    def certainly_lt(self, other) -> bool:
        return bool(np.all(self.hi < as_interval(other).lo))

    def certainly_gt(self, other) -> bool:
        return bool(np.all(self.lo > as_interval(other).hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return bool(np.all(self.lo == other.lo) and np.all(self.hi == other.hi))

    def __hash__(self):
        return hash((float(np.min(self.lo)), float(np.max(self.hi))))


def _has_zero_factor(a: "Interval", b: "Interval"):
    return (a.lo == 0) | (a.hi == 0) | (b.lo == 0) | (b.hi == 0)


def as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval(x, x)


def imax(a: Interval, b: Interval) -> Interval:
    a, b = as_interval(a), as_interval(b)
    return Interval._raw(np.maximum(a.lo, b.lo), np.maximum(a.hi, b.hi))


@dataclass(frozen=True)
class IBox3:
    """Axis-aligned closed box ``x * y * z`` of intervals."""

    x: Interval
    y: Interval
    z: Interval

    @classmethod
    def from_bounds(cls, xb, yb, zb) -> "IBox3":
        return cls(Interval(*xb), Interval(*yb), Interval(*zb))

    @classmethod
    def point(cls, p) -> "IBox3":
        return cls(Interval(p[0]), Interval(p[1]), Interval(p[2]))

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def __getitem__(self, i):
        return (self.x, self.y, self.z)[i]

    @property
    def widths(self):
        return (float(self.x.hi - self.x.lo), float(self.y.hi - self.y.lo),
                float(self.z.hi - self.z.lo))

    def split(self, axes: Sequence[int] = (0, 1, 2)) -> list["IBox3"]:
        """Bisect along ``axes``; ``2**len(axes)`` children in a fixed order."""
        parts = [[c] for c in self]
        for a in axes:
            parts[a] = list(parts[a][0].bisect())
        return [IBox3(px, py, pz) for px in parts[0] for py in parts[1] for pz in parts[2]]

    def intersect(self, other: "IBox3") -> "IBox3 | None":
        comps = [a.intersect(b) for a, b in zip(self, other)]
        if any(c is None for c in comps):
            return None
        return IBox3(*comps)

    def overlaps(self, other: "IBox3") -> bool:
        return all(a.overlaps(b) for a, b in zip(self, other))

    def contains_box(self, other: "IBox3") -> bool:
        return all(a.contains(b) for a, b in zip(self, other))

    def contains_point(self, p) -> bool:
        return all(c.lo <= v <= c.hi for c, v in zip(self, p))


CONE_KINDS = ("u", "uu", "s")


@dataclass(frozen=True)
class Cone:
    """Quadratic cone around a coordinate axis, constant over the box.

    ``u``:  theta*|u| <= sqrt(v^2 + w^2)
    ``uu``: theta*sqrt(u^2 + w^2) <= |v|
    ``s``:  theta*sqrt(v^2 + w^2) <= |u|
    """

    kind: str
    theta: float = 2.0

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if not self.theta > 1:
            raise ValueError("cone aperture theta must exceed 1")

    def split(self, v):
        """Return (axis part, transverse part) magnitudes of a vector."""
        u, vv, w = v
        if self.kind == "u":
            return math.hypot(vv, w), abs(u)
        if self.kind == "uu":
            return abs(vv), math.hypot(u, w)
        return abs(u), math.hypot(vv, w)


def cone_contains(cone: Cone, v) -> bool:
    """True iff ``v`` satisfies the defining inequality of ``cone``.

    The zero vector belongs to every cone.
    """
    v = tuple(float(c) for c in v)
    if len(v) != 3 or not all(math.isfinite(c) for c in v):
        raise ValueError("cone_contains needs a finite 3-vector")
    axis, trans = cone.split(v)
    return cone.theta * trans <= axis


def star_norm(v) -> float:
    """The norm max(|u|, sqrt(v^2 + w^2))."""
    return max(abs(v[0]), math.hypot(v[1], v[2]))


# interval 3x3 matrices are nested tuples of Interval
IMatrix = Sequence[Sequence[Interval]]


def imatrix(rows) -> tuple:
    return tuple(tuple(as_interval(e) for e in row) for row in rows)


def imatvec(M: IMatrix, v: Sequence[Interval]) -> tuple[Interval, Interval, Interval]:
    out = []
    for row in M:
        acc = row[0] * v[0]
        acc = acc + row[1] * v[1]
        acc = acc + row[2] * v[2]
        out.append(acc)
    return tuple(out)


def _arc_boxes(n: int):
    """Interval boxes (cos, sin) covering the unit circle in ``n`` arcs."""
    phi = np.linspace(0.0, 2 * math.pi, n + 1)
    a, b = phi[:-1], phi[1:]
    ca, cb = np.cos(a), np.cos(b)
    sa, sb = np.sin(a), np.sin(b)
    clo, chi = np.minimum(ca, cb), np.maximum(ca, cb)
    slo, shi = np.minimum(sa, sb), np.maximum(sa, sb)
    # axis extrema inside an arc
    for k in range(5):
        ang = k * math.pi / 2
        inside = (a < ang) & (ang < b)
        c, s = round(math.cos(ang)), round(math.sin(ang))
        clo = np.where(inside, np.minimum(clo, c), clo)
        chi = np.where(inside, np.maximum(chi, c), chi)
        slo = np.where(inside, np.minimum(slo, s), slo)
        shi = np.where(inside, np.maximum(shi, s), shi)
    # libm cos/sin are accurate to well under 1e-15 on [0, 2pi]
    pad = 1e-15
    return (Interval(clo - pad, chi + pad), Interval(slo - pad, shi + pad))


def _section(kind: str, theta: float, n: int, radial_splits: int = 1):
    """Interval boxes whose union contains a nonzero multiple of every
    direction of the cone (one nappe suffices: cones are symmetric)."""
    cs, sn = _arc_boxes(n)
    k = cs.lo.shape[0]
    if kind == "u":
        lo = np.full(k, -1.0 / theta)
        r = Interval(lo, -lo)
        return (r, cs, sn)
    # r in [0, 1/theta] for uu and s, optionally split radially
    edges = np.linspace(0.0, 1.0 / theta, radial_splits + 1)
    cs_l, sn_l, r_l = [], [], []
    for i in range(radial_splits):
        cs_l.append(cs)
        sn_l.append(sn)
        r_l.append(Interval(np.full(k, edges[i]), np.full(k, _up(edges[i + 1]))))
    cs = Interval(np.concatenate([c.lo for c in cs_l]), np.concatenate([c.hi for c in cs_l]))
    sn = Interval(np.concatenate([c.lo for c in sn_l]), np.concatenate([c.hi for c in sn_l]))
    r = Interval(np.concatenate([c.lo for c in r_l]), np.concatenate([c.hi for c in r_l]))
    one = Interval(np.ones_like(r.lo))
    if kind == "uu":
        return (r * cs, one, r * sn)
    return (one, r * cs, r * sn)


def _axis_trans(kind: str, w):
    """Interval enclosures of (axis magnitude, transverse magnitude)."""
    u, v, x = w
    if kind == "u":
        return (v.sqr() + x.sqr()).sqrt(), abs(u)
    if kind == "uu":
        return abs(v), (u.sqr() + x.sqr()).sqrt()
    return abs(u), (v.sqr() + x.sqr()).sqrt()


def _check_matrix(M):
    for row in M:
        for e in row:
            if not (np.all(np.isfinite(e.lo)) and np.all(np.isfinite(e.hi))):
                raise ValueError("interval matrix entry is unbounded")


@dataclass
class ConeMapResult:
    ok: bool
    slack: float
    expansion: float


def cone_map_check(src: Cone, M: IMatrix, dst: Cone, margin: float = 1e-12,
                   n_dirs: int = 64) -> ConeMapResult:
    """Rigorous check that ``M`` maps ``src`` into the interior of ``dst``.

    The source cone is covered by ``n_dirs`` interval boxes (arcs of the
    boundary circle times the radial range) and each box is pushed through the
    interval matrix.  ``slack`` is a lower bound of
    ``(A - theta*T) / (A + theta*T)`` over all image vectors, where ``A`` and
    ``T`` are the axis and transverse magnitudes in the target cone.
    ``expansion`` is a lower bound of ``|Mv|_* / |v|_*`` over the source cone.
    """
    _check_matrix(M)
    if margin <= 0:
        raise ValueError("margin must be positive")
    box = _section(src.kind, src.theta, n_dirs)
    img = imatvec(M, box)
    A, T = _axis_trans(dst.kind, img)
    tT = T * dst.theta
    num = A - tT
    den = A + tT
    if np.any(den.lo <= 0):
        slack = -1.0
    else:
        slack = float(np.min((num / den).lo))
    # |.|_* expansion
    src_star = imax(abs(box[0]), (box[1].sqr() + box[2].sqr()).sqrt())
    img_star = imax(abs(img[0]), (img[1].sqr() + img[2].sqr()).sqrt())
    ratio_lo = img_star.lo / _up(src_star.hi)
    expansion = float(np.min(_down(ratio_lo)))
    return ConeMapResult(ok=slack >= margin, slack=slack, expansion=expansion)


def _first_column_zero(M) -> bool:
    return all(np.all(M[i][0].lo == 0) and np.all(M[i][0].hi == 0) for i in range(3))


def cone_mapped_into_interior(src: Cone, M: IMatrix, dst: Cone, margin: float = 1e-12,
                              n_dirs: int = 64) -> bool:
    """Certificate that the linear map ``M`` sends ``src`` into ``int(dst)``.

    For the ``s`` kind the inverse-map convention applies: ``M`` is the
    forward derivative and the statement is that ``M^{-1}`` sends ``src`` into
    ``int(dst)``.  When the first column of ``M`` is exactly zero (the kernel
    of a cu-Henon endomorphism) this holds trivially.  Otherwise it is checked
    through the equivalent forward statement that ``M`` maps the closed
    complement of ``dst`` into its own interior.

    A ``True`` answer is a certificate; ``False`` is inconclusive.
    """
    _check_matrix(M)
    if src.kind == "s" or dst.kind == "s":
        if src.kind != dst.kind:
            raise ValueError("s cones are only compared with s cones")
        if _first_column_zero(M):
            return True
        # complement of s(theta) is the u-type cone with aperture 1/theta
        return _complement_check(M, dst.theta, margin, n_dirs)
    return cone_map_check(src, M, dst, margin, n_dirs).ok


def _complement_check(M, theta, margin, n_dirs) -> bool:
    # directions (s, cos, sin) with |s| <= theta
    cs, sn = _arc_boxes(n_dirs)
    r = Interval(np.full(cs.lo.shape, -theta), np.full(cs.lo.shape, theta))
    u1, v1, w1 = imatvec(M, (r, cs, sn))
    rho = (v1.sqr() + w1.sqr()).sqrt()
    num = rho * theta - abs(u1)
    den = rho * theta + abs(u1)
    if np.any(den.lo <= 0):
        return False
    return float(np.min((num / den).lo)) >= margin


def s_cone_inverse_expansion(M: IMatrix, theta: float, n_dirs: int = 64,
                             max_splits: int = 12) -> float:
    """Lower bound on ``|M^{-1} w| / |w|`` (Euclidean) for ``w`` in the ``s`` cone.

    Works on the source side: a vector ``v = (1, r cos, r sin)`` either maps
    certainly outside the ``s`` cone, or its image has norm at most ``q``;
    since ``|v| >= 1`` this gives ``|M^{-1} w| / |w| >= 1 / q``.  The radial
    range is bisected where neither holds.  Returns ``inf`` when the first
    column of ``M`` vanishes (kernel direction) and ``0`` when undecided.
    """
    _check_matrix(M)
    if _first_column_zero(M):
        return math.inf
    cs, sn = _arc_boxes(n_dirs)
    pending = [(cs, sn, 0.0, 1.0 / theta)]
    worst = 0.0
    for _ in range(max_splits + 1):
        nxt = []
        for c, s, r0, r1 in pending:
            r = Interval(np.full(c.lo.shape, r0), np.full(c.lo.shape, r1))
            one = Interval(np.ones_like(c.lo))
            img = imatvec(M, (one, r * c, r * s))
            A, T = _axis_trans("s", img)
            outside = (T * theta).lo > A.hi
            norm = (img[0].sqr() + img[1].sqr() + img[2].sqr()).sqrt()
            small = norm.hi < 1.0
            done = small & ~outside
            if np.any(done):
                worst = max(worst, float(np.max(norm.hi[done])))
            keep = ~(outside | small)
            if np.any(keep):
                c2 = Interval(c.lo[keep], c.hi[keep])
                s2 = Interval(s.lo[keep], s.hi[keep])
                mid = 0.5 * (r0 + r1)
                nxt += [(c2, s2, r0, mid), (c2, s2, mid, r1)]
        if not nxt:
            return math.inf if worst == 0.0 else 1.0 / worst
        pending = nxt
    return 0.0


def _witness_candidates(kind: str, theta: float, n_dirs: int) -> np.ndarray:
    """Exact float vectors on the boundary and the axis of a cone, as rows."""
    phi = 2 * np.pi * np.arange(n_dirs) / n_dirs
    c, s = np.cos(phi), np.sin(phi)
    r = 1.0 / theta * (1 - 1e-9)
    zero, one = np.zeros(n_dirs), np.ones(n_dirs)
    if kind == "u":
        rows = [np.stack([r * one, c, s], 1), np.stack([zero, c, s], 1)]
    elif kind == "uu":
        rows = [np.stack([r * c, one, r * s], 1), np.array([[0.0, 1.0, 0.0]])]
    else:
        rows = [np.stack([one, r * c, r * s], 1), np.array([[1.0, 0.0, 0.0]])]
    return np.concatenate(rows)


def _in_cone_certain(kind: str, theta: float, v) -> np.ndarray:
    A, T = _axis_trans(kind, v)
    return np.asarray((T * theta).hi <= A.lo)


def cone_violation_witness(src: Cone, M, dst: Cone, n_dirs: int = 64):
    """Search for a vector of ``src`` whose image is certainly outside ``dst``.

    ``M`` is an interval matrix (usually degenerate, the Jacobian at one
    exact point).  Candidate vectors are exact floating-point vectors on the
    boundary of ``src`` and on its axis; membership in ``src`` is checked in
    interval arithmetic too.  Returns the witness vector or ``None``.  A
    witness proves that the cone condition fails for the map at that point.
    """
    _check_matrix(M)
    cands = _witness_candidates(src.kind, src.theta, n_dirs)
    vi = tuple(Interval(cands[:, i]) for i in range(3))
    ok = _in_cone_certain(src.kind, src.theta, vi)
    A1, T1 = _axis_trans(dst.kind, imatvec(M, vi))
    out = ok & np.asarray((T1 * dst.theta).lo > A1.hi)
    hits = np.flatnonzero(out)
    return tuple(cands[hits[0]]) if len(hits) else None


def _istar_norm(v):
    return imax(abs(v[0]), (v[1].sqr() + v[2].sqr()).sqrt())


def expansion_witness(cone: Cone, M, n_dirs: int = 64):
    """A vector of ``cone`` that ``M`` certainly does not expand.

    Returns an exact float vector v in the cone with |Mv|_* < |v|_* in
    interval arithmetic, or ``None``.  A witness shows that no expansion
    constant larger than 1 holds at that point.
    """
    _check_matrix(M)
    cands = _witness_candidates(cone.kind, cone.theta, n_dirs)
    vi = tuple(Interval(cands[:, i]) for i in range(3))
    ok = _in_cone_certain(cone.kind, cone.theta, vi)
    shrink = np.asarray(_istar_norm(imatvec(M, vi)).hi < _istar_norm(vi).lo)
    hits = np.flatnonzero(ok & shrink)
    return tuple(cands[hits[0]]) if len(hits) else None


# boundary pieces of a box -------------------------------------------------

BOUNDARY_LABELS = ("ss", "uu", "u")


@dataclass(frozen=True)
class BoundaryPiece:
    """Labelled part of the boundary of a box, as a list of closed faces.

    ``ss``: faces x = const; ``uu``: faces y = const; ``u``: faces y = const
    and z = const (so ``uu`` is contained in ``u``).
    """

    label: str
    faces: tuple

    @classmethod
    def of(cls, box: IBox3, label: str) -> "BoundaryPiece":
        if label not in BOUNDARY_LABELS:
            raise ValueError(f"unknown boundary label {label!r}")
        axes = {"ss": (0,), "uu": (1,), "u": (1, 2)}[label]
        faces = []
        for a in axes:
            comp = box[a]
            for end in (comp.lo, comp.hi):
                parts = list(box)
                parts[a] = Interval(end)
                faces.append(IBox3(*parts))
        return cls(label, tuple(faces))

    def contains_point(self, p) -> bool:
        return any(f.contains_point(p) for f in self.faces)


# subdivision ---------------------------------------------------------------

Predicate = Callable[[IBox3], "bool | str"]
CERTIFIED, FAILED, UNRESOLVED = "CERTIFIED", "FAILED", "UNRESOLVED"


@dataclass
class CoverReport:
    """Leaves of an adaptive subdivision.

    ``certified`` and ``unresolved`` hold ``(index, depth, box)`` triples in
    depth-first order; ``failed`` holds leaves where the predicate returned
    ``"FAILED"`` (a certified violation).
    """

    certified: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    failed: list = field(default_factory=list)
    max_depth_used: int = 0
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.unresolved and not self.failed

    @property
    def n_leaves(self) -> int:
        return len(self.certified) + len(self.unresolved) + len(self.failed)


def subdivide(box: IBox3, predicate: Predicate, max_depth: int,
              axes: Sequence[int] = (0, 1, 2), max_evals: int | None = None,
              stop_on_failure: bool = False) -> CoverReport:
    """Bisect ``box`` until ``predicate`` certifies each leaf.

    ``predicate`` returns ``True`` (certified), ``False`` (undecided, split
    further) or the string ``"FAILED"`` (certified violation; not split).
    Leaves still undecided at ``max_depth`` are reported unresolved.  The
    traversal is depth first in a fixed child order, so the report only
    depends on the predicate.

    ``max_evals`` caps the number of predicate calls and ``stop_on_failure``
    ends the run at the first failed leaf.  In both cases the pending boxes
    are reported unresolved and ``truncated`` is set.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    rep = CoverReport()
    stack = [((), 0, box)]
    evals = 0
    while stack:
        if (max_evals is not None and evals >= max_evals) or \
                (stop_on_failure and rep.failed):
            rep.truncated = True
            rep.unresolved.extend(reversed(stack))
            break
        idx, depth, b = stack.pop()
        res = predicate(b)
        evals += 1
        rep.max_depth_used = max(rep.max_depth_used, depth)
        if isinstance(res, str):
            res = {FAILED: FAILED, CERTIFIED: True}.get(res, False)
        if res is FAILED:
            rep.failed.append((idx, depth, b))
        elif bool(res):
            rep.certified.append((idx, depth, b))
        elif depth >= max_depth:
            rep.unresolved.append((idx, depth, b))
        else:
            children = b.split(axes)
            for k in reversed(range(len(children))):
                stack.append((idx + (k,), depth + 1, children[k]))
    return rep


def leaves_tile(parent: IBox3, leaves: Iterable[IBox3]) -> bool:
    """Check that boxes tile ``parent``: volumes add up and all lie inside."""
    leaves = list(leaves)
    vol = 0.0
    for b in leaves:
        if not parent.contains_box(b):
            return False
        wx, wy, wz = b.widths
        vol += wx * wy * wz
    px, py, pz = parent.widths
    return math.isclose(vol, px * py * pz, rel_tol=1e-12)
