"""Outward-rounded interval arithmetic, range bounding and interval Newton.

`Ival` holds either scalar endpoints or numpy arrays of endpoints, so the same
expression can be evaluated on one interval or on a batch of boxes.  All
endpoint operations go through :mod:`certimeasure.rounding`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import rounding as rd

INF = np.inf

# relative and absolute slack added around library transcendentals
_REL = 2.0 ** -48
_ABS = 2.0 ** -1060
_TRIG_ABS = 2.0 ** -60


class DomainError(ValueError):
    """An interval operation was applied outside its domain."""


class NoRootError(ArithmeticError):
    """Interval Newton could not certify a root."""


class NonMonotoneError(ArithmeticError):
    """The derivative enclosure contains zero."""


def _arr(x):
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return float(a)
    return a


def _fraction_enclosure(q: Fraction) -> tuple[float, float]:
    f = float(q)
    ff = Fraction(f)
    if ff == q:
        return f, f
    if ff < q:
        return f, float(np.nextafter(f, INF))
    return float(np.nextafter(f, -INF)), f


class Ival:
    """Closed interval ``[lo, hi]`` (or a batch of them)."""

    __slots__ = ("lo", "hi")
    __array_priority__ = 1000

    def __init__(self, lo, hi=None):
        if isinstance(lo, Ival):
            lo, hi = lo.lo, lo.hi
        elif isinstance(lo, Rational) and not isinstance(lo, (int, np.integer)):
            lo, h = _fraction_enclosure(Fraction(lo))
            if hi is None:
                hi = h
        if hi is None:
            hi = lo
        elif isinstance(hi, Rational) and not isinstance(hi, (int, np.integer)):
            hi = _fraction_enclosure(Fraction(hi))[1]
        lo = _arr(lo)
        hi = _arr(hi)
        with np.errstate(invalid="ignore"):
            bad = np.isnan(lo) | np.isnan(hi) | (lo > hi)
        if np.any(bad):
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo, hi) -> Ival:
        obj = cls.__new__(cls)
        obj.lo = _arr(lo)
        obj.hi = _arr(hi)
        return obj

    @classmethod
    def exact(cls, q) -> Ival:
        """Tightest enclosure of a rational (or float) number."""
        return cls(Fraction(q))

    @classmethod
    def pi(cls) -> Ival:
        p = float(np.pi)  # round-to-nearest pi lies below pi
        return cls._raw(p, float(np.nextafter(p, INF)))

    @classmethod
    def hull_of(cls, items) -> Ival:
        items = [as_ival(v) for v in items]
        return cls._raw(min(float(np.min(v.lo)) for v in items), max(float(np.max(v.hi)) for v in items))

    # ------------------------------------------------------------ accessors
    @property
    def shape(self):
        return np.shape(self.lo)

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx) -> Ival:
        return Ival._raw(np.asarray(self.lo)[idx], np.asarray(self.hi)[idx])

    def broadcast(self, shape) -> Ival:
        return Ival._raw(np.broadcast_to(self.lo, shape).copy(), np.broadcast_to(self.hi, shape).copy())

    @property
    def mid(self):
        with np.errstate(all="ignore"):
            m = 0.5 * self.lo + 0.5 * self.hi
            m = np.where(np.isinf(self.lo) & np.isinf(self.hi), 0.0, m)
            m = np.where(np.isinf(self.lo) & ~np.isinf(self.hi), np.minimum(self.hi, -1.0) * 2.0, m)
            m = np.where(np.isinf(self.hi) & ~np.isinf(self.lo), np.maximum(self.lo, 1.0) * 2.0, m)
            m = np.clip(m, self.lo, self.hi)
        return _arr(m)

    @property
    def width(self):
        return rd.sub_up(self.hi, self.lo)

    @property
    def rad(self):
        return rd.mul_up(self.width, 0.5)

    @property
    def mag(self):
        return _arr(np.maximum(np.abs(self.lo), np.abs(self.hi)))

    @property
    def mig(self):
        return _arr(np.where((self.lo <= 0) & (self.hi >= 0), 0.0, np.minimum(np.abs(self.lo), np.abs(self.hi))))

    def contains(self, x):
        if isinstance(x, Ival):
            return (self.lo <= x.lo) & (x.hi <= self.hi)
        if isinstance(x, Fraction):
            return (Fraction(float(self.lo)) <= x) & (x <= Fraction(float(self.hi)))
        return (self.lo <= x) & (x <= self.hi)

    def subset(self, other: Ival):
        return (other.lo <= self.lo) & (self.hi <= other.hi)

    def contains_zero(self):
        return (self.lo <= 0) & (self.hi >= 0)

    def is_point(self):
        return self.lo == self.hi

    def intersect(self, other) -> tuple[Ival, object]:
        """Intersection and a mask (or bool) that is True where it is empty."""
        other = as_ival(other)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        empty = lo > hi
        return Ival._raw(np.where(empty, self.lo, lo), np.where(empty, self.hi, hi)), (
            bool(empty) if np.ndim(empty) == 0 else empty
        )

    def hull(self, other) -> Ival:
        other = as_ival(other)
        return Ival._raw(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def widen(self, r) -> Ival:
        return Ival._raw(rd.sub_down(self.lo, r), rd.add_up(self.hi, r))

    def __repr__(self):
        if np.ndim(self.lo) == 0:
            return f"Ival({self.lo!r}, {self.hi!r})"
        return f"Ival(lo={self.lo!r}, hi={self.hi!r})"

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    # ----------------------------------------------------------- arithmetic
    def __neg__(self):
        return Ival._raw(np.negative(self.hi), np.negative(self.lo))

    def __pos__(self):
        return self

    def __add__(self, other):
        o = as_ival(other)
        return Ival._raw(rd.add_down(self.lo, o.lo), rd.add_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = as_ival(other)
        return Ival._raw(rd.sub_down(self.lo, o.hi), rd.sub_up(self.hi, o.lo))

    def __rsub__(self, other):
        return as_ival(other) - self

    def __mul__(self, other):
        o = as_ival(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        lo = np.minimum(
            np.minimum(rd.mul_down(a, c), rd.mul_down(a, d)),
            np.minimum(rd.mul_down(b, c), rd.mul_down(b, d)),
        )
        hi = np.maximum(
            np.maximum(rd.mul_up(a, c), rd.mul_up(a, d)),
            np.maximum(rd.mul_up(b, c), rd.mul_up(b, d)),
        )
        return Ival._raw(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = as_ival(other)
        if np.any(o.contains_zero()):
            raise DomainError("division by an interval containing 0")
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        with np.errstate(all="ignore"):
            lows = [rd.div_down(a, c), rd.div_down(a, d), rd.div_down(b, c), rd.div_down(b, d)]
            highs = [rd.div_up(a, c), rd.div_up(a, d), rd.div_up(b, c), rd.div_up(b, d)]
        lo = lows[0]
        hi = highs[0]
        for v in lows[1:]:
            lo = np.fmin(lo, v)
        for v in highs[1:]:
            hi = np.fmax(hi, v)
        # inf/inf has no meaning for endpoints; fall back to the full line there
        lo = np.where(np.isnan(lo), -INF, lo)
        hi = np.where(np.isnan(hi), INF, hi)
        return Ival._raw(lo, hi)

    def __rtruediv__(self, other):
        return as_ival(other) / self

    def __pow__(self, e):
        return ipow(self, e)

    def __abs__(self):
        return iabs(self)

    def sqr(self):
        return ipow(self, 2)

    def sqrt(self):
        return isqrt(self)

    def exp(self):
        return iexp(self)

    def log(self):
        return ilog(self)

    def sin(self):
        return isin(self)

    def cos(self):
        return icos(self)

    def recip(self):
        return 1.0 / self

    # ------------------------------------------------------------ ordering
    def certainly_lt(self, other):
        return self.hi < as_ival(other).lo

    def certainly_le(self, other):
        return self.hi <= as_ival(other).lo

    def certainly_gt(self, other):
        return self.lo > as_ival(other).hi

    def certainly_ge(self, other):
        return self.lo >= as_ival(other).hi


def as_ival(x) -> Ival:
    if isinstance(x, Ival):
        return x
    if isinstance(x, Fraction):
        return Ival(x)
    a = _arr(x)
    return Ival._raw(a, a)


def hull(a, b) -> Ival:
    return as_ival(a).hull(b)


# ----------------------------------------------------------- elementary functions
def _widen_down(v):
    with np.errstate(all="ignore"):
        w = v - np.abs(v) * _REL - _ABS
    return np.where(np.isinf(v), v, w)


def _widen_up(v):
    with np.errstate(all="ignore"):
        w = v + np.abs(v) * _REL + _ABS
    return np.where(np.isinf(v), v, w)


def iabs(x: Ival) -> Ival:
    x = as_ival(x)
    lo = np.where(x.lo >= 0, x.lo, np.where(x.hi <= 0, -x.hi, 0.0))
    hi = np.maximum(np.abs(x.lo), np.abs(x.hi))
    return Ival._raw(lo, hi)


def iexp(x: Ival) -> Ival:
    x = as_ival(x)
    with np.errstate(over="ignore"):
        lo = np.maximum(_widen_down(np.exp(x.lo)), 0.0)
        hi = _widen_up(np.exp(x.hi))
    return Ival._raw(lo, hi)


def _log_ext(x: Ival) -> Ival:
    """log allowing a zero lower endpoint (mapped to -inf)."""
    with np.errstate(divide="ignore"):
        lo = _widen_down(np.log(x.lo))
        hi = _widen_up(np.log(x.hi))
    # log(1) is exactly 0 in every libm we rely on; keep it tight
    lo = np.where(x.lo == 1.0, 0.0, lo)
    hi = np.where(x.hi == 1.0, 0.0, hi)
    return Ival._raw(lo, hi)


def ilog(x: Ival) -> Ival:
    x = as_ival(x)
    if np.any(x.lo <= 0):
        raise DomainError(f"log of an interval touching or below 0 (lo={np.min(x.lo)})")
    return _log_ext(x)


def isqrt(x: Ival) -> Ival:
    x = as_ival(x)
    if np.any(x.lo < 0):
        raise DomainError("sqrt of an interval reaching below 0")
    return Ival._raw(rd.sqrt_down(x.lo), rd.sqrt_up(x.hi))


def _int_pow_pos(lo, hi, k):
    rlo = np.ones_like(np.asarray(lo, dtype=float))
    rhi = np.ones_like(np.asarray(hi, dtype=float))
    for _ in range(k):
        rlo = rd.mul_down(rlo, lo)
        rhi = rd.mul_up(rhi, hi)
    return rlo, rhi


def _pos_pow(x: Ival, r: Fraction) -> Ival:
    """x**r for x >= 0."""
    if r.denominator == 1:
        k = abs(r.numerator)
        lo, hi = _int_pow_pos(x.lo, x.hi, k)
        res = Ival._raw(lo, hi)
        if r < 0:
            if np.any(x.lo == 0):
                with np.errstate(divide="ignore"):
                    ilo = rd.div_down(1.0, hi)
                    ihi = np.where(lo == 0, INF, rd.div_up(1.0, np.where(lo == 0, 1.0, lo)))
                return Ival._raw(ilo, ihi)
            res = 1.0 / res
        return res
    # a zero lower endpoint gives log = -inf and hence the limit 0 (or +inf)
    lg = _log_ext(x)
    y = Ival(r) * lg
    return iexp(y)


def ipow(x: Ival, e) -> Ival:
    """Integer or rational power.  Rational exponents with an odd denominator
    extend to negative bases by odd/even symmetry."""
    x = as_ival(x)
    r = Fraction(e) if not isinstance(e, Fraction) else e
    if isinstance(e, float) and Fraction(e).denominator > 2 ** 20:
        raise DomainError("pow requires a rational exponent p/q")
    if r == 0:
        return Ival._raw(np.ones_like(np.asarray(x.lo, float)), np.ones_like(np.asarray(x.hi, float)))
    neg = np.asarray(x.lo) < 0
    if not np.any(neg):
        return _pos_pow(x, r)
    if r.denominator % 2 == 0:
        raise DomainError("even root of an interval containing negative numbers")
    if r < 0 and np.any(x.contains_zero()):
        raise DomainError("negative power of an interval containing 0")
    odd = r.numerator % 2 != 0
    # split into the nonnegative part and the mirrored negative part
    plo = np.maximum(x.lo, 0.0)
    phi = np.maximum(x.hi, 0.0)
    nlo = np.maximum(-x.hi, 0.0)
    nhi = np.maximum(-x.lo, 0.0)
    P = _pos_pow(Ival._raw(plo, phi), r)
    N = _pos_pow(Ival._raw(nlo, nhi), r)
    has_pos = np.asarray(x.hi) >= 0
    has_neg = np.asarray(x.lo) < 0
    if odd:
        N = -N
    lo = np.where(has_pos & has_neg, np.minimum(P.lo, N.lo), np.where(has_neg, N.lo, P.lo))
    hi = np.where(has_pos & has_neg, np.maximum(P.hi, N.hi), np.where(has_neg, N.hi, P.hi))
    return Ival._raw(lo, hi)


def _contains_phase(x: Ival, phase: Ival):
    """Mask of boxes that may contain a point ``phase + 2 pi k``."""
    two_pi = Ival.pi() * 2.0
    left = ((Ival._raw(x.lo, x.lo) - phase) / two_pi).lo
    right = ((Ival._raw(x.hi, x.hi) - phase) / two_pi).hi
    with np.errstate(invalid="ignore"):
        return np.floor(right) >= np.ceil(left)


def _trig(x: Ival, fn, max_phase: Ival, min_phase: Ival) -> Ival:
    x = as_ival(x)
    with np.errstate(invalid="ignore"):
        a = fn(x.lo)
        b = fn(x.hi)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    lo = lo - np.abs(lo) * _REL - _TRIG_ABS
    hi = hi + np.abs(hi) * _REL + _TRIG_ABS
    wide = ~np.isfinite(x.lo) | ~np.isfinite(x.hi) | (rd.sub_up(x.hi, x.lo) >= 6.28)
    has_max = wide | _contains_phase(x, max_phase)
    has_min = wide | _contains_phase(x, min_phase)
    hi = np.where(has_max, 1.0, np.minimum(hi, 1.0))
    lo = np.where(has_min, -1.0, np.maximum(lo, -1.0))
    return Ival._raw(lo, hi)


def isin(x: Ival) -> Ival:
    half_pi = Ival.pi() * 0.5
    return _trig(x, np.sin, half_pi, -half_pi)


def icos(x: Ival) -> Ival:
    return _trig(x, np.cos, Ival(0.0), Ival.pi())


# ------------------------------------------------------------- range bounding
@dataclass(frozen=True)
class RangeBound:
    """Enclosures of the infimum and of the supremum of a function."""

    inf_bound: Ival
    sup_bound: Ival

    @property
    def abs_sup(self) -> float:
        """Upper bound on sup |f|."""
        return max(abs(self.inf_bound.lo), abs(self.sup_bound.hi))


def _box_eval(f, lo, hi):
    v = as_ival(f(Ival._raw(lo, hi)))
    if np.ndim(v.lo) == 0:
        v = v.broadcast(np.shape(lo))
    return v


def bound_range(f, dom: Ival, tol: float = 1e-9, max_boxes: int = 2 ** 16, which: str = "both") -> RangeBound:
    """Enclose ``inf f`` and ``sup f`` over ``dom`` by adaptive bisection.

    ``f`` must accept a batch `Ival` and return a batch `Ival`.  The supremum
    is enclosed between a point evaluation (a value that is attained) and the
    interval evaluation over the surviving boxes; likewise for the infimum.
    Refinement stops once both widths are below ``tol`` or when the number of
    boxes would exceed ``max_boxes``; the result is valid either way.
    ``which`` ("inf" or "sup") restricts refinement to one side.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    dom = as_ival(dom)
    lo = np.array([dom.lo], dtype=float)
    hi = np.array([dom.hi], dtype=float)
    sup_low = -INF
    inf_high = INF
    # bounds carried by boxes that were dropped from refinement
    sup_dropped = -INF
    inf_dropped = INF
    while True:
        F = _box_eval(f, lo, hi)
        flo = np.where(np.isnan(F.lo), -INF, F.lo)
        fhi = np.where(np.isnan(F.hi), INF, F.hi)
        m = np.clip(0.5 * lo + 0.5 * hi, lo, hi)
        P = _box_eval(f, m, m)
        sup_low = max(sup_low, float(np.max(P.lo)))
        inf_high = min(inf_high, float(np.min(P.hi)))
        sup_up = max(float(np.max(fhi)), sup_dropped)
        inf_low = min(float(np.min(flo)), inf_dropped)
        sup_done = which == "inf" or rd.sub_up(sup_up, sup_low) <= tol
        inf_done = which == "sup" or rd.sub_up(inf_high, inf_low) <= tol
        if sup_done and inf_done:
            break
        # a box within tol of the attained values needs no further refinement
        keep = np.zeros(lo.shape, dtype=bool)
        if not sup_done:
            keep |= fhi > sup_low + 0.5 * tol
        if not inf_done:
            keep |= flo < inf_high - 0.5 * tol
        # boxes that can no longer be split contribute as they are
        splittable = (hi - lo) > 0
        mids = 0.5 * lo + 0.5 * hi
        splittable &= (mids > lo) & (mids < hi)
        frozen = keep & ~splittable
        keep &= splittable
        nk = int(np.count_nonzero(keep))
        n_frozen = int(np.count_nonzero(frozen))
        if nk == 0 or 2 * nk + n_frozen > max_boxes:
            break
        drop = ~keep & ~frozen
        if np.any(drop):
            sup_dropped = max(sup_dropped, float(np.max(fhi[drop])))
            inf_dropped = min(inf_dropped, float(np.min(flo[drop])))
        klo, khi = lo[keep], hi[keep]
        kmid = 0.5 * klo + 0.5 * khi
        lo = np.concatenate([lo[frozen], klo, kmid])
        hi = np.concatenate([hi[frozen], kmid, khi])
    # sup_low never exceeds the true sup, sup_up never falls below it
    return RangeBound(
        inf_bound=Ival._raw(inf_low, max(inf_low, inf_high)),
        sup_bound=Ival._raw(min(sup_low, sup_up), sup_up),
    )


# -------------------------------------------------------------- interval Newton
def interval_newton(f, df, target, x0: Ival, tol: float = 0.0, max_iter: int = 200) -> Ival:
    """Enclose the root of ``f(x) = target`` inside ``x0``.

    Works elementwise on batches: ``x0`` and ``target`` may hold arrays.  Each
    step intersects the Newton operator with the current box; when it
    contracts poorly a certified bisection step is taken instead.

    Raises
    ------
    NonMonotoneError
        If ``0 ∈ df(x0)`` for some element.
    NoRootError
        If the contraction empties a box (no root inside).
    """
    x0 = as_ival(x0)
    target = as_ival(target)
    scalar = np.ndim(x0.lo) == 0 and np.ndim(target.lo) == 0
    shape = np.broadcast_shapes(np.shape(x0.lo), np.shape(target.lo))
    lo = np.array(np.broadcast_to(x0.lo, shape), dtype=float).ravel()
    hi = np.array(np.broadcast_to(x0.hi, shape), dtype=float).ravel()
    tlo = np.array(np.broadcast_to(target.lo, shape), dtype=float).ravel()
    thi = np.array(np.broadcast_to(target.hi, shape), dtype=float).ravel()

    d0 = as_ival(df(Ival._raw(lo, hi))).broadcast(lo.shape)
    bad = d0.contains_zero()
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonMonotoneError(f"non-monotone: 0 in df(x0) = [{d0.lo[i]}, {d0.hi[i]}] on [{lo[i]}, {hi[i]}]")
    increasing = d0.lo > 0

    active = np.ones(lo.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        X = Ival._raw(lo[idx], hi[idx])
        T = Ival._raw(tlo[idx], thi[idx])
        m = np.clip(0.5 * X.lo + 0.5 * X.hi, X.lo, X.hi)
        M = Ival._raw(m, m)
        fm = as_ival(f(M)).broadcast(m.shape) - T
        D = as_ival(df(X)).broadcast(m.shape)
        N = M - fm / D
        nlo = np.maximum(X.lo, N.lo)
        nhi = np.minimum(X.hi, N.hi)
        empty = nlo > nhi
        if np.any(empty):
            j = idx[np.flatnonzero(empty)[0]]
            raise NoRootError(f"no root certified in [{lo[j]}, {hi[j]}]")
        # certified bisection where Newton shrinks the box by less than half
        old_w = X.hi - X.lo
        poor = (nhi - nlo) > 0.5 * old_w
        inc = increasing[idx]
        above = fm.lo > 0  # f(m) > target for sure
        below = fm.hi < 0
        # increasing: f(m) > t => root left of m
        go_left = poor & ((inc & above) | (~inc & below))
        go_right = poor & ((inc & below) | (~inc & above))
        nhi = np.where(go_left, np.minimum(nhi, m), nhi)
        nlo = np.where(go_right, np.maximum(nlo, m), nlo)
        if np.any(nlo > nhi):
            j = idx[np.flatnonzero(nlo > nhi)[0]]
            raise NoRootError(f"no root certified in [{lo[j]}, {hi[j]}]")
        stalled = (nlo == X.lo) & (nhi == X.hi)
        lo[idx] = nlo
        hi[idx] = nhi
        done = stalled | ((nhi - nlo) <= tol)
        active[idx[done]] = False
    if scalar:
        return Ival._raw(float(lo[0]), float(hi[0]))
    return Ival._raw(lo.reshape(shape), hi.reshape(shape))
