"""Directed rounding on top of round-to-nearest.

Every helper returns a float (or array) that is a guaranteed lower or upper
bound of the exact real result.  Exactness is detected with error-free
transformations (TwoSum, Dekker's TwoProduct); when the transformation is
not valid (overflow, underflow, non-finite input) the result is nudged by one
ulp in the requested direction, which is always safe.

No global floating-point state is touched, so the functions are pure and
thread-safe.
"""
from __future__ import annotations

import numpy as np

INF = np.inf
U = 2.0 ** -53  # unit roundoff of binary64, round-to-nearest

_SPLITTER = 134217729.0  # 2**27 + 1
_BIG = 2.0 ** 995
_TINY = 2.0 ** -900
_SMALL = 2.0 ** -1000


def _down(x):
    return np.nextafter(x, -INF)


def _up(x):
    return np.nextafter(x, INF)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_sum(a, b):
    """Knuth's TwoSum: ``a + b == s + e`` exactly when no overflow occurs."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def two_prod(a, b):
    """Dekker's TwoProduct and a mask telling where it is exact."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    ap = np.abs(p)
    safe = (
        np.isfinite(p)
        & np.isfinite(e)
        & (np.abs(a) < _BIG)
        & (np.abs(b) < _BIG)
        & (((ap >= _TINY) & (np.abs(a) >= _SMALL) & (np.abs(b) >= _SMALL)) | (a == 0) | (b == 0))
    )
    return p, e, safe


def _finish(r, err, safe, upward):
    """Select ``r`` when it already bounds the exact value, else nudge it."""
    with np.errstate(invalid="ignore"):
        if upward:
            out = np.where(safe & (err <= 0), r, _up(r))
            return np.where(np.isnan(r), INF, out)
        out = np.where(safe & (err >= 0), r, _down(r))
        return np.where(np.isnan(r), -INF, out)


def _ret(x):
    if np.ndim(x) == 0:
        return float(x)
    return x


def add_down(a, b):
    with np.errstate(all="ignore"):
        s, e = two_sum(a, b)
        safe = np.isfinite(s) & np.isfinite(e)
        exact_inf = np.isinf(s) & (np.isinf(a) | np.isinf(b))
        r = _finish(s, e, safe, False)
        return _ret(np.where(exact_inf, s, r))


def add_up(a, b):
    with np.errstate(all="ignore"):
        s, e = two_sum(a, b)
        safe = np.isfinite(s) & np.isfinite(e)
        exact_inf = np.isinf(s) & (np.isinf(a) | np.isinf(b))
        r = _finish(s, e, safe, True)
        return _ret(np.where(exact_inf, s, r))


def sub_down(a, b):
    return add_down(a, np.negative(b))


def sub_up(a, b):
    return add_up(a, np.negative(b))


def _mul(a, b, upward):
    with np.errstate(all="ignore"):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        p, e, safe = two_prod(a, b)
        # 0 * inf is 0 for endpoint arithmetic (inf is never a member).
        zero = (a == 0) | (b == 0)
        exact_inf = np.isinf(p) & (np.isinf(a) | np.isinf(b)) & ~zero
        r = _finish(p, e, safe, upward)
        r = np.where(exact_inf, p, r)
        return _ret(np.where(zero, 0.0, r))


def mul_down(a, b):
    return _mul(a, b, False)


def mul_up(a, b):
    return _mul(a, b, True)


def _div(a, b, upward):
    with np.errstate(all="ignore"):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        q = a / b
        p, e, safe = two_prod(q, b)
        # exact a - q*b, its sign equals the sign of (a/b - q) * b
        d = (a - p) - e
        err = np.where(b > 0, d, -d)
        safe = safe & np.isfinite(d) & (np.abs(a) >= _TINY) & np.isfinite(a) & np.isfinite(b)
        r = _finish(q, err, safe, upward)
        exact = (a == 0) & (b != 0)
        r = np.where(exact, 0.0, r)
        inf_num = np.isinf(a) & np.isfinite(b) & (b != 0)
        r = np.where(inf_num, q, r)
        inf_den = np.isfinite(a) & np.isinf(b)
        # a / inf is the limit 0 of the quotient
        r = np.where(inf_den, 0.0, r)
        return _ret(r)


def div_down(a, b):
    return _div(a, b, False)


def div_up(a, b):
    return _div(a, b, True)


def _sqrt(x, upward):
    with np.errstate(all="ignore"):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(x)
        p, e, safe = two_prod(r, r)
        d = (x - p) - e
        safe = safe & np.isfinite(d) & (x >= _TINY)
        out = _finish(r, d, safe, upward)
        out = np.where((x == 0) | np.isinf(x), r, out)
        if not upward:
            out = np.maximum(out, 0.0)
        return _ret(out)


def sqrt_down(x):
    return _sqrt(x, False)


def sqrt_up(x):
    return _sqrt(x, True)


def sum_up(values) -> float:
    """Upper bound on the exact sum of ``values``.

    The float sum is inflated by the classical recursive-summation bound
    ``gamma_{n-1} * sum |x_i|``; everything is computed in upward rounding.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n == 0:
        return 0.0
    if n == 1:
        return float(v[0])
    s = float(np.sum(v))
    a = float(np.sum(np.abs(v)))
    g = gamma_up(n)
    # the float abs-sum itself carries a relative error below g
    slack = mul_up(mul_up(g, a), add_up(1.0, mul_up(2.0, g)))
    slack = add_up(slack, 1e-300 * n)
    return add_up(s, slack)


def sum_down(values) -> float:
    return -sum_up(-np.asarray(values, dtype=float))


def gamma_up(z: int, u: float = U) -> float:
    """Upward-rounded ``z u / (1 - z u)``."""
    if z < 0:
        raise ValueError("z must be non-negative")
    if z == 0:
        return 0.0
    zu = mul_up(float(z), u)
    if zu >= 1.0:
        raise ValueError(f"z*u = {zu} >= 1: matrix too dense for this precision")
    return div_up(zu, sub_down(1.0, zu))


def pow_up(x: float, k: int) -> float:
    """Upper bound of ``x**k`` for ``x >= 0`` and integer ``k >= 0``."""
    r = 1.0
    for _ in range(k):
        r = mul_up(r, x)
    return r
