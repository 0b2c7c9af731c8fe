import math
from fractions import Fraction

import gmpy2
import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from certimeasure import rounding as rd
from certimeasure.interval import (
    DomainError,
    Ival,
    NonMonotoneError,
    NoRootError,
    bound_range,
    iabs,
    icos,
    iexp,
    ilog,
    interval_newton,
    ipow,
    isin,
)

_OPS = {
    "add": lambda u, v: u + v,
    "sub": lambda u, v: u - v,
    "mul": lambda u, v: u * v,
    "div": lambda u, v: u / v,
}


@st.composite
def intervals(draw, lo=-1e6, hi=1e6):
    a = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
    b = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
    return Ival(min(a, b), max(a, b))


def _q(x):
    return Fraction(float(x))


def _le(x, y):
    """``x <= y`` for floats (possibly infinite) and fractions."""
    if isinstance(x, float) and math.isinf(x):
        return x < 0
    if isinstance(y, float) and math.isinf(y):
        return y > 0
    return _q(x) <= y if isinstance(y, Fraction) else x <= _q(y)


# ------------------------------------------------------------------ examples
def test_add_example():
    r = Ival(1, 2) + Ival(3, 4)
    assert (r.lo, r.hi) == (4.0, 6.0)


def test_mul_example():
    r = Ival(-1, 1) * Ival(-1, 1)
    assert (r.lo, r.hi) == (-1.0, 1.0)


def test_log_example():
    r = ilog(Ival(1.0, math.e))
    assert r.lo <= 0.0 and r.hi >= 1.0


def test_log_domain_error():
    with pytest.raises(DomainError):
        ilog(Ival(0.0, 1.0))
    with pytest.raises(DomainError):
        Ival(1.0) / Ival(-1.0, 1.0)


def test_pow_fractional_at_zero():
    r = ipow(Ival(0.0, 0.25), Fraction(51, 64))
    assert r.lo == 0.0
    assert r.hi >= float(mpmath.mpf(0.25) ** (mpmath.mpf(51) / 64))


def test_pow_odd_root_of_negative():
    r = ipow(Ival(-8.0, -8.0), Fraction(1, 3))
    assert r.contains(-2.0)
    with pytest.raises(DomainError):
        ipow(Ival(-1.0, 1.0), Fraction(1, 2))


def test_invalid_interval_rejected():
    with pytest.raises(ValueError):
        Ival(2.0, 1.0)
    with pytest.raises(ValueError):
        Ival(float("nan"))


def test_rational_constructor_is_tight():
    third = Ival(Fraction(1, 3))
    assert _q(third.lo) < Fraction(1, 3) < _q(third.hi)
    assert third.hi == np.nextafter(third.lo, 1.0)


def test_bound_range_linear():
    tol = 1e-9
    r = bound_range(lambda x: 2.5 - x, Ival(0.0, 1.0), tol=tol)
    assert 1.5 - tol <= r.inf_bound.lo <= 1.5 <= r.inf_bound.hi
    assert r.sup_bound.lo <= 2.5 <= r.sup_bound.hi <= 2.5 + tol


def test_bound_range_constant():
    r = bound_range(lambda x: Ival(3.0).broadcast(np.shape(x.lo)), Ival(0.0, 1.0))
    assert (r.inf_bound.lo, r.inf_bound.hi, r.sup_bound.lo, r.sup_bound.hi) == (3.0, 3.0, 3.0, 3.0)


def test_bound_range_sin():
    r = bound_range(isin, Ival(0.0, Ival.pi().hi), tol=1e-8)
    assert r.sup_bound.contains(1.0)
    assert r.inf_bound.lo <= 0.0


def test_newton_sqrt2():
    r = interval_newton(lambda x: x * x - 2.0, lambda x: 2.0 * x, 0.0, Ival(1.0, 2.0))
    assert r.contains(math.sqrt(2))
    assert r.width <= 1e-12
    s = mpmath.sqrt(2)
    assert mpmath.mpf(r.lo) <= s <= mpmath.mpf(r.hi)


def test_newton_linear():
    r = interval_newton(lambda x: 2.0 * x, lambda x: Ival(2.0), 0.5, Ival(0.0, 0.5))
    assert r.contains(0.25)


def test_newton_third_width_4ulp():
    x0 = Ival(0.0, float(Fraction(1, 3)) + 1e-3)
    r = interval_newton(lambda x: 3.0 * x, lambda x: Ival(3.0), 1.0, x0)
    assert _q(r.lo) <= Fraction(1, 3) <= _q(r.hi)
    assert r.hi - r.lo <= 4 * np.spacing(1.0 / 3.0)


def test_newton_errors():
    with pytest.raises(NonMonotoneError):
        interval_newton(lambda x: x * x, lambda x: 2.0 * x, 0.25, Ival(-1.0, 1.0))
    with pytest.raises(NoRootError):
        interval_newton(lambda x: 2.0 * x, lambda x: Ival(2.0), 5.0, Ival(0.0, 1.0))


# ------------------------------------------------------------------ properties
@given(intervals(), intervals(), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from(["add", "sub", "mul", "div"]))
def test_containment_property(a, b, s, t, op):
    x = _q(a.lo + s * (a.hi - a.lo)) if a.lo < a.hi else _q(a.lo)
    y = _q(b.lo + t * (b.hi - b.lo)) if b.lo < b.hi else _q(b.lo)
    x = min(max(x, _q(a.lo)), _q(a.hi))
    y = min(max(y, _q(b.lo)), _q(b.hi))
    if op == "div" and b.contains_zero():
        return
    exact = {"add": lambda: x + y, "sub": lambda: x - y, "mul": lambda: x * y, "div": lambda: x / y}[op]()
    r = _OPS[op](a, b)
    assert _le(float(r.lo), exact) and _le(exact, float(r.hi))


@given(intervals(), intervals(), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from(["add", "sub", "mul", "div"]))
def test_inclusion_monotonicity_property(a, b, s1, s2, t1, t2, op):
    # sub-intervals of a and b
    def sub(v, p, q):
        p, q = sorted((p, q))
        lo = v.lo + p * (v.hi - v.lo)
        hi = v.lo + q * (v.hi - v.lo)
        lo, hi = min(max(lo, v.lo), v.hi), min(max(hi, v.lo), v.hi)
        return Ival(min(lo, hi), max(lo, hi))

    a2, b2 = sub(a, s1, s2), sub(b, t1, t2)
    if op == "div" and b.contains_zero():
        return
    f = _OPS[op]
    assert f(a2, b2).subset(f(a, b))


@given(intervals(lo=0.0, hi=50.0))
def test_unary_monotone_functions(a):
    for fn, ref in ((iexp, mpmath.exp), (isin, mpmath.sin), (icos, mpmath.cos)):
        r = fn(a)
        for x in (a.lo, a.hi, 0.5 * a.lo + 0.5 * a.hi):
            v = ref(mpmath.mpf(x))
            assert mpmath.mpf(r.lo) <= v <= mpmath.mpf(r.hi)


@given(intervals(lo=-10.0, hi=10.0), st.floats(0, 1))
def test_abs_contains(a, s):
    x = a.lo + s * (a.hi - a.lo)
    x = min(max(x, a.lo), a.hi)
    assert iabs(a).contains(abs(x))


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_bound_range_encloses_samples(c, w):
    f = lambda x: (x - c) * (x - c) + isin(x)  # noqa: E731
    dom = Ival(0.0, w)
    r = bound_range(f, dom, tol=1e-6)
    for x in np.linspace(0.0, w, 17):
        v = f(Ival(float(x)))
        assert r.inf_bound.lo <= v.hi and v.lo <= r.sup_bound.hi


@given(st.integers(2, 9), st.integers(1, 10_000), st.integers(1, 10_000))
def test_newton_rational_preimages(k, p, q):
    """Preimages of rational targets under a linear branch to within 4 ulp."""
    y = Fraction(min(p, q), max(p, q) + 1)
    x0 = Ival(0.0, 1.0)
    target = Ival(y)
    r = interval_newton(lambda x: float(k) * x, lambda x: Ival(float(k)), target, x0)
    exact = y / k
    assert _q(r.lo) <= exact <= _q(r.hi)
    assert r.subset(x0)
    assert r.hi - r.lo <= 4 * np.spacing(float(exact))


# ------------------------------------------------------------------ bulk trials
N_TRIALS = 250_000  # per arithmetic operation, 10^6 in total


def _random_intervals(rng, m):
    e = rng.integers(-30, 30, size=(2, m))
    x = rng.standard_normal((2, m)) * np.exp2(e)
    lo, hi = np.minimum(x[0], x[1]), np.maximum(x[0], x[1])
    # a share of degenerate intervals
    pt = rng.random(m) < 0.1
    hi = np.where(pt, lo, hi)
    return Ival(lo, hi)


def _points_in(rng, v: Ival):
    t = rng.random(v.lo.shape)
    p = v.lo + t * (v.hi - v.lo)
    return np.clip(p, v.lo, v.hi)


def test_bulk_containment_exact_oracle():
    """10^6 random (op, point-in-interval) trials against exact rationals."""
    rng = np.random.default_rng(20240607)
    mpq = gmpy2.mpq
    failures = 0
    for op in ("add", "sub", "mul", "div"):
        a = _random_intervals(rng, N_TRIALS)
        b = _random_intervals(rng, N_TRIALS)
        if op == "div":
            # keep divisors away from zero
            sgn = np.where(rng.random(N_TRIALS) < 0.5, -1.0, 1.0)
            lo = np.abs(b.lo) + 1e-3
            hi = lo + np.abs(b.hi - b.lo)
            b = Ival(np.where(sgn > 0, lo, -hi), np.where(sgn > 0, hi, -lo))
        x, y = _points_in(rng, a), _points_in(rng, b)
        r = _OPS[op](a, b)
        for xi, yi, lo, hi in zip(x.tolist(), y.tolist(), r.lo.tolist(), r.hi.tolist()):
            X, Y = mpq(xi), mpq(yi)
            e = X + Y if op == "add" else X - Y if op == "sub" else X * Y if op == "mul" else X / Y
            if not (mpq(lo) <= e <= mpq(hi)):
                failures += 1
    assert failures == 0


def test_bulk_inclusion_monotonicity():
    """10^6 random nested pairs: op(a', b') is contained in op(a, b)."""
    rng = np.random.default_rng(7)
    for op in ("add", "sub", "mul", "div"):
        a = _random_intervals(rng, N_TRIALS)
        b = _random_intervals(rng, N_TRIALS)
        if op == "div":
            lo = np.abs(b.lo) + 1e-3
            b = Ival(lo, lo + np.abs(b.hi - b.lo))
        p, q = np.sort(np.stack([_points_in(rng, a), _points_in(rng, a)]), axis=0)
        a2 = Ival(p, q)
        p, q = np.sort(np.stack([_points_in(rng, b), _points_in(rng, b)]), axis=0)
        b2 = Ival(p, q)
        f = _OPS[op]
        assert np.all(f(a2, b2).subset(f(a, b)))


@pytest.mark.parametrize("name", ["exp", "log", "sin", "cos", "pow"])
def test_bulk_elementary_containment(name):
    rng = np.random.default_rng(hash(name) % 2 ** 32)
    m = 4000
    mpmath.mp.prec = 160
    if name == "log":
        lo = np.exp2(rng.uniform(-40, 40, m))
    elif name == "pow":
        lo = rng.uniform(0, 4, m)
    else:
        lo = rng.uniform(-40, 40, m)
    hi = lo + np.abs(rng.standard_normal(m)) * np.exp2(rng.integers(-40, 2, m)) * np.maximum(np.abs(lo), 1)
    v = Ival(lo, hi)
    x = _points_in(rng, v)
    fn, ref = {
        "exp": (iexp, mpmath.exp),
        "log": (ilog, mpmath.log),
        "sin": (isin, mpmath.sin),
        "cos": (icos, mpmath.cos),
        "pow": (lambda z: ipow(z, Fraction(51, 64)), lambda z: z ** (mpmath.mpf(51) / 64)),
    }[name]
    with np.errstate(over="ignore"):
        r = fn(v)
    for xi, rl, rh in zip(x.tolist(), r.lo.tolist(), r.hi.tolist()):
        e = ref(mpmath.mpf(xi))
        assert mpmath.mpf(rl) <= e <= mpmath.mpf(rh)
    mpmath.mp.prec = 53


def test_directed_rounding_primitives():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(10_000) * 1e3
    b = rng.standard_normal(10_000)
    for f_dn, f_up, exact in ((rd.add_down, rd.add_up, lambda x, y: x + y),
                              (rd.mul_down, rd.mul_up, lambda x, y: x * y),
                              (rd.div_down, rd.div_up, lambda x, y: x / y)):
        lo, hi = f_dn(a, b), f_up(a, b)
        for x, y, l, h in zip(a[:2000], b[:2000], lo[:2000], hi[:2000]):
            e = exact(gmpy2.mpq(x), gmpy2.mpq(y))
            assert gmpy2.mpq(l) <= e <= gmpy2.mpq(h)


def test_gamma_up():
    g = rd.gamma_up(10)
    u = Fraction(1, 2 ** 53)
    assert Fraction(g) >= 10 * u / (1 - 10 * u)
    with pytest.raises(ValueError):
        rd.gamma_up(2 ** 53)
