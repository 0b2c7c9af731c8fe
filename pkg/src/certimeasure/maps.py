"""Built-in map catalog and construction from declarative records."""
from __future__ import annotations

from fractions import Fraction

from .dynamics import Piece, PiecewiseMap, Singularity
from .interval import Ival, icos, ipow, isin, isqrt

ZERO = Ival(0.0)
ONE = Ival(1.0)


def _q(v) -> Ival:
    return Ival(Fraction(v))


def linear(k: int) -> PiecewiseMap:
    """``T(x) = k x mod 1``."""
    if k < 2:
        raise ValueError("linear map needs k >= 2")
    kk = Ival(float(k))
    pieces = []
    for i in range(k):
        pieces.append(
            Piece(
                a=_q(Fraction(i, k)),
                b=_q(Fraction(i + 1, k)),
                f=lambda x, i=i: kk * x - float(i),
                df=lambda x: kk.broadcast(x.shape) if x.shape else kk,
                d2f=lambda x: ZERO.broadcast(x.shape) if x.shape else ZERO,
                increasing=True,
                ya=ZERO,
                yb=ONE,
            )
        )
    return PiecewiseMap.from_pieces("doubling" if k == 2 else f"linear{k}", pieces)


def doubling() -> PiecewiseMap:
    return linear(2)


def lanford() -> PiecewiseMap:
    """``T(x) = 2x + x(1-x)/2 mod 1``."""
    c = (Ival(5.0) - isqrt(Ival(17.0))) * 0.5  # where 2.5x - 0.5x^2 = 1

    def f0(x):
        return x * (2.5 - 0.5 * x)

    def df(x):
        return 2.5 - x

    def d2f(x):
        return Ival(-1.0).broadcast(x.shape) if x.shape else Ival(-1.0)

    pieces = [
        Piece(a=ZERO, b=c, f=f0, df=df, d2f=d2f, increasing=True, ya=ZERO, yb=ONE),
        Piece(a=c, b=ONE, f=lambda x: f0(x) - 1.0, df=df, d2f=d2f, increasing=True, ya=ZERO, yb=ONE),
    ]
    return PiecewiseMap.from_pieces("lanford", pieces)


def nonlinear_nonmarkov() -> PiecewiseMap:
    """Nonlinear modification of ``17x/5 mod 1`` with a last, non-full branch."""
    s = _q(Fraction(17, 5))
    q = _q(Fraction(34, 25))
    q2 = _q(Fraction(68, 25))
    e1, e2, e3 = _q(Fraction(5, 17)), _q(Fraction(10, 17)), _q(Fraction(15, 17))

    def quad(e):
        def f(x):
            t = x - e
            return t * (q * t + 3.0)

        def df(x):
            return q2 * (x - e) + 3.0

        return f, df

    def const(c):
        return lambda x: c.broadcast(x.shape) if x.shape else c

    f2, df2 = quad(e1)
    f3, df3 = quad(e2)
    pieces = [
        Piece(a=ZERO, b=e1, f=lambda x: s * x, df=const(s), d2f=const(ZERO), increasing=True, ya=ZERO, yb=ONE),
        Piece(a=e1, b=e2, f=f2, df=df2, d2f=const(q2), increasing=True, ya=ZERO, yb=ONE),
        Piece(a=e2, b=e3, f=f3, df=df3, d2f=const(q2), increasing=True, ya=ZERO, yb=ONE),
        Piece(a=e3, b=ONE, f=lambda x: s * (x - e3), df=const(s), d2f=const(ZERO), increasing=True,
              ya=ZERO, yb=_q(Fraction(2, 5)), yb_q=Fraction(2, 5)),
    ]
    return PiecewiseMap.from_pieces("nonlinear_nonmarkov", pieces)


def perturbed_4x(eps=Fraction(1, 100)) -> PiecewiseMap:
    """``T(x) = 4x + eps sin(8 pi x) mod 1``."""
    e = _q(eps)
    w = Ival.pi() * 8.0
    e_w = e * w
    e_w2 = e * w * w

    def make(k):
        def f(x):
            return 4.0 * x + e * isin(w * x) - float(k)

        return f

    def df(x):
        return 4.0 + e_w * icos(w * x)

    def d2f(x):
        return -(e_w2 * isin(w * x))

    pieces = [
        Piece(a=_q(Fraction(k, 4)), b=_q(Fraction(k + 1, 4)), f=make(k), df=df, d2f=d2f,
              increasing=True, ya=ZERO, yb=ONE)
        for k in range(4)
    ]
    return PiecewiseMap.from_pieces("perturbed_4x", pieces)


def lorenz(theta=Fraction(109, 64), alpha=Fraction(51, 64)) -> PiecewiseMap:
    """One-dimensional Lorenz map ``theta |x - 1/2|^alpha`` (left) and
    ``1 - theta |x - 1/2|^alpha`` (right); both branches decrease."""
    theta = Fraction(theta)
    alpha = Fraction(alpha)
    th = _q(theta)
    al = _q(alpha)
    half = _q(Fraction(1, 2))
    c = _q((1 - alpha)) / (th * al)
    top = th * ipow(half, alpha)  # theta * 2^-alpha

    def left_t(x):
        return half - x

    def right_t(x):
        return x - half

    pieces = [
        Piece(
            a=ZERO,
            b=half,
            f=lambda x: th * ipow(left_t(x), alpha),
            df=lambda x: -(th * al * ipow(left_t(x), alpha - 1)),
            d2f=None,
            dist=lambda x: -(c * ipow(left_t(x), -alpha)),
            increasing=False,
            ya=top,
            yb=ZERO,
            singularity=Singularity(half, c, alpha),
            singular_at=("b",),
        ),
        Piece(
            a=half,
            b=ONE,
            f=lambda x: 1.0 - th * ipow(right_t(x), alpha),
            df=lambda x: -(th * al * ipow(right_t(x), alpha - 1)),
            d2f=None,
            dist=lambda x: c * ipow(right_t(x), -alpha),
            increasing=False,
            ya=ONE,
            yb=1.0 - top,
            singularity=Singularity(half, c, alpha),
            singular_at=("a",),
        ),
    ]
    return PiecewiseMap.from_pieces("lorenz", pieces)


CATALOG = {
    "doubling": lambda **kw: doubling(),
    "linear": lambda k=3, **kw: linear(int(k)),
    "lanford": lambda **kw: lanford(),
    "nonlinear_nonmarkov": lambda **kw: nonlinear_nonmarkov(),
    "perturbed_4x": lambda eps=Fraction(1, 100), **kw: perturbed_4x(Fraction(eps)),
    "lorenz": lambda theta=Fraction(109, 64), alpha=Fraction(51, 64), **kw: lorenz(Fraction(theta), Fraction(alpha)),
}

# iterate used by default for maps that need one
DEFAULT_ITERATE = {"lorenz": 3}


def map_from_config(record: dict) -> PiecewiseMap:
    """Build a map from ``{name, params, iterate}``.

    ``params`` values may be strings such as ``"109/64"``; they are parsed as
    exact rationals.  ``iterate`` defaults to the catalog's preferred power.
    """
    name = record["name"]
    if name.startswith("linear") and name[6:].isdigit():
        params = {"k": int(name[6:])}
        name = "linear"
    else:
        params = {}
    if name not in CATALOG:
        raise KeyError(f"unknown map {name!r}; choose from {sorted(CATALOG)}")
    for key, val in (record.get("params") or {}).items():
        params[key] = Fraction(val) if isinstance(val, str) else val
    m = CATALOG[name](**params)
    k = int(record.get("iterate") or DEFAULT_ITERATE.get(name, 1))
    return m.iterate(k) if k > 1 else m
