"""Small hand-built maps shared by the tests."""
from fractions import Fraction

from certimeasure.dynamics import Piece, PiecewiseMap
from certimeasure.interval import Ival


def _const(c):
    return lambda x: Ival(c).broadcast(x.shape) if x.shape else Ival(c)


def figure_one_map() -> PiecewiseMap:
    """``0.9 - x`` on ``[0, 1/2)`` and ``2x - 1`` on ``[1/2, 1)``."""
    zero, half, one = Ival(0.0), Ival(0.5), Ival(1.0)
    nine = Ival(Fraction(9, 10))
    return PiecewiseMap.from_pieces("figure_one", [
        Piece(a=zero, b=half, f=lambda x: nine - x, df=lambda x: Ival(-1.0).broadcast(x.shape),
              d2f=lambda x: Ival(0.0).broadcast(x.shape), increasing=False, ya=nine,
              yb=Ival(Fraction(2, 5)), ya_q=Fraction(9, 10), yb_q=Fraction(2, 5)),
        Piece(a=half, b=one, f=lambda x: 2.0 * x - 1.0, df=lambda x: Ival(2.0).broadcast(x.shape),
              d2f=lambda x: Ival(0.0).broadcast(x.shape), increasing=True, ya=zero, yb=one),
    ])


def identity_map() -> PiecewiseMap:
    """``T(x) = x``: one full increasing branch."""
    zero, one = Ival(0.0), Ival(1.0)
    return PiecewiseMap.from_pieces("identity", [
        Piece(a=zero, b=one, f=lambda x: x, df=_const(1.0), d2f=_const(0.0), increasing=True, ya=zero, yb=one),
    ])
