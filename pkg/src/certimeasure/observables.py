"""Certified Lyapunov exponent ``int log|T'| u dm`` from a density enclosure."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rounding as rd
from .bounds import CertifiedError
from .discretization import SchemeKind
from .dynamics import PiecewiseMap
from .interval import Ival, iabs, ilog


class UnboundedObservableError(ArithmeticError):
    """``log|T'|`` could not be bounded on some cell."""


@dataclass
class LyapunovEnclosure:
    value: Ival
    integral_part: Ival
    error_part: float

    def to_dict(self) -> dict:
        return {
            "value": [self.value.lo, self.value.hi],
            "integral_part": [self.integral_part.lo, self.integral_part.hi],
            "error_part": self.error_part,
        }


def _subcells(m: PiecewiseMap, n: int, subdiv: int):
    """Pieces ``[x0, x1]`` of the grid of size ``n * subdiv`` intersected with
    each branch domain, with the branch index and the coarse cell index."""
    N = n * subdiv
    out = []
    for b, br in enumerate(m.branches):
        a_lo, b_hi = br.a.lo, br.b.hi
        k0 = max(int(math.floor(a_lo * N)), 0)
        k1 = min(int(math.ceil(b_hi * N)), N)
        k = np.arange(k0, k1)
        x0 = np.maximum(rd.div_down(k.astype(float), float(N)), br.a.lo)
        x1 = np.minimum(rd.div_up((k + 1).astype(float), float(N)), br.b.hi)
        keep = x1 > x0
        out.append((b, k[keep], x0[keep], x1[keep]))
    return out


def _density_on(u: np.ndarray, scheme: SchemeKind, k: np.ndarray, subdiv: int, x0, x1):
    """Enclosures of ``u`` at both ends of each subcell."""
    n = u.size
    cell = np.minimum(k // subdiv, n - 1)
    if scheme is SchemeKind.ULAM:
        v = Ival._raw(u[cell], u[cell])
        return v, v
    left = u[cell]
    right = u[(cell + 1) % n]
    nf = float(n)

    def interp(x):
        t = Ival._raw(rd.mul_down(x, nf), rd.mul_up(x, nf)) - cell.astype(float)
        lo_t = np.clip(t.lo, 0.0, 1.0)
        hi_t = np.clip(t.hi, 0.0, 1.0)
        t = Ival._raw(np.minimum(lo_t, hi_t), hi_t)
        lv = Ival._raw(left, left)
        return lv + t * (Ival._raw(right, right) - lv)

    return interp(x0), interp(x1)


def _quadrature(m: PiecewiseMap, u: np.ndarray, scheme: SchemeKind, subdiv: int):
    """``int log|T'| u`` plus ``sup |log|T'||`` and ``int |log|T'||``."""
    total_lo, total_hi = [], []
    sup_abs = 0.0
    l1 = []
    for b, k, x0, x1 in _subcells(m, u.size, subdiv):
        br = m.branches[b]
        X = Ival._raw(x0, x1)
        with np.errstate(all="ignore"):
            g = ilog(iabs(br.deriv(X)))
        if not (np.all(np.isfinite(g.lo)) and np.all(np.isfinite(g.hi))):
            raise UnboundedObservableError(f"log|T'| is unbounded on branch {b}")
        length = Ival._raw(x1, x1) - Ival._raw(x0, x0)
        ua, ub = _density_on(u, scheme, k, subdiv, x0, x1)
        # int over the subcell of the linear density, and a bound of int |u|
        mass = (ua + ub) * 0.5 * length
        absmass = rd.mul_up(np.maximum(ua.mag, ub.mag), length.hi)
        gm = 0.5 * g.lo + 0.5 * g.hi
        gr = np.maximum(rd.sub_up(g.hi, gm), rd.sub_up(gm, g.lo))
        part = Ival._raw(gm, gm) * mass
        slack = rd.mul_up(gr, absmass)
        total_lo.append(rd.sub_down(part.lo, slack))
        total_hi.append(rd.add_up(part.hi, slack))
        gmag = g.mag
        sup_abs = max(sup_abs, float(np.max(gmag, initial=0.0)))
        l1.append(rd.mul_up(gmag, length.hi))
    lo = rd.sum_down(np.concatenate(total_lo))
    hi = rd.sum_up(np.concatenate(total_hi))
    return Ival._raw(lo, hi), sup_abs, rd.sum_up(np.concatenate(l1))


def lyapunov_enclosure(m: PiecewiseMap, u_tilde: np.ndarray, err, scheme, width_target: float | None = None,
                       max_subdiv: int = 16) -> LyapunovEnclosure:
    """Enclosure of the Lyapunov exponent of the base map.

    ``err`` is a :class:`CertifiedError` or a number bounding the weak-norm
    distance between ``u_tilde`` and the invariant density.  For an iterate
    ``T^k`` the integral is divided by ``k``.  Cells are split until the
    quadrature width is below ``width_target`` (default: a tenth of the
    propagated error, at least 1e-12) or ``max_subdiv`` is reached.
    """
    scheme = SchemeKind.parse(scheme)
    bound = float(err.bound if isinstance(err, CertifiedError) else err)
    if not math.isfinite(bound):
        raise ValueError("error bound must be finite")
    u = np.asarray(u_tilde, dtype=float)
    subdiv = 1
    while True:
        integral, sup_abs, l1 = _quadrature(m, u, scheme, subdiv)
        weight = sup_abs if scheme is SchemeKind.ULAM else l1
        e = float(rd.mul_up(weight, bound))
        target = width_target if width_target is not None else max(0.2 * e, 1e-12)
        if integral.width <= target or subdiv >= max_subdiv:
            break
        subdiv *= 2
    power = float(m.power)
    integral = Ival._raw(rd.div_down(integral.lo, power), rd.div_up(integral.hi, power))
    e = float(rd.div_up(e, power))
    value = Ival._raw(rd.sub_down(integral.lo, e), rd.add_up(integral.hi, e))
    return LyapunovEnclosure(value, integral, e)
