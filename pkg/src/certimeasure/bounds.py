"""Bound arithmetic: a-priori norm bounds, submultiplicative refinement,
coarse-to-fine transfer, tail sums and the final certified error.

Everything here rounds upward, so every output is a valid upper bound given
upper bounds as inputs.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rounding as rd
from .discretization import SchemeConstants
from .dynamics import LYCoefficients
from .norms import NormBounds

INF = math.inf


class ContractionError(ArithmeticError):
    """No ``C_m < 1`` is available, so the tail sum cannot be bounded."""


class NormalizationError(ArithmeticError):
    """``eps2 >= 1``: the approximate fixed point cannot be normalized."""


class RefinementError(ValueError):
    """Fine grid is not a refinement of the coarse grid."""


def _hi(x) -> float:
    return float(getattr(x, "hi", x))


def _grid_n(h: float) -> int | None:
    n = round(1.0 / h)
    return n if n > 0 and abs(n * h - 1.0) < 1e-12 else None


def _h_up(h: float) -> float:
    """Upper bound of the true mesh size when ``h`` is a rounded ``1/n``."""
    n = _grid_n(h)
    return float(rd.div_up(1.0, float(n))) if n else float(h)


def _inv_h_pow_up(h: float, alpha: float) -> float:
    """Upper bound of ``h^-alpha``."""
    n = _grid_n(h)
    if n and float(alpha).is_integer():
        return float(rd.pow_up(float(n), int(alpha)))
    return float(h ** -alpha * (1 + 1e-14))


@dataclass
class RkhTable:
    R1: list
    R2: list


@dataclass
class CertifiedError:
    bound: float
    m_used: int | None
    components: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def rkh(ly: LYCoefficients, sc: SchemeConstants, h: float, k_max: int) -> RkhTable:
    """``(R_{k,h,1}, R_{k,h,2})`` for ``k = 0..k_max``: powers of
    ``[[1, 0], [E h, 1]] [[A, B], [0, 1]]`` applied to ``[M / h^alpha, 1]``."""
    A, B = _hi(ly.A), _hi(ly.B)
    Eh = rd.mul_up(sc.E, _h_up(h))
    r1 = rd.mul_up(sc.M, _inv_h_pow_up(h, sc.alpha))
    r2 = 1.0
    R1, R2 = [r1], [r2]
    with np.errstate(over="ignore"):
        for _ in range(k_max):
            t = rd.add_up(rd.mul_up(A, r1), rd.mul_up(B, r2))
            r2 = rd.add_up(rd.mul_up(Eh, t), r2)
            r1 = t
            R1.append(float(r1))
            R2.append(float(r2))
    return RkhTable(R1, R2)


def apriori_norm_bounds(ly: LYCoefficients, sc: SchemeConstants, mat_norm_bound: float, h: float,
                        k_max: int, with_source: bool = False):
    """Per-k minimum of ``||Q||^k`` and ``S1 R_{k,h,1} + S2 R_{k,h,2}``."""
    R = rkh(ly, sc, h, k_max)
    out, src = [1.0], ["apriori_power"]
    p = 1.0
    for k in range(1, k_max + 1):
        p = rd.mul_up(p, mat_norm_bound)
        s = rd.add_up(rd.mul_up(sc.S1, R.R1[k]) if sc.S1 else 0.0, rd.mul_up(sc.S2, R.R2[k]))
        if s < p:
            out.append(float(s))
            src.append("apriori_LY")
        else:
            out.append(float(p))
            src.append("apriori_power")
    return (out, src) if with_source else out


def refine_submultiplicative(C, source=None, k_max: int | None = None):
    """Fixed point of ``C[k] <- min(C[k], min_i C[i] C[k-i])``.

    ``k_max`` may extend the list beyond its length (missing entries start at
    +inf).  Returns the refined list, or ``(list, source)`` when ``source`` is
    given.
    """
    C = [float(c) for c in C]
    src = list(source) if source is not None else None
    if k_max is not None and k_max + 1 > len(C):
        extra = k_max + 1 - len(C)
        C += [INF] * extra
        if src is not None:
            src += ["submult"] * extra
    # one ascending sweep reaches the fixed point: C[i] and C[k-i] are final
    # once every index below k has been processed
    for k in range(2, len(C)):
        best = C[k]
        for i in range(1, k // 2 + 1):
            p = rd.mul_up(C[i], C[k - i])
            if p < best:
                best = p
        if best < C[k]:
            C[k] = float(best)
            if src is not None:
                src[k] = "submult"
    return (C, src) if src is not None else C


def coarse_to_fine(C_coarse, ly: LYCoefficients, sc: SchemeConstants, h: float, h_F: float, normQ_hF: float,
                   k_max: int | None = None) -> list:
    """``C^F_m = C_m + 2 K h sum_{k<m} C_{m-1-k} (||Q_F|| R_{k,F,1} + R_{k+1,F,1})``."""
    ratio = h / h_F
    if not (h_F <= h and abs(ratio - round(ratio)) <= 1e-9 * ratio):
        raise RefinementError(f"h/h_F = {ratio} is not a positive integer")
    C = [float(c) for c in C_coarse]
    if k_max is None:
        k_max = len(C) - 1
    if k_max > len(C) - 1:
        raise ValueError("k_max exceeds the coarse bounds")
    R = rkh(ly, sc, h_F, k_max + 1).R1
    two_kh = rd.mul_up(rd.mul_up(2.0, sc.K), _h_up(h))
    g = [rd.add_up(rd.mul_up(normQ_hF, R[k]), R[k + 1]) for k in range(k_max + 1)]
    out = [C[0]]
    for m in range(1, k_max + 1):
        terms = [rd.mul_up(C[m - 1 - k], g[k]) for k in range(m)]
        s = rd.sum_up(terms) if len(terms) > 1 else terms[0]
        out.append(float(rd.add_up(C[m], rd.mul_up(two_kh, s))))
    return out


def tail_sum(C, m: int) -> float:
    """``(C_0 + ... + C_{m-1}) / (1 - C_m)`` rounded upward."""
    if not (0 < m < len(C)) or not C[m] < 1:
        raise ContractionError(f"C[{m}] is not < 1")
    s = rd.sum_up(np.asarray(C[:m], dtype=float))
    return float(rd.div_up(s, rd.sub_down(1.0, C[m])))


def error_bound(tail: float, sc: SchemeConstants, h: float, norm_L: float, u_strong: float, eps1: float,
                eps2: float, norm_u_tilde: float, m: int | None = None) -> CertifiedError:
    """``tail (2 K h (1 + ||L||) ||u||_s + eps1/(1-eps2)) + eps2/(1-eps2) ||u~||``."""
    if not eps2 < 1:
        raise NormalizationError(f"eps2 = {eps2} >= 1")
    if not math.isfinite(tail):
        raise ContractionError("tail sum is not finite")
    one_m = rd.sub_down(1.0, eps2)
    disc = rd.mul_up(rd.mul_up(rd.mul_up(2.0, sc.K), _h_up(h)), rd.mul_up(rd.add_up(1.0, _hi(norm_L)), _hi(u_strong)))
    e1 = rd.div_up(eps1, one_m)
    first = rd.mul_up(tail, rd.add_up(disc, e1))
    second = rd.mul_up(rd.div_up(eps2, one_m), norm_u_tilde)
    total = float(rd.add_up(first, second))
    comps = {"tail_sum": float(tail), "discretization_term": float(disc), "eps1_term": float(e1),
             "eps2_term": float(second)}
    return CertifiedError(total, m, comps)


def best_error_bound(C, sc: SchemeConstants, h: float, norm_L: float, u_strong: float, eps1: float, eps2: float,
                     norm_u_tilde: float) -> CertifiedError:
    """:func:`error_bound` minimized over every ``m`` with ``C_m < 1``."""
    best = None
    for m in range(1, len(C)):
        if not C[m] < 1:
            continue
        e = error_bound(tail_sum(C, m), sc, h, norm_L, u_strong, eps1, eps2, norm_u_tilde, m)
        if best is None or e.bound < best.bound:
            best = e
    if best is None:
        raise ContractionError("no C_m < 1: contraction not certified")
    return best


def geometric_envelope(C, m: int) -> tuple[float, float]:
    """Diagnostic ``(C, lambda)`` with ``C_k <= C lambda^k`` from ``C_m < 1``."""
    if not C[m] < 1:
        raise ContractionError(f"C[{m}] is not < 1")
    lam = C[m] ** (1.0 / m) * (1 + 1e-12)
    cmax = max(C[:m])
    return float(cmax / max(C[m], 1e-300) * (1 + 1e-12)), float(lam)


def aggregate_bounds(sources: dict, apriori: list, apriori_source: list | None = None,
                     k_max: int | None = None) -> NormBounds:
    """Per-k minimum over ``sources`` (tag -> list) and the a-priori list,
    then submultiplicative refinement; provenance is recorded per entry."""
    n = len(apriori)
    C = [float(c) for c in apriori]
    src = list(apriori_source) if apriori_source is not None else ["apriori_power"] * n
    for tag, lst in sources.items():
        if len(lst) != n:
            raise ValueError("all bound lists must have the same length")
        for k in range(1, n):
            if lst[k] < C[k]:
                C[k] = float(lst[k])
                src[k] = tag
    C[0] = 1.0
    src[0] = "apriori_power"
    C, src = refine_submultiplicative(C, src, k_max)
    return NormBounds(C, src)
