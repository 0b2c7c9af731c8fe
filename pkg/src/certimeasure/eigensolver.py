"""Approximate fixed point of ``Q_h`` in floating point and certified
residuals ``eps1 >= ||Q_h u - u||`` and ``eps2 >= |i* u - 1|``."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as sla
from threadpoolctl import threadpool_limits

from . import rounding as rd
from .bounds import NormalizationError
from .discretization import IntervalSparseMatrix, SchemeKind

log = logging.getLogger(__name__)


@dataclass
class ApproxFixedPoint:
    u_tilde: np.ndarray
    eps1: float
    eps2: float
    float_residual: float = float("nan")
    method: str = ""


def _q_action(mat: IntervalSparseMatrix, scheme: SchemeKind):
    M = mat.mid
    h = 1.0 / mat.n
    if scheme is SchemeKind.ULAM:
        return lambda v: M @ v
    return lambda v: (lambda w: w + h * np.sum(v - w))(M @ v)


def _weak_norm(v: np.ndarray, scheme: SchemeKind) -> float:
    if scheme is SchemeKind.ULAM:
        return float(np.sum(np.abs(v))) / v.size
    return float(np.max(np.abs(v)))


def approximate_fixed_point(mat: IntervalSparseMatrix, scheme=None, tol: float = 1e-13, ncv: int = 30,
                            maxiter: int = 2000) -> np.ndarray:
    """Eigenvector of the floating ``Q_h`` action for the eigenvalue nearest 1.

    Restarted Arnoldi (ARPACK) from the constant start vector; falls back to
    power iteration when ARPACK does not converge.  The result is scaled so
    that ``h sum u`` is 1 in floating point.
    """
    scheme = SchemeKind.parse(scheme if scheme is not None else mat.scheme)
    n = mat.n
    act = _q_action(mat, scheme)
    v0 = np.ones(n)
    u = None
    with threadpool_limits(limits=1):
        if n > ncv + 2:
            op = sla.LinearOperator((n, n), matvec=act, dtype=float)
            try:
                vals, vecs = sla.eigs(op, k=1, which="LM", v0=v0, ncv=ncv, tol=tol, maxiter=maxiter)
                u = np.real(vecs[:, 0])
            except sla.ArpackNoConvergence as exc:
                log.info("ARPACK did not converge (%s); using power iteration", exc)
        if u is None:
            u = _power_iteration(act, v0, tol, 50 * maxiter)
        u = _normalize(u, n)
        # a few polishing power steps, kept only while they help
        r = _weak_norm(act(u) - u, scheme)
        for _ in range(3):
            u1 = _normalize(act(u), n)
            r1 = _weak_norm(act(u1) - u1, scheme)
            if not r1 < r:
                break
            u, r = u1, r1
    return u


def _normalize(u: np.ndarray, n: int) -> np.ndarray:
    s = np.sum(u)
    if s == 0 or not np.isfinite(s):
        return u
    u = u * (n / s)
    # one correction step brings h sum u to within a few ulps of 1
    u = u * (n / np.sum(u))
    return u


def _power_iteration(act, v0, tol, maxiter):
    v = v0 / np.sum(v0) * v0.size
    for _ in range(maxiter):
        w = act(v)
        s = np.sum(w)
        if s == 0:
            break
        w = w * (v.size / s)
        if np.max(np.abs(w - v)) <= tol * np.max(np.abs(w)):
            return w
        v = w
    return v


def _row_bounds(rows, n, vals_lo, vals_hi):
    """Directed sums of interval summands grouped by ``rows``."""
    slo = np.bincount(rows, weights=vals_lo, minlength=n)
    shi = np.bincount(rows, weights=vals_hi, minlength=n)
    c = np.bincount(rows, minlength=n)
    g = rd.gamma_up(max(int(c.max(initial=1)), 1))
    alo = np.bincount(rows, weights=np.abs(vals_lo), minlength=n)
    ahi = np.bincount(rows, weights=np.abs(vals_hi), minlength=n)
    slack = rd.add_up(rd.mul_up(rd.mul_up(g, rd.add_up(1.0, 2.0 * g)), np.maximum(alo, ahi)), 1e-300)
    slack = np.where(c > 1, slack, 0.0)
    return rd.sub_down(slo, slack), rd.add_up(shi, slack)


def interval_matvec(mat: IntervalSparseMatrix, v: np.ndarray):
    """Enclosure ``[lo, hi]`` of ``L v`` for every ``L`` in the interval matrix."""
    x = v[mat.cols]
    p1lo, p1hi = rd.mul_down(mat.lo, x), rd.mul_up(mat.lo, x)
    p2lo, p2hi = rd.mul_down(mat.hi, x), rd.mul_up(mat.hi, x)
    plo = np.minimum(p1lo, p2lo)
    phi = np.maximum(p1hi, p2hi)
    return _row_bounds(mat.rows, mat.n, plo, phi)


def _sum_bounds(lo, hi):
    return rd.sum_down(lo), rd.sum_up(hi)


def residuals(mat: IntervalSparseMatrix, u_tilde: np.ndarray, scheme=None) -> tuple[float, float]:
    """Certified ``(eps1, eps2)``; raises :class:`NormalizationError` when
    ``eps2 >= 1``."""
    scheme = SchemeKind.parse(scheme if scheme is not None else mat.scheme)
    u = np.asarray(u_tilde, dtype=float)
    if u.shape != (mat.n,) or not np.all(np.isfinite(u)):
        raise ValueError("u_tilde must be a finite vector of length n")
    n = mat.n
    nf = float(n)
    # i* u = sum(u) / n
    slo, shi = _sum_bounds(u, u)
    iu_lo, iu_hi = rd.div_down(slo, nf), rd.div_up(shi, nf)
    eps2 = float(max(rd.sub_up(1.0, iu_lo), rd.sub_up(iu_hi, 1.0), 0.0))
    if not eps2 < 1:
        raise NormalizationError(f"normalization failure: |i*u - 1| <= {eps2} is not < 1")
    lo, hi = interval_matvec(mat, u)
    if scheme is SchemeKind.HAT:
        # Q u = L u + e i*(u - L u)
        dlo, dhi = rd.sub_down(u, hi), rd.sub_up(u, lo)
        clo, chi = _sum_bounds(dlo, dhi)
        clo, chi = rd.div_down(clo, nf), rd.div_up(chi, nf)
        lo, hi = rd.add_down(lo, clo), rd.add_up(hi, chi)
    rlo, rhi = rd.sub_down(lo, u), rd.sub_up(hi, u)
    mag = np.maximum(np.abs(rlo), np.abs(rhi))
    if scheme is SchemeKind.ULAM:
        eps1 = rd.div_up(rd.sum_up(mag), nf)
    else:
        eps1 = float(np.max(mag))
    return float(eps1), eps2


def weak_norm_up(u: np.ndarray, scheme) -> float:
    """Upper bound of the scheme's weak norm of the function with coefficients ``u``."""
    scheme = SchemeKind.parse(scheme)
    if scheme is SchemeKind.ULAM:
        return float(rd.div_up(rd.sum_up(np.abs(u)), float(u.size)))
    return float(np.max(np.abs(u)))


def fixed_point(mat: IntervalSparseMatrix, scheme=None, tol: float = 1e-13) -> ApproxFixedPoint:
    scheme = SchemeKind.parse(scheme if scheme is not None else mat.scheme)
    u = approximate_fixed_point(mat, scheme, tol)
    e1, e2 = residuals(mat, u, scheme)
    fr = _weak_norm(_q_action(mat, scheme)(u) - u, scheme)
    return ApproxFixedPoint(u, e1, e2, fr, "arnoldi")


def density_points(n: int, scheme) -> np.ndarray:
    """Cell midpoints (Ulam) or nodes (hat) where the density is reported."""
    scheme = SchemeKind.parse(scheme)
    if scheme is SchemeKind.ULAM:
        return (np.arange(n) + 0.5) / n
    return np.arange(n) / n


def export_density(path, u: np.ndarray, scheme) -> None:
    x = density_points(u.size, scheme)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for a, b in zip(x, u):
            w.writerow([repr(float(a)), repr(float(b))])
