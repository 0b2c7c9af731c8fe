"""Rigorous bounds ``C_k >= ||Q_h^k restricted to U^0||`` by floating-point
power iteration on the basis ``e_0 - e_j`` of the zero-integral subspace,
with explicit accounting of rounding and enclosure errors."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import rounding as rd
from .discretization import IntervalSparseMatrix, SchemeKind

BATCH = 128  # columns per block; fixed so results do not depend on threads

SOURCES = ("apriori_power", "apriori_LY", "submult", "computed", "coarse_fine")


def gamma(z: int, u: float = rd.U) -> float:
    """Upward-rounded ``z u / (1 - z u)``; raises when ``z u >= 1``."""
    return rd.gamma_up(int(z), u)


@dataclass
class NormBounds:
    """Bounds ``C[k]`` for ``k = 0..k_max`` with provenance tags."""

    C: list
    source: list
    m_star: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.C = [float(c) for c in self.C]
        if self.m_star is None:
            self.m_star = next((k for k, c in enumerate(self.C) if k > 0 and c < 1), None)

    @property
    def k_max(self) -> int:
        return len(self.C) - 1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "C_k", "source"])
            for k, (c, s) in enumerate(zip(self.C, self.source)):
                w.writerow([k, repr(c), s])

    def to_dict(self) -> dict:
        return {"C": self.C, "source": self.source, "m_star": self.m_star}


@dataclass
class ErrorRecursion:
    """Worst-case (over basis columns) rounding error ``eps[k]``."""

    gamma_z: float
    eps: list


def operator_norm_bound(mat: IntervalSparseMatrix, scheme=None) -> float:
    """``||M|| + delta + ||e|| ||i* - i* L||`` rounded upward.

    The i-correction term vanishes for Ulam, whose true matrix preserves
    integrals exactly.
    """
    scheme = SchemeKind.parse(scheme if scheme is not None else mat.scheme)
    r = rd.add_up(mat.mid_norm, mat.delta)
    if scheme is SchemeKind.HAT:
        r = rd.add_up(r, mat.i_residual)
    return float(r)


def _column_block(n: int, start: int, stop: int) -> np.ndarray:
    V = np.zeros((n, stop - start))
    V[0, :] = 1.0
    V[np.arange(start, stop), np.arange(stop - start)] = -1.0
    return V


class _Job:
    def __init__(self, mat, hat, k_max, fn):
        self.M = mat.mid
        self.indptr = self.M.indptr.astype(np.int32)
        self.indices = self.M.indices.astype(np.int32)
        self.data = np.ascontiguousarray(self.M.data, dtype=float)
        self.n = mat.n
        self.hat = hat
        self.k_max = k_max
        self.fn = fn
        self.h = 1.0 / mat.n
        n = mat.n
        self.g_n = rd.gamma_up(n)
        self.g_n2 = rd.gamma_up(n + 2)
        self.g_z = rd.gamma_up(max(mat.z, 1))
        # per-step growth of the floating error: (gamma_z ||M|| + delta)
        self.step = rd.add_up(rd.mul_up(self.g_z, mat.mid_norm), mat.delta)
        self.normQ = operator_norm_bound(mat)

    def run(self, start: int, stop: int):
        n, k_max, b = self.n, self.k_max, stop - start
        V = _column_block(n, start, stop)
        vnorm = np.zeros((k_max + 1, b))
        wnorm = np.zeros((k_max + 1, b))
        S = np.zeros((k_max + 1, n) if self.hat else (1, 1))
        self.fn(self.indptr, self.indices, self.data, V, k_max, self.hat, self.h, vnorm, wnorm, S)
        if self.hat:
            return self._finish_hat(vnorm, wnorm, S)
        return self._finish_ulam(vnorm)

    def _finish_ulam(self, vnorm):
        # exact l1 norm of the floating vector, from its floating sum
        nv = rd.mul_up(vnorm, rd.add_up(1.0, 2.0 * self.g_n))
        nv[0] = 2.0
        eps = np.zeros_like(nv)
        for k in range(self.k_max):
            eps[k + 1] = rd.add_up(rd.mul_up(self.step, nv[k]), eps[k])
        tot = rd.add_up(nv, eps)
        return np.max(tot, axis=1), np.max(eps, axis=1), np.max(nv, axis=1)

    def _finish_hat(self, vnorm, wnorm, S):
        eps = np.zeros_like(vnorm)
        two_step = rd.mul_up(2.0, self.step)
        for k in range(self.k_max):
            a = rd.mul_up(2.0 * self.g_n2, rd.add_up(wnorm[k + 1], wnorm[k]))
            b = rd.mul_up(two_step, vnorm[k])
            c = rd.mul_up(self.normQ, eps[k])
            eps[k + 1] = rd.add_up(rd.add_up(a, b), c)
        eps_sum = np.array([rd.sum_up(e) for e in eps])
        return S, eps_sum, np.max(eps, axis=1)


def norms_of_powers(mat: IntervalSparseMatrix, scheme=None, k_max: int = 10, threads: int | None = None,
                    backend: str | None = None, batch: int = BATCH) -> NormBounds:
    """Bounds ``C_k`` for ``k = 0..k_max``.

    Ulam (l1): ``C_k = max_j (||v_j^k|| + eps_jk)``.  Hat (linf):
    ``C_k = max_i sum_j (|v_ij^k| + eps_jk)``.  Entries where the rounding
    term is at least as large as the floating norm are flagged as
    error-dominated and capped by ``||Q||^k``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    scheme = SchemeKind.parse(scheme if scheme is not None else mat.scheme)
    hat = scheme is SchemeKind.HAT
    _, fn = kernels.get_backend(backend)
    job = _Job(mat, hat, k_max, fn)
    n = mat.n
    starts = list(range(1, n, batch))
    spans = [(s, min(s + batch, n)) for s in starts]
    if threads is None or threads <= 1 or len(spans) == 1:
        results = [job.run(a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda ab: job.run(*ab), spans))
    if hat:
        S = np.zeros((k_max + 1, n))
        eps_tot = np.zeros(k_max + 1)
        eps_max = np.zeros(k_max + 1)
        for S_b, es, em in results:  # ordered reduction
            S += S_b
            eps_tot = rd.add_up(eps_tot, es)
            eps_max = np.maximum(eps_max, em)
        S_up = rd.mul_up(np.max(S, axis=1), rd.add_up(1.0, 2.0 * job.g_n))
        C = rd.add_up(S_up, eps_tot)
        err_part = eps_tot
    else:
        C = np.zeros(k_max + 1)
        eps_max = np.zeros(k_max + 1)
        for tot, em, _ in results:
            C = np.maximum(C, tot)
            eps_max = np.maximum(eps_max, em)
        err_part = eps_max
    C = np.asarray(C, dtype=float)
    C[0] = 1.0
    source = ["computed"] * (k_max + 1)
    dominated = [k for k in range(1, k_max + 1) if err_part[k] >= C[k] - err_part[k]]
    q = 1.0
    powers = [1.0]
    for _ in range(k_max):
        q = rd.mul_up(q, job.normQ)
        powers.append(q)
    for k in dominated:
        if powers[k] < C[k]:
            C[k] = powers[k]
            source[k] = "apriori_power"
    diag = {
        "gamma_z": job.g_z,
        "eps": [float(e) for e in eps_max],
        "error_dominated": dominated,
        "normQ": job.normQ,
        "backend": kernels.BACKEND if backend is None else backend,
        "batch": batch,
    }
    return NormBounds(list(C), source, diagnostics=diag)


def error_recursion(nb: NormBounds) -> ErrorRecursion:
    return ErrorRecursion(nb.diagnostics["gamma_z"], nb.diagnostics["eps"])
