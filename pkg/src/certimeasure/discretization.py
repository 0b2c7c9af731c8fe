"""Partition pull-backs and assembly of sparse interval matrices for the Ulam
and piecewise-linear (hat) schemes on the torus [0, 1)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import rounding as rd
from .dynamics import Branch, PiecewiseMap
from .interval import Ival, iabs, interval_newton


class SchemeKind(str, Enum):
    ULAM = "ulam"
    HAT = "hat"

    @classmethod
    def parse(cls, s) -> SchemeKind:
        if isinstance(s, cls):
            return s
        return cls(str(s).lower())


@dataclass(frozen=True)
class SchemeConstants:
    K: float
    E: float
    M: float
    alpha: float
    S1: float
    S2: float
    weak_norm: str


def scheme_constants(scheme) -> SchemeConstants:
    scheme = SchemeKind.parse(scheme)
    if scheme is SchemeKind.ULAM:
        return SchemeConstants(K=0.5, E=0.0, M=2.0, alpha=1.0, S1=0.0, S2=1.0, weak_norm="L1")
    return SchemeConstants(K=0.5, E=0.5, M=2.0, alpha=1.0, S1=1.0, S2=1.0, weak_norm="Linf")


@dataclass(frozen=True)
class Partition:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a partition needs n >= 2")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n


class AssemblyError(ValueError):
    """Certified comparisons could not place a node relative to a branch."""


# ------------------------------------------------------------------ helpers
def _node_enclosure(i, n):
    i = np.asarray(i, dtype=float)
    return rd.div_down(i, float(n)), rd.div_up(i, float(n))


def _compare_node(i: int, n: int, y: Ival, exact: Fraction | None = None) -> int | None:
    """Sign of ``i/n - y``: -1, 0 (certainly equal) or 1; None if unclear.
    ``exact`` is the rational value enclosed by ``y`` when it is known."""
    q = Fraction(i, n)
    if exact is not None:
        return (q > exact) - (q < exact)
    lo, hi = Fraction(float(y.lo)), Fraction(float(y.hi))
    if lo == hi == q:
        return 0
    if q < lo:
        return -1
    if q > hi:
        return 1
    return None


def _first_node_above(y: Ival, n: int, exact: Fraction | None = None) -> int:
    """Smallest i with i/n certainly > y (y must not be ambiguous)."""
    if exact is not None:
        return math.floor(exact * n) + 1
    i = math.floor(Fraction(float(y.hi)) * n) + 1
    # nodes inside a non-point enclosure cannot be ordered
    j = i - 1
    if j >= 0 and _compare_node(j, n, y) is None:
        raise AssemblyError(f"grid node {j}/{n} falls inside the enclosure {y}")
    return i


def _last_node_below(y: Ival, n: int, exact: Fraction | None = None) -> int:
    """Largest i with i/n certainly < y."""
    if exact is not None:
        return math.ceil(exact * n) - 1
    i = math.ceil(Fraction(float(y.lo)) * n) - 1
    j = i + 1
    if j <= n and _compare_node(j, n, y) is None:
        raise AssemblyError(f"grid node {j}/{n} falls inside the enclosure {y}")
    return i


def _solve_preimages(br: Branch, idx: np.ndarray, n: int) -> Ival:
    """Enclosures of ``br^{-1}(i/n)`` for the node indices ``idx``."""
    if idx.size == 0:
        return Ival._raw(np.empty(0), np.empty(0))
    tlo, thi = _node_enclosure(idx, n)
    target = Ival._raw(np.atleast_1d(tlo), np.atleast_1d(thi))
    dom = br.dom
    lo = np.full(idx.size, dom.lo)
    hi = np.full(idx.size, dom.hi)
    # Seed brackets from samples strictly inside the certified domain: where
    # f(x_k) < t < f(x_{k+1}) holds for sure, the root lies in [x_k, x_{k+1}].
    if br.a.hi < br.b.lo:
        xs = np.linspace(br.a.hi, br.b.lo, min(4 * idx.size + 2, 1 << 16))
        ys = br.eval(Ival._raw(xs, xs))
        if br.increasing:
            xs_s, ylo_s, yhi_s = xs, ys.lo, ys.hi
        else:
            xs_s, ylo_s, yhi_s = xs[::-1], ys.lo[::-1], ys.hi[::-1]
        t = 0.5 * target.lo + 0.5 * target.hi
        k = np.clip(np.searchsorted(0.5 * ylo_s + 0.5 * yhi_s, t) - 1, 0, xs.size - 2)
        ok = (yhi_s[k] < target.lo) & (ylo_s[k + 1] > target.hi)
        lo = np.where(ok, np.minimum(xs_s[k], xs_s[k + 1]), lo)
        hi = np.where(ok, np.maximum(xs_s[k], xs_s[k + 1]), hi)
    return interval_newton(br.eval, br.deriv, target, Ival._raw(lo, hi))


@dataclass
class BranchPullback:
    """Nodes pulled back along one branch, ascending in y."""

    branch: Branch
    x: Ival  # enclosures of the x-points (ascending in y)
    node: np.ndarray  # node index for interior points, -1 for branch endpoints
    cells: np.ndarray  # target cell of the gap between point k and k+1


def branch_pullback(br: Branch, n: int) -> BranchPullback:
    if br.increasing:
        ylo, yhi, xlo_end, xhi_end, qlo, qhi = br.ya, br.yb, br.a, br.b, br.ya_q, br.yb_q
    else:
        ylo, yhi, xlo_end, xhi_end, qlo, qhi = br.yb, br.ya, br.b, br.a, br.yb_q, br.ya_q
    i0 = _first_node_above(ylo, n, qlo)
    i1 = _last_node_below(yhi, n, qhi)
    idx = np.arange(i0, i1 + 1)
    X = _solve_preimages(br, idx, n)
    xl = np.concatenate([[xlo_end.lo], np.atleast_1d(X.lo), [xhi_end.lo]])
    xh = np.concatenate([[xlo_end.hi], np.atleast_1d(X.hi), [xhi_end.hi]])
    node = np.concatenate([[-1], idx, [-1]])
    if idx.size:
        cells = np.concatenate([[i0 - 1], idx])
    else:
        cells = np.array([math.floor((qlo if qlo is not None else Fraction(float(ylo.hi))) * n)])
    cells = np.clip(cells, 0, n - 1)
    return BranchPullback(br, Ival._raw(xl, xh), node, cells.astype(np.int64))


def pullback(m: PiecewiseMap, part: Partition | int) -> Ival:
    """Sorted enclosures of ``T^{-1}(Y)`` including branch endpoints."""
    n = part.n if isinstance(part, Partition) else int(part)
    los, his = [], []
    for br in m.branches:
        bp = branch_pullback(br, n)
        los.append(bp.x.lo)
        his.append(bp.x.hi)
    lo = np.concatenate(los)
    hi = np.concatenate(his)
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    keep = np.ones(lo.size, dtype=bool)
    keep[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    return Ival._raw(lo[keep], hi[keep])


# ---------------------------------------------------------- interval matrices
def _group_sum(starts: np.ndarray, vals: np.ndarray, upward: bool) -> np.ndarray:
    """Directed-rounded sums of consecutive groups beginning at ``starts``."""
    s = np.add.reduceat(vals, starts)
    a = np.add.reduceat(np.abs(vals), starts)
    counts = np.diff(np.append(starts, vals.size))
    multi = counts > 1
    if not np.any(multi):
        return s
    g = rd.mul_up(counts.astype(float), rd.U)
    g = rd.div_up(g, rd.sub_down(1.0, g))
    err = rd.mul_up(rd.mul_up(g, a), 1.0 + 1e-12)
    err = np.where(multi, rd.add_up(err, 1e-320), 0.0)
    return rd.add_up(s, err) if upward else rd.sub_down(s, err)


def _sums_up(index: np.ndarray, vals: np.ndarray, n: int) -> np.ndarray:
    """Upper bounds on ``sum_{index == k} vals`` for nonnegative vals."""
    s = np.bincount(index, weights=vals, minlength=n)
    c = np.bincount(index, minlength=n)
    cmax = int(c.max()) if c.size else 0
    g = rd.gamma_up(max(cmax, 1))
    return rd.add_up(rd.mul_up(s, 1.0 + 2.0 * g), np.where(c > 1, 1e-320, 0.0))


FUZZ = 2.0 ** -40


@dataclass
class IntervalSparseMatrix:
    """Enclosure of ``L_h`` as summed interval triples plus derived data."""

    n: int
    scheme: SchemeKind
    rows: np.ndarray
    cols: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_raw_triples: int = 0
    mid: sp.csr_matrix = field(init=False, repr=False)
    rad: np.ndarray = field(init=False, repr=False)
    delta: float = field(init=False)
    z: int = field(init=False)
    i_residual: float = field(init=False)
    mid_norm: float = field(init=False)

    def __post_init__(self):
        n = self.n
        mid = 0.5 * self.lo + 0.5 * self.hi
        mid = np.clip(mid, self.lo, self.hi)
        # entries in [0, tiny] come from enclosures straddling a node: centre them at 0
        fuzz = (self.lo == 0.0) & (self.hi <= FUZZ)
        mid = np.where(fuzz, 0.0, mid)
        rad = np.maximum(rd.sub_up(mid, self.lo), rd.sub_up(self.hi, mid))
        self.rad = rad
        keep = ~fuzz
        self.mid = sp.csr_matrix((mid[keep], (self.rows[keep], self.cols[keep])), shape=(n, n))
        self.mid.sum_duplicates()
        self.mid.sort_indices()
        row_nnz = np.diff(self.mid.indptr)
        self.z = int(row_nnz.max()) if row_nnz.size else 0
        absmid = np.abs(mid)
        if self.scheme is SchemeKind.ULAM:
            self.delta = float(np.max(_sums_up(self.cols, rad, n), initial=0.0))
            self.mid_norm = float(np.max(_sums_up(self.cols, absmid, n), initial=0.0))
        else:
            self.delta = float(np.max(_sums_up(self.rows, rad, n), initial=0.0))
            self.mid_norm = float(np.max(_sums_up(self.rows, absmid, n), initial=0.0))
        self.i_residual = self._i_residual()

    def column_sums(self) -> Ival:
        """Enclosures of the column sums (entries are nonnegative)."""
        hi = _sums_up(self.cols, self.hi, self.n)
        s = np.bincount(self.cols, weights=self.lo, minlength=self.n)
        c = np.bincount(self.cols, minlength=self.n)
        g = rd.gamma_up(max(int(c.max(initial=1)), 1))
        lo = rd.mul_down(s, rd.sub_down(1.0, 2.0 * g))
        return Ival._raw(lo, hi)

    def _i_residual(self) -> float:
        """Upper bound on ``||e|| ||i* - i* L||`` in the scheme's norms.

        With ``i*v = h sum v`` the residual functional is ``h (1 - colsum)``;
        its dual norm is ``max |1 - colsum|`` for L1 and ``h sum |1 - colsum|``
        for Linf.
        """
        cs = self.column_sums()
        dev = np.maximum(np.maximum(rd.sub_up(1.0, cs.lo), rd.sub_up(cs.hi, 1.0)), 0.0)
        if self.scheme is SchemeKind.ULAM:
            return float(np.max(dev))
        return rd.div_up(rd.sum_up(dev), float(self.n))

    @property
    def triples(self) -> list[tuple[int, int, Ival]]:
        return [(int(i), int(j), Ival._raw(float(a), float(b))) for i, j, a, b in zip(self.rows, self.cols, self.lo, self.hi)]

    def entry(self, i: int, j: int) -> Ival:
        sel = (self.rows == i) & (self.cols == j)
        if not np.any(sel):
            return Ival(0.0)
        return Ival._raw(float(self.lo[sel][0]), float(self.hi[sel][0]))

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros((self.n, self.n))
        hi = np.zeros((self.n, self.n))
        lo[self.rows, self.cols] = self.lo
        hi[self.rows, self.cols] = self.hi
        return lo, hi

    def summary(self) -> dict:
        return {"n": self.n, "scheme": self.scheme.value, "z": self.z, "delta": self.delta,
                "i_residual": self.i_residual, "mid_norm": self.mid_norm, "nnz": int(self.rows.size)}

    def export(self, path) -> None:
        """Write ``i j lo hi`` lines and a JSON sidecar next to them."""
        path = Path(path)
        with path.open("w") as fh:
            for i, j, a, b in zip(self.rows, self.cols, self.lo, self.hi):
                fh.write(f"{i} {j} {float(a)!r} {float(b)!r}\n")
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(self.summary(), indent=2))


def _finalize(n, scheme, rows, cols, lo, hi) -> IntervalSparseMatrix:
    n_raw = rows.size
    order = np.lexsort((cols, rows))
    rows, cols, lo, hi = rows[order], cols[order], lo[order], hi[order]
    if rows.size:
        new = np.ones(rows.size, dtype=bool)
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        lo = _group_sum(starts, lo, upward=False)
        hi = _group_sum(starts, hi, upward=True)
        rows, cols = rows[starts], cols[starts]
    return IntervalSparseMatrix(n, scheme, rows.astype(np.int64), cols.astype(np.int64), lo, hi, n_raw)


def _assemble_ulam(m: PiecewiseMap, n: int) -> IntervalSparseMatrix:
    R, C, LO, HI = [], [], [], []
    nf = float(n)
    for br in m.branches:
        bp = branch_pullback(br, n)
        xl, xh = np.atleast_1d(bp.x.lo), np.atleast_1d(bp.x.hi)
        if br.increasing:
            gl_lo, gl_hi, gr_lo, gr_hi = xl[:-1], xh[:-1], xl[1:], xh[1:]
        else:
            gl_lo, gl_hi, gr_lo, gr_hi = xl[1:], xh[1:], xl[:-1], xh[:-1]
        row = bp.cells
        jmin = np.clip(np.floor(rd.mul_down(gl_lo, nf)), 0, n - 1).astype(np.int64)
        jmax = np.clip(np.floor(rd.mul_up(gr_hi, nf)), 0, n - 1).astype(np.int64)
        jmax = np.maximum(jmax, jmin)
        cnt = jmax - jmin + 1
        g = np.repeat(np.arange(row.size), cnt)
        offs = np.arange(g.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        j = jmin[g] + offs
        c_lo_lo, c_lo_hi = _node_enclosure(j, n)
        c_hi_lo, c_hi_hi = _node_enclosure(j + 1, n)
        # |gap ∩ cell| enclosed from the endpoint enclosures
        meas_lo = rd.sub_down(np.minimum(gr_lo[g], c_hi_lo), np.maximum(gl_hi[g], c_lo_hi))
        meas_hi = rd.sub_up(np.minimum(gr_hi[g], c_hi_hi), np.maximum(gl_lo[g], c_lo_lo))
        e_lo = np.clip(rd.mul_down(np.maximum(meas_lo, 0.0), nf), 0.0, 1.0)
        e_hi = np.clip(rd.mul_up(np.maximum(meas_hi, 0.0), nf), 0.0, 1.0)
        keep = e_hi > 0
        R.append(row[g][keep])
        C.append(j[keep])
        LO.append(np.minimum(e_lo, e_hi)[keep])
        HI.append(e_hi[keep])
    return _finalize(n, SchemeKind.ULAM, np.concatenate(R), np.concatenate(C), np.concatenate(LO), np.concatenate(HI))


def _hat_nodes(br: Branch, n: int):
    """Range of node indices pulled back along ``br`` on its half-open
    domain [a, b), and the index of the node equal to ``T(a)`` if any."""
    ca, cb, qa, qb = br.ya, br.yb, br.ya_q, br.yb_q
    cand = math.ceil((qa if qa is not None else Fraction(float(ca.lo))) * n)
    a_node = cand if _compare_node(cand, n, ca, qa) == 0 else None
    if br.increasing:
        # y in [ca, cb)
        i0 = a_node if a_node is not None else _first_node_above(ca, n, qa)
        i1 = _last_node_below(cb, n, qb)
    else:
        # y in (cb, ca]
        i0 = _first_node_above(cb, n, qb)
        i1 = a_node if a_node is not None else _last_node_below(ca, n, qa)
    return i0, i1, a_node


def _assemble_hat(m: PiecewiseMap, n: int) -> IntervalSparseMatrix:
    R, C, LO, HI = [], [], [], []
    nf = float(n)
    for br in m.branches:
        i0, i1, a_node = _hat_nodes(br, n)
        if i1 < i0:
            continue
        idx = np.arange(i0, i1 + 1)
        # the node equal to T(a) has preimage exactly a
        solve = idx if a_node is None else idx[idx != a_node]
        X = _solve_preimages(br, solve, n)
        xl, xh = np.atleast_1d(X.lo), np.atleast_1d(X.hi)
        if a_node is not None:
            solve = np.append(solve, a_node)
            xl = np.append(xl, br.a.lo)
            xh = np.append(xh, br.a.hi)
        Xs = Ival._raw(xl, xh)
        inv = 1.0 / iabs(br.deriv(Xs))
        rows = np.mod(solve, n)
        # candidate hat functions overlapping each enclosure
        cmin = np.floor(rd.mul_down(xl, nf)).astype(np.int64)
        cmax = np.ceil(rd.mul_up(xh, nf)).astype(np.int64)
        cnt = cmax - cmin + 1
        g = np.repeat(np.arange(rows.size), cnt)
        col = cmin[g] + (np.arange(g.size) - np.repeat(np.cumsum(cnt) - cnt, cnt))
        t = Ival._raw(rd.mul_down(xl[g], nf), rd.mul_up(xh[g], nf)) - col.astype(float)
        phi = 1.0 - iabs(t)
        plo = np.clip(phi.lo, 0.0, 1.0)
        phi_hi = np.clip(phi.hi, 0.0, 1.0)
        vals = Ival._raw(plo, phi_hi) * inv[g]
        keep = phi_hi > 0
        R.append(rows[g][keep])
        C.append(np.mod(col, n)[keep])
        LO.append(np.maximum(vals.lo, 0.0)[keep])
        HI.append(vals.hi[keep])
    return _finalize(n, SchemeKind.HAT, np.concatenate(R), np.concatenate(C), np.concatenate(LO), np.concatenate(HI))


def assemble(m: PiecewiseMap, part: Partition | int, scheme="ulam") -> IntervalSparseMatrix:
    """Sparse interval enclosure of the discretized transfer operator."""
    n = part.n if isinstance(part, Partition) else int(part)
    if n < 2:
        raise ValueError("n must be >= 2")
    scheme = SchemeKind.parse(scheme)
    if scheme is SchemeKind.ULAM:
        return _assemble_ulam(m, n)
    return _assemble_hat(m, n)
