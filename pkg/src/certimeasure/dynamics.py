"""Piecewise expanding maps of the circle, their iterates and Lasota-Yorke
coefficients.

A base map is a list of `Piece` objects (monotone C^2 branches whose values are
already reduced mod 1).  An iterate is a list of `Branch` objects; each branch
remembers the chain of pieces it composes, so derivatives and distortions are
evaluated stage by stage with the chain rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import rounding as rd
from .interval import Ival, as_ival, bound_range, iabs, interval_newton, ipow

IvalFn = Callable[[Ival], Ival]


class UnboundedDistortionError(ArithmeticError):
    """The distortion T''/T'^2 could not be bounded on some branch."""


class CoefficientError(ValueError):
    """A precondition of the Lasota-Yorke coefficient formulas failed."""


class BranchStructureError(ValueError):
    """The branch description cannot be composed with certified comparisons."""


@dataclass(frozen=True)
class Singularity:
    """``|T''/T'^2| <= coeff * |y - point|^(-alpha)`` near ``point``."""

    point: Ival
    coeff: Ival
    alpha: Fraction


@dataclass(frozen=True, eq=False)
class Piece:
    """One monotone branch of a base map, values already reduced mod 1."""

    a: Ival
    b: Ival
    f: IvalFn
    df: IvalFn
    d2f: IvalFn | None
    increasing: bool
    ya: Ival
    yb: Ival
    dist: IvalFn | None = None
    singularity: Singularity | None = None
    # which domain endpoints coincide with the singular point
    singular_at: tuple[str, ...] = ()
    # exact rational values of T(a), T(b) when known (grid comparisons)
    ya_q: Fraction | None = None
    yb_q: Fraction | None = None

    def distortion(self, x: Ival) -> Ival:
        if self.dist is not None:
            return self.dist(x)
        d = self.df(x)
        return self.d2f(x) / ipow(d, 2)

    def clip(self, y: Ival) -> Ival:
        lo = np.clip(y.lo, self.a.lo, self.b.hi)
        hi = np.clip(y.hi, self.a.lo, self.b.hi)
        return Ival._raw(lo, hi)


@dataclass(frozen=True, eq=False)
class Branch:
    """A monotone branch of ``T^k``: a composition of base pieces.

    ``sing_a`` / ``sing_b`` list the stages ``j`` for which ``T^j`` maps the
    left / right domain endpoint exactly onto the singular point of
    ``chain[j]``.
    """

    a: Ival
    b: Ival
    increasing: bool
    ya: Ival
    yb: Ival
    chain: tuple[Piece, ...]
    sing_a: tuple[int, ...] = ()
    sing_b: tuple[int, ...] = ()
    ya_q: Fraction | None = None
    yb_q: Fraction | None = None

    @property
    def dom(self) -> Ival:
        return Ival._raw(self.a.lo, self.b.hi)

    @property
    def full_range(self) -> tuple[Ival, Ival]:
        return self.ya, self.yb

    @property
    def is_full(self) -> bool:
        ends = {(float(self.ya.lo), float(self.ya.hi)), (float(self.yb.lo), float(self.yb.hi))}
        return ends == {(0.0, 0.0), (1.0, 1.0)}

    def stages(self, x: Ival, upto: int | None = None) -> list[Ival]:
        """Enclosures of ``x, T x, ..., T^k x`` along the chain (stopping
        after stage ``upto`` when given)."""
        ys = [self.chain[0].clip(as_ival(x))]
        last = len(self.chain) if upto is None else upto
        for j, p in enumerate(self.chain[:last]):
            y = p.f(ys[-1])
            if j + 1 < len(self.chain):
                y = self.chain[j + 1].clip(y)
            ys.append(y)
        return ys

    def eval(self, x: Ival) -> Ival:
        return self.stages(x)[-1]

    def deriv(self, x: Ival) -> Ival:
        ys = self.stages(x, len(self.chain) - 1)
        d = self.chain[0].df(ys[0])
        for j in range(1, len(self.chain)):
            d = d * self.chain[j].df(ys[j])
        return d

    def distortion(self, x: Ival) -> Ival:
        """Signed ``T''/T'^2`` via ``dist(T o G) = dist_T(G) + dist_G / T'(G)``."""
        ys = self.stages(x, len(self.chain) - 1)
        d = self.chain[0].distortion(ys[0])
        for j in range(1, len(self.chain)):
            d = self.chain[j].distortion(ys[j]) + d / self.chain[j].df(ys[j])
        return d

    def deriv2(self, x: Ival) -> Ival:
        return self.distortion(x) * ipow(self.deriv(x), 2)

    def is_singular(self) -> bool:
        return bool(self.sing_a or self.sing_b)


def _ival_eq(x: Ival, y: Ival) -> bool | None:
    """True if certainly equal (same point), False if certainly different."""
    if x.lo == x.hi == y.lo == y.hi:
        return True
    if x.hi < y.lo or y.hi < x.lo:
        return False
    return None


class PiecewiseMap:
    """A piecewise monotone map of [0, 1) reduced mod 1."""

    def __init__(self, name: str, branches, base: PiecewiseMap | None = None, power: int = 1, pieces=None):
        self.name = name
        self.branches: tuple[Branch, ...] = tuple(branches)
        self.base = base
        self.power = power
        self.pieces = tuple(pieces) if pieces is not None else tuple(p for b in self.branches for p in b.chain[:1])
        self._check_tiling()

    @classmethod
    def from_pieces(cls, name: str, pieces) -> PiecewiseMap:
        pieces = tuple(pieces)
        branches = []
        for p in pieces:
            branches.append(
                Branch(
                    a=p.a,
                    b=p.b,
                    increasing=p.increasing,
                    ya=p.ya,
                    yb=p.yb,
                    chain=(p,),
                    sing_a=(0,) if "a" in p.singular_at else (),
                    sing_b=(0,) if "b" in p.singular_at else (),
                    ya_q=p.ya_q,
                    yb_q=p.yb_q,
                )
            )
        return cls(name, branches, pieces=pieces)

    def _check_tiling(self):
        br = self.branches
        if not br:
            raise BranchStructureError("a map needs at least one branch")
        if not (br[0].a.lo == br[0].a.hi == 0.0 and br[-1].b.lo == br[-1].b.hi == 1.0):
            raise BranchStructureError("branches must start at 0 and end at 1")
        for left, right in zip(br[:-1], br[1:]):
            if left.b.hi < right.a.lo or right.a.hi < left.b.lo:
                raise BranchStructureError("branch domains do not tile [0, 1]")

    @property
    def is_full_branch(self) -> bool:
        return all(b.is_full for b in self.branches)

    @property
    def iterate_of(self):
        if self.base is None:
            return None
        return self.base, self.power

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    def __repr__(self):
        return f"PiecewiseMap({self.name!r}, branches={len(self.branches)})"

    def __call__(self, x: float) -> float:
        """Floating evaluation at a point (for diagnostics, not certified)."""
        for b in self.branches:
            if b.a.lo <= x <= b.b.hi:
                return float(b.eval(Ival(x)).mid)
        raise ValueError("x outside [0, 1]")

    def iterate(self, k: int) -> PiecewiseMap:
        """Return ``T^k`` as a map whose branches are compositions of pieces."""
        if k < 1:
            raise ValueError("iterate requires k >= 1")
        if k == 1:
            return self
        root = self.base if self.base is not None else self
        k = k * self.power
        branches = list(root.branches)
        for _ in range(k - 1):
            branches = _compose_once(branches, root.pieces)
        return PiecewiseMap(f"{root.name}^{k}", branches, base=root, power=k, pieces=root.pieces)


def _compose_once(branches, pieces) -> list[Branch]:
    out = []
    for g in branches:
        img_lo, img_hi = (g.ya, g.yb) if g.increasing else (g.yb, g.ya)
        for p in pieces:
            # overlap of the image of g with the domain of p
            if img_hi.hi <= p.a.lo or p.b.hi <= img_lo.lo:
                continue
            lo, lo_src = _certified_max(img_lo, p.a)
            hi, hi_src = _certified_min(img_hi, p.b)
            if _ival_eq(lo, hi) is True or hi.hi <= lo.lo:
                continue
            if _ival_eq(lo, hi) is None:
                raise BranchStructureError("cannot certify whether an iterate branch is empty")
            # preimages under g; exact when the value is an image endpoint of g
            x_lo = _preimage(g, lo, lo_src != "dom")
            x_hi = _preimage(g, hi, hi_src != "dom")
            y_lo = p.ya if lo_src in ("dom", "both") else p.f(p.clip(lo))
            y_hi = p.yb if hi_src in ("dom", "both") else p.f(p.clip(hi))
            q_lo = p.ya_q if lo_src in ("dom", "both") else None
            q_hi = p.yb_q if hi_src in ("dom", "both") else None
            stage = len(g.chain)
            s_lo = (stage,) if lo_src in ("dom", "both") and "a" in p.singular_at else ()
            s_hi = (stage,) if hi_src in ("dom", "both") and "b" in p.singular_at else ()
            # inherited singular stages when the new endpoint is an old endpoint
            if g.increasing:
                xa, xb, ya, yb, qa, qb = x_lo, x_hi, y_lo, y_hi, q_lo, q_hi
                sa = (g.sing_a if lo_src in ("img", "both") else ()) + s_lo
                sb = (g.sing_b if hi_src in ("img", "both") else ()) + s_hi
            else:
                xa, xb, ya, yb, qa, qb = x_hi, x_lo, y_hi, y_lo, q_hi, q_lo
                sa = (g.sing_a if hi_src in ("img", "both") else ()) + s_hi
                sb = (g.sing_b if lo_src in ("img", "both") else ()) + s_lo
            inc = g.increasing == p.increasing
            out.append(
                Branch(a=xa, b=xb, increasing=inc, ya=_img_end(ya), yb=_img_end(yb), chain=g.chain + (p,),
                       sing_a=sa, sing_b=sb, ya_q=qa, yb_q=qb)
            )
    out.sort(key=lambda br: float(br.a.lo))
    return out


def _img_end(y: Ival) -> Ival:
    return Ival._raw(max(0.0, float(y.lo)), min(1.0, float(y.hi)))


def _certified_max(img: Ival, dom: Ival):
    eq = _ival_eq(img, dom)
    if eq is True:
        return img, "both"
    if eq is None:
        raise BranchStructureError(f"ambiguous comparison between {img} and {dom}")
    return (img, "img") if img.lo > dom.hi else (dom, "dom")


def _certified_min(img: Ival, dom: Ival):
    eq = _ival_eq(img, dom)
    if eq is True:
        return img, "both"
    if eq is None:
        raise BranchStructureError(f"ambiguous comparison between {img} and {dom}")
    return (img, "img") if img.hi < dom.lo else (dom, "dom")


def _preimage(g: Branch, y: Ival, is_image_end: bool) -> Ival:
    if is_image_end:
        if y is g.ya or _ival_eq(y, g.ya) is True:
            return g.a
        if y is g.yb or _ival_eq(y, g.yb) is True:
            return g.b
    return interval_newton(g.eval, g.deriv, y, g.dom)


# ---------------------------------------------------------------- LY constants
STRONG_VAR = "Var"
STRONG_LIP = "Lip"


@dataclass(frozen=True)
class LYCoefficients:
    """Certified ``(A, B)`` with ``||Lf||_s <= A||f||_s + B|||f|||`` plus the
    weak-norm constants ``norm_L`` (bound on ``||L||``) and ``W``."""

    A: Ival
    B: Ival
    norm_L: Ival
    W: Ival
    strong_space: str
    variant: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "A": [self.A.lo, self.A.hi],
            "B": [self.B.lo, self.B.hi],
            "norm_L": [self.norm_L.lo, self.norm_L.hi],
            "W": [self.W.lo, self.W.hi],
            "strong_space": self.strong_space,
            "variant": self.variant,
            "details": self.details,
        }


def _abs_deriv_range(br: Branch, tol: float, which: str = "both"):
    return bound_range(lambda x: iabs(br.deriv(x)), br.dom, tol=tol, which=which)


def inf_abs_derivative(m: PiecewiseMap, tol: float = 1e-7) -> float:
    """Certified lower bound on ``inf |T'|`` over all branches."""
    return min(float(_abs_deriv_range(br, tol, "inf").inf_bound.lo) for br in m.branches)


def min_branch_length(m: PiecewiseMap) -> float:
    return min(rd.sub_down(br.b.lo, br.a.hi) for br in m.branches)


def distortion_bound(m: PiecewiseMap, tol: float = 1e-7) -> Ival:
    """Upper bound ``D >= sup |T''/T'^2|`` over all branches."""
    lo = 0.0
    hi = 0.0
    for br in m.branches:
        if br.is_singular():
            raise UnboundedDistortionError(f"unbounded distortion: branch on [{br.a.lo}, {br.b.hi}] has a singular endpoint")
        r = bound_range(lambda x, br=br: iabs(br.distortion(x)), br.dom, tol=tol, which="sup")
        if not math.isfinite(r.sup_bound.hi):
            raise UnboundedDistortionError(f"unbounded distortion on [{br.a.lo}, {br.b.hi}]")
        lo = max(lo, float(r.sup_bound.lo))
        hi = max(hi, float(r.sup_bound.hi))
    return Ival._raw(lo, hi)


def _fail(msg, enclosure):
    raise CoefficientError(f"{msg}: {enclosure}")


def dfly_coefficients(m: PiecewiseMap, scheme: str = "ulam", variant: str = "auto", l: float | str | None = None,
                      tol: float = 1e-7) -> LYCoefficients:
    """Lasota-Yorke coefficients for ``m`` in the strong norm of ``variant``.

    Variants: ``var_general``, ``var_fullbranch``, ``lip``, ``var_integral``
    (``l`` a number or ``"auto"``), or ``auto`` which picks the applicable one
    with the smallest ``B/(1-A)``.
    """
    scheme = scheme.lower()
    if variant == "auto":
        return _auto_variant(m, scheme, tol)
    inf_d = inf_abs_derivative(m, tol)
    one = Ival(1.0)
    if variant == "lip":
        if not m.is_full_branch:
            raise CoefficientError("lip variant requires a full-branch map")
        if not inf_d > 1:
            _fail("lip variant requires inf|T'| > 1", inf_d)
        D = distortion_bound(m, tol)
        Dh = Ival(D.hi)
        A = (2.0 * Dh + 1.0) / Ival(inf_d)
        if not A.hi < 1:
            _fail("lip variant: A = sup (2D+1)/|T'| is not < 1", A)
        B = Dh * (Dh + 1.0)
        W = Dh + 1.0
        return LYCoefficients(A, B, W, W, STRONG_LIP, "lip", {"D": D.hi, "inf_deriv": inf_d})
    if scheme == "hat":
        raise CoefficientError(f"variant {variant} gives a variation inequality; the hat scheme needs 'lip'")
    if variant == "var_general":
        if not inf_d > 2:
            _fail("var_general requires inf|T'| > 2", inf_d)
        D = distortion_bound(m, tol)
        A = Ival(2.0) / Ival(inf_d)
        B = Ival(2.0) / Ival(min_branch_length(m)) + Ival(D.hi)
        return LYCoefficients(Ival(A.hi), Ival(B.hi), one, one, STRONG_VAR, variant, {"D": D.hi, "inf_deriv": inf_d})
    if variant == "var_fullbranch":
        if not m.is_full_branch:
            raise CoefficientError("var_fullbranch requires a full-branch map")
        if not inf_d > 1:
            _fail("var_fullbranch requires inf|T'| > 1", inf_d)
        D = distortion_bound(m, tol)
        A = Ival(1.0) / Ival(inf_d)
        if not A.hi < 1:
            _fail("var_fullbranch: A is not < 1", A)
        return LYCoefficients(Ival(A.hi), Ival(D.hi), one, one, STRONG_VAR, variant, {"D": D.hi, "inf_deriv": inf_d})
    if variant == "var_integral":
        if not inf_d > 2:
            _fail("var_integral requires inf|T'| > 2", inf_d)
        q = DistortionQuadrature(m)
        if l is None or l == "auto":
            return q.search_l(inf_d)
        return q.coefficients(float(l), inf_d)
    raise ValueError(f"unknown variant {variant!r}")


def _auto_variant(m: PiecewiseMap, scheme: str, tol: float) -> LYCoefficients:
    if scheme == "hat":
        return dfly_coefficients(m, scheme, "lip", tol=tol)
    best = None
    errors = []
    for v in ("var_fullbranch", "var_general", "var_integral"):
        try:
            ly = dfly_coefficients(m, scheme, v, l="auto", tol=tol)
        except (CoefficientError, UnboundedDistortionError) as exc:
            errors.append(f"{v}: {exc}")
            continue
        if ly.A.hi >= 1:
            continue
        score = strong_norm_bound(ly).hi
        if best is None or score < best[0]:
            best = (score, ly)
    if best is None:
        raise CoefficientError("no Lasota-Yorke variant applies (try an iterate); " + "; ".join(errors))
    return best[1]


def strong_norm_bound(ly: LYCoefficients) -> Ival:
    """Enclosure of ``B / (1 - A)``: bound on the strong norm of the density."""
    if not ly.A.hi < 1:
        raise CoefficientError(f"A = {ly.A} is not < 1")
    one_minus = Ival(1.0) - ly.A
    return ly.B / one_minus


# ------------------------------------------------------ singular quadrature
class DistortionQuadrature:
    """Rigorous upper bounds on ``int_{|dist| >= l} |dist| dm`` for maps whose
    distortion blows up like ``|y - s|^(-alpha)`` at branch endpoints."""

    def __init__(self, m: PiecewiseMap, cells_per_branch: int = 2048, ratio: float = 0.9,
                 min_rel: float = 2.0 ** -60, refine_rounds: int = 6):
        self.m = m
        self.cells_per_branch = cells_per_branch
        self.ratio = ratio
        self.min_rel = min_rel
        self.refine_rounds = refine_rounds
        self._cells = None

    def _grid(self, br: Branch):
        lo, hi = float(br.a.hi), float(br.b.lo)
        w = hi - lo
        pts = [np.linspace(lo, hi, self.cells_per_branch + 1)]
        tiny = []
        first = w / self.cells_per_branch

        def offsets(e: Ival):
            # stop grading well above the resolution of floats around e
            floor = max(w * self.min_rel, 1024.0 * (float(np.spacing(abs(e.hi))) + float(e.hi - e.lo)))
            n = max(1, int(math.ceil(math.log(floor / first) / math.log(self.ratio))))
            return first * self.ratio ** np.arange(1, n + 1)

        lo_cut, hi_cut = lo, hi
        if br.sing_a:
            offs = offsets(br.a)
            pts.append(lo + offs)
            lo_cut = lo + float(offs[-1])
            tiny.append(("a", float(br.a.lo), lo_cut))
        if br.sing_b:
            offs = offsets(br.b)
            pts.append(hi - offs)
            hi_cut = hi - float(offs[-1])
            tiny.append(("b", hi_cut, float(br.b.hi)))
        x = np.unique(np.concatenate(pts))
        x = x[(x >= lo_cut) & (x <= hi_cut)]
        # certified endpoint enclosures at the ends that are not singular
        cells_lo = x[:-1].copy()
        cells_hi = x[1:].copy()
        if not br.sing_a:
            cells_lo[0] = float(br.a.lo)
        if not br.sing_b:
            cells_hi[-1] = float(br.b.hi)
        return cells_lo, cells_hi, tiny

    def _tiny_integral(self, br: Branch, end: str, lo: float, hi: float) -> float:
        """Upper bound of ``int |dist|`` over a tiny cell touching a singular end."""
        X = Ival._raw(lo, hi)
        ys = br.stages(X)
        sing = br.sing_a if end == "a" else br.sing_b
        width = rd.sub_up(hi, lo)
        total = 0.0
        k = len(br.chain)
        for j in range(k):
            p = br.chain[j]
            # product of 1/|T'| over the later stages
            P = Ival(1.0)
            for i in range(j + 1, k):
                P = P / iabs(br.chain[i].df(ys[i]))
            Pj = float(P.hi)
            if j in sing:
                s = p.singularity
                # |T^j x - s| >= m_j |x - e|
                mj = Ival(1.0)
                for i in range(j):
                    mj = mj * iabs(br.chain[i].df(ys[i]))
                m_lo = float(mj.lo)
                if not m_lo > 0:
                    raise UnboundedDistortionError("cannot bound the derivative away from 0 near a singular end")
                one_minus = Ival(1) - Ival(s.alpha)
                integral = s.coeff * ipow(Ival(m_lo), -s.alpha) * ipow(Ival(width), 1 - s.alpha) / one_minus
                total = rd.add_up(total, rd.mul_up(float(integral.hi), Pj))
            else:
                d = iabs(p.distortion(ys[j]))
                if not math.isfinite(d.hi):
                    raise UnboundedDistortionError("distortion term not bounded on a tiny singular cell")
                total = rd.add_up(total, rd.mul_up(rd.mul_up(float(d.hi), Pj), width))
        return total

    def prepare(self):
        """Per-cell enclosures of |dist|; refined where they are loose."""
        if self._cells is not None:
            return self._cells
        los, his, dlo, dhi = [], [], [], []
        tiny_total = 0.0
        for br in self.m.branches:
            clo, chi, tiny = self._grid(br)
            for end, a, b in tiny:
                tiny_total = rd.add_up(tiny_total, self._tiny_integral(br, end, a, b))
            n0 = len(clo)
            for r in range(self.refine_rounds + 1):
                d = iabs(br.distortion(Ival._raw(clo, chi)))
                if r == self.refine_rounds:
                    break
                w = chi - clo
                slack = (d.hi - d.lo) * w
                total = float(np.sum(d.hi * w))
                # aim at a total slack below 1e-4 of the integral
                bad = slack > 1e-4 * total / n0
                if not np.any(bad):
                    break
                mid = 0.5 * clo[bad] + 0.5 * chi[bad]
                clo = np.concatenate([clo[~bad], clo[bad], mid])
                chi = np.concatenate([chi[~bad], mid, chi[bad]])
            if not np.all(np.isfinite(d.hi)):
                raise UnboundedDistortionError("distortion not bounded on a regular cell")
            los.append(clo)
            his.append(chi)
            dlo.append(np.asarray(d.lo, dtype=float))
            dhi.append(np.asarray(d.hi, dtype=float))
        self._cells = (np.concatenate(los), np.concatenate(his), np.concatenate(dlo), np.concatenate(dhi), tiny_total)
        return self._cells

    def integral_above(self, l: float) -> float:
        """Upper bound on ``int_{I_l} |dist| dm``, ``I_l = {|dist| >= l}``."""
        lo, hi, dlo, dhi, tiny = self.prepare()
        sel = dhi >= l
        w = rd.sub_up(hi[sel], lo[sel])
        s = rd.sum_up(rd.mul_up(dhi[sel], w))
        return rd.add_up(s, tiny)

    def coefficients(self, l: float, inf_d: float | None = None) -> LYCoefficients:
        if inf_d is None:
            inf_d = inf_abs_derivative(self.m)
        integral = self.integral_above(l)
        A = rd.add_up(rd.mul_up(0.5, integral), rd.div_up(2.0, inf_d))
        B = rd.add_up(rd.div_up(2.0, min_branch_length(self.m)), l)
        one = Ival(1.0)
        return LYCoefficients(Ival(A), Ival(B), one, one, STRONG_VAR, "var_integral",
                              {"l": l, "integral": integral, "inf_deriv": inf_d})

    def search_l(self, inf_d: float | None = None, grid: int = 400) -> LYCoefficients:
        """Choose ``l`` on a geometric grid minimizing ``B/(1-A)`` with ``A < 1``.

        The scan uses floating cumulative sums; the chosen ``l`` is then
        re-evaluated rigorously.
        """
        if inf_d is None:
            inf_d = inf_abs_derivative(self.m)
        lo, hi, _, dhi, tiny = self.prepare()
        order = np.argsort(-dhi)
        contrib = np.cumsum((dhi * (hi - lo))[order])
        sorted_d = dhi[order]
        two_over_p = 2.0 / min_branch_length(self.m)
        best = None
        for l in np.geomspace(1e-3, max(float(sorted_d[0]), 1.0), grid):
            k = int(np.searchsorted(-sorted_d, -l, side="right"))
            integral = tiny + (float(contrib[k - 1]) if k > 0 else 0.0)
            A = 0.5 * integral + 2.0 / inf_d
            if A >= 1:
                continue
            score = (two_over_p + l) / (1 - A)
            if best is None or score < best[0]:
                best = (score, float(l))
        if best is None:
            raise CoefficientError("var_integral: no l gives A < 1 (try a higher iterate)")
        ly = self.coefficients(best[1], inf_d)
        if not ly.A.hi < 1:
            raise CoefficientError("var_integral: rigorous A is not < 1")
        return ly
