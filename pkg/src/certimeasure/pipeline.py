"""One-grid and two-grid certification runs and their reports."""
from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import (
    CertifiedError,
    ContractionError,
    NormalizationError,
    aggregate_bounds,
    apriori_norm_bounds,
    best_error_bound,
    error_bound,
    coarse_to_fine,
)
from .discretization import AssemblyError, IntervalSparseMatrix, SchemeKind, assemble, scheme_constants
from .dynamics import CoefficientError, LYCoefficients, PiecewiseMap, UnboundedDistortionError, dfly_coefficients, \
    strong_norm_bound
from .eigensolver import export_density, fixed_point, weak_norm_up
from .interval import NoRootError
from .maps import map_from_config
from .norms import NormBounds, norms_of_powers, operator_norm_bound
from .observables import LyapunovEnclosure, UnboundedObservableError, lyapunov_enclosure

log = logging.getLogger(__name__)

CERTIFIED = "certified"
FAILED = "failed"
K_START = 10
K_BUDGET = 80
EXTEND = 4  # submultiplicative extension factor of the bound lists
IMPROVE = 0.01  # relative gain needed to keep doubling k after certification


@dataclass
class RunReport:
    map: dict
    scheme: str
    mode: str
    n: int | None = None
    n_C: int | None = None
    n_F: int | None = None
    k_max: int | None = None
    ly: LYCoefficients | None = None
    norm_bounds: NormBounds | None = None
    coarse_bounds: NormBounds | None = None
    error: CertifiedError | None = None
    status: str = FAILED
    failure: dict | None = None
    lyapunov: LyapunovEnclosure | dict | None = None
    timings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    # artifacts kept in memory for export, not serialized
    u_tilde: np.ndarray | None = field(default=None, repr=False)
    matrix: IntervalSparseMatrix | None = field(default=None, repr=False)

    def fail(self, stage: str, reason: str, recommendation: str = "") -> RunReport:
        self.status = FAILED
        self.failure = {"stage": stage, "reason": reason, "recommendation": recommendation}
        return self

    def to_dict(self) -> dict:
        ly = self.lyapunov
        return {
            "status": self.status,
            "map": self.map,
            "scheme": self.scheme,
            "mode": self.mode,
            "n": self.n,
            "n_C": self.n_C,
            "n_F": self.n_F,
            "k_max": self.k_max,
            "ly": self.ly.to_dict() if self.ly else None,
            "norm_bounds": self.norm_bounds.to_dict() if self.norm_bounds else None,
            "coarse_bounds": self.coarse_bounds.to_dict() if self.coarse_bounds else None,
            "error": self.error.to_dict() if self.error else None,
            "failure": self.failure,
            "lyapunov": ly.to_dict() if isinstance(ly, LyapunovEnclosure) else ly,
            "timings": self.timings,
            "diagnostics": self.diagnostics,
        }

    def write(self, out, dump_matrix: bool = False) -> None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2, default=_json_default))
        if self.u_tilde is not None:
            export_density(out / "density.csv", self.u_tilde, self.scheme)
        if self.norm_bounds is not None:
            self.norm_bounds.to_csv(out / "norms.csv")
        if dump_matrix and self.matrix is not None:
            self.matrix.export(out / "matrix.coo")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


@contextmanager
def _timer(report: RunReport, key: str):
    t = time.perf_counter()
    try:
        yield
    finally:
        report.timings[key] = report.timings.get(key, 0.0) + time.perf_counter() - t


def _describe(m: PiecewiseMap) -> dict:
    base = m.base if m.base is not None else m
    return {"name": base.name, "iterate": m.power, "branches": m.n_branches}


def _resolve_map(m) -> PiecewiseMap:
    if isinstance(m, PiecewiseMap):
        return m
    if isinstance(m, str):
        return map_from_config({"name": m})
    return map_from_config(m)


def _ly(report, m, scheme, ly):
    if ly is not None:
        return ly
    with _timer(report, "dfly"):
        return dfly_coefficients(m, scheme.value)


def _computed_bounds(mat, scheme, ly, sc, k, threads, backend):
    nb = norms_of_powers(mat, scheme, k, threads=threads, backend=backend)
    normQ = operator_norm_bound(mat, scheme)
    ap, ap_src = apriori_norm_bounds(ly, sc, normQ, 1.0 / mat.n, k, with_source=True)
    agg = aggregate_bounds({"computed": nb.C}, ap, ap_src, k_max=EXTEND * k)
    agg.diagnostics = dict(nb.diagnostics)
    return agg


def _eigen(report, mat, scheme):
    with _timer(report, "eigen"):
        fp = fixed_point(mat, scheme)
    report.u_tilde = fp.u_tilde
    report.diagnostics.update({"eps1": fp.eps1, "eps2": fp.eps2, "float_residual": fp.float_residual})
    return fp


def _estimate(report, mat, scheme, sc, ly, fp, C, k=None) -> CertifiedError:
    """Best certified bound from ``C``; with ``k``, also the floor that no
    longer list can beat (every ``m >= k`` has tail ``>= C_0 + ... + C_{k-1}``)."""
    args = (sc, 1.0 / mat.n, ly.norm_L.hi, strong_norm_bound(ly).hi, fp.eps1, fp.eps2,
            weak_norm_up(fp.u_tilde, scheme))
    with _timer(report, "estimate"):
        err = best_error_bound(C, *args)
        if k is not None:
            floor = error_bound(float(np.sum(C[:k])), *args)
            err.components["floor"] = floor.bound
        return err


def _search(report, k_max, k_budget, bounds_at, estimate):
    """Double ``k`` until contraction is certified, then keep doubling while
    a longer list could still improve the bound by more than ``IMPROVE``
    (within budget)."""
    k = k_max
    best = None
    while True:
        nb = bounds_at(k)
        if nb is not None and nb.m_star is not None:
            err = estimate(nb, k)
            if best is None or err.bound < best[1].bound:
                best = (k, err, nb)
            if err.components["floor"] >= (1 - IMPROVE) * best[1].bound:
                break
        if 2 * k > k_budget:
            break
        k *= 2
    return k, best


def _lyapunov(report, m, scheme, lyap):
    if not lyap:
        return
    with _timer(report, "lyapunov"):
        try:
            report.lyapunov = lyapunov_enclosure(m, report.u_tilde, report.error, scheme)
        except UnboundedObservableError as exc:
            report.lyapunov = {"status": "unbounded observable", "reason": str(exc)}


_STAGE_ERRORS = (CoefficientError, UnboundedDistortionError, AssemblyError, NoRootError, NormalizationError)


def one_grid(m, scheme="ulam", n: int = 1024, k_max: int = K_START, k_budget: int = K_BUDGET,
             threads: int | None = None, lyapunov: bool = False, ly: LYCoefficients | None = None,
             backend: str | None = None) -> RunReport:
    """Certify ``||u - u~_h||`` with norms of powers computed on one grid."""
    if n < 2:
        raise ValueError("n must be >= 2")
    m = _resolve_map(m)
    scheme = SchemeKind.parse(scheme)
    sc = scheme_constants(scheme)
    report = RunReport(_describe(m), scheme.value, "one_grid", n=n)
    stage = "dfly"
    try:
        ly = _ly(report, m, scheme, ly)
        report.ly = ly
        stage = "assembly"
        with _timer(report, "assembly"):
            mat = assemble(m, n, scheme)
        report.matrix = mat
        report.diagnostics["matrix"] = mat.summary()
        stage = "eigen"
        fp = _eigen(report, mat, scheme)
        stage = "norms"

        def bounds_at(k):
            with _timer(report, "norms"):
                agg = _computed_bounds(mat, scheme, ly, sc, k, threads, backend)
            report.k_max, report.norm_bounds = k, agg
            return agg

        k, best = _search(report, k_max, k_budget, bounds_at, lambda nb, k: _estimate(report, mat, scheme, sc, ly, fp, nb.C, k))
        if best is None:
            return report.fail("norms", f"contraction not certified up to k_max = {k}",
                               "increase n or the k_max budget")
        report.k_max, report.error, report.norm_bounds = best
        report.status = CERTIFIED
        _lyapunov(report, m, scheme, lyapunov)
        return report
    except _STAGE_ERRORS as exc:
        return report.fail(stage, f"{type(exc).__name__}: {exc}")
    except ContractionError as exc:
        return report.fail("estimate", str(exc))


def two_grid(m, scheme="ulam", n_C: int = 1024, n_F: int = 65536, k_max: int = K_START,
             k_budget: int = K_BUDGET, threads: int | None = None, lyapunov: bool = False,
             ly: LYCoefficients | None = None, backend: str | None = None) -> RunReport:
    """Certify on the fine grid using norm bounds transferred from the coarse one."""
    if n_C < 2 or n_F < n_C or n_F % n_C:
        raise ValueError("need 2 <= n_C <= n_F with n_C dividing n_F")
    m = _resolve_map(m)
    scheme = SchemeKind.parse(scheme)
    sc = scheme_constants(scheme)
    report = RunReport(_describe(m), scheme.value, "two_grid", n_C=n_C, n_F=n_F)
    stage = "dfly"
    try:
        ly = _ly(report, m, scheme, ly)
        report.ly = ly
        stage = "assembly"
        with _timer(report, "assembly"):
            coarse = assemble(m, n_C, scheme)
            fine = coarse if n_F == n_C else assemble(m, n_F, scheme)
        report.matrix = fine
        report.diagnostics["coarse_matrix"] = coarse.summary()
        report.diagnostics["matrix"] = fine.summary()
        stage = "eigen"
        fp = _eigen(report, fine, scheme)
        normQ_F = operator_norm_bound(fine, scheme)
        stage = "norms"
        state = {"coarse_ok": False, "cf_min": None}

        def bounds_at(k):
            with _timer(report, "norms"):
                cagg = _computed_bounds(coarse, scheme, ly, sc, k, threads, backend)
                report.k_max, report.coarse_bounds = k, cagg
                state[k] = cagg
                if cagg.m_star is None:
                    return None
                state["coarse_ok"] = True
                kk = len(cagg.C) - 1
                CF = coarse_to_fine(cagg.C, ly, sc, 1.0 / n_C, 1.0 / n_F, normQ_F, kk)
                ap, ap_src = apriori_norm_bounds(ly, sc, normQ_F, 1.0 / n_F, kk, with_source=True)
                fagg = aggregate_bounds({"coarse_fine": CF}, ap, ap_src, k_max=EXTEND * k)
                fagg.diagnostics = {"coarse_fine_raw": CF}
                state["cf_min"] = min(CF[1:])
                report.norm_bounds = fagg
                return fagg

        def estimate(nb, k):
            return _estimate(report, fine, scheme, sc, ly, fp, nb.C, k)

        k, best = _search(report, k_max, k_budget, bounds_at, estimate)
        if not state["coarse_ok"]:
            return report.fail("norms", f"coarse contraction not certified up to k_max = {k}",
                               "increase n_C or the k_max budget")
        if best is None:
            cf_min = state["cf_min"]
            report.diagnostics["min_coarse_fine"] = cf_min
            return report.fail("coarse_fine", f"all C^F >= 1 (smallest {cf_min:.4g}): the coarse-fine transfer "
                               "does not certify contraction on the fine grid",
                               "increase the coarse grid size n_C")
        k_best, report.error, report.norm_bounds = best
        report.k_max, report.coarse_bounds = k_best, state[k_best]
        report.status = CERTIFIED
        _lyapunov(report, m, scheme, lyapunov)
        return report
    except _STAGE_ERRORS as exc:
        return report.fail(stage, f"{type(exc).__name__}: {exc}")
    except ContractionError as exc:
        return report.fail("estimate", str(exc))


def run(config: dict) -> RunReport:
    """Dispatch a run from a flat configuration mapping (CLI or file)."""
    rec = {"name": config["map"], "params": config.get("params") or {}, "iterate": config.get("iterate")}
    m = map_from_config(rec)
    common = {
        "scheme": config.get("scheme", "ulam"),
        "k_max": int(config.get("kmax", K_START)),
        "k_budget": int(config.get("kbudget", K_BUDGET)),
        "threads": config.get("threads"),
        "lyapunov": bool(config.get("lyapunov", False)),
    }
    if config.get("one_grid"):
        return one_grid(m, n=int(config["n"]), **common)
    return two_grid(m, n_C=int(config.get("coarse_n", 1024)), n_F=int(config.get("fine_n", 65536)), **common)


def bound_fields(report: RunReport) -> dict:
    """The numerical certificate of a report (timings excluded)."""
    d = report.to_dict()
    return {k: d[k] for k in ("status", "error", "norm_bounds", "coarse_bounds", "ly", "lyapunov")} | {
        "eps": {k: report.diagnostics.get(k) for k in ("eps1", "eps2")}}


__all__ = ["RunReport", "one_grid", "two_grid", "run", "bound_fields", "CERTIFIED", "FAILED"]
