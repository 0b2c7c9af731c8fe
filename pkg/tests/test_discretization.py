import json
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from certimeasure.discretization import (
    Partition,
    SchemeKind,
    assemble,
    branch_pullback,
    pullback,
    scheme_constants,
)
from certimeasure.maps import doubling, lanford, linear, nonlinear_nonmarkov, perturbed_4x
from fixtures import figure_one_map, identity_map


ORACLE_TOL = mpmath.mpf("1e-30")


def _frac(x):
    return Fraction(float(x))


def _encloses(lo, hi, q):
    return _frac(lo) <= q <= _frac(hi)


def _assert_contains_exact(mat, P):
    n = mat.n
    lo, hi = mat.dense()
    for i in range(n):
        for j in range(n):
            assert _encloses(lo[i, j], hi[i, j], P[i][j]), (i, j, lo[i, j], hi[i, j], P[i][j])


# ---------------------------------------------------------------- pull-back
def test_pullback_doubling():
    X = pullback(doubling(), 2)
    exact = [Fraction(k, 4) for k in range(5)]
    assert len(X.lo) == 5
    for lo, hi, q in zip(X.lo, X.hi, exact):
        assert _encloses(lo, hi, q)


def test_pullback_identity():
    X = pullback(identity_map(), 4)
    assert list(X.lo) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert list(X.hi) == list(X.lo)


def test_pullback_figure_one():
    m = figure_one_map()
    X = pullback(m, 4)
    # 8 points, 7 intervals: 0, 0.15, 0.4, 0.5, 0.625, 0.75, 0.875, 1
    exact = [Fraction(0), Fraction(3, 20), Fraction(2, 5), Fraction(1, 2), Fraction(5, 8), Fraction(3, 4),
             Fraction(7, 8), Fraction(1)]
    assert len(X.lo) == 8
    for lo, hi, q in zip(X.lo, X.hi, exact):
        assert _encloses(lo, hi, q)
    # the first branch has image (0.4, 0.9]: nothing lands in the first cell
    bp = branch_pullback(m.branches[0], 4)
    assert 0 not in set(bp.cells.tolist())


@given(st.sampled_from(["doubling", "lanford", "perturbed_4x", "nonlinear_nonmarkov"]), st.integers(2, 200))
def test_pullback_sorted(name, n):
    m = {"doubling": doubling, "lanford": lanford, "perturbed_4x": perturbed_4x,
         "nonlinear_nonmarkov": nonlinear_nonmarkov}[name]()
    X = pullback(m, n)
    mid = 0.5 * X.lo + 0.5 * X.hi
    assert np.all(np.diff(mid) >= 0)
    # adjacent enclosures overlap at most at a point
    assert np.all(X.lo[1:] >= X.hi[:-1]) or np.all(X.hi[:-1] - X.lo[1:] <= 0)
    assert len(X.lo) <= n * m.n_branches + m.n_branches + 1


# ---------------------------------------------------------------- assembly
def test_assemble_doubling_ulam():
    mat = assemble(doubling(), 2, "ulam")
    lo, hi = mat.dense()
    for i in range(2):
        for j in range(2):
            assert _encloses(lo[i, j], hi[i, j], Fraction(1, 2))


def test_assemble_triple_ulam():
    mat = assemble(linear(3), 3, "ulam")
    _assert_contains_exact(mat, [[Fraction(1, 3)] * 3 for _ in range(3)])


def test_assemble_doubling_hat():
    mat = assemble(doubling(), Partition(4), "hat")
    assert mat.entry(0, 0).contains(0.5) and mat.entry(0, 2).contains(0.5)
    lo, hi = mat.dense()
    assert set(np.flatnonzero(hi[0] > 0).tolist()) == {0, 2}


def test_scheme_constants():
    u = scheme_constants("ulam")
    assert (u.K, u.E, u.M, u.alpha, u.S1, u.S2, u.weak_norm) == (0.5, 0.0, 2.0, 1.0, 0.0, 1.0, "L1")
    h = scheme_constants(SchemeKind.HAT)
    assert (h.K, h.E, h.M, h.alpha, h.S1, h.S2, h.weak_norm) == (0.5, 0.5, 2.0, 1.0, 1.0, 1.0, "Linf")


def test_partition():
    p = Partition(8)
    assert p.nodes[0] == 0.0 and p.nodes[-1] == 1.0 and np.all(np.diff(p.nodes) > 0)
    with pytest.raises(ValueError):
        Partition(1)


# ---------------------------------------------------------------- exact oracles
@given(st.integers(2, 6), st.integers(2, 40))
def test_ulam_linear_contains_rational(k, n):
    mat = assemble(linear(k), n, "ulam")
    _assert_contains_exact(mat, oracles.ulam_matrix_linear(k, n))
    assert mat.z <= 2 * k
    assert mat.i_residual <= 1e-12
    assert np.all(mat.column_sums().contains(1.0))


@given(st.integers(2, 6), st.integers(2, 40))
def test_hat_linear_contains_rational(k, n):
    mat = assemble(linear(k), n, "hat")
    _assert_contains_exact(mat, oracles.hat_matrix_linear(k, n))
    assert mat.z <= 2 * k
    assert mat.i_residual <= 1e-12


def test_figure_one_ulam_contains_rational():
    half = Fraction(1, 2)
    pieces = [(Fraction(0), half, Fraction(-1), Fraction(9, 10)), (half, Fraction(1), Fraction(2), Fraction(0))]
    for n in (4, 10, 64):
        mat = assemble(figure_one_map(), n, "ulam")
        _assert_contains_exact(mat, oracles.ulam_matrix_pwlinear(pieces, n))


@pytest.mark.parametrize("name", ["lanford", "perturbed_4x"])
@pytest.mark.parametrize("scheme", ["ulam", "hat"])
def test_nonlinear_contains_extended_precision(name, scheme):
    m = {"lanford": lanford, "perturbed_4x": perturbed_4x}[name]()
    for n in (8, 32, 64):
        mat = assemble(m, n, scheme)
        P = (oracles.ulam_matrix_mp if scheme == "ulam" else oracles.hat_matrix_mp)(name, n)
        lo, hi = mat.dense()
        for i in range(n):
            for j in range(n):
                # the oracle itself is accurate to about 1e-38
                assert mpmath.mpf(lo[i, j]) - ORACLE_TOL <= P[i][j] <= mpmath.mpf(hi[i, j]) + ORACLE_TOL
        assert mat.z <= 2 * m.n_branches


def test_ulam_column_sums_and_radius():
    for m in (lanford(), perturbed_4x(), nonlinear_nonmarkov()):
        mat = assemble(m, 256, "ulam")
        assert np.all(mat.column_sums().contains(1.0))
        # the residual is controlled by the entry radii
        assert mat.i_residual <= 256 * float(np.max(mat.rad)) + 1e-15
        assert mat.delta >= 0


def test_matrix_export(tmp_path):
    mat = assemble(doubling(), 4, "ulam")
    path = tmp_path / "matrix.coo"
    mat.export(path)
    lines = path.read_text().splitlines()
    assert len(lines) == mat.rows.size
    i, j, lo, hi = lines[0].split()
    assert int(i) == mat.rows[0] and float(lo) <= float(hi)
    side = json.loads((tmp_path / "matrix.coo.json").read_text())
    assert {"n", "z", "delta", "i_residual"} <= set(side)


def test_assembly_is_deterministic():
    a = assemble(perturbed_4x(), 512, "hat")
    b = assemble(perturbed_4x(), 512, "hat")
    assert np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)
    assert a.delta == b.delta
