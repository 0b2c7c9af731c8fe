import numpy as np
import pytest

from certimeasure.bounds import NormalizationError
from certimeasure.discretization import assemble
from certimeasure.eigensolver import (
    approximate_fixed_point,
    density_points,
    export_density,
    fixed_point,
    interval_matvec,
    residuals,
    weak_norm_up,
)
from certimeasure.maps import doubling, lanford, linear, perturbed_4x


@pytest.mark.parametrize("scheme", ["ulam", "hat"])
def test_doubling_fixed_point_is_constant(scheme):
    mat = assemble(doubling(), 64, scheme)
    fp = fixed_point(mat, scheme)
    assert np.max(np.abs(fp.u_tilde - 1.0)) <= 1e-12
    assert fp.eps1 <= 1e-12 and fp.eps2 <= 1e-14


def test_triple_small_grid():
    mat = assemble(linear(3), 3, "ulam")
    fp = fixed_point(mat)
    assert np.allclose(fp.u_tilde, 1.0, atol=1e-14)


def test_lanford_density_positive_and_normalized():
    mat = assemble(lanford(), 1024, "ulam")
    fp = fixed_point(mat)
    u = fp.u_tilde
    assert np.all(u > 0)
    assert abs(np.sum(u) / u.size - 1.0) <= 1e-13
    assert fp.eps1 <= 1e-10
    # agrees with a dense eigendecomposition of the midpoint matrix
    w, V = np.linalg.eig(mat.mid.toarray())
    v = np.real(V[:, np.argmin(np.abs(w - 1))])
    v *= v.size / np.sum(v)
    assert np.max(np.abs(u - v)) <= 1e-9


@pytest.mark.parametrize("scheme", ["ulam", "hat"])
def test_residuals_dominate_float_residual(scheme):
    m = perturbed_4x() if scheme == "hat" else lanford()
    mat = assemble(m, 256, scheme)
    fp = fixed_point(mat, scheme)
    assert fp.eps1 >= fp.float_residual
    # a perturbed vector has a larger certified residual
    v = fp.u_tilde * (1 + 1e-3 * np.sin(np.arange(mat.n)))
    e1, _ = residuals(mat, v * (mat.n / np.sum(v)), scheme)
    assert e1 > fp.eps1


def test_interval_matvec_encloses_dense_product():
    mat = assemble(lanford(), 128, "ulam")
    lo, hi = mat.dense()
    rng = np.random.default_rng(1)
    v = rng.standard_normal(mat.n)
    ylo, yhi = interval_matvec(mat, v)
    for A in (lo, hi, 0.5 * (lo + hi)):
        y = A @ v
        assert np.all(ylo <= y + 1e-300) and np.all(y <= yhi + 1e-300)


def test_normalization_error():
    mat = assemble(doubling(), 16, "ulam")
    with pytest.raises(NormalizationError):
        residuals(mat, np.full(16, 2.5))
    with pytest.raises(ValueError):
        residuals(mat, np.ones(15))


def test_approximate_fixed_point_scaled():
    mat = assemble(perturbed_4x(), 128, "hat")
    u = approximate_fixed_point(mat)
    assert abs(np.mean(u) - 1.0) <= 1e-13


def test_weak_norms():
    u = np.array([1.0, -3.0, 2.0, 0.0])
    assert weak_norm_up(u, "ulam") >= 1.5
    assert weak_norm_up(u, "hat") == 3.0


def test_density_export(tmp_path):
    u = np.linspace(1, 2, 8)
    export_density(tmp_path / "d.csv", u, "hat")
    rows = (tmp_path / "d.csv").read_text().splitlines()
    assert rows[0] == "x,value" and len(rows) == 9
    assert np.allclose(density_points(4, "ulam"), [0.125, 0.375, 0.625, 0.875])
    assert np.allclose(density_points(4, "hat"), [0, 0.25, 0.5, 0.75])
