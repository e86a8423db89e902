import numpy as np
import pytest

from spacelike_flow import geometry_fields as gf
from spacelike_flow.geometry_fields import GridChart


def conformal(grid, phi):
    return np.exp(2 * phi) * grid.identity()


def conformal_christoffel(dphi):
    # Gamma^k_ij = delta_ki d_j phi + delta_kj d_i phi - delta_ij d_k phi
    eye = np.eye(dphi.shape[0])
    return (np.einsum("ki,j...->kij...", eye, dphi)
            + np.einsum("kj,i...->kij...", eye, dphi)
            - np.einsum("ij,k...->kij...", eye, dphi))


def christoffel_error(n):
    grid = GridChart(2, n)
    x, y = grid.coordinates()
    phi = 0.1 * np.sin(x)
    dphi = np.stack([0.1 * np.cos(x), np.zeros_like(x)])
    return np.abs(gf.christoffel(grid, conformal(grid, phi)) - conformal_christoffel(dphi)).max()


def gauss_curvature_error(n):
    grid = GridChart(2, n)
    x, y = grid.coordinates()
    phi = 0.1 * np.sin(x) * np.sin(y)
    g = conformal(grid, phi)
    r = gf.riemann_curvature(grid, g)
    k = r[0, 1, 0, 1] / gf.metric_determinant(g)
    # K = -exp(-2 phi) lap phi, lap phi = -2 phi
    return np.abs(k - 2 * np.exp(-2 * phi) * phi).max()


def laplacian_error(n):
    grid = GridChart(2, n)
    x, _ = grid.coordinates()
    h = np.zeros((2, 2) + grid.shape)
    h[0, 0] = np.sin(x)
    lap = gf.rough_laplacian_sym2(grid, grid.identity(), h)
    return np.abs(lap[0, 0] + np.sin(x)).max()


class TestGridChart:
    def test_spacing(self):
        grid = GridChart(2, 64)
        assert grid.spacing == pytest.approx(2 * np.pi / 64)

    @pytest.mark.parametrize("kwargs", [dict(dimension=3), dict(nodes_per_axis=4), dict(period=0.0)])
    def test_rejects_bad_charts(self, kwargs):
        with pytest.raises(ValueError):
            GridChart(**kwargs)


class TestMetricAlgebra:
    def test_identity_inverse(self):
        grid = GridChart(2, 8)
        assert np.array_equal(gf.metric_inverse(grid.identity()), grid.identity())

    def test_diagonal_inverse(self):
        grid = GridChart(2, 8)
        inv = gf.metric_inverse(grid.constant(np.diag([4.0, 1.0])))
        np.testing.assert_allclose(inv[:, :, 3, 5], np.diag([0.25, 1.0]))

    @pytest.mark.parametrize("n", [2, 4])
    def test_random_spd_multiply_back(self, n):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(n, n, 8, 8))
        g = np.einsum("ik...,jk...->ij...", a, a) + 0.5 * np.eye(n)[:, :, None, None]
        prod = np.einsum("ij...,jk...->ik...", g, gf.metric_inverse(g))
        assert np.abs(prod - np.eye(n)[:, :, None, None]).max() < 1e-12 * np.abs(g).max()

    def test_not_positive_definite_reports_node(self):
        grid = GridChart(2, 8)
        g = grid.identity()
        g[1, 1, 2, 5] = -0.5
        with pytest.raises(gf.NotPositiveDefinite) as exc:
            gf.metric_inverse(g)
        assert exc.value.node == (2, 5)

    @pytest.mark.parametrize("matrix, det", [
        (np.eye(2), 1.0), (np.diag([4.0, 1.0]), 4.0), ([[2.0, 1.0], [1.0, 2.0]], 3.0),
    ])
    def test_determinant(self, matrix, det):
        grid = GridChart(2, 8)
        np.testing.assert_allclose(gf.metric_determinant(grid.constant(matrix)), det)


class TestChristoffel:
    def test_constant_metric(self):
        grid = GridChart(2, 16)
        g = grid.constant([[2.0, 0.3], [0.3, 1.0]])
        assert np.abs(gf.christoffel(grid, g)).max() == 0.0

    def test_symmetric_lower_indices(self):
        grid = GridChart(2, 32)
        x, y = grid.coordinates()
        g = conformal(grid, 0.1 * np.sin(x) * np.cos(2 * y))
        gamma = gf.christoffel(grid, g)
        assert np.array_equal(gamma, np.swapaxes(gamma, 1, 2))

    def test_conformal_closed_form(self):
        assert christoffel_error(64) < 1e-3

    def test_second_order(self):
        ratio = christoffel_error(32) / christoffel_error(64)
        assert 3.2 < ratio < 4.8


class TestRiemann:
    def test_flat(self):
        grid = GridChart(2, 16)
        assert np.abs(gf.riemann_curvature(grid, grid.identity())).max() == 0.0

    def test_conformal_gauss_curvature(self):
        assert gauss_curvature_error(64) < 1e-3

    def test_second_order(self):
        ratio = gauss_curvature_error(32) / gauss_curvature_error(64)
        assert 3.2 < ratio < 4.8

    def test_sign_positive_on_sphere_like_bump(self):
        # K = -exp(-2 phi) lap phi, and lap phi = -0.2 at the origin
        grid = GridChart(2, 64)
        x, y = grid.coordinates()
        phi = 0.1 * np.cos(x) * np.cos(y)
        g = conformal(grid, phi)
        k = gf.riemann_curvature(grid, g)[0, 1, 0, 1] / gf.metric_determinant(g)
        assert k[0, 0] == pytest.approx(0.2 * np.exp(-0.2), rel=1e-2)

    @staticmethod
    def _sheared(n):
        grid = GridChart(2, n)
        x, y = grid.coordinates()
        g = grid.identity() + 0.1 * np.stack([
            np.stack([np.sin(x), 0.5 * np.cos(x + y)]),
            np.stack([0.5 * np.cos(x + y), np.sin(y)]),
        ])
        return gf.riemann_curvature(grid, g, diagnostics=True)

    def test_algebraic_symmetries_exact(self):
        r, _ = self._sheared(32)
        assert gf.curvature_asymmetry(r) <= 1e-15 * np.abs(r).max()

    def test_projection_removes_only_truncation_error(self):
        coarse = self._sheared(32)[1]
        fine = self._sheared(64)[1]
        assert coarse < 1e-3
        assert 3.2 < coarse / fine < 4.8


class TestCovariantDerivatives:
    def test_constant_h_flat(self):
        grid = GridChart(2, 16)
        h = grid.constant([[1.0, 2.0], [2.0, -1.0]])
        assert np.abs(gf.covariant_gradient_sym2(grid, grid.identity(), h)).max() == 0.0
        assert np.abs(gf.rough_laplacian_sym2(grid, grid.identity(), h)).max() == 0.0

    def test_hessian_is_codazzi(self):
        grid = GridChart(2, 64)
        x, y = grid.coordinates()
        hess = -0.1 * np.stack([
            np.stack([np.sin(x) * np.sin(y), -np.cos(x) * np.cos(y)]),
            np.stack([-np.cos(x) * np.cos(y), np.sin(x) * np.sin(y)]),
        ])
        dh = gf.covariant_gradient_sym2(grid, grid.identity(), hess)
        assert np.abs(dh - np.swapaxes(dh, 0, 1)).max() < 1e-12

    def test_laplacian_eigenfunction(self):
        assert laplacian_error(64) < 5e-3

    def test_laplacian_second_order(self):
        ratio = laplacian_error(32) / laplacian_error(64)
        assert 3.2 < ratio < 4.8

    def test_laplacian_exactly_symmetric(self):
        grid = GridChart(2, 16)
        x, y = grid.coordinates()
        g = conformal(grid, 0.1 * np.sin(x + 2 * y))
        h = np.stack([np.stack([np.sin(x), np.cos(y)]), np.stack([np.cos(y), x * 0 + 1])])
        lap = gf.rough_laplacian_sym2(grid, g, h)
        assert np.array_equal(lap, np.swapaxes(lap, 0, 1))


class TestIntegration:
    def test_unit_torus_volume(self):
        grid = GridChart(2, 16, period=1.0)
        assert gf.integrate_density(grid, grid.identity(), 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_scaled_metric(self):
        grid = GridChart(2, 16)
        vol = gf.integrate_density(grid, 4 * grid.identity(), 1.0)
        assert vol == pytest.approx(4 * (2 * np.pi) ** 2, rel=1e-14)

    def test_trigonometric_integrand(self):
        grid = GridChart(2, 64)
        x, _ = grid.coordinates()
        val = gf.integrate_density(grid, grid.identity(), np.sin(x) ** 2)
        assert val == pytest.approx(2 * np.pi**2, rel=1e-12)

    @pytest.mark.parametrize("lam", [0.25, 3.0, 7.5])
    def test_volume_scaling(self, lam):
        grid = GridChart(2, 32)
        x, y = grid.coordinates()
        g = conformal(grid, 0.2 * np.sin(x) * np.cos(y))
        base = gf.integrate_density(grid, g, 1.0)
        assert gf.integrate_density(grid, lam * g, 1.0) == pytest.approx(lam * base, rel=1e-12)

    def test_negative_determinant(self):
        grid = GridChart(2, 8)
        g = grid.identity()
        g[0, 0, 1, 1] = -1.0
        with pytest.raises(gf.NegativeDeterminant):
            gf.integrate_density(grid, g, 1.0)


def test_translation_equivariance():
    grid = GridChart(2, 32)
    x, y = grid.coordinates()
    g = conformal(grid, 0.1 * np.sin(x) * np.sin(2 * y))
    h = np.stack([np.stack([np.sin(x), np.cos(y)]), np.stack([np.cos(y), np.sin(x + y)])])
    shift = lambda a: np.roll(a, 1, axis=-2)  # noqa: E731
    for op in (gf.christoffel, gf.riemann_curvature):
        assert np.array_equal(op(grid, shift(g)), shift(op(grid, g)))
    lap = gf.rough_laplacian_sym2(grid, g, h)
    assert np.array_equal(gf.rough_laplacian_sym2(grid, shift(g), shift(h)), shift(lap))
