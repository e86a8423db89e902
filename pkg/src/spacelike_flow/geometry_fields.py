"""Discrete tensor calculus on a flat periodic chart.

Fields are plain numpy arrays with the tensor slots first and the grid axes
last (component-major), so contractions run over long contiguous node
blocks::

    scalar            (N, N)
    symmetric 2-form  (n, n, N, N)
    third order       (n, n, n, N, N)      grad_h[i, j, k] = nabla_i h_jk
    curvature         (n, n, n, n, N, N)

Derivatives are second-order central differences built from ``np.roll``, so
every operator is exactly translation-equivariant on the periodic grid.
Second derivatives are compositions of two first-derivative stencils.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridChart",
    "NotPositiveDefinite",
    "NegativeDeterminant",
    "symmetrize",
    "partial",
    "gradient",
    "node_major",
    "component_major",
    "metric_inverse",
    "metric_determinant",
    "christoffel",
    "riemann_curvature",
    "ricci",
    "curvature_asymmetry",
    "covariant_gradient_sym2",
    "rough_laplacian_sym2",
    "scalar_laplacian",
    "integrate_density",
]


class NotPositiveDefinite(ValueError):
    """A metric lost positive definiteness at some node."""

    def __init__(self, node, eigenvalue):
        self.node = tuple(int(i) for i in node)
        self.eigenvalue = float(eigenvalue)
        super().__init__(
            f"metric not positive definite at node {self.node} "
            f"(smallest eigenvalue {self.eigenvalue:.3e})"
        )


class NegativeDeterminant(ValueError):
    """Volume density requested for a metric with det g <= 0."""

    def __init__(self, node, det):
        self.node = tuple(int(i) for i in node)
        self.det = float(det)
        super().__init__(f"det g = {self.det:.3e} <= 0 at node {self.node}")


@dataclass(frozen=True)
class GridChart:
    """Uniform periodic grid on the coordinate torus ``[0, period)^dimension``."""

    dimension: int = 2
    nodes_per_axis: int = 64
    period: float = 2 * np.pi

    def __post_init__(self):
        if self.dimension < 2 or self.dimension % 2:
            raise ValueError(f"dimension must be even and >= 2, got {self.dimension}")
        if self.nodes_per_axis < 8:
            raise ValueError(f"need at least 8 nodes per axis, got {self.nodes_per_axis}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def spacing(self) -> float:
        return self.period / self.nodes_per_axis

    @property
    def shape(self) -> tuple:
        return (self.nodes_per_axis,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def coordinates(self):
        """Coordinate arrays (``indexing='ij'``), one per axis."""
        x = np.arange(self.nodes_per_axis) * self.spacing
        return np.meshgrid(*([x] * self.dimension), indexing="ij")

    def constant(self, matrix) -> np.ndarray:
        """Broadcast one tensor to every node."""
        matrix = np.asarray(matrix, dtype=float)
        return np.broadcast_to(matrix[(...,) + (None,) * self.dimension],
                               matrix.shape + self.shape).copy()

    def identity(self) -> np.ndarray:
        return self.constant(np.eye(self.dimension))


def node_major(a, dim):
    """View with the ``dim`` grid axes moved to the front."""
    k = a.ndim - dim
    return np.moveaxis(a, tuple(range(k, a.ndim)), tuple(range(dim)))


def component_major(a, dim):
    """Inverse of :func:`node_major`."""
    k = a.ndim - dim
    return np.moveaxis(a, tuple(range(dim)), tuple(range(k, a.ndim)))


def symmetrize(a, axes=(0, 1)):
    """Average ``a`` with its transpose over two slots; the result is exactly symmetric."""
    return 0.5 * (a + np.swapaxes(a, *axes))


def partial(grid, f, axis):
    """Central difference of ``f`` along grid axis ``axis``."""
    ax = f.ndim - grid.dimension + axis
    return (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2.0 * grid.spacing)


def gradient(grid, f):
    """All coordinate derivatives, stacked as a new first tensor slot."""
    return np.stack([partial(grid, f, a) for a in range(grid.dimension)], axis=0)


def _eigvalsh(g):
    dim = g.ndim - 2
    return component_major(np.linalg.eigvalsh(node_major(g, dim)), dim)


def _check_metric(g):
    lam = _eigvalsh(g)[0]
    if not np.all(lam > 0):
        node = np.unravel_index(np.argmin(lam), lam.shape)
        raise NotPositiveDefinite(node, lam[node])


def metric_inverse(g, check=True):
    """Node-wise inverse ``g^{ij}`` of a covariant metric.

    Raises NotPositiveDefinite (with the offending node) if any node has a
    non-positive eigenvalue.
    """
    g = np.asarray(g, dtype=float)
    if check:
        _check_metric(g)
    if g.shape[0] == 2:
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        return np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]]) / det
    dim = g.ndim - 2
    return symmetrize(component_major(np.linalg.inv(node_major(g, dim)), dim))


def metric_determinant(g):
    g = np.asarray(g, dtype=float)
    if g.shape[0] == 2:
        return g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    return np.linalg.det(node_major(g, g.ndim - 2))


def christoffel(grid, g, ginv=None):
    r"""Christoffel symbols of the second kind.

    Returns ``Gamma[k, i, j]`` for
    :math:`\Gamma^k_{ij} = \tfrac12 g^{kl}(\partial_i g_{jl} + \partial_j g_{il} - \partial_l g_{ij})`,
    symmetric in ``i, j`` exactly.
    """
    if ginv is None:
        ginv = metric_inverse(g)
    dg = gradient(grid, g)  # dg[l, i, j] = d_l g_ij
    # first kind, lower[l, i, j] = Gamma_{l,ij}
    lower = 0.5 * (
        np.einsum("ijl...->lij...", dg)
        + np.einsum("jil...->lij...", dg)
        - dg
    )
    gamma = np.einsum("kl...,lij...->kij...", ginv, lower)
    return symmetrize(gamma, (1, 2))


def _symmetrize_curvature(r):
    r = 0.5 * (r - np.swapaxes(r, 0, 1))
    r = 0.5 * (r - np.swapaxes(r, 2, 3))
    return 0.5 * (r + np.einsum("ijkl...->klij...", r))


def _raw_riemann(grid, g, ginv):
    gamma = christoffel(grid, g, ginv)
    dgamma = gradient(grid, gamma)  # dgamma[c, a, d, b] = d_c Gamma^a_db
    r_up = (
        np.einsum("cadb...->abcd...", dgamma)
        - np.einsum("dacb...->abcd...", dgamma)
        + np.einsum("ace...,edb...->abcd...", gamma, gamma)
        - np.einsum("ade...,ecb...->abcd...", gamma, gamma)
    )
    return np.einsum("ae...,ebcd...->abcd...", g, r_up)


def riemann_curvature(grid, g, ginv=None, diagnostics=False):
    """Fully covariant Riemann tensor ``R[i, j, k, l]``.

    Sign convention: ``R_ijij`` is the (unnormalized) sectional curvature, so
    it is positive on a round sphere.  The finite-difference result is
    projected onto the algebraic symmetries; with ``diagnostics=True`` the
    sup-norm of the removed asymmetric part is returned as well.
    """
    if ginv is None:
        ginv = metric_inverse(g)
    raw = _raw_riemann(grid, g, ginv)
    r = _symmetrize_curvature(raw)
    if diagnostics:
        return r, float(np.max(np.abs(raw - r)))
    return r


def curvature_asymmetry(r):
    """Largest violation of R_ijkl = -R_jikl = -R_ijlk = R_klij."""
    return float(max(
        np.max(np.abs(r + np.swapaxes(r, 0, 1))),
        np.max(np.abs(r + np.swapaxes(r, 2, 3))),
        np.max(np.abs(r - np.einsum("ijkl...->klij...", r))),
    ))


def ricci(r, ginv):
    """Ricci tensor ``Ric_jl = g^{ik} R_ijkl``."""
    return symmetrize(np.einsum("ik...,ijkl...->jl...", ginv, r))


def covariant_gradient_sym2(grid, g, h, ginv=None, gamma=None):
    """Covariant derivative ``grad_h[i, j, k] = nabla_i h_jk`` of a symmetric 2-tensor."""
    if gamma is None:
        gamma = christoffel(grid, g, ginv)
    dh = gradient(grid, h)
    corr = np.einsum("mij...,mk...->ijk...", gamma, h)
    out = dh - corr - np.swapaxes(corr, 1, 2)
    return symmetrize(out, (1, 2))


def rough_laplacian_sym2(grid, g, h, ginv=None, gamma=None):
    """Rough Laplacian ``g^{kl} nabla_k nabla_l h_ij``, exactly symmetric."""
    if ginv is None:
        ginv = metric_inverse(g)
    if gamma is None:
        gamma = christoffel(grid, g, ginv)
    t = covariant_gradient_sym2(grid, g, h, ginv, gamma)  # t[l, i, j]
    dt = gradient(grid, t)  # dt[k, l, i, j]
    # contract g^{kl} early: g^{kl} nabla_k t_lij
    trace_dt = np.einsum("kl...,klij...->ij...", ginv, dt)
    gamma_up = np.einsum("kl...,mkl...->m...", ginv, gamma)  # g^{kl} Gamma^m_kl
    gt = np.einsum("kl...,mki...->lmi...", ginv, gamma)  # g^{kl} Gamma^m_ki
    lap = (
        trace_dt
        - np.einsum("m...,mij...->ij...", gamma_up, t)
        - np.einsum("lmi...,lmj...->ij...", gt, t)
        - np.einsum("lmj...,lim...->ij...", gt, t)
    )
    return symmetrize(lap)


def scalar_laplacian(grid, g, f, ginv=None, gamma=None):
    """Laplace-Beltrami operator ``g^{kl}(d_k d_l f - Gamma^m_kl d_m f)``."""
    if ginv is None:
        ginv = metric_inverse(g)
    if gamma is None:
        gamma = christoffel(grid, g, ginv)
    df = gradient(grid, f)
    ddf = gradient(grid, df)
    hess = ddf - np.einsum("mkl...,m...->kl...", gamma, df)
    return np.einsum("kl...,kl...->...", ginv, hess)


def integrate_density(grid, g, f):
    """Node-sum quadrature of ``f dv`` for the metric ``g``.

    With ``f = 1`` this is the volume of the torus. Raises
    NegativeDeterminant if det g <= 0 anywhere.
    """
    det = metric_determinant(g)
    if not np.all(det > 0):
        node = np.unravel_index(np.argmin(det), det.shape)
        raise NegativeDeterminant(node, det[node])
    f = np.broadcast_to(np.asarray(f, dtype=float), det.shape)
    return float(np.sum(f * np.sqrt(det)) * grid.cell_volume)
