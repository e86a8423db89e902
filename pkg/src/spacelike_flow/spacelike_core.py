"""Space-like states, Gauss/Codazzi residuals, scenario constructors and the
Gauss-Bonnet-Chern density.

A space-like state is a metric ``g`` together with a symmetric 2-tensor ``h``
for which, ideally,

    R_ijkl = -(h_ik h_jl - h_il h_jk)          (Gauss)
    nabla_i h_jk = nabla_j h_ik                (Codazzi)

Neither constraint is enforced anywhere in this package; both are measured.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn

from . import geometry_fields as gf
from .geometry_fields import GridChart

__all__ = [
    "NotSpacelike",
    "ConstraintViolation",
    "SpacelikeState",
    "HomogeneousState",
    "DerivedScalars",
    "derived_scalars",
    "gauss_residual",
    "codazzi_residual",
    "from_graph",
    "flat_torus",
    "homogeneous_hyperbolic",
    "homogeneous_flat",
    "sectional_bound",
    "principal_curvatures",
    "sphere_volume",
    "levi_civita",
    "chern_density_closed_form",
    "chern_density_pfaffian",
    "gbc_density_field",
    "euler_characteristic",
]


class NotSpacelike(ValueError):
    def __init__(self, max_gradient):
        self.max_gradient = float(max_gradient)
        super().__init__(f"graph is not space-like: max |grad u| = {self.max_gradient:.4f} >= 1")


class ConstraintViolation(ValueError):
    pass


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpacelikeState:
    """Discretized ``(N, g, h)`` at flow time ``t``.

    ``g`` and ``h`` have shape ``(n, n) + grid.shape``. Arrays are copied and
    made read-only on construction.
    """

    grid: GridChart
    g: np.ndarray
    h: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.grid.dimension
        expect = (n, n) + self.grid.shape
        g, h = _frozen(self.g), _frozen(self.h)
        for name, a in (("g", g), ("h", h)):
            if a.shape != expect:
                raise ValueError(f"{name} has shape {a.shape}, expected {expect}")
            if not np.array_equal(a, np.swapaxes(a, 0, 1)):
                raise ValueError(f"{name} is not exactly symmetric")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite entries")
        gf._check_metric(g)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self):
        return self.grid.dimension

    def ginv(self):
        return gf.metric_inverse(self.g, check=False)

    def with_fields(self, g, h, t):
        return replace(self, g=g, h=h, t=t)


@dataclass(frozen=True)
class HomogeneousState:
    """Space-form solution ``g = phi g0``, ``h = psi g0``.

    ``base`` is ``"hyperbolic"`` (g0 has sectional curvature -1, Gauss forces
    phi = psi**2) or ``"flat"`` (psi = 0).
    """

    n: int
    phi: float
    psi: float
    t: float = 0.0
    base_volume: float = 4 * np.pi
    base_euler: int | None = -2
    base: str = "hyperbolic"

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be even and >= 2, got {self.n}")
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")
        if not self.base_volume > 0:
            raise ValueError("base_volume must be positive")
        if self.base not in ("hyperbolic", "flat"):
            raise ValueError(f"unknown base {self.base!r}")
        if self.base == "flat" and self.psi != 0:
            raise ConstraintViolation("flat base requires psi = 0")
        if self.base_euler is not None:
            implied = _homogeneous_euler(self.n, 1.0, 1.0 if self.base == "hyperbolic" else 0.0,
                                         self.base_volume)
            if abs(implied - self.base_euler) > 1e-9 * max(1.0, abs(self.base_euler)):
                raise ConstraintViolation(
                    f"base_volume {self.base_volume} implies chi = {implied}, "
                    f"inconsistent with base_euler = {self.base_euler}"
                )

    def constraint_defect(self):
        """Relative Gauss defect ``|phi - psi^2| / phi`` (zero for exact solutions)."""
        if self.base == "flat":
            return abs(self.psi)
        return abs(self.phi - self.psi**2) / self.phi

    @property
    def H(self):
        return self.n * self.psi / self.phi

    @property
    def A2(self):
        return self.n * self.psi**2 / self.phi**2

    @property
    def volume(self):
        return self.phi ** (self.n / 2) * self.base_volume


@dataclass(frozen=True)
class DerivedScalars:
    H: np.ndarray
    A2: np.ndarray
    gradA2: np.ndarray
    traceless2: np.ndarray


def derived_scalars(state, ginv=None, gamma=None, with_gradient=True):
    """Mean curvature H, |A|^2, |grad A|^2 and |h - (H/n) g|^2 as node fields.

    For a HomogeneousState the same quantities are returned as floats.
    """
    if isinstance(state, HomogeneousState):
        return DerivedScalars(state.H, state.A2, 0.0, 0.0)
    if ginv is None:
        ginv = state.ginv()
    g, h, n = state.g, state.h, state.n
    H = np.einsum("ij...,ij...->...", ginv, h)
    mixed = np.einsum("ik...,kj...->ij...", ginv, h)  # h^i_j
    A2 = np.einsum("ij...,ji...->...", mixed, mixed)
    if with_gradient:
        dh = gf.covariant_gradient_sym2(state.grid, g, h, ginv, gamma)
        raised = np.einsum("ij...,kl...,pq...,jlq...->ikp...", ginv, ginv, ginv, dh, optimize=True)
        gradA2 = np.einsum("ikp...,ikp...->...", dh, raised)
    else:
        gradA2 = np.zeros_like(H)
    traceless2 = np.maximum(A2 - H**2 / n, 0.0)
    return DerivedScalars(H, A2, gradA2, traceless2)


def _gauss_defect(r, h):
    hh = np.einsum("ik...,jl...->ijkl...", h, h)
    return r + (hh - np.swapaxes(hh, 2, 3))


def gauss_residual(state, r=None):
    """Sup-norm of ``R + (h h - h h)`` and its node-wise max-component field."""
    if r is None:
        r = gf.riemann_curvature(state.grid, state.g)
    defect = _gauss_defect(r, state.h)
    node = np.max(np.abs(defect), axis=(0, 1, 2, 3))
    return float(np.max(node)), node


def codazzi_residual(state, dh=None):
    """Sup over nodes and indices of ``|nabla_i h_jk - nabla_j h_ik|``."""
    if dh is None:
        dh = gf.covariant_gradient_sym2(state.grid, state.g, state.h)
    return float(np.max(np.abs(dh - np.swapaxes(dh, 0, 1))))


def from_graph(grid, u, t=0.0):
    """Induced geometry of the space-like graph ``z = u(x)`` in Minkowski space.

    ``g = delta - du du`` and ``h = Hess u / sqrt(1 - |du|^2)``. The opposite
    sign for ``h`` is an equally valid choice: for even n the flow and
    ``det h`` are invariant under ``h -> -h``.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"u has shape {u.shape}, expected {grid.shape}")
    du = gf.gradient(grid, u)
    p2 = np.sum(du**2, axis=0)
    pmax = float(np.sqrt(p2.max()))
    if pmax >= 1.0:
        raise NotSpacelike(pmax)
    g = gf.symmetrize(grid.identity() - du[:, None] * du[None, :])
    hess = gf.symmetrize(gf.gradient(grid, du))
    h = gf.symmetrize(hess / np.sqrt(1.0 - p2))
    return SpacelikeState(grid, g, h, t)


def flat_torus(grid):
    return SpacelikeState(grid, grid.identity(), np.zeros((grid.dimension,) * 2 + grid.shape))


def homogeneous_hyperbolic(n, phi0=1.0, base_volume=None, base_euler=None):
    """Scaled compact hyperbolic space form: ``phi = phi0``, ``psi = sqrt(phi0)``.

    Defaults to a genus-2 surface for n = 2 (area 4 pi, chi = -2). For other n
    a base_volume must be given; base_euler is then checked against it.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if base_volume is None:
        if n != 2:
            raise ValueError("base_volume is required for n != 2")
        base_volume = 4 * np.pi
        if base_euler is None:
            base_euler = -2
    return HomogeneousState(n, float(phi0), math.sqrt(phi0), 0.0, float(base_volume), base_euler)


def homogeneous_flat(n=2, phi0=1.0, base_volume=(2 * np.pi) ** 2):
    return HomogeneousState(n, float(phi0), 0.0, 0.0, float(base_volume), 0, base="flat")


def principal_curvatures(g, h):
    """Eigenvalues of h relative to g, ascending, shape ``grid.shape + (n,)``."""
    dim = g.ndim - 2
    g, h = gf.node_major(g, dim), gf.node_major(h, dim)
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    m = Linv @ h @ np.swapaxes(Linv, -2, -1)
    return np.linalg.eigvalsh(gf.symmetrize(m, (-2, -1)))


def sectional_bound(state, cross_check=False):
    """Sup of |sectional curvature| over nodes and 2-planes.

    Evaluated from h through the Gauss equation: the curvature operator is
    ``-h ^ h`` so the extreme sectional curvatures are ``-k_a k_b`` for the
    principal curvatures ``k``. With ``cross_check=True`` (n = 2 grids only)
    the value from the finite-difference Riemann tensor is returned as well.
    """
    if isinstance(state, HomogeneousState):
        k = state.psi**2 / state.phi**2
        return (k, k) if cross_check else k
    lam = principal_curvatures(state.g, state.h)
    n = state.n
    best = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            best = max(best, float(np.max(np.abs(lam[..., a] * lam[..., b]))))
    if not cross_check:
        return best
    if n != 2:
        raise ValueError("curvature cross-check implemented for n = 2")
    r = gf.riemann_curvature(state.grid, state.g)
    kr = float(np.max(np.abs(r[0, 1, 0, 1]) / gf.metric_determinant(state.g)))
    return best, kr


def sphere_volume(n):
    """Volume of the unit n-sphere, ``2 pi^((n+1)/2) / Gamma((n+1)/2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(2 * np.pi ** ((n + 1) / 2) / gamma_fn((n + 1) / 2))


@lru_cache(maxsize=None)
def levi_civita(n):
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    eps.setflags(write=False)
    return eps


def _gbc_prefactor(n):
    return (-1) ** (n // 2) * 2.0 / sphere_volume(n)


def chern_density_closed_form(g, h, n=None):
    """``(-1)^(n/2) (2 / vol S^n) det h / det g`` for single n x n matrices."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    n = g.shape[-1] if n is None else n
    if n % 2:
        raise ValueError("n must be even")
    det_g = np.linalg.det(g)
    if det_g == 0:
        raise np.linalg.LinAlgError("singular metric")
    return float(_gbc_prefactor(n) * np.linalg.det(h) / det_g)


_PFAFFIAN_SUBSCRIPTS = {
    2: "ab,pq,abpq->",
    4: "abcd,pqrs,abpq,cdrs->",
    6: "abcdef,pqrstu,abpq,cdrs,eftu->",
}


def chern_density_pfaffian(g, h, n=None):
    """Gauss-Bonnet-Chern density by the literal epsilon-contraction.

    Builds ``R_ijkl = -(h_ik h_jl - h_il h_jk)``, moves the first index pair
    to a g-orthonormal frame, forms the curvature 2-forms
    ``Omega_ab = sum_{k<l} R_abkl dx^k ^ dx^l`` and wedges them together with
    the epsilon symbols. The coefficient of ``dx^1 ^ ... ^ dx^n`` is divided
    by ``sqrt(det g)`` to give the density per unit volume.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    n = g.shape[-1] if n is None else n
    if n not in _PFAFFIAN_SUBSCRIPTS:
        raise ValueError(f"pfaffian oracle supports n in (2, 4, 6), got {n}")
    r = -(np.einsum("ik,jl->ijkl", h, h) - np.einsum("il,jk->ijkl", h, h))
    frame = np.linalg.inv(np.linalg.cholesky(g)).T  # columns g-orthonormal
    r_frame = np.einsum("ia,jb,ijkl->abkl", frame, frame, r)
    # the sum over k<l equals half the unrestricted sum, once per 2-form
    half = 0.5 * r_frame
    eps = levi_civita(n)
    top = np.einsum(_PFAFFIAN_SUBSCRIPTS[n], eps, eps, *([half] * (n // 2)), optimize=True)
    norm = 1.0 / (2**n * np.pi ** (n / 2) * math.factorial(n // 2))
    return float(norm * top / np.sqrt(np.linalg.det(g)))


def gbc_density_field(state):
    """Node field ``det h / det g``."""
    return gf.metric_determinant(state.h) / gf.metric_determinant(state.g)


def _homogeneous_euler(n, phi, psi, base_volume):
    return _gbc_prefactor(n) * (psi / phi) ** n * phi ** (n / 2) * base_volume


def euler_characteristic(state):
    """Euler characteristic from ``(-1)^(n/2) (2/vol S^n) int det h / det g dv``."""
    if isinstance(state, HomogeneousState):
        return float(_homogeneous_euler(state.n, state.phi, state.psi, state.base_volume))
    dens = gbc_density_field(state)
    return _gbc_prefactor(state.n) * gf.integrate_density(state.grid, state.g, dens)
