"""
Legendre spectral discretization of the 2D transverse-electric system on a rectangle.

Unknowns are nodal values at the tensor Legendre-Gauss-Lobatto (LGL) grid, so
every field is a polynomial of degree ≤ N in each variable and the LGL rule
turns the mass matrices into diagonals.

* E = (E_x, E_y) lives in V_N^0: E_x vanishes on y = c, d and E_y on x = a, b.
  E_x is stored at all x nodes and interior y nodes, E_y at interior x nodes
  and all y nodes.
* H lives in the full tensor space and is stored at all (N+1)² nodes.

The strong curl of E is C E = ∂_x E_y - ∂_y E_x, and the weak curl pairing
(H, curl φ) = (∂_y H, φ_x) - (∂_x H, φ_y) is Cᵀ M_H H.  Summation by parts
is exact under the LGL rule here because the boundary terms it produces are
multiplied by the constrained tangential component.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray
from scipy.special import roots_jacobi

from .timestepper import FieldState, SpatialOps

__all__ = [
    "SpectralOps",
    "SpectralSpace",
    "assemble",
    "barycentric_matrix",
    "build_space",
    "evaluate",
    "interpolate_init",
    "lgl",
]


def lgl(N: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Legendre-Gauss-Lobatto nodes and weights on [-1, 1] (N + 1 points)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if N == 1:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    # interior nodes are the zeros of P_N', i.e. of the Jacobi polynomial P^{(1,1)}_{N-1}
    inner = roots_jacobi(N - 1, 1.0, 1.0)[0]
    x = np.concatenate([[-1.0], np.sort(inner), [1.0]])
    PN = np.polynomial.legendre.legval(x, np.eye(N + 1)[N])
    w = 2.0 / (N * (N + 1) * PN**2)
    return x, w


def _bary_weights(x: NDArray) -> NDArray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    # scale to avoid overflow in the products for large N
    lw = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    lw -= lw.max()
    return sign * np.exp(lw)


def _diff_matrix(x: NDArray, lam: NDArray) -> NDArray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (lam[None, :] / lam[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def barycentric_matrix(x: NDArray, lam: NDArray, pts: ArrayLike) -> NDArray:
    """Matrix L with L[p, i] = ℓ_i(pts[p]) for the Lagrange basis on nodes x."""
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    d = pts[:, None] - x[None, :]
    exact = d == 0.0
    d[exact] = 1.0
    terms = lam[None, :] / d
    L = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    L[rows] = exact[rows].astype(float)
    return L


@dataclass(frozen=True)
class SpectralSpace:
    """Tensor LGL grid of degree N on the rectangle (a, b) × (c, d)."""

    N: int
    domain: tuple[float, float, float, float]
    ref_nodes: NDArray[np.float64] = field(repr=False)
    ref_weights: NDArray[np.float64] = field(repr=False)
    bary: NDArray[np.float64] = field(repr=False)
    D: NDArray[np.float64] = field(repr=False)

    @property
    def x(self) -> NDArray[np.float64]:
        a, b, _, _ = self.domain
        return a + (self.ref_nodes + 1) * (b - a) / 2

    @property
    def y(self) -> NDArray[np.float64]:
        _, _, c, d = self.domain
        return c + (self.ref_nodes + 1) * (d - c) / 2

    @property
    def scale(self) -> tuple[float, float]:
        """Chain-rule factors dξ/dx and dη/dy of the affine map."""
        a, b, c, d = self.domain
        return 2.0 / (b - a), 2.0 / (d - c)

    @property
    def grid(self) -> tuple[NDArray, NDArray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def weights2d(self) -> NDArray[np.float64]:
        """LGL quadrature weights on the physical grid."""
        sx, sy = self.scale
        return np.outer(self.ref_weights, self.ref_weights) / (sx * sy)

    @property
    def n_ex(self) -> int:
        return (self.N + 1) * (self.N - 1)

    @property
    def n_e(self) -> int:
        return 2 * self.n_ex

    @property
    def n_h(self) -> int:
        return (self.N + 1) ** 2

    def pack_e(self, Ex: NDArray, Ey: NDArray) -> NDArray:
        """E-coefficients from nodal grids; constrained boundary values are dropped."""
        return np.concatenate([Ex[:, 1:-1].ravel(), Ey[1:-1, :].ravel()])

    def unpack_e(self, e: NDArray) -> tuple[NDArray, NDArray]:
        """Nodal grids (with zero constrained boundary values) of an E vector."""
        n = self.N + 1
        Ex = np.zeros((n, n))
        Ey = np.zeros((n, n))
        Ex[:, 1:-1] = e[: self.n_ex].reshape(n, n - 2)
        Ey[1:-1, :] = e[self.n_ex :].reshape(n - 2, n)
        return Ex, Ey

    def unpack_h(self, h: NDArray) -> NDArray:
        return h.reshape(self.N + 1, self.N + 1)

    def norm(self, *grids: NDArray) -> float:
        """Discrete L² norm Σ w_i w_j |u_ij|² summed over the given components."""
        W = self.weights2d
        return float(np.sqrt(sum(np.sum(W * np.abs(g) ** 2) for g in grids)))


def build_space(N: int, domain: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)) -> SpectralSpace:
    """LGL nodes, weights and differentiation matrix for degree N."""
    if N < 2:
        raise ValueError("N must be at least 2")
    a, b, c, d = map(float, domain)
    if not (b > a and d > c):
        raise ValueError("domain must be a nondegenerate rectangle (a, b, c, d)")
    x, w = lgl(N)
    lam = _bary_weights(x)
    D = _diff_matrix(x, lam)
    return SpectralSpace(N, (a, b, c, d), x, w, lam, D)


class SpectralOps(SpatialOps):
    """Galerkin operators of a :class:`SpectralSpace`; implements SpatialOps."""

    def __init__(self, space: SpectralSpace):
        self.space = space
        self.n_e = space.n_e
        self.n_h = space.n_h
        W = space.weights2d
        self.mh = W.ravel()
        self.me = np.concatenate([W[:, 1:-1].ravel(), W[1:-1, :].ravel()])
        sx, sy = space.scale
        self.Dx = sx * space.D
        self.Dy = sy * space.D

    def mass_e(self, v):
        return self.me * v

    def mass_h(self, v):
        return self.mh * v

    def solve_mass_h(self, v):
        return v / self.mh

    def curl(self, e):
        Ex, Ey = self.space.unpack_e(e)
        return (self.Dx @ Ey - Ex @ self.Dy.T).ravel()

    def curl_adjoint(self, h):
        v = self.space.unpack_h(self.mh * h)
        gx = -(v @ self.Dy)  # derivative of -Σ v Ex Dyᵀ with respect to Ex
        gy = self.Dx.T @ v
        return self.space.pack_e(gx, gy)

    def curl_matrix(self) -> NDArray[np.float64]:
        """Dense C with rows indexed by H nodes and columns by E unknowns."""
        n = self.space.N + 1
        eye = np.eye(n)
        cx = -np.kron(eye, self.Dy[:, 1:-1])
        cy = np.kron(self.Dx[:, 1:-1], eye)
        return np.hstack([cx, cy])

    def factor_step(self, coef, dt):
        C = self.curl_matrix()
        A = (dt**2) * (C.T @ (self.mh[:, None] * C))
        A[np.diag_indices_from(A)] += coef * self.me
        del C
        factor = sla.cho_factor(A, overwrite_a=True, check_finite=False)
        return lambda b: sla.cho_solve(factor, b, check_finite=False)

    def load_e(self, fx: NDArray, fy: NDArray) -> NDArray:
        """Load vector (f, φ_i) under the LGL rule from nodal grids of f."""
        return self.me * self.space.pack_e(fx, fy)


def assemble(space: SpectralSpace) -> SpectralOps:
    """Operators of the Galerkin scheme on ``space``."""
    return SpectralOps(space)


def interpolate_init(
    space: SpectralSpace,
    E0: Callable[[NDArray, NDArray], tuple[NDArray, NDArray]],
    H0: Callable[[NDArray, NDArray], NDArray],
    *,
    tol: float = 1e-12,
) -> FieldState:
    """LGL interpolants of the initial fields; P starts at zero.

    Raises
    ------
    ValueError
        If E0 has tangential components on the constrained edges larger than
        ``tol`` times its maximum magnitude.
    """
    X, Y = space.grid
    Ex, Ey = (np.broadcast_to(np.asarray(v, dtype=float), X.shape) for v in E0(X, Y))
    scale = max(np.max(np.abs(Ex)), np.max(np.abs(Ey)), np.finfo(float).tiny)
    edge = max(np.max(np.abs(Ex[:, [0, -1]])), np.max(np.abs(Ey[[0, -1], :])))
    if edge > tol * scale:
        raise ValueError(f"initial E violates the tangential boundary condition (edge value {edge:.2e})")
    H = np.broadcast_to(np.asarray(H0(X, Y), dtype=float), X.shape)
    e = space.pack_e(Ex, Ey)
    return FieldState(e, H.ravel().copy(), np.zeros_like(e), 0, 0.0)


def evaluate(space: SpectralSpace, values: NDArray, points: ArrayLike) -> NDArray:
    """Evaluate a nodal grid of values at arbitrary points (shape (..., 2))."""
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    a, b, c, d = space.domain
    tol = 1e-12 * max(b - a, d - c)
    if np.any((flat[:, 0] < a - tol) | (flat[:, 0] > b + tol) | (flat[:, 1] < c - tol) | (flat[:, 1] > d + tol)):
        raise ValueError("evaluation points must lie in the closed domain")
    sx, sy = space.scale
    Lx = barycentric_matrix(space.ref_nodes, space.bary, (flat[:, 0] - a) * sx - 1)
    Ly = barycentric_matrix(space.ref_nodes, space.bary, (flat[:, 1] - c) * sy - 1)
    V = np.asarray(values).reshape(space.N + 1, space.N + 1)
    out = np.einsum("pi,ij,pj->p", Lx, V, Ly)
    return out.reshape(pts.shape[:-1])
