"""Hermite discretization of velocity space.

Distributions are stored as coefficients against phi_a = h_a(v) mu(v), where
mu is the standard Gaussian and h_a are the orthonormal (probabilists')
Hermite polynomials. In these coordinates the Hilbert space L^2(mu^{-1} dv)
is plain Euclidean space, so the inner product is a dot product.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

IndexRule = Literal["total", "tensor"]


def hermite_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """Normalized Hermite polynomials h_0..h_n_max evaluated at x.

    Uses the three-term recurrence x h_n = sqrt(n+1) h_{n+1} + sqrt(n) h_{n-1}.
    Returns an array of shape (n_max + 1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = x
    for n in range(1, n_max):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def gauss_grid(d: int, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite grid for the standard Gaussian, weights summing to 1."""
    x, w = hermegauss(n_nodes)
    w = w / w.sum()
    pts = np.array(list(itertools.product(x, repeat=d)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
    return pts, wts


@dataclass(frozen=True)
class MacroMoments:
    rho: complex
    u: np.ndarray
    theta: complex


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    d: int
    N: int
    index_rule: IndexRule
    indices: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    E: float
    K: float
    c: float
    V: tuple[np.ndarray, ...]
    _lookup: dict = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.indices)

    def index(self, alpha) -> int:
        return self._lookup[tuple(int(a) for a in alpha)]

    def unit(self, alpha) -> np.ndarray:
        e = np.zeros(self.size)
        e[self.index(alpha)] = 1.0
        return e

    def evaluate_h(self, pts: np.ndarray) -> np.ndarray:
        """Values h_a(v) at points, shape (size, len(pts))."""
        pts = np.atleast_2d(pts)
        top = int(self.indices.max())
        tab = [hermite_table(top, pts[:, j]) for j in range(self.d)]
        out = np.ones((self.size, len(pts)))
        for j in range(self.d):
            out *= tab[j][self.indices[:, j]]
        return out

    def project(self, g_over_mu: Callable[[np.ndarray], np.ndarray], n_nodes: int | None = None) -> np.ndarray:
        """Coefficients of the function g(v) = g_over_mu(v) * mu(v).

        Computes <g, phi_a>_H = int g_over_mu h_a mu dv by tensor Gauss-Hermite
        quadrature with n_nodes per axis (default: exact for degree 2N+1).
        """
        if n_nodes is None:
            pts, wts = self.nodes, self.weights
        else:
            pts, wts = gauss_grid(self.d, n_nodes)
        vals = np.asarray(g_over_mu(pts))
        return self.evaluate_h(pts) @ (wts * vals)

    def synthesize(self, f: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Values of f(v)/mu(v) at points."""
        return f @ self.evaluate_h(pts)


def build_basis(d: int, N: int, index_rule: IndexRule = "total") -> HermiteBasis:
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if N < 4:
        raise ValueError(f"truncation degree must be at least 4, got {N}")
    if index_rule not in ("total", "tensor"):
        raise ValueError(f"unknown index rule {index_rule!r}")
    idx = [a for a in itertools.product(range(N + 1), repeat=d)
           if index_rule == "tensor" or sum(a) <= N]
    idx.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    indices = np.array(idx, dtype=int)
    lookup = {a: i for i, a in enumerate(idx)}
    n = len(idx)

    V = []
    for j in range(d):
        Vj = np.zeros((n, n))
        for i, a in enumerate(idx):
            up = list(a)
            up[j] += 1
            k = lookup.get(tuple(up))
            if k is not None:
                Vj[k, i] = Vj[i, k] = math.sqrt(a[j] + 1)
        V.append(Vj)

    pts, wts = gauss_grid(d, N + 1)
    r2 = np.sum(pts**2, axis=1)
    E = float(wts @ r2)
    K = float(wts @ r2**2) / E**2
    c = math.sqrt(K * E / d)
    return HermiteBasis(d, N, index_rule, indices, pts, wts, E, K, c, tuple(V), lookup)


# ---------------------------------------------------------------- moments

def _energy_direction(basis: HermiteBasis) -> np.ndarray:
    """Coefficients of (|v|^2 - E) mu."""
    e = np.zeros(basis.size)
    for j in range(basis.d):
        a = [0] * basis.d
        a[j] = 2
        e[basis.index(a)] = math.sqrt(2.0)
    return e


def kernel_basis(basis: HermiteBasis) -> np.ndarray:
    """Orthonormal basis of span{mu, v_1 mu, ..., v_d mu, |v|^2 mu}, as columns.

    Order: mu, v_1 mu, ..., v_d mu, normalized (|v|^2 - E) mu.
    """
    d = basis.d
    cols = [basis.unit([0] * d)]
    for j in range(d):
        a = [0] * d
        a[j] = 1
        cols.append(basis.unit(a))
    e = _energy_direction(basis)
    cols.append(e / np.linalg.norm(e))
    return np.array(cols).T


def moments(basis: HermiteBasis, f: np.ndarray) -> MacroMoments:
    """rho = <f, mu>, u = (d/E) <f, v mu>, theta = (1/E) <f, (|v|^2 - E) mu>."""
    f = np.asarray(f)
    d = basis.d
    rho = f[..., 0]
    u = np.stack([f[..., 1 + j] for j in range(d)], axis=-1) * (d / basis.E)
    theta = (f @ _energy_direction(basis)) / basis.E
    return MacroMoments(rho, u, theta)


def moment_matrix(basis: HermiteBasis) -> np.ndarray:
    """Rows map coefficients to (rho, u_1..u_d, theta)."""
    M = np.zeros((basis.d + 2, basis.size))
    M[0, 0] = 1.0
    for j in range(basis.d):
        M[1 + j, 1 + j] = basis.d / basis.E
    M[-1] = _energy_direction(basis) / basis.E
    return M


def macro_matrix(basis: HermiteBasis) -> np.ndarray:
    """Columns are coefficients of mu, v_j mu and (|v|^2-E) mu / (E(K-1)).

    Applying it to (rho, u, theta) gives the macroscopic distribution.
    """
    M = np.zeros((basis.size, basis.d + 2))
    M[0, 0] = 1.0
    for j in range(basis.d):
        M[1 + j, 1 + j] = 1.0
    M[:, -1] = _energy_direction(basis) / (basis.E * (basis.K - 1.0))
    return M


def projector_matrix(basis: HermiteBasis) -> np.ndarray:
    """Matrix of P f = (rho + u.v + theta (|v|^2 - E)/(E(K-1))) mu."""
    return macro_matrix(basis) @ moment_matrix(basis)


def project_P(basis: HermiteBasis, f: np.ndarray) -> np.ndarray:
    return np.asarray(f) @ projector_matrix(basis).T


# ---------------------------------------------------------------- v-structure

def multiply_by_v(basis: HermiteBasis, f: np.ndarray, j: int) -> tuple[np.ndarray, bool]:
    """Apply multiplication by v_j; flag when the top degree is occupied.

    The truncated product drops the components that leave the index set.
    """
    f = np.asarray(f)
    top = basis.indices[:, j] == basis.N if basis.index_rule == "tensor" \
        else basis.indices.sum(axis=1) == basis.N
    truncated = bool(np.any(np.abs(f[..., top]) > 0))
    return f @ basis.V[j].T, truncated


def v_dot(basis: HermiteBasis, xi) -> np.ndarray:
    """Matrix of multiplication by v.xi."""
    xi = np.asarray(xi, dtype=float)
    return sum(xi[j] * basis.V[j] for j in range(basis.d))


def burnett_functions(basis: HermiteBasis) -> tuple[np.ndarray, np.ndarray]:
    """Burnett functions A (d x d x size) and B (d x size).

    A_ij = sqrt(d/E) (v_i v_j - delta_ij |v|^2/d) mu,
    B_i = v_i (K - |v|^2/E) mu / sqrt(K(K-1)).
    """
    d, E, K = basis.d, basis.E, basis.K
    mu = basis.unit([0] * d)
    vmu = [basis.V[j] @ mu for j in range(d)]
    vvmu = np.array([[basis.V[i] @ vmu[j] for j in range(d)] for i in range(d)])
    r2mu = sum(vvmu[j, j] for j in range(d))
    A = np.sqrt(d / E) * (vvmu - np.eye(d)[:, :, None] * r2mu / d)
    B = np.array([(K * vmu[i] - basis.V[i] @ r2mu / E) for i in range(d)]) / np.sqrt(K * (K - 1.0))
    return A, B


# ---------------------------------------------------------------- symmetry

def rotation_operator(basis: HermiteBasis, R: np.ndarray, n_nodes: int | None = None) -> np.ndarray:
    """Matrix of f(v) -> f(R^T v), obtained by quadrature resampling.

    For the total-degree rule with the default grid this is exact.
    """
    R = np.asarray(R, dtype=float)
    if n_nodes is None:
        n_nodes = basis.N + 1 if basis.index_rule == "total" else basis.d * basis.N + 1
    pts, wts = gauss_grid(basis.d, n_nodes)
    H = basis.evaluate_h(pts)
    Hr = basis.evaluate_h(pts @ R)  # rows of pts @ R are R^T v
    return (H * wts) @ Hr.T


def reflection_matrix(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    sigma = sigma / np.linalg.norm(sigma)
    return np.eye(len(sigma)) - 2.0 * np.outer(sigma, sigma)


def hyperoctahedral_set(d: int) -> list[np.ndarray]:
    """Axis swaps and sign flips (a generating subset, not the whole group)."""
    out = []
    for perm in itertools.permutations(range(d)):
        P = np.eye(d)[list(perm)]
        out.append(P)
    for j in range(d):
        S = np.eye(d)
        S[j, j] = -1.0
        out.append(S)
    return out


def plane_rotation(d: int, angle: float, i: int = 0, j: int = 1) -> np.ndarray:
    R = np.eye(d)
    c, s = math.cos(angle), math.sin(angle)
    R[i, i], R[i, j], R[j, i], R[j, j] = c, -s, s, c
    return R


def orthonormal_complement(omega) -> np.ndarray:
    """Rows span the hyperplane orthogonal to omega."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    q, _ = np.linalg.qr(np.column_stack([omega, np.eye(len(omega))]))
    return q[:, 1:len(omega)].T
