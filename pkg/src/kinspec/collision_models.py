"""Linear and quadratic collision operators on a Hermite basis, with audits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import roots_genlaguerre, roots_legendre

from .velocity_space import (
    HermiteBasis,
    kernel_basis,
    moment_matrix,
    projector_matrix,
    rotation_operator,
    v_dot,
)


@dataclass(frozen=True, eq=False)
class LinearCollisionOperator:
    """Matrix realization of L with splitting L = A_part + B_part.

    `weight` is the Gram matrix of the dissipation norm, so that
    ||f||_Ssp^2 = f^H weight f.
    """

    basis: HermiteBasis
    matrix: np.ndarray
    A_part: np.ndarray
    B_part: np.ndarray
    lam_L: float
    lam_B: float
    gamma: float
    weight: np.ndarray
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def ssp_norm(self, f: np.ndarray) -> float:
        f = np.asarray(f)
        return float(np.sqrt(np.real(np.conj(f) @ self.weight @ f)))

    def scaled(self, factor: float) -> "LinearCollisionOperator":
        return LinearCollisionOperator(
            self.basis, factor * self.matrix, factor * self.A_part, factor * self.B_part,
            factor * self.lam_L, factor * self.lam_B, self.gamma, self.weight,
            self.name, dict(self.params, scale=factor))


def bgk_linear(basis: HermiteBasis, nu: float = 1.0) -> LinearCollisionOperator:
    if nu <= 0:
        raise ValueError("relaxation rate must be positive")
    n = basis.size
    P = projector_matrix(basis)
    eye = np.eye(n)
    return LinearCollisionOperator(basis, nu * (P - eye), nu * P, -nu * eye, nu, nu, 0.0,
                                   eye, "bgk", {"nu": nu})


def isotropic_quadrature(basis: HermiteBasis, n_radial: int = 96) -> tuple[np.ndarray, np.ndarray]:
    """Polar product rule for the Gaussian: exact on the sphere up to degree 2N.

    Angular exactness makes Galerkin matrices of radial weights commute with
    every rotation up to roundoff, whatever the radial accuracy.
    """
    d, N = basis.d, basis.N
    a = (d - 2) / 2.0
    t, wt = roots_genlaguerre(n_radial, a)
    r = np.sqrt(2.0 * t)
    m = 2 * N + 2
    if d == 2:
        phi = 2 * np.pi * np.arange(m) / m
        dirs = np.column_stack([np.cos(phi), np.sin(phi)])
        wd = np.full(m, 1.0 / m)
    else:
        z, wz = roots_legendre(N + 2)
        phi = 2 * np.pi * np.arange(m) / m
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1 - zz**2)
        dirs = np.column_stack([(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), zz.ravel()])
        wd = (np.repeat(wz, m) / m).ravel()
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    wts = (wt[:, None] * wd[None, :]).ravel()
    return pts, wts / wts.sum()


def variable_frequency_model(basis: HermiteBasis, nu: float = 1.0, gamma: float = 1.0,
                             n_radial: int = 96) -> LinearCollisionOperator:
    """L = -nu (I - P) W (I - P), W = Galerkin matrix of (1 + |v|^2)^(gamma/2)."""
    if nu <= 0:
        raise ValueError("relaxation rate must be positive")
    if not 0.0 <= gamma <= 2.0:
        raise ValueError("gamma must lie in [0, 2]")
    pts, wts = isotropic_quadrature(basis, n_radial)
    H = basis.evaluate_h(pts)
    w = (1.0 + np.sum(pts**2, axis=1)) ** (gamma / 2.0)
    W = (H * (wts * w)) @ H.T
    W = 0.5 * (W + W.T)
    if gamma == 0.0:
        W = np.eye(basis.size)
    P = projector_matrix(basis)
    Q = np.eye(basis.size) - P
    L = -nu * Q @ W @ Q
    L = 0.5 * (L + L.T)
    B_part = -nu * W
    return LinearCollisionOperator(basis, L, L - B_part, B_part, nu, nu, gamma, W,
                                   "variable_frequency", {"nu": nu, "gamma": gamma})


# ---------------------------------------------------------------- quadratic


def _maxwellian_second_order(m: np.ndarray, v: np.ndarray, d: int) -> np.ndarray:
    """Q(g,g)/mu at points v for a fluctuation with moments m = (rho, u, theta).

    Second-order Taylor coefficient of the local Maxwellian built from
    mu + eps g, written as Phi_2 + Phi_1^2/2.
    """
    rho, u, th = m[0], m[1:1 + d], m[1 + d]
    r2 = np.sum(v**2, axis=-1)
    uv = v @ u
    u2 = u @ u
    phi1 = rho + uv + th * (r2 - d) / 2.0
    # bulk velocity is momentum / (1 + eps rho), hence the -rho u.v term
    phi2 = (-rho**2 / 2.0 + d * rho * th / 2.0 + d * th**2 / 4.0 - th * uv - rho * uv
            - r2 * (th**2 + rho * th + u2 / d) / 2.0)
    return phi2 + phi1**2 / 2.0


@dataclass(frozen=True, eq=False)
class BilinearCollisionOperator:
    """Q(f, g) = sum_ab m_a[f] m_b[g] G[a, b], with m the macroscopic moments.

    G is symmetric in (a, b), so the operator is symmetrized by construction.
    """

    basis: HermiteBasis
    G: np.ndarray
    moments: np.ndarray
    symmetrized: bool = True
    name: str = "bgk_quadratic"

    def __call__(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        mf = np.asarray(f) @ self.moments.T
        mg = np.asarray(g) @ self.moments.T
        return np.einsum("...a,...b,abn->...n", mf, mg, self.G)

    def from_moments(self, mf: np.ndarray, mg: np.ndarray) -> np.ndarray:
        return np.einsum("...a,...b,abn->...n", mf, mg, self.G)

    def dense(self) -> np.ndarray:
        """Q as a (size, size, size) tensor: Q(f,g)_n = T[n, i, j] f_i g_j."""
        return np.einsum("ai,bj,abn->nij", self.moments, self.moments, self.G)


def bgk_quadratic(basis: HermiteBasis) -> BilinearCollisionOperator:
    d = basis.d
    if abs(basis.E - d) > 1e-10:
        raise ValueError("closed form assumes the standard Gaussian weight")
    nm = d + 2
    pts, wts = basis.nodes, basis.weights
    H = basis.evaluate_h(pts)
    G = np.zeros((nm, nm, basis.size))
    eye = np.eye(nm)
    for a in range(nm):
        for b in range(a, nm):
            qp = _maxwellian_second_order(eye[a] + eye[b], pts, d)
            qm = _maxwellian_second_order(eye[a] - eye[b], pts, d)
            G[a, b] = G[b, a] = H @ (wts * (qp - qm) / 4.0)
    return BilinearCollisionOperator(basis, G, moment_matrix(basis))


def local_maxwellian(basis: HermiteBasis, f: np.ndarray, n_nodes: int = 40) -> np.ndarray:
    """Coefficients of M(R, U, T; v) whose moments match mu + f.

    The moments use the exact nonlinear map; the projection is by quadrature.
    """
    d = basis.d
    f = np.asarray(f, dtype=float)
    m = moment_matrix(basis) @ f
    R = 1.0 + m[0]
    mom = m[1:1 + d] * basis.E / d
    U = mom / R
    energy = basis.E + basis.E * (m[0] + m[-1])
    T = (energy - R * U @ U) / (d * R)

    def ratio(v):
        r2 = np.sum(v**2, axis=1)
        return R * T ** (-d / 2.0) * np.exp(-np.sum((v - U) ** 2, axis=1) / (2 * T) + r2 / 2.0)

    return basis.project(ratio, n_nodes)


# ---------------------------------------------------------------- audits


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    note: str = ""


@dataclass
class AssumptionReport:
    checks: list[Check] = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, value: float, tol: float, ok: bool | None = None, note: str = "") -> None:
        value = float(value)
        self.checks.append(Check(name, bool(value <= tol) if ok is None else bool(ok), value, tol, note))

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [c.__dict__ for c in self.checks],
                "constants": self.constants}


def _is_signed_permutation(R: np.ndarray) -> bool:
    A = np.abs(R)
    return bool(np.allclose(A, np.round(A), atol=1e-14) and np.allclose(A.sum(0), 1) and np.allclose(A.sum(1), 1))


def rotation_tolerance(R: np.ndarray) -> float:
    return 1e-10 if _is_signed_permutation(R) else 1e-8


def audit_L1_L4(L: LinearCollisionOperator, rotation_set, xi_samples) -> AssumptionReport:
    basis = L.basis
    d = basis.d
    M = L.matrix
    rep = AssumptionReport()
    scale = np.abs(M).max()

    rep.add("L1 symmetry", np.abs(M - M.T).max(), 1e-12)
    split = np.abs(L.A_part + L.B_part - M).max()
    rep.add("L4 splitting A+B=L", split, 1e-12)

    w, Z = eigh(0.5 * (M + M.T))
    zero = np.abs(w) < 1e-9 * max(scale, 1.0)
    kdim = int(zero.sum())
    rep.add("L3 kernel dimension", abs(kdim - (d + 2)), 0, note=f"dim={kdim}")
    rep.constants["kernel_dimension"] = kdim
    if kdim:
        Kb = kernel_basis(basis)
        resid = np.linalg.norm(Z[:, zero] - Kb @ (Kb.T @ Z[:, zero]))
        rep.add("L3 kernel span", resid, 1e-10)

    # gap on the orthogonal complement, measured in the dissipation norm
    wp, Vp = eigh(projector_matrix(basis))
    C = Vp[:, wp < 0.5]
    gen = eigh(-C.T @ M @ C, C.T @ L.weight @ C, eigvals_only=True)
    lam = float(gen.min())
    rep.constants["lambda_L_measured"] = lam
    rep.add("L3 gap", L.lam_L - lam, 1e-10, note=f"measured {lam:.12g} declared {L.lam_L}")

    worst = -np.inf
    for xi in xi_samples:
        Bx = L.B_part - 1j * v_dot(basis, xi)
        worst = max(worst, float(np.linalg.eigvals(Bx).real.max()))
    rep.constants["B_xi_abscissa"] = worst
    if len(xi_samples):
        rep.add("L4 B_xi dissipativity", worst + L.lam_B, 1e-10)
    rep.add("L4 lam_B >= lam_L", L.lam_L - L.lam_B, 0.0)

    for k, R in enumerate(rotation_set):
        O = rotation_operator(basis, R)
        res = np.abs(O @ M - M @ O).max()
        rep.add(f"L1 rotation[{k}] commutation", res, rotation_tolerance(R))
    return rep


def audit_B1_B3(Q: BilinearCollisionOperator, rotation_set, sample_count: int = 50,
                L: LinearCollisionOperator | None = None, seed: int = 0) -> AssumptionReport:
    basis = Q.basis
    rng = np.random.default_rng(seed)
    n = basis.size
    rep = AssumptionReport()
    F = rng.standard_normal((sample_count, n))
    G = rng.standard_normal((sample_count, n))
    Hh = rng.standard_normal((sample_count, n))
    q = Q(F, G)
    Kb = kernel_basis(basis)
    cons = np.abs(q @ Kb).max() / max(np.abs(q).max(), 1.0)
    rep.add("B1 conservation", cons, 1e-12)
    rep.add("symmetry Q(f,g)=Q(g,f)", np.abs(q - Q(G, F)).max(), 1e-12)
    a, b = rng.standard_normal(2)
    bil = np.abs(Q(a * F + b * Hh, G) - a * q - b * Q(Hh, G)).max()
    rep.add("bilinearity", bil, 1e-10)
    for k, R in enumerate(rotation_set):
        O = rotation_operator(basis, R)
        res = np.abs(Q(F @ O.T, G @ O.T) - q @ O.T).max() / max(np.abs(q).max(), 1.0)
        rep.add(f"B2 rotation[{k}] equivariance", res, rotation_tolerance(R))
    W = L.weight if L is not None else np.eye(n)

    def ssp(X):
        return np.sqrt(np.einsum("si,ij,sj->s", X, W, X))

    def hn(X):
        return np.linalg.norm(X, axis=1)

    # sup over h of <q, h>/||h||_Ssp is the dual norm ||W^{-1/2} q||
    dual = np.sqrt(np.einsum("si,si->s", q, np.linalg.solve(W, q.T).T))
    ratio = dual / (hn(F) * ssp(G) + ssp(F) * hn(G))
    rep.constants["B3_constant"] = float(ratio.max())
    rep.add("B3 finite constant", 0.0 if np.isfinite(ratio.max()) else 1.0, 0.0)
    return rep
