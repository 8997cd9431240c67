"""Mode propagators exp(t L_xi), the hydrodynamic/kinetic splitting and limit semigroups."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .collision_models import LinearCollisionOperator
from .spectral_analysis import (
    BRANCHES,
    assemble_mode,
    spectral_projector,
    zeroth_order_projector,
)
from .transport_coefficients import pseudo_inverse
from .velocity_space import projector_matrix, v_dot


class Defective(RuntimeError):
    pass


class QuadratureResolution(RuntimeError):
    pass


def _phi1(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    big = np.abs(z) >= 1e-6
    out[big] = np.expm1(z[big]) / z[big]
    small = ~big
    out[small] = 1 + z[small] / 2 + z[small] ** 2 / 6
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    big = np.abs(z) >= 1e-3
    out[big] = (np.expm1(z[big]) - z[big]) / z[big] ** 2
    w = z[~big]
    out[~big] = 0.5 + w / 6 + w**2 / 24 + w**3 / 120 + w**4 / 720
    return out


@dataclass(frozen=True, eq=False)
class ModePropagator:
    """Eigen-decomposition of L_xi, reused for every t and for the phi-functions."""

    xi: np.ndarray
    values: np.ndarray
    right: np.ndarray
    left_inv: np.ndarray  # V^{-1}
    cond: float
    reconstruction: float

    @classmethod
    def build(cls, L: LinearCollisionOperator, xi, cond_max: float = 1e8) -> "ModePropagator":
        xi = np.asarray(xi, dtype=float)
        M = assemble_mode(L, xi).matrix
        if not np.any(xi):
            w, V = np.linalg.eigh(L.matrix)
            w = w.astype(complex)
            V = V.astype(complex)
            Vi = V.conj().T
            cond = 1.0
        else:
            w, V = np.linalg.eig(M)
            cond = float(np.linalg.cond(V))
            if not np.isfinite(cond) or cond > cond_max:
                raise Defective(f"eigenvector condition number {cond:.3g} at xi={xi}")
            Vi = np.linalg.inv(V)
        rec = float(np.linalg.norm((V * w) @ Vi - M) / max(np.linalg.norm(M), 1e-300))
        if rec > 1e-9:
            raise Defective(f"reconstruction error {rec:.3g} at xi={xi}")
        return cls(xi, w, V, Vi, cond, rec)

    def _fn(self, diag: np.ndarray) -> np.ndarray:
        return (self.right * diag) @ self.left_inv

    def expm(self, tau: float) -> np.ndarray:
        return self._fn(np.exp(tau * self.values))

    def phi1(self, tau: float) -> np.ndarray:
        return self._fn(_phi1(tau * self.values))

    def phi2(self, tau: float) -> np.ndarray:
        return self._fn(_phi2(tau * self.values))

    def apply(self, tau: float, f: np.ndarray) -> np.ndarray:
        return self.right @ (np.exp(tau * self.values) * (self.left_inv @ f))


def propagate(L: LinearCollisionOperator, xi, eps: float, t: float, f: np.ndarray) -> np.ndarray:
    """f(t) = exp((t/eps^2) L_{eps xi}) f."""
    mp = ModePropagator.build(L, eps * np.asarray(xi, dtype=float))
    return mp.apply(t / eps**2, np.asarray(f, dtype=complex))


# ---------------------------------------------------------------- splitting


@dataclass
class SemigroupSplit:
    t: float
    eps: float
    xi: np.ndarray
    full: np.ndarray
    parts: dict  # branch -> P_b(eps xi) U
    ns: np.ndarray
    wave: np.ndarray
    kin: np.ndarray
    sum_error: float


def branch_projectors(L: LinearCollisionOperator, xi, alpha0: float,
                      lam_window: float | None = None) -> dict | None:
    """Spectral projectors of the four branches at xi, or None beyond alpha0.

    At xi = 0 the branches collapse; the whole kernel is assigned to the
    diffusive group and the acoustic part vanishes.
    """
    xi = np.asarray(xi, dtype=float)
    s = float(np.linalg.norm(xi))
    if s > alpha0:
        return None
    if s == 0.0:
        n = L.basis.size
        Z = np.zeros((n, n), complex)
        return {"inc": projector_matrix(L.basis).astype(complex), "bou": Z,
                "+wave": Z, "-wave": Z}
    return {b: spectral_projector(L, xi, b, backend="eig", lam_window=lam_window)
            for b in BRANCHES}


def split_semigroup(L: LinearCollisionOperator, xi, eps: float, t: float, alpha0: float,
                    lam_window: float | None = None, tol: float = 1e-8) -> SemigroupSplit:
    xi = np.asarray(xi, dtype=float)
    mp = ModePropagator.build(L, eps * xi)
    U = mp.expm(t / eps**2)
    proj = branch_projectors(L, eps * xi, alpha0, lam_window)
    n = U.shape[0]
    if proj is None:
        parts = {b: np.zeros((n, n), complex) for b in BRANCHES}
    else:
        parts = {b: proj[b] @ U for b in BRANCHES}
    ns = parts["inc"] + parts["bou"]
    wave = parts["+wave"] + parts["-wave"]
    hyd = ns + wave
    kin = U - hyd
    err = float(np.abs(ns + wave + kin - U).max())
    if err > tol:
        raise RuntimeError(f"splitting does not sum to the propagator: {err:.3g}")
    return SemigroupSplit(t, eps, xi, U, parts, ns, wave, kin, err)


# ---------------------------------------------------------------- limit semigroups


@dataclass(frozen=True)
class LimitCoefficients:
    c: float
    kappa_inc: float
    kappa_bou: float
    kappa_wave: float


def limit_semigroups(L: LinearCollisionOperator, xi, t: float, eps: float,
                     coeffs: LimitCoefficients) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form symbols (U_ns, div V_ns, U_disp^eps) at one lattice mode.

    U_ns = sum over Inc, Bou of exp(-kappa s^2 t) P0.
    The second matrix is the symbol of div V_ns: i s sum exp(-kappa s^2 t) P0 (v.omega) L^{-1},
    acting on microscopic arguments.
    U_disp = sum over the acoustic pair of exp(+-i c s t/eps - kappa_wave s^2 t) P0.
    """
    basis = L.basis
    xi = np.asarray(xi, dtype=float)
    s = float(np.linalg.norm(xi))
    n = basis.size
    if s == 0.0:
        P = projector_matrix(basis).astype(complex)
        return P, np.zeros((n, n), complex), np.zeros((n, n), complex)
    omega = xi / s
    Pi = zeroth_order_projector(basis, omega, "inc")
    Pb = zeroth_order_projector(basis, omega, "bou")
    ei = math.exp(-coeffs.kappa_inc * s * s * t)
    eb = math.exp(-coeffs.kappa_bou * s * s * t)
    Uns = ei * Pi + eb * Pb
    TS = v_dot(basis, omega) @ pseudo_inverse(L)
    Vns = 1j * s * (ei * Pi + eb * Pb) @ TS
    damp = math.exp(-coeffs.kappa_wave * s * s * t)
    phase = coeffs.c * s * t / eps
    Ud = damp * (np.exp(1j * phase) * zeroth_order_projector(basis, omega, "+wave")
                 + np.exp(-1j * phase) * zeroth_order_projector(basis, omega, "-wave"))
    return Uns, Vns, Ud


# ---------------------------------------------------------------- decay measurement


def kinetic_decay(L: LinearCollisionOperator, eps: float, modes, t_grid, alpha0: float,
                  lam_window: float | None = None, tail: float = 0.5,
                  floor: float = 1e-11) -> dict:
    """Envelope of ||U_kin^eps(t; k)|| over a set of lattice modes.

    Returns the spectral rate (min over modes of the distance of the
    non-hydrodynamic spectrum of L_{eps k} to the imaginary axis), the
    fitted rate of the sup-envelope in the fast time t/eps^2 over the last
    `tail` fraction of t_grid, and the envelope constant C.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    env = np.zeros(len(t_grid))
    spectral = math.inf
    for k in modes:
        xi = eps * np.asarray(k, dtype=float)
        mp = ModePropagator.build(L, xi)
        proj = branch_projectors(L, xi, alpha0, lam_window)
        n = L.basis.size
        Q = np.eye(n) if proj is None else np.eye(n) - sum(proj.values())
        w = mp.values
        if proj is None:
            keep = np.ones(len(w), bool)
        else:
            keep = np.ones(len(w), bool)
            keep[np.argsort(-w.real)[: L.basis.d + 2]] = False
        spectral = min(spectral, float(-w[keep].real.max()))
        for j, t in enumerate(t_grid):
            env[j] = max(env[j], np.linalg.norm(mp.expm(t / eps**2) @ Q, 2))
    tau = t_grid / eps**2
    # samples below the roundoff floor carry no rate information
    valid = env > floor
    if valid.sum() < 4:
        raise ValueError("fewer than 4 envelope samples above the roundoff floor")
    tv = tau[valid]
    sel = tv >= tv[0] + (1 - tail) * (tv[-1] - tv[0])
    slope = float(np.polyfit(tv[sel], np.log(env[valid][sel]), 1)[0])
    rate = -slope
    C = float((env[valid] * np.exp(spectral * tv)).max())
    return {"eps": eps, "spectral_rate": spectral, "fitted_rate": rate, "C": C,
            "envelope": env, "t": t_grid}


# ---------------------------------------------------------------- dispersion


def bump_profile(r: np.ndarray) -> np.ndarray:
    """Smooth radial Fourier profile supported on the shell 1 < |xi| < 2."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    m = (r > 1.0) & (r < 2.0)
    out[m] = np.exp(-1.0 / ((r[m] - 1.0) * (2.0 - r[m])))
    return out


def wave_solution(t: float, rho: np.ndarray, d: int, profile=bump_profile,
                  support=(1.0, 2.0), n_nodes: int | None = None,
                  points_per_period: float = 10.0) -> np.ndarray:
    """u(t, x) = (2 pi)^{-d} int exp(i t|xi| + i x.xi) g(|xi|) dxi at |x| = rho.

    Radial Gauss-Legendre quadrature on the profile support.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    a, b = support
    max_freq = abs(t) + float(rho.max())
    periods = max_freq * (b - a) / (2 * np.pi)
    needed = int(math.ceil(points_per_period * periods)) + 32
    if n_nodes is None:
        n_nodes = needed
    elif n_nodes < needed:
        raise QuadratureResolution(f"{n_nodes} nodes < {needed} required at t={t}")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    r = 0.5 * (b - a) * x + 0.5 * (a + b)
    w = 0.5 * (b - a) * w
    g = profile(r) * np.exp(1j * t * r) * w
    rr = np.outer(rho, r)
    if d == 3:
        kern = 4 * np.pi * np.sinc(rr / np.pi) * r**2
    elif d == 2:
        kern = 2 * np.pi * j0(rr) * r
    else:
        raise ValueError("d must be 2 or 3")
    return (kern @ g) / (2 * np.pi) ** d


def dispersive_decay_check(d: int, t_grid=None, profile=bump_profile, support=(1.0, 2.0),
                           window: float = 6.0, n_x: int = 241) -> dict:
    """Measured L-infinity decay exponent of exp(i t |D|) g.

    The sup over x is taken on x = 0 together with a grid around the light
    cone |x| = t, where the radial solution concentrates.
    """
    if t_grid is None:
        # before t ~ 30 the value at the origin, not the light cone, dominates
        t_grid = np.geomspace(50.0, 500.0, 8)
    t_grid = np.asarray(t_grid, dtype=float)
    sup = np.zeros(len(t_grid))
    at0 = np.zeros(len(t_grid), complex)
    for i, t in enumerate(t_grid):
        rho = np.concatenate([[0.0], np.linspace(max(0.0, t - window), t + window, n_x)])
        u = wave_solution(t, rho, d, profile, support)
        sup[i] = np.abs(u).max()
        at0[i] = u[0]
    slope, intercept = np.polyfit(np.log(t_grid), np.log(sup), 1)
    return {"d": d, "t": t_grid, "sup": sup, "at_origin": at0, "exponent": float(slope),
            "intercept": float(intercept), "expected": -(d - 1) / 2}
