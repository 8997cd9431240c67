"""Pseudo-spectral incompressible Navier-Stokes-Fourier solver on the torus.

Evolves
    d_t u + theta_inc P div(u u) = kappa_inc lap u,   div u = 0,
    d_t T + theta_bou div(u T)   = kappa_bou lap T,   rho = -T,
with P the Leray projector, and lifts states to kinetic fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .collision_models import BilinearCollisionOperator, LinearCollisionOperator
from .fields import KineticField, Lattice
from .transport_coefficients import pseudo_inverse, psi_bou
from .velocity_space import HermiteBasis, macro_matrix, moment_matrix


class Blowup(RuntimeError):
    pass


@dataclass
class MacroField:
    """Fourier coefficients of (rho, u, theta); u has shape (d,) + lattice shape."""

    lattice: Lattice
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    def copy(self, **kw) -> "MacroField":
        base = dict(rho=self.rho.copy(), u=self.u.copy(), theta=self.theta.copy())
        base.update(kw)
        return replace(self, **base)

    def divergence_defect(self) -> float:
        """max_k |k.u_k| / max_k |k| |u_k|; normalized globally so roundoff-level modes do not dominate."""
        k = self.lattice.k
        div = np.abs(np.sum(k * self.u, axis=0))
        size = float((np.sqrt(self.lattice.k2) * np.sqrt(np.sum(np.abs(self.u) ** 2, axis=0))).max())
        return float(div.max() / size) if size > 1e-300 else 0.0

    def boussinesq_defect(self) -> float:
        scale = max(float(np.abs(self.theta).max()), 1e-300)
        return float(np.abs(self.rho + self.theta).max() / scale)

    def physical(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lat = self.lattice
        return lat.to_physical(self.rho), lat.to_physical(self.u), lat.to_physical(self.theta)

    def energy(self) -> float:
        """Mean of |u|^2 over the torus."""
        return float(np.sum(np.abs(self.u) ** 2))

    def enstrophy(self) -> float:
        """Mean of |grad u|^2 over the torus."""
        return float(np.sum(self.lattice.k2 * np.abs(self.u) ** 2))

    def hs_norm_u(self, s: float) -> float:
        return float(np.sqrt(np.sum(self.lattice.bracket(s) * np.abs(self.u) ** 2)))


@dataclass(frozen=True)
class NSFConfig:
    kappa_inc: float
    kappa_bou: float
    theta_inc: float
    theta_bou: float
    dt: float = 1e-2
    scheme: str = "ifrk2"
    dealias: bool = True
    s: float = 2.0
    blowup: float = 1e6

    def __post_init__(self):
        if self.scheme not in ("ifrk2", "ifrk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


def leray_project(lattice: Lattice, uhat: np.ndarray) -> np.ndarray:
    """(I - k k^T/|k|^2) u per mode; the k = 0 mode is left unchanged."""
    k = lattice.k
    k2 = np.where(lattice.k2 == 0, 1, lattice.k2)
    kdotu = np.sum(k * uhat, axis=0)
    return uhat - k * (kdotu / k2)


def macro_from_physical(lattice: Lattice, u: np.ndarray, theta: np.ndarray, t: float = 0.0) -> MacroField:
    """Build a constrained state from physical fields (projecting u, rho = -theta)."""
    uh = leray_project(lattice, lattice.to_fourier(u))
    th = lattice.to_fourier(theta)
    return MacroField(lattice, -th, uh, th, t)


def taylor_green(lattice: Lattice, amplitude: float = 1.0) -> np.ndarray:
    """Physical velocity (sin x cos y, -cos x sin y) (zero third component in d=3)."""
    x = lattice.grid()
    u = np.zeros_like(x)
    u[0] = amplitude * np.sin(x[0]) * np.cos(x[1])
    u[1] = -amplitude * np.cos(x[0]) * np.sin(x[1])
    return u


def _nonlinear(state: MacroField, cfg: NSFConfig, u: np.ndarray, th: np.ndarray):
    lat = state.lattice
    mask = lat.dealias if cfg.dealias else np.ones(lat.shape, bool)
    up = lat.to_physical(u * mask)
    tp = lat.to_physical(th * mask)
    ik = 1j * lat.k
    d = lat.d
    flux = np.empty((d, d) + lat.shape, complex)
    for i in range(d):
        for j in range(i, d):
            flux[i, j] = lat.to_fourier(up[i] * up[j])
            flux[j, i] = flux[i, j]
    div_uu = np.einsum("j...,ij...->i...", ik, flux)
    Nu = -cfg.theta_inc * leray_project(lat, div_uu) * mask
    ut = lat.to_fourier(up * tp)
    Nt = -cfg.theta_bou * np.sum(ik * ut, axis=0) * mask
    return Nu, Nt


@dataclass
class NSFTrajectory:
    times: np.ndarray
    states: list
    energy: np.ndarray
    enstrophy: np.ndarray
    cfg: NSFConfig

    def energy_balance(self) -> np.ndarray:
        """E(t) + 2 kappa int_0^t enstrophy - E(0), trapezoid in time."""
        diss = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(self.times) *
                                                 (self.enstrophy[1:] + self.enstrophy[:-1]))])
        return self.energy + 2 * self.cfg.kappa_inc * diss - self.energy[0]

    def summary(self) -> dict:
        return {"t_end": float(self.times[-1]), "steps": len(self.times) - 1,
                "energy_final": float(self.energy[-1]),
                "enstrophy_final": float(self.enstrophy[-1]),
                "energy_balance_max": float(np.abs(self.energy_balance()).max())}


def nsf_integrate(state: MacroField, cfg: NSFConfig, T_end: float, save_every: int = 1) -> NSFTrajectory:
    lat = state.lattice
    nsteps = max(1, int(round(T_end / cfg.dt)))
    h = T_end / nsteps
    Eu = np.exp(-cfg.kappa_inc * lat.k2 * h)
    Et = np.exp(-cfg.kappa_bou * lat.k2 * h)
    u = leray_project(lat, state.u.astype(complex))
    th = state.theta.astype(complex)
    t = state.t
    times, states, en, ens = [], [], [], []

    def record(u, th, t):
        st = MacroField(lat, -th.copy(), u.copy(), th.copy(), t)
        times.append(t)
        states.append(st)
        en.append(st.energy())
        ens.append(st.enstrophy())

    record(u, th, t)
    if cfg.scheme == "ifrk4":
        Eu2 = np.exp(-cfg.kappa_inc * lat.k2 * h / 2)
        Et2 = np.exp(-cfg.kappa_bou * lat.k2 * h / 2)
    for step in range(1, nsteps + 1):
        if cfg.scheme == "ifrk2":
            Nu0, Nt0 = _nonlinear(state, cfg, u, th)
            ua = Eu * (u + h * Nu0)
            ta = Et * (th + h * Nt0)
            Nu1, Nt1 = _nonlinear(state, cfg, ua, ta)
            u = Eu * u + 0.5 * h * (Eu * Nu0 + Nu1)
            th = Et * th + 0.5 * h * (Et * Nt0 + Nt1)
        else:
            a1u, a1t = _nonlinear(state, cfg, u, th)
            u2, t2 = Eu2 * (u + 0.5 * h * a1u), Et2 * (th + 0.5 * h * a1t)
            a2u, a2t = _nonlinear(state, cfg, u2, t2)
            u3, t3 = Eu2 * u + 0.5 * h * a2u, Et2 * th + 0.5 * h * a2t
            a3u, a3t = _nonlinear(state, cfg, u3, t3)
            u4, t4 = Eu * u + h * Eu2 * a3u, Et * th + h * Et2 * a3t
            a4u, a4t = _nonlinear(state, cfg, u4, t4)
            u = Eu * u + h / 6 * (Eu * a1u + 2 * Eu2 * (a2u + a3u) + a4u)
            th = Et * th + h / 6 * (Et * a1t + 2 * Et2 * (a2t + a3t) + a4t)
        # reality: drop imaginary parts of the physical fields
        u = lat.to_fourier(lat.to_physical(u))
        th = lat.to_fourier(lat.to_physical(th))
        t = state.t + step * h
        hs = float(np.sqrt(np.sum(lat.bracket(cfg.s) * np.abs(u) ** 2)))
        if not np.isfinite(hs) or hs > cfg.blowup:
            raise Blowup(f"H^{cfg.s} norm of u reached {hs:.3g} at t={t:.4g}")
        if step % save_every == 0 or step == nsteps:
            record(u, th, t)
    return NSFTrajectory(np.array(times), states, np.array(en), np.array(ens), cfg)


# ---------------------------------------------------------------- kinetic lifting


def lift_to_kinetic(state: MacroField, basis: HermiteBasis) -> KineticField:
    """(rho + u.v + theta (|v|^2 - E)/(E(K-1))) mu, per lattice mode."""
    lat = state.lattice
    if basis.d != lat.d:
        raise ValueError("basis and lattice dimensions differ")
    m = np.concatenate([state.rho[None], state.u, state.theta[None]], axis=0)
    coeffs = np.moveaxis(np.tensordot(macro_matrix(basis), m, axes=(1, 0)), 0, -1)
    return KineticField(lat, basis, coeffs.astype(complex), t=state.t)


def macro_of(field: KineticField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rho, u, theta) Fourier fields of a kinetic field."""
    m = np.moveaxis(field.coeffs @ moment_matrix(field.basis).T, -1, 0)
    return m[0], m[1:-1], m[-1]


def lift_norm_squared(state: MacroField, basis: HermiteBasis, s: float) -> float:
    """sum <k>^{2s} (|rho|^2 + (E/d)|u|^2 + |theta|^2/(K-1))."""
    w = state.lattice.bracket(s)
    dens = (np.abs(state.rho) ** 2 + basis.E / basis.d * np.sum(np.abs(state.u) ** 2, axis=0)
            + np.abs(state.theta) ** 2 / (basis.K - 1))
    return float(np.sum(w * dens))


def well_prepared_init(f_ini: KineticField) -> MacroField:
    """u = P u[f], theta = (theta[f] - (K - 1) rho[f]) / K, rho = -theta."""
    K = f_ini.basis.K
    rho, u, th = macro_of(f_ini)
    theta0 = (th - (K - 1) * rho) / K
    return MacroField(f_ini.lattice, -theta0, leray_project(f_ini.lattice, u), theta0, f_ini.t)


# ---------------------------------------------------------------- Duhamel form


def collision_field(Q: BilinearCollisionOperator, field_hat: np.ndarray, lattice: Lattice,
                    dealias: bool = True) -> np.ndarray:
    """Fourier coefficients of Q(f, f) evaluated pointwise in x."""
    m = field_hat @ Q.moments.T
    mphys = lattice.to_physical(np.moveaxis(m * (lattice.dealias[..., None] if dealias else 1), -1, 0))
    q = np.einsum("a...,b...,abn->...n", mphys, mphys, Q.G)
    qhat = lattice.to_fourier(np.moveaxis(q, -1, 0))
    qhat = np.moveaxis(qhat, 0, -1)
    if dealias:
        qhat = qhat * lattice.dealias[..., None]
    return qhat


def _diffusive_parts(basis: HermiteBasis, lattice: Lattice, y: np.ndarray):
    """Zeroth-order Inc and Bou projections of y per mode (velocity index trailing)."""
    d = basis.d
    k = lattice.k
    kk = np.where(lattice.k2 == 0, 1, lattice.k2)
    uvec = np.moveaxis(y[..., 1:1 + d], -1, 0)
    uproj = uvec - k * (np.sum(k * uvec, axis=0) / kk)
    inc = np.zeros_like(y)
    inc[..., 1:1 + d] = np.moveaxis(uproj, 0, -1)
    pb = psi_bou(basis)
    bou = (y @ pb)[..., None] * pb
    zero = lattice.k2 == 0
    inc[zero] = 0
    bou[zero] = 0
    return inc, bou


def duhamel_residual(traj: NSFTrajectory, L: LinearCollisionOperator, Q: BilinearCollisionOperator,
                     s: float = 2.0) -> np.ndarray:
    """|| f(t) - U_ns(t) f(0) - int_0^t div V_ns(t - tau) Q(f, f)(tau) dtau ||_{H^s_x(H_v)}.

    f is the lifted trajectory, which must be saved at every step; the time
    integral is the trapezoid rule on the solver grid.
    """
    basis = L.basis
    lat = traj.states[0].lattice
    cfg = traj.cfg
    times = traj.times
    Sinv = pseudo_inverse(L)
    absk = np.sqrt(lat.k2)
    kk = np.where(absk == 0, 1, absk)
    omega = lat.k / kk
    TS = [basis.V[j] @ Sinv for j in range(basis.d)]

    def source(state):
        f = lift_to_kinetic(state, basis).coeffs
        q = collision_field(Q, f, lat, cfg.dealias)
        y = sum(omega[j][..., None] * (q @ TS[j].T) for j in range(basis.d))
        return _diffusive_parts(basis, lat, y)

    f0 = lift_to_kinetic(traj.states[0], basis).coeffs
    inc0, bou0 = _diffusive_parts(basis, lat, f0)
    zero = lat.k2 == 0
    mean0 = np.where(zero[..., None], f0, 0)
    I_inc = np.zeros_like(f0)
    I_bou = np.zeros_like(f0)
    w_prev = source(traj.states[0])
    out = [0.0]
    for n in range(1, len(times)):
        h = times[n] - times[n - 1]
        ei = np.exp(-cfg.kappa_inc * lat.k2 * h)[..., None]
        eb = np.exp(-cfg.kappa_bou * lat.k2 * h)[..., None]
        w = source(traj.states[n])
        I_inc = ei * I_inc + 0.5 * h * (ei * w_prev[0] + w[0])
        I_bou = eb * I_bou + 0.5 * h * (eb * w_prev[1] + w[1])
        w_prev = w
        t = times[n]
        rhs = (np.exp(-cfg.kappa_inc * lat.k2 * t)[..., None] * inc0
               + np.exp(-cfg.kappa_bou * lat.k2 * t)[..., None] * bou0 + mean0
               + 1j * absk[..., None] * (I_inc + I_bou))
        lhs = lift_to_kinetic(traj.states[n], basis).coeffs
        diff = lhs - rhs
        out.append(float(np.sqrt(np.sum(lat.bracket(s)[..., None] * np.abs(diff) ** 2))))
    return np.array(out)
