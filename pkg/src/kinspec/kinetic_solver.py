"""Exponential integrator for the scaled kinetic equation on the torus.

    d_t f = eps^{-2} (L - eps v.grad) f + eps^{-1} Q(f, f)

Per Fourier mode the linear part is L_{eps k} / eps^2, propagated exactly
from its eigen-decomposition; Q is evaluated pointwise in x.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .collision_models import BilinearCollisionOperator, LinearCollisionOperator
from .fields import KineticField, Lattice, hs_norm
from .nsf_solver import (
    MacroField,
    NSFTrajectory,
    collision_field,
    leray_project,
    lift_to_kinetic,
    macro_from_physical,
)
from .semigroup import LimitCoefficients, ModePropagator, branch_projectors, limit_semigroups
from .spectral_analysis import zeroth_order_projector


class Blowup(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    eps: float
    dt: float = 1e-2
    scheme: str = "etdrk2"
    dealias: bool = True
    s: float = 2.0
    T_end: float = 0.5
    save_every: int = 1
    c0: float = 100.0
    nonlinear: bool = True

    def __post_init__(self):
        if self.scheme not in ("etdrk2", "etd1"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.eps <= 0 or self.dt <= 0 or self.T_end <= 0:
            raise ValueError("eps, dt and T_end must be positive")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")


@dataclass
class KineticTrajectory:
    times: np.ndarray
    snapshots: list  # coefficient arrays, lattice shape + (basis size,)
    norms: np.ndarray
    cfg: SolverConfig
    lattice: Lattice

    def field(self, i: int, basis) -> KineticField:
        return KineticField(self.lattice, basis, self.snapshots[i], self.cfg.eps, float(self.times[i]))


class ModeTable:
    """Per-mode exp(hA), h phi1(hA), h phi2(hA) with A = L_{eps k} / eps^2."""

    def __init__(self, L: LinearCollisionOperator, lattice: Lattice, eps: float, h: float):
        modes = lattice.modes()
        n = L.basis.size
        self.E = np.empty((len(modes), n, n), complex)
        self.F1 = np.empty_like(self.E)
        self.F2 = np.empty_like(self.E)
        self.cond = 0.0
        cache: dict = {}
        tau = h / eps**2
        for i, k in enumerate(modes):
            key = tuple(int(x) for x in k)
            neg = tuple(-x for x in key)
            if neg in cache:
                # L_{-xi} is the complex conjugate of L_xi
                j = cache[neg]
                self.E[i], self.F1[i], self.F2[i] = self.E[j].conj(), self.F1[j].conj(), self.F2[j].conj()
                cache[key] = i
                continue
            mp = ModePropagator.build(L, eps * k.astype(float))
            self.cond = max(self.cond, mp.cond)
            self.E[i] = mp.expm(tau)
            self.F1[i] = h * mp.phi1(tau)
            self.F2[i] = h * mp.phi2(tau)
            cache[key] = i
        self.shape = lattice.shape + (n,)

    @staticmethod
    def _apply(M: np.ndarray, f: np.ndarray) -> np.ndarray:
        flat = f.reshape(len(M), -1)
        return np.einsum("mij,mj->mi", M, flat).reshape(f.shape)


def _nonlinear(Q: BilinearCollisionOperator, f: np.ndarray, lattice: Lattice, cfg: SolverConfig) -> np.ndarray:
    return collision_field(Q, f, lattice, cfg.dealias) / cfg.eps


def kinetic_integrate(f_ini: KineticField, L: LinearCollisionOperator, Q: BilinearCollisionOperator | None,
                      cfg: SolverConfig, table: ModeTable | None = None) -> KineticTrajectory:
    lat = f_ini.lattice
    if L.basis is not f_ini.basis or (Q is not None and Q.basis is not L.basis):
        raise ValueError("L, Q and the field must share one basis")
    nsteps = max(1, int(round(cfg.T_end / cfg.dt)))
    h = cfg.T_end / nsteps
    if table is None:
        table = ModeTable(L, lat, cfg.eps, h)
    use_q = cfg.nonlinear and Q is not None
    f = f_ini.coeffs.astype(complex)
    if cfg.dealias and use_q:
        f = f * lat.dealias[..., None]
    times, snaps, norms = [f_ini.t], [f.copy()], [hs_norm(lat, f, cfg.s)]
    bound = cfg.c0 / cfg.eps
    ap = ModeTable._apply
    for step in range(1, nsteps + 1):
        if use_q:
            N0 = _nonlinear(Q, f, lat, cfg)
            a = ap(table.E, f) + ap(table.F1, N0)
            if cfg.scheme == "etdrk2":
                N1 = _nonlinear(Q, a, lat, cfg)
                f = a + ap(table.F2, N1 - N0)
            else:
                f = a
        else:
            f = ap(table.E, f)
        t = f_ini.t + step * h
        nrm = hs_norm(lat, f, cfg.s)
        if not math.isfinite(nrm) or nrm > bound:
            raise Blowup(f"norm {nrm:.3g} exceeds c0/eps = {bound:.3g} at t={t:.4g}")
        if step % cfg.save_every == 0 or step == nsteps:
            times.append(t)
            snaps.append(f.copy())
            norms.append(nrm)
    return KineticTrajectory(np.array(times), snaps, np.array(norms), cfg, lat)


def global_moments(basis, f: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Mean mass, momentum and energy fluctuation (zero mode of rho, u, (|v|^2-E) moment)."""
    from .velocity_space import moment_matrix
    zero = (0,) * lattice.d
    return np.real(moment_matrix(basis) @ f[zero])


# ---------------------------------------------------------------- initial data


def well_prepared_data(lattice: Lattice, basis, amplitude: float = 0.5,
                       temperature: float = 0.3) -> KineticField:
    """Lift of a divergence-free velocity and Boussinesq-compatible temperature."""
    x = lattice.grid()
    u = np.zeros_like(x)
    u[0] = np.sin(x[0]) * np.cos(x[1]) + 0.5 * np.sin(2 * x[1])
    u[1] = -np.cos(x[0]) * np.sin(x[1]) + 0.5 * np.cos(x[0])
    if lattice.d == 3:
        u[2] = 0.5 * np.sin(x[0] + x[1])
    theta = np.cos(x[0]) * np.sin(x[1]) + 0.5 * np.sin(x[0] + x[1])
    if lattice.d == 3:
        theta = theta + 0.5 * np.cos(x[2])
    state = macro_from_physical(lattice, amplitude * u, temperature * theta)
    return lift_to_kinetic(state, basis)


def ill_prepared_data(lattice: Lattice, basis, amplitude: float = 0.5, temperature: float = 0.3,
                      acoustic: float = 0.05, mode=None) -> KineticField:
    """Well-prepared data plus a compressible velocity and a pressure disturbance on one mode.

    The added part is a plane wave along `mode` (default e_1) and excites
    the acoustic branches.
    """
    f = well_prepared_data(lattice, basis, amplitude, temperature)
    k0 = np.zeros(lattice.d, int)
    k0[0] = 1
    if mode is not None:
        k0 = np.asarray(mode, int)
    x = lattice.grid()
    phase = np.tensordot(k0, x, axes=(0, 0))
    omega = k0 / np.linalg.norm(k0)
    u = acoustic * omega[:, None] * np.cos(phase).reshape(1, -1)
    u = u.reshape((lattice.d,) + lattice.shape)
    rho = acoustic * np.sin(phase)
    uh = lattice.to_fourier(u)
    rh = lattice.to_fourier(rho)
    extra = MacroField(lattice, rh, uh, np.zeros_like(rh))
    f.coeffs = f.coeffs + lift_to_kinetic(extra, basis).coeffs
    return f


# ---------------------------------------------------------------- decomposition


@dataclass
class Decomposition:
    times: np.ndarray
    norm_total: np.ndarray
    norm_ns_gap: np.ndarray  # ||f - f_ns||
    norm_disp: np.ndarray
    norm_kin: np.ndarray
    norm_err: np.ndarray
    ssp_err: np.ndarray
    eps: float
    parts: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"t": float(t), "eps": self.eps, "norm_total": a, "norm_ns_gap": b, "norm_disp": c,
                 "norm_kin": d_, "norm_err": e}
                for t, a, b, c, d_, e in zip(self.times, self.norm_total, self.norm_ns_gap,
                                             self.norm_disp, self.norm_kin, self.norm_err)]


def _ssp_hs(L: LinearCollisionOperator, lattice: Lattice, f: np.ndarray, s: float) -> float:
    q = np.real(np.einsum("...i,ij,...j->...", f.conj(), L.weight, f))
    return float(np.sqrt(np.sum(lattice.bracket(s) * q)))


def decompose_solution(traj: KineticTrajectory, f_ini: KineticField, L: LinearCollisionOperator,
                       coeffs: LimitCoefficients, nsf_traj: NSFTrajectory, alpha0: float,
                       keep_parts: bool = False) -> Decomposition:
    """f = f_ns + f_disp + f_kin + f_err at every saved time.

    f_ns is the lifted NSF trajectory, f_disp = U_disp^eps(t) f_ini in closed
    form, f_kin = exp(t L_{eps k}/eps^2)(I - P(eps k)) f_ini, and f_err is the
    remainder.
    """
    lat = traj.lattice
    basis = L.basis
    eps = traj.cfg.eps
    if f_ini.lattice.shape != lat.shape or f_ini.basis is not basis:
        raise ValueError("lattice/basis mismatch")
    ns_times = nsf_traj.times
    s = traj.cfg.s
    modes = lat.modes()
    n = basis.size
    fin = f_ini.coeffs.reshape(len(modes), n)
    # per-mode propagators and kinetic projectors of the initial data
    props, kin0 = [], np.empty_like(fin)
    plus, minus = np.zeros_like(fin), np.zeros_like(fin)
    radius = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
    for i, k in enumerate(modes):
        xi = eps * k.astype(float)
        mp = ModePropagator.build(L, xi)
        proj = branch_projectors(L, xi, alpha0)
        g = fin[i] if proj is None else fin[i] - sum(proj.values()) @ fin[i]
        props.append(mp)
        kin0[i] = g
        if radius[i] > 0:
            # the dispersive symbol at t = 0 gives the two acoustic components
            _, _, Up = limit_semigroups(L, k.astype(float), 0.0, eps, coeffs)
            om = k / radius[i]
            plus[i] = zeroth_order_projector(basis, om, "+wave") @ fin[i]
            minus[i] = Up @ fin[i] - plus[i]
    out = {key: [] for key in ("tot", "gap", "disp", "kin", "err", "ssp")}
    parts = {"ns": [], "disp": [], "kin": [], "err": []}
    for j, t in enumerate(traj.times):
        m = int(np.argmin(np.abs(ns_times - t)))
        if abs(ns_times[m] - t) > 1e-9:
            raise ValueError(f"no NSF snapshot at t={t}")
        fns = lift_to_kinetic(nsf_traj.states[m], basis).coeffs
        fkin = np.empty_like(fin)
        damp = np.exp(-coeffs.kappa_wave * radius**2 * t)[:, None]
        phase = np.exp(1j * coeffs.c * radius * t / eps)[:, None]
        fdisp = damp * (phase * plus + np.conj(phase) * minus)
        for i in range(len(modes)):
            fkin[i] = props[i].apply(t / eps**2, kin0[i])
        fdisp = fdisp.reshape(lat.shape + (n,))
        fkin = fkin.reshape(lat.shape + (n,))
        f = traj.snapshots[j]
        err = f - fns - fdisp - fkin
        out["tot"].append(hs_norm(lat, f, s))
        out["gap"].append(hs_norm(lat, f - fns, s))
        out["disp"].append(hs_norm(lat, fdisp, s))
        out["kin"].append(hs_norm(lat, fkin, s))
        out["err"].append(hs_norm(lat, err, s))
        out["ssp"].append(_ssp_hs(L, lat, err, s))
        if keep_parts:
            parts["ns"].append(fns)
            parts["disp"].append(fdisp)
            parts["kin"].append(fkin)
            parts["err"].append(err)
    return Decomposition(traj.times, *(np.array(out[k]) for k in ("tot", "gap", "disp", "kin", "err", "ssp")),
                         eps, parts if keep_parts else {})


def acoustic_phase(traj: KineticTrajectory, basis, mode) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude <f(t, k0), Psi_{+wave}(k0/|k0|)> along the trajectory (times, values)."""
    from .transport_coefficients import wave_mode
    lat = traj.lattice
    k0 = np.asarray(mode, int)
    idx = tuple(int(x) % lat.n for x in k0)
    psi = wave_mode(basis, k0 / np.linalg.norm(k0), "+wave")
    vals = np.array([np.vdot(psi, snap[idx]) for snap in traj.snapshots])
    return traj.times, vals


def measured_frequency(times: np.ndarray, values: np.ndarray) -> float:
    """Slope of the unwrapped phase (least squares)."""
    ph = np.unwrap(np.angle(values))
    return float(np.polyfit(times, ph, 1)[0])


# ---------------------------------------------------------------- snapshots


SNAPSHOT_MAGIC = b"KSNP"


def write_snapshot(path, fld: KineticField) -> None:
    """Little-endian layout:
    magic 'KSNP', uint32 version=1, uint32 d, uint32 N, uint32 basis size,
    uint32 n (lattice points per axis), float64 eps, float64 t,
    then row-major complex64 payload of shape (n,)*d + (basis size,).
    """
    lat = fld.lattice
    header = SNAPSHOT_MAGIC + struct.pack("<5I2d", 1, lat.d, fld.basis.N, fld.basis.size, lat.n,
                                           float(fld.eps), float(fld.t))
    payload = np.ascontiguousarray(fld.coeffs, dtype="<c8").tobytes()
    Path(path).write_bytes(header + payload)


def read_snapshot(path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not a snapshot file")
    version, d, N, size, n, eps, t = struct.unpack("<5I2d", raw[4:4 + 36])
    data = np.frombuffer(raw[40:], dtype="<c8").reshape((n,) * d + (size,))
    return {"version": version, "d": d, "N": N, "size": size, "n": n, "eps": eps, "t": t, "coeffs": data}
