"""Spectrum, spectral projectors and Kato rectification of L - i v.xi."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig, eigh

from .collision_models import LinearCollisionOperator
from .transport_coefficients import (
    incompressible_modes,
    pseudo_inverse,
    psi_bou,
    psi_wave,
    wave_mode,
)
from .velocity_space import (
    HermiteBasis,
    orthonormal_complement,
    projector_matrix,
    reflection_matrix,
    rotation_operator,
    v_dot,
)

BRANCHES = ("inc", "bou", "+wave", "-wave")


class BranchCount(RuntimeError):
    pass


class Degenerate(RuntimeError):
    pass


class FitQuality(RuntimeError):
    pass


class ContourCrossing(RuntimeError):
    pass


class SquareRootDomain(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ModeOperator:
    matrix: np.ndarray
    xi: np.ndarray
    L: LinearCollisionOperator


def assemble_mode(L: LinearCollisionOperator, xi) -> ModeOperator:
    xi = np.asarray(xi, dtype=float)
    return ModeOperator(L.matrix - 1j * v_dot(L.basis, xi), xi, L)


def _unit(xi) -> tuple[float, np.ndarray]:
    xi = np.asarray(xi, dtype=float)
    s = float(np.linalg.norm(xi))
    if s == 0.0:
        raise ValueError("direction undefined at xi = 0")
    return s, xi / s


# ---------------------------------------------------------------- symmetry sectors

_SECTOR_CACHE: dict = {}


def transverse_sectors(basis: HermiteBasis, omega) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the functions even under every reflection fixing omega,
    and of their orthogonal complement.

    Both subspaces are invariant under L - i v.xi for xi parallel to omega. The
    even one holds the Boussinesq and acoustic modes, the other the
    incompressible ones.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    key = (id(basis), tuple(np.round(omega, 14)))
    hit = _SECTOR_CACHE.get(key)
    if hit is not None and hit[0] is basis:
        return hit[1], hit[2]
    n = basis.size
    E = np.eye(n)
    for sigma in orthonormal_complement(omega):
        J = rotation_operator(basis, reflection_matrix(sigma))
        E = E @ (0.5 * (np.eye(n) + J))
    w, V = eigh(0.5 * (E + E.T))
    even, odd = V[:, w > 0.5], V[:, w <= 0.5]
    if len(_SECTOR_CACHE) > 256:
        _SECTOR_CACHE.clear()
    _SECTOR_CACHE[key] = (basis, even, odd)
    return even, odd


# ---------------------------------------------------------------- branches


@dataclass
class ModeSpectrum:
    """Classified spectrum of L - i v.xi at one xi."""

    xi: np.ndarray
    values: dict  # branch -> complex eigenvalue(s)
    vectors: dict  # branch -> right eigenvectors (columns, full space)
    rest: np.ndarray  # non-hydrodynamic eigenvalues
    margin: float

    @property
    def gap(self) -> float:
        """Distance between the hydrodynamic cluster and the rest, along Re."""
        hyd = np.concatenate([np.atleast_1d(v) for v in self.values.values()])
        return float(hyd.real.min() - self.rest.real.max())


def _sector_eig(M: np.ndarray, S: np.ndarray):
    Ms = S.T @ M @ S
    w, R = np.linalg.eig(Ms)
    return w, R, Ms


def mode_spectrum(L: LinearCollisionOperator, xi, lam_window: float | None = None) -> ModeSpectrum:
    basis = L.basis
    d = basis.d
    if lam_window is None:
        lam_window = 0.5 * L.lam_L
    s, omega = _unit(xi)
    M = assemble_mode(L, xi).matrix
    even, odd = transverse_sectors(basis, omega)
    we, Re_, _ = _sector_eig(M, even)
    wo, Ro, _ = _sector_eig(M, odd)
    he = we.real > -lam_window
    ho = wo.real > -lam_window
    if he.sum() != 3 or ho.sum() != d - 1:
        raise BranchCount(f"|xi|={s:.4g}: found {he.sum()} even and {ho.sum()} odd "
                          f"eigenvalues in the window, expected 3 and {d - 1}")
    vec_e = even @ Re_[:, he]
    vals_e = we[he]
    refs = {"bou": psi_bou(basis), "+wave": wave_mode(basis, omega, "+wave"),
            "-wave": wave_mode(basis, omega, "-wave")}
    names = list(refs)
    ov = np.array([[abs(np.vdot(refs[nm], vec_e[:, k])) / np.linalg.norm(vec_e[:, k])
                    for nm in names] for k in range(3)])
    best, best_score = None, -1.0
    for perm in itertools.permutations(range(3)):
        score = sum(ov[k, perm[k]] for k in range(3))
        if score > best_score:
            best, best_score = perm, score
    margin = 1.0
    for k in range(3):
        row = np.sort(ov[k])[::-1]
        margin = min(margin, (row[0] - row[1]) / max(row[0], 1e-300))
    if margin < 0.1:
        raise Degenerate(f"|xi|={s:.4g}: classification overlap margin {margin:.3f}")
    values, vectors = {}, {}
    for k in range(3):
        nm = names[best[k]]
        values[nm] = vals_e[k]
        vectors[nm] = vec_e[:, [k]]
    values["inc"] = wo[ho]
    vectors["inc"] = odd @ Ro[:, ho]
    rest = np.concatenate([we[~he], wo[~ho]])
    return ModeSpectrum(np.asarray(xi, float), values, vectors, rest, margin)


@dataclass
class HydroSpectrum:
    radii: np.ndarray
    directions: np.ndarray
    values: dict  # branch -> array (n_r, n_dir) complex; inc holds the cluster mean
    inc_spread: np.ndarray
    gap: np.ndarray
    margin: np.ndarray
    fit: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for i, r in enumerate(self.radii):
            for j in range(len(self.directions)):
                for b in BRANCHES:
                    lam = self.values[b][i, j]
                    out.append({"|xi|": r, "dir_index": j, "branch": b, "re_lambda": lam.real,
                                "im_lambda": lam.imag, "gap": self.gap[i, j],
                                "proj_rank": self.basis_dim(b), "remainder_norm": self.remainder(b, i)})
        return out

    def basis_dim(self, branch: str) -> int:
        return int(self.directions.shape[1] - 1) if branch == "inc" else 1

    def remainder(self, branch: str, i: int) -> float:
        f = self.fit.get(branch)
        if not f:
            return math.nan
        return float(f["remainder"][i])


def default_radii(n: int = 12, lo: float = 1e-3, hi: float = 5e-2) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def hydro_branches(L: LinearCollisionOperator, radii, directions=None,
                   lam_window: float | None = None) -> HydroSpectrum:
    d = L.basis.d
    radii = np.asarray(radii, dtype=float)
    if directions is None:
        directions = np.eye(d)[:1]
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    nr, nd = len(radii), len(directions)
    vals = {b: np.zeros((nr, nd), complex) for b in BRANCHES}
    spread = np.zeros((nr, nd))
    gap = np.zeros((nr, nd))
    margin = np.zeros((nr, nd))
    for i, r in enumerate(radii):
        for j, om in enumerate(directions):
            ms = mode_spectrum(L, r * om / np.linalg.norm(om), lam_window)
            for b in BRANCHES:
                v = np.atleast_1d(ms.values[b])
                vals[b][i, j] = v.mean()
            spread[i, j] = float(np.ptp(np.atleast_1d(ms.values["inc"]).real)) if d > 2 else 0.0
            gap[i, j] = ms.gap
            margin[i, j] = ms.margin
    return HydroSpectrum(radii, directions, vals, spread, gap, margin)


def fit_expansions(spec: HydroSpectrum, strict: bool = True, degree: int = 6) -> dict:
    """Polynomial fits lambda(s) = a1 s + ... + a_deg s^deg per branch.

    The higher terms only absorb the tail of the series so that a1 and a2
    are clean. The remainder lambda - a1 s - a2 s^2 is fitted in log-log;
    its slope is the reported residual order.
    """
    s = spec.radii
    if len(s) < degree + 2:
        raise ValueError(f"need at least {degree + 2} radial points")
    X = np.column_stack([s**k for k in range(1, degree + 1)])
    out = {}
    for b in BRANCHES:
        lam = spec.values[b].mean(axis=1)
        coef, *_ = np.linalg.lstsq(X, lam, rcond=None)
        rem = np.abs(lam - coef[0] * s - coef[1] * s**2)
        good = rem > 0
        slope = float(np.polyfit(np.log(s[good]), np.log(rem[good]), 1)[0]) if good.sum() >= 2 else math.inf
        out[b] = {"a1": complex(coef[0]), "a2": complex(coef[1]), "a3": complex(coef[2]),
                  "remainder": rem, "remainder_slope": slope}
        if strict and slope < 2.5:
            raise FitQuality(f"branch {b}: remainder slope {slope:.3f} < 2.5")
    out["c"] = float(out["+wave"]["a1"].imag)
    out["c_minus"] = float(-out["-wave"]["a1"].imag)
    out["kappa_inc"] = float(-out["inc"]["a2"].real)
    out["kappa_bou"] = float(-out["bou"]["a2"].real)
    out["kappa_wave"] = float(-0.5 * (out["+wave"]["a2"].real + out["-wave"]["a2"].real))
    spec.fit = out
    return out


def determine_alpha0(L: LinearCollisionOperator, radii, lam_window: float | None = None, omega=None) -> float:
    """Largest radius r in the grid such that every grid radius <= r carries
    exactly d + 2 eigenvalues in {Re z > -lam_window}."""
    basis = L.basis
    if omega is None:
        omega = np.eye(basis.d)[0]
    if lam_window is None:
        lam_window = 0.5 * L.lam_L
    alpha = 0.0
    for r in np.sort(np.asarray(radii, float)):
        w = np.linalg.eigvals(assemble_mode(L, r * np.asarray(omega)).matrix)
        if int((w.real > -lam_window).sum()) != basis.d + 2:
            break
        alpha = float(r)
    return alpha


# ---------------------------------------------------------------- projectors


def _contour(M: np.ndarray, center: complex, radius: float, n_nodes: int) -> np.ndarray:
    n = M.shape[0]
    theta = 2 * np.pi * (np.arange(n_nodes) + 0.5) / n_nodes
    P = np.zeros((n, n), complex)
    eye = np.eye(n)
    for th in theta:
        e = np.exp(1j * th)
        P += radius * e * np.linalg.inv((center + radius * e) * eye - M)
    return P / n_nodes


def _polish(P: np.ndarray) -> np.ndarray:
    P2 = P @ P
    if np.abs(P2 - P).max() > 1e-10:
        P = 3 * P2 - 2 * P2 @ P
    return P


def _circle(target: np.ndarray, others: np.ndarray, n_nodes: int) -> tuple[complex, float]:
    center = complex(np.mean(target))
    inner = float(np.abs(target - center).max()) if len(target) else 0.0
    outer = float(np.abs(others - center).min())
    if outer <= inner:
        raise ContourCrossing("target eigenvalues not separated from the rest")
    radius = 0.5 * (inner + outer)
    # the trapezoid rule is exact up to (ratio)^n_nodes on both sides
    all_vals = np.concatenate([target, others])
    if np.any(np.abs(np.abs(all_vals - center) - radius) < 1e-3 * radius):
        raise ContourCrossing("eigenvalue within tolerance of the contour")
    return center, radius


def spectral_projector(L: LinearCollisionOperator, xi, branch: str = "total",
                       backend: str = "contour", lam_window: float | None = None,
                       n_nodes: int = 256) -> np.ndarray:
    basis = L.basis
    d = basis.d
    xi = np.asarray(xi, dtype=float)
    s = float(np.linalg.norm(xi))
    if lam_window is None:
        lam_window = 0.5 * L.lam_L
    M = assemble_mode(L, xi).matrix
    if branch == "total":
        w, R = np.linalg.eig(M)
        hyd = w.real > -lam_window
        if hyd.sum() != d + 2:
            raise BranchCount(f"|xi|={s:.4g}: {hyd.sum()} eigenvalues in the window")
        if backend == "contour":
            # circle centred at 0 so that xi = 0 works too
            inner = float(np.abs(w[hyd]).max())
            outer = float(np.abs(w[~hyd]).min())
            if outer <= inner:
                raise ContourCrossing("hydrodynamic cluster not separated")
            P = _contour(M, 0.0, 0.5 * (inner + outer), n_nodes)
        else:
            _, Lv, Rv = eig(M, left=True, right=True)
            P = _dyad(Rv[:, hyd], Lv[:, hyd])
        return _polish(P)
    if branch not in BRANCHES:
        raise ValueError(f"unknown branch {branch!r}")
    ms = mode_spectrum(L, xi, lam_window)
    _, omega = _unit(xi)
    even, odd = transverse_sectors(basis, omega)
    S = odd if branch == "inc" else even
    Ms = S.T @ M @ S
    target = np.atleast_1d(ms.values[branch])
    w = np.linalg.eigvals(Ms)
    # split sector spectrum into target and others by nearest match
    tmask = np.zeros(len(w), bool)
    for t in target:
        k = int(np.argmin(np.abs(w - t) + tmask * 1e300))
        tmask[k] = True
    if backend == "contour":
        center, radius = _circle(w[tmask], w[~tmask], n_nodes)
        Ps = _contour(Ms, center, radius, n_nodes)
    else:
        ww, Lv, Rv = eig(Ms, left=True, right=True)
        tm = np.zeros(len(ww), bool)
        for t in target:
            k = int(np.argmin(np.abs(ww - t) + tm * 1e300))
            tm[k] = True
        Ps = _dyad(Rv[:, tm], Lv[:, tm])
    return _polish(S @ Ps @ S.T)


def _dyad(R: np.ndarray, Lv: np.ndarray) -> np.ndarray:
    """R (L^H R)^{-1} L^H: bi-orthogonal projector onto span(R) along ker(L^H)."""
    return R @ np.linalg.solve(Lv.conj().T @ R, Lv.conj().T)


# ---------------------------------------------------------------- closed forms


def zeroth_order_projector(basis: HermiteBasis, omega, branch: str) -> np.ndarray:
    if branch == "total":
        return projector_matrix(basis).astype(complex)
    if branch == "inc":
        Z = incompressible_modes(basis, omega)
        return (Z @ Z.T).astype(complex)
    psi = psi_bou(basis) if branch == "bou" else wave_mode(basis, omega, branch)
    return np.outer(psi, psi).astype(complex)


def _reduced_blocks(basis: HermiteBasis, omega) -> dict:
    """Kernel-block eigenprojectors of -i P (v.omega) P and their eigenvalues."""
    c = basis.c
    return {
        "inc": (zeroth_order_projector(basis, omega, "inc"), 0.0),
        "bou": (zeroth_order_projector(basis, omega, "bou"), 0.0),
        "+wave": (zeroth_order_projector(basis, omega, "+wave"), 1j * c),
        "-wave": (zeroth_order_projector(basis, omega, "-wave"), -1j * c),
    }


def first_order_projector(L: LinearCollisionOperator, omega, branch: str) -> np.ndarray:
    """P1 in P_b(s omega) = P0_b + i s P1_b + O(s^2).

    P1 = S T P0 + P0 T S - i Pk1, with S = L^{-1}(I - P), T = v.omega and
    Pk1 the first-order kernel-block correction from the reduced matrix
    -i P T P + s P T S T P.
    """
    basis = L.basis
    omega = np.asarray(omega, float) / np.linalg.norm(omega)
    S = pseudo_inverse(L)
    T = v_dot(basis, omega)
    if branch == "total":
        P = projector_matrix(basis)
        return (S @ T @ P + P @ T @ S).astype(complex)
    blocks = _reduced_blocks(basis, omega)
    P0, mu0 = blocks[branch]
    M1 = projector_matrix(basis) @ T @ S @ T @ projector_matrix(basis)
    G = np.zeros_like(P0)
    for name, (Pj, muj) in blocks.items():
        if abs(muj - mu0) > 1e-12:
            G += Pj / (muj - mu0)
    Pk1 = -(P0 @ M1 @ G + G @ M1 @ P0)
    return S @ T @ P0 + P0 @ T @ S - 1j * Pk1


def projector_expansion_check(L: LinearCollisionOperator, omega, radii, s_point: float = 1e-3,
                              lam_window: float | None = None, seed: int = 0) -> dict:
    basis = L.basis
    omega = np.asarray(omega, float) / np.linalg.norm(omega)
    radii = np.asarray(radii, float)
    report = {"omega": omega.tolist(), "radii": radii.tolist(), "branches": {}}
    for b in BRANCHES + ("total",):
        P0 = zeroth_order_projector(basis, omega, b)
        P1 = first_order_projector(L, omega, b)
        norms = []
        for s in radii:
            P = spectral_projector(L, s * omega, b, lam_window=lam_window)
            norms.append(np.linalg.norm(P - P0 - 1j * s * P1, 2))
        norms = np.array(norms)
        slope = float(np.polyfit(np.log(radii), np.log(norms), 1)[0])
        Ps = spectral_projector(L, s_point * omega, b, lam_window=lam_window)
        P2s = spectral_projector(L, 2 * s_point * omega, b, lam_window=lam_window)
        report["branches"][b] = {
            "remainder_norms": norms.tolist(),
            "remainder_order": slope,
            "raw_distance_at_point": float(np.linalg.norm(Ps - P0, 2)),
            "first_order_norm": float(np.linalg.norm(P1, 2)),
            "zeroth_order_extrapolated_distance": float(np.linalg.norm(2 * Ps - P2s - P0, 2)),
        }
    # macroscopic content of the zeroth-order projectors
    rng = np.random.default_rng(seed)
    from .velocity_space import moments
    f = rng.standard_normal(basis.size)
    m = moments(basis, f)
    Pi = np.eye(basis.d) - np.outer(omega, omega)
    mi = moments(basis, np.real(zeroth_order_projector(basis, omega, "inc") @ f))
    mb = moments(basis, np.real(zeroth_order_projector(basis, omega, "bou") @ f))
    K = basis.K
    report["macro_inc_residual"] = float(np.abs(mi.u - Pi @ m.u).max() + abs(mi.rho) + abs(mi.theta))
    th = (m.theta - (K - 1) * m.rho) / K
    report["macro_bou_residual"] = float(abs(mb.theta - th) + abs(mb.rho + th) + np.abs(mb.u).max())
    return report


# ---------------------------------------------------------------- Kato


def _inv_sqrt_series(T: np.ndarray, tol: float = 1e-16, max_terms: int = 200) -> np.ndarray:
    """(I - T)^{-1/2} = sum_k binom(2k, k) 4^{-k} T^k for ||T|| < 1."""
    n = T.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, max_terms):
        term = term @ T * ((2 * k - 1) / (2 * k))
        out += term
        if np.abs(term).max() < tol:
            break
    return out


@dataclass
class KatoResult:
    matrix: np.ndarray
    off_block: float
    off_block_relative: float
    inc_block_residual: float
    lambda_inc: complex
    basis_labels: list


def kato_basis(basis: HermiteBasis, omega) -> tuple[np.ndarray, list]:
    """Columns: u_i.v mu (u_i orthogonal to omega), psi_Bou, psi_-W, psi_+W."""
    Z = incompressible_modes(basis, omega)
    cols = [Z[:, i] for i in range(Z.shape[1])]
    cols += [psi_bou(basis), psi_wave(basis, omega, -1), psi_wave(basis, omega, +1)]
    labels = [f"inc{i}" for i in range(Z.shape[1])] + ["bou", "psi_-", "psi_+"]
    return np.array(cols).T, labels


def kato_rectified(L: LinearCollisionOperator, xi, lam_window: float | None = None) -> KatoResult:
    basis = L.basis
    d = basis.d
    xi = np.asarray(xi, float)
    s = float(np.linalg.norm(xi))
    omega = xi / s if s > 0 else np.eye(d)[0]
    B, labels = kato_basis(basis, omega)
    M = assemble_mode(L, xi).matrix
    P = projector_matrix(basis)
    Px = spectral_projector(L, xi, "total", lam_window=lam_window)
    D = Px - P
    T = D @ D
    if np.linalg.norm(T, 2) >= 1.0:
        raise SquareRootDomain("||(P(xi) - P)^2|| >= 1")
    eye = np.eye(basis.size)
    U = (Px @ P + (eye - Px) @ (eye - P)) @ _inv_sqrt_series(T)
    Lhat = B.T @ np.linalg.solve(U, M @ U) @ B
    k = d - 1
    off = float(np.linalg.norm(Lhat[:k, k:]) + np.linalg.norm(Lhat[k:, :k]))
    scale = float(np.linalg.norm(Lhat))
    lam_inc = complex(np.trace(Lhat[:k, :k]) / k)
    inc_res = float(np.linalg.norm(Lhat[:k, :k] - lam_inc * np.eye(k)))
    return KatoResult(Lhat, off, off / scale if scale > 0 else 0.0, inc_res, lam_inc, labels)


def kato_first_order(L: LinearCollisionOperator, omega, s_max: float = 1e-2, n: int = 6) -> dict:
    """Fit diag of the 3x3 block of the rectified matrix to a1 s + ... + a4 s^4."""
    omega = np.asarray(omega, float) / np.linalg.norm(omega)
    k = L.basis.d - 1
    ss = s_max * np.linspace(1.0 / n, 1.0, n)
    diags = np.array([np.diag(kato_rectified(L, s * omega).matrix)[k:] for s in ss])
    X = np.column_stack([ss, ss**2, ss**3, ss**4])
    coef, *_ = np.linalg.lstsq(X, diags, rcond=None)
    raw = diags[-1] / ss[-1]
    return {"linear": coef[0], "quadratic": coef[1], "raw_quotient": raw, "radii": ss}


# ---------------------------------------------------------------- decay


def decay_and_resolvent_scan(L: LinearCollisionOperator, xi_set, t_grid, z_samples=None,
                             alpha0: float = 0.0, lam_window: float | None = None) -> dict:
    """Envelope C exp(-sigma0 t) of ||exp(t L_xi)(I - P(xi))|| and resolvent sizes.

    P(xi) is the total hydrodynamic projector for |xi| <= alpha0 and zero beyond.
    sigma0 is the spectral bound of the remaining part; C is the smallest
    constant making the envelope hold on the sampled grid.
    """
    d = L.basis.d
    if lam_window is None:
        lam_window = 0.5 * L.lam_L
    t_grid = np.asarray(t_grid, float)
    data = []
    for xi in xi_set:
        xi = np.asarray(xi, float)
        M = assemble_mode(L, xi).matrix
        w, V = np.linalg.eig(M)
        Vi = np.linalg.inv(V)
        s = float(np.linalg.norm(xi))
        keep = np.ones(len(w), bool)
        if s <= alpha0:
            order = np.argsort(-w.real)
            keep[order[: d + 2]] = False
        data.append((s, w, V, Vi, keep))
    sigma0 = min(float(-w[keep].real.max()) for _, w, _, _, keep in data)
    norms = np.zeros((len(data), len(t_grid)))
    for i, (s, w, V, Vi, keep) in enumerate(data):
        for j, t in enumerate(t_grid):
            norms[i, j] = np.linalg.norm((V * (np.exp(t * w) * keep)) @ Vi, 2)
    C = float((norms * np.exp(sigma0 * t_grid)[None, :]).max())
    res_sup = math.nan
    if z_samples is not None:
        res_sup = 0.0
        for s, w, V, Vi, keep in data:
            for z in z_samples:
                if z.real < -sigma0 / 2:
                    continue
                with np.errstate(divide="ignore", invalid="ignore"):
                    diag = np.where(keep, 1.0 / (z - w), 0.0)
                res_sup = max(res_sup, float(np.linalg.norm((V * diag) @ Vi, 2)))
    return {"sigma0": sigma0, "C": C, "resolvent_sup": res_sup,
            "radii": [x[0] for x in data], "norms": norms, "t": t_grid}
