import numpy as np
import pytest

from kinspec.collision_models import bgk_linear, bgk_quadratic
from kinspec.fields import Lattice
from kinspec.kinetic_solver import (
    Blowup,
    SolverConfig,
    acoustic_phase,
    decompose_solution,
    global_moments,
    ill_prepared_data,
    kinetic_integrate,
    measured_frequency,
    read_snapshot,
    well_prepared_data,
    write_snapshot,
)
from kinspec.nsf_solver import NSFConfig, nsf_integrate, well_prepared_init
from kinspec.semigroup import LimitCoefficients, propagate
from kinspec.transport_coefficients import transport_coefficients
from kinspec.velocity_space import build_basis


@pytest.fixture(scope="module")
def env():
    b = build_basis(2, 6)
    L = bgk_linear(b)
    Q = bgk_quadratic(b)
    lat = Lattice(2, 8)
    tc = transport_coefficients(L, Q)
    return b, L, Q, lat, tc


def test_linear_solver_matches_mode_propagator(env):
    b, L, Q, lat, _ = env
    f0 = well_prepared_data(lat, b)
    cfg = SolverConfig(0.1, dt=0.01, T_end=0.05, nonlinear=False)
    tr = kinetic_integrate(f0, L, None, cfg)
    idx = (1, 0)
    ref = propagate(L, np.array([1.0, 0.0]), 0.1, 0.05, f0.coeffs[idx])
    assert np.allclose(tr.snapshots[-1][idx], ref, atol=1e-12)


def test_conservation_and_reality(env):
    b, L, Q, lat, _ = env
    f0 = well_prepared_data(lat, b)
    tr = kinetic_integrate(f0, L, Q, SolverConfig(0.1, dt=0.01, T_end=0.1))
    g0 = global_moments(b, tr.snapshots[0], lat)
    g1 = global_moments(b, tr.snapshots[-1], lat)
    assert np.abs(g1 - g0).max() <= 1e-12
    assert tr.field(len(tr.times) - 1, b).reality_defect() <= 1e-12


def test_etdrk2_second_order(env):
    b, L, Q, lat, _ = env
    f0 = well_prepared_data(lat, b)
    ref = kinetic_integrate(f0, L, Q, SolverConfig(0.2, dt=0.0025, T_end=0.1)).snapshots[-1]
    errs = [np.abs(kinetic_integrate(f0, L, Q, SolverConfig(0.2, dt=dt, T_end=0.1)).snapshots[-1] - ref).max()
            for dt in (0.02, 0.01)]
    assert np.log2(errs[0] / errs[1]) > 1.7


def test_blowup_guard(env):
    b, L, Q, lat, _ = env
    f0 = well_prepared_data(lat, b, amplitude=50.0, temperature=50.0)
    with pytest.raises(Blowup):
        kinetic_integrate(f0, L, Q, SolverConfig(0.1, dt=0.05, T_end=0.5, c0=1.0))


def test_decomposition_well_prepared(env):
    b, L, Q, lat, tc = env
    f0 = well_prepared_data(lat, b)
    co = LimitCoefficients(tc.c, tc.kappa_inc, tc.kappa_bou, tc.kappa_wave)
    ns = nsf_integrate(well_prepared_init(f0),
                       NSFConfig(tc.kappa_inc, tc.kappa_bou, tc.theta_inc, tc.theta_bou, dt=0.01), 0.2)
    tr = kinetic_integrate(f0, L, Q, SolverConfig(0.05, dt=0.01, T_end=0.2))
    dec = decompose_solution(tr, f0, L, co, ns, alpha0=0.65, keep_parts=True)
    assert dec.norm_disp.max() <= 1e-10
    assert dec.norm_ns_gap[-1] < 0.1 * dec.norm_total[-1]
    for key in ("times", "norm_total", "norm_err"):
        assert len(getattr(dec, key)) == len(tr.times)
    assert {"t", "eps"} <= set(dec.rows()[0])


def test_acoustic_frequency(env):
    b, L, Q, lat, tc = env
    f0 = ill_prepared_data(lat, b)
    eps = 0.05
    tr = kinetic_integrate(f0, L, Q, SolverConfig(eps, dt=0.005, T_end=0.2))
    t, v = acoustic_phase(tr, b, (1, 0))
    assert measured_frequency(t, v) == pytest.approx(tc.c / eps, rel=0.01)


def test_snapshot_roundtrip(env, tmp_path):
    b, L, Q, lat, _ = env
    f0 = well_prepared_data(lat, b)
    f0.eps, f0.t = 0.05, 0.25
    p = tmp_path / "snap.bin"
    write_snapshot(p, f0)
    data = read_snapshot(p)
    assert (data["d"], data["N"], data["n"], data["size"]) == (2, 6, 8, b.size)
    assert data["eps"] == 0.05 and data["t"] == 0.25
    assert np.allclose(data["coeffs"], f0.coeffs, atol=1e-6)
    raw = p.read_bytes()
    assert len(raw) == 40 + 8 * f0.coeffs.size


def test_snapshot_bad_magic(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        read_snapshot(p)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(0.1, scheme="rk4")
    with pytest.raises(ValueError):
        SolverConfig(-0.1)
