import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinspec.collision_models import bgk_linear, bgk_quadratic
from kinspec.fields import KineticField, Lattice, hs_norm
from kinspec.nsf_solver import (
    NSFConfig,
    duhamel_residual,
    leray_project,
    lift_norm_squared,
    lift_to_kinetic,
    macro_from_physical,
    macro_of,
    nsf_integrate,
    taylor_green,
    well_prepared_init,
)
from kinspec.kinetic_solver import well_prepared_data
from kinspec.transport_coefficients import transport_coefficients
from kinspec.velocity_space import build_basis


@pytest.fixture(scope="module")
def lat2():
    return Lattice(2, 16)


@pytest.fixture(scope="module")
def setup2():
    b = build_basis(2, 6)
    L = bgk_linear(b)
    Q = bgk_quadratic(b)
    return b, L, Q, transport_coefficients(L, Q)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_leray_projection_properties(seed):
    lat = Lattice(2, 8)
    rng = np.random.default_rng(seed)
    u = lat.to_fourier(rng.standard_normal((2,) + lat.shape))
    p = leray_project(lat, u)
    assert np.abs(np.sum(lat.k * p, axis=0)).max() <= 1e-12
    assert np.abs(leray_project(lat, p) - p).max() <= 1e-14


def test_fourier_roundtrip(lat2, rng):
    f = rng.standard_normal(lat2.shape)
    assert np.allclose(lat2.to_physical(lat2.to_fourier(f)), f)


def test_lattice_rejects_odd():
    with pytest.raises(ValueError):
        Lattice(2, 7)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 3.0))
def test_hs_norm_monotone_in_s(s):
    lat = Lattice(2, 8)
    f = lat.to_fourier(np.random.default_rng(0).standard_normal(lat.shape))
    assert hs_norm(lat, f, s) <= hs_norm(lat, f, s + 0.5) + 1e-12


@pytest.mark.parametrize("scheme", ["ifrk2", "ifrk4"])
def test_taylor_green_exact(lat2, scheme):
    st0 = macro_from_physical(lat2, taylor_green(lat2), np.zeros(lat2.shape))
    cfg = NSFConfig(1.0, 1.0, 1.0, 1.0, dt=1e-2, scheme=scheme)
    tr = nsf_integrate(st0, cfg, 0.5)
    ref = np.exp(-2 * tr.times[-1]) * st0.u
    assert np.abs(tr.states[-1].u - ref).max() <= 1e-8


def test_energy_balance_converges(lat2, setup2):
    b, L, Q, tc = setup2
    st0 = well_prepared_init(well_prepared_data(lat2, b))
    errs = []
    for dt in (2e-2, 1e-2):
        cfg = NSFConfig(tc.kappa_inc, tc.kappa_bou, tc.theta_inc, tc.theta_bou, dt=dt)
        errs.append(np.abs(nsf_integrate(st0, cfg, 0.3).energy_balance()).max())
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_constraints_preserved(lat2, setup2):
    b, L, Q, tc = setup2
    st0 = well_prepared_init(well_prepared_data(lat2, b))
    cfg = NSFConfig(tc.kappa_inc, tc.kappa_bou, tc.theta_inc, tc.theta_bou)
    last = nsf_integrate(st0, cfg, 0.2).states[-1]
    assert last.divergence_defect() <= 1e-12
    assert last.boussinesq_defect() <= 1e-12


def test_lift_and_moments_roundtrip(lat2, setup2, rng):
    b = setup2[0]
    u = rng.standard_normal((2,) + lat2.shape)
    th = rng.standard_normal(lat2.shape)
    st0 = macro_from_physical(lat2, u, th)
    f = lift_to_kinetic(st0, b)
    rho, uu, tt = macro_of(f)
    assert np.allclose(rho, st0.rho) and np.allclose(uu, st0.u) and np.allclose(tt, st0.theta)
    assert hs_norm(lat2, f.coeffs, 2.0) ** 2 == pytest.approx(lift_norm_squared(st0, b, 2.0), rel=1e-12)


def test_well_prepared_init_is_identity_on_well_prepared(lat2, setup2):
    b = setup2[0]
    f = well_prepared_data(lat2, b)
    st0 = well_prepared_init(f)
    back = lift_to_kinetic(st0, b)
    assert np.abs(back.coeffs - f.coeffs).max() <= 1e-14


def test_well_prepared_init_pure_density(lat2, setup2):
    b = setup2[0]
    K = b.K
    coeffs = np.zeros(lat2.shape + (b.size,), complex)
    coeffs[1, 0, 0] = 1.0
    st0 = well_prepared_init(KineticField(lat2, b, coeffs))
    # Boussinesq projection of (rho, 0, 0): theta = -(K - 1) rho / K
    assert st0.theta[1, 0] == pytest.approx(-(K - 1) / K)
    assert st0.rho[1, 0] == pytest.approx((K - 1) / K)


def test_duhamel_residual_second_order(lat2, setup2):
    b, L, Q, tc = setup2
    st0 = well_prepared_init(well_prepared_data(lat2, b))
    res = []
    for dt in (4e-2, 2e-2, 1e-2):
        cfg = NSFConfig(tc.kappa_inc, tc.kappa_bou, tc.theta_inc, tc.theta_bou, dt=dt)
        res.append(duhamel_residual(nsf_integrate(st0, cfg, 0.4), L, Q).max())
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.8)


def test_bad_scheme():
    with pytest.raises(ValueError):
        NSFConfig(1, 1, 1, 1, scheme="euler")
