import math
import warnings

import numpy as np
import pytest

from kinspec.collision_models import bgk_linear, variable_frequency_model
from kinspec.transport_coefficients import (
    compute_kappas,
    compute_thetas,
    cross_check,
    incompressible_modes,
    invert_L_orthogonal,
    psi_bou,
    psi_wave,
    transport_coefficients,
)
from kinspec.velocity_space import burnett_functions, kernel_basis, projector_matrix, v_dot


def test_invert_bgk(basis3, bgk3):
    A, _ = burnett_functions(basis3)
    sol = invert_L_orthogonal(bgk3, A[0, 1])
    assert np.allclose(sol.solution, -A[0, 1], atol=1e-12)
    assert sol.residual <= 1e-12


def test_invert_roundtrip_variable_frequency(basis3, vf3):
    A, _ = burnett_functions(basis3)
    sol = invert_L_orthogonal(vf3, A[0, 1])
    assert np.abs(vf3.matrix @ sol.solution - A[0, 1]).max() <= 1e-10
    assert np.abs(kernel_basis(basis3).T @ sol.solution).max() <= 1e-10


def test_invert_kernel_input_warns(basis3, bgk3):
    with pytest.warns(UserWarning):
        sol = invert_L_orthogonal(bgk3, basis3.unit([0, 0, 0]))
    assert np.abs(sol.solution).max() <= 1e-14


@pytest.mark.parametrize("nu", [1.0, 2.0])
def test_bgk_kappas_closed_form(basis3, nu):
    k = compute_kappas(bgk_linear(basis3, nu))
    assert k["kappa_inc"] == pytest.approx(1.0 / nu, abs=1e-12)
    assert k["kappa_bou"] == pytest.approx(1.0 / nu, abs=1e-12)
    assert k["kappa_inc_frame_spread"] <= 1e-10


def test_kappa_inc_normalizations(bgk3):
    k = compute_kappas(bgk3)
    # sum_ij <A_ij, A_ij> = (d-1)(d+2) for BGK d=3, so only that factor recovers kappa
    assert k["kappa_inc_hs_corrected"] == pytest.approx(k["kappa_inc"], abs=1e-12)
    assert k["kappa_inc_hs_printed"] == pytest.approx(10 / 8, abs=1e-12)


def test_kappa_wave_combination(bgk3, vf3):
    for L in (bgk3, vf3):
        k = compute_kappas(L)
        assert k["kappa_wave_combination_corrected"] == pytest.approx(k["kappa_wave"], rel=1e-10)
        assert k["kappa_wave_sign_spread"] <= 1e-10


def test_variable_frequency_kappa_frames(vf3):
    k = compute_kappas(vf3)
    assert k["kappa_inc_frame_spread"] <= 1e-10
    assert 0 < k["kappa_inc"] < 1


def test_eigenfunctions_orthonormal(basis3):
    om = np.array([0.3, -0.4, 0.866])
    om /= np.linalg.norm(om)
    cols = [psi_bou(basis3), psi_wave(basis3, om, 1), psi_wave(basis3, om, -1)]
    Z = incompressible_modes(basis3, om)
    B = np.column_stack(cols + [Z[:, i] for i in range(Z.shape[1])])
    assert np.abs(B.T @ B - np.eye(5)).max() <= 1e-12
    P = projector_matrix(basis3)
    assert np.abs(P @ B - B).max() <= 1e-12


def test_wave_eigenfunctions_of_reduced_transport(basis3):
    om = np.array([0.0, 0.6, 0.8])
    P = projector_matrix(basis3)
    M = -1j * P @ v_dot(basis3, om) @ P
    for sign in (1, -1):
        psi = psi_wave(basis3, om, sign)
        assert np.allclose(M @ psi, -1j * sign * basis3.c * psi, atol=1e-12)
    assert np.allclose(M @ psi_bou(basis3), 0, atol=1e-12)


def test_theta_identities(bgk3, quad3):
    th = compute_thetas(bgk3, quad3)
    for key in ("identity_A_shape_residual", "identity_A_zero_residual", "identity_B_vector_residual"):
        assert th[key] <= 1e-10


def test_theta_structural_zero(basis3, bgk3, quad3):
    A, _ = burnett_functions(basis3)
    mu = basis3.unit([0, 0, 0])
    LA = invert_L_orthogonal(bgk3, A[0, 1]).solution
    assert abs(quad3(mu, mu) @ LA) <= 1e-12


def test_bgk_advection_coefficients(bgk3, quad3):
    th = compute_thetas(bgk3, quad3)
    assert th["theta_inc"] == pytest.approx(1.0, abs=1e-10)
    assert th["theta_bou"] == pytest.approx(1.0, abs=1e-10)


def test_report_flags(bgk3, quad3):
    tc = transport_coefficients(bgk3, quad3)
    assert any("Hilbert-Schmidt" in f for f in tc.flags)
    assert tc.c == pytest.approx(math.sqrt(5 / 3))
    d = tc.to_dict()
    assert d["kappa_inc"] == pytest.approx(1.0)


def test_cross_check_flags_mismatch(bgk3):
    tc = transport_coefficients(bgk3)
    good = {"kappa_inc": 1.0, "kappa_bou": 1.0, "kappa_wave": tc.kappa_wave, "c": tc.c}
    assert cross_check(tc, good) == []
    bad = dict(good, kappa_inc=1.5)
    assert len(cross_check(tc, bad)) == 1


def test_without_quadratic_thetas_are_nan(bgk3):
    tc = transport_coefficients(bgk3)
    assert math.isnan(tc.theta_inc)
