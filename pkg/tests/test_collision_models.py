import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinspec.collision_models import (
    BilinearCollisionOperator,
    LinearCollisionOperator,
    audit_B1_B3,
    audit_L1_L4,
    bgk_linear,
    bgk_quadratic,
    local_maxwellian,
    variable_frequency_model,
)
from kinspec.velocity_space import (
    build_basis,
    hyperoctahedral_set,
    kernel_basis,
    plane_rotation,
    projector_matrix,
    rotation_operator,
)


def test_bgk_spectrum(bgk3):
    w = np.linalg.eigvalsh(bgk3.matrix)
    assert np.all(np.isclose(w, 0, atol=1e-12) | np.isclose(w, -1, atol=1e-12))
    assert int(np.isclose(w, 0, atol=1e-12).sum()) == 5


def test_bgk_shear_rayleigh(basis3, bgk3):
    f = basis3.V[0] @ basis3.V[1] @ basis3.unit([0, 0, 0])
    assert f @ bgk3.matrix @ f == pytest.approx(-1.0, abs=1e-12)


def test_bgk_rejects_bad_nu(basis3):
    with pytest.raises(ValueError):
        bgk_linear(basis3, 0.0)


def test_variable_frequency_gamma_zero_is_bgk(basis3):
    L0 = variable_frequency_model(basis3, 1.0, 0.0)
    assert np.abs(L0.matrix - bgk_linear(basis3).matrix).max() <= 1e-12


def test_variable_frequency_rejects_gamma(basis3):
    with pytest.raises(ValueError):
        variable_frequency_model(basis3, 1.0, 2.5)


def test_variable_frequency_kernel_dimension():
    b = build_basis(3, 8)
    L = variable_frequency_model(b, 1.0, 1.0)
    w = np.linalg.eigvalsh(L.matrix)
    assert int((np.abs(w) < 1e-9).sum()) == 5


def test_variable_frequency_rayleigh(basis3, vf3, rng):
    P = projector_matrix(basis3)
    for _ in range(100):
        f = rng.standard_normal(basis3.size)
        g = f - P @ f
        assert f @ vf3.matrix @ f <= -vf3.lam_L * g @ vf3.weight @ g * (1 - 1e-10) + 1e-12


@pytest.mark.parametrize("d,N", [(2, 8), (3, 6)])
@pytest.mark.parametrize("model", ["bgk", "vf"])
def test_audits_pass(d, N, model):
    b = build_basis(d, N)
    L = bgk_linear(b) if model == "bgk" else variable_frequency_model(b, 1.0, 1.0)
    rots = hyperoctahedral_set(d) + [plane_rotation(d, 0.3)]
    xis = [np.full(d, 0.2), np.eye(d)[0] * 2.0]
    rl = audit_L1_L4(L, rots, xis)
    assert rl.passed, rl.failures
    assert rl.constants["kernel_dimension"] == d + 2
    rb = audit_B1_B3(bgk_quadratic(b), rots, sample_count=20, L=L)
    assert rb.passed, rb.failures


def test_audit_detects_asymmetric_operator(basis3, bgk3, rng):
    bad = bgk3.matrix + 1e-3 * rng.standard_normal(bgk3.matrix.shape)
    L = LinearCollisionOperator(basis3, bad, bgk3.A_part, bgk3.B_part + (bad - bgk3.matrix),
                                1.0, 1.0, 0.0, bgk3.weight, "perturbed")
    rep = audit_L1_L4(L, [], [])
    assert not rep.passed
    assert any(c.name == "L1 symmetry" for c in rep.failures)


def test_audit_detects_broken_conservation(basis3, quad3):
    G = quad3.G.copy()
    G[0, 0, 0] += 1e-3
    bad = BilinearCollisionOperator(basis3, G, quad3.moments)
    rep = audit_B1_B3(bad, [], sample_count=10)
    assert any(c.name == "B1 conservation" for c in rep.failures)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_quadratic_conservation_and_symmetry(seed):
    b = build_basis(3, 5)
    Q = bgk_quadratic(b)
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2, b.size))
    q = Q(f, g)
    assert np.abs(q @ kernel_basis(b)).max() <= 1e-12 * max(1.0, np.abs(q).max())
    assert np.abs(q - Q(g, f)).max() <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_linear_dissipation(seed):
    b = build_basis(2, 6)
    L = variable_frequency_model(b, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(b.size)
    assert f @ L.matrix @ f <= 1e-12


def test_quadratic_equivariance_axis_swap(basis3, quad3, rng):
    R = np.eye(3)[[1, 0, 2]]
    O = rotation_operator(basis3, R)
    f, g = rng.standard_normal((2, basis3.size))
    assert np.abs(quad3(O @ f, O @ g) - O @ quad3(f, g)).max() <= 1e-10


def test_quadratic_matches_maxwellian_taylor(basis3, rng):
    """Q(g, g) is the second-order coefficient of eps -> M[mu + eps g]."""
    Q = bgk_quadratic(basis3)
    g = projector_matrix(basis3) @ rng.standard_normal(basis3.size) * 0.3
    mu = basis3.unit([0, 0, 0])
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        mp = local_maxwellian(basis3, eps * g)
        mm = local_maxwellian(basis3, -eps * g)
        second = (mp + mm - 2 * (mu + 0 * g)) / (2 * eps**2)
        # mp + mm - 2 M[0] = 2 eps^2 Q(g,g) + O(eps^4)
        errs.append(np.abs(second - Q(g, g)).max())
    errs = np.array(errs)
    assert errs[-1] < 1e-5
    rates = np.log2(errs[:-1] / errs[1:])
    assert np.all(rates > 1.8)


def test_dense_matches_call(basis3, quad3, rng):
    f, g = rng.standard_normal((2, basis3.size))
    T = quad3.dense()
    assert np.allclose(np.einsum("nij,i,j->n", T, f, g), quad3(f, g), atol=1e-12)


def test_scaled_operator(bgk3):
    L2 = bgk3.scaled(2.0)
    assert L2.lam_L == 2.0
    assert np.allclose(L2.matrix, 2 * bgk3.matrix)
