import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocal_qed.errors import DegeneratePointError
from nonlocal_qed.green import (
    direction,
    green_components,
    green_tensor,
    im_green_scalars,
    local_longitudinal_im_green_prefactor,
    solve_E_from_current,
    verify_grel,
    wave_operator,
)
from nonlocal_qed.material import DrudeHydrodynamic, eval_permittivity

materials = st.builds(DrudeHydrodynamic, st.floats(0.0, 2.0), st.floats(0.01, 1.0), st.floats(0.0, 1.0))
kvecs = st.tuples(*[st.floats(-5, 5)] * 3).map(np.array)
omegas = st.floats(0.05, 5.0)


def test_reference_components(drude):
    # mpmath oracle at 30 digits
    gc = green_components(drude, 2.0, 1.0)
    assert gc.g_perp == pytest.approx(0.28606158833063209 + 0.0040518638573743922j, rel=1e-14)
    assert gc.g_par == pytest.approx(-3.3648648648648649 + 1.6891891891891892j, rel=1e-14)


@given(materials, kvecs, omegas)
def test_green_inverts_wave_operator(model, kvec, w):
    G = green_tensor(model, kvec, w)
    L = wave_operator(model, kvec, w)
    residual = L @ G + np.eye(3)
    assert np.max(np.abs(residual)) < 1e-10 * max(1.0, np.linalg.cond(L))


@given(materials, kvecs, omegas)
def test_green_identity(model, kvec, w):
    assert verify_grel(model, kvec, w) < 1e-12


@given(materials, kvecs, omegas)
def test_green_is_symmetric(model, kvec, w):
    G = green_tensor(model, kvec, w)
    np.testing.assert_allclose(G, G.T, rtol=0, atol=1e-14 * np.max(np.abs(G)))


def test_direction_at_origin():
    k, khat = direction([0.0, 0.0, 0.0])
    assert k == 0.0 and np.array_equal(khat, [0.0, 0.0, 1.0])


def test_green_at_k_zero_is_isotropic(drude):
    G = green_tensor(drude, [0.0, 0.0, 0.0], 1.3)
    np.testing.assert_allclose(G, G[0, 0] * np.eye(3), rtol=1e-14)


def test_lossless_pole_rejected(vacuum):
    with pytest.raises(DegeneratePointError):
        green_components(vacuum, 1.0, 1.0)


def test_solve_field_satisfies_wave_equation(drude, rng):
    kvec = rng.normal(size=3)
    j = rng.normal(size=3) + 1j * rng.normal(size=3)
    E = solve_E_from_current(drude, kvec, 0.8, j)
    np.testing.assert_allclose(wave_operator(drude, kvec, 0.8) @ E, -1j * 0.8 * j, rtol=1e-12)


def test_im_green_scalars_vectorised(drude):
    ks = np.array([0.0, 0.5, 2.0, 40.0])
    im_perp, im_par = im_green_scalars(drude, ks, 1.0)
    for k, a, b in zip(ks, im_perp, im_par):
        gc = green_components(drude, k, 1.0)
        assert a == pytest.approx(gc.g_perp.imag, rel=1e-14)
        assert b == pytest.approx(gc.g_par.imag, rel=1e-14)


def test_local_longitudinal_prefactor(local_drude):
    eps = eval_permittivity(local_drude, 0.0, 0.9).par
    gc = green_components(local_drude, 17.0, 0.9)
    # k-independent: the coincidence integral of this weight times k^2 diverges
    assert local_longitudinal_im_green_prefactor(eps, 0.9) == pytest.approx(gc.g_par.imag, rel=1e-14)
    with pytest.raises(ValueError):
        local_longitudinal_im_green_prefactor(1.0 + 0j, 0.9)
