import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocal_qed.errors import DegeneratePointError
from nonlocal_qed.fluctuations import (
    CONVENTION_FACTOR,
    charge_conservation_check,
    diag_coefficients,
    fE_consistency_check,
    noise_covariance,
    reservoir_response,
    susceptibility_reconstruction,
    zeta,
)
from nonlocal_qed.green import green_tensor
from nonlocal_qed.material import DrudeHydrodynamic, coupling_tensor_k, eval_permittivity
from nonlocal_qed.units import MU0

materials = st.builds(DrudeHydrodynamic, st.floats(0.0, 2.0), st.floats(0.01, 1.0), st.floats(0.0, 1.0))
vectors = st.tuples(*[st.floats(-5, 5)] * 3).map(np.array)
complex_vectors = st.tuples(*[st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)] * 3
                            ).map(lambda v: np.array(v, dtype=complex))
omegas = st.floats(0.05, 5.0)


def test_covariance_reference(drude):
    cov = noise_covariance(drude, [0.0, 0.0, 2.0], 1.0, N=0.25)
    # (w^2/pi) Im eps and (k^2/pi) Im eps_par, mpmath at 30 digits
    assert cov.j_j[0, 0] == pytest.approx(0.015757915157613400, rel=1e-13)
    assert cov.j_j[1, 1] == pytest.approx(0.015757915157613400, rel=1e-13)
    assert cov.j_j[2, 2] == pytest.approx(0.037930158029527010, rel=1e-13)
    assert cov.sigma_sigma == pytest.approx(0.15172063211810804, rel=1e-13)
    assert cov.thermal_j_j[2, 2] == pytest.approx(0.25 * cov.j_j[2, 2])
    assert cov.thermal_sigma_sigma == pytest.approx(0.25 * cov.sigma_sigma)
    assert CONVENTION_FACTOR == pytest.approx((2 * math.pi) ** 5)


def test_vacuum_covariance_vanishes(vacuum):
    cov = noise_covariance(vacuum, [1.0, 2.0, 0.5], 1.0)
    assert cov.sigma_sigma == 0 and not cov.j_j.any()


def test_local_current_is_isotropic(local_drude):
    w = 0.7
    cov = noise_covariance(local_drude, [3.0, -1.0, 2.0], w)
    im = eval_permittivity(local_drude, 0.0, w).perp.imag
    np.testing.assert_allclose(cov.j_j, w * w / math.pi * im * np.eye(3), rtol=1e-13, atol=1e-17)
    # and independent of k
    other = noise_covariance(local_drude, [0.0, 0.1, 0.0], w)
    np.testing.assert_allclose(cov.j_j, other.j_j, rtol=1e-13, atol=1e-17)


@given(materials, vectors, omegas)
def test_covariance_matches_direct_formula(model, kvec, w):
    cov = noise_covariance(model, kvec, w)
    assert cov.identity_residual < 1e-12
    assert np.all(np.linalg.eigvalsh(cov.j_j) >= -1e-15)


def test_covariance_input_checks(drude):
    with pytest.raises(ValueError):
        noise_covariance(drude, [0, 0, 1.0], 0.0)
    with pytest.raises(ValueError):
        noise_covariance(drude, [0, 0, 1.0], 1.0, N=-1)
    with pytest.raises(ValueError):
        noise_covariance(drude, [0, 1.0], 1.0)


@given(materials, vectors, omegas, complex_vectors)
def test_charge_conservation(model, kvec, w, Z):
    residual = charge_conservation_check(model, kvec, w, Z)
    # max-abs norms: np.linalg.norm underflows for tiny vectors
    j = w * np.max(np.abs(coupling_tensor_k(model, kvec, w) @ Z))
    assert residual <= 1e-14 * np.max(np.abs(kvec)) * j + 1e-300


def test_charge_conservation_trivial_cases(drude):
    assert charge_conservation_check(drude, [1.0, 0, 0], 1.0, np.zeros(3)) == 0.0
    # isotropic coupling and Z transverse: no charge, no longitudinal current
    local = DrudeHydrodynamic(0.5, 0.1, 0.0)
    kvec = np.array([0.0, 0.0, 2.0])
    Z = np.array([1.0 + 1j, -2.0, 0.0])
    F = coupling_tensor_k(local, kvec, 1.0)
    assert kvec @ F @ Z == 0
    assert charge_conservation_check(local, kvec, 1.0, Z) == 0.0


def test_reservoir_response_parts(drude):
    kvec = np.array([0.0, 1.0, 1.0])
    E = np.array([1.0, 0.5j, -0.2])
    Z = np.array([0.1, 0.0, 0.3j])
    r = reservoir_response(drude, kvec, 0.7, 1.1, E, Z)
    FE = coupling_tensor_k(drude, kvec, 0.7) @ E
    np.testing.assert_allclose(r.regular, FE / (0.49 - 1.21), rtol=1e-15)
    np.testing.assert_allclose(r.delta_plus, 1j * math.pi / 1.4 * FE + Z, rtol=1e-15)
    np.testing.assert_allclose(r.delta_minus, -1j * math.pi / 1.4 * FE + np.conj(Z), rtol=1e-15)
    with pytest.raises(DegeneratePointError):
        reservoir_response(drude, kvec, 1.0, 1.0, E, Z)


def test_reservoir_response_trivial(drude, vacuum):
    zero = np.zeros(3)
    r = reservoir_response(drude, [1.0, 0, 0], 0.5, 1.0, zero, zero)
    assert not r.regular.any() and not r.delta_plus.any()
    Z = np.array([1.0, 2.0, 3.0j])
    r = reservoir_response(vacuum, [1.0, 0, 0], 0.5, 1.0, np.ones(3), Z)
    assert not r.regular.any()
    np.testing.assert_array_equal(r.delta_plus, Z)


@pytest.mark.parametrize("polarization", ["transverse", "longitudinal"])
@pytest.mark.parametrize("k,w", [(0.0, 0.6), (0.8, 0.3), (2.0, 1.0), (1.5, 2.7)])
def test_susceptibility_reconstruction(drude, polarization, k, w):
    kvec = np.array([0.0, 0.0, k])
    E = np.array([1.0, 0.0, 0.0]) if polarization == "transverse" else np.array([0.0, 0.0, 1.0])
    rec = susceptibility_reconstruction(drude, kvec, w, E)
    assert rec.converged
    assert rec.relative_residual < 1e-7
    pair = eval_permittivity(drude, k, w)
    expected = (pair.perp if polarization == "transverse" else pair.par) - 1
    assert rec.computed[0 if polarization == "transverse" else 2] == pytest.approx(expected, rel=1e-7)


def test_susceptibility_vacuum(vacuum):
    rec = susceptibility_reconstruction(vacuum, [0, 0, 1.0], 1.0, np.ones(3))
    assert rec.relative_residual == 0.0


def test_diag_coefficients_reference(drude):
    kvec = np.array([1.0, 1.0, 0.0]) / math.sqrt(2) * 2
    c = diag_coefficients(drude, kvec, 1.0)
    khat = kvec / 2
    # eigenvalues of f_E on the two subspaces, mpmath at 30 digits
    e_perp = np.array([0.0, 0.0, 1.0])
    assert e_perp @ c.f_E @ e_perp == pytest.approx(0.035909464157988226 + 0.00050863263679870008j, rel=1e-13)
    assert khat @ c.f_E @ khat == pytest.approx(-0.65532985465758692 + 0.32898085073172034j, rel=1e-13)
    G = green_tensor(drude, kvec, 1.0)
    F = coupling_tensor_k(drude, kvec, 1.0)
    np.testing.assert_allclose(c.f_E, MU0 * math.sqrt(0.5) * G @ F, rtol=1e-14, atol=1e-16)
    np.testing.assert_allclose(c.f_PiX_delta, -1j * math.sqrt(0.5) * np.eye(3))


@given(materials, vectors.filter(lambda v: np.linalg.norm(v) > 1e-6), omegas)
def test_f_A_is_transverse(model, kvec, w):
    try:
        c = diag_coefficients(model, kvec, w)
    except DegeneratePointError:
        return
    khat = kvec / np.linalg.norm(kvec)
    assert np.max(np.abs(khat @ c.f_A)) <= 1e-14 * max(1.0, np.max(np.abs(c.f_A)))
    assert np.max(np.abs(c.f_A @ khat - c.f_A @ khat)) == 0


def test_vacuum_coefficients(vacuum):
    c = diag_coefficients(vacuum, [0.0, 0.3, 0.0], 1.0)
    assert not c.f_E.any() and not c.f_PiA.any()
    assert fE_consistency_check(vacuum, [0.0, 0.3, 0.0], 1.0).relative_residual == 0.0


def test_f_X_regular(drude):
    c = diag_coefficients(drude, [0.0, 0.0, 1.0], 1.0)
    F = coupling_tensor_k(drude, [0.0, 0.0, 1.0], 0.4)
    np.testing.assert_allclose(c.f_X_regular(0.4), F @ c.f_E / (0.16 - 1.0))
    with pytest.raises(DegeneratePointError):
        c.f_X_regular(1.0)


@pytest.mark.parametrize("kvec,w", [([0.0, 0.0, 2.0], 1.0), ([0.3, -0.4, 1.2], 0.45), ([1.0, 1.0, 1.0], 2.2)])
def test_fE_consistency(drude, kvec, w):
    rec = fE_consistency_check(drude, kvec, w)
    assert rec.converged
    assert rec.relative_residual < 1e-7
    khat = np.asarray(kvec) / np.linalg.norm(kvec)
    # both projections separately
    assert abs(khat @ rec.residual @ khat) < 1e-7 * np.max(np.abs(rec.expected))
    e = np.cross(khat, [1.0, 0.0, 0.0])
    e /= np.linalg.norm(e)
    assert abs(e @ rec.residual @ e) < 1e-7 * np.max(np.abs(rec.expected))


def test_zeta_normalisation():
    # omega^2 zeta / (2 pi) must equal mu0 omega sqrt(hbar omega / 2), the f_E prefactor
    for w in (0.1, 1.0, 7.0):
        assert w * w * zeta(w) / (2 * math.pi) == pytest.approx(MU0 * w * math.sqrt(w / 2), rel=1e-15)
    with pytest.raises(ValueError):
        zeta(0.0)
