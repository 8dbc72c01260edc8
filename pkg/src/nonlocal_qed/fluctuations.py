"""Noise sources, reservoir response and the diagonalizing coefficients.

Everything here is a c-number: spectral weights of the noise charge and
current, the driven-oscillator solution for the reservoir, and the
bi-tensors that expand the fields in the polariton basis.

Normalization.  Covariances are stored per unit ``delta(omega - omega')
delta^3(k - k')``.  With the Fourier convention used for the creation
operators, ``[C(k, w), C^dagger(k', w')] = (2 pi)^3 delta delta``, and the
current operator carries a further factor ``2 pi`` from ``zeta``, so the
full commutator is ``CONVENTION_FACTOR = (2 pi)^5`` times the stored
weight.  Thermal correlations are the stored weight times ``N(omega)``.

Delta terms in frequency integrals are always collapsed analytically and
only the principal-value remainder goes through quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePointError
from .green import direction, green_components
from .material import (
    PermittivityModel,
    _kk_breakpoints,
    coupling_tensor_k,
    coupling_tensor_stack,
    eval_permittivity,
    permittivity_tensor,
    projectors,
)
from .quadrature import QuadratureConfig, integrate_principal_value
from .units import EPS0, HBAR, MU0

__all__ = [
    "CONVENTION_FACTOR",
    "NoiseCovariance",
    "ReservoirResponse",
    "Reconstruction",
    "DiagCoefficients",
    "zeta",
    "noise_covariance",
    "charge_conservation_check",
    "reservoir_response",
    "susceptibility_reconstruction",
    "diag_coefficients",
    "fE_consistency_check",
]

CONVENTION_FACTOR = (2 * math.pi) ** 5


@dataclass(frozen=True)
class NoiseCovariance:
    """Spectral weights of the noise charge and current at one ``(k, omega)``.

    ``sigma_sigma`` and ``j_j`` are commutator weights; multiply by
    ``thermal_N`` for the thermal correlation and by
    :data:`CONVENTION_FACTOR` for the full delta-normalized commutator.
    ``identity_residual`` is the max deviation between the weights built
    from ``F`` and the direct ``Im eps`` formulas.
    """

    sigma_sigma: float
    j_j: np.ndarray
    k: np.ndarray
    omega: float
    thermal_N: float
    identity_residual: float = 0.0

    @property
    def thermal_sigma_sigma(self) -> float:
        return self.thermal_N * self.sigma_sigma

    @property
    def thermal_j_j(self) -> np.ndarray:
        return self.thermal_N * self.j_j


@dataclass(frozen=True)
class ReservoirResponse:
    """Oscillator amplitude ``X_omega(k, omega')`` split into its parts.

    ``regular`` is the principal-value term ``F . E / (omega^2 - omega'^2)``.
    ``delta_plus`` multiplies ``delta(omega - omega')`` and ``delta_minus``
    multiplies ``delta(omega + omega')``.
    """

    regular: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    omega: float
    omega_drive: float


@dataclass(frozen=True)
class Reconstruction:
    """Outcome of a frequency-integral identity check.

    ``residual`` is ``computed - expected``; ``relative_residual`` is its
    max-norm over the size of the expected terms.
    """

    computed: np.ndarray
    expected: np.ndarray
    residual: np.ndarray
    relative_residual: float
    error_estimate: float
    converged: bool


@dataclass(frozen=True)
class DiagCoefficients:
    """Polariton expansion coefficients at ``(k, omega)``.

    ``f_X`` depends on a second frequency; :meth:`f_X_regular` gives its
    principal-value part and ``f_X_delta`` the weight of
    ``delta(omega' - omega)``.  The corresponding weight in ``f_PiX`` is
    ``f_PiX_delta``.
    """

    f_E: np.ndarray
    f_A: np.ndarray
    f_PiA: np.ndarray
    f_X_delta: np.ndarray
    f_PiX_delta: np.ndarray
    k: np.ndarray
    omega: float
    model: PermittivityModel

    def f_X_regular(self, omega_prime: float) -> np.ndarray:
        """``F(k, omega') . f_E / (omega'^2 - omega^2)``, undefined at ``omega' = omega``."""
        if omega_prime == self.omega:
            raise DegeneratePointError("f_X regular part has a pole at omega' = omega")
        F = coupling_tensor_k(self.model, self.k, omega_prime)
        return F @ self.f_E / (omega_prime**2 - self.omega**2)


def zeta(omega: float) -> float:
    """Amplitude ``2 pi sqrt(hbar / 2 omega)`` linking reservoir data to ``C``."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    return 2 * math.pi * math.sqrt(HBAR / (2 * omega))


def _check_vector(v, name: str, dtype=float) -> np.ndarray:
    v = np.asarray(v, dtype=dtype)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


def noise_covariance(model: PermittivityModel, kvec, omega: float, N: float = 0.0) -> NoiseCovariance:
    """Charge and current weights built from the coupling tensor.

    ``j_j = (hbar omega / 2) F . F`` and
    ``sigma_sigma = (hbar / 2 omega) |k . F|^2``; both are compared with
    ``(hbar eps0 omega^2 / pi) Im eps`` and ``(hbar eps0 k^2 / pi) Im eps_par``.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if not N >= 0:
        raise ValueError("occupation N must be >= 0")
    kvec = _check_vector(kvec, "kvec")
    F = coupling_tensor_k(model, kvec, omega)
    j_j = 0.5 * HBAR * omega * (F @ F)
    kF = kvec @ F
    sigma_sigma = float(HBAR / (2 * omega) * (kF @ kF))

    k, khat = direction(kvec)
    pair = eval_permittivity(model, k, omega)
    direct_j = HBAR * EPS0 * omega**2 / math.pi * permittivity_tensor(pair, khat).imag
    direct_s = HBAR * EPS0 * k * k / math.pi * pair.par.imag
    scale = max(float(np.max(np.abs(direct_j))), abs(direct_s), 1e-300)
    residual = max(float(np.max(np.abs(j_j - direct_j))), abs(sigma_sigma - direct_s)) / scale
    return NoiseCovariance(sigma_sigma, j_j, kvec, float(omega), float(N), residual)


def charge_conservation_check(model: PermittivityModel, kvec, omega: float, Z) -> float:
    """``|k . j - omega sigma|`` for the noise sources generated by ``Z``.

    ``sigma = -i k . F . Z`` and ``j = -i omega F . Z`` are formed
    independently, so the residual is pure round-off.
    """
    kvec = _check_vector(kvec, "kvec")
    Z = _check_vector(Z, "Z", complex)
    F = coupling_tensor_k(model, kvec, omega)
    sigma = -1j * ((kvec @ F) @ Z)
    j = -1j * omega * (F @ Z)
    return float(abs(kvec @ j - omega * sigma))


def reservoir_response(model: PermittivityModel, kvec, omega_reservoir: float, omega_drive: float,
                       E, Z) -> ReservoirResponse:
    """Driven-oscillator solution for the reservoir at one oscillator frequency.

    The retarded prescription splits ``1/(omega^2 - (omega' + i0)^2)`` into
    a principal value plus ``(i pi / 2 omega)[delta(omega - omega') -
    delta(omega + omega')]``; the delta weights are returned, not sampled.
    """
    if not omega_reservoir > 0 or not omega_drive > 0:
        raise ValueError("frequencies must be positive")
    if omega_reservoir == omega_drive:
        raise DegeneratePointError("regular part has a pole at omega = omega'")
    kvec = _check_vector(kvec, "kvec")
    E = _check_vector(E, "E", complex)
    Z = _check_vector(Z, "Z", complex)
    FE = coupling_tensor_k(model, kvec, omega_reservoir) @ E
    half = 1j * math.pi / (2 * omega_reservoir)
    regular = FE / (omega_reservoir**2 - omega_drive**2)
    return ReservoirResponse(regular, half * FE + Z, -half * FE + np.conj(Z), float(omega_reservoir),
                             float(omega_drive))


def _pv_scale(model, k, omega):
    return max(omega, getattr(model, "gamma", 1.0), getattr(model, "beta", 0.0) * k)


def _frequency_integral(model, kvec, pole, vector, quad):
    """``PV int_0^inf F(w) . F(w) . vector / (w^2 - pole^2) dw`` (vector may be a tensor)."""
    k = float(np.linalg.norm(kvec))

    def f(w):
        F = coupling_tensor_stack(model, kvec, w)
        return np.einsum("nij,njk,k...->ni...", F, F, vector)

    return integrate_principal_value(f, pole, quad, scale=_pv_scale(model, k, pole),
                                     points=_kk_breakpoints(model, k))


def _relative(diff, scale) -> float:
    size = float(np.max(np.abs(diff)))
    return size / scale if scale > 0 else size


def susceptibility_reconstruction(model: PermittivityModel, kvec, omega_drive: float, E,
                                  quad: QuadratureConfig | None = None) -> Reconstruction:
    """``int_0^inf dw F(w) . X_w(omega')`` for a source-free reservoir.

    The principal-value part is integrated numerically; the
    ``delta(w - omega')`` term contributes ``(i pi / 2 omega') F . F . E``.
    The expected value is ``eps0 (eps(k, omega') - 1) . E``.
    """
    if not omega_drive > 0:
        raise ValueError("omega_drive must be positive")
    kvec = _check_vector(kvec, "kvec")
    E = _check_vector(E, "E", complex)
    k, khat = direction(kvec)
    eps = permittivity_tensor(eval_permittivity(model, k, omega_drive), khat)
    expected = EPS0 * (eps - np.eye(3)) @ E
    if getattr(model, "A", None) == 0:
        zero = np.zeros(3, dtype=complex)
        return Reconstruction(zero, expected, zero - expected, 0.0, 0.0, True)

    res = _frequency_integral(model, kvec, omega_drive, E, quad)
    F = coupling_tensor_k(model, kvec, omega_drive)
    computed = np.asarray(res.value) + 1j * math.pi / (2 * omega_drive) * (F @ F @ E)
    residual = computed - expected
    scale = EPS0 * float(np.max(np.abs(eps - np.eye(3)))) * float(np.max(np.abs(E)))
    return Reconstruction(computed, expected, residual, _relative(residual, scale),
                          float(res.error_estimate), res.converged)


def diag_coefficients(model: PermittivityModel, kvec, omega: float) -> DiagCoefficients:
    """``f_E = mu0 omega sqrt(hbar omega / 2) G . F`` and the coefficients built on it."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    kvec = _check_vector(kvec, "kvec")
    k, khat = direction(kvec)
    G = green_components(model, k, omega).tensor(khat)
    F = coupling_tensor_k(model, kvec, omega)
    eps = permittivity_tensor(eval_permittivity(model, k, omega), khat)
    f_E = MU0 * omega * math.sqrt(HBAR * omega / 2) * (G @ F)
    transverse, _ = projectors(khat)
    f_A = -1j / omega * (transverse @ f_E)
    f_PiA = -EPS0 * (eps @ f_E) - math.sqrt(HBAR / (2 * omega)) * F
    f_PiX_delta = -1j * math.sqrt(HBAR * omega / 2) * np.eye(3)
    f_X_delta = 1j * math.pi / (2 * omega) * (F @ f_E) + 1j / omega * f_PiX_delta
    return DiagCoefficients(f_E, f_A, f_PiA, f_X_delta, f_PiX_delta, kvec, float(omega), model)


def fE_consistency_check(model: PermittivityModel, kvec, omega: float,
                         quad: QuadratureConfig | None = None) -> Reconstruction:
    """Rebuild ``f_E`` from ``f_PiA`` and the reservoir coefficients.

    ``-(1/eps0) f_PiA - (1/eps0) int dw' F(w') . f_X(w', omega)``, with the
    principal-value part of ``f_X`` quadratured and its delta weight added
    in closed form, must return ``f_E``.
    """
    coeffs = diag_coefficients(model, kvec, omega)
    expected = coeffs.f_E
    if getattr(model, "A", None) == 0:
        computed = -coeffs.f_PiA / EPS0
        residual = computed - expected
        return Reconstruction(computed, expected, residual, float(np.max(np.abs(residual))), 0.0, True)

    res = _frequency_integral(model, coeffs.k, omega, coeffs.f_E, quad)
    F = coupling_tensor_k(model, coeffs.k, omega)
    reservoir = np.asarray(res.value) + F @ coeffs.f_X_delta
    computed = -(coeffs.f_PiA + reservoir) / EPS0
    residual = computed - expected
    scale = float(np.max(np.abs(expected)))
    return Reconstruction(computed, expected, residual, _relative(residual, scale),
                          float(res.error_estimate) / EPS0, res.converged)
