"""Fixed-frequency field intensity inside the medium.

The intensity at one frequency is

    c(r, r, omega) = (hbar mu0 / pi) omega^2 W(omega, T) lim_{r'->r} Im G(r - r', omega)

with ``W`` the thermal weight.  The coincidence limit is isotropic and is
kept as the scalar multiplying the identity, split into transverse and
longitudinal parts.  Each part is available two ways:

* closed form from the residue evaluation of the radial integrals,
* numerical radial quadrature of ``Im G(k)`` after the angular average
  (transverse projector averages to 2/3, longitudinal to 1/3).

Factor audit (reduced units, hbar = mu0 = eps0 = c = 1)::

    perp_part = int k^2 dk/(2 pi^2) (2/3) w^2 Im eps_perp / |w^2 eps_perp - k^2|^2
              = (omega / 6 pi c) Re sqrt(eps_perp)
    par_part  = int k^2 dk/(2 pi^2) (1/3) (c^2/omega^2) Im eps_par / |eps_par|^2
              = (c^2/omega^2) A / (12 pi beta^3) Re sqrt(omega^2 - A + i omega gamma)
    c_perp    = W omega^3 Re sqrt(eps_perp) / (6 pi^2)
    c_par     = W A Re sqrt(omega^2 - A + i omega gamma) / (12 pi^2 beta^3)

The longitudinal part diverges as ``beta -> 0``; there the library returns
a :class:`DivergenceDiagnosis` and never a number.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Sequence

import numpy as np

from .errors import DivergenceError
from .material import DrudeHydrodynamic, coupling_eigenvalues
from .green import im_green_scalars
from .quadrature import (
    DivergenceDiagnosis,
    IntegralResult,
    QuadratureConfig,
    THERMAL_MODES,
    diagnose_growth,
    integrate_omega_thermal,
    integrate_semi_infinite,
    planck_weight,
)
from .units import C, HBAR, KB, MU0

__all__ = [
    "ThermalConfig",
    "SpectrumPoint",
    "CoincidenceParts",
    "EmissionFactors",
    "BFieldDiagnosis",
    "LOCAL_DIVERGENCE",
    "planck_occupation",
    "im_green_coincidence_closed",
    "im_green_coincidence_quadrature",
    "field_intensity_spectrum",
    "spectrum_point",
    "emission_decomposition",
    "local_limit_scan",
    "thermal_total_intensity",
    "b_field_spectral_density",
    "intensity_via_noise_current",
]

LOCAL_DIVERGENCE = "DIVERGENT(longitudinal)"
METHODS = ("closed_form", "quadrature")

# Longitudinal integrand of the local theory grows like k^2, so partial
# integrals grow like the cube of the cutoff.
_LOCAL_EXPONENT = 3.0


@dataclass(frozen=True)
class ThermalConfig:
    T: float = 0.0
    mode: str = "full"

    def __post_init__(self):
        if not self.T >= 0:
            raise ValueError(f"temperature must be >= 0, got {self.T!r}")
        if self.mode not in THERMAL_MODES:
            raise ValueError(f"unknown weight mode {self.mode!r}; expected one of {THERMAL_MODES}")

    def weight(self, omega):
        return planck_weight(omega, self.T, self.mode)


@dataclass(frozen=True)
class CoincidenceParts:
    """Scalar coincidence limit of ``Im G`` split by polarization.

    ``par_part`` is ``None`` when the longitudinal integral diverges; the
    reason is in ``par_divergence``.
    """

    perp_part: float
    par_part: float | None
    perp_error: float = 0.0
    par_error: float = 0.0
    method: str = "closed_form"
    par_divergence: DivergenceDiagnosis | None = None
    converged: bool = True

    @property
    def total(self) -> float | None:
        return None if self.par_part is None else self.perp_part + self.par_part


@dataclass(frozen=True)
class SpectrumPoint:
    omega: float
    T: float
    weight_mode: str
    c_perp: float
    c_par: float | None
    c_total: float | None
    method: str
    error_estimate: float
    divergence: str | None = None
    converged: bool = True


@dataclass(frozen=True)
class EmissionFactors:
    transverse_rate_factor: float
    longitudinal_rate_factor: float | None
    weight: float


@dataclass(frozen=True)
class BFieldDiagnosis:
    partial_value: float
    k_max: float
    diagnosis: DivergenceDiagnosis


def planck_occupation(omega: float, T: float) -> float:
    """Mean occupation ``1 / (exp(hbar omega / k_B T) - 1)``; zero at ``T = 0``."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if T == 0:
        return 0.0
    x = HBAR * omega / (KB * T)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def _local_diagnosis() -> DivergenceDiagnosis:
    return DivergenceDiagnosis("power", _LOCAL_EXPONENT, "infinity")


def _closed_parts(model: DrudeHydrodynamic, omega):
    omega = np.asarray(omega, dtype=float)
    perp = (omega / (6 * math.pi * C)) * np.sqrt(model.eps_perp(0.0, omega)).real
    if model.beta == 0:
        return perp, None
    root = np.sqrt(omega * omega - model.A + 1j * omega * model.gamma).real
    par = (C * C / (omega * omega)) * model.A / (12 * math.pi * model.beta**3) * root
    return perp, par


def im_green_coincidence_closed(model: DrudeHydrodynamic, omega: float) -> CoincidenceParts:
    if not omega > 0:
        raise ValueError("omega must be positive")
    perp, par = _closed_parts(model, omega)
    if par is None:
        return CoincidenceParts(float(perp), None, par_divergence=_local_diagnosis())
    return CoincidenceParts(float(perp), float(par))


def _peak_points(centre: float, width: float) -> list[float]:
    """Breakpoints clustering geometrically onto a Lorentzian-like peak."""
    width = abs(width)
    reach = 4.0 * max(centre, width)
    points = [centre] if centre > 0 else []
    offset = width / 8.0
    while offset < reach:
        points += [centre - offset, centre + offset]
        offset *= 2.0
    return [p for p in points if p > 0]


def _transverse_peak(model, omega):
    root = (omega / C) * np.sqrt(complex(model.eps_perp(0.0, omega)))
    return float(root.real), float(abs(root.imag))


def _longitudinal_peak(model, omega):
    root = np.sqrt(omega * (omega + 1j * model.gamma) - model.A) / model.beta
    return float(root.real), float(abs(root.imag))


def _perp_integrand(model, omega):
    def f(k):
        im_perp, _ = im_green_scalars(model, k, omega)
        return k * k / (2 * math.pi**2) * (2.0 / 3.0) * im_perp
    return f


def _par_integrand(model, omega):
    def f(k):
        _, im_par = im_green_scalars(model, k, omega)
        return k * k / (2 * math.pi**2) * (1.0 / 3.0) * im_par
    return f


def im_green_coincidence_quadrature(model: DrudeHydrodynamic, omega: float,
                                    quad: QuadratureConfig | None = None) -> CoincidenceParts:
    """Radial quadrature of the angle-averaged ``Im G(k)``.

    Needs ``A > 0``: the lossless transverse pole is not integrated through.
    With ``beta = 0`` the longitudinal integral is probed at growing cutoffs
    and its growth law is returned instead of a value.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if model.A == 0:
        raise ValueError("quadrature route needs A > 0; the lossless pole at k = omega/c "
                         "is only handled by the closed form")
    quad = quad or QuadratureConfig()

    centre, width = _transverse_peak(model, omega)
    perp = integrate_semi_infinite(_perp_integrand(model, omega), quad, scale=max(centre, width),
                                   points=_peak_points(centre, width))
    if model.beta == 0:
        scale = max(centre, width, omega / C)
        diag = diagnose_growth(_par_integrand(model, omega), 0.0, scale * np.geomspace(10, 1e4, 4), quad)
        return CoincidenceParts(float(perp.value), None, perp.error_estimate, 0.0, "quadrature", diag,
                                perp.converged)
    centre_l, width_l = _longitudinal_peak(model, omega)
    par = integrate_semi_infinite(_par_integrand(model, omega), quad, scale=max(centre_l, width_l),
                                  points=_peak_points(centre_l, width_l))
    return CoincidenceParts(float(perp.value), float(par.value), perp.error_estimate, par.error_estimate,
                            "quadrature", None, perp.converged and par.converged)


def spectrum_point(model: DrudeHydrodynamic, omega: float, thermal: ThermalConfig,
                   quad: QuadratureConfig | None = None, method: str = "closed_form") -> SpectrumPoint:
    """One sample of ``c(r, r, omega)``.

    For the quadrature method ``error_estimate`` is the propagated quadrature
    error; for the closed form it is zero.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "closed_form":
        parts = im_green_coincidence_closed(model, omega)
    else:
        parts = im_green_coincidence_quadrature(model, omega, quad)
    pref = HBAR * MU0 / math.pi * omega * omega * float(thermal.weight(omega))
    c_perp = pref * parts.perp_part
    error = pref * (parts.perp_error + parts.par_error)
    if parts.par_part is None:
        return SpectrumPoint(omega, thermal.T, thermal.mode, c_perp, None, None, method, error, LOCAL_DIVERGENCE,
                             parts.converged)
    c_par = pref * parts.par_part
    return SpectrumPoint(omega, thermal.T, thermal.mode, c_perp, c_par, c_perp + c_par, method, error,
                         converged=parts.converged)


def field_intensity_spectrum(model: DrudeHydrodynamic, omega_grid: Sequence[float], thermal: ThermalConfig,
                             quad: QuadratureConfig | None = None, method: str = "closed_form",
                             workers: int = 1) -> list[SpectrumPoint]:
    """Spectrum over a strictly increasing, positive frequency grid.

    Points are independent; ``workers > 1`` evaluates them in separate
    processes and the output is identical to the serial result.
    """
    grid = [float(w) for w in omega_grid]
    if not grid:
        raise ValueError("empty frequency grid")
    if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("frequency grid must be positive and strictly increasing")
    task = partial(spectrum_point, model, thermal=thermal, quad=quad, method=method)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, grid))
    return [task(w) for w in grid]


def emission_decomposition(model: DrudeHydrodynamic, omega: float, T: float = 0.0) -> EmissionFactors:
    """The transverse and longitudinal terms of the closed-form intensity.

    ``transverse = omega^3 Re sqrt(eps_perp) / (6 pi c^3)`` and
    ``longitudinal = A Re sqrt(omega^2 - A + i omega gamma) / (12 pi beta^3)``;
    the thermal weight multiplying both is reported alongside.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    transverse = omega**3 * float(np.sqrt(complex(model.eps_perp(0.0, omega))).real) / (6 * math.pi * C**3)
    weight = float(planck_weight(omega, T, "full"))
    if model.beta == 0:
        return EmissionFactors(transverse, None, weight)
    root = float(np.sqrt(omega * omega - model.A + 1j * omega * model.gamma).real)
    return EmissionFactors(transverse, model.A * root / (12 * math.pi * model.beta**3), weight)


def local_limit_scan(model_base: DrudeHydrodynamic, betas: Sequence[float], omega: float) -> list[dict]:
    """Longitudinal factor along a decreasing sequence of ``beta``.

    Each row carries the factor multiplied by ``beta^3``, which is constant
    when the divergence follows the ``beta^-3`` law.
    """
    rows = []
    for beta in betas:
        if not beta > 0:
            raise ValueError("local limit scan needs beta > 0 at every step")
        factors = emission_decomposition(replace(model_base, beta=float(beta)), omega)
        rows.append({
            "beta": float(beta),
            "transverse": factors.transverse_rate_factor,
            "longitudinal": factors.longitudinal_rate_factor,
            "longitudinal_beta3": factors.longitudinal_rate_factor * beta**3,
        })
    return rows


def _resonance_points(model: DrudeHydrodynamic) -> list[float]:
    if model.A == 0:
        return []
    centre = math.sqrt(model.A)
    return _peak_points(centre, model.gamma)


def thermal_total_intensity(model: DrudeHydrodynamic, T: float, quad: QuadratureConfig | None = None,
                            mode: str = "thermal_only") -> IntegralResult:
    """Frequency integral of the intensity spectrum.

    Only the purely thermal part is finite.  Asking for the full or
    zero-point total raises :class:`DivergenceError` carrying the growth
    diagnosis of the integral; so does a local (``beta = 0``) medium.
    """
    if not T > 0 and mode == "thermal_only":
        if T == 0:
            return IntegralResult(0.0, 0.0, 0, True)
        raise ValueError("temperature must be >= 0")
    if model.beta == 0 and model.A > 0:
        raise DivergenceError("longitudinal intensity of a local medium is infinite at every frequency",
                              _local_diagnosis())

    def spectrum(w):
        perp, par = _closed_parts(model, w)
        return HBAR * MU0 / math.pi * w * w * (perp + (0.0 if par is None else par))

    res = integrate_omega_thermal(spectrum, T, mode, quad, points=_resonance_points(model),
                                  scale=max(math.sqrt(model.A), T, 1e-300))
    if mode != "thermal_only":
        diag = res.diagnosis or DivergenceDiagnosis("power", 4.0, "infinity")
        raise DivergenceError(f"{mode} total intensity diverges ({diag.describe()})", diag)
    return res


def b_field_spectral_density(model: DrudeHydrodynamic, omega: float, k_max: float,
                             quad: QuadratureConfig | None = None) -> BFieldDiagnosis:
    """Radial integral of ``k^4 Im g_perp`` up to ``k_max`` with its growth law.

    The transverse permittivity is local, so ``Im g_perp ~ k^-2`` and the
    magnetic coincidence limit grows linearly with the cutoff.  The growth
    class comes from partials at ``k_max / 8, / 4, / 2`` and ``k_max``.
    """
    if not omega > 0 or not k_max > 0:
        raise ValueError("omega and k_max must be positive")
    cutoffs = k_max * np.array([0.125, 0.25, 0.5, 1.0])
    if model.A == 0:
        zeros = (0.0,) * len(cutoffs)
        return BFieldDiagnosis(0.0, k_max, DivergenceDiagnosis("convergent", 0.0, "infinity",
                                                               tuple(float(c) for c in cutoffs), zeros))
    quad = quad or QuadratureConfig()
    w2 = (omega / C) ** 2

    def integrand(k):
        return k**4 * w2 * model.im_perp(k, omega) / np.abs(w2 * model.eps_perp(k, omega) - k * k) ** 2

    centre, width = _transverse_peak(model, omega)
    diag = diagnose_growth(integrand, 0.0, cutoffs, quad, points=_peak_points(centre, width))
    return BFieldDiagnosis(diag.partials[-1], k_max, diag)


def intensity_via_noise_current(model: DrudeHydrodynamic, omega: float, thermal: ThermalConfig,
                                quad: QuadratureConfig | None = None) -> SpectrumPoint:
    """``c(r, r, omega)`` assembled from the noise-current covariance.

    Here the field is ``E = i mu0 omega G . j`` and the current weight is
    ``(omega/2) F . F``, built from the coupling tensor.  The intensity is
    ``W int d^3k/(2pi)^3 mu0^2 omega^2 G J G^dagger``; no use is made of the
    ``Im G`` identity, so agreement with the direct route checks it.
    """
    if model.A == 0:
        raise ValueError("noise-current route needs A > 0")
    if model.beta == 0:
        raise DivergenceError("longitudinal noise intensity of a local medium diverges", _local_diagnosis())
    quad = quad or QuadratureConfig()
    w2 = (omega / C) ** 2

    def blocks(k):
        f_t, f_l = coupling_eigenvalues(model, k, omega)
        g_t = -1.0 / (w2 * model.eps_perp(k, omega) - k * k)
        g_l = -1.0 / (w2 * model.eps_par(k, omega))
        n = len(k)
        G = np.zeros((n, 3, 3), dtype=complex)
        G[:, 0, 0] = G[:, 1, 1] = g_t
        G[:, 2, 2] = g_l
        F = np.zeros((n, 3, 3))
        F[:, 0, 0] = F[:, 1, 1] = f_t
        F[:, 2, 2] = f_l
        J = 0.5 * omega * F @ F
        M = (MU0 * omega) ** 2 * G @ J @ np.conj(np.transpose(G, (0, 2, 1)))
        return M.real

    def perp_integrand(k):
        M = blocks(k)
        return k * k / (2 * math.pi**2) * (M[:, 0, 0] + M[:, 1, 1]) / 3.0

    def par_integrand(k):
        M = blocks(k)
        return k * k / (2 * math.pi**2) * M[:, 2, 2] / 3.0

    centre, width = _transverse_peak(model, omega)
    perp = integrate_semi_infinite(perp_integrand, quad, scale=max(centre, width),
                                   points=_peak_points(centre, width))
    centre_l, width_l = _longitudinal_peak(model, omega)
    par = integrate_semi_infinite(par_integrand, quad, scale=max(centre_l, width_l),
                                  points=_peak_points(centre_l, width_l))
    weight = float(thermal.weight(omega))
    c_perp = weight * float(perp.value)
    c_par = weight * float(par.value)
    return SpectrumPoint(omega, thermal.T, thermal.mode, c_perp, c_par, c_perp + c_par, "noise_current",
                         weight * (perp.error_estimate + par.error_estimate),
                         converged=perp.converged and par.converged)
