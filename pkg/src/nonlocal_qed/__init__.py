"""Electromagnetic field fluctuations in a spatially dispersive (hydrodynamic Drude) medium."""

__version__ = "0.1.0"

from .config import MaterialConfigError, load_material, parse_material
from .errors import DegeneratePointError, DivergenceError, NearSingularError, PassivityError
from .fluctuations import (
    DiagCoefficients,
    NoiseCovariance,
    charge_conservation_check,
    diag_coefficients,
    fE_consistency_check,
    noise_covariance,
    reservoir_response,
    susceptibility_reconstruction,
    zeta,
)
from .green import GreenComponents, green_components, green_tensor, solve_E_from_current, verify_grel
from .material import (
    DrudeHydrodynamic,
    MaterialModel,
    PermittivityPair,
    coupling_amplitudes,
    coupling_tensor_k,
    eval_permittivity,
    equivalent_scalars,
    kk_reconstruct_real,
    permittivity_tensor,
)
from .quadrature import (
    DivergenceDiagnosis,
    IntegralResult,
    QuadratureConfig,
    integrate_principal_value,
    integrate_semi_infinite,
)
from .spectra import (
    SpectrumPoint,
    ThermalConfig,
    b_field_spectral_density,
    emission_decomposition,
    field_intensity_spectrum,
    im_green_coincidence_closed,
    im_green_coincidence_quadrature,
    intensity_via_noise_current,
    local_limit_scan,
    spectrum_point,
    thermal_total_intensity,
)
