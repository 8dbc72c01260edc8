"""k-space Green bi-tensor of the nonlocal medium.

The wave operator acting on ``E(k, omega)`` is::

    (omega^2/c^2 eps_perp - k^2) P_T + (omega^2/c^2) eps_par P_L

and its inverse, with an overall minus sign, is the Green bi-tensor
``G = g_perp P_T + g_par P_L`` with ``g_perp = -1/(omega^2 eps_perp/c^2 - k^2)``
and ``g_par = -c^2/(omega^2 eps_par)``.  The longitudinal part is stored
against the unit projector, so nothing is singular at ``k = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePointError, NearSingularError
from .material import PermittivityModel, eval_permittivity, permittivity_tensor, projectors
from .units import C, MU0

__all__ = [
    "GreenComponents",
    "green_components",
    "green_tensor",
    "wave_operator",
    "verify_grel",
    "solve_E_from_current",
    "local_longitudinal_im_green_prefactor",
    "vacuum_pole",
    "im_green_scalars",
    "direction",
]

NEAR_SINGULAR = 1e-14


@dataclass(frozen=True)
class GreenComponents:
    g_perp: complex
    g_par: complex
    k: float
    omega: float

    def tensor(self, khat) -> np.ndarray:
        transverse, longitudinal = projectors(khat)
        return self.g_perp * transverse + self.g_par * longitudinal


def vacuum_pole(omega: float) -> float:
    """Location ``k = omega / c`` of the lossless transverse pole."""
    return omega / C


def direction(kvec) -> tuple[float, np.ndarray]:
    """``(|k|, khat)``; at ``k = 0`` any unit vector will do, ``z`` is used."""
    kvec = np.asarray(kvec, dtype=float)
    k = float(np.linalg.norm(kvec))
    if k == 0:
        return 0.0, np.array([0.0, 0.0, 1.0])
    return k, kvec / k


def green_components(model: PermittivityModel, k: float, omega: float) -> GreenComponents:
    if not omega > 0:
        raise ValueError("Green components need omega > 0")
    pair = eval_permittivity(model, k, omega)
    if abs(pair.par) < NEAR_SINGULAR:
        raise NearSingularError(f"|eps_par| < {NEAR_SINGULAR} at k={k!r}, omega={omega!r}")
    w2 = (omega / C) ** 2
    transverse_denominator = w2 * pair.perp - k * k
    if transverse_denominator == 0:
        raise DegeneratePointError(
            f"k={k!r} sits on the lossless transverse pole k = omega/c = {vacuum_pole(omega)!r}")
    return GreenComponents(-1.0 / transverse_denominator, -1.0 / (w2 * pair.par), float(k), float(omega))


def green_tensor(model: PermittivityModel, kvec, omega: float) -> np.ndarray:
    k, khat = direction(kvec)
    return green_components(model, k, omega).tensor(khat)


def wave_operator(model: PermittivityModel, kvec, omega: float) -> np.ndarray:
    """Matrix multiplying ``E`` on the left of the inhomogeneous wave equation."""
    k, khat = direction(kvec)
    pair = eval_permittivity(model, k, omega)
    w2 = (omega / C) ** 2
    transverse, longitudinal = projectors(khat)
    return (w2 * pair.perp - k * k) * transverse + w2 * pair.par * longitudinal


def verify_grel(model: PermittivityModel, kvec, omega: float) -> float:
    """Max-norm residual of ``(omega^2/c^2) G* . Im eps . G = Im G``.

    The residual is divided by the size of the terms being compared,
    ``max(1, max|Im G|, (omega/c)^2 max|G|^2 max|Im eps|)``: absolute for
    order-one entries, relative where the tensor products are large (low
    frequencies, near poles, large k where projector round-off dominates).
    """
    k, khat = direction(kvec)
    G = green_components(model, k, omega).tensor(khat)
    eps = permittivity_tensor(eval_permittivity(model, k, omega), khat)
    lhs = (omega / C) ** 2 * np.conj(G) @ eps.imag @ G
    scale = max(1.0, float(np.max(np.abs(G.imag))),
                (omega / C) ** 2 * float(np.max(np.abs(G))) ** 2 * float(np.max(np.abs(eps.imag))))
    return float(np.max(np.abs(lhs - G.imag))) / scale


def solve_E_from_current(model: PermittivityModel, kvec, omega: float, j) -> np.ndarray:
    """Field radiated by the current ``j``: ``E = i mu0 omega G . j``."""
    j = np.asarray(j, dtype=complex)
    return 1j * MU0 * omega * (green_tensor(model, kvec, omega) @ j)


def local_longitudinal_im_green_prefactor(eps_local: complex, omega: float) -> float:
    """Weight ``c^2 Im eps / (omega^2 |eps|^2)`` of the longitudinal delta in a local medium."""
    if not eps_local.imag > 0:
        raise ValueError("needs Im eps > 0")
    return C * C * eps_local.imag / (omega * omega * abs(eps_local) ** 2)


def im_green_scalars(model: PermittivityModel, k, omega: float):
    """``(Im g_perp, Im g_par)`` for an array of ``k`` at one frequency."""
    k = np.asarray(k, dtype=float)
    w2 = (omega / C) ** 2
    im_perp = np.imag(-1.0 / (w2 * model.eps_perp(k, omega) - k * k))
    im_par = np.imag(-1.0 / (w2 * model.eps_par(k, omega)))
    return im_perp, im_par
