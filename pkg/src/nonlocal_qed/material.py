"""Nonlocal permittivity models and the reservoir coupling they imply.

The medium is isotropic with a centre of symmetry, so its response is fixed
by two scalar functions of ``(k, omega)``: the transverse permittivity
``eps_perp`` and the longitudinal permittivity ``eps_par``.  The only
first-class model is the hydrodynamic Drude form::

    eps_perp(omega)   = 1 - A / (omega (omega + i gamma))
    eps_par(k, omega) = 1 - A / (omega (omega + i gamma) - beta^2 k^2)

Functions here are scalar-in, dataclass-out; the ``_stack`` helpers are the
array versions used inside integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import DegeneratePointError, NearSingularError, PassivityError
from .quadrature import IntegralResult, QuadratureConfig, integrate_principal_value
from .units import C, EPS0

__all__ = [
    "PermittivityModel",
    "DrudeHydrodynamic",
    "MaterialModel",
    "PermittivityPair",
    "CouplingAmplitudes",
    "EquivalentScalars",
    "eval_permittivity",
    "permittivity_tensor",
    "equivalent_scalars",
    "im_mu_sign_grid",
    "coupling_amplitudes",
    "coupling_tensor_k",
    "coupling_tensor_stack",
    "coupling_eigenvalues",
    "kk_reconstruct_real",
    "projectors",
]

PASSIVITY_FLOOR = 1e-300
UNIT_TOL = 1e-12


@runtime_checkable
class PermittivityModel(Protocol):
    """Interface a tabulated or fitted model would implement.

    Both methods take ``omega > 0`` (scalars or arrays) and return complex
    values.  Only :class:`DrudeHydrodynamic` ships with the package.
    """

    label: str

    def eps_perp(self, k, omega): ...

    def eps_par(self, k, omega): ...


@dataclass(frozen=True)
class DrudeHydrodynamic:
    """Hydrodynamic Drude medium in reduced units.

    ``A`` is a squared angular frequency (the squared plasma frequency),
    ``gamma`` the damping rate and ``beta`` the pressure velocity.
    ``beta = 0`` is the local limit.
    """

    A: float
    gamma: float
    beta: float
    label: str = ""

    def __post_init__(self):
        for name in ("A", "gamma", "beta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite real number, got {value!r}")
        if self.A < 0:
            raise ValueError(f"A must be >= 0, got {self.A!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta!r}")

    @property
    def is_vacuum(self) -> bool:
        return self.A == 0

    @property
    def is_local(self) -> bool:
        return self.beta == 0

    def local_counterpart(self) -> "DrudeHydrodynamic":
        return replace(self, beta=0.0, label=f"{self.label} (local)" if self.label else "local")

    def eps_perp(self, k, omega):
        omega = np.asarray(omega, dtype=float)
        k = np.asarray(k, dtype=float)
        return np.broadcast_to(1.0 - self.A / (omega * (omega + 1j * self.gamma)),
                               np.broadcast_shapes(k.shape, omega.shape)).copy()

    def eps_par(self, k, omega):
        omega = np.asarray(omega, dtype=float)
        k = np.asarray(k, dtype=float)
        return 1.0 - self.A / (omega * (omega + 1j * self.gamma) - (self.beta * k) ** 2)

    def im_perp(self, k, omega):
        omega = np.asarray(omega, dtype=float)
        k = np.asarray(k, dtype=float)
        value = self.A * self.gamma / (omega * (omega * omega + self.gamma**2))
        return np.broadcast_to(value, np.broadcast_shapes(k.shape, omega.shape)).copy()

    def im_par(self, k, omega):
        omega = np.asarray(omega, dtype=float)
        s = (self.beta * np.asarray(k, dtype=float)) ** 2
        return self.A * omega * self.gamma / ((omega * omega - s) ** 2 + (omega * self.gamma) ** 2)

    def im_par_minus_perp_over_k2(self, k, omega):
        """``(Im eps_par - Im eps_perp) / k^2`` without cancellation; finite at k = 0."""
        omega = np.asarray(omega, dtype=float)
        s = (self.beta * np.asarray(k, dtype=float)) ** 2
        p_par = (omega * omega - s) ** 2 + (omega * self.gamma) ** 2
        p_perp = omega**4 + (omega * self.gamma) ** 2
        return self.A * omega * self.gamma * self.beta**2 * (2 * omega * omega - s) / (p_par * p_perp)

    def as_dict(self) -> dict:
        return {"label": self.label, "model": "drude_hydrodynamic", "A": self.A, "gamma": self.gamma,
                "beta": self.beta}


MaterialModel = DrudeHydrodynamic


@dataclass(frozen=True)
class PermittivityPair:
    perp: complex
    par: complex
    k: float
    omega: float


@dataclass(frozen=True)
class CouplingAmplitudes:
    alpha1: float
    alpha2: float
    k: float
    omega: float


@dataclass(frozen=True)
class EquivalentScalars:
    eps: complex
    mu: complex
    k: float
    omega: float


def _check_k(k):
    if not k >= 0:
        raise ValueError(f"k must be >= 0, got {k!r}")


def eval_permittivity(model: PermittivityModel, k: float, omega: float) -> PermittivityPair:
    """Transverse and longitudinal permittivity at ``(k, omega)``.

    Negative frequencies use the reality condition
    ``eps(k, -omega) = conj(eps(k, omega))``.
    """
    _check_k(k)
    if omega == 0:
        raise ValueError("omega = 0 is a singular point of the model")
    w = abs(omega)
    perp = complex(model.eps_perp(k, w))
    par = complex(model.eps_par(k, w))
    if omega < 0:
        perp, par = perp.conjugate(), par.conjugate()
    return PermittivityPair(perp, par, float(k), float(omega))


def projectors(khat):
    """Transverse and longitudinal projectors for a unit vector."""
    khat = np.asarray(khat, dtype=float)
    long = np.outer(khat, khat)
    return np.eye(3) - long, long


def _unit(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (3,):
        raise ValueError("expected a 3-vector")
    if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
        raise ValueError(f"direction must be a unit vector, |khat| = {np.linalg.norm(vec)!r}")
    return vec


def permittivity_tensor(pair: PermittivityPair, khat) -> np.ndarray:
    """``perp (1 - khat khat) + par khat khat`` as a complex 3x3 array."""
    khat = _unit(khat)
    if pair.k == 0 and pair.perp != pair.par:
        raise ValueError("direction of k is undefined at k = 0 but perp != par")
    transverse, longitudinal = projectors(khat)
    return pair.perp * transverse + pair.par * longitudinal


def equivalent_scalars(model: PermittivityModel, k: float, omega: float,
                       *, degenerate_tol: float = 1e-12) -> EquivalentScalars:
    """Scalar ``(eps, mu)`` giving the same Maxwell equations as the tensor form.

    ``eps = eps_par`` and ``1 - 1/mu = (omega^2 / c^2 k^2)(eps_perp - eps_par)``.
    No sign is imposed on ``Im mu``; a dissipative medium can have either.
    """
    if not k > 0:
        raise ValueError("equivalent scalars need k > 0")
    if not omega > 0:
        raise ValueError("equivalent scalars need omega > 0")
    pair = eval_permittivity(model, k, omega)
    rhs = (omega * omega / (C * C * k * k)) * (pair.perp - pair.par)
    denom = 1.0 - rhs
    if abs(denom) <= degenerate_tol * max(1.0, abs(rhs)):
        raise DegeneratePointError(f"mu has a pole at k={k!r}, omega={omega!r}")
    return EquivalentScalars(pair.par, 1.0 / denom, float(k), float(omega))


def im_mu_sign_grid(model: PermittivityModel, ks, omegas) -> np.ndarray:
    """Sign of ``Im mu`` on a ``len(ks) x len(omegas)`` grid (0 marks a pole)."""
    signs = np.zeros((len(ks), len(omegas)), dtype=int)
    for i, k in enumerate(ks):
        for j, w in enumerate(omegas):
            try:
                signs[i, j] = int(np.sign(equivalent_scalars(model, k, w).mu.imag))
            except DegeneratePointError:
                signs[i, j] = 0
    return signs


def _im_parts(model, k, omega):
    if hasattr(model, "im_perp"):
        return model.im_perp(k, omega), model.im_par(k, omega)
    return np.imag(model.eps_perp(k, omega)), np.imag(model.eps_par(k, omega))


def _amplitudes(model, k, omega):
    """Vectorised ``(alpha1, alpha2)``; arrays broadcast over k and omega."""
    im_perp, im_par = _im_parts(model, k, omega)
    if np.any(im_perp < 0) or np.any(im_par < 0):
        raise PassivityError("negative Im eps: coupling amplitudes need a passive medium")
    root = np.sqrt(2.0 * EPS0 * np.asarray(omega, dtype=float) / math.pi)
    alpha1 = root * np.sqrt(im_perp)
    s_perp, s_par = np.sqrt(im_perp), np.sqrt(im_par)
    denom = s_par + s_perp
    if hasattr(model, "im_par_minus_perp_over_k2"):
        diff = model.im_par_minus_perp_over_k2(k, omega)
        with np.errstate(invalid="ignore", divide="ignore"):
            alpha2 = np.where(denom > 0, root * diff / np.where(denom > 0, denom, 1.0), 0.0)
    else:
        k = np.asarray(k, dtype=float)
        if np.any(k == 0):
            raise DegeneratePointError("alpha2 at k = 0 needs an analytic limit from the model")
        alpha2 = root * (s_par - s_perp) / (k * k)
    return alpha1, alpha2


def coupling_eigenvalues(model: PermittivityModel, k, omega):
    """Eigenvalues ``(f_T, f_L)`` of ``F`` on the transverse and longitudinal subspaces.

    ``f_L = alpha1 + alpha2 k^2`` is evaluated directly as
    ``sqrt(2 eps0 omega Im eps_par / pi)``; the sum form cancels badly at
    large ``k`` where ``f_L`` is tiny next to ``alpha1``.
    """
    im_perp, im_par = _im_parts(model, k, omega)
    if np.any(im_perp < 0) or np.any(im_par < 0):
        raise PassivityError("negative Im eps: coupling amplitudes need a passive medium")
    root = np.sqrt(2.0 * EPS0 * np.asarray(omega, dtype=float) / math.pi)
    return root * np.sqrt(im_perp), root * np.sqrt(im_par)


def coupling_amplitudes(model: PermittivityModel, k: float, omega: float) -> CouplingAmplitudes:
    """``alpha1 = sqrt(2 eps0 omega Im eps_perp / pi)`` and the longitudinal correction.

    ``alpha2`` is written as ``(Im eps_par - Im eps_perp) / k^2`` divided by
    the sum of square roots, which is exact and stays finite at ``k = 0``.
    """
    _check_k(k)
    if not omega > 0:
        raise ValueError("coupling amplitudes need omega > 0")
    alpha1, alpha2 = _amplitudes(model, k, omega)
    return CouplingAmplitudes(float(alpha1), float(alpha2), float(k), float(omega))


def coupling_tensor_k(model: PermittivityModel, kvec, omega: float) -> np.ndarray:
    """k-space coupling tensor ``F = alpha1 * 1 + alpha2 * k k`` (real symmetric)."""
    if not omega > 0:
        raise ValueError("coupling tensor needs omega > 0")
    kvec = np.asarray(kvec, dtype=float)
    amp = coupling_amplitudes(model, float(np.linalg.norm(kvec)), omega)
    return amp.alpha1 * np.eye(3) + amp.alpha2 * np.outer(kvec, kvec)


def coupling_tensor_stack(model: PermittivityModel, kvec, omegas) -> np.ndarray:
    """``F(k, omega)`` for an array of frequencies, shape ``(n, 3, 3)``."""
    kvec = np.asarray(kvec, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    alpha1, alpha2 = _amplitudes(model, float(np.linalg.norm(kvec)), omegas)
    return (alpha1[:, None, None] * np.eye(3)
            + alpha2[:, None, None] * np.outer(kvec, kvec)[None, :, :])


def _kk_breakpoints(model, k):
    points = []
    gamma = getattr(model, "gamma", None)
    beta = getattr(model, "beta", 0.0)
    if gamma:
        points += list(gamma * np.geomspace(1e-3, 1e2, 11))
    if gamma and beta and k > 0:
        centre = beta * k
        points += [centre + sgn * gamma * 2.0**j for j in range(-6, 6) for sgn in (-1, 1)]
        points.append(centre)
    return [p for p in points if p > 0]


def kk_reconstruct_real(model: PermittivityModel, k: float, omega_prime: float, component: str = "perp",
                        quad: QuadratureConfig | None = None) -> IntegralResult:
    """``Re eps(k, omega') - 1`` from the imaginary part alone.

    Evaluates ``(2/pi) PV int_0^inf omega Im eps(k, omega) / (omega^2 - omega'^2)``.
    The returned result carries the quadrature error estimate and
    convergence flag.
    """
    _check_k(k)
    if not omega_prime > 0:
        raise ValueError("omega' must be positive")
    if component not in ("perp", "par"):
        raise ValueError(f"component must be 'perp' or 'par', got {component!r}")
    if getattr(model, "A", None) == 0:
        return IntegralResult(0.0, 0.0, 0, True)
    im = model.im_perp if component == "perp" else model.im_par

    def weight(w):
        return (2.0 / math.pi) * w * im(k, w)

    scale = max(omega_prime, getattr(model, "gamma", 1.0), getattr(model, "beta", 0.0) * k)
    return integrate_principal_value(weight, omega_prime, quad, scale=scale, points=_kk_breakpoints(model, k))


def _assert_passive(pair: PermittivityPair):
    if pair.omega > 0 and not (pair.perp.imag > PASSIVITY_FLOOR and pair.par.imag > PASSIVITY_FLOOR):
        raise PassivityError(f"medium not passive at k={pair.k!r}, omega={pair.omega!r}")


def check_passivity(model: PermittivityModel, ks, omegas) -> bool:
    """True if both imaginary parts are positive on the whole grid."""
    for k in ks:
        for w in omegas:
            try:
                _assert_passive(eval_permittivity(model, k, w))
            except PassivityError:
                return False
    return True


def longitudinal_guard(pair: PermittivityPair, floor: float = 1e-14):
    if abs(pair.par) < floor:
        raise NearSingularError(f"|eps_par| < {floor} at k={pair.k!r}, omega={pair.omega!r}")
