"""Reduced units and the SI conversion layer.

All computations run with hbar = c = eps0 = mu0 = k_B = 1.  That still
leaves one free scale; SI quantities are mapped onto reduced numbers with a
fixed reference angular frequency ``OMEGA_UNIT`` (rad/s), so lengths are in
units of ``c / OMEGA_UNIT`` and temperatures in units of
``hbar * OMEGA_UNIT / k_B``.
"""

from scipy import constants as _sc

HBAR = 1.0
C = 1.0
EPS0 = 1.0
MU0 = 1.0
KB = 1.0

OMEGA_UNIT = 1.0e15  # rad/s

UNIT_SYSTEMS = ("reduced", "si")


def omega_to_si(omega):
    return omega * OMEGA_UNIT


def omega_from_si(omega_si):
    return omega_si / OMEGA_UNIT


def temperature_to_si(T):
    return T * _sc.hbar * OMEGA_UNIT / _sc.k


def temperature_from_si(T_si):
    return T_si * _sc.k / (_sc.hbar * OMEGA_UNIT)


def velocity_from_si(v_si):
    return v_si / _sc.c


def spectral_intensity_to_si(value):
    """Field intensity per unit angular frequency, in V^2 m^-2 s."""
    return value * _sc.hbar * OMEGA_UNIT**3 / (_sc.epsilon_0 * _sc.c**3)


def total_intensity_to_si(value):
    """Frequency-integrated field intensity, in V^2 m^-2."""
    return value * _sc.hbar * OMEGA_UNIT**4 / (_sc.epsilon_0 * _sc.c**3)
