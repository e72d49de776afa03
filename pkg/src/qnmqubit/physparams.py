"""Physical parameters of the qubit-cavity device and the coupling phases.

All quantities are SI internally.  Micro-electronvolt energies and GHz
frequencies are converted at the boundary with :func:`ueV` and :func:`ghz`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import constants as C

from .errors import InvalidBathError, InvalidConfigError, ScreeningValidityError

HBAR = C.hbar
FLUX_QUANTUM = C.h / (2 * C.e)
EPS0 = C.epsilon_0
LIGHT_SPEED = C.c

#: Upper validity limit of the screening parameter.
BETA_M_LIMIT = 2 / math.pi


def ueV(value: float) -> float:
    """Micro-electronvolts to joules."""
    return value * 1e-6 * C.e


def ghz(value: float) -> float:
    """Ordinary frequency in GHz to angular frequency in rad/s."""
    return 2 * math.pi * value * 1e9


# Reference device: a 30 GHz mode whose field amplitude is 7.52e-11 T and a
# loop area giving phi0 = 1.14e-5.  Neither V nor S is quoted directly, so
# both are back-solved from those two numbers.
REFERENCE_OMEGA = ghz(30.0)
REFERENCE_FIELD = 7.52e-11
REFERENCE_PHI0 = 1.14e-5
DEFAULT_MODE_VOLUME = HBAR * REFERENCE_OMEGA / (EPS0 * LIGHT_SPEED**2 * REFERENCE_FIELD**2)
DEFAULT_SQUID_AREA = 1.0e-10


@dataclass(frozen=True)
class PhysicalConfig:
    """Cavity geometry, qubit energies and bias of one experiment.

    Energies are in joules, frequencies in rad/s, lengths in meters.  The
    cavity decay rate defaults to ``omega / Q``; pass ``decay_rate`` to
    override it.  ``squid_position`` defaults to the cavity midpoint.
    """

    resonant_angular_frequency: float = REFERENCE_OMEGA
    quality_factor: float = 1e6
    charging_energy: float = field(default_factory=lambda: ueV(122.0))
    josephson_energy: float = field(default_factory=lambda: ueV(34.0))
    gate_charge: float = 0.5
    classical_flux_phase: float = math.pi / 4
    screening_parameter: float = 0.0
    curvature_radius: float = 2.55e-3
    cavity_length: float = 0.5e-2
    squid_area: float = DEFAULT_SQUID_AREA
    mode_volume: float = DEFAULT_MODE_VOLUME
    squid_position: Optional[float] = None
    decay_rate: Optional[float] = None

    def __post_init__(self):
        positive = {
            "resonant_angular_frequency": self.resonant_angular_frequency,
            "quality_factor": self.quality_factor,
            "curvature_radius": self.curvature_radius,
            "cavity_length": self.cavity_length,
            "mode_volume": self.mode_volume,
        }
        for name, value in positive.items():
            if not (value > 0 and math.isfinite(value)):
                raise InvalidConfigError(f"{name} must be positive and finite, got {value!r}")
        if self.squid_area < 0:
            raise InvalidConfigError(f"squid_area must be nonnegative, got {self.squid_area!r}")
        if self.decay_rate is not None and not self.decay_rate > 0:
            raise InvalidConfigError(f"decay_rate must be positive, got {self.decay_rate!r}")
        if self.josephson_energy < 0 or self.charging_energy <= 0:
            raise InvalidConfigError("energies must be nonnegative (E_C strictly positive)")
        if not self.charging_energy > self.josephson_energy:
            raise InvalidConfigError(
                "charge-qubit regime requires E_C > E_J "
                f"(E_C={self.charging_energy:.3e} J, E_J={self.josephson_energy:.3e} J)"
            )
        if self.josephson_energy > 0 and self.charging_energy / self.josephson_energy < 3:
            warnings.warn("E_C/E_J below 3: charge-qubit approximation is marginal", stacklevel=3)
        if not 0 <= self.screening_parameter < BETA_M_LIMIT:
            raise ScreeningValidityError(
                f"screening parameter {self.screening_parameter} outside [0, 2/pi)"
            )

    @property
    def gamma(self) -> float:
        """Cavity decay rate in rad/s."""
        if self.decay_rate is not None:
            return self.decay_rate
        return self.resonant_angular_frequency / self.quality_factor

    @property
    def position(self) -> float:
        if self.squid_position is None:
            return self.cavity_length / 2
        return self.squid_position

    def with_(self, **changes) -> "PhysicalConfig":
        return replace(self, **changes)


def resonant_field_amplitude(cfg: PhysicalConfig) -> float:
    """Vacuum magnetic-field amplitude of the resonant mode, in tesla."""
    return math.sqrt(HBAR * cfg.resonant_angular_frequency / (EPS0 * cfg.mode_volume * LIGHT_SPEED**2))


def phi0(cfg: PhysicalConfig) -> float:
    """Dimensionless flux phase of one resonant-mode quantum through the loop."""
    return math.pi * cfg.squid_area * resonant_field_amplitude(cfg) / FLUX_QUANTUM


def lorentzian_weight(omega_j, omega: float, gamma: float, amplitude: float = 1.0):
    """Lorentzian amplitude profile ``amplitude * (gamma/2) / |omega_j - omega + i gamma/2|``.

    Works elementwise on arrays of ``omega_j``.
    """
    if not gamma > 0:
        raise InvalidBathError(f"Lorentzian width must be positive, got {gamma!r}")
    half = gamma / 2
    return amplitude * half / np.hypot(np.asarray(omega_j, dtype=float) - omega, half)


def phi_j(cfg: PhysicalConfig, omega_j, weight, mode_volume: Optional[float] = None):
    """Flux phase of non-resonant mode(s) at frequency ``omega_j``.

    The standing-wave factor ``sin(omega_j (z - L) / c)`` is kept signed; at
    the midpoint it reduces to ``sin(-omega_j L / 2c)``.
    """
    omega_j = np.asarray(omega_j, dtype=float)
    if np.any(omega_j <= 0):
        raise InvalidBathError("bath mode frequencies must be positive")
    volume = cfg.mode_volume if mode_volume is None else mode_volume
    amplitude = np.sqrt(HBAR * omega_j / (EPS0 * volume * LIGHT_SPEED**2))
    standing = np.sin(omega_j * (cfg.position - cfg.cavity_length) / LIGHT_SPEED)
    return np.asarray(weight) * (math.pi * cfg.squid_area / FLUX_QUANTUM) * amplitude * standing


def screening_phase(phi_x: float, beta_m: float) -> float:
    """Total flux phase including loop screening, to second order in ``beta_m``."""
    if not 0 <= beta_m < BETA_M_LIMIT:
        raise ScreeningValidityError(
            f"beta_m={beta_m} outside [0, 2/pi); the self-consistent flux may be multivalued"
        )
    eps = math.pi * beta_m / 2
    s, c = math.sin(phi_x), math.cos(phi_x)
    return phi_x + eps * s + eps**2 * s * c
