"""Discretization of the non-resonant "modes of the universe".

The continuum is replaced by a uniform grid of ``N`` modes centred on the
resonant frequency.  Each mode carries a Lorentzian weight and the flux
phase of :func:`qnmqubit.physparams.phi_j`; one scalar then rescales all
phases so that the golden-rule decay of the resonant mode equals the
target rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DenseBathError, HorizonError, InvalidBathError
from .physparams import HBAR, PhysicalConfig, lorentzian_weight, phi0, phi_j

#: Lorentzian full width in units of the target decay rate when not given.
DEFAULT_WIDTH_RATIO = 1000.0


@dataclass(frozen=True)
class BathSpec:
    """Grid and calibration parameters of a discretized bath.

    ``lorentz_width`` is the full width (rad/s) of the Lorentzian weight
    profile.  Setting it equal to ``target_decay`` gives the strongly
    structured bath obtained by reusing the cavity linewidth; the default
    is wide compared to the grid, which keeps the resonant-mode decay
    Markovian.
    """

    mode_count: int
    half_bandwidth: float
    target_decay: float
    lorentz_amplitude: float = 1.0
    lorentz_width: Optional[float] = None

    def __post_init__(self):
        if int(self.mode_count) != self.mode_count or self.mode_count < 2:
            raise InvalidBathError(f"mode_count must be an integer >= 2, got {self.mode_count!r}")
        if not self.target_decay > 0:
            raise InvalidBathError("target_decay must be positive")
        if self.half_bandwidth < 10 * self.target_decay * (1 - 1e-12):
            raise InvalidBathError(
                f"half bandwidth {self.half_bandwidth:.4g} rad/s must be >= 10 gamma "
                f"({10 * self.target_decay:.4g} rad/s)"
            )
        if self.spacing >= self.target_decay / 5:
            raise DenseBathError(
                f"grid spacing {self.spacing:.4g} rad/s must be < gamma/5 "
                f"({self.target_decay / 5:.4g} rad/s); increase mode_count"
            )
        if self.lorentz_width is not None and not self.lorentz_width > 0:
            raise InvalidBathError("lorentz_width must be positive")

    @classmethod
    def default(cls, gamma: float, mode_count: int = 401, bandwidth_over_gamma: float = 40.0, **kw):
        return cls(mode_count, bandwidth_over_gamma * gamma / 2, gamma, **kw)

    @property
    def spacing(self) -> float:
        return 2 * self.half_bandwidth / (self.mode_count - 1)

    @property
    def width(self) -> float:
        if self.lorentz_width is None:
            return DEFAULT_WIDTH_RATIO * self.target_decay
        return self.lorentz_width


@dataclass(frozen=True, eq=False)
class DiscretizedBath:
    frequencies: np.ndarray
    weights: np.ndarray
    phase_couplings: np.ndarray
    spacing: float
    center: float
    calibration: float = 1.0
    target_decay: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidBathError("bath needs at least one mode")
        if not (len(self.weights) == len(self.phase_couplings) == w.size):
            raise InvalidBathError("frequencies, weights and phase_couplings must have equal length")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise InvalidBathError("bath frequencies must be strictly increasing")
        if np.any(np.asarray(self.weights) < 0):
            raise InvalidBathError("Lorentzian weights must be nonnegative")
        for name in ("frequencies", "weights", "phase_couplings"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.frequencies.size

    @property
    def revival_time(self) -> float:
        return 2 * math.pi / self.spacing

    @property
    def resonant_index(self) -> int:
        return int(np.argmin(np.abs(self.frequencies - self.center)))

    def check_horizon(self, t_max: float) -> None:
        """Raise :class:`HorizonError` if ``t_max`` reaches half the revival time."""
        if t_max >= 0.5 * self.revival_time:
            raise HorizonError(
                f"t_max={t_max:.4g} s exceeds half the bath revival time "
                f"({0.5 * self.revival_time:.4g} s); refine the frequency grid"
            )


def coupling_scale(cfg: PhysicalConfig) -> float:
    """Energy multiplying ``phi_j`` in the mode-mode coupling, ``phi0 E_J |cos phi_c|``.

    A vanishing cosine or Josephson energy is replaced by 1 (1 J for the
    energy), so that a bath can still be built when the coupling is off; the
    branch couplings then vanish regardless of the calibration.
    """
    c = abs(math.cos(cfg.classical_flux_phase))
    if c < 1e-12:
        c = 1.0
    ej = cfg.josephson_energy if cfg.josephson_energy > 0 else 1.0
    return phi0(cfg) * ej * c


def discretize(spec: BathSpec, cfg: PhysicalConfig) -> DiscretizedBath:
    """Build the calibrated bath for ``cfg`` on a uniform grid.

    Mode volumes of the non-resonant modes are taken equal to the resonant
    one; the unknown ratio is absorbed by the calibration scalar.
    """
    omega = cfg.resonant_angular_frequency
    freqs = np.linspace(omega - spec.half_bandwidth, omega + spec.half_bandwidth, spec.mode_count)
    spacing = spec.spacing
    weights = lorentzian_weight(freqs, omega, spec.width, spec.lorentz_amplitude)
    raw = phi_j(cfg, freqs, weights)

    scale = coupling_scale(cfg)
    center = int(np.argmin(np.abs(freqs - omega)))
    g_center = abs(raw[center]) * scale
    if not g_center > 0:
        raise InvalidBathError(
            "on-resonance coupling vanishes (zero E_J, loop area, Lorentz amplitude "
            "or a standing-wave node); the bath cannot be calibrated"
        )
    g_target = HBAR * math.sqrt(spec.target_decay * spacing / (2 * math.pi))
    calibration = g_target / g_center
    return DiscretizedBath(
        frequencies=freqs,
        weights=weights,
        phase_couplings=raw * calibration,
        spacing=spacing,
        center=omega,
        calibration=calibration,
        target_decay=spec.target_decay,
        metadata={"lorentz_width": spec.width, "half_bandwidth": spec.half_bandwidth},
    )


def golden_rule_rate(bath: DiscretizedBath, couplings) -> float:
    """Golden-rule decay rate (rad/s) of the resonant mode into ``bath``.

    ``couplings`` are mode-mode coupling energies aligned with the bath grid;
    the on-resonance value is taken at the grid point nearest the centre.
    """
    g = np.asarray(couplings, dtype=float)
    if len(bath) == 0 or g.size == 0:
        raise InvalidBathError("empty bath")
    if g.shape != bath.frequencies.shape:
        raise InvalidBathError(f"{g.size} couplings for {len(bath)} bath modes")
    g0 = g[bath.resonant_index]
    return 2 * math.pi * g0**2 / (HBAR**2 * bath.spacing)
