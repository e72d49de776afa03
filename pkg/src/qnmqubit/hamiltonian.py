"""Qubit-conditioned field Hamiltonians and their displacement frames.

For qubit state ``k`` (an eigenstate of sigma_x) the field sees

    H = hbar Omega a'a - i xi (a - a') + sum_j g_j (a_j a' + a_j' a)
        + sum_j hbar w_j a_j'a_j - i sum_j xi_j (a_j - a_j') + hbar N

with every qubit-dependent parameter carrying the sign ``(-1)**k``.  The
mode-mode couplings ``g_j`` and the forcings ``xi``, ``xi_j`` are stored as
energies; ``Omega`` and ``N`` as angular frequencies.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bath import DiscretizedBath
from .errors import DegenerateForcingError, InvalidConfigError, ShapeError
from .physparams import HBAR, PhysicalConfig, phi0 as _phi0

#: phi0 * sqrt(photon number) above which the second-order cosine expansion is suspect.
NONLINEARITY_LIMIT = 1e-3


@dataclass(frozen=True, eq=False)
class BranchHamiltonian:
    branch: int
    shifted_frequency: float
    couplings: np.ndarray
    resonant_forcing: float
    bath_forcings: np.ndarray
    constant_offset: float
    bath_frequencies: np.ndarray

    def __post_init__(self):
        if self.branch not in (0, 1):
            raise InvalidConfigError(f"branch must be 0 or 1, got {self.branch!r}")
        for name in ("couplings", "bath_forcings", "bath_frequencies"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.bath_frequencies.size
        if self.couplings.size != n or self.bath_forcings.size != n:
            raise ShapeError("couplings, bath_forcings and bath_frequencies must align")

    @property
    def n_bath(self) -> int:
        return self.bath_frequencies.size

    @property
    def is_forced(self) -> bool:
        return self.resonant_forcing != 0 or bool(np.any(self.bath_forcings != 0))

    def mode_matrix(self) -> np.ndarray:
        """Single-particle energy matrix (J) on (resonant, bath_1, ..., bath_N)."""
        n = self.n_bath
        m = np.zeros((n + 1, n + 1))
        m[0, 0] = HBAR * self.shifted_frequency
        m[0, 1:] = self.couplings
        m[1:, 0] = self.couplings
        m[np.arange(1, n + 1), np.arange(1, n + 1)] = HBAR * self.bath_frequencies
        return m

    def forcing_vector(self) -> np.ndarray:
        """Coefficients ``f`` of the creation operators in the linear term ``x'f + f'x``."""
        return 1j * np.concatenate([[self.resonant_forcing], self.bath_forcings])

    def without_forcing(self) -> "BranchHamiltonian":
        """Same Hamiltonian with the linear (forcing) terms removed."""
        return replace(
            self,
            resonant_forcing=0.0,
            bath_forcings=np.zeros_like(self.bath_forcings),
        )

    def opposite(self, center: float) -> "BranchHamiltonian":
        """The other qubit branch, mirroring ``Omega`` about ``center``."""
        return BranchHamiltonian(
            branch=1 - self.branch,
            shifted_frequency=2 * center - self.shifted_frequency,
            couplings=-self.couplings,
            resonant_forcing=-self.resonant_forcing,
            bath_forcings=-self.bath_forcings,
            constant_offset=-self.constant_offset,
            bath_frequencies=self.bath_frequencies,
        )


@dataclass(frozen=True, eq=False)
class Displacements:
    """Shifts ``lambda``, ``lambda_j`` with ``a = b - lambda`` and the energy constant left over."""

    resonant: complex
    bath: np.ndarray
    offset: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([[self.resonant], self.bath])

    @classmethod
    def zero(cls, n_bath: int) -> "Displacements":
        return cls(0j, np.zeros(n_bath, dtype=complex), 0.0)


def build_branch(k: int, cfg: PhysicalConfig, bath: DiscretizedBath) -> BranchHamiltonian:
    """Effective field Hamiltonian for qubit branch ``k`` at gate charge 1/2."""
    if k not in (0, 1):
        raise InvalidConfigError(f"branch must be 0 or 1, got {k!r}")
    if abs(cfg.gate_charge - 0.5) > 1e-12:
        warnings.warn(
            f"gate charge {cfg.gate_charge} != 1/2; the charging term is ignored", stacklevel=2
        )
    sign = (-1) ** k
    p0 = _phi0(cfg)
    ej = cfg.josephson_energy
    c, s = math.cos(cfg.classical_flux_phase), math.sin(cfg.classical_flux_phase)
    pj = bath.phase_couplings
    return BranchHamiltonian(
        branch=k,
        shifted_frequency=cfg.resonant_angular_frequency + sign * p0**2 * ej * c / HBAR,
        couplings=sign * pj * p0 * ej * c,
        resonant_forcing=sign * p0 * ej * s,
        bath_forcings=sign * pj * ej * s,
        constant_offset=sign * (p0**2 * ej * c - ej * c) / HBAR,
        bath_frequencies=bath.frequencies,
    )


def solve_displacements(h: BranchHamiltonian) -> Displacements:
    """Displacements that remove every linear term of ``h``.

    Requiring the coefficients of ``b'`` and ``b_j'`` to vanish gives
    ``M lam = f`` with ``M`` the single-particle matrix and ``f`` the forcing
    vector.  The star structure of ``M`` is eliminated through its Schur
    complement on the resonant mode.
    """
    ew = HBAR * h.bath_frequencies
    g = h.couplings
    if np.any(ew == 0) and h.n_bath:
        raise DegenerateForcingError("bath mode at zero frequency makes the system singular")
    f = h.forcing_vector()
    schur = HBAR * h.shifted_frequency - np.sum(g**2 / ew)
    scale = HBAR * abs(h.shifted_frequency) + np.sum(np.abs(g))
    if abs(schur) <= 1e-14 * scale:
        raise DegenerateForcingError(
            f"hbar*Omega - sum_j g_j^2/(hbar w_j) = {schur:.3e} J vanishes; no static displacement"
        )
    lam = (f[0] - np.sum(g * f[1:] / ew)) / schur
    lam_j = (f[1:] - g * lam) / ew
    vec = np.concatenate([[lam], lam_j])
    offset = HBAR * h.constant_offset - float(np.real(np.vdot(f, vec)))
    return Displacements(complex(lam), lam_j, offset)


def linear_term_residual(h: BranchHamiltonian, d: Displacements) -> float:
    """Largest leftover linear coefficient after displacing, relative to the forcing scale."""
    f = h.forcing_vector()
    m = h.mode_matrix()
    x = d.vector
    resid = m @ x - f
    scale = max(np.max(np.abs(f)), np.max(np.abs(m) @ np.abs(x)), np.finfo(float).tiny)
    return float(np.max(np.abs(resid)) / scale)


def check_weak_nonlinearity(cfg: PhysicalConfig, mean_photons: float) -> bool:
    """Warn when the second-order cosine expansion is not justified; return validity."""
    value = _phi0(cfg) * max(1.0, math.sqrt(max(mean_photons, 0.0)))
    ok = value < NONLINEARITY_LIMIT
    if not ok:
        warnings.warn(
            f"phi0*sqrt(n)={value:.3e} >= {NONLINEARITY_LIMIT}: second-order expansion is suspect",
            stacklevel=2,
        )
    return ok


def qubit_basis_transform(amplitudes) -> np.ndarray:
    """Map charge-basis amplitudes onto the sigma_x eigenbasis (and back: the map is its own inverse)."""
    c = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if c.size != 2:
        raise ShapeError("expected a pair of amplitudes")
    norm = np.linalg.norm(c)
    if norm == 0:
        raise InvalidConfigError("zero qubit state")
    c = c / norm
    return np.array([c[0] + c[1], c[0] - c[1]]) / math.sqrt(2)
