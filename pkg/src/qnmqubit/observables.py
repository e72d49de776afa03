"""Photon number, forcing offset and qubit decoherence factor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import PropagatorCoefficients
from .errors import InsufficientSamplesError, InvalidConfigError, ShapeError
from .hamiltonian import Displacements


@dataclass(frozen=True)
class InitialState:
    """Product initial state of qubit, resonant mode and bath.

    ``resonant_kind`` is ``"fock"`` (uses ``n``) or ``"coherent"`` (uses
    ``alpha``); ``bath_kind`` is ``"vacuum"`` or ``"coherent"`` with one
    amplitude per bath mode in ``bath_alphas`` (a scalar is broadcast).
    Qubit amplitudes are given in the sigma_x eigenbasis.
    """

    resonant_kind: str = "coherent"
    n: int = 0
    alpha: complex = 0j
    bath_kind: str = "vacuum"
    bath_alphas: Optional[Sequence[complex]] = None
    qubit_amplitudes: tuple = (1 / math.sqrt(2), 1 / math.sqrt(2))

    def __post_init__(self):
        if self.resonant_kind not in ("fock", "coherent"):
            raise InvalidConfigError(f"unknown resonant state kind {self.resonant_kind!r}")
        if self.bath_kind not in ("vacuum", "coherent"):
            raise InvalidConfigError(f"unknown bath state kind {self.bath_kind!r}")
        if int(self.n) != self.n or self.n < 0:
            raise InvalidConfigError("Fock number must be a nonnegative integer")
        c = np.asarray(self.qubit_amplitudes, dtype=complex)
        if c.size != 2 or abs(np.vdot(c, c).real - 1) > 1e-10:
            raise InvalidConfigError("qubit amplitudes must be a normalized pair")

    @classmethod
    def coherent(cls, alpha: complex, **kw) -> "InitialState":
        return cls("coherent", 0, complex(alpha), **kw)

    @classmethod
    def fock(cls, n: int, **kw) -> "InitialState":
        return cls("fock", int(n), 0j, **kw)

    @property
    def mean_photons(self) -> float:
        return float(self.n) if self.resonant_kind == "fock" else abs(self.alpha) ** 2

    def mean_field(self, n_bath: int) -> np.ndarray:
        """Initial ``<a>, <a_j>`` as one vector."""
        out = np.zeros(n_bath + 1, dtype=complex)
        if self.resonant_kind == "coherent":
            out[0] = self.alpha
        if self.bath_kind == "coherent" and self.bath_alphas is not None:
            ba = np.broadcast_to(np.asarray(self.bath_alphas, dtype=complex), (n_bath,))
            out[1:] = ba
        return out

    @property
    def resonant_variance(self) -> float:
        """``<a'a> - |<a>|^2`` of the resonant mode."""
        return float(self.n) if self.resonant_kind == "fock" else 0.0


@dataclass
class RunResult:
    times: np.ndarray
    photon_number: dict
    forcing_offset: np.ndarray
    decoherence: dict
    manifest: dict = field(default_factory=dict)

    @property
    def D(self) -> np.ndarray:
        """Decoherence factor of the preferred route (exact when present)."""
        for key in ("exact", "closed_form", "fock"):
            if self.decoherence.get(key) is not None:
                return self.decoherence[key]
        raise KeyError("no decoherence route was computed")


def _displacements(d: Optional[Displacements], n_bath: int) -> Displacements:
    if d is None:
        return Displacements.zero(n_bath)
    if d.bath.size != n_bath:
        raise ShapeError(f"{d.bath.size} bath displacements for {n_bath} bath modes")
    return d


def _resonant_row(p: PropagatorCoefficients) -> np.ndarray:
    return np.concatenate([p.u[:, None], p.v], axis=1)


def photon_number(p: PropagatorCoefficients, d: Optional[Displacements], s: InitialState) -> np.ndarray:
    """Mean photon number ``<a'(t) a(t)>`` of the resonant mode.

    The displaced operators ``b = a + lambda`` evolve linearly; the
    expectation splits into the squared mean field plus the propagated
    initial variance (only the resonant Fock state has one).
    """
    n = p.n_bath
    d = _displacements(d, n)
    beta0 = s.mean_field(n) + d.vector
    mean = _resonant_row(p) @ beta0 - d.resonant
    return np.abs(mean) ** 2 + s.resonant_variance * np.abs(p.u) ** 2


def forcing_offset(p: PropagatorCoefficients, d: Optional[Displacements], s: InitialState) -> np.ndarray:
    """Photon number minus the unforced vacuum-bath decay ``n |u(t)|^2``."""
    return photon_number(p, d, s) - s.mean_photons * np.abs(p.u) ** 2


def field_amplitudes(
    p: PropagatorCoefficients, s: InitialState, d: Optional[Displacements] = None
) -> np.ndarray:
    """Coherent amplitudes of all modes at every time, shape (T, N+1).

    A coherent product stays a coherent product; its displaced-frame
    amplitudes propagate with the single-particle matrix.  Without forcing
    and with a vacuum bath only the first column of the propagator enters,
    otherwise the bath-to-bath tensor is required.
    """
    if s.resonant_kind != "coherent":
        raise InvalidConfigError("coherent-state amplitudes need a coherent resonant state")
    n = p.n_bath
    d = _displacements(d, n)
    beta0 = s.mean_field(n) + d.vector
    if np.all(beta0[1:] == 0):
        col = np.concatenate([p.u[:, None], p.u_into_bath], axis=1)
        out = col * beta0[0]
    else:
        if p.v_bath_bath is None:
            raise ShapeError(
                "forced or coherent-bath evolution needs the bath-to-bath coefficients "
                "(compute them with bath_tensor=True)"
            )
        out = p.full_propagator() @ beta0
    return out - d.vector


def decoherence_exact(
    p0: PropagatorCoefficients,
    p1: PropagatorCoefficients,
    s: InitialState,
    d0: Optional[Displacements] = None,
    d1: Optional[Displacements] = None,
) -> np.ndarray:
    """Overlap modulus ``|<phi1(t)|phi0(t)>|`` of the two branch field states.

    For coherent products the modulus is ``exp(-|beta0 - beta1|^2 / 2)``
    summed over all modes; global phases drop out.
    """
    if p0.times.shape != p1.times.shape or not np.array_equal(p0.times, p1.times):
        raise ShapeError("branch coefficients are sampled on different time grids")
    b0 = field_amplitudes(p0, s, d0)
    b1 = field_amplitudes(p1, s, d1)
    return np.exp(-0.5 * np.sum(np.abs(b0 - b1) ** 2, axis=1))


def decoherence_closed_form(omega0: float, omega1: float, gamma: float, alpha: complex, times) -> np.ndarray:
    """``exp(-|alpha|^2 (1 - exp(-gamma t) cos((omega1 - omega0) t)))``.

    ``omega0`` and ``omega1`` are the shift-corrected resonant frequencies of
    the two branches.
    """
    if not gamma >= 0:
        raise ValueError("gamma must be nonnegative")
    t = np.asarray(times, dtype=float)
    return np.exp(-abs(alpha) ** 2 * (1 - np.exp(-gamma * t) * np.cos((omega1 - omega0) * t)))


def decoherence_envelope(gamma: float, alpha: complex, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    return np.exp(-abs(alpha) ** 2 * (1 - np.exp(-gamma * t)))


def short_time_rate(D, times, window: Optional[float] = None, min_samples: int = 10) -> float:
    """Initial decay rate of ``D(t)`` from a least-squares fit of ``-ln D``.

    ``-ln D`` on ``t <= window`` is fitted with ``a t + b t^2`` (no constant,
    since ``D(0) = 1``); the linear coefficient ``a`` is the rate.  The
    quadratic term absorbs curvature from the decay itself and from any
    branch detuning.  Without an explicit ``window`` the early window ends
    where ``-ln D`` first reaches 5% of its final value.
    """
    D = np.asarray(D, dtype=float)
    t = np.asarray(times, dtype=float)
    if D.shape != t.shape or D.size == 0:
        raise ShapeError("D and times must be equal-length, nonempty arrays")
    if abs(D[0] - 1) > 1e-9 or t[0] != 0:
        raise ValueError("the fit needs D(0) = 1 sampled at t = 0")
    y = -np.log(np.clip(D, np.finfo(float).tiny, None))
    if window is None:
        if y[-1] <= 0:
            return 0.0
        above = np.nonzero(y >= 0.05 * y[-1])[0]
        window = t[above[0]] if above.size else t[-1]
    mask = (t > 0) & (t <= window)
    if mask.sum() < min_samples:
        raise InsufficientSamplesError(
            f"only {int(mask.sum())} samples in the early window t <= {window:.4g}; need {min_samples}"
        )
    tw, yw = t[mask], y[mask]
    scale = tw[-1]
    x = tw / scale
    coef, *_ = np.linalg.lstsq(np.stack([x, x**2], axis=1), yw, rcond=None)
    return float(coef[0] / scale)
