"""Propagator coefficients of the displaced-mode dynamics.

In the displaced frame each branch is number conserving, so the Heisenberg
operators evolve linearly::

    b(t)   = u(t) b + sum_j v_j(t) b_j
    b_j(t) = exp(-i w_j t) b_j + u_j(t) b + sum_s v_js(t) b_s

Two independent routes produce the coefficients: the Weisskopf-Wigner
formulas (:func:`analytic_coefficients`) and the exact exponential of the
single-particle matrix (:func:`exact_coefficients`).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bath import DiscretizedBath
from .errors import InstanceTooLargeError, ShapeError
from .hamiltonian import BranchHamiltonian
from .physparams import HBAR

#: Largest bath for which the bath-to-bath tensor is built.
TENSOR_MAX_MODES = 64
#: Largest single-particle matrix accepted by the exact route.
EXACT_MAX_MODES = 6000


@dataclass(frozen=True, eq=False)
class PropagatorCoefficients:
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    u_into_bath: np.ndarray
    v_bath_bath: Optional[np.ndarray] = None
    source: str = "exact"
    frequency_shift: float = 0.0
    bath_frequencies: Optional[np.ndarray] = None

    @property
    def n_bath(self) -> int:
        return self.v.shape[1]

    def unitarity(self) -> np.ndarray:
        """``|u|^2 + sum_j |v_j|^2`` at every sample."""
        return np.abs(self.u) ** 2 + np.sum(np.abs(self.v) ** 2, axis=1)

    def full_propagator(self) -> np.ndarray:
        """Single-particle propagator ``exp(-iMt/hbar)``, shape (T, N+1, N+1).

        Needs the bath tensor and the bath frequencies for the free part.
        """
        if self.v_bath_bath is None or self.bath_frequencies is None:
            raise ShapeError("bath-to-bath coefficients were not computed")
        t, n = self.times, self.n_bath
        out = np.empty((t.size, n + 1, n + 1), dtype=complex)
        out[:, 0, 0] = self.u
        out[:, 0, 1:] = self.v
        out[:, 1:, 0] = self.u_into_bath
        out[:, 1:, 1:] = self.v_bath_bath
        idx = np.arange(1, n + 1)
        out[:, idx, idx] += np.exp(-1j * np.outer(t, self.bath_frequencies))
        return out


def _times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size and (np.any(t < 0) or np.any(np.diff(t) < 0)):
        raise ValueError("times must be nonnegative and nondecreasing")
    return t


def kernel_factor(omega_s, omega_j, t):
    """Time integral of ``exp(i (w_j - w_s) tau)`` over [0, t], divided by ``i``.

    Equals ``(exp(-i (w_s - w_j) t) - 1) / (w_s - w_j)`` off the diagonal and
    its limit ``-i t`` when ``w_s == w_j``.
    """
    d = np.asarray(omega_s, dtype=float) - np.asarray(omega_j, dtype=float)
    t = np.asarray(t, dtype=float)
    safe = np.where(d == 0, 1.0, d)
    return np.where(d == 0, -1j * t, (np.exp(-1j * d * t) - 1) / safe)


def analytic_coefficients(
    h: BranchHamiltonian,
    gamma: float,
    delta_omega: float,
    times,
    bath_tensor: bool = False,
) -> PropagatorCoefficients:
    """Weisskopf-Wigner coefficients with decay ``gamma`` and frequency shift ``delta_omega``."""
    t = _times(times)
    wj = h.bath_frequencies
    gj = h.couplings / HBAR
    omega = h.shifted_frequency + delta_omega
    denom = omega - wj - 0.5j * gamma  # (N,)
    decay = np.exp(-0.5 * gamma * t)
    u = decay * np.exp(-1j * omega * t)
    # 1 - exp(-i(Omega - w_j)t - gamma t/2), written to keep exp(-i w_j t) separate
    tt = t[:, None]
    rel = 1 - np.exp(-1j * (omega - wj) * tt) * decay[:, None]
    v = -gj * np.exp(-1j * wj * tt) * rel / denom
    tensor = None
    if bath_tensor:
        n = wj.size
        if n > TENSOR_MAX_MODES:
            raise InstanceTooLargeError(f"bath tensor requested for {n} > {TENSOR_MAX_MODES} modes")
        # indices: time, j, s
        kern = kernel_factor(wj[None, None, :], wj[None, :, None], t[:, None, None])
        first = (rel / denom)[:, :, None]
        tensor = (
            -(gj[:, None] * gj[None, :])[None]
            * np.exp(-1j * wj[None, :, None] * t[:, None, None])
            / denom[None, None, :]
            * (first + kern)
        )
    return PropagatorCoefficients(t, u, v, v.copy(), tensor, "analytic", delta_omega, wj)


def exact_coefficients(h: BranchHamiltonian, times, bath_tensor: bool = False) -> PropagatorCoefficients:
    """Coefficients from ``exp(-i M t / hbar)`` of the single-particle matrix ``M``.

    The matrix is diagonalized once in a frame rotating at ``Omega``; the
    common phase is restored afterwards, which keeps the eigenproblem well
    conditioned for microwave carrier frequencies.
    """
    t = _times(times)
    n = h.n_bath
    if n + 1 > EXACT_MAX_MODES:
        raise InstanceTooLargeError(f"{n + 1} modes exceed the exact-route limit {EXACT_MAX_MODES}")
    if bath_tensor and n > TENSOR_MAX_MODES:
        raise InstanceTooLargeError(f"bath tensor requested for {n} > {TENSOR_MAX_MODES} modes")
    ref = h.shifted_frequency
    m = h.mode_matrix() / HBAR
    m[np.diag_indices(n + 1)] -= ref
    evals, vecs = np.linalg.eigh(m)
    phase = np.exp(-1j * np.outer(t, evals))  # (T, K)
    carrier = np.exp(-1j * ref * t)
    row0 = (phase * vecs[0]) @ vecs.T * carrier[:, None]  # U[0, :] per time
    u = row0[:, 0]
    v = row0[:, 1:]
    # M is real symmetric, so U is symmetric: U[j, 0] == U[0, j]
    col0 = v.copy()
    tensor = None
    if bath_tensor:
        full = np.einsum("tk,ik,jk->tij", phase, vecs[1:], vecs[1:]) * carrier[:, None, None]
        free = np.exp(-1j * np.outer(t, h.bath_frequencies))
        idx = np.arange(n)
        full[:, idx, idx] -= free
        tensor = full
    return PropagatorCoefficients(t, u, v, col0, tensor, "exact", 0.0, h.bath_frequencies)


def conjugate_coefficients(p: PropagatorCoefficients) -> PropagatorCoefficients:
    """Coefficients of the backward (anti-Heisenberg) evolution ``U b U'``."""
    return replace(
        p,
        u=np.conj(p.u),
        v=np.conj(p.v),
        u_into_bath=np.conj(p.u_into_bath),
        v_bath_bath=None if p.v_bath_bath is None else np.conj(p.v_bath_bath),
    )


def lamb_shift(h: BranchHamiltonian, bath: Optional[DiscretizedBath] = None) -> float:
    """Principal-value frequency shift of the resonant mode (rad/s).

    The grid point within half a spacing of ``Omega`` is skipped.
    """
    wj = h.bath_frequencies
    if wj.size == 0:
        return 0.0
    if bath is not None:
        spacing = bath.spacing
    elif wj.size > 1:
        spacing = float(np.min(np.diff(wj)))
    else:
        spacing = 0.0
    det = h.shifted_frequency - wj
    keep = np.abs(det) > 0.5 * spacing
    g = h.couplings[keep] / HBAR
    return float(np.sum(g**2 / det[keep]))
