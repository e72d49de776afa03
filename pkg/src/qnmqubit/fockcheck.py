"""Brute-force evolution in a truncated Fock space.

Only meant for tiny instances (resonant mode plus at most three bath
modes).  The occupation basis is row-major with the resonant mode first.
Unforced Hamiltonians conserve the total excitation number and are
diagonalized block by block; forced ones are stepped with the truncated-Taylor
action of the sparse matrix exponential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.stats import poisson

from .errors import InstanceTooLargeError, InvalidConfigError, TruncationError
from .hamiltonian import BranchHamiltonian
from .observables import InitialState
from .physparams import HBAR

MAX_BATH_MODES = 3
MAX_DIMENSION = 200_000
TAIL_TOLERANCE = 1e-8
NORM_TOLERANCE = 1e-8


def coherent_tail(alpha: complex, cutoff: int) -> float:
    """Probability weight of a coherent state above the cutoff."""
    return float(poisson.sf(cutoff, abs(alpha) ** 2))


def coherent_vector(alpha: complex, cutoff: int) -> np.ndarray:
    """Coherent state truncated at ``cutoff`` and renormalized."""
    n = np.arange(cutoff + 1)
    if alpha == 0:
        return (n == 0).astype(complex)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    mag = np.exp(n * math.log(abs(alpha)) - 0.5 * logfact)
    vec = mag * np.exp(1j * n * np.angle(alpha))
    return vec / np.linalg.norm(vec)


def product_state(vectors) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


@dataclass(frozen=True, eq=False)
class FockConfig:
    hamiltonian: BranchHamiltonian
    cutoff: int

    def __post_init__(self):
        if self.hamiltonian.n_bath > MAX_BATH_MODES:
            raise InstanceTooLargeError(
                f"{self.hamiltonian.n_bath} bath modes; the Fock oracle handles at most {MAX_BATH_MODES}"
            )
        if self.cutoff < 1:
            raise InvalidConfigError("cutoff must be >= 1")
        if self.dimension > MAX_DIMENSION:
            raise InstanceTooLargeError(f"Fock dimension {self.dimension} exceeds {MAX_DIMENSION}")

    @property
    def mode_count(self) -> int:
        return 1 + self.hamiltonian.n_bath

    @property
    def dimension(self) -> int:
        return (self.cutoff + 1) ** self.mode_count

    @cached_property
    def annihilators(self) -> list:
        d = self.cutoff + 1
        a = sp.diags(np.sqrt(np.arange(1, d)), 1, format="csr")
        eye = sp.identity(d, format="csr")
        ops = []
        for m in range(self.mode_count):
            factors = [a if k == m else eye for k in range(self.mode_count)]
            op = factors[0]
            for f in factors[1:]:
                op = sp.kron(op, f, format="csr")
            ops.append(op)
        return ops

    @cached_property
    def occupations(self) -> np.ndarray:
        """Occupation numbers of every basis state, shape (dim, modes)."""
        d = self.cutoff + 1
        grids = np.indices((d,) * self.mode_count).reshape(self.mode_count, -1)
        return grids.T

    def hamiltonian_matrix(self) -> sp.csr_matrix:
        """Field Hamiltonian in rad/s (divided by hbar), without the constant offset."""
        h = self.hamiltonian
        a = self.annihilators
        freqs = np.concatenate([[h.shifted_frequency], h.bath_frequencies])
        forcing = np.concatenate([[h.resonant_forcing], h.bath_forcings]) / HBAR
        out = sp.csr_matrix((self.dimension, self.dimension), dtype=complex)
        for m, op in enumerate(a):
            out = out + freqs[m] * (op.conj().T @ op)
            if forcing[m] != 0:
                out = out - 1j * forcing[m] * (op - op.conj().T)
        for j, g in enumerate(h.couplings / HBAR, start=1):
            out = out + g * (a[j] @ a[0].conj().T + a[j].conj().T @ a[0])
        return out.tocsr()


@dataclass(frozen=True, eq=False)
class FockEvolution:
    times: np.ndarray
    states: np.ndarray
    norm_drift: float


def _initial_vector(fc: FockConfig, s: InitialState) -> np.ndarray:
    mean = s.mean_field(fc.hamiltonian.n_bath)
    if s.resonant_kind == "fock":
        if s.n > fc.cutoff:
            raise TruncationError(f"Fock state {s.n} above cutoff {fc.cutoff}")
        first = np.zeros(fc.cutoff + 1, dtype=complex)
        first[s.n] = 1
        coherent = mean[1:]
    else:
        first = None
        coherent = mean
    for alpha in coherent:
        tail = coherent_tail(alpha, fc.cutoff)
        if tail > TAIL_TOLERANCE:
            raise TruncationError(
                f"coherent amplitude {alpha:.3g} loses {tail:.2e} probability above cutoff {fc.cutoff}"
            )
    vecs = [coherent_vector(a, fc.cutoff) for a in coherent]
    if first is not None:
        vecs.insert(0, first)
    return product_state(vecs)


def _propagate(hmat: sp.csr_matrix, psi0: np.ndarray, times: np.ndarray, blocks) -> np.ndarray:
    out = np.zeros((times.size, psi0.size), dtype=complex)
    for idx, shift in blocks:
        sub = psi0[idx]
        if not np.any(sub):
            continue
        block = hmat[idx][:, idx].toarray()
        block[np.diag_indices_from(block)] -= shift
        if not np.any(block.imag):
            block = block.real
        evals, vecs = np.linalg.eigh(block)
        coef = vecs.conj().T @ sub
        phase = np.exp(-1j * np.outer(times, evals)) * coef
        out[:, idx] = (phase @ vecs.T) * np.exp(-1j * shift * times)[:, None]
    return out


def _step_sparse(hmat: sp.csr_matrix, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros((times.size, psi0.size), dtype=complex)
    psi, last = psi0.astype(complex), 0.0
    for i, t in enumerate(times):
        if t > last:
            psi = expm_multiply(-1j * (t - last) * hmat, psi)
            last = t
        out[i] = psi
    return out


def evolve_state(fc: FockConfig, s: InitialState, times) -> FockEvolution:
    """Field state ``exp(-i H t / hbar) |psi0>`` at every time.

    The constant energy offset only contributes a global phase and is left out.
    """
    t = np.asarray(times, dtype=float).reshape(-1)
    psi0 = _initial_vector(fc, s)
    hmat = fc.hamiltonian_matrix()
    if fc.hamiltonian.is_forced:
        states = _step_sparse(hmat, psi0, t)
    else:
        # excitation-number sectors, each shifted to keep its spectrum near zero
        total = fc.occupations.sum(axis=1)
        omega = fc.hamiltonian.shifted_frequency
        blocks = [(np.nonzero(total == k)[0], k * omega) for k in range(int(total.max()) + 1)]
        states = _propagate(hmat, psi0, t, blocks)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - np.linalg.norm(psi0)))) if t.size else 0.0
    if drift > NORM_TOLERANCE:
        raise TruncationError(f"norm drift {drift:.2e} above {NORM_TOLERANCE}")
    return FockEvolution(t, states, drift)


def photon_numbers(fc: FockConfig, evolution: FockEvolution, mode: int = 0) -> np.ndarray:
    occ = fc.occupations[:, mode]
    return np.real(np.sum(np.abs(evolution.states) ** 2 * occ, axis=1))


def mean_fields(fc: FockConfig, evolution: FockEvolution) -> np.ndarray:
    """``<a_m>`` for every mode and time, shape (T, modes)."""
    st = evolution.states
    return np.stack([np.sum(st.conj() * (op @ st.T).T, axis=1) for op in fc.annihilators], axis=1)


def overlap_magnitude(first: FockEvolution, second: FockEvolution) -> np.ndarray:
    """``|<second(t)|first(t)>|`` at every time."""
    return np.abs(np.sum(second.states.conj() * first.states, axis=1))


def coherent_closure_check(
    fc: FockConfig, alpha: complex, times, bath_alphas=None
) -> float:
    """Largest infidelity between the evolved state and the nearest coherent product.

    The candidate product is built from the evolved mean fields ``<a_m>``,
    which is the closest coherent product whenever the state is one.
    """
    kw = {"bath_kind": "coherent", "bath_alphas": bath_alphas} if bath_alphas is not None else {}
    s = InitialState.coherent(alpha, **kw)
    ev = evolve_state(fc, s, times)
    fields = mean_fields(fc, ev)
    worst = 0.0
    for psi, amps in zip(ev.states, fields):
        for a in amps:
            if coherent_tail(a, fc.cutoff) > TAIL_TOLERANCE:
                raise TruncationError(f"evolved amplitude {a:.3g} too large for cutoff {fc.cutoff}")
        ref = product_state([coherent_vector(a, fc.cutoff) for a in amps])
        worst = max(worst, 1 - abs(np.vdot(ref, psi)) ** 2)
    return float(worst)
