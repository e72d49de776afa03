import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qnmqubit.dynamics import exact_coefficients
from qnmqubit.errors import InsufficientSamplesError, InvalidConfigError, ShapeError
from qnmqubit.hamiltonian import solve_displacements
from qnmqubit.observables import (
    InitialState,
    decoherence_closed_form,
    decoherence_envelope,
    decoherence_exact,
    field_amplitudes,
    forcing_offset,
    photon_number,
    short_time_rate,
)
from qnmqubit.physparams import HBAR

from conftest import small_branch


def _mean_field_ode(h, x0, t):
    """Integrate i hbar dx/dt = M x + f for the mode amplitudes."""
    m = h.mode_matrix() / HBAR
    f = h.forcing_vector() / HBAR
    n = x0.size

    def rhs(_, y):
        x = y[:n] + 1j * y[n:]
        dx = -1j * (m @ x + f)
        return np.concatenate([dx.real, dx.imag])

    sol = solve_ivp(rhs, (0, t[-1]), np.concatenate([x0.real, x0.imag]), t_eval=t, rtol=1e-11, atol=1e-12, method="DOP853")
    return (sol.y[:n] + 1j * sol.y[n:]).T


def test_initial_state_validation():
    with pytest.raises(InvalidConfigError):
        InitialState("squeezed")
    with pytest.raises(InvalidConfigError):
        InitialState.fock(-1)
    with pytest.raises(InvalidConfigError):
        InitialState.coherent(1.0, qubit_amplitudes=(1.0, 1.0))
    s = InitialState.coherent(2.0, bath_kind="coherent", bath_alphas=0.5)
    np.testing.assert_allclose(s.mean_field(3), [2, 0.5, 0.5, 0.5])
    assert s.mean_photons == 4.0 and InitialState.fock(3).resonant_variance == 3.0


def test_forced_coherent_mean_field_matches_ode():
    h = small_branch(np.random.default_rng(5), n_bath=3, forced=True)
    t = np.linspace(0, 40e-9, 41)
    s = InitialState.coherent(0.7 - 0.2j, bath_kind="coherent", bath_alphas=[0.1, -0.3j, 0.2])
    d = solve_displacements(h)
    p = exact_coefficients(h, t, bath_tensor=True)
    amps = field_amplitudes(p, s, d)
    ref = _mean_field_ode(h, s.mean_field(3), t)
    np.testing.assert_allclose(amps, ref, atol=1e-7)
    np.testing.assert_allclose(photon_number(p, d, s), np.abs(ref[:, 0]) ** 2, atol=1e-7)


def test_fock_photon_number_decay():
    h = small_branch(np.random.default_rng(6), n_bath=3)
    t = np.linspace(0, 30e-9, 31)
    p = exact_coefficients(h, t)
    n = photon_number(p, None, InitialState.fock(5))
    np.testing.assert_allclose(n, 5 * np.abs(p.u) ** 2)
    assert n[0] == pytest.approx(5.0)


def test_forcing_offset_zero_without_forcing():
    h = small_branch(np.random.default_rng(8), n_bath=3)
    t = np.linspace(0, 30e-9, 31)
    p = exact_coefficients(h, t)
    for s in (InitialState.fock(4), InitialState.coherent(1.5j)):
        assert np.max(np.abs(forcing_offset(p, None, s))) <= 1e-12


def test_decoherence_exact_identical_branches():
    h = small_branch(np.random.default_rng(9), n_bath=2)
    t = np.linspace(0, 1e-8, 11)
    p = exact_coefficients(h, t)
    np.testing.assert_allclose(decoherence_exact(p, p, InitialState.coherent(2.0)), 1.0)
    with pytest.raises(ShapeError):
        decoherence_exact(p, exact_coefficients(h, t[:5]), InitialState.coherent(2.0))
    with pytest.raises(InvalidConfigError):
        decoherence_exact(p, p, InitialState.fock(1))


def test_decoherence_exact_against_ode():
    h0 = small_branch(np.random.default_rng(10), n_bath=2)
    h1 = h0.opposite(h0.shifted_frequency + 2 * math.pi * 5e6)
    t = np.linspace(0, 50e-9, 26)
    s = InitialState.coherent(1.2)
    D = decoherence_exact(exact_coefficients(h0, t), exact_coefficients(h1, t), s)
    x0 = _mean_field_ode(h0, s.mean_field(2), t)
    x1 = _mean_field_ode(h1, s.mean_field(2), t)
    np.testing.assert_allclose(D, np.exp(-0.5 * np.sum(np.abs(x0 - x1) ** 2, axis=1)), atol=1e-8)


def test_closed_form_values():
    g = 2.0
    t = np.linspace(0, 10, 101)
    D = decoherence_closed_form(5.0, 5.0, g, 2.0, t)
    assert D[0] == 1.0
    np.testing.assert_allclose(D, decoherence_envelope(g, 2.0, t), atol=1e-15)
    Dd = decoherence_closed_form(0.0, 3.0, g, 2.0, t)
    np.testing.assert_allclose(Dd, np.exp(-4 * (1 - np.exp(-g * t) * np.cos(3 * t))), rtol=1e-14)
    assert np.all(Dd <= D + 1e-15)
    with pytest.raises(ValueError):
        decoherence_closed_form(0, 0, -1.0, 1.0, t)


def test_short_time_rate_recovers_linear_coefficient():
    t = np.linspace(0, 1, 2001)
    D = np.exp(-(3.0 * t + 5.0 * t**2))
    assert short_time_rate(D, t, window=0.2) == pytest.approx(3.0, rel=1e-10)
    # default window: -ln D reaches 5% of its final value
    assert short_time_rate(D, t) == pytest.approx(3.0, rel=1e-8)


def test_short_time_rate_guards():
    t = np.linspace(0, 1, 5)
    with pytest.raises(InsufficientSamplesError):
        short_time_rate(np.exp(-t), t)
    with pytest.raises(ValueError):
        short_time_rate(np.exp(-t) * 0.5, t)
    with pytest.raises(ShapeError):
        short_time_rate(np.ones(3), t)
    assert short_time_rate(np.ones(5), t) == 0.0


def test_closed_form_without_decay_is_flat():
    np.testing.assert_array_equal(decoherence_closed_form(1.0, 1.0, 0.0, 2.0, np.linspace(0, 5, 6)), 1.0)


def test_single_mode_without_bath_conserves_photons():
    from qnmqubit.hamiltonian import BranchHamiltonian

    h = BranchHamiltonian(0, 2 * math.pi * 1e9, [], 0.0, [], 0.0, [])
    p = exact_coefficients(h, np.linspace(0, 1e-6, 101))
    n = photon_number(p, None, InitialState.coherent(1.7))
    np.testing.assert_allclose(n, 1.7**2, rtol=0, atol=1e-12)


def test_decoherence_range_and_alpha_scaling():
    h0 = small_branch(np.random.default_rng(15), n_bath=3)
    h1 = h0.opposite(h0.shifted_frequency + 2 * math.pi * 4e6)
    t = np.linspace(0, 60e-9, 61)
    ps = [exact_coefficients(h, t) for h in (h0, h1)]
    logs = []
    for a in (0.5, 1.0, 2.0):
        D = decoherence_exact(*ps, InitialState.coherent(a))
        assert np.all((D > 0) & (D <= 1))
        logs.append(-np.log(D) / a**2)
    np.testing.assert_allclose(logs[0], logs[2], rtol=1e-10, atol=1e-15)
    np.testing.assert_allclose(logs[1], logs[2], rtol=1e-10, atol=1e-15)
