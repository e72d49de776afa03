import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from qnmqubit.bath import BathSpec, discretize
from qnmqubit.dynamics import (
    analytic_coefficients,
    conjugate_coefficients,
    exact_coefficients,
    kernel_factor,
    lamb_shift,
)
from qnmqubit.errors import InstanceTooLargeError, ShapeError
from qnmqubit.hamiltonian import BranchHamiltonian, build_branch
from qnmqubit.physparams import HBAR

from conftest import small_branch


def _expm_oracle(h, t):
    m = h.mode_matrix() / HBAR
    return np.array([expm(-1j * m * tt) for tt in t])


def test_exact_matches_expm():
    h = small_branch(np.random.default_rng(1), n_bath=4)
    t = np.linspace(0, 60e-9, 13)
    p = exact_coefficients(h, t, bath_tensor=True)
    ref = _expm_oracle(h, t)
    np.testing.assert_allclose(p.u, ref[:, 0, 0], atol=1e-9)
    np.testing.assert_allclose(p.v, ref[:, 0, 1:], atol=1e-9)
    np.testing.assert_allclose(p.u_into_bath, ref[:, 1:, 0], atol=1e-9)
    np.testing.assert_allclose(p.full_propagator(), ref, atol=1e-9)


def test_exact_unitarity_and_tensor_rows():
    h = small_branch(np.random.default_rng(2), n_bath=5)
    p = exact_coefficients(h, np.linspace(0, 1e-7, 50), bath_tensor=True)
    np.testing.assert_allclose(p.unitarity(), 1.0, atol=1e-12)
    U = p.full_propagator()
    eye = np.eye(6)
    for Ut in U[::7]:
        np.testing.assert_allclose(Ut.conj().T @ Ut, eye, atol=1e-12)


def test_kernel_factor_limit():
    t = 3.7
    d = np.array([1e-3, 1e-5, 1e-7])
    near = kernel_factor(d, 0.0, t)
    np.testing.assert_allclose(near, -1j * t, rtol=1e-2)
    assert kernel_factor(2.0, 2.0, t) == pytest.approx(-1j * t)
    # definition by quadrature: (1/i) int_0^t exp(i (w_j - w_s) tau) dtau
    ws, wj = 1.3, 0.4
    re = quad(lambda x: math.sin((wj - ws) * x), 0, t)[0]
    im = -quad(lambda x: math.cos((wj - ws) * x), 0, t)[0]
    assert kernel_factor(ws, wj, t) == pytest.approx(complex(re, im), abs=1e-12)


def _markov_branch(cfg, mode_count=401):
    bath = discretize(BathSpec.default(cfg.gamma, mode_count=mode_count), cfg)
    return build_branch(0, cfg, bath).without_forcing(), bath


def test_exact_and_analytic_amplitudes_agree(cfg):
    h, bath = _markov_branch(cfg)
    g = cfg.gamma
    t = np.linspace(0, 5 / g, 201)
    ex = exact_coefficients(h, t)
    an = analytic_coefficients(h, g, lamb_shift(h, bath), t)
    assert np.max(np.abs(np.abs(ex.u) - np.abs(an.u))) < 0.03
    # after the band-edge transient the two agree more closely
    late = t > 1 / g
    assert np.max(np.abs(np.abs(ex.u[late]) - np.abs(an.u[late]))) < 0.01


def test_analytic_tensor_small_instance_matches_exact():
    # weak coupling to a dense grid: the perturbative bath-bath block is close to the exact one
    w0 = 2 * math.pi * 1e9
    gamma = 2 * math.pi * 1e6
    n = 41
    wj = w0 + np.linspace(-10 * gamma, 10 * gamma, n)
    dw = wj[1] - wj[0]
    g = HBAR * math.sqrt(gamma * dw / (2 * math.pi)) * np.ones(n)
    h = BranchHamiltonian(0, w0, g, 0.0, np.zeros(n), 0.0, wj)
    t = np.linspace(0, 2 / gamma, 21)
    an = analytic_coefficients(h, gamma, lamb_shift(h), t, bath_tensor=True)
    ex = exact_coefficients(h, t, bath_tensor=True)
    assert np.max(np.abs(an.v_bath_bath - ex.v_bath_bath)) < 0.05
    np.testing.assert_allclose(an.u_into_bath, an.v)


def test_analytic_sum_rule_limit(cfg):
    # the analytic sum settles at the band fraction (2/pi) arctan(W / gamma)
    h, bath = _markov_branch(cfg)
    t = np.array([15 / cfg.gamma])
    an = analytic_coefficients(h, cfg.gamma, 0.0, t)
    assert an.unitarity()[0] == pytest.approx(2 / math.pi * math.atan(40), abs=2e-3)


def test_conjugate_is_backward_evolution():
    h = small_branch(np.random.default_rng(4), n_bath=3)
    t = np.linspace(0, 2e-8, 5)
    p = conjugate_coefficients(exact_coefficients(h, t, bath_tensor=True))
    ref = np.array([expm(1j * h.mode_matrix() / HBAR * tt) for tt in t])
    # M is real symmetric, so exp(+iMt) = conj(exp(-iMt))
    np.testing.assert_allclose(p.u, ref[:, 0, 0], atol=1e-9)
    np.testing.assert_allclose(p.v, ref[:, 0, 1:], atol=1e-9)


def test_lamb_shift_principal_value():
    h = BranchHamiltonian(0, 10.0, [HBAR, 2 * HBAR, 3 * HBAR], 0.0, [0, 0, 0], 0.0, [9.0, 10.0, 12.0])
    assert lamb_shift(h) == pytest.approx(1 / 1 + 9 / -2)
    single = BranchHamiltonian(0, 10.0, [HBAR], 0.0, [0.0], 0.0, [8.0])
    assert lamb_shift(single) == pytest.approx(0.5)


def test_symmetric_bath_lamb_shift_small(cfg):
    h, bath = _markov_branch(cfg)
    # nearly symmetric grid: the shift is a tiny fraction of gamma
    assert abs(lamb_shift(h, bath)) < 1e-3 * cfg.gamma


def test_guards():
    h = small_branch(n_bath=2)
    with pytest.raises(ValueError):
        exact_coefficients(h, [1.0, 0.5])
    p = exact_coefficients(h, [0.0, 1e-9])
    with pytest.raises(ShapeError):
        p.full_propagator()
    big = BranchHamiltonian(0, 1.0, np.ones(70) * 1e-40, 0.0, np.zeros(70), 0.0, np.arange(70) + 2.0)
    with pytest.raises(InstanceTooLargeError):
        exact_coefficients(big, [0.0], bath_tensor=True)
