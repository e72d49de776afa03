import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qnmqubit.bath import BathSpec, discretize
from qnmqubit.errors import DegenerateForcingError, InvalidConfigError, ShapeError
from qnmqubit.hamiltonian import (
    BranchHamiltonian,
    Displacements,
    build_branch,
    check_weak_nonlinearity,
    linear_term_residual,
    qubit_basis_transform,
    solve_displacements,
)
from qnmqubit.physparams import HBAR, phi0

from conftest import small_branch
from oracles import oracle_residual, symbolic_linear_terms


def test_displacement_against_symbolic_expansion():
    rng = np.random.default_rng(7)
    for _ in range(10):
        h = small_branch(rng, n_bath=3, forced=True)
        d = solve_displacements(h)
        assert oracle_residual(h, d) <= 1e-12
        assert linear_term_residual(h, d) <= 1e-12


def test_symbolic_linear_coefficient_form():
    # the b' coefficient is -(hbar Omega lam + sum g_j lam_j) + i xi
    _, linear = symbolic_linear_terms(1)
    sym = {x.name: x for x in linear[0].free_symbols}
    hb, Om, xi, g0, lam, l0 = (sym[k] for k in ("hbar", "Omega", "xi", "g0", "lam", "l0"))
    assert sp.simplify(linear[0] - (-hb * Om * lam - g0 * l0 + sp.I * xi)) == 0


def test_displacement_offset_matches_energy():
    # the constant left over is hbar N - f' lam
    h = small_branch(np.random.default_rng(3), n_bath=3, forced=True)
    h = BranchHamiltonian(0, h.shifted_frequency, h.couplings, h.resonant_forcing, h.bath_forcings, 1e6, h.bath_frequencies)
    d = solve_displacements(h)
    f = h.forcing_vector()
    m = h.mode_matrix()
    lam = d.vector
    # classical energy at the minimum, H(-lam): lam' M lam - f'lam - lam'f + hbar N
    energy = np.real(np.vdot(lam, m @ lam) - np.vdot(f, lam) - np.vdot(lam, f)) + HBAR * 1e6
    assert d.offset == pytest.approx(energy, rel=1e-9)


def test_degenerate_forcing():
    h = BranchHamiltonian(0, 1.0, [HBAR], 1e-30, [0.0], 0.0, [1.0])
    with pytest.raises(DegenerateForcingError):
        solve_displacements(h)


def test_build_branch_signs(cfg):
    bath = discretize(BathSpec.default(cfg.gamma), cfg)
    h0, h1 = build_branch(0, cfg, bath), build_branch(1, cfg, bath)
    np.testing.assert_array_equal(h1.couplings, -h0.couplings)
    assert h1.resonant_forcing == -h0.resonant_forcing
    mid = 0.5 * (h0.shifted_frequency + h1.shifted_frequency)
    assert mid == pytest.approx(cfg.resonant_angular_frequency, rel=1e-15)
    dw = h0.shifted_frequency - cfg.resonant_angular_frequency
    p = phi0(cfg)
    assert dw == pytest.approx(p**2 * cfg.josephson_energy * math.cos(cfg.classical_flux_phase) / HBAR, rel=1e-3)
    h1b = h0.opposite(cfg.resonant_angular_frequency)
    np.testing.assert_allclose(h1b.couplings, h1.couplings)
    assert h1b.shifted_frequency == pytest.approx(h1.shifted_frequency, rel=1e-15)


def test_quarter_turn_kills_couplings(cfg):
    c = cfg.with_(classical_flux_phase=math.pi / 2)
    bath = discretize(BathSpec.default(c.gamma), c)
    h = build_branch(0, c, bath)
    assert np.max(np.abs(h.couplings)) <= 1e-16 * np.max(np.abs(h.bath_forcings))


def test_gate_charge_warning(cfg):
    bath = discretize(BathSpec.default(cfg.gamma), cfg)
    with pytest.warns(UserWarning, match="gate charge"):
        build_branch(0, cfg.with_(gate_charge=0.3), bath)
    with pytest.raises(InvalidConfigError):
        build_branch(2, cfg, bath)


def test_without_forcing():
    h = small_branch(forced=True)
    assert h.is_forced and not h.without_forcing().is_forced


def test_shape_errors():
    with pytest.raises(ShapeError):
        BranchHamiltonian(0, 1.0, [1.0, 2.0], 0.0, [0.0], 0.0, [1.0])


def test_weak_nonlinearity(cfg):
    assert check_weak_nonlinearity(cfg, 4.0)
    with pytest.warns(UserWarning):
        assert not check_weak_nonlinearity(cfg, 1e5)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
@settings(max_examples=60, deadline=None)
def test_qubit_transform_is_involution(c0, c1):
    if abs(c0) + abs(c1) < 1e-6:
        return
    c = np.array([c0, c1]) / np.linalg.norm([c0, c1])
    np.testing.assert_allclose(qubit_basis_transform(qubit_basis_transform(c)), c, atol=1e-12)
    assert np.linalg.norm(qubit_basis_transform(c)) == pytest.approx(1.0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_opposite_is_involution(seed):
    h = small_branch(np.random.default_rng(seed), n_bath=3, forced=True)
    back = h.opposite(1.23e9).opposite(1.23e9)
    np.testing.assert_array_equal(back.couplings, h.couplings)
    assert back.shifted_frequency == pytest.approx(h.shifted_frequency, rel=1e-15)
    assert back.branch == h.branch


def test_zero_displacements():
    d = Displacements.zero(3)
    assert d.vector.shape == (4,) and not np.any(d.vector)
