import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import golden
from oqwalk.builders import bloch_density, build_classical, random_density, random_unitary
from oqwalk.ergodic import NotErgodicError, classify, fundamental
from oqwalk.mhtf import (
    HypothesisError,
    assemble,
    bloch_grid,
    check_bracket_decomposition,
    check_constant_return,
    check_formula,
    check_l_trace,
    formula_residual,
    hermitian_basis,
    target_time,
    target_time_sweep,
)
from oqwalk.model import OqwModel, block_rep


def unital_pair(seed):
    """Two-site walk cut from a random 4x4 unitary: trace preserving and unital."""
    w = random_unitary(4, np.random.default_rng(seed))
    return OqwModel(2, 2, {(0, 0): w[:2, :2], (1, 0): w[2:, :2], (0, 1): w[:2, 2:], (1, 1): w[2:, 2:]})


def _tr(op, mat, i, j, rho):
    return complex(np.eye(op.n).reshape(-1) @ mat[op._sl(i), op._sl(j)] @ rho.reshape(-1))


def test_hermitian_basis_spans():
    basis = hermitian_basis(3)
    assert len(basis) == 9
    for b in basis:
        np.testing.assert_array_equal(b, b.conj().T)
    flat = np.array([b.reshape(-1) for b in basis])
    assert np.linalg.matrix_rank(flat) == 9


def test_assemble_blocks(pair_op):
    parts = assemble(pair_op)
    np.testing.assert_allclose(parts.D.block(0, 0), golden.K11, atol=1e-3)
    np.testing.assert_allclose(parts.D.block(1, 1), golden.K22, atol=1e-3)
    for i in range(2):
        np.testing.assert_array_equal(parts.N.block(i, i), 0)
    np.testing.assert_array_equal(parts.D.block(0, 1), 0)


def test_assemble_requires_ergodic():
    rng = np.random.default_rng(0)
    from oqwalk.builders import build_gate

    with pytest.raises(NotErgodicError):
        assemble(block_rep(build_gate(random_unitary(2, rng), 0.5, 0.5)))
    # classical chain with a non-uniform stationary law is outside the class
    with pytest.raises(NotErgodicError):
        check_constant_return(block_rep(build_classical([[0.9, 0.5], [0.1, 0.5]])), [np.ones((1, 1))])


def test_classical_doubly_stochastic_n_entries():
    p = np.array([[0.2, 0.8], [0.8, 0.2]])
    parts = assemble(block_rep(build_classical(p)))
    assert parts.N.matrix[0, 1].real == pytest.approx(1 / 0.8)
    assert parts.N.matrix[1, 0].real == pytest.approx(1 / 0.8)
    assert parts.D.matrix[0, 0].real == pytest.approx(2)


def test_two_site_values(pair_op, densities):
    parts = assemble(pair_op)
    dz = parts.D.matrix @ fundamental(pair_op).matrix
    for rho in densities:
        assert _tr(pair_op, parts.N.matrix, 0, 1, rho).real == pytest.approx(4 / 3, abs=1e-9)
        assert _tr(pair_op, parts.N.matrix, 1, 0, rho).real == pytest.approx(4 / 3, abs=1e-9)
        for i, j in [(0, 1), (1, 0)]:
            assert _tr(pair_op, dz, i, i, rho).real == pytest.approx(5 / 3, abs=1e-9)
            assert _tr(pair_op, dz, i, j, rho).real == pytest.approx(1 / 3, abs=1e-9)


def test_formula_on_examples(pair_op, cycle_op):
    rng = np.random.default_rng(1)
    for op in (pair_op, cycle_op):
        dens = hermitian_basis(2) + [random_density(2, rng) for _ in range(100)]
        rep = check_formula(op, dens)
        assert rep.formula_residual <= 1e-8
        assert rep.bracket_residual <= 1e-8
        assert rep.constant_return
        assert rep.normalized_residual <= 1e-8


def test_constant_return_values(pair_op, cycle_op):
    assert check_constant_return(pair_op, hermitian_basis(2)).c == pytest.approx(2)
    assert check_constant_return(cycle_op, hermitian_basis(2)).c == pytest.approx(3)


def test_bracket_term_and_l_trace(pair_op, cycle_op, densities):
    for op in (pair_op, cycle_op):
        parts = assemble(op)
        z = fundamental(op).matrix
        lz = parts.L.matrix @ z
        assert check_l_trace(op, densities, parts) <= 1e-10
        assert check_bracket_decomposition(op, densities, parts, z) <= 1e-8
        for rho in densities:
            assert _tr(op, lz, 0, 0, rho).real == pytest.approx(1, abs=1e-9)
            assert abs(_tr(op, lz, 0, 1, rho) - _tr(op, lz, 0, 0, rho)) <= 1e-9


def test_target_time_cycle3(cycle_op, densities):
    z = fundamental(cycle_op).matrix
    for rho in densities:
        for i in range(3):
            assert _tr(cycle_op, z, i, i, rho).real == pytest.approx(golden.CYCLE3_Z_DIAG_TRACE, abs=1e-5)
        t = target_time(cycle_op, rho, j=2)
        assert t.value == pytest.approx(golden.CYCLE3_TARGET_TIME, abs=1e-5)
        assert t.value == pytest.approx(15 / 13, abs=1e-12)
        assert t.j_spread <= 1e-9
        assert abs(t.value - t.via_fundamental) <= 1e-9


def test_target_time_classical_doubly_stochastic():
    rng = np.random.default_rng(2)
    perms = [np.eye(3)[list(s)] for s in itertools.permutations(range(3))]
    w = 0.5 * rng.dirichlet(np.ones(6)) + 0.5 / 6
    p = sum(x * m for x, m in zip(w, perms))
    zc = np.linalg.inv(np.eye(3) - p.T + np.full((3, 3), 1 / 3))
    t = target_time(block_rep(build_classical(p)), np.ones((1, 1)))
    assert t.value == pytest.approx(np.trace(zc) - 1, abs=1e-9)


def test_target_time_refuses_without_constant_return():
    op = block_rep(unital_pair(5))
    assert classify(op).is_ergodic
    cor = check_constant_return(op, hermitian_basis(2))
    assert not cor.applicable and "multiple of the trace" in cor.diagnostic
    with pytest.raises(HypothesisError):
        target_time(op, bloch_density(0, 0, 1))


def test_sweep(cycle_op, pair_op):
    sw = target_time_sweep(cycle_op, m=5)
    assert sw["points"] == len(bloch_grid(5))
    assert sw["max"] - sw["min"] <= 1e-6
    assert target_time_sweep(pair_op, m=3)["min"] == pytest.approx(1 / 3 * 2)
    with pytest.raises(ValueError):
        target_time_sweep(block_rep(build_classical(np.array([[0.5, 0.5], [0.5, 0.5]]))))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_formula_holds_on_random_unital_walks(seed):
    op = block_rep(unital_pair(seed))
    if not classify(op).is_ergodic:
        return
    basis = hermitian_basis(2)
    parts = assemble(op)
    z = fundamental(op).matrix
    assert formula_residual(op, basis, parts, z) <= 1e-7
    assert check_bracket_decomposition(op, basis, parts, z) <= 1e-7
    assert check_l_trace(op, basis, parts) <= 1e-7
