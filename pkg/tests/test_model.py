import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import golden
from oqwalk import tensor
from oqwalk.builders import (
    bloch_density,
    build_classical,
    build_cycle3,
    build_gate,
    build_npath,
    build_pq_pair,
    classical_coin,
    cycle3_coin,
    general_coin,
    hadamard_split_coin,
    random_density,
    random_unitary,
)
from oqwalk.model import (
    BlockOperator,
    OqwModel,
    SiteState,
    ValidationError,
    block_rep,
    evolve,
    site_prob,
    site_prob_via_rep,
    step,
    validate,
)


def _random_state(k, n, rng):
    w = rng.dirichlet(np.ones(k))
    return SiteState(tuple(x * random_density(n, rng) for x in w))


def test_validate_examples(pair_model):
    rep = validate(pair_model)
    assert rep.passed and rep.max_residual < 1e-15
    assert validate(OqwModel(1, 2, {(0, 0): np.eye(2)})).passed
    L, R = hadamard_split_coin()
    eye = np.eye(2)
    assert validate(OqwModel(3, 2, {(0, 1): L, (2, 1): R, (1, 0): eye, (1, 2): eye})).passed


def test_validate_reports_residual():
    model = OqwModel(1, 1, {(0, 0): [[np.sqrt(0.9)]]})
    rep = validate(model)
    assert not rep.passed
    assert rep.offending == (0,) or list(rep.offending) == [0]
    assert rep.max_residual == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        block_rep(model)


def test_model_rejects_bad_effects():
    with pytest.raises(IndexError):
        OqwModel(2, 1, {(2, 0): [[1.0]]})
    with pytest.raises(tensor.DimensionError):
        OqwModel(1, 2, {(0, 0): np.eye(3)})


def test_block_rep_matches_printed(pair_op):
    np.testing.assert_allclose(pair_op.matrix, golden.PHI_ROTATION_PAIR, atol=1e-12)


def test_block_rep_pq_pattern():
    A = np.diag([0.6, 0.8j])
    B = np.array([[0, 0.6], [0.8, 0]])
    op = block_rep(build_pq_pair(A, B))
    blk = op.block(0, 0)
    np.testing.assert_allclose(blk, np.diag([0.36, 0.6 * np.conj(0.8j), 0.8j * 0.6, 0.64]))
    blk = op.block(0, 1)
    assert blk[1, 2] == pytest.approx(0.48) and blk[0, 3] == pytest.approx(0.36)


def test_pq_walk_ignores_offdiagonal_entries():
    A = np.diag([0.6, 0.8j])
    B = np.array([[0, 0.6], [0.8, 0]])
    op = block_rep(build_pq_pair(A, B))
    base = np.diag([0.7, 0.3]).astype(complex)
    tilted = base + np.array([[0, 0.2 - 0.1j], [0.2 + 0.1j, 0]])
    s1 = SiteState.concentrated(2, 0, base)
    s2 = SiteState.concentrated(2, 0, tilted)
    for _ in range(6):
        s1, s2 = step(op, s1), step(op, s2)
        for i in range(2):
            assert abs(site_prob(s1, i) - site_prob(s2, i)) <= 1e-12


def test_classical_embedding_rep_is_p():
    rng = np.random.default_rng(3)
    p = rng.uniform(size=(4, 4))
    p /= p.sum(axis=0)
    np.testing.assert_allclose(block_rep(build_classical(p)).matrix.real, p, atol=1e-15)
    swap = np.array([[0, 1], [1, 0]])
    np.testing.assert_array_equal(block_rep(build_classical(swap)).matrix, swap)
    np.testing.assert_array_equal(block_rep(build_classical(np.eye(3))).matrix, np.eye(3))
    with pytest.raises(ValidationError):
        build_classical([[0.5, 0.5], [0.4, 0.5]])


def test_classical_site_probabilities_follow_p():
    rng = np.random.default_rng(4)
    p = rng.uniform(size=(4, 4))
    p /= p.sum(axis=0)
    op = block_rep(build_classical(p))
    dist = rng.dirichlet(np.ones(4))
    state = SiteState(tuple(np.array([[x]]) for x in dist))
    for r in range(1, 6):
        state = step(op, state)
        want = np.linalg.matrix_power(p, r) @ dist
        got = [site_prob(state, i) for i in range(4)]
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_uniform_state_is_fixed(pair_op):
    s = SiteState.uniform(2, 2)
    out = step(pair_op, s)
    for a, b in zip(out.blocks, s.blocks):
        np.testing.assert_allclose(a, b, atol=1e-15)
    assert site_prob(s, 0) == pytest.approx(0.5)


def test_gate_step_and_steady_state():
    rng = np.random.default_rng(5)
    U = random_unitary(2, rng)
    lam, om = 0.3, 0.7
    op = block_rep(build_gate(U, lam, om))
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi /= np.linalg.norm(psi)
    pp = np.outer(psi, psi.conj())
    out = step(op, SiteState.concentrated(2, 0, pp))
    np.testing.assert_allclose(out.blocks[0], lam * pp, atol=1e-12)
    np.testing.assert_allclose(out.blocks[1], om * U @ pp @ U.conj().T, atol=1e-12)
    again = step(op, out)
    for a, b in zip(again.blocks, out.blocks):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_gate_parameters_checked():
    with pytest.raises(ValidationError):
        build_gate(np.eye(2), 0.5, 0.6)
    with pytest.raises(ValidationError):
        build_gate(np.array([[1, 1], [0, 1]]), 0.5, 0.5)
    stay = block_rep(build_gate(np.eye(2), 1.0, 0.0))
    s = evolve(stay, SiteState.concentrated(2, 0, bloch_density(0.2)), 5)
    assert site_prob(s, 0) == pytest.approx(1.0)


def test_two_step_spread_on_path():
    # start in the middle of a 5-site path; two steps never reach the borders
    L, R = general_coin(0.6, 0.8, 0.8, -0.6)
    op = block_rep(build_npath(L, R, 5))
    rho = bloch_density(0.1, 0.5, -0.3)
    out = evolve(op, SiteState.concentrated(5, 2, rho), 2)

    def conj(c):
        return c @ rho @ c.conj().T

    np.testing.assert_allclose(out.blocks[0], conj(L @ L), atol=1e-12)
    np.testing.assert_allclose(out.blocks[2], conj(L @ R) + conj(R @ L), atol=1e-12)
    np.testing.assert_allclose(out.blocks[4], conj(R @ R), atol=1e-12)
    assert site_prob(out, 0) == pytest.approx(np.trace(conj(L @ L)).real)


def test_npath_structure():
    two = build_npath(*hadamard_split_coin(), 2)
    assert set(two.effects) == {(1, 0), (0, 1)}
    with pytest.raises(ValueError):
        build_npath(*hadamard_split_coin(), 1)
    with pytest.raises(ValidationError):
        build_npath(np.eye(2), np.eye(2), 3)
    op = block_rep(build_npath(*classical_coin(), 3))
    s = step(op, SiteState.concentrated(3, 1, bloch_density(0.4)))
    assert site_prob(s, 0) == pytest.approx(0.5) and site_prob(s, 2) == pytest.approx(0.5)


def test_cycle3_layout(cycle_op):
    L, R = cycle3_coin()
    np.testing.assert_allclose(cycle_op.block(0, 0), 0)
    np.testing.assert_allclose(cycle_op.block(0, 1), tensor.conj_map_rep(R))
    np.testing.assert_allclose(cycle_op.block(1, 0), tensor.conj_map_rep(L))
    classical = block_rep(build_cycle3(*classical_coin(1)))
    np.testing.assert_allclose(classical.matrix.real, [[0, .5, .5], [.5, 0, .5], [.5, .5, 0]])


def test_evolve_and_site_prob_via_rep(pair_op):
    rng = np.random.default_rng(6)
    s = _random_state(2, 2, rng)
    assert evolve(pair_op, s, 0) is s
    a, b = evolve(pair_op, s, 2), step(pair_op, step(pair_op, s))
    for x, y in zip(a.blocks, b.blocks):
        np.testing.assert_allclose(x, y)
    with pytest.raises(ValueError):
        evolve(pair_op, s, -1)
    rho = random_density(2, rng)
    assert site_prob_via_rep(pair_op, 0, 0, rho, 0) == pytest.approx(1)
    assert site_prob_via_rep(pair_op, 0, 1, rho, 0) == pytest.approx(0)
    assert site_prob_via_rep(pair_op, 0, 1, rho, 1) == pytest.approx(0.75)
    for _ in range(50):
        i, j, r = rng.integers(2), rng.integers(2), rng.integers(0, 6)
        rho = random_density(2, rng)
        direct = site_prob(evolve(pair_op, SiteState.concentrated(2, i, rho), r), j)
        assert site_prob_via_rep(pair_op, i, j, rho, r) == pytest.approx(direct, abs=1e-12)


def test_long_run_reaches_uniform(pair_op):
    s = evolve(pair_op, SiteState.concentrated(2, 0, bloch_density(0, 0, 1)), 200)
    for b in s.blocks:
        np.testing.assert_allclose(b, np.eye(2) / 4, atol=1e-8)


def test_site_state_validation():
    with pytest.raises(ValueError):
        SiteState((np.eye(2),))
    with pytest.raises(ValueError):
        SiteState((np.diag([1.2, -0.2]),))
    with pytest.raises(tensor.DimensionError):
        SiteState((np.eye(2) / 4, np.eye(3) / 6))
    with pytest.raises(IndexError):
        site_prob(SiteState.uniform(2, 2), 5)


def test_block_operator_helpers(pair_op):
    grid = [[pair_op.block(i, j) for j in range(2)] for i in range(2)]
    again = BlockOperator.from_blocks(grid)
    np.testing.assert_array_equal(again.matrix, pair_op.matrix)
    eye = BlockOperator.identity(2, 2)
    np.testing.assert_array_equal((pair_op @ eye).matrix, pair_op.matrix)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["pair", "cycle", "gate"]))
def test_step_preserves_form_and_matches_kraus(seed, which):
    from oqwalk.builders import build_cycle3_walk, build_rotation_pair

    rng = np.random.default_rng(seed)
    model = {"pair": build_rotation_pair, "cycle": build_cycle3_walk,
             "gate": lambda: build_gate(random_unitary(2, rng), 0.4, 0.6)}[which]()
    op = block_rep(model)
    s = _random_state(model.k, model.n, rng)
    a, b = step(op, s), model.apply(s)
    total = sum(np.trace(x).real for x in a.blocks)
    assert abs(total - 1) <= 1e-12
    for x, y in zip(a.blocks, b.blocks):
        assert tensor.is_hermitian(x)
        assert tensor.min_eigenvalue(x) >= -1e-10
        np.testing.assert_allclose(x, y, atol=1e-12)
