import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import golden
from oqwalk.builders import build_classical, build_gate, random_density, random_unitary
from oqwalk.ergodic import (
    NotErgodicError,
    classify,
    fundamental,
    fundamental_series,
    identity_residuals,
    omega,
    power_convergence,
)
from oqwalk.model import OqwModel, SiteState, block_rep, step


def test_omega_k2_n2():
    om = omega(2, 2)
    expected = np.zeros((8, 8))
    idx = [0, 3, 4, 7]
    for a in idx:
        for b in idx:
            expected[a, b] = 0.25
    np.testing.assert_array_equal(om.matrix, expected)
    np.testing.assert_allclose(om.matrix @ om.matrix, om.matrix, atol=1e-15)
    for i in range(2):
        for j in range(2):
            np.testing.assert_array_equal(om.block(i, j), om.block(0, 0))


def test_omega_maps_states_to_uniform():
    rng = np.random.default_rng(0)
    w = rng.dirichlet(np.ones(3))
    s = SiteState(tuple(x * random_density(2, rng) for x in w))
    out = step(omega(3, 2), s)
    for b in out.blocks:
        np.testing.assert_allclose(b, np.eye(2) / 6, atol=1e-15)
    with pytest.raises(ValueError):
        omega(0, 2)


def test_classify_examples(pair_op, cycle_op):
    for op in (pair_op, cycle_op):
        rep = classify(op)
        assert rep.is_ergodic, rep.diagnostic
        mods = np.abs(rep.eigenvalues)
        assert np.all(np.diff(mods) <= 1e-12)
        assert rep.spectral_gap == pytest.approx(1 - mods[1])
        assert rep.fixed_point_residual < 1e-12


def test_classify_rejects_gate_and_identity():
    rng = np.random.default_rng(1)
    gate = block_rep(build_gate(random_unitary(2, rng), 0.5, 0.5))
    rep = classify(gate)
    assert not rep.is_ergodic and rep.unit_circle_count > 1
    ident = block_rep(OqwModel(2, 2, {(0, 0): np.eye(2), (1, 1): np.eye(2)}))
    assert not classify(ident).is_ergodic
    with pytest.raises(NotErgodicError):
        fundamental(gate)


def test_classify_rejects_nonuniform_invariant_state():
    p = np.array([[0.9, 0.5], [0.1, 0.5]])
    rep = classify(block_rep(build_classical(p)))
    assert not rep.is_ergodic and "uniform" in rep.diagnostic


def test_power_convergence(pair_op):
    conv = power_convergence(pair_op, tol=1e-10)
    assert conv.converged
    lam2 = np.abs(classify(pair_op).eigenvalues[1])
    r = np.arange(1, len(conv.residuals) + 1)
    slope = np.polyfit(r[20:], np.log(conv.residuals[20:]), 1)[0]
    assert slope == pytest.approx(np.log(lam2), abs=0.02)
    assert power_convergence(omega(2, 2)).r_star == 1
    ident = block_rep(OqwModel(2, 1, {(0, 0): [[1.0]], (1, 1): [[1.0]]}))
    bad = power_convergence(ident, r_max=50)
    assert not bad.converged and bad.r_star == -1


def test_fundamental_matches_printed(pair_op):
    np.testing.assert_allclose(fundamental(pair_op).matrix, golden.Z_ROTATION_PAIR, atol=1e-3)


def test_fundamental_of_omega_is_identity():
    om = omega(2, 2)
    np.testing.assert_allclose(fundamental(om).matrix, np.eye(8), atol=1e-12)


def test_series_agrees_with_inverse(pair_op, cycle_op):
    for op in (pair_op, cycle_op):
        a, b = fundamental(op).matrix, fundamental_series(op).matrix
        assert np.max(np.abs(a - b)) <= 1e-6


def test_identity_residuals(pair_op, cycle_op):
    for op in (pair_op, cycle_op):
        res = identity_residuals(op)
        assert res["binomial"] <= 1e-12 and res["phi_omega"] <= 1e-12
        for key in ("z_omega", "z_left", "z_right", "z_inverse", "z_trace"):
            assert res[key] <= 1e-10, key


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_z_preserves_trace(seed):
    rng = np.random.default_rng(seed)
    from oqwalk.builders import build_cycle3_walk

    op = block_rep(build_cycle3_walk())
    w = rng.dirichlet(np.ones(3))
    v = np.concatenate([(x * random_density(2, rng)).reshape(-1) for x in w])
    out = (fundamental(op).matrix @ v).reshape(3, 2, 2)
    assert abs(sum(np.trace(b) for b in out) - 1) <= 1e-10
