"""Constructors for the concrete walks used throughout the package.

All builders return a validated :class:`~oqwalk.model.OqwModel` (0-based
sites) and raise :class:`~oqwalk.model.ValidationError` on bad input.
"""

import numpy as np

from . import tensor, tolerances
from .model import OqwModel, ValidationError, validate

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _checked(model, tol=tolerances.STRUCTURAL):
    report = validate(model, tol)
    if not report.passed:
        raise ValidationError(
            f"{model.label or 'walk'}: normalization fails at sources "
            f"{[j + 1 for j in report.offending]} (max residual {report.max_residual:.3g})"
        )
    return model


def _check_coin(L, R, tol):
    L = tensor.as_matrix(L)
    R = tensor.as_matrix(R)
    resid = np.linalg.norm(L.conj().T @ L + R.conj().T @ R - np.eye(L.shape[0]), 2)
    if resid > tol:
        raise ValidationError(f"L*L + R*R differs from I by {resid:.3g}")
    return L, R


def hadamard_split_coin():
    """The Hadamard matrix cut into a left row and a right row."""
    s = 1 / np.sqrt(2)
    L = s * np.array([[1, 1], [0, 0]], dtype=complex)
    R = s * np.array([[0, 0], [1, -1]], dtype=complex)
    return L, R


def general_coin(x, y, z, w):
    """``L = [[x, y], [0, 0]]``, ``R = [[0, 0], [z, w]]``."""
    L = np.array([[x, y], [0, 0]], dtype=complex)
    R = np.array([[0, 0], [z, w]], dtype=complex)
    return L, R


def classical_coin(n=2):
    """``L = R = I / sqrt(2)``: the fair classical coin embedded at degree ``n``."""
    c = np.eye(n, dtype=complex) / np.sqrt(2)
    return c, c.copy()


def build_classical(p, tol=1e-12):
    """Embed a column-stochastic matrix as an ``n = 1`` walk.

    ``p[i, j]`` is the probability of moving from ``j`` to ``i`` (columns sum
    to one), matching the source/target reading of ``B_ij``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError("transition matrix must be square")
    if np.any(p < -tol) or np.max(np.abs(p.sum(axis=0) - 1)) > tol:
        raise ValidationError("transition matrix must be column-stochastic with non-negative entries")
    k = p.shape[0]
    effects = {(i, j): np.array([[np.sqrt(max(p[i, j], 0.0))]])
               for i in range(k) for j in range(k) if p[i, j] > 0}
    return _checked(OqwModel(k, 1, effects, label="classical"))


def build_npath(L, R, N, tol=tolerances.STRUCTURAL):
    """Walk on the path ``0 .. N-1`` with reflecting ends.

    Interior sites move left with ``L`` and right with ``R``; site 0 moves to
    1 and site ``N-1`` moves to ``N-2``, both with effect ``I``.
    """
    if N < 2:
        raise ValueError("a path needs at least two sites")
    L, R = _check_coin(L, R, tol)
    eye = np.eye(L.shape[0], dtype=complex)
    effects = {(1, 0): eye, (N - 2, N - 1): eye}
    for j in range(1, N - 1):
        effects[(j - 1, j)] = L
        effects[(j + 1, j)] = R
    return _checked(OqwModel(N, L.shape[0], effects, label=f"{N}-path"), tol)


def build_gate(U, lam, omega, tol=tolerances.STRUCTURAL):
    """Two-node gate: stay with ``sqrt(lam) I`` / ``sqrt(omega) I``, cross with ``U``.

    ``B_11 = sqrt(lam) I``, ``B_22 = sqrt(omega) I``, ``B_21 = sqrt(omega) U``,
    ``B_12 = sqrt(lam) U^*``.
    """
    U = tensor.as_matrix(U)
    if lam < 0 or omega < 0 or abs(lam + omega - 1) > tol:
        raise ValidationError(f"need lam, omega >= 0 with lam + omega = 1, got {lam}, {omega}")
    if np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2) > tol:
        raise ValidationError("U is not unitary")
    eye = np.eye(U.shape[0], dtype=complex)
    effects = {
        (0, 0): np.sqrt(lam) * eye,
        (1, 1): np.sqrt(omega) * eye,
        (1, 0): np.sqrt(omega) * U,
        (0, 1): np.sqrt(lam) * U.conj().T,
    }
    return _checked(OqwModel(2, U.shape[0], effects, label="gate"), tol)


def build_cycle3(L, R, tol=tolerances.STRUCTURAL):
    """Three-site cycle with block layout ``[[0, R, L], [L, 0, R], [R, L, 0]]``."""
    L, R = _check_coin(L, R, tol)
    effects = {(0, 1): R, (0, 2): L, (1, 0): L, (1, 2): R, (2, 0): R, (2, 1): L}
    return _checked(OqwModel(3, L.shape[0], effects, label="cycle3"), tol)


def build_pq_pair(A, B, tol=tolerances.STRUCTURAL):
    """Two-site walk ``[[A], [B]], [[B], [A]]`` built from PQ-matrices ``A``, ``B``."""
    A, B = _check_coin(A, B, tol)
    effects = {(0, 0): A, (0, 1): B, (1, 0): B, (1, 1): A}
    return _checked(OqwModel(2, A.shape[0], effects, label="pq-pair"), tol)


def build_rotation_pair():
    s = np.sqrt(3) / 2
    effects = {
        (0, 0): 0.5 * np.eye(2),
        (0, 1): s * np.eye(2),
        (1, 0): s * SIGMA_X,
        (1, 1): 0.5j * np.array([[0, -1], [1, 0]]),
    }
    return _checked(OqwModel(2, 2, effects, label="example-6-3"))


def cycle3_coin():
    s = 1 / np.sqrt(3)
    L = s * np.array([[1, 1], [0, 1]], dtype=complex)
    R = s * np.array([[1, 0], [-1, 1]], dtype=complex)
    return L, R


def build_cycle3_walk():
    model = build_cycle3(*cycle3_coin())
    return OqwModel(model.k, model.n, model.effects, label="cycle3")


def bloch_density(x1, x2=0.0, x3=0.0):
    """``rho = (I + x1 sx + x2 sy + x3 sz) / 2`` for a Bloch vector of norm <= 1."""
    if x1 * x1 + x2 * x2 + x3 * x3 > 1 + 1e-12:
        raise ValueError(f"Bloch vector ({x1}, {x2}, {x3}) lies outside the unit ball")
    return 0.5 * (np.eye(2) + x1 * SIGMA_X + x2 * SIGMA_Y + x3 * SIGMA_Z)


def bloch_x1(rho):
    """``x1 = 2 Re(rho_12)``."""
    return 2.0 * float(np.real(np.asarray(rho)[0, 1]))


def random_density(n, rng, rank=None):
    """Random density matrix from a complex Ginibre matrix."""
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
