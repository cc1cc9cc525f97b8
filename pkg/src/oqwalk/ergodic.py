"""Ergodicity, the limit projector and the fundamental matrix."""

from dataclasses import dataclass

import numpy as np

from . import tolerances
from .model import BlockOperator, uniform_vector


class NotErgodicError(ValueError):
    """Raised when an operation requires a walk whose powers converge to Omega."""


def omega(k, n):
    """Rank-one projector onto the uniform maximally mixed block state.

    Every block equals ``(1/kn) sum_ab E_ab (x) E_ab``; as one matrix this is
    ``(1/kn) u u^T`` with ``u`` the stacked ``vec(I_n)``.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    u = uniform_vector(k, n)
    return BlockOperator(k, n, np.outer(u, u) / (k * n))


@dataclass(frozen=True)
class ErgodicityReport:
    is_ergodic: bool
    eigenvalues: tuple
    spectral_gap: float
    fixed_point_residual: float
    unit_circle_count: int
    diagnostic: str = ""


def classify(op, tol=tolerances.SPECTRAL):
    """Decide whether ``[Phi]^r`` converges to :func:`omega`.

    The walk is reported ergodic when (a) exactly one eigenvalue lies within
    ``tol`` of the unit circle and it is 1, and (b) the uniform stack ``u`` is
    fixed: ``[Phi] u = u``.
    """
    ev = np.linalg.eigvals(op.matrix)
    ev = ev[np.argsort(-np.abs(ev), kind="stable")]
    on_circle = ev[np.abs(np.abs(ev) - 1) <= tol]
    u = uniform_vector(op.k, op.n)
    fp = float(np.max(np.abs(op.matrix @ u - u)))
    gap = 1.0 - float(np.abs(ev[1])) if len(ev) > 1 else 1.0

    problems = []
    if len(on_circle) != 1:
        problems.append(f"{len(on_circle)} eigenvalues on the unit circle")
    elif abs(on_circle[0] - 1) > tol:
        problems.append(f"peripheral eigenvalue {on_circle[0]:.6g} is not 1")
    if fp > tol:
        problems.append(f"uniform state is not invariant (residual {fp:.3g})")
    return ErgodicityReport(
        is_ergodic=not problems,
        eigenvalues=tuple(complex(x) for x in ev),
        spectral_gap=gap,
        fixed_point_residual=fp,
        unit_circle_count=len(on_circle),
        diagnostic="; ".join(problems),
    )


def require_ergodic(op, tol=tolerances.SPECTRAL):
    report = classify(op, tol)
    if not report.is_ergodic:
        raise NotErgodicError(f"walk is not in the ergodic class: {report.diagnostic}")
    return report


@dataclass(frozen=True)
class PowerConvergence:
    converged: bool
    r_star: int
    residuals: tuple


def power_convergence(op, tol=1e-10, r_max=10_000):
    """Iterate ``[Phi]^r`` until the max-entry distance to Omega is ``<= tol``.

    ``r_star`` is the first power meeting the tolerance, or ``-1`` when
    ``r_max`` powers were not enough.
    """
    om = omega(op.k, op.n).matrix
    power = np.eye(op.matrix.shape[0], dtype=complex)
    residuals = []
    for r in range(1, r_max + 1):
        power = power @ op.matrix
        res = float(np.max(np.abs(power - om)))
        residuals.append(res)
        if res <= tol:
            return PowerConvergence(True, r, tuple(residuals))
    return PowerConvergence(False, -1, tuple(residuals))


def fundamental(op, tol=tolerances.SPECTRAL):
    """Fundamental matrix ``Z = (I - Phi + Omega)^{-1}``.

    Raises
    ------
    NotErgodicError
        If :func:`classify` rejects the walk.
    """
    require_ergodic(op, tol)
    size = op.matrix.shape[0]
    eye = np.eye(size, dtype=complex)
    a = eye - op.matrix + omega(op.k, op.n).matrix
    try:
        z = np.linalg.solve(a, eye)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"I - Phi + Omega is singular: {exc}") from exc
    return op.with_matrix(z)


def fundamental_series(op, tol=1e-12, r_max=100_000):
    """``I + sum_{r>=1} (Phi^r - Omega)``, truncated once terms fall below ``tol``.

    Slow; kept as an independent check on :func:`fundamental`.
    """
    om = omega(op.k, op.n).matrix
    size = op.matrix.shape[0]
    total = np.eye(size, dtype=complex)
    power = np.eye(size, dtype=complex)
    for _ in range(r_max):
        power = power @ op.matrix
        term = power - om
        total += term
        if np.max(np.abs(term)) <= tol:
            return op.with_matrix(total)
    raise RuntimeError(f"series for Z did not converge in {r_max} terms")


def identity_residuals(op, z=None, r_max=6):
    """Residuals of the algebraic identities linking Phi, Omega and Z.

    Keys: ``phi_omega`` (``Phi Omega = Omega Phi = Omega``), ``binomial``
    (``(Phi - Omega)^r = Phi^r - Omega`` for ``r <= r_max``), ``z_omega``,
    ``z_left`` / ``z_right`` (``Z (I - Phi) = (I - Phi) Z = I - Omega``),
    ``z_inverse`` and ``z_trace`` (column sums of ``u^T Z`` equal ``u^T``).
    """
    phi = op.matrix
    om = omega(op.k, op.n).matrix
    eye = np.eye(phi.shape[0], dtype=complex)
    z = fundamental(op).matrix if z is None else np.asarray(getattr(z, "matrix", z))

    def mx(a):
        return float(np.max(np.abs(a)))

    binom = 0.0
    power = eye
    diff_power = eye
    for _ in range(r_max):
        power = power @ phi
        diff_power = diff_power @ (phi - om)
        binom = max(binom, mx(diff_power - (power - om)))
    u = uniform_vector(op.k, op.n)
    return {
        "phi_omega": max(mx(phi @ om - om), mx(om @ phi - om)),
        "binomial": binom,
        "z_omega": max(mx(z @ om - om), mx(om @ z - om)),
        "z_left": mx(z @ (eye - phi) - (eye - om)),
        "z_right": mx((eye - phi) @ z - (eye - om)),
        "z_inverse": mx(z @ (eye - phi + om) - eye),
        "z_trace": mx(u @ z - u),
    }
