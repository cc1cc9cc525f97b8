"""Hitting probabilities and mean hitting times as superoperators.

For a target site ``i`` the *taboo operator* ``Q_i`` is ``[Phi]`` with block
row ``i`` zeroed, so ``(Q_i^r)_{lj}`` sums the length-``r`` paths ``j -> l``
that never enter ``i``.  Summing over the final jump into ``i``::

    h_ij = [Phi (I - Q_i)^{-1}]_{ij}          hitting probability operator
    k_ij = [Phi (I - Q_i)^{-2}]_{ij}          mean hitting time operator

using ``sum_{r>=1} r Q^{r-1} = (I - Q)^{-2}``.  The first-return operator
``k_ii`` follows from a first-step decomposition.

Values are the trace functional applied to these maps: ``h_ij(rho) =
Tr(h_ij rho)``.  The *value* ``k_ii(rho)`` is 0 by convention (visits are
counted from time zero); the first-return time ``Tr(k_ii rho)`` is exposed
separately as :func:`return_value`.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from . import tensor, tolerances


class NonAbsorbingError(ValueError):
    """The taboo operator has spectral radius ~1: the target may never be hit."""


@dataclass(frozen=True, eq=False)
class TabooOperator:
    base: object
    taboo_site: int
    matrix: np.ndarray
    spectral_radius: float


def taboo(op, i, tol=tolerances.SPECTRAL, require_absorbing=True):
    """Copy of ``op`` with block row ``i`` zeroed.

    Raises
    ------
    NonAbsorbingError
        If the spectral radius is ``>= 1 - tol`` and ``require_absorbing``.
    """
    q = op.matrix.copy()
    q[op._sl(i), :] = 0
    rad = float(np.max(np.abs(np.linalg.eigvals(q)))) if q.size else 0.0
    if require_absorbing and rad >= 1 - tol:
        raise NonAbsorbingError(
            f"taboo operator for site {i + 1} has spectral radius {rad:.12g}; "
            "the walk is not absorbed at that site"
        )
    return TabooOperator(op, i, q, rad)


def first_visit_dist(op, i, j, rho, r_max):
    """``[b_0, ..., b_rmax]``: probability of first reaching ``i`` at step ``r``.

    Starting at site ``i`` itself gives ``[1, 0, 0, ...]``.
    """
    rho = tensor.as_matrix(rho)
    out = np.zeros(r_max + 1)
    if i == j:
        out[0] = 1.0
        return out
    q = taboo(op, i, require_absorbing=False).matrix
    tr = tensor.trace_functional(op.n)
    row_i = op.matrix[op._sl(i), :]
    v = np.zeros(op.matrix.shape[0], dtype=complex)
    v[op._sl(j)] = rho.reshape(-1)
    for r in range(1, r_max + 1):
        out[r] = float((tr @ (row_i @ v)).real)
        v = q @ v
    return out


def first_visit_bruteforce(model, i, j, rho, r):
    """``b_r`` by enumerating every effect word ``C`` of length ``r``.

    Independent of any superoperator: sums ``Tr(C rho C^*)`` over site
    sequences ``j -> l_1 -> ... -> l_{r-1} -> i`` with all ``l_t != i``.
    Exponential in ``r``; meant for small oracle checks.
    """
    rho = tensor.as_matrix(rho)
    if i == j:
        return 1.0 if r == 0 else 0.0
    if r == 0:
        return 0.0
    others = [s for s in range(model.k) if s != i]
    total = 0.0
    for mid in itertools.product(others, repeat=r - 1):
        seq = (j,) + mid + (i,)
        c = np.eye(model.n, dtype=complex)
        for src, dst in zip(seq[:-1], seq[1:]):
            b = model.effects.get((dst, src))
            if b is None:
                break
            c = b @ c
        else:
            total += float(np.trace(c @ rho @ c.conj().T).real)
    return total


@dataclass(frozen=True, eq=False)
class HittingBundle:
    """Row ``i`` of the hitting operators.

    ``h_row[j]`` and ``k_row[j]`` are ``n**2 x n**2`` superoperators;
    ``h_row[i]`` is the identity map, ``k_row[i]`` the zero map, and
    ``k_return`` the first-return operator ``k_ii``.
    """

    target: int
    n: int
    h_row: tuple
    k_row: tuple
    k_return: np.ndarray
    spectral_radius: float


def _return_operator(op, i, h_row, k_row):
    ret = op.block(i, i).copy()
    for l in range(op.k):
        if l != i:
            ret += (h_row[l] + k_row[l]) @ op.block(l, i)
    return ret


def _pack(op, i, h_full, k_full, rad):
    d = op.d
    eye = np.eye(d, dtype=complex)
    h_row, k_row = [], []
    for j in range(op.k):
        if j == i:
            h_row.append(eye)
            k_row.append(np.zeros((d, d), dtype=complex))
        else:
            h_row.append(h_full[op._sl(i), op._sl(j)].copy())
            k_row.append(k_full[op._sl(i), op._sl(j)].copy())
    k_ret = _return_operator(op, i, h_row, k_row)
    return HittingBundle(i, op.n, tuple(h_row), tuple(k_row), k_ret, rad)


def hitting_bundle(op, i, tol=tolerances.SPECTRAL):
    """Hitting operators towards site ``i`` via the taboo resolvent."""
    t = taboo(op, i, tol)
    size = op.matrix.shape[0]
    res = np.linalg.solve(np.eye(size) - t.matrix, np.eye(size, dtype=complex))
    h_full = op.matrix @ res
    k_full = h_full @ res
    return _pack(op, i, h_full, k_full, t.spectral_radius)


def series_bundle(op, i, tol=1e-12, max_terms=200_000):
    """Same operators as :func:`hitting_bundle` by summing the path series.

    Adds ``Phi Q^m`` and ``(m+1) Phi Q^m`` until a geometric bound on the
    remaining tail of the mean-time series (using the spectral radius of
    ``Q``) falls below ``tol``.
    """
    t = taboo(op, i)
    lam = t.spectral_radius
    h_full = np.zeros_like(op.matrix)
    k_full = np.zeros_like(op.matrix)
    term = op.matrix.copy()
    for m in range(max_terms):
        h_full += term
        k_full += (m + 1) * term
        term = term @ t.matrix
        norm = float(np.linalg.norm(term, 2))
        if norm == 0.0:
            break
        # bound on sum_{q>=0} (m+2+q) ||Phi Q^(m+1+q)||
        tail = norm * ((m + 2) / (1 - lam) + lam / (1 - lam) ** 2)
        if tail < tol:
            break
    else:
        raise RuntimeError(f"hitting series for site {i + 1} did not converge in {max_terms} terms")
    return _pack(op, i, h_full, k_full, lam)


def _functional(s, rho, n):
    return float((tensor.trace_functional(n) @ (s @ tensor.as_matrix(rho).reshape(-1))).real)


def hit_value(bundle, j, rho):
    """``h_ij(rho)``: probability of ever reaching the target from ``rho`` at ``j``."""
    return _functional(bundle.h_row[j], rho, bundle.n)


def mht_value(bundle, j, rho):
    """``k_ij(rho)``; zero when ``j`` is the target."""
    if j == bundle.target:
        return 0.0
    return _functional(bundle.k_row[j], rho, bundle.n)


def return_value(bundle, rho):
    """Mean first-return time ``Tr(k_ii rho)``."""
    return _functional(bundle.k_return, rho, bundle.n)


def all_bundles(op, tol=tolerances.SPECTRAL):
    return [hitting_bundle(op, i, tol) for i in range(op.k)]
