"""Mean hitting time formula, its corollaries and the target time.

All identities are checked at the level of trace functionals: for a block
superoperator ``A`` the number ``Tr(A_ij rho)`` is ``vec(I) . A_ij vec(rho)``.
Because that is linear in ``rho``, checking it on the ``n**2`` elements of
:func:`hermitian_basis` certifies it for every density.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor, tolerances
from .ergodic import fundamental, require_ergodic
from .hitting import all_bundles
from .model import BlockOperator


class HypothesisError(ValueError):
    """The constant-return-time hypothesis needed for the target time fails."""


def hermitian_basis(n):
    """Real basis of the ``n x n`` Hermitian matrices built from matrix units.

    ``E_aa``, ``E_ab + E_ba`` and ``i (E_ab - E_ba)`` for ``a < b``.
    """
    basis = []
    for a in range(n):
        for b in range(n):
            m = np.zeros((n, n), dtype=complex)
            if a == b:
                m[a, a] = 1
            elif a < b:
                m[a, b] = m[b, a] = 1
            else:
                m[b, a] = 1j
                m[a, b] = -1j
            basis.append(m)
    return basis


@dataclass(frozen=True, eq=False)
class Assembled:
    """Operators of the formula: ``K``, ``D = diag(k_ii)``, ``N = K - D``, ``L = K - N Phi``."""

    K: BlockOperator
    D: BlockOperator
    N: BlockOperator
    L: BlockOperator


def assemble(op, tol=tolerances.SPECTRAL):
    """Build ``K``, ``D``, ``N`` and ``L`` from the hitting bundles of every site.

    Raises
    ------
    NotErgodicError
        If ``op`` is not in the ergodic class.
    """
    require_ergodic(op, tol)
    bundles = all_bundles(op, tol)
    d = op.d
    size = op.k * d
    kmat = np.zeros((size, size), dtype=complex)
    dmat = np.zeros_like(kmat)
    for b in bundles:
        i = b.target
        for j in range(op.k):
            if j == i:
                kmat[op._sl(i), op._sl(i)] = b.k_return
                dmat[op._sl(i), op._sl(i)] = b.k_return
            else:
                kmat[op._sl(i), op._sl(j)] = b.k_row[j]
    nmat = kmat - dmat
    lmat = kmat - nmat @ op.matrix
    return Assembled(*(op.with_matrix(m) for m in (kmat, dmat, nmat, lmat)))


def _tr(op, mat, i, j, rho):
    blk = mat[op._sl(i), op._sl(j)]
    return complex(tensor.trace_functional(op.n) @ (blk @ tensor.as_matrix(rho).reshape(-1)))


@dataclass(frozen=True)
class MhtfReport:
    formula_residual: float
    constant_return: bool
    c_value: float
    normalized_residual: float
    bracket_residual: float


@dataclass(frozen=True)
class ConstantReturnCheck:
    applicable: bool
    c: float
    residual: float
    diagnostic: str = ""


def formula_residual(op, densities, parts=None, z=None):
    """Max of ``|Tr(N_ij rho) - Tr([(DZ)_ii - (DZ)_ij] rho)|`` over ``i, j, rho``."""
    parts = assemble(op) if parts is None else parts
    z = fundamental(op).matrix if z is None else z
    dz = parts.D.matrix @ z
    nm = parts.N.matrix
    worst = 0.0
    for rho in densities:
        for i in range(op.k):
            for j in range(op.k):
                lhs = _tr(op, nm, i, j, rho)
                rhs = _tr(op, dz, i, i, rho) - _tr(op, dz, i, j, rho)
                worst = max(worst, abs(lhs - rhs))
    return worst


def check_constant_return(op, densities, tol=1e-9, parts=None, z=None):
    """Test the constant-return-time hypothesis and, if it holds, the formula
    ``Tr((D^{-1} N)_ij rho) = Tr([Z_ii - Z_ij] rho)``.

    Applicability is decided on the functional row vectors ``vec(I)^T k_ii``,
    which must all equal ``c vec(I)^T`` for one ``c``, and ``D`` must be
    invertible.
    """
    parts = assemble(op) if parts is None else parts
    z = fundamental(op).matrix if z is None else z
    tr = tensor.trace_functional(op.n)
    cs, problems = [], []
    for i in range(op.k):
        row = tr @ parts.D.block(i, i)
        c = complex(row @ tr.conj()) / op.n
        cs.append(c)
        dev = float(np.max(np.abs(row - c * tr)))
        if dev > tol:
            problems.append(f"Tr(k_{i + 1}{i + 1} .) is not a multiple of the trace (deviation {dev:.3g})")
    c = cs[0]
    if max(abs(x - c) for x in cs) > tol:
        problems.append("return-time constants differ between sites: " + ", ".join(f"{x.real:.6g}" for x in cs))
    smin = float(np.linalg.svd(parts.D.matrix, compute_uv=False)[-1])
    if smin <= tol:
        problems.append(f"D is singular (smallest singular value {smin:.3g})")
    if problems:
        return ConstantReturnCheck(False, float(c.real), float("nan"), "; ".join(problems))
    dn = np.linalg.solve(parts.D.matrix, parts.N.matrix)
    worst = 0.0
    for rho in densities:
        for i in range(op.k):
            for j in range(op.k):
                lhs = _tr(op, dn, i, j, rho)
                rhs = _tr(op, z, i, i, rho) - _tr(op, z, i, j, rho)
                worst = max(worst, abs(lhs - rhs))
    return ConstantReturnCheck(True, float(c.real), worst)


def check_l_trace(op, densities, parts=None):
    """Max of ``|Tr(L_ij rho) - Tr(rho)|`` over all ``i, j`` and ``rho``."""
    parts = assemble(op) if parts is None else parts
    worst = 0.0
    for rho in densities:
        t = np.trace(tensor.as_matrix(rho))
        for i in range(op.k):
            for j in range(op.k):
                worst = max(worst, abs(_tr(op, parts.L.matrix, i, j, rho) - t))
    return worst


def check_bracket_decomposition(op, densities, parts=None, z=None):
    """Residual of ``N_ij = (DZ)_ii - (DZ)_ij + [(LZ)_ij - (LZ)_ii]``.

    Returns the max over the operator identity itself (block-wise, all
    ``i != j``), its trace functional on ``densities``, and the cancellation
    ``Tr((LZ)_ii rho) = Tr((LZ)_ij rho) = Tr(rho)``.
    """
    parts = assemble(op) if parts is None else parts
    z = fundamental(op).matrix if z is None else z
    dz = parts.D.matrix @ z
    lz = parts.L.matrix @ z
    nm = parts.N.matrix
    worst = 0.0

    def blk(m, a, b):
        return m[op._sl(a), op._sl(b)]

    for i in range(op.k):
        for j in range(op.k):
            if i == j:
                continue
            full = blk(dz, i, i) - blk(dz, i, j) + blk(lz, i, j) - blk(lz, i, i)
            worst = max(worst, float(np.max(np.abs(blk(nm, i, j) - full))))
    for rho in densities:
        t = np.trace(tensor.as_matrix(rho))
        for i in range(op.k):
            for j in range(op.k):
                lhs = _tr(op, nm, i, j, rho)
                rhs = (_tr(op, dz, i, i, rho) - _tr(op, dz, i, j, rho)
                       + _tr(op, lz, i, j, rho) - _tr(op, lz, i, i, rho))
                worst = max(worst, abs(lhs - rhs), abs(_tr(op, lz, i, j, rho) - t))
    return worst


def check_formula(op, densities, tol=1e-9):
    """Run the formula, its normalized form and the bracket decomposition on ``densities``."""
    parts = assemble(op)
    z = fundamental(op).matrix
    cor = check_constant_return(op, densities, tol, parts, z)
    return MhtfReport(
        formula_residual=formula_residual(op, densities, parts, z),
        constant_return=cor.applicable,
        c_value=cor.c,
        normalized_residual=cor.residual,
        bracket_residual=check_bracket_decomposition(op, densities, parts, z),
    )


@dataclass(frozen=True)
class TargetTime:
    value: float
    via_fundamental: float
    start_site: int
    j_spread: float
    c: float


def target_time(op, rho, j=0, tol=1e-9):
    """Target time ``t(rho) = sum_i Tr((D^{-1} N)_ij rho)``.

    Also evaluates ``sum_i Tr(Z_ii rho) - 1`` and the spread of the first
    formula over all start sites ``j`` (zero up to rounding when the
    hypotheses hold).

    Raises
    ------
    HypothesisError
        If the return-time functionals are not a common multiple of the trace.
    """
    parts = assemble(op)
    z = fundamental(op).matrix
    cor = check_constant_return(op, hermitian_basis(op.n), tol, parts, z)
    if not cor.applicable:
        raise HypothesisError(f"target time undefined: {cor.diagnostic}")
    dn = np.linalg.solve(parts.D.matrix, parts.N.matrix)
    per_j = [sum(_tr(op, dn, i, jj, rho) for i in range(op.k)).real for jj in range(op.k)]
    via_z = sum(_tr(op, z, i, i, rho) for i in range(op.k)).real - 1.0
    return TargetTime(
        value=float(per_j[j]),
        via_fundamental=float(via_z),
        start_site=j,
        j_spread=float(max(per_j) - min(per_j)),
        c=cor.c,
    )


def bloch_grid(m):
    """Points of a ``m``-latitude grid on the Bloch sphere (plus the centre)."""
    pts = [(0.0, 0.0, 0.0)]
    for theta in np.linspace(0, np.pi, m):
        for phi in np.linspace(0, 2 * np.pi, 2 * m, endpoint=False):
            pts.append((np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)))
    return pts


def target_time_sweep(op, m=7):
    """Min and max of the target time over a Bloch-sphere grid (``n = 2``)."""
    from .builders import bloch_density

    if op.n != 2:
        raise ValueError("the Bloch sweep needs degree n = 2")
    values = [target_time(op, bloch_density(*p)).via_fundamental for p in bloch_grid(m)]
    return {"min": min(values), "max": max(values), "points": len(values)}
