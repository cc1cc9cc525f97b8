"""Minimal polynomial of ``[Phi]`` and the finite hitting-time formula.

The minimal polynomial is found as the first linear dependence among the
flattened powers ``I, M, M^2, ...``.  When every entry of ``M`` is a rational
number with a small denominator the elimination runs over
:class:`fractions.Fraction`, which reproduces printed coefficients such as
``25/256`` exactly; otherwise a singular-value rank test on the Krylov matrix
is used.

For an ergodic walk ``p(x) = (x - 1) f(x)`` and, with
``f(x) = x^r + a_1 x^{r-1} + ... + a_r`` (``a_0 = 1``)::

    Tr(N_ij rho) = 1/f(1) sum_{s<r} sum_{l<=r-s-1} a_l Tr([(D Phi^s)_ii - (D Phi^s)_ij] rho)
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import tensor
from .model import uniform_vector

log = logging.getLogger(__name__)

DENOMINATOR_BOUND = 2 ** 12
RECOGNITION_TOL = 1e-13
KRYLOV_TOL = 1e-9


class NotRootError(ValueError):
    """``p(1) != 0``: 1 is not an eigenvalue, so the walk cannot be ergodic."""


@dataclass(frozen=True)
class RationalPolynomial:
    """Monic polynomial, coefficients highest degree first.

    Coefficients are :class:`~fractions.Fraction` for exact results and
    ``complex``/``float`` for the floating backend.
    """

    coeffs: tuple

    def __post_init__(self):
        if not self.coeffs or self.coeffs[0] != 1:
            raise ValueError("polynomial must be monic")

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def exact(self):
        return all(isinstance(c, (Fraction, int)) for c in self.coeffs)

    def __call__(self, x):
        acc = 0
        for c in self.coeffs:
            acc = acc * x + c
        return acc

    def at_matrix(self, m):
        m = np.asarray(m, dtype=complex)
        acc = np.zeros_like(m)
        eye = np.eye(m.shape[0], dtype=complex)
        for c in self.coeffs:
            acc = acc @ m + complex(c) * eye
        return acc

    def as_strings(self):
        return [str(c) if isinstance(c, (Fraction, int)) else _fmt_float(c) for c in self.coeffs]

    def as_decimals(self):
        return [complex(c).real if abs(complex(c).imag) < 1e-14 else complex(c) for c in self.coeffs]

    def __str__(self):
        terms = []
        for power, c in zip(range(self.degree, -1, -1), self.coeffs):
            if c == 0:
                continue
            mono = "" if power == 0 else ("x" if power == 1 else f"x^{power}")
            coef = str(c) if isinstance(c, (Fraction, int)) else _fmt_float(c)
            if mono and c == 1:
                terms.append(f"+ {mono}")
            elif mono:
                terms.append(f"+ ({coef}){mono}")
            else:
                terms.append(f"+ ({coef})")
        return " ".join(terms).lstrip("+ ") or "0"


def _fmt_float(c):
    c = complex(c)
    return f"{c.real:.12g}" if abs(c.imag) < 1e-14 else f"{c:.12g}"


@dataclass(frozen=True)
class MinPolyReport:
    p: RationalPolynomial
    f: RationalPolynomial
    f_at_1: object
    backend: str
    notice: str = ""


def recognize_rational(m, bound=DENOMINATOR_BOUND, tol=RECOGNITION_TOL):
    """Exact rational copy of ``m`` (list of rows of Fractions) or ``None``."""
    m = np.asarray(m, dtype=complex)
    if np.max(np.abs(m.imag), initial=0.0) > tol:
        return None
    rows = []
    for row in m.real:
        out = []
        for x in row:
            q = Fraction(float(x)).limit_denominator(bound)
            if abs(float(q) - x) > tol:
                return None
            out.append(q)
        rows.append(out)
    return rows


def _matmul_exact(a, b):
    n = len(a)
    bt = list(zip(*b))
    return [[sum((a[i][t] * bt[j][t] for t in range(n) if a[i][t]), Fraction(0)) for j in range(n)]
            for i in range(n)]


def _minpoly_exact(rows):
    """First dependence among flattened exact powers by incremental elimination.

    Each stored basis vector is kept together with the combination of powers
    that produced it, so the dependence coefficients come out directly.
    """
    n = len(rows)
    identity = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    basis = []  # (pivot, reduced vector, combination over powers)
    power = identity
    d = 0
    while True:
        vec_ = [x for row in power for x in row]
        comb = [Fraction(0)] * d + [Fraction(1)]
        for pivot, bvec, bcomb in basis:
            f = vec_[pivot]
            if f:
                vec_ = [x - f * y for x, y in zip(vec_, bvec)]
                comb = [x - f * (bcomb[t] if t < len(bcomb) else 0) for t, x in enumerate(comb)]
        pivot = next((t for t, x in enumerate(vec_) if x), None)
        if pivot is None:
            # comb . (I, M, ..., M^d) == 0 with comb[d] == 1
            return tuple(reversed(comb))
        inv = 1 / vec_[pivot]
        vec_ = [x * inv for x in vec_]
        comb = [x * inv for x in comb]
        for t, (bp, bv, bc) in enumerate(basis):
            f = bv[pivot]
            if f:
                basis[t] = (bp, [x - f * y for x, y in zip(bv, vec_)],
                            [(bc[s] if s < len(bc) else 0) - f * comb[s] for s in range(len(comb))])
        basis.append((pivot, vec_, comb))
        power = _matmul_exact(power, rows)
        d += 1


def _minpoly_float(m, tol=KRYLOV_TOL):
    size = m.shape[0]
    cols = [np.eye(size, dtype=complex).reshape(-1)]
    power = np.eye(size, dtype=complex)
    for d in range(1, size + 1):
        power = power @ m
        cols.append(power.reshape(-1))
        k = np.array(cols).T
        scale = np.linalg.norm(k, axis=0)
        scale[scale == 0] = 1
        sv = np.linalg.svd(k / scale, compute_uv=False)
        if sv[-1] <= tol * sv[0]:
            coef, *_ = np.linalg.lstsq(k[:, :-1], -k[:, -1], rcond=None)
            return tuple([1.0 + 0j] + [complex(c) for c in coef[::-1]])
    raise RuntimeError("no annihilating polynomial found up to the matrix dimension")


def minimal_polynomial(op_or_matrix):
    """Minimal polynomial of a block operator's matrix (or of a raw matrix)."""
    m = getattr(op_or_matrix, "matrix", op_or_matrix)
    m = np.asarray(m, dtype=complex)
    rows = recognize_rational(m)
    notice = ""
    if rows is not None:
        p = RationalPolynomial(_minpoly_exact(rows))
        backend = "exact"
    else:
        notice = "entries not recognized as rationals; floating Krylov backend used"
        log.info(notice)
        p = RationalPolynomial(_minpoly_float(m))
        backend = "floating"
    try:
        f = factor_root1(p)
        f1 = f(1)
    except NotRootError:
        f, f1 = None, None
    return MinPolyReport(p, f, f1, backend, notice)


def factor_root1(p, tol=1e-9):
    """Synthetic division of ``p`` by ``x - 1``; returns the monic quotient ``f``."""
    coeffs = list(p.coeffs)
    out = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(c + out[-1])
    remainder = coeffs[-1] + out[-1] if len(coeffs) > 1 else coeffs[0]
    if len(coeffs) == 1 or (remainder != 0 if p.exact else abs(complex(remainder)) > tol):
        raise NotRootError(f"p(1) = {remainder}: eigenvalue 1 is missing")
    return RationalPolynomial(tuple(out))


def reduction_coeffs(f, m):
    """Row vector ``alpha_m = alpha_0 C^m`` with ``C`` the companion-type matrix of ``f``.

    ``x^(r+m) = q_m(x) f(x) + alpha_m . (x^(r-1), ..., x, 1)``.
    """
    a = list(f.coeffs[1:])
    r = len(a)
    alpha = [-x for x in a]
    for _ in range(m):
        # alpha C: first column carries -a_t, subdiagonal shifts left
        alpha = [alpha[0] * (-a[t]) + (alpha[t + 1] if t + 1 < r else 0) for t in range(r)]
    return alpha


def tail_coeffs(f):
    """``b_n = -(sum_{l=r-n}^{r} a_l) / f(1)`` for ``n = 0 .. r-1`` (``a_0 = 1``)."""
    a = list(f.coeffs)
    r = len(a) - 1
    f1 = f(1)
    return [-sum(a[r - n:]) / f1 for n in range(r)]


def f_rank_one_residual(op, f):
    """Distance of the columns of ``f([Phi])`` from ``span{u}`` (max over columns)."""
    fm = f.at_matrix(op.matrix)
    u = uniform_vector(op.k, op.n)
    uu = u / np.linalg.norm(u)
    proj = np.outer(uu, uu.conj()) @ fm
    return float(np.max(np.abs(fm - proj)))


def _diff_functional(op, mat, i, j, rho):
    tr = tensor.trace_functional(op.n)
    v = tensor.as_matrix(rho).reshape(-1)
    a = mat[op._sl(i), op._sl(i)] - mat[op._sl(i), op._sl(j)]
    return complex(tr @ (a @ v))


def finite_formula_value(op, i, j, rho, f, D):
    """Finite minimal-polynomial formula for ``Tr(N_ij rho)``.

    ``D`` is the block-diagonal return-time operator (a matrix or a
    :class:`~oqwalk.model.BlockOperator`).
    """
    if i == j:
        return 0.0
    dm = getattr(D, "matrix", D)
    a = [complex(c) for c in f.coeffs]
    r = f.degree
    f1 = complex(f(1))
    total = 0j
    power = np.eye(op.matrix.shape[0], dtype=complex)
    for s in range(r):
        weight = sum(a[: r - s])
        total += weight * _diff_functional(op, dm @ power, i, j, rho)
        power = power @ op.matrix
    return float((total / f1).real)


def series_formula_value(op, i, j, rho, D, tail_tol=1e-10, max_terms=100_000):
    """``sum_s Tr([(D Phi^s)_ii - (D Phi^s)_ij] rho)`` summed until the terms
    decay below ``tail_tol`` (geometric for ergodic walks)."""
    if i == j:
        return 0.0
    dm = getattr(D, "matrix", D)
    total = 0j
    cur = dm.copy()
    for _ in range(max_terms):
        term = _diff_functional(op, cur, i, j, rho)
        total += term
        # the difference of the two column blocks tends to 0 for every rho
        blk = cur[op._sl(i), op._sl(i)] - cur[op._sl(i), op._sl(j)]
        if np.max(np.abs(blk)) < tail_tol:
            return float(total.real)
        cur = cur @ op.matrix
    raise RuntimeError("series form did not converge")


def tail_difference_residual(op, f, i, j, M):
    """Compare ``sum_{m<=M} [(Phi^{r+m})_ii - (Phi^{r+m})_ij]`` with
    ``sum_n b_n [(Phi^n)_ii - (Phi^n)_ij]``; returns the max entry difference."""
    r = f.degree
    b = [complex(x) for x in tail_coeffs(f)]
    phi = op.matrix
    eye = np.eye(phi.shape[0], dtype=complex)

    def diff(m):
        return m[op._sl(i), op._sl(i)] - m[op._sl(i), op._sl(j)]

    low = sum((b[n] * diff(np.linalg.matrix_power(phi, n)) for n in range(r)), np.zeros((op.d, op.d), complex))
    power = np.linalg.matrix_power(phi, r) if r else eye
    high = np.zeros((op.d, op.d), dtype=complex)
    for _ in range(M + 1):
        high += diff(power)
        power = power @ phi
    return float(np.max(np.abs(high - low)))
