"""Complex matrix kernel.

Matrices are plain ``numpy`` complex arrays.  The vectorization convention is
**row stacking** throughout the package::

    vec([[a, b], [c, d]]) == [a, b, c, d]

With row stacking ``vec(A X B^T) = kron(A, B) vec(X)``, so the conjugation map
``X -> C X C^*`` is represented by ``kron(C, conj(C))``.  Switching to column
stacking would silently transpose every superoperator in the package.
"""

import numpy as np

from . import tolerances


class DimensionError(ValueError):
    """Raised when matrix or vector shapes do not fit together."""


def as_matrix(m):
    """Return ``m`` as a square, finite complex array.

    Raises
    ------
    DimensionError
        If ``m`` is not a square 2-d array.
    ValueError
        If ``m`` contains NaN or infinite entries.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def vec(m):
    """Row-major flattening of a square matrix."""
    return as_matrix(m).reshape(-1)


def unvec(v, n):
    """Inverse of :func:`vec`: reshape a length ``n**2`` vector to ``n x n``."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != n * n:
        raise DimensionError(f"vector of length {v.shape[0]} cannot be reshaped to {n}x{n}")
    return v.reshape(n, n)


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def conj_map_rep(c):
    """Superoperator matrix of ``X -> c X c^*`` under row stacking.

    Parameters
    ----------
    c : array_like, shape (n, n)

    Returns
    -------
    ndarray, shape (n**2, n**2)
        ``kron(c, conj(c))``.
    """
    c = as_matrix(c)
    return np.kron(c, c.conj())


def apply_conj(c, x):
    """Return ``c x c^*``."""
    c = as_matrix(c)
    x = as_matrix(x)
    if c.shape != x.shape:
        raise DimensionError(f"cannot conjugate {x.shape} matrix by {c.shape} matrix")
    return c @ x @ c.conj().T


def trace(m):
    return complex(np.trace(as_matrix(m)))


def hermitize(m):
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def is_hermitian(m, tol=tolerances.STRUCTURAL):
    m = as_matrix(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def min_eigenvalue(m):
    """Smallest eigenvalue of the Hermitian part of ``m``.

    Used as a graded PSD diagnostic: a value slightly below zero tells how far
    from positive semidefinite the matrix is, which Cholesky cannot.
    """
    return float(np.linalg.eigvalsh(hermitize(as_matrix(m)))[0])


def is_psd(m, tol=tolerances.STRUCTURAL):
    """Hermitian with every eigenvalue ``>= -tol``."""
    return is_hermitian(m, tol) and min_eigenvalue(m) >= -tol


def superop_apply(s, x):
    """Apply an ``n**2 x n**2`` superoperator matrix to an ``n x n`` matrix."""
    x = as_matrix(x)
    return unvec(np.asarray(s) @ x.reshape(-1), x.shape[0])


def trace_functional(n):
    """Row vector ``vec(I_n)``; ``trace_functional(n) @ vec(X) == Tr(X)``."""
    return np.eye(n, dtype=complex).reshape(-1)
