"""Open quantum random walk data model and its block representation.

Index convention
----------------
``effects[(i, j)]`` is the effect matrix ``B_ij`` of the jump **from site j to
site i**.  Products of effects read right to left, so ``B_32 @ B_21`` moves
1 -> 2 -> 3.  Sites are 0-based inside the library; the CLI and the walk spec
files use 1-based site numbers and convert at the parse boundary.

The normalization constraint is a sum over *targets* for a fixed source::

    sum_i B_ij^* B_ij = I_n        for every source j
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensor, tolerances
from .tensor import DimensionError


class ValidationError(ValueError):
    """Raised when a walk violates the effect normalization constraint."""


@dataclass(frozen=True, eq=False)
class OqwModel:
    """Finite OQW on ``k`` sites with ``n``-dimensional internal space.

    Absent ``(i, j)`` entries of ``effects`` are zero matrices.
    """

    k: int
    n: int
    effects: dict
    label: str = ""

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be positive")
        clean = {}
        for (i, j), b in self.effects.items():
            if not (0 <= i < self.k and 0 <= j < self.k):
                raise IndexError(f"effect index {(i, j)} outside 0..{self.k - 1}")
            b = tensor.as_matrix(b)
            if b.shape != (self.n, self.n):
                raise DimensionError(f"effect {(i, j)} has shape {b.shape}, expected ({self.n}, {self.n})")
            clean[(int(i), int(j))] = b
        object.__setattr__(self, "effects", clean)

    def effect(self, i, j):
        b = self.effects.get((i, j))
        return np.zeros((self.n, self.n), dtype=complex) if b is None else b

    def targets(self, j):
        """Sites reachable from ``j`` in one step, with their effects."""
        return [(i, b) for (i, jj), b in sorted(self.effects.items()) if jj == j]

    def apply(self, state):
        """One step computed directly from the Kraus form (no superoperators)."""
        blocks = [np.zeros((self.n, self.n), dtype=complex) for _ in range(self.k)]
        for (i, j), b in self.effects.items():
            blocks[i] += b @ state.blocks[j] @ b.conj().T
        return SiteState(tuple(tensor.hermitize(x) for x in blocks))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    residuals: tuple
    offending: tuple
    tol: float

    @property
    def max_residual(self):
        return max(self.residuals) if self.residuals else 0.0


def validate(model, tol=tolerances.STRUCTURAL):
    """Check ``sum_i B_ij^* B_ij = I`` for every source ``j``.

    Returns a report rather than raising; ``residuals[j]`` is the spectral
    norm of ``sum_i B_ij^* B_ij - I``.
    """
    eye = np.eye(model.n)
    residuals = []
    for j in range(model.k):
        acc = np.zeros((model.n, model.n), dtype=complex)
        for _, b in model.targets(j):
            acc += b.conj().T @ b
        residuals.append(float(np.linalg.norm(acc - eye, 2)))
    offending = tuple(j for j, r in enumerate(residuals) if r > tol)
    return ValidationReport(not offending, tuple(residuals), offending, tol)


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """``k x k`` grid of ``n**2 x n**2`` superoperator blocks.

    Stored as the single ``k n**2`` square matrix; ``block(i, j)`` is the map
    carrying site ``j`` content to site ``i``.
    """

    k: int
    n: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        size = self.k * self.n * self.n
        if m.shape != (size, size):
            raise DimensionError(f"block operator for k={self.k}, n={self.n} needs shape {(size, size)}, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def d(self):
        return self.n * self.n

    def _sl(self, i):
        if not 0 <= i < self.k:
            raise IndexError(f"site {i} outside 0..{self.k - 1}")
        return slice(i * self.d, (i + 1) * self.d)

    def block(self, i, j):
        return self.matrix[self._sl(i), self._sl(j)]

    def blocks(self):
        return [[self.block(i, j) for j in range(self.k)] for i in range(self.k)]

    @classmethod
    def from_blocks(cls, grid):
        k = len(grid)
        d = np.asarray(grid[0][0]).shape[0]
        n = int(round(np.sqrt(d)))
        if n * n != d:
            raise DimensionError(f"block size {d} is not a perfect square")
        return cls(k, n, np.block([[np.asarray(b, dtype=complex) for b in row] for row in grid]))

    @classmethod
    def identity(cls, k, n):
        return cls(k, n, np.eye(k * n * n, dtype=complex))

    def with_matrix(self, m):
        return BlockOperator(self.k, self.n, m)

    def __matmul__(self, other):
        return self.with_matrix(self.matrix @ other.matrix)


def uniform_vector(k, n):
    """Stacked ``vec(I_n)`` for each of ``k`` sites (unnormalized)."""
    return np.tile(tensor.trace_functional(n), k)


def block_rep(model, tol=tolerances.STRUCTURAL):
    """Block representation with ``block(i, j) = B_ij (x) conj(B_ij)``.

    Raises
    ------
    ValidationError
        If the model fails :func:`validate`.
    """
    report = validate(model, tol)
    if not report.passed:
        raise ValidationError(
            f"effects leaving sites {[j + 1 for j in report.offending]} do not sum to I "
            f"(max residual {report.max_residual:.3g})"
        )
    d = model.n * model.n
    m = np.zeros((model.k * d, model.k * d), dtype=complex)
    for (i, j), b in model.effects.items():
        m[i * d:(i + 1) * d, j * d:(j + 1) * d] = tensor.conj_map_rep(b)
    return BlockOperator(model.k, model.n, m)


@dataclass(frozen=True, eq=False)
class SiteState:
    """Block density ``sum_i rho_i (x) |i><i|`` as the list of blocks ``rho_i``."""

    blocks: tuple
    tol: float = tolerances.STRUCTURAL

    def __post_init__(self):
        blocks = tuple(tensor.as_matrix(b) for b in self.blocks)
        if not blocks:
            raise ValueError("a state needs at least one site")
        n = blocks[0].shape[0]
        if any(b.shape != (n, n) for b in blocks):
            raise DimensionError("all site blocks must share one dimension")
        for i, b in enumerate(blocks):
            if not tensor.is_psd(b, self.tol):
                raise ValueError(f"block {i} is not Hermitian positive semidefinite "
                                 f"(min eigenvalue {tensor.min_eigenvalue(b):.3g})")
        total = sum(np.trace(b).real for b in blocks)
        if abs(total - 1.0) > max(self.tol, 1e-12):
            raise ValueError(f"total trace is {total}, expected 1")
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self):
        return len(self.blocks)

    @property
    def n(self):
        return self.blocks[0].shape[0]

    def vector(self):
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    @classmethod
    def from_vector(cls, v, k, n, tol=tolerances.STRUCTURAL):
        v = np.asarray(v, dtype=complex).reshape(k, n * n)
        return cls(tuple(tensor.hermitize(row.reshape(n, n)) for row in v), tol)

    @classmethod
    def concentrated(cls, k, site, rho):
        rho = tensor.as_matrix(rho)
        n = rho.shape[0]
        blocks = [np.zeros((n, n), dtype=complex) for _ in range(k)]
        blocks[site] = rho
        return cls(tuple(blocks))

    @classmethod
    def uniform(cls, k, n):
        return cls(tuple(np.eye(n, dtype=complex) / (k * n) for _ in range(k)))


# Largest anti-Hermitian part a step may produce before we call it a bug
# rather than rounding.
_HERMITIZE_LIMIT = 1e-10


def step(op, state):
    """One step of the walk through its block representation."""
    if (op.k, op.n) != (state.k, state.n):
        raise DimensionError(f"operator is for (k, n)={(op.k, op.n)}, state is {(state.k, state.n)}")
    v = op.matrix @ state.vector()
    raw = v.reshape(op.k, op.n, op.n)
    drift = float(np.max(np.abs(raw - raw.conj().transpose(0, 2, 1)))) / 2
    if drift > _HERMITIZE_LIMIT:
        raise ValueError(f"step produced a non-Hermitian block (drift {drift:.3g})")
    return SiteState.from_vector(v, op.k, op.n, tol=state.tol)


def evolve(op, state, r):
    if r < 0:
        raise ValueError("r must be non-negative")
    for _ in range(r):
        state = step(op, state)
    return state


def site_prob(state, i):
    if not 0 <= i < state.k:
        raise IndexError(f"site {i} outside 0..{state.k - 1}")
    return float(np.trace(state.blocks[i]).real)


def site_prob_via_rep(op, i, j, rho_i, r):
    """Probability of being at site ``j`` after ``r`` steps from ``rho_i`` at ``i``.

    Uses only the ``(j, i)`` block of ``[Phi]^r``.
    """
    power = np.linalg.matrix_power(op.matrix, r)
    blk = power[op._sl(j), op._sl(i)]
    return float(tensor.trace(tensor.superop_apply(blk, rho_i)).real)
