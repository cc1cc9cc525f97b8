"""Quantum trajectory sampling of hitting times, and the N-path experiments.

From ``(rho, j)`` the walk jumps to ``(B_ij rho B_ij^* / p, i)`` with
probability ``p = Tr(B_ij rho B_ij^*)``.  Trajectories are simulated in
vectorized batches; the uniform variate used by trajectory ``t`` at step ``s``
is a hash of ``(master_seed, t, s)``, so a run is bitwise reproducible no
matter how trajectories are split into chunks or threads.
"""

import itertools
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import tensor, tolerances
from .builders import bloch_x1, build_npath, hadamard_split_coin
from .hitting import hitting_bundle, mht_value
from .model import block_rep

log = logging.getLogger(__name__)

CHUNK = 8192
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STEP_MIX = np.uint64(0xD1B54A32D192ED03)


class DegenerateStepError(RuntimeError):
    """No outgoing jump has positive probability."""


def _splitmix64(x):
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + _GOLDEN
        z = x
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def trajectory_keys(master_seed, indices):
    """Per-trajectory 64-bit stream keys derived from ``master_seed``."""
    idx = np.asarray(indices, dtype=np.uint64)
    seed = np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        return _splitmix64(_splitmix64(np.full(idx.shape, seed, dtype=np.uint64)) ^ (idx * _GOLDEN))


def stream_uniforms(keys, step):
    """Uniform variates in ``[0, 1)`` for the given keys at one step."""
    with np.errstate(over="ignore"):
        x = _splitmix64(np.asarray(keys, dtype=np.uint64) ^ (np.uint64(step) * _STEP_MIX))
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class TrajectoryConfig:
    target_site: int
    start_site: int
    rho: np.ndarray = field(repr=False)
    n_traj: int = 100_000
    max_steps: int = 10_000
    master_seed: int = 0

    def __post_init__(self):
        if self.n_traj < 1 or self.max_steps < 1:
            raise ValueError("n_traj and max_steps must be at least 1")


@dataclass(frozen=True)
class HittingEstimate:
    mean: float
    stderr: float
    timeouts: int
    samples: int
    histogram: tuple = ()

    @property
    def hit_fraction(self):
        return self.samples / (self.samples + self.timeouts)

    def empirical_b(self, r_max):
        total = self.samples + self.timeouts
        h = np.zeros(r_max + 1)
        m = min(len(self.histogram), r_max + 1)
        h[:m] = np.asarray(self.histogram[:m]) / total
        return h


def _jump_probs(b, rho):
    out = np.einsum("ab,tbc,dc->tad", b, rho, b.conj())
    return out, np.einsum("taa->t", out).real


def sample_step(model, j, rho, rng):
    """One measured step from ``rho`` at site ``j``; returns ``(i, rho')``."""
    rho = tensor.as_matrix(rho)
    targets = model.targets(j)
    probs, new = [], []
    for i, b in targets:
        x = b @ rho @ b.conj().T
        new.append(x)
        probs.append(float(np.trace(x).real))
    probs = np.array(probs)
    total = probs.sum()
    if total <= 1e-14:
        raise DegenerateStepError(f"no jump out of site {j + 1} has positive probability")
    if abs(total - 1) > 1e-10:
        log.warning("jump probabilities from site %d sum to %.15g; renormalizing", j + 1, total)
    probs = probs / total
    t = min(int(np.searchsorted(np.cumsum(probs), rng.random(), side="right")), len(probs) - 1)
    return targets[t][0], tensor.hermitize(new[t] / (probs[t] * total))


def simulate_chunk(model, config, indices):
    """Hitting times for trajectories ``indices``; ``-1`` marks a timeout."""
    indices = np.asarray(indices)
    count = len(indices)
    times = np.full(count, -1, dtype=np.int64)
    if config.start_site == config.target_site:
        times[:] = 0
        return times
    keys = trajectory_keys(config.master_seed, indices)
    n = model.n
    rho = np.broadcast_to(tensor.as_matrix(config.rho), (count, n, n)).copy()
    sites = np.full(count, config.start_site, dtype=np.int64)
    active = np.arange(count)
    out_edges = {j: [(i, b) for i, b in model.targets(j)] for j in range(model.k)}
    for step in range(1, config.max_steps + 1):
        if active.size == 0:
            break
        u = stream_uniforms(keys[active], step)
        cur = sites[active]
        for j in np.unique(cur):
            sel = cur == j
            sub = active[sel]
            su = u[sel]
            edges = out_edges[int(j)]
            outs, probs = zip(*(_jump_probs(b, rho[sub]) for _, b in edges))
            probs = np.stack(probs, axis=1)
            total = probs.sum(axis=1)
            if np.any(total <= 1e-14):
                raise DegenerateStepError(f"no jump out of site {int(j) + 1} has positive probability")
            drift = float(np.max(np.abs(total - 1)))
            if drift > 1e-10:
                log.warning("jump probabilities from site %d drift by %.3g; renormalizing", int(j) + 1, drift)
            cum = np.cumsum(probs / total[:, None], axis=1)
            choice = np.minimum((su[:, None] >= cum).sum(axis=1), len(edges) - 1)
            for t, (i, _) in enumerate(edges):
                pick = choice == t
                if not np.any(pick):
                    continue
                x = outs[t][pick] / probs[pick, t][:, None, None]
                rho[sub[pick]] = 0.5 * (x + x.conj().transpose(0, 2, 1))
                sites[sub[pick]] = i
        hit = sites[active] == config.target_site
        times[active[hit]] = step
        active = active[~hit]
    return times


def sample_hitting_times(model, config, threads=None):
    """Per-trajectory hitting times (``-1`` for timeouts), in trajectory order."""
    threads = tolerances.default_threads() if threads is None else threads
    chunks = [np.arange(s, min(s + CHUNK, config.n_traj)) for s in range(0, config.n_traj, CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        parts = [simulate_chunk(model, config, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: simulate_chunk(model, config, c), chunks))
    return np.concatenate(parts)


def sample_hitting_time(model, config, threads=None):
    """Monte Carlo estimate of the mean hitting time.

    Timeouts are excluded from the mean and reported; a warning is issued if
    they exceed a fraction of ``1e-6``.
    """
    times = sample_hitting_times(model, config, threads)
    done = times[times >= 0]
    timeouts = int(times.size - done.size)
    if timeouts > 1e-6 * times.size:
        warnings.warn(f"{timeouts} of {times.size} trajectories hit max_steps={config.max_steps}")
    if done.size == 0:
        return HittingEstimate(float("nan"), float("nan"), timeouts, 0, ())
    mean = float(np.mean(done))
    stderr = float(np.std(done, ddof=1) / np.sqrt(done.size)) if done.size > 1 else 0.0
    hist = tuple(int(c) for c in np.bincount(done))
    return HittingEstimate(mean, stderr, timeouts, int(done.size), hist)


@dataclass(frozen=True)
class NpathResult:
    N: int
    x1: float
    value: float
    stderr: float
    conjecture: float
    residual: float
    classical: float
    mode: str


def npath_experiment(L, R, N, rho, mode="exact", n_traj=100_000, seed=0, threads=None):
    """Mean time to cross the ``N``-path from its first to its last site.

    Reports the value, the ``(N-1)^2 + 2 x1`` prediction, their difference and
    the classical ``(N-1)^2``.
    """
    model = build_npath(L, R, N)
    rho = tensor.as_matrix(rho)
    x1 = bloch_x1(rho) if rho.shape == (2, 2) else 0.0
    if mode == "exact":
        value = mht_value(hitting_bundle(block_rep(model), N - 1), 0, rho)
        stderr = 0.0
    elif mode == "sampled":
        est = sample_hitting_time(model, TrajectoryConfig(N - 1, 0, rho, n_traj, 10_000, seed), threads)
        value, stderr = est.mean, est.stderr
    else:
        raise ValueError(f"unknown mode {mode!r}; use 'exact' or 'sampled'")
    conj = (N - 1) ** 2 + 2 * x1
    return NpathResult(N, x1, value, stderr, conj, value - conj, float((N - 1) ** 2), mode)


def word_product(word, L, R):
    """``C_n ... C_1`` for ``word = (C_1, ..., C_n)`` over the letters ``'L'``/``'R'``."""
    c = np.eye(L.shape[0], dtype=complex)
    for letter in word:
        c = (L if letter == "L" else R) @ c
    return c


def pattern_trace(word, coin, rho):
    """Closed-form ``Tr(C rho C^*)`` for a row-split coin.

    With ``L = [[x, y], [0, 0]]`` and ``R = [[0, 0], [z, w]]`` every product
    is rank one: a jump ``L`` after ``L`` contributes ``|x|^2``, ``L`` after
    ``R`` ``|y|^2``, ``R`` after ``L`` ``|z|^2``, ``R`` after ``R`` ``|w|^2``,
    and the first letter contributes ``<v|rho|v>`` for its row ``v``.
    """
    x, y, z, w = coin
    rho = tensor.as_matrix(rho)
    row = {"L": np.array([x, y]), "R": np.array([z, w])}
    link = {("L", "L"): x, ("L", "R"): y, ("R", "L"): z, ("R", "R"): w}
    v = row[word[0]]
    val = float((v @ rho @ v.conj()).real)
    for prev, nxt in zip(word[:-1], word[1:]):
        val *= abs(link[(nxt, prev)]) ** 2
    return val


def hadamard_pattern_trace(word, rho):
    """``(1 + x1) / 2^n`` if the first letter is ``L``, else ``(1 - x1) / 2^n``."""
    x1 = bloch_x1(rho)
    sign = 1 if word[0] == "L" else -1
    return (1 + sign * x1) / 2 ** len(word)


def trace_pattern_check(coin, rho, max_len=8):
    """Compare direct ``Tr(C rho C^*)`` with the closed forms on all words.

    ``coin`` is ``"hadamard-split"`` or a tuple ``(x, y, z, w)``.
    """
    if coin == "hadamard-split":
        L, R = hadamard_split_coin()
        closed = hadamard_pattern_trace
    else:
        x, y, z, w = coin
        L = np.array([[x, y], [0, 0]], dtype=complex)
        R = np.array([[0, 0], [z, w]], dtype=complex)
        closed = lambda word, r: pattern_trace(word, coin, r)  # noqa: E731
    worst, count = 0.0, 0
    for length in range(1, max_len + 1):
        for word in itertools.product("LR", repeat=length):
            c = word_product(word, L, R)
            direct = float(np.trace(c @ rho @ c.conj().T).real)
            worst = max(worst, abs(direct - closed(word, rho)))
            count += 1
    return {"max_residual": worst, "words": count, "max_len": max_len}
