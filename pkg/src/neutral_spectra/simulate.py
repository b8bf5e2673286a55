"""Monte Carlo simulation of neutral lifted chains and general absorbed 2-D chains.

Trial ``t`` draws from stream ``t`` of the counter-based generator.  Step
``s`` of a neutral path consumes the counters ``s*(N+1) .. s*(N+1)+N``:
the first uniform picks the new total size, the others allocate types
one individual at a time.  A general step consumes one counter.  The scalar
steppers and the vectorized batch runner consume identical uniforms, so
they produce identical paths.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoSurvivors, ValidationError
from .kernel_spec import KernelSpec
from .neutral_lift import TriIndex
from .qsd import A2dMCSpec
from .rng import Stream, stream_keys, uniform_block

__all__ = [
    "SimConfig",
    "SimResult",
    "cdf_rows",
    "step_neutral",
    "step_general",
    "run_paths",
    "sample_conditional",
    "worker_count",
]

CHUNK = 1 << 16


def worker_count() -> int:
    """Worker threads: ``NEUTRAL_SPECTRA_THREADS`` if set, else the CPU count."""
    env = os.environ.get("NEUTRAL_SPECTRA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"NEUTRAL_SPECTRA_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    seed: int
    trials: int
    horizon: int
    initial: tuple[int, int]

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if self.horizon < 0:
            raise ValidationError("horizon must be nonnegative")
        object.__setattr__(self, "initial", tuple(int(x) for x in self.initial))


def cdf_rows(P: np.ndarray) -> np.ndarray:
    """Row-wise cumulative sums, pinned to exactly 1 from each row's last positive entry on."""
    P = np.asarray(P, dtype=float)
    C = np.cumsum(P, axis=1)
    for a in range(P.shape[0]):
        pos = np.nonzero(P[a] > 0)[0]
        if pos.size:
            C[a, pos[-1]:] = 1.0
    return C


def _pick(cdf_row: np.ndarray, u: float) -> int:
    return int(np.count_nonzero(cdf_row <= u))


def step_neutral(spec: KernelSpec, state: tuple[int, int], rng: Stream, cdf: np.ndarray | None = None):
    """One step of the lifted neutral chain from ``state``.

    The new total ``m`` is drawn from row ``i+j`` of the kernel; individuals
    are then added (type 1 with probability ``i/n`` at the current counts)
    or removed (a uniformly chosen individual) one at a time.
    """
    N = spec.N
    cdf = cdf_rows(spec.rows) if cdf is None else cdf
    u = rng.next_block(N + 1)
    i, j = state
    n = i + j
    m = _pick(cdf[n], u[0])
    sign = 1 if m > n else -1
    for b in range(1, abs(m - n) + 1):
        if u[b] * (i + j) < i:
            i += sign
        else:
            j += sign
    return i, j


def step_general(spec: A2dMCSpec, state: tuple[int, int], rng: Stream, cdf: np.ndarray | None = None):
    """One step of a general chain over ``T_N`` by inversion of the row CDF."""
    cdf = cdf_rows(spec.pi) if cdf is None else cdf
    a = spec.index.index(*state)
    return spec.index.state(_pick(cdf[a], rng.next()))


def _batch_neutral(cdf: np.ndarray, N: int, keys: np.ndarray, i: np.ndarray, j: np.ndarray, horizon: int):
    for s in range(horizon):
        u = uniform_block(keys, s * (N + 1), N + 1)
        n = i + j
        m = (cdf[n] <= u[:, :1]).sum(axis=1)
        sign = np.where(m > n, 1, -1)
        steps = np.abs(m - n)
        for b in range(1, N + 1):
            act = steps >= b
            if not act.any():
                break
            tot = i + j
            one = act & (u[:, b] * np.maximum(tot, 1) < i)
            two = act & ~one
            i = i + sign * one
            j = j + sign * two
    return i, j


def _batch_general(cdf: np.ndarray, keys: np.ndarray, a: np.ndarray, horizon: int):
    for s in range(horizon):
        u = uniform_block(keys, s, 1)
        a = (cdf[a] <= u).sum(axis=1)
    return a


def run_paths(spec, config: SimConfig, first: int, count: int) -> np.ndarray:
    """End states (as ``T_N`` indices) of trials ``first .. first+count-1``."""
    keys = stream_keys(config.seed, np.arange(first, first + count))
    if isinstance(spec, KernelSpec):
        index = TriIndex(spec.N)
        i = np.full(count, config.initial[0], dtype=np.int64)
        j = np.full(count, config.initial[1], dtype=np.int64)
        i, j = _batch_neutral(cdf_rows(spec.rows), spec.N, keys, i, j, config.horizon)
        n = i + j
        return n * (n + 1) // 2 + i
    index = spec.index
    a = np.full(count, index.index(*config.initial), dtype=np.int64)
    return _batch_general(cdf_rows(spec.pi), keys, a, config.horizon)


@dataclass(frozen=True)
class SimResult:
    """Histogram of end states over ``T_N``; ``distribution`` conditions on survival."""

    config: SimConfig
    index: TriIndex = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def survivors(self) -> int:
        return int(self.counts.sum() - self.counts[0])

    @property
    def distribution(self) -> np.ndarray:
        c = self.counts.astype(float)
        c[0] = 0.0
        return c / c.sum()

    def to_dict(self) -> dict:
        return {
            "seed": self.config.seed,
            "trials": self.config.trials,
            "horizon": self.config.horizon,
            "initial": list(self.config.initial),
            "survivors": self.survivors,
            "counts": {f"{i},{j}": int(self.counts[k])
                       for k, (i, j) in enumerate(self.index.states) if self.counts[k]},
        }


def sample_conditional(spec, config: SimConfig, workers: int | None = None) -> SimResult:
    """Run ``config.trials`` independent paths and histogram the survivors.

    ``spec`` is a :class:`KernelSpec` (lifted neutral dynamics, simulated by
    sequential allocation) or an :class:`A2dMCSpec` (row sampling).  The
    result depends only on ``(spec, config)``.  Raises :class:`NoSurvivors`
    after the run when every path was absorbed.
    """
    index = TriIndex(spec.N) if isinstance(spec, KernelSpec) else spec.index
    if config.initial not in index.states:
        raise ValidationError(f"initial state {config.initial} is outside T_{index.N}")
    chunks = [(s, min(CHUNK, config.trials - s)) for s in range(0, config.trials, CHUNK)]
    workers = min(workers or worker_count(), len(chunks))

    def job(ch):
        ends = run_paths(spec, config, *ch)
        return np.bincount(ends, minlength=index.size)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, chunks))
    else:
        parts = [job(ch) for ch in chunks]
    counts = np.sum(parts, axis=0)
    result = SimResult(config, index, counts)
    if result.survivors == 0:
        raise NoSurvivors(config.trials, config.horizon)
    return result
