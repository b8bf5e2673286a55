"""Lift a one-dimensional kernel to the neutral two-type chain on the triangle ``T_N``.

The lifted chain adds (or removes) individuals one at a time, picking each
new (or killed) individual's type proportionally to the current counts.  The
block matrices ``Pi_d`` describe the action of the lifted matrix on vectors
of the form ``P_d(i, j) u_{i+j}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .kernel_spec import KernelSpec, ReversibleMeasure, from_rows
from .poly_core import binom

__all__ = [
    "MAX_N",
    "TriIndex",
    "LiftedChain",
    "BlockMatrix",
    "upward_weight",
    "downward_weight",
    "lift_full",
    "lift_block",
    "nu_measure",
    "block_measure",
    "measures",
    "restrict_states",
    "restrict_k",
    "truncate",
]

MAX_N = 150


class TriIndex:
    """Bijection between ``T_N = {(i, j) : i, j >= 0, i + j <= N}`` and ``0..|T_N|-1``.

    States are ordered by total size ``n = i + j`` and then by ``i``, so the
    index of ``(i, j)`` is ``n (n + 1) / 2 + i``.
    """

    def __init__(self, N: int):
        if N < 0:
            raise ValueError("N must be nonnegative")
        self.N = N
        self.states: tuple[tuple[int, int], ...] = tuple(
            (i, n - i) for n in range(N + 1) for i in range(n + 1)
        )

    @classmethod
    def from_size(cls, size: int) -> "TriIndex":
        N = 0
        while (N + 1) * (N + 2) // 2 < size:
            N += 1
        if (N + 1) * (N + 2) // 2 != size:
            raise ValidationError(f"{size} is not a triangular number (N+1)(N+2)/2")
        return cls(N)

    @property
    def size(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def index(self, i: int, j: int) -> int:
        if i < 0 or j < 0 or i + j > self.N:
            raise KeyError((i, j))
        n = i + j
        return n * (n + 1) // 2 + i

    def state(self, idx: int) -> tuple[int, int]:
        return self.states[idx]

    def __eq__(self, other):
        return isinstance(other, TriIndex) and other.N == self.N

    def __hash__(self):
        return hash(("TriIndex", self.N))

    @cached_property
    def interior(self) -> list[int]:
        """Indices of ``T_N^* = {(i, j) : i, j >= 1}`` in index order."""
        return [k for k, (i, j) in enumerate(self.states) if i >= 1 and j >= 1]

    @cached_property
    def axis1(self) -> list[int]:
        """Indices of ``(1, 0), ..., (N, 0)``."""
        return [self.index(i, 0) for i in range(1, self.N + 1)]

    @cached_property
    def axis2(self) -> list[int]:
        """Indices of ``(0, 1), ..., (0, N)``."""
        return [self.index(0, j) for j in range(1, self.N + 1)]

    @cached_property
    def totals(self) -> np.ndarray:
        return np.array([i + j for i, j in self.states])


@dataclass(frozen=True)
class LiftedChain:
    """The two-dimensional transition matrix ``Pi`` on ``T_N``."""

    index: TriIndex
    pi: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.index.N

    def entry(self, a: tuple[int, int], b: tuple[int, int]) -> float:
        return float(self.pi[self.index.index(*a), self.index.index(*b)])

    @property
    def interior_matrix(self) -> np.ndarray:
        """The restriction to ``T_N^*`` (both coordinates positive)."""
        idx = self.index.interior
        return self.pi[np.ix_(idx, idx)]


@dataclass(frozen=True)
class BlockMatrix:
    """``Pi_d`` on ``{d, ..., N}``; ``matrix[n-d, m-d] = p^{(d)}_{n,m}``."""

    d: int
    matrix: np.ndarray = field(repr=False)
    mu: np.ndarray | None = field(default=None, repr=False)

    @property
    def states(self) -> range:
        return range(self.d, self.d + self.matrix.shape[0])


def upward_weight(i: int, j: int, k: int, l: int) -> float:
    """Probability that ``k`` type-1 and ``l`` type-2 individuals are added to ``(i, j)``."""
    num = binom(i + k - 1, k) * binom(j + l - 1, l)
    if num == 0:
        return 0.0
    return num / binom(i + j + k + l - 1, k + l)


def downward_weight(i: int, j: int, k: int, l: int) -> float:
    """Probability that ``k`` type-1 and ``l`` type-2 individuals are removed from ``(i, j)``."""
    num = binom(i, k) * binom(j, l)
    if num == 0:
        return 0.0
    return num / binom(i + j, k + l)


def _check_size(N: int):
    if N > MAX_N:
        raise ValidationError(f"N={N} exceeds the supported dense envelope N <= {MAX_N}")


def lift_full(spec: KernelSpec) -> LiftedChain:
    """Build ``Pi`` from ``Pi_0`` by hypergeometric / Polya allocation of types."""
    N = spec.N
    _check_size(N)
    index = TriIndex(N)
    P = spec.rows
    pi = np.zeros((index.size, index.size))
    for a, (i, j) in enumerate(index.states):
        n = i + j
        for m in np.nonzero(P[n])[0]:
            m = int(m)
            p = P[n, m]
            if m == n:
                pi[a, a] += p
                continue
            s = abs(m - n)
            for k in range(s + 1):
                l = s - k
                if m > n:
                    w = upward_weight(i, j, k, l)
                    target = (i + k, j + l)
                else:
                    w = downward_weight(i, j, k, l)
                    target = (i - k, j - l)
                if w:
                    pi[a, index.index(*target)] += w * p
    return LiftedChain(index, pi)


def lift_block(spec: KernelSpec, d: int, mu: ReversibleMeasure | None = None) -> BlockMatrix:
    """The matrix ``Pi_d`` on ``{d, ..., N}``; attaches ``mu^{(d)}`` when ``mu`` is given."""
    N = spec.N
    if not 0 <= d <= N:
        raise ValueError(f"d must lie in 0..{N}")
    P = spec.rows
    if d == 0:
        return BlockMatrix(0, P.copy())
    size = N - d + 1
    M = np.zeros((size, size))
    for n in range(d, N + 1):
        for m in range(d, N + 1):
            p = P[n, m]
            if p == 0:
                continue
            if m > n:
                ratio = binom(m + d - 1, m - n) / binom(m - 1, m - n)
            elif m < n:
                ratio = binom(n - d, n - m) / binom(n, n - m)
            else:
                ratio = 1.0
            M[n - d, m - d] = ratio * p
    return BlockMatrix(d, M, block_measure(mu, d) if mu is not None else None)


def nu_measure(mu: ReversibleMeasure, index: TriIndex) -> np.ndarray:
    """``nu_(i,j) = (i + j) mu_{i+j} / (i j)`` on the interior states, in index order."""
    return np.array(
        [(i + j) * mu[i + j] / (i * j) for i, j in (index.state(k) for k in index.interior)]
    )


def block_measure(mu: ReversibleMeasure, d: int) -> np.ndarray:
    """``mu^{(d)}_n = 2 n binom(n+d-1, 2d-1) mu_n`` for ``n = d..N`` (``d >= 1``)."""
    if d < 1:
        raise ValueError("block measures are defined for d >= 1")
    N = len(mu.mu)
    return np.array([2 * n * binom(n + d - 1, 2 * d - 1) * mu[n] for n in range(d, N + 1)])


def measures(mu: ReversibleMeasure, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(nu, mu_d)``: the interior measure of the lift and ``mu^{(d)}``."""
    index = TriIndex(len(mu.mu))
    return nu_measure(mu, index), block_measure(mu, d)


def restrict_states(index: TriIndex, k: int) -> list[int]:
    """Indices of ``S*_k``: ``{i >= 1}`` for ``k = 1``, ``{i, j >= 1, i + j >= k}`` for ``k >= 2``."""
    if k == 1:
        return [a for a, (i, _) in enumerate(index.states) if i >= 1]
    return [a for a, (i, j) in enumerate(index.states) if i >= 1 and j >= 1 and i + j >= k]


def restrict_k(chain: LiftedChain, k: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Principal submatrix of ``Pi`` on ``S*_k`` and the list of its states."""
    if not 1 <= k <= chain.N:
        raise ValueError(f"k must lie in 1..{chain.N}")
    idx = restrict_states(chain.index, k)
    return chain.pi[np.ix_(idx, idx)], [chain.index.state(a) for a in idx]


def truncate(spec: KernelSpec, Nprime: int) -> KernelSpec:
    """Markovian extension of ``Pr Pi~_0 Pr`` with the projection onto ``{1..N'}``.

    The interior block keeps rows and columns ``<= N'`` and zeroes the rest;
    the mass removed from each row is sent to the absorbing state 0, so the
    result is again a valid kernel whose ``interior`` is the substochastic
    truncation.
    """
    N = spec.N
    if not 1 <= Nprime <= N:
        raise ValueError(f"N' must lie in 1..{N}")
    rows = np.array(spec.rows)
    keep = np.zeros_like(rows, dtype=bool)
    keep[: Nprime + 1, : Nprime + 1] = True
    keep[:, 0] = True
    removed = np.where(keep, 0.0, rows).sum(axis=1)
    rows[~keep] = 0.0
    # a row folded entirely into state 0 can round to just above 1
    rows[:, 0] = np.minimum(rows[:, 0] + removed, 1.0)
    return from_rows(rows)
