"""Eigen-computations: Jacobi eigensolver, Perron pairs, weighted norms, assembled eigenbasis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import NoConvergence, NotIrreducible, NotSymmetrizable
from .kernel_spec import KernelSpec, ReversibleMeasure
from .neutral_lift import TriIndex, block_measure, lift_block, lift_full, nu_measure, truncate
from .poly_core import build_P

__all__ = [
    "SYMMETRY_TOL",
    "jacobi_eigh",
    "symmetrize",
    "sym_eigen",
    "is_irreducible",
    "period",
    "PerronPair",
    "perron_pair",
    "spectral_radius",
    "SpectralBlock",
    "AssembledBasis",
    "spectral_block",
    "assemble_basis",
    "weighted_operator_norm",
    "TruncationNorms",
    "truncation_norms",
]

SYMMETRY_TOL = 1e-8
JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
POWER_MAX_ITER = 10**6


def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of ``0..m-1`` (``m`` even) covering every pair once over ``m-1`` rounds."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array([players[i] for i in range(m // 2)])
        q = np.array([players[m - 1 - i] for i in range(m // 2)])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(S: np.ndarray, tol: float = JACOBI_OFF_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS,
                cancel: Callable[[], bool] | None = None):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps use a round-robin ordering, so each round applies ``n/2`` disjoint
    rotations at once.  Iterates until the off-diagonal Frobenius norm drops
    below ``tol * max(1, ||S||_F)``.  Returns ``(eigenvalues, vectors)`` with
    eigenvalues in descending order and orthonormal eigenvectors as columns.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    A = 0.5 * (A + A.T)
    m = n + (n % 2)
    if m != n:  # pad with an uncoupled dummy state
        A = np.pad(A, ((0, 1), (0, 1)))
    V = np.eye(m)
    scale = max(1.0, np.linalg.norm(A))
    rounds = _round_robin(m)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off < tol * scale:
            break
        if cancel is not None and cancel():
            raise NoConvergence("Jacobi solve cancelled")
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            th = np.where(big, 1.0, theta)
            t = np.where(big, 0.5 / np.where(big, theta, 1.0),
                         np.sign(th) / (np.abs(th) + np.sqrt(th * th + 1.0)))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    vals = np.diag(A)[:n]
    V = V[:n, :n]
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]


def symmetrize(M: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``D^{1/2} M D^{-1/2}`` for ``D = diag(w)``; raises if ``M`` is not ``w``-reversible."""
    M = np.asarray(M, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise NotSymmetrizable(float("inf"))
    flow = w[:, None] * M
    scale = max(np.abs(flow).max(initial=0.0), 1e-300)
    defect = float(np.abs(flow - flow.T).max(initial=0.0)) / scale
    if defect > SYMMETRY_TOL:
        raise NotSymmetrizable(defect)
    r = np.sqrt(w)
    S = r[:, None] * M / r[None, :]
    return 0.5 * (S + S.T)


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Make the first entry of largest modulus in each column positive."""
    for c in range(V.shape[1]):
        k = np.argmax(np.abs(V[:, c]) > 1e-12 * np.abs(V[:, c]).max(initial=0.0))
        if V[k, c] < 0:
            V[:, c] = -V[:, c]
    return V


def sym_eigen(M: np.ndarray, w: np.ndarray, cancel: Callable[[], bool] | None = None):
    """Full spectrum of a ``w``-reversible matrix.

    Returns ``(eigenvalues, U)`` with eigenvalues descending and the columns
    of ``U`` right eigenvectors of ``M`` that are orthonormal for ``<., .>_w``.
    """
    w = np.asarray(w, dtype=float)
    S = symmetrize(M, w)
    vals, Y = jacobi_eigh(S, cancel=cancel)
    U = Y / np.sqrt(w)[:, None]
    return vals, _fix_signs(U)


def _positivity_graph(M: np.ndarray):
    return (np.asarray(M) > 0).astype(np.int8)


def is_irreducible(M: np.ndarray) -> bool:
    """Whether the directed graph of positive entries is strongly connected."""
    M = np.asarray(M)
    if M.shape[0] == 1:
        return bool(M[0, 0] > 0)
    ncomp, _ = connected_components(_positivity_graph(M), directed=True, connection="strong")
    return ncomp == 1


def period(M: np.ndarray) -> int:
    """Period of an irreducible nonnegative matrix (gcd of cycle lengths).

    BFS levels from state 0; the period is the gcd of ``level[a] + 1 - level[b]``
    over all positive entries ``(a, b)``.
    """
    G = np.asarray(M) > 0
    n = G.shape[0]
    level = np.full(n, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for b in np.nonzero(G[a])[0]:
                if level[b] < 0:
                    level[b] = level[a] + 1
                    nxt.append(b)
        frontier = nxt
    g = 0
    for a, b in zip(*np.nonzero(G)):
        if level[a] >= 0 and level[b] >= 0:
            g = np.gcd(g, abs(int(level[a]) + 1 - int(level[b])))
    return int(g)


def _collatz_bounds(M, u):
    r = (M @ u) / u
    return float(r.min()), float(r.max())


def _noda(M: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    """Perron root and positive right eigenvector of an irreducible nonnegative matrix.

    Noda's inverse iteration: the shift is the upper Collatz-Wielandt bound
    ``max(Mu/u) >= rho``, so ``(shift I - M)^{-1}`` stays nonnegative and the
    iterates stay positive; the shift converges to ``rho`` superlinearly.
    Falls back to plain power iteration steps if a solve misbehaves.
    """
    n = M.shape[0]
    u = np.ones(n)
    I = np.eye(n)
    prev = None
    stable = 0
    for _ in range(max_iter):
        lo, hi = _collatz_bounds(M, u)
        theta = 0.5 * (lo + hi)
        resid = np.abs(M @ u - theta * u).max() / (theta * np.abs(u).max())
        if prev is not None and resid < tol and abs(theta - prev) / theta < tol:
            stable += 1
            if stable >= 2:
                return theta, u
        else:
            stable = 0
        if hi - lo <= tol * hi * 1e-3:
            return theta, u
        prev = theta
        try:
            y = np.linalg.solve(hi * I - M, u)
        except np.linalg.LinAlgError:
            return hi, u
        if not np.all(np.isfinite(y)) or np.any(y <= 0):
            y = M @ u + u  # lazy power step keeps positivity
        u = y / y.max()
    raise NoConvergence(f"Perron iteration did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class PerronPair:
    theta: float
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter((self.theta, self.u, self.v))


def perron_pair(M: np.ndarray, tol: float = 1e-12, max_iter: int = POWER_MAX_ITER) -> PerronPair:
    """Perron root with positive right ``u`` and left ``v`` eigenvectors.

    Normalised so that ``v . 1 = 1`` and ``v . u = 1``.  Aperiodicity is not
    needed.  Raises :class:`NotIrreducible` for reducible input.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(M < 0):
        raise ValueError("matrix must be nonnegative")
    n = M.shape[0]
    if not is_irreducible(M):
        if n == 1:
            raise NotIrreducible([0])
        _, labels = connected_components(_positivity_graph(M), directed=True, connection="strong")
        raise NotIrreducible(labels)
    theta, u = _noda(M, tol, max_iter)
    theta_l, v = _noda(M.T, tol, max_iter)
    theta = 0.5 * (theta + theta_l)
    v = v / v.sum()
    u = u / (v @ u)
    return PerronPair(theta, u, v)


def spectral_radius(M: np.ndarray, tol: float = 1e-12) -> float:
    """Spectral radius of a nonnegative matrix via its strongly connected classes."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 0:
        return 0.0
    ncomp, labels = connected_components(_positivity_graph(M), directed=True, connection="strong")
    best = 0.0
    for c in range(ncomp):
        idx = np.nonzero(labels == c)[0]
        sub = M[np.ix_(idx, idx)]
        if len(idx) == 1:
            best = max(best, float(sub[0, 0]))
        else:
            best = max(best, perron_pair(sub, tol).theta)
    return best


@dataclass(frozen=True)
class SpectralBlock:
    """Eigen-data of ``Pi_d``: eigenvalues (descending) and vectors over ``{d..N}`` as columns."""

    d: int
    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class AssembledBasis:
    """Eigenvectors ``v_(i,j) = P_d(i,j) u_{i+j}`` of the lifted matrix.

    ``vectors[:, c]`` is the eigenvector for ``eigenvalues[c]`` built from
    degree ``degrees[c]``.
    """

    index: TriIndex
    eigenvalues: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    blocks: tuple[SpectralBlock, ...] = field(repr=False, default=())

    def __len__(self):
        return len(self.eigenvalues)

    def triples(self):
        return [(float(t), int(d), self.vectors[:, c]) for c, (t, d) in
                enumerate(zip(self.eigenvalues, self.degrees))]

    def residuals(self, pi: np.ndarray) -> np.ndarray:
        """``||Pi v - theta v|| / ||v||`` per vector."""
        R = pi @ self.vectors - self.vectors * self.eigenvalues[None, :]
        return np.linalg.norm(R, axis=0) / np.linalg.norm(self.vectors, axis=0)

    def min_singular_value(self) -> float:
        """Smallest singular value after normalising every column to unit length."""
        V = self.vectors / np.linalg.norm(self.vectors, axis=0)
        return float(np.linalg.svd(V, compute_uv=False).min())


def spectral_block(spec: KernelSpec, mu: ReversibleMeasure, d: int) -> SpectralBlock:
    """Eigen-decomposition of ``Pi_d`` (``d >= 1``) via its ``mu^{(d)}`` symmetrization."""
    block = lift_block(spec, d)
    vals, U = sym_eigen(block.matrix, block_measure(mu, d))
    return SpectralBlock(d, vals, U)


def _d0_block(spec: KernelSpec, mu: ReversibleMeasure) -> SpectralBlock:
    """Eigenvectors of the block-triangular ``Pi_0``: the constant vector and ``(0, u~)``."""
    N = spec.N
    vals, U = sym_eigen(spec.interior, mu.mu)
    W = np.zeros((N + 1, N + 1))
    W[:, 0] = 1.0
    W[1:, 1:] = U
    return SpectralBlock(0, np.concatenate([[1.0], vals]), W)


def assemble_basis(spec: KernelSpec, mu: ReversibleMeasure) -> AssembledBasis:
    """Eigenbasis of ``Pi`` from the block eigenvectors (``P_1 = X`` for ``d = 1``).

    Degree 0 contributes ``N + 1`` vectors, degree ``d >= 1`` contributes
    ``N - d + 1``, for ``(N+1)(N+2)/2`` in total.
    """
    N = spec.N
    index = TriIndex(N)
    totals = index.totals
    blocks = [_d0_block(spec, mu)] + [spectral_block(spec, mu, d) for d in range(1, N + 1)]
    cols, thetas, degs = [], [], []
    for blk in blocks:
        d = blk.d
        P = build_P(d)
        pvals = np.array([P(i, j) for i, j in index.states])
        for c in range(blk.vectors.shape[1]):
            u = np.zeros(N + 1)
            u[d:] = blk.vectors[:, c]
            cols.append(pvals * u[totals])
            thetas.append(blk.eigenvalues[c])
            degs.append(d)
    return AssembledBasis(
        index=index,
        eigenvalues=np.array(thetas),
        degrees=np.array(degs),
        vectors=np.column_stack(cols),
        blocks=tuple(blocks),
    )


def weighted_operator_norm(M: np.ndarray, w: np.ndarray) -> float:
    """Operator norm on ``L^2(w)`` of a ``w``-self-adjoint matrix: max modulus eigenvalue."""
    vals, _ = jacobi_eigh(symmetrize(M, w))
    return float(np.abs(vals).max(initial=0.0))


@dataclass(frozen=True)
class TruncationNorms:
    """Weighted norms of ``Pi - Pi'`` for a kernel and its truncation at ``N'``.

    ``block[d-1]`` is ``|||Pi_d - Pi'_d|||_d`` for ``d = 1..N``; ``base`` is
    the norm of the interior difference on ``{1..N}`` and ``lifted`` the norm
    of the interior difference of the lifted chains, weighted by ``nu``.
    """

    Nprime: int
    base: float
    block: tuple[float, ...]
    lifted: float

    def to_dict(self) -> dict:
        return {"Nprime": self.Nprime, "base": self.base, "block": list(self.block),
                "lifted": self.lifted}


def truncation_norms(spec: KernelSpec, mu: ReversibleMeasure, Nprime: int) -> TruncationNorms:
    """Norm table for the truncation of ``spec`` at ``N'`` (see :func:`neutral_lift.truncate`)."""
    trunc = truncate(spec, Nprime)
    base = weighted_operator_norm(spec.interior - trunc.interior, mu.mu)
    block = tuple(
        weighted_operator_norm(lift_block(spec, d).matrix - lift_block(trunc, d).matrix,
                               block_measure(mu, d))
        for d in range(1, spec.N + 1)
    )
    full, cut = lift_full(spec), lift_full(trunc)
    lifted = weighted_operator_norm(full.interior_matrix - cut.interior_matrix,
                                    nu_measure(mu, full.index))
    return TruncationNorms(Nprime, base, block, lifted)
