"""The three-colour urn (embedded three-type Moran chain) in exact rational arithmetic.

From ``(i, j)`` with ``h = N - i - j`` balls of the third colour, the chain
moves to ``(i±1, j)`` w.p. ``i h / N^2``, ``(i, j±1)`` w.p. ``j h / N^2``,
``(i+1, j-1)`` and ``(i-1, j+1)`` w.p. ``i j / N^2`` each, and stays otherwise.

Its right eigenvectors are ``P_d(i, j)`` (eigenvalue ``1 - d(d-1)/N^2``) and
``P_d(i, j) (N-i-j) R_n(i+j)`` (eigenvalue ``1 - (d+n)(d+n-1)/N^2``), where
``(N - X) R_n(X)`` is a Hahn polynomial in ``X``.  The normalization of
``R_n`` is inherited from ``Q_n(0) = 1``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DivisionRemainder, ValidationError
from .neutral_lift import TriIndex
from .poly_core import (
    RationalBivariatePoly,
    RationalUnivariatePoly,
    build_P,
    hahn_Q_poly,
)

__all__ = [
    "MoranSpec",
    "transition_matrix",
    "predicted_spectrum",
    "hahn_shifted",
    "r_polynomial",
    "r_value",
    "eigen_equation_solution",
    "claimed_eigenvectors",
    "EigenReport",
    "verify_eigen",
    "TwoColorReport",
    "two_color",
    "rank_mod_p",
    "interior_generators",
    "subspace_identity",
]

PRIME = (1 << 61) - 1


@dataclass(frozen=True, eq=False)
class MoranSpec:
    """Exact transition matrix over ``T_N``; ``rows[a]`` maps target index to probability."""

    N: int
    index: TriIndex = field(repr=False)
    rows: tuple[dict, ...] = field(repr=False)

    def as_float(self) -> np.ndarray:
        M = np.zeros((self.index.size, self.index.size))
        for a, row in enumerate(self.rows):
            for b, p in row.items():
                M[a, b] = float(p)
        return M

    def apply(self, v) -> list[Fraction]:
        """``Pi v`` for a vector of rationals."""
        return [sum((p * v[b] for b, p in row.items()), Fraction(0)) for row in self.rows]


def transition_matrix(N: int) -> MoranSpec:
    """The seven-move transition table with denominators ``N^2``."""
    if N < 2:
        raise ValidationError("the urn needs N >= 2")
    index = TriIndex(N)
    D = N * N
    rows = []
    for i, j in index.states:
        h = N - i - j
        moves = Counter()
        for (di, dj), w in (
            ((1, 0), i * h), ((-1, 0), i * h),
            ((0, 1), j * h), ((0, -1), j * h),
            ((1, -1), i * j), ((-1, 1), i * j),
        ):
            if w:
                moves[index.index(i + di, j + dj)] += Fraction(w, D)
        moves[index.index(i, j)] += Fraction(i * i + j * j + h * h, D)
        rows.append(dict(moves))
    return MoranSpec(N, index, tuple(rows))


def eigenvalue(N: int, k: int) -> Fraction:
    return 1 - Fraction(k * (k - 1), N * N)


def predicted_spectrum(N: int) -> list[tuple[Fraction, int]]:
    """``(1 - k(k-1)/N^2, multiplicity)`` pairs, descending; eigenvalue 1 collects ``k = 0, 1``."""
    if N < 2:
        raise ValidationError("the urn needs N >= 2")
    out = [(Fraction(1), 3)]
    out += [(eigenvalue(N, k), k + 1) for k in range(2, N + 1)]
    return out


def _x_minus(c) -> RationalUnivariatePoly:
    return RationalUnivariatePoly([-Fraction(c), 1])


def _residue_series(n: int, N: int) -> RationalUnivariatePoly:
    """``lim_{a -> -1} (a + 1) Q_n(x; a, -1, N+1)`` as a polynomial in ``x`` (``n >= 2``).

    The ``k = 0`` term drops out and ``(a+1)/(a+1)_k -> 1/(k-1)!``.
    """
    out = RationalUnivariatePoly()
    rising = RationalUnivariatePoly([1])
    coef = Fraction(1)
    fact_km1 = 1
    for k in range(1, n + 1):
        rising = rising * RationalUnivariatePoly([k - 1, -1])
        coef = coef * (-n + k - 1) * (n - 1 + k - 1) / ((-N + k - 1) * k)
        if k > 1:
            fact_km1 *= k - 1
        out = out + rising * (coef / fact_km1)
    return out


@lru_cache(maxsize=None)
def hahn_shifted(N: int, d: int, n: int) -> RationalUnivariatePoly:
    """The degree-``n`` polynomial ``Q_n(X - d; 2d-1, -1, N-d+1)`` in ``X``.

    For ``d = 0`` the Hahn parameters sit on a pole; the residue at
    ``alpha = -1`` is used instead (``n >= 2``), and ``N - X`` for ``n = 1``.
    """
    if not 0 <= d <= N or n < 0:
        raise ValueError("need 0 <= d <= N and n >= 0")
    if n == 0:
        return RationalUnivariatePoly([1])
    if d == 0:
        if n == 1:
            return RationalUnivariatePoly([N, -1])
        return _residue_series(n, N)
    return hahn_Q_poly(n, 2 * d - 1, -1, N - d + 1).compose(_x_minus(d))


@lru_cache(maxsize=None)
def r_polynomial(N: int, d: int, n: int) -> RationalUnivariatePoly:
    """``R_n^{(N,d)}`` with ``(N - X) R_n(X)`` equal to :func:`hahn_shifted` (``1 <= n <= N-d``)."""
    if not 1 <= n <= N - d:
        raise ValueError(f"need 1 <= n <= N - d = {N - d}")
    quo, rem = hahn_shifted(N, d, n).divmod(RationalUnivariatePoly([N, -1]))
    if not rem.is_zero():
        raise DivisionRemainder(f"N - X does not divide the Hahn polynomial (N={N}, d={d}, n={n})")
    return quo


def r_value(N: int, d: int, n: int, k: int) -> Fraction:
    """``R_n^{(N,d)}(k)`` for integer ``d <= k <= N-1`` and any ``n >= 1``.

    Beyond ``n = N - d`` the Hahn parameters hit a pole, so ``(N - X) R_n`` is
    taken to be the monic degree-``n`` polynomial solution of the
    eigen-equation (:func:`eigen_equation_solution`).  The truncated Hahn
    sum at integer points is a different object and does not vanish there.
    """
    if not d <= k <= N - 1:
        raise ValueError("need d <= k <= N - 1")
    if n <= N - d:
        return r_polynomial(N, d, n)(k)
    quo, rem = eigen_equation_solution(N, d, n).divmod(RationalUnivariatePoly([N, -1]))
    if not rem.is_zero():
        raise DivisionRemainder(f"N - X does not divide the degree-{n} solution (N={N}, d={d})")
    return quo(k)


def eigen_equation_solution(N: int, d: int, n: int) -> RationalUnivariatePoly:
    """Monic degree-``n`` polynomial ``u`` solving the three-term eigen-equation.

    ``L u(k) = (N-k) [(k+d) u(k+1) - 2k u(k) + (k-d) u(k-1)]`` maps degree ``m``
    to degree ``m`` with diagonal ``-(m(m-1) + 2md)``; the eigenvector for
    ``m = n`` is found by back substitution in the monomial basis.
    Requires distinct diagonal values below ``n`` (fails only for ``d = 0, n = 1``).
    """
    lam = [-(m * (m - 1) + 2 * m * d) for m in range(n + 1)]
    X = RationalUnivariatePoly.x()
    Nk = RationalUnivariatePoly([N, -1])

    def L(p: RationalUnivariatePoly) -> RationalUnivariatePoly:
        return Nk * ((X + d) * p.shift(1) - X * p * 2 + (X - d) * p.shift(-1))

    images = []
    for m in range(n + 1):
        mono = RationalUnivariatePoly([0] * m + [1])
        img = L(mono)
        images.append([img.coeffs[r] if r < len(img.coeffs) else Fraction(0) for r in range(n + 1)])
    c = [Fraction(0)] * (n + 1)
    c[n] = Fraction(1)
    for m in range(n - 1, -1, -1):
        if lam[n] == lam[m]:
            raise ValueError("degenerate eigenvalue; no unique polynomial solution")
        s = sum((images[mp][m] * c[mp] for mp in range(m + 1, n + 1)), Fraction(0))
        c[m] = s / (lam[n] - lam[m])
    return RationalUnivariatePoly(c)


def _core(d: int) -> RationalBivariatePoly:
    return build_P(d).core


def claimed_eigenvectors(N: int):
    """Yield ``(d, n, theta, v)`` with ``v`` an exact rational vector over ``T_N``.

    The irrational scale of ``P_d`` is dropped (it does not affect the eigen-equation).
    """
    index = TriIndex(N)
    for d in range(N + 1):
        P = _core(d)
        pv = [P(i, j) for i, j in index.states]
        yield d, 0, eigenvalue(N, d), pv
        for n in range(1, N - d + 1):
            R = r_polynomial(N, d, n)
            v = [pv[a] * (N - i - j) * R(i + j) for a, (i, j) in enumerate(index.states)]
            yield d, n, eigenvalue(N, d + n), v


def _mod(x: Fraction) -> int:
    return x.numerator % PRIME * pow(x.denominator % PRIME, -1, PRIME) % PRIME


def rank_mod_p(rows) -> int:
    """Rank modulo ``2^61 - 1`` of a matrix of rationals (a lower bound for the rank over Q)."""
    M = [[_mod(Fraction(x)) for x in r] for r in rows]
    if not M:
        return 0
    rank, ncol = 0, len(M[0])
    for c in range(ncol):
        piv = next((r for r in range(rank, len(M)) if M[r][c]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][c], -1, PRIME)
        prow = [x * inv % PRIME for x in M[rank]]
        M[rank] = prow
        for r in range(len(M)):
            if r != rank and M[r][c]:
                f = M[r][c]
                M[r] = [(x - f * y) % PRIME for x, y in zip(M[r], prow)]
        rank += 1
        if rank == len(M):
            break
    return rank


@dataclass(frozen=True)
class EigenReport:
    N: int
    residuals_zero: bool
    failures: tuple
    count: int
    multiplicities: dict = field(repr=False)
    predicted: dict = field(repr=False)
    kernel_dims: dict = field(repr=False)
    dense_max_error: float

    @property
    def spectrum_matches(self) -> bool:
        return self.multiplicities == self.predicted and self.kernel_dims == self.predicted

    @property
    def ok(self) -> bool:
        return self.residuals_zero and self.spectrum_matches and self.dense_max_error < 1e-8

    @property
    def verdict(self) -> str:
        if self.ok:
            return "all eigen-residuals zero; spectrum matches"
        parts = []
        if not self.residuals_zero:
            parts.append(f"{len(self.failures)} nonzero eigen-residuals")
        if not self.spectrum_matches:
            parts.append("spectrum mismatch")
        if self.dense_max_error >= 1e-8:
            parts.append(f"dense eigenvalues off by {self.dense_max_error:.3e}")
        return "; ".join(parts)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "verdict": self.verdict,
            "ok": self.ok,
            "eigenvectors": self.count,
            "failures": [list(f) for f in self.failures],
            "spectrum": [{"eigenvalue": str(t), "multiplicity": m}
                         for t, m in sorted(self.multiplicities.items(), reverse=True)],
            "dense_max_error": self.dense_max_error,
        }


def verify_eigen(N: int, rank_checks: bool = True) -> EigenReport:
    """Check every claimed eigenvector exactly and compare the spectrum with the prediction.

    Eigenspace dimensions are certified by ranks modulo a large prime: the
    claimed vectors for each eigenvalue are independent, and ``Pi - theta I``
    has rank at least ``|T_N|`` minus the predicted multiplicity.
    """
    if N > 20:
        raise ValidationError("exact verification is limited to N <= 20")
    spec = transition_matrix(N)
    size = spec.index.size
    failures = []
    by_theta: dict[Fraction, list] = {}
    count = 0
    for d, n, theta, v in claimed_eigenvectors(N):
        count += 1
        Pv = spec.apply(v)
        if any(pv != theta * x for pv, x in zip(Pv, v)) or not any(v):
            failures.append((d, n))
        by_theta.setdefault(theta, []).append(v)
    predicted = dict(predicted_spectrum(N))
    multiplicities = {t: len(vs) for t, vs in by_theta.items()}
    kernel_dims = {}
    if rank_checks:
        for t, vs in by_theta.items():
            indep = rank_mod_p(vs)
            shifted = []
            for a, row in enumerate(spec.rows):
                r = [Fraction(0)] * size
                for b, p in row.items():
                    r[b] = p
                r[a] -= t
                shifted.append(r)
            upper = size - rank_mod_p(shifted)
            kernel_dims[t] = indep if indep == upper else (indep, upper)
    else:
        kernel_dims = dict(predicted)
    dense = np.sort(np.linalg.eigvals(spec.as_float()).real)
    expected = np.sort(np.concatenate([[float(t)] * m for t, m in predicted.items()]))
    err = float(np.abs(dense - expected).max()) if len(dense) == len(expected) else float("inf")
    return EigenReport(N, not failures, tuple(failures), count, multiplicities, predicted, kernel_dims, err)


@dataclass(frozen=True)
class TwoColorReport:
    N: int
    residuals_zero: bool
    multiplicities: dict = field(repr=False)
    dense_max_error: float

    @property
    def ok(self) -> bool:
        expected = {Fraction(1): 2, **{eigenvalue(self.N, k): 1 for k in range(2, self.N + 1)}}
        return self.residuals_zero and self.multiplicities == expected and self.dense_max_error < 1e-8


def two_color(N: int) -> TwoColorReport:
    """The two-colour urn on ``{0..N}``: eigenvectors ``1`` and ``(N-k) R_n^{(N,0)}(k)``."""
    rows = []
    D = N * N
    for k in range(N + 1):
        row = {}
        w = Fraction(k * (N - k), D)
        if w:
            row[k - 1] = w
            row[k + 1] = w
        row[k] = 1 - 2 * w
        rows.append(row)
    vecs = [(Fraction(1), [Fraction(1)] * (N + 1))]
    for n in range(1, N + 1):
        R = r_polynomial(N, 0, n)
        vecs.append((eigenvalue(N, n), [(N - k) * R(k) for k in range(N + 1)]))
    ok = True
    for t, v in vecs:
        Pv = [sum((p * v[b] for b, p in row.items()), Fraction(0)) for row in rows]
        ok &= all(a == t * b for a, b in zip(Pv, v)) and any(v)
    ok &= rank_mod_p([v for _, v in vecs]) == N + 1
    mult = Counter(t for t, _ in vecs)
    M = np.zeros((N + 1, N + 1))
    for k, row in enumerate(rows):
        for b, p in row.items():
            M[k, b] = float(p)
    dense = np.sort(np.linalg.eigvals(M).real)
    expected = np.sort([float(t) for t, _ in vecs])
    return TwoColorReport(N, bool(ok), dict(mult), float(np.abs(dense - expected).max()))


def _q_core(d: int) -> RationalBivariatePoly:
    """``P_d / (XY)`` (exact, ``d >= 2``)."""
    P = _core(d)
    return RationalBivariatePoly({(i - 1, j - 1): c for (i, j), c in P.coeffs.items()})


def interior_generators(N: int, k: int, variant: int = 0) -> np.ndarray:
    """Generators of the interior eigenspace for ``1 - k(k-1)/N^2`` on ``S**``, as columns.

    ``variant`` 0 uses ``Q_d(i, j) R_{k-d}(i+j)``, 1 uses ``Q_d(i, N-i-j) R_{k-d}(N-j)``
    and 2 uses ``Q_d(N-i-j, j) R_{k-d}(N-i)``, for ``d = 2..k-1``, with
    ``Q_d = P_d / (XY)``; the common factor ``ij(N-i-j)`` is omitted.
    """
    states = [(i, j) for i in range(1, N) for j in range(1, N - i)]
    cols = []
    for d in range(2, k):
        Q = _q_core(d)
        R = r_polynomial(N, d, k - d)
        col = []
        for i, j in states:
            h = N - i - j
            if variant == 0:
                val = Q(i, j) * R(i + j)
            elif variant == 1:
                val = Q(i, h) * R(N - j)
            else:
                val = Q(h, j) * R(N - i)
            col.append(float(val))
        cols.append(col)
    return np.array(cols, dtype=float).T.reshape(len(states), len(cols))


def subspace_identity(N: int, k: int, tol: float = 1e-9) -> dict:
    """Check that the three generator families for eigenvalue ``1 - k(k-1)/N^2`` span one subspace.

    Equal ranks plus least-squares containment of each family in the others
    (relative residual below ``tol``).
    """
    if not 3 <= k <= N:
        raise ValueError("need 3 <= k <= N")
    G = [interior_generators(N, k, v) for v in range(3)]
    ranks = [int(np.linalg.matrix_rank(g)) for g in G]
    worst = 0.0
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            coef, *_ = np.linalg.lstsq(G[a], G[b], rcond=None)
            res = np.linalg.norm(G[a] @ coef - G[b]) / max(np.linalg.norm(G[b]), 1e-300)
            worst = max(worst, float(res))
    return {"N": N, "k": k, "ranks": ranks, "max_residual": worst,
            "ok": len(set(ranks)) == 1 and worst < tol}
