"""Maximal Dirichlet eigenvalues on the sub-triangles ``S*_k`` and their ordering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDomain
from .kernel_spec import KernelSpec
from .neutral_lift import LiftedChain, lift_block, lift_full, restrict_k
from .spectral import is_irreducible, spectral_radius

__all__ = [
    "EQUAL_TOL",
    "STRICT_TOL",
    "MONOTONE_SLACK",
    "compare",
    "theta_dirichlet",
    "theta_block",
    "Relation",
    "OrderingReport",
    "ordering_report",
]

EQUAL_TOL = 1e-10
STRICT_TOL = 1e-8
MONOTONE_SLACK = 1e-12


def compare(a: float, b: float) -> str:
    """Classify ``a`` against ``b`` as ``"equal"``, ``"greater"``, ``"less"`` or ``"indeterminate"``."""
    diff = a - b
    if abs(diff) < EQUAL_TOL:
        return "equal"
    if diff > STRICT_TOL:
        return "greater"
    if diff < -STRICT_TOL:
        return "less"
    return "indeterminate"


def theta_dirichlet(chain: LiftedChain, k: int) -> float:
    """Spectral radius of ``Pi`` restricted to ``S*_k``."""
    if not 1 <= k <= chain.N:
        raise EmptyDomain(f"S*_{k} is empty for N={chain.N}")
    M, states = restrict_k(chain, k)
    if not states:
        raise EmptyDomain(f"S*_{k} is empty for N={chain.N}")
    return spectral_radius(M)


def theta_block(spec: KernelSpec, d: int) -> float:
    """Spectral radius of ``Pi_d``; equals 1 for ``d = 0``."""
    if d == 0:
        return 1.0
    return spectral_radius(lift_block(spec, d).matrix)


@dataclass(frozen=True)
class Relation:
    """One checked relation ``lhs <op> rhs`` with its verdict.

    ``expected`` is ``"equal"``, ``"greater_or_equal"`` or ``"greater"``;
    ``holds`` is None when the comparison falls in the indeterminate band.
    """

    name: str
    lhs: float
    rhs: float
    expected: str
    verdict: str
    holds: bool | None

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "expected": self.expected,
            "verdict": self.verdict,
            "holds": self.holds,
            "margin": self.margin,
        }


def _relation(name: str, lhs: float, rhs: float, expected: str) -> Relation:
    verdict = compare(lhs, rhs)
    if expected == "equal":
        holds = {"equal": True, "indeterminate": None}.get(verdict, False)
    elif expected == "greater":
        holds = {"greater": True, "indeterminate": None}.get(verdict, False)
    else:  # greater_or_equal, monotonicity slack only
        holds = bool(lhs - rhs >= -MONOTONE_SLACK)
    return Relation(name, float(lhs), float(rhs), expected, verdict, holds)


@dataclass(frozen=True)
class OrderingReport:
    """``theta_D[k-1]`` for ``k = 1..N``, ``theta_block[d]`` for ``d = 0..N`` and checked relations."""

    theta_D: np.ndarray = field(repr=False)
    theta_block: np.ndarray = field(repr=False)
    irreducible: np.ndarray = field(repr=False)
    relations: tuple[Relation, ...] = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.theta_D)

    @property
    def failures(self) -> list[Relation]:
        return [r for r in self.relations if r.holds is False]

    @property
    def indeterminate(self) -> list[Relation]:
        return [r for r in self.relations if r.holds is None]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "theta_D": [float(x) for x in self.theta_D],
            "theta_block": [float(x) for x in self.theta_block],
            "irreducible_above": [bool(x) for x in self.irreducible],
            "relations": [r.to_dict() for r in self.relations],
            "ok": self.ok,
        }


def ordering_report(spec: KernelSpec, chain: LiftedChain | None = None) -> OrderingReport:
    """Compute both eigenvalue sequences and check the ordering diagram.

    Always checked: ``theta^D_1 = theta^(1)``, ``theta^D_2 = theta^(2)``,
    ``theta^D_k >= theta^(k)`` and that both sequences are non-increasing.
    When ``Pi~_0`` restricted to ``{k..N}`` is irreducible, the strict
    decreases at ``k`` and ``theta^D_k > theta^(k)`` (``k >= 3``) are checked
    as well.  ``theta^(1) < 1`` is checked when ``Pi~_0`` is irreducible and
    some state is absorbed at 0 in one step.
    """
    N = spec.N
    chain = chain if chain is not None else lift_full(spec)
    tD = np.array([theta_dirichlet(chain, k) for k in range(1, N + 1)])
    tB = np.array([theta_block(spec, d) for d in range(N + 1)])
    # irreducible[k] : restriction of Pi~_0 to {k+1..N}, i.e. Pi~_k
    irreducible = np.array([is_irreducible(spec.restricted_above(k)) for k in range(N)])

    rel = [
        _relation("theta_D[1] = theta[1]", tD[0], tB[1], "equal"),
    ]
    if N >= 2:
        rel.append(_relation("theta_D[2] = theta[2]", tD[1], tB[2], "equal"))
    for k in range(3, N + 1):
        rel.append(_relation(f"theta_D[{k}] >= theta[{k}]", tD[k - 1], tB[k], "greater_or_equal"))
    for k in range(1, N):
        rel.append(_relation(f"theta_D[{k}] >= theta_D[{k + 1}]", tD[k - 1], tD[k], "greater_or_equal"))
    for d in range(N):
        rel.append(_relation(f"theta[{d}] >= theta[{d + 1}]", tB[d], tB[d + 1], "greater_or_equal"))

    for k in range(1, N):
        if not irreducible[k - 1]:
            continue
        rel.append(_relation(f"theta_D[{k}] > theta_D[{k + 1}]", tD[k - 1], tD[k], "greater"))
        rel.append(_relation(f"theta[{k}] > theta[{k + 1}]", tB[k], tB[k + 1], "greater"))
        if k >= 3:
            rel.append(_relation(f"theta_D[{k}] > theta[{k}]", tD[k - 1], tB[k], "greater"))
    if irreducible[0] and np.any(spec.rows[1:, 0] > 0):
        rel.append(_relation("1 > theta[1]", 1.0, tB[1], "greater"))
    return OrderingReport(tD, tB, irreducible, tuple(rel))
