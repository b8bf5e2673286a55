"""Absorbed two-dimensional chains: block structure, Yaglom limits and quasi-stationary distributions.

States of ``T_N`` split into the absorbing point ``(0, 0)``, axis 1
``{(i, 0)}``, axis 2 ``{(0, j)}`` and the interior ``S* = {i, j >= 1}``.
Both axes are closed (absorbing as sets), so the transition matrix restricted
to ``T_N \\ {(0,0)}`` has the block form

    [[Q1, 0,  0 ],
     [0,  Q2, 0 ],
     [R1, R2, Q3]]

with the remaining mass of each row going to ``(0, 0)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateError,
    HypothesisError,
    StructureError,
    TieToleranceWarning,
    ValidationError,
)
from .kernel_spec import KernelSpec
from .neutral_lift import TriIndex, lift_full
from .rng import stream_keys, uniform_block
from .spectral import PerronPair, is_irreducible, perron_pair, period

__all__ = [
    "TIE_EQUAL_RTOL",
    "TIE_STRICT_RTOL",
    "ROW_TOL",
    "CASES",
    "CASE_CONDITIONS",
    "A2dMCSpec",
    "extract_blocks",
    "from_blocks",
    "compare_roots",
    "YaglomReport",
    "yaglom_limit",
    "QSD",
    "QSDEnumeration",
    "enumerate_qsd",
    "ConditionalLaw",
    "conditional_law_exact",
    "total_variation",
    "RnReport",
    "rn_power",
    "rn_asymptotics_check",
    "PerturbVerdict",
    "perturb_lifted",
    "perturb_experiment",
    "random_a2dmc",
]

TIE_EQUAL_RTOL = 1e-9
TIE_STRICT_RTOL = 1e-7
ROW_TOL = 1e-10

CASES = ("StrongType1", "StrongType2", "Coexistence", "TieAboveQ3", "TieEqualsQ3")
CASE_CONDITIONS = {
    "StrongType1": "theta1>=theta3 and theta1>theta2",
    "StrongType2": "theta2>=theta3 and theta2>theta1",
    "Coexistence": "theta3>theta1,theta2",
    "TieAboveQ3": "theta1=theta2>theta3",
    "TieEqualsQ3": "theta1=theta2=theta3",
    "Axis1": "initial state on axis 1",
    "Axis2": "initial state on axis 2",
}


@dataclass(frozen=True, eq=False)
class A2dMCSpec:
    """Transition matrix over ``T_N`` with its extracted blocks.

    Block rows and columns follow the orders ``index.axis1``, ``index.axis2``
    and ``index.interior``; ``r`` is the one-step absorption from the interior.
    """

    index: TriIndex
    pi: np.ndarray = field(repr=False)
    Q1: np.ndarray = field(repr=False)
    Q2: np.ndarray = field(repr=False)
    Q3: np.ndarray = field(repr=False)
    R1: np.ndarray = field(repr=False)
    R2: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    hypotheses: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return self.index.N

    @property
    def survival_order(self) -> list[int]:
        """Indices of ``T_N \\ {(0,0)}`` in block order (axis 1, axis 2, interior)."""
        return self.index.axis1 + self.index.axis2 + self.index.interior

    def substochastic(self) -> np.ndarray:
        """``Q``: the matrix restricted to ``T_N \\ {(0,0)}`` in block order."""
        order = self.survival_order
        return self.pi[np.ix_(order, order)]

    def assemble(self) -> np.ndarray:
        """Rebuild the full matrix from the blocks."""
        return _assemble(self.index, self.Q1, self.Q2, self.Q3, self.R1, self.R2)

    def to_full(self, axis1=None, axis2=None, interior=None) -> np.ndarray:
        """Place block-ordered pieces into a vector over ``T_N`` (zero elsewhere)."""
        out = np.zeros(self.index.size)
        for part, idx in ((axis1, self.index.axis1), (axis2, self.index.axis2),
                          (interior, self.index.interior)):
            if part is not None:
                out[idx] = part
        return out


def _assemble(index: TriIndex, Q1, Q2, Q3, R1, R2) -> np.ndarray:
    pi = np.zeros((index.size, index.size))
    a1, a2, s = index.axis1, index.axis2, index.interior
    pi[np.ix_(a1, a1)] = Q1
    pi[np.ix_(a2, a2)] = Q2
    if s:
        pi[np.ix_(s, s)] = Q3
        pi[np.ix_(s, a1)] = R1
        pi[np.ix_(s, a2)] = R2
    o = index.index(0, 0)
    pi[o, o] = 1.0
    pi[:, o] += 1.0 - pi.sum(axis=1)
    pi[o, o] = 1.0
    return pi


def _check_hypotheses(Q: np.ndarray) -> dict:
    irr = Q.size > 0 and is_irreducible(Q)
    return {"irreducible": bool(irr), "period": period(Q) if irr else None}


def extract_blocks(pi: np.ndarray, index: TriIndex | None = None) -> A2dMCSpec:
    """Split a matrix over ``T_N`` into ``Q1, Q2, Q3, R1, R2, r``.

    Raises :class:`StructureError` when ``(0,0)`` is not absorbing, a row is
    not stochastic, or an axis state reaches the interior or the other axis.
    Irreducibility and period of each ``Q_i`` are recorded in ``hypotheses``.
    """
    pi = np.array(pi, dtype=float)
    index = index or TriIndex.from_size(pi.shape[0])
    if pi.shape != (index.size, index.size):
        raise StructureError(f"matrix shape {pi.shape} does not match |T_{index.N}| = {index.size}")
    if np.any(pi < 0) or not np.all(np.isfinite(pi)):
        raise StructureError("matrix has negative or non-finite entries")
    defect = np.abs(pi.sum(axis=1) - 1.0)
    if defect.max() > ROW_TOL:
        a = int(np.argmax(defect))
        raise StructureError(f"row {index.state(a)} sums to {pi[a].sum():.12g}")
    o = index.index(0, 0)
    if pi[o, o] != 1.0:
        raise StructureError(f"(0,0) is not absorbing (mass {pi[o, o]!r} stays)")
    a1, a2, s = index.axis1, index.axis2, index.interior
    for name, rows, cols in (
        ("axis 1 -> interior", a1, s),
        ("axis 1 -> axis 2", a1, a2),
        ("axis 2 -> interior", a2, s),
        ("axis 2 -> axis 1", a2, a1),
    ):
        if rows and cols:
            block = pi[np.ix_(rows, cols)]
            if np.any(block > 0):
                r, c = np.argwhere(block > 0)[0]
                raise StructureError(
                    f"block {name} must vanish: {index.state(rows[r])} -> {index.state(cols[c])} "
                    f"has mass {block[r, c]:.3e} (block shape {block.shape})"
                )
    Q1 = pi[np.ix_(a1, a1)]
    Q2 = pi[np.ix_(a2, a2)]
    Q3 = pi[np.ix_(s, s)]
    R1 = pi[np.ix_(s, a1)]
    R2 = pi[np.ix_(s, a2)]
    r = pi[s, o] if s else np.zeros(0)
    hyp = {
        "Q1": _check_hypotheses(Q1),
        "Q2": _check_hypotheses(Q2),
        "Q3": _check_hypotheses(Q3),
        "R1_nonzero": bool(np.any(R1 > 0)),
        "R2_nonzero": bool(np.any(R2 > 0)),
    }
    return A2dMCSpec(index, pi, Q1, Q2, Q3, R1, R2, r, hyp)


def from_blocks(N: int, Q1, Q2, Q3, R1, R2) -> A2dMCSpec:
    """Build an A2dMC from its blocks; the row defects become absorption at ``(0,0)``."""
    index = TriIndex(N)
    mats = [np.asarray(m, dtype=float) for m in (Q1, Q2, Q3, R1, R2)]
    n_int = len(index.interior)
    shapes = [(N, N), (N, N), (n_int, n_int), (n_int, N), (n_int, N)]
    for name, m, shp in zip(("Q1", "Q2", "Q3", "R1", "R2"), mats, shapes):
        if m.shape != shp:
            raise ValidationError(f"{name} has shape {m.shape}, expected {shp}")
        if np.any(m < 0):
            raise ValidationError(f"{name} has negative entries")
    pi = _assemble(index, *mats)
    o = index.index(0, 0)
    if np.any(pi[:, o] < -ROW_TOL):
        a = int(np.argmin(pi[:, o]))
        raise ValidationError(f"row {index.state(a)} has mass {1 - pi[a, o]:.12g} > 1")
    pi[:, o] = np.maximum(pi[:, o], 0.0)
    return extract_blocks(pi, index)


def compare_roots(a: float, b: float) -> str:
    """``"eq"``, ``"gt"``, ``"lt"`` or ``"ind"`` (inside the tie tolerance band)."""
    rel = abs(a - b) / max(abs(a), abs(b), 1e-300)
    if rel < TIE_EQUAL_RTOL:
        return "eq"
    if rel > TIE_STRICT_RTOL:
        return "gt" if a > b else "lt"
    return "ind"


def _require(spec: A2dMCSpec):
    hyp = spec.hypotheses
    for name in ("Q1", "Q2", "Q3"):
        h = hyp[name]
        if not h["irreducible"]:
            raise HypothesisError(f"{name} is not irreducible")
        if h["period"] != 1:
            raise HypothesisError(f"{name} is periodic (period {h['period']})")
    for name in ("R1", "R2"):
        if not hyp[f"{name}_nonzero"]:
            raise HypothesisError(f"{name} vanishes")


@dataclass(frozen=True)
class _Roots:
    p1: PerronPair
    p2: PerronPair
    p3: PerronPair

    @property
    def theta(self):
        return (self.p1.theta, self.p2.theta, self.p3.theta)


def _roots(spec: A2dMCSpec) -> _Roots:
    _require(spec)
    return _Roots(perron_pair(spec.Q1), perron_pair(spec.Q2), perron_pair(spec.Q3))


def _classify(r12: str, rtop3: str) -> str:
    if r12 == "eq":
        return {"gt": "TieAboveQ3", "eq": "TieEqualsQ3", "lt": "Coexistence"}[rtop3]
    if rtop3 == "lt":
        return "Coexistence"
    return "StrongType1" if r12 == "gt" else "StrongType2"


def _candidate_cases(theta) -> list[str]:
    """Every case consistent with some resolution of indeterminate comparisons.

    The first entry is the primary classification, which resolves
    indeterminate comparisons as ties.
    """
    t1, t2, t3 = theta
    r12 = compare_roots(t1, t2)
    opts12 = ["eq", "gt" if t1 > t2 else "lt"] if r12 == "ind" else [r12]
    out = []
    for a in opts12:
        top = max(t1, t2) if a == "eq" else (t1 if a == "gt" else t2)
        r3 = compare_roots(top, t3)
        opts3 = ["eq", "gt" if top > t3 else "lt"] if r3 == "ind" else [r3]
        for b in opts3:
            c = _classify(a, b)
            if c not in out:
                out.append(c)
    return out


def _solve_left(theta: float, Q: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Row vector ``x`` with ``x (theta I - Q) = rhs``."""
    A = theta * np.eye(Q.shape[0]) - Q
    return np.linalg.solve(A.T, rhs)


def _solve_right(theta: float, Q: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Column vector ``x`` with ``(theta I - Q) x = rhs``."""
    A = theta * np.eye(Q.shape[0]) - Q
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class YaglomReport:
    """Limit of the conditional law given survival.

    ``distribution`` is indexed like ``index.states`` with zero mass at
    ``(0,0)``.  ``alternatives`` lists every other case compatible with the
    tie tolerances (empty when the classification is unambiguous).
    """

    case: str
    theta: tuple[float, float, float]
    distribution: np.ndarray = field(repr=False)
    initial: tuple[int, int]
    index: TriIndex = field(repr=False)
    eigen_data: dict = field(repr=False, default_factory=dict)
    p: float | None = None
    q: float | None = None
    alternatives: tuple = ()
    alternative_distributions: dict = field(repr=False, default_factory=dict)

    @property
    def condition(self) -> str:
        return CASE_CONDITIONS[self.case]

    def mass(self, region: str) -> float:
        idx = {"axis1": self.index.axis1, "axis2": self.index.axis2,
               "interior": self.index.interior}[region]
        return float(self.distribution[idx].sum())

    def to_dict(self) -> dict:
        def vec(x):
            return None if x is None else [float(v) for v in np.ravel(x)]

        return {
            "case": self.case,
            "condition": self.condition,
            "theta": [float(t) for t in self.theta],
            "initial": list(self.initial),
            "p": self.p,
            "q": self.q,
            "alternatives": list(self.alternatives),
            "distribution": {f"{i},{j}": float(self.distribution[k])
                             for k, (i, j) in enumerate(self.index.states) if (i, j) != (0, 0)},
            "eigen_data": {k: vec(v) for k, v in sorted(self.eigen_data.items())},
        }


def _limit_for_case(spec: A2dMCSpec, roots: _Roots, case: str, initial):
    """Return ``(distribution, p, q, extra)`` for an interior initial state."""
    t1, t2, t3 = roots.theta
    u1, v1 = roots.p1.u, roots.p1.v
    u2, v2 = roots.p2.u, roots.p2.v
    v3 = roots.p3.v
    if case == "StrongType1":
        return spec.to_full(axis1=v1), None, None, {}
    if case == "StrongType2":
        return spec.to_full(axis2=v2), None, None, {}
    if case == "Coexistence":
        w1 = _solve_left(t3, spec.Q1, v3 @ spec.R1)
        w2 = _solve_left(t3, spec.Q2, v3 @ spec.R2)
        z = 1.0 + w1.sum() + w2.sum()
        return spec.to_full(axis1=w1 / z, axis2=w2 / z, interior=v3 / z), None, None, {"w1": w1, "w2": w2}
    if case == "TieAboveQ3":
        a = spec.index.interior.index(spec.index.index(*initial))
        x1 = _solve_right(t1, spec.Q3, spec.R1 @ u1)
        x2 = _solve_right(t2, spec.Q3, spec.R2 @ u2)
        p = float(x1[a] / (x1[a] + x2[a]))
        return spec.to_full(axis1=p * v1, axis2=(1 - p) * v2), p, None, {}
    if case == "TieEqualsQ3":
        a1 = float(v3 @ spec.R1 @ u1)
        a2 = float(v3 @ spec.R2 @ u2)
        q = a1 / (a1 + a2)
        return spec.to_full(axis1=q * v1, axis2=(1 - q) * v2), None, q, {}
    raise ValueError(case)


def yaglom_limit(spec: A2dMCSpec, initial: tuple[int, int]) -> YaglomReport:
    """Limiting conditional law from ``initial`` given non-absorption.

    Requires ``Q1, Q2, Q3`` irreducible and aperiodic and ``R1, R2`` nonzero
    (:class:`HypothesisError` otherwise).  Axis initial states give the QSD of
    their own axis.  When a Perron-root comparison falls between the tie and
    strict tolerances a :class:`TieToleranceWarning` is issued, the tie
    reading is reported and the other readings go to ``alternatives``.
    """
    initial = tuple(int(x) for x in initial)
    index = spec.index
    if initial == (0, 0) or initial not in index.states:
        raise ValidationError(f"initial state {initial} must lie in T_{index.N} minus (0,0)")
    roots = _roots(spec)
    theta = roots.theta
    eigen = {"u1": roots.p1.u, "v1": roots.p1.v, "u2": roots.p2.u, "v2": roots.p2.v,
             "u3": roots.p3.u, "v3": roots.p3.v}
    i, j = initial
    if j == 0:
        return YaglomReport("Axis1", theta, spec.to_full(axis1=roots.p1.v), initial, index, eigen)
    if i == 0:
        return YaglomReport("Axis2", theta, spec.to_full(axis2=roots.p2.v), initial, index, eigen)
    cases = _candidate_cases(theta)
    if len(cases) > 1:
        warnings.warn(
            f"Perron roots {theta} fall in the tie tolerance band; candidate cases {cases}",
            TieToleranceWarning,
            stacklevel=2,
        )
    dist, p, q, extra = _limit_for_case(spec, roots, cases[0], initial)
    eigen.update(extra)
    alts = {c: _limit_for_case(spec, roots, c, initial)[0] for c in cases[1:]}
    return YaglomReport(cases[0], theta, dist, initial, index, eigen, p, q, tuple(cases[1:]), alts)


@dataclass(frozen=True)
class QSD:
    """A quasi-stationary distribution ``nu`` with ``nu Q = theta nu``."""

    kind: str
    theta: float
    measure: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class QSDEnumeration:
    """All QSDs of an A2dMC.

    ``axis1`` and ``axis2`` are the two trivial QSDs.  When ``family`` is
    True every mixture ``p axis1 + (1-p) axis2`` is a QSD as well (this needs
    ``theta1 = theta2``; otherwise a mixture is not an eigenvector).
    ``interior`` is the QSD charging ``S*``, present iff ``theta3 > max(theta1, theta2)``.
    """

    theta: tuple[float, float, float]
    axis1: QSD
    axis2: QSD
    family: bool
    interior: QSD | None

    def measures(self) -> list[QSD]:
        out = [self.axis1, self.axis2]
        if self.interior is not None:
            out.append(self.interior)
        return out

    def mixture(self, p: float) -> QSD:
        if not self.family:
            raise ValueError("mixtures are QSDs only when theta1 = theta2")
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        return QSD("family", self.axis1.theta,
                   p * self.axis1.measure + (1 - p) * self.axis2.measure)


def enumerate_qsd(spec: A2dMCSpec) -> QSDEnumeration:
    """The trivial QSDs, whether their mixtures are QSDs, and the interior QSD if it exists."""
    roots = _roots(spec)
    t1, t2, t3 = roots.theta
    ax1 = QSD("axis1", t1, spec.to_full(axis1=roots.p1.v))
    ax2 = QSD("axis2", t2, spec.to_full(axis2=roots.p2.v))
    family = compare_roots(t1, t2) == "eq"
    interior = None
    if compare_roots(t3, max(t1, t2)) == "gt":
        dist, *_ = _limit_for_case(spec, roots, "Coexistence", None)
        interior = QSD("interior", t3, dist)
    return QSDEnumeration((t1, t2, t3), ax1, ax2, family, interior)


@dataclass(frozen=True)
class ConditionalLaw:
    """Law at time ``n`` given survival, with ``log_mass = log P(survive to n)``."""

    n: int
    distribution: np.ndarray = field(repr=False)
    log_mass: float


def conditional_law_exact(spec: A2dMCSpec, initial: tuple[int, int], n: int) -> ConditionalLaw:
    """Row ``initial`` of ``Q^n`` renormalized; normalizing constants tracked in log space."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    index = spec.index
    initial = tuple(int(x) for x in initial)
    if initial == (0, 0):
        raise ValidationError("conditional law from (0,0) is undefined")
    order = spec.survival_order
    Q = spec.substochastic()
    x = np.zeros(len(order))
    x[order.index(index.index(*initial))] = 1.0
    log_mass = 0.0
    for _ in range(n):
        x = x @ Q
        s = x.sum()
        if not s > 0 or not math.isfinite(s):
            raise DegenerateError("all probability mass absorbed")
        log_mass += math.log(s)
        x /= s
    out = np.zeros(index.size)
    out[order] = x
    return ConditionalLaw(n, out, log_mass)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def rn_power(spec: A2dMCSpec, n: int, axis: int = 1) -> np.ndarray:
    """``R^(n) = sum_{k<n} Q3^k R Q^{n-1-k}`` for axis 1 or 2, by the recurrence ``R^(n+1) = R^(n) Q + Q3^n R``."""
    Q = spec.Q1 if axis == 1 else spec.Q2
    R = spec.R1 if axis == 1 else spec.R2
    Rn = np.zeros_like(R)
    Q3k = np.eye(spec.Q3.shape[0])
    for _ in range(n):
        Rn = Rn @ Q + Q3k @ R
        Q3k = Q3k @ spec.Q3
    return Rn


@dataclass(frozen=True)
class RnReport:
    """Entry-wise ratios of ``R^(n)`` to its predicted asymptote, per grid point."""

    regime: str
    n_grid: tuple[int, ...]
    max_deviation: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"regime": self.regime, "n": list(self.n_grid),
                "max_abs_ratio_minus_1": list(self.max_deviation)}


def rn_asymptotics_check(spec: A2dMCSpec, n_grid, axis: int = 1) -> RnReport:
    """Compare ``R^(n)`` with its leading-order asymptote.

    The regime follows the comparison of ``theta`` (axis) and ``theta3``:
    ``theta^n (theta I - Q3)^{-1} R u v`` when the axis root dominates,
    ``theta3^n u3 v3 R (theta3 I - Q)^{-1}`` when ``theta3`` does, and
    ``n theta^{n-1} u3 v3 R u v`` when they agree.
    """
    roots = _roots(spec)
    pa = roots.p1 if axis == 1 else roots.p2
    Q = spec.Q1 if axis == 1 else spec.Q2
    R = spec.R1 if axis == 1 else spec.R2
    t, t3 = pa.theta, roots.p3.theta
    rel = compare_roots(t, t3)
    if rel == "ind":
        raise HypothesisError(f"theta={t} and theta3={t3} are in the tie tolerance band")
    u, v = pa.u, pa.v
    u3, v3 = roots.p3.u, roots.p3.v
    # everything is divided by s^n, s the dominant root, to avoid underflow
    s = max(t, t3)
    if rel == "gt":
        regime = "axis"
        base = np.linalg.inv(t * np.eye(len(u3)) - spec.Q3) @ R @ np.outer(u, v)
        pred = lambda n: (t / s) ** n * base  # noqa: E731
    elif rel == "lt":
        regime = "interior"
        base = np.outer(u3, v3) @ R @ np.linalg.inv(t3 * np.eye(len(u)) - Q)
        pred = lambda n: (t3 / s) ** n * base  # noqa: E731
    else:
        regime = "tie"
        base = np.outer(u3, v3) @ R @ np.outer(u, v)
        pred = lambda n: (n / t) * base  # noqa: E731
    grid = tuple(sorted(int(n) for n in n_grid))
    devs = []
    Qs, Q3s = Q / s, spec.Q3 / s
    Rn = np.zeros_like(R)
    Q3k = np.eye(spec.Q3.shape[0])
    k = 0
    for n in grid:
        while k < n:
            Rn = Rn @ Qs + Q3k @ R / s
            Q3k = Q3k @ Q3s
            k += 1
        devs.append(float(np.abs(Rn / pred(n) - 1.0).max()))
    return RnReport(regime, grid, tuple(devs))


def perturb_lifted(spec: KernelSpec, epsilon: float, seed: int) -> A2dMCSpec:
    """Lift ``spec`` and multiply each positive interior-row entry by ``1 + epsilon*xi``.

    ``xi`` is uniform on ``[-1, 1)`` from the counter-based generator (stream
    ``a`` for the row of state ``a``).  Rows are renormalized, so supports and
    the block zeros are preserved and each entry moves by at most about
    ``2 epsilon``.  Axis rows are left untouched.
    """
    if epsilon < 0 or epsilon >= 1:
        raise ValueError("epsilon must lie in [0, 1)")
    chain = lift_full(spec)
    pi = chain.pi.copy()
    interior = chain.index.interior
    if epsilon > 0 and interior:
        keys = stream_keys(seed, np.array(interior))
        xi = 2.0 * uniform_block(keys, 0, chain.index.size) - 1.0
        rows = pi[interior] * (1.0 + epsilon * xi)
        pi[interior] = rows / rows.sum(axis=1, keepdims=True)
    return extract_blocks(pi, chain.index)


@dataclass(frozen=True)
class PerturbVerdict:
    """Outcome of one perturbation; ``no_coexistence`` is the asserted property."""

    epsilon: float
    seed: int
    theta: tuple[float, float, float]
    case: str
    margin: float

    @property
    def no_coexistence(self) -> bool:
        return self.case != "Coexistence" and self.theta[2] < max(self.theta[:2])

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "seed": self.seed, "theta": list(self.theta),
                "case": self.case, "margin": self.margin, "no_coexistence": self.no_coexistence}


def perturb_experiment(spec: KernelSpec, epsilon: float, seed: int) -> PerturbVerdict:
    """Perturb the lifted neutral chain and classify its Yaglom regime.

    ``margin = max(theta1, theta2) - theta3``.
    """
    a = perturb_lifted(spec, epsilon, seed)
    roots = _roots(a)
    theta = roots.theta
    case = _candidate_cases(theta)[0]
    return PerturbVerdict(epsilon, seed, theta, case, float(max(theta[:2]) - theta[2]))


def _scaled_positive(rng, n: int, target: float) -> np.ndarray:
    M = rng.uniform(0.8, 1.0, (n, n))
    return M * (target / perron_pair(M).theta)


def random_a2dmc(seed: int, N: int = 3, ratio: float | None = None) -> A2dMCSpec:
    """Seeded A2dMC with positive blocks.

    ``theta1, theta2`` are drawn from ``[0.3, 0.6]``; ``theta3`` is set to
    ``ratio * max(theta1, theta2)`` (``ratio`` drawn from ``[0.8, 0.97]`` or
    ``[1.03, 1.25]`` when omitted, so fixtures straddle the coexistence
    threshold).  Half of each interior row's slack goes to ``R1, R2``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    rng = np.random.default_rng(seed)
    t1, t2 = rng.uniform(0.3, 0.6, 2)
    if ratio is None:
        ratio = rng.uniform(1.03, 1.25) if rng.uniform() < 0.5 else rng.uniform(0.8, 0.97)
    n_int = N * (N - 1) // 2
    Q1 = _scaled_positive(rng, N, t1)
    Q2 = _scaled_positive(rng, N, t2)
    Q3 = _scaled_positive(rng, n_int, ratio * max(t1, t2))
    slack = 1.0 - Q3.sum(axis=1)
    if np.any(slack <= 0):
        raise ValidationError("interior rows leave no room for R1, R2")
    W = rng.uniform(0.1, 1.0, (n_int, 2 * N))
    W *= (0.5 * slack / W.sum(axis=1))[:, None]
    return from_blocks(N, Q1, Q2, Q3, W[:, :N], W[:, N:])
