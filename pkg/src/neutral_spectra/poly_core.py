"""Exact bivariate eigen-polynomials ``P_d``, the family ``H_d`` and Hahn polynomials.

Every polynomial here has an exact rational core.  ``P_d`` carries an
irrational normalising constant, stored as a sign and the square of a
positive rational so that nothing irrational is ever rounded before the final
float conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import PoleError

__all__ = [
    "binom",
    "pochhammer",
    "RationalUnivariatePoly",
    "RationalBivariatePoly",
    "ScaledPoly",
    "ScaledUnivariatePoly",
    "build_P",
    "eval_P",
    "hahn_H",
    "hahn_Q",
    "hahn_Q_poly",
    "orthogonality_sum",
    "orthogonality_sum_exact",
    "sqrt_rational",
]

Number = int | Fraction


def binom(n: int, k: int) -> int:
    """Binomial coefficient extended to negative ``n``.

    ``binom(n, 0) == 1`` for every integer ``n`` (so ``binom(-1, 0) == 1``);
    the coefficient is zero when ``k < 0``, when ``0 <= n < k`` and when
    ``n < 0 < k``.
    """
    if k < 0:
        return 0
    if k == 0:
        return 1
    if n < 0 or k > n:
        return 0
    return math.comb(n, k)


def pochhammer(a: Number, k: int) -> Fraction:
    """Rising factorial ``(a)_k = a (a+1) ... (a+k-1)`` as an exact rational."""
    out = Fraction(1)
    a = Fraction(a)
    for t in range(k):
        out *= a + t
    return out


def sqrt_rational(x: Fraction, bits: int = 80) -> float:
    """Square root of a nonnegative rational, rounded once to a float."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative argument")
    if x == 0:
        return 0.0
    # floor(sqrt(x) * 2**bits) computed in integers, then a single division
    root = math.isqrt((x.numerator << (2 * bits)) // x.denominator)
    return root / (1 << bits)


class RationalUnivariatePoly:
    """Polynomial in one variable with ``Fraction`` coefficients (ascending)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Number] = ()):
        c = [Fraction(a) for a in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(c)

    @classmethod
    def x(cls) -> "RationalUnivariatePoly":
        return cls([0, 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x: Number) -> Fraction:
        acc = Fraction(0)
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc

    def __add__(self, other):
        if not isinstance(other, RationalUnivariatePoly):
            other = RationalUnivariatePoly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return RationalUnivariatePoly(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return RationalUnivariatePoly(-a for a in self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RationalUnivariatePoly) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalUnivariatePoly):
            return RationalUnivariatePoly(a * other for a in self.coeffs)
        if self.is_zero() or other.is_zero():
            return RationalUnivariatePoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return RationalUnivariatePoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, RationalUnivariatePoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def derivative(self) -> "RationalUnivariatePoly":
        return RationalUnivariatePoly(i * a for i, a in enumerate(self.coeffs) if i)

    def compose(self, inner: "RationalUnivariatePoly") -> "RationalUnivariatePoly":
        """Return ``self(inner(x))``."""
        out = RationalUnivariatePoly()
        for a in reversed(self.coeffs):
            out = out * inner + a
        return out

    def shift(self, a: Number) -> "RationalUnivariatePoly":
        """Return ``self(x + a)``."""
        return self.compose(RationalUnivariatePoly([a, 1]))

    def reflect(self) -> "RationalUnivariatePoly":
        """Return ``self(-x)``."""
        return RationalUnivariatePoly(a if i % 2 == 0 else -a for i, a in enumerate(self.coeffs))

    def divmod(self, divisor: "RationalUnivariatePoly"):
        """Exact long division; returns ``(quotient, remainder)``."""
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.coeffs)
        dq = divisor.degree
        lead = divisor.coeffs[-1]
        quot = [Fraction(0)] * max(len(rem) - dq, 0)
        for k in range(len(rem) - 1, dq - 1, -1):
            c = rem[k] / lead
            quot[k - dq] = c
            if c:
                for t, b in enumerate(divisor.coeffs):
                    rem[k - dq + t] -= c * b
        return RationalUnivariatePoly(quot), RationalUnivariatePoly(rem[:dq])

    def __repr__(self):
        return f"RationalUnivariatePoly({[str(a) for a in self.coeffs]})"


class RationalBivariatePoly:
    """Polynomial in ``X`` and ``Y`` stored as ``{(i, j): Fraction}`` without zeros."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[tuple[int, int], Number] | None = None):
        self.coeffs: dict[tuple[int, int], Fraction] = {
            (int(i), int(j)): Fraction(c) for (i, j), c in (coeffs or {}).items() if c != 0
        }

    @classmethod
    def constant(cls, c: Number) -> "RationalBivariatePoly":
        return cls({(0, 0): c})

    @classmethod
    def linear(cls, a: Number, b: Number, c: Number) -> "RationalBivariatePoly":
        """The polynomial ``a X + b Y + c``."""
        return cls({(1, 0): a, (0, 1): b, (0, 0): c})

    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.coeffs), default=-1)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, i: int, j: int) -> Fraction:
        return self.coeffs.get((i, j), Fraction(0))

    def __call__(self, x: Number, y: Number) -> Fraction:
        x, y = Fraction(x), Fraction(y)
        total = Fraction(0)
        for (i, j), c in self.coeffs.items():
            total += c * x**i * y**j
        return total

    def __add__(self, other):
        if not isinstance(other, RationalBivariatePoly):
            other = RationalBivariatePoly.constant(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + c
        return RationalBivariatePoly(out)

    __radd__ = __add__

    def __neg__(self):
        return RationalBivariatePoly({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, RationalBivariatePoly):
            other = RationalBivariatePoly.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalBivariatePoly):
            other = Fraction(other)
            return RationalBivariatePoly({k: c * other for k, c in self.coeffs.items()})
        out: dict[tuple[int, int], Fraction] = {}
        for (i1, j1), a in self.coeffs.items():
            for (i2, j2), b in other.coeffs.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, Fraction(0)) + a * b
        return RationalBivariatePoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, RationalBivariatePoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def shift(self, a: Number, b: Number) -> "RationalBivariatePoly":
        """Return ``P(X + a, Y + b)``."""
        a, b = Fraction(a), Fraction(b)
        out: dict[tuple[int, int], Fraction] = {}
        for (i, j), c in self.coeffs.items():
            for p in range(i + 1):
                ca = c * math.comb(i, p) * a ** (i - p)
                if not ca:
                    continue
                for q in range(j + 1):
                    key = (p, q)
                    out[key] = out.get(key, Fraction(0)) + ca * math.comb(j, q) * b ** (j - q)
        return RationalBivariatePoly(out)

    def swap(self) -> "RationalBivariatePoly":
        """Return ``P(Y, X)``."""
        return RationalBivariatePoly({(j, i): c for (i, j), c in self.coeffs.items()})

    def reflect(self) -> "RationalBivariatePoly":
        """Return ``P(-X, -Y)``."""
        return RationalBivariatePoly(
            {(i, j): (c if (i + j) % 2 == 0 else -c) for (i, j), c in self.coeffs.items()}
        )

    def homogeneous_part(self, k: int) -> "RationalBivariatePoly":
        """The sum of the monomials of total degree ``k``."""
        return RationalBivariatePoly({(i, j): c for (i, j), c in self.coeffs.items() if i + j == k})

    def mul_x(self) -> "RationalBivariatePoly":
        return RationalBivariatePoly({(i + 1, j): c for (i, j), c in self.coeffs.items()})

    def mul_y(self) -> "RationalBivariatePoly":
        return RationalBivariatePoly({(i, j + 1): c for (i, j), c in self.coeffs.items()})

    def divisible_by_xy(self) -> bool:
        return all(i >= 1 and j >= 1 for i, j in self.coeffs)

    def on_line(self, x: RationalUnivariatePoly, y: RationalUnivariatePoly) -> RationalUnivariatePoly:
        """Substitute univariate polynomials for ``X`` and ``Y``."""
        out = RationalUnivariatePoly()
        xp: dict[int, RationalUnivariatePoly] = {0: RationalUnivariatePoly([1])}
        yp: dict[int, RationalUnivariatePoly] = {0: RationalUnivariatePoly([1])}
        for (i, j), c in self.coeffs.items():
            for pw, base, cache in ((i, x, xp), (j, y, yp)):
                for t in range(len(cache), pw + 1):
                    cache[t] = cache[t - 1] * base
            out = out + xp[i] * yp[j] * c
        return out

    def divisible_by_x_minus_y(self) -> bool:
        """``X - Y`` divides ``P`` iff ``P(X, X)`` is the zero polynomial."""
        t = RationalUnivariatePoly.x()
        return self.on_line(t, t).is_zero()

    def __repr__(self):
        items = ", ".join(f"{k}: {v}" for k, v in sorted(self.coeffs.items()))
        return f"RationalBivariatePoly({{{items}}})"


@dataclass(frozen=True)
class ScaledPoly:
    """The polynomial ``sign * sqrt(scale_sq) * core``."""

    core: RationalBivariatePoly
    scale_sq: Fraction = Fraction(1)
    sign: int = 1

    def __post_init__(self):
        if self.scale_sq <= 0:
            raise ValueError("scale_sq must be positive")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def degree(self) -> int:
        return self.core.degree

    @property
    def scale(self) -> float:
        return self.sign * sqrt_rational(self.scale_sq)

    def __call__(self, x: Number, y: Number) -> float:
        v = self.core(x, y)
        if v == 0:
            return 0.0
        sgn = self.sign if v > 0 else -self.sign
        return sgn * sqrt_rational(self.scale_sq * v * v)

    def coefficient(self, i: int, j: int) -> float:
        c = self.core.coefficient(i, j)
        if c == 0:
            return 0.0
        sgn = self.sign if c > 0 else -self.sign
        return sgn * sqrt_rational(self.scale_sq * c * c)

    def describe(self) -> str:
        """Text form ``sqrt(s) * (i,j):c + ...`` with a leading ``-`` for negative sign."""
        head = "-" if self.sign < 0 else ""
        terms = " + ".join(f"({i},{j}):{c}" for (i, j), c in sorted(self.core.coeffs.items()))
        return f"{head}sqrt({self.scale_sq}) * {terms}"


@dataclass(frozen=True)
class ScaledUnivariatePoly:
    """The univariate polynomial ``sign * sqrt(scale_sq) * core``."""

    core: RationalUnivariatePoly
    scale_sq: Fraction = Fraction(1)
    sign: int = 1

    def __call__(self, x: Number) -> float:
        v = self.core(x)
        if v == 0:
            return 0.0
        sgn = self.sign if v > 0 else -self.sign
        return sgn * sqrt_rational(self.scale_sq * v * v)


def _psi(d: int) -> RationalBivariatePoly:
    """Unnormalised polynomial solution from the terminating hypergeometric sum.

    ``psi_d = (-X-Y)_d * sum_{k=1}^d (-d)_k (d-1)_k / ((k-1)! k!) * (-X)_k / (-X-Y)_k``,
    where the ratio ``(-X-Y)_d / (-X-Y)_k`` is the polynomial ``(-X-Y+k)_{d-k}``.
    """
    total = RationalBivariatePoly()
    for k in range(1, d + 1):
        c = pochhammer(-d, k) * pochhammer(d - 1, k) / (math.factorial(k - 1) * math.factorial(k))
        if c == 0:
            continue
        term = RationalBivariatePoly.constant(c)
        for t in range(k):
            term = term * RationalBivariatePoly.linear(-1, 0, t)  # (-X)_k
        for t in range(k, d):
            term = term * RationalBivariatePoly.linear(-1, -1, t)  # (-X-Y+k)_{d-k}
        total = total + term
    return total


@lru_cache(maxsize=None)
def build_P(d: int, second: bool = False) -> ScaledPoly:
    """The universal polynomial ``P_d``.

    For ``d >= 2`` the core is normalised to have ``(d-1, 1)``-coefficient 1,
    so that ``P_d = (-1)^d * sqrt(4 d (d-1) (2d-1)) * core``.  ``second``
    selects ``P_1^{(2)} = Y`` instead of ``P_1^{(1)} = X`` when ``d == 1``.
    """
    if d < 0:
        raise ValueError("degree must be nonnegative")
    if d == 0:
        return ScaledPoly(RationalBivariatePoly.constant(1))
    if d == 1:
        return ScaledPoly(RationalBivariatePoly({(0, 1) if second else (1, 0): 1}))
    psi = _psi(d)
    c_sq = Fraction(4 * (2 * d - 1), d * (d - 1))
    c_sign = 1 if (d + 1) % 2 == 0 else -1
    lead = psi.coefficient(d - 1, 1)
    core = psi * (1 / lead)
    sign = c_sign if lead > 0 else -c_sign
    return ScaledPoly(core=core, scale_sq=c_sq * lead * lead, sign=sign)


def eval_P(d: int, i: int, j: int, second: bool = False) -> float:
    """Point value ``P_d(i, j)`` as a float."""
    return build_P(d, second)(i, j)


@lru_cache(maxsize=None)
def hahn_H(d: int) -> ScaledUnivariatePoly:
    """``H_d(w) = [P_d]_d((1+w)/2, (1-w)/2)``, the top part of ``P_d`` on the simplex line."""
    if d < 2:
        raise ValueError("hahn_H requires d >= 2")
    p = build_P(d)
    half = Fraction(1, 2)
    top = p.core.homogeneous_part(d)
    h = top.on_line(RationalUnivariatePoly([half, half]), RationalUnivariatePoly([half, -half]))
    return ScaledUnivariatePoly(h, p.scale_sq, p.sign)


def _hahn_terms(kmax: int, alpha: Number, beta: Number, N: int, n_eff: int | None = None):
    """Yield ``(k, coefficient)`` for ``k <= kmax``, the coefficient of ``(-x)_k`` in ``Q_n``.

    ``n`` is ``n_eff`` (defaults to ``kmax``).  Stops at the first vanishing
    numerator factor; a vanishing denominator met before that raises
    :class:`PoleError`.
    """
    n = kmax if n_eff is None else n_eff
    alpha, beta = Fraction(alpha), Fraction(beta)
    c = Fraction(1)
    yield 0, c
    for k in range(1, kmax + 1):
        num = (-n + k - 1) * (n + alpha + beta + k)
        den = (alpha + k) * (-N + k) * k
        if num == 0:
            return
        if den == 0:
            raise PoleError(f"Pochhammer denominator vanishes at k={k} (alpha={alpha}, N={N})")
        c = c * num / den
        yield k, c


def hahn_Q(n: int, alpha: Number, beta: Number, N: int, x: Number) -> Fraction:
    """Exact value of ``Q_n(x; alpha, beta, N) = 3F2(-n, -x, n+alpha+beta+1; alpha+1, -N+1; 1)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = Fraction(x)
    # (-x)_k vanishes for k > x when x is a nonnegative integer
    kmax = n
    if x.denominator == 1 and 0 <= x < n:
        kmax = int(x)
    total = Fraction(0)
    rising = Fraction(1)  # (-x)_k
    for k, c in _hahn_terms(kmax, alpha, beta, N, n_eff=n):
        if k:
            rising *= -x + k - 1
        total += c * rising
    return total


def hahn_Q_poly(n: int, alpha: Number, beta: Number, N: int) -> RationalUnivariatePoly:
    """``Q_n(x; alpha, beta, N)`` as a polynomial in ``x``."""
    out = RationalUnivariatePoly()
    rising = RationalUnivariatePoly([1])
    for k, c in _hahn_terms(n, alpha, beta, N):
        if k:
            rising = rising * RationalUnivariatePoly([k - 1, -1])
        out = out + rising * c
    return out


def orthogonality_sum_exact(d: int, d2: int, k: int) -> tuple[Fraction, Fraction, int]:
    """Exact form ``(core_sum, scale_sq, sign)`` of the weighted line sum.

    The value is ``sign * sqrt(scale_sq) * core_sum`` with
    ``core_sum = sum_i core_d(i, k-i) core_d2(i, k-i) / (i (k-i))``.
    """
    p, q = build_P(d), build_P(d2)
    core_sum = sum(
        (p.core(i, k - i) * q.core(i, k - i) / (i * (k - i)) for i in range(1, k)),
        Fraction(0),
    )
    return core_sum, p.scale_sq * q.scale_sq, p.sign * q.sign


def orthogonality_sum(d: int, d2: int, k: int) -> float:
    """``sum_{i=1}^{k-1} P_d(i, k-i) P_d2(i, k-i) / (i (k-i))`` as a float."""
    core_sum, s, sign = orthogonality_sum_exact(d, d2, k)
    if core_sum == 0:
        return 0.0
    sgn = sign if core_sum > 0 else -sign
    return sgn * sqrt_rational(s * core_sum * core_sum)
