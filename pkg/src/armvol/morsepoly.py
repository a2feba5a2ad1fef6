"""Exact integer polynomial arithmetic for Poincare/Bott-Morse bookkeeping.

Everything here is exact: coefficients are Python ints and no floating
point enters the module.  The central check is whether the weighted sum of
critical-manifold Poincare polynomials minus the manifold polynomial is
divisible by (1 + t) with a non-negative quotient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


def _canonical(coeffs: Iterable[int]) -> tuple[int, ...]:
    out = []
    for c in coeffs:
        if isinstance(c, bool) or not isinstance(c, int):
            raise TypeError(f"integer coefficient expected, got {c!r}")
        out.append(c)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class IntPolynomial:
    """Polynomial in t with integer coefficients, index = degree.

    Canonical form: no trailing zero coefficients; the zero polynomial has
    an empty coefficient tuple.
    """

    coefficients: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", _canonical(self.coefficients))

    @classmethod
    def zero(cls) -> "IntPolynomial":
        return cls(())

    @classmethod
    def one(cls) -> "IntPolynomial":
        return cls((1,))

    @property
    def degree(self) -> int:
        """Degree, or -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        return IntPolynomial(tuple(x + y for x, y in zip(a, b)) + a[len(b):])

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial(tuple(-c for c in self.coefficients))

    def __sub__(self, other: "IntPolynomial") -> "IntPolynomial":
        return self + (-other)

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coefficients, other.coefficients
        if not a or not b:
            return IntPolynomial.zero()
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return IntPolynomial(tuple(out))

    def shifted(self, power: int) -> "IntPolynomial":
        """Multiply by t**power."""
        if power < 0:
            raise ValueError("power must be non-negative")
        if self.is_zero():
            return self
        return IntPolynomial((0,) * power + self.coefficients)

    def evaluate(self, t: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * t + c
        return acc

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            if k == 0:
                terms.append(str(c))
            else:
                var = "t" if k == 1 else f"t^{k}"
                if c == 1:
                    terms.append(var)
                elif c == -1:
                    terms.append(f"-{var}")
                else:
                    terms.append(f"{c}{var}")
        return " + ".join(terms).replace("+ -", "- ")


ONE_PLUS_T = IntPolynomial((1, 1))


def divide_by_one_plus_t(poly: IntPolynomial) -> tuple[IntPolynomial, int]:
    """Synthetic division by (1 + t): returns (quotient, remainder).

    The remainder is the value at t = -1 (the alternating coefficient sum);
    it vanishes iff the polynomial is divisible.
    """
    if poly.is_zero():
        return IntPolynomial.zero(), 0
    coeffs = poly.coefficients
    synth = [0] * len(coeffs)
    acc = 0
    for k in range(len(coeffs) - 1, -1, -1):
        acc = coeffs[k] - acc
        synth[k] = acc
    return IntPolynomial(tuple(synth[1:])), synth[0]


@dataclass(frozen=True)
class CriticalManifoldDatum:
    """A critical manifold: transversal index plus its Poincare polynomial."""

    index: int
    poincare: IntPolynomial

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("transversal index must be non-negative")


@dataclass(frozen=True)
class BottMorseResult:
    """Outcome of the divisibility check.

    ``ok`` is true iff the weighted sum minus the manifold polynomial is
    exactly divisible by (1 + t) with all quotient coefficients >= 0;
    ``quotient`` is the quotient polynomial when divisible (else the partial
    quotient), and ``remainder`` the division remainder.
    """

    quotient: IntPolynomial
    remainder: int
    ok: bool


def bott_morse_check(criticals: Sequence[CriticalManifoldDatum],
                     manifold_poincare: IntPolynomial) -> BottMorseResult:
    """Check the lacunary identity: sum of t^index * P(C) - P(M) = (1+t) R(t).

    ``ok`` requires exact divisibility and non-negative coefficients of R;
    the result is invariant under permutation of ``criticals``.
    """
    total = IntPolynomial.zero()
    for datum in criticals:
        total = total + datum.poincare.shifted(datum.index)
    difference = total - manifold_poincare
    quotient, remainder = divide_by_one_plus_t(difference)
    ok = remainder == 0 and all(c >= 0 for c in quotient.coefficients)
    return BottMorseResult(quotient=quotient, remainder=remainder, ok=ok)


def datum_from_spectrum(transversal_index: int, nullity: int) -> CriticalManifoldDatum:
    """Critical-manifold datum from Morse data of a sampled point.

    Nullity 0 is an isolated point (Poincare polynomial 1); nullity 1 a
    circle component (1 + t).  Higher-dimensional components are out of
    scope here.
    """
    if nullity == 0:
        poly = IntPolynomial.one()
    elif nullity == 1:
        poly = ONE_PLUS_T
    else:
        raise ValueError(f"unsupported critical-manifold nullity {nullity}")
    return CriticalManifoldDatum(index=transversal_index, poincare=poly)
