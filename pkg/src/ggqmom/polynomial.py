"""Dense real univariate polynomials.

Coefficients are stored in ascending degree order and trimmed of trailing
exact zeros, so ``Polynomial((0, 1, 0, -1))`` is ``x - x**3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly


def _canonical(coeffs: Iterable[float]) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    if not c:
        c = [0.0]
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    coefficients: tuple[float, ...]

    def __init__(self, coefficients: Iterable[float] = (0.0,)):
        object.__setattr__(self, "coefficients", _canonical(coefficients))

    @classmethod
    def monomial(cls, k: int, scale: float = 1.0) -> Polynomial:
        return cls([0.0] * k + [scale])

    @classmethod
    def constant(cls, c: float) -> Polynomial:
        return cls([c])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.coefficients == (0.0,)

    def __call__(self, x):
        return eval_poly(self, x)

    def __add__(self, other: Polynomial | float) -> Polynomial:
        other = _coerce(other)
        return Polynomial(npoly.polyadd(self.coefficients, other.coefficients))

    __radd__ = __add__

    def __sub__(self, other: Polynomial | float) -> Polynomial:
        other = _coerce(other)
        return Polynomial(npoly.polysub(self.coefficients, other.coefficients))

    def __rsub__(self, other: float) -> Polynomial:
        return _coerce(other) - self

    def __neg__(self) -> Polynomial:
        return Polynomial(-c for c in self.coefficients)

    def __mul__(self, other: Polynomial | float) -> Polynomial:
        other = _coerce(other)
        return Polynomial(npoly.polymul(self.coefficients, other.coefficients))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Polynomial:
        return Polynomial(npoly.polypow(self.coefficients, k))

    def to_json(self) -> list[float]:
        return list(self.coefficients)

    @classmethod
    def from_json(cls, data: Sequence[float]) -> Polynomial:
        return cls(data)

    def is_odd(self) -> bool:
        return all(c == 0.0 for c in self.coefficients[0::2])

    def is_even(self) -> bool:
        return all(c == 0.0 for c in self.coefficients[1::2])


def _coerce(p: Polynomial | float) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial([p])


def eval_poly(p: Polynomial, x):
    """Horner evaluation; works elementwise on arrays."""
    c = p.coefficients
    acc = np.zeros_like(np.asarray(x, dtype=float)) + c[-1]
    for coef in reversed(c[:-1]):
        acc = acc * x + coef
    if np.ndim(acc) == 0:
        return float(acc)
    return acc


def derivative(p: Polynomial, order: int = 1) -> Polynomial:
    if p.degree < order:
        return Polynomial()
    return Polynomial(npoly.polyder(p.coefficients, order))


def antiderivative(p: Polynomial) -> Polynomial:
    """Primitive vanishing at 0."""
    return Polynomial(npoly.polyint(p.coefficients))


def hermite(k: int) -> Polynomial:
    """Probabilist's Hermite polynomial He_k."""
    if k < 0:
        raise ValueError("hermite order must be nonnegative")
    prev, cur = Polynomial([1.0]), Polynomial([0.0, 1.0])
    if k == 0:
        return prev
    x = Polynomial([0.0, 1.0])
    for n in range(1, k):
        prev, cur = cur, x * cur - n * prev
    return cur


def real_roots(p: Polynomial, imag_tol: float = 1e-8) -> list[float]:
    """Real roots from companion-matrix eigenvalues, ascending, with multiplicity."""
    if p.degree < 1:
        raise ValueError("no roots of constant polynomial")
    roots = npoly.polyroots(p.coefficients)
    real = sorted(float(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < imag_tol)
    return real


def distinct_real_roots(p: Polynomial, cluster_tol: float = 1e-4) -> list[tuple[float, int]]:
    """Distinct real roots with multiplicities.

    Companion eigenvalues of a root of multiplicity q scatter by about
    eps**(1/q) around it, partly off the real axis; nearby eigenvalues are
    grouped and averaged, which restores a real centre.
    """
    if p.degree < 1:
        raise ValueError("no roots of constant polynomial")
    roots = sorted(np.atleast_1d(npoly.polyroots(p.coefficients)), key=lambda r: (r.real, r.imag))
    groups: list[list[complex]] = []
    for r in roots:
        for g in groups:
            if abs(r - np.mean(g)) < cluster_tol * (1.0 + abs(r)):
                g.append(r)
                break
        else:
            groups.append([r])
    out = []
    for g in groups:
        c = complex(np.mean(g))
        if abs(c.imag) < 1e-8 * (1.0 + abs(c.real)):
            out.append((float(c.real), len(g)))
    return sorted(out)
