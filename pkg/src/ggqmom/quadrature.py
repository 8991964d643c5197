"""Discrete probability measures and their moments.

A :class:`QuadratureMeasure` is the N-point approximant: ordered nodes with
positive weights summing to one.  :func:`gauss_christoffel` inverts the
first 2N raw moments of a measure into the unique N-point measure that
reproduces them (Golub-Welsch via a Hankel Cholesky factor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .lagrange import check_nodes

WEIGHT_FLOOR = 1e-14


class MomentInversionError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureMeasure:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.array(self.nodes, dtype=float, copy=True).ravel()
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        if x.size < 1 or x.size != w.size:
            raise ValueError("nodes and weights must be nonempty and of equal length")
        check_nodes(x)
        if np.any(w < WEIGHT_FLOOR):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum():.16g}, not 1")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.nodes.size

    @classmethod
    def normalized(cls, nodes, weights) -> QuadratureMeasure:
        w = np.asarray(weights, dtype=float)
        return cls(nodes, w / w.sum())

    @classmethod
    def point_mass(cls, c: float) -> QuadratureMeasure:
        return cls([c], [1.0])

    def moments(self, k_max: int) -> np.ndarray:
        return moments_of(self, k_max)

    @property
    def mean(self) -> float:
        return float(self.weights @ self.nodes)

    def to_json(self) -> dict:
        return {"nodes": self.nodes.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> QuadratureMeasure:
        return cls.normalized(data["nodes"], data["weights"])


def moments_of(mu: QuadratureMeasure, k_max: int) -> np.ndarray:
    """Raw moments m_0..m_K."""
    if k_max < 0:
        raise ValueError("K must be nonnegative")
    powers = mu.nodes[None, :] ** np.arange(k_max + 1)[:, None]
    return powers @ mu.weights


def hankel(moments, n: int) -> np.ndarray:
    m = np.asarray(moments, dtype=float)
    idx = np.arange(n)
    return m[idx[:, None] + idx[None, :]]


def gauss_christoffel(moments, n: int, rtol: float = 1e-8) -> QuadratureMeasure:
    m = np.asarray(moments, dtype=float)
    if m.size < 2 * n:
        raise ValueError(f"need {2 * n} moments, got {m.size}")
    m = m[: 2 * n]
    if abs(m[0] - 1.0) > 1e-12:
        raise MomentInversionError("m_0 must equal 1")
    if n == 1:
        return QuadratureMeasure([m[1]], [1.0])

    nodes, weights = _golub_welsch(m, n)
    try:
        mu = QuadratureMeasure(nodes, weights)
    except ValueError as exc:
        raise MomentInversionError(f"ill-conditioned moment inversion: {exc}") from None

    got = moments_of(mu, 2 * n - 1)
    scale = np.maximum(np.abs(m), 1.0)
    if np.max(np.abs(got - m) / scale) > rtol:
        raise MomentInversionError("ill-conditioned moment inversion")
    return mu


def _golub_welsch(m: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Hankel of size n+1 would need m_{2n}; the last column is only used for
    # the recurrence coefficients, so pad with a dummy entry and drop it.
    h = hankel(np.append(m, 0.0), n + 1)
    try:
        r = np.linalg.cholesky(h[:n, :n]).T
    except np.linalg.LinAlgError:
        raise MomentInversionError("moments not in the interior of the moment cone") from None
    # r_{j,n} for the last column: solve R^T r_col = h[:n, n]
    col = np.linalg.solve(r.T, h[:n, n])
    r_ext = np.zeros((n, n + 1))
    r_ext[:, :n] = r
    r_ext[:, n] = col

    alpha = np.empty(n)
    beta = np.empty(max(n - 1, 0))
    for j in range(n):
        a = r_ext[j, j + 1] / r_ext[j, j]
        if j > 0:
            a -= r_ext[j - 1, j] / r_ext[j - 1, j - 1]
        alpha[j] = a
        if j < n - 1:
            beta[j] = r_ext[j + 1, j + 1] / r_ext[j, j]

    nodes, vecs = eigh_tridiagonal(alpha, beta)
    weights = vecs[0, :] ** 2
    return nodes, weights / weights.sum()


def gauss_hermite_init(n: int, mean: float = 0.0, variance: float = 1.0) -> QuadratureMeasure:
    """N-point Gauss-Hermite rule for the normal law N(mean, variance)."""
    if n < 1 or variance <= 0.0:
        raise ValueError("need N >= 1 and positive variance")
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    return QuadratureMeasure.normalized(mean + np.sqrt(variance) * nodes, weights)
