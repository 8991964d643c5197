"""Nodal derivatives of the Lagrange basis.

For nodes x_0 < ... < x_{N-1} and l_i the Lagrange polynomial with
l_i(x_j) = delta_ij, this module returns l_i'(x_j) and l_i''(x_i), written
through the base polynomial R(x) = prod_k (x - x_k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NodeCollisionError(ValueError):
    pass


@dataclass(frozen=True)
class LagrangeTableau:
    first_deriv: np.ndarray  # [i, j] = l_i'(x_j)
    second_deriv_diag: np.ndarray  # [i] = l_i''(x_i)
    base_poly_deriv: np.ndarray  # [j] = R'(x_j)


def check_nodes(nodes: np.ndarray, collision_threshold: float = 0.0) -> None:
    gaps = np.diff(nodes)
    if np.any(gaps <= 0.0):
        raise NodeCollisionError("nodes not strictly ordered")
    if gaps.size and gaps.min() <= collision_threshold:
        raise NodeCollisionError("node collision")


def build_tableau(nodes, collision_threshold: float = 0.0) -> LagrangeTableau:
    x = np.asarray(nodes, dtype=float)
    check_nodes(x, collision_threshold)
    n = x.size
    diff = x[:, None] - x[None, :]  # [i, k] = x_i - x_k
    off = ~np.eye(n, dtype=bool)
    inv = np.zeros_like(diff)
    inv[off] = 1.0 / diff[off]

    rp = np.prod(np.where(off, diff, 1.0), axis=1)
    s1 = inv.sum(axis=1)
    s2 = (inv**2).sum(axis=1)

    first = np.zeros((n, n))
    # off-diagonal: (R'_j / R'_i) / (x_j - x_i)
    first[off] = ((rp[None, :] / rp[:, None]) * -inv)[off]
    first[np.diag_indices(n)] = s1
    return LagrangeTableau(first, s1**2 - s2, rp)
