"""Gauss-Galerkin node/weight equations and their time integration.

For a measure sum_i beta_i delta_{x_i} the equations are the unique node and
weight velocities for which

    d/dt sum_k beta_k phi(x_k) = sum_k beta_k (L phi)(x_k)

holds for every polynomial phi of degree <= 2N-1.  Taking phi = (x-x_i) l_i^2
gives the node equation; phi = l_i^2 gives the weight equation after the
node-motion term 2 beta_i l_i'(x_i) xdot_i is moved to the right side.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lagrange import NodeCollisionError, build_tableau
from .model import Model, MVSDEModel, generator_apply_monomial
from .polynomial import eval_poly
from .quadrature import QuadratureMeasure, moments_of


class WeightUnderflowError(ValueError):
    pass


class IntegrationAborted(RuntimeError):
    """Raised when integration stops early; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: Trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class GGState:
    measure: QuadratureMeasure
    time: float = 0.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    initial_step: float = 1e-3
    max_step: float = math.inf
    collision_threshold: float | None = None  # None: 1e-7 * (node range + 1)
    weight_floor: float = 1e-14
    max_steps: int = 1_000_000
    max_projection: float = 1e-8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "initial_step", "max_step", "weight_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def collision_threshold(x: np.ndarray, cfg: IntegratorConfig | None = None) -> float:
    if cfg is not None and cfg.collision_threshold is not None:
        return cfg.collision_threshold
    return 1e-7 * (float(x[-1] - x[0]) + 1.0)


# -- right-hand side ----------------------------------------------------------


def _drift_values(model: Model, x: np.ndarray, beta: np.ndarray) -> np.ndarray:
    if isinstance(model, MVSDEModel):
        shift = model.theta * float(beta @ eval_poly(model.interaction_deriv, x))
        return shift - eval_poly(model.effective_potential_deriv, x)
    return eval_poly(model.drift, x)


def galerkin_terms(model: Model, x: np.ndarray, beta: np.ndarray, threshold: float = 0.0):
    """Return (beta_i * xdot_i, G_i) where G_i = sum_k beta_k L(l_i^2)(x_k).

    Neither term divides by a weight.  The weight rate is
    G_i - 2 l_i'(x_i) * (beta_i * xdot_i).
    """
    tab = build_tableau(x, threshold)
    lp = tab.first_deriv
    d = np.diag(lp)
    a = _drift_values(model, x, beta)
    bb = beta * eval_poly(model.diffusion, x) ** 2
    s2 = model.sigma**2

    lp2 = lp**2
    np.fill_diagonal(lp2, 0.0)
    spread = x[None, :] - x[:, None]  # [i, j] = x_j - x_i
    node_sum = (lp2 * spread) @ bb
    cross_sum = lp2 @ bb

    bx = beta * a + s2 * (2.0 * bb * d + node_sum)
    g = 2.0 * beta * a * d + s2 * (bb * (d**2 + tab.second_deriv_diag) + cross_sum)
    return bx, g, d


def _rates(model: Model, x: np.ndarray, beta: np.ndarray, threshold: float, weight_floor: float):
    if np.any(beta < weight_floor):
        raise WeightUnderflowError("weight underflow")
    bx, g, d = galerkin_terms(model, x, beta, threshold)
    return bx / beta, g - 2.0 * d * bx


def gg_rhs(model: Model, state: GGState | QuadratureMeasure, cfg: IntegratorConfig | None = None):
    """Node and weight velocities (xdot, betadot) at a state."""
    mu = state.measure if isinstance(state, GGState) else state
    if model.sigma <= 0:
        raise ValueError("sigma must be positive")
    cfg = cfg or IntegratorConfig()
    return _rates(model, mu.nodes, mu.weights, collision_threshold(mu.nodes, cfg), cfg.weight_floor)


def galerkin_defect(model: Model, mu: QuadratureMeasure, k_max: int | None = None) -> np.ndarray:
    """Relative defect of d/dt sum beta x^k against sum beta (L x^k), k = 0..k_max.

    ``k_max`` defaults to 2N-1, the highest order the approximant is exact
    for.  Each defect is scaled by the unsigned magnitude of the terms that
    make up both sides, so a total that cancels to zero does not turn
    roundoff into an O(1) relative error.
    """
    x, beta = mu.nodes, mu.weights
    k_max = 2 * mu.size - 1 if k_max is None else k_max
    if model.sigma <= 0:
        raise ValueError("sigma must be positive")
    bx, g, d = galerkin_terms(model, x, beta, collision_threshold(x))
    bd = g - 2.0 * d * bx
    bd_mag = np.abs(g) + 2.0 * np.abs(d * bx)
    frozen = model.frozen(mu) if isinstance(model, MVSDEModel) else model
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        lhs = bd * x**k + (k * bx * x ** (k - 1) if k else 0.0)
        rhs = beta * eval_poly(generator_apply_monomial(frozen, k), x)
        scale = max((bd_mag * np.abs(x) ** k).sum() + (k * np.abs(bx * x ** max(k - 1, 0))).sum(),
                    np.abs(rhs).sum(), 1e-300)
        out[k] = abs(lhs.sum() - rhs.sum()) / scale
    return out


# -- integration --------------------------------------------------------------

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY, _FAC_MIN, _FAC_MAX = 0.9, 0.2, 5.0
_PI_ALPHA, _PI_BETA = 0.7 / 5, 0.4 / 5


@dataclass
class StepDiagnostics:
    accepted: int = 0
    rejected: int = 0
    final_step: float = 0.0
    max_projection: float = 0.0  # largest |sum(beta) - 1| before renormalizing


@dataclass
class Trajectory:
    samples: list[GGState] = field(default_factory=list)
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    @property
    def final(self) -> GGState:
        return self.samples[-1]

    def nodes(self) -> np.ndarray:
        return np.array([s.measure.nodes for s in self.samples])

    def weights(self) -> np.ndarray:
        return np.array([s.measure.weights for s in self.samples])


def integrate(model: Model, init: GGState | QuadratureMeasure, t_end: float,
              cfg: IntegratorConfig | None = None, sample_times=None) -> Trajectory:
    """Adaptive Dormand-Prince integration of the node/weight equations.

    With ``sample_times`` given, the step is clipped to land on each one and
    only those states (plus the initial one) are kept; otherwise every
    accepted step is recorded.
    """
    cfg = cfg or IntegratorConfig()
    if isinstance(init, QuadratureMeasure):
        init = GGState(init, 0.0)
    if model.sigma <= 0:
        raise ValueError("sigma must be positive")
    t = init.time
    if not t_end > t:
        raise ValueError("t_end must exceed the initial time")

    if sample_times is None:
        targets = [t_end]
        record_all = True
    else:
        targets = sorted(float(s) for s in sample_times if t < s <= t_end)
        if not targets or targets[-1] < t_end:
            targets.append(t_end)
        record_all = False

    n = init.measure.size
    y = np.concatenate([init.measure.nodes, init.measure.weights])
    traj = Trajectory([init])
    diag = traj.diagnostics

    def f(yv):
        x = yv[:n]
        if np.any(np.diff(x) <= collision_threshold(x, cfg)):
            raise NodeCollisionError("node collision")
        xd, bd = _rates(model, x, yv[n:], collision_threshold(x, cfg), cfg.weight_floor)
        return np.concatenate([xd, bd])

    h = min(cfg.initial_step, cfg.max_step, t_end - t)
    err_prev = 1.0
    k = np.empty((7, 2 * n))
    target_idx = 0

    while target_idx < len(targets):
        if diag.accepted + diag.rejected >= cfg.max_steps:
            raise IntegrationAborted("step budget exhausted", traj)
        target = targets[target_idx]
        h_try = min(h, target - t)
        landing = h_try >= target - t
        try:
            k[0] = f(y)
            for s in range(1, 7):
                k[s] = f(y + h_try * (np.asarray(_A[s]) @ k[:s]))
        except (NodeCollisionError, WeightUnderflowError) as exc:
            # a trial stage left the admissible set: shrink unless already tiny
            diag.rejected += 1
            if h_try < 1e-14 * max(1.0, abs(t)):
                raise IntegrationAborted(str(exc), traj) from exc
            h = 0.25 * h_try
            continue
        y_new = y + h_try * (_B @ k)
        err_vec = h_try * (_E @ k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            t = target if landing else t + h_try
            drift = float(y_new[n:].sum() - 1.0)
            diag.max_projection = max(diag.max_projection, abs(drift))
            y_new[n:] /= y_new[n:].sum()
            y = y_new
            diag.accepted += 1
            diag.final_step = h_try
            if abs(drift) > cfg.max_projection:
                raise IntegrationAborted("weight projection exceeded bound", traj)
            try:
                mu = _checked_measure(y, n, cfg)
            except (NodeCollisionError, WeightUnderflowError) as exc:
                raise IntegrationAborted(str(exc), traj) from exc
            if landing:
                target_idx += 1
            if record_all or landing:
                traj.samples.append(GGState(mu, t))
            fac = _SAFETY * max(err, 1e-10) ** -_PI_ALPHA * err_prev**_PI_BETA
            h_next = h_try * min(_FAC_MAX, max(_FAC_MIN, fac))
            # keep the controller's proposal when the step was clipped to a target
            h = min(max(h_next, h) if h_try < h else h_next, cfg.max_step)
            err_prev = max(err, 1e-4)
        else:
            diag.rejected += 1
            h = h_try * max(_FAC_MIN, _SAFETY * err**-_PI_ALPHA)
    return traj


def _checked_measure(y: np.ndarray, n: int, cfg: IntegratorConfig) -> QuadratureMeasure:
    x, beta = y[:n], y[n:]
    if np.any(np.diff(x) <= collision_threshold(x, cfg)):
        raise NodeCollisionError("node collision")
    if np.any(beta < cfg.weight_floor):
        raise WeightUnderflowError("weight underflow")
    return QuadratureMeasure(x.copy(), beta.copy())


def moment_trajectory(traj: Trajectory, k_max: int) -> np.ndarray:
    """Array of shape (samples, K+1) with m_0..m_K at each sample."""
    return np.array([moments_of(s.measure, k_max) for s in traj.samples])


# -- export -------------------------------------------------------------------


def trajectory_rows(traj: Trajectory, k_max: int) -> tuple[list[str], list[list[float]]]:
    n = traj.samples[0].measure.size
    header = (["time"] + [f"x_{i + 1}" for i in range(n)] + [f"beta_{i + 1}" for i in range(n)]
              + [f"m_{k}" for k in range(1, k_max + 1)])
    moms = moment_trajectory(traj, k_max)
    rows = []
    for s, m in zip(traj.samples, moms):
        rows.append([s.time, *s.measure.nodes.tolist(), *s.measure.weights.tolist(), *m[1:].tolist()])
    return header, rows


def write_trajectory_csv(traj: Trajectory, path: str | Path, k_max: int = 4) -> None:
    header, rows = trajectory_rows(traj, k_max)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) for v in r])


def trajectory_to_json(traj: Trajectory, k_max: int = 4) -> dict:
    header, rows = trajectory_rows(traj, k_max)
    d = traj.diagnostics
    return {
        "columns": header,
        "rows": rows,
        "diagnostics": {
            "accepted": d.accepted,
            "rejected": d.rejected,
            "final_step": d.final_step,
            "max_projection": d.max_projection,
        },
    }


def write_trajectory_json(traj: Trajectory, path: str | Path, k_max: int = 4) -> None:
    Path(path).write_text(json.dumps(trajectory_to_json(traj, k_max), indent=1), encoding="utf-8")
