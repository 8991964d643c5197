"""Polynomial SDE and McKean-Vlasov SDE models.

``SDEModel``:   dX = a(X) dt + sigma b(X) dW
``MVSDEModel``: dX = (-Vbar'(X) + theta E[P'(X)]) dt + sigma b(X) dW

The MV drift depends on the law only through the scalar E[P'(X)], which for
the discrete approximant is sum_j beta_j P'(x_j).  Freezing that scalar turns
an MV model into an ordinary ``SDEModel``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .polynomial import Polynomial, antiderivative, derivative, eval_poly
from .quadrature import QuadratureMeasure

DEFAULT_GRID = (-10.0, 10.0, 401)


class ModelValidationError(ValueError):
    pass


@dataclass(frozen=True)
class SDEModel:
    drift: Polynomial
    diffusion: Polynomial = field(default_factory=lambda: Polynomial([1.0]))
    sigma: float = 1.0

    def with_sigma(self, sigma: float) -> SDEModel:
        return SDEModel(self.drift, self.diffusion, sigma)

    def frozen_drift(self, mu: QuadratureMeasure | None = None) -> Polynomial:
        return self.drift

    def to_json(self) -> dict:
        return {
            "kind": "sde",
            "drift": self.drift.to_json(),
            "diffusion": self.diffusion.to_json(),
            "sigma": self.sigma,
        }


@dataclass(frozen=True)
class MVSDEModel:
    effective_potential_deriv: Polynomial
    interaction_deriv: Polynomial
    theta: float = 1.0
    diffusion: Polynomial = field(default_factory=lambda: Polynomial([1.0]))
    sigma: float = 1.0

    def with_sigma(self, sigma: float) -> MVSDEModel:
        return MVSDEModel(
            self.effective_potential_deriv, self.interaction_deriv, self.theta, self.diffusion, sigma
        )

    @property
    def potential_deriv(self) -> Polynomial:
        """V' = Vbar' - theta P'."""
        return self.effective_potential_deriv - self.theta * self.interaction_deriv

    def mean_field(self, mu: QuadratureMeasure) -> float:
        return self.theta * float(mu.weights @ eval_poly(self.interaction_deriv, mu.nodes))

    def frozen_drift(self, mu: QuadratureMeasure) -> Polynomial:
        return effective_drift(self, mu)

    def frozen(self, mu: QuadratureMeasure) -> SDEModel:
        return SDEModel(effective_drift(self, mu), self.diffusion, self.sigma)

    def to_json(self) -> dict:
        return {
            "kind": "mvsde",
            "effective_potential_deriv": self.effective_potential_deriv.to_json(),
            "interaction_deriv": self.interaction_deriv.to_json(),
            "theta": self.theta,
            "diffusion": self.diffusion.to_json(),
            "sigma": self.sigma,
        }


Model = Union[SDEModel, MVSDEModel]


def dawson_shiino(sigma: float = 1.0, theta: float = 1.0) -> MVSDEModel:
    """dX = (-X^3 + theta E[X]) dt + sigma dW."""
    return MVSDEModel(Polynomial([0, 0, 0, 1]), Polynomial([0, 1]), theta, Polynomial([1]), sigma)


def ornstein_uhlenbeck(alpha: float = 1.0, sigma: float = 1.0) -> SDEModel:
    return SDEModel(Polynomial([0, -alpha]), Polynomial([1]), sigma)


def effective_drift(m: MVSDEModel, mu: QuadratureMeasure) -> Polynomial:
    return m.mean_field(mu) - m.effective_potential_deriv


def generator_apply_monomial(m: SDEModel, k: int) -> Polynomial:
    """L x^k = k a x^{k-1} + (sigma^2/2) k(k-1) b^2 x^{k-2}."""
    if k == 0:
        return Polynomial()
    out = k * m.drift * Polynomial.monomial(k - 1)
    if k >= 2:
        out = out + (0.5 * m.sigma**2 * k * (k - 1)) * (m.diffusion**2) * Polynomial.monomial(k - 2)
    return out


def generator_apply(m: SDEModel, p: Polynomial) -> Polynomial:
    """L p for an arbitrary polynomial test function."""
    return m.drift * derivative(p) + (0.5 * m.sigma**2) * (m.diffusion**2) * derivative(p, 2)


# -- validation ---------------------------------------------------------------


@dataclass
class ValidationReport:
    checks: dict[str, bool]
    grid: tuple[float, float, int]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        lo, hi, n = self.grid
        return {"checks": dict(self.checks), "grid": {"lo": lo, "hi": hi, "n": n}, "ok": self.ok}


def _confining(drift: Polynomial, diffusion: Polynomial, grid: np.ndarray) -> bool:
    c = drift.coefficients
    if drift.degree % 2 == 1 and c[-1] < 0:
        return True
    # -int a/b^2 must increase towards both grid ends
    g = -eval_poly(drift, grid) / eval_poly(diffusion, grid) ** 2
    return bool(g[-1] > 0 and g[0] < 0)


def validate(m: Model, grid_lo: float = DEFAULT_GRID[0], grid_hi: float = DEFAULT_GRID[1],
             grid_n: int = DEFAULT_GRID[2]) -> ValidationReport:
    if not grid_lo < grid_hi or grid_n < 3:
        raise ValueError("need grid_lo < grid_hi and grid_n >= 3")
    grid = np.linspace(grid_lo, grid_hi, grid_n)
    b = eval_poly(m.diffusion, grid)
    checks = {"diffusion_positive": bool(np.all(b > 0))}
    if isinstance(m, SDEModel):
        checks["confining_drift"] = _confining(m.drift, m.diffusion, grid)
        checks["sigma_nonnegative"] = m.sigma >= 0
    else:
        vbar2 = eval_poly(derivative(m.effective_potential_deriv), grid)
        isolated_zeros = not np.any((vbar2[:-1] == 0) & (vbar2[1:] == 0))
        checks["effective_potential_convex"] = bool(np.all(vbar2 >= 0) and isolated_zeros)
        # (1/x^2) int_0^x V'/b^2 > 0 away from the base point
        if m.diffusion.degree == 0:
            prim = antiderivative(m.potential_deriv * (1.0 / m.diffusion.coefficients[0] ** 2))
            vals = eval_poly(prim, grid)
        else:
            vals = _cumulative_integral(eval_poly(m.potential_deriv, grid) / b**2, grid)
        ends = np.array([vals[0], vals[-1]]) / np.array([grid[0], grid[-1]]) ** 2
        checks["confining_potential"] = bool(np.all(ends > 0))
        checks["sigma_nonnegative"] = m.sigma >= 0
    return ValidationReport(checks, (grid_lo, grid_hi, grid_n))


def _cumulative_integral(f: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Trapezoid primitive with base point at the grid point nearest 0."""
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(grid))])
    return cum - cum[np.argmin(np.abs(grid))]


# -- serialization ------------------------------------------------------------


def model_from_json(data: dict) -> Model:
    kind = data.get("kind")
    if kind not in ("sde", "mvsde"):
        raise KeyError("kind")
    if "sigma" not in data:
        raise KeyError("sigma")
    diffusion = Polynomial(data.get("diffusion", [1.0]))
    if kind == "sde":
        return SDEModel(Polynomial(data["drift"]), diffusion, float(data["sigma"]))
    return MVSDEModel(
        Polynomial(data["effective_potential_deriv"]),
        Polynomial(data["interaction_deriv"]),
        float(data.get("theta", 1.0)),
        diffusion,
        float(data["sigma"]),
    )


def load_model(path: str | Path) -> Model:
    return model_from_json(json.loads(Path(path).read_text()))
