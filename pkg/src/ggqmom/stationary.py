"""Stationary solutions of the Gauss-Galerkin equations.

Stationary states are found by damped Newton on the node equations (in the
weight-multiplied form) and all but one weight equation, with the last weight
equation replaced by sum(beta) = 1: the weight equations always sum to zero,
so one of them carries no information.

Seeds come from small-noise asymptotics: near a stable zero x* of the
(effective) drift with local behaviour -c (x - x*)^(2n-1), the nodes form a
cluster x* + (sigma b(x*) / sqrt(c))^(1/n) * h, where h is the unit-noise
solution for drift -x^(2n-1).  For n = 1 the offsets h are the He_k roots
divided by sqrt(2) and the weights are Gauss-Hermite weights.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .dynamics import galerkin_terms
from .lagrange import NodeCollisionError, check_nodes
from .model import Model, MVSDEModel, SDEModel
from .polynomial import Polynomial, derivative, distinct_real_roots, eval_poly
from .quadrature import QuadratureMeasure, gauss_christoffel, gauss_hermite_init, moments_of


class ScalingError(ValueError):
    pass


class SeedError(ValueError):
    pass


@dataclass(frozen=True)
class StationarySolution:
    measure: QuadratureMeasure
    sigma: float
    residual_norm: float
    converged: bool
    newton_iterations: int
    model: Model | None = None
    message: str = ""

    @property
    def m1(self) -> float:
        return self.measure.mean

    @property
    def m2(self) -> float:
        return float(self.measure.weights @ self.measure.nodes**2)

    def to_json(self) -> dict:
        return {
            "measure": self.measure.to_json(),
            "sigma": self.sigma,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "newton_iterations": self.newton_iterations,
            "m1": self.m1,
            "m2": self.m2,
            "message": self.message,
        }


# -- residuals ----------------------------------------------------------------


def _threshold(x: np.ndarray) -> float:
    return 1e-7 * (float(x[-1] - x[0]) + 1.0)


def stationary_equations(model: Model, x: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(beta_i xdot_i, betadot_i) without any division by weights."""
    bx, g, d = galerkin_terms(model, x, beta, _threshold(x))
    return bx, g - 2.0 * d * bx


def stationary_residual(model: Model, x: np.ndarray, beta: np.ndarray, weighted: bool = True) -> np.ndarray:
    """Node equations (beta-multiplied, or divided through when ``weighted`` is
    False), the first N-1 weight equations, and sum(beta) - 1."""
    bx, bd = stationary_equations(model, x, beta)
    node = bx if weighted else bx / beta
    return np.concatenate([node, bd[:-1], [beta.sum() - 1.0]])


def residual_norm(model: Model, mu: QuadratureMeasure) -> float:
    return float(np.max(np.abs(stationary_residual(model, mu.nodes, mu.weights))))


# -- damped Newton ------------------------------------------------------------


@dataclass
class NewtonResult:
    z: np.ndarray
    residual: float
    iterations: int
    converged: bool
    message: str = ""


def damped_newton(fun: Callable[[np.ndarray], np.ndarray], z0: np.ndarray,
                  admissible: Callable[[np.ndarray], bool], tol: float = 1e-10,
                  max_iter: int = 60, max_halvings: int = 8, max_growth: int = 5,
                  polish: int = 3) -> NewtonResult:
    """Newton with forward-difference Jacobian and step halving.

    Once below ``tol`` up to ``polish`` extra iterations are taken while they
    keep reducing the residual, so callers get a margin below ``tol``.
    """
    z = np.array(z0, dtype=float)
    r = fun(z)
    rn = float(np.max(np.abs(r)))
    growth = 0
    polished = 0
    it = 0
    for it in range(1, max_iter + 1):
        if rn < tol and polished >= polish:
            return NewtonResult(z, rn, it - 1, True)
        jac = np.empty((r.size, z.size))
        for j in range(z.size):
            dz = 1e-7 * (1.0 + abs(z[j]))
            zp = z.copy()
            zp[j] += dz
            jac[:, j] = (fun(zp) - r) / dz
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]

        lam = 1.0
        best = None
        for _ in range(max_halvings + 1):
            zt = z + lam * step
            if admissible(zt):
                try:
                    rt = fun(zt)
                except NodeCollisionError:
                    rt = None
                if rt is not None and np.all(np.isfinite(rt)):
                    rtn = float(np.max(np.abs(rt)))
                    best = (zt, rt, rtn)
                    if rtn < rn:
                        break
            lam *= 0.5
        if best is None:
            if rn < tol:
                return NewtonResult(z, rn, it - 1, True)
            raise NodeCollisionError("node collision")
        zt, rt, rtn = best
        if rn < tol and rtn >= rn:
            return NewtonResult(z, rn, it - 1, True)
        growth = growth + 1 if rtn >= rn else 0
        z, r, rn = zt, rt, rtn
        if rn < tol:
            polished += 1
        if growth >= max_growth:
            return NewtonResult(z, rn, it, False, "residual grew over successive damped iterations")
    return NewtonResult(z, rn, it, rn < tol, "" if rn < tol else "iteration limit reached")


def _admissible(x: np.ndarray, beta: np.ndarray) -> bool:
    return bool(np.all(np.diff(x) > _threshold(x)) and np.all(beta > 0))


def solve_stationary(model: Model, seed: QuadratureMeasure, tol: float = 1e-10,
                     max_iter: int = 60) -> StationarySolution:
    if model.sigma <= 0:
        raise ValueError("sigma must be positive")
    check_nodes(seed.nodes, _threshold(seed.nodes))
    n = seed.size

    # Newton runs on the divided node equations in (x, log beta): the
    # beta-multiplied rows of lightly weighted nodes are nearly singular, and
    # an absolute difference step swamps weights of order 1e-6.  Since
    # beta <= 1 the reported beta-multiplied residual is no larger.
    def fun(z):
        return stationary_residual(model, z[:n], np.exp(z[n:]), weighted=False)

    def ok(z):
        return _admissible(z[:n], np.exp(z[n:]))

    res = damped_newton(fun, np.concatenate([seed.nodes, np.log(seed.weights)]), ok, tol, max_iter)
    mu = QuadratureMeasure.normalized(res.z[:n], np.exp(res.z[n:]))
    return StationarySolution(mu, model.sigma, residual_norm(model, mu), res.converged,
                              res.iterations, model, res.message)


# -- symmetric subspace -------------------------------------------------------


def _is_symmetric_model(model: Model) -> bool:
    if not model.diffusion.is_even():
        return False
    if isinstance(model, MVSDEModel):
        return model.effective_potential_deriv.is_odd() and model.interaction_deriv.is_odd()
    return model.drift.is_odd()


def _mirror(pos: np.ndarray, wpos: np.ndarray, w0: float | None):
    if w0 is None:
        x = np.concatenate([-pos[::-1], pos])
        b = np.concatenate([wpos[::-1], wpos])
    else:
        x = np.concatenate([-pos[::-1], [0.0], pos])
        b = np.concatenate([wpos[::-1], [w0], wpos])
    return x, b


def symmetric_stationary(model: Model, n: int, sigma: float | None = None, tol: float = 1e-10,
                         seed: QuadratureMeasure | None = None, max_iter: int = 60) -> StationarySolution:
    """Stationary solution in the mirror-symmetric subspace.

    Unknowns are the positive nodes and their weights (plus the weight of the
    node pinned at 0 for odd N); the returned measure is symmetric exactly.
    """
    if not _is_symmetric_model(model):
        raise ValueError("parity assumptions violated")
    if sigma is not None:
        model = model.with_sigma(sigma)
    if model.sigma <= 0:
        raise ValueError("sigma must be positive")
    if n == 1:
        mu = QuadratureMeasure.point_mass(0.0)
        return StationarySolution(mu, model.sigma, residual_norm(model, mu), True, 0, model)
    if seed is None:
        seed = symmetric_seed(model, n)
    if seed.size != n:
        raise ValueError("seed size does not match N")
    k = n // 2
    odd = n % 2 == 1
    pos = seed.nodes[-k:]
    wpos = seed.weights[-k:]
    z0 = np.log(np.concatenate([pos, wpos, [seed.weights[k]] if odd else []]))

    # all unknowns are positive; work in logs
    def unpack(z):
        e = np.exp(z)
        return _mirror(e[:k], e[k:2 * k], e[2 * k] if odd else None)

    def fun(z):
        x, b = unpack(z)
        bx, bd = stationary_equations(model, x, b)
        upper = slice(n - k, n)
        weight_eqs = bd[upper][:-1] if not odd else bd[upper]
        return np.concatenate([bx[upper] / b[upper], weight_eqs, [b.sum() - 1.0]])

    def ok(z):
        x, b = unpack(z)
        return _admissible(x, b)

    res = damped_newton(fun, z0, ok, tol, max_iter)
    x, b = unpack(res.z)
    mu = QuadratureMeasure(x, b / b.sum())
    return StationarySolution(mu, model.sigma, residual_norm(model, mu), res.converged,
                              res.iterations, model, res.message)


def symmetric_seed(model: Model, n: int) -> QuadratureMeasure:
    """Single cluster at 0 from the local drift there (needs a stable zero at 0)."""
    drift = _local_drift(model)
    order, coef = _local_order(drift, 0.0)
    if order is None or order % 2 == 0 or coef >= 0:
        # unstable or absent zero at the origin: fall back to a unit Gaussian rule
        return gauss_hermite_init(n, 0.0, model.sigma)
    return _cluster(model, 0.0, (order + 1) // 2, -coef, n)


# -- small-noise seeds ---------------------------------------------------------


def _local_drift(model: Model) -> Polynomial:
    """Drift whose zeros organise small-noise clusters.

    For MV models the mean-field term is a constant near a cluster, so the
    local shape is that of -Vbar' and the cluster sites are zeros of V'.
    """
    if isinstance(model, MVSDEModel):
        return -model.effective_potential_deriv
    return model.drift


def _local_order(p: Polynomial, x0: float, rtol: float = 1e-9) -> tuple[int | None, float]:
    """Lowest q >= 1 with p^(q)(x0) != 0, and the Taylor coefficient p^(q)(x0)/q!."""
    scale = max(abs(c) for c in p.coefficients) * (1.0 + abs(x0)) ** max(p.degree, 1)
    q = 1
    dp = derivative(p)
    while not dp.is_zero():
        val = eval_poly(dp, x0)
        if abs(val) > rtol * scale:
            return q, val / math.factorial(q)
        q += 1
        dp = derivative(dp)
    return None, 0.0


def cluster_sites(model: Model) -> list[tuple[float, int, float]]:
    """(site, n, c): stable local behaviour -c (x - site)^(2n-1) with c > 0."""
    zeros_of = model.potential_deriv if isinstance(model, MVSDEModel) else model.drift
    if zeros_of.degree < 1:
        return []
    local = _local_drift(model)
    sites = []
    for r, _mult in distinct_real_roots(zeros_of):
        q, coef = _local_order(local, r)
        if q is not None and q % 2 == 1 and coef < 0:
            sites.append((r, (q + 1) // 2, -coef))
    return sites


@lru_cache(maxsize=64)
def _reference(n: int, k: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """k-node stationary solution for drift -x^(2n-1), b = 1, sigma = 1."""
    if n == 1:
        mu = gauss_hermite_init(k, 0.0, 0.5)
        return tuple(mu.nodes), tuple(mu.weights)
    # seed from the exact stationary density exp(-x^(2n)/n), m_2j = n^(j/n) G((2j+1)/2n) / G(1/2n)
    mom = np.zeros(2 * k)
    for j in range(0, k):
        mom[2 * j] = n ** (j / n) * math.exp(math.lgamma((2 * j + 1) / (2 * n)) - math.lgamma(1 / (2 * n)))
    seed = gauss_christoffel(mom, k)
    model = SDEModel(Polynomial.monomial(2 * n - 1, -1.0), Polynomial([1.0]), 1.0)
    sol = symmetric_stationary(model, k, tol=1e-13, seed=seed) if k > 1 else None
    if sol is None:
        return (0.0,), (1.0,)
    if not sol.converged:
        raise RuntimeError(f"reference solution for n={n}, k={k} did not converge")
    return tuple(sol.measure.nodes), tuple(sol.measure.weights)


def _cluster(model: Model, site: float, n: int, c: float, k: int) -> QuadratureMeasure:
    b0 = abs(eval_poly(model.diffusion, site))
    lam = (model.sigma * b0 / math.sqrt(c)) ** (1.0 / n)
    nodes, weights = _reference(n, k)
    return QuadratureMeasure(site + lam * np.asarray(nodes), np.asarray(weights))


def hermite_seed(model: Model, sigma: float | None = None, points_per_cluster: int = 1,
                 sites: list[float] | None = None) -> QuadratureMeasure:
    """Union of small-noise clusters, one per stable site, equal mass per cluster.

    ``sites`` restricts the clusters to the listed site locations (nearest match).
    """
    if sigma is not None:
        model = model.with_sigma(sigma)
    available = cluster_sites(model)
    if sites is not None:
        chosen = []
        for s in sites:
            best = min(available, key=lambda t: abs(t[0] - s), default=None)
            if best is None or abs(best[0] - s) > 1e-6 * (1 + abs(s)):
                raise SeedError(f"no stable cluster site at {s}")
            chosen.append(best)
        available = chosen
    if not available:
        raise SeedError("no stable cluster sites")
    xs, ws = [], []
    for site, n, c in available:
        cl = _cluster(model, site, n, c, points_per_cluster)
        xs.append(cl.nodes)
        ws.append(cl.weights / len(available))
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    order = np.argsort(x)
    return QuadratureMeasure.normalized(x[order], w[order])


# -- scaling ------------------------------------------------------------------


def scaling_exponent(model: Model) -> int:
    """n such that the model has drift -k x^(2n-1) (plus a vanishing odd mean field)."""
    if model.diffusion.degree != 0:
        raise ScalingError("scaling law inapplicable")
    if isinstance(model, MVSDEModel):
        p, sign = model.effective_potential_deriv, 1.0
        if not model.interaction_deriv.is_odd():
            raise ScalingError("scaling law inapplicable")
    else:
        p, sign = model.drift, -1.0
    c = p.coefficients
    if p.degree % 2 == 0 or any(v != 0.0 for v in c[:-1]) or sign * c[-1] <= 0:
        raise ScalingError("scaling law inapplicable")
    return (p.degree + 1) // 2


def scale_solution(sol: StationarySolution, sigma_to: float, n: int | None = None,
                   tol: float = 1e-10) -> StationarySolution:
    """Rescale a converged stationary solution to another noise level without re-solving."""
    model = sol.model
    if model is None or not sol.converged:
        raise ScalingError("scaling needs a converged solution with its model")
    n_model = scaling_exponent(model)
    if n is not None and n != n_model:
        raise ScalingError("scaling law inapplicable")
    if isinstance(model, MVSDEModel) and abs(model.mean_field(sol.measure)) > 10 * tol:
        raise ScalingError("scaling law inapplicable")
    factor = (sigma_to / sol.sigma) ** (1.0 / n_model)
    mu = QuadratureMeasure(sol.measure.nodes * factor, sol.measure.weights)
    new_model = model.with_sigma(sigma_to)
    res = residual_norm(new_model, mu)
    return StationarySolution(mu, sigma_to, res, res < tol, 0, new_model, "rescaled")


# -- stability probe ------------------------------------------------------------


class Verdict(str, Enum):
    UNSTABLE = "unstable"
    INDICATIVE_STABLE = "indicativeStable"


@dataclass(frozen=True)
class StabilityProbe:
    direction: np.ndarray
    derivative: float
    verdict: Verdict


def stability_probe(model: MVSDEModel, sol: StationarySolution, direction=None) -> StabilityProbe:
    """d m1/dh = sum_i beta_i (-V''(x_i)) dx_i/dh for a same-sign node perturbation."""
    mu = sol.measure
    d = np.ones(mu.size) if direction is None else np.asarray(direction, dtype=float)
    d = np.array(np.broadcast_to(d, (mu.size,)))
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("direction must be nonzero and unidirectional")
    v2 = eval_poly(derivative(model.potential_deriv), mu.nodes)
    der = float(mu.weights @ (-v2 * d))
    verdict = Verdict.UNSTABLE if der * np.sign(d[0]) > 0 else Verdict.INDICATIVE_STABLE
    return StabilityProbe(d, der, verdict)


@dataclass(frozen=True)
class ThresholdReading:
    squared: float  # (3 m2)^(-1/2), from a sigma^2 factor in the node sum
    linear: float  # (3 m2)^(-1), consistent with nodes scaling like sigma^(1/2)
    m2_unit_sigma: float


def instability_threshold(model: MVSDEModel, n: int, tol: float = 1e-12) -> ThresholdReading:
    if n < 2:
        raise ValueError("threshold needs N >= 2 (N = 1 gives m2 = 0)")
    sol = symmetric_stationary(model, n, sigma=1.0, tol=tol)
    if not sol.converged:
        raise RuntimeError(f"symmetric solve failed: {sol.message}")
    m2 = sol.m2
    return ThresholdReading((3.0 * m2) ** -0.5, 1.0 / (3.0 * m2), m2)


# -- bifurcation sweep ----------------------------------------------------------


class Branch(str, Enum):
    SYMMETRIC = "symmetric"
    UPPER = "upper"
    LOWER = "lower"


@dataclass
class DiagramEntry:
    sigma: float
    branch: Branch
    m1: float
    m2: float
    verdict: Verdict
    residual: float
    probe_derivative: float
    measure: QuadratureMeasure


@dataclass
class BifurcationDiagram:
    entries: list[DiagramEntry] = field(default_factory=list)
    critical_sigma: float | None = None
    critical_bracket: tuple[float, float] | None = None
    critical_sigma_refined: float | None = None
    failures: list[tuple[float, str, str]] = field(default_factory=list)

    def branch(self, b: Branch) -> list[DiagramEntry]:
        return [e for e in self.entries if e.branch == b]

    def at(self, sigma: float, tol: float = 1e-9) -> list[DiagramEntry]:
        return [e for e in self.entries if abs(e.sigma - sigma) < tol]

    def sorted(self) -> BifurcationDiagram:
        order = {Branch.SYMMETRIC: 0, Branch.UPPER: 1, Branch.LOWER: 2}
        ents = sorted(self.entries, key=lambda e: (order[e.branch], e.sigma))
        return replace(self, entries=ents)

    def to_json(self) -> dict:
        return {
            "critical_sigma": self.critical_sigma,
            "critical_bracket": list(self.critical_bracket) if self.critical_bracket else None,
            "critical_sigma_refined": self.critical_sigma_refined,
            "entries": [
                {
                    "sigma": e.sigma, "branch": e.branch.value, "m1": e.m1, "m2": e.m2,
                    "verdict": e.verdict.value, "residual": e.residual,
                    "probe_derivative": e.probe_derivative, **e.measure.to_json(),
                }
                for e in self.entries
            ],
            "failures": [{"sigma": s, "branch": b, "reason": r} for s, b, r in self.failures],
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", "branch", "m1", "m2", "verdict", "residual"])
            for e in self.entries:
                w.writerow([repr(e.sigma), e.branch.value, repr(e.m1), repr(e.m2), e.verdict.value,
                            repr(e.residual)])

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1), encoding="utf-8")


def _entry(model: MVSDEModel, sol: StationarySolution, branch: Branch) -> DiagramEntry:
    probe = stability_probe(model, sol)
    return DiagramEntry(sol.sigma, branch, sol.m1, sol.m2, probe.verdict, sol.residual_norm,
                        probe.derivative, sol.measure)


def _continue_asymmetric(model: MVSDEModel, sigmas: list[float], site: float, n: int, tol: float,
                         diagram: BifurcationDiagram, branch: Branch):
    """Walk up in sigma from the smallest value; return (last survivor, first collapse)."""
    try:
        prev = hermite_seed(model.with_sigma(sigmas[0]), points_per_cluster=n, sites=[site])
    except SeedError as exc:
        diagram.failures.append((sigmas[0], branch.value, str(exc)))
        return None, None, None
    last_ok = None
    last_sol = None
    for s in sigmas:
        m = model.with_sigma(s)
        try:
            sol = solve_stationary(m, prev, tol)
        except (NodeCollisionError, ValueError) as exc:
            diagram.failures.append((s, branch.value, str(exc)))
            return last_ok, s, last_sol
        if not sol.converged:
            diagram.failures.append((s, branch.value, sol.message or "not converged"))
            return last_ok, s, last_sol
        if abs(sol.m1) < 10 * tol:
            return last_ok, s, last_sol
        diagram.entries.append(_entry(model, sol, branch))
        last_ok, last_sol, prev = s, sol, sol.measure
    return last_ok, None, last_sol


def _symmetric_branch(model: MVSDEModel, grid: list[float], n: int, tol: float,
                      diagram: BifurcationDiagram):
    """Symmetric branch, warm-started downward in sigma."""
    prev = None
    for s in grid:
        try:
            sol = symmetric_stationary(model, n, s, tol, seed=prev)
        except (NodeCollisionError, ValueError) as exc:
            diagram.failures.append((s, Branch.SYMMETRIC.value, str(exc)))
            prev = None
            continue
        if sol.converged:
            diagram.entries.append(_entry(model, sol, Branch.SYMMETRIC))
            prev = sol.measure
        else:
            diagram.failures.append((s, Branch.SYMMETRIC.value, sol.message or "not converged"))
            prev = None


def bifurcation_sweep(model: MVSDEModel, sigma_grid, n: int, tol: float = 1e-10,
                      refine_steps: int = 0, jobs: int = 1) -> BifurcationDiagram:
    """Track the symmetric and the two outer asymmetric branches over a decreasing sigma grid.

    The three branches are independent tasks; with ``jobs > 1`` they run on a
    thread pool and are merged in (branch, sigma) order, so the result does
    not depend on completion order.
    """
    grid = [float(s) for s in sigma_grid]
    if any(s <= 0 for s in grid) or any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("sigma grid must be strictly decreasing and positive")
    ascending = grid[::-1]
    sites = [site for site, _, _ in cluster_sites(model.with_sigma(ascending[0]))]
    tasks = [(Branch.SYMMETRIC, None)]
    if sites:
        tasks += [(b, site) for b, site in ((Branch.UPPER, max(sites)), (Branch.LOWER, min(sites)))
                  if abs(site) >= 1e-12]

    def run(task):
        branch, site = task
        part = BifurcationDiagram()
        if branch == Branch.SYMMETRIC:
            _symmetric_branch(model, grid, n, tol, part)
            return part, None
        return part, _continue_asymmetric(model, ascending, site, n, tol, part, branch)

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    diagram = BifurcationDiagram()
    brackets = []
    survivors = {}
    for (branch, _), (part, walk) in zip(tasks, results):
        diagram.entries.extend(part.entries)
        diagram.failures.extend(part.failures)
        if walk is not None:
            last_ok, collapsed, last_sol = walk
            if last_ok is not None and collapsed is not None:
                brackets.append((last_ok, collapsed))
                survivors[branch] = last_sol
    diagram.failures.sort(key=lambda f: (f[1], -f[0]))
    if brackets:
        lo = float(np.mean([b[0] for b in brackets]))
        hi = float(np.mean([b[1] for b in brackets]))
        diagram.critical_bracket = (lo, hi)
        diagram.critical_sigma = 0.5 * (lo + hi)
        if refine_steps and Branch.UPPER in survivors:
            diagram.critical_sigma_refined = _refine_critical(model, survivors[Branch.UPPER], lo, hi,
                                                              tol, refine_steps)
    return diagram.sorted()


def _refine_critical(model: MVSDEModel, sol: StationarySolution, lo: float, hi: float, tol: float,
                     steps: int) -> float:
    """Bisect on survival of the asymmetric branch, warm-starting from the last survivor."""
    seed = sol.measure
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        try:
            trial = solve_stationary(model.with_sigma(mid), seed, tol)
            alive = trial.converged and abs(trial.m1) >= 10 * tol
        except (NodeCollisionError, ValueError):
            alive = False
        if alive:
            lo, seed = mid, trial.measure
        else:
            hi = mid
    return 0.5 * (lo + hi)


def default_sigma_grid(hi: float = 1.4, lo: float = 0.2, step: float = 0.02) -> list[float]:
    count = int(round((hi - lo) / step))
    return [round(hi - i * step, 12) for i in range(count + 1)]


def moments_summary(sol: StationarySolution, k_max: int) -> np.ndarray:
    return moments_of(sol.measure, k_max)
