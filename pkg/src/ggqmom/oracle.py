"""Independent reference computations used to check the Gauss-Galerkin solver.

Nothing here calls into ``dynamics`` or ``stationary``; each routine reaches
its answer by a different route (closed forms, particle simulation,
one-dimensional quadrature of explicit densities).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .model import Model, MVSDEModel, SDEModel, generator_apply_monomial
from .polynomial import Polynomial, antiderivative, derivative, eval_poly, real_roots


# -- moment evolution equations ----------------------------------------------


@dataclass(frozen=True)
class MomentEquation:
    """mdot_k = sum_j coeffs[j] * m_j."""

    order: int
    coeffs: tuple[float, ...]

    @property
    def highest_index(self) -> int:
        nz = [j for j, c in enumerate(self.coeffs) if c != 0.0]
        return nz[-1] if nz else 0

    def __call__(self, moments) -> float:
        c = np.asarray(self.coeffs)
        return float(c @ np.asarray(moments)[: c.size])


def mee_rhs(model: SDEModel, k_max: int) -> list[MomentEquation]:
    """Moment equations for orders 0..K (order 0 is identically zero)."""
    if k_max < 1:
        raise ValueError("K must be at least 1")
    return [MomentEquation(k, generator_apply_monomial(model, k).coefficients) for k in range(k_max + 1)]


def mee_closed_rhs(model: Model, nodes: np.ndarray, weights: np.ndarray, k_max: int) -> np.ndarray:
    """Evaluate mdot_0..mdot_K, closing every moment from the discrete measure."""
    if isinstance(model, MVSDEModel):
        shift = model.theta * float(weights @ eval_poly(model.interaction_deriv, nodes))
        model = SDEModel(shift - model.effective_potential_deriv, model.diffusion, model.sigma)
    eqs = mee_rhs(model, max(k_max, 1))
    top = max(e.highest_index for e in eqs)
    m = (nodes[None, :] ** np.arange(top + 1)[:, None]) @ weights
    return np.array([e(m) for e in eqs[: k_max + 1]])


# -- Ornstein-Uhlenbeck closed form ------------------------------------------


def ou_moment_expansions(alpha: float, sigma: float, init_moments) -> list[dict[int, float]]:
    """Each m_n(t) as {j: c} meaning sum_j c * exp(-alpha j t).

    m_n(t) = e^{-a n t} m_n(0) + (s^2/2) n(n-1) int_0^t e^{-a n (t-s)} m_{n-2}(s) ds,
    integrated termwise; exponents j of m_{n-2} never equal n, so no secular terms.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m0 = [float(v) for v in init_moments]
    out: list[dict[int, float]] = []
    for n, mn0 in enumerate(m0):
        terms: dict[int, float] = {n: mn0}
        if n >= 2:
            fac = 0.5 * sigma**2 * n * (n - 1)
            for j, c in out[n - 2].items():
                # int_0^t e^{-a n (t-s)} e^{-a j s} ds = (e^{-a j t} - e^{-a n t}) / (a (n - j))
                coef = fac * c / (alpha * (n - j))
                terms[j] = terms.get(j, 0.0) + coef
                terms[n] = terms.get(n, 0.0) - coef
        out.append(terms)
    return out


def ou_moments(alpha: float, sigma: float, init_moments, t) -> np.ndarray:
    """Exact OU moments m_0..m_K at time(s) t; shape (K+1,) or (len(t), K+1)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    exps = ou_moment_expansions(alpha, sigma, init_moments)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    res = np.array([[sum(c * math.exp(-alpha * j * ti) for j, c in e.items()) for e in exps] for ti in tt])
    return res[0] if np.ndim(t) == 0 else res


def gaussian_moments(mean: float, variance: float, k_max: int) -> np.ndarray:
    """Raw moments of N(mean, variance) via m_k = mean m_{k-1} + (k-1) var m_{k-2}."""
    m = np.zeros(k_max + 1)
    m[0] = 1.0
    if k_max >= 1:
        m[1] = mean
    for k in range(2, k_max + 1):
        m[k] = mean * m[k - 1] + (k - 1) * variance * m[k - 2]
    return m


# -- Euler-Maruyama ----------------------------------------------------------


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    time: float
    seed: int
    step_size: float

    def moment(self, k: int) -> float:
        return float(np.mean(self.positions**k))

    def summary(self) -> dict:
        return {
            "m1": self.moment(1),
            "m2": self.moment(2),
            "m4": self.moment(4),
            "M": int(self.positions.size),
            "dt": self.step_size,
            "T": self.time,
            "seed": self.seed,
        }


class BlowUpError(RuntimeError):
    pass


def keyed_normals(seed: int, step: int, start: int, count: int) -> np.ndarray:
    """Standard normals for particles [start, start+count) at a given step.

    A Philox stream keyed by (seed, step) is read at the offset belonging to
    each particle, so a particle's noise does not depend on how particles are
    split into chunks.  Particles 2q and 2q+1 share the Box-Muller pair built
    from words 2q and 2q+1 (cosine and sine branch respectively).
    """
    bg = np.random.Philox(key=np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(step)]))
    start, count = int(start), int(count)
    first, last = start // 2, (start + count + 1) // 2
    # advance() counts 4-word counter blocks
    block, skip = divmod(2 * first, 4)
    if block:
        bg.advance(int(block))
    # Generator.random maps each raw word to (w >> 11) * 2^-53, in stream order
    u = np.random.Generator(bg).random(skip + 2 * (last - first))[skip:].reshape(-1, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    th = 2.0 * np.pi * u[:, 1]
    z = np.column_stack([r * np.cos(th), r * np.sin(th)]).ravel()
    off = start - 2 * first
    return z[off:off + count]


def _draw(seed: int, step: int, m: int, chunks: int) -> np.ndarray:
    if chunks <= 1:
        return keyed_normals(seed, step, 0, m)
    edges = np.linspace(0, m, chunks + 1).astype(int)
    return np.concatenate([keyed_normals(seed, step, lo, hi - lo) for lo, hi in zip(edges[:-1], edges[1:])])


def init_positions(sampler, m: int, seed: int) -> np.ndarray:
    """Initial particle cloud.

    ``sampler`` is a float (all particles there), ``("normal", mean, var)``,
    ``("point", c)`` or an explicit array of length M.
    """
    if isinstance(sampler, (int, float)):
        return np.full(m, float(sampler))
    if isinstance(sampler, (list, tuple)) and sampler and isinstance(sampler[0], str):
        kind = sampler[0]
        if kind == "point":
            return np.full(m, float(sampler[1]))
        if kind == "normal":
            mean, var = float(sampler[1]), float(sampler[2])
            # a reserved step index keeps the initial draw apart from the increments
            return mean + math.sqrt(var) * keyed_normals(seed, 2**63, 0, m)
        raise ValueError(f"unknown sampler {kind!r}")
    arr = np.asarray(sampler, dtype=float)
    if arr.shape != (m,):
        raise ValueError("explicit initial positions must have length M")
    return arr.copy()


def euler_maruyama(model: Model, m: int, dt: float, t_end: float, seed: int = 0,
                   init=0.0, guard: float = 1e6, chunks: int = 1) -> ParticleEnsemble:
    """Interacting-particle Euler-Maruyama; the MV mean field is the empirical mean."""
    if dt <= 0 or t_end < dt or m < 1:
        raise ValueError("need dt > 0, T >= dt and M >= 1")
    x = init_positions(init, m, seed)
    steps = int(round(t_end / dt))
    sq = math.sqrt(dt)
    sig = model.sigma
    const_b = model.diffusion.degree == 0
    b0 = model.diffusion.coefficients[0]
    mv = isinstance(model, MVSDEModel)
    for step in range(steps):
        if mv:
            shift = model.theta * float(np.mean(eval_poly(model.interaction_deriv, x)))
            a = shift - eval_poly(model.effective_potential_deriv, x)
        else:
            a = eval_poly(model.drift, x)
        b = b0 if const_b else eval_poly(model.diffusion, x)
        x = x + a * dt + (sig * sq) * b * _draw(seed, step, m, chunks)
        if not np.all(np.abs(x) < guard):
            raise BlowUpError("blow-up: check dt or model")
    return ParticleEnsemble(x, steps * dt, seed, dt)


# -- self-consistency (quadratic interaction) --------------------------------


def _support(vbar: Polynomial, shift: float, sigma: float) -> tuple[float, float]:
    """Interval holding all but ~1e-12 of exp(-(2/s^2)(Vbar(x) - shift x))."""
    pot = vbar - Polynomial([0.0, shift])
    dpot = derivative(pot)
    crit = [r for r in real_roots(dpot, 1e-6)] if dpot.degree >= 1 else [0.0]
    center = min(crit, key=lambda r: eval_poly(pot, r)) if crit else 0.0
    curv = abs(eval_poly(derivative(dpot), center)) if dpot.degree >= 1 else 1.0
    scale = sigma / math.sqrt(2.0 * max(curv, 1e-3))
    lo_c, hi_c = min(crit + [center]), max(crit + [center])
    width = 0.5 * min(scale, 1.0)
    floor = eval_poly(pot, center)
    for _ in range(60):
        lo, hi = lo_c - width, hi_c + width
        tail = -(2.0 / sigma**2) * (min(eval_poly(pot, lo), eval_poly(pot, hi)) - floor)
        if tail < math.log(1e-12) - 5.0:
            return lo, hi
        width *= 2.0
    raise RuntimeError("could not bound the density support")


def self_consistency(model: MVSDEModel, mean_candidate: float, rtol: float = 1e-12) -> float:
    """F(mu) = E_mu[X] - mu for the density proportional to
    exp(-(2/sigma^2)(Vbar(x) - theta mu x))."""
    if model.interaction_deriv.coefficients != (0.0, 1.0):
        raise ValueError("self-consistency map implemented for P'(x) = x only")
    if model.diffusion.degree != 0 or model.sigma <= 0:
        raise ValueError("need constant diffusion and sigma > 0")
    sig = model.sigma * model.diffusion.coefficients[0]
    vbar = antiderivative(model.effective_potential_deriv)
    shift = model.theta * mean_candidate
    lo, hi = _support(vbar, shift, sig)
    pot = vbar - Polynomial([0.0, shift])
    grid = np.linspace(lo, hi, 2001)
    floor = float(np.min(eval_poly(pot, grid)))

    def dens(x):
        return math.exp(-(2.0 / sig**2) * (eval_poly(pot, x) - floor))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            pts = list(np.linspace(lo, hi, 9)[1:-1])
            z, _ = integrate.quad(dens, lo, hi, epsabs=0, epsrel=rtol, limit=400, points=pts)
            m1, _ = integrate.quad(lambda x: x * dens(x), lo, hi, epsabs=1e-14 * z, epsrel=rtol,
                                   limit=400, points=pts)
        except integrate.IntegrationWarning as exc:
            raise RuntimeError(f"quadrature did not converge: {exc}") from None
    return m1 / z - mean_candidate


def stationary_moment(model: MVSDEModel, k: int, mean: float = 0.0) -> float:
    """E[X^k] under the stationary density at the given mean-field value."""
    sig = model.sigma * model.diffusion.coefficients[0]
    vbar = antiderivative(model.effective_potential_deriv)
    pot = vbar - Polynomial([0.0, model.theta * mean])
    lo, hi = _support(vbar, model.theta * mean, sig)
    floor = float(np.min(eval_poly(pot, np.linspace(lo, hi, 2001))))

    def dens(x):
        return math.exp(-(2.0 / sig**2) * (eval_poly(pot, x) - floor))

    z, _ = integrate.quad(dens, lo, hi, epsabs=0, epsrel=1e-12, limit=400)
    mk, _ = integrate.quad(lambda x: x**k * dens(x), lo, hi, epsabs=1e-14 * z, epsrel=1e-12, limit=400)
    return mk / z


def self_consistency_roots(model: MVSDEModel, lo: float = -2.0, hi: float = 2.0, n_scan: int = 81,
                           xtol: float = 1e-12) -> list[float]:
    """Roots of F on [lo, hi] by sign scan plus Brent refinement."""
    from scipy.optimize import brentq

    grid = np.linspace(lo, hi, n_scan)
    vals = [self_consistency(model, g) for g in grid]
    roots = []
    for i in range(n_scan - 1):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0:
            roots.append(float(grid[i]))
        elif f0 * f1 < 0:
            roots.append(brentq(lambda mu: self_consistency(model, mu), grid[i], grid[i + 1], xtol=xtol))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    # the symmetric root may sit on a grid point with tiny nonzero residuals on either side
    return sorted(_dedupe(roots, 1e-8))


def _dedupe(vals: list[float], tol: float) -> list[float]:
    out: list[float] = []
    for v in sorted(vals):
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


# -- a-priori bounds and summability -----------------------------------------


def moment_majorant(theta: float, sigma: float, k: int, ito_factor: bool = False) -> float:
    """m*_{2k} = y*^k with y* the positive root of c s^2/2 + (1-theta) y - y^2.

    c = 1 by default.  The generator applied to x^{2k} carries the factor
    c = 2k-1 on the noise term; without it the majorant is only valid for
    k = 1, so ``ito_factor=True`` gives the bound that holds at every order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    c = 2 * k - 1 if ito_factor else 1
    b = 1.0 - theta
    y = 0.5 * (b + math.sqrt(b * b + 2.0 * c * sigma**2))
    return y**k


@dataclass
class BoundEntry:
    order: int
    observed: float
    bound: float
    satisfied: bool


@dataclass
class BoundReport:
    per_order: list[BoundEntry] = field(default_factory=list)
    summability_partial_sums: list[float] = field(default_factory=list)
    ratio_flag: bool = False
    domination_odd: float = 0.0
    domination_even: float = 0.0
    domination_holds: bool = True
    note: str = "summability is a heuristic witness on finitely many moments, not a proof"

    @property
    def satisfied(self) -> bool:
        return all(e.satisfied for e in self.per_order) and self.domination_holds

    def to_json(self) -> dict:
        return {
            "per_order": [e.__dict__ for e in self.per_order],
            "summability_partial_sums": self.summability_partial_sums,
            "ratio_flag": self.ratio_flag,
            "domination": {"odd": self.domination_odd, "even": self.domination_even,
                           "holds": self.domination_holds},
            "note": self.note,
        }


def bound_report(moments, initial_moments, theta: float, sigma: float,
                 orders: list[int] | None = None) -> BoundReport:
    """Compare m_{2k} against max(m^0_{2k}, m*_{2k}) for the requested 2k.

    m*_{2k} includes the 2k-1 noise factor (identical to the plain form at
    order 2).  The majorant drops the theta m_1 m_{2k-1} term, so the report
    is meaningful for solutions with vanishing mean or theta <= 1 symmetric.
    """
    m = np.asarray(moments, dtype=float)
    m0 = np.asarray(initial_moments, dtype=float)
    if orders is None:
        orders = list(range(2, min(m.size, m0.size), 2))
    rep = summability_check(m)
    for o in orders:
        bnd = float(max(m0[o], moment_majorant(theta, sigma, o // 2, ito_factor=True)))
        rep.per_order.append(BoundEntry(o, float(m[o]), bnd, bool(m[o] <= bnd * (1 + 1e-9))))
    return rep


def summability_check(moments, theta0: float = 1.0) -> BoundReport:
    m = np.asarray(moments, dtype=float)
    if m.size % 2 == 0:
        warnings.warn("odd highest order; truncating to the last even moment", stacklevel=2)
        m = m[:-1]
    top = m.size - 1  # even
    terms = np.array([theta0**n * abs(m[n]) / math.factorial(n) for n in range(1, top + 1)])
    partial = np.cumsum(terms).tolist()
    even_terms = terms[1::2]  # orders 2, 4, ...
    flag = bool(even_terms.size >= 3 and np.all(np.diff(even_terms[-3:]) >= 0))
    # |x|^{2k-1} <= x^{2k}/(4k) + k x^{2k-2} gives sum_odd <= 2 sum_{k>=0} m_{2k}/(2k)!
    odd = float(sum(abs(m[n]) / math.factorial(n) for n in range(1, top, 2)))
    even = float(sum(m[n] / math.factorial(n) for n in range(0, top + 1, 2)))
    return BoundReport(summability_partial_sums=partial, ratio_flag=flag, domination_odd=odd,
                       domination_even=even, domination_holds=odd <= 2.0 * even * (1 + 1e-12))
