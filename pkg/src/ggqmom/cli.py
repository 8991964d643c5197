"""Command-line driver: simulate, stationary, bifurcate, check.

Every command reads a JSON run configuration, writes UTF-8 output files into
``--out`` and finishes with a ``manifest.json`` that echoes the configuration
together with its content hash.  The same hash is embedded in each output
file, so a replay against a different configuration is detectable.

Exit codes: 0 ok, 1 configuration or validation error, 2 integrator abort,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .dynamics import (
    IntegrationAborted,
    IntegratorConfig,
    Trajectory,
    galerkin_defect,
    gg_rhs,
    integrate,
    moment_trajectory,
    trajectory_rows,
)
from .lagrange import NodeCollisionError
from .model import Model, MVSDEModel, SDEModel, model_from_json, validate
from .oracle import bound_report, ou_moments
from .polynomial import hermite, real_roots
from .quadrature import (
    MomentInversionError,
    QuadratureMeasure,
    gauss_christoffel,
    gauss_hermite_init,
    moments_of,
)
from .stationary import (
    ScalingError,
    SeedError,
    StationarySolution,
    bifurcation_sweep,
    cluster_sites,
    default_sigma_grid,
    hermite_seed,
    scale_solution,
    solve_stationary,
    stability_probe,
    symmetric_seed,
    symmetric_stationary,
)
from .stationary import _is_symmetric_model

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_NONCONVERGED = 0, 1, 2, 3

_INTEGRATOR_KEYS = {
    "relTol": "rel_tol",
    "absTol": "abs_tol",
    "initialStep": "initial_step",
    "maxStep": "max_step",
    "collisionThreshold": "collision_threshold",
    "weightFloor": "weight_floor",
    "maxSteps": "max_steps",
    "maxProjection": "max_projection",
}


class ConfigError(ValueError):
    pass


# -- configuration ------------------------------------------------------------


@dataclass
class RunConfig:
    raw: dict[str, Any]
    model: Model
    n: int
    sigma: float | None
    sigma_grid: list[float] | None
    initializer: dict[str, Any] | None
    integrator: IntegratorConfig
    rng_seed: int
    fmt: str
    moments: int
    options: dict[str, Any] = field(default_factory=dict)

    def initial_measure(self) -> QuadratureMeasure:
        if self.initializer is None:
            raise ConfigError("missing field 'initializer'")
        return build_initializer(self.initializer, self.n)


def _require(data: dict, key: str, where: str = "") -> Any:
    if key not in data:
        raise ConfigError(f"missing field '{where}{key}'")
    return data[key]


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{name}' must be a number")
    return float(value)


def build_initializer(spec: dict[str, Any], n: int) -> QuadratureMeasure:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("field 'initializer' needs exactly one of gauss_hermite, moments, explicit")
    (kind, body), = spec.items()
    try:
        if kind == "gauss_hermite":
            mean = _number(_require(body, "mean", "initializer.gauss_hermite."), "mean")
            var = _number(_require(body, "variance", "initializer.gauss_hermite."), "variance")
            if var <= 0:
                raise ConfigError("field 'initializer.gauss_hermite.variance' must be positive")
            return gauss_hermite_init(n, mean, var)
        if kind == "moments":
            if not isinstance(body, list) or len(body) < 2 * n:
                raise ConfigError(f"field 'initializer.moments' needs at least {2 * n} entries for N={n}")
            return gauss_christoffel([float(v) for v in body[: 2 * n]], n)
        if kind == "explicit":
            nodes = _require(body, "nodes", "initializer.explicit.")
            weights = _require(body, "weights", "initializer.explicit.")
            if len(nodes) != n or len(weights) != n:
                raise ConfigError(f"field 'initializer.explicit' has length {len(nodes)}, expected N={n}")
            return QuadratureMeasure(nodes, weights)
    except (MomentInversionError, NodeCollisionError) as exc:
        raise ConfigError(f"field 'initializer.{kind}': {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"field 'initializer.{kind}': {exc}") from exc
    raise ConfigError(f"field 'initializer': unknown kind '{kind}'")


def _sigma_grid(value: Any) -> list[float]:
    if isinstance(value, dict):
        hi = _number(_require(value, "hi", "sigmaGrid."), "sigmaGrid.hi")
        lo = _number(_require(value, "lo", "sigmaGrid."), "sigmaGrid.lo")
        step = _number(value.get("step", 0.02), "sigmaGrid.step")
        return default_sigma_grid(hi, lo, step)
    if isinstance(value, list) and value:
        return sorted((_number(v, "sigmaGrid") for v in value), reverse=True)
    raise ConfigError("field 'sigmaGrid' must be a list or {hi, lo, step}")


def parse_config(raw: dict[str, Any], command: str, seed: int | None = None,
                 fmt: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    model_raw = _require(raw, "model")
    if not isinstance(model_raw, dict):
        raise ConfigError("field 'model' must be an object")
    n = _require(raw, "N")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("field 'N' must be a positive integer")

    sigma_grid = None
    if command == "bifurcate":
        sigma_grid = _sigma_grid(_require(raw, "sigmaGrid"))
        sigma = sigma_grid[0]
    else:
        sigma = _number(_require(raw, "sigma"), "sigma")

    mdata = dict(model_raw)
    mdata["sigma"] = sigma
    try:
        model = model_from_json(mdata)
    except KeyError as exc:
        raise ConfigError(f"missing field 'model.{exc.args[0]}'") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'model': {exc}") from exc

    integ = {}
    for key, value in dict(raw.get("integrator", {})).items():
        if key not in _INTEGRATOR_KEYS:
            raise ConfigError(f"field 'integrator.{key}' is not recognised")
        integ[_INTEGRATOR_KEYS[key]] = value
    try:
        icfg = IntegratorConfig(**integ)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'integrator': {exc}") from exc

    outputs = dict(raw.get("outputs", {}))
    fmt = fmt or outputs.get("format", "csv")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError("field 'outputs.format' must be csv, json or both")
    rng_seed = int(seed if seed is not None else raw.get("rngSeed", 0))

    cfg = RunConfig(raw, model, n, sigma, sigma_grid, raw.get("initializer"), icfg, rng_seed, fmt,
                    int(outputs.get("moments", 4)), dict(raw.get("options", {})))
    if cfg.initializer is not None:
        cfg.initial_measure()  # fail early, and check N against an explicit initializer
    return cfg


def config_hash(raw: dict[str, Any], command: str, seed: int) -> str:
    """Git-style content hash: sha256 over a blob header plus canonical JSON."""
    body = json.dumps({"command": command, "config": raw, "rngSeed": seed}, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(b"blob %d\0" % len(body) + body).hexdigest()


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


# -- output helpers -----------------------------------------------------------


class Writer:
    def __init__(self, out: Path, digest: str):
        self.out = out
        self.digest = digest
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header: list[str], rows: list[list[Any]]) -> None:
        with open(self.out / name, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# config_hash: {self.digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        self.files.append(name)

    def json(self, name: str, payload: dict[str, Any]) -> None:
        doc = {"config_hash": self.digest, **payload}
        (self.out / name).write_text(json.dumps(doc, indent=1, default=_jsonable) + "\n",
                                     encoding="utf-8")
        self.files.append(name)

    def manifest(self, command: str, raw: dict, seed: int, status: str, code: int, message: str = ""):
        files = {f: hashlib.sha256((self.out / f).read_bytes()).hexdigest() for f in sorted(self.files)}
        doc = {
            "command": command,
            "config": raw,
            "config_hash": self.digest,
            "exit_code": code,
            "files": files,
            "message": message,
            "rngSeed": seed,
            "status": status,
            "version": __version__,
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                                                encoding="utf-8")


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _sample_times(cfg: RunConfig, t_end: float):
    opts = cfg.raw
    if "sampleTimes" in opts:
        return [float(t) for t in opts["sampleTimes"]]
    if "sampleDt" in opts:
        dt = _number(opts["sampleDt"], "sampleDt")
        if dt <= 0:
            raise ConfigError("field 'sampleDt' must be positive")
        count = int(np.floor(t_end / dt + 1e-9))
        return [dt * (i + 1) for i in range(count)]
    return None


def _write_trajectory(w: Writer, cfg: RunConfig, traj: Trajectory) -> None:
    header, rows = trajectory_rows(traj, cfg.moments)
    if cfg.fmt in ("csv", "both"):
        w.csv("trajectory.csv", header, rows)
    if cfg.fmt in ("json", "both"):
        d = traj.diagnostics
        w.json("trajectory.json", {
            "columns": header,
            "rows": rows,
            "diagnostics": {"accepted": d.accepted, "rejected": d.rejected,
                            "final_step": d.final_step, "max_projection": d.max_projection},
        })


def _validation_failure(model: Model, force: bool) -> str | None:
    if force:
        return None
    report = validate(model)
    if report.ok:
        return None
    failed = ", ".join(k for k, v in report.checks.items() if not v)
    return f"model validation failed: {failed}"


# -- commands -----------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, w: Writer, force: bool = False) -> tuple[int, str]:
    msg = _validation_failure(cfg.model, force)
    if msg:
        return EXIT_CONFIG, msg
    t_end = _number(_require(cfg.raw, "tEnd"), "tEnd")
    init = cfg.initial_measure()
    try:
        traj = integrate(cfg.model, init, t_end, cfg.integrator, _sample_times(cfg, t_end))
    except IntegrationAborted as exc:
        _write_trajectory(w, cfg, exc.trajectory)
        return EXIT_ABORT, f"integration aborted at t={exc.trajectory.final.time!r}: {exc}"
    _write_trajectory(w, cfg, traj)
    return EXIT_OK, ""


def _stationary_seed(cfg: RunConfig, model: Model, branch: str | None) -> QuadratureMeasure:
    if branch in ("upper", "lower"):
        sites = [s for s, _, _ in cluster_sites(model)]
        if not sites:
            raise ConfigError("field 'options.branch': model has no stable cluster sites")
        site = max(sites) if branch == "upper" else min(sites)
        return hermite_seed(model, points_per_cluster=cfg.n, sites=[site])
    if cfg.initializer is not None:
        return cfg.initial_measure()
    sites = cluster_sites(model)
    if len(sites) == 1:
        return hermite_seed(model, points_per_cluster=cfg.n)
    if cfg.n % max(len(sites), 1) == 0 and sites:
        return hermite_seed(model, points_per_cluster=cfg.n // len(sites))
    raise ConfigError("missing field 'initializer' (no default seed for this model and N)")


def solve_from_config(cfg: RunConfig) -> tuple[StationarySolution, QuadratureMeasure]:
    """Solve for a stationary state; also return the seed used."""
    model = cfg.model
    tol = float(cfg.options.get("tol", 1e-10))
    branch = cfg.options.get("branch")
    symmetric = bool(cfg.options.get("symmetric", False)) or branch == "symmetric"
    if symmetric:
        if not _is_symmetric_model(model):
            raise ConfigError("field 'options.symmetric': parity assumptions violated")
        seed = cfg.initial_measure() if cfg.initializer is not None else symmetric_seed(model, cfg.n)
        return symmetric_stationary(model, cfg.n, tol=tol, seed=seed), seed
    seed = _stationary_seed(cfg, model, branch)
    return solve_stationary(model, seed, tol), seed


def cmd_stationary(cfg: RunConfig, w: Writer, force: bool = False) -> tuple[int, str]:
    msg = _validation_failure(cfg.model, force)
    if msg:
        return EXIT_CONFIG, msg
    try:
        sol, _ = solve_from_config(cfg)
    except (NodeCollisionError, SeedError) as exc:
        raise ConfigError(str(exc)) from exc
    payload = {"model": cfg.model.to_json(), "N": cfg.n, "solution": sol.to_json()}
    if isinstance(cfg.model, MVSDEModel):
        probe = stability_probe(cfg.model, sol)
        payload["probe"] = {"derivative": probe.derivative, "verdict": probe.verdict.value}
    w.json("stationary.json", payload)
    if not sol.converged:
        return EXIT_NONCONVERGED, f"stationary solve did not converge: {sol.message}"
    return EXIT_OK, ""


def cmd_bifurcate(cfg: RunConfig, w: Writer, force: bool = False, jobs: int = 1) -> tuple[int, str]:
    if not isinstance(cfg.model, MVSDEModel):
        raise ConfigError("field 'model.kind' must be mvsde for a bifurcation sweep")
    msg = _validation_failure(cfg.model, force)
    if msg:
        return EXIT_CONFIG, msg
    tol = float(cfg.options.get("tol", 1e-10))
    refine = int(cfg.options.get("refineSteps", 0))
    diagram = bifurcation_sweep(cfg.model, cfg.sigma_grid, cfg.n, tol, refine, jobs=jobs)
    if cfg.fmt in ("csv", "both"):
        w.csv("bifurcation.csv", ["sigma", "branch", "m1", "m2", "verdict", "residual"],
              [[e.sigma, e.branch.value, e.m1, e.m2, e.verdict.value, e.residual] for e in diagram.entries])
    if cfg.fmt in ("json", "both"):
        w.json("bifurcation.json", diagram.to_json())
    return EXIT_OK, ""


def run_checks(cfg: RunConfig, force: bool = False) -> dict[str, dict[str, Any]]:
    """Invariant suite; each entry is {"pass": bool, ...details}."""
    model, n = cfg.model, cfg.n
    out: dict[str, dict[str, Any]] = {}
    report = validate(model)
    out["validation"] = {"pass": report.ok, **report.to_json()}
    if not report.ok and not force:
        return out

    rng = np.random.default_rng(cfg.rng_seed)
    defects, conservation = [], []
    for _ in range(20):
        x = np.sort(rng.normal(size=n))
        while n > 1 and np.min(np.diff(x)) < 1e-2:
            x = np.sort(rng.normal(size=n))
        mu = QuadratureMeasure.normalized(x, rng.dirichlet(np.ones(n)))
        defects.append(float(galerkin_defect(model, mu).max()))
        _, bd = gg_rhs(model, mu)
        conservation.append(abs(float(bd.sum())) / max(1.0, float(np.abs(bd).sum())))
    out["galerkin_consistency"] = {"pass": max(defects) < 1e-9, "max_defect": max(defects)}
    out["weight_conservation"] = {"pass": max(conservation) < 1e-12, "max_sum": max(conservation)}

    ou = (isinstance(model, SDEModel) and model.drift.degree == 1 and model.drift.coefficients[0] == 0
          and model.drift.coefficients[1] < 0 and model.diffusion.degree == 0)
    if ou:
        alpha = -model.drift.coefficients[1]
        sig = model.sigma * model.diffusion.coefficients[0]
        init = gauss_hermite_init(n, 1.0, 0.5) if cfg.initializer is None else cfg.initial_measure()
        k = min(4, 2 * n - 1)
        ts = np.linspace(0.0, 5.0, 51)[1:]
        traj = integrate(model, init, 5.0, cfg.integrator, ts)
        got = moment_trajectory(traj, k)[:, 1:]
        exact = ou_moments(alpha, sig, moments_of(init, k), traj.times)[:, 1:]
        err = float(np.max(np.abs(got - exact) / np.maximum(np.abs(exact), 1e-12)))
        out["ou_trajectory"] = {"pass": err < 1e-5, "max_rel_error": err}
        sol = solve_stationary(model, gauss_hermite_init(n, 0.0, 0.5 * sig**2 / alpha))
        ref = np.array(real_roots(hermite(n))) * sig / np.sqrt(2 * alpha) if n > 1 else np.zeros(1)
        node_err = float(np.max(np.abs(sol.measure.nodes - ref)))
        out["ou_stationary"] = {"pass": sol.converged and node_err < 1e-8, "max_node_error": node_err}

    if _is_symmetric_model(model) and cfg.initializer is None:
        cfg.options.setdefault("symmetric", True)
    try:
        sol, seed = solve_from_config(cfg)
    except (ConfigError, SeedError, NodeCollisionError, ValueError) as exc:
        out["stationary"] = {"pass": False, "message": str(exc)}
        return out
    out["stationary"] = {"pass": sol.converged, "residual": sol.residual_norm, "m1": sol.m1}
    if not sol.converged:
        return out

    try:
        scaled = scale_solution(sol, 2.0 * model.sigma)
        out["scaling"] = {"pass": scaled.residual_norm < 1e-9, "residual": scaled.residual_norm}
    except ScalingError as exc:
        out["scaling"] = {"pass": True, "skipped": str(exc)}

    if _is_symmetric_model(model):
        traj = integrate(model, gauss_hermite_init(n, 0.0, 0.1), 2.0, cfg.integrator, [0.5, 1.0, 1.5])
        odd = float(np.max(np.abs(moment_trajectory(traj, 1)[:, 1])))
        out["parity"] = {"pass": odd < 1e-9, "max_abs_m1": odd}

    if (isinstance(model, MVSDEModel) and model.interaction_deriv.coefficients == (0.0, 1.0)
            and model.effective_potential_deriv.coefficients == (0.0, 0.0, 0.0, 1.0)
            and model.diffusion.coefficients == (1.0,)):
        rep = bound_report(moments_of(sol.measure, 2 * n), moments_of(seed, 2 * n), model.theta,
                           model.sigma)
        out["bound_report"] = {"pass": rep.satisfied, **rep.to_json()}
    return out


def cmd_check(cfg: RunConfig, w: Writer, force: bool = False) -> tuple[int, str]:
    results = run_checks(cfg, force)
    ok = all(r["pass"] for r in results.values())
    w.json("check.json", {"all_pass": ok, "checks": results})
    if ok:
        return EXIT_OK, ""
    failed = ", ".join(k for k, r in results.items() if not r["pass"])
    return EXIT_CONFIG, f"checks failed: {failed}"


COMMANDS = {
    "simulate": cmd_simulate,
    "stationary": cmd_stationary,
    "bifurcate": cmd_bifurcate,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggqmom", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for bifurcate")
    p.add_argument("--seed", type=int, default=None, help="override rngSeed")
    p.add_argument("--force", action="store_true", help="skip model validation")
    p.add_argument("--format", choices=["csv", "json", "both"], default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = load_config(args.config)
        cfg = parse_config(raw, args.command, args.seed, args.format)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    w = Writer(Path(args.out), config_hash(raw, args.command, cfg.rng_seed))
    try:
        if args.command == "bifurcate":
            code, message = cmd_bifurcate(cfg, w, args.force, args.jobs)
        else:
            code, message = COMMANDS[args.command](cfg, w, args.force)
    except ConfigError as exc:
        code, message = EXIT_CONFIG, str(exc)
    status = {EXIT_OK: "ok", EXIT_CONFIG: "invalid", EXIT_ABORT: "aborted",
              EXIT_NONCONVERGED: "not_converged"}[code]
    w.manifest(args.command, raw, cfg.rng_seed, status, code, message)
    if message:
        print(f"{'error' if code else 'note'}: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
