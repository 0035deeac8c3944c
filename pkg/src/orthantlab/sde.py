"""Euler-projection simulation of the reflected diffusion, pathwise
validation, and first-passage sampling.

Each step draws a Gaussian increment (Cholesky factor of Sigma, Philox
counter-based generator keyed by the config seed), adds the drift, and
projects back into the orthant with the same support-enumeration reflection
used by the fluid integrator.  Identical (model, z0, config) inputs produce
bit-identical trajectories.

``validate_path`` checks every defining property of a trajectory pathwise:
the reconstruction identity, monotonicity of the pushes, nonnegativity,
per-step complementarity, and - for the 6-d example family - the push-mass
lower bounds and per-coordinate push upper bound that follow from the
structure of the reflection matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .matclass import is_completely_s
from .model import (
    DimensionError,
    PathGrid,
    SrbmModel,
    StateVec,
    foster_norm,
    match_example,
)
from .seeds import make_rng

__all__ = [
    "NumericError",
    "SimConfig",
    "HittingSample",
    "PathValidationReport",
    "simulate",
    "validate_path",
    "hitting_time",
]

VALIDATE_TOL = 1e-7
CHUNK_STEPS = 1 << 16


class NumericError(RuntimeError):
    """Nonfinite state or failed reflection during simulation."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class SimConfig:
    h: float
    T: float
    seed: int
    scheme: str = "euler_projection"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.T < self.h:
            raise ValueError("T must be at least h")
        if self.scheme != "euler_projection":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.h))


@dataclass(frozen=True)
class HittingSample:
    """One first-passage record; censored samples carry tau = cap."""

    tau: float
    censored: bool
    steps: int
    terminal_state: StateVec

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "censored": self.censored,
            "steps": self.steps,
            "terminal": self.terminal_state.z.tolist(),
        }


_CS_CACHE: dict[bytes, bool] = {}


def _require_completely_s(r: np.ndarray):
    key = np.ascontiguousarray(r, dtype=float).tobytes()
    ok = _CS_CACHE.get(key)
    if ok is None:
        ok, _ = is_completely_s(r)
        _CS_CACHE[key] = ok
    if not ok:
        raise ValueError("reflection matrix is not completely-S; cannot simulate")


def _scaled_increments(model: SrbmModel, cfg: SimConfig, noise_scale: float) -> np.ndarray:
    rng = make_rng(cfg.seed)
    xi = rng.standard_normal((cfg.steps, model.d))
    if noise_scale == 0.0:
        return np.zeros_like(xi)
    chol = np.linalg.cholesky(model.sigma)
    return (noise_scale * np.sqrt(cfg.h)) * (xi @ chol.T)


def simulate(
    model: SrbmModel,
    z0: StateVec,
    cfg: SimConfig,
    *,
    noise_scale: float = 1.0,
) -> PathGrid:
    """Simulate one trajectory on the grid t_i = i*h, i = 0..T/h.

    ``noise_scale=0`` is a test hook that reduces the scheme to the fluid
    integrator while keeping the same code path.
    """
    if z0.d != model.d:
        raise DimensionError("z0 dimension does not match the model")
    _require_completely_s(model.r_matrix)
    tables = kernels.projection_tables(model.r_matrix)
    db = _scaled_increments(model, cfg, noise_scale)
    steps = cfg.steps
    z_path = np.empty((steps + 1, model.d))
    y_path = np.empty((steps + 1, model.d))
    status = kernels.run_path_store(
        z0.z,
        model.theta * cfg.h,
        db,
        tables.r,
        tables.scatter,
        tables.valid,
        z_path,
        y_path,
    )
    if status == kernels.STATUS_INFEASIBLE:
        raise NumericError("reflection step infeasible")
    if status == kernels.STATUS_NONFINITE:
        raise NumericError("state became nonfinite")
    b_path = np.zeros((steps + 1, model.d))
    np.cumsum(db, axis=0, out=b_path[1:])
    times = np.arange(steps + 1) * cfg.h
    return PathGrid(h=cfg.h, times=times, z_path=z_path, y_path=y_path, b_path=b_path)


@dataclass(frozen=True)
class PathValidationReport:
    """Pathwise check results; each violation is (check, step, magnitude)."""

    checks_run: tuple[str, ...]
    violations: tuple[tuple[str, int, float], ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks_run": list(self.checks_run),
            "violations": [
                {"check": c, "step": s, "magnitude": m}
                for (c, s, m) in self.violations
            ],
        }


def _first_violation(mask: np.ndarray, magnitude: np.ndarray):
    rows = np.flatnonzero(mask.any(axis=1) if mask.ndim == 2 else mask)
    step = int(rows[0])
    return step, float(magnitude[step].max() if magnitude.ndim == 2 else magnitude[step])


def validate_path(grid: PathGrid, model: SrbmModel, tol: float = VALIDATE_TOL) -> PathValidationReport:
    """Check a trajectory against the defining relations, pathwise.

    Generic checks (any model): reconstruction identity, push monotonicity
    with y(0) = 0, state nonnegativity, per-step complementarity.  For the
    6-d example family three further inequalities are checked, all direct
    consequences of the sign structure of the reflection matrix:

      (e) sum_k Y_k(t) >= t - Z_l(0) - B_l(t)           for l = 2..5,
      (f) sum_k Y_k(t) >= (t - Z_l(0) - B_l(t)) / 2     for l = 1..6,
      (g) Y_k(t) <= t + max_{s<=t} (-B_k(s))            for every k.
    """
    violations: list[tuple[str, int, float]] = []
    checks = ["reconstruction", "y_monotone", "z_nonnegative", "complementarity"]
    t = grid.times[:, None]

    recon = (
        grid.z_path[0][None, :]
        + grid.b_path
        + t * model.theta[None, :]
        + grid.y_path @ model.r_matrix.T
    )
    err = np.abs(grid.z_path - recon)
    if err.max() > tol:
        violations.append(("reconstruction", *_first_violation(err > tol, err)))

    if np.abs(grid.y_path[0]).max() > tol:
        violations.append(("y_monotone", 0, float(np.abs(grid.y_path[0]).max())))
    dy = np.diff(grid.y_path, axis=0)
    if dy.size and dy.min() < -tol:
        bad = -dy
        violations.append(("y_monotone", *_first_violation(bad > tol, bad)))

    if grid.z_path.min() < -tol:
        bad = -grid.z_path
        violations.append(("z_nonnegative", *_first_violation(bad > tol, bad)))

    if dy.size:
        comp = np.abs(np.sum(dy * grid.z_path[1:], axis=1))
        if comp.max() > tol:
            violations.append(("complementarity", *_first_violation(comp > tol, comp)))

    if match_example(model) is not None:
        checks += ["push_mass_lower", "push_mass_half", "push_upper"]
        total_y = grid.y_path.sum(axis=1)[:, None]
        slack = total_y - (grid.times[:, None] - grid.z_path[0][None, :] - grid.b_path)
        bad = -slack[:, 1:5]
        if bad.max() > tol:
            violations.append(("push_mass_lower", *_first_violation(bad > tol, bad)))
        slack_half = total_y - 0.5 * (
            grid.times[:, None] - grid.z_path[0][None, :] - grid.b_path
        )
        bad = -slack_half
        if bad.max() > tol:
            violations.append(("push_mass_half", *_first_violation(bad > tol, bad)))
        running_min_b = np.minimum.accumulate(grid.b_path, axis=0)
        bad = grid.y_path - (grid.times[:, None] - running_min_b)
        if bad.max() > tol:
            violations.append(("push_upper", *_first_violation(bad > tol, bad)))

    return PathValidationReport(tuple(checks), tuple(violations))


def states_at(
    model: SrbmModel,
    z0: StateVec,
    cfg: SimConfig,
    times: list[float],
    *,
    noise_scale: float = 1.0,
) -> list[StateVec]:
    """States at the requested grid times, without storing the whole path.

    Times are rounded to the grid; they must be increasing and at most cfg.T.
    The trajectory is the same one ``simulate`` would produce with the same
    config.
    """
    if z0.d != model.d:
        raise DimensionError("z0 dimension does not match the model")
    _require_completely_s(model.r_matrix)
    step_marks = [int(round(t / cfg.h)) for t in times]
    if any(s2 <= s1 for s1, s2 in zip(step_marks, step_marks[1:])):
        raise ValueError("times must be strictly increasing on the grid")
    if step_marks and step_marks[-1] > cfg.steps:
        raise ValueError("requested time beyond the horizon")
    tables = kernels.projection_tables(model.r_matrix)
    chol = np.linalg.cholesky(model.sigma)
    rng = make_rng(cfg.seed)
    drift = model.theta * cfg.h
    z = z0.z.copy()
    out: list[StateVec] = []
    done = 0
    for mark in step_marks:
        while done < mark:
            n = min(CHUNK_STEPS, mark - done)
            xi = rng.standard_normal((n, model.d))
            if noise_scale == 0.0:
                db = np.zeros_like(xi)
            else:
                db = (noise_scale * np.sqrt(cfg.h)) * (xi @ chol.T)
            status = kernels.run_hit_chunk(
                z, drift, db, tables.r, tables.scatter, tables.valid,
                kernels.NORM_L1, -1.0, 0,
            )
            if status == kernels.STATUS_INFEASIBLE:
                raise NumericError("reflection step infeasible", step=done)
            if status == kernels.STATUS_NONFINITE:
                raise NumericError("state became nonfinite", step=done)
            done += n
        out.append(StateVec(z.copy()))
    return out


def hitting_time(
    model: SrbmModel,
    z0: StateVec,
    kappa: float,
    delta: float,
    cfg: SimConfig,
    cap: float,
    norm: str = "foster",
) -> HittingSample:
    """First grid time >= delta at which the state norm drops to kappa.

    The sample is censored at ``cap`` (tau = cap, censored flag set).  The
    default norm is the 6-d Lyapunov norm; ``norm="l1"`` works in any
    dimension.  cfg.T is ignored; cap bounds the run.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if delta < 0 or cap < delta:
        raise ValueError("need delta >= 0 and cap >= delta")
    if norm == "foster":
        if model.d != 6:
            raise DimensionError("foster norm requires d = 6; use norm='l1'")
        norm_type = kernels.NORM_FOSTER
        norm_fn = foster_norm
    elif norm == "l1":
        norm_type = kernels.NORM_L1
        norm_fn = lambda z: float(np.abs(np.asarray(z.z if isinstance(z, StateVec) else z)).sum())
    else:
        raise ValueError(f"unknown norm {norm!r}")
    _require_completely_s(model.r_matrix)

    h = cfg.h
    min_idx = int(np.ceil(delta / h - 1e-12))  # first admissible time index
    if min_idx == 0 and norm_fn(z0) <= kappa:
        return HittingSample(tau=0.0, censored=False, steps=0, terminal_state=z0)

    cap_steps = int(round(cap / h))
    tables = kernels.projection_tables(model.r_matrix)
    chol = np.linalg.cholesky(model.sigma)
    rng = make_rng(cfg.seed)
    drift = model.theta * h
    z = z0.z.copy()
    done = 0
    # grow chunks geometrically so short excursions do not pay for a full
    # chunk of unused noise; the consumed noise stream is independent of the
    # chunk schedule, so results do not depend on CHUNK_STEPS
    chunk = 2048
    while done < cap_steps:
        n = min(chunk, cap_steps - done)
        chunk = min(chunk * 4, CHUNK_STEPS)
        db = (np.sqrt(h) * rng.standard_normal((n, model.d))) @ chol.T
        first_check = max(0, min_idx - 1 - done)
        status = kernels.run_hit_chunk(
            z, drift, db, tables.r, tables.scatter, tables.valid,
            norm_type, kappa, first_check,
        )
        if status == kernels.STATUS_INFEASIBLE:
            raise NumericError("reflection step infeasible", step=done)
        if status == kernels.STATUS_NONFINITE:
            raise NumericError("state became nonfinite", step=done)
        if status >= 0:
            hit_step = done + status + 1
            return HittingSample(
                tau=hit_step * h,
                censored=False,
                steps=hit_step,
                terminal_state=StateVec(z.copy()),
            )
        done += n
    return HittingSample(
        tau=cap_steps * h,
        censored=True,
        steps=cap_steps,
        terminal_state=StateVec(z.copy()),
    )
