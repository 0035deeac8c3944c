"""Deterministic fluid-path machinery.

A fluid path is the noiseless analog of the reflected diffusion:
z(t) = z(0) + theta*t + R*y(t) with y nondecreasing, increasing only on the
boundary, and z staying in the orthant.  This module verifies candidate
affine paths (y(t) = u*t, z(t) = z0 + v*t) against those conditions,
integrates fluid trajectories with the discrete reflection step, and issues
attraction/divergence verdicts over a finite horizon.

Fluid paths from a boundary start need not be unique; the integrator resolves
the choice by the minimal-support tie-break of ``skorokhod_step`` and reports
the branch it realized rather than claiming canonicity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lcp import skorokhod_step
from .model import PathGrid

__all__ = [
    "AffinePath",
    "FluidVerdict",
    "verify_affine_path",
    "integrate",
    "attraction_verdict",
]

RESIDUAL_TOL = 1e-9
ACTIVE_TOL = 1e-12
DEFAULT_GROWTH_THRESHOLD = 1.5


@dataclass(frozen=True)
class AffinePath:
    """y(t) = u*t, z(t) = z0 + v*t."""

    z0: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def z_at(self, t: float) -> np.ndarray:
        return self.z0 + self.v * t


@dataclass(frozen=True)
class FluidVerdict:
    verdict: str  # "attracted" | "divergent" | "inconclusive"
    final_norm: float
    horizon: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "final_norm": self.final_norm,
            "horizon": self.horizon,
        }


def verify_affine_path(path: AffinePath, theta, r) -> tuple[bool, list[str]]:
    """Check an affine candidate against the fluid-path conditions.

    Required: u >= 0 and z0 >= 0; the rate identity v = theta + R u to
    RESIDUAL_TOL; z(t) >= 0 for all t >= 0 (for an affine path this forces
    v >= 0 componentwise); and complementarity: a coordinate with u_k > 0 must
    have z_k identically 0, i.e. z0_k = 0 and v_k = 0.
    """
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    violations = []
    if path.u.min(initial=0.0) < -ACTIVE_TOL:
        violations.append("u has a negative component")
    if path.z0.min(initial=0.0) < -ACTIVE_TOL:
        violations.append("z0 outside the orthant")
    residual = path.v - (theta + r @ path.u)
    if np.abs(residual).max() > RESIDUAL_TOL:
        violations.append(
            f"rate identity violated: |v - (theta + R u)| = {np.abs(residual).max():g}"
        )
    if path.v.min(initial=0.0) < -ACTIVE_TOL:
        bad = int(np.argmin(path.v))
        violations.append(
            f"z_{bad} eventually leaves the orthant (v_{bad} = {path.v[bad]:g})"
        )
    for k in np.flatnonzero(path.u > ACTIVE_TOL):
        if path.z0[k] > ACTIVE_TOL or path.v[k] > ACTIVE_TOL:
            violations.append(
                f"u_{k} > 0 but z_{k} is not identically zero"
            )
    return not violations, violations


def integrate(z0, theta, r, h: float, horizon: float) -> PathGrid:
    """Integrate the fluid dynamics by repeated discrete reflection steps.

    Each step projects q = z + theta*h back into the orthant; the driving
    noise is identically zero.
    """
    z0 = np.asarray(z0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    if h <= 0 or horizon < h:
        raise ValueError("need h > 0 and horizon >= h")
    d = z0.shape[0]
    steps = int(round(horizon / h))
    z_path = np.zeros((steps + 1, d))
    y_path = np.zeros((steps + 1, d))
    z_path[0] = z0
    drift = theta * h
    z = z0.copy()
    y = np.zeros(d)
    for i in range(steps):
        dy, z = skorokhod_step(z + drift, r)
        y += dy
        z_path[i + 1] = z
        y_path[i + 1] = y
    times = np.arange(steps + 1) * h
    return PathGrid(
        h=h,
        times=times,
        z_path=z_path,
        y_path=y_path,
        b_path=np.zeros((steps + 1, d)),
    )


def attraction_verdict(
    grid: PathGrid,
    eps_origin: float | None = None,
    growth_threshold: float = DEFAULT_GROWTH_THRESHOLD,
) -> FluidVerdict:
    """Finite-horizon attraction/divergence verdict from an integrated grid.

    Attracted when the terminal l1 norm falls below eps_origin (default
    1e-6 * (1 + |z(0)|_1)); divergent when the terminal norm exceeds
    growth_threshold times the mid-horizon norm and also the initial scale.
    A limit statement cannot be decided at finite horizon, so everything else
    is inconclusive.
    """
    norms = np.abs(grid.z_path).sum(axis=1)
    initial = norms[0]
    final = norms[-1]
    mid = norms[len(norms) // 2]
    horizon = float(grid.times[-1])
    if eps_origin is None:
        eps_origin = 1e-6 * (1.0 + initial)
    if final < eps_origin:
        return FluidVerdict("attracted", float(final), horizon)
    quarter = norms[(3 * (len(norms) - 1)) // 4]
    if final > growth_threshold * mid and final > initial + eps_origin and final > quarter:
        return FluidVerdict("divergent", float(final), horizon)
    return FluidVerdict("inconclusive", float(final), horizon)
