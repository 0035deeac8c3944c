"""Core data types: reflected-diffusion model data, the 6-d example family,
discretized trajectories, and the Lyapunov-style norm used for recurrence tests.

A model is the triple (theta, Sigma, R): drift per unit time, covariance per
unit time, and the matrix of boundary push directions (column k acts on the
face z_k = 0).  The 6-d example family is generated from four small positive
parameters (delta1..delta4) subject to the inequalities enforced by
``validate_deltas``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConstraintViolation",
    "DimensionError",
    "ExampleDeltas",
    "SrbmModel",
    "StateVec",
    "PathGrid",
    "DeltaReport",
    "validate_deltas",
    "build_example_r",
    "example_model",
    "foster_norm",
    "model_from_dict",
    "model_to_dict",
]

SPD_TOL = 1e-10
EQ_SLACK = 1e-14


class ConstraintViolation(ValueError):
    """A model parameter violates one of its defining inequalities."""


class DimensionError(ValueError):
    """Operation requires a specific dimension that the input does not have."""


@dataclass(frozen=True)
class ExampleDeltas:
    """The four parameters generating the 6-d example reflection matrix."""

    delta1: float
    delta2: float
    delta3: float
    delta4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.delta1, self.delta2, self.delta3, self.delta4)


@dataclass(frozen=True)
class DeltaReport:
    """Outcome of checking the delta inequalities, with evaluated margins.

    Each entry of ``checks`` is (label, margin, ok); a check passes when its
    margin is nonnegative up to rounding (EQ_SLACK).  The slack exists because
    the canonical instance meets the budget inequality with equality in exact
    arithmetic, but the two sides differ by one ulp as doubles.
    """

    checks: tuple[tuple[str, float, bool], ...]

    @property
    def ok(self) -> bool:
        return all(c[2] for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c[0] for c in self.checks if not c[2]]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"label": label, "margin": margin, "ok": ok}
                for (label, margin, ok) in self.checks
            ],
        }


def validate_deltas(deltas: ExampleDeltas) -> DeltaReport:
    """Check the defining inequalities of the example parameters.

    The constraints are: all four strictly positive, the budget inequality
    delta2 + delta3 <= delta4/6, the ordering delta1 <= delta3 <= 0.1, and
    delta4 < 1.
    """
    d1, d2, d3, d4 = deltas.as_tuple()
    budget_margin = d4 / 6 - (d2 + d3)
    checks = [
        ("delta1 > 0", d1, d1 > 0),
        ("delta2 > 0", d2, d2 > 0),
        ("delta3 > 0", d3, d3 > 0),
        ("delta4 > 0", d4, d4 > 0),
        ("delta2 + delta3 <= delta4/6", budget_margin, budget_margin >= -EQ_SLACK),
        ("delta1 <= delta3", d3 - d1, d1 <= d3),
        ("delta3 <= 0.1", 0.1 - d3, d3 <= 0.1),
        ("delta4 < 1", 1 - d4, d4 < 1),
    ]
    return DeltaReport(tuple(checks))


def build_example_r(deltas: ExampleDeltas, *, validate: bool = True) -> np.ndarray:
    """Assemble the 6x6 example reflection matrix R = J1 + J2.

    J1 is the all-ones matrix.  J2 couples coordinate 1 to coordinates 2..5
    with +delta2, coordinate 6 back to coordinate 1 with +delta1, coordinate 6
    to coordinate 1 with -delta4, and all remaining off-diagonal pairs among
    coordinates 2..6 with -delta3.  The diagonal of R is all ones and, for
    valid deltas, every entry is strictly positive.

    ``validate=False`` skips the inequality check (used for limiting-case
    tests only).
    """
    if validate:
        report = validate_deltas(deltas)
        if not report.ok:
            raise ConstraintViolation(
                "invalid example deltas: " + "; ".join(report.failures)
            )
    d1, d2, d3, d4 = deltas.as_tuple()
    j2 = np.zeros((6, 6))
    j2[0, 1:5] = d2
    j2[0, 5] = -d4
    for i in range(1, 6):
        for j in range(1, 6):
            if i != j:
                j2[i, j] = -d3
    j2[5, 0] = d1
    return np.ones((6, 6)) + j2


CANONICAL_DELTAS = ExampleDeltas(0.05, 0.05, 0.05, 0.6)


@dataclass(frozen=True)
class SrbmModel:
    """Model data (theta, Sigma, R) for a reflected diffusion on the orthant.

    Sigma must be symmetric positive definite.  The reflection matrix is not
    validated here; simulation entry points require it to pass the
    completely-S test first.
    """

    theta: np.ndarray
    sigma: np.ndarray
    r_matrix: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        r = np.asarray(self.r_matrix, dtype=float)
        d = theta.shape[0]
        if theta.ndim != 1 or sigma.shape != (d, d) or r.shape != (d, d):
            raise DimensionError(
                f"inconsistent shapes: theta {theta.shape}, sigma {sigma.shape}, "
                f"R {r.shape}"
            )
        if not np.all(np.isfinite(theta)) or not np.all(np.isfinite(sigma)) \
                or not np.all(np.isfinite(r)):
            raise ValueError("model data must be finite")
        if not np.allclose(sigma, sigma.T, atol=SPD_TOL):
            raise ConstraintViolation("sigma is not symmetric")
        eigvals = np.linalg.eigvalsh(sigma)
        if eigvals.min() <= SPD_TOL:
            raise ConstraintViolation(
                f"sigma is not positive definite (min eigenvalue {eigvals.min():g})"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "r_matrix", r)
        theta.setflags(write=False)
        sigma.setflags(write=False)
        r.setflags(write=False)

    @property
    def d(self) -> int:
        return self.theta.shape[0]


def example_model(deltas: ExampleDeltas = CANONICAL_DELTAS) -> SrbmModel:
    """The 6-d example: theta = -1, Sigma = I, R generated from the deltas."""
    r = build_example_r(deltas)
    return SrbmModel(theta=-np.ones(6), sigma=np.eye(6), r_matrix=r)


@dataclass(frozen=True)
class StateVec:
    """A point of the nonnegative orthant."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 1:
            raise DimensionError("state must be a vector")
        if not np.all(np.isfinite(z)):
            raise ValueError("state must be finite")
        if np.any(z < 0):
            raise ConstraintViolation("state has a negative component")
        object.__setattr__(self, "z", z)
        z.setflags(write=False)

    @property
    def d(self) -> int:
        return self.z.shape[0]


def foster_norm(z) -> float:
    """Lyapunov-style norm for the 6-d example: z1 + z2^2 + ... + z5^2 + z6."""
    if isinstance(z, StateVec):
        z = z.z
    z = np.asarray(z, dtype=float)
    if z.shape != (6,):
        raise DimensionError(f"foster_norm requires dimension 6, got shape {z.shape}")
    return float(z[0] + np.sum(z[1:5] ** 2) + z[5])


@dataclass(frozen=True)
class PathGrid:
    """A discretized trajectory: states, cumulative pushes, and driving noise.

    Rows i of z_path / y_path / b_path correspond to times t_i = i*h.  The
    defining relation z(t) = z(0) + B(t) + theta*t + R*y(t) must hold on every
    row; ``check_invariants`` verifies this together with monotonicity of the
    pushes and nonnegativity of the states.
    """

    h: float
    times: np.ndarray
    z_path: np.ndarray
    y_path: np.ndarray
    b_path: np.ndarray

    @property
    def d(self) -> int:
        return self.z_path.shape[1]

    @property
    def steps(self) -> int:
        return self.z_path.shape[0] - 1

    def check_invariants(self, theta, r_matrix, tol: float = 1e-9) -> list[str]:
        """Return a list of invariant violations (empty when the grid is valid)."""
        theta = np.asarray(theta, dtype=float)
        r = np.asarray(r_matrix, dtype=float)
        problems = []
        if np.any(np.abs(self.y_path[0]) > 0) or np.any(np.abs(self.b_path[0]) > 0):
            problems.append("row 0 of y_path/b_path is not zero")
        dy = np.diff(self.y_path, axis=0)
        if dy.size and dy.min() < -tol:
            problems.append(f"y_path decreases (min increment {dy.min():g})")
        if self.z_path.min() < -tol:
            problems.append(f"z_path below orthant (min {self.z_path.min():g})")
        recon = (
            self.z_path[0][None, :]
            + self.b_path
            + np.outer(self.times, theta)
            + self.y_path @ r.T
        )
        err = np.abs(self.z_path - recon).max()
        if err > tol:
            problems.append(f"reconstruction identity off by {err:g}")
        return problems


def model_from_dict(doc: dict) -> SrbmModel:
    """Build a model from its JSON form.

    Accepts either the explicit form {"d", "theta", "sigma", "R"} or the
    shorthand {"example_deltas": [d1, d2, d3, d4]}, which expands to the 6-d
    example with theta = -1 and Sigma = I.
    """
    if "example_deltas" in doc:
        extra = set(doc) - {"example_deltas"}
        if extra:
            raise ConstraintViolation(
                f"unexpected keys alongside example_deltas: {sorted(extra)}"
            )
        vals = doc["example_deltas"]
        if len(vals) != 4:
            raise ConstraintViolation("example_deltas must have four entries")
        return example_model(ExampleDeltas(*[float(v) for v in vals]))
    missing = {"d", "theta", "sigma", "R"} - set(doc)
    if missing:
        raise ConstraintViolation(f"model JSON missing keys: {sorted(missing)}")
    extra = set(doc) - {"d", "theta", "sigma", "R"}
    if extra:
        raise ConstraintViolation(f"unknown model keys: {sorted(extra)}")
    d = int(doc["d"])
    model = SrbmModel(
        theta=np.asarray(doc["theta"], dtype=float),
        sigma=np.asarray(doc["sigma"], dtype=float),
        r_matrix=np.asarray(doc["R"], dtype=float),
    )
    if model.d != d:
        raise DimensionError(f"declared d={d} but theta has length {model.d}")
    return model


def match_example(model: SrbmModel) -> ExampleDeltas | None:
    """Recognize the 6-d example family; returns its deltas or None.

    Used to decide whether the example-specific pathwise inequalities apply
    to a simulated trajectory.
    """
    if model.d != 6 or not np.allclose(model.theta, -1.0, atol=1e-12):
        return None
    r = model.r_matrix
    deltas = ExampleDeltas(
        delta1=float(r[5, 0] - 1.0),
        delta2=float(r[0, 1] - 1.0),
        delta3=float(1.0 - r[1, 2]),
        delta4=float(1.0 - r[0, 5]),
    )
    if not validate_deltas(deltas).ok:
        return None
    if not np.allclose(r, build_example_r(deltas), atol=1e-12):
        return None
    return deltas


def model_to_dict(model: SrbmModel) -> dict:
    return {
        "d": model.d,
        "theta": model.theta.tolist(),
        "sigma": model.sigma.tolist(),
        "R": model.r_matrix.tolist(),
    }
