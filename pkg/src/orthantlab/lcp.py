"""Linear complementarity machinery.

``solve_all`` enumerates every support set to find all solutions of

    u, v >= 0,   v = theta + R u,   u . v = 0,

which characterize the linear (affine-in-time) fluid paths of the model; each
solution is labelled stable/divergent and degenerate/nondegenerate.

``skorokhod_step`` is the one-step discrete projection used by both the fluid
and the stochastic integrators: given a free step q it finds pushes dy >= 0
with z = q + R dy >= 0 and dy . z = 0, breaking ties by the minimal support in
(size, lexicographic) order.

Support enumeration is exact and exhaustive; dimensions here are tiny (d <= 6
in every use of interest, hard cap 20) and enumeration, unlike pivoting, finds
every solution.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .matclass import CapabilityError

__all__ = [
    "LcpSolution",
    "LcpInfeasible",
    "solve_all",
    "classify",
    "skorokhod_step",
    "support_masks",
]

FEAS_TOL = 1e-9
COMP_TOL = 1e-12
DEDUP_TOL = 1e-8
MAX_D = 20


class LcpInfeasible(RuntimeError):
    """No support set yields a feasible projection (matrix not completely-S)."""

    def __init__(self, q):
        super().__init__(f"no feasible reflection step for q={q}")
        self.q = np.asarray(q)


@dataclass(frozen=True)
class LcpSolution:
    """One solution (u, v) with its support sets and classification."""

    u: np.ndarray
    v: np.ndarray
    support_u: tuple[int, ...]
    support_v: tuple[int, ...]
    stability: str  # "stable" | "divergent"
    degeneracy: str  # "degenerate" | "nondegenerate"

    def to_dict(self) -> dict:
        return {
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "support_u": list(self.support_u),
            "support_v": list(self.support_v),
            "stability": self.stability,
            "degeneracy": self.degeneracy,
        }


def classify(u, v, d: int) -> tuple[str, str]:
    """Label a solution: stable iff v vanishes; nondegenerate iff u and v
    together have exactly d positive components."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    stability = "stable" if v.max(initial=0.0) <= FEAS_TOL else "divergent"
    positives = int(np.sum(u > FEAS_TOL) + np.sum(v > FEAS_TOL))
    degeneracy = "nondegenerate" if positives == d else "degenerate"
    return stability, degeneracy


def _ordered_supports(d: int):
    """All subsets of range(d) (including empty), by size then lexicographic."""
    yield ()
    for size in range(1, d + 1):
        yield from itertools.combinations(range(d), size)


def _solve_support(theta, r, support):
    """Candidate (u, v) with u supported on the given index set, or None if
    the principal block is singular."""
    d = theta.shape[0]
    u = np.zeros(d)
    if support:
        idx = np.array(support)
        block = r[np.ix_(idx, idx)]
        try:
            u_sub = np.linalg.solve(block, -theta[idx])
        except np.linalg.LinAlgError:
            return None
        u[idx] = u_sub
    with np.errstate(invalid="ignore", over="ignore"):
        v = theta + r @ u
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        return None  # numerically singular block; treat like an exact singular
    return u, v


def solve_all(theta, r) -> tuple[list[LcpSolution], list[tuple[int, ...]]]:
    """Enumerate all solutions over all 2^d supports.

    Returns (solutions, skipped_supports); a support is skipped when its
    principal block is singular.  Solutions equal to within DEDUP_TOL in sup
    norm are merged; the list is ordered by support (size, then lexicographic).
    """
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    d = theta.shape[0]
    if d > MAX_D:
        raise CapabilityError(f"d={d} exceeds the enumeration cap of {MAX_D}")
    solutions: list[LcpSolution] = []
    skipped: list[tuple[int, ...]] = []
    for support in _ordered_supports(d):
        cand = _solve_support(theta, r, support)
        if cand is None:
            skipped.append(support)
            continue
        u, v = cand
        if u.min(initial=0.0) < -FEAS_TOL or v.min(initial=0.0) < -FEAS_TOL:
            continue
        if support and np.abs(v[np.array(support)]).max() > FEAS_TOL:
            continue
        # snap solver noise to exact zeros so invariants hold strictly
        u[np.abs(u) <= FEAS_TOL] = 0.0
        v[np.abs(v) <= FEAS_TOL] = 0.0
        if any(
            max(np.abs(u - s.u).max(), np.abs(v - s.v).max()) <= DEDUP_TOL
            for s in solutions
        ):
            continue
        stability, degeneracy = classify(u, v, d)
        solutions.append(
            LcpSolution(
                u=u,
                v=v,
                support_u=tuple(int(i) for i in np.flatnonzero(u > FEAS_TOL)),
                support_v=tuple(int(i) for i in np.flatnonzero(v > FEAS_TOL)),
                stability=stability,
                degeneracy=degeneracy,
            )
        )
    return solutions, skipped


def support_masks(d: int) -> np.ndarray:
    """Bitmask of every subset of range(d) in (size, lexicographic) order.

    Bit k set means index k is in the support.  This ordering defines the
    deterministic tie-break used by ``skorokhod_step`` and by the compiled
    simulation kernels.
    """
    masks = []
    for support in _ordered_supports(d):
        m = 0
        for k in support:
            m |= 1 << k
        masks.append(m)
    return np.array(masks, dtype=np.int64)


def skorokhod_step(q, r) -> tuple[np.ndarray, np.ndarray]:
    """One-step discrete reflection: minimal pushes keeping the state in the
    orthant.

    Returns (dy, z_new) with dy >= 0, z_new = q + R dy >= 0 and
    dy . z_new = 0.  Among feasible supports the minimal one in (size,
    lexicographic) order is selected, so the result is deterministic.
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    d = q.shape[0]
    if q.min(initial=0.0) >= 0:
        return np.zeros(d), q.copy()
    for support in _ordered_supports(d):
        if not support:
            continue
        idx = np.array(support)
        block = r[np.ix_(idx, idx)]
        try:
            dy_sub = np.linalg.solve(block, -q[idx])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(dy_sub)) or dy_sub.min() < -FEAS_TOL:
            continue
        dy = np.zeros(d)
        dy[idx] = dy_sub
        z_new = q + r @ dy
        if not np.all(np.isfinite(z_new)) or z_new.min() < -FEAS_TOL:
            continue
        np.maximum(dy, 0.0, out=dy)
        z_new[idx] = 0.0
        np.maximum(z_new, 0.0, out=z_new)
        return dy, z_new
    raise LcpInfeasible(q)
