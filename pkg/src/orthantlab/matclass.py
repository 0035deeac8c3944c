"""Reflection-matrix classification.

S-matrix / completely-S tests decide whether a reflected diffusion with the
given push directions exists at all; P- and M-matrix tests place the matrix in
the classical taxonomy; the necessary-condition check (R nonsingular with
R^{-1} theta < 0) is required for positive recurrence in every dimension.

Subset enumeration is exhaustive (2^n - 1 principal submatrices), so n is
capped at 20.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "CapabilityError",
    "MatrixClassReport",
    "is_s_matrix",
    "is_completely_s",
    "is_p_matrix",
    "is_m_matrix",
    "check_necessary_condition",
    "classify_matrix",
]

MAX_N = 20
S_TOL = 1e-9
MINOR_TOL = 1e-12


class CapabilityError(ValueError):
    """Matrix too large for exhaustive principal-subset enumeration."""


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def _check_size(n: int):
    if n > MAX_N:
        raise CapabilityError(f"n={n} exceeds the enumeration cap of {MAX_N}")


def _subsets(n: int):
    """Nonempty index subsets of range(n), by size then lexicographically."""
    for size in range(1, n + 1):
        yield from itertools.combinations(range(n), size)


def is_s_matrix(a) -> tuple[bool, np.ndarray | None]:
    """Decide whether some w >= 0 gives A w > 0; return (verdict, witness).

    Solved as the LP  max t  s.t.  A w >= t*1, sum(w) = 1, w >= 0.  The
    matrix is an S-matrix iff the optimum t* is strictly positive.
    """
    a = _as_square(a)
    n = a.shape[0]
    # variables (w_1..w_n, t); minimize -t
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-a, np.ones((n, 1))])
    b_ub = np.zeros(n)
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    if not res.success:
        return False, None
    t_star = -res.fun
    if t_star > S_TOL:
        return True, res.x[:n].copy()
    return False, None


def is_completely_s(a) -> tuple[bool, tuple[int, ...] | None]:
    """True iff every nonempty principal submatrix is an S-matrix.

    Returns the first failing index subset (by size, then lexicographically)
    as witness of failure, or None on success.  Matrices with all entries
    strictly positive short-circuit to True (w = 1/n works for every subset).
    """
    a = _as_square(a)
    n = a.shape[0]
    _check_size(n)
    if np.all(a > 0):
        return True, None
    for subset in _subsets(n):
        idx = np.array(subset)
        ok, _ = is_s_matrix(a[np.ix_(idx, idx)])
        if not ok:
            return False, subset
    return True, None


def is_p_matrix(a) -> tuple[bool, tuple[int, ...] | None]:
    """True iff all principal minors are strictly positive.

    The positivity threshold is MINOR_TOL relative to the submatrix's largest
    absolute entry (scale-free).  Returns the first failing subset, or None.
    """
    a = _as_square(a)
    n = a.shape[0]
    _check_size(n)
    for subset in _subsets(n):
        idx = np.array(subset)
        sub = a[np.ix_(idx, idx)]
        scale = max(np.abs(sub).max(), 1.0) ** len(subset)
        if np.linalg.det(sub) <= MINOR_TOL * scale:
            return False, subset
    return True, None


def is_m_matrix(a) -> bool:
    """Z-matrix (nonpositive off-diagonal entries) that is also a P-matrix."""
    a = _as_square(a)
    off = a - np.diag(np.diag(a))
    if np.any(off > 0):
        return False
    ok, _ = is_p_matrix(a)
    return ok


def check_necessary_condition(theta, a) -> tuple[bool, bool]:
    """Check that A is nonsingular with A^{-1} theta < 0 componentwise.

    Returns (holds, singular).  A singular matrix yields (False, True) rather
    than an exception.
    """
    a = _as_square(a)
    theta = np.asarray(theta, dtype=float)
    n = a.shape[0]
    if theta.shape != (n,):
        raise ValueError("theta length must match the matrix")
    scale = max(np.abs(a).max(), 1.0)
    if abs(np.linalg.det(a / scale)) <= MINOR_TOL:
        return False, True
    x = np.linalg.solve(a, theta)
    return bool(np.all(x < -MINOR_TOL)), False


@dataclass(frozen=True)
class MatrixClassReport:
    """Combined classification verdicts for one matrix."""

    is_s: bool
    is_completely_s: bool
    is_p: bool
    is_m: bool
    failing_subset: tuple[int, ...] | None
    necessary_condition_holds: bool | None
    singular: bool | None

    def to_dict(self) -> dict:
        return {
            "is_s": self.is_s,
            "is_completely_s": self.is_completely_s,
            "is_p": self.is_p,
            "is_m": self.is_m,
            "failing_subset": list(self.failing_subset)
            if self.failing_subset is not None
            else None,
            "necessary_condition_holds": self.necessary_condition_holds,
            "singular": self.singular,
        }


def classify_matrix(a, theta=None) -> MatrixClassReport:
    """Run all classification tests; include the necessary condition if theta
    is supplied."""
    a = _as_square(a)
    s_ok, _ = is_s_matrix(a)
    cs_ok, failing = is_completely_s(a)
    p_ok, p_failing = is_p_matrix(a)
    m_ok = is_m_matrix(a)
    necessary = None
    singular = None
    if theta is not None:
        necessary, singular = check_necessary_condition(theta, a)
    return MatrixClassReport(
        is_s=s_ok,
        is_completely_s=cs_ok,
        is_p=p_ok,
        is_m=m_ok,
        failing_subset=failing if failing is not None else p_failing,
        necessary_condition_holds=necessary,
        singular=singular,
    )
