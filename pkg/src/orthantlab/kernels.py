"""Compiled inner loops for path simulation.

The per-step reflection is the same support-enumeration projection as
``lcp.skorokhod_step``; here the inverse of every principal block of R is
precomputed once and scattered into a d x d matrix per support, so a step is
a handful of small matrix-vector products.  Supports are tried in the same
(size, lexicographic) order as the pure-Python implementation, so both routes
select the same branch.

Status codes returned by the kernels:
  >= 0  step index of the recorded event (hit kernels)
  -1    ran to the end of the chunk without an event
  -2    no feasible support (reflection matrix not completely-S)
  -3    nonfinite state encountered
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .lcp import support_masks

__all__ = ["ProjectionTables", "projection_tables", "run_path_store", "run_hit_chunk"]

FEAS_TOL = 1e-9

STATUS_OK = -1
STATUS_INFEASIBLE = -2
STATUS_NONFINITE = -3

NORM_FOSTER = 0
NORM_L1 = 1


class ProjectionTables:
    """Per-matrix precomputed data consumed by the kernels."""

    def __init__(self, r: np.ndarray):
        r = np.ascontiguousarray(r, dtype=np.float64)
        d = r.shape[0]
        masks = support_masks(d)
        n_masks = masks.shape[0]
        scatter = np.zeros((n_masks, d, d))
        valid = np.zeros(n_masks, dtype=np.bool_)
        for m, mask in enumerate(masks):
            idx = np.array([k for k in range(d) if mask >> k & 1], dtype=np.int64)
            if idx.size == 0:
                valid[m] = True
                continue
            block = r[np.ix_(idx, idx)]
            try:
                inv = np.linalg.inv(block)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(inv)):
                continue
            scatter[np.ix_([m], idx, idx)] = inv
            valid[m] = True
        self.r = r
        self.masks = masks
        self.scatter = scatter
        self.valid = valid


_TABLE_CACHE: dict[bytes, ProjectionTables] = {}


def projection_tables(r: np.ndarray) -> ProjectionTables:
    key = np.ascontiguousarray(r, dtype=np.float64).tobytes()
    tables = _TABLE_CACHE.get(key)
    if tables is None:
        tables = ProjectionTables(r)
        _TABLE_CACHE[key] = tables
    return tables


@njit(cache=True, nogil=True)
def _project(q, r, scatter, valid, dy, z):
    """Reflect q into the orthant; fills dy and z, returns the support mask
    index used, or -1 when no support is feasible."""
    d = q.shape[0]
    neg = False
    for k in range(d):
        if q[k] < 0.0:
            neg = True
            break
    if not neg:
        for k in range(d):
            dy[k] = 0.0
            z[k] = q[k]
        return 0
    n_masks = scatter.shape[0]
    for m in range(1, n_masks):
        if not valid[m]:
            continue
        g = scatter[m]
        feasible = True
        for i in range(d):
            s = 0.0
            for j in range(d):
                s -= g[i, j] * q[j]
            if s < -FEAS_TOL:
                feasible = False
                break
            dy[i] = s
        if not feasible:
            continue
        for i in range(d):
            s = q[i]
            for j in range(d):
                s += r[i, j] * dy[j]
            if s < -FEAS_TOL:
                feasible = False
                break
            z[i] = s
        if not feasible:
            continue
        for i in range(d):
            if dy[i] < 0.0:
                dy[i] = 0.0
            if z[i] < 0.0 or (dy[i] > 0.0 and z[i] < FEAS_TOL):
                z[i] = 0.0
        return m
    return -1


@njit(cache=True, nogil=True)
def run_path_store(z0, drift, db, r, scatter, valid, z_path, y_path):
    """Run the full grid, storing states and cumulative pushes per step.

    db holds the already-scaled noise increments, one row per step.  Returns
    a status code (-1 on success).
    """
    steps = db.shape[0]
    d = z0.shape[0]
    q = np.empty(d)
    dy = np.empty(d)
    z = np.empty(d)
    y = np.zeros(d)
    for k in range(d):
        z[k] = z0[k]
        z_path[0, k] = z0[k]
        y_path[0, k] = 0.0
    for i in range(steps):
        for k in range(d):
            q[k] = z[k] + drift[k] + db[i, k]
            if not np.isfinite(q[k]):
                return STATUS_NONFINITE
        m = _project(q, r, scatter, valid, dy, z)
        if m < 0:
            return STATUS_INFEASIBLE
        for k in range(d):
            y[k] += dy[k]
            z_path[i + 1, k] = z[k]
            y_path[i + 1, k] = y[k]
    return STATUS_OK


@njit(cache=True, nogil=True)
def run_hit_chunk(z, drift, db, r, scatter, valid, norm_type, kappa, first_check):
    """Advance the state through one chunk of noise, watching for entry into
    the target set {norm(z) <= kappa}.

    ``first_check`` is the chunk-local step index (0-based, referring to the
    state *after* that step) at which checking starts; earlier steps are
    advanced without checking (used to honor the minimum time delta).  The
    state array z is updated in place.  Returns the chunk-local step index of
    the hit, or a negative status code.
    """
    steps = db.shape[0]
    d = z.shape[0]
    q = np.empty(d)
    dy = np.empty(d)
    znew = np.empty(d)
    for i in range(steps):
        for k in range(d):
            q[k] = z[k] + drift[k] + db[i, k]
            if not np.isfinite(q[k]):
                return STATUS_NONFINITE
        m = _project(q, r, scatter, valid, dy, znew)
        if m < 0:
            return STATUS_INFEASIBLE
        for k in range(d):
            z[k] = znew[k]
        if i >= first_check:
            if norm_type == NORM_FOSTER:
                nrm = z[0] + z[5]
                for k in range(1, 5):
                    nrm += z[k] * z[k]
            else:
                nrm = 0.0
                for k in range(d):
                    nrm += abs(z[k])
            if nrm <= kappa:
                return i
    return STATUS_OK
