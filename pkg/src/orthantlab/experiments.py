"""Monte Carlo experiment suites.

Three experiments probe the qualitative behavior of the 6-d example:

* ``contraction_experiment`` starts the process at states of Lyapunov norm M
  and checks that the expected norm after a deterministic time c*M has
  contracted by at least a factor gamma.  The deterministic horizon is a
  desk-scale proxy for the stopping times of the drift criterion, which are a
  proof construction and not observable; the output metadata says so.

* ``return_time_experiment`` estimates the mean first-entry time into
  {norm <= kappa} from states of norm M and checks that it grows at most
  linearly in M, by comparing least-squares slopes fitted on the scale grid
  and on its halved copy.

* ``fluid_vs_diffusion`` contrasts the divergent affine fluid branch
  (z6 growing linearly forever) with the Monte Carlo mean of Z6, which stays
  bounded because the process is positive recurrent.

Start states span four canonical directions (mass on coordinate 1, mass on
coordinate 6, equal spread over coordinates 2..5, and a mix), chosen to expose
the coordinate asymmetry of the reflection matrix.  All replicas derive their
seeds from (master seed, cell index, replica index), so results are exactly
reproducible and aggregation is order-independent.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fluid import AffinePath, verify_affine_path
from .model import SrbmModel, StateVec, foster_norm, match_example
from .sde import SimConfig, HittingSample, hitting_time, states_at
from .seeds import replica_seed

__all__ = [
    "ExperimentResult",
    "contraction_experiment",
    "return_time_experiment",
    "fluid_vs_diffusion",
    "start_states",
]

DEFAULT_KAPPA = 12.0
DEFAULT_DELTA = 0.1
DEFAULT_GAMMA = 0.1
DEFAULT_C = 2.0
MAX_CENSORED_FRACTION = 0.1
SLOPE_RATIO_BOUNDS = (0.5, 2.0)


@dataclass(frozen=True)
class ExperimentResult:
    name: str
    parameters: dict
    rows: list[dict]
    verdict: str  # "pass" | "fail" | "inconclusive"
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "parameters": self.parameters,
            "rows": self.rows,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def start_states(model: SrbmModel, m_scale: float) -> list[tuple[str, StateVec]]:
    """Canonical start states of norm m_scale.

    For the 6-d example the norm is the Lyapunov norm and the family has four
    members; other models get a single state with all mass on coordinate 1
    (l1 norm).
    """
    if model.d == 6:
        e1 = np.zeros(6)
        e1[0] = m_scale
        e6 = np.zeros(6)
        e6[5] = m_scale
        spread = np.zeros(6)
        spread[1:5] = np.sqrt(m_scale / 4.0)
        mixed = np.zeros(6)
        mixed[0] = m_scale / 4.0
        mixed[1:5] = np.sqrt(m_scale / 8.0)
        mixed[5] = m_scale / 4.0
        return [
            ("e1", StateVec(e1)),
            ("e6", StateVec(e6)),
            ("spread", StateVec(spread)),
            ("mixed", StateVec(mixed)),
        ]
    z = np.zeros(model.d)
    z[0] = m_scale
    return [("e1", StateVec(z))]


def _norm_of(model: SrbmModel, norm: str):
    if norm == "foster":
        return foster_norm
    return lambda z: float(np.abs(z.z if isinstance(z, StateVec) else z).sum())


def _workers() -> int:
    env = os.environ.get("ORTHANT_LAB_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _map_indexed(fn, n: int) -> list:
    """Run fn(i) for i in range(n); results in index order regardless of the
    worker count."""
    workers = _workers()
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def _cell_seed(master_seed: int, cell_index: int) -> int:
    return replica_seed(master_seed, cell_index)


def contraction_experiment(
    model: SrbmModel,
    scales: list[float],
    c: float,
    reps: int,
    h: float,
    master_seed: int,
    gamma: float = DEFAULT_GAMMA,
    kappa: float = DEFAULT_KAPPA,
    norm: str = "foster",
) -> ExperimentResult:
    """Estimate E[norm(Z(c*M))] from start states of norm M.

    Pass iff, for every start state at the two largest scales, the estimate
    is below (1 - gamma) * M with three-standard-error confidence.
    """
    scales = sorted(scales)
    if any(m < kappa for m in scales):
        raise ValueError("scales must be at least kappa")
    norm_fn = _norm_of(model, norm)
    rows: list[dict] = []
    cell = 0
    for m_scale in scales:
        horizon = c * m_scale
        for label, z0 in start_states(model, m_scale):
            seed0 = _cell_seed(master_seed, cell)
            cell += 1

            def one(i: int) -> float:
                cfg = SimConfig(h=h, T=horizon, seed=replica_seed(seed0, i))
                (zT,) = states_at(model, z0, cfg, [horizon])
                return norm_fn(zT)

            values = np.array(_map_indexed(one, reps))
            rows.append(
                {
                    "scale": m_scale,
                    "state": label,
                    "estimate": float(values.mean()),
                    "std_error": float(values.std(ddof=1) / np.sqrt(reps)),
                    "n_samples": reps,
                    "censored_fraction": 0.0,
                }
            )
    top_two = set(scales[-2:])
    ok = all(
        row["estimate"] + 3.0 * row["std_error"] <= (1.0 - gamma) * row["scale"]
        for row in rows
        if row["scale"] in top_two
    )
    return ExperimentResult(
        name="contraction",
        parameters={
            "scales": scales,
            "c": c,
            "reps": reps,
            "h": h,
            "seed": master_seed,
            "gamma": gamma,
            "kappa": kappa,
            "norm": norm,
            "proxy": "deterministic horizon c*M in place of the drift-criterion stopping time",
        },
        rows=rows,
        verdict="pass" if ok else "fail",
    )


def _mean_tau_cell(
    model: SrbmModel,
    z0: StateVec,
    kappa: float,
    delta: float,
    reps: int,
    h: float,
    cap: float,
    seed0: int,
    norm: str,
) -> tuple[float, float, float]:
    """(mean tau, std error, censored fraction) for one (state, scale) cell.
    Censored samples enter the mean at the cap, i.e. as lower bounds."""

    def one(i: int) -> HittingSample:
        cfg = SimConfig(h=h, T=max(h, delta + h), seed=replica_seed(seed0, i))
        return hitting_time(model, z0, kappa, delta, cfg, cap, norm=norm)

    samples = _map_indexed(one, reps)
    taus = np.array([s.tau for s in samples])
    censored = np.mean([s.censored for s in samples])
    return (
        float(taus.mean()),
        float(taus.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0,
        float(censored),
    )


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def return_time_experiment(
    model: SrbmModel,
    scales: list[float],
    kappa: float,
    delta: float,
    reps: int,
    h: float,
    master_seed: int,
    cap: float,
    norm: str = "foster",
) -> ExperimentResult:
    """Estimate mean first-entry times into {norm <= kappa} and check that
    they grow at most linearly in the start scale.

    The linearity check fits a least-squares slope of mean tau versus M on
    the given scale grid and on its halved copy; pass iff the ratio of the
    two slopes lies in [0.5, 2].  Censored fraction above 10% anywhere makes
    the verdict inconclusive.
    """
    scales = sorted(scales)
    half_scales = [m / 2.0 for m in scales]
    all_scales = sorted(set(scales) | set(half_scales))
    rows: list[dict] = []
    per_scale_mean: dict[float, float] = {}
    cell = 0
    worst_censored = 0.0
    for m_scale in all_scales:
        cell_means = []
        for label, z0 in start_states(model, m_scale):
            seed0 = _cell_seed(master_seed, cell)
            cell += 1
            mean_tau, se, frac = _mean_tau_cell(
                model, z0, kappa, delta, reps, h, cap, seed0, norm
            )
            worst_censored = max(worst_censored, frac)
            cell_means.append(mean_tau)
            rows.append(
                {
                    "scale": m_scale,
                    "state": label,
                    "estimate": mean_tau,
                    "std_error": se,
                    "n_samples": reps,
                    "censored_fraction": frac,
                }
            )
        per_scale_mean[m_scale] = float(np.mean(cell_means))

    slope_full = _slope(np.array(scales), np.array([per_scale_mean[m] for m in scales]))
    slope_half = _slope(
        np.array(half_scales), np.array([per_scale_mean[m] for m in half_scales])
    )
    notes = [f"slope_full={slope_full:g}", f"slope_half={slope_half:g}"]
    if worst_censored > MAX_CENSORED_FRACTION:
        verdict = "inconclusive"
        notes.append(f"censored fraction {worst_censored:.3f} exceeds {MAX_CENSORED_FRACTION}")
    elif slope_half > 0 and SLOPE_RATIO_BOUNDS[0] <= slope_full / slope_half <= SLOPE_RATIO_BOUNDS[1]:
        verdict = "pass"
    else:
        verdict = "fail"
    return ExperimentResult(
        name="return-time",
        parameters={
            "scales": scales,
            "kappa": kappa,
            "delta": delta,
            "reps": reps,
            "h": h,
            "seed": master_seed,
            "cap": cap,
            "norm": norm,
            "proxy": "hitting time of the norm ball in place of the drift-criterion stopping time",
        },
        rows=rows,
        verdict=verdict,
        notes=notes,
    )


def fluid_vs_diffusion(
    model: SrbmModel,
    horizon: float,
    reps: int,
    h: float,
    master_seed: int,
) -> ExperimentResult:
    """Contrast the divergent affine fluid branch with the Monte Carlo mean.

    The affine branch (pushes along coordinate 1 only, z6 growing at rate
    R[6,1]-1) is verified explicitly, independent of the integrator's
    tie-break.  Pass iff the branch is valid with z6 exactly linear while the
    Monte Carlo estimate of E[Z6(horizon)] stays below half the fluid value
    with three-standard-error confidence.
    """
    deltas = match_example(model)
    if deltas is None:
        raise ValueError("fluid_vs_diffusion requires the 6-d example model")
    u = np.zeros(6)
    u[0] = 1.0
    v = model.theta + model.r_matrix @ u
    branch = AffinePath(z0=np.zeros(6), u=u, v=v)
    valid, violations = verify_affine_path(branch, model.theta, model.r_matrix)
    t_checks = [horizon / 4.0, horizon / 2.0, horizon]

    seed0 = _cell_seed(master_seed, 0)

    def one(i: int) -> list[float]:
        cfg = SimConfig(h=h, T=horizon, seed=replica_seed(seed0, i))
        states = states_at(model, StateVec(np.zeros(6)), cfg, t_checks)
        return [s.z[5] for s in states]

    z6 = np.array(_map_indexed(one, reps))  # reps x len(t_checks)
    rows = []
    for j, t in enumerate(t_checks):
        est = float(z6[:, j].mean())
        se = float(z6[:, j].std(ddof=1) / np.sqrt(reps))
        rows.append(
            {
                "scale": t,
                "state": "mc_z6",
                "estimate": est,
                "std_error": se,
                "n_samples": reps,
                "censored_fraction": 0.0,
            }
        )
        rows.append(
            {
                "scale": t,
                "state": "fluid_z6",
                "estimate": float(branch.v[5] * t),
                "std_error": 0.0,
                "n_samples": 1,
                "censored_fraction": 0.0,
            }
        )
    fluid_final = float(branch.v[5] * horizon)
    mc_final = z6[:, -1]
    mc_ok = float(mc_final.mean()) + 3.0 * float(mc_final.std(ddof=1) / np.sqrt(reps)) < fluid_final / 2.0
    verdict = "pass" if (valid and mc_ok) else "fail"
    notes = [f"fluid_z6({horizon:g})={fluid_final:g}"]
    if violations:
        notes += [f"branch violation: {v}" for v in violations]
    return ExperimentResult(
        name="fluid-vs-diffusion",
        parameters={
            "horizon": horizon,
            "reps": reps,
            "h": h,
            "seed": master_seed,
        },
        rows=rows,
        verdict=verdict,
        notes=notes,
    )
