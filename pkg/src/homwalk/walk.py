"""The projected cocycle walk on E = a / a' and its return statistics.

For H = A'N the walk on G/H is recurrent exactly when the walk
``t_n = t_0 + proj sigma(b_n ... b_1, eta_0)`` on E is.  This module simulates
that walk, counts visits to balls (empirical Green functions), and provides
the finite-horizon evidence used to cross-check the classifier.

When H does not contain N, the E-walk says nothing; for that case
:func:`simulate_pair_walk` follows a pair of flags, i.e. the walk on G/A,
which escapes to infinity as the two flags merge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .decomp import FlagPoint
from .group import FiniteMeasure, RandomStream, sample_indices, sample_signs
from .lyapunov import generic_flag, projected_totals
from .parallel import sum_trajectories
from .subgroup import SubgroupSpec, UnipotentPart

DEFAULT_QUANTILE = 0.9


@dataclass(frozen=True, eq=False)
class WalkTrajectory:
    points: np.ndarray
    start_flag: FlagPoint
    stream_id: int
    synthetic: bool = False

    @property
    def n_steps(self) -> int:
        return self.points.shape[0] - 1

    @property
    def codim(self) -> int:
        return self.points.shape[1]

    def to_csv_rows(self):
        for step, row in enumerate(self.points):
            yield [step, *row.tolist()]


@dataclass(frozen=True, eq=False)
class ReturnStats:
    radius: float
    return_times: np.ndarray
    last_exit: int
    green_partial: np.ndarray

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "n_returns": int(self.return_times.size),
            "last_exit": self.last_exit,
            "green_final": float(self.green_partial[-1]),
        }


@dataclass(frozen=True, eq=False)
class GreenReport:
    """Across-trajectory evidence for recurrence or transience at a fixed horizon."""

    curve: np.ndarray
    radius: float
    n_trajectories: int
    late_return_fraction: float
    synthetic: bool = False
    kind: str = "ball"

    @property
    def n_steps(self) -> int:
        return self.curve.shape[0] - 1

    @property
    def last_quarter_increase(self) -> float:
        """Relative growth of the Green curve over the last quarter of the horizon."""
        n = self.n_steps
        ref = self.curve[(3 * n) // 4]
        if ref <= 0:
            return 0.0 if self.curve[-1] <= 0 else math.inf
        return float((self.curve[-1] - ref) / ref)

    @property
    def saturated(self) -> bool:
        return self.last_quarter_increase < 0.01

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "radius": self.radius,
            "n_steps": self.n_steps,
            "n_trajectories": self.n_trajectories,
            "green_final": float(self.curve[-1]),
            "last_quarter_increase": self.last_quarter_increase,
            "late_return_fraction": self.late_return_fraction,
            "synthetic": self.synthetic,
        }


def _path(measure, spec, frame, t0, n_steps, stream, symmetrize):
    idx = sample_indices(measure, stream, n_steps)
    signs = sample_signs(stream, n_steps) if symmetrize else np.ones(n_steps)
    basis = np.ascontiguousarray(spec.quotient_basis)
    if basis.shape[0] == 0:
        return np.zeros((n_steps + 1, 0))
    return _kernels.cocycle_path(
        measure.matrices, idx, frame, signs, basis, np.asarray(t0, dtype=float), _kernels.REORTH_EVERY
    )


def _start(measure, spec, eta0, t0):
    eta0 = eta0 if eta0 is not None else FlagPoint.base(measure.dim)
    t0 = np.zeros(spec.codim) if t0 is None else np.asarray(t0, dtype=float).reshape(spec.codim)
    return eta0, t0


def simulate_walk(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    eta0: Optional[FlagPoint],
    t0,
    n_steps: int,
    stream: RandomStream,
    symmetrize: bool = False,
) -> WalkTrajectory:
    """Points t0 + proj sigma(p_k, eta0) for k = 0..n_steps.

    ``symmetrize`` gives each increment an independent random sign (the
    synthetic centered walk); the trajectory is then labelled ``synthetic``.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    eta0, t0 = _start(measure, spec, eta0, t0)
    pts = _path(measure, spec, np.ascontiguousarray(eta0.frame), t0, n_steps, stream, symmetrize)
    return WalkTrajectory(pts, eta0, stream.trajectory_index, synthetic=symmetrize)


def _inside(points: np.ndarray, radius: float) -> np.ndarray:
    if points.shape[1] == 0:
        return np.ones(points.shape[0], dtype=bool)
    return np.einsum("ij,ij->i", points, points) <= radius * radius


def return_stats(traj: WalkTrajectory, radius: float) -> ReturnStats:
    """Visits of the trajectory to the closed ball B(0, radius) at times n >= 1."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    inside = _inside(traj.points, radius)
    inside[0] = False
    times = np.flatnonzero(inside)
    green = np.cumsum(inside)
    return ReturnStats(float(radius), times, int(times[-1]) if times.size else 0, green)


def _green_counts(t, measure, spec, frame, t0, radius, n_steps, master_seed, symmetrize):
    pts = _path(measure, spec, frame, t0, n_steps, RandomStream(master_seed, t), symmetrize)
    inside = _inside(pts, radius)
    inside[0] = False
    late = bool(inside[n_steps // 2 + 1 :].any())
    return np.cumsum(inside, dtype=np.int64), np.array(int(late))


def green_report(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    eta0: Optional[FlagPoint],
    t0,
    radius: float,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    workers: int = 1,
    symmetrize: bool = False,
) -> GreenReport:
    """Mean Green curve and late-window return fraction over trajectories."""
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be positive")
    eta0, t0 = _start(measure, spec, eta0, t0)
    counts, late = sum_trajectories(
        _green_counts,
        range(n_trajectories),
        (measure, spec, np.ascontiguousarray(eta0.frame), t0, radius, n_steps, master_seed, symmetrize),
        workers,
    )
    return GreenReport(
        counts / n_trajectories, float(radius), n_trajectories, float(late) / n_trajectories, synthetic=symmetrize
    )


def empirical_green(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    eta0: Optional[FlagPoint],
    t0,
    radius: float,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    workers: int = 1,
    symmetrize: bool = False,
) -> np.ndarray:
    """Across-trajectory mean of the partial Green counts, indexed by n = 0..n_steps.

    A curve that levels off is evidence of a finite Green function, hence of
    transience; an unbounded curve is consistent with recurrence.
    """
    return green_report(
        measure, spec, eta0, t0, radius, n_steps, n_trajectories, master_seed, workers, symmetrize
    ).curve


def _tail_norms(t, measure, spec, frame, t0, n_steps, master_seed, symmetrize):
    pts = _path(measure, spec, frame, t0, n_steps, RandomStream(master_seed, t), symmetrize)
    start = (3 * n_steps) // 4
    return np.linalg.norm(pts[start:], axis=1)


def calibrate_radius(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    quantile: float = DEFAULT_QUANTILE,
    eta0: Optional[FlagPoint] = None,
    t0=None,
    symmetrize: bool = False,
) -> float:
    """Quantile of ||t_n|| pooled over trajectories and the last quarter of the horizon."""
    if not 0 < quantile < 1:
        raise ValueError("quantile must lie in (0, 1)")
    eta0, t0 = _start(measure, spec, eta0, t0)
    if spec.codim == 0:
        return 0.0
    frame = np.ascontiguousarray(eta0.frame)
    pooled = np.concatenate(
        [
            _tail_norms(t, measure, spec, frame, t0, n_steps, master_seed, symmetrize)
            for t in range(n_trajectories)
        ]
    )
    return float(np.quantile(pooled, quantile))


@dataclass(frozen=True, eq=False)
class DeviationDecay:
    ks: np.ndarray
    log_frequency: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    threshold: float
    drift: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.ks.tolist(), self.log_frequency.tolist()))

    def to_dict(self) -> dict:
        return {
            "M": self.threshold,
            "k": self.ks.tolist(),
            "log_frequency": [None if not np.isfinite(v) else v for v in self.log_frequency.tolist()],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "drift": np.asarray(self.drift).tolist(),
        }


def increment_bound(measure: FiniteMeasure, drift) -> float:
    """Almost-sure bound on ||proj sigma(b, eta) - drift||.

    Uses ||sigma(g, eta)|| <= ||kappa(g)|| (sigma lies in the convex hull of
    the Weyl orbit of kappa(g)); projection onto E does not increase norms.
    """
    sv = np.linalg.svd(measure.matrices, compute_uv=False)
    logs = np.log(sv)
    logs -= logs.mean(axis=1, keepdims=True)
    return float(np.linalg.norm(logs, axis=1).max() + np.linalg.norm(drift))


def _deviation_paths(t, measure, spec, frame, k_max, master_seed):
    return _path(measure, spec, frame, np.zeros(spec.codim), k_max, RandomStream(master_seed, t), False)


def increment_spread(
    measure: FiniteMeasure, spec: SubgroupSpec, n_steps: int = 4096, master_seed: int = 0, eta0=None
) -> float:
    """Standard deviation of single projected increments along a long trajectory.

    For several coordinates, the root of the summed variances.
    """
    eta0, t0 = _start(measure, spec, eta0, None)
    pts = _path(measure, spec, np.ascontiguousarray(eta0.frame), t0, n_steps, RandomStream(master_seed, 0), False)
    inc = np.diff(pts, axis=0)[n_steps // 8 :]
    return float(np.sqrt(inc.var(axis=0, ddof=1).sum()))


def large_deviation_decay(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    eta0: Optional[FlagPoint],
    M: float,
    k_max: int,
    n_samples: int,
    master_seed: int,
    drift=None,
) -> DeviationDecay:
    """Empirical log-frequency of ||proj sigma(p_k, eta0) - k drift|| >= k M, k = 1..k_max.

    ``drift`` defaults to a Monte Carlo estimate on trajectories disjoint from
    the samples.  Zero frequencies are reported as ``-inf`` and left out of
    the least-squares fit of log-frequency against k.
    """
    if k_max < 10:
        raise ValueError("k_max must be at least 10")
    if M <= 0:
        raise ValueError("M must be positive")
    eta0, _ = _start(measure, spec, eta0, None)
    frame = np.ascontiguousarray(eta0.frame)
    if drift is None:
        n_est, horizon = 256, max(1000, 4 * k_max)
        drift = projected_totals(measure, spec, horizon, n_est, master_seed, eta0, first_index=n_samples).mean(
            axis=0
        ) / horizon
    drift = np.asarray(drift, dtype=float).reshape(spec.codim)
    bound = increment_bound(measure, drift)
    if M >= bound:
        raise ValueError(f"M = {M:g} is not below the almost-sure increment bound {bound:g}")
    ks = np.arange(1, k_max + 1)
    hits = np.zeros(k_max, dtype=np.int64)
    for t in range(n_samples):
        pts = _deviation_paths(t, measure, spec, frame, k_max, master_seed)[1:]
        dev = np.linalg.norm(pts - ks[:, None] * drift, axis=1)
        hits += dev >= ks * M
    with np.errstate(divide="ignore"):
        logf = np.log(hits / n_samples)
    ok = np.isfinite(logf)
    if ok.sum() >= 3:
        slope, intercept = np.polyfit(ks[ok], logf[ok], 1)
        resid = logf[ok] - (slope * ks[ok] + intercept)
        ss_tot = ((logf[ok] - logf[ok].mean()) ** 2).sum()
        r2 = 1.0 - (resid**2).sum() / ss_tot if ss_tot > 0 else 1.0
    else:
        slope = intercept = r2 = math.nan
    return DeviationDecay(ks, logf, float(slope), float(intercept), float(r2), float(M), drift)


def visits_cover_grid(points: np.ndarray, grid: np.ndarray, eps: float) -> bool:
    """True when every grid point lies within ``eps`` of some visited point."""
    points = np.asarray(points, dtype=float)
    grid = np.asarray(grid, dtype=float).reshape(-1, points.shape[1])
    dist, _ = cKDTree(points).query(grid, k=1)
    return bool(np.all(dist <= eps))


def ball_grid(codim: int, radius: float, spacing: float) -> np.ndarray:
    """Points of the lattice spacing * Z^codim inside the closed ball B(0, radius)."""
    m = int(np.floor(radius / spacing))
    axes = [np.arange(-m, m + 1) * spacing] * codim
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, codim)
    return mesh[np.linalg.norm(mesh, axis=1) <= radius + 1e-12]


def drift_violation_time(traj: WalkTrajectory, drift_norm: float, delta: float) -> int:
    """Last n with ||t_n|| < n (drift_norm - delta); 0 if the bound always holds."""
    n = np.arange(traj.points.shape[0])
    bad = np.linalg.norm(traj.points, axis=1) < n * (drift_norm - delta)
    bad[0] = False
    idx = np.flatnonzero(bad)
    return int(idx[-1]) if idx.size else 0


def simulate_pair_walk(
    measure: FiniteMeasure,
    eta0: Optional[FlagPoint],
    eta1: Optional[FlagPoint],
    n_steps: int,
    stream: RandomStream,
) -> np.ndarray:
    """Opposition of the pair (p_k eta0, p_k eta1), k = 0..n_steps.

    The pair walk is the walk on G/A (pairs of opposite flags).  Opposition is
    min_j |det[first j columns of one frame, first d-j of the other]|; the
    sets {opposition >= r} exhaust G/A by compacts.
    """
    d = measure.dim
    eta0 = eta0 if eta0 is not None else FlagPoint.base(d)
    eta1 = eta1 if eta1 is not None else generic_flag(d)
    idx = sample_indices(measure, stream, n_steps)
    return _kernels.pair_path(
        measure.matrices, idx, np.ascontiguousarray(eta0.frame), np.ascontiguousarray(eta1.frame), _kernels.REORTH_EVERY
    )


def _pair_counts(t, measure, eta0, eta1, threshold, n_steps, master_seed):
    opp = simulate_pair_walk(measure, eta0, eta1, n_steps, RandomStream(master_seed, t))
    inside = opp >= threshold
    inside[0] = False
    late = bool(inside[n_steps // 2 + 1 :].any())
    return np.cumsum(inside, dtype=np.int64), np.array(int(late))


def pair_green_report(
    measure: FiniteMeasure,
    threshold: float,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    eta0: Optional[FlagPoint] = None,
    eta1: Optional[FlagPoint] = None,
    workers: int = 1,
) -> GreenReport:
    """Green curve of the pair walk for the compact {opposition >= threshold}."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    counts, late = sum_trajectories(
        _pair_counts, range(n_trajectories), (measure, eta0, eta1, threshold, n_steps, master_seed), workers
    )
    return GreenReport(counts / n_trajectories, float(threshold), n_trajectories, float(late) / n_trajectories, kind="pair")


LOCAL_PILOT_STEPS = 10
PAIR_THRESHOLD = 0.05


@dataclass(frozen=True, eq=False)
class WalkEvidence:
    """Finite-horizon Green evidence at two scales.

    ``local`` uses a fixed ball, the 0.9 quantile of ||t_n|| over a short pilot
    horizon; a transient walk visits it finitely often, so its curve levels
    off.  ``horizon`` uses :func:`calibrate_radius` at the full horizon; a
    recurrent walk keeps returning to it and its curve keeps growing.  For a
    proper unipotent part only the pair walk is meaningful and ``horizon`` is
    None.
    """

    local: GreenReport
    horizon: Optional[GreenReport]

    def to_dict(self) -> dict:
        return {"local": self.local.to_dict(), "horizon": None if self.horizon is None else self.horizon.to_dict()}


def walk_evidence(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    symmetrize: bool = False,
    workers: int = 1,
    calibration_trajectories: int = 50,
) -> WalkEvidence:
    if spec.unipotent_part is UnipotentPart.PROPER:
        local = pair_green_report(measure, PAIR_THRESHOLD, n_steps, n_trajectories, master_seed, workers=workers)
        return WalkEvidence(local, None)
    # the compacts come from independent paths, not from the counted ones
    seed_cal = master_seed + 1
    r_local = calibrate_radius(
        measure, spec, LOCAL_PILOT_STEPS, n_trajectories, seed_cal, DEFAULT_QUANTILE, symmetrize=symmetrize
    )
    r_horizon = calibrate_radius(
        measure, spec, n_steps, calibration_trajectories, seed_cal, DEFAULT_QUANTILE, symmetrize=symmetrize
    )
    if spec.codim == 0:
        r_local = r_horizon = 1.0
    local = green_report(measure, spec, None, None, r_local, n_steps, n_trajectories, master_seed, workers, symmetrize)
    horizon = green_report(
        measure, spec, None, None, r_horizon, n_steps, n_trajectories, master_seed, workers, symmetrize
    )
    return WalkEvidence(local, horizon)
