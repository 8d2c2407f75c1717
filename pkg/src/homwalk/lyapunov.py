"""Monte Carlo estimation of the Lyapunov vector and of the cocycle's limit law.

All estimators follow trajectories ``p_n = b_n ... b_1`` from a fixed starting
flag and accumulate the Iwasawa cocycle step by step; the full product is
never formed.  Trajectory ``t`` uses ``RandomStream(master_seed, t)``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import _kernels
from .decomp import AVector, FlagPoint, flag_distance
from .exceptions import DegenerateQuotient, NoContraction
from .group import FiniteMeasure, RandomStream, sample_indices, sample_signs
from .parallel import fmean_rows, map_trajectories
from .subgroup import SubgroupSpec

KS_LEVEL = 0.01


def generic_flag(dim: int) -> FlagPoint:
    """A fixed flag in general position, used as the second starting point of probes."""
    return FlagPoint.random(dim, np.random.default_rng(0x5EED))


@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    mean: AVector
    stderr: np.ndarray
    n_steps: int
    n_trajectories: int
    synthetic: bool = False

    def __post_init__(self):
        se = np.asarray(self.stderr, dtype=float)
        if np.any(se < 0):
            raise ValueError("stderr must be nonnegative")
        object.__setattr__(self, "stderr", se)

    @property
    def dim(self) -> int:
        return self.mean.dim

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "stderr": self.stderr.tolist(),
            "n_steps": self.n_steps,
            "n_trajectories": self.n_trajectories,
            "synthetic": self.synthetic,
        }


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """Sample covariance of the normalized projected cocycle, in the basis of E."""

    matrix: np.ndarray
    n_samples: int
    drift: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        object.__setattr__(self, "matrix", m)

    def to_dict(self) -> dict:
        return {"cov": self.matrix.tolist(), "n_samples": self.n_samples, "drift": np.asarray(self.drift).tolist()}


def _frame(measure: FiniteMeasure, eta0: Optional[FlagPoint]) -> np.ndarray:
    if eta0 is None:
        return np.eye(measure.dim)
    return np.ascontiguousarray(eta0.frame)


def _signs(stream: RandomStream, n: int, symmetrize: bool) -> np.ndarray:
    return sample_signs(stream, n) if symmetrize else np.ones(n)


def _trajectory_total(t, measure, n_steps, master_seed, frame, symmetrize):
    stream = RandomStream(master_seed, t)
    idx = sample_indices(measure, stream, n_steps)
    total, _ = _kernels.cocycle_sum(
        measure.matrices, idx, frame, _signs(stream, n_steps, symmetrize), _kernels.REORTH_EVERY
    )
    return total


def cocycle_totals(
    measure: FiniteMeasure,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    eta0: Optional[FlagPoint] = None,
    workers: int = 1,
    symmetrize: bool = False,
    first_index: int = 0,
) -> np.ndarray:
    """sigma(p_n, eta0) for each trajectory, shape (n_trajectories, d)."""
    frame = _frame(measure, eta0)
    rows = map_trajectories(
        _trajectory_total,
        range(first_index, first_index + n_trajectories),
        (measure, n_steps, master_seed, frame, symmetrize),
        workers,
    )
    return np.array(rows).reshape(n_trajectories, measure.dim)


def estimate_lyapunov(
    measure: FiniteMeasure,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    eta0: Optional[FlagPoint] = None,
    workers: int = 1,
    symmetrize: bool = False,
) -> LyapunovEstimate:
    """Estimate the Lyapunov vector as the trajectory mean of sigma(p_n, eta0) / n.

    ``symmetrize`` multiplies each increment by an independent random sign,
    producing the synthetic centered walk; the estimate is then labelled
    ``synthetic``.
    """
    if n_steps < 1 or n_trajectories < 1:
        raise ValueError("n_steps and n_trajectories must be positive")
    per_traj = cocycle_totals(measure, n_steps, n_trajectories, master_seed, eta0, workers, symmetrize) / n_steps
    mean = AVector.project(fmean_rows(per_traj))
    if n_trajectories > 1:
        stderr = per_traj.std(axis=0, ddof=1) / np.sqrt(n_trajectories)
    elif measure.is_deterministic and not symmetrize:
        stderr = np.zeros(measure.dim)
    else:
        stderr = np.full(measure.dim, np.inf)
    return LyapunovEstimate(mean, stderr, n_steps, n_trajectories, synthetic=symmetrize)


def projected_totals(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    eta0: Optional[FlagPoint] = None,
    workers: int = 1,
    first_index: int = 0,
) -> np.ndarray:
    totals = cocycle_totals(measure, n_steps, n_trajectories, master_seed, eta0, workers, first_index=first_index)
    return totals @ spec.quotient_basis.T


def estimate_covariance(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    n_steps: int,
    n_trajectories: int,
    master_seed: int,
    eta0: Optional[FlagPoint] = None,
    workers: int = 1,
) -> CovarianceEstimate:
    """Sample covariance of (proj sigma(p_n, eta0) - n * drift) / sqrt(n).

    The drift is estimated from the same trajectories, so this is the sample
    covariance (ddof = 1) of proj sigma(p_n, eta0) / sqrt(n).
    """
    if spec.codim == 0:
        raise DegenerateQuotient("E = a / a' is zero-dimensional")
    x = projected_totals(measure, spec, n_steps, n_trajectories, master_seed, eta0, workers)
    drift = fmean_rows(x) / n_steps
    if n_trajectories < 2:
        cov = np.zeros((spec.codim, spec.codim))
    else:
        centered = (x - n_steps * drift) / np.sqrt(n_steps)
        cov = centered.T @ centered / (n_trajectories - 1)
        cov = 0.5 * (cov + cov.T)
    return CovarianceEstimate(cov, n_trajectories, drift)


def ks_band(n_samples: int, level: float = KS_LEVEL) -> float:
    """Critical value of the one-sample KS statistic at the given level."""
    return float(stats.kstwobign.isf(level) / np.sqrt(n_samples))


def _marginal_stats(z: np.ndarray) -> dict:
    out = {"skewness": [], "excess_kurtosis": [], "ks_statistic": [], "ks_pvalue": [], "variance": []}
    for col in z.T:
        var = float(col.var(ddof=1)) if len(col) > 1 else 0.0
        out["variance"].append(var)
        if var <= 1e-24:
            out["skewness"].append(0.0)
            out["excess_kurtosis"].append(0.0)
            out["ks_statistic"].append(0.0)
            out["ks_pvalue"].append(1.0)
            continue
        out["skewness"].append(float(stats.skew(col)))
        out["excess_kurtosis"].append(float(stats.kurtosis(col)))
        ks = stats.kstest(col, "norm", args=(0.0, np.sqrt(var)))
        out["ks_statistic"].append(float(ks.statistic))
        out["ks_pvalue"].append(float(ks.pvalue))
    return out


def clt_diagnostics(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    n_steps: int,
    n_samples: int,
    master_seed: int,
    eta0: Optional[FlagPoint] = None,
    eta1: Optional[FlagPoint] = None,
    workers: int = 1,
) -> dict:
    """Normality diagnostics for (proj sigma(p_n, eta) - n drift) / sqrt(n).

    Samples are drawn from ``eta0`` and, on disjoint trajectories, from a second
    flag ``eta1``.  Each sample is centered by its own mean.  Marginals are
    compared with a centered normal of the estimated variance.

    The report holds per-coordinate skewness, excess kurtosis and KS statistic
    for both flags, the KS critical value at the 1% level (``ks_band``) and
    ``degenerate`` when the normalized law is a point mass.
    """
    if spec.codim == 0:
        raise DegenerateQuotient("E = a / a' is zero-dimensional")
    eta0 = eta0 if eta0 is not None else FlagPoint.base(measure.dim)
    eta1 = eta1 if eta1 is not None else generic_flag(measure.dim)
    report = {"n_steps": n_steps, "n_samples": n_samples, "ks_band": ks_band(n_samples)}
    for label, eta, first in (("eta0", eta0, 0), ("eta1", eta1, n_samples)):
        x = projected_totals(measure, spec, n_steps, n_samples, master_seed, eta, workers, first)
        z = (x - fmean_rows(x)) / np.sqrt(n_steps)
        report[label] = _marginal_stats(z)
        report[label]["drift"] = (fmean_rows(x) / n_steps).tolist()
    report["degenerate"] = bool(max(report["eta0"]["variance"]) <= 1e-24)
    d0 = np.asarray(report["eta0"]["ks_statistic"])
    d1 = np.asarray(report["eta1"]["ks_statistic"])
    report["ks_flag_difference"] = np.abs(d0 - d1).tolist()
    report["uniform_in_flag"] = bool(np.all(np.abs(d0 - d1) < 2 * report["ks_band"]))
    return report


def _exterior_log_norms(sigma: np.ndarray, nfac: np.ndarray) -> np.ndarray:
    """log ||wedge^j (exp(sigma) nfac)||_2 for j = 1..d, stacked over steps.

    Rows of wedge^j are scaled by exp(sigma_I - max_I sigma_I), so nothing
    overflows and the top singular value keeps full relative accuracy.
    """
    steps, d = sigma.shape
    out = np.zeros((steps, d))
    for j in range(1, d):
        combos = list(itertools.combinations(range(d), j))
        cidx = np.array(combos)
        sig_i = sigma[:, cidx].sum(axis=2)
        top = sig_i.max(axis=1)
        sub = nfac[:, cidx[:, None, :, None], cidx[None, :, None, :]]
        minors = np.linalg.det(sub)
        scaled = np.exp(sig_i - top[:, None])[:, :, None] * minors
        out[:, j - 1] = top + np.log(np.linalg.norm(scaled, ord=2, axis=(1, 2)))
    out[:, d - 1] = sigma.sum(axis=1)
    return out


def kappa_from_iwasawa(sigma: np.ndarray, nfac: np.ndarray) -> np.ndarray:
    """Cartan projection of exp(sigma) @ nfac, row by row."""
    s = _exterior_log_norms(np.atleast_2d(sigma), np.asarray(nfac).reshape(-1, sigma.shape[-1], sigma.shape[-1]))
    kappa = np.diff(np.hstack([np.zeros((s.shape[0], 1)), s]), axis=1)
    return kappa - kappa.mean(axis=1, keepdims=True)


def sigma_kappa_path(
    measure: FiniteMeasure,
    eta: Optional[FlagPoint],
    n_steps: int,
    master_seed: int,
    trajectory_index: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """(sigma(p_n, eta), kappa(p_n)) for n = 1..n_steps, each of shape (n_steps, d)."""
    stream = RandomStream(master_seed, trajectory_index)
    idx = sample_indices(measure, stream, n_steps)
    sigma, nfac = _kernels.iwasawa_path(measure.matrices, idx, _frame(measure, eta), _kernels.REORTH_EVERY)
    # kappa(p_n) = kappa(p_n k_eta) and p_n k_eta = k exp(sigma) nfac.
    kappa = kappa_from_iwasawa(sigma[1:], nfac[1:])
    return sigma[1:], kappa


def sigma_kappa_gap(
    measure: FiniteMeasure,
    eta: Optional[FlagPoint],
    n_steps: int,
    master_seed: int,
    trajectory_index: int = 0,
    return_vectors: bool = False,
) -> np.ndarray:
    """The sequence ||sigma(p_n, eta) - kappa(p_n)||, n = 1..n_steps.

    With ``return_vectors`` the gap vectors themselves, shape (n_steps, d).
    """
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    sigma, kappa = sigma_kappa_path(measure, eta, n_steps, master_seed, trajectory_index)
    gap = sigma - kappa
    return gap if return_vectors else np.linalg.norm(gap, axis=1)


def late_oscillation(seq: np.ndarray) -> float:
    """Largest distance between two terms of the second half of ``seq``."""
    seq = np.asarray(seq, dtype=float)
    tail = seq[len(seq) // 2 :]
    if tail.ndim == 1:
        return float(tail.max() - tail.min())
    return float(max(np.linalg.norm(tail - row, axis=1).max() for row in tail))


@dataclass(frozen=True, eq=False)
class BoundaryEstimate:
    flag: FlagPoint
    certificate: float
    n_steps: int


def boundary_point(
    measure: FiniteMeasure,
    n_steps: int,
    master_seed: int,
    trajectory_index: int = 0,
    eta0: Optional[FlagPoint] = None,
    eta1: Optional[FlagPoint] = None,
    warn: bool = True,
) -> BoundaryEstimate:
    """Estimate the boundary point xi_b as (b_1 ... b_n) . eta0.

    The certificate is the distance between the images of ``eta0`` and a
    second flag ``eta1``; it tends to zero when the forward products contract
    the flag variety.  A :class:`NoContraction` warning is issued above 0.1.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    d = measure.dim
    eta0 = eta0 if eta0 is not None else FlagPoint.base(d)
    eta1 = eta1 if eta1 is not None else generic_flag(d)
    idx = sample_indices(measure, RandomStream(master_seed, trajectory_index), n_steps)
    f0 = _kernels.forward_flag(measure.matrices, idx, np.ascontiguousarray(eta0.frame))
    f1 = _kernels.forward_flag(measure.matrices, idx, np.ascontiguousarray(eta1.frame))
    flag0 = FlagPoint(f0)
    cert = flag_distance(flag0, FlagPoint(f1))
    if warn and cert > 0.1:
        warnings.warn(
            f"flags did not contract (certificate {cert:.3g} after {n_steps} steps)", NoContraction, stacklevel=2
        )
    return BoundaryEstimate(flag0, cert, n_steps)


def _boundary_angle(t, measure, n_steps, master_seed):
    return boundary_point(measure, n_steps, master_seed, t, warn=False).flag.angle


def sample_boundary_angles(
    measure: FiniteMeasure, n_steps: int, n_samples: int, master_seed: int, workers: int = 1
) -> np.ndarray:
    """Angles in [0, pi) of boundary points of independent trajectories (d = 2)."""
    return np.array(map_trajectories(_boundary_angle, range(n_samples), (measure, n_steps, master_seed), workers))
