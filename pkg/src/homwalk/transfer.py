"""Discretized transfer operators on the projective line (d = 2).

For a covector theta on E the operator acts on functions of a line eta by

    (P_theta f)(eta) = sum_g w_g exp(theta . proj sigma(g, eta)) f(g . eta).

Lines are parametrized by angles in [0, pi); functions are sampled on an
equispaced grid and evaluated off-grid by periodic linear interpolation, so
P_theta becomes a sparse matrix with two entries per atom and row.  At
theta = 0 the rows are convex combinations: the matrix is stochastic and its
left fixed vector approximates the stationary measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from .exceptions import NoConvergence, NotCentered, UnsupportedDimension
from .group import FiniteMeasure
from .subgroup import SubgroupSpec

DEFAULT_POINTS = 1024
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 20000
DENSE_LIMIT = 2048


def _check_points(n_points: int) -> None:
    if n_points < 16 or n_points & (n_points - 1):
        raise ValueError(f"n_points must be a power of two >= 16, got {n_points}")


@dataclass(frozen=True, eq=False)
class OperatorGrid:
    """Complex values of a function on the lines at angles k * pi / n_points."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        _check_points(v.shape[0])
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, n_points: int, value: complex = 1.0) -> "OperatorGrid":
        return cls(np.full(n_points, value, dtype=complex))

    @classmethod
    def from_function(cls, fn, n_points: int) -> "OperatorGrid":
        return cls(np.array([fn(a) for a in grid_angles(n_points)], dtype=complex))

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def angles(self) -> np.ndarray:
        return grid_angles(self.n_points)


def grid_angles(n_points: int) -> np.ndarray:
    return np.arange(n_points) * (np.pi / n_points)


class TransferOperator:
    """Grid geometry of a measure on SL(2, R), reusable for every theta."""

    def __init__(self, measure: FiniteMeasure, spec: SubgroupSpec, n_points: int = DEFAULT_POINTS):
        if measure.dim != 2 or spec.dim != 2:
            raise UnsupportedDimension("transfer operators are implemented for d = 2 only")
        _check_points(n_points)
        self.measure = measure
        self.spec = spec
        self.n_points = n_points
        h = np.pi / n_points
        ang = grid_angles(n_points)
        u = np.stack([np.cos(ang), np.sin(ang)])  # unit vectors, shape (2, n)
        rows, cols, frac, sbar, weight = [], [], [], [], []
        for w, g in zip(measure.weights, measure.matrices):
            gu = g @ u
            norm = np.hypot(gu[0], gu[1])
            sigma = np.stack([np.log(norm), -np.log(norm)], axis=1)  # (n, 2)
            beta = np.arctan2(gu[1], gu[0]) % np.pi
            x = beta / h
            j0 = np.floor(x).astype(np.int64)
            f = x - j0
            j0 %= n_points
            rows.append(np.arange(n_points))
            cols.append(j0)
            frac.append(f)
            sbar.append(sigma @ spec.quotient_basis.T)  # (n, codim)
            weight.append(np.full(n_points, w))
        self._rows = np.concatenate(rows)
        self._j0 = np.concatenate(cols)
        self._frac = np.concatenate(frac)
        self._sbar = np.concatenate(sbar)
        self._weight = np.concatenate(weight)

    @property
    def codim(self) -> int:
        return self.spec.codim

    def _theta(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=complex).reshape(-1)
        if th.size == 1 and self.codim == 1:
            return th
        if th.size != self.codim and not (self.codim == 0 and np.all(th == 0)):
            raise ValueError(f"theta must have {self.codim} components")
        return th[: self.codim]

    def matrix(self, theta=0.0) -> sparse.csr_matrix:
        th = self._theta(theta)
        if self.codim:
            factor = np.exp(self._sbar @ th)
        else:
            factor = np.ones(self._rows.shape[0], dtype=complex)
        base = self._weight * factor
        if np.all(np.imag(base) == 0):
            base = np.real(base)
        n = self.n_points
        rows = np.concatenate([self._rows, self._rows])
        cols = np.concatenate([self._j0, (self._j0 + 1) % n])
        data = np.concatenate([base * (1 - self._frac), base * self._frac])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def apply(self, theta, values: np.ndarray) -> np.ndarray:
        return self.matrix(theta) @ values

    def apply_direct(self, theta, values: np.ndarray) -> np.ndarray:
        """Unvectorized evaluation of the defining sum at every grid point."""
        th = self._theta(theta)
        n = self.n_points
        out = np.zeros(n, dtype=complex)
        for k in range(self._rows.shape[0]):
            i, j0, f = self._rows[k], self._j0[k], self._frac[k]
            val = (1 - f) * values[j0] + f * values[(j0 + 1) % n]
            out[i] += self._weight[k] * np.exp(np.dot(self._sbar[k], th)) * val
        return out


@lru_cache(maxsize=32)
def _cached_operator(measure: FiniteMeasure, spec: SubgroupSpec, n_points: int) -> TransferOperator:
    return TransferOperator(measure, spec, n_points)


def transfer_operator(measure: FiniteMeasure, spec: SubgroupSpec, n_points: int = DEFAULT_POINTS) -> TransferOperator:
    return _cached_operator(measure, spec, n_points)


def apply_transfer(measure: FiniteMeasure, theta, f: OperatorGrid, spec: SubgroupSpec) -> OperatorGrid:
    """Apply P_theta to grid values ``f``."""
    op = transfer_operator(measure, spec, f.n_points)
    return OperatorGrid(op.apply(theta, f.values))


@dataclass(frozen=True, eq=False)
class EigenReport:
    theta: np.ndarray
    eigenvalue: complex
    eigenfunction: OperatorGrid
    spectral_radius_rest: float
    iterations: int
    residual: float
    method: str = "power"

    @property
    def gap(self) -> float:
        """1 - |lambda|: positive when the leading eigenvalue lies inside the unit disc."""
        return 1.0 - abs(self.eigenvalue)

    def to_dict(self) -> dict:
        lam = complex(self.eigenvalue)
        return {
            "theta": [[complex(t).real, complex(t).imag] for t in self.theta],
            "lambda": [lam.real, lam.imag],
            "abs_lambda": abs(lam),
            "rest_radius": self.spectral_radius_rest,
            "iterations": self.iterations,
            "residual": self.residual,
            "method": self.method,
        }


def _power(apply, n, start, tol, max_iter):
    v = start / np.abs(start).max()
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = apply(v)
        lam = np.vdot(v, w) / np.vdot(v, v)
        res = np.abs(w - lam * v).max() / np.abs(v).max()
        scale = np.abs(w).max()
        if scale == 0:
            return 0.0, v, it, 0.0
        if res <= tol * max(abs(lam), 1e-300):
            return lam, w / scale, it, res
        v = w / scale
    raise NoConvergence(f"power iteration did not reach tol={tol:g} in {max_iter} iterations (residual {res:.2e})")


def _rest_radius(apply, phi, psi, lam, n, n_iter=400):
    denom = psi @ phi

    def deflated(v):
        return apply(v) - lam * phi * (psi @ v) / denom

    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n) + 0j
    v -= phi * (psi @ v) / denom
    v /= np.linalg.norm(v)
    log_growth = []
    for _ in range(n_iter):
        w = deflated(v)
        nw = np.linalg.norm(w)
        if nw == 0 or not np.isfinite(nw):
            return 0.0
        log_growth.append(math.log(nw))
        v = w / nw
    tail = log_growth[n_iter // 2 :]
    return float(math.exp(sum(tail) / len(tail)))


def _arnoldi(m, tol, max_iter):
    try:
        vals, vecs = eigs(m, k=3, which="LM", tol=tol, maxiter=max_iter, v0=np.ones(m.shape[0], dtype=m.dtype))
    except ArpackNoConvergence as exc:
        raise NoConvergence(f"Arnoldi iteration did not converge: {exc}") from exc
    order = np.argsort(-np.abs(vals))
    return vals[order[0]], vecs[:, order[0]], float(np.abs(vals[order[1]]))


def leading_eigen(
    measure: FiniteMeasure,
    theta,
    spec: SubgroupSpec,
    n_points: int = DEFAULT_POINTS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    method: str = "power",
    rest: bool = True,
) -> EigenReport:
    """Leading eigenpair of P_theta and the spectral radius of the rest of the spectrum.

    ``method="power"`` runs power iteration on P_theta and on its transpose
    (for the left eigenvector), then estimates the remaining spectral radius
    from the growth rate of the deflated operator.  ``method="dense"`` uses a
    full eigendecomposition and is meant for validation on small grids.
    ``method="arnoldi"`` uses ARPACK and takes the rest radius from the second
    largest modulus.  Power iteration stalls when the two largest moduli are
    nearly equal (large imaginary theta); it then falls back to Arnoldi and the
    report records ``method="arnoldi"``.

    The eigenfunction is normalized to integrate to one against the grid
    stationary measure.
    """
    op = transfer_operator(measure, spec, n_points)
    th = op._theta(theta)
    m = op.matrix(th)
    n = n_points
    if method == "dense":
        if n > DENSE_LIMIT:
            raise ValueError(f"dense method limited to n_points <= {DENSE_LIMIT}")
        vals, vecs = np.linalg.eig(m.toarray())
        order = np.argsort(-np.abs(vals))
        lam = vals[order[0]]
        phi = vecs[:, order[0]]
        rest_radius = float(np.abs(vals[order[1]])) if n > 1 else 0.0
        iterations = 0
    elif method == "arnoldi":
        lam, phi, rest_radius = _arnoldi(m, tol, max_iter)
        iterations = 0
    elif method == "power":
        try:
            lam, phi, iterations, _ = _power(lambda v: m @ v, n, np.ones(n, dtype=complex), tol, max_iter)
            rest_radius = math.nan
            if rest:
                mt = m.T.tocsr()
                _, psi, _, _ = _power(lambda v: mt @ v, n, np.ones(n, dtype=complex), tol, max_iter)
                rest_radius = _rest_radius(lambda v: m @ v, phi, psi, lam, n)
        except NoConvergence:
            lam, phi, rest_radius = _arnoldi(m, tol, max_iter)
            iterations, method = 0, "arnoldi"
    else:
        raise ValueError(f"unknown method {method!r}")
    nu = stationary_measure(measure, n_points, tol=1e-13)
    norm = nu @ phi
    if abs(norm) > 1e-12:
        phi = phi / norm
    residual = float(np.abs(m @ phi - lam * phi).max())
    return EigenReport(th, complex(lam), OperatorGrid(phi), rest_radius, iterations, residual, method)


def stationary_measure(
    measure: FiniteMeasure, n_points: int = DEFAULT_POINTS, tol: float = 1e-12, max_iter: int = 200000
) -> np.ndarray:
    """Grid weights of the mu-stationary measure: the left fixed vector of P_0.

    Power iteration from the uniform vector until ||nu - mu * nu||_1 < tol.
    """
    if measure.dim != 2:
        raise UnsupportedDimension("stationary measures on the grid are implemented for d = 2 only")
    return _stationary(measure, n_points, tol, max_iter).copy()


@lru_cache(maxsize=32)
def _stationary(measure, n_points, tol, max_iter):
    spec = SubgroupSpec(2, np.zeros((0, 2)))
    mt = transfer_operator(measure, spec, n_points).matrix(0.0).T.tocsr()
    nu = np.full(n_points, 1.0 / n_points)
    for _ in range(max_iter):
        new = mt @ nu
        new /= new.sum()
        if np.abs(new - nu).sum() < tol:
            new.setflags(write=False)
            return new
        nu = new
    raise NoConvergence(f"stationary measure did not converge to tol={tol:g}")


def lambda_derivative(
    measure: FiniteMeasure, spec: SubgroupSpec, e=1.0, t: float = 1e-3, n_points: int = DEFAULT_POINTS
) -> float:
    """Central difference (lambda_{t e} - lambda_{-t e}) / 2t along the covector ``e``."""
    e = np.atleast_1d(np.asarray(e, dtype=float))
    lp = leading_eigen(measure, t * e, spec, n_points, rest=False).eigenvalue
    lm = leading_eigen(measure, -t * e, spec, n_points, rest=False).eigenvalue
    return float(np.real(lp - lm) / (2 * t))


def log_lambda_second_derivative(
    measure: FiniteMeasure, spec: SubgroupSpec, e=1.0, t: float = 1e-2, n_points: int = DEFAULT_POINTS
) -> float:
    """Second central difference of log lambda along ``e`` at 0."""
    e = np.atleast_1d(np.asarray(e, dtype=float))
    lam = [_branch_eigenvalue(measure, s * t * e, spec, n_points) for s in (1, 0, -1)]
    logs = np.log(np.real(lam))
    return float((logs[0] - 2 * logs[1] + logs[2]) / t**2)


def _branch_eigenvalue(measure, theta, spec, n_points):
    # A single atom has one eigenvalue per fixed line, all equal to 1 at theta = 0;
    # follow the one at the attracting line, where the stationary mass sits.
    if measure.is_deterministic:
        nu = stationary_measure(measure, n_points, tol=1e-13)
        op = transfer_operator(measure, spec, n_points)
        return complex(op.apply(theta, np.ones(n_points, dtype=complex))[np.argmax(nu)])
    return leading_eigen(measure, theta, spec, n_points, rest=False).eigenvalue


def second_derivative_check(
    measure: FiniteMeasure,
    spec: SubgroupSpec,
    e=1.0,
    t: float = 1e-2,
    n_points: int = DEFAULT_POINTS,
    n_steps: int = 2000,
    n_trajectories: int = 10000,
    master_seed: int = 0,
    log_scale: bool = True,
    workers: int = 1,
) -> tuple[float, float]:
    """Compare the curvature of lambda at 0 with the Monte Carlo variance along ``e``.

    Returns ``(finite_difference, mc_variance)``.  With ``log_scale`` the
    finite difference is taken on log lambda, whose Hessian at 0 is the
    covariance form whatever the drift.  Without it, the raw second
    difference of lambda also contains the squared drift, so the direction
    must be centered; :class:`NotCentered` is raised otherwise.
    """
    from .lyapunov import estimate_covariance, estimate_lyapunov

    if not 1e-4 <= t <= 1e-2:
        raise ValueError("t must lie in [1e-4, 1e-2]")
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if not log_scale:
        lyap = estimate_lyapunov(measure, n_steps, min(n_trajectories, 400), master_seed, workers=workers)
        proj = lyap.mean.coords @ spec.quotient_basis.T
        proj_se = np.sqrt((lyap.stderr**2) @ (spec.quotient_basis.T**2))
        if abs(e @ proj) > 4 * float(np.abs(e) @ proj_se):
            raise NotCentered(f"drift along e is {e @ proj:.4g}, not within 4 standard errors of 0")
    cov = estimate_covariance(measure, spec, n_steps, n_trajectories, master_seed, workers=workers)
    mc = float(e @ cov.matrix @ e)
    if log_scale:
        fd = log_lambda_second_derivative(measure, spec, e, t, n_points)
    else:
        lam = [_branch_eigenvalue(measure, s * t * e, spec, n_points) for s in (1, 0, -1)]
        fd = float(np.real(lam[0] - 2 * lam[1] + lam[2]) / t**2)
    return fd, mc


def circle_wasserstein(x_a, w_a, x_b, w_b, period: float = np.pi) -> float:
    """1-Wasserstein distance between two discrete measures on a circle of given period.

    Uses W1 = min_c integral |F_a - F_b - c|, the minimum attained at a weighted
    median of the CDF difference.
    """
    x_a = np.mod(np.asarray(x_a, dtype=float), period)
    x_b = np.mod(np.asarray(x_b, dtype=float), period)
    w_a = np.asarray(w_a, dtype=float) / np.sum(w_a)
    w_b = np.asarray(w_b, dtype=float) / np.sum(w_b)
    x = np.concatenate([x_a, x_b])
    w = np.concatenate([w_a, -w_b])
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    diff = np.cumsum(w)
    lengths = np.diff(np.append(x, period + x[0]))
    # the last interval wraps around to the first support point
    o = np.argsort(diff, kind="stable")
    cum = np.cumsum(lengths[o])
    c = diff[o][np.searchsorted(cum, cum[-1] / 2)]
    return float(np.sum(np.abs(diff - c) * lengths))
