"""scikit-learn style estimators over finitely supported measures on SL(d, R).

The "data" ``X`` of every estimator is the support of the measure, an array
of shape (m, d, d); ``sample_weight`` carries the atom weights.  Fitting runs
the Monte Carlo or grid computation; fitted attributes end in an underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .classify import DEFAULT_Z, Verdict, classify
from .decomp import FlagPoint, cartan_projection, iwasawa_cocycle
from .lyapunov import estimate_covariance, estimate_lyapunov
from .subgroup import SubgroupSpec
from .transfer import DEFAULT_POINTS, DEFAULT_TOL, leading_eigen, stationary_measure
from .validation import check_matrices, check_positive_int, check_seed, measure_from_arrays


class IwasawaTransformer(TransformerMixin, BaseEstimator):
    """Map each matrix g to the Iwasawa cocycle sigma(g, flag).

    Parameters
    ----------
    flag : FlagPoint or None
        Starting flag; the standard flag when None.
    """

    def __init__(self, flag=None):
        self.flag = flag

    def fit(self, X, y=None):
        X = check_matrices(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_matrices(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"fitted on d = {self.n_features_in_}, got d = {X.shape[1]}")
        eta = self.flag if self.flag is not None else FlagPoint.base(X.shape[1])
        return np.array([iwasawa_cocycle(g, eta)[0].coords for g in X])


class CartanProjector(TransformerMixin, BaseEstimator):
    """Map each matrix to its Cartan projection (sorted log singular values)."""

    def fit(self, X, y=None):
        X = check_matrices(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_matrices(X)
        return np.array([cartan_projection(g).coords for g in X])


class LyapunovEstimator(BaseEstimator):
    """Monte Carlo estimate of the Lyapunov vector of the measure with support ``X``.

    Parameters
    ----------
    n_steps, n_trajectories : int
    random_state : int or None
        Master seed of the per-trajectory streams.
    symmetrize : bool
        Randomly signed increments (synthetic centered walk).
    workers : int

    Attributes
    ----------
    lyapunov_vector_ : ndarray of shape (d,)
    stderr_ : ndarray of shape (d,)
    estimate_ : LyapunovEstimate
    measure_ : FiniteMeasure
    """

    def __init__(self, n_steps=10_000, n_trajectories=200, random_state=None, symmetrize=False, workers=1):
        self.n_steps = n_steps
        self.n_trajectories = n_trajectories
        self.random_state = random_state
        self.symmetrize = symmetrize
        self.workers = workers

    def fit(self, X, y=None, sample_weight=None):
        self.measure_ = measure_from_arrays(X, sample_weight)
        self.estimate_ = estimate_lyapunov(
            self.measure_,
            check_positive_int(self.n_steps, "n_steps"),
            check_positive_int(self.n_trajectories, "n_trajectories"),
            check_seed(self.random_state),
            workers=check_positive_int(self.workers, "workers"),
            symmetrize=bool(self.symmetrize),
        )
        self.lyapunov_vector_ = self.estimate_.mean.coords.copy()
        self.stderr_ = self.estimate_.stderr.copy()
        return self


class CocycleCovariance(BaseEstimator):
    """Covariance of the normalized projected cocycle on E = a / a'.

    Attributes
    ----------
    covariance_ : ndarray of shape (codim, codim)
    drift_ : ndarray of shape (codim,)
    """

    def __init__(self, spec=None, n_steps=2000, n_trajectories=2000, random_state=None, workers=1):
        self.spec = spec
        self.n_steps = n_steps
        self.n_trajectories = n_trajectories
        self.random_state = random_state
        self.workers = workers

    def fit(self, X, y=None, sample_weight=None):
        self.measure_ = measure_from_arrays(X, sample_weight)
        spec = self.spec if self.spec is not None else SubgroupSpec(self.measure_.dim, np.zeros((0, self.measure_.dim)))
        est = estimate_covariance(
            self.measure_,
            spec,
            check_positive_int(self.n_steps, "n_steps"),
            check_positive_int(self.n_trajectories, "n_trajectories", 2),
            check_seed(self.random_state),
            workers=check_positive_int(self.workers, "workers"),
        )
        self.covariance_ = est.matrix
        self.drift_ = np.asarray(est.drift)
        return self


class RecurrenceClassifier(BaseEstimator):
    """Recurrence verdicts for homogeneous spaces G / H of one measure.

    ``fit`` estimates the Lyapunov vector of the measure with support ``X``;
    ``predict`` takes a sequence of :class:`SubgroupSpec` and returns the
    verdict kinds ("Recurrent", "Transient", "Indeterminate").
    """

    def __init__(self, n_steps=10_000, n_trajectories=200, z=DEFAULT_Z, random_state=None, symmetrize=False, workers=1):
        self.n_steps = n_steps
        self.n_trajectories = n_trajectories
        self.z = z
        self.random_state = random_state
        self.symmetrize = symmetrize
        self.workers = workers

    def fit(self, X, y=None, sample_weight=None):
        lyap = LyapunovEstimator(
            self.n_steps, self.n_trajectories, self.random_state, self.symmetrize, self.workers
        ).fit(X, sample_weight=sample_weight)
        self.measure_ = lyap.measure_
        self.lyapunov_ = lyap.estimate_
        return self

    def verdicts(self, specs) -> list[Verdict]:
        check_is_fitted(self, "lyapunov_")
        if isinstance(specs, SubgroupSpec):
            specs = [specs]
        return [classify(s, self.lyapunov_, self.z) for s in specs]

    def predict(self, specs) -> np.ndarray:
        return np.array([v.kind.value for v in self.verdicts(specs)])


class TransferSpectrum(BaseEstimator):
    """Leading eigenvalues of the grid transfer operators of a measure on SL(2, R).

    Attributes
    ----------
    stationary_measure_ : ndarray of shape (n_points,)
        Grid weights of the stationary measure.
    """

    def __init__(self, spec=None, n_points=DEFAULT_POINTS, tol=DEFAULT_TOL):
        self.spec = spec
        self.n_points = n_points
        self.tol = tol

    def fit(self, X, y=None, sample_weight=None):
        self.measure_ = measure_from_arrays(X, sample_weight)
        self.spec_ = self.spec if self.spec is not None else SubgroupSpec(2, np.zeros((0, 2)))
        self.stationary_measure_ = stationary_measure(self.measure_, self.n_points)
        return self

    def eigen(self, theta):
        check_is_fitted(self, "stationary_measure_")
        return leading_eigen(self.measure_, theta, self.spec_, self.n_points, self.tol)

    def predict(self, thetas) -> np.ndarray:
        """Leading eigenvalue lambda_theta for each covector in ``thetas``."""
        return np.array([self.eigen(t).eigenvalue for t in np.atleast_1d(np.asarray(thetas, dtype=complex))])
