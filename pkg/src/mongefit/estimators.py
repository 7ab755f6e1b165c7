"""Scikit-learn style estimators wrapping the core fitting routines.

Each estimator consumes two unpaired samples, ``X`` from the source and
``Y`` from the target, and fits a transport map; ``transform`` applies
the fitted map to new source points. All estimators expose the fitted
potential as ``potential_`` so library users can drop down to the
functional API (conjugation, semidual values, diagnostics).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .conjugate import OracleConfig, conjugate_batch
from .exceptions import UsageError
from .location_scale import fit_location_scale
from .potentials import MixturePotential, QuadraticProfile, SpikedPotential
from .semidual import EmpiricalPair, pgd_fit, select_finite
from .synthetic import sphere_grid

__all__ = [
    "LocationScaleTransport",
    "DictionaryTransport",
    "FiniteSelectionTransport",
    "SpikedTransport",
]


def _pair(X, Y) -> EmpiricalPair:
    X = check_array(X, ensure_2d=True, dtype=float)
    Y = check_array(Y, ensure_2d=True, dtype=float)
    return EmpiricalPair(X, Y)


class _TransportMixin(TransformerMixin):
    """Shared transform path: apply the fitted potential's gradient."""

    def transform(self, X):
        check_is_fitted(self, "potential_")
        X = check_array(X, ensure_2d=True, dtype=float)
        return self.potential_.grad(X)


class LocationScaleTransport(_TransportMixin, BaseEstimator):
    """Closed-form affine transport between location-scale samples.

    Parameters
    ----------
    ridge : float, default=0.0
        Optional ridge added to both empirical covariances before the
        transport matrix is formed; keep 0 for the exact plug-in.

    Attributes
    ----------
    estimate_ : LocationScaleEstimate
        Fitted moments and transport matrix.
    potential_ : QuadraticPotential
        Quadratic potential whose gradient is the fitted map.
    """

    def __init__(self, ridge: float = 0.0):
        self.ridge = ridge

    def fit(self, X, Y):
        self.estimate_ = fit_location_scale(_pair(X, Y), ridge=self.ridge)
        self.potential_ = self.estimate_.potential()
        return self

    def inverse_transform(self, Y):
        """Map target points back through the inverse affine transport."""
        check_is_fitted(self, "estimate_")
        Y = check_array(Y, ensure_2d=True, dtype=float)
        est = self.estimate_
        back = np.linalg.solve(est.matrix, (Y - est.mean_target).T).T
        return est.mean_source + back


class DictionaryTransport(_TransportMixin, BaseEstimator):
    """Transport fitted as a convex mixture over a potential dictionary.

    Minimizes the empirical semidual over simplex weights by projected
    gradient descent; the atoms must be strongly convex.

    Parameters
    ----------
    atoms : sequence of Potential
        Dictionary of candidate potentials.
    step : float, optional
        Fixed step size; when None, half the inverse of an empirical
        smoothness estimate is used.
    max_iter : int, default=500
    tolerance : float, default=1e-8
        Conjugate oracle residual tolerance.
    oracle_max_iterations : int, default=10_000

    Attributes
    ----------
    weights_ : ndarray of shape (n_atoms,)
    report_ : SemidualFitReport
    potential_ : MixturePotential
    """

    def __init__(self, atoms, step=None, max_iter: int = 500,
                 tolerance: float = 1e-8, oracle_max_iterations: int = 10_000):
        self.atoms = atoms
        self.step = step
        self.max_iter = max_iter
        self.tolerance = tolerance
        self.oracle_max_iterations = oracle_max_iterations

    def _oracle(self) -> OracleConfig:
        return OracleConfig(tolerance=self.tolerance,
                            max_iterations=self.oracle_max_iterations)

    def fit(self, X, Y):
        report = pgd_fit(self.atoms, _pair(X, Y), step=self.step,
                         max_iter=self.max_iter, cfg=self._oracle())
        self.report_ = report
        self.weights_ = report.weights
        self.potential_ = MixturePotential(list(self.atoms), report.weights)
        return self


class FiniteSelectionTransport(_TransportMixin, BaseEstimator):
    """Transport selected from a finite list of candidate potentials.

    Evaluates the empirical semidual of every candidate and keeps the
    minimizer (ties go to the lowest index).

    Attributes
    ----------
    best_index_ : int
    semidual_values_ : list of float
    potential_ : Potential
    """

    def __init__(self, candidates, tolerance: float = 1e-8,
                 oracle_max_iterations: int = 10_000):
        self.candidates = candidates
        self.tolerance = tolerance
        self.oracle_max_iterations = oracle_max_iterations

    def fit(self, X, Y):
        cfg = OracleConfig(tolerance=self.tolerance,
                           max_iterations=self.oracle_max_iterations)
        index, values = select_finite(self.candidates, _pair(X, Y), cfg)
        self.best_index_ = index
        self.semidual_values_ = values
        self.potential_ = list(self.candidates)[index]
        return self


class SpikedTransport(_TransportMixin, BaseEstimator):
    """Single-direction transport found by brute-force direction search.

    Assumes the two samples differ only along one direction, with a
    one-dimensional affine map there and the identity orthogonally. For
    every direction on a deterministic sphere grid, a 1-d location-scale
    profile is fitted on the projections and the direction minimizing
    the empirical semidual wins. Exhaustive search is only viable in low
    dimension; fitting is limited to d <= 8.

    Parameters
    ----------
    n_directions : int, default=800
        Size of the sphere grid.
    grid_seed : int, default=0
        Seed of the deterministic grid.

    Attributes
    ----------
    direction_ : ndarray of shape (d,)
    profile_ : QuadraticProfile
    semidual_value_ : float
    potential_ : SpikedPotential
    """

    _MAX_DIM = 8

    def __init__(self, n_directions: int = 800, grid_seed: int = 0,
                 tolerance: float = 1e-8, oracle_max_iterations: int = 10_000):
        self.n_directions = n_directions
        self.grid_seed = grid_seed
        self.tolerance = tolerance
        self.oracle_max_iterations = oracle_max_iterations

    def fit(self, X, Y):
        pair = _pair(X, Y)
        if pair.dim > self._MAX_DIM:
            raise UsageError(
                f"brute-force direction search is limited to dimension "
                f"{self._MAX_DIM}, got {pair.dim}"
            )
        if pair.source.shape[0] < 2 or pair.target.shape[0] < 2:
            raise UsageError("direction search needs at least 2 points per sample")
        cfg = OracleConfig(tolerance=self.tolerance,
                           max_iterations=self.oracle_max_iterations)
        grid = sphere_grid(self.n_directions, pair.dim, seed=self.grid_seed)
        src_sq = np.sum(pair.source**2, axis=1)
        best = None
        for u in grid:
            candidate = self._candidate(pair, u)
            if candidate is None:
                continue
            value = self._semidual(candidate, pair, src_sq, cfg)
            if best is None or value < best[0]:
                best = (value, candidate)
        if best is None:
            raise UsageError(
                "no feasible direction: projections are degenerate along "
                "every grid direction"
            )
        self.semidual_value_ = best[0]
        self.potential_ = best[1]
        self.direction_ = best[1].direction
        self.profile_ = best[1].profile
        return self

    @staticmethod
    def _candidate(pair, u):
        """1-d location-scale profile along one direction, or None."""
        t_src = pair.source @ u
        t_tgt = pair.target @ u
        spread_src = t_src.std()
        spread_tgt = t_tgt.std()
        if spread_src <= 1e-12 or spread_tgt <= 1e-12:
            return None
        curvature = spread_tgt / spread_src
        shift = t_tgt.mean() - curvature * t_src.mean()
        return SpikedPotential(u, QuadraticProfile(curvature, shift))

    @staticmethod
    def _semidual(candidate, pair, src_sq, cfg):
        # Inline the source term to reuse the cached squared norms; the
        # conjugate term goes through the standard batch oracle.
        t = pair.source @ candidate.direction
        source_term = np.mean(candidate.profile.value(t) + 0.5 * (src_sq - t**2))
        batch = conjugate_batch(candidate, pair.target, cfg)
        return float(source_term + np.mean(batch.values))
