"""Closed-form transport between location-scale families.

When source and target are affine images of one base distribution
(Gaussians being the canonical case), the optimal map is affine:
``x -> m_Q + A (x - m_P)`` with the symmetric positive definite matrix

    A = Sp^{-1/2} (Sp^{1/2} Sq Sp^{1/2})^{1/2} Sp^{-1/2},

where ``Sp``, ``Sq`` are the source and target covariances. The plug-in
estimator replaces moments by their empirical versions. The induced
potential is the quadratic ``0.5 x'Ax + b'x`` with
``b = m_Q - A m_P``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_samples, check_square_matrix
from .exceptions import RankDeficiencyError, UsageError
from .potentials import QuadraticPotential
from .semidual import EmpiricalPair

__all__ = [
    "LocationScaleEstimate",
    "empirical_moments",
    "spd_sqrt",
    "monge_matrix",
    "fit_location_scale",
]

_SYM_TOL = 1e-10
_EIG_TOL = -1e-10
_PD_GATE = 1e-10


def empirical_moments(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance of an (n, d) point cloud.

    The covariance uses the 1/n normalization, matching the plug-in
    view of the empirical measure. Requires n >= 2.
    """
    x = check_samples(samples, name="samples")
    if x.shape[0] < 2:
        raise UsageError("moment estimation needs at least 2 points")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    return mean, 0.5 * (cov + cov.T)


def _checked_eigh(s, name):
    s = check_square_matrix(s, name=name)
    if np.max(np.abs(s - s.T)) > _SYM_TOL:
        raise UsageError(f"{name} is not symmetric within {_SYM_TOL:.0e}")
    s = 0.5 * (s + s.T)
    w, v = np.linalg.eigh(s)
    if w[0] < _EIG_TOL:
        raise UsageError(
            f"{name} is indefinite (smallest eigenvalue {w[0]:.3e})"
        )
    return np.clip(w, 0.0, None), v


def spd_sqrt(s) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Rejects inputs that are asymmetric or indefinite beyond tolerance;
    eigenvalues in (-1e-10, 0) are clamped to zero.
    """
    w, v = _checked_eigh(s, "matrix")
    root = (v * np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T)


def monge_matrix(cov_source, cov_target) -> np.ndarray:
    """SPD matrix of the affine map between two covariances.

    Satisfies ``A cov_source A = cov_target``. The source covariance
    must be positive definite; a near-singular one raises
    :class:`RankDeficiencyError` suggesting ridge regularization.
    """
    wp, vp = _checked_eigh(cov_source, "cov_source")
    if wp[0] <= _PD_GATE:
        raise RankDeficiencyError(
            f"source covariance is rank deficient (smallest eigenvalue "
            f"{wp[0]:.3e}); add a ridge term to regularize"
        )
    _checked_eigh(cov_target, "cov_target")
    half = (vp * np.sqrt(wp)) @ vp.T
    inv_half = (vp / np.sqrt(wp)) @ vp.T
    inner = half @ np.asarray(cov_target, dtype=float) @ half
    mid = spd_sqrt(0.5 * (inner + inner.T))
    a = inv_half @ mid @ inv_half
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class LocationScaleEstimate:
    """Fitted affine transport between two samples.

    The map is ``x -> mean_target + matrix (x - mean_source)``; it is
    the gradient of :meth:`potential`.
    """

    mean_source: np.ndarray
    mean_target: np.ndarray
    cov_source: np.ndarray
    cov_target: np.ndarray
    matrix: np.ndarray

    def potential(self) -> QuadraticPotential:
        """Quadratic potential whose gradient is the fitted map."""
        shift = self.mean_target - self.matrix @ self.mean_source
        return QuadraticPotential(self.matrix, shift)

    def map(self, x) -> np.ndarray:
        """Apply the fitted map to points of shape (n, d) or (d,)."""
        return self.potential().grad(x)

    def to_dict(self) -> dict:
        return {
            "mean_source": self.mean_source.tolist(),
            "mean_target": self.mean_target.tolist(),
            "cov_source": self.cov_source.tolist(),
            "cov_target": self.cov_target.tolist(),
            "monge_matrix": self.matrix.tolist(),
        }


def fit_location_scale(data: EmpiricalPair, ridge: float = 0.0) -> LocationScaleEstimate:
    """Plug-in location-scale fit from a two-sample pair.

    Estimates means and covariances of both samples and assembles the
    affine transport. ``ridge`` adds ``ridge * I`` to both covariances
    before the matrix computation; the default 0 keeps the estimator
    exactly the plug-in.
    """
    if ridge < 0 or not np.isfinite(ridge):
        raise UsageError("ridge must be a nonnegative finite real")
    mean_p, cov_p = empirical_moments(data.source)
    mean_q, cov_q = empirical_moments(data.target)
    if ridge > 0:
        eye = np.eye(data.dim)
        cov_p = cov_p + ridge * eye
        cov_q = cov_q + ridge * eye
    a = monge_matrix(cov_p, cov_q)
    return LocationScaleEstimate(
        mean_source=mean_p, mean_target=mean_q,
        cov_source=cov_p, cov_target=cov_q, matrix=a,
    )
