"""Ground-truth experiment harness.

Generates source samples, pushes them through a known potential's
gradient to create targets, and measures estimators against the truth:
Monte Carlo squared map error in L2 of the source, the semidual excess
of a candidate over the truth, two-sided stability checks relating the
two, and rate-versus-sample-size sweeps.

All randomness flows through a counter-based generator keyed by
``(seed, stream)`` so that every sample is replayable bit for bit and
distinct roles (source draw, target draw, evaluation draw) use disjoint
substreams.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ._validation import check_square_matrix, check_vector
from .conjugate import OracleConfig, conjugate_batch
from .exceptions import NotStronglyConvexError, UsageError
from .location_scale import fit_location_scale, spd_sqrt
from .potentials import MixturePotential, Potential, QuadraticPotential, probe_convexity
from .semidual import EmpiricalPair, pgd_fit, select_finite

__all__ = [
    "GaussianSource",
    "UniformCubeSource",
    "ExperimentSpec",
    "StabilityReport",
    "SweepRow",
    "SWEEP_COLUMNS",
    "substream",
    "sample_source",
    "pushforward",
    "mc_map_error",
    "semidual_excess",
    "stability_check",
    "rate_sweep",
    "sphere_grid",
    "random_quadratic",
]

# Substream roles within one sweep cell.
STREAM_SOURCE = 0
STREAM_TARGET = 1
STREAM_EVAL = 2

SWEEP_COLUMNS = (
    "n", "replicate", "estimator",
    "map_error", "map_error_se", "excess", "excess_se", "wall_ms",
)


@dataclass(frozen=True)
class GaussianSource:
    """Gaussian source with the given mean and PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = check_vector(self.mean, name="mean")
        cov = check_square_matrix(self.cov, name="cov")
        if cov.shape[0] != mean.shape[0]:
            raise UsageError("gaussian mean and cov dimensions disagree")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_root", spd_sqrt(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._root

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "mean": self.mean.tolist(),
                "cov": self.cov.tolist()}


@dataclass(frozen=True)
class UniformCubeSource:
    """Uniform distribution on the centered cube [-radius, radius]^dim."""

    radius: float
    dim: int

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise UsageError("cube radius must be positive")
        if int(self.dim) < 1:
            raise UsageError("cube dimension must be at least 1")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-self.radius, self.radius, size=(n, self.dim))

    def to_dict(self) -> dict:
        return {"kind": "uniform_cube", "radius": self.radius, "dim": self.dim}


@dataclass(frozen=True)
class ExperimentSpec:
    """A ground-truth experiment: source law, true potential, sizes, seed.

    ``eval_points`` is the Monte Carlo size for population integrals
    (map error, semidual excess). Sample sizes must increase strictly;
    the truth must pass a convexity probe.
    """

    source: GaussianSource | UniformCubeSource
    truth: Potential
    sample_sizes: tuple[int, ...] = (1000,)
    replicates: int = 1
    seed: int = 0
    eval_points: int = 10_000

    def __post_init__(self):
        if not isinstance(self.source, (GaussianSource, UniformCubeSource)):
            raise UsageError("unknown source kind")
        if not isinstance(self.truth, Potential):
            raise UsageError("truth must be a Potential")
        if self.truth.dim != self.source.dim:
            raise UsageError("truth and source dimensions disagree")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise UsageError("sample sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise UsageError("sample sizes must be strictly increasing")
        object.__setattr__(self, "sample_sizes", sizes)
        if int(self.replicates) < 1:
            raise UsageError("replicates must be at least 1")
        if int(self.eval_points) < 2:
            raise UsageError("eval_points must be at least 2")
        if not probe_convexity(self.truth):
            raise UsageError("truth potential failed the convexity probe")


def substream(seed: int, stream) -> np.random.Generator:
    """Counter-based generator for one (seed, stream) pair.

    ``stream`` is an int or tuple of ints; distinct streams are
    statistically independent and replayable.
    """
    if isinstance(stream, (int, np.integer)):
        stream = (int(stream),)
    key = np.random.SeedSequence(entropy=int(seed),
                                 spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(key))


def sample_source(spec: ExperimentSpec, n: int, stream) -> np.ndarray:
    """Draw n points from the experiment's source on one substream."""
    if int(n) < 1:
        raise UsageError("sample size must be at least 1")
    rng = substream(spec.seed, stream)
    return spec.source.sample(rng, int(n))


def pushforward(samples, p: Potential) -> np.ndarray:
    """Apply the potential's gradient map to every row."""
    return p.grad(np.asarray(samples, dtype=float))


def _map_of(estimate):
    if isinstance(estimate, Potential):
        return estimate.grad
    if callable(estimate):
        return estimate
    raise UsageError("estimate must be a Potential or a callable map")


def _pointwise_map_gap(estimate, truth, z):
    gap = _map_of(estimate)(z) - truth.grad(z)
    return np.sum(gap**2, axis=1)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = values.shape[0]
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(m))


def mc_map_error(estimate, truth: Potential, spec: ExperimentSpec,
                 stream=(STREAM_EVAL,)) -> tuple[float, float]:
    """Monte Carlo squared map error in L2 of the source.

    Averages ``||T_hat(Z) - T_true(Z)||^2`` over ``spec.eval_points``
    fresh source draws; returns the estimate and its standard error.
    ``estimate`` may be a potential (its gradient is the map) or a
    callable acting on (n, d) arrays.
    """
    z = sample_source(spec, spec.eval_points, stream)
    return _mean_se(_pointwise_map_gap(estimate, truth, z))


def _pointwise_excess(candidate, truth, z, cfg):
    push = truth.grad(z)
    batch = conjugate_batch(candidate, push, cfg)
    return candidate.value(z) + batch.values - np.sum(z * push, axis=1)


def semidual_excess(candidate: Potential, truth: Potential, spec: ExperimentSpec,
                    stream=(STREAM_EVAL,),
                    cfg: OracleConfig | None = None) -> tuple[float, float]:
    """Monte Carlo semidual excess of a candidate over the truth.

    Uses the identity that the truth's semidual equals the mean of
    ``<x, T_true(x)>``, so the excess integrand is
    ``phi(Z) + phi*(T_true(Z)) - <Z, T_true(Z)>``, which is pointwise
    nonnegative by Fenchel-Young.
    """
    z = sample_source(spec, spec.eval_points, stream)
    return _mean_se(_pointwise_excess(candidate, truth, z, cfg))


@dataclass(frozen=True)
class StabilityReport:
    """Two-sided check relating semidual excess and squared map error.

    With strong-convexity constant ``alpha`` and smoothness ``beta`` of
    the candidate, the excess is sandwiched:
    ``map_error/(2 beta) <= excess <= map_error/(2 alpha)``. Flags carry
    a Monte Carlo slack of three standard errors of the corresponding
    pointwise difference; ``mc_margin`` is the larger of the two slacks.
    """

    excess: float
    excess_se: float
    map_error: float
    map_error_se: float
    alpha: float
    beta: float
    lower_ok: bool
    upper_ok: bool
    lower_margin: float
    upper_margin: float

    @property
    def mc_margin(self) -> float:
        return max(self.lower_margin, self.upper_margin)

    def to_dict(self) -> dict:
        return {
            "excess": self.excess,
            "excess_se": self.excess_se,
            "map_error": self.map_error,
            "map_error_se": self.map_error_se,
            "alpha": self.alpha,
            "beta": self.beta,
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "mc_margin": self.mc_margin,
        }


def stability_check(candidate: Potential, truth: Potential, spec: ExperimentSpec,
                    stream=(STREAM_EVAL,),
                    cfg: OracleConfig | None = None) -> StabilityReport:
    """Verify the excess / map-error sandwich on shared Monte Carlo draws.

    The candidate must be strongly convex with growth exponent 0; the
    truth must be convex and smooth. Both inequalities are evaluated on
    the same evaluation sample so each slack is three standard errors of
    the pointwise difference statistic.
    """
    cert1 = candidate.certificate()
    if cert1.alpha <= 0.0:
        raise NotStronglyConvexError(
            "stability check requires a strongly convex candidate"
        )
    cert0 = truth.certificate()
    if cert1.a != 0.0 or cert0.a != 0.0:
        raise UsageError("stability check requires growth exponent 0")
    z = sample_source(spec, spec.eval_points, stream)
    excess_pts = _pointwise_excess(candidate, truth, z, cfg)
    gap_pts = _pointwise_map_gap(candidate, truth, z)
    excess, excess_se = _mean_se(excess_pts)
    gap, gap_se = _mean_se(gap_pts)
    alpha, beta = cert1.alpha, cert1.beta

    lower_stat, lower_se = _mean_se(excess_pts - gap_pts / (2.0 * alpha))
    upper_stat, upper_se = _mean_se(gap_pts - 2.0 * beta * excess_pts)
    # absolute floor absorbs float rounding when the pointwise
    # inequality is tight (e.g. isotropic quadratics)
    lower_floor = 1e-12 * (1.0 + abs(excess) + gap / (2.0 * alpha))
    upper_floor = 1e-12 * (1.0 + gap + 2.0 * beta * abs(excess))
    lower_margin = 3.0 * lower_se + lower_floor
    upper_margin = 3.0 * upper_se + upper_floor
    return StabilityReport(
        excess=excess, excess_se=excess_se,
        map_error=gap, map_error_se=gap_se,
        alpha=alpha, beta=beta,
        lower_ok=bool(lower_stat <= lower_margin),
        upper_ok=bool(upper_stat <= upper_margin),
        lower_margin=lower_margin, upper_margin=upper_margin,
    )


@dataclass(frozen=True)
class SweepRow:
    """One cell of a rate sweep."""

    n: int
    replicate: int
    estimator: str
    map_error: float
    map_error_se: float
    excess: float
    excess_se: float
    wall_ms: float

    def as_tuple(self):
        return (self.n, self.replicate, self.estimator, self.map_error,
                self.map_error_se, self.excess, self.excess_se, self.wall_ms)


def _fit_cell(estimator: str, pair: EmpiricalPair, args: dict,
              cfg: OracleConfig) -> Potential:
    if estimator == "location_scale":
        return fit_location_scale(pair, ridge=args.get("ridge", 0.0)).potential()
    if estimator == "finite_select":
        candidates = args.get("candidates")
        if not candidates:
            raise UsageError("finite_select sweep needs 'candidates'")
        index, _ = select_finite(candidates, pair, cfg)
        return candidates[index]
    if estimator == "pgd_dictionary":
        atoms = args.get("atoms")
        if not atoms:
            raise UsageError("pgd_dictionary sweep needs 'atoms'")
        report = pgd_fit(atoms, pair, step=args.get("step"),
                         max_iter=args.get("max_iter", 500), cfg=cfg)
        return MixturePotential(atoms, report.weights)
    raise UsageError(f"unknown estimator {estimator!r}")


def rate_sweep(spec: ExperimentSpec, estimator: str,
               estimator_args: dict | None = None,
               cfg: OracleConfig | None = None,
               measure_time: bool = False) -> list[SweepRow]:
    """Fit an estimator across sample sizes and replicates.

    Per cell: a source sample, an independent source sample pushed
    through the truth as the target, a fit, then Monte Carlo map error
    and semidual excess on a third, disjoint substream. Rows come out in
    (n, replicate) order and, given the seed, are bit-reproducible.

    Timing is off by default so that emitted tables are deterministic;
    pass ``measure_time=True`` to fill ``wall_ms`` with measured wall
    clock milliseconds (at the cost of run-to-run byte stability).
    """
    args = dict(estimator_args or {})
    cfg = cfg or OracleConfig()
    rows = []
    for i_n, n in enumerate(spec.sample_sizes):
        for rep in range(spec.replicates):
            start = time.perf_counter()
            x = sample_source(spec, n, (i_n, rep, STREAM_SOURCE))
            x_prime = sample_source(spec, n, (i_n, rep, STREAM_TARGET))
            pair = EmpiricalPair(x, pushforward(x_prime, spec.truth))
            fitted = _fit_cell(estimator, pair, args, cfg)
            eval_stream = (i_n, rep, STREAM_EVAL)
            err, err_se = mc_map_error(fitted, spec.truth, spec, eval_stream)
            exc, exc_se = semidual_excess(fitted, spec.truth, spec,
                                          eval_stream, cfg)
            elapsed = (time.perf_counter() - start) * 1e3 if measure_time else 0.0
            rows.append(SweepRow(
                n=n, replicate=rep, estimator=estimator,
                map_error=err, map_error_se=err_se,
                excess=exc, excess_se=exc_se, wall_ms=elapsed,
            ))
    return rows


def sphere_grid(n_points: int, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform grid of unit vectors.

    Normalized Gaussian draws from a fixed substream; adequate for
    brute-force direction search in low dimension.
    """
    if n_points < 1:
        raise UsageError("sphere grid needs at least one point")
    if dim < 1:
        raise UsageError("sphere grid dimension must be at least 1")
    rng = substream(seed, (0xD1, dim, n_points))
    pts = rng.standard_normal((n_points, dim))
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return pts / norms


def random_quadratic(rng: np.random.Generator, dim: int,
                     eig_low: float = 0.5, eig_high: float = 2.5,
                     shift_scale: float = 1.0) -> QuadraticPotential:
    """Random strongly convex quadratic with eigenvalues in a window.

    Draws a Haar-ish orthogonal frame from a QR factorization, uniform
    eigenvalues in [eig_low, eig_high], and a Gaussian linear term.
    """
    if eig_low <= 0 or eig_high < eig_low:
        raise UsageError("need 0 < eig_low <= eig_high")
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eigs = rng.uniform(eig_low, eig_high, size=dim)
    matrix = (q * eigs) @ q.T
    shift = shift_scale * rng.standard_normal(dim)
    return QuadraticPotential(0.5 * (matrix + matrix.T), shift)
