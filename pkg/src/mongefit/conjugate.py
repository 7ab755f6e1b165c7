"""Convex conjugation oracles.

The conjugate ``phi*(y) = sup_x <x, y> - phi(x)`` is evaluated in
closed form for positive definite quadratics and by gradient ascent for
general smooth, strongly convex potentials. Ascent uses the fixed step
``1/beta`` from the potential's certificate and stops on the gradient
residual ``||y - grad(x)||``, which bounds the value error by
``residual^2 / alpha`` without knowing the true conjugate.

Conjugation of a potential without a positive strong-convexity
certificate is rejected: without curvature the inner maximization is a
general nonconvex search with no finite-time guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_samples, check_vector
from .exceptions import ConvergenceError, NotStronglyConvexError, UsageError
from .potentials import (
    MixturePotential,
    Potential,
    QuadraticPotential,
    SpikedPotential,
)

__all__ = [
    "OracleConfig",
    "ConjugateSolution",
    "ConjugateBatch",
    "conjugate_quadratic",
    "conjugate_iterative",
    "conjugate_batch",
]


@dataclass(frozen=True)
class OracleConfig:
    """Settings for the iterative conjugate oracle.

    ``tolerance`` bounds the gradient residual at acceptance;
    ``warm_start`` seeds the ascent with a single point (d,) or one
    point per query (n, d) in batch mode.
    """

    tolerance: float = 1e-8
    max_iterations: int = 10_000
    warm_start: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not np.isfinite(self.tolerance) or self.tolerance <= 0:
            raise UsageError("oracle tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise UsageError("oracle max_iterations must be at least 1")


@dataclass(frozen=True)
class ConjugateSolution:
    """One conjugation query: value, maximizer and diagnostics.

    The value satisfies the Fenchel-Young identity
    ``value = <argmax, y> - phi(argmax)`` by construction; ``residual``
    is ``||grad(argmax) - y||``.
    """

    value: float
    argmax: np.ndarray
    iterations: int
    residual: float


class ConjugateBatch:
    """Conjugate solutions for a batch of queries, stored columnwise.

    Behaves as a sequence of :class:`ConjugateSolution` while exposing
    the underlying arrays (``values``, ``argmax``, ``iterations``,
    ``residuals``) for vectorized consumers.
    """

    def __init__(self, values, argmax, iterations, residuals):
        self.values = np.asarray(values, dtype=float)
        self.argmax = np.asarray(argmax, dtype=float)
        self.iterations = np.asarray(iterations, dtype=int)
        self.residuals = np.asarray(residuals, dtype=float)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i) -> ConjugateSolution:
        return ConjugateSolution(
            value=float(self.values[i]),
            argmax=self.argmax[i],
            iterations=int(self.iterations[i]),
            residual=float(self.residuals[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def _require_strongly_convex(p: Potential) -> tuple[float, float]:
    cert = p.certificate()
    if cert.alpha <= 0.0:
        raise NotStronglyConvexError(
            "conjugation requires a positive strong-convexity certificate"
        )
    if cert.a != 0.0:
        raise NotStronglyConvexError(
            "conjugation supports growth exponent 0 only"
        )
    return cert.alpha, cert.beta


def conjugate_quadratic(p: QuadraticPotential, y) -> ConjugateSolution:
    """Closed-form conjugate of a positive definite quadratic.

    Solves ``A x = y - b`` and evaluates the Fenchel-Young identity at
    the solution; equals ``0.5 (y-b)' A^{-1} (y-b)``.
    """
    if not isinstance(p, QuadraticPotential):
        raise UsageError("conjugate_quadratic expects a QuadraticPotential")
    _require_strongly_convex(p)
    yv = check_vector(y, dim=p.dim, name="y")
    x = np.linalg.solve(p.matrix, yv - p.shift)
    value = float(x @ yv - p.value(x))
    residual = float(np.linalg.norm(p.grad(x) - yv))
    return ConjugateSolution(value=value, argmax=x, iterations=0, residual=residual)


def conjugate_iterative(p: Potential, y, cfg: OracleConfig | None = None) -> ConjugateSolution:
    """Conjugate by gradient ascent on ``x -> <x, y> - phi(x)``.

    Starts from ``cfg.warm_start`` (or the origin), steps by ``1/beta``
    and stops when the residual ``||y - grad(x)||`` drops below
    ``cfg.tolerance``. Raises :class:`ConvergenceError` carrying the
    last iterate when the iteration cap is hit first.
    """
    cfg = cfg or OracleConfig()
    alpha, beta = _require_strongly_convex(p)
    yv = check_vector(y, dim=p.dim, name="y")
    if cfg.warm_start is not None:
        x = check_vector(np.asarray(cfg.warm_start).reshape(-1), dim=p.dim,
                         name="warm_start").copy()
    else:
        x = np.zeros(p.dim)
    step = 1.0 / beta
    for k in range(cfg.max_iterations + 1):
        r = yv - p.grad(x)
        res = float(np.linalg.norm(r))
        if res <= cfg.tolerance:
            value = float(x @ yv - p.value(x))
            return ConjugateSolution(value=value, argmax=x, iterations=k, residual=res)
        if k == cfg.max_iterations:
            break
        x = x + step * r
    raise ConvergenceError(
        f"conjugate oracle did not reach tolerance {cfg.tolerance:.1e} in "
        f"{cfg.max_iterations} iterations (residual {res:.3e})",
        last_iterate=x,
        residual=res,
    )


def _as_quadratic(p: Potential) -> QuadraticPotential | None:
    """Collapse to an equivalent quadratic when the family allows it.

    Mixtures of quadratics are quadratics with the weighted curvature
    matrix and shift; nesting is collapsed recursively.
    """
    if isinstance(p, QuadraticPotential):
        return p
    if isinstance(p, MixturePotential):
        parts = [_as_quadratic(a) for a in p.atoms]
        if all(q is not None for q in parts):
            matrix = sum(w * q.matrix for w, q in zip(p.weights, parts))
            shift = sum(w * q.shift for w, q in zip(p.weights, parts))
            return QuadraticPotential(matrix, shift)
    return None


def _analytic_batch(p: Potential, ys: np.ndarray) -> ConjugateBatch | None:
    """Closed-form batch conjugation where a formula is available.

    Quadratics (including quadratic mixtures) invert the linear
    gradient; spiked potentials conjugate the 1-d profile along the
    direction and the identity orthogonally. Returns None when no
    closed form applies.
    """
    quad = _as_quadratic(p)
    if quad is not None:
        xs = np.linalg.solve(quad.matrix, (ys - quad.shift).T).T
        values = np.sum(xs * ys, axis=1) - quad.value(xs)
        residuals = np.linalg.norm(quad.grad(xs) - ys, axis=1)
        return ConjugateBatch(values, xs, np.zeros(len(ys), dtype=int), residuals)
    if isinstance(p, SpikedPotential):
        u = p.direction
        c, s = p.profile.curvature, p.profile.shift
        t = ys @ u
        xs = ys + np.outer((t - s) / c - t, u)
        values = np.sum(xs * ys, axis=1) - p.value(xs)
        residuals = np.linalg.norm(p.grad(xs) - ys, axis=1)
        return ConjugateBatch(values, xs, np.zeros(len(ys), dtype=int), residuals)
    return None


def _iterative_batch(p: Potential, ys: np.ndarray, cfg: OracleConfig) -> ConjugateBatch:
    """Vectorized gradient ascent over all queries with per-row freezing.

    Each row follows exactly the update sequence of
    :func:`conjugate_iterative` from the same start and is frozen at its
    first accepted iterate.
    """
    _, beta = _require_strongly_convex(p)
    n, d = ys.shape
    if cfg.warm_start is not None:
        ws = np.asarray(cfg.warm_start, dtype=float)
        xs = np.broadcast_to(ws, (n, d)).astype(float).copy()
    else:
        xs = np.zeros((n, d))
    step = 1.0 / beta
    iterations = np.zeros(n, dtype=int)
    residuals = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    for k in range(cfg.max_iterations + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        r = ys[idx] - p.grad(xs[idx])
        res = np.linalg.norm(r, axis=1)
        done = res <= cfg.tolerance
        done_idx = idx[done]
        iterations[done_idx] = k
        residuals[done_idx] = res[done]
        active[done_idx] = False
        if k == cfg.max_iterations:
            residuals[idx[~done]] = res[~done]
            break
        move = idx[~done]
        xs[move] += step * r[~done]
    if active.any():
        first = int(np.flatnonzero(active)[0])
        raise ConvergenceError(
            f"batch conjugate query {first} did not converge "
            f"(residual {residuals[first]:.3e})",
            last_iterate=xs[first],
            residual=float(residuals[first]),
            index=first,
        )
    values = np.sum(xs * ys, axis=1) - p.value(xs)
    return ConjugateBatch(values, xs, iterations, residuals)


def conjugate_batch(p: Potential, ys, cfg: OracleConfig | None = None,
                    chain: bool = False) -> ConjugateBatch:
    """Conjugate a potential at every row of ``ys``.

    Uses the closed form when one exists, otherwise vectorized ascent.
    With ``chain=True`` queries are processed in ascending lexicographic
    order, each warm-started at the previous maximizer; results agree
    with the unchained path up to the oracle tolerance.
    """
    cfg = cfg or OracleConfig()
    _require_strongly_convex(p)
    ys = check_samples(ys, dim=p.dim, name="ys")
    analytic = _analytic_batch(p, ys)
    if analytic is not None:
        return analytic
    if not chain:
        return _iterative_batch(p, ys, cfg)
    order = np.lexsort(ys.T[::-1])
    values = np.empty(len(ys))
    argmax = np.empty_like(ys)
    iterations = np.empty(len(ys), dtype=int)
    residuals = np.empty(len(ys))
    warm = cfg.warm_start
    for j, i in enumerate(order):
        try:
            sol = conjugate_iterative(
                p, ys[i],
                OracleConfig(cfg.tolerance, cfg.max_iterations, warm_start=warm),
            )
        except ConvergenceError as err:
            err.index = int(i)
            raise
        values[i] = sol.value
        argmax[i] = sol.argmax
        iterations[i] = sol.iterations
        residuals[i] = sol.residual
        warm = sol.argmax
    return ConjugateBatch(values, argmax, iterations, residuals)
