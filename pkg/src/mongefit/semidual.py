"""Empirical semidual objective and its minimization.

For samples ``X_1..X_m`` from the source and ``Y_1..Y_k`` from the
target, the empirical semidual of a potential is

    S(phi) = mean_i phi(X_i) + mean_k phi*(Y_k),

minimized at the potential whose gradient transports source onto
target. Over a dictionary ``{phi_j}`` mixed with simplex weights the
objective is convex and smooth in the weights, its gradient is
available from the conjugate maximizers without differentiating through
them, and projected gradient descent converges at rate 1/k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_samples, check_vector
from .conjugate import ConjugateBatch, OracleConfig, conjugate_batch
from .exceptions import UsageError
from .potentials import MixturePotential, Potential, probe_convexity

__all__ = [
    "EmpiricalPair",
    "SemidualFitReport",
    "semidual_value",
    "envelope_gradient",
    "project_simplex",
    "pgd_fit",
    "select_finite",
]

GRAD_MAP_TOL = 1e-6
STALL_TOL = 1e-12
STALL_WINDOW = 20


@dataclass(frozen=True)
class EmpiricalPair:
    """Source and target point clouds of a two-sample problem.

    Sample sizes may differ; each empirical average runs over its own
    sample. Both clouds must share one dimension and be finite.
    """

    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        src = check_samples(self.source, name="source")
        tgt = check_samples(self.target, dim=src.shape[1], name="target")
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)

    @property
    def dim(self) -> int:
        return self.source.shape[1]


@dataclass(frozen=True)
class SemidualFitReport:
    """Outcome of a projected-gradient fit of dictionary weights.

    ``objective_trace[k]`` is the semidual value at iterate k, starting
    from the initial weights; the trace is nonincreasing up to oracle
    noise. ``stop_reason`` is one of ``gradient-map-small``,
    ``objective-stall`` or ``max-iterations``.
    """

    weights: np.ndarray
    objective_trace: list[float] = field(repr=False)
    iterations: int
    stop_reason: str
    step_size: float
    smoothness_estimate: float

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "trace": list(self.objective_trace),
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "step_size": self.step_size,
            "smoothness_estimate": self.smoothness_estimate,
        }


def semidual_value(p: Potential, data: EmpiricalPair,
                   cfg: OracleConfig | None = None) -> float:
    """Empirical semidual ``mean phi(X) + mean phi*(Y)`` of one potential."""
    batch = conjugate_batch(p, data.target, cfg)
    return float(np.mean(p.value(data.source)) + np.mean(batch.values))


def _atom_source_means(atoms, source) -> np.ndarray:
    return np.array([np.mean(a.value(source)) for a in atoms])


def _weights_state(atoms, weights, source_means, data, cfg, warm=None):
    """Semidual value and envelope gradient at one weight vector.

    Shares a single batch conjugation: the value uses the conjugate
    values, the gradient the conjugate maximizers.
    """
    mixture = MixturePotential(atoms, weights)
    if cfg is not None and warm is not None:
        cfg = OracleConfig(cfg.tolerance, cfg.max_iterations, warm_start=warm)
    batch: ConjugateBatch = conjugate_batch(mixture, data.target, cfg)
    value = float(weights @ source_means + np.mean(batch.values))
    grad = source_means - np.array(
        [np.mean(a.value(batch.argmax)) for a in atoms]
    )
    return value, grad, batch.argmax


def envelope_gradient(atoms, weights, data: EmpiricalPair,
                      cfg: OracleConfig | None = None) -> np.ndarray:
    """Gradient of the semidual in the mixture weights.

    Component j is ``mean phi_j(X) - mean phi_j(x*)`` where the ``x*``
    are the conjugate maximizers of the current mixture at the target
    points; no derivative of the maximizers is needed.
    """
    atoms = list(atoms)
    w = check_vector(weights, dim=len(atoms), name="weights")
    means = _atom_source_means(atoms, data.source)
    _, grad, _ = _weights_state(atoms, w, means, data, cfg or OracleConfig())
    return grad


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold rule, O(J log J); idempotent, output sums to 1.
    """
    v = check_vector(v, name="v")
    if v.shape[0] == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.shape[0] + 1)
    cond = u - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _check_atoms(atoms, dim):
    if not atoms:
        raise UsageError("dictionary must contain at least one atom")
    for j, atom in enumerate(atoms):
        if atom.dim != dim:
            raise UsageError(f"atom {j} has dimension {atom.dim}, data has {dim}")
        cert = atom.certificate()
        if cert.alpha <= 0.0:
            raise UsageError(
                f"atom {j} is not certified strongly convex; projected "
                "gradient descent requires strongly convex atoms"
            )
        if not probe_convexity(atom):
            raise UsageError(
                f"atom {j} failed the convexity probe (negative curvature "
                "detected); dictionary atoms must be convex"
            )


def _estimate_smoothness(atoms, data, means, cfg, n_pairs=20, seed=0):
    """Largest observed gradient-difference ratio over random weight pairs.

    A deterministic, conservative stand-in for the unknown smoothness
    constant of the weights objective; paired with step 1/(2 L).
    """
    rng = np.random.default_rng(seed)
    J = len(atoms)
    best = 0.0
    for _ in range(n_pairs):
        lam = rng.dirichlet(np.ones(J))
        mu = rng.dirichlet(np.ones(J))
        gap = np.linalg.norm(lam - mu)
        if gap < 1e-12:
            continue
        _, g_lam, _ = _weights_state(atoms, lam, means, data, cfg)
        _, g_mu, _ = _weights_state(atoms, mu, means, data, cfg)
        best = max(best, float(np.linalg.norm(g_lam - g_mu) / gap))
    return best


def pgd_fit(atoms, data: EmpiricalPair, step: float | None = None,
            max_iter: int = 500, cfg: OracleConfig | None = None,
            grad_tol: float = GRAD_MAP_TOL) -> SemidualFitReport:
    """Minimize the semidual over dictionary weights by projected descent.

    Starts from uniform weights. When ``step`` is unset, the step is
    ``1/(2 L)`` with ``L`` the empirical smoothness estimate. Stops when
    the projected-gradient map norm falls below ``grad_tol``, when the
    objective stalls below 1e-12 over 20 iterations, or at ``max_iter``.

    Parameters
    ----------
    atoms : sequence of Potential
        Strongly convex dictionary; a non-convex or non-strongly-convex
        atom raises :class:`UsageError`.
    data : EmpiricalPair
        Source and target samples.
    step : float, optional
        Fixed step size; overrides the smoothness-based choice.
    max_iter : int
        Cap on gradient steps.
    cfg : OracleConfig, optional
        Conjugate oracle settings for the inner sub-problems.
    """
    atoms = list(atoms)
    _check_atoms(atoms, data.dim)
    if step is not None and (not np.isfinite(step) or step <= 0):
        raise UsageError("step must be positive")
    if max_iter < 1:
        raise UsageError("max_iter must be at least 1")
    cfg = cfg or OracleConfig()
    J = len(atoms)
    means = _atom_source_means(atoms, data.source)

    lam = np.full(J, 1.0 / J)
    value, grad, warm = _weights_state(atoms, lam, means, data, cfg)
    trace = [value]
    if J == 1:
        eta = float(step) if step else 1.0
        return SemidualFitReport(
            weights=np.ones(1), objective_trace=trace, iterations=0,
            stop_reason="gradient-map-small", step_size=eta,
            smoothness_estimate=1.0 / (2.0 * eta),
        )

    if step is None:
        smoothness = _estimate_smoothness(atoms, data, means, cfg)
        # degenerate dictionaries (e.g. duplicated atoms) measure zero
        eta = 1.0 / (2.0 * smoothness) if smoothness > 1e-12 else 1.0
        smoothness = max(smoothness, 1.0 / (2.0 * eta))
    else:
        eta = float(step)
        smoothness = 1.0 / (2.0 * eta)

    stop_reason = "max-iterations"
    iterations = 0
    for _ in range(max_iter):
        lam_next = project_simplex(lam - eta * grad)
        if np.linalg.norm(lam - lam_next) / eta <= grad_tol:
            stop_reason = "gradient-map-small"
            break
        lam = lam_next
        value, grad, warm = _weights_state(atoms, lam, means, data, cfg, warm=warm)
        trace.append(value)
        iterations += 1
        if (len(trace) > STALL_WINDOW
                and trace[-1 - STALL_WINDOW] - trace[-1] < STALL_TOL):
            stop_reason = "objective-stall"
            break

    return SemidualFitReport(
        weights=lam, objective_trace=trace, iterations=iterations,
        stop_reason=stop_reason, step_size=eta, smoothness_estimate=smoothness,
    )


def select_finite(candidates, data: EmpiricalPair,
                  cfg: OracleConfig | None = None) -> tuple[int, list[float]]:
    """Pick the candidate with the smallest empirical semidual.

    Returns the winning index (ties broken by lowest index) and the full
    list of semidual values.
    """
    candidates = list(candidates)
    if not candidates:
        raise UsageError("candidate list is empty")
    values = [semidual_value(c, data, cfg) for c in candidates]
    return int(np.argmin(values)), values
