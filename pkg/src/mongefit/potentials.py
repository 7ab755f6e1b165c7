"""Candidate potential families.

A potential is a convex function :math:`\\phi` on :math:`\\mathbb{R}^d`,
normalized so that :math:`\\phi(0) = 0`; its gradient is the transport
map the estimators are after. Three families are implemented:

* quadratic potentials ``0.5 x'Ax + b'x`` with symmetric PSD ``A``,
* convex mixtures of potentials with weights on the probability simplex,
* spiked potentials that apply a one-dimensional convex profile along a
  single direction and the identity on its orthogonal complement.

Every potential reports a regularity certificate ``(beta, a, alpha)``:
``beta`` is a smoothness (gradient Lipschitz) constant, ``alpha`` a
strong-convexity constant (0 when not certified), and ``a`` a growth
exponent which is always 0 for these families. Certificates are
conservative: ``alpha`` may under-estimate and ``beta`` over-estimate
the sharp constants.
"""

from __future__ import annotations

import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ._validation import check_points, check_square_matrix, check_vector
from .exceptions import UsageError

__all__ = [
    "RegularityCertificate",
    "Potential",
    "QuadraticPotential",
    "QuadraticProfile",
    "SpikedPotential",
    "MixturePotential",
    "probe_convexity",
    "potential_to_dict",
    "potential_from_dict",
]

SIMPLEX_TOL = 1e-12
SYMMETRY_TOL = 1e-10
PSD_TOL = -1e-10


@dataclass(frozen=True)
class RegularityCertificate:
    """Smoothness / strong-convexity certificate of a potential.

    Attributes
    ----------
    beta : float
        Gradient Lipschitz constant (times ``(1+|x|)^a``).
    a : float
        Growth exponent; 0 for all implemented families.
    alpha : float
        Strong-convexity constant; 0 means not certified strongly convex.
    """

    beta: float
    a: float
    alpha: float

    def __post_init__(self):
        if self.beta < 0 or self.alpha < 0 or self.a < 0:
            raise UsageError("certificate constants must be nonnegative")
        if self.alpha > self.beta + 1e-12:
            raise UsageError("certificate requires alpha <= beta")


class Potential(ABC):
    """Base class for candidate potentials.

    Potentials are immutable after construction: all arrays are stored
    read-only, and every method is a pure function of its arguments.
    """

    dim: int

    @abstractmethod
    def value(self, x):
        """Evaluate the potential at ``x`` of shape (d,) or (n, d)."""

    @abstractmethod
    def grad(self, x):
        """Evaluate the gradient (transport map) at ``x``."""

    @abstractmethod
    def certificate(self) -> RegularityCertificate:
        """Return the (beta, a, alpha) regularity certificate."""

    def __call__(self, x):
        return self.value(x)


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


class QuadraticPotential(Potential):
    """Quadratic potential ``phi(x) = 0.5 x'Ax + b'x``.

    Parameters
    ----------
    matrix : array-like of shape (d, d)
        Symmetric positive semidefinite curvature matrix. Asymmetry up
        to floating-point noise is symmetrized; asymmetry beyond 1e-10
        is symmetrized with a warning.
    shift : array-like of shape (d,), optional
        Linear term ``b``; defaults to zero.
    """

    def __init__(self, matrix, shift=None):
        a = check_square_matrix(matrix, name="matrix")
        asym = np.max(np.abs(a - a.T)) if a.size else 0.0
        if asym > SYMMETRY_TOL:
            warnings.warn(
                f"quadratic matrix asymmetry {asym:.2e} exceeds {SYMMETRY_TOL:.0e}; "
                "symmetrizing",
                stacklevel=2,
            )
        a = 0.5 * (a + a.T)
        eigvals = np.linalg.eigvalsh(a)
        if eigvals[0] < PSD_TOL:
            raise UsageError(
                f"quadratic matrix must be positive semidefinite for a "
                f"convex potential (smallest eigenvalue {eigvals[0]:.3e})"
            )
        d = a.shape[0]
        if shift is None:
            shift = np.zeros(d)
        b = check_vector(shift, dim=d, name="shift")
        self.matrix = _freeze(a)
        self.shift = _freeze(b)
        self.dim = d
        self._eig_min = float(max(eigvals[0], 0.0))
        self._eig_max = float(max(eigvals[-1], 0.0))

    def value(self, x):
        pts, single = check_points(x, dim=self.dim)
        vals = 0.5 * np.einsum("ni,ij,nj->n", pts, self.matrix, pts) + pts @ self.shift
        return float(vals[0]) if single else vals

    def grad(self, x):
        pts, single = check_points(x, dim=self.dim)
        out = pts @ self.matrix + self.shift
        return out[0] if single else out

    def certificate(self) -> RegularityCertificate:
        return RegularityCertificate(beta=self._eig_max, a=0.0, alpha=self._eig_min)

    def __repr__(self):
        return f"QuadraticPotential(dim={self.dim})"


@dataclass(frozen=True)
class QuadraticProfile:
    """One-dimensional convex profile ``psi(t) = 0.5 c t^2 + s t``.

    ``curvature`` must be positive; ``shift`` translates the image of
    the induced one-dimensional map ``psi'(t) = c t + s``.
    """

    curvature: float
    shift: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.curvature) or self.curvature <= 0:
            raise UsageError("profile curvature must be positive and finite")
        if not np.isfinite(self.shift):
            raise UsageError("profile shift must be finite")

    def value(self, t):
        return 0.5 * self.curvature * t**2 + self.shift * t

    def deriv(self, t):
        return self.curvature * t + self.shift


class SpikedPotential(Potential):
    """Potential acting through a 1-d profile along one direction.

    ``phi(x) = psi(<u, x>) + 0.5 ||x - <u, x> u||^2`` where ``u`` is a
    unit vector and ``psi`` a one-dimensional convex profile. The
    gradient moves mass along ``u`` and is the identity orthogonally.

    The direction is normalized at construction, so the unit-norm
    invariant holds up to floating-point rounding.
    """

    def __init__(self, direction, profile: QuadraticProfile):
        u = check_vector(direction, name="direction")
        norm = np.linalg.norm(u)
        if norm <= 0:
            raise UsageError("direction must be nonzero")
        if not isinstance(profile, QuadraticProfile):
            raise UsageError("profile must be a QuadraticProfile")
        self.direction = _freeze(u / norm)
        self.profile = profile
        self.dim = u.shape[0]

    def value(self, x):
        pts, single = check_points(x, dim=self.dim)
        t = pts @ self.direction
        vals = self.profile.value(t) + 0.5 * (np.sum(pts**2, axis=1) - t**2)
        return float(vals[0]) if single else vals

    def grad(self, x):
        pts, single = check_points(x, dim=self.dim)
        t = pts @ self.direction
        out = pts + np.outer(self.profile.deriv(t) - t, self.direction)
        return out[0] if single else out

    def certificate(self) -> RegularityCertificate:
        c = self.profile.curvature
        return RegularityCertificate(beta=max(c, 1.0), a=0.0, alpha=min(c, 1.0))

    def __repr__(self):
        return (
            f"SpikedPotential(dim={self.dim}, curvature={self.profile.curvature})"
        )


class MixturePotential(Potential):
    """Convex combination ``sum_j w_j phi_j`` of potentials.

    Parameters
    ----------
    atoms : sequence of Potential
        Component potentials, all of the same dimension.
    weights : array-like of shape (J,)
        Point on the probability simplex: nonnegative, summing to 1
        within 1e-12.
    """

    def __init__(self, atoms, weights):
        atoms = tuple(atoms)
        if not atoms:
            raise UsageError("mixture needs at least one atom")
        for a in atoms:
            if not isinstance(a, Potential):
                raise UsageError("mixture atoms must be Potential instances")
        d = atoms[0].dim
        for a in atoms[1:]:
            if a.dim != d:
                raise UsageError("mixture atoms must share one dimension")
        w = check_vector(weights, dim=len(atoms), name="weights")
        if np.any(w < -SIMPLEX_TOL):
            raise UsageError("mixture weights must be nonnegative")
        if abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise UsageError(f"mixture weights must sum to 1, got {w.sum()!r}")
        self.atoms = atoms
        self.weights = _freeze(np.clip(w, 0.0, None))
        self.dim = d

    def value(self, x):
        pts, single = check_points(x, dim=self.dim)
        vals = np.zeros(pts.shape[0])
        for wj, atom in zip(self.weights, self.atoms):
            if wj > 0.0:
                vals += wj * atom.value(pts)
        return float(vals[0]) if single else vals

    def grad(self, x):
        pts, single = check_points(x, dim=self.dim)
        out = np.zeros_like(pts)
        for wj, atom in zip(self.weights, self.atoms):
            if wj > 0.0:
                out += wj * atom.grad(pts)
        return out[0] if single else out

    def certificate(self) -> RegularityCertificate:
        certs = [a.certificate() for a in self.atoms]
        beta = float(np.dot(self.weights, [c.beta for c in certs]))
        # Linear lower bound on the smallest eigenvalue of the combined
        # Hessian; the true constant can be larger.
        alpha = float(np.dot(self.weights, [c.alpha for c in certs]))
        growth = max(c.a for c in certs)
        return RegularityCertificate(beta=beta, a=growth, alpha=min(alpha, beta))

    def __repr__(self):
        return f"MixturePotential(dim={self.dim}, atoms={len(self.atoms)})"


def probe_convexity(p: Potential, n_pairs: int = 16, radius: float = 5.0,
                    seed: int = 0) -> bool:
    """Probe gradient monotonicity on random pairs.

    Returns False when a pair with negative curvature along the chord is
    found, i.e. ``<grad(x) - grad(y), x - y> < -tol``. A True result is
    evidence of convexity, not a proof.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-radius, radius, size=(n_pairs, p.dim))
    y = rng.uniform(-radius, radius, size=(n_pairs, p.dim))
    gap = np.sum((p.grad(x) - p.grad(y)) * (x - y), axis=1)
    scale = 1.0 + np.sum((x - y) ** 2, axis=1)
    return bool(np.all(gap >= -1e-10 * scale))


def potential_to_dict(p: Potential) -> dict:
    """Serialize a potential to its JSON object form.

    Matrices are emitted row-major (list of rows). The inverse is
    :func:`potential_from_dict`.
    """
    if isinstance(p, QuadraticPotential):
        return {
            "kind": "quadratic",
            "matrix": p.matrix.tolist(),
            "shift": p.shift.tolist(),
        }
    if isinstance(p, MixturePotential):
        return {
            "kind": "mixture",
            "atoms": [potential_to_dict(a) for a in p.atoms],
            "weights": p.weights.tolist(),
        }
    if isinstance(p, SpikedPotential):
        return {
            "kind": "spiked",
            "direction": p.direction.tolist(),
            "curvature": p.profile.curvature,
            "shift": p.profile.shift,
        }
    raise UsageError(f"cannot serialize potential of type {type(p).__name__}")


_POTENTIAL_FIELDS = {
    "quadratic": {"kind", "matrix", "shift"},
    "mixture": {"kind", "atoms", "weights"},
    "spiked": {"kind", "direction", "curvature", "shift"},
}


def potential_from_dict(obj: dict) -> Potential:
    """Deserialize a potential from its JSON object form.

    Unknown kinds and unknown keys are rejected with the offending name.
    """
    if not isinstance(obj, dict):
        raise UsageError("potential must be a JSON object")
    kind = obj.get("kind")
    if kind not in _POTENTIAL_FIELDS:
        raise UsageError(f"unknown potential kind {kind!r}")
    unknown = set(obj) - _POTENTIAL_FIELDS[kind]
    if unknown:
        raise UsageError(f"unknown key {sorted(unknown)[0]!r} in {kind} potential")
    if kind == "quadratic":
        if "matrix" not in obj:
            raise UsageError("quadratic potential requires 'matrix'")
        return QuadraticPotential(obj["matrix"], obj.get("shift"))
    if kind == "mixture":
        if "atoms" not in obj or "weights" not in obj:
            raise UsageError("mixture potential requires 'atoms' and 'weights'")
        return MixturePotential(
            [potential_from_dict(a) for a in obj["atoms"]], obj["weights"]
        )
    if "direction" not in obj or "curvature" not in obj:
        raise UsageError("spiked potential requires 'direction' and 'curvature'")
    return SpikedPotential(
        obj["direction"],
        QuadraticProfile(obj["curvature"], obj.get("shift", 0.0)),
    )
