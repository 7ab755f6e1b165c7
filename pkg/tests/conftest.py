"""Shared test oracles and generators."""

from itertools import combinations

import numpy as np
import pytest

from mongefit import (
    MixturePotential,
    QuadraticPotential,
    QuadraticProfile,
    SpikedPotential,
    random_quadratic,
)


def finite_diff_grad(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def kkt_simplex_projection(v):
    """Brute-force simplex projection by support-set enumeration.

    Tries every nonempty support, solves the KKT system on it and keeps
    the feasible candidate closest to v.
    """
    v = np.asarray(v, dtype=float)
    J = v.shape[0]
    best = None
    best_dist = np.inf
    for mask in range(1, 2**J):
        idx = [i for i in range(J) if mask >> i & 1]
        theta = (v[idx].sum() - 1.0) / len(idx)
        w = np.zeros(J)
        w[idx] = v[idx] - theta
        if np.any(w[idx] < -1e-12):
            continue
        off = [i for i in range(J) if i not in idx]
        if off and np.any(v[off] - theta > 1e-12):
            continue
        dist = np.linalg.norm(w - v)
        if dist < best_dist:
            best, best_dist = np.clip(w, 0.0, None), dist
    assert best is not None
    return best


def simplex_grid(J, m):
    """All points of the simplex with coordinates in multiples of 1/m."""
    pts = []
    for cuts in combinations(range(m + J - 1), J - 1):
        prev = -1
        parts = []
        for c in cuts + (m + J - 1,):
            parts.append(c - prev - 1)
            prev = c
        pts.append(np.array(parts, dtype=float) / m)
    return np.array(pts)


def quadratic_semidual_exact(matrix, shift, source, target):
    """Analytic semidual of one quadratic on an empirical pair.

    Direct formula: primal mean plus the closed-form conjugate mean;
    independent of the package's iterative oracle.
    """
    matrix = np.asarray(matrix, dtype=float)
    shift = np.asarray(shift, dtype=float)
    primal = np.mean(
        0.5 * np.einsum("ni,ij,nj->n", source, matrix, source) + source @ shift
    )
    resid = target - shift
    sols = np.linalg.solve(matrix, resid.T).T
    dual = np.mean(0.5 * np.sum(resid * sols, axis=1))
    return float(primal + dual)


def mixture_semidual_exact(atoms, weights, source, target):
    """Analytic semidual of a quadratic mixture via the combined quadratic."""
    weights = np.asarray(weights, dtype=float)
    matrix = sum(w * a.matrix for w, a in zip(weights, atoms))
    shift = sum(w * a.shift for w, a in zip(weights, atoms))
    return quadratic_semidual_exact(matrix, shift, source, target)


def random_spiked(rng, dim):
    return SpikedPotential(
        rng.standard_normal(dim),
        QuadraticProfile(float(rng.uniform(0.4, 3.0)),
                         float(rng.uniform(-1.0, 1.0))),
    )


def random_potential(rng, dim, kind=None):
    """Random strongly convex potential of a random (or given) family.

    Kind "iterative_mixture" mixes quadratics with a spiked atom, which
    keeps the conjugate oracle on its gradient-ascent path.
    """
    kind = kind or rng.choice(["quadratic", "mixture", "spiked"])
    if kind == "quadratic":
        return random_quadratic(rng, dim)
    if kind == "spiked":
        return random_spiked(rng, dim)
    n_quad = int(rng.integers(1, 3))
    atoms = [random_quadratic(rng, dim) for _ in range(n_quad)]
    if kind == "iterative_mixture":
        atoms.append(random_spiked(rng, dim))
    else:
        atoms.append(random_quadratic(rng, dim))
    return MixturePotential(atoms, rng.dirichlet(np.ones(len(atoms))))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
