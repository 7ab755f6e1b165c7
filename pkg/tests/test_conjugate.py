import numpy as np
import pytest

from mongefit import (
    ConvergenceError,
    MixturePotential,
    NotStronglyConvexError,
    OracleConfig,
    QuadraticPotential,
    QuadraticProfile,
    SpikedPotential,
    UsageError,
    conjugate_batch,
    conjugate_iterative,
    conjugate_quadratic,
    random_quadratic,
)

from conftest import random_potential


def test_self_conjugate_half_squared_norm():
    sol = conjugate_quadratic(QuadraticPotential(np.eye(2)), [1.0, 2.0])
    assert sol.value == pytest.approx(2.5)
    np.testing.assert_allclose(sol.argmax, [1.0, 2.0])


def test_diagonal_scaling():
    sol = conjugate_quadratic(QuadraticPotential(2 * np.eye(2)), [2.0, 0.0])
    assert sol.value == pytest.approx(1.0)
    np.testing.assert_allclose(sol.argmax, [1.0, 0.0])


def test_dense_quadratic_matches_linear_solve_oracle():
    matrix = np.array([[2.0, 1.0], [1.0, 2.0]])
    shift = np.array([1.0, 0.0])
    y = np.array([3.0, 1.0])
    p = QuadraticPotential(matrix, shift)
    sol = conjugate_quadratic(p, y)
    # independent oracle: dense solve then the Fenchel-Young identity
    x_oracle = np.linalg.solve(matrix, y - shift)
    value_oracle = float(x_oracle @ y - p.value(x_oracle))
    np.testing.assert_allclose(sol.argmax, [1.0, 0.0], atol=1e-12)
    assert sol.value == pytest.approx(1.0)
    np.testing.assert_allclose(sol.argmax, x_oracle, atol=1e-12)
    assert sol.value == pytest.approx(value_oracle)


def test_singular_quadratic_rejected():
    p = QuadraticPotential(np.diag([1.0, 0.0]))
    with pytest.raises(NotStronglyConvexError):
        conjugate_quadratic(p, [1.0, 1.0])
    with pytest.raises(NotStronglyConvexError):
        conjugate_iterative(p, [1.0, 1.0])


def test_fenchel_young_identity_holds_by_construction(rng):
    for _ in range(10):
        p = random_quadratic(rng, 3)
        y = rng.standard_normal(3)
        sol = conjugate_quadratic(p, y)
        assert sol.value == float(sol.argmax @ y - p.value(sol.argmax))
        assert sol.residual <= 1e-12 * (1.0 + np.linalg.norm(y))


def test_iterative_matches_analytic_on_quadratic():
    p = QuadraticPotential(np.eye(2))
    y = [1.0, 2.0]
    it = conjugate_iterative(p, y)
    exact = conjugate_quadratic(p, y)
    assert it.value == pytest.approx(exact.value, abs=1e-8)


def test_iterative_mixture_matches_combined_quadratic():
    atoms = [QuadraticPotential(np.eye(2)), QuadraticPotential(3 * np.eye(2))]
    mix = MixturePotential(atoms, [0.5, 0.5])
    sol = conjugate_iterative(mix, [2.0, 0.0])
    # effective curvature matrix is 2 I
    exact = conjugate_quadratic(QuadraticPotential(2 * np.eye(2)), [2.0, 0.0])
    assert sol.value == pytest.approx(exact.value, abs=1e-8)
    np.testing.assert_allclose(sol.argmax, [1.0, 0.0], atol=1e-7)
    assert sol.value == pytest.approx(1.0, abs=1e-8)


def test_value_error_bounded_by_tolerance(rng):
    # returned value within tol^2 / alpha of the exact conjugate
    for tol in (1e-4, 1e-8):
        cfg = OracleConfig(tolerance=tol)
        for _ in range(10):
            p = random_quadratic(rng, 4)
            y = rng.standard_normal(4) * 2
            it = conjugate_iterative(p, y, cfg)
            exact = conjugate_quadratic(p, y)
            alpha = p.certificate().alpha
            slack = 1e-13 * (1.0 + abs(exact.value))
            assert abs(it.value - exact.value) <= tol**2 / alpha + slack


def test_gradient_inversion_identity(rng):
    for _ in range(10):
        p = random_potential(rng, 3)
        x0 = rng.standard_normal(3)
        y = p.grad(x0)
        sol = conjugate_iterative(p, y)
        tol = 1e-8 / p.certificate().alpha
        np.testing.assert_allclose(sol.argmax, x0, atol=tol)
        assert sol.value == pytest.approx(float(x0 @ y) - p.value(x0), abs=1e-7)


def test_warm_start_reaches_same_solution(rng):
    p = random_potential(rng, 3, kind="mixture")
    y = rng.standard_normal(3)
    cold = conjugate_iterative(p, y)
    warm = conjugate_iterative(p, y, OracleConfig(warm_start=cold.argmax))
    assert warm.iterations == 0
    assert warm.value == pytest.approx(cold.value, abs=1e-8)


def test_convergence_error_carries_state():
    p = MixturePotential(
        [QuadraticPotential(np.diag([0.1, 2.0])),
         QuadraticPotential(np.diag([0.2, 3.0]))],
        [0.5, 0.5],
    )
    with pytest.raises(ConvergenceError) as err:
        conjugate_iterative(p, [5.0, 5.0], OracleConfig(max_iterations=2))
    assert err.value.last_iterate is not None
    assert err.value.residual > 0


def test_oracle_config_validation():
    with pytest.raises(UsageError):
        OracleConfig(tolerance=0.0)
    with pytest.raises(UsageError):
        OracleConfig(max_iterations=0)


def test_batch_identical_queries_identical_solutions():
    mix = MixturePotential(
        [QuadraticPotential(np.eye(2)), QuadraticPotential(3 * np.eye(2))],
        [0.5, 0.5],
    )
    ys = np.array([[1.0, 2.0]] * 3)
    batch = conjugate_batch(mix, ys)
    assert len(batch) == 3
    assert batch.values[0] == batch.values[1] == batch.values[2]
    np.testing.assert_allclose(batch.argmax[0], batch.argmax[2])


def test_batch_recovers_preimages(rng):
    p = random_potential(rng, 3, kind="mixture")
    xs = rng.standard_normal((30, 3))
    ys = p.grad(xs)
    batch = conjugate_batch(p, ys)
    tol = 1e-8 / p.certificate().alpha
    np.testing.assert_allclose(batch.argmax, xs, atol=max(tol, 1e-7))


def test_batch_matches_analytic_on_quadratic(rng):
    p = random_quadratic(rng, 3)
    ys = rng.standard_normal((100, 3)) * 2
    batch = conjugate_batch(p, ys)
    for y, value in zip(ys, batch.values):
        assert value == pytest.approx(conjugate_quadratic(p, y).value, abs=1e-8)


def test_batch_quadratic_mixture_collapses_to_closed_form(rng):
    # mixtures of quadratics take the exact route but agree with the
    # per-point ascent within its tolerance
    p = random_potential(rng, 3, kind="mixture")
    ys = rng.standard_normal((20, 3))
    batch = conjugate_batch(p, ys)
    assert np.all(batch.iterations == 0)
    alpha = p.certificate().alpha
    for i, sol in enumerate(batch):
        single = conjugate_iterative(p, ys[i])
        assert sol.value == pytest.approx(single.value, abs=1e-10)
        np.testing.assert_allclose(sol.argmax, single.argmax,
                                   atol=2e-8 / alpha)


def test_batch_matches_per_point_iterative(rng):
    p = random_potential(rng, 3, kind="iterative_mixture")
    ys = rng.standard_normal((20, 3))
    batch = conjugate_batch(p, ys)
    assert np.any(batch.iterations > 0)
    for i, sol in enumerate(batch):
        single = conjugate_iterative(p, ys[i])
        assert sol.value == pytest.approx(single.value, abs=1e-10)
        assert sol.iterations == single.iterations
        np.testing.assert_allclose(sol.argmax, single.argmax, atol=1e-12)


def test_batch_chained_warm_starts_agree(rng):
    p = random_potential(rng, 3, kind="iterative_mixture")
    ys = rng.standard_normal((25, 3))
    plain = conjugate_batch(p, ys)
    chained = conjugate_batch(p, ys, chain=True)
    alpha = p.certificate().alpha
    np.testing.assert_allclose(chained.values, plain.values, atol=1e-7)
    np.testing.assert_allclose(chained.argmax, plain.argmax,
                               atol=2e-8 / alpha)


def test_batch_spiked_closed_form_is_exact(rng):
    p = SpikedPotential(rng.standard_normal(4), QuadraticProfile(2.5, 0.3))
    ys = rng.standard_normal((50, 4))
    batch = conjugate_batch(p, ys)
    assert np.all(batch.residuals <= 1e-10)
    for i in (0, 17, 49):
        single = conjugate_iterative(p, ys[i])
        assert batch.values[i] == pytest.approx(single.value, abs=1e-8)


def test_batch_convergence_error_reports_first_index():
    p = MixturePotential(
        [QuadraticPotential(np.diag([0.1, 2.0])),
         SpikedPotential([1.0, 0.0], QuadraticProfile(0.15))],
        [0.5, 0.5],
    )
    ys = np.array([[0.0, 0.0], [6.0, 6.0], [7.0, 7.0]])
    with pytest.raises(ConvergenceError) as err:
        conjugate_batch(p, ys, OracleConfig(max_iterations=2))
    assert err.value.index == 1


def test_conjugation_of_mixture_with_one_flat_atom():
    # a flat (alpha = 0) atom is fine as long as the mixture certificate
    # stays strongly convex
    flat = QuadraticPotential(np.zeros((2, 2)))
    curved = QuadraticPotential(2 * np.eye(2))
    mix = MixturePotential([flat, curved], [0.5, 0.5])
    sol = conjugate_iterative(mix, [1.0, 0.0])
    exact = conjugate_quadratic(QuadraticPotential(np.eye(2)), [1.0, 0.0])
    assert sol.value == pytest.approx(exact.value, abs=1e-8)
    with pytest.raises(NotStronglyConvexError):
        conjugate_iterative(flat, [1.0, 0.0])


def test_conjugate_convexity_in_the_potential(rng):
    # conjugation of a convex combination is below the combination of
    # the conjugates
    for _ in range(15):
        p0 = random_quadratic(rng, 3)
        p1 = random_quadratic(rng, 3)
        t = rng.uniform()
        mix = MixturePotential([p0, p1], [1.0 - t, t])
        y = rng.standard_normal(3) * 2
        lhs = conjugate_iterative(mix, y).value
        rhs = ((1.0 - t) * conjugate_quadratic(p0, y).value
               + t * conjugate_quadratic(p1, y).value)
        assert lhs <= rhs + 1e-8


def test_conjugate_growth_bound(rng):
    # phi*(y) <= ||grad phi(0) - y||^2 / alpha for growth exponent 0
    for _ in range(15):
        p = random_potential(rng, 3)
        alpha = p.certificate().alpha
        y = rng.standard_normal(3) * 3
        value = conjugate_iterative(p, y).value
        g0 = p.grad(np.zeros(3))
        assert value <= np.sum((g0 - y) ** 2) / alpha + 1e-8


def test_conjugate_quadratic_lower_bound(rng):
    # phi*(y) >= -phi(x) + <y, x> + ||y - grad phi(x)||^2 / (2 beta)
    for _ in range(15):
        p = random_potential(rng, 3)
        beta = p.certificate().beta
        x = rng.standard_normal(3)
        y = rng.standard_normal(3) * 2
        value = conjugate_iterative(p, y).value
        bound = (-p.value(x) + float(y @ x)
                 + np.sum((y - p.grad(x)) ** 2) / (2.0 * beta))
        assert value >= bound - 1e-8


def test_ascent_residual_monotone_for_quadratic(rng):
    # replay the fixed-step ascent and check the residual contracts;
    # anchor the replica to the solver's reported iteration count
    p = random_quadratic(rng, 3)
    beta = p.certificate().beta
    y = rng.standard_normal(3) * 2
    x = np.zeros(3)
    residuals = []
    for _ in range(200):
        r = y - p.grad(x)
        residuals.append(np.linalg.norm(r))
        if residuals[-1] <= 1e-8:
            break
        x = x + r / beta
    assert all(b <= a + 1e-15 for a, b in zip(residuals, residuals[1:]))
    sol = conjugate_iterative(p, y)
    assert sol.iterations == len(residuals) - 1
    assert sol.residual == pytest.approx(residuals[-1])
