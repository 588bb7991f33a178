"""Denoiser tests: clip semantics, fixed points, convex-oracle optimality.

The clipping recursion with dual bound t converges to the minimizer of
0.5*||x - theta||^2 + t*||D theta||_1; tv_denoise uses t = lam/2, so every
objective below is evaluated at weight lam/2.  Oracle optima come from an
interior-point solve of the same convex objective (cvxpy), cross-checked
once against an exact rational optimum.
"""

import numpy as np
import pytest
from sklearn.base import clone

from cstv import FiniteDifference, TVDenoiser, clip, tv_denoise


def dense_difference_matrix(shape):
    diff = FiniteDifference(shape)
    n = diff.n_points
    return np.column_stack(
        [diff.forward(np.eye(n)[:, i].reshape(shape)) for i in range(n)]
    )


def tv_objective(x, theta, weight, D):
    return (0.5 * np.sum((x - theta) ** 2)
            + weight * np.sum(np.abs(D @ theta.reshape(-1))))


def oracle_optimum(x, weight):
    import cvxpy as cp

    D = dense_difference_matrix(x.shape)
    theta = cp.Variable(x.size)
    problem = cp.Problem(
        cp.Minimize(0.5 * cp.sum_squares(x.reshape(-1) - theta)
                    + weight * cp.norm1(D @ theta))
    )
    value = problem.solve(solver=cp.CLARABEL)
    return float(value), theta.value


# -- clip -----------------------------------------------------------------------

def test_clip_pass_through():
    assert clip(0.3, 0.5) == 0.3


def test_clip_sign_branch():
    assert clip(-2.0, 0.5) == -0.5
    assert clip(2.0, 0.5) == 0.5


def test_clip_boundary_inclusive():
    assert clip(0.5, 0.5) == 0.5
    assert clip(-0.5, 0.5) == -0.5


def test_clip_elementwise_and_negative_threshold():
    np.testing.assert_array_equal(clip(np.array([-3.0, 0.1, 3.0]), 1.0), [-1.0, 0.1, 1.0])
    with pytest.raises(ValueError):
        clip(1.0, -0.1)


# -- tv_denoise ------------------------------------------------------------------

def test_constant_input_returned_bit_identically():
    x = np.full((7, 5), 4.25)
    out = tv_denoise(x, 0.9, 100)
    assert np.array_equal(out, x)


def test_vanishing_strength_is_near_identity():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 6))
    out = tv_denoise(x, 1e-12, 200)
    assert np.abs(out - x).max() <= 1e-8


def test_rejects_bad_arguments():
    x = np.zeros((4, 4))
    with pytest.raises(ValueError):
        tv_denoise(x, 0.0)
    with pytest.raises(ValueError):
        tv_denoise(x, -1.0)
    with pytest.raises(ValueError):
        tv_denoise(np.array([np.nan, 1.0]), 0.5)
    with pytest.raises(ValueError):
        tv_denoise(x, 0.5, n_iters=0)
    with pytest.raises(ValueError):
        tv_denoise(x, 0.5, diff=FiniteDifference((3, 3)))


def test_dual_feasible_after_every_iteration():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 4)) * 3
    lam = 0.8
    for n_iters in range(1, 31):
        _, z = tv_denoise(x, lam, n_iters, return_dual=True)
        assert np.abs(z).max() <= lam / 2.0


def test_translation_equivariance():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(6, 5))
    shift = 13.7
    base = tv_denoise(x, 0.4, 200)
    shifted = tv_denoise(x + shift, 0.4, 200)
    np.testing.assert_allclose(shifted, base + shift, atol=1e-10)


def test_deterministic_reruns_are_bit_identical():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(8, 8))
    a = tv_denoise(x, 0.3, 77)
    b = tv_denoise(x, 0.3, 77)
    assert np.array_equal(a, b)


def test_fixed_example_reaches_rational_optimum():
    # Exact optimum computed independently: the minimizer of
    # 0.5*||x-theta||^2 + 0.25*||D theta||_1 for this signal is
    # [1.775, 1.775, -0.275, -0.275, 2.8, 2.8, 0.225, 0.225] with
    # objective value 2.104375 (rational arithmetic, verified against
    # two interior-point solvers).
    x = np.array([2.0, 1.8, -0.5, -0.55, 3.0, 3.1, 0.0, 0.2])
    lam = 0.5
    theta = tv_denoise(x, lam, 500)
    D = dense_difference_matrix(x.shape)
    assert tv_objective(x, theta, lam / 2.0, D) <= 2.104375 + 1e-6
    np.testing.assert_allclose(
        theta, [1.775, 1.775, -0.275, -0.275, 2.8, 2.8, 0.225, 0.225], atol=1e-4
    )


def test_random_1d_signals_reach_oracle_optimum():
    rng = np.random.default_rng(4)
    for trial in range(20):
        n = int(rng.integers(4, 17))
        x = rng.normal(size=n) * rng.uniform(0.5, 3.0)
        lam = float(rng.uniform(0.1, 1.5))
        theta = tv_denoise(x, lam, 1000)
        D = dense_difference_matrix(x.shape)
        opt, _ = oracle_optimum(x, lam / 2.0)
        achieved = tv_objective(x, theta, lam / 2.0, D)
        assert achieved <= opt + 1e-6, f"trial {trial}: {achieved} vs oracle {opt}"


def test_2d_signal_reaches_oracle_optimum():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(4, 4)) * 2.0
    lam = 0.6
    theta = tv_denoise(x, lam, 2000)
    D = dense_difference_matrix(x.shape)
    opt, _ = oracle_optimum(x, lam / 2.0)
    assert tv_objective(x, theta, lam / 2.0, D) <= opt + 1e-5


# -- TVDenoiser transformer -------------------------------------------------------

def test_transformer_matches_function_and_clones():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(5, 5))
    est = TVDenoiser(lam=0.25, n_iters=40)
    np.testing.assert_array_equal(est.fit_transform(x), tv_denoise(x, 0.25, 40))
    cloned = clone(est)
    assert cloned.get_params() == {"lam": 0.25, "n_iters": 40}


def test_transformer_rejects_nonpositive_strength():
    with pytest.raises(ValueError):
        TVDenoiser(lam=0.0).fit(np.zeros((3, 3)))
