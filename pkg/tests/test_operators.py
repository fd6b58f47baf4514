from __future__ import annotations

import numpy as np
import pytest

from viscolab import operators as ops


def test_trace_reduces_to_laplacian_trace():
    spec = ops.OperatorSpec("trace_with_power", alpha=0.0)
    assert ops.eval(spec, [0.0, 0.0], [1.0, 0.0], np.eye(2)) == pytest.approx(2.0)


def test_pucci_minus_hand_weighting():
    # eigen-decompose by hand: eigenvalues {1, -1}, M- = a*1 + A*(-1)
    spec = ops.OperatorSpec("pucci_minus", alpha=0.0, a=1.0, A=2.0)
    X = np.diag([1.0, -1.0])
    assert ops.eval(spec, [0, 0], [1, 0], X) == pytest.approx(-1.0)
    # independent oracle: weigh the numpy eigenvalues directly
    lam = np.linalg.eigvalsh(X)
    oracle = 1.0 * lam[lam > 0].sum() + 2.0 * lam[lam < 0].sum()
    assert ops.eval(spec, [0, 0], [1, 0], X) == pytest.approx(oracle)


def test_plap_directional_term_expanded_by_hand():
    # |p|^2 (tr X + 2 <X phat, phat>) = 1 * (2 + 2*1) = 4
    spec = ops.OperatorSpec("p_laplacian_nonvariational", alpha=2.0)
    assert ops.eval(spec, [0, 0], [1, 0], np.eye(2)) == pytest.approx(4.0)
    assert (spec.a, spec.A) == (1.0, 3.0)


def test_plap_derived_ellipticity_negative_alpha():
    spec = ops.OperatorSpec("p_laplacian_nonvariational", alpha=-0.5)
    assert (spec.a, spec.A) == (0.5, 1.0)


def test_eval_rejects_zero_gradient_and_asymmetric_hessian():
    spec = ops.OperatorSpec("trace_with_power", alpha=1.0)
    with pytest.raises(ops.ZeroGradientError):
        ops.eval(spec, [0.0], [0.0], np.eye(1))
    with pytest.raises(ValueError):
        ops.eval(spec, [0, 0], [1, 0], np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_spec_validation():
    with pytest.raises(ValueError):
        ops.OperatorSpec("trace_with_power", alpha=-1.5)
    with pytest.raises(ValueError):
        ops.OperatorSpec("pucci_plus", alpha=0.0, a=2.0, A=1.0)
    with pytest.raises(ValueError):
        ops.OperatorSpec("not_a_kind", alpha=0.0)


def test_regularized_cap_at_zero_gradient():
    spec = ops.OperatorSpec("trace_with_power", alpha=-0.5)
    n = 2
    val = ops.eval_regularized(spec, [0, 0], [0.0, 0.0], np.eye(n), eps=1e-3)
    assert val == pytest.approx(1e-3 ** -0.5 * n)


def test_regularized_matches_eval_when_cap_inactive():
    rng = np.random.default_rng(5)
    for kind in ops.KINDS:
        spec = ops.OperatorSpec(kind, alpha=1.5, a=1.0, A=2.0)
        for _ in range(20):
            p = rng.normal(size=3)
            p *= 1.0 / np.linalg.norm(p)  # |p| = 1 >= eps
            X = rng.normal(size=(3, 3))
            X = 0.5 * (X + X.T)
            x = rng.normal(size=3)
            assert ops.eval_regularized(spec, x, p, X, eps=0.5) == \
                ops.eval(spec, x, p, X)


def test_regularized_alpha_zero_equals_eval_everywhere():
    spec = ops.OperatorSpec("trace_with_power", alpha=0.0)
    X = np.diag([2.0, -1.0])
    assert ops.eval_regularized(spec, [0, 0], [0.0, 0.0], X, eps=0.1) == \
        pytest.approx(np.trace(X))
    assert ops.eval_regularized(spec, [0, 0], [0.3, 0.1], X, eps=0.1) == \
        pytest.approx(ops.eval(spec, [0, 0], [0.3, 0.1], X))


def test_regularized_converges_to_eval_as_eps_shrinks():
    spec = ops.OperatorSpec("p_laplacian_nonvariational", alpha=-0.5)
    p = np.array([0.05, 0.0])
    X = np.array([[1.0, 0.3], [0.3, -2.0]])
    exact = ops.eval(spec, [0, 0], p, X)
    for eps in (0.04, 0.01):
        assert ops.eval_regularized(spec, [0, 0], p, X, eps) == exact
    assert ops.eval_regularized(spec, [0, 0], p, X, 0.5) != exact


def test_homogeneity_identity_inputs_exact():
    spec = ops.OperatorSpec("pucci_plus", alpha=1.0, a=1.0, A=2.0)
    x = np.array([0.2, -0.1])
    p = np.array([0.5, 1.0])
    X = np.array([[1.0, 0.2], [0.2, -0.5]])
    assert ops.eval(spec, x, 1.0 * p, 1.0 * X) == ops.eval(spec, x, p, X)


def test_homogeneity_hand_example_pucci_plus():
    # F(x, -2p, 3I) = 2^alpha * 3 * A * N for any unit p
    for alpha in (-0.5, 0.0, 1.0):
        spec = ops.OperatorSpec("pucci_plus", alpha=alpha, a=1.0, A=2.5)
        N = 3
        lhs = ops.eval(spec, np.zeros(N), -2.0 * np.eye(N)[0], 3.0 * np.eye(N))
        assert lhs == pytest.approx(2.0**alpha * 3.0 * 2.5 * N, rel=1e-13)


@pytest.mark.parametrize("kind,kw", [
    ("trace_with_power", {}),
    ("p_laplacian_nonvariational", {}),
    ("pucci_plus", {"a": 1.0, "A": 3.0}),
    ("pucci_minus", {"a": 0.5, "A": 2.0}),
])
@pytest.mark.parametrize("alpha", [-0.5, 0.0, 2.0])
def test_homogeneity_and_sandwich_sampled(kind, kw, alpha):
    spec = ops.OperatorSpec(kind, alpha=alpha, **kw)
    rep1 = ops.check_homogeneity(spec, 1000, seed=1)
    assert rep1.passed, rep1.max_violation
    rep2 = ops.check_ellipticity_sandwich(spec, 1000, seed=2)
    assert rep2.passed, rep2.max_violation
    rep3 = ops.check_degenerate_monotonicity(spec, 1000, seed=3)
    assert rep3.passed, rep3.max_violation


def test_plap_sandwich_attained_by_aligned_rank_one():
    alpha = 2.0
    spec = ops.OperatorSpec("p_laplacian_nonvariational", alpha=alpha)
    p = np.array([1.0, 0.0])
    M = np.zeros((2, 2))
    aligned = np.outer(p, p)
    orthogonal = np.array([[0.0, 0.0], [0.0, 1.0]])
    inc_aligned = ops.eval(spec, [0, 0], p, M + aligned) - \
        ops.eval(spec, [0, 0], p, M)
    inc_orth = ops.eval(spec, [0, 0], p, M + orthogonal) - \
        ops.eval(spec, [0, 0], p, M)
    # upper bound A tr(N) hit by the aligned direction, lower by orthogonal
    assert inc_aligned == pytest.approx(spec.A * np.trace(aligned))
    assert inc_orth == pytest.approx(spec.a * np.trace(orthogonal))


def test_sandwich_zero_increment_for_zero_perturbation():
    spec = ops.OperatorSpec("pucci_minus", alpha=1.0, a=1.0, A=2.0)
    M = np.array([[0.7, -0.2], [-0.2, -1.3]])
    inc = ops.eval(spec, [0, 0], [1, 1], M + 0.0) - ops.eval(spec, [0, 0],
                                                             [1, 1], M)
    assert inc == 0.0


def test_structure_h4_zero_without_modulation():
    spec = ops.OperatorSpec("trace_with_power", alpha=1.0)
    rep = ops.check_structure(spec, "H4", 500, seed=4)
    assert rep.max_violation == 0.0


def test_structure_h4_with_modulation_within_modulus():
    spec = ops.OperatorSpec("pucci_plus", alpha=0.5, a=1.0, A=2.0,
                            x_modulus_scale=0.8)
    rep = ops.check_structure(spec, "H4", 2000, seed=5)
    assert rep.passed
    # the rank-one modulation has Lipschitz constant scale/2, so the worst
    # sampled ratio approaches 1/2 from below
    assert rep.constant_found <= 0.5 + 1e-9
    assert rep.constant_found > 0.05


def test_structure_h6_no_p_dependence_for_alpha_zero_trace():
    spec = ops.OperatorSpec("trace_with_power", alpha=0.0)
    rep = ops.check_structure(spec, "H6", 500, seed=6)
    assert rep.constant_found == 0.0


def test_structure_h6_hand_example_one_dim():
    # alpha=1, X=(1), p=1, q=0.4: |1.4 - 1.0|*|X| vs C |p|^0 |q| |X| -> C=1
    spec = ops.OperatorSpec("trace_with_power", alpha=1.0)
    num = abs(ops.eval(spec, [0.0], [1.4], np.eye(1))
              - ops.eval(spec, [0.0], [1.0], np.eye(1)))
    assert num == pytest.approx(0.4)
    assert num / (1.0 ** 0.0 * 0.4 * 1.0) == pytest.approx(1.0)


def test_structure_h6_finite_constant_sampled():
    for kind in ops.KINDS:
        spec = ops.OperatorSpec(kind, alpha=1.5, a=1.0, A=2.0)
        rep = ops.check_structure(spec, "H6", 800, seed=7)
        assert rep.passed
        assert np.isfinite(rep.constant_found)


def test_worker_split_is_deterministic():
    spec = ops.OperatorSpec("pucci_minus", alpha=0.5, a=1.0, A=2.0)
    a = ops.check_homogeneity(spec, 600, seed=9, n_workers=3)
    b = ops.check_homogeneity(spec, 600, seed=9, n_workers=3)
    assert a.max_violation == b.max_violation
    assert a.samples_tested == b.samples_tested == 600


def test_modulated_operator_keeps_homogeneity_and_sandwich():
    spec = ops.OperatorSpec("trace_with_power", alpha=1.0,
                            x_modulus_scale=0.5)
    assert spec.ellipticity() == (1.0, 1.5)
    assert ops.check_homogeneity(spec, 800, seed=10).passed
    assert ops.check_ellipticity_sandwich(spec, 800, seed=11).passed
