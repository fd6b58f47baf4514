from __future__ import annotations

import numpy as np
import pytest

from viscolab import barriers, domain as dom, fields, operators as ops
from viscolab import scheme as sch

from conftest import heat_problem, unit_interval


def brute_force_kappa(P: float, q: float, cq: float) -> tuple[float, float]:
    """Golden-section oracle for min over k > 0 of k + P/(cq^q k^(q-1))."""
    def g(k):
        return k + P / (cq**q * k ** (q - 1.0))

    lo, hi = 1e-9, 1e5
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    # search over log k: the objective is convex there
    a, b = np.log(lo), np.log(hi)
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(200):
        if g(np.exp(c)) < g(np.exp(d)):
            b = d
        else:
            a = c
        c, d = b - phi * (b - a), a + phi * (b - a)
    k = np.exp(0.5 * (a + b))
    return k, g(k)


def test_exponents_alpha_zero_half_gamma():
    exps = barriers.exponents(0.0, 0.5, 1.0, unit_interval(), 0.0, 1.0)
    assert exps.q1 == 2.0
    assert exps.q == 4.0
    assert exps.attain == pytest.approx(0.25)
    assert exps.gamma_star == pytest.approx(0.25)


def test_exponents_singular_alpha():
    exps = barriers.exponents(-0.5, 1.0, 1.0, unit_interval(), 0.0, 1.0)
    assert exps.q1 == pytest.approx(3.0)
    assert exps.q == pytest.approx(3.0)
    assert exps.attain == pytest.approx(0.5)
    assert exps.gamma_star == pytest.approx(0.5)


def test_growth_constant_direct_evaluation():
    d = dom.make_domain("box", lo=[0, 0], hi=[1 / np.sqrt(2), 1 / np.sqrt(2)])
    assert d.diameter == pytest.approx(1.0)
    exps = barriers.exponents(0.0, 1.0, 1.0, d, 0.0, 1.0)
    # (diam |h| + A (N + q1 - 2)) diam^0 = (0 + 1 * 2) * 1 = 2
    assert exps.k2 == pytest.approx(2.0)


def test_exponent_invariants_random_sweep():
    rng = np.random.default_rng(0)
    d = unit_interval()
    for _ in range(200):
        alpha = rng.uniform(-0.9, 4.0)
        gamma = rng.uniform(0.05, 1.0)
        gamma_f = rng.uniform(0.05, 1.0)
        e = barriers.exponents(alpha, gamma, gamma_f, d, rng.uniform(0, 2),
                               rng.uniform(1, 3))
        assert e.q1 == pytest.approx(max(2.0, (alpha + 2) / (alpha + 1)))
        assert e.q == pytest.approx(e.q1 / gamma)
        assert e.gamma_star <= e.gamma_f + 1e-15
        assert e.gamma_star <= e.attain + 1e-15
        assert all(np.isfinite(v) and v > 0
                   for v in (e.q1, e.q, e.cq, e.gamma_star, e.attain))


def test_kappa_closed_form_q2_hand_value():
    # q = 2, reference c2 = 1 + 1 = 2, P = 4: k* = 1, value = 2 = sqrt(4)
    kstar, value = barriers.kappa_infimum(4.0, 2.0, "reference_cq")
    assert kstar == pytest.approx(1.0)
    assert value == pytest.approx(2.0)
    bk, bv = brute_force_kappa(4.0, 2.0, barriers.cq_reference(2.0))
    assert value == pytest.approx(bv, rel=1e-8)


def test_kappa_degenerate_case():
    assert barriers.kappa_infimum(0.0, 3.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        barriers.kappa_infimum(-1.0, 2.0)
    with pytest.raises(ValueError):
        barriers.kappa_infimum(1.0, 2.0, "bogus")


def test_kappa_exact_variant_recovers_root():
    for P in (1.0, 8.0, 27.0):
        _, value = barriers.kappa_infimum(P, 3.0, "exact_cq")
        assert value == pytest.approx(P ** (1.0 / 3.0), abs=1e-10)
        _, ref = barriers.kappa_infimum(P, 3.0, "reference_cq")
        assert ref < value  # the reference constant undershoots at q = 3
        bk, bv = brute_force_kappa(P, 3.0, barriers.cq_exact(3.0))
        assert value == pytest.approx(bv, rel=1e-8)


def test_kappa_closed_form_matches_brute_force_randomly():
    rng = np.random.default_rng(3)
    for _ in range(300):
        P = rng.uniform(1e-3, 100.0)
        q = rng.uniform(1.05, 6.0)
        for variant, cq in (("reference_cq", barriers.cq_reference(q)),
                            ("exact_cq", barriers.cq_exact(q))):
            kstar, value = barriers.kappa_infimum(P, q, variant)
            bk, bv = brute_force_kappa(P, q, cq)
            assert value == pytest.approx(bv, rel=1e-6)


def test_reference_cq_deficit_at_q3():
    # closed-form reference value over P^(1/3) is the fixed ratio ~ 0.408
    for P in (0.5, 2.0, 50.0):
        _, value = barriers.kappa_infimum(P, 3.0, "reference_cq")
        assert value / P ** (1.0 / 3.0) == pytest.approx(0.408, abs=0.01)


def test_radial_hessian_eigenvalues_hand_and_fd():
    tang, rad = barriers.radial_hessian_eigs(0.5, 1.0, 2)
    assert tang == pytest.approx(0.5)
    assert rad == pytest.approx(-0.25)
    # finite-difference cross-check of the radial profile |x|^beta
    beta = 0.5
    x = np.array([0.8, 0.6])  # |x| = 1
    w = barriers.stationary_barrier(
        dom.make_domain("ball", center=[0, 0], radius=1.0), [0.0, 1.0],
        gamma_b=0.6, c_under=1.0, c_over=1.0)
    hfd = np.zeros((2, 2))
    delta = 1e-5
    pt = np.array([0.5, 0.2])
    for i in range(2):
        for j in range(2):
            ei = np.eye(2)[i] * delta
            ej = np.eye(2)[j] * delta
            hfd[i, j] = (w(pt + ei + ej)[0] - w(pt + ei - ej)[0]
                         - w(pt - ei + ej)[0] + w(pt - ei - ej)[0]) \
                / (4 * delta**2)
    assert np.allclose(hfd, w.hess(pt)[0], rtol=1e-4, atol=1e-4)
    gfd = np.array([(w(pt + np.eye(2)[i] * delta)[0]
                     - w(pt - np.eye(2)[i] * delta)[0]) / (2 * delta)
                    for i in range(2)])
    assert np.allclose(gfd, w.grad(pt)[0], rtol=1e-6, atol=1e-8)


def test_stationary_barrier_anchoring_and_sandwich():
    d = unit_interval()
    w = barriers.stationary_barrier(d, [0.0], gamma_b=0.5, c_under=4.0,
                                    c_over=4.0)
    xs = np.linspace(0.0, 1.0, 33)[:, None]
    vals = w(xs)
    assert vals[0] == 0.0
    assert np.all(vals[1:] > 0.0)
    r = np.abs(xs[:, 0])
    assert np.all(vals <= 4.0 * r**0.5 + 1e-12)
    assert np.all(vals >= 4.0 * r**0.5 - 1e-12)
    with pytest.raises(ValueError):
        barriers.stationary_barrier(d, [0.3], 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        barriers.stationary_barrier(d, [0.0], 1.5, 1.0, 1.0)


def test_stationary_margin_certifies_heat_barrier():
    pb = heat_problem()
    w = barriers.stationary_barrier(pb.domain, [0.0], 0.5, 4.0, 4.0)
    xs = np.linspace(1.0 / 32, 1.0, 32)[:, None]
    sup_m, sub_m = barriers.stationary_margin(w, pb.operator, pb.h, xs,
                                              np.array([0.0, 0.1]))
    assert sup_m <= 0.0
    assert sub_m <= 0.0
    # an undersized constant must fail the certification
    w_small = barriers.stationary_barrier(pb.domain, [0.0], 0.5, 1.0, 1.0)
    sup_bad, _ = barriers.stationary_margin(w_small, pb.operator, pb.h, xs,
                                            np.array([0.0]))
    assert sup_bad > 0.0


def test_parabolic_envelope_boundary_equality_and_trap(heat_solution_64):
    pb = heat_problem()
    fld = heat_solution_64
    exps = barriers.exponents(0.0, pb.psi.gamma, 1.0, pb.domain, 0.0, 1.0)
    env = barriers.parabolic_envelope(pb, exps)
    grid = fld.grid
    pts = grid.points.reshape(-1, 1)
    W = env.upper(pts, fld.times)
    V = env.lower(pts, fld.times)
    mask = grid.inside_mask.ravel()

    # initial-slice equality at the grid's own sample points
    psi0 = pb.psi(pts, 0.0)
    assert np.max(np.abs(W[0][mask] - psi0[mask])) <= 1e-12
    assert np.max(np.abs(V[0][mask] - psi0[mask])) <= 1e-12
    # lateral equality at the boundary nodes
    bidx = np.where(grid.boundary_mask.ravel())[0]
    for k in range(0, len(fld.times), 97):
        t = float(fld.times[k])
        psib = pb.psi(pts[bidx], t)
        assert np.max(np.abs(W[k][bidx] - psib)) <= 1e-12
        assert np.max(np.abs(V[k][bidx] - psib)) <= 1e-12
    # ordering of the trap
    assert np.all(V[:, mask] <= W[:, mask] + 1e-12)


def test_envelope_traps_analytic_heat_solution():
    pb = heat_problem()
    exps = barriers.exponents(0.0, pb.psi.gamma, 1.0, pb.domain, 0.0, 1.0)
    env = barriers.parabolic_envelope(pb, exps)
    xs = np.linspace(0.0, 1.0, 33)[:, None]
    ts = np.linspace(0.0, 0.1, 33)
    exact = np.exp(-np.pi**2 * ts)[:, None] * np.sin(np.pi * xs[:, 0])[None, :]
    W = env.upper(xs, ts)
    V = env.lower(xs, ts)
    assert np.all(V <= exact + 1e-12)
    assert np.all(exact <= W + 1e-12)


def test_whole_space_profile_junction_and_growth():
    for alpha in (-0.5, 0.0, 1.0, 2.0):
        gl = barriers.whole_space_profile(1.0 - 1e-12, alpha)
        gr = barriers.whole_space_profile(1.0 + 1e-12, alpha)
        for left, right in zip(gl, gr):
            assert left == pytest.approx(right, abs=1e-10)
        if alpha >= 0.0:
            g1 = barriers.whole_space_profile(1.0, alpha)
            assert g1[0] == pytest.approx(1.0)
            assert g1[1] == pytest.approx(2.0)
            assert g1[2] == pytest.approx(2.0)
        else:
            q1 = (alpha + 2.0) / (alpha + 1.0)
            g, g1v, g2v = barriers.whole_space_profile(1.0 + 1e-12, alpha)
            assert g == pytest.approx(1.0, abs=1e-10)
            assert g1v == pytest.approx(q1, abs=1e-10)
            assert g2v == pytest.approx(q1 * (q1 - 1.0), abs=1e-10)
    # linear growth of the degenerate branch
    g, _, _ = barriers.whole_space_profile(1e6, 0.0)
    assert g / 1e6 == pytest.approx(3.0, rel=1e-5)


def test_whole_space_profile_fd_cross_check():
    rng = np.random.default_rng(8)
    for alpha in (-0.5, 1.5):
        for r in rng.uniform(0.05, 3.0, size=12):
            if abs(r - 1.0) < 1e-2:
                continue
            h = 1e-4  # balances truncation against cancellation
            gm = barriers.whole_space_profile(r - h, alpha)[0]
            g0 = barriers.whole_space_profile(r, alpha)[0]
            gp = barriers.whole_space_profile(r + h, alpha)[0]
            d1 = (gp - gm) / (2 * h)
            d2 = (gp - 2 * g0 + gm) / h**2
            assert d1 == pytest.approx(
                barriers.whole_space_profile(r, alpha)[1], rel=1e-5, abs=1e-5)
            assert d2 == pytest.approx(
                barriers.whole_space_profile(r, alpha)[2], rel=1e-3, abs=1e-3)


def test_projected_trace_estimate_on_radial_hessian():
    # B = D^2(L |x|^gam): smallest eigenvalue L gam (gam - 1) r^(gam-2) < 0;
    # for X = Y = -2B the projected-trace lower bound
    # |tr(X+Y)| >= 4 gam L (1-gam) r^(gam-2) holds whenever
    # |N + gam - 2| >= 1 - gam (all gam in 1-D and 3-D, gam >= 1/2 in 2-D)
    L = 2.3
    for dimv, gams in ((1, (0.2, 0.5, 0.9)), (2, (0.5, 0.7, 0.9)),
                       (3, (0.2, 0.5, 0.9))):
        for gam in gams:
            for r in (0.3, 1.0, 2.0):
                tang, rad = barriers.radial_hessian_eigs(gam, r, dimv)
                tang, rad = L * tang, L * rad
                assert rad < 0
                assert min(tang, rad) == pytest.approx(
                    L * gam * (gam - 1.0) * r ** (gam - 2.0))
                tr_b = (dimv - 1) * tang + rad
                assert abs(-4.0 * tr_b) >= \
                    4.0 * gam * L * (1.0 - gam) * r ** (gam - 2.0) - 1e-12


def test_whole_space_envelope_initial_equality_and_bound():
    dim = 1
    op = ops.OperatorSpec("trace_with_power", alpha=0.0)
    box = dom.make_domain("interval", x0=-2.0, x1=2.0)
    psi = fields.make_scalar_field("bump", dim, center=0.0, width=0.5,
                                   height=1.0)
    pb = sch.ProblemSpec(operator=op, domain=box, T=0.5,
                         h=fields.make_vector_field("zero", dim),
                         f=fields.make_scalar_field("zero", dim), psi=psi)
    exps = barriers.exponents(0.0, psi.gamma, 1.0, box, 0.0, 1.0)
    env = barriers.whole_space_envelope(pb, exps)
    env.y_stride = 1
    xs = np.linspace(-2.0, 2.0, 65)[:, None]
    W0 = env.upper(xs, np.array([0.0]))[0]
    V0 = env.lower(xs, np.array([0.0]))[0]
    psi0 = psi(xs, 0.0)
    dx = 4.0 / 64
    res = env.constants["c_env"] * dx ** exps.gamma + 1e-6
    assert np.max(np.abs(W0 - psi0)) <= res
    assert np.max(np.abs(V0 - psi0)) <= res
    # boundedness: W <= |psi|_inf + c T^attain with the envelope constant
    ts = np.linspace(0.0, 0.5, 6)
    W = env.upper(xs, ts)
    excess = np.max(W, axis=1) - psi.bound
    fit_c = np.max(excess[1:] / ts[1:] ** exps.attain)
    assert np.all(excess[1:] <= fit_c * ts[1:] ** exps.attain + 1e-9)
    assert np.isfinite(fit_c)


def test_whole_space_envelope_zero_data_symmetry():
    op = ops.OperatorSpec("trace_with_power", alpha=1.0)
    box = dom.make_domain("interval", x0=-1.0, x1=1.0)
    pb = sch.ProblemSpec(operator=op, domain=box, T=0.2,
                         h=fields.make_vector_field("zero", 1),
                         f=fields.make_scalar_field("zero", 1),
                         psi=fields.make_scalar_field("zero", 1))
    exps = barriers.exponents(1.0, 1.0, 1.0, box, 0.0, 1.0)
    env = barriers.whole_space_envelope(pb, exps)
    xs = np.linspace(-1.0, 1.0, 17)[:, None]
    ts = np.linspace(0.0, 0.2, 5)
    W = env.upper(xs, ts)
    V = env.lower(xs, ts)
    assert np.all(W >= -1e-15)
    assert np.all(V <= 1e-15)
    assert np.max(np.abs(W[0])) <= 1e-12
    assert np.max(np.abs(V[0])) <= 1e-12
    assert np.allclose(V, -W)


def test_whole_space_bound_is_finite_and_covers_profile():
    for kind in ("trace_with_power", "pucci_plus"):
        for alpha in (-0.5, 2.0):
            op = ops.OperatorSpec(kind, alpha=alpha, a=1.0, A=2.0)
            B = barriers.whole_space_bound(op, h_bound=0.5, r_max=3.0)
            assert np.isfinite(B) and B >= 0.0
