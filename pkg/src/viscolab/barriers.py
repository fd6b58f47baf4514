"""Closed-form exponents, constants and sub/supersolution envelopes.

Exponent bookkeeping for boundary data of Hoelder exponent gamma and a
source of time exponent gamma_f:

    q1 = sup(2, (alpha+2)/(alpha+1)),   q = q1 / gamma,
    c_q = (q-1)^(q-1) + (q-1)^((1-q)/q),
    attainment exponent = 1 / (q (alpha+1) - alpha),
    gamma_star = inf(gamma_f, attainment exponent),
    K2 = (diam |h|_inf + A (N + q1 - 2)) diam^(sup(alpha, 0)).

The kappa identity:  inf_k { k + P / (c^q k^(q-1)) } has minimizer
k* = ((q-1) P / c^q)^(1/q) and value k* q/(q-1).  With the reference c_q
above the value equals P^(1/q) only at q = 2; the choice
c = q (q-1)^((1-q)/q) makes the identity exact for every q > 1, so the
envelopes default to the exact variant (their boundary equality needs it)
and both variants are shipped.

Upper/lower envelopes W, V trap solutions of the Dirichlet problem and
encode boundary moduli:

    W1(x,t) = inf over boundary samples (z,tau) of
              psi(z,tau) + lambda2 W_z(x) + |psi_t| |t - tau|,
    W2(x,t) = inf over y, kappa of  psi(y,0) + kappa + K1 |x-y|^q1
              + (|f| + |psi_t|) t + (K1 q1)^(1+alpha) K2 t,
    W = min(W1, W2),      K1 = c_psi^q / (c_q^q kappa^(q-1)),

with lambda2 = c_psi/c_lower + (|psi_t| + |f|)^(1/(1+alpha)), and V the
mirrored supremum construction (V = -W built from -psi).  Note the time
slope of the W2 family carries the factor q1^(1+alpha): the gradient of
K1 |x-y|^q1 has magnitude K1 q1 |x-y|^(q1-1), so the power-factor budget
is (K1 q1)^(1+alpha), not K1^(1+alpha).

W_z is realized as the radial power c |x-z|^gamma_b.  That profile is only
a one-sided barrier when the operator weights its negative radial Hessian
eigenvalue strongly enough (always in dimension one; for extremal-type
operators with A(1-gamma_b) > a(N-1) in higher dimension), so the
inequality F(x, grad W_z, D^2 W_z) + h . grad W_z |grad W_z|^alpha <= -1
is certified numerically for every run instead of assumed.

All infima are taken over finite sample nets (boundary nets, the
evaluation points themselves, and a kappa net containing the closed-form
minimizer of the t = 0 problem), so every envelope value is the minimum of
finitely many exact one-sided solutions; boundary equality then holds at
net resolution and exactly on the evaluation grid's own boundary nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from . import domain as dom

KAPPA_VARIANTS = ("reference_cq", "exact_cq")


@dataclass(frozen=True)
class ExponentSet:
    alpha: float
    gamma: float
    gamma_f: float
    q1: float
    q: float
    cq: float
    gamma_star: float
    attain: float
    k2: float

    def __post_init__(self):
        for name in ("q1", "q", "cq", "gamma_star", "attain"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"exponent field {name} must be finite positive")


def cq_reference(q: float) -> float:
    return (q - 1.0) ** (q - 1.0) + (q - 1.0) ** ((1.0 - q) / q)


def cq_exact(q: float) -> float:
    """The constant that makes the kappa infimum equal P^(1/q) exactly."""
    return q * (q - 1.0) ** ((1.0 - q) / q)


def exponents(alpha: float, gamma: float, gamma_f: float,
              domain: dom.DomainSpec, h_bound: float,
              A_ellip: float) -> ExponentSet:
    """All derived exponents and the growth constant K2 for one instance."""
    if not alpha > -1.0:
        raise ValueError("alpha must exceed -1")
    if not (0.0 < gamma <= 1.0 and 0.0 < gamma_f <= 1.0):
        raise ValueError("gamma and gamma_f must lie in (0, 1]")
    q1 = max(2.0, (alpha + 2.0) / (alpha + 1.0))
    q = q1 / gamma
    attain = 1.0 / (q * (alpha + 1.0) - alpha)
    diam = domain.diameter
    k2 = (diam * h_bound + A_ellip * (domain.dim + q1 - 2.0)) \
        * diam ** max(alpha, 0.0)
    return ExponentSet(alpha=alpha, gamma=gamma, gamma_f=gamma_f, q1=q1, q=q,
                       cq=cq_reference(q), gamma_star=min(gamma_f, attain),
                       attain=attain, k2=k2)


def kappa_infimum(P: float, q: float,
                  variant: str = "reference_cq") -> tuple[float, float]:
    """Closed-form minimizer of k + P / (c^q k^(q-1)) over k > 0.

    Returns (k*, value).  Under exact_cq the value is P^(1/q) identically;
    under reference_cq the value is <= P^(1/q), with equality at q = 2.
    """
    if P < 0:
        raise ValueError("P must be nonnegative")
    if not q > 1.0:
        raise ValueError("q must exceed 1")
    if variant not in KAPPA_VARIANTS:
        raise ValueError(f"variant must be one of {KAPPA_VARIANTS}")
    if P == 0.0:
        return 0.0, 0.0
    c = cq_reference(q) if variant == "reference_cq" else cq_exact(q)
    kstar = ((q - 1.0) * P) ** (1.0 / q) / c
    return kstar, kstar * q / (q - 1.0)


# ---------------------------------------------------------------------------
# radial power profiles
# ---------------------------------------------------------------------------


def radial_hessian_eigs(beta: float, r, dim: int):
    """Eigenvalues of D^2 |x|^beta at radius r.

    Tangential eigenvalue beta r^(beta-2) with multiplicity dim-1 and
    radial eigenvalue beta (beta-1) r^(beta-2).
    """
    r = np.asarray(r, dtype=float)
    tangential = beta * r ** (beta - 2.0)
    radial = beta * (beta - 1.0) * r ** (beta - 2.0)
    return tangential, radial


@dataclass(frozen=True)
class StationaryBarrier:
    """Radial profile W_z(x) = c_over |x - z|^gamma_b anchored at z."""

    z: np.ndarray
    gamma_b: float
    c_under: float
    c_over: float

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return self.c_over * np.linalg.norm(
            np.atleast_2d(pts) - self.z, axis=-1) ** self.gamma_b

    def grad(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts - self.z
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        return self.c_over * self.gamma_b * r ** (self.gamma_b - 2.0) * d

    def hess(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts - self.z
        r = np.linalg.norm(d, axis=-1)
        n = pts.shape[-1]
        rhat = d / r[..., None]
        eye = np.eye(n)
        c = self.c_over * self.gamma_b * r ** (self.gamma_b - 2.0)
        outer = rhat[..., :, None] * rhat[..., None, :]
        return c[..., None, None] * (eye + (self.gamma_b - 2.0) * outer)


def stationary_barrier(domain: dom.DomainSpec, z, gamma_b: float,
                       c_under: float, c_over: float) -> StationaryBarrier:
    if not (0.0 < gamma_b < 1.0):
        raise ValueError("gamma_b must lie in (0, 1)")
    if not (0.0 < c_under <= c_over):
        raise ValueError("need 0 < c_under <= c_over")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if abs(dom.signed_distance(domain, z)) > 1e-9 * max(1.0, domain.diameter):
        raise ValueError("barrier anchor must lie on the boundary")
    return StationaryBarrier(z=z, gamma_b=gamma_b,
                             c_under=c_under, c_over=c_over)


def stationary_margin(barrier: StationaryBarrier, operator: ops.OperatorSpec,
                      h_field, pts, times) -> tuple[float, float]:
    """Worst one-sided residuals of the radial barrier at the given nodes.

    Returns (super_margin, sub_margin):
      super_margin = max over nodes of  F(x, gW, D2W) + h . gW |gW|^a  + 1
      sub_margin   = max over nodes of -F(x, -gW, -D2W) + h . gW |gW|^a + 1
    Both must be <= 0 for W_z (resp. -W_z) to act as barrier.  Nodes closer
    to z than half the typical spacing are skipped (the gradient there is
    unbounded and never tested).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    r = np.linalg.norm(pts - barrier.z, axis=-1)
    keep = r > 1e-12
    pts = pts[keep]
    grads = barrier.grad(pts)
    hesses = barrier.hess(pts)
    sup_m, sub_m = -np.inf, -np.inf
    times = np.atleast_1d(times)
    t_probe = [float(times[0]), float(times[len(times) // 2]),
               float(times[-1])]
    for x, g, H in zip(pts, grads, hesses):
        gn = float(np.linalg.norm(g))
        fw = ops.eval(operator, x, g, H)
        fv = ops.eval(operator, x, -g, -H)
        drift = 0.0
        for t in t_probe:
            drift = max(drift, float(np.dot(h_field(x, t), g)) * gn**operator.alpha)
        sup_m = max(sup_m, fw + drift + 1.0)
        sub_m = max(sub_m, -fv + drift + 1.0)
    return sup_m, sub_m


# ---------------------------------------------------------------------------
# parabolic envelope on a bounded domain
# ---------------------------------------------------------------------------


@dataclass
class BarrierEnvelope:
    """Evaluable lower/upper trap (V, W) with the constants that built it."""

    exps: ExponentSet
    constants: dict
    z_static: np.ndarray
    gamma_b: float
    c_under: float
    c_over: float
    _problem: object = None
    kappa_variant: str = "exact_cq"
    n_kappa: int = 48
    certified: bool = False

    # -- construction helpers -------------------------------------------------

    def _zs_for(self, pts: np.ndarray) -> np.ndarray:
        d = np.abs(dom.signed_distance(self._problem.domain, pts))
        on_b = pts[d <= 1e-9 * max(1.0, self._problem.domain.diameter)]
        if len(on_b) == 0:
            return self.z_static
        return np.unique(np.round(np.vstack([self.z_static, on_b]), 12), axis=0)

    def _kappa_net(self) -> np.ndarray:
        scale = max(self.constants["c_psi"] *
                    self._problem.domain.diameter ** self.exps.gamma, 1e-3)
        return np.geomspace(1e-6 * scale, 1e4 * scale, self.n_kappa)

    def _one_sided(self, pts, times, sign: float) -> np.ndarray:
        """W-construction applied to sign * psi; returns (n_times, n_pts)."""
        pb = self._problem
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        times = np.atleast_1d(np.asarray(times, dtype=float))
        e = self.exps
        c = self.constants
        lam2 = c["lambda2"]

        # W1: boundary-anchored family
        zs = self._zs_for(pts)
        psi_zt = np.stack([sign * pb.psi(zs, float(t)) for t in times])  # (T, Z)
        if c["lip_t"] == 0.0:
            m_z = psi_zt  # time-constant data: inf over tau is the value itself
        else:
            gaps = c["lip_t"] * np.abs(times[:, None] - times[None, :])  # (T, T)
            m_z = np.min(psi_zt[None, :, :] + gaps[:, :, None], axis=1)
        dists = np.linalg.norm(pts[:, None, :] - zs[None, :, :], axis=-1)
        wz = self.c_over * dists ** self.gamma_b  # (M, Z)
        w1 = np.min(m_z[:, None, :] + lam2 * wz[None, :, :], axis=-1)  # (T, M)

        # W2: interior family with the kappa net + closed-form anchors
        inside = dom.signed_distance(pb.domain, pts) >= -1e-12
        ys = pts[inside]
        psi_y0 = sign * pb.psi(ys, 0.0)  # (Y,)
        r = np.linalg.norm(pts[:, None, :] - ys[None, :, :], axis=-1)  # (M, Y)
        rq1 = r ** e.q1
        # signed source bound: sup of sign*f, sharper than |f|_inf and still
        # a valid one-sided slope
        f_slope = c["f_sup"] if sign > 0 else -c["f_inf"]
        drift0 = f_slope + c["lip_t"]
        kq = self._kappa_net()
        k1 = c["c_psi"] ** e.q / (c["cq_used"] ** e.q * kq ** (e.q - 1.0))
        slope_k = drift0 + (k1 * e.q1) ** (1.0 + e.alpha) * e.k2  # (K,)
        base_k = psi_y0[:, None] + kq[None, :] \
            + k1[None, :] * rq1[:, :, None]  # (M, Y, K) via broadcast below
        # anchors: exact t=0 minimizer per (x, y) pair
        P = c["c_psi"] ** e.q * rq1
        cq_used = c["cq_used"]
        kstar = ((e.q - 1.0) * P) ** (1.0 / e.q) / cq_used
        with np.errstate(divide="ignore", invalid="ignore"):
            k1_star = np.where(kstar > 0.0,
                               c["c_psi"] ** e.q /
                               (cq_used ** e.q * kstar ** (e.q - 1.0)), 0.0)
        anchor_base = psi_y0[None, :] + kstar * e.q / (e.q - 1.0)  # (M, Y)
        anchor_slope = drift0 + np.where(
            kstar > 0.0, (k1_star * e.q1) ** (1.0 + e.alpha) * e.k2, 1e300)

        out = np.empty((len(times), len(pts)))
        block = max(1, int(4e6 // max(base_k.size, 1)))
        for s in range(0, len(times), block):
            tb = times[s:s + block]
            cand = base_k[None, :, :, :] + slope_k[None, None, None, :] * \
                tb[:, None, None, None]
            w2 = cand.min(axis=(2, 3))
            anch = anchor_base[None, :, :] + anchor_slope[None, :, :] * \
                tb[:, None, None]
            w2 = np.minimum(w2, anch.min(axis=2))
            out[s:s + block] = np.minimum(w1[s:s + block], w2)
        return out

    # -- public surface --------------------------------------------------------

    def upper(self, pts, times) -> np.ndarray:
        """W on the given points and times, shape (n_times, n_pts)."""
        return self._one_sided(pts, times, +1.0)

    def lower(self, pts, times) -> np.ndarray:
        """V on the given points and times (mirrored construction)."""
        return -self._one_sided(pts, times, -1.0)

    def stationary(self, z) -> StationaryBarrier:
        return stationary_barrier(self._problem.domain, z, self.gamma_b,
                                  self.c_under, self.c_over)

    def certify_stationary(self, pts, times) -> dict:
        """Certify the radial barrier inequalities at all anchors."""
        worst_super, worst_sub = -np.inf, -np.inf
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        for z in self._zs_for(pts):
            m_sup, m_sub = stationary_margin(
                self.stationary(z), self._problem.operator,
                self._problem.h, pts, times)
            worst_super = max(worst_super, m_sup)
            worst_sub = max(worst_sub, m_sub)
        self.certified = worst_super <= 0.0 and worst_sub <= 0.0
        return {"super_margin": worst_super, "sub_margin": worst_sub,
                "certified": self.certified}


def parabolic_envelope(problem, exps: ExponentSet,
                       boundary_samples: int = 64,
                       kappa_variant: str = "exact_cq") -> BarrierEnvelope:
    """Build the (V, W) trap for a bounded-domain problem.

    psi must be Hoelder in x (constant c_psi, exponent exps.gamma) and
    Lipschitz in t; f must be bounded.  The returned envelope evaluates
    pointwise minima/maxima of exact one-sided solutions over finite nets.
    """
    psi = problem.psi
    if not np.isfinite(psi.c_x) or not np.isfinite(problem.f.bound):
        raise ValueError("need finite Hoelder data and a bounded source")
    if kappa_variant not in KAPPA_VARIANTS:
        raise ValueError(f"variant must be one of {KAPPA_VARIANTS}")
    spacing = problem.domain.diameter / max(8, boundary_samples)
    z_static = dom.boundary_net(problem.domain, spacing)
    lam1 = (psi.lip_t + problem.f.bound) ** (1.0 / (1.0 + problem.operator.alpha))
    gamma_b = problem.barrier_gamma
    c_bar = problem.barrier_c
    lam2 = psi.c_x / c_bar + lam1
    cq_used = cq_reference(exps.q) if kappa_variant == "reference_cq" \
        else cq_exact(exps.q)
    constants = {
        "c_psi": psi.c_x, "lip_t": psi.lip_t, "f_bound": problem.f.bound,
        "f_sup": problem.f.sup_val, "f_inf": problem.f.inf_val,
        "h_bound": problem.h.bound, "lambda1": lam1, "lambda2": lam2,
        "cq_used": cq_used, "gamma": exps.gamma,
    }
    return BarrierEnvelope(exps=exps, constants=constants, z_static=z_static,
                           gamma_b=gamma_b, c_under=c_bar, c_over=c_bar,
                           _problem=problem, kappa_variant=kappa_variant)


# ---------------------------------------------------------------------------
# whole-space profile and envelope
# ---------------------------------------------------------------------------


def whole_space_profile(r, alpha: float):
    """Linear-growth radial profile G with two C^2-matched branches.

    alpha >= 0:  G = r^2 inside r < 1, (r-1)(3 - 1/r) + 1 outside.
    alpha < 0:   G = r^q1 inside, q1(1+q1) r/2 + q1(q1-1)/(2r) + 1 - q1^2
    outside, with q1 = (alpha+2)/(alpha+1).  Returns (G, G', G'').
    """
    if not alpha > -1.0:
        raise ValueError("alpha must exceed -1")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    if alpha >= 0.0:
        inner = r < 1.0
        # outer-branch formulas are only consumed at r >= 1; the clamp just
        # keeps the unused branch finite
        rs = np.maximum(r, 0.5)
        g = np.where(inner, r**2, (r - 1.0) * (3.0 - 1.0 / rs) + 1.0)
        g1 = np.where(inner, 2.0 * r, 3.0 - rs**-2.0)
        g2 = np.where(inner, 2.0, 2.0 * rs**-3.0)
    else:
        q1 = (alpha + 2.0) / (alpha + 1.0)
        inner = r < 1.0
        rs = np.maximum(r, 0.5)
        g = np.where(inner, r**q1,
                     q1 * (1.0 + q1) * r / 2.0 + q1 * (q1 - 1.0) / (2.0 * rs)
                     + 1.0 - q1**2)
        g1 = np.where(inner, q1 * np.maximum(r, 1e-300) ** (q1 - 1.0),
                      q1 * (1.0 + q1) / 2.0 - q1 * (q1 - 1.0) / (2.0 * rs**2))
        g2 = np.where(inner, q1 * (q1 - 1.0) *
                      np.maximum(r, 1e-300) ** (q1 - 2.0),
                      q1 * (q1 - 1.0) / rs**3)
        if r.ndim == 0 and r == 0.0:
            g, g1, g2 = np.asarray(0.0), np.asarray(0.0), np.asarray(0.0)
        else:
            g1 = np.where(r == 0.0, 0.0, g1)
            g2 = np.where(r == 0.0, 0.0, g2)
    if r.ndim == 0:
        return float(g), float(g1), float(g2)
    return g, g1, g2


def whole_space_bound(operator: ops.OperatorSpec, h_bound: float,
                      r_max: float, n_samples: int = 4096) -> float:
    """Numerical bound B with F(x, grad G, D^2 G) + h-term <= B on the box.

    The radial Hessian of G(|x|) has eigenvalues G'' (radial) and G'/r
    (tangential); the extremal weighting over those closed forms is
    maximized over a dense radius net.
    """
    r = np.linspace(1e-9, max(r_max, 2.0) * np.sqrt(3.0), n_samples)
    g, g1, g2 = whole_space_profile(r, operator.alpha)
    tang = g1 / r
    alpha = operator.alpha
    # second-order part per kind on the radial eigenpair
    dims = (1, 2, 3)
    worst = 0.0
    for N in dims:
        if operator.kind == "trace_with_power":
            sec = g2 + (N - 1) * tang
        elif operator.kind == "p_laplacian_nonvariational":
            sec = g2 + (N - 1) * tang + alpha * g2
        else:
            eigs = np.stack([g2] + [tang] * (N - 1), axis=-1)
            sec = ops.pucci_value(eigs, operator.a, operator.A,
                                  operator.kind == "pucci_plus")
        if operator.x_modulus_scale > 0.0:
            sec = sec + operator.x_modulus_scale * np.maximum(
                np.abs(g2), np.abs(tang))
        val = np.where(g1 > 0, g1**alpha, 0.0) * sec \
            + h_bound * np.abs(g1) ** (1.0 + alpha)
        worst = max(worst, float(np.max(val)))
    return worst


@dataclass
class WholeSpaceEnvelope:
    """Trap (V, W) for the Cauchy problem, built on the profile G."""

    exps: ExponentSet
    constants: dict
    bound_B: float
    _problem: object = None
    n_kappa: int = 32
    y_stride: int = 2

    def _one_sided(self, pts, times, sign: float) -> np.ndarray:
        pb = self._problem
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        times = np.atleast_1d(np.asarray(times, dtype=float))
        e = self.exps
        c = self.constants["c_env"]  # c_psi + 2 |psi|_inf
        ys = pts[:: self.y_stride]
        psi_y = sign * pb.psi(ys, 0.0)
        r = np.linalg.norm(pts[:, None, :] - ys[None, :, :], axis=-1)
        G = whole_space_profile(r.ravel(), e.alpha)[0].reshape(r.shape)
        scale = max(c, 1e-3)
        f_slope = pb.f.sup_val if sign > 0 else -pb.f.inf_val
        kq = np.geomspace(1e-6 * scale, 1e4 * scale, self.n_kappa)
        lam = c ** e.q / (self.constants["cq_used"] ** e.q * kq ** (e.q - 1.0))
        slope = f_slope + lam ** (1.0 + e.alpha) * self.bound_B
        base = psi_y[None, :, None] + kq[None, None, :] \
            + lam[None, None, :] * G[:, :, None]  # (M, Y, K)
        P = c ** e.q * G
        kstar = ((e.q - 1.0) * P) ** (1.0 / e.q) / self.constants["cq_used"]
        with np.errstate(divide="ignore", invalid="ignore"):
            lam_star = np.where(kstar > 0.0,
                                c ** e.q / (self.constants["cq_used"] ** e.q
                                            * kstar ** (e.q - 1.0)), 0.0)
        anchor_base = psi_y[None, :] + kstar * e.q / (e.q - 1.0)
        anchor_slope = f_slope + np.where(
            kstar > 0.0, lam_star ** (1.0 + e.alpha) * self.bound_B, 1e300)
        out = np.empty((len(times), len(pts)))
        for i, t in enumerate(times):
            w = (base + slope[None, None, :] * t).min(axis=(1, 2))
            w = np.minimum(w, (anchor_base + anchor_slope * t).min(axis=1))
            out[i] = w
        return out

    def upper(self, pts, times) -> np.ndarray:
        return self._one_sided(pts, times, +1.0)

    def lower(self, pts, times) -> np.ndarray:
        return -self._one_sided(pts, times, -1.0)


def whole_space_envelope(problem, exps: ExponentSet,
                         B: float | None = None) -> WholeSpaceEnvelope:
    """Build the Cauchy-problem trap; B defaults to the numerical bound."""
    psi = problem.psi
    if not np.isfinite(psi.bound):
        raise ValueError("psi must be bounded on the whole space")
    if B is None:
        B = whole_space_bound(problem.operator, problem.h.bound,
                              problem.domain.diameter / 2.0)
    cq_used = cq_exact(exps.q)
    constants = {"c_env": psi.c_x + 2.0 * psi.bound, "cq_used": cq_used,
                 "psi_bound": psi.bound, "f_bound": problem.f.bound}
    return WholeSpaceEnvelope(exps=exps, constants=constants, bound_B=B,
                              _problem=problem)
