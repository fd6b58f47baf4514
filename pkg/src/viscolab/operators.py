"""Fully nonlinear gradient-power diffusion operators F(x, p, X).

Every operator in the class factors a power of the gradient against a
uniformly elliptic second-order part:

    trace_with_power            F = |p|^alpha * tr(X)
    p_laplacian_nonvariational  F = |p|^alpha * (tr(X) + alpha <X phat, phat>)
    pucci_plus / pucci_minus    F = |p|^alpha * M±_{a,A}(X)

where M+_{a,A}(X) = A * (sum of positive eigenvalues) + a * (sum of negative
ones) and M- swaps the weights.  All kinds are positively homogeneous,

    F(x, t p, mu X) = |t|^alpha mu F(x, p, X),      t != 0, mu >= 0,

and squeezed between the Pucci bounds: for N >= 0 (semidefinite order)

    a |p|^alpha tr(N) <= F(x, p, M + N) - F(x, p, M) <= A |p|^alpha tr(N).

For alpha < 0 the factor |p|^alpha blows up at p = 0 (singular operator);
for alpha > 0 it vanishes there (degenerate).  Evaluation at p = 0 is
therefore refused; `eval_regularized` caps the gradient magnitude at eps and
is the form the finite-difference scheme consumes.

An optional spatial modulation (x_modulus_scale = s > 0) adds

    lam(x) |p|^alpha <X e1, e1>,     lam(x) = s/2 * (1 + sin x_1),

which keeps all structure properties with upper ellipticity A + s and has
linear coefficient modulus omega(r) = s * r, the strongest testable instance
of coefficient continuity in x.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

KINDS = (
    "trace_with_power",
    "p_laplacian_nonvariational",
    "pucci_plus",
    "pucci_minus",
)

HYPOTHESES = ("H1", "H2", "H3", "H4", "H5", "H6")

# eigenvalues below this relative size are treated as zero in the Pucci
# weighting; they contribute (weight * 0) either way, this only removes
# sign-flip noise at degenerate eigenvalues
PUCCI_EIG_CUTOFF = 1e-14


class ZeroGradientError(ValueError):
    """Raised when F is evaluated at p = 0 with the power factor active."""


@dataclass(frozen=True)
class OperatorSpec:
    """One member of the operator class.

    a, A are the ellipticity bounds; for p_laplacian_nonvariational they are
    derived from alpha (a = min(1, 1+alpha), A = max(1, 1+alpha)) and any
    user-supplied values are overwritten.
    """

    kind: str
    alpha: float
    a: float = 1.0
    A: float = 1.0
    x_modulus_scale: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if not self.alpha > -1.0:
            raise ValueError("alpha must exceed -1")
        if self.x_modulus_scale < 0.0:
            raise ValueError("x_modulus_scale must be >= 0")
        if self.kind == "p_laplacian_nonvariational":
            object.__setattr__(self, "a", min(1.0, 1.0 + self.alpha))
            object.__setattr__(self, "A", max(1.0, 1.0 + self.alpha))
        if not (0.0 < self.a <= self.A):
            raise ValueError("need 0 < a <= A")

    def ellipticity(self) -> tuple[float, float]:
        """Effective (a, A) including the spatial modulation term."""
        return self.a, self.A + self.x_modulus_scale

    def label(self) -> str:
        return f"{self.kind}(alpha={self.alpha:g},a={self.a:g},A={self.A:g})"


def modulation(spec: OperatorSpec, x) -> float:
    """Coefficient lam(x) of the rank-one spatial modulation term."""
    if spec.x_modulus_scale == 0.0:
        return 0.0 * np.asarray(x)[..., 0]
    x = np.asarray(x, dtype=float)
    return 0.5 * spec.x_modulus_scale * (1.0 + np.sin(x[..., 0]))


def pucci_value(eigs: np.ndarray, a: float, A: float, plus: bool) -> np.ndarray:
    """Extremal weighting of a (batched) eigenvalue array along the last axis."""
    eigs = np.asarray(eigs, dtype=float)
    cutoff = PUCCI_EIG_CUTOFF * np.max(np.abs(eigs), axis=-1, keepdims=True)
    lam = np.where(np.abs(eigs) <= cutoff, 0.0, eigs)
    pos = np.clip(lam, 0.0, None).sum(axis=-1)
    neg = np.clip(lam, None, 0.0).sum(axis=-1)
    if plus:
        return A * pos + a * neg
    return a * pos + A * neg


def _second_order_part(spec: OperatorSpec, x, phat, X) -> float:
    """The elliptic part F(x, p, X) / |p|^alpha, with phat = p/|p|."""
    X = np.asarray(X, dtype=float)
    if spec.kind == "trace_with_power":
        val = np.trace(X)
    elif spec.kind == "p_laplacian_nonvariational":
        val = np.trace(X) + spec.alpha * float(phat @ X @ phat)
    else:
        eigs = np.linalg.eigvalsh(X)
        val = float(pucci_value(eigs, spec.a, spec.A, spec.kind == "pucci_plus"))
    if spec.x_modulus_scale > 0.0:
        val = val + float(modulation(spec, x)) * X[0, 0]
    return float(val)


def _check_symmetric(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        return X.reshape(1, 1)
    scale = max(1.0, float(np.max(np.abs(X))))
    if np.max(np.abs(X - X.T)) > 1e-12 * scale:
        raise ValueError("X must be symmetric")
    return X


def eval(spec: OperatorSpec, x, p, X) -> float:  # noqa: A001 - spec'd name
    """Evaluate F(x, p, X).  Requires |p| > 0 and X symmetric."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = _check_symmetric(X)
    norm = float(np.linalg.norm(p))
    if norm == 0.0:
        raise ZeroGradientError("operator class is undefined at p = 0")
    return norm**spec.alpha * _second_order_part(spec, x, p / norm, X)


def eval_regularized(spec: OperatorSpec, x, p, X, eps: float) -> float:
    """eval with |p| capped below at eps in the power factor and in phat.

    Agrees with eval exactly once |p| >= eps and stays finite at p = 0.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = _check_symmetric(X)
    norm = float(np.linalg.norm(p))
    capped = max(norm, eps)
    return capped**spec.alpha * _second_order_part(spec, x, p / capped, X)


# ---------------------------------------------------------------------------
# property-test oracles for the structure hypotheses
# ---------------------------------------------------------------------------


@dataclass
class PropertyReport:
    """Worst-case report of one sampled structure check."""

    hypothesis: str
    samples_tested: int
    max_violation: float
    witnesses: list = dc_field(default_factory=list)
    constant_found: float | None = None
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        # worst-case reduction; order independent
        if other.hypothesis != self.hypothesis:
            raise ValueError("cannot merge reports for different hypotheses")
        merged = PropertyReport(
            hypothesis=self.hypothesis,
            samples_tested=self.samples_tested + other.samples_tested,
            max_violation=max(self.max_violation, other.max_violation),
            witnesses=sorted(
                self.witnesses + other.witnesses, key=lambda w: -w["violation"]
            )[:3],
            tol=self.tol,
        )
        consts = [c for c in (self.constant_found, other.constant_found) if c is not None]
        merged.constant_found = max(consts) if consts else None
        return merged


def _random_inputs(rng: np.random.Generator, dim: int):
    x = rng.uniform(-1.0, 1.0, size=dim)
    p = rng.uniform(-1.0, 1.0, size=dim)
    while np.linalg.norm(p) < 0.2:
        p = rng.uniform(-1.0, 1.0, size=dim)
    M = rng.uniform(-1.0, 1.0, size=(dim, dim))
    M = 0.5 * (M + M.T)
    return x, p, M


def _psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    R = rng.uniform(-1.0, 1.0, size=(dim, dim))
    return R @ R.T


def _rel(diff: float, *scales: float) -> float:
    denom = max(max(abs(s) for s in scales), 1e-30)
    return abs(diff) / denom


def _chunked(n_samples: int, n_workers: int):
    base = n_samples // n_workers
    sizes = [base + (1 if k < n_samples % n_workers else 0) for k in range(n_workers)]
    return [s for s in sizes if s > 0]


def check_homogeneity(
    spec: OperatorSpec, n_samples: int, seed: int, n_workers: int = 1
) -> PropertyReport:
    """Sampled check of F(x, tp, mu X) = |t|^alpha mu F(x, p, X)."""
    if n_samples < 1:
        raise ValueError("n_samples >= 1 required")
    reports = []
    for chunk_id, size in enumerate(_chunked(n_samples, n_workers)):
        rng = np.random.default_rng(seed + 1009 * chunk_id)
        worst, witness = 0.0, None
        for _ in range(size):
            dim = int(rng.integers(1, 4))
            x, p, X = _random_inputs(rng, dim)
            t = rng.uniform(-3.0, 3.0)
            if abs(t) < 1e-3:
                t = 1.0
            mu = rng.uniform(0.0, 3.0)
            lhs = eval(spec, x, t * p, mu * X)
            rhs = abs(t) ** spec.alpha * mu * eval(spec, x, p, X)
            v = _rel(lhs - rhs, lhs, rhs)
            if v > worst:
                worst = v
                witness = {"x": x.tolist(), "p": p.tolist(), "X": X.tolist(),
                           "t": t, "mu": mu, "violation": v}
        reports.append(PropertyReport("H1", size, worst,
                                      [witness] if witness else []))
    out = reports[0]
    for r in reports[1:]:
        out = out.merge(r)
    return out


def check_ellipticity_sandwich(
    spec: OperatorSpec, n_samples: int, seed: int, n_workers: int = 1
) -> PropertyReport:
    """Sampled check of the uniform ellipticity increment bounds.

    Verifies a_eff |p|^alpha tr(N) <= F(x,p,M+N) - F(x,p,M)
    <= A_eff |p|^alpha tr(N) for random symmetric M and random N >= 0.
    """
    if n_samples < 1:
        raise ValueError("n_samples >= 1 required")
    a_eff, A_eff = spec.ellipticity()
    reports = []
    for chunk_id, size in enumerate(_chunked(n_samples, n_workers)):
        rng = np.random.default_rng(seed + 1009 * chunk_id)
        worst, witness = 0.0, None
        for _ in range(size):
            dim = int(rng.integers(1, 4))
            x, p, M = _random_inputs(rng, dim)
            N = _psd(rng, dim)
            scale = np.linalg.norm(p) ** spec.alpha * np.trace(N)
            f0, f1 = eval(spec, x, p, M), eval(spec, x, p, M + N)
            inc = f1 - f0
            lo, hi = a_eff * scale, A_eff * scale
            # cancellation in f1 - f0 sets the attainable accuracy
            v = max(_rel(max(lo - inc, 0.0), scale, inc, f0, f1),
                    _rel(max(inc - hi, 0.0), scale, inc, f0, f1))
            if v > worst:
                worst = v
                witness = {"x": x.tolist(), "p": p.tolist(), "M": M.tolist(),
                           "N": N.tolist(), "violation": v}
        reports.append(PropertyReport("H2", size, worst,
                                      [witness] if witness else []))
    out = reports[0]
    for r in reports[1:]:
        out = out.merge(r)
    return out


def check_degenerate_monotonicity(
    spec: OperatorSpec, n_samples: int, seed: int
) -> PropertyReport:
    """X <= Y in the semidefinite order implies F(., p, X) <= F(., p, Y)."""
    rng = np.random.default_rng(seed)
    worst, witness = 0.0, None
    for _ in range(n_samples):
        dim = int(rng.integers(1, 4))
        x, p, X = _random_inputs(rng, dim)
        Y = X + _psd(rng, dim)
        fx, fy = eval(spec, x, p, X), eval(spec, x, p, Y)
        v = _rel(max(fx - fy, 0.0), fx, fy, 1.0)
        if v > worst:
            worst = v
            witness = {"x": x.tolist(), "p": p.tolist(), "X": X.tolist(),
                       "Y": Y.tolist(), "violation": v}
    return PropertyReport("H2", n_samples, worst, [witness] if witness else [])


def check_structure(
    spec: OperatorSpec, which: str, n_samples: int, seed: int, n_workers: int = 1
) -> PropertyReport:
    """Sampled coefficient-continuity (H4) or gradient-Lipschitz (H6) check.

    H4: worst ratio |F(x,p,X) - F(y,p,X)| / (omega(|x-y|) |p|^alpha |X|)
        with omega(r) = x_modulus_scale * r; violation is the excess over 1.
    H6: worst ratio |F(x,p+q,X) - F(x,p,X)| / (|p|^(alpha-1) |q| |X|) over
        samples with |q| < |p|/2; reported as the smallest admissible
        constant, violation stays 0 while the ratio is finite.
    """
    if which not in ("H4", "H6"):
        raise ValueError("which must be H4 or H6")
    if n_samples < 1:
        raise ValueError("n_samples >= 1 required")
    reports = []
    for chunk_id, size in enumerate(_chunked(n_samples, n_workers)):
        rng = np.random.default_rng(seed + 1009 * chunk_id)
        worst_ratio, worst_violation, witness = 0.0, 0.0, None
        for _ in range(size):
            dim = int(rng.integers(1, 4))
            x, p, X = _random_inputs(rng, dim)
            Xnorm = float(np.max(np.abs(np.linalg.eigvalsh(X))))
            pnorm = float(np.linalg.norm(p))
            if which == "H4":
                y = rng.uniform(-1.0, 1.0, size=dim)
                num = abs(eval(spec, x, p, X) - eval(spec, y, p, X))
                denom = spec.x_modulus_scale * np.linalg.norm(x - y) * \
                    pnorm**spec.alpha * Xnorm
                if denom == 0.0:
                    ratio = 0.0 if num <= 1e-12 * max(1.0, Xnorm) else np.inf
                else:
                    ratio = num / denom
                violation = max(ratio - 1.0, 0.0)
            else:
                q = rng.uniform(-1.0, 1.0, size=dim)
                qn = np.linalg.norm(q)
                if qn == 0.0:
                    continue
                q *= rng.uniform(0.05, 0.499) * pnorm / qn
                num = abs(eval(spec, x, p + q, X) - eval(spec, x, p, X))
                denom = pnorm ** (spec.alpha - 1.0) * np.linalg.norm(q) * Xnorm
                ratio = num / max(denom, 1e-300)
                violation = 0.0 if np.isfinite(ratio) else np.inf
            if ratio > worst_ratio or witness is None:
                worst_ratio = max(worst_ratio, ratio)
                witness = {"x": x.tolist(), "p": p.tolist(), "X": X.tolist(),
                           "ratio": float(ratio), "violation": float(violation)}
            worst_violation = max(worst_violation, violation)
        rep = PropertyReport(which, size, worst_violation,
                             [witness] if witness else [])
        rep.constant_found = worst_ratio
        reports.append(rep)
    out = reports[0]
    for r in reports[1:]:
        out = out.merge(r)
    return out
