"""Measured Hoelder moduli of computed fields versus predicted exponents.

The estimator computes M(r) = max over sampled node pairs at separation r
of the field difference, over at least four dyadic separations, and fits
log M against log r by least squares.  Pair sampling is random but seeded
(10^4 pairs per scale by default); max statistics stabilize quickly, so
exhaustive pair enumeration is never needed.

All verdicts are one-sided: fitted exponent >= prediction - margin, with
margin 0.1 absorbing discretization bias.  The theory provides upper
bounds on moduli, so fields smoother than predicted must pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import barriers
from . import scheme as sch

MARGIN = 0.1


@dataclass
class HolderEstimate:
    axis: str                  # "space", "time" or "boundary_attainment"
    fitted_exponent: float
    fitted_constant: float
    r_range: tuple
    residual_of_fit: float
    predicted_exponent: float
    passed: bool = True
    degenerate: bool = False


def _loglog_fit(rs, ms):
    rs = np.asarray(rs, dtype=float)
    ms = np.asarray(ms, dtype=float)
    keep = ms > 0
    if np.count_nonzero(keep) < 2:
        return None
    lx, ly = np.log(rs[keep]), np.log(ms[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return float(slope), float(np.exp(intercept)), resid


def _dyadic_separations(n_cells: int, min_scales: int = 4) -> list[int]:
    seps = []
    k = 1
    while k <= max(2, n_cells // 2):
        seps.append(k)
        k *= 2
    if len(seps) < min_scales:
        raise ValueError("grid too coarse for a dyadic Hoelder fit")
    return seps


def holder_fit(field: sch.SpaceTimeField, axis: str, region: str = "interior",
               predicted: float = np.nan, pairs_per_scale: int = 10000,
               seed: int = 0) -> HolderEstimate:
    """Fitted modulus exponent of the field along one axis."""
    if axis not in ("space", "time"):
        raise ValueError("axis must be 'space' or 'time'")
    if region not in ("interior", "all"):
        raise ValueError("region must be 'interior' or 'all'")
    grid = field.grid
    rng = np.random.default_rng(seed)
    vals = field.values
    if axis == "space":
        mask = grid.interior_mask if region == "interior" else grid.inside_mask
        idx = np.argwhere(mask)
        n_cells = min(grid.shape) - 1
        seps = _dyadic_separations(n_cells)
        rs, ms = [], []
        for s in seps:
            best = 0.0
            picks = rng.integers(0, len(idx), size=pairs_per_scale)
            axes = rng.integers(0, grid.domain.dim, size=pairs_per_scale)
            tsel = rng.integers(0, vals.shape[0], size=pairs_per_scale)
            base = idx[picks]
            partner = base.copy()
            partner[np.arange(len(picks)), axes] += s
            good = np.all(partner < np.array(grid.shape), axis=1)
            for b, p, tk in zip(base[good], partner[good], tsel[good]):
                if not mask[tuple(p)]:
                    continue
                d = abs(vals[(tk,) + tuple(b)] - vals[(tk,) + tuple(p)])
                best = max(best, float(d))
            rs.append(s * grid.dx)
            ms.append(best)
    else:
        n_slices = vals.shape[0]
        seps = _dyadic_separations(n_slices - 1)
        record_dt = float(field.times[1] - field.times[0])
        mask = grid.interior_mask if region == "interior" else grid.inside_mask
        flat = vals.reshape(n_slices, -1)[:, mask.ravel()]
        rs, ms = [], []
        for s in seps:
            diffs = np.abs(flat[s:] - flat[:-s])
            rs.append(s * record_dt)
            ms.append(float(np.max(diffs)))
    fit = _loglog_fit(rs, ms)
    if fit is None:
        return HolderEstimate(axis=axis, fitted_exponent=np.nan,
                              fitted_constant=0.0, r_range=(rs[0], rs[-1]),
                              residual_of_fit=0.0,
                              predicted_exponent=predicted, passed=True,
                              degenerate=True)
    slope, constant, resid = fit
    passed = bool(np.isnan(predicted) or slope >= predicted - MARGIN)
    return HolderEstimate(axis=axis, fitted_exponent=slope,
                          fitted_constant=constant, r_range=(rs[0], rs[-1]),
                          residual_of_fit=resid,
                          predicted_exponent=predicted, passed=passed)


def boundary_rate(field: sch.SpaceTimeField, problem: sch.ProblemSpec,
                  exps: barriers.ExponentSet | None = None,
                  n_scales: int = 5) -> HolderEstimate:
    """Fitted attainment rate max_x |u(x,t) - psi(x,0)| ~ C t^beta.

    The prediction is the attainment exponent 1/(q(alpha+1) - alpha); the
    bound is one-sided, so beta >= prediction - margin passes.
    """
    grid = field.grid
    if exps is None:
        gamma_f = problem.f.gamma_t if problem.f.c_t > 0 else 1.0
        exps = barriers.exponents(problem.operator.alpha, problem.psi.gamma,
                                  gamma_f, problem.domain, problem.h.bound,
                                  problem.operator.ellipticity()[1])
    psi0 = problem.psi(grid.points, 0.0)
    mask = grid.inside_mask
    ts, ms = [], []
    n_slices = len(field.times)
    for j in range(1, n_scales + 1):
        target = field.times[-1] / 2.0**j
        k = int(np.argmin(np.abs(field.times - target)))
        if k == 0:
            break
        gap = np.abs(field.values[k] - psi0)[mask]
        ts.append(float(field.times[k]))
        ms.append(float(np.max(gap)))
    if len(ts) < 4:
        raise ValueError("need at least four dyadic time slices near zero")
    fit = _loglog_fit(ts, ms)
    if fit is None:
        return HolderEstimate(axis="boundary_attainment",
                              fitted_exponent=np.nan, fitted_constant=0.0,
                              r_range=(min(ts), max(ts)), residual_of_fit=0.0,
                              predicted_exponent=exps.attain, passed=True,
                              degenerate=True)
    slope, constant, resid = fit
    return HolderEstimate(axis="boundary_attainment", fitted_exponent=slope,
                          fitted_constant=constant,
                          r_range=(min(ts), max(ts)), residual_of_fit=resid,
                          predicted_exponent=exps.attain,
                          passed=bool(slope >= exps.attain - MARGIN))


def lateral_modulus(field: sch.SpaceTimeField, problem: sch.ProblemSpec
                    ) -> HolderEstimate:
    """Fitted exponent of max_t |u(x,t) - u(x0,t)| over |x - x0|.

    Pairs are anchored at lateral boundary nodes; prediction is the data
    exponent gamma.
    """
    grid = field.grid
    banchors = np.argwhere(grid.boundary_mask)
    seps = _dyadic_separations(min(grid.shape) - 1)
    rs, ms = [], []
    for s in seps:
        best = 0.0
        for b in banchors:
            for ax in range(grid.domain.dim):
                for sgn in (1, -1):
                    p = b.copy()
                    p[ax] += sgn * s
                    if np.any(p < 0) or np.any(p >= np.array(grid.shape)):
                        continue
                    if not grid.inside_mask[tuple(p)]:
                        continue
                    d = np.max(np.abs(field.values[(slice(None),) + tuple(p)]
                                      - field.values[(slice(None),)
                                                     + tuple(b)]))
                    best = max(best, float(d))
        rs.append(s * grid.dx)
        ms.append(best)
    fit = _loglog_fit(rs, ms)
    gamma = problem.psi.gamma
    if fit is None:
        return HolderEstimate(axis="space", fitted_exponent=np.nan,
                              fitted_constant=0.0, r_range=(rs[0], rs[-1]),
                              residual_of_fit=0.0, predicted_exponent=gamma,
                              passed=True, degenerate=True)
    slope, constant, resid = fit
    return HolderEstimate(axis="space", fitted_exponent=slope,
                          fitted_constant=constant, r_range=(rs[0], rs[-1]),
                          residual_of_fit=resid, predicted_exponent=gamma,
                          passed=bool(slope >= gamma - MARGIN))


def lateral_constant_bound(problem: sch.ProblemSpec, c_under: float,
                           c_over: float) -> float:
    """The envelope-side bound on the lateral Hoelder constant.

    C1 = c_over (c_psi / c_under + (|f| + |psi_t|)^(1/(1+alpha))).
    """
    lam1 = (problem.f.bound + problem.psi.lip_t) ** (
        1.0 / (1.0 + problem.operator.alpha))
    return c_over * (problem.psi.c_x / c_under + lam1)


def exponent_table(alpha_list, gamma_list, gamma_f_list) -> list[dict]:
    """Tabulated (q1, q, gamma_star, attain) over a parameter sweep."""
    rows = []
    for alpha in alpha_list:
        for gamma in gamma_list:
            for gamma_f in gamma_f_list:
                q1 = max(2.0, (alpha + 2.0) / (alpha + 1.0))
                q = q1 / gamma
                attain = 1.0 / (q * (alpha + 1.0) - alpha)
                rows.append({"alpha": alpha, "gamma": gamma,
                             "gamma_f": gamma_f, "q1": q1, "q": q,
                             "gamma_star": min(gamma_f, attain),
                             "attain": attain})
    return rows
