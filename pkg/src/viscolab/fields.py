"""Named closed-form families for boundary data, sources and drifts.

Runs are fully declarative: every physical field is a registry entry plus
parameters, so configurations hash and reproduce exactly.  Each family
declares the regularity constants the solver and the envelopes consume
(Hoelder exponent/constant in x, Lipschitz constant in t, sup bound); the
constants are validated by sampling, never trusted blindly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ScalarField:
    """Scalar field on space-time with declared regularity metadata."""

    name: str
    fn: callable  # fn(pts (..., N), t) -> (...)
    gamma: float = 1.0          # Hoelder exponent in x
    c_x: float = 0.0            # Hoelder constant in x
    lip_t: float = 0.0          # Lipschitz constant in t
    gamma_t: float = 1.0        # Hoelder exponent in t (sources)
    c_t: float = 0.0            # Hoelder constant in t (sources)
    bound: float = 0.0          # sup norm
    sup_val: float | None = None  # signed upper bound, defaults to +bound
    inf_val: float | None = None  # signed lower bound, defaults to -bound
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sup_val is None:
            self.sup_val = self.bound
        if self.inf_val is None:
            self.inf_val = -self.bound

    def __call__(self, pts, t):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
            return float(np.asarray(self.fn(pts, t))[0])
        return np.asarray(self.fn(pts, t), dtype=float)


@dataclass
class VectorField:
    """Drift field h(x, t) with its time modulus constants."""

    name: str
    fn: callable  # fn(pts (..., N), t) -> (..., N)
    bound: float = 0.0
    c_h: float = 0.0
    omega_h: float = 1.0
    params: dict = field(default_factory=dict)

    def __call__(self, pts, t):
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        out = np.asarray(self.fn(pts, t), dtype=float)
        return out[0] if single else out


def _parse_floats(value) -> list[float]:
    if isinstance(value, str):
        return [float(v) for v in value.split(",") if v.strip()]
    if np.isscalar(value):
        return [float(value)]
    return [float(v) for v in value]


def make_scalar_field(name: str, dim: int, **params) -> ScalarField:
    """Instantiate a scalar family from the registry."""
    if name == "zero":
        return ScalarField("zero", lambda p, t: np.zeros(p.shape[:-1]))
    if name == "constant":
        v = float(params.get("value", 0.0))
        return ScalarField("constant", lambda p, t: np.full(p.shape[:-1], v),
                           bound=abs(v), sup_val=v, inf_val=v,
                           params={"value": v})
    if name == "sine":
        amp = float(params.get("amplitude", 1.0))
        freq = float(params.get("frequency", 1.0))
        k = np.pi * freq

        def fn(p, t):
            return amp * np.sin(k * p[..., 0])

        return ScalarField("sine", fn, gamma=1.0, c_x=abs(amp) * k,
                           bound=abs(amp),
                           params={"amplitude": amp, "frequency": freq})
    if name == "cusp":
        center = np.asarray(_parse_floats(params.get("center", 0.5)))
        gam = float(params.get("gamma", 1.0))
        amp = float(params.get("amplitude", 1.0))
        reach = float(params.get("reach", 1.0))
        if not 0.0 < gam <= 1.0:
            raise ValueError("cusp gamma must lie in (0, 1]")

        def fn(p, t):
            return amp * np.linalg.norm(p - center, axis=-1) ** gam

        # | |x|^g - |y|^g | <= |x - y|^g for g <= 1
        return ScalarField("cusp", fn, gamma=gam, c_x=abs(amp),
                           bound=abs(amp) * reach**gam,
                           sup_val=abs(amp) * reach**gam, inf_val=0.0,
                           params={"center": center, "gamma": gam,
                                   "amplitude": amp, "reach": reach})
    if name == "radial_power":
        center = np.asarray(_parse_floats(params.get("center", 0.0)))
        beta = float(params.get("beta", 2.0))
        reach = float(params.get("reach", 1.0))
        if beta < 1.0:
            raise ValueError("radial_power needs beta >= 1; use cusp below 1")

        def fn(p, t):
            return np.linalg.norm(p - center, axis=-1) ** beta

        return ScalarField("radial_power", fn, gamma=1.0,
                           c_x=beta * reach ** (beta - 1.0),
                           bound=reach**beta,
                           sup_val=reach**beta, inf_val=0.0,
                           params={"center": center, "beta": beta,
                                   "reach": reach})
    if name == "trig_mix":
        amps = _parse_floats(params.get("amps", [1.0]))
        phases = _parse_floats(params.get("phases", [0.0] * len(amps)))
        offset = float(params.get("offset", 0.0))

        def fn(p, t):
            out = np.full(p.shape[:-1], offset)
            for k, (a, ph) in enumerate(zip(amps, phases), start=1):
                out = out + a * np.sin(np.pi * k * p[..., 0] + ph)
            return out

        c_x = sum(abs(a) * np.pi * (k + 1) for k, a in enumerate(amps))
        return ScalarField("trig_mix", fn, gamma=1.0, c_x=c_x,
                           bound=abs(offset) + sum(abs(a) for a in amps),
                           params={"amps": amps, "phases": phases,
                                   "offset": offset})
    if name == "bump":
        center = np.asarray(_parse_floats(params.get("center", 0.0)))
        width = float(params.get("width", 0.5))
        height = float(params.get("height", 1.0))

        def fn(p, t):
            r = np.linalg.norm(p - center, axis=-1)
            return np.where(r < width,
                            height * np.cos(np.pi * r / (2 * width)) ** 2,
                            0.0)

        return ScalarField("bump", fn, gamma=1.0,
                           c_x=abs(height) * np.pi / (2 * width),
                           bound=abs(height),
                           sup_val=max(height, 0.0), inf_val=min(height, 0.0),
                           params={"center": center, "width": width,
                                   "height": height})
    if name == "linear_t":
        rate = float(params.get("rate", 1.0))
        horizon = float(params.get("horizon", 1.0))
        return ScalarField("linear_t",
                           lambda p, t: np.full(p.shape[:-1], rate * t),
                           lip_t=abs(rate), c_t=abs(rate),
                           bound=abs(rate) * horizon,
                           params={"rate": rate, "horizon": horizon})
    raise ValueError(f"unknown scalar field family {name!r}")


def make_vector_field(name: str, dim: int, **params) -> VectorField:
    if name == "zero":
        return VectorField("zero",
                           lambda p, t: np.zeros(p.shape[:-1] + (dim,)))
    if name == "constant_vector":
        comps = np.asarray(_parse_floats(params.get("components",
                                                    [0.0] * dim)))
        if comps.size != dim:
            raise ValueError("drift components do not match the dimension")

        def fn(p, t):
            return np.broadcast_to(comps, p.shape[:-1] + (dim,)).copy()

        return VectorField("constant_vector", fn,
                           bound=float(np.linalg.norm(comps)),
                           c_h=0.0, omega_h=1.0,
                           params={"components": comps})
    raise ValueError(f"unknown vector field family {name!r}")


def validate_scalar_constants(fld: ScalarField, pts: np.ndarray,
                              times, slack: float = 1.05) -> list[str]:
    """Sample-check the declared constants; returns violation messages."""
    msgs = []
    times = np.atleast_1d(times)
    rng = np.random.default_rng(0)
    n = min(len(pts), 400)
    idx = rng.choice(len(pts), size=n, replace=False)
    sub = pts[idx]
    for t in times[:: max(1, len(times) // 4)]:
        vals = fld(sub, float(t))
        if np.max(np.abs(vals)) > slack * fld.bound + 1e-12:
            msgs.append(f"{fld.name}: sup bound {fld.bound} exceeded")
            break
    t0 = float(times[0])
    v = fld(sub, t0)
    for _ in range(200):
        i, j = rng.integers(0, n, size=2)
        r = np.linalg.norm(sub[i] - sub[j])
        if r < 1e-12:
            continue
        if abs(v[i] - v[j]) > slack * fld.c_x * r**fld.gamma + 1e-12:
            msgs.append(f"{fld.name}: spatial modulus "
                        f"c={fld.c_x} gamma={fld.gamma} violated")
            break
    if len(times) > 1:
        ta, tb = float(times[0]), float(times[-1])
        va, vb = fld(sub, ta), fld(sub, tb)
        lip = fld.lip_t if fld.lip_t > 0 else fld.c_t
        if np.max(np.abs(vb - va)) > slack * lip * abs(tb - ta) ** min(
                1.0, fld.gamma_t) + 1e-12:
            msgs.append(f"{fld.name}: time modulus violated")
    return msgs
