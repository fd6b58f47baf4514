"""Spatial domains with a uniform exterior cone, grids, parabolic boundary.

Each shipped domain kind reports analytically computed cone parameters
(phi, rbar): at every boundary point z there is an outward axis e_z such
that the closed cone

    T = { x : (x - z) . e_z >= cos(phi) |x - z| }

of half-angle phi meets the closure of the domain inside the ball
B_rbar(z) only at z itself.  Convex kinds admit any phi < pi/2; the
L-shaped domain is limited by its reentrant corner, where the exterior
occupies a quarter plane, so phi must stay below pi/4.

Grids embed the domain in its bounding box.  Nodes are classified into
interior / lateral boundary / excluded once, by signed distance: nodes
outside the closure (beyond a half-cell tolerance) are masked out, nodes
within one cell of the boundary carry Dirichlet data, remaining nodes are
interior provided their full difference stencil stays in-grid.

The parabolic boundary of the space-time cylinder is the lateral part
plus the initial slice; the final slice t = T is not boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DOMAIN_KINDS = ("interval", "box", "ball", "l_shape")


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    params: dict
    dim: int
    cone_angle: float  # phi, half-angle of the admissible exterior cone
    cone_reach: float  # rbar
    diameter: float

    def __post_init__(self):
        if not (0.0 < self.cone_angle < np.pi):
            raise ValueError("cone angle must lie in (0, pi)")
        if self.cone_reach <= 0.0:
            raise ValueError("cone reach must be positive")


def make_domain(kind: str, **params) -> DomainSpec:
    """Build a domain spec with analytically known cone parameters."""
    if kind == "interval":
        x0, x1 = float(params["x0"]), float(params["x1"])
        if not x1 > x0:
            raise ValueError("degenerate interval")
        length = x1 - x0
        return DomainSpec(kind, {"x0": x0, "x1": x1}, 1,
                          cone_angle=np.pi / 2, cone_reach=length / 2,
                          diameter=length)
    if kind == "box":
        lo = np.asarray(params["lo"], dtype=float).ravel()
        hi = np.asarray(params["hi"], dtype=float).ravel()
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("degenerate box")
        return DomainSpec(kind, {"lo": lo, "hi": hi}, lo.size,
                          cone_angle=np.pi / 3,
                          cone_reach=float(np.min(hi - lo)) / 2,
                          diameter=float(np.linalg.norm(hi - lo)))
    if kind == "ball":
        center = np.asarray(params["center"], dtype=float).ravel()
        radius = float(params["radius"])
        if radius <= 0.0:
            raise ValueError("radius must be positive")
        return DomainSpec(kind, {"center": center, "radius": radius},
                          center.size, cone_angle=np.pi / 3,
                          cone_reach=radius, diameter=2 * radius)
    if kind == "l_shape":
        size = float(params.get("size", 1.0))
        if size <= 0.0:
            raise ValueError("size must be positive")
        # (0,s)^2 minus the closed quadrant [s/2, s) x [s/2, s); the
        # reentrant corner leaves only a quarter-plane of exterior there
        return DomainSpec(kind, {"size": size}, 2,
                          cone_angle=np.pi / 5, cone_reach=size / 4,
                          diameter=size * np.sqrt(2.0))
    raise ValueError(f"unknown domain kind {kind!r}")


def _seg_distance(pts: np.ndarray, a, b) -> np.ndarray:
    """Distance from points (..., 2) to the segment [a, b]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(pts - proj, axis=-1)


def _lshape_segments(size: float):
    s, h = size, size / 2
    return [
        ((0, 0), (s, 0)),      # bottom
        ((0, 0), (0, s)),      # left
        ((0, s), (h, s)),      # top (kept half)
        ((s, 0), (s, h)),      # right (kept half)
        ((h, h), (h, s)),      # inner vertical
        ((h, h), (s, h)),      # inner horizontal
    ]


def signed_distance(spec: DomainSpec, pts) -> np.ndarray:
    """Signed distance to the domain boundary, positive inside."""
    pts = np.asarray(pts, dtype=float)
    scalar = pts.ndim <= 1 and spec.dim == 1 and pts.ndim == 0
    if spec.dim == 1:
        pts = np.atleast_1d(pts)
        if pts.shape[-1:] == (1,) and pts.ndim > 1:
            pts = pts[..., 0]
        x0, x1 = spec.params["x0"], spec.params["x1"]
        d = np.minimum(pts - x0, x1 - pts)
        return float(d) if scalar else d
    if pts.ndim == 1:
        return float(signed_distance(spec, pts[None, :])[0])
    if spec.kind == "box":
        lo, hi = spec.params["lo"], spec.params["hi"]
        inside_gap = np.minimum(pts - lo, hi - pts).min(axis=-1)
        outside = np.linalg.norm(np.maximum(lo - pts, 0.0)
                                 + np.maximum(pts - hi, 0.0), axis=-1)
        return np.where(outside > 0, -outside, inside_gap)
    if spec.kind == "ball":
        c, r = spec.params["center"], spec.params["radius"]
        return r - np.linalg.norm(pts - c, axis=-1)
    if spec.kind == "l_shape":
        s = spec.params["size"]
        h = s / 2
        dist = np.min(np.stack([_seg_distance(pts, a, b)
                                for a, b in _lshape_segments(s)]), axis=0)
        inside = ((pts[..., 0] > 0) & (pts[..., 0] < s)
                  & (pts[..., 1] > 0) & (pts[..., 1] < s)
                  & ~((pts[..., 0] >= h) & (pts[..., 1] >= h)))
        return np.where(inside, dist, -dist)
    raise ValueError(spec.kind)


def boundary_distance(spec: DomainSpec, x) -> float | np.ndarray:
    """Signed distance to the boundary, positive inside the domain."""
    return signed_distance(spec, x)


def bounding_box(spec: DomainSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.kind == "interval":
        return (np.array([spec.params["x0"]]), np.array([spec.params["x1"]]))
    if spec.kind == "box":
        return spec.params["lo"], spec.params["hi"]
    if spec.kind == "ball":
        c, r = spec.params["center"], spec.params["radius"]
        return c - r, c + r
    if spec.kind == "l_shape":
        s = spec.params["size"]
        return np.zeros(2), np.full(2, s)
    raise ValueError(spec.kind)


def boundary_net(spec: DomainSpec, spacing: float) -> np.ndarray:
    """Deterministic net of boundary points with roughly the given spacing."""
    if spec.kind == "interval":
        return np.array([[spec.params["x0"]], [spec.params["x1"]]])
    if spec.kind == "ball":
        c, r = spec.params["center"], spec.params["radius"]
        if spec.dim == 2:
            n = max(8, int(np.ceil(2 * np.pi * r / spacing)))
            th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
            return c + r * np.stack([np.cos(th), np.sin(th)], axis=-1)
        n = max(2, int(np.ceil(2 * r / spacing)))
        raise ValueError("ball boundary net only shipped for dim 2")
    segments = []
    if spec.kind == "box":
        lo, hi = spec.params["lo"], spec.params["hi"]
        if spec.dim != 2:
            raise ValueError("box boundary net only shipped for dim 2")
        segments = [((lo[0], lo[1]), (hi[0], lo[1])),
                    ((hi[0], lo[1]), (hi[0], hi[1])),
                    ((hi[0], hi[1]), (lo[0], hi[1])),
                    ((lo[0], hi[1]), (lo[0], lo[1]))]
    elif spec.kind == "l_shape":
        segments = _lshape_segments(spec.params["size"])
    pts = []
    for a, b in segments:
        a, b = np.asarray(a, float), np.asarray(b, float)
        n = max(2, int(np.ceil(np.linalg.norm(b - a) / spacing)) + 1)
        t = np.linspace(0.0, 1.0, n)
        pts.append(a + t[:, None] * (b - a))
    return np.unique(np.round(np.vstack(pts), 12), axis=0)


def outward_axis(spec: DomainSpec, z) -> np.ndarray:
    """Axis direction of the exterior cone at boundary point z."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    tol = 1e-9 * max(1.0, spec.diameter)
    if spec.kind == "interval":
        x0, x1 = spec.params["x0"], spec.params["x1"]
        return np.array([-1.0]) if abs(z[0] - x0) < abs(z[0] - x1) else np.array([1.0])
    if spec.kind == "ball":
        v = z - spec.params["center"]
        return v / np.linalg.norm(v)
    if spec.kind == "box":
        lo, hi = spec.params["lo"], spec.params["hi"]
        e = np.where(np.abs(z - lo) <= tol, -1.0, 0.0) \
            + np.where(np.abs(z - hi) <= tol, 1.0, 0.0)
        if not np.any(e):
            raise ValueError("point is not on the box boundary")
        return e / np.linalg.norm(e)
    if spec.kind == "l_shape":
        s = spec.params["size"]
        h = s / 2
        x, y = z
        on_inner_v = abs(x - h) <= tol and y >= h - tol
        on_inner_h = abs(y - h) <= tol and x >= h - tol
        if on_inner_v or on_inner_h:
            # everywhere along the reentrant notch the admissible cone axis
            # is the diagonal into the removed quadrant: a face normal would
            # sweep across the other inner edge within any fixed reach
            return np.array([1.0, 1.0]) / np.sqrt(2.0)
        e = np.zeros(2)
        if abs(x) <= tol:
            e[0] -= 1
        if abs(y) <= tol:
            e[1] -= 1
        if abs(x - s) <= tol:
            e[0] += 1
        if abs(y - s) <= tol:
            e[1] += 1
        if not np.any(e):
            raise ValueError("point is not on the l_shape boundary")
        return e / np.linalg.norm(e)
    raise ValueError(spec.kind)


def cone_gap(spec: DomainSpec, z, samples: np.ndarray,
             phi: float | None = None) -> float:
    """Worst cosine margin of the exterior cone test at boundary point z.

    Returns max over domain-closure samples x != z of
    (x - z).e_z / |x - z| - cos(phi); a negative value certifies
    T_phi  intersect  closure  intersect  B_rbar(z) == {z}.
    """
    phi = spec.cone_angle if phi is None else phi
    e = outward_axis(spec, z)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = samples - z
    r = np.linalg.norm(d, axis=-1)
    keep = (r > 1e-12) & (r <= spec.cone_reach + 1e-12)
    if not np.any(keep):
        return -np.inf
    cosines = (d[keep] @ e) / r[keep]
    return float(np.max(cosines) - np.cos(phi))


def interior_sample(spec: DomainSpec, spacing: float) -> np.ndarray:
    """All lattice points of the bounding box that lie in the closure."""
    lo, hi = bounding_box(spec)
    axes = [np.arange(lo[k], hi[k] + spacing / 2, spacing)
            for k in range(spec.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return pts[signed_distance(spec, pts) >= -1e-12]


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    """Uniform grid on the bounding box with node role masks.

    inside_mask marks nodes carried by the solver (interior or lateral
    boundary); every interior node has its full stencil (axis and diagonal
    neighbors) inside the grid.
    """

    domain: DomainSpec
    dx: float
    T: float
    dt: float | None = None
    axes: tuple = ()
    shape: tuple = ()
    interior_mask: np.ndarray = None
    boundary_mask: np.ndarray = None
    inside_mask: np.ndarray = None
    points: np.ndarray = None  # (*shape, dim)

    def times(self, record_every: int = 1) -> np.ndarray:
        if self.dt is None:
            raise ValueError("grid has no time step yet")
        n = int(round(self.T / self.dt))
        return np.arange(0, n + 1, record_every) * self.dt


def build_grid(domain: DomainSpec, dx: float, T: float,
               dt: float | None = None) -> Grid:
    if dx <= 0 or T <= 0:
        raise ValueError("dx and T must be positive")
    lo, hi = bounding_box(domain)
    axes, shape = [], []
    for k in range(domain.dim):
        n = int(round((hi[k] - lo[k]) / dx))
        if n < 8:
            raise ValueError("grid must resolve the domain with >= 8 cells")
        axes.append(lo[k] + dx * np.arange(n + 1))
        shape.append(n + 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    d = signed_distance(domain, pts.reshape(-1, domain.dim)).reshape(shape)

    include = d > -0.5 * dx
    interior = d >= dx * (1.0 - 1e-9)
    # demote interior nodes whose stencil leaves the included set
    ok = np.ones_like(interior)
    for off in _stencil_offsets(domain.dim):
        ok &= _shifted(include, off)
    interior &= ok
    boundary = include & ~interior
    grid = Grid(domain=domain, dx=dx, T=T, dt=dt, axes=tuple(axes),
                shape=tuple(shape), interior_mask=interior,
                boundary_mask=boundary, inside_mask=include, points=pts)
    return grid


def _stencil_offsets(dim: int):
    if dim == 1:
        return [(-1,), (1,)]
    offs = []
    ranges = [(-1, 0, 1)] * dim
    from itertools import product
    for off in product(*ranges):
        if any(off):
            offs.append(off)
    return offs


def _shifted(mask: np.ndarray, off) -> np.ndarray:
    out = np.zeros_like(mask)
    src = tuple(slice(max(-o, 0), mask.shape[k] - max(o, 0))
                for k, o in enumerate(off))
    dst = tuple(slice(max(o, 0), mask.shape[k] - max(-o, 0))
                for k, o in enumerate(off))
    out[dst] = mask[src]
    return out


def classify_nodes(grid: Grid, n_times: int | None = None) -> dict:
    """Tag every space-time node exactly once.

    initial: t = 0 slice (all carried nodes); lateral: spatial boundary at
    t > 0; interior: spatial interior at 0 < t < T; final: spatial interior
    at t = T.  lateral and initial together form the discrete parabolic
    boundary; the final slice is not boundary.
    """
    if n_times is None:
        n_times = len(grid.times())
    shape = (n_times,) + grid.shape
    interior = np.zeros(shape, dtype=bool)
    lateral = np.zeros(shape, dtype=bool)
    initial = np.zeros(shape, dtype=bool)
    final = np.zeros(shape, dtype=bool)
    initial[0] = grid.inside_mask
    lateral[1:] = grid.boundary_mask
    interior[1:-1] = grid.interior_mask
    final[-1] = grid.interior_mask
    return {"interior": interior, "lateral": lateral,
            "initial": initial, "final": final}
