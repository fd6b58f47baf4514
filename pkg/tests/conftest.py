from __future__ import annotations

import numpy as np
import pytest

from viscolab import domain as dom
from viscolab import fields
from viscolab import operators as ops
from viscolab import scheme as sch


def unit_interval():
    return dom.make_domain("interval", x0=0.0, x1=1.0)


def heat_problem(T: float = 0.1) -> sch.ProblemSpec:
    """alpha = 0, a = A = 1, h = 0, f = 0, psi = sin(pi x) on (0, 1)."""
    return sch.ProblemSpec(
        operator=ops.OperatorSpec("trace_with_power", alpha=0.0),
        domain=unit_interval(), T=T,
        h=fields.make_vector_field("zero", 1),
        f=fields.make_scalar_field("zero", 1),
        psi=fields.make_scalar_field("sine", 1, amplitude=1.0, frequency=1))


def cusp_problem(alpha: float, gamma: float, T: float = 0.1) -> sch.ProblemSpec:
    return sch.ProblemSpec(
        operator=ops.OperatorSpec("trace_with_power", alpha=alpha),
        domain=unit_interval(), T=T,
        h=fields.make_vector_field("zero", 1),
        f=fields.make_scalar_field("zero", 1),
        psi=fields.make_scalar_field("cusp", 1, center=0.5, gamma=gamma,
                                     reach=0.5),
        barrier_gamma=min(gamma, 0.5), barrier_c=10.0)


def radial_problem(alpha: float, dim: int, T: float = 0.01) -> sch.ProblemSpec:
    """Stationary exact profile |x|^beta with the compensating source."""
    beta = (alpha + 2.0) / (alpha + 1.0)
    source = -(beta ** (1.0 + alpha)) * (beta + dim - 2.0)
    if dim == 1:
        d = unit_interval()
        center, reach = "0.0", 1.0
    else:
        d = dom.make_domain("box", lo=[-1, -1], hi=[1, 1])
        center, reach = "0,0", 2.0
    return sch.ProblemSpec(
        operator=ops.OperatorSpec("trace_with_power", alpha=alpha),
        domain=d, T=T,
        h=fields.make_vector_field("zero", dim),
        f=fields.make_scalar_field("constant", dim, value=source),
        psi=fields.make_scalar_field("radial_power", dim, beta=beta,
                                     center=center, reach=reach),
        barrier_c=6.0)


def profile_field(problem: sch.ProblemSpec, dx: float,
                  n_slices: int = 2) -> sch.SpaceTimeField:
    """Time-constant field holding psi(., 0) on the grid of the problem."""
    grid = dom.build_grid(problem.domain, dx, problem.T)
    numerics = sch.compute_numerics(problem, grid)
    grid.dt = numerics.dt
    u0 = np.where(grid.inside_mask, problem.psi(grid.points, 0.0), 0.0)
    vals = np.stack([u0] * n_slices)
    times = np.arange(n_slices) * numerics.dt
    meta = {"eps": numerics.eps, "dt": numerics.dt,
            "n_steps": n_slices - 1, "g_cap": numerics.g_cap,
            "c_theta": numerics.c_theta}
    return sch.SpaceTimeField(grid=grid, values=vals, times=times, meta=meta)


@pytest.fixture(scope="session")
def heat_solution_64():
    return sch.solve(heat_problem(), 1.0 / 64)
