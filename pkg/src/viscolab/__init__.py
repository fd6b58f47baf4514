"""viscolab: solver and verification lab for singular/degenerate
fully nonlinear parabolic equations u_t = F(x, grad u, D^2 u)
+ h . grad u |grad u|^alpha + f."""

from .operators import (OperatorSpec, PropertyReport, ZeroGradientError,
                        eval_regularized)
from .domain import DomainSpec, Grid, boundary_distance, build_grid, \
    classify_nodes, make_domain
from .fields import ScalarField, VectorField, make_scalar_field, \
    make_vector_field
from .barriers import (BarrierEnvelope, ExponentSet, exponents,
                       kappa_infimum, parabolic_envelope, stationary_barrier,
                       whole_space_envelope, whole_space_profile)
from .scheme import (NumericalAbort, ProblemSpec, SpaceTimeField, cfl_dt,
                     solve, solve_whole_space, step)
from . import certify
from .certify import (ComparisonReport, ViscosityCertificate, compare,
                      perron_iterate, residual)
from .regularity import HolderEstimate, boundary_rate, exponent_table, \
    holder_fit, lateral_modulus

__version__ = "0.1.0"
