"""Magnetic Schrödinger groups on weighted graphs: exact kernels and path integrals."""

from .errors import ConsistencyError, GraphFeynError, GraphParseError, InputError, ResourceLimitError
from .exact import (
    FiniteOperator,
    KernelMatrix,
    apply_formal,
    assemble_operator,
    compose_kernels,
    generator_limit_residual,
    greens_identity_residual,
    identity_kernel,
    quadratic_form,
    scattering_kernel_exact,
    semigroup_kernel_exact,
    unitary_kernel_exact,
)
from .exhaustion import ExhaustionReport, embed, exhaustion_study, project
from .functionals import PathWeight, action, feynman_weight, line_integral, riemann_integral
from .graph import (
    ElectricPotential,
    MagneticPotential,
    Violation,
    WeightedGraph,
    ball_exhaustion,
    build_standard,
    cycle_graph,
    degree,
    harper_box,
    lattice_box,
    path_graph,
    restrict,
    validate,
)
from .io import load_graph, parse_graph
from .montecarlo import (
    KatoSimonResult,
    kato_simon_margin,
    mc_dirichlet_kernel,
    mc_scattering_kernel,
    mc_semigroup_kernel,
    mc_unitary_apply,
    mc_unitary_kernel,
    mc_unitary_kernel_row,
)
from .sampler import (
    JumpPath,
    estimate_first_jump_rate,
    estimate_no_jump_prob,
    estimate_two_jump_remainder,
    exit_time,
    sample_path,
    sample_paths,
)
from .stats import MCEstimate, SamplerConfig

__version__ = "0.1.0"
