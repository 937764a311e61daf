"""Exponential polynomial block methods for stiff semilinear ODE systems.

The package splits into a small stack of modules:

    nodes         interpolation node sets and finite-difference weights
    phi           phi-function kernels (scalar, diagonal, dense, Krylov combos)
    coefficients  method specifications and expansion weight generation
    stepping      block propagators, iterators, composites, and the
                  multistep / two-stage comparison steppers
    stability     amplification matrices and stability-region slices
    problems      Fourier-spectral and grid benchmark problems
    harness       convergence / stability / timing experiment drivers
    cli           the `epbm` command line entry point

The commonly used names are re-exported here; anything else is reachable
through its module.
"""

from .coefficients import (
    MethodCoefficients,
    MethodSpec,
    eab_coefficients,
    generate_coefficients,
    index_sets,
    legendre_method,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    DeterminismError,
    DivergenceError,
    KrylovConvergenceError,
)
from .harness import (
    ExperimentConfig,
    dump_coefficients,
    parse_method,
    run_convergence,
    run_single,
    run_solve,
    run_stability_export,
    run_timing,
)
from .nodes import NodeSet, imaginary_equispaced_nodes, legendre_epbm_nodes
from .phi import PhiComboRequest, build_phi_table, phi_combo, phi_dense, phi_scalar
from .problems import (
    make_adr,
    make_kdv,
    make_ks,
    make_nikolaevskiy,
    make_problem,
    reference_solution,
)
from .stability import (
    GridSpec,
    StabilitySlice,
    amplification_matrix,
    composite_amplification_matrix,
    is_power_bounded,
    stability_slice,
    write_slice_csv,
)
from .stepping import (
    BlockState,
    SemilinearProblem,
    UnpartitionedProblem,
    bootstrap_initial_block,
    step_composite,
    step_eab,
    step_etdrk2,
    step_partitioned,
    step_unpartitioned,
)

__version__ = "0.1.0"

__all__ = [
    "BlockState",
    "CapacityError",
    "ConfigurationError",
    "DeterminismError",
    "DivergenceError",
    "ExperimentConfig",
    "GridSpec",
    "KrylovConvergenceError",
    "MethodCoefficients",
    "MethodSpec",
    "NodeSet",
    "PhiComboRequest",
    "SemilinearProblem",
    "StabilitySlice",
    "UnpartitionedProblem",
    "amplification_matrix",
    "bootstrap_initial_block",
    "build_phi_table",
    "composite_amplification_matrix",
    "dump_coefficients",
    "eab_coefficients",
    "generate_coefficients",
    "imaginary_equispaced_nodes",
    "index_sets",
    "is_power_bounded",
    "legendre_epbm_nodes",
    "legendre_method",
    "make_adr",
    "make_kdv",
    "make_ks",
    "make_nikolaevskiy",
    "make_problem",
    "parse_method",
    "phi_combo",
    "phi_dense",
    "phi_scalar",
    "reference_solution",
    "run_convergence",
    "run_single",
    "run_solve",
    "run_stability_export",
    "run_timing",
    "stability_slice",
    "step_composite",
    "step_eab",
    "step_etdrk2",
    "step_partitioned",
    "step_unpartitioned",
    "write_slice_csv",
]
