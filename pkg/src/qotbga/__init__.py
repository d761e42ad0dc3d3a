"""Entropic quantum optimal transport by block gradient ascent on the dual."""

from .dual import (
    DivergedDualError,
    DualPoint,
    SpectralEnvelope,
    coupling_from_dual,
    dual_value,
    marginal_error_1,
    marginal_error_2,
    nu1,
    nu2,
    projected_gradient,
    spectral_envelope,
    strong_concavity_gamma,
)
from .hermitian import eig_hermitian, frechet_exp, frobenius_norm, hermitize, hs_inner, lift
from .io import load_instance, load_solution, save_instance, save_solution, write_trace_csv
from .kernels import DEFAULT_BACKEND, available_backends
from .problem import (
    InstanceError,
    ProblemInstance,
    primal_value,
    random_instance,
    validate_instance,
    von_neumann_entropy_neg,
)
from .solver import (
    IterationRecord,
    Solution,
    SolverConfig,
    StepSizes,
    bga_solve,
    compute_step_sizes,
    estimate_linear_rate,
    oracle_solve,
)
from .tensor import BipartiteShape, kron, partial_trace_1, partial_trace_2, tensor_sum


def golden_instance():
    """The 2x2 ⊗ 2x2 benchmark instance shipped with the package."""
    from importlib.resources import files

    return load_instance(files(__package__) / "data" / "golden_instance.json")
