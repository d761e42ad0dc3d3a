import numpy as np
import pytest

import qotbga
from qotbga import SolverConfig, bga_solve

# the benchmark coupling as printed alongside the instance
GOLDEN_COUPLING = np.array(
    [
        [0.35691051, 0.05291375 + 0.0295855421j, 0.14517306 - 0.00787450092j, 0.0973649 - 0.105676301j],
        [0.05291375 - 0.0295855421j, 0.20445197, -0.00712014 - 0.0616189999j, 0.12540642 - 0.0659259594j],
        [0.14517306 + 0.00787450092j, -0.00712014 + 0.0616189999j, 0.1659592, 0.10532426 + 0.0727243916j],
        [0.0973649 + 0.105676301j, 0.12540642 + 0.0659259594j, 0.10532426 - 0.0727243916j, 0.27267832],
    ]
)


def random_hermitian(rng, d, scale=1.0):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (A + A.conj().T)


def random_density(rng, d):
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    R = G @ G.conj().T
    return R / np.trace(R).real


def zero_cost(inst):
    from qotbga.problem import with_cost

    return with_cost(inst, np.zeros_like(inst.C))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def golden():
    return qotbga.golden_instance()


@pytest.fixture(scope="session")
def golden_solution(golden):
    return bga_solve(golden, SolverConfig(delta=1e-8))
