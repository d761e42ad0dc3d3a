"""Problem instances, validation and the primal objective."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .hermitian import DomainError, as_square, eig_hermitian, hermitize, xlogx
from .tensor import BipartiteShape

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PD_FLOOR = 1e-10
PSD_SLACK = 1e-10


class InstanceError(ValueError):
    """Base class for rejected problem instances."""

    kind = "InvalidInstance"


class NonHermitianError(InstanceError):
    kind = "NonHermitian"

    def __init__(self, which, asymmetry):
        super().__init__(f"{which} is not Hermitian (max |A - A^H| = {asymmetry:.3e})")
        self.which = which
        self.asymmetry = asymmetry


class TraceNotOneError(InstanceError):
    kind = "TraceNotOne"

    def __init__(self, which, value):
        super().__init__(f"{which} has trace {value!r}, expected 1")
        self.which = which
        self.value = value


class NotPositiveDefiniteError(InstanceError):
    kind = "NotPositiveDefinite"

    def __init__(self, which, lambda_min):
        super().__init__(
            f"{which} has smallest eigenvalue {lambda_min:.3e} (floor {PD_FLOOR:g}); "
            "restrict the problem to the support of the marginals before solving"
        )
        self.which = which
        self.lambda_min = lambda_min


class NonPositiveEpsilonError(InstanceError):
    kind = "NonPositiveEpsilon"

    def __init__(self, epsilon):
        super().__init__(f"epsilon must be positive, got {epsilon!r}")
        self.epsilon = epsilon


class DimensionMismatchError(InstanceError):
    kind = "DimensionMismatch"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Validated entropic quantum transport problem ``(C, rho, sigma, epsilon)``.

    Build through :func:`validate_instance`; the constructor does no checks.
    """

    C: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    epsilon: float
    shape: BipartiteShape
    lambda_min_marg: float
    rho_sigma: np.ndarray = field(repr=False)
    cost_at_product: float = field(repr=False)

    @property
    def d1(self) -> int:
        return self.shape.d1

    @property
    def d2(self) -> int:
        return self.shape.d2

    @property
    def d(self) -> int:
        return self.shape.d


def _matrix(raw, name):
    try:
        A = np.asarray(raw)
        if A.ndim == 3 and A.shape[-1] == 2 and not np.iscomplexobj(A):
            A = A[..., 0] + 1j * A[..., 1]
        return as_square(A)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatchError(f"{name}: {exc}") from exc


def _check_hermitian(A, name):
    asym = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if asym > HERMITIAN_TOL:
        raise NonHermitianError(name, asym)
    return hermitize(A)


def _check_density(A, name):
    A = _check_hermitian(A, name)
    tr = float(np.trace(A).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOneError(name, tr)
    lam = float(eig_hermitian(A).eigenvalues[0])
    if lam < PD_FLOOR:
        raise NotPositiveDefiniteError(name, lam)
    return A, lam


def validate_instance(raw: Mapping) -> ProblemInstance:
    """Check raw instance data and build a :class:`ProblemInstance`.

    ``raw`` needs keys ``epsilon``, ``rho``, ``sigma`` and ``C``; ``d1`` and
    ``d2`` are optional and checked against the matrices when present.
    Matrices may be complex arrays or nested ``[re, im]`` lists.
    """
    try:
        epsilon = float(raw["epsilon"])
        rho = _matrix(raw["rho"], "rho")
        sigma = _matrix(raw["sigma"], "sigma")
        C = _matrix(raw["C"], "C")
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r}") from exc
    if not np.isfinite(epsilon) or epsilon <= 0.0:
        raise NonPositiveEpsilonError(epsilon)
    d1, d2 = rho.shape[0], sigma.shape[0]
    for key, actual in (("d1", d1), ("d2", d2)):
        if key in raw and raw[key] is not None and int(raw[key]) != actual:
            raise DimensionMismatchError(f"{key}={raw[key]} but matrix has dimension {actual}")
    if C.shape[0] != d1 * d2:
        raise DimensionMismatchError(f"C has dimension {C.shape[0]}, expected {d1 * d2}")
    rho, lam_rho = _check_density(rho, "rho")
    sigma, lam_sigma = _check_density(sigma, "sigma")
    C = _check_hermitian(C, "C")
    rho_sigma = hermitize(np.kron(rho, sigma))
    return ProblemInstance(
        C=C,
        rho=rho,
        sigma=sigma,
        epsilon=epsilon,
        shape=BipartiteShape(d1, d2),
        lambda_min_marg=lam_rho * lam_sigma,
        rho_sigma=rho_sigma,
        cost_at_product=float(np.vdot(rho_sigma, C).real),
    )


def von_neumann_entropy_neg(G) -> float:
    """``tr(G log G)``, the negative von Neumann entropy, with ``0 log 0 = 0``.

    Eigenvalues in ``[-1e-10, 0)`` are treated as zero.
    """
    w = eig_hermitian(G).eigenvalues
    if w[0] < -PSD_SLACK:
        raise DomainError(f"coupling has negative eigenvalue {w[0]!r}", w[0])
    # trace of the lifted x log x is the eigenvalue sum
    return float(np.sum(xlogx(w)))


def primal_value(inst: ProblemInstance, G) -> float:
    """Free energy ``tr(C G) + epsilon * tr(G log G)``."""
    G = hermitize(G)
    if G.shape != inst.C.shape:
        raise DimensionMismatchError(f"coupling has shape {G.shape}, expected {inst.C.shape}")
    return float(np.vdot(inst.C, G).real) + inst.epsilon * von_neumann_entropy_neg(G)


def random_density_matrix(rng: np.random.Generator, d: int) -> np.ndarray:
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    W = G @ G.conj().T
    return hermitize(W / np.trace(W).real)


def random_instance(seed: int, d1: int, d2: int, c_scale: float = 1.0) -> ProblemInstance:
    """Seeded random instance with Wishart marginals and Gaussian cost.

    Marginals with smallest eigenvalue below ``1e-6`` are redrawn.
    """
    if d1 < 1 or d2 < 1:
        raise ValueError(f"dimensions must be positive, got d1={d1}, d2={d2}")
    rng = np.random.default_rng(seed)

    def draw(d):
        while True:
            R = random_density_matrix(rng, d)
            if np.linalg.eigvalsh(R)[0] > 1e-6:
                return R

    rho = draw(d1)
    sigma = draw(d2)
    d = d1 * d2
    H = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    C = c_scale * hermitize(H)
    epsilon = rng.uniform(0.5, 3.0)
    return validate_instance(
        {"epsilon": epsilon, "d1": d1, "d2": d2, "rho": rho, "sigma": sigma, "C": C}
    )


def with_cost(inst: ProblemInstance, C) -> ProblemInstance:
    """Copy of ``inst`` with a different cost matrix."""
    return validate_instance(
        {"epsilon": inst.epsilon, "rho": inst.rho, "sigma": inst.sigma, "C": C}
    )
