"""Dual functional, marginal errors and spectral bounds.

For potentials ``U`` on subsystem 1 and ``V`` on subsystem 2 the dual
functional is

    D(U, V) = tr(U rho) + tr(V sigma) - eps * tr exp((U ⊕ V - C) / eps) + eps

and its block gradients are the marginal errors
``E1 = rho - tr_2 Gamma`` and ``E2 = sigma - tr_1 Gamma`` where
``Gamma = exp((U ⊕ V - C) / eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermitian import DomainError, as_square, hermitize
from .problem import ProblemInstance
from .tensor import _kron

# exp overflows IEEE doubles just above 709
EXP_OVERFLOW = 700.0
NU2_REJECT = 1e-10


class DivergedDualError(ArithmeticError):
    """exp((U ⊕ V - C)/eps) would overflow; the iterate has left any sane region."""


class InconsistentDualValueError(ValueError):
    """A dual value above the attainable maximum was passed to the bounds."""


@dataclass(frozen=True)
class DualPoint:
    U: np.ndarray
    V: np.ndarray

    @classmethod
    def zeros(cls, inst: ProblemInstance) -> "DualPoint":
        return cls(
            np.zeros((inst.d1, inst.d1), dtype=np.complex128),
            np.zeros((inst.d2, inst.d2), dtype=np.complex128),
        )

    def gauge_shift(self, t: float) -> "DualPoint":
        """``(U + t I, V - t I)``; leaves ``U ⊕ V`` unchanged."""
        return DualPoint(
            self.U + t * np.eye(self.U.shape[0]), self.V - t * np.eye(self.V.shape[0])
        )

    def __add__(self, other: "DualPoint") -> "DualPoint":
        return DualPoint(self.U + other.U, self.V + other.V)

    def scale(self, t: float) -> "DualPoint":
        return DualPoint(t * self.U, t * self.V)


@dataclass(frozen=True)
class SpectralEnvelope:
    lower: float
    upper: float
    beta: float


@dataclass(frozen=True)
class DualEvaluation:
    """Everything derived from one eigendecomposition of ``(U ⊕ V - C)/eps``."""

    point: DualPoint
    exponent_eigenvalues: np.ndarray
    coupling: np.ndarray
    dual: float
    E1: np.ndarray
    E2: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.exponent_eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.exponent_eigenvalues[-1])


def _check_point(inst: ProblemInstance, p: DualPoint):
    U = as_square(p.U)
    V = as_square(p.V)
    if U.shape[0] != inst.d1 or V.shape[0] != inst.d2:
        raise ValueError(
            f"dual point of dimensions ({U.shape[0]}, {V.shape[0]}) "
            f"does not match instance ({inst.d1}, {inst.d2})"
        )
    return hermitize(U), hermitize(V)


def _raw_evaluate(inst: ProblemInstance, U, V):
    """Unchecked evaluation for the inner loops; ``U``, ``V`` must be Hermitian."""
    eps = inst.epsilon
    d1, d2 = inst.d1, inst.d2
    K = _kron(U, np.eye(d2)) + _kron(np.eye(d1), V) - inst.C
    # the coupling does not depend on eigenvector phases, so skip eig_hermitian's
    w, X = np.linalg.eigh(K / eps)
    if w[-1] > EXP_OVERFLOW:
        raise DivergedDualError(
            f"largest exponent eigenvalue {w[-1]:.6g} exceeds {EXP_OVERFLOW:g}"
        )
    ew = np.exp(w)
    G = (X * ew) @ X.conj().T
    G = 0.5 * (G + G.conj().T)
    G4 = G.reshape(d1, d2, d1, d2)
    E1 = inst.rho - np.trace(G4, axis1=1, axis2=3)
    E2 = inst.sigma - np.trace(G4, axis1=0, axis2=2)
    dual = (
        float(np.vdot(U, inst.rho).real)
        + float(np.vdot(V, inst.sigma).real)
        - eps * float(np.sum(ew))
        + eps
    )
    return w, G, dual, E1, E2


def evaluate(inst: ProblemInstance, p: DualPoint) -> DualEvaluation:
    U, V = _check_point(inst, p)
    w, G, dual, E1, E2 = _raw_evaluate(inst, U, V)
    return DualEvaluation(
        point=DualPoint(U, V),
        exponent_eigenvalues=inst.epsilon * w,
        coupling=hermitize(G),
        dual=dual,
        E1=hermitize(E1),
        E2=hermitize(E2),
    )


def dual_value(inst: ProblemInstance, p: DualPoint) -> float:
    return evaluate(inst, p).dual


def marginal_error_1(inst: ProblemInstance, p: DualPoint) -> np.ndarray:
    return evaluate(inst, p).E1


def marginal_error_2(inst: ProblemInstance, p: DualPoint) -> np.ndarray:
    return evaluate(inst, p).E2


def coupling_from_dual(inst: ProblemInstance, p: DualPoint) -> np.ndarray:
    return evaluate(inst, p).coupling


def full_gradient(inst: ProblemInstance, p: DualPoint) -> np.ndarray:
    """Gradient of D viewed as a function of ``U ⊕ V`` on the whole composite space."""
    return hermitize(inst.rho_sigma - evaluate(inst, p).coupling)


def projected_gradient(inst: ProblemInstance, p: DualPoint):
    """Gradient of D restricted to tensor sums, as a pair ``(A, B)``.

    ``tensor_sum(A, B)`` is the orthogonal projection of the full gradient
    onto the subspace of tensor sums.
    """
    ev = evaluate(inst, p)
    return _project(inst, ev.E1, ev.E2)


def _project(inst: ProblemInstance, E1, E2):
    tr1 = float(np.trace(E1).real)
    A = E1 / inst.d2
    B = E2 / inst.d1 - (tr1 / inst.d) * np.eye(inst.d2)
    return hermitize(A), hermitize(B)


# ---------------------------------------------------------------- inverses

def _expm1mx(x):
    """``e^x - x - 1`` without cancellation near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, x, 0.0)
    term = 0.5 * xs * xs
    series = term.copy()
    for k in range(3, 18):
        term = term * xs / k
        series = series + term
    with np.errstate(over="ignore"):
        general = np.expm1(x) - x
    return np.where(small, series, general)


def _bisect(f, lo, hi, y, width=1e-14, max_steps=400):
    """Vectorised bisection for increasing ``f`` with ``f(lo) <= y <= f(hi)``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > width) & (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        below = f(mid) < y
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return lo, hi


def nu2(y):
    """Inverse of ``x -> e^x - x - 1`` on ``x >= 0``.

    Accepts a scalar or an array; returns the same kind.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0) or not np.all(np.isfinite(y_arr)):
        bad = y_arr[~(y_arr >= 0)] if y_arr.ndim else y_arr
        raise DomainError(f"nu2 is defined for y >= 0, got {np.min(bad)!r}", float(np.min(bad)))
    lo, hi = _bisect(_expm1mx, np.zeros_like(y_arr), np.maximum(10.0, y_arr + 2.0), y_arr)
    x = 0.5 * (lo + hi)
    for _ in range(3):
        slope = np.expm1(x)
        ok = slope > 0
        step = np.where(ok, (_expm1mx(x) - y_arr) / np.where(ok, slope, 1.0), 0.0)
        x = np.clip(x - step, lo, hi)
    x = np.where(y_arr == 0, 0.0, x)
    return float(x) if np.ndim(y) == 0 else x


def nu1_domain_max(inst: ProblemInstance) -> float:
    lam = inst.lambda_min_marg
    return inst.epsilon * lam * (np.log(lam) - np.log(inst.d) - 1.0)


def nu1(inst: ProblemInstance, y):
    """Smaller-branch inverse of ``x -> eps*lam*x - d*eps*exp(x)``.

    ``lam`` is the smallest eigenvalue of ``rho ⊗ sigma``. The branch is
    ``x <= log(lam/d)``, where the map increases up to its maximum
    :func:`nu1_domain_max`.
    """
    lam = inst.lambda_min_marg
    eps = inst.epsilon
    d = inst.d
    y_arr = np.asarray(y, dtype=float)
    top = nu1_domain_max(inst)
    x_top = np.log(lam / d)
    if not np.all(np.isfinite(y_arr)):
        raise DomainError("nu1 got a non-finite argument", float("nan"))
    over = y_arr - top
    if np.any(over > 1e-12 * max(1.0, abs(top))):
        worst = float(np.max(y_arr))
        raise DomainError(f"nu1 is defined for y <= {top!r}, got {worst!r}", worst)
    y_arr = np.minimum(y_arr, top)

    def g(x):
        return eps * lam * x - d * eps * np.exp(x)

    lo0 = x_top - (np.abs(y_arr) + 1.0) / (eps * lam)
    lo, hi = _bisect(g, lo0, np.full_like(y_arr, x_top), y_arr)
    x = 0.5 * (lo + hi)
    for _ in range(3):
        slope = eps * lam - d * eps * np.exp(x)
        ok = slope > 0
        step = np.where(ok, (g(x) - y_arr) / np.where(ok, slope, 1.0), 0.0)
        x = np.clip(x - step, lo, hi)
    return float(x) if np.ndim(y) == 0 else x


# ---------------------------------------------------------------- envelopes

def nu2_argument(inst: ProblemInstance, dual_val):
    return (inst.cost_at_product - np.asarray(dual_val, dtype=float)) / inst.epsilon


def envelope_bounds(inst: ProblemInstance, dual_vals):
    """Vectorised ``(lower, upper)`` eigenvalue bounds of ``U ⊕ V - C``.

    Both bounds depend on the point only through its dual value.
    """
    dual_vals = np.asarray(dual_vals, dtype=float)
    arg = nu2_argument(inst, dual_vals)
    if np.any(arg < -NU2_REJECT):
        raise InconsistentDualValueError(
            f"dual value exceeds tr((rho⊗sigma)C) by {-np.min(arg) * inst.epsilon:.3e}"
        )
    # sub-tolerance negatives are round-off near the optimum
    upper = inst.epsilon * nu2(np.maximum(arg, 0.0))
    lam = inst.lambda_min_marg
    arg1 = dual_vals - inst.epsilon - inst.cost_at_product - upper * (1.0 - lam)
    lower = inst.epsilon * nu1(inst, arg1)
    return lower, upper


def spectral_envelope(inst: ProblemInstance, dual_val: float) -> SpectralEnvelope:
    lower, upper = envelope_bounds(inst, float(dual_val))
    return SpectralEnvelope(lower=float(lower), upper=float(upper), beta=float(upper) / inst.epsilon)


def strong_concavity_gamma(inst: ProblemInstance, M: float) -> float:
    """Strong-concavity modulus of D on the super-level set ``{D >= M}``."""
    env = spectral_envelope(inst, M)
    return float(np.exp(env.lower / inst.epsilon) / inst.epsilon)
