"""Dense complex Hermitian matrices.

Matrices are plain ``complex128`` numpy arrays. Every routine that returns a
matrix passes it through :func:`hermitize` so that floating-point asymmetry
does not accumulate across solver iterations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

RECONSTRUCTION_TOL = 1e-10
DOMAIN_SLACK = 1e-12
# first divided difference of exp switches to its limit below this gap
DIVDIFF_GAP = 1e-8


class DomainError(ValueError):
    """An eigenvalue lies outside the domain of the lifted function."""

    def __init__(self, message, eigenvalue):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class EigenDecompositionError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and the matching unitary eigenvector matrix.

    Column ``j`` of ``eigenvectors`` belongs to ``eigenvalues[j]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        X = self.eigenvectors
        return hermitize((X * self.eigenvalues) @ X.conj().T)


def as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def hermitize(A) -> np.ndarray:
    """Return ``(A + A^H) / 2`` with the diagonal made exactly real."""
    A = as_square(A)
    H = 0.5 * (A + A.conj().T)
    np.fill_diagonal(H, H.diagonal().real)
    return H


def eig_hermitian(A) -> EigenDecomposition:
    """Eigendecomposition with a deterministic phase convention.

    Eigenvalues come out ascending; each eigenvector is rotated so its
    largest-magnitude component is real and positive.
    """
    A = hermitize(A)
    try:
        w, X = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(
            f"Hermitian eigensolver failed for a {A.shape[0]}x{A.shape[0]} matrix "
            f"with Frobenius norm {np.linalg.norm(A):.3e}: {exc}"
        ) from exc
    # ties in magnitude resolve to the lowest row index (argmax semantics)
    idx = np.argmax(np.abs(X), axis=0)
    pivots = X[idx, np.arange(X.shape[1])]
    X = X * (np.abs(pivots) / pivots)
    return EigenDecomposition(eigenvalues=w, eigenvectors=X)


def xlogx(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, None)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


ScalarFunction = Union[str, Callable[[np.ndarray], np.ndarray]]


def lift(f: ScalarFunction, A) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    ``f`` is one of ``"exp"``, ``"log"``, ``"xlogx"`` or a vectorised callable
    mapping real eigenvalues to real values. ``"xlogx"`` uses ``0 log 0 = 0``
    and tolerates eigenvalues down to ``-1e-12`` (treated as zero).
    """
    dec = eig_hermitian(A)
    w = dec.eigenvalues
    if f == "exp":
        fw = np.exp(w)
    elif f == "log":
        if w[0] <= 0.0:
            raise DomainError(f"log needs positive eigenvalues, found {w[0]!r}", w[0])
        fw = np.log(w)
    elif f == "xlogx":
        if w[0] < -DOMAIN_SLACK:
            raise DomainError(
                f"x log x needs non-negative eigenvalues, found {w[0]!r}", w[0]
            )
        fw = xlogx(w)
    elif callable(f):
        fw = np.asarray(f(w), dtype=float)
    else:
        raise ValueError(f"unknown scalar function {f!r}")
    X = dec.eigenvectors
    return hermitize((X * fw) @ X.conj().T)


def hs_inner(A, B) -> float:
    """Hilbert-Schmidt inner product ``tr(A^H B)`` of two Hermitian matrices."""
    A = as_square(A)
    B = as_square(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    z = np.vdot(A, B)
    if abs(z.imag) >= 1e-12 * max(1.0, abs(z.real)):
        raise ValueError(
            f"inner product has imaginary part {z.imag:.3e}; inputs are not Hermitian"
        )
    return float(z.real)


def frobenius_norm(A) -> float:
    return float(np.sqrt(max(hs_inner(A, A), 0.0)))


def exp_divided_differences(w: np.ndarray) -> np.ndarray:
    """Matrix of first divided differences of exp over the eigenvalues ``w``."""
    ew = np.exp(w)
    gap = w[:, None] - w[None, :]
    close = np.abs(gap) < DIVDIFF_GAP
    safe_gap = np.where(close, 1.0, gap)
    # e^a - e^b = e^b * expm1(a - b) avoids cancellation for close pairs
    near = np.abs(gap) < 1.0
    direct = (ew[:, None] - ew[None, :]) / safe_gap
    dd = np.where(near, ew[None, :] * np.expm1(np.where(near, gap, 0.0)) / safe_gap, direct)
    return np.where(close, ew[:, None], dd)


def frechet_exp(A, B) -> np.ndarray:
    """Directional derivative of the matrix exponential at ``A`` along ``B``.

    Computed in the eigenbasis of ``A``, where the derivative acts entrywise
    by the first divided differences of exp.
    """
    A = hermitize(A)
    B = hermitize(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    dec = eig_hermitian(A)
    X = dec.eigenvectors
    Bt = X.conj().T @ B @ X
    return hermitize(X @ (Bt * exp_divided_differences(dec.eigenvalues)) @ X.conj().T)
