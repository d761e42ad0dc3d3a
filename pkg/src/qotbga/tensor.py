"""Bipartite tensor operations.

Composite index convention: ``(i1, i2) -> i1 * d2 + i2`` (subsystem 1 major),
which is what ``numpy.kron`` produces. Every routine here and the JSON
instance format share this convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermitian import as_square, hermitize


@dataclass(frozen=True)
class BipartiteShape:
    d1: int
    d2: int

    def __post_init__(self):
        if int(self.d1) < 1 or int(self.d2) < 1:
            raise ValueError(f"subsystem dimensions must be positive, got {self.d1}, {self.d2}")

    @property
    def d(self) -> int:
        return self.d1 * self.d2

    def index(self, i1: int, i2: int) -> int:
        return i1 * self.d2 + i2


def _kron(A, B):
    d1, d2 = A.shape[0], B.shape[0]
    return (A[:, None, :, None] * B[None, :, None, :]).reshape(d1 * d2, d1 * d2)


def kron(A, B) -> np.ndarray:
    """``out[i1*d2 + i2, j1*d2 + j2] = A[i1, j1] * B[i2, j2]``."""
    return hermitize(_kron(as_square(A), as_square(B)))


def tensor_sum(U, V) -> np.ndarray:
    """``U ⊗ I + I ⊗ V``."""
    U = as_square(U)
    V = as_square(V)
    d1, d2 = U.shape[0], V.shape[0]
    return hermitize(_kron(U, np.eye(d2)) + _kron(np.eye(d1), V))


def _check(G, shape: BipartiteShape) -> np.ndarray:
    G = as_square(G)
    if G.shape[0] != shape.d:
        raise ValueError(
            f"matrix of dimension {G.shape[0]} does not match shape {shape.d1}x{shape.d2}"
        )
    return G


def partial_trace_2(G, shape: BipartiteShape) -> np.ndarray:
    """Trace out subsystem 2: ``out[i1, j1] = sum_k G[i1*d2 + k, j1*d2 + k]``."""
    G = _check(G, shape)
    d2 = shape.d2
    out = np.zeros((shape.d1, shape.d1), dtype=np.complex128)
    for k in range(d2):
        out += G[k::d2, k::d2]
    return hermitize(out)


def partial_trace_1(G, shape: BipartiteShape) -> np.ndarray:
    """Trace out subsystem 1: ``out[i2, j2] = sum_k G[k*d2 + i2, k*d2 + j2]``."""
    G = _check(G, shape)
    d2 = shape.d2
    out = np.zeros((d2, d2), dtype=np.complex128)
    for k in range(shape.d1):
        out += G[k * d2:(k + 1) * d2, k * d2:(k + 1) * d2]
    return hermitize(out)
