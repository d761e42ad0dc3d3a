"""Pure numpy version of the compiled solver loop in ``_kernels.pyx``."""

import numpy as np

OVERFLOW = 700.0


def evaluate_point(C, rho, sigma, eps, d1, d2, U, V, E1, E2):
    """Fill ``E1``, ``E2`` at ``(U, V)``; return ``(dual, lam_min, lam_max)``."""
    M = (np.kron(U, np.eye(d2)) + np.kron(np.eye(d1), V) - C) / eps
    w, X = np.linalg.eigh(M)
    if w[-1] > OVERFLOW:
        raise OverflowError(f"largest exponent eigenvalue {w[-1]:.6g} exceeds {OVERFLOW:g}")
    ew = np.exp(w)
    G = (X * ew) @ X.conj().T
    G = 0.5 * (G + G.conj().T)
    G4 = G.reshape(d1, d2, d1, d2)
    E1[...] = rho - np.trace(G4, axis1=1, axis2=3)
    E2[...] = sigma - np.trace(G4, axis1=0, axis2=2)
    dual = (
        np.vdot(U, rho).real + np.vdot(V, sigma).real - eps * ew.sum() + eps
    )
    return float(dual), float(eps * w[0]), float(eps * w[-1])


def run_iterations(C, rho, sigma, eps, d1, d2, U, V, E1, E2,
                   eta1, eta2, delta, n_max, stale, rec):
    norm = np.linalg.norm
    n = 0
    while n < n_max:
        f1 = norm(E1)
        f2 = norm(E2)
        if stale[0] < delta and stale[1] < delta and f1 < delta and f2 < delta:
            break
        stale[0] = f1
        U += eta1 * E1
        dual, lo, hi = evaluate_point(C, rho, sigma, eps, d1, d2, U, V, E1, E2)
        f2 = norm(E2)
        rec[2 * n] = (dual, norm(E1), f2, lo, hi)
        stale[1] = f2
        V += eta2 * E2
        dual, lo, hi = evaluate_point(C, rho, sigma, eps, d1, d2, U, V, E1, E2)
        rec[2 * n + 1] = (dual, norm(E1), norm(E2), lo, hi)
        n += 1
    return n
