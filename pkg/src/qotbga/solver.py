"""Block gradient ascent on the dual functional, plus a plain gradient oracle."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .dual import (
    NU2_REJECT,
    DivergedDualError,
    DualPoint,
    InconsistentDualValueError,
    _raw_evaluate,
    envelope_bounds,
    evaluate,
    nu2,
    nu2_argument,
)
from .hermitian import DomainError, hermitize
from .problem import ProblemInstance

logger = logging.getLogger(__name__)

ADAPTIVE_PERIOD = 25
CHUNK = 512
RATE_BURN_IN = 0.2
RATE_MIN_POINTS = 50


@dataclass(frozen=True)
class SolverConfig:
    delta: float = 1e-8
    max_iters: int = 1_000_000
    step_mode: str = "fixed"
    u0_v0: Optional[DualPoint] = None
    trace_every: int = 1

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters!r}")
        if self.step_mode not in ("fixed", "adaptive"):
            raise ValueError(f"step_mode must be 'fixed' or 'adaptive', got {self.step_mode!r}")
        if int(self.trace_every) < 1:
            raise ValueError(f"trace_every must be at least 1, got {self.trace_every!r}")


@dataclass(frozen=True)
class StepSizes:
    eta1: float
    eta2: float
    beta: float


class IterationRecord(NamedTuple):
    """Diagnostics at one iterate.

    ``stage="U"`` at index ``n`` describes ``(U_n, V_{n-1})``, reached by the
    n-th U update; ``stage="V"`` describes ``(U_n, V_n)``. The starting point
    is recorded as ``n=0, stage="V"``. ``err1_f`` and ``err2_f`` are the
    Frobenius norms of both marginal errors evaluated at that point.
    ``lambda_min``/``lambda_max`` are the extreme eigenvalues of
    ``U ⊕ V - C`` and ``eta`` is the step that produced the point.
    """

    n: int
    stage: str
    dual: float
    err1_f: float
    err2_f: float
    env_lower: float
    env_upper: float
    lambda_min: float = math.nan
    lambda_max: float = math.nan
    eta: float = 0.0


@dataclass
class Solution:
    dual_point: DualPoint
    coupling: np.ndarray
    iterations: int
    status: str
    trace: List[IterationRecord]
    rate_estimate: float
    dual_value: float
    err1_f: float
    err2_f: float
    step_sizes: StepSizes
    delta: float
    backend: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def compute_step_sizes(inst: ProblemInstance, initial_dual: float) -> StepSizes:
    """Step sizes that guarantee ascent on the super-level set of ``initial_dual``."""
    arg = float(nu2_argument(inst, initial_dual))
    if arg < -NU2_REJECT:
        raise InconsistentDualValueError(
            f"dual value {initial_dual!r} exceeds tr((rho⊗sigma)C) = {inst.cost_at_product!r}"
        )
    beta = nu2(max(arg, 0.0))
    scale = inst.epsilon * math.exp(-beta)
    return StepSizes(eta1=scale / inst.d2, eta2=scale / inst.d1, beta=beta)


def _start(inst: ProblemInstance, cfg: SolverConfig):
    p = cfg.u0_v0 if cfg.u0_v0 is not None else DualPoint.zeros(inst)
    U = np.ascontiguousarray(hermitize(p.U))
    V = np.ascontiguousarray(hermitize(p.V))
    if U.shape[0] != inst.d1 or V.shape[0] != inst.d2:
        raise ValueError("starting point does not match the instance dimensions")
    return U, V


def _envelopes(inst, duals, kern):
    compiled = getattr(kern, "envelopes", None)
    if compiled is None:
        return envelope_bounds(inst, duals)
    duals = np.ascontiguousarray(duals, dtype=float)
    lower = np.empty_like(duals)
    upper = np.empty_like(duals)
    code, i = compiled(duals, inst.epsilon, inst.lambda_min_marg, inst.d, inst.cost_at_product, lower, upper)
    if code == 1:
        raise InconsistentDualValueError(
            f"dual value exceeds tr((rho⊗sigma)C) by {duals[i] - inst.cost_at_product:.3e}"
        )
    if code == 2:
        raise DomainError(f"lower envelope argument out of range at dual value {duals[i]!r}", duals[i])
    return lower, upper


def _make_records(inst, rows, n0, stages, etas, keep, kern=None):
    idx = np.flatnonzero(keep)
    lower, upper = _envelopes(inst, rows[idx, 0], kern)
    sel = rows[idx]
    # NamedTuple construction is the cheap path for millions of records
    return list(map(
        IterationRecord._make,
        zip(
            np.asarray(n0)[idx].tolist(),
            [stages[k] for k in idx],
            sel[:, 0].tolist(),
            sel[:, 1].tolist(),
            sel[:, 2].tolist(),
            lower.tolist(),
            upper.tolist(),
            sel[:, 3].tolist(),
            sel[:, 4].tolist(),
            np.asarray(etas, dtype=float)[idx].tolist(),
        ),
    ))


def _finish(inst, cfg, U, V, iterations, converged, trace, steps, backend):
    final = evaluate(inst, DualPoint(U.copy(), V.copy()))
    try:
        rate = estimate_linear_rate(trace)
    except ValueError:
        rate = math.nan
    status = "converged" if converged else "max_iters"
    if not converged:
        logger.warning("stopped after %d iterations without reaching delta=%g", iterations, cfg.delta)
    return Solution(
        dual_point=final.point,
        coupling=final.coupling,
        iterations=iterations,
        status=status,
        trace=trace,
        rate_estimate=rate,
        dual_value=final.dual,
        err1_f=float(np.linalg.norm(final.E1)),
        err2_f=float(np.linalg.norm(final.E2)),
        step_sizes=steps,
        delta=cfg.delta,
        backend=backend,
    )


def bga_solve(inst: ProblemInstance, cfg: SolverConfig = SolverConfig(), backend=None) -> Solution:
    """Block gradient ascent: alternate ``U += eta1*E1`` and ``V += eta2*E2``.

    The stopping test runs at the top of each iteration on the error norms
    that drove the last U and V updates, and additionally on both errors at
    the current point, so a converged solution always satisfies
    ``|E1|_F, |E2|_F < delta`` where it stands.

    ``backend`` selects the inner-loop implementation (see
    :mod:`qotbga.kernels`); both give the same iterates up to round-off.
    """
    name = kernels.DEFAULT_BACKEND if backend is None else backend
    kern = kernels.get_backend(name)
    U, V = _start(inst, cfg)
    C = np.ascontiguousarray(inst.C)
    rho = np.ascontiguousarray(inst.rho)
    sigma = np.ascontiguousarray(inst.sigma)
    eps, d1, d2 = inst.epsilon, inst.d1, inst.d2
    E1 = np.empty((d1, d1), dtype=np.complex128)
    E2 = np.empty((d2, d2), dtype=np.complex128)
    args = (C, rho, sigma, eps, d1, d2)

    try:
        dual, lo, hi = kern.evaluate_point(*args, U, V, E1, E2)
    except OverflowError as exc:
        raise DivergedDualError(str(exc)) from exc
    steps = compute_step_sizes(inst, dual)
    first = np.array([[dual, np.linalg.norm(E1), np.linalg.norm(E2), lo, hi]])
    trace = _make_records(inst, first, [0], ["V"], [0.0], [True], kern)

    stale = np.full(2, np.inf)
    period = ADAPTIVE_PERIOD if cfg.step_mode == "adaptive" else CHUNK
    every = int(cfg.trace_every)
    n = 0
    converged = False
    while n < cfg.max_iters:
        m = min(period, int(cfg.max_iters) - n)
        rows = np.empty((2 * m, 5))
        try:
            done = kern.run_iterations(
                *args, U, V, E1, E2, steps.eta1, steps.eta2, cfg.delta, m, stale, rows
            )
        except OverflowError as exc:
            raise DivergedDualError(f"{exc} near iteration {n}") from exc
        if done:
            idx = n + 1 + np.repeat(np.arange(done), 2)
            stages = ["U", "V"] * done
            etas = np.tile([steps.eta1, steps.eta2], done)
            keep = (idx % every == 0)
            if done < m or n + done == cfg.max_iters:
                keep[-2:] = True
            trace.extend(_make_records(inst, rows[: 2 * done], idx, stages, etas, keep, kern))
        n += done
        if done < m:
            converged = True
            break
        if cfg.step_mode == "adaptive":
            steps = compute_step_sizes(inst, float(rows[2 * done - 1, 0]))

    if not converged:
        converged = bool(
            stale.max() < cfg.delta
            and np.linalg.norm(E1) < cfg.delta
            and np.linalg.norm(E2) < cfg.delta
        )
    return _finish(inst, cfg, U, V, n, converged, trace, steps, name)


def oracle_solve(inst: ProblemInstance, cfg: SolverConfig = SolverConfig()) -> Solution:
    """Plain gradient ascent over tensor sums, for cross-checking :func:`bga_solve`.

    Each step moves ``U ⊕ V`` along the projected gradient with the
    conservative step ``min(eta1, eta2) / 4``. Runs on the numpy evaluation
    in :mod:`qotbga.dual`, never on the compiled kernel.
    """
    U, V = _start(inst, cfg)
    w, _, dual, E1, E2 = _raw_evaluate(inst, U, V)
    steps = compute_step_sizes(inst, dual)
    eta = min(steps.eta1, steps.eta2) / 4.0
    eps = inst.epsilon
    norm = np.linalg.norm
    every = int(cfg.trace_every)
    rows = [(dual, norm(E1), norm(E2), eps * w[0], eps * w[-1])]
    idx = [0]
    n = 0
    converged = False
    while True:
        if norm(E1) < cfg.delta and norm(E2) < cfg.delta:
            converged = True
            break
        if n >= cfg.max_iters:
            break
        # projected gradient step, inlined: E1 and E2 are already exactly Hermitian
        shift = eta * np.trace(E1).real / inst.d
        U = U + (eta / inst.d2) * E1
        V = V + (eta / inst.d1) * E2 - shift * np.eye(inst.d2)
        w, _, dual, E1, E2 = _raw_evaluate(inst, U, V)
        n += 1
        if n % every == 0:
            rows.append((dual, norm(E1), norm(E2), eps * w[0], eps * w[-1]))
            idx.append(n)
    if idx[-1] != n:
        rows.append((dual, norm(E1), norm(E2), eps * w[0], eps * w[-1]))
        idx.append(n)
    m = len(rows)
    etas = np.full(m, eta)
    etas[0] = 0.0
    trace = _make_records(inst, np.array(rows), idx, ["V"] * m, etas, np.ones(m, dtype=bool))
    oracle_steps = StepSizes(eta1=eta, eta2=eta, beta=steps.beta)
    return _finish(inst, cfg, U, V, n, converged, trace, oracle_steps, "oracle")


def _positions(trace: Sequence[IterationRecord]) -> np.ndarray:
    # a U record sits half an iteration before the V record with the same n
    return np.array([r.n - (0.5 if r.stage == "U" else 0.0) for r in trace], dtype=float)


def estimate_linear_rate(trace: Sequence[IterationRecord]) -> float:
    """Least-squares slope of ``log(err1_f + err2_f)`` per iteration.

    The first 20% of records are discarded as transient; at least 50 must
    remain. A negative slope means the errors shrink geometrically.
    """
    start = int(math.floor(RATE_BURN_IN * len(trace)))
    window = list(trace[start:])
    if len(window) < RATE_MIN_POINTS:
        raise ValueError(
            f"need at least {RATE_MIN_POINTS} records after burn-in, have {len(window)}"
        )
    x = _positions(window)
    err = np.array([r.err1_f + r.err2_f for r in window])
    ok = err > 0
    if ok.sum() < 2:
        raise ValueError("not enough positive error values to fit a rate")
    slope, _ = np.polyfit(x[ok], np.log(err[ok]), 1)
    return float(slope)


def tail_gap_ratios(trace: Sequence[IterationRecord], d_hat: float, floor: float = 1e-11) -> np.ndarray:
    """Ratios ``(d_hat - D_{n+1}) / (d_hat - D_n)`` over full iterations.

    Uses the ``stage="V"`` records of the second half of the trajectory and
    stops where the gap falls below ``floor * (1 + |d_hat|)``, beyond which
    round-off in ``D`` dominates.
    """
    duals = np.array([r.dual for r in trace if r.stage == "V"])
    gaps = d_hat - duals
    cutoff = floor * (1.0 + abs(d_hat))
    valid = np.flatnonzero(gaps > cutoff)
    if valid.size < 2:
        return np.empty(0)
    last = valid[-1]
    first = last // 2
    g = gaps[first: last + 1]
    return g[1:] / g[:-1]
