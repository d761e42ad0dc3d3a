"""Acceptance suite: one PASS/FAIL line per criterion.

The lines are printed even without ``-s``. Runtime limits time the solver
calls only; trace checks run afterwards.
"""

import math
import time

import numpy as np
import pytest
from conftest import GOLDEN_COUPLING, random_hermitian

from qotbga import golden_instance
from qotbga.dual import DualPoint, dual_value, evaluate, nu1, nu1_domain_max, nu2, strong_concavity_gamma
from qotbga.hermitian import frechet_exp, hs_inner, lift
from qotbga.problem import random_instance, with_cost
from qotbga.solver import SolverConfig, bga_solve, compute_step_sizes, estimate_linear_rate, oracle_solve, tail_gap_ratios

DIM_PAIRS = [(2, 2), (2, 3), (3, 2), (3, 3)]


def report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {k:2d} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def trace_summary(sol):
    """Reduce a full trace to the quantities the trajectory criteria need."""
    tr = sol.trace
    dual = np.fromiter((r.dual for r in tr), float, len(tr))
    e1 = np.fromiter((r.err1_f for r in tr), float, len(tr))
    e2 = np.fromiter((r.err2_f for r in tr), float, len(tr))
    eta = np.fromiter((r.eta for r in tr), float, len(tr))
    is_u = np.fromiter((r.stage == "U" for r in tr), bool, len(tr))
    lmin = np.fromiter((r.lambda_min for r in tr), float, len(tr))
    lmax = np.fromiter((r.lambda_max for r in tr), float, len(tr))
    low = np.fromiter((r.env_lower for r in tr), float, len(tr))
    up = np.fromiter((r.env_upper for r in tr), float, len(tr))
    gain = np.diff(dual)
    # the U step moves along the first marginal error of the previous point
    prev_err = np.where(is_u[1:], e1[:-1], e2[:-1])
    ratios = tail_gap_ratios(tr, sol.dual_value)
    return {
        "records": len(tr),
        "monotone_viol": int(np.sum(gain < -1e-10 * (1 + np.abs(dual[1:])))),
        "improve_viol": int(np.sum(gain < 0.5 * eta[1:] * prev_err**2 - 1e-10)),
        "envelope_viol": int(np.sum(~(low <= lmin)) + np.sum(~(lmax <= up))),
        "rate": estimate_linear_rate(tr),
        "tail_max": float(ratios.max()) if ratios.size else math.nan,
        "tail_count": int(ratios.size),
    }


@pytest.fixture(scope="module")
def golden_run():
    inst = golden_instance()
    t0 = time.perf_counter()
    sol = bga_solve(inst, SolverConfig(delta=1e-8))
    elapsed = time.perf_counter() - t0
    return sol, elapsed, trace_summary(sol)


@pytest.fixture(scope="module")
def zero_cost_runs():
    elapsed, rows = 0.0, []
    for seed in range(25):
        inst = random_instance(seed, *DIM_PAIRS[seed % 4])
        inst = with_cost(inst, np.zeros_like(inst.C))
        t0 = time.perf_counter()
        sol = bga_solve(inst, SolverConfig(delta=1e-10))
        elapsed += time.perf_counter() - t0
        row = trace_summary(sol)
        row["converged"] = sol.converged
        row["err"] = float(np.linalg.norm(sol.coupling - np.kron(inst.rho, inst.sigma)))
        rows.append(row)
        del sol
    return elapsed, rows


@pytest.fixture(scope="module")
def well_conditioned():
    """First 20 instances with lambda_min(rho⊗sigma) >= 0.01 and initial beta <= 3.

    Outside this class fixed-step ascent can need millions of iterations.
    """
    out, seed = [], 0
    while len(out) < 20:
        inst = random_instance(seed, *DIM_PAIRS[seed % 4])
        beta = compute_step_sizes(inst, dual_value(inst, DualPoint.zeros(inst))).beta
        if inst.lambda_min_marg >= 0.01 and beta <= 3:
            out.append((seed, inst, bga_solve(inst, SolverConfig(delta=1e-8, trace_every=1000))))
        seed += 1
    return out


def test_criterion_01_golden(golden_run, capsys):
    sol, elapsed, _ = golden_run
    err = float(np.max(np.abs(sol.coupling - GOLDEN_COUPLING)))
    ok = sol.converged and err <= 1e-6 and 2776 <= sol.iterations <= 3392 and elapsed < 10
    report(capsys, 1, ok, f"status={sol.status} iterations={sol.iterations} max_entry_err={err:.2e} time={elapsed:.2f}s")


def test_criterion_02_zero_cost(zero_cost_runs, capsys):
    elapsed, rows = zero_cost_runs
    worst = max(r["err"] for r in rows)
    ok = all(r["converged"] for r in rows) and worst <= 1e-8 and elapsed < 30
    report(capsys, 2, ok, f"instances={len(rows)} max_frobenius_err={worst:.2e} time={elapsed:.2f}s")


def test_criterion_03_monotone(golden_run, zero_cost_runs, capsys):
    rows = [golden_run[2]] + zero_cost_runs[1]
    mono = sum(r["monotone_viol"] for r in rows)
    imp = sum(r["improve_viol"] for r in rows)
    n = sum(r["records"] for r in rows)
    report(capsys, 3, mono == 0 and imp == 0, f"records={n} monotone_violations={mono} improvement_violations={imp}")


def test_criterion_04_gradients(capsys):
    g = np.random.default_rng(404)
    worst = 0.0
    for k in range(10):
        d1, d2 = DIM_PAIRS[k % 4]
        inst = random_instance(400 + k, d1, d2)
        p = DualPoint(random_hermitian(g, d1, 0.3), random_hermitian(g, d2, 0.3))
        ev = evaluate(inst, p)
        h = 1e-5
        for _ in range(8):
            A, B = random_hermitian(g, d1), random_hermitian(g, d2)
            plus = dual_value(inst, DualPoint(p.U + h * A, p.V + h * B))
            minus = dual_value(inst, DualPoint(p.U - h * A, p.V - h * B))
            exact = hs_inner(ev.E1, A) + hs_inner(ev.E2, B)
            worst = max(worst, abs((plus - minus) / (2 * h) - exact) / max(abs(exact), 1.0))
    report(capsys, 4, worst < 1e-6, f"instances=10 directions=8 max_rel_err={worst:.2e}")


def test_criterion_05_frechet(capsys):
    g = np.random.default_rng(505)
    fd_worst, slack_min = 0.0, math.inf
    for k in range(50):
        d = 2 + k % 5
        A, B = random_hermitian(g, d), random_hermitian(g, d)
        D = frechet_exp(A, B)
        if k < 10:
            h = 1e-5
            fd = (lift("exp", A + h * B) - lift("exp", A - h * B)) / (2 * h)
            fd_worst = max(fd_worst, np.linalg.norm(D - fd) / np.linalg.norm(D))
        w = np.linalg.eigvalsh(A)
        q, nb = hs_inner(D, B), np.linalg.norm(B) ** 2
        slack_min = min(slack_min, q - np.exp(w[0]) * nb, np.exp(w[-1]) * nb - q)
    ok = fd_worst < 1e-7 and slack_min >= -1e-9
    report(capsys, 5, ok, f"fd_rel_err={fd_worst:.2e} pairs=50 min_bound_slack={slack_min:.2e}")


def test_criterion_06_envelopes(golden_run, zero_cost_runs, capsys):
    rows = [golden_run[2]] + zero_cost_runs[1]
    viol = sum(r["envelope_viol"] for r in rows)
    n = sum(r["records"] for r in rows)
    report(capsys, 6, viol == 0, f"iterates={n} violations={viol}")


def test_criterion_07_strong_concavity(well_conditioned, capsys):
    slack_min, gammas = math.inf, []
    for _, inst, sol in well_conditioned[:10]:
        ev = evaluate(inst, DualPoint.zeros(inst))
        gamma = strong_concavity_gamma(inst, ev.dual)
        gammas.append(gamma)
        num = np.linalg.norm(ev.E1) ** 2 + np.linalg.norm(ev.E2) ** 2
        rhs = num / (2 * gamma) if gamma > 0 else math.inf
        slack_min = min(slack_min, rhs - (sol.dual_value - ev.dual))
    ok = slack_min >= -1e-8
    report(capsys, 7, ok, f"instances=10 min_slack={slack_min:.3e} gamma_range=[{min(gammas):.2e}, {max(gammas):.2e}]")


def test_criterion_08_rates(golden_run, zero_cost_runs, capsys):
    rows = [golden_run[2]] + zero_cost_runs[1]
    worst_rate = max(r["rate"] for r in rows)
    tails = [r["tail_max"] for r in rows if r["tail_count"]]
    ok = worst_rate < -1e-5 and len(tails) == len(rows) and max(tails) < 1
    report(capsys, 8, ok, f"max_slope={worst_rate:.3e} max_tail_ratio={max(tails):.4f} traces_with_tail={len(tails)}/{len(rows)}")


def test_criterion_09_oracle(well_conditioned, capsys):
    delta, worst, seeds = 1e-8, 0.0, []
    for seed, inst, sol in well_conditioned:
        ref = oracle_solve(inst, SolverConfig(delta=delta, trace_every=1000))
        worst = max(worst, float(np.linalg.norm(sol.coupling - ref.coupling)))
        seeds.append(seed)
    report(capsys, 9, worst <= 10 * delta, f"instances={len(seeds)} seeds={seeds[0]}..{seeds[-1]} max_diff={worst:.2e}")


def test_criterion_10_inverses(capsys):
    anchors = abs(nu2(0.0)) + abs(nu2(math.e - 2) - 1.0)
    ys = np.geomspace(1e-8, 1e2, 50)
    xs = nu2(ys)
    r2 = float(np.max(np.abs(np.expm1(xs) - xs - ys)))
    inst = random_instance(0, 2, 3)
    lam, eps, d = inst.lambda_min_marg, inst.epsilon, inst.d
    y1 = nu1_domain_max(inst) - np.geomspace(1e-6, 50, 50)
    x1 = nu1(inst, y1)
    r1 = float(np.max(np.abs(eps * lam * x1 - d * eps * np.exp(x1) - y1)))
    ok = anchors < 1e-12 and r2 < 1e-10 and r1 < 1e-10
    report(capsys, 10, ok, f"anchor_err={anchors:.1e} nu2_residual={r2:.2e} nu1_residual={r1:.2e}")
