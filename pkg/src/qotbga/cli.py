"""Command-line entry point.

Exit codes: 0 success / converged, 1 bad input or I/O failure, 2 solver hit
``--max-iters``, 3 verification failed.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io
from .dual import DivergedDualError, DualPoint, InconsistentDualValueError, envelope_bounds, evaluate
from .hermitian import DomainError
from .problem import InstanceError, primal_value, random_instance
from .solver import SolverConfig, bga_solve
from .tensor import partial_trace_1, partial_trace_2

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_ITERS = 2
EXIT_VERIFY_FAILED = 3

DEFAULT_DELTA = 1e-8

log = logging.getLogger("qotbga")


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for max_iters
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qotbga", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--trace")
    p.add_argument("--delta", type=_positive_float, default=DEFAULT_DELTA)
    p.add_argument("--max-iters", type=_positive_int, default=1_000_000)
    p.add_argument("--adaptive", action="store_true", help="refresh step sizes every 25 iterations")

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--d1", type=_positive_int, required=True)
    p.add_argument("--d2", type=_positive_int, required=True)
    p.add_argument("--c-scale", type=_positive_float, default=1.0)
    p.add_argument("--output", required=True)

    p = sub.add_parser("verify", help="check a solution against its instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True)
    return parser


def _fail(message) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def _describe(exc) -> str:
    kind = getattr(exc, "kind", type(exc).__name__)
    return f"{kind}: {exc}"


def cmd_solve(args) -> int:
    try:
        inst = io.load_instance(args.input)
    except (OSError, io.FileFormatError, InstanceError) as exc:
        return _fail(_describe(exc))
    cfg = SolverConfig(
        delta=args.delta,
        max_iters=args.max_iters,
        step_mode="adaptive" if args.adaptive else "fixed",
    )
    try:
        sol = bga_solve(inst, cfg)
    except (DivergedDualError, InconsistentDualValueError) as exc:
        return _fail(_describe(exc))
    try:
        io.save_solution(sol, args.output)
        if args.trace:
            io.write_trace_csv(sol.trace, args.trace)
    except OSError as exc:
        return _fail(exc)
    print(f"{sol.status} {sol.iterations} {sol.dual_value:.17g} {sol.err1_f:.6e} {sol.err2_f:.6e}")
    return EXIT_OK if sol.converged else EXIT_MAX_ITERS


def cmd_generate(args) -> int:
    inst = random_instance(args.seed, args.d1, args.d2, args.c_scale)
    try:
        io.save_instance(inst, args.output)
    except OSError as exc:
        return _fail(exc)
    return EXIT_OK


def verify_solution(inst, stored, delta) -> dict:
    """Recompute the diagnostics printed by ``qotbga verify``."""
    p: DualPoint = stored["point"]
    G = stored["Gamma"]
    ev = evaluate(inst, p)
    e1 = float(np.linalg.norm(ev.E1))
    e2 = float(np.linalg.norm(ev.E2))
    g1 = float(np.linalg.norm(partial_trace_2(G, inst.shape) - inst.rho))
    g2 = float(np.linalg.norm(partial_trace_1(G, inst.shape) - inst.sigma))
    try:
        gap = abs(primal_value(inst, G) - ev.dual)
    except DomainError:
        gap = float("nan")
    lower, upper = envelope_bounds(inst, ev.dual)
    contained = bool(lower <= ev.lambda_min and ev.lambda_max <= upper)
    ok = max(e1, e2, g1, g2) < 2.0 * delta
    return {
        "err1": e1,
        "err2": e2,
        "gamma_err1": g1,
        "gamma_err2": g2,
        "trace": float(np.trace(G).real),
        "gap": gap,
        "env_lower": float(lower),
        "env_upper": float(upper),
        "lambda_min": ev.lambda_min,
        "lambda_max": ev.lambda_max,
        "contained": contained,
        "ok": ok,
    }


def cmd_verify(args) -> int:
    try:
        inst = io.load_instance(args.instance)
        stored = io.load_solution(args.solution)
    except (OSError, io.FileFormatError, InstanceError) as exc:
        return _fail(_describe(exc))
    if stored["point"].U.shape[0] != inst.d1 or stored["point"].V.shape[0] != inst.d2 \
            or stored["Gamma"].shape[0] != inst.d:
        return _fail("DimensionMismatch: solution does not match the instance dimensions")
    delta = stored["delta"] if stored["delta"] is not None else DEFAULT_DELTA
    try:
        r = verify_solution(inst, stored, delta)
    except (DivergedDualError, InconsistentDualValueError) as exc:
        print(f"verification failed: {_describe(exc)}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    print(f"marginal_error_1 {r['err1']:.6e}")
    print(f"marginal_error_2 {r['err2']:.6e}")
    print(f"gamma_marginal_error_1 {r['gamma_err1']:.6e}")
    print(f"gamma_marginal_error_2 {r['gamma_err2']:.6e}")
    print(f"trace_gamma {r['trace']:.17g}")
    print(f"duality_gap {r['gap']:.6e}")
    print(
        f"envelope {r['env_lower']:.6g} <= {r['lambda_min']:.6g} <= {r['lambda_max']:.6g} "
        f"<= {r['env_upper']:.6g} {'contained' if r['contained'] else 'VIOLATED'}"
    )
    print("ok" if r["ok"] else f"FAILED: marginal errors not below 2*delta = {2 * delta:g}")
    return EXIT_OK if r["ok"] else EXIT_VERIFY_FAILED


COMMANDS = {"solve": cmd_solve, "generate": cmd_generate, "verify": cmd_verify}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
