"""JSON instance/solution files and the CSV trace export.

Matrices are written as arrays of rows of ``[re, im]`` pairs. Floats are
formatted with 17 significant digits so that files re-parse to bit-identical
doubles.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .dual import DualPoint
from .problem import ProblemInstance, validate_instance

TRACE_COLUMNS = ("n", "stage", "dual", "err1_f", "err2_f", "env_lower", "env_upper")


class FileFormatError(ValueError):
    pass


def _num(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise FileFormatError(f"cannot serialise non-finite value {x!r}")
    return format(x, ".17g")


def _cmat(A, indent: str) -> str:
    A = np.asarray(A, dtype=np.complex128)
    rows = []
    for row in A:
        entries = ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row)
        rows.append(f"{indent}  [{entries}]")
    return "[\n" + ",\n".join(rows) + f"\n{indent}]"


def _document(fields) -> str:
    parts = [f'  "{key}": {value}' for key, value in fields]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def instance_to_json(inst: ProblemInstance) -> str:
    return _document(
        [
            ("epsilon", _num(inst.epsilon)),
            ("d1", str(inst.d1)),
            ("d2", str(inst.d2)),
            ("rho", _cmat(inst.rho, "  ")),
            ("sigma", _cmat(inst.sigma, "  ")),
            ("C", _cmat(inst.C, "  ")),
        ]
    )


def parse_cmat(raw, name: str) -> np.ndarray:
    try:
        A = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{name}: not a numeric matrix ({exc})") from exc
    if A.ndim != 3 or A.shape[2] != 2 or A.shape[0] != A.shape[1]:
        raise FileFormatError(f"{name}: expected a square array of [re, im] pairs, got shape {A.shape}")
    return A[..., 0] + 1j * A[..., 1]


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise FileFormatError(f"{path}: top level must be an object")
    return data


def instance_from_dict(data: dict) -> ProblemInstance:
    raw = dict(data)
    for key in ("rho", "sigma", "C"):
        if key in raw:
            raw[key] = parse_cmat(raw[key], key)
    return validate_instance(raw)


def load_instance(path) -> ProblemInstance:
    return instance_from_dict(_read_json(path))


def save_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(instance_to_json(inst), encoding="utf-8")


def solution_to_json(solution) -> str:
    p = solution.dual_point
    return _document(
        [
            ("U", _cmat(p.U, "  ")),
            ("V", _cmat(p.V, "  ")),
            ("Gamma", _cmat(solution.coupling, "  ")),
            ("iterations", str(int(solution.iterations))),
            ("dual_value", _num(solution.dual_value)),
            ("status", json.dumps(solution.status)),
            ("delta", _num(solution.delta)),
        ]
    )


def save_solution(solution, path) -> None:
    Path(path).write_text(solution_to_json(solution), encoding="utf-8")


def load_solution(path) -> dict:
    """Parse a solution file into a dict with ``point``, ``Gamma`` and metadata.

    ``delta`` is optional and ``None`` when missing.
    """
    data = _read_json(path)
    try:
        U = parse_cmat(data["U"], "U")
        V = parse_cmat(data["V"], "V")
        G = parse_cmat(data["Gamma"], "Gamma")
        out = {
            "point": DualPoint(U, V),
            "Gamma": G,
            "iterations": int(data["iterations"]),
            "dual_value": float(data["dual_value"]),
            "status": str(data["status"]),
            "delta": float(data["delta"]) if data.get("delta") is not None else None,
        }
    except KeyError as exc:
        raise FileFormatError(f"{path}: missing field {exc.args[0]!r}") from exc
    if out["status"] not in ("converged", "max_iters"):
        raise FileFormatError(f"{path}: unknown status {out['status']!r}")
    return out


def write_trace_csv(trace: Iterable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in trace:
            writer.writerow(
                [r.n, r.stage, _num(r.dual), _num(r.err1_f), _num(r.err2_f),
                 _num(r.env_lower), _num(r.env_upper)]
            )


def read_trace_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise FileFormatError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            {k: (v if k == "stage" else int(v) if k == "n" else float(v)) for k, v in row.items()}
            for row in reader
        ]
