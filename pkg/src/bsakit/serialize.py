"""JSON encodings of states, maps, decompositions and certificates.

Complex arrays are stored as separate real and imaginary parts,
row-major: ``{"dim": n, "re": [[...]], "im": [[...]]}`` for matrices and
``{"re": [...], "im": [...]}`` for vectors. Floats are written by Python's
``repr``, the shortest string that parses back to the same double.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ParseError
from .lqcc import Filtration, LqccMap
from .lsd import LsDecomposition, OptimalityCertificate, PairCheck, SingleCheck
from .oracle import OracleResult
from .states import BellDiagonal, DensityMatrix

SCHEMA_VERSION = 1


def _num(x) -> float | str:
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def clean(obj):
    """Recursively turn numpy scalars/arrays and non-finite floats into JSON values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    return json.dumps(clean(obj), indent=indent, sort_keys=True, allow_nan=False)


# ---------------------------------------------------------------------------
# arrays


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    return {"dim": int(a.shape[0]), "re": clean(a.real), "im": clean(a.imag)}


def matrix_from_json(obj, dim: int | None = None) -> np.ndarray:
    try:
        n = int(obj["dim"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros((n, n))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad matrix object: {exc}") from None
    if re.shape != (n, n) or im.shape != (n, n):
        raise ParseError(f"matrix parts must be {n}x{n}, got {re.shape} and {im.shape}")
    if dim is not None and n != dim:
        raise ParseError(f"expected a {dim}x{dim} matrix, got dim {n}")
    return re + 1j * im


def vector_to_json(v) -> dict:
    a = np.asarray(getattr(v, "v", v), dtype=complex)
    return {"re": clean(a.real), "im": clean(a.imag)}


def vector_from_json(obj) -> np.ndarray:
    try:
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad vector object: {exc}") from None
    if re.ndim != 1 or re.shape != im.shape:
        raise ParseError(f"vector parts must be flat and equal length, got {re.shape} and {im.shape}")
    return re + 1j * im


# ---------------------------------------------------------------------------
# state files


def bd_to_json(bd: BellDiagonal, label: str | None = None) -> dict:
    out = {"p": list(bd.p)}
    if label is not None:
        out["label"] = label
    return out


def parse_state(text: str):
    """Parse a state file into ``(state, label)``.

    ``state`` is a :class:`BellDiagonal` for ``{"p": [...]}`` and a raw 4x4
    array for ``{"dim": 4, "re": ..., "im": ...}``; validation is left to
    the caller so that parse and validation failures stay distinguishable.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("state file must hold a JSON object")
    label = obj.get("label")
    if "p" in obj:
        p = obj["p"]
        if not isinstance(p, list) or len(p) != 4 or not all(isinstance(x, (int, float)) for x in p):
            raise ParseError('"p" must be a list of four numbers')
        return ("bd", tuple(float(x) for x in p)), label
    if "re" in obj:
        return ("matrix", matrix_from_json(obj, 4)), label
    raise ParseError('state file needs either "p" or "dim"/"re"/"im"')


def density_to_json(rho: DensityMatrix) -> dict:
    return matrix_to_json(rho.m)


# ---------------------------------------------------------------------------
# maps


def filtration_to_json(f: Filtration) -> dict:
    return {"mu": f.mu, "a": f.a, "m": list(f.m)}


def filtration_from_json(obj) -> Filtration:
    try:
        mu, a, m = float(obj["mu"]), float(obj["a"]), tuple(float(x) for x in obj["m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad filtration object: {exc!r}") from None
    return Filtration(mu, a, m)


def map_to_json(lmap: LqccMap) -> dict:
    return {
        "U_A": matrix_to_json(lmap.u_a),
        "U_B": matrix_to_json(lmap.u_b),
        "f_A": filtration_to_json(lmap.f_a),
        "f_B": filtration_to_json(lmap.f_b),
    }


def parse_map(text: str) -> tuple:
    """Parse a map file into its raw parts ``(U_A, U_B, f_A, f_B)``.

    Filtration parameters are returned as dicts so that range checks
    (raised as :class:`InvalidMap` by the constructors) happen separately.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("map file must hold a JSON object")
    try:
        u_a = matrix_from_json(obj["U_A"], 2)
        u_b = matrix_from_json(obj["U_B"], 2)
        fs = []
        for key in ("f_A", "f_B"):
            f = obj[key]
            fs.append({"mu": float(f["mu"]), "a": float(f["a"]), "m": [float(x) for x in f["m"]]})
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad map object: {exc!r}") from None
    return u_a, u_b, fs[0], fs[1]


# ---------------------------------------------------------------------------
# results


def decomposition_to_json(d: LsDecomposition) -> dict:
    return {
        "lambda": d.lam,
        "p_prime": None if d.p_prime is None else list(d.p_prime.p),
        "ensemble": [{"weight": w, "state": vector_to_json(z)} for w, z in d.ensemble],
        "psi": None if d.psi is None else vector_to_json(d.psi),
    }


def _check_to_json(c) -> dict:
    out = {"alpha": list(c.alpha), "residuals": dict(c.residuals), "ok": c.ok}
    if isinstance(c, SingleCheck):
        out["weight"] = c.weight
    if isinstance(c, PairCheck):
        out.update(beta=list(c.beta), route=c.route, info=dict(c.info))
    return out


def certificate_to_json(cert: OptimalityCertificate) -> dict:
    where, worst = cert.worst()
    return {
        "passed": cert.passed,
        "judged": cert.judged,
        "rank": cert.rank,
        "branch": cert.branch,
        "tol": cert.tol,
        "max_residual": cert.max_residual,
        "worst": where,
        "single": [_check_to_json(c) for c in cert.single],
        "pair": [_check_to_json(c) for c in cert.pair],
    }


def oracle_to_json(r: OracleResult) -> dict:
    return {
        "best_lambda": r.best_lambda,
        "best_psi": vector_to_json(r.best_psi),
        "evaluations": r.evaluations,
        "converged": r.converged,
    }


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["v", "command", "argv", "inputs", "outputs", "residuals", "tolerances", "seed", "wall_time"],
    "additionalProperties": False,
    "properties": {
        "v": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
        "argv": {"type": "array", "items": {"type": "string"}},
        "inputs": {"type": "object", "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"}},
        "outputs": {},
        "residuals": {"type": "object"},
        "tolerances": {
            "type": "object",
            "required": ["herm", "psd", "eig", "rank", "cert"],
            "additionalProperties": {"type": "number"},
        },
        "seed": {"type": "integer"},
        "wall_time": {"type": "number", "minimum": 0},
    },
}
