"""Command-line interface: ``bsakit <command> <files> [flags]``.

Every command prints one JSON report on stdout; diagnostics go to stderr.
Exit codes: 0 success, 2 parse error, 3 validation error, 4 separable
input, 5 certificate failure, 6 bad map.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import serialize as ser
from .entanglement import concurrence, concurrence_bd, entanglement_of_formation, is_separable, pure_concurrence
from .errors import (
    Annihilated,
    BsakitError,
    InvalidMap,
    NotEntangled,
    NotInvertible,
    ParseError,
    PureInput,
)
from .lqcc import (
    Filtration,
    LqccMap,
    apply_lqcc,
    concurrence_transform_check,
    transport_decomposition,
    verify_transported_optimality,
)
from .lsd import ls_decompose_bd, reconstruction_error, verify_optimality, wronskian_checks, wronskian_closed_form
from .oracle import DEFAULT_BUDGET, DEFAULT_RESTARTS, bsa_search
from .states import BellDiagonal, DensityMatrix, bd_to_density, density_to_bd, random_bd
from .tolerances import SCALE_ENV, Tolerances, from_env

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_SEPARABLE = 4
EXIT_CERT = 5
EXIT_MAP = 6


class Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise Exit(EXIT_PARSE, f"{self.prog}: {message}")


def _read(path: str) -> tuple[str, str]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise Exit(EXIT_PARSE, f"{path}: {exc.strerror or exc}") from None
    try:
        return data.decode("utf-8"), hashlib.sha256(data).hexdigest()
    except UnicodeDecodeError:
        raise Exit(EXIT_PARSE, f"{path}: not UTF-8 text") from None


class Loaded:
    """A validated state file."""

    def __init__(self, path: str, tol: Tolerances):
        text, self.digest = _read(path)
        self.path = path
        try:
            (kind, raw), self.label = ser.parse_state(text)
        except ParseError as exc:
            raise Exit(EXIT_PARSE, f"{path}: {exc}") from None
        try:
            if kind == "bd":
                self.bd = BellDiagonal(raw)
                self.rho = bd_to_density(self.bd, tol)
                self.exact_bd = True
            else:
                self.rho = DensityMatrix(raw, tol)
                self.bd, self.exact_bd = density_to_bd(self.rho)
        except BsakitError as exc:
            raise Exit(EXIT_INVALID, f"{path}: {exc}") from None

    def require_bd(self) -> BellDiagonal:
        if not self.exact_bd:
            raise Exit(EXIT_INVALID, f"{self.path}: state is not Bell-diagonal")
        return self.bd

    def header(self) -> dict:
        out = {"file": self.path}
        if self.label is not None:
            out["label"] = self.label
        return out


def _load_map(path: str) -> tuple[LqccMap, str]:
    text, digest = _read(path)
    try:
        u_a, u_b, fa, fb = ser.parse_map(text)
    except ParseError as exc:
        raise Exit(EXIT_PARSE, f"{path}: {exc}") from None
    try:
        lmap = LqccMap(u_a, u_b, Filtration(fa["mu"], fa["a"], fa["m"]), Filtration(fb["mu"], fb["a"], fb["m"]))
    except InvalidMap as exc:
        raise Exit(EXIT_MAP, f"{path}: {exc}") from None
    return lmap, digest


# ---------------------------------------------------------------------------
# commands; each returns (outputs, residuals, exit code)


def cmd_concurrence(args, tol, inputs):
    results = []
    for path in args.files:
        s = Loaded(path, tol)
        inputs[path] = s.digest
        rep = concurrence(s.rho, tol)
        results.append(
            {
                **s.header(),
                "lambdas": list(rep.lambdas),
                "concurrence": rep.concurrence,
                "entanglement_of_formation": entanglement_of_formation(s.rho, tol),
                "entanglement_of_formation_ebits": entanglement_of_formation(s.rho, tol, base=2),
            }
        )
    return results, {}, EXIT_OK


def cmd_separable(args, tol, inputs):
    results = []
    for path in args.files:
        s = Loaded(path, tol)
        inputs[path] = s.digest
        v = is_separable(s.rho, tol)
        out = {**s.header(), "separable": v.separable, "min_pt_eigenvalue": v.min_pt_eigenvalue}
        if s.exact_bd:
            out["max_p"] = max(s.bd.p)
        results.append(out)
    return results, {}, EXIT_OK


def _witness(bd: BellDiagonal) -> dict:
    return {"max_p": max(bd.p), "bound": 0.5, "holds": max(bd.p) <= 0.5}


def cmd_lsd(args, tol, inputs):
    results, residuals, code = [], {}, EXIT_OK
    for path in args.files:
        s = Loaded(path, tol)
        inputs[path] = s.digest
        bd = s.require_bd()
        try:
            d = ls_decompose_bd(bd, tol)
        except NotEntangled:
            w = _witness(bd)
            print(f"{path}: separable input, max p = {w['max_p']!r} <= 1/2", file=sys.stderr)
            results.append({**s.header(), "separable": True, "witness": w})
            code = max(code, EXIT_SEPARABLE)
            continue
        except PureInput as exc:
            raise Exit(EXIT_INVALID, f"{path}: {exc}") from None
        out = {
            **s.header(),
            "separable": False,
            "decomposition": ser.decomposition_to_json(d),
            "concurrence": concurrence_bd(bd),
            "average_concurrence": (1.0 - d.lam) * pure_concurrence(d.psi),
        }
        res = {"reconstruction": reconstruction_error(d, s.rho)}
        if args.verify:
            cert = verify_optimality(d, tol, strict=False)
            out["certificate"] = ser.certificate_to_json(cert)
            w, wc = wronskian_checks(d, tol), wronskian_closed_form(d.p_prime, d.dominant)
            out["wronskians"] = {",".join(map(str, k)): v for k, v in w.items()}
            res["wronskian"] = max(abs(w[k] - wc[k]) for k in w)
            res["certificate"] = cert.max_residual
            if not cert.passed:
                where, val = cert.worst()
                print(f"{path}: certificate failed at {where} (residual {val:.3e})", file=sys.stderr)
                code = max(code, EXIT_CERT)
        if args.oracle is not None:
            r = bsa_search(s.rho, budget=args.oracle, seed=args.seed, tol=tol)
            out["oracle"] = ser.oracle_to_json(r)
            res["oracle_gap"] = abs(d.lam - r.best_lambda)
        residuals[path] = res
        results.append(out)
    return results, residuals, code


def cmd_lqcc(args, tol, inputs):
    s = Loaded(args.state, tol)
    inputs[args.state] = s.digest
    lmap, digest = _load_map(args.map)
    inputs[args.map] = digest
    out = {**s.header(), "map": args.map}
    residuals = {}
    code = EXIT_OK
    try:
        rho2, prob = apply_lqcc(lmap, s.rho, tol)
    except Annihilated as exc:
        raise Exit(EXIT_MAP, f"{args.map}: {exc}") from None
    out["state"] = ser.density_to_json(rho2)
    out["success_probability"] = prob
    if args.check_law:
        predicted, actual = concurrence_transform_check(lmap, s.rho, tol)
        out["concurrence_law"] = {"predicted": predicted, "actual": actual}
        residuals["concurrence_law"] = abs(predicted - actual)
    if args.transport:
        bd = s.require_bd()
        try:
            d = ls_decompose_bd(bd, tol)
        except NotEntangled:
            print(f"{args.state}: separable input, max p = {max(bd.p)!r} <= 1/2", file=sys.stderr)
            out["witness"] = _witness(bd)
            return out, residuals, EXIT_SEPARABLE
        except PureInput as exc:
            raise Exit(EXIT_INVALID, f"{args.state}: {exc}") from None
        try:
            moved = transport_decomposition(lmap, d, tol)
            cert = verify_transported_optimality(lmap, d, tol, strict=False)
        except NotInvertible as exc:
            raise Exit(EXIT_MAP, f"{args.map}: {exc}") from None
        out["decomposition"] = ser.decomposition_to_json(moved)
        out["certificate"] = ser.certificate_to_json(cert)
        residuals["transport_reconstruction"] = float(np.max(np.abs(moved.reconstruct() - rho2.m)))
        residuals["certificate"] = cert.max_residual
        if cert.passed is False:
            where, val = cert.worst()
            print(f"{args.state}: transported certificate failed at {where} (residual {val:.3e})", file=sys.stderr)
            code = EXIT_CERT
    return out, residuals, code


def cmd_oracle(args, tol, inputs):
    results, residuals, code = [], {}, EXIT_OK
    for path in args.files:
        s = Loaded(path, tol)
        inputs[path] = s.digest
        try:
            r = bsa_search(s.rho, budget=args.budget, seed=args.seed, restarts=args.restarts, tol=tol)
        except NotEntangled:
            print(f"{path}: separable input (positive partial transpose)", file=sys.stderr)
            results.append({**s.header(), "separable": True})
            code = max(code, EXIT_SEPARABLE)
            continue
        out = {**s.header(), "separable": False, **ser.oracle_to_json(r)}
        if s.exact_bd:
            ref = 2.0 * (1.0 - max(s.bd.p))
            out["constructive_lambda"] = ref
            residuals[path] = {"gap": abs(ref - r.best_lambda)}
        results.append(out)
    return results, residuals, code


def cmd_random(args, tol, inputs):
    if args.count < 0:
        raise Exit(EXIT_PARSE, "--count must be non-negative")
    rng = np.random.default_rng(args.seed)
    out_dir = Path(args.out)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for i in range(args.count):
            bd = random_bd(rng, args.region, args.rank)
            name = out_dir / f"{args.prefix}{i:04d}.json"
            label = f"seed={args.seed} region={args.region} index={i}"
            name.write_text(ser.dumps(ser.bd_to_json(bd, label)) + "\n", encoding="utf-8")
            written.append({"file": str(name), "p": list(bd.p)})
    except OSError as exc:
        raise Exit(EXIT_PARSE, f"{args.out}: {exc.strerror or exc}") from None
    return written, {}, EXIT_OK


COMMANDS = {
    "concurrence": cmd_concurrence,
    "separable": cmd_separable,
    "lsd": cmd_lsd,
    "lqcc": cmd_lqcc,
    "random": cmd_random,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bsakit", description="Two-qubit concurrence, separability and optimal L-S decompositions.")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    p.add_argument("--compact", action="store_true", help="print the report on one line")
    # the same flags are accepted after the command name too
    shared = _Parser(add_help=False)
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    shared.add_argument("--compact", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("concurrence", parents=[shared], help="concurrence and entanglement of formation")
    c.add_argument("files", nargs="+")

    c = sub.add_parser("separable", parents=[shared], help="partial-transpose separability test")
    c.add_argument("files", nargs="+")

    c = sub.add_parser("lsd", parents=[shared], help="optimal decomposition of Bell-diagonal states")
    c.add_argument("files", nargs="+")
    c.add_argument("--verify", action="store_true", help="attach the optimality certificate")
    c.add_argument("--oracle", type=int, metavar="BUDGET", help="cross-check with the brute-force search")

    c = sub.add_parser("lqcc", parents=[shared], help="apply a local filtering map")
    c.add_argument("state")
    c.add_argument("map")
    c.add_argument("--transport", action="store_true", help="transport the decomposition and certify it")
    c.add_argument("--check-law", action="store_true", help="compare predicted and actual concurrence")

    c = sub.add_parser("random", parents=[shared], help="write seeded Bell-diagonal state files")
    c.add_argument("--count", type=int, default=1)
    c.add_argument("--region", choices=["any", "entangled"], default="any")
    c.add_argument("--rank", type=int, choices=[1, 2, 3, 4])
    c.add_argument("--out", default=".")
    c.add_argument("--prefix", default="state_")

    c = sub.add_parser("oracle", parents=[shared], help="brute-force best separable approximation")
    c.add_argument("files", nargs="+")
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    c.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    return p


def run(argv=None, environ=None) -> tuple[int, dict | None]:
    """Execute a command; returns the exit code and the report (if any)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    environ = os.environ if environ is None else environ
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        try:
            tol = from_env(environ)
        except ValueError as exc:
            raise Exit(EXIT_PARSE, f"{SCALE_ENV}: {exc}") from None
        if getattr(args, "budget", None) is not None and args.budget < 1000:
            raise Exit(EXIT_PARSE, "--budget must be at least 1000")
        if getattr(args, "oracle", None) is not None and args.oracle < 1000:
            raise Exit(EXIT_PARSE, "--oracle budget must be at least 1000")
        inputs: dict[str, str] = {}
        outputs, residuals, code = COMMANDS[args.command](args, tol, inputs)
    except Exit as exc:
        print(str(exc), file=sys.stderr)
        return exc.code, None
    except BsakitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID, None
    report = {
        "v": ser.SCHEMA_VERSION,
        "command": args.command,
        "argv": argv,
        "inputs": inputs,
        "outputs": outputs,
        "residuals": residuals,
        "tolerances": tol.as_dict(),
        "seed": args.seed,
        "wall_time": time.perf_counter() - start,
    }
    report = ser.clean(report)
    print(ser.dumps(report, indent=None if args.compact else 2))
    return code, report


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
