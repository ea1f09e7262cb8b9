"""Command-line front end.

Exit codes: 0 success, 1 a property or golden value failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .dsl import ParseError
from .expr import NonPolynomialError
from .homotopy import BidegreeError, HelmholtzError, VerificationError, inverse_variational
from .multisymplectic import (
    NotStandardClassError,
    NotVerticallyClosedError,
    el_system,
    ms_report,
    multimomentum,
    structure,
    verify_theorem,
)
from .operators import VectorField
from .problem import Problem, ProblemError, form_from_terms, load_problem
from .signature import SignatureError
from .variational import NotSymmetryError, euler_lagrange, lagrangian, noether, source_components, source_form

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT = 0, 1, 2

INPUT_ERRORS = (ParseError, ProblemError, SignatureError, NotStandardClassError, BidegreeError,
                NonPolynomialError, FileNotFoundError)


class PropertyFailure(Exception):
    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload or {}


def _hash(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str).encode()).hexdigest()


def _envelope(command: str, doc, seeds: dict, result: dict, ok: bool, expected: dict | None = None) -> dict:
    out = {
        "tool": "bicomplex",
        "version": __version__,
        "command": command,
        "config_hash": _hash(doc),
        "seeds": seeds,
        "ok": ok,
        "result": result,
    }
    if expected:
        out["expected"] = expected
    return out


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    sys.stdout.write(text)


def _compare(prob: Problem, keys: list, values: dict) -> dict:
    """Golden comparisons for the expected keys present in the problem."""
    out = {}
    sig = prob.sig
    from .dsl import parse

    for key in keys:
        if key not in prob.expected or key not in values:
            continue
        want = prob.expected[key]
        got = values[key]
        if key in ("el", "lambda_components"):
            out[key] = got == [parse(str(e), sig) for e in want]
        elif key == "kappa":
            out[key] = len(got) == len(want) and all(k == form_from_terms(sig, t) for k, t in zip(got, want))
        else:
            out[key] = got == form_from_terms(sig, want)
    return out


# ---- commands ------------------------------------------------------------------
def cmd_el(prob: Problem) -> tuple:
    sig = prob.sig
    el = source_components(euler_lagrange(lagrangian(sig, prob.density)))
    result = {
        "signature": sig.to_json(),
        "lagrangian": prob.density.to_str(sig.names),
        "euler_lagrange": [e.to_str(sig.names) for e in el],
    }
    if prob.degenerate is not None:
        result["matches_degenerate_form"] = el_system(prob.degenerate, cross_check=False) == el
    return result, _compare(prob, ["el"], {"el": el})


def cmd_noether(prob: Problem) -> tuple:
    if prob.characteristic is None:
        raise ProblemError("noether needs problem.characteristic")
    sig = prob.sig
    law = noether(lagrangian(sig, prob.density), VectorField(sig, prob.characteristic))
    return law.to_json(), _compare(prob, ["el"], {"el": law.euler_lagrange})


def cmd_inverse(prob: Problem) -> tuple:
    sig = prob.sig
    if prob.source is not None:
        omega = source_form(sig, prob.source)
    else:
        omega = euler_lagrange(lagrangian(sig, prob.density))
    lag = inverse_variational(omega)
    dens = lag.coefficient(tuple(range(sig.p))) if not lag.is_zero() else None
    result = {
        "signature": sig.to_json(),
        "source": [e.to_str(sig.names) for e in source_components(omega)],
        "lagrangian": dens.to_str(sig.names) if dens is not None else "0",
        "round_trip_verified": True,
    }
    return result, {}


def cmd_ms(prob: Problem) -> tuple:
    if prob.degenerate is None:
        raise ProblemError("ms needs a degenerate Lagrangian (problem.L and problem.H)")
    lag = prob.degenerate
    rep = ms_report(lag, prob.characteristic)
    st = structure(lag)
    values = {"el": el_system(lag), "omega": st.omega, "eta": st.eta, "kappa": st.kappa}
    if prob.characteristic is not None:
        values["lambda_components"] = multimomentum(lag, prob.characteristic).components
    return rep, _compare(prob, ["el", "omega", "eta", "kappa", "lambda_components"], values)


def cmd_momentum(prob: Problem) -> tuple:
    if prob.degenerate is None or prob.characteristic is None:
        raise ProblemError("momentum needs a degenerate Lagrangian and a characteristic")
    cand = multimomentum(prob.degenerate, prob.characteristic)
    rep = cand.to_json()
    rep["theorem_verified"] = verify_theorem(cand, prob.degenerate)
    return rep, _compare(prob, ["lambda_components"], {"lambda_components": cand.components})


SYMBOLIC = {"el": cmd_el, "noether": cmd_noether, "inverse": cmd_inverse, "ms": cmd_ms, "momentum": cmd_momentum}


def run_symbolic(command: str, spec: str, out: str | None) -> int:
    prob = load_problem(spec)
    try:
        result, expected = SYMBOLIC[command](prob)
    except (HelmholtzError, NotVerticallyClosedError, NotSymmetryError) as exc:
        witness = getattr(exc, "witness", None)
        raise PropertyFailure(str(exc), {"witness": witness.to_str() if witness is not None else None}) from None
    except VerificationError as exc:
        raise PropertyFailure(str(exc), {"residual": exc.residual.to_str()}) from None
    ok = all(expected.values())
    _emit(_envelope(command, prob.raw, {}, result, ok, expected), out)
    return EXIT_OK if ok else EXIT_PROPERTY


def run_check(seed: int, sizes: int, out: str | None, inject_bug: bool) -> int:
    from .checks import Ops, report_text, run_battery, sign_bug_d_v

    if sizes < 1:
        raise ProblemError("--sizes must be >= 1")
    ops = Ops(d_v=sign_bug_d_v) if inject_bug else None
    report = run_battery(seed=seed, sizes=sizes, ops=ops)
    if inject_bug:
        report["injected_fault"] = "d_v sign bug"
    text = report_text(report)
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if report["all_passed"] else EXIT_PROPERTY


def run_integrate(config: str, seed: int | None, csv_out: str | None, json_out: str | None) -> int:
    from .integrators.engine import ConfigError, SchemeError
    from .integrators.run import load_config, run_config, write_outputs

    path = Path(config)
    try:
        cfg = load_config(path)
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc.strerror}") from None
    if seed is not None:
        cfg["seed"] = seed
    output = cfg.get("output", {})
    base = path.parent
    csv_path = csv_out or (str(base / output["csv"]) if "csv" in output else None)
    man_path = json_out or (str(base / output["manifest"]) if "manifest" in output else None)
    try:
        result = run_config(cfg)
    except ConfigError:
        raise
    except SchemeError as exc:
        raise PropertyFailure(f"scheme error: {exc}", {"step": getattr(exc, "step", None)}) from None
    write_outputs(result, csv_path, man_path)
    sys.stdout.write(result.manifest_text())
    return EXIT_OK if result.passed else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bicomplex", description="Difference variational bicomplex toolkit")
    ap.add_argument("--version", action="version", version=f"bicomplex {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    chk = sub.add_parser("check", help="run the identity battery on seeded random forms")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--sizes", type=int, default=20, help="random forms per bidegree")
    chk.add_argument("--json", dest="json_out")
    chk.add_argument("--inject-dv-sign-bug", action="store_true", help=argparse.SUPPRESS)
    for name, text in [("el", "Euler-Lagrange expressions"), ("noether", "conservation law of a symmetry"),
                       ("inverse", "Lagrangian for a variational source form"),
                       ("ms", "multisymplectic structure of a degenerate Lagrangian"),
                       ("momentum", "multimomentum map for a characteristic")]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--spec", required=True, help="problem TOML/JSON (bundled fixture names also work)")
        p.add_argument("--json", dest="json_out")
    it = sub.add_parser("integrate", help="run a numerical scheme from a config")
    it.add_argument("--config", required=True)
    it.add_argument("--seed", type=int)
    it.add_argument("--csv", dest="csv_out")
    it.add_argument("--json", dest="json_out", help="manifest path")
    return ap


def main(argv=None) -> int:
    from .integrators.engine import ConfigError

    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return run_check(args.seed, args.sizes, args.json_out, args.inject_dv_sign_bug)
        if args.command == "integrate":
            return run_integrate(args.config, args.seed, args.csv_out, args.json_out)
        return run_symbolic(args.command, args.spec, args.json_out)
    except PropertyFailure as exc:
        _error(args.command, str(exc), EXIT_PROPERTY, exc.payload)
        return EXIT_PROPERTY
    except INPUT_ERRORS + (ConfigError,) as exc:
        detail = {}
        if isinstance(exc, ParseError):
            detail = {"line": exc.line, "column": exc.column}
        _error(args.command, f"{type(exc).__name__}: {exc}", EXIT_INPUT, detail)
        return EXIT_INPUT


def _error(command: str, message: str, code: int, detail: dict) -> None:
    payload = {"tool": "bicomplex", "version": __version__, "command": command, "ok": False,
               "error": message, "exit_code": code}
    payload.update(detail)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
