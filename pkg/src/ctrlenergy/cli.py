"""Command-line front end.

Every command prints one JSON report on stdout and a short summary on
stderr.  Exit codes: 0 ran to completion (whatever the verdict), 2 usage or
input error, 3 numerical or randomness failure.
"""

import argparse
import hashlib
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import counterexample as cx
from .errors import InputError, NumericalError
from .gramian import INFINITE, LinearSystem, gramian, restrict_columns
from .setfunc import (
    avg_energy,
    best_subset,
    check_monotone,
    check_submodular,
    check_supermodular,
    energy_function,
    greedy_select,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(InputError):
    pass


def fmt(x):
    """JSON-safe scalar: rationals as ``"p/q"``, floats with 17 digits."""
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isinf(x):
        return "infinite" if x > 0 else "-infinite"
    return format(x, ".17g")


def fmt_matrix(M):
    return [[fmt(v) for v in row] for row in np.atleast_2d(M)]


def fmt_set(S):
    return list(S)


def certificate_json(c):
    if hasattr(c, "S1"):
        return {
            "S1": fmt_set(c.S1), "S2": fmt_set(c.S2), "a": c.a,
            "f_S1": fmt(c.f_S1), "f_S1a": fmt(c.f_S1a),
            "f_S2": fmt(c.f_S2), "f_S2a": fmt(c.f_S2a),
            "margin": fmt(c.margin),
        }
    return {"S": fmt_set(c.S), "a": c.a, "f_S": fmt(c.f_S),
            "f_Sa": fmt(c.f_Sa), "margin": fmt(c.margin)}


def set_key(S):
    return "{" + ",".join(map(str, S)) + "}"


def parse_set(text):
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(sorted({int(t) for t in text.split(",")}))
    except ValueError as exc:
        raise UsageError(f"bad set {text!r}: expected comma-separated integers") from exc


def parse_horizon(value):
    if isinstance(value, str):
        if value.strip().lower() in ("infinite", "inf"):
            return INFINITE
        try:
            value = float(value)
        except ValueError as exc:
            raise UsageError(f"bad horizon {value!r}") from exc
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"bad horizon {value!r}")
    if not value > 0:
        raise UsageError(f"horizon must be positive, got {value!r}")
    return float(value)


def _matrix(value, name):
    if (not isinstance(value, list) or not value
            or not all(isinstance(r, list) and r for r in value)):
        raise UsageError(f"{name} must be a non-empty array of arrays")
    if len({len(r) for r in value}) != 1:
        raise UsageError(f"{name} has ragged rows")
    for r in value:
        for v in r:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise UsageError(f"{name} entries must be numbers")
    return np.array(value, dtype=float)


def load_system(path):
    """Read a system document ``{"A": ..., "B": ..., "horizon": ...}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read system document {path}: {exc}") from exc
    if not isinstance(doc, dict) or "A" not in doc:
        raise UsageError("system document must be an object with key 'A'")
    A = _matrix(doc["A"], "A")
    if A.shape[0] != A.shape[1]:
        raise UsageError(f"A must be square, got shape {A.shape}")
    B = _matrix(doc["B"], "B") if "B" in doc else np.eye(A.shape[0])
    if B.shape[0] != A.shape[0]:
        raise UsageError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    horizon = parse_horizon(doc.get("horizon", "infinite"))
    return LinearSystem(A, B), horizon, doc


def _digest(obj):
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def make_report(command, inputs, results, certificates=(), diagnostics=None,
                status="ok"):
    return {
        "command": command,
        "inputs": inputs,
        "inputs_digest": _digest(inputs),
        "results": results,
        "certificates": list(certificates),
        "diagnostics": diagnostics or {},
        "status": status,
    }


def _system_inputs(args, doc):
    return {"document": doc, "args": {k: v for k, v in vars(args).items()
                                      if k not in ("func",) and v is not None}}


def _resolve_horizon(args, doc_horizon):
    return parse_horizon(args.horizon) if args.horizon is not None else doc_horizon


def cmd_verify_theorem1(args):
    inputs = {"mode": args.mode, "eps": args.eps, "factor": args.factor}
    if args.mode == "exact":
        r = cx.verify_theorem1_exact()
        results = {"lhs": fmt(r.lhs), "rhs": fmt(r.rhs), "violated": r.violated}
        summary = f"lhs = {r.lhs}, rhs = {r.rhs}, violated = {r.violated}"
        return make_report("verify theorem1", inputs, results), summary
    if not 0 <= args.eps < 0.25:
        raise UsageError(f"--eps must lie in [0, 1/4), got {args.eps}")
    r = cx.verify_theorem1_float(args.eps, args.factor)
    eps_cert = cx.certify_epsilon(args.eps, args.factor)
    results = {
        "lhs_gap": fmt(r.lhs_gap), "rhs_gap": fmt(r.rhs_gap),
        "violated": r.violated,
        "singleton_controllable": r.singleton_controllable,
        "energies": {set_key(S): fmt(v) for S, v in r.energies.items()},
    }
    diagnostics = {"epsilon_certificate": eps_cert._asdict(),
                   "B": fmt_matrix(cx.theorem1_B(args.factor))}
    certs = [certificate_json(r.certificate)] if r.certificate else []
    summary = (f"eps = {args.eps}: lhs_gap = {r.lhs_gap:.6g}, "
               f"rhs_gap = {r.rhs_gap:.6g}, violated = {r.violated}")
    return make_report("verify theorem1", inputs, results, certs, diagnostics), summary


def cmd_verify_theorem2(args):
    if not args.K > 8:
        raise UsageError(f"--K must exceed 8, got {args.K}")
    if args.trials < 1:
        raise UsageError(f"--trials must be at least 1, got {args.trials}")
    horizon = parse_horizon(args.horizon) if args.horizon is not None else INFINITE
    if args.eps_reg is not None and not args.eps_reg > 0:
        raise UsageError("--eps-reg must be positive")
    inputs = {"K": args.K, "seed": args.seed, "trials": args.trials,
              "horizon": fmt(horizon), "eps_reg": args.eps_reg}
    runs = cx.theorem2_monte_carlo(args.K, args.seed, args.trials,
                                   horizon=horizon, regularization=args.eps_reg)
    trials = [{
        "seed": r.seed, "lhs_gap": fmt(r.lhs), "rhs_gap": fmt(r.rhs),
        "ratio": fmt(r.ratio), "violated": r.violated,
        "kratio_constant": fmt(r.kratio), "kratio_spread": fmt(r.kratio_spread),
        "retries": r.retries,
    } for r in runs]
    frac = sum(r.violated for r in runs) / len(runs)
    results = {
        "trials": trials,
        "violation_fraction": fmt(frac),
        "median_ratio": fmt(float(np.median([r.ratio for r in runs]))),
    }
    diagnostics = {"A_sym_first_trial": fmt_matrix(runs[0].A_sym)}
    summary = f"K = {args.K:g}: violated in {sum(r.violated for r in runs)}/{len(runs)} trials"
    return make_report("verify theorem2", inputs, results, diagnostics=diagnostics), summary


def cmd_check(args):
    sys_, horizon, doc = load_system(args.input)
    horizon = _resolve_horizon(args, horizon)
    f = energy_function(sys_, horizon, args.normalized)
    checker = {"monotone": check_monotone, "supermodular": check_supermodular,
               "submodular": check_submodular}[args.property]
    certs = checker(f, sys_.m)
    results = {"property": args.property, "holds": len(certs) == 0,
               "violations": len(certs), "checked": certs.checked,
               "skipped_infinite": certs.skipped,
               "normalized": args.normalized}
    summary = f"{args.property}: {len(certs)} violation(s), {certs.skipped} skipped"
    return make_report("check", _system_inputs(args, doc), results,
                       [certificate_json(c) for c in certs]), summary


def cmd_gramian(args):
    sys_, horizon, doc = load_system(args.input)
    horizon = _resolve_horizon(args, horizon)
    S = parse_set(args.set) if args.set is not None else tuple(range(1, sys_.m + 1))
    if not S:
        W = np.zeros((sys_.n, sys_.n))
    else:
        W = gramian(LinearSystem(sys_.A, restrict_columns(sys_.B, S)), horizon)
    results = {"set": fmt_set(S), "horizon": fmt(horizon), "W": fmt_matrix(W)}
    return make_report("gramian", _system_inputs(args, doc), results), f"W({set_key(S)}) computed"


def cmd_energy(args):
    sys_, horizon, doc = load_system(args.input)
    horizon = _resolve_horizon(args, horizon)
    S = parse_set(args.set) if args.set is not None else tuple(range(1, sys_.m + 1))
    e = avg_energy(sys_, S, horizon, args.normalized)
    results = {"set": fmt_set(S), "horizon": fmt(horizon),
               "normalized": args.normalized, "energy": fmt(e)}
    return make_report("energy", _system_inputs(args, doc), results), f"energy = {fmt(e)}"


def _load_matrix_file(path, name):
    try:
        with open(path, encoding="utf-8") as fh:
            return _matrix(json.load(fh), name)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {name} from {path}: {exc}") from exc


def cmd_construct(args):
    U = _load_matrix_file(args.U, "U") if args.U else cx.DEFAULT_U
    V = _load_matrix_file(args.V, "V") if args.V else cx.DEFAULT_V
    r = cx.run_construction(U, V)
    results = {
        "z": [fmt(v) for v in r.z],
        "W1": fmt_matrix(r.W1), "W2": fmt_matrix(r.W2), "W3": fmt_matrix(r.W3),
        "g0": fmt(r.g0), "g_prime0": fmt(r.g_prime0),
        "g_prime0_finite_difference": fmt(r.g_prime0_fd),
        "gamma_hat": fmt(r.gamma_hat), "g_gamma_hat": fmt(r.g_gamma_hat),
        "A": fmt_matrix(r.system.A), "B": fmt_matrix(r.B_out),
        "delta_gap": fmt(r.gap), "violated": bool(r.gap > 0),
    }
    inputs = {"U": U.tolist(), "V": V.tolist()}
    return make_report("construct", inputs, results), f"construction gap = {r.gap:.6g}"


def cmd_greedy(args):
    sys_, horizon, doc = load_system(args.input)
    horizon = _resolve_horizon(args, horizon)
    S = greedy_select(sys_, args.k, horizon, args.normalized)
    e = avg_energy(sys_, S, horizon, args.normalized)
    results = {"set": fmt_set(S), "energy": fmt(e)}
    if math.comb(sys_.m, args.k) <= 5000:
        best, best_e = best_subset(sys_, args.k, horizon, args.normalized)
        results["exhaustive_best"] = {"set": fmt_set(best), "energy": fmt(best_e)}
        results["greedy_optimal"] = bool(e <= best_e)
    return make_report("greedy", _system_inputs(args, doc), results), f"greedy set {set_key(S)}"


def build_parser():
    p = argparse.ArgumentParser(
        prog="ctrlenergy",
        description="Average control energy, Gramians and supermodularity checks.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="reproduce the counterexamples")
    vsub = verify.add_subparsers(dest="which", required=True)
    t1 = vsub.add_parser("theorem1", help="2x2 system with five actuators")
    t1.add_argument("--mode", choices=("exact", "float"), default="exact")
    t1.add_argument("--eps", type=float, default=cx.DEFAULT_EPS)
    t1.add_argument("--factor", choices=("triangular", "eigen"), default="triangular")
    t1.set_defaults(func=cmd_verify_theorem1)
    t2 = vsub.add_parser("theorem2", help="6x6 symmetric A with B = I")
    t2.add_argument("--K", type=float, default=1e4)
    t2.add_argument("--seed", type=int, default=0)
    t2.add_argument("--trials", type=int, default=1)
    t2.add_argument("--horizon", default=None)
    t2.add_argument("--eps-reg", dest="eps_reg", type=float, default=None)
    t2.set_defaults(func=cmd_verify_theorem2)

    def system_args(sp, with_set=False):
        sp.add_argument("--input", required=True, help="JSON system document")
        sp.add_argument("--horizon", default=None,
                        help='"infinite" or a positive number (overrides the document)')
        if with_set:
            sp.add_argument("--set", default=None, help="1-based comma list, e.g. 1,2")

    ck = sub.add_parser("check", help="test a set-function property of the energy")
    system_args(ck)
    ck.add_argument("--property", choices=("monotone", "supermodular", "submodular"),
                    default="supermodular")
    ck.add_argument("--normalized", action="store_true")
    ck.set_defaults(func=cmd_check)

    gr = sub.add_parser("gramian", help="controllability Gramian of a column set")
    system_args(gr, with_set=True)
    gr.set_defaults(func=cmd_gramian)

    en = sub.add_parser("energy", help="average control energy of a column set")
    system_args(en, with_set=True)
    en.add_argument("--normalized", action="store_true")
    en.set_defaults(func=cmd_energy)

    co = sub.add_parser("construct", help="build a counterexample from U <= V")
    co.add_argument("--U", default=None, help="JSON file with U (default: built-in)")
    co.add_argument("--V", default=None, help="JSON file with V (default: built-in)")
    co.set_defaults(func=cmd_construct)

    gd = sub.add_parser("greedy", help="greedy actuator selection")
    system_args(gd)
    gd.add_argument("--k", type=int, required=True)
    gd.add_argument("--normalized", action="store_true")
    gd.set_defaults(func=cmd_greedy)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command + (f" {args.which}" if args.command == "verify" else "")
    try:
        report, summary = args.func(args)
        code = EXIT_OK
    except InputError as exc:
        report, summary, code = _error_report(command, exc), f"error: {exc}", EXIT_USAGE
    except NumericalError as exc:
        report, summary, code = _error_report(command, exc), f"numerical failure: {exc}", EXIT_NUMERICAL
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    print(summary, file=sys.stderr)
    return code


def _error_report(command, exc):
    diagnostics = {"error": type(exc).__name__, "message": str(exc)}
    eig = getattr(exc, "eigenvalue", None)
    if eig is not None:
        diagnostics["eigenvalue"] = {"re": fmt(eig.real), "im": fmt(eig.imag)}
    return make_report(command, {}, {}, diagnostics=diagnostics, status="error")


if __name__ == "__main__":
    sys.exit(main())
