"""Command-line front end.

Every invocation writes one JSON document to standard output::

    {"command": [...argv...], "input": {"source": ..., "sha256": ...},
     "result": {...}, "ok": true}

Exit codes: 0 when the analysis ran (``unknown`` verdicts included), 1 for a
failed oracle check, an error verdict or a kernel failure, 2 for usage and
parse errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import io
from .boundedness import poly_bound_family, power_bound_family
from .envelope import EnvelopeSyntaxError
from .family import ConstructionError
from .fixtures import FIXTURES, FixtureSpec, ResourceError, make_fixture, oracle_check
from .kernel import Diverged, KernelError
from .schatten import compactness_verdict, schatten_decision
from .spectrum import PointSpectrumError, classify_point, minimal_support, point_spectrum, resolvent_sup

DEFAULT_TRUNCATE = 50

FIXTURE_HELP = {
    "scalar_ones": "blocks [1]; bounded, not compact",
    "nilpotent2": "blocks [[0,0],[alpha_n,0]]; alpha list or expression in n (default n)",
    "volterra": "midpoint discretization of alpha*int_{-x}^{x} f on L2(-1,1); nq even (default 64)",
    "diag_accumulating": "blocks [1 - 1/n]; 1 lies in the continuous spectrum",
    "harmonic_diag": "blocks [1/n]; compact, in C_p exactly for p > 1",
}


class UsageError(Exception):
    pass


def parse_complex(text):
    """``"re,im"`` or ``"re"`` as a complex number."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")


def parse_indices(text):
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated indices, got {text!r}") from None
    if any(i < 1 for i in out):
        raise argparse.ArgumentTypeError("indices are 1-based")
    return out


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def parse_param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def parse_alpha(text):
    """A comma list of numbers, or an expression in ``n``."""
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        return text


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--family", metavar="FILE", help="family description (JSON); '-' reads stdin")
    src.add_argument("--fixture", choices=FIXTURES, help="built-in example family")
    common.add_argument("--param", type=parse_param, action="append", default=[], metavar="KEY=VALUE",
                        help="fixture parameter (repeatable)")
    common.add_argument("--alpha", type=parse_alpha, help="fixture alpha: list a,b,c or expression in n")
    common.add_argument("--nq", type=positive_int, help="volterra grid size (even)")
    common.add_argument("--truncate", type=positive_int, metavar="N",
                        help=f"number of blocks inspected (default: all explicit blocks, {DEFAULT_TRUNCATE} otherwise)")
    common.add_argument("--pretty", action="store_true", help="human-readable output")
    common.add_argument("--timing", action="store_true", help="include wall time (output no longer reproducible)")

    parser = argparse.ArgumentParser(prog="blockspec", description="Spectral analysis of block-diagonal operators.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text)

    add("spectrum", "union of block eigenvalues with provenance")
    p = add("classify", "classify tau as point, continuous or resolvent")
    p.add_argument("--tau", type=parse_complex, required=True, metavar="RE,IM")
    p = add("resolvent-sup", "supremum over blocks of the resolvent norm at tau")
    p.add_argument("--tau", type=parse_complex, required=True, metavar="RE,IM")
    add("minimal-support", "inclusion-minimal set of blocks carrying the point spectrum")
    add("compact", "compactness verdict")
    p = add("schatten", "Schatten class membership")
    p.add_argument("--p", type=float, required=True, metavar="REAL")
    p.add_argument("--exclude", type=parse_indices, default=[], metavar="I,J,...")
    p = add("powerbound", "power bound sup_m ||A^m||")
    p.add_argument("--powers", type=positive_int, default=100, metavar="M", help="powers examined (default 100)")
    p = add("polybound", "polynomial bound over the unit disk")
    p.add_argument("--samples", type=positive_int, default=32, help="random witness polynomials per block")
    p.add_argument("--seed", type=int, default=0)
    p = add("check", "cross-check against the assembled dense matrix")
    p.add_argument("--powers", type=positive_int, default=10, metavar="M")
    p.add_argument("--tol", type=float, default=1e-6, metavar="REAL", help="relative tolerance (default 1e-6)")
    sub.add_parser("fixtures", help="list built-in fixtures")
    return parser


def _digest(obj):
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_input(args):
    """Resolve ``--family`` or ``--fixture`` to ``(family, input record)``."""
    if args.family is not None:
        family, digest = io.load_family(args.family)
        return family, {"source": args.family, "sha256": digest}
    if args.fixture is None:
        raise UsageError("one of --family or --fixture is required")
    params = dict(args.param)
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.nq is not None:
        params["nq"] = args.nq
    try:
        spec = FixtureSpec(args.fixture, **params)
    except TypeError as exc:
        raise UsageError(f"bad fixture parameter: {exc}") from None
    family = make_fixture(spec)
    described = spec.to_json()
    return family, {"source": "fixture", "fixture": described, "sha256": _digest(described)}


def _truncation(args, family):
    if args.truncate is not None:
        return args.truncate
    return family.size if family.explicit else DEFAULT_TRUNCATE


def analyse(args, family):
    """Run the requested analysis.  Returns ``(result, ok)``."""
    N = _truncation(args, family)
    cmd = args.command
    if cmd == "spectrum":
        return point_spectrum(family, N), True
    if cmd == "classify":
        return classify_point(family, args.tau, N), True
    if cmd == "resolvent-sup":
        try:
            return resolvent_sup(family, args.tau, N), True
        except PointSpectrumError as exc:
            return {"status": "error", "tau": args.tau, "index": exc.index, "eigenvalue": exc.eigenvalue,
                    "detail": str(exc)}, False
    if cmd == "minimal-support":
        report = point_spectrum(family, N)
        return {"indices": minimal_support(family, N), "truncation_level": report.truncation_level,
                "spectrum": report.eigenvalues}, True
    if cmd == "compact":
        return compactness_verdict(family, N), True
    if cmd == "schatten":
        if not args.p >= 1 or not math.isfinite(args.p):
            raise UsageError(f"--p must be a finite number >= 1, got {args.p}")
        return schatten_decision(family, args.p, N, args.exclude), True
    if cmd == "powerbound":
        return power_bound_family(family, N, args.powers), True
    if cmd == "polybound":
        return poly_bound_family(family, N, args.samples, args.seed), True
    if cmd == "check":
        report = oracle_check(family, N, args.powers, rtol=args.tol)
        return {"passed": report.passed, "assembled_dim": report.assembled_dim, "checks": report.checks}, report.passed
    raise UsageError(f"unknown command {cmd!r}")


def _pretty(value, indent=0):
    pad = "  " * indent
    if isinstance(value, dict):
        lines = []
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
        return "\n".join(lines)
    if isinstance(value, list):
        if all(not isinstance(v, (dict, list)) or _is_pair(v) for v in value):
            return pad + ", ".join(_scalar(v) for v in value)
        return "\n".join(f"{pad}- " + _pretty(v, indent + 1).lstrip() for v in value)
    return pad + _scalar(value)


def _is_pair(v):
    return isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)


def _scalar(v):
    if _is_pair(v):
        re, im = v
        return f"{re:.10g}{'+' if im >= 0 else '-'}{abs(im):.10g}i"
    if isinstance(v, float):
        return f"{v:.10g}"
    if v == []:
        return "[]"
    return str(v)


def emit(document, pretty, stream=None):
    stream = stream or sys.stdout
    data = io.to_jsonable(document)
    if pretty:
        stream.write(_pretty(data) + "\n")
    else:
        stream.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def run(argv=None):
    """Entry point; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has printed usage already
        return 0 if exc.code == 0 else 2

    if args.command == "fixtures":
        doc = {"command": argv, "fixtures": [{"name": n, "about": FIXTURE_HELP[n]} for n in FIXTURES]}
        emit(doc, False)
        return 0

    start = time.perf_counter()
    try:
        family, source = load_input(args)
        result, ok = analyse(args, family)
    except (UsageError, io.FamilyFileError, ConstructionError, EnvelopeSyntaxError) as exc:
        print(f"blockspec {args.command}: {exc}", file=sys.stderr)
        if isinstance(exc, UsageError):
            parser.print_usage(sys.stderr)
        return 2
    except OSError as exc:
        print(f"blockspec {args.command}: {exc}", file=sys.stderr)
        return 2
    except (KernelError, Diverged, ResourceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"blockspec {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        emit({"command": argv, "ok": False, "error": {"type": type(exc).__name__, "message": str(exc)}},
             args.pretty)
        return 1

    doc = {"command": argv, "input": source, "result": result, "ok": ok}
    if args.timing:
        doc["wall_time"] = time.perf_counter() - start
    emit(doc, args.pretty)
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
