"""Command-line entry point: ``nsbox <subcommand> ...``.

Exit codes are stable:

==== =====================================================================
0    success (check: local box; simulate: statistical test passed)
1    parse error, unreadable file, unknown model or family
2    invalid input (bad table, out-of-range parameters)
3    simulate: statistical test failed
10   check: nonlocal no-signaling box
20   check: signaling box
==== =====================================================================
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import crypto, games, monogamy, polytope, quantum
from .correlation import fraction_str, is_no_signaling, load_box, to_fraction
from .errors import NsboxError, ParseError, RangeError, UnknownModel

SCHEMA = 1
EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_STAT_FAIL = 0, 1, 2, 3
EXIT_NONLOCAL, EXIT_SIGNALING = 10, 20


def _emit(doc: dict, out) -> None:
    out.write(json.dumps(doc, indent=2, default=_jsonable))
    out.write("\n")


def _jsonable(v):
    if isinstance(v, Fraction):
        return fraction_str(v)
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _fraction_arg(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# -- check -------------------------------------------------------------------------


def cmd_check(args, out) -> int:
    corr = load_box(args.box, args.tol)
    sig = is_no_signaling(corr, args.tol)
    report = {
        "schema": SCHEMA,
        "scenario": corr.scenario.to_dict(),
        "mode": corr.mode,
        "no_signaling": bool(sig),
        "signaling_deviation": _num(sig.deviation),
    }
    if not sig:
        report["verdict"] = "signaling"
        _emit(report, out)
        return EXIT_SIGNALING
    result = polytope.is_local(corr)
    if isinstance(result, polytope.Decomposition):
        report["verdict"] = "local"
        report["decomposition"] = result.to_json()
        code = EXIT_OK
    else:
        report["verdict"] = "nonlocal"
        report["certificate"] = result.to_json()
        code = EXIT_NONLOCAL
    if corr.scenario.is_binary:
        report["chsh"] = _num(polytope.evaluate(polytope.chsh(), corr))
    _emit(report, out)
    return code


def _num(v):
    return fraction_str(v) if isinstance(v, Fraction) else float(v)


# -- chsh --------------------------------------------------------------------------


def load_family(spec: str, state: quantum.SchmidtState) -> quantum.SettingFamily:
    """A family name, or a JSON file holding a serialized family."""
    if spec in quantum.FAMILY_NAMES:
        return quantum.named_family(spec, state)
    try:
        with open(spec) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParseError(
            f"{spec!r} is neither a family name ({', '.join(quantum.FAMILY_NAMES)}) nor a file"
        ) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {spec}: {exc}") from exc
    return quantum.SettingFamily.from_json(doc)


def _state(args) -> quantum.SchmidtState:
    if args.singlet:
        return quantum.SINGLET
    return quantum.SchmidtState(args.state)


def cmd_chsh(args, out) -> int:
    if args.box:
        corr = load_box(args.box, args.tol)
        value = polytope.evaluate(polytope.chsh(), corr)
    else:
        if args.state is None and not args.singlet:
            raise ParseError("give a box file, or --state THETA / --singlet with --settings")
        state = _state(args)
        value, _ = quantum.chsh_mark_for_settings(state, load_family(args.settings, state))
    out.write(f"{float(value):.12f}\n")
    return EXIT_OK


# -- simulate -----------------------------------------------------------------------


def _simulate_settings(args):
    spec = games.model_spec(args.model)
    text = args.settings
    if spec.kind == "bits":
        if text is None:
            return None
        with open(text) as fh:
            doc = json.load(fh)
        return [tuple(p) for p in doc["inputs"]]
    if text is None:
        return quantum.named_family("chsh-optimal")
    if text.startswith("random:"):
        try:
            count = int(text.split(":", 1)[1])
        except ValueError:
            raise ParseError(f"bad random setting spec {text!r}") from None
        return games.random_direction_pairs(count, args.seed)
    if text in quantum.FAMILY_NAMES:
        return quantum.named_family(text)
    try:
        with open(text) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"settings file {text!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {text}: {exc}") from exc
    if "pairs" in doc:
        return [(quantum.as_direction(a), quantum.as_direction(b)) for a, b in doc["pairs"]]
    return quantum.SettingFamily.from_json(doc)


def _flat_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in doc.items():
        w.writerow([k, json.dumps(v, default=_jsonable) if isinstance(v, (list, dict)) else v])
    return buf.getvalue()


def cmd_simulate(args, out) -> int:
    model = args.model
    games.model_spec(model)  # raises UnknownModel early
    if args.rounds < 1:
        raise RangeError("--rounds must be at least 1")
    if model == "coin-game":
        tr, report = games.coin_game(args.rounds, args.seed, args.sigma, args.workers, args.backend)
    elif model in ("exam1-own", "exam1-uniform"):
        tr, report = games.exam1_guess_game(
            args.rounds, args.seed, model.split("-")[1], args.sigma, args.workers, args.backend)
    else:
        oracle = games.singlet_oracle if model == "local-lhv" else None
        est = games.estimate(model, _simulate_settings(args), args.rounds, args.seed, oracle,
                             args.sigma, args.workers, args.backend)
        tr, report = est.transcript, est.report
    if args.transcript:
        with open(args.transcript, "w") as fh:
            tr.write_jsonl(fh)
    doc = report.to_json()
    doc.setdefault("totals", tr.totals())
    doc["transcript_sha256"] = tr.fingerprint()
    if args.format == "csv":
        out.write(report.to_csv() if hasattr(report, "to_csv") else _flat_csv(doc))
    else:
        _emit(doc, out)
    return EXIT_OK if report.passed else EXIT_STAT_FAIL


# -- keyrate -------------------------------------------------------------------------


def cmd_keyrate(args, out) -> int:
    points = crypto.grid(args.pmin, args.pmax, args.steps)
    curve = crypto.key_advantage_curve(points)
    out.write(crypto.curve_csv(curve))
    x = crypto.find_crossing(curve, args.tol)
    out.write("crossing=none-in-range\n" if x is None else f"crossing={float(x):.9f}\n")
    return EXIT_OK


# -- monogamy -------------------------------------------------------------------------


def cmd_monogamy(args, out) -> int:
    step, lo, hi = args.grid, args.mmin, args.mmax
    if not 0 < step <= 1:
        raise RangeError("--grid step must lie in (0, 1]")
    if not 0 <= lo <= hi <= 4:
        raise RangeError("need 0 <= mmin <= mmax <= 4")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["m_ab", "m_ac", "m_ab_float", "m_ac_float"])
    m = lo
    while m <= hi:
        best = monogamy.monogamy_max(m)
        w.writerow([fraction_str(m), fraction_str(best), repr(float(m)), repr(float(best))])
        m += step
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsbox", description="No-signaling box toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="validate a box and classify it as local, nonlocal or signaling")
    c.add_argument("box", help="box JSON file")
    c.add_argument("--tol", type=float, default=1e-9, help="float-mode tolerance")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("chsh", help="CHSH mark of a box file or of a quantum state and settings")
    c.add_argument("box", nargs="?", help="box JSON file")
    c.add_argument("--state", type=float, help="Schmidt angle theta in [0, pi/4]")
    c.add_argument("--singlet", action="store_true", help="use the singlet state")
    c.add_argument("--settings", default="chsh-optimal", help="family name or JSON file")
    c.add_argument("--tol", type=float, default=1e-9)
    c.set_defaults(func=cmd_chsh)

    c = sub.add_parser("simulate", help="run a seeded Monte Carlo game or simulation model")
    c.add_argument("--model", required=True, help=", ".join(games.MODELS))
    c.add_argument("--rounds", type=int, default=10**6, help="rounds per setting")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--sigma", type=float, default=4.0, help="z-score threshold")
    c.add_argument("--settings", help="family name, random:K, or JSON file")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--backend", choices=("python", "cython"), default=None)
    c.add_argument("--transcript", help="write the JSON-lines transcript here")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.set_defaults(func=cmd_simulate)

    c = sub.add_parser("keyrate", help="key advantage on the isotropic family")
    c.add_argument("--pmin", type=_fraction_arg, default=Fraction(0))
    c.add_argument("--pmax", type=_fraction_arg, default=Fraction(1))
    c.add_argument("--steps", type=int, default=101)
    c.add_argument("--tol", type=float, default=1e-6, help="bisection tolerance")
    c.set_defaults(func=cmd_keyrate)

    c = sub.add_parser("monogamy", help="max Alice-Charly CHSH mark given the Alice-Bob mark")
    c.add_argument("--grid", type=_fraction_arg, default=Fraction(1, 2), help="step in (0, 1]")
    c.add_argument("--mmin", type=_fraction_arg, default=Fraction(2))
    c.add_argument("--mmax", type=_fraction_arg, default=Fraction(4))
    c.set_defaults(func=cmd_monogamy)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, UnknownModel, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"nsbox: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NsboxError, ValueError) as exc:
        print(f"nsbox: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
