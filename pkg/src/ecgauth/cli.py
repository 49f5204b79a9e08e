"""Command-line entry point.

Exit codes: 0 success/accepted, 10 rejected, 2 usage, 3 IO/parse/data,
4 protocol or connection failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import authflow, evalharness
from .authflow import DEFAULT_BUDGET_MS, State
from .dsp import rr_segments
from .errors import (
    DuplicateSubject,
    EcgAuthError,
    InvalidBudget,
    InvalidThreshold,
    ProtoError,
)
from .features import extract
from .ingest import load_record, read_csv, write_csv
from .matching import DEFAULT_THRESHOLD
from .store import TemplateStore

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NET = 4
EXIT_REJECTED = 10


class CliError(Exception):
    def __init__(self, message, code=EXIT_IO):
        super().__init__(message)
        self.code = code


def _thresholds(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None


def _print_decision(decision: authflow.AuthDecision) -> None:
    for s in decision.scores:
        print(f"interval t_ms={s.t_signal_ms:g} cf={s.cf:.6f} {'pass' if s.passed else 'fail'}")
    print(f"decision={decision.state.name.lower()} reason={decision.reason} "
          f"elapsed_ms={decision.elapsed_signal_ms:g}")


def cmd_enroll(args) -> int:
    record = load_record(args.record, args.fs)
    store = TemplateStore.open(args.db)
    template = authflow.enroll(record, args.subject)
    store.put(template, force=args.force)
    print(f"enrolled {args.subject} from {record.record_id}")
    return EXIT_OK


def cmd_verify(args) -> int:
    store = TemplateStore.open(args.db)
    template = store.get(args.subject)
    if template is None:
        raise CliError("unknown subject")
    record = load_record(args.record, args.fs)
    decision = authflow.verify(record, template, args.threshold, args.budget_ms)
    _print_decision(decision)
    return EXIT_OK if decision.accepted else EXIT_REJECTED


def cmd_identify(args) -> int:
    store = TemplateStore.open(args.db)
    record = load_record(args.record, args.fs)
    found = authflow.identify(record, store.templates(), args.threshold, args.budget_ms)
    if found is None:
        print("NONE")
        return EXIT_REJECTED
    print(found[0])
    return EXIT_OK


def cmd_serve(args) -> int:
    from .proto.server import serve

    store = TemplateStore.open(args.db)
    serve(args.listen, store, args.threshold, args.budget_ms)
    return EXIT_OK


def cmd_node(args) -> int:
    from .proto import wire
    from .proto.node import node_run

    record = load_record(args.record, args.fs)
    out = node_run(record, args.server, args.subject, args.mode)
    for s in out.statuses:
        cf = "NA" if s.cf is None else f"{s.cf:.6f}"
        print(f"status state={State(s.state).name.lower()} cf={cf} window={s.window_fill}")
    if out.state == "error":
        code = EXIT_IO if out.error_code in (wire.E_DUPLICATE, wire.E_UNKNOWN_SUBJECT) else EXIT_NET
        raise CliError(out.message or f"server error {out.error_code}", code)
    print(f"outcome={out.state}" + (f" reason={out.message}" if out.message else ""))
    return EXIT_REJECTED if out.state == "rejected" else EXIT_OK


def cmd_eval(args) -> int:
    if args.fixture == "table1":
        results = evalharness.load_table1()
    elif args.records:
        paths = [
            ln.strip() for ln in Path(args.records).read_text().splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")
        ]
        base = Path(args.records).parent
        records = []
        for p in paths:
            r = load_record(base / p, args.fs)
            records.append(r.head(args.max_seconds) if args.max_seconds else r)
        genuine = evalharness.run_genuine_trials(records)
        impostor = evalharness.run_impostor_trials(records)
        for rid, reason in genuine.skipped:
            print(f"skipped {rid}: {reason}", file=sys.stderr)
        results = [*genuine, *impostor]
    else:
        raise CliError("eval needs --records or --fixture", EXIT_USAGE)
    text = evalharness.report(results, args.thresholds, args.out)
    for line in text.splitlines():
        if line.startswith("# threshold="):
            print(line)
    return EXIT_OK


def cmd_dct(args) -> int:
    record = read_csv(args.csv, args.fs)
    fv = extract(rr_segments(record)[0])
    for c in fv.coeffs.tolist():
        print(repr(c))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import synthetic_ecg

    record = synthetic_ecg(args.subject_seed, args.seconds, args.fs,
                           session_seed=args.session_seed, wander_mv=args.wander_mv)
    write_csv(record, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecgauth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def record_args(sp):
        sp.add_argument("--record", required=True, help=".hea (WFDB 212) or one-sample-per-line CSV")
        sp.add_argument("--fs", type=float, default=360.0, help="sampling rate for CSV input")

    def decision_args(sp):
        sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
        sp.add_argument("--budget-ms", type=float, default=DEFAULT_BUDGET_MS)

    sp = sub.add_parser("enroll", help="store a template from the first RR interval")
    record_args(sp)
    sp.add_argument("--subject", required=True)
    sp.add_argument("--db", required=True)
    sp.add_argument("--force", action="store_true", help="replace an existing template")
    sp.set_defaults(func=cmd_enroll)

    sp = sub.add_parser("verify", help="one-to-one check against an enrolled subject")
    record_args(sp)
    sp.add_argument("--subject", required=True)
    sp.add_argument("--db", required=True)
    decision_args(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("identify", help="one-to-many search over the store")
    record_args(sp)
    sp.add_argument("--db", required=True)
    decision_args(sp)
    sp.set_defaults(func=cmd_identify)

    sp = sub.add_parser("serve", help="run the verification server")
    sp.add_argument("--listen", required=True, metavar="ADDR:PORT")
    sp.add_argument("--db", required=True)
    decision_args(sp)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("node", help="run the sensor-node side against a server")
    record_args(sp)
    sp.add_argument("--server", required=True, metavar="ADDR:PORT")
    sp.add_argument("--subject", required=True)
    sp.add_argument("--mode", choices=["enroll", "auth"], required=True)
    sp.set_defaults(func=cmd_node)

    sp = sub.add_parser("eval", help="genuine/impostor trials and accuracy report")
    sp.add_argument("--records", help="file listing record paths, one per line")
    sp.add_argument("--fixture", choices=["table1"], help="use bundled published correlations")
    sp.add_argument("--out", required=True)
    sp.add_argument("--thresholds", type=_thresholds, default=[0.90, 0.95])
    sp.add_argument("--fs", type=float, default=360.0)
    sp.add_argument("--max-seconds", type=float, default=None,
                    help="use only the first N seconds of each record")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("dct", help="print the first RR interval's DCT features")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--fs", type=float, required=True)
    sp.set_defaults(func=cmd_dct)

    sp = sub.add_parser("synth", help="write a synthetic ECG as CSV")
    sp.add_argument("--subject-seed", type=int, required=True)
    sp.add_argument("--session-seed", type=int, default=0)
    sp.add_argument("--seconds", type=float, default=60.0)
    sp.add_argument("--fs", type=float, default=360.0)
    sp.add_argument("--wander-mv", type=float, default=0.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidThreshold, InvalidBudget) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProtoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NET
    except DuplicateSubject as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EcgAuthError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
