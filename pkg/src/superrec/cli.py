"""Command-line experiment runner.

Every report is JSON-lines: the first line is a header holding the
timestamp and run metadata, the remaining lines (the body) depend only on
the inputs.  A CSV summary is written next to it.  Exit codes: 0 done,
1 input error, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import diophantine as dio
from . import operators as ops
from . import recurrence as rec
from . import spectral as spec
from . import verdict
from .exceptions import InconclusiveError, RejectedInputError

OUTPUT_ENV = "SUPERREC_OUTPUT_DIR"
SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2
FORMATS = ("jsonl", "csv", "both")


class ExperimentConfig:
    """Parsed config file: operators (with ids and optional vectors), params, seed, output."""

    def __init__(self, operators, ids, vectors, params, seed, output_dir, fmt):
        self.operators = operators
        self.ids = ids
        self.vectors = vectors
        self.params = params
        self.seed = seed
        self.output_dir = output_dir
        self.format = fmt

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise RejectedInputError(f"{path}: {exc.strerror}") from None
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RejectedInputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_json(obj, str(path))

    @classmethod
    def from_json(cls, obj, where="config") -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise RejectedInputError(f"{where}: top level must be an object")
        if obj.get("schema") != SCHEMA:
            raise RejectedInputError(f"{where}.schema: expected {SCHEMA}, got {obj.get('schema')!r}")
        unknown = set(obj) - {"schema", "operators", "vectors", "params", "seed", "output"}
        if unknown:
            raise RejectedInputError(f"{where}: unknown fields {sorted(unknown)}")
        items = obj.get("operators")
        if not isinstance(items, list) or not items:
            raise RejectedInputError(f"{where}.operators: expected a non-empty list")
        operators, ids, vectors = [], [], []
        shared = obj.get("vectors")
        if shared is not None and not isinstance(shared, list):
            raise RejectedInputError(f"{where}.vectors: expected a list")
        for i, item in enumerate(items):
            path = f"{where}.operators[{i}]"
            if not isinstance(item, dict):
                raise RejectedInputError(f"{path}: expected an object")
            if "operator" in item:
                op = ops.from_json(item["operator"], f"{path}.operator")
                ids.append(str(item.get("id", i)))
                vs = item.get("vectors", shared)
            else:
                op = ops.from_json(item, path)
                ids.append(str(i))
                vs = shared
            operators.append(op)
            if vs is None:
                vectors.append(None)
            else:
                vectors.append([ops.vector_from_json(v, f"{path}.vectors[{j}]") for j, v in enumerate(vs)])
                for j, v in enumerate(vectors[-1]):
                    if v.size != op.dim:
                        raise RejectedInputError(f"{path}.vectors[{j}]: length {v.size} != dim {op.dim}")
        params = rec.DetectionParams.from_json(obj.get("params", {}))
        seed = obj.get("seed", 0)
        if not isinstance(seed, int):
            raise RejectedInputError(f"{where}.seed: expected an integer")
        out = obj.get("output", {})
        if not isinstance(out, dict):
            raise RejectedInputError(f"{where}.output: expected an object")
        fmt = out.get("format", "both")
        if fmt not in FORMATS:
            raise RejectedInputError(f"{where}.output.format: expected one of {FORMATS}")
        return cls(operators, ids, vectors, params, seed, out.get("path"), fmt)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _body(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def _header(command, argv) -> str:
    return json.dumps({
        "header": True,
        "command": command,
        "argv": list(argv),
        "schema": SCHEMA,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }, sort_keys=True) + "\n"


def _emit(args, command, argv, body, csv_text, output_dir=None, fmt=None):
    out_dir = Path(args.output_dir or output_dir or os.environ.get(OUTPUT_ENV) or ".")
    fmt = args.format or fmt or "both"
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or command
    written = []
    if fmt in ("jsonl", "both"):
        p = out_dir / f"{stem}.jsonl"
        p.write_text(_header(command, argv) + body)
        written.append(p)
    if fmt in ("csv", "both"):
        p = out_dir / f"{stem}.csv"
        p.write_text(csv_text)
        written.append(p)
    if not args.quiet:
        sys.stdout.write(body)
    for p in written:
        print(f"wrote {p}", file=sys.stderr)


def _cmd_spectrum(args, argv):
    cfg = ExperimentConfig.load(args.config)
    records, rows = [], []
    for oid, op in zip(cfg.ids, cfg.operators):
        r = spec.spectrum(op)
        records.append({"operator_id": oid, "report": r.to_json()})
        rows.append([oid, op.dim, repr(r.modulus_spread),
                     "" if r.circle_radius is None else repr(r.circle_radius),
                     r.diagonalizable, r.dense_range])
    csv_text = _csv(["operator_id", "dim", "modulus_spread", "circle_radius", "diagonalizable", "dense_range"], rows)
    _emit(args, "spectrum", argv, _body(records), csv_text, cfg.output_dir, cfg.format)


def _cmd_detect(args, argv):
    cfg = ExperimentConfig.load(args.config)
    records, rows = [], []
    for oid, op, vs in zip(cfg.ids, cfg.operators, cfg.vectors):
        vs = vs if vs is not None else list(np.eye(op.dim, dtype=np.complex128))
        for j, x in enumerate(vs):
            sup = rec.detect_super_recurrence(op, x, cfg.params)
            plain = rec.detect_recurrence(op, x, cfg.params)
            records.append({"operator_id": oid, "vector_index": j, "vector": ops.vector_to_json(x),
                            "super_recurrence": sup.to_json(), "recurrence": plain.to_json()})
            best = sup.best
            rows.append([oid, j, sup.status, plain.status, "" if best is None else best.n,
                         "" if best is None else repr(best.residual)])
    csv_text = _csv(["operator_id", "vector_index", "super_recurrence", "recurrence", "n", "residual"], rows)
    _emit(args, "detect", argv, _body(records), csv_text, cfg.output_dir, cfg.format)


def _cmd_classify(args, argv):
    cfg = ExperimentConfig.load(args.config)
    records, rows = [], []
    for oid, op in zip(cfg.ids, cfg.operators):
        c = verdict.classify(op, cfg.params, operator_id=oid, seed=cfg.seed, threshold=args.threshold)
        records.append(c.to_json())
        rows.append([oid, c.final, c.necessary_pass, c.sufficient_pass, c.dynamic_status["certified"],
                     c.dynamic_status["probes"], "" if c.witness is None else c.witness["kind"]])
    csv_text = _csv(["operator_id", "final", "necessary", "sufficient", "certified_probes", "probes", "witness"], rows)
    _emit(args, "classify", argv, _body(records), csv_text, cfg.output_dir, cfg.format)


def _cmd_suite(args, argv):
    checks = verdict.CHECKS if not args.checks else tuple(args.checks.split(","))
    bad = set(checks) - set(verdict.CHECKS)
    if bad:
        raise RejectedInputError(f"--checks: unknown {sorted(bad)}")
    if args.dims < 2 or args.cases < 1:
        raise RejectedInputError("--dims must be >= 2 and --cases >= 1")
    report = verdict.property_suite(args.seed, args.dims, args.cases, checks)
    _emit(args, "suite", argv, report.to_jsonl(), report.to_csv())
    return EXIT_OK


def _cmd_returns(args, argv):
    try:
        thetas = [float(t) for t in args.thetas.split(",") if t.strip()]
    except ValueError:
        raise RejectedInputError(f"--thetas: not a comma-separated list of numbers: {args.thetas!r}") from None
    system = dio.AngleSystem.from_angles(thetas, args.delta)
    budget = args.n_max or dio.dirichlet_bound(system.delta, system.k)
    try:
        if args.method == "scan":
            sol = dio.scan_return(system, budget)
        else:
            sol = dio.simultaneous_return_lll(system, fallback_budget=budget)
    except dio.BudgetExhausted as exc:
        raise InconclusiveError(str(exc)) from None
    rec_json = dict(sol.to_json(), thetas=list(system.thetas), delta=system.delta, valid=dio.validate(system, sol))
    csv_text = _csv(["n", "method", "fallback", "max_distance"],
                    [[sol.n, sol.method, sol.fallback, repr(max(sol.distances, default=0.0))]])
    _emit(args, "returns", argv, _body([rec_json]), csv_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superrec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", help=f"report directory (default: ${OUTPUT_ENV} or .)")
    common.add_argument("--format", choices=FORMATS, help="report files to write (default both)")
    common.add_argument("--name", help="file stem for the reports (default: the subcommand)")
    common.add_argument("-q", "--quiet", action="store_true", help="do not echo the report body")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("spectrum", "spectral reports"), ("detect", "recurrence detection with certificates"),
                           ("classify", "operator-level classification")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("config", help="experiment config (JSON, schema 1)")
        if name == "classify":
            p.add_argument("--threshold", type=float, default=verdict.PROBE_THRESHOLD,
                           help="fraction of certified probes for a positive verdict")

    p = sub.add_parser("suite", parents=[common], help="seeded property suite")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dims", type=int, default=6, help="largest operator dimension")
    p.add_argument("--cases", type=int, default=50, help="cases per check")
    p.add_argument("--checks", help="comma-separated subset of checks")

    p = sub.add_parser("returns", parents=[common], help="simultaneous return time of angles")
    p.add_argument("--thetas", required=True, help="comma-separated angles (fractions of a turn)")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--method", choices=("scan", "lll"), default="scan")
    p.add_argument("--n-max", type=int, default=None, help="scan budget (default: pigeonhole bound)")
    return parser


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "detect": _cmd_detect,
    "classify": _cmd_classify,
    "suite": _cmd_suite,
    "returns": _cmd_returns,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        _COMMANDS[args.command](args, argv)
    except RejectedInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconclusiveError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
