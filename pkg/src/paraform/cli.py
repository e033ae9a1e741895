"""Command-line surface: structured-text jobs in, structured reports out.

Job documents are JSON with all rationals as strings (exactness), and
reports are canonical JSON (sorted keys, fixed indentation) so that
identical inputs produce byte-identical reports.  Exit codes: 0 success,
1 verification failure, 2 parse error, 3 budget or search exhaustion,
4 internal invariant violation or domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .series import INF, LaurentSeries, RamifiedContext, SeriesError, frac, frac_str
from .liealg import LieError, MatSeries
from .gauge import (Connection, GaugeWord, gauge, word_from_payload,
                    word_payload, _matseries_payload, _matseries_from_payload)
from .parahoric import (Weight, ParahoricError, leading_index, residue,
                        residue0, weight_rep)
from .reduction import (BudgetExceeded, NoProgress, ReductionBudget,
                        ReductionError, full_reduce)
from .regularity import is_regular, reduce_with_normalization, relative_regularity
from .borel import BorelBudget, SearchExhausted, borel_reduce


class ParseError(Exception):
    pass


COMMANDS = ("reduce", "slope", "regular", "relreg", "borel", "order",
            "residue", "verify")


@dataclass(frozen=True)
class JobSpec:
    n: int
    truncation: int
    weight: Weight
    connection: Connection
    mode: str
    ramification: int
    options: dict


_JOB_FIELDS = {"n", "truncation", "weight", "connection", "mode",
               "ramification", "options"}


def parse_job(text: str, higgs_override: bool = False,
              truncation_override: int | None = None) -> JobSpec:
    """Parse a job document; raises ParseError with field diagnostics."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("job document must be an object")
    unknown = set(doc) - _JOB_FIELDS
    if unknown:
        raise ParseError(f"unknown field: {sorted(unknown)[0]}")
    for required in ("n", "truncation", "weight", "connection"):
        if required not in doc:
            raise ParseError(f"missing field: {required}")
    try:
        n = int(doc["n"])
        truncation = int(doc["truncation"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad integer field: {exc}") from exc
    if truncation_override is not None:
        truncation = truncation_override
    if n < 1:
        raise ParseError("field n must be >= 1")
    if truncation < 4:
        raise ParseError("field truncation must be >= 4")
    weight_raw = doc["weight"]
    if not isinstance(weight_raw, list) or len(weight_raw) != n:
        raise ParseError("field weight must list n rationals")
    try:
        weight = Weight([frac(w) for w in weight_raw])
    except SeriesError as exc:
        raise ParseError(f"field weight: {exc}") from exc
    entries_raw = doc["connection"]
    if not isinstance(entries_raw, list) or len(entries_raw) != n:
        raise ParseError("field connection must be an n x n entry table")
    rows = []
    for a, row in enumerate(entries_raw):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"connection row {a} must have n entries")
        out = []
        for b, pairs in enumerate(row):
            if not isinstance(pairs, list):
                raise ParseError(f"connection entry ({a},{b}) must list "
                                 "(exponent, rational) pairs")
            coeffs = {}
            for item in pairs:
                if (not isinstance(item, list)) or len(item) != 2:
                    raise ParseError(f"connection entry ({a},{b}): each term "
                                     "must be [exponent, rational-string]")
                e, cstr = item
                try:
                    coeffs[int(e)] = frac(cstr)
                except (SeriesError, TypeError, ValueError) as exc:
                    raise ParseError(
                        f"connection entry ({a},{b}): {exc}") from exc
            out.append(LaurentSeries(coeffs, truncation))
        rows.append(out)
    mode = doc.get("mode", "connection")
    if mode not in ("connection", "higgs"):
        raise ParseError(f"unknown mode: {mode}")
    if higgs_override:
        mode = "higgs"
    ramification = int(doc.get("ramification", 1))
    if ramification < 1:
        raise ParseError("field ramification must be >= 1")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise ParseError("field options must be an object")
    conn = Connection(MatSeries(rows), RamifiedContext(ramification),
                      higgs=(mode == "higgs"))
    return JobSpec(n, truncation, weight, conn, mode, ramification, options)


def print_job(spec: JobSpec) -> str:
    doc = {
        "n": spec.n,
        "truncation": spec.truncation,
        "weight": spec.weight.to_strings(),
        "connection": [[s.to_pairs() for s in row] for row in spec.connection.mat.rows],
        "mode": spec.mode,
        "ramification": spec.ramification,
        "options": spec.options,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _trunc_repr(t):
    return "inf" if t == INF else int(t)


def _final_payload(conn: Connection):
    return {"matrix": _matseries_payload(conn.mat),
            "ramification": conn.context.b,
            "higgs": conn.higgs}


def _report_body(report):
    return {
        "form_class": report.form_class,
        "slope": frac_str(report.slope),
        "ramification": report.ramification,
        "progress_log": [[step, dict(sorted(data.items()))]
                         for step, data in report.progress_log],
    }


def run(command: str, spec: JobSpec, *, emit_certificate: bool = False,
        budget_iterations: int | None = None, max_ramification: int | None = None,
        seed: int | None = None, report_doc: dict | None = None):
    """Execute one command; returns (exit_code, report_dict)."""
    base = {"tool": "paraform", "version": __version__, "command": command}
    if seed is not None:
        base["seed"] = seed
    budget = ReductionBudget(budget_iterations, max_ramification)
    conn = spec.connection
    weight = spec.weight

    if command == "reduce":
        report = reduce_with_normalization(weight, conn, budget)
        base["result"] = _report_body(report)
        base["effective_truncation"] = _trunc_repr(report.effective_trunc)
        base["final"] = _final_payload(report.final)
        if emit_certificate:
            base["certificate"] = word_payload(report.certificate)
        return 0, base

    if command == "slope":
        report = full_reduce(weight, conn, budget)
        base["result"] = {"slope": frac_str(report.slope),
                          "form_class": report.form_class}
        base["effective_truncation"] = _trunc_repr(report.effective_trunc)
        return 0, base

    if command == "regular":
        verdict = is_regular(conn, budget)
        result = {"regular": verdict.regular}
        if verdict.regular:
            result["witness_weight"] = verdict.witness_weight.to_strings()
            if emit_certificate:
                base["certificate"] = word_payload(verdict.witness_gauge)
        base["result"] = result
        base["effective_truncation"] = _trunc_repr(conn.mat.trunc_effective())
        return 0, base

    if command == "relreg":
        ok, w, template, word = relative_regularity(conn, budget)
        result = {"relatively_regular": ok, "weight": w.to_strings()}
        if template is not None:
            result["template"] = _final_payload(template)
        base["result"] = result
        if emit_certificate and word is not None:
            base["certificate"] = word_payload(word)
        base["effective_truncation"] = _trunc_repr(conn.mat.trunc_effective())
        return 0, base

    if command == "borel":
        bb = BorelBudget()
        reduced, word = borel_reduce(weight, conn, bb)
        base["result"] = {"verified": True}
        base["final"] = _final_payload(reduced)
        base["effective_truncation"] = _trunc_repr(reduced.mat.trunc_effective())
        if emit_certificate:
            base["certificate"] = word_payload(word)
        return 0, base

    if command == "order":
        rep = weight_rep(weight, conn)
        base["result"] = {"order": rep.c, "sharp_data": rep.export_payload()}
        base["effective_truncation"] = _trunc_repr(conn.mat.trunc_effective())
        return 0, base

    if command == "residue":
        res = residue(weight, conn.mat.shift(1))
        res0 = residue0(weight, conn.mat.shift(1))
        base["result"] = {
            "residue": _matseries_payload(res),
            "residue0": [[frac_str(x) for x in row] for row in res0.rows],
        }
        base["effective_truncation"] = _trunc_repr(conn.mat.trunc_effective())
        return 0, base

    if command == "verify":
        if report_doc is None:
            raise ParseError("verify needs a report document")
        if "certificate" not in report_doc:
            raise ParseError("report carries no certificate")
        if "final" not in report_doc:
            raise ParseError("report carries no final connection")
        word = word_from_payload(report_doc["certificate"])
        claimed = _matseries_from_payload(report_doc["final"]["matrix"])
        claimed_b = int(report_doc["final"]["ramification"])
        upto = report_doc.get("effective_truncation", "inf")
        upto = INF if upto == "inf" else int(upto)
        replayed = gauge(word, conn)
        ok = (replayed.context.b == claimed_b
              and replayed.mat.agrees(claimed, upto))
        base["result"] = {"verified": ok}
        return (0 if ok else 1), base

    raise ParseError(f"unknown command: {command}")


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paraform",
        description="exact reduction of formal connections with weighted filtrations")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("job", help="job document path, or - for stdin")
    parser.add_argument("report", nargs="?",
                        help="report document path (verify only)")
    parser.add_argument("--truncation", type=int, default=None)
    parser.add_argument("--max-ramification", type=int, default=None)
    parser.add_argument("--budget-iterations", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--emit-certificate", action="store_true")
    parser.add_argument("--higgs", action="store_true")
    args = parser.parse_args(argv)

    try:
        text = sys.stdin.read() if args.job == "-" else open(args.job).read()
        spec = parse_job(text, higgs_override=args.higgs,
                         truncation_override=args.truncation)
        report_doc = None
        if args.command == "verify":
            if args.report is None:
                raise ParseError("verify needs a report path")
            with open(args.report) as fh:
                report_doc = json.load(fh)
        code, doc = run(args.command, spec,
                        emit_certificate=args.emit_certificate,
                        budget_iterations=args.budget_iterations,
                        max_ramification=args.max_ramification,
                        seed=args.seed,
                        report_doc=report_doc)
        _emit(doc)
        return code
    except (ParseError, OSError, json.JSONDecodeError) as exc:
        _emit({"tool": "paraform", "version": __version__,
               "error": {"kind": type(exc).__name__, "message": str(exc)}})
        return 2
    except (BudgetExceeded, SearchExhausted) as exc:
        _emit({"tool": "paraform", "version": __version__,
               "error": {"kind": type(exc).__name__, "message": str(exc)}})
        return 3
    except (NoProgress, ReductionError, LieError, ParahoricError,
            SeriesError, ValueError) as exc:
        _emit({"tool": "paraform", "version": __version__,
               "error": {"kind": type(exc).__name__, "message": str(exc)}})
        return 4


if __name__ == "__main__":
    sys.exit(main())
