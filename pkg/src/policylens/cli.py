"""Command-line entry point.

Exit codes: 0 success, 1 fatal error or validation failure, 2 partial success
(some segments failed extraction). Diagnostics go to stderr as JSON lines.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import audit as audit_mod
from .converter import convert
from .extraction import (
    AuthError,
    BackendConfig,
    MockBackend,
    RecordingBackend,
    RemoteBackend,
    extract_document,
    load_templates,
    parse_dump,
    serialize_dump,
)
from .extraction.practices import PracticeDump
from .metrics import EXACT_TASKS, RELAXED_THRESHOLD, SPAN_TASKS, score_documents
from .model import (
    Diagnostic,
    PolicyError,
    dumps,
    parse_app_policy,
    parse_profile,
    read_json,
    serialize_app_policy,
    validate,
    write_json,
)
from .profiles import load_profile_pack
from .reasoner import check_compliance, parse_report, serialize_report
from .vocab import VocabularyError, load_default_vocabulary, load_vocabulary

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
REPORT_SUFFIX = ".report"

log = logging.getLogger("policylens")


class CLIError(Exception):
    pass


def emit(diag: Diagnostic | dict) -> None:
    record = diag.to_dict() if isinstance(diag, Diagnostic) else diag
    sys.stderr.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def fatal(message: str, code: str = "fatal") -> int:
    emit({"severity": "error", "code": code, "location": "", "message": message})
    return EXIT_FATAL


def _readable(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CLIError(f"{what} not found: {p}")
    if p.is_file():
        try:
            with open(p, "rb"):
                pass
        except OSError as exc:
            raise CLIError(f"{what} not readable: {p} ({exc})") from None
    return p


def _vocab(args):
    if args.vocab:
        return load_vocabulary(_readable(args.vocab, "vocabulary"))
    return load_default_vocabulary()


# --------------------------------------------------------------------------
# commands

def cmd_extract(args) -> int:
    policy = _readable(args.policy, "policy text")
    if args.mock_fixtures:
        backend = MockBackend.from_path(_readable(args.mock_fixtures, "mock fixture directory"))
        config = BackendConfig()
    elif args.backend:
        config = BackendConfig.from_file(_readable(args.backend, "backend config"))
        backend = RemoteBackend(config)
    else:
        raise CLIError("one of --backend or --mock-fixtures is required")
    templates = load_templates(config.prompts_dir) if config.prompts_dir else load_templates()
    h = _vocab(args)
    if args.record_fixtures:
        backend = RecordingBackend(backend)
    doc_id = args.doc_id or policy.stem
    text = policy.read_text(encoding="utf-8")
    workers = args.workers or config.workers
    result = extract_document(
        backend, h, doc_id, text,
        workers=workers, templates=templates,
        attempts=config.max_attempts, backoff=config.backoff_seconds,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, serialize_dump(PracticeDump(doc_id, result.segment_count, tuple(result.practices))))
    diag_path = out.with_name(out.name + ".diagnostics.jsonl")
    diag_path.write_text(
        "".join(json.dumps(d.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for d in result.diagnostics),
        encoding="utf-8",
    )
    for d in result.diagnostics:
        emit(d)
    if args.record_fixtures:
        write_json(args.record_fixtures, backend.fixture_document())
    return EXIT_PARTIAL if result.failed_segments else EXIT_OK


def cmd_convert(args) -> int:
    dump = parse_dump(read_json(_readable(args.dump, "practice dump")))
    h = _vocab(args)
    diags: list[Diagnostic] = []
    policy = convert(
        dump.practices, args.app_id or dump.doc_id, h, segment_count=dump.segment_count, diagnostics=diags
    )
    for d in diags:
        emit(d)
    errors = [d for d in validate(policy, h) if d.severity == "error"]
    for d in errors:
        emit(d)
    if errors:
        return EXIT_FATAL
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(out, serialize_app_policy(policy))
    return EXIT_OK


def report_name(app_id: str, profile_id: str) -> str:
    return f"{app_id}__{profile_id}{REPORT_SUFFIX}"


def cmd_check(args) -> int:
    h = _vocab(args)
    app_path = _readable(args.app_policy, "app policy")
    profiles_dir = _readable(args.profiles, "profile directory") if args.profiles else None
    try:
        policy = parse_app_policy(read_json(app_path), h)
        profiles = load_profile_pack(profiles_dir, h)
    except PolicyError as exc:
        for d in exc.diagnostics:
            emit(d)
        return EXIT_FATAL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for prof in profiles:
        report = check_compliance(policy, prof, h)
        write_json(out / report_name(policy.app_id, prof.profile_id), serialize_report(report))
    return EXIT_OK


def cmd_audit(args) -> int:
    reports_dir = _readable(args.reports, "reports directory")
    reports = []
    for path in sorted(reports_dir.glob(f"*{REPORT_SUFFIX}")):
        try:
            report = parse_report(read_json(path))
        except (PolicyError, ValueError, json.JSONDecodeError) as exc:
            raise CLIError(f"unparseable report {path.name}: {exc}") from None
        if path.name != report_name(report.app_id, report.profile_id):
            raise CLIError(f"report {path.name} does not match its content "
                           f"({report.app_id}, {report.profile_id})")
        reports.append(report)
    summary = audit_mod.audit(reports)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "audit.json", audit_mod.serialize_summary(summary))
    (out / "audit.csv").write_text(audit_mod.table_csv(summary), encoding="utf-8")
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = read_json(_readable(args.gold, "gold file"))
    pred = read_json(_readable(args.pred, "prediction file"))
    tasks = args.tasks or list(SPAN_TASKS + EXACT_TASKS)
    scores = score_documents(gold, pred, tasks, args.threshold)
    doc = {
        "threshold": args.threshold,
        "scores": [
            {"task": s.task, "f1_nonempty": s.f1_nonempty, "f1_empty": s.f1_empty, "f1_macro": s.f1_macro,
             "tp": s.tp, "fp": s.fp, "fn": s.fn}
            for s in scores
        ],
    }
    if args.out:
        write_json(args.out, doc)
    else:
        sys.stdout.write(dumps(doc))
    return EXIT_OK


def _document_kind(doc) -> str:
    if not isinstance(doc, dict):
        return "unknown"
    if "input_specs" in doc:
        return "app-policy"
    if "policies" in doc:
        return "profile"
    if "practices" in doc:
        return "practice-dump"
    if "conflicts" in doc:
        return "report"
    return "unknown"


def cmd_validate(args) -> int:
    h = _vocab(args)
    status = EXIT_OK
    for name in args.files:
        path = _readable(name, "document")
        doc = read_json(path)
        kind = _document_kind(doc)
        try:
            if kind == "app-policy":
                diags = validate(parse_app_policy(doc), h)
            elif kind == "profile":
                diags = validate(parse_profile(doc), h)
            elif kind == "practice-dump":
                parse_dump(doc)
                diags = []
            elif kind == "report":
                parse_report(doc)
                diags = []
            else:
                diags = [Diagnostic("error", "unknown-document", "$", "cannot tell the document type")]
        except PolicyError as exc:
            diags = exc.diagnostics
        except ValueError as exc:
            diags = [Diagnostic("error", "invalid", "$", str(exc))]
        for d in diags:
            emit(Diagnostic(d.severity, d.code, f"{path}:{d.location}", d.message))
        if any(d.severity == "error" for d in diags):
            status = EXIT_FATAL
    return status


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--vocab", help="vocabulary TSV (default: bundled vocabulary)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="policylens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="extract practices from a policy text file")
    p.add_argument("policy")
    p.add_argument("--out", required=True, help="practice dump to write")
    p.add_argument("--backend", help="backend config JSON (remote model)")
    p.add_argument("--mock-fixtures", help="directory of recorded responses to replay")
    p.add_argument("--workers", type=int, default=None, help="segments processed concurrently")
    p.add_argument("--doc-id", help="document id (default: file stem)")
    p.add_argument("--record-fixtures", help="also write every exchange as a mock fixture file")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("convert", parents=[common], help="convert a practice dump to an app policy")
    p.add_argument("dump")
    p.add_argument("--out", required=True)
    p.add_argument("--app-id", help="application id (default: the dump's doc id)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("check", parents=[common], help="check an app policy against a profile pack")
    p.add_argument("app_policy")
    p.add_argument("--profiles", help="profile directory (default: bundled pack)")
    p.add_argument("--out", required=True, help="directory for the per-profile reports")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("audit", parents=[common], help="aggregate a directory of reports")
    p.add_argument("reports")
    p.add_argument("--out", required=True, help="directory for audit.json and audit.csv")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("eval", parents=[common], help="score predictions against gold annotations")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--tasks", nargs="+", choices=SPAN_TASKS + EXACT_TASKS)
    p.add_argument("--threshold", type=float, default=RELAXED_THRESHOLD)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate", parents=[common], help="validate policy, profile, dump or report files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AuthError as exc:
        return fatal(str(exc), "auth")
    except (CLIError, VocabularyError, PolicyError, ValueError, OSError) as exc:
        return fatal(str(exc))


if __name__ == "__main__":
    sys.exit(main())
