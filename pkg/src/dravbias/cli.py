"""Command-line entry point.

Exit codes: 0 success, 1 policy failure (``--strict``), 2 input error,
3 backend error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .bias_detector import Verdict, default_lexicons, normalize_domain
from .cot_prompting import MitigationResult, mitigate
from .errors import (
    BackendError,
    ConfigError,
    DravBiasError,
    EmptySentence,
    NoLabels,
    SchemaError,
    UnknownScript,
    UnsupportedLanguage,
)
from .eval_harness import (
    audit_corpus,
    compare_with_human,
    compute_rates,
    dumps_jsonl,
    judgements_from_pairs,
    judgements_from_records,
    load_corpus,
    load_verdicts,
    render_agreement,
    render_report,
    verdict_record,
)
from .morphology import analyze_sentence
from .mt_client import BackendConfig, load_config, make_backend
from .script_core import normalize_language, to_roman

log = logging.getLogger("dravbias")

EXIT_OK, EXIT_POLICY, EXIT_INPUT, EXIT_BACKEND = 0, 1, 2, 3


class InputError(Exception):
    pass


def write_atomic(path, data) -> None:
    """Write via a temp file in the same directory and rename over *path*."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_figure(report, path) -> None:
    from .plotting import plot_domain_report

    fd, tmp = tempfile.mkstemp(dir=Path(path).parent, prefix=".fig.", suffix=".png")
    os.close(fd)
    try:
        plot_domain_report(report, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_report_files(report, stem: Path, figure: bool) -> list[Path]:
    written = []
    for fmt, ext in (("markdown", ".md"), ("json", ".json"), ("csv", ".csv")):
        out = stem.with_name(stem.name + ext)
        write_atomic(out, render_report(report, fmt))
        written.append(out)
    if figure:
        out = stem.with_name(stem.name + ".png")
        _write_figure(report, out)
        written.append(out)
    return written


def cmd_analyze(args) -> int:
    language = normalize_language(args.lang)
    analysis = analyze_sentence(args.text, language)
    if args.format == "json":
        print(json.dumps({
            "language": language,
            "tokens": list(analysis.tokens),
            "predicate_index": analysis.predicate_index,
            "hits": [None if h is None else {
                "token": h.token, "kind": h.kind, "feature": h.feature,
                "marking": h.marking.value, "confident": h.confident,
            } for h in analysis.hits],
            "sentence_marking": analysis.sentence_marking.value,
        }, ensure_ascii=False, indent=2))
        return EXIT_OK
    for i, (tok, hit) in enumerate(zip(analysis.tokens, analysis.hits)):
        role = "predicate" if i == analysis.predicate_index else ""
        if hit is None:
            desc = "-"
        else:
            desc = f"{hit.kind}:{hit.feature} {hit.marking.value}"
            if not hit.confident:
                desc += " (low confidence)"
        print(f"{tok}\t{desc}\t{role}".rstrip())
    print(f"sentence_marking: {analysis.sentence_marking.value}")
    return EXIT_OK


def cmd_transliterate(args) -> int:
    roman, unmapped = to_roman(args.text, args.lang)
    print(roman)
    if unmapped:
        print("unmapped: " + " ".join(unmapped), file=sys.stderr)
    return EXIT_OK


def cmd_audit(args) -> int:
    corpus = load_corpus(args.corpus)
    results = audit_corpus(corpus, default_lexicons(), jobs=args.jobs)
    report = compute_rates(judgements_from_pairs(results), args.include_indeterminate)
    outdir = Path(args.output or ".")
    stem = outdir / corpus.name
    write_atomic(stem.with_name(stem.name + ".verdicts.jsonl"),
                 dumps_jsonl(verdict_record(p, v) for p, v in results))
    _write_report_files(report, stem.with_name(stem.name + ".report"), not args.no_figure)
    print(render_report(report, args.format), end="")
    if args.agreement:
        try:
            agreement = compare_with_human([v for _, v in results],
                                           [p.human_label for p, _ in results])
        except NoLabels as exc:
            raise InputError(f"--agreement: {exc}") from exc
        write_atomic(stem.with_name(stem.name + ".agreement.md"), render_agreement(agreement))
        write_atomic(stem.with_name(stem.name + ".agreement.json"),
                     render_agreement(agreement, "json"))
        print()
        print(render_agreement(agreement, "markdown" if args.format != "json" else "json"), end="")
    n_ind = sum(v.variant is Verdict.INDETERMINATE for _, v in results)
    if n_ind:
        log.warning("%d of %d pairs are Indeterminate", n_ind, len(results))
        if args.strict:
            return EXIT_POLICY
    return EXIT_OK


def _load_sources(path) -> list[dict]:
    rows, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON ({exc.msg})", lineno) from exc
            if not isinstance(rec, dict) or not isinstance(rec.get("id"), str) \
                    or not isinstance(rec.get("source_en"), str) or not rec["source_en"].strip():
                raise SchemaError("rows need string 'id' and non-empty 'source_en'", lineno)
            if rec["id"] in seen:
                raise SchemaError(f"duplicate id {rec['id']!r}", lineno)
            try:
                rec["domain"] = normalize_domain(rec.get("domain", "Other"))
            except ValueError as exc:
                raise SchemaError(str(exc), lineno) from exc
            seen.add(rec["id"])
            rows.append(rec)
    return rows


def _backend_config(args) -> BackendConfig:
    if args.config:
        config = load_config(args.config)
    else:
        config = BackendConfig()
    overrides = {
        "kind": args.backend, "endpoint": args.endpoint, "model": args.model,
        "fixture_path": args.fixture, "auth_env": args.auth_env,
    }
    if args.overwrite_fixtures:
        overrides["overwrite"] = True
    values = {k: v for k, v in overrides.items() if v is not None}
    if values:
        config = BackendConfig(**{**config.__dict__, **values})
    return config


def _mitigation_record(row, language, system_tag, result: MitigationResult) -> dict:
    final = result.final_verdict
    return {
        "id": row["id"],
        "domain": row["domain"],
        "source_en": row["source_en"],
        "target_text": result.final_translation,
        "language": language,
        "cot_level": result.levels_used,
        "system_tag": system_tag,
        "levels_used": result.levels_used,
        "final_verdict": final.variant.value if final else None,
        "stop_reason": result.stop_reason,
        "attempts": [{
            "level": a.plan.level,
            "prompt": a.plan.text,
            "translation": a.translation,
            "verdict": a.verdict.variant.value if a.verdict else None,
        } for a in result.attempts],
    }


def cmd_mitigate(args) -> int:
    language = normalize_language(args.lang)
    rows = _load_sources(args.sources)
    try:
        backend = make_backend(_backend_config(args))
    except ConfigError as exc:
        raise InputError(str(exc)) from exc
    lex = default_lexicons()

    def run(row):
        try:
            return mitigate(row["source_en"], language, backend, args.max_level, lex,
                            pair_id=row["id"], domain=row["domain"], system_tag=args.system_tag)
        except BackendError as exc:
            return exc

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(run, rows))
    else:
        outcomes = [run(r) for r in rows]
    for row, outcome in zip(rows, outcomes):
        if isinstance(outcome, BackendError):
            print(f"error: pair {row['id']}: {type(outcome).__name__}: {outcome}", file=sys.stderr)
            return EXIT_BACKEND
    records = [_mitigation_record(r, language, args.system_tag, o) for r, o in zip(rows, outcomes)]
    write_atomic(args.output, dumps_jsonl(records))
    for rec in records:
        print(f"{rec['id']}\tlevels_used={rec['levels_used']}\t{rec['final_verdict']}\t{rec['target_text']}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = []
    for path in args.verdicts:
        records.extend(load_verdicts(path))
    report = compute_rates(judgements_from_records(records), args.include_indeterminate)
    if args.output:
        _write_report_files(report, Path(args.output), not args.no_figure)
    print(render_report(report, args.format), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dravbias", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="show suffix/lexicon hits for one sentence")
    a.add_argument("text")
    a.add_argument("--lang", required=True)
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("transliterate", help="romanize native Telugu/Kannada text")
    t.add_argument("text")
    t.add_argument("--lang", required=True)
    t.set_defaults(func=cmd_transliterate)

    au = sub.add_parser("audit", help="judge every pair of a corpus and write reports")
    au.add_argument("corpus")
    au.add_argument("-o", "--output", help="output directory (default: current)")
    au.add_argument("--format", choices=("markdown", "json", "csv"), default="markdown")
    au.add_argument("--include-indeterminate", action="store_true",
                    help="count Indeterminate pairs in the rate denominator")
    au.add_argument("--strict", action="store_true", help="exit 1 if any pair is Indeterminate")
    au.add_argument("--agreement", action="store_true", help="compare with human_label fields")
    au.add_argument("--no-figure", action="store_true")
    au.add_argument("--jobs", type=int, default=1)
    au.set_defaults(func=cmd_audit)

    m = sub.add_parser("mitigate", help="translate with CoT re-prompting")
    m.add_argument("sources", help="JSONL with id, source_en, optional domain")
    m.add_argument("--lang", required=True)
    m.add_argument("-o", "--output", required=True)
    m.add_argument("--max-level", type=int, default=None)
    m.add_argument("--config", help="INI file with a [backend] section")
    m.add_argument("--backend", choices=("live", "replay", "record"))
    m.add_argument("--endpoint")
    m.add_argument("--model")
    m.add_argument("--auth-env", help="name of the environment variable holding the API token")
    m.add_argument("--fixture", help="fixture JSONL for replay/record")
    m.add_argument("--overwrite-fixtures", action="store_true")
    m.add_argument("--system-tag", default="ChatGPT")
    m.add_argument("--jobs", type=int, default=1)
    m.set_defaults(func=cmd_mitigate)

    r = sub.add_parser("report", help="merge verdict files into one report")
    r.add_argument("verdicts", nargs="+")
    r.add_argument("-o", "--output", help="path prefix for .md/.json/.csv/.png files")
    r.add_argument("--format", choices=("markdown", "json", "csv"), default="markdown")
    r.add_argument("--include-indeterminate", action="store_true")
    r.add_argument("--no-figure", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def _validate_paths(args) -> None:
    for name in ("corpus", "sources"):
        path = getattr(args, name, None)
        if path is not None and not Path(path).is_file():
            raise InputError(f"no such file: {path}")
    for path in getattr(args, "verdicts", None) or ():
        if not Path(path).is_file():
            raise InputError(f"no such file: {path}")
    if args.command == "mitigate":
        language = normalize_language(args.lang)
        if args.max_level is None:
            args.max_level = 2 if language == "telugu" else 1
    if getattr(args, "jobs", 1) < 1:
        raise InputError("--jobs must be >= 1")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        _validate_paths(args)
        return args.func(args)
    except (InputError, SchemaError, EmptySentence, UnsupportedLanguage, UnknownScript,
            ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except DravBiasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
