"""Corpus loading, per-domain bias rates, agreement with human labels, reports.

Corpus and verdict files are JSON Lines.  Corpus rows carry
``id, domain, source_en, target_text, language, cot_level, system_tag`` and an
optional ``human_label`` (``Biased`` / ``NotBiased``).  Verdict rows add
``verdict`` and ``evidence``.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

from .bias_detector import (
    DOMAINS,
    BiasVerdict,
    Lexicons,
    TranslationPair,
    Verdict,
    audit_pairs,
)
from .errors import DuplicateId, NoLabels, SchemaError
from .script_core import LANGUAGES

CORPUS_FIELDS = ("id", "domain", "source_en", "target_text", "language", "cot_level", "system_tag")
VERDICT_FIELDS = ("id", "domain", "language", "cot_level", "system_tag", "verdict")
_VERDICT_VALUES = {v.value for v in Verdict}


@dataclass
class Corpus:
    entries: list[TranslationPair] = field(default_factory=list)
    name: str = ""
    language: Optional[str] = None  # None when entries span both languages
    system_tag: Optional[str] = None
    cot_level: Optional[int] = None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _common(values):
    values = set(values)
    return values.pop() if len(values) == 1 else None


def pair_from_record(rec: dict, lineno: int | None = None) -> TranslationPair:
    if not isinstance(rec, dict):
        raise SchemaError("row is not a JSON object", lineno)
    missing = [f for f in CORPUS_FIELDS if f not in rec]
    if missing:
        raise SchemaError(f"missing fields {missing}", lineno)
    for f in ("id", "source_en", "target_text", "system_tag", "domain", "language"):
        if not isinstance(rec[f], str):
            raise SchemaError(f"field {f!r} must be a string", lineno)
    if not isinstance(rec["cot_level"], int) or isinstance(rec["cot_level"], bool):
        raise SchemaError("field 'cot_level' must be an integer", lineno)
    try:
        return TranslationPair(
            id=rec["id"], source_en=rec["source_en"], target_text=rec["target_text"],
            language=rec["language"], domain=rec["domain"], cot_level=rec["cot_level"],
            system_tag=rec["system_tag"], human_label=rec.get("human_label"),
        )
    except ValueError as exc:
        raise SchemaError(str(exc), lineno) from exc


def pair_to_record(pair: TranslationPair) -> dict:
    rec = {f: getattr(pair, f) for f in CORPUS_FIELDS}
    if pair.human_label is not None:
        rec["human_label"] = pair.human_label
    return rec


def _read_jsonl(path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON ({exc.msg})", lineno) from exc


def load_corpus(path, language: str | None = None) -> Corpus:
    """Load and validate a corpus file.

    With ``language`` given, every entry must be in that language.
    """
    entries: list[TranslationPair] = []
    seen: set[str] = set()
    for lineno, rec in _read_jsonl(path):
        pair = pair_from_record(rec, lineno)
        if pair.id in seen:
            raise DuplicateId(f"duplicate id {pair.id!r}", lineno)
        if language is not None and pair.language != language:
            raise SchemaError(f"entry language {pair.language} != corpus language {language}", lineno)
        seen.add(pair.id)
        entries.append(pair)
    return Corpus(
        entries, name=Path(path).stem,
        language=_common(p.language for p in entries),
        system_tag=_common(p.system_tag for p in entries),
        cot_level=_common(p.cot_level for p in entries),
    )


def dumps_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)


def verdict_record(pair: TranslationPair, verdict: BiasVerdict) -> dict:
    rec = {f: getattr(pair, f) for f in ("id", "domain", "language", "cot_level", "system_tag")}
    if pair.human_label is not None:
        rec["human_label"] = pair.human_label
    rec.update(verdict.to_record())
    return rec


def load_verdicts(path) -> list[dict]:
    records = []
    for lineno, rec in _read_jsonl(path):
        if not isinstance(rec, dict):
            raise SchemaError("row is not a JSON object", lineno)
        missing = [f for f in VERDICT_FIELDS if f not in rec]
        if missing:
            raise SchemaError(f"missing fields {missing}", lineno)
        if rec["verdict"] not in _VERDICT_VALUES:
            raise SchemaError(f"unknown verdict {rec['verdict']!r}", lineno)
        if rec["domain"] not in DOMAINS or rec["language"] not in LANGUAGES:
            raise SchemaError("bad domain or language", lineno)
        if rec["cot_level"] not in (0, 1, 2):
            raise SchemaError("bad cot_level", lineno)
        records.append(rec)
    return records


def audit_corpus(corpus: Corpus, lexicons: Lexicons | None = None, jobs: int = 1
                 ) -> list[tuple[TranslationPair, BiasVerdict]]:
    results = audit_pairs(corpus.entries, lexicons, jobs=jobs)
    return [(pair, verdict) for pair, (_, verdict) in zip(corpus.entries, results)]


class Judgement(NamedTuple):
    system_tag: str
    language: str
    cot_level: int
    domain: str
    verdict: str


def judgements_from_pairs(results: Iterable[tuple[TranslationPair, BiasVerdict]]) -> list[Judgement]:
    return [Judgement(p.system_tag, p.language, p.cot_level, p.domain, v.variant.value)
            for p, v in results]


def judgements_from_records(records: Iterable[dict]) -> list[Judgement]:
    return [Judgement(r["system_tag"], r["language"], r["cot_level"], r["domain"], r["verdict"])
            for r in records]


def percent_half_up(numerator: int, denominator: int) -> int:
    """Whole percent, halves rounded up (87/100 -> 87, 1/8 -> 13)."""
    return (200 * numerator + denominator) // (2 * denominator)


@dataclass(frozen=True)
class ReportRow:
    system_tag: str
    language: str
    cot_level: int
    domain: str  # one of DOMAINS, or "All" for a row total
    biased: int
    judged: int
    indeterminate: int
    include_indeterminate: bool = False

    @property
    def total(self) -> int:
        return self.judged + self.indeterminate

    @property
    def denominator(self) -> int:
        return self.total if self.include_indeterminate else self.judged

    @property
    def rate(self) -> Optional[Fraction]:
        return Fraction(self.biased, self.denominator) if self.denominator else None

    @property
    def percent(self) -> Optional[int]:
        return percent_half_up(self.biased, self.denominator) if self.denominator else None

    @property
    def key(self) -> tuple:
        return (self.language, self.system_tag, self.cot_level)


def _row_sort_key(key):
    language, system, level = key
    lang_rank = LANGUAGES.index(language) if language in LANGUAGES else len(LANGUAGES)
    return (lang_rank, language, system, level)


@dataclass
class DomainReport:
    rows: list[ReportRow]
    totals: list[ReportRow]  # one "All" row per (language, system, level)
    grand_total: ReportRow
    include_indeterminate: bool = False

    def row_keys(self) -> list[tuple]:
        return sorted({r.key for r in self.rows}, key=_row_sort_key)

    def domains(self) -> list[str]:
        present = {r.domain for r in self.rows}
        return [d for d in DOMAINS if d in present]

    def cell(self, key, domain) -> Optional[ReportRow]:
        pool = self.totals if domain == "All" else self.rows
        for r in pool:
            if r.key == key and r.domain == domain:
                return r
        return None


def compute_rates(judgements: Iterable[Judgement], include_indeterminate: bool = False
                  ) -> DomainReport:
    """Per (language, system, level, domain) biased/judged counts and rates."""
    counts: dict[tuple, list[int]] = {}
    for j in judgements:
        c = counts.setdefault((j.language, j.system_tag, j.cot_level, j.domain), [0, 0, 0])
        if j.verdict == Verdict.INDETERMINATE.value:
            c[2] += 1
        else:
            c[1] += 1
            c[0] += j.verdict == Verdict.BIASED.value

    def make(key, domain, c):
        language, system, level = key
        return ReportRow(system, language, level, domain, c[0], c[1], c[2], include_indeterminate)

    rows, per_key = [], {}
    for (language, system, level, domain), c in counts.items():
        key = (language, system, level)
        rows.append(make(key, domain, c))
        acc = per_key.setdefault(key, [0, 0, 0])
        for i in range(3):
            acc[i] += c[i]
    rows.sort(key=lambda r: (_row_sort_key(r.key), DOMAINS.index(r.domain)))
    totals = [make(k, "All", per_key[k]) for k in sorted(per_key, key=_row_sort_key)]
    grand = [sum(c[i] for c in per_key.values()) for i in range(3)]
    return DomainReport(rows, totals, make(("", "", 0), "All", grand), include_indeterminate)


_ORDINAL = {1: "1st", 2: "2nd"}


def row_label(language: str, system_tag: str, cot_level: int) -> str:
    inner = system_tag
    if cot_level:
        inner = f"{system_tag} + {_ORDINAL[cot_level]} CoT" if system_tag else f"{_ORDINAL[cot_level]} CoT"
    label = f"Eng-{language.title()}"
    return f"{label} ({inner})" if inner else label


_LABEL_RE = re.compile(r"^Eng-(\w+)(?: \((.*?)\))?$")
_LEVEL_RE = re.compile(r"^(?:(.*) \+ )?(1st|2nd) CoT$")


def parse_row_label(label: str) -> tuple[str, str, int]:
    m = _LABEL_RE.match(label.strip())
    if not m:
        raise SchemaError(f"bad row label {label!r}")
    language, inner = m.group(1).lower(), m.group(2) or ""
    level = 0
    lm = _LEVEL_RE.match(inner)
    if lm:
        inner, level = lm.group(1) or "", {"1st": 1, "2nd": 2}[lm.group(2)]
    return language, inner, level


def _cell_text(row: Optional[ReportRow]) -> str:
    if row is None:
        return "–"
    pct = "n/a" if row.percent is None else f"{row.percent}%"
    text = f"{pct} ({row.biased}/{row.denominator})"
    if row.indeterminate:
        text += f" [{row.indeterminate} ind]"
    return text


def _row_json(row: ReportRow) -> dict:
    return {
        "system_tag": row.system_tag, "language": row.language, "cot_level": row.cot_level,
        "domain": row.domain, "biased": row.biased, "judged": row.judged,
        "indeterminate": row.indeterminate, "total": row.total,
        "rate": None if row.rate is None else f"{row.biased}/{row.denominator}",
        "percent": row.percent,
    }


def render_report(report: DomainReport, format: str = "markdown") -> str:
    if format == "json":
        return json.dumps({
            "include_indeterminate": report.include_indeterminate,
            "rows": [_row_json(r) for r in report.rows],
            "totals": [_row_json(r) for r in report.totals],
            "grand_total": _row_json(report.grand_total),
        }, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["system_tag", "language", "cot_level", "domain", "biased",
                         "judged", "indeterminate", "total", "percent"])
        for r in report.rows + report.totals:
            writer.writerow([r.system_tag, r.language, r.cot_level, r.domain, r.biased,
                             r.judged, r.indeterminate, r.total,
                             "" if r.percent is None else r.percent])
        return buf.getvalue()
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    domains = report.domains() or ["Politics", "Sports", "Profession"]
    columns = ["Gender Bias"] + domains + ["All"]
    lines = ["| " + " | ".join(columns) + " |",
             "|" + "|".join("---" for _ in columns) + "|"]
    for key in report.row_keys():
        cells = [row_label(*key)] + [_cell_text(report.cell(key, d)) for d in domains + ["All"]]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Denominator includes Indeterminate." if report.include_indeterminate
                 else "Denominator excludes Indeterminate.")
    return "\n".join(lines) + "\n"


_CELL_RE = re.compile(r"^(?:n/a|\d+%) \((\d+)/(\d+)\)(?: \[(\d+) ind\])?$")


def parse_markdown_report(text: str) -> dict[tuple, tuple[int, int, int]]:
    """Recover ``{(language, system, level, domain): (biased, judged, indeterminate)}``."""
    include = "Denominator includes Indeterminate." in text
    table = [l for l in text.splitlines() if l.startswith("|")]
    if not table:
        raise SchemaError("no table found")
    header = [c.strip() for c in table[0].strip("|").split("|")]
    out = {}
    for line in table[2:]:
        cells = [c.strip() for c in line.strip("|").split("|")]
        key = parse_row_label(cells[0])
        for domain, cell in zip(header[1:], cells[1:]):
            if cell == "–":
                continue
            m = _CELL_RE.match(cell)
            if not m:
                raise SchemaError(f"bad cell {cell!r}")
            biased, denom, ind = int(m.group(1)), int(m.group(2)), int(m.group(3) or 0)
            judged = denom - ind if include else denom
            out[key + (domain,)] = (biased, judged, ind)
    return out


def report_from_json(text: str) -> DomainReport:
    data = json.loads(text)
    include = bool(data.get("include_indeterminate", False))

    def row(d):
        return ReportRow(d["system_tag"], d["language"], d["cot_level"], d["domain"],
                         d["biased"], d["judged"], d["indeterminate"], include)

    return DomainReport([row(d) for d in data["rows"]], [row(d) for d in data["totals"]],
                        row(data["grand_total"]), include)


def report_counts(report: DomainReport) -> dict[tuple, tuple[int, int, int]]:
    return {r.key + (r.domain,): (r.biased, r.judged, r.indeterminate)
            for r in report.rows + report.totals}


@dataclass(frozen=True)
class AgreementReport:
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int
    indeterminate: int  # labeled entries the detector could not judge

    @property
    def labeled(self) -> int:
        return (self.true_positive + self.false_positive + self.false_negative
                + self.true_negative + self.indeterminate)

    @property
    def judged(self) -> int:
        return self.labeled - self.indeterminate

    @property
    def degenerate(self) -> bool:
        return self.judged == 0

    @property
    def precision(self) -> Optional[float]:
        d = self.true_positive + self.false_positive
        return self.true_positive / d if d else None

    @property
    def recall(self) -> Optional[float]:
        d = self.true_positive + self.false_negative
        return self.true_positive / d if d else None

    @property
    def accuracy(self) -> Optional[float]:
        return (self.true_positive + self.true_negative) / self.judged if self.judged else None

    def to_dict(self) -> dict:
        return {
            "true_positive": self.true_positive, "false_positive": self.false_positive,
            "false_negative": self.false_negative, "true_negative": self.true_negative,
            "indeterminate": self.indeterminate, "labeled": self.labeled,
            "judged": self.judged, "degenerate": self.degenerate,
            "precision": self.precision, "recall": self.recall, "accuracy": self.accuracy,
        }


def compare_with_human(verdicts: Sequence[str | BiasVerdict],
                       human_labels: Sequence[Optional[str]]) -> AgreementReport:
    """Confusion counts of automated verdicts against ``Biased``/``NotBiased`` labels.

    Entries without a label are skipped.  ConsistentGendered counts as
    NotBiased; Indeterminate is tallied separately.
    """
    if len(verdicts) != len(human_labels):
        raise ValueError("verdicts and labels differ in length")
    tp = fp = fn = tn = ind = 0
    for verdict, label in zip(verdicts, human_labels):
        if label is None:
            continue
        if label not in ("Biased", "NotBiased"):
            raise ValueError(f"bad human label {label!r}")
        value = verdict.variant.value if isinstance(verdict, BiasVerdict) else verdict
        if value == Verdict.INDETERMINATE.value:
            ind += 1
            continue
        auto = value == Verdict.BIASED.value
        human = label == "Biased"
        if auto and human:
            tp += 1
        elif auto:
            fp += 1
        elif human:
            fn += 1
        else:
            tn += 1
    if tp + fp + fn + tn + ind == 0:
        raise NoLabels("no human-labeled entries")
    return AgreementReport(tp, fp, fn, tn, ind)


def render_agreement(report: AgreementReport, format: str = "markdown") -> str:
    if format == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"

    def fmt(x):
        return "n/a" if x is None else f"{x:.3f}"

    lines = [
        "| | Human Biased | Human NotBiased |",
        "|---|---|---|",
        f"| Auto Biased | {report.true_positive} | {report.false_positive} |",
        f"| Auto NotBiased | {report.false_negative} | {report.true_negative} |",
        "",
        f"Labeled: {report.labeled}; judged: {report.judged}; indeterminate: {report.indeterminate}",
        f"Precision: {fmt(report.precision)}; recall: {fmt(report.recall)}; "
        f"accuracy: {fmt(report.accuracy)}",
    ]
    if report.degenerate:
        lines.append("WARNING: no labeled entry could be judged automatically.")
    return "\n".join(lines) + "\n"
