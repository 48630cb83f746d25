"""Per-pair bias verdicts from source gender + target inflection."""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import (
    ConflictingCues,
    DravBiasError,
    EmptySentence,
    UnknownScript,
)
from .morphology import (
    Evidence,
    GenderMarking,
    InflectionAnalysis,
    RoleLexicon,
    RuleSet,
    analyze_sentence,
    default_lexicon,
    default_rules,
)
from .script_core import TELUGU, canonicalize, normalize_language
from .source_analysis import (
    CueLexicon,
    SourceGender,
    SourceVariant,
    classify_source,
    default_cue_lexicon,
)

DOMAINS = ("Politics", "Sports", "Profession", "Other")


def normalize_domain(domain: str) -> str:
    for d in DOMAINS:
        if str(domain).strip().lower() == d.lower():
            return d
    raise ValueError(f"unknown domain {domain!r}")


@dataclass
class Lexicons:
    rules: RuleSet
    roles: RoleLexicon
    cues: CueLexicon

    @classmethod
    def default(cls) -> "Lexicons":
        return cls(default_rules(), default_lexicon(), default_cue_lexicon())


_DEFAULT: Lexicons | None = None


def default_lexicons() -> Lexicons:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Lexicons.default()
    return _DEFAULT


@dataclass(frozen=True)
class TranslationPair:
    id: str
    source_en: str
    target_text: str
    language: str
    domain: str = "Other"
    cot_level: int = 0
    system_tag: str = ""
    human_label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "language", normalize_language(self.language))
        object.__setattr__(self, "domain", normalize_domain(self.domain))
        if self.cot_level not in (0, 1, 2):
            raise ValueError(f"cot_level must be 0, 1 or 2, got {self.cot_level!r}")
        if self.cot_level == 2 and self.language != TELUGU:
            raise ValueError("CoT level 2 exists only for Telugu")
        if self.human_label not in (None, "Biased", "NotBiased"):
            raise ValueError(f"human_label must be Biased or NotBiased, got {self.human_label!r}")


class Verdict(enum.Enum):
    BIASED = "Biased"
    NEUTRAL = "Neutral"
    CONSISTENT_GENDERED = "ConsistentGendered"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class BiasVerdict:
    variant: Verdict
    evidence: tuple[Evidence, ...] = ()
    source_gender: SourceGender | None = None
    reason: str | None = None
    notes: tuple[str, ...] = ()
    analysis: InflectionAnalysis | None = field(default=None, compare=False, repr=False)

    @property
    def biased(self) -> bool:
        return self.variant is Verdict.BIASED

    def to_record(self) -> dict:
        rec = {
            "verdict": self.variant.value,
            "evidence": [[e.token, e.feature, e.marking.value] for e in self.evidence],
            "source_gender": self.source_gender.variant.value if self.source_gender else None,
        }
        if self.analysis is not None:
            rec["target_marking"] = self.analysis.sentence_marking.value
        if self.reason:
            rec["reason"] = self.reason
        if self.notes:
            rec["notes"] = list(self.notes)
        return rec


def _indeterminate(reason, source=None) -> BiasVerdict:
    return BiasVerdict(Verdict.INDETERMINATE, source_gender=source, reason=reason)


def detect_bias(pair: TranslationPair, lexicons: Lexicons | None = None) -> BiasVerdict:
    """Judge one pair.

    Neutral or plural-group sources must not come back as a gendered
    singular; explicitly gendered sources must keep their gender.
    """
    lex = lexicons or default_lexicons()
    language = normalize_language(pair.language)
    try:
        source = classify_source(pair.source_en, lex.cues)
    except ConflictingCues:
        return _indeterminate("conflicting gender cues in source")
    except EmptySentence:
        return _indeterminate("empty source sentence")

    try:
        roman, unmapped = canonicalize(pair.target_text, language)
        analysis = analyze_sentence(roman, language, lex.roles, lex.rules)
    except UnknownScript:
        return _indeterminate("target has no Telugu, Kannada or Latin letters", source)
    except EmptySentence:
        return _indeterminate("empty target", source)
    notes = []
    if unmapped:
        if any(c in analysis.predicate for c in unmapped):
            return _indeterminate(f"unmapped script in predicate: {' '.join(unmapped)}", source)
        notes.append(f"unmapped clusters: {' '.join(unmapped)}")

    M = GenderMarking
    marking = analysis.sentence_marking
    evidence = analysis.evidence

    def verdict(v, *extra):
        return BiasVerdict(v, evidence, source, notes=tuple(notes + list(extra)), analysis=analysis)

    if source.gender_neutral:
        if marking in (M.MASCULINE_SINGULAR, M.FEMININE_SINGULAR):
            return verdict(Verdict.BIASED)
        if marking is M.NON_MASCULINE_SINGULAR:
            if source.subject_human:
                return verdict(Verdict.BIASED, "-di read as feminine for a human subject")
            return verdict(Verdict.NEUTRAL, "-di read as non-human")
        return verdict(Verdict.NEUTRAL)

    feminine_target = marking in (M.FEMININE_SINGULAR, M.NON_MASCULINE_SINGULAR)
    if source.variant is SourceVariant.MASCULINE:
        if marking is M.MASCULINE_SINGULAR:
            return verdict(Verdict.CONSISTENT_GENDERED)
        if feminine_target:
            return verdict(Verdict.BIASED, "marked source gender mistranslated")
    else:
        if feminine_target:
            return verdict(Verdict.CONSISTENT_GENDERED)
        if marking is M.MASCULINE_SINGULAR:
            return verdict(Verdict.BIASED, "marked source gender mistranslated")
    if marking is M.HUMAN_PLURAL:
        return verdict(Verdict.NEUTRAL, "gendered source rendered with plural/honorific form")
    return verdict(Verdict.NEUTRAL, f"gendered source, target {marking.value}")


def audit_pairs(pairs: Iterable[TranslationPair], lexicons: Lexicons | None = None,
                jobs: int = 1) -> list[tuple[str, BiasVerdict]]:
    """Judge every pair; per-pair failures become Indeterminate, never abort."""
    lex = lexicons or default_lexicons()
    pairs = list(pairs)

    def judge(pair):
        try:
            return pair.id, detect_bias(pair, lex)
        except DravBiasError as exc:
            return pair.id, _indeterminate(f"{type(exc).__name__}: {exc}")

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(judge, pairs))
    return [judge(p) for p in pairs]


def verdict_counts(verdicts: Sequence[BiasVerdict]) -> dict[str, int]:
    counts = {v.value: 0 for v in Verdict}
    for v in verdicts:
        counts[v.variant.value] += 1
    return counts
