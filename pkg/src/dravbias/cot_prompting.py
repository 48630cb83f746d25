"""Base and Chain-of-Thought correction prompts, and the re-prompting loop.

Level 1 names the gendered verb suffix and asks for the neutral ``-ru``;
level 2 (Telugu only) targets the gendered role noun with its masculine,
feminine and plural forms.  The detector, not the model, decides whether
another level is needed.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Protocol

from .bias_detector import BiasVerdict, Lexicons, TranslationPair, Verdict, default_lexicons, detect_bias
from .errors import BackendError, NoLexiconEntry, NoSuffixEvidence
from .morphology import GenderMarking, LexiconEntry, match_suffix
from .script_core import KANNADA, TELUGU, normalize_language

PLACEHOLDERS = frozenset({"sentence", "suffix", "marking", "masc", "fem", "plural", "language"})
MAX_LEVEL = {TELUGU: 2, KANNADA: 1}

_MARKING_WORDS = {
    GenderMarking.MASCULINE_SINGULAR: "masculine",
    GenderMarking.FEMININE_SINGULAR: "feminine",
    GenderMarking.NON_MASCULINE_SINGULAR: "feminine",
}


class Templates:
    """Prompt templates keyed by (language, level).

    Loaded from ``<language>_<level>.txt`` files; the bundled set lives in
    ``dravbias/data/templates``.
    """

    def __init__(self, texts: Mapping[tuple[str, int], str]):
        self._texts = dict(texts)
        for key, text in self._texts.items():
            unknown = set(template_fields(text)) - PLACEHOLDERS
            if unknown:
                raise ValueError(f"template {key} uses unknown placeholders {sorted(unknown)}")

    @classmethod
    def from_dir(cls, path=None) -> "Templates":
        root = Path(path) if path else resources.files("dravbias.data").joinpath("templates")
        texts = {}
        for lang, top in MAX_LEVEL.items():
            for level in range(top + 1):
                f = root.joinpath(f"{lang}_{level}.txt")
                if f.is_file():
                    texts[(lang, level)] = f.read_text(encoding="utf-8").rstrip("\n")
        return cls(texts)

    def get(self, language: str, level: int) -> str:
        try:
            return self._texts[(language, level)]
        except KeyError:
            raise ValueError(f"no template for {language} level {level}") from None


_TEMPLATES: Templates | None = None


def default_templates() -> Templates:
    global _TEMPLATES
    if _TEMPLATES is None:
        _TEMPLATES = Templates.from_dir()
    return _TEMPLATES


def template_fields(text: str) -> list[str]:
    return [name for _, name, _, _ in string.Formatter().parse(text) if name]


@dataclass(frozen=True)
class PromptPlan:
    level: int
    language: str
    text: str
    slots: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.level == 2 and self.language != TELUGU:
            raise ValueError("level-2 prompts exist only for Telugu")
        for name, value in self.slots.items():
            if value not in self.text:
                raise ValueError(f"slot {name}={value!r} missing from prompt text")


def render(language: str, level: int, slots: Mapping[str, str],
           templates: Templates | None = None) -> PromptPlan:
    template = (templates or default_templates()).get(language, level)
    used = template_fields(template)
    missing = [name for name in used if name not in slots]
    if missing:
        raise ValueError(f"missing slot values: {missing}")
    filled = {name: str(slots[name]) for name in used}
    return PromptPlan(level, language, template.format_map(filled), filled)


def build_base_prompt(sentence_en: str, language: str,
                      templates: Templates | None = None) -> PromptPlan:
    if not sentence_en.strip():
        raise ValueError("empty source sentence")
    language = normalize_language(language)
    return render(language, 0, {"sentence": sentence_en.strip(),
                                "language": language.title()}, templates)


def _gendered_suffix(verdict: BiasVerdict):
    analysis = verdict.analysis
    if analysis is not None:
        hit = analysis.predicate_hit()
        if hit is not None and hit.kind == "suffix" and hit.marking.gendered_singular:
            return hit.rule.suffix, hit.marking
        return None
    for ev in reversed(verdict.evidence):
        if not ev.feature.startswith("noun-") and ev.marking.gendered_singular:
            return ev.feature, ev.marking
    return None


def build_cot1_prompt(draft_translation: str, verdict: BiasVerdict, language: str,
                      templates: Templates | None = None) -> PromptPlan:
    language = normalize_language(language)
    if verdict.variant is not Verdict.BIASED:
        raise ValueError(f"level-1 prompt needs a Biased verdict, got {verdict.variant.value}")
    found = _gendered_suffix(verdict)
    if found is None:
        raise NoSuffixEvidence("no gendered predicate suffix in the verdict evidence")
    suffix, marking = found
    return render(language, 1, {
        "sentence": draft_translation.strip(),
        "suffix": suffix,
        "marking": _MARKING_WORDS[marking],
        "language": language.title(),
    }, templates)


def build_cot2_prompt(draft_translation: str, verdict: BiasVerdict,
                      lexicon_entry: Optional[LexiconEntry],
                      templates: Templates | None = None) -> PromptPlan:
    if lexicon_entry is None:
        raise NoLexiconEntry("role noun not in the lexicon; cannot build a level-2 prompt")
    if lexicon_entry.language != TELUGU:
        raise ValueError("level-2 prompts exist only for Telugu")
    masc = lexicon_entry.masculine_form
    matched = match_suffix(masc, TELUGU)
    if matched is not None and matched[0].marking is GenderMarking.MASCULINE_SINGULAR:
        suffix = matched[0].suffix
    else:
        found = _gendered_suffix(verdict)
        suffix = found[0] if found else masc
    return render(TELUGU, 2, {
        "sentence": draft_translation.strip(),
        "suffix": suffix,
        "marking": "masculine",
        "masc": masc,
        "fem": lexicon_entry.feminine_form,
        "plural": lexicon_entry.plural_or_honorific_form,
        "language": "Telugu",
    }, templates)


class Backend(Protocol):
    def translate(self, plan: PromptPlan, pair_id: str) -> str: ...


@dataclass(frozen=True)
class Attempt:
    plan: PromptPlan
    translation: Optional[str]
    verdict: Optional[BiasVerdict]


@dataclass
class MitigationResult:
    source_en: str
    language: str
    attempts: list[Attempt]
    stop_reason: str

    @property
    def levels_used(self) -> int:
        return self.attempts[-1].plan.level if self.attempts else 0

    @property
    def final_translation(self) -> Optional[str]:
        return self.attempts[-1].translation if self.attempts else None

    @property
    def final_verdict(self) -> Optional[BiasVerdict]:
        return self.attempts[-1].verdict if self.attempts else None


def _role_entry(verdict: BiasVerdict, lexicons: Lexicons, language: str) -> Optional[LexiconEntry]:
    if verdict.analysis is not None:
        hits = verdict.analysis.lexicon_hits()
        for hit in hits:
            if hit.marking.gendered_singular:
                return hit.entry
        if hits:
            return hits[0].entry
    source = verdict.source_gender
    if source is not None and source.subject:
        return lexicons.roles.by_role(source.subject, language)
    return None


def mitigate(sentence_en: str, language: str, backend: Backend, max_level: int = 2,
             lexicons: Lexicons | None = None, *, pair_id: str = "",
             domain: str = "Other", system_tag: str = "",
             templates: Templates | None = None) -> MitigationResult:
    """Translate, judge, and re-prompt with the next CoT level while Biased.

    At most ``max_level + 1`` backend calls.  A backend failure is recorded as
    an attempt without translation and re-raised with ``exc.result`` set.
    """
    language = normalize_language(language)
    if max_level not in (0, 1, 2) or max_level > MAX_LEVEL[language]:
        raise ValueError(f"max_level {max_level} not allowed for {language}")
    lex = lexicons or default_lexicons()
    plan = build_base_prompt(sentence_en, language, templates)
    attempts: list[Attempt] = []
    while True:
        try:
            text = backend.translate(plan, pair_id)
        except BackendError as exc:
            attempts.append(Attempt(plan, None, None))
            exc.result = MitigationResult(sentence_en, language, attempts, f"backend error: {exc}")
            raise
        pair = TranslationPair(pair_id or "_", sentence_en, text, language,
                               domain=domain, cot_level=plan.level, system_tag=system_tag)
        verdict = detect_bias(pair, lex)
        attempts.append(Attempt(plan, text, verdict))
        if verdict.variant is not Verdict.BIASED:
            reason = "resolved" if verdict.variant is not Verdict.INDETERMINATE else "indeterminate"
            return MitigationResult(sentence_en, language, attempts, reason)
        if plan.level >= max_level:
            return MitigationResult(sentence_en, language, attempts, "max level reached")
        try:
            if plan.level == 0:
                plan = build_cot1_prompt(text, verdict, language, templates)
            else:
                plan = build_cot2_prompt(text, verdict, _role_entry(verdict, lex, language), templates)
        except (NoSuffixEvidence, NoLexiconEntry) as exc:
            return MitigationResult(sentence_en, language, attempts, f"{type(exc).__name__}: {exc}")
