"""Gender-inflection analysis of romanized Telugu and Kannada.

Two sources of evidence are combined: final-suffix rules (``-ḍu``, ``-di``,
``-ru`` ...) matched at grapheme level, and a lexicon of gendered role nouns
(``vaidyuḍu`` / ``vaidyurālu`` / ``vaidyulu``).  The sentence-final token is
taken as the predicate since both languages are verb-final.
"""
from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple, Optional, Sequence

from .errors import EmptySentence, SchemaError
from .script_core import (
    KANNADA,
    TELUGU,
    ScriptTag,
    canonicalize,
    detect_script,
    normalize_language,
    normalize_roman,
    segment_graphemes,
)


class GenderMarking(enum.Enum):
    MASCULINE_SINGULAR = "MasculineSingular"
    NON_MASCULINE_SINGULAR = "NonMasculineSingular"  # Telugu: feminine + non-human
    FEMININE_SINGULAR = "FeminineSingular"  # Kannada
    NEUTER_SINGULAR = "NeuterSingular"  # Kannada
    HUMAN_PLURAL = "HumanPlural"
    NON_HUMAN_PLURAL = "NonHumanPlural"
    UNMARKED = "Unmarked"

    @property
    def gendered_singular(self) -> bool:
        return self in (GenderMarking.MASCULINE_SINGULAR,
                        GenderMarking.FEMININE_SINGULAR,
                        GenderMarking.NON_MASCULINE_SINGULAR)


_LANGUAGE_ONLY = {
    GenderMarking.NON_MASCULINE_SINGULAR: TELUGU,
    GenderMarking.FEMININE_SINGULAR: KANNADA,
    GenderMarking.NEUTER_SINGULAR: KANNADA,
}

PREDICATE, NOUN, EITHER = "Predicate", "Noun", "Either"


@dataclass(frozen=True)
class SuffixRule:
    language: str
    suffix: str
    marking: GenderMarking
    applies_to: str = EITHER
    min_stem_graphemes: int = 2
    provenance: str = ""

    def __post_init__(self):
        if not self.suffix:
            raise ValueError("empty suffix")
        if self.min_stem_graphemes < 2:
            raise ValueError("min_stem_graphemes must be >= 2")
        if self.applies_to not in (PREDICATE, NOUN, EITHER):
            raise ValueError(f"bad applies_to {self.applies_to!r}")
        only = _LANGUAGE_ONLY.get(self.marking)
        if only and only != self.language:
            raise ValueError(f"{self.marking.value} is not a {self.language} marking")

    @property
    def graphemes(self) -> tuple[str, ...]:
        return segment_graphemes(unicodedata.normalize("NFC", self.suffix)).clusters


class RuleSet:
    """Suffix rules indexed by language, longest suffix first."""

    def __init__(self, rules: Sequence[SuffixRule]):
        by_lang: dict[str, list[SuffixRule]] = {}
        for rule in rules:
            bucket = by_lang.setdefault(rule.language, [])
            if any(r.suffix == rule.suffix for r in bucket):
                raise ValueError(f"duplicate {rule.language} suffix {rule.suffix!r}")
            bucket.append(rule)
        for bucket in by_lang.values():
            bucket.sort(key=lambda r: len(r.graphemes), reverse=True)
        self._by_lang = by_lang

    def for_language(self, language: str) -> list[SuffixRule]:
        return self._by_lang.get(language, [])

    def __iter__(self):
        for bucket in self._by_lang.values():
            yield from bucket


def parse_rules(text: str) -> RuleSet:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        cols = raw.split("\t")
        if len(cols) < 5:
            raise SchemaError(f"expected >= 5 columns, got {len(cols)}", lineno)
        try:
            rules.append(SuffixRule(
                language=normalize_language(cols[0]),
                suffix=unicodedata.normalize("NFC", cols[1].strip()),
                marking=GenderMarking(cols[2].strip()),
                applies_to=cols[3].strip(),
                min_stem_graphemes=int(cols[4]),
                provenance=cols[5].strip() if len(cols) > 5 else "",
            ))
        except ValueError as exc:
            raise SchemaError(str(exc), lineno) from exc
    return RuleSet(rules)


@lru_cache(maxsize=None)
def default_rules() -> RuleSet:
    return parse_rules(resources.files("dravbias.data").joinpath(
        "suffix_rules.tsv").read_text(encoding="utf-8"))


def match_suffix(token: str, language: str, rules: RuleSet | None = None,
                 position: str | None = None) -> Optional[tuple[SuffixRule, str]]:
    """Longest suffix rule of *language* that fits *token*, with the stem left over.

    ``position`` (``"Predicate"`` or ``"Noun"``) restricts rules by their
    ``applies_to``; ``None`` considers all of them.
    """
    language = normalize_language(language)
    rules = rules or default_rules()
    clusters = segment_graphemes(unicodedata.normalize("NFC", token)).clusters
    for rule in rules.for_language(language):
        if position is not None and rule.applies_to not in (position, EITHER):
            continue
        suf = rule.graphemes
        if len(clusters) - len(suf) < rule.min_stem_graphemes:
            continue
        if clusters[-len(suf):] == suf:
            return rule, "".join(clusters[:-len(suf)])
    return None


MASCULINE, FEMININE, PLURAL = "masculine", "feminine", "plural"


@dataclass(frozen=True)
class LexiconEntry:
    language: str
    english_role: str
    masculine_form: str
    feminine_form: str
    plural_or_honorific_form: str
    provenance: str = ""

    def __post_init__(self):
        forms = {self.masculine_form, self.feminine_form, self.plural_or_honorific_form}
        if len(forms) != 3:
            raise ValueError(f"forms of {self.english_role!r} are not distinct")

    def form(self, kind: str) -> str:
        return {MASCULINE: self.masculine_form, FEMININE: self.feminine_form,
                PLURAL: self.plural_or_honorific_form}[kind]


class RoleLexicon:
    def __init__(self, entries: Sequence[LexiconEntry] = ()):
        self.entries: list[LexiconEntry] = []
        self._index: dict[tuple[str, str], tuple[LexiconEntry, str]] = {}
        for entry in entries:
            self.add(entry)

    def add(self, entry: LexiconEntry) -> None:
        self.entries.append(entry)
        for kind in (MASCULINE, FEMININE, PLURAL):
            key = (entry.language, unicodedata.normalize("NFC", entry.form(kind)))
            self._index[key] = (entry, kind)

    def lookup(self, token: str, language: str) -> Optional[tuple[LexiconEntry, str]]:
        return self._index.get((language, unicodedata.normalize("NFC", token)))

    def by_role(self, english_role: str, language: str) -> Optional[LexiconEntry]:
        for entry in self.entries:
            if entry.language == language and entry.english_role == english_role:
                return entry
        return None


def parse_lexicon(text: str) -> RoleLexicon:
    lex = RoleLexicon()
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        cols = [c.strip() for c in raw.split("\t")]
        if len(cols) < 5:
            raise SchemaError(f"expected >= 5 columns, got {len(cols)}", lineno)
        try:
            lex.add(LexiconEntry(
                normalize_language(cols[0]), cols[1].lower(),
                *(unicodedata.normalize("NFC", c) for c in cols[2:5]),
                provenance=cols[5] if len(cols) > 5 else "",
            ))
        except ValueError as exc:
            raise SchemaError(str(exc), lineno) from exc
    return lex


@lru_cache(maxsize=None)
def default_lexicon() -> RoleLexicon:
    return parse_lexicon(resources.files("dravbias.data").joinpath(
        "role_lexicon.tsv").read_text(encoding="utf-8"))


def lookup_noun(token: str, language: str, lexicon: RoleLexicon | None = None
                ) -> Optional[tuple[LexiconEntry, str]]:
    lexicon = lexicon if lexicon is not None else default_lexicon()
    return lexicon.lookup(token, normalize_language(language))


def lexicon_marking(kind: str, language: str) -> GenderMarking:
    if kind == MASCULINE:
        return GenderMarking.MASCULINE_SINGULAR
    if kind == FEMININE:
        return (GenderMarking.NON_MASCULINE_SINGULAR if language == TELUGU
                else GenderMarking.FEMININE_SINGULAR)
    return GenderMarking.HUMAN_PLURAL


class Evidence(NamedTuple):
    token: str
    feature: str  # the suffix ("ḍu") or "noun-<form>"
    marking: GenderMarking


@dataclass(frozen=True)
class Hit:
    index: int
    token: str
    kind: str  # "suffix" | "lexicon" | "pair"
    marking: GenderMarking
    confident: bool
    rule: SuffixRule | None = None
    stem: str | None = None
    entry: LexiconEntry | None = None
    form: str | None = None

    @property
    def feature(self) -> str:
        if self.kind == "suffix":
            return self.rule.suffix
        if self.kind == "pair":
            return "noun-pair"
        return f"noun-{self.form}"

    def evidence(self) -> Evidence:
        return Evidence(self.token, self.feature, self.marking)


@dataclass(frozen=True)
class InflectionAnalysis:
    language: str
    tokens: tuple[str, ...]
    hits: tuple[Optional[Hit], ...]
    predicate_index: int
    sentence_marking: GenderMarking
    evidence: tuple[Evidence, ...]

    @property
    def predicate(self) -> str:
        return self.tokens[self.predicate_index]

    def lexicon_hits(self) -> list[Hit]:
        return [h for h in self.hits if h is not None and h.kind in ("lexicon", "pair")]

    def predicate_hit(self) -> Optional[Hit]:
        return self.hits[self.predicate_index]


_HYPHENS = "-‐‑–"


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start])[0] in "PS":
        start += 1
    while end > start and unicodedata.category(token[end - 1])[0] in "PS":
        end -= 1
    return token[start:end]


def tokenize(sentence: str) -> list[str]:
    """Whitespace tokens, lowercased, edge punctuation and inner hyphens removed.

    ``a / b`` is joined to ``a/b`` so gender-alternative pairs stay one token.
    """
    text = normalize_roman(sentence).lower()
    raw = text.split()
    joined: list[str] = []
    i = 0
    while i < len(raw):
        if i + 2 < len(raw) and raw[i + 1] == "/":
            joined.append(raw[i] + "/" + raw[i + 2])
            i += 3
            continue
        joined.append(raw[i])
        i += 1
    tokens = []
    for tok in joined:
        parts = [_strip_punct(p) for p in tok.split("/")]
        tok = "/".join(p for p in parts if p)
        for h in _HYPHENS:
            tok = tok.replace(h, "")
        if tok:
            tokens.append(tok)
    return tokens


def _pair_hit(index, token, language, lexicon) -> Optional[Hit]:
    parts = token.split("/")
    if len(parts) < 2:
        return None
    found = [lexicon.lookup(p, language) for p in parts]
    if not all(found):
        return None
    entries = {id(e) for e, _ in found}
    kinds = {k for _, k in found}
    if len(entries) == 1 and {MASCULINE, FEMININE} <= kinds:
        return Hit(index, token, "pair", GenderMarking.HUMAN_PLURAL, True,
                   entry=found[0][0], form="pair")
    return None


def _token_hit(index, token, language, is_predicate, lexicon, rules) -> Optional[Hit]:
    pair = _pair_hit(index, token, language, lexicon)
    if pair is not None:
        return pair
    if "/" in token:
        token = token.split("/")[-1]
    found = lexicon.lookup(token, language)
    if found is not None:
        entry, kind = found
        return Hit(index, token, "lexicon", lexicon_marking(kind, language), True,
                   entry=entry, form=kind)
    position = PREDICATE if is_predicate else NOUN
    matched = match_suffix(token, language, rules, position=position)
    if matched is None:
        return None
    rule, stem = matched
    return Hit(index, token, "suffix", rule.marking, is_predicate, rule=rule, stem=stem)


def classify_sentence(hits: Sequence[Optional[Hit]], predicate_index: int) -> GenderMarking:
    """Aggregate token hits into one sentence-level marking.

    Only confident hits count: the predicate's suffix and every lexicon noun.
    Suffix hits on other tokens are kept as low-confidence evidence only.
    """
    decisive = [h for h in hits if h is not None and h.confident]
    markings = {h.marking for h in decisive}
    pred = hits[predicate_index] if 0 <= predicate_index < len(hits) else None
    M = GenderMarking
    if M.MASCULINE_SINGULAR in markings:
        return M.MASCULINE_SINGULAR
    if M.FEMININE_SINGULAR in markings:
        return M.FEMININE_SINGULAR
    if M.NON_MASCULINE_SINGULAR in markings:
        return M.NON_MASCULINE_SINGULAR
    if M.HUMAN_PLURAL in markings:
        return M.HUMAN_PLURAL
    if pred is not None and pred.confident and pred.marking is M.NON_HUMAN_PLURAL:
        return M.NON_HUMAN_PLURAL
    if pred is not None and pred.confident and pred.marking is M.NEUTER_SINGULAR:
        return M.NEUTER_SINGULAR
    return M.UNMARKED


def analyze_sentence(sentence: str, language: str, lexicon: RoleLexicon | None = None,
                     rules: RuleSet | None = None, predicate_index: int | None = None
                     ) -> InflectionAnalysis:
    language = normalize_language(language)
    lexicon = lexicon if lexicon is not None else default_lexicon()
    if detect_script(sentence) not in (ScriptTag.ROMANIZED, ScriptTag.UNKNOWN):
        sentence, _ = canonicalize(sentence, language)
    tokens = tokenize(sentence)
    if not tokens:
        raise EmptySentence("sentence has no tokens")
    if predicate_index is None:
        predicate_index = len(tokens) - 1
    elif not -len(tokens) <= predicate_index < len(tokens):
        raise IndexError(f"predicate_index {predicate_index} out of range")
    predicate_index %= len(tokens)
    hits = tuple(
        _token_hit(i, tok, language, i == predicate_index, lexicon, rules)
        for i, tok in enumerate(tokens)
    )
    evidence = tuple(h.evidence() for h in hits if h is not None and h.confident)
    return InflectionAnalysis(
        language=language,
        tokens=tuple(tokens),
        hits=hits,
        predicate_index=predicate_index,
        sentence_marking=classify_sentence(hits, predicate_index),
        evidence=evidence,
    )
