"""Lexical gender classification of English source sentences.

This is a formalization, not a parser: the first role noun, pronoun or name
in the sentence is taken as the subject candidate.  A source is *Neutral*
when nothing in it fixes the referent's gender, *PluralGroup* when the
subject is plural or collective, and *Masculine*/*Feminine* when a pronoun,
name or inherently gendered noun says so.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import ConflictingCues, EmptySentence, SchemaError

_WORD = re.compile(r"[A-Za-z]+(?:['’][A-Za-z]+)*")
_PLURAL_AUX = frozenset({"are", "were"})


class SourceVariant(enum.Enum):
    NEUTRAL = "Neutral"
    MASCULINE = "Masculine"
    FEMININE = "Feminine"
    PLURAL_GROUP = "PluralGroup"


@dataclass(frozen=True)
class SourceGender:
    variant: SourceVariant
    cues: tuple[tuple[str, str], ...] = ()
    subject: str | None = None
    subject_human: bool = False

    @property
    def gender_neutral(self) -> bool:
        return self.variant in (SourceVariant.NEUTRAL, SourceVariant.PLURAL_GROUP)


@dataclass
class CueLexicon:
    masculine_pronouns: set[str] = field(default_factory=set)
    feminine_pronouns: set[str] = field(default_factory=set)
    plural_pronouns: set[str] = field(default_factory=set)
    male_names: set[str] = field(default_factory=set)
    female_names: set[str] = field(default_factory=set)
    masculine_nouns: set[str] = field(default_factory=set)
    feminine_nouns: set[str] = field(default_factory=set)
    # singular -> (plural, human)
    roles: dict[str, tuple[str, bool]] = field(default_factory=dict)
    group_nouns: dict[str, bool] = field(default_factory=dict)
    compound_roles: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for a, b, what in (
            (self.masculine_pronouns, self.feminine_pronouns, "pronoun"),
            (self.male_names, self.female_names, "name"),
            (self.masculine_nouns, self.feminine_nouns, "noun"),
        ):
            both = a & b
            if both:
                raise ValueError(f"{what} listed as both masculine and feminine: {sorted(both)}")

    def role_of(self, word: str) -> tuple[str, bool, bool] | None:
        """Resolve *word* to ``(singular_role, is_plural, human)``."""
        if word in self.roles:
            return word, False, self.roles[word][1]
        for singular, (plural, human) in self.roles.items():
            if word == plural:
                return singular, True, human
        for cut in (1, 2):
            stem = word[:-cut]
            if word.endswith("s") and stem in self.roles:
                return stem, True, self.roles[stem][1]
        return None

    def set_human(self, role: str, human: bool) -> None:
        plural, _ = self.roles[role]
        self.roles[role] = (plural, human)


def parse_cue_lexicon(text: str) -> CueLexicon:
    lex = CueLexicon()
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        cols = [c.strip() for c in raw.split("\t")]
        head = cols[0]
        if section in ("masculine_pronouns", "feminine_pronouns", "plural_pronouns"):
            getattr(lex, section).add(head.lower())
        elif section in ("male_names", "female_names"):
            getattr(lex, section).add(head)
        elif section in ("masculine_nouns", "feminine_nouns"):
            bucket = getattr(lex, section)
            bucket.add(head.lower())
            if len(cols) > 1 and not cols[1].startswith("["):
                bucket.add(cols[1].lower())
        elif section == "roles":
            if len(cols) < 3:
                raise SchemaError("role rows need singular, plural, human", lineno)
            lex.roles[head.lower()] = (cols[1].lower(), cols[2].lower() == "yes")
        elif section in ("group_nouns", "compounds"):
            human = len(cols) < 2 or cols[1].lower() != "no"
            target = lex.group_nouns if section == "group_nouns" else lex.compound_roles
            target[head.lower()] = human
        else:
            raise SchemaError(f"row outside a known section ({section!r})", lineno)
    try:
        lex.validate()
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    return lex


def _read_default() -> str:
    return resources.files("dravbias.data").joinpath("cue_lexicon.tsv").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _default_cue_lexicon() -> CueLexicon:
    return parse_cue_lexicon(_read_default())


def default_cue_lexicon() -> CueLexicon:
    """A fresh copy of the bundled lexicon (callers may mutate it)."""
    return parse_cue_lexicon(_read_default())


def _match_compound(lower: list[str], i: int, lex: CueLexicon):
    best = None
    for phrase, human in lex.compound_roles.items():
        words = phrase.split()
        n = len(words)
        window = lower[i:i + n]
        if len(window) != n or window[:-1] != words[:-1]:
            continue
        last = window[-1]
        if last == words[-1]:
            plural = False
        elif last in (words[-1] + "s", words[-1] + "es"):
            plural = True
        else:
            continue
        if best is None or n > best[1]:
            best = (" ".join(window), n, plural, human)
    return best


def classify_source(sentence_en: str, lexicon: CueLexicon | None = None) -> SourceGender:
    lex = lexicon if lexicon is not None else _default_cue_lexicon()
    words = [w.replace("’", "'") for w in _WORD.findall(sentence_en)]
    if not words:
        raise EmptySentence("source sentence has no words")
    bare = [w[:-2] if w.lower().endswith("'s") and w.lower() not in ("it's", "he's", "she's") else w
            for w in words]
    lower = [w.lower() for w in bare]
    lower = [{"he's": "he", "she's": "she"}.get(w, w) for w in lower]

    cues: list[tuple[str, str]] = []
    masc = fem = False
    subject = None  # (text, plural, human, end_index)
    i = 0
    while i < len(words):
        word, low = bare[i], lower[i]
        comp = _match_compound(lower, i, lex)
        if comp is not None:
            text, n, plural, human = comp
            cues.append((text, "compound"))
            if subject is None:
                subject = (text, plural, human, i + n)
            i += n
            continue
        if low in lex.masculine_pronouns:
            cues.append((word, "pronoun"))
            masc = True
        elif low in lex.feminine_pronouns:
            cues.append((word, "pronoun"))
            fem = True
        elif low in lex.plural_pronouns:
            cues.append((word, "plural"))
            if subject is None:
                subject = (low, True, True, i + 1)
        elif word in lex.male_names:
            cues.append((word, "name"))
            masc = True
        elif word in lex.female_names:
            cues.append((word, "name"))
            fem = True
        elif low in lex.masculine_nouns:
            cues.append((word, "noun"))
            masc = True
        elif low in lex.feminine_nouns:
            cues.append((word, "noun"))
            fem = True
        elif low in lex.group_nouns:
            cues.append((word, "group"))
            if subject is None:
                subject = (low, True, lex.group_nouns[low], i + 1)
        else:
            role = lex.role_of(low)
            if role is not None:
                singular, plural, human = role
                cues.append((low, "role"))
                if subject is None:
                    subject = (singular, plural, human, i + 1)
        i += 1

    if masc and fem:
        raise ConflictingCues(f"both masculine and feminine cues in {sentence_en!r}", cues)
    if masc or fem:
        variant = SourceVariant.MASCULINE if masc else SourceVariant.FEMININE
        return SourceGender(variant, tuple(cues), subject[0] if subject else None, True)
    if subject is None:
        return SourceGender(SourceVariant.NEUTRAL, tuple(cues), None, False)
    text, plural, human, end = subject
    if not plural and end < len(lower) and lower[end] in _PLURAL_AUX:
        plural = True
        cues.append((words[end], "plural"))
    elif plural and not any(kind == "plural" for _, kind in cues):
        cues.append((text, "plural"))
    variant = SourceVariant.PLURAL_GROUP if plural else SourceVariant.NEUTRAL
    return SourceGender(variant, tuple(cues), text, human)
