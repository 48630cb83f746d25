"""Script detection, grapheme segmentation and romanization of Telugu/Kannada.

Everything downstream works on one canonical form: NFC-composed Latin text
with diacritics (``vaccāḍu``, ``bandidale``).  Native-script input is mapped
onto that form using the tables in ``data/translit_*.tsv``.
"""
from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import UnknownScript, UnsupportedLanguage

TELUGU = "telugu"
KANNADA = "kannada"
LANGUAGES = (TELUGU, KANNADA)

_BLOCKS = {TELUGU: (0x0C00, 0x0C7F), KANNADA: (0x0C80, 0x0CFF)}

# Unicode InCB=Linker viramas; Kannada's is deliberately absent (UAX #29).
_LINKERS = frozenset("्্્୍్്")
_ZWJ, _ZWNJ = "‍", "‌"
# spacing marks that Unicode still classes as Grapheme_Extend
_EXTEND_MC = frozenset(
    "\u09be\u09d7\u0b3e\u0b57\u0bbe\u0bd7\u0cc0\u0cc2\u0cc7\u0cc8"
    "\u0cca\u0ccb\u0cd5\u0cd6\u0d3e\u0d57"
)

_INDEPENDENT_VOWELS = frozenset(
    "A AA I II U UU E EE AI O OO AU".split()
    + ["VOCALIC R", "VOCALIC RR", "VOCALIC L", "VOCALIC LL"]
)


class ScriptTag(enum.Enum):
    TELUGU_NATIVE = "TeluguNative"
    KANNADA_NATIVE = "KannadaNative"
    ROMANIZED = "Romanized"
    MIXED = "Mixed"
    UNKNOWN = "Unknown"


def normalize_language(language: str) -> str:
    lang = str(language).strip().lower()
    if lang in ("te", "tel"):
        lang = TELUGU
    elif lang in ("kn", "kan"):
        lang = KANNADA
    if lang not in LANGUAGES:
        raise UnsupportedLanguage(f"unsupported language: {language!r}")
    return lang


def _char_class(ch: str) -> str | None:
    if not unicodedata.category(ch).startswith("L"):
        return None
    cp = ord(ch)
    for lang, (lo, hi) in _BLOCKS.items():
        if lo <= cp <= hi:
            return lang
    if unicodedata.name(ch, "").startswith("LATIN"):
        return "latin"
    return "other"


def detect_script(text: str) -> ScriptTag:
    """Classify *text* by the scripts of its letter characters.

    Letters from scripts other than Telugu, Kannada and Latin are ignored; a
    text made only of them (or of no letters at all) is ``UNKNOWN``.
    """
    classes = {_char_class(ch) for ch in text}
    classes.discard(None)
    classes.discard("other")
    if not classes:
        return ScriptTag.UNKNOWN
    if len(classes) > 1:
        return ScriptTag.MIXED
    return {
        TELUGU: ScriptTag.TELUGU_NATIVE,
        KANNADA: ScriptTag.KANNADA_NATIVE,
        "latin": ScriptTag.ROMANIZED,
    }[classes.pop()]


@dataclass(frozen=True)
class GraphemeString:
    original: str
    clusters: tuple[str, ...]

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)


def _is_extend(ch: str) -> bool:
    return unicodedata.category(ch) in ("Mn", "Mc", "Me") or ch in (_ZWJ, _ZWNJ)


def _is_indic_consonant(ch: str) -> bool:
    name = unicodedata.name(ch, "")
    for prefix in ("TELUGU LETTER ", "KANNADA LETTER ", "DEVANAGARI LETTER ",
                   "BENGALI LETTER ", "GUJARATI LETTER ", "ORIYA LETTER ",
                   "MALAYALAM LETTER "):
        if name.startswith(prefix):
            return name[len(prefix):] not in _INDEPENDENT_VOWELS
    return False


def _is_incb_consonant(ch: str) -> bool:
    # only scripts whose virama is a linker take part in conjunct clusters
    return _is_indic_consonant(ch) and not unicodedata.name(ch).startswith("KANNADA")


def _is_incb_extend(ch: str) -> bool:
    if ch in _LINKERS:
        return False
    return ch == _ZWJ or ch in _EXTEND_MC or unicodedata.category(ch) in ("Mn", "Me")


def segment_graphemes(text: str) -> GraphemeString:
    """Split *text* into extended grapheme clusters.

    Covers the boundary rules relevant to Latin and Indic text: CR LF,
    combining/spacing marks and joiners extend the preceding cluster, and a
    consonant joined by a conjunct-forming virama stays in the cluster.
    Hangul, emoji, prepend and regional-indicator rules are not implemented.
    """
    clusters: list[str] = []
    current = ""
    # None | "C" (consonant seen) | "CL" (consonant + linker seen)
    chain = None
    for ch in text:
        consonant = _is_incb_consonant(ch)
        if not current:
            current, chain = ch, ("C" if consonant else None)
            continue
        if current[-1] == "\r" and ch == "\n":
            current += ch
            chain = None
            continue
        if current[-1] in "\r\n" or ch in "\r\n":
            clusters.append(current)
            current, chain = ch, ("C" if consonant else None)
            continue
        if consonant and chain == "CL":
            current += ch
            chain = "C"
            continue
        if _is_extend(ch):
            current += ch
            if ch in _LINKERS and chain is not None:
                chain = "CL"
            elif not (_is_incb_extend(ch) and chain is not None):
                chain = None
            continue
        clusters.append(current)
        current, chain = ch, ("C" if consonant else None)
    if current:
        clusters.append(current)
    return GraphemeString(text, tuple(clusters))


@dataclass(frozen=True)
class TransliterationTable:
    language: str
    entries: dict[str, str]
    consonants: frozenset[str] = field(default_factory=frozenset)
    vowel_signs: frozenset[str] = field(default_factory=frozenset)
    viramas: frozenset[str] = field(default_factory=frozenset)

    @property
    def max_key(self) -> int:
        return max((len(k) for k in self.entries), default=1)


def parse_table(text: str, language: str) -> TransliterationTable:
    """Parse ``<native>\\t<roman>`` lines; ``#`` starts a comment."""
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("\t#", 1)[0]
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        native, _, roman = line.partition("\t")
        native = unicodedata.normalize("NFC", native.strip())
        entries[native] = unicodedata.normalize("NFC", roman.strip())
    consonants, signs, viramas = set(), set(), set()
    for key in entries:
        if len(key) != 1:
            continue
        name = unicodedata.name(key, "")
        if " SIGN VIRAMA" in name:
            viramas.add(key)
        elif " VOWEL SIGN " in name:
            signs.add(key)
        elif _is_indic_consonant(key):
            consonants.add(key)
    return TransliterationTable(
        normalize_language(language), entries,
        frozenset(consonants), frozenset(signs), frozenset(viramas),
    )


@lru_cache(maxsize=None)
def load_table(language: str) -> TransliterationTable:
    language = normalize_language(language)
    text = resources.files("dravbias.data").joinpath(
        f"translit_{language}.tsv").read_text(encoding="utf-8")
    return parse_table(text, language)


def _in_block(ch: str, language: str) -> bool:
    lo, hi = _BLOCKS[language]
    return lo <= ord(ch) <= hi


def _romanize_cluster(cluster: str, table: TransliterationTable) -> str | None:
    out = []
    i = 0
    n = len(cluster)
    while i < n:
        ch = cluster[i]
        if ch in (_ZWJ, _ZWNJ):
            i += 1
            continue
        for size in range(min(table.max_key, n - i), 0, -1):
            key = cluster[i:i + size]
            if key in table.entries:
                break
        else:
            return None
        out.append(table.entries[key])
        i += size
        if key in table.consonants:
            nxt = cluster[i] if i < n else ""
            if nxt not in table.vowel_signs and nxt not in table.viramas:
                out.append("a")
    return "".join(out)


def to_roman(text: str, language: str, table: TransliterationTable | None = None
             ) -> tuple[str, list[str]]:
    """Romanize native Telugu/Kannada script.

    Returns ``(romanized, unmapped)``.  Latin text, punctuation and spaces pass
    through unchanged.  A native cluster the table cannot fully map is kept
    verbatim in the output and listed in ``unmapped``.
    """
    language = normalize_language(language)
    if detect_script(text) is ScriptTag.UNKNOWN:
        raise UnknownScript(f"no Telugu, Kannada or Latin letters in {text!r}")
    text = unicodedata.normalize("NFC", text)
    if detect_script(text) is ScriptTag.ROMANIZED:
        return text, []
    table = table or load_table(language)
    out, unmapped = [], []
    for cluster in segment_graphemes(text):
        if not any(_in_block(ch, lang) for ch in cluster for lang in LANGUAGES):
            out.append(cluster)
            continue
        roman = _romanize_cluster(cluster, table)
        if roman is None:
            unmapped.append(cluster)
            out.append(cluster)
        else:
            out.append(roman)
    return unicodedata.normalize("NFC", "".join(out)), unmapped


def to_native(roman: str, language: str, table: TransliterationTable | None = None) -> str:
    """Inverse of :func:`to_roman` for text the table can express.

    Greedy longest match over the table's romanizations.  Characters with no
    native counterpart (spaces, punctuation, unknown letters) pass through.
    """
    table = table or load_table(normalize_language(language))
    roman = unicodedata.normalize("NFD", roman)
    consonants: dict[str, str] = {}
    vowels: dict[str, str] = {}
    signs: dict[str, str] = {}
    others: dict[str, str] = {}
    for native, value in table.entries.items():
        value = unicodedata.normalize("NFD", value)
        if not value:
            continue
        if native in table.consonants:
            consonants.setdefault(value, native)
        elif native in table.vowel_signs:
            signs.setdefault(value, native)
        elif len(native) == 1 and unicodedata.name(native, "").split(" LETTER ")[-1] in _INDEPENDENT_VOWELS:
            vowels.setdefault(value, native)
        else:
            others.setdefault(value, native)
    virama = next(iter(table.viramas))
    keys = sorted(set(consonants) | set(vowels) | set(others), key=len, reverse=True)

    out = []
    pending = False
    i = 0
    while i < len(roman):
        for key in keys:
            if roman.startswith(key, i):
                break
        else:
            if pending:
                out.append(virama)
                pending = False
            out.append(roman[i])
            i += 1
            continue
        i += len(key)
        if key in consonants:
            if pending:
                out.append(virama)
            out.append(consonants[key])
            pending = True
        elif key in vowels:
            if pending:
                if key != "a":
                    out.append(signs[key])
                pending = False
            else:
                out.append(vowels[key])
        else:
            # anusvara / visarga realize the inherent vowel
            pending = False
            out.append(others[key])
    if pending:
        out.append(virama)
    return unicodedata.normalize("NFC", "".join(out))


@lru_cache(maxsize=None)
def _aliases() -> tuple[tuple[str, str], ...]:
    text = resources.files("dravbias.data").joinpath("aliases.tsv").read_text(encoding="utf-8")
    pairs = []
    for raw in text.splitlines():
        line = raw.split("\t#", 1)[0]
        if not line.strip() or line.startswith("#"):
            continue
        variant, _, canonical = line.partition("\t")
        pairs.append((variant.strip(), unicodedata.normalize("NFC", canonical.strip())))
    return tuple(sorted(pairs, key=lambda p: len(p[0]), reverse=True))


def normalize_roman(text: str) -> str:
    """NFC-compose and rewrite informal doubled vowels (``aa`` -> ``ā``)."""
    text = unicodedata.normalize("NFC", text)
    for variant, canonical in _aliases():
        text = text.replace(variant, canonical)
    return text


def canonicalize(text: str, language: str) -> tuple[str, list[str]]:
    """Romanize any supported input and apply the alias list."""
    roman, unmapped = to_roman(text, language)
    return normalize_roman(roman), unmapped
