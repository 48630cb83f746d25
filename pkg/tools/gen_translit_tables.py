"""Regenerate the bundled transliteration tables from Unicode character names.

Run once after editing the name map below; the .tsv files are the source of
truth at runtime and may be hand-edited afterwards.
"""
import sys
import unicodedata
from pathlib import Path

LETTERS = [
    # independent vowels
    ("A", "a"), ("AA", "ā"), ("I", "i"), ("II", "ī"), ("U", "u"), ("UU", "ū"),
    ("VOCALIC R", "r̥"), ("VOCALIC RR", "r̥̄"), ("E", "e"), ("EE", "ē"), ("AI", "ai"),
    ("O", "o"), ("OO", "ō"), ("AU", "au"),
    # consonants
    ("KA", "k"), ("KHA", "kh"), ("GA", "g"), ("GHA", "gh"), ("NGA", "ṅ"),
    ("CA", "c"), ("CHA", "ch"), ("JA", "j"), ("JHA", "jh"), ("NYA", "ñ"),
    ("TTA", "ṭ"), ("TTHA", "ṭh"), ("DDA", "ḍ"), ("DDHA", "ḍh"), ("NNA", "ṇ"),
    ("TA", "t"), ("THA", "th"), ("DA", "d"), ("DHA", "dh"), ("NA", "n"),
    ("PA", "p"), ("PHA", "ph"), ("BA", "b"), ("BHA", "bh"), ("MA", "m"),
    ("YA", "y"), ("RA", "r"), ("RRA", "ṟ"), ("LA", "l"), ("LLA", "ḷ"),
    ("VA", "v"), ("SHA", "ś"), ("SSA", "ṣ"), ("SA", "s"), ("HA", "h"),
]
SIGNS = [
    ("VOWEL SIGN AA", "ā"), ("VOWEL SIGN I", "i"), ("VOWEL SIGN II", "ī"),
    ("VOWEL SIGN U", "u"), ("VOWEL SIGN UU", "ū"), ("VOWEL SIGN VOCALIC R", "r̥"),
    ("VOWEL SIGN VOCALIC RR", "r̥̄"), ("VOWEL SIGN E", "e"), ("VOWEL SIGN EE", "ē"),
    ("VOWEL SIGN AI", "ai"), ("VOWEL SIGN O", "o"), ("VOWEL SIGN OO", "ō"),
    ("VOWEL SIGN AU", "au"), ("SIGN VIRAMA", ""), ("SIGN ANUSVARA", "ṁ"),
    ("SIGN VISARGA", "ḥ"),
]
EXTRA = {"TELUGU": [("SIGN CANDRABINDU", "m̐")], "KANNADA": [("LETTER FA", "ḻ")]}


def build(script):
    rows = []
    for kind, names in (("LETTER", LETTERS), ("", SIGNS)):
        for name, roman in names:
            full = f"{script} {kind} {name}".replace("  ", " ") if kind else f"{script} {name}"
            rows.append((unicodedata.lookup(full), roman, full))
    for name, roman in EXTRA.get(script, []):
        if script == "KANNADA" and name == "LETTER FA":
            rows.append(("ೞ", roman, "KANNADA LETTER FA (llla)"))
            continue
        rows.append((unicodedata.lookup(f"{script} {name}"), roman, f"{script} {name}"))
    return rows


def main(outdir):
    for script in ("TELUGU", "KANNADA"):
        path = Path(outdir) / f"translit_{script.lower()}.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# {script.title()} -> diacritic romanization, version 1\n")
            fh.write("# <native>\\t<roman>; consonants carry no inherent vowel here,\n")
            fh.write("# the transliterator adds 'a' unless a vowel sign or virama follows.\n")
            fh.write("# An empty roman field (virama) deletes the inherent vowel.\n")
            for native, roman, name in build(script):
                fh.write(f"{unicodedata.normalize('NFC', native)}\t{unicodedata.normalize('NFC', roman)}\t# {name}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/dravbias/data")
