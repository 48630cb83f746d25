import re
import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dravbias.bias_detector import TranslationPair, Verdict, detect_bias
from dravbias.cot_prompting import (
    MAX_LEVEL,
    PromptPlan,
    Templates,
    build_base_prompt,
    build_cot1_prompt,
    build_cot2_prompt,
    default_templates,
    mitigate,
    render,
    template_fields,
)
from dravbias.errors import BackendError, NoLexiconEntry, NoSuffixEvidence
from dravbias.morphology import default_lexicon
from dravbias.script_core import KANNADA, TELUGU

DOCTOR = "Doctor is in the hospital"
CAREGIVER = "The caregiver prepared meals for the family"


class Scripted:
    """Backend answering from a fixed list; records every plan it sees."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.plans = []

    def translate(self, plan, pair_id=""):
        self.plans.append(plan)
        if not self.replies:
            raise AssertionError("backend called more often than scripted")
        return self.replies.pop(0)


def verdict(source, target, language):
    return detect_bias(TranslationPair("t", source, target, language))


class TestTemplates:
    def test_bundled_set_complete(self):
        t = default_templates()
        for lang, top in MAX_LEVEL.items():
            for level in range(top + 1):
                assert t.get(lang, level)
        with pytest.raises(ValueError):
            t.get(KANNADA, 2)

    def test_unknown_placeholder_rejected(self):
        with pytest.raises(ValueError):
            Templates({(TELUGU, 0): "Translate {sentence} as {style}"})

    def test_from_dir(self, tmp_path):
        (tmp_path / "telugu_0.txt").write_text("T: {sentence}\n", encoding="utf-8")
        t = Templates.from_dir(tmp_path)
        assert build_base_prompt("Hi", TELUGU, t).text == "T: Hi"

    def test_missing_slot(self):
        with pytest.raises(ValueError):
            render(TELUGU, 1, {"sentence": "x"})

    def test_plan_checks(self):
        with pytest.raises(ValueError):
            PromptPlan(2, KANNADA, "x")
        with pytest.raises(ValueError):
            PromptPlan(0, TELUGU, "abc", {"sentence": "zzz"})


class TestBuilders:
    def test_base(self):
        plan = build_base_prompt(DOCTOR, TELUGU)
        assert plan.level == 0
        assert plan.text == "Translate this sentence into Telugu: Doctor is in the hospital"

    def test_cot1_names_suffix(self):
        draft = "vaidyuḍu āsupatri lo unnāḍu."
        plan = build_cot1_prompt(draft, verdict(DOCTOR, draft, TELUGU), TELUGU)
        assert plan.level == 1
        assert plan.slots["suffix"] == "ḍu" and plan.slots["marking"] == "masculine"
        assert draft in plan.text and "-ru" in plan.text

    def test_cot1_kannada(self):
        draft = "araikedāranu kuṭumbakke ūṭavanu siddhapaḍisidanu."
        plan = build_cot1_prompt(draft, verdict(CAREGIVER, draft, KANNADA), KANNADA)
        assert "-nu is a masculine suffix" in plan.text

    def test_cot1_requires_biased(self):
        draft = "vaidyulu āsupatri lo unnāru"
        with pytest.raises(ValueError):
            build_cot1_prompt(draft, verdict(DOCTOR, draft, TELUGU), TELUGU)

    def test_cot1_requires_suffix_evidence(self):
        # biased through the noun alone; the predicate carries -ru
        draft = "vaidyuḍu āsupatri lo unnāru"
        v = verdict(DOCTOR, draft, TELUGU)
        assert v.biased
        with pytest.raises(NoSuffixEvidence):
            build_cot1_prompt(draft, v, TELUGU)

    def test_cot2(self):
        draft = "vaidyuḍu āsupatri lo unnāru"
        entry = default_lexicon().by_role("doctor", TELUGU)
        plan = build_cot2_prompt(draft, verdict(DOCTOR, draft, TELUGU), entry)
        assert plan.level == 2
        for form in ("vaidyuḍu", "vaidyurālu", "vaidyulu"):
            assert form in plan.text
        assert "ḍu is a masculine suffix" in plan.text

    def test_cot2_needs_entry(self):
        draft = "vaidyuḍu āsupatri lo unnāru"
        with pytest.raises(NoLexiconEntry):
            build_cot2_prompt(draft, verdict(DOCTOR, draft, TELUGU), None)

    def test_cot2_telugu_only(self):
        entry = default_lexicon().by_role("doctor", KANNADA)
        draft = "vaidyanu idanu"
        with pytest.raises(ValueError):
            build_cot2_prompt(draft, verdict(DOCTOR, draft, KANNADA), entry)


def _template_regex(template):
    """Independent parser: turn a template into a regex with one group per slot."""
    out, seen = [], set()
    for literal, name, _, _ in string.Formatter().parse(template):
        out.append(re.escape(literal))
        if name is None:
            continue
        if name in seen:
            out.append(f"(?P={name})")
        else:
            seen.add(name)
            out.append(f"(?P<{name}>[^\\n]*?)" if name == "sentence" else f"(?P<{name}>\\S+?)")
    return re.compile("".join(out) + r"\Z")


word = st.text(alphabet="abcdeghiklmnoprstuvyāīūēōṭḍṇḷṁ", min_size=1, max_size=12)
sentence = st.lists(word, min_size=1, max_size=6).map(" ".join)
slot_values = st.fixed_dictionaries({
    "sentence": sentence, "suffix": word, "marking": st.sampled_from(["masculine", "feminine"]),
    "masc": word, "fem": word, "plural": word, "language": st.sampled_from(["Telugu", "Kannada"]),
})
template_keys = st.sampled_from([(TELUGU, 0), (TELUGU, 1), (TELUGU, 2), (KANNADA, 0), (KANNADA, 1)])


@given(template_keys, slot_values)
def test_template_slot_round_trip(key, slots):
    language, level = key
    template = default_templates().get(language, level)
    plan = render(language, level, slots)
    m = _template_regex(template).match(plan.text)
    assert m is not None
    recovered = m.groupdict()
    assert recovered == {k: slots[k] for k in template_fields(template)}
    assert plan.slots == recovered


class TestMitigate:
    def test_telugu_doctor_walkthrough(self):
        backend = Scripted(["vaidyuḍu āsupatri lo unnāḍu.",
                            "vaidyuḍu āsupatri lo unnāru.",
                            "vaidyulu āsupatri lo unnāru."])
        result = mitigate(DOCTOR, TELUGU, backend, 2, pair_id="te-doctor")
        assert len(backend.plans) == 3
        assert [p.level for p in backend.plans] == [0, 1, 2]
        assert result.levels_used == 2
        assert result.final_verdict.variant is Verdict.NEUTRAL
        assert result.stop_reason == "resolved"
        assert "vaidyurālu" in backend.plans[2].text

    def test_kannada_caregiver_walkthrough(self):
        backend = Scripted(["araikedāranu kuṭumbakke ūṭavanu siddhapaḍisidanu.",
                            "araikedāraru kuṭumbakke ūṭavanu siddhapaḍisidaru."])
        result = mitigate(CAREGIVER, KANNADA, backend, 1)
        assert len(backend.plans) == 2
        assert result.levels_used == 1
        assert result.final_verdict.variant is Verdict.NEUTRAL

    def test_unbiased_first_draft_stops(self):
        backend = Scripted(["vaidyulu āsupatri lo unnāru"])
        result = mitigate(DOCTOR, TELUGU, backend)
        assert result.levels_used == 0 and len(backend.plans) == 1

    def test_max_level_reached(self):
        backend = Scripted(["vaidyuḍu unnāḍu", "vaidyuḍu unnāḍu"])
        result = mitigate(DOCTOR, TELUGU, backend, max_level=1)
        assert result.stop_reason == "max level reached"
        assert result.final_verdict.biased

    def test_kannada_level_two_refused(self):
        with pytest.raises(ValueError):
            mitigate(CAREGIVER, KANNADA, Scripted([]), max_level=2)

    def test_missing_lexicon_entry_stops(self):
        # "cook" has no Telugu lexicon entry, so level 2 cannot be built
        backend = Scripted(["vaṇṭavāḍu vaṇṭa cēśāḍu", "vaṇṭavāḍu vaṇṭa cēśāḍu"])
        result = mitigate("The cook made food", TELUGU, backend, 2)
        assert len(backend.plans) == 2
        assert result.stop_reason.startswith("NoLexiconEntry")

    def test_backend_error_keeps_partial_result(self):
        class Failing(Scripted):
            def translate(self, plan, pair_id=""):
                if plan.level == 1:
                    raise BackendError("boom")
                return super().translate(plan, pair_id)

        with pytest.raises(BackendError) as info:
            mitigate(DOCTOR, TELUGU, Failing(["vaidyuḍu unnāḍu"]))
        result = info.value.result
        assert [a.translation for a in result.attempts] == ["vaidyuḍu unnāḍu", None]


REPLIES = ["vaidyuḍu āsupatri lo unnāḍu", "vaidyuḍu āsupatri lo unnāru", "vaidyulu āsupatri lo unnāru",
           "vaidyurālu āsupatri lo unnadi", "vaidyuḍu/vaidyurālu āsupatri lo unnāru", "āsupatri lo",
           "upādhyāyuḍu baḍi lo unnāḍu", "доктор"]


@given(st.sampled_from([(TELUGU, 0), (TELUGU, 1), (TELUGU, 2), (KANNADA, 0), (KANNADA, 1)]),
       st.lists(st.sampled_from(REPLIES), min_size=3, max_size=3),
       st.sampled_from([DOCTOR, "The teacher is at the school", "He is a doctor", CAREGIVER]))
def test_mitigate_call_bound_and_monotone_stop(key, replies, source):
    language, max_level = key
    backend = Scripted(replies)
    result = mitigate(source, language, backend, max_level)
    assert len(backend.plans) <= max_level + 1
    assert [a.plan.level for a in result.attempts] == list(range(len(result.attempts)))
    # every attempt but the last was Biased; the loop stops at the first non-Biased one
    assert all(a.verdict.biased for a in result.attempts[:-1])
    if not result.final_verdict.biased:
        assert result.stop_reason in ("resolved", "indeterminate")
