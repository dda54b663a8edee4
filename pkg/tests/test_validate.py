from collections import Counter

import pytest

from conftest import DATA
from korean_ud.conllu import DependencyTree, Token
from korean_ud.lexicon import Lexicon
from korean_ud.validate import RULES, GuidelineRuleSet, validate_corpus, validate_sentence


def read_tally():
    rows = []
    for line in (DATA / "top_tally.tsv").read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            sid, code, toks = line.split("\t")
            rows.append((sid, code, tuple(int(x) for x in toks.split(","))))
    return rows


def tok(i, form, lemma, upos, xpos, head, rel):
    return Token(i, form, lemma, upos, xpos, "", head, rel)


def test_matches_hand_tally(current):
    found = sorted((d.sentence_id, d.code, d.token_indices) for d in validate_corpus(current).diagnostics)
    assert found == sorted(read_tally())


def test_tally_counts(current):
    summary = validate_corpus(current)
    assert summary.count_table() == {code: Counter(c for _, c, _ in read_tally()).get(code, 0) for code in RULES}
    assert summary.sentences == 12
    assert summary.exit_status == 1


def test_revised_corpus_is_clean(revised, frame_sentences):
    assert validate_corpus(revised).diagnostics == []
    assert validate_corpus(frame_sentences).diagnostics == []


def test_validation_does_not_modify(current):
    before = [t.tokens for t in current]
    validate_corpus(current)
    assert [t.tokens for t in current] == before


def test_every_rule_has_rationale_and_severity():
    assert len(RULES) == 13
    for rule in RULES.values():
        assert rule.rationale and rule.severity in ("error", "warning")
    assert RULES["OBL-ARG-UNBACKED"].severity == "warning"


def test_severity_override_and_disable(current):
    tree = next(t for t in current if t.sentence_id == "sipda")
    ruleset = GuidelineRuleSet(overrides={"HEADFINAL-FLAT": "warning"}, disabled=frozenset({"TOPIC-DISLOCATED"}))
    found = validate_sentence(tree, ruleset)
    assert [(d.code, d.severity) for d in found] == [("HEADFINAL-FLAT", "warning"), ("NO-FLAT-VERB", "error")]
    with pytest.raises(ValueError):
        GuidelineRuleSet(overrides={"NOPE": "error"})
    with pytest.raises(ValueError):
        GuidelineRuleSet(overrides={"AUX-ORDER": "fatal"})
    with pytest.raises(ValueError):
        GuidelineRuleSet(disabled=frozenset({"NOPE"}))


def test_warnings_only_exit_zero():
    tree = DependencyTree("w", "", (
        tok(1, "학교에서", "학교+에서", "NOUN", "nng+jkb", 2, "obl:arg"),
        tok(2, "좋다", "좋+다", "ADJ", "va+ef", 0, "root")))
    summary = validate_corpus([tree])
    assert [d.code for d in summary.diagnostics] == ["OBL-ARG-UNBACKED"]
    assert summary.exit_status == 0


def test_single_token_and_empty():
    one = DependencyTree("one", "", (tok(1, "네", "네", "INTJ", "ic", 0, "root"),))
    assert validate_sentence(one) == []
    summary = validate_corpus([])
    assert summary.sentences == 0 and summary.exit_status == 0


def test_tree_level_findings():
    multi = DependencyTree("m", "", (tok(1, "a", "a", "X", "", 0, "root"), tok(2, "b", "b", "X", "", 0, "root")))
    assert [d.code for d in validate_sentence(multi)] == ["TREE-MULTIROOT"]


@pytest.mark.parametrize("rows, code", [
    ([("사진", "NOUN", 0, "root"), ("앨범", "NOUN", 1, "compound")], "HEADFINAL-COMPOUND"),
    ([("먹어", "VERB", 2, "aux"), ("본다", "VERB", 0, "root")], "AUX-ORDER"),
    ([("그", "DET", 2, "fixed"), ("런데", "ADV", 0, "root")], "FIXED-ORDER"),
    ([("사진", "NOUN", 2, "obl:tmod"), ("간다", "VERB", 0, "root")], "SUBTYPE-ILLEGAL"),
])
def test_single_rules(rows, code):
    toks = tuple(tok(i, f, f, u, "", h, r) for i, (f, u, h, r) in enumerate(rows, 1))
    found = validate_sentence(DependencyTree("r", "", toks))
    assert [d.code for d in found] == [code]


def test_lexicon_without_frames_flags_obl_arg(current):
    tree = next(t for t in current if t.sentence_id == "oblarg")
    fixed = tree.with_edges(tree.heads, ["obl:arg" if r == "obl" else r for r in tree.deprels])
    assert validate_sentence(fixed) == []
    assert [d.code for d in validate_sentence(fixed, lexicon=Lexicon([]))] == ["OBL-ARG-UNBACKED"]
