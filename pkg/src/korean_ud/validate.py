"""Lint trees against the revised Korean UD guidelines.

Each rule mirrors the postcondition of one rewrite pass, so a converted
corpus is clean by construction. Validation never modifies a tree.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .conllu import DependencyTree, Diagnostic, Relation, check_wellformed
from .lexicon import Lexicon, MarkerClass, best_frame, classify_token, slot_for
from .rules import _default_lexicon, expected_topic_label

SEVERITIES = ("error", "warning", "info")


@dataclass(frozen=True)
class Rule:
    code: str
    severity: str
    rationale: str


RULES: dict[str, Rule] = {r.code: r for r in (
    Rule("TREE-MULTIROOT", "error", "a sentence has exactly one root, labelled root"),
    Rule("TREE-CYCLE", "error", "the head relation is acyclic"),
    Rule("TREE-ORPHAN", "error", "every head refers to a token of the sentence"),
    Rule("HEADFINAL-FLAT", "error", "flat names, dates and numbers attach to their last word"),
    Rule("HEADFINAL-COMPOUND", "error", "noun compounds are headed by the last noun"),
    Rule("AUX-ORDER", "error", "a TAM auxiliary follows the verb it attaches to"),
    Rule("FIXED-ORDER", "error", "fixed expressions are headed by their first word"),
    Rule("NO-FLAT-VERB", "error", "verb sequences are aux, xcomp or conj, never flat"),
    Rule("OBL-ARG-UNBACKED", "warning", "obl:arg needs an argument slot in the predicate's frame"),
    Rule("TOPIC-DISLOCATED", "error", "topic-marked subjects are dislocated:nsubj, other topics dislocated"),
    Rule("COP-DIRECTION", "error", "a split-off copula depends on its nominal as cop"),
    Rule("MARK-QUOTATIVE", "error", "the quotative particle attached to a clause is mark"),
    Rule("SUBTYPE-ILLEGAL", "error", "only nsubj:pass, csubj:pass, obl:arg, dislocated:nsubj, nmod:poss"),
)}


@dataclass
class GuidelineRuleSet:
    """Registered rules with optional severity overrides and disabled codes."""
    overrides: dict[str, str] = field(default_factory=dict)
    disabled: frozenset[str] = frozenset()

    def __post_init__(self):
        for code, sev in self.overrides.items():
            if code not in RULES:
                raise ValueError(f"unknown rule {code!r}")
            if sev not in SEVERITIES:
                raise ValueError(f"unknown severity {sev!r} for {code}")
        unknown = set(self.disabled) - set(RULES)
        if unknown:
            raise ValueError(f"unknown rule(s): {', '.join(sorted(unknown))}")

    def severity(self, code: str) -> str:
        return self.overrides.get(code, RULES[code].severity)

    def enabled(self, code: str) -> bool:
        return code not in self.disabled


def _is_copula(tok) -> bool:
    tags = tok.xpos_tags
    return bool(tags) and tags[0] == "vcp"


def _edge_findings(tree: DependencyTree, lexicon: Lexicon):
    """(code, tokens, message) for every edge-level violation."""
    n = len(tree)
    table = lexicon.markers
    frames: dict[int, object] = {}
    for tok in tree.tokens:
        d, h, rel = tok.index, tok.head, tok.deprel
        try:
            parsed = Relation.parse(rel)
            if parsed.subtype and not parsed.is_legal:
                yield "SUBTYPE-ILLEGAL", (d,), f"subtype in {rel!r} is not part of the scheme"
        except ValueError:
            if ":" in rel:
                yield "SUBTYPE-ILLEGAL", (d,), f"subtype in {rel!r} is not part of the scheme"
        if not 1 <= h <= n:
            continue
        head = tree[h]
        pair = (min(d, h), max(d, h))
        if rel == "flat":
            if tok.is_verbal and head.is_verbal:
                yield "NO-FLAT-VERB", pair, "verb-verb flat"
            elif d > h:
                yield "HEADFINAL-FLAT", pair, f"flat headed by earlier token {h}"
        elif rel == "compound" and d > h:
            yield "HEADFINAL-COMPOUND", pair, f"compound headed by earlier token {h}"
        elif rel == "aux" and d < h:
            yield "AUX-ORDER", pair, f"aux precedes its head {h}"
        elif rel == "fixed" and d < h:
            yield "FIXED-ORDER", pair, f"fixed precedes its head {h}"
        elif rel == "cop" and _is_copula(head) and not _is_copula(tok):
            yield "COP-DIRECTION", pair, f"nominal {d} is the cop dependent of copula {h}"
        elif (rel == "case" and head.is_verbal
              and classify_token(table, tok) is MarkerClass.QUOTATIVE):
            yield "MARK-QUOTATIVE", pair, "quotative particle on a clause labelled case"
        elif rel == "obl:arg":
            if h not in frames:
                frames[h] = best_frame(lexicon, head.lemma, (tree[c] for c in range(1, n + 1)
                                                              if tree[c].head == h))
            frame = frames[h]
            slot = slot_for(frame, tok, table) if frame is not None else None
            if slot is None or slot.relation != "obl:arg":
                yield "OBL-ARG-UNBACKED", pair, f"no obl:arg slot for {head.lemma or head.form}"
        expected = expected_topic_label(tree, d, lexicon)
        if expected is not None and expected != rel:
            yield "TOPIC-DISLOCATED", (d,), f"topic-marked nominal labelled {rel}, expected {expected}"


def validate_sentence(tree: DependencyTree, ruleset: GuidelineRuleSet | None = None,
                      lexicon: Lexicon | None = None) -> list[Diagnostic]:
    """All findings for one tree, ordered by token index, then code."""
    ruleset = ruleset or GuidelineRuleSet()
    lexicon = lexicon or _default_lexicon()
    sid = tree.sentence_id
    found = [Diagnostic(d.code, ruleset.severity(d.code), sid, d.token_indices, d.message)
             for d in check_wellformed(tree) if ruleset.enabled(d.code)]
    for code, toks, message in _edge_findings(tree, lexicon):
        if ruleset.enabled(code):
            found.append(Diagnostic(code, ruleset.severity(code), sid, toks, message))
    found.sort(key=Diagnostic.sort_key)
    return found


@dataclass
class ValidationSummary:
    sentences: int = 0
    counts: Counter = field(default_factory=Counter)
    by_severity: Counter = field(default_factory=Counter)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def add(self, diags: list[Diagnostic]):
        self.sentences += 1
        for d in diags:
            self.counts[d.code] += 1
            self.by_severity[d.severity] += 1
        self.diagnostics.extend(diags)

    @property
    def has_errors(self) -> bool:
        return self.by_severity["error"] > 0

    @property
    def exit_status(self) -> int:
        return 1 if self.has_errors else 0

    def count_table(self) -> dict[str, int]:
        """Per-code counts over every registered rule (zeros included)."""
        return {code: self.counts.get(code, 0) for code in RULES}


def validate_corpus(trees: Iterable[DependencyTree], ruleset: GuidelineRuleSet | None = None,
                    lexicon: Lexicon | None = None,
                    on_sentence: Callable[[DependencyTree, list[Diagnostic]], None] | None = None
                    ) -> ValidationSummary:
    """Validate every tree; ``on_sentence`` sees each sentence's findings as they come."""
    summary = ValidationSummary()
    for tree in trees:
        diags = validate_sentence(tree, ruleset, lexicon)
        if on_sentence is not None:
            on_sentence(tree, diags)
        summary.add(diags)
    return summary
