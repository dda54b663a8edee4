"""Rewrite passes from the current Korean UD annotation to the revised one.

Every pass is a pure function ``tree -> (tree, PassReport)`` that only
touches the HEAD and DEPREL columns (DEPS is cleared on changed rows).
``run_pipeline`` applies the passes in canonical order and repeats the
sequence until a round changes nothing, so its output is a fixpoint.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .conllu import DependencyTree, base_relation, check_wellformed
from .lexicon import (Lexicon, MarkerClass, best_frame, classify_token, default_lexicon,
                      is_nominalized, match_fixed, slot_for)


class PipelineError(RuntimeError):
    """A pass produced an ill-formed tree or the passes did not converge."""

    def __init__(self, message: str, pass_name: str, sentence_id: str):
        self.pass_name = pass_name
        self.sentence_id = sentence_id
        super().__init__(f"sentence {sentence_id}, pass {pass_name}: {message}")


@dataclass(frozen=True)
class EdgeChange:
    token: int
    old_head: int
    old_deprel: str
    new_head: int
    new_deprel: str

    def __str__(self):
        return f"{self.token}\t{self.old_head}:{self.old_deprel}->{self.new_head}:{self.new_deprel}"


@dataclass
class PassReport:
    name: str
    changes: list[EdgeChange] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.changes

    def records(self, sentence_id: str) -> list[str]:
        lines = [f"{sentence_id}\t{self.name}\t{c}" for c in self.changes]
        lines.extend(f"{sentence_id}\t{self.name}\tnote\t{n}" for n in self.notes)
        return lines


CLAUSAL_RELATIONS = frozenset({"ccomp", "xcomp", "advcl", "csubj", "csubj:pass", "acl"})
SUBJECT_RELATIONS = frozenset({"nsubj", "nsubj:pass", "csubj", "csubj:pass", "dislocated:nsubj"})
TOPIC_SUBJECT_LABELS = frozenset({"nsubj", "dislocated", "dislocated:nsubj"})
_DATE = re.compile(r"^\d+(년|월|일|시|분|초)$")


class _Work:
    """Mutable head/deprel columns (1-based, slot 0 unused) for one pass."""

    def __init__(self, tree: DependencyTree):
        self.tree = tree
        self.tok = (None,) + tree.tokens
        self.n = len(tree.tokens)
        self.heads = [0] + [t.head for t in tree.tokens]
        self.rels = ["_"] + [t.deprel for t in tree.tokens]
        self.notes: list[str] = []

    def children(self, i: int) -> list[int]:
        return [d for d in range(1, self.n + 1) if self.heads[d] == i]

    def ancestors(self, i: int):
        seen = 0
        node = self.heads[i]
        while node and seen <= self.n:
            yield node
            node = self.heads[node]
            seen += 1

    def attach(self, d: int, head: int, rel: str):
        self.heads[d] = head
        self.rels[d] = "root" if head == 0 else rel

    def finish(self, name: str) -> tuple[DependencyTree, PassReport]:
        report = PassReport(name, notes=self.notes)
        for t in self.tree.tokens:
            h, r = self.heads[t.index], self.rels[t.index]
            if (h, r) != (t.head, t.deprel):
                report.changes.append(EdgeChange(t.index, t.head, t.deprel, h, r))
        if not report.changes:
            return self.tree, report
        return self.tree.with_edges(self.heads[1:], self.rels[1:]), report


def _is_copula(tok) -> bool:
    tags = tok.xpos_tags
    return bool(tags) and tags[0] == "vcp"


def _verbal(tok) -> bool:
    return tok.is_verbal


# -- individual passes ------------------------------------------------------

def pass_cop_direction(tree: DependencyTree, lexicon: Lexicon | None = None):
    """Make a split-off copula the ``cop`` dependent of its nominal."""
    w = _Work(tree)
    for _ in range(w.n * w.n + 1):
        flipped = False
        for d in range(1, w.n + 1):
            h = w.heads[d]
            if h and w.rels[d] == "cop" and _is_copula(w.tok[h]) and not _is_copula(w.tok[d]):
                w.attach(d, w.heads[h], w.rels[h])
                w.attach(h, d, "cop")
                flipped = True
        if not flipped:
            break
    return w.finish("cop_direction")


def pass_quotative_mark(tree: DependencyTree, lexicon: Lexicon | None = None):
    """Relabel a quotative 고 attached to a clause from ``case`` to ``mark``."""
    lexicon = lexicon or _default_lexicon()
    w = _Work(tree)
    for d in range(1, w.n + 1):
        h = w.heads[d]
        if (h and w.rels[d] == "case" and _verbal(w.tok[h])
                and classify_token(lexicon.markers, w.tok[d]) is MarkerClass.QUOTATIVE):
            w.rels[d] = "mark"
    return w.finish("quotative_mark")


def _topmost(w: _Work, span: set[int]) -> int:
    """Span token closest to the root (the last one when several qualify)."""
    best = None
    for x in sorted(span):
        if w.heads[x] in span:
            continue
        if not any(a in span for a in w.ancestors(x)):
            best = x
    if best is None:  # span sits on a cycle; cannot happen for well-formed input
        best = max(span)
    return best


def _apply_fixed(w: _Work, start: int, end: int, host: int | None, relation: str):
    span = set(range(start, end + 1))
    top = _topmost(w, span)
    ext_head, ext_rel = w.heads[top], w.rels[top]
    first = start
    if host is None:
        anchor = first
        for d in range(1, w.n + 1):
            if d not in span and w.heads[d] in span:
                w.heads[d] = anchor
        w.attach(first, ext_head, ext_rel)
    else:
        anchor = host
        # the host phrase hangs below the span: lift it to the span's attachment
        lifted = None
        node = host
        while node and node not in span:
            if w.heads[node] in span:
                lifted = node
                break
            node = w.heads[node]
        for d in range(1, w.n + 1):
            if d not in span and d != lifted and w.heads[d] in span:
                w.heads[d] = anchor
        if lifted is not None:
            w.attach(lifted, ext_head, w.rels[lifted])
        w.attach(first, host, relation)
    for s in range(start + 1, end + 1):
        w.attach(s, first, "fixed")


def _components(w: _Work, in_graph: Callable[[int], bool]) -> list[tuple[int, list[int]]]:
    """Connected groups of tokens joined by edges ``d -> heads[d]`` with
    ``in_graph(d)``, as (top token, sorted members)."""
    groups: dict[int, list[int]] = {}
    for d in range(1, w.n + 1):
        if not in_graph(d):
            continue
        top = d
        steps = 0
        while in_graph(top) and steps <= w.n:
            top = w.heads[top]
            steps += 1
        groups.setdefault(top, [top]).append(d)
    return [(top, sorted(set(m))) for top, m in sorted(groups.items())]


def _normalize_fixed_groups(w: _Work):
    """Any remaining ``fixed`` group is re-headed on its first token."""
    for top, members in _components(w, lambda d: w.rels[d] == "fixed" and w.heads[d] != 0):
        first = members[0]
        if first != top:
            w.attach(first, w.heads[top], w.rels[top])
        for m in members[1:]:
            w.attach(m, first, "fixed")


def pass_fixed_expressions(tree: DependencyTree, lexicon: Lexicon | None = None):
    """Attach inventory fixed expressions (뿐 아니라, 에 따라, -ㄹ 듯) and
    make every ``fixed`` group head-initial."""
    lexicon = lexicon or _default_lexicon()
    w = _Work(tree)
    i = 1
    while i <= w.n:
        m = match_fixed(lexicon.inventory, tree, i)
        if m is None:
            i += 1
            continue
        _apply_fixed(w, m.start, m.end, m.host, m.expression.relation)
        i = m.end + 1
    _normalize_fixed_groups(w)
    return w.finish("fixed_expressions")


def _in_mwe_graph(w: _Work, d: int) -> bool:
    h = w.heads[d]
    if not h:
        return False
    rel = w.rels[d]
    if rel == "compound":
        return True
    return rel == "flat" and not (_verbal(w.tok[d]) and _verbal(w.tok[h]))


def _headless_chain(w: _Work, members: list[int]) -> bool:
    """Dates, numerals and all-proper-noun names keep ``flat``."""
    toks = [w.tok[m] for m in members]
    if all(t.upos == "PROPN" for t in toks):
        return True
    return all(t.upos == "NUM" or _DATE.match(t.form) for t in toks)


def _rehead_last(w: _Work, top: int, members: list[int], label: Callable[[int], str]):
    new = members[-1]
    labels = {m: label(m) for m in members}
    if new != top:
        w.attach(new, w.heads[top], w.rels[top])
        for d in range(1, w.n + 1):
            if w.heads[d] == top and d not in members and (d < top or d > new):
                w.heads[d] = new
    for m in members:
        if m != new:
            w.attach(m, new, labels[m])


def pass_nominal_head_finality(tree: DependencyTree, lexicon: Lexicon | None = None):
    """Re-head first-noun-headed noun chains on their last noun as ``compound``."""
    w = _Work(tree)
    for top, members in _components(w, lambda d: _in_mwe_graph(w, d)):
        has_compound = any(w.rels[m] == "compound" for m in members if m != top)
        nominal = all(w.tok[m].is_nominal for m in members)
        if has_compound or (nominal and not _headless_chain(w, members)):
            _rehead_last(w, top, members, lambda m: "compound")
    return w.finish("nominal_head_finality")


def pass_flat_last_head(tree: DependencyTree, lexicon: Lexicon | None = None):
    """Re-head remaining ``flat`` chains (dates, names) on their last token."""
    w = _Work(tree)
    for top, members in _components(w, lambda d: _in_mwe_graph(w, d)):
        if not any(w.rels[m] == "flat" for m in members if m != top):
            continue
        _rehead_last(w, top, members, lambda m: "compound" if w.rels[m] == "compound" and m != top else "flat")
    return w.finish("flat_last_head")


def _restructure_pair(w: _Work, first: int, second: int, relation: str, head_first: bool):
    """Make ``first``/``second`` hang together by ``relation``; the pair's
    external attachment goes to whichever verb becomes the head."""
    head, dep = (first, second) if head_first else (second, first)
    if w.heads[dep] == head:
        w.rels[dep] = relation
        return
    # currently head is below dep: swap roles
    w.attach(head, w.heads[dep], w.rels[dep])
    w.attach(dep, head, relation)


def pass_verbal_restructure(tree: DependencyTree, lexicon: Lexicon | None = None):
    """Split verb-verb ``flat``/``aux``/``dep`` pairs into TAM ``aux``,
    catenative ``xcomp`` and serial-verb ``conj``."""
    lexicon = lexicon or _default_lexicon()
    inv = lexicon.inventory
    w = _Work(tree)
    for _ in range(2 * w.n + 2):
        changed = False
        for d in range(1, w.n + 1):
            h = w.heads[d]
            if not h:
                continue
            rel = w.rels[d]
            both_verbal = _verbal(w.tok[d]) and _verbal(w.tok[h])
            first, second = min(d, h), max(d, h)
            if rel == "advcl" and both_verbal and d < h:
                cat = inv.catenative(w.tok[h].lemma)
                if cat and cat.licensed_by(w.tok[d]):
                    w.rels[d] = "xcomp"
                    changed = True
                continue
            if not (rel == "aux" and d < h) and not (rel in ("flat", "aux", "dep") and both_verbal):
                continue
            tam = inv.tam(w.tok[second].lemma)
            cat = inv.catenative(w.tok[second].lemma)
            upper = h  # the token carrying the pair's external attachment
            if tam and tam.licensed_by(w.tok[first]):
                target = ("aux", True)
            elif cat and cat.licensed_by(w.tok[first]):
                target = ("xcomp", False)
            elif rel == "aux" and d > h:
                continue
            elif w.rels[upper] in CLAUSAL_RELATIONS:
                target = ("conj", False)
            else:
                target = ("aux", True)
                w.notes.append(f"tokens {first},{second}: no inventory entry for "
                               f"{w.tok[second].lemma or w.tok[second].form}, defaulting to aux")
            relation, head_first = target
            expect = (second, first) if head_first else (first, second)
            if w.heads[expect[0]] == expect[1] and w.rels[expect[0]] == relation:
                continue
            _restructure_pair(w, first, second, relation, head_first)
            changed = True
        if not changed:
            break
    return w.finish("verbal_restructure")


def topic_decision(w: _Work, d: int, lexicon: Lexicon, legacy_nsubj: bool = True) -> str | None:
    """Label a topic-marked nominal should carry, or None if it is out of scope."""
    tok = w.tok[d]
    h = w.heads[d]
    allowed = TOPIC_SUBJECT_LABELS if legacy_nsubj else TOPIC_SUBJECT_LABELS - {"nsubj"}
    if not h or w.rels[d] not in allowed or not tok.is_nominal:
        return None
    if classify_token(lexicon.markers, tok) is not MarkerClass.TOPIC:
        return None
    others_subject = False
    topics = 0
    for c in w.children(h):
        if c == d:
            continue
        ctok = w.tok[c]
        is_topic = (ctok.is_nominal and w.rels[c] in TOPIC_SUBJECT_LABELS
                    and classify_token(lexicon.markers, ctok) is MarkerClass.TOPIC)
        if is_topic:
            topics += 1
        elif w.rels[c] in SUBJECT_RELATIONS:
            others_subject = True
    if others_subject:
        return "dislocated"
    if topics == 0:
        return "dislocated:nsubj"
    return None


def expected_topic_label(tree: DependencyTree, index: int, lexicon: Lexicon | None = None,
                         legacy_nsubj: bool = True) -> str | None:
    """The converter's double-subject decision for token ``index``."""
    return topic_decision(_Work(tree), index, lexicon or _default_lexicon(), legacy_nsubj)


def pass_case_role_refinement(tree: DependencyTree, lexicon: Lexicon | None = None,
                              legacy_nsubj: bool = True):
    """Frame-backed ``obl:arg``, topic subjects, ``csubj:pass`` and vocatives."""
    lexicon = lexicon or _default_lexicon()
    table = lexicon.markers
    w = _Work(tree)
    for d in range(1, w.n + 1):
        h = w.heads[d]
        if not h:
            continue
        tok = w.tok[d]
        cls = classify_token(table, tok)
        if cls is MarkerClass.VOCATIVE and w.rels[d] != "vocative":
            w.rels[d] = "vocative"
        elif w.rels[d] == "nsubj:pass" and is_nominalized(tok, table):
            w.rels[d] = "csubj:pass"
    frame_cache: dict[int, object] = {}
    for d in range(1, w.n + 1):
        h = w.heads[d]
        if not h or w.rels[d] != "obl" or not _verbal(w.tok[h]):
            continue
        if h not in frame_cache:
            frame_cache[h] = best_frame(lexicon, w.tok[h].lemma, (w.tok[c] for c in w.children(h)))
        frame = frame_cache[h]
        if frame is None:
            continue
        slot = slot_for(frame, w.tok[d], table)
        if slot is not None and slot.relation == "obl:arg":
            w.rels[d] = "obl:arg"
        else:
            w.notes.append(f"token {d}: obl of {w.tok[h].form} matches no obl:arg slot")
    decisions = {d: topic_decision(w, d, lexicon, legacy_nsubj) for d in range(1, w.n + 1)}
    for d, label in decisions.items():
        if label is not None:
            w.rels[d] = label
    return w.finish("case_role_refinement")


# -- pipeline -------------------------------------------------------------------

@dataclass(frozen=True)
class RewritePass:
    name: str
    apply: Callable[..., tuple[DependencyTree, PassReport]]


PASSES = (
    RewritePass("cop_direction", pass_cop_direction),
    RewritePass("quotative_mark", pass_quotative_mark),
    RewritePass("fixed_expressions", pass_fixed_expressions),
    RewritePass("nominal_head_finality", pass_nominal_head_finality),
    RewritePass("flat_last_head", pass_flat_last_head),
    RewritePass("verbal_restructure", pass_verbal_restructure),
    RewritePass("case_role_refinement", pass_case_role_refinement),
)
PASS_NAMES = tuple(p.name for p in PASSES)


@dataclass
class ConversionConfig:
    passes: tuple[str, ...] = PASS_NAMES
    lexicon: Lexicon | None = None
    legacy_topic_subjects: bool = True
    max_rounds: int = 8

    def __post_init__(self):
        unknown = [p for p in self.passes if p not in PASS_NAMES]
        if unknown:
            raise ValueError(f"unknown pass(es): {', '.join(unknown)}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.lexicon is None:
            self.lexicon = _default_lexicon()

    @property
    def enabled(self) -> list[RewritePass]:
        """Enabled passes, always in canonical order."""
        return [p for p in PASSES if p.name in self.passes]


_DEFAULT_LEXICON: Lexicon | None = None


def _default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = default_lexicon()
    return _DEFAULT_LEXICON


def run_pipeline(tree: DependencyTree, config: ConversionConfig | None = None
                 ) -> tuple[DependencyTree, list[PassReport]]:
    """Convert one tree; returns the result and one merged report per enabled pass.

    Raises ValueError if the input is ill-formed and PipelineError if a pass
    breaks well-formedness or the passes fail to reach a fixpoint.
    """
    config = config or ConversionConfig()
    problems = check_wellformed(tree)
    if problems:
        raise ValueError(f"sentence {tree.sentence_id}: input tree is ill-formed "
                         f"({', '.join(p.code for p in problems)})")
    passes = config.enabled
    merged = {p.name: PassReport(p.name) for p in passes}
    for _ in range(config.max_rounds):
        round_changed = False
        for p in passes:
            if p.name == "case_role_refinement":
                tree, report = p.apply(tree, config.lexicon, config.legacy_topic_subjects)
            else:
                tree, report = p.apply(tree, config.lexicon)
            if report.changes:
                round_changed = True
                if check_wellformed(tree):
                    raise PipelineError("pass produced an ill-formed tree", p.name, tree.sentence_id)
            merged[p.name].changes.extend(report.changes)
            for note in report.notes:
                if note not in merged[p.name].notes:
                    merged[p.name].notes.append(note)
        if not round_changed:
            return tree, list(merged.values())
    raise PipelineError(f"no fixpoint after {config.max_rounds} rounds", "pipeline", tree.sentence_id)


def convert_document(trees, config: ConversionConfig | None = None):
    config = config or ConversionConfig()
    return [run_pipeline(t, config) for t in trees]


def relation_direction_ok(deprel: str, dep: int, head: int) -> bool:
    """Directional constraints of the revised scheme (head-final flat and
    compound, head-initial aux and fixed)."""
    rel = base_relation(deprel)
    if rel in ("flat", "compound"):
        return dep < head
    if rel in ("aux", "fixed"):
        return head < dep
    return True
