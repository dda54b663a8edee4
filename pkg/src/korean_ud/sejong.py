"""Bridge between Sejong-style dependency trees and UD.

Sejong-style trees use eojeol tokens with punctuation left attached and
phrase labels (NP_SBJ, VP_MOD, ...) as relations; the root carries its
phrase label (VNP, VP, ...) instead of ``root``. They are read with
``parse_document(..., labels=SEJONG_LABELS)``.
"""
from __future__ import annotations

import io
import unicodedata
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, TextIO

from .conllu import DependencyTree, Diagnostic, Token, base_relation
from .lexicon import Lexicon, best_frame, is_case_marked, slot_for

SEJONG_LABELS = frozenset({
    "NP", "NP_SBJ", "NP_OBJ", "NP_AJT", "NP_MOD", "NP_CNJ", "NP_CMP", "NP_INT", "NP_PRN",
    "VP", "VP_SBJ", "VP_OBJ", "VP_AJT", "VP_MOD", "VP_CMP", "VP_CNJ", "VP_INT", "VP_PRN",
    "VNP", "VNP_SBJ", "VNP_OBJ", "VNP_AJT", "VNP_MOD", "VNP_CMP", "VNP_CNJ", "VNP_INT", "VNP_PRN",
    "AP", "AP_AJT", "AP_MOD", "AP_CMP", "AP_CNJ", "DP", "DP_MOD", "IP", "L", "R", "X", "X_SBJ",
    "X_OBJ", "X_AJT", "X_MOD", "X_CMP", "X_CNJ",
})

CONDITIONS = ("head=verbal", "head=nominal", "head=other")


class SejongMappingError(ValueError):
    pass


@dataclass(frozen=True)
class MappingRule:
    sejong: str
    relation: str
    condition: str | None = None

    def applies(self, head: Token | None) -> bool:
        if self.condition is None:
            return True
        if head is None:
            return False
        kind = "verbal" if head.is_verbal else "nominal" if head.is_nominal else "other"
        return self.condition == f"head={kind}"


def load_mapping(stream: TextIO | Iterable[str] | str | Path | None = None) -> dict[str, list[MappingRule]]:
    """Read ``SEJONG_LABEL<TAB>ud_relation[<TAB>condition]`` lines; ``None`` loads the bundled table."""
    if stream is None:
        stream = resources.files("korean_ud").joinpath("data/sejong_ud.tsv").read_text(encoding="utf-8")
    if isinstance(stream, Path):
        stream = stream.read_text(encoding="utf-8")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    table: dict[str, list[MappingRule]] = {}
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = [c.strip() for c in line.split("\t")]
        if len(cols) not in (2, 3) or not all(cols):
            raise SejongMappingError(f"line {lineno}: want LABEL<TAB>relation[<TAB>condition], got {line!r}")
        cond = cols[2] if len(cols) == 3 else None
        if cond is not None and cond not in CONDITIONS:
            raise SejongMappingError(f"line {lineno}: unknown condition {cond!r}")
        table.setdefault(cols[0], []).append(MappingRule(cols[0], cols[1], cond))
    return table


def _trailing_punct(form: str) -> str:
    end = len(form)
    while end > 0 and unicodedata.category(form[end - 1]).startswith("P"):
        end -= 1
    return form[end:] if 0 < end < len(form) else ""


def _add_misc(misc: str, item: str) -> str:
    return f"{misc}|{item}" if misc else item


def check_right_headed(tree: DependencyTree) -> list[Diagnostic]:
    """One finding per edge whose head precedes its dependent."""
    return [Diagnostic("SEJONG-LEFT-HEAD", "error", tree.sentence_id, (t.head, t.index),
                       f"{t.deprel} edge points left to token {t.head}")
            for t in tree.tokens if 0 < t.head < t.index]


def map_sejong_to_ud(tree: DependencyTree, mapping: dict[str, list[MappingRule]] | None = None,
                     *, lax: bool = False) -> DependencyTree:
    """Relabel a Sejong-style tree with UD relations; heads and tokens are kept.

    The root becomes ``root`` with its phrase label kept as ``SejongRoot`` in
    MISC, and punctuation glued to an eojeol is noted as ``TrailingPunct``.
    """
    mapping = load_mapping() if mapping is None else mapping
    n = len(tree)
    new_tokens = []
    for tok in tree.tokens:
        misc = tok.misc
        if tok.head == 0:
            rel = "root"
            misc = _add_misc(misc, f"SejongRoot={tok.deprel}")
        else:
            head = tree[tok.head] if tok.head <= n else None
            rel = next((r.relation for r in mapping.get(tok.deprel, ()) if r.applies(head)), None)
            if rel is None:
                message = f"sentence {tree.sentence_id}, token {tok.index}: no UD mapping for {tok.deprel!r}"
                if not lax:
                    raise SejongMappingError(message)
                warnings.warn(message + ", using dep", stacklevel=2)
                rel = "dep"
        punct = _trailing_punct(tok.form)
        if punct:
            misc = _add_misc(misc, f"TrailingPunct={punct}")
        new_tokens.append(replace(tok, deprel=rel, misc=misc))
    return replace(tree, tokens=tuple(new_tokens))


UD_TO_SEJONG = {
    "nsubj": "NP_SBJ", "nsubj:pass": "NP_SBJ", "dislocated:nsubj": "NP_SBJ", "obj": "NP_OBJ",
    "obl": "NP_AJT", "obl:arg": "NP_AJT", "iobj": "NP_AJT", "nmod": "NP_MOD", "nmod:poss": "NP_MOD",
    "compound": "NP", "flat": "NP", "dislocated": "NP", "vocative": "NP_INT",
    "csubj": "VP_SBJ", "csubj:pass": "VP_SBJ", "ccomp": "VP_CMP", "xcomp": "VP", "advcl": "VP",
    "acl": "VP_MOD", "amod": "VP_MOD", "aux": "VP", "cop": "VNP", "fixed": "X",
    "advmod": "AP", "det": "DP", "punct": "R", "mark": "X", "case": "X", "dep": "X",
}


def _root_label(tok: Token) -> str:
    for item in tok.misc.split("|"):
        key, _, value = item.partition("=")
        if key == "SejongRoot" and value:
            return value
    if "vcp" in tok.xpos_tags:
        return "VNP"
    if tok.is_nominal:
        return "NP"
    return "VP"


def ud_to_sejong(deprel: str, dependent: Token | None = None) -> str:
    """Sejong label for a UD relation (conj depends on the dependent's category)."""
    if deprel == "conj":
        return "NP_CNJ" if dependent is not None and dependent.is_nominal else "VP"
    return UD_TO_SEJONG.get(deprel, UD_TO_SEJONG.get(base_relation(deprel), "X"))


def to_sejong(tree: DependencyTree) -> DependencyTree:
    """Sejong-direction conversion of a UD tree.

    Childless punctuation tokens are glued onto the preceding eojeol,
    indices are renumbered and relations are replaced by Sejong labels.
    Sentence-initial punctuation has no host and stays a token.
    """
    n = len(tree)
    has_children = {t.head for t in tree.tokens}
    host_of: dict[int, int] = {}
    keep = []
    for t in tree.tokens:
        mergeable = (base_relation(t.deprel) == "punct" and t.upos == "PUNCT"
                     and t.index not in has_children and t.head != 0 and n > 1)
        if mergeable and keep:
            host_of[t.index] = keep[-1]
        else:
            keep.append(t.index)
    new_index = {old: k for k, old in enumerate(keep, 1)}
    glue_after: dict[int, list[Token]] = {}
    for i, host in host_of.items():
        glue_after.setdefault(host, []).append(tree[i])
    tokens = []
    for old in keep:
        t = tree[old]
        form, lemma, xpos = t.form, t.lemma, t.xpos
        for p in glue_after.get(old, ()):
            form += p.form
            lemma = f"{lemma}+{p.lemma}" if lemma else p.lemma
            xpos = f"{xpos}+{p.xpos}" if xpos and p.xpos else xpos or p.xpos
        head = t.head  # glued tokens are childless, so every head survives
        new_head = new_index[head] if head else 0
        label = _root_label(t) if head == 0 else ud_to_sejong(t.deprel, t)
        misc = "|".join(m for m in t.misc.split("|") if m and not m.startswith("SejongRoot="))
        tokens.append(Token(new_index[old], form, lemma, t.upos, xpos, t.feats, new_head, label, "", misc))
    text = " ".join(tok.form for tok in tokens)
    return DependencyTree(tree.sentence_id, text, tuple(tokens), tree.comments)


ARGUMENT_RELATIONS = frozenset({"nsubj", "nsubj:pass", "csubj", "csubj:pass", "obj", "iobj", "obl",
                                "obl:arg", "dislocated", "dislocated:nsubj"})
SLOT_ACCEPTS = {
    "nsubj": frozenset({"nsubj", "nsubj:pass", "csubj", "csubj:pass", "dislocated:nsubj"}),
    "obj": frozenset({"obj"}),
    "iobj": frozenset({"iobj"}),
    "obl:arg": frozenset({"obl:arg"}),
}


def audit_with_frames(tree: DependencyTree, lexicon: Lexicon) -> list[Diagnostic]:
    """Compare case-marked dependents of framed predicates against the best frame."""
    n = len(tree)
    found = []
    for h in range(1, n + 1):
        head = tree[h]
        if not head.is_verbal:
            continue
        deps = [t for t in tree.tokens if t.head == h]
        frame = best_frame(lexicon, head.lemma, deps)
        if frame is None:
            continue
        for dep in deps:
            if dep.deprel not in ARGUMENT_RELATIONS or not is_case_marked(dep, lexicon.markers):
                continue
            slot = slot_for(frame, dep, lexicon.markers)
            if slot is not None and dep.deprel not in SLOT_ACCEPTS[slot.relation]:
                found.append(Diagnostic(
                    "FRAME-MISMATCH", "error", tree.sentence_id, (dep.index,),
                    f"{dep.form} is {dep.deprel} but slot {slot.variable} of "
                    f"{frame.predicate_lemma} licenses {slot.relation}"))
            elif slot is None and dep.deprel == "obl:arg":
                found.append(Diagnostic(
                    "FRAME-MISMATCH", "error", tree.sentence_id, (dep.index,),
                    f"{dep.form} is obl:arg but no slot of {frame.predicate_lemma} matches it"))
    found.sort(key=Diagnostic.sort_key)
    return found
