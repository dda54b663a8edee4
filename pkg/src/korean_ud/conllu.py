"""CoNLL-U reading, writing and tree well-formedness checks.

Sentences are plain eojeol rows: multiword-token ranges (``1-2``) and empty
nodes (``1.1``) are rejected rather than silently dropped.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

UNIVERSAL_RELATIONS = frozenset({
    "root", "nsubj", "obj", "iobj", "csubj", "ccomp", "xcomp", "obl",
    "vocative", "dislocated", "aux", "cop", "mark", "case", "fixed", "flat",
    "compound", "conj", "nmod", "det", "amod", "advmod", "advcl", "punct",
    "dep", "acl",
})
SUBTYPES = frozenset({"pass", "arg", "nsubj", "poss"})
# the only subtyped relations the revised scheme uses
LEGAL_SUBTYPED = frozenset({
    "nsubj:pass", "csubj:pass", "obl:arg", "dislocated:nsubj", "nmod:poss",
})

VERBAL_UPOS = frozenset({"VERB", "AUX", "ADJ"})
NOMINAL_UPOS = frozenset({"NOUN", "PROPN", "NUM", "PRON"})


class ConlluError(ValueError):
    """Malformed CoNLL-U input. ``line`` is 1-based, or None if unknown."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class IllFormedTree(ValueError):
    pass


@dataclass(frozen=True)
class Relation:
    universal: str
    subtype: str | None = None

    @classmethod
    def parse(cls, label: str) -> "Relation":
        universal, _, subtype = label.partition(":")
        if universal not in UNIVERSAL_RELATIONS:
            raise ValueError(f"unknown relation {label!r}")
        if subtype and subtype not in SUBTYPES:
            raise ValueError(f"unknown relation subtype {label!r}")
        return cls(universal, subtype or None)

    @property
    def is_legal(self) -> bool:
        return self.subtype is None or str(self) in LEGAL_SUBTYPED

    def __str__(self) -> str:
        return f"{self.universal}:{self.subtype}" if self.subtype else self.universal


def base_relation(deprel: str) -> str:
    return deprel.partition(":")[0]


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str = ""
    upos: str = ""
    xpos: str = ""
    feats: str = ""
    head: int = 0
    deprel: str = "root"
    deps: str = ""
    misc: str = ""

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.head < 0:
            raise ValueError(f"token {self.index}: negative head {self.head}")
        if self.head == self.index:
            raise ValueError(f"token {self.index} is its own head")
        if self.xpos and not all(self.xpos.split("+")):
            raise ValueError(f"token {self.index}: empty element in xpos {self.xpos!r}")

    @property
    def xpos_tags(self) -> list[str]:
        """Lower-cased morpheme tags; GSD writes ``nng+jks``, other corpora vary in case."""
        return self.xpos.lower().split("+") if self.xpos else []

    @property
    def is_verbal(self) -> bool:
        return self.upos in VERBAL_UPOS

    @property
    def is_nominal(self) -> bool:
        return self.upos in NOMINAL_UPOS


@dataclass(frozen=True)
class DependencyTree:
    sentence_id: str
    text: str
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, index: int) -> Token:
        """1-based token access."""
        if not 1 <= index <= len(self.tokens):
            raise IndexError(f"token index {index} out of range 1..{len(self.tokens)}")
        return self.tokens[index - 1]

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]

    @property
    def deprels(self) -> list[str]:
        return [t.deprel for t in self.tokens]

    def root(self) -> int | None:
        roots = [t.index for t in self.tokens if t.head == 0]
        return roots[0] if len(roots) == 1 else None

    def with_edges(self, heads: list[int], deprels: list[str]) -> "DependencyTree":
        """Copy with new head/deprel columns; DEPS is cleared wherever an edge changed."""
        tokens = []
        changed = False
        for tok, h, r in zip(self.tokens, heads, deprels):
            if tok.head != h or tok.deprel != r:
                tok = replace(tok, head=h, deprel=r, deps="")
                changed = True
            tokens.append(tok)
        return replace(self, tokens=tuple(tokens)) if changed else self


def _field(value: str) -> str:
    return "" if value == "_" else value


def _parse_token(cols: list[str], lineno: int, lax: bool, labels: frozenset[str] | None) -> Token:
    if len(cols) != 10:
        raise ConlluError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
    ident = cols[0]
    if "-" in ident:
        raise ConlluError(f"multiword token range {ident!r} is not supported", lineno)
    if "." in ident:
        raise ConlluError(f"empty node {ident!r} is not supported", lineno)
    try:
        index = int(ident)
    except ValueError:
        raise ConlluError(f"non-integer token index {ident!r}", lineno) from None
    try:
        head = int(cols[6])
    except ValueError:
        raise ConlluError(f"non-integer head {cols[6]!r}", lineno) from None
    deprel = cols[7]
    _check_label(deprel, lineno, lax, labels)
    try:
        return Token(index, cols[1], _field(cols[2]), _field(cols[3]), _field(cols[4]),
                     _field(cols[5]), head, deprel, _field(cols[8]), _field(cols[9]))
    except ValueError as exc:
        raise ConlluError(str(exc), lineno) from None


def _check_label(deprel: str, lineno: int, lax: bool, labels: frozenset[str] | None):
    if labels is None:
        try:
            Relation.parse(deprel)
            return
        except ValueError as exc:
            problem = str(exc)
    elif deprel in labels:
        return
    else:
        problem = f"unknown label {deprel!r}"
    if not lax:
        raise ConlluError(problem, lineno)
    warnings.warn(f"line {lineno}: {problem}", stacklevel=4)


def _build_tree(tokens: list[Token], comments: list[str], first_line: int, ordinal: int) -> DependencyTree:
    for expected, tok in enumerate(tokens, 1):
        if tok.index != expected:
            if any(t.index == tok.index for t in tokens[:expected - 1]):
                raise ConlluError(f"duplicate token index {tok.index}", first_line)
            raise ConlluError(f"token index {tok.index} out of sequence (expected {expected})", first_line)
    sent_id = text = None
    for c in comments:
        key, sep, value = c[1:].partition("=")
        if not sep:
            continue
        key = key.strip()
        if key == "sent_id" and sent_id is None:
            sent_id = value.strip()
        elif key == "text" and text is None:
            text = value.strip()
    if sent_id is None:
        sent_id = str(ordinal)
    if text is None:
        text = " ".join(t.form for t in tokens)
    return DependencyTree(sent_id, text, tuple(tokens), tuple(comments))


def iter_document(stream: TextIO | Iterable[str], *, lax: bool = False,
                  labels: frozenset[str] | None = None):
    """Yield trees one sentence block at a time.

    ``labels`` replaces the UD relation inventory (used for Sejong-style
    trees); ``lax`` downgrades unknown labels to warnings.
    """
    tokens: list[Token] = []
    comments: list[str] = []
    block_start = 0
    ordinal = 0
    lineno = 0
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if tokens or comments:
                if not tokens:
                    raise ConlluError("sentence block has comments but no tokens", block_start)
                ordinal += 1
                yield _build_tree(tokens, comments, block_start, ordinal)
                tokens, comments = [], []
            continue
        if not tokens and not comments:
            block_start = lineno
        if line.startswith("#"):
            if tokens:
                raise ConlluError("comment line inside token rows", lineno)
            comments.append(line)
            continue
        tokens.append(_parse_token(line.split("\t"), lineno, lax, labels))
    if tokens:
        ordinal += 1
        yield _build_tree(tokens, comments, block_start, ordinal)
    elif comments:
        raise ConlluError("sentence block has comments but no tokens", block_start)


def parse_document(stream: TextIO | Iterable[str] | str, *, lax: bool = False,
                   labels: frozenset[str] | None = None) -> list[DependencyTree]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return list(iter_document(stream, lax=lax, labels=labels))


def format_token(tok: Token) -> str:
    cols = [str(tok.index), tok.form, tok.lemma, tok.upos, tok.xpos, tok.feats,
            str(tok.head), tok.deprel, tok.deps, tok.misc]
    return "\t".join(c if c else "_" for c in cols)


def serialize_tree(tree: DependencyTree, *, check: bool = True, root_label: str | None = "root") -> str:
    if check:
        problems = check_wellformed(tree, root_label=root_label)
        if problems:
            codes = ", ".join(d.code for d in problems)
            raise IllFormedTree(f"sentence {tree.sentence_id}: refusing to serialize ill-formed tree ({codes})")
    lines = list(tree.comments)
    lines.extend(format_token(t) for t in tree.tokens)
    return "\n".join(lines) + "\n\n"


def serialize_document(trees: Iterable[DependencyTree], *, check: bool = True,
                       root_label: str | None = "root") -> str:
    return "".join(serialize_tree(t, check=check, root_label=root_label) for t in trees)


def children(tree: DependencyTree, index: int) -> list[int]:
    """Dependents of ``index`` in ascending order; ``0`` yields the root token(s)."""
    if not 0 <= index <= len(tree.tokens):
        raise IndexError(f"token index {index} out of range 0..{len(tree.tokens)}")
    return [t.index for t in tree.tokens if t.head == index]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str
    sentence_id: str
    token_indices: tuple[int, ...] = ()
    message: str = ""

    def sort_key(self):
        first = self.token_indices[0] if self.token_indices else 0
        return (first, self.code, self.token_indices)

    def as_record(self) -> str:
        toks = ",".join(map(str, self.token_indices)) or "_"
        return "\t".join([self.sentence_id, self.code, self.severity, toks, self.message])

    def as_text(self) -> str:
        where = f" tokens {','.join(map(str, self.token_indices))}" if self.token_indices else ""
        return f"{self.sentence_id}:{where} {self.severity} {self.code}: {self.message}"


def check_wellformed(tree: DependencyTree, *, root_label: str | None = "root") -> list[Diagnostic]:
    """Structural findings: TREE-MULTIROOT, TREE-CYCLE and TREE-ORPHAN.

    A tree is well-formed iff exactly one token has head 0 with deprel
    ``root``, no other token is labelled ``root``, every head points at an
    existing token and the head relation has no cycle. Pass
    ``root_label=None`` for schemes (Sejong) whose root carries a phrase label.
    """
    sid = tree.sentence_id
    n = len(tree.tokens)
    heads = [0] + [t.head for t in tree.tokens]
    found: list[Diagnostic] = []

    roots = [t.index for t in tree.tokens if t.head == 0]
    if not roots:
        found.append(Diagnostic("TREE-MULTIROOT", "error", sid, (), "sentence has no root token"))
    elif len(roots) > 1:
        found.append(Diagnostic("TREE-MULTIROOT", "error", sid, tuple(roots),
                                f"{len(roots)} tokens attach to the root"))
    mislabelled = [t.index for t in tree.tokens
                   if (t.head == 0) != (base_relation(t.deprel) == root_label)] if root_label else []
    if mislabelled:
        found.append(Diagnostic("TREE-MULTIROOT", "error", sid, tuple(mislabelled),
                                "root label and head 0 must coincide"))

    for t in tree.tokens:
        if t.head > n:
            found.append(Diagnostic("TREE-ORPHAN", "error", sid, (t.index,),
                                    f"head {t.head} does not exist"))

    # colour walk over the functional graph: 0 unseen, 1 on current path, 2 done
    state = [0] * (n + 1)
    for start in range(1, n + 1):
        path = []
        node = start
        while 1 <= node <= n and state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node]
        if 1 <= node <= n and state[node] == 1:
            cycle = path[path.index(node):]
            found.append(Diagnostic("TREE-CYCLE", "error", sid, tuple(sorted(cycle)),
                                    "head relation is cyclic"))
        for p in path:
            state[p] = 2
    found.sort(key=Diagnostic.sort_key)
    return found


def is_wellformed(tree: DependencyTree, *, root_label: str | None = "root") -> bool:
    return not check_wellformed(tree, root_label=root_label)
