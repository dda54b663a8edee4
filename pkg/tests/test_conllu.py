import itertools
import random
import warnings

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from conftest import EXAMPLES
from treegen import random_tree
from korean_ud.conllu import (ConlluError, DependencyTree, Diagnostic, IllFormedTree, Relation, Token,
                              check_wellformed, children, is_wellformed, parse_document,
                              serialize_document, serialize_tree)

SIPDA = (EXAMPLES / "sipda_current.conllu").read_text(encoding="utf-8")


def row(*cols):
    return "\t".join(str(c) for c in cols) + "\n"


def tree_of(heads, labels=None):
    toks = tuple(Token(i, f"w{i}", head=h, deprel=(labels[i - 1] if labels else ("root" if h == 0 else "dep")))
                 for i, h in enumerate(heads, 1))
    return DependencyTree("t", "", toks)


def test_parse_sipda():
    (tree,) = parse_document(SIPDA)
    assert tree.sentence_id == "sipda"
    assert tree.text == "나는 장동건 사진을 보고 싶다"
    assert len(tree) == 5
    assert tree[1].form == "나는" and tree[1].xpos_tags == ["np", "jx"]
    assert tree.heads == [4, 4, 2, 0, 4]
    assert tree.root() == 4
    assert tree[3].feats == ""  # "_" placeholder


def test_round_trip_is_byte_exact():
    for path in EXAMPLES.glob("*.conllu"):
        text = path.read_text(encoding="utf-8")
        labels = None
        if path.name == "sejong.conllu":
            from korean_ud.sejong import SEJONG_LABELS
            labels = SEJONG_LABELS
        trees = parse_document(text, labels=labels)
        assert serialize_document(trees, root_label=None if labels else "root") == text


def test_empty_document():
    assert parse_document("") == []
    assert serialize_document([]) == ""


def test_comments_kept_verbatim_and_defaults():
    text = "# a comment without equals\n# text = 가 나\n" + row(1, "가", "_", "_", "_", "_", 2, "dep", "_", "_") \
        + row(2, "나", "_", "_", "_", "_", 0, "root", "_", "_") + "\n"
    (tree,) = parse_document(text)
    assert tree.sentence_id == "1"  # ordinal fallback
    assert tree.comments[0] == "# a comment without equals"
    assert serialize_tree(tree) == text
    (bare,) = parse_document(row(1, "가", "_", "_", "_", "_", 0, "root", "_", "_"))
    assert bare.text == "가"


@pytest.mark.parametrize("line, fragment", [
    (row("1-2", "가나", "_", "_", "_", "_", "_", "_", "_", "_"), "multiword"),
    (row("1.1", "가", "_", "_", "_", "_", "_", "_", "_", "_"), "empty node"),
    ("1\t가\t_\n", "10 tab-separated"),
    (row("x", "가", "_", "_", "_", "_", 0, "root", "_", "_"), "non-integer token index"),
    (row(1, "가", "_", "_", "_", "_", "h", "root", "_", "_"), "non-integer head"),
    (row(1, "가", "_", "_", "_", "_", 1, "dep", "_", "_"), "own head"),
    (row(1, "가", "_", "_", "nng++jks", "_", 0, "root", "_", "_"), "empty element"),
    (row(1, "가", "_", "_", "_", "_", 0, "subj", "_", "_"), "unknown relation"),
    (row(1, "가", "_", "_", "_", "_", 0, "obl:tmod", "_", "_"), "unknown relation subtype"),
])
def test_parse_errors_carry_line(line, fragment):
    with pytest.raises(ConlluError) as exc:
        parse_document("# sent_id = x\n" + line)
    assert fragment in str(exc.value)
    assert exc.value.line == 2


def test_index_sequence_errors():
    dup = row(1, "a", "_", "_", "_", "_", 0, "root", "_", "_") + row(1, "b", "_", "_", "_", "_", 2, "dep", "_", "_")
    with pytest.raises(ConlluError, match="duplicate"):
        parse_document(dup)
    gap = row(1, "a", "_", "_", "_", "_", 0, "root", "_", "_") + row(3, "b", "_", "_", "_", "_", 1, "dep", "_", "_")
    with pytest.raises(ConlluError, match="out of sequence"):
        parse_document(gap)
    with pytest.raises(ConlluError, match="no tokens"):
        parse_document("# only a comment\n")


def test_lax_mode_warns_on_unknown_label():
    text = row(1, "가", "_", "_", "_", "_", 0, "root", "_", "_") + row(2, "나", "_", "_", "_", "_", 1, "nmod:tmod", "_", "_")
    with pytest.warns(UserWarning, match="nmod:tmod"):
        (tree,) = parse_document(text, lax=True)
    assert tree[2].deprel == "nmod:tmod"


def test_custom_label_set():
    text = row(1, "가", "_", "_", "_", "_", 2, "NP_SBJ", "_", "_") + row(2, "나", "_", "_", "_", "_", 0, "VP", "_", "_")
    (tree,) = parse_document(text, labels=frozenset({"NP_SBJ", "VP"}))
    assert tree.deprels == ["NP_SBJ", "VP"]
    with pytest.raises(ConlluError):
        parse_document(text)


def test_relation_subtypes():
    assert Relation.parse("obl:arg").is_legal
    assert str(Relation.parse("dislocated:nsubj")) == "dislocated:nsubj"
    assert not Relation.parse("obj:pass").is_legal
    assert Relation.parse("acl") == Relation("acl")


def test_token_invariants():
    with pytest.raises(ValueError):
        Token(0, "x")
    with pytest.raises(ValueError):
        Token(1, "x", head=-1)
    Token(1, "x", xpos="")  # placeholder is fine


def test_tree_indexing_is_one_based():
    tree = tree_of([0, 1])
    assert tree[2].form == "w2"
    with pytest.raises(IndexError):
        tree[0]
    with pytest.raises(IndexError):
        tree[3]


def test_children():
    (tree,) = parse_document(SIPDA)
    assert children(tree, 4) == [1, 2, 5]
    assert children(tree, 0) == [4]
    assert children(tree, 1) == []
    with pytest.raises(IndexError):
        children(tree, 6)


def test_with_edges_clears_deps_only_on_changed_rows():
    toks = (Token(1, "a", head=2, deprel="dep", deps="2:dep"), Token(2, "b", deps="0:root"))
    tree = DependencyTree("t", "", toks)
    assert tree.with_edges([2, 0], ["dep", "root"]) is tree
    changed = tree.with_edges([2, 0], ["nsubj", "root"])
    assert changed[1].deps == "" and changed[2].deps == "0:root"


def test_serialize_refuses_ill_formed_tree():
    with pytest.raises(IllFormedTree, match="t"):
        serialize_tree(tree_of([2, 1]))
    assert serialize_tree(tree_of([2, 1]), check=False).count("\n") == 3


def test_wellformed_codes():
    assert check_wellformed(tree_of([0])) == []
    multi = check_wellformed(tree_of([0, 0]))
    assert [(d.code, d.token_indices) for d in multi] == [("TREE-MULTIROOT", (1, 2))]
    none = check_wellformed(tree_of([2, 1]))
    assert {d.code for d in none} == {"TREE-MULTIROOT", "TREE-CYCLE"}
    assert [d.token_indices for d in none if d.code == "TREE-MULTIROOT"] == [()]
    orphan = check_wellformed(tree_of([0, 7]))
    assert [(d.code, d.token_indices) for d in orphan] == [("TREE-ORPHAN", (2,))]
    mislabel = check_wellformed(tree_of([0, 1], ["root", "root"]))
    assert [(d.code, d.token_indices) for d in mislabel] == [("TREE-MULTIROOT", (2,))]
    # token 4 hangs off the 2-3 cycle: it is not an orphan and the cycle is reported once
    cyc = check_wellformed(tree_of([0, 3, 2, 3]))
    assert [(d.code, d.token_indices) for d in cyc] == [("TREE-CYCLE", (2, 3))]


def test_wellformed_sejong_root_label():
    tree = tree_of([2, 0], ["NP_SBJ", "VNP"])
    assert not is_wellformed(tree)
    assert is_wellformed(tree, root_label=None)


def test_diagnostic_formats():
    d = Diagnostic("TREE-CYCLE", "error", "s1", (2, 3), "head relation is cyclic")
    assert d.as_record() == "s1\tTREE-CYCLE\terror\t2,3\thead relation is cyclic"
    assert Diagnostic("TREE-MULTIROOT", "error", "s1", (), "m").as_record().split("\t")[3] == "_"
    assert "tokens 2,3" in d.as_text()


# -- independent oracle ---------------------------------------------------------

def oracle(heads):
    """Brute force: networkx cycles plus reachability of the single root."""
    n = len(heads)
    g = nx.DiGraph()
    g.add_nodes_from(range(1, n + 1))
    g.add_edges_from((d, h) for d, h in enumerate(heads, 1) if 1 <= h <= n)
    cycles = {frozenset(c) for c in nx.simple_cycles(g)}
    orphans = {d for d, h in enumerate(heads, 1) if h > n}
    roots = [d for d, h in enumerate(heads, 1) if h == 0]
    tree = len(roots) == 1 and not orphans and all(nx.has_path(g, d, roots[0]) for d in g.nodes)
    return tree, cycles, orphans, len(roots) == 1


def all_head_assignments(n):
    choices = [[h for h in range(0, n + 2) if h != i] for i in range(1, n + 1)]
    return itertools.product(*choices)


def compare_with_oracle(heads):
    tree = tree_of(list(heads))
    diags = check_wellformed(tree)
    ok, cycles, orphans, single_root = oracle(list(heads))
    mine_cycles = {frozenset(d.token_indices) for d in diags if d.code == "TREE-CYCLE"}
    mine_orphans = {d.token_indices[0] for d in diags if d.code == "TREE-ORPHAN"}
    mine_multi = any(d.code == "TREE-MULTIROOT" for d in diags)
    return (not diags) == ok and mine_cycles == cycles and mine_orphans == orphans \
        and mine_multi == (not single_root)


def exhaustive_disagreements(max_n=5):
    bad = []
    for n in range(1, max_n + 1):
        for heads in all_head_assignments(n):
            if not compare_with_oracle(heads):
                bad.append(heads)
    return bad


def test_exhaustive_oracle_agreement():
    assert exhaustive_disagreements(5) == []


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=9).map(
    lambda hs: [h if h != i else 0 for i, h in enumerate(hs, 1)]))
def test_oracle_agreement_larger_trees(heads):
    assert compare_with_oracle(heads)


def test_generated_trees_round_trip():
    rng = random.Random(11)
    for k in range(50):
        trees = [random_tree(rng, sid=f"g{k}-{j}") for j in range(rng.randint(1, 5))]
        text = serialize_document(trees)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert serialize_document(parse_document(text)) == text
