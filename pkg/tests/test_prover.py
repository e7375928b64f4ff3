from __future__ import annotations

import itertools

import pytest

from corpus import LOGICS, corpus
from nested_tense.formula import parse
from nested_tense.morphism import verify_morphism
from nested_tense.prover import (
    BudgetExceeded,
    db_premises,
    describe,
    is_initial,
    is_repeat,
    is_saturated,
    is_stable,
    next_step,
    prove,
)
from nested_tense.sequent import SeqTree, parse_seqtree, sequent_modal_depth

NESTED_BOX = "(q -> r) | box (box (false -> false) | bbox false)"
BOX_OR_IMP = "box (p -> q) | (r -> s)"
LOOPING = "~box p, ~bbox q |-"
LOOP_G = parse_seqtree(
    "@0 ~box p, ~bbox q |- box p, bbox q, (f)[@1 |- p], (b)[@2 |-], (f)[@3 |-], (b)[@4 |-], (f)[@5 |-]"
)
LOOP_H = parse_seqtree("@0 ~box p, ~bbox q |- box p, bbox q, (f)[@3 |- p], (b)[@4 |-], (f)[@5 |-]")


def unordered(shape: tuple) -> tuple:
    tag, label, kids = shape
    return (tag, label, tuple(sorted(unordered(k) for k in kids)))


def run(text: str, logic: str = "", **kw):
    return prove(SeqTree.of_formula(parse(text)), logic, **kw)


def test_is_initial_examples():
    assert is_initial(parse_seqtree("p |- p"))
    assert is_initial(parse_seqtree("false |-"))
    assert not is_initial(parse_seqtree("p |- (f)[|- p]"))
    assert is_initial(parse_seqtree("|- (f)[box p |- q, box p]"))


def test_is_saturated_examples():
    assert is_saturated(parse_seqtree("|- p -> q"), "", 1)
    assert not is_saturated(parse_seqtree("p |- p"), "", 0)
    assert is_saturated(parse_seqtree("|- (f)[p |- q]"), "", 1)
    assert not is_saturated(parse_seqtree("|- p | q"), "", 0)
    assert not is_saturated(parse_seqtree("dia p |-"), "", 1)
    assert is_saturated(parse_seqtree("dia p |- (f)[p |-]"), "", 1)
    # with D every vertex within the bound needs a forward child
    assert not is_saturated(parse_seqtree("|- p -> q"), "D", 0)
    assert is_saturated(parse_seqtree("|- p -> q, (f)[|-]"), "D", 0)
    # box propagation depends on the closure
    t = parse_seqtree("box p |- (b)[|-]")
    assert is_saturated(t, "", 1)
    assert not is_saturated(t, "B", 1)


def test_is_stable_examples():
    assert is_stable(parse_seqtree("q |- r"), "", 2)
    assert not is_stable(parse_seqtree("|- p -> q"), "", 1)
    assert is_stable(parse_seqtree("|- (f)[|- (b)[|- false]]"), "", 2)


def test_is_repeat_examples():
    hit = is_repeat(LOOP_G, [LOOP_H])
    assert hit is not None
    companion, m = hit
    assert companion is LOOP_H
    assert dict(m.mapping) == {0: 0, 1: 3, 2: 4, 4: 4, 3: 5, 5: 5}
    assert is_repeat(LOOP_G, []) is None
    g = parse_seqtree("p |- q")
    assert is_repeat(g, [parse_seqtree("r |- q"), parse_seqtree("p |- s")]) is None


def test_is_repeat_prefers_nearest_ancestor():
    g = parse_seqtree("p |- q")
    far, near = parse_seqtree("p |- q, (f)[|-]"), parse_seqtree("p |- q")
    companion, _ = is_repeat(g, [near, far])
    assert companion is near


def test_db_premises_box_or_imp():
    g = parse_seqtree("@0 |- box (p -> q), r -> s")
    prem = db_premises(g, "", 1)
    assert [p.tree for p in prem] == [parse_seqtree("|- (f)[|- p -> q]"), parse_seqtree("r |- s")]
    assert [str(p.formula) for p in prem] == [str(parse("box (p -> q)")), str(parse("r -> s"))]
    assert all(p.host == 0 for p in prem)


def test_db_premises_three_way_example():
    g = parse_seqtree("@0 a |- b -> c, (f)[@1 d, e |- box f, bbox g]")
    prem = db_premises(g, "", 2)
    assert [p.tree for p in prem] == [
        parse_seqtree("a, b |- c, (f)[d, e |-]"),
        parse_seqtree("a |- (f)[d, e |- (f)[|- f]]"),
        parse_seqtree("a |- (f)[d, e |- (b)[|- g]]"),
    ]
    assert [p.host for p in prem] == [0, 1, 1]


def test_db_premises_nested_box():
    g = parse_seqtree("|- (f)[|- box (false -> false), bbox false]")
    prem = db_premises(g, "", 2)
    assert [p.tree for p in prem] == [
        parse_seqtree("|- (f)[|- (f)[|- false -> false]]"),
        parse_seqtree("|- (f)[|- (b)[|- false]]"),
    ]


def test_db_premises_preconditions():
    with pytest.raises(ValueError):
        db_premises(parse_seqtree("|- p | q"), "", 0)
    with pytest.raises(ValueError):
        db_premises(parse_seqtree("q |- r"), "", 0)


def test_nested_box_run():
    v = run(NESTED_BOX)
    assert v.provable
    tree = v.tree
    assert len(tree) == 8
    # siblings are unordered, as in an isomorphism check
    assert unordered(tree.shape()) == unordered((
        "orR", True, (
            ("db", True, (
                ("stable", False, ()),
                ("orR", True, (
                    ("db", True, (
                        ("db", True, (("botL", True, ()),)),
                        ("stable", False, ()),
                    )),
                )),
            )),
        ),
    ))
    leaves = {str(n.tree): n.label for n in tree.nodes if not n.children}
    assert leaves["q |- r"] is False
    assert leaves["|- (f)[|- (b)[|- false]]"] is False


def test_box_or_imp_run():
    v = run(BOX_OR_IMP)
    assert not v.provable
    assert len(v.tree) == 5
    assert all(n.label is False for n in v.tree.nodes)
    assert [n.rule or n.status for n in v.tree.nodes] == ["orR", "db", "db", "stable", "stable"]
    assert [n.parent for n in v.tree.nodes] == [None, 0, 1, 2, 1]
    assert str(v.tree[3].tree) == "|- (f)[p |- q]"
    assert str(v.tree[4].tree) == "r |- s"


def test_looping_run_has_repeat_with_ancestor_companion():
    v = prove(parse_seqtree(LOOPING), "")
    assert not v.provable
    assert v.repeats
    for rec in v.repeats:
        assert rec.companion in v.tree.ancestors(rec.repeat)
        assert v.tree[rec.companion].saturated
        assert verify_morphism(rec.morphism)
        assert rec.morphism.source.same_as(v.tree[rec.repeat].tree)
        assert rec.morphism.target.same_as(v.tree[rec.companion].tree)


def test_labels_follow_rule_semantics():
    for a in corpus(21, 60):
        tree = prove(SeqTree.of_formula(a), "").tree
        for n in tree.nodes:
            kids = [tree[c].label for c in n.children]
            if n.status is not None:
                assert not kids and n.label == (n.status in ("id", "botL"))
            elif n.rule == "db":
                assert n.label == any(kids)
            else:
                assert n.label == all(kids)


def test_deterministic_trace():
    for text in (NESTED_BOX, BOX_OR_IMP, "box p -> dia p"):
        lines_a, lines_b = [], []
        run(text, "D", trace=lines_a.append)
        run(text, "D", trace=lines_b.append)
        assert lines_a == lines_b


def test_trace_format():
    lines = []
    v = run(NESTED_BOX, trace=lines.append)
    assert len(lines) == len(v.tree)
    assert lines[0].startswith("0 orR - |- ")
    for line in lines[1:]:
        index, tag, parent, sequent = line.split(" ", 3)
        node = v.tree[int(index)]
        assert tag == (node.rule or node.status)
        assert int(parent) == node.parent
        assert sequent == str(node.tree)


def test_budget_exceeded_is_an_error():
    with pytest.raises(BudgetExceeded):
        prove(parse_seqtree(LOOPING), "", budget=10)


def test_invalid_logic_rejected():
    with pytest.raises(ValueError):
        run("p", "TX")


@pytest.mark.parametrize("logic", LOGICS)
def test_structural_invariants(logic):
    fresh = itertools.count(10**6).__next__
    for a in corpus(22, 80):
        v = prove(SeqTree.of_formula(a), logic)
        md = v.tree.input_md
        assert md == sequent_modal_depth(v.tree.input)
        for n in v.tree.nodes:
            g = n.tree
            assert all(g.depth(w) <= md + 1 for w in g.names)
            if n.parent is not None:
                before = v.tree[n.parent].tree
                assert set(before.names) <= set(g.names)
                assert set(before.edges()) <= set(g.edges())
            if not is_initial(g):
                # the search stops expanding exactly when saturation holds
                assert n.saturated == is_saturated(g, logic, md)
                assert n.saturated == (next_step(g, v.tree.logic, md, fresh) is None)
            if n.saturated and "D" in logic:
                for w in g.names:
                    assert (not g.children(w)) == (g.depth(w) == md + 1)


def test_workers_match_sequential():
    for text, logic in ((NESTED_BOX, ""), ("box p -> dia p", "D"), ("(bdia p -> dia p) & (p -> box dia p)", "B")):
        seq = run(text, logic)
        par = run(text, logic, workers=2)
        assert_same_tree(seq, par)
    seq = prove(parse_seqtree(LOOPING), "")
    par = prove(parse_seqtree(LOOPING), "", workers=2)
    assert_same_tree(seq, par)


def assert_same_tree(a, b):
    assert a.provable == b.provable
    assert len(a.tree) == len(b.tree)
    for x, y in zip(a.tree.nodes, b.tree.nodes):
        assert x.tree.same_as(y.tree)
        assert (x.rule, x.status, x.parent, x.children, x.label) == (y.rule, y.status, y.parent, y.children, y.label)
        assert (x.vertex, x.formula, x.target, x.via) == (y.vertex, y.formula, y.target, y.via)
    assert [(r.repeat, r.companion, dict(r.morphism.mapping)) for r in a.repeats] == \
        [(r.repeat, r.companion, dict(r.morphism.mapping)) for r in b.repeats]


def test_describe():
    assert describe(run("box p -> p", "T")) == "|- box p -> p is provable in IK_tT"
    assert describe(run("box p -> p")) == "|- box p -> p is not provable in IK_t"
