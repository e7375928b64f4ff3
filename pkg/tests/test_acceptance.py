"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

from __future__ import annotations

import random
import time

import pytest

from corpus import LOGICS, check_formula, corpus, random_seqtree
from nested_tense.countermodel import (
    build_blueprint,
    check_frame_conditions,
    countermodel,
    eval_formula,
    verify_countermodel,
)
from nested_tense.formula import parse
from nested_tense.morphism import find_strong_morphism, verify_morphism
from nested_tense.oracle import Invalid, brute_force_validity
from nested_tense.proof import check_proof, extract_proof
from nested_tense.prover import prove
from nested_tense.sequent import SeqTree, parse_seqtree
from test_morphism import brute_force_strong_maps, related_pair
from test_prover import unordered

NESTED_BOX = "(q -> r) | box (box (false -> false) | bbox false)"
BOX_OR_IMP = "box (p -> q) | (r -> s)"
SYMMETRY_EXAMPLE = "(bdia p -> dia p) & (p -> box dia p)"

NESTED_BOX_SHAPE = (
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
)


@pytest.fixture
def report(capsys):
    def emit(number: int, problems: list[str], detail: str) -> None:
        status = "PASS" if not problems else "FAIL"
        line = f"criterion {number}: {status} {detail}"
        if problems:
            line += " | " + "; ".join(problems[:5])
        with capsys.disabled():
            print("\n" + line)
        assert not problems, line
    return emit


def test_criterion_1_nested_box(report):
    problems = []
    t0 = time.perf_counter()
    v = prove(SeqTree.of_formula(parse(NESTED_BOX)), "")
    proof = extract_proof(v) if v.provable else None
    checked = proof is not None and check_proof(proof, "")
    elapsed = time.perf_counter() - t0
    if not v.provable:
        problems.append("not provable")
    db = [n for n in v.tree.nodes if n.rule == "db"]
    branching = [n for n in db if len(n.children) == 2]
    # three db applications, two of them branching
    if len(db) != 3 or len(branching) != 2:
        problems.append(f"{len(db)} db nodes, {len(branching)} branching")
    if unordered(v.tree.shape()) != unordered(NESTED_BOX_SHAPE):
        problems.append("computation tree shape differs")
    if proof is None or proof.rules() != ["orR", "boxR", "orR", "boxR", "impR", "botL"]:
        problems.append(f"proof rules {proof.rules() if proof else None}")
    if not checked:
        problems.append("proof rejected")
    if elapsed >= 1:
        problems.append(f"took {elapsed:.2f}s")
    report(1, problems, f"nested box example provable, {len(db)} db nodes ({len(branching)} branching), "
                        f"6-rule proof checked, {elapsed * 1000:.0f} ms")


def test_criterion_2_box_or_imp(report):
    problems = []
    t0 = time.perf_counter()
    v = prove(SeqTree.of_formula(parse(BOX_OR_IMP)), "")
    bp = build_blueprint(v)
    m, _ = countermodel(v)
    frame_ok = check_frame_conditions(m, "")
    verified = verify_countermodel(m, bp, v.tree.input)
    refuted = not eval_formula(m, (0, 1), parse(BOX_OR_IMP))
    elapsed = time.perf_counter() - t0
    if v.provable:
        problems.append("provable")
    if (len(bp.nodes), len(bp.saturated)) != (5, 4):
        problems.append(f"blueprint {len(bp.nodes)} nodes, |S| = {len(bp.saturated)}")
    if len(m.worlds) != 6 or len(m.R) != 2:
        problems.append(f"{len(m.worlds)} worlds, {len(m.R)} R-pairs")
    val = {x: set(a) for x, a in m.valuation.items() if a}
    if val != {(0, 4): {"r"}, (1, 3): {"p"}}:
        problems.append(f"valuation {val}")
    if not (frame_ok and verified and refuted):
        problems.append(f"frame {frame_ok}, verified {verified}, refuted at (w,1) {refuted}")
    if elapsed >= 1:
        problems.append(f"took {elapsed:.2f}s")
    report(2, problems, f"box-or-implication model with {len(m.worlds)} worlds, {len(m.R)} R-pairs, "
                        f"verified, {elapsed * 1000:.0f} ms")


def test_criterion_3_looping(report):
    problems = []
    t0 = time.perf_counter()
    v = prove(parse_seqtree("~box p, ~bbox q |-"), "")
    m, bp = countermodel(v)
    verified = verify_countermodel(m, bp, v.tree.input)
    elapsed = time.perf_counter() - t0
    if v.provable:
        problems.append("provable")
    good = [
        r for r in v.repeats
        if r.companion in v.tree.ancestors(r.repeat) and verify_morphism(r.morphism)
    ]
    if not good:
        problems.append("no verified repeat with an ancestor companion")
    if not verified:
        problems.append("model rejected")
    if elapsed >= 5:
        problems.append(f"took {elapsed:.2f}s")
    report(3, problems, f"looping sequent search has {len(good)} verified repeats, model verified, "
                        f"{elapsed * 1000:.0f} ms")


def test_criterion_4_logic_separation(report):
    problems = []
    cases = [
        (SYMMETRY_EXAMPLE, lambda c: "B" in c),
        ("box p -> p", lambda c: "T" in c),
        ("box p -> dia p", lambda c: "T" in c or "D" in c),
    ]
    checked = 0
    for text, expected in cases:
        a = parse(text)
        for logic in LOGICS:
            v = prove(SeqTree.of_formula(a), logic)
            checked += 1
            if v.provable != expected(logic):
                problems.append(f"{text} in '{logic}': provable={v.provable}")
                continue
            if v.provable:
                if not check_proof(extract_proof(v), logic):
                    problems.append(f"{text} in '{logic}': proof rejected")
            else:
                m, bp = countermodel(v)
                if not verify_countermodel(m, bp, v.tree.input):
                    problems.append(f"{text} in '{logic}': model rejected")
                if not brute_force_validity(a, logic, 3).is_invalid:
                    problems.append(f"{text} in '{logic}': oracle finds no counter-model up to 3")
    report(4, problems, f"{checked} formula/logic pairs separate as expected, "
                        "negatives confirmed by the oracle at bound 3")


def test_criterion_5_excluded_middle(report):
    problems = []
    a = parse("p | (p -> false)")
    for logic in LOGICS:
        v = prove(SeqTree.of_formula(a), logic)
        if v.provable:
            problems.append(f"provable in '{logic}'")
            continue
        m, bp = countermodel(v)
        if not verify_countermodel(m, bp, v.tree.input):
            problems.append(f"model rejected in '{logic}'")
    oracle = brute_force_validity(a, "", 2).outcome
    if not (isinstance(oracle, Invalid) and len(oracle.model.worlds) == 2):
        problems.append(f"oracle outcome {oracle}")
    report(5, problems, "excluded middle refuted in all six logics, oracle gives a 2-world model")


def test_criterion_6_fuzz(report):
    problems = []
    formulas = corpus(2024, 500)
    t0 = time.perf_counter()
    counts = []
    refuted = 0
    for logic in LOGICS:
        provable = invalid = 0
        for a in formulas:
            out = check_formula(a, logic, oracle_bound=3)
            provable += out.provable
            invalid += bool(out.oracle_invalid)
            problems.extend(f"'{logic}' {a}: {p}" for p in out.violations)
        counts.append(f"{logic or '-'}:{provable}/{len(formulas) - provable}")
        refuted += invalid
    elapsed = time.perf_counter() - t0
    if elapsed >= 600:
        problems.append(f"took {elapsed:.0f}s")
    report(6, problems, f"{len(formulas)} formulas x {len(LOGICS)} logics, {len(problems)} violations, "
                        f"{refuted} oracle refutations (provable/not: {' '.join(counts)}), {elapsed:.0f}s")


def test_criterion_7_morphisms(report):
    problems = []
    rng = random.Random(7)
    positives = 0
    pairs = 300
    for k in range(pairs):
        a, b = related_pair(rng) if k % 3 else (random_seqtree(rng, 6), random_seqtree(rng, 6))
        found = find_strong_morphism(a, b)
        maps = [dict(m) for m in brute_force_strong_maps(a, b)]
        if (found is not None) != bool(maps):
            problems.append(f"pair {k}: search {found is not None}, brute force {bool(maps)}")
        elif found is not None:
            positives += 1
            if dict(found.mapping) not in maps or not verify_morphism(found):
                problems.append(f"pair {k}: returned map is not a strong morphism")
    report(7, problems, f"{pairs} seq-tree pairs agree with brute force ({positives} with a morphism)")
