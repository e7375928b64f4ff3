"""Proofs: extraction from successful searches, checking, and serialization.

The checker is deliberately written against the rule schemas rather than
against the search code: each rule instance is validated by comparing the
conclusion with its premises vertex by vertex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .formula import (
    And,
    Atom,
    BBox,
    BDia,
    Bottom,
    Box,
    Dia,
    Direction,
    Formula,
    Imp,
    Or,
    box_direction,
    diamond_direction,
    parse,
    render,
)
from .prover import ComputationTree, Verdict
from .sequent import (
    SeqTree,
    Sequent,
    c_closure,
    parse_seqtree,
    render_seqtree,
    strip_consequents,
)

LEAF_RULES = ("id", "botL")


@dataclass
class ProofNode:
    sequent: SeqTree
    rule: str
    children: list[ProofNode] = field(default_factory=list)
    principal_vertex: int | None = None
    principal_formula: Formula | None = None
    target_vertex: int | None = None

    def walk(self) -> Iterator[ProofNode]:
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def rules(self) -> list[str]:
        return [n.rule for n in self.walk()]


Proof = ProofNode


class NotProvable(ValueError):
    pass


_DB_TAGS = {Imp: "impR", Box: "boxR", BBox: "bboxR"}


def extract_proof(v: Verdict) -> Proof:
    """Prune a successful computation tree down to a proof."""
    if not v.provable:
        raise NotProvable("the search failed; there is no proof to extract")
    ct = v.tree
    return _extract(ct, 0)


def _extract(ct: ComputationTree, i: int) -> ProofNode:
    root = None
    # iterative to cope with long branches
    stack: list[tuple[int, ProofNode | None]] = [(i, None)]
    while stack:
        idx, parent = stack.pop()
        n = ct[idx]
        if n.status is not None:
            pn = ProofNode(n.tree, n.status, [], n.vertex, n.formula)
            kids: list[int] = []
        elif n.rule == "db":
            chosen = min(c for c in n.children if ct[c].label)
            host, formula = ct[chosen].via
            pn = ProofNode(n.tree, _DB_TAGS[type(formula)], [], host, formula)
            kids = [chosen]
        else:
            pn = ProofNode(n.tree, n.rule, [], n.vertex, n.formula, n.target)
            kids = list(n.children)
        if parent is None:
            root = pn
        else:
            parent.children.append(pn)
        stack.extend((k, pn) for k in reversed(kids))
    assert root is not None
    return root


# --------------------------------------------------------------- checking


class ProofError(Exception):
    pass


def _fail(msg: str) -> None:
    raise ProofError(msg)


def _same_shape(g: SeqTree, p: SeqTree) -> bool:
    return g.root == p.root and set(g.names) == set(p.names) and all(
        g.parent(w) == p.parent(w) and (w == g.root or g.direction(w) is p.direction(w))
        for w in g.names
    )


def _grown_shape(g: SeqTree, p: SeqTree, host: int, d: Direction) -> int:
    """Check ``p`` is ``g`` plus one fresh leaf below ``host`` along ``d``."""
    extra = set(p.names) - set(g.names)
    if len(extra) != 1 or not set(g.names) <= set(p.names):
        _fail("premise must add exactly one fresh component")
    (n,) = extra
    if p.parent(n) != host or p.direction(n) is not d:
        _fail(f"new component {n} is not a {d.value}-child of {host}")
    if p.children(n):
        _fail(f"new component {n} is not a leaf")
    if g.root != p.root or any(
        g.parent(w) != p.parent(w) or (w != g.root and g.direction(w) is not p.direction(w))
        for w in g.names
    ):
        _fail("premise changes the existing tree structure")
    return n


def _labels_equal_except(g: SeqTree, p: SeqTree, skip: Iterable[int]) -> None:
    skip = set(skip)
    for w in g.names:
        if w not in skip and g.label(w) != p.label(w):
            _fail(f"component {w} changed unexpectedly")


def _side_ok(before: frozenset, after: frozenset, principal: Formula, added: Iterable[Formula]) -> bool:
    """``after`` is ``before`` plus ``added``, with ``principal`` optionally dropped."""
    added = set(added)
    return after in (before | added, (before - {principal}) | added)


def _check_node(n: ProofNode, logic: frozenset[str], atomic_id: bool) -> None:
    g, rule, kids = n.sequent, n.rule, n.children
    w, a = n.principal_vertex, n.principal_formula
    if w is None or w not in g:
        _fail("missing or unknown principal vertex")
    arity = {"id": 0, "botL": 0, "orL": 2, "andR": 2, "impL": 2}.get(rule, 1)
    if len(kids) != arity:
        _fail(f"rule {rule} needs {arity} premises, found {len(kids)}")
    ant, cons = g.antecedent(w), g.consequent(w)
    prem = [k.sequent for k in kids]

    if rule == "id":
        if a is None or a not in ant or a not in cons:
            _fail("id: principal formula is not on both sides of one component")
        if atomic_id and not isinstance(a, Atom):
            _fail("id: principal formula is not atomic")
        return
    if rule == "botL":
        if Bottom() not in ant:
            _fail("botL: no false in the antecedent")
        return
    if rule == "d":
        if "D" not in logic:
            _fail("d is only available when D is in the logic")
        n_ = _grown_shape(g, prem[0], w, Direction.F)
        _labels_equal_except(g, prem[0], ())
        if prem[0].label(n_) != Sequent():
            _fail("d: new component must be empty")
        return

    if rule in ("orL", "andL", "impL", "diaL", "bdiaL", "boxL", "bboxL"):
        if a not in ant:
            _fail(f"{rule}: principal formula not in the antecedent of {w}")
    else:
        if a not in cons:
            _fail(f"{rule}: principal formula not in the consequent of {w}")

    expected_type = {
        "orL": Or, "orR": Or, "andL": And, "andR": And, "impL": Imp, "impR": Imp,
        "diaL": Dia, "bdiaL": BDia, "diaR": Dia, "bdiaR": BDia,
        "boxL": Box, "bboxL": BBox, "boxR": Box, "bboxR": BBox,
    }.get(rule)
    if expected_type is None:
        _fail(f"unknown rule {rule!r}")
    if not isinstance(a, expected_type):
        _fail(f"{rule}: principal formula {render(a)} has the wrong shape")

    if rule in ("orL", "andR", "impL", "orR", "andL", "diaR", "bdiaR", "boxL", "bboxL"):
        for p in prem:
            if not _same_shape(g, p):
                _fail(f"{rule}: premise changes the tree structure")

    if rule == "orL":
        for p, part in zip(prem, (a.left, a.right)):
            _labels_equal_except(g, p, [w])
            if p.consequent(w) != cons or not _side_ok(ant, p.antecedent(w), a, [part]):
                _fail("orL: premise is not an instance")
    elif rule == "orR":
        _labels_equal_except(g, prem[0], [w])
        if prem[0].antecedent(w) != ant or not _side_ok(cons, prem[0].consequent(w), a, [a.left, a.right]):
            _fail("orR: premise is not an instance")
    elif rule == "andL":
        _labels_equal_except(g, prem[0], [w])
        if prem[0].consequent(w) != cons or not _side_ok(ant, prem[0].antecedent(w), a, [a.left, a.right]):
            _fail("andL: premise is not an instance")
    elif rule == "andR":
        for p, part in zip(prem, (a.left, a.right)):
            _labels_equal_except(g, p, [w])
            if p.antecedent(w) != ant or not _side_ok(cons, p.consequent(w), a, [part]):
                _fail("andR: premise is not an instance")
    elif rule == "impL":
        p1, p2 = prem
        _labels_equal_except(g, p1, [w])
        _labels_equal_except(g, p2, [w])
        if p1.antecedent(w) != ant or p1.consequent(w) != cons | {a.left}:
            _fail("impL: left premise is not an instance")
        if p2.consequent(w) != cons or not _side_ok(ant, p2.antecedent(w), a, [a.right]):
            _fail("impL: right premise is not an instance")
    elif rule == "impR":
        p = prem[0]
        if not _same_shape(g, p):
            _fail("impR: premise changes the tree structure")
        _check_stripped(g, p, skip=[w])
        if p.antecedent(w) != ant | {a.left} or p.consequent(w) != {a.right}:
            _fail("impR: premise is not an instance")
    elif rule in ("boxR", "bboxR"):
        p = prem[0]
        new = _grown_shape(g, p, w, box_direction(a))
        _check_stripped(g, p, skip=[new])
        if p.label(new) != Sequent.of((), [a.body]):
            _fail(f"{rule}: new component must be |- {render(a.body)}")
    elif rule in ("diaL", "bdiaL"):
        p = prem[0]
        new = _grown_shape(g, p, w, diamond_direction(a))
        _labels_equal_except(g, p, [w])
        if p.consequent(w) != cons or p.antecedent(w) not in (ant, ant - {a}):
            _fail(f"{rule}: principal component changed unexpectedly")
        if p.label(new) != Sequent.of([a.body]):
            _fail(f"{rule}: new component must be {render(a.body)} |-")
    elif rule in ("diaR", "bdiaR", "boxL", "bboxL"):
        p = prem[0]
        d = diamond_direction(a) or box_direction(a)
        left = rule in ("boxL", "bboxL")
        changed = [u for u in g.names if g.label(u) != p.label(u)]
        if len(changed) > 1:
            _fail(f"{rule}: more than one component changed")
        u = changed[0] if changed else n.target_vertex
        if u is None:
            _fail(f"{rule}: cannot determine the receiving component")
        if n.target_vertex is not None and n.target_vertex != u:
            _fail(f"{rule}: recorded target {n.target_vertex} differs from the changed component {u}")
        if (w, u, d) not in c_closure(g, logic):
            _fail(f"{rule}: {w} does not reach {u} along {d.value} in the closure")
        if left:
            ok = p.consequent(u) == g.consequent(u) and p.antecedent(u) == g.antecedent(u) | {a.body}
        else:
            ok = p.antecedent(u) == g.antecedent(u) and p.consequent(u) == g.consequent(u) | {a.body}
        if not ok:
            _fail(f"{rule}: premise is not an instance")
    else:
        _fail(f"unknown rule {rule!r}")


def _check_stripped(g: SeqTree, p: SeqTree, skip: Iterable[int]) -> None:
    skip = set(skip)
    for u in g.names:
        if u in skip:
            continue
        if p.antecedent(u) != g.antecedent(u) or p.consequent(u):
            _fail(f"component {u} must keep its antecedent and lose its consequent")


def proof_error(proof: Proof, logic: Iterable[str] = (), atomic_id: bool = False) -> str | None:
    """A message naming the first invalid node (pre-order), or None."""
    logic = frozenset(logic)
    for i, n in enumerate(proof.walk()):
        try:
            _check_node(n, logic, atomic_id)
        except ProofError as exc:
            return f"node {i} ({n.rule}, {render_seqtree(n.sequent)}): {exc}"
        except Exception as exc:  # malformed node data
            return f"node {i} ({n.rule}): malformed instance ({exc!r})"
    return None


def check_proof(proof: Proof, logic: Iterable[str] = (), atomic_id: bool = False) -> bool:
    """True iff every node is an instance of its rule.

    With ``atomic_id`` the id rule is restricted to atoms; otherwise any
    formula may close a branch, which ``expand_identities`` can undo.
    """
    return proof_error(proof, logic, atomic_id) is None


# --------------------------------------------------- identity expansion


def expand_identities(proof: Proof) -> Proof:
    """Replace non-atomic id leaves by derivations ending in atomic ones."""

    def copy(n: ProofNode) -> ProofNode:
        if n.rule == "id" and not isinstance(n.principal_formula, Atom):
            return _identity(n.sequent, n.principal_vertex, n.principal_formula)
        return ProofNode(n.sequent, n.rule, [copy(c) for c in n.children],
                         n.principal_vertex, n.principal_formula, n.target_vertex)

    return copy(proof)


def _identity(g: SeqTree, w: int, a: Formula) -> ProofNode:
    """A derivation of ``g`` where ``a`` occurs on both sides of ``w``."""
    if isinstance(a, Atom):
        return ProofNode(g, "id", [], w, a)
    if isinstance(a, Bottom):
        return ProofNode(g, "botL", [], w, a)
    s = g.label(w)
    if isinstance(a, And):
        g1 = g.with_label(w, s.add([a.left, a.right]))
        s1 = g1.label(w)
        right = ProofNode(g1, "andR", [
            _identity(g1.with_label(w, s1.add((), [a.left])), w, a.left),
            _identity(g1.with_label(w, s1.add((), [a.right])), w, a.right),
        ], w, a)
        return ProofNode(g, "andL", [right], w, a)
    if isinstance(a, Or):
        g1 = g.with_label(w, s.add((), [a.left, a.right]))
        s1 = g1.label(w)
        left = ProofNode(g1, "orL", [
            _identity(g1.with_label(w, s1.add([a.left])), w, a.left),
            _identity(g1.with_label(w, s1.add([a.right])), w, a.right),
        ], w, a)
        return ProofNode(g, "orR", [left], w, a)
    if isinstance(a, Imp):
        g1 = strip_consequents(g).with_label(w, Sequent(s.antecedent | {a.left}, frozenset({a.right})))
        s1 = g1.label(w)
        left = ProofNode(g1, "impL", [
            _identity(g1.with_label(w, s1.add((), [a.left])), w, a.left),
            _identity(g1.with_label(w, s1.add([a.right])), w, a.right),
        ], w, a)
        return ProofNode(g, "impR", [left], w, a)
    fresh = g.max_name + 1
    d = diamond_direction(a)
    if d is not None:
        tag = "diaL" if d is Direction.F else "bdiaL"
        g1 = g.add_child(w, d, Sequent.of([a.body]), fresh)
        g2 = g1.with_label(fresh, g1.label(fresh).add((), [a.body]))
        right = ProofNode(g1, "diaR" if d is Direction.F else "bdiaR",
                          [_identity(g2, fresh, a.body)], w, a, fresh)
        return ProofNode(g, tag, [right], w, a, fresh)
    d = box_direction(a)
    g1 = strip_consequents(g).add_child(w, d, Sequent.of((), [a.body]), fresh)
    g2 = g1.with_label(fresh, g1.label(fresh).add([a.body]))
    left = ProofNode(g1, "boxL" if d is Direction.F else "bboxL",
                     [_identity(g2, fresh, a.body)], w, a, fresh)
    return ProofNode(g, "boxR" if d is Direction.F else "bboxR", [left], w, a, fresh)


# ---------------------------------------------------------- serialization


def proof_to_dict(proof: Proof) -> dict:
    nodes = list(proof.walk())
    index = {id(n): i for i, n in enumerate(nodes)}
    return {
        "root": 0,
        "nodes": [
            {
                "sequent": render_seqtree(n.sequent, names=True),
                "rule": n.rule,
                "children": [index[id(c)] for c in n.children],
                "principal_vertex": n.principal_vertex,
                "principal_formula": None if n.principal_formula is None else render(n.principal_formula),
                "target_vertex": n.target_vertex,
            }
            for n in nodes
        ],
    }


def proof_from_dict(data: dict) -> Proof:
    raw = data["nodes"]
    built = [
        ProofNode(
            parse_seqtree(r["sequent"]),
            r["rule"],
            [],
            r.get("principal_vertex"),
            None if r.get("principal_formula") is None else parse(r["principal_formula"]),
            r.get("target_vertex"),
        )
        for r in raw
    ]
    for node, r in zip(built, raw):
        node.children = [built[c] for c in r["children"]]
    return built[data.get("root", 0)]


def proof_to_json(proof: Proof, indent: int | None = 2) -> str:
    return json.dumps(proof_to_dict(proof), indent=indent)


def proof_from_json(text: str) -> Proof:
    return proof_from_dict(json.loads(text))


def format_proof(proof: Proof) -> str:
    """Indented listing, conclusion first."""
    lines = []
    stack = [(proof, 0)]
    while stack:
        n, depth = stack.pop()
        lines.append(f"{'  ' * depth}{render_seqtree(n.sequent)}   [{n.rule}]")
        stack.extend((c, depth + 1) for c in reversed(n.children))
    return "\n".join(lines)


def proof_to_dot(proof: Proof) -> str:
    lines = ["digraph proof {", "  node [shape=box];"]
    nodes = list(proof.walk())
    index = {id(n): i for i, n in enumerate(nodes)}
    for i, n in enumerate(nodes):
        text = render_seqtree(n.sequent).replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  n{i} [label="{text}\\n{n.rule}"];')
        for c in n.children:
            lines.append(f"  n{i} -> n{index[id(c)]};")
    lines.append("}")
    return "\n".join(lines)
