"""Counter-models from failed proof search.

The blueprint is the part of the computation tree labelled False that hangs
off the root.  Each saturated blueprint node ``i`` contributes one world
``(w, i)`` per vertex ``w``.  The intuitionistic order follows morphic
sequences (vertices persisting along a branch, and repeats jumping to their
companions); the modal relation is read off the closure inside each node.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable

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
    subformulas,
)
from .morphism import Morphism
from .prover import ComputationTree, RepeatRecord, Verdict, is_saturated
from .sequent import SeqTree, c_closure, logic_name, parse_logic

World = Hashable


class ProvableInput(ValueError):
    pass


@dataclass
class Blueprint:
    """False-labelled part of a computation tree, renumbered in pre-order.

    ``nodes[k]`` is the computation-tree index of the node at position ``k``.
    """

    tree: ComputationTree
    nodes: list[int]
    position: dict[int, int]
    saturated: frozenset[int]
    edges: list[tuple[int, int]]

    def seqtree(self, k: int) -> SeqTree:
        return self.tree[self.nodes[k]].tree

    def children(self, k: int) -> list[int]:
        return [b for a, b in self.edges if a == k]

    def first_saturated(self) -> int:
        return min(self.saturated)


def build_blueprint(v: Verdict) -> Blueprint:
    if v.provable:
        raise ProvableInput("the search succeeded; there is no blueprint")
    ct = v.tree
    nodes: list[int] = []
    stack = [0]
    while stack:
        i = stack.pop()
        nodes.append(i)
        stack.extend(c for c in reversed(ct[i].children) if not ct[c].label)
    position = {i: k for k, i in enumerate(nodes)}
    edges = [
        (position[i], position[c])
        for i in nodes
        for c in ct[i].children
        if c in position
    ]
    saturated = frozenset(
        k for k, i in enumerate(nodes) if is_saturated(ct[i].tree, ct.logic, ct.input_md)
    )
    return Blueprint(ct, nodes, position, saturated, edges)


def blueprint_repeats(bp: Blueprint, repeats: Iterable[RepeatRecord]) -> list[tuple[int, int, Morphism]]:
    """Repeat records restricted to the blueprint, in blueprint positions."""
    out = []
    for r in repeats:
        if r.repeat in bp.position and r.companion in bp.position:
            out.append((bp.position[r.repeat], bp.position[r.companion], r.morphism))
    return out


def _descendants(bp: Blueprint) -> dict[int, set[int]]:
    kids: dict[int, list[int]] = {k: [] for k in range(len(bp.nodes))}
    for a, b in bp.edges:
        kids[a].append(b)
    below: dict[int, set[int]] = {}
    for k in reversed(range(len(bp.nodes))):
        s = {k}
        for c in kids[k]:
            s |= below[c]
        below[k] = s
    return below


def morphic_edges(bp: Blueprint, repeats: Iterable[RepeatRecord]) -> list[tuple[World, World, str]]:
    """Single steps of morphic sequences, tagged ``natural`` or ``strong``."""
    below = _descendants(bp)
    edges = []
    for i in sorted(bp.saturated):
        g = bp.seqtree(i)
        for j in sorted(below[i] & bp.saturated):
            if j != i:
                edges.extend(((w, i), (w, j), "natural") for w in g.names)
    for i, j, m in blueprint_repeats(bp, repeats):
        edges.extend(((w, i), (m.mapping[w], j), "strong") for w in m.source.names)
    return edges


def morphic_reachability(bp: Blueprint, repeats: Iterable[RepeatRecord]) -> frozenset[tuple[World, World]]:
    worlds = _worlds(bp)
    succ: dict[World, set[World]] = {x: set() for x in worlds}
    for x, y, _ in morphic_edges(bp, repeats):
        succ[x].add(y)
    pairs = set()
    for x in worlds:
        seen = {x}
        queue = deque([x])
        while queue:
            y = queue.popleft()
            for z in succ[y]:
                if z not in seen:
                    seen.add(z)
                    queue.append(z)
        pairs.update((x, y) for y in seen)
    return frozenset(pairs)


def _worlds(bp: Blueprint) -> list[World]:
    return [(w, i) for i in sorted(bp.saturated) for w in sorted(bp.seqtree(i).names)]


@dataclass
class KripkeModel:
    """A finite bi-relational model ``(W, <=, R, V)``."""

    worlds: list[World]
    leq: frozenset
    R: frozenset
    valuation: dict
    logic: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        self._up = {x: [] for x in self.worlds}
        for x, y in self.leq:
            self._up[x].append(y)
        self._succ = {x: [] for x in self.worlds}
        self._pred = {x: [] for x in self.worlds}
        for x, y in self.R:
            self._succ[x].append(y)
            self._pred[y].append(x)

    def up(self, x: World) -> list[World]:
        return self._up[x]

    def successors(self, x: World) -> list[World]:
        return self._succ[x]

    def predecessors(self, x: World) -> list[World]:
        return self._pred[x]

    def atoms_at(self, x: World) -> frozenset[str]:
        return frozenset(self.valuation.get(x, ()))


def extract_model(
    bp: Blueprint, repeats: Iterable[RepeatRecord], logic: Iterable[str], input_md: int
) -> KripkeModel:
    logic = frozenset(logic)
    worlds = _worlds(bp)
    leq = morphic_reachability(bp, repeats)
    rel = set()
    valuation = {}
    for i in sorted(bp.saturated):
        g = bp.seqtree(i)
        for x, y, d in c_closure(g, logic).pairs:
            if d is Direction.F:
                rel.add(((x, i), (y, i)))
        if "D" in logic:
            for w in g.names:
                if g.depth(w) == input_md + 1:
                    rel.add(((w, i), (w, i)))
        for w in g.names:
            valuation[(w, i)] = frozenset(a.name for a in g.antecedent(w) if isinstance(a, Atom))
    return KripkeModel(worlds, leq, frozenset(rel), valuation, logic)


def countermodel(v: Verdict) -> tuple[KripkeModel, Blueprint]:
    """Blueprint and model for a failed search."""
    bp = build_blueprint(v)
    m = extract_model(bp, v.repeats, v.tree.logic, v.tree.input_md)
    return m, bp


# ------------------------------------------------------------- semantics


def frame_violations(m: KripkeModel, logic: Iterable[str] = ()) -> list[str]:
    logic = frozenset(logic)
    problems = []
    W = set(m.worlds)
    leq, R = m.leq, m.R
    for x, y in list(leq) + list(R):
        if x not in W or y not in W:
            problems.append(f"pair ({x}, {y}) mentions an unknown world")
            return problems
    for x in m.worlds:
        if (x, x) not in leq:
            problems.append(f"<= is not reflexive at {x}")
    for x, y in leq:
        for z in m.up(y):
            if (x, z) not in leq:
                problems.append(f"<= is not transitive: {x} <= {y} <= {z}")
                break
    # F1: w <= w' and w R v imply v <= v' and w' R v' for some v'
    for w, w2 in leq:
        for v in m.successors(w):
            if not any((w2, v2) in R for v2 in m.up(v)):
                problems.append(f"F1 fails for {w} <= {w2}, {w} R {v}")
    # F2: w R v and v <= v' imply w <= w' and w' R v' for some w'
    for w, v in R:
        for v2 in m.up(v):
            if not any((w2, v2) in R for w2 in m.up(w)):
                problems.append(f"F2 fails for {w} R {v}, {v} <= {v2}")
    for x, y in leq:
        if not m.atoms_at(x) <= m.atoms_at(y):
            problems.append(f"valuation not monotone from {x} to {y}")
    if "T" in logic:
        problems.extend(f"T fails at {x}" for x in m.worlds if (x, x) not in R)
    if "B" in logic:
        problems.extend(f"B fails for {x} R {y}" for x, y in R if (y, x) not in R)
    if "D" in logic:
        problems.extend(f"D fails at {x}" for x in m.worlds if not m.successors(x))
    return problems


def check_frame_conditions(m: KripkeModel, logic: Iterable[str] = ()) -> bool:
    return not frame_violations(m, logic)


class UnknownWorld(KeyError):
    pass


class Evaluator:
    """Truth of formulas at worlds, memoized per (world, formula)."""

    def __init__(self, m: KripkeModel):
        self.m = m
        self.memo: dict[tuple[World, Formula], bool] = {}
        self._worlds = set(m.worlds)

    def __call__(self, x: World, a: Formula) -> bool:
        if x not in self._worlds:
            raise UnknownWorld(x)
        return self._eval(x, a)

    def _eval(self, x: World, a: Formula) -> bool:
        key = (x, a)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        m, ev = self.m, self._eval
        if isinstance(a, Atom):
            val = a.name in m.atoms_at(x)
        elif isinstance(a, Bottom):
            val = False
        elif isinstance(a, And):
            val = ev(x, a.left) and ev(x, a.right)
        elif isinstance(a, Or):
            val = ev(x, a.left) or ev(x, a.right)
        elif isinstance(a, Imp):
            val = all(not ev(y, a.left) or ev(y, a.right) for y in m.up(x))
        elif isinstance(a, Dia):
            val = any(ev(y, a.body) for y in m.successors(x))
        elif isinstance(a, BDia):
            val = any(ev(y, a.body) for y in m.predecessors(x))
        elif isinstance(a, Box):
            val = all(ev(z, a.body) for y in m.up(x) for z in m.successors(y))
        elif isinstance(a, BBox):
            val = all(ev(z, a.body) for y in m.up(x) for z in m.predecessors(y))
        else:
            raise TypeError(f"not a formula: {a!r}")
        self.memo[key] = val
        return val


def eval_formula(m: KripkeModel, w: World, a: Formula) -> bool:
    return Evaluator(m)(w, a)


def countermodel_violations(m: KripkeModel, bp: Blueprint, inp: SeqTree) -> list[str]:
    """Reasons the model fails to refute ``inp``; empty when it does."""
    problems = frame_violations(m, bp.tree.logic)
    if not bp.saturated:
        return problems + ["blueprint has no saturated node"]
    s0 = bp.first_saturated()
    g = bp.seqtree(s0)
    ev = Evaluator(m)
    for w in g.names:
        x = (w, s0)
        for a in g.antecedent(w):
            if not ev(x, a):
                problems.append(f"input formula {a} is false at {x}")
        for a in g.consequent(w):
            if ev(x, a):
                problems.append(f"output formula {a} is true at {x}")
    # the input embeds into S0 by identity on names
    for w in inp.names:
        x = (w, s0)
        if x not in ev._worlds:
            problems.append(f"input component {w} has no world")
            continue
        for a in inp.antecedent(w):
            if not ev(x, a):
                problems.append(f"input antecedent {a} is false at {x}")
        for a in inp.consequent(w):
            if ev(x, a):
                problems.append(f"input consequent {a} is true at {x}")
    for p, c, d in inp.edges():
        pair = ((p, s0), (c, s0)) if d is Direction.F else ((c, s0), (p, s0))
        if pair not in m.R:
            problems.append(f"input edge {p}->{c} is not realized by R")
    return problems


def verify_countermodel(m: KripkeModel, bp: Blueprint, inp: SeqTree) -> bool:
    return not countermodel_violations(m, bp, inp)


def truth_lemma_violations(m: KripkeModel, bp: Blueprint) -> list[str]:
    """Check inputs true and outputs false at every saturated node."""
    ev = Evaluator(m)
    problems = []
    for i in sorted(bp.saturated):
        g = bp.seqtree(i)
        for w in g.names:
            for a in g.antecedent(w):
                if not ev((w, i), a):
                    problems.append(f"{a} in the antecedent but false at {(w, i)}")
            for a in g.consequent(w):
                if ev((w, i), a):
                    problems.append(f"{a} in the consequent but true at {(w, i)}")
    return problems


def persistence_violations(m: KripkeModel, formulas: Iterable[Formula]) -> list[str]:
    ev = Evaluator(m)
    problems = []
    subs = set()
    for a in formulas:
        subs |= subformulas(a)
    for a in subs:
        for x, y in m.leq:
            if ev(x, a) and not ev(y, a):
                problems.append(f"{a} true at {x} but false at {y} >= {x}")
    return problems


# ---------------------------------------------------------- serialization


def _world_json(x: World) -> dict:
    if isinstance(x, tuple) and len(x) == 2:
        return {"name": x[0], "index": x[1]}
    return {"name": x, "index": None}


def _world_from_json(d: dict) -> World:
    return d["name"] if d["index"] is None else (d["name"], d["index"])


def model_to_dict(m: KripkeModel) -> dict:
    key = _world_sort_key
    return {
        "worlds": [_world_json(x) for x in sorted(m.worlds, key=key)],
        "leq": [[_world_json(x), _world_json(y)] for x, y in sorted(m.leq, key=lambda p: (key(p[0]), key(p[1])))],
        "R": [[_world_json(x), _world_json(y)] for x, y in sorted(m.R, key=lambda p: (key(p[0]), key(p[1])))],
        "valuation": [
            dict(_world_json(x), atoms=sorted(m.atoms_at(x)))
            for x in sorted(m.worlds, key=key)
        ],
        "logic": logic_name(m.logic),
    }


def _world_sort_key(x: World):
    if isinstance(x, tuple):
        return (x[1], x[0])
    return (x, 0)


def model_from_dict(data: dict) -> KripkeModel:
    worlds = [_world_from_json(d) for d in data["worlds"]]
    leq = frozenset((_world_from_json(a), _world_from_json(b)) for a, b in data["leq"])
    rel = frozenset((_world_from_json(a), _world_from_json(b)) for a, b in data["R"])
    val = {_world_from_json(d): frozenset(d["atoms"]) for d in data["valuation"]}
    return KripkeModel(worlds, leq, rel, val, parse_logic(data.get("logic", "")))


def model_to_json(m: KripkeModel, indent: int | None = 2) -> str:
    return json.dumps(model_to_dict(m), indent=indent)


def model_from_json(text: str) -> KripkeModel:
    return model_from_dict(json.loads(text))


def _world_id(x: World) -> str:
    return f"w{x[0]}_{x[1]}" if isinstance(x, tuple) else f"w{x}"


def _world_text(x: World) -> str:
    return f"({x[0]},{x[1]})" if isinstance(x, tuple) else str(x)


def model_to_dot(m: KripkeModel) -> str:
    """DOT drawing: solid R edges, dotted <= edges (reflexive and implied ones omitted)."""
    lines = ["digraph model {", "  node [shape=ellipse];"]
    key = _world_sort_key
    for x in sorted(m.worlds, key=key):
        atoms = ", ".join(sorted(m.atoms_at(x)))
        label = _world_text(x) + (f"\\n{atoms}" if atoms else "")
        lines.append(f'  {_world_id(x)} [label="{label}"];')
    for x, y in sorted(m.R, key=lambda p: (key(p[0]), key(p[1]))):
        lines.append(f"  {_world_id(x)} -> {_world_id(y)};")
    strict = {(x, y) for x, y in m.leq if x != y}
    for x, y in sorted(strict, key=lambda p: (key(p[0]), key(p[1]))):
        if any((x, z) in strict and (z, y) in strict for z in m.worlds if z not in (x, y)):
            continue
        lines.append(f"  {_world_id(x)} -> {_world_id(y)} [style=dotted];")
    lines.append("}")
    return "\n".join(lines)


def format_model(m: KripkeModel) -> str:
    key = _world_sort_key
    ws = sorted(m.worlds, key=key)
    lines = [f"worlds ({len(ws)}): " + " ".join(_world_text(x) for x in ws)]
    strict = sorted(((x, y) for x, y in m.leq if x != y), key=lambda p: (key(p[0]), key(p[1])))
    lines.append("<= (non-reflexive): " + (", ".join(f"{_world_text(x)}<={_world_text(y)}" for x, y in strict) or "none"))
    rel = sorted(m.R, key=lambda p: (key(p[0]), key(p[1])))
    lines.append("R: " + (", ".join(f"{_world_text(x)}R{_world_text(y)}" for x, y in rel) or "none"))
    val = [f"{_world_text(x)}: {', '.join(sorted(m.atoms_at(x)))}" for x in ws if m.atoms_at(x)]
    lines.append("V: " + ("; ".join(val) or "all atoms false"))
    return "\n".join(lines)
