"""Proof search: saturation, stability, repeats and the computation tree.

``prove`` expands every node with the first applicable line of the search
procedure (initial, stable/repeat, then the invertible rules in a fixed
order, then the disjunctive branching rule ``db``).  Every premise of a
``db`` node is explored, so the resulting computation tree is complete and
its True/False labels are computed bottom-up once the tree is built.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .formula import (
    BBox,
    Bottom,
    Box,
    Direction,
    Formula,
    Imp,
    And,
    Or,
    box_direction,
    diamond_direction,
    formula_key,
)
from .morphism import Morphism, find_strong_morphism
from .sequent import (
    SeqTree,
    Sequent,
    c_closure,
    logic_name,
    parse_logic,
    render_seqtree,
    sequent_modal_depth,
    strip_consequents,
)

DEFAULT_BUDGET = 10**6

CONJUNCTIVE_RULES = (
    "orL", "orR", "andL", "andR", "impL",
    "diaL", "bdiaL", "diaR", "bdiaR", "boxL", "bboxL", "d",
)


class BudgetExceeded(RuntimeError):
    """The computation tree outgrew the node budget."""

    def __init__(self, budget: int):
        super().__init__(f"node budget of {budget} computation-tree nodes exceeded")
        self.budget = budget


def normalize_logic(logic: Iterable[str] | str) -> frozenset[str]:
    if isinstance(logic, str):
        return parse_logic(logic)
    letters = frozenset(logic)
    parse_logic("".join(sorted(letters)))
    return letters


# ------------------------------------------------------------ node tests


def initial_instance(g: SeqTree) -> tuple[str, int, Formula] | None:
    """``("botL", w, false)`` or ``("id", w, A)`` for the first initial instance."""
    for w in g.sorted_names:
        if Bottom() in g.antecedent(w):
            return ("botL", w, Bottom())
    for w in g.sorted_names:
        shared = g.antecedent(w) & g.consequent(w)
        if shared:
            return ("id", w, min(shared, key=formula_key))
    return None


def is_initial(g: SeqTree) -> bool:
    return initial_instance(g) is not None


def is_saturated(g: SeqTree, logic: Iterable[str], input_md: int) -> bool:
    """Check every saturation clause directly, at every vertex."""
    logic = frozenset(logic)
    closure = c_closure(g, logic)
    for w in g.names:
        ant, cons = g.antecedent(w), g.consequent(w)
        if ant & cons or Bottom() in ant:
            return False
        for a in ant:
            if isinstance(a, Or) and a.left not in ant and a.right not in ant:
                return False
            if isinstance(a, And) and not (a.left in ant and a.right in ant):
                return False
            if isinstance(a, Imp) and a.left not in cons and a.right not in ant:
                return False
            d = diamond_direction(a)
            if d is not None and not any(
                g.direction(u) is d and a.body in g.antecedent(u) for u in g.children(w)
            ):
                return False
            d = box_direction(a)
            if d is not None and any(a.body not in g.antecedent(u) for u in closure.targets(w, d)):
                return False
        for a in cons:
            if isinstance(a, Or) and not (a.left in cons and a.right in cons):
                return False
            if isinstance(a, And) and a.left not in cons and a.right not in cons:
                return False
            d = diamond_direction(a)
            if d is not None and any(a.body not in g.consequent(u) for u in closure.targets(w, d)):
                return False
        if "D" in logic and g.depth(w) <= input_md:
            if not any(g.direction(u) is Direction.F for u in g.children(w)):
                return False
    return True


def _has_branching_output(g: SeqTree) -> bool:
    return any(isinstance(a, (Imp, Box, BBox)) for w in g.names for a in g.consequent(w))


def is_stable(g: SeqTree, logic: Iterable[str], input_md: int) -> bool:
    return not _has_branching_output(g) and is_saturated(g, logic, input_md)


def is_repeat(
    g: SeqTree, branch_ancestors: Sequence[SeqTree]
) -> tuple[SeqTree, Morphism] | None:
    """The nearest ancestor receiving a strong morphism from ``g``."""
    hit = _find_companion(g, branch_ancestors)
    return None if hit is None else (branch_ancestors[hit[0]], hit[1])


def _find_companion(g: SeqTree, ancestors: Sequence[SeqTree]) -> tuple[int, Morphism] | None:
    labels = {g.label(w) for w in g.names}
    for pos, h in enumerate(ancestors):
        if h.label(h.root) != g.label(g.root):
            continue
        if not labels <= {h.label(w) for w in h.names}:
            continue
        m = find_strong_morphism(g, h)
        if m is not None:
            return pos, m
    return None


# ------------------------------------------------------------ rule lines


@dataclass(frozen=True)
class DbPremise:
    tree: SeqTree
    formula: Formula
    host: int


def _fresh_after(g: SeqTree) -> Callable[[], int]:
    counter = itertools.count(g.max_name + 1)
    return lambda: next(counter)


def _db_premises(g: SeqTree, fresh: Callable[[], int]) -> list[DbPremise]:
    stripped = strip_consequents(g)
    out = []
    for w in g.sorted_names:
        for a in sorted(g.consequent(w), key=formula_key):
            if isinstance(a, Imp):
                seq = stripped.label(w).add([a.left], [a.right])
                out.append(DbPremise(stripped.with_label(w, seq), a, w))
            elif isinstance(a, (Box, BBox)):
                d = box_direction(a)
                child = Sequent.of((), [a.body])
                out.append(DbPremise(stripped.add_child(w, d, child, fresh()), a, w))
    return out


def db_premises(
    g: SeqTree, logic: Iterable[str], input_md: int | None = None,
    fresh: Callable[[], int] | None = None,
) -> list[DbPremise]:
    """Premises of the disjunctive branching rule, in canonical order."""
    if input_md is None:
        input_md = sequent_modal_depth(g)
    if not is_saturated(g, logic, input_md):
        raise ValueError("db applies only to saturated sequents")
    if not _has_branching_output(g):
        raise ValueError("db does not apply to stable sequents")
    return _db_premises(g, fresh or _fresh_after(g))


@dataclass(frozen=True)
class Step:
    """One bottom-up rule application chosen by the search."""

    rule: str
    vertex: int
    formula: Formula | None
    target: int | None
    premises: tuple[SeqTree, ...]


def _pick(cands):
    return min(cands, key=lambda c: formula_key(c[0]), default=None)


def next_step(g: SeqTree, logic: frozenset[str], input_md: int,
              fresh: Callable[[], int]) -> Step | None:
    """The first applicable invertible rule, or None if ``g`` is saturated.

    Assumes ``g`` is not initial.
    """
    names = g.sorted_names

    for w in names:
        s = g.label(w)
        ant = s.antecedent
        c = _pick((a,) for a in ant if isinstance(a, Or) and a.left not in ant and a.right not in ant)
        if c:
            a = c[0]
            return Step("orL", w, a, None, (
                g.with_label(w, s.add([a.left])), g.with_label(w, s.add([a.right]))))
    for w in names:
        s = g.label(w)
        cons = s.consequent
        c = _pick((a,) for a in cons if isinstance(a, Or) and not (a.left in cons and a.right in cons))
        if c:
            a = c[0]
            return Step("orR", w, a, None, (g.with_label(w, s.add((), [a.left, a.right])),))
    for w in names:
        s = g.label(w)
        ant = s.antecedent
        c = _pick((a,) for a in ant if isinstance(a, And) and not (a.left in ant and a.right in ant))
        if c:
            a = c[0]
            return Step("andL", w, a, None, (g.with_label(w, s.add([a.left, a.right])),))
    for w in names:
        s = g.label(w)
        cons = s.consequent
        c = _pick((a,) for a in cons if isinstance(a, And) and a.left not in cons and a.right not in cons)
        if c:
            a = c[0]
            return Step("andR", w, a, None, (
                g.with_label(w, s.add((), [a.left])), g.with_label(w, s.add((), [a.right]))))
    for w in names:
        s = g.label(w)
        ant, cons = s.antecedent, s.consequent
        c = _pick((a,) for a in ant if isinstance(a, Imp) and a.left not in cons and a.right not in ant)
        if c:
            a = c[0]
            return Step("impL", w, a, None, (
                g.with_label(w, s.add((), [a.left])), g.with_label(w, s.add([a.right]))))
    for w in names:
        ant = g.antecedent(w)
        kids = g.children(w)

        def lacks_witness(a: Formula) -> bool:
            d = diamond_direction(a)
            return d is not None and not any(
                g.direction(u) is d and a.body in g.antecedent(u) for u in kids)

        c = _pick((a,) for a in ant if lacks_witness(a))
        if c:
            a = c[0]
            d = diamond_direction(a)
            name = fresh()
            tag = "diaL" if d is Direction.F else "bdiaL"
            return Step(tag, w, a, name, (g.add_child(w, d, Sequent.of([a.body]), name),))

    closure = None
    for w in names:
        cons = g.consequent(w)
        if not any(diamond_direction(a) is not None for a in cons):
            continue
        closure = closure or c_closure(g, logic)
        cands = []
        for a in cons:
            d = diamond_direction(a)
            if d is None:
                continue
            for u in closure.targets(w, d):
                if a.body not in g.consequent(u):
                    cands.append((a, u))
                    break
        c = _pick(cands)
        if c:
            a, u = c
            tag = "diaR" if diamond_direction(a) is Direction.F else "bdiaR"
            return Step(tag, w, a, u, (g.with_label(u, g.label(u).add((), [a.body])),))
    for w in names:
        ant = g.antecedent(w)
        if not any(box_direction(a) is not None for a in ant):
            continue
        closure = closure or c_closure(g, logic)
        cands = []
        for a in ant:
            d = box_direction(a)
            if d is None:
                continue
            for u in closure.targets(w, d):
                if a.body not in g.antecedent(u):
                    cands.append((a, u))
                    break
        c = _pick(cands)
        if c:
            a, u = c
            tag = "boxL" if box_direction(a) is Direction.F else "bboxL"
            return Step(tag, w, a, u, (g.with_label(u, g.label(u).add([a.body])),))
    if "D" in logic:
        for w in names:
            if g.depth(w) <= input_md and not any(
                    g.direction(u) is Direction.F for u in g.children(w)):
                name = fresh()
                return Step("d", w, None, name, (g.add_child(w, Direction.F, Sequent(), name),))
    return None


# ------------------------------------------------------- computation tree


@dataclass(slots=True)
class CTNode:
    """One node of the computation tree.

    ``rule`` is the tag of the rule applied bottom-up at this node; leaves
    carry ``status`` (``id``, ``botL``, ``stable`` or ``repeat``) instead.
    ``via`` records, for a premise of ``db``, the host vertex and the
    principal formula that produced it.
    """

    index: int
    tree: SeqTree
    parent: int | None
    depth: int
    children: list[int] = field(default_factory=list)
    rule: str | None = None
    status: str | None = None
    vertex: int | None = None
    formula: Formula | None = None
    target: int | None = None
    saturated: bool = False
    via: tuple[int, Formula] | None = None
    label: bool | None = None


@dataclass(frozen=True)
class RepeatRecord:
    repeat: int
    companion: int
    morphism: Morphism


@dataclass
class ComputationTree:
    input: SeqTree
    logic: frozenset[str]
    input_md: int
    nodes: list[CTNode]

    @property
    def root(self) -> CTNode:
        return self.nodes[0]

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, i: int) -> CTNode:
        return self.nodes[i]

    def edges(self) -> list[tuple[int, int, str]]:
        return [(n.index, c, n.rule) for n in self.nodes for c in n.children]

    def ancestors(self, i: int) -> list[int]:
        """Strict ancestors of node ``i``, nearest first."""
        out = []
        p = self.nodes[i].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def shape(self, i: int = 0) -> tuple:
        """Rule/status skeleton of the subtree at ``i``, for comparisons."""
        n = self.nodes[i]
        return (n.rule or n.status, n.label, tuple(self.shape(c) for c in n.children))


@dataclass
class Verdict:
    provable: bool
    tree: ComputationTree
    repeats: list[RepeatRecord]


def _line(i: int, tag: str, parent: int | None, g: SeqTree) -> str:
    return f"{i} {tag} {'-' if parent is None else parent} {render_seqtree(g)}"


class _Search:
    """Depth-first construction of (part of) a computation tree.

    ``outer`` lists saturated ancestors that live outside this search as
    ``(global index, tree)`` pairs, nearest first; worker processes use it
    to detect repeats whose companion lies above the subtree they explore.
    """

    def __init__(self, logic: frozenset[str], md: int, next_name: int, budget: int,
                 outer: Sequence[tuple[int, SeqTree]] = ()):
        self.logic = logic
        self.md = md
        self.next_name = next_name
        self.budget = budget
        self.outer = list(outer)
        self.nodes: list[CTNode] = []
        # (repeat, companion is local, companion index, morphism)
        self.repeats: list[tuple[int, bool, int, Morphism]] = []

    def fresh(self) -> int:
        name = self.next_name
        self.next_name += 1
        return name

    def run(self, root: SeqTree, via=None, trace=None, pool=None) -> None:
        nodes = self.nodes
        stack: list[tuple[SeqTree, int | None, tuple[int, Formula] | None]] = [(root, None, via)]
        while stack:
            g, parent, via = stack.pop()
            if len(nodes) >= self.budget:
                raise BudgetExceeded(self.budget)
            depth = 0 if parent is None else nodes[parent].depth + 1
            node = CTNode(len(nodes), g, parent, depth, via=via)
            nodes.append(node)
            if parent is not None:
                nodes[parent].children.append(node.index)
            premises: list = []

            init = initial_instance(g)
            if init is not None:
                node.status, node.vertex, node.formula = init
            else:
                step = next_step(g, self.logic, self.md, self.fresh)
                if step is not None:
                    node.rule, node.vertex, node.formula, node.target = (
                        step.rule, step.vertex, step.formula, step.target)
                    premises = [(p, None) for p in step.premises]
                else:
                    node.saturated = True
                    if not _has_branching_output(g):
                        node.status = "stable"
                    elif not self._check_repeat(node):
                        node.rule = "db"
                        premises = [(p.tree, (p.host, p.formula)) for p in _db_premises(g, self.fresh)]
            if trace is not None:
                trace(_line(node.index, node.rule or node.status, parent, g))
            g.drop_caches()
            if pool is not None and node.rule == "db" and len(premises) > 1:
                self._parallel(node, premises, trace, pool)
            else:
                stack.extend((p, node.index, v) for p, v in reversed(premises))

    def _check_repeat(self, node: CTNode) -> bool:
        local = [a for a in _ancestors(self.nodes, node.index) if self.nodes[a].saturated]
        cands = [(True, a, self.nodes[a].tree) for a in local]
        cands += [(False, gi, t) for gi, t in self.outer]
        hit = _find_companion(node.tree, [t for _, _, t in cands])
        if hit is None:
            return False
        node.status = "repeat"
        is_local, idx, _ = cands[hit[0]]
        self.repeats.append((node.index, is_local, idx, hit[1]))
        return True

    def _parallel(self, db: CTNode, premises, trace, pool) -> None:
        """Explore the premises of ``db`` in worker processes, then splice
        the results in exactly where sequential exploration puts them."""
        c0 = self.next_name
        outer = [(db.index, db.tree)]
        outer += [(a, self.nodes[a].tree) for a in _ancestors(self.nodes, db.index)
                  if self.nodes[a].saturated]
        remaining = self.budget - len(self.nodes)
        jobs = [(tree, via, self.logic, self.md, c0, remaining, outer) for tree, via in premises]
        for sub_nodes, sub_repeats, end_name in pool.map(_explore_premise, jobs):
            offset = self.next_name - c0
            base = len(self.nodes)
            if base + len(sub_nodes) > self.budget:
                raise BudgetExceeded(self.budget)
            shift = (lambda x: x + offset if x is not None and x >= c0 else x) if offset else None
            for n in sub_nodes:
                n.index += base
                n.parent = db.index if n.parent is None else n.parent + base
                n.children = [c + base for c in n.children]
                n.depth += db.depth + 1
                if shift is not None:
                    n.tree = _shift_tree(n.tree, shift)
                    n.vertex, n.target = shift(n.vertex), shift(n.target)
                    if n.via is not None:
                        n.via = (shift(n.via[0]), n.via[1])
                self.nodes.append(n)
            db.children.append(base)
            for r, is_local, c, m in sub_repeats:
                comp = c + base if is_local else c
                mapping = m.mapping if shift is None else {shift(k): shift(v) for k, v in m.mapping.items()}
                m = Morphism(self.nodes[r + base].tree, self.nodes[comp].tree, mapping, m.kind)
                self.repeats.append((r + base, True, comp, m))
            self.next_name += end_name - c0
            if trace is not None:
                for n in sub_nodes:
                    trace(_line(n.index, n.rule or n.status, n.parent, n.tree))


def _explore_premise(job):
    tree, via, logic, md, next_name, budget, outer = job
    search = _Search(logic, md, next_name, budget, outer)
    search.run(tree, via)
    return search.nodes, search.repeats, search.next_name


def _shift_tree(t: SeqTree, shift: Callable[[int], int]) -> SeqTree:
    labels = {shift(w): t.label(w) for w in t.names}
    parent = {shift(c): (shift(p), d) for p, c, d in t.edges()}
    children = {shift(w): [shift(c) for c in t.children(w)] for w in t.names}
    return SeqTree(shift(t.root), labels, parent, children)


def prove(
    inp: SeqTree,
    logic: Iterable[str] | str = (),
    budget: int = DEFAULT_BUDGET,
    trace: Callable[[str], None] | None = None,
    workers: int = 1,
) -> Verdict:
    """Build the full computation tree for ``inp`` and label it.

    With ``workers > 1`` the premises of db nodes met on the main process
    are explored in a process pool; the resulting tree is identical to the
    sequential one.
    """
    logic = normalize_logic(logic)
    md = sequent_modal_depth(inp)
    search = _Search(logic, md, inp.max_name + 1, budget)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            search.run(inp, trace=trace, pool=pool)
    else:
        search.run(inp, trace=trace)
    nodes = search.nodes

    for node in reversed(nodes):
        if node.status is not None:
            node.label = node.status in ("id", "botL")
        elif node.rule == "db":
            node.label = any(nodes[c].label for c in node.children)
        else:
            node.label = all(nodes[c].label for c in node.children)

    repeats = [RepeatRecord(r, c, m) for r, _, c, m in sorted(search.repeats, key=lambda x: x[0])]
    tree = ComputationTree(inp, logic, md, nodes)
    return Verdict(bool(nodes[0].label), tree, repeats)


def _ancestors(nodes: list[CTNode], i: int) -> list[int]:
    out = []
    p = nodes[i].parent
    while p is not None:
        out.append(p)
        p = nodes[p].parent
    return out


def describe(verdict: Verdict) -> str:
    name = "IK_t" + logic_name(verdict.tree.logic)
    status = "provable" if verdict.provable else "not provable"
    return f"{render_seqtree(verdict.tree.input)} is {status} in {name}"
