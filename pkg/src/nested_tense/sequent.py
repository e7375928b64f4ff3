"""Nested sequents as named, edge-labelled trees of Gentzen sequents.

A nested sequent ``p |- q, (f)[r |- s]`` is stored as a ``SeqTree`` whose
vertices are integer names.  Trees are immutable; every structural operation
returns a new tree.  Equality ignores names and sibling order, so two trees
are equal when they are isomorphic as labelled trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .formula import (
    Direction,
    Formula,
    ParseError,
    TokenStream,
    formula_key,
    modal_depth,
    render,
)

LOGIC_LETTERS = "TBD"


class UnknownNameError(KeyError):
    """A vertex name that does not occur in the tree."""


def parse_logic(letters: str) -> frozenset[str]:
    """Parse a logic specification such as ``"TB"`` into a set of letters."""
    seen: set[str] = set()
    for ch in letters.upper():
        if ch not in LOGIC_LETTERS:
            raise ValueError(f"unknown logic letter {ch!r}; expected a subset of {LOGIC_LETTERS}")
        if ch in seen:
            raise ValueError(f"duplicate logic letter {ch!r}")
        seen.add(ch)
    return frozenset(seen)


def logic_name(logic: Iterable[str]) -> str:
    letters = set(logic)
    return "".join(ch for ch in LOGIC_LETTERS if ch in letters)


def sort_formulas(formulas: Iterable[Formula]) -> list[Formula]:
    return sorted(formulas, key=formula_key)


@dataclass(frozen=True)
class Sequent:
    """A Gentzen sequent ``antecedent |- consequent`` over formula sets."""

    antecedent: frozenset = field(default_factory=frozenset)
    consequent: frozenset = field(default_factory=frozenset)

    @staticmethod
    def of(antecedent: Iterable[Formula] = (), consequent: Iterable[Formula] = ()) -> Sequent:
        return Sequent(frozenset(antecedent), frozenset(consequent))

    def add(self, antecedent: Iterable[Formula] = (), consequent: Iterable[Formula] = ()) -> Sequent:
        return Sequent(self.antecedent.union(antecedent), self.consequent.union(consequent))

    def union(self, other: Sequent) -> Sequent:
        return Sequent(self.antecedent | other.antecedent, self.consequent | other.consequent)

    def without_consequent(self) -> Sequent:
        return Sequent(self.antecedent, frozenset())

    @cached_property
    def key(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return (
            tuple(render(a) for a in sort_formulas(self.antecedent)),
            tuple(render(a) for a in sort_formulas(self.consequent)),
        )

    def __str__(self) -> str:
        return _render_parts(self, [], None)


def _render_parts(seq: Sequent, nestings: list[str], name: int | None) -> str:
    left = ", ".join(render(a) for a in sort_formulas(seq.antecedent))
    right = ", ".join([render(a) for a in sort_formulas(seq.consequent)] + nestings)
    text = f"{left} |-" if left else "|-"
    if right:
        text += " " + right
    if name is not None:
        text = f"@{name} {text}"
    return text


class SeqTree:
    """Immutable rooted tree of sequents with direction-labelled edges."""

    def __init__(
        self,
        root: int,
        labels: Mapping[int, Sequent],
        parent: Mapping[int, tuple[int, Direction]],
        children: Mapping[int, Sequence[int]],
    ):
        self._root = root
        self._labels = dict(labels)
        self._parent = dict(parent)
        self._children = {w: tuple(children.get(w, ())) for w in self._labels}

    def _relabelled(self, labels: dict[int, Sequent]) -> SeqTree:
        """Same shape, new labels; the immutable structure maps are shared."""
        t = object.__new__(SeqTree)
        t._root, t._labels, t._parent, t._children = self._root, labels, self._parent, self._children
        if "sorted_names" in self.__dict__:
            t.__dict__["sorted_names"] = self.sorted_names
        return t

    def drop_caches(self) -> None:
        """Forget memoized traversal data; it is recomputed on demand."""
        for key in ("names", "_depths", "_closure_cache"):
            self.__dict__.pop(key, None)

    @staticmethod
    def leaf(seq: Sequent = Sequent(), name: int = 0) -> SeqTree:
        return SeqTree(name, {name: seq}, {}, {})

    @staticmethod
    def of_formula(a: Formula, name: int = 0) -> SeqTree:
        """The nested sequent ``|- a``."""
        return SeqTree.leaf(Sequent.of((), [a]), name)

    def validate(self) -> None:
        """Raise ValueError unless the maps describe a well-formed tree."""
        if self._root not in self._labels or self._root in self._parent:
            raise ValueError("bad root")
        seen = set()
        stack = [self._root]
        while stack:
            w = stack.pop()
            if w in seen:
                raise ValueError(f"vertex {w} reached twice")
            seen.add(w)
            for c in self._children[w]:
                if self._parent.get(c, (None,))[0] != w:
                    raise ValueError(f"parent map disagrees at {c}")
                stack.append(c)
        if seen != set(self._labels):
            raise ValueError("unreachable vertices")

    # -- accessors

    @property
    def root(self) -> int:
        return self._root

    @cached_property
    def names(self) -> tuple[int, ...]:
        """Vertex names in pre-order (children in stored order)."""
        out = []
        stack = [self._root]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(reversed(self._children[w]))
        return tuple(out)

    @cached_property
    def sorted_names(self) -> tuple[int, ...]:
        return tuple(sorted(self._labels))

    @property
    def max_name(self) -> int:
        return self.sorted_names[-1]

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, w: object) -> bool:
        return w in self._labels

    def _need(self, w: int) -> None:
        if w not in self._labels:
            raise UnknownNameError(w)

    def label(self, w: int) -> Sequent:
        self._need(w)
        return self._labels[w]

    def antecedent(self, w: int) -> frozenset:
        return self.label(w).antecedent

    def consequent(self, w: int) -> frozenset:
        return self.label(w).consequent

    def children(self, w: int) -> tuple[int, ...]:
        self._need(w)
        return self._children[w]

    def parent(self, w: int) -> int | None:
        self._need(w)
        entry = self._parent.get(w)
        return None if entry is None else entry[0]

    def direction(self, child: int) -> Direction:
        """Label of the edge entering ``child``."""
        self._need(child)
        if child not in self._parent:
            raise ValueError("the root has no incoming edge")
        return self._parent[child][1]

    def edges(self) -> list[tuple[int, int, Direction]]:
        return [(self._parent[c][0], c, self._parent[c][1]) for c in self.names if c in self._parent]

    def depth(self, w: int) -> int:
        self._need(w)
        return self._depths[w]

    @cached_property
    def _depths(self) -> dict[int, int]:
        depths = {self._root: 0}
        for w in self.names:
            for c in self._children[w]:
                depths[c] = depths[w] + 1
        return depths

    def subtree_names(self, w: int) -> list[int]:
        self._need(w)
        out = []
        stack = [w]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self._children[v]))
        return out

    def formulas(self) -> Iterator[Formula]:
        for seq in self._labels.values():
            yield from seq.antecedent
            yield from seq.consequent

    # -- construction of new trees

    def with_label(self, w: int, seq: Sequent) -> SeqTree:
        self._need(w)
        labels = dict(self._labels)
        labels[w] = seq
        return self._relabelled(labels)

    def with_labels(self, updates: Mapping[int, Sequent]) -> SeqTree:
        labels = dict(self._labels)
        for w, seq in updates.items():
            self._need(w)
            labels[w] = seq
        return self._relabelled(labels)

    def add_child(self, w: int, d: Direction, seq: Sequent, name: int) -> SeqTree:
        """Attach a fresh leaf ``name`` below ``w`` along ``d``."""
        self._need(w)
        if name in self._labels:
            raise ValueError(f"name {name} is not fresh")
        labels = dict(self._labels)
        labels[name] = seq
        parent = dict(self._parent)
        parent[name] = (w, d)
        children = dict(self._children)
        children[w] = children[w] + (name,)
        return SeqTree(self._root, labels, parent, children)

    # -- identity

    @cached_property
    def subtree_keys(self) -> dict[int, tuple]:
        """Name-free canonical form of the subtree at each vertex."""
        keys: dict[int, tuple] = {}
        for w in reversed(self.names):
            kids = sorted((self._parent[c][1].value, keys[c]) for c in self._children[w])
            keys[w] = (self._labels[w].key, tuple(kids))
        return keys

    @cached_property
    def canonical_key(self) -> tuple:
        return self.subtree_keys[self._root]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SeqTree):
            return NotImplemented
        return self is other or self.canonical_key == other.canonical_key

    def __hash__(self) -> int:
        return hash(self.canonical_key)

    def same_as(self, other: SeqTree) -> bool:
        """Equality including vertex names."""
        return (
            self._root == other._root
            and self._labels == other._labels
            and self._parent == other._parent
        )

    def __str__(self) -> str:
        return render_seqtree(self)

    def __repr__(self) -> str:
        return f"SeqTree({render_seqtree(self, names=True)!r})"


# ---------------------------------------------------------------- metrics


def depth_of(t: SeqTree, w: int) -> int:
    return t.depth(w)


def sequent_modal_depth(t: SeqTree) -> int:
    best = 0
    for w in t.names:
        seq = t.label(w)
        md = max((modal_depth(a) for a in seq.antecedent | seq.consequent), default=0)
        best = max(best, md + t.depth(w))
    return best


def project(t: SeqTree, w: int, side: str) -> frozenset:
    """Input (``"antecedent"``) or output (``"consequent"``) formulas at ``w``."""
    if side == "antecedent":
        return t.antecedent(w)
    if side == "consequent":
        return t.consequent(w)
    raise ValueError(f"unknown side {side!r}")


# ------------------------------------------------------- structural operators


def _default_supply(g: SeqTree) -> Callable[[], int]:
    counter = iter(range(g.max_name + 1, 1 << 62))
    return lambda: next(counter)


def plug_at(
    g: SeqTree, w: int, k: SeqTree, fresh: Callable[[], int] | None = None
) -> SeqTree:
    """Compose the subtree of ``g`` at ``w`` with ``k``.

    The root label of ``k`` is merged into ``w`` and the nestings of ``k`` are
    appended below ``w`` under fresh names drawn from ``fresh``.
    """
    if w not in g:
        raise UnknownNameError(w)
    if fresh is None:
        fresh = _default_supply(g)
    labels = dict(g._labels)
    parent = dict(g._parent)
    children = dict(g._children)
    labels[w] = labels[w].union(k.label(k.root))
    stack = [(w, c) for c in reversed(k.children(k.root))]
    while stack:
        host, c = stack.pop()
        name = fresh()
        if name in labels:
            raise ValueError(f"name {name} is not fresh")
        labels[name] = k.label(c)
        parent[name] = (host, k.direction(c))
        children[host] = children[host] + (name,)
        children[name] = ()
        stack.extend((name, cc) for cc in reversed(k.children(c)))
    return SeqTree(g.root, labels, parent, children)


def compose(g: SeqTree, k: SeqTree, fresh: Callable[[], int] | None = None) -> SeqTree:
    return plug_at(g, g.root, k, fresh)


def strip_consequents(g: SeqTree) -> SeqTree:
    labels = {w: seq.without_consequent() for w, seq in g._labels.items()}
    return SeqTree(g.root, labels, g._parent, g._children)


# ----------------------------------------------------------------- closure


@dataclass(frozen=True)
class ClosureRelation:
    """The propagation graph of a seq-tree under a logic C."""

    pairs: frozenset

    @cached_property
    def _index(self) -> dict[tuple[int, Direction], tuple[int, ...]]:
        index: dict[tuple[int, Direction], list[int]] = {}
        for w, u, d in self.pairs:
            index.setdefault((w, d), []).append(u)
        return {key: tuple(sorted(v)) for key, v in index.items()}

    def targets(self, w: int, d: Direction) -> tuple[int, ...]:
        """All ``u`` with ``w ->> u`` along ``d``, in name order."""
        return self._index.get((w, d), ())

    def __contains__(self, triple: object) -> bool:
        return triple in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def c_closure(t: SeqTree, logic: Iterable[str]) -> ClosureRelation:
    logic = frozenset(logic)
    cache = t.__dict__.setdefault("_closure_cache", {})
    if logic in cache:
        return cache[logic]
    pairs = set()
    for p, c, d in t.edges():
        pairs.add((p, c, d))
        pairs.add((c, p, d.converse))
        if "B" in logic:
            pairs.add((p, c, d.converse))
            pairs.add((c, p, d))
    if "T" in logic:
        for w in t.names:
            pairs.add((w, w, Direction.F))
            pairs.add((w, w, Direction.B))
    rel = ClosureRelation(frozenset(pairs))
    cache[logic] = rel
    return rel


def propagates(t: SeqTree, logic: Iterable[str], w: int, d: Direction, u: int) -> bool:
    if w not in t:
        raise UnknownNameError(w)
    if u not in t:
        raise UnknownNameError(u)
    return (w, u, d) in c_closure(t, logic)


# ----------------------------------------------------------- text notation


def render_seqtree(t: SeqTree, names: bool = False) -> str:
    """Render as ``G |- D, (f)[...], (b)[...]``; ``names`` adds ``@n`` tags."""

    def go(w: int) -> str:
        nest = [f"({t.direction(c).value})[{go(c)}]" for c in t.children(w)]
        return _render_parts(t.label(w), nest, w if names else None)

    return go(t.root)


def parse_seqtree(text: str) -> SeqTree:
    """Parse the textual notation produced by ``render_seqtree``.

    Vertices without an ``@n`` tag get names after the largest tagged one,
    in pre-order.
    """
    ts = TokenStream(text)
    pending: list[tuple[int | None, Sequent, list]] = []

    def nesting_ahead() -> bool:
        return (
            ts.peek() == "("
            and ts.peek(1) in ("f", "b")
            and ts.peek(2) == ")"
            and ts.peek(3) == "["
        )

    def component() -> int:
        name = None
        tok = ts.peek()
        if tok is not None and tok.startswith("@"):
            name = int(tok[1:])
            ts.next()
        ant: list[Formula] = []
        if ts.peek() != "|-":
            ant.append(ts.formula())
            while ts.peek() == ",":
                ts.next()
                ant.append(ts.formula())
        ts.expect("|-")
        cons: list[Formula] = []
        kids: list[tuple[Direction, int]] = []
        index = len(pending)
        pending.append((name, Sequent(), kids))

        def item() -> None:
            if nesting_ahead():
                ts.next()
                d = Direction(ts.next())
                ts.next()
                ts.next()
                kids.append((d, component()))
                ts.expect("]")
            else:
                cons.append(ts.formula())

        if ts.peek() not in (None, "]"):
            item()
            while ts.peek() == ",":
                ts.next()
                item()
        pending[index] = (name, Sequent.of(ant, cons), kids)
        return index

    component()
    if not ts.at_end():
        raise ParseError(f"unexpected token {ts.peek()!r}", ts.pos)

    tagged = [n for n, _, _ in pending if n is not None]
    if len(set(tagged)) != len(tagged):
        raise ParseError("duplicate vertex name", 0)
    nxt = max(tagged, default=-1) + 1
    names = []
    for n, _, _ in pending:
        if n is None:
            n, nxt = nxt, nxt + 1
        names.append(n)
    labels, parent, children = {}, {}, {}
    for i, (_, seq, kids) in enumerate(pending):
        labels[names[i]] = seq
        children[names[i]] = [names[j] for _, j in kids]
        for d, j in kids:
            parent[names[j]] = (names[i], d)
    return SeqTree(names[0], labels, parent, children)


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def seqtree_to_dot(t: SeqTree, graph_name: str = "seqtree") -> str:
    lines = [f"digraph {graph_name} {{", "  node [shape=box];"]
    for w in t.names:
        lines.append(f'  v{w} [label="{w}: {_dot_escape(str(t.label(w)))}"];')
    for p, c, d in t.edges():
        lines.append(f'  v{p} -> v{c} [label="{d.value}"];')
    lines.append("}")
    return "\n".join(lines)
