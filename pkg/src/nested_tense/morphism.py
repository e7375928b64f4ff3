"""Weak and strong morphisms between seq-trees.

A weak morphism maps root to root and every edge onto an edge with the same
direction.  A strong morphism additionally preserves vertex labels.  Maps
need not be injective.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .sequent import SeqTree


class MorphismKind(Enum):
    WEAK = "weak"
    STRONG = "strong"
    NATURAL = "natural"


@dataclass(frozen=True)
class Morphism:
    source: SeqTree
    target: SeqTree
    mapping: Mapping[int, int]
    kind: MorphismKind

    def __call__(self, w: int) -> int:
        return self.mapping[w]


def morphism_violations(m: Morphism) -> list[str]:
    """Every clause of ``m.kind`` that fails, as human-readable messages."""
    src, tgt, f = m.source, m.target, m.mapping
    problems = []
    missing = [w for w in src.names if w not in f]
    if missing:
        return [f"map undefined on {missing}"]
    stray = [w for w in src.names if f[w] not in tgt]
    if stray:
        return [f"image of {stray} outside the target"]
    if f[src.root] != tgt.root:
        problems.append(f"root {src.root} maps to {f[src.root]}, not the target root {tgt.root}")
    for p, c, d in src.edges():
        fp, fc = f[p], f[c]
        if tgt.parent(fc) != fp:
            problems.append(f"edge {p}->{c} maps to {fp}->{fc}, which is not an edge")
        elif tgt.direction(fc) is not d:
            problems.append(f"edge {p}->{c} labelled {d.value} maps to an edge labelled {tgt.direction(fc).value}")
    if m.kind is MorphismKind.STRONG:
        for w in src.names:
            if src.label(w) != tgt.label(f[w]):
                problems.append(f"label of {w} differs from label of {f[w]}")
    if m.kind is MorphismKind.NATURAL:
        for w in src.names:
            if f[w] != w:
                problems.append(f"natural morphism moves {w} to {f[w]}")
    return problems


def verify_morphism(m: Morphism) -> bool:
    return not morphism_violations(m)


def _search(source: SeqTree, target: SeqTree, strong: bool) -> dict[int, int] | None:
    memo: dict[tuple[int, int], bool] = {}
    tkeys = target.subtree_keys
    ordered = {
        t: sorted(target.children(t), key=lambda c: (target.direction(c).value, tkeys[c], c))
        for t in target.names
    }

    def candidates(c: int, t: int) -> list[int]:
        """Children of ``t`` along the edge label of ``c``; a same-named one first."""
        d = source.direction(c)
        same = [c2 for c2 in ordered[t] if c2 == c and target.direction(c2) is d]
        return same + [c2 for c2 in ordered[t] if c2 != c and target.direction(c2) is d]

    def matchable(s: int, t: int) -> bool:
        key = (s, t)
        if key not in memo:
            ok = not strong or source.label(s) == target.label(t)
            if ok:
                ok = all(any(matchable(c, c2) for c2 in candidates(c, t)) for c in source.children(s))
            memo[key] = ok
        return memo[key]

    if not matchable(source.root, target.root):
        return None
    # children are independent, so the first matchable candidate always extends
    mapping = {source.root: target.root}
    stack = [source.root]
    while stack:
        s = stack.pop()
        t = mapping[s]
        for c in source.children(s):
            mapping[c] = next(c2 for c2 in candidates(c, t) if matchable(c, c2))
            stack.append(c)
    return mapping


def find_morphism(source: SeqTree, target: SeqTree, kind: MorphismKind) -> Morphism | None:
    if kind is MorphismKind.NATURAL:
        if all(w in target for w in source.names):
            m = Morphism(source, target, {w: w for w in source.names}, kind)
            if verify_morphism(m):
                return m
        return None
    mapping = _search(source, target, kind is MorphismKind.STRONG)
    return None if mapping is None else Morphism(source, target, mapping, kind)


def find_strong_morphism(source: SeqTree, target: SeqTree) -> Morphism | None:
    return find_morphism(source, target, MorphismKind.STRONG)


def find_weak_morphism(source: SeqTree, target: SeqTree) -> Morphism | None:
    return find_morphism(source, target, MorphismKind.WEAK)


def identity_morphism(t: SeqTree) -> Morphism:
    return Morphism(t, t, {w: w for w in t.names}, MorphismKind.STRONG)


class MorphismMismatch(ValueError):
    pass


def compose_morphisms(first: Morphism, second: Morphism) -> Morphism:
    """``second`` after ``first``."""
    if not first.target.same_as(second.source):
        raise MorphismMismatch("target of the first morphism is not the source of the second")
    mapping = {w: second.mapping[first.mapping[w]] for w in first.source.names}
    strong = first.kind is MorphismKind.STRONG and second.kind is MorphismKind.STRONG
    kind = MorphismKind.STRONG if strong else MorphismKind.WEAK
    return Morphism(first.source, second.target, mapping, kind)


def morphically_equivalent(a: SeqTree, b: SeqTree) -> bool:
    return find_strong_morphism(a, b) is not None and find_strong_morphism(b, a) is not None
