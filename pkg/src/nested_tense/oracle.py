"""Brute-force search for small counter-models.

Enumerates every preorder, every modal relation satisfying (F1), (F2) and
the conditions of C, and every monotone valuation, on 1..bound worlds.
Formulas are evaluated for whole batches of relations and valuations at
once with boolean matrix products, which is what keeps bound 3 cheap
without any symmetry reduction.

Canonical order: world count, then the preorder and the modal relation as
bitmasks (bit ``i*n+j`` encodes the pair ``(i, j)``), then the valuation as
a tuple of per-atom world bitmasks (atoms sorted by name), then the world.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from .countermodel import KripkeModel
from .formula import (
    And,
    Atom,
    BBox,
    BDia,
    Bottom,
    Box,
    Dia,
    Formula,
    Imp,
    Or,
    atoms,
)

MAX_BOUND = 4
MAX_ATOMS = 3
_CHUNK = 1 << 21


class BoundExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Invalid:
    model: KripkeModel
    world: int


@dataclass(frozen=True)
class NoCounterModelUpTo:
    bound: int


@dataclass
class BoundedSearchResult:
    outcome: Union[Invalid, NoCounterModelUpTo]
    stats: dict = field(default_factory=dict)

    @property
    def is_invalid(self) -> bool:
        return isinstance(self.outcome, Invalid)


def _all_relations(n: int) -> np.ndarray:
    """Every relation on n points as an (2**(n*n), n, n) array, mask order."""
    masks = np.arange(1 << (n * n), dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n * n)) & 1
    return bits.reshape(-1, n, n).astype(bool)


def _bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Boolean matrix product, batched over leading axes."""
    return np.matmul(a.astype(np.float32), b.astype(np.float32)) > 0.5


@lru_cache(maxsize=None)
def preorders(n: int) -> tuple[np.ndarray, int]:
    """All preorders on n points in mask order, plus the candidate count."""
    rels = _all_relations(n)
    refl = rels[:, np.arange(n), np.arange(n)].all(axis=1)
    trans = ~(_bmm(rels, rels) & ~rels).any(axis=(1, 2))
    return rels[refl & trans], len(rels)


@lru_cache(maxsize=None)
def frames(n: int, logic: frozenset[str]) -> tuple[list[tuple[np.ndarray, np.ndarray]], dict]:
    """(leq, stack of admissible R) per preorder, with candidate counts."""
    rels = _all_relations(n)
    leqs, leq_candidates = preorders(n)
    out = []
    r_candidates = 0
    for leq in leqs:
        r_candidates += len(rels)
        lt = leq.T
        f1 = ~(_bmm(lt, rels) & ~_bmm(rels, lt)).any(axis=(1, 2))
        f2 = ~(_bmm(rels, leq) & ~_bmm(leq, rels)).any(axis=(1, 2))
        ok = f1 & f2
        if "T" in logic:
            ok &= rels[:, np.arange(n), np.arange(n)].all(axis=1)
        if "B" in logic:
            ok &= (rels == rels.transpose(0, 2, 1)).all(axis=(1, 2))
        if "D" in logic:
            ok &= rels.any(axis=2).all(axis=1)
        out.append((leq, rels[ok]))
    stats = {
        "leq_candidates": leq_candidates,
        "preorders": len(leqs),
        "R_candidates": r_candidates,
        "frames": sum(len(r) for _, r in out),
    }
    return out, stats


def _upsets(leq: np.ndarray) -> np.ndarray:
    """Upward-closed subsets as (count, n) bool rows, mask order."""
    n = leq.shape[0]
    subsets = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)
    # x in S and x <= y imply y in S
    leak = (subsets[:, :, None] & leq[None, :, :] & ~subsets[:, None, :]).any(axis=(1, 2))
    return subsets[~leak]


def _evaluate(a: Formula, leq: np.ndarray, rels: np.ndarray, vals: np.ndarray,
              index: dict[str, int], cache: dict) -> np.ndarray:
    """Truth table of ``a`` with shape (len(rels), len(vals), n)."""
    if a in cache:
        return cache[a]
    m, nv, n = len(rels), len(vals), leq.shape[0]
    if isinstance(a, Atom):
        res = np.broadcast_to(vals[None, :, index[a.name], :], (m, nv, n))
    elif isinstance(a, Bottom):
        res = np.zeros((m, nv, n), dtype=bool)
    else:
        sub = lambda b: _evaluate(b, leq, rels, vals, index, cache)  # noqa: E731
        if isinstance(a, And):
            res = sub(a.left) & sub(a.right)
        elif isinstance(a, Or):
            res = sub(a.left) | sub(a.right)
        elif isinstance(a, Imp):
            bad = sub(a.left) & ~sub(a.right)
            res = ~_bmm(bad, leq.T)
        elif isinstance(a, Dia):
            res = _bmm(sub(a.body), rels.transpose(0, 2, 1))
        elif isinstance(a, BDia):
            res = _bmm(sub(a.body), rels)
        elif isinstance(a, Box):
            reach = _bmm(leq, rels)
            res = ~_bmm(~sub(a.body), reach.transpose(0, 2, 1))
        elif isinstance(a, BBox):
            reach = _bmm(leq, rels.transpose(0, 2, 1))
            res = ~_bmm(~sub(a.body), reach.transpose(0, 2, 1))
        else:
            raise TypeError(f"not a formula: {a!r}")
    cache[a] = res
    return res


def _model(leq: np.ndarray, rel: np.ndarray, val: np.ndarray, names: list[str],
           logic: frozenset[str]) -> KripkeModel:
    n = leq.shape[0]
    worlds = list(range(n))
    pairs = lambda mat: frozenset(  # noqa: E731
        (i, j) for i in range(n) for j in range(n) if mat[i, j])
    valuation = {x: frozenset(p for k, p in enumerate(names) if val[k, x]) for x in worlds}
    return KripkeModel(worlds, pairs(leq), pairs(rel), valuation, logic)


def candidate_count(bound: int, num_atoms: int) -> int:
    """Closed-form number of (<=, R, V) triples examined without an early hit.

    Preorders are counted by the known sequence 1, 4, 29, 355; every modal
    relation and every valuation is a candidate for each of them.
    """
    known = {1: 1, 2: 4, 3: 29, 4: 355}
    return sum(known[n] * 2 ** (n * n) * 2 ** (n * num_atoms) for n in range(1, bound + 1))


def brute_force_validity(a: Formula, logic: Iterable[str] = (), world_bound: int = 3) -> BoundedSearchResult:
    """First counter-model of ``a`` in canonical order, if any up to the bound."""
    logic = frozenset(logic)
    names = sorted(atoms(a))
    if world_bound > MAX_BOUND or world_bound < 1:
        raise BoundExceeded(f"world bound must be between 1 and {MAX_BOUND}")
    if len(names) > MAX_ATOMS:
        raise BoundExceeded(f"at most {MAX_ATOMS} atoms are supported, found {len(names)}")
    index = {p: k for k, p in enumerate(names)}
    k = len(names)
    stats = {"triples": 0, "valuation_candidates": 0}
    for n in range(1, world_bound + 1):
        groups, fstats = frames(n, logic)
        for key, value in fstats.items():
            stats[key] = stats.get(key, 0) + value
        for leq, rels in groups:
            ups = _upsets(leq)
            stats["valuation_candidates"] += (1 << n) ** k
            stats["triples"] += (1 << (n * n)) * (1 << (n * k))
            combos = list(itertools.product(range(len(ups)), repeat=k))
            vals = np.array([[ups[c] for c in combo] for combo in combos], dtype=bool)
            vals = vals.reshape(len(combos), k, n)
            if len(rels) == 0:
                continue
            step = max(1, _CHUNK // max(1, len(vals) * n))
            for start in range(0, len(rels), step):
                chunk = rels[start:start + step]
                truth = _evaluate(a, leq, chunk, vals, index, {})
                false = ~truth
                if false.any():
                    flat = int(np.argmax(false.reshape(-1)))
                    ri, vi, wi = np.unravel_index(flat, false.shape)
                    model = _model(leq, chunk[ri], vals[vi], names, logic)
                    return BoundedSearchResult(Invalid(model, int(wi)), stats)
    return BoundedSearchResult(NoCounterModelUpTo(world_bound), stats)
