"""Reduction trees: shapes, combine schedules, and binary-tree node arithmetic.

A tree over P leaves prescribes the order in which intermediate triangular
factors are combined.  The flat tree is a chain rooted at leaf 0; the
binary tree pairs neighbours level by level; arbitrary trees are given as
explicit per-level groupings (q-ary trees are built this way).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

FLAT = "flat"
BINARY = "binary"
LEVELS = "levels"

REDUCE = "reduce"
ALL_REDUCE = "all-reduce"


class TreeError(ValueError):
    pass


def level(i: int, k: int) -> int:
    """Index of the tree node at level k whose processor set contains i."""
    if i < 0 or k < 0:
        raise TreeError("indices must be nonnegative")
    return i >> k


def first_proc(i: int, k: int) -> int:
    """Lowest processor index attached to the node at level k containing i."""
    return level(i, k) << k


def target_first_proc(i: int, k: int) -> int:
    """Partner that first_proc(i, k) exchanges with at level k (k >= 1)."""
    if k < 1:
        raise TreeError("target_first_proc needs k >= 1")
    return first_proc(i, k) + (1 << (k - 1))


@dataclass(frozen=True)
class CombineEvent:
    level: int
    participants: tuple
    receiver: int


def _binary_levels(P: int) -> list:
    levels = []
    k = 1
    while (1 << (k - 1)) < P:
        groups = []
        step = 1 << k
        half = 1 << (k - 1)
        for first in range(0, P, step):
            target = first + half
            if target < P:
                groups.append((first, target))
        if groups:
            levels.append(groups)
        k += 1
    return levels


def _flat_levels(P: int) -> list:
    return [[(0, k)] for k in range(1, P)]


def build_qary_levels(P: int, q: int) -> list:
    """Per-level groupings for a q-ary tree over P leaves."""
    if q < 2:
        raise TreeError("q must be >= 2")
    survivors = list(range(P))
    levels = []
    while len(survivors) > 1:
        groups = [tuple(survivors[i:i + q]) for i in range(0, len(survivors), q)]
        levels.append([g for g in groups if len(g) >= 2])
        survivors = [g[0] for g in groups]
    return levels


@dataclass(frozen=True)
class ReductionTree:
    """Shape plus combine mode; ``levels`` holds explicit groups per level."""

    P: int
    shape: str = BINARY
    mode: str = REDUCE
    levels: tuple = field(default=())

    def __post_init__(self):
        if self.P < 1:
            raise TreeError("P must be >= 1")
        if self.mode not in (REDUCE, ALL_REDUCE):
            raise TreeError(f"unknown mode {self.mode!r}")
        if self.shape == BINARY:
            lv = _binary_levels(self.P)
        elif self.shape == FLAT:
            lv = _flat_levels(self.P)
        elif self.shape == LEVELS:
            lv = [list(map(tuple, groups)) for groups in self.levels]
            self._validate_levels(lv)
        else:
            raise TreeError(f"unknown tree shape {self.shape!r}")
        object.__setattr__(self, "levels", tuple(tuple(g) for g in lv))

    def _validate_levels(self, lv) -> None:
        alive = set(range(self.P))
        for depth, groups in enumerate(lv):
            seen = set()
            for g in groups:
                if len(g) < 2:
                    raise TreeError(f"group {g} at level {depth + 1} has fewer than 2 members")
                for p in g:
                    if p not in alive:
                        raise TreeError(f"processor {p} not alive at level {depth + 1}")
                    if p in seen:
                        raise TreeError(f"processor {p} appears twice at level {depth + 1}")
                    seen.add(p)
                if min(g) != g[0]:
                    raise TreeError("group receiver must be the lowest index, listed first")
            for g in groups:
                for p in g[1:]:
                    alive.discard(p)
        if len(alive) != 1:
            raise TreeError(f"tree does not reduce to a single root: {sorted(alive)}")

    @property
    def root(self) -> int:
        alive = set(range(self.P))
        for groups in self.levels:
            for g in groups:
                for p in g[1:]:
                    alive.discard(p)
        (r,) = alive
        return r

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def schedule(self) -> list:
        """Deterministic list of combine events, level by level."""
        events = []
        for depth, groups in enumerate(self.levels):
            for g in sorted(groups):
                events.append(CombineEvent(depth + 1, tuple(g), min(g)))
        return events

    def critical_path_stats(self) -> dict:
        """Stage count and per-processor critical-path message count."""
        root = self.root
        msgs = 0
        for groups in self.levels:
            for g in groups:
                if root in g:
                    msgs += len(g) - 1
        return {"stages": self.n_levels, "messages_per_proc": msgs}


def parse_tree(spec: str, mode: str = REDUCE) -> ReductionTree:
    """Parse "binary:16", "flat:8" or "levels:[[0,1],[2,3]];[[0,2]]"."""
    spec = spec.strip()
    if ":" not in spec:
        raise TreeError(f"malformed tree spec {spec!r}")
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind in (BINARY, FLAT):
        try:
            P = int(rest)
        except ValueError:
            raise TreeError(f"bad leaf count in {spec!r}") from None
        return ReductionTree(P=P, shape=kind, mode=mode)
    if kind == LEVELS:
        import ast

        try:
            levels = [ast.literal_eval(part) for part in rest.split(";") if part.strip()]
        except (SyntaxError, ValueError):
            raise TreeError(f"bad level list in {spec!r}") from None
        P = 1 + max(max(max(g) for g in lvl) for lvl in levels)
        return ReductionTree(P=P, shape=LEVELS, mode=mode,
                             levels=tuple(tuple(map(tuple, lvl)) for lvl in levels))
    raise TreeError(f"unknown tree shape {kind!r}")


def qary_tree(P: int, q: int, mode: str = REDUCE) -> ReductionTree:
    return ReductionTree(P=P, shape=LEVELS, mode=mode,
                         levels=tuple(tuple(g) for g in build_qary_levels(P, q)))


def ceil_log2(P: int) -> int:
    return 0 if P <= 1 else math.ceil(math.log2(P))
