"""Embedded-subtree matching of mined patterns against query subtrees.

pattern_matches streams the subtree encoding once per search branch while
walking the pattern alongside it: matched pattern nodes keep their subtree
depth on a stack, an UP that closes the deepest matched node must coincide
with an UP in the pattern or the branch restarts, and every taken match
records a skip-alternative so the search can backtrack. Alternatives are
deduplicated and screened for suffix feasibility before being explored, so
a call never revisits an identical (position, pattern index, depth stack)
state.
"""
from __future__ import annotations

from bisect import bisect_left
from typing import Sequence

from .encoding import UP, items_of, labels_of


class PreparedSubtree:
    """Per-query index reused across many pattern_matches calls."""

    __slots__ = ("items", "labels", "mask", "label_positions")

    def __init__(self, items: Sequence):
        self.items = items_of(items)
        self.labels = frozenset(i for i in self.items if i != UP)
        positions: dict = {}
        for pos, item in enumerate(self.items):
            if item != UP:
                positions.setdefault(item, []).append(pos)
        self.label_positions = positions
        self.mask = _mask_of(self.labels)


class PreparedPattern:
    """Pattern with precomputed label data and lazily built suffix counts."""

    __slots__ = ("items", "size", "labels", "mask", "_suffix_counts")

    def __init__(self, items: Sequence):
        self.items = items_of(items)
        self.size = sum(1 for i in self.items if i != UP)
        self.labels = frozenset(i for i in self.items if i != UP)
        self.mask = _mask_of(self.labels)
        self._suffix_counts: list[dict] | None = None

    @property
    def suffix_counts(self) -> list[dict]:
        """suffix_counts[p] = label -> occurrences in items[p:]."""
        if self._suffix_counts is None:
            counts: list[dict] = [dict() for _ in range(len(self.items) + 1)]
            for p in range(len(self.items) - 1, -1, -1):
                nxt = dict(counts[p + 1])
                item = self.items[p]
                if item != UP:
                    nxt[item] = nxt.get(item, 0) + 1
                counts[p] = nxt
            self._suffix_counts = counts
        return self._suffix_counts


def _mask_of(labels: frozenset) -> int | None:
    mask = 0
    for label in labels:
        if not isinstance(label, int) or label < 0:
            return None
        mask |= 1 << label
    return mask


def _prepare_pattern(pattern) -> PreparedPattern:
    return pattern if isinstance(pattern, PreparedPattern) else PreparedPattern(pattern)


def _prepare_subtree(subtree) -> PreparedSubtree:
    return subtree if isinstance(subtree, PreparedSubtree) else PreparedSubtree(subtree)


def label_prefilter(pattern, subtree) -> bool:
    """True iff the pattern's label set is a subset of the subtree's.

    A sound screen: an embedding preserves labels, so a missing label rules
    it out. Uses dense-id bitsets when both sides are integer-encoded.
    """
    pat, tre = _prepare_pattern(pattern), _prepare_subtree(subtree)
    if pat.mask is not None and tre.mask is not None:
        return pat.mask & ~tre.mask == 0
    return pat.labels <= tre.labels


def _feasible(pat: PreparedPattern, tre: PreparedSubtree, i: int, p_i: int) -> bool:
    """Can pattern[p_i:] still fit in the items from position i on?"""
    if len(pat.items) - p_i > len(tre.items) - i:
        return False
    for label, needed in pat.suffix_counts[p_i].items():
        positions = tre.label_positions.get(label)
        if positions is None or len(positions) - bisect_left(positions, i) < needed:
            return False
    return True


def pattern_matches(pattern, subtree) -> bool:
    """Exact embedded-subtree containment of a canonical pattern in a tree.

    Pure and reentrant: all search state is per-call. Equivalent to the
    exhaustive embeds() oracle.
    """
    pat, tre = _prepare_pattern(pattern), _prepare_subtree(subtree)
    pitems, titems = pat.items, tre.items
    plen, tlen = len(pitems), len(titems)
    if plen == 0:
        raise ValueError("empty pattern")

    history: list[tuple[int, int, int, tuple]] = [(0, 0, 0, ())]
    seen: set[tuple[int, int, tuple]] = set()

    def find_in_subtree(start: int, p_start: int, depth_start: int, stack_init: tuple) -> bool:
        p_i = p_start
        depth = depth_start
        depth_stack = list(stack_init)
        for i in range(start, tlen):
            item = titems[i]
            if item == UP:
                if depth_stack and depth - 1 == depth_stack[-1]:
                    if pitems[p_i] == UP:
                        depth_stack.pop()
                        p_i += 1
                    else:
                        # the subtree closes the deepest matched node while
                        # the pattern still expects content below it:
                        # restart matching from scratch at this point
                        depth_stack.clear()
                        p_i = 0
                depth -= 1
            else:
                if pitems[p_i] == item:
                    history.append((i + 1, p_i, depth + 1, tuple(depth_stack)))
                    depth_stack.append(depth)
                    p_i += 1
                    if p_i == plen:
                        return True
                depth += 1
        return False

    while history:
        start, p_i, depth, stack = history.pop()
        key = (start, p_i, stack)
        if key in seen:
            continue
        seen.add(key)
        if not _feasible(pat, tre, start, p_i):
            continue
        if find_in_subtree(start, p_i, depth, stack):
            return True
    return False


def matches_with_prefilter(pattern, subtree) -> bool:
    """Prefilter then exact match; what scoring loops call per pattern."""
    pat, tre = _prepare_pattern(pattern), _prepare_subtree(subtree)
    return label_prefilter(pat, tre) and pattern_matches(pat, tre)
