"""Frequent embedded-subtree mining over a forest of encoded trees.

mine_patterns grows patterns by rightmost-path extension, tracking for each
candidate a vertical scope list: per tree, the set of preorder scope tuples
an embedding's rightmost path can occupy. Support is per-tree distinct (a
tree counts once no matter how many embeddings it holds).

embeds() is the exhaustive-search oracle for embedded-subtree containment;
it is exponential and intended for tests and verification only.
"""
from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Sequence

from .config import as_fraction
from .encoding import UP, items_of, label_count


class PatternExplosion(RuntimeError):
    """Mining exceeded the configured pattern-count safety cap."""

    def __init__(self, cap: int, annotation_id: str | None = None):
        self.cap = cap
        self.annotation_id = annotation_id
        where = f" for annotation {annotation_id!r}" if annotation_id else ""
        super().__init__(f"more than {cap} patterns mined{where}")


class TreeIndex:
    """Preorder node table for one encoded tree.

    scopes[k] = (k, upper) where upper is the preorder position of node k's
    rightmost descendant; label_positions maps label -> sorted node positions.
    """

    __slots__ = ("items", "n", "labels", "scopes", "parents", "label_positions")

    def __init__(self, items: Sequence):
        seq = items_of(items)
        labels: list = []
        parents: list[int] = []
        uppers: list[int] = []
        stack: list[int] = []
        for item in seq:
            if item == UP:
                closed = stack.pop()
                uppers[closed] = len(labels) - 1
            else:
                pos = len(labels)
                labels.append(item)
                parents.append(stack[-1] if stack else -1)
                uppers.append(-1)
                stack.append(pos)
        while stack:  # canonical patterns omit trailing UPs
            uppers[stack.pop()] = len(labels) - 1
        self.items = seq
        self.n = len(labels)
        self.labels = labels
        self.parents = parents
        self.scopes = [(k, uppers[k]) for k in range(self.n)]
        positions: dict = {}
        for k, label in enumerate(labels):
            positions.setdefault(label, []).append(k)
        self.label_positions = positions

    def ancestors_of(self, k: int) -> frozenset[int]:
        out = set()
        j = self.parents[k]
        while j != -1:
            out.add(j)
            j = self.parents[j]
        return frozenset(out)


def embeds(pattern, tree) -> bool:
    """Exhaustively decide whether pattern embeds into tree.

    True iff an injective, label-preserving map from pattern nodes to tree
    nodes exists that preserves ancestor-descendant relations in both
    directions and preorder order.
    """
    pat = TreeIndex(pattern)
    tre = TreeIndex(tree)
    if pat.n == 0:
        raise ValueError("empty pattern")
    if pat.n > tre.n:
        return False
    pat_ancestors = [pat.ancestors_of(k) for k in range(pat.n)]
    positions = tre.label_positions
    chosen: list[int] = []

    def assign(k: int, min_pos: int) -> bool:
        candidates = positions.get(pat.labels[k])
        if not candidates:
            return False
        start = bisect_right(candidates, min_pos - 1)
        for t in candidates[start:]:
            ok = True
            for j in range(k):
                upper_j = tre.scopes[chosen[j]][1]
                if j in pat_ancestors[k]:
                    if t > upper_j:  # image must stay inside the ancestor's scope
                        ok = False
                        break
                elif t <= upper_j:  # cousins must map to disjoint, later scopes
                    ok = False
                    break
            if not ok:
                continue
            if k + 1 == pat.n:
                return True
            chosen.append(t)
            if assign(k + 1, t + 1):
                return True
            chosen.pop()
        return False

    return assign(0, 0)


def _support_ok(count: int, total: int, min_support: Fraction, strict: bool) -> bool:
    frac = Fraction(count, total)
    return frac > min_support if strict else frac >= min_support


def _min_count(total: int, min_support: Fraction, strict: bool) -> int:
    """Smallest tree count whose support fraction passes the threshold."""
    scaled = min_support * total
    if strict:
        return scaled.numerator // scaled.denominator + 1
    return -(-scaled.numerator // scaled.denominator)


def mine_patterns(
    forest: Sequence,
    min_support,
    *,
    strict: bool = False,
    pattern_cap: int | None = None,
) -> set[tuple]:
    """Mine all frequent embedded-subtree patterns from a forest.

    Returns canonical pattern item tuples whose per-tree distinct support
    (trees embedding the pattern / trees in the forest) passes min_support.
    Duplicate trees count as distinct forest entries.
    """
    trees = [TreeIndex(t) for t in forest]
    total = len(trees)
    if total == 0:
        raise ValueError("forest must contain at least one tree")
    min_support = as_fraction(min_support)
    needed = _min_count(total, min_support, strict)

    tids_with_label: dict = {}
    for tid, tree in enumerate(trees):
        for label in tree.label_positions:
            tids_with_label.setdefault(label, set()).add(tid)
    frequent_labels = sorted(
        label for label, tids in tids_with_label.items() if len(tids) >= needed
    )

    found: set[tuple] = set()

    def emit(pattern_items: tuple) -> None:
        found.add(pattern_items)
        if pattern_cap is not None and len(found) > pattern_cap:
            raise PatternExplosion(pattern_cap)

    def extend(pattern_items: tuple, rp_len: int, scope_lists: dict) -> None:
        keys = scope_lists.keys()
        for y in frequent_labels:
            y_tids = tids_with_label[y]
            if len(y_tids & keys) < needed:
                continue
            for depth in range(rp_len - 1, -1, -1):
                new_lists: dict = {}
                for tid, entries in scope_lists.items():
                    if tid not in y_tids:
                        continue
                    candidates = trees[tid].label_positions[y]
                    node_scopes = trees[tid].scopes
                    new_entries = set()
                    for rp in entries:
                        if depth == rp_len - 1:
                            lo_bound, hi_bound = rp[-1]
                        else:
                            # attach under rp[depth], right of the subtree
                            # currently hanging at rp[depth + 1]
                            lo_bound = rp[depth + 1][1]
                            hi_bound = rp[depth][1]
                        start = bisect_right(candidates, lo_bound)
                        prefix = rp[: depth + 1]
                        for idx in range(start, len(candidates)):
                            pos = candidates[idx]
                            if pos > hi_bound:
                                break
                            new_entries.add(prefix + (node_scopes[pos],))
                    if new_entries:
                        new_lists[tid] = new_entries
                if len(new_lists) >= needed:
                    child = pattern_items + (UP,) * (rp_len - 1 - depth) + (y,)
                    emit(child)
                    extend(child, depth + 2, new_lists)

    for label in frequent_labels:
        scope_lists = {
            tid: {(scope,) for scope in (trees[tid].scopes[k] for k in trees[tid].label_positions[label])}
            for tid in sorted(tids_with_label[label])
        }
        emit((label,))
        extend((label,), 1, scope_lists)

    return found


def enumerate_frequent_oracle(
    forest: Sequence,
    min_support,
    *,
    strict: bool = False,
) -> set[tuple]:
    """Test oracle: enumerate frequent patterns by embeds() counting alone.

    Grows candidates by rightmost-path extension over the forest's label
    alphabet and keeps a pattern iff its embeds()-computed support passes
    the threshold (anti-monotonicity justifies pruning below it). Shares no
    scope-list machinery with mine_patterns.
    """
    forests_items = [items_of(t) for t in forest]
    total = len(forests_items)
    if total == 0:
        raise ValueError("forest must contain at least one tree")
    min_support = as_fraction(min_support)
    alphabet = sorted({item for items in forests_items for item in items if item != UP})

    def supported(pattern_items: tuple) -> bool:
        count = sum(1 for t in forests_items if embeds(pattern_items, t))
        return _support_ok(count, total, min_support, strict)

    found: set[tuple] = set()

    def grow(pattern_items: tuple, rp_len: int) -> None:
        for y in alphabet:
            for depth in range(rp_len):
                child = pattern_items + (UP,) * (rp_len - 1 - depth) + (y,)
                if supported(child):
                    found.add(child)
                    grow(child, depth + 2)

    for label in alphabet:
        if supported((label,)):
            found.add((label,))
            grow((label,), 1)
    return found
