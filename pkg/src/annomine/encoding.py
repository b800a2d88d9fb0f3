"""Depth-first string encoding for rooted, ordered, labeled trees and patterns.

A tree is a flat sequence of items: a label opens a node, the UP marker
closes the most recently opened one. Trees carry the full closing form
(every edge contributes one UP), patterns strip trailing UP markers.
Labels are either raw strings or dense integer ids produced by an
InternTable; the UP marker is always the integer -1.
"""
from __future__ import annotations

from typing import Hashable, Iterable, Sequence

UP = -1

#: Label texts that can never be interned: "UP" is the marker's spelling in
#: textual form, "-1" is its spelling in integer-encoded interchange files.
RESERVED_LABEL_TEXTS = frozenset({"UP", "-1"})

Item = Hashable  # a label (str | int >= 0) or UP


class MalformedEncoding(ValueError):
    """Raised when an item sequence violates the encoding invariants."""

    def __init__(self, position: int, reason: str):
        super().__init__(f"malformed encoding at item {position}: {reason}")
        self.position = position
        self.reason = reason


class EncodedTree:
    """A validated tree encoding: full form, count(UP) == count(labels) - 1."""

    __slots__ = ("items",)

    def __init__(self, items: tuple):
        self.items = items

    def __eq__(self, other):
        return isinstance(other, EncodedTree) and self.items == other.items

    def __hash__(self):
        return hash((EncodedTree, self.items))

    def __repr__(self):
        return f"EncodedTree({format_text(self.items)!r})"


class Pattern:
    """A validated pattern encoding: canonical form, trailing UPs stripped."""

    __slots__ = ("items",)

    def __init__(self, items: tuple):
        self.items = items

    @property
    def size(self) -> int:
        return label_count(self.items)

    def __eq__(self, other):
        return isinstance(other, Pattern) and self.items == other.items

    def __hash__(self):
        return hash((Pattern, self.items))

    def __repr__(self):
        return f"Pattern({format_text(self.items)!r})"


def items_of(x) -> tuple:
    """Unwrap an EncodedTree/Pattern to its item tuple; pass tuples through."""
    if isinstance(x, (EncodedTree, Pattern)):
        return x.items
    return tuple(x)


def _check_prefix_form(items: Sequence) -> None:
    """Depth must start at a label and never drop below 1 afterwards."""
    if len(items) == 0:
        raise MalformedEncoding(0, "empty sequence")
    if items[0] == UP:
        raise MalformedEncoding(0, "sequence starts with UP")
    depth = 0
    for pos, item in enumerate(items):
        depth += -1 if item == UP else 1
        if depth < 1:
            raise MalformedEncoding(pos, "depth dropped below the root")


def validate(items: Iterable) -> EncodedTree:
    """Validate a raw item sequence as a full tree encoding.

    Raises MalformedEncoding for empty input, a leading UP, depth underflow,
    or a final depth other than 1 (i.e. unclosed or over-closed nodes).
    """
    seq = tuple(items)
    _check_prefix_form(seq)
    final_depth = label_count(seq) - (len(seq) - label_count(seq))
    if final_depth != 1:
        raise MalformedEncoding(len(seq) - 1, f"final depth {final_depth}, expected 1")
    return EncodedTree(seq)


def canonical_pattern(items: Iterable) -> Pattern:
    """Validate a raw item sequence as a pattern, stripping trailing UPs."""
    seq = tuple(items)
    end = len(seq)
    while end > 0 and seq[end - 1] == UP:
        end -= 1
    seq = seq[:end]
    _check_prefix_form(seq)
    return Pattern(seq)


def complete_tree(pattern: Pattern | Sequence) -> EncodedTree:
    """Re-append the UP markers a canonical pattern dropped, giving a tree."""
    seq = items_of(pattern)
    missing = label_count(seq) - 1 - (len(seq) - label_count(seq))
    return validate(seq + (UP,) * missing)


def label_count(items: Sequence) -> int:
    return sum(1 for item in items if item != UP)


def labels_of(x) -> frozenset:
    """The set (not multiset) of distinct labels in a tree or pattern."""
    return frozenset(item for item in items_of(x) if item != UP)


def parse_text(text: str) -> tuple:
    """Parse a whitespace-separated textual encoding, e.g. "a b UP c"."""
    return tuple(UP if tok == "UP" else tok for tok in text.split())


def format_text(items: Sequence) -> str:
    return " ".join("UP" if item == UP else str(item) for item in items_of(items))


class InternTable:
    """Bijective label-text <-> dense-integer-id mapping for one model build.

    Built single-threaded during ingest, read-only afterwards.
    """

    def __init__(self, labels: Iterable[str] = ()):
        self._texts: list[str] = []
        self._ids: dict[str, int] = {}
        for text in labels:
            self.intern(text)

    def intern(self, text: str) -> int:
        existing = self._ids.get(text)
        if existing is not None:
            return existing
        if not isinstance(text, str) or not text:
            raise ValueError(f"label must be a non-empty string, got {text!r}")
        if text in RESERVED_LABEL_TEXTS:
            raise ValueError(f"label text {text!r} is reserved")
        label_id = len(self._texts)
        self._texts.append(text)
        self._ids[text] = label_id
        return label_id

    def id_of(self, text: str) -> int | None:
        return self._ids.get(text)

    def text_of(self, label_id: int) -> str:
        return self._texts[label_id]

    def intern_items(self, items: Sequence) -> tuple[int, ...]:
        return tuple(UP if item == UP else self.intern(item) for item in items)

    def resolve_items(self, items: Sequence[int]) -> tuple:
        return tuple(UP if item == UP else self._texts[item] for item in items)

    def to_list(self) -> list[str]:
        return list(self._texts)

    def __len__(self) -> int:
        return len(self._texts)

    def __contains__(self, text: str) -> bool:
        return text in self._ids


def to_interchange(items: Sequence) -> dict:
    """Serialize string-labeled items to {"labels": [...], "items": [...]}.

    The label table is local to the document, in first-occurrence order;
    non-negative items index it and -1 is UP.
    """
    seq = items_of(items)
    local = InternTable()
    encoded = [UP if item == UP else local.intern(item) for item in seq]
    return {"labels": local.to_list(), "items": encoded}


def _items_from_interchange(doc: dict) -> tuple:
    if not isinstance(doc, dict) or "labels" not in doc or "items" not in doc:
        raise MalformedEncoding(0, "interchange document needs 'labels' and 'items'")
    labels = doc["labels"]
    out = []
    for pos, item in enumerate(doc["items"]):
        if item == UP:
            out.append(UP)
        elif isinstance(item, int) and 0 <= item < len(labels):
            out.append(labels[item])
        else:
            raise MalformedEncoding(pos, f"item {item!r} is not -1 or a label index")
    return tuple(out)


def tree_from_interchange(doc: dict) -> EncodedTree:
    """Parse a tree interchange document; item count must equal 2n - 1."""
    seq = _items_from_interchange(doc)
    tree = validate(seq)
    n = label_count(seq)
    if len(seq) != 2 * n - 1:
        raise MalformedEncoding(len(seq) - 1, f"{len(seq)} items for {n} labels, expected {2 * n - 1}")
    return tree


def pattern_from_interchange(doc: dict) -> Pattern:
    return canonical_pattern(_items_from_interchange(doc))
