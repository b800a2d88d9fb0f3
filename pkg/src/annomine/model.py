"""Per-annotation model: mined weighted patterns plus unique-node sets.

Training collects the line-context subtree of every annotation instance,
mines each annotation's forest for frequent embedded patterns (only when it
has at least three subtrees), weights every stored pattern by
size / number-of-annotations-containing-it, and keeps per annotation the
set of node labels that fewer than three other annotations' forests share.
Scoring matches patterns against a query subtree and combines the weighted
pattern score with the matched fraction of unique nodes.

All weights and scores are exact rationals; ranking order is fully
deterministic (ties broken by annotation id).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .config import EngineConfig
from .encoding import UP, InternTable, items_of, label_count
from .ingest import Submission, extract_line_context
from .matcher import PreparedPattern, PreparedSubtree, label_prefilter, pattern_matches
from .miner import PatternExplosion, mine_patterns

MIN_TREES_TO_MINE = 3
UNIQUE_NODE_OTHERS = 3  # a label stays unique if < this many other annotations have it


class UnknownAnnotation(KeyError):
    pass


class EmptyTrainingSet(ValueError):
    pass


@dataclass(frozen=True)
class Annotation:
    id: str
    text: str = ""


@dataclass(frozen=True)
class AnnotationInstance:
    annotation_id: str
    submission_id: str
    line: int  # 1-based

    def __post_init__(self):
        if self.line < 1:
            raise ValueError(f"line numbers are 1-based, got {self.line}")


@dataclass(frozen=True)
class RankedSuggestion:
    annotation_id: str
    combined: Fraction
    pattern_score: Fraction
    unique_fraction: Fraction


class _AnnotationEntry:
    __slots__ = ("patterns", "prepared", "unique_nodes", "subtree_count")

    def __init__(self, patterns: list[tuple[tuple, Fraction]],
                 unique_nodes: frozenset[int], subtree_count: int,
                 pattern_cache: dict[tuple, PreparedPattern] | None = None):
        self.patterns = patterns
        if pattern_cache is None:
            self.prepared = [PreparedPattern(items) for items, _ in patterns]
        else:
            self.prepared = [
                pattern_cache.setdefault(items, PreparedPattern(items))
                for items, _ in patterns
            ]
        self.unique_nodes = unique_nodes
        self.subtree_count = subtree_count

    @property
    def has_signal(self) -> bool:
        return bool(self.patterns) or bool(self.unique_nodes)


class AnnotationModel:
    """Immutable trained artifact; safe to share across threads."""

    def __init__(self, config: EngineConfig, intern: InternTable,
                 entries: dict[str, _AnnotationEntry],
                 forests: dict[str, list[tuple]] | None = None,
                 instances: list[AnnotationInstance] | None = None,
                 dropped: dict[str, int] | None = None):
        self.config = config
        self.intern = intern
        self.entries = entries
        self.forests = forests
        self.instances = instances
        self.dropped = dropped or {}

    @classmethod
    def empty(cls, config: EngineConfig | None = None) -> "AnnotationModel":
        return cls(config or EngineConfig(), InternTable(), {}, {}, [], {})

    @property
    def annotation_ids(self) -> list[str]:
        return sorted(self.entries)

    def __contains__(self, annotation_id: str) -> bool:
        return annotation_id in self.entries

    def prepare_query(self, subtree) -> PreparedSubtree:
        """Intern a string-labeled query subtree against this model's table.

        Labels the model never saw map to fresh negative sentinels: they can
        never equal a pattern label but still carry the tree structure.
        """
        items = items_of(subtree)
        unknown: dict[str, int] = {}
        mapped = []
        for item in items:
            if item == UP:
                mapped.append(UP)
                continue
            label_id = self.intern.id_of(item)
            if label_id is None:
                label_id = unknown.setdefault(item, -2 - len(unknown))
            mapped.append(label_id)
        return PreparedSubtree(tuple(mapped))

    def score(self, annotation_id: str, subtree) -> tuple[Fraction, Fraction]:
        """(pattern_score, unique_fraction) of one annotation for a subtree."""
        entry = self.entries.get(annotation_id)
        if entry is None:
            raise UnknownAnnotation(annotation_id)
        query = subtree if isinstance(subtree, PreparedSubtree) else self.prepare_query(subtree)
        return self._score_entry(entry, query)

    @staticmethod
    def _score_entry(entry: _AnnotationEntry, query: PreparedSubtree) -> tuple[Fraction, Fraction]:
        pattern_score = Fraction(0)
        if entry.patterns:
            matched = Fraction(0)
            for (items, weight), prepared in zip(entry.patterns, entry.prepared):
                if label_prefilter(prepared, query) and pattern_matches(prepared, query):
                    matched += weight
            pattern_score = matched / len(entry.patterns)
        unique_fraction = Fraction(0)
        if entry.unique_nodes:
            hit = len(entry.unique_nodes & query.labels)
            unique_fraction = Fraction(hit, len(entry.unique_nodes))
        return pattern_score, unique_fraction

    def rank(self, subtree, top_k: int = 5) -> list[RankedSuggestion]:
        """Top-k annotations by combined score, ties broken by id."""
        if top_k < 1:
            raise ValueError("top_k must be positive")
        query = subtree if isinstance(subtree, PreparedSubtree) else self.prepare_query(subtree)
        alpha = self.config.alpha
        scored = []
        for annotation_id, entry in self.entries.items():
            pattern_score, unique_fraction = self._score_entry(entry, query)
            combined = alpha * pattern_score + (1 - alpha) * unique_fraction
            scored.append(RankedSuggestion(annotation_id, combined, pattern_score, unique_fraction))
        scored.sort(key=lambda s: (-s.combined, s.annotation_id))
        return scored[:top_k]

    def to_json_dict(self) -> dict:
        annotations = {}
        for annotation_id, entry in self.entries.items():
            annotations[annotation_id] = {
                "patterns": [
                    [list(items), weight.numerator, weight.denominator]
                    for items, weight in entry.patterns
                ],
                "unique_nodes": sorted(entry.unique_nodes),
            }
        return {
            "config": self.config.to_json_dict(),
            "labels": self.intern.to_list(),
            "annotations": annotations,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "AnnotationModel":
        config = EngineConfig.from_json_dict(doc["config"])
        intern = InternTable(doc["labels"])
        entries = {}
        for annotation_id, body in doc["annotations"].items():
            patterns = [
                (tuple(items), Fraction(num, den))
                for items, num, den in body["patterns"]
            ]
            patterns.sort(key=lambda p: p[0])
            entries[annotation_id] = _AnnotationEntry(
                patterns, frozenset(body["unique_nodes"]), subtree_count=0)
        return cls(config, intern, entries, forests=None, instances=None)


def _extract_forests(
    instances: Sequence[AnnotationInstance],
    submissions: Mapping[str, Submission],
    intern: InternTable,
    forests: dict[str, list[tuple]],
    dropped: dict[str, int],
) -> int:
    """Append each instance's line context to its annotation's forest."""
    usable = 0
    for instance in instances:
        submission = submissions.get(instance.submission_id)
        if submission is None:
            raise KeyError(f"instance references unknown submission {instance.submission_id!r}")
        forest = forests.setdefault(instance.annotation_id, [])
        context = extract_line_context(submission.tree, instance.line - 1)
        if context is None:
            dropped[instance.annotation_id] = dropped.get(instance.annotation_id, 0) + 1
            continue
        forest.append(intern.intern_items(context.items))
        usable += 1
    return usable


def build_from_forests(config: EngineConfig, intern: InternTable,
                       forests: dict[str, list[tuple]],
                       instances: list[AnnotationInstance],
                       dropped: dict[str, int],
                       premined: dict[str, set[tuple]] | None = None,
                       pattern_cache: dict[tuple, PreparedPattern] | None = None
                       ) -> AnnotationModel:
    """Assembly step shared by train() and the evaluation harness.

    premined lets an evaluator reuse mining results for forests it has seen
    before; annotations not covered there are mined here. Weighting and
    unique-node computation always run fresh, they are global. pattern_cache
    shares prepared-pattern objects across successive builds.
    """
    mined: dict[str, set[tuple]] = {}
    for annotation_id in sorted(forests):
        forest = forests[annotation_id]
        if premined is not None and annotation_id in premined:
            mined[annotation_id] = premined[annotation_id]
        elif len(forest) >= MIN_TREES_TO_MINE:
            try:
                mined[annotation_id] = mine_patterns(
                    forest, config.min_support,
                    strict=config.strict_support, pattern_cap=config.pattern_cap)
            except PatternExplosion as err:
                raise PatternExplosion(err.cap, annotation_id=annotation_id) from None
        else:
            mined[annotation_id] = set()

    # a unique node is one that occurs in the forests of < 3 other annotations;
    # no minimum instance count applies here
    label_sets = {
        annotation_id: frozenset(
            item for items in forest for item in items if item != UP)
        for annotation_id, forest in forests.items()
    }
    containing: dict[int, int] = {}
    for labels in label_sets.values():
        for label in labels:
            containing[label] = containing.get(label, 0) + 1
    unique_nodes = {
        annotation_id: frozenset(
            label for label in labels
            if containing[label] - 1 < UNIQUE_NODE_OTHERS)
        for annotation_id, labels in label_sets.items()
    }

    occurrences: dict[tuple, int] = {}
    for patterns in mined.values():
        for items in patterns:
            occurrences[items] = occurrences.get(items, 0) + 1

    weight_memo: dict[tuple[int, int], Fraction] = {}

    def weight_of(items: tuple) -> Fraction:
        key = (label_count(items), occurrences[items])
        cached = weight_memo.get(key)
        if cached is None:
            cached = weight_memo[key] = Fraction(*key)
        return cached

    entries = {}
    for annotation_id, forest in forests.items():
        weighted = sorted((items, weight_of(items)) for items in mined[annotation_id])
        entries[annotation_id] = _AnnotationEntry(
            weighted, unique_nodes[annotation_id], len(forest), pattern_cache)
    return AnnotationModel(config, intern, entries, forests, instances, dropped)


def train(instances: Iterable[AnnotationInstance],
          submissions: Mapping[str, Submission],
          config: EngineConfig | None = None) -> AnnotationModel:
    """Train a model from annotation instances over parsed submissions.

    Instances on lines with no extractable context are dropped and counted
    in model.dropped. Raises EmptyTrainingSet when nothing usable remains.
    """
    config = config or EngineConfig()
    instance_list = list(instances)
    intern = InternTable()
    forests: dict[str, list[tuple]] = {}
    dropped: dict[str, int] = {}
    usable = _extract_forests(instance_list, submissions, intern, forests, dropped)
    if usable == 0:
        raise EmptyTrainingSet("no training instance yields a context subtree")
    return build_from_forests(config, intern, forests, instance_list, dropped)


def retrain(model: AnnotationModel,
            new_instances: Iterable[AnnotationInstance],
            submissions: Mapping[str, Submission]) -> AnnotationModel:
    """Full rebuild over the union of old and new instances.

    Produces the same model train() would give on the combined instance
    list (a tested contract). Only models that kept their training forests
    can be retrained; deserialized models cannot.
    """
    if model.forests is None or model.instances is None:
        raise ValueError("model was deserialized without training data; retrain needs a freshly trained model")
    intern = InternTable(model.intern.to_list())
    forests = {annotation_id: list(forest) for annotation_id, forest in model.forests.items()}
    dropped = dict(model.dropped)
    new_list = list(new_instances)
    usable = _extract_forests(new_list, submissions, intern, forests, dropped)
    if usable == 0 and not any(forests.values()):
        raise EmptyTrainingSet("no training instance yields a context subtree")
    return build_from_forests(model.config, intern, forests, model.instances + new_list, dropped)
