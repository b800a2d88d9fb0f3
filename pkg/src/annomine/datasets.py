"""Dataset manifests, the linter-report adapter, and the evaluation harness.

Two protocols mirror how a review session is studied: a 50/50 split by
review order (train on the first half of the submissions, predict the
annotations of the second half) and a longitudinal simulation (train on the
first k submissions, predict the (k+1)-th, for growing k). Every test
instance gets exactly one outcome: its 1-based rank when the true
annotation lands in the top k, otherwise not_in_top_k, or
no_training_instances / no_patterns when the model never had a chance.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from math import ceil
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .config import EngineConfig
from .encoding import InternTable
from .ingest import Submission, adapter_for, extract_line_context, prepare_source
from .miner import PatternExplosion, mine_patterns
from .model import (
    MIN_TREES_TO_MINE,
    Annotation,
    AnnotationInstance,
    AnnotationModel,
    EmptyTrainingSet,
    RankedSuggestion,
    build_from_forests,
    train,
)

RANK = "rank"
NOT_IN_TOP_K = "not_in_top_k"
NO_TRAINING_INSTANCES = "no_training_instances"
NO_PATTERNS = "no_patterns"
CATEGORIES = (RANK, NOT_IN_TOP_K, NO_TRAINING_INSTANCES, NO_PATTERNS)

DEFAULT_LINTER_EXCLUSIONS = frozenset({
    "line-too-long",
    "trailing-whitespace",
    "trailing-newlines",
    "missing-module-docstring",
    "missing-class-docstring",
    "missing-function-docstring",
})


class SchemaError(ValueError):
    pass


class DanglingReference(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class ExerciseDataset:
    exercise: str
    grammar: str
    submissions: list[Submission]  # review order
    annotations: list[Annotation]
    instances: list[AnnotationInstance]

    @property
    def submission_map(self) -> dict[str, Submission]:
        return {s.id: s for s in self.submissions}

    @property
    def annotation_map(self) -> dict[str, Annotation]:
        return {a.id: a for a in self.annotations}

    def stats(self) -> tuple[int, int, int]:
        return len(self.submissions), len(self.annotations), len(self.instances)


def _require(doc: dict, key: str, context: str):
    if key not in doc:
        raise SchemaError(f"{context}: missing key {key!r}")
    return doc[key]


def load_manifest(path: str | Path) -> ExerciseDataset:
    """Load and validate a dataset manifest; paths resolve against it.

    Every broken reference is collected before DanglingReference is raised,
    so one pass reports them all.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON ({err})") from None
    return dataset_from_manifest(doc, base_dir=path.parent)


def dataset_from_manifest(doc: dict, base_dir: Path | None = None,
                          sources: Mapping[str, str] | None = None) -> ExerciseDataset:
    """Build a dataset from a manifest document.

    Submission text comes from `sources` (id -> text) when given, otherwise
    from each submission's path relative to base_dir.
    """
    if not isinstance(doc, dict):
        raise SchemaError("manifest must be a JSON object")
    exercise = _require(doc, "exercise", "manifest")
    grammar = _require(doc, "grammar", "manifest")
    adapter_for(grammar)  # UnknownGrammar early
    submissions: list[Submission] = []
    seen_subs: set[str] = set()
    for i, entry in enumerate(_require(doc, "submissions", "manifest")):
        sub_id = _require(entry, "id", f"submissions[{i}]")
        sub_path = _require(entry, "path", f"submissions[{i}]")
        if sub_id in seen_subs:
            raise SchemaError(f"duplicate submission id {sub_id!r}")
        seen_subs.add(sub_id)
        if sources is not None and sub_id in sources:
            text = sources[sub_id]
        else:
            full = Path(sub_path)
            if base_dir is not None and not full.is_absolute():
                full = base_dir / full
            text = full.read_text(encoding="utf-8")
        submissions.append(Submission(id=sub_id, path=str(sub_path), source=text,
                                      tree=prepare_source(text, grammar)))
    annotations: list[Annotation] = []
    seen_anns: set[str] = set()
    for i, entry in enumerate(_require(doc, "annotations", "manifest")):
        ann_id = _require(entry, "id", f"annotations[{i}]")
        if ann_id in seen_anns:
            raise SchemaError(f"duplicate annotation id {ann_id!r}")
        seen_anns.add(ann_id)
        annotations.append(Annotation(id=ann_id, text=entry.get("text", "")))
    sub_lines = {s.id: s.source.count("\n") + 1 for s in submissions}
    instances: list[AnnotationInstance] = []
    problems: list[str] = []
    for i, entry in enumerate(_require(doc, "instances", "manifest")):
        ann_id = _require(entry, "annotation", f"instances[{i}]")
        sub_id = _require(entry, "submission", f"instances[{i}]")
        line = _require(entry, "line", f"instances[{i}]")
        if ann_id not in seen_anns:
            problems.append(f"instances[{i}]: unknown annotation {ann_id!r}")
            continue
        if sub_id not in seen_subs:
            problems.append(f"instances[{i}]: unknown submission {sub_id!r}")
            continue
        if not isinstance(line, int) or not 1 <= line <= sub_lines[sub_id]:
            problems.append(f"instances[{i}]: line {line!r} outside submission {sub_id!r}")
            continue
        instances.append(AnnotationInstance(ann_id, sub_id, line))
    if problems:
        raise DanglingReference(problems)
    return ExerciseDataset(exercise, grammar, submissions, annotations, instances)


def import_linter_report(report: Sequence[dict],
                         exclusions: Iterable[str] = DEFAULT_LINTER_EXCLUSIONS,
                         path_to_submission: Mapping[str, str] | None = None
                         ) -> tuple[list[Annotation], list[AnnotationInstance]]:
    """Turn a machine-readable linter report into annotations + instances.

    The report is a JSON array of {"path", "line", "message-id", "message"}
    with 1-based lines. One Annotation per distinct message id, one instance
    per non-excluded entry. path_to_submission maps report paths to
    submission ids (identity when omitted).
    """
    excluded = frozenset(exclusions)
    annotations: dict[str, Annotation] = {}
    instances: list[AnnotationInstance] = []
    for i, entry in enumerate(report):
        if not isinstance(entry, dict):
            raise SchemaError(f"report[{i}]: not an object")
        message_id = _require(entry, "message-id", f"report[{i}]")
        rpath = _require(entry, "path", f"report[{i}]")
        line = _require(entry, "line", f"report[{i}]")
        message = _require(entry, "message", f"report[{i}]")
        if not isinstance(line, int) or line < 1:
            raise SchemaError(f"report[{i}]: line must be a positive integer")
        if message_id in excluded:
            continue
        if message_id not in annotations:
            annotations[message_id] = Annotation(id=message_id, text=message)
        if path_to_submission is not None:
            if rpath not in path_to_submission:
                raise SchemaError(f"report[{i}]: path {rpath!r} matches no submission")
            sub_id = path_to_submission[rpath]
        else:
            sub_id = rpath
        instances.append(AnnotationInstance(message_id, sub_id, line))
    return list(annotations.values()), instances


@dataclass
class EvalRecord:
    annotation_id: str
    submission_id: str
    line: int
    category: str
    rank: int | None
    predict_time: float
    train_size: int
    context_extracted: bool

    def to_json_dict(self) -> dict:
        return {
            "annotation": self.annotation_id,
            "submission": self.submission_id,
            "line": self.line,
            "category": self.category,
            "rank": self.rank,
            "predict_time": self.predict_time,
            "train_size": self.train_size,
            "context_extracted": self.context_extracted,
        }


def _classify(model: AnnotationModel | None, ranked: list[RankedSuggestion] | None,
              annotation_id: str, top_k: int) -> tuple[str, int | None]:
    if model is None or annotation_id not in model.entries:
        return NO_TRAINING_INSTANCES, None
    if not model.entries[annotation_id].has_signal:
        return NO_PATTERNS, None
    if ranked is None:
        return NOT_IN_TOP_K, None
    for position, suggestion in enumerate(ranked, start=1):
        if suggestion.annotation_id == annotation_id:
            if position <= top_k:
                return RANK, position
            return NOT_IN_TOP_K, None
    return NOT_IN_TOP_K, None


def _predict_records(model: AnnotationModel | None,
                     test_instances: Sequence[AnnotationInstance],
                     submissions: Mapping[str, Submission],
                     top_k: int, train_size: int) -> list[EvalRecord]:
    records = []
    for instance in test_instances:
        tree = submissions[instance.submission_id].tree
        ranked = None
        started = time.perf_counter()
        context = extract_line_context(tree, instance.line - 1)
        if context is not None and model is not None:
            query = model.prepare_query(context.items)
            ranked = model.rank(query, top_k=max(top_k, len(model.entries)))
        elapsed = time.perf_counter() - started
        category, rank = _classify(model, ranked, instance.annotation_id, top_k)
        records.append(EvalRecord(
            annotation_id=instance.annotation_id,
            submission_id=instance.submission_id,
            line=instance.line,
            category=category,
            rank=rank,
            predict_time=elapsed,
            train_size=train_size,
            context_extracted=context is not None,
        ))
    return records


def summarize(records: Sequence[EvalRecord], top_k: int = 5) -> dict:
    total = len(records)
    counts = {category: 0 for category in CATEGORIES}
    rank_histogram = {r: 0 for r in range(1, top_k + 1)}
    for record in records:
        counts[record.category] += 1
        if record.category == RANK:
            rank_histogram[record.rank] += 1
    def frac(x):
        return x / total if total else 0.0
    top1 = rank_histogram.get(1, 0)
    topk = counts[RANK]
    times = sorted(r.predict_time for r in records)
    summary = {
        "instances": total,
        "counts": counts,
        "rank_histogram": rank_histogram,
        "top_1_rate": frac(top1),
        f"top_{top_k}_rate": frac(topk),
        "not_in_top_k_rate": frac(counts[NOT_IN_TOP_K]),
        "no_training_instances_rate": frac(counts[NO_TRAINING_INSTANCES]),
        "no_patterns_rate": frac(counts[NO_PATTERNS]),
    }
    if times:
        summary["predict_time"] = {
            "min": times[0],
            "max": times[-1],
            "mean": sum(times) / len(times),
            "median": times[len(times) // 2],
        }
    return summary


@dataclass
class SplitResult:
    model: AnnotationModel
    records: list[EvalRecord]
    summary: dict
    train_time: float
    train_size: int
    test_size: int


def eval_split(dataset: ExerciseDataset, split: float = 0.5,
               config: EngineConfig | None = None, top_k: int = 5,
               seed: int | None = None) -> SplitResult:
    """Train on the first ceil(N * split) submissions, test on the rest.

    The seed is recorded in the summary for provenance only: splitting is
    by review order, and nothing here draws random numbers.
    """
    if not 0 < split < 1:
        raise ValueError(f"split must be in (0, 1), got {split}")
    config = config or EngineConfig()
    submissions = dataset.submissions
    n_train = ceil(len(submissions) * split)
    train_ids = {s.id for s in submissions[:n_train]}
    submission_map = dataset.submission_map
    train_instances = [i for i in dataset.instances if i.submission_id in train_ids]
    test_instances = [i for i in dataset.instances if i.submission_id not in train_ids]
    started = time.perf_counter()
    model = train(train_instances, submission_map, config)
    train_time = time.perf_counter() - started
    records = _predict_records(model, test_instances, submission_map, top_k, n_train)
    summary = summarize(records, top_k)
    summary["train_time"] = train_time
    summary["train_submissions"] = n_train
    summary["test_submissions"] = len(submissions) - n_train
    if seed is not None:
        summary["seed"] = seed
    return SplitResult(model, records, summary, train_time,
                       n_train, len(submissions) - n_train)


@dataclass
class LongitudinalStep:
    step: int
    submission_id: str
    train_time: float
    records: list[EvalRecord]
    annotations_seen: int


@dataclass
class LongitudinalResult:
    steps: list[LongitudinalStep]
    records: list[EvalRecord]
    rolling_top_k: list[float]
    cumulative_top_k: list[float]
    summary: dict


class _IncrementalTrainer:
    """Rebuilds the per-step model, memoizing mining per forest prefix.

    An annotation's forest only ever grows during the simulation, so mining
    results are keyed by (annotation, subtree count) and reused; weights and
    unique nodes are recomputed globally every step, keeping each step's
    model equal to a from-scratch train() on the same prefix.
    """

    def __init__(self, config: EngineConfig, submissions: Mapping[str, Submission]):
        self.config = config
        self.submissions = submissions
        self.intern = InternTable()
        self.forests: dict[str, list[tuple]] = {}
        self.instances: list[AnnotationInstance] = []
        self.dropped: dict[str, int] = {}
        self._mined_cache: dict[tuple[str, int], set[tuple]] = {}
        self._pattern_cache: dict[tuple, object] = {}

    def add_instances(self, new_instances: Sequence[AnnotationInstance]) -> None:
        for instance in new_instances:
            submission = self.submissions[instance.submission_id]
            context = extract_line_context(submission.tree, instance.line - 1)
            self.instances.append(instance)
            forest = self.forests.setdefault(instance.annotation_id, [])
            if context is None:
                self.dropped[instance.annotation_id] = \
                    self.dropped.get(instance.annotation_id, 0) + 1
            else:
                forest.append(self.intern.intern_items(context.items))

    def build(self) -> AnnotationModel | None:
        if not self.instances:
            return None
        premined: dict[str, set[tuple]] = {}
        for annotation_id, forest in self.forests.items():
            key = (annotation_id, len(forest))
            if key not in self._mined_cache:
                if len(forest) >= MIN_TREES_TO_MINE:
                    try:
                        self._mined_cache[key] = mine_patterns(
                            forest, self.config.min_support,
                            strict=self.config.strict_support,
                            pattern_cap=self.config.pattern_cap)
                    except PatternExplosion as err:
                        raise PatternExplosion(err.cap, annotation_id=annotation_id) from None
                else:
                    self._mined_cache[key] = set()
            premined[annotation_id] = self._mined_cache[key]
        intern = InternTable(self.intern.to_list())
        forests = {a: list(f) for a, f in self.forests.items()}
        return build_from_forests(self.config, intern, forests,
                                  list(self.instances), dict(self.dropped),
                                  premined=premined,
                                  pattern_cache=self._pattern_cache)


def eval_longitudinal(dataset: ExerciseDataset, config: EngineConfig | None = None,
                      top_k: int = 5, drop_unannotated: bool = False,
                      window: int = 10) -> LongitudinalResult:
    """Simulate a review session: predict each submission before training on it."""
    config = config or EngineConfig()
    submission_map = dataset.submission_map
    instances_by_submission: dict[str, list[AnnotationInstance]] = {}
    for instance in dataset.instances:
        instances_by_submission.setdefault(instance.submission_id, []).append(instance)
    ordered = dataset.submissions
    if drop_unannotated:
        ordered = [s for s in ordered if instances_by_submission.get(s.id)]
    if sum(1 for s in ordered if instances_by_submission.get(s.id)) < 2:
        raise EmptyTrainingSet("longitudinal evaluation needs at least two annotated submissions")

    trainer = _IncrementalTrainer(config, submission_map)
    steps: list[LongitudinalStep] = []
    all_records: list[EvalRecord] = []
    model: AnnotationModel | None = None
    for step, submission in enumerate(ordered):
        targets = instances_by_submission.get(submission.id, [])
        records = _predict_records(model, targets, submission_map, top_k, step)
        all_records.extend(records)
        started = time.perf_counter()
        trainer.add_instances(targets)
        model = trainer.build()
        train_time = time.perf_counter() - started
        steps.append(LongitudinalStep(
            step=step,
            submission_id=submission.id,
            train_time=train_time,
            records=records,
            annotations_seen=len(model.entries) if model else 0,
        ))

    rolling: list[float] = []
    cumulative: list[float] = []
    hits_total = 0
    seen_total = 0
    for i, step in enumerate(steps):
        window_records = [r for s in steps[max(0, i - window + 1): i + 1] for r in s.records]
        hits = sum(1 for r in window_records if r.category == RANK)
        rolling.append(hits / len(window_records) if window_records else 0.0)
        hits_total += sum(1 for r in step.records if r.category == RANK)
        seen_total += len(step.records)
        cumulative.append(hits_total / seen_total if seen_total else 0.0)

    summary = summarize(all_records, top_k)
    summary["submissions"] = len(steps)
    summary["window"] = window
    return LongitudinalResult(steps, all_records, rolling, cumulative, summary)


# --- report files -----------------------------------------------------------

def _write_csv(path: Path, header: list[str], rows: Iterable[Sequence]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _model_json_bytes(model: AnnotationModel) -> str:
    return json.dumps(model.to_json_dict(), sort_keys=True, separators=(",", ":")) + "\n"


_RECORD_HEADER = ["submission", "line", "annotation", "category", "rank",
                  "train_size", "context_extracted"]


def _record_row(record: EvalRecord) -> list:
    return [record.submission_id, record.line, record.annotation_id,
            record.category, record.rank if record.rank is not None else "",
            record.train_size, str(record.context_extracted).lower()]


def write_split_report(result: SplitResult, outdir: str | Path) -> None:
    """model.json, records.csv and outcomes.csv are byte-deterministic;
    wall-clock timings only go into the JSON reports."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "model.json").write_text(_model_json_bytes(result.model), encoding="utf-8")
    _write_csv(outdir / "records.csv", _RECORD_HEADER,
               [_record_row(r) for r in result.records])
    total = len(result.records) or 1
    _write_csv(outdir / "outcomes.csv", ["category", "count", "fraction"],
               [[c, result.summary["counts"][c],
                 f"{result.summary['counts'][c] / total:.6f}"] for c in CATEGORIES])
    (outdir / "summary.json").write_text(
        json.dumps(result.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (outdir / "records.json").write_text(
        json.dumps([r.to_json_dict() for r in result.records], indent=2) + "\n",
        encoding="utf-8")


def write_longitudinal_report(result: LongitudinalResult, outdir: str | Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(outdir / "records.csv", ["step"] + _RECORD_HEADER,
               [[r.train_size] + _record_row(r) for r in result.records])
    outcome_rows = []
    for step in result.steps:
        by_cat = {c: 0 for c in CATEGORIES}
        rank1 = 0
        for record in step.records:
            by_cat[record.category] += 1
            if record.rank == 1:
                rank1 += 1
        outcome_rows.append([
            step.step, step.submission_id, len(step.records), rank1,
            by_cat[RANK] - rank1, by_cat[NOT_IN_TOP_K],
            by_cat[NO_PATTERNS], by_cat[NO_TRAINING_INSTANCES],
        ])
    _write_csv(outdir / "outcomes_per_step.csv",
               ["step", "submission", "instances", "rank_1", "rank_2_to_k",
                "not_in_top_k", "no_patterns", "no_training_instances"],
               outcome_rows)
    _write_csv(outdir / "annotations_seen.csv", ["step", "annotations_seen"],
               [[s.step, s.annotations_seen] for s in result.steps])
    _write_csv(outdir / "rolling_top_k.csv", ["step", "window_rate", "cumulative_rate"],
               [[i, f"{w:.6f}", f"{c:.6f}"]
                for i, (w, c) in enumerate(zip(result.rolling_top_k, result.cumulative_top_k))])
    timing_rows = []
    for step in result.steps:
        times = [r.predict_time for r in step.records]
        timing_rows.append([
            step.step, f"{step.train_time * 1000:.3f}",
            f"{min(times) * 1000:.3f}" if times else "",
            f"{(sum(times) / len(times)) * 1000:.3f}" if times else "",
            f"{max(times) * 1000:.3f}" if times else "",
        ])
    _write_csv(outdir / "timings_per_step.csv",
               ["step", "train_ms", "predict_min_ms", "predict_avg_ms", "predict_max_ms"],
               timing_rows)
    (outdir / "summary.json").write_text(
        json.dumps(result.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
