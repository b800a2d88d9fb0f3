"""Command-line interface: ingest, mine, match, train, suggest, eval, serve."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import EngineConfig
from .datasets import (
    eval_longitudinal,
    eval_split,
    load_manifest,
    write_longitudinal_report,
    write_split_report,
)
from .encoding import pattern_from_interchange, to_interchange, tree_from_interchange
from .ingest import adapter_for, extract_line_context, parse_source, postprocess_identifiers
from .matcher import pattern_matches
from .miner import mine_patterns
from .model import AnnotationModel, train as train_model


@click.group()
def cli():
    """Annotation suggestions from mined AST patterns."""


@cli.command()
@click.option("--grammar", default="python", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="-",
              help="Output JSONL path, - for stdout.")
@click.option("--raw", is_flag=True, help="Skip identifier post-processing.")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def ingest(grammar, out, raw, files):
    """Parse source files and emit one syntax-tree interchange JSON per line."""
    adapter = adapter_for(grammar)
    lines = []
    for path in files:
        source = Path(path).read_text(encoding="utf-8")
        tree = adapter.parse(source)
        if not raw:
            tree = postprocess_identifiers(tree, source, adapter.identifier_kinds)
        lines.append(json.dumps(tree.to_json_dict(), sort_keys=True))
    text = "\n".join(lines) + "\n"
    if out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


@cli.command()
@click.option("--min-support", default="0.8", show_default=True)
@click.option("--strict", is_flag=True, help="Require support strictly above the threshold.")
@click.option("--pattern-cap", type=int, default=None)
@click.argument("forest", type=click.Path(exists=True, dir_okay=False))
def mine(min_support, strict, pattern_cap, forest):
    """Mine frequent patterns from a JSONL file of encoded trees (debug)."""
    trees = []
    for line in Path(forest).read_text(encoding="utf-8").splitlines():
        if line.strip():
            trees.append(tree_from_interchange(json.loads(line)).items)
    patterns = mine_patterns(trees, min_support, strict=strict, pattern_cap=pattern_cap)
    for items in sorted(patterns):
        click.echo(json.dumps(to_interchange(items), sort_keys=True))


@cli.command()
@click.argument("pattern_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("tree_file", type=click.Path(exists=True, dir_okay=False))
def match(pattern_file, tree_file):
    """Print true/false: does the pattern embed into the tree (debug)."""
    pattern = pattern_from_interchange(json.loads(Path(pattern_file).read_text(encoding="utf-8")))
    tree = tree_from_interchange(json.loads(Path(tree_file).read_text(encoding="utf-8")))
    click.echo("true" if pattern_matches(pattern.items, tree.items) else "false")


@cli.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--min-support", default="0.8", show_default=True)
@click.option("--alpha", default="0.5", show_default=True)
@click.option("--pattern-cap", type=int, default=None)
def train(manifest, out, min_support, alpha, pattern_cap):
    """Train a model from a dataset manifest and write it as JSON."""
    config = EngineConfig(min_support=min_support, alpha=alpha, pattern_cap=pattern_cap)
    dataset = load_manifest(manifest)
    model = train_model(dataset.instances, dataset.submission_map, config)
    Path(out).write_text(
        json.dumps(model.to_json_dict(), sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8")
    dropped = sum(model.dropped.values())
    click.echo(f"trained {len(model.entries)} annotations "
               f"({len(dataset.instances)} instances, {dropped} without context)",
               err=True)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--file", "source_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--line", required=True, type=int, help="1-based line number.")
@click.option("--top", default=5, show_default=True)
@click.option("--grammar", default="python", show_default=True)
def suggest(model_path, source_file, line, top, grammar):
    """Rank annotations for a line of a source file."""
    model = AnnotationModel.from_json_dict(
        json.loads(Path(model_path).read_text(encoding="utf-8")))
    source = Path(source_file).read_text(encoding="utf-8")
    adapter = adapter_for(grammar)
    tree = postprocess_identifiers(adapter.parse(source), source, adapter.identifier_kinds)
    context = extract_line_context(tree, line - 1)
    if context is None:
        click.echo("no context on this line", err=True)
        return
    for position, s in enumerate(model.rank(context, top_k=top), start=1):
        click.echo(f"{position}\t{s.annotation_id}\t"
                   f"{float(s.combined):.6f}\t{float(s.pattern_score):.6f}\t"
                   f"{float(s.unique_fraction):.6f}")


@cli.group(name="eval")
def eval_group():
    """Evaluation protocols."""


@eval_group.command(name="split")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--split", default=0.5, show_default=True, type=float)
@click.option("--min-support", default="0.8", show_default=True)
@click.option("--alpha", default="0.5", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int,
              help="Recorded in the report; splitting itself is by review order.")
@click.option("--top", default=5, show_default=True, type=int)
@click.option("--report", required=True, type=click.Path(file_okay=False))
def eval_split_cmd(manifest, split, min_support, alpha, seed, top, report):
    """Train on the first half of the submissions, test on the rest."""
    config = EngineConfig(min_support=min_support, alpha=alpha)
    dataset = load_manifest(manifest)
    result = eval_split(dataset, split=split, config=config, top_k=top, seed=seed)
    write_split_report(result, report)
    click.echo(json.dumps({
        "instances": result.summary["instances"],
        "top_1_rate": result.summary["top_1_rate"],
        f"top_{top}_rate": result.summary[f"top_{top}_rate"],
    }, sort_keys=True))


@eval_group.command(name="longitudinal")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--min-support", default="0.8", show_default=True)
@click.option("--alpha", default="0.5", show_default=True)
@click.option("--top", default=5, show_default=True, type=int)
@click.option("--window", default=10, show_default=True, type=int)
@click.option("--drop-unannotated", is_flag=True)
@click.option("--report", required=True, type=click.Path(file_okay=False))
def eval_longitudinal_cmd(manifest, min_support, alpha, top, window,
                          drop_unannotated, report):
    """Grow the training set one reviewed submission at a time."""
    config = EngineConfig(min_support=min_support, alpha=alpha)
    dataset = load_manifest(manifest)
    result = eval_longitudinal(dataset, config=config, top_k=top, window=window,
                               drop_unannotated=drop_unannotated)
    write_longitudinal_report(result, report)
    click.echo(json.dumps({
        "instances": result.summary["instances"],
        "submissions": result.summary["submissions"],
        f"top_{top}_rate": result.summary[f"top_{top}_rate"],
    }, sort_keys=True))


@cli.command()
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./sessions", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--min-support", default="0.8", show_default=True)
@click.option("--alpha", default="0.5", show_default=True)
@click.option("--rebuild-after", default=10, show_default=True, type=int,
              help="Auto-rebuild after this many new instances.")
def serve(port, host, data_dir, min_support, alpha, rebuild_after):
    """Run the live review service."""
    import uvicorn

    from .service import create_app

    config = EngineConfig(min_support=min_support, alpha=alpha)
    app = create_app(data_dir, config, rebuild_after_instances=rebuild_after)
    uvicorn.run(app, host=host, port=port)


def main():
    cli(prog_name="echo")


if __name__ == "__main__":
    main()
