"""Deterministic synthetic review corpus with planted per-annotation motifs.

Every annotation owns a motif: a one-line statement built around identifiers
used by no other annotation. Instances of the annotation place that motif
(with varied operands) on a known line of a submission, so a correct engine
should rank the right annotation at the top for those lines. Filler lines
draw from a shared vocabulary and carry no annotation-specific signal.
"""
from __future__ import annotations

import json
import random
from pathlib import Path

FILLERS = [
    "t = len(data)",
    "buf = []",
    "buf.append(t)",
    "t = t + 1",
    "data = list(data)",
    "u = max(t, 2)",
    "t, u = u, t",
    "buf.extend(data)",
]

GENERIC_VARS = ["v0", "v1", "v2", "v3", "v4", "v5"]


def motif_line(annotation: int, rng: random.Random) -> str:
    """One statement carrying annotation-unique identifiers, varied operands."""
    var = rng.choice(GENERIC_VARS)
    var2 = rng.choice(GENERIC_VARS)
    k = rng.randint(0, 9)
    shape = annotation % 8
    if shape == 0:
        return f"acc_{annotation} = fold_{annotation}({var}, {k})"
    if shape == 1:
        return f"{var} = scan_{annotation}[{k}] + gain_{annotation}"
    if shape == 2:
        return f"emit_{annotation}({var}, mask_{annotation} % {k + 1})"
    if shape == 3:
        return f"{var} = [chunk_{annotation}({var2}) for {var2} in {var}]"
    if shape == 4:
        return f"total_{annotation} += rate_{annotation} * {var}"
    if shape == 5:
        return f"{var} = sep_{annotation}.join({var2})"
    if shape == 6:
        return f"assert check_{annotation}({var}), msg_{annotation}"
    return f"{var} = next_{annotation}(iter_{annotation}, {k})"


def generate_corpus(seed: int, n_submissions: int = 200, n_annotations: int = 40,
                    target_instances: int = 400, early_window: int = 25):
    """Return (manifest_dict, sources_dict). Same seed, same corpus."""
    rng = random.Random(seed)
    plan: dict[int, list[int]] = {i: [] for i in range(n_submissions)}
    for annotation in range(n_annotations):
        plan[rng.randrange(min(early_window, n_submissions))].append(annotation)
    for _ in range(max(0, target_instances - n_annotations)):
        plan[rng.randrange(n_submissions)].append(rng.randrange(n_annotations))

    sources: dict[str, str] = {}
    submissions = []
    instances = []
    for i in range(n_submissions):
        sub_id = f"sub{i:03d}"
        body: list[tuple[str, int | None]] = [
            (rng.choice(FILLERS), None) for _ in range(rng.randint(3, 6))
        ]
        for annotation in plan[i]:
            body.insert(rng.randint(0, len(body)), (motif_line(annotation, rng), annotation))
        lines = [f"def solve_{i}(data):"]
        for text, annotation in body:
            lines.append("    " + text)
            if annotation is not None:
                instances.append({
                    "annotation": f"ann{annotation:02d}",
                    "submission": sub_id,
                    "line": len(lines),  # 1-based
                })
        lines.append("    return data")
        sources[sub_id] = "\n".join(lines) + "\n"
        submissions.append({"id": sub_id, "path": f"{sub_id}.py"})

    manifest = {
        "exercise": f"synthetic-{seed}",
        "grammar": "python",
        "submissions": submissions,
        "annotations": [
            {"id": f"ann{a:02d}", "text": f"planted feedback {a}"}
            for a in range(n_annotations)
        ],
        "instances": instances,
    }
    return manifest, sources


def write_corpus(outdir: Path, seed: int, **kwargs) -> Path:
    """Write sources + manifest.json under outdir; returns the manifest path."""
    manifest, sources = generate_corpus(seed, **kwargs)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for sub in manifest["submissions"]:
        (outdir / sub["path"]).write_text(sources[sub["id"]], encoding="utf-8")
    manifest_path = outdir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path
