from __future__ import annotations

import random

import pytest

from annomine.encoding import UP
from annomine.ingest import Submission, prepare_source


def random_tree_items(rng: random.Random, max_nodes: int, alphabet) -> tuple:
    """Random full-form encoded tree with 1..max_nodes nodes."""
    target = rng.randint(1, max_nodes)
    items = [rng.choice(alphabet)]
    depth, nodes = 1, 1
    while nodes < target:
        if depth > 1 and rng.random() < 0.4:
            items.append(UP)
            depth -= 1
        else:
            items.append(rng.choice(alphabet))
            depth += 1
            nodes += 1
    items.extend([UP] * (depth - 1))
    return tuple(items)


def strip_trailing_ups(items: tuple) -> tuple:
    end = len(items)
    while end > 0 and items[end - 1] == UP:
        end -= 1
    return items[:end]


def make_submission(sub_id: str, source: str, grammar: str = "python") -> Submission:
    return Submission(id=sub_id, path=f"{sub_id}.py", source=source,
                      tree=prepare_source(source, grammar))


@pytest.fixture
def rng():
    return random.Random(20240811)
