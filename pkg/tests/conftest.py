from __future__ import annotations

import os

import pytest
from hypothesis import settings

from semtree.synthetic import balanced_tree
from semtree.tree import Corpus, Document, TreeBuilder

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def small_tree():
    """root -> 3 topics -> 3 leaves each (docs d0000000..d0000008)."""
    return balanced_tree([3, 3])


@pytest.fixture
def tiny_corpus():
    return Corpus(
        [
            Document("a", "apples and pears", "s1", 0),
            Document("b", "pears and plums", "s1", 1),
            Document("c", "engines and gears", "s2", 0),
        ]
    )


def hand_tree():
    """Two-level tree built by hand: r -> {x -> [a, b], y -> [c]}."""
    b = TreeBuilder(4)
    la = b.add_leaf(Document("a", "apples"))
    lb = b.add_leaf(Document("b", "pears"))
    lc = b.add_leaf(Document("c", "engines"))
    x = b.add_internal("fruit", [la, lb])
    y = b.add_internal("machines", [lc])
    r = b.add_internal("", [x, y])
    return b.build(r)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = [test_acceptance.VERDICTS[k] for k in sorted(test_acceptance.VERDICTS)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
