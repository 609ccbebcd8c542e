from __future__ import annotations

import pytest

from weaklin import corpus
from weaklin.globalize import GlobSeed, glob_program


@pytest.fixture(scope="session")
def entries():
    return {e.name: e for e in corpus.load_all()}


@pytest.fixture(scope="session")
def seeded_globalizations(entries):
    """Seeded global searches are slow for fib5, so run each one once."""
    cache = {}

    def get(name):
        if name not in cache:
            e = entries[name]
            cache[name] = glob_program(e.program, seed=GlobSeed(env=e.seed))
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
