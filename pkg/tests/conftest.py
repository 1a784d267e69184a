import sys
from pathlib import Path

import pytest

from policylens.vocab import ConceptHierarchy, ConceptNode, load_default_vocabulary

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"

sys.path.insert(0, str(TESTS))


@pytest.fixture(scope="session")
def vocab():
    return load_default_vocabulary()


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN


def hierarchy_from_dag(dag):
    return ConceptHierarchy(ConceptNode(k, k, frozenset(v)) for k, v in dag.items())


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
