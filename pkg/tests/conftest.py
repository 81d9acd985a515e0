import numpy as np
import pytest

from mtsc.probability import Alphabet, build_joint

ACCEPTANCE_LINES: list[str] = []


def record(line: str):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_joint(rng, names, cap=3):
    alph = [Alphabet.range(n, int(rng.integers(2, cap + 1))) for n in names]
    size = int(np.prod([a.size for a in alph]))
    return build_joint(alph, rng.dirichlet(np.ones(size)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
