import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oambell.hilbert import AnalyzerSpec, SpectrumModel  # noqa: E402


@pytest.fixture
def paper_spec():
    return AnalyzerSpec.paper()


@pytest.fixture
def ideal(paper_spec):
    return SpectrumModel.paper_ideal(paper_spec.support)


@pytest.fixture
def flat(paper_spec):
    return SpectrumModel.normalized_flat(paper_spec.support)


@pytest.fixture
def alpha1():
    return AnalyzerSpec.single(1)


@pytest.fixture
def ideal1():
    return SpectrumModel.paper_ideal([1])


TAU = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(module.RESULTS.items()):
        terminalreporter.write_line(line)
