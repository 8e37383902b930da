import numpy as np
import pytest

from persuasion_oracle import BPInstance, PartitionQuery

FIG3_PS = (0.5, 0.4, 0.3, 0.2, 0.1)
FIG3_PRIOR = (0.2, 0.01, 0.39, 0.2, 0.2)

# filled by tests/test_acceptance.py, printed once at the end of the session
ACCEPTANCE = {}


@pytest.fixture
def fig3():
    return BPInstance.binary(FIG3_PS, FIG3_PRIOR)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_partition(rng, T):
    """Random partition of ``range(T)`` into at least two cells when ``T > 1``."""
    while True:
        labels = rng.integers(0, max(2, T // 2 + 1), T)
        if T == 1 or len(set(labels.tolist())) > 1:
            break
    cells = {}
    for t, lab in enumerate(labels.tolist()):
        cells.setdefault(lab, []).append(t)
    return PartitionQuery(tuple(tuple(c) for c in cells.values()))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
