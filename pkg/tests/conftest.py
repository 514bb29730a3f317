import pytest

from semidirect.construction import PointOracle
from semidirect.flows import squarefree_flow
from semidirect.groups import heisenberg


@pytest.fixture(scope="session")
def H():
    return heisenberg()


@pytest.fixture(scope="session")
def flow(H):
    return squarefree_flow(H, 3)


@pytest.fixture(scope="session")
def oracle(flow):
    return PointOracle.for_flow(flow)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, secs, limit, note in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num:>2} {status}  {secs:7.2f}s (limit {limit}s)  {title}"
        if note:
            line += f"  [{note}]"
        terminalreporter.write_line(line)
