import pytest


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile (or load cached) numba kernels once so timed tests measure
    # algorithm time, not JIT time
    from bibridge.louvain import warm_up

    warm_up()


def pytest_configure(config):
    # filled by the verdict() helper in test_acceptance.py; echoed below so
    # the per-criterion lines survive pytest's output capture
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
