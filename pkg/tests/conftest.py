import pytest

from pbcmdp.domains import blocks_world, simple


@pytest.fixture(scope="session")
def D_simple():
    return simple()


@pytest.fixture(scope="session")
def blocks1():
    return blocks_world(1)


@pytest.fixture(scope="session")
def blocks2():
    return blocks_world(2)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
