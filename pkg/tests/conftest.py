import pytest

from compassbell.synthesis import reproduce_cos

_VERDICTS = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def default_cos_report():
    """Default cos-law synthesis (N=8, x in [0.2290, 0.2293]); takes ~1 min."""
    return reproduce_cos()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary, then assert."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def check(n, name, ok, detail):
        line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {name}: {detail}"
        lines.append(line)
        print(line)
        assert ok, detail

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
