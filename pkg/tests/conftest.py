import pytest

_ACCEPTANCE = []


def _record(num, label, passed):
    _ACCEPTANCE.append((int(num), str(label), bool(passed)))


@pytest.fixture
def acceptance():
    """Record a criterion verdict; the terminal summary prints one line
    per criterion after the run."""

    def check(num, label, passed):
        _record(num, label, passed)
        assert passed, "criterion %d failed: %s" % (num, label)

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, label, passed in sorted(_ACCEPTANCE):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line("ACCEPTANCE %2d: %s  (%s)" % (num, verdict, label))
