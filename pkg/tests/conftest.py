import numpy as np
import pytest


def angular_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b) + np.pi, 2 * np.pi) - np.pi
    return np.abs(d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one verdict per acceptance criterion for the terminal summary."""
    book = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(number, title, passed, detail=""):
        book[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    book = config.stash.get(_ACCEPTANCE_KEY, {})
    if not book:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(book):
        title, passed, detail = book[number]
        line = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
