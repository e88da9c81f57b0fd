import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=15)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import contextlib

import pytest

_ACCEPTANCE = {}


class _Record:
    def __init__(self):
        self.details = []

    def note(self, text):
        self.details.append(text)


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion as PASS or FAIL."""
    @contextlib.contextmanager
    def run(number, title):
        rec = _Record()
        try:
            yield rec
        except BaseException:
            _ACCEPTANCE[number] = ("FAIL", title, rec.details)
            raise
        _ACCEPTANCE[number] = ("PASS", title, rec.details)
    return run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, details = _ACCEPTANCE[number]
        extra = f" ({'; '.join(details)})" if details else ""
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}{extra}")
