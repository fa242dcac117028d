"""Collects one verdict per acceptance criterion and prints them after the run."""
import pytest

_VERDICTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    notes = [v for k, v in item.user_properties if k == "note"]
    prev = _VERDICTS.get(number)
    if prev is None or rep.failed:
        _VERDICTS[number] = (title, rep.passed, call.duration, notes)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_VERDICTS):
        title, ok, secs, notes = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.1f} s)")
        for note in notes:
            terminalreporter.write_line(f"    {note}")
