"""Per-criterion PASS/FAIL lines for the acceptance suite."""

from __future__ import annotations

import re

import pytest

_results: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion a test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label, title = mark.args
    entry = _results.setdefault(label, {"title": title, "status": "PASS", "notes": []})
    if rep.failed:
        entry["status"] = "FAIL"
    elif rep.skipped and rep.when == "setup":
        entry["status"] = "SKIP"
    if rep.when == "call":
        entry["notes"].extend(text for name, text in item.user_properties if name == "note")


def _natural(label):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", label)]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_results, key=_natural):
        entry = _results[label]
        tr.write_line(f"{entry['status']:4}  {label:5} {entry['title']}")
        for note in entry["notes"]:
            tr.write_line(f"            {note}")
