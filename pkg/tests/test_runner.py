import json
import os

import pytest

from checkfile import load_checkfile, parse_checkfile
from runner import ERROR, FAIL, PASS, format_json_lines, format_text, run_checkfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SUITE = """\
chart L even=x
operator Lam0 chart=L terms="dx^2 + x*dx" lam=0
check zero-ok expr expr="x - x" chart=L
check nonzero-ok expr expr="x" chart=L expect=nonzero
check equal-ok schwarzian x="y^3" expect=equal value="-4/y^2"
check error-ok pencil_through op=Lam0 expect=error error=lambda=0
check zero-bad expr expr="x + 1" chart=L
check nonzero-bad expr expr="0" chart=L expect=nonzero
check error-bad pencil_through op=Lam0 expect=error error=mu=1
check no-error expr expr="x - x" chart=L expect=error
check crash schwarzian x="2"
"""


@pytest.fixture
def parsed():
    return parse_checkfile(SUITE, "suite.check")


def test_statuses(parsed):
    report = run_checkfile(parsed, seed=1)
    statuses = {r.name: r.status for r in report.results}
    assert statuses == {
        "zero-ok": PASS,
        "nonzero-ok": PASS,
        "equal-ok": PASS,
        "error-ok": PASS,
        "zero-bad": FAIL,
        "nonzero-bad": FAIL,
        "error-bad": FAIL,
        "no-error": FAIL,
        "crash": ERROR,
    }
    assert report.exit_code == 1
    assert report.counts() == {"pass": 4, "probably-pass": 0, "fail": 4, "error": 1}


def test_failure_carries_counterexample(parsed):
    report = run_checkfile(parsed, seed=1, pattern="zero-bad")
    (result,) = report.results
    assert "x" in result.counterexample
    assert result.line == 7


def test_filter(parsed):
    report = run_checkfile(parsed, seed=1, pattern="*-ok")
    assert [r.name for r in report.results] == ["zero-ok", "nonzero-ok", "equal-ok", "error-ok"]
    assert report.exit_code == 0


def test_parallel_run_keeps_file_order(parsed):
    serial = run_checkfile(parsed, seed=3)
    parallel = run_checkfile(parsed, seed=3, jobs=4)
    assert [(r.name, r.status) for r in parallel.results] == [(r.name, r.status) for r in serial.results]


def test_json_lines(parsed):
    report = run_checkfile(parsed, seed=5, pattern="*-ok")
    records = [json.loads(line) for line in format_json_lines(report).splitlines()]
    assert len(records) == 5
    assert records[0]["name"] == "zero-ok"
    assert records[0]["status"] == "pass"
    assert records[0]["seed"] == 5
    assert records[-1]["summary"]["pass"] == 4
    assert records[-1]["exit_code"] == 0
    assert records[-1]["path"] == "suite.check"


def test_text_format(parsed):
    report = run_checkfile(parsed, seed=1, pattern="crash")
    text = format_text(report)
    assert text.splitlines()[0].startswith("ERROR")
    assert text.splitlines()[-1] == report.summary()


def test_sampled_checks_are_reproducible():
    text = "chart L even=x\ncheck adj sample-adjoint chart=L count=5\n"
    first = run_checkfile(parse_checkfile(text), seed=11).results[0]
    second = run_checkfile(parse_checkfile(text), seed=11).results[0]
    assert first.passed
    assert (first.status, first.detail) == (second.status, second.detail)


@pytest.mark.slow
def test_bundled_suite_passes():
    report = run_checkfile(load_checkfile(os.path.join(ROOT, "paper-suite.check")), seed=1)
    failed = [(r.name, r.detail) for r in report.results if not r.passed]
    assert failed == []
    assert report.exit_code == 0
