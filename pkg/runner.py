"""
Runs the checks of a parsed check file and collects a report.
"""

import fnmatch
import json
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, List, Optional, Tuple

from check_ops import OPERATIONS, CheckContext, describe, difference, expected_value, residuals
from checkfile import CheckFile, CheckSpec
from errors import DensopsError, error_matches
from symexpr import DEFAULT_ZERO_SAMPLES, Expr, ZeroStatus, set_default_seed

logger = logging.getLogger(__name__)

PASS = "pass"
PROBABLY_PASS = "probably-pass"
FAIL = "fail"
ERROR = "error"


@dataclass
class CheckResult:
    name: str
    op: str
    status: str
    elapsed: float
    line: int
    seed: int
    detail: str = ""
    counterexample: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status in (PASS, PROBABLY_PASS)


@dataclass
class Report:
    path: str
    seed: int
    results: List[CheckResult] = field(default_factory=list)

    def counts(self) -> dict:
        counts = {PASS: 0, PROBABLY_PASS: 0, FAIL: 0, ERROR: 0}
        for result in self.results:
            counts[result.status] += 1
        return counts

    @property
    def exit_code(self) -> int:
        return 0 if all(r.passed for r in self.results) else 1

    def summary(self) -> str:
        counts = self.counts()
        return (
            f"{len(self.results)} checks: {counts[PASS]} passed, {counts[PROBABLY_PASS]} probably passed, "
            f"{counts[FAIL]} failed, {counts[ERROR]} errors"
        )


def _statuses(result, seed: int, samples: int) -> Iterator[Tuple[str, Expr, ZeroStatus]]:
    for label, e in residuals(result):
        yield label, e, e.zero_status(seed=seed, samples=samples)


def _first_nonzero(result, seed: int, samples: int) -> Tuple[ZeroStatus, Optional[str]]:
    """Combined status of every residual, with the first nonzero one rendered."""
    overall = ZeroStatus.ZERO
    for label, e, status in _statuses(result, seed, samples):
        if status is ZeroStatus.NONZERO:
            return status, f"{label}: {e.to_text()}" if label else e.to_text()
        if status is ZeroStatus.PROBABLY_ZERO:
            overall = status
    return overall, None


def _verdict(check: CheckSpec, result, ctx: CheckContext, seed: int, samples: int) -> Tuple[str, str, Optional[str]]:
    if check.expect == "error":
        return FAIL, f"expected error {check.error or ''}".strip() + ", got a result", describe(result)
    if check.expect == "equal":
        result = difference(result, expected_value(ctx, result))
    status, counterexample = _first_nonzero(result, seed, samples)
    if check.expect == "nonzero":
        if status is ZeroStatus.NONZERO:
            return PASS, "nonzero", None
        return FAIL, "expected nonzero, got zero", None
    if status is ZeroStatus.ZERO:
        return PASS, "zero", None
    if status is ZeroStatus.PROBABLY_ZERO:
        return PROBABLY_PASS, f"zero at {samples} random points", None
    return FAIL, "nonzero residual", counterexample


def run_check(check_file: CheckFile, check: CheckSpec, seed: int, samples: int = DEFAULT_ZERO_SAMPLES) -> CheckResult:
    """Evaluate one check; a check never raises, failures land in the result."""
    args = dict(check.args)
    if check.value is not None:
        args["value"] = check.value
    ctx = CheckContext(check_file.namespace, args, random.Random(f"{seed}:{check.name}"), seed)
    started = time.perf_counter()
    try:
        outcome = OPERATIONS[check.op].func(ctx)
    except Exception as error:
        elapsed = time.perf_counter() - started
        if check.expect == "error":
            if error_matches(error, check.error or ""):
                return CheckResult(check.name, check.op, PASS, elapsed, check.line, seed, f"raised {type(error).__name__}")
            return CheckResult(
                check.name, check.op, FAIL, elapsed, check.line, seed,
                f"expected error {check.error}, got {type(error).__name__}: {error}",
            )
        if isinstance(error, DensopsError):
            logger.warning("Check %s raised %s: %s", check.name, type(error).__name__, error)
        else:
            logger.error("Check %s crashed", check.name, exc_info=True)
        return CheckResult(check.name, check.op, ERROR, elapsed, check.line, seed, f"{type(error).__name__}: {error}")
    try:
        status, detail, counterexample = _verdict(check, outcome, ctx, seed, samples)
    except DensopsError as error:
        status, detail, counterexample = ERROR, f"{type(error).__name__}: {error}", None
    elapsed = time.perf_counter() - started
    logger.debug("Check %s: %s in %.3fs", check.name, status, elapsed)
    return CheckResult(check.name, check.op, status, elapsed, check.line, seed, detail, counterexample)


def run_checkfile(
    check_file: CheckFile,
    seed: int = 0,
    jobs: int = 1,
    pattern: Optional[str] = None,
    samples: int = DEFAULT_ZERO_SAMPLES,
) -> Report:
    """Run every check (optionally those whose name matches `pattern`) in file order."""
    set_default_seed(seed)
    checks = [c for c in check_file.checks if pattern is None or fnmatch.fnmatch(c.name, pattern)]
    logger.info("Running %d checks from %s with seed %d", len(checks), check_file.path, seed)
    report = Report(check_file.path, seed)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            report.results = list(pool.map(lambda c: run_check(check_file, c, seed, samples), checks))
    else:
        report.results = [run_check(check_file, c, seed, samples) for c in checks]
    logger.info(report.summary())
    return report


# -- output -----------------------------------------------------------------------------------

def format_text(report: Report) -> str:
    lines = []
    for r in report.results:
        line = f"{r.status.upper():<14} {r.name:<32} {r.op:<22} {r.elapsed:7.3f}s  {r.detail}"
        lines.append(line.rstrip())
        if r.counterexample:
            lines.append(f"{'':<14} counterexample: {r.counterexample}")
    lines.append(report.summary())
    return "\n".join(lines)


def format_json_lines(report: Report) -> str:
    records = [json.dumps(dict(asdict(r), elapsed=round(r.elapsed, 6))) for r in report.results]
    records.append(json.dumps({
        "summary": report.counts(),
        "path": report.path,
        "seed": report.seed,
        "exit_code": report.exit_code,
    }))
    return "\n".join(records)


FORMATS = {"text": format_text, "json-lines": format_json_lines}
