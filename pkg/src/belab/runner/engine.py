"""Run engine: execute the checks of a scenario and write reports plus the run manifest."""

from __future__ import annotations

import json
import logging
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from rich.progress import track

from belab.config import MANIFEST_NAME
from belab.runner.scenarios import Check, RunContext, get_check
from belab.runner.settings import RunConfig
from belab.validation.ladder import recheck_at_double_resolution
from belab.validation.report import VerificationReport

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Reports of one run in check order, and where they were written."""
    config: RunConfig
    seed: int
    out_dir: Path
    reports: list[VerificationReport] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / MANIFEST_NAME

    def to_dict(self) -> dict:
        return {
            "source": self.config.source,
            "scenario": self.config.scenario,
            "manifold": self.config.manifold,
            "seed": self.seed,
            "passed": self.passed,
            "reports": [
                {"file": path.name, "check_name": report.check_name, "passed": report.passed}
                for path, report in zip(self.files, self.reports)
            ],
        }


def execute_check(check: Check, ctx: RunContext) -> list[VerificationReport]:
    """Run one check; a mesh check also gets its double-resolution recheck when requested."""
    log.debug("running %s", check.name)
    reports = check.run(ctx)
    if check.uses_mesh and ctx.config.resolution.double_check:
        def at(spacing: float) -> VerificationReport:
            return check.run(ctx.at_spacing(spacing))[0]

        reports.append(recheck_at_double_resolution(at, ctx.spacing))
    return reports


class ReportCollector:
    """The only writer of the output directory; files are numbered in check order."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.reports: list[VerificationReport] = []
        self.files: list[Path] = []

    def add(self, report: VerificationReport) -> Path:
        path = self.out_dir / f"{len(self.files) + 1:02d}-{report.check_name}.json"
        path.write_text(report.to_json() + "\n")
        self.reports.append(report)
        self.files.append(path)
        return path

    def write_manifest(self, result: RunResult) -> Path:
        manifest = result.to_dict()
        manifest["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        path = self.out_dir / MANIFEST_NAME
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def run_checks(config: RunConfig, seed: int, jobs: int = 1, out_dir: Path | None = None,
               show_progress: bool = True) -> RunResult:
    """Run every check of ``config.scenario`` on up to ``jobs`` threads.

    Reports reach the collector in check order whatever order the threads finish in. The
    first exception, in check order, propagates once all submitted checks have settled.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    out_dir = Path(out_dir or config.output_dir)
    ctx = RunContext.from_config(config, seed)
    checks = [get_check(name) for name in config.checks]
    log.info("%s on %s: %d checks, seed %d, %d jobs", config.scenario, ctx.manifold.name, len(checks), seed, jobs)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures: list[Future] = [pool.submit(execute_check, check, ctx) for check in checks]
        waiting = track(futures, description="Checks", disable=not show_progress)
        outcomes = []
        for future in waiting:
            try:
                outcomes.append(future.result())
            except Exception as exc:
                outcomes.append(exc)

    for outcome in outcomes:
        if isinstance(outcome, Exception):
            raise outcome

    collector = ReportCollector(out_dir)
    for reports in outcomes:
        for report in reports:
            collector.add(report)
    result = RunResult(config=config, seed=seed, out_dir=out_dir, reports=collector.reports, files=collector.files)
    collector.write_manifest(result)
    log.info("wrote %d reports to %s", len(result.reports), out_dir)
    return result
