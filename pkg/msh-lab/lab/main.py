"""
Main Experiment Runner Module

This is the central orchestrator: it runs the selected experiment phases,
collects their check records into a run report and writes the report into
a directory named by the configuration hash.
"""

import logging
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn

from .config_loader import RunConfig, canonical_dump, config_hash
from .exit_handler import ExitCode
from .experiments import ExperimentContext, phases, runner_for
from .experiments.context import calibration_cache_path
from .measures import CalibrationCache
from .output.report_writer import ReportWriter, RunReport

logger = logging.getLogger(__name__)


class ExperimentRunner:
    """
    Runs one experiment (or the full suite) and writes its report.
    """

    def __init__(self, config: RunConfig, console: Optional[Console] = None):
        """
        Initialize the experiment runner.

        Args:
            config: Validated run configuration
            console: Rich console for progress and summary output
        """
        self.config = config
        self.console = console or Console()
        self.config_hash = config_hash(config)
        self.run_dir = Path(config.output.directory) / self.config_hash[:12]
        self.writer = ReportWriter(self.run_dir, config.output.format, self.console)
        self.report = RunReport(config.experiment, self.config_hash, config.seed)
        cache = CalibrationCache(calibration_cache_path(Path(config.output.directory)))
        self.context = ExperimentContext(config, self.report, cache)
        logger.debug(f"Initialized runner for {config.experiment} ({self.config_hash[:12]})")

    def run(self) -> RunReport:
        """
        Execute every phase of the configured experiment.

        Returns:
            The filled run report (not yet written)
        """
        logger.info(f"🚀 Starting {self.config.experiment} (seed {self.config.seed})")
        names: List[str] = phases(self.config.experiment)

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=self.console,
            transient=True,
        ) as progress:
            for name in names:
                task = progress.add_task(f"Running {name}...", total=None)
                self.context.experiment = name
                runner_for(name)(self.context)
                progress.update(task, completed=True)

        counts = self.report.summary()
        logger.info(f"📋 {counts['total']} checks, {counts['failed']} failed")
        return self.report

    def write(self) -> List[Path]:
        """Write the report, the effective config and artifacts into the run directory."""
        return self.writer.write(self.report, canonical_dump(self.config))

    def exit_code(self) -> ExitCode:
        return ExitCode.SUCCESS if self.report.passed else ExitCode.CHECKS_FAILED

    def display_summary(self) -> None:
        self.writer.display_summary(self.report)
        self.console.print(f"Report directory: {self.run_dir}")
