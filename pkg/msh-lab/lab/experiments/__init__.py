"""
Experiments Package

One runner per subcommand; full-suite runs all of them followed by the
infrastructure checks.
"""

from typing import Callable, Dict, List

from .context import ExperimentContext, Outcome
from .lelong_checks import run_lelong
from .singularity_checks import run_compare, run_localize, run_reltype, run_siu
from .weight_checks import run_expansion, run_infrastructure, run_minimal, run_verify_weights

Runner = Callable[[ExperimentContext], None]

EXPERIMENT_RUNNERS: Dict[str, Runner] = {
    "verify-weights": run_verify_weights,
    "expansion": run_expansion,
    "minimal": run_minimal,
    "lelong": run_lelong,
    "reltype": run_reltype,
    "localize": run_localize,
    "compare": run_compare,
    "siu": run_siu,
}

FULL_SUITE: List[str] = list(EXPERIMENT_RUNNERS) + ["infrastructure"]


def phases(experiment: str) -> List[str]:
    """Names of the runner phases for an experiment."""
    if experiment == "full-suite":
        return FULL_SUITE
    if experiment not in EXPERIMENT_RUNNERS:
        raise KeyError(f"unknown experiment {experiment!r}")
    return [experiment]


def runner_for(phase: str) -> Runner:
    if phase == "infrastructure":
        return run_infrastructure
    return EXPERIMENT_RUNNERS[phase]


__all__ = ["ExperimentContext", "Outcome", "EXPERIMENT_RUNNERS", "FULL_SUITE", "phases", "runner_for"]
