"""
Experiment Context Module

Shared state of one run: the validated config, the report being filled,
calibration and localized-field memos, and the check wrapper that times a
measurement and turns library errors into failed records.
"""

import json
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from ..config_loader import LocalizeCase, RunConfig, ToleranceConfig
from ..errors import LabError
from ..fields import LocalizedField, ThetaField, make_localized
from ..measures import Calibration, CalibrationCache, TubeParams, calibrate
from ..output.report_writer import CheckRecord, Provenance, RunReport
from ..profiles import FlatModel

logger = logging.getLogger(__name__)


@dataclass
class Outcome:
    """What a check function hands back to ExperimentContext.check."""
    passed: bool
    measured: Dict[str, Any]
    expected: Dict[str, Any]
    note: str = ""


@dataclass
class ExperimentContext:
    config: RunConfig
    report: RunReport
    cache: Optional[CalibrationCache] = None
    experiment: str = ""
    _calibrations: Dict[str, Calibration] = field(default_factory=dict)
    _localized: Dict[Tuple, LocalizedField] = field(default_factory=dict)

    @property
    def threads(self) -> int:
        return self.config.performance.threads

    @property
    def tol(self) -> ToleranceConfig:
        return self.config.tolerances

    def seed_for(self, label: str) -> int:
        """Stable per-task seed derived from the run seed and a label."""
        seq = np.random.SeedSequence([self.config.seed % 2 ** 63, zlib.crc32(label.encode("utf-8"))])
        return int(seq.generate_state(1, dtype=np.uint32)[0])

    def model(self, n: Optional[int] = None, k: Optional[int] = None, m: Optional[int] = None) -> FlatModel:
        return self.config.model.build(n, k, m)

    def tube_params(self, **overrides) -> TubeParams:
        lelong = self.config.lelong
        values = dict(
            samples_per_stratum=lelong.mc_samples,
            strata=lelong.mc_strata,
            seed=self.config.seed % 2 ** 63,
            threads=self.threads,
        )
        values.update(overrides)
        return TubeParams(**values)

    def calibration(self, model: FlatModel) -> Calibration:
        key = json.dumps(model.key(), sort_keys=True)
        if key not in self._calibrations:
            self._calibrations[key] = calibrate(model, self.tube_params(), self.cache)
        return self._calibrations[key]

    def theta(self, data: Dict[str, Any], model: FlatModel) -> ThetaField:
        return ThetaField.from_json(data, model.torus_periods)

    def localized(self, case: LocalizeCase) -> LocalizedField:
        """Certified localized weight for a configured case, built once per run."""
        key = (case.n, case.k, case.m, case.nu)
        if key not in self._localized:
            cfg = self.config.localize
            model = self.model(case.n, case.k, case.m)
            radii = np.geomspace(1e-3 * model.tube_radius, 0.95 * model.tube_radius, cfg.scan_radii)
            self._localized[key] = make_localized(
                self.theta(cfg.theta, model),
                case.nu,
                case.k,
                case.m,
                model,
                c_cap=cfg.c_cap,
                scan_radii=radii,
                torus_points=cfg.torus_points,
                sphere_points=cfg.sphere_points,
                tol=self.tol.cone,
                seed=self.seed_for(f"localize-{key}"),
                threads=self.threads,
            )
        return self._localized[key]

    def check(
        self,
        name: str,
        anchor: str,
        provenance: Provenance,
        measure: Callable[[], Outcome],
        informational: bool = False,
    ) -> CheckRecord:
        """
        Run one measurement and append its record to the report.

        Library errors become failed records; anything else propagates.

        Args:
            name: Unique check name
            anchor: Short statement of the claim being checked
            provenance: Origin of the expected value
            measure: Callable producing the Outcome
            informational: Record without affecting the verdict

        Returns:
            The appended CheckRecord
        """
        logger.debug(f"🔍 {name}")
        start = time.perf_counter()
        try:
            outcome = measure()
        except LabError as e:
            outcome = Outcome(False, {}, {}, note=f"{type(e).__name__}: {e}")
            logger.warning(f"⚠️  {name}: {outcome.note}")
        record = CheckRecord(
            name=name,
            experiment=self.experiment,
            anchor=anchor,
            measured=outcome.measured,
            expected=outcome.expected,
            provenance=provenance,
            passed=bool(outcome.passed),
            runtime=time.perf_counter() - start,
            informational=informational,
            note=outcome.note,
        )
        return self.report.add(record)


def calibration_cache_path(directory: Path) -> Path:
    return Path(directory) / "calibration-cache.json"
