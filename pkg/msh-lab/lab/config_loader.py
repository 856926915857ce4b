"""
Configuration Loader Module

Handles loading and merging run configuration from:
1. Configuration file (JSON, or YAML)
2. Environment variables (MSH_LAB_*)
3. CLI arguments (applied by the CLI on the loaded object)
"""

import hashlib
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .profiles import FlatModel

logger = logging.getLogger(__name__)

# Load environment variables from .env file if it exists
load_dotenv()

EXPERIMENTS = (
    "verify-weights",
    "expansion",
    "lelong",
    "reltype",
    "localize",
    "siu",
    "compare",
    "minimal",
    "full-suite",
)
ExperimentName = Literal[
    "verify-weights", "expansion", "lelong", "reltype", "localize",
    "siu", "compare", "minimal", "full-suite",
]

DEFAULT_SEED = 20240601
DEFAULT_THETA = {
    "offset": 1.0,
    "terms": [{"frequencies": [1, 0], "amplitude": 1.0}],
    "normalize": True,
}
WEIGHT_TUPLES = [(2, 1, 3.0), (3, 1, 5.0), (2, 2, 2.0), (3, 2, 2.0), (4, 3, 2.0)]


class Section(BaseModel):
    """Base for config sections: unknown keys are errors."""
    model_config = ConfigDict(extra="forbid")


class ModelConfig(Section):
    """Flat model geometry shared by every experiment."""
    n: int = Field(default=3, ge=1, description="Total complex dimension")
    k: int = Field(default=2, ge=1, description="Codimension of V")
    m: int = Field(default=2, ge=1, description="Hessian order")
    tube_radius: float = Field(default=0.5, gt=0, lt=1, description="Tube radius s_V")
    torus_period: float = Field(default=2 * math.pi, gt=0, description="Period of every torus direction")
    torus_periods: Optional[List[float]] = Field(default=None, description="Explicit periods (n-k values)")
    exhaustion_shift: Optional[float] = Field(default=None, description="Shift of rho (default tube_radius^2)")

    @model_validator(mode="after")
    def check_dimensions(self) -> "ModelConfig":
        if self.k > self.n or self.m > self.n:
            raise ValueError(f"need k <= n and m <= n, got n={self.n}, k={self.k}, m={self.m}")
        if self.torus_periods is not None:
            if len(self.torus_periods) != self.n - self.k:
                raise ValueError(f"torus_periods needs {self.n - self.k} entries")
            if any(p <= 0 for p in self.torus_periods):
                raise ValueError("torus periods must be positive")
        return self

    def build(self, n: Optional[int] = None, k: Optional[int] = None, m: Optional[int] = None) -> FlatModel:
        """FlatModel with this geometry, optionally for other dimensions."""
        n = self.n if n is None else n
        k = self.k if k is None else k
        m = self.m if m is None else m
        periods = self.torus_periods if (n, k) == (self.n, self.k) and self.torus_periods else None
        if periods is None:
            periods = [self.torus_period] * (n - k)
        return FlatModel(n, k, m, self.tube_radius, tuple(periods), self.exhaustion_shift)


class WeightsConfig(Section):
    """Sub/superweight certification and maximal-profile checks."""
    tuples: List[Tuple[int, int, float]] = Field(default=WEIGHT_TUPLES, description="(k, m, delta) tuples")
    per_decade: int = Field(default=64, ge=4)
    decades: int = Field(default=3, ge=1)
    epsilons: List[float] = Field(default=[1e-2, 1e-3, 1e-4], description="Regularizations for monotonicity")
    maximal_pairs: List[Tuple[int, int]] = Field(default=[(2, 1), (3, 1), (2, 2), (3, 2), (4, 3)])
    maximal_points: int = Field(default=50, ge=2)
    maximal_a: float = Field(default=2.0, ge=0)
    maximal_b: float = Field(default=-5.0)
    ode_span: float = Field(default=100.0, gt=1)

    @field_validator("tuples")
    @classmethod
    def check_tuples(cls, v):
        for k, m, delta in v:
            if not 1 <= m <= k:
                raise ValueError(f"weight tuple needs 1 <= m <= k, got ({k}, {m}, {delta})")
        return v

    @field_validator("epsilons")
    @classmethod
    def check_epsilons(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("regularizations must be positive")
        return v


class ExpansionConfig(Section):
    tuples: List[Tuple[int, int, float]] = Field(default=WEIGHT_TUPLES)
    epsilons: List[float] = Field(default=[0.0, 1e-4])
    signs: List[int] = Field(default=[1, -1])
    r_min: float = Field(default=0.02, gt=0)
    r_max: float = Field(default=0.4, gt=0)
    points: int = Field(default=48, ge=4)

    @field_validator("signs")
    @classmethod
    def check_signs(cls, v):
        if any(s not in (1, -1) for s in v):
            raise ValueError("perturbation signs must be +1 or -1")
        return v


class LelongConfig(Section):
    gammas: List[float] = Field(default=[0.5, 1.0, 2.0])
    s_count: int = Field(default=10, ge=6)
    extra_models: List[Tuple[int, int, int]] = Field(default=[(3, 2, 1)], description="(n, k, m) models")
    mc_samples: int = Field(default=4096, ge=16)
    mc_strata: int = Field(default=8, ge=1)

    @field_validator("gammas")
    @classmethod
    def check_gammas(cls, v):
        if any(g <= 0 for g in v):
            raise ValueError("multipliers must be positive")
        return v


class RelativeTypeConfig(Section):
    gammas: List[float] = Field(default=[0.5, 1.0, 2.0])
    levels: int = Field(default=12, ge=6)
    torus_per_dim: int = Field(default=32, ge=1)
    sphere_points: int = Field(default=32, ge=1)
    affine_scale: float = Field(default=2.0, gt=0)
    affine_shift: float = Field(default=3.0)


class LocalizeCase(Section):
    n: int = Field(default=3, ge=2)
    k: int = Field(default=2, ge=1)
    m: int = Field(default=1, ge=1)
    nu: float = Field(default=1.5)


class LocalizeConfig(Section):
    cases: List[LocalizeCase] = Field(
        default_factory=lambda: [LocalizeCase(n=3, k=2, m=1, nu=1.5), LocalizeCase(n=3, k=2, m=2, nu=0.75)]
    )
    theta: Dict[str, Any] = Field(default_factory=lambda: dict(DEFAULT_THETA))
    c_cap: float = Field(default=2.0 ** 20, gt=1)
    scan_radii: int = Field(default=20, ge=2)
    torus_points: int = Field(default=16, ge=1)
    sphere_points: int = Field(default=16, ge=1)
    probes: int = Field(default=8, ge=1)
    min_relation_per_dim: int = Field(default=16, ge=1)
    s_count: int = Field(default=10, ge=6)
    explore_nu: bool = Field(default=True, description="Probe nu below the admissible range")
    explore_offset: float = Field(default=0.1, gt=0)
    explore_c_cap: float = Field(default=2.0 ** 10, gt=1)


class SiuConfig(Section):
    n: int = Field(default=2, ge=2)
    k: int = Field(default=1, ge=1)
    m: int = Field(default=2, ge=2)
    gamma: float = Field(default=1.5, gt=0)
    falsifier_theta: Dict[str, Any] = Field(
        default_factory=lambda: {"offset": 1.0, "terms": [{"frequencies": [1, 0], "amplitude": 0.5}]}
    )
    clamp_floor: float = Field(default=-10.0)
    per_dim: int = Field(default=16, ge=1)

    @model_validator(mode="after")
    def check_codimension(self) -> "SiuConfig":
        if self.k >= self.m or self.m > self.n:
            raise ValueError(f"constancy scans need k < m <= n, got n={self.n}, k={self.k}, m={self.m}")
        return self


class MinimalConfig(Section):
    kappas: List[int] = Field(default=[3, 4])
    points: int = Field(default=20, ge=1)
    r_min: float = Field(default=0.05, gt=0)
    r_max: float = Field(default=0.5, gt=0)

    @field_validator("kappas")
    @classmethod
    def check_kappas(cls, v):
        if any(kappa < 3 for kappa in v):
            raise ValueError("real codimension must be >= 3")
        return v


class ToleranceConfig(Section):
    """Acceptance tolerances; all strictly positive."""
    cone: float = Field(default=1e-9, gt=0)
    sigma_m: float = Field(default=1e-10, gt=0)
    exponent: float = Field(default=0.02, gt=0, description="Relative tolerance on fitted exponents")
    coefficient: float = Field(default=0.05, gt=0)
    ode: float = Field(default=1e-8, gt=0)
    lelong: float = Field(default=0.02, gt=0)
    localized: float = Field(default=0.05, gt=0)
    bounded: float = Field(default=0.01, gt=0)
    reltype: float = Field(default=0.02, gt=0)
    probe: float = Field(default=0.01, gt=0)
    siu: float = Field(default=0.03, gt=0)
    minimal: float = Field(default=1e-8, gt=0)
    minors: float = Field(default=1e-10, gt=0)
    mc_sigmas: float = Field(default=3.0, gt=0)


class OutputConfig(Section):
    directory: str = Field(default="msh-lab-runs", description="Root directory of run reports")
    format: Literal["csv", "json", "both"] = Field(default="both")


class PerformanceConfig(Section):
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    chunk: int = Field(default=256, ge=1)


class RunConfig(Section):
    """Main configuration object."""
    experiment: ExperimentName = Field(default="full-suite")
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2 ** 64)
    verbosity: int = Field(default=1, ge=0, le=3)
    model: ModelConfig = Field(default_factory=ModelConfig)
    weights: WeightsConfig = Field(default_factory=WeightsConfig)
    expansion: ExpansionConfig = Field(default_factory=ExpansionConfig)
    lelong: LelongConfig = Field(default_factory=LelongConfig)
    reltype: RelativeTypeConfig = Field(default_factory=RelativeTypeConfig)
    localize: LocalizeConfig = Field(default_factory=LocalizeConfig)
    siu: SiuConfig = Field(default_factory=SiuConfig)
    minimal: MinimalConfig = Field(default_factory=MinimalConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    performance: PerformanceConfig = Field(default_factory=PerformanceConfig)


def _read_file(config_path: Path) -> Dict[str, Any]:
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}", field="config")
    try:
        with open(config_path, "r") as f:
            if config_path.suffix.lower() == ".json":
                data = json.load(f)
            elif config_path.suffix.lower() in (".yml", ".yaml"):
                data = yaml.safe_load(f) or {}
            else:
                raise ConfigError(f"unsupported config format {config_path.suffix!r}", field="config")
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"malformed config file {config_path}: {e}", field="config") from e
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping at the top level", field="config")
    return data


def validate_config(config_dict: Dict[str, Any]) -> RunConfig:
    """
    Validate a raw mapping into a RunConfig.

    Raises:
        ConfigError: naming the offending field
    """
    try:
        return RunConfig(**config_dict)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"invalid value for {location}: {first['msg']}", field=location) from e


def load_config(config_path: Union[str, Path, None] = None) -> RunConfig:
    """
    Load configuration from file and environment variables.

    Args:
        config_path: Path to a JSON or YAML configuration file (optional)

    Returns:
        Validated RunConfig
    """
    logger.debug(f"Loading configuration from: {config_path}")
    config_dict: Dict[str, Any] = {}
    if config_path:
        config_dict = _read_file(Path(config_path))
        logger.info(f"✅ Loaded configuration from {config_path}")
    config_dict = merge_env_vars(config_dict)
    config = validate_config(config_dict)
    logger.debug("Configuration loaded successfully")
    return config


def merge_env_vars(config_dict: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge environment variables into a configuration dictionary.

    Environment variables follow the pattern MSH_LAB_<KEY>, for example
    MSH_LAB_THREADS=4 or MSH_LAB_FORMAT=json.

    Args:
        config_dict: Existing configuration dictionary

    Returns:
        Updated configuration dictionary
    """
    env_mappings = {
        "MSH_LAB_THREADS": ["performance", "threads"],
        "MSH_LAB_SEED": ["seed"],
        "MSH_LAB_OUTPUT_DIR": ["output", "directory"],
        "MSH_LAB_FORMAT": ["output", "format"],
        "MSH_LAB_VERBOSITY": ["verbosity"],
        "MSH_LAB_EXPERIMENT": ["experiment"],
    }
    for env_var, config_path in env_mappings.items():
        value = os.getenv(env_var)
        if value is None:
            continue
        if value.isdigit():
            value = int(value)
        set_nested_value(config_dict, config_path, value)
        logger.info(f"📝 Override from env: {'.'.join(config_path)} = {value}")
    return config_dict


def set_nested_value(d: Dict[str, Any], path: List[str], value: Any) -> None:
    """
    Set a value in a nested dictionary using a path.

    Args:
        d: Dictionary to update
        path: List of keys representing the path
        value: Value to set
    """
    current = d
    for key in path[:-1]:
        if not isinstance(current.get(key), dict):
            current[key] = {}
        current = current[key]
    current[path[-1]] = value


def canonical_dump(config: RunConfig) -> Dict[str, Any]:
    """Everything that affects results: performance, output and verbosity are left out."""
    return config.model_dump(mode="json", exclude={"performance", "output", "verbosity"})


def config_hash(config: RunConfig) -> str:
    payload = json.dumps(canonical_dump(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_config(config: RunConfig, path: Union[str, Path]) -> None:
    """
    Save the effective configuration (JSON for .json paths, YAML otherwise).

    Args:
        config: Configuration object to save
        path: Path to save the configuration
    """
    path = Path(path)
    data = config.model_dump(mode="json")
    with open(path, "w") as f:
        if path.suffix.lower() == ".json":
            json.dump(data, f, indent=2, sort_keys=True)
        else:
            yaml.dump(data, f, default_flow_style=False, sort_keys=False)
    logger.debug(f"Saved configuration to {path}")
