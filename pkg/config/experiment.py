"""
Experiment Configuration
Versioned YAML experiment files validated with Pydantic
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.gp.uncertain import ExpectationMethod
from src.models.base import KernelFamily, KernelSpec, WarpFamily, WarpSpec
from src.models.errors import ConfigError
from src.models.robot import NOISE_PROFILES, ScanConfig


SCHEMA_VERSION = 1

METHOD_NAMES = ("GPOM", "WGPOM", "GEK", "GESM", "WEK", "WESM")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class KernelConfig(_Strict):
    family: KernelFamily = KernelFamily.MATERN52
    signal_variance: float = Field(1.0, gt=0)
    length_scales: Tuple[float, ...] = (1.0,)
    support_radius: Optional[float] = Field(None, gt=0)

    def to_spec(self) -> KernelSpec:
        try:
            return KernelSpec(**self.model_dump())
        except ValidationError as e:
            raise ConfigError(f"invalid kernel: {e}") from e


class WarpConfig(_Strict):
    family: WarpFamily = WarpFamily.IDENTITY
    steps: int = Field(2, ge=1)
    a: Optional[Tuple[float, ...]] = None
    b: Optional[Tuple[float, ...]] = None
    c: Optional[Tuple[float, ...]] = None

    def to_spec(self) -> WarpSpec:
        try:
            if self.family == WarpFamily.TANH_SUM:
                return WarpSpec.tanh(self.steps, self.a, self.b, self.c)
            if self.family == WarpFamily.POLYNOMIAL:
                return WarpSpec.polynomial(self.steps, self.c)
            return WarpSpec.identity()
        except (ValidationError, ValueError) as e:
            raise ConfigError(f"invalid warp: {e}") from e


class UncertaintyConfig(_Strict):
    """none: mean poses only; ek: expected kernel; esm: expected sub-map"""
    kind: Literal["none", "ek", "esm"] = "none"
    quadrature: Literal["gh", "mc"] = "gh"
    order: int = Field(9, ge=1, le=40)
    joint_product: bool = False
    n_samples: int = Field(10, ge=1)
    seed: Optional[int] = None

    def expectation(self, seed: int) -> ExpectationMethod:
        return ExpectationMethod(
            kind=self.quadrature,
            order=self.order,
            n_samples=self.n_samples,
            seed=seed if self.seed is None else self.seed,
            joint_product=self.joint_product,
        )


_WARPED_KERNEL = KernelConfig(family=KernelFamily.SQUARED_EXPONENTIAL_ARD, length_scales=(1.0, 1.0))


class MethodConfig(_Strict):
    name: str
    kernel: KernelConfig = KernelConfig()
    warp: WarpConfig = WarpConfig()
    uncertainty: UncertaintyConfig = UncertaintyConfig()

    @classmethod
    def preset(cls, name: str, kernel: Optional[KernelConfig] = None, warp: Optional[WarpConfig] = None,
               order: int = 9, n_samples: int = 10) -> "MethodConfig":
        """
        Standard method combinations by abbreviation

        Unwarped methods default to Matern 5/2, warped ones to an ARD squared
        exponential under a two-step tanh warp.
        """
        name = name.upper()
        if name not in METHOD_NAMES:
            raise ConfigError(f"unknown method '{name}', expected one of {list(METHOD_NAMES)}")
        warped = name.startswith("W")
        if name.endswith("EK"):
            uncertainty = UncertaintyConfig(kind="ek", order=order)
        elif name.endswith("ESM"):
            uncertainty = UncertaintyConfig(kind="esm", n_samples=n_samples)
        else:
            uncertainty = UncertaintyConfig()
        return cls(
            name=name,
            kernel=kernel or (_WARPED_KERNEL if warped else KernelConfig()),
            warp=(warp or WarpConfig(family=WarpFamily.TANH_SUM, steps=2)) if warped else WarpConfig(),
            uncertainty=uncertainty,
        )


class SimulationSource(_Strict):
    world: str = "star"
    noise_profile: str = "Q3"
    n_poses: int = Field(40, ge=1)
    loop_radius: float = Field(4.0, gt=0)
    scan: ScanConfig = ScanConfig()
    perturb_means: bool = False
    log: Optional[Path] = None

    @field_validator("noise_profile")
    @classmethod
    def _known_profile(cls, v: str) -> str:
        if v.upper() not in NOISE_PROFILES:
            raise ValueError(f"noise profile must be one of {sorted(NOISE_PROFILES)}")
        return v.upper()

    @field_validator("log")
    @classmethod
    def _log_exists(cls, v: Optional[Path]) -> Optional[Path]:
        if v is not None and not v.is_file():
            raise ValueError(f"simulator log {v} does not exist")
        return v


class DatasetSource(_Strict):
    log: Path
    pose_track: Path
    association: Literal["timestamp", "index"] = "timestamp"
    max_range: float = Field(80.0, gt=0)
    max_scans: Optional[int] = Field(None, ge=1)

    @field_validator("log", "pose_track")
    @classmethod
    def _file_exists(cls, v: Path) -> Path:
        if not v.is_file():
            raise ValueError(f"{v} does not exist")
        return v


class MapConfig(_Strict):
    resolution: float = Field(0.5, gt=0)
    squash: Literal["probit", "logistic"] = "probit"
    auc_domain: Literal["observed", "known"] = "observed"
    query_margin: float = Field(1.0, gt=0)


class TrainingConfig(_Strict):
    free_spacing: float = Field(0.5, gt=0)
    beam_stride: int = Field(2, ge=1)
    noise_variance: float = Field(0.01, gt=0)
    optimize: bool = True
    optimizer_budget: int = Field(200, ge=1)


class ExperimentConfig(_Strict):
    schema_version: int = SCHEMA_VERSION
    name: str = "experiment"
    seed: int = 7
    simulation: Optional[SimulationSource] = None
    dataset: Optional[DatasetSource] = None
    methods: List[MethodConfig] = Field(default_factory=lambda: [MethodConfig.preset(n) for n in METHOD_NAMES])
    map: MapConfig = MapConfig()
    training: TrainingConfig = TrainingConfig()
    profiles: List[str] = Field(default_factory=lambda: sorted(NOISE_PROFILES))
    output_directory: Path = Path("results")
    report_runtime: bool = False

    @field_validator("schema_version")
    @classmethod
    def _supported(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}, expected {SCHEMA_VERSION}")
        return v

    @field_validator("methods", mode="before")
    @classmethod
    def _expand_presets(cls, v):
        if isinstance(v, (list, tuple)):
            return [MethodConfig.preset(m) if isinstance(m, str) else m for m in v]
        return v

    @field_validator("profiles")
    @classmethod
    def _known_profiles(cls, v: List[str]) -> List[str]:
        upper = [p.upper() for p in v]
        unknown = [p for p in upper if p not in NOISE_PROFILES]
        if unknown:
            raise ValueError(f"unknown noise profiles {unknown}")
        return upper

    @model_validator(mode="after")
    def _one_source(self):
        if (self.simulation is None) == (self.dataset is None):
            raise ValueError("exactly one of 'simulation' or 'dataset' must be given")
        if not self.methods:
            raise ValueError("at least one method is required")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ValueError(f"method names must be unique, got {names}")
        return self

    def for_profile(self, profile: str) -> "ExperimentConfig":
        """Copy with the simulation noise profile replaced"""
        if self.simulation is None:
            return self
        return self.model_copy(update={
            "simulation": self.simulation.model_copy(update={"noise_profile": profile.upper()}),
        })

    def with_methods(self, names: Sequence[str]) -> "ExperimentConfig":
        wanted = {n.upper() for n in names}
        kept = [m for m in self.methods if m.name.upper() in wanted]
        if not kept:
            raise ConfigError(f"none of {sorted(wanted)} are configured methods")
        return self.model_copy(update={"methods": kept})


# ============================================================================
# LOADING
# ============================================================================

def _parse_scalar(text: str) -> Any:
    return yaml.safe_load(text) if text.strip() else ""


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Apply dotted `key=value` overrides to a raw config mapping

    Values are parsed as YAML scalars, so `map.resolution=0.25` sets a float
    and `methods=[GPOM,GEK]` a list.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, value = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override '{item}' has an empty key")
        node = data
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override '{item}': '{part}' is not a section")
            node = child
        try:
            node[parts[-1]] = _parse_scalar(value)
        except yaml.YAMLError as e:
            raise ConfigError(f"override '{item}': {e}") from e
    return data


def parse_config(data: Dict[str, Any], overrides: Sequence[str] = ()) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("experiment config must be a mapping")
    data = apply_overrides(data, overrides)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_config(path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read, override and validate an experiment file"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from e
    return parse_config(data, overrides)


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
