"""
Run configuration: defaults < preset < YAML file < command-line flags.
"""

import copy
import logging
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ConfigError
from .grid import VelocityGrid
from .kernel import KernelSpec, QuadratureRule
from .specnet import TrainOptions

logger = logging.getLogger(__name__)

COMMANDS = ("gen_data", "train", "simulate", "validate", "bench")
SUITES = ("oracle", "decay", "consistency", "resolution", "bench", "perturbation", "gradients")


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSettings(Section):
    d: Literal[2, 3] = 2
    N: int = Field(32, ge=2)
    S: float = Field(3.0, gt=0)

    @field_validator("N")
    @classmethod
    def even_n(cls, value):
        if value % 2:
            raise ValueError(f"N must be even, got {value}")
        return value


class KernelSettings(Section):
    alpha: float = Field(0.0, gt=-1)
    C: Optional[float] = Field(None, gt=0)
    e: float = Field(1.0, ge=0, le=1)


class QuadratureSettings(Section):
    n_r: Optional[int] = Field(None, ge=1)
    n_sigma: int = Field(16, ge=1)
    n_polar: Optional[int] = Field(None, ge=1)


class SpecNetSettings(Section):
    n_trun: int = Field(8, ge=1)
    M: int = Field(2, ge=1)
    lr: float = Field(1e-2, gt=0)
    epochs: int = Field(200_000, ge=1)
    tol: float = Field(1e-2, ge=0)
    batch_size: Optional[int] = Field(None, ge=1)
    val_fraction: float = Field(0.1, ge=0, lt=1)
    val_every: int = Field(100, ge=1)
    checkpoint_every: int = Field(1000, ge=0)
    divergence: float = Field(1e3, gt=0)
    init: Literal["random", "quadrature"] = "random"
    corpus: Optional[str] = None
    resume: Optional[str] = None
    sweep: dict = Field(default_factory=dict)


class InitialCondition(Section):
    kind: Literal["bkw", "maxwellian", "mixture"] = "maxwellian"
    centers: list = Field(default_factory=lambda: [[0.0, 0.0]])
    widths: list = Field(default_factory=lambda: [1.0])
    sigma: float = Field(1.0, gt=0)


class SimulateSettings(Section):
    dt: float = Field(0.01, gt=0)
    t_final: float = Field(5.0, gt=0)
    scheme: Literal["rk3", "euler"] = "rk3"
    cadence: Optional[int] = Field(None, ge=1)
    initial: InitialCondition = Field(default_factory=InitialCondition)
    operator: Literal["fast", "direct", "specnet"] = "fast"
    checkpoint: Optional[str] = None
    reference: Optional[Literal["fast", "bkw"]] = None
    track_q_norm: bool = False


class DataSettings(Section):
    counts: tuple[int, int, int] = (1000, 1000, 1000)


class ValidateSettings(Section):
    suite: Literal[SUITES] = "oracle"
    checkpoint: Optional[str] = None
    K_list: list = Field(default_factory=lambda: [4, 8, 16, 32])
    N_list: list = Field(default_factory=lambda: [16, 32, 64, 128])
    n_samples: int = Field(10, ge=1)
    oracle_N: int = Field(8, ge=2)


class BenchSettings(Section):
    N_list: list = Field(default_factory=lambda: [16, 32, 64, 128, 256])
    repetitions: int = Field(5, ge=5)
    operators: list = Field(default_factory=lambda: ["fast", "specnet"])
    checkpoint: Optional[str] = None


class IoSettings(Section):
    out_dir: Optional[str] = None
    run_id: Optional[str] = None
    encoding: Optional[Literal["decimal", "hex"]] = None
    dump_fields: bool = False
    dump_kernel: bool = False
    plot: bool = False
    progress: bool = True


class RunConfig(Section):
    command: Literal[COMMANDS] = "simulate"
    preset: Optional[str] = None
    seed: int = 0
    threads: Optional[int] = Field(None, ge=1)
    grid: GridSettings = Field(default_factory=GridSettings)
    kernel: KernelSettings = Field(default_factory=KernelSettings)
    quadrature: QuadratureSettings = Field(default_factory=QuadratureSettings)
    specnet: SpecNetSettings = Field(default_factory=SpecNetSettings)
    simulate: SimulateSettings = Field(default_factory=SimulateSettings)
    data: DataSettings = Field(default_factory=DataSettings)
    validate_: ValidateSettings = Field(default_factory=ValidateSettings, alias="validate")
    bench: BenchSettings = Field(default_factory=BenchSettings)
    io: IoSettings = Field(default_factory=IoSettings)

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    def velocity_grid(self, N: int = None) -> VelocityGrid:
        return VelocityGrid(d=self.grid.d, N=N or self.grid.N, S=self.grid.S)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(d=self.grid.d, alpha=self.kernel.alpha, C=self.kernel.C, e=self.kernel.e)

    def quadrature_rule(self, N: int = None) -> QuadratureRule:
        q = self.quadrature
        return QuadratureRule.build(
            self.grid.d, self.grid.S, n_r=q.n_r or N or self.grid.N, n_sigma=q.n_sigma, n_polar=q.n_polar
        )

    def train_options(self) -> TrainOptions:
        s = self.specnet
        return TrainOptions(
            epochs=s.epochs,
            lr=s.lr,
            tol=s.tol,
            seed=self.seed,
            batch_size=s.batch_size,
            val_fraction=s.val_fraction,
            val_every=s.val_every,
            checkpoint_every=s.checkpoint_every,
            divergence=s.divergence,
        )

    def dump(self) -> dict:
        """Fully resolved configuration, as echoed into manifests"""
        return self.model_dump(mode="json", by_alias=True)


PRESETS = {
    "bkw": {
        "grid": {"d": 2, "N": 64, "S": 3.0},
        "kernel": {"alpha": 0.0, "e": 1.0},
        "simulate": {
            "dt": 0.01,
            "t_final": 5.0,
            "initial": {"kind": "bkw", "sigma": 1.0},
            "reference": "bkw",
        },
    },
    "hard-sphere-2d": {
        "grid": {"d": 2, "N": 64, "S": 3.0},
        "kernel": {"alpha": 1.0, "e": 1.0},
        "simulate": {
            "dt": 0.01,
            "t_final": 2.0,
            "initial": {"kind": "mixture", "centers": [[0.0, -1.2], [0.0, 1.2]], "widths": [1.0, 1.0]},
        },
    },
    "inelastic-1": {
        "grid": {"d": 2, "N": 32, "S": 3.0},
        "kernel": {"alpha": 0.0, "e": 0.5},
        "simulate": {
            "dt": 0.01,
            "t_final": 3.0,
            "initial": {"kind": "mixture", "centers": [[0.0, -0.7]], "widths": [1.2]},
        },
    },
    "inelastic-2": {
        "grid": {"d": 2, "N": 32, "S": 3.0},
        "kernel": {"alpha": 0.0, "e": 0.5},
        "simulate": {
            "dt": 0.01,
            "t_final": 3.0,
            "initial": {"kind": "mixture", "centers": [[0.0, -1.5], [0.0, 0.8]], "widths": [0.7, 1.0]},
        },
    },
    "maxwellian-3d": {
        "grid": {"d": 3, "N": 16, "S": 3.0},
        "kernel": {"alpha": 0.0, "e": 1.0},
        "quadrature": {"n_sigma": 8},
        "simulate": {
            "dt": 0.01,
            "t_final": 0.5,
            "initial": {"kind": "maxwellian", "centers": [[0.0, 0.0, 0.0]], "widths": [1.0]},
            "track_q_norm": True,
        },
    },
}


def deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_yaml(path) -> dict:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a mapping at top level")
    return data


def preset_overrides(name: str) -> dict:
    if name is None:
        return {}
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"Unknown preset '{name}'. Available: {', '.join(sorted(PRESETS))}") from None


def build_run_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Invalid configuration:\n{exc}") from exc


def load_run_config(command: str, overrides: dict = None, config_path=None, preset: str = None) -> RunConfig:
    """
    Resolve a RunConfig. `overrides` holds the nested values given on the
    command line; only keys actually passed should be present.
    """
    file_data = read_yaml(config_path) if config_path else {}
    overrides = overrides or {}
    preset = preset or overrides.get("preset") or file_data.get("preset")
    data = deep_merge(preset_overrides(preset), file_data)
    data = deep_merge(data, overrides)
    data["command"] = command
    data["preset"] = preset
    config = build_run_config(data)
    logger.debug(f"Resolved {command} config (preset={preset}, file={config_path})")
    return config


def config_from_manifest(manifest: dict) -> RunConfig:
    try:
        data = manifest["config"]
    except (KeyError, TypeError):
        raise ConfigError("Manifest has no 'config' section") from None
    return build_run_config(data)
