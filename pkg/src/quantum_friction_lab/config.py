"""Configuration management: environment settings and per-run configuration."""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import psutil
from dotenv import load_dotenv

from .material import DrudeParams, ParameterKind, ShearConfig

# Load environment variables from .env file
load_dotenv()

LOG_FORMATS = ("json", "text")


@dataclass
class RuntimeSettings:
    """Process-level settings read from the environment."""

    workers: int
    log_level: str
    log_format: str

    @classmethod
    def from_env(cls) -> "RuntimeSettings":
        """Load runtime settings from environment variables.

        QFL_WORKERS absent or empty means every logical CPU.
        """
        raw_workers = os.getenv("QFL_WORKERS", "").strip()
        if raw_workers:
            try:
                workers = int(raw_workers)
            except ValueError:
                raise ValueError(f"QFL_WORKERS must be an integer, got '{raw_workers}'")
            if workers <= 0:
                raise ValueError(f"QFL_WORKERS must be positive, got {workers}")
        else:
            workers = psutil.cpu_count(logical=True) or 1

        log_format = os.getenv("QFL_LOG_FORMAT", "json").lower()
        if log_format not in LOG_FORMATS:
            raise ValueError(f"QFL_LOG_FORMAT must be one of {LOG_FORMATS}, got '{log_format}'")

        return cls(
            workers=workers,
            log_level=os.getenv("QFL_LOG_LEVEL", "INFO").upper(),
            log_format=log_format,
        )


@dataclass
class RunConfig:
    """Everything a subcommand needs, echoed verbatim into every sidecar."""

    # physical
    gamma: Optional[float] = None
    v: Optional[float] = None
    L: Optional[float] = None
    v_upper: Optional[float] = None
    v_lower: Optional[float] = None
    # numeric
    tol: float = 1e-3
    kx_min: Optional[float] = None
    kx_max: Optional[float] = None
    ky: float = 0.0
    n_kx: int = 200
    n_omega: int = 200
    omega_min: float = 0.0
    omega_max: Optional[float] = None
    k_max: Optional[float] = None
    scan_points: int = 400
    # sweeps
    parameter: Optional[str] = None
    values: list = field(default_factory=list)
    velocities: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    gamma_presets: list = field(default_factory=list)
    cut_velocity: Optional[float] = None
    cut_gap: Optional[float] = None
    # verification
    only: list = field(default_factory=list)
    seed: int = 12345
    quick: bool = False
    # output
    output_dir: str = "qfl-output"
    render_svg: bool = False
    parquet: bool = False

    def __post_init__(self):
        """Validate configuration after initialization."""
        if self.gamma is not None and self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.L is not None and self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.v is not None and not 0 <= self.v < 2:
            raise ValueError(f"v must lie in [0, 2), got {self.v}")
        if (self.v_upper is None) != (self.v_lower is None):
            raise ValueError("v_upper and v_lower must be given together")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.n_kx <= 0 or self.n_omega <= 0 or self.scan_points < 3:
            raise ValueError("n_kx, n_omega must be positive and scan_points at least 3")
        if self.kx_min is not None and self.kx_max is not None and self.kx_max <= self.kx_min:
            raise ValueError(f"empty kx range [{self.kx_min}, {self.kx_max}]")
        if self.omega_max is not None and self.omega_max <= self.omega_min:
            raise ValueError(f"empty omega range [{self.omega_min}, {self.omega_max}]")
        if self.k_max is not None and self.k_max <= 0:
            raise ValueError(f"k_max must be positive, got {self.k_max}")
        if self.parameter is not None:
            ParameterKind(self.parameter)
        for name in ("velocities", "gaps", "gamma_presets"):
            if any(x <= 0 for x in getattr(self, name)):
                raise ValueError(f"{name} must contain positive values")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build from a mapping, rejecting unknown keys."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"Unknown configuration keys: {unknown}")
        return cls(**data)

    @staticmethod
    def load_document(path: str | Path) -> dict:
        """Read a bare RunConfig document or the run_config member of a sidecar."""
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
        if not isinstance(document, dict):
            raise ValueError(f"{path}: expected a JSON object")
        if "run_config" in document:
            document = document["run_config"]
        return document

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(cls.load_document(path))

    @classmethod
    def layered(
        cls, preset: dict, file_document: Optional[dict], overrides: dict[str, Any]
    ) -> "RunConfig":
        """Merge command preset < config file < command-line flags (None means unset)."""
        merged = dict(preset)
        merged.update(file_document or {})
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(merged)

    def to_dict(self) -> dict:
        return asdict(self)

    def shear_config(self) -> ShearConfig:
        """Physical configuration; explicit slab velocities take precedence over v."""
        if self.gamma is None or self.L is None:
            raise ValueError("gamma and L are required")
        if self.v_upper is not None:
            return ShearConfig(
                drude=DrudeParams(self.gamma),
                v_upper=self.v_upper,
                v_lower=self.v_lower,
                z_minus=-self.L / 2.0,
                z_plus=self.L / 2.0,
            )
        if self.v is None:
            raise ValueError("v (or v_upper and v_lower) is required")
        return ShearConfig.symmetric(self.gamma, self.v, self.L)


def get_runtime_settings() -> RuntimeSettings:
    """Get runtime settings."""
    return RuntimeSettings.from_env()
