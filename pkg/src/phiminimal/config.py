"""Run configuration: JSON file with defaults for every field, CLI flags on top."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

COMMANDS = ("verify", "certify", "cones", "no4d", "km", "all")
INTEGRANDS = ("phi", "km14_candidate", "round")

DEFAULT_SAMPLES = {
    "main_residual": 100_000,
    "parametric_residual": 10_000,
    "fixed_point_grid": 1_000,
    "wave": 10_000,
    "legendre": 200,
    "ellipticity": 200_000,
    "seam_ring": 10_000,
    "calibration_pairs": 1_000_000,
    "divergence": 10_000,
    "level_set": 10_000,
    "foliation": 100_000,
    "r_sweep": 1_000,
    "km_certifier": 20_000,
}

DEFAULT_TOLERANCES = {
    "main_residual": 1e-8,
    "fixed_point": 1e-10,
    "fixed_point_value": 1e-12,
    "restricted_hessian": 1e-8,
    "wave_numeric": 1e-7,
    "wave_analytic": 1e-8,
    "rotation_identity": 1e-12,
    "legendre_exact": 1e-14,
    "legendre_quartic": 1e-7,
    "legendre_involution": 1e-8,
    "radial_kernel": 1e-8,
    "evenness": 1e-10,
    "round_eigenvalue": 1e-8,
    "seam_mixed": 1e-8,
    "seam_zz": 1e-8,
    "seam_sides": 1e-10,
    "axis_origin": 1e-8,
    "calibration_equality": 1e-12,
    "divergence": 1e-8,
    "level_set": 1e-8,
    "foliation": 1e-12,
    "r_sweep": 1e-8,
}

# lower bounds and bands are not rescaled by --tolerance-scale
DEFAULT_BOUNDS = {
    "eigenvalue_floor": 0.0,
    "calibration_floor": -1e-10,
    "seam_ratio_band": [0.5, 2.0],
    "expansion_order_min": 5.5,
}

DEFAULT_GUARD = {
    "seam_delta": 0.2,
    "seam_steps": [0.08, 0.04, 0.02, 0.01, 0.005, 0.0025],
    "expansion_terms": 6,
    "axis_radius": 0.3,
    "seam_ring_width": 1e-2,
    "wave_step": 1e-2,
    "calibration_separation": 1e-3,
}

DEFAULT_EXPLORATORY = {
    "no4d_threshold": 1e3,
    "no4d_t_range": [0.1, 50.0],
    "no4d_samples": 200,
    "no4d_diagonal_margins": [1e-4, 1e-6, 1e-8, 1e-10, 1e-12],
    "km_threshold": 1e3,
    "km_ray_p": [1.0],
    "km_q_stop": 1e-3,
    "km_samples": 200,
    "r_sweep_values": [1.0, 10.0, 100.0],
}


class ConfigError(ValueError):
    """Invalid configuration file or flag."""


@dataclass
class RunConfig:
    command: str = "all"
    seed: int = 0
    out: str = "report.json"
    integrand: str = "phi"
    round_dim: int = 3
    tolerance_scale: float = 1.0
    samples: dict = field(default_factory=lambda: dict(DEFAULT_SAMPLES))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    bounds: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_BOUNDS))
    guard: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_GUARD))
    exploratory: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_EXPLORATORY))

    def tol(self, key: str) -> float:
        """Effective tolerance after the global scale."""
        return self.tolerances[key] * self.tolerance_scale

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.integrand not in INTEGRANDS:
            raise ConfigError(f"integrand must be one of {INTEGRANDS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not self.tolerance_scale > 0:
            raise ConfigError("tolerance scale must be positive")
        if self.round_dim < 2:
            raise ConfigError("round_dim must be at least 2")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k!r} must be positive")
        for k, v in self.samples.items():
            if not (isinstance(v, int) and v > 0):
                raise ConfigError(f"sample size {k!r} must be a positive integer")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["effective_tolerances"] = {k: self.tol(k) for k in sorted(self.tolerances)}
        return d


_SECTIONS = {"samples": DEFAULT_SAMPLES, "tolerances": DEFAULT_TOLERANCES, "bounds": DEFAULT_BOUNDS,
             "guard": DEFAULT_GUARD, "exploratory": DEFAULT_EXPLORATORY}
_SCALARS = ("command", "seed", "out", "integrand", "round_dim", "tolerance_scale")


def load_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """Defaults, then the JSON file (if any), then non-None keyword overrides.

    The override ``samples`` may be an integer; it then replaces every sample size.
    """
    cfg = RunConfig()
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        for key, value in raw.items():
            if key in _SCALARS:
                setattr(cfg, key, value)
            elif key in _SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigError(f"section {key!r} must be an object")
                unknown = set(value) - set(_SECTIONS[key])
                if unknown:
                    raise ConfigError(f"unknown keys in {key!r}: {sorted(unknown)}")
                getattr(cfg, key).update(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "samples" and isinstance(value, int):
            cfg.samples = {k: value for k in cfg.samples}
        elif key in _SCALARS:
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown override {key!r}")
    return cfg.validate()
