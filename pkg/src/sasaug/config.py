"""Run configuration: JSON file + command-line overrides.

Config file schema (every key optional; unknown keys are rejected)::

    {
      "seed": 0,
      "workers": 4,
      "preproc": {"input_side": 256, "crop_window": false},
      "sas": {
        "canvas_side": 256, "thumb_min": 64, "thumb_max": 256,
        "apply_prob": 0.5, "small_threshold": 0.03, "placement": "random",
        "noise": {"gaussian_sigma": 0.05, "speckle_sigma": 0.1,
                  "sp_fraction": 0.02, "poisson_scale": 255.0}
      },
      "metric": {"tau": 2.0, "bootstrap_n": 10000, "alpha": 0.05},
      "predictor_timeout": 30.0
    }

``seed`` is the master seed. It seeds augmentation, click simulation and
bootstrap resampling unless ``sas.seed`` or ``metric.boot_seed`` is set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import InvalidInput
from .metrics import MetricConfig
from .preprocess import PreprocConfig
from .sas import NoiseSpec, SasConfig


@dataclass(frozen=True)
class RunConfig:
    preproc: PreprocConfig = field(default_factory=PreprocConfig)
    sas: SasConfig = field(default_factory=SasConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    output_dir: Path = Path("out")
    workers: int = 1
    seed: int = 0
    predictor_timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise InvalidInput(f"workers must be >= 1, got {self.workers}")
        if self.predictor_timeout <= 0:
            raise InvalidInput("predictor_timeout must be > 0")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def to_dict(self) -> dict[str, Any]:
        """Resolved config for provenance. ``workers`` and ``output_dir`` are
        left out: neither may influence output bytes."""
        noise = self.sas.noise
        return {
            "seed": self.seed,
            "preproc": {"input_side": self.preproc.input_side, "crop_window": self.preproc.crop_window},
            "sas": {
                "canvas_side": self.sas.canvas_side,
                "thumb_min": self.sas.thumb_min,
                "thumb_max": self.sas.thumb_max,
                "apply_prob": self.sas.apply_prob,
                "small_threshold": self.sas.small_threshold,
                "placement": self.sas.placement.value,
                "seed": self.sas.seed,
                "noise": {
                    "gaussian_sigma": noise.gaussian_sigma,
                    "speckle_sigma": noise.speckle_sigma,
                    "sp_fraction": noise.sp_fraction,
                    "poisson_scale": noise.poisson_scale,
                },
            },
            "metric": {
                "tau": self.metric.tau,
                "bootstrap_n": self.metric.bootstrap_n,
                "alpha": self.metric.alpha,
                "boot_seed": self.metric.boot_seed,
            },
            "predictor_timeout": self.predictor_timeout,
        }


def _check_keys(section: str, data: dict[str, Any], allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise InvalidInput(f"unknown key(s) in {section or 'config'}: {sorted(unknown)}")


def _names(cls: type) -> set[str]:
    return {f.name for f in fields(cls)}


def build_config(
    data: dict[str, Any] | None = None,
    *,
    seed: int | None = None,
    workers: int | None = None,
    output_dir: str | Path | None = None,
    overrides: dict[str, dict[str, Any]] | None = None,
) -> RunConfig:
    """Resolve file contents, then flag overrides, into a validated config.

    ``overrides`` maps section name (``preproc``, ``sas``, ``noise``,
    ``metric``) to field values; ``None`` values are ignored.
    """
    data = dict(data or {})
    overrides = {k: {n: v for n, v in d.items() if v is not None} for k, d in (overrides or {}).items()}
    _check_keys("", data, {"seed", "workers", "preproc", "sas", "metric", "predictor_timeout"})

    preproc = dict(data.get("preproc", {}))
    _check_keys("preproc", preproc, _names(PreprocConfig))
    preproc.update(overrides.get("preproc", {}))

    sas = dict(data.get("sas", {}))
    _check_keys("sas", sas, _names(SasConfig))
    noise = dict(sas.pop("noise", {}))
    _check_keys("sas.noise", noise, _names(NoiseSpec) - {"kind"})
    sas.update(overrides.get("sas", {}))
    noise.update(overrides.get("noise", {}))

    metric = dict(data.get("metric", {}))
    _check_keys("metric", metric, _names(MetricConfig))
    metric.update(overrides.get("metric", {}))

    master = int(seed if seed is not None else data.get("seed", 0))
    sas.setdefault("seed", master)
    metric.setdefault("boot_seed", master)
    if seed is not None:
        # an explicit --seed wins over per-section seeds from the file
        sas["seed"] = metric["boot_seed"] = master

    try:
        return RunConfig(
            preproc=PreprocConfig(**preproc),
            sas=SasConfig(noise=NoiseSpec(**noise), **sas),
            metric=MetricConfig(**metric),
            output_dir=Path(output_dir if output_dir is not None else "out"),
            workers=int(workers if workers is not None else data.get("workers", os.cpu_count() or 1)),
            seed=master,
            predictor_timeout=float(data.get("predictor_timeout", 30.0)),
        )
    except TypeError as exc:
        raise InvalidInput(str(exc)) from exc


def load_config(path: str | Path | None, **kwargs: Any) -> RunConfig:
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidInput("config file must hold a JSON object")
    return build_config(data, **kwargs)
