"""Run configuration: every tunable of the pipeline with its default."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


@dataclass
class HomogeneityConfig:
    sharpen_amount: float = 1.0
    stretch_low_pct: float = 2.0
    stretch_high_pct: float = 98.0
    # stretch is skipped when the percentile span is narrower than this
    stretch_min_span: float = 64.0
    hue_bins: int = 18
    min_saturation: float = 0.15
    min_value: float = 0.12
    # pixels below this saturation count as untinted even after enhancement
    min_tint: float = 0.02
    # achromatic pixels: value below -> black, below gray_high -> gray, else white
    gray_low: float = 0.35
    gray_high: float = 0.8
    max_palette: int = 16
    min_color_pixels: int = 50
    max_passes: int = 8


@dataclass
class TracingConfig:
    bridge_factor: float = 3.0
    max_empty_fraction: float = 0.4


@dataclass
class ClusteringConfig:
    upper_cut_px: float = 3.0
    lower_cut_px: float = 4.0
    restarts: int = 5
    max_iter: int = 100


@dataclass
class AnalysisConfig:
    growth_ratio_eps: float = 0.15
    growth_zero_eps: float = 0.05
    template_size: int = 81
    # None searches the whole image
    template_window: int | None = 20


@dataclass
class Config:
    homogeneity: HomogeneityConfig = field(default_factory=HomogeneityConfig)
    tracing: TracingConfig = field(default_factory=TracingConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    merge_mode: str = "rule3"
    seed: int = 0

    def __post_init__(self):
        if self.merge_mode not in ("rule2", "rule3"):
            raise ValueError(f"merge_mode must be 'rule2' or 'rule3', got {self.merge_mode!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        sections = {
            "homogeneity": HomogeneityConfig,
            "tracing": TracingConfig,
            "clustering": ClusteringConfig,
            "analysis": AnalysisConfig,
        }
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                known = {f.name for f in dataclasses.fields(sections[key])}
                unknown = set(value) - known
                if unknown:
                    raise ValueError(f"unknown keys in [{key}]: {sorted(unknown)}")
                kwargs[key] = sections[key](**value)
            elif key in ("merge_mode", "seed"):
                kwargs[key] = value
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))
