"""Pipeline configuration, loadable from JSON."""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .optimize.aco import AcoConfig
from .optimize.ica import IcaConfig
from .segmentation import SegmentationConfig

OPTIMIZERS = ("ica", "gd", "aco")


@dataclass
class GdConfig:
    lr: float = 0.1
    iterations: int = 200

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("gd lr must be positive")


@dataclass
class PipelineConfig:
    image_size: int = 500
    median_window: int = 3
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    standardize: bool = True
    n_rules: int = 10
    optimizer: str = "ica"
    ica: IcaConfig = field(default_factory=IcaConfig)
    aco: AcoConfig = field(default_factory=AcoConfig)
    gd: GdConfig = field(default_factory=GdConfig)
    train_fraction: float = 0.7
    seeds: List[int] = field(default_factory=lambda: [0])
    # rule-centre k-means seed; None means "use the run seed"
    anfis_seed: Optional[int] = None

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.image_size < 1:
            raise ValueError("image_size must be >= 1")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ValueError("median_window must be an odd integer >= 1")
        if self.n_rules < 1:
            raise ValueError("n_rules must be >= 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        nested = {"segmentation": SegmentationConfig, "ica": IcaConfig, "aco": AcoConfig, "gd": GdConfig}
        for key, sub in nested.items():
            if key in doc and isinstance(doc[key], dict):
                doc[key] = _build(sub, doc[key], key)
        return _build(cls, doc, "config")


def _build(cls, doc, where):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ValueError(f"unknown {where} keys: {', '.join(unknown)}")
    return cls(**doc)


def load_config(path=None, **overrides):
    doc = {}
    if path is not None:
        doc = json.loads(Path(path).read_text())
    cfg = PipelineConfig.from_dict(doc)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.__post_init__()
    return cfg
