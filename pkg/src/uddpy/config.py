"""Experiment presets loaded from ``config/experiments.json``."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .exceptions import ParameterError
from .generators import StreamSpec
from .sketch import CollapsePolicy, parse_policy

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path("config") / "experiments.json"


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    dist: str
    params: List[float]
    description: str = ""
    enabled: bool = True

    def stream(self, n: int, seed: int) -> StreamSpec:
        return StreamSpec(dist=self.dist, params=tuple(self.params), n=n, seed=seed)


@dataclass
class ExperimentConfig:
    """Datasets, sketch defaults and sweep settings for the experiment commands."""

    datasets: List[DatasetPreset] = field(default_factory=list)
    alpha: float = 0.001
    buckets: int = 512
    grid_size: int = 1001
    seed: int = 0
    n: int = 1_000_000
    tree: str = "balanced"
    procs: List[int] = field(default_factory=lambda: [1, 2, 4, 8])
    policies: List[CollapsePolicy] = field(
        default_factory=lambda: [CollapsePolicy.COLLAPSE_FIRST, CollapsePolicy.UNIFORM]
    )
    repeats: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        defaults = data.get("defaults", {})
        sweep = data.get("sweep", {})
        try:
            datasets = [
                DatasetPreset(
                    name=entry["name"],
                    dist=entry["dist"],
                    params=[float(p) for p in entry["params"]],
                    description=entry.get("description", ""),
                    enabled=bool(entry.get("enabled", True)),
                )
                for entry in data.get("datasets", [])
            ]
            config = cls(
                datasets=datasets,
                alpha=float(defaults.get("alpha", 0.001)),
                buckets=int(defaults.get("buckets", 512)),
                grid_size=int(defaults.get("grid_size", 1001)),
                seed=int(defaults.get("seed", 0)),
                n=int(defaults.get("n", 1_000_000)),
                tree=str(defaults.get("tree", "balanced")),
                procs=[int(p) for p in sweep.get("procs", [1, 2, 4, 8])],
                policies=[parse_policy(p) for p in sweep.get("policies", ["dd-first", "uniform"])],
                repeats=int(sweep.get("repeats", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterError(f"invalid experiment configuration: {e}") from None
        if not config.procs or min(config.procs) < 1:
            raise ParameterError(f"sweep procs must be positive, got {config.procs}")
        return config

    def enabled_datasets(self) -> List[DatasetPreset]:
        return [d for d in self.datasets if d.enabled]

    def streams(self, n: Optional[int] = None) -> List[StreamSpec]:
        """Stream specs of the enabled datasets, all sharing the configured seed."""
        length = self.n if n is None else n
        return [d.stream(length, self.seed) for d in self.enabled_datasets()]


def default_config() -> ExperimentConfig:
    """Built-in presets used when no configuration file is available."""
    return ExperimentConfig.from_dict(
        {
            "datasets": [
                {"name": "beta", "dist": "beta", "params": [5, 1.5]},
                {"name": "exponential", "dist": "exponential", "params": [3.5]},
                {"name": "lognormal", "dist": "lognormal", "params": [1, 1.5]},
                {"name": "normal", "dist": "normal", "params": [1e6, 20000]},
                {"name": "uniform", "dist": "uniform", "params": [5, 1e6]},
            ],
            "defaults": {"alpha": 0.001, "buckets": 512, "grid_size": 1001, "seed": 0},
        }
    )


def load_experiment_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Load presets from ``path`` (default ``config/experiments.json``).

    A missing or unreadable file falls back to the built-in defaults; a file
    that parses but holds invalid values raises ParameterError.
    """
    config_path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        if path is not None:
            logger.warning(f"[CONFIG] {config_path} not found, using built-in defaults")
        return default_config()
    except json.JSONDecodeError as e:
        logger.warning(f"[CONFIG] invalid JSON in {config_path}: {e}; using built-in defaults")
        return default_config()
    logger.info(f"[CONFIG] loaded {config_path}")
    return ExperimentConfig.from_dict(data)
