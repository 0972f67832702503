"""
Experiment Configuration Catalog
Loads simulation configs from JSON files and resolves them by name
"""
import json
from pathlib import Path
from typing import Dict, Optional

from loguru import logger
from pydantic import ValidationError

from app.config import settings
from app.exceptions import ConfigError
from app.models import ExperimentConfig


def load_experiment_config(path: Path) -> ExperimentConfig:
    """Parse and validate one experiment config file"""
    path = Path(path)
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e

    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid experiment config: {e}") from e
    logger.info(f"Loaded {config.experiment} config {path.name} ({len(config.expand_specs())} cells)")
    return config


class ExperimentCatalog:
    """Named experiment configs found in a directory (`<name>.json`)"""

    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory or settings.experiments_dir)
        self._paths: Dict[str, Path] = {}
        self._load_catalog()

    def _load_catalog(self):
        if not self.directory.is_dir():
            logger.warning(f"Experiments directory not found: {self.directory}")
            self._paths = {}
            return
        self._paths = {path.stem: path for path in sorted(self.directory.glob("*.json"))}
        logger.debug(f"Found {len(self._paths)} experiment configs in {self.directory}")

    def names(self) -> list[str]:
        return list(self._paths)

    def path(self, name: str) -> Path:
        try:
            return self._paths[name]
        except KeyError:
            known = ", ".join(self._paths) or "none"
            raise ConfigError(f"unknown experiment {name!r}; known: {known}") from None

    def get(self, name: str) -> ExperimentConfig:
        return load_experiment_config(self.path(name))
