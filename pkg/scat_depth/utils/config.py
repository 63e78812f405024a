"""Configuration loading and run-config parsing."""

import dataclasses
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from scat_depth.errors import ConfigError
from scat_depth.trainer.config import TrainConfig

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Load configuration from YAML file.

    Args:
        config_path: Path to config file. If None, uses default config.yml.

    Returns:
        Configuration dictionary.
    """
    if config_path is None:
        config_path = str(Path(__file__).parent.parent.parent / "config.yml")

    with open(config_path) as f:
        return yaml.safe_load(f)


def default_train_config(config: Dict[str, Any]) -> TrainConfig:
    """TrainConfig from the ``training`` section of the settings file."""
    try:
        return TrainConfig.from_mapping(config.get("training") or {})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid training defaults: {e}") from e


def coerce_value(raw: str, default: Any) -> Any:
    """Parse ``raw`` into the type of ``default``."""
    text = raw.strip()
    if isinstance(default, bool):
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(int(part) for part in text.split(",") if part.strip())
    return text


def load_run_config(path: str, base: Optional[TrainConfig] = None) -> TrainConfig:
    """Apply a run-config file on top of ``base``.

    Line-based files hold ``key = value`` lines with ``#`` comments; ``.yml`` and
    ``.yaml`` files are read with pyyaml. Keys are TrainConfig field names.

    Raises:
        ConfigError: Naming ``FILE:LINE`` for malformed lines, unknown keys and bad values.
    """
    base = base or TrainConfig()
    path_obj = Path(path)
    if not path_obj.exists():
        raise ConfigError(f"{path}: config file not found")

    if path_obj.suffix in (".yml", ".yaml"):
        with open(path_obj) as f:
            values = yaml.safe_load(f) or {}
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: expected a mapping of training keys")
        try:
            return TrainConfig.from_mapping({**base.to_dict(), **values})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}: {e}") from e

    defaults = base.to_dict()
    changes: Dict[str, Any] = {}
    for number, line in enumerate(path_obj.read_text(encoding="utf-8").splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, raw = content.partition("=")
        key = key.strip()
        if not sep or not key or not raw.strip():
            raise ConfigError(f"{path}:{number}: malformed line {line.strip()!r}, expected 'key = value'")
        if key not in defaults:
            raise ConfigError(f"{path}:{number}: unknown key {key!r}")
        try:
            changes[key] = coerce_value(raw, defaults[key])
        except ValueError as e:
            raise ConfigError(f"{path}:{number}: bad value for {key}: {e}") from e

    try:
        return dataclasses.replace(base, **changes)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
