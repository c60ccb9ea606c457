"""
Optional config loading for molunfold run defaults.

Load from [tool.molunfold] in pyproject.toml or from molunfold.yaml.
Command-line flags override whatever is loaded here.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, cast

logger = logging.getLogger(__name__)


@dataclass
class UnfoldConfig:
    """Defaults for every CLI flag. ``c0=None`` means automatic calibration."""

    encoding: str = "phase"
    d: int = 16
    solver: str = "bsb"
    steps: int = 100
    dt: float = 0.5
    a0: float = 1.0
    c0: float | None = None
    samples: int = 20
    seed: int | None = None
    prune: float = 0.0
    rescale: bool = False
    grid: int = 32
    jobs: int = 1
    include_hydrogens: bool = True
    shots: int = 10000
    cooling_factor: float = 0.95
    rounds: int = 5
    reference: str = "brute"
    windows: tuple[int, ...] = (10, 50, 100)
    out: str = "."

    def updated(self, **overrides: Any) -> UnfoldConfig:
        """Copy with every non-None override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})




class ConfigError(ValueError):
    """A config file that was asked for but cannot be used."""


YAML_NAMES = ("molunfold.yaml", "molunfold.yml")
TOML_SECTION = ("tool", "molunfold")

_DEFAULT = UnfoldConfig()
_FIELDS = {f.name for f in fields(UnfoldConfig)}


def _read_toml(path: Path) -> dict[str, Any]:
    try:
        import tomllib  # type: ignore[import-not-found]
    except ImportError:
        import tomli as tomllib  # type: ignore[no-redef]
    with open(path, "rb") as f:
        try:
            return cast(dict[str, Any], tomllib.load(f))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def _read_yaml(path: Path) -> Any:
    try:
        import yaml  # type: ignore[import-untyped]
    except ImportError as exc:
        raise ConfigError(f"{path} needs PyYAML: pip install 'molunfold[config]'") from exc
    with open(path, encoding="utf-8") as f:
        try:
            return yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def _section(path: Path) -> dict[str, Any] | None:
    """Settings stored in ``path``; None for a TOML file without a molunfold table."""
    if path.suffix in (".yaml", ".yml"):
        data = _read_yaml(path)
        if data is None:
            return {}
    elif path.suffix == ".toml":
        data = _read_toml(path)
        for key in TOML_SECTION:
            data = data.get(key) if isinstance(data, dict) else None
        if data is None:
            return None
    else:
        raise ConfigError(f"unsupported config file {path.name}; use .yaml, .yml or .toml")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a table of settings, got {type(data).__name__}")
    return data


def _coerce(name: str, value: Any) -> Any:
    if name == "windows":
        items = value.split(",") if isinstance(value, str) else value
        return tuple(int(w) for w in items)
    return value


def _apply(section: dict[str, Any], source: Path) -> UnfoldConfig:
    """Defaults overridden by ``section``; unknown keys are ignored with a warning."""
    known: dict[str, Any] = {}
    for key, value in section.items():
        name = str(key).replace("-", "_")
        if name not in _FIELDS:
            logger.warning(f"{source.name}: ignoring unknown config key {key!r}")
            continue
        known[name] = _coerce(name, value)
    logger.debug(f"{len(known)} settings from {source}")
    return replace(_DEFAULT, **known)


def _candidates(start: Path) -> Iterator[Path]:
    for directory in (start, start.parent):
        for name in (*YAML_NAMES, "pyproject.toml"):
            path = directory / name
            if path.is_file():
                yield path


def load_config(config_path: str | Path | None = None) -> UnfoldConfig:
    """
    Run defaults from an explicit file or by discovery.

    An explicit ``config_path`` must exist and parse, else ``ConfigError``.
    Discovery looks in the working directory, then its parent, for
    molunfold.yaml/.yml and then a pyproject.toml with ``[tool.molunfold]``;
    unusable discovered files are skipped with a warning.
    """
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        section = _section(path)
        return _DEFAULT if section is None else _apply(section, path)

    for path in _candidates(Path.cwd()):
        try:
            section = _section(path)
        except (ConfigError, OSError) as exc:
            logger.warning(f"skipping {path}: {exc}")
            continue
        if section is not None:
            return _apply(section, path)
    return _DEFAULT
