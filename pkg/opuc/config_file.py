"""
Run configuration files.

Format: one `key = value` per line; `#` starts a comment; blank lines are
ignored; keys are case-sensitive and may appear once. Values stay strings
here and are typed by the subcommand's schema.

Example:
    validator = get_config_validator()
    config = validator.validate("scan", parse_config_text(text))
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Type

import pydantic

from opuc.errors import ConfigError, UnknownSubcommandError
from opuc.schemas import (
    AbelBoundConfig,
    BsDensityConfig,
    CompareIntervalsConfig,
    DecomposeConfig,
    EnergyConfig,
    EvolveConfig,
    GenerateConfig,
    KmaxCheckConfig,
    MomentsConfig,
    ResonancesConfig,
    RoundtripConfig,
    RunConfigBase,
    ScanConfig,
)

logger = logging.getLogger(__name__)


CONFIG_SCHEMAS: Dict[str, Type[RunConfigBase]] = {
    "generate": GenerateConfig,
    "evolve": EvolveConfig,
    "bs-density": BsDensityConfig,
    "moments": MomentsConfig,
    "compare-intervals": CompareIntervalsConfig,
    "resonances": ResonancesConfig,
    "kmax-check": KmaxCheckConfig,
    "abel-bound": AbelBoundConfig,
    "energy": EnergyConfig,
    "scan": ScanConfig,
    "decompose": DecomposeConfig,
    "roundtrip": RoundtripConfig,
}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parse key = value lines.

    Raises:
        ConfigError: malformed line, empty key or duplicate key
    """
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def read_config(path) -> tuple[str, Dict[str, str]]:
    """Raw text and parsed values of a config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    return text, parse_config_text(text, source=str(path))


class ConfigValidator:
    """
    Validate parsed configs with the subcommand's pydantic schema.

    The registry maps subcommand names to schema classes.
    """

    def __init__(self):
        self.schemas = CONFIG_SCHEMAS

    def get_schema(self, subcommand: str) -> Type[RunConfigBase]:
        """
        Args:
            subcommand: Subcommand name

        Returns:
            Schema class of the subcommand
        """
        if subcommand not in self.schemas:
            raise UnknownSubcommandError(
                f"unknown subcommand {subcommand!r}; available: {', '.join(sorted(self.schemas))}"
            )
        return self.schemas[subcommand]

    def validate(
        self,
        subcommand: str,
        values: Dict[str, Any],
        overrides: Optional[Dict[str, Any]] = None,
    ) -> RunConfigBase:
        """
        Args:
            subcommand: Subcommand name
            values: Parsed key/value pairs
            overrides: Values taking precedence (e.g. --seed)

        Returns:
            Validated config model

        Raises:
            ConfigError: a value fails its schema, or the file names another subcommand
        """
        schema = self.get_schema(subcommand)
        merged = dict(values)
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
        named = merged.get("subcommand")
        if named is not None and named != subcommand:
            raise ConfigError(f"config is for subcommand {named!r}, invoked as {subcommand!r}")
        try:
            return schema(**merged)
        except pydantic.ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or '<config>'}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(f"invalid {subcommand} config: {problems}") from e


_config_validator: Optional[ConfigValidator] = None


def get_config_validator() -> ConfigValidator:
    global _config_validator
    if _config_validator is None:
        _config_validator = ConfigValidator()
    return _config_validator
