"""Job configuration: a YAML file plus ``--set key=value`` overrides.

Scalars are read as strings so that thresholds such as ``0.50001`` reach the
numerics as exact rationals rather than through a binary float.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import yaml

from .balls import parse_exact
from .sets import BUILTIN, load_set, parse_set_text
from .subshift import ForbiddenSet

EXTERNAL_SETS = ("OMEGA",)


class ConfigError(ValueError):
    pass


@dataclass
class JobConfig:
    set: Optional[str] = None
    words: list = field(default_factory=list)
    words_file: Optional[str] = None
    alphabet_max: int = 2
    include_reverses: bool = True
    n: Optional[int] = None
    m: int = 8
    precision_bits: int = 128
    partition: int = 256
    t: list = field(default_factory=list)
    t_lo: Optional[str] = None
    t_hi: Optional[str] = None
    width: Optional[str] = None
    max_steps: int = 20
    threads: int = 1
    cache_dir: Optional[str] = None
    allow_long: bool = False
    escalate: bool = True

    def t_values(self) -> list[Fraction]:
        return [parse_exact(x) for x in self.t]

    def bracket(self) -> Optional[tuple[Fraction, Fraction]]:
        if self.t_lo is None and self.t_hi is None:
            return None
        if self.t_lo is None or self.t_hi is None:
            raise ConfigError("t_lo and t_hi must be given together")
        return parse_exact(self.t_lo), parse_exact(self.t_hi)

    def input_hash(self) -> str:
        data = asdict(self)
        for key in ("threads", "cache_dir", "allow_long"):
            data.pop(key)
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]

    def needs_external_words(self) -> bool:
        return self.set is not None and self.set.upper() in EXTERNAL_SETS and not (self.words or self.words_file)

    def forbidden_set(self) -> ForbiddenSet:
        if self.needs_external_words():
            raise ConfigError(f"set {self.set} needs an externally supplied word list (words or words_file)")
        if self.set is not None and self.set.upper() not in EXTERNAL_SETS:
            name = self.set.upper()
            if name not in BUILTIN:
                raise ConfigError(f"unknown built-in set {self.set!r}; choose from {', '.join(BUILTIN)}")
            if self.words or self.words_file:
                raise ConfigError("give either a built-in set or explicit words, not both")
            return load_set(name)
        words = list(self.words)
        alphabet_max, include_reverses = self.alphabet_max, self.include_reverses
        if self.words_file:
            extra, alphabet_max, include_reverses = parse_set_text(Path(self.words_file).read_text())
            words += extra
        return ForbiddenSet.build(words, alphabet_max=alphabet_max, include_reverses=include_reverses)


_INT = {"alphabet_max", "n", "m", "precision_bits", "partition", "max_steps", "threads"}
_BOOL = {"include_reverses", "allow_long", "escalate"}
_DECIMAL = {"t_lo", "t_hi", "width"}
_LIST = {"t", "words"}
_STR = {"set", "words_file", "cache_dir"}
FIELDS = _INT | _BOOL | _DECIMAL | _LIST | _STR


def _convert(key: str, value, where: str):
    if key not in FIELDS:
        raise ConfigError(f"{where}: unknown field {key!r}")
    try:
        if key in _LIST:
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split() if v]
            if not isinstance(value, list):
                raise ConfigError(f"{where}: {key} must be a list")
            value = [str(v) for v in value]
            if key == "t":
                for v in value:
                    parse_exact(v)
            else:
                for v in value:
                    if not v.isdigit() or "0" in v:
                        raise ConfigError(f"{where}: word {v!r} must use digits 1-9")
            return value
        if not isinstance(value, str):
            raise ConfigError(f"{where}: {key} must be a scalar")
        if value.lower() in ("null", "none", "~", ""):
            return None
        if key in _INT:
            return int(value)
        if key in _BOOL:
            if value.lower() in ("true", "yes", "1", "on"):
                return True
            if value.lower() in ("false", "no", "0", "off"):
                return False
            raise ConfigError(f"{where}: {key} must be true or false, got {value!r}")
        if key in _DECIMAL:
            parse_exact(value)
            return value
        return value
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: bad value for {key}: {value!r} ({exc})") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Field values keyed by name, with line-numbered diagnostics."""
    try:
        root = yaml.compose(text, Loader=yaml.BaseLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if root is None:
        return {}
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{source}: top level must be a mapping")
    out = {}
    for key_node, value_node in root.value:
        where = f"{source}:{key_node.start_mark.line + 1}"
        key = key_node.value
        if isinstance(value_node, yaml.SequenceNode):
            value = [item.value for item in value_node.value]
        elif isinstance(value_node, yaml.ScalarNode):
            value = value_node.value
        else:
            raise ConfigError(f"{where}: {key} cannot be a mapping")
        out[key] = _convert(key, value, where)
    return out


def apply_overrides(values: dict, overrides: list[str]) -> dict:
    values = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = _convert(key.strip(), value.strip(), f"--set {key.strip()}")
    return values


def load_config(path: Optional[str], overrides: list[str] = ()) -> JobConfig:
    values = parse_config_text(Path(path).read_text(), str(path)) if path else {}
    values = apply_overrides(values, list(overrides))
    cfg = JobConfig(**values)
    if cfg.m < 1 or cfg.partition < 1 or cfg.threads < 1:
        raise ConfigError("m, partition and threads must be positive")
    return cfg
