"""
ExperimentConfig for swinalign.

An experiment is described by one flat UTF-8 text file of ``key = value``
lines. Keys are dotted paths into the section dataclasses
(``backbone.window_size = 2``) and lists are comma-separated. A ``#`` at the
start of a line or after whitespace starts a comment, so ``runs/#3`` is a
plain value. Unknown keys and unparsable values are rejected.
"""

import dataclasses
import os
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, get_args, get_origin, get_type_hints

from swinalign.backbone.config import BackboneConfig
from swinalign.data.synthetic import SyntheticSpec
from swinalign.fusion.projection import FusionConfig
from swinalign.heads.head import HeadConfig
from swinalign.losses.objective import LossConfig
from swinalign.model import ModelConfig
from swinalign.training.optimizer import OptimizerConfig
from swinalign.utils.errors import ConfigError


@dataclass
class TrainingConfig:
    """
    Configuration of the optimization loop.

    ``init_checkpoint`` names a KCKP file whose backbone and projection weights
    replace the fresh initialization (the head is always initialized from
    ``seed``); empty means no such file.
    """
    epochs: int = 200
    batch_size: int = 16
    patience: int = 30
    eval_batch_size: int = 64
    init_checkpoint: str = ""

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("training.epochs must be non-negative.")
        if self.batch_size <= 0 or self.eval_batch_size <= 0:
            raise ConfigError("Batch sizes must be positive.")
        if self.patience <= 0:
            raise ConfigError("training.patience must be positive.")


@dataclass
class AblationConfig:
    """
    Which ablation setups to run, over which seeds, with how many workers.
    """
    setups: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    workers: int = 1

    def __post_init__(self):
        self.setups = [int(s) for s in self.setups]
        self.seeds = [int(s) for s in self.seeds]
        if not self.setups or any(s not in range(1, 7) for s in self.setups):
            raise ConfigError(f"Ablation setups must be drawn from 1..6, got {self.setups}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"Ablation seeds must be distinct, got {self.seeds}")
        if self.workers < 1:
            raise ConfigError("ablation.workers must be at least 1.")


@dataclass
class ExperimentConfig:
    """
    Everything a run needs. ``seed`` drives weight initialization and
    mini-batch shuffling; ``data.seed`` drives the synthetic data.
    """
    seed: int = 0
    data_dir: str = "data"
    out_dir: str = "runs/default"
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    data: SyntheticSpec = field(default_factory=SyntheticSpec)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    @property
    def model(self) -> ModelConfig:
        return ModelConfig(self.backbone, self.fusion, self.head)

    def items(self) -> List[Tuple[str, object]]:
        """Every (dotted key, value) pair, in declaration order."""
        pairs = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                for sub in dataclasses.fields(value):
                    pairs.append((f"{f.name}.{_key(sub.name)}", getattr(value, sub.name)))
            else:
                pairs.append((f.name, value))
        return pairs

    def to_text(self) -> str:
        lines = ["# swinalign experiment configuration"]
        lines.extend(f"{key} = {_format(value)}" for key, value in self.items())
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    def with_overrides(self, overrides: Dict[str, str]) -> "ExperimentConfig":
        """
        A new config with string values applied by dotted key; sections are
        re-validated.
        """
        return from_pairs(overrides.items(), base=self)


def _key(field_name: str) -> str:
    # lambda_ is spelled loss.lambda in files.
    return field_name.rstrip("_")


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(key: str, raw: str, annotation):
    raw = raw.strip()
    origin = get_origin(annotation)
    try:
        if origin in (list, List):
            (item_type,) = get_args(annotation)
            if not raw:
                return []
            return [_parse(key, part, item_type) for part in raw.split(",")]
        if annotation is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if annotation is int:
            return int(raw)
        if annotation is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"Cannot parse '{raw}' for key '{key}'")


def _section_fields(section) -> Dict[str, dataclasses.Field]:
    return {_key(f.name): f for f in dataclasses.fields(section)}


def from_pairs(pairs: Iterable[Tuple[str, str]], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """
    Apply (dotted key, raw string) pairs on top of ``base`` (defaults if None).
    """
    base = base or ExperimentConfig()
    top_hints = get_type_hints(ExperimentConfig)
    sections = {
        f.name: dict(dataclasses.asdict(getattr(base, f.name)))
        for f in dataclasses.fields(base)
        if dataclasses.is_dataclass(getattr(base, f.name))
    }
    top = {f.name: getattr(base, f.name) for f in dataclasses.fields(base) if f.name not in sections}
    for key, raw in pairs:
        key = key.strip()
        section, _, name = key.partition(".")
        if not name:
            if section not in top:
                raise ConfigError(f"Unknown config key '{key}'")
            top[section] = _parse(key, raw, top_hints[section])
            continue
        if section not in sections:
            raise ConfigError(f"Unknown config section '{section}' in key '{key}'")
        section_type = top_hints[section]
        known = _section_fields(section_type)
        if name not in known:
            raise ConfigError(f"Unknown config key '{key}'")
        target = known[name]
        sections[section][target.name] = _parse(key, raw, get_type_hints(section_type)[target.name])
    built = {name: top_hints[name](**values) for name, values in sections.items()}
    return ExperimentConfig(**top, **built)


_COMMENT = re.compile(r"(?:^|\s)#")


def parse_text(text: str) -> List[Tuple[str, str]]:
    pairs = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = _COMMENT.split(line, maxsplit=1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Line {number}: expected 'key = value', got '{line}'")
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(path: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """
    Read a config file, then apply ``overrides``.

    :raises FileNotFoundError: When the file does not exist.
    :raises ConfigError: On unknown keys or bad values.
    """
    with open(path, "r", encoding="utf-8") as f:
        config = from_pairs(parse_text(f.read()))
    if overrides:
        config = config.with_overrides(overrides)
    return config
