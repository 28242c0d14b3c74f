"""
Configuration classes for the occlusion-aware tracker
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from dotenv import load_dotenv

from .errors import SpecValidationError

logger = logging.getLogger(__name__)

ENV_PREFIX = "OT_"
CONFIG_PATH_ENV = "OCCLUSION_TRACKER_CONFIG"


class Criterion(str, Enum):
    """Which quantity decides occlusion"""
    DISTANCE = "DISTANCE"
    SCORE = "SCORE"
    COMPOSITE = "COMPOSITE"


@dataclass(frozen=True)
class OcclusionConfig:
    """Occlusion judgment thresholds and weights"""
    level_weights: Tuple[float, float, float] = (0.2, 0.5, 0.3)
    distance_threshold: float = 3.25
    score_threshold: float = 0.85
    mix_weight: float = 0.8
    epsilon_threshold: float = 0.85
    score_norm: float = 0.95
    distance_norm: float = 5.5
    criterion: Criterion = Criterion.COMPOSITE
    top_k: int = 4

    def __post_init__(self):
        object.__setattr__(self, 'level_weights', tuple(float(w) for w in self.level_weights))
        object.__setattr__(self, 'criterion', Criterion(self.criterion))
        _raise_if(self.validate())

    def validate(self) -> List[str]:
        errors = []
        if len(self.level_weights) != 3:
            errors.append("occlusion.level_weights needs exactly three weights")
        elif any(w < 0 for w in self.level_weights) or abs(sum(self.level_weights) - 1.0) > 1e-9:
            errors.append("occlusion.level_weights must be non-negative and sum to 1")
        if not 0.0 <= self.mix_weight <= 1.0:
            errors.append("occlusion.mix_weight must lie in [0, 1]")
        for name in ('distance_threshold', 'score_threshold', 'epsilon_threshold'):
            if getattr(self, name) < 0:
                errors.append(f"occlusion.{name} must be non-negative")
        if not 0.0 <= self.score_threshold <= 1.0:
            errors.append("occlusion.score_threshold must lie in [0, 1]")
        if self.score_norm <= 0 or self.distance_norm <= 0:
            errors.append("occlusion.score_norm and occlusion.distance_norm must be positive")
        if self.top_k < 1:
            errors.append("occlusion.top_k must be at least 1")
        return errors


@dataclass(frozen=True)
class AppearanceConfig:
    """Template-correlation stand-in for the backbone"""
    context_factor: float = 2.0
    grid_size: int = 17
    sigmas: Tuple[float, float, float] = (1.0, 2.0, 4.0)
    min_contrast_ratio: float = 0.05
    # logistic calibration of the positive score, identity by default
    score_slope: float = 1.0
    score_bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'sigmas', tuple(float(s) for s in self.sigmas))
        _raise_if(self.validate())

    def validate(self) -> List[str]:
        errors = []
        if self.context_factor < 1.0:
            errors.append("appearance.context_factor must be at least 1")
        if self.grid_size < 1:
            errors.append("appearance.grid_size must be positive")
        if len(self.sigmas) != 3 or any(s < 0 for s in self.sigmas):
            errors.append("appearance.sigmas needs three non-negative values")
        if self.min_contrast_ratio < 0:
            errors.append("appearance.min_contrast_ratio must be non-negative")
        if not (0 < self.score_slope < float('inf')) or not abs(self.score_bias) < float('inf'):
            errors.append("appearance.score_slope must be positive and appearance.score_bias finite")
        return errors


@dataclass(frozen=True)
class PipelineConfig:
    """Tracking state machine settings"""
    t_obs: int = 4
    n_pred: int = 2
    history_size: int = 16
    max_predict: int = 20
    seed: int = 0

    def __post_init__(self):
        _raise_if(self.validate())

    def validate(self) -> List[str]:
        errors = []
        if self.t_obs < 2:
            errors.append("pipeline.t_obs must be at least 2")
        if self.n_pred < 1:
            errors.append("pipeline.n_pred must be at least 1")
        if self.history_size < self.t_obs:
            errors.append("pipeline.history_size must be at least t_obs")
        if self.max_predict < 1:
            errors.append("pipeline.max_predict must be at least 1")
        return errors


@dataclass(frozen=True)
class GanTrainConfig:
    """Trajectory GAN architecture and optimizer settings"""
    lr_g: float = 0.02
    lr_d: float = 0.01
    batch_size: int = 32
    steps: int = 2000
    d_steps: int = 1
    noise_dim: int = 8
    hidden_size: int = 32
    seed: int = 0
    t_obs: int = 4
    n_pred: int = 2
    momentum: float = 0.9
    field_size: float = 100.0
    motion_scale: float = 0.01
    l2_weight: float = 1.0
    clip_norm: float = 5.0

    def __post_init__(self):
        _raise_if(self.validate())

    def validate(self) -> List[str]:
        errors = []
        for name in ('batch_size', 'steps', 'd_steps', 'hidden_size', 'n_pred'):
            if getattr(self, name) < 1:
                errors.append(f"gan.{name} must be positive")
        if self.t_obs < 2:
            errors.append("gan.t_obs must be at least 2")
        if self.noise_dim < 0:
            errors.append("gan.noise_dim must be non-negative")
        if self.lr_g < 0 or self.lr_d < 0:
            errors.append("gan learning rates must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            errors.append("gan.momentum must lie in [0, 1)")
        if self.field_size <= 0 or self.motion_scale <= 0:
            errors.append("gan.field_size and gan.motion_scale must be positive")
        if self.l2_weight < 0 or self.clip_norm <= 0:
            errors.append("gan.l2_weight must be non-negative and gan.clip_norm positive")
        return errors


@dataclass(frozen=True)
class FinetuneConfig:
    """Occlusion-supervised fine-tuning of the score calibration"""
    steps: int = 500
    lr: float = 0.05
    momentum: float = 0.9
    clip_norm: float = 5.0

    def __post_init__(self):
        _raise_if(self.validate())

    def validate(self) -> List[str]:
        errors = []
        if self.steps < 1:
            errors.append("finetune.steps must be positive")
        if self.lr < 0:
            errors.append("finetune.lr must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            errors.append("finetune.momentum must lie in [0, 1)")
        if self.clip_norm <= 0:
            errors.append("finetune.clip_norm must be positive")
        return errors


@dataclass(frozen=True)
class LossWeights:
    """Weights of the classification / regression loss terms"""
    lambda_pos: float = 1.0
    lambda_neg: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        _raise_if(self.validate())

    def validate(self) -> List[str]:
        errors = []
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value >= 0 and value != float('inf')):
                errors.append(f"loss.{f.name} must be finite and non-negative")
        return errors


SECTIONS = {
    'occlusion': OcclusionConfig,
    'appearance': AppearanceConfig,
    'pipeline': PipelineConfig,
    'gan': GanTrainConfig,
    'loss': LossWeights,
    'finetune': FinetuneConfig,
}

# Environment overrides: variable name -> (section, field)
ENV_OVERRIDES = {
    "DISTANCE_THRESHOLD": ('occlusion', 'distance_threshold'),
    "SCORE_THRESHOLD": ('occlusion', 'score_threshold'),
    "EPSILON_THRESHOLD": ('occlusion', 'epsilon_threshold'),
    "MIX_WEIGHT": ('occlusion', 'mix_weight'),
    "CRITERION": ('occlusion', 'criterion'),
    "TOP_K": ('occlusion', 'top_k'),
    "GRID_SIZE": ('appearance', 'grid_size'),
    "CONTEXT_FACTOR": ('appearance', 'context_factor'),
    "T_OBS": ('pipeline', 't_obs'),
    "N_PRED": ('pipeline', 'n_pred'),
    "MAX_PREDICT": ('pipeline', 'max_predict'),
    "SEED": ('pipeline', 'seed'),
    "GAN_STEPS": ('gan', 'steps'),
    "GAN_SEED": ('gan', 'seed'),
}


@dataclass(frozen=True)
class TrackerConfig:
    """Root configuration for the occlusion-aware tracker"""
    occlusion: OcclusionConfig = field(default_factory=OcclusionConfig)
    appearance: AppearanceConfig = field(default_factory=AppearanceConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    gan: GanTrainConfig = field(default_factory=GanTrainConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrackerConfig':
        """Build a configuration from nested section dictionaries"""
        unknown = set(data) - set(SECTIONS) - {'manifest'}
        errors = [f"unknown configuration section '{name}'" for name in sorted(unknown)]
        sections = {}
        for name, section_cls in SECTIONS.items():
            values = dict(data.get(name) or {})
            known = {f.name for f in fields(section_cls)}
            errors.extend(f"unknown field '{name}.{key}'" for key in sorted(set(values) - known))
            values = {k: v for k, v in values.items() if k in known}
            try:
                sections[name] = section_cls(**values)
            except SpecValidationError as e:
                errors.extend(e.errors)
            except TypeError as e:
                errors.append(f"{name}: {e}")
        _raise_if(errors)
        return cls(**sections)

    @classmethod
    def from_file(cls, path) -> 'TrackerConfig':
        """Load a JSON configuration file"""
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except FileNotFoundError as e:
            raise SpecValidationError(f"configuration file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise SpecValidationError(f"configuration file {path} is not valid JSON: {e}") from e
        logger.info(f"Loaded configuration from {path}")
        return cls.from_dict(data)

    @classmethod
    def from_env(cls, env_loaded: bool = False) -> 'TrackerConfig':
        """Create configuration from the environment and an optional .env file"""
        if not env_loaded:
            env_paths = [
                Path(".env"),
                Path("../.env"),
                Path.cwd() / ".env",
            ]
            for env_path in env_paths:
                if env_path.exists():
                    load_dotenv(env_path, override=True)
                    logger.info(f"Loaded environment from: {env_path.absolute()}")
                    break

        config_path = os.environ.get(CONFIG_PATH_ENV)
        config = cls.from_file(config_path) if config_path else cls()

        overrides = []
        for suffix, (section, name) in ENV_OVERRIDES.items():
            value = os.environ.get(ENV_PREFIX + suffix)
            if value is not None:
                overrides.append(f"{section}.{name}={value}")
        return config.with_overrides(overrides) if overrides else config

    def with_overrides(self, assignments: Iterable[str]) -> 'TrackerConfig':
        """Apply 'section.field=value' assignments, coercing to the field's type"""
        data = self.to_dict()
        errors = []
        for assignment in assignments:
            key, sep, raw = assignment.partition('=')
            section, dot, name = key.strip().partition('.')
            if not sep or not dot or section not in data or name not in data[section]:
                errors.append(f"invalid override '{assignment}' (expected section.field=value)")
                continue
            try:
                data[section][name] = _coerce(data[section][name], raw.strip())
            except ValueError as e:
                errors.append(f"invalid value for {key}: {e}")
        _raise_if(errors)
        return TrackerConfig.from_dict(data)

    def replace(self, **sections) -> 'TrackerConfig':
        return replace(self, **sections)

    def to_dict(self) -> Dict[str, Any]:
        data = {}
        for name in SECTIONS:
            section = asdict(getattr(self, name))
            data[name] = {k: (v.value if isinstance(v, Enum) else list(v) if isinstance(v, tuple) else v)
                          for k, v in section.items()}
        return data


def _coerce(current: Any, raw: str) -> Any:
    if isinstance(current, bool):
        return raw.lower() in ('1', 'true', 'yes')
    if isinstance(current, int):
        try:
            return int(raw)
        except ValueError:
            return float(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list):
        return [float(v) for v in raw.split(',')]
    return raw.upper() if raw.lower() in ('distance', 'score', 'composite') else raw


def _raise_if(errors: List[str]) -> None:
    if errors:
        for error in errors:
            logger.debug(f"Configuration error: {error}")
        raise SpecValidationError(errors)


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> TrackerConfig:
    """Load configuration from a file when given, the environment otherwise"""
    config = TrackerConfig.from_file(path) if path else TrackerConfig.from_env()
    overrides = list(overrides)
    return config.with_overrides(overrides) if overrides else config
