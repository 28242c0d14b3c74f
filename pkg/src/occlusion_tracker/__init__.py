"""
Occlusion-aware single-target tracker
"""
__version__ = "0.1.0"

# Import main classes for easier access
from .config import (TrackerConfig, OcclusionConfig, AppearanceConfig, PipelineConfig, GanTrainConfig, LossWeights,
                     FinetuneConfig)
from .pipeline import run_sequence, track_appearance_only
from .simulator import ScenarioSpec, simulate
from .metrics import MetricsReport, evaluate
from .finetune import ScoreCalibration, finetune_calibration
