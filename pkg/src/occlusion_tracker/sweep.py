"""
Threshold sweeps: run the full tracker over a set of scenarios for every value
of one occlusion parameter and tabulate the pooled metrics.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .config import Criterion, TrackerConfig
from .errors import InvalidArgumentError
from .metrics import as_results_frame, evaluate
from .pipeline import run_sequence
from .simulator import ScenarioSpec, simulate

logger = logging.getLogger(__name__)

# Parameter name -> OcclusionConfig field
PARAMETERS = {
    'd_t': 'distance_threshold',
    's_t': 'score_threshold',
    'epsilon_t': 'epsilon_threshold',
    'i': 'mix_weight',
}
ALIASES = {field: name for name, field in PARAMETERS.items()}
ALIASES.update({'eps_t': 'epsilon_t', 'ε_t': 'epsilon_t'})


def _grid(start: float, stop: float, step: float) -> Tuple[float, ...]:
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + k * step, 10) for k in range(count))


# Threshold grids of the indicator comparison: values, criterion, fixed settings
TABLE_GRIDS: Dict[str, Dict] = {
    'd_t': {'values': (3.0, 3.25, 3.5, 3.75, 4.0, 4.5, 5.0, 5.5, 6.0),
            'criterion': Criterion.DISTANCE, 'fixed': {}},
    's_t': {'values': _grid(0.55, 0.95, 0.05), 'criterion': Criterion.SCORE, 'fixed': {}},
    'epsilon_t': {'values': _grid(0.55, 0.95, 0.05), 'criterion': Criterion.COMPOSITE,
                  'fixed': {'mix_weight': 0.5}},
    'i': {'values': _grid(0.1, 0.9, 0.1), 'criterion': Criterion.COMPOSITE,
          'fixed': {'epsilon_threshold': 0.85}},
}

SWEEP_COLUMNS = ['parameter', 'value', 'criterion', 'scenarios', 'frames', 'mean_iou', 'failures',
                 'occlusion_precision', 'occlusion_recall', 'predictor_ade', 'post_occlusion_success']


def canonical_parameter(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PARAMETERS:
        raise InvalidArgumentError(f"unknown sweep parameter '{name}', expected one of {sorted(PARAMETERS)}")
    return name


def parse_values(text: str) -> List[float]:
    """Either 'start:stop:step' (inclusive) or a comma-separated list"""
    try:
        if ':' in text:
            start, stop, step = (float(v) for v in text.split(':'))
            if step <= 0 or stop < start:
                raise InvalidArgumentError(f"invalid range '{text}'")
            return list(_grid(start, stop, step))
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"cannot parse values '{text}': {e}") from e


def configure(base: TrackerConfig, parameter: str, value: float,
              criterion: Optional[Criterion] = None, fixed: Optional[Dict] = None) -> TrackerConfig:
    """Config with one occlusion parameter set, plus any fixed settings and criterion"""
    changes = dict(fixed or {})
    changes[PARAMETERS[canonical_parameter(parameter)]] = float(value)
    if criterion is not None:
        changes['criterion'] = Criterion(criterion)
    return base.replace(occlusion=replace(base.occlusion, **changes))


def _run_scenario(scenario, cfg: TrackerConfig, predictor) -> Tuple[pd.DataFrame, pd.DataFrame]:
    frames, truth = simulate(scenario)
    results = run_sequence(frames, scenario.initial_box(), predictor, cfg, truth)
    return as_results_frame(results), truth


def run_scenarios(scenarios: Sequence[ScenarioSpec], cfg: TrackerConfig, predictor=None,
                  workers: int = 1) -> List[Tuple[pd.DataFrame, pd.DataFrame]]:
    """(results, truth) per scenario, on a thread pool when workers > 1"""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: _run_scenario(s, cfg, predictor), scenarios))
    return [_run_scenario(s, cfg, predictor) for s in scenarios]


def _pool(runs: Sequence[Tuple[pd.DataFrame, pd.DataFrame]]) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Concatenate runs with frame ids shifted so scenarios never collide"""
    results, truths, offset = [], [], 0
    for index, (res, truth) in enumerate(runs):
        results.append(res.assign(frame=res['frame'] + offset))
        truths.append(truth.assign(frame=truth['frame'] + offset, sequence=index))
        offset += int(truth['frame'].max()) + 1
    return pd.concat(results, ignore_index=True), pd.concat(truths, ignore_index=True)


def sweep(scenarios: Sequence[ScenarioSpec], parameter: str, values: Sequence[float],
          base_cfg: Optional[TrackerConfig] = None, predictor=None,
          criterion: Optional[Criterion] = None, fixed: Optional[Dict] = None,
          workers: int = 1) -> pd.DataFrame:
    """
    One row per value: every scenario tracked with that value, metrics pooled over all frames.

    Scenario runs are independent; with workers > 1 they run on a thread pool.
    """
    parameter = canonical_parameter(parameter)
    values = list(values)
    if not values:
        raise InvalidArgumentError("sweep needs at least one value")
    if not scenarios:
        raise InvalidArgumentError("sweep needs at least one scenario")
    base_cfg = base_cfg or TrackerConfig()

    rows = []
    for value in values:
        cfg = configure(base_cfg, parameter, value, criterion, fixed)
        report = evaluate(*_pool(run_scenarios(scenarios, cfg, predictor, workers)))
        logger.info(f"{parameter}={value}: mean IoU {report.mean_iou:.3f}, failures {report.failures}")
        rows.append({
            'parameter': parameter,
            'value': float(value),
            'criterion': cfg.occlusion.criterion.value,
            'scenarios': len(scenarios),
            **report.to_dict(),
        })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep_preset(scenarios: Sequence[ScenarioSpec], parameter: str, base_cfg: Optional[TrackerConfig] = None,
                 predictor=None, workers: int = 1) -> pd.DataFrame:
    """Sweep one of the TABLE_GRIDS rows with its criterion and fixed settings"""
    parameter = canonical_parameter(parameter)
    preset = TABLE_GRIDS[parameter]
    return sweep(scenarios, parameter, preset['values'], base_cfg, predictor,
                 criterion=preset['criterion'], fixed=preset['fixed'], workers=workers)
