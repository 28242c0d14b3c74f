"""
File formats: PGM frames, CSV tables, predictor parameter blobs and run manifests.
"""
import json
import logging
import platform
import struct
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import PIL
import pydantic
import scipy
from PIL import Image

from . import __version__
from .appearance import Frame
from .config import TrackerConfig
from .errors import InvalidArgumentError
from .seqnet import SeqNetParams
from .simulator import TRUTH_COLUMNS
from .trajectory_gan import Trajectory

logger = logging.getLogger(__name__)

FRAME_PATTERN = "frame_{:05d}.pgm"
TRUTH_FILE = "truth.csv"
MANIFEST_FILE = "manifest.json"
PARAMS_MAGIC = b'OTPB'

RESULT_REQUIRED = ['frame', 'cx', 'cy', 'w', 'h', 'mode', 'epsilon', 'occluded']
TRAJECTORY_COLUMNS = ['frame_id', 'x', 'y', 'track_id']


def write_pgm(path, frame: Frame) -> None:
    """Binary (P5) 8-bit grayscale"""
    data = np.round(frame.pixels * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path, format='PPM')


def read_pgm(path) -> Frame:
    with Image.open(path) as image:
        data = np.asarray(image.convert('L'), dtype=np.float64) / 255.0
    return Frame.from_array(data)


def write_sequence(directory, frames: Sequence[Frame], truth: Optional[pd.DataFrame] = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, frame in enumerate(frames):
        write_pgm(directory / FRAME_PATTERN.format(index), frame)
    if truth is not None:
        write_table(directory / TRUTH_FILE, truth)
    logger.info(f"Wrote {len(frames)} frames to {directory}")
    return directory


def read_sequence(directory) -> Tuple[List[Frame], Optional[pd.DataFrame]]:
    """Frames in file-name order plus the truth table when present"""
    directory = Path(directory)
    paths = sorted(directory.glob("*.pgm"))
    if not paths:
        raise InvalidArgumentError(f"no PGM frames found in {directory}")
    frames = [read_pgm(p) for p in paths]
    truth_path = directory / TRUTH_FILE
    truth = read_truth(truth_path) if truth_path.exists() else None
    logger.info(f"Read {len(frames)} frames from {directory}")
    return frames, truth


def write_table(path, table: pd.DataFrame) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)


def _read_csv(path, required: Iterable[str], what: str) -> pd.DataFrame:
    try:
        table = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InvalidArgumentError(f"cannot read {what} CSV {path}: {e}") from e
    missing = [c for c in required if c not in table.columns]
    if missing:
        raise InvalidArgumentError(f"{what} CSV {path} lacks columns {missing}")
    return table


def read_truth(path) -> pd.DataFrame:
    return _read_csv(path, TRUTH_COLUMNS, 'truth')


def read_results(path) -> pd.DataFrame:
    return _read_csv(path, RESULT_REQUIRED, 'results')


def trajectories_to_frame(trajectories: Sequence[Trajectory]) -> pd.DataFrame:
    rows = [{'frame_id': f, 'x': float(x), 'y': float(y), 'track_id': track}
            for track, traj in enumerate(trajectories)
            for f, (x, y) in zip(traj.frame_ids, traj.points)]
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def write_trajectories(path, trajectories: Sequence[Trajectory]) -> None:
    write_table(path, trajectories_to_frame(trajectories))


def read_trajectories(path) -> List[Trajectory]:
    """One Trajectory per track_id, ordered by frame"""
    table = _read_csv(path, TRAJECTORY_COLUMNS, 'trajectory')
    trajectories = []
    for _, group in table.sort_values(['track_id', 'frame_id']).groupby('track_id', sort=True):
        trajectories.append(Trajectory(group[['x', 'y']].to_numpy(dtype=np.float64),
                                       tuple(group['frame_id'].astype(int))))
    logger.info(f"Read {len(trajectories)} trajectories from {path}")
    return trajectories


def write_params(path, params: SeqNetParams) -> None:
    """Magic, little-endian uint32 header length, JSON header, little-endian float64 vector"""
    header = json.dumps(params.header()).encode('utf-8')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(PARAMS_MAGIC)
        f.write(struct.pack('<I', len(header)))
        f.write(header)
        f.write(params.vector.astype('<f8').tobytes())


def read_params(path) -> SeqNetParams:
    data = Path(path).read_bytes()
    if data[:4] != PARAMS_MAGIC or len(data) < 8:
        raise InvalidArgumentError(f"{path} is not a predictor parameter file")
    (length,) = struct.unpack('<I', data[4:8])
    try:
        header = json.loads(data[8:8 + length].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InvalidArgumentError(f"corrupt parameter header in {path}: {e}") from e
    vector = np.frombuffer(data[8 + length:], dtype='<f8').astype(np.float64)
    params = SeqNetParams(header['kind'], vector, header['hidden_size'], header['noise_dim'],
                          header['t_obs'], header['n_pred'], header['unit'])
    if [[n, list(s)] for n, s in params.layout] != header['layout']:
        raise InvalidArgumentError(f"layout in {path} does not match its header")
    return params


def companion_path(path, suffix: str) -> Path:
    """params.bin -> params.<suffix>.bin"""
    path = Path(path)
    return path.with_name(f"{path.stem}.{suffix}{path.suffix}")


def _versions() -> Dict[str, str]:
    return {
        'occlusion-aware-tracker': __version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'pillow': PIL.__version__,
        'pydantic': pydantic.VERSION,
    }


def write_manifest(directory, config: TrackerConfig, command: Optional[Sequence[str]] = None,
                   extra: Optional[Dict] = None) -> Path:
    """Record configuration, seeds, versions and the command line beside a run's outputs"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        'command': list(command if command is not None else sys.argv),
        'config': config.to_dict(),
        'seeds': {'pipeline': config.pipeline.seed, 'gan': config.gan.seed},
        'versions': _versions(),
    }
    if extra:
        manifest.update(extra)
    path = directory / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=2, default=str), encoding='utf-8')
    logger.debug(f"Wrote manifest {path}")
    return path
