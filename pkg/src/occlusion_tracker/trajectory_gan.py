"""
Adversarial trajectory prediction.

A recurrent generator turns the last t_obs target centers plus a noise vector
into n_pred future centers; a recurrent discriminator scores full
(observed + future) trajectories as real or generated. Both networks work on
per-frame displacements expressed in ``field_size * motion_scale`` pixel
units, so predictions are translation equivariant.

Displacements rather than absolute positions normalized to [0, 1] are fed to
the networks. With ``motion_scale = 1`` one unit is the field width, which is
the [0, 1] field normalization applied to differences; the default smaller
scale keeps one-pixel steps away from the tanh saturation floor. Predictions
are returned in pixels either way.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import GanTrainConfig
from .errors import InvalidArgumentError, OcclusionTrackerError
from .seqnet import (DISCRIMINATOR, GENERATOR, SeqNetParams, discriminator_backward,
                     discriminator_run, generator_backward, generator_run, sigmoid)

logger = logging.getLogger(__name__)

PROB_EPS = 1e-7
MOTION_FAMILIES = ('linear', 'sinusoidal', 'mixed')


@dataclass(frozen=True)
class Trajectory:
    """Ordered target centers (px) with strictly increasing frame ids"""
    points: np.ndarray
    frame_ids: Tuple[int, ...]

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        frame_ids = tuple(int(f) for f in self.frame_ids)
        if points.shape[0] < 1 or points.shape[0] != len(frame_ids):
            raise InvalidArgumentError(
                f"trajectory needs matching non-empty points and frame ids, got {points.shape[0]} and {len(frame_ids)}"
            )
        if any(b <= a for a, b in zip(frame_ids, frame_ids[1:])):
            raise InvalidArgumentError("trajectory frame ids must be strictly increasing")
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("trajectory points must be finite")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'frame_ids', frame_ids)

    def __len__(self) -> int:
        return len(self.frame_ids)

    @classmethod
    def from_points(cls, points, start_frame: int = 0) -> 'Trajectory':
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(points, tuple(range(start_frame, start_frame + points.shape[0])))

    def translate(self, offset) -> 'Trajectory':
        return Trajectory(self.points + np.asarray(offset, dtype=np.float64), self.frame_ids)

    def window(self, start: int, stop: int) -> 'Trajectory':
        return Trajectory(self.points[start:stop], self.frame_ids[start:stop])

    def tail(self, count: int) -> 'Trajectory':
        return self.window(len(self) - count, len(self))

    def concat(self, other: 'Trajectory') -> 'Trajectory':
        return Trajectory(np.vstack([self.points, other.points]), self.frame_ids + other.frame_ids)


@dataclass(frozen=True)
class TrajSplit:
    """Observed prefix and the future the predictor should produce"""
    observed: Trajectory
    future: Trajectory

    def __post_init__(self):
        if self.observed.frame_ids[-1] >= self.future.frame_ids[0]:
            raise InvalidArgumentError("observed frames must all precede future frames")

    @property
    def full(self) -> Trajectory:
        return self.observed.concat(self.future)


def split_trajectory(traj: Trajectory, t_obs: int, n_pred: int, anchor: Optional[int] = None) -> TrajSplit:
    """Observed = the t_obs points before anchor, future = the n_pred points from anchor"""
    anchor = t_obs if anchor is None else anchor
    if anchor < t_obs or anchor + n_pred > len(traj):
        raise InvalidArgumentError(
            f"trajectory of length {len(traj)} is too short for t_obs={t_obs}, n_pred={n_pred} at {anchor}"
        )
    return TrajSplit(traj.window(anchor - t_obs, anchor), traj.window(anchor, anchor + n_pred))


def sliding_splits(trajectories: Sequence[Trajectory], t_obs: int, n_pred: int, stride: int = 1) -> List[TrajSplit]:
    """Every (observed, future) window of each trajectory, anchors spaced by stride"""
    if stride < 1:
        raise InvalidArgumentError("stride must be positive")
    splits = []
    for traj in trajectories:
        for anchor in range(t_obs, len(traj) - n_pred + 1, stride):
            splits.append(split_trajectory(traj, t_obs, n_pred, anchor))
    if not splits:
        raise InvalidArgumentError(f"no trajectory has the {t_obs + n_pred} points a window needs")
    return splits


def _check_params(params: SeqNetParams, kind: str) -> None:
    if params.kind != kind:
        raise InvalidArgumentError(f"expected {kind} parameters, got {params.kind}")


def generator_forward(params: SeqNetParams, observed: Trajectory, noise,
                      n_pred: Optional[int] = None) -> Trajectory:
    """Predict the next n_pred centers following the observed ones"""
    _check_params(params, GENERATOR)
    noise = np.asarray(noise, dtype=np.float64).ravel()
    if len(observed) != params.t_obs:
        raise InvalidArgumentError(f"generator expects {params.t_obs} observed points, got {len(observed)}")
    if noise.size != params.noise_dim:
        raise InvalidArgumentError(f"generator expects noise of length {params.noise_dim}, got {noise.size}")
    n_pred = params.n_pred if n_pred is None else n_pred
    if n_pred < 1:
        raise InvalidArgumentError("n_pred must be positive")

    deltas = np.diff(observed.points, axis=0)[None] / params.unit
    trace = generator_run(params, deltas, noise[None], n_pred)
    points = observed.points[-1] + np.cumsum(trace.outputs[0] * params.unit, axis=0)
    last = observed.frame_ids[-1]
    return Trajectory(points, tuple(range(last + 1, last + 1 + n_pred)))


def discriminator_forward(params: SeqNetParams, full_traj: Trajectory) -> float:
    """Probability that a full trajectory is real"""
    _check_params(params, DISCRIMINATOR)
    expected = params.t_obs + params.n_pred
    if len(full_traj) != expected:
        raise InvalidArgumentError(f"discriminator expects {expected} points, got {len(full_traj)}")
    deltas = np.diff(full_traj.points, axis=0)[None] / params.unit
    return float(sigmoid(discriminator_run(params, deltas).logits)[0])


def _clamped(values) -> np.ndarray:
    return np.clip(np.asarray(values, dtype=np.float64).ravel(), PROB_EPS, 1.0 - PROB_EPS)


def gan_loss(d_real, d_fake) -> Tuple[float, float]:
    """Return (g_loss, d_loss): non-saturating generator loss and the standard discriminator loss"""
    real, fake = _clamped(d_real), _clamped(d_fake)
    d_loss = -np.mean(np.log(real)) - np.mean(np.log1p(-fake))
    g_loss = -np.mean(np.log(fake))
    return float(g_loss), float(d_loss)


def gan_loss_grads(d_real, d_fake) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (d d_loss/d d_real, d d_loss/d d_fake, d g_loss/d d_fake)"""
    real = np.asarray(d_real, dtype=np.float64).ravel()
    fake = np.asarray(d_fake, dtype=np.float64).ravel()
    real_in = (real > PROB_EPS) & (real < 1.0 - PROB_EPS)
    fake_in = (fake > PROB_EPS) & (fake < 1.0 - PROB_EPS)
    cr, cf = _clamped(real), _clamped(fake)
    d_real_grad = np.where(real_in, -1.0 / (real.size * cr), 0.0)
    d_fake_grad = np.where(fake_in, 1.0 / (fake.size * (1.0 - cf)), 0.0)
    g_fake_grad = np.where(fake_in, -1.0 / (fake.size * cf), 0.0)
    return d_real_grad, d_fake_grad, g_fake_grad


def ade(predicted: Trajectory, label: Trajectory) -> float:
    """Average displacement error: mean Euclidean distance between matching points"""
    if len(predicted) != len(label):
        raise InvalidArgumentError(f"ADE needs equal lengths, got {len(predicted)} and {len(label)}")
    return float(np.mean(np.linalg.norm(predicted.points - label.points, axis=1)))


class MomentumSGD:
    """SGD with momentum and global-norm gradient clipping, updating a vector in place"""

    def __init__(self, size: int, lr: float, momentum: float, clip_norm: float):
        self.lr = lr
        self.momentum = momentum
        self.clip_norm = clip_norm
        self.velocity = np.zeros(size)

    def step(self, theta: np.ndarray, grad: np.ndarray) -> float:
        norm = float(np.linalg.norm(grad))
        if norm > self.clip_norm:
            grad = grad * (self.clip_norm / norm)
        self.velocity = self.momentum * self.velocity - self.lr * grad
        theta += self.velocity
        return norm


@dataclass
class TrainingStep:
    step: int
    d_loss: float
    g_loss: float
    l2_loss: float
    grad_norm_d: float
    grad_norm_g: float


@dataclass
class TrainingLog:
    """Per-step losses of one training run"""
    steps: List[TrainingStep] = field(default_factory=list)

    def append(self, entry: TrainingStep) -> None:
        self.steps.append(entry)

    def __len__(self) -> int:
        return len(self.steps)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(s) for s in self.steps],
                            columns=['step', 'd_loss', 'g_loss', 'l2_loss', 'grad_norm_d', 'grad_norm_g'])


def _split_arrays(data: Sequence[TrajSplit], cfg: GanTrainConfig, unit: float) -> Tuple[np.ndarray, np.ndarray]:
    """Observed and future displacements in network units: (N, t_obs - 1, 2), (N, n_pred, 2)"""
    if not data:
        raise InvalidArgumentError("training data is empty")
    bad = [i for i, s in enumerate(data) if len(s.observed) != cfg.t_obs or len(s.future) != cfg.n_pred]
    if bad:
        raise InvalidArgumentError(
            f"{len(bad)} splits do not match t_obs={cfg.t_obs}, n_pred={cfg.n_pred} (first at index {bad[0]})"
        )
    obs = np.stack([s.observed.points for s in data])
    fut = np.stack([s.future.points for s in data])
    obs_u = np.diff(obs, axis=1) / unit
    fut_u = np.diff(np.concatenate([obs[:, -1:], fut], axis=1), axis=1) / unit
    return obs_u, fut_u


def train_gan(data: Sequence[TrajSplit], cfg: GanTrainConfig) -> Tuple[SeqNetParams, SeqNetParams, TrainingLog]:
    """Alternate discriminator and generator updates; reproducible for a fixed seed"""
    unit = cfg.field_size * cfg.motion_scale
    obs_u, fut_u = _split_arrays(data, cfg, unit)
    full_u = np.concatenate([obs_u, fut_u], axis=1)
    n_samples, n_obs_steps = obs_u.shape[0], obs_u.shape[1]
    batch = cfg.batch_size

    rng = np.random.default_rng(cfg.seed)
    gen = SeqNetParams.initialize(GENERATOR, cfg.hidden_size, cfg.noise_dim, cfg.t_obs, cfg.n_pred, rng, unit)
    disc = SeqNetParams.initialize(DISCRIMINATOR, cfg.hidden_size, 0, cfg.t_obs, cfg.n_pred, rng, unit)
    theta_g, theta_d = gen.vector.copy(), disc.vector.copy()
    opt_g = MomentumSGD(theta_g.size, cfg.lr_g, cfg.momentum, cfg.clip_norm)
    opt_d = MomentumSGD(theta_d.size, cfg.lr_d, cfg.momentum, cfg.clip_norm)
    log = TrainingLog()

    logger.info(f"Training trajectory GAN on {n_samples} splits for {cfg.steps} steps "
                f"(t_obs={cfg.t_obs}, n_pred={cfg.n_pred}, H={cfg.hidden_size}, Z={cfg.noise_dim})")

    for step in range(cfg.steps):
        d_loss = norm_d = 0.0
        for _ in range(cfg.d_steps):
            idx = rng.integers(0, n_samples, size=batch)
            noise = rng.standard_normal((batch, cfg.noise_dim))
            fake = np.concatenate([obs_u[idx], generator_run(gen, obs_u[idx], noise).outputs], axis=1)
            real_trace = discriminator_run(disc, full_u[idx])
            fake_trace = discriminator_run(disc, fake)
            p_real, p_fake = sigmoid(real_trace.logits), sigmoid(fake_trace.logits)
            _, d_loss = gan_loss(p_real, p_fake)
            g_real, g_fake, _ = gan_loss_grads(p_real, p_fake)
            grad_real, _ = discriminator_backward(disc, real_trace, g_real * p_real * (1.0 - p_real))
            grad_fake, _ = discriminator_backward(disc, fake_trace, g_fake * p_fake * (1.0 - p_fake))
            norm_d = opt_d.step(theta_d, grad_real + grad_fake)
            disc = disc.with_vector(_finite(theta_d, step))

        idx = rng.integers(0, n_samples, size=batch)
        noise = rng.standard_normal((batch, cfg.noise_dim))
        trace = generator_run(gen, obs_u[idx], noise)
        fake_trace = discriminator_run(disc, np.concatenate([obs_u[idx], trace.outputs], axis=1))
        p_fake = sigmoid(fake_trace.logits)
        g_loss = float(-np.mean(np.log(_clamped(p_fake))))
        _, _, g_grad = gan_loss_grads(p_fake, p_fake)
        _, d_inputs = discriminator_backward(disc, fake_trace, g_grad * p_fake * (1.0 - p_fake))
        d_outputs = d_inputs[:, n_obs_steps:]

        # squared error on integrated positions, propagated back to each displacement
        pos_err = np.cumsum(trace.outputs - fut_u[idx], axis=1)
        l2_loss = float(np.mean(np.sum(pos_err ** 2, axis=2)))
        d_pos = 2.0 * pos_err / (batch * cfg.n_pred)
        d_outputs = d_outputs + cfg.l2_weight * np.flip(np.cumsum(np.flip(d_pos, axis=1), axis=1), axis=1)

        norm_g = opt_g.step(theta_g, generator_backward(gen, trace, d_outputs))
        gen = gen.with_vector(_finite(theta_g, step))

        log.append(TrainingStep(step, float(d_loss), g_loss, l2_loss, norm_d, norm_g))
        if step % 100 == 0:
            logger.debug(f"Step {step}: d_loss={d_loss:.4f}, g_loss={g_loss:.4f}, l2={l2_loss:.4f}")

    logger.info(f"Training finished: d_loss={log.steps[-1].d_loss:.4f}, g_loss={log.steps[-1].g_loss:.4f}")
    return gen, disc, log


def _finite(theta: np.ndarray, step: int) -> np.ndarray:
    if not np.all(np.isfinite(theta)):
        raise OcclusionTrackerError(f"training diverged at step {step}")
    return theta


def evaluate_ade(params: SeqNetParams, data: Sequence[TrajSplit], seed: int = 0) -> float:
    """Mean ADE of the generator over splits, one seeded noise draw per split"""
    if not data:
        raise InvalidArgumentError("evaluation data is empty")
    rng = np.random.default_rng(seed)
    errors = [ade(generator_forward(params, s.observed, rng.standard_normal(params.noise_dim), len(s.future)),
                  s.future)
              for s in data]
    return float(np.mean(errors))


def observation_length_study(dataset: Sequence[Trajectory], lengths: Sequence[int], cfg: GanTrainConfig,
                             sample_counts: Optional[Sequence[int]] = None,
                             holdout_fraction: float = 0.25) -> pd.DataFrame:
    """
    Train one generator per observation length and report held-out ADE.

    All lengths predict the same future points: every trajectory is cut at a
    common anchor (the largest length), so only the amount of history varies.

    Returns:
        DataFrame with columns t_obs, sample_count, mean_ade
    """
    lengths = [int(t) for t in lengths]
    if not lengths or min(lengths) < 2:
        raise InvalidArgumentError("observation lengths must be at least 2")
    anchor = max(lengths)
    short = [i for i, traj in enumerate(dataset) if len(traj) < anchor + cfg.n_pred]
    if not dataset or short:
        raise InvalidArgumentError(
            f"every trajectory needs at least {anchor + cfg.n_pred} points ({len(short)} too short)"
        )
    n_holdout = max(1, int(round(len(dataset) * holdout_fraction)))
    pool, held_out = list(dataset[:-n_holdout]), list(dataset[-n_holdout:])
    if not pool:
        raise InvalidArgumentError("dataset too small to hold out an evaluation set")
    counts = [len(pool)] if sample_counts is None else [int(c) for c in sample_counts]

    rows = []
    for t_obs in lengths:
        run_cfg = replace(cfg, t_obs=t_obs)
        test = [split_trajectory(traj, t_obs, cfg.n_pred, anchor) for traj in held_out]
        for count in counts:
            used = min(count, len(pool))
            if used < count:
                logger.warning(f"Requested {count} training trajectories, only {used} available")
            train = [split_trajectory(traj, t_obs, cfg.n_pred, anchor) for traj in pool[:used]]
            gen, _, _ = train_gan(train, run_cfg)
            mean_ade = evaluate_ade(gen, test, seed=cfg.seed)
            logger.info(f"t_obs={t_obs}, samples={used}: mean ADE {mean_ade:.4f}")
            rows.append({'t_obs': t_obs, 'sample_count': used, 'mean_ade': mean_ade})
    return pd.DataFrame(rows, columns=['t_obs', 'sample_count', 'mean_ade'])


def synthesize_trajectories(count: int, length: int, family: str = 'linear', field_size: float = 100.0,
                            speed: float = 1.0, noise: float = 0.0, seed: int = 0) -> List[Trajectory]:
    """
    Seeded synthetic center trajectories inside a square field.

    linear: constant velocity at ``speed`` px/frame in a random direction.
    sinusoidal: the same drift plus a perpendicular sine sway.
    mixed: alternates the two families.
    """
    if family not in MOTION_FAMILIES:
        raise InvalidArgumentError(f"family must be one of {MOTION_FAMILIES}, got '{family}'")
    if count < 1 or length < 1:
        raise InvalidArgumentError("count and length must be positive")
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=np.float64)
    trajectories = []
    for index in range(count):
        angle = rng.uniform(0.0, 2.0 * np.pi)
        direction = np.array([np.cos(angle), np.sin(angle)])
        normal = np.array([-direction[1], direction[0]])
        amplitude = rng.uniform(2.0, 5.0)
        period = rng.uniform(8.0, 16.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        jitter = rng.normal(0.0, noise, size=(length, 2)) if noise > 0 else np.zeros((length, 2))

        sway = family == 'sinusoidal' or (family == 'mixed' and index % 2 == 1)
        offsets = np.outer(t * speed, direction)
        if sway:
            offsets += np.outer(amplitude * np.sin(2.0 * np.pi * t / period + phase), normal)
        offsets -= offsets.mean(axis=0)
        center = np.full(2, field_size / 2.0)
        points = np.clip(center + offsets + jitter, 0.0, field_size)
        trajectories.append(Trajectory.from_points(points))
    return trajectories


class GanPredictor:
    """Future-center predictor backed by a trained generator, noise drawn from a seeded stream"""

    def __init__(self, params: SeqNetParams, seed: int = 0):
        _check_params(params, GENERATOR)
        self.params = params
        self.rng = np.random.default_rng(seed)

    @property
    def t_obs(self) -> int:
        return self.params.t_obs

    def predict(self, observed: Trajectory, n_pred: int) -> Trajectory:
        if len(observed) < self.params.t_obs:
            raise InvalidArgumentError(f"need {self.params.t_obs} observed points, got {len(observed)}")
        noise = self.rng.standard_normal(self.params.noise_dim)
        return generator_forward(self.params, observed.tail(self.params.t_obs), noise, n_pred)
