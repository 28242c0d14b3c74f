"""
Recurrent sequence networks over 2-D displacement sequences.

Both the trajectory generator and the discriminator are a linear input
embedding feeding one gated (LSTM-style) recurrent cell, followed by a linear
head. Parameters live in a single flat float64 vector; named views into it
are produced from the layout so that optimizers, gradient checks and the
binary blob format all work on the same vector.

Arrays are batch-major: inputs are (B, T, 2), hidden states (B, H).
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

GENERATOR = 'generator'
DISCRIMINATOR = 'discriminator'

Layout = Tuple[Tuple[str, Tuple[int, ...]], ...]


def network_layout(kind: str, hidden_size: int, noise_dim: int = 0) -> Layout:
    """Ordered (name, shape) pairs of a network's parameters"""
    h = hidden_size
    layout = [
        ('embed_w', (h, 2)),
        ('embed_b', (h,)),
        ('wx', (4 * h, h)),
        ('wh', (4 * h, h)),
        ('b', (4 * h,)),
    ]
    if kind == GENERATOR:
        layout += [('noise_w', (h, noise_dim)), ('out_w', (2, h)), ('out_b', (2,))]
    elif kind == DISCRIMINATOR:
        layout += [('out_w', (1, h)), ('out_b', (1,))]
    else:
        raise InvalidArgumentError(f"unknown network kind '{kind}'")
    return tuple(layout)


def layout_size(layout: Layout) -> int:
    return int(sum(np.prod(shape, dtype=int) for _, shape in layout))


def unflatten(vector: np.ndarray, layout: Layout) -> Dict[str, np.ndarray]:
    """Named views into a flat vector"""
    views, offset = {}, 0
    for name, shape in layout:
        size = int(np.prod(shape, dtype=int))
        views[name] = vector[offset:offset + size].reshape(shape)
        offset += size
    return views


@dataclass(frozen=True)
class SeqNetParams:
    """Flat parameter vector plus the metadata needed to run it"""
    kind: str
    vector: np.ndarray
    hidden_size: int
    noise_dim: int
    t_obs: int
    n_pred: int
    unit: float = 1.0

    def __post_init__(self):
        vector = np.array(self.vector, dtype=np.float64).ravel()
        expected = layout_size(self.layout)
        if vector.size != expected:
            raise InvalidArgumentError(f"{self.kind} expects {expected} parameters, got {vector.size}")
        if not np.all(np.isfinite(vector)):
            raise InvalidArgumentError("parameters must be finite")
        if self.t_obs < 2 or self.n_pred < 1 or self.unit <= 0:
            raise InvalidArgumentError("t_obs >= 2, n_pred >= 1 and a positive unit are required")
        vector.setflags(write=False)
        object.__setattr__(self, 'vector', vector)

    @property
    def layout(self) -> Layout:
        return network_layout(self.kind, self.hidden_size, self.noise_dim if self.kind == GENERATOR else 0)

    @property
    def views(self) -> Dict[str, np.ndarray]:
        return unflatten(self.vector, self.layout)

    def with_vector(self, vector: np.ndarray) -> 'SeqNetParams':
        return SeqNetParams(self.kind, vector, self.hidden_size, self.noise_dim,
                            self.t_obs, self.n_pred, self.unit)

    def header(self) -> Dict:
        return {
            'kind': self.kind,
            'hidden_size': self.hidden_size,
            'noise_dim': self.noise_dim,
            't_obs': self.t_obs,
            'n_pred': self.n_pred,
            'unit': self.unit,
            'layout': [[name, list(shape)] for name, shape in self.layout],
            'dtype': '<f8',
        }

    @classmethod
    def zeros(cls, kind: str, hidden_size: int, noise_dim: int, t_obs: int, n_pred: int,
              unit: float = 1.0) -> 'SeqNetParams':
        z = noise_dim if kind == GENERATOR else 0
        size = layout_size(network_layout(kind, hidden_size, z))
        return cls(kind, np.zeros(size), hidden_size, noise_dim, t_obs, n_pred, unit)

    @classmethod
    def initialize(cls, kind: str, hidden_size: int, noise_dim: int, t_obs: int, n_pred: int,
                   rng: np.random.Generator, unit: float = 1.0) -> 'SeqNetParams':
        """Weights uniform in +-1/sqrt(H), biases zero"""
        params = cls.zeros(kind, hidden_size, noise_dim, t_obs, n_pred, unit)
        vector = params.vector.copy()
        bound = 1.0 / np.sqrt(hidden_size)
        for name, view in unflatten(vector, params.layout).items():
            if view.ndim == 2:
                view[...] = rng.uniform(-bound, bound, size=view.shape)
        return params.with_vector(vector)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class _CellCache:
    __slots__ = ('x', 'h_prev', 'c_prev', 'i', 'f', 'o', 'g', 'c', 'tc', 'h')


def _cell_forward(p: Dict[str, np.ndarray], x: np.ndarray, h_prev: np.ndarray,
                  c_prev: np.ndarray) -> _CellCache:
    hs = h_prev.shape[1]
    a = x @ p['wx'].T + h_prev @ p['wh'].T + p['b']
    cache = _CellCache()
    cache.x, cache.h_prev, cache.c_prev = x, h_prev, c_prev
    cache.i = sigmoid(a[:, :hs])
    cache.f = sigmoid(a[:, hs:2 * hs])
    cache.o = sigmoid(a[:, 2 * hs:3 * hs])
    cache.g = np.tanh(a[:, 3 * hs:])
    cache.c = cache.f * c_prev + cache.i * cache.g
    cache.tc = np.tanh(cache.c)
    cache.h = cache.o * cache.tc
    return cache


def _cell_backward(p: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], cache: _CellCache,
                   dh: np.ndarray, dc: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accumulate cell parameter gradients; return (dx, dh_prev, dc_prev)"""
    dc_total = dc + dh * cache.o * (1.0 - cache.tc ** 2)
    da = np.concatenate([
        dc_total * cache.g * cache.i * (1.0 - cache.i),
        dc_total * cache.c_prev * cache.f * (1.0 - cache.f),
        dh * cache.tc * cache.o * (1.0 - cache.o),
        dc_total * cache.i * (1.0 - cache.g ** 2),
    ], axis=1)
    grads['wx'] += da.T @ cache.x
    grads['wh'] += da.T @ cache.h_prev
    grads['b'] += da.sum(axis=0)
    return da @ p['wx'], da @ p['wh'], dc_total * cache.f


def _embed(p: Dict[str, np.ndarray], u: np.ndarray) -> np.ndarray:
    return u @ p['embed_w'].T + p['embed_b']


def _embed_backward(p: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], u: np.ndarray,
                    dx: np.ndarray) -> np.ndarray:
    grads['embed_w'] += dx.T @ u
    grads['embed_b'] += dx.sum(axis=0)
    return dx @ p['embed_w']


@dataclass
class GeneratorTrace:
    """Forward intermediates needed for backpropagation through the generator"""
    obs: np.ndarray
    noise: np.ndarray
    encoder: List[_CellCache]
    decoder: List[_CellCache]
    decoder_inputs: List[np.ndarray]
    outputs: np.ndarray


def generator_run(params: SeqNetParams, obs_deltas: np.ndarray, noise: np.ndarray,
                  n_pred: Optional[int] = None) -> GeneratorTrace:
    """Encode observed displacements, inject noise, decode n_pred displacements autoregressively"""
    p = params.views
    n_pred = params.n_pred if n_pred is None else n_pred
    batch, steps, _ = obs_deltas.shape
    h = np.zeros((batch, params.hidden_size))
    c = np.zeros_like(h)
    encoder = []
    for t in range(steps):
        cache = _cell_forward(p, _embed(p, obs_deltas[:, t]), h, c)
        encoder.append(cache)
        h, c = cache.h, cache.c
    h = h + noise @ p['noise_w'].T

    decoder, inputs, outputs = [], [], []
    prev = obs_deltas[:, -1]
    for _ in range(n_pred):
        inputs.append(prev)
        cache = _cell_forward(p, _embed(p, prev), h, c)
        decoder.append(cache)
        h, c = cache.h, cache.c
        prev = h @ p['out_w'].T + p['out_b']
        outputs.append(prev)
    return GeneratorTrace(obs_deltas, noise, encoder, decoder, inputs, np.stack(outputs, axis=1))


def generator_backward(params: SeqNetParams, trace: GeneratorTrace, d_outputs: np.ndarray) -> np.ndarray:
    """Gradient of a loss w.r.t. the flat generator vector given dL/d(outputs)"""
    p = params.views
    flat = np.zeros_like(params.vector)
    grads = unflatten(flat, params.layout)
    batch = d_outputs.shape[0]
    dh = np.zeros((batch, params.hidden_size))
    dc = np.zeros_like(dh)
    d_fed_back = np.zeros((batch, 2))
    for k in reversed(range(len(trace.decoder))):
        cache = trace.decoder[k]
        dy = d_outputs[:, k] + d_fed_back
        grads['out_w'] += dy.T @ cache.h
        grads['out_b'] += dy.sum(axis=0)
        dx, dh, dc = _cell_backward(p, grads, cache, dh + dy @ p['out_w'], dc)
        d_fed_back = _embed_backward(p, grads, trace.decoder_inputs[k], dx)

    grads['noise_w'] += dh.T @ trace.noise
    for t in reversed(range(len(trace.encoder))):
        cache = trace.encoder[t]
        dx, dh, dc = _cell_backward(p, grads, cache, dh, dc)
        _embed_backward(p, grads, trace.obs[:, t], dx)
    return flat


@dataclass
class DiscriminatorTrace:
    inputs: np.ndarray
    cells: List[_CellCache]
    logits: np.ndarray


def discriminator_run(params: SeqNetParams, deltas: np.ndarray) -> DiscriminatorTrace:
    """Encode a full displacement sequence and score it with a linear head (logits, shape (B,))"""
    p = params.views
    batch, steps, _ = deltas.shape
    h = np.zeros((batch, params.hidden_size))
    c = np.zeros_like(h)
    cells = []
    for t in range(steps):
        cache = _cell_forward(p, _embed(p, deltas[:, t]), h, c)
        cells.append(cache)
        h, c = cache.h, cache.c
    logits = (h @ p['out_w'].T + p['out_b'])[:, 0]
    return DiscriminatorTrace(deltas, cells, logits)


def discriminator_backward(params: SeqNetParams, trace: DiscriminatorTrace,
                           d_logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (flat parameter gradient, gradient w.r.t. the input displacements)"""
    p = params.views
    flat = np.zeros_like(params.vector)
    grads = unflatten(flat, params.layout)
    d_inputs = np.zeros_like(trace.inputs)
    dl = d_logits[:, None]
    last = trace.cells[-1]
    grads['out_w'] += dl.T @ last.h
    grads['out_b'] += dl.sum(axis=0)
    dh = dl @ p['out_w']
    dc = np.zeros_like(dh)
    for t in reversed(range(len(trace.cells))):
        dx, dh, dc = _cell_backward(p, grads, trace.cells[t], dh, dc)
        d_inputs[:, t] = _embed_backward(p, grads, trace.inputs[:, t], dx)
    return flat, d_inputs
