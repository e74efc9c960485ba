"""Relation Refinement Gate.

For every relation, starting from its own copy of h0::

    c = [h0; h_r]
    s = max(sigmoid(f(c)))
    if s > tau or k == max_refine: exit with classifier(c)
    else: h0 = relu(g(h_r)) + h0

Rows are processed together; each exit is frozen with ``where`` so later
iterations cannot touch logits that already left the loop.
"""
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

import numeric_core as nc
from errors import ContractError, DimensionError
from numeric_core import Tensor

from .config import GateConfig, Representation, Task

logger = logging.getLogger(__name__)

_S_LOW = np.nextafter(0.0, 1.0)
_S_HIGH = np.nextafter(1.0, 0.0)


class GateParams:
    """f (confidence), g (refinement) and the classifier, all single affine layers."""

    def __init__(self, tensors: dict[str, Tensor], shared: bool):
        self.tensors = tensors
        self.shared = shared

    @classmethod
    def init(cls, config: GateConfig, hidden: int, rng: np.random.Generator,
             std: float = nc.INIT_STD) -> 'GateParams':
        width, r = config.input_width(hidden), config.num_relations

        def weight(name, shape):
            return Tensor(nc.normal_init(rng, shape, std), requires_grad=True, name=name)

        def zeros(name, shape):
            return Tensor(np.zeros(shape), requires_grad=True, name=name)

        tensors = {
            'gate.f.w': weight('gate.f.w', (width, r)),
            'gate.f.b': zeros('gate.f.b', (r,)),
            'gate.g.w': weight('gate.g.w', (hidden, hidden)),
            'gate.g.b': zeros('gate.g.b', (hidden,)),
        }
        if not config.share_confidence_head:
            tensors['gate.cls.w'] = weight('gate.cls.w', (width, r))
            tensors['gate.cls.b'] = zeros('gate.cls.b', (r,))
        return cls(tensors, config.share_confidence_head)

    def named_parameters(self) -> dict[str, Tensor]:
        return dict(self.tensors)

    def f(self, c: Tensor) -> Tensor:
        return c @ self.tensors['gate.f.w'] + self.tensors['gate.f.b']

    def g(self, h: Tensor) -> Tensor:
        return h @ self.tensors['gate.g.w'] + self.tensors['gate.g.b']

    def classify(self, c: Tensor) -> Tensor:
        if self.shared:
            return self.f(c)
        return c @ self.tensors['gate.cls.w'] + self.tensors['gate.cls.b']


@dataclass
class GateTrace:
    iterations_used: int
    confidences: list[float]
    exited_early: bool
    logits: np.ndarray
    h0_history: list[np.ndarray] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            'iterations_used': self.iterations_used,
            'confidences': [float(s) for s in self.confidences],
            'exited_early': self.exited_early,
            'logits': [float(x) for x in self.logits],
        }


def _matrix(c) -> np.ndarray:
    return np.atleast_2d(c.data if isinstance(c, Tensor) else np.asarray(c, dtype=np.float64))


def _scores(f_logits: np.ndarray) -> np.ndarray:
    s = np.max(1.0 / (1.0 + np.exp(-np.clip(f_logits, -700.0, 700.0))), axis=-1)
    return np.clip(s, _S_LOW, _S_HIGH)


def confidence(c_i: Tensor | np.ndarray, params: GateParams) -> float:
    """Max sigmoid of f(c), kept strictly inside (0, 1)."""
    w, b = params.tensors['gate.f.w'].data, params.tensors['gate.f.b'].data
    return float(_scores(_matrix(c_i) @ w + b)[0])


def refine(h0: Tensor, h_ri: Tensor, params: GateParams) -> Tensor:
    return nc.relu(params.g(h_ri)) + h0


def _represent(h0: Tensor, hr: Tensor, representation: Representation) -> Tensor:
    if representation is Representation.H0_ONLY:
        return h0
    if representation is Representation.HR_ONLY:
        return hr
    return nc.concat(h0, hr, axis=-1)


def gate_forward_rows(h0_rows: Tensor, hr_rows: Tensor, config: GateConfig, params: GateParams,
                      with_confidence: bool = False):
    """Batched gate over N relations: ``h0_rows`` and ``hr_rows`` are ``[N, d]``.

    Returns ``(logits [N, R], traces)``; with ``with_confidence`` also the
    exit-point f logits used to train a separate confidence head.
    """
    if h0_rows.ndim != 2 or h0_rows.shape != hr_rows.shape:
        raise DimensionError(f'gate: h0 rows {h0_rows.shape} and relation rows {hr_rows.shape} must match')
    n = h0_rows.shape[0]
    if n == 0:
        raise ContractError('gate: no relations to classify')

    if not config.rrg_enabled:
        c = _represent(h0_rows, hr_rows, config.representation)
        logits = params.classify(c)
        f_logits = params.f(c)
        s0 = _scores(f_logits.data)
        traces = [GateTrace(0, [float(s0[i])], False, logits.data[i].copy(), [h0_rows.data[i].copy()])
                  for i in range(n)]
        return (logits, traces, f_logits) if with_confidence else (logits, traces)

    bound = config.max_refine
    h = h0_rows
    active = np.ones(n, dtype=bool)
    iterations = np.zeros(n, dtype=np.int64)
    confidences: list[list[float]] = [[] for _ in range(n)]
    history: list[list[np.ndarray]] = [[] for _ in range(n)]
    logits = f_out = None

    for k in range(bound + 1):
        c = _represent(h, hr_rows, config.representation)
        f_logits = params.f(c)
        s = _scores(f_logits.data)
        for i in np.flatnonzero(active):
            confidences[i].append(float(s[i]))
            history[i].append(h.data[i].copy())

        leaving = active & ((s > config.tau) | (k == bound))
        if leaving.any():
            exit_logits = f_logits if params.shared else params.classify(c)
            if logits is None:
                logits, f_out = exit_logits, f_logits
            else:
                logits = nc.where(leaving[:, None], exit_logits, logits)
                f_out = nc.where(leaving[:, None], f_logits, f_out)
            iterations[leaving] = k
            active &= ~leaving
        if not active.any():
            break
        h = refine(h, hr_rows, params)

    traces = [GateTrace(iterations_used=int(iterations[i]),
                        confidences=confidences[i],
                        exited_early=bool(iterations[i] < bound),
                        logits=logits.data[i].copy(),
                        h0_history=history[i])
              for i in range(n)]
    return (logits, traces, f_out) if with_confidence else (logits, traces)


def gate_forward(h0: Tensor, h_r: Sequence[Tensor], config: GateConfig, params: GateParams):
    """Gate for one sequence: a single h0 shared as a fresh copy by each of the n relations."""
    if not h_r:
        raise ContractError('gate: n == 0, nothing to classify')
    d = h0.shape[-1]
    hr_rows = nc.stack([nc.reshape(t, (d,)) for t in h_r])
    h0_rows = nc.take(nc.reshape(h0, (1, d)), np.zeros(len(h_r), dtype=np.int64))
    return gate_forward_rows(h0_rows, hr_rows, config, params)


def predict(logits: Tensor | np.ndarray, config: GateConfig):
    """Multi-label: set of classes with sigmoid above the threshold. Single-label: argmax.

    A ``[N, R]`` input yields one decision per row.
    """
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits, dtype=np.float64)
    if values.ndim == 2:
        return [predict(row, config) for row in values]
    if values.shape != (config.num_relations,):
        raise DimensionError(f'predict: logits {values.shape} do not have {config.num_relations} classes')
    if config.task is Task.SENTENCE_SINGLE_LABEL:
        return int(np.argmax(values))
    probs = 1.0 / (1.0 + np.exp(-np.clip(values, -700.0, 700.0)))
    return {int(r) for r in np.flatnonzero(probs > config.decision_threshold)}


def gold_matrix(gold: Sequence, num_relations: int) -> np.ndarray:
    """Multi-hot ``[N, R]`` targets from per-relation label sets."""
    targets = np.zeros((len(gold), num_relations))
    for row, labels in enumerate(gold):
        labels = [labels] if isinstance(labels, (int, np.integer)) else list(labels)
        for r in labels:
            if not 0 <= r < num_relations:
                raise ContractError(f'loss: label {r} outside [0, {num_relations})')
            targets[row, r] = 1.0
    return targets


def loss(logits: Tensor, gold: Sequence, config: GateConfig) -> Tensor:
    """Exit-point loss: mean BCE for dialogue, softmax cross-entropy for sentences."""
    if logits.ndim == 1:
        logits = nc.reshape(logits, (1, logits.shape[0]))
        gold = [gold]
    if logits.shape != (len(gold), config.num_relations):
        raise DimensionError(f'loss: logits {logits.shape} do not fit {len(gold)} relations '
                             f'over {config.num_relations} classes')
    if config.task is Task.SENTENCE_SINGLE_LABEL:
        return nc.softmax_cross_entropy(logits, np.asarray([int(g) for g in gold], dtype=np.int64))
    return nc.bce_with_logits(logits, gold_matrix(gold, config.num_relations))
