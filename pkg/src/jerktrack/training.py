"""Offline training: full BPTT for the LSTM, streaming passes for the DyBM.

The LSTM trains on one-step-ahead mean squared error over zero-padded
batches; padded steps are masked out of both the loss and the gradients.
A finite-difference gradient checker guards the hand-written backward pass.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError
from .dataset import NormalizedSequence
from .predictors import DybmPredictor, LstmParams, LstmPredictor, sigmoid

__all__ = [
    "TrainingDivergedError",
    "TrainConfig",
    "TrainReport",
    "lstm_batch_loss",
    "lstm_batch_gradients",
    "train_lstm",
    "train_dybm_offline",
    "gradient_check",
]

GRAD_CLIP_NORM = 5.0


class TrainingDivergedError(RuntimeError):
    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInputError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise InvalidInputError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    final_checksum: str = ""

    def write_csv(self, path):
        with open(path, "w") as f:
            f.write("epoch,loss,seconds\n")
            for i, (loss, sec) in enumerate(zip(self.epoch_losses, self.epoch_seconds)):
                f.write(f"{i},{loss:.10g},{sec:.4f}\n")


def _lstm_forward_batch(p: LstmParams, x, mask):
    """Forward over a (B, T, D) batch; returns loss, predictions and caches.

    Inputs are x[:, :-1], targets x[:, 1:]; mask[b, t] marks target steps
    that belong to the real sequence.
    """
    b_n, t_n, d = x.shape
    hs = p.hidden_size
    steps = t_n - 1
    c = np.zeros((b_n, hs))
    h = np.zeros((b_n, hs))
    caches = []
    preds = np.zeros((b_n, steps, d))
    for t in range(steps):
        v = x[:, t]
        z = v @ p.w_x.T + h @ p.w_h.T + p.b
        i = sigmoid(z[:, :hs])
        f = sigmoid(z[:, hs:2 * hs])
        o = sigmoid(z[:, 2 * hs:3 * hs])
        g = np.tanh(z[:, 3 * hs:])
        c_next = f * c + i * g
        tanh_c = np.tanh(c_next)
        h_next = o * tanh_c
        preds[:, t] = h_next @ p.w_y.T + p.b_y
        caches.append((v, c, h, i, f, o, g, c_next, tanh_c))
        c, h = c_next, h_next
    total = float(mask.sum())
    if total == 0:
        raise InvalidInputError("batch mask selects no steps")
    err = preds - x[:, 1:]
    loss = float(np.sum(mask[:, :, None] * err**2) / (d * total))
    return loss, preds, err, caches, total


def lstm_batch_loss(p: LstmParams, x, mask) -> float:
    loss, *_ = _lstm_forward_batch(p, np.asarray(x, dtype=float),
                                   np.asarray(mask, dtype=float))
    return loss


def lstm_batch_gradients(p: LstmParams, x, mask):
    """Loss and full-BPTT gradients for one zero-padded batch."""
    x = np.asarray(x, dtype=float)
    mask = np.asarray(mask, dtype=float)
    loss, preds, err, caches, total = _lstm_forward_batch(p, x, mask)
    d = x.shape[2]
    hs = p.hidden_size
    grads = {name: np.zeros_like(arr) for name, arr in p.named_arrays()}
    dh = np.zeros((x.shape[0], hs))
    dc = np.zeros((x.shape[0], hs))
    for t in range(len(caches) - 1, -1, -1):
        v, c_prev, h_prev, i, f, o, g, c_next, tanh_c = caches[t]
        dy = 2.0 * mask[:, t, None] * err[:, t] / (d * total)
        grads["w_y"] += dy.T @ (o * tanh_c)
        grads["b_y"] += dy.sum(axis=0)
        dh = dh + dy @ p.w_y
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c**2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g**2),
        ], axis=1)
        grads["w_x"] += dz.T @ v
        grads["w_h"] += dz.T @ h_prev
        grads["b"] += dz.sum(axis=0)
        dh = dz @ p.w_h
        dc = dc * f
    return loss, grads


def _clip_gradients(grads: dict, max_norm: float):
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return grads


def _make_batch(seqs: list[np.ndarray]):
    t_max = max(len(s) for s in seqs)
    d = seqs[0].shape[1]
    x = np.zeros((len(seqs), t_max, d))
    mask = np.zeros((len(seqs), t_max - 1))
    for j, s in enumerate(seqs):
        x[j, : len(s)] = s
        mask[j, : len(s) - 1] = 1.0
    return x, mask


def train_lstm(corpus: list[NormalizedSequence], cfg: TrainConfig,
               hidden_size: int = 10) -> tuple[LstmPredictor, TrainReport]:
    """Train the LSTM one-step predictor with Adam over full-BPTT batches."""
    if not corpus:
        raise InvalidInputError("empty training corpus")
    seqs = [np.asarray(s.velocities, dtype=float) for s in corpus]
    seqs = [s for s in seqs if len(s) >= 2]
    if not seqs:
        raise InvalidInputError("no sequence long enough to train on")
    d = seqs[0].shape[1]
    params = LstmParams.init_random(d, hidden_size=hidden_size, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    adam_m = {name: np.zeros_like(a) for name, a in params.named_arrays()}
    adam_v = {name: np.zeros_like(a) for name, a in params.named_arrays()}
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    report = TrainReport()
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(len(seqs)) if cfg.shuffle else np.arange(len(seqs))
        losses, weights = [], []
        for start in range(0, len(order), cfg.batch_size):
            batch = [seqs[j] for j in order[start:start + cfg.batch_size]]
            x, mask = _make_batch(batch)
            loss, grads = lstm_batch_gradients(params, x, mask)
            if not np.isfinite(loss):
                raise TrainingDivergedError("training loss is non-finite", epoch)
            _clip_gradients(grads, GRAD_CLIP_NORM)
            step += 1
            for name, arr in params.named_arrays():
                g = grads[name]
                adam_m[name] = b1 * adam_m[name] + (1 - b1) * g
                adam_v[name] = b2 * adam_v[name] + (1 - b2) * g * g
                m_hat = adam_m[name] / (1 - b1**step)
                v_hat = adam_v[name] / (1 - b2**step)
                arr -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
            losses.append(loss)
            weights.append(float(mask.sum()))
        report.epoch_losses.append(float(np.average(losses, weights=weights)))
        report.epoch_seconds.append(time.perf_counter() - t0)
    predictor = LstmPredictor(params)
    report.final_checksum = predictor.param_checksum()
    return predictor, report


def train_dybm_offline(corpus: list[NormalizedSequence], cfg: TrainConfig,
                       predictor: DybmPredictor | None = None) -> DybmPredictor:
    """Stream every sequence through the DyBM's online rule for cfg.epochs
    passes; traces and FIFO reset between sequences, parameters carry over."""
    if not corpus:
        raise InvalidInputError("empty training corpus")
    d = np.asarray(corpus[0].velocities).shape[1]
    if predictor is None:
        predictor = DybmPredictor(d, online=False)
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.epochs):
        order = rng.permutation(len(corpus)) if cfg.shuffle else np.arange(len(corpus))
        for j in order:
            predictor.reset()
            for v in np.asarray(corpus[j].velocities, dtype=float):
                predictor.learn_step(v)
    predictor.reset()
    return predictor


def gradient_check(params: LstmParams, sequence, epsilon: float = 1e-5) -> float:
    """Max relative error between BPTT and central finite differences."""
    seq = np.asarray(sequence, dtype=float)
    if len(seq) < 2:
        raise InvalidInputError("sequence must have at least 2 steps")
    x = seq[None, :, :]
    mask = np.ones((1, len(seq) - 1))
    _, grads = lstm_batch_gradients(params, x, mask)
    worst = 0.0
    for name, arr in params.named_arrays():
        flat = arr.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            hi = lstm_batch_loss(params, x, mask)
            flat[idx] = orig - epsilon
            lo = lstm_batch_loss(params, x, mask)
            flat[idx] = orig
            fd = (hi - lo) / (2.0 * epsilon)
            an = grads[name].reshape(-1)[idx]
            # Floor guards against FD roundoff (~1e-12 absolute at this
            # epsilon) dominating the ratio for near-zero gradients.
            denom = max(abs(fd), abs(an), 1e-6)
            worst = max(worst, abs(fd - an) / denom)
    return worst
