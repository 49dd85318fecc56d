"""Motion predictors behind one interface.

Every model turns a running history of observed velocities into an N-step
forecast by feeding each one-step prediction back as the next input. The
rollout never leaves a mark on the internal state: a snapshot is taken
before and restored after, so the recurrent memory only ever advances on
real observations.

Models: zero-motion (the conservative hold), constant velocity (baseline),
linear DyBM with eligibility traces (online-learnable, optionally augmented
with an echo-state reservoir), a small LSTM, and a perfect-prediction
oracle that reads the true future.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .core import HorizonParams, InvalidInputError, StackedState

__all__ = [
    "ModelCorruptError",
    "LearningDivergedError",
    "PredictionTarget",
    "Predictor",
    "ZeroMotionPredictor",
    "ConstantVelocityPredictor",
    "EsnReservoir",
    "DybmPredictor",
    "LstmParams",
    "LstmPredictor",
    "PerfectPredictor",
    "perfect_predict",
    "hold_target",
    "save_model",
    "load_model",
]

MAX_HORIZON = 10_000


class ModelCorruptError(RuntimeError):
    """Model parameters are non-finite or ill-shaped."""


class LearningDivergedError(RuntimeError):
    """An online learning step produced a non-finite gradient."""


@dataclass(frozen=True)
class PredictionTarget:
    """N-step forecast: positions by cumulative integration of the predicted
    velocities (unit step, normalized units), accelerations implicitly zero."""

    positions: np.ndarray  # (n, D)
    velocities: np.ndarray  # (n, D)

    def to_stacked(self, params: HorizonParams, scale: float = 1.0,
                   dt: float = 1.0) -> StackedState:
        """Convert to a stacked MPC target in meters.

        scale maps normalized units to meters; dt converts per-step
        velocities to m/s. Acceleration rows are zero (unknowable and
        carrying zero gain by default).
        """
        n = params.n_steps
        pos = np.asarray(self.positions, dtype=float) * scale
        vel = np.asarray(self.velocities, dtype=float) * scale / dt
        if pos.shape != (n, params.n_dof):
            raise InvalidInputError("prediction length does not match horizon")
        return StackedState.from_components(pos, vel, np.zeros_like(pos), params)


def hold_target(position, params: HorizonParams) -> StackedState:
    """The conservative target: last position repeated, zero vel/acc."""
    pos = np.tile(np.asarray(position, dtype=float), (params.n_steps, 1))
    zeros = np.zeros_like(pos)
    return StackedState.from_components(pos, zeros, zeros, params)


class Predictor:
    """Common interface: observe real velocities, roll out N-step forecasts.

    Subclasses implement _predict (pure) and _advance (one recurrent step);
    online learners override observe.
    """

    kind = "abstract"

    def __init__(self, n_dof: int, warmup: int = 10):
        self.n_dof = n_dof
        self.warmup = warmup
        self.samples: list[np.ndarray] = []
        self.last_position = np.zeros(n_dof)

    @property
    def ready(self) -> bool:
        return len(self.samples) >= self.warmup

    def reset(self, position=None):
        """Clear history and recurrent state for a new episode."""
        self.samples = []
        self.last_position = (np.zeros(self.n_dof) if position is None
                              else np.asarray(position, dtype=float).copy())
        self._reset_state()

    def observe(self, v_t) -> None:
        v = np.asarray(v_t, dtype=float)
        if v.shape != (self.n_dof,) or not np.all(np.isfinite(v)):
            raise InvalidInputError(f"bad velocity sample {v_t!r}")
        self.samples.append(v)
        self.last_position = self.last_position + v
        self._advance(v)

    def predict_one(self) -> np.ndarray:
        v = self._predict()
        if not np.all(np.isfinite(v)):
            raise ModelCorruptError("non-finite prediction")
        return v

    def predict_horizon(self, n: int) -> PredictionTarget:
        if not (1 <= n <= MAX_HORIZON):
            raise InvalidInputError(f"horizon {n} out of range")
        snap = self._snapshot()
        try:
            vels = np.empty((n, self.n_dof))
            for i in range(n):
                vels[i] = self.predict_one()
                self._advance(vels[i])
        finally:
            self._restore(snap)
        positions = self.last_position + np.cumsum(vels, axis=0)
        return PredictionTarget(positions=positions, velocities=vels)

    # Recurrent-state hooks; stateless models keep the defaults.
    def _reset_state(self):
        pass

    def _advance(self, v: np.ndarray):
        pass

    def _predict(self) -> np.ndarray:
        raise NotImplementedError

    def _snapshot(self):
        return (list(self.samples), self.last_position.copy(),
                copy.deepcopy(self._state_dict()))

    def _restore(self, snap):
        self.samples, self.last_position, state = snap
        self._load_state_dict(copy.deepcopy(state))

    def _state_dict(self) -> dict:
        return {}

    def _load_state_dict(self, state: dict):
        pass

    def param_checksum(self) -> str:
        blobs = [np.ascontiguousarray(p).tobytes() for p in self._param_arrays()]
        return hashlib.sha256(b"".join(blobs)).hexdigest()

    def _param_arrays(self) -> list[np.ndarray]:
        return []


class ZeroMotionPredictor(Predictor):
    """Predicts no motion; the MPC's conservative model."""

    kind = "zero"

    def __init__(self, n_dof: int):
        super().__init__(n_dof, warmup=0)

    def _predict(self):
        return np.zeros(self.n_dof)


class ConstantVelocityPredictor(Predictor):
    """Repeats the last observed velocity."""

    kind = "const_velocity"

    def __init__(self, n_dof: int):
        super().__init__(n_dof, warmup=1)
        self._last_v = np.zeros(n_dof)

    def _predict(self):
        return self._last_v.copy()

    def _advance(self, v):
        self._last_v = v.copy()

    def _state_dict(self):
        return {"last_v": self._last_v}

    def _load_state_dict(self, state):
        self._last_v = state["last_v"]


class EsnReservoir:
    """Fixed random leaky reservoir; only a readout over h is ever learned.

    Recurrent weights are dense Gaussian rescaled to the given spectral
    radius, input weights uniform in [-in_scale, in_scale]; both are a
    deterministic function of the seed so saved models reload bit-exactly.
    """

    def __init__(self, n_dof: int, size: int = 50, leak: float = 0.7,
                 spectral_scale: float = 0.95, in_scale: float = 0.1,
                 seed: int = 0):
        self.size = size
        self.leak = leak
        self.spectral_scale = spectral_scale
        self.in_scale = in_scale
        self.seed = seed
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((size, size))
        radius = max(abs(np.linalg.eigvals(w)))
        self.w_rec = w * (spectral_scale / radius)
        self.w_in = rng.uniform(-in_scale, in_scale, (size, n_dof))
        self.h = np.zeros(size)

    def update(self, v: np.ndarray):
        self.h = (1.0 - self.leak) * self.h + self.leak * np.tanh(
            self.w_rec @ self.h + self.w_in @ v)

    def config(self) -> dict:
        return {"size": self.size, "leak": self.leak,
                "spectral_scale": self.spectral_scale,
                "in_scale": self.in_scale, "seed": self.seed}


class DybmPredictor(Predictor):
    """Linear DyBM: explicit delay weights plus eligibility traces.

    Prediction is affine in the d_max-1 most recent inputs and the decayed
    traces e_k, which follow e_k <- lambda_k * e_k + v_t on every advance.
    Learning is a single stochastic-gradient step on the squared one-step
    error, cheap enough to run online inside the control loop. An optional
    echo-state reservoir contributes extra (learned-readout) features.
    """

    kind = "dybm"

    def __init__(self, n_dof: int, d_max: int = 3,
                 decay_rates=(0.1, 0.25, 0.5, 0.75, 0.9),
                 learning_rate: float = 0.01, adaptive: bool = True,
                 online: bool = True, esn: EsnReservoir | None = None,
                 warmup: int = 10):
        super().__init__(n_dof, warmup=warmup)
        if d_max < 2:
            raise InvalidInputError("d_max must be >= 2")
        for lam in decay_rates:
            if not (0.0 < lam < 1.0):
                raise InvalidInputError(f"decay rate {lam} not in (0, 1)")
        self.d_max = d_max
        self.decay_rates = np.asarray(decay_rates, dtype=float)
        self.learning_rate = learning_rate
        self.adaptive = adaptive
        self.online = online
        self.esn = esn
        d, k = n_dof, len(decay_rates)
        self.w_delay = np.zeros((d_max - 1, d, d))
        self.u_trace = np.zeros((k, d, d))
        self.bias = np.zeros(d)
        self.w_esn = np.zeros((d, esn.size)) if esn is not None else None
        self._sq_grad = {name: np.zeros_like(p)
                         for name, p in self._named_params()}
        self._reset_state()

    def _named_params(self):
        params = [("w_delay", self.w_delay), ("u_trace", self.u_trace),
                  ("bias", self.bias)]
        if self.w_esn is not None:
            params.append(("w_esn", self.w_esn))
        return params

    def _param_arrays(self):
        return [p for _, p in self._named_params()]

    def _reset_state(self):
        self.fifo = [np.zeros(self.n_dof) for _ in range(self.d_max - 1)]
        self.traces = np.zeros((len(self.decay_rates), self.n_dof))
        if self.esn is not None:
            self.esn.h = np.zeros(self.esn.size)

    def _predict(self):
        v = self.bias.copy()
        for d in range(self.d_max - 1):
            v += self.w_delay[d] @ self.fifo[d]
        for k in range(len(self.decay_rates)):
            v += self.u_trace[k] @ self.traces[k]
        if self.w_esn is not None:
            v += self.w_esn @ self.esn.h
        return v

    def _advance(self, v):
        self.fifo = [v.copy()] + self.fifo[: self.d_max - 2]
        self.traces = self.decay_rates[:, None] * self.traces + v[None, :]
        if self.esn is not None:
            self.esn.update(v)

    def learn_step(self, v_true) -> None:
        """One SGD step on the squared one-step error, then advance."""
        v_true = np.asarray(v_true, dtype=float)
        err = self._predict() - v_true
        if not np.all(np.isfinite(err)):
            raise LearningDivergedError("non-finite prediction error")
        grads = {
            "w_delay": err[None, :, None] * np.stack(self.fifo)[:, None, :],
            "u_trace": err[None, :, None] * self.traces[:, None, :],
            "bias": err,
        }
        if self.w_esn is not None:
            grads["w_esn"] = np.outer(err, self.esn.h)
        for name, p in self._named_params():
            g = grads[name]
            if self.adaptive:
                acc = self._sq_grad[name]
                acc += g * g
                p -= self.learning_rate * g / np.sqrt(acc + 1e-8)
            else:
                p -= self.learning_rate * g
        self._advance(v_true)

    def observe(self, v_t):
        v = np.asarray(v_t, dtype=float)
        if v.shape != (self.n_dof,) or not np.all(np.isfinite(v)):
            raise InvalidInputError(f"bad velocity sample {v_t!r}")
        self.samples.append(v)
        self.last_position = self.last_position + v
        if self.online:
            self.learn_step(v)
        else:
            self._advance(v)

    def _state_dict(self):
        state = {"fifo": self.fifo, "traces": self.traces}
        if self.esn is not None:
            state["esn_h"] = self.esn.h
        return state

    def _load_state_dict(self, state):
        self.fifo = state["fifo"]
        self.traces = state["traces"]
        if self.esn is not None:
            self.esn.h = state["esn_h"]


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class LstmParams:
    """Single-layer LSTM weights plus a linear readout.

    Gate rows are stacked [input, forget, output, candidate] in w_x, w_h, b.
    """

    w_x: np.ndarray  # (4H, D)
    w_h: np.ndarray  # (4H, H)
    b: np.ndarray    # (4H,)
    w_y: np.ndarray  # (D, H)
    b_y: np.ndarray  # (D,)

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[1]

    @property
    def n_dof(self) -> int:
        return self.w_x.shape[1]

    @staticmethod
    def init_random(n_dof: int, hidden_size: int = 10, seed: int = 0,
                    scale: float = 0.2) -> "LstmParams":
        rng = np.random.default_rng(seed)
        h = hidden_size
        return LstmParams(
            w_x=rng.uniform(-scale, scale, (4 * h, n_dof)),
            w_h=rng.uniform(-scale, scale, (4 * h, h)),
            b=np.zeros(4 * h),
            w_y=rng.uniform(-scale, scale, (n_dof, h)),
            b_y=np.zeros(n_dof),
        )

    def named_arrays(self):
        return [("w_x", self.w_x), ("w_h", self.w_h), ("b", self.b),
                ("w_y", self.w_y), ("b_y", self.b_y)]

    def validate(self):
        h = self.hidden_size
        shapes = {"w_x": (4 * h, self.n_dof), "w_h": (4 * h, h), "b": (4 * h,),
                  "w_y": (self.n_dof, h), "b_y": (self.n_dof,)}
        for name, arr in self.named_arrays():
            if arr.shape != shapes[name] or not np.all(np.isfinite(arr)):
                raise ModelCorruptError(f"bad parameter array {name}")


def lstm_cell(params: LstmParams, c, h, v):
    """One LSTM step; returns (c_next, h_next, gates) with gates cached for
    backprop."""
    z = params.w_x @ v + params.w_h @ h + params.b
    hs = params.hidden_size
    i = sigmoid(z[:hs])
    f = sigmoid(z[hs:2 * hs])
    o = sigmoid(z[2 * hs:3 * hs])
    g = np.tanh(z[3 * hs:])
    c_next = f * c + i * g
    h_next = o * np.tanh(c_next)
    return c_next, h_next, (i, f, o, g)


def lstm_forward(params: LstmParams, c, h, v_t):
    """Advance the cell with input v_t, then read out the prediction."""
    params.validate()
    v = np.asarray(v_t, dtype=float)
    c_next, h_next, _ = lstm_cell(params, c, h, v)
    v_hat = params.w_y @ h_next + params.b_y
    return v_hat, c_next, h_next


class LstmPredictor(Predictor):
    """Small LSTM one-step predictor; trained offline, frozen at run time."""

    kind = "lstm"

    def __init__(self, params: LstmParams, warmup: int = 10):
        params.validate()
        super().__init__(params.n_dof, warmup=warmup)
        self.params = params
        self._reset_state()

    def _reset_state(self):
        hs = self.params.hidden_size
        self.c = np.zeros(hs)
        self.h = np.zeros(hs)

    def _predict(self):
        return self.params.w_y @ self.h + self.params.b_y

    def _advance(self, v):
        self.c, self.h, _ = lstm_cell(self.params, self.c, self.h, v)

    def _state_dict(self):
        return {"c": self.c, "h": self.h}

    def _load_state_dict(self, state):
        self.c = state["c"]
        self.h = state["h"]

    def _param_arrays(self):
        return [arr for _, arr in self.params.named_arrays()]


def perfect_predict(velocities: np.ndarray, t: int, n: int) -> PredictionTarget:
    """True future slice of a reference velocity sequence as the target.

    Past the end of the sequence the final position is held (zero velocity).
    """
    velocities = np.asarray(velocities, dtype=float)
    total, d = velocities.shape
    vels = np.zeros((n, d))
    avail = max(0, min(n, total - t))
    vels[:avail] = velocities[t:t + avail]
    base = velocities[:t].sum(axis=0)
    positions = base + np.cumsum(vels, axis=0)
    return PredictionTarget(positions=positions, velocities=vels)


class PerfectPredictor(Predictor):
    """Oracle that reads the reference sequence it is tracking."""

    kind = "perfect"

    def __init__(self, velocities: np.ndarray):
        velocities = np.asarray(velocities, dtype=float)
        super().__init__(velocities.shape[1], warmup=0)
        self.reference = velocities
        self.t = 0

    def _advance(self, v):
        # Only real observations move the cursor; rollouts are restored.
        pass

    def observe(self, v_t):
        super().observe(v_t)
        self.t += 1

    def _predict(self):
        if self.t < len(self.reference):
            return self.reference[self.t].copy()
        return np.zeros(self.n_dof)

    def predict_horizon(self, n: int) -> PredictionTarget:
        if not (1 <= n <= MAX_HORIZON):
            raise InvalidInputError(f"horizon {n} out of range")
        target = perfect_predict(self.reference, self.t, n)
        # Rebase onto the observed cumulative position.
        offset = self.last_position - self.reference[: self.t].sum(axis=0)
        return PredictionTarget(positions=target.positions + offset,
                                velocities=target.velocities)

    def _state_dict(self):
        return {"t": self.t}

    def _load_state_dict(self, state):
        self.t = state["t"]


def save_model(path, predictor: Predictor) -> None:
    """Write a self-describing JSON model file."""
    doc: dict = {"kind": predictor.kind, "n_dof": predictor.n_dof,
                 "warmup": predictor.warmup}
    if isinstance(predictor, DybmPredictor):
        doc["config"] = {
            "d_max": predictor.d_max,
            "decay_rates": predictor.decay_rates.tolist(),
            "learning_rate": predictor.learning_rate,
            "adaptive": predictor.adaptive,
            "online": predictor.online,
            "esn": predictor.esn.config() if predictor.esn else None,
        }
        doc["params"] = {name: {"shape": list(p.shape), "data": p.reshape(-1).tolist()}
                         for name, p in predictor._named_params()}
    elif isinstance(predictor, LstmPredictor):
        doc["config"] = {"hidden_size": predictor.params.hidden_size}
        doc["params"] = {name: {"shape": list(p.shape), "data": p.reshape(-1).tolist()}
                         for name, p in predictor.params.named_arrays()}
    elif predictor.kind in ("zero", "const_velocity"):
        doc["params"] = {}
    else:
        raise InvalidInputError(f"cannot serialize predictor kind {predictor.kind}")
    with open(path, "w") as f:
        json.dump(doc, f)


def _unpack(params: dict, name: str) -> np.ndarray:
    entry = params[name]
    return np.asarray(entry["data"], dtype=float).reshape(entry["shape"])


def load_model(path) -> Predictor:
    with open(path) as f:
        doc = json.load(f)
    kind, n_dof = doc["kind"], doc["n_dof"]
    if kind == "zero":
        return ZeroMotionPredictor(n_dof)
    if kind == "const_velocity":
        return ConstantVelocityPredictor(n_dof)
    if kind == "dybm":
        cfg = doc["config"]
        esn = EsnReservoir(n_dof, **cfg["esn"]) if cfg["esn"] else None
        p = DybmPredictor(n_dof, d_max=cfg["d_max"],
                          decay_rates=cfg["decay_rates"],
                          learning_rate=cfg["learning_rate"],
                          adaptive=cfg["adaptive"], online=cfg["online"],
                          esn=esn, warmup=doc.get("warmup", 10))
        p.w_delay = _unpack(doc["params"], "w_delay")
        p.u_trace = _unpack(doc["params"], "u_trace")
        p.bias = _unpack(doc["params"], "bias")
        if esn is not None:
            p.w_esn = _unpack(doc["params"], "w_esn")
        return p
    if kind == "lstm":
        params = LstmParams(
            w_x=_unpack(doc["params"], "w_x"),
            w_h=_unpack(doc["params"], "w_h"),
            b=_unpack(doc["params"], "b"),
            w_y=_unpack(doc["params"], "w_y"),
            b_y=_unpack(doc["params"], "b_y"),
        )
        return LstmPredictor(params, warmup=doc.get("warmup", 10))
    raise InvalidInputError(f"unknown model kind {kind!r}")
