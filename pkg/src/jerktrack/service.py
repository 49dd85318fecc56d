"""Real-time tracking session server.

A client streams live pen samples over a websocket; each accepted sample
advances one control tick (observe -> predict -> MPC solve -> plant step)
and gets exactly one state reply with the simulated robot pose, the current
blending weight and the N-step predicted positions.

Here alpha is the feedforward weight: it is held at 0 until the predictor
has enough history, then ramped linearly to 1 over a configured number of
ticks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .core import HorizonParams, MultiDofState, step_dynamics
from .mpc import CondensedModel, ObjectiveWeights, build_condensed, mpc_step
from .predictors import DybmPredictor, Predictor, hold_target

__all__ = ["SessionConfig", "Session", "create_app"]


@dataclass(frozen=True)
class SessionConfig:
    horizon: int = 10
    dt: float = 0.01
    warmup: int = 10
    ramp_ticks: int = 10
    beta: float = 1e-11
    retain_online: bool = False


class Session:
    """One live tracking session: predictor + controller + plant.

    Message handling is strictly sequential; the predictor is stateful.
    """

    def __init__(self, predictor_factory, config: SessionConfig = SessionConfig()):
        self.config = config
        self._factory = predictor_factory
        self.params = HorizonParams(n_steps=config.horizon, dt=config.dt,
                                    n_dof=2)
        self.model: CondensedModel = build_condensed(self.params)
        self.predictor: Predictor = predictor_factory()
        self.predictor.warmup = config.warmup
        self._init_state()

    def _init_state(self):
        self.plant = MultiDofState.at_rest(np.zeros(2))
        self.last_t: int | None = None
        self.last_pos: np.ndarray | None = None
        self.ramp_count = 0
        self.predictor.reset()

    def reset(self) -> dict:
        """Reinitialize plant, history and the alpha governor.

        Online-learned DyBM parameters survive the reset when configured to;
        otherwise the predictor is rebuilt from its factory.
        """
        if not (self.config.retain_online
                and isinstance(self.predictor, DybmPredictor)):
            self.predictor = self._factory()
            self.predictor.warmup = self.config.warmup
        self._init_state()
        return {"type": "ack"}

    def tick(self, sample: dict) -> dict:
        """Process one pen sample; returns the state reply or an error."""
        try:
            t = int(sample["t"])
            pos = np.array([float(sample["x"]), float(sample["y"])])
        except (KeyError, TypeError, ValueError):
            return {"type": "error", "message": "malformed sample"}
        if not np.all(np.isfinite(pos)):
            return {"type": "error", "message": "non-finite sample"}
        if self.last_t is not None and t <= self.last_t:
            return {"type": "error",
                    "message": f"out-of-order sample t={t} after {self.last_t}"}

        if self.last_pos is None:
            # First sample anchors the session; the plant and the
            # predictor's integrated position both start on the pen.
            self.plant = MultiDofState.at_rest(pos)
            self.predictor.reset(pos)
            velocity = np.zeros(2)
        else:
            velocity = pos - self.last_pos
        self.last_t, self.last_pos = t, pos
        self.predictor.observe(velocity)

        if self.predictor.ready:
            self.ramp_count = min(self.ramp_count + 1, self.config.ramp_ticks)
        alpha = self.ramp_count / self.config.ramp_ticks

        conservative = hold_target(pos, self.params)
        if alpha > 0.0:
            target = self.predictor.predict_horizon(self.config.horizon)
            predicted = target.to_stacked(self.params, scale=1.0,
                                          dt=self.config.dt)
            pred_positions = target.positions
        else:
            predicted = conservative
            pred_positions = np.empty((0, 2))

        weights = ObjectiveWeights.position_tracking(
            self.params, alpha=alpha, beta=self.config.beta)
        control, _ = mpc_step(self.plant, conservative, predicted,
                              self.model, weights)
        jerks = control.as_array()
        self.plant = MultiDofState(tuple(
            step_dynamics(dof, jerks[i], self.config.dt)
            for i, dof in enumerate(self.plant.dofs)))
        rx, ry = self.plant.positions
        return {"type": "state", "t": t, "rx": float(rx), "ry": float(ry),
                "alpha": alpha,
                "pred": [[float(x), float(y)] for x, y in pred_positions]}

    def handle(self, message: dict) -> dict:
        kind = message.get("type")
        if kind == "sample":
            return self.tick(message)
        if kind == "reset":
            return self.reset()
        return {"type": "error", "message": f"unknown message type {kind!r}"}


def create_app(predictor_factory=None, config: SessionConfig = SessionConfig()):
    """FastAPI app with one websocket endpoint; one session per connection."""
    if predictor_factory is None:
        def predictor_factory():
            return DybmPredictor(2, online=True)

    app = FastAPI(title="jerktrack")

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        session = Session(predictor_factory, config)
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_text(json.dumps(
                        {"type": "error", "message": "invalid JSON"}))
                    continue
                await websocket.send_text(json.dumps(session.handle(message)))
        except WebSocketDisconnect:
            pass

    return app
