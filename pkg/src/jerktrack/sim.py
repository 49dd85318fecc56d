"""Closed-loop tracking simulator.

The plant is an ideal triple integrator per DOF driven by the first jerk of
each receding-horizon solve. A reference stroke is replayed online as the
"human"; the controller runs in one of four modes: feedback only, learned
feedforward, perfect prediction, or a scheduled switch between feedback and
feedforward.

Weight convention: the blending is stored as an explicit feedback weight w,
with the MPC's feedforward homotopy weight set to alpha = 1 - w. The
switching schedule and the trace's alpha column carry the feedback weight,
matching the direction of the reported switch (feedback-only at 1 down to
feedforward-only at 0).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .core import HorizonParams, InvalidInputError, MultiDofState, step_dynamics
from .dataset import NormalizedSequence
from .mpc import ObjectiveWeights, build_condensed, mpc_step
from .predictors import (
    PerfectPredictor,
    Predictor,
    hold_target,
)

__all__ = [
    "SwitchSchedule",
    "SimConfig",
    "TraceRecord",
    "alpha_at",
    "run_closed_loop",
    "tracking_mse",
    "write_trace_csv",
    "write_summary_json",
]

MODES = ("feedback_only", "with_prediction", "perfect_prediction", "switching")


@dataclass(frozen=True)
class SwitchSchedule:
    """Linear ramp of the feedback weight between two steps."""

    start_step: int = 30
    end_step: int = 40
    from_alpha: float = 1.0
    to_alpha: float = 0.0

    def __post_init__(self):
        if self.start_step >= self.end_step:
            raise InvalidInputError("schedule start must precede end")
        for a in (self.from_alpha, self.to_alpha):
            if not (0.0 <= a <= 1.0):
                raise InvalidInputError("schedule weights must be in [0, 1]")


def alpha_at(schedule: SwitchSchedule, k: int) -> float:
    """Feedback weight at step k: flat outside the ramp, linear inside."""
    if k <= schedule.start_step:
        return schedule.from_alpha
    if k >= schedule.end_step:
        return schedule.to_alpha
    frac = (k - schedule.start_step) / (schedule.end_step - schedule.start_step)
    return schedule.from_alpha + frac * (schedule.to_alpha - schedule.from_alpha)


@dataclass
class SimConfig:
    mode: str
    sequence: NormalizedSequence
    predictor: Predictor | None = None
    schedule: SwitchSchedule | None = None
    horizon: int = 10
    dt: float = 0.01
    scale: float = 0.1  # unit box mapped to 0.1 m (the reference grid spacing)
    beta: float = 1e-11
    gamma: float = 1.0
    extra_steps: int = 0  # keep simulating past the reference end

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown simulation mode {self.mode!r}")
        if self.mode == "with_prediction" and self.predictor is None:
            raise InvalidInputError("with_prediction needs a predictor")
        if self.horizon < 1:
            raise InvalidInputError("horizon must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    time: float
    reference: np.ndarray  # (2,), meters
    plant: np.ndarray  # (2,), meters
    error_xy: np.ndarray  # (2,), meters
    error: float  # Euclidean norm, meters
    alpha: float  # feedback weight
    jerk: np.ndarray  # (2,), m/s^3


def _reference_positions(seq: NormalizedSequence, scale: float) -> np.ndarray:
    """(T+1, 2) reference path in meters, starting at the stroke start."""
    cum = np.vstack([np.zeros(2), np.cumsum(seq.velocities, axis=0)])
    return scale * (np.asarray(seq.start_position) + cum)


def run_closed_loop(cfg: SimConfig) -> list[TraceRecord]:
    """Simulate the tracking task; one record per control step."""
    vels = np.asarray(cfg.sequence.velocities, dtype=float)
    if len(vels) == 0:
        raise InvalidInputError("empty reference sequence")
    refs = _reference_positions(cfg.sequence, cfg.scale)
    n_steps = len(vels) + cfg.extra_steps
    params = HorizonParams(n_steps=cfg.horizon, dt=cfg.dt, n_dof=2)
    model = build_condensed(params)

    predictor: Predictor | None
    if cfg.mode == "feedback_only":
        predictor = None
    elif cfg.mode == "with_prediction":
        predictor = cfg.predictor
    else:  # perfect_prediction, or switching without an explicit predictor
        predictor = cfg.predictor if cfg.predictor is not None else \
            PerfectPredictor(vels)
    if predictor is not None:
        predictor.reset(np.asarray(cfg.sequence.start_position, dtype=float))

    plant = MultiDofState.at_rest(refs[0])
    trace = []
    for k in range(n_steps):
        # At tick k the pen has reached refs[k]; the controller is scored
        # against refs[k+1], which it has not seen yet. Feedback control is
        # therefore one revealed sample behind the pen.
        if predictor is not None and k >= 1:
            v_k = vels[k - 1] if k - 1 < len(vels) else np.zeros(2)
            predictor.observe(v_k)
        ref_known = refs[min(k, len(refs) - 1)]
        ref_now = refs[min(k + 1, len(refs) - 1)]

        conservative = hold_target(ref_known, params)
        if cfg.mode == "feedback_only":
            feedback_w = 1.0
            predicted = conservative
        else:
            if cfg.mode == "switching":
                feedback_w = alpha_at(cfg.schedule or SwitchSchedule(), k)
            else:
                feedback_w = 0.0
            if not predictor.ready:
                feedback_w = 1.0
            if feedback_w < 1.0:
                predicted = predictor.predict_horizon(cfg.horizon).to_stacked(
                    params, scale=cfg.scale, dt=cfg.dt)
            else:
                predicted = conservative

        w = ObjectiveWeights.position_tracking(
            params, alpha=1.0 - feedback_w, beta=cfg.beta, gamma=cfg.gamma)
        control, _ = mpc_step(plant, conservative, predicted, model, w)

        jerks = control.as_array()
        plant = MultiDofState(tuple(
            step_dynamics(dof, jerks[i], cfg.dt)
            for i, dof in enumerate(plant.dofs)))
        err = plant.positions - ref_now
        trace.append(TraceRecord(
            step=k, time=(k + 1) * cfg.dt, reference=ref_now.copy(),
            plant=plant.positions, error_xy=err,
            error=float(np.linalg.norm(err)), alpha=feedback_w, jerk=jerks))
    return trace


def tracking_mse(trace: list[TraceRecord]) -> float:
    """Mean squared Euclidean positional error over the trace, in m^2."""
    if not trace:
        raise InvalidInputError("empty trace")
    return float(np.mean([r.error**2 for r in trace]))


def write_trace_csv(path, trace: list[TraceRecord]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "time", "ref_x", "ref_y", "plant_x", "plant_y",
                    "err", "alpha", "jerk_x", "jerk_y"])
        for r in trace:
            w.writerow([r.step, f"{r.time:.6g}",
                        f"{r.reference[0]:.12g}", f"{r.reference[1]:.12g}",
                        f"{r.plant[0]:.12g}", f"{r.plant[1]:.12g}",
                        f"{r.error:.12g}", f"{r.alpha:.12g}",
                        f"{r.jerk[0]:.12g}", f"{r.jerk[1]:.12g}"])


def write_summary_json(path, mse_by_mode: dict[str, float]) -> None:
    summary = {"alpha_convention": "feedback_weight",
               "tracking_mse_m2": mse_by_mode}
    with open(path, "w") as f:
        json.dump(summary, f, indent=2)
