"""Shared domain types and the single-step triple-integrator dynamics.

The plant is a chain of three integrators per degree of freedom: position,
velocity and acceleration make up the state, jerk is the control input.
Everything downstream (condensing, the QP, the simulator) builds on the
per-step update implemented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidInputError",
    "DofState",
    "MultiDofState",
    "ControlVector",
    "HorizonParams",
    "StackedState",
    "StackedControl",
    "step_dynamics",
    "single_dof_matrices",
]


class InvalidInputError(ValueError):
    """Raised when an operation receives non-finite or ill-shaped input."""


def _require_finite(name, *values):
    for v in values:
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class DofState:
    """Position, velocity and acceleration of one degree of freedom."""

    position: float
    velocity: float
    acceleration: float

    def as_array(self) -> np.ndarray:
        return np.array([self.position, self.velocity, self.acceleration])

    @staticmethod
    def from_array(a) -> "DofState":
        a = np.asarray(a, dtype=float)
        return DofState(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class MultiDofState:
    """Per-DOF states of the end effector; D is fixed per controller."""

    dofs: tuple[DofState, ...]

    def __post_init__(self):
        if len(self.dofs) < 1:
            raise InvalidInputError("need at least one DOF")
        object.__setattr__(self, "dofs", tuple(self.dofs))

    @property
    def n_dof(self) -> int:
        return len(self.dofs)

    def as_array(self) -> np.ndarray:
        """Flat (pos, vel, acc) per DOF, DOF-major: length 3*D."""
        return np.concatenate([d.as_array() for d in self.dofs])

    @property
    def positions(self) -> np.ndarray:
        return np.array([d.position for d in self.dofs])

    @staticmethod
    def from_array(a) -> "MultiDofState":
        a = np.asarray(a, dtype=float).reshape(-1, 3)
        return MultiDofState(tuple(DofState.from_array(row) for row in a))

    @staticmethod
    def at_rest(positions) -> "MultiDofState":
        return MultiDofState(
            tuple(DofState(float(p), 0.0, 0.0) for p in np.atleast_1d(positions))
        )


@dataclass(frozen=True)
class ControlVector:
    """One jerk command per DOF."""

    jerks: tuple[float, ...]

    def __post_init__(self):
        _require_finite("jerks", self.jerks)
        object.__setattr__(self, "jerks", tuple(float(j) for j in self.jerks))

    def as_array(self) -> np.ndarray:
        return np.array(self.jerks)


@dataclass(frozen=True)
class HorizonParams:
    """Horizon length N, timestep dt and DOF count D of a controller."""

    n_steps: int
    dt: float
    n_dof: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidInputError(f"n_steps must be >= 1, got {self.n_steps}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        if self.n_dof < 1:
            raise InvalidInputError(f"n_dof must be >= 1, got {self.n_dof}")

    @property
    def state_len(self) -> int:
        return 3 * self.n_dof * self.n_steps

    @property
    def control_len(self) -> int:
        return self.n_dof * self.n_steps


@dataclass(frozen=True)
class StackedState:
    """Stacked horizon state vector.

    Ordering is timestep-major, DOF-minor, with (pos, vel, acc) innermost:
    index ((t*D + d)*3 + c) for timestep t, DOF d, component c.
    """

    values: np.ndarray
    params: HorizonParams

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.params.state_len,):
            raise InvalidInputError(
                f"stacked state must have length {self.params.state_len}, "
                f"got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    def positions(self) -> np.ndarray:
        """(N, D) array of positions per timestep."""
        return self.values.reshape(self.params.n_steps, self.params.n_dof, 3)[:, :, 0]

    @staticmethod
    def from_components(positions, velocities, accelerations, params: HorizonParams):
        """Build from (N, D) arrays of each component."""
        stacked = np.stack(
            [np.asarray(positions, dtype=float),
             np.asarray(velocities, dtype=float),
             np.asarray(accelerations, dtype=float)],
            axis=-1,
        )
        return StackedState(stacked.reshape(-1), params)


@dataclass(frozen=True)
class StackedControl:
    """Stacked horizon control vector; index (t*D + d)."""

    values: np.ndarray
    params: HorizonParams

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.params.control_len,):
            raise InvalidInputError(
                f"stacked control must have length {self.params.control_len}, "
                f"got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    def first(self) -> ControlVector:
        return ControlVector(tuple(self.values[: self.params.n_dof]))


def single_dof_matrices(dt: float) -> tuple[np.ndarray, np.ndarray]:
    """The 3x3 state transition A and 3x1 input matrix B for one DOF."""
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidInputError(f"dt must be positive, got {dt}")
    a = np.array([
        [1.0, dt, dt * dt / 2.0],
        [0.0, 1.0, dt],
        [0.0, 0.0, 1.0],
    ])
    b = np.array([[dt ** 3 / 6.0], [dt * dt / 2.0], [dt]])
    return a, b


def step_dynamics(x: DofState, u: float, dt: float) -> DofState:
    """Advance one DOF by one timestep under constant jerk u."""
    _require_finite("state", x.as_array())
    _require_finite("jerk", u)
    a, b = single_dof_matrices(dt)
    nxt = a @ x.as_array() + b[:, 0] * float(u)
    return DofState.from_array(nxt)
