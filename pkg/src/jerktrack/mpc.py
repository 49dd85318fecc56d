"""Condensed horizon model, homotopy objective assembly and the QP solve.

The horizon dynamics are condensed into x_stacked = A_til @ x0 + B_til @ u_stacked
so the only decision variables are the stacked jerks. The tracking objective
blends a conservative (hold-position) target and a learned feedforward target
with a homotopy weight alpha; the resulting unconstrained QP is solved by a
Cholesky factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ControlVector,
    HorizonParams,
    InvalidInputError,
    MultiDofState,
    StackedControl,
    StackedState,
    single_dof_matrices,
)

__all__ = [
    "CapacityError",
    "SolverError",
    "CondensedModel",
    "ObjectiveWeights",
    "MpcSolution",
    "build_condensed",
    "assemble_targets",
    "cholesky_solve",
    "solve_qp",
    "mpc_step",
]

# Dense matrices only; at the intended horizon (N=10, D<=3) B_til is 90x30.
MAX_MATRIX_ELEMENTS = 4_000_000


class CapacityError(RuntimeError):
    """Horizon matrices would exceed the configured memory cap."""


class SolverError(RuntimeError):
    """The QP solve failed (matrix not SPD within tolerance)."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


@dataclass(frozen=True)
class CondensedModel:
    """Horizon prediction matrices: x_stacked = a_tilde @ x0 + b_tilde @ u."""

    a_tilde: np.ndarray
    b_tilde: np.ndarray
    params: HorizonParams


@dataclass(frozen=True)
class ObjectiveWeights:
    """Homotopy weight alpha, jerk regularizer beta and diagonal gains.

    g_c weights the conservative (feedback) target error, g_f the learned
    feedforward target error; both are diagonals of length 3*D*N.
    """

    alpha: float
    beta: float
    g_c: np.ndarray
    g_f: np.ndarray

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidInputError(f"alpha must be in [0, 1], got {self.alpha}")
        if not (self.beta > 0):
            raise InvalidInputError(f"beta must be positive, got {self.beta}")
        object.__setattr__(self, "g_c", np.asarray(self.g_c, dtype=float))
        object.__setattr__(self, "g_f", np.asarray(self.g_f, dtype=float))
        if np.any(self.g_c < 0) or np.any(self.g_f < 0):
            raise InvalidInputError("gains must be nonnegative")

    @staticmethod
    def position_tracking(
        params: HorizonParams,
        alpha: float,
        beta: float = 1e-6,
        gamma: float = 1.0,
    ) -> "ObjectiveWeights":
        """Default gains: weight positions 1, velocities/accelerations 0.

        gamma < 1 applies a geometric per-timestep discount to the
        feedforward gain so later (less reliable) predictions count less.
        """
        diag = np.zeros((params.n_steps, params.n_dof, 3))
        diag[:, :, 0] = 1.0
        g_c = diag.reshape(-1)
        discount = gamma ** np.arange(params.n_steps, dtype=float)
        g_f = (diag * discount[:, None, None]).reshape(-1)
        return ObjectiveWeights(alpha=alpha, beta=beta, g_c=g_c, g_f=g_f)


@dataclass(frozen=True)
class MpcSolution:
    u_tilde: StackedControl
    x_tilde: StackedState
    objective_value: float


def build_condensed(params: HorizonParams) -> CondensedModel:
    """Condense the per-step dynamics into horizon prediction matrices.

    Stacked row block for timestep t holds the state after t+1 steps;
    control column j is the jerk applied at step j, so the timestep blocks
    of b_tilde are lower triangular.
    """
    n, d = params.n_steps, params.n_dof
    if 3 * d * n * d * n > MAX_MATRIX_ELEMENTS:
        raise CapacityError(
            f"horizon matrices for N={n}, D={d} exceed the dense-matrix cap"
        )
    a, b = single_dof_matrices(params.dt)

    # Single-DOF condensing first; powers of A computed incrementally.
    a_pow = [np.eye(3)]
    for _ in range(n):
        a_pow.append(a @ a_pow[-1])

    a_tilde = np.zeros((3 * d * n, 3 * d))
    b_tilde = np.zeros((3 * d * n, d * n))
    for t in range(n):
        for k in range(d):
            rows = slice((t * d + k) * 3, (t * d + k) * 3 + 3)
            a_tilde[rows, 3 * k : 3 * k + 3] = a_pow[t + 1]
            for j in range(t + 1):
                b_tilde[rows, j * d + k : j * d + k + 1] = a_pow[t - j] @ b
    return CondensedModel(a_tilde=a_tilde, b_tilde=b_tilde, params=params)


def assemble_targets(
    conservative: StackedState,
    predicted: StackedState,
    x0: MultiDofState,
    model: CondensedModel,
    w: ObjectiveWeights,
) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic form (H, g) of the tracking objective in the stacked jerks.

    H = (1-alpha) B'Gc'GcB + alpha B'Gf'GfB + beta I
    g = (1-alpha) B'Gc'Gc (x_c - A x0) + alpha B'Gf'Gf (x_pred - A x0)

    The alpha = 0 and alpha = 1 endpoints skip the annihilated term
    entirely, so the result is bitwise independent of the unused target.
    """
    p = model.params
    for s in (conservative, predicted):
        if s.params.state_len != p.state_len:
            raise InvalidInputError("target length does not match the model")
    if x0.n_dof != p.n_dof:
        raise InvalidInputError(
            f"initial state has {x0.n_dof} DOFs, model expects {p.n_dof}"
        )
    if w.g_c.shape != (p.state_len,) or w.g_f.shape != (p.state_len,):
        raise InvalidInputError("gain diagonals must have length 3*D*N")

    free = model.a_tilde @ x0.as_array()
    bt = model.b_tilde
    h = w.beta * np.eye(p.control_len)
    g = np.zeros(p.control_len)
    if w.alpha != 1.0:
        gcb = w.g_c[:, None] * bt
        h += (1.0 - w.alpha) * (gcb.T @ gcb)
        g += (1.0 - w.alpha) * (bt.T @ (w.g_c**2 * (conservative.values - free)))
    if w.alpha != 0.0:
        gfb = w.g_f[:, None] * bt
        h += w.alpha * (gfb.T @ gfb)
        g += w.alpha * (bt.T @ (w.g_f**2 * (predicted.values - free)))
    return h, g


def cholesky_solve(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Solve h @ u = g for SPD h by an explicit Cholesky factorization.

    Raises SolverError with the failing pivot index when h is not positive
    definite within tolerance.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    n = h.shape[0]
    if h.shape != (n, n) or g.shape != (n,):
        raise InvalidInputError("shape mismatch in linear solve")
    l = np.zeros((n, n))
    tol = 1e-13 * max(1.0, float(np.max(np.abs(np.diag(h)))))
    for j in range(n):
        pivot = h[j, j] - l[j, :j] @ l[j, :j]
        if pivot <= tol:
            raise SolverError(
                f"matrix not positive definite at pivot {j}", pivot_index=j
            )
        l[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            l[j + 1 :, j] = (h[j + 1 :, j] - l[j + 1 :, :j] @ l[j, :j]) / l[j, j]
    # Forward then backward substitution.
    y = np.zeros(n)
    for i in range(n):
        y[i] = (g[i] - l[i, :i] @ y[:i]) / l[i, i]
    u = np.zeros(n)
    for i in range(n - 1, -1, -1):
        u[i] = (y[i] - l[i + 1 :, i] @ u[i + 1 :]) / l[i, i]
    return u


def solve_qp(h: np.ndarray, g: np.ndarray, params: HorizonParams) -> StackedControl:
    """Minimize the assembled quadratic objective; residual checked."""
    u = cholesky_solve(h, g)
    resid = float(np.max(np.abs(h @ u - g)))
    bound = 1e-8 * (1.0 + (float(np.max(np.abs(g))) if g.size else 0.0))
    if resid >= bound:
        raise SolverError(f"QP residual {resid:g} exceeds bound {bound:g}")
    return StackedControl(u, params)


def mpc_step(
    x0: MultiDofState,
    conservative: StackedState,
    predicted: StackedState,
    model: CondensedModel,
    w: ObjectiveWeights,
) -> tuple[ControlVector, MpcSolution]:
    """One receding-horizon step: solve the QP, return the first jerks."""
    h, g = assemble_targets(conservative, predicted, x0, model, w)
    u = solve_qp(h, g, model.params)
    x = StackedState(model.a_tilde @ x0.as_array() + model.b_tilde @ u.values,
                     model.params)
    obj = float(0.5 * u.values @ h @ u.values - g @ u.values)
    return u.first(), MpcSolution(u_tilde=u, x_tilde=x, objective_value=obj)
