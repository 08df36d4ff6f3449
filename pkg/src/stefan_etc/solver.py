"""Time stepping of the coupled plant: heat PDE, moving interface, actuator.

The moving domain [0, s(t)] is mapped onto the fixed grid y = x/s
(boundary immobilization), giving
T_t = (alpha/s^2) T_yy + (y sdot/s) T_y with a flux condition at y=0, the
melting temperature pinned at y=1, sdot = -(beta/s) T_y(1) and qdot_c = U.
Explicit Euler steps are clamped to the diffusion stability limit
cfl_safety * s^2 * dy^2 / (2 alpha); substeps cover a base step exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._accel import get_lane
from .errors import NonFiniteState, StabilityViolation
from .model import PlantParams, StefanState


@dataclass(frozen=True)
class SolverSettings:
    """Grid size, base step, CFL safety factor, interface stencil order."""

    N: int = 200
    dt: float | None = None
    cfl_safety: float = 0.9
    flux_stencil_order: int = 2

    def __post_init__(self):
        if self.N < 8:
            raise ValueError(f"need N >= 8 grid points, got {self.N}")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.flux_stencil_order not in (1, 2):
            raise ValueError("flux_stencil_order must be 1 or 2")


def stable_dt(s: float, n: int, alpha: float, cfl_safety: float = 0.9) -> float:
    """Largest explicit step at interface position s (diffusion limit)."""
    dy = 1.0 / (n - 1)
    return cfl_safety * s * s * dy * dy / (2.0 * alpha)


def interface_velocity(state: StefanState, params: PlantParams,
                       settings: SolverSettings) -> float:
    """Interface speed from the one-sided temperature gradient at y = 1."""
    lane = get_lane()
    dy = 1.0 / (state.theta.shape[0] - 1)
    grad = lane.interface_gradient(state.theta, dy, settings.flux_stencil_order)
    return -params.beta * grad / state.s


def step(state: StefanState, U: float, dt: float, params: PlantParams,
         settings: SolverSettings) -> StefanState:
    """Advance the plant by dt under a constant input U.

    Returns a new state; dt = 0 returns an identical copy. Raises
    StabilityViolation if the interface collapses below 1e-6 * L and
    NonFiniteState if any sample leaves the float range.
    """
    lane = get_lane()
    theta = state.theta.copy()
    scratch = np.empty_like(theta)
    iy = np.arange(theta.shape[0], dtype=float)
    s, qc, _, _, _, _, status = lane.advance(
        theta, state.s, state.qc, 0.0, float(U), float(dt),
        params.alpha, params.beta, params.k, params.T_m,
        settings.cfl_safety, settings.flux_stencil_order,
        1e-6 * params.L, scratch, iy)
    t_new = state.t + dt
    if status == 1:
        raise StabilityViolation(
            f"interface fell below the floor 1e-6*L={1e-6 * params.L:.3e} m",
            t=t_new)
    if status == 2:
        raise NonFiniteState("state became non-finite", t=t_new)
    return StefanState(t=t_new, s=s, qc=qc, theta=theta)


@dataclass
class PlantTrace:
    """Per-step log of the generic simulation loop."""

    t: np.ndarray
    s: np.ndarray
    qc: np.ndarray
    U: np.ndarray
    sdot: np.ndarray

    def __len__(self) -> int:
        return self.t.shape[0]


def run(state0: StefanState, params: PlantParams, settings: SolverSettings,
        t_final: float, controller: Callable[[StefanState], float],
        dt: float | None = None) -> tuple[PlantTrace, StefanState]:
    """Drive the plant with a per-step controller callback.

    The callback is consulted once per base step (this is the event
    detection resolution) with the current state; its return value is held
    for the step. Stepper failures are re-raised with the failing time
    attached. Returns the trace and the final state.
    """
    if dt is None:
        dt = settings.dt
    if dt is None:
        dt = stable_dt(state0.s, settings.N, params.alpha, settings.cfl_safety)
    n_steps = max(0, int(np.ceil(t_final / dt - 1e-12)))

    state = state0.copy()
    rows_t = np.empty(n_steps + 1)
    rows_s = np.empty(n_steps + 1)
    rows_qc = np.empty(n_steps + 1)
    rows_u = np.empty(n_steps + 1)
    rows_sdot = np.empty(n_steps + 1)

    u = 0.0
    for i in range(n_steps):
        u = float(controller(state))
        rows_t[i] = state.t
        rows_s[i] = state.s
        rows_qc[i] = state.qc
        rows_u[i] = u
        rows_sdot[i] = interface_velocity(state, params, settings)
        state = step(state, u, dt, params, settings)
        # keep the time grid exact: t_n = n * dt
        state.t = (i + 1) * dt

    rows_t[n_steps] = state.t
    rows_s[n_steps] = state.s
    rows_qc[n_steps] = state.qc
    rows_u[n_steps] = u
    rows_sdot[n_steps] = interface_velocity(state, params, settings)
    trace = PlantTrace(t=rows_t, s=rows_s, qc=rows_qc, U=rows_u, sdot=rows_sdot)
    return trace, state
