"""Plant data model: physical parameters, initial data, energy functional.

The plant is a one-phase melting problem: heat conduction in the liquid
layer [0, s(t)], a moving liquid/solid interface at x = s(t) driven by the
interface heat flux, and a first-order actuator feeding the boundary flux
q_c. States are stored on the normalized coordinate y = x/s in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import EmptyTraceError

if TYPE_CHECKING:
    from .controller import ControllerGains


def trapezoid_uniform(values: np.ndarray, dx: float) -> float:
    """Composite trapezoid rule on uniformly spaced samples."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        return 0.0
    return float(dx * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1]))


@dataclass(frozen=True)
class PlantParams:
    """Material constants and domain geometry.

    alpha: thermal diffusivity [m^2/s]
    beta:  interface-response coefficient multiplying the interface
           temperature gradient [m^2/(s K)]
    k:     thermal conductivity [W/(m K)]
    L:     material length [m]
    T_m:   melting temperature [degC]
    """

    alpha: float
    beta: float
    k: float
    L: float
    T_m: float


#: Named material presets. The zinc values follow the standard constants
#: used for zinc strips in the melting-control literature; the
#: nondimensional preset makes every acceptance property unit-free.
MATERIAL_PRESETS: dict[str, dict[str, float]] = {
    "zinc": {"alpha": 4.5322e-5, "beta": 1.577e-7, "k": 116.0, "T_m": 420.0, "L": 0.35},
    "nondim": {"alpha": 1.0, "beta": 1.0, "k": 1.0, "T_m": 0.0, "L": 1.0},
}


@dataclass(frozen=True)
class InitialCondition:
    """Initial interface position, temperature samples on [0, s0], flux."""

    s0: float
    T0: np.ndarray
    qc0: float = 0.0


@dataclass(frozen=True)
class Setpoint:
    s_r: float


@dataclass
class StefanState:
    """Simulation state at one instant.

    theta holds N temperature samples on the normalized grid
    y_i = i/(N-1); theta[-1] is pinned to the melting temperature.
    """

    t: float
    s: float
    qc: float
    theta: np.ndarray

    def copy(self) -> "StefanState":
        return StefanState(self.t, self.s, self.qc, self.theta.copy())


@dataclass(frozen=True)
class AssumptionViolation:
    """One failed validity check: the quantity seen and the bound it broke."""

    name: str
    actual: float
    bound: float
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.name}: actual={self.actual:.9g}, bound={self.bound:.9g}"
        return f"{msg} ({self.detail})" if self.detail else msg


def linear_profile(T_m: float, amplitude: float, n: int) -> np.ndarray:
    """T_m + amplitude * (1 - y) on the normalized grid."""
    y = np.linspace(0.0, 1.0, n)
    return T_m + amplitude * (1.0 - y)


def flat_profile(T_m: float, n: int) -> np.ndarray:
    return np.full(n, float(T_m))


def initial_state(ic: InitialCondition, n: int | None = None) -> StefanState:
    """Build the t=0 state, resampling T0 onto an n-point grid if asked."""
    t0 = np.asarray(ic.T0, dtype=float)
    if n is not None and n != t0.shape[0]:
        y_src = np.linspace(0.0, 1.0, t0.shape[0])
        y_dst = np.linspace(0.0, 1.0, n)
        t0 = np.interp(y_dst, y_src, t0)
    return StefanState(t=0.0, s=float(ic.s0), qc=float(ic.qc0), theta=t0.copy())


def sigma(state: StefanState, params: PlantParams, sp: Setpoint) -> float:
    """Energy-deficit functional of the current state.

    Negative of stored-sensible-heat plus interface-offset terms; zero at
    the equilibrium (uniform melting temperature, interface at the
    setpoint). Quadrature is composite trapezoid on the state's grid.
    """
    n = state.theta.shape[0]
    dx = state.s / (n - 1)
    heat = trapezoid_uniform(state.theta - params.T_m, dx)
    return -((params.k / params.alpha) * heat
             + (params.k / params.beta) * (state.s - sp.s_r))


def _sigma_initial(params: PlantParams, ic: InitialCondition, sp: Setpoint) -> float:
    return sigma(initial_state(ic), params, sp)


def validate_config(params: PlantParams, ic: InitialCondition, sp: Setpoint,
                    gains: "ControllerGains") -> list[AssumptionViolation]:
    """Check every model-validity assumption and the feedback-gain condition.

    Returns an empty list when the configuration is admissible, otherwise
    one entry per violated check. Checks: parameter positivity, initial
    interface inside the domain, initial temperature at or above melting
    with the interface sample at melting, nonnegative initial flux, the
    setpoint reachability bound, gain positivity, and c1 >= qc0/sigma(0)
    (vacuous when qc0 = 0 and sigma(0) > 0).
    """
    out: list[AssumptionViolation] = []
    for name in ("alpha", "beta", "k", "L"):
        val = getattr(params, name)
        if not val > 0.0:
            out.append(AssumptionViolation(f"params.{name} > 0", val, 0.0))

    t0 = np.asarray(ic.T0, dtype=float)
    if t0.shape[0] < 2:
        out.append(AssumptionViolation("initial profile needs >= 2 samples",
                                       float(t0.shape[0]), 2.0))
        return out

    temp_scale = max(1.0, float(np.max(np.abs(t0 - params.T_m))))
    if not (0.0 < ic.s0 < params.L):
        out.append(AssumptionViolation("Assumption 1", ic.s0, params.L,
                                       "0 < s0 < L"))
    if float(np.min(t0 - params.T_m)) < -1e-9 * temp_scale:
        out.append(AssumptionViolation("Assumption 1", float(np.min(t0)),
                                       params.T_m, "T0(x) >= T_m"))
    if abs(float(t0[-1]) - params.T_m) > 1e-9 * temp_scale:
        out.append(AssumptionViolation("Assumption 1", float(t0[-1]),
                                       params.T_m, "T0(s0) = T_m"))
    if ic.qc0 < 0.0:
        out.append(AssumptionViolation("Assumption 2", ic.qc0, 0.0,
                                       "qc0 >= 0"))

    if ic.s0 > 0.0:
        dx = ic.s0 / (t0.shape[0] - 1)
        stored = trapezoid_uniform(t0 - params.T_m, dx)
        reach = ic.s0 + (params.beta / params.alpha) * stored
        if reach > sp.s_r * (1.0 + 1e-12):
            out.append(AssumptionViolation("Assumption 3", reach, sp.s_r,
                                           "s0 + (beta/alpha) int(T0-T_m) <= s_r"))
    if not sp.s_r < params.L:
        out.append(AssumptionViolation("Assumption 3", sp.s_r, params.L,
                                       "s_r < L"))

    if not gains.c1 > 0.0:
        out.append(AssumptionViolation("gain positivity", gains.c1, 0.0, "c1 > 0"))
    if not gains.c2 > 0.0:
        out.append(AssumptionViolation("gain positivity", gains.c2, 0.0, "c2 > 0"))
    if gains.delta1 < 0.0:
        out.append(AssumptionViolation("gain positivity", gains.delta1, 0.0,
                                       "delta1 >= 0"))
    if not (0.0 < gains.delta2 < 1.0):
        out.append(AssumptionViolation("gain positivity", gains.delta2, 1.0,
                                       "0 < delta2 < 1"))

    if gains.c1 > 0.0:
        sigma0 = _sigma_initial(params, ic, sp)
        if ic.qc0 > 0.0:
            if sigma0 <= 0.0 or gains.c1 < ic.qc0 / sigma0:
                bound = np.inf if sigma0 <= 0.0 else ic.qc0 / sigma0
                out.append(AssumptionViolation("gain condition", gains.c1,
                                               float(bound),
                                               "c1 >= qc0/sigma(0)"))
    return out


def energy_balance_defect(trace) -> float:
    """Largest drift of the energy-balance identity along a trace.

    Along exact solutions the energy functional obeys
    d(sigma)/dt = -q_c, so sigma(t) - sigma(0) + int_0^t q_c dtau vanishes.
    Evaluated on the recorded PDE-side sigma with a trapezoid time
    integral of q_c; the result gauges the discretization error.

    ``trace`` needs array attributes t, qc and sigma_pde.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.shape[0] == 0:
        raise EmptyTraceError("trace has no records")
    qc = np.asarray(trace.qc, dtype=float)
    sig = np.asarray(trace.sigma_pde, dtype=float)
    if t.shape[0] == 1:
        return 0.0
    inc = 0.5 * (qc[1:] + qc[:-1]) * np.diff(t)
    integral = np.concatenate(([0.0], np.cumsum(inc)))
    return float(np.max(np.abs(sig - sig[0] + integral)))
