"""Post-hoc stability diagnostics: integral transforms and Lyapunov data.

The forward Volterra transform maps the temperature-excess profile onto a
target profile w whose boundary value is epsilon * (s - s_r); its inverse
uses an exponential-trigonometric kernel. Quadratic functionals of (w, X)
and of the scalar barriers quantify decay; none of this feeds back into
the control loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .errors import EmptyTraceError
from .model import PlantParams, Setpoint, StefanState, trapezoid_uniform

if TYPE_CHECKING:
    from .controller import ControllerGains


def epsilon_upper_bound(alpha: float, beta: float, c1: float) -> float:
    """Transform parameters must satisfy 0 < epsilon < 2*sqrt(alpha*c1)/beta."""
    return 2.0 * math.sqrt(alpha * c1) / beta


def default_epsilon(alpha: float, beta: float, c1: float) -> float:
    """Midpoint of the admissible interval."""
    return math.sqrt(alpha * c1) / beta


@dataclass(frozen=True)
class BacksteppingParams:
    """Transform parameter epsilon and the derived kernel constants."""

    epsilon: float
    alpha: float
    beta: float
    c1: float

    def __post_init__(self):
        hi = epsilon_upper_bound(self.alpha, self.beta, self.c1)
        if not 0.0 < self.epsilon < hi:
            raise ValueError(
                f"epsilon={self.epsilon:.6g} outside the admissible interval "
                f"(0, {hi:.6g})")

    @property
    def lambda_bar(self) -> float:
        return self.beta * self.epsilon / (2.0 * self.alpha)

    @property
    def omega(self) -> float:
        num = 4.0 * self.alpha * self.c1 - (self.epsilon * self.beta) ** 2
        return math.sqrt(num / (4.0 * self.alpha * self.alpha))

    @property
    def p1(self) -> float:
        num = 2.0 * self.alpha * self.c1 - (self.epsilon * self.beta) ** 2
        return -num / (2.0 * self.alpha * self.beta * self.omega)


def forward_kernel(bp: BacksteppingParams, x: np.ndarray) -> np.ndarray:
    """Affine kernel of the forward transform."""
    return bp.c1 / bp.beta * x - bp.epsilon


def inverse_kernel(bp: BacksteppingParams, x: np.ndarray) -> np.ndarray:
    """Exponential-trigonometric kernel of the inverse transform."""
    return np.exp(bp.lambda_bar * x) * (bp.p1 * np.sin(bp.omega * x)
                                        + bp.epsilon * np.cos(bp.omega * x))


@lru_cache(maxsize=8)
def _grid_cache(n: int) -> tuple[np.ndarray, np.ndarray]:
    # index differences i-j and upper-triangular trapezoid weights
    idx = np.arange(n, dtype=float)
    diff = idx[:, None] - idx[None, :]
    weights = np.zeros((n, n))
    for i in range(n - 1):
        weights[i, i:] = 1.0
        weights[i, i] = 0.5
        weights[i, -1] = 0.5
    return diff, weights


def _volterra_apply(kernel_values_fn, profile: np.ndarray, s: float,
                    X: float, bp: BacksteppingParams) -> np.ndarray:
    """out(x_i) = profile(x_i) - (beta/alpha) int_{x_i}^{s} K(x_i - y) profile(y) dy
    - K(x_i - s) X, trapezoid on the uniform grid."""
    n = profile.shape[0]
    dx = s / (n - 1)
    diff, weights = _grid_cache(n)
    kern = kernel_values_fn(bp, diff * dx)
    integral = (kern * weights) @ profile * dx
    x = np.arange(n, dtype=float) * dx
    edge = kernel_values_fn(bp, x - s)
    return profile - (bp.beta / bp.alpha) * integral - edge * X


def forward_transform(profile: np.ndarray, X: float, bp: BacksteppingParams,
                      s: float) -> np.ndarray:
    """Map the temperature-excess profile h on [0, s] to the target profile w.

    Satisfies w(s) = epsilon * X exactly at the last grid node.
    """
    return _volterra_apply(forward_kernel, np.asarray(profile, dtype=float),
                           s, X, bp)


def inverse_transform(w: np.ndarray, X: float, bp: BacksteppingParams,
                      s: float) -> np.ndarray:
    """Recover the temperature-excess profile from the target profile."""
    return _volterra_apply(inverse_kernel, np.asarray(w, dtype=float),
                           s, X, bp)


def lyapunov_V(w: np.ndarray, X: float, params: PlantParams, epsilon: float,
               s: float) -> float:
    """Quadratic target-system functional: ||w||^2/(2 alpha) + eps X^2/(2 beta)."""
    n = np.asarray(w).shape[0]
    dx = s / (n - 1)
    norm2 = trapezoid_uniform(np.asarray(w, dtype=float) ** 2, dx)
    return norm2 / (2.0 * params.alpha) + epsilon * X * X / (2.0 * params.beta)


@dataclass(frozen=True)
class LyapunovConstants:
    """Composite-functional constants; c in a and b is taken as c1."""

    a: float
    b: float
    q: float
    p: float
    b_bar: float

    @staticmethod
    def from_config(params: PlantParams, sp: Setpoint,
                    gains: "ControllerGains", epsilon: float) -> "LyapunovConstants":
        c = gains.c1
        a = (2.0 * params.beta * epsilon / params.alpha) * max(
            1.0, params.alpha * c * c * sp.s_r
            / (2.0 * params.beta ** 3 * epsilon ** 3))
        b = 0.125 * min(params.alpha / (sp.s_r * sp.s_r), c)
        q = 2.0 * gains.c1 * gains.mu1
        p = 8.0 * sp.s_r / (gains.c2 * params.k * params.k * (1.0 - gains.delta2))
        b_bar = min(b, 2.0 * sp.s_r / (params.k * params.k))
        return LyapunovConstants(a=a, b=b, q=q, p=p, b_bar=b_bar)


def lyapunov_Vh(h1: float, h3: float, consts: LyapunovConstants) -> float:
    """Barrier-pair functional: h3^2/2 + q h1^2/2."""
    return 0.5 * h3 * h3 + 0.5 * consts.q * h1 * h1


def lyapunov_Vbar(V: float, V_h: float, consts: LyapunovConstants) -> float:
    """Composite functional V + p V_h."""
    return V + consts.p * V_h


def norm_Phi(state: StefanState, params: PlantParams, sp: Setpoint) -> float:
    """Squared closed-loop norm: ||T - T_m||^2 + (s - s_r)^2 + q_c^2."""
    n = state.theta.shape[0]
    dx = state.s / (n - 1)
    norm2 = trapezoid_uniform((state.theta - params.T_m) ** 2, dx)
    return norm2 + (state.s - sp.s_r) ** 2 + state.qc ** 2


@dataclass(frozen=True)
class DecayReport:
    """Empirical decay summary of a completed run.

    The per-step differential inequality is report-grade: the proof's
    epsilon threshold is existential, so violations are counted with a
    relative slack instead of asserted.
    """

    rows: int
    phi_ratio: float
    phi_slope: float
    fitted_rate: float
    fitted_margin: float
    envelope_ok: bool
    vbar_checked: int
    vbar_violations: int
    vbar_slack_rel: float

    def __str__(self) -> str:
        return (f"decay: Phi(tf)/Phi(0)={self.phi_ratio:.3e}, "
                f"log-slope={self.phi_slope:.3e}, "
                f"Vbar violations={self.vbar_violations}/{self.vbar_checked}")


def decay_report(trace, consts: LyapunovConstants,
                 vbar_slack_rel: float = 0.05) -> DecayReport:
    """Measure exponential decay on a recorded run.

    Reports (i) how often the discrete derivative of the composite
    functional respects d(Vbar)/dt <= (-b_bar + a*sdot) Vbar within a
    relative slack, (ii) the log-linear slope of Phi, and (iii) a fitted
    envelope Phi(t) <= M Phi(0) exp(-rate * t).

    ``trace`` needs array attributes t, Phi, Vbar and sdot.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.shape[0] == 0:
        raise EmptyTraceError("trace has no records")
    phi = np.asarray(trace.Phi, dtype=float)
    vbar = np.asarray(trace.Vbar, dtype=float)
    sdot = np.asarray(trace.sdot, dtype=float)

    phi0 = phi[0]
    phi_ratio = float(phi[-1] / phi0) if phi0 > 0.0 else 0.0

    pos = phi > 0.0
    if int(pos.sum()) >= 2 and phi0 > 0.0:
        coef = np.polyfit(t[pos], np.log(phi[pos]), 1)
        phi_slope = float(coef[0])
        rate = -phi_slope
        margin = float(np.max(phi * np.exp(rate * t) / phi0)) if rate > 0.0 else math.inf
        envelope_ok = rate > 0.0 and math.isfinite(margin)
    else:
        phi_slope = 0.0
        rate = 0.0
        margin = 1.0 if phi0 == 0.0 else math.inf
        envelope_ok = phi0 == 0.0

    checked = 0
    violations = 0
    if t.shape[0] >= 2:
        dv = np.diff(vbar) / np.diff(t)
        rhs = (-consts.b_bar + consts.a * sdot[:-1]) * vbar[:-1]
        scale = np.maximum(np.abs(dv), np.abs(rhs)) + 1e-300
        checked = int(dv.shape[0])
        violations = int(np.sum(dv > rhs + vbar_slack_rel * scale))

    return DecayReport(rows=int(t.shape[0]), phi_ratio=phi_ratio,
                       phi_slope=phi_slope, fitted_rate=rate,
                       fitted_margin=margin, envelope_ok=envelope_ok,
                       vbar_checked=checked, vbar_violations=violations,
                       vbar_slack_rel=vbar_slack_rel)
