"""Barrier-function evaluation and trace-level safety checks.

Three scalar barriers certify the safe set: h1 (energy deficit), h2
(boundary flux) and the composite h3 = -h2 + c1*h1 that lowers the
relative degree between the flux input and h1. The pointwise barrier
h(x,t) = T - T_m is tracked through its grid minimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import EmptyTraceError
from .model import PlantParams, Setpoint, StefanState, sigma

if TYPE_CHECKING:
    from .controller import ControllerGains


@dataclass(frozen=True)
class CbfSnapshot:
    """All barrier values at one instant."""

    h1: float
    h2: float
    h3: float
    h_min: float
    t: float


def snapshot_from_sigma(sigma_value: float, qc: float, c1: float,
                        h_min: float = np.inf, t: float = 0.0) -> CbfSnapshot:
    """Assemble a snapshot from the energy value and flux directly."""
    return CbfSnapshot(h1=sigma_value, h2=qc,
                       h3=-qc + c1 * sigma_value, h_min=h_min, t=t)


def snapshot(state: StefanState, params: PlantParams, sp: Setpoint,
             gains: "ControllerGains") -> CbfSnapshot:
    """Evaluate every barrier on a plant state."""
    sig = sigma(state, params, sp)
    h_min = float(np.min(state.theta)) - params.T_m
    return snapshot_from_sigma(sig, state.qc, gains.c1, h_min=h_min, t=state.t)


def h1_ode_residual(trace) -> float:
    """Max residual of the h1 evolution law d(h1)/dt = -c1*h1 + h3.

    Central differences on the recorded rows; needs >= 3 records. The
    residual measures sampling error only, since h1 and h3 are logged at
    the same instants.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.shape[0] < 3:
        raise EmptyTraceError("need at least 3 records for a central difference")
    h1 = np.asarray(trace.h1, dtype=float)
    h3 = np.asarray(trace.h3, dtype=float)
    c1 = trace.gains.c1
    dh1 = (h1[2:] - h1[:-2]) / (t[2:] - t[:-2])
    rhs = -c1 * h1[1:-1] + h3[1:-1]
    return float(np.max(np.abs(dh1 - rhs)))


@dataclass(frozen=True)
class SafeSetReport:
    """Outcome of the trace-wide safe-set check."""

    passed: bool
    first_violation: str | None
    min_h1: float
    min_h2: float
    min_h3: float
    min_h: float
    max_s: float
    min_s: float

    def __str__(self) -> str:
        if self.passed:
            return ("safe set: pass "
                    f"(min h1={self.min_h1:.3e}, h2={self.min_h2:.3e}, "
                    f"h3={self.min_h3:.3e}, h={self.min_h:.3e})")
        return f"safe set: FAIL at {self.first_violation}"


def default_tolerances(sigma0: float, c1: float, temp_scale: float = 1.0,
                       s_scale: float = 1.0, rel: float = 1e-9) -> dict[str, float]:
    """Per-quantity absolute tolerances; the barriers carry mixed units."""
    sig_scale = max(1.0, abs(sigma0))
    q_scale = max(1.0, abs(c1) * sig_scale)
    return {
        "h1": rel * sig_scale,
        "h2": rel * q_scale,
        "h3": rel * max(sig_scale * abs(c1), q_scale),
        "h": rel * max(1.0, temp_scale),
        "s": rel * max(1.0, s_scale),
    }


def safe_set_check(trace, tol: dict[str, float] | None = None) -> SafeSetReport:
    """Verify barrier nonnegativity and interface bounds over a whole trace.

    Checks h1, h2, h3, the grid temperature minimum, and
    s0 <= s <= s_r + tol at every record. Returns a report naming the
    first violated check rather than raising.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.shape[0] == 0:
        raise EmptyTraceError("trace has no records")
    if tol is None:
        h1_arr = np.asarray(trace.h1, dtype=float)
        tol = default_tolerances(h1_arr[0] if h1_arr.shape[0] else 0.0,
                                 trace.gains.c1,
                                 s_scale=trace.sp.s_r)

    checks = [
        ("h1 >= 0", np.asarray(trace.h1, dtype=float), -tol["h1"], None),
        ("h2 >= 0", np.asarray(trace.h2, dtype=float), -tol["h2"], None),
        ("h3 >= 0", np.asarray(trace.h3, dtype=float), -tol["h3"], None),
        ("T >= T_m", np.asarray(trace.h_min, dtype=float), -tol["h"], None),
        ("s >= s0", np.asarray(trace.s, dtype=float),
         float(trace.s[0]) - tol["s"], None),
        ("s <= s_r", np.asarray(trace.s, dtype=float), None,
         trace.sp.s_r + tol["s"]),
    ]
    first: str | None = None
    for name, arr, lo, hi in checks:
        if lo is not None:
            idx = np.flatnonzero(arr < lo)
            if idx.size and first is None:
                first = f"{name} at t={t[idx[0]]:.9g} (value {arr[idx[0]]:.6e})"
        if hi is not None:
            idx = np.flatnonzero(arr > hi)
            if idx.size and first is None:
                first = f"{name} at t={t[idx[0]]:.9g} (value {arr[idx[0]]:.6e})"

    s_arr = np.asarray(trace.s, dtype=float)
    return SafeSetReport(
        passed=first is None,
        first_violation=first,
        min_h1=float(np.min(trace.h1)),
        min_h2=float(np.min(trace.h2)),
        min_h3=float(np.min(trace.h3)),
        min_h=float(np.min(trace.h_min)),
        max_s=float(np.max(s_arr)),
        min_s=float(np.min(s_arr)),
    )
