"""Event-triggered boundary controller and its dwell-time analysis.

The nominal nonovershooting law U* = -c1*h2 + c2*h3 is applied through a
zero-order hold; the hold is refreshed whenever the input error
Utilde = U*(t) - U*(t_j) leaves the band
[-delta2*c2*h3, mu1*h2 + delta2*c2*h3]. Between refreshes the (h2, h3)
pair obeys an exactly solvable linear system, which yields closed forms
for the trigger margins m1, m2 and a strictly positive minimum dwell
time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cbf import CbfSnapshot
from .errors import EmptyTraceError, NonMonotoneTime


@dataclass(frozen=True)
class ControllerGains:
    """Feedback gains c1, c2 and trigger-slack parameters delta1, delta2."""

    c1: float
    c2: float
    delta1: float
    delta2: float

    @property
    def mu1(self) -> float:
        """Upper trigger-band slope: min{delta1*c1, (1-delta2)*c2}."""
        return min(self.delta1 * self.c1, (1.0 - self.delta2) * self.c2)

    @property
    def cbar1(self) -> float:
        return (1.0 + self.delta1) * self.c1

    @property
    def cbar2(self) -> float:
        return (1.0 + self.delta2) * self.c2


@dataclass(frozen=True)
class EtcState:
    """Hold state between events: anchor time, held input, anchor CBFs."""

    t_j: float
    U_held: float
    h2_at_event: float
    h3_at_event: float
    event_count: int = 1


@dataclass(frozen=True)
class Event:
    t_j: float
    U_held: float
    side: str  # "initial" | "lower" | "upper"
    h2_at: float = math.nan
    h3_at: float = math.nan

    def as_etc_state(self, count: int = 1) -> "EtcState":
        return EtcState(t_j=self.t_j, U_held=self.U_held,
                        h2_at_event=self.h2_at, h3_at_event=self.h3_at,
                        event_count=count)


@dataclass
class EventLog:
    events: list[Event] = field(default_factory=list)

    def append(self, event: Event) -> None:
        if self.events and event.t_j <= self.events[-1].t_j:
            raise NonMonotoneTime(
                f"event at t={event.t_j} not after t={self.events[-1].t_j}")
        self.events.append(event)

    @property
    def times(self) -> np.ndarray:
        return np.array([e.t_j for e in self.events], dtype=float)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)

    def __len__(self) -> int:
        return len(self.events)


def nominal_control(snapshot: CbfSnapshot, gains: ControllerGains) -> float:
    """Nonovershooting feedback U* = -c1*h2 + c2*h3."""
    return -gains.c1 * snapshot.h2 + gains.c2 * snapshot.h3


def trigger_fired(snapshot: CbfSnapshot, etc: EtcState,
                  gains: ControllerGains) -> str | None:
    """Which trigger bound the input error has crossed, if any.

    Both inequalities are strict; on a simultaneous crossing the lower
    bound wins (it protects h3, the safety-critical direction).
    """
    u_tilde = nominal_control(snapshot, gains) - etc.U_held
    if -gains.delta2 * gains.c2 * snapshot.h3 > u_tilde:
        return "lower"
    if u_tilde > gains.mu1 * snapshot.h2 + gains.delta2 * gains.c2 * snapshot.h3:
        return "upper"
    return None


def etc_update(snapshot: CbfSnapshot, etc: EtcState | None,
               gains: ControllerGains) -> tuple[float, EtcState, str | None]:
    """One controller consultation: returns (input to apply, state, fired side).

    The first call (etc is None) always fires with side "initial",
    anchoring the hold at the current instant; afterwards the hold is
    refreshed only on a trigger crossing ("lower" or "upper"), which
    resets the input error to zero. Returns side None when the hold is
    kept.
    """
    if etc is not None and snapshot.t < etc.t_j:
        raise NonMonotoneTime(
            f"snapshot at t={snapshot.t} precedes event at t={etc.t_j}")
    side: str | None
    if etc is None:
        side = "initial"
    elif snapshot.t > etc.t_j:
        side = trigger_fired(snapshot, etc, gains)
    else:
        side = None
    if side is not None:
        u_star = nominal_control(snapshot, gains)
        new = EtcState(t_j=snapshot.t, U_held=u_star,
                       h2_at_event=snapshot.h2, h3_at_event=snapshot.h3,
                       event_count=1 if etc is None else etc.event_count + 1)
        return u_star, new, side
    return etc.U_held, etc, None


def h23_closed_form(etc: EtcState, gains: ControllerGains,
                    t: float) -> tuple[float, float]:
    """Exact (h2, h3) under the hold, for t >= the anchor time.

    With the input frozen at U_held, dh2/dt = U_held and
    dh3/dt = -U_held - c1*h2, a linear system with constant input.
    """
    dt = t - etc.t_j
    u = etc.U_held
    h2 = etc.h2_at_event + u * dt
    h3 = (etc.h3_at_event - u * dt
          - gains.c1 * (etc.h2_at_event * dt + 0.5 * u * dt * dt))
    return h2, h3


def _m_taylor_coefficients(etc: EtcState, gains: ControllerGains):
    """Taylor coefficients at the anchor of the two margin quadratics."""
    c1, c2 = gains.c1, gains.c2
    mu1 = gains.mu1
    d2c2 = gains.delta2 * c2
    cbar2 = gains.cbar2
    h2j, h3j, u = etc.h2_at_event, etc.h3_at_event, etc.U_held

    m1_0 = mu1 * h2j + d2c2 * h3j
    m1_dot = ((mu1 + c1 + (1.0 - gains.delta2) * c2) * u
              + (1.0 - gains.delta2) * c1 * c2 * h2j)
    m1_ddot = (1.0 - gains.delta2) * c1 * c2 * u

    m2_0 = d2c2 * h3j
    m2_dot = -(c1 + cbar2) * u - cbar2 * c1 * h2j
    m2_ddot = -c1 * cbar2 * u
    return (m1_0, m1_dot, m1_ddot), (m2_0, m2_dot, m2_ddot)


def m_functions(etc: EtcState, gains: ControllerGains,
                t: float) -> tuple[float, float]:
    """Trigger margins m1, m2 at time t >= the anchor.

    m1 = mu1*h2 + delta2*c2*h3 - Utilde (distance to the upper bound) and
    m2 = Utilde + delta2*c2*h3 (distance to the lower bound). Both are
    quadratic in t - t_j; evaluated from their Taylor coefficients at the
    anchor, which follow from the exact (h2, h3) hold dynamics.
    """
    (a0, a1, a2), (b0, b1, b2) = _m_taylor_coefficients(etc, gains)
    dt = t - etc.t_j
    m1 = a0 + a1 * dt + 0.5 * a2 * dt * dt
    m2 = b0 + b1 * dt + 0.5 * b2 * dt * dt
    return m1, m2


def m_lower_bound_polys(gains: ControllerGains,
                        dt: float) -> tuple[float, float]:
    """The gain-only quadratics P1, P2 that bound m1/h2(t_j) and m2/(c2*h3(t_j)).

    P1(d) = -(1-delta2)*c1^2*c2/2 * d^2 - c1*(mu1+c1)*d + mu1 and
    P2(d) = -c1*cbar2/2 * d^2 - (c1+cbar2)*d + delta2. Their first positive
    roots are the two dwell-time candidates.
    """
    c1, c2 = gains.c1, gains.c2
    p1 = (-(1.0 - gains.delta2) * c1 * c1 * c2 * 0.5 * dt * dt
          - c1 * (gains.mu1 + c1) * dt + gains.mu1)
    p2 = (-c1 * gains.cbar2 * 0.5 * dt * dt
          - (c1 + gains.cbar2) * dt + gains.delta2)
    return p1, p2


def _positive_root(a: float, b: float, c: float) -> float:
    # positive root of -(a/2)*d^2 - b*d + c = 0 with a, b, c > 0,
    # i.e. (-b + sqrt(b^2 + 2ac))/a, rationalized so small c does not cancel
    return 2.0 * c / (b + math.sqrt(b * b + 2.0 * a * c))


def min_dwell_time(gains: ControllerGains) -> tuple[float, float, float]:
    """Guaranteed minimum time between trigger events.

    Returns (tau, tau1, tau2): tau1 and tau2 are the first positive roots
    of the upper- and lower-bound margin quadratics; tau is their minimum
    and is strictly positive for admissible gains, which rules out an
    accumulation of events.
    """
    c1 = gains.c1
    a1 = (1.0 - gains.delta2) * c1 * c1 * gains.c2
    b1 = c1 * (gains.mu1 + c1)
    tau1 = _positive_root(a1, b1, gains.mu1)

    a2 = c1 * gains.cbar2
    b2 = c1 + gains.cbar2
    tau2 = _positive_root(a2, b2, gains.delta2)
    return min(tau1, tau2), tau1, tau2


@dataclass(frozen=True)
class ZenoReport:
    """Inter-event statistics against the guaranteed dwell time."""

    passed: bool
    event_count: int
    min_gap: float
    mean_gap: float
    tau: float
    slack: float
    offending_pair: tuple[float, float] | None

    def __str__(self) -> str:
        head = "dwell audit: pass" if self.passed else "dwell audit: FAIL"
        return (f"{head} (events={self.event_count}, min gap={self.min_gap:.6g}, "
                f"tau={self.tau:.6g}, slack={self.slack:.3g})")


def zeno_audit(log: EventLog, gains: ControllerGains, dt: float) -> ZenoReport:
    """Check that every inter-event gap respects tau minus one-step slack.

    Triggers are detected on the base-step grid, so a gap may undershoot
    the continuous-time bound by at most dt.
    """
    tau, _, _ = min_dwell_time(gains)
    gaps = log.gaps
    if gaps.size == 0:
        return ZenoReport(True, len(log), math.inf, math.inf, tau, dt, None)
    bound = tau - dt * (1.0 + 1e-12)
    bad = np.flatnonzero(gaps < bound)
    offending = None
    if bad.size:
        i = int(bad[0])
        offending = (float(log.times[i]), float(log.times[i + 1]))
    return ZenoReport(
        passed=bad.size == 0,
        event_count=len(log),
        min_gap=float(np.min(gaps)),
        mean_gap=float(np.mean(gaps)),
        tau=tau,
        slack=dt,
        offending_pair=offending,
    )


class EtcController:
    """Stateful event-triggered controller for the generic simulation loop.

    Must be consulted once per base step. Tracks the energy CBF by exact
    integration of d(sigma)/dt = -q_c (trapezoid in time, exact because
    q_c is piecewise linear under the hold), so its barrier values evolve
    precisely on the closed forms the dwell-time analysis assumes.
    """

    def __init__(self, gains: ControllerGains, sigma0: float):
        self.gains = gains
        self.sigma_ode = float(sigma0)
        self.etc: EtcState | None = None
        self.log = EventLog()
        self._last_t: float | None = None
        self._last_qc: float | None = None

    def barrier_snapshot(self, state) -> CbfSnapshot:
        from .cbf import snapshot_from_sigma

        return snapshot_from_sigma(self.sigma_ode, state.qc, self.gains.c1,
                                   t=state.t)

    def update(self, state) -> float:
        """Advance the energy integral, run the trigger, return the input."""
        if self._last_t is not None:
            if state.t < self._last_t:
                raise NonMonotoneTime(
                    f"state at t={state.t} precedes last call t={self._last_t}")
            self.sigma_ode -= 0.5 * (self._last_qc + state.qc) * (state.t - self._last_t)
        self._last_t = state.t
        self._last_qc = state.qc

        snap = self.barrier_snapshot(state)
        u, self.etc, side = etc_update(snap, self.etc, self.gains)
        if side is not None:
            self.log.append(Event(t_j=state.t, U_held=u, side=side,
                                  h2_at=snap.h2, h3_at=snap.h3))
        return u


@dataclass(frozen=True)
class ClosedFormReport:
    """Deviation of recorded (h2, h3) from the exact hold dynamics."""

    max_rel_h2: float
    max_rel_h3: float
    samples: int


def closed_form_check(trace) -> ClosedFormReport:
    """Compare recorded h2/h3 against the per-interval closed forms.

    Each record row is matched to its governing event anchor; deviations
    are normalized by the trace-wide signal scales. Under the hold the
    subsystem is exactly linear, so only roundoff should remain.

    ``trace`` needs t/h2/h3 arrays, an ``events`` log with anchors, and
    ``gains``.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.shape[0] == 0 or len(trace.events) == 0:
        raise EmptyTraceError("need records and at least the initial event")
    gains = trace.gains
    ev_t = trace.events.times
    h2 = np.asarray(trace.h2, dtype=float)
    h3 = np.asarray(trace.h3, dtype=float)
    h2_scale = max(float(np.max(np.abs(h2))), 1e-30)
    h3_scale = max(float(np.max(np.abs(h3))), 1e-30)

    # rows between events j and j+1 are governed by anchor j
    anchor_idx = np.searchsorted(ev_t, t, side="right") - 1
    anchor_idx = np.clip(anchor_idx, 0, len(trace.events) - 1)
    worst2 = 0.0
    worst3 = 0.0
    for j, event in enumerate(trace.events.events):
        rows = np.flatnonzero(anchor_idx == j)
        if rows.size == 0:
            continue
        dt_rows = t[rows] - event.t_j
        u = event.U_held
        cf_h2 = event.h2_at + u * dt_rows
        cf_h3 = (event.h3_at - u * dt_rows
                 - gains.c1 * (event.h2_at * dt_rows + 0.5 * u * dt_rows ** 2))
        worst2 = max(worst2, float(np.max(np.abs(h2[rows] - cf_h2))) / h2_scale)
        worst3 = max(worst3, float(np.max(np.abs(h3[rows] - cf_h3))) / h3_scale)
    return ClosedFormReport(max_rel_h2=worst2, max_rel_h3=worst3,
                            samples=int(t.shape[0]))


@dataclass(frozen=True)
class MarginReport:
    """Positivity of the trigger margins inside every inter-event interval."""

    passed: bool
    intervals: int
    min_interior_m1: float
    min_interior_m2: float
    worst_bracket: float
    detail: str = ""


def interval_margin_check(log: EventLog, gains: ControllerGains, dt: float,
                          t_end: float, rel_tol: float = 1e-9) -> MarginReport:
    """Check m1, m2 > 0 on the detection grid strictly inside each interval.

    At each event the firing side must bracket zero across the final
    detection step: m >= -tol one step before the event and m <= +tol at
    it. Intervals with an identically zero anchor (equilibrium) pass
    vacuously.
    """
    events = log.events
    if not events:
        raise EmptyTraceError("no events")
    min_m1 = math.inf
    min_m2 = math.inf
    worst_bracket = 0.0
    passed = True
    detail = ""
    for j, event in enumerate(events):
        etc = event.as_etc_state()
        t_next = events[j + 1].t_j if j + 1 < len(events) else t_end
        gap = t_next - event.t_j
        n_interior = int(round(gap / dt)) - 1
        scale = max(abs(gains.mu1 * event.h2_at
                        + gains.delta2 * gains.c2 * event.h3_at),
                    abs(gains.delta2 * gains.c2 * event.h3_at))
        if scale == 0.0:
            continue
        tol = rel_tol * scale
        if n_interior >= 1:
            d = np.arange(1, n_interior + 1, dtype=float) * dt
            (a0, a1, a2), (b0, b1, b2) = _m_taylor_coefficients(etc, gains)
            m1s = a0 + a1 * d + 0.5 * a2 * d * d
            m2s = b0 + b1 * d + 0.5 * b2 * d * d
            min_m1 = min(min_m1, float(np.min(m1s)))
            min_m2 = min(min_m2, float(np.min(m2s)))
            if float(np.min(m1s)) < -tol or float(np.min(m2s)) < -tol:
                passed = False
                detail = f"interior margin negative after event at t={event.t_j:.9g}"
        if j + 1 < len(events) and events[j + 1].side in ("lower", "upper"):
            m1_at, m2_at = m_functions(etc, gains, t_next)
            m_fire = m2_at if events[j + 1].side == "lower" else m1_at
            m1_pre, m2_pre = m_functions(etc, gains, t_next - dt)
            m_pre = m2_pre if events[j + 1].side == "lower" else m1_pre
            worst_bracket = max(worst_bracket, m_fire / scale, -m_pre / scale)
            if m_fire > tol or m_pre < -tol:
                passed = False
                detail = (f"firing margin not bracketed at t={t_next:.9g} "
                          f"(m_fire={m_fire:.3e}, m_pre={m_pre:.3e})")
    return MarginReport(passed=passed, intervals=len(events),
                        min_interior_m1=min_m1, min_interior_m2=min_m2,
                        worst_bracket=worst_bracket, detail=detail)


class ContinuousController:
    """Per-step nominal feedback, the comparator for event efficiency."""

    def __init__(self, gains: ControllerGains, sigma0: float):
        self.gains = gains
        self.sigma_ode = float(sigma0)
        self._last_t: float | None = None
        self._last_qc: float | None = None
        self.update_count = 0

    def update(self, state) -> float:
        if self._last_t is not None:
            self.sigma_ode -= 0.5 * (self._last_qc + state.qc) * (state.t - self._last_t)
        self._last_t = state.t
        self._last_qc = state.qc
        self.update_count += 1
        h2 = state.qc
        h3 = -state.qc + self.gains.c1 * self.sigma_ode
        return -self.gains.c1 * h2 + self.gains.c2 * h3
