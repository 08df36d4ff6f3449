"""Scenario runner: drives the fused closed-loop kernels, logs traces,
writes/reads the CSV artifacts, audits stored runs, and sweeps grids.

A run emits into its output directory:

* trace.csv        one row per recorded step (events always recorded)
* events.csv       one row per trigger event
* diagnostics.csv  Lyapunov/decay columns on the recorded rows
* summary.txt      key = value run summary
* config.resolved.txt  the exact configuration replayed by `audit`
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from . import config as config_mod
from ._accel import active_backend_name, get_lane
from .cbf import default_tolerances, safe_set_check
from .controller import (Event, EventLog, min_dwell_time, zeno_audit)
from .diagnostics import (LyapunovConstants, _grid_cache, decay_report)
from .errors import ConfigError, NonFiniteState, SolverError, StabilityViolation
from .model import energy_balance_defect, initial_state, sigma

TRACE_COLUMNS = ("t", "s", "qc", "U_applied", "U_star", "h1", "h2", "h3",
                 "h_min", "sdot", "V", "Vh", "Vbar", "Phi", "event_flag",
                 "sigma_pde")
EVENT_COLUMNS = ("t_j", "U_held", "side", "gap_to_prev")
DIAG_COLUMNS = ("t", "V", "Vh", "Vbar", "Phi", "sdot", "bound_rhs")

_SIDE_NAMES = {0: "initial", 1: "lower", 2: "upper"}

#: hard cap on the auto horizon, in units of the slower gain time constant
_AUTO_HORIZON_GAIN_MULTIPLES = 50.0
#: relative setpoint tolerance for the auto-horizon early stop
_AUTO_STOP_REL = 0.02


@dataclass
class Trace:
    """Recorded run data plus the metadata the checks need."""

    t: np.ndarray
    s: np.ndarray
    qc: np.ndarray
    U_applied: np.ndarray
    U_star: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    h_min: np.ndarray
    sdot: np.ndarray
    V: np.ndarray
    Vh: np.ndarray
    Vbar: np.ndarray
    Phi: np.ndarray
    event_flag: np.ndarray
    sigma_pde: np.ndarray
    events: EventLog
    gains: object
    sp: object
    params: object
    epsilon: float
    dt: float
    profiles: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.t.shape[0])


@dataclass(frozen=True)
class RunSummary:
    """Scalar outcome of one run."""

    mode: str
    backend: str
    event_count: int
    min_gap: float
    mean_gap: float
    tau: float
    tau1: float
    tau2: float
    final_s: float
    final_s_error: float
    min_h1: float
    min_h2: float
    min_h3: float
    min_h: float
    min_sdot: float
    max_s: float
    sigma0: float
    energy_defect: float
    Phi0: float
    Phi_end: float
    Phi_ratio: float
    t_end: float
    dt: float
    n_steps: int
    n_substeps: int
    n_records: int
    stride: int
    wall_time: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _horizon(cfg: config_mod.ScenarioConfig, dt: float) -> tuple[int, float]:
    """(n_steps, conv_tol): explicit horizon or converge-with-cap."""
    if cfg.t_final is not None:
        n_steps = max(0, int(math.ceil(cfg.t_final / dt - 1e-9)))
        return n_steps, 0.0
    cap = _AUTO_HORIZON_GAIN_MULTIPLES / min(cfg.gains.c1, cfg.gains.c2)
    conv_tol = _AUTO_STOP_REL * (cfg.sp.s_r - cfg.ic.s0)
    return max(1, int(math.ceil(cap / dt))), conv_tol


def simulate(cfg: config_mod.ScenarioConfig, mode: str = "etc",
             record_target: int = 15000,
             backend: str | None = None) -> tuple[Trace, RunSummary]:
    """Run one scenario and return the in-memory trace and summary.

    mode "etc" uses the event-triggered hold; mode "baseline" recomputes
    the nominal input every base step.
    """
    if mode not in ("etc", "baseline"):
        raise ValueError(f"mode must be etc or baseline, got {mode!r}")
    lane = get_lane(backend)
    started = time.perf_counter()

    params, ic, sp, gains = cfg.params, cfg.ic, cfg.sp, cfg.gains
    n = cfg.settings.N
    dt = cfg.resolved_dt()
    n_steps, conv_tol = _horizon(cfg, dt)
    stride = max(1, -(-n_steps // record_target))

    state0 = initial_state(ic, n)
    sigma0 = sigma(state0, params, sp)

    tau, tau1, tau2 = min_dwell_time(gains)
    horizon = n_steps * dt
    ev_cap = int(min(n_steps + 1,
                     4.0 * horizon / max(tau, dt) + 64.0))
    n_rec_max = n_steps // stride + ev_cap + 4

    rec = {name: np.empty(n_rec_max) for name in
           ("t", "s", "qc", "u", "ustar", "h1", "h2", "h3", "hmin", "sdot",
            "sigma_pde")}
    rec_event = np.zeros(n_rec_max, dtype=np.int64)
    rec_theta = np.empty((n_rec_max, n))
    ev_t = np.empty(ev_cap)
    ev_u = np.empty(ev_cap)
    ev_side = np.zeros(ev_cap, dtype=np.int64)
    ev_h2 = np.empty(ev_cap)
    ev_h3 = np.empty(ev_cap)
    theta = state0.theta.copy()
    scratch = np.empty_like(theta)
    iy = np.arange(n, dtype=float)

    (n_rec, n_ev, status, steps_done, substeps_total,
     min_h1, min_h2, min_h3, min_hmin, min_sdot, max_s, t_end) = lane.closed_loop(
        theta, state0.s, state0.qc, sigma0,
        params.alpha, params.beta, params.k, params.T_m, sp.s_r,
        gains.c1, gains.c2, gains.mu1, gains.delta2 * gains.c2,
        dt, n_steps, stride, cfg.settings.cfl_safety,
        cfg.settings.flux_stencil_order, 1e-6 * params.L,
        0 if mode == "etc" else 1, conv_tol,
        rec["t"], rec["s"], rec["qc"], rec["u"], rec["ustar"], rec["h1"],
        rec["h2"], rec["h3"], rec["hmin"], rec["sdot"], rec_event,
        rec["sigma_pde"], rec_theta,
        ev_t, ev_u, ev_side, ev_h2, ev_h3,
        scratch, iy)

    if status == 1:
        raise StabilityViolation(
            f"interface fell below the floor 1e-6*L={1e-6 * params.L:.3e} m",
            t=t_end)
    if status == 2:
        raise NonFiniteState("state became non-finite", t=t_end)
    if status == 3:
        raise SolverError("event log capacity exceeded; triggering is not "
                          "respecting the dwell-time bound", t=t_end)

    if n_rec > 0:
        min_hmin = min(min_hmin, float(rec["hmin"][0]))

    events = EventLog()
    for i in range(n_ev):
        events.append(Event(t_j=float(ev_t[i]), U_held=float(ev_u[i]),
                            side=_SIDE_NAMES[int(ev_side[i])],
                            h2_at=float(ev_h2[i]), h3_at=float(ev_h3[i])))

    profiles = rec_theta[:n_rec]
    V, Vh, Vbar, Phi = _lyapunov_columns(cfg, rec, profiles, n_rec)

    trace = Trace(
        t=rec["t"][:n_rec].copy(), s=rec["s"][:n_rec].copy(),
        qc=rec["qc"][:n_rec].copy(), U_applied=rec["u"][:n_rec].copy(),
        U_star=rec["ustar"][:n_rec].copy(), h1=rec["h1"][:n_rec].copy(),
        h2=rec["h2"][:n_rec].copy(), h3=rec["h3"][:n_rec].copy(),
        h_min=rec["hmin"][:n_rec].copy(), sdot=rec["sdot"][:n_rec].copy(),
        V=V, Vh=Vh, Vbar=Vbar, Phi=Phi,
        event_flag=rec_event[:n_rec].copy(),
        sigma_pde=rec["sigma_pde"][:n_rec].copy(),
        events=events, gains=gains, sp=sp, params=params,
        epsilon=cfg.epsilon, dt=dt, profiles=profiles.copy())

    gaps = events.gaps
    phi0 = float(Phi[0]) if n_rec else 0.0
    phi_end = float(Phi[-1]) if n_rec else 0.0
    summary = RunSummary(
        mode=mode,
        backend=lane.LANE_NAME,
        event_count=steps_done if mode == "baseline" else n_ev,
        min_gap=float(np.min(gaps)) if gaps.size else math.inf,
        mean_gap=float(np.mean(gaps)) if gaps.size else math.inf,
        tau=tau, tau1=tau1, tau2=tau2,
        final_s=float(trace.s[-1]),
        final_s_error=abs(float(trace.s[-1]) - sp.s_r),
        min_h1=min_h1, min_h2=min_h2, min_h3=min_h3, min_h=min_hmin,
        min_sdot=min_sdot, max_s=max_s,
        sigma0=sigma0,
        energy_defect=energy_balance_defect(trace),
        Phi0=phi0, Phi_end=phi_end,
        Phi_ratio=(phi_end / phi0) if phi0 > 0.0 else 0.0,
        t_end=t_end, dt=dt, n_steps=steps_done, n_substeps=substeps_total,
        n_records=n_rec, stride=stride,
        wall_time=time.perf_counter() - started)
    return trace, summary


def _lyapunov_columns(cfg, rec, profiles, n_rec):
    """Batched target-profile transform and quadratic functionals.

    Exploits the affine forward kernel: with D the index-difference matrix
    and W the upper-triangular trapezoid weights, the row-wise Volterra
    integral is c1/beta*dx^2*(h @ (D*W).T) - eps*dx*(h @ W.T).
    """
    params, sp, gains = cfg.params, cfg.sp, cfg.gains
    eps = cfg.epsilon
    if n_rec == 0:
        z = np.empty(0)
        return z, z.copy(), z.copy(), z.copy()
    n = profiles.shape[1]
    d_idx, weights = _grid_cache(n)
    s_rows = rec["s"][:n_rec]
    dx = s_rows / (n - 1)
    h_rows = profiles - params.T_m
    x_over_dx = np.arange(n, dtype=float)

    p_part = h_rows @ (d_idx * weights).T
    q_part = h_rows @ weights.T
    integral = (gains.c1 / params.beta) * (dx ** 2)[:, None] * p_part \
        - eps * dx[:, None] * q_part
    edge_arg = dx[:, None] * (x_over_dx[None, :] - (n - 1))
    edge = (gains.c1 / params.beta) * edge_arg - eps
    X = s_rows - sp.s_r
    w_rows = h_rows - (params.beta / params.alpha) * integral - edge * X[:, None]

    tw = np.ones(n)
    tw[0] = 0.5
    tw[-1] = 0.5
    V = dx * ((w_rows ** 2) @ tw) / (2.0 * params.alpha) \
        + eps * X ** 2 / (2.0 * params.beta)
    consts = LyapunovConstants.from_config(params, sp, gains, eps)
    h1 = rec["h1"][:n_rec]
    h3 = rec["h3"][:n_rec]
    Vh = 0.5 * h3 ** 2 + 0.5 * consts.q * h1 ** 2
    Vbar = V + consts.p * Vh
    Phi = dx * ((h_rows ** 2) @ tw) + X ** 2 + rec["qc"][:n_rec] ** 2
    return V, Vh, Vbar, Phi


# ---------------------------------------------------------------------------
# output writing


def _fmt(value: float) -> str:
    return repr(float(value))


def write_outputs(cfg: config_mod.ScenarioConfig, trace: Trace,
                  summary: RunSummary, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "trace.csv", "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        cols = (trace.t, trace.s, trace.qc, trace.U_applied, trace.U_star,
                trace.h1, trace.h2, trace.h3, trace.h_min, trace.sdot,
                trace.V, trace.Vh, trace.Vbar, trace.Phi, trace.event_flag,
                trace.sigma_pde)
        for i in range(len(trace)):
            parts = [_fmt(col[i]) if name != "event_flag" else str(int(col[i]))
                     for name, col in zip(TRACE_COLUMNS, cols)]
            fh.write(",".join(parts) + "\n")

    with open(out / "events.csv", "w") as fh:
        fh.write(",".join(EVENT_COLUMNS) + "\n")
        prev = None
        for ev in trace.events.events:
            gap = "" if prev is None else _fmt(ev.t_j - prev)
            fh.write(f"{_fmt(ev.t_j)},{_fmt(ev.U_held)},{ev.side},{gap}\n")
            prev = ev.t_j

    consts = LyapunovConstants.from_config(cfg.params, cfg.sp, cfg.gains,
                                           cfg.epsilon)
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write(",".join(DIAG_COLUMNS) + "\n")
        bound_rhs = (-consts.b_bar + consts.a * trace.sdot) * trace.Vbar
        for i in range(len(trace)):
            fh.write(",".join(_fmt(v) for v in (
                trace.t[i], trace.V[i], trace.Vh[i], trace.Vbar[i],
                trace.Phi[i], trace.sdot[i], bound_rhs[i])) + "\n")

    with open(out / "summary.txt", "w") as fh:
        for key, value in summary.as_dict().items():
            fh.write(f"{key} = {value}\n")

    (out / "config.resolved.txt").write_text(
        config_mod.to_text(cfg, resolved_dt=trace.dt,
                           resolved_t_final=summary.t_end))
    return out


def run_scenario(cfg_or_path, out_dir: str | Path | None = None,
                 record_target: int = 15000,
                 backend: str | None = None) -> RunSummary:
    """Run the event-triggered scenario end to end, writing artifacts."""
    cfg = _as_config(cfg_or_path)
    trace, summary = simulate(cfg, mode="etc", record_target=record_target,
                              backend=backend)
    if out_dir is not None:
        write_outputs(cfg, trace, summary, out_dir)
    return summary


def run_baseline_continuous(cfg_or_path, out_dir: str | Path | None = None,
                            record_target: int = 15000,
                            backend: str | None = None) -> RunSummary:
    """Run the every-step nominal-feedback comparator."""
    cfg = _as_config(cfg_or_path)
    trace, summary = simulate(cfg, mode="baseline",
                              record_target=record_target, backend=backend)
    if out_dir is not None:
        write_outputs(cfg, trace, summary, out_dir)
    return summary


def _as_config(cfg_or_path) -> config_mod.ScenarioConfig:
    if isinstance(cfg_or_path, config_mod.ScenarioConfig):
        return cfg_or_path
    return config_mod.load(cfg_or_path)


# ---------------------------------------------------------------------------
# reading stored runs


def read_summary(run_dir: str | Path) -> dict:
    out = {}
    for line in Path(run_dir, "summary.txt").read_text().splitlines():
        if not line.strip():
            continue
        key, value = (p.strip() for p in line.split("=", 1))
        out[key] = value
    return out


def load_run(run_dir: str | Path) -> tuple[config_mod.ScenarioConfig, Trace]:
    """Rebuild a Trace (without profiles) from a run's CSV artifacts."""
    run_dir = Path(run_dir)
    cfg = config_mod.load(run_dir / "config.resolved.txt")

    with open(run_dir / "trace.csv") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ConfigError(f"unexpected trace.csv columns: {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.empty((0, len(TRACE_COLUMNS)))
    cols = {name: data[:, i] for i, name in enumerate(TRACE_COLUMNS)}

    events = EventLog()
    with open(run_dir / "events.csv") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != EVENT_COLUMNS:
            raise ConfigError(f"unexpected events.csv columns: {header}")
        t_arr = cols["t"]
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t_j_s, u_s, side, _gap = line.split(",")
            t_j = float(t_j_s)
            row = np.flatnonzero(t_arr == t_j)
            h2_at = float(cols["h2"][row[0]]) if row.size else math.nan
            h3_at = float(cols["h3"][row[0]]) if row.size else math.nan
            events.append(Event(t_j=t_j, U_held=float(u_s), side=side,
                                h2_at=h2_at, h3_at=h3_at))

    trace = Trace(
        t=cols["t"], s=cols["s"], qc=cols["qc"],
        U_applied=cols["U_applied"], U_star=cols["U_star"],
        h1=cols["h1"], h2=cols["h2"], h3=cols["h3"], h_min=cols["h_min"],
        sdot=cols["sdot"], V=cols["V"], Vh=cols["Vh"], Vbar=cols["Vbar"],
        Phi=cols["Phi"], event_flag=cols["event_flag"].astype(np.int64),
        sigma_pde=cols["sigma_pde"], events=events,
        gains=cfg.gains, sp=cfg.sp, params=cfg.params,
        epsilon=cfg.epsilon, dt=cfg.resolved_dt(), profiles=None)
    return cfg, trace


# ---------------------------------------------------------------------------
# audits


@dataclass(frozen=True)
class AuditCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class AuditResult:
    checks: list[AuditCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self) -> str:
        lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}"
                 for c in self.checks]
        return "\n".join(lines)


def audit_run(run_dir: str | Path, energy_tol_rel: float = 1e-3,
              enabled: tuple[str, ...] = ("safe", "dwell", "energy", "decay"),
              ) -> AuditResult:
    """Re-run the stored-trace checks; exit-code material for the CLI."""
    cfg, trace = load_run(run_dir)
    checks: list[AuditCheck] = []

    if "safe" in enabled:
        report = safe_set_check(trace)
        checks.append(AuditCheck("safe-set", report.passed, str(report)))

    if "dwell" in enabled:
        zr = zeno_audit(trace.events, cfg.gains, trace.dt)
        checks.append(AuditCheck("dwell-time", zr.passed, str(zr)))

    if "energy" in enabled:
        defect = energy_balance_defect(trace)
        sigma0 = abs(float(trace.sigma_pde[0])) if len(trace) else 0.0
        bound = energy_tol_rel * max(sigma0, 1e-30)
        ok = defect <= bound
        checks.append(AuditCheck(
            "energy-balance", ok,
            f"max defect {defect:.6e} vs bound {bound:.6e}"))

    if "decay" in enabled:
        consts = LyapunovConstants.from_config(cfg.params, cfg.sp, cfg.gains,
                                               cfg.epsilon)
        rep = decay_report(trace, consts)
        vacuous = rep.rows < 3 or float(trace.Phi[0]) == 0.0
        ok = vacuous or (rep.phi_slope < 0.0 and rep.phi_ratio < 1.0)
        checks.append(AuditCheck("decay", ok, str(rep)))

    return AuditResult(checks)


# ---------------------------------------------------------------------------
# parameter sweeps

SWEEP_KEYS = ("c1", "c2", "delta1", "delta2", "epsilon", "N", "dt")


def _cell_name(overrides: dict) -> str:
    return "_".join(f"{k}={overrides[k]:g}" if isinstance(overrides[k], float)
                    else f"{k}={overrides[k]}" for k in sorted(overrides))


def _sweep_worker(args) -> dict:
    base, overrides, out_dir, record_target = args
    row = dict(overrides)
    try:
        cfg = config_mod.from_mapping({**base, **overrides})
        summary = run_scenario(cfg, out_dir, record_target=record_target)
        row.update(summary.as_dict())
        row["error"] = ""
    except (ConfigError, SolverError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(cfg_or_path, grid: dict[str, list], out_dir: str | Path,
          jobs: int = 1, record_target: int = 15000) -> list[dict]:
    """Cross-product runs over gain/numerics values; failures are non-fatal.

    Each grid point runs in its own subdirectory; an aggregate
    summaries.csv is written at the top level. An empty grid runs the base
    configuration once.
    """
    cfg = _as_config(cfg_or_path)
    bad = set(grid) - set(SWEEP_KEYS)
    if bad:
        raise ConfigError(f"sweep keys must be among {SWEEP_KEYS}, got {sorted(bad)}")
    base = config_mod.as_mapping(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    keys = sorted(grid)
    combos = [dict(zip(keys, values))
              for values in product(*(grid[k] for k in keys))] or [{}]
    tasks = [(base, combo, str(out / (_cell_name(combo) or "base")),
              record_target) for combo in combos]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(task) for task in tasks]

    fields = keys + [f for f in RunSummary.__dataclass_fields__] + ["error"]
    with open(out / "summaries.csv", "w") as fh:
        fh.write(",".join(fields) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(f, "")) for f in fields) + "\n")
    return rows
