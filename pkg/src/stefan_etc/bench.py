"""Backend benchmark: numba kernels versus the pure-numpy fallback.

Runs the same scenario through both lanes, reports wall time, step
throughput and the largest trajectory deviation between them. The numba
lane is run once untimed first so JIT compilation is not billed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import config as config_mod
from ._accel import numba_available
from .harness import simulate


@dataclass(frozen=True)
class LaneResult:
    lane: str
    wall_time: float
    n_steps: int
    steps_per_s: float


@dataclass(frozen=True)
class BenchResult:
    results: list[LaneResult]
    max_ds: float
    max_dqc: float
    speedup: float | None

    def table(self) -> str:
        lines = [f"{'lane':<8}{'wall [s]':>12}{'steps':>12}{'steps/s':>14}"]
        for r in self.results:
            lines.append(f"{r.lane:<8}{r.wall_time:>12.3f}{r.n_steps:>12d}"
                         f"{r.steps_per_s:>14.0f}")
        if self.speedup is not None:
            lines.append(f"numba speedup: {self.speedup:.1f}x")
        lines.append(f"max |delta s| between lanes:  {self.max_ds:.3e}")
        lines.append(f"max |delta qc| between lanes: {self.max_dqc:.3e}")
        return "\n".join(lines)


def compare_backends(cfg: config_mod.ScenarioConfig,
                     t_final: float | None = None,
                     record_target: int = 2000) -> BenchResult:
    if t_final is not None:
        cfg = config_mod.with_overrides(cfg, t_final=t_final)

    lanes = ["numpy"]
    if numba_available():
        # warm the JIT cache before timing
        warm = config_mod.with_overrides(cfg, t_final=cfg.resolved_dt() * 8)
        simulate(warm, backend="numba", record_target=64)
        lanes.append("numba")

    traces = {}
    results = []
    for lane in lanes:
        started = time.perf_counter()
        trace, summary = simulate(cfg, backend=lane,
                                  record_target=record_target)
        wall = time.perf_counter() - started
        traces[lane] = trace
        results.append(LaneResult(lane=lane, wall_time=wall,
                                  n_steps=summary.n_steps,
                                  steps_per_s=summary.n_steps / max(wall, 1e-9)))

    if len(lanes) == 2:
        a, b = traces["numpy"], traces["numba"]
        rows = min(len(a), len(b))
        max_ds = float(np.max(np.abs(a.s[:rows] - b.s[:rows])))
        max_dqc = float(np.max(np.abs(a.qc[:rows] - b.qc[:rows])))
        speedup = results[0].wall_time / max(results[1].wall_time, 1e-9)
    else:
        max_ds = 0.0
        max_dqc = 0.0
        speedup = None
    return BenchResult(results=results, max_ds=max_ds, max_dqc=max_dqc,
                       speedup=speedup)
