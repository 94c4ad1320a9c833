"""Workload-vector recursion for cancel-on-start FCFS redundancy.

With cancel-on-start and one join target, a redundancy-d job is served by
exactly one server: the sampled server whose workload is smallest at arrival.
The system is therefore join-smallest-workload-of-d, and the per-server
workload vector evolves by a d-sampling Kiefer-Wolfowitz step:

    V_{n+1,i} = (V_{n,i} + b_n 1{i = i_n} - a_{n+1})^+,
    i_n = the smallest-index minimizer of V_n over the sampled set.

`jsw_d_step` is that single step over explicit state; `run_cos_fcfs` drives
the same recursion (numba kernel or the event engine) over drawn streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine, kernels
from .asymptotics import ScenarioConfig
from .errors import ConfigurationError
from .tailstats import TailCounter, TopReservoir


@dataclass(frozen=True)
class WorkloadVector:
    """Per-server unfinished work at an arrival epoch (unordered)."""

    per_server: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.per_server, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigurationError("workload vector must be 1-D and nonempty")
        if (arr < 0).any():
            raise ConfigurationError("workloads cannot be negative")
        object.__setattr__(self, "per_server", arr)

    @property
    def n_servers(self) -> int:
        return self.per_server.size

    @property
    def ordered(self) -> np.ndarray:
        """Ascending order statistics of the workloads."""
        return np.sort(self.per_server)


@dataclass(frozen=True)
class ArrivalEvent:
    """One arriving job: its size, the sampled server set, and the gap to the
    next arrival (the recursion consumes the gap after the join)."""

    size: float
    servers: tuple[int, ...]
    next_gap: float

    def __post_init__(self) -> None:
        if self.size < 0 or self.next_gap < 0:
            raise ConfigurationError("size and gap must be nonnegative")
        if len(self.servers) == 0 or len(set(self.servers)) != len(self.servers):
            raise ConfigurationError("sampled servers must be distinct and nonempty")


def jsw_d_step(state: WorkloadVector, event: ArrivalEvent) -> tuple[WorkloadVector, float]:
    """One arrival: join the least-loaded sampled server (lowest index on
    ties), add the size there, then age every server by the next gap.

    Returns (next state, waiting time of this job).
    """
    v = state.per_server
    for s in event.servers:
        if not (0 <= s < v.size):
            raise ConfigurationError(f"sampled server {s} out of range for {v.size} servers")
    sampled = np.asarray(event.servers, dtype=np.int64)
    wait = float(v[sampled].min())
    joined = int(sampled[v[sampled] == wait].min())
    nxt = v.copy()
    nxt[joined] += event.size
    nxt = np.maximum(nxt - event.next_gap, 0.0)
    return WorkloadVector(nxt), wait


def run_cos_fcfs(
    cfg: ScenarioConfig,
    n_jobs: int,
    sinks: tuple[TailCounter, TailCounter],
    rng_stream: np.random.SeedSequence,
    *,
    warmup: int | None = None,
    reservoir: TopReservoir | None = None,
    method: engine.Method = "kernel",
    cap_replicas: int = engine.DEFAULT_CAP_REPLICAS,
) -> engine.RunSummary:
    """Cancel-on-start FCFS (redundancy-d) run: waits and responses into `sinks`.

    Stability (load < n_servers) is enforced by the scenario config, so the
    recursion cannot diverge; max_workload in the summary shows how close the
    run came to the cap anyway.
    """
    if cfg.variant != "cos" or cfg.discipline != "fcfs":
        raise ConfigurationError(f"run_cos_fcfs got a {cfg.variant}-{cfg.discipline} scenario")
    warmup_n = engine._check_warmup(n_jobs, warmup)
    streams = engine.draw_streams(cfg, n_jobs, rng_stream)
    if method == "kernel":
        waits = np.empty(n_jobs)
        resp = np.empty(n_jobs)
        joined = np.empty(n_jobs)
        joined_srv = np.empty(n_jobs, dtype=np.int8)
        _, max_w = kernels.jsw_kernel(
            streams.gaps, streams.sizes, streams.servers, cfg.n_servers, waits, resp, joined, joined_srv
        )
        max_live = -1
    else:
        trace = engine.EventSim(cfg, cap_replicas).run(streams.gaps, streams.sizes, streams.servers)
        waits, resp, max_w, max_live = trace.waits, trace.responses, math.nan, trace.max_live
    engine._record(sinks, waits, resp, warmup_n, reservoir)
    return engine._summary(cfg, streams, warmup_n, resp, float(max_w), max_live, method)
