"""Event-driven fork/join simulator and the run drivers.

The `EventSim` class is the reference implementation: a plain heap-driven
discrete-event loop over explicit replica/server objects, written for clarity
and used as the correctness oracle.  The `run_*` drivers are what experiments
call; they draw the input streams, push them through the numba kernels (or the
event engine, for cross-checks) and stream results into tail counters.

Tie conventions, everywhere: completions at an epoch are processed before
arrivals at that epoch; simultaneous completions process in server-index
order; a cos-FCFS job whose sampled servers are equally available joins the
lowest-indexed one.  These rules make the event engine, the kernels, and the
workload recursion pathwise identical, not just equal in law.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import heavytail as ht
from . import kernels
from .asymptotics import ScenarioConfig
from .errors import ConfigurationError, InstabilityError
from .tailstats import TailCounter, TopReservoir

DEFAULT_CAP_REPLICAS = 10_000_000
STREAM_CHUNK = 1_000_000

QUEUED, IN_SERVICE, DONE, CANCELLED = 0, 1, 2, 3


@dataclass
class ReplicaJob:
    """One job and its replicas: sizes/servers by replica position, plus
    completion bookkeeping filled in as the simulation runs."""

    index: int
    arrival: float
    sizes: np.ndarray
    servers: np.ndarray
    state: np.ndarray  # per-position replica state code
    start_times: np.ndarray  # NaN until a replica starts
    n_started: int = 0
    n_completed: int = 0
    n_cancelled: int = 0
    response: float = math.nan
    join_wait: float = math.nan

    @property
    def width(self) -> int:
        return len(self.sizes)


@dataclass
class ServerState:
    """One server: FCFS keeps a waiting list plus the replica in service;
    LCFS-PR keeps a preemption stack whose top is in service.  `remaining`
    and `resumed_at` track lazily-materialized leftover work for the top."""

    index: int
    queue: list = field(default_factory=list)  # FCFS waiting replicas (job, pos) tuples
    current: tuple | None = None  # FCFS replica in service
    stack: list = field(default_factory=list)  # LCFS (job, pos) tuples, top last
    remaining: dict = field(default_factory=dict)  # (job_index, pos) -> leftover work
    resumed_at: dict = field(default_factory=dict)  # (job_index, pos) -> epoch service resumed


class EventSim:
    """Reference event-driven simulator for one scenario over explicit streams.

    `width` replicas per job are taken from sizes/servers row n; for
    cancel-on-start LCFS the caller passes width == n_join (replicas beyond
    the join target are abandoned the instant service would begin, so they
    never exist).
    """

    def __init__(self, cfg: ScenarioConfig, cap_replicas: int = DEFAULT_CAP_REPLICAS):
        self.cfg = cfg
        self.cap = cap_replicas

    def run(self, gaps: np.ndarray, sizes: np.ndarray, servers: np.ndarray) -> "SimTrace":
        cfg = self.cfg
        n_jobs, width = sizes.shape
        fcfs = cfg.discipline == "fcfs"
        coc = cfg.variant == "coc"
        n_join = cfg.n_join
        arrivals = np.cumsum(gaps)
        jobs: list[ReplicaJob] = []
        srv = [ServerState(i) for i in range(cfg.n_servers)]
        heap: list[tuple] = []  # (time, prio, key, seq, payload); prio 0=completion, 1=arrival
        seq = 0
        live = 0
        max_live = 0
        token: dict[tuple, int] = {}

        def push_completion(t, job, pos):
            nonlocal seq
            s = int(job.servers[pos])
            heapq.heappush(heap, (t, 0, s, seq, (job.index, pos, token.get((job.index, pos), 0))))
            seq += 1

        for n in range(n_jobs):
            heapq.heappush(heap, (arrivals[n], 1, n, seq, None))
            seq += 1

        def fcfs_start_next(s: ServerState, t: float):
            # pull the first startable waiting replica; cos rules may cancel
            # the job's remaining queued replicas once the join target starts
            nonlocal live
            while s.current is None and s.queue:
                job_idx, pos = s.queue.pop(0)
                job = jobs[job_idx]
                if job.state[pos] != QUEUED:
                    raise AssertionError("stale queue entry")
                if coc or job.n_started < n_join:
                    job.state[pos] = IN_SERVICE
                    job.start_times[pos] = t
                    job.n_started += 1
                    s.current = (job_idx, pos)
                    push_completion(t + float(job.sizes[pos]), job, pos)
                    if not coc and job.n_started == n_join:
                        cancel_queued_siblings(job, t)
                else:  # pragma: no cover - cos cancellation precedes this
                    raise AssertionError("cos replica left queued past its join target")

        def cancel_queued_siblings(job: ReplicaJob, t: float):
            nonlocal live
            for p in range(job.width):
                if job.state[p] == QUEUED:
                    job.state[p] = CANCELLED
                    job.n_cancelled += 1
                    live -= 1
                    sp = srv[int(job.servers[p])]
                    sp.queue.remove((job.index, p))

        def lcfs_pop_top(s: ServerState, t: float):
            # remove the in-service top and resume what it preempted
            s.stack.pop()
            if s.stack:
                j2, p2 = s.stack[-1]
                key = (j2, p2)
                token[key] = token.get(key, 0) + 1
                s.resumed_at[key] = t
                push_completion(t + s.remaining[key], jobs[j2], p2)

        def cancel_everywhere(job: ReplicaJob, t: float):
            # coc: the join target was met; abandon every other live replica
            nonlocal live
            for p in range(job.width):
                st = job.state[p]
                if st in (DONE, CANCELLED):
                    continue
                job.state[p] = CANCELLED
                job.n_cancelled += 1
                live -= 1
                s = srv[int(job.servers[p])]
                key = (job.index, p)
                if fcfs:
                    if st == IN_SERVICE:
                        s.current = None
                        fcfs_start_next(s, t)
                    else:
                        s.queue.remove(key)
                else:
                    token[key] = token.get(key, 0) + 1
                    if s.stack and s.stack[-1] == key:
                        lcfs_pop_top(s, t)
                    else:
                        s.stack.remove(key)
                    s.remaining.pop(key, None)
                    s.resumed_at.pop(key, None)

        while heap:
            t, prio, key_order, _, payload = heapq.heappop(heap)
            if prio == 1:
                # arrival of job key_order
                n = key_order
                job = ReplicaJob(
                    index=n,
                    arrival=t,
                    sizes=sizes[n].astype(np.float64),
                    servers=servers[n].astype(np.int64),
                    state=np.full(width, QUEUED, dtype=np.int8),
                    start_times=np.full(width, math.nan),
                )
                jobs.append(job)
                assert len(jobs) == n + 1
                live += width
                if live > max_live:
                    max_live = live
                if live > self.cap:
                    raise InstabilityError(
                        f"live replicas exceeded cap {self.cap} at job {n}",
                        n_processed=n,
                        queued=live,
                        cap=self.cap,
                    )
                if fcfs:
                    for p in range(width):
                        srv[int(job.servers[p])].queue.append((n, p))
                    for p in sorted(range(width), key=lambda q: int(job.servers[q])):
                        fcfs_start_next(srv[int(job.servers[p])], t)
                else:
                    for p in range(width):
                        s = srv[int(job.servers[p])]
                        if s.stack:
                            jc, pc = s.stack[-1]
                            ck = (jc, pc)
                            s.remaining[ck] -= t - s.resumed_at[ck]
                            token[ck] = token.get(ck, 0) + 1
                        keyp = (n, p)
                        s.stack.append(keyp)
                        s.remaining[keyp] = float(job.sizes[p])
                        s.resumed_at[keyp] = t
                        job.state[p] = IN_SERVICE
                        job.start_times[p] = t
                        job.n_started += 1
                        push_completion(t + float(job.sizes[p]), job, p)
                continue
            # completion event: validate against current service state
            job_idx, pos, tok = payload
            job = jobs[job_idx]
            key = (job_idx, pos)
            if job.state[pos] != IN_SERVICE or token.get(key, 0) != tok:
                continue  # stale: preempted or cancelled since scheduling
            s = srv[key_order]
            if fcfs:
                if s.current != key:  # pragma: no cover - state machine guard
                    raise AssertionError("completion for a replica not in service")
                s.current = None
            else:
                if not s.stack or s.stack[-1] != key:  # pragma: no cover
                    raise AssertionError("completion for a replica not on top")
            job.state[pos] = DONE
            job.n_completed += 1
            live -= 1
            if not fcfs:
                s.remaining.pop(key, None)
                s.resumed_at.pop(key, None)
                lcfs_pop_top(s, t)
            if job.n_completed == n_join and math.isnan(job.response):
                job.response = t - job.arrival
                done_waits = [job.start_times[p] - job.arrival for p in range(width) if job.state[p] == DONE]
                job.join_wait = max(done_waits)
                if coc:
                    cancel_everywhere(job, t)
                elif fcfs:
                    cancel_queued_siblings(job, t)
            if fcfs:
                fcfs_start_next(s, t)

        waits = np.array([j.join_wait for j in jobs])
        resp = np.array([j.response for j in jobs])
        started = np.array([j.n_started for j in jobs])
        completed = np.array([j.n_completed for j in jobs])
        cancelled = np.array([j.n_cancelled for j in jobs])
        return SimTrace(waits, resp, started, completed, cancelled, max_live)


@dataclass
class SimTrace:
    """Per-job outcome arrays from the event engine."""

    waits: np.ndarray
    responses: np.ndarray
    started: np.ndarray
    completed: np.ndarray
    cancelled: np.ndarray
    max_live: int


# ---------------------------------------------------------------------------
# Input streams.
# ---------------------------------------------------------------------------


def sample_server_sets(n_servers: int, width: int, n_jobs: int, rng: np.random.Generator) -> np.ndarray:
    """(n_jobs, width) distinct servers per row, uniform over ordered width-tuples.

    Row p-order is uniformly random, so callers needing a uniform unordered set
    AND a uniform choice of "first" replicas (cos-LCFS keeps the first n_join)
    can read positions left to right.  Chunked; draw order is row-major so the
    result is chunk-size independent.
    """
    if not (1 <= width <= n_servers):
        raise ConfigurationError(f"need 1 <= width <= n_servers, got {width} of {n_servers}")
    out = np.empty((n_jobs, width), dtype=np.int8)
    for lo in range(0, n_jobs, STREAM_CHUNK):
        hi = min(lo + STREAM_CHUNK, n_jobs)
        u = rng.random((hi - lo, n_servers))
        out[lo:hi] = np.argsort(u, axis=1, kind="stable")[:, :width].astype(np.int8)
    return out


@dataclass
class Streams:
    """Input streams for one run: gap before each job, replica sizes by
    position, sampled servers by position.  `aux` seeds any extra randomness a
    consumer needs (bound-system thinning coins, auxiliary iid draws) without
    disturbing the main streams."""

    gaps: np.ndarray
    sizes: np.ndarray
    servers: np.ndarray
    aux: np.random.SeedSequence

    @property
    def n_jobs(self) -> int:
        return len(self.gaps)


def draw_streams(cfg: ScenarioConfig, n_jobs: int, rng_stream: np.random.SeedSequence, width: int | None = None) -> Streams:
    """Materialize the coupled input streams for `cfg`.

    Component substreams spawn in a fixed order (gaps, sizes, servers, aux), so
    two scenarios differing only in fork width or discipline share arrival
    epochs and per-position size draws - the coupling the bound systems need.
    """
    if n_jobs <= 0:
        raise ConfigurationError(f"n_jobs must be positive, got {n_jobs}")
    if width is None:
        width = cfg.n_fork
    gap_ss, size_ss, server_ss, aux_ss = rng_stream.spawn(4)
    gaps = ht.sample_many(cfg.arrival, n_jobs, np.random.default_rng(gap_ss))
    sizes = ht.replica_matrix(cfg.job_size, cfg.dependence, width, n_jobs, np.random.default_rng(size_ss))
    servers = sample_server_sets(cfg.n_servers, width, n_jobs, np.random.default_rng(server_ss))
    return Streams(gaps, sizes, servers, aux_ss)


# ---------------------------------------------------------------------------
# Run drivers.
# ---------------------------------------------------------------------------

Method = Literal["kernel", "events"]


@dataclass
class RunSummary:
    """Bookkeeping from one simulation run (post-warmup unless noted)."""

    label: str
    n_jobs: int
    warmup: int
    n_recorded: int
    measured_load: float
    mean_joined_size: float
    mean_response: float
    max_workload: float
    max_live_replicas: int
    method: str


def default_warmup(n_jobs: int) -> int:
    """max(1e5, 1% of the run), the discard before recording starts."""
    return max(100_000, n_jobs // 100)


def _check_warmup(n_jobs: int, warmup: int | None) -> int:
    w = default_warmup(n_jobs) if warmup is None else warmup
    if not (0 <= w < n_jobs):
        raise ConfigurationError(f"warmup {w} must be in [0, n_jobs={n_jobs})")
    return w


def _record(
    sinks: tuple[TailCounter, TailCounter],
    waits: np.ndarray | None,
    resp: np.ndarray,
    warmup: int,
    reservoir: TopReservoir | None,
) -> None:
    wait_counter, resp_counter = sinks
    if waits is None:
        wait_counter.record_zeros(len(resp) - warmup)
    else:
        wait_counter.record(waits[warmup:])
    resp_counter.record(resp[warmup:])
    if reservoir is not None:
        reservoir.update(resp[warmup:])


def _summary(cfg, streams, warmup, resp, max_workload, max_live, method) -> RunSummary:
    post = slice(warmup, None)
    joined = np.sort(streams.sizes, axis=1)[:, cfg.n_join - 1] if streams.sizes.shape[1] > 1 else streams.sizes[:, 0]
    return RunSummary(
        label=cfg.label or cfg.describe(),
        n_jobs=streams.n_jobs,
        warmup=warmup,
        n_recorded=streams.n_jobs - warmup,
        measured_load=float(streams.sizes.mean() / streams.gaps.mean()),
        mean_joined_size=float(joined[post].mean()),
        mean_response=float(resp[post].mean()),
        max_workload=max_workload,
        max_live_replicas=max_live,
        method=method,
    )


def _raise_if_unstable(status: int, queued: int, cap: int) -> None:
    if status != kernels.COMPLETED:
        raise InstabilityError(
            f"apparent instability: queued replicas exceeded cap {cap} at job {status}",
            n_processed=int(status),
            queued=int(queued),
            cap=cap,
        )


def run_coc_fcfs(
    cfg: ScenarioConfig,
    n_jobs: int,
    sinks: tuple[TailCounter, TailCounter],
    rng_stream: np.random.SeedSequence,
    *,
    warmup: int | None = None,
    reservoir: TopReservoir | None = None,
    method: Method = "kernel",
    cap_replicas: int = DEFAULT_CAP_REPLICAS,
) -> RunSummary:
    """Cancel-on-completion FCFS run: waits and responses into `sinks`."""
    if cfg.variant != "coc" or cfg.discipline != "fcfs":
        raise ConfigurationError(f"run_coc_fcfs got a {cfg.variant}-{cfg.discipline} scenario")
    warmup_n = _check_warmup(n_jobs, warmup)
    streams = draw_streams(cfg, n_jobs, rng_stream)
    if method == "kernel":
        waits = np.empty(n_jobs)
        resp = np.empty(n_jobs)
        status, backlog = kernels.coc_fcfs_kernel(
            streams.gaps, streams.sizes, streams.servers, cfg.n_servers, cfg.n_join, cap_replicas, waits, resp
        )
        _raise_if_unstable(status, cap_replicas + 1, cap_replicas)
        max_live = -1  # not tracked by the front recursion
    else:
        trace = EventSim(cfg, cap_replicas).run(streams.gaps, streams.sizes, streams.servers)
        waits, resp, backlog, max_live = trace.waits, trace.responses, math.nan, trace.max_live
    _record(sinks, waits, resp, warmup_n, reservoir)
    return _summary(cfg, streams, warmup_n, resp, float(backlog), max_live, method)


def run_coc_lcfs_pr(
    cfg: ScenarioConfig,
    n_jobs: int,
    sinks: tuple[TailCounter, TailCounter],
    rng_stream: np.random.SeedSequence,
    *,
    warmup: int | None = None,
    reservoir: TopReservoir | None = None,
    method: Method = "kernel",
    cap_replicas: int = DEFAULT_CAP_REPLICAS,
) -> RunSummary:
    """Cancel-on-completion preemptive-LCFS run.  Waiting is identically zero
    under preemption, so the waiting sink only counts totals."""
    if cfg.variant != "coc" or cfg.discipline != "lcfs_pr":
        raise ConfigurationError(f"run_coc_lcfs_pr got a {cfg.variant}-{cfg.discipline} scenario")
    return _run_lcfs(cfg, n_jobs, sinks, rng_stream, cfg.n_fork, True, warmup, reservoir, method, cap_replicas)


def run_cos_lcfs_pr(
    cfg: ScenarioConfig,
    n_jobs: int,
    sinks: tuple[TailCounter, TailCounter],
    rng_stream: np.random.SeedSequence,
    *,
    warmup: int | None = None,
    reservoir: TopReservoir | None = None,
    method: Method = "kernel",
    cap_replicas: int = DEFAULT_CAP_REPLICAS,
) -> RunSummary:
    """Cancel-on-start preemptive-LCFS run.

    All replicas enter service the instant they arrive, so cancel-on-start
    resolves at the arrival epoch: the n_join replicas that survive are a
    uniform subset, realized as the first n_join positions of the (uniformly
    ordered) server sample.  Equivalent to n_join coupled replicas, no later
    cancellation.
    """
    if cfg.variant != "cos" or cfg.discipline != "lcfs_pr":
        raise ConfigurationError(f"run_cos_lcfs_pr got a {cfg.variant}-{cfg.discipline} scenario")
    return _run_lcfs(cfg, n_jobs, sinks, rng_stream, cfg.n_join, False, warmup, reservoir, method, cap_replicas)


def _run_lcfs(cfg, n_jobs, sinks, rng_stream, width, coc, warmup, reservoir, method, cap_replicas) -> RunSummary:
    warmup_n = _check_warmup(n_jobs, warmup)
    streams = draw_streams(cfg, n_jobs, rng_stream, width=width)
    if method == "kernel":
        resp = np.empty(n_jobs)
        status, max_live = kernels.lcfs_kernel(
            streams.gaps, streams.sizes, streams.servers, cfg.n_servers, cfg.n_join, coc, cap_replicas, resp
        )
        _raise_if_unstable(status, max_live, cap_replicas)
    else:
        trace = EventSim(cfg, cap_replicas).run(streams.gaps, streams.sizes, streams.servers)
        resp, max_live = trace.responses, trace.max_live
    _record(sinks, None, resp, warmup_n, reservoir)
    summary = _summary(cfg, streams, warmup_n, resp, math.nan, int(max_live), method)
    return summary
