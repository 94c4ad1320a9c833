"""Numba kernels for the four hot loops.

All kernels are array-in/array-out and allocation-free per step.  Workloads are
kept relative to the current arrival epoch (Lindley style) wherever a pathwise
comparison against another system matters, so equal trajectories are equal in
floating point, not just mathematically.  Each kernel is validated pathwise
against the pure-Python event engine in the test suite.

Return convention: kernels fill preallocated output arrays and return a status
tuple; `status >= 0` is the job index where the instability cap tripped, -1
means the run completed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

COMPLETED = -1  # status value for a clean run


@njit(cache=True)
def jsw_kernel(gaps, sizes, servers, n_servers, out_wait, out_resp, out_joined, out_server):
    """Join-smallest-workload with d-sampling: the cos-FCFS recursion.

    gaps[n] is the interarrival gap before job n (gaps[0] is the first arrival
    offset and never affects waits).  sizes[n, p] / servers[n, p] give the
    replica size and server at position p.  Joins the sampled server with the
    least workload, lowest server index on ties; that index lands in
    out_server (the coupling coordinate the bound systems need).  Returns
    (status, max_workload).
    """
    n_jobs, width = sizes.shape
    v = np.zeros(n_servers, dtype=np.float64)
    max_w = 0.0
    for n in range(n_jobs):
        best = -1
        best_p = 0
        best_v = 0.0
        for p in range(width):
            s = servers[n, p]
            w = v[s]
            if best < 0 or w < best_v or (w == best_v and s < best):
                best = s
                best_v = w
                best_p = p
        b = sizes[n, best_p]
        out_wait[n] = best_v
        out_resp[n] = best_v + b
        out_joined[n] = b
        out_server[n] = best
        v[best] += b
        if v[best] > max_w:
            max_w = v[best]
        if n + 1 < n_jobs:
            g = gaps[n + 1]
            for i in range(n_servers):
                w = v[i] - g
                v[i] = w if w > 0.0 else 0.0
    return COMPLETED, max_w


@njit(cache=True)
def ranked_jsw_kernel(gaps, sizes, min_ranks, n_servers, out_wait):
    """Join-least recursion on the ascending workload vector, rank-sampled.

    min_ranks[n] is the lowest sampled rank of the sorted vector; job n (one
    scalar size) joins that rank.  Sampling ranks instead of server identities
    leaves the waiting process unchanged in law, and two runs sharing the same
    rank stream stay coupled step for step even when their workload vectors
    differ - the form the gap-discrepancy inequality needs.  Same op order as
    jsw_kernel.  Returns the max workload.
    """
    n_jobs = gaps.shape[0]
    v = np.zeros(n_servers, dtype=np.float64)  # ascending
    mx = 0.0
    for n in range(n_jobs):
        q = min_ranks[n]
        w = v[q]
        out_wait[n] = w
        grown = w + sizes[n]
        j = q
        while j + 1 < n_servers and v[j + 1] < grown:
            v[j] = v[j + 1]
            j += 1
        v[j] = grown
        if grown > mx:
            mx = grown
        if n + 1 < n_jobs:
            g = gaps[n + 1]
            for i in range(n_servers):
                w2 = v[i] - g
                v[i] = w2 if w2 > 0.0 else 0.0
    return mx


@njit(cache=True)
def lindley_kernel(gaps, sizes, out_wait):
    """Single-server FCFS waits: W_{n+1} = (W_n + b_n - a_{n+1})^+.

    Operation order (add size, then subtract gap, then clamp) is fixed so
    coupled systems that reduce to this recursion match it bit for bit.
    Returns the max wait seen.
    """
    n = sizes.shape[0]
    w = 0.0
    mx = 0.0
    for i in range(n):
        out_wait[i] = w
        if w > mx:
            mx = w
        if i + 1 < n:
            w = w + sizes[i]
            w = w - gaps[i + 1]
            if w < 0.0:
                w = 0.0
    return mx


@njit(cache=True)
def batch_lindley_kernel(gap, sizes, out_wait):
    """N parallel single-server FCFS queues with a common deterministic gap.

    sizes is (n_jobs, N); each column is its own queue fed one job per batch
    epoch.  out_wait matches sizes' shape.
    """
    n, m = sizes.shape
    for j in range(m):
        w = 0.0
        for i in range(n):
            out_wait[i, j] = w
            w = w + sizes[i, j]
            w = w - gap
            if w < 0.0:
                w = 0.0


@njit(cache=True)
def coc_fcfs_kernel(gaps, sizes, servers, n_servers, n_join, cap_replicas, out_wait, out_resp):
    """Cancel-on-completion FCFS via the per-server front recursion.

    front[i] is when server i becomes free of all work it will ever render for
    jobs before the current one, relative to the current arrival epoch and
    clamped at 0 (an idle server's history is irrelevant).  For each job:
    replica p starts at S_p = front[s_p], would complete at C_p = S_p + b_p;
    the join epoch T* is the n_join-th smallest (C_p, server) lexicographic
    pair; each replica releases its server at max(S_p, min(C_p, T*)): queued
    replicas vanish at T*, running ones are cut at T*, survivors run to C_p.

    out_wait[n] is the wait of the last-starting survivor (the n_join-th start
    among replicas that complete).  Pending jobs (resolution epoch in the
    future) are counted with a small heap; pending * width replicas over
    `cap_replicas` aborts.  Returns (status, max_backlog).
    """
    n_jobs, width = sizes.shape
    front = np.zeros(n_servers, dtype=np.float64)
    s_rel = np.empty(width, dtype=np.float64)
    c_rel = np.empty(width, dtype=np.float64)
    order = np.empty(width, dtype=np.int64)
    heap = np.empty(1024, dtype=np.float64)
    heap_n = 0
    t_abs = 0.0
    max_backlog = 0.0
    for n in range(n_jobs):
        if n > 0:
            t_abs += gaps[n]
        for p in range(width):
            sp = front[servers[n, p]]
            s_rel[p] = sp
            c_rel[p] = sp + sizes[n, p]
            order[p] = p
        # insertion sort by (completion, server index); width is tiny
        for a in range(1, width):
            key = order[a]
            kc = c_rel[key]
            ks = servers[n, key]
            b = a - 1
            while b >= 0 and (c_rel[order[b]] > kc or (c_rel[order[b]] == kc and servers[n, order[b]] > ks)):
                order[b + 1] = order[b]
                b -= 1
            order[b + 1] = key
        t_star = c_rel[order[n_join - 1]]
        out_resp[n] = t_star
        w = 0.0
        for a in range(n_join):
            sv = s_rel[order[a]]
            if sv > w:
                w = sv
        out_wait[n] = w
        for p in range(width):
            c = c_rel[p]
            rel = c if c < t_star else t_star
            sp = s_rel[p]
            if sp > rel:
                rel = sp
            if rel > max_backlog:
                max_backlog = rel
            front[servers[n, p]] = rel
        if n + 1 < n_jobs:
            g = gaps[n + 1]
            for i in range(n_servers):
                nf = front[i] - g
                front[i] = nf if nf > 0.0 else 0.0
        # pending-job guard: heap of absolute resolution epochs
        while heap_n > 0 and heap[0] <= t_abs:
            heap_n -= 1
            heap[0] = heap[heap_n]
            i = 0
            while True:
                l = 2 * i + 1
                r = l + 1
                small = i
                if l < heap_n and heap[l] < heap[small]:
                    small = l
                if r < heap_n and heap[r] < heap[small]:
                    small = r
                if small == i:
                    break
                tmp = heap[i]
                heap[i] = heap[small]
                heap[small] = tmp
                i = small
        if heap_n >= heap.shape[0]:
            grown = np.empty(heap.shape[0] * 2, dtype=np.float64)
            grown[: heap.shape[0]] = heap
            heap = grown
        heap[heap_n] = t_abs + t_star
        i = heap_n
        heap_n += 1
        while i > 0:
            parent = (i - 1) >> 1
            if heap[parent] <= heap[i]:
                break
            tmp = heap[i]
            heap[i] = heap[parent]
            heap[parent] = tmp
            i = parent
        if heap_n * width > cap_replicas:
            return n, max_backlog
    return COMPLETED, max_backlog


@njit(cache=True)
def lcfs_kernel(gaps, sizes, servers, n_servers, n_join, coc, cap_replicas, out_resp):
    """Preemptive-resume LCFS on N servers with fork/join and cancellation.

    Replica (n, p) has flat id n*width + p.  Per-server stacks are linked
    lists: top[s] is the replica in service, below[r] the one it preempted.
    Remaining work is materialized lazily: started_at[r] is the epoch service
    last resumed; on preemption the elapsed time is banked into remaining[r].

    coc=True cancels a job's other replicas once n_join of them finish;
    cancel-on-start is the same kernel with width == n_join (replicas that
    would never start simply never arrive).  Completion ties break by lowest
    server index; completions at an epoch precede arrivals at that epoch.
    out_resp[n] is NaN for jobs still unfinished at the end of input.
    Returns (status, max_live_replicas).
    """
    n_jobs, width = sizes.shape
    size = n_jobs * width
    top = np.full(n_servers, -1, dtype=np.int64)
    below = np.empty(size, dtype=np.int32)
    remaining = np.empty(size, dtype=np.float64)
    started_at = np.empty(size, dtype=np.float64)
    alive = np.zeros(size, dtype=np.uint8)
    done_count = np.zeros(n_jobs, dtype=np.int8)
    arrival_time = np.empty(n_jobs, dtype=np.float64)
    out_resp[:] = np.nan
    live = 0
    max_live = 0
    t = 0.0
    next_n = 0
    next_at = gaps[0] if n_jobs > 0 else np.inf
    while True:
        best_s = -1
        best_t = np.inf
        for s in range(n_servers):
            r = top[s]
            if r >= 0:
                ct = started_at[r] + remaining[r]
                if ct < best_t:
                    best_s = s
                    best_t = ct
        arrival_due = next_n < n_jobs
        if best_s < 0 and not arrival_due:
            break
        if best_s >= 0 and (not arrival_due or best_t <= next_at):
            # completion on best_s
            t = best_t
            r = top[best_s]
            n = r // width
            alive[r] = 0
            live -= 1
            nxt = below[r]
            top[best_s] = nxt
            if nxt >= 0:
                started_at[nxt] = t
            done_count[n] += 1
            if done_count[n] == n_join:
                out_resp[n] = t - arrival_time[n]
                if coc:
                    for p in range(width):
                        q = n * width + p
                        if alive[q]:
                            alive[q] = 0
                            live -= 1
                            s2 = servers[n, p]
                            if top[s2] == q:
                                top[s2] = below[q]
                                if top[s2] >= 0:
                                    started_at[top[s2]] = t
                            else:
                                u = top[s2]
                                while below[u] != q:
                                    u = below[u]
                                below[u] = below[q]
            continue
        # arrival of job next_n
        t = next_at
        n = next_n
        arrival_time[n] = t
        next_n += 1
        next_at = t + gaps[next_n] if next_n < n_jobs else np.inf
        for p in range(width):
            r = n * width + p
            s = servers[n, p]
            cur = top[s]
            if cur >= 0:
                remaining[cur] -= t - started_at[cur]
            below[r] = cur
            top[s] = r
            remaining[r] = sizes[n, p]
            started_at[r] = t
            alive[r] = 1
        live += width
        if live > max_live:
            max_live = live
        if live > cap_replicas:
            return n, max_live
    return COMPLETED, max_live
