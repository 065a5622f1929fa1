"""Compiled simulation kernels.

Each kernel replays the reference engine's dynamics on packed arrays and
returns per-job completion times. Phase kinds are coded 0 (elastic) and
1 (in-elastic). ``stats`` receives (events, clamped steps, peak n).

The suffix kernel covers every policy that, once n is large, serves the
newest ``m`` jobs at one common speed (Fractional-LCFS in its first case,
PA-EQUI and Blind EQUI once n >= N). In that regime the served jobs share a
virtual work clock ``V``: a served job stores ``V + remaining`` and a lazy
min-heap yields the next phase completion in O(log n). Below the threshold
it falls back to an explicit O(n) pass per event.
"""

import math

import numpy as np
from numba import njit

TOL = 1e-9
MIN_STEP = 1e-12

POLICY_FLCFS = 0
POLICY_PA_EQUI = 1
POLICY_BLIND_EQUI = 2


@njit(cache=True)
def _ceil_count(x):
    return int(math.ceil(x - 1e-9))


@njit(cache=True)
def _at_most(a, b):
    return a <= b * (1.0 + 1e-12)


# -- binary min-heap over (key, job, stamp) ---------------------------------


@njit(cache=True)
def _heap_push(hk, hj, hs, size, key, job, stamp):
    i = size
    hk[i] = key
    hj[i] = job
    hs[i] = stamp
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] < hk[i] or (hk[p] == hk[i] and hj[p] <= hj[i]):
            break
        hk[p], hk[i] = hk[i], hk[p]
        hj[p], hj[i] = hj[i], hj[p]
        hs[p], hs[i] = hs[i], hs[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(hk, hj, hs, size):
    size -= 1
    hk[0] = hk[size]
    hj[0] = hj[size]
    hs[0] = hs[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and (hk[r] < hk[l] or (hk[r] == hk[l] and hj[r] < hj[l])):
            c = r
        if hk[i] < hk[c] or (hk[i] == hk[c] and hj[i] <= hj[c]):
            break
        hk[c], hk[i] = hk[i], hk[c]
        hj[c], hj[i] = hj[i], hj[c]
        hs[c], hs[i] = hs[i], hs[c]
        i = c
    return size


# -- suffix kernel: Fractional-LCFS, PA-EQUI, Blind EQUI -------------------


@njit(cache=True)
def _small_speeds(policy, order, n, cur, ph_kind, N, beta, theta, delta, inv_alpha, sp):
    n_i = 0
    for k in range(n):
        n_i += ph_kind[cur[order[k]]]
    n_e = n - n_i
    for k in range(n):
        sp[k] = 0.0
    if policy == POLICY_BLIND_EQUI:
        s = (N / n) ** inv_alpha
        for k in range(n):
            if ph_kind[cur[order[k]]] == 1 and s > 1.0:
                sp[k] = 1.0
            else:
                sp[k] = s
        return
    if policy == POLICY_PA_EQUI:
        if _at_most(N, float(n)):
            s = (N / n) ** inv_alpha
            for k in range(n):
                if ph_kind[cur[order[k]]] == 1 and s > 1.0:
                    sp[k] = 1.0
                else:
                    sp[k] = s
        elif n_i >= _ceil_count(delta * n):
            se = 0.0
            if N - n_i > 0 and n_e > 0:
                se = ((N - n_i) / n_e) ** inv_alpha
            for k in range(n):
                if ph_kind[cur[order[k]]] == 1:
                    sp[k] = 1.0
                else:
                    sp[k] = se
        else:
            se = (N / n_e) ** inv_alpha
            for k in range(n):
                if ph_kind[cur[order[k]]] == 0:
                    sp[k] = se
        return
    # Fractional-LCFS
    if _at_most(N, beta * n):
        m = _ceil_count(beta * n)
        s = (N / m) ** inv_alpha
        for k in range(n - m, n):
            if ph_kind[cur[order[k]]] == 1 and s > 1.0:
                sp[k] = 1.0
            else:
                sp[k] = s
    elif n_i >= _ceil_count(theta * n):
        c = min(n_i, int(math.floor(N)))
        got = 0
        k = n - 1
        while k >= 0 and got < c:
            if ph_kind[cur[order[k]]] == 1:
                sp[k] = 1.0
                got += 1
            k -= 1
        if n_e > 0 and N - c > 0:
            me = _ceil_count(beta * n_e)
            se = ((N - c) / me) ** inv_alpha
            got = 0
            k = n - 1
            while k >= 0 and got < me:
                if ph_kind[cur[order[k]]] == 0:
                    sp[k] = se
                    got += 1
                k -= 1
    else:
        m = _ceil_count(beta * n)
        s = (N / m) ** inv_alpha
        for k in range(n - m, n):
            if ph_kind[cur[order[k]]] == 0:
                sp[k] = s


@njit(cache=True)
def run_suffix(policy, arrival, ph_start, ph_size, ph_kind, N, beta, theta, delta, inv_alpha, large_min, completion, stats):
    nj = arrival.shape[0]
    bulk_beta = beta if policy == POLICY_FLCFS else 1.0
    enter_n = max(large_min, int(math.ceil(2.0 * N / bulk_beta)))

    cur = np.zeros(nj, np.int64)
    val = np.zeros(nj, np.float64)
    stamp = np.zeros(nj, np.int64)
    served = np.zeros(nj, np.bool_)
    prv = np.full(nj, -1, np.int64)
    nxt = np.full(nj, -1, np.int64)
    head = -1
    tail = -1

    cap = 2 * nj + 128
    hk = np.empty(cap, np.float64)
    hj = np.empty(cap, np.int64)
    hs = np.empty(cap, np.int64)
    hsize = 0

    order = np.empty(nj, np.int64)
    sp = np.empty(nj, np.float64)
    done_buf = np.empty(nj, np.int64)

    large = False
    V = 0.0
    b = -1
    cnt = 0

    n = 0
    ai = 0
    t = 0.0
    events = 0
    clamps = 0
    nmax = 0

    while ai < nj or n > 0:
        if n == 0:
            t = arrival[ai]
        # admit arrivals
        while ai < nj and arrival[ai] <= t:
            j = ai
            ai += 1
            cur[j] = ph_start[j]
            val[j] = ph_size[cur[j]]
            prv[j] = tail
            nxt[j] = -1
            if tail >= 0:
                nxt[tail] = j
            else:
                head = j
            tail = j
            n += 1
            if large:
                val[j] += V
                served[j] = True
                stamp[j] += 1
                hsize = _heap_push(hk, hj, hs, hsize, val[j], j, stamp[j])
                cnt += 1
                if b < 0:
                    b = j
        if n > nmax:
            nmax = n

        # mode switches
        if large:
            if not _at_most(N, bulk_beta * n):
                k = b
                while k >= 0:
                    val[k] -= V
                    served[k] = False
                    stamp[k] += 1
                    k = nxt[k]
                large = False
                hsize = 0
        elif n >= enter_n and _at_most(N, bulk_beta * n):
            large = True
            V = 0.0
            m = _ceil_count(bulk_beta * n)
            hsize = 0
            k = tail
            for _ in range(m):
                served[k] = True
                stamp[k] += 1
                hsize = _heap_push(hk, hj, hs, hsize, val[k], k, stamp[k])
                b = k
                k = prv[k]
            cnt = m

        if large:
            # rebalance the served suffix to m = ceil(beta n)
            m = _ceil_count(bulk_beta * n)
            while cnt > m:
                val[b] -= V
                served[b] = False
                stamp[b] += 1
                b = nxt[b]
                cnt -= 1
            while cnt < m:
                k = tail if b < 0 else prv[b]
                val[k] += V
                served[k] = True
                stamp[k] += 1
                hsize = _heap_push(hk, hj, hs, hsize, val[k], k, stamp[k])
                b = k
                cnt += 1
            if hsize > 2 * cnt + 64:
                hsize = 0
                k = b
                while k >= 0:
                    hsize = _heap_push(hk, hj, hs, hsize, val[k], k, stamp[k])
                    k = nxt[k]
            s = (N / m) ** inv_alpha
            while hsize > 0 and (hs[0] != stamp[hj[0]] or not served[hj[0]]):
                hsize = _heap_pop(hk, hj, hs, hsize)
            dt = (hk[0] - V) / s
            na = arrival[ai] if ai < nj else math.inf
            if na - t <= dt:
                V += s * (na - t)
                t = na
            else:
                if dt < MIN_STEP:
                    dt = MIN_STEP
                    clamps += 1
                V += s * dt
                t = t + dt
            events += 1
            nd = 0
            while hsize > 0:
                j = hj[0]
                if hs[0] != stamp[j] or not served[j]:
                    hsize = _heap_pop(hk, hj, hs, hsize)
                    continue
                if hk[0] - V > TOL:
                    break
                hsize = _heap_pop(hk, hj, hs, hsize)
                done_buf[nd] = j
                nd += 1
            for q in range(nd):
                j = done_buf[q]
                cur[j] += 1
                stamp[j] += 1
                if cur[j] < ph_start[j + 1]:
                    val[j] = V + ph_size[cur[j]]
                    hsize = _heap_push(hk, hj, hs, hsize, val[j], j, stamp[j])
                else:
                    completion[j] = t
                    served[j] = False
                    cnt -= 1
                    if b == j:
                        b = nxt[j]
                    if prv[j] >= 0:
                        nxt[prv[j]] = nxt[j]
                    else:
                        head = nxt[j]
                    if nxt[j] >= 0:
                        prv[nxt[j]] = prv[j]
                    else:
                        tail = prv[j]
                    n -= 1
            if n == 0:
                large = False
                hsize = 0
                b = -1
                cnt = 0
            continue

        # explicit pass
        k = head
        for q in range(n):
            order[q] = k
            k = nxt[k]
        _small_speeds(policy, order, n, cur, ph_kind, N, beta, theta, delta, inv_alpha, sp)
        dt = math.inf
        for q in range(n):
            if sp[q] > 0.0:
                d = val[order[q]] / sp[q]
                if d < dt:
                    dt = d
        na = arrival[ai] if ai < nj else math.inf
        if dt == math.inf and na == math.inf:
            stats[0] = events
            stats[1] = clamps
            stats[2] = nmax
            return False
        if na - t <= dt:
            dt = na - t
            tn = na
        else:
            if dt < MIN_STEP:
                dt = MIN_STEP
                clamps += 1
            tn = t + dt
        events += 1
        for q in range(n):
            if sp[q] <= 0.0:
                continue
            j = order[q]
            r = val[j] - sp[q] * dt
            if r <= TOL:
                cur[j] += 1
                if cur[j] < ph_start[j + 1]:
                    val[j] = ph_size[cur[j]]
                else:
                    completion[j] = tn
                    if prv[j] >= 0:
                        nxt[prv[j]] = nxt[j]
                    else:
                        head = nxt[j]
                    if nxt[j] >= 0:
                        prv[nxt[j]] = prv[j]
                    else:
                        tail = prv[j]
                    n -= 1
            else:
                val[j] = r
        t = tn

    stats[0] = events
    stats[1] = clamps
    stats[2] = nmax
    return True


# -- Inelastic-First --------------------------------------------------------


@njit(cache=True)
def run_inelastic_first(arrival, ph_start, ph_size, ph_kind, N, inv_alpha, completion, stats):
    nj = arrival.shape[0]
    C = int(math.floor(N))
    cur = np.zeros(nj, np.int64)
    val = np.zeros(nj, np.float64)

    # elastic group: tags against a shared clock, no stale entries
    ek = np.empty(nj + 1, np.float64)
    ej = np.empty(nj + 1, np.int64)
    es = np.zeros(nj + 1, np.int64)
    esize = 0
    Ve = 0.0
    # waiting in-elastic jobs, keyed by arrival position
    wk = np.empty(nj + 1, np.float64)
    wj = np.empty(nj + 1, np.int64)
    ws = np.zeros(nj + 1, np.int64)
    wsize = 0
    srv = np.empty(C + 1, np.int64)
    srem = np.empty(C + 1, np.float64)
    ns = 0

    new_in = np.empty(nj, np.int64)
    new_el = np.empty(nj, np.int64)

    n = 0
    ai = 0
    t = 0.0
    events = 0
    clamps = 0
    nmax = 0

    while ai < nj or n > 0:
        if n == 0:
            t = arrival[ai]
        n_new_in = 0
        n_new_el = 0
        while ai < nj and arrival[ai] <= t:
            j = ai
            ai += 1
            cur[j] = ph_start[j]
            n += 1
            if ph_kind[cur[j]] == 1:
                new_in[n_new_in] = j
                n_new_in += 1
            else:
                new_el[n_new_el] = j
                n_new_el += 1
        if n > nmax:
            nmax = n

        while True:
            for q in range(n_new_el):
                j = new_el[q]
                esize = _heap_push(ek, ej, es, esize, Ve + ph_size[cur[j]], j, 0)
            for q in range(n_new_in):
                j = new_in[q]
                val[j] = ph_size[cur[j]]
                wsize = _heap_push(wk, wj, ws, wsize, float(j), j, 0)
            # served set = the C oldest in-elastic jobs
            while ns < C and wsize > 0:
                j = wj[0]
                wsize = _heap_pop(wk, wj, ws, wsize)
                srv[ns] = j
                srem[ns] = val[j]
                ns += 1
            while wsize > 0 and ns > 0:
                qmax = 0
                for q in range(1, ns):
                    if srv[q] > srv[qmax]:
                        qmax = q
                if wj[0] > srv[qmax]:
                    break
                j = wj[0]
                wsize = _heap_pop(wk, wj, ws, wsize)
                old = srv[qmax]
                val[old] = srem[qmax]
                wsize = _heap_push(wk, wj, ws, wsize, float(old), old, 0)
                srv[qmax] = j
                srem[qmax] = val[j]

            se = 0.0
            if esize > 0 and N - ns > 0:
                se = ((N - ns) / esize) ** inv_alpha
            dt = math.inf
            for q in range(ns):
                if srem[q] < dt:
                    dt = srem[q]
            if se > 0.0:
                d = (ek[0] - Ve) / se
                if d < dt:
                    dt = d
            na = arrival[ai] if ai < nj else math.inf
            if dt == math.inf and na == math.inf:
                stats[0] = events
                stats[1] = clamps
                stats[2] = nmax
                return False
            if na - t <= dt:
                dt = na - t
                tn = na
            else:
                if dt < MIN_STEP:
                    dt = MIN_STEP
                    clamps += 1
                tn = t + dt
            events += 1
            Ve += se * dt
            n_new_in = 0
            n_new_el = 0
            q = 0
            while q < ns:
                srem[q] -= dt
                if srem[q] <= TOL:
                    j = srv[q]
                    ns -= 1
                    srv[q] = srv[ns]
                    srem[q] = srem[ns]
                    cur[j] += 1
                    if cur[j] >= ph_start[j + 1]:
                        completion[j] = tn
                        n -= 1
                    elif ph_kind[cur[j]] == 1:
                        new_in[n_new_in] = j
                        n_new_in += 1
                    else:
                        new_el[n_new_el] = j
                        n_new_el += 1
                    continue
                q += 1
            if se > 0.0:
                while esize > 0 and ek[0] - Ve <= TOL:
                    j = ej[0]
                    esize = _heap_pop(ek, ej, es, esize)
                    cur[j] += 1
                    if cur[j] >= ph_start[j + 1]:
                        completion[j] = tn
                        n -= 1
                    elif ph_kind[cur[j]] == 1:
                        new_in[n_new_in] = j
                        n_new_in += 1
                    else:
                        new_el[n_new_el] = j
                        n_new_el += 1
            t = tn
            if ai < nj and arrival[ai] <= t:
                # hand the phase changes to the arrival block
                break
            if n == 0:
                break
        # flush phase changes pending from an interval that ended on an arrival
        for q in range(n_new_el):
            j = new_el[q]
            esize = _heap_push(ek, ej, es, esize, Ve + ph_size[cur[j]], j, 0)
        for q in range(n_new_in):
            j = new_in[q]
            val[j] = ph_size[cur[j]]
            wsize = _heap_push(wk, wj, ws, wsize, float(j), j, 0)

    stats[0] = events
    stats[1] = clamps
    stats[2] = nmax
    return True


# -- phase-aware FCFS -------------------------------------------------------


@njit(cache=True)
def run_pa_fcfs(arrival, ph_start, ph_size, ph_kind, N, inv_alpha, completion, stats):
    nj = arrival.shape[0]
    cur = np.zeros(nj, np.int64)
    val = np.zeros(nj, np.float64)
    prv = np.full(nj, -1, np.int64)
    nxt = np.full(nj, -1, np.int64)
    head = -1
    tail = -1
    width = int(math.floor(N)) + 2
    sj = np.empty(width, np.int64)
    ss = np.empty(width, np.float64)

    n = 0
    ai = 0
    t = 0.0
    events = 0
    clamps = 0
    nmax = 0

    while ai < nj or n > 0:
        if n == 0:
            t = arrival[ai]
        while ai < nj and arrival[ai] <= t:
            j = ai
            ai += 1
            cur[j] = ph_start[j]
            val[j] = ph_size[cur[j]]
            prv[j] = tail
            nxt[j] = -1
            if tail >= 0:
                nxt[tail] = j
            else:
                head = j
            tail = j
            n += 1
        if n > nmax:
            nmax = n

        left = N
        cnt = 0
        k = head
        while k >= 0:
            if left <= 0:
                break
            if ph_kind[cur[k]] == 1:
                if left >= 1.0:
                    s = 1.0
                    left -= 1.0
                else:
                    s = left ** inv_alpha
                    if s > 1.0:
                        s = 1.0
                    left = 0.0
            else:
                s = left ** inv_alpha
                left = 0.0
            sj[cnt] = k
            ss[cnt] = s
            cnt += 1
            k = nxt[k]

        dt = math.inf
        for q in range(cnt):
            if ss[q] > 0.0:
                d = val[sj[q]] / ss[q]
                if d < dt:
                    dt = d
        na = arrival[ai] if ai < nj else math.inf
        if dt == math.inf and na == math.inf:
            stats[0] = events
            stats[1] = clamps
            stats[2] = nmax
            return False
        if na - t <= dt:
            dt = na - t
            tn = na
        else:
            if dt < MIN_STEP:
                dt = MIN_STEP
                clamps += 1
            tn = t + dt
        events += 1
        for q in range(cnt):
            if ss[q] <= 0.0:
                continue
            j = sj[q]
            r = val[j] - ss[q] * dt
            if r <= TOL:
                cur[j] += 1
                if cur[j] < ph_start[j + 1]:
                    val[j] = ph_size[cur[j]]
                else:
                    completion[j] = tn
                    if prv[j] >= 0:
                        nxt[prv[j]] = nxt[j]
                    else:
                        head = nxt[j]
                    if nxt[j] >= 0:
                        prv[nxt[j]] = prv[j]
                    else:
                        tail = prv[j]
                    n -= 1
            else:
                val[j] = r
        t = tn

    stats[0] = events
    stats[1] = clamps
    stats[2] = nmax
    return True
