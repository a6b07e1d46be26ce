"""Pure-Python kernels; reference semantics for ``_ckernels.pyx``.

Both modules expose the same functions with the same signatures and must
produce bit-identical results for identical inputs. Array arguments are
1-d ``int64`` numpy arrays (2-d for batch outputs).

Order policies: 0 = lowest index, 1 = FIFO queue, 2 = uniform random.
"""

import heapq

import numpy as np

from .errors import StepCapExceeded
from .rng import GAMMA, GAMMA_J, MASK64, derive_seed, mix64

LOWEST, FIFO, RANDOM = 0, 1, 2


def _unstable(e, r, k):
    return e >= 1 and (e >= k or r != 0)


def _stabilize(ptr, idx, n, k, eta, res, j0, odo, seed, policy, order_seed, cap):
    """Stabilize list-state in place. Returns (steps, sink_exits)."""
    steps = 0
    exits = 0
    queued = [False] * n
    if policy == LOWEST:
        heap = []
        for x in range(n):
            if _unstable(eta[x], res[x], k):
                heap.append(x)
                queued[x] = True
        # already sorted, hence a valid heap

        def pop():
            return heapq.heappop(heap)

        def push(v):
            heapq.heappush(heap, v)

        def nonempty():
            return bool(heap)

    elif policy == FIFO:
        from collections import deque

        dq = deque()
        for x in range(n):
            if _unstable(eta[x], res[x], k):
                dq.append(x)
                queued[x] = True

        def pop():
            return dq.popleft()

        def push(v):
            dq.append(v)

        def nonempty():
            return bool(dq)

    else:
        ostate = [mix64(order_seed)]
        members = []
        pos = [-1] * n
        for x in range(n):
            if _unstable(eta[x], res[x], k):
                pos[x] = len(members)
                members.append(x)
                queued[x] = True
        chosen = [0]

        def pop():
            ostate[0] = (ostate[0] + GAMMA) & MASK64
            i = (mix64(ostate[0]) * len(members)) >> 64
            chosen[0] = i
            return members[i]

        def push(v):
            pos[v] = len(members)
            members.append(v)

        def nonempty():
            return bool(members)

    while nonempty():
        if steps >= cap:
            raise StepCapExceeded(f"stabilization exceeded {cap} half-topplings")
        x = pop()
        d = ptr[x + 1] - ptr[x]
        w = mix64(mix64(seed + (x + 1) * GAMMA) ^ (((j0[x] + odo[x] + 1) * GAMMA_J) & MASK64))
        y = idx[ptr[x] + ((w * d) >> 64)]
        odo[x] += 1
        res[x] = (res[x] + 1) % k
        steps += 1
        if y != x:
            eta[x] -= 1
            if y == n:
                exits += 1
        still = _unstable(eta[x], res[x], k)
        if policy == RANDOM:
            if not still:
                # swap-remove the chosen member
                i = chosen[0]
                last = members.pop()
                if last != x:
                    members[i] = last
                    pos[last] = i
                pos[x] = -1
                queued[x] = False
            if y != x and y != n:
                eta[y] += 1
                if not queued[y] and _unstable(eta[y], res[y], k):
                    queued[y] = True
                    push(y)
            continue
        queued[x] = False
        if y != x and y != n:
            eta[y] += 1
            if not queued[y] and _unstable(eta[y], res[y], k):
                queued[y] = True
                push(y)
        if still and not queued[x]:
            queued[x] = True
            push(x)
    return steps, exits


def stabilize(ptr, idx, k, eta, res, j0, seed, policy, order_seed, cap):
    """Stabilize ``(eta, res)`` in place; ``j0`` offsets the instruction index.

    Returns ``(odometer, steps, sink_exits)``.
    """
    n = len(eta)
    e = [int(v) for v in eta]
    r = [int(v) for v in res]
    odo = [0] * n
    steps, exits = _stabilize(
        [int(v) for v in ptr], [int(v) for v in idx], n, int(k), e, r,
        [int(v) for v in j0], odo, int(seed) & MASK64, int(policy),
        int(order_seed) & MASK64, int(cap),
    )
    eta[:] = e
    res[:] = r
    return np.array(odo, dtype=np.int64), steps, exits


def exact_sample_batch(ptr, idx, k, seed, first, out, cap):
    """Row ``i`` of ``out`` gets the exact sample of replica ``first + i``.

    Replica seed ``s = derive_seed(seed, r)``; residues drawn from
    ``derive_seed(s, 0)``, instructions from ``derive_seed(s, 1)``.
    """
    reps, n = out.shape
    p = [int(v) for v in ptr]
    q = [int(v) for v in idx]
    k = int(k)
    total_steps = 0
    for i in range(reps):
        s = derive_seed(int(seed), int(first) + i)
        hs = derive_seed(s, 0)
        r = []
        for _ in range(n):
            hs = (hs + GAMMA) & MASK64
            r.append((mix64(hs) * k) >> 64)
        e = [k - 1] * n
        j0 = list(r)
        odo = [0] * n
        st, _ = _stabilize(p, q, n, k, e, r, j0, odo, derive_seed(s, 1), LOWEST, 0, int(cap))
        total_steps += st
        out[i, :] = e
    return total_steps


def _macro_step(p, q, n, k, e, s, add_on_v_only, cap):
    """One driven step on list-state ``e`` with step seed ``s``; returns sink exits."""
    m = n if add_on_v_only else n + 1
    x = (mix64((s + GAMMA) & MASK64) * m) >> 64
    if x == n:
        return 0
    e[x] += 1
    r = [0] * n
    odo = [0] * n
    _, exits = _stabilize(p, q, n, k, e, r, r[:], odo, derive_seed(s, 1), LOWEST, 0, cap)
    return exits


def macro_step(ptr, idx, k, eta, seed, add_on_v_only, cap):
    """In place: add at a uniform vertex of V (+ sink) then stabilize."""
    e = [int(v) for v in eta]
    exits = _macro_step([int(v) for v in ptr], [int(v) for v in idx], len(e), int(k), e,
                        int(seed) & MASK64, bool(add_on_v_only), int(cap))
    eta[:] = e
    return exits


def macro_step_batch(ptr, idx, k, eta_start, seed, first, add_on_v_only, out, cap):
    reps, n = out.shape
    p = [int(v) for v in ptr]
    q = [int(v) for v in idx]
    start = [int(v) for v in eta_start]
    for i in range(reps):
        e = list(start)
        _macro_step(p, q, n, int(k), e, derive_seed(int(seed), int(first) + i),
                    bool(add_on_v_only), int(cap))
        out[i, :] = e


def drive_general(ptr, idx, k, eta, seed, burnin, steps, record_every, add_on_v_only, cap):
    """Driven chain on a general graph; step ``t`` uses ``derive_seed(seed, t)``.

    Returns (totals, exits) at each record time; ``eta`` ends in place.
    """
    p = [int(v) for v in ptr]
    q = [int(v) for v in idx]
    e = [int(v) for v in eta]
    n = len(e)
    nrec = int(steps) // int(record_every)
    totals = np.zeros(nrec, dtype=np.int64)
    exits_rec = np.zeros(nrec, dtype=np.int64)
    acc = 0
    rec = 0
    for t in range(int(burnin) + int(steps)):
        ex = _macro_step(p, q, n, int(k), e, derive_seed(int(seed), t), bool(add_on_v_only), int(cap))
        if t >= burnin:
            acc += ex
            done = t - burnin + 1
            if done % record_every == 0 and rec < nrec:
                totals[rec] = sum(e)
                exits_rec[rec] = acc
                acc = 0
                rec += 1
    eta[:] = e
    return totals, exits_rec


def micro_run(N, x, y, state, cap):
    """Micro chain from (x, y) with a SplitMix64 state; one uniform slot per step.

    Slot 0 is the sink, slots ``1..x-y`` hold sleepers, the rest are empty
    or active sites. Returns ``(x, tau0, sink_exits, peak_y, state)``.
    """
    tau = 0
    exits = 0
    peak = y
    while y > 0:
        if tau >= cap:
            raise StepCapExceeded(f"micro chain exceeded {cap} steps")
        state = (state + GAMMA) & MASK64
        z = (mix64(state) * N) >> 64
        tau += 1
        if z == 0:
            x -= 1
            y -= 1
            exits += 1
        elif z <= x - y:
            y += 1
            if y > peak:
                peak = y
        else:
            y -= 1
    return x, tau, exits, peak, state


def micro_run_batch(N, x0, y0, seed, first, cap, out_x, out_tau, out_exits, out_peak):
    N, x0, y0, cap = int(N), int(x0), int(y0), int(cap)
    for i in range(len(out_x)):
        x, tau, ex, pk, _ = micro_run(N, x0, y0, derive_seed(int(seed), int(first) + i), cap)
        out_x[i] = x
        out_tau[i] = tau
        out_exits[i] = ex
        out_peak[i] = pk


def drive_complete(N, xi0, seed, burnin, steps, record_every, cap):
    """Macro chain on the complete graph via micro runs from (xi + 1, 1).

    One SplitMix64 stream seeded with ``seed`` feeds every micro step.
    Returns (xi, exits) at each record time and the final xi.
    """
    N, cap = int(N), int(cap)
    state = int(seed) & MASK64
    nrec = int(steps) // int(record_every)
    xs = np.zeros(nrec, dtype=np.int64)
    ex_rec = np.zeros(nrec, dtype=np.int64)
    xi = int(xi0)
    acc = 0
    rec = 0
    for t in range(int(burnin) + int(steps)):
        xi, _, ex, _, state = micro_run(N, xi + 1, 1, state, cap)
        if t >= burnin:
            acc += ex
            if (t - burnin + 1) % record_every == 0 and rec < nrec:
                xs[rec] = xi
                ex_rec[rec] = acc
                acc = 0
                rec += 1
    return xs, ex_rec, xi
