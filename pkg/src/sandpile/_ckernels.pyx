# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics are defined by ``_pykernels``; keep in lockstep."""

import numpy as np

from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc

from .errors import StepCapExceeded

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t sp_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    #define SP_GAMMA 0x9E3779B97F4A7C15ULL
    #define SP_GAMMA_J 0xD1B54A32D192ED03ULL
    static inline uint64_t sp_below(uint64_t w, uint64_t n) {
        return (uint64_t)(((__uint128_t)w * (__uint128_t)n) >> 64);
    }
    """
    uint64_t sp_mix64(uint64_t z) nogil
    uint64_t sp_below(uint64_t w, uint64_t n) nogil
    const uint64_t GAMMA "SP_GAMMA"
    const uint64_t GAMMA_J "SP_GAMMA_J"


cdef enum:
    LOWEST = 0
    FIFO = 1
    RANDOM = 2


cdef inline uint64_t derive(uint64_t seed, uint64_t index) nogil:
    return sp_mix64(sp_mix64(seed) + (index + 1) * GAMMA)


cdef inline bint unstable(int64_t e, int64_t r, int64_t k) nogil:
    return e >= 1 and (e >= k or r != 0)


cdef struct Work:
    int64_t n
    int64_t *buf       # heap / ring buffer / member list, capacity n
    int64_t *pos
    char *queued


cdef int work_init(Work *w, int64_t n) nogil:
    w.n = n
    w.buf = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    w.pos = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    w.queued = <char *> malloc((n + 1) * sizeof(char))
    if w.buf == NULL or w.pos == NULL or w.queued == NULL:
        return -1
    return 0


cdef void work_free(Work *w) nogil:
    free(w.buf)
    free(w.pos)
    free(w.queued)


cdef inline void heap_push(int64_t *h, int64_t *size, int64_t v) nogil:
    cdef int64_t i = size[0]
    cdef int64_t p
    size[0] += 1
    while i > 0:
        p = (i - 1) >> 1
        if h[p] <= v:
            break
        h[i] = h[p]
        i = p
    h[i] = v


cdef inline int64_t heap_pop(int64_t *h, int64_t *size) nogil:
    cdef int64_t top = h[0]
    cdef int64_t last, i, c, m
    size[0] -= 1
    m = size[0]
    if m == 0:
        return top
    last = h[m]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= m:
            break
        if c + 1 < m and h[c + 1] < h[c]:
            c += 1
        if h[c] >= last:
            break
        h[i] = h[c]
        i = c
    h[i] = last
    return top


cdef int stabilize_core(const int64_t *ptr, const int64_t *idx, int64_t n, int64_t k,
                        int64_t *eta, int64_t *res, const int64_t *j0, int64_t *odo,
                        uint64_t seed, int policy, uint64_t order_seed, int64_t cap,
                        Work *w, int64_t *steps_out, int64_t *exits_out) nogil:
    """Returns 0 on success, 1 if the step cap was hit."""
    cdef int64_t steps = 0, exits = 0, size = 0, head = 0, x, y, d, i, last
    cdef uint64_t word, ostate = sp_mix64(order_seed)
    cdef bint still
    cdef int64_t *buf = w.buf
    cdef int64_t *pos = w.pos
    cdef char *queued = w.queued

    for x in range(n):
        queued[x] = 0
        if unstable(eta[x], res[x], k):
            queued[x] = 1
            pos[x] = size
            buf[size] = x      # increasing order is a valid heap
            size += 1

    while size > 0:
        if steps >= cap:
            steps_out[0] = steps
            exits_out[0] = exits
            return 1
        if policy == LOWEST:
            x = heap_pop(buf, &size)
        elif policy == FIFO:
            x = buf[head]
            head += 1
            if head == n + 1:
                head = 0
            size -= 1
        else:
            ostate = ostate + GAMMA
            i = <int64_t> sp_below(sp_mix64(ostate), <uint64_t> size)
            x = buf[i]
        d = ptr[x + 1] - ptr[x]
        word = sp_mix64(sp_mix64(seed + <uint64_t>(x + 1) * GAMMA)
                        ^ (<uint64_t>(j0[x] + odo[x] + 1) * GAMMA_J))
        y = idx[ptr[x] + <int64_t> sp_below(word, <uint64_t> d)]
        odo[x] += 1
        res[x] = (res[x] + 1) % k
        steps += 1
        if y != x:
            eta[x] -= 1
            if y == n:
                exits += 1
        still = unstable(eta[x], res[x], k)
        if policy == RANDOM:
            if not still:
                size -= 1
                last = buf[size]
                if last != x:
                    buf[i] = last
                    pos[last] = i
                queued[x] = 0
            if y != x and y != n:
                eta[y] += 1
                if not queued[y] and unstable(eta[y], res[y], k):
                    queued[y] = 1
                    pos[y] = size
                    buf[size] = y
                    size += 1
            continue
        queued[x] = 0
        if y != x and y != n:
            eta[y] += 1
            if not queued[y] and unstable(eta[y], res[y], k):
                queued[y] = 1
                if policy == LOWEST:
                    heap_push(buf, &size, y)
                else:
                    buf[(head + size) % (n + 1)] = y
                    size += 1
        if still and not queued[x]:
            queued[x] = 1
            if policy == LOWEST:
                heap_push(buf, &size, x)
            else:
                buf[(head + size) % (n + 1)] = x
                size += 1
    steps_out[0] = steps
    exits_out[0] = exits
    return 0


def stabilize(const int64_t[::1] ptr, const int64_t[::1] idx, int64_t k,
              int64_t[::1] eta, int64_t[::1] res, const int64_t[::1] j0,
              uint64_t seed, int policy, uint64_t order_seed, int64_t cap):
    cdef int64_t n = eta.shape[0]
    cdef int64_t steps = 0, exits = 0
    cdef int rc
    cdef Work w
    odo_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] odo = odo_arr
    if work_init(&w, n) != 0:
        work_free(&w)
        raise MemoryError()
    with nogil:
        rc = stabilize_core(&ptr[0], &idx[0], n, k, &eta[0], &res[0], &j0[0], &odo[0],
                            seed, policy, order_seed, cap, &w, &steps, &exits)
    work_free(&w)
    if rc == 1:
        raise StepCapExceeded(f"stabilization exceeded {cap} half-topplings")
    return odo_arr, steps, exits


def exact_sample_batch(const int64_t[::1] ptr, const int64_t[::1] idx, int64_t k,
                       uint64_t seed, uint64_t first, int64_t[:, ::1] out, int64_t cap):
    cdef int64_t reps = out.shape[0], n = out.shape[1]
    cdef int64_t i, x, st = 0, ex = 0, total = 0
    cdef uint64_t s, hs
    cdef int rc = 0
    cdef Work w
    cdef int64_t *res = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *j0 = <int64_t *> malloc(n * sizeof(int64_t))
    cdef int64_t *odo = <int64_t *> malloc(n * sizeof(int64_t))
    if work_init(&w, n) != 0 or res == NULL or j0 == NULL or odo == NULL:
        work_free(&w); free(res); free(j0); free(odo)
        raise MemoryError()
    with nogil:
        for i in range(reps):
            s = derive(seed, first + <uint64_t> i)
            hs = derive(s, 0)
            for x in range(n):
                hs = hs + GAMMA
                res[x] = <int64_t> sp_below(sp_mix64(hs), <uint64_t> k)
                j0[x] = res[x]
                odo[x] = 0
                out[i, x] = k - 1
            rc = stabilize_core(&ptr[0], &idx[0], n, k, &out[i, 0], res, j0, odo,
                                derive(s, 1), LOWEST, 0, cap, &w, &st, &ex)
            total += st
            if rc != 0:
                break
    work_free(&w); free(res); free(j0); free(odo)
    if rc == 1:
        raise StepCapExceeded(f"stabilization exceeded {cap} half-topplings")
    return total


cdef int macro_core(const int64_t *ptr, const int64_t *idx, int64_t n, int64_t k,
                    int64_t *eta, uint64_t s, bint add_on_v_only, int64_t cap,
                    Work *w, int64_t *res, int64_t *j0, int64_t *odo,
                    int64_t *exits) nogil:
    cdef int64_t m = n if add_on_v_only else n + 1
    cdef int64_t x, st = 0
    x = <int64_t> sp_below(sp_mix64(s + GAMMA), <uint64_t> m)
    exits[0] = 0
    if x == n:
        return 0
    eta[x] += 1
    for x in range(n):
        res[x] = 0
        j0[x] = 0
        odo[x] = 0
    return stabilize_core(ptr, idx, n, k, eta, res, j0, odo, derive(s, 1), LOWEST, 0,
                          cap, w, &st, exits)


cdef class _Buffers:
    cdef Work w
    cdef int64_t *res
    cdef int64_t *j0
    cdef int64_t *odo

    def __cinit__(self, int64_t n):
        self.res = <int64_t *> malloc(n * sizeof(int64_t))
        self.j0 = <int64_t *> malloc(n * sizeof(int64_t))
        self.odo = <int64_t *> malloc(n * sizeof(int64_t))
        if work_init(&self.w, n) != 0 or self.res == NULL or self.j0 == NULL or self.odo == NULL:
            raise MemoryError()

    def __dealloc__(self):
        work_free(&self.w)
        free(self.res)
        free(self.j0)
        free(self.odo)


def macro_step(const int64_t[::1] ptr, const int64_t[::1] idx, int64_t k,
               int64_t[::1] eta, uint64_t seed, bint add_on_v_only, int64_t cap):
    cdef int64_t n = eta.shape[0], exits = 0
    cdef int rc
    cdef _Buffers b = _Buffers(n)
    with nogil:
        rc = macro_core(&ptr[0], &idx[0], n, k, &eta[0], seed, add_on_v_only, cap,
                        &b.w, b.res, b.j0, b.odo, &exits)
    if rc == 1:
        raise StepCapExceeded(f"stabilization exceeded {cap} half-topplings")
    return exits


def macro_step_batch(const int64_t[::1] ptr, const int64_t[::1] idx, int64_t k,
                     const int64_t[::1] eta_start, uint64_t seed, uint64_t first,
                     bint add_on_v_only, int64_t[:, ::1] out, int64_t cap):
    cdef int64_t reps = out.shape[0], n = out.shape[1], i, x, exits = 0
    cdef int rc = 0
    cdef _Buffers b = _Buffers(n)
    with nogil:
        for i in range(reps):
            for x in range(n):
                out[i, x] = eta_start[x]
            rc = macro_core(&ptr[0], &idx[0], n, k, &out[i, 0], derive(seed, first + <uint64_t> i),
                            add_on_v_only, cap, &b.w, b.res, b.j0, b.odo, &exits)
            if rc != 0:
                break
    if rc == 1:
        raise StepCapExceeded(f"stabilization exceeded {cap} half-topplings")


def drive_general(const int64_t[::1] ptr, const int64_t[::1] idx, int64_t k,
                  int64_t[::1] eta, uint64_t seed, int64_t burnin, int64_t steps,
                  int64_t record_every, bint add_on_v_only, int64_t cap):
    cdef int64_t n = eta.shape[0], nrec = steps // record_every
    cdef int64_t t, x, ex = 0, acc = 0, rec = 0, tot
    cdef int rc = 0
    cdef _Buffers b = _Buffers(n)
    totals_arr = np.zeros(nrec, dtype=np.int64)
    exits_arr = np.zeros(nrec, dtype=np.int64)
    cdef int64_t[::1] totals = totals_arr
    cdef int64_t[::1] exits_rec = exits_arr
    with nogil:
        for t in range(burnin + steps):
            rc = macro_core(&ptr[0], &idx[0], n, k, &eta[0], derive(seed, <uint64_t> t),
                            add_on_v_only, cap, &b.w, b.res, b.j0, b.odo, &ex)
            if rc != 0:
                break
            if t >= burnin:
                acc += ex
                if (t - burnin + 1) % record_every == 0 and rec < nrec:
                    tot = 0
                    for x in range(n):
                        tot += eta[x]
                    totals[rec] = tot
                    exits_rec[rec] = acc
                    acc = 0
                    rec += 1
    if rc == 1:
        raise StepCapExceeded(f"stabilization exceeded {cap} half-topplings")
    return totals_arr, exits_arr


cdef int micro_core(uint64_t N, int64_t *px, int64_t *py, uint64_t *pstate, int64_t cap,
                    int64_t *tau_out, int64_t *exits_out, int64_t *peak_out) nogil:
    cdef int64_t x = px[0], y = py[0], tau = 0, exits = 0, peak = py[0]
    cdef int64_t z, sink, sl
    cdef uint64_t state = pstate[0]
    cdef int rc = 0
    # branch-free body: the three moves are data dependent and unpredictable
    while y > 0:
        if tau >= cap:
            rc = 1
            break
        state = state + GAMMA
        z = <int64_t> sp_below(sp_mix64(state), N)
        tau += 1
        sink = z == 0
        sl = (z != 0) & (z <= x - y)
        x -= sink
        exits += sink
        y += 2 * sl - 1
        peak = y if y > peak else peak
    px[0] = x
    py[0] = y
    pstate[0] = state
    tau_out[0] = tau
    exits_out[0] = exits
    peak_out[0] = peak
    return rc


def micro_run(uint64_t N, int64_t x, int64_t y, uint64_t state, int64_t cap):
    cdef int64_t tau, exits, peak
    cdef int rc
    with nogil:
        rc = micro_core(N, &x, &y, &state, cap, &tau, &exits, &peak)
    if rc:
        raise StepCapExceeded(f"micro chain exceeded {cap} steps")
    return x, tau, exits, peak, state


def micro_run_batch(uint64_t N, int64_t x0, int64_t y0, uint64_t seed, uint64_t first,
                    int64_t cap, int64_t[::1] out_x, int64_t[::1] out_tau,
                    int64_t[::1] out_exits, int64_t[::1] out_peak):
    cdef int64_t i, reps = out_x.shape[0], x, y, tau, exits, peak
    cdef uint64_t state
    cdef int rc = 0
    with nogil:
        for i in range(reps):
            x = x0
            y = y0
            state = derive(seed, first + <uint64_t> i)
            rc = micro_core(N, &x, &y, &state, cap, &tau, &exits, &peak)
            if rc:
                break
            out_x[i] = x
            out_tau[i] = tau
            out_exits[i] = exits
            out_peak[i] = peak
    if rc:
        raise StepCapExceeded(f"micro chain exceeded {cap} steps")


def drive_complete(uint64_t N, int64_t xi0, uint64_t seed, int64_t burnin, int64_t steps,
                   int64_t record_every, int64_t cap):
    cdef int64_t nrec = steps // record_every
    cdef int64_t t, x, y, tau, ex, peak, acc = 0, rec = 0, xi = xi0
    cdef uint64_t state = seed
    cdef int rc = 0
    xs_arr = np.zeros(nrec, dtype=np.int64)
    ex_arr = np.zeros(nrec, dtype=np.int64)
    cdef int64_t[::1] xs = xs_arr
    cdef int64_t[::1] ex_rec = ex_arr
    with nogil:
        for t in range(burnin + steps):
            x = xi + 1
            y = 1
            rc = micro_core(N, &x, &y, &state, cap, &tau, &ex, &peak)
            if rc:
                break
            xi = x
            if t >= burnin:
                acc += ex
                if (t - burnin + 1) % record_every == 0 and rec < nrec:
                    xs[rec] = xi
                    ex_rec[rec] = acc
                    acc = 0
                    rec += 1
    if rc:
        raise StepCapExceeded(f"micro chain exceeded {cap} steps")
    return xs_arr, ex_arr, xi
