# cython: language_level=3
"""Compiled per-slot kernels; same contract as ``_pykernels``.

Enumeration order, tie-breaking and floating-point operation order follow
the pure-Python module so both backends return the same decisions.
"""
import numpy as np

from libc.math cimport log, log2, expm1, pow, INFINITY, NAN, isinf
from libc.stdlib cimport malloc, free

BACKEND = "cython"

cdef double LN2 = log(2.0)


cdef inline double _fill(const double* a, int cnt, double rate,
                         int* m_out, double* level_out) noexcept nogil:
    # a: ascending noise-to-gain ratios, inf entries last
    cdef int finite = 0
    cdef int i, m = 0
    cdef double s = 0.0, level = NAN, total = 0.0
    while finite < cnt and not isinf(a[finite]):
        finite += 1
    if finite == 0:
        m_out[0] = 0
        level_out[0] = NAN
        return INFINITY
    for i in range(finite):
        s += log2(a[i])
        m = i + 1
        level = (rate + s) / m
        if m == finite or level <= log2(a[m]):
            break
    if m == 1:
        total = a[0] * expm1(LN2 * rate)
    else:
        for i in range(m):
            total += a[i] * expm1(LN2 * (level - log2(a[i])))
    m_out[0] = m
    level_out[0] = level
    return total


cdef inline double _share(double a, double level, int m, double rate) noexcept nogil:
    # power on one active channel; with one active channel the gap is the rate
    if m == 1:
        return a * expm1(LN2 * rate)
    return a * expm1(LN2 * (level - log2(a)))


cdef inline double _fill_la(const double* a, const double* la, int cnt,
                            double rate) noexcept nogil:
    # _fill with log2(a) supplied; returns inf when no usable channel
    cdef int finite = 0
    cdef int i, m = 0
    cdef double s = 0.0, level = NAN, total = 0.0
    while finite < cnt and not isinf(a[finite]):
        finite += 1
    if finite == 0:
        return INFINITY
    for i in range(finite):
        s += la[i]
        m = i + 1
        level = (rate + s) / m
        if m == finite or level <= la[m]:
            break
    if m == 1:
        return a[0] * expm1(LN2 * rate)
    for i in range(m):
        total += a[i] * expm1(LN2 * (level - la[i]))
    return total


cdef inline void _sort_idx_by(double* key, int* idx, int cnt) noexcept nogil:
    # stable insertion sort of idx ascending by key[idx]
    cdef int i, j, v
    for i in range(1, cnt):
        v = idx[i]
        j = i - 1
        while j >= 0 and key[idx[j]] > key[v]:
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = v


cdef inline void _sort_vals(double* x, int cnt) noexcept nogil:
    cdef int i, j
    cdef double v
    for i in range(1, cnt):
        v = x[i]
        j = i - 1
        while j >= 0 and x[j] > v:
            x[j + 1] = x[j]
            j -= 1
        x[j + 1] = v


cdef struct Slot:
    int K
    int N
    double* g      # K*N gains
    double* a      # K*N noise-to-gain ratios
    double* la     # log2 of a
    int* order     # K*N channel indices, strongest first per sensor


cdef int _slot_init(Slot* s, const double[:, ::1] gains, double W, double N0) except -1:
    cdef int K = gains.shape[0], N = gains.shape[1]
    cdef int k, n, i, j, v
    cdef double gv
    s.K = K
    s.N = N
    s.g = <double*> malloc(K * N * sizeof(double))
    s.a = <double*> malloc(K * N * sizeof(double))
    s.la = <double*> malloc(K * N * sizeof(double))
    s.order = <int*> malloc(K * N * sizeof(int))
    if s.g == NULL or s.a == NULL or s.la == NULL or s.order == NULL:
        _slot_free(s)
        raise MemoryError()
    for k in range(K):
        for n in range(N):
            gv = gains[k, n]
            s.g[k * N + n] = gv
            s.a[k * N + n] = (W * N0) / gv if gv > 0.0 else INFINITY
            s.la[k * N + n] = log2(s.a[k * N + n])
            s.order[k * N + n] = n
        # strongest first; stable so lower channel index wins ties
        for i in range(1, N):
            v = s.order[k * N + i]
            j = i - 1
            while j >= 0 and s.g[k * N + s.order[k * N + j]] < s.g[k * N + v]:
                s.order[k * N + j + 1] = s.order[k * N + j]
                j -= 1
            s.order[k * N + j + 1] = v
    return 0


cdef void _slot_free(Slot* s) noexcept nogil:
    free(s.g)
    free(s.a)
    free(s.la)
    free(s.order)
    s.g = NULL
    s.a = NULL
    s.la = NULL
    s.order = NULL


cdef void _greedy(Slot* s, const signed char* b, bint refill_all,
                  int* owner, int* ptr, signed char* taken,
                  signed char* active) noexcept nogil:
    # owner[n] receives the sensor given channel n (-1 if none)
    cdef int K = s.K, N = s.N
    cdef int k, n, it, best_k, best_n, n_active = 0
    cdef double best_g, gv
    for n in range(N):
        owner[n] = -1
        taken[n] = 0
    for k in range(K):
        ptr[k] = 0
        active[k] = 1 if b[k] else 0
        n_active += active[k]
    if n_active == 0:
        return
    for it in range(N):
        best_k = -1
        best_n = -1
        best_g = -1.0
        for k in range(K):
            if not active[k]:
                continue
            while taken[s.order[k * N + ptr[k]]]:
                ptr[k] += 1
            n = s.order[k * N + ptr[k]]
            gv = s.g[k * N + n]
            if gv > best_g:
                best_g = gv
                best_k = k
                best_n = n
        owner[best_n] = best_k
        taken[best_n] = 1
        active[best_k] = 0
        n_active -= 1
        if n_active == 0:
            for k in range(K):
                if refill_all or b[k]:
                    active[k] = 1
                    n_active += 1


cdef double _candidate(Slot* s, const signed char* b, const double* w,
                       double V, double rate, double c1, bint refill_all,
                       int* act, int* ptr, signed char* taken,
                       double* buf, double* lbuf, int* cnt) noexcept nogil:
    # same greedy as _greedy, over a compact ascending list of active sensors
    cdef int K = s.K, N = s.N
    cdef int k, n, i, it, best_i, na = 0, row
    cdef double best_g, gv, total = 0.0, wsum = 0.0, pk
    for k in range(K):
        ptr[k] = 0
        cnt[k] = 0
        if b[k]:
            act[na] = k
            na += 1
    if na == 0:
        return 0.0
    for n in range(N):
        taken[n] = 0
    for it in range(N):
        best_i = 0
        best_g = -1.0
        for i in range(na):
            k = act[i]
            row = k * N
            while taken[s.order[row + ptr[k]]]:
                ptr[k] += 1
            gv = s.g[row + s.order[row + ptr[k]]]
            if gv > best_g:
                best_g = gv
                best_i = i
        k = act[best_i]
        n = s.order[k * N + ptr[k]]
        ptr[k] += 1
        # pick order per sensor is already ascending in a
        buf[k * N + cnt[k]] = s.a[k * N + n]
        lbuf[k * N + cnt[k]] = s.la[k * N + n]
        cnt[k] += 1
        taken[n] = 1
        for i in range(best_i, na - 1):
            act[i] = act[i + 1]
        na -= 1
        if na == 0:
            for k in range(K):
                if refill_all or b[k]:
                    act[na] = k
                    na += 1
    for k in range(K):
        if not b[k]:
            continue
        if cnt[k] == 0:
            return INFINITY
        if cnt[k] == 1 or isinf(buf[k * N + 1]) or rate + lbuf[k * N] <= lbuf[k * N + 1]:
            # single active channel
            if isinf(buf[k * N]):
                return INFINITY
            pk = buf[k * N] * c1
        else:
            pk = _fill_la(&buf[k * N], &lbuf[k * N], cnt[k], rate)
        total += pk
        wsum += w[k]
    return V * total + wsum


cdef tuple _decision(Slot* s, const signed char* b, const int* owner,
                     const double* w, double V, double rate):
    # builds (rho, p, objective, bad) from a channel-owner map
    cdef int K = s.K, N = s.N
    cdef int k, n, i, c, m
    cdef double total = 0.0, wsum = 0.0, pk, level
    rho_arr = np.zeros((K, N), dtype=np.int8)
    p_arr = np.zeros((K, N), dtype=np.float64)
    cdef signed char[:, ::1] rho = rho_arr
    cdef double[:, ::1] p = p_arr
    cdef int* idx = <int*> malloc(N * sizeof(int))
    cdef double* sel = <double*> malloc(N * sizeof(double))
    cdef int bad = -1
    if idx == NULL or sel == NULL:
        free(idx)
        free(sel)
        raise MemoryError()
    try:
        for n in range(N):
            if owner[n] >= 0:
                rho[owner[n], n] = 1
        for k in range(K):
            if not b[k]:
                continue
            if rate == 0.0:
                wsum += w[k]
                continue
            c = 0
            for n in range(N):
                if owner[n] == k:
                    idx[c] = n
                    c += 1
            _sort_idx_by(&s.a[k * N], idx, c)
            for i in range(c):
                sel[i] = s.a[k * N + idx[i]]
            pk = _fill(sel, c, rate, &m, &level)
            if m == 0:
                bad = k
                return rho_arr, p_arr, float("inf"), bad
            for i in range(m):
                p[k, idx[i]] = _share(sel[i], level, m, rate)
            total += pk
            wsum += w[k]
    finally:
        free(idx)
        free(sel)
    return rho_arr, p_arr, V * total + wsum, bad


def waterfill(gains, double W, double N0, double eta):
    cdef double[::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef int n_ch = g.shape[0], i, m
    cdef double level, total
    powers_arr = np.zeros(n_ch, dtype=np.float64)
    cdef double[::1] powers = powers_arr
    if eta <= 0.0:
        return powers_arr, 0.0, 0.0
    if n_ch == 0:
        return powers_arr, float("inf"), float("nan")
    a_np = np.empty(n_ch, dtype=np.float64)
    cdef double[::1] a = a_np
    cdef int* idx = <int*> malloc(max(n_ch, 1) * sizeof(int))
    cdef double* sel = <double*> malloc(max(n_ch, 1) * sizeof(double))
    try:
        for i in range(n_ch):
            a[i] = (W * N0) / g[i] if g[i] > 0.0 else INFINITY
            idx[i] = i
        _sort_idx_by(&a[0], idx, n_ch)
        for i in range(n_ch):
            sel[i] = a[idx[i]]
        total = _fill(sel, n_ch, eta / W, &m, &level)
        if m == 0:
            return powers_arr, float("inf"), float("nan")
        for i in range(m):
            powers[idx[i]] = _share(sel[i], level, m, eta / W)
    finally:
        free(idx)
        free(sel)
    return powers_arr, total, pow(2.0, level)


def greedy_assign(gains, b, bint refill_all=False):
    cdef const double[:, ::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef const signed char[::1] bb = np.ascontiguousarray(b, dtype=np.int8)
    cdef int K = g.shape[0], N = g.shape[1], n
    cdef Slot s
    rho_arr = np.zeros((K, N), dtype=np.int8)
    cdef signed char[:, ::1] rho = rho_arr
    _slot_init(&s, g, 1.0, 1.0)
    cdef int* owner = <int*> malloc(N * sizeof(int))
    cdef int* ptr = <int*> malloc(K * sizeof(int))
    cdef signed char* taken = <signed char*> malloc(N)
    cdef signed char* active = <signed char*> malloc(K)
    try:
        _greedy(&s, &bb[0], refill_all, owner, ptr, taken, active)
        for n in range(N):
            if owner[n] >= 0:
                rho[owner[n], n] = 1
    finally:
        free(owner)
        free(ptr)
        free(taken)
        free(active)
        _slot_free(&s)
    return rho_arr


def evaluate(gains, b, weights, double V, double W, double N0, double eta,
             bint refill_all=False):
    cdef const double[:, ::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef const signed char[::1] bb = np.ascontiguousarray(b, dtype=np.int8)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int K = g.shape[0], N = g.shape[1]
    cdef Slot s
    _slot_init(&s, g, W, N0)
    cdef int* owner = <int*> malloc(N * sizeof(int))
    cdef int* ptr = <int*> malloc(K * sizeof(int))
    cdef signed char* taken = <signed char*> malloc(N)
    cdef signed char* active = <signed char*> malloc(K)
    try:
        _greedy(&s, &bb[0], refill_all, owner, ptr, taken, active)
        return _decision(&s, &bb[0], owner, &w[0], V, max(eta, 0.0) / W)
    finally:
        free(owner)
        free(ptr)
        free(taken)
        free(active)
        _slot_free(&s)


def solve_suboptimal(gains, weights, double V, double W, double N0, double eta,
                     bint refill_all=False):
    cdef const double[:, ::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int K = g.shape[0], N = g.shape[1], k, pop
    cdef long long mask, best_mask = 0, n_masks = (<long long> 1) << K
    cdef long long evaluations = 0, infeasible = 0
    cdef double rate = max(eta, 0.0) / W, obj, best_obj = 0.0
    cdef double c1 = expm1(LN2 * rate)
    cdef Slot s
    _slot_init(&s, g, W, N0)
    cdef int* owner = <int*> malloc(N * sizeof(int))
    cdef int* ptr = <int*> malloc(K * sizeof(int))
    cdef int* cnt = <int*> malloc(K * sizeof(int))
    cdef int* act = <int*> malloc(K * sizeof(int))
    cdef signed char* taken = <signed char*> malloc(N)
    cdef signed char* active = <signed char*> malloc(K)
    cdef signed char* bits = <signed char*> malloc(K)
    cdef double* buf = <double*> malloc(K * N * sizeof(double))
    cdef double* lbuf = <double*> malloc(K * N * sizeof(double))
    try:
        with nogil:
            for mask in range(n_masks):
                pop = 0
                for k in range(K):
                    bits[k] = (mask >> k) & 1
                    pop += bits[k]
                if pop > N:
                    continue
                evaluations += 1
                if rate == 0.0:
                    obj = 0.0
                    for k in range(K):
                        if bits[k]:
                            obj += w[k]
                else:
                    obj = _candidate(&s, bits, &w[0], V, rate, c1, refill_all,
                                     act, ptr, taken, buf, lbuf, cnt)
                if isinf(obj):
                    infeasible += 1
                    continue
                if obj < best_obj:
                    best_obj = obj
                    best_mask = mask
            for k in range(K):
                bits[k] = (best_mask >> k) & 1
            _greedy(&s, bits, refill_all, owner, ptr, taken, active)
        b_arr = np.array([(best_mask >> k) & 1 for k in range(K)], dtype=np.int8)
        rho, p, obj_out, _ = _decision(&s, bits, owner, &w[0], V, rate)
        return b_arr, rho, p, obj_out, int(evaluations), int(infeasible)
    finally:
        free(owner)
        free(ptr)
        free(cnt)
        free(act)
        free(taken)
        free(active)
        free(bits)
        free(buf)
        free(lbuf)
        _slot_free(&s)


cdef double _subset_power(Slot* s, int k, long long chan_mask, double rate,
                          double* sel) noexcept nogil:
    cdef int N = s.N, n, c = 0, m
    cdef double level
    if chan_mask == 0:
        return INFINITY
    if rate == 0.0:
        return 0.0
    for n in range(N):
        if (chan_mask >> n) & 1:
            sel[c] = s.a[k * N + n]
            c += 1
    _sort_vals(sel, c)
    return _fill(sel, c, rate, &m, &level)


def solve_exhaustive(gains, weights, double V, double W, double N0, double eta):
    cdef const double[:, ::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int K = g.shape[0], N = g.shape[1], k, n, i, j, d
    cdef long long mask, best_b = 0, n_masks = (<long long> 1) << K
    cdef long long assignments = 0, infeasible = 0, n_sub = (<long long> 1) << N
    cdef double rate = max(eta, 0.0) / W, obj, best_obj = 0.0, total, wsum, pk
    cdef bint use_cache = N <= 20 and K * n_sub <= (1 << 22)
    cdef bint done
    cdef Slot s
    _slot_init(&s, g, W, N0)
    cdef int* samplers = <int*> malloc(K * sizeof(int))
    cdef int* digits = <int*> malloc(N * sizeof(int))
    cdef int* best_digits = <int*> malloc(N * sizeof(int))
    cdef int* best_samplers = <int*> malloc(K * sizeof(int))
    cdef int* owner = <int*> malloc(N * sizeof(int))
    cdef long long* masks = <long long*> malloc(K * sizeof(long long))
    cdef double* sel = <double*> malloc(N * sizeof(double))
    cdef double* cache = NULL
    cdef signed char* bits = <signed char*> malloc(K)
    cdef int best_j = 0
    if use_cache:
        cache = <double*> malloc(K * n_sub * sizeof(double))
    try:
        with nogil:
            if use_cache:
                for i in range(K * n_sub):
                    cache[i] = NAN
            for n in range(N):
                best_digits[n] = 0
            for mask in range(n_masks):
                j = 0
                wsum = 0.0
                for k in range(K):
                    if (mask >> k) & 1:
                        samplers[j] = k
                        j += 1
                        wsum += w[k]
                if j > N:
                    continue
                for n in range(N):
                    digits[n] = 0
                for i in range(j):
                    masks[i] = 0
                done = False
                while not done:
                    assignments += 1
                    if j == 0:
                        obj = 0.0
                    else:
                        total = 0.0
                        for i in range(j):
                            if use_cache:
                                pk = cache[samplers[i] * n_sub + masks[i]]
                                if pk != pk:
                                    pk = _subset_power(&s, samplers[i], masks[i], rate, sel)
                                    cache[samplers[i] * n_sub + masks[i]] = pk
                            else:
                                pk = _subset_power(&s, samplers[i], masks[i], rate, sel)
                            total += pk
                        if isinf(total):
                            obj = INFINITY
                            infeasible += 1
                        else:
                            obj = V * total + wsum
                    if obj < best_obj:
                        best_obj = obj
                        best_b = mask
                        best_j = j
                        for n in range(N):
                            best_digits[n] = digits[n]
                        for i in range(j):
                            best_samplers[i] = samplers[i]
                    # odometer step, channel 0 fastest
                    n = 0
                    while True:
                        if n == N:
                            done = True
                            break
                        d = digits[n]
                        if d > 0:
                            masks[d - 1] &= ~((<long long> 1) << n)
                        if d < j:
                            digits[n] = d + 1
                            masks[d] |= (<long long> 1) << n
                            break
                        digits[n] = 0
                        n += 1
            for k in range(K):
                bits[k] = (best_b >> k) & 1
            for n in range(N):
                owner[n] = best_samplers[best_digits[n] - 1] if best_digits[n] > 0 else -1
        b_arr = np.array([(best_b >> k) & 1 for k in range(K)], dtype=np.int8)
        rho, p, obj_out, _ = _decision(&s, bits, owner, &w[0], V, rate)
        return b_arr, rho, p, obj_out, int(assignments), int(infeasible)
    finally:
        free(samplers)
        free(digits)
        free(best_digits)
        free(best_samplers)
        free(owner)
        free(masks)
        free(sel)
        free(cache)
        free(bits)
        _slot_free(&s)
