"""Pure-Python per-slot kernels.

Reference implementation of the hot loops: water-filling, greedy sub-channel
assignment, enumeration over sampling vectors and the exhaustive search.
``_ckernels.pyx`` mirrors these function-for-function; keep the two in step,
including enumeration order and tie-breaking.

All kernels work on noise-to-gain ratios ``a = W*N0/g``. A zero gain maps to
``a = inf`` and is never given power.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

BACKEND = "python"

_LN2 = math.log(2.0)


def _noise_to_gain(gains, W, N0):
    g = np.asarray(gains, dtype=np.float64)
    with np.errstate(divide="ignore"):
        a = np.where(g > 0.0, (W * N0) / np.where(g > 0.0, g, 1.0), np.inf)
    return a


def _fill(a_sorted, rate):
    """Water-fill over ascending noise-to-gain ratios.

    Returns ``(m, log2_level, total)``; ``m == 0`` means no usable channel and
    ``total`` is then ``inf``.
    """
    finite = 0
    for x in a_sorted:
        if math.isinf(x):
            break
        finite += 1
    if finite == 0:
        return 0, math.nan, math.inf
    s = 0.0
    m = 0
    level = math.nan
    for i in range(finite):
        s += math.log2(a_sorted[i])
        m = i + 1
        level = (rate + s) / m
        if m == finite or level <= math.log2(a_sorted[m]):
            break
    if m == 1:
        return 1, level, a_sorted[0] * math.expm1(_LN2 * rate)
    total = 0.0
    for i in range(m):
        total += _share(a_sorted[i], level, m, rate)
    return m, level, total


def _share(a, level, m, rate):
    # power on one active channel; with one active channel the gap is the rate
    if m == 1:
        return a * math.expm1(_LN2 * rate)
    return a * math.expm1(_LN2 * (level - math.log2(a)))


def waterfill(gains, W, N0, eta):
    """Minimum-power allocation meeting ``eta`` bits over parallel channels.

    Returns ``(powers, total, level)`` where ``level`` is the water level
    (Watts). ``total`` is ``inf`` when every gain is zero.
    """
    a = _noise_to_gain(gains, W, N0)
    powers = np.zeros(a.shape[0])
    if eta <= 0.0:
        return powers, 0.0, 0.0
    order = np.argsort(a, kind="stable")
    a_sorted = [float(x) for x in a[order]]
    m, level, total = _fill(a_sorted, eta / W)
    if m == 0:
        return powers, math.inf, math.nan
    for i in range(m):
        powers[order[i]] = _share(a_sorted[i], level, m, eta / W)
    return powers, total, 2.0 ** level


def _channel_order(g_row):
    # strongest first, lowest channel index on ties
    return sorted(range(len(g_row)), key=lambda n: (-g_row[n], n))


def greedy_assign(gains, b, refill_all=False):
    g = np.asarray(gains, dtype=np.float64)
    K, N = g.shape
    rho = np.zeros((K, N), dtype=np.int8)
    sampling = [k for k in range(K) if b[k]]
    if not sampling:
        return rho
    refill = list(range(K)) if refill_all else sampling
    rows = g.tolist()
    orders = [_channel_order(rows[k]) for k in range(K)]
    ptr = [0] * K
    taken = [False] * N
    active = set(sampling)
    for _ in range(N):
        best_k = -1
        best_n = -1
        best_g = -1.0
        for k in range(K):
            if k not in active:
                continue
            while taken[orders[k][ptr[k]]]:
                ptr[k] += 1
            n = orders[k][ptr[k]]
            if rows[k][n] > best_g:
                best_g = rows[k][n]
                best_k = k
                best_n = n
        rho[best_k, best_n] = 1
        taken[best_n] = True
        active.discard(best_k)
        if not active:
            active = set(refill)
    return rho


def evaluate(gains, b, weights, V, W, N0, eta, refill_all=False):
    """Greedy assignment plus per-sensor water-filling for a fixed ``b``.

    Returns ``(rho, p, objective, bad)``; ``bad`` is the index of the first
    sampling sensor left without a usable channel, or -1.
    """
    g = np.asarray(gains, dtype=np.float64)
    K, N = g.shape
    rho = greedy_assign(g, b, refill_all)
    p = np.zeros((K, N))
    a = _noise_to_gain(g, W, N0)
    rate = eta / W
    total = 0.0
    wsum = 0.0
    for k in range(K):
        if not b[k]:
            continue
        if eta <= 0.0:
            wsum += float(weights[k])
            continue
        chans = [n for n in range(N) if rho[k, n]]
        chans.sort(key=lambda n: a[k, n])
        a_sel = [float(a[k, n]) for n in chans]
        m, level, pk = _fill(a_sel, rate)
        if m == 0:
            return rho, p, math.inf, k
        for i in range(m):
            p[k, chans[i]] = _share(a_sel[i], level, m, rate)
        total += pk
        wsum += float(weights[k])
    return rho, p, V * total + wsum, -1


def _candidate_objective(rows_g, rows_a, orders, b_bits, K, N, weights, V, rate, refill_all):
    """Objective of one sampling vector without building the full decision."""
    sampling = [k for k in range(K) if b_bits[k]]
    if not sampling:
        return 0.0
    refill = range(K) if refill_all else sampling
    ptr = [0] * K
    taken = [False] * N
    active = set(sampling)
    assigned = [[] for _ in range(K)]
    for _ in range(N):
        best_k = -1
        best_n = -1
        best_g = -1.0
        for k in range(K):
            if k not in active:
                continue
            while taken[orders[k][ptr[k]]]:
                ptr[k] += 1
            n = orders[k][ptr[k]]
            if rows_g[k][n] > best_g:
                best_g = rows_g[k][n]
                best_k = k
                best_n = n
        assigned[best_k].append(rows_a[best_k][best_n])
        taken[best_n] = True
        active.discard(best_k)
        if not active:
            active = set(refill)
    total = 0.0
    wsum = 0.0
    for k in sampling:
        m, _, pk = _fill(assigned[k], rate)
        if m == 0:
            return math.inf
        total += pk
        wsum += float(weights[k])
    return V * total + wsum


def solve_suboptimal(gains, weights, V, W, N0, eta, refill_all=False):
    """Enumerate every sampling vector with at most N ones; keep the best.

    Candidates are visited in binary-counter order of ``b`` (bit k is sensor
    k) and only a strictly smaller objective replaces the incumbent, so the
    all-zero vector wins every tie.
    """
    g = np.asarray(gains, dtype=np.float64)
    K, N = g.shape
    if eta <= 0.0:
        eta = 0.0
    a = _noise_to_gain(g, W, N0)
    rows_a = a.tolist()
    rows_g = g.tolist()
    orders = [_channel_order(rows_g[k]) for k in range(K)]
    rate = eta / W
    best_obj = 0.0
    best_mask = 0
    evaluations = 0
    infeasible = 0
    for mask in range(1 << K):
        bits = [(mask >> k) & 1 for k in range(K)]
        if sum(bits) > N:
            continue
        evaluations += 1
        if eta == 0.0:
            obj = sum(float(weights[k]) for k in range(K) if bits[k])
        else:
            obj = _candidate_objective(rows_g, rows_a, orders, bits, K, N, weights, V, rate, refill_all)
        if math.isinf(obj):
            infeasible += 1
            continue
        if obj < best_obj:
            best_obj = obj
            best_mask = mask
    b = np.array([(best_mask >> k) & 1 for k in range(K)], dtype=np.int8)
    rho, p, obj, _ = evaluate(g, b, weights, V, W, N0, eta, refill_all)
    return b, rho, p, obj, evaluations, infeasible


def solve_exhaustive(gains, weights, V, W, N0, eta):
    """Search every sampling vector and every channel-to-sampler assignment.

    Each channel goes to one sampling sensor or to nobody. Assignments are
    visited as a mixed-radix counter with channel 0 as the fastest digit.
    Per-sensor minimum powers are cached by channel subset.
    """
    g = np.asarray(gains, dtype=np.float64)
    K, N = g.shape
    a = _noise_to_gain(g, W, N0)
    rate = max(eta, 0.0) / W
    cache = {}

    def power(k, chan_mask):
        key = (k, chan_mask)
        if key not in cache:
            if chan_mask == 0:
                cache[key] = math.inf
            elif rate == 0.0:
                cache[key] = 0.0
            else:
                a_sel = sorted(float(a[k, n]) for n in range(N) if (chan_mask >> n) & 1)
                cache[key] = _fill(a_sel, rate)[2]
        return cache[key]

    best_obj = 0.0
    best_b = 0
    best_digits = (0,) * N
    best_samplers = []
    assignments = 0
    infeasible = 0
    for mask in range(1 << K):
        samplers = [k for k in range(K) if (mask >> k) & 1]
        j = len(samplers)
        if j > N:
            continue
        wsum = 0.0
        for k in samplers:
            wsum += float(weights[k])
        for rev in itertools.product(range(j + 1), repeat=N):
            digits = rev[::-1]
            assignments += 1
            if j == 0:
                obj = 0.0
            else:
                masks = [0] * j
                for n, d in enumerate(digits):
                    if d:
                        masks[d - 1] |= 1 << n
                total = 0.0
                for i in range(j):
                    total += power(samplers[i], masks[i])
                if math.isinf(total):
                    infeasible += 1
                    continue
                obj = V * total + wsum
            if obj < best_obj:
                best_obj = obj
                best_b = mask
                best_digits = digits
                best_samplers = samplers
    b = np.array([(best_b >> k) & 1 for k in range(K)], dtype=np.int8)
    rho = np.zeros((K, N), dtype=np.int8)
    p = np.zeros((K, N))
    for n, d in enumerate(best_digits):
        if d:
            rho[best_samplers[d - 1], n] = 1
    total = 0.0
    for k in best_samplers:
        if rate == 0.0:
            continue
        chans = sorted((n for n in range(N) if rho[k, n]), key=lambda n: a[k, n])
        a_sel = [float(a[k, n]) for n in chans]
        m, level, pk = _fill(a_sel, rate)
        for i in range(m):
            p[k, chans[i]] = _share(a_sel[i], level, m, rate)
        total += pk
    obj = V * total + sum(float(weights[k]) for k in best_samplers) if best_samplers else 0.0
    return b, rho, p, obj, assignments, infeasible
