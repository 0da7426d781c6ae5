"""Compiled kernels: Dormand-Prince 5(4) for mass-action ODEs and a direct
Gillespie loop.

Networks are passed as flat arrays: ``react[c] = (i, j)`` with ``-1`` for
an empty slot, ``prod[c]`` likewise (up to ``MAX_PRODUCTS`` entries), and
``rate[c]`` the channel constant.
"""
import numpy as np
from numba import njit

MAX_PRODUCTS = 4

OK = 0
UNDERFLOW = 1
TOO_MANY_STEPS = 2
NEGATIVE = 3

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40


@njit(cache=True)
def rhs(y, react, prod, rate, out):
    out[:] = 0.0
    for c in range(rate.shape[0]):
        v = rate[c]
        i = react[c, 0]
        j = react[c, 1]
        if i >= 0:
            v *= y[i]
        if j >= 0:
            v *= y[j]
        if v == 0.0:
            continue
        if i >= 0:
            out[i] -= v
        if j >= 0:
            out[j] -= v
        for m in range(prod.shape[1]):
            p = prod[c, m]
            if p >= 0:
                out[p] += v


@njit(cache=True)
def _err_norm(y, ynew, err, rtol, atol):
    s = 0.0
    n = y.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e = err[i] / sc
        s += e * e
    return np.sqrt(s / max(n, 1))


@njit(cache=True)
def _initial_step(y, f0, t_span, react, prod, rate, rtol, atol):
    n = y.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / max(n, 1))
    d1 = np.sqrt(d1 / max(n, 1))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_span)
    y1 = y + h0 * f0
    f1 = np.empty(n)
    rhs(y1, react, prod, rate, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / max(n, 1)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_span)


@njit(cache=True)
def dopri_segment(y0, t0, out_times, react, prod, rate, rtol, atol, h_init, max_steps):
    """Integrate from ``t0`` through the sorted ``out_times``.

    Returns (Y, y_end, status, h_last, n_steps) with ``Y[k]`` the state at
    ``out_times[k]`` clipped at zero and ``y_end`` the unclipped final
    state.  Steps are shortened to land on every output time.
    """
    n = y0.shape[0]
    m = out_times.shape[0]
    Y = np.zeros((m, n))
    y = y0.copy()
    t = t0
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    yt = np.empty(n)
    ynew = np.empty(n)
    err = np.empty(n)
    if m == 0:
        return Y, y, OK, h_init, 0
    rhs(y, react, prod, rate, k1)
    h = h_init
    if h <= 0.0:
        h = _initial_step(y, k1, out_times[-1] - t0, react, prod, rate, rtol, atol)
    steps = 0
    idx = 0
    while idx < m and out_times[idx] <= t:
        for i in range(n):
            Y[idx, i] = y[i]
        idx += 1
    while idx < m:
        target = out_times[idx]
        if steps >= max_steps:
            return Y, y, TOO_MANY_STEPS, h, steps
        hit = False
        hs = h
        if t + hs >= target:
            hs = target - t
            hit = True
        if hs < 1e-14 * max(abs(t), 1.0):
            return Y, y, UNDERFLOW, h, steps
        for i in range(n):
            yt[i] = y[i] + hs * A21 * k1[i]
        rhs(yt, react, prod, rate, k2)
        for i in range(n):
            yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        rhs(yt, react, prod, rate, k3)
        for i in range(n):
            yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(yt, react, prod, rate, k4)
        for i in range(n):
            yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(yt, react, prod, rate, k5)
        for i in range(n):
            yt[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                 + A64 * k4[i] + A65 * k5[i])
        rhs(yt, react, prod, rate, k6)
        for i in range(n):
            ynew[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
        rhs(ynew, react, prod, rate, k7)
        for i in range(n):
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                           + E6 * k6[i] + E7 * k7[i])
        en = _err_norm(y, ynew, err, rtol, atol)
        steps += 1
        negative = False
        for i in range(n):
            if ynew[i] < -atol:
                negative = True
                break
        if en <= 1.0 and not negative:
            # the state keeps tiny negatives so linear invariants stay exact;
            # only reported snapshots are clipped
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
            t = target if hit else t + hs
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            if not hit:
                h = hs * fac
            else:
                h = max(h, hs * fac)
            while idx < m and out_times[idx] <= t:
                for i in range(n):
                    Y[idx, i] = y[i] if y[i] > 0.0 else 0.0
                idx += 1
        else:
            if negative and en <= 1.0:
                h = hs * 0.5
            else:
                h = hs * max(0.2, 0.9 * en ** -0.2)
    return Y, y, OK, h, steps


@njit(cache=True)
def ssa_run(x, t, t_end, react, prod, rate, sample_times, out, next_sample, u):
    """Direct-method Gillespie loop consuming uniform draws from ``u``.

    Fills ``out`` rows for sample times passed.  Returns
    ``(t, next_sample, used)``; ``used < len(u)`` means ``t_end`` was
    reached (or the system is dead).
    """
    nc = rate.shape[0]
    a = np.empty(nc)
    used = 0
    m = sample_times.shape[0]
    while True:
        a0 = 0.0
        for c in range(nc):
            v = rate[c]
            i = react[c, 0]
            j = react[c, 1]
            if i >= 0 and j >= 0:
                if i == j:
                    v *= x[i] * (x[i] - 1)
                else:
                    v *= x[i] * x[j]
            elif i >= 0:
                v *= x[i]
            a[c] = v
            a0 += v
        if a0 <= 0.0:
            t_next = np.inf
        else:
            if used + 2 > u.shape[0]:
                return t, next_sample, used
            t_next = t - np.log(u[used]) / a0
        while next_sample < m and sample_times[next_sample] < t_next:
            for i in range(x.shape[0]):
                out[next_sample, i] = x[i]
            next_sample += 1
        if t_next > t_end:
            return t_end, next_sample, u.shape[0] + 1
        r = u[used + 1] * a0
        used += 2
        c = 0
        acc = a[0]
        while acc < r and c < nc - 1:
            c += 1
            acc += a[c]
        i = react[c, 0]
        j = react[c, 1]
        if i >= 0:
            x[i] -= 1
        if j >= 0:
            x[j] -= 1
        for q in range(prod.shape[1]):
            p = prod[c, q]
            if p >= 0:
                x[p] += 1
        t = t_next
