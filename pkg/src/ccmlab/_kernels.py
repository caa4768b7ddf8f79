"""Compiled inner loops shared by the decoders and the Monte Carlo engine."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def walk_trellis(next_state, bits, initial_state):
    z = np.empty(bits.size, dtype=np.int64)
    k = initial_state
    for n in range(bits.size):
        k = next_state[k, bits[n]]
        z[n] = k
    return z


@njit(cache=True, nogil=True)
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True, nogil=True)
def bcjr_log(next_state, expected, r, sigma2, n_tail, prior):
    """Log-domain forward-backward; returns log P(b=1|r) - log P(b=0|r).

    ``prior`` is the initial-state distribution.
    """
    n_states = next_state.shape[0]
    n = r.size
    inv = 0.5 / sigma2
    la = np.empty((n + 1, n_states))
    for s in range(n_states):
        la[0, s] = math.log(prior[s]) if prior[s] > 0 else -np.inf
    metric = np.empty((n, n_states, 2))
    for t in range(n):
        nb = 1 if t >= n - n_tail else 2
        for s in range(n_states):
            for b in range(2):
                if b < nb:
                    d = r[t] - expected[s, b]
                    metric[t, s, b] = -d * d * inv
                else:
                    metric[t, s, b] = -np.inf
        for s in range(n_states):
            la[t + 1, s] = -np.inf
        for s in range(n_states):
            for b in range(nb):
                ns = next_state[s, b]
                la[t + 1, ns] = _logaddexp(la[t + 1, ns], la[t, s] + metric[t, s, b])
        mx = -np.inf
        for s in range(n_states):
            mx = max(mx, la[t + 1, s])
        for s in range(n_states):
            la[t + 1, s] -= mx
    lb = np.zeros(n_states)
    tmp = np.empty(n_states)
    llr = np.empty(n)
    for t in range(n - 1, -1, -1):
        num = -np.inf
        den = -np.inf
        for s in range(n_states):
            v0 = la[t, s] + metric[t, s, 0] + lb[next_state[s, 0]]
            v1 = la[t, s] + metric[t, s, 1] + lb[next_state[s, 1]]
            den = _logaddexp(den, v0)
            num = _logaddexp(num, v1)
            tmp[s] = _logaddexp(metric[t, s, 0] + lb[next_state[s, 0]],
                                metric[t, s, 1] + lb[next_state[s, 1]])
        llr[t] = num - den
        mx = -np.inf
        for s in range(n_states):
            mx = max(mx, tmp[s])
        for s in range(n_states):
            lb[s] = tmp[s] - mx
    return llr


@njit(cache=True, nogil=True)
def bcjr_scaled(next_state, expected, r, sigma2, n_tail, prior):
    """Probability-domain forward-backward with per-stage normalization.

    Same posteriors as ``bcjr_log``; returns an all-NaN vector when a stage
    underflows so the caller can fall back to the log-domain version.
    """
    n_states = next_state.shape[0]
    n = r.size
    inv = 0.5 / sigma2
    alpha = np.empty((n + 1, n_states))
    alpha[0, :] = prior
    gamma = np.empty((n, n_states, 2))
    fail = np.full(n, np.nan)
    for t in range(n):
        nb = 1 if t >= n - n_tail else 2
        best = np.inf
        for s in range(n_states):
            for b in range(nb):
                d = r[t] - expected[s, b]
                e = d * d * inv
                gamma[t, s, b] = e
                if e < best:
                    best = e
        for s in range(n_states):
            gamma[t, s, 0] = math.exp(best - gamma[t, s, 0])
            if nb == 2:
                gamma[t, s, 1] = math.exp(best - gamma[t, s, 1])
            else:
                gamma[t, s, 1] = 0.0
        for s in range(n_states):
            alpha[t + 1, s] = 0.0
        for s in range(n_states):
            a = alpha[t, s]
            alpha[t + 1, next_state[s, 0]] += a * gamma[t, s, 0]
            alpha[t + 1, next_state[s, 1]] += a * gamma[t, s, 1]
        tot = 0.0
        for s in range(n_states):
            tot += alpha[t + 1, s]
        if not tot > 1e-290:
            return fail
        for s in range(n_states):
            alpha[t + 1, s] /= tot
    beta = np.ones(n_states)
    tmp = np.empty(n_states)
    llr = np.empty(n)
    for t in range(n - 1, -1, -1):
        num = 0.0
        den = 0.0
        for s in range(n_states):
            g0 = gamma[t, s, 0] * beta[next_state[s, 0]]
            g1 = gamma[t, s, 1] * beta[next_state[s, 1]]
            den += alpha[t, s] * g0
            num += alpha[t, s] * g1
            tmp[s] = g0 + g1
        if not (num + den) > 1e-290:
            return fail
        if num == 0.0:
            llr[t] = -np.inf
        elif den == 0.0:
            llr[t] = np.inf
        else:
            llr[t] = math.log(num) - math.log(den)
        tot = 0.0
        for s in range(n_states):
            tot += tmp[s]
        if not tot > 1e-290:
            return fail
        for s in range(n_states):
            beta[s] = tmp[s] / tot
    return llr


@njit(cache=True, nogil=True)
def viterbi_pam(next_state, branch_symbol, levels, r, n_tail):
    """Soft Viterbi over a rate-1 trellis whose branches carry one PAM symbol.

    ``branch_symbol[s, b]`` indexes ``levels``. Starts and (after ``n_tail``
    zero inputs) ends in state 0; ties go to the smallest predecessor state.
    """
    n_states = next_state.shape[0]
    n = r.size
    pm = np.full(n_states, np.inf)
    pm[0] = 0.0
    new = np.empty(n_states)
    prev = np.empty((n, n_states), dtype=np.int64)
    prev_bit = np.empty((n, n_states), dtype=np.int8)
    n_levels = levels.size
    bm = np.empty(n_levels)
    for t in range(n):
        for j in range(n_levels):
            d = r[t] - levels[j]
            bm[j] = d * d
        for s in range(n_states):
            new[s] = np.inf
            prev[t, s] = -1
        nb = 1 if t >= n - n_tail else 2
        for s in range(n_states):
            if pm[s] == np.inf:
                continue
            for b in range(nb):
                ns = next_state[s, b]
                v = pm[s] + bm[branch_symbol[s, b]]
                if v < new[ns]:
                    new[ns] = v
                    prev[t, ns] = s
                    prev_bit[t, ns] = b
        for s in range(n_states):
            pm[s] = new[s]
    out = np.empty(n, dtype=np.int64)
    s = 0
    for t in range(n - 1, -1, -1):
        out[t] = prev_bit[t, s]
        s = prev[t, s]
    return out


@njit(cache=True, nogil=True)
def conv_encode_bits(g1, g2, k, bits):
    """Feed-forward rate-1/2 encoder; taps are integers, MSB = current input."""
    n = bits.size
    out = np.empty(2 * n, dtype=np.int64)
    reg = 0
    mask = (1 << k) - 1
    for t in range(n):
        reg = ((reg >> 1) | (bits[t] << (k - 1))) & mask
        a = reg & g1
        c = reg & g2
        p1 = 0
        p2 = 0
        while a:
            p1 ^= a & 1
            a >>= 1
        while c:
            p2 ^= c & 1
            c >>= 1
        out[2 * t] = p1
        out[2 * t + 1] = p2
    return out
