"""Numeric kernels with two interchangeable implementations.

The hot inner loops of the package live here: the zeta/Moebius transforms
over the subset lattice (mass <-> commonality <-> implicability, O(N*2^N))
and the log-space dynamic-programming recursions of the probabilistic
decoders.  Each kernel exists twice, as a numba ``@njit`` function and as a
vectorized pure-numpy fallback.

The active implementation is chosen once at import time from the
``EVHMM_BACKEND`` environment variable:

    EVHMM_BACKEND=numba   force numba (ImportError if numba is missing)
    EVHMM_BACKEND=numpy   force the pure-numpy fallback
    unset                 numba when importable, numpy otherwise

``BACKEND`` names the active choice; ``get_kernels()`` returns either
implementation set so the two can be compared (see benchmarks/).
"""

import os

import numpy as np

NEG_INF = -np.inf


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _np_zeta_superset(v, n):
    """q[A] = sum of v[B] over B >= A (superset sum)."""
    out = v.copy()
    for i in range(n):
        w = out.reshape(-1, 2, 1 << i)
        w[:, 0, :] += w[:, 1, :]
    return out


def _np_mobius_superset(q, n):
    """Inverse of the superset zeta transform."""
    out = q.copy()
    for i in range(n):
        w = out.reshape(-1, 2, 1 << i)
        w[:, 0, :] -= w[:, 1, :]
    return out


def _np_zeta_subset(v, n):
    """b[A] = sum of v[B] over B <= A (subset sum)."""
    out = v.copy()
    for i in range(n):
        w = out.reshape(-1, 2, 1 << i)
        w[:, 1, :] += w[:, 0, :]
    return out


def _np_mobius_subset(b, n):
    """Inverse of the subset zeta transform."""
    out = b.copy()
    for i in range(n):
        w = out.reshape(-1, 2, 1 << i)
        w[:, 1, :] -= w[:, 0, :]
    return out


def _np_pignistic_num(m, popcount, n):
    """Per singleton s: sum of m[A]/|A| over subsets A containing s.

    Equals (1 - m(empty)) * BetP(s); no conflict normalization here.
    """
    idx = np.arange(m.size)
    share = np.zeros_like(m)
    share[1:] = m[1:] / popcount[1:]
    num = np.empty(n)
    for i in range(n):
        num[i] = share[(idx >> i) & 1 == 1].sum()
    return num


def _np_lse(a, axis):
    mx = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis)) + np.squeeze(safe, axis)
    return np.where(np.isfinite(np.squeeze(mx, axis)), out, NEG_INF)


def _np_forward1(log_pi, log_a, log_b):
    T, n = log_b.shape
    alpha = np.empty((T, n))
    alpha[0] = log_pi + log_b[0]
    for t in range(1, T):
        alpha[t] = _np_lse(alpha[t - 1][:, None] + log_a, 0) + log_b[t]
    loglik = _np_lse(alpha[T - 1], 0)
    return alpha, float(loglik)


def _np_viterbi1(log_pi, log_a, log_b):
    T, n = log_b.shape
    delta = np.empty((T, n))
    psi = np.zeros((T, n), np.int32)
    delta[0] = log_pi + log_b[0]
    for t in range(1, T):
        scores = delta[t - 1][:, None] + log_a
        psi[t] = np.argmax(scores, axis=0)  # first max: lowest index wins ties
        delta[t] = scores[psi[t], np.arange(n)] + log_b[t]
    return delta, psi


def _np_forward2(log_pi, log_a1, log_b1, log_a2, log_b2):
    T, n = log_b1.shape
    alpha = np.full((T, n, n), NEG_INF)
    first = log_pi + log_b1[0]
    alpha[0, np.arange(n), np.arange(n)] = first  # t=1 singles on the diagonal
    alpha[1] = first[:, None] + log_a1 + log_b1[1][None, :]
    for t in range(2, T):
        scores = alpha[t - 1][:, :, None] + log_a2
        alpha[t] = _np_lse(scores, 0) + log_b2[t]
    loglik = _np_lse(alpha[T - 1].reshape(-1), 0)
    return alpha, float(loglik)


def _np_viterbi2(log_pi, log_a1, log_b1, log_a2, log_b2):
    T, n = log_b1.shape
    delta = np.full((T, n, n), NEG_INF)
    psi = np.zeros((T, n, n), np.int32)
    first = log_pi + log_b1[0]
    delta[0, np.arange(n), np.arange(n)] = first
    delta[1] = first[:, None] + log_a1 + log_b1[1][None, :]
    for t in range(2, T):
        scores = delta[t - 1][:, :, None] + log_a2
        psi[t] = np.argmax(scores, axis=0)
        jj, kk = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        delta[t] = scores[psi[t], jj, kk] + log_b2[t]
    return delta, psi


def _numpy_kernels():
    return {
        "zeta_superset": _np_zeta_superset,
        "mobius_superset": _np_mobius_superset,
        "zeta_subset": _np_zeta_subset,
        "mobius_subset": _np_mobius_subset,
        "pignistic_num": _np_pignistic_num,
        "forward1": _np_forward1,
        "viterbi1": _np_viterbi1,
        "forward2": _np_forward2,
        "viterbi2": _np_viterbi2,
    }


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _numba_kernels():
    import math

    from numba import njit

    @njit(cache=True)
    def zeta_superset(v, n):
        out = v.copy()
        for i in range(n):
            bit = 1 << i
            for a in range(out.size):
                if a & bit == 0:
                    out[a] += out[a | bit]
        return out

    @njit(cache=True)
    def mobius_superset(q, n):
        out = q.copy()
        for i in range(n):
            bit = 1 << i
            for a in range(out.size):
                if a & bit == 0:
                    out[a] -= out[a | bit]
        return out

    @njit(cache=True)
    def zeta_subset(v, n):
        out = v.copy()
        for i in range(n):
            bit = 1 << i
            for a in range(out.size):
                if a & bit:
                    out[a] += out[a ^ bit]
        return out

    @njit(cache=True)
    def mobius_subset(b, n):
        out = b.copy()
        for i in range(n):
            bit = 1 << i
            for a in range(out.size):
                if a & bit:
                    out[a] -= out[a ^ bit]
        return out

    @njit(cache=True)
    def pignistic_num(m, popcount, n):
        num = np.zeros(n)
        for a in range(1, m.size):
            if m[a] != 0.0:
                share = m[a] / popcount[a]
                rest = a
                while rest:
                    i = 0
                    low = rest & -rest
                    while (1 << i) != low:
                        i += 1
                    num[i] += share
                    rest ^= low
        return num

    @njit(cache=True)
    def _lse_vec(v):
        mx = NEG_INF
        for x in v:
            if x > mx:
                mx = x
        if mx == NEG_INF:
            return NEG_INF
        s = 0.0
        for x in v:
            s += math.exp(x - mx)
        return mx + math.log(s)

    @njit(cache=True)
    def forward1(log_pi, log_a, log_b):
        T, n = log_b.shape
        alpha = np.empty((T, n))
        for j in range(n):
            alpha[0, j] = log_pi[j] + log_b[0, j]
        work = np.empty(n)
        for t in range(1, T):
            for j in range(n):
                for i in range(n):
                    work[i] = alpha[t - 1, i] + log_a[i, j]
                alpha[t, j] = _lse_vec(work) + log_b[t, j]
        return alpha, _lse_vec(alpha[T - 1])

    @njit(cache=True)
    def viterbi1(log_pi, log_a, log_b):
        T, n = log_b.shape
        delta = np.empty((T, n))
        psi = np.zeros((T, n), np.int32)
        for j in range(n):
            delta[0, j] = log_pi[j] + log_b[0, j]
        for t in range(1, T):
            for j in range(n):
                best = NEG_INF
                arg = 0
                for i in range(n):
                    v = delta[t - 1, i] + log_a[i, j]
                    if v > best:
                        best = v
                        arg = i
                delta[t, j] = best + log_b[t, j]
                psi[t, j] = arg
        return delta, psi

    @njit(cache=True)
    def forward2(log_pi, log_a1, log_b1, log_a2, log_b2):
        T, n = log_b1.shape
        alpha = np.full((T, n, n), NEG_INF)
        for j in range(n):
            alpha[0, j, j] = log_pi[j] + log_b1[0, j]
        for j in range(n):
            for k in range(n):
                alpha[1, j, k] = alpha[0, j, j] + log_a1[j, k] + log_b1[1, k]
        work = np.empty(n)
        for t in range(2, T):
            for j in range(n):
                for k in range(n):
                    for i in range(n):
                        work[i] = alpha[t - 1, i, j] + log_a2[i, j, k]
                    alpha[t, j, k] = _lse_vec(work) + log_b2[t, j, k]
        return alpha, _lse_vec(alpha[T - 1].copy().reshape(-1))

    @njit(cache=True)
    def viterbi2(log_pi, log_a1, log_b1, log_a2, log_b2):
        T, n = log_b1.shape
        delta = np.full((T, n, n), NEG_INF)
        psi = np.zeros((T, n, n), np.int32)
        for j in range(n):
            delta[0, j, j] = log_pi[j] + log_b1[0, j]
        for j in range(n):
            for k in range(n):
                delta[1, j, k] = delta[0, j, j] + log_a1[j, k] + log_b1[1, k]
        for t in range(2, T):
            for j in range(n):
                for k in range(n):
                    best = NEG_INF
                    arg = 0
                    for i in range(n):
                        v = delta[t - 1, i, j] + log_a2[i, j, k]
                        if v > best:
                            best = v
                            arg = i
                    delta[t, j, k] = best + log_b2[t, j, k]
                    psi[t, j, k] = arg
        return delta, psi

    return {
        "zeta_superset": zeta_superset,
        "mobius_superset": mobius_superset,
        "zeta_subset": zeta_subset,
        "mobius_subset": mobius_subset,
        "pignistic_num": pignistic_num,
        "forward1": forward1,
        "viterbi1": viterbi1,
        "forward2": forward2,
        "viterbi2": viterbi2,
    }


def get_kernels(backend):
    """Return the named kernel set ('numba' or 'numpy')."""
    if backend == "numpy":
        return _numpy_kernels()
    if backend == "numba":
        return _numba_kernels()
    raise ValueError(f"unknown backend {backend!r}")


_choice = os.environ.get("EVHMM_BACKEND", "").strip().lower()
if _choice == "numpy":
    BACKEND = "numpy"
    _active = _numpy_kernels()
elif _choice == "numba":
    BACKEND = "numba"
    _active = _numba_kernels()
else:
    try:
        _active = _numba_kernels()
        BACKEND = "numba"
    except ImportError:
        _active = _numpy_kernels()
        BACKEND = "numpy"

zeta_superset = _active["zeta_superset"]
mobius_superset = _active["mobius_superset"]
zeta_subset = _active["zeta_subset"]
mobius_subset = _active["mobius_subset"]
pignistic_num = _active["pignistic_num"]
forward1 = _active["forward1"]
viterbi1 = _active["viterbi1"]
forward2 = _active["forward2"]
viterbi2 = _active["viterbi2"]


def lse(v):
    """Log-sum-exp of a 1-D vector (python-side convenience)."""
    return float(_np_lse(np.asarray(v, dtype=np.float64), 0))
