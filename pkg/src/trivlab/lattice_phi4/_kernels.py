"""Compiled inner loops: Metropolis/Wolff sweeps and exact enumeration."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _local_field(s, nbr, keff, x):
    h = 0.0
    for k in range(nbr.shape[1]):
        h += keff[k] * s[nbr[x, k]]
    return h


@numba.njit(cache=True)
def _measure(s, nbr, keff, cos_t, sin_t):
    n = s.shape[0]
    m = 0.0
    e = 0.0
    for x in range(n):
        m += s[x]
        e -= 0.5 * s[x] * _local_field(s, nbr, keff, x)
    dim = cos_t.shape[1]
    mk2 = 0.0
    for mu in range(dim):
        re = 0.0
        im = 0.0
        for x in range(n):
            re += s[x] * cos_t[x, mu]
            im += s[x] * sin_t[x, mu]
        mk2 += re * re + im * im
    return m, e, mk2 / dim


@numba.njit(cache=True)
def _metropolis_sweep(s, nbr, keff, kappa):
    for x in range(s.shape[0]):
        de = 2.0 * s[x] * _local_field(s, nbr, keff, x)
        if de <= 0.0 or np.random.random() < math.exp(-kappa * de):
            s[x] = -s[x]


@numba.njit(cache=True)
def _wolff_update(s, nbr, keff, is_nn, kappa, in_cluster, stack, members):
    """Single-cluster flip grown on ferromagnetic nearest-neighbour classes.

    The remaining couplings enter through a Metropolis acceptance of the
    whole cluster flip, which keeps detailed balance for the full energy.
    Returns 1 if the flip was accepted.
    """
    n = s.shape[0]
    nk = nbr.shape[1]
    seed = np.random.randint(0, n)
    s0 = s[seed]
    in_cluster[seed] = True
    stack[0] = seed
    top = 1
    size = 1
    members[0] = seed
    while top > 0:
        top -= 1
        x = stack[top]
        for k in range(nk):
            if not is_nn[k] or keff[k] <= 0.0:
                continue
            y = nbr[x, k]
            if in_cluster[y] or s[y] != s0:
                continue
            if np.random.random() < 1.0 - math.exp(-2.0 * kappa * keff[k]):
                in_cluster[y] = True
                stack[top] = y
                top += 1
                members[size] = y
                size += 1
    de = 0.0
    for i in range(size):
        x = members[i]
        for k in range(nk):
            if is_nn[k] and keff[k] > 0.0:
                continue
            y = nbr[x, k]
            if not in_cluster[y]:
                de += 2.0 * keff[k] * s[x] * s[y]
    accepted = 0
    if de <= 0.0 or np.random.random() < math.exp(-kappa * de):
        accepted = 1
        for i in range(size):
            s[members[i]] = -s[members[i]]
    for i in range(size):
        in_cluster[members[i]] = False
    return accepted


@numba.njit(cache=True)
def simulate(nbr, keff, is_nn, kappa, n_therm, n_sweeps, n_cluster, seed, cos_t, sin_t):
    """Hot start, ``n_therm`` discarded sweeps, then one measurement per sweep."""
    np.random.seed(seed)
    n = nbr.shape[0]
    s = np.empty(n, dtype=np.float64)
    for x in range(n):
        s[x] = 1.0 if np.random.random() < 0.5 else -1.0
    in_cluster = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    m_out = np.empty(n_sweeps)
    e_out = np.empty(n_sweeps)
    mk_out = np.empty(n_sweeps)
    for it in range(n_therm + n_sweeps):
        _metropolis_sweep(s, nbr, keff, kappa)
        for _ in range(n_cluster):
            _wolff_update(s, nbr, keff, is_nn, kappa, in_cluster, stack, members)
        if it >= n_therm:
            m, e, mk2 = _measure(s, nbr, keff, cos_t, sin_t)
            m_out[it - n_therm] = m
            e_out[it - n_therm] = e
            mk_out[it - n_therm] = mk2
    return m_out, e_out, mk_out


@numba.njit(cache=True)
def _config(state, n, sign, s):
    # site 0 carries ``sign``; sites 1..n-1 read from the bits of ``state``
    s[0] = sign
    for x in range(1, n):
        s[x] = sign if (state >> (x - 1)) & 1 == 0 else -sign


@numba.njit(cache=True)
def enumerate_sums(nbr, keff, kappa, cos_t, sin_t):
    """Exact Boltzmann sums over all 2^n configurations.

    Configurations are visited in mirror pairs (s, -s), each energy
    computed from its own spins.  Returns Z-normalized
    (<M>, <M^2>, <M^4>, <E>, <|M_k|^2>).
    """
    n = nbr.shape[0]
    half = 1 << (n - 1)
    s = np.empty(n)
    lw_max = -np.inf
    for state in range(half):
        for sign in (1.0, -1.0):
            _config(state, n, sign, s)
            _, e, _ = _measure(s, nbr, keff, cos_t, sin_t)
            if -kappa * e > lw_max:
                lw_max = -kappa * e
    z = 0.0
    sm_p = 0.0
    sm_m = 0.0
    s2 = 0.0
    s4 = 0.0
    se = 0.0
    sk = 0.0
    for state in range(half):
        for sign in (1.0, -1.0):
            _config(state, n, sign, s)
            m, e, mk2 = _measure(s, nbr, keff, cos_t, sin_t)
            w = math.exp(-kappa * e - lw_max)
            z += w
            if sign > 0:
                sm_p += w * m
            else:
                sm_m += w * m
            m2 = m * m
            s2 += w * m2
            s4 += w * m2 * m2
            se += w * e
            sk += w * mk2
    return (sm_p + sm_m) / z, s2 / z, s4 / z, se / z, sk / z
