"""Hot numerical kernels, in numba and pure-numpy flavors.

Selected once at import via loglab.backend.  The two flavors agree to
floating-point roundoff (summation order differs), and within a single
backend `h4_shift_mean(v, 0)` reproduces `h4_mean(v)` bit for bit, which
the zero-drift consistency tests rely on.
"""

import numpy as np

from .backend import USE_NUMBA

if USE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _h4_mean_nb(v, sigma):
        acc = 0.0
        s3 = 3.0 * sigma * sigma
        s6 = 6.0 * sigma
        for i in range(v.size):
            x2 = v[i] * v[i]
            acc += x2 * x2 - s6 * x2 + s3
        return acc / v.size

    @njit(cache=True, nogil=True)
    def _h4_shift_mean_nb(v, t, sigma):
        acc = 0.0
        s3 = 3.0 * sigma * sigma
        s6 = 6.0 * sigma
        for i in range(v.size):
            x = v[i] + t[i]
            x2 = x * x
            acc += x2 * x2 - s6 * x2 + s3
        return acc / v.size

    @njit(cache=True, nogil=True)
    def _quartic_sum_nb(modes, weights, lookup, nmax, d):
        m = modes.shape[0]
        side = 2 * nmax + 1
        total = 0.0
        for i in range(m):
            wi = weights[i]
            for j in range(m):
                wij = wi * weights[j]
                for k in range(m):
                    idx = 0
                    ok = True
                    for a in range(d):
                        c = -(modes[i, a] + modes[j, a] + modes[k, a])
                        if c < -nmax or c > nmax:
                            ok = False
                            break
                        idx = idx * side + (c + nmax)
                    if ok:
                        l4 = lookup[idx]
                        if l4 >= 0:
                            total += wij * weights[k] * weights[l4]
        return total


def _h4_mean_np(v, sigma):
    s3 = 3.0 * sigma * sigma
    s6 = 6.0 * sigma
    x2 = v * v
    return float(np.sum(x2 * x2 - s6 * x2 + s3) / v.size)


def _h4_shift_mean_np(v, t, sigma):
    return _h4_mean_np(v + t, sigma)


def _quartic_sum_np(modes, weights, lookup, nmax, d):
    # vectorized over (j, k) for each i; the -1 sentinel marks sums that
    # leave the lattice
    m = modes.shape[0]
    side = 2 * nmax + 1
    total = 0.0
    wjk = weights[:, None] * weights[None, :]
    for i in range(m):
        c = -(modes[i] + modes[:, None, :] + modes[None, :, :])
        inside = np.all((c >= -nmax) & (c <= nmax), axis=-1)
        idx = np.zeros((m, m), dtype=np.int64)
        for a in range(d):
            idx = idx * side + (np.clip(c[..., a], -nmax, nmax) + nmax)
        l4 = np.where(inside, lookup[idx], -1)
        good = l4 >= 0
        w4 = np.where(good, weights[np.maximum(l4, 0)], 0.0)
        total += weights[i] * float(np.sum(wjk * w4))
    return total


def h4_mean(values, sigma):
    """Mean of H_4(values; sigma) over a flat float64 array."""
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if USE_NUMBA:
        return float(_h4_mean_nb(v, float(sigma)))
    return _h4_mean_np(v, float(sigma))


def h4_shift_mean(values, shift, sigma):
    """Mean of H_4(values + shift; sigma), fused to avoid a temporary."""
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    t = np.ascontiguousarray(shift, dtype=np.float64).ravel()
    if v.size != t.size:
        raise ValueError("values and shift must have matching sizes")
    if USE_NUMBA:
        return float(_h4_shift_mean_nb(v, t, float(sigma)))
    return _h4_shift_mean_np(v, t, float(sigma))


def quartic_convolution_sum(modes, weights, lookup, nmax, d):
    """Sum of w(n1) w(n2) w(n3) w(n4) over lattice modes with n1+n2+n3+n4 = 0.

    `lookup` maps the flattened offset of a mode to its row in `modes`
    (-1 outside the lattice ball).  Cost grows like len(modes)**3; callers
    enforce their own budget before getting here.
    """
    modes = np.ascontiguousarray(modes, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    lookup = np.ascontiguousarray(lookup, dtype=np.int64)
    if USE_NUMBA:
        return float(_quartic_sum_nb(modes, weights, lookup, nmax, d))
    return float(_quartic_sum_np(modes, weights, lookup, nmax, d))
