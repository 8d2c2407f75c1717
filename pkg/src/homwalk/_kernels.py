"""Compiled inner loops for long cocycle trajectories.

Every kernel advances one trajectory.  A step multiplies the carried
orthonormal frame by the increment and re-factors it with two-pass modified
Gram-Schmidt, so the triangular factor has a positive diagonal.  The log of
that diagonal, recentred to sum to zero, is the Iwasawa cocycle of the step.
"""

import numba
import numpy as np

REORTH_EVERY = 64


@numba.njit(cache=True)
def _mgs2(m, q, rfull):
    # q, rfull are outputs; rfull receives the full triangular factor.
    d = m.shape[0]
    for a in range(d):
        for b in range(d):
            rfull[a, b] = 0.0
    for j in range(d):
        for a in range(d):
            q[a, j] = m[a, j]
        for _ in range(2):
            for i in range(j):
                c = 0.0
                for a in range(d):
                    c += q[a, i] * q[a, j]
                rfull[i, j] += c
                for a in range(d):
                    q[a, j] -= c * q[a, i]
        nv = 0.0
        for a in range(d):
            nv += q[a, j] * q[a, j]
        nv = np.sqrt(nv)
        rfull[j, j] = nv
        for a in range(d):
            q[a, j] /= nv


@numba.njit(cache=True)
def _matmul_into(g, frame, out):
    d = g.shape[0]
    for a in range(d):
        for b in range(d):
            s = 0.0
            for c in range(d):
                s += g[a, c] * frame[c, b]
            out[a, b] = s


@numba.njit(cache=True)
def _step(g, frame, work, rfull, incr):
    """One cocycle step: frame <- orthogonal factor of g @ frame; incr <- sigma."""
    d = g.shape[0]
    _matmul_into(g, frame, work)
    _mgs2(work, frame, rfull)
    mean = 0.0
    for a in range(d):
        incr[a] = np.log(rfull[a, a])
        mean += incr[a]
    mean /= d
    for a in range(d):
        incr[a] -= mean


@numba.njit(cache=True)
def _reorthogonalize(frame, work, rfull):
    d = frame.shape[0]
    for a in range(d):
        for b in range(d):
            work[a, b] = frame[a, b]
    _mgs2(work, frame, rfull)


@numba.njit(cache=True)
def cocycle_sum(mats, idx, frame0, signs, reorth_every):
    """Total cocycle sigma(b_n...b_1, eta0) and the final frame.

    ``signs`` multiplies each increment (all ones for the genuine cocycle).
    """
    d = frame0.shape[0]
    frame = frame0.copy()
    work = np.empty((d, d))
    rfull = np.empty((d, d))
    incr = np.empty(d)
    total = np.zeros(d)
    comp = np.zeros(d)
    for k in range(idx.shape[0]):
        _step(mats[idx[k]], frame, work, rfull, incr)
        for a in range(d):
            # Kahan summation keeps long sums insensitive to step order.
            y = signs[k] * incr[a] - comp[a]
            t = total[a] + y
            comp[a] = (t - total[a]) - y
            total[a] = t
        if reorth_every > 0 and (k + 1) % reorth_every == 0:
            _reorthogonalize(frame, work, rfull)
    return total, frame


@numba.njit(cache=True)
def cocycle_path(mats, idx, frame0, signs, basis, t0, reorth_every):
    """Projected trajectory t0 + basis @ sigma(b_k...b_1, eta0), k = 0..n."""
    d = frame0.shape[0]
    kdim = basis.shape[0]
    n = idx.shape[0]
    frame = frame0.copy()
    work = np.empty((d, d))
    rfull = np.empty((d, d))
    incr = np.empty(d)
    total = np.zeros(d)
    comp = np.zeros(d)
    out = np.empty((n + 1, kdim))
    for c in range(kdim):
        out[0, c] = t0[c]
    for k in range(n):
        _step(mats[idx[k]], frame, work, rfull, incr)
        for a in range(d):
            y = signs[k] * incr[a] - comp[a]
            t = total[a] + y
            comp[a] = (t - total[a]) - y
            total[a] = t
        for c in range(kdim):
            s = 0.0
            for a in range(d):
                s += basis[c, a] * total[a]
            out[k + 1, c] = t0[c] + s
        if reorth_every > 0 and (k + 1) % reorth_every == 0:
            _reorthogonalize(frame, work, rfull)
    return out


@numba.njit(cache=True)
def iwasawa_path(mats, idx, frame0, reorth_every):
    """Iwasawa factors of p_k @ frame0 for k = 0..n without forming p_k.

    Returns ``sigma`` of shape (n+1, d) and the unipotent factors ``nfac`` of
    shape (n+1, d, d), so that p_k @ frame0 = k_k exp(sigma_k) nfac_k.
    The unipotent factor is updated as nfac <- (a^-1 n' a) nfac, whose
    off-diagonal entries are damped by exp(sigma_j - sigma_i).
    """
    d = frame0.shape[0]
    n = idx.shape[0]
    frame = frame0.copy()
    work = np.empty((d, d))
    rfull = np.empty((d, d))
    conj = np.empty((d, d))
    tmp = np.empty((d, d))
    sigma = np.zeros((n + 1, d))
    nfac = np.zeros((n + 1, d, d))
    for a in range(d):
        nfac[0, a, a] = 1.0
    for k in range(n):
        _matmul_into(mats[idx[k]], frame, work)
        _mgs2(work, frame, rfull)
        logs = np.empty(d)
        mean = 0.0
        for a in range(d):
            logs[a] = np.log(rfull[a, a])
            mean += logs[a]
        mean /= d
        for a in range(d):
            sigma[k + 1, a] = sigma[k, a] + logs[a] - mean
        for i in range(d):
            for j in range(d):
                if j < i:
                    conj[i, j] = 0.0
                elif j == i:
                    conj[i, j] = 1.0
                else:
                    conj[i, j] = rfull[i, j] / rfull[i, i] * np.exp(sigma[k, j] - sigma[k, i])
        _matmul_into(conj, nfac[k], tmp)
        for i in range(d):
            for j in range(d):
                nfac[k + 1, i, j] = tmp[i, j]
        if reorth_every > 0 and (k + 1) % reorth_every == 0:
            _reorthogonalize(frame, work, rfull)
    return sigma, nfac


@numba.njit(cache=True)
def opposition(frame_a, frame_b):
    """min_j |det[first j columns of a, first d-j columns of b]|, in [0, 1]."""
    d = frame_a.shape[0]
    m = np.empty((d, d))
    best = 1.0
    for j in range(1, d):
        for c in range(j):
            for a in range(d):
                m[a, c] = frame_a[a, c]
        for c in range(d - j):
            for a in range(d):
                m[a, j + c] = frame_b[a, c]
        v = abs(np.linalg.det(m))
        if v < best:
            best = v
    return best


@numba.njit(cache=True)
def pair_path(mats, idx, frame_a, frame_b, reorth_every):
    """Opposition of (p_k eta_a, p_k eta_b) for k = 0..n."""
    d = frame_a.shape[0]
    n = idx.shape[0]
    fa = frame_a.copy()
    fb = frame_b.copy()
    work = np.empty((d, d))
    rfull = np.empty((d, d))
    incr = np.empty(d)
    out = np.empty(n + 1)
    out[0] = opposition(fa, fb)
    for k in range(n):
        g = mats[idx[k]]
        _step(g, fa, work, rfull, incr)
        _step(g, fb, work, rfull, incr)
        out[k + 1] = opposition(fa, fb)
        if reorth_every > 0 and (k + 1) % reorth_every == 0:
            _reorthogonalize(fa, work, rfull)
            _reorthogonalize(fb, work, rfull)
    return out


@numba.njit(cache=True)
def forward_flag(mats, idx, frame0):
    """Frame of (b_1 ... b_n) eta0: increments applied in reverse order."""
    d = frame0.shape[0]
    frame = frame0.copy()
    work = np.empty((d, d))
    rfull = np.empty((d, d))
    incr = np.empty(d)
    for k in range(idx.shape[0] - 1, -1, -1):
        _step(mats[idx[k]], frame, work, rfull, incr)
    return frame
