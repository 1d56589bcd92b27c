"""Numpy implementations of the assembly kernels (fallback backend)."""

import numpy as np


def reduced_coupling_matrix(ns, theta, b, A, B, Lz, radius):
    ns = np.ascontiguousarray(ns, dtype=np.int64)
    N = ns.size
    out = np.zeros((N, N))
    if A == 0.0 or N == 0:
        return out
    c = 1.0 - theta
    Lz2 = Lz * Lz
    nf = ns.astype(float)
    # Pairs are visited one band diagonal at a time; every pair still sums
    # its own n' range in ascending order, as the scalar function does.
    for d in range(N):
        n = nf[: N - d]
        m = nf[d:]
        lo_site = np.minimum(n, m)
        hi_site = np.maximum(n, m)
        lo = np.ceil((hi_site - radius - b) / c).astype(np.int64)
        hi = np.floor((lo_site + radius - b) / c).astype(np.int64)
        live = lo <= hi
        if not live.any():
            if np.all(np.diff(ns) > 0):
                break
            continue
        total = np.zeros(N - d)
        for k in range(lo[live].min(), hi[live].max() + 1):
            mask = (lo <= k) & (k <= hi)
            p = c * k
            e1 = (n - p) - b
            e2 = (m - p) - b
            term = (A * np.exp(-B * np.sqrt(e1 * e1 + Lz2))) * (A * np.exp(-B * np.sqrt(e2 * e2 + Lz2)))
            total += np.where(mask, term, 0.0)
        idx = np.arange(N - d)
        out[idx, idx + d] = total
        out[idx + d, idx] = total
    return out


def interlayer_block(n1s, n2s, theta, b, A, B, Lz):
    n1 = np.asarray(n1s, dtype=float)[:, None]
    n2 = np.asarray(n2s, dtype=float)[None, :]
    eta = (n1 - (1.0 - theta) * n2) - b
    return A * np.exp(-B * np.sqrt(eta * eta + Lz * Lz))
