"""Compiled inner loops for the lattice form of the quadratic term."""
import numba
import numpy as np


@numba.njit(parallel=True, cache=True)
def beta_lattice(k1, n1, k2, n2, ftab, va, vb, off, nmax):
    """``beta[j] = sum_i F[n1_i, n2_j] va[k1_i + k2_j] vb[k2_j - k1_i]``.

    ``k1`` is sorted by ``n1 = |k1|^2`` so the loop stops once
    ``n1 + n2 >= nmax``; past that point one of the two spectra is outside
    the band and vanishes. ``off`` shifts signed lattice indices into the
    arrays ``va``, ``vb``.
    """
    out = np.zeros(k2.shape[0], dtype=np.complex128)
    for j in numba.prange(k2.shape[0]):
        a0, a1, a2 = k2[j, 0], k2[j, 1], k2[j, 2]
        m = n2[j]
        acc = 0.0 + 0.0j
        for i in range(k1.shape[0]):
            if n1[i] + m >= nmax:
                break
            b0, b1, b2 = k1[i, 0], k1[i, 1], k1[i, 2]
            p = va[a0 + b0 + off, a1 + b1 + off, a2 + b2 + off]
            if p == 0:
                continue
            q = vb[a0 - b0 + off, a1 - b1 + off, a2 - b2 + off]
            acc += ftab[n1[i], m] * p * q
        out[j] = acc
    return out


def ball_points(K):
    """Integer vectors with ``|k|^2 < K^2``, sorted by squared norm (ties in lexicographic order)."""
    r = np.arange(-K + 1, K)
    g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    n = np.sum(g * g, axis=1)
    keep = n < K * K
    g, n = g[keep], n[keep]
    order = np.lexsort((g[:, 2], g[:, 1], g[:, 0], n))
    return np.ascontiguousarray(g[order], dtype=np.int64), np.ascontiguousarray(n[order], dtype=np.int64)
