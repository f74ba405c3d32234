"""Lattice sums with a bilinear phase.

All star products and twisted or deformed convolutions reduce to

    T(k) = sum_m u(m) v(k - m) exp(i (k h) . P (m h)) * h_q * h_p

on the integer lattice of a two-dimensional grid. Sampling points of the
centered grids used here sit at ``index * h``, so a difference of two grid
points is again a lattice point and no interpolation is needed; values
outside the stored index range are zero.

The sum is evaluated row by row in the first axis: for each ``m_q`` the
remaining sum over ``m_p`` is an ordinary one-dimensional convolution once
the phase factors are split off. The ``P_pp`` term couples ``k_p`` and
``m_p`` and is separated with ``k m = (k^2 + m^2 - (k - m)^2) / 2``.
"""

import os

import numpy as np
from scipy import fft as sfft


def fft_workers():
    """Worker count for scipy.fft, capped by ``MOYALKIT_THREADS``."""
    value = os.environ.get("MOYALKIT_THREADS")
    if value is None:
        return 1
    return max(1, int(value))


def _conv_rows(a, b):
    """Full linear convolution of matching rows of ``a`` and ``b``."""
    n = a.shape[1] + b.shape[1] - 1
    nfft = sfft.next_fast_len(n)
    w = fft_workers()
    fa = sfft.fft(a, nfft, axis=1, workers=w)
    fb = sfft.fft(b, nfft, axis=1, workers=w)
    return sfft.ifft(fa * fb, axis=1, workers=w)[:, :n]


def bilinear_phase_sum(u, u0, v, v0, out0, out_shape, h, P):
    """Evaluate the lattice sum described in the module docstring.

    Parameters
    ----------
    u, v : ndarray, shape (n_q, n_p)
        Samples on index boxes starting at ``u0`` and ``v0`` (pairs of ints).
    out0, out_shape : pair of ints
        First index and size of the output box.
    h : pair of floats
        Lattice spacing per axis.
    P : (2, 2) array_like
        Real phase matrix.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    P = np.asarray(P, dtype=float)
    hq, hp = h
    nuq, nup = u.shape
    nvq, nvp = v.shape
    noq, nop = out_shape

    up_idx = u0[1] + np.arange(nup)
    vp_idx = v0[1] + np.arange(nvp)
    kq_idx = out0[0] + np.arange(noq)
    kp_idx = out0[1] + np.arange(nop)

    c = P[1, 1] * hp * hp
    if c != 0.0:
        u = u * np.exp(0.5j * c * up_idx**2)[None, :]
        v = v * np.exp(-0.5j * c * vp_idx**2)[None, :]

    # phase of (k_q, m_p): exp(i kq hq P_qp mp hp)
    mod_qp = np.exp(1j * P[0, 1] * hq * hp * np.outer(kq_idx, up_idx))
    conv_start = u0[1] + v0[1]
    conv_len = nup + nvp - 1
    take = kp_idx - conv_start
    valid = (take >= 0) & (take < conv_len)
    take_c = np.clip(take, 0, conv_len - 1)

    out = np.zeros((noq, nop), dtype=complex)
    for i in range(nuq):
        mq = u0[0] + i
        row = u[i]
        if not row.any():
            continue
        # output rows whose partner index kq - mq lies inside v
        lo = max(kq_idx[0], mq + v0[0])
        hi = min(kq_idx[-1] + 1, mq + v0[0] + nvq)
        if lo >= hi:
            continue
        rows = slice(lo - kq_idx[0], hi - kq_idx[0])
        vrows = slice(lo - mq - v0[0], hi - mq - v0[0])
        a = mod_qp[rows] * row[None, :]
        conv = _conv_rows(a, v[vrows])
        block = conv[:, take_c] * valid[None, :]
        phase_p = np.exp(1j * P[1, 0] * hp * hq * kp_idx * mq)
        phase_q = np.exp(1j * P[0, 0] * hq * hq * kq_idx[rows] * mq)
        out[rows] += block * phase_p[None, :] * phase_q[:, None]

    if c != 0.0:
        out *= np.exp(0.5j * c * kp_idx**2)[None, :]
    return out * (hq * hp)


def trim_support(u, u0, rel_tol=1e-17):
    """Crop ``u`` to the index box where ``|u| > rel_tol * max|u|``.

    Returns the cropped array and its new starting index. Dropped entries
    contribute at most ``rel_tol`` relative to the largest term of any sum
    against bounded partners.
    """
    a = np.abs(u)
    top = a.max()
    if top == 0:
        return u[:1, :1] * 0, u0
    keep = a > rel_tol * top
    rows = np.nonzero(keep.any(axis=1))[0]
    cols = np.nonzero(keep.any(axis=0))[0]
    r0, r1 = rows[0], rows[-1] + 1
    c0, c1 = cols[0], cols[-1] + 1
    return u[r0:r1, c0:c1], (u0[0] + r0, u0[1] + c0)
