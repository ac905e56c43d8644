"""Pointwise hot kernels over batches of grid points.

Each kernel has a numpy reference (``*_np``) and a numba version (``*_nb``)
that loops over points in parallel. The public wrappers pick the numba path
when :func:`sigma_forge._accel.enabled` is true and the inputs are real.
"""
import numpy as np

from . import _accel
from ._accel import njit, prange
from .tensor_core import EPS3, EPS4

# ---------------------------------------------------------------- numpy path


def torsion_explicit_np(s, g, g_inv, sqrt_det, ds):
    s_up = np.einsum("...jcd,...ca,...db->...jab", s, g_inv, g_inv, optimize=True)
    t1 = np.einsum("...ml,lagc,...aigc->...im", g, EPS4, ds, optimize=True) / sqrt_det[..., None, None]
    t2 = np.einsum("ijk,...jab,...mkab->...im", EPS3, s_up, ds, optimize=True)
    t3 = np.einsum("ijk,...jab,...bkma->...im", EPS3, s_up, ds, optimize=True)
    return -0.25 * t1 - 0.25 * t2 - 0.5 * t3


def curvature_f_np(a, da):
    d = np.swapaxes(da, -3, -2)  # (..., i, mu, nu) = d_mu A^i_nu
    return d - np.swapaxes(d, -1, -2) + np.einsum("ijk,...jm,...kn->...imn", EPS3, a, a, optimize=True)


def christoffel_np(g_inv, dg):
    """Gamma^r_mn = g^rs (d_m g_ns + d_n g_ms - d_s g_mn) / 2; ``dg[..., a, m, n]``."""
    t = dg + np.einsum("...nms->...mns", dg) - np.einsum("...smn->...mns", dg)
    return 0.5 * np.einsum("...rs,...mns->...rmn", g_inv, t)


def riemann_np(gamma, dgamma):
    """R_mnr^s = d_n G^s_mr - d_m G^s_nr + G^a_mr G^s_an - G^a_nr G^s_am.

    ``gamma[..., s, m, r] = Gamma^s_mr``; ``dgamma[..., a, s, m, r] = d_a Gamma^s_mr``.
    """
    d = np.einsum("...nsmr->...mnrs", dgamma)
    quad = np.einsum("...amr,...san->...mnrs", gamma, gamma)
    return d - np.swapaxes(d, -4, -3) + quad - np.swapaxes(quad, -4, -3)


def coframe_torsion_np(inv, de):
    """A^i = w^4i - eps^ijk w^jk / 2 from e^-1 and ``de[..., alpha, I, mu]`` (spin connection inlined)."""
    d = np.swapaxes(de, -3, -2)
    d = d - np.swapaxes(d, -1, -2)
    c = np.einsum("...Iab,...aJ,...bK->...IJK", d, inv, inv, optimize=True)
    w = 0.5 * (c - np.einsum("...JIK->...IJK", c) - np.einsum("...KIJ->...IJK", c))
    e = np.linalg.inv(inv)
    wm = np.einsum("...IJK,...Km->...mIJ", w, e)
    return (np.swapaxes(wm[..., :, 3, :3], -1, -2)
            - 0.5 * np.einsum("ijk,...mjk->...im", EPS3, wm[..., :3, :3]))


def asd_density_np(inv, det, f):
    """|F^-|^2 vol in the orthonormal frame: (1/2) sum_{I<J} F_IJ^2 - Pf(F), summed over i."""
    ff = np.swapaxes(inv, -1, -2)[..., None, :, :] @ f @ inv[..., None, :, :]
    iu = np.triu_indices(4, 1)
    sq = np.sum(ff[..., iu[0], iu[1]] ** 2, axis=(-2, -1))
    pf = np.sum(ff[..., 0, 1] * ff[..., 2, 3] - ff[..., 0, 2] * ff[..., 1, 3] + ff[..., 0, 3] * ff[..., 1, 2], axis=-1)
    return (0.5 * sq - pf) * det


# ---------------------------------------------------------------- numba path


@njit(parallel=True)
def _torsion_explicit_nb(s, g, g_inv, sqrt_det, ds, eps3, eps4, out):
    n = s.shape[0]
    for p in prange(n):
        s_up = np.zeros((3, 4, 4))
        for j in range(3):
            for a in range(4):
                for b in range(4):
                    acc = 0.0
                    for c in range(4):
                        for d in range(4):
                            acc += g_inv[p, c, a] * g_inv[p, d, b] * s[p, j, c, d]
                    s_up[j, a, b] = acc
        # eps^{l abc} d_a S_bc (twice the packed dSigma)
        dual = np.zeros((3, 4))
        for i in range(3):
            for l in range(4):
                acc = 0.0
                for a in range(4):
                    for b in range(4):
                        for c in range(4):
                            e = eps4[l, a, b, c]
                            if e != 0.0:
                                acc += e * ds[p, a, i, b, c]
                dual[i, l] = acc
        for i in range(3):
            for m in range(4):
                t1 = 0.0
                for l in range(4):
                    t1 += g[p, m, l] * dual[i, l]
                t1 /= sqrt_det[p]
                t2 = 0.0
                t3 = 0.0
                for j in range(3):
                    for k in range(3):
                        e = eps3[i, j, k]
                        if e == 0.0:
                            continue
                        for a in range(4):
                            for b in range(4):
                                t2 += e * s_up[j, a, b] * ds[p, m, k, a, b]
                                t3 += e * s_up[j, a, b] * ds[p, b, k, m, a]
                out[p, i, m] = -0.25 * t1 - 0.25 * t2 - 0.5 * t3


@njit(parallel=True)
def _curvature_f_nb(a, da, eps3, out):
    n = a.shape[0]
    for p in prange(n):
        for i in range(3):
            for m in range(4):
                for v in range(4):
                    acc = da[p, m, i, v] - da[p, v, i, m]
                    for j in range(3):
                        for k in range(3):
                            e = eps3[i, j, k]
                            if e != 0.0:
                                acc += e * a[p, j, m] * a[p, k, v]
                    out[p, i, m, v] = acc


@njit(parallel=True)
def _christoffel_nb(g_inv, dg, out):
    n = g_inv.shape[0]
    for p in prange(n):
        for m in range(4):
            for v in range(m, 4):
                for s in range(4):
                    low = 0.5 * (dg[p, m, v, s] + dg[p, v, m, s] - dg[p, s, m, v])
                    for r in range(4):
                        out[p, r, m, v] += g_inv[p, r, s] * low
                if v != m:
                    for r in range(4):
                        out[p, r, v, m] = out[p, r, m, v]


@njit(parallel=True)
def _riemann_nb(gamma, dgamma, out):
    n = gamma.shape[0]
    for p in prange(n):
        for m in range(4):
            for v in range(4):
                if v == m:
                    continue
                for r in range(4):
                    for s in range(4):
                        acc = dgamma[p, v, s, m, r] - dgamma[p, m, s, v, r]
                        for a in range(4):
                            acc += gamma[p, a, m, r] * gamma[p, s, a, v] - gamma[p, a, v, r] * gamma[p, s, a, m]
                        out[p, m, v, r, s] = acc


@njit(parallel=True)
def _coframe_torsion_nb(e, inv, de, out):
    n = e.shape[0]
    for p in prange(n):
        d = np.empty((4, 4, 4))
        for i in range(4):
            for a in range(4):
                for b in range(4):
                    d[i, a, b] = de[p, a, i, b] - de[p, b, i, a]
        c = np.zeros((4, 4, 4))
        for i in range(4):
            for a in range(4):
                for b in range(4):
                    v = d[i, a, b]
                    if v == 0.0:
                        continue
                    for j in range(4):
                        t = v * inv[p, a, j]
                        for k in range(4):
                            c[i, j, k] += t * inv[p, b, k]
        # only w^4i and w^jk with j, k < 3 are needed
        for m in range(4):
            for i in range(3):
                j, k = (i + 1) % 3, (i + 2) % 3
                w4i = 0.0
                wjk = 0.0
                for q in range(4):
                    w4i += 0.5 * (c[3, i, q] - c[i, 3, q] - c[q, 3, i]) * e[p, q, m]
                    wjk += 0.5 * (c[j, k, q] - c[k, j, q] - c[q, j, k]) * e[p, q, m]
                out[p, i, m] = w4i - wjk


@njit(parallel=True)
def _asd_density_nb(inv, det, f, out):
    n = inv.shape[0]
    for p in prange(n):
        total = 0.0
        ff = np.empty((4, 4))
        for i in range(3):
            for a in range(4):
                for b in range(a + 1, 4):
                    acc = 0.0
                    for m in range(4):
                        for v in range(4):
                            acc += inv[p, m, a] * f[p, i, m, v] * inv[p, v, b]
                    ff[a, b] = acc
            sq = 0.0
            for a in range(4):
                for b in range(a + 1, 4):
                    sq += ff[a, b] * ff[a, b]
            total += 0.5 * sq - (ff[0, 1] * ff[2, 3] - ff[0, 2] * ff[1, 3] + ff[0, 3] * ff[1, 2])
        out[p] = total * det[p]


# ---------------------------------------------------------------- dispatch


def _use_numba(*arrays):
    return _accel.enabled() and all(np.isrealobj(x) for x in arrays)


def _flat(x, tail):
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64).reshape((-1,) + tail))


def torsion_explicit(s, g, g_inv, sqrt_det, ds):
    if not _use_numba(s, g, ds):
        return torsion_explicit_np(s, g, g_inv, sqrt_det, ds)
    batch = s.shape[:-3]
    out = np.empty((int(np.prod(batch, dtype=int)), 3, 4))
    _torsion_explicit_nb(_flat(s, (3, 4, 4)), _flat(g, (4, 4)), _flat(g_inv, (4, 4)),
                         _flat(np.broadcast_to(sqrt_det, batch), ()), _flat(ds, (4, 3, 4, 4)), EPS3, EPS4, out)
    return out.reshape(batch + (3, 4))


def curvature_f(a, da):
    if not _use_numba(a, da):
        return curvature_f_np(a, da)
    batch = a.shape[:-2]
    out = np.empty((int(np.prod(batch, dtype=int)), 3, 4, 4))
    _curvature_f_nb(_flat(a, (3, 4)), _flat(da, (4, 3, 4)), EPS3, out)
    return out.reshape(batch + (3, 4, 4))


def christoffel(g_inv, dg):
    if not _use_numba(g_inv, dg):
        return christoffel_np(g_inv, dg)
    batch = g_inv.shape[:-2]
    out = np.zeros((int(np.prod(batch, dtype=int)), 4, 4, 4))
    _christoffel_nb(_flat(g_inv, (4, 4)), _flat(dg, (4, 4, 4)), out)
    return out.reshape(batch + (4, 4, 4))


def riemann(gamma, dgamma):
    if not _use_numba(gamma, dgamma):
        return riemann_np(gamma, dgamma)
    batch = gamma.shape[:-3]
    out = np.zeros((int(np.prod(batch, dtype=int)), 4, 4, 4, 4))
    _riemann_nb(_flat(gamma, (4, 4, 4)), _flat(dgamma, (4, 4, 4, 4)), out)
    return out.reshape(batch + (4, 4, 4, 4))


def coframe_torsion(e, inv, de):
    if not _use_numba(e, inv, de):
        return coframe_torsion_np(inv, de)
    batch = e.shape[:-2]
    out = np.empty((int(np.prod(batch, dtype=int)), 3, 4))
    _coframe_torsion_nb(_flat(e, (4, 4)), _flat(inv, (4, 4)), _flat(de, (4, 4, 4)), out)
    return out.reshape(batch + (3, 4))


def asd_density(inv, det, f):
    if not _use_numba(inv, f):
        return asd_density_np(inv, det, f)
    batch = inv.shape[:-2]
    out = np.empty(int(np.prod(batch, dtype=int)))
    _asd_density_nb(_flat(inv, (4, 4)), _flat(np.broadcast_to(det, batch), ()), _flat(f, (3, 4, 4)), out)
    return out.reshape(batch)
