"""Classical curvature from a coframe or a metric, independent of the Sigma pipeline.

Conventions: ``gamma[..., r, m, n] = Gamma^r_mn``; ``riemann[..., m, n, r, s] = R_mnr^s``
with R_mnr^s e^I_s = -F_mn^I_J e^J_r for the curvature F = dw + w ^ w of the
spin connection, and Ricci R_mn = R_man^a.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import SingularCoframe
from .tensor_core import EPS3, as_metric


def _inverse_coframe(e):
    det = np.linalg.det(e)
    if np.any(np.abs(det) <= 1e-14 * np.max(np.abs(e)) ** 4):
        raise SingularCoframe("coframe is not invertible")
    return np.linalg.inv(e)  # inv[..., mu, I] = E_I^mu


def spin_connection(e, de, inv=None):
    """w[..., mu, I, J] with de^I + w^I_J ^ e^J = 0 and w antisymmetric in (I, J).

    ``de[..., alpha, I, mu] = d_alpha e^I_mu``; pass ``inv`` to reuse a known e^-1.
    """
    if inv is None:
        inv = _inverse_coframe(e)
    de2 = np.swapaxes(de, -3, -2)                      # (I, alpha, mu)
    de2 = de2 - np.swapaxes(de2, -1, -2)               # (de^I)_{alpha mu}
    c = np.einsum("...Iab,...aJ,...bK->...IJK", de2, inv, inv, optimize=True)
    # c_IJK = w_IJK - w_IKJ, solved with w antisymmetric in (I, J)
    w_frame = 0.5 * (c - np.einsum("...JIK->...IJK", c) - np.einsum("...KIJ->...IJK", c))
    return np.einsum("...IJK,...Km->...mIJ", w_frame, e)


def self_dual_connection(w):
    """A^i = w^4i - (1/2) eps^ijk w^jk: the torsion of the triple built from the same coframe."""
    return (np.swapaxes(w[..., :, 3, :3], -1, -2)
            - 0.5 * np.einsum("ijk,...mjk->...im", EPS3, w[..., :3, :3]))


def frame_equation_residual(e, de, w):
    """Components of de^I + w^I_J ^ e^J."""
    d = np.swapaxes(de, -3, -2)
    d = d - np.swapaxes(d, -1, -2)
    we = np.einsum("...mIJ,...Jn->...Imn", w, e)
    return d + we - np.swapaxes(we, -1, -2)


def spin_curvature(w, dw):
    """F_mn^I_J = d_m w_n - d_n w_m + [w_m, w_n]; ``dw[..., alpha, mu, I, J]``."""
    d = dw - np.swapaxes(dw, -4, -3)
    quad = np.einsum("...mIK,...nKJ->...mnIJ", w, w)
    return d + quad - np.swapaxes(quad, -4, -3)


def frame_identity_residual(riemann, e, f_spin):
    """R_mnr^s e^I_s + F_mn^I_J e^J_r."""
    return (np.einsum("...mnrs,...Is->...mnIr", riemann, e)
            + np.einsum("...mnIJ,...Jr->...mnIr", f_spin, e))


def christoffel(g, dg):
    m = as_metric(g)
    return kernels.christoffel(m.g_inv, dg)


def metricity_residual(g, dg, gamma):
    """nabla_a g_mn = d_a g_mn - Gamma^l_am g_ln - Gamma^l_an g_ml."""
    m = as_metric(g)
    low = np.einsum("...lam,...ln->...amn", gamma, m.g)
    return dg - low - np.swapaxes(low, -1, -2)


def riemann(gamma, dgamma):
    return kernels.riemann(gamma, dgamma)


def first_bianchi_residual(riem):
    return riem + np.einsum("...nrms->...mnrs", riem) + np.einsum("...rmns->...mnrs", riem)


@dataclass
class OracleCurvature:
    ricci: np.ndarray
    s: np.ndarray
    ricci_tf: np.ndarray
    wplus: np.ndarray


def ricci_scalar_weyl(riem, g, s_triple):
    m = as_metric(g)
    ricci = np.einsum("...mana->...mn", riem)
    scal = np.einsum("...mn,...mn->...", m.g_inv, ricci)
    ricci_tf = ricci - 0.25 * m.g * scal[..., None, None]
    gi = m.g_inv
    r_up = np.einsum("...mnls,...am,...bn,...lr->...abrs", riem, gi, gi, gi, optimize=True)
    w = np.einsum("...abrs,...iab,...jrs->...ij", r_up, s_triple, s_triple, optimize=True) / 8.0
    wplus = 0.5 * (w + np.swapaxes(w, -1, -2)) - np.eye(3) * (scal / 12.0)[..., None, None]
    return OracleCurvature(ricci, scal, ricci_tf, wplus)


def constant_curvature_riemann(g, radius):
    """R_mnrs = (g_mr g_ns - g_ms g_nr) / r^2 with the last index raised."""
    low = (np.einsum("...mr,...ns->...mnrs", g, g) - np.einsum("...ms,...nr->...mnrs", g, g)) / radius ** 2
    gi = np.linalg.inv(g)
    return np.einsum("...mnrl,...ls->...mnrs", low, gi)
