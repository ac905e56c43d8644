"""Curvature of the torsion connection and its decomposition.

F^i = Psi^ij Sigma^j + (s/12) Sigma^i + embed(R~), where R~ is the tracefree
Ricci tensor and embed(h)^i_mn = h_[m^a Sigma^i_|a|n].
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .irrep_decomp import asd_contraction, embed_h, j2_project
from .tensor_core import EPS3, EPS4, as_metric


def curvature_f(a, da):
    """F^i_mn = 2 d_[m A^i_n] + eps^ijk A^j_m A^k_n; ``da[..., alpha, i, nu]``."""
    return kernels.curvature_f(a, da)


def _s_up(s, g):
    gi = as_metric(g).g_inv
    return np.einsum("...icd,...ca,...db->...iab", s, gi, gi, optimize=True)


def ricci_from_f(s, g, f):
    """R_mn = -Sigma^i_m^a F^i_an."""
    mixed = np.einsum("...imb,...ba->...ima", s, as_metric(g).g_inv)
    return -np.einsum("...ima,...ian->...mn", mixed, f)


def sigma_dots(s, g, f):
    """Matrix F^i_ab Sigma^j^ab."""
    return np.einsum("...iab,...jab->...ij", f, _s_up(s, g))


def scalar_from_f(s, g, f):
    return np.einsum("...iab,...iab->...", f, _s_up(s, g))


@dataclass
class CurvatureDecomp:
    psi: np.ndarray
    s: np.ndarray
    ricci_tf: np.ndarray
    lambda_fit: np.ndarray
    antisym: np.ndarray  # antisymmetric part of F.Sigma; zero for compatible pairs


def decompose_f(s, g, f):
    dots = sigma_dots(s, g, f)
    scal = np.trace(dots, axis1=-2, axis2=-1)
    sym = 0.5 * (dots + np.swapaxes(dots, -1, -2))
    psi = 0.25 * (sym - np.eye(3) * (scal / 3.0)[..., None, None])
    ricci_tf = -asd_contraction(s, g, f)
    return CurvatureDecomp(psi, scal, ricci_tf, scal / 4.0, 0.5 * (dots - np.swapaxes(dots, -1, -2)))


def reassemble(s, g, d: CurvatureDecomp):
    return (np.einsum("...ij,...jmn->...imn", d.psi, s)
            + (d.s / 12.0)[..., None, None, None] * s + embed_h(s, g, d.ricci_tf))


def e_norm(s, g, b):
    """sqrt(sum_i B^i_ab B^i^ab / 2), pointwise."""
    gi = as_metric(g).g_inv
    up = np.einsum("...icd,...ca,...db->...iab", b, gi, gi, optimize=True)
    return np.sqrt(np.abs(0.5 * np.einsum("...iab,...iab->...", b, up)))


def anti_self_dual_part(s, g, f):
    return j2_project(s, g, f).b9


@dataclass
class EinsteinResidual:
    asd_norm: np.ndarray
    trace_dev: np.ndarray
    f_norm: np.ndarray


def einstein_residual(s, g, f, lambda_opt=None):
    asd = anti_self_dual_part(s, g, f)
    scal = scalar_from_f(s, g, f)
    dev = np.abs(scal / 4.0 - lambda_opt) if lambda_opt is not None else np.zeros_like(scal)
    return EinsteinResidual(e_norm(s, g, asd), dev, e_norm(s, g, f))


def bianchi_residual(s, f):
    """Coefficients of eps^ijk F^j ^ Sigma^k."""
    return 0.25 * np.einsum("ijk,mnrs,...jmn,...krs->...i", EPS3, EPS4, f, s, optimize=True)


def riemann_f_identity(s, g, f, riemann):
    """R_mn^rs Sigma^k_rs - 2 F^k_mn, with ``riemann[..., m, n, r, s] = R_mnr^s``."""
    gi = as_metric(g).g_inv
    r_up = np.einsum("...mnls,...lr->...mnrs", riemann, gi)
    return np.einsum("...mnrs,...krs->...kmn", r_up, s) - 2.0 * f
