"""Intrinsic torsion: the SO(3) connection A with dSigma^i + eps^ijk A^j ^ Sigma^k = 0.

Shapes: ``s`` is ``(..., 3, 4, 4)``; ``ds`` holds partials ``(..., 4, 3, 4, 4)``
with the derivative axis first; packed 3-forms of dSigma are ``(..., 3, 4)``;
A is ``(..., 3, 4)``.
"""
import numpy as np

from . import kernels
from .errors import NotARotation
from .grid import exterior_d_from_partials, fd_partials
from .irrep_decomp import j1_apply
from .tensor_core import EPS3, EPS4, as_metric


def star_dsigma(g, dsig):
    """(*dSigma)^i_m = eps_m^{abc} d_a Sigma^i_bc from packed 3-forms."""
    m = as_metric(g)
    return 2.0 * np.einsum("...ml,...il->...im", m.g, dsig) / m.sqrt_det[..., None, None]


def torsion_via_j1(s, g, dsig):
    """A = (J1 - 1)(*dSigma) / 4."""
    star = star_dsigma(g, dsig)
    return 0.25 * (j1_apply(s, g, star) - star)


def torsion_explicit(s, g, ds):
    """Three-term formula for A in terms of first partials of Sigma."""
    m = as_metric(g)
    return kernels.torsion_explicit(s, m.g, m.g_inv, m.sqrt_det, ds)


def wedge_one_two_packed(a, b):
    """Packed 3-form of a ^ B: c^m = eps^{mabc} a_a B_bc / 2."""
    return 0.5 * np.einsum("mabc,...a,...bc->...m", EPS4, a, b, optimize=True)


def compat_residual(s, a, dsig):
    """dSigma^i + eps^ijk A^j ^ Sigma^k as packed 3-forms."""
    twist = 0.5 * np.einsum("ijk,mabc,...ja,...kbc->...im", EPS3, EPS4, a, s, optimize=True)
    return dsig + twist


def torsion_from_partials(s, g, ds, route="explicit"):
    if route == "explicit":
        return torsion_explicit(s, g, ds)
    if route == "j1":
        return torsion_via_j1(s, g, exterior_d_from_partials(ds))
    raise ValueError(f"unknown torsion route {route!r}")


def nabla_sigma(s, ds, gamma, a):
    """nabla_m Sigma^i_rs + eps^ijk A^j_m Sigma^k_rs, shape ``(..., 4, 3, 4, 4)``."""
    ds_i = ds
    corr = (np.einsum("...lmr,...ils->...mirs", gamma, s)
            + np.einsum("...lms,...irl->...mirs", gamma, s))
    rot = np.einsum("ijk,...jm,...krs->...mirs", EPS3, a, s, optimize=True)
    return ds_i - corr + rot


def nabla_sigma_residual(s, ds, gamma, a):
    """Pointwise max-norm of :func:`nabla_sigma`."""
    res = nabla_sigma(s, ds, gamma, a)
    return np.max(np.abs(res), axis=(-4, -3, -2, -1))


def _check_rotation_field(rot, tol=1e-10):
    ident = np.einsum("...ki,...kj->...ij", rot, rot)
    if np.max(np.abs(ident - np.eye(3))) > tol or np.max(np.abs(np.linalg.det(rot) - 1.0)) > tol:
        raise NotARotation("rotation field leaves SO(3)")


def gauge_transform(a, rot, drot, check=True):
    """A'^i = R^ij A^j - (1/2) eps^ijk (R dR^T)^jk, for Sigma' = R Sigma.

    ``drot`` holds partials ``(..., 4, 3, 3)``.
    """
    if check:
        _check_rotation_field(rot)
    rdrt = np.einsum("...ij,...mkj->...mik", rot, drot)
    return np.einsum("...ij,...jm->...im", rot, a) - 0.5 * np.einsum("ijk,...mjk->...im", EPS3, rdrt)


def pure_gauge(rot, drot):
    return gauge_transform(np.zeros(rot.shape[:-2] + (3, 4)), rot, drot)


def infinitesimal_gauge(a, phi, dphi):
    """delta A^i = -d phi^i - eps^ijk A^j phi^k."""
    return -np.swapaxes(dphi, -1, -2) - np.einsum("ijk,...jm,...k->...im", EPS3, a, phi, optimize=True)



# ------------------------------------------------------------ diffeomorphism transport


def lie_two_form(s, ds, x, dx):
    """(L_X S)_mn = X^a d_a S_mn + S_an d_m X^a + S_ma d_n X^a; ``dx[..., m, a] = d_m X^a``."""
    t = np.einsum("...a,...aimn->...imn", x, ds)
    u = np.einsum("...ian,...ma->...imn", s, dx)
    return t + u - np.swapaxes(u, -1, -2)


def transport_rhs(a, da, x, dx):
    """d(i_X A^i) + eps^ijk A^j (i_X A^k) + i_X F^i."""
    ixa = np.einsum("...a,...ia->...i", x, a)
    d_ixa = np.einsum("...n,...min->...im", x, da) + np.einsum("...mn,...in->...im", dx, a)
    f = kernels.curvature_f(a, da)
    return (d_ixa + np.einsum("ijk,...jm,...k->...im", EPS3, a, ixa, optimize=True)
            + np.einsum("...a,...iam->...im", x, f))


def diffeo_transport_check(s, grid, x, eps, route="explicit"):
    """Max-norm of (A(S + eps L_X S) - A(S)) / eps minus :func:`transport_rhs`, all on the grid.

    ``x`` holds X^a sampled on ``grid``; every derivative is a finite difference.
    """
    from .su2_structure import urbantke_metric

    def torsion_of(sig):
        metric, _ = urbantke_metric(sig)
        return torsion_from_partials(sig, metric, fd_partials(sig, grid), route)

    dx = fd_partials(x, grid)
    a = torsion_of(s)
    moved = s + eps * lie_two_form(s, fd_partials(s, grid), x, dx)
    lhs = (torsion_of(moved) - a) / eps
    rhs = transport_rhs(a, fd_partials(a, grid), x, dx)
    return float(np.max(np.abs(lhs - rhs)))


# ------------------------------------------------------------ Kahler diagnostic


def kahler_alignment(s, g, omega):
    """Constant rotation R with (R S)^3 along the self-dual projection of ``omega`` (one point)."""
    gi = as_metric(g).g_inv
    n = 0.5 * np.einsum("iab,ac,bd,cd->i", s, gi, gi, omega)
    n = n / np.linalg.norm(n)
    # rotation taking n to e3 (Rodrigues); antipodal case uses a half turn about e1
    e3 = np.array([0.0, 0.0, 1.0])
    c = float(n @ e3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(n, e3)
    k = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + k + k @ k / (1.0 + c)


def kahler_residuals(s, a, dsig):
    """Pointwise max |A^1|, |A^2| and the residual of dOmega + i A^3 ^ Omega, Omega = S^1 + i S^2."""
    off = np.max(np.abs(a[..., :2, :]), axis=(-2, -1))
    re = dsig[..., 0, :] - wedge_one_two_packed(a[..., 2, :], s[..., 1, :, :])
    im = dsig[..., 1, :] + wedge_one_two_packed(a[..., 2, :], s[..., 0, :, :])
    omega_res = np.maximum(np.max(np.abs(re), axis=-1), np.max(np.abs(im), axis=-1))
    return off, omega_res
