"""J1 on E-valued 1-forms and J2 on E-valued 2-forms, with their eigenparts.

``a`` has shape ``(..., 3, 4)`` (A^i_mu); ``b`` has shape ``(..., 3, 4, 4)``.
Every function takes the triple ``s`` and its metric ``g`` together.
"""
from dataclasses import dataclass

import numpy as np

from .tensor_core import EPS3, as_metric


def _mixed(s, g):
    """Sigma^i_mu^alpha."""
    return np.einsum("...imb,...ba->...ima", s, as_metric(g).g_inv)


def j1_apply(s, g, a):
    """J1(A)^i_mu = eps^ijk Sigma^j_mu^alpha A^k_alpha."""
    return np.einsum("ijk,...jma,...ka->...im", EPS3, _mixed(s, g), a, optimize=True)


def j1_project(s, g, a):
    """Split into the eigenvalue-2 part (dimension 4) and eigenvalue -1 part (dimension 8)."""
    ja = j1_apply(s, g, a)
    a4 = (ja + a) / 3.0
    return a4, a - a4


def j1_inverse(s, g, a):
    """J1^-1 = (J1 - 1) / 2."""
    return 0.5 * (j1_apply(s, g, a) - a)


def j2_apply(s, g, b):
    """J2(B)^i_mn = eps^ijk Sigma^j_[m^alpha B^k_|alpha|n]."""
    t = np.einsum("ijk,...jma,...kan->...imn", EPS3, _mixed(s, g), b, optimize=True)
    return 0.5 * (t - np.swapaxes(t, -1, -2))


# Eigenvalues of J2 and the dimension of each eigenspace.
J2_SPECTRUM = {2: 1, 1: 3, -1: 5, 0: 9}


@dataclass(frozen=True)
class J2Parts:
    b1: np.ndarray  # eigenvalue 2, multiples of Sigma
    b3: np.ndarray  # eigenvalue 1
    b5: np.ndarray  # eigenvalue -1
    b9: np.ndarray  # eigenvalue 0, anti-self-dual 2-forms times E

    def __iter__(self):
        return iter((self.b1, self.b3, self.b5, self.b9))


def j2_project(s, g, b):
    """Lagrange projectors from the minimal polynomial J(J-2)(J-1)(J+1)."""
    j = lambda x: j2_apply(s, g, x)
    jb = j(b)
    jjb = j(jb)
    jjjb = j(jjb)
    # P_l = prod_{m != l} (J - m) / (l - m), expanded in powers of J
    b1 = (jjjb - jb) / 6.0
    b3 = -(jjjb - jjb - 2.0 * jb) / 2.0
    b5 = -(jjjb - 3.0 * jjb + 2.0 * jb) / 6.0
    b9 = b - b1 - b3 - b5
    return J2Parts(b1, b3, b5, b9)


@dataclass(frozen=True)
class Irreducibles:
    sym5: np.ndarray
    vec3: np.ndarray
    scalar1: np.ndarray
    asd9: np.ndarray
    traceless_h: np.ndarray  # symmetric traceless h with embed_h(h) = asd9


def _sigma_dot(s, g, b):
    """B^i_ab Sigma^j^ab as a 3x3 matrix (i, j)."""
    gi = as_metric(g).g_inv
    s_up = np.einsum("...jcd,...ca,...db->...jab", s, gi, gi, optimize=True)
    return np.einsum("...iab,...jab->...ij", b, s_up)


def embed_h(s, g, h):
    """h_[m^alpha Sigma^i_|alpha|n]: symmetric traceless h into the eigenvalue-0 space of J2."""
    hm = np.einsum("...mb,...ba->...ma", h, as_metric(g).g_inv)
    t = np.einsum("...ma,...ian->...imn", hm, s)
    return 0.5 * (t - np.swapaxes(t, -1, -2))


def asd_contraction(s, g, b):
    """C_mn = B^i_(m|alpha| Sigma^i alpha_n) + (1/4) g_mn B.Sigma."""
    m = as_metric(g)
    mixed = np.einsum("...ca,...icn->...ian", m.g_inv, s)  # Sigma^{i alpha}_nu
    t = np.einsum("...ima,...ian->...mn", b, mixed)
    sym = 0.5 * (t + np.swapaxes(t, -1, -2))
    trace = np.trace(_sigma_dot(s, g, b), axis1=-2, axis2=-1)
    return sym + 0.25 * m.g * trace[..., None, None]


# asd_contraction(embed_h(h)) = -h for symmetric traceless h.
ASD_RECONSTRUCTION = -1.0


def extract_components(s, g, b):
    """The four irreducible contractions of an E-valued 2-form."""
    dots = _sigma_dot(s, g, b)
    trace = np.trace(dots, axis1=-2, axis2=-1)
    sym = 0.5 * (dots + np.swapaxes(dots, -1, -2))
    sym5 = sym - np.eye(3) * (trace / 3.0)[..., None, None]
    vec3 = np.einsum("ijk,...jk->...i", EPS3, dots)
    h = ASD_RECONSTRUCTION * asd_contraction(s, g, b)
    return Irreducibles(sym5=sym5, vec3=vec3, scalar1=trace, asd9=embed_h(s, g, h), traceless_h=h)


def axial_matrix(v):
    """Antisymmetric M with M x = v x x, i.e. M^jk = -eps^jkm v^m.

    For b^i = M^ij Sigma^j the vec3 contraction returns -8 v.
    """
    return -np.einsum("jkm,...m->...jk", EPS3, v)


def axial_vector(m):
    """Inverse of :func:`axial_matrix`."""
    return -0.5 * np.einsum("jkm,...jk->...m", EPS3, m)
