"""Pointwise exterior algebra on a four-dimensional coordinate chart.

Conventions
-----------
* A p-form is stored through its antisymmetric components,
  ``omega = (1/p!) omega_{mu...} dx^mu ^ ...``, so a 2-form is a full 4x4
  antisymmetric array.
* A 3-form is stored packed as the dual vector ``c^mu = eps^{mu abc} T_abc / 6``
  (see :func:`pack_three_form`).
* A 4-form is its coefficient of ``dx^1 ^ dx^2 ^ dx^3 ^ dx^4``.
* ``EPS4`` is the Levi-Civita symbol with ``EPS4[0,1,2,3] = +1`` for both index
  positions; metric factors only enter through the Hodge operators.

Every function broadcasts over leading batch axes.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import NonInvertibleMetric


def _levi_civita(n):
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


EPS3 = _levi_civita(3)
EPS4 = _levi_civita(4)


@dataclass(frozen=True)
class Metric4:
    """Metric with cached inverse and sqrt(det g); arrays may carry batch axes."""

    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: np.ndarray

    @classmethod
    def from_array(cls, g, riemannian=True):
        g = np.asarray(g)
        det = np.linalg.det(g)
        if np.any(~np.isfinite(det)) or np.any(det <= 0.0):
            raise NonInvertibleMetric(f"det g must be positive, got min {np.min(det):.3e}")
        if riemannian:
            eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
            if np.any(eig <= 0.0):
                raise NonInvertibleMetric("metric is not positive-definite")
        return cls(g, np.linalg.inv(g), np.sqrt(det))

    @classmethod
    def euclidean(cls):
        return cls(np.eye(4), np.eye(4), np.float64(1.0))


def as_metric(g):
    return g if isinstance(g, Metric4) else Metric4.from_array(g)


def antisymmetric_part(b):
    return 0.5 * (b - np.swapaxes(b, -1, -2))


def wedge_11(a, b):
    """2-form a ^ b of two 1-forms."""
    return a[..., :, None] * b[..., None, :] - a[..., None, :] * b[..., :, None]


def wedge_12(a, b):
    """3-form a ^ b of a 1-form and a 2-form, full antisymmetric layout."""
    # (a ^ b)_{mnr} = a_m b_nr + a_n b_rm + a_r b_mn
    return (a[..., :, None, None] * b[..., None, :, :]
            + a[..., None, :, None] * np.swapaxes(b, -1, -2)[..., :, None, :]
            + a[..., None, None, :] * b[..., :, :, None])


def wedge_22(a, b):
    """Coefficient of a ^ b for 2-forms: (1/4) eps^{mnrs} a_mn b_rs."""
    return 0.25 * np.einsum("mnrs,...mn,...rs->...", EPS4, a, b, optimize=True)


def wedge_13(a, c):
    """Coefficient of a ^ T for a 1-form and a packed 3-form ``c``."""
    # a ^ T = (1/6) eps^{mnrs} a_m T_nrs = a_m c^m
    return np.einsum("...m,...m->...", a, c)


def pack_three_form(t):
    """Full antisymmetric T_abc -> dual vector c^m = eps^{mabc} T_abc / 6."""
    return np.einsum("mabc,...abc->...m", EPS4, t) / 6.0


def unpack_three_form(c):
    """Dual vector c^m -> full antisymmetric T_abc = eps_{mabc} c^m."""
    return np.einsum("mabc,...m->...abc", EPS4, c)


def raise_second(b, g):
    """B_mu^alpha = B_{mu beta} g^{beta alpha}."""
    return np.einsum("...mb,...ba->...ma", b, as_metric(g).g_inv)


def raise_both(b, g):
    gi = as_metric(g).g_inv
    return np.einsum("...ma,...nb,...ab->...mn", gi, gi, b, optimize=True)


def contract_22(a, b, g):
    """Full contraction a_{ab} b^{ab}."""
    return np.einsum("...ab,...ab->...", a, raise_both(b, g))


def two_form_norm(b, g):
    """sqrt(b_ab b^ab / 2), summed over any trailing E index handled by caller."""
    return np.sqrt(np.abs(0.5 * contract_22(b, b, g)))


def hodge_2(g, b):
    """(*b)_mn = (1/2) sqrt(det g) eps_{mnab} g^{ar} g^{bs} b_rs."""
    m = as_metric(g)
    return 0.5 * m.sqrt_det[..., None, None] * np.einsum(
        "mnab,...ab->...mn", EPS4, raise_both(b, m))


def hodge_3(g, c):
    """One-form eps_m^{abc} T_abc / 3 of a packed 3-form.

    This is the normalization for which ``(*d Sigma)_m = eps_m^{abc} d_a Sigma_bc``;
    it is twice the conventional Hodge dual.
    """
    m = as_metric(g)
    return 2.0 * np.einsum("...ml,...l->...m", m.g, c) / m.sqrt_det[..., None]


def hodge_1(g, a):
    """Packed 3-form whose :func:`hodge_3` is ``a`` (exact inverse)."""
    m = as_metric(g)
    return 0.5 * m.sqrt_det[..., None] * np.einsum("...lm,...m->...l", m.g_inv, a)
