"""SU(2)-structures: triples of 2-forms and the metric they define.

A triple is an array ``s`` of shape ``(..., 3, 4, 4)`` holding
``Sigma^i_{mu nu}``; a coframe is ``e[..., I, mu] = e^I_mu``.
"""
import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from .errors import DegenerateFrame, DegenerateVolume, NotARotation, NotOriented, SingularCoframe
from .tensor_core import EPS3, EPS4, Metric4, wedge_11, wedge_22


class Definiteness(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    INDEFINITE = "Indefinite"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class StructureReport:
    ortho_residual: np.ndarray  # Sigma^i ^ Sigma^j - 2 delta^ij vol, coefficients
    oriented: bool
    vol: float
    definiteness: Definiteness
    residual: float  # max |ortho_residual| / |vol|
    tol: float

    @property
    def ok(self):
        return self.oriented and self.residual <= self.tol


def canonical_sigma():
    """The triple of the identity coframe."""
    return sigma_from_coframe(np.eye(4))


def sigma_from_coframe(e, check=False, tol=1e-12):
    """Sigma^1 = e^41 - e^23, Sigma^2 = e^42 - e^31, Sigma^3 = e^43 - e^12.

    With ``check`` a (numerically) singular coframe raises SingularCoframe.
    """
    e = np.asarray(e)
    if check:
        det = np.abs(np.linalg.det(e.real))
        scale = np.max(np.abs(e)) ** 4 if e.size else 1.0
        if np.any(det <= tol * scale):
            raise SingularCoframe("coframe is not invertible")
    e1, e2, e3, e4 = (e[..., k, :] for k in range(4))
    return np.stack([
        wedge_11(e4, e1) - wedge_11(e2, e3),
        wedge_11(e4, e2) - wedge_11(e3, e1),
        wedge_11(e4, e3) - wedge_11(e1, e2),
    ], axis=-3)


def wedge_gram(s):
    """3x3 matrix of coefficients of Sigma^i ^ Sigma^j."""
    return wedge_22(s[..., :, None, :, :], s[..., None, :, :, :])


def volume(s):
    """Coefficient of vol_Sigma = (1/6) Sigma^i ^ Sigma^i."""
    return np.trace(wedge_gram(s), axis1=-2, axis2=-1) / 6.0


def urbantke_density(s):
    """U_mn = -(1/12) eps_ijk eps^{abrc} Sigma^i_ma Sigma^j_nb Sigma^k_rc = g_mn vol."""
    dual = 0.5 * np.einsum("abrc,...krc->...kab", EPS4, s)
    # contract in stages; a single four-operand einsum is very slow on large batches
    x = s[..., :, None, :, :] @ np.swapaxes(dual, -1, -2)[..., None, :, :, :]   # (j, k, n, a)
    z = np.einsum("ijk,...jkna->...ina", EPS3, x)
    return -np.einsum("...ima,...ina->...mn", s, z) / 6.0


def definiteness(g, tol=1e-12):
    eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    scale = max(float(np.max(np.abs(eig))), np.finfo(float).tiny)
    if np.min(np.abs(eig)) <= tol * scale:
        return Definiteness.DEGENERATE
    if np.all(eig > 0):
        return Definiteness.POSITIVE_DEFINITE
    if np.all(eig < 0):
        return Definiteness.NEGATIVE_DEFINITE
    return Definiteness.INDEFINITE


def urbantke_metric(s, check=True, tol=1e-12):
    """Metric and volume coefficient reconstructed from a triple.

    Returns ``(Metric4, vol)``. With ``check`` the metric must be positive
    definite at every point, otherwise :class:`NotOriented` is raised.
    """
    s = np.asarray(s)
    vol = volume(s)
    scale = np.max(np.abs(s)) ** 2 if s.size else 1.0
    if np.any(np.abs(vol) <= tol * scale):
        raise DegenerateVolume("vol_Sigma vanishes")
    # dividing by |vol| makes a triple that is anti-self-dual in the chart orientation negative-definite
    g = urbantke_density(s) / np.abs(vol)[..., None, None]
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    if check:
        eig = np.linalg.eigvalsh(g)
        if np.any(eig <= 0.0):
            kind = "negative-definite" if np.all(eig < 0) else "not positive-definite"
            raise NotOriented(f"Urbantke metric is {kind}")
    det = np.linalg.det(g)
    return Metric4(g, np.linalg.inv(g), np.sqrt(np.abs(det))), vol


def validate_structure(s, tol=1e-10):
    """Check the wedge orthonormality and orientation of a single triple."""
    s = np.asarray(s, dtype=float)
    gram = wedge_gram(s)
    vol = float(np.trace(gram) / 6.0)
    scale = float(np.max(np.abs(s))) ** 2 or 1.0
    if abs(vol) <= tol * scale:
        raise DegenerateVolume("vol_Sigma vanishes")
    resid = gram - 2.0 * np.eye(3) * vol
    g = urbantke_density(s) / abs(vol)
    kind = definiteness(g)
    return StructureReport(
        ortho_residual=resid,
        oriented=kind is Definiteness.POSITIVE_DEFINITE,
        vol=vol,
        definiteness=kind,
        residual=float(np.max(np.abs(resid)) / abs(vol)),
        tol=tol,
    )


def validate_field(s, tol=1e-10):
    """Vectorized check over a batch; returns (max relative residual, all oriented)."""
    s = np.asarray(s)
    gram = wedge_gram(s)
    vol = np.trace(gram, axis1=-2, axis2=-1) / 6.0
    if np.any(np.abs(vol) <= tol * np.max(np.abs(s)) ** 2):
        raise DegenerateVolume("vol_Sigma vanishes somewhere on the batch")
    resid = np.abs(gram - 2.0 * np.eye(3) * vol[..., None, None]).max(axis=(-2, -1))
    g = urbantke_density(s) / np.abs(vol)[..., None, None]
    eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    return float(np.max(resid / np.abs(vol))), bool(np.all(eig > 0))


def _interior(form, x):
    """(i_X B)_nu = X^mu B_{mu nu}."""
    return np.einsum("m,...mn->...n", x, form)


def metric_quotient(s, x, frame, tol=1e-12):
    """g_Sigma(X, X) from the ratio of two 3-forms evaluated on ``frame``.

    ``frame`` holds three vectors which, together with ``x``, span the tangent
    space; the result does not depend on that choice.
    """
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    frame = np.asarray(frame, dtype=float)
    if abs(np.linalg.det(np.vstack([x, frame]))) <= tol:
        raise DegenerateFrame("X and the three frame vectors are linearly dependent")
    alpha = _interior(s, x)                      # (3, 4) one-forms i_X Sigma^i
    vals = alpha @ frame.T                       # alpha^i(E_a)
    numerator = 6.0 * np.linalg.det(vals)        # eps^{ijk} a^i a^j a^k = 6 a^1 a^2 a^3
    # (a ^ B)(E1,E2,E3) = a(E1) B(E2,E3) - a(E2) B(E1,E3) + a(E3) B(E1,E2)
    b = np.einsum("ima,an->imn", np.einsum("imn,am->ian", s, frame), frame.T)
    denominator = np.sum(vals[:, 0] * b[:, 1, 2] - vals[:, 1] * b[:, 0, 2] + vals[:, 2] * b[:, 0, 1])
    if abs(denominator) <= tol * max(1.0, abs(numerator)):
        raise DegenerateFrame("denominator of the metric quotient vanishes")
    return -0.5 * numerator / denominator


# Canonical triple as matrices in frame indices; these generate the
# self-dual rotations of a coframe.
_SIGMA_CAN = canonical_sigma()


def _self_dual_rotation(rot):
    """SO(4) matrix O with sigma_from_coframe(O @ f) = rot @ sigma_from_coframe(f)."""
    rotvec = Rotation.from_matrix(rot).as_rotvec()
    return expm(0.5 * np.einsum("i,iab->ab", rotvec, _SIGMA_CAN))


def canonical_coframe(s, tol=1e-10):
    """A coframe e with sigma_from_coframe(e) == s.

    The coframe is built by Gram-Schmidt on dx^1..dx^4 with respect to g_Sigma,
    followed by the self-dual rotation that maps the resulting triple onto
    ``s``. The remaining sign ambiguity e -> -e is fixed by making the first
    nonzero entry of the first column of that rotation positive.
    """
    s = np.asarray(s, dtype=float)
    report = validate_structure(s, tol=tol)
    if not report.oriented:
        raise NotOriented(f"triple is {report.definiteness.value}")
    metric, _ = urbantke_metric(s)
    # Lower-triangular f with f^T f = g (Gram-Schmidt of dx^1..dx^4), taken
    # from a Cholesky factor of the index-reversed metric to avoid forming g^-1.
    rev = np.arange(3, -1, -1)
    upper = np.linalg.cholesky(metric.g[np.ix_(rev, rev)]).T
    f = upper[np.ix_(rev, rev)]
    # Components of s in the f-frame; there s^i = Q^ij Sigma_can^j.
    f_inv = np.linalg.inv(f)
    s_frame = np.einsum("ma,imn,nb->iab", f_inv, s, f_inv, optimize=True)
    q = np.einsum("iab,jab->ij", s_frame, _SIGMA_CAN) / 4.0
    u, _, vt = np.linalg.svd(q)
    q = u @ vt
    o = _self_dual_rotation(q)
    col = o[:, 0]
    lead = col[np.argmax(np.abs(col) > 1e-12)]
    if lead < 0:
        o = -o
    return o @ f


def check_rotation(rot, tol=1e-10):
    rot = np.asarray(rot, dtype=float)
    ident = np.einsum("...ki,...kj->...ij", rot, rot)
    if np.max(np.abs(ident - np.eye(3))) > tol or np.any(np.abs(np.linalg.det(rot) - 1.0) > tol):
        raise NotARotation("matrix is not in SO(3)")
    return rot


def so3_rotate(s, rot, tol=1e-10):
    """Sigma'^i = R^ij Sigma^j."""
    rot = check_rotation(rot, tol)
    return np.einsum("...ij,...jab->...iab", rot, s)


def _antisym3(t):
    """Antisymmetrize the last three axes of ``t``."""
    out = np.zeros_like(t)
    for perm, sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                       ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)):
        axes = list(range(t.ndim - 3)) + [t.ndim - 3 + p for p in perm]
        out += sign * np.transpose(t, axes)
    return out / 6.0


def identity_residuals(s):
    """Max entrywise residuals of the four algebraic Sigma identities, per triple.

    Indices are moved with the Urbantke metric; the lower Levi-Civita tensor is
    sqrt(det g) times the symbol. Returns a dict of arrays over the batch.
    """
    s = np.asarray(s, dtype=float)
    metric, _ = urbantke_metric(s)
    g, gi, sd = metric.g, metric.g_inv, metric.sqrt_det
    axes = lambda k: tuple(range(-k, 0))
    mixed = np.einsum("...iab,...bc->...iac", s, gi)
    quat = (np.einsum("...ima,...jan->...ijmn", mixed, mixed)
            + np.einsum("ij,...mn->...ijmn", np.eye(3), np.broadcast_to(np.eye(4), g.shape))
            - np.einsum("ijk,...kmn->...ijmn", EPS3, mixed))
    eps_low = sd[..., None, None, None, None] * EPS4
    ss = (np.einsum("...imn,...irs->...mnrs", s, s) - np.einsum("...mr,...ns->...mnrs", g, g)
          + np.einsum("...ms,...nr->...mnrs", g, g) - eps_low)
    t = np.einsum("...imr,...ns->...imnrs", s, g)
    u = np.einsum("...ims,...nr->...imnrs", s, g)
    sse = (np.einsum("ijk,...jmn,...krs->...imnrs", EPS3, s, s, optimize=True)
           + (t - np.swapaxes(t, -4, -3)) - (u - np.swapaxes(u, -4, -3)))
    # eps^{mnrs} Sigma^i_as = 3 delta_a^[r Sigma^i mn], stored as (i, a, m, n, r)
    s_up = np.einsum("...iab,...am,...bn->...imn", s, gi, gi, optimize=True)
    lhs = np.einsum("mnrs,...ias->...iamnr", EPS4, s) / sd[..., None, None, None, None, None]
    delta_sigma = np.einsum("ar,...imn->...iarmn", np.eye(4), s_up)
    es = lhs - 3.0 * _antisym3(delta_sigma)
    return {"algebra": np.max(np.abs(quat), axis=axes(4)),
            "sigma_sigma": np.max(np.abs(ss), axis=axes(4)),
            "sigma_sigma_epsilon": np.max(np.abs(sse), axis=axes(5)),
            "epsilon_sigma": np.max(np.abs(es), axis=axes(5))}
