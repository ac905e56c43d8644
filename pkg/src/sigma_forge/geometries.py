"""Analytic geometries with closed-form coframes and reference data.

Every coframe function accepts points of shape ``(..., 4)`` and is written with
operations that are analytic in the coordinates (no ``abs``, no conjugation),
so exact first derivatives follow from a complex step.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ChartViolation
from .grid import ChartGrid, SampledField
from .su2_structure import canonical_sigma, sigma_from_coframe

COMPLEX_STEP = 1e-30
_S_CAN = canonical_sigma()


def complex_step_jacobian(fn, x):
    """d fn / d x^alpha for every alpha; the new axis follows the batch axes."""
    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    cols = []
    for alpha in range(4):
        xc = x.astype(complex)
        xc[..., alpha] += 1j * COMPLEX_STEP
        cols.append(np.imag(fn(xc)) / COMPLEX_STEP)
    return np.stack(cols, axis=len(batch))


@dataclass
class GeometryEntry:
    name: str
    coframe_fn: Callable
    lo: tuple
    hi: tuple
    periodic: bool
    valid_lo: tuple
    valid_hi: tuple
    lam: Optional[float] = None
    is_hyperkahler: bool = False
    is_kahler: bool = False
    params: dict = field(default_factory=dict)
    rotation_fn: Optional[Callable] = None
    kahler_form_fn: Optional[Callable] = None
    default_n: int = 12

    def coframe_at(self, x):
        return self.coframe_fn(np.asarray(x))

    def sigma_at(self, x):
        return sigma_from_coframe(self.coframe_at(x))

    def metric_at(self, x):
        e = self.coframe_at(x)
        return np.einsum("...Im,...In->...mn", e, e)

    def dsigma_at(self, x):
        """Exact partials, shape ``(..., 4, 3, 4, 4)`` with the derivative axis first."""
        return complex_step_jacobian(self.sigma_at, x)

    def dcoframe_at(self, x):
        return complex_step_jacobian(self.coframe_at, x)

    def chart(self, n=None, periodic=None):
        return ChartGrid(self.lo, self.hi, (n or self.default_n,) * 4,
                         self.periodic if periodic is None else periodic)

    def check_grid(self, grid):
        if self.periodic and grid.periodic:
            return
        x_lo = np.array(grid.lo)
        x_hi = np.array(grid.lo) + grid.spacing * (np.array(grid.n) - 1)
        if np.any(x_lo < np.array(self.valid_lo) - 1e-12) or np.any(x_hi > np.array(self.valid_hi) + 1e-12):
            raise ChartViolation(f"grid leaves the valid chart of {self.name}")

    def sample(self, grid, what="sigma"):
        self.check_grid(grid)
        x = grid.coords()
        fn = {"sigma": self.sigma_at, "coframe": self.coframe_at, "metric": self.metric_at}[what]
        return SampledField(grid, np.ascontiguousarray(fn(x)), what, {"geometry": self.name, **self.params})

    def describe(self):
        return {"name": self.name, "lo": list(self.lo), "hi": list(self.hi), "periodic": self.periodic,
                "lambda": self.lam, "is_hyperkahler": self.is_hyperkahler, "is_kahler": self.is_kahler,
                "params": dict(self.params), "default_n": self.default_n}


def _eye_like(x):
    return np.broadcast_to(np.eye(4, dtype=np.result_type(x, float)), x.shape[:-1] + (4, 4)).copy()


def flat():
    return GeometryEntry("flat", _eye_like, (0.0,) * 4, (2 * np.pi,) * 4, True,
                         (-np.inf,) * 4, (np.inf,) * 4, lam=0.0, is_hyperkahler=True)


def _half_angle_lift(axis, theta):
    """SO(4) matrix cos(t/2) + sin(t/2) S_can^axis, lifting a rotation about ``axis``."""
    c = np.cos(0.5 * theta)[..., None, None]
    s = np.sin(0.5 * theta)[..., None, None]
    return c * np.eye(4) + s * _S_CAN[axis]


def _axis_rotation(axis, theta):
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros(theta.shape + (3, 3), dtype=np.result_type(theta, float))
    j, k = (axis + 1) % 3, (axis + 2) % 3
    out[..., axis, axis] = 1.0
    out[..., j, j] = c
    out[..., k, k] = c
    out[..., k, j] = s
    out[..., j, k] = -s
    return out


def _twist_angles(x, freq):
    x1, x2, x3, x4 = (x[..., m] for m in range(4))
    return (0.6 * np.sin(freq * x1 + x3),
            0.4 * np.cos(x2 - freq * x4),
            0.5 * np.sin(x1 + x2 + freq * x4))


def gauge_twisted_flat(freq=1):
    """Flat metric with Sigma = R(x) Sigma_can, R = R3(gamma) R2(beta) R1(alpha)."""
    freq = int(freq)

    def coframe(x):
        a, b, c = _twist_angles(x, freq)
        return _half_angle_lift(2, c) @ _half_angle_lift(1, b) @ _half_angle_lift(0, a)

    def rotation(x):
        a, b, c = _twist_angles(np.asarray(x), freq)
        return _axis_rotation(2, c) @ _axis_rotation(1, b) @ _axis_rotation(0, a)

    return GeometryEntry("gauge_twisted_flat", coframe, (0.0,) * 4, (2 * np.pi,) * 4, True,
                         (-np.inf,) * 4, (np.inf,) * 4, lam=0.0, params={"freq": freq},
                         rotation_fn=rotation)


def round_s4(r=1.0):
    """Stereographic chart of the round 4-sphere of radius r."""
    r = float(r)

    def coframe(x):
        conf = 2.0 * r * r / (r * r + np.sum(x * x, axis=-1))
        return conf[..., None, None] * np.eye(4)

    return GeometryEntry("round_s4", coframe, (-0.4 * r,) * 4, (0.4 * r,) * 4, False,
                         (-2.0 * r,) * 4, (2.0 * r,) * 4, lam=3.0 / r ** 2, params={"r": r})


def _fs_theta(x, ell):
    """Unitary coframe of the Fubini-Study metric as (re, im) pairs of 1-forms.

    Holomorphic coordinates z1 = x1 + i x2, z2 = x4 - i x3.
    """
    zr = np.stack([x[..., 0], x[..., 3]], axis=-1)
    zi = np.stack([x[..., 1], -x[..., 2]], axis=-1)
    dz_re = np.zeros((2, 4))
    dz_im = np.zeros((2, 4))
    dz_re[0, 0], dz_im[0, 1] = 1.0, 1.0
    dz_re[1, 3], dz_im[1, 2] = 1.0, -1.0
    rho = 1.0 + np.sum(zr * zr + zi * zi, axis=-1) / ell ** 2
    sq = np.sqrt(rho)
    c = 1.0 / (sq * (1.0 + sq))
    # conj(z) . dz as a complex 1-form
    w_re = np.einsum("...a,am->...m", zr, dz_re) + np.einsum("...a,am->...m", zi, dz_im)
    w_im = np.einsum("...a,am->...m", zr, dz_im) - np.einsum("...a,am->...m", zi, dz_re)
    # z_a * w
    t_re = zr[..., :, None] * w_re[..., None, :] - zi[..., :, None] * w_im[..., None, :]
    t_im = zr[..., :, None] * w_im[..., None, :] + zi[..., :, None] * w_re[..., None, :]
    k = (c / ell ** 2)[..., None, None]
    pref = (1.0 / sq)[..., None, None]
    return pref * (dz_re - k * t_re), pref * (dz_im - k * t_im)


def fubini_study(scale=1.0):
    """Affine chart of CP^2 with Fubini-Study metric of scale L; Sigma^3 is minus the Kahler form."""
    ell = float(scale)

    def coframe(x):
        th_re, th_im = _fs_theta(x, ell)
        return np.stack([th_re[..., 0, :], th_im[..., 0, :], -th_im[..., 1, :], th_re[..., 1, :]], axis=-2)

    def kahler_form(x):
        th_re, th_im = _fs_theta(np.asarray(x), ell)
        return np.sum(th_re[..., :, :, None] * th_im[..., :, None, :]
                      - th_im[..., :, :, None] * th_re[..., :, None, :], axis=-3)

    return GeometryEntry("fubini_study", coframe, (-0.25 * ell,) * 4, (0.25 * ell,) * 4, False,
                         (-0.5 * ell,) * 4, (0.5 * ell,) * 4, lam=6.0 / ell ** 2, is_kahler=True,
                         params={"scale": ell}, kahler_form_fn=kahler_form)


def gibbons_hawking(m=1.0):
    """Single-centre Gibbons-Hawking space, V = 1 + m / (2|y|), coordinates (y1, y2, y3, tau)."""
    m = float(m)

    def coframe(x):
        y1, y2, y3 = x[..., 0], x[..., 1], x[..., 2]
        r = np.sqrt(y1 * y1 + y2 * y2 + y3 * y3)
        v = 1.0 + m / (2.0 * r)
        pref = 0.5 * m / (r * (r + y3))
        e = np.zeros(x.shape[:-1] + (4, 4), dtype=np.result_type(x, float))
        sv = np.sqrt(v)
        for i in range(3):
            e[..., i, i] = sv
        e[..., 3, 0] = pref * y2 / sv
        e[..., 3, 1] = -pref * y1 / sv
        e[..., 3, 3] = 1.0 / sv
        return e

    return GeometryEntry("gibbons_hawking", coframe, (-0.5, -0.5, 1.5, 0.0), (0.5, 0.5, 2.5, 1.0), False,
                         (-2.0, -2.0, 0.5, -np.inf), (2.0, 2.0, 5.0, np.inf), lam=0.0,
                         is_hyperkahler=True, params={"m": m})


class TrigCoframe:
    """e(x) = 1 + sum_m C_m cos(k_m . x + phi_m) with integer wave vectors (periodic on [0, 2pi]^4)."""

    def __init__(self, coeffs, wavevectors, phases):
        self.coeffs = np.asarray(coeffs, float)
        self.wavevectors = np.asarray(wavevectors, float)
        self.phases = np.asarray(phases, float)

    @classmethod
    def random(cls, seed, amp, modes=2):
        rng = np.random.default_rng(seed)
        k = np.zeros((modes, 4), int)
        for mode in range(modes):
            while not k[mode].any():
                k[mode] = rng.integers(-1, 2, size=4)
        coeffs = amp * rng.standard_normal((modes, 4, 4)) / 2.0
        phases = rng.uniform(0.0, 2 * np.pi, size=modes)
        return cls(coeffs, k, phases)

    @property
    def n_params(self):
        return self.coeffs.size

    def params(self):
        return self.coeffs.ravel().copy()

    def with_params(self, p):
        return TrigCoframe(np.asarray(p, float).reshape(self.coeffs.shape), self.wavevectors, self.phases)

    def __call__(self, x):
        phase = np.einsum("...m,km->...k", x, self.wavevectors) + self.phases
        return np.eye(4) + np.einsum("...k,kIJ->...IJ", np.cos(phase), self.coeffs)


def coframe_perturbed_flat(seed=0, amp=0.05, modes=2):
    trig = TrigCoframe.random(seed, amp, modes)
    entry = GeometryEntry("coframe_perturbed_flat", trig, (0.0,) * 4, (2 * np.pi,) * 4, True,
                          (-np.inf,) * 4, (np.inf,) * 4, lam=None, params={"seed": int(seed), "amp": float(amp)})
    entry.trig = trig
    return entry


def from_trig(trig, name="trig_coframe"):
    entry = GeometryEntry(name, trig, (0.0,) * 4, (2 * np.pi,) * 4, True, (-np.inf,) * 4, (np.inf,) * 4)
    entry.trig = trig
    return entry


def gauge_rotated(entry, freq=1, scale=1.0):
    """Same metric as ``entry`` with Sigma replaced by R(x) Sigma.

    R is the twist of gauge_twisted_flat with its angles multiplied by ``scale``.
    """
    freq = int(freq)

    def coframe(x):
        a, b, c = (scale * t for t in _twist_angles(x, freq))
        lift = _half_angle_lift(2, c) @ _half_angle_lift(1, b) @ _half_angle_lift(0, a)
        return lift @ entry.coframe_fn(x)

    def rotation(x):
        a, b, c = (scale * t for t in _twist_angles(np.asarray(x), freq))
        return _axis_rotation(2, c) @ _axis_rotation(1, b) @ _axis_rotation(0, a)

    return GeometryEntry(f"{entry.name}+so3", coframe, entry.lo, entry.hi, entry.periodic,
                         entry.valid_lo, entry.valid_hi, lam=entry.lam,
                         params=dict(entry.params, so3_freq=freq, so3_scale=float(scale)), rotation_fn=rotation)


def _periodic_shift(seed, modes=2):
    rng = np.random.default_rng(seed)
    k = rng.integers(-1, 2, size=(modes, 4))
    k[~k.any(axis=1), 0] = 1
    amp = rng.standard_normal((modes, 4))
    ph = rng.uniform(0.0, 2 * np.pi, size=modes)
    return k.astype(float), amp, ph


def diffeo_pulled(entry, eps, seed=0):
    """Pullback of ``entry`` by x -> x + eps X(x) for a smooth periodic vector field X."""
    if not entry.periodic:
        raise ChartViolation("pullbacks are only defined here for periodic charts")
    k, amp, ph = _periodic_shift(seed)

    def coframe(x):
        phase = np.einsum("...m,km->...k", x, k) + ph
        y = x + eps * np.einsum("...k,kn->...n", np.sin(phase), amp)
        jac = np.eye(4) + eps * np.einsum("...k,kn,km->...nm", np.cos(phase), amp, k, optimize=True)
        return entry.coframe_fn(y) @ jac

    return GeometryEntry(f"{entry.name}+diffeo", coframe, entry.lo, entry.hi, True, entry.valid_lo,
                         entry.valid_hi, lam=entry.lam, params=dict(entry.params, diffeo_eps=float(eps)))


CATALOG = {
    "flat": flat,
    "gauge_twisted_flat": gauge_twisted_flat,
    "round_s4": round_s4,
    "fubini_study": fubini_study,
    "gibbons_hawking": gibbons_hawking,
    "coframe_perturbed_flat": coframe_perturbed_flat,
}


def get_geometry(name, **params):
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown geometry {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    return ctor(**params)
