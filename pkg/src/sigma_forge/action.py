"""Action functionals on sampled Sigma fields.

* second-order action S[Sigma] = -(1/2) int eps^ijk Sigma^i ^ A^j ^ A^k with A = A(Sigma);
* Plebanski action in (Sigma, A, Psi) and its Euler-Lagrange residuals;
* the linearized Lagrangians around the flat canonical triple;
* a descent stepper on the integrated anti-self-dual curvature.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import curvature, kernels
from .errors import ChartViolation, NonPeriodicDomain, NotOriented, StepRejected
from .grid import ChartGrid, exterior_d_from_partials, fd_partials
from .pipeline import SigmaFields, sigma_fields
from .su2_structure import canonical_sigma, urbantke_metric, wedge_gram
from .tensor_core import EPS3, EPS4, hodge_2
from .torsion import compat_residual, torsion_explicit

# ------------------------------------------------------------ 4-form densities


def sigma_a_a(s, a, b):
    """Coefficient of Sigma ^ a ^ b: (1/2) eps^{mnrs} Sigma_mn a_r b_s."""
    return 0.5 * np.einsum("mnrs,...mn,...r,...s->...", EPS4, s, a, b, optimize=True)


def eps_sigma_aa_density(s, a):
    """Coefficient of eps^ijk Sigma^i ^ A^j ^ A^k."""
    return 0.5 * np.einsum("ijk,mnrs,...imn,...jr,...ks->...", EPS3, EPS4, s, a, a, optimize=True)


def two_two_density(p, q):
    """Coefficient of sum_i P^i ^ Q^i."""
    return 0.25 * np.einsum("mnrs,...imn,...irs->...", EPS4, p, q, optimize=True)


def integrate(density, grid: ChartGrid, warn=False):
    if warn and not grid.periodic:
        warnings.warn("integration identities only hold up to boundary terms on a bounded chart",
                      NonPeriodicDomain, stacklevel=2)
    return float(np.sum(density * grid.quadrature_weights()))


def _d_one_form(a, da):
    """(dA)^i_mn from partials ``da[..., alpha, i, nu]``."""
    d = np.swapaxes(da, -3, -2)
    return d - np.swapaxes(d, -1, -2)


# ------------------------------------------------------------ second-order action


def action_second_order(fields: SigmaFields):
    return integrate(-0.5 * eps_sigma_aa_density(fields.s, fields.a), fields.grid, warn=True)


def action_of_geometry(geom, grid, derivatives="fd"):
    """S for a catalog geometry without building F (cheaper than the full pipeline)."""
    geom.check_grid(grid)
    x = grid.coords()
    s = geom.sigma_at(x)
    ds = geom.dsigma_at(x) if derivatives == "exact" else fd_partials(s, grid)
    metric, _ = urbantke_metric(s)
    a = torsion_explicit(s, metric, ds)
    return integrate(-0.5 * eps_sigma_aa_density(s, a), grid, warn=True)


@dataclass
class ActionIdentities:
    action: float
    ibp: float            # int Sigma^i ^ dA^i + int dSigma^i ^ A^i
    equivalence: float    # int Sigma^i ^ F^i + (1/2) int eps Sigma A A
    sigma_f: float
    sigma_da: float
    dsigma_a: float


def action_identities(fields: SigmaFields):
    grid = fields.grid
    s, a = fields.s, fields.a
    sigma_da = integrate(two_two_density(s, _d_one_form(a, fields.da)), grid)
    # dSigma ^ A = -A ^ dSigma, and A ^ T has coefficient A_m c^m for packed T
    dsigma_a = -integrate(np.einsum("...im,...im->...", a, fields.dsig), grid)
    sigma_f = integrate(two_two_density(s, fields.f), grid)
    eps_saa = integrate(eps_sigma_aa_density(s, a), grid)
    return ActionIdentities(-0.5 * eps_saa, sigma_da + dsigma_a, sigma_f + 0.5 * eps_saa,
                            sigma_f, sigma_da, dsigma_a)


# ------------------------------------------------------------ Plebanski


@dataclass
class PlebanskiData:
    grid: ChartGrid
    sigma: np.ndarray
    a: np.ndarray
    psi: np.ndarray
    lam: float
    dsigma: np.ndarray = None  # partials; finite differences when absent

    def __post_init__(self):
        tr = np.trace(self.psi, axis1=-2, axis2=-1)
        if np.max(np.abs(tr), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(self.psi), initial=0.0)):
            raise ValueError("Psi must be traceless")


def _pleb_curvature(p: PlebanskiData):
    return curvature.curvature_f(p.a, fd_partials(p.a, p.grid))


def action_plebanski(p: PlebanskiData):
    f = _pleb_curvature(p)
    mult = p.psi + (p.lam / 3.0) * np.eye(3)
    gram = wedge_gram(p.sigma)
    density = two_two_density(p.sigma, f) - 0.5 * np.einsum("...ij,...ij->...", mult, gram)
    return integrate(density, p.grid)


@dataclass
class PlebanskiResiduals:
    eq_a: np.ndarray
    eq_sigma: np.ndarray
    eq_psi: np.ndarray

    def norms(self, grid):
        w = grid.quadrature_weights()
        total = float(np.sum(w))
        rms = lambda r: float(np.sqrt(np.sum(w * np.sum(r.reshape(r.shape[:4] + (-1,)) ** 2, axis=-1)) / total))
        return {"eq_A": rms(self.eq_a), "eq_Sigma": rms(self.eq_sigma), "eq_Psi": rms(self.eq_psi)}


def plebanski_el_residuals(p: PlebanskiData):
    ds = p.dsigma if p.dsigma is not None else fd_partials(p.sigma, p.grid)
    eq_a = compat_residual(p.sigma, p.a, exterior_d_from_partials(ds))
    f = _pleb_curvature(p)
    eq_sigma = f - np.einsum("...ij,...jmn->...imn", p.psi + (p.lam / 3.0) * np.eye(3), p.sigma)
    gram = wedge_gram(p.sigma)
    eq_psi = gram - np.eye(3) * (np.trace(gram, axis1=-2, axis2=-1) / 3.0)[..., None, None]
    return PlebanskiResiduals(eq_a, eq_sigma, eq_psi)


def on_shell_plebanski(fields: SigmaFields, lam, psi=None, keep_partials=False):
    """Plebanski data with A the torsion of Sigma.

    By default the residuals re-derive dSigma on the grid, so a torsion built
    from exact partials leaves an O(h^2) eq_A instead of an algebraic zero.
    """
    if psi is None:
        psi = np.zeros(fields.s.shape[:-3] + (3, 3))
    ds = fields.ds if keep_partials else None
    return PlebanskiData(fields.grid, fields.s, fields.a, psi, float(lam), ds)


def volume_integral(fields: SigmaFields):
    return integrate(fields.vol, fields.grid)


# ------------------------------------------------------------ linearized theory


@dataclass
class LinearizedPerturbation:
    h: np.ndarray   # (..., 4, 4)
    xi: np.ndarray  # (..., 3)
    remainder: np.ndarray = None


def embed_perturbation(h, xi, background=None):
    """sigma^i = 2 h_[m^a Sigma^i_|a|n] + 2 eps^ijk Sigma^j_mn xi^k on a flat background."""
    sig = canonical_sigma() if background is None else background
    t = np.einsum("...ma,ian->...imn", h, sig)
    return (t - np.swapaxes(t, -1, -2)) + 2.0 * np.einsum("ijk,jmn,...k->...imn", EPS3, sig, xi, optimize=True)


def perturbation_decompose(sigma_pert, background=None):
    sig = canonical_sigma() if background is None else background
    t = np.einsum("...ima,ian->...mn", sigma_pert, sig)
    h = -0.25 * (t + np.swapaxes(t, -1, -2)) \
        - np.eye(4) * (np.einsum("imn,...imn->...", sig, sigma_pert) / 12.0)[..., None, None]
    xi = -np.einsum("ijk,jmn,...kmn->...i", EPS3, sig, sigma_pert, optimize=True) / 16.0
    rem = sigma_pert - embed_perturbation(h, xi, sig)
    return LinearizedPerturbation(h, xi, rem)


def _central(v, grid):
    return fd_partials(v, grid)


def linearized_densities(pert: LinearizedPerturbation, grid: ChartGrid):
    """Pointwise L_GR and L' with central differences for every derivative."""
    sig = canonical_sigma()
    h, xi = pert.h, pert.xi
    dh = _central(h, grid)                                 # (..., m, n, r) = d_m h_nr
    tr = np.trace(h, axis1=-2, axis2=-1)
    dtr = _central(tr, grid)
    div = np.einsum("...mmn->...n", dh)                    # d^m h_mn
    ddiv = np.einsum("...nn->...", _central(div, grid))    # d^m d^n h_mn
    dxi = _central(xi, grid)                               # (..., a, i)
    t_dh2 = np.einsum("...mnr,...mnr->...", dh, dh)
    t_dtr2 = np.einsum("...m,...m->...", dtr, dtr)
    t_hddh = tr * ddiv
    t_div2 = np.einsum("...n,...n->...", div, div)
    t_dxi2 = np.einsum("...ai,...ai->...", dxi, dxi)
    t_mix = np.einsum("...n,...ai,ian->...", div, dxi, sig, optimize=True)
    l_gr = 0.5 * t_dh2 - 0.5 * t_dtr2 - t_hddh - t_div2
    l_prime = -0.25 * t_dtr2 - 0.5 * t_hddh - 0.25 * t_div2 - t_dxi2 + t_mix
    return l_gr, l_prime


def linearized_lagrangians(pert: LinearizedPerturbation, grid: ChartGrid):
    if not grid.periodic:
        warnings.warn("linearized invariances hold modulo boundary terms", NonPeriodicDomain, stacklevel=2)
    l_gr, l_prime = linearized_densities(pert, grid)
    return {"l_gr": integrate(l_gr, grid), "l_prime": integrate(l_prime, grid)}


def diffeo_variation(x_field, grid):
    """delta h = D_(m X_n), delta xi^i = (1/4) Sigma^i^mn D_m X_n."""
    dx = _central(x_field, grid)                           # (..., m, n) = d_m X_n
    dh = 0.5 * (dx + np.swapaxes(dx, -1, -2))
    dxi = 0.25 * np.einsum("imn,...mn->...i", canonical_sigma(), dx)
    return LinearizedPerturbation(dh, dxi)


def random_periodic_field(rng, grid, shape, modes=3):
    """Smooth random trigonometric field on a periodic grid."""
    x = grid.coords()
    out = np.zeros(grid.n + tuple(shape))
    for _ in range(modes):
        k = rng.integers(-2, 3, size=4)
        amp = rng.standard_normal(shape)
        ph = rng.uniform(0, 2 * np.pi)
        out += np.cos(x @ k + ph)[(...,) + (None,) * len(shape)] * amp
    return out


# ------------------------------------------------------------ descent stepper


def _asd_density(fields: SigmaFields):
    """|F^-|^2 vol, with F^- = (F - *F)/2 for the metric of Sigma."""
    m = fields.metric
    metric_b = type(m)(m.g[..., None, :, :], m.g_inv[..., None, :, :], m.sqrt_det[..., None])
    asd = 0.5 * (fields.f - hodge_2(metric_b, fields.f))
    return curvature.e_norm(fields.s, m, asd) ** 2 * fields.vol


def einstein_objective(trig, grid):
    """int |F^-|^2 vol for the coframe ``trig`` sampled on a periodic grid.

    A is taken as the self-dual part of the spin connection, which equals the
    torsion of the triple and needs finite differences of e only.
    """
    e = trig(grid.coords())
    det = np.linalg.det(e)
    if np.min(det) <= 0.0:
        raise NotOriented("coframe left the oriented region (det e <= 0 somewhere)")
    inv = np.linalg.inv(e)
    a = kernels.coframe_torsion(e, inv, fd_partials(e, grid))
    f = curvature.curvature_f(a, fd_partials(a, grid))
    return integrate(kernels.asd_density(inv, det, f), grid)


@dataclass
class FlowRecord:
    action_before: float
    action_after: float
    einstein_norm: float
    step: float
    retries: int
    accepted: bool = True
    gradient_norm: float = 0.0
    extra: dict = field(default_factory=dict)


def objective_gradient(trig, grid, base=None, eps=1e-6):
    p0 = trig.params()
    base = einstein_objective(trig, grid) if base is None else base
    grad = np.empty_like(p0)
    for k in range(p0.size):
        p = p0.copy()
        p[k] += eps
        grad[k] = (einstein_objective(trig.with_params(p), grid) - base) / eps
    return grad


def flow_step(trig, grid, step, max_halvings=20, eps=1e-6):
    """One descent step on int |F^-|^2 over the coframe coefficients of ``trig``."""
    if not grid.periodic:
        raise ChartViolation("the flow needs a periodic grid")
    before = einstein_objective(trig, grid)
    if step == 0.0:
        return trig, FlowRecord(before, before, float(np.sqrt(before)), 0.0, 0)
    grad = objective_gradient(trig, grid, before, eps)
    p0 = trig.params()
    trial = float(step)
    for retry in range(max_halvings + 1):
        cand = trig.with_params(p0 - trial * grad)
        try:
            after = einstein_objective(cand, grid)
        except NotOriented:
            after = np.inf   # an orientation flip counts as a rejected step
        if after <= before:
            return cand, FlowRecord(before, after, float(np.sqrt(after)), trial, retry,
                                    gradient_norm=float(np.linalg.norm(grad)))
        trial *= 0.5
    raise StepRejected(f"objective did not decrease after {max_halvings} halvings")


def flow(trig, grid, steps, step):
    records = []
    for _ in range(steps):
        trig, rec = flow_step(trig, grid, step)
        records.append(rec)
    return trig, records


def linearized_suite(seed, grid: ChartGrid):
    """Invariance battery for the linearized Lagrangians on a periodic grid.

    Returns the base values, the relative change under a pure-diffeomorphism
    shift, and the changes under an SO(3) shift of xi by a unit-RMS field.
    """
    rng = np.random.default_rng(seed)
    h = random_periodic_field(rng, grid, (4, 4))
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    xi = random_periodic_field(rng, grid, (3,))
    base = LinearizedPerturbation(h, xi)
    ref = linearized_lagrangians(base, grid)
    var = diffeo_variation(random_periodic_field(rng, grid, (4,)), grid)
    moved = linearized_lagrangians(LinearizedPerturbation(h + var.h, xi + var.xi), grid)
    phi = random_periodic_field(rng, grid, (3,))
    phi /= np.sqrt(np.mean(np.sum(phi ** 2, axis=-1)))
    shifted = linearized_lagrangians(LinearizedPerturbation(h, xi + phi), grid)
    rel = lambda new, old: abs(new - old) / max(abs(old), np.finfo(float).tiny)
    return {
        "l_gr": ref["l_gr"],
        "l_prime": ref["l_prime"],
        "diffeo_rel_l_gr": rel(moved["l_gr"], ref["l_gr"]),
        "diffeo_rel_l_prime": rel(moved["l_prime"], ref["l_prime"]),
        "gauge_abs_l_gr": abs(shifted["l_gr"] - ref["l_gr"]),
        "gauge_rel_l_prime": rel(shifted["l_prime"], ref["l_prime"]),
    }
