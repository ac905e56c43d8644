"""Grid-level evaluation: Sigma -> metric -> A -> F, and the metric oracle.

First derivatives of Sigma are either exact (complex step on the analytic
geometry) or second-order finite differences; derivatives of A and of the
Christoffel symbols always use finite differences on the grid.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import curvature, frame_oracle, torsion
from .errors import NotOriented
from .grid import ChartGrid, exterior_d_from_partials, fd_partials
from .su2_structure import urbantke_metric, validate_field
from .tensor_core import Metric4

CENTER = (2, 2, 2, 2)


@dataclass
class SigmaFields:
    grid: ChartGrid
    s: np.ndarray
    ds: np.ndarray
    metric: Metric4
    vol: np.ndarray
    a: np.ndarray
    da: np.ndarray
    f: np.ndarray
    derivatives: str

    @property
    def dsig(self):
        return exterior_d_from_partials(self.ds)

    def at(self, index):
        """Pointwise views at a grid index."""
        idx = tuple(index)
        m = Metric4(self.metric.g[idx], self.metric.g_inv[idx], self.metric.sqrt_det[idx])
        return dict(s=self.s[idx], ds=self.ds[idx], metric=m, a=self.a[idx], f=self.f[idx])


def sigma_fields(s, grid, ds=None, route="explicit", validate=True, tol=1e-8):
    """Run the torsion/curvature pipeline on sampled Sigma values."""
    s = np.asarray(s, dtype=float)
    if validate:
        resid, oriented = validate_field(s, tol)
        if not oriented:
            raise NotOriented("sampled triple is not oriented everywhere")
    derivatives = "exact" if ds is not None else "fd"
    if ds is None:
        ds = fd_partials(s, grid)
    metric, vol = urbantke_metric(s)
    a = torsion.torsion_from_partials(s, metric, ds, route)
    da = fd_partials(a, grid)
    f = curvature.curvature_f(a, da)
    return SigmaFields(grid, s, ds, metric, vol, a, da, f, derivatives)


def geometry_fields(geom, grid, derivatives="exact", route="explicit"):
    geom.check_grid(grid)
    x = grid.coords()
    s = geom.sigma_at(x)
    ds = geom.dsigma_at(x) if derivatives == "exact" else None
    return sigma_fields(s, grid, ds, route)


@dataclass
class OracleFields:
    grid: ChartGrid
    metric: Metric4
    gamma: np.ndarray
    riemann: np.ndarray
    w: Optional[np.ndarray] = None
    f_spin: Optional[np.ndarray] = None
    coframe: Optional[np.ndarray] = None


def oracle_from_metric(g, grid, dg=None):
    metric = Metric4.from_array(g)
    if dg is None:
        dg = fd_partials(g, grid)
    gamma = frame_oracle.christoffel(metric, dg)
    riem = frame_oracle.riemann(gamma, fd_partials(gamma, grid))
    return OracleFields(grid, metric, gamma, riem)


def oracle_fields(geom, grid, derivatives="exact", with_frame=True):
    """Christoffel/Riemann of the reference metric, plus the spin connection of the coframe."""
    geom.check_grid(grid)
    x = grid.coords()
    e = geom.coframe_at(x)
    g = np.einsum("...Im,...In->...mn", e, e)
    if derivatives == "exact":
        de = geom.dcoframe_at(x)
        dg = np.einsum("...aIm,...In->...amn", de, e)
        dg = dg + np.swapaxes(dg, -1, -2)
    else:
        de = fd_partials(e, grid)
        dg = fd_partials(g, grid)
    out = oracle_from_metric(g, grid, dg)
    if with_frame:
        w = frame_oracle.spin_connection(e, de)
        out.w = w
        out.f_spin = frame_oracle.spin_curvature(w, fd_partials(w, grid))
        out.coframe = e
    return out


def windowed(geom, grid, index, derivatives="exact", oracle=False, halo=2):
    """Pipeline (and optionally oracle) on a small window; values at its centre equal full-grid values."""
    win = grid.window(index, halo)
    sf = geometry_fields(geom, win, derivatives)
    of = oracle_fields(geom, win, derivatives) if oracle else None
    return sf, of


def center(arr, halo=2):
    return arr[(halo,) * 4]
