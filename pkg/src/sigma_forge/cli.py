"""Command-line interface: ``sigma-forge <command> [options]``.

Reports go to standard output as JSON (schema ``report_v1``); diagnostics go
to standard error. Exit codes: 0 success, 1 a reported check failed,
2 invalid input (validation, chart or argument errors), 3 I/O or format errors.
"""
import argparse
import sys
import warnings

import numpy as np

from . import _accel, action, curvature, irrep_decomp, pipeline, torsion
from .errors import (ChartViolation, DegenerateVolume, FormatError, GridTooSmall, NonInvertibleMetric,
                     NotOriented, SigmaForgeError, SingularCoframe, StepRejected)
from .geometries import CATALOG, coframe_perturbed_flat, get_geometry
from .grid import ChartGrid, SampledField, read_sgf1, write_sgf1
from .report import RNG_ALGORITHM, Report
from .su2_structure import sigma_from_coframe, urbantke_metric, validate_field
from .tensor_core import hodge_2

# Above this many points the curvature pipeline is evaluated in a window at the chart centre.
FULL_GRID_LIMIT = 20 ** 4
ROUNDOFF_FLOOR = 1e-12

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3


class UsageError(SigmaForgeError):
    pass


# ------------------------------------------------------------ sources


def _parse_params(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            out[key] = int(value)
        except ValueError:
            try:
                out[key] = float(value)
            except ValueError:
                out[key] = value
    return out


class Source:
    """Where Sigma comes from: a catalog geometry on a grid, or an SGF1 file."""

    def __init__(self, args, default_derivatives="exact"):
        self.geom = None
        self.derivatives = getattr(args, "derivatives", None)
        if getattr(args, "input", None):
            field = read_sgf1(args.input)
            values = field.values
            if field.kind == "coframe":
                values = sigma_from_coframe(values)
            elif field.kind != "sigma":
                raise FormatError(f"expected a sigma or coframe payload, got {field.kind!r}")
            self.grid = field.grid
            self.s = np.ascontiguousarray(values, dtype=float)
            self.derivatives = "fd"
            return
        try:
            self.geom = get_geometry(args.geometry or "flat", **_parse_params(args.param))
        except (KeyError, TypeError) as exc:
            raise UsageError(str(exc)) from exc
        periodic = True if args.periodic else None
        if args.bounds:
            lo, hi = args.bounds
            self.grid = ChartGrid.cube(lo, hi, args.grid or self.geom.default_n,
                                       self.geom.periodic if periodic is None else periodic)
        else:
            self.grid = self.geom.chart(args.grid, periodic)
        self.geom.check_grid(self.grid)
        self.derivatives = self.derivatives or default_derivatives
        self.s = self.geom.sigma_at(self.grid.coords())

    def describe(self):
        out = {"grid": self.grid.header(), "derivatives": self.derivatives, "quadrature": self.grid.quadrature}
        if self.geom is not None:
            out["geometry"] = self.geom.name
            out["params"] = dict(self.geom.params)
        return out

    def fields(self, validate=True):
        ds = self.geom.dsigma_at(self.grid.coords()) if self.geom is not None and self.derivatives == "exact" else None
        return pipeline.sigma_fields(self.s, self.grid, ds, validate=validate)


def _add_source(p, grid_default=None):
    p.add_argument("--geometry", choices=sorted(CATALOG), help="catalog geometry (default flat)")
    p.add_argument("--input", metavar="FILE.sgf", help="SGF1 file with a sigma or coframe payload")
    p.add_argument("--grid", type=int, default=grid_default, metavar="N", help="points per axis")
    p.add_argument("--bounds", type=float, nargs=2, metavar=("LO", "HI"), help="cube chart bounds")
    p.add_argument("--periodic", action="store_true", default=None, help="treat the chart as periodic")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="geometry parameter")
    p.add_argument("--derivatives", choices=("exact", "fd"), help="first derivatives of Sigma")


def _inputs(args, source=None):
    skip = {"func", "threads", "command"}
    out = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if source is not None:
        out.update(source.describe())
    return out


def _max(x):
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


# ------------------------------------------------------------ commands


def cmd_validate(args):
    src = Source(args)
    rep = Report("validate", _inputs(args, src))
    resid, oriented = validate_field(src.s, args.tol)
    rep.metric("residual", resid)
    rep.metric("points", src.grid.size)
    rep.check("orthonormal", resid <= args.tol)
    rep.check("oriented", oriented)
    return rep, (EXIT_OK if rep.ok else EXIT_INVALID)


def cmd_metric(args):
    src = Source(args)
    rep = Report("metric", _inputs(args, src))
    metric, vol = urbantke_metric(src.s)
    star = hodge_2(type(metric)(metric.g[..., None, :, :], metric.g_inv[..., None, :, :],
                                metric.sqrt_det[..., None]), src.s)
    scale = max(_max(src.s), np.finfo(float).tiny)
    rep.metric("self_duality_residual", _max(star - src.s) / scale)
    rep.metric("vol_min", np.min(vol))
    rep.metric("vol_max", np.max(vol))
    rep.metric("det_g_min", np.min(metric.sqrt_det) ** 2)
    center = tuple(v // 2 for v in src.grid.n)
    for a in range(4):
        for b in range(a, 4):
            rep.metric(f"g_center_{a}{b}", metric.g[center][a, b])
    if src.geom is not None:
        ref = src.geom.metric_at(src.grid.coords())
        rep.metric("reference_metric_error", _max(metric.g - ref))
        rep.check("matches_reference", _max(metric.g - ref) <= args.tol * max(1.0, _max(ref)))
    rep.check("self_dual", rep.metrics["self_duality_residual"] <= args.tol)
    if args.output:
        write_sgf1(args.output, SampledField(src.grid, metric.g, "metric"))
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_torsion(args):
    src = Source(args)
    rep = Report("torsion", _inputs(args, src))
    f = src.fields(validate=True)
    a_j1 = torsion.torsion_from_partials(f.s, f.metric, f.ds, "j1")
    scale = max(1.0, _max(f.a))
    rep.metric("a_norm_max", _max(f.a))
    rep.metric("route_agreement", _max(f.a - a_j1))
    rep.metric("compat_residual", _max(torsion.compat_residual(f.s, f.a, f.dsig)))
    rep.check("routes_agree", rep.metrics["route_agreement"] <= args.tol * scale)
    rep.check("compatible", rep.metrics["compat_residual"] <= args.tol * scale)
    if args.output:
        write_sgf1(args.output, SampledField(src.grid, f.a, "gauge"))
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def _sample_mode(args, src):
    if args.sample != "auto":
        return args.sample
    return "all" if src.grid.size <= FULL_GRID_LIMIT or src.geom is None else "center"


def _curvature_data(args, src, oracle):
    """Pointwise arrays (s, metric, f, oracle) over the sampled region."""
    mode = _sample_mode(args, src)
    if mode == "center":
        if src.geom is None:
            raise UsageError("--sample center needs --geometry")
        index = tuple(v // 2 for v in src.grid.n)
        sf, of = pipeline.windowed(src.geom, src.grid, index, src.derivatives, oracle)
        c = pipeline.center
        s, f = c(sf.s)[None], c(sf.f)[None]
        metric = type(sf.metric)(c(sf.metric.g)[None], c(sf.metric.g_inv)[None], np.atleast_1d(c(sf.metric.sqrt_det)))
        orc = None
        if of is not None:
            orc = (c(of.metric.g)[None], c(of.riemann)[None])
        return mode, s, metric, f, orc
    flds = src.fields()
    orc = None
    if oracle:
        if src.geom is not None:
            of = pipeline.oracle_fields(src.geom, src.grid, src.derivatives, with_frame=False)
        else:
            of = pipeline.oracle_from_metric(flds.metric.g, src.grid)
        orc = (of.metric.g, of.riemann)
    return mode, flds.s, flds.metric, flds.f, orc


def cmd_curvature(args):
    src = Source(args)
    mode, s, metric, f, orc = _curvature_data(args, src, args.oracle)
    rep = Report("curvature", dict(_inputs(args, src), sample=mode))
    dec = curvature.decompose_f(s, metric, f)
    res = curvature.einstein_residual(s, metric, f)
    rep.metric("f_norm_max", np.max(res.f_norm))
    rep.metric("asd_norm_max", np.max(res.asd_norm))
    rep.metric("scalar_mean", np.mean(dec.s))
    rep.metric("lambda_fit_mean", np.mean(dec.lambda_fit))
    rep.metric("lambda_fit_min", np.min(dec.lambda_fit))
    rep.metric("lambda_fit_max", np.max(dec.lambda_fit))
    rep.metric("ricci_tf_max", _max(dec.ricci_tf))
    rep.metric("bianchi_residual", _max(curvature.bianchi_residual(s, f)))
    psi = dec.psi.reshape(-1, 3, 3)
    eig = np.linalg.eigvalsh(psi[len(psi) // 2])
    for k, v in enumerate(eig):
        rep.metric(f"psi_eig_{k}", v)
    lam = args.lambda_ if args.lambda_ is not None else (src.geom.lam if src.geom is not None else None)
    if lam is not None:
        rep.metric("lambda_reference", lam)
        rep.check("lambda_fit", abs(np.mean(dec.lambda_fit) - lam) <= args.lambda_tol * max(1.0, abs(lam)))
    if orc is not None:
        from .frame_oracle import ricci_scalar_weyl
        g_ref, riem = orc
        oc = ricci_scalar_weyl(riem, g_ref, s)
        rep.metric("oracle_ricci_diff", _max(curvature.ricci_from_f(s, metric, f) - oc.ricci))
        rep.metric("oracle_scalar_diff", _max(dec.s - oc.s))
        rep.metric("oracle_wplus_diff", _max(dec.psi - oc.wplus))
        rep.metric("riemann_f_identity", _max(curvature.riemann_f_identity(s, metric, f, riem)))
        rep.metric("oracle_lambda_mean", np.mean(oc.s) / 4.0)
        scale = max(1.0, _max(oc.ricci))
        rep.check("oracle_ricci", rep.metrics["oracle_ricci_diff"] <= args.oracle_tol * scale)
    if args.output:
        if mode != "all":
            raise UsageError("--output needs the full grid (--sample all)")
        write_sgf1(args.output, SampledField(src.grid, f, "curvature"))
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_einstein(args):
    src = Source(args)
    mode, s, metric, f, _ = _curvature_data(args, src, False)
    rep = Report("einstein", dict(_inputs(args, src), sample=mode))
    res = curvature.einstein_residual(s, metric, f, args.lambda_)
    f_norm = float(np.max(res.f_norm))
    rep.metric("asd_norm_max", np.max(res.asd_norm))
    rep.metric("f_norm_max", f_norm)
    rep.metric("asd_relative", np.max(res.asd_norm) / max(f_norm, np.finfo(float).tiny))
    rep.metric("trace_deviation_max", np.max(res.trace_dev))
    # the relative test is meaningless once F itself is at roundoff (flat, hyper-Kahler)
    rep.check("anti_self_dual_free", rep.metrics["asd_relative"] <= args.tol
              or rep.metrics["asd_norm_max"] <= ROUNDOFF_FLOOR)
    rep.check("lambda", np.max(res.trace_dev) <= args.lambda_tol * max(1.0, abs(args.lambda_)))
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def _generated_field(kind, op, s, g, rng):
    batch = s.shape[:-3]
    if kind == "random":
        shape = (3, 4) if op == "j1" else (3, 4, 4)
        out = rng.standard_normal(batch + shape)
        return out if op == "j1" else out - np.swapaxes(out, -1, -2)
    if op == "j1":
        if kind != "xi":
            raise UsageError("j1 fields can be generated as 'xi' or 'random'")
        xi = rng.standard_normal(batch + (4,))
        return np.einsum("...a,...iam->...im", xi, s)
    if kind == "sigma":
        return s.copy()
    if kind == "h":
        h = rng.standard_normal(batch + (4, 4))
        h = 0.5 * (h + np.swapaxes(h, -1, -2))
        h -= np.eye(4) * (np.trace(h, axis1=-2, axis2=-1) / 4.0)[..., None, None]
        return irrep_decomp.embed_h(s, g, h)
    if kind == "axial":
        m = irrep_decomp.axial_matrix(rng.standard_normal(batch + (3,)))
        return np.einsum("...ij,...jmn->...imn", m, s)
    raise UsageError(f"unknown generator {kind!r} for {op}")


def cmd_decompose(args):
    s, grid, field = None, None, None
    if args.input:
        field = read_sgf1(args.input, (3, 4) if args.op == "j1" else (3, 4, 4))
        grid = field.grid
    if args.sigma:
        sf = read_sgf1(args.sigma)
        s = sigma_from_coframe(sf.values) if sf.kind == "coframe" else sf.values
        if grid is not None and sf.grid != grid:
            raise UsageError("--sigma and --input are sampled on different grids")
        grid = sf.grid
    if s is None:
        geom = get_geometry(args.geometry or "flat")
        if grid is None:
            grid = geom.chart(args.grid)
        geom.check_grid(grid)
        s = geom.sigma_at(grid.coords())
    metric, _ = urbantke_metric(s)
    rng = np.random.default_rng(args.seed)
    values = field.values if field is not None else _generated_field(args.generate, args.op, s, metric, rng)
    inputs = dict(_inputs(args), grid=grid.header(), rng=RNG_ALGORITHM)
    rep = Report("decompose", inputs)
    scale = max(_max(values), np.finfo(float).tiny)
    if args.op == "j1":
        a4, a8 = irrep_decomp.j1_project(s, metric, values)
        rep.metric("a4_norm", _max(a4))
        rep.metric("a8_norm", _max(a8))
        rep.metric("eigen_residual", max(_max(irrep_decomp.j1_apply(s, metric, a4) - 2 * a4),
                                         _max(irrep_decomp.j1_apply(s, metric, a8) + a8)) / scale)
    else:
        parts = irrep_decomp.j2_project(s, metric, values)
        for name, lam, part in zip(("b1", "b3", "b5", "b9"), (2, 1, -1, 0), parts):
            rep.metric(f"{name}_norm", _max(part))
        resid = max(_max(irrep_decomp.j2_apply(s, metric, p) - lam * p)
                    for lam, p in zip((2, 1, -1, 0), parts))
        rep.metric("eigen_residual", resid / scale)
        comp = irrep_decomp.extract_components(s, metric, values)
        rep.metric("scalar1_mean", np.mean(comp.scalar1))
        rep.metric("vec3_max", _max(comp.vec3))
        rep.metric("sym5_max", _max(comp.sym5))
    rep.check("eigenvectors", rep.metrics["eigen_residual"] <= args.tol)
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_action(args):
    # With grid derivatives of Sigma the identities hold exactly (summation by parts);
    # exact derivatives leave an O(h^2) remainder. The on-shell Plebanski value uses exact ones.
    src = Source(args, default_derivatives="fd" if args.which == "second-order" else "exact")
    rep = Report("action", _inputs(args, src))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        f = src.fields()
        if args.which == "second-order":
            ident = action.action_identities(f)
            rep.metric("action", ident.action)
            rep.metric("ibp_residual", ident.ibp)
            rep.metric("equivalence_residual", ident.equivalence)
            rep.metric("sigma_f", ident.sigma_f)
            scale = max(1.0, abs(ident.sigma_da), abs(ident.dsigma_a), abs(ident.sigma_f))
            rep.check("ibp", abs(ident.ibp) <= args.tol * scale)
            rep.check("equivalence", abs(ident.equivalence) <= args.tol * scale)
        else:
            lam = args.lambda_ if args.lambda_ is not None else (src.geom.lam if src.geom is not None else 0.0)
            lam = 0.0 if lam is None else lam
            data = action.on_shell_plebanski(f, lam)
            value = action.action_plebanski(data)
            vol = action.volume_integral(f)
            rep.metric("action", value)
            rep.metric("lambda", lam)
            rep.metric("volume", vol)
            rep.metric("lambda_volume", lam * vol)
            for k, v in action.plebanski_el_residuals(data).norms(src.grid).items():
                rep.metric(f"{k}_rms", v)
            if lam != 0.0:
                rep.metric("relative_to_lambda_volume", value / (lam * vol) - 1.0)
                rep.check("on_shell_value", abs(value / (lam * vol) - 1.0) <= args.pleb_tol)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if caught:
        rep.inputs["boundary_terms"] = "not periodic: identities hold up to boundary terms"
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_linearized(args):
    grid = ChartGrid.cube(0.0, 2 * np.pi, args.grid, True)
    rep = Report("linearized", dict(_inputs(args), grid=grid.header(), rng=RNG_ALGORITHM))
    out = action.linearized_suite(args.seed, grid)
    for k, v in out.items():
        rep.metric(k, v)
    rep.check("diffeo_l_gr", out["diffeo_rel_l_gr"] < 1e-6)
    rep.check("diffeo_l_prime", out["diffeo_rel_l_prime"] < 1e-6)
    rep.check("gauge_l_gr_exact", out["gauge_abs_l_gr"] == 0.0)
    rep.check("gauge_l_prime_changes", out["gauge_rel_l_prime"] > 1e-3)
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_flow(args):
    geom = coframe_perturbed_flat(args.seed, args.amp)
    grid = ChartGrid.cube(0.0, 2 * np.pi, args.grid, True)
    rep = Report("flow", dict(_inputs(args), grid=grid.header(), rng=RNG_ALGORITHM, geometry=geom.name))
    trig = geom.trig
    series = [np.sqrt(action.einstein_objective(trig, grid))]
    retries = 0
    try:
        for _ in range(args.steps):
            trig, rec = action.flow_step(trig, grid, args.step_size)
            series.append(rec.einstein_norm)
            retries += rec.retries
    except StepRejected as exc:
        print(f"flow stopped: {exc}", file=sys.stderr)
        rep.check("all_steps_accepted", False)
    for k, v in enumerate(series):
        rep.metric(f"einstein_norm_{k:04d}", v)
    rep.metric("retries", retries)
    rep.metric("final_over_initial", series[-1] / series[0])
    rep.check("monotone", all(b <= a for a, b in zip(series, series[1:])))
    return rep, (EXIT_OK if rep.ok else EXIT_CHECK)


def cmd_geometries(args):
    rep = Report("geometries", {})
    catalog = {}
    for name in sorted(CATALOG):
        catalog[name] = get_geometry(name).describe()
    rep.inputs["catalog"] = catalog
    return rep, EXIT_OK


# ------------------------------------------------------------ parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for compiled kernels (default: SIGMA_FORGE_THREADS)")
    parser = argparse.ArgumentParser(prog="sigma-forge", parents=[common],
                                     description="SU(2)-structure toolkit: metric, torsion, curvature, actions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check wedge orthonormality and orientation")
    _add_source(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("metric", parents=[common], help="Urbantke metric and self-duality residual")
    _add_source(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--output", metavar="FILE.sgf")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("torsion", parents=[common], help="intrinsic torsion A and its residuals")
    _add_source(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--output", metavar="FILE.sgf")
    p.set_defaults(func=cmd_torsion)

    for name, func, helptext in (("curvature", cmd_curvature, "F, Ricci, scalar, Psi, Einstein residual"),
                                 ("einstein", cmd_einstein, "Einstein residual for a given Lambda")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        _add_source(p)
        p.add_argument("--sample", choices=("auto", "all", "center"), default="auto",
                       help="evaluate on the whole grid or in a window at its centre")
        p.add_argument("--lambda-tol", type=float, default=0.05)
        if name == "curvature":
            p.add_argument("--oracle", action="store_true", help="cross-check against the metric oracle")
            p.add_argument("--oracle-tol", type=float, default=0.05)
            p.add_argument("--lambda", dest="lambda_", type=float)
            p.add_argument("--output", metavar="FILE.sgf")
        else:
            p.add_argument("--lambda", dest="lambda_", type=float, required=True)
            p.add_argument("--tol", type=float, default=1e-3)
        p.set_defaults(func=func)

    p = sub.add_parser("decompose", parents=[common], help="J1 / J2 eigenpart norms")
    p.add_argument("--op", choices=("j1", "j2"), required=True)
    p.add_argument("--input", metavar="FILE.sgf", help="field to decompose")
    p.add_argument("--generate", choices=("xi", "random", "sigma", "h", "axial"), default="random",
                   help="synthesize the field when --input is absent")
    p.add_argument("--sigma", metavar="FILE.sgf", help="triple (default: --geometry on its chart)")
    p.add_argument("--geometry", choices=sorted(CATALOG))
    p.add_argument("--grid", type=int, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-11)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("action", parents=[common], help="second-order or Plebanski action")
    _add_source(p)
    p.add_argument("--which", choices=("second-order", "plebanski"), default="second-order")
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--tol", type=float, default=1e-8, help="relative tolerance of the identity checks")
    p.add_argument("--pleb-tol", type=float, default=0.02)
    p.set_defaults(func=cmd_action)

    p = sub.add_parser("linearized", parents=[common], help="invariance battery for L_GR and L'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=16)
    p.set_defaults(func=cmd_linearized)

    p = sub.add_parser("flow", parents=[common], help="descent on the integrated anti-self-dual curvature")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--step-size", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--grid", type=int, default=12)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("geometries", parents=[common], help="list the geometry catalog")
    p.set_defaults(func=cmd_geometries)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = getattr(args, "threads", None) or _accel.default_threads()
    args.threads = _accel.set_threads(threads) if threads else None
    try:
        rep, code = args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, NotOriented, DegenerateVolume, NonInvertibleMetric, SingularCoframe,
            ChartViolation, GridTooSmall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SigmaForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    sys.stdout.write(rep.to_json() + "\n")
    failed = [k for k, v in rep.checks.items() if not v]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
