"""Command-line interface: scenario configs, subcommand dispatch, CSV
emission, and the end-to-end predict/simulate/verify pipeline.

Exit codes: 0 pass, 1 config error, 2 solver failure, 3 inapplicable
prediction, 4 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .apm import RecursionSpec, Scenario, record_schedule, run_apm, \
    run_recursion_oracle, write_trace_csv
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    NotConvenientError,
    ParseError,
    ScenarioError,
    SolverFailure,
    ZeroSeriesError,
)
from .estimate import check_limit_product, detect_linear, fit_rate
from .polyalg import MultiPoly, UniSeries, emit_poly, parse_poly
from .proj import HypographSet, LinearSubspace, SolveOpts, TwoPolySet
from .rates import (
    Cond,
    RateKind,
    cond2poly_check,
    predict_curve_rate,
    predict_hypersurface_rate,
    predict_upper_bound_hyperplane,
    predict_upper_bound_subspace,
    solve_curve_series,
)
from .region import RegionLabel, classify_point, classify_scan, trace_partition_boundary

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_INAPPLICABLE = 3
EXIT_VERIFY = 4

_DEF_WINDOW = (-0.2, 0.2)


@dataclass
class Config:
    """Parsed scenario configuration (canonical form round-trips)."""

    name: str
    kind: str
    nvars: int | None = None
    g: MultiPoly | None = None
    f1: MultiPoly | None = None
    f2: MultiPoly | None = None
    span: tuple = ()
    u0: tuple = ()
    iterations: int = 1000
    record_per_decade: int = 48
    record_stride: int | None = None
    tol: float = 1e-12
    max_iter: int = 100
    assert_convex: bool = True
    assert_nondegenerate: bool = True
    oracle_c: float | None = None
    oracle_q: int | None = None
    oracle_x0: float | None = None
    oracle_h: tuple = ()
    window: tuple = _DEF_WINDOW
    samples: int = 81
    grid: tuple | None = None


def _num(tok):
    tok = tok.strip()
    try:
        if "/" in tok:
            return float(Fraction(tok))
        return float(tok)
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"cannot parse number {tok!r}") from e


def _vec(text):
    return tuple(_num(t) for t in text.split())


def _vec_exact(text):
    """Exact rational vector (kept exact so rational pipelines stay exact)."""
    out = []
    for t in text.split():
        try:
            out.append(Fraction(t))
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"cannot parse number {t!r}") from e
    return tuple(out)


def parse_config(text, origin="<config>"):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ParseError(f"{origin}: {e}") from e

    def get(section, key, fallback=None):
        return cp.get(section, key, fallback=fallback)

    try:
        name = cp.get("scenario", "name")
        kind = cp.get("scenario", "kind")
    except configparser.Error as e:
        raise ParseError(f"{origin}: missing [scenario] name/kind: {e}") from e
    if kind not in ("hypograph", "twopoly", "oracle"):
        raise ParseError(f"{origin}: unknown kind {kind!r}")

    cfg = Config(name=name, kind=kind)
    try:
        if kind == "hypograph":
            nvars = int(get("set", "nvars", "0")) or None
            gtext = get("set", "g")
            if gtext is None:
                raise ParseError(f"{origin}: hypograph config requires [set] g")
            cfg.g = parse_poly(gtext, nvars)
            cfg.nvars = cfg.g.nvars
        elif kind == "twopoly":
            t1, t2 = get("set", "f1"), get("set", "f2")
            if t1 is None or t2 is None:
                raise ParseError(f"{origin}: twopoly config requires [set] f1 and f2")
            cfg.f1 = parse_poly(t1, 2)
            cfg.f2 = parse_poly(t2, 2)
            cfg.nvars = 2
        else:
            cfg.oracle_c = _num(get("oracle", "c", "1"))
            cfg.oracle_q = int(get("oracle", "q", "1"))
            cfg.oracle_x0 = _num(get("oracle", "x0", "0.5"))
            htext = get("oracle", "h", "")
            cfg.oracle_h = _vec(htext) if htext.strip() else ()

        if cp.has_section("subspace"):
            vecs = []
            for key in sorted(cp.options("subspace")):
                vecs.append(_vec_exact(cp.get("subspace", key)))
            cfg.span = tuple(vecs)
        if cp.has_section("run"):
            u0text = get("run", "u0")
            if u0text:
                cfg.u0 = _vec(u0text)
            cfg.iterations = int(get("run", "iterations", str(cfg.iterations)))
            cfg.record_per_decade = int(get("run", "record_per_decade",
                                            str(cfg.record_per_decade)))
            stride = get("run", "record_stride")
            cfg.record_stride = int(stride) if stride else None
        if cp.has_section("solver"):
            cfg.tol = float(get("solver", "tol", repr(cfg.tol)))
            cfg.max_iter = int(get("solver", "max_iter", str(cfg.max_iter)))
        if cp.has_section("flags"):
            cfg.assert_convex = cp.getboolean("flags", "assert_convex",
                                              fallback=cfg.assert_convex)
            cfg.assert_nondegenerate = cp.getboolean(
                "flags", "assert_nondegenerate", fallback=cfg.assert_nondegenerate)
        if cp.has_section("region"):
            wtext = get("region", "window")
            if wtext:
                w = _vec(wtext)
                if len(w) != 2:
                    raise ParseError(f"{origin}: region window needs 2 numbers")
                cfg.window = (w[0], w[1])
            cfg.samples = int(get("region", "samples", str(cfg.samples)))
            gtext = get("region", "grid")
            if gtext:
                parts = gtext.split()
                if len(parts) != 6:
                    raise ParseError(f"{origin}: region grid needs 6 values")
                cfg.grid = (_num(parts[0]), _num(parts[1]), int(parts[2]),
                            _num(parts[3]), _num(parts[4]), int(parts[5]))
    except (ValueError, configparser.Error) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"{origin}: {e}") from e
    return cfg


def load_config(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ParseError(f"cannot read config {path}: {e}") from e
    return parse_config(text, origin=str(path))


def _fmt(v):
    return repr(float(v))


def emit_config(cfg):
    """Canonical text form; parse_config(emit_config(c)) == c."""
    out = [f"[scenario]\nname = {cfg.name}\nkind = {cfg.kind}\n"]
    if cfg.kind == "hypograph":
        out.append(f"[set]\nnvars = {cfg.nvars}\ng = {emit_poly(cfg.g)}\n")
    elif cfg.kind == "twopoly":
        out.append(f"[set]\nf1 = {emit_poly(cfg.f1)}\nf2 = {emit_poly(cfg.f2)}\n")
    else:
        h = " ".join(_fmt(v) for v in cfg.oracle_h)
        out.append("[oracle]\n"
                   f"c = {_fmt(cfg.oracle_c)}\nq = {cfg.oracle_q}\n"
                   f"x0 = {_fmt(cfg.oracle_x0)}\n" + (f"h = {h}\n" if h else ""))
    if cfg.span:
        lines = [f"v{i+1} = " + " ".join(str(x) for x in v)
                 for i, v in enumerate(cfg.span)]
        out.append("[subspace]\n" + "\n".join(lines) + "\n")
    run = []
    if cfg.u0:
        run.append("u0 = " + " ".join(_fmt(x) for x in cfg.u0))
    run.append(f"iterations = {cfg.iterations}")
    run.append(f"record_per_decade = {cfg.record_per_decade}")
    if cfg.record_stride is not None:
        run.append(f"record_stride = {cfg.record_stride}")
    out.append("[run]\n" + "\n".join(run) + "\n")
    out.append(f"[solver]\ntol = {repr(cfg.tol)}\nmax_iter = {cfg.max_iter}\n")
    out.append("[flags]\n"
               f"assert_convex = {'true' if cfg.assert_convex else 'false'}\n"
               f"assert_nondegenerate = {'true' if cfg.assert_nondegenerate else 'false'}\n")
    if cfg.grid is not None or cfg.window != _DEF_WINDOW or cfg.samples != 81:
        reg = [f"window = {_fmt(cfg.window[0])} {_fmt(cfg.window[1])}",
               f"samples = {cfg.samples}"]
        if cfg.grid is not None:
            g = cfg.grid
            reg.append(f"grid = {_fmt(g[0])} {_fmt(g[1])} {g[2]} {_fmt(g[3])} {_fmt(g[4])} {g[5]}")
        out.append("[region]\n" + "\n".join(reg) + "\n")
    return "\n".join(out)


def build_set(cfg):
    if cfg.kind == "hypograph":
        return HypographSet(cfg.g)
    if cfg.kind == "twopoly":
        return TwoPolySet(cfg.f1, cfg.f2)
    raise ParseError(f"scenario kind {cfg.kind!r} has no projection set")


def build_scenario(cfg):
    conset = build_set(cfg)
    if not cfg.span:
        raise ParseError("config has no [subspace] section")
    if not cfg.u0:
        raise ParseError("config has no [run] u0")
    try:
        sub = LinearSubspace.from_spanning(
            [np.array([float(x) for x in v], dtype=float) for v in cfg.span])
    except ValueError as e:
        raise ParseError(f"bad subspace: {e}") from e
    return Scenario(conset=conset, subspace=sub, u0=np.array(cfg.u0, dtype=float),
                    max_iter=cfg.iterations, record_stride=cfg.record_stride,
                    record_per_decade=cfg.record_per_decade,
                    opts=SolveOpts(tol=cfg.tol, max_iter=cfg.max_iter),
                    assert_convexity=cfg.assert_convex,
                    assert_nondegeneracy=cfg.assert_nondegenerate)


def _line_direction(cfg, dim):
    if len(cfg.span) != 1:
        return None
    v = cfg.span[0]
    if len(v) != dim + 1 or abs(v[dim]) > 1e-12:
        return None
    a = v[:dim]
    return a if any(x != 0 for x in a) else None


def predict_for_config(cfg):
    """Dispatch to the rate predictors by set and subspace shape.

    Returns (prediction or None, extra report lines, exit code)."""
    lines = []
    try:
        if cfg.kind == "hypograph":
            n = cfg.g.nvars
            xparts = [[float(x) for x in v[:n]] for v in cfg.span]
            if any(len(v) != n + 1 or abs(v[n]) > 1e-12 for v in cfg.span):
                lines.append("note = subspace leaves the z = 0 plane; no prediction")
                return None, lines, EXIT_INAPPLICABLE
            if len(cfg.span) == 1:
                a = _line_direction(cfg, n)
                if a is None:
                    return None, ["note = degenerate line"], EXIT_INAPPLICABLE
                return predict_hypersurface_rate(cfg.g, a), lines, EXIT_OK
            sub = LinearSubspace.from_spanning([np.array(v, dtype=float) for v in xparts])
            if sub.dim == n:
                return predict_upper_bound_hyperplane(
                    cfg.g, assert_nondegenerate=cfg.assert_nondegenerate), lines, EXIT_OK
            return predict_upper_bound_subspace(
                cfg.g, sub, assert_nondegenerate=cfg.assert_nondegenerate), lines, EXIT_OK
        if cfg.kind == "twopoly":
            a = _line_direction(cfg, 2)
            if a is None:
                lines.append("note = two-polynomial predictions require a line in z = 0")
                return None, lines, EXIT_INAPPLICABLE
            # the two rays of the line may project to different strata: point
            # the (exact) direction toward the start when one is configured
            if cfg.u0 and float(a[0]) * cfg.u0[0] + float(a[1]) * cfg.u0[1] < 0:
                a = tuple(-x for x in a)
            curve = solve_curve_series(cfg.f1, cfg.f2)
            cc = cond2poly_check(cfg.f1, cfg.f2, a, curve)
            lines.append(f"cond2poly = {cc.verdict.value}")
            if cc.multipliers is not None:
                l1, l2, mu = cc.multipliers
                lines.append(f"multipliers = {l1} {l2} {mu}")
            if cc.verdict is Cond.PROJECTS_TO_CURVE:
                return predict_curve_rate(cfg.f1, cfg.f2, curve), lines, EXIT_OK
            if cc.verdict is Cond.INCONCLUSIVE:
                lines.append("note = multiplier sign test inconclusive; defer to simulation")
                return None, lines, EXIT_INAPPLICABLE
            norm = math.sqrt(sum(x * x for x in a))
            P = (0.01 * a[0] / norm, 0.01 * a[1] / norm)
            label = classify_point(cfg.f1, cfg.f2, P)
            lines.append(f"region = {label.name.lower()}")
            if label is RegionLabel.SURFACE1:
                return predict_hypersurface_rate(cfg.f1, a), lines, EXIT_OK
            if label is RegionLabel.SURFACE2:
                return predict_hypersurface_rate(cfg.f2, a), lines, EXIT_OK
            lines.append("note = leaves the curve but no receiving surface found")
            return None, lines, EXIT_INAPPLICABLE
        lines.append("note = predict requires a projection scenario")
        return None, lines, EXIT_CONFIG
    except (NotConvenientError, DegenerateInputError, ZeroSeriesError, ValueError) as e:
        lines.append(f"note = prediction inapplicable: {e}")
        return None, lines, EXIT_INAPPLICABLE


def _outdir(ns):
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(ns):
    cfg = load_config(ns.config[0])
    tr = run_apm(build_scenario(cfg))
    path = _outdir(ns) / f"{cfg.name}_trace.csv"
    write_trace_csv(tr, path)
    print(f"trace: {path} ({len(tr.ks)} records, {tr.steps} steps, "
          f"{tr.terminated_reason})")
    return EXIT_OK


def cmd_predict(ns):
    cfg = load_config(ns.config[0])
    pred, lines, code = predict_for_config(cfg)
    report = (pred.as_kv() if pred is not None else "") + "".join(
        ln + "\n" for ln in lines)
    path = _outdir(ns) / f"{cfg.name}_prediction.txt"
    path.write_text(report)
    print(report, end="")
    return code


def _verify_one(cfg, out_dir, tol_exponent, tol_product, override_constant=None,
                tail_fraction=0.5):
    pred, lines, code = predict_for_config(cfg)
    if code != EXIT_OK:
        report = "".join(ln + "\n" for ln in lines) + "overall = inapplicable\n"
        (out_dir / f"{cfg.name}_verify.txt").write_text(report)
        print(f"{cfg.name}: inapplicable prediction")
        return code
    if override_constant is not None and pred.limit_constant is not None:
        pred = replace(pred, limit_constant=float(override_constant))
    tr = run_apm(build_scenario(cfg))
    checks = []
    est = None
    if pred.kind is RateKind.LINEAR:
        rho = detect_linear(tr)
        ok = rho is not None
        checks.append(("linear_decay", ok, f"ratio = {rho}" if ok else "no geometric decay"))
    else:
        est = fit_rate(tr, tail_fraction)
        lam = float(pred.lam)
        if pred.kind is RateKind.EXACT:
            ok = abs(est.fitted_exponent - lam) <= tol_exponent
            checks.append(("exponent", ok,
                           f"fitted = {est.fitted_exponent:.6f}, predicted = {lam:.6f}"))
            ks, prods = check_limit_product(tr, pred)
            est.product_at_end = float(prods[-1])
            ok2 = abs(est.product_at_end - 1.0) <= tol_product
            checks.append(("limit_product", ok2,
                           f"value = {est.product_at_end:.6f} at k = {int(ks[-1])}"))
        else:
            ok = est.fitted_exponent >= lam - tol_exponent
            checks.append(("exponent_bound", ok,
                           f"fitted = {est.fitted_exponent:.6f} >= {lam:.6f} - {tol_exponent}"))
    passed = all(ok for _, ok, _ in checks)
    report = pred.as_kv() + "".join(ln + "\n" for ln in lines)
    if est is not None:
        report += est.as_kv()
    for nm, ok, detail in checks:
        report += f"{nm} = {'pass' if ok else 'FAIL'} ({detail})\n"
    report += f"overall = {'pass' if passed else 'FAIL'}\n"
    (out_dir / f"{cfg.name}_verify.txt").write_text(report)
    print(f"{cfg.name}: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_VERIFY


def _verify_worker(args):
    path, out, tol_e, tol_p, override, tail = args
    try:
        cfg = load_config(path)
        return _verify_one(cfg, Path(out), tol_e, tol_p, override, tail)
    except ParseError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except InsufficientDataError as e:
        print(f"estimate error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def cmd_verify(ns):
    out = _outdir(ns)
    jobs = [(path, str(out), ns.tol_exponent, ns.tol_product,
             ns.override_constant, ns.tail_fraction)
            for path in ns.config]
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            codes = list(pool.map(_verify_worker, jobs))
    else:
        codes = [_verify_worker(j) for j in jobs]
    return max(codes)


def cmd_classify(ns):
    cfg = load_config(ns.config[0])
    if cfg.kind != "twopoly":
        raise ParseError("classify requires a twopoly config")
    if cfg.grid is None:
        raise ParseError("classify requires [region] grid = xmin xmax nx ymin ymax ny")
    xmin, xmax, nx, ymin, ymax, ny = cfg.grid
    xs = np.linspace(xmin, xmax, nx)
    ys = np.linspace(ymin, ymax, ny)
    labels = classify_scan(cfg.f1, cfg.f2, xs, ys)
    path = _outdir(ns) / f"{cfg.name}_labels.csv"
    with open(path, "w") as fh:
        fh.write("x,y,label\n")
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                fh.write(f"{x:.17g},{y:.17g},{RegionLabel(labels[i, j]).name.lower()}\n")
    print(f"labels: {path} ({nx * ny} points)")
    return EXIT_OK


def cmd_partition(ns):
    cfg = load_config(ns.config[0])
    if cfg.kind != "twopoly":
        raise ParseError("partition requires a twopoly config")
    out = _outdir(ns)
    for which in (1, 2):
        pts, skipped = trace_partition_boundary(
            cfg.f1, cfg.f2, which, cfg.window, cfg.samples)
        path = out / f"{cfg.name}_boundary{which}.csv"
        with open(path, "w") as fh:
            fh.write("x,y\n")
            for x, y in pts:
                fh.write(f"{x:.17g},{y:.17g}\n")
        msg = f"boundary {which}: {path} ({len(pts)} points"
        msg += f", {len(skipped)} skipped)" if skipped else ")"
        print(msg)
    if cfg.grid is not None:
        return cmd_classify(ns)
    return EXIT_OK


def cmd_oracle(ns):
    cfg = load_config(ns.config[0])
    if cfg.kind != "oracle":
        raise ParseError("oracle requires an oracle config")
    h = UniSeries(list(cfg.oracle_h)) if cfg.oracle_h else None
    spec = RecursionSpec(C=cfg.oracle_c, q=cfg.oracle_q, h=h,
                         x0=cfg.oracle_x0, K=cfg.iterations)
    xs = run_recursion_oracle(spec)
    ks = record_schedule(cfg.iterations, cfg.record_stride, cfg.record_per_decade)
    scale = (spec.q * spec.C) ** (1.0 / spec.q)
    path = _outdir(ns) / f"{cfg.name}_oracle.csv"
    with open(path, "w") as fh:
        fh.write("k,x_k,product\n")
        for k in ks:
            prod = scale * float(k) ** (1.0 / spec.q) * xs[k] if k > 0 else 0.0
            fh.write(f"{int(k)},{xs[k]:.17g},{prod:.17g}\n")
    print(f"oracle: {path} ({len(ks)} records)")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit 2 on usage errors; 2 is the solver-failure
    code here, so remap usage problems to the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="altproj",
                description="Alternating projections between semialgebraic convex "
                            "sets and subspaces: simulate, predict exact sublinear "
                            "rates, and verify them.")
    sub = p.add_subparsers(dest="command")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", required=True,
                        help="scenario config file (repeatable for verify)")
    common.add_argument("--out", default="altproj-out", help="output directory")
    common.add_argument("--tol-exponent", type=float, default=0.02,
                        help="band for fitted vs predicted exponent")
    common.add_argument("--tol-product", type=float, default=0.05,
                        help="band around 1 for the limit product")
    common.add_argument("--tail-fraction", type=float, default=0.5,
                        help="log-k fraction of the trace used for rate fitting")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel workers for batch verify")
    for name, fn in (("simulate", cmd_simulate), ("predict", cmd_predict),
                     ("verify", cmd_verify), ("classify", cmd_classify),
                     ("partition", cmd_partition), ("oracle", cmd_oracle)):
        sp = sub.add_parser(name, parents=[common])
        if name == "verify":
            sp.add_argument("--override-constant", type=float, default=None,
                            help="replace the predicted limit constant (diagnostic)")
        sp.set_defaults(func=fn)
    return p


def main(argv=None):
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    if not hasattr(ns, "func"):
        parser.print_help()
        return EXIT_CONFIG
    try:
        return ns.func(ns)
    except ParseError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as e:
        print(f"scenario error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as e:
        print(f"estimate error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
