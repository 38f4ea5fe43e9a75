"""convbodylab command line: CSV, JSON and SVG output for the computations in this package."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .convolution_body import (
    convbody,
    convbody_volumes,
    disk_convbody_volume,
    radial_mean_volumes,
    schmuck_ratio,
)
from .counterexample import Inconclusive, NoM, certify, config_hash, inequality_suite
from .covariogram import (
    DEFAULT_POLYGON_SIZE,
    ConvexPolygon,
    NonConvexError,
    covariogram,
    covariogram_ray,
    polygon_from_radial,
    rectangle,
    regular_polygon,
)
from .radial_core import (
    DEFAULT_GRID,
    LensParams,
    SpecError,
    analyze,
    grid,
    lens_boundary,
    lens_derivatives,
    load_json,
    radial_from_spec,
)
from .variation import (
    PerturbationFamily,
    analytic_second_derivative,
    extrapolated_limit,
    f_m,
    fd_derivatives,
    fourier_limit_value,
    limit_second_derivative,
)

EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE = 0, 1, 2
TOOL = "convolution-body-lab"


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _effective(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def header_lines(args) -> list[str]:
    cfg = _effective(args)
    return [f"# {TOOL} v{__version__} config={config_hash(cfg)}",
            "# " + json.dumps(cfg, sort_keys=True)]


def write_text(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def write_csv(args, columns, rows) -> None:
    buf = io.StringIO()
    for line in header_lines(args):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    write_text(buf.getvalue(), args.out)


def write_json(args, payload: dict) -> None:
    cfg = _effective(args)
    doc = {"tool": TOOL, "version": __version__, "config": cfg, "config_hash": config_hash(cfg), **payload}
    write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n", args.out)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


# ---------------------------------------------------------------------------
# SVG


def svg_plot(series, title: str = "", xlabel: str = "", ylabel: str = "", equal: bool = False,
             width: int = 640, height: int = 480) -> str:
    """Static SVG 1.1 line plot; ``series`` is a list of (label, xs, ys)."""
    pad = 60
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = (width - 2 * pad) / (x1 - x0)
    sy = (height - 2 * pad) / (y1 - y0)
    if equal:
        sx = sy = min(sx, sy)

    def px(x):
        return pad + (x - x0) * sx

    def py(y):
        return height - pad - (y - y0) * sy

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#999" stroke-width="1"/>',
    ]
    if y0 < 0 < y1:
        out.append(f'<line x1="{pad}" y1="{py(0):.2f}" x2="{width - pad}" y2="{py(0):.2f}" '
                   'stroke="#bbb" stroke-dasharray="4 3"/>')
    for i, (label, sxs, sys_) in enumerate(series):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(sxs, sys_))
        col = colors[i % len(colors)]
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * (i + 1)}" font-size="11" fill="{col}">'
                   f'{_esc(label)}</text>')
    for v, anchor, x, y in [(x0, "start", pad, height - pad + 16), (x1, "end", width - pad, height - pad + 16)]:
        out.append(f'<text x="{x}" y="{y}" font-size="11" text-anchor="{anchor}">{v:.4g}</text>')
    for v, y in [(y0, height - pad), (y1, pad + 10)]:
        out.append(f'<text x="{pad - 4}" y="{y}" font-size="11" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{width / 2}" y="{pad / 2}" font-size="14" text-anchor="middle">{_esc(title)}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" font-size="12" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {height / 2})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# body specs


def polygon_from_spec(spec, n_poly: int = DEFAULT_POLYGON_SIZE) -> ConvexPolygon:
    """A polygon from a body spec: explicit vertices, a named shape, or a radial profile."""
    if not isinstance(spec, dict):
        raise SpecError("body spec must be a JSON object")
    kind = spec.get("kind", "polygon" if "vertices" in spec else None)
    if kind == "polygon":
        return ConvexPolygon.from_json(spec)
    if kind == "regular":
        k = _field(spec, "k", "regular")
        if not isinstance(k, int) or k < 3:
            raise SpecError(f"regular: field 'k' must be an integer >= 3, got {k!r}")
        return regular_polygon(k, float(spec.get("area", 1.0)))
    if kind == "rectangle":
        if "width" not in spec or "height" not in spec:
            raise SpecError("rectangle: fields 'width' and 'height' are required")
        return rectangle(float(spec["width"]), float(spec["height"]))
    if kind == "perturbed":
        base = radial_from_spec(_field(spec, "base", "perturbed"), n_poly)
        t = float(_field(spec, "t", "perturbed"))
        return polygon_from_radial(PerturbationFamily(base).body_at(t))
    return polygon_from_radial(radial_from_spec(spec, n_poly))


def _missing(where, key):
    raise SpecError(f"{where}: missing field '{key}'")


def _field(spec, key, where):
    if key not in spec:
        _missing(where, key)
    return spec[key]


def load_body(path: str, n_poly: int) -> ConvexPolygon:
    return polygon_from_spec(load_json(path), n_poly)


def load_profile(path: str, n: int):
    return radial_from_spec(load_json(path), n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_lens(args):
    given = [x is not None for x in (args.s, args.alpha, args.delta)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --s, --alpha, --delta")
    if args.s is not None:
        p = LensParams.from_s(args.s)
    elif args.alpha is not None:
        p = LensParams.from_alpha(args.alpha)
    else:
        p = LensParams.from_delta(args.delta)
    d1, d2 = lens_derivatives(p.s)
    S, dS = lens_boundary(p.s)
    write_csv(args, ["s", "alpha", "delta", "L", "L_prime", "L_second", "S", "S_prime"],
              [[p.s, p.alpha, p.delta, p.delta * math.pi, d1, d2, S, dS]])


def cmd_covariogram(args):
    P = load_body(args.body, args.n_poly)
    if args.x is not None:
        write_csv(args, ["x", "y", "g"], [[args.x[0], args.x[1], covariogram(P, np.array(args.x))]])
        return
    s = np.linspace(args.s_min, args.s_max if args.s_max is not None else P.diameter(), args.steps)
    g = covariogram_ray(P, args.theta, s)
    write_csv(args, ["s", "g"], zip(s, g))


def cmd_convbody(args):
    P = load_body(args.body, args.n_poly)
    f = convbody(P, args.delta, args.n)
    write_csv(args, ["theta", "rho"], zip(f.angles, f.samples))


def cmd_sweep(args):
    P = load_body(args.body, args.n_poly)
    deltas = np.linspace(args.delta_min, args.delta_max, args.steps)
    vols = convbody_volumes(P, deltas, args.n_dirs)
    if args.disk:
        A = P.area()
        write_csv(args, ["delta", "volume", "disk_volume"],
                  [(d, v, disk_convbody_volume(A, d)) for d, v in zip(deltas, vols)])
    else:
        write_csv(args, ["delta", "volume"], zip(deltas, vols))


def cmd_variation(args):
    base = load_profile(args.base, args.n)
    rows = []
    cols = ["delta", "second_derivative"]
    fds = None
    if args.fd:
        cols += ["fd_first", "fd_second", "observed_order"]
        fds = fd_derivatives(PerturbationFamily(base), list(args.delta), args.h, args.n_poly, args.n_dirs)
    for i, d in enumerate(args.delta):
        row = [d, analytic_second_derivative(base, d)]
        if fds is not None:
            row += [fds[i].first, fds[i].second, fds[i].order]
        rows.append(row)
    write_csv(args, cols, rows)


def cmd_fm_scan(args):
    alpha = np.linspace(args.alpha_min, args.alpha_max, args.steps)
    F = f_m(alpha, args.m)
    if args.raw:
        write_csv(args, ["alpha", "F_m"], zip(alpha, F))
    else:
        write_csv(args, ["alpha", "sin2_F_m"], zip(alpha, np.sin(alpha) ** 2 * F))


def cmd_limits(args):
    base = load_profile(args.base, args.n)
    lim = limit_second_derivative(base)
    four = fourier_limit_value(analyze(base, args.modes))
    extra, _ = extrapolated_limit(base)
    write_csv(args, ["limit", "fourier_value", "fourier_value_times_pi_over_4", "extrapolated"],
              [[lim, four, four * math.pi / 4, extra]])


def cmd_counterexample(args):
    try:
        rep = certify(args.delta, m_max=args.mmax, n_poly=args.n_poly, n_dirs=args.n_dirs,
                      threshold=args.threshold)
    except Inconclusive as exc:
        write_json(args, {"certificate": exc.report.to_json()})
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except NoM as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    write_json(args, {"certificate": rep.to_json()})
    return EXIT_OK


DEFAULT_SUITE = {
    "square": {"kind": "rectangle", "width": 1.0, "height": 1.0},
    "rectangle_1x2": {"kind": "rectangle", "width": 1.0, "height": 2.0},
    "pentagon": {"kind": "regular", "k": 5},
    "triangle": {"kind": "regular", "k": 3},
}


def cmd_inequalities(args):
    if args.body:
        specs = {path: load_json(path) for path in args.body}
    else:
        specs = DEFAULT_SUITE
    bodies = [polygon_from_spec(s, args.n_poly) for s in specs.values()]
    checks = inequality_suite(bodies, list(specs), n_dirs=args.n_dirs)
    write_csv(args, ["body", "check", "lhs", "relation", "rhs", "slack", "holds"],
              [(c.body, c.name, c.lhs, c.relation, c.rhs, c.slack, c.holds) for c in checks])
    return EXIT_OK if all(c.holds for c in checks) else EXIT_INCONCLUSIVE


def cmd_plot(args):
    if args.what == "fm":
        alpha = np.linspace(args.alpha_min, args.alpha_max, args.steps)
        y = np.sin(alpha) ** 2 * f_m(alpha, args.m)
        svg = svg_plot([(f"m={args.m}", alpha, y)], f"sin(alpha)^2 F_m(alpha), m={args.m}", "alpha", "")
    elif args.what == "bodies":
        series = []
        th = np.append(grid(args.n), 0.0)
        for m in args.m_list:
            t = 1.0 / (2 * m * m)
            r = PerturbationFamily(radial_from_spec({"kind": "cos2m", "m": m}, args.n)).body_at(t).samples
            r = np.append(r, r[0])
            series.append((f"m={m}, t=1/{2 * m * m}", r * np.cos(th), r * np.sin(th)))
        svg = svg_plot(series, "1 + t cos^2(m v) at t = 1/(2m^2)", "", "", equal=True)
    else:
        if not args.body:
            raise UsageError("plot convbody needs --body")
        P = load_body(args.body, args.n_poly)
        series = []
        v = np.vstack([P.vertices, P.vertices[:1]])
        series.append(("body", v[:, 0], v[:, 1]))
        th = np.append(grid(args.n), 0.0)
        for d in args.delta:
            r = convbody(P, d, args.n).samples
            r = np.append(r, r[0])
            series.append((f"delta={d:g}", r * np.cos(th), r * np.sin(th)))
        svg = svg_plot(series, "convolution bodies", "", "", equal=True)
    write_text(svg, args.out)


def cmd_schmuck(args):
    P = load_body(args.body, args.n_poly).normalized() if args.normalize else load_body(args.body, args.n_poly)
    rows = []
    for d in args.delta:
        r = schmuck_ratio(P, d, args.n_dirs)
        rows.append((d, r.volume, r.ratio, r.limit, r.relative_gap))
    write_csv(args, ["delta", "volume", "ratio", "limit", "relative_gap"], rows)


def cmd_rp(args):
    P = load_body(args.body, args.n_poly)
    vols = radial_mean_volumes(P, args.p, args.n_dirs)
    write_csv(args, ["p", "volume"], sorted(vols.items()))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convbodylab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    parser.add_argument("--config", help="JSON file with option defaults (flags take precedence)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        return p

    p = add("lens", cmd_lens, "lens area and its derivatives")
    p.add_argument("--s", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)

    p = add("covariogram", cmd_covariogram, "covariogram along a ray or at a point")
    p.add_argument("--body", required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--s-min", type=float, default=0.0)
    p.add_argument("--s-max", type=float, default=None)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--x", type=float, nargs=2, default=None)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)

    p = add("convbody", cmd_convbody, "radial samples of C_delta")
    p.add_argument("--body", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, default=DEFAULT_GRID)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)

    p = add("sweep", cmd_sweep, "vol C_delta over a range of delta")
    p.add_argument("--body", required=True)
    p.add_argument("--delta-min", type=float, default=0.05)
    p.add_argument("--delta-max", type=float, default=0.95)
    p.add_argument("--steps", type=int, default=19)
    p.add_argument("--n-dirs", type=int, default=1024)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    p.add_argument("--disk", action="store_true", help="add the equal-area disk column")

    p = add("variation", cmd_variation, "second variation at t = 0")
    p.add_argument("--base", required=True, help="profile spec (JSON)")
    p.add_argument("--delta", type=float, nargs="+", required=True)
    p.add_argument("--fd", action="store_true", help="also run finite differences")
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--n", type=int, default=DEFAULT_GRID)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    p.add_argument("--n-dirs", type=int, default=1024)

    p = add("fm-scan", cmd_fm_scan, "F_m over a range of alpha")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=1.52)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--raw", action="store_true", help="F_m itself instead of sin^2(alpha) F_m")

    p = add("limits", cmd_limits, "delta -> 1 limit of the second variation")
    p.add_argument("--base", required=True)
    p.add_argument("--n", type=int, default=DEFAULT_GRID)
    p.add_argument("--modes", type=int, default=64)

    p = add("counterexample", cmd_counterexample, "certify a body beating the disk")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mmax", type=int, default=200)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    p.add_argument("--n-dirs", type=int, default=1024)
    p.add_argument("--threshold", type=float, default=10.0)

    p = add("inequalities", cmd_inequalities, "inequality suite against equal-area disks")
    p.add_argument("--body", nargs="*", default=None)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    p.add_argument("--n-dirs", type=int, default=1024)

    p = add("schmuck", cmd_schmuck, "vol C_delta / (1 - delta)^2 against its limit")
    p.add_argument("--body", required=True)
    p.add_argument("--delta", type=float, nargs="+", default=[0.9, 0.99, 0.999])
    p.add_argument("--normalize", action="store_true", help="scale the body to area 1")
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    p.add_argument("--n-dirs", type=int, default=1024)

    p = add("radial-mean", cmd_rp, "volumes of the radial mean bodies R_p")
    p.add_argument("--body", required=True)
    p.add_argument("--p", type=float, nargs="+", default=[-0.5, 1.0, 1.5, 4.0])
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    p.add_argument("--n-dirs", type=int, default=1024)

    p = add("plot", cmd_plot, "SVG plots")
    p.add_argument("what", choices=["fm", "bodies", "convbody"])
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--m-list", type=int, nargs="+", default=[2, 3, 4, 5])
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=1.52)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--body", default=None)
    p.add_argument("--delta", type=float, nargs="+", default=[0.1, 0.5, 0.9])
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--n-poly", type=int, default=DEFAULT_POLYGON_SIZE)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install config-file values as subparser defaults, so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = load_json(known.config)
    if not isinstance(cfg, dict):
        raise SpecError(f"{known.config}: config must be a JSON object")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in subs.choices), None)
    if command is None:
        return
    sp = subs.choices[command]
    dests = {a.dest for a in sp._actions}
    unknown = sorted(set(cfg) - dests)
    if unknown:
        raise SpecError(f"{known.config}: unknown option(s) for '{command}': {', '.join(unknown)}")
    for action in sp._actions:
        if action.dest in cfg:
            action.required = False
    sp.set_defaults(**cfg)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        code = args.func(args)
        return EXIT_OK if code is None else code
    except SystemExit as exc:       # argparse usage errors
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    except (SpecError, UsageError, NonConvexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> int:
    return run()
