"""Command-line interface: ``qsmooth fit | simulate | sample``.

Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration,
3 numerically degenerate fit.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import sys
from xml.sax.saxutils import escape

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core_stats import DegenerateScaleError
from .gh_model import GhParams, VariancePattern, generate_dataset, gh_moments
from .sim_harness import DEFAULT_REPS, SimConfig, format_table, run_grid, table2_configs
from .smoother_r import DEFAULT_SPAN_F, DEFAULT_SPAN_XI, PairedSample, method_r_fit
from .spline_baseline import fit_auto

log = logging.getLogger("qsmooth")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_DEGENERATE = 0, 1, 2, 3


class InputError(ValueError):
    """Malformed user input; maps to exit status 2."""


def fmt_float(value: float) -> str:
    # repr gives the shortest string that parses back to the same double.
    return repr(float(value))


def read_xy_csv(path: str, x_col: str = "x", y_col: str = "y") -> PairedSample:
    """Read two numeric columns from a headed CSV file.

    Empty, missing, non-numeric and non-finite cells are rejected with the
    offending data row (1-based, header excluded) in the message.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        cols = {}
        for name in (x_col, y_col):
            if name not in header:
                raise InputError(f"{path}: no column named {name!r} in header {header}")
            cols[name] = header.index(name)
        xs, ys = [], []
        row_no = 0
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            row_no += 1
            values = []
            for name in (x_col, y_col):
                idx = cols[name]
                where = f"{path}: row {row_no} (line {reader.line_num}), column {name!r}"
                if idx >= len(row) or not row[idx].strip():
                    raise InputError(f"{where}: missing value")
                try:
                    val = float(row[idx])
                except ValueError:
                    raise InputError(f"{where}: {row[idx]!r} is not a number") from None
                if not math.isfinite(val):
                    raise InputError(f"{where}: value must be finite, got {row[idx]!r}")
                values.append(val)
            xs.append(values[0])
            ys.append(values[1])
    if len(xs) < 2:
        raise InputError(f"{path}: need at least two data rows, found {len(xs)}")
    return PairedSample(np.array(xs), np.array(ys))


def fitted_line(sample: PairedSample, method: str, q: float, f: float, xi: float):
    """Fitted conditional quantiles at the observed x, sorted by x."""
    if method == "r":
        fitted = method_r_fit(sample, q, f, xi).theta_tilde
    elif method == "spline":
        if len(sample) < 10:
            raise InputError(f"the spline method needs at least 10 rows, got {len(sample)}")
        fitted = fit_auto(sample, q).predict(sample.x)
    else:
        raise InputError(f"unknown method {method!r}")
    order = np.argsort(sample.x, kind="stable")
    return sample.x[order], fitted[order]


def render_csv(xs, fitted) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "fitted"])
    for a, b in zip(xs, fitted):
        writer.writerow([fmt_float(a), fmt_float(b)])
    return buf.getvalue()


def render_svg(sample: PairedSample, xs, fitted, title: str, width: int = 640, height: int = 480) -> str:
    """Standalone SVG: data as dots, fitted quantile line as a polyline."""
    pad = 40.0
    all_y = np.concatenate([sample.y, fitted])
    x0, x1 = float(sample.x.min()), float(sample.x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    sx = (width - 2 * pad) / ((x1 - x0) or 1.0)
    sy = (height - 2 * pad) / ((y1 - y0) or 1.0)

    def px(v):
        return pad + (v - x0) * sx

    def py(v):
        return height - pad - (v - y0) * sy

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#999"/>',
        '<g fill="#4477aa" fill-opacity="0.6">',
    ]
    parts += [f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5"/>' for a, b in zip(sample.x, sample.y)]
    parts.append("</g>")
    points = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, fitted))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#cc3311" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _check_q(q: float) -> float:
    if not (0.0 < q < 1.0):
        raise InputError(f"quantile must lie in (0, 1), got {q}")
    return q


def cmd_fit(args) -> int:
    _check_q(args.quantile)
    if not args.span_f > 0:
        raise InputError(f"--span-f must be positive, got {args.span_f}")
    if not 0.0 < args.span_xi <= 1.0:
        raise InputError(f"--span-xi must lie in (0, 1], got {args.span_xi}")
    sample = read_xy_csv(args.input, args.x_col, args.y_col)
    xs, fitted = fitted_line(sample, args.method, args.quantile, args.span_f, args.span_xi)
    if args.format == "svg":
        title = f"method {args.method}, q = {args.quantile:g}"
        text = render_svg(sample, xs, fitted, title)
    else:
        text = render_csv(xs, fitted)
    _write(text, args.output)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 2:
        raise InputError(f"--n must be at least 2, got {args.n}")
    if args.seed < 0:
        raise InputError(f"--seed must be nonnegative, got {args.seed}")
    gh = GhParams(args.g, args.h)
    data = generate_dataset(args.n, gh, VariancePattern.parse(args.vp), args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y"])
    for a, b in zip(data.x, data.y):
        writer.writerow([fmt_float(a), fmt_float(b)])
    _write(buf.getvalue(), args.output)
    return EXIT_OK


def _as_list(value, cast):
    if isinstance(value, list):
        return [cast(v) for v in value]
    if isinstance(value, str):
        return [cast(v) for v in value.split(",") if v.strip()]
    return [cast(value)]


_SIM_KEYS = {
    "g": "g", "h": "h", "vp": "vp", "q": "quantile", "quantile": "quantile",
    "n": "n", "k": "reps", "reps": "reps", "seed": "seed", "methods": "methods",
    "table2": "table2", "moments": "moments", "workers": "workers",
}


def simulation_settings(args) -> dict:
    """Merge the optional TOML config file with command-line flags (flags win)."""
    settings = {"g": 0.0, "h": 0.0, "vp": 1, "quantile": 0.5, "n": 50, "reps": DEFAULT_REPS,
                "seed": 1, "methods": "r,spline", "table2": False, "moments": False, "workers": 1}
    if args.config:
        with open(args.config, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise InputError(f"{args.config}: {exc}") from None
        for key, value in data.items():
            if key not in _SIM_KEYS:
                raise InputError(f"{args.config}: unknown key {key!r}")
            settings[_SIM_KEYS[key]] = value
    for key in ("g", "h", "vp", "quantile", "n", "reps", "seed", "methods", "workers"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if args.table2:
        settings["table2"] = True
    if args.moments:
        settings["moments"] = True
    return settings


def build_configs(settings: dict) -> list[SimConfig]:
    try:
        methods = tuple(_as_list(settings["methods"], str.strip))
        for m in methods:
            if m not in ("r", "spline"):
                raise InputError(f"unknown method {m!r}; expected r or spline")
        n, reps, seed = int(settings["n"]), int(settings["reps"]), int(settings["seed"])
        if settings["table2"]:
            return table2_configs(reps=reps, master_seed=seed, n=n, methods=methods)
        gs = _as_list(settings["g"], float)
        hs = _as_list(settings["h"], float)
        vps = _as_list(settings["vp"], VariancePattern.parse)
        qs = [_check_q(q) for q in _as_list(settings["quantile"], float)]
        return [
            SimConfig(gh=GhParams(g, h), vp=vp, q=q, n=n, reps=reps, master_seed=seed, methods=methods)
            for q, g, h, vp in itertools.product(qs, gs, hs, vps)
        ]
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(f"invalid simulation settings: {exc}") from None


def cmd_simulate(args) -> int:
    settings = simulation_settings(args)
    configs = build_configs(settings)
    moments = {}
    if settings["moments"]:
        for c in configs:
            if c.gh not in moments:
                try:
                    moments[c.gh] = gh_moments(c.gh)
                except ValueError as exc:
                    raise InputError(str(exc)) from None
    reports = run_grid(configs, workers=int(settings["workers"]))
    for rep in reports:
        log.info("cell g=%g h=%g vp=%d q=%g: %.2fs", rep.config.gh.g, rep.config.gh.h,
                 rep.config.vp.value, rep.config.q, rep.wall_time)
    if args.format == "text":
        text = format_table(reports)
    else:
        cells = []
        for rep in reports:
            cell = rep.to_dict()
            if moments:
                skew, kurt = moments[rep.config.gh]
                cell["moments"] = {"skewness": skew, "kurtosis": kurt}
            cells.append(cell)
        text = json.dumps(cells, indent=2) + "\n"
    _write(text, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsmooth", description="Nonparametric quantile regression smoothers.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a quantile smoother to x,y CSV data")
    fit.add_argument("input", help="CSV file with a header row")
    fit.add_argument("--method", choices=("r", "spline"), default="r")
    fit.add_argument("--quantile", type=float, default=0.5)
    fit.add_argument("--span-f", type=float, default=DEFAULT_SPAN_F, help="running-interval span (MADN units)")
    fit.add_argument("--span-xi", type=float, default=DEFAULT_SPAN_XI, help="re-smoothing span fraction")
    fit.add_argument("--format", choices=("csv", "svg"), default="csv")
    fit.add_argument("--x-col", default="x")
    fit.add_argument("--y-col", default="y")
    fit.add_argument("-o", "--output", help="output path (default: stdout)")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="Monte Carlo comparison of the smoothers")
    sim.add_argument("--config", help="TOML file with simulation settings")
    sim.add_argument("--table2", action="store_true", help="run the full 24-cell comparison grid")
    sim.add_argument("--g", help="g value(s), comma separated")
    sim.add_argument("--h", help="h value(s), comma separated")
    sim.add_argument("--vp", help="variance pattern(s) 1, 2, 3, comma separated")
    sim.add_argument("--quantile", help="quantile(s), comma separated")
    sim.add_argument("--n", type=int)
    sim.add_argument("--reps", "--k", dest="reps", type=int, help=f"replications per cell (default {DEFAULT_REPS})")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--methods", help="comma separated subset of r,spline")
    sim.add_argument("--moments", action="store_true", help="add skewness and kurtosis of each error law")
    sim.add_argument("--workers", type=int, help="worker processes (output does not depend on it)")
    sim.add_argument("--format", choices=("json", "text"), default="json")
    sim.add_argument("-o", "--output", help="output path (default: stdout)")
    sim.set_defaults(func=cmd_simulate)

    smp = sub.add_parser("sample", help="draw x,y data from the simulation model")
    smp.add_argument("--n", type=int, required=True)
    smp.add_argument("--g", type=float, default=0.0)
    smp.add_argument("--h", type=float, default=0.0)
    smp.add_argument("--vp", default="1")
    smp.add_argument("--seed", type=int, default=1)
    smp.add_argument("-o", "--output", help="output path (default: stdout)")
    smp.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except DegenerateScaleError as exc:
        print(f"qsmooth: degenerate fit: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, ValueError) as exc:
        print(f"qsmooth: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qsmooth: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
