"""Command line front end: tables, thresholds, rank reports, simulations.

CSV files are the authoritative artifacts; SVG output is a minimal
hand-rolled line chart for quick inspection.  All numeric output is
printed with 10 significant digits so files round-trip losslessly and
reruns with the same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .doa_sim import (
    ScenarioFormatError,
    read_scenario,
    run_tracking,
    sweep_sampling_rate,
    write_sweep_csv,
    write_trace_csv,
)
from .linalg_cov import (
    SnapshotWindow,
    hermitian_eig,
    push_snapshot,
    read_snapshot_csv,
    sample_covariance,
)
from .minimax_threshold import (
    ThresholdProblem,
    critical_margin_threshold,
    small_margin_threshold,
    solve_minimax_threshold,
)
from .rank_select import (
    CostSchedule,
    build_threshold_sequence,
    default_lambda0,
    estimate_noise_variance,
    estimate_rank,
    kn_estimate_rank,
)
from .rmt_model import NoiseModel
from .tracy_widom import tw_cdf, tw_pdf, tw_table


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".10g")


# -- SVG ---------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def svg_line_chart(
    title: str,
    x_label: str,
    y_label: str,
    series: list[tuple[str, list[float], list[float]]],
    width: int = 640,
    height: int = 400,
) -> str:
    """Plain line chart: axes, ticks, legend, one polyline per series."""
    left, right, top, bottom = 64, 16, 28, 48
    plot_w, plot_h = width - left - right, height - top - bottom
    xs_all = [x for _, xs, _ in series for x in xs if math.isfinite(x)]
    ys_all = [y for _, _, ys in series for y in ys if math.isfinite(y)]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y_lo, y_hi = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
    ]
    axis = 'stroke="#333" stroke-width="1"'
    parts.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" {axis}/>'
    )
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" {axis}/>')
    for tx in _ticks(x_lo, x_hi):
        x = px(tx)
        parts.append(
            f'<line x1="{x:.2f}" y1="{top + plot_h}" x2="{x:.2f}" '
            f'y2="{top + plot_h + 5}" {axis}/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:.6g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        y = py(ty)
        parts.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" {axis}/>')
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.6g}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.1f})">{y_label}</text>'
    )
    for i, (name, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = top + 14 + 16 * i
        parts.append(
            f'<line x1="{left + plot_w - 110}" y1="{ly}" x2="{left + plot_w - 90}" '
            f'y2="{ly}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{left + plot_w - 84}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- commands ----------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated options for one command invocation."""

    command: str
    args: argparse.Namespace


def _schedule(n: int, ci: float, ce: float, rmax: int | None) -> CostSchedule:
    if rmax is not None:
        if not 0 < rmax <= n:
            raise ValueError(f"rmax must be in [1, {n}]")
        return CostSchedule(c_I=ci, c_E=(ce,) * rmax + (0.0,) * (n - rmax))
    return CostSchedule(c_I=ci, c_E=(ce,) * n)


def cmd_tw(args) -> int:
    lo, hi, step = args.min, args.max, args.step
    if not step > 0.0 or hi <= lo:
        raise ValueError("need max > min and step > 0")
    count = round((hi - lo) / step) + 1
    s = np.array([lo + k * step for k in range(count)])
    t1, t2 = tw_table(1), tw_table(2)
    rows = np.column_stack(
        [s, tw_cdf(t1, s), tw_pdf(t1, s), tw_cdf(t2, s), tw_pdf(t2, s)]
    )
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["s", "F1", "f1", "F2", "f2"])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    print(f"wrote {out} ({count} rows)")
    if args.svg:
        svg_path = out.with_suffix(".svg")
        chart = svg_line_chart(
            "Tracy-Widom densities",
            "s",
            "density",
            [
                ("f1", list(rows[:, 0]), list(rows[:, 2])),
                ("f2", list(rows[:, 0]), list(rows[:, 4])),
            ],
        )
        svg_path.write_text(chart, encoding="utf-8")
        print(f"wrote {svg_path}")
    return 0


def cmd_threshold(args) -> int:
    noise = NoiseModel(n=args.n, N=args.N, sigma2=args.sigma2, beta=args.beta)
    lambda0 = args.lambda0 if args.lambda0 is not None else default_lambda0(noise)
    problem = ThresholdProblem(noise=noise, lambda0=lambda0, c_I=args.ci, c_E=args.ce)
    solution = solve_minimax_threshold(problem)
    print(f"lambda0 = {_fmt(lambda0)}")
    print(f"T = {_fmt(solution.T)}")
    print(f"t = {_fmt(solution.t)}")
    print(f"max_risk = {_fmt(solution.max_risk)}")
    print(f"residual = {_fmt(solution.residual)}")
    if args.small_margin is not None:
        approx = small_margin_threshold(args.small_margin, noise, args.ci, args.ce)
        print(f"small_margin_t = {_fmt(approx)}")
    if args.critical_margin is not None:
        approx = critical_margin_threshold(args.critical_margin, noise, args.ci, args.ce)
        print(f"critical_margin_t = {_fmt(approx.t)}")
    return 0


def cmd_rank(args) -> int:
    snapshots = read_snapshot_csv(args.snapshots)
    n = len(snapshots[0].values)
    window = SnapshotWindow(
        capacity=len(snapshots), dimension=n, beta=snapshots[0].beta
    )
    for snap in snapshots:
        push_snapshot(window, snap)
    eig = hermitian_eig(sample_covariance(window))
    # single-shot run: no previous estimate, so the fallback variance is
    # the full-spectrum mean unless the caller pins it
    sigma2 = args.sigma2 if args.sigma2 is not None else estimate_noise_variance(eig, 0)
    noise = NoiseModel(n=n, N=len(snapshots), sigma2=sigma2, beta=snapshots[0].beta)
    lambda0 = args.lambda0 if args.lambda0 is not None else default_lambda0(noise)
    schedule = _schedule(n, args.ci, args.ce, args.rmax)
    thresholds = build_threshold_sequence(noise, lambda0, schedule)
    estimate = estimate_rank(eig, thresholds)
    print(f"n = {n}, N = {len(snapshots)}, beta = {snapshots[0].beta}")
    print(f"sigma2 = {_fmt(sigma2)}")
    print(f"r_hat = {estimate.r_hat}")
    if args.false_alarm is not None:
        kn = kn_estimate_rank(eig, noise, args.false_alarm)
        print(f"r_hat_kn = {kn.r_hat}")
    print(f"{'i':>3} {'eigenvalue':>16} {'threshold':>16} decision")
    for i, (ell, T) in enumerate(zip(eig.eigenvalues, thresholds.T), start=1):
        word = "include" if i <= estimate.r_hat else "exclude"
        print(f"{i:>3} {_fmt(ell):>16} {_fmt(T):>16} {word}")
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["i", "eigenvalue", "threshold", "included"])
            for i, (ell, T) in enumerate(
                zip(eig.eigenvalues, thresholds.T), start=1
            ):
                writer.writerow([i, _fmt(ell), _fmt(T), int(i <= estimate.r_hat)])
        print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    scenario = read_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=args.seed)
    schedule = _schedule(scenario.n, args.ci, args.ce, args.rmax)
    trace = run_tracking(scenario, schedule, kn_false_alarm=args.false_alarm)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    csv_path = out_dir / f"{stem}_trace.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        write_trace_csv(trace, handle)
    print(f"wrote {csv_path} ({len(trace.records)} rows)")
    if args.svg:
        times = [rec.time for rec in trace.records]
        chart = svg_line_chart(
            f"rank tracking: {stem}",
            "t",
            "rank",
            [
                ("r", times, [float(rec.r) for rec in trace.records]),
                ("minimax", times, [float(rec.rhat_mm) for rec in trace.records]),
                ("kn", times, [float(rec.rhat_kn) for rec in trace.records]),
            ],
        )
        svg_path = out_dir / f"{stem}_trace.svg"
        svg_path.write_text(chart, encoding="utf-8")
        print(f"wrote {svg_path}")
    return 0


def cmd_sweep(args) -> int:
    scenario = read_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        scenario = replace(scenario, seed=args.seed)
    rates = tuple(float(part) for part in args.rates.split(","))
    schedule = _schedule(scenario.n, args.ci, args.ce, args.rmax)
    rows = sweep_sampling_rate(
        scenario, rates, args.replicates, schedule, kn_false_alarm=args.false_alarm
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    csv_path = out_dir / f"{stem}_sweep.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        write_sweep_csv(rows, handle)
    print(f"wrote {csv_path} ({len(rows)} rates)")
    if args.svg:
        chart = svg_line_chart(
            f"rank error vs rate: {stem}",
            "sampling rate",
            "mean |r - rhat|",
            [
                ("minimax", [r.rate for r in rows], [r.mm_mean for r in rows]),
                ("kn", [r.rate for r in rows], [r.kn_mean for r in rows]),
            ],
        )
        svg_path = out_dir / f"{stem}_sweep.svg"
        svg_path.write_text(chart, encoding="utf-8")
        print(f"wrote {svg_path}")
    return 0


# -- argument plumbing -------------------------------------------------------


def _add_cost_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ci", type=float, default=1.0, help="inclusion cost c_I")
    parser.add_argument(
        "--ce", type=float, default=1.0, help="per-signal exclusion cost c_E"
    )
    parser.add_argument(
        "--rmax",
        type=int,
        default=None,
        help="zero exclusion costs beyond this rank (caps detectable rank)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankest",
        description="Rank estimation for spiked covariance data: "
        "distribution tables, minimax thresholds, tracking simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_tw = sub.add_parser("tw", help="tabulate the limiting edge distributions")
    p_tw.add_argument("--min", type=float, default=-5.0, help="grid start")
    p_tw.add_argument("--max", type=float, default=3.0, help="grid end")
    p_tw.add_argument("--step", type=float, default=0.01, help="grid step")
    p_tw.add_argument("--out", required=True, help="output CSV path")
    p_tw.add_argument("--svg", action="store_true", help="also write a density chart")
    p_tw.set_defaults(func=cmd_tw)

    p_th = sub.add_parser("threshold", help="solve the minimax threshold")
    p_th.add_argument("--beta", type=int, default=2, help="field parameter, 1 or 2")
    p_th.add_argument("--n", type=int, required=True, help="dimension")
    p_th.add_argument("--N", type=int, required=True, help="window length")
    p_th.add_argument("--sigma2", type=float, default=1.0, help="noise power")
    p_th.add_argument(
        "--lambda0",
        type=float,
        default=None,
        help="weakest spike to protect (default: boundary standoff)",
    )
    _add_cost_flags(p_th)
    p_th.add_argument(
        "--small-margin",
        type=float,
        default=None,
        metavar="H",
        help="also print the small-margin closed form at margin H",
    )
    p_th.add_argument(
        "--critical-margin",
        type=float,
        default=None,
        metavar="H0",
        help="also print the critical-margin closed form at scaled margin H0",
    )
    p_th.set_defaults(func=cmd_threshold)

    p_rank = sub.add_parser("rank", help="estimate rank from a snapshot CSV")
    p_rank.add_argument("snapshots", help="snapshot CSV path")
    p_rank.add_argument(
        "--sigma2",
        type=float,
        default=None,
        help="noise power (default: full-spectrum mean)",
    )
    p_rank.add_argument("--lambda0", type=float, default=None)
    _add_cost_flags(p_rank)
    p_rank.add_argument(
        "--false-alarm",
        type=float,
        default=None,
        help="also report the fixed false-alarm baseline at this level",
    )
    p_rank.add_argument("--out", default=None, help="write the decision table as CSV")
    p_rank.set_defaults(func=cmd_rank)

    p_sim = sub.add_parser("simulate", help="run a tracking scenario")
    p_sim.add_argument("scenario", help="scenario file path")
    p_sim.add_argument("--out", default=".", help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override scenario seed")
    _add_cost_flags(p_sim)
    p_sim.add_argument("--false-alarm", type=float, default=0.005)
    p_sim.add_argument("--svg", action="store_true", help="also write a rank chart")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="sampling-rate sweep with replicates")
    p_sweep.add_argument("scenario", help="scenario file path")
    p_sweep.add_argument(
        "--rates", required=True, help="comma-separated sampling rates"
    )
    p_sweep.add_argument("--replicates", type=int, default=20)
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.add_argument("--seed", type=int, default=None, help="override scenario seed")
    _add_cost_flags(p_sweep)
    p_sweep.add_argument("--false-alarm", type=float, default=0.005)
    p_sweep.add_argument("--svg", action="store_true", help="also write an error chart")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ScenarioFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        filename = getattr(exc, "filename", None)
        where = f" ({filename})" if filename else ""
        print(f"error: {exc.strerror or exc}{where}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
