"""Command-line interface.

Subcommands:
  simulate    draw sufficient statistics and print per-dataset diagnostics
  experiment  run a full ball-probability experiment, write report + csv
  theorem     print the predicted verdict for a scenario
  lemmas      verify the supporting concentration properties by simulation
  plot        render deterministic SVG trend plots from a report.json

Exit codes: 0 success; 2 usage or configuration errors (bad flags,
malformed scenario JSON, model assumption violations); 3 runtime failures
(numerically degenerate posteriors, failed lemma checks, empty reports).

The master seed comes from --seed, falling back to the GPRIOR_LAB_SEED
environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .numerics import RngStream
from .model_core import (
    ScenarioError,
    diagnostics,
    load_scenario,
    mle_sup_error,
    simulate_stats,
)
from .g_regimes import eb_ghat
from .posterior_engine import BallOptions
from .consistency_lab import (
    REPORT_SCHEMA_VERSION,
    predict_verdict,
    run_experiment,
    verify_lemmas,
)

__all__ = ["main"]


def _positive_int_list(text: str):
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 2 for v in values):
        raise argparse.ArgumentTypeError("n values must be integers >= 2")
    return values


def _positive_float_list(text: str):
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("eps values must be > 0")
    return values


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GPRIOR_LAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ScenarioError(f"GPRIOR_LAB_SEED must be an integer, got {env!r}") from None


def _add_common(sub, n_grid=True, reps=None):
    sub.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    sub.add_argument("--seed", type=int, default=None, help="master seed (default: $GPRIOR_LAB_SEED or 0)")
    if n_grid:
        sub.add_argument("--n-grid", type=_positive_int_list, required=True, help="comma-separated sample sizes")
    if reps is not None:
        sub.add_argument("--reps", type=int, default=reps, help=f"replications per n (default {reps})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gprior-lab", description=__doc__.split("\n\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="draw datasets and print diagnostics")
    _add_common(sim, reps=1)
    sim.add_argument("--mode", choices=("direct", "full"), default="direct")
    sim.add_argument("--out", default=None, help="write JSON here instead of stdout")
    sim.set_defaults(func=_cmd_simulate)

    exp = subs.add_parser("experiment", help="run a ball-probability experiment")
    _add_common(exp, reps=20)
    exp.add_argument("--eps-grid", type=_positive_float_list, required=True, help="comma-separated radii")
    exp.add_argument("--threads", type=int, default=1)
    exp.add_argument("--out", required=True, help="output directory")
    exp.add_argument("--format", choices=("json", "csv", "both"), default="both")
    exp.add_argument("--method", choices=("auto", "exact", "mc"), default="auto")
    exp.add_argument("--mc-draws", type=int, default=20_000)
    exp.add_argument("--grid-size", type=int, default=512, help="u-grid size for hyper-g and Zellner-Siow posteriors")
    exp.add_argument("--with-lemmas", action="store_true", help="also run the concentration checks and embed them in the report")
    exp.set_defaults(func=_cmd_experiment)

    thm = subs.add_parser("theorem", help="print the predicted verdict")
    _add_common(thm)
    thm.add_argument("--json", action="store_true", help="emit the full verdict with evidence as JSON")
    thm.add_argument("--out", default=None, help="directory to write verdict.json into")
    thm.set_defaults(func=_cmd_theorem)

    lem = subs.add_parser("lemmas", help="verify concentration properties by simulation")
    _add_common(lem, reps=100)
    lem.set_defaults(func=_cmd_lemmas)

    plot = subs.add_parser("plot", help="render SVG trend plots from a report")
    plot.add_argument("--report", required=True, help="path to a report.json written by 'experiment'")
    plot.add_argument("--out", required=True, help="output directory for SVG files")
    plot.set_defaults(func=_cmd_plot)
    return parser


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = _resolve_seed(args)
    if args.reps < 1:
        raise ScenarioError("--reps must be >= 1")
    scenario.validate_grid(args.n_grid)
    draws = []
    for n in args.n_grid:
        gamma = scenario.gamma_at(n)
        truth = scenario.truth_at(n)
        for rep in range(args.reps):
            rng = RngStream(seed, (scenario.name, n, rep)).child("sim")
            stats = simulate_stats(scenario, n, rng, mode=args.mode)
            diag = diagnostics(stats, gamma, scenario.prior, truth)
            ghat = None
            if n - stats.p + scenario.prior.a - 2 > 0:
                ghat = eb_ghat(n, stats.p, scenario.prior.a, diag.resid_plus_b, diag.quad_form)
            draws.append(
                {
                    "n": n,
                    "p": stats.p,
                    "rep": rep,
                    "resid_ss": stats.resid_ss,
                    "quad_form": diag.quad_form,
                    "u_floor": diag.u_floor,
                    "mle_sup_error": mle_sup_error(stats, truth.beta0),
                    "eb_ghat": ghat,
                }
            )
    doc = {"scenario": scenario.name, "mode": args.mode, "master_seed": seed, "draws": draws}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = _resolve_seed(args)
    opts = BallOptions(method=args.method, mc_draws=args.mc_draws)
    report = run_experiment(
        scenario,
        args.n_grid,
        args.eps_grid,
        reps=args.reps,
        master_seed=seed,
        threads=args.threads,
        ball_options=opts,
        grid_size=args.grid_size,
        include_lemmas=args.with_lemmas,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format in ("json", "both"):
        path = out / "report.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    if args.format in ("csv", "both"):
        path = out / "cells.csv"
        path.write_text(report.to_csv())
        print(f"wrote {path}")
    print(f"Verdict: {report.verdict.display()}")
    for agg in report.aggregates:
        print(f"eps={agg['eps']!r}: exceedance trend {agg['trend']}")
    print(f"Agreement: {report.agreement}")
    return 0


def _cmd_theorem(args) -> int:
    scenario = load_scenario(args.scenario)
    verdict = predict_verdict(scenario, args.n_grid)
    doc = {
        "theorem": verdict.theorem,
        "predicted": verdict.predicted,
        "sufficient_only": verdict.sufficient_only,
        "display": verdict.display(),
        "evidence": verdict.evidence,
    }
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(verdict.display())
        for key, trace in sorted(verdict.evidence.items()):
            if isinstance(trace, dict) and "values" in trace:
                vals = trace["values"]
                print(f"  {key}: {trace['class']} [{vals[0]:.6g} .. {vals[-1]:.6g}]")
            else:
                print(f"  {key}: {trace!r}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "verdict.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_lemmas(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = _resolve_seed(args)
    outcomes = verify_lemmas(scenario, args.n_grid, reps=args.reps, master_seed=seed)
    failed = 0
    for oc in outcomes:
        if oc.skipped:
            print(f"SKIP {oc.name}: {oc.reason}")
        elif oc.passed:
            print(f"PASS {oc.name} {json.dumps(oc.details, sort_keys=True)}")
        else:
            failed += 1
            print(f"FAIL {oc.name} {json.dumps(oc.details, sort_keys=True)}")
    return 0 if failed == 0 else 3


def _cmd_plot(args) -> int:
    # a missing or corrupt report is a runtime failure (exit 3), not a
    # scenario-validation failure
    try:
        doc = json.loads(Path(args.report).read_text())
    except OSError as exc:
        print(f"error: cannot read report {args.report}: {exc}", file=sys.stderr)
        return 3
    except json.JSONDecodeError as exc:
        print(
            f"error: malformed JSON in {args.report} at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        return 3
    if not isinstance(doc, dict) or doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        print(
            f"error: unsupported or missing report schema_version; expected {REPORT_SCHEMA_VERSION}",
            file=sys.stderr,
        )
        return 3
    aggregates = doc.get("aggregates") or []
    cells = doc.get("cells") or []
    if not cells or not aggregates:
        print("error: report contains no cells to plot", file=sys.stderr)
        return 3
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = doc.get("scenario", {}).get("name", "scenario")
    display = doc.get("verdict", {}).get("display", "")
    for agg in aggregates:
        svg = _render_svg(name, display, agg)
        path = out / f"ball_prob_eps_{agg['eps']}.svg"
        path.write_text(svg)
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# deterministic SVG rendering (median line with interquartile band, log-x)

_W, _H = 640, 420
_L, _R, _T, _B = 70, 620, 40, 370


def _xmap(n_values):
    import math

    logs = [math.log(n) for n in n_values]
    lo, hi = min(logs), max(logs)
    span = (hi - lo) or 1.0
    return [(_L + (_R - _L) * (x - lo) / span) for x in logs]


def _ymap(p: float) -> float:
    return _B - (_B - _T) * min(max(p, 0.0), 1.0)


def _pts(xs, ys) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def _render_svg(scenario_name: str, verdict_display: str, agg: dict) -> str:
    ns = agg["n_grid"]
    xs = _xmap(ns)
    med = [_ymap(v) for v in agg["prob_median"]]
    q25 = [_ymap(v) for v in agg["prob_q25"]]
    q75 = [_ymap(v) for v in agg["prob_q75"]]
    band = _pts(xs + xs[::-1], q25 + q75[::-1])
    line = _pts(xs, med)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_L}" y="22" font-family="monospace" font-size="13">'
        f"{scenario_name} eps={agg['eps']!r} [{verdict_display}]</text>",
        f'<line x1="{_L}" y1="{_B}" x2="{_R}" y2="{_B}" stroke="black" stroke-width="1"/>',
        f'<line x1="{_L}" y1="{_T}" x2="{_L}" y2="{_B}" stroke="black" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _ymap(frac)
        parts.append(f'<line x1="{_L - 4}" y1="{y:.2f}" x2="{_L}" y2="{y:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{_L - 8}" y="{y + 4:.2f}" font-family="monospace" font-size="11" '
            f'text-anchor="end">{frac:.2f}</text>'
        )
    for n, x in zip(ns, xs):
        parts.append(f'<line x1="{x:.2f}" y1="{_B}" x2="{x:.2f}" y2="{_B + 4}" stroke="black"/>')
        parts.append(
            f'<text x="{x:.2f}" y="{_B + 18}" font-family="monospace" font-size="11" '
            f'text-anchor="middle">{n}</text>'
        )
    parts.append(
        f'<text x="{(_L + _R) // 2}" y="{_H - 8}" font-family="monospace" font-size="12" '
        'text-anchor="middle">n (log scale)</text>'
    )
    parts.append(
        f'<text x="16" y="{(_T + _B) // 2}" font-family="monospace" font-size="12" '
        f'transform="rotate(-90 16 {(_T + _B) // 2})" text-anchor="middle">P(sup deviation &gt; eps)</text>'
    )
    parts.append(f'<polygon points="{band}" fill="#9ecae1" fill-opacity="0.45" stroke="none"/>')
    parts.append(
        f'<polyline points="{line}" fill="none" stroke="#08519c" stroke-width="2"/>'
    )
    for x, y in zip(xs, med):
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#08519c"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
