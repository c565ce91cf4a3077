"""Scenario-driven command-line front end.

    fdpfc <command> [--scenario <path>] [--out <dir>] [--seed <n>] [--svg]

Commands: region (total-region boundary CSV), analytic (target/params/voltage
report), simulate (switching waveform CSV), closedloop (regulation trace CSV),
powerflow (P/Q sweep CSV), table2 (feasibility/round-trip report over the
reference operating points).  A missing --scenario runs the prototype
defaults; FDPFC_OUT sets the default output directory.  Exit status: 0 on
success, 1 on usage errors, 2 on region or convergence failures.

All CSV output uses fixed %.12g formatting and no timestamps, so identical
invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from .control import (
    AnalyticPlant,
    default_initial_params,
    run_closed_loop,
    select_params,
    solve_params_general,
    target_from_reference,
)
from .converter import compensation_voltages, fundamental_components, regulated_grid
from .gridline import flow_sweep
from .region import CompensationTarget, RegionError, forward_target, region_boundary
from .scenario import Scenario, ScenarioError, default_scenario, parse_scenario
from .simulate import SwitchingPlant, simulate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REGION = 2

# Reference operating points: (phi1_deg, m) as calculated for the prototype
# zone experiments.  Row 3 lies outside the total regulation region under
# this model's normalization and is reported infeasible.
TABLE2_ROWS = (
    (0.0, 0.64),
    (52.0, 0.49),
    (90.0, 1.0),
    (143.0, 0.41),
    (-174.0, 0.63),
    (-141.0, 0.43),
    (-80.0, 0.43),
    (-47.0, 0.34),
)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def read_csv_dicts(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_region_csv(path) -> np.ndarray:
    rows = read_csv_dicts(path)
    return np.array([[float(r["x"]), float(r["y"])] for r in rows])


def _solve_target(tgt: CompensationTarget, eps: float):
    """(params, status) via the rhombus selection, falling back to general beta."""
    try:
        return select_params(tgt, eps), "rhombus"
    except RegionError:
        return solve_params_general(tgt, eps), "general"


def cmd_region(scn: Scenario, outdir: Path, svg: bool) -> int:
    pts = region_boundary(scn.region_samples)
    path = outdir / scn.region_csv
    write_csv(path, ["x", "y"], [[float(x), float(y)] for x, y in pts])
    print(f"region: wrote {len(pts)} boundary points to {path}")
    if svg:
        _plot_region(pts, path.with_suffix(".svg"))
    return EXIT_OK


def cmd_analytic(scn: Scenario, outdir: Path, svg: bool) -> int:
    grid = scn.grid_source()
    t_o = scn.output_transformer()
    tgt = target_from_reference(scn.u_ref, scn.phi_ref_deg, grid.u_im, t_o.turn_ratio)
    try:
        params, status = _solve_target(tgt, 0.01)
    except RegionError as err:
        print(f"analytic: {err}", file=sys.stderr)
        if err.nearest is not None:
            print(
                f"analytic: nearest feasible target m={err.nearest.m:.6g}, "
                f"phi1={err.nearest.phi1_deg:.6g} deg",
                file=sys.stderr,
            )
        return EXIT_REGION
    fund, third = fundamental_components(params, grid)
    comp = compensation_voltages(params, grid, t_o)
    reg = regulated_grid(grid, comp)
    path = outdir / scn.analytic_csv
    write_csv(
        path,
        [
            "U_ref_V", "phi_ref_deg", "m", "phi1_deg", "method",
            "k0", "k2", "beta_deg", "U_om_V", "third_harmonic_V",
            "U_oa_V", "phi_oa_deg", "U_mL_V", "phi_r_deg",
        ],
        [[
            scn.u_ref, scn.phi_ref_deg, tgt.m, tgt.phi1_deg, status,
            params.k0, params.k2, params.beta_deg, fund.a.amplitude, third.amplitude,
            comp.a.amplitude, comp.a.phase_deg, reg.u_ml, reg.phi_r_deg,
        ]],
    )
    print(
        f"analytic: {status} solution k0={params.k0:.6g} k2={params.k2:.6g} "
        f"beta={params.beta_deg:.6g} deg -> u_oa {comp.a.amplitude:.6g} V at "
        f"{comp.a.phase_deg:.6g} deg, regulated line {reg.u_ml:.6g} V at "
        f"{reg.phi_r_deg:.6g} deg ({path})"
    )
    return EXIT_OK


def cmd_simulate(scn: Scenario, outdir: Path, svg: bool) -> int:
    grid = scn.grid_source()
    t_o = scn.output_transformer()
    tgt = target_from_reference(scn.u_ref, scn.phi_ref_deg, grid.u_im, t_o.turn_ratio)
    try:
        params, status = _solve_target(tgt, 0.01)
    except RegionError as err:
        print(f"simulate: {err}", file=sys.stderr)
        return EXIT_REGION
    rec = simulate(scn.circuit(), params, scn.sim_config())
    path = outdir / scn.waveforms_csv
    rec.to_csv(path, decimation=scn.decimation)
    print(
        f"simulate: {status} params ({params.k0:.4g}, {params.k2:.4g}, "
        f"{params.beta_deg:.4g} deg), {rec.n_samples} samples, "
        f"decimation {scn.decimation} -> {path}"
    )
    if svg:
        _plot_waveforms(rec, path.with_suffix(".svg"))
    return EXIT_OK


def cmd_closedloop(scn: Scenario, outdir: Path, svg: bool) -> int:
    grid = scn.grid_source()
    t_o = scn.output_transformer()
    ref = scn.reference()
    if scn.plant == "switching":
        plant = SwitchingPlant(scn.circuit(), dt=scn.dt_us * 1e-6)
    else:
        plant = AnalyticPlant(grid, t_o)
    init = default_initial_params(scn.phi_ref_deg)
    result = run_closed_loop(plant, ref, init, scn.max_iter, scn.gains())
    path = outdir / scn.trace_csv
    header = ["iteration", "mode", "k0", "k2", "beta_deg", "U_o1", "phi_o1_deg"]
    write_csv(path, header, [[r[h] for h in header] for r in result.trace_rows()])
    if svg:
        _plot_trace(result, path.with_suffix(".svg"))
    if not result.converged:
        print(
            f"closedloop: did not converge in {scn.max_iter} iterations "
            f"(best U_o1={result.best_measurement.u_o1:.6g} V, "
            f"phi_o1={result.best_measurement.phi_o1_deg:.6g} deg); trace in {path}",
            file=sys.stderr,
        )
        return EXIT_REGION
    final = result.measurements[-1]
    print(
        f"closedloop: converged in {result.final_state.iteration} iterations on the "
        f"{scn.plant} plant: U_o1={final.u_o1:.6g} V, phi_o1={final.phi_o1_deg:.6g} deg "
        f"({path})"
    )
    return EXIT_OK


def cmd_powerflow(scn: Scenario, outdir: Path, svg: bool) -> int:
    n = int(round(360.0 / scn.sweep_step_deg))
    targets = [CompensationTarget(scn.sweep_m, i * scn.sweep_step_deg) for i in range(n)]
    rows = flow_sweep(targets, scn.grid_source(), scn.output_transformer(), scn.line_model())
    path = outdir / scn.sweep_csv
    write_csv(
        path,
        ["m", "phi1_deg", "U_mL_V", "phi_r_deg", "P_W", "Q_var", "status"],
        [[r.target.m, r.target.phi1_deg, r.u_ml, r.phi_r_deg, r.p, r.q, r.status] for r in rows],
    )
    n_bad = sum(r.status == "infeasible" for r in rows)
    print(f"powerflow: {len(rows)} targets at m={scn.sweep_m:g} ({n_bad} infeasible) -> {path}")
    if svg:
        _plot_sweep(rows, path.with_suffix(".svg"))
    return EXIT_OK


def cmd_table2(scn: Scenario, outdir: Path, svg: bool) -> int:
    out_rows = []
    for i, (phi1, m) in enumerate(TABLE2_ROWS, start=1):
        tgt = CompensationTarget(m, phi1)
        try:
            params, status = _solve_target(tgt, 0.0)
        except RegionError:
            out_rows.append([i, phi1, m, "infeasible", math.nan, math.nan, math.nan, math.nan, math.nan])
            print(f"table2 row {i}: ({phi1:g} deg, {m:g}) infeasible under the model")
            continue
        back = forward_target(params)
        err_m = abs(back.m - m)
        err_phi = abs(back.phi1_deg - phi1) if back.m > 0 else 0.0
        out_rows.append(
            [i, phi1, m, status, params.k0, params.k2, params.beta_deg, err_m, err_phi]
        )
        print(
            f"table2 row {i}: ({phi1:g} deg, {m:g}) {status}: k0={params.k0:.6g} "
            f"k2={params.k2:.6g} beta={params.beta_deg:.6g} deg, round-trip error "
            f"m {err_m:.2e}, phi {err_phi:.2e} deg"
        )
    path = outdir / scn.table2_csv
    write_csv(
        path,
        ["row", "phi1_deg", "m", "classification", "k0", "k2", "beta_deg", "err_m", "err_phi_deg"],
        out_rows,
    )
    print(f"table2: report -> {path}")
    return EXIT_OK


def _plot_region(pts: np.ndarray, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    closed = np.vstack([pts, pts[:1]])
    ax.plot(closed[:, 0], closed[:, 1], lw=1.2)
    ax.set_xlabel("x (per unit)")
    ax.set_ylabel("y (per unit)")
    ax.set_aspect("equal")
    ax.grid(True, lw=0.3)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_waveforms(rec, path: Path) -> None:
    plt = _pyplot()
    t = rec.times * 1e3
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for ax, names in zip(
        axes, (("u_ia1", "u_oa2"), ("u_oa2", "u_ob2", "u_oa"), ("u_iab", "u_ab"))
    ):
        for n in names:
            ax.plot(t, rec.channel(n), lw=0.7, label=n)
        ax.legend(loc="upper right", fontsize=8)
        ax.grid(True, lw=0.3)
    axes[-1].set_xlabel("t (ms)")
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_trace(result, path: Path) -> None:
    plt = _pyplot()
    rows = result.trace_rows()
    it = [r["iteration"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(it, [r["U_o1"] for r in rows], marker=".")
    ax1.set_ylabel("U_o1 (V)")
    ax1.grid(True, lw=0.3)
    ax2.plot(it, [r["phi_o1_deg"] for r in rows], marker=".")
    ax2.set_ylabel("phi_o1 (deg)")
    ax2.set_xlabel("iteration")
    ax2.grid(True, lw=0.3)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_sweep(rows, path: Path) -> None:
    plt = _pyplot()
    ok = [r for r in rows if r.status != "infeasible"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([r.p for r in ok], [r.q for r in ok], lw=1.0)
    ax.set_xlabel("P (W)")
    ax.set_ylabel("Q (var)")
    ax.grid(True, lw=0.3)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_COMMANDS = {
    "region": cmd_region,
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "closedloop": cmd_closedloop,
    "powerflow": cmd_powerflow,
    "table2": cmd_table2,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdpfc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="scenario file (omit for prototype defaults)")
        p.add_argument("--out", help="output directory (default: $FDPFC_OUT or .)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized extensions")
        p.add_argument("--svg", action="store_true", help="also emit SVG plots next to the CSVs")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.scenario is None:
        scn = default_scenario()
    else:
        try:
            text = Path(args.scenario).read_text()
        except OSError as err:
            print(f"fdpfc: cannot read scenario: {err}", file=sys.stderr)
            return EXIT_USAGE
        try:
            scn = parse_scenario(text)
        except ScenarioError as err:
            print(f"fdpfc: {err}", file=sys.stderr)
            return EXIT_USAGE
    outdir = Path(args.out or os.environ.get("FDPFC_OUT", "."))
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        print(f"fdpfc: cannot create output directory: {err}", file=sys.stderr)
        return EXIT_USAGE
    return _COMMANDS[args.command](scn, outdir, args.svg)


if __name__ == "__main__":
    sys.exit(main())
