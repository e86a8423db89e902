"""Scenario catalog, run orchestration and the command-line entry point.

    spacelike-flow catalog
    spacelike-flow run --scenario graph_torus [--config cfg.json] [--t-end T]
                       [--grid N] [--cfl C] [--form F] [--out DIR] [--plot]
    spacelike-flow oracle --trials 100 --dims 2,4 --seed 0
    spacelike-flow verify --report DIR

Exit codes: 0 all checks pass, 1 a check failed, 2 the flow aborted,
3 invalid input.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import monitors
from .fieldio import load_field, save_state
from .flow_engine import FlowConfig, evolve
from .geometry_fields import GridChart
from .monitors import CSV_COLUMNS, MonitorRecord
from .spacelike_core import (
    chern_density_closed_form,
    chern_density_pfaffian,
    flat_torus,
    from_graph,
    homogeneous_flat,
    homogeneous_hyperbolic,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK, EXIT_ABORT, EXIT_INPUT = 0, 1, 2, 3

SCENARIOS = ("flat_torus", "graph_torus", "hyperbolic_form", "flat_form", "custom")


@dataclass
class ScenarioSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {SCENARIOS}")


_DEFAULTS = {
    "flat_torus": {"grid": 32, "t_end": 1.0},
    "graph_torus": {"amplitude": 0.2, "frequency": 1, "grid": 64, "t_end": 2.0},
    "hyperbolic_form": {"n": 2, "phi0": 1.0, "base_volume": 4 * np.pi, "base_euler": -2,
                        "t_end": 10.0},
    "flat_form": {"n": 2, "phi0": 1.0, "base_volume": (2 * np.pi) ** 2, "t_end": 1.0},
    # u = sum amp * sin(kx x + px) * sin(ky y + py), or random_modes seeded modes
    "custom": {"grid": 64, "t_end": 1.0, "terms": [[0.1, 1, 2, 0.0, 0.0]]},
}


@dataclass
class RunReport:
    scenario: ScenarioSpec
    config: FlowConfig
    csv_path: Path | None
    verdicts: dict
    plot_paths: list = field(default_factory=list)
    abort_reason: str | None = None
    trajectory: object = None

    @property
    def passed(self):
        return all(v["status"] == "PASS" for v in self.verdicts.values())

    @property
    def exit_code(self):
        if self.abort_reason is not None:
            return EXIT_ABORT
        return EXIT_OK if self.passed else EXIT_CHECK


def catalog_list():
    """Built-in scenarios with their default parameters."""
    return [ScenarioSpec(name, copy.deepcopy(params)) for name, params in _DEFAULTS.items()]


def scenario_defaults(name):
    return copy.deepcopy(_DEFAULTS[name])


def _custom_u(grid, params, seed):
    x, y = grid.coordinates()
    if "u_file" in params:
        g2, u = load_field(params["u_file"])
        if g2 != grid:
            raise ValueError(f"u_file lives on {g2}, scenario grid is {grid}")
        return u
    if "random_modes" in params:
        rng = np.random.default_rng(seed)
        u = np.zeros(grid.shape)
        for _ in range(int(params["random_modes"])):
            kx, ky = rng.integers(1, 4, size=2)
            px, py = rng.uniform(0, 2 * np.pi, size=2)
            u += rng.normal() * np.sin(kx * x + px) * np.sin(ky * y + py)
        grad = np.hypot(*np.gradient(u, grid.spacing))
        return u * float(params.get("max_slope", 0.4)) / grad.max()
    u = np.zeros(grid.shape)
    for term in params["terms"]:
        amp, kx, ky, *phase = term
        px, py = (list(phase) + [0.0, 0.0])[:2]
        u += amp * np.sin(kx * x + px) * np.sin(ky * y + py)
    return u


def build_state(spec):
    """Construct the initial state of a scenario."""
    p = {**_DEFAULTS[spec.name], **spec.parameters}
    if spec.name == "hyperbolic_form":
        return homogeneous_hyperbolic(int(p["n"]), float(p["phi0"]), float(p["base_volume"]),
                                      p.get("base_euler"))
    if spec.name == "flat_form":
        return homogeneous_flat(int(p["n"]), float(p["phi0"]), float(p["base_volume"]))
    grid = GridChart(2, int(p["grid"]))
    if spec.name == "flat_torus":
        return flat_torus(grid)
    if spec.name == "graph_torus":
        x, y = grid.coordinates()
        k = p["frequency"]
        return from_graph(grid, p["amplitude"] * np.sin(k * x) * np.sin(k * y))
    return from_graph(grid, _custom_u(grid, p, spec.seed))


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([repr(float(v)) for v in r.row()])
    return buf.getvalue()


def records_from_csv(text, n, extras):
    rows = list(csv.reader(io.StringIO(text)))
    if tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {rows[0]}")
    out = []
    for row, extra in zip(rows[1:], extras):
        vals = dict(zip(CSV_COLUMNS, map(float, row)))
        out.append(MonitorRecord(**vals, n=n, extra=dict(extra)))
    return out


def _plot(records, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = np.array([r.t for r in records])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in ("MH", "MA", "pinch", "amax2", "bound24", "cert", "gbc_gap"):
        y = np.array([getattr(r, name) for r in records])
        if np.any(y > 0):
            ax.semilogy(t, np.where(y > 0, y, np.nan), marker="o", label=name)
    ax.set_xlabel("t")
    ax.legend(fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _verdict_map(records, spacing, entries=None):
    return {k: v.to_dict() for k, v in monitors.evaluate_checks(records, spacing, entries).items()}


def run(scenario, config, out_dir=None, plot=False):
    """Build, evolve, monitor and (optionally) write a run directory.

    Writes ``trajectory.csv``, ``summary.json`` and, for grid scenarios, the
    initial and final states; with ``plot=True`` also ``monitors.svg``.
    """
    state = build_state(scenario)
    started = time.perf_counter()
    traj = evolve(state, config)
    elapsed = time.perf_counter() - started
    entries = monitors.minvol_certificate(traj)
    verdicts = _verdict_map(traj.records, traj.spacing, entries)
    report = RunReport(scenario, config, None, verdicts, abort_reason=traj.abort_reason,
                       trajectory=traj)
    log.info("%s: %d steps in %.1fs", scenario.name, traj.steps, elapsed)
    if out_dir is None:
        return report
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.csv_path = out / "trajectory.csv"
    report.csv_path.write_text(records_to_csv(traj.records))
    summary = {
        "scenario": asdict(scenario),
        "config": config.to_dict(),
        "n": traj.n,
        "spacing": traj.spacing,
        "steps": traj.steps,
        "abort_reason": traj.abort_reason,
        "verdicts": verdicts,
        "certificate": [asdict(e) for e in entries],
        "extras": [r.extra for r in traj.records],
        "exit_code": report.exit_code,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    if traj.snapshots and traj.spacing is not None:
        params = {**_DEFAULTS[scenario.name], **scenario.parameters}
        save_state(out / "state_initial", traj.snapshots[0], scenario.name, params)
        save_state(out / "state_final", traj.snapshots[-1], scenario.name, params)
    if plot:
        path = out / "monitors.svg"
        _plot(traj.records, path)
        report.plot_paths.append(path)
    return report


def verify(report_dir):
    """Recompute verdicts from a stored run directory.

    Returns ``(recomputed verdicts, mismatching check names)``.
    """
    d = Path(report_dir)
    summary = json.loads((d / "summary.json").read_text())
    records = records_from_csv((d / "trajectory.csv").read_text(), summary["n"], summary["extras"])
    entries = [monitors.CertificateEntry(**e) for e in summary["certificate"]]
    fresh = _verdict_map(records, summary["spacing"], entries)
    stored = summary["verdicts"]
    mismatched = sorted(k for k in set(fresh) | set(stored)
                        if fresh.get(k, {}).get("status") != stored.get(k, {}).get("status"))
    return fresh, mismatched


def oracle(trials=100, n_values=(2, 4), seed=0, draws=100_000):
    """Pfaffian versus closed-form GBC density, and the pointwise eigenvalue inequality."""
    rng = np.random.default_rng(seed)
    report = {"trials": trials, "draws": draws, "seed": seed, "gbc": {}, "det_inequality": {}}
    for n in n_values:
        if n not in (2, 4, 6):
            raise ValueError(f"dimension {n} not supported by the Pfaffian oracle")
        worst = 0.0
        for _ in range(trials):
            a = rng.normal(size=(n, n))
            g = a @ a.T + 0.5 * np.eye(n)
            b = rng.normal(size=(n, n))
            h = b + b.T
            closed = chern_density_closed_form(g, h, n)
            pf = chern_density_pfaffian(g, h, n)
            worst = max(worst, abs(pf - closed) / (1.0 + abs(closed)))
        report["gbc"][str(n)] = worst
        lam = rng.uniform(-10, 10, size=(draws, n))
        _, _, holds = monitors.pointwise_det_inequality(lam)
        report["det_inequality"][str(n)] = int(np.count_nonzero(~holds))
    return report


def _oracle_passed(report):
    tol = {"2": 1e-12, "4": 1e-10, "6": 1e-10}
    return (all(v <= tol[k] for k, v in report["gbc"].items())
            and all(v == 0 for v in report["det_inequality"].values()))


def _build_parser():
    p = argparse.ArgumentParser(prog="spacelike-flow", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("catalog", help="list built-in scenarios")

    r = sub.add_parser("run", help="evolve a scenario and evaluate all monitors")
    r.add_argument("--scenario", required=True, choices=SCENARIOS)
    r.add_argument("--config", type=Path, help="FlowConfig JSON file")
    r.add_argument("--params", help="scenario parameters as a JSON object")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--t-end", type=float)
    r.add_argument("--grid", type=int)
    r.add_argument("--cfl", type=float)
    r.add_argument("--form", choices=("general", "simplified"))
    r.add_argument("--out", type=Path, default=Path("run"))
    r.add_argument("--plot", action="store_true", help="also write monitors.svg")

    o = sub.add_parser("oracle", help="randomized GBC and eigenvalue-inequality oracle")
    o.add_argument("--trials", type=int, default=100)
    o.add_argument("--dims", default="2,4")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--draws", type=int, default=100_000)

    v = sub.add_parser("verify", help="re-check verdicts of a stored run")
    v.add_argument("--report", type=Path, required=True)
    return p


def _resolve(args):
    params = json.loads(args.params) if args.params else {}
    if args.grid is not None:
        params["grid"] = args.grid
    spec = ScenarioSpec(args.scenario, params, args.seed)
    merged = {"t_end": {**_DEFAULTS[spec.name], **params}["t_end"]}
    if args.config is not None:
        merged.update(json.loads(args.config.read_text()))
    for key, value in (("t_end", args.t_end), ("cfl_constant", args.cfl), ("form", args.form)):
        if value is not None:
            merged[key] = value
    return spec, FlowConfig.from_dict(merged)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "catalog":
        print(json.dumps([asdict(s) for s in catalog_list()], indent=2))
        return EXIT_OK

    if args.command == "oracle":
        try:
            dims = tuple(int(d) for d in args.dims.split(","))
            report = oracle(args.trials, dims, args.seed, args.draws)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(json.dumps(report, indent=2))
        return EXIT_OK if _oracle_passed(report) else EXIT_CHECK

    if args.command == "verify":
        try:
            fresh, mismatched = verify(args.report)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read report: {exc}", file=sys.stderr)
            return EXIT_INPUT
        for name, v in fresh.items():
            print(f"{name:26s} {v['status']}  value={v['value']:.6g}")
        if mismatched:
            print(f"stored verdicts disagree for: {', '.join(mismatched)}", file=sys.stderr)
            return EXIT_CHECK
        return EXIT_OK if all(v["status"] == "PASS" for v in fresh.values()) else EXIT_CHECK

    try:
        spec, config = _resolve(args)
        report = run(spec, config, args.out, args.plot)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for name, v in report.verdicts.items():
        print(f"{name:26s} {v['status']}  value={v['value']:.6g}")
    if report.abort_reason:
        print(f"flow aborted: {report.abort_reason}", file=sys.stderr)
    print(f"wrote {report.csv_path}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
