"""Command-line front end.

Verbs: ``examples``, ``curvature``, ``flow-run``, ``flow-compare``,
``a2-check``, ``smoothing-probe``.  Each file-writing command takes
``--config PATH`` (flat ``key = value`` text, ``#`` comments) and
``--out DIR``, writes exactly one ``manifest.json`` into the output
directory, and is deterministic for a fixed config and seed.

Exit codes: 0 success, 2 invalid config, 3 flow blow-up (the manifest
records the last valid time), 4 positivity failure in the input.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Mapping

import numpy as np

from . import __version__
from . import criteria as cr
from . import flow as fl
from . import geometry as geo
from . import registry as reg
from .grid import PeriodicGrid, ScalarField
from .io import (
    ConfigError,
    Stopwatch,
    format_float,
    load_config,
    read_snapshot,
    validate_config,
    write_csv,
    write_manifest,
    write_snapshot,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NOT_PD = 4

_INPUT_KEYS = {"example": "str", "potential": "str", "sizes": "ints", "seed": "int"}
_STEP_KEYS = {"sigma": "float", "scheme": "str", "dt_min": "float", "max_halvings": "int"}

SCHEMAS = {
    "curvature": {
        **_INPUT_KEYS,
        "n_samples": "int",
        "refine_steps": "int",
        "snapshots": "bool",
    },
    "flow-run": {
        **_INPUT_KEYS,
        **_STEP_KEYS,
        "T": "float",
        "diag_stride": "int",
        "sample_times": "floats",
    },
    "flow-compare": {**_INPUT_KEYS, **_STEP_KEYS, "T": "float", "dt": "float"},
    "a2-check": {**_INPUT_KEYS, "S": "float", "theta": "float", "gauge": "str"},
    "smoothing-probe": {**_INPUT_KEYS, **_STEP_KEYS, "t_samples": "floats"},
}


def _require_positive(cfg: Mapping[str, object], keys: tuple[str, ...]) -> None:
    for key in keys:
        if key in cfg and not (float(cfg[key]) > 0):  # type: ignore[arg-type]
            raise ConfigError(f"config key {key!r} must be positive, got {cfg[key]}")


def _build_input(cfg: Mapping[str, object], seed_flag: int | None):
    """Instantiate the configured metric source: a registry example or a
    potential snapshot.  Returns (PotentialMetric | MetricField, label)."""
    has_example = "example" in cfg
    has_potential = "potential" in cfg
    if has_example == has_potential:
        raise ConfigError("config must set exactly one of 'example' or 'potential'")
    seed = seed_flag if seed_flag is not None else cfg.get("seed")
    if has_example:
        name = str(cfg["example"])
        try:
            built = reg.build_example(name, sizes=cfg.get("sizes"), seed=seed)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        return built, name
    path = str(cfg["potential"])
    try:
        grid, data, _, fields = read_snapshot(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read potential snapshot {path}: {exc}") from exc
    if data.shape[-1] != 1:
        raise ConfigError(f"potential snapshot must have one component, got {data.shape[-1]}")
    if "background" not in fields:
        raise ConfigError("potential snapshot header lacks the 'background' key")
    n = grid.ndim
    entries = [float(v) for v in fields["background"].split(",")]
    if len(entries) != n * n:
        raise ConfigError(f"background must have {n * n} entries, got {len(entries)}")
    background = np.array(entries).reshape(n, n)
    pm = geo.PotentialMetric(grid, background, ScalarField(grid, data[..., 0]))
    return pm, os.path.basename(path)


def write_potential_snapshot(path: str, pm: geo.PotentialMetric) -> None:
    """Snapshot of a potential metric: psi plus the background in the header."""
    background = ",".join(format_float(v) for v in pm.background.ravel())
    write_snapshot(path, pm.grid, pm.psi.values, extra={"background": background})


def _step_control(cfg: Mapping[str, object]) -> fl.StepControl:
    kwargs = {}
    if "sigma" in cfg:
        kwargs["sigma"] = float(cfg["sigma"])
    if "scheme" in cfg:
        kwargs["scheme"] = str(cfg["scheme"])
    if "dt_min" in cfg:
        kwargs["dt_min"] = float(cfg["dt_min"])
    if "max_halvings" in cfg:
        kwargs["max_halvings"] = int(cfg["max_halvings"])
    try:
        return fl.StepControl(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_probe(probe: str | None, grid: PeriodicGrid):
    if probe is None:
        return None
    try:
        coords = tuple(float(v) for v in probe.split(","))
        return grid.nearest_node(coords)
    except ValueError as exc:
        raise ConfigError(f"bad --probe {probe!r}: {exc}") from exc


NOT_APPLICABLE = "not applicable (non-Hessian input)"


def _curvature_report(built, label, node, n_samples, refine_steps, seed):
    lines = [f"input: {label}"]
    if isinstance(built, geo.PotentialMetric):
        pm, g = built, geo.metric_from_potential(built)
    else:
        pm, g = None, built
    grid = g.grid
    lines.append(f"grid_sizes: {','.join(str(s) for s in grid.sizes)}")

    gamma_mixed, gamma_lower = geo.christoffel(g)
    alpha, kappa, beta = geo.koszul(g)
    lines.append(f"hessian_defect: {format_float(geo.hessian_defect(g))}")
    _, torsion_norm = geo.pullback_chern_torsion(g)
    lines.append(f"torsion_norm: {format_float(torsion_norm)}")
    lines.append(f"sup_gamma_mixed: {format_float(float(np.max(np.abs(gamma_mixed))))}")
    lines.append(f"sup_gamma_lower: {format_float(float(np.max(np.abs(gamma_lower))))}")
    lines.append(f"sup_alpha: {format_float(float(np.max(np.abs(alpha))))}")
    lines.append(f"sup_kappa: {format_float(kappa.sup_norm())}")
    lines.append(f"sup_beta: {format_float(beta.sup_norm())}")
    lines.append(
        f"sup_riemann: {format_float(float(np.max(np.abs(geo.riemann_from_gamma(g)))))}"
    )

    if pm is not None:
        q = geo.hessian_curvature(pm)
        lines.append(f"sup_q: {format_float(q.sup_norm())}")
        report = geo.sectional_extremes(q, g, n_samples, refine_steps, seed)
        lines.append(f"sectional_max: {format_float(report.max_value)}")
        lines.append(f"sectional_min: {format_float(report.min_value)}")
        lines.append(f"sectional_seed: {seed}")
        lines.append(f"sectional_samples: {report.samples_used}")
    else:
        q = None
        for key in ("sup_q", "sectional_max", "sectional_min"):
            lines.append(f"{key}: {NOT_APPLICABLE}")

    if node is not None:
        lines.append(f"probe_node: {','.join(str(k) for k in node)}")
        for i, j in geo.sym_pairs(grid.ndim):
            lines.append(f"beta_{i}{j}@probe: {format_float(beta.component(i, j)[node])}")
            lines.append(f"kappa_{i}{j}@probe: {format_float(kappa.component(i, j)[node])}")
        for i in range(grid.ndim):
            lines.append(f"alpha_{i}@probe: {format_float(alpha[(*node, i)])}")
        lines.append(
            f"gamma_mixed_000@probe: {format_float(gamma_mixed[(*node, 0, 0, 0)])}"
        )
        if q is not None:
            lines.append(f"q_0000@probe: {format_float(q.component(0, 0, 0, 0)[node])}")
        else:
            lines.append(f"q_0000@probe: {NOT_APPLICABLE}")
    return lines, g, beta, pm


def cmd_curvature(args) -> int:
    raw = load_config(args.config)
    cfg = validate_config(raw, SCHEMAS["curvature"])
    _require_positive(cfg, ("n_samples", "refine_steps"))
    built, label = _build_input(cfg, args.seed)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    n_samples = int(cfg.get("n_samples", 1000))
    refine_steps = int(cfg.get("refine_steps", 50))

    grid = built.grid
    node = _parse_probe(args.probe, grid)
    with Stopwatch() as watch:
        lines, g, beta, pm = _curvature_report(built, label, node, n_samples, refine_steps, seed)

    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "report.txt")
    with open(report_path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")
    written = ["report.txt"]
    if cfg.get("snapshots", False):
        write_snapshot(os.path.join(args.out, "metric.hfld"), grid, g.components)
        write_snapshot(os.path.join(args.out, "beta.hfld"), grid, beta.components)
        written += ["metric.hfld", "beta.hfld"]
        if pm is not None:
            write_potential_snapshot(os.path.join(args.out, "psi.hfld"), pm)
            written.append("psi.hfld")
    write_manifest(args.out, {
        "command": "curvature",
        "config": dict(raw),
        "seed": seed,
        "wall_clock_seconds": watch.seconds,
        "outcome": "ok",
        "files": written,
    })
    print("\n".join(lines))
    return EXIT_OK


def _metric_of(built) -> geo.MetricField:
    if isinstance(built, geo.PotentialMetric):
        return geo.metric_from_potential(built)
    return built


def cmd_flow_run(args) -> int:
    raw = load_config(args.config)
    cfg = validate_config(raw, SCHEMAS["flow-run"])
    if "T" not in cfg:
        raise ConfigError("flow-run requires T")
    _require_positive(cfg, ("T", "sigma", "dt_min"))
    control = _step_control(cfg)
    built, label = _build_input(cfg, args.seed)
    g0 = _metric_of(built)
    t_final = float(cfg["T"])
    stride = int(cfg.get("diag_stride", 100))
    samples = cfg.get("sample_times")

    os.makedirs(args.out, exist_ok=True)
    header = fl.DiagnosticsRow.csv_header(g0.grid.ndim)
    outcome, last_t, code = "ok", t_final, EXIT_OK
    with Stopwatch() as watch:
        try:
            trajectory, rows = fl.run_flow(g0, t_final, control, samples, stride)
        except fl.FlowBlowup as blowup:
            rows = blowup.diagnostics
            trajectory = blowup.trajectory
            outcome, last_t, code = "blowup", blowup.t, EXIT_BLOWUP
    write_csv(os.path.join(args.out, "diagnostics.csv"), header, [r.csv_values() for r in rows])
    written = ["diagnostics.csv"]
    if trajectory:
        final = trajectory[-1]
        write_snapshot(os.path.join(args.out, "final_metric.hfld"), g0.grid, final.g.components, final.t)
        write_snapshot(os.path.join(args.out, "final_phi.hfld"), g0.grid, final.phi.values, final.t)
        written += ["final_metric.hfld", "final_phi.hfld"]
    write_manifest(args.out, {
        "command": "flow-run",
        "config": dict(raw),
        "input": label,
        "wall_clock_seconds": watch.seconds,
        "outcome": outcome,
        "last_valid_t": last_t,
        "files": written,
    })
    print(f"flow-run {label}: outcome={outcome} last_t={format_float(last_t)}")
    return code


def cmd_flow_compare(args) -> int:
    raw = load_config(args.config)
    cfg = validate_config(raw, SCHEMAS["flow-compare"])
    for key in ("T", "dt"):
        if key not in cfg:
            raise ConfigError(f"flow-compare requires {key}")
    _require_positive(cfg, ("T", "dt", "sigma", "dt_min"))
    control = _step_control(cfg)
    built, label = _build_input(cfg, args.seed)
    g0 = _metric_of(built)

    os.makedirs(args.out, exist_ok=True)
    outcome, code = "ok", EXIT_OK
    discrepancy = None
    with Stopwatch() as watch:
        try:
            discrepancy = fl.equivalence_check(g0, float(cfg["T"]), control, float(cfg["dt"]))
        except fl.FlowBlowup as blowup:
            outcome, code = "blowup", EXIT_BLOWUP
            last_t = blowup.t
    lines = [f"input: {label}", f"T: {format_float(float(cfg['T']))}", f"dt: {format_float(float(cfg['dt']))}"]
    if discrepancy is not None:
        lines.append(f"discrepancy: {format_float(discrepancy)}")
    else:
        lines.append("discrepancy: blowup")
    with open(os.path.join(args.out, "compare.txt"), "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")
    manifest = {
        "command": "flow-compare",
        "config": dict(raw),
        "input": label,
        "wall_clock_seconds": watch.seconds,
        "outcome": outcome,
        "files": ["compare.txt"],
    }
    if outcome == "blowup":
        manifest["last_valid_t"] = last_t
    write_manifest(args.out, manifest)
    print("\n".join(lines))
    return code


def cmd_a2_check(args) -> int:
    raw = load_config(args.config)
    cfg = validate_config(raw, SCHEMAS["a2-check"])
    if "theta" not in cfg:
        raise ConfigError("a2-check requires theta")
    _require_positive(cfg, ("theta",))
    gauge = str(cfg.get("gauge", "zero"))
    if gauge not in ("zero", "logdet"):
        raise ConfigError(f"gauge must be 'zero' or 'logdet', got {gauge!r}")
    built, label = _build_input(cfg, args.seed)
    g0 = _metric_of(built)
    theta = float(cfg["theta"])

    with Stopwatch() as watch:
        if gauge == "zero":
            u = ScalarField.zeros(g0.grid)
            scale_with_s = False
        else:
            u = cr.log_det_gauge(g0)
            scale_with_s = True
        lines = [f"input: {label}", f"gauge: {gauge}", f"theta: {format_float(theta)}"]
        if "S" in cfg:
            s_probe = float(cfg["S"])
            u_probe = cr.log_det_gauge(g0, scale=s_probe) if gauge == "logdet" else u
            margin = cr.a2_margin(g0, s_probe, u_probe, theta)
            lines.append(f"margin_at_S: {format_float(margin)}")
        try:
            result = cr.max_s(g0, u, theta, scale_gauge_with_s=scale_with_s)
        except cr.InfeasibleAtZero:
            lines.append("S_max: infeasible at S=0")
            result = None
        if result is not None:
            if result.unbounded:
                lines.append("S_max: unbounded")
            else:
                lines.append(f"S_max: {format_float(result.s_max)}")
                lines.append(
                    "witness_node: " + ",".join(str(k) for k in result.witness_node)
                )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "a2.txt"), "w", encoding="ascii") as handle:
            handle.write("\n".join(lines) + "\n")
        write_manifest(args.out, {
            "command": "a2-check",
            "config": dict(raw),
            "input": label,
            "wall_clock_seconds": watch.seconds,
            "outcome": "ok",
            "files": ["a2.txt"],
        })
    print("\n".join(lines))
    return EXIT_OK


def cmd_smoothing_probe(args) -> int:
    raw = load_config(args.config)
    cfg = validate_config(raw, SCHEMAS["smoothing-probe"])
    if "t_samples" not in cfg:
        raise ConfigError("smoothing-probe requires t_samples")
    _require_positive(cfg, ("sigma", "dt_min"))
    control = _step_control(cfg)
    built, label = _build_input(cfg, args.seed)
    g0 = _metric_of(built)
    samples = cfg["t_samples"]

    os.makedirs(args.out, exist_ok=True)
    outcome, code = "ok", EXIT_OK
    series = []
    with Stopwatch() as watch:
        try:
            series = fl.smoothing_probe(g0, samples, control)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        except fl.FlowBlowup as blowup:
            outcome, code = "blowup", EXIT_BLOWUP
            last_t = blowup.t
    write_csv(os.path.join(args.out, "probe.csv"), ["t", "sup_q", "t_sup_q"], series)
    manifest = {
        "command": "smoothing-probe",
        "config": dict(raw),
        "input": label,
        "wall_clock_seconds": watch.seconds,
        "outcome": outcome,
        "files": ["probe.csv"],
    }
    if outcome == "blowup":
        manifest["last_valid_t"] = last_t
    write_manifest(args.out, manifest)
    for t, sup_q, t_sup_q in series:
        print(f"t={format_float(t)} sup_q={format_float(sup_q)} t_sup_q={format_float(t_sup_q)}")
    return code


def cmd_examples(args) -> int:
    for name in sorted(reg.EXAMPLES):
        spec = reg.EXAMPLES[name]
        sizes = "x".join(str(s) for s in spec.default_sizes)
        seed = f", default seed {reg.ROUGH_DEFAULT_SEED}" if spec.seeded else ""
        print(f"{name} ({spec.kind}, {sizes}{seed}): {spec.doc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koszulflow",
        description="Curvature toolkit and flow integrator for Hessian metrics "
        "on periodic affine charts",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("examples", help="list the built-in example metrics")

    def io_command(name, help_text, needs_out=True):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="key = value config file")
        cmd.add_argument("--out", required=needs_out, help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--probe", default=None, help="comma-separated coordinates to probe")
        return cmd

    io_command("curvature", "curvature/Koszul report for one metric")
    io_command("flow-run", "integrate the flow and write diagnostics")
    io_command("flow-compare", "tensor vs potential flow discrepancy")
    io_command("a2-check", "gauge margin and maximal feasible S", needs_out=False)
    io_command("smoothing-probe", "curvature decay series from rough data")
    return parser


_HANDLERS = {
    "examples": cmd_examples,
    "curvature": cmd_curvature,
    "flow-run": cmd_flow_run,
    "flow-compare": cmd_flow_compare,
    "a2-check": cmd_a2_check,
    "smoothing-probe": cmd_smoothing_probe,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except geo.NotPositiveDefinite as exc:
        print(f"positivity failure: {exc}", file=sys.stderr)
        return EXIT_NOT_PD


if __name__ == "__main__":
    sys.exit(main())
