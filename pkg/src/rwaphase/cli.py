"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 validity-gate failure in a gated run.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from .core import RotState
from .dynamics import IntegratorConfig, poincare_map, rwa_evolve
from .errors import (
    ConfigError,
    DomainError,
    IndeterminateError,
    RwaError,
    SingularityError,
    UsageError,
    ValidityError,
)
from .experiments import SCAN_GRID, SCENARIOS, compare_trajectories, radial_rms, run_scenario, scan_omega
from .cli_io import (
    _scalar,
    emit_metrics,
    emit_potential_table,
    emit_scan,
    emit_trajectory,
    parse_config,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDITY = 0, 2, 3, 4


class GateFailure(Exception):
    pass


def _load(args):
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, args.override or ())


def _write(out_dir, name, text):
    if out_dir is None:
        sys.stdout.write(text)
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _out_dir(args, rc):
    if args.out:
        return args.out
    return rc.output_dir if rc.output_dir != "." or args.config else None


def _need_potential(rc):
    if rc.potential is None:
        raise ConfigError("[potential] family is required for this command")


def _initial_state(rc):
    pts = rc.require_initial()
    return RotState(0.0, [p[0] for p in pts], [p[1] for p in pts])


def _gate_initial(rc, state):
    if not rc.gated or rc.potential is None:
        return
    inter = rc.interaction()
    for i in range(state.n):
        for j in range(i + 1, state.n):
            R = math.hypot(state.X[i] - state.X[j], state.P[i] - state.P[j])
            if not inter.is_valid(R):
                raise GateFailure(f"pair ({i + 1}, {j + 1}) at R = {R} fails the validity gate")


def cmd_table(args, rc):
    _need_potential(rc)
    grid = rc.R_grid or list(SCAN_GRID)
    text = emit_potential_table(rc.interaction(), grid, rc.resolved)
    _write(_out_dir(args, rc), "table.csv", text)
    if rc.gated and "flagged" in text.split("\n", 1)[-1]:
        raise GateFailure("some rows fail the validity gate")


def cmd_scan(args, rc):
    _need_potential(rc)
    scan = scan_omega(rc.potential, rc.R_grid or list(SCAN_GRID))
    _write(_out_dir(args, rc), "scan.csv", emit_scan(scan, rc.resolved))
    if rc.gated and not all(scan.validity):
        raise GateFailure("some scan points fail the validity gate")


def _n_periods(rc):
    ratio = rc.integrator.horizon / rc.system.period
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ConfigError("[integrator] horizon must be a whole number of stroboscopic periods")
    return n


def _check_traj(traj):
    if traj.error:
        raise SingularityError(traj.error)


def cmd_simulate(args, rc):
    state = _initial_state(rc)
    _gate_initial(rc, state)
    traj = poincare_map(rc.system, rc.potential, state, _n_periods(rc))
    _write(_out_dir(args, rc), "poincare.csv", emit_trajectory(traj, rc.resolved))
    _check_traj(traj)


def cmd_simulate_rwa(args, rc):
    state = _initial_state(rc)
    _gate_initial(rc, state)
    traj = rwa_evolve(rc.system, rc.interaction(), state, rc.integrator)
    _write(_out_dir(args, rc), "rwa.csv", emit_trajectory(traj, rc.resolved))
    if traj.error and ("Validity" in traj.error or "Domain" in traj.error):
        raise GateFailure(traj.error)
    _check_traj(traj)


def cmd_compare(args, rc):
    state = _initial_state(rc)
    _gate_initial(rc, state)
    rc.integrator.check_stroboscopic(rc.system.period)
    n = _n_periods(rc)
    lab = poincare_map(rc.system, rc.potential, state, n)
    # the RWA side keeps the configured step but samples once per period, like the lab side
    step = rc.system.period / max(1, round(rc.system.period / rc.integrator.step))
    icfg = IntegratorConfig(step, n * rc.system.period, rc.system.period)
    rwa = rwa_evolve(rc.system, rc.interaction(), state, icfg)
    out = _out_dir(args, rc)
    _write(out, "poincare.csv", emit_trajectory(lab, rc.resolved))
    _write(out, "rwa.csv", emit_trajectory(rwa, rc.resolved))
    _check_traj(lab)
    _check_traj(rwa)
    metrics = compare_trajectories(lab, rwa)
    _write(out, "metrics.csv", emit_metrics(metrics, {"radial_rms": radial_rms(lab, rwa)}, rc.resolved))


def cmd_scenario(args, rc):
    name = args.name or rc.scenario
    if name is None:
        raise ConfigError("scenario id missing")
    overrides = dict(rc.scenario_overrides)
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set {item!r} must look like key=value")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _scalar(value.strip())
    try:
        result = run_scenario(name, overrides)
    except UsageError as exc:
        raise ConfigError(str(exc)) from None
    meta = {"scenario": {"name": name, **{k: _meta_value(v) for k, v in result.params.items()}}}
    out = _out_dir(args, rc)
    if name == "two_body_scan":
        for fam, scan in result.extra["scans"].items():
            _write(out, f"scan_{fam}.csv", emit_scan(scan, meta))
        return
    if result.lab is not None:
        _write(out, "poincare.csv", emit_trajectory(result.lab, meta))
    if result.rwa is not None:
        _write(out, "rwa.csv", emit_trajectory(result.rwa, meta))
    if "free" in result.extra:
        _write(out, "poincare_free.csv", emit_trajectory(result.extra["free"], meta))
    if result.metrics:
        _write(out, "metrics.csv", emit_metrics(result.metrics, result.extra, meta))
    for traj in (result.lab, result.rwa):
        if traj is not None:
            _check_traj(traj)


def _meta_value(v):
    if isinstance(v, (list, tuple)):
        flat = []
        for item in v:
            flat.extend(item if isinstance(item, (list, tuple)) else [item])
        return flat
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwaphase", description="Phase-space interactions of driven trapped particles.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--out", help="output directory (stdout when omitted)")
    common.add_argument("--override", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config entry (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("table", parents=[common], help="tabulate the RWA interaction")
    sub.add_parser("scan-omega", parents=[common], help="two-body rotation rate scan")
    sub.add_parser("simulate", parents=[common], help="lab-frame run with stroboscopic sampling")
    sub.add_parser("simulate-rwa", parents=[common], help="rotating-frame RWA run")
    sub.add_parser("compare", parents=[common], help="paired lab and RWA runs with metrics")
    sc = sub.add_parser("scenario", parents=[common], help="run a named study")
    sc.add_argument("name", nargs="?", choices=SCENARIOS)
    sc.add_argument("--set", action="append", metavar="KEY=VALUE", help="scenario parameter (repeatable)")
    return parser


COMMANDS = {
    "table": cmd_table,
    "scan-omega": cmd_scan,
    "simulate": cmd_simulate,
    "simulate-rwa": cmd_simulate_rwa,
    "compare": cmd_compare,
    "scenario": cmd_scenario,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = _load(args)
        COMMANDS[args.command](args, rc)
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GateFailure as exc:
        print(f"validity gate: {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except (ValidityError, DomainError) as exc:
        print(f"validity gate: {exc}", file=sys.stderr)
        return EXIT_VALIDITY
    except (SingularityError, IndeterminateError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RwaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
