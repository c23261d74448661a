"""Run configuration files and CSV output.

Config documents are UTF-8, line oriented::

    # comment
    [system]
    delta = 0.0
    k = 2
    lambda = 0.1

    [potential]
    family = coulomb
    beta = 0.1

Sections: system, potential, integrator, initial, run, table, scenario.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SystemConfig
from .dynamics import DEFAULT_STEP, IntegratorConfig, Trajectory
from .errors import ConfigError, RwaError
from .experiments import SCENARIOS
from .potentials import (
    HardCore,
    InversePowerLaw,
    LennardJones,
    Lorentz,
    Rectangular,
    RegularizedCoulomb,
    family_name,
)
from .rwa import MODES, RwaInteraction

# family -> (constructor, ordered parameter names, defaults)
FAMILY_PARAMS = {
    "lorentz": (Lorentz, ("beta", "eps"), {}),
    "rectangular": (Rectangular, ("eta", "beta"), {}),
    "regularized_coulomb": (RegularizedCoulomb, ("beta", "eps"), {}),
    "coulomb": (lambda beta: InversePowerLaw(beta, 0.5), ("beta",), {}),
    "inverse_power_law": (InversePowerLaw, ("beta", "n"), {}),
    "lennard_jones": (LennardJones, ("epsilon", "sigma", "m"), {"m": 6}),
    "hard_core": (HardCore, ("beta",), {}),
}
INT_KEYS = {"k", "m", "nodes"}

SECTION_KEYS = {
    "system": {"delta", "k", "lambda", "omega"},
    "potential": {"family", "mode", "nodes", "beta", "eps", "eta", "n", "epsilon", "sigma", "m"},
    "integrator": {"step", "horizon", "sample_every", "method"},
    "initial": {"X", "P"},
    "run": {"scenario", "output_dir", "gated"},
    "table": {"R", "R_min", "R_max", "R_step"},
    "scenario": None,  # free-form overrides, checked by the scenario runner
}


@dataclass
class RunConfig:
    system: SystemConfig
    potential: object
    integrator: IntegratorConfig
    mode: str = "closed_form"
    nodes: int = 512
    scenario: Optional[str] = None
    initial_conditions: Optional[list] = None
    output_dir: str = "."
    gated: bool = False
    R_grid: Optional[list] = None
    scenario_overrides: dict = field(default_factory=dict)
    resolved: dict = field(default_factory=dict)

    def interaction(self) -> Optional[RwaInteraction]:
        if self.potential is None:
            return None
        return RwaInteraction(self.potential, self.mode, self.nodes)

    def require_initial(self) -> list:
        if not self.initial_conditions:
            raise ConfigError("[initial] X and P are required when no scenario is given")
        return self.initial_conditions


# parsing --------------------------------------------------------------------


def _split_document(text: str, overrides=()):
    """{section: {key: (value, line)}} with duplicate and syntax checks."""
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            if current not in SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        table = sections[current]
        if key in table:
            raise ConfigError(
                f"duplicate key {key!r} in [{current}] at lines {table[key][1]} and {lineno}"
            )
        table[key] = (value, lineno)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        lhs, value = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        if sec not in SECTION_KEYS:
            raise ConfigError(f"override {item!r}: unknown section [{sec}]")
        sections.setdefault(sec, {})[key.strip()] = (value.strip(), "override")
    return sections


def _where(entry):
    return f"line {entry[1]}" if entry[1] != "override" else "override"


def _number(section, key, entry):
    value = entry[0]
    try:
        if key in INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        return float(value)
    except ValueError:
        kind = "an integer" if key in INT_KEYS else "a number"
        raise ConfigError(f"[{section}] {key} ({_where(entry)}): expected {kind}, got {value!r}") from None


def _number_list(section, key, entry):
    try:
        return [float(v) for v in entry[0].split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"[{section}] {key} ({_where(entry)}): expected comma-separated numbers") from None


def _bool(section, key, entry):
    v = entry[0].lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"[{section}] {key} ({_where(entry)}): expected true or false")


def _scalar(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def _check_keys(sections):
    for sec, table in sections.items():
        allowed = SECTION_KEYS[sec]
        if allowed is None:
            continue
        for key, entry in table.items():
            if key not in allowed:
                raise ConfigError(f"[{sec}] unknown key {key!r} ({_where(entry)})")


def _build_potential(table):
    if "family" not in table:
        if len(table) > 0 and set(table) - {"mode", "nodes"}:
            raise ConfigError("[potential] family is required")
        return None
    fam_entry = table["family"]
    fam = fam_entry[0]
    if fam == "none":
        return None
    if fam not in FAMILY_PARAMS:
        raise ConfigError(f"[potential] family ({_where(fam_entry)}): unknown family {fam!r}")
    ctor, names, defaults = FAMILY_PARAMS[fam]
    for key, entry in table.items():
        if key not in names and key not in ("family", "mode", "nodes"):
            raise ConfigError(f"[potential] {key} ({_where(entry)}): not a parameter of {fam}")
    args = []
    for name in names:
        if name in table:
            args.append(_number("potential", name, table[name]))
        elif name in defaults:
            args.append(defaults[name])
        else:
            raise ConfigError(f"[potential] {name}: required for family {fam}")
    try:
        return ctor(*args)
    except RwaError as exc:
        # validator messages start with the offending parameter name
        words = str(exc).split()
        bad = words[0] if words and words[0] in names else fam
        raise ConfigError(f"[potential] {bad}: {exc}") from None


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate a run configuration document."""
    sections = _split_document(text, overrides)
    _check_keys(sections)
    resolved: dict = {}

    sysd = sections.get("system", {})
    nums = {k: _number("system", k, v) for k, v in sysd.items()}
    k = nums.get("k", 1)
    lam = nums.get("lambda", 0.0)
    try:
        if "omega" in nums and "delta" in nums:
            raise ConfigError("[system] give either delta or omega, not both")
        if "omega" in nums:
            system = SystemConfig.from_omega(nums["omega"], k, lam)
        else:
            system = SystemConfig(nums.get("delta", 0.0), k, lam)
    except RwaError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[system] {exc}") from None
    resolved["system"] = {"delta": system.delta, "k": system.k, "lambda": system.lam, "omega": system.omega}

    pot = sections.get("potential", {})
    potential = _build_potential(pot)
    mode = pot["mode"][0] if "mode" in pot else "closed_form"
    if mode not in MODES:
        raise ConfigError(f"[potential] mode ({_where(pot['mode'])}): expected one of {', '.join(MODES)}")
    nodes = _number("potential", "nodes", pot["nodes"]) if "nodes" in pot else 512
    if potential is not None:
        try:
            RwaInteraction(potential, mode, nodes)
        except RwaError as exc:
            raise ConfigError(f"[potential] mode: {exc}") from None
        resolved["potential"] = {"family": family_name(potential), **_spec_fields(potential),
                                 "mode": mode, "nodes": nodes}
    else:
        resolved["potential"] = {"family": "none"}

    integ = sections.get("integrator", {})
    period = system.period
    ivals = {
        "step": DEFAULT_STEP,
        "horizon": period,
        "sample_every": period,
    }
    for key in ("step", "horizon", "sample_every"):
        if key in integ:
            ivals[key] = _number("integrator", key, integ[key])
    method = integ["method"][0] if "method" in integ else "rk4"
    try:
        integrator = IntegratorConfig(ivals["step"], ivals["horizon"], ivals["sample_every"], method)
        integrator.steps_per_sample
        integrator.n_samples
    except RwaError as exc:
        raise ConfigError(f"[integrator] {exc}") from None
    resolved["integrator"] = {**ivals, "method": method}

    init = sections.get("initial", {})
    initial = None
    if init:
        if set(init) != {"X", "P"}:
            raise ConfigError("[initial] needs both X and P")
        X = _number_list("initial", "X", init["X"])
        P = _number_list("initial", "P", init["P"])
        if len(X) != len(P) or not X:
            raise ConfigError(f"[initial] X and P must have equal nonzero length, got {len(X)} and {len(P)}")
        if len(X) > 64:
            raise ConfigError("[initial] at most 64 particles are supported")
        if not all(math.isfinite(v) for v in X + P):
            raise ConfigError("[initial] coordinates must be finite")
        initial = list(zip(X, P))
        resolved["initial"] = {"X": X, "P": P}

    run = sections.get("run", {})
    scenario = run["scenario"][0] if "scenario" in run else None
    if scenario is not None:
        if scenario not in SCENARIOS:
            raise ConfigError(f"[run] scenario ({_where(run['scenario'])}): unknown scenario {scenario!r}")
    output_dir = run["output_dir"][0] if "output_dir" in run else "."
    gated = _bool("run", "gated", run["gated"]) if "gated" in run else False
    resolved["run"] = {"scenario": scenario or "", "output_dir": output_dir, "gated": gated}

    tab = sections.get("table", {})
    grid = None
    if "R" in tab:
        if set(tab) - {"R"}:
            raise ConfigError("[table] give either R or R_min/R_max/R_step")
        grid = _number_list("table", "R", tab["R"])
    elif tab:
        try:
            lo = _number("table", "R_min", tab["R_min"])
            hi = _number("table", "R_max", tab["R_max"])
            dr = _number("table", "R_step", tab["R_step"])
        except KeyError as exc:
            raise ConfigError(f"[table] missing {exc.args[0]}") from None
        if dr <= 0 or hi < lo:
            raise ConfigError("[table] need R_step > 0 and R_max >= R_min")
        count = int(math.floor((hi - lo) / dr + 1e-9)) + 1
        grid = [lo + i * dr for i in range(count)]
    if grid is not None:
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("[table] R grid must be strictly ascending")
        resolved["table"] = {"R": grid}

    scen = {key: _scalar(entry[0]) for key, entry in sections.get("scenario", {}).items()}
    if scen:
        resolved["scenario"] = scen

    return RunConfig(system, potential, integrator, mode, nodes, scenario, initial, output_dir,
                     gated, grid, scen, resolved)


def _spec_fields(spec) -> dict:
    return {k: v for k, v in vars(spec).items()}


# CSV ------------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def header_block(meta: Optional[dict]) -> str:
    if not meta:
        return ""
    lines = []
    for section in sorted(meta):
        body = meta[section]
        if isinstance(body, dict):
            lines.append(f"# [{section}]")
            for key in sorted(body):
                val = body[key]
                if isinstance(val, (list, tuple)):
                    val = ", ".join(fmt(v) for v in val)
                else:
                    val = fmt(val)
                lines.append(f"# {key} = {val}")
        else:
            lines.append(f"# {section} = {fmt(body)}")
    return "\n".join(lines) + "\n"


def _csv(header, rows, meta=None) -> str:
    out = [header_block(meta), ",".join(header), "\n"]
    for row in rows:
        out.append(",".join(fmt(v) for v in row))
        out.append("\n")
    return "".join(out)


def emit_potential_table(interaction: RwaInteraction, R_grid, meta: Optional[dict] = None) -> str:
    """CSV of R, U, dU/dR, omega_R, validity and a per-row status."""
    grid = list(R_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("R grid must be sorted ascending")
    rows = []
    for R in grid:
        try:
            U = interaction.energy(R)
            dU = interaction.derivative(R)
            w = -2.0 / R * dU
            valid = "ok" if interaction.is_valid(R) else "flagged"
            rows.append((R, U, dU, w, valid, "ok"))
        except RwaError as exc:
            msg = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
            rows.append((R, math.nan, math.nan, math.nan, "flagged", msg))
    return _csv(("R", "U", "dU_dR", "omega_R", "validity", "status"), rows, meta)


def emit_scan(scan, meta: Optional[dict] = None) -> str:
    rows = [
        (R, m, t, "ok" if v else "flagged")
        for R, m, t, v in zip(scan.R_values, scan.omega_measured, scan.omega_theory, scan.validity)
    ]
    return _csv(("R", "omega_measured", "omega_theory", "validity"), rows, meta)


def emit_trajectory(traj: Trajectory, meta: Optional[dict] = None) -> str:
    """CSV with t, per-particle coordinates, then diagnostics in sorted order."""
    qn, pn = ("x", "p") if traj.frame == "lab" else ("X", "P")
    header = ["t"]
    for i in range(traj.n_particles):
        header += [f"{qn}_{i + 1}", f"{pn}_{i + 1}"]
    diag_keys = sorted(traj.diagnostics)
    header += diag_keys
    rows = []
    for m in range(len(traj)):
        row = [traj.times[m]]
        for i in range(traj.n_particles):
            row += [traj.q[m, i], traj.p[m, i]]
        row += [traj.diagnostics[k][m] for k in diag_keys]
        rows.append(row)
    meta = dict(meta or {})
    if traj.error:
        meta["error"] = traj.error
    return _csv(header, rows, meta)


def emit_metrics(metrics, extra: Optional[dict] = None, meta: Optional[dict] = None) -> str:
    rows = [(i + 1, m.max_pointwise, m.rms, m.horizon) for i, m in enumerate(metrics)]
    header = ["particle", "max_pointwise", "rms", "horizon"]
    radial = (extra or {}).get("radial_rms")
    if radial is not None and len(radial) == len(rows):
        header.append("radial_rms")
        rows = [row + (r,) for row, r in zip(rows, radial)]
    return _csv(header, rows, meta)


def read_csv(text: str):
    """(header, rows) with numeric cells as floats; comment lines are skipped."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        cells = []
        for cell in ln.split(","):
            try:
                cells.append(float(cell))
            except ValueError:
                cells.append(cell)
        rows.append(cells)
    return header, rows


def read_trajectory(text: str) -> Trajectory:
    header, rows = read_csv(text)
    data = np.array([[float(c) for c in row] for row in rows])
    coord = [h for h in header[1:] if "_" in h and h.split("_")[0] in ("x", "p", "X", "P")]
    n = len(coord) // 2
    frame = "lab" if coord and coord[0].startswith("x") else "rot"
    q = data[:, 1: 1 + 2 * n: 2]
    p = data[:, 2: 2 + 2 * n: 2]
    diag = {h: data[:, 1 + 2 * n + j] for j, h in enumerate(header[1 + 2 * n:])}
    return Trajectory(data[:, 0], q, p, frame, diag)
