"""Scripted numerical studies: two-body rotation scans and few-body comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .core import RotState, SystemConfig
from .dynamics import IntegratorConfig, Trajectory, poincare_map, rwa_evolve
from .errors import DomainError, IndeterminateError, UsageError
from .potentials import (
    HardCore,
    InversePowerLaw,
    LennardJones,
    Lorentz,
    RegularizedCoulomb,
)
from .rwa import RwaInteraction, is_valid, single_particle_g
from .specfun import jn_prime

SCAN_GRID = tuple(0.5 + 0.25 * i for i in range(23))
FIT_SKIP = 10
FIT_MAX_SAMPLES = 2000
FIT_ROTATIONS = 3.0
PILOT_SAMPLES = 60
# below this radius the angle about the centre is meaningless
MIN_FIT_RADIUS = 1e-9

SCENARIOS = (
    "two_body_scan",
    "three_body_coulomb",
    "three_body_hardcore",
    "three_body_lj",
    "driven_two_body",
    "driven_two_body_n1",
    "driven_eight_body",
)


def default_potentials() -> dict:
    """The four interaction families of the rotation-frequency scan.

    The hard core is represented by its steep power-law proxy in both the
    lab run and the theory curve, so the comparison tests a single potential.
    """
    return {
        "lorentz": Lorentz(0.1, 1.0),
        "coulomb": InversePowerLaw(0.1, 0.5),
        "hard_core": HardCore(0.1).proxy(),
        "lennard_jones": LennardJones(0.01, 0.1, 6),
    }


# rotation frequency ---------------------------------------------------------


def omega_theory(interaction: RwaInteraction, R: float) -> float:
    """omega_R = -(2/R) dU/dR; NaN where the interaction cannot be evaluated."""
    try:
        return -2.0 / R * interaction.derivative(R)
    except DomainError:
        return math.nan


def track_labels(Z: np.ndarray) -> np.ndarray:
    """Reorder identical particles so each column varies continuously in time.

    Particles that bounce off each other in the lab frame swap places between
    samples; the assignment minimising total displacement restores continuity.
    """
    out = np.array(Z, dtype=complex, copy=True)
    for m in range(1, out.shape[0]):
        cost = np.abs(out[m - 1][:, None] - out[m][None, :])
        _, cols = linear_sum_assignment(cost)
        out[m] = out[m][cols]
    return out


def _fit_rate(Z: np.ndarray, times: np.ndarray) -> float:
    Z = track_labels(Z)
    rel = Z[:, 0] - Z.mean(axis=1)
    if np.min(np.abs(rel)) < MIN_FIT_RADIUS:
        raise IndeterminateError("particle sits on the centre of mass; rotation angle is undefined")
    angle = np.unwrap(np.angle(rel))
    skip = FIT_SKIP if len(times) > FIT_SKIP + 2 else 0
    t = times[skip:]
    a = angle[skip:]
    if np.ptp(a) == 0.0:
        return 0.0
    return float(np.polyfit(t, a, 1)[0])


def two_body_initial(R: float) -> RotState:
    return RotState(0.0, [0.5 * R, -0.5 * R], [0.0, 0.0])


def omega_measured(cfg: SystemConfig, spec, R: float, n_samples: Optional[int] = None,
                   step: Optional[float] = None) -> float:
    """Signed two-body rotation rate extracted from stroboscopic lab data.

    Without ``n_samples`` a short pilot run estimates the rate; the fit then
    spans three rotations (capped at 2000 samples) after a 10-sample skip.
    """
    if cfg.lam != 0.0 or cfg.delta != 0.0:
        raise UsageError("rotation rates are measured on resonance without driving")
    initial = two_body_initial(R)
    if n_samples is None:
        pilot = poincare_map(cfg, spec, initial, PILOT_SAMPLES, step)
        if pilot.error:
            raise IndeterminateError(pilot.error)
        w = abs(_fit_rate(pilot.Z, pilot.times))
        n_samples = PILOT_SAMPLES
        if w > 0.0:
            rotations = FIT_ROTATIONS * 2.0 * math.pi / w / cfg.period
            n_samples = int(min(FIT_MAX_SAMPLES, max(PILOT_SAMPLES, FIT_SKIP + math.ceil(rotations))))
        if n_samples == PILOT_SAMPLES:
            return _fit_rate(pilot.Z, pilot.times)
    traj = poincare_map(cfg, spec, initial, n_samples, step)
    if traj.error:
        raise IndeterminateError(traj.error)
    return _fit_rate(traj.Z, traj.times)


@dataclass
class OmegaScanResult:
    R_values: list
    omega_measured: list
    omega_theory: list
    validity: list
    family: str = ""

    def __post_init__(self):
        n = len(self.R_values)
        if not (len(self.omega_measured) == len(self.omega_theory) == len(self.validity) == n):
            raise UsageError("scan columns must have equal length")

    def relative_errors(self) -> list:
        out = []
        for m, t in zip(self.omega_measured, self.omega_theory):
            out.append(abs(m - t) / abs(t) if t and math.isfinite(t) else math.nan)
        return out


def scan_omega(spec, R_values=SCAN_GRID, family: str = "") -> OmegaScanResult:
    cfg = SystemConfig(0.0, 1, 0.0)
    interaction = RwaInteraction(spec)
    meas, theo, valid = [], [], []
    for R in R_values:
        meas.append(omega_measured(cfg, spec, R))
        theo.append(omega_theory(interaction, R))
        valid.append(bool(is_valid(spec, R)))
    return OmegaScanResult(list(R_values), meas, theo, valid, family)


# comparison -----------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonMetric:
    max_pointwise: float
    rms: float
    horizon: float

    def __post_init__(self):
        if self.rms > self.max_pointwise * (1.0 + 1e-12) + 1e-300:
            raise UsageError("rms cannot exceed the maximum")


def _same_cadence(a: Trajectory, b: Trajectory):
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0.0, atol=1e-9):
        raise UsageError("trajectories must share cadence and horizon")
    if a.n_particles != b.n_particles:
        raise UsageError("trajectories must have the same number of particles")


def compare_trajectories(a: Trajectory, b: Trajectory) -> list:
    """Per-particle phase-space distance statistics between two runs."""
    _same_cadence(a, b)
    d = np.abs(a.Z - b.Z)
    horizon = float(a.times[-1] - a.times[0]) if len(a) > 1 else 0.0
    return [
        ComparisonMetric(float(np.max(d[:, i])), float(np.sqrt(np.mean(d[:, i] ** 2))), horizon)
        for i in range(d.shape[1])
    ]


def radial_rms(a: Trajectory, b: Trajectory) -> list:
    """Per-particle RMS of r_i differences relative to the RMS radius of ``a``."""
    _same_cadence(a, b)
    ra = np.abs(a.Z)
    rb = np.abs(b.Z)
    return [
        float(np.sqrt(np.mean((rb[:, i] - ra[:, i]) ** 2)) / np.sqrt(np.mean(ra[:, i] ** 2)))
        for i in range(ra.shape[1])
    ]


def diameter(Z: np.ndarray) -> float:
    """Largest distance between any two samples of one particle."""
    Z = np.asarray(Z)
    return float(np.max(np.abs(Z[:, None] - Z[None, :])))


# driven single-particle landscape -------------------------------------------


def _radial_root(cfg: SystemConfig, sign: float) -> float:
    """First r > 0 where d/dr [delta r^2/2 + D sign J_k(r)] vanishes."""
    D = cfg.drive_factor * sign
    f = lambda r: cfg.delta * r + D * jn_prime(cfg.k, r)  # noqa: E731
    r, dr = 1e-3, 1e-2
    prev = f(r)
    while r < 60.0:
        nxt = f(r + dr)
        if prev == 0.0 or prev * nxt < 0.0:
            return brentq(f, r, r + dr, xtol=1e-15, rtol=1e-15)
        r += dr
        prev = nxt
    raise DomainError("no radial extremum of the single-particle energy below r = 60")


def stable_points(cfg: SystemConfig) -> list:
    """The 2k extrema of g_i on its first ring, at angles j pi / k."""
    if cfg.drive_factor == 0.0:
        raise UsageError("stable points need even k and nonzero driving")
    k = cfg.k
    radius = {1.0: _radial_root(cfg, 1.0), -1.0: _radial_root(cfg, -1.0)}
    pts = []
    for j in range(2 * k):
        theta = j * math.pi / k
        r = radius[1.0 if j % 2 == 0 else -1.0]
        pts.append((r * math.cos(theta), r * math.sin(theta)))
    return pts


def stable_point_kinds(cfg: SystemConfig) -> list:
    """'max' or 'min' for each entry of ``stable_points``."""
    out = []
    for j in range(2 * cfg.k):
        s = cfg.drive_factor * (1.0 if j % 2 == 0 else -1.0)
        out.append("max" if s > 0.0 else "min")
    return out


# scenarios ------------------------------------------------------------------


@dataclass
class ScenarioResult:
    name: str
    params: dict
    lab: Optional[Trajectory] = None
    rwa: Optional[Trajectory] = None
    metrics: list = field(default_factory=list)
    radii: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


_POTENTIAL_KEYS = {"family", "beta", "eps", "n", "epsilon", "sigma", "m", "eta"}


def build_potential(params: dict):
    fam = params.get("family", "none")
    if fam in ("none", None):
        return None
    if fam == "lorentz":
        return Lorentz(params.get("beta", 0.1), params.get("eps", 1.0))
    if fam == "coulomb":
        return InversePowerLaw(params.get("beta", 0.1), 0.5)
    if fam == "regularized_coulomb":
        return RegularizedCoulomb(params.get("beta", 0.1), params.get("eps", 0.0))
    if fam == "inverse_power_law":
        return InversePowerLaw(params.get("beta", 0.1), params.get("n", 1.0))
    if fam == "hard_core":
        return HardCore(params.get("beta", 0.1))
    if fam == "lennard_jones":
        return LennardJones(params.get("epsilon", 0.01), params.get("sigma", 0.1), int(params.get("m", 6)))
    raise UsageError(f"unknown potential family {fam!r}")


def _ring(radius: float, count: int, offset: float = 0.0):
    ang = [j * 2.0 * math.pi / count + offset for j in range(count)]
    return [(radius * math.cos(a), radius * math.sin(a)) for a in ang]


def _defaults(name: str) -> dict:
    if name in ("three_body_coulomb", "three_body_hardcore", "three_body_lj"):
        family = {"three_body_coulomb": "coulomb", "three_body_hardcore": "hard_core",
                  "three_body_lj": "lennard_jones"}[name]
        return {"family": family, "delta": 0.0, "k": 1, "lam": 0.0, "periods": 100,
                "pair_distance": 1.0, "third_distance": 4.0, "rwa_substeps": 100}
    if name in ("driven_two_body", "driven_two_body_n1"):
        family = "coulomb" if name == "driven_two_body" else "inverse_power_law"
        return {"family": family, "beta": 0.1, "n": 1.0, "delta": 0.0, "k": 2, "lam": 0.1,
                "periods": 300, "perturb": 0.2, "rotate": 0.0, "rwa_substeps": 100}
    if name == "driven_eight_body":
        # the small common rotation keeps mirror-image points from sharing a lab position at t = 0
        return {"family": "coulomb", "beta": 0.1, "delta": 0.0, "k": 4, "lam": 0.1,
                "periods": 300, "perturb": 0.2, "rotate": 0.05, "rwa_substeps": 100}
    if name == "two_body_scan":
        return {"family": "all"}
    raise UsageError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}")


def _initial_points(name: str, cfg: SystemConfig, params: dict):
    if "initial" in params:
        return [tuple(pt) for pt in params["initial"]]
    if name.startswith("three_body"):
        d, far = params["pair_distance"], params["third_distance"]
        # centre of mass at the origin: pair centre c, third particle at c + far
        c = -far / 3.0
        return [(c + far, 0.0), (c + 0.5 * d, 0.0), (c - 0.5 * d, 0.0)]
    pts = stable_points(cfg)
    if name.startswith("driven_two_body"):
        # two opposite extrema of the same kind: theta = 0 and theta = pi
        pts = [pts[0], pts[cfg.k]]
    out = []
    rot = params.get("rotate", 0.0)
    c, s_ = math.cos(rot), math.sin(rot)
    for X, P in pts:
        r = math.hypot(X, P)
        f = (r + params["perturb"]) / r
        X, P = X * f, P * f
        out.append((X * c - P * s_, X * s_ + P * c))
    return out


def _paired_runs(cfg, spec, initial: RotState, periods: int, rwa_substeps: int):
    lab = poincare_map(cfg, spec, initial, periods)
    if spec is not None:
        tracked = track_labels(lab.Z)
        lab.q, lab.p = tracked.real.copy(), tracked.imag.copy()
    interaction = RwaInteraction(spec) if spec is not None else None
    period = cfg.period
    icfg = IntegratorConfig(step=period / rwa_substeps, horizon=periods * period, sample_every=period)
    rwa = rwa_evolve(cfg, interaction, initial, icfg)
    return lab, rwa


def run_scenario(name: str, overrides: Optional[dict] = None) -> ScenarioResult:
    """Run one of the named studies with optional parameter overrides."""
    params = _defaults(name)
    for key, value in (overrides or {}).items():
        if key not in params and key not in _POTENTIAL_KEYS and key != "initial":
            raise UsageError(f"unknown override {key!r} for scenario {name}")
        params[key] = value

    if name == "two_body_scan":
        fams = default_potentials()
        chosen = fams if params["family"] == "all" else {params["family"]: build_potential(params)}
        grid = params.get("R_values", SCAN_GRID)
        scans = {fam: scan_omega(spec, grid, fam) for fam, spec in chosen.items()}
        return ScenarioResult(name, params, extra={"scans": scans})

    cfg = SystemConfig(params["delta"], int(params["k"]), params["lam"])
    spec = build_potential(params)
    pts = _initial_points(name, cfg, params)
    params["initial"] = pts
    initial = RotState(0.0, [p[0] for p in pts], [p[1] for p in pts])
    periods = int(params["periods"])
    result = ScenarioResult(name, params)

    if name == "driven_two_body_n1":
        lab, _ = _paired_runs(cfg, spec, initial, periods, int(params["rwa_substeps"]))
        free = poincare_map(cfg, None, initial, periods)
        result.lab, result.rwa = lab, None
        result.extra["free"] = free
        metrics = compare_trajectories(free, lab) if lab.error is None else []
        result.metrics = metrics
        diam = max(diameter(free.Z[:, i]) for i in range(free.n_particles))
        result.extra["diameter"] = diam
        if metrics:
            result.extra["max_over_diameter"] = max(m.max_pointwise for m in metrics) / diam
        return result

    lab, rwa = _paired_runs(cfg, spec, initial, periods, int(params["rwa_substeps"]))
    result.lab, result.rwa = lab, rwa
    if lab.error is None and rwa.error is None:
        result.metrics = compare_trajectories(lab, rwa)
        result.extra["radial_rms"] = radial_rms(lab, rwa)
    result.radii = {"lab": np.abs(lab.Z), "rwa": np.abs(rwa.Z)}

    if name == "three_body_coulomb" and rwa.error is None:
        Z = rwa.Z
        inner = Z[:, 1] - Z[:, 2]
        outer = Z[:, 0] - 0.5 * (Z[:, 1] + Z[:, 2])
        t = rwa.times
        result.extra["inner_rate"] = float(np.polyfit(t, np.unwrap(np.angle(inner)), 1)[0])
        result.extra["outer_rate"] = float(np.polyfit(t, np.unwrap(np.angle(outer)), 1)[0])

    if name == "driven_eight_body":
        result.extra.update(_localization(cfg, lab))
    return result


def _localization(cfg: SystemConfig, traj: Trajectory) -> dict:
    """Angular excursion of each particle about its starting direction."""
    k = cfg.k
    theta0 = np.angle(traj.Z[0])
    dtheta = np.angle(traj.Z * np.exp(-1j * theta0))
    excursion = np.max(np.abs(dtheta), axis=0)
    g = np.array([[single_particle_g(cfg, z.real, z.imag) for z in row] for row in traj.Z])
    return {
        "angular_excursion": excursion.tolist(),
        "localized": [bool(e < math.pi / k) for e in excursion],
        "g_spread": np.ptp(g, axis=0).tolist(),
    }


__all__ = [
    "SCAN_GRID",
    "SCENARIOS",
    "ComparisonMetric",
    "OmegaScanResult",
    "ScenarioResult",
    "build_potential",
    "compare_trajectories",
    "default_potentials",
    "diameter",
    "omega_measured",
    "omega_theory",
    "radial_rms",
    "run_scenario",
    "scan_omega",
    "stable_point_kinds",
    "stable_points",
    "track_labels",
]
