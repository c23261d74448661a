"""Time integration in the lab frame (with stroboscopic sampling) and in the RWA frame."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .core import LabState, RotState, SystemConfig
from .errors import DomainError, RwaError, SingularityError, UsageError, ValidityError
from .potentials import (
    K_NONE,
    is_singular,
    kernel_params,
    lab_spec,
    pair_energy,
    pair_force,
)
from .rwa import RwaInteraction, collision_distance, power_exponent, single_particle_g, total_g
from .specfun import jn, jn_over_pow, jn_prime

DEFAULT_STEP = 2.0 * math.pi / 2000.0
# closest lab-frame approach tolerated for singular potentials
MIN_SEPARATION = 1e-6
# substeps per collision time when the step is chosen automatically
COLLISION_RESOLUTION = 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = DEFAULT_STEP
    horizon: float = 2.0 * math.pi
    sample_every: float = 2.0 * math.pi
    method: str = "rk4"

    def __post_init__(self):
        if self.method != "rk4":
            raise UsageError(f"unknown integration method {self.method!r}")
        for name in ("step", "horizon", "sample_every"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise UsageError(f"{name} must be positive, got {v}")
        if self.step > self.sample_every * (1.0 + 1e-12):
            raise UsageError("step must not exceed sample_every")

    @property
    def steps_per_sample(self) -> int:
        ratio = self.sample_every / self.step
        n = int(round(ratio))
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise UsageError(f"sample_every ({self.sample_every}) is not a multiple of step ({self.step})")
        return n

    @property
    def n_samples(self) -> int:
        ratio = self.horizon / self.sample_every
        n = int(round(ratio))
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise UsageError(f"horizon ({self.horizon}) is not a multiple of sample_every ({self.sample_every})")
        return n

    def check_stroboscopic(self, period: float) -> None:
        ratio = period / self.sample_every
        if abs(ratio - round(ratio)) > 1e-12 * max(1.0, ratio):
            raise UsageError("sample_every must divide the stroboscopic period")


@dataclass
class Trajectory:
    """Samples of one run: ``q``/``p`` have shape (samples, particles)."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    frame: str
    diagnostics: dict = field(default_factory=dict)
    error: Optional[str] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_particles(self) -> int:
        return self.q.shape[1]

    def __len__(self):
        return self.times.size

    def state(self, m: int):
        cls = LabState if self.frame == "lab" else RotState
        return cls(float(self.times[m]), self.q[m], self.p[m])

    @property
    def states(self) -> list:
        return [self.state(m) for m in range(len(self))]

    @property
    def Z(self) -> np.ndarray:
        return self.q + 1j * self.p


# lab frame -----------------------------------------------------------------


def _check_lab_separation(spec, x):
    if spec is None or not is_singular(lab_spec(spec)):
        return
    n = x.size
    for i in range(n):
        for j in range(i + 1, n):
            if abs(x[i] - x[j]) < MIN_SEPARATION:
                raise SingularityError(
                    f"particles {i} and {j} are {abs(x[i] - x[j]):.3g} apart under a singular potential"
                )


def lab_rhs(cfg: SystemConfig, spec) -> Callable:
    """Right-hand side f(t, x, p) -> (dx/dt, dp/dt) of the lab-frame equations of motion."""
    code, a, b, ip = kernel_params(spec)

    def rhs(t, x, p):
        _check_lab_separation(spec, x)
        dp = -x.copy()
        if cfg.lam != 0.0:
            dp += cfg.lam * math.cos(cfg.omega * t) * np.sin(x)
        if code != K_NONE:
            n = x.size
            for i in range(n):
                for j in range(i + 1, n):
                    f = pair_force(code, a, b, ip, x[i] - x[j])
                    dp[i] += f
                    dp[j] -= f
        return p.copy(), dp

    return rhs


def lab_derivatives(cfg: SystemConfig, spec, state: LabState):
    return lab_rhs(cfg, spec)(state.t, state.x, state.p)


def lab_energy(cfg: SystemConfig, spec, t: float, x, p) -> float:
    """Instantaneous lab Hamiltonian, including the drive term."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    e = 0.5 * float(np.dot(p, p) + np.dot(x, x))
    if cfg.lam != 0.0:
        e += cfg.lam * math.cos(cfg.omega * t) * float(np.sum(np.cos(x)))
    code, a, b, ip = kernel_params(spec)
    if code != K_NONE:
        for i in range(x.size):
            for j in range(i + 1, x.size):
                e += pair_energy(code, a, b, ip, x[i] - x[j])
    return e


@njit(cache=True)
def _lab_rk4(x0, p0, t0, h, nsub, nsamp, lam, om, code, a, b, ip, min_sep):
    n = x0.shape[0]
    xs = np.empty((nsamp + 1, n))
    ps = np.empty((nsamp + 1, n))
    x = x0.copy()
    p = p0.copy()
    xs[0] = x
    ps[0] = p
    kx = np.empty((4, n))
    kp = np.empty((4, n))
    tx = np.empty(n)
    tp = np.empty(n)
    singular = code == 3 or code == 4 or (code == 2 and b == 0.0)
    for m in range(nsamp):
        for s in range(nsub):
            t = t0 + (m * nsub + s) * h
            for st in range(4):
                if st == 0:
                    for i in range(n):
                        tx[i] = x[i]
                        tp[i] = p[i]
                    tt = t
                else:
                    fac = h if st == 3 else 0.5 * h
                    for i in range(n):
                        tx[i] = x[i] + fac * kx[st - 1, i]
                        tp[i] = p[i] + fac * kp[st - 1, i]
                    tt = t + fac
                if lam != 0.0:
                    ct = lam * math.cos(om * tt)
                    for i in range(n):
                        kx[st, i] = tp[i]
                        kp[st, i] = -tx[i] + ct * math.sin(tx[i])
                else:
                    for i in range(n):
                        kx[st, i] = tp[i]
                        kp[st, i] = -tx[i]
                if code >= 0:
                    for i in range(n):
                        for j in range(i + 1, n):
                            u = tx[i] - tx[j]
                            if singular and abs(u) < min_sep:
                                return xs, ps, m
                            f = pair_force(code, a, b, ip, u)
                            kp[st, i] += f
                            kp[st, j] -= f
            for i in range(n):
                tx[i] = x[i]
                x[i] += h / 6.0 * (kx[0, i] + 2.0 * kx[1, i] + 2.0 * kx[2, i] + kx[3, i])
                p[i] += h / 6.0 * (kp[0, i] + 2.0 * kp[1, i] + 2.0 * kp[2, i] + kp[3, i])
            if singular:
                # stepping through an infinite barrier is a breakdown even if no stage landed near it
                for i in range(n):
                    for j in range(i + 1, n):
                        if (x[i] - x[j]) * (tx[i] - tx[j]) <= 0.0:
                            return xs, ps, m
        xs[m + 1] = x
        ps[m + 1] = p
    return xs, ps, nsamp


def default_lab_step(cfg: SystemConfig, spec, initial, safety: float = 1.5) -> float:
    """Fixed step resolving both the trap period and the fastest expected collision.

    A pair at phase-space distance R meets at relative speed ~R; the collision
    lasts ~ r_c / (2n R) for a (beta/x)^(2n) core.
    """
    h = DEFAULT_STEP
    if spec is None:
        return h
    s = lab_spec(spec)
    if not is_singular(s):
        return h
    q, p = initial.q, initial.p
    R = 0.0
    for i in range(q.size):
        for j in range(i + 1, q.size):
            R = max(R, math.hypot(q[i] - q[j], p[i] - p[j]))
    if R == 0.0:
        return h
    R *= safety
    n = power_exponent(s)
    t_coll = collision_distance(s, R) / (max(1.0, 2.0 * n) * R)
    return min(h, t_coll / COLLISION_RESOLUTION)


def poincare_map(cfg: SystemConfig, spec, initial, n_samples: int, step: Optional[float] = None) -> Trajectory:
    """Integrate the lab equations and record the state every period 2k pi / Omega.

    ``initial`` may be a LabState or a RotState at t = 0 (the frames coincide there).
    The returned snapshots are rotating-frame coordinates, identical to the lab
    ones at the sampled instants.
    """
    if initial.t != 0.0:
        raise UsageError("stroboscopic sampling starts at t = 0")
    if int(n_samples) != n_samples or n_samples < 0:
        raise UsageError("n_samples must be a non-negative integer")
    n_samples = int(n_samples)
    code, a, b, ip = kernel_params(spec)
    period = cfg.period
    if step is None:
        step = default_lab_step(cfg, spec, initial)
    nsub = max(1, int(math.ceil(period / step - 1e-9)))
    h = period / nsub
    x0 = np.array(initial.q, dtype=float)
    p0 = np.array(initial.p, dtype=float)
    _check_lab_separation(spec, x0)
    xs, ps, done = _lab_rk4(x0, p0, 0.0, h, nsub, n_samples, float(cfg.lam), float(cfg.omega),
                            code, a, b, ip, MIN_SEPARATION)
    error = None
    if done < n_samples:
        error = f"singularity: pair separation below {MIN_SEPARATION} during period {done + 1}"
    xs = xs[: done + 1].copy()
    ps = ps[: done + 1].copy()
    times = np.arange(done + 1) * period
    energy = np.array([lab_energy(cfg, spec, t, x, p) for t, x, p in zip(times, xs, ps)])
    return Trajectory(
        times, xs, ps, "rot", {"energy": energy}, error,
        {"step": h, "substeps": nsub, "period": period},
    )


def lab_evolve(cfg: SystemConfig, spec, initial: LabState, icfg: IntegratorConfig) -> Trajectory:
    """Lab-frame run at a user-chosen cadence (compiled kernel, lab coordinates)."""
    code, a, b, ip = kernel_params(spec)
    nsub = icfg.steps_per_sample
    nsamp = icfg.n_samples
    h = icfg.sample_every / nsub
    _check_lab_separation(spec, initial.x)
    xs, ps, done = _lab_rk4(np.array(initial.x), np.array(initial.p), initial.t, h, nsub, nsamp,
                            float(cfg.lam), float(cfg.omega), code, a, b, ip, MIN_SEPARATION)
    error = None if done == nsamp else f"singularity: pair separation below {MIN_SEPARATION}"
    times = initial.t + np.arange(done + 1) * icfg.sample_every
    xs, ps = xs[: done + 1].copy(), ps[: done + 1].copy()
    energy = np.array([lab_energy(cfg, spec, t, x, p) for t, x, p in zip(times, xs, ps)])
    return Trajectory(times, xs, ps, "lab", {"energy": energy}, error, {"step": h})


# rotating frame ------------------------------------------------------------


def _pair_forces(interaction: RwaInteraction, X, P):
    """Interaction parts of (dX/dt, dP/dt)."""
    n = X.size
    dX = np.zeros(n)
    dP = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            ex = X[i] - X[j]
            ep = P[i] - P[j]
            R = math.hypot(ex, ep)
            if R == 0.0:
                raise SingularityError(f"particles {i} and {j} coincide in phase space")
            w = interaction.derivative(R) / R
            dX[i] += w * ep
            dX[j] -= w * ep
            dP[i] -= w * ex
            dP[j] += w * ex
    return dX, dP


def _drive_gradient(cfg: SystemConfig, X, P):
    """(dg/dX, dg/dP) of the driving term, in Cartesian form regular at the origin."""
    D = cfg.drive_factor
    n = X.size
    gX = np.zeros(n)
    gP = np.zeros(n)
    if D == 0.0:
        return gX, gP
    k = cfg.k
    for i in range(n):
        x, p = X[i], P[i]
        r = math.hypot(x, p)
        z = complex(x, p)
        zk = z**k
        zk1 = z ** (k - 1)
        a = jn_over_pow(k + 1, r)
        b = jn_over_pow(k, r)
        gX[i] = D * (-a * x * zk.real + b * k * zk1.real)
        gP[i] = D * (-a * p * zk.real - b * k * zk1.imag)
    return gX, gP


def rwa_rhs(cfg: SystemConfig, interaction: Optional[RwaInteraction]) -> Callable:
    delta = cfg.delta

    def rhs(t, X, P):
        gX, gP = _drive_gradient(cfg, X, P)
        dX = delta * P + gP
        dP = -delta * X - gX
        if interaction is not None and X.size > 1:
            iX, iP = _pair_forces(interaction, X, P)
            dX += iX
            dP += iP
        return dX, dP

    return rhs


def rwa_derivatives(cfg: SystemConfig, interaction: Optional[RwaInteraction], state: RotState):
    """(dX/dt, dP/dt) from the canonical equations of the RWA Hamiltonian."""
    return rwa_rhs(cfg, interaction)(state.t, state.X, state.P)


def rwa_derivatives_complex(cfg: SystemConfig, interaction: Optional[RwaInteraction], state: RotState):
    """The same flow written for Z = X + iP in polar variables (independent check)."""
    Z = state.Z
    r = np.abs(Z)
    theta = np.angle(Z)
    D = cfg.drive_factor
    k = cfg.k
    dZ = np.empty(Z.size, dtype=complex)
    for i in range(Z.size):
        if D != 0.0 and r[i] > 0.0:
            radial = D * k * jn(k, r[i]) / r[i] ** 2 * math.sin(k * theta[i])
            angular = cfg.delta + D * jn_prime(k, r[i]) / r[i] * math.cos(k * theta[i])
            dZ[i] = -radial * Z[i] - 1j * angular * Z[i]
        else:
            dZ[i] = -1j * cfg.delta * Z[i]
        if interaction is not None:
            for j in range(Z.size):
                if j == i:
                    continue
                d = Z[i] - Z[j]
                R = abs(d)
                if R == 0.0:
                    raise SingularityError(f"particles {i} and {j} coincide in phase space")
                dZ[i] -= 1j * interaction.derivative(R) * d / R
    return dZ.real.copy(), dZ.imag.copy()


# generic stepping ----------------------------------------------------------

ABORT_ERRORS = (SingularityError, ValidityError, DomainError)


def integrate(rhs: Callable, initial, icfg: IntegratorConfig, diagnostics: Optional[Callable] = None) -> Trajectory:
    """Classic fixed-step RK4 for f(t, q, p) -> (dq, dp).

    Samples are taken every ``icfg.sample_every``. A singular or invalid
    evaluation stops the run and returns the samples collected so far, with
    the reason in ``error``.
    """
    nsub = icfg.steps_per_sample
    nsamp = icfg.n_samples
    h = icfg.sample_every / nsub
    frame = "lab" if isinstance(initial, LabState) else "rot"
    q = np.array(initial.q, dtype=float)
    p = np.array(initial.p, dtype=float)
    t0 = initial.t
    qs = [q.copy()]
    ps = [p.copy()]
    error = None
    try:
        for m in range(nsamp):
            for s in range(nsub):
                t = t0 + (m * nsub + s) * h
                k1q, k1p = rhs(t, q, p)
                k2q, k2p = rhs(t + 0.5 * h, q + 0.5 * h * k1q, p + 0.5 * h * k1p)
                k3q, k3p = rhs(t + 0.5 * h, q + 0.5 * h * k2q, p + 0.5 * h * k2p)
                k4q, k4p = rhs(t + h, q + h * k3q, p + h * k3p)
                q = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
                p = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            qs.append(q.copy())
            ps.append(p.copy())
    except ABORT_ERRORS as exc:
        error = f"{type(exc).__name__}: {exc}"
    qs = np.array(qs)
    ps = np.array(ps)
    times = t0 + np.arange(len(qs)) * icfg.sample_every
    diag = {}
    if diagnostics is not None:
        rows = [diagnostics(t, a, b) for t, a, b in zip(times, qs, ps)]
        for key in rows[0] if rows else ():
            diag[key] = np.array([row[key] for row in rows])
    return Trajectory(times, qs, ps, frame, diag, error, {"step": h})


def rwa_evolve(cfg: SystemConfig, interaction: Optional[RwaInteraction], initial: RotState,
               icfg: IntegratorConfig) -> Trajectory:
    """Integrate the RWA flow; diagnostics are the RWA energy g and sum of r_i^2."""

    def diag(t, X, P):
        out = {"sum_r2": float(np.dot(X, X) + np.dot(P, P))}
        state = RotState(t, X, P)
        try:
            if interaction is None:
                out["g"] = sum(single_particle_g(cfg, float(a), float(b)) for a, b in zip(X, P))
            else:
                out["g"] = total_g(cfg, state, interaction)
        except RwaError:
            out["g"] = math.nan
        return out

    return integrate(rwa_rhs(cfg, interaction), initial, icfg, diag)


__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "lab_rhs",
    "lab_derivatives",
    "lab_energy",
    "lab_evolve",
    "default_lab_step",
    "poincare_map",
    "rwa_rhs",
    "rwa_derivatives",
    "rwa_derivatives_complex",
    "integrate",
    "rwa_evolve",
]
