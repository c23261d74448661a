"""System parameters, phase-space states and the lab <-> rotating frame map.

The rotating frame turns at the frame frequency Omega/k:

    x = P sin(wt) + X cos(wt)
    p = P cos(wt) - X sin(wt),        w = Omega/k

so that at stroboscopic instants t = m * 2k pi / Omega the two frames coincide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .specfun import cos_half_pi


@dataclass(frozen=True)
class SystemConfig:
    """Driving and trap parameters in scaled units.

    ``delta`` is the stored primary; ``omega = k (1 - delta)`` is derived.
    """

    delta: float = 0.0
    k: int = 1
    lam: float = 0.0
    omega: float = field(init=False)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise UsageError(f"resonance order k must be an integer >= 1, got {self.k}")
        if not math.isfinite(self.delta) or self.delta >= 1.0:
            raise UsageError(f"detuning must be finite and < 1 (omega > 0), got {self.delta}")
        if not math.isfinite(self.lam) or self.lam < 0.0:
            raise UsageError(f"driving strength must be >= 0, got {self.lam}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "omega", self.k * (1.0 - self.delta))

    @classmethod
    def from_omega(cls, omega: float, k: int = 1, lam: float = 0.0) -> "SystemConfig":
        if omega <= 0.0:
            raise UsageError(f"driving frequency must be positive, got {omega}")
        return cls(delta=1.0 - omega / k, k=k, lam=lam)

    @property
    def frame_frequency(self) -> float:
        return self.omega / self.k

    @property
    def period(self) -> float:
        """Stroboscopic period 2 k pi / Omega."""
        return 2.0 * self.k * math.pi / self.omega

    @property
    def drive_factor(self) -> float:
        """Lambda * cos(k pi / 2), exact zero for odd k."""
        return self.lam * cos_half_pi(self.k)

    @property
    def in_validity_regime(self) -> bool:
        """False outside small detuning / weak driving (|delta| < 0.5, lambda < 1)."""
        return abs(self.delta) < 0.5 and self.lam < 1.0


def _frozen_array(values, name):
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size < 1:
        raise UsageError(f"{name} must contain at least one particle")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class _PhaseState:
    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = _frozen_array(self.q, "coordinates")
        p = _frozen_array(self.p, "momenta")
        if q.shape != p.shape:
            raise UsageError(f"coordinate/momentum length mismatch: {q.size} vs {p.size}")
        if not math.isfinite(self.t):
            raise UsageError("time must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.q.size

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.t == other.t
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None


class LabState(_PhaseState):
    """Lab-frame positions ``x`` and momenta ``p`` at time ``t``."""

    def __init__(self, t, x, p):
        super().__init__(t, x, p)

    @property
    def x(self) -> np.ndarray:
        return self.q

    def __repr__(self):
        return f"LabState(t={self.t!r}, x={self.q.tolist()!r}, p={self.p.tolist()!r})"


class RotState(_PhaseState):
    """Rotating-frame quadratures ``X`` and ``P`` at time ``t``."""

    def __init__(self, t, X, P):
        super().__init__(t, X, P)

    @property
    def X(self) -> np.ndarray:
        return self.q

    @property
    def P(self) -> np.ndarray:
        return self.p

    @property
    def Z(self) -> np.ndarray:
        return self.q + 1j * self.p

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.q, self.p)

    @property
    def theta(self) -> np.ndarray:
        # atan2(0, 0) = 0, which is the convention at the origin
        return np.arctan2(self.p, self.q)

    def __repr__(self):
        return f"RotState(t={self.t!r}, X={self.q.tolist()!r}, P={self.p.tolist()!r})"


@dataclass(frozen=True)
class PairGeometry:
    R: float
    dX: float
    dP: float


def _frame_angle(t: float, cfg: SystemConfig) -> tuple[float, float]:
    phase = cfg.frame_frequency * t
    return math.cos(phase), math.sin(phase)


def to_rotating(state: LabState, cfg: SystemConfig) -> RotState:
    c, s = _frame_angle(state.t, cfg)
    x, p = state.q, state.p
    return RotState(state.t, x * c - p * s, p * c + x * s)


def from_rotating(state: RotState, cfg: SystemConfig) -> LabState:
    c, s = _frame_angle(state.t, cfg)
    X, P = state.q, state.p
    return LabState(state.t, P * s + X * c, P * c - X * s)


def pair_geometry(state: RotState, i: int, j: int) -> PairGeometry:
    n = state.n
    if not (0 <= i < n and 0 <= j < n):
        raise UsageError(f"pair index out of range for {n} particles: ({i}, {j})")
    if i == j:
        raise UsageError("pair_geometry needs two distinct particles")
    dX = float(state.q[i] - state.q[j])
    dP = float(state.p[i] - state.p[j])
    return PairGeometry(math.hypot(dX, dP), dX, dP)
