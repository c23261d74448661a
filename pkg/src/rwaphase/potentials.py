"""Lab-frame pair potentials V(x), their forces -dV/dx and Fourier coefficients."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

from numba import njit

from .errors import SingularityError, UnsupportedError, UsageError

CLAMP = 1e-12
# hard-core walls are simulated as a steep power law
HARD_CORE_PROXY_N = 20


class ClampWarning(RuntimeWarning):
    """|x| was raised to the clamp distance near a singular potential."""


def _positive(name, value):
    if not (math.isfinite(value) and value > 0.0):
        raise UsageError(f"{name} must be a positive finite number, got {value}")


def _nonnegative(name, value):
    if not (math.isfinite(value) and value >= 0.0):
        raise UsageError(f"{name} must be a non-negative finite number, got {value}")


@dataclass(frozen=True)
class Lorentz:
    """(beta/pi) eps / (x^2 + eps^2); ``eps = 0`` selects the ideal contact (delta) limit."""

    beta: float
    eps: float

    def __post_init__(self):
        _positive("beta", self.beta)
        _nonnegative("eps", self.eps)

    @property
    def is_delta(self) -> bool:
        return self.eps == 0.0


@dataclass(frozen=True)
class Rectangular:
    """Barrier of height ``eta`` for |x| < ``beta`` (eta/2 on the edge)."""

    eta: float
    beta: float

    def __post_init__(self):
        _positive("eta", self.eta)
        _positive("beta", self.beta)


@dataclass(frozen=True)
class RegularizedCoulomb:
    """beta / sqrt(x^2 + eps); ``eps = 0`` is the bare Coulomb potential."""

    beta: float
    eps: float

    def __post_init__(self):
        _positive("beta", self.beta)
        _nonnegative("eps", self.eps)


@dataclass(frozen=True)
class InversePowerLaw:
    """(beta / |x|)^(2n) for integer or half-integer n >= 1/2."""

    beta: float
    n: float

    def __post_init__(self):
        _positive("beta", self.beta)
        twice = 2.0 * self.n
        if not math.isfinite(twice) or twice != round(twice):
            raise UsageError(f"n must be integer or half-integer, got {self.n}")
        if self.n < 0.5:
            raise UsageError(f"n must be >= 1/2, got {self.n}")

    @property
    def twice_n(self) -> int:
        return int(round(2.0 * self.n))


@dataclass(frozen=True)
class LennardJones:
    """4 epsilon [(sigma/|x|)^(2m) - (sigma/|x|)^m]."""

    epsilon: float
    sigma: float
    m: int = 6

    def __post_init__(self):
        _positive("epsilon", self.epsilon)
        _positive("sigma", self.sigma)
        if int(self.m) != self.m or self.m < 2:
            raise UsageError(f"m must be an integer >= 2, got {self.m}")


@dataclass(frozen=True)
class HardCore:
    """Impenetrable core of radius ``beta``."""

    beta: float

    def __post_init__(self):
        _positive("beta", self.beta)

    def proxy(self) -> InversePowerLaw:
        return InversePowerLaw(self.beta, HARD_CORE_PROXY_N)


PotentialSpec = Union[Lorentz, Rectangular, RegularizedCoulomb, InversePowerLaw, LennardJones, HardCore]

FAMILIES = {
    "lorentz": Lorentz,
    "rectangular": Rectangular,
    "regularized_coulomb": RegularizedCoulomb,
    "coulomb": RegularizedCoulomb,
    "inverse_power_law": InversePowerLaw,
    "lennard_jones": LennardJones,
    "hard_core": HardCore,
}


def family_name(spec) -> str:
    return {
        Lorentz: "lorentz",
        Rectangular: "rectangular",
        RegularizedCoulomb: "regularized_coulomb",
        InversePowerLaw: "inverse_power_law",
        LennardJones: "lennard_jones",
        HardCore: "hard_core",
    }[type(spec)]


def is_singular(spec) -> bool:
    """True when V is unbounded at the origin."""
    if isinstance(spec, (InversePowerLaw, LennardJones, HardCore)):
        return True
    if isinstance(spec, RegularizedCoulomb):
        return spec.eps == 0.0
    if isinstance(spec, Lorentz):
        return spec.is_delta
    return False


def lab_spec(spec):
    """The potential actually integrated in the lab frame."""
    return spec.proxy() if isinstance(spec, HardCore) else spec


# numba kernel encoding ------------------------------------------------------

K_NONE, K_LORENTZ, K_REGCOUL, K_POWER, K_LJ = -1, 0, 2, 3, 4


def kernel_params(spec):
    """(code, a, b, ip) tuple understood by the jitted pair kernels."""
    if spec is None:
        return (K_NONE, 0.0, 0.0, 0)
    spec = lab_spec(spec)
    if isinstance(spec, Lorentz):
        if spec.is_delta:
            raise UnsupportedError("the delta-contact limit cannot be integrated in the lab frame")
        return (K_LORENTZ, float(spec.beta), float(spec.eps), 0)
    if isinstance(spec, RegularizedCoulomb):
        return (K_REGCOUL, float(spec.beta), float(spec.eps), 0)
    if isinstance(spec, InversePowerLaw):
        return (K_POWER, float(spec.beta), 0.0, spec.twice_n)
    if isinstance(spec, LennardJones):
        return (K_LJ, float(spec.epsilon), float(spec.sigma), int(spec.m))
    raise UnsupportedError(
        f"{family_name(spec)} has a distributional force and is excluded from lab-frame runs"
    )


@njit(cache=True, inline="always")
def pair_force(code, a, b, ip, u):
    """-dV/du for the encoded potential."""
    if code == 0:
        d = u * u + b * b
        return 2.0 * a * b * u / (math.pi * d * d)
    if code == 2:
        d = u * u + b
        return a * u / (d * math.sqrt(d))
    if code == 3:
        y = (a / abs(u)) ** ip
        return ip * y / u
    if code == 4:
        y = (b / abs(u)) ** ip
        return 4.0 * a * ip * (2.0 * y * y - y) / u
    return 0.0


@njit(cache=True, inline="always")
def pair_energy(code, a, b, ip, u):
    if code == 0:
        return a * b / (math.pi * (u * u + b * b))
    if code == 2:
        return a / math.sqrt(u * u + b)
    if code == 3:
        return (a / abs(u)) ** ip
    if code == 4:
        y = (b / abs(u)) ** ip
        return 4.0 * a * (y * y - y)
    return 0.0


# scalar API -----------------------------------------------------------------


def _guard(spec, x):
    if not is_singular(spec):
        return x
    if x == 0.0:
        raise SingularityError(f"{family_name(spec)} is singular at x = 0")
    if abs(x) < CLAMP:
        warnings.warn(f"|x| = {abs(x):.3g} clamped to {CLAMP}", ClampWarning, stacklevel=3)
        return math.copysign(CLAMP, x)
    return x


def v_eval(spec, x: float) -> float:
    """Pair energy V(x)."""
    if isinstance(spec, Lorentz) and spec.is_delta:
        raise UnsupportedError("the delta-contact limit has no pointwise value; use eps > 0")
    x = _guard(spec, float(x))
    if isinstance(spec, Rectangular):
        ax = abs(x)
        if ax < spec.beta:
            return spec.eta
        if ax == spec.beta:
            return 0.5 * spec.eta
        return 0.0
    code, a, b, ip = kernel_params(spec)
    return float(pair_energy(code, a, b, ip, x))


def v_force(spec, x: float) -> float:
    """Force -dV/dx.

    For the rectangular barrier the force vanishes away from the edge and
    is a delta function on it; evaluating exactly at |x| = beta raises.
    """
    if isinstance(spec, Lorentz) and spec.is_delta:
        raise UnsupportedError("the delta-contact limit has no pointwise force; use eps > 0")
    x = _guard(spec, float(x))
    if isinstance(spec, Rectangular):
        if abs(x) == spec.beta:
            raise SingularityError("rectangular force is a delta function at the edge")
        return 0.0
    code, a, b, ip = kernel_params(spec)
    return float(pair_force(code, a, b, ip, x))


def fourier_coeff(spec, q: float) -> float:
    """V_q = (1/2pi) int V(x) exp(-iqx) dx, for families with an elementary transform."""
    if isinstance(spec, Lorentz):
        return spec.beta * math.exp(-abs(q) * spec.eps) / (2.0 * math.pi)
    if isinstance(spec, Rectangular):
        z = q * spec.beta
        sinc = 1.0 if z == 0.0 else math.sin(z) / z
        return spec.eta * spec.beta / math.pi * sinc
    raise UnsupportedError(f"no closed-form Fourier coefficient for {family_name(spec)}")
