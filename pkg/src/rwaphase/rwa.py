"""Phase-space (RWA) images of lab-frame pair potentials.

A pair whose phase-space separation is R oscillates relative to each other
with amplitude R, so the slow interaction is the time average

    U(R) = (2/pi) int_0^{pi/2} V(R sin tau) dtau

For singular potentials this diverges and is replaced by the renormalized
integral starting at the angular cutoff tau_c of the collision.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .core import RotState, SystemConfig
from .errors import (
    DivergenceError,
    DomainError,
    NotApplicableError,
    SingularityError,
    UnsupportedError,
    UsageError,
    ValidityError,
)
from .potentials import (
    HardCore,
    InversePowerLaw,
    LennardJones,
    Lorentz,
    Rectangular,
    RegularizedCoulomb,
    family_name,
    fourier_coeff,
    is_singular,
)
from .specfun import elliptic_e, elliptic_k, jn_over_pow

DEFAULT_NODES = 512
RC_GATE = 0.1
TAU_GATE = math.pi / 4
# bounded potentials count as weak when V(0) is this fraction of the relative kinetic energy
WEAK_FRACTION = 0.1

MODES = ("raw_quadrature", "renormalized_quadrature", "closed_form")


# helpers ---------------------------------------------------------------------


@lru_cache(maxsize=8)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _gl(f, a, b, n):
    x, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(a + half * (x + 1.0))))


def _gl_doubled(f, a, b, n):
    """(value on 2n nodes, |difference to the n-node value|)."""
    coarse = _gl(f, a, b, n)
    fine = _gl(f, a, b, 2 * n)
    return fine, abs(fine - coarse)


def _v_array(spec, x):
    """Vectorised V(x) for x > 0 (quadrature helper; no guards)."""
    if isinstance(spec, Lorentz):
        return spec.beta * spec.eps / (math.pi * (x * x + spec.eps**2))
    if isinstance(spec, Rectangular):
        return np.where(x < spec.beta, spec.eta, np.where(x == spec.beta, 0.5 * spec.eta, 0.0))
    if isinstance(spec, RegularizedCoulomb):
        return spec.beta / np.sqrt(x * x + spec.eps)
    if isinstance(spec, InversePowerLaw):
        return (spec.beta / x) ** (2.0 * spec.n)
    if isinstance(spec, LennardJones):
        y = (spec.sigma / x) ** spec.m
        return 4.0 * spec.epsilon * (y * y - y)
    raise UnsupportedError(f"no pointwise potential for {family_name(spec)}")


def _check_R(R, allow_zero=False):
    R = float(R)
    if not math.isfinite(R) or R < 0.0 or (R == 0.0 and not allow_zero):
        raise UsageError(f"phase-space distance must be {'>= 0' if allow_zero else '> 0'}, got {R}")
    return R


def power_exponent(spec) -> float:
    """Exponent n of the repulsive (beta/x)^(2n) part governing the collision."""
    if isinstance(spec, InversePowerLaw):
        return spec.n
    if isinstance(spec, RegularizedCoulomb) and spec.eps == 0.0:
        return 0.5
    if isinstance(spec, LennardJones):
        return float(spec.m)
    if isinstance(spec, HardCore):
        return math.inf
    raise NotApplicableError(f"{family_name(spec)} is bounded and has no collision picture")


def _is_coulomb(spec) -> bool:
    return (isinstance(spec, InversePowerLaw) and spec.n == 0.5) or (
        isinstance(spec, RegularizedCoulomb) and spec.eps == 0.0
    )


# collision data -------------------------------------------------------------


@dataclass(frozen=True)
class CollisionData:
    r_c: float
    tau_c: float
    gamma: float


def collision_factor(spec) -> float:
    """gamma = (4n - 1)^(1/(2n - 1)); e^2 for Coulomb, 1 for the hard core."""
    n = power_exponent(spec)
    if math.isinf(n):
        return 1.0
    if n == 0.5:
        return math.e**2
    return math.exp(math.log(4.0 * n - 1.0) / (2.0 * n - 1.0))


def _lj_y(spec, R):
    return 0.5 + 0.5 * math.sqrt(1.0 + R * R / (4.0 * spec.epsilon))


def collision_distance(spec, R: float) -> float:
    """Closest approach r_c where V(r_c) equals the relative kinetic energy R^2/4."""
    R = _check_R(R)
    power_exponent(spec)  # rejects bounded families
    if isinstance(spec, HardCore):
        return spec.beta
    if _is_coulomb(spec):
        return 4.0 * spec.beta / (R * R)
    if isinstance(spec, InversePowerLaw):
        return spec.beta * 2.0 ** (1.0 / spec.n) * R ** (-1.0 / spec.n)
    # Lennard-Jones: full inversion of 4 eps (y^2 - y) = R^2/4 with y = (sigma/r)^m
    return spec.sigma * _lj_y(spec, R) ** (-1.0 / spec.m)


def cutoff_tau(spec, R: float) -> CollisionData:
    """Angular cutoff tau_c = r_c / (gamma R) and the associated collision data."""
    r_c = collision_distance(spec, R)
    gamma = collision_factor(spec)
    tau_c = r_c / (gamma * R)
    if tau_c >= TAU_GATE:
        raise ValidityError(
            f"collision is not short at R = {R}: tau_c = {tau_c:.4g} >= pi/4; "
            "use a larger phase-space distance"
        )
    return CollisionData(r_c, tau_c, gamma)


# quadrature routes ----------------------------------------------------------


def _raw_quadrature_err(spec, R, nodes):
    if is_singular(spec):
        if isinstance(spec, Lorentz):
            raise UnsupportedError("the delta-contact limit has no pointwise integrand; use the closed form")
        raise DivergenceError(
            f"the time-averaged {family_name(spec)} interaction diverges; use renormalized_quadrature"
        )
    if isinstance(spec, HardCore):
        raise DivergenceError("the hard-core average diverges; use renormalized_quadrature")
    R = _check_R(R, allow_zero=True)
    if R == 0.0:
        return float(_v_array(spec, np.array([0.0]))[0]), 0.0
    f = lambda tau: _v_array(spec, R * np.sin(tau))  # noqa: E731
    if isinstance(spec, Rectangular) and R > spec.beta:
        edge = math.asin(spec.beta / R)
        v1, e1 = _gl_doubled(f, 0.0, edge, nodes)
        v2, e2 = _gl_doubled(f, edge, 0.5 * math.pi, nodes)
        return 2.0 / math.pi * (v1 + v2), 2.0 / math.pi * (e1 + e2)
    v, e = _gl_doubled(f, 0.0, 0.5 * math.pi, nodes)
    return 2.0 / math.pi * v, 2.0 / math.pi * e


def rwa_quadrature(spec, R: float, nodes: int = DEFAULT_NODES) -> float:
    """U(R) by Gauss-Legendre quadrature of the time average (convergent families only)."""
    return _raw_quadrature_err(spec, R, nodes)[0]


def _renorm_quadrature_err(spec, R, nodes):
    R = _check_R(R)
    if isinstance(spec, HardCore):
        spec = spec.proxy()
    data = cutoff_tau(spec, R)
    # the cutoff is placed where gamma R sin(tau) = r_c exactly
    lo = math.asin(data.r_c / (data.gamma * R))
    span = math.log(0.5 * math.pi / lo)

    def f(s):
        tau = lo * np.exp(s)
        return _v_array(spec, R * np.sin(tau)) * tau

    v, e = _gl_doubled(f, 0.0, span, nodes)
    return 2.0 / math.pi * v, 2.0 / math.pi * e


def rwa_renorm_quadrature(spec, R: float, nodes: int = DEFAULT_NODES) -> float:
    """Renormalized U(R): the time average taken from the collision cutoff onward.

    Hard-core specs are integrated through their steep power-law proxy.
    """
    return _renorm_quadrature_err(spec, R, nodes)[0]


def _hankel_parts(z):
    """(P, Q) of the large-argument J0 expansion, J0 = sqrt(2/(pi z)) (P cos chi - Q sin chi)."""
    iz2 = 1.0 / (z * z)
    p = 1.0 - 9.0 / 128.0 * iz2 + 3675.0 / 32768.0 * iz2 * iz2
    q = (-1.0 / 8.0 + 75.0 / 1024.0 * iz2 - 59535.0 / 262144.0 * iz2 * iz2) / z
    return p, q


def _piecewise_quad(f, a, b, width):
    pieces = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, pieces + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return total


def _qawf(f, a, kind, omega):
    if omega == 0.0:
        if kind == "sin":
            return 0.0
        return integrate.quad(f, a, np.inf, epsabs=1e-15, epsrel=1e-12, limit=400)[0]
    with warnings.catch_warnings():
        # the tail amplitude is ~1e-10 of the total; cycle-level warnings are harmless here
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, np.inf, weight=kind, wvar=omega, epsabs=1e-15, limlst=200)[0]


def rwa_from_fourier(spec, R: float) -> float:
    """U(R) = int dq V_q J0(q R), integrated over the real line.

    The head is integrated piecewise between oscillations; beyond q R = 200
    J0 is replaced by its Hankel expansion and the tail is done with
    Fourier-weighted quadrature.
    """
    R = _check_R(R, allow_zero=True)
    if isinstance(spec, Lorentz):
        if spec.is_delta:
            raise UnsupportedError("the delta-contact limit has no convergent Fourier integral to evaluate")
        beta, eps = spec.beta, spec.eps
        env = lambda q: 2.0 * fourier_coeff(spec, q)  # noqa: E731
        if R == 0.0:
            return integrate.quad(env, 0.0, np.inf, epsabs=1e-15, epsrel=1e-13)[0]
        q_end = 45.0 / eps
        q_tail = max(200.0 / R, 1e-300)
        head_end = min(q_end, q_tail)
        total = _piecewise_quad(lambda q: env(q) * special.j0(q * R), 0.0, head_end, math.pi / R)
        if q_tail < q_end:
            # e^{-q eps} is still significant where the asymptotic form takes over
            def amp(q, sign):
                p, qq = _hankel_parts(q * R)
                return (beta / math.pi) * math.exp(-q * eps) * math.sqrt(2.0 / (math.pi * q * R)) * (p + sign * qq) / math.sqrt(2.0)

            total += _qawf(lambda q: amp(q, 1.0), q_tail, "cos", R)
            total += _qawf(lambda q: amp(q, -1.0), q_tail, "sin", R)
        return total
    if isinstance(spec, Rectangular):
        eta, beta = spec.eta, spec.beta
        scale = 2.0 * eta / math.pi
        if R == 0.0:
            # Dirichlet integral
            head = integrate.quad(lambda q: scale * np.sinc(q * beta / math.pi) * beta, 0.0, 200.0 / beta, limit=400)[0]
            return head + _qawf(lambda q: scale / q, 200.0 / beta, "sin", beta)
        q_tail = 200.0 / R
        width = math.pi / (R + beta)
        head = _piecewise_quad(
            lambda q: scale * beta * np.sinc(q * beta / math.pi) * special.j0(q * R), 0.0, q_tail, width
        )

        # sin(q b) [(P+Q) cos qR + (P-Q) sin qR] / sqrt 2, expanded into pure harmonics
        def amp(q, sign):
            p, qq = _hankel_parts(q * R)
            return scale / q * math.sqrt(2.0 / (math.pi * q * R)) * (p + sign * qq) / math.sqrt(2.0) * 0.5

        plus = lambda q: amp(q, 1.0)  # noqa: E731
        minus = lambda q: amp(q, -1.0)  # noqa: E731
        d = R - beta
        sgn = math.copysign(1.0, d) if d != 0.0 else 0.0
        tail = _qawf(plus, q_tail, "sin", R + beta)
        tail -= sgn * _qawf(plus, q_tail, "sin", abs(d))
        tail += _qawf(minus, q_tail, "cos", abs(d))
        tail -= _qawf(minus, q_tail, "cos", R + beta)
        return head + tail
    raise UnsupportedError(f"no closed-form Fourier coefficient for {family_name(spec)}")


# closed forms ---------------------------------------------------------------


def _power_prefactor(n, gamma, beta):
    return 2.0 * beta * gamma ** (2.0 * n - 1.0) * 4.0 ** (0.5 / n - 1.0) / (math.pi * (2.0 * n - 1.0))


def _coulomb_log(beta, R):
    arg = math.e**2 * R**3 / (2.0 * beta)
    if arg <= 1.0:
        raise DomainError(
            f"renormalized Coulomb energy is negative at R = {R}: gamma R^3 <= 2 beta; "
            "the short-collision picture has broken down, increase R"
        )
    return math.log(arg)


def _lj_terms(spec, R):
    m, sig = spec.m, spec.sigma
    gamma = collision_factor(spec)
    y = _lj_y(spec, R)
    tau = sig / (gamma * R) * y ** (-1.0 / m)
    a = (sig / R) ** (2 * m)
    b = (sig / R) ** m
    return m, gamma, y, tau, a, b


def rwa_closed_form(spec, R: float) -> float:
    """Catalogued U(R) (renormalized for singular potentials)."""
    R = _check_R(R, allow_zero=isinstance(spec, (Lorentz, Rectangular, RegularizedCoulomb)))
    if isinstance(spec, Lorentz):
        if spec.is_delta:
            if R == 0.0:
                raise SingularityError("delta-contact interaction is singular at R = 0")
            return spec.beta / (math.pi * R)
        return spec.beta / (math.pi * math.hypot(R, spec.eps))
    if isinstance(spec, Rectangular):
        if R < spec.beta:
            return spec.eta
        return 2.0 * spec.eta / math.pi * math.asin(spec.beta / R)
    if isinstance(spec, HardCore):
        return spec.beta * R / math.pi
    if _is_coulomb(spec):
        R = _check_R(R)
        return 2.0 * spec.beta / (math.pi * R) * _coulomb_log(spec.beta, R)
    if isinstance(spec, RegularizedCoulomb):
        s = math.sqrt(R * R + spec.eps)
        return 2.0 * spec.beta / math.pi * elliptic_k(R / s) / s
    if isinstance(spec, InversePowerLaw):
        n = spec.n
        return _power_prefactor(n, collision_factor(spec), spec.beta) * R ** (1.0 - 1.0 / n)
    if isinstance(spec, LennardJones):
        m, _, _, tau, a, b = _lj_terms(spec, R)
        return 8.0 * spec.epsilon / math.pi * (
            a * tau ** (1 - 2 * m) / (2 * m - 1) - b * tau ** (1 - m) / (m - 1)
        )
    raise UnsupportedError(f"no closed form for {family_name(spec)}")


def rwa_closed_form_derivative(spec, R: float) -> float:
    """dU/dR of the catalogued closed form."""
    R = _check_R(R, allow_zero=isinstance(spec, (Lorentz, RegularizedCoulomb)))
    if isinstance(spec, Lorentz):
        if spec.is_delta:
            if R == 0.0:
                raise SingularityError("delta-contact interaction is singular at R = 0")
            return -spec.beta / (math.pi * R * R)
        return -spec.beta * R / (math.pi * (R * R + spec.eps**2) ** 1.5)
    if isinstance(spec, Rectangular):
        if R == spec.beta:
            raise DomainError("rectangular RWA interaction has a kink at R = beta")
        if R < spec.beta:
            return 0.0
        ratio = spec.beta / R
        return -2.0 * spec.eta / math.pi * ratio / R / math.sqrt(1.0 - ratio * ratio)
    if isinstance(spec, HardCore):
        return spec.beta / math.pi
    if _is_coulomb(spec):
        R = _check_R(R)
        L = _coulomb_log(spec.beta, R)
        return 2.0 * spec.beta / (math.pi * R * R) * (3.0 - L)
    if isinstance(spec, RegularizedCoulomb):
        if R == 0.0:
            return 0.0
        s2 = R * R + spec.eps
        s = math.sqrt(s2)
        k = R / s
        K = elliptic_k(k)
        dK = elliptic_e(k) / (k * (1.0 - k * k)) - K / k
        return 2.0 * spec.beta / math.pi * (dK * spec.eps / (s2 * s2) - K * R / (s2 * s))
    if isinstance(spec, InversePowerLaw):
        n = spec.n
        return _power_prefactor(n, collision_factor(spec), spec.beta) * (1.0 - 1.0 / n) * R ** (-1.0 / n)
    if isinstance(spec, LennardJones):
        m, _, y, tau, a, b = _lj_terms(spec, R)
        c = 8.0 * spec.epsilon / math.pi
        dR = c * (-2 * m * a * tau ** (1 - 2 * m) / (2 * m - 1) + m * b * tau ** (1 - m) / (m - 1)) / R
        dtau = c * (-a * tau ** (-2 * m) + b * tau ** (-m))
        root = math.sqrt(1.0 + R * R / (4.0 * spec.epsilon))
        dy = R / (8.0 * spec.epsilon * root)
        tau_R = -tau / R - tau / (m * y) * dy
        return dR + dtau * tau_R
    raise UnsupportedError(f"no closed form for {family_name(spec)}")


# evaluator bundle -----------------------------------------------------------


def is_valid(spec, R: float) -> bool:
    """Validity gate of the RWA image at separation R.

    Singular potentials need a short collision (r_c <= 0.1, tau_c < pi/4);
    bounded ones need V(0) small against the relative kinetic energy R^2/4.
    """
    R = float(R)
    if R <= 0.0:
        return False
    if isinstance(spec, Lorentz) and spec.is_delta:
        return True
    if not is_singular(spec) and not isinstance(spec, HardCore):
        v0 = float(_v_array(spec, np.array([0.0]))[0])
        return v0 <= WEAK_FRACTION * R * R / 4.0
    try:
        data = cutoff_tau(spec, R)
    except ValidityError:
        return False
    if data.r_c > RC_GATE:
        return False
    if _is_coulomb(spec):
        return math.e**2 * R**3 > 2.0 * spec.beta
    return True


@dataclass(frozen=True)
class RwaValue:
    R: float
    U: float
    dU: float
    valid: bool


@dataclass(frozen=True)
class RwaInteraction:
    """Evaluator bundle for the phase-space interaction of one potential."""

    spec: object
    mode: str = "closed_form"
    quadrature_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if int(self.quadrature_nodes) != self.quadrature_nodes or self.quadrature_nodes < 8:
            raise UsageError("quadrature_nodes must be an integer >= 8")
        if isinstance(self.spec, Lorentz) and self.spec.is_delta and self.mode != "closed_form":
            raise UnsupportedError("the delta-contact limit is only available in closed form")
        if self.mode == "raw_quadrature" and (is_singular(self.spec) or isinstance(self.spec, HardCore)):
            raise DivergenceError(
                f"the time-averaged {family_name(self.spec)} interaction diverges; "
                "use renormalized_quadrature or closed_form"
            )
        if self.mode == "renormalized_quadrature" and not (
            is_singular(self.spec) or isinstance(self.spec, HardCore)
        ):
            raise NotApplicableError(f"{family_name(self.spec)} needs no renormalization; use raw_quadrature")

    @property
    def singular(self) -> bool:
        return is_singular(self.spec) or isinstance(self.spec, HardCore)

    def energy(self, R: float) -> float:
        if self.mode == "closed_form":
            return rwa_closed_form(self.spec, R)
        if self.mode == "raw_quadrature":
            return rwa_quadrature(self.spec, R, self.quadrature_nodes)
        return rwa_renorm_quadrature(self.spec, R, self.quadrature_nodes)

    def derivative(self, R: float) -> float:
        if self.mode == "closed_form":
            return rwa_closed_form_derivative(self.spec, R)
        h = 1e-4 * max(R, 1e-3)
        return (self.energy(R + h) - self.energy(R - h)) / (2.0 * h)

    def is_valid(self, R: float) -> bool:
        return is_valid(self.spec, R)

    def evaluate(self, R: float) -> RwaValue:
        return RwaValue(float(R), self.energy(R), self.derivative(R), self.is_valid(R))


# single-particle terms ------------------------------------------------------


def single_particle_g(cfg: SystemConfig, X: float, P: float) -> float:
    """1/2 delta r^2 + Lambda cos(k pi/2) J_k(r) cos(k theta), written without theta."""
    r2 = X * X + P * P
    g = 0.5 * cfg.delta * r2
    drive = cfg.drive_factor
    if drive != 0.0:
        r = math.sqrt(r2)
        # J_k(r) cos(k theta) = (J_k(r)/r^k) Re[(X + iP)^k]
        g += drive * jn_over_pow(cfg.k, r) * ((X + 1j * P) ** cfg.k).real
    return g


def total_g(cfg: SystemConfig, state: RotState, interaction: RwaInteraction) -> float:
    total = 0.0
    X, P = state.X, state.P
    for i in range(state.n):
        total += single_particle_g(cfg, float(X[i]), float(P[i]))
    for i in range(state.n):
        for j in range(i + 1, state.n):
            total += interaction.energy(math.hypot(X[i] - X[j], P[i] - P[j]))
    return total
