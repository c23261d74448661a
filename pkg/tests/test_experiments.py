import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwaphase.core import SystemConfig
from rwaphase.dynamics import Trajectory, default_lab_step
from rwaphase.errors import UsageError
from rwaphase.experiments import (
    ComparisonMetric,
    OmegaScanResult,
    compare_trajectories,
    default_potentials,
    omega_measured,
    omega_theory,
    radial_rms,
    run_scenario,
    scan_omega,
    stable_point_kinds,
    stable_points,
    track_labels,
    two_body_initial,
)
from rwaphase.potentials import HardCore, InversePowerLaw, Lorentz
from rwaphase.rwa import RwaInteraction
from rwaphase.specfun import bessel_j_prime

CFG = SystemConfig()


def traj(Z, dt=1.0):
    Z = np.asarray(Z, dtype=complex)
    return Trajectory(np.arange(Z.shape[0]) * dt, Z.real.copy(), Z.imag.copy(), "rot")


# rotation rate ----------------------------------------------------------------


def test_omega_theory_examples():
    assert omega_theory(RwaInteraction(HardCore(0.1)), 1.0) == pytest.approx(-0.2 / math.pi, rel=1e-15)
    for R in (0.7, 2.0, 5.0):
        assert omega_theory(RwaInteraction(InversePowerLaw(0.1, 1)), R) == 0.0
    assert omega_theory(RwaInteraction(Lorentz(0.1, 0.0)), 1.0) == pytest.approx(0.2 / math.pi, rel=1e-15)
    assert math.isnan(omega_theory(RwaInteraction(InversePowerLaw(0.1, 0.5)), 0.2))


def test_omega_measured_hard_core_proxy():
    spec = HardCore(0.1).proxy()
    w = omega_measured(CFG, spec, 3.0)
    th = omega_theory(RwaInteraction(spec), 3.0)
    assert abs(w - th) / abs(th) <= 0.05
    assert math.copysign(1, w) == math.copysign(1, th)


def test_omega_measured_self_convergence():
    spec = HardCore(0.1).proxy()
    h = default_lab_step(CFG, spec, two_body_initial(3.0))
    a = omega_measured(CFG, spec, 3.0, n_samples=200)
    b = omega_measured(CFG, spec, 3.0, n_samples=200, step=h / 2)
    assert abs(a - b) <= 1e-3 * abs(a)


def test_omega_measured_without_interaction():
    assert abs(omega_measured(CFG, None, 2.0)) <= 1e-6


def test_omega_measured_sign_lorentz():
    spec = Lorentz(0.1, 1.0)
    w = omega_measured(CFG, spec, 3.0)
    assert w > 0 and omega_theory(RwaInteraction(spec), 3.0) > 0


def test_omega_measured_requires_resonance():
    with pytest.raises(UsageError):
        omega_measured(SystemConfig(k=2, lam=0.1), None, 1.0)
    with pytest.raises(UsageError):
        omega_measured(SystemConfig(delta=0.1), None, 1.0)


def test_hard_core_rate_decreases_with_distance():
    scan = scan_omega(HardCore(0.1).proxy(), [2.5, 3.0, 4.0])
    assert all(scan.validity)
    mags = [abs(w) for w in scan.omega_measured]
    assert mags[0] > mags[1] > mags[2]


def test_theory_monotone_on_valid_grid():
    for fam in ("lorentz", "hard_core"):
        spec = default_potentials()[fam]
        inter = RwaInteraction(spec)
        grid = [R for R in np.arange(0.5, 6.01, 0.25) if inter.is_valid(R)]
        mags = [abs(omega_theory(inter, R)) for R in grid]
        assert all(b < a for a, b in zip(mags, mags[1:]))


def test_scan_result_columns():
    with pytest.raises(UsageError):
        OmegaScanResult([1.0, 2.0], [0.1], [0.1, 0.2], [True, True])
    r = OmegaScanResult([1.0], [0.11], [0.1], [True])
    assert r.relative_errors()[0] == pytest.approx(0.1)


# labels and comparison --------------------------------------------------------


def test_track_labels_undoes_swaps():
    t = np.linspace(0, 3, 40)
    a = np.exp(1j * t)
    b = -np.exp(1j * t)
    Z = np.stack([a, b], axis=1)
    swapped = Z.copy()
    swapped[1::3] = swapped[1::3, ::-1]
    assert np.array_equal(track_labels(swapped), Z)


def test_compare_examples():
    rng = np.random.default_rng(3)
    Z = rng.normal(size=(20, 3)) + 1j * rng.normal(size=(20, 3))
    m = compare_trajectories(traj(Z), traj(Z))
    assert all(x.max_pointwise == 0.0 and x.rms == 0.0 for x in m)
    m = compare_trajectories(traj(Z), traj(Z + 0.1))
    for x in m:
        assert x.max_pointwise == pytest.approx(0.1, rel=1e-12)
        assert x.rms == pytest.approx(0.1, rel=1e-12)
        assert x.horizon == 19.0


@given(st.integers(0, 10_000))
def test_compare_brute_force(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(15, 2)) + 1j * rng.normal(size=(15, 2))
    B = rng.normal(size=(15, 2)) + 1j * rng.normal(size=(15, 2))
    m = compare_trajectories(traj(A), traj(B))
    for i in range(2):
        d = [math.hypot(A[s, i].real - B[s, i].real, A[s, i].imag - B[s, i].imag) for s in range(15)]
        assert m[i].max_pointwise == pytest.approx(max(d), rel=1e-14)
        assert m[i].rms == pytest.approx(math.sqrt(sum(x * x for x in d) / 15), rel=1e-14)
        assert m[i].rms <= m[i].max_pointwise


def test_compare_cadence_mismatch():
    Z = np.ones((5, 1), dtype=complex)
    with pytest.raises(UsageError):
        compare_trajectories(traj(Z), traj(Z, dt=2.0))
    with pytest.raises(UsageError):
        compare_trajectories(traj(Z), traj(np.ones((6, 1))))
    with pytest.raises(UsageError):
        ComparisonMetric(0.1, 0.2, 1.0)


def test_radial_rms():
    Z = np.exp(1j * np.linspace(0, 2, 10))[:, None]
    assert radial_rms(traj(Z), traj(Z * 1j)) == [pytest.approx(0.0, abs=1e-15)]
    assert radial_rms(traj(Z), traj(1.1 * Z)) == [pytest.approx(0.1, rel=1e-12)]


# driven landscape -------------------------------------------------------------


@pytest.mark.parametrize("k,radius", [(2, 3.0542), (4, 5.3176)])
def test_stable_points(k, radius):
    cfg = SystemConfig(k=k, lam=0.1)
    pts = stable_points(cfg)
    assert len(pts) == 2 * k
    for j, (X, P) in enumerate(pts):
        assert math.hypot(X, P) == pytest.approx(radius, abs=1e-4)
        assert math.atan2(P, X) % (2 * math.pi) == pytest.approx(j * math.pi / k, abs=1e-12)
    assert abs(bessel_j_prime(k, math.hypot(*pts[0]))) <= 1e-13
    kinds = stable_point_kinds(cfg)
    assert kinds.count("max") == kinds.count("min") == k


@pytest.mark.parametrize("cfg", [SystemConfig(k=2, lam=0.1), SystemConfig(k=4, lam=0.1),
                                 SystemConfig(delta=0.005, k=2, lam=0.1)], ids=str)
def test_stable_points_are_critical(cfg):
    from rwaphase.rwa import single_particle_g

    h = 1e-5
    for X, P in stable_points(cfg):
        gX = (single_particle_g(cfg, X + h, P) - single_particle_g(cfg, X - h, P)) / (2 * h)
        gP = (single_particle_g(cfg, X, P + h) - single_particle_g(cfg, X, P - h)) / (2 * h)
        assert math.hypot(gX, gP) <= 1e-8


def test_stable_points_need_driving():
    with pytest.raises(UsageError):
        stable_points(SystemConfig(k=3, lam=0.1))
    with pytest.raises(UsageError):
        stable_points(SystemConfig(k=2, lam=0.0))


# scenarios --------------------------------------------------------------------


def test_unknown_scenario_and_override():
    with pytest.raises(UsageError):
        run_scenario("four_body")
    with pytest.raises(UsageError):
        run_scenario("driven_two_body", {"warp": 9})


def test_null_interaction_short():
    r = run_scenario("driven_two_body_n1", {"periods": 50})
    assert r.extra["max_over_diameter"] <= 0.02
    assert r.params["initial"] and r.lab.error is None


def test_three_body_hierarchy():
    r = run_scenario("three_body_coulomb", {"periods": 50})
    assert abs(r.extra["inner_rate"]) > abs(r.extra["outer_rate"])
    assert len(r.extra["radial_rms"]) == 3
    assert r.radii["lab"].shape == r.radii["rwa"].shape == (51, 3)


def test_eight_body_free_motion_is_localized():
    r = run_scenario("driven_eight_body", {"family": "none", "periods": 100})
    assert all(r.extra["localized"])
    # without interaction each g_i is a constant of the exact RWA flow
    assert max(r.extra["g_spread"]) <= 0.05 * 0.1


def test_scenario_overrides_recorded():
    r = run_scenario("driven_two_body", {"periods": 5, "perturb": 0.1})
    assert r.params["periods"] == 5 and r.params["perturb"] == 0.1
    assert len(r.lab) == len(r.rwa) == 6
