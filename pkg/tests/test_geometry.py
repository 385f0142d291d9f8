import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from keplerfock.errors import (
    CollisionTimeError,
    ConfigError,
    DomainError,
    PreconditionError,
)
from keplerfock.geometry import (
    AlphaFrame,
    KeplerOrbit,
    PhasePoint,
    SemiclassicalScale,
    SpherePoint,
    aux_hamiltonians,
    collision_parameter,
    collision_time,
    great_circle,
    hamiltonian,
    invert_time,
    kepler_state,
    moser_inv,
    moser_map,
    orbit_average,
    stereographic_fwd,
    stereographic_inv,
    symplectic_defect,
    time_change,
)

UNIT = SemiclassicalScale.from_energy(-0.5, 10)


def test_scale_relations():
    sc = SemiclassicalScale.from_energy(-0.5, 9)
    assert sc.p0 == pytest.approx(1.0)
    assert sc.hbar == pytest.approx(0.1)
    # E = -1 / (2 hbar^2 (N+1)^2)
    assert sc.E == pytest.approx(-1.0 / (2 * sc.hbar**2 * 100))
    assert sc.period == pytest.approx(2 * math.pi)
    sc2 = SemiclassicalScale.from_hbar(0.05, 3)
    assert sc2.p0 == pytest.approx(1.0 / (0.05 * 4))


def test_scale_rejects_inconsistent():
    with pytest.raises(PreconditionError):
        SemiclassicalScale(3, -0.5, 1.0, 0.3)
    with pytest.raises(PreconditionError):
        SemiclassicalScale.from_energy(0.1, 3)
    with pytest.raises(PreconditionError):
        SemiclassicalScale.from_energy(-0.5, -1)


def test_phase_point_rejects_origin():
    with pytest.raises(DomainError):
        PhasePoint([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])


def test_sphere_point_checks_cotangent():
    with pytest.raises(PreconditionError):
        SpherePoint([1.0, 0, 0, 0], [1.0, 0, 0, 0])
    with pytest.raises(PreconditionError):
        SpherePoint([2.0, 0, 0, 0], [0.0, 1.0, 0, 0])


def test_frame_parse_and_validation():
    f = AlphaFrame.parse("e1+ie2")
    assert np.allclose(f.alpha, [1, 1j, 0, 0])
    g = AlphaFrame.parse("-e3-ie4")
    assert np.allclose(g.alpha, [0, 0, -1, -1j])
    with pytest.raises(ConfigError):
        AlphaFrame.parse("e1+ie1")
    with pytest.raises(ConfigError):
        AlphaFrame.parse("x1+iy2")
    with pytest.raises(PreconditionError):
        AlphaFrame([1, 0, 0, 0], [1, 0, 0, 0])
    assert AlphaFrame.parse("e1+ie4").is_collision
    assert not AlphaFrame.standard(0.3).is_collision


def test_stereographic_round_trip():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 3)) * 3
    u = stereographic_inv(x)
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0)
    assert np.allclose(stereographic_fwd(u), x)
    with pytest.raises(DomainError):
        stereographic_fwd([0.0, 0.0, 0.0, 1.0])


def test_great_circle_start_of_standard_orbit():
    # e1 + ie2 at t = 0: u = e1, which is xi = (1,0,0); the orbit starts at x = (0,-1,0)
    p = kepler_state(KeplerOrbit(AlphaFrame.parse("e1+ie2"), UNIT), 0.0)
    assert np.allclose(p.x, [0.0, -1.0, 0.0], atol=1e-14)
    assert np.allclose(p.xi, [1.0, 0.0, 0.0], atol=1e-14)


def test_circular_orbit_is_uniform_circle():
    orb = KeplerOrbit(AlphaFrame.parse("e1+ie2"), UNIT)
    t = np.linspace(0, orb.period, 37)[:-1]
    p = kepler_state(orb, t)
    assert np.allclose(np.linalg.norm(p.x, axis=1), 1.0)
    assert np.allclose(np.linalg.norm(p.xi, axis=1), 1.0)
    assert np.allclose(p.x[:, 2], 0.0)


def test_collision_time_oracle():
    # e1 + ie4: u4 = sin s reaches 1 at s = pi/2, t = s - sin s + 0 = pi/2 - 1 (p0 = 1)
    f = AlphaFrame.parse("e1+ie4")
    assert collision_parameter(f) == pytest.approx(math.pi / 2)
    assert collision_time(f, UNIT) == pytest.approx(math.pi / 2 - 1)
    orb = KeplerOrbit(f, UNIT)
    with pytest.raises(CollisionTimeError):
        kepler_state(orb, math.pi / 2 - 1)
    with pytest.raises(PreconditionError):
        collision_parameter(AlphaFrame.parse("e1+ie2"))


def test_time_change_and_inverse():
    f = AlphaFrame.standard(0.7)
    s = np.linspace(0, 2 * math.pi, 41)
    t = time_change(f, s, UNIT)
    assert np.all(np.diff(t) > 0)
    assert np.allclose(invert_time(f, t, UNIT), s, atol=1e-12)
    with pytest.raises(PreconditionError):
        invert_time(f, -1.0, UNIT)


def test_energy_and_aux_hamiltonians_on_orbit():
    orb = KeplerOrbit(AlphaFrame.standard(1.0), UNIT)
    p = kepler_state(orb, np.linspace(0.1, 6.0, 25))
    assert np.allclose(hamiltonian(p), -0.5, atol=1e-12)
    F, G = aux_hamiltonians(p, UNIT)
    # |eta|^2 / 2 = F on the energy surface, |eta| = 1
    assert np.allclose(F, 0.5, atol=1e-12)
    assert np.allclose(G, 0.0, atol=1e-12)


def test_kepler_orbit_is_ellipse_with_expected_eccentricity():
    # standard(th) has eccentricity sin th, semi-major axis 1 / p0^2
    th = 0.6
    orb = KeplerOrbit(AlphaFrame.standard(th), UNIT)
    p = kepler_state(orb, np.linspace(0.05, 6.2, 200))
    r = np.linalg.norm(p.x, axis=1)
    e = math.sin(th)
    assert r.min() >= 1 - e - 1e-12 and r.max() <= 1 + e + 1e-12
    L = np.cross(p.x, p.xi)
    assert np.allclose(L, L[0], atol=1e-12)
    assert np.linalg.norm(L[0]) == pytest.approx(math.sqrt(1 - e * e))


def test_orbit_average_oracles():
    # constant averages to 1; x1 averages to -(3/2) a e (time average of the position
    # vector on a Kepler ellipse points away from the pericentre)
    for th in (0.0, 0.4, 1.1):
        orb = KeplerOrbit(AlphaFrame.standard(th), UNIT)
        assert orbit_average(lambda x, xi: np.ones(x.shape[:-1]), orb) == pytest.approx(1.0)
        assert orbit_average(lambda x, xi: x[..., 0], orb) == pytest.approx(
            -1.5 * math.sin(th), abs=1e-10)


def test_orbit_average_collision_window():
    orb = KeplerOrbit(AlphaFrame.parse("e1+ie4"), UNIT)
    assert orbit_average(lambda x, xi: np.ones(x.shape[:-1]), orb) == pytest.approx(1.0)
    assert orbit_average(lambda x, xi: x[..., 0], orb) == pytest.approx(-1.5, abs=1e-8)


def test_orbit_average_matches_time_quadrature():
    # independent oracle: plain trapezoid in t via kepler_state
    orb = KeplerOrbit(AlphaFrame.standard(0.5), UNIT)
    t = (np.arange(4000) + 0.5) * orb.period / 4000
    p = kepler_state(orb, t)
    direct = np.mean(p.xi[:, 1] ** 2 * p.x[:, 0])
    a = orbit_average(lambda x, xi: xi[..., 1] ** 2 * x[..., 0], orb)
    assert a == pytest.approx(direct, abs=1e-9)


def test_period_of_flow():
    sc = SemiclassicalScale.from_energy(-1.3, 5)
    orb = KeplerOrbit(AlphaFrame.standard(0.9), sc)
    t = np.linspace(0.1, 3.0, 7)
    p1, p2 = kepler_state(orb, t), kepler_state(orb, t + 2 * math.pi / sc.p0**3)
    assert np.allclose(p1.x, p2.x, atol=1e-10) and np.allclose(p1.xi, p2.xi, atol=1e-10)


coords = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.tuples(coords, coords, coords), st.tuples(coords, coords, coords),
       st.floats(0.3, 3.0))
def test_moser_round_trip_property(x, xi, p0):
    x = np.array(x)
    if np.linalg.norm(x) < 1e-2:
        x = x + np.array([0.5, 0.0, 0.0])
    sc = SemiclassicalScale(4, -0.5 * p0**2, p0, 1.0 / (5 * p0))
    p = PhasePoint(x, np.array(xi))
    q = moser_inv(moser_map(p, sc), sc)
    assert np.allclose(q.x, p.x, atol=1e-9 * (1 + np.abs(p.x).max()))
    assert np.allclose(q.xi, p.xi, atol=1e-9 * (1 + np.abs(p.xi).max()))


@settings(max_examples=25, deadline=None)
@given(st.tuples(coords, coords, coords), st.tuples(coords, coords, coords))
def test_symplectic_property(x, xi):
    x = np.array(x) + np.array([2.5, 0, 0])
    assert symplectic_defect(PhasePoint(x, np.array(xi)), UNIT) < 1e-8


def test_great_circle_velocity_is_tangent():
    gc = great_circle(AlphaFrame.random(np.random.default_rng(3)), np.linspace(0, 6, 9))
    assert np.allclose(np.sum(gc.u * gc.eta, axis=-1), 0.0)
    assert np.allclose(np.linalg.norm(gc.eta, axis=-1), 1.0)
