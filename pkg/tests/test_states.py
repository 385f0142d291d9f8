import math

import numpy as np
import pytest

from keplerfock.errors import ConfigError, GridCoverageError, PreconditionError
from keplerfock.geometry import AlphaFrame, SemiclassicalScale, stereographic_inv
from keplerfock.grid import GridState
from keplerfock.sphere import s3_product_rule
from keplerfock.states import (
    MomentumState,
    SphericalState,
    hydrogen_residual,
    momentum_norm,
    position_eval_direct,
    riesz_apply,
    riesz_eigenvalue,
    sph_coherent_eval,
    sphere_norm,
    to_position_grid,
)


def state(frame="e1+ie2", N=4, E=-0.5):
    return MomentumState(AlphaFrame.parse(frame), SemiclassicalScale.from_energy(E, N))


def test_sphere_quadrature_volume():
    u, w = s3_product_rule(10)
    assert np.sum(w) == pytest.approx(2 * math.pi**2)
    assert np.allclose(np.linalg.norm(u, axis=-1), 1.0)


@pytest.mark.parametrize("N", [0, 1, 5, 20, 48])
def test_sphere_norm(N):
    for f in ("e1+ie2", "e1+ie4"):
        assert sphere_norm(SphericalState(AlphaFrame.parse(f), N)) == pytest.approx(1.0, abs=1e-10)
    rnd = AlphaFrame.random(np.random.default_rng(N))
    assert sphere_norm(SphericalState(rnd, N)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("N,E", [(0, -0.5), (3, -2.0), (12, -0.125)])
def test_momentum_norm(N, E):
    assert momentum_norm(state("e2+ie3", N, E)) == pytest.approx(1.0, abs=1e-8)


def test_sph_eval_rejects_non_unit():
    with pytest.raises(PreconditionError):
        sph_coherent_eval(SphericalState(AlphaFrame.parse("e1+ie2"), 2), [1.0, 1.0, 0, 0])


def test_riesz_eigenvalue_relation():
    # T Phi = (2 pi^2 / (N+1)) Phi on degree-N harmonics
    rng = np.random.default_rng(0)
    for N in range(5):
        st = SphericalState(AlphaFrame.random(rng), N)
        u = rng.normal(size=4)
        u /= np.linalg.norm(u)
        assert riesz_apply(st, u) == pytest.approx(riesz_eigenvalue(N) * st(u), rel=1e-9)
    with pytest.raises(PreconditionError):
        riesz_apply(SphericalState(AlphaFrame.parse("e1+ie2"), 7), [1.0, 0, 0, 0])


def test_hydrogen_equation():
    rng = np.random.default_rng(2)
    for N in (0, 2, 4):
        ms = state("e1+ie3", N, -0.7)
        xi = rng.normal(size=(4, 3)) * ms.scale.p0
        assert hydrogen_residual(ms, xi) < 1e-5


def test_ground_state_is_hydrogen_1s():
    # N = 0 gives the 1s momentum function 8 sqrt(p0^5) / (pi (xi^2 + p0^2)^2)
    ms = state("e1+ie2", 0, -0.5)
    xi = np.array([[0.3, 0.1, -0.4], [2.0, 0.0, 0.0]])
    r2 = np.sum(xi**2, axis=1)
    ref = 2 * math.sqrt(2) / math.pi / (r2 + 1) ** 2
    assert np.allclose(np.abs(ms(xi)), ref, rtol=1e-12)


@pytest.mark.parametrize("N", [4, 8])
def test_circular_state_position_closed_form(N):
    # the e1 + ie2 state is (x1 + i x2)^N exp(-p0 r / hbar) up to normalization
    ms = state("e1+ie2", N)
    g = to_position_grid(ms)
    X = g.points()
    hb, p0 = ms.scale.hbar, ms.scale.p0
    cl = (X[..., 0] + 1j * X[..., 1]) ** N * np.exp(-p0 * np.linalg.norm(X, axis=-1) / hb)
    cl /= math.sqrt(np.sum(np.abs(cl) ** 2) * g.cell_volume)
    assert np.max(np.abs(g.samples - cl)) < 1e-2 * np.abs(cl).max()
    # the phase convention is fixed: no global factor between the two
    i = np.unravel_index(np.argmax(np.abs(cl)), cl.shape)
    assert g.samples[i] / cl[i] == pytest.approx(1.0, abs=1e-3)
    assert g.norm() == pytest.approx(1.0, abs=1e-4)


def test_position_grid_matches_direct_quadrature():
    ms = state("e1+ie3", 2)
    g = to_position_grid(ms)
    i = np.unravel_index(np.argmax(np.abs(g.samples)), g.shape)
    direct = position_eval_direct(ms, g.points()[i])[0]
    assert abs(direct - g.samples[i]) < 1e-3 * abs(direct)


def test_collision_state_grid_near_cusp():
    # collision states have a |xi|^-4 momentum tail, so the grid value at the
    # origin cusp carries a truncation error near 1%; away from it they agree
    ms = state("e1+ie4", 2)
    g = to_position_grid(ms)
    X = g.points()
    i = np.unravel_index(np.argmax(np.abs(g.samples)), g.shape)
    direct = position_eval_direct(ms, X[i], n_r=800, degree=120)[0]
    assert abs(direct - g.samples[i]) < 3e-2 * abs(direct)
    far = np.linalg.norm(X, axis=-1) > 0.8
    j = np.unravel_index(np.argmax(np.where(far, np.abs(g.samples), 0)), g.shape)
    direct = position_eval_direct(ms, X[j], n_r=800, degree=120)[0]
    assert abs(direct - g.samples[j]) < 5e-3 * abs(g.samples[i])


def test_position_grid_coverage_error():
    with pytest.raises(GridCoverageError) as exc:
        to_position_grid(state("e1+ie2", 4), n=16)
    assert exc.value.captured_mass < 1


def test_grid_save_load_round_trip(tmp_path):
    g = to_position_grid(state("e1+ie2", 1))
    path = g.save(tmp_path / "g.kfg")
    h = GridState.load(path)
    assert np.array_equal(h.samples, g.samples)
    assert np.array_equal(h.origin, g.origin) and np.array_equal(h.spacing, g.spacing)
    assert h.scale == g.scale and h.space == "position"
    assert (tmp_path / "g.kfg.json").exists()


def test_grid_load_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.kfg"
    bad.write_bytes(b"NOTAGRID" + bytes(200))
    with pytest.raises(ConfigError):
        GridState.load(bad)


def test_momentum_decay_and_stereographic_link():
    # psi_hat(xi) = p0^{-3/2} (2/(q^2+1))^2 Phi(omega(q)) with q = xi / p0
    ms = state("e2+ie4", 3, -1.0)
    p0 = ms.scale.p0
    xi = np.array([0.2, -0.7, 1.3])
    q = xi / p0
    u = stereographic_inv(q)
    ref = p0**-1.5 * (2 / (q @ q + 1)) ** 2 * ms.spherical(u)
    assert ms(xi) == pytest.approx(ref)


@pytest.mark.parametrize("N", [8, 32])
def test_mean_position_on_grid(N):
    # <x> = -(3/2) sin(th) N/(N+1) along e1: the quantum version of the orbit average
    th = 0.5
    g = to_position_grid(MomentumState(AlphaFrame.standard(th), SemiclassicalScale.from_energy(-0.5, N)))
    dens = np.abs(g.samples) ** 2 * g.cell_volume
    mean = np.tensordot(dens, g.points(), axes=([0, 1, 2], [0, 1, 2]))
    assert mean[0] == pytest.approx(-1.5 * math.sin(th) * N / (N + 1), abs=1e-4)
    assert np.allclose(mean[1:], 0.0, atol=1e-8)
    assert abs(mean[0] + 1.5 * math.sin(th)) < 0.1


def test_position_density_concentrates_on_orbit():
    # circular orbit of radius 1 in the x1-x2 plane
    g = to_position_grid(state(N=32))
    pts = g.points()
    rho = np.hypot(pts[..., 0], pts[..., 1])
    dist = np.hypot(rho - 1.0, pts[..., 2])
    dens = np.abs(g.samples) ** 2 * g.cell_volume
    assert dens[dist < 0.5].sum() >= 0.8
