import numpy as np
import pytest

from keplerfock.errors import BranchPointError, PreconditionError
from keplerfock.geometry import AlphaFrame, SemiclassicalScale
from keplerfock.oscillatory import monte_carlo_matrix_element, oscillatory_form
from keplerfock.quantize import matrix_element
from keplerfock.states import MomentumState
from keplerfock.stationary import critical_point
from keplerfock.symbols import SymbolSpec, position_bump, shell_bump


def state(frame="e1+ie2", N=8):
    f = AlphaFrame.parse(frame) if isinstance(frame, str) else frame
    return MomentumState(f, SemiclassicalScale.from_energy(-0.5, N))


def test_phase_has_nonnegative_imaginary_part():
    rng = np.random.default_rng(0)
    a = shell_bump(1.0, 2.0)
    form = oscillatory_form(a, AlphaFrame.parse("e1+ie2"), AlphaFrame.parse("e1+ie3"), 8)
    x, xi, v = (rng.normal(size=(500, 3)) for _ in range(3))
    assert np.all(form.P(x, xi, v).imag >= -1e-12)
    assert form.prefactor == pytest.approx(9**4 / (16 * np.pi**5))


def test_phase_real_at_critical_point():
    cp = critical_point(0.7, 0.4)
    form = oscillatory_form(shell_bump(1, 2), cp.frame, None, 8)
    assert abs(form.P(cp.x, cp.xi, cp.v).imag) < 1e-12


def test_branch_point_guard():
    # alpha.omega(xi) vanishes where omega(xi) is orthogonal to both e1 and e2
    form = oscillatory_form(shell_bump(1, 2), AlphaFrame.parse("e1+ie2"), None, 4)
    with pytest.raises(BranchPointError):
        form.P(np.zeros(3), np.array([0.0, 0.0, 0.5]), np.zeros(3))


def _within(report, ref, k=4.0):
    return abs(report.value - ref) < k * report.error_estimate + 1e-3


@pytest.mark.parametrize("N", [8, 16])
def test_mc_matches_multiplier_diagonal(N):
    a = shell_bump(1.0, 2.0)
    p = state("e1+ie2", N)
    ref = matrix_element(a, p).value
    mc = monte_carlo_matrix_element(a, p, n_samples=100_000, seed=1)
    assert mc.details["x_integral"] == "exact"
    assert mc.error_estimate < 0.1
    assert _within(mc, ref)


def test_mc_matches_multiplier_cross():
    a = shell_bump(1.0, 2.0)
    p, q = state("e1+ie2"), state("e1+ie3")
    ref = matrix_element(a, p, q).value
    mc = monte_carlo_matrix_element(a, p, q, n_samples=100_000)
    assert _within(mc, ref)


def test_mc_sampled_x_path_position_symbol():
    pb = position_bump([1.0, 0.0, 0.0], 1.5)
    p = state("e1+ie2", 4)
    ref = matrix_element(pb, p).value
    mc = monte_carlo_matrix_element(pb, p, n_samples=200_000)
    assert mc.details["x_integral"] == "sampled"
    assert _within(mc, ref)


def test_mc_is_reproducible():
    a = shell_bump(1.0, 2.0)
    p = state("e1+ie2", 8)
    r1 = monte_carlo_matrix_element(a, p, n_samples=20_000, seed=5)
    r2 = monte_carlo_matrix_element(a, p, n_samples=20_000, seed=5)
    assert r1.value == r2.value


def test_mc_needs_x_support_for_general_symbols():
    gen = SymbolSpec(general=lambda x, xi: np.ones(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])))
    with pytest.raises(PreconditionError):
        monte_carlo_matrix_element(gen, state("e1+ie2", 4), n_samples=1000)
