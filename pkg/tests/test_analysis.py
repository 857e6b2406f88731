"""
Tests for comparison, dissipation, oscillator and Laplace checks.
"""

import math

import numpy as np
import pytest

from fracode.analysis import (
    ComparisonCase,
    check_comparison,
    check_dissipation,
    check_monotone_growth,
    fit_decay_exponent,
    laplace_check,
    oscillator_closed_form,
    oscillator_simulate,
)
from fracode.catalog import ROTATION
from fracode.errors import DomainError, GridError, PreconditionError
from fracode.fraccalc import GridFunction
from fracode.solver import FodeProblem, step_solve


def identity(t, v):
    return v


def sub_solution(gamma, rhs, v0, h, t_end=1.0):
    return step_solve(FodeProblem.scalar(gamma, rhs, v0), h, t_end).component(0)


class TestComparison:
    """Tests for check_comparison."""

    def test_ordered_data_stay_ordered(self):
        """v1(0) <= v2(0) under a nondecreasing rhs keeps v1 <= v2."""
        h = 1.0 / 128.0
        upper = FodeProblem.scalar(0.5, identity, 1.0)
        case = ComparisonCase(0.5, identity, sub_solution(0.5, identity, 0.5, h), upper)
        result = check_comparison(case, 1.0, h)
        assert result.holds
        assert result.max_violation == 0.0
        assert result.compared_until == 1.0
        assert "upper" not in result.model_dump()

    def test_initial_order_required(self):
        """v2(0) < v1(0) fails the precondition."""
        h = 1.0 / 64.0
        upper = FodeProblem.scalar(0.5, identity, 0.5)
        case = ComparisonCase(0.5, identity, sub_solution(0.5, identity, 1.0, h), upper)
        with pytest.raises(PreconditionError):
            check_comparison(case, 1.0, h)

    def test_decreasing_rhs_rejected(self):
        """The rhs must be nondecreasing in v."""
        h = 1.0 / 64.0

        def decreasing(t, v):
            return -v

        case = ComparisonCase(
            0.5, decreasing, sub_solution(0.5, decreasing, 0.5, h),
            FodeProblem.scalar(0.5, decreasing, 1.0),
        )
        with pytest.raises(PreconditionError):
            check_comparison(case, 1.0, h)

    def test_grid_mismatch(self):
        """The sub-solution must live on (h, t_end)."""
        h = 1.0 / 64.0
        upper = FodeProblem.scalar(0.5, identity, 1.0)
        case = ComparisonCase(0.5, identity, sub_solution(0.5, identity, 0.5, h), upper)
        with pytest.raises(GridError):
            check_comparison(case, 1.0, h / 2.0)

    def test_not_a_sub_solution(self):
        """A curve far above the integrated inequality is refused."""
        h = 1.0 / 512.0
        fake = GridFunction(np.linspace(0.5, 5.0, 513), h)
        case = ComparisonCase(0.5, identity, fake, FodeProblem.scalar(0.5, identity, 1.0))
        with pytest.raises(PreconditionError):
            check_comparison(case, 1.0, h)

    def test_monotone_growth(self):
        """Nonnegative nondecreasing rhs gives nondecreasing solutions."""
        assert check_monotone_growth(0.5, identity, 1.0, 1.0, 1.0 / 128.0)
        with pytest.raises(PreconditionError):
            check_monotone_growth(0.5, identity, -1.0, 1.0, 1.0 / 128.0)


class TestDissipation:
    """Tests for check_dissipation."""

    def test_gradient_flow(self):
        """E = |v|^2 / 2 does not grow along -grad E."""
        result = check_dissipation(0.5, lambda v: v, np.array([1.0, -2.0]), 1.0, 1.0 / 128.0)
        assert result.holds
        assert result.energy.values[0] == pytest.approx(2.5)
        assert result.model_dump()["final_energy"] < 2.5

    def test_hamiltonian(self):
        """Antisymmetric structure keeps the energy bounded."""
        result = check_dissipation(
            0.4, lambda v: v, np.array([0.0, 1.0]), 2.0, 1.0 / 64.0,
            mode="hamiltonian", structure=ROTATION,
        )
        assert result.holds

    def test_structure_must_be_antisymmetric(self):
        """A symmetric structure matrix is refused."""
        with pytest.raises(PreconditionError):
            check_dissipation(
                0.4, lambda v: v, np.array([0.0, 1.0]), 1.0, 0.125,
                mode="hamiltonian", structure=np.eye(2),
            )
        with pytest.raises(PreconditionError):
            check_dissipation(
                0.4, lambda v: v, np.array([0.0, 1.0]), 1.0, 0.125, mode="hamiltonian"
            )


class TestOscillator:
    """Tests for the fractional oscillator."""

    def test_initial_values(self):
        """At t = 0 the state is (p0, q0)."""
        grid = GridFunction(np.zeros(11), 0.1)
        state = oscillator_closed_form(0.5, 0.3, -0.7, grid)
        assert state.p.values[0] == pytest.approx(0.3)
        assert state.q.values[0] == pytest.approx(-0.7)

    def test_energy_identity(self):
        """E = (p^2 + q^2) / 2 along the closed form."""
        grid = GridFunction(np.zeros(201), 0.05)
        state = oscillator_closed_form(0.5, 0.0, 1.0, grid)
        np.testing.assert_allclose(
            state.energy.values, 0.5 * (state.p.values ** 2 + state.q.values ** 2), rtol=1e-12
        )

    def test_classical_half_order(self):
        """gamma = 1/2 has beta(t) = exp(-t)."""
        grid = GridFunction(np.zeros(21), 0.1)
        state = oscillator_closed_form(0.5, 0.0, 1.0, grid)
        np.testing.assert_allclose(state.q.values, np.exp(-grid.times), atol=1e-12)

    def test_gamma_range(self):
        """The closed form is limited to gamma <= 1/2."""
        with pytest.raises(DomainError):
            oscillator_closed_form(0.6, 0.0, 1.0, GridFunction(np.zeros(3), 0.5))

    def test_decay_exponent(self):
        """Energy decays like t^(-2 gamma)."""
        grid = GridFunction(np.zeros(401), 0.5)
        state = oscillator_closed_form(0.25, 0.0, 1.0, grid)
        assert fit_decay_exponent(state.energy, 10.0, 200.0) == pytest.approx(-0.5, abs=0.1)

    def test_simulation_tracks_closed_form(self):
        """The marched oscillator follows the closed form."""
        h = 1.0 / 1024.0
        simulated = oscillator_simulate(0.5, 0.0, 1.0, h, 1.0)
        exact = oscillator_closed_form(0.5, 0.0, 1.0, GridFunction(np.zeros(1025), h))
        assert np.max(np.abs(simulated.q.values - exact.q.values)) <= 0.02
        assert np.max(np.abs(simulated.p.values - exact.p.values)) <= 0.02


class TestDecayFit:
    """Tests for fit_decay_exponent."""

    def test_exact_power_law(self):
        """A pure power law is recovered."""
        times = np.arange(401) * 0.5
        values = np.where(times > 0.0, (times + (times == 0.0)) ** -0.8, 1.0)
        assert fit_decay_exponent(GridFunction(values, 0.5), 10.0, 200.0) == pytest.approx(
            -0.8, abs=1e-9
        )

    def test_window_validation(self):
        """The window must start at t >= 10 and lie on the grid."""
        energy = GridFunction(np.ones(401), 0.5)
        with pytest.raises(DomainError):
            fit_decay_exponent(energy, 5.0, 100.0)
        with pytest.raises(GridError):
            fit_decay_exponent(energy, 10.0, 300.0)


class TestLaplace:
    """Tests for laplace_check."""

    def test_constant_is_exact(self):
        """Both sides vanish for a constant."""
        phi = GridFunction(np.full(1025, 2.0), 1.0 / 1024.0)
        result = laplace_check(0.5, phi, 30.0)
        assert result.lhs == 0.0
        assert result.rhs == 0.0
        assert result.relative_gap == 0.0

    def test_linear_function(self):
        """phi = t matches s^(gamma - 2) closely."""
        h = 1.0 / 16384.0
        phi = GridFunction(np.arange(16385) * h, h)
        result = laplace_check(0.5, phi, 30.0)
        assert result.relative_gap <= 1e-3
        assert result.rhs == pytest.approx(30.0 ** -1.5, rel=1e-3)

    def test_short_window_rejected(self):
        """s t_end below the decay threshold is unsound."""
        phi = GridFunction(np.ones(9), 0.125)
        with pytest.raises(DomainError):
            laplace_check(0.5, phi, 10.0)
        with pytest.raises(DomainError):
            laplace_check(0.5, phi, -1.0)

    def test_serialization(self):
        """LaplaceResult should serialize to dict."""
        phi = GridFunction(np.arange(2049) / 2048.0, 1.0 / 2048.0)
        data = laplace_check(0.5, phi, 40.0).model_dump()
        assert set(data) == {"lhs", "rhs", "relative_gap"}
        assert math.isfinite(data["relative_gap"])
