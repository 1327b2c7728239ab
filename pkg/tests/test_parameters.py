import numpy as np
import pytest

from bubbletower.constants import NumericalError
from bubbletower.parameters import (
    ReducedForcing,
    closed_form_path,
    fit_decay_exponent,
    integrate_mu_ode,
    mu0_closed_form,
    mu1_norm,
    nu_condition_report,
    sharp_norm,
    solve_reduced_system,
)
from bubbletower.profiles import DomainError


class TestClosedForm:
    def test_values_and_rates(self, table72):
        mu, mudot = mu0_closed_form(table72, -100.0)
        beta2 = (2 / table72.cstar) ** 2
        assert mu[0] == 1.0 and mudot[0] == 0.0
        assert mu[1] == pytest.approx(beta2 * 1e-4, rel=1e-13)
        assert mudot[1] == pytest.approx(2 * beta2 * 1e-6, rel=1e-13)

    def test_ode_identity_to_roundoff(self, table73):
        for t in (-1e2, -1e4, -1e6):
            mu, mudot = mu0_closed_form(table73, t)
            for j in (2, 3):
                lam = mu[j - 1] / mu[j - 2]
                assert mu[j - 1] * mudot[j - 1] == pytest.approx(
                    table73.cstar * lam ** 2.5, rel=1e-12)

    def test_positive_time_rejected(self, table72):
        with pytest.raises(DomainError):
            mu0_closed_form(table72, 1.0)


class TestOdeIntegration:
    def test_matches_closed_form_over_four_decades(self, table73):
        # init = closed form at t_start (generated at working precision)
        t0, t1 = -1e6, -1e2
        path = integrate_mu_ode(table73, t0, t1, step_tol=1e-8)
        ref = closed_form_path(table73, path.times)
        rel = np.abs(path.mu0 / ref.mu0 - 1.0)
        assert np.max(rel) <= 1e-6

    def test_separable_two_bubble_oracle(self, table72):
        # k = 2: mu2' = c_* mu2^{3/2} separable:
        # mu2(t) = (mu2(t0)^{-1/2} - c_*(t - t0)/2)^{-2}
        t0, t1 = -1e5, -1e3
        init, _ = mu0_closed_form(table72, t0)
        path = integrate_mu_ode(table72, t0, t1, init, step_tol=1e-11)
        c = table72.cstar
        mu2_exact = (init[1] ** -0.5 - c * (path.times - t0) / 2) ** -2.0
        assert np.max(np.abs(path.mu0[1] / mu2_exact - 1.0)) < 1e-7

    def test_perturbed_init_separates(self, table72):
        # the power-law family is unstable forward in time: a perturbed start
        # drifts onto a time-translated branch whose relative deviation grows
        # like 1/(-t); a 1e-8 kick at -1e6 is a ~1e-4 deviation by -1e2
        t0, t1 = -1e6, -1e2
        init, _ = mu0_closed_form(table72, t0)
        eps = 1e-8
        init = init * np.array([1.0, 1.0 + eps])
        path = integrate_mu_ode(table72, t0, t1, init, step_tol=1e-12)
        ref = closed_form_path(table72, path.times)
        rel = np.abs(path.mu0[1] / ref.mu0[1] - 1.0)
        assert rel[-1] > 100 * rel[0]
        # T-shift law: deviation ~ eps * (t0 / t)
        assert rel[-1] == pytest.approx(eps * t0 / t1, rel=0.1)

    def test_large_perturbation_collapses(self, table72):
        # a 1% upward kick on mu_2 at -1e6 belongs to a branch that blows up
        # near t = -5e3, tripping the ordering guard
        init, _ = mu0_closed_form(table72, -1e6)
        init = init * np.array([1.0, 1.01])
        with pytest.raises(NumericalError, match="tower collapse"):
            integrate_mu_ode(table72, -1e6, -1e2, init, step_tol=1e-11)

    def test_bad_init_rejected(self, table72):
        with pytest.raises(DomainError):
            integrate_mu_ode(table72, -1e4, -1e2, np.array([1.0, 2.0]))


class TestReducedSystem:
    def test_zero_forcing_zero_solution(self, table73):
        zero = ReducedForcing([lambda t: np.zeros_like(t)] * 3)
        path = solve_reduced_system(table73, zero, -1e2)
        assert np.max(np.abs(path.mu1)) == 0.0

    def test_decay_exponents(self, table73):
        # M_j = (-t)^{-alpha_j - 1 - sigma} gives |mu1_j| ~ (-t)^{-alpha_j - sigma}
        sig = table73.params.sigma
        forcing = ReducedForcing([
            (lambda aj: lambda t: (-t) ** (-aj - 1 - sig))(aj) for aj in table73.alpha])
        path = solve_reduced_system(table73, forcing, -1e2, span_decades=5.0)
        ts = path.times
        for j in (1, 2, 3):
            aj = table73.alpha[j - 1]
            sel = (ts >= ts[0] * 1e-2) & (ts <= ts[-1] * 10)  # late window
            slope = np.polyfit(np.log(-ts[sel]), np.log(np.abs(path.mu1[j - 1][sel])), 1)[0]
            assert slope == pytest.approx(-(aj + sig), abs=0.02)

    def test_chain_coupling(self, table72):
        # forcing only in the top slot still drives the second component
        sig = table72.params.sigma
        forcing = ReducedForcing([
            lambda t: (-t) ** (-1 - sig),
            lambda t: np.zeros_like(t),
        ])
        path = solve_reduced_system(table72, forcing, -1e2, span_decades=4.0)
        assert np.max(np.abs(path.mu1[1])) > 0
        ts = path.times
        sel = (ts >= ts[0] * 1e-2) & (ts <= ts[-1] * 10)
        slope = np.polyfit(np.log(-ts[sel]), np.log(np.abs(path.mu1[1][sel])), 1)[0]
        # inherits the (-t)^{-alpha_2 - sigma} class through the coupling
        assert slope == pytest.approx(-(table72.alpha[1] + sig), abs=0.05)

    def test_linearity_in_forcing(self, table72):
        sig = table72.params.sigma
        f1 = ReducedForcing([lambda t: (-t) ** (-1 - sig),
                             lambda t: (-t) ** (-3 - sig)])
        f2 = ReducedForcing([lambda t: 2 * (-t) ** (-1 - sig),
                             lambda t: 2 * (-t) ** (-3 - sig)])
        p1 = solve_reduced_system(table72, f1, -1e2)
        p2 = solve_reduced_system(table72, f2, -1e2)
        assert np.allclose(p2.mu1, 2 * p1.mu1, rtol=1e-10)

    def test_slow_forcing_rejected(self, table72):
        slow = ReducedForcing([lambda t: (-t) ** -0.5,
                               lambda t: (-t) ** -0.5])
        with pytest.raises(DomainError, match="decays too slowly"):
            solve_reduced_system(table72, slow, -1e2)

    def test_ball_stability_in_t0(self, table73):
        # empirical constant sup ||mu1||_sigma / forcing size stays within x2
        # as t0 is pushed from -1e3 to -1e5
        sig = table73.params.sigma
        forcing = ReducedForcing([
            (lambda aj: lambda t: (-t) ** (-aj - 1 - sig))(aj) for aj in table73.alpha])
        norms = []
        for t0 in (-1e3, -1e5):
            path = solve_reduced_system(table73, forcing, t0, span_decades=3.5)
            norms.append(mu1_norm(path, sig))
        assert 0.5 < norms[0] / norms[1] < 2.0


class TestNorms:
    def test_zero_norm(self, table72):
        path = closed_form_path(table72, -np.geomspace(1e4, 1e2, 40))
        assert mu1_norm(path, 0.01) == 0.0

    def test_power_law_norm_attained_at_t0(self, table72):
        ts = -np.geomspace(1e5, 1e2, 300)
        sig = 0.01
        path = closed_form_path(table72, ts)
        for j in (1, 2):
            path.mu1[j - 1] = path.mu0[j - 1] * (-ts) ** (-sig)
            path.mu1dot[j - 1] = np.gradient(path.mu1[j - 1], ts)
        val = mu1_norm(path, sig)
        assert np.isfinite(val) and val > 0
        # the weighted profile is flat, so the sup equals the value at t0
        v, tat = sharp_norm(ts, path.mu1[1], table72.alpha[1] + sig)
        at_t0 = abs(path.mu1[1][-1]) * (-ts[-1]) ** (table72.alpha[1] + sig)
        assert v == pytest.approx(at_t0, rel=1e-12)

    def test_homogeneity(self, table72):
        ts = -np.geomspace(1e5, 1e2, 100)
        path = closed_form_path(table72, ts)
        path.mu1[1] = (-ts) ** -3.0
        path.mu1dot[1] = np.gradient(path.mu1[1], ts)
        n1 = mu1_norm(path, 0.01)
        path2 = closed_form_path(table72, ts)
        path2.mu1[1] = 2 * path.mu1[1]
        path2.mu1dot[1] = 2 * path.mu1dot[1]
        assert mu1_norm(path2, 0.01) == pytest.approx(2 * n1, rel=1e-12)

    def test_empty_rejected(self, table72):
        path = closed_form_path(table72, -np.geomspace(1e4, 1e2, 10))
        path.times = np.array([])
        with pytest.raises(DomainError):
            mu1_norm(path, 0.01)


class TestNuCondition:
    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_ratio_within_fixed_bounds(self, table73, j):
        rep = nu_condition_report(table73, j, -1e6, -1e2)
        assert 0 < rep["ratio_min"] <= rep["ratio_max"] < 50
        assert rep["ratio_max"] / rep["ratio_min"] < 1.001  # pure power: constant
        assert rep["nu_vanishes_backward"]


def test_fit_decay_exponent():
    f = lambda t: 3.0 * (-t) ** -2.5
    assert fit_decay_exponent(f, -1e6, -1e3) == pytest.approx(-2.5, abs=1e-9)
