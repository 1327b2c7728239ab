import numpy as np
import pytest
from scipy import integrate

from bubbletower.constants import sphere_area
from bubbletower.profiles import (
    CutoffFamily,
    Dimension,
    DomainError,
    bubble_derivative,
    bubble_second_derivative,
    bubble_value,
    cutoff_value,
    dt_scaled_bubble,
    kernel_Zn1,
    mollifier,
    mollifier_d1,
    scaled_bubble,
)


def test_dimension_invariants():
    d = Dimension(7)
    assert d.p == pytest.approx(9 / 5)
    assert 1 < d.p < 2
    assert d.alpha_n == pytest.approx(35.0 ** 1.25)
    with pytest.raises(DomainError):
        Dimension(6)
    with pytest.raises(DomainError):
        Dimension(7.5)


def test_bubble_center_value_n7():
    # alpha_7 = 35^{5/4} by direct substitution
    assert bubble_value(Dimension(7), 0.0) == pytest.approx(35.0 ** 1.25, rel=1e-15)


@pytest.mark.parametrize("n", [7, 8, 9, 10])
def test_bubble_far_field_asymptote(n):
    d = Dimension(n)
    r = np.array([1e4, 1e5, 1e6])
    vals = bubble_value(d, r) * r ** (n - 2)
    assert np.all(np.abs(vals / d.alpha_n - 1) < 1e-7)


def test_bubble_strictly_decreasing():
    d = Dimension(9)
    r = np.linspace(0, 50, 2000)
    assert np.all(np.diff(bubble_value(d, r)) < 0)


def test_bubble_mass_quadrature_beta_oracle():
    # int_{R^7} U^p dy = alpha_7^p * omega_6 / 7 (Beta-function reduction)
    d = Dimension(7)
    val, _ = integrate.quad(lambda r: bubble_value(d, r) ** d.p * r ** 6, 0, np.inf)
    expected = d.alpha_n ** d.p / 7
    assert val == pytest.approx(expected, rel=1e-10)


def test_steady_state_identity_on_grid():
    # Lap U + U^p = 0 at second order: halving mesh width divides residual by ~4
    d = Dimension(7)

    def residual(num):
        r = np.linspace(0.0, 2.0, num)
        h = r[1] - r[0]
        u = bubble_value(d, r)
        res = ((u[2:] - 2 * u[1:-1] + u[:-2]) / h ** 2
               + (d.n - 1) / r[1:-1] * (u[2:] - u[:-2]) / (2 * h)
               + u[1:-1] ** d.p)
        return np.max(np.abs(res))

    r1, r2 = residual(2001), residual(4001)
    assert 3.5 < r1 / r2 < 4.5


def test_kernel_center_and_node():
    d = Dimension(8)
    assert kernel_Zn1(d, 0.0) == pytest.approx((d.n - 2) / 2 * d.alpha_n)
    assert kernel_Zn1(d, 1.0) == 0.0
    # sign change exactly once, at r = 1
    r = np.linspace(0.0, 30.0, 5000)
    signs = np.sign(kernel_Zn1(d, r))
    changes = np.sum(np.abs(np.diff(signs)) > 0)
    assert changes == 1


def test_kernel_matches_definition():
    # Z = (n-2)/2 U + r U'
    d = Dimension(10)
    r = np.geomspace(1e-3, 1e3, 200)
    direct = (d.n - 2) / 2 * bubble_value(d, r) + r * bubble_derivative(d, r)
    assert np.allclose(kernel_Zn1(d, r), direct, rtol=1e-13)


def test_kernel_annihilated_at_second_order():
    d = Dimension(7)

    def residual(num):
        r = np.linspace(0.0, 1.0, num)
        h = r[1] - r[0]
        z = kernel_Zn1(d, r).astype(np.longdouble)
        u_pm1 = bubble_value(d, r) ** (d.p - 1)
        res = ((z[2:] - 2 * z[1:-1] + z[:-2]) / h ** 2
               + (d.n - 1) / r[1:-1] * (z[2:] - z[:-2]) / (2 * h)
               + d.p * u_pm1[1:-1] * z[1:-1])
        return float(np.max(np.abs(res)))

    r1, r2 = residual(2001), residual(4001)
    assert 3.5 < r1 / r2 < 4.5


def test_dt_scaled_bubble_examples():
    d = Dimension(7)
    assert dt_scaled_bubble(d, 2.0, 0.0, 1.3) == 0.0
    # vanishes on the sphere r = mu where the kernel changes sign
    assert dt_scaled_bubble(d, 0.7, 0.3, 0.7) == pytest.approx(0.0, abs=1e-14)
    # (n=7, mu=1, mudot=1, r=0) -> -(5/2) 35^{5/4}
    assert dt_scaled_bubble(d, 1.0, 1.0, 0.0) == pytest.approx(-2.5 * 35 ** 1.25)
    with pytest.raises(DomainError):
        dt_scaled_bubble(d, -1.0, 0.0, 1.0)


def test_scaled_bubble_consistency():
    d = Dimension(9)
    r = np.geomspace(1e-3, 1e2, 50)
    mu = 0.037
    direct = scaled_bubble(d, mu, r)
    ref = mu ** (-(d.n - 2) / 2) * bubble_value(d, r / mu)
    assert np.allclose(direct, ref, rtol=1e-15)


def test_second_derivative_consistent():
    d = Dimension(7)
    r = np.geomspace(1e-2, 10, 40)
    h = 1e-4
    fd = (bubble_value(d, r + h) - 2 * bubble_value(d, r) + bubble_value(d, r - h)) / h ** 2
    assert np.allclose(bubble_second_derivative(d, r), fd, rtol=1e-4, atol=1e-5)


def test_mollifier_plateaus_and_smoothness():
    s = np.array([-3.0, 0.0, 0.5, 1.0])
    assert np.allclose(mollifier(s), 1.0)
    s = np.array([2.0, 2.5, 8.0])
    assert np.allclose(mollifier(s), 0.0)
    mid = np.linspace(1.3, 1.9, 61)
    v = mollifier(mid)
    assert np.all((v > 0) & (v < 1))
    assert np.all(np.diff(v) < 0)
    # derivative vanishes at the plateau edges
    assert mollifier_d1(np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-12)
    assert mollifier_d1(np.array([2.0]))[0] == pytest.approx(0.0, abs=1e-12)


class TestCutoffs:
    def test_chi_support_table(self, table73):
        t = -1.0e3
        j = 2
        lo = table73.mubar0(j + 1, t)
        hi = table73.mubar0(j, t)
        fam = CutoffFamily("chi", j, table73)
        assert cutoff_value(fam, np.array([lo]), t)[0] == pytest.approx(1.0)
        x = np.geomspace(lo, hi / 2, 9)
        assert np.allclose(cutoff_value(fam, x, t), 1.0)
        assert np.allclose(cutoff_value(fam, np.array([lo / 2 * 0.99, hi * 1.01]), t), 0.0)

    def test_zeta_support_table(self, table73):
        t = -1.0e3
        R = table73.params.R
        for j in (1, 2):
            fam = CutoffFamily("zeta", j, table73, R=R)
            mu = table73.mu0(j, t)
            assert cutoff_value(fam, np.array([2 * R * mu * 1.01]), t)[0] == 0.0
            assert cutoff_value(fam, np.array([mu / R * 0.99]), t)[0] == 0.0
            x = np.geomspace(2 * mu / R, R * mu, 7)
            assert np.allclose(cutoff_value(fam, x, t), 1.0)
        famk = CutoffFamily("zeta", 3, table73, R=R)
        muk = table73.mu0(3, t)
        assert cutoff_value(famk, np.array([0.0]), t)[0] == 1.0
        assert cutoff_value(famk, np.array([2 * R * muk * 1.01]), t)[0] == 0.0

    def test_eta_times_zeta_is_zeta(self, table73):
        t = -3.0e3
        R = table73.params.R
        for j in (1, 2, 3):
            eta = CutoffFamily("eta", j, table73, R=R)
            zeta = CutoffFamily("zeta", j, table73, R=R)
            x = np.geomspace(table73.mu0(j, t) / (4 * R), 8 * R * table73.mu0(j, t), 400)
            ev = cutoff_value(eta, x, t)
            zv = cutoff_value(zeta, x, t)
            assert np.allclose(ev * zv, zv, atol=1e-14)

    def test_chi_partition_of_unity(self, table73):
        # telescoping: sum_j chi_j = 1 on |x| <= mubar0_1 / 2
        t = -1.0e3
        x = np.geomspace(table73.mu0(3, t) * 1e-2, table73.mubar0(1, t) / 2, 500)
        total = sum(cutoff_value(CutoffFamily("chi", j, table73), x, t) for j in (1, 2, 3))
        assert np.allclose(total, 1.0, atol=1e-12)

    def test_zeta_supports_disjoint(self, table73):
        t = -1.0e3
        R = table73.params.R
        x = np.geomspace(table73.mu0(3, t) / (2 * R), 4 * R, 2000)
        z1 = cutoff_value(CutoffFamily("zeta", 1, table73, R=R), x, t)
        z2 = cutoff_value(CutoffFamily("zeta", 2, table73, R=R), x, t)
        z3 = cutoff_value(CutoffFamily("zeta", 3, table73, R=R), x, t)
        assert np.max(z1 * z2) == 0.0
        assert np.max(z2 * z3) == 0.0

    def test_index_out_of_range(self, table73):
        with pytest.raises(DomainError):
            CutoffFamily("chi", 0, table73)
        with pytest.raises(DomainError):
            CutoffFamily("zeta", 4, table73)


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)
    assert sphere_area(7) == pytest.approx(16 * np.pi ** 3 / 15)
