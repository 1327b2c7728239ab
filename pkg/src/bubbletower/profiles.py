"""Closed-form radial profiles: the critical steady bubble, its scaling-mode
kernel function, time derivatives of scaled bubbles, and the smooth cutoff
families used by the gluing scheme.

Everything here is an explicit formula; no grids are stored. All functions
accept scalars or NumPy arrays in the radial argument.
"""
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """An argument violates a documented precondition."""


@dataclass(frozen=True)
class Dimension:
    """Space dimension with the derived critical exponent and bubble amplitude."""

    n: int
    p: float = field(init=False)
    alpha_n: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 7:
            raise DomainError(f"dimension must be an integer >= 7, got {self.n}")
        object.__setattr__(self, "p", (self.n + 2) / (self.n - 2))
        object.__setattr__(self, "alpha_n", (self.n * (self.n - 2)) ** ((self.n - 2) / 4))


def bubble_value(dim, r):
    """Steady bubble U(r) = alpha_n (1+r^2)^{-(n-2)/2}; strictly decreasing in r."""
    r = np.asarray(r, dtype=float)
    return dim.alpha_n * (1.0 + r * r) ** (-(dim.n - 2) / 2)


def bubble_derivative(dim, r):
    """dU/dr."""
    r = np.asarray(r, dtype=float)
    return -(dim.n - 2) * dim.alpha_n * r * (1.0 + r * r) ** (-dim.n / 2)


def bubble_second_derivative(dim, r):
    """d^2U/dr^2."""
    n = dim.n
    r = np.asarray(r, dtype=float)
    return (n - 2) * dim.alpha_n * (1.0 + r * r) ** (-n / 2 - 1) * ((n - 1) * r * r - 1.0)


def bubble_laplacian(dim, r):
    """Radial Laplacian of U; equals -U^p by the steady equation (used as the identity)."""
    return -bubble_value(dim, r) ** dim.p


def scaled_bubble(dim, mu, r_phys):
    """mu^{-(n-2)/2} U(r/mu)."""
    if np.any(np.asarray(mu) <= 0):
        raise DomainError("scale mu must be positive")
    return mu ** (-(dim.n - 2) / 2) * bubble_value(dim, np.asarray(r_phys, dtype=float) / mu)


def kernel_Zn1(dim, r):
    """Generator of the scaling symmetry: (n-2)/2 U + r U' =
    alpha_n (n-2)/2 (1-r^2)(1+r^2)^{-n/2}. Lies in the kernel of the
    linearization Delta + p U^{p-1}; changes sign exactly at r = 1."""
    r = np.asarray(r, dtype=float)
    return dim.alpha_n * (dim.n - 2) / 2 * (1.0 - r * r) * (1.0 + r * r) ** (-dim.n / 2)


def kernel_Zn1_derivative(dim, r):
    """d/dr of kernel_Zn1."""
    n = dim.n
    r = np.asarray(r, dtype=float)
    return dim.alpha_n * (n - 2) / 2 * r * (1.0 + r * r) ** (-n / 2 - 1) * (
        (n - 2) * r * r - (n + 2))


def dt_scaled_bubble(dim, mu, mudot, r_phys):
    """Time derivative of the scaled bubble:
    d/dt [mu^{-(n-2)/2} U(x/mu)] = -mudot mu^{-n/2} Z(x/mu)."""
    if mu <= 0:
        raise DomainError("scale mu must be positive")
    return -mudot * mu ** (-dim.n / 2) * kernel_Zn1(dim, np.asarray(r_phys, dtype=float) / mu)


# ---------------------------------------------------------------------------
# base mollifier: 1 on (-inf, 1], 0 on [2, inf), exp-smoothstep in between
# ---------------------------------------------------------------------------

def _bump(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def _bump_d(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos]) / u[pos] ** 2
    return out


def _bump_dd(u):
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos]) * (1.0 - 2.0 * u[pos]) / u[pos] ** 4
    return out


def mollifier(s):
    """Smooth cutoff chi(s): 1 for s <= 1, 0 for s >= 2, C-infinity throughout."""
    s = np.asarray(s, dtype=float)
    a = _bump(2.0 - s)
    b = _bump(s - 1.0)
    return a / (a + b + np.where((s <= 1) | (s >= 2), 1e-300, 0.0))


def mollifier_d1(s):
    """First derivative of the mollifier."""
    s = np.asarray(s, dtype=float)
    a = _bump(2.0 - s)
    b = _bump(s - 1.0)
    da = -_bump_d(2.0 - s)
    db = _bump_d(s - 1.0)
    den = a + b
    mid = (s > 1) & (s < 2)
    out = np.zeros_like(s)
    out[mid] = (da[mid] * b[mid] - a[mid] * db[mid]) / den[mid] ** 2
    return out


def mollifier_d2(s):
    """Second derivative of the mollifier."""
    s = np.asarray(s, dtype=float)
    a = _bump(2.0 - s)
    b = _bump(s - 1.0)
    da = -_bump_d(2.0 - s)
    db = _bump_d(s - 1.0)
    dda = _bump_dd(2.0 - s)
    ddb = _bump_dd(s - 1.0)
    den = a + b
    mid = (s > 1) & (s < 2)
    out = np.zeros_like(s)
    num = (dda * b - a * ddb) * den - 2.0 * (da * b - a * db) * (da + db)
    out[mid] = num[mid] / den[mid] ** 3
    return out


# ---------------------------------------------------------------------------
# cutoff families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffFamily:
    """One member of the cutoff families used by the gluing construction.

    kind "chi":  annular partition cutoffs with geometric-mean transition radii;
                 chi_j = 1 on [rbar_{j+1}, rbar_j / 2] and 0 outside
                 [rbar_{j+1}/2, rbar_j] (the j = k member has no inner hole).
    kind "eta":  eta_j = 1 for |x| <= 2 R mu0_j, 0 for |x| >= 4 R mu0_j.
    kind "zeta": zeta_j = 1 on [2 mu0_j / R, R mu0_j], 0 outside
                 [mu0_j / R, 2 R mu0_j] (the j = k member has no inner hole).

    `table` supplies the leading scales (mu0_j and the transition radii) as
    functions of t; `R` is the gluing radius (used by eta/zeta only).
    """

    kind: str
    j: int
    table: object
    R: float = 1.0

    def __post_init__(self):
        if self.kind not in ("chi", "eta", "zeta"):
            raise DomainError(f"unknown cutoff kind {self.kind!r}")
        if not 1 <= self.j <= self.table.k:
            raise DomainError(f"cutoff index {self.j} outside [1, {self.table.k}]")


def cutoff_value(fam, x, t):
    """Evaluate the cutoff at radius x (array ok), time t <= t0."""
    x = np.asarray(x, dtype=float)
    tab, j = fam.table, fam.j
    if fam.kind == "chi":
        outer = mollifier(2.0 * x / tab.mubar0(j, t))
        inner_scale = tab.mubar0(j + 1, t)
        if inner_scale == 0.0:
            return outer
        return outer - mollifier(2.0 * x / inner_scale)
    if fam.kind == "eta":
        return mollifier(x / (2.0 * fam.R * tab.mu0(j, t)))
    # zeta
    outer = mollifier(x / (fam.R * tab.mu0(j, t)))
    if j == tab.k:
        return outer
    return outer - mollifier(fam.R * x / tab.mu0(j, t))


def cutoff_gradient(fam, x, t):
    """d/dx of the cutoff at fixed t."""
    x = np.asarray(x, dtype=float)
    tab, j = fam.table, fam.j
    if fam.kind == "chi":
        c1 = 2.0 / tab.mubar0(j, t)
        out = mollifier_d1(c1 * x) * c1
        inner_scale = tab.mubar0(j + 1, t)
        if inner_scale > 0.0:
            c2 = 2.0 / inner_scale
            out = out - mollifier_d1(c2 * x) * c2
        return out
    if fam.kind == "eta":
        c = 1.0 / (2.0 * fam.R * tab.mu0(j, t))
        return mollifier_d1(c * x) * c
    c1 = 1.0 / (fam.R * tab.mu0(j, t))
    out = mollifier_d1(c1 * x) * c1
    if j != tab.k:
        c2 = fam.R / tab.mu0(j, t)
        out = out - mollifier_d1(c2 * x) * c2
    return out


def cutoff_laplacian(fam, x, t, n):
    """Radial Laplacian chi'' + (n-1)/x chi' of the cutoff (vanishes near x=0)."""
    x = np.asarray(x, dtype=float)
    tab, j = fam.table, fam.j

    def lap_of(scale):
        c = 1.0 / scale
        s = c * x
        with np.errstate(divide="ignore", invalid="ignore"):
            rad = np.where(x > 0, (n - 1) / np.where(x > 0, x, 1.0) * mollifier_d1(s) * c, 0.0)
        return mollifier_d2(s) * c * c + rad

    if fam.kind == "chi":
        out = lap_of(tab.mubar0(j, t) / 2.0)
        inner_scale = tab.mubar0(j + 1, t)
        if inner_scale > 0.0:
            out = out - lap_of(inner_scale / 2.0)
        return out
    if fam.kind == "eta":
        return lap_of(2.0 * fam.R * tab.mu0(j, t))
    out = lap_of(fam.R * tab.mu0(j, t))
    if j != tab.k:
        out = out - lap_of(tab.mu0(j, t) / fam.R)
    return out


def cutoff_dt(fam, x, t):
    """Time derivative of the cutoff at fixed x (the scales move with t)."""
    x = np.asarray(x, dtype=float)
    tab, j = fam.table, fam.j

    def d_dt_of(scale, scaledot, factor):
        # d/dt chi(factor * x / scale) = chi' * (-factor x scaledot / scale^2)
        s = factor * x / scale
        return mollifier_d1(s) * (-factor * x * scaledot / scale ** 2)

    if fam.kind == "chi":
        out = d_dt_of(tab.mubar0(j, t), tab.mubar0_dot(j, t), 2.0)
        if tab.mubar0(j + 1, t) > 0.0:
            out = out - d_dt_of(tab.mubar0(j + 1, t), tab.mubar0_dot(j + 1, t), 2.0)
        return out
    if fam.kind == "eta":
        return d_dt_of(tab.mu0(j, t), tab.mu0_dot(j, t), 1.0 / (2.0 * fam.R))
    out = d_dt_of(tab.mu0(j, t), tab.mu0_dot(j, t), 1.0 / fam.R)
    if j != tab.k:
        out = out - d_dt_of(tab.mu0(j, t), tab.mu0_dot(j, t), fam.R)
    return out
