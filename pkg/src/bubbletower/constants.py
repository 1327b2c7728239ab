"""Interaction constants and exponent tables for the bubble tower.

The rate constant c_* is a ratio of two radial quadratures of the bubble
profile; the scale exponents alpha_j, prefactors beta_j, and the two weight
exponent families gamma_j / gamma_j^* all follow from it by closed-form
recursions. A ConstantTable bundles them together with the leading-order
scale trajectories mu0_j(t) = beta_j (-t)^{-alpha_j} and the derived
transition radii, so that every module evaluates scales the same way.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .profiles import Dimension, DomainError, bubble_value, kernel_Zn1


class ConfigError(ValueError):
    """A configuration value violates the analytic constraint ledger."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""


def sphere_area(n):
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class AnalyticParams:
    """Small analytic parameters of the construction, with their ledger.

    The defaults satisfy every inequality the estimates impose; they are
    configuration, not ground truth, since the construction only requires
    the parameters to be "small enough".
    """

    sigma: float = 0.01
    alpha_w: float = 0.5
    a: float = 0.75
    delta: float | None = None  # resolved against n at validation time
    eps: float = 0.001
    R: float = 40.0
    t0: float = -1.0e3

    def resolve(self, n):
        """Fill the n-dependent default for delta and validate."""
        delta = self.delta
        if delta is None:
            delta = min(0.5, 1.0 / (n - 2 - self.alpha_w), 2.0 / (n - 2) ** 2)
        out = replace(self, delta=delta)
        out.validate(n)
        return out

    def validate(self, n):
        checks = [
            (0 < self.alpha_w, "0 < alpha_w"),
            (self.alpha_w < self.a, "alpha_w < a"),
            (self.a < 1, "a < 1"),
            (self.alpha_w < n - 6, "alpha_w < n - 6"),
            (0 < self.sigma < 1, "0 < sigma < 1"),
            (self.sigma < 1.0 / (n - 6) + 1e-15, "sigma <= 1/(n-6)"),
            (self.delta is not None and 0 < self.delta <= 0.5, "0 < delta <= 1/2"),
            (self.delta is not None
             and self.delta <= 1.0 / (n - 2 - self.alpha_w) + 1e-15,
             "delta <= 1/(n-2-alpha_w)"),
            (0 < self.eps < 1, "0 < eps < 1"),
            (self.R >= 4, "R >= 4"),
            (self.t0 <= -10, "t0 <= -10"),
        ]
        for ok, name in checks:
            if not ok:
                raise ConfigError(f"constraint violated: {name}")


def compute_cstar(dim, quad_tol=1e-10):
    """Rate constant of the scale ODE:
    c_* = U(0) (n-2)/2 * int U^p / int Z^2 over R^n (both radial quadratures).

    Integrals are done adaptively on r in [0, 1] plus the substitution
    r = 1/s on the tail, and the result is checked stable under halving the
    tolerance.
    """
    if not (0 < quad_tol <= 1e-4):
        raise ConfigError("constraint violated: quad_tol in (0, 1e-4]")

    def radial_integral(f, tol):
        head, eh = integrate.quad(lambda r: f(r) * r ** (dim.n - 1), 0.0, 1.0,
                                  epsabs=0.0, epsrel=tol, limit=200)
        tail, et = integrate.quad(lambda s: f(1.0 / s) * s ** (-dim.n - 1), 0.0, 1.0,
                                  epsabs=0.0, epsrel=tol, limit=200)
        val = head + tail
        if val != 0 and (eh + et) / abs(val) > 50 * tol:
            raise NumericalError(
                f"quadrature failed to converge: value {val:.6e}, error {eh + et:.2e}")
        return val

    def ratio(tol):
        up = radial_integral(lambda r: bubble_value(dim, r) ** dim.p, tol)
        z2 = radial_integral(lambda r: kernel_Zn1(dim, r) ** 2, tol)
        return up / z2

    rho = ratio(quad_tol)
    rho_half = ratio(quad_tol / 2)
    if abs(rho / rho_half - 1.0) > quad_tol:
        raise NumericalError(
            f"c_* quadrature unstable under tolerance halving: {rho} vs {rho_half}")
    return bubble_value(dim, 0.0) * (dim.n - 2) / 2 * rho_half


@dataclass(frozen=True)
class ConstantTable:
    """All analytic constants for a tower of height k in dimension n.

    alpha, beta, gamma, gamma_star are 1-indexed through the j(...) helpers;
    internally arrays of length k.
    """

    dim: Dimension
    k: int
    params: AnalyticParams
    cstar: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    gamma_star: np.ndarray
    omega: float = field(default=0.0)

    # -- scale trajectories (leading order) --------------------------------
    def mu0(self, j, t):
        """mu0_j(t) = beta_j (-t)^{-alpha_j}."""
        self._check_j(j)
        return self.beta[j - 1] * (-t) ** (-self.alpha[j - 1])

    def mu0_dot(self, j, t):
        self._check_j(j)
        return self.alpha[j - 1] * self.beta[j - 1] * (-t) ** (-self.alpha[j - 1] - 1.0)

    def lambda0(self, j, t):
        """Scale ratio mu0_j / mu0_{j-1} (j >= 2)."""
        if j < 2:
            raise DomainError("lambda0 defined for j >= 2")
        return self.mu0(j, t) / self.mu0(j - 1, t)

    def lambda0_dot(self, j, t):
        lam = self.lambda0(j, t)
        return lam * (self.alpha[j - 1] - self.alpha[j - 2]) / (-t)

    def mubar0(self, j, t):
        """Transition radii: geometric means sqrt(mu0_j mu0_{j-1}) for
        2 <= j <= k, with the conventions mubar0_1 = (-t)^delta and
        mubar0_{k+1} = 0."""
        if j == 1:
            return (-t) ** self.params.delta
        if j == self.k + 1:
            return 0.0
        self._check_j(j)
        return math.sqrt(self.mu0(j, t) * self.mu0(j - 1, t))

    def mubar0_dot(self, j, t):
        if j == 1:
            return -self.params.delta * (-t) ** (self.params.delta - 1.0)
        if j == self.k + 1:
            return 0.0
        self._check_j(j)
        return self.mubar0(j, t) * (self.alpha[j - 1] + self.alpha[j - 2]) / (2.0 * (-t))

    def _check_j(self, j):
        if not 1 <= j <= self.k:
            raise DomainError(f"bubble index {j} outside [1, {self.k}]")

    # -- convenience --------------------------------------------------------
    def as_dict(self):
        return {
            "n": self.dim.n,
            "k": self.k,
            "p": self.dim.p,
            "alpha_n": self.dim.alpha_n,
            "c_star": self.cstar,
            "omega_n_minus_1": self.omega,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "gamma": list(self.gamma),
            "gamma_star": list(self.gamma_star),
            "params": {
                "sigma": self.params.sigma,
                "alpha_w": self.params.alpha_w,
                "a": self.params.a,
                "delta": self.params.delta,
                "eps": self.params.eps,
                "R": self.params.R,
                "t0": self.params.t0,
            },
        }


def build_constant_table(n, k, params=None, quad_tol=1e-10):
    """Build the full constant table for a k-bubble tower in dimension n.

    k = 1 is the degenerate single-bubble tower (no interaction constants);
    it is allowed so that downstream assembly can treat it uniformly.
    """
    dim = Dimension(n)
    if k < 1:
        raise ConfigError("constraint violated: k >= 1")
    params = (params or AnalyticParams()).resolve(n)
    cstar = compute_cstar(dim, quad_tol)

    ratio = (n - 2) / (n - 6)
    alpha = np.array([0.5 * ratio ** (j - 1) - 0.5 for j in range(1, k + 1)])
    beta = np.empty(k)
    beta[0] = 1.0
    for j in range(2, k + 1):
        beta[j - 1] = (alpha[j - 1] / cstar) ** (2.0 / (n - 6)) * beta[j - 2] ** ratio

    sig = params.sigma
    gamma = np.empty(k)
    gamma[0] = -1.0 - sig
    for j in range(2, k + 1):
        gamma[j - 1] = (n - 2) / 2 * alpha[j - 2] - sig

    gamma_star = np.empty(k)
    gamma_star[0] = gamma[0] + (n - 2 - params.alpha_w) * params.delta
    for j in range(2, k + 1):
        gamma_star[j - 1] = ((1 - n / 2) * alpha[j - 1]
                             - params.alpha_w / 2 * (alpha[j - 1] - alpha[j - 2]) - sig)

    return ConstantTable(dim=dim, k=k, params=params, cstar=cstar,
                         alpha=alpha, beta=beta, gamma=gamma,
                         gamma_star=gamma_star, omega=sphere_area(n))
