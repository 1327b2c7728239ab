"""Heat-kernel (Duhamel) operator on radial piecewise power-law sources.

T[g](x,t) = (4 pi)^{-n/2} int_{-inf}^t (t-s)^{-n/2} int e^{-|x-y|^2/4(t-s)} g(y,s) dy ds

The spatial convolution reduces to a 1-D integral against the radial
heat-kernel marginal (modified-Bessel angular factor, see kernels); the time
integral is split at the source's natural breakpoints and integrated with
adaptive Gauss-Kronrod panels in log(t - s), plus an analytic power-law tail
estimate for the improper end. A catalog of piecewise power-law sources and
their claimed barrier envelopes drives the verification sweeps.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .constants import NumericalError
from .profiles import DomainError

C_STARSTAR = 4.0  # admissible range of the indicator prefactors

# Gauss-Kronrod 7-15 nodes/weights on [-1, 1]
_GK_X = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813])
_GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529])
_GK_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870])

_GL_X, _GL_W = np.polynomial.legendre.leggauss(40)
_GLM_X, _GLM_W = np.polynomial.legendre.leggauss(48)

_KERNEL_CUT = 42.0   # e^{-(r-rho)^2/4th} support radius in units of sqrt(th)


@dataclass(frozen=True)
class PowerLawSource:
    """A |t|^b |x|^{-a} 1_{c1 |t|^{d1} <= |x| <= c2 |t|^{d2}} with amplitude A.

    The exponent ledger guarantees convergence of the Duhamel integral:
    n/2 - b + d2 (a - n) > 1 when a < n, and with d1 in place of d2 when
    a >= n (in which case c1 > 0 is also required for local integrability).
    """

    n: int
    b: float
    a: float
    c1: float = 0.0
    d1: float = 0.0
    c2: float = 1.0
    d2: float = 0.0
    A: float = 1.0

    def __post_init__(self):
        if self.a < 0:
            raise DomainError("constraint violated: a >= 0")
        if not self.d1 <= self.d2 <= 0.5:
            raise DomainError("constraint violated: d1 <= d2 <= 1/2")
        if not 0 <= self.c1 <= C_STARSTAR:
            raise DomainError("constraint violated: 0 <= c1 <= c**")
        if math.isinf(self.c2):
            # unbounded outer support: the kernel window supplies the cutoff
            # and convergence needs a/2 - b > 1
            if not self.a / 2 - self.b > 1:
                raise DomainError(
                    "constraint violated: a/2 - b > 1 (unbounded support)")
            if self.c1 <= 0:
                raise DomainError(
                    "constraint violated: c1 > 0 required for unbounded support")
            return
        if not 0 <= self.c2 <= C_STARSTAR:
            raise DomainError("constraint violated: 0 <= c2 <= c**")
        if self.a < self.n:
            if not self.n / 2 - self.b + self.d2 * (self.a - self.n) > 1:
                raise DomainError(
                    "constraint violated: n/2 - b + d2 (a - n) > 1 (a < n)")
        else:
            if self.c1 <= 0:
                raise DomainError("constraint violated: c1 > 0 required for a >= n")
            if not self.n / 2 - self.b + self.d1 * (self.a - self.n) > 1:
                raise DomainError(
                    "constraint violated: n/2 - b + d1 (a - n) > 1 (a >= n)")

    def bounds(self, s):
        if math.isinf(self.c2):
            return self.c1 * (-s) ** self.d1, math.inf
        return self.c1 * (-s) ** self.d1, self.c2 * (-s) ** self.d2

    def tail_theta_exponent(self):
        """Large-theta decay exponent q of the integrand: the analytic tail
        sum converges iff q < -1, which the ledger guarantees."""
        if math.isinf(self.c2):
            return self.b - self.a / 2
        d = self.d2 if self.a < self.n else self.d1
        return self.b + d * (self.n - self.a) - self.n / 2


def _rho_integral_batch(n, r, thetas, s_vals, src):
    """Spatial convolution values for a batch of thetas (vectorized)."""
    out = np.zeros(len(thetas))
    rho_all = []
    jac_all = []
    idx = []
    for i, (th, s) in enumerate(zip(thetas, s_vals)):
        lo, hi = src.bounds(s)
        if hi <= lo:
            continue
        w = _KERNEL_CUT * math.sqrt(th)
        lo_eff = max(lo, r - w)
        hi_eff = min(hi, r + w)
        if hi_eff <= lo_eff:
            continue
        # peak panel around the kernel's center plus flank panels
        panels = []
        pk_lo = max(lo_eff, r - 8.0 * math.sqrt(th))
        pk_hi = min(hi_eff, r + 8.0 * math.sqrt(th))
        if pk_hi > pk_lo:
            panels.append((pk_lo, pk_hi, False))
            if lo_eff < pk_lo:
                panels.append((lo_eff, pk_lo, True))
            if pk_hi < hi_eff:
                panels.append((pk_hi, hi_eff, True))
        else:
            panels.append((lo_eff, hi_eff, True))
        for (pa, pb, logspace) in panels:
            if logspace and pa > 0 and pb / pa > 30.0:
                u0, u1 = math.log(pa), math.log(pb)
                rho = np.exp(0.5 * (u1 - u0) * _GL_X + 0.5 * (u1 + u0))
                jac = rho * 0.5 * (u1 - u0) * _GL_W
            else:
                rho = 0.5 * (pb - pa) * _GL_X + 0.5 * (pb + pa)
                jac = np.full_like(rho, 0.5 * (pb - pa)) * _GL_W
            rho_all.append(rho)
            jac_all.append(jac)
            idx.append(i)
    if not rho_all:
        return out
    rho_flat = np.concatenate(rho_all)
    th_flat = np.concatenate([np.full(len(rh), thetas[i])
                              for rh, i in zip(rho_all, idx)])
    vals = kernels.heat_kernel_vals(n, r, rho_flat, th_flat)
    vals = vals * rho_flat ** (-src.a)
    pos = 0
    for rh, jc, i in zip(rho_all, jac_all, idx):
        m = len(rh)
        out[i] += float(np.sum(vals[pos:pos + m] * jc))
        pos += m
    return out


def _integrand_batch(n, r, thetas, t, src):
    s_vals = t - thetas
    base = _rho_integral_batch(n, r, thetas, s_vals, src)
    return src.A * (-s_vals) ** src.b * base


def _gk_panel(f, a, b):
    """One Gauss-Kronrod panel in log-theta on [a, b]; returns (value, err)."""
    u0, u1 = math.log(a), math.log(b)
    u = 0.5 * (u1 - u0) * _GK_X + 0.5 * (u1 + u0)
    th = np.exp(u)
    vals = f(th) * th * 0.5 * (u1 - u0)
    k = float(np.sum(vals * _GK_WK))
    g = float(np.sum(vals[1::2] * _GK_WG))
    return k, (200.0 * abs(k - g)) ** 1.5 if k != g else 0.0


def _adaptive_log_quad(f, a, b, tol, max_panels=400):
    """Adaptive GK in log space on [a, b] (0 < a < b)."""
    stack = [(a, b)]
    total = 0.0
    err = 0.0
    panels = 0
    results = []
    while stack:
        lo, hi = stack.pop()
        v, e = _gk_panel(f, lo, hi)
        panels += 1
        if panels > max_panels:
            raise NumericalError("Duhamel quadrature: panel budget exhausted")
        scale = abs(v) + 1e-300
        if e > tol * scale and (hi / lo) > 1.0 + 1e-10:
            mid = math.sqrt(lo * hi)
            stack.append((lo, mid))
            stack.append((mid, hi))
        else:
            results.append((v, e))
    total = sum(v for v, _ in results)
    err = sum(e for _, e in results)
    return total, err


def duhamel_eval(src, x, t, tol=1e-7):
    """Evaluate T[src](x, t) for t < -1 to relative accuracy ~tol."""
    if t >= -1.0:
        raise DomainError("evaluation requires t < -1")
    n = src.n
    r = float(x)

    def f(thetas):
        return _integrand_batch(n, r, thetas, t, src)

    # natural breakpoints of the time integral
    cand = [src.c1 ** 2 * (-t) ** (2 * src.d1), src.c2 ** 2 * (-t) ** (2 * src.d2),
            -t, r * r]
    bps = sorted({c for c in cand if c > 0})
    lo = (min(bps) if bps else -t) * 1e-10
    total = 0.0
    for bp in bps:
        if bp <= lo:
            continue
        v, _ = _adaptive_log_quad(f, lo, bp, tol)
        total += v
        lo = bp

    # improper tail: double the horizon, then close with the analytic
    # power-law estimate from the ledger exponent
    q = src.tail_theta_exponent()
    theta_h = max(lo, -t)
    guard = 0
    while True:
        v, _ = _adaptive_log_quad(f, theta_h, 2 * theta_h, tol)
        total += v
        theta_h *= 2
        fh = float(f(np.array([theta_h]))[0])
        tail = fh * theta_h / (-q - 1.0) if q < -1 else np.inf
        if not np.isfinite(tail):
            raise NumericalError("Duhamel tail estimate failed to converge")
        if tail <= tol * abs(total) or tail == 0.0:
            total += tail
            break
        guard += 1
        if guard > 60:
            raise NumericalError("Duhamel tail did not reach tolerance")
    return total


def duhamel_eval_callable(n, g, x, t, theta_lo, theta_hi, tol=1e-8):
    """T applied to a general radial source g(rho_array, s) supported in
    rho <= some radius; integrates theta over [theta_lo, theta_hi] only
    (caller controls the window; used for smooth compact test sources)."""
    r = float(x)

    def f(thetas):
        out = np.zeros(len(thetas))
        for i, th in enumerate(thetas):
            s = t - th
            w = _KERNEL_CUT * math.sqrt(th)
            lo_eff, hi_eff = max(0.0, r - w), r + w
            rho = 0.5 * (hi_eff - lo_eff) * _GL_X + 0.5 * (hi_eff + lo_eff)
            jac = 0.5 * (hi_eff - lo_eff) * _GL_W
            kv = kernels.heat_kernel_vals(n, r, rho, np.full_like(rho, th))
            out[i] = float(np.sum(kv * g(rho, s) * jac))
        return out

    v, _ = _adaptive_log_quad(f, theta_lo, theta_hi, tol)
    return v


def gradient_kernel_eval(src, x, t, tol=1e-6):
    """The gradient-type operator: int (t-s)^{-n/2-1} int e^{-|x-y|^2/4(t-s)}
    |x-y| g(y, s) dy ds on the same source class (no Gaussian prefactor)."""
    if t >= -1.0:
        raise DomainError("evaluation requires t < -1")
    n = src.n
    # ledger: with the |x-y| weight the tail needs one more power
    d_eff = src.d2 if src.a < n else src.d1
    if not n / 2 - src.b - d_eff * (n - src.a) > 0:
        raise DomainError(
            "constraint violated: n/2 - b - d (n - a) > 0 for the gradient kernel")
    r = float(x)

    def f(thetas):
        out = np.zeros(len(thetas))
        for i, th in enumerate(thetas):
            s = t - th
            lo, hi = src.bounds(s)
            if hi <= lo:
                continue
            w = _KERNEL_CUT * math.sqrt(th) + r * 1e-6
            lo_eff = max(lo, r - w)
            hi_eff = min(hi, r + w)
            if hi_eff <= lo_eff:
                continue
            rho = 0.5 * (hi_eff - lo_eff) * _GL_X + 0.5 * (hi_eff + lo_eff)
            jac = 0.5 * (hi_eff - lo_eff) * _GL_W
            kv = kernels.grad_kernel_vals(n, r, rho, np.full_like(rho, th),
                                          _GLM_X, _GLM_W)
            out[i] = float(np.sum(kv * rho ** (-src.a) * jac))
        return src.A * (-(t - thetas)) ** src.b * out * thetas ** (-n / 2 - 1.0)

    cand = [src.c1 ** 2 * (-t) ** (2 * src.d1), src.c2 ** 2 * (-t) ** (2 * src.d2),
            -t, r * r]
    bps = sorted({c for c in cand if c > 0})
    lo = (min(bps) if bps else -t) * 1e-10
    total = 0.0
    for bp in bps:
        if bp <= lo:
            continue
        v, _ = _adaptive_log_quad(f, lo, bp, tol)
        total += v
        lo = bp
    theta_h = max(lo, -t)
    guard = 0
    while True:
        v, _ = _adaptive_log_quad(f, theta_h, 2 * theta_h, tol)
        total += v
        theta_h *= 2
        fh = float(f(np.array([theta_h]))[0])
        f2 = float(f(np.array([1.5 * theta_h]))[0])
        if fh <= 0 or f2 <= 0:
            break
        q = math.log(f2 / fh) / math.log(1.5)
        if q >= -1.01:
            guard += 1
            if guard > 60:
                raise NumericalError("gradient-kernel tail did not converge")
            continue
        tail = fh * theta_h / (-q - 1.0)
        if tail <= tol * abs(total):
            total += tail
            break
        guard += 1
        if guard > 60:
            raise NumericalError("gradient-kernel tail did not converge")
    return total
