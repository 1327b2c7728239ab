"""Pure-NumPy implementations of the hot kernels.

Same signatures and semantics as the compiled module bubbletower._accel;
selected at import time by bubbletower.kernels when the extension is not
available (or when BUBBLETOWER_PURE=1).
"""
import numpy as np
from scipy import special

BACKEND = "pure"


def heat_kernel_vals(n, r, rho, theta):
    """Radial reduction of the n-dimensional Gaussian heat kernel.

    Returns k(r, rho_i, theta_i) such that the convolution of the heat kernel
    at time theta with a radial profile g equals int_0^inf k * g(rho) drho.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    nu = 0.5 * n - 1.0
    om2 = 2.0 * np.pi ** (0.5 * (n - 1)) / special.gamma(0.5 * (n - 1))
    ang_pref = np.sqrt(np.pi) * special.gamma(0.5 * (n - 1))
    ang_small = ang_pref / special.gamma(0.5 * n)
    kappa = r * rho / (2.0 * theta)
    small = kappa < 1e-8
    big = kappa > 1e8     # scipy's ive fails past ~1e9; use the asymptotics
    kap = np.where(small | big, 1.0, kappa)
    ang = np.where(small, ang_small, ang_pref * (2.0 / kap) ** nu * special.ive(nu, kap))
    if np.any(big):
        m = 4.0 * nu * nu
        kb = np.where(big, kappa, 1.0)
        asym = ((1.0 - (m - 1.0) / (8.0 * kb)
                 + (m - 1.0) * (m - 9.0) / (128.0 * kb * kb))
                / np.sqrt(2.0 * np.pi * kb))
        ang = np.where(big, ang_pref * (2.0 / kb) ** nu * asym, ang)
    expo = np.where(small, -(r * r + rho * rho) / (4.0 * theta),
                    -((r - rho) ** 2) / (4.0 * theta))
    return (4.0 * np.pi * theta) ** (-0.5 * n) * rho ** (n - 1) * om2 * ang * np.exp(expo)


def grad_kernel_vals(n, r, rho, theta, glx, glw):
    """Radial reduction of the kernel e^{-|x-y|^2/4theta} |x-y| via the
    chord-length substitution m = |x-y| and the supplied Gauss-Legendre rule."""
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    om2 = 2.0 * np.pi ** (0.5 * (n - 1)) / special.gamma(0.5 * (n - 1))
    om1 = 2.0 * np.pi ** (0.5 * n) / special.gamma(0.5 * n)
    out = np.zeros(rho.shape, dtype=float)

    sqth = np.sqrt(theta)
    deg_x = r < 1e-9 * (rho + sqth)          # x at the origin
    deg_y = rho < 1e-9 * (r + sqth)          # source ring at the origin
    pos = (rho > 0) & ~deg_x & ~deg_y

    out[deg_x] = om1 * rho[deg_x] ** n * np.exp(-rho[deg_x] ** 2 / (4.0 * theta[deg_x]))
    dy = deg_y & (rho > 0)
    out[dy] = om1 * rho[dy] ** (n - 1) * r * np.exp(-r * r / (4.0 * theta[dy]))

    if np.any(pos):
        rh = rho[pos]
        th = theta[pos]
        A = np.abs(r - rh)
        B = r + rh
        mhi = np.minimum(B, np.sqrt(A * A + 3600.0 * th))
        good = mhi > A
        mid = 0.5 * (mhi + A)
        hw = 0.5 * (mhi - A)
        mq = mid[:, None] + hw[:, None] * glx[None, :]
        w2 = np.maximum((mq ** 2 - (A ** 2)[:, None]) * ((B ** 2)[:, None] - mq ** 2), 0.0)
        integ = mq ** 2 * np.exp(-mq ** 2 / (4.0 * th[:, None])) * w2 ** (0.5 * (n - 3))
        val = hw * (integ @ glw)
        scale = om2 * rh ** (n - 1) / ((2.0 * r * rh) ** (n - 3) * r * rh)
        out[pos] = np.where(good, scale * val, 0.0)
    return out


def thomas_solve(dl, d, du, b):
    """Solve a tridiagonal system (dl: sub, d: main, du: super; dl[0], du[-1] unused)."""
    n = d.shape[0]
    c = np.empty(n)
    x = np.empty(n)
    c[0] = du[0] / d[0]
    x[0] = b[0] / d[0]
    for i in range(1, n):
        w = d[i] - dl[i] * c[i - 1]
        c[i] = du[i] / w if i < n - 1 else 0.0
        x[i] = (b[i] - dl[i] * x[i - 1]) / w
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x
