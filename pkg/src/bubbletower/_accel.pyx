# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: radial heat-kernel rows, the |x-y|-weighted variant,
and the tridiagonal solve used by the implicit steppers.

Signatures must stay in sync with bubbletower._reference (the pure fallback).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, pi, pow, sqrt, tgamma

from scipy.special.cython_special cimport ive

cnp.import_array()

BACKEND = "compiled"


def heat_kernel_vals(int n, double r, double[::1] rho, double[::1] theta):
    """Radial reduction of the n-dimensional Gaussian heat kernel.

    Returns k(r, rho_i, theta_i) such that the convolution of the heat kernel
    at time theta with a radial profile g equals int_0^inf k * g(rho) drho.
    """
    cdef Py_ssize_t m = rho.shape[0], i
    cdef double nu = 0.5 * n - 1.0
    cdef double om2 = 2.0 * pow(pi, 0.5 * (n - 1)) / tgamma(0.5 * (n - 1))
    cdef double ang_pref = sqrt(pi) * tgamma(0.5 * (n - 1))
    cdef double ang_small = ang_pref / tgamma(0.5 * n)
    cdef double kappa, ang, expo, th, rh, m4
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    m4 = 4.0 * nu * nu
    for i in range(m):
        th = theta[i]
        rh = rho[i]
        kappa = r * rh / (2.0 * th)
        if kappa < 1e-8:
            ang = ang_small
            expo = -(r * r + rh * rh) / (4.0 * th)
        elif kappa > 1e8:
            # large-argument asymptotics (ive itself fails past ~1e9)
            ang = ang_pref * pow(2.0 / kappa, nu) * (
                1.0 - (m4 - 1.0) / (8.0 * kappa)
                + (m4 - 1.0) * (m4 - 9.0) / (128.0 * kappa * kappa)) / sqrt(
                2.0 * pi * kappa)
            expo = -(r - rh) * (r - rh) / (4.0 * th)
        else:
            ang = ang_pref * pow(2.0 / kappa, nu) * ive(nu, kappa)
            expo = -(r - rh) * (r - rh) / (4.0 * th)
        o[i] = pow(4.0 * pi * th, -0.5 * n) * pow(rh, n - 1) * om2 * ang * exp(expo)
    return out


def grad_kernel_vals(int n, double r, double[::1] rho, double[::1] theta,
                     double[::1] glx, double[::1] glw):
    """Radial reduction of the kernel e^{-|x-y|^2/4theta} |x-y| (no Gaussian
    normalization): the chord-length integral is done with the supplied
    Gauss-Legendre rule after substituting m = |x-y|.
    """
    cdef Py_ssize_t mm = rho.shape[0], nq = glx.shape[0], i, q
    cdef double om2 = 2.0 * pow(pi, 0.5 * (n - 1)) / tgamma(0.5 * (n - 1))
    cdef double om1 = 2.0 * pow(pi, 0.5 * n) / tgamma(0.5 * n)
    cdef double half_pow = 0.5 * (n - 3)
    cdef double th, rh, A, B, mhi, mid, hw, mq, w2, val, scale
    out = np.empty(mm, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(mm):
        th = theta[i]
        rh = rho[i]
        if rh <= 0.0:
            o[i] = 0.0
            continue
        if r < 1e-9 * (rh + sqrt(th)):
            # x at the origin: |x-y| = rho exactly
            o[i] = om1 * pow(rh, n - 1) * rh * exp(-rh * rh / (4.0 * th))
            continue
        if rh < 1e-9 * (r + sqrt(th)):
            o[i] = om1 * pow(rh, n - 1) * r * exp(-r * r / (4.0 * th))
            continue
        A = r - rh if r > rh else rh - r
        B = r + rh
        mhi = sqrt(A * A + 3600.0 * th)
        if B < mhi:
            mhi = B
        if mhi <= A:
            o[i] = 0.0
            continue
        mid = 0.5 * (mhi + A)
        hw = 0.5 * (mhi - A)
        val = 0.0
        for q in range(nq):
            mq = mid + hw * glx[q]
            w2 = (mq * mq - A * A) * (B * B - mq * mq)
            if w2 < 0.0:
                w2 = 0.0
            val += glw[q] * mq * mq * exp(-mq * mq / (4.0 * th)) * pow(w2, half_pow)
        val *= hw
        scale = om2 * pow(rh, n - 1) / (pow(2.0 * r * rh, n - 3) * r * rh)
        o[i] = scale * val
    return out


def thomas_solve(double[::1] dl, double[::1] d, double[::1] du, double[::1] b):
    """Solve a tridiagonal system (dl: sub, d: main, du: super; dl[0], du[-1] unused)."""
    cdef Py_ssize_t n = d.shape[0], i
    cdef double w
    cp = np.empty(n, dtype=np.float64)
    xp = np.empty(n, dtype=np.float64)
    cdef double[::1] c = cp
    cdef double[::1] x = xp
    c[0] = du[0] / d[0]
    x[0] = b[0] / d[0]
    for i in range(1, n):
        w = d[i] - dl[i] * c[i - 1]
        c[i] = du[i] / w if i < n - 1 else 0.0
        x[i] = (b[i] - dl[i] * x[i - 1]) / w
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - c[i] * x[i + 1]
    return xp
