"""Radial grids and sampled radial fields.

Grids are plain 1-D node arrays (strictly increasing, usually starting at 0);
helpers build the log-spaced, uniform-core, and multiscale variants the
solvers need. A RadialField couples samples to a grid and can evaluate
off-grid through a smooth chart.
"""
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .profiles import DomainError


def log_grid(r_min, r_max, num, origin=True):
    """Geometrically spaced nodes, optionally with a leading 0 node."""
    if not (0 < r_min < r_max):
        raise DomainError("need 0 < r_min < r_max")
    body = np.geomspace(r_min, r_max, num)
    return np.concatenate([[0.0], body]) if origin else body


def uniform_grid(r_max, num):
    return np.linspace(0.0, r_max, num)


def patched_log_grid(r_min, r_max, num):
    """Log grid on [r_min, r_max] preceded by a uniform patch down to 0 whose
    spacing matches the log spacing at r_min: avoids the abrupt spacing jump
    at the first node that degrades nonuniform finite-difference stencils."""
    body = np.geomspace(r_min, r_max, num)
    h0 = body[1] - body[0]
    patch = np.arange(0.0, r_min - h0 / 2, h0)
    return np.concatenate([patch, body])


def core_tail_grid(h_core, r_core, r_max, stretch=1.04):
    """Uniform spacing h_core on [0, r_core], then geometrically stretched
    spacings (ratio `stretch`) out to r_max. Smooth spacing transition keeps
    the nonuniform stencils second-order in practice."""
    core = np.arange(0.0, r_core, h_core)
    pts = [core]
    r = core[-1]
    h = h_core
    tail = []
    while r < r_max:
        h *= stretch
        r += h
        tail.append(min(r, r_max))
    pts.append(np.asarray(tail))
    return np.concatenate(pts)


def multiscale_grid(scales, r_max, per_decade=24, r_min_factor=1e-3):
    """Union of log grids resolving every scale in `scales` plus a global
    log grid up to r_max; >= per_decade nodes per decade everywhere between
    the smallest scale * r_min_factor and r_max."""
    scales = [s for s in scales if s > 0]
    lo = min(scales) * r_min_factor
    num = max(2, int(np.ceil(per_decade * np.log10(r_max / lo))))
    return log_grid(lo, r_max, num)


@dataclass
class RadialField:
    """Samples of a radial function on a grid, with smooth off-grid evaluation.

    Interpolation runs in the chart u = asinh(r): uniform resolution in log r
    for large radii while staying smooth through the origin.
    """

    r: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.r.ndim != 1 or self.r.shape != self.values.shape:
            raise DomainError("grid/values shape mismatch")
        if np.any(np.diff(self.r) <= 0):
            raise DomainError("grid must be strictly increasing")
        self._spline = None

    def _ensure_spline(self):
        if self._spline is None:
            self._spline = CubicSpline(np.arcsinh(self.r), self.values)

    def __call__(self, r):
        self._ensure_spline()
        return self._spline(np.arcsinh(np.asarray(r, dtype=float)))

    def derivative(self, r):
        """df/dr via the chart rule du/dr = 1/sqrt(1+r^2)."""
        self._ensure_spline()
        r = np.asarray(r, dtype=float)
        return self._spline(np.arcsinh(r), 1) / np.sqrt(1.0 + r * r)


def quadrature_weights(r, n):
    """Trapezoid weights for int f r^{n-1} dr on a (possibly nonuniform) grid."""
    w = np.zeros_like(r)
    dr = np.diff(r)
    w[:-1] += dr / 2
    w[1:] += dr / 2
    return w * r ** (n - 1)
