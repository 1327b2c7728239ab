"""Radial method-of-lines evolution.

Nonlinear flow u_t = Lap(u) + u^p: semi-implicit stepping (implicit linear
diffusion through a tridiagonal solve on the graded grid, explicit reaction)
with the reaction step bound p u^{p-1} dt <= 0.2 and a far-field Robin
closure matched to the r^{2-n} decay class. Backward evolution is ill-posed
and not offered; the ancient regime is probed by starting forward runs at
very negative times from the glued ansatz.

Inner linear flow phi_tau = Lap(phi) + p U^{p-1} phi + h on a ball with zero
boundary data: backward Euler with steps large enough that the one unstable
mode of the linearized operator is contracted onto its quasi-static value
(the bounded branch), plus per-step projection of the state against the
scaling kernel.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import NumericalError
from .grids import core_tail_grid, quadrature_weights
from .profiles import DomainError, bubble_value, kernel_Zn1


@dataclass
class StepControls:
    reaction_cfl: float = 0.2
    dt_max: float = np.inf
    dt_min: float = 1e-30
    max_steps: int = 2_000_000
    store_every: int = 1


@dataclass
class EvolutionState:
    grid: np.ndarray
    u: np.ndarray
    t: float
    steps: int = 0
    accepted: int = 0
    events: list = field(default_factory=list)


@dataclass
class TimeSeries:
    times: list = field(default_factory=list)
    center: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dts: list = field(default_factory=list)

    def as_arrays(self):
        return (np.asarray(self.times), np.asarray(self.center),
                np.asarray(self.energy), np.asarray(self.dts))


def _diffusion_bands(n, r, robin_order):
    """Tridiagonal bands of the radial Laplacian with origin regularization
    and the far-field Robin closure u' + q u / r = 0."""
    N = len(r)
    dl = np.zeros(N)
    d = np.zeros(N)
    du = np.zeros(N)
    d[0] = -2.0 * n / r[1] ** 2
    du[0] = 2.0 * n / r[1] ** 2
    rc = r[1:-1]
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    rp = (rc + hp / 2) ** (n - 1)
    rm = (rc - hm / 2) ** (n - 1)
    vol = rc ** (n - 1) * (hp + hm) / 2
    lo = rm / (hm * vol)
    up = rp / (hp * vol)
    dl[1:-1] = lo
    du[1:-1] = up
    d[1:-1] = -(lo + up)
    # Robin at the last node via a ghost point eliminated at the midpoint
    h = r[-1] - r[-2]
    rmid = 0.5 * (r[-1] + r[-2])
    q = robin_order
    # u' + q u / r = 0 at the midpoint: ghost relation folds into the bands
    rl = r[-1]
    rpg = (rl + h / 2) ** (n - 1)
    rmg = (rl - h / 2) ** (n - 1)
    volg = rl ** (n - 1) * h
    ghost = (1.0 - q * h / rl)  # first-order ghost ratio u_g = ghost * u_N
    dl[-1] = rmg / (h * volg)
    d[-1] = (rpg * (ghost - 1.0) - rmg) / (h * volg)
    return dl, d, du


def energy_functional(n, grid, u, p):
    """J(u) = int (|u'|^2 / 2 - u^{p+1}/(p+1)) r^{n-1} dr (angular factor
    dropped consistently)."""
    du = np.gradient(u, grid)
    w = quadrature_weights(grid, n)
    return float(np.sum(w * (0.5 * du * du - np.abs(u) ** (p + 1) / (p + 1))))


def default_tower_grid(mu_min, r_max=50.0, nodes_per_scale=80, stretch=1.03):
    """Uniform core resolving the smallest scale, stretched tail to r_max."""
    h = mu_min / nodes_per_scale
    r_core = min(6.0, r_max / 4)
    return core_tail_grid(h, r_core, r_max, stretch)


def evolve_nonlinear(dim, state, t_end, controls=None, series_hook=None):
    """March u_t = Lap(u) + u^p forward from state.t to t_end.

    Returns (state, series). Positivity loss and step underflow are flagged
    as events ('blow-down', 'stiffness') and terminate the run rather than
    raising; the caller inspects state.events.
    """
    controls = controls or StepControls()
    n = dim.n
    p = dim.p
    r = state.grid
    dl, d, du = _diffusion_bands(n, r, n - 2)
    series = TimeSeries()
    u = state.u.copy()
    t = state.t
    w = quadrature_weights(r, n)

    def record(dt):
        series.times.append(t)
        series.center.append(float(u[0]))
        series.energy.append(energy_functional(n, r, u, p))
        series.dts.append(dt)

    record(0.0)
    while t < t_end and state.steps < controls.max_steps:
        umax = float(np.max(u))
        dt = min(controls.reaction_cfl / (p * umax ** (p - 1) + 1e-300),
                 controls.dt_max, t_end - t)
        if dt < controls.dt_min:
            state.events.append(("stiffness", t, dt))
            break
        # backward Euler in the diffusion, explicit reaction
        rhs = u + dt * np.abs(u) ** (p - 1) * u
        main = 1.0 - dt * d
        lower = -dt * dl
        upper = -dt * du
        u_new = kernels.thomas_solve(lower, main, upper, rhs)
        state.steps += 1
        if np.any(~np.isfinite(u_new)):
            state.events.append(("nonfinite", t, dt))
            break
        if np.any(u_new < 0):
            state.events.append(("blow-down", t, dt))
            u = np.maximum(u_new, 0.0)
            t += dt
            record(dt)
            break
        u = u_new
        t += dt
        state.accepted += 1
        if state.accepted % controls.store_every == 0:
            record(dt)
        if series_hook is not None:
            series_hook(t, u)
    state.u = u
    state.t = t
    return state, series


# ---------------------------------------------------------------------------
# inner linear flow
# ---------------------------------------------------------------------------

def _inner_operator(dim, R, num):
    """Bands of Lap + p U^{p-1} on [0, 8R] with a Dirichlet boundary node
    (the boundary row is dropped; fields carry num-1 interior values)."""
    r = np.linspace(0.0, 8.0 * R, num)
    rc = r[:-1]
    dl, d, du = _diffusion_bands(dim.n, r, dim.n - 2)
    # overwrite the Robin closure with Dirichlet: value at r[-1] is zero
    dl_i, d_i, du_i = dl[:-1].copy(), d[:-1].copy(), du[:-1].copy()
    du_i[-1] = 0.0
    pot = dim.p * bubble_value(dim, rc) ** (dim.p - 1)
    return r, rc, dl_i, d_i + pot, du_i


@dataclass
class InnerFlowReport:
    taus: np.ndarray
    sup_ratio: float
    ratio_series: np.ndarray
    orthogonality_drift: float
    events: list


def evolve_inner_linear(dim, forcing, R, tau_start, tau_end, nu,
                        a=0.75, dt_factor=0.05, project_unstable=True,
                        mask_radius=None, collect=None):
    """March phi_tau = Lap(phi) + p U^{p-1} phi + h from zero data at
    tau_start to tau_end (both negative), measuring the weighted ratio
    ||phi||^{in,*} / ||h||^{in} along the run.

    forcing: callable h(y_array, tau) -> values (orthogonalized internally
    against the discrete scaling kernel). Backward Euler with dt >= 2.5 /
    lambda_+ keeps the unstable mode on its quasi-static (bounded) branch;
    the state is additionally projected against the scaling kernel every
    step, and optionally against the discrete unstable mode.

    mask_radius: if set, the potential is masked off inside that radius
    (used by the uniqueness surrogate, which then has no unstable mode and
    needs no projections).
    """
    if not tau_start < tau_end < 0:
        raise DomainError("need tau_start < tau_end < 0")
    num = max(600, int(40 * 8 * R))
    r, rc, dl, d, du = _inner_operator(dim, R, num)
    if mask_radius is not None:
        from .profiles import mollifier
        mask = 1.0 - mollifier(rc - mask_radius + 1.0)
        pot = dim.p * bubble_value(dim, rc) ** (dim.p - 1)
        d = d - pot + pot * mask
    w = quadrature_weights(r, dim.n)[:-1]
    z = kernel_Zn1(dim, rc)
    z_norm2 = float(np.sum(w * z * z))

    lam_plus = 0.0
    psi = None
    if mask_radius is None:
        lam_plus, psi = _top_mode(dl, d, du, w)

    def project(v):
        v = v - np.sum(w * v * z) / z_norm2 * z
        if project_unstable and psi is not None:
            v = v - np.sum(w * v * psi) * psi
        return v

    # deterministic geometric tau grid anchored at tau_end so that runs with
    # different start times step through identical sample times on the
    # common window
    ratio_g = 1.0 + dt_factor
    grid_pts = [tau_end]
    while grid_pts[-1] > tau_start:
        grid_pts.append(grid_pts[-1] * ratio_g)
    grid_pts = np.asarray(grid_pts[::-1])
    if lam_plus > 0 and (grid_pts[-1] - grid_pts[-2]
                         if len(grid_pts) > 1 else np.inf) < 2.5 / lam_plus:
        raise DomainError(
            "step at tau_end below 2.5 / lambda_+: increase dt_factor or "
            "choose tau_end more negative so the bounded-branch selection holds")

    phi = np.zeros_like(rc)
    ratios = []
    taus = []
    drift = 0.0
    events = []
    yw_h = (1.0 + rc ** 2) ** ((2 + a) / 2)
    yw_p = (1.0 + rc ** 2) ** ((dim.n + 1) / 2)
    Rfac = R ** (-(dim.n + 1 - a))
    for m in range(len(grid_pts) - 1):
        tau = grid_pts[m]
        dt = grid_pts[m + 1] - grid_pts[m]
        h = project(forcing(rc, tau))
        rhs = phi + dt * h
        u_new = kernels.thomas_solve(-dt * dl, 1.0 - dt * d, -dt * du, rhs)
        phi = project(u_new)
        tau = grid_pts[m + 1]
        drift = max(drift, abs(float(np.sum(w * phi * z)))
                    / (z_norm2 ** 0.5 * (float(np.sum(w * phi * phi)) ** 0.5 + 1e-300)))
        hn = float(np.max(np.abs(h) * yw_h)) / nu(tau)
        pn = Rfac * float(np.max(np.abs(phi) * yw_p)) / nu(tau)
        if hn > 0:
            ratios.append(pn / hn)
            taus.append(tau)
        if collect is not None:
            collect(tau, rc, phi)
    if drift > 1e-6:
        events.append(("projection-failure", drift))
    ratios = np.asarray(ratios)
    return InnerFlowReport(np.asarray(taus), float(np.max(ratios)) if len(ratios) else 0.0,
                           ratios, drift, events)


def _top_mode(dl, d, du, w, shift=9.0, iters=200, tol=1e-12):
    """Largest eigenvalue/eigenvector of the banded operator (weighted
    inner product) by shifted inverse iteration."""
    v = np.exp(-np.linspace(0, 8, len(d)) ** 2)
    lam = shift
    lam_old = np.inf
    for _ in range(iters):
        try:
            v = kernels.thomas_solve(dl, d - lam, du, v)
        except ZeroDivisionError:
            lam += 1e-6
            continue
        v = v / math.sqrt(float(np.sum(w * v * v)))
        Av = d * v
        Av[:-1] += du[:-1] * v[1:]
        Av[1:] += dl[1:] * v[:-1]
        lam_new = float(np.sum(w * v * Av))
        if abs(lam_new - lam_old) < tol * (1 + abs(lam_new)):
            return lam_new, v
        lam_old, lam = lam_new, lam_new
    return lam, v


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass
class BubbleDiagnostics:
    times: np.ndarray
    mu_inner: np.ndarray          # innermost scale from the center value
    mu_fit: np.ndarray = None     # all scales from least squares, (k, T)
    fit_residual: float = 0.0
    reliable: bool = True


def extract_inner_scale(dim, center_values):
    """mu = (alpha_n / u(0))^{2/(n-2)}: inversion of the center value."""
    c = np.asarray(center_values, dtype=float)
    return (dim.alpha_n / c) ** (2.0 / (dim.n - 2))


def fit_tower_scales(dim, grid, u, k, mu_guess, residual_threshold=0.25):
    """Nonlinear least squares of log u against a k-bubble superposition on
    log-spaced radii. Returns (scales, residual, reliable)."""
    from scipy.optimize import least_squares

    sel = grid > 0
    r = grid[sel]
    target = np.log(np.maximum(u[sel], 1e-300))
    lw = np.log(np.geomspace(r[0], r[-1], 160))
    rs = np.exp(lw)
    tgt = np.interp(lw, np.log(r), target)

    def model(logmu):
        mu = np.exp(logmu)
        vals = sum(mu[j] ** (-(dim.n - 2) / 2)
                   * bubble_value(dim, rs / mu[j]) for j in range(k))
        return np.log(np.maximum(vals, 1e-300)) - tgt

    sol = least_squares(model, np.log(np.asarray(mu_guess, dtype=float)))
    res = float(np.sqrt(np.mean(sol.fun ** 2)))
    return np.exp(sol.x), res, res < residual_threshold


def extract_bubble_scales(dim, series_or_fields, k=1, table=None):
    """Bubble-scale diagnostics from a center-value time series
    (times, center) or from full snapshots [(t, grid, u), ...]."""
    if isinstance(series_or_fields, TimeSeries):
        times, center, _, _ = series_or_fields.as_arrays()
        mu_in = extract_inner_scale(dim, center)
        return BubbleDiagnostics(times, mu_in)
    times = []
    mu_in = []
    mu_fit = []
    worst = 0.0
    ok = True
    for (t, grid, u) in series_or_fields:
        times.append(t)
        mu_in.append(float(extract_inner_scale(dim, u[0])))
        if table is not None and k > 1:
            guess = [table.mu0(j, t) for j in range(1, k + 1)]
            scales, res, good = fit_tower_scales(dim, grid, u, k, guess)
            mu_fit.append(scales)
            worst = max(worst, res)
            ok = ok and good
    return BubbleDiagnostics(np.asarray(times), np.asarray(mu_in),
                             np.asarray(mu_fit).T if mu_fit else None,
                             worst, ok)
