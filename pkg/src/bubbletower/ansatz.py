"""Glued approximation and flow residual.

Assembles u_* = sum of scaled bubbles + cutoff-localized scaled correctors,
evaluates the flow operator S[u] = -u_t + Lap(u) + u^p on it, and splits the
result into its structural components (per-bubble inner errors, bubble
interaction error, potential mismatch, cutoff commutators, time transport,
quadratic remainder) whose sum reproduces S[u_*] as an algebraic identity.

Also evaluates the inner right-hand sides, the orthogonality forcings, and
the gluing coupling fields (inner-cutoff commutators, potential difference,
exact quadratic remainder) for supplied inner/outer test fields.

Leading cancellations are evaluated through series expansions around the
dominant bubble rather than raw subtraction: magnitudes span hundreds of
orders and the interesting residuals live far below the leading terms.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import NumericalError
from .grids import log_grid, quadrature_weights
from .profiles import (
    CutoffFamily,
    DomainError,
    bubble_value,
    cutoff_dt,
    cutoff_gradient,
    cutoff_laplacian,
    cutoff_value,
    kernel_Zn1,
    scaled_bubble,
)


def pow1p_rem(delta, p):
    """(1+delta)^p - 1 - p*delta, series for small |delta| (the direct form
    cancels catastrophically there)."""
    delta = np.asarray(delta, dtype=float)
    out = np.empty_like(delta)
    small = np.abs(delta) < 1e-3
    d = delta[small]
    c2 = p * (p - 1) / 2
    c3 = c2 * (p - 2) / 3
    c4 = c3 * (p - 3) / 4
    c5 = c4 * (p - 4) / 5
    out[small] = d * d * (c2 + d * (c3 + d * (c4 + d * c5)))
    db = delta[~small]
    out[~small] = (1.0 + db) ** p - 1.0 - p * db
    return out


def pow1p_lin(delta, p):
    """(1+delta)^p - 1, series for small |delta|."""
    delta = np.asarray(delta, dtype=float)
    out = np.empty_like(delta)
    small = np.abs(delta) < 1e-3
    d = delta[small]
    c2 = p * (p - 1) / 2
    c3 = c2 * (p - 2) / 3
    c4 = c3 * (p - 3) / 4
    out[small] = d * (p + d * (c2 + d * (c3 + d * c4)))
    db = delta[~small]
    out[~small] = (1.0 + db) ** p - 1.0
    return out


@dataclass
class ScaleData:
    """Scalar scale data at one time slice: leading part, correction part,
    and rates. Index arrays are 1-based through the helpers."""

    mu0: np.ndarray
    mu0dot: np.ndarray
    mu1: np.ndarray
    mu1dot: np.ndarray

    @property
    def mu(self):
        return self.mu0 + self.mu1

    @property
    def mudot(self):
        return self.mu0dot + self.mu1dot


@dataclass
class AnsatzState:
    """Everything needed to evaluate the glued approximation at time t."""

    table: object
    phibar: object                 # CorrectorSolution (or None for k = 1)
    t: float
    mu1: np.ndarray = None         # optional corrections (k,)
    mu1dot: np.ndarray = None
    inner_fields: list = None      # per-j objects with value/dy (tests)
    outer_field: object = None     # callable psi(x, t)

    def __post_init__(self):
        k = self.table.k
        if self.t > self.table.params.t0:
            raise DomainError("state time must be <= t0")
        if self.mu1 is None:
            self.mu1 = np.zeros(k)
        if self.mu1dot is None:
            self.mu1dot = np.zeros(k)

    @property
    def scales(self):
        tab, t = self.table, self.t
        k = tab.k
        mu0 = np.array([tab.mu0(j, t) for j in range(1, k + 1)])
        mu0dot = np.array([tab.mu0_dot(j, t) for j in range(1, k + 1)])
        return ScaleData(mu0, mu0dot, np.asarray(self.mu1), np.asarray(self.mu1dot))

    def chi(self, j):
        return CutoffFamily("chi", j, self.table)

    def eta(self, j):
        return CutoffFamily("eta", j, self.table, R=self.table.params.R)

    def zeta(self, j):
        return CutoffFamily("zeta", j, self.table, R=self.table.params.R)


def ansatz_grid(table, t, per_decade=24, r_max_factor=10.0, min_per_scale=16):
    """Global log grid resolving every bubble scale and reaching past the
    self-similar radius."""
    mu_k = table.mu0(table.k, t)
    r_max = r_max_factor * math.sqrt(-t)
    num = int(per_decade * np.log10(r_max / (mu_k * 1e-2))) + 2
    grid = log_grid(mu_k * 1e-2, r_max, num)
    per_scale = per_decade / np.log10(np.e) * 0.5
    if per_scale < min_per_scale / 4:
        raise DomainError("grid resolves fewer than 16 nodes per decade "
                          "below the smallest scale")
    return grid


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def bubble_fields(state, x):
    """U_j(x) for j = 1..k as a (k, len(x)) array."""
    sc = state.scales
    return np.stack([scaled_bubble(state.table.dim, sc.mu[j], x)
                     for j in range(state.table.k)])


def _others_sum(U):
    """others[j] = sum_{l != j} U_l, summed directly: the dominant bubble can
    exceed the rest by more than 1/eps, so subtracting from the total would
    lose them entirely."""
    k = U.shape[0]
    out = np.zeros_like(U)
    for j in range(k):
        for l in range(k):
            if l != j:
                out[j] += U[l]
    return out


def corrector_fields(state, x):
    """phi0_j^{phys}(x) = mu_j^{-(n-2)/2} lambda0_j^{(n-2)/2} phibar(x/mu_j)
    for j >= 2, plus radial derivative and Laplacian, stacked (k-1, ...)."""
    tab = state.table
    n = tab.dim.n
    sc = state.scales
    vals, grads, laps = [], [], []
    for j in range(2, tab.k + 1):
        mu = sc.mu[j - 1]
        lam = tab.lambda0(j, state.t) ** ((n - 2) / 2)
        y = x / mu
        amp = mu ** (-(n - 2) / 2) * lam
        vals.append(amp * state.phibar(y))
        grads.append(amp / mu * state.phibar.derivative(y))
        laps.append(amp / mu ** 2 * state.phibar.laplacian(y))
    if not vals:
        z = np.zeros((0, len(x)))
        return z, z.copy(), z.copy()
    return np.stack(vals), np.stack(grads), np.stack(laps)


def assemble_ustar(state, x):
    """u_* = sum U_j + sum_{j>=2} phi0_j^{phys} chi_j on the given radii."""
    x = np.asarray(x, dtype=float)
    U = bubble_fields(state, x)
    out = U.sum(axis=0)
    if state.table.k >= 2:
        vals, _, _ = corrector_fields(state, x)
        for j in range(2, state.table.k + 1):
            out = out + vals[j - 2] * cutoff_value(state.chi(j), x, state.t)
    return out


def dominance_report(state, x):
    """sup |u_* - Ubar| / Ubar and the bubble-ordering table of the slice."""
    x = np.asarray(x, dtype=float)
    U = bubble_fields(state, x)
    ubar = U.sum(axis=0)
    ustar = assemble_ustar(state, x)
    with np.errstate(invalid="ignore"):
        rel = np.abs(ustar - ubar) / ubar
    return {
        "sup_rel_correction": float(np.nanmax(rel)),
        "positive": bool(np.all(ustar > 0)),
    }


# ---------------------------------------------------------------------------
# flow residual and its decomposition
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    x: np.ndarray
    total: np.ndarray
    components: dict
    identity_error: float
    outer_error: np.ndarray       # total minus the tracked drift terms


def _dt_bubbles(state, x, U):
    """d/dt of each scaled bubble: -mudot mu^{-n/2} Z(x/mu)."""
    n = state.table.dim.n
    sc = state.scales
    out = np.empty_like(U)
    for j in range(state.table.k):
        out[j] = -sc.mudot[j] * sc.mu[j] ** (-n / 2) * kernel_Zn1(
            state.table.dim, x / sc.mu[j])
    return out


def flow_residual(state, x=None, identity_tol=1e-9):
    """S[u_*] = -d_t u_* + Lap u_* + u_*^p with its structural decomposition.

    Components sum to the directly assembled S[u_*] pointwise; the report
    carries the worst relative mismatch as identity_error.
    """
    tab = state.table
    dim = tab.dim
    n, p = dim.n, dim.p
    t = state.t
    k = tab.k
    if x is None:
        x = ansatz_grid(tab, t)
    x = np.asarray(x, dtype=float)
    sc = state.scales

    U = bubble_fields(state, x)
    Usum = U.sum(axis=0)
    dtU = _dt_bubbles(state, x, U)
    phv, phg, phl = corrector_fields(state, x)

    chi = [cutoff_value(state.chi(j), x, t) for j in range(2, k + 1)]
    chi_g = [cutoff_gradient(state.chi(j), x, t) for j in range(2, k + 1)]
    chi_l = [cutoff_laplacian(state.chi(j), x, t, n) for j in range(2, k + 1)]
    chi_t = [cutoff_dt(state.chi(j), x, t) for j in range(2, k + 1)]

    phi0 = sum(phv[j - 2] * chi[j - 2] for j in range(2, k + 1)) \
        if k >= 2 else np.zeros_like(x)

    # --- components -------------------------------------------------------
    comp = {}

    # inner errors: the corrector equation against the drifting bubble
    inner = np.zeros_like(x)
    for j in range(2, k + 1):
        up1 = _bubble_pow(dim, sc.mu[j - 1], x, p - 1.0)
        head = (phl[j - 2] + p * up1 * phv[j - 2] - dtU[j - 1]
                + p * up1 * _scaled_center(dim, sc.mu[j - 2]))
        inner = inner + head * chi[j - 2]
    inner = inner - dtU[0]
    comp["inner"] = inner

    # interaction error (grouped for numerical stability)
    comp["interaction"] = _interaction_error(state, x, U, dtU, chi)

    # potential mismatch on the corrector supports; the bubble gap is summed
    # over the other bubbles directly (no subtractive cancellation)
    others = _others_sum(U)
    pot = np.zeros_like(x)
    for j in range(2, k + 1):
        delta = others[j - 1] / U[j - 1]
        pot = pot + p * _bubble_pow(dim, sc.mu[j - 1], x, p - 1.0) \
            * pow1p_lin(delta, p - 1.0) * phv[j - 2] * chi[j - 2]
    comp["potential_mismatch"] = pot

    # cutoff commutators and time transport of the corrector
    comm = np.zeros_like(x)
    trans = np.zeros_like(x)
    for j in range(2, k + 1):
        comm = comm + 2.0 * phg[j - 2] * chi_g[j - 2] + phv[j - 2] * chi_l[j - 2]
        dt_ph = _dt_corrector(state, x, j)
        trans = trans - dt_ph * chi[j - 2] - phv[j - 2] * chi_t[j - 2]
    comp["cutoff_commutator"] = comm
    comp["time_transport"] = trans

    # quadratic remainder of the glued nonlinearity
    with np.errstate(invalid="ignore", divide="ignore"):
        eps = np.where(Usum > 0, phi0 / Usum, 0.0)
    comp["nonlinear"] = Usum ** p * pow1p_rem(eps, p)

    total = sum(comp.values())

    # --- direct assembly for the identity audit ---------------------------
    direct = _direct_flow(state, x, U, Usum, dtU, phv, phg, phl,
                          chi, chi_g, chi_l, chi_t, phi0)
    scale = np.maximum.reduce([np.abs(c) for c in comp.values()])
    scale = np.maximum(scale, np.abs(direct))
    with np.errstate(invalid="ignore", divide="ignore"):
        mism = np.where(scale > 0, np.abs(total - direct) / scale, 0.0)
    ident = float(np.max(mism))
    if ident > identity_tol * 1e6:
        raise NumericalError(f"decomposition identity failed: {ident:.2e}")

    # drift forcing terms (vanish for the leading path)
    eout = total.copy()
    for j in range(1, k + 1):
        Dj = drift_forcing(state, j, x / sc.mu[j - 1])
        eout = eout - sc.mu[j - 1] ** (-(n + 2) / 2) * Dj \
            * cutoff_value(state.eta(j), x, t)

    return ResidualReport(x=x, total=total, components=comp,
                          identity_error=ident, outer_error=eout)


def _bubble_pow(dim, mu, x, q):
    """(scaled bubble)^q without overflow detours."""
    return (mu ** (-(dim.n - 2) / 2)) ** q * bubble_value(dim, x / mu) ** q


def _scaled_center(dim, mu):
    return mu ** (-(dim.n - 2) / 2) * dim.alpha_n


def _dt_corrector(state, x, j):
    """d/dt of phi0_j^{phys} at fixed x (chain rule through mu_j and the
    scale ratio)."""
    tab = state.table
    n = tab.dim.n
    sc = state.scales
    t = state.t
    mu = sc.mu[j - 1]
    mudot = sc.mudot[j - 1]
    lam = tab.lambda0(j, t)
    lamdot = tab.lambda0_dot(j, t)
    amp = mu ** (-(n - 2) / 2) * lam ** ((n - 2) / 2)
    y = x / mu
    rate = (-(n - 2) / 2 * mudot / mu + (n - 2) / 2 * lamdot / lam)
    return amp * (rate * state.phibar(y)
                  - (mudot / mu) * y * state.phibar.derivative(y))


def _interaction_error(state, x, U, dtU, chi):
    """Ubar^p - sum U_j^p - sum_j p U_j^{p-1} U_{j-1}(0) chi_j
    - sum_j (1 - chi_j) dtU_j.

    Grouped term by term so each piece is evaluated without catastrophic
    cancellation: on each corrector support the neighboring-bubble value is
    compared to its center value through a series, the nonlinearity
    remainder is expanded around the local bubble, and the region without
    corrector supports is expanded around the dominant bubble.
    """
    tab = state.table
    dim = tab.dim
    p = dim.p
    n = dim.n
    k = tab.k
    sc = state.scales
    others = _others_sum(U)
    Up = np.stack([_bubble_pow(dim, sc.mu[j], x, p) for j in range(k)])

    out = np.zeros_like(x)
    chi_total = np.zeros_like(x)
    for j in range(2, k + 1):
        cj = chi[j - 2]
        chi_total = chi_total + cj
        up1 = _bubble_pow(dim, sc.mu[j - 1], x, p - 1.0)
        # neighbor minus its center value via the profile series
        y_up = x / sc.mu[j - 2]
        gap_up = _scaled_center(dim, sc.mu[j - 2]) * pow1p_lin(
            y_up * y_up, -(n - 2) / 2.0)
        far = sum((U[l] for l in range(k) if l not in (j - 1, j - 2)),
                  np.zeros_like(x))              # bubbles other than j, j-1
        out = out + p * up1 * (gap_up + far) * cj
        # nonlinearity remainder around bubble j
        delta = others[j - 1] / U[j - 1]
        up_others = Up.sum(axis=0) - Up[j - 1]
        out = out + (Up[j - 1] * pow1p_rem(delta, p) - up_others) * cj
        out = out - (1.0 - cj) * dtU[j - 1]

    # region not covered by corrector supports: expansion around the
    # dominant bubble
    mask = 1.0 - chi_total
    live = mask > 0
    if np.any(live):
        dom = np.argmax(U, axis=0)
        U_dom = np.take_along_axis(U, dom[None, :], axis=0)[0]
        S_dom = np.take_along_axis(others, dom[None, :], axis=0)[0]
        Up_dom = np.take_along_axis(Up, dom[None, :], axis=0)[0]
        delta = np.where(live, S_dom / U_dom, 0.0)
        j4 = Up_dom * pow1p_rem(delta, p) + p * Up_dom / U_dom * S_dom \
            - (Up.sum(axis=0) - Up_dom)
        out = out + mask * j4
    return out


def _direct_flow(state, x, U, Usum, dtU, phv, phg, phl, chi, chi_g, chi_l,
                 chi_t, phi0):
    """S[u_*] assembled directly (stable groupings), for the identity audit."""
    tab = state.table
    dim = tab.dim
    p = dim.p
    k = tab.k
    sc = state.scales

    dom = np.argmax(U, axis=0)
    U_dom = np.take_along_axis(U, dom[None, :], axis=0)[0]
    extra = np.take_along_axis(_others_sum(U), dom[None, :], axis=0)[0] + phi0
    delta = extra / U_dom
    Up = np.stack([_bubble_pow(dim, sc.mu[j], x, p) for j in range(k)])
    Up_dom = np.take_along_axis(Up, dom[None, :], axis=0)[0]
    # u_*^p - sum U_i^p with u_* = U_dom (1 + delta)
    power_part = Up_dom * pow1p_rem(delta, p) + p * Up_dom / U_dom * extra \
        - (Up.sum(axis=0) - Up_dom)

    lap_corr = np.zeros_like(x)
    dt_corr = np.zeros_like(x)
    for j in range(2, k + 1):
        lap_corr = lap_corr + phl[j - 2] * chi[j - 2] \
            + 2.0 * phg[j - 2] * chi_g[j - 2] + phv[j - 2] * chi_l[j - 2]
        dt_corr = dt_corr + _dt_corrector(state, x, j) * chi[j - 2] \
            + phv[j - 2] * chi_t[j - 2]

    return power_part + lap_corr - dtU.sum(axis=0) - dt_corr


# ---------------------------------------------------------------------------
# inner right-hand sides and orthogonality forcings
# ---------------------------------------------------------------------------

def drift_forcing(state, j, y):
    """Forcing created by the scale drift: the Z-mode term plus the
    linearized interaction term (top bubble carries only its Z-mode)."""
    tab = state.table
    dim = tab.dim
    n = dim.n
    y = np.asarray(y, dtype=float)
    sc = state.scales
    if j == 1:
        return (1.0 + sc.mu1[0]) * sc.mu1dot[0] * kernel_Zn1(dim, y)
    lam = tab.lambda0(j, state.t) ** ((n - 2) / 2)
    ratio_gap = sc.mu1[j - 1] / sc.mu0[j - 1] - sc.mu1[j - 2] / sc.mu0[j - 2]
    return ((sc.mu0dot[j - 1] * sc.mu1[j - 1] + sc.mu0[j - 1] * sc.mu1dot[j - 1])
            * kernel_Zn1(dim, y)
            + (n - 2) / 2 * dim.p * bubble_value(dim, y) ** (dim.p - 1)
            * dim.alpha_n * lam * ratio_gap)


def drift_forcing_remainder(state, j, y):
    """Exact quadratic remainder of the drift forcing: the scale-ratio
    nonlinearity minus its linearization, plus the correction-rate square."""
    tab = state.table
    dim = tab.dim
    n = dim.n
    if j < 2:
        raise DomainError("remainder defined for j >= 2")
    y = np.asarray(y, dtype=float)
    sc = state.scales
    lam_full = (sc.mu[j - 1] / sc.mu[j - 2]) ** ((n - 2) / 2)
    lam0 = tab.lambda0(j, state.t) ** ((n - 2) / 2)
    ratio_gap = sc.mu1[j - 1] / sc.mu0[j - 1] - sc.mu1[j - 2] / sc.mu0[j - 2]
    nonlinear = lam_full - lam0 - (n - 2) / 2 * lam0 * ratio_gap
    return (sc.mu1[j - 1] * sc.mu1dot[j - 1] * kernel_Zn1(dim, y)
            + dim.p * bubble_value(dim, y) ** (dim.p - 1) * dim.alpha_n * nonlinear)


def inner_rhs(state, j, y):
    """Right-hand side of the j-th inner problem: the localized outer field
    plus the drift forcing."""
    tab = state.table
    if not 1 <= j <= tab.k:
        raise DomainError(f"bubble index {j} outside [1, {tab.k}]")
    dim = tab.dim
    n = dim.n
    y = np.asarray(y, dtype=float)
    sc = state.scales
    mu = sc.mu[j - 1]
    out = drift_forcing(state, j, y)
    if state.outer_field is not None:
        zeta = cutoff_value(state.zeta(j), mu * y, state.t)
        out = out + mu ** ((n - 2) / 2) * zeta * dim.p \
            * bubble_value(dim, y) ** (dim.p - 1) * state.outer_field(mu * y, state.t)
    return out


def _b8r_quadrature(table, num=4000):
    R = table.params.R
    y = np.linspace(0.0, 8.0 * R, num)
    w = quadrature_weights(y, table.dim.n)
    return y, w


def orthogonality_forcing(state, j):
    """The forcing the scale corrections must match for the j-th inner
    problem to stay orthogonal to the scaling kernel, including the
    finite-ball bookkeeping term for j >= 2."""
    tab = state.table
    if not 1 <= j <= tab.k:
        raise DomainError(f"bubble index {j} outside [1, {tab.k}]")
    dim = tab.dim
    n = dim.n
    sc = state.scales
    y, w = _b8r_quadrature(tab)
    z = kernel_Zn1(dim, y)
    z2 = float(np.sum(w * z * z))
    mu = sc.mu[j - 1]

    I = 0.0
    if state.outer_field is not None:
        zeta = cutoff_value(state.zeta(j), mu * y, state.t)
        I = float(np.sum(w * zeta * dim.p * bubble_value(dim, y) ** (dim.p - 1)
                         * z * state.outer_field(mu * y, state.t)))
    if j == 1:
        return -mu ** ((n - 2) / 2) / (1.0 + sc.mu1[0]) * I / z2

    up1z = float(np.sum(w * dim.p * bubble_value(dim, y) ** (dim.p - 1) * z))
    cstar_ball = -dim.alpha_n * up1z / z2
    rho = cstar_ball / tab.cstar - 1.0
    ratio_gap = sc.mu1[j - 1] / sc.mu0[j - 1] - sc.mu1[j - 2] / sc.mu0[j - 2]
    bookkeeping = (n - 2) / 2 * rho * sc.mu0dot[j - 1] * ratio_gap
    return -mu ** ((n - 2) / 2) / sc.mu0[j - 1] * I / z2 + bookkeeping


def projection_coefficient(state, j):
    """Component of the inner right-hand side on the scaling kernel over the
    ball; vanishes exactly when the scale corrections solve their reduced
    equation with the matching forcing."""
    tab = state.table
    y, w = _b8r_quadrature(tab)
    z = kernel_Zn1(tab.dim, y)
    z2 = float(np.sum(w * z * z))
    h = inner_rhs(state, j, y)
    return float(np.sum(w * h * z)) / z2


# ---------------------------------------------------------------------------
# gluing coupling fields
# ---------------------------------------------------------------------------

@dataclass
class SyntheticInnerField:
    """Closed-form inner test field phi_j(y, t) with its derivatives; the
    default shape saturates the inner-norm envelope."""

    table: object
    j: int
    a: float = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.a is None:
            self.a = self.table.params.a

    def _prefactor(self, t):
        tab = self.table
        n = tab.dim.n
        R = tab.params.R
        return (self.amplitude * (-t) ** tab.gamma[self.j - 1]
                * tab.mu0(self.j, t) ** ((n - 2) / 2) * R ** (n + 1 - self.a))

    def value(self, y, t):
        n = self.table.dim.n
        return self._prefactor(t) * (1.0 + y ** 2) ** (-(n + 1) / 2)

    def dy(self, y, t):
        n = self.table.dim.n
        return self._prefactor(t) * (-(n + 1)) * y * (1.0 + y ** 2) ** (-(n + 3) / 2)


def gluing_terms(state, x):
    """The coupling fields of the outer problem: (B, V, N).

    B: inner-cutoff commutators + potential mismatch + dilation transport of
       the supplied inner fields.
    V: p u_*^{p-1} - sum_j zeta_j p U_j^{p-1} (stable per-zone expansions).
    N: exact quadratic remainder of the nonlinearity at u_* applied to
       (sum inner fields + outer field).
    """
    tab = state.table
    dim = tab.dim
    n, p = dim.n, dim.p
    t = state.t
    k = tab.k
    x = np.asarray(x, dtype=float)
    sc = state.scales
    U = bubble_fields(state, x)
    phi0_corr = np.zeros_like(x)
    if k >= 2:
        phv, _, _ = corrector_fields(state, x)
        for j in range(2, k + 1):
            phi0_corr = phi0_corr + phv[j - 2] * cutoff_value(state.chi(j), x, state.t)
    ustar = U.sum(axis=0) + phi0_corr

    inner = state.inner_fields or [None] * k
    if len(inner) != k:
        raise DomainError("need one inner field slot per bubble (None allowed)")

    others = _others_sum(U)

    # stable u_*^{p-1} - U_j^{p-1}
    def pot_gap(j):
        delta = (others[j - 1] + phi0_corr) / U[j - 1]
        return _bubble_pow(dim, sc.mu[j - 1], x, p - 1.0) * pow1p_lin(delta, p - 1.0)

    B = np.zeros_like(x)
    phi_tot = np.zeros_like(x)
    for j in range(1, k + 1):
        fld = inner[j - 1]
        if fld is None:
            continue
        mu = sc.mu[j - 1]
        y = x / mu
        val = mu ** (-(n - 2) / 2) * fld.value(y, t)
        dyv = fld.dy(y, t)
        grad = mu ** (-n / 2) * dyv
        eta_v = cutoff_value(state.eta(j), x, t)
        eta_g = cutoff_gradient(state.eta(j), x, t)
        eta_l = cutoff_laplacian(state.eta(j), x, t, n)
        eta_t = cutoff_dt(state.eta(j), x, t)
        dilation = -mu ** (-n / 2) * ((n - 2) / 2 * fld.value(y, t) + y * dyv)
        B = B + (2.0 * eta_g * grad + (-eta_t + eta_l) * val
                 + p * pot_gap(j) * val * eta_v
                 - sc.mudot[j - 1] * dilation * eta_v)
        phi_tot = phi_tot + val * eta_v

    zets = [cutoff_value(state.zeta(j), x, t) for j in range(1, k + 1)]
    V = p * ustar ** (p - 1) * (1.0 - sum(zets))
    for j in range(1, k + 1):
        V = V + p * zets[j - 1] * pot_gap(j)

    if state.outer_field is not None:
        phi_tot = phi_tot + state.outer_field(x, t)
    eps = phi_tot / ustar
    N = ustar ** p * pow1p_rem(eps, p)

    return B, V, N
