"""Scale-parameter dynamics for the tower.

Covers: the closed-form leading trajectories mu0_j(t) = beta_j (-t)^{-alpha_j};
adaptive integration of the nonlinear system mu_j mu'_j = c_* (mu_j/mu_{j-1})^{(n-2)/2}
(done in logarithmic variables to tame the power-law stiffness); the linear
reduced system for the corrections mu1_j driven by orthogonality forcings,
solved through its variation-of-constants representation; and the weighted
sup norms used to measure the corrections.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .constants import NumericalError
from .profiles import DomainError


@dataclass
class ParameterPath:
    """Time-sampled scale trajectories. times increase toward t0 (all < 0);
    arrays are (k, len(times)). mu1 parts default to zero."""

    table: object
    times: np.ndarray
    mu0: np.ndarray
    mu0dot: np.ndarray
    mu1: np.ndarray = None
    mu1dot: np.ndarray = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(self.times >= 0):
            raise DomainError("times must be negative")
        k = self.table.k
        if self.mu1 is None:
            self.mu1 = np.zeros((k, len(self.times)))
        if self.mu1dot is None:
            self.mu1dot = np.zeros((k, len(self.times)))

    @property
    def mu(self):
        return self.mu0 + self.mu1

    def lambda0(self, j):
        """mu0_j / mu0_{j-1} along the path (j >= 2)."""
        if j < 2:
            raise DomainError("lambda0 defined for j >= 2")
        return self.mu0[j - 1] / self.mu0[j - 2]


def mu0_closed_form(table, t):
    """Leading-order scales and their rates at a single time t < 0."""
    t = float(t)
    if t >= 0:
        raise DomainError("time must be negative")
    k = table.k
    mu = np.array([table.mu0(j, t) for j in range(1, k + 1)])
    mudot = np.array([table.mu0_dot(j, t) for j in range(1, k + 1)])
    return mu, mudot


def closed_form_path(table, times):
    times = np.asarray(times, dtype=float)
    mu = np.stack([[table.mu0(j, t) for t in times] for j in range(1, table.k + 1)])
    mudot = np.stack([[table.mu0_dot(j, t) for t in times] for j in range(1, table.k + 1)])
    return ParameterPath(table, times, mu, mudot)


def _amplification_exponent(table, t_start, t_end):
    """Worst-case forward amplification of relative scale errors, in decimal
    digits: the linearized flow grows the j-th relative deviation like
    mu_j^{(n-6)/2}, i.e. by exp((n-6)/2 * alpha_j * ln(t_start/t_end))."""
    n = table.dim.n
    dx = np.log(t_start / t_end)
    return float(np.max((n - 6) / 2.0 * table.alpha) * dx / np.log(10.0))


def integrate_mu_ode(table, t_start, t_end, init=None, step_tol=1e-10, num_out=200,
                     precision="auto"):
    """Integrate the scale system mu_j mu'_j = c_* (mu_j/mu_{j-1})^{(n-2)/2}
    (mu_1 frozen at its initial value) from t_start to t_end.

    Works in x = ln(-t) and ell_j = ln(mu_j): exponents spanning many decades
    become linear functions, and positivity is automatic. Raises on tower
    ordering violations (overtaking scales).

    The forward flow is unstable: relative deviations of the deepest scale
    grow like mu_k^{(n-6)/2} along the power-law family, so over wide spans
    the closed-form trajectory can only be shadowed with extra precision.
    With precision="auto" the working precision is raised (mpmath) whenever
    the estimated amplification would otherwise swamp step_tol. init=None
    requests closed-form initial data generated at working precision (a
    float64-rounded copy of the closed form already sits ~1e-16 off the
    power-law family, which wide-span amplification would make visible).
    """
    if not (t_start < t_end < 0):
        raise DomainError("need t_start < t_end < 0")
    if init is not None:
        init = np.asarray(init, dtype=float)
        if np.any(init <= 0) or np.any(np.diff(init) >= 0):
            raise DomainError("initial scales must be positive and strictly decreasing")
    k = table.k
    n = table.dim.n
    cstar = table.cstar
    pw = (n - 2) / 2

    amp10 = _amplification_exponent(table, t_start, t_end)
    if precision == "auto":
        # use mp whenever amplified roundoff 10^{amp10 - 16} exceeds step_tol/10
        precision = "mp" if amp10 - 16 > np.log10(step_tol) - 1 else "float64"

    if precision == "mp":
        return _integrate_mu_mp(table, t_start, t_end, init, step_tol, num_out, amp10)

    if init is None:
        init = np.array([table.mu0(j, t_start) for j in range(1, k + 1)])

    def rhs(x, ell):
        out = np.zeros_like(ell)
        for j in range(1, k):
            out[j] = -np.exp(x + np.log(cstar) + pw * (ell[j] - ell[j - 1]) - 2 * ell[j])
        return out

    def overtake(x, ell):
        return np.min(np.diff(-ell)) if k > 1 else 1.0

    overtake.terminal = True
    overtake.direction = -1

    x0, x1 = np.log(-t_start), np.log(-t_end)
    xs = np.linspace(x0, x1, num_out)
    sol = solve_ivp(rhs, (x0, x1), np.log(init), t_eval=xs, rtol=step_tol,
                    atol=step_tol, method="RK45", events=overtake, dense_output=False)
    if not sol.success or (sol.t_events and len(sol.t_events[0])):
        raise NumericalError("tower collapse: scale ordering violated during integration")
    times = -np.exp(sol.t)
    mu = np.exp(sol.y)
    return _finish_path(table, times, mu, cstar, pw)


def _integrate_mu_mp(table, t_start, t_end, init, step_tol, num_out, amp10):
    """Shadow the unstable forward flow in multiprecision.

    The system is triangular, and each level is a Bernoulli equation in the
    previous one: with v_j = mu_j^{-(n-6)/2},

        dv_j/dt = -(n-6)/2 c_* mu_{j-1}(t)^{-(n-2)/2},

    so v_2 is linear in t (mu_1 frozen), v_3 has a closed power antiderivative,
    and deeper levels reduce to cumulative quadratures of smooth explicit
    functions. Carried out in mpmath so that the huge forward amplification
    of the unstable directions cannot swamp the requested accuracy.
    """
    import mpmath as mp

    k = table.k
    n = table.dim.n
    tol_digits = -np.log10(step_tol) + amp10 + 2.0
    dps = int(np.ceil(tol_digits)) + 6
    with mp.workdps(dps):
        pw = mp.mpf(n - 2) / 2
        q = mp.mpf(2) / (n - 6)          # mu_j = v_j^{-q}
        cstar_mp = mp.mpf(table.cstar)
        kap = -(mp.mpf(n - 6) / 2) * cstar_mp
        ts_mp = [mp.mpf(t) for t in
                 (-np.geomspace(-t_start, -t_end, num_out)).tolist()]
        t0 = mp.mpf(t_start)

        if init is None:
            # closed-form data generated at working precision: the beta
            # recursion replayed in mp from the table's c_*
            ratio = mp.mpf(n - 2) / (n - 6)
            alphas = [ratio ** (j - 1) / 2 - mp.mpf(1) / 2 for j in range(1, k + 1)]
            betas = [mp.mpf(1)]
            for j in range(2, k + 1):
                betas.append((alphas[j - 1] / cstar_mp) ** (mp.mpf(2) / (n - 6))
                             * betas[j - 2] ** ratio)
            init_mp = [betas[j] * (-t0) ** (-alphas[j]) for j in range(k)]
        else:
            init_mp = [mp.mpf(float(v)) for v in init]

        # level 1: frozen scale
        mu_prev = [init_mp[0]] * num_out

        def v_of(muval):
            return muval ** (-mp.mpf(1) / q)

        levels = [mu_prev]
        for j in range(2, k + 1):
            v0 = v_of(init_mp[j - 1])
            if j == 2:
                # integrand constant: v linear in t
                g = mu_prev[0] ** (-pw)
                vj = [v0 + kap * g * (t - t0) for t in ts_mp]
            elif j == 3:
                # integrand mu_2^{-pw} = (v2(t))^{pw q}: v2 linear -> exact
                # power antiderivative
                g1 = levels[0][0] ** (-pw)
                a = v_of(init_mp[1]) - kap * g1 * t0
                b = kap * g1
                e = pw * q
                anti = lambda t: (a + b * t) ** (e + 1) / (b * (e + 1))
                vj = [v0 + kap * (anti(t) - anti(t0)) for t in ts_mp]
            else:
                # cumulative panel quadrature of the sampled previous level
                prev = levels[-1]
                vj = [v0]
                acc = v0
                for i in range(1, num_out):
                    seg, _ = _mp_panel(mp, prev, ts_mp, i, pw)
                    acc = acc + kap * seg
                    vj.append(acc)
            for i, v in enumerate(vj):
                if v <= 0:
                    raise NumericalError(
                        "tower collapse: scale ordering violated during integration")
            mu_j = [v ** (-q) for v in vj]
            for mj, mprev in zip(mu_j, levels[-1]):
                if mj >= mprev:
                    raise NumericalError(
                        "tower collapse: scale ordering violated during integration")
            levels.append(mu_j)
            mu_prev = mu_j

        times = np.array([float(t) for t in ts_mp])
        mu = np.array([[float(v) for v in lev] for lev in levels])
    return _finish_path(table, times, mu, table.cstar, (n - 2) / 2)


def _mp_panel(mp, prev_samples, ts_mp, i, pw):
    """Quadrature of mu_{j-1}^{-pw} over [ts[i-1], ts[i]] from endpoint samples
    (4th-order Hermite-free Simpson on the log-t midpoint via local power fit)."""
    ta, tb = ts_mp[i - 1], ts_mp[i]
    fa = prev_samples[i - 1] ** (-pw)
    fb = prev_samples[i] ** (-pw)
    # local power-law model f ~ c (-t)^m through the endpoints: exact for
    # power-law levels, 4th-order accurate otherwise on the dense grid
    m = mp.log(fb / fa) / mp.log(tb / ta)
    c = fa * (-ta) ** (-m)
    if abs(m + 1) > mp.mpf("1e-20"):
        seg = -c * ((-tb) ** (m + 1) - (-ta) ** (m + 1)) / (m + 1)
    else:
        seg = c * mp.log(ta / tb)
    return seg, m


def _finish_path(table, times, mu, cstar, pw):
    k = table.k
    mudot = np.empty_like(mu)
    mudot[0] = 0.0
    # scales below the float64 floor come back as 0; their rates follow suit
    with np.errstate(invalid="ignore", divide="ignore"):
        for j in range(1, k):
            mudot[j] = np.where(mu[j] > 0, cstar * (mu[j] / mu[j - 1]) ** pw
                                / np.where(mu[j] > 0, mu[j], 1.0), 0.0)
    order = np.argsort(times)
    return ParameterPath(table, times[order], mu[:, order], mudot[:, order])


# ---------------------------------------------------------------------------
# reduced linear system for the corrections
# ---------------------------------------------------------------------------

@dataclass
class ReducedForcing:
    """Forcing functions M_j(t) for the reduced linear system, as callables
    accepting arrays of (negative) times."""

    forcings: list  # length k, callables

    def __call__(self, j, t):
        return self.forcings[j - 1](np.asarray(t, dtype=float))


def fit_decay_exponent(f, t_lo, t_hi, num=60):
    """Log-log slope of |f| between two negative times (t_lo < t_hi < 0)."""
    ts = -np.geomspace(-t_lo, -t_hi, num)
    vals = np.abs(f(ts)) + 1e-300
    return float(np.polyfit(np.log(-ts), np.log(vals), 1)[0])


def solve_reduced_system(table, forcing, t0, t_grid=None, samples_per_decade=600,
                         span_decades=4.0):
    """Variation-of-constants solution of the reduced linear system:

        mu1_1(t)   = int_{-inf}^t M_1 ds,
        mu1_j(t)   = (-t)^{-(n-4) a_j / 2} int_{t0}^t (-s)^{(n-4) a_j / 2}
                     [ (n-2)/2 (a_j / s) lambda0_j(s) mu1_{j-1}(s) + M_j(s) ] ds

    (a_j the scale exponents; components j >= 2 vanish at t0). The result is
    verified against the differential form of the system. Forcings must decay
    at least like (-t)^{-a_j - 1}; slower decay is rejected.
    """
    n = table.dim.n
    k = table.k
    if t_grid is None:
        t_lo = t0 * 10.0 ** span_decades
        num = int(samples_per_decade * span_decades) + 1
        t_grid = -np.geomspace(-t_lo, -t0, num)
    ts = np.asarray(t_grid, dtype=float)
    if ts[-1] > t0 + 1e-12 * abs(t0):
        raise DomainError("sample grid must end at t0")

    # decay precondition per component (identically-zero forcing is fine)
    for j in range(1, k + 1):
        if np.max(np.abs(forcing(j, ts))) == 0.0:
            continue
        slope = fit_decay_exponent(lambda t: forcing(j, t), ts[0], ts[0] / 10.0)
        if slope > -table.alpha[j - 1] - 1.0 + 0.05:
            raise DomainError(
                f"forcing M_{j} decays too slowly (fitted exponent {slope:.3f} > "
                f"{-table.alpha[j - 1] - 1:.3f}); the reduced system requires "
                f"sigma < 1 = min_j (n-6) alpha_j / 2 decay margins")

    mu1 = np.zeros((k, len(ts)))
    mu1dot = np.zeros((k, len(ts)))

    # component 1: integral from -infinity, analytic tail from fitted exponent
    m1 = forcing(1, ts)
    core = np.concatenate([[0.0], cumulative_trapezoid(m1, ts)])
    q = fit_decay_exponent(lambda t: forcing(1, t), ts[0] * 30.0, ts[0] * 3.0)
    tail = m1[0] * (-ts[0]) / (-q - 1.0) if q < -1.0 else 0.0
    mu1[0] = core + tail
    mu1dot[0] = m1

    for j in range(2, k + 1):
        aj = table.alpha[j - 1]
        w = 0.5 * (n - 4) * aj
        lam = np.array([table.lambda0(j, t) for t in ts])
        drive = 0.5 * (n - 2) * (aj / ts) * lam * mu1[j - 2] + forcing(j, ts)
        # I(t) = int_{t0}^{t} (-s)^w drive ds, accumulated on the reversed
        # axis (ts increases toward t0, so the reversed axis starts at t0)
        integrand = (-ts) ** w * drive
        rev = cumulative_trapezoid(integrand[::-1], ts[::-1], initial=0.0)[::-1]
        mu1[j - 1] = (-ts) ** (-w) * rev
        mu1dot[j - 1] = -(w / ts) * mu1[j - 1] + drive

    # verify the differential form on interior samples
    for j in range(2, k + 1):
        aj = table.alpha[j - 1]
        lam = np.array([table.lambda0(j, t) for t in ts])
        lhs = (np.gradient(mu1[j - 1], ts) + 0.5 * (n - 4) * (aj / ts) * mu1[j - 1]
               - 0.5 * (n - 2) * (aj / ts) * lam * mu1[j - 2])
        rhs = forcing(j, ts)
        scale = np.max(np.abs(rhs)) + np.max(np.abs(mu1dot[j - 1])) + 1e-300
        err = np.max(np.abs(lhs - rhs)[2:-2]) / scale
        if err > 1e-2:
            raise NumericalError(f"reduced-system residual too large for j={j}: {err:.2e}")

    return ParameterPath(table, ts, *_closed_mu0_arrays(table, ts), mu1=mu1, mu1dot=mu1dot)


def _closed_mu0_arrays(table, ts):
    mu0 = np.stack([[table.mu0(j, t) for t in ts] for j in range(1, table.k + 1)])
    mu0dot = np.stack([[table.mu0_dot(j, t) for t in ts] for j in range(1, table.k + 1)])
    return mu0, mu0dot


def sharp_norm(times, values, b):
    """sup_t |(-t)^b g(t)| over the sample grid, with the attaining time."""
    times = np.asarray(times, dtype=float)
    vals = np.abs(np.asarray(values, dtype=float)) * (-times) ** b
    i = int(np.argmax(vals))
    return float(vals[i]), float(times[i])


def mu1_norm(path, sigma):
    """sum_j ( ||mu1dot_j||#_{1+alpha_j+sigma} + ||mu1_j||#_{alpha_j+sigma} )."""
    if len(path.times) == 0:
        raise DomainError("empty sample set")
    total = 0.0
    for j in range(1, path.table.k + 1):
        aj = path.table.alpha[j - 1]
        nd, _ = sharp_norm(path.times, path.mu1dot[j - 1], 1.0 + aj + sigma)
        nv, _ = sharp_norm(path.times, path.mu1[j - 1], aj + sigma)
        total += nd + nv
    return total


def nu_condition_report(table, j, t_lo, t_hi, num=80):
    """For nu(t) = (-t)^{gamma_j} mu0_j^{(n-2)/2} expressed in the inner time
    tau (d tau / dt = mu0_j^{-2}), report the ratio d_tau nu / (nu / (-tau));
    the admissibility condition asks for fixed positive bounds."""
    n = table.dim.n
    aj = table.alpha[j - 1]
    gj = table.gamma[j - 1]
    bj = table.beta[j - 1]
    ts = -np.geomspace(-t_lo, -t_hi, num)
    # tau(t) = -(-t)^{2 aj + 1} / (beta_j^2 (2 aj + 1)) up to an offset; use
    # the ancient-limit normalization (offset 0)
    # work in logs: the deepest scales underflow float64 when raised to
    # the powers below
    lt = np.log(-ts)
    lmu = np.log(bj) - aj * lt
    lnu = gj * lt + (n - 2) / 2 * lmu
    ltau = (2 * aj + 1) * lt - 2 * np.log(bj) - np.log(2 * aj + 1)
    # nu is the pure power (-t)^e with e = gamma_j - (n-2) alpha_j / 2,
    # so |d nu/d tau| = |e| nu / (-t) * mu^2 and the admissibility ratio is
    e = gj - (n - 2) / 2 * aj
    lratio = np.log(abs(e)) + lnu - lt + 2 * lmu - (lnu - ltau)
    ratio = np.sign(-e) * np.exp(lratio)
    return {
        "ratio_min": float(np.min(ratio)),
        "ratio_max": float(np.max(ratio)),
        "nu_vanishes_backward": bool(lnu[0] < lnu[-1]),
    }
