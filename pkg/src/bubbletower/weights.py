"""The weight families and weighted sup norms of the outer topology.

Three families of space-time weights (per-bubble core weights w1_j, annulus
bridging weights w2_j, far-field weight w3) and their starred barriers (the
piecewise power-law envelopes dominating the heat-kernel images of the
unstarred family). Norms are suprema of |field| / envelope over sample
clouds; dominance checks verify that on each annulus a reduced subfamily
controls the whole sum with a time-stable constant.
"""
from dataclasses import dataclass

import numpy as np

from .profiles import DomainError

FAMILIES = ("w1", "w1*", "w2", "w2*", "w3", "w3*")


@dataclass(frozen=True)
class WeightSpec:
    family: str
    j: int
    table: object

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown weight family {self.family!r}")
        k = self.table.k
        if self.family.startswith("w1") and not 1 <= self.j <= k:
            raise DomainError(f"w1 index {self.j} outside [1, {k}]")
        if self.family.startswith("w2") and not 1 <= self.j <= k - 1:
            raise DomainError(f"w2 index {self.j} outside [1, {k - 1}]")


def weight_value(spec, x, t):
    """Pointwise value of the weight at radius x (array ok), time t <= t0."""
    x = np.asarray(x, dtype=float)
    tab = spec.table
    n = tab.dim.n
    p = tab.params
    j = spec.j
    sig = p.sigma
    al = p.alpha_w
    mt = -t

    if spec.family == "w1":
        mb1 = tab.mubar0(1, t)
        if j == 1:
            xs = np.where(x > 0, x, 1.0)
            core = mt ** (-1 - sig) / (1.0 + x ** (2 + al)) * (x <= mb1)
            far = (mt ** (-1 - sig) * mb1 ** (n - 2 - al) * xs ** (-1.0 - n)
                   * ((x >= mb1) & (x <= np.sqrt(mt))))
            return core + far
        mu = tab.mu0(j, t)
        lam = tab.lambda0(j, t)
        mb = tab.mubar0(j, t)
        return (mt ** -sig * mu ** (-(n + 2) / 2) * lam ** ((n - 2) / 2)
                / (1.0 + (x / mu) ** (2 + al)) * (x <= mb))

    if spec.family == "w1*":
        gj = tab.gamma[j - 1]
        gjs = tab.gamma_star[j - 1]
        mu = tab.mu0(j, t)
        mb = tab.mubar0(j, t)
        rt = np.sqrt(mt)
        # the far piece's scale prefactor makes the sqrt(-t) junction exactly
        # continuous (the pure-power displays are defined up to constants)
        if j == 1:
            K = 1.0
        else:
            K = (tab.beta[j - 1] ** al
                 * (tab.beta[j - 1] * tab.beta[j - 2]) ** ((n - 2 - al) / 2))
        xs = np.where(x > 0, x, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            r1 = np.full_like(x, mt ** gj)
            r2 = mt ** gj * mu ** al * xs ** (-al)
            r3 = mt ** gj * mu ** al * mb ** (n - 2 - al) * xs ** (2.0 - n)
            r4 = K * xs ** (2 * gjs + 2.0 - n)
        return np.select([x <= mu, x <= mb, x <= rt], [r1, r2, r3], default=r4)

    if spec.family == "w2":
        mu_lo = tab.mu0(j + 1, t)
        mu_hi = tab.mu0(j, t)
        lo = tab.mubar0(j + 1, t)
        hi = 1.0 if j == 1 else tab.mubar0(j, t)
        with np.errstate(divide="ignore", over="ignore"):
            val = (mt ** (-2 * sig) * mu_lo ** (n / 2 - 2) * mu_hi ** -1.0
                   * np.where(x > 0, x, 1.0) ** (2.0 - n))
        return val * ((x >= lo) & (x <= hi))

    if spec.family == "w2*":
        rt = np.sqrt(mt)
        xs = np.where(x > 0, x, 1.0)
        if j == 1:
            mb2 = tab.mubar0(2, t)
            a2 = tab.alpha[1]
            K = tab.beta[1] ** ((n - 4) / 2)
            with np.errstate(divide="ignore", over="ignore"):
                r1 = np.full_like(x, mt ** (-2 * sig))
                r2 = mt ** (-2 * sig) * mb2 ** (n - 4) * xs ** (4.0 - n)
                r3 = mt ** (-2 * sig) * mb2 ** (n - 4) * xs ** (2.0 - n)
                r4 = K * (xs ** 2) ** (-2 * sig - (n / 2 - 2) * a2) * xs ** (2.0 - n)
            return np.select([x <= mb2, x <= 1.0, x <= rt], [r1, r2, r3], default=r4)
        mu_lo = tab.mu0(j + 1, t)
        mu_j = tab.mu0(j, t)
        mu_up = tab.mu0(j - 1, t)
        lo = tab.mubar0(j + 1, t)
        hi = tab.mubar0(j, t)
        a_lo = tab.alpha[j]         # alpha_{j+1}
        a_up = tab.alpha[j - 2]     # alpha_{j-1}
        K = tab.beta[j] ** (n / 2 - 2) * tab.beta[j - 2]
        with np.errstate(divide="ignore", over="ignore"):
            r1 = np.full_like(x, mt ** (-2 * sig) * mu_j ** (1 - n / 2))
            r2 = mt ** (-2 * sig) * mu_lo ** (n / 2 - 2) * mu_j ** -1.0 * xs ** (4.0 - n)
            r3 = mt ** (-2 * sig) * mu_lo ** (n / 2 - 2) * mu_up * xs ** (2.0 - n)
            r4 = (K * (xs ** 2) ** (-2 * sig - (n / 2 - 2) * a_lo - a_up)
                  * xs ** (2.0 - n))
        return np.select([x <= lo, x <= hi, x <= rt], [r1, r2, r3], default=r4)

    if spec.family == "w3":
        mb1 = tab.mubar0(1, t)
        with np.errstate(divide="ignore", over="ignore"):
            val = p.R * mt ** (-1 - sig) * np.where(x > 0, x, 1.0) ** (2.0 - n)
        return val * (x >= mb1)

    # w3*
    mb1 = tab.mubar0(1, t)
    rt = np.sqrt(mt)
    xs = np.where(x > 0, x, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        r1 = np.full_like(x, mt ** (-1 - sig) * mb1 ** (4.0 - n))
        r2 = mt ** (-1 - sig) * xs ** (4.0 - n)
        r3 = mt ** -sig * xs ** (2.0 - n)
    return p.R * np.select([x <= mb1, x <= rt], [r1, r2], default=r3)


def envelope(table, x, t, starred=False):
    """Sum of all weights of the outer topology at (x, t)."""
    star = "*" if starred else ""
    out = np.zeros_like(np.asarray(x, dtype=float))
    for j in range(1, table.k + 1):
        out = out + weight_value(WeightSpec("w1" + star, j, table), x, t)
    for j in range(1, table.k):
        out = out + weight_value(WeightSpec("w2" + star, j, table), x, t)
    out = out + weight_value(WeightSpec("w3" + star, 0, table), x, t)
    return out


@dataclass
class NormReading:
    kind: str
    value: float
    argmax_x: float
    argmax_t: float
    infinite: bool = False


def weighted_norm(table, samples, kind="out"):
    """Weighted sup norm of a sampled space-time field.

    samples: list of (t, x_array, value_array). kind: "out" or "out*".
    Returns the grid supremum of |field| / envelope with the maximizing
    sample; if the field is nonzero where the envelope vanishes, the reading
    is flagged infinite rather than raising.
    """
    if kind not in ("out", "out*"):
        raise DomainError(f"unknown norm kind {kind!r}")
    best = (-np.inf, np.nan, np.nan)
    infinite = False
    for t, x, vals in samples:
        env = envelope(table, x, t, starred=kind.endswith("*"))
        vals = np.abs(np.asarray(vals, dtype=float))
        bad = (env == 0) & (vals > 0)
        if np.any(bad):
            infinite = True
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(env > 0, vals / np.where(env > 0, env, 1.0), 0.0)
        i = int(np.argmax(ratio))
        if ratio[i] > best[0]:
            best = (float(ratio[i]), float(x[i]), float(t))
    return NormReading(kind, best[0], best[1], best[2], infinite)


def inner_norm_h(table, j, samples, a, R):
    """Inner forcing norm: sup nu(t)^{-1} <y>^{2+a} |h| over B_{8R} samples.
    samples: list of (t, y_array, value_array); nu(t) = (-t)^{gamma_j} mu0_j^{(n-2)/2}."""
    n = table.dim.n
    best = -np.inf
    for t, y, vals in samples:
        nu = (-t) ** table.gamma[j - 1] * table.mu0(j, t) ** ((n - 2) / 2)
        w = (1.0 + np.asarray(y) ** 2) ** ((2 + a) / 2)
        best = max(best, float(np.max(np.abs(vals) * w / nu)))
    return best


def inner_norm_phi(table, j, samples, a, R):
    """Inner solution norm: sup R^{-(n+1-a)} nu(t)^{-1} <y>^{n+1} |phi|."""
    n = table.dim.n
    best = -np.inf
    for t, y, vals in samples:
        nu = (-t) ** table.gamma[j - 1] * table.mu0(j, t) ** ((n - 2) / 2)
        w = (1.0 + np.asarray(y) ** 2) ** ((n + 1) / 2)
        best = max(best, float(np.max(np.abs(vals) * w / nu)) * R ** (-(n + 1 - a)))
    return best


# ---------------------------------------------------------------------------
# dominance of reduced subfamilies (starred barriers)
# ---------------------------------------------------------------------------

REGIONS_W1 = ("core", "annulus", "outer", "far")


def barrier_dominance_check(table, region, i, times=(-1e3, -1e4, -1e5),
                            pts_per_region=80, rng=None):
    """Ratio of the full starred sum to the reduced envelope on one region.

    region "w1": full sum of w1*_j + w3* against
        w1*_k                  on x <= mubar_k          (region index i = k)
        w1*_i + w1*_{i+1}      on mubar_{i+1} <= x <= mubar_i
        w1*_1 + w3*            on mubar_1 <= x <= sqrt(-t)
        w3*                    on x >= sqrt(-t)
    region "w2": full sum of w2*_j against the matching reduced pairs.

    Returns per-time max ratios; a pass is a finite, t-stable constant.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    k = table.k
    report = {"region": region, "i": i, "ratios": []}
    for t in times:
        lo, hi = _region_bounds(table, region, i, t)
        x = np.geomspace(max(lo, 1e-300), hi, pts_per_region)
        x = x * np.exp(rng.uniform(-0.01, 0.01, size=x.shape))
        x = np.clip(x, lo, hi)
        if region == "w1":
            full = sum(weight_value(WeightSpec("w1*", j, table), x, t)
                       for j in range(1, k + 1))
            full = full + weight_value(WeightSpec("w3*", 0, table), x, t)
            red = _reduced_w1(table, i, x, t)
        elif region == "w2":
            full = sum(weight_value(WeightSpec("w2*", j, table), x, t)
                       for j in range(1, k))
            red = _reduced_w2(table, i, x, t)
        else:
            raise DomainError(f"unknown dominance region {region!r}")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(red > 0, full / np.where(red > 0, red, 1.0), np.inf)
        report["ratios"].append(float(np.max(ratio)))
    rr = np.asarray(report["ratios"])
    # dominance may improve (ratio decay) toward ancient times; instability
    # means growth past a fixed multiple of the earliest reading
    report["stable"] = bool(np.isfinite(rr).all() and np.max(rr) <= 4.0 * rr[0])
    return report


def _region_bounds(table, region, i, t):
    k = table.k
    if region == "w1":
        if i == k:
            return table.mu0(k, t) * 1e-3, table.mubar0(k, t)
        if 1 <= i <= k - 1:
            return table.mubar0(i + 1, t), table.mubar0(i, t)
        if i == 0:          # mubar_1 .. sqrt(-t)
            return table.mubar0(1, t), np.sqrt(-t)
        return np.sqrt(-t), 10 * np.sqrt(-t)   # i == -1: far region
    # w2 regions
    if i == k:
        return table.mu0(k, t) * 1e-3, table.mubar0(k, t)
    if 2 <= i <= k - 1:
        return table.mubar0(i + 1, t), table.mubar0(i, t)
    if i == 1:
        return table.mubar0(2, t), table.mubar0(1, t)
    return table.mubar0(1, t), 10 * np.sqrt(-t)


def _reduced_w1(table, i, x, t):
    k = table.k
    if i == k:
        return weight_value(WeightSpec("w1*", k, table), x, t)
    if 1 <= i <= k - 1:
        return (weight_value(WeightSpec("w1*", i, table), x, t)
                + weight_value(WeightSpec("w1*", i + 1, table), x, t))
    if i == 0:
        return (weight_value(WeightSpec("w1*", 1, table), x, t)
                + weight_value(WeightSpec("w3*", 0, table), x, t))
    return weight_value(WeightSpec("w3*", 0, table), x, t)


def _reduced_w2(table, i, x, t):
    k = table.k
    if i == k:
        return weight_value(WeightSpec("w2*", k - 1, table), x, t)
    if 2 <= i <= k - 1:
        return (weight_value(WeightSpec("w2*", i, table), x, t)
                + weight_value(WeightSpec("w2*", i - 1, table), x, t))
    if i == 1:
        return weight_value(WeightSpec("w2*", 1, table), x, t)
    return weight_value(WeightSpec("w3*", 0, table), x, t)


def piece_bounds(spec, t):
    """Radial intervals of the weight's pieces at time t (may start at 0 or
    end at +inf); used by the scaling audit to classify samples."""
    tab = spec.table
    j = spec.j
    rt = np.sqrt(-t)
    if spec.family == "w1":
        if j == 1:
            return [(0.0, tab.mubar0(1, t)), (tab.mubar0(1, t), rt)]
        return [(0.0, tab.mubar0(j, t))]
    if spec.family == "w1*":
        mu, mb = tab.mu0(j, t), tab.mubar0(j, t)
        return [(0.0, mu), (mu, mb), (mb, rt), (rt, np.inf)]
    if spec.family == "w2":
        hi = 1.0 if j == 1 else tab.mubar0(j, t)
        return [(tab.mubar0(j + 1, t), hi)]
    if spec.family == "w2*":
        mid = 1.0 if j == 1 else tab.mubar0(j, t)
        return [(0.0, tab.mubar0(j + 1, t)), (tab.mubar0(j + 1, t), mid),
                (mid, rt), (rt, np.inf)]
    if spec.family == "w3":
        return [(tab.mubar0(1, t), np.inf)]
    return [(0.0, tab.mubar0(1, t)), (tab.mubar0(1, t), rt), (rt, np.inf)]


def scaling_exponent_audit(spec, t, lam=3.0, pts=24):
    """Parabolic rescaling audit: under (x, t) -> (lam x, lam^2 t) each
    piecewise power maps to a pure power, so the measured log-ratio exponent
    must be constant on every piece. Returns the max exponent spread over
    pieces (exact up to roundoff for a correct piecewise-power table)."""
    worst = 0.0
    t2 = lam * lam * t
    b1 = piece_bounds(spec, t)
    b2 = piece_bounds(spec, t2)
    for (lo1, hi1), (lo2, hi2) in zip(b1, b2):
        lo = max(lo1, lo2 / lam) * 1.02 + 1e-300
        hi = min(hi1 if np.isfinite(hi1) else 10 * np.sqrt(-t),
                 (hi2 if np.isfinite(hi2) else 10 * lam * np.sqrt(-t)) / lam) * 0.98
        if hi <= lo:
            continue
        x = np.geomspace(lo, hi, pts)
        v1 = weight_value(spec, x, t)
        v2 = weight_value(spec, lam * x, t2)
        good = (v1 > 0) & (v2 > 0)
        if not np.any(good):
            continue
        expo = np.log(v2[good] / v1[good]) / np.log(lam)
        worst = max(worst, float(np.max(expo) - np.min(expo)))
    return worst
