"""Catalog of Duhamel barrier checks.

Each entry pairs a radial piecewise power-law source (or a sum of pieces)
with a claimed barrier envelope and a sampling region; a check evaluates the
operator at a cloud of (x, t) samples and reports the ratio to the barrier.
A pass is a finite ratio whose per-time maximum drifts by at most a fixed
factor across decades of t.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .duhamel import PowerLawSource, duhamel_eval, gradient_kernel_eval
from .weights import WeightSpec, weight_value


@dataclass
class BarrierCatalogEntry:
    name: str
    sources: list                    # PowerLawSource pieces (summed)
    barrier: object                  # callable (x, t) -> positive envelope
    regions: list                    # list of callables t -> (lo, hi)
    gradient: bool = False           # use the gradient-type operator

    def evaluate(self, x, t, tol=1e-6):
        op = gradient_kernel_eval if self.gradient else duhamel_eval
        return sum(op(src, x, t, tol) for src in self.sources)


def barrier_check(entry, times=(-1e2, -1e3, -1e4), pts_per_region=18,
                  rng=None, tol=1e-6):
    """Ratio sweep for one catalog entry. Returns a report dict with the
    sample table and per-time maxima; points outside their region are
    skipped with a notice."""
    if rng is None:
        rng = np.random.default_rng(7)
    rows = []
    per_t_max = {}
    skipped = 0
    for t in times:
        vmax = 0.0
        for region in entry.regions:
            lo, hi = region(t)
            if not (0 <= lo < hi):
                skipped += 1
                continue
            lo = max(lo, 1e-12 * hi)
            xs = np.exp(rng.uniform(np.log(lo), np.log(hi), pts_per_region))
            for x in xs:
                bar = float(entry.barrier(x, t))
                if bar <= 0:
                    skipped += 1
                    continue
                val = entry.evaluate(float(x), float(t), tol)
                ratio = val / bar
                rows.append((float(x), float(t), val, bar, ratio))
                vmax = max(vmax, ratio)
        per_t_max[t] = vmax
    maxima = [v for v in per_t_max.values() if v > 0]
    drift = max(maxima) / min(maxima) if maxima else math.inf
    return {
        "name": entry.name,
        "rows": rows,
        "per_t_max": per_t_max,
        "drift": drift,
        "finite": all(np.isfinite(r[4]) for r in rows),
        "skipped": skipped,
        "passed": bool(maxima) and drift <= 4.0
        and all(np.isfinite(r[4]) for r in rows),
    }


# ---------------------------------------------------------------------------
# catalog construction
# ---------------------------------------------------------------------------

def _point_bound_entry(n, name, b, a, c1, d1, c2, d2):
    """Center-value bound: constant-in-x barrier from the a-vs-2 trichotomy;
    valid as a sup bound by rearrangement, sampled well inside the support."""
    src = PowerLawSource(n, b, a, c1, d1, c2, d2)

    def barrier(x, t):
        if a > 2:
            return (-t) ** b * (c1 * (-t) ** d1) ** (2 - a)
        if a == 2:
            return (-t) ** b * math.log((c2 * (-t) ** d2) / (c1 * (-t) ** d1))
        return (-t) ** b * (c2 * (-t) ** d2) ** (2 - a)

    lo_f = (lambda t: 1e-3 * c1 * (-t) ** d1) if c1 > 0 else (
        lambda t: 1e-3 * c2 * (-t) ** d2)
    regions = [lambda t: (lo_f(t), 0.5 * c2 * (-t) ** d2)]
    return BarrierCatalogEntry(name, [src], barrier, regions)


def _far_field_entry(n, name, b, a, c1, d1, c2, d2):
    """Far-field power decay of the image outside the source support."""
    src = PowerLawSource(n, b, a, c1, d1, c2, d2)
    if a < n:
        cc, dd = c2, d2
    else:
        cc, dd = c1, d1

    def barrier(x, t):
        if x <= (-t) ** 0.5:
            return cc ** (n - a) * (-t) ** (b + dd * (n - a)) * x ** (2 - n)
        return cc ** (n - a) * x ** (2 * b + 2 * dd * (n - a) + 2 - n)

    regions = [
        lambda t: (2 * cc * (-2 * t) ** dd, (-t) ** 0.5),
        lambda t: ((-t) ** 0.5, 10 * (-t) ** 0.5),
    ]
    return BarrierCatalogEntry(name, [src], barrier, regions)


def _interior_singular_entry(n, name, b, a, c2, d2):
    """Inside the support the image inherits the |x|^{2-a} profile (2<a<n)."""
    src = PowerLawSource(n, b, a, 0.0, 0.0, c2, d2)

    def barrier(x, t):
        return (-t) ** b * x ** (2 - a)

    regions = [lambda t: (1e-5 * c2 * (-t) ** d2, 0.5 * c2 * (-t) ** d2)]
    return BarrierCatalogEntry(name, [src], barrier, regions)


def _composite_entry(n, name, b, a, c1, d1, c2, d2):
    """The multi-region envelope combining interior, transition and far field."""
    src = PowerLawSource(n, b, a, c1, d1, c2, d2)

    def barrier(x, t):
        rt = (-t) ** 0.5
        if a < 2:
            if x <= c2 * (-t) ** d2:
                return c2 ** (2 - a) * (-t) ** (b + d2 * (2 - a))
            if x <= rt:
                return c2 ** (n - a) * (-t) ** (b + d2 * (n - a)) * x ** (2 - n)
            return c2 ** (n - a) * x ** (2 * b + 2 * d2 * (n - a) + 2 - n)
        if a < n:
            if x <= c1 * (-t) ** d1:
                return c1 ** (2 - a) * (-t) ** (b + d1 * (2 - a))
            if x <= c2 * (-t) ** d2:
                return (-t) ** b * x ** (2 - a)
            if x <= rt:
                return c2 ** (n - a) * (-t) ** (b + d2 * (n - a)) * x ** (2 - n)
            return c2 ** (n - a) * x ** (2 * b + 2 * d2 * (n - a) + 2 - n)
        if x <= c1 * (-t) ** d1:
            return c1 ** (2 - a) * (-t) ** (b + d1 * (2 - a))
        if x <= rt:
            return c1 ** (n - a) * (-t) ** (b + d1 * (n - a)) * x ** (2 - n)
        return c1 ** (n - a) * x ** (2 * b + 2 * d1 * (n - a) + 2 - n)

    if a < 2:
        regions = [
            lambda t: (1e-4 * c2 * (-t) ** d2, c2 * (-t) ** d2),
            lambda t: (c2 * (-t) ** d2, (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 8 * (-t) ** 0.5),
        ]
    elif a < n:
        regions = [
            lambda t: (1e-3 * c1 * (-t) ** d1, c1 * (-t) ** d1),
            lambda t: (c1 * (-t) ** d1, c2 * (-t) ** d2),
            lambda t: (c2 * (-t) ** d2, (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 8 * (-t) ** 0.5),
        ]
    else:
        regions = [
            lambda t: (1e-3 * c1 * (-t) ** d1, c1 * (-t) ** d1),
            lambda t: (2 * c1 * (-2 * t) ** d1, (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 8 * (-t) ** 0.5),
        ]
    return BarrierCatalogEntry(name, [src], barrier, regions)


def _outside_parabola_entry(n, name, b, a):
    """Source supported outside the self-similar parabola |x| >= sqrt(-t)."""
    src = PowerLawSource(n, b, a, 1.0, 0.5, math.inf, 0.5)

    def barrier(x, t):
        rt = (-t) ** 0.5
        if x <= rt:
            return (-t) ** (1 + b - a / 2)
        if b < -1:
            return x ** (-a) * (-t) ** (1 + b)
        if b == -1:
            return x ** (-a) * (1 + math.log(x * x / (-t)))
        return x ** (-a) * x ** (2 + 2 * b)

    regions = [
        lambda t: (1e-3 * (-t) ** 0.5, 0.5 * (-t) ** 0.5),
        lambda t: (4 * (-t) ** 0.5, 40 * (-t) ** 0.5),
    ]
    return BarrierCatalogEntry(name, [src], barrier, regions)


def _gradient_entry(n, name, b, a, c1, d1, c2, d2):
    """Bounds for the |x-y|-weighted kernel (derivative estimates)."""
    src = PowerLawSource(n, b, a, c1, d1, c2, d2)
    if a == 0:
        def barrier(x, t):
            rt = (-t) ** 0.5
            if x <= (-t) ** d2:
                return (-t) ** (b + d2)
            if x <= rt:
                return (-t) ** (b + d2 * n) * x ** (1 - n)
            return (x * x) ** (b + d2 * n) * x ** (1 - n)

        regions = [
            lambda t: (1e-3 * (-t) ** d2, 0.9 * (-t) ** d2),
            lambda t: (2 * (-t) ** d2, (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 6 * (-t) ** 0.5),
        ]
    else:
        def barrier(x, t):
            rt = (-t) ** 0.5
            if x <= (-t) ** d1:
                return (-t) ** (b + d1 * (1 - a))
            if x <= rt:
                return (-t) ** (b + d1 * (n - a)) * x ** (1 - n)
            return (x * x) ** (b + d1 * (n - a)) * x ** (1 - n)

        regions = [
            lambda t: (1e-3 * (-t) ** d1, 0.9 * (-t) ** d1),
            lambda t: (2 * (-t) ** d1, (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 6 * (-t) ** 0.5),
        ]
    return BarrierCatalogEntry(name, [src], barrier, regions, gradient=True)


def _w1_sources(table, j):
    """Piecewise power-law pieces equivalent to the core weight w1_j."""
    n = table.dim.n
    p = table.params
    sig, al, dl = p.sigma, p.alpha_w, p.delta
    if j == 1:
        return [
            PowerLawSource(n, -1 - sig, 0.0, 0.0, 0.0, 1.0, 0.0),
            PowerLawSource(n, -1 - sig, 2 + al, 1.0, 0.0, 1.0, dl),
            PowerLawSource(n, -1 - sig + dl * (n - 2 - al), n + 1.0,
                           1.0, dl, 1.0, 0.5),
        ]
    bj = table.beta[j - 1]
    bj1 = table.beta[j - 2]
    aj = table.alpha[j - 1]
    aj1 = table.alpha[j - 2]
    gj = table.gamma[j - 1]
    return [
        PowerLawSource(n, gj + 2 * aj, 0.0, 0.0, -aj, bj, -aj, A=bj ** -2.0),
        PowerLawSource(n, gj - al * aj, 2 + al, bj, -aj,
                       math.sqrt(bj * bj1), -(aj + aj1) / 2, A=bj ** al),
    ]


def _w2_sources(table, j):
    n = table.dim.n
    sig = table.params.sigma
    b_lo = table.beta[j]
    a_lo = table.alpha[j]
    b_hi = table.beta[j - 1]
    a_hi = table.alpha[j - 1]
    hi_c, hi_d = ((1.0, 0.0) if j == 1
                  else (math.sqrt(table.beta[j - 1] * table.beta[j - 2]),
                        -(table.alpha[j - 1] + table.alpha[j - 2]) / 2))
    return [PowerLawSource(
        n, -2 * sig - a_lo * (n / 2 - 2) + a_hi, n - 2.0,
        math.sqrt(b_lo * b_hi), -(a_lo + a_hi) / 2, hi_c, hi_d,
        A=b_lo ** (n / 2 - 2) / b_hi)]


def _w3_sources(table):
    n = table.dim.n
    p = table.params
    sig, dl = p.sigma, p.delta
    return [
        PowerLawSource(n, -1 - sig, n - 2.0, 1.0, dl, 1.0, 0.5, A=p.R),
        PowerLawSource(n, -1 - sig, n - 2.0, 1.0, 0.5, math.inf, 0.5, A=p.R),
    ]


def _weight_entry(table, name, family, j, sources):
    spec = WeightSpec(family + "*", j, table)

    def barrier(x, t):
        return float(weight_value(spec, np.array([x]), t)[0])

    if family == "w1":
        mu = lambda t: table.mu0(j, t)
        mb = lambda t: table.mubar0(j, t)
        regions = [
            lambda t: (1e-2 * mu(t), mu(t)),
            lambda t: (mu(t), mb(t)),
            lambda t: (mb(t), (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 6 * (-t) ** 0.5),
        ]
    elif family == "w2":
        lo = lambda t: table.mubar0(j + 1, t)
        hi = (lambda t: 1.0) if j == 1 else (lambda t: table.mubar0(j, t))
        regions = [
            lambda t: (1e-2 * lo(t), lo(t)),
            lambda t: (lo(t), hi(t)),
            lambda t: (hi(t), (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 6 * (-t) ** 0.5),
        ]
    else:
        mb1 = lambda t: table.mubar0(1, t)
        regions = [
            lambda t: (1e-2 * mb1(t), mb1(t)),
            lambda t: (mb1(t), (-t) ** 0.5),
            lambda t: ((-t) ** 0.5, 6 * (-t) ** 0.5),
        ]
    return BarrierCatalogEntry(name, sources, barrier, regions)


def build_catalog(table):
    """The standard verification catalog (>= 20 entries) spanning the basic
    center bound, annulus sup bounds, far-field decay, interior singular
    profiles, the composite envelopes, sources outside the parabola, the
    gradient kernel, and the weight-family barriers."""
    n = table.dim.n
    entries = [
        # center/sup bounds across the a-trichotomy
        _point_bound_entry(n, "center-bound a=3 (shrinking annulus)",
                           -1.1, 3.0, 1.0, -0.5, 1.0, 0.0),
        _point_bound_entry(n, "center-bound a=1.5", -0.8, 1.5, 0.0, 0.0, 2.0, 0.3),
        _point_bound_entry(n, "center-bound a=0", -0.6, 0.0, 0.0, 0.0, 2.0, 0.3),
        _point_bound_entry(n, "center-bound a=2 (log case)",
                           -1.0, 2.0, 0.5, -0.4, 2.0, 0.25),
        _point_bound_entry(n, "center-bound a=8 > n", -0.6, 8.0, 1.0, 0.1, 2.0, 0.3),
        # far-field decay
        _far_field_entry(n, "far-field a=3 < n", -1.1, 3.0, 1.0, -0.5, 1.0, 0.0),
        _far_field_entry(n, "far-field a=8 > n", -0.6, 8.0, 1.0, 0.1, 2.0, 0.3),
        # interior singular profile
        _interior_singular_entry(n, "interior profile 2<a<n", -1.2, 4.0, 1.0, 0.5),
        _interior_singular_entry(n, "interior profile a=3", -0.9, 3.0, 2.0, 0.35),
        # composite envelopes
        _composite_entry(n, "composite a<2", -0.8, 1.5, 0.0, 0.0, 2.0, 0.3),
        _composite_entry(n, "composite 2<a<n", -1.2, 4.0, 0.5, -0.3, 1.0, 0.4),
        _composite_entry(n, "composite a>n", -0.6, 8.0, 1.0, 0.1, 2.0, 0.3),
        # sources outside the self-similar parabola
        _outside_parabola_entry(n, "outside parabola b<-1", -1.5, 4.0),
        _outside_parabola_entry(n, "outside parabola b>-1", -0.75, 4.0),
        # gradient-type kernel
        _gradient_entry(n, "gradient kernel a=0", -1.0, 0.0, 0.5, -0.25, 1.0, 0.25),
        _gradient_entry(n, "gradient kernel a>n", -0.5, 9.0, 1.0, 0.05, 2.0, 0.3),
    ]
    # weight-family barriers
    for j in range(1, table.k + 1):
        entries.append(_weight_entry(table, f"core weight {j} vs barrier",
                                     "w1", j, _w1_sources(table, j)))
    for j in range(1, table.k):
        entries.append(_weight_entry(table, f"bridge weight {j} vs barrier",
                                     "w2", j, _w2_sources(table, j)))
    entries.append(_weight_entry(table, "far-field weight vs barrier",
                                 "w3", 0, _w3_sources(table)))
    return entries
