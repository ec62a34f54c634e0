"""Classical statistics pipeline: one-way ANOVA, Holm-Bonferroni, Tukey HSD.

The distribution numerics are self-contained: the F tail comes from the
regularized incomplete beta function evaluated with Lentz's continued
fraction, and the studentized-range CDF from double numerical quadrature
(outer over the pooled-variance chi scale, inner over the normal range),
targeting 1e-8 accuracy. Tests cross-check both against independent
reference implementations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_erf = np.frompyfunc(math.erf, 1, 1)


def _norm_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + _erf(x / math.sqrt(2.0)).astype(float))


# ---------------------------------------------------------------------------
# Distribution numerics
# ---------------------------------------------------------------------------

_BETA_MAX_ITER = 300
_BETA_EPS = 3e-16
_BETA_FPMIN = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("incomplete beta needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def f_sf(f: float, df_num: int, df_den: int) -> float:
    """Upper tail probability of the F distribution."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df_den / (df_den + df_num * f)
    return regularized_incomplete_beta(df_den / 2.0, df_num / 2.0, x)


_gl_cache: dict = {}


def _panel_nodes(lo: float, hi: float, panels: int, order: int):
    key = (lo, hi, panels, order)
    cached = _gl_cache.get(key)
    if cached is not None:
        return cached
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    xs, ws = [], []
    for left, right in zip(edges[:-1], edges[1:]):
        mid = (left + right) / 2.0
        half = (right - left) / 2.0
        xs.append(mid + half * base_x)
        ws.append(half * base_w)
    nodes = (np.concatenate(xs), np.concatenate(ws))
    _gl_cache[key] = nodes
    return nodes


def _normal_range_cdf(widths: np.ndarray, k: int) -> np.ndarray:
    """P(range of k iid standard normals <= w) for each w, vectorized."""
    z, wz = _panel_nodes(-8.5, 8.5, 24, 10)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    big_phi = _norm_cdf(z)
    # matrix: z nodes x widths
    inner = big_phi[:, None] - _norm_cdf(z[:, None] - widths[None, :])
    np.clip(inner, 0.0, None, out=inner)
    integrand = phi[:, None] * inner ** (k - 1)
    return k * (wz[:, None] * integrand).sum(axis=0)


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """P(Q <= q) for the studentized range with k groups and df degrees of
    freedom, by quadrature over the chi scale factor."""
    if q <= 0.0:
        return 0.0
    if k < 2:
        raise ValueError("studentized range needs k >= 2")
    spread = 12.0 / math.sqrt(df)
    lo = max(0.0, 1.0 - spread)
    hi = 1.0 + spread
    u, wu = _panel_nodes(lo, hi, 32, 10)
    log_norm = (1.0 - df / 2.0) * math.log(2.0) + (df / 2.0) * math.log(df) \
        - math.lgamma(df / 2.0)
    log_density = log_norm + (df - 1.0) * np.log(u) - df * u * u / 2.0
    density = np.exp(log_density)
    ranges = _normal_range_cdf(q * u, k)
    return float(min(1.0, max(0.0, (wu * density * ranges).sum())))


def studentized_range_sf(q: float, k: int, df: float) -> float:
    return 1.0 - studentized_range_cdf(q, k, df)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------


@dataclass
class GroupedSamples:
    """Two or more labeled groups of real-valued samples."""

    groups: list
    labels: list = None

    def __post_init__(self):
        if len(self.groups) < 2:
            raise ValueError("need at least two groups")
        for g in self.groups:
            if len(g) < 2:
                raise ValueError("each group needs at least two samples")
        if self.labels is None:
            self.labels = [f"group{k}" for k in range(len(self.groups))]
        if len(self.labels) != len(self.groups):
            raise ValueError("labels and groups differ in length")


@dataclass(frozen=True)
class AnovaResult:
    F: float
    df_between: int
    df_within: int
    p: float
    degenerate: bool = False


@dataclass(frozen=True)
class PairwiseComparison:
    label_a: str
    label_b: str
    mean_difference: float  # mean(a) - mean(b)
    adjusted_p: float
    degenerate: bool = False


def one_way_anova(samples: GroupedSamples) -> AnovaResult:
    """Fixed-effects one-way ANOVA: F = MS_between / MS_within with the
    upper F tail as p-value. All-identical data is a domain error; zero
    within-group variance with distinct means reports p=0, degenerate."""
    groups = [np.asarray(g, dtype=float) for g in samples.groups]
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand = sum(g.sum() for g in groups) / n_total
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    df_between = k - 1
    df_within = n_total - k
    if ss_within == 0.0 and ss_between == 0.0:
        raise ValueError("all samples identical: ANOVA undefined")
    if ss_within == 0.0:
        return AnovaResult(F=math.inf, df_between=df_between, df_within=df_within,
                           p=0.0, degenerate=True)
    f = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(F=f, df_between=df_between, df_within=df_within,
                       p=f_sf(f, df_between, df_within))


def holm_bonferroni(p_values) -> list:
    """Holm step-down adjustment, returned in the input order: sort
    ascending, adjusted_(i) = min(1, max_{j<=i} (m-j+1) * p_(j))."""
    ps = [float(p) for p in p_values]
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
    m = len(ps)
    order = sorted(range(m), key=lambda i: ps[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * ps[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted


def tukey_hsd(samples: GroupedSamples) -> list:
    """Tukey (Tukey-Kramer for unequal sizes) honestly-significant-difference
    comparisons for every unordered group pair, with p-values from the
    studentized range with (k, df_within)."""
    groups = [np.asarray(g, dtype=float) for g in samples.groups]
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    df_within = n_total - k
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    ms_within = ss_within / df_within
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = float(groups[i].mean() - groups[j].mean())
            if ms_within == 0.0:
                out.append(PairwiseComparison(
                    samples.labels[i], samples.labels[j], diff,
                    adjusted_p=1.0 if diff == 0.0 else 0.0, degenerate=True,
                ))
                continue
            se = math.sqrt(ms_within / 2.0 * (1.0 / len(groups[i]) + 1.0 / len(groups[j])))
            q = abs(diff) / se
            out.append(PairwiseComparison(
                samples.labels[i], samples.labels[j], diff,
                adjusted_p=studentized_range_sf(q, k, df_within),
            ))
    return out


# ---------------------------------------------------------------------------
# Report formatting
# ---------------------------------------------------------------------------


def anova_report_text(result: AnovaResult) -> str:
    flag = "  [degenerate: zero within-group variance]" if result.degenerate else ""
    return (f"F({result.df_between},{result.df_within}) = {result.F:.4g}, "
            f"p = {result.p:.4g}{flag}\n")


def tukey_report_rows(comparisons) -> list:
    """Machine-readable rows: (label_a, label_b, mean difference, adjusted p)."""
    return [(c.label_a, c.label_b, c.mean_difference, c.adjusted_p) for c in comparisons]


def tukey_report_text(comparisons) -> str:
    width = max((len(c.label_a) + len(c.label_b) for c in comparisons), default=8) + 4
    lines = [f"{'pair':<{width}}  mean diff    p (adj)"]
    for c in comparisons:
        pair = f"{c.label_a} vs {c.label_b}"
        flag = " *degenerate*" if c.degenerate else ""
        lines.append(f"{pair:<{width}}  {c.mean_difference:>9.3f}    {c.adjusted_p:.4g}{flag}")
    return "\n".join(lines) + "\n"
