"""Statistical tests and summaries for experiment records.

Sums of squares, rank handling, the bootstrap, and the Wilcoxon
enumeration are implemented here; tail probabilities come from scipy's
F and studentized-range distributions. Degenerate inputs (zero variance
everywhere) return flagged results instead of NaN so downstream tables
never contain non-finite entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy import stats as _dist

from .errors import ValidationError
from .rng import Seed, make_generator


@dataclass(frozen=True)
class AnovaSource:
    """One row of an ANOVA table."""

    source: str
    f: float
    p: float
    df1: int
    df2: int
    partial_eta2: float
    degenerate: bool = False


@dataclass(frozen=True)
class TukeyPair:
    group_a: str
    group_b: str
    mean_diff: float  # mean(b) - mean(a)
    q: float
    p_adj: float
    reject: bool
    degenerate: bool = False


@dataclass(frozen=True)
class BootstrapCI:
    mean: float
    lower: float
    upper: float
    level: float


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min(W+, W-) over nonzero differences
    p: float          # two-sided
    n_nonzero: int
    method: str       # "exact", "normal", or "degenerate"


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def _clean_groups(groups: Mapping[str, Sequence[float]],
                  min_size: int = 2) -> dict[str, np.ndarray]:
    if len(groups) < 2:
        raise ValidationError(f"need at least 2 groups, got {len(groups)}")
    out: dict[str, np.ndarray] = {}
    for name, values in groups.items():
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < min_size:
            raise ValidationError(f"group {name!r} needs at least {min_size} "
                                  f"observations, got {arr.size}")
        if not np.isfinite(arr).all():
            raise ValidationError(f"group {name!r} contains non-finite values")
        out[str(name)] = arr
    return out


def _between_within(groups: dict[str, np.ndarray]) -> tuple[float, float, int, int]:
    allv = np.concatenate(list(groups.values()))
    grand = allv.mean()
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in groups.values())
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in groups.values())
    return float(ssb), float(ssw), len(groups) - 1, allv.size - len(groups)


def one_way_anova(groups: Mapping[str, Sequence[float]]) -> AnovaSource:
    """One-way fixed-effects ANOVA with eta squared.

    F = (SSB / df_between) / (SSW / df_within). When every observation
    is identical the test is undefined and comes back degenerate with
    F = 0, p = 1; zero within-group variance with separated means is
    degenerate with p = 0.
    """
    g = _clean_groups(groups)
    ssb, ssw, df1, df2 = _between_within(g)
    if ssw == 0.0:
        return AnovaSource("group", 0.0, 1.0 if ssb == 0.0 else 0.0, df1, df2,
                           0.0 if ssb == 0.0 else 1.0, degenerate=True)
    f = (ssb / df1) / (ssw / df2)
    p = float(_dist.f.sf(f, df1, df2))
    return AnovaSource("group", float(f), p, df1, df2, ssb / (ssb + ssw))


def _dummy(levels: list, values: list) -> np.ndarray:
    """Treatment-coded indicator columns, first level dropped."""
    cols = [np.asarray([v == lev for v in values], dtype=np.float64)
            for lev in levels[1:]]
    return np.column_stack(cols) if cols else np.empty((len(values), 0))


def _rss(x: np.ndarray, y: np.ndarray) -> float:
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    r = y - x @ beta
    return float(r @ r)


def two_way_anova_type2(rows: Sequence[tuple[Hashable, Hashable, float]],
                        factor_names: tuple[str, str] = ("A", "B"),
                        ) -> list[AnovaSource]:
    """Two-way fixed-effects ANOVA with Type-II sums of squares.

    Type-II tests each main effect after the other main effect, and the
    interaction after both, which stays well defined on unbalanced data
    and reduces to the classic cell-means decomposition when balanced.
    Every factor-level combination must be observed.

    Args:
        rows: (level_a, level_b, response) triples.
        factor_names: labels for the table rows.

    Returns:
        Three AnovaSource rows: factor A, factor B, interaction.
    """
    if len(rows) < 2:
        raise ValidationError("need at least 2 observations")
    a_vals = [r[0] for r in rows]
    b_vals = [r[1] for r in rows]
    y = np.asarray([r[2] for r in rows], dtype=np.float64)
    if not np.isfinite(y).all():
        raise ValidationError("response contains non-finite values")
    la = sorted(set(a_vals), key=str)
    lb = sorted(set(b_vals), key=str)
    if len(la) < 2 or len(lb) < 2:
        raise ValidationError(f"both factors need >= 2 levels, got "
                              f"{len(la)} x {len(lb)}")
    seen = set(zip(a_vals, b_vals))
    for cell in ((a, b) for a in la for b in lb):
        if cell not in seen:
            raise ValidationError(f"empty cell {cell!r}: every combination "
                                  f"needs at least one observation")
    n = y.size
    df1a, df1b = len(la) - 1, len(lb) - 1
    df_int = df1a * df1b
    df_err = n - len(la) * len(lb)
    if df_err < 1:
        raise ValidationError("no residual degrees of freedom: need replicate "
                              "observations in the cells")
    one = np.ones((n, 1))
    da = _dummy(la, a_vals)
    db = _dummy(lb, b_vals)
    inter = np.column_stack([da[:, i] * db[:, j]
                             for i in range(da.shape[1])
                             for j in range(db.shape[1])])
    rss_a = _rss(np.hstack([one, da]), y)
    rss_b = _rss(np.hstack([one, db]), y)
    rss_ab = _rss(np.hstack([one, da, db]), y)
    rss_full = _rss(np.hstack([one, da, db, inter]), y)
    ss = {
        factor_names[0]: max(rss_b - rss_ab, 0.0),
        factor_names[1]: max(rss_a - rss_ab, 0.0),
        f"{factor_names[0]}:{factor_names[1]}": max(rss_ab - rss_full, 0.0),
    }
    dfs = [df1a, df1b, df_int]
    sse = rss_full
    out = []
    for (name, ss_eff), df1 in zip(ss.items(), dfs):
        if sse == 0.0:
            out.append(AnovaSource(name, 0.0, 1.0 if ss_eff == 0.0 else 0.0,
                                   df1, df_err,
                                   0.0 if ss_eff == 0.0 else 1.0,
                                   degenerate=True))
            continue
        f = (ss_eff / df1) / (sse / df_err)
        out.append(AnovaSource(name, float(f), float(_dist.f.sf(f, df1, df_err)),
                               df1, df_err, ss_eff / (ss_eff + sse)))
    return out


def tukey_hsd(groups: Mapping[str, Sequence[float]],
              alpha: float = 0.05) -> list[TukeyPair]:
    """All pairwise comparisons with the studentized-range correction.

    q = |mean difference| / sqrt(MS_within / n_tilde) with n_tilde the
    harmonic mean of the two group sizes, so unequal sizes are handled
    by the Tukey-Kramer form. Adjusted p-values come from the
    studentized-range distribution with k groups and the pooled
    within-group degrees of freedom.
    """
    if not (0 < alpha < 1):
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    g = _clean_groups(groups)
    _, ssw, _, df2 = _between_within(g)
    k = len(g)
    msw = ssw / df2
    names = sorted(g)
    pairs: list[TukeyPair] = []
    for na, nb in combinations(names, 2):
        a, b = g[na], g[nb]
        diff = float(b.mean() - a.mean())
        if msw == 0.0:
            p = 1.0 if diff == 0.0 else 0.0
            pairs.append(TukeyPair(na, nb, diff, 0.0, p, p < alpha,
                                   degenerate=True))
            continue
        n_tilde = 2.0 / (1.0 / a.size + 1.0 / b.size)
        q = abs(diff) / math.sqrt(msw / n_tilde)
        p = float(_dist.studentized_range.sf(q, k, df2))
        p = min(max(p, 0.0), 1.0)
        pairs.append(TukeyPair(na, nb, diff, float(q), p, p < alpha))
    return pairs


def bootstrap_ci(data: Sequence[float], n_iterations: int = 1000,
                 level: float = 95.0, *, rng: Seed) -> BootstrapCI:
    """Percentile bootstrap confidence interval for the mean.

    Resamples the data with replacement ``n_iterations`` times, takes
    the mean of each resample, and reports the (100-level)/2 and
    100-(100-level)/2 percentiles of those means. The caller supplies
    the seed, so identical inputs give identical intervals.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("data must be a nonempty 1-D sequence")
    if not np.isfinite(arr).all():
        raise ValidationError("data contains non-finite values")
    if n_iterations < 1:
        raise ValidationError(f"n_iterations must be >= 1, got {n_iterations}")
    if not (0 < level < 100):
        raise ValidationError(f"level must be in (0, 100), got {level}")
    gen = make_generator(rng)
    idx = gen.integers(0, arr.size, size=(n_iterations, arr.size))
    means = arr[idx].mean(axis=1)
    alpha = 100.0 - level
    lower = float(np.percentile(means, alpha / 2.0))
    upper = float(np.percentile(means, 100.0 - alpha / 2.0))
    return BootstrapCI(float(arr.mean()), lower, upper, level)


def _midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); tied values share the mean of their ranks."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(differences: Sequence[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped; ties in |d| get midranks. Up to 12
    nonzero differences the p-value is exact, from enumerating all 2^n
    sign assignments; beyond that a normal approximation with tie
    correction and continuity correction is used. All differences zero
    is degenerate with p = 1.
    """
    d = np.asarray(differences, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValidationError("differences must be a nonempty 1-D sequence")
    if not np.isfinite(d).all():
        raise ValidationError("differences contain non-finite values")
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "degenerate")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    total = float(ranks.sum())
    w_minus = total - w_plus
    stat = min(w_plus, w_minus)
    if n <= 12:
        # Every sign assignment is equally likely under the null.
        bits = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        dist = bits @ ranks
        lo = min(w_plus, w_minus)
        hi = total - lo
        p = (np.count_nonzero(dist <= lo) + np.count_nonzero(dist >= hi)) / 2.0 ** n
        return WilcoxonResult(stat, min(float(p), 1.0), n, "exact")
    mu = total / 2.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts)) / 48.0
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if sigma2 <= 0:
        return WilcoxonResult(stat, 1.0, n, "degenerate")
    # Continuity correction pulls the statistic half a step toward the mean.
    z = (w_plus - mu - 0.5 * math.copysign(1.0, w_plus - mu)) / math.sqrt(sigma2)
    if w_plus == mu:
        z = 0.0
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return WilcoxonResult(stat, min(p, 1.0), n, "normal")


def linear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Ordinary least squares line with R^2.

    Needs at least 3 points and nonconstant x. All-equal y is a perfect
    constant fit: slope 0, R^2 = 1.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValidationError(f"x and y must be equal-length 1-D sequences, "
                              f"got {xa.shape} and {ya.shape}")
    if xa.size < 3:
        raise ValidationError(f"need at least 3 points, got {xa.size}")
    if not (np.isfinite(xa).all() and np.isfinite(ya).all()):
        raise ValidationError("inputs contain non-finite values")
    if np.all(xa == xa[0]):
        raise ValidationError("x values are all equal; the slope is undefined")
    if np.all(ya == ya[0]):
        return LinearFit(0.0, float(ya[0]), 1.0)
    xm, ym = xa.mean(), ya.mean()
    sxx = float(((xa - xm) ** 2).sum())
    sxy = float(((xa - xm) * (ya - ym)).sum())
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = ya - (slope * xa + intercept)
    sst = float(((ya - ym) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / sst
    return LinearFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0))


def coefficient_of_variation(values: Sequence[float]) -> float | None:
    """100 * sample standard deviation / mean; None when the mean is 0."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValidationError(f"need at least 2 values, got {arr.size}")
    if not np.isfinite(arr).all():
        raise ValidationError("values contain non-finite entries")
    mean = float(arr.mean())
    if mean == 0.0:
        return None
    return 100.0 * float(arr.std(ddof=1)) / mean


def rank_variance(ranks: Sequence[float]) -> float:
    """Population variance of a rank sequence (consistency measure)."""
    arr = np.asarray(ranks, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("ranks must be a nonempty 1-D sequence")
    if not np.isfinite(arr).all():
        raise ValidationError("ranks contain non-finite values")
    return float(arr.var(ddof=0))


def rank_within(values: Sequence[float], descending: bool = True) -> np.ndarray:
    """Midrank positions of values, rank 1 for the largest by default."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValidationError("values contain non-finite entries")
    return _midranks(-arr if descending else arr)
