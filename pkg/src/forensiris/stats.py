"""Demographic balancing, resampled decidability, and hypothesis tests.

The F and chi-squared tail probabilities are computed with hand-rolled
special functions (regularized incomplete beta via Lentz's continued
fraction, regularized incomplete gamma via series / continued fraction),
evaluated well past the 1e-10 tolerance the tests pin. Survival
probabilities are computed directly in the small tail, so p-values around
1e-29 keep their magnitude instead of collapsing to cancellation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .errors import CannotBalance, DegenerateInput, InvalidConfig, SampleTooSmall
from .evaluation import dprime
from .model import SampleMetadata, TestResult

_MAX_ITER = 500
_EPS = 1e-15
_FPMIN = 1e-300

P_UNDERFLOW = 1e-300

DEFAULT_BALANCE_TOLERANCE = 0.05  # hours
DEFAULT_BALANCE_MIN_SIZE = 5
DEFAULT_BOOTSTRAP_REPS = 30
DEFAULT_BOOTSTRAP_FRAC = 0.5


# ---------------------------------------------------------------------------
# Special functions


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if a <= 0 or b <= 0:
        raise InvalidConfig("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def regularized_upper_gamma(s: float, x: float) -> float:
    """Q(s, x), the regularized upper incomplete gamma function."""
    if s <= 0:
        raise InvalidConfig("shape parameter must be positive")
    if x < 0:
        raise InvalidConfig("x must be non-negative")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        # Series for P(s, x); Q = 1 - P. Safe: P is small-to-moderate here.
        ap = s
        term = 1.0 / s
        total = term
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        p = total * math.exp(-x + s * math.log(x) - math.lgamma(s))
        return 1.0 - p
    # Continued fraction for Q directly (accurate in the far tail).
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def f_survival(f: float, df1: int, df2: int) -> float:
    """P[F(df1, df2) > f], computed directly in the upper tail."""
    if f <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return regularized_incomplete_beta(x, df2 / 2.0, df1 / 2.0)


def chi2_survival(stat: float, df: int) -> float:
    """P[chi2(df) > stat]."""
    if stat <= 0:
        return 1.0
    return regularized_upper_gamma(df / 2.0, stat / 2.0)


def _with_underflow(p: float, flags: List[str]) -> float:
    if 0.0 < p < P_UNDERFLOW:
        flags.append("p_underflow")
        return 0.0
    return min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Hypothesis tests


def anova_oneway(samples: Sequence[Sequence[float]]) -> TestResult:
    """One-way fixed-effects analysis of variance."""
    groups = [np.asarray(g, dtype=np.float64) for g in samples]
    if len(groups) < 2:
        raise InvalidConfig("need at least two groups")
    if any(g.size < 2 for g in groups):
        raise InvalidConfig("every group needs at least two values")
    pooled = np.concatenate(groups)
    if np.all(pooled == pooled[0]):
        raise DegenerateInput("all values identical")

    grand = pooled.mean()
    k = len(groups)
    n_total = pooled.size
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    df1, df2 = k - 1, n_total - k

    flags: List[str] = []
    if ss_within == 0.0:
        flags.append("degenerate_within_variance")
        return TestResult(statistic=math.inf, p_value=0.0, df=(df1, df2), flags=tuple(flags))
    f = (ss_between / df1) / (ss_within / df2)
    p = _with_underflow(f_survival(f, df1, df2), flags)
    return TestResult(statistic=float(f), p_value=p, df=(df1, df2), flags=tuple(flags))


def _midranks(values: np.ndarray) -> tuple[np.ndarray, float]:
    """Mid-ranks of pooled values plus the tie-correction factor."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    n = values.size
    tie_sum = 0.0
    i = 0
    sorted_vals = values[order]
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        t = j - i + 1
        tie_sum += t ** 3 - t
        i = j + 1
    correction = 1.0 - tie_sum / (n ** 3 - n) if n > 1 else 0.0
    return ranks, correction


def kruskal_wallis(samples: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H test with mid-rank ties and tie correction."""
    groups = [np.asarray(g, dtype=np.float64) for g in samples]
    if len(groups) < 2:
        raise InvalidConfig("need at least two groups")
    if any(g.size < 1 for g in groups):
        raise InvalidConfig("every group needs at least one value")
    pooled = np.concatenate(groups)
    k = len(groups)
    if np.all(pooled == pooled[0]):
        return TestResult(statistic=0.0, p_value=1.0, df=(k - 1,), flags=("all_tied",))

    ranks, correction = _midranks(pooled)
    n = pooled.size
    h = 0.0
    offset = 0
    for g in groups:
        r_mean = ranks[offset:offset + g.size].mean()
        h += g.size * (r_mean - (n + 1) / 2.0) ** 2
        offset += g.size
    h *= 12.0 / (n * (n + 1))
    if correction > 0:
        h /= correction

    flags: List[str] = []
    p = _with_underflow(chi2_survival(h, k - 1), flags)
    return TestResult(statistic=float(h), p_value=p, df=(k - 1,), flags=tuple(flags))


# ---------------------------------------------------------------------------
# Resampled decidability


def bootstrap_dprime(
    genuine: Sequence[float],
    impostor: Sequence[float],
    reps: int = DEFAULT_BOOTSTRAP_REPS,
    frac: float = DEFAULT_BOOTSTRAP_FRAC,
    seed: int = 0,
) -> list[float]:
    """reps decidability values, each over a without-replacement subsample
    of ceil(frac * n) scores from each set.

    Each repetition derives its own generator from (seed, rep), so results
    are identical whether repetitions run serially or concurrently.
    """
    g = np.asarray(genuine, dtype=np.float64)
    i = np.asarray(impostor, dtype=np.float64)
    if g.size < 4 or i.size < 4:
        raise SampleTooSmall("need at least 4 scores on each side")
    if not (0.0 < frac <= 1.0):
        raise InvalidConfig("frac must lie in (0, 1]")
    if reps < 1:
        raise InvalidConfig("reps must be >= 1")
    m_g = math.ceil(frac * g.size)
    m_i = math.ceil(frac * i.size)
    values = []
    for rep in range(reps):
        rng = np.random.default_rng([seed, rep])
        sub_g = g[rng.choice(g.size, size=m_g, replace=False)]
        sub_i = i[rng.choice(i.size, size=m_i, replace=False)]
        values.append(dprime(sub_g, sub_i))
    return values


# ---------------------------------------------------------------------------
# Demographic grouping and PMI balancing


@dataclass
class AgeGroupSplit:
    groups: Dict[str, List[SampleMetadata]]
    excluded: List[SampleMetadata] = field(default_factory=list)


AGE_BOUNDS = {"1-33": (1, 33), "34-66": (34, 66), "67-99": (67, 99)}


def split_age_groups(meta: Sequence[SampleMetadata]) -> AgeGroupSplit:
    """Split into the three analysis age groups (inclusive bounds); ages
    outside [1, 99] are flagged and excluded."""
    split = AgeGroupSplit(groups={label: [] for label in AGE_BOUNDS})
    for m in meta:
        for label, (lo, hi) in AGE_BOUNDS.items():
            if lo <= m.age_years <= hi:
                split.groups[label].append(m)
                break
        else:
            split.excluded.append(m)
    return split


@dataclass
class BalanceResult:
    groups: Dict[str, List[SampleMetadata]]
    removed: List[tuple]            # (group label, sample_id) in removal order
    means: Dict[str, float]


def balance_pmi(
    groups: Dict[str, Sequence[SampleMetadata]],
    tolerance: float = DEFAULT_BALANCE_TOLERANCE,
    min_size: int = DEFAULT_BALANCE_MIN_SIZE,
) -> BalanceResult:
    """Equalize group mean PMIs by removing samples from the
    larger-mean group.

    Each step removes, from the group with the largest mean PMI, the sample
    whose removal brings that mean closest to the smallest group mean
    (ties by sample_id). Stops when all pairwise mean differences are within
    tolerance; raises CannotBalance if a group would drop below min_size
    first. Samples are never removed from the smallest-mean group.
    """
    if len(groups) < 2 or any(len(v) == 0 for v in groups.values()):
        raise InvalidConfig("need at least two non-empty groups")
    work: Dict[str, List[SampleMetadata]] = {
        label: sorted(v, key=lambda m: (m.pmi_hours, m.sample_id))
        for label, v in groups.items()
    }
    removed: List[tuple] = []

    def means() -> Dict[str, float]:
        return {label: sum(m.pmi_hours for m in v) / len(v) for label, v in work.items()}

    while True:
        mu = means()
        if max(mu.values()) - min(mu.values()) <= tolerance:
            return BalanceResult(groups=work, removed=removed, means=mu)
        largest = min(  # largest mean; ties by label for determinism
            mu, key=lambda label: (-mu[label], label))
        target = min(mu.values())
        pool = work[largest]
        if len(pool) <= min_size:
            raise CannotBalance(
                f"group '{largest}' reached the minimum size ({min_size}) at mean "
                f"spread {max(mu.values()) - min(mu.values()):.3f} h > {tolerance} h"
            )
        total = sum(m.pmi_hours for m in pool)
        n = len(pool)
        best_idx = min(
            range(n),
            key=lambda idx: (abs((total - pool[idx].pmi_hours) / (n - 1) - target),
                             pool[idx].sample_id),
        )
        removed.append((largest, pool[best_idx].sample_id))
        del pool[best_idx]
