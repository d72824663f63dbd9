"""Score-set evaluation: pair generation, separation metrics, PMI slicing
and PAD operating points.

The metrics follow the usual verification conventions:

* d'   -- |mean_i - mean_g| / sqrt((var_g + var_i) / 2), sample variances.
* EER  -- operating point where the false match rate equals the false
          non-match rate, linearly interpolated between the bracketing
          points of the threshold sweep.
* AUC  -- probability that a random genuine comparison beats a random
          impostor comparison, ties counted 1/2 (the rank statistic, which
          equals trapezoidal integration of the full ROC).
* FTM  -- fraction of scheduled comparisons where at least one sample could
          not produce a usable template; FTM pairs never enter the score
          statistics and are reported separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateVariance, EmptyInput, InvalidConfig
from .model import ComparisonRecord, EvaluationSummary, PadSummary, SampleMetadata

PMI_SLICE_BOUNDS = (24.0, 72.0, 240.0, math.inf)
HISTOGRAM_BINS = 100
DEFAULT_APCER_LEVELS = (0.0001, 0.01)


# ---------------------------------------------------------------------------
# Pair generation


def generate_pairs(
    meta: Sequence[SampleMetadata],
) -> tuple[list[tuple[SampleMetadata, SampleMetadata]], list[tuple[SampleMetadata, SampleMetadata]]]:
    """All unordered sample pairs, split into genuine (same subject and eye)
    and impostor lists, deterministically ordered by (probe_id, gallery_id)."""
    ordered = sorted(meta, key=lambda m: m.sample_id)
    genuine, impostor = [], []
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            a, b = ordered[i], ordered[j]
            if a.identity_class == b.identity_class:
                genuine.append((a, b))
            else:
                impostor.append((a, b))
    return genuine, impostor


# ---------------------------------------------------------------------------
# Separation metrics


def dprime(genuine: Sequence[float], impostor: Sequence[float]) -> float:
    """Decidability between the two score distributions."""
    g = np.asarray(genuine, dtype=np.float64)
    i = np.asarray(impostor, dtype=np.float64)
    if g.size == 0 or i.size == 0:
        raise InvalidConfig("both score sets must be non-empty")
    if np.all(g == g[0]) and np.all(i == i[0]):
        raise DegenerateVariance("both score sets are constant")
    var_g = float(g.var(ddof=1)) if g.size > 1 else 0.0
    var_i = float(i.var(ddof=1)) if i.size > 1 else 0.0
    pooled = (var_g + var_i) / 2.0
    if pooled == 0.0:
        raise DegenerateVariance("both score sets have zero variance")
    return abs(float(i.mean()) - float(g.mean())) / math.sqrt(pooled)


def roc_metrics(
    genuine: Sequence[float],
    impostor: Sequence[float],
    lower_is_genuine: bool = True,
) -> tuple[float, float, list[tuple[float, float, float]]]:
    """(eer, auc, roc points) from a full threshold sweep.

    ROC points are (threshold, fmr, fnmr) at every pooled unique score, on
    the dissimilarity convention (genuine decided when score <= threshold).
    Similarity scores are handled by negation.
    """
    g = np.asarray(genuine, dtype=np.float64)
    i = np.asarray(impostor, dtype=np.float64)
    if g.size == 0 or i.size == 0:
        raise InvalidConfig("both score sets must be non-empty")
    if not lower_is_genuine:
        g, i = -g, -i

    thresholds = np.unique(np.concatenate([g, i]))
    # FMR(t) = frac(impostor <= t); FNMR(t) = frac(genuine > t).
    fmr = np.searchsorted(np.sort(i), thresholds, side="right") / i.size
    fnmr = 1.0 - np.searchsorted(np.sort(g), thresholds, side="right") / g.size

    # Prepend the below-everything operating point (FMR 0, FNMR 1).
    fmr = np.concatenate([[0.0], fmr])
    fnmr = np.concatenate([[1.0], fnmr])
    thr = np.concatenate([[-np.inf], thresholds])

    diff = fmr - fnmr
    idx = int(np.argmax(diff >= 0.0))  # first crossing; diff starts at -1
    if diff[idx] == 0.0:
        eer = float(fmr[idx])
    else:
        f1, n1 = fmr[idx - 1], fnmr[idx - 1]
        f2, n2 = fmr[idx], fnmr[idx]
        denom = (f2 - f1) - (n2 - n1)
        lam = (n1 - f1) / denom if denom != 0 else 0.5
        eer = float(f1 + lam * (f2 - f1))

    auc = _rank_auc(g, i)
    points = [(float(t), float(f), float(n)) for t, f, n in zip(thr, fmr, fnmr)]
    return eer, auc, points


def _rank_auc(g: np.ndarray, i: np.ndarray) -> float:
    """P(genuine < impostor) + P(tie)/2 on the dissimilarity convention."""
    pooled = np.concatenate([g, i])
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=np.float64)
    sorted_vals = pooled[order]
    # mid-ranks for ties
    ranks_sorted = np.arange(1, pooled.size + 1, dtype=np.float64)
    k = 0
    while k < pooled.size:
        j = k
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[k]:
            j += 1
        ranks_sorted[k:j + 1] = 0.5 * (k + 1 + j + 1)
        k = j + 1
    ranks[order] = ranks_sorted
    rank_sum_g = ranks[: g.size].sum()
    u = rank_sum_g - g.size * (g.size + 1) / 2.0  # pairs where genuine > impostor (+ ties/2)
    return float(1.0 - u / (g.size * i.size))


def ftm_rate(records: Sequence[ComparisonRecord]) -> float:
    if not records:
        raise EmptyInput("no comparison records")
    return sum(1 for r in records if r.ftm) / len(records)


def pmi_slice(records: Iterable[ComparisonRecord], max_pmi_hours: float) -> list[ComparisonRecord]:
    """Records whose pair-level PMI (max of the two samples) is within the
    bound, inclusive."""
    return [r for r in records if r.pmi_max_hours <= max_pmi_hours]


def scored(records: Iterable[ComparisonRecord], label: str) -> list[float]:
    return [r.score for r in records if not r.ftm and r.label == label]


def score_histogram(genuine: Sequence[float], impostor: Sequence[float],
                    bins: int = HISTOGRAM_BINS) -> dict:
    """Density-normalized histograms over [0, 1] for both labels."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    out = {"edges": edges.tolist()}
    for name, vals in (("genuine", genuine), ("impostor", impostor)):
        if len(vals):
            dens, _ = np.histogram(np.asarray(vals, dtype=np.float64), bins=edges, density=True)
            out[name] = dens.tolist()
        else:
            out[name] = [0.0] * bins
    return out


def summarize(records: Sequence[ComparisonRecord], bins: int = HISTOGRAM_BINS) -> EvaluationSummary:
    """Full EvaluationSummary for one record set (one slice)."""
    if not records:
        raise EmptyInput("no comparison records")
    gen = scored(records, "genuine")
    imp = scored(records, "impostor")
    flags = []
    d = None
    eer = auc = float("nan")
    if gen and imp:
        try:
            d = dprime(gen, imp)
        except DegenerateVariance:
            flags.append("degenerate_variance")
        eer, auc, _ = roc_metrics(gen, imp)
    else:
        flags.append("missing_label")
    return EvaluationSummary(
        d_prime=d,
        eer=eer,
        auc=auc,
        ftm_rate=ftm_rate(records),
        n_genuine=sum(1 for r in records if r.label == "genuine"),
        n_impostor=sum(1 for r in records if r.label == "impostor"),
        histogram=score_histogram(gen, imp, bins),
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# PAD score metrics


def pad_metrics(
    bona_fide: Sequence[float],
    attack: Sequence[float],
    levels: Sequence[float] = DEFAULT_APCER_LEVELS,
) -> PadSummary:
    """Operating points of an attack detector whose scores grow with
    attack-likeness (decision rule: attack when score >= threshold).

    For each APCER level a, the threshold is the highest candidate with
    fraction(attack < t) <= a, which maximizes the true detection rate
    1-BPCER = fraction(bona_fide < t) under the APCER constraint. The
    documented levels {0.0001, 0.01} are always evaluated.
    """
    bf = np.sort(np.asarray(bona_fide, dtype=np.float64))
    at = np.sort(np.asarray(attack, dtype=np.float64))
    if bf.size == 0 or at.size == 0:
        raise InvalidConfig("both score sets must be non-empty")
    all_levels = sorted(set(DEFAULT_APCER_LEVELS) | set(float(x) for x in levels))

    bpcer_at: dict = {}
    thresholds: dict = {}
    flags: dict = {}
    for level in all_levels:
        level_flags = []
        # fraction(attack < t) for candidate thresholds t = attack scores
        below = np.searchsorted(at, at, side="left") / at.size
        feasible = np.nonzero(below <= level)[0]
        if feasible.size == 0:
            level_flags.append("level_unreachable")
            bpcer_at[level] = 0.0
            thresholds[level] = None
            flags[level] = tuple(level_flags)
            continue
        t = float(at[feasible[-1]])
        if level > 0 and at.size * level < 1.0:
            level_flags.append("insufficient_attack_samples")
        bpcer_at[level] = float(np.searchsorted(bf, t, side="left") / bf.size)
        thresholds[level] = t
        flags[level] = tuple(level_flags)

    # AUC with bona fide low / attack high maps onto the dissimilarity AUC.
    auc = _rank_auc(bf, at)
    return PadSummary(
        auc=auc,
        bpcer_at_apcer=bpcer_at,
        thresholds=thresholds,
        flags=flags,
        histogram=score_histogram(bf.tolist(), at.tolist()),
    )
