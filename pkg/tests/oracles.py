"""Independent reference implementations the fast paths are checked against.

Everything here is deliberately naive: explicit Python loops, textbook
formulas, exhaustive scans. None of it shares code with the package.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.stats


def hamming_oracle(bitplanes_a, mask_a, bitplanes_b, mask_b, max_shift, overlap_floor=0.10):
    """Bit-loop fractional Hamming distance, min over shifts.

    Returns (score, best_shift, overlap_at_best) or None when no shift
    reaches the overlap floor. Shift semantics: shift s assumes b is rotated
    +s columns relative to a, so b is sampled at column (a_col + s) mod A.

    Works on plain Python lists, comparing one bit at a time; rotating a row
    by list slicing stands in for the (c + s) mod A index.
    """
    a_bits = [plane.tolist() for plane in np.asarray(bitplanes_a)]
    b_bits = [plane.tolist() for plane in np.asarray(bitplanes_b)]
    am = np.asarray(mask_a).tolist()
    bm = np.asarray(mask_b).tolist()
    planes = len(a_bits)
    rows, cols = len(am), len(am[0])
    best = None
    min_overlap = overlap_floor * rows * cols
    for s in range(-max_shift, max_shift + 1):
        overlap = 0
        disagree = 0
        for r in range(rows):
            bm_rot = bm[r][s:] + bm[r][:s] if s else bm[r]
            joint = [x and y for x, y in zip(am[r], bm_rot)]
            overlap += sum(1 for m in joint if m)
            for p in range(planes):
                arow = a_bits[p][r]
                brow = b_bits[p][r][s:] + b_bits[p][r][:s] if s else b_bits[p][r]
                disagree += sum(1 for m, x, y in zip(joint, arow, brow)
                                if m and x != y)
        if overlap == 0 or overlap < min_overlap:
            continue
        score = disagree / (planes * overlap)
        key = (score, abs(s), 0 if s < 0 else 1)
        if best is None or key < best[0]:
            best = (key, s, overlap, score)
    if best is None:
        return None
    return best[3], best[1], best[2]


def pad_oracle(bona_fide, attack, level):
    """Exhaustive threshold scan. Decision rule: attack when score >= t.

    Scans every candidate threshold (the attack scores), keeps those with
    APCER <= level and returns the best achievable 1-BPCER.
    """
    bona = list(bona_fide)
    attacks = list(attack)
    best = None
    for t in sorted(set(attacks)):
        apcer = sum(1 for s in attacks if s < t) / len(attacks)
        if apcer > level:
            continue
        tdr = sum(1 for s in bona if s < t) / len(bona)
        if best is None or tdr > best:
            best = tdr
    return 0.0 if best is None else best


def anova_oracle(groups):
    """Textbook one-way ANOVA, p from scipy (independent of the package's
    hand-rolled incomplete beta)."""
    k = len(groups)
    n = sum(len(g) for g in groups)
    grand = sum(sum(g) for g in groups) / n
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ssw = sum(sum((x - sum(g) / len(g)) ** 2 for x in g) for g in groups)
    f = (ssb / (k - 1)) / (ssw / (n - k))
    p = float(scipy.stats.f.sf(f, k - 1, n - k))
    return f, p


def kruskal_oracle(groups):
    """Direct rank computation with mid-rank ties and tie correction; p from
    scipy's chi-squared survival function."""
    pooled = [(x, gi) for gi, g in enumerate(groups) for x in g]
    pooled.sort(key=lambda t: t[0])
    n = len(pooled)
    ranks = [0.0] * n
    i = 0
    tie_sum = 0.0
    while i < n:
        j = i
        while j + 1 < n and pooled[j + 1][0] == pooled[i][0]:
            j += 1
        mid = (i + 1 + j + 1) / 2.0
        for idx in range(i, j + 1):
            ranks[idx] = mid
        t = j - i + 1
        tie_sum += t ** 3 - t
        i = j + 1
    rank_sums = [0.0] * len(groups)
    for (value, gi), rank in zip(pooled, ranks):
        rank_sums[gi] += rank
    h = 0.0
    for gi, g in enumerate(groups):
        h += rank_sums[gi] ** 2 / len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    correction = 1.0 - tie_sum / (n ** 3 - n)
    if correction > 0:
        h /= correction
    p = float(scipy.stats.chi2.sf(h, len(groups) - 1))
    return h, p


def dprime_oracle(genuine, impostor):
    g = list(genuine)
    i = list(impostor)
    mg = sum(g) / len(g)
    mi = sum(i) / len(i)
    vg = sum((x - mg) ** 2 for x in g) / (len(g) - 1)
    vi = sum((x - mi) ** 2 for x in i) / (len(i) - 1)
    return abs(mi - mg) / math.sqrt((vg + vi) / 2.0)


def auc_trapezoid_oracle(genuine, impostor):
    """Trapezoidal integration of the full empirical ROC (dissimilarity
    convention), for the rank-statistic equivalence check."""
    g = np.asarray(genuine)
    i = np.asarray(impostor)
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([g, i])), [np.inf]])
    tpr = [(g <= t).mean() for t in thresholds]   # genuine accepted
    fpr = [(i <= t).mean() for t in thresholds]   # impostor accepted
    return float(np.trapezoid(tpr, fpr))
