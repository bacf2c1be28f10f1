"""Cluster agreement, survival analysis, and new-sample insertion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PartitionTree, as_values, ensure_valid, tree_from_partitions
from .metrics import FolderWeights, _weighted_averaging
from .transforms import build_averaging, centroids as folder_centroids


def clusters_at_level(tree: PartitionTree, level: int) -> np.ndarray:
    """Label each axis index by the folder that holds it at one level.

    Labels are folder positions within the level (0..n(l)-1, ascending
    smallest member), so level 0 gives singletons and level L one label.
    """
    ensure_valid(tree)
    if not 0 <= level <= tree.n_levels:
        raise ValueError(f"level must be in [0, {tree.n_levels}]")
    labels = np.empty(tree.axis_size, dtype=np.int64)
    for pos, fid in enumerate(tree.levels[level]):
        labels[list(tree.folders[fid].members)] = pos
    return labels


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _check_labels(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise ValueError("label vectors must be equal-length and non-empty")
    return a, b


def rand_index(a, b) -> float:
    """Fraction of index pairs on which two labelings agree."""
    a, b = _check_labels(a, b)
    n = a.size
    if n < 2:
        return 1.0
    table = _contingency(a, b)
    same_both = (table * (table - 1) // 2).sum()
    same_a = sum(r * (r - 1) // 2 for r in table.sum(axis=1))
    same_b = sum(c * (c - 1) // 2 for c in table.sum(axis=0))
    pairs = n * (n - 1) // 2
    agree = pairs + 2 * same_both - same_a - same_b
    return float(agree / pairs)


def adjusted_rand_index(a, b) -> float:
    """Rand index corrected for chance under the hypergeometric model.

    Degenerate cases where the correction denominator vanishes (both
    labelings all-singletons or all-one-cluster) return 1.0.
    """
    a, b = _check_labels(a, b)
    n = a.size
    table = _contingency(a, b)
    sum_cells = (table * (table - 1) // 2).sum()
    sum_a = sum(r * (r - 1) // 2 for r in table.sum(axis=1))
    sum_b = sum(c * (c - 1) // 2 for c in table.sum(axis=0))
    pairs = n * (n - 1) // 2
    expected = sum_a * sum_b / pairs if pairs else 0.0
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def variation_of_information(a, b) -> float:
    """VI(a, b) = H(a|b) + H(b|a) in nats; zero iff the labelings match."""
    a, b = _check_labels(a, b)
    n = a.size
    table = _contingency(a, b)
    ra = table.sum(axis=1)
    cb = table.sum(axis=0)
    vi = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            nij = table[i, j]
            if nij == 0:
                continue
            p = nij / n
            vi -= p * (math.log(nij / ra[i]) + math.log(nij / cb[j]))
    return max(vi, 0.0)


@dataclass(frozen=True)
class SurvivalCohort:
    """Right-censored survival data: time, event flag, group label per subject."""

    times: np.ndarray
    events: np.ndarray
    groups: tuple[str, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        e = np.asarray(self.events, dtype=bool)
        g = tuple(str(x) for x in self.groups)
        if t.ndim != 1 or t.shape != e.shape or len(g) != t.size or t.size == 0:
            raise ValueError("times, events and groups must be equal-length and non-empty")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("times must be finite and non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "events", e)
        object.__setattr__(self, "groups", g)

    def group_labels(self) -> list[str]:
        return sorted(set(self.groups))


def kaplan_meier(cohort: SurvivalCohort, group: str | None = None) -> np.ndarray:
    """Product-limit survival curve, rows (event time, survival).

    Subjects censored at an event time stay in the risk set for that
    time.  Only event times produce steps; an all-censored cohort
    yields an empty curve (survival stays 1).
    """
    if group is None:
        mask = np.ones(cohort.times.size, dtype=bool)
    else:
        mask = np.array([g == group for g in cohort.groups])
        if not mask.any():
            raise ValueError(f"no subjects in group {group!r}")
    times = cohort.times[mask]
    events = cohort.events[mask]

    curve = []
    s = 1.0
    for t in np.unique(times[events]):
        at_risk = int((times >= t).sum())
        deaths = int(((times == t) & events).sum())
        s *= 1.0 - deaths / at_risk
        curve.append((float(t), s))
    return np.asarray(curve, dtype=np.float64).reshape(-1, 2)


def _chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution via incomplete gamma."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if x <= 0:
        return 1.0
    a = df / 2.0
    z = x / 2.0
    if z < a + 1.0:
        # lower series: P(a, z) = z^a e^-z / Gamma(a) * sum z^k / (a)_k
        term = 1.0 / a
        total = term
        k = a
        for _ in range(1000):
            k += 1.0
            term *= z / k
            total += term
            if abs(term) < abs(total) * 1e-15:
                break
        p = total * math.exp(a * math.log(z) - z - math.lgamma(a))
        return max(0.0, min(1.0, 1.0 - p))
    # continued fraction for Q(a, z) (modified Lentz)
    tiny = 1e-300
    b = z + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    q = h * math.exp(a * math.log(z) - z - math.lgamma(a))
    return max(0.0, min(1.0, q))


@dataclass(frozen=True)
class LogRankResult:
    statistic: float
    df: int
    p_value: float


def log_rank(cohort: SurvivalCohort) -> LogRankResult:
    """Log-rank test that the survival curves of the groups coincide.

    Uses the standard observed-minus-expected statistic with the
    hypergeometric variance, chi-square with (groups - 1) degrees of
    freedom.  A cohort with no events at all gives statistic 0, p 1.
    """
    labels = cohort.group_labels()
    k = len(labels)
    if k < 2:
        raise ValueError("log-rank needs at least two groups")
    gidx = np.array([labels.index(g) for g in cohort.groups])
    times = cohort.times
    events = cohort.events
    df = k - 1

    if not events.any():
        return LogRankResult(0.0, df, 1.0)

    o_minus_e = np.zeros(k)
    cov = np.zeros((k, k))
    for t in np.unique(times[events]):
        at_risk = times >= t
        died = events & (times == t)
        n_t = int(at_risk.sum())
        d_t = int(died.sum())
        n_g = np.array([(at_risk & (gidx == g)).sum() for g in range(k)], dtype=np.float64)
        d_g = np.array([(died & (gidx == g)).sum() for g in range(k)], dtype=np.float64)
        o_minus_e += d_g - d_t * n_g / n_t
        if n_t > 1:
            frac = n_g / n_t
            scale = d_t * (n_t - d_t) / (n_t - 1)
            cov += scale * (np.diag(frac) - np.outer(frac, frac))

    z = o_minus_e[:df]
    v = cov[:df, :df]
    try:
        stat = float(z @ np.linalg.solve(v, z))
    except np.linalg.LinAlgError:
        stat = float(z @ np.linalg.pinv(v) @ z)
    stat = max(stat, 0.0)
    return LogRankResult(stat, df, _chi2_sf(stat, df))


@dataclass(frozen=True)
class InsertionResult:
    assignments: np.ndarray  # folder id at level 1 of the training tree, per new sample
    hierarchy: PartitionTree


def insert_samples(
    train_data,
    tree_x: PartitionTree,
    tree_y: PartitionTree,
    weights_x: FolderWeights,
    new_samples,
) -> InsertionResult:
    """Place held-out observations into a trained observation tree.

    Each new sample (a column of features) is assigned to the level-1
    folder of the observation tree whose centroid is nearest in the
    feature-tree metric; ties go to the smallest folder id.  The new
    samples inherit a hierarchy from the training tree's levels, with
    folders that received no sample dropped.
    """
    values = as_values(train_data)
    ensure_valid(tree_x)
    ensure_valid(tree_y)
    if values.shape != (tree_x.axis_size, tree_y.axis_size):
        raise ValueError("training matrix does not match the two tree axes")
    new = np.asarray(new_samples, dtype=np.float64)
    if new.ndim == 1:
        new = new[:, None]
    if new.shape[0] != tree_x.axis_size:
        raise ValueError("new samples must have one row per feature")
    if not np.all(np.isfinite(new)):
        raise ValueError("new samples contain non-finite entries")

    level1 = list(tree_y.levels[1])
    cent = folder_centroids(build_averaging(tree_y), values, axis="cols")[:, level1]
    wm = _weighted_averaging(tree_x, weights_x)
    cent_coeff = np.asarray(wm @ cent)
    new_coeff = np.asarray(wm @ new)
    m = new.shape[1]
    assignments = np.empty(m, dtype=np.int64)
    for s in range(m):
        dist = np.abs(cent_coeff - new_coeff[:, [s]]).sum(axis=0)
        assignments[s] = level1[int(np.argmin(dist))]  # argmin takes the smallest id on ties

    partitions: list[list[tuple[int, ...]]] = [[(i,) for i in range(m)]]
    for level in range(1, tree_y.n_levels + 1):
        parts = []
        for fid in tree_y.levels[level]:
            anc = set(tree_y.descendants(fid))
            got = tuple(s for s in range(m) if assignments[s] in anc)
            if got:
                parts.append(got)
        partitions.append(parts)
    hierarchy = tree_from_partitions(m, partitions)
    return InsertionResult(assignments=assignments, hierarchy=hierarchy)
