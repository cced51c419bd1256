"""Quality indicators and non-parametric statistics for comparing runs."""

import logging
import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from ._compat import StrEnum
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
import scikit_posthocs as sp
import scipy.stats as ss
from pydantic import BaseModel, field_validator

from .errors import DegenerateSamples, PointBeyondReference
from .mrspace import MRGroup

log = logging.getLogger(__name__)

# bands on |A12 - 0.5|
A12_LEVELS = [0.06, 0.14, 0.21]
EXACT_MWU_LIMIT = 400
# tied samples are enumerated exactly up to this many splits
PERMUTATION_LIMIT = 100_000


class Magnitude(StrEnum):
    NEGLIGIBLE = "negligible"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"

    @property
    def at_least_medium(self) -> bool:
        return self in (Magnitude.MEDIUM, Magnitude.LARGE)


class SampleSet(BaseModel):
    label: str
    values: list[float]

    @field_validator("values")
    @classmethod
    def check_values(cls, values):
        if not values:
            raise ValueError("a sample set needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        return values


@dataclass(frozen=True)
class EffectSize:
    a12: float
    magnitude: Magnitude
    # ">" when the first sample tends to be larger
    direction: str


def _values(sample) -> np.ndarray:
    if isinstance(sample, SampleSet):
        sample = sample.values
    return np.asarray(sample, dtype=float)


def hypervolume(
    front: Iterable[Sequence[float]],
    reference: Sequence[float] = (1.0, 1.0),
) -> float:
    """Area dominated by a 2-D front (both objectives minimized)."""
    points = np.asarray(list(front), dtype=float).reshape(-1, 2)
    ref = np.asarray(reference, dtype=float)
    if not len(points):
        return 0.0
    if np.any(points > ref):
        raise PointBeyondReference(
            f"front has points beyond the reference point {tuple(ref)}"
        )
    order = np.lexsort((points[:, 1], points[:, 0]))
    volume = 0.0
    level = ref[1]
    for f1, f2 in points[order]:
        if f2 < level:
            volume += (ref[0] - f1) * (level - f2)
            level = f2
    return float(volume)


def kruskal_wallis(groups: Sequence) -> tuple[float, float]:
    samples = [_values(g) for g in groups]
    if len(samples) < 2 or any(len(s) < 2 for s in samples):
        raise DegenerateSamples("need two groups of at least two samples")
    if np.ptp(np.concatenate(samples)) == 0:
        log.debug("All samples identical, Kruskal-Wallis p set to 1.")
        return 0.0, 1.0
    h, p = ss.kruskal(*samples)
    return float(h), float(p)


def rank_sum_u(x, y, axis=-1):
    """U of ``x`` from mid-ranks of the pooled samples."""
    n = x.shape[axis]
    ranks = ss.rankdata(np.concatenate([x, y], axis=axis), axis=axis)
    return ranks[..., :n].sum(axis=-1) - n * (n + 1) / 2


def mann_whitney_u(
    a, b, alternative: str = "two-sided"
) -> tuple[float, float]:
    """U of ``a`` and its p value.

    Exact for n*m <= 400 without ties. Tied samples get the exact
    permutation distribution of U while there are at most
    ``PERMUTATION_LIMIT`` ways to split them, the tie-corrected normal
    approximation beyond that.

    """
    x, y = _values(a), _values(b)
    if not len(x) or not len(y):
        raise DegenerateSamples("Mann-Whitney U needs non-empty samples")
    both = np.concatenate([x, y])
    if np.ptp(both) == 0:
        return len(x) * len(y) / 2, 1.0
    ties = len(np.unique(both)) < len(both)
    method = (
        "exact"
        if len(x) * len(y) <= EXACT_MWU_LIMIT and not ties
        else "asymptotic"
    )
    u, p = ss.mannwhitneyu(x, y, alternative=alternative, method=method)
    if ties and math.comb(len(both), len(x)) <= PERMUTATION_LIMIT:
        p = ss.permutation_test(
            (x, y),
            rank_sum_u,
            permutation_type="independent",
            vectorized=True,
            n_resamples=np.inf,
            alternative=alternative,
        ).pvalue
    return float(u), float(min(p, 1.0))


def dunns_test(groups: Sequence[SampleSet]) -> pd.DataFrame:
    """Raw pairwise p values of Dunn's test, indexed by label."""
    labels = [g.label for g in groups]
    if len(set(labels)) != len(labels):
        raise ValueError("sample labels must be unique")
    samples = [_values(g) for g in groups]
    if len(samples) < 2 or any(len(s) < 2 for s in samples):
        raise DegenerateSamples("need two groups of at least two samples")
    if np.ptp(np.concatenate(samples)) == 0:
        return pd.DataFrame(1.0, index=labels, columns=labels)
    data = pd.DataFrame(
        {
            "value": np.concatenate(samples),
            "group": np.concatenate(
                [[label] * len(s) for label, s in zip(labels, samples)]
            ),
        }
    )
    p = sp.posthoc_dunn(data, val_col="value", group_col="group")
    p = p.loc[labels, labels].astype(float)
    np.fill_diagonal(p.values, 1.0)
    return p


def vargha_delaney_a(a, b) -> EffectSize:
    x, y = _values(a), _values(b)
    m, n = len(x), len(y)
    if not m or not n:
        raise DegenerateSamples("A12 needs non-empty samples")
    r = ss.rankdata(np.concatenate([x, y]))
    r1 = r[:m].sum()
    a12 = float((2 * r1 - m * (m + 1)) / (2 * n * m))
    magnitude = list(Magnitude)[bisect_right(A12_LEVELS, abs(a12 - 0.5))]
    direction = ">" if a12 > 0.5 else "<" if a12 < 0.5 else "="
    return EffectSize(a12, magnitude, direction)


def bonferroni_alpha(base_alpha: float, comparisons: int) -> float:
    if comparisons < 1:
        raise ValueError("need at least one comparison")
    return base_alpha / comparisons


def composition_ratio(groups: Iterable[MRGroup]) -> float:
    """Share of multi-part CmbMRs among all members."""
    sizes = [len(member) for group in groups for member in group]
    if not sizes:
        return 0.0
    return sum(1 for size in sizes if size > 1) / len(sizes)


def perturbation_frequency(groups: Iterable[MRGroup]) -> Counter:
    return Counter(
        pid
        for group in groups
        for member in group
        for pid in member.perturbation_ids
    )


def contains_any(
    groups: Iterable[MRGroup], perturbation_ids: Iterable[str]
) -> bool:
    wanted = set(perturbation_ids)
    return any(
        wanted.intersection(member.perturbation_ids)
        for group in groups
        for member in group
    )
