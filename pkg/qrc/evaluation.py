"""
Evaluation: ground-truth correlations, top-k reports, Mann-Whitney U test
and cumulative degree distributions
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy import stats

from .algorithms import ScoreSet
from .bipartite_core import Action, AuthorPaperNetwork, BipartiteNetwork, ScoreVector, Side
from .error_handling import (
    DimensionMismatchException,
    RecordNotFoundException,
    ValidationException,
)
from .simulator import GroundTruth

logger = logging.getLogger("qrc.evaluation")

# ======================
# Correlations
# ======================

class Statistic(NamedTuple):
    """A value that may be undefined; `reason` says why"""
    value: Optional[float]
    reason: Optional[str] = None

    @property
    def missing(self) -> bool:
        return self.value is None


def pearson(x: Sequence[float], y: Sequence[float]) -> Statistic:
    """Product-moment correlation; undefined for constant input"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchException("pearson inputs", x.shape[0], y.shape[0])
    if x.shape[0] < 2:
        return Statistic(None, "fewer than two observations")
    if np.ptp(x) == 0.0:
        return Statistic(None, "first sample has zero variance")
    if np.ptp(y) == 0.0:
        return Statistic(None, "second sample has zero variance")

    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    # Clamp r in [-1, +1] in case of floating-point error.
    return Statistic(min(1.0, max(-1.0, r)))


@dataclass(frozen=True)
class CorrelationReport:
    """Estimated vs true: quality-fitness, reputation-ability, quality-age, reputation-activity"""
    c_qf: Optional[float]
    c_ra: Optional[float]
    c_qt: Optional[float]
    c_rnu: Optional[float]
    reasons: Dict[str, str] = field(default_factory=dict)

    FIELDS = ("c_qf", "c_ra", "c_qt", "c_rnu")

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in self.FIELDS}


def correlation_report(scores: ScoreSet, truth: GroundTruth) -> CorrelationReport:
    quality = scores.quality.values
    reputation = scores.reputation.values
    if quality.shape[0] != truth.fitness.shape[0]:
        raise DimensionMismatchException("item scores vs fitness", truth.fitness.shape[0], quality.shape[0])
    if reputation.shape[0] != truth.ability.shape[0]:
        raise DimensionMismatchException("user scores vs ability", truth.ability.shape[0], reputation.shape[0])

    pairs = {
        "c_qf": (quality, truth.fitness),
        "c_ra": (reputation, truth.ability),
        "c_qt": (quality, truth.created_at),
        "c_rnu": (reputation, truth.activity),
    }
    values, reasons = {}, {}
    for name, (estimate, true) in pairs.items():
        result = pearson(estimate, true)
        values[name] = result.value
        if result.missing:
            reasons[name] = result.reason
            logger.warning(f"{name} undefined: {result.reason}")
    return CorrelationReport(**values, reasons=reasons)

# ======================
# Top-k Reports
# ======================

class TopK(NamedTuple):
    ids: np.ndarray
    truncated: bool


def top_k(scores: Union[ScoreVector, Sequence[float]], k: int) -> TopK:
    """Indices of the k largest scores, ties broken by ascending index"""
    if k < 1:
        raise ValidationException(f"k must be at least 1, got {k}")
    values = scores.values if isinstance(scores, ScoreVector) else np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(values.shape[0]), -values))
    truncated = k > values.shape[0]
    if truncated:
        logger.warning(f"top-{k} requested from {values.shape[0]} nodes; returning all")
    return TopK(order[:k], truncated)


@dataclass(frozen=True)
class PaperMetadata:
    paper_id: Any
    submission_day: int
    downloads: int
    citations: int
    impact_factor: float = 0.0


class MetricSummary(NamedTuple):
    mean: float
    se: float


def summarize(values: Sequence[float]) -> MetricSummary:
    """Mean and standard error (sample sd, n-1 denominator); SE of one value is 0"""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        return MetricSummary(math.nan, math.nan)
    if values.shape[0] == 1:
        return MetricSummary(float(values[0]), 0.0)
    return MetricSummary(float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.shape[0])))


@dataclass(frozen=True)
class TopKReport:
    k: int
    paper_ids: Tuple[Any, ...]
    submission_day: MetricSummary
    downloads: MetricSummary
    citations: MetricSummary
    impact_factor: MetricSummary
    singleton: bool = False
    truncated: bool = False

    METRICS = ("submission_day", "downloads", "citations", "impact_factor")

    def as_dict(self) -> Dict[str, float]:
        row = {"k": self.k}
        for name in self.METRICS:
            summary = getattr(self, name)
            row[f"{name}_mean"] = summary.mean
            row[f"{name}_se"] = summary.se
        return row


def top_k_report(ranking: Sequence[Any], metadata: Mapping[Any, PaperMetadata], k: int = 20) -> TopKReport:
    """Mean and SE of the basic paper metrics over the first k ranked papers"""
    if k < 1:
        raise ValidationException(f"k must be at least 1, got {k}")
    chosen = list(ranking[:k])
    records = []
    for paper_id in chosen:
        if paper_id not in metadata:
            raise RecordNotFoundException("paper metadata", paper_id)
        records.append(metadata[paper_id])

    truncated = len(chosen) < k
    if truncated:
        logger.warning(f"top-{k} report over only {len(chosen)} ranked papers")
    if len(chosen) == 1:
        logger.warning("top-k report over a single paper: standard errors reported as 0")

    return TopKReport(
        k=len(chosen),
        paper_ids=tuple(chosen),
        submission_day=summarize([r.submission_day for r in records]),
        downloads=summarize([r.downloads for r in records]),
        citations=summarize([r.citations for r in records]),
        impact_factor=summarize([r.impact_factor for r in records]),
        singleton=len(chosen) == 1,
        truncated=truncated,
    )


class AuthorRow(NamedTuple):
    rank: int
    name: Any
    credit: float
    papers: int
    mean_downloads: float


@dataclass(frozen=True)
class TopAuthorsReport:
    rows: Tuple[AuthorRow, ...]
    h_index: Optional[MetricSummary] = None
    h_index_known: int = 0


def top_authors_report(
    credit: ScoreVector,
    authors: AuthorPaperNetwork,
    downloads: Sequence[float],
    k: int = 10,
    h_index: Optional[Mapping[Any, float]] = None,
) -> TopAuthorsReport:
    """Top-k authors by credit with paper counts, mean downloads and mean h-index"""
    if len(credit) != authors.n_authors:
        raise DimensionMismatchException("author credit", authors.n_authors, len(credit))
    downloads = np.asarray(downloads, dtype=np.float64)
    if downloads.shape[0] != authors.n_papers:
        raise DimensionMismatchException("downloads per paper", authors.n_papers, downloads.shape[0])

    rows = []
    matrix = authors.forward
    for rank, m in enumerate(top_k(credit, k).ids, start=1):
        papers = matrix.indices[matrix.indptr[m]:matrix.indptr[m + 1]]
        rows.append(AuthorRow(
            rank=rank,
            name=authors.row_labels[m],
            credit=float(credit.values[m]),
            papers=int(papers.shape[0]),
            mean_downloads=float(downloads[papers].mean()) if papers.shape[0] else 0.0,
        ))

    summary, known = None, 0
    if h_index is not None:
        values = [h_index[row.name] for row in rows if row.name in h_index]
        known = len(values)
        if values:
            summary = summarize(values)
    return TopAuthorsReport(tuple(rows), summary, known)

# ======================
# Mann-Whitney U
# ======================

class MannWhitneyResult(NamedTuple):
    u: float
    p: float
    method: str


ALTERNATIVES = ("two-sided", "less", "greater")
NORMAL_MIN_SIZE = 8


def _exact_counts(doubled_ranks: np.ndarray, n_a: int) -> np.ndarray:
    """counts[s] = number of size-n_a subsets whose doubled rank sum is s"""
    top = int(np.sort(doubled_ranks)[::-1][:n_a].sum())
    counts = np.zeros((n_a + 1, top + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for taken, r in enumerate(doubled_ranks, start=1):
        r = int(r)
        for j in range(min(taken, n_a), 0, -1):
            counts[j, r:] += counts[j - 1, :top + 1 - r]
    return counts[n_a]


def mann_whitney_u(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    alternative: str = "two-sided",
    method: str = "auto",
) -> MannWhitneyResult:
    """
    U statistic of sample_a with midranks for ties.

    Exact conditional distribution when either sample is smaller than 8,
    otherwise the tie-corrected normal approximation with continuity
    correction. `less` tests whether sample_a tends to be smaller.
    """
    if alternative not in ALTERNATIVES:
        raise ValidationException(f"alternative must be one of {ALTERNATIVES}, got '{alternative}'")
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    n_a, n_b = a.shape[0], b.shape[0]
    if n_a == 0 or n_b == 0:
        raise ValidationException("both samples must be nonempty")

    ranks = stats.rankdata(np.concatenate([a, b]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    mean = n_a * n_b / 2.0

    if method == "auto":
        method = "exact" if min(n_a, n_b) < NORMAL_MIN_SIZE else "normal"

    if method == "exact":
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        counts = _exact_counts(doubled, n_a)
        offset = n_a * (n_a + 1)
        u2 = np.arange(counts.shape[0]) - offset            # doubled U per rank sum
        u2_obs = int(round(2.0 * u))
        total = counts.sum()
        if alternative == "less":
            hits = counts[u2 <= u2_obs].sum()
        elif alternative == "greater":
            hits = counts[u2 >= u2_obs].sum()
        else:
            centre = n_a * n_b
            hits = counts[np.abs(u2 - centre) >= abs(u2_obs - centre)].sum()
        return MannWhitneyResult(u, min(1.0, float(hits / total)), "exact")

    if method != "normal":
        raise ValidationException(f"unknown method '{method}'")

    n = n_a + n_b
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum()) / (n * (n - 1))
    variance = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if variance <= 0.0:
        return MannWhitneyResult(u, 1.0, "normal")
    sigma = math.sqrt(variance)

    if alternative == "less":
        p = stats.norm.cdf((u - mean + 0.5) / sigma)
    elif alternative == "greater":
        p = stats.norm.sf((u - mean - 0.5) / sigma)
    else:
        p = 2.0 * stats.norm.sf(max(abs(u - mean) - 0.5, 0.0) / sigma)
    return MannWhitneyResult(u, min(1.0, float(p)), "normal")

# ======================
# Degree Distributions
# ======================

def degree_distribution(
    net: BipartiteNetwork,
    side: Side,
    action: Optional[Action] = None,
    exclude: Iterable[Any] = (),
) -> List[Tuple[int, float]]:
    """
    (degree, fraction of nodes with at least that degree), ascending degree.

    Only nodes with a positive degree under the action filter are counted.
    Links of excluded row-side nodes are dropped before counting.
    """
    net.other(side)  # validates the side
    mask = np.ones(net.edge_count, dtype=bool)
    if action is not None:
        if net.edge_actions is None:
            raise ValidationException(f"{type(net).__name__} carries no action tags")
        mask &= net.edge_actions == action.code

    exclude = set(exclude)
    if exclude:
        index = net.index(net.row_side)
        dropped = [index[label] for label in exclude if label in index]
        if dropped:
            mask &= ~np.isin(net.row_of_edges(), dropped)

    if side == net.row_side:
        endpoints = net.row_of_edges()[mask]
    else:
        endpoints = net.forward.indices[mask]
    degree = np.bincount(endpoints, minlength=net.size(side))
    degree = degree[degree > 0]
    if degree.shape[0] == 0:
        return []

    values, counts = np.unique(degree, return_counts=True)
    at_least = np.cumsum(counts[::-1])[::-1]
    return [(int(d), float(c) / degree.shape[0]) for d, c in zip(values, at_least)]
