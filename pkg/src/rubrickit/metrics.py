"""Reliability metrics: Krippendorff's alpha (ordinal/interval) with bootstrap
CIs, mean within-item SD, and Quadratic Weighted Kappa.

Repeated judge runs are treated as raters over items; all estimators work on a
RatingMatrix (items x raters, missing cells allowed).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateAgreementError, PreconditionError

DEFAULT_BOOTSTRAP = 1000
DEFAULT_SEED = 20240811

ORDINAL = "ordinal"
INTERVAL = "interval"


@dataclass(frozen=True)
class RatingMatrix:
    """Items x raters grid of optional numeric ratings."""

    items: tuple[str, ...]
    raters: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]

    def __post_init__(self):
        if len(self.raters) < 2:
            raise PreconditionError("a rating matrix needs at least 2 raters")
        if len(self.values) != len(self.items):
            raise PreconditionError("one row of values per item is required")
        for i, row in enumerate(self.values):
            if len(row) != len(self.raters):
                raise PreconditionError(f"item {self.items[i]!r} has {len(row)} cells")
        if not any(self.pairable(i) for i in range(len(self.items))):
            raise PreconditionError("at least one item needs 2 or more ratings")

    def pairable(self, index: int) -> bool:
        return sum(1 for v in self.values[index] if v is not None) >= 2

    def row(self, index: int) -> list[float]:
        return [v for v in self.values[index] if v is not None]


def rating_matrix(rows: Sequence[Sequence[float | None]], raters: Sequence[str] | None = None,
                  items: Sequence[str] | None = None) -> RatingMatrix:
    """Convenience constructor from a plain grid."""
    n_raters = len(rows[0]) if rows else 0
    return RatingMatrix(
        items=tuple(items or (f"item{i + 1}" for i in range(len(rows)))),
        raters=tuple(raters or (f"rater{j + 1}" for j in range(n_raters))),
        values=tuple(tuple(row) for row in rows),
    )


def rating_matrix_from_csv(source: str) -> RatingMatrix:
    """Read a matrix from CSV text or a file path.

    Header row carries rater ids, first column item ids, empty cells are
    missing ratings.
    """
    if "\n" in source:
        text = source
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if len(rows) < 2:
        raise PreconditionError("CSV needs a header row and at least one item row")
    raters = tuple(cell.strip() for cell in rows[0][1:])
    items: list[str] = []
    values: list[tuple[float | None, ...]] = []
    for row in rows[1:]:
        items.append(row[0].strip())
        cells: list[float | None] = []
        for cell in row[1 : len(raters) + 1]:
            cell = cell.strip()
            cells.append(float(cell) if cell else None)
        cells.extend([None] * (len(raters) - len(cells)))
        values.append(tuple(cells))
    return RatingMatrix(items=tuple(items), raters=raters, values=tuple(values))


# ---------------------------------------------------------------------------
# Krippendorff's alpha (coincidence-matrix formulation)
# ---------------------------------------------------------------------------


def _coincidences(matrix: RatingMatrix) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Coincidence matrix over the observed value domain.

    Each item with m >= 2 ratings contributes 1/(m-1) per ordered pair of
    distinct rating slots. Returns (coincidence matrix, value margins, domain).
    """
    domain = sorted({v for i in range(len(matrix.items)) for v in matrix.row(i)})
    index = {v: k for k, v in enumerate(domain)}
    size = len(domain)
    coincidence = np.zeros((size, size))
    for i in range(len(matrix.items)):
        row = matrix.row(i)
        m = len(row)
        if m < 2:
            continue
        share = 1.0 / (m - 1)
        for a in range(m):
            for b in range(m):
                if a != b:
                    coincidence[index[row[a]], index[row[b]]] += share
    margins = coincidence.sum(axis=1)
    return coincidence, margins, domain


def _difference_matrix(domain: list[float], margins: np.ndarray, metric: str) -> np.ndarray:
    size = len(domain)
    if metric == INTERVAL:
        values = np.asarray(domain)
        return (values[:, None] - values[None, :]) ** 2
    if metric == ORDINAL:
        # Squared cumulative-margin distance: sum the margins of every value
        # from v to w inclusive, minus half the two endpoints.
        delta = np.zeros((size, size))
        for a in range(size):
            for b in range(size):
                lo, hi = min(a, b), max(a, b)
                between = margins[lo : hi + 1].sum()
                delta[a, b] = (between - (margins[a] + margins[b]) / 2.0) ** 2
        return delta
    raise PreconditionError(f"unknown metric {metric!r}; use 'ordinal' or 'interval'")


def _alpha_point(matrix: RatingMatrix, metric: str) -> float:
    coincidence, margins, domain = _coincidences(matrix)
    n = margins.sum()
    if len(domain) <= 1:
        raise DegenerateAgreementError(
            "all ratings are identical; expected disagreement is zero and alpha is undefined"
        )
    delta = _difference_matrix(domain, margins, metric)
    observed = float((coincidence * delta).sum()) / n
    expected = float((np.outer(margins, margins) * delta).sum() - (margins * np.diag(delta)).sum())
    expected /= n * (n - 1)
    if expected == 0:
        raise DegenerateAgreementError("expected disagreement is zero; alpha is undefined")
    return 1.0 - observed / expected


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    ci_low: float
    ci_high: float
    n_items: int
    n_resamples: int

    def __post_init__(self):
        if not self.ci_low <= self.point <= self.ci_high:
            raise PreconditionError("confidence interval must bracket the point estimate")


def _bootstrap_ci(
    point: float,
    statistic,
    n_units: int,
    resamples: int,
    seed: int,
) -> tuple[float, float]:
    """Percentile bootstrap with per-resample child generators.

    Child generator i is seeded from (seed, i), so the CI does not depend on
    the order resamples are evaluated in. Degenerate resamples are skipped.
    """
    stats: list[float] = []
    for i in range(resamples):
        rng = np.random.default_rng([seed, i])
        picks = rng.integers(0, n_units, size=n_units)
        try:
            stats.append(statistic(picks))
        except DegenerateAgreementError:
            continue
    if not stats:
        return point, point
    low, high = np.percentile(stats, [2.5, 97.5])
    # Widen if needed so the interval always brackets the point estimate.
    return min(float(low), point), max(float(high), point)


def krippendorff_alpha(
    matrix: RatingMatrix,
    metric: str = ORDINAL,
    bootstrap: int = DEFAULT_BOOTSTRAP,
    seed: int = DEFAULT_SEED,
) -> IntervalEstimate:
    """Alpha over the coincidence matrix with the chosen difference function.

    interval: squared value difference. ordinal: squared cumulative-margin
    distance. The 95% CI comes from an item-level bootstrap.
    """
    point = _alpha_point(matrix, metric)
    rows = list(matrix.values)
    items = list(matrix.items)

    def statistic(picks: np.ndarray) -> float:
        try:
            resampled = RatingMatrix(
                items=tuple(f"resample{k}" for k in range(len(picks))),
                raters=matrix.raters,
                values=tuple(rows[p] for p in picks),
            )
        except PreconditionError as exc:
            raise DegenerateAgreementError(str(exc)) from exc
        return _alpha_point(resampled, metric)

    low, high = (point, point) if bootstrap == 0 else _bootstrap_ci(
        point, statistic, len(items), bootstrap, seed
    )
    return IntervalEstimate(
        point=point, ci_low=low, ci_high=high, n_items=len(items), n_resamples=bootstrap
    )


# ---------------------------------------------------------------------------
# Within-item standard deviation
# ---------------------------------------------------------------------------


def within_item_sd(matrix: RatingMatrix) -> float:
    """Mean of per-item sample standard deviations (n-1 denominator)."""
    sds: list[float] = []
    for i in range(len(matrix.items)):
        row = matrix.row(i)
        if len(row) < 2:
            raise PreconditionError(
                f"item {matrix.items[i]!r} has fewer than 2 ratings; SD is undefined"
            )
        sds.append(float(np.std(row, ddof=1)))
    return float(np.mean(sds))


# ---------------------------------------------------------------------------
# Quadratic Weighted Kappa
# ---------------------------------------------------------------------------


def qwk(
    reference: Sequence[int],
    candidate: Sequence[int],
    scale: tuple[int, int],
    bootstrap: int = DEFAULT_BOOTSTRAP,
    seed: int = DEFAULT_SEED,
) -> IntervalEstimate:
    """Chance-corrected agreement with quadratic distance weights.

    Weights are (i-j)^2/(K-1)^2 over the K scale bins; expectation uses the
    marginal product. The 95% CI comes from a pairwise bootstrap.
    """
    lo, hi = scale
    if hi <= lo:
        raise PreconditionError(f"scale max must exceed min, got {scale}")
    if len(reference) != len(candidate):
        raise PreconditionError("reference and candidate must have equal length")
    if len(reference) < 2:
        raise PreconditionError("at least 2 rating pairs are required")
    for label, ratings in (("reference", reference), ("candidate", candidate)):
        for r in ratings:
            if not isinstance(r, (int, np.integer)) or not lo <= r <= hi:
                raise PreconditionError(
                    f"{label} rating {r!r} is not an integer within {scale}"
                )
    if len(set(reference)) == 1 and len(set(candidate)) == 1:
        raise DegenerateAgreementError(
            "both raters are constant; chance-corrected agreement is undefined"
        )

    ref = np.asarray(reference, dtype=int) - lo
    cand = np.asarray(candidate, dtype=int) - lo
    point = _qwk_point(ref, cand, hi - lo + 1)

    def statistic(picks: np.ndarray) -> float:
        r, c = ref[picks], cand[picks]
        if len(set(r.tolist())) == 1 and len(set(c.tolist())) == 1:
            raise DegenerateAgreementError("degenerate resample")
        return _qwk_point(r, c, hi - lo + 1)

    low, high = (point, point) if bootstrap == 0 else _bootstrap_ci(
        point, statistic, len(reference), bootstrap, seed
    )
    return IntervalEstimate(
        point=point, ci_low=low, ci_high=high, n_items=len(reference), n_resamples=bootstrap
    )


def _qwk_point(ref: np.ndarray, cand: np.ndarray, bins: int) -> float:
    grid = np.arange(bins)
    weights = (grid[:, None] - grid[None, :]) ** 2 / (bins - 1) ** 2
    observed = np.zeros((bins, bins))
    np.add.at(observed, (ref, cand), 1.0)
    ref_hist = observed.sum(axis=1)
    cand_hist = observed.sum(axis=0)
    expected = np.outer(ref_hist, cand_hist) / len(ref)
    denominator = float((weights * expected).sum())
    if denominator == 0:
        raise DegenerateAgreementError("expected weighted disagreement is zero")
    return 1.0 - float((weights * observed).sum()) / denominator


# ---------------------------------------------------------------------------
# Run averaging and binning
# ---------------------------------------------------------------------------


def average_runs_then_bin(runs: Sequence[float | Fraction], scale: tuple[int, int]) -> int:
    """Mean over runs, rounded half-up to the nearest scale integer."""
    if not runs:
        raise PreconditionError("at least one run is required")
    lo, hi = scale
    mean = sum((Fraction(r) for r in runs), Fraction(0)) / len(runs)
    binned = int((mean + Fraction(1, 2)).__floor__())
    return max(lo, min(hi, binned))


def binned_ratings(repeated, total_scale: tuple[int, int] = (0, 100)) -> dict[str, int]:
    """Per-dimension binned means of a RepeatedEvaluation: criteria to their
    rubric scale, the total to 0-100."""
    runs = repeated.runs
    scale = runs[0].scale
    out: dict[str, int] = {}
    for i, criterion in enumerate(runs[0].criteria):
        out[criterion.name] = average_runs_then_bin(
            [run.criteria[i].selected for run in runs], (1, scale)
        )
    out["total"] = average_runs_then_bin([run.overall for run in runs], total_scale)
    return out


# ---------------------------------------------------------------------------
# Reliability report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimensionReliability:
    name: str
    alpha: IntervalEstimate | None
    degenerate: bool
    mean_within_item_sd: float
    qwk: IntervalEstimate | None = None


@dataclass(frozen=True)
class ReliabilityReport:
    dimensions: tuple[DimensionReliability, ...]
    n_items: int
    n_raters: int

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_raters": self.n_raters,
            "dimensions": [
                {
                    "name": d.name,
                    "alpha": None
                    if d.alpha is None
                    else {
                        "point": d.alpha.point,
                        "ci_low": d.alpha.ci_low,
                        "ci_high": d.alpha.ci_high,
                    },
                    "degenerate": d.degenerate,
                    "mean_within_item_sd": d.mean_within_item_sd,
                    "qwk": None
                    if d.qwk is None
                    else {"point": d.qwk.point, "ci_low": d.qwk.ci_low, "ci_high": d.qwk.ci_high},
                }
                for d in self.dimensions
            ],
        }


def reliability_report(
    dimension_matrices: dict[str, RatingMatrix],
    total_matrix: RatingMatrix,
    bootstrap: int = DEFAULT_BOOTSTRAP,
    seed: int = DEFAULT_SEED,
) -> ReliabilityReport:
    """Alpha (ordinal per dimension, interval for the total) plus mean
    within-item SD per dimension. DEGENERATE_AGREEMENT is reported as a flag,
    not an error, so pipelines keep running."""

    def estimate(matrix: RatingMatrix, metric: str):
        try:
            return krippendorff_alpha(matrix, metric, bootstrap=bootstrap, seed=seed), False
        except DegenerateAgreementError:
            return None, True

    dims = []
    for name, matrix in dimension_matrices.items():
        alpha, degenerate = estimate(matrix, ORDINAL)
        dims.append(
            DimensionReliability(
                name=name,
                alpha=alpha,
                degenerate=degenerate,
                mean_within_item_sd=within_item_sd(matrix),
            )
        )
    alpha, degenerate = estimate(total_matrix, INTERVAL)
    dims.append(
        DimensionReliability(
            name="total",
            alpha=alpha,
            degenerate=degenerate,
            mean_within_item_sd=within_item_sd(total_matrix),
        )
    )
    any_matrix = total_matrix
    return ReliabilityReport(
        dimensions=tuple(dims), n_items=len(any_matrix.items), n_raters=len(any_matrix.raters)
    )
