"""Batch evaluation pipeline: judge a corpus of text files n times each, emit
per-item score rows (CSV) and a reliability report (JSON + summary).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .core import parse_rubric, render_score, validate_rubric
from .errors import PreconditionError
from .evaluator import RepeatedEvaluation, evaluate_repeated
from .judge import JudgeClient, JudgeConfig, default_config
from .metrics import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_SEED,
    RatingMatrix,
    ReliabilityReport,
    reliability_report,
)

logger = logging.getLogger(__name__)


@dataclass
class BatchResult:
    items: list[str] = field(default_factory=list)
    failures: dict[str, str] = field(default_factory=dict)
    results: dict[str, RepeatedEvaluation] = field(default_factory=dict)
    report: ReliabilityReport | None = None
    scores_path: Path | None = None
    report_path: Path | None = None
    summary_path: Path | None = None

    @property
    def ok(self) -> bool:
        return not self.failures


def _runs_as_raters(results: dict[str, RepeatedEvaluation], runs: int):
    """Per-dimension rating matrices with the n runs as raters."""
    raters = tuple(f"run{j + 1}" for j in range(runs))
    items = tuple(results)
    first = next(iter(results.values()))
    names = [name for name, _ in first.criterion_stats]
    dimension_matrices = {
        name: RatingMatrix(
            items=items,
            raters=raters,
            values=tuple(
                tuple(float(run.criteria[i].selected) for run in results[item].runs)
                for item in items
            ),
        )
        for i, name in enumerate(names)
    }
    total_matrix = RatingMatrix(
        items=items,
        raters=raters,
        values=tuple(
            tuple(float(run.overall) for run in results[item].runs) for item in items
        ),
    )
    return dimension_matrices, total_matrix


def batch_evaluate(
    client: JudgeClient,
    corpus_dir: str | Path,
    rubric_file: str | Path,
    runs: int,
    out_dir: str | Path,
    bootstrap: int = DEFAULT_BOOTSTRAP,
    seed: int = DEFAULT_SEED,
    config: JudgeConfig | None = None,
) -> BatchResult:
    """Evaluate every file in ``corpus_dir`` ``runs`` times against the rubric.

    Per-file failures are logged and the run continues; the result's ``ok``
    flag (and the CLI exit code) reflects whether everything succeeded.
    """
    corpus = Path(corpus_dir)
    if not corpus.is_dir():
        raise PreconditionError(f"{corpus} is not a directory")
    files = sorted(p for p in corpus.iterdir() if p.is_file())
    if not files:
        raise PreconditionError(f"{corpus} holds no corpus files")
    rubric = parse_rubric(Path(rubric_file).read_text(encoding="utf-8"))
    violations = validate_rubric(rubric)
    if violations:
        raise PreconditionError(
            "rubric is invalid: " + "; ".join(f"{v.code} at {v.path}" for v in violations)
        )
    if config is None:
        config = default_config()
    run_config = JudgeConfig(
        model=config.model,
        temperature=config.temperature,
        retries=config.retries,
        timeout=config.timeout,
        runs=runs,
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = BatchResult(items=[p.name for p in files])
    for path in files:
        try:
            text = path.read_text(encoding="utf-8")
            result.results[path.name] = evaluate_repeated(client, text, rubric, run_config)
        except Exception as exc:
            logger.error("batch item %s failed: %s", path.name, exc)
            result.failures[path.name] = str(exc)

    if result.results:
        names = [c.name for c in rubric.criteria]
        scores_path = out / "scores.csv"
        with scores_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            header = ["item"]
            for name in names + ["total"]:
                header += [f"{name} mean", f"{name} sd"]
            writer.writerow(header)
            for item, repeated in result.results.items():
                row: list[str] = [item]
                for _, stats in repeated.criterion_stats:
                    row += [str(float(stats.mean)), "" if stats.sd is None else str(stats.sd)]
                row += [
                    render_score(repeated.overall_stats.mean),
                    "" if repeated.overall_stats.sd is None else str(repeated.overall_stats.sd),
                ]
                writer.writerow(row)
        result.scores_path = scores_path

        if runs >= 2:
            dimension_matrices, total_matrix = _runs_as_raters(result.results, runs)
            result.report = reliability_report(
                dimension_matrices, total_matrix, bootstrap=bootstrap, seed=seed
            )
            report_path = out / "reliability_report.json"
            report_path.write_text(
                json.dumps(result.report.to_dict(), indent=2), encoding="utf-8"
            )
            result.report_path = report_path

        summary_path = out / "summary.md"
        summary_path.write_text(_summary_markdown(result, rubric.name, runs), encoding="utf-8")
        result.summary_path = summary_path
    return result


def _summary_markdown(result: BatchResult, rubric_name: str, runs: int) -> str:
    lines = [
        "# Batch evaluation summary",
        "",
        f"- rubric: {rubric_name}",
        f"- items: {len(result.items)} ({len(result.failures)} failed)",
        f"- runs per item: {runs}",
        "",
    ]
    if result.report:
        lines.append("| dimension | alpha | 95% CI | mean within-item SD |")
        lines.append("|---|---|---|---|")
        for dim in result.report.dimensions:
            if dim.degenerate or dim.alpha is None:
                alpha, ci = "DEGENERATE", "-"
            else:
                alpha = f"{dim.alpha.point:.3f}"
                ci = f"{dim.alpha.ci_low:.3f}..{dim.alpha.ci_high:.3f}"
            lines.append(f"| {dim.name} | {alpha} | {ci} | {dim.mean_within_item_sd:.3f} |")
        lines.append("")
    if result.failures:
        lines.append("## Failures")
        lines.extend(f"- {item}: {reason}" for item, reason in result.failures.items())
        lines.append("")
    return "\n".join(lines)
