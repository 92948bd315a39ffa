"""Batch CLI: evaluate corpora, qualify and validate rubrics, request
revisions, compute reliability metrics, and serve the HTTP API.

Judge configuration comes from the environment: JUDGE_API_KEY /
JUDGE_BASE_URL / JUDGE_MODEL for a live backend, or JUDGE_SCRIPT pointing at
a scripted-response file for fully offline runs.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .batch import batch_evaluate
from .core import (
    parse_rubric,
    render_score,
    score_band,
    serialize_rubric,
    validate_rubric,
)
from .errors import DegenerateAgreementError, EngineError
from .evaluator import evaluate, holistic_evaluate_writing
from .feedback import RevisionGoal
from .judge import client_from_env, default_config
from .metrics import INTERVAL, ORDINAL, krippendorff_alpha, qwk, rating_matrix_from_csv, within_item_sd
from .studio import howto_rubric, qualify_rubric


def _load_rubric(path: str):
    return parse_rubric(Path(path).read_text(encoding="utf-8"))


def _echo_evaluation(doc_name: str, evaluation) -> None:
    click.echo(f"{doc_name}: {render_score(evaluation.overall)}/100 "
               f"({score_band(evaluation.overall)})")
    for criterion in evaluation.criteria:
        click.echo(f"  {criterion.name}: {criterion.selected}/{evaluation.scale}")


@click.group()
def main():
    """Rubric-based judging, revision feedback, and reliability metrics."""


@main.command()
@click.option("--rubric", "rubric_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--runs", default=1, show_default=True, help="Judge runs per item.")
@click.option("--holistic", is_flag=True, help="Use the baseline holistic judge instead.")
@click.option("--out", "out_dir", default="batch_out", show_default=True,
              help="Report directory for directory inputs.")
def evaluate_cmd(rubric_path, input_path, runs, holistic, out_dir):
    """Evaluate a file (or every file in a directory) against a rubric."""
    client = client_from_env()
    path = Path(input_path)
    try:
        if path.is_dir():
            result = batch_evaluate(client, path, rubric_path, runs, out_dir)
            click.echo(f"wrote {result.scores_path}")
            if result.report_path:
                click.echo(f"wrote {result.report_path}")
            if result.summary_path:
                click.echo(f"wrote {result.summary_path}")
            for item, reason in result.failures.items():
                click.echo(f"FAILED {item}: {reason}", err=True)
            sys.exit(0 if result.ok else 1)
        text = path.read_text(encoding="utf-8")
        if holistic:
            result = holistic_evaluate_writing(client, text)
            click.echo(f"{path.name}: {result.score}/100 ({score_band(result.score)})")
            click.echo(result.comment)
            return
        rubric = _load_rubric(rubric_path)
        if runs > 1:
            from .evaluator import evaluate_repeated

            config = default_config(runs=runs)
            repeated = evaluate_repeated(client, text, rubric, config)
            mean = repeated.overall_stats.mean
            sd = repeated.overall_stats.sd
            click.echo(f"{path.name}: mean {render_score(mean)}/100"
                       + (f", sd {sd:.3f}" if sd is not None else ""))
        else:
            _echo_evaluation(path.name, evaluate(client, text, rubric))
    except EngineError as exc:
        raise click.ClickException(f"[{exc.code}] {exc}") from exc


main.add_command(evaluate_cmd, name="evaluate")


@main.command()
@click.option("--rubric", "rubric_path", required=True, type=click.Path(exists=True))
def qualify(rubric_path):
    """Judge a rubric against the built-in meta-rubric."""
    client = client_from_env()
    try:
        evaluation = qualify_rubric(client, _load_rubric(rubric_path))
    except EngineError as exc:
        raise click.ClickException(f"[{exc.code}] {exc}") from exc
    _echo_evaluation(Path(rubric_path).name, evaluation)


@main.command()
@click.option("--rubric", "rubric_path", required=True, type=click.Path(exists=True))
@click.option("--criterion", required=True, help="Meta-rubric criterion to improve.")
@click.option("--target", required=True, type=int, help="Target level for that criterion.")
@click.option("--current", type=int, default=None)
@click.option("--rationale", default="")
@click.option("--out", "out_path", default=None, help="Write the revised rubric here.")
def howto(rubric_path, criterion, target, current, rationale, out_path):
    """Comprehensively revise a rubric toward a meta-rubric target level."""
    client = client_from_env()
    rubric = _load_rubric(rubric_path)
    try:
        if current is None or not rationale:
            qualification = qualify_rubric(client, rubric)
            judged = qualification.criterion(criterion)
            if current is None:
                current = judged.selected
            if not rationale and target != judged.selected:
                rationale = judged.reason_for(target)
        goal = RevisionGoal(criterion=criterion, current=current, target=target,
                            rationale=rationale)
        revised = howto_rubric(client, rubric, goal)
    except EngineError as exc:
        raise click.ClickException(f"[{exc.code}] {exc}") from exc
    document = serialize_rubric(revised)
    if out_path:
        Path(out_path).write_text(document + "\n", encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(document)


@main.command()
@click.option("--rubric", "rubric_path", required=True, type=click.Path(exists=True))
def validate(rubric_path):
    """Validate a rubric document; exit nonzero when violations exist."""
    rubric = _load_rubric(rubric_path)
    report = validate_rubric(rubric)
    if not report:
        click.echo("valid")
        return
    for violation in report:
        click.echo(f"{violation.code} at {violation.path}: {violation.message}")
    sys.exit(1)


@main.group()
def metrics():
    """Reliability metrics over rating CSVs."""


@metrics.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--metric", type=click.Choice([ORDINAL, INTERVAL]), default=ORDINAL,
              show_default=True)
@click.option("--bootstrap", default=1000, show_default=True)
def alpha(csv_path, metric, bootstrap):
    """Krippendorff's alpha with a bootstrap 95% CI."""
    matrix = rating_matrix_from_csv(csv_path)
    try:
        estimate = krippendorff_alpha(matrix, metric, bootstrap=bootstrap)
    except DegenerateAgreementError as exc:
        raise click.ClickException(f"[{exc.code}] {exc}") from exc
    click.echo(
        f"alpha ({metric}) = {estimate.point:.4f} "
        f"[{estimate.ci_low:.4f}, {estimate.ci_high:.4f}] over {estimate.n_items} items"
    )
    click.echo(f"mean within-item sd = {within_item_sd(matrix):.4f}")


@metrics.command(name="qwk")
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True),
              help="Two rater columns: reference first, candidate second.")
@click.option("--scale", nargs=2, type=int, default=None, help="min max scale bins.")
@click.option("--bootstrap", default=1000, show_default=True)
def qwk_cmd(csv_path, scale, bootstrap):
    """Quadratic Weighted Kappa between a reference and a candidate rater."""
    matrix = rating_matrix_from_csv(csv_path)
    if len(matrix.raters) != 2:
        raise click.ClickException("QWK needs exactly 2 rater columns (reference, candidate)")
    reference = [int(row[0]) for row in matrix.values]
    candidate = [int(row[1]) for row in matrix.values]
    bounds = tuple(scale) if scale else (min(reference + candidate), max(reference + candidate))
    try:
        estimate = qwk(reference, candidate, bounds, bootstrap=bootstrap)
    except DegenerateAgreementError as exc:
        raise click.ClickException(f"[{exc.code}] {exc}") from exc
    click.echo(
        f"qwk = {estimate.point:.4f} "
        f"[{estimate.ci_low:.4f}, {estimate.ci_high:.4f}] over {estimate.n_items} pairs"
    )


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--db", default="rubrickit.db", show_default=True,
              help="Embedded store file.")
def serve(port, host, db):
    """Run the HTTP API consumed by the review UI."""
    import uvicorn

    from .api import create_app
    from .store import DocumentStore

    app = create_app(DocumentStore(db), client_from_env())
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
