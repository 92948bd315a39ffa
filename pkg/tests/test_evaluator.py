from __future__ import annotations

import json
from fractions import Fraction

import pytest

from conftest import make_rubric
from oracles import brute_sample_sd
from rubrickit.builtin_rubrics import builtin_meta_rubric
from rubrickit.core import overall_score, rubric_hash, serialize_rubric
from rubrickit.errors import EvaluationError, PreconditionError, StructuredOutputError
from rubrickit.evaluator import (
    compute_run_stats,
    criterion_response_validator,
    evaluate,
    evaluate_criterion,
    evaluate_repeated,
    holistic_evaluate_rubric,
    holistic_evaluate_writing,
    holistic_validator,
)
from rubrickit.judge import JudgeConfig, default_config, scripted_client
from rubrickit.prompts import criterion_evaluation_prompt, holistic_writing_prompt
from rubrickit.scripting import criterion_response, evaluation_script, merge_scripts


def response_with(criterion, checked_levels, empty_reason_at=(), drop=()):
    """Hand-build a judge response with deliberate defects."""
    cells = {}
    for n in range(1, criterion.scale + 1):
        if n in drop:
            continue
        reason = "" if n in empty_reason_at else f"Overall fine.\n- evidence for level {n}"
        cells[f"score_{n}"] = {
            "text": criterion.level(n).text,
            "checked": n in checked_levels,
            "reason": reason,
        }
    return json.dumps({"criteria_name": criterion.name, "criteria": [cells]})


class TestCriterionValidator:
    def test_accepts_canonical_response(self, ad_rubric):
        criterion = ad_rubric.criteria[0]
        validator = criterion_response_validator(5)
        parsed = json.loads(criterion_response(criterion, 3))
        assert validator(parsed) == []

    def test_multi_checked(self, ad_rubric):
        criterion = ad_rubric.criteria[0]
        validator = criterion_response_validator(5)
        parsed = json.loads(response_with(criterion, {3, 4}))
        assert [p.code for p in validator(parsed)] == ["MULTI_CHECKED"]

    def test_none_checked(self, ad_rubric):
        criterion = ad_rubric.criteria[0]
        validator = criterion_response_validator(5)
        parsed = json.loads(response_with(criterion, set()))
        assert [p.code for p in validator(parsed)] == ["NONE_CHECKED"]

    def test_missing_level(self, ad_rubric):
        criterion = ad_rubric.criteria[0]
        validator = criterion_response_validator(5)
        parsed = json.loads(response_with(criterion, {3}, drop={5}))
        assert "MISSING_LEVEL" in [p.code for p in validator(parsed)]

    def test_empty_reason(self, ad_rubric):
        criterion = ad_rubric.criteria[0]
        validator = criterion_response_validator(5)
        parsed = json.loads(response_with(criterion, {3}, empty_reason_at={2}))
        assert "EMPTY_REASON" in [p.code for p in validator(parsed)]

    def test_reason_without_bullets(self, ad_rubric):
        criterion = ad_rubric.criteria[0]
        validator = criterion_response_validator(5)
        parsed = json.loads(criterion_response(criterion, 3, reasons={2: "just prose"}))
        assert "BAD_MARKUP" in [p.code for p in validator(parsed)]


class TestEvaluateCriterion:
    def test_scripted_selection(self, ad_rubric, ad_copy):
        criterion = ad_rubric.criterion("Clarity")
        script = evaluation_script(ad_copy, ad_rubric, {"Clarity": 3})
        client = scripted_client(script)
        result, ids = evaluate_criterion(
            client, ad_copy, criterion, ad_rubric.task_description
        )
        assert result.selected == 3
        assert len(result.reasons) == 5
        assert ids == (0,)

    def test_why_and_why_not_reasons_present(self, ad_rubric, ad_copy):
        criterion = ad_rubric.criterion("Clarity")
        script = evaluation_script(ad_copy, ad_rubric, {"Clarity": 3})
        client = scripted_client(script)
        result, _ = evaluate_criterion(client, ad_copy, criterion, ad_rubric.task_description)
        assert result.selected == 3
        assert result.reason_for(3)  # why the checked level
        assert result.reason_for(5)  # why not the top level
        assert result.reason_for(3) != result.reason_for(5)

    def test_multi_checked_retried_then_error(self, ad_rubric, ad_copy):
        criterion = ad_rubric.criterion("Clarity")
        bad = response_with(criterion, {3, 4})
        bundle = criterion_evaluation_prompt(ad_copy, criterion, ad_rubric.task_description)
        from rubrickit.judge import prompt_hash

        client = scripted_client(
            {"evaluate_criterion": {prompt_hash(bundle.user): [bad, bad]}}
        )
        with pytest.raises(EvaluationError) as excinfo:
            evaluate_criterion(
                client, ad_copy, criterion, ad_rubric.task_description,
                JudgeConfig(retries=1),
            )
        assert "Clarity" in str(excinfo.value)
        assert "MULTI_CHECKED" in excinfo.value.cause.last_codes
        assert len(client.transcript) == 2

    def test_empty_artifact_precondition(self, ad_rubric):
        client = scripted_client({"*": {"*": "ok"}})
        with pytest.raises(PreconditionError):
            evaluate_criterion(client, " ", ad_rubric.criteria[0], "task")
        assert len(client.transcript) == 0

    def test_incomplete_criterion_precondition(self, ad_rubric):
        from dataclasses import replace

        criterion = ad_rubric.criteria[0]
        broken = replace(
            criterion,
            levels=tuple(
                replace(d, text="" if n == 2 else d.text)
                for n, d in enumerate(criterion.levels, start=1)
            ),
        )
        client = scripted_client({"*": {"*": "ok"}})
        with pytest.raises(PreconditionError):
            evaluate_criterion(client, "text", broken, "task")


class TestEvaluate:
    def test_worked_example_scripted(self, ad_rubric, ad_copy):
        script = evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3])
        client = scripted_client(script)
        evaluation = evaluate(client, ad_copy, ad_rubric)
        assert evaluation.overall == 56
        assert evaluation.selected_levels() == (3, 2, 3, 3)
        assert evaluation.rubric_hash == rubric_hash(ad_rubric)
        assert len(evaluation.transcript_ids) == 4

    def test_all_max_is_100(self, ad_rubric, ad_copy):
        script = evaluation_script(ad_copy, ad_rubric, [5, 5, 5, 5])
        client = scripted_client(script)
        assert evaluate(client, ad_copy, ad_rubric).overall == 100

    def test_meta_rubric_path(self, ad_rubric):
        meta = builtin_meta_rubric()
        artifact = serialize_rubric(ad_rubric)
        script = evaluation_script(artifact, meta, [3, 4, 3])
        client = scripted_client(script)
        evaluation = evaluate(client, artifact, meta)
        assert evaluation.overall == 85

    def test_overall_matches_independent_recompute(self, ad_rubric, ad_copy):
        script = evaluation_script(ad_copy, ad_rubric, [4, 1, 2, 5])
        client = scripted_client(script)
        evaluation = evaluate(client, ad_copy, ad_rubric)
        assert evaluation.overall == overall_score(
            list(ad_rubric.weights()), list(evaluation.selected_levels()), ad_rubric.scale
        )

    def test_invalid_rubric_precondition_before_judge(self, ad_copy):
        rubric = make_rubric("bad", {"A": 30, "B": 30}, 4)
        client = scripted_client({"*": {"*": "ok"}})
        with pytest.raises(PreconditionError):
            evaluate(client, ad_copy, rubric)
        assert len(client.transcript) == 0

    def test_criterion_failure_fails_whole_evaluation(self, ad_rubric, ad_copy):
        script = evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3])
        # Break one criterion's scripted response.
        from rubrickit.judge import prompt_hash

        bundle = criterion_evaluation_prompt(
            ad_copy, ad_rubric.criterion("Engagement"), ad_rubric.task_description
        )
        script["evaluate_criterion"][prompt_hash(bundle.user)] = "not json"
        client = scripted_client(script)
        with pytest.raises(EvaluationError, match="Engagement"):
            evaluate(client, ad_copy, ad_rubric, JudgeConfig(retries=0))

    def test_dispatch_order_independent(self, ad_rubric, ad_copy, monkeypatch):
        script = evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3])
        baseline = evaluate(scripted_client(script), ad_copy, ad_rubric)
        # Force serial execution in reversed submission order.
        reversed_rubric = ad_rubric
        client = scripted_client(evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3]))
        import rubrickit.evaluator as ev

        monkeypatch.setattr(ev, "_utcnow", lambda: baseline.created_at)
        permuted = ev.evaluate(client, ad_copy, reversed_rubric)
        assert permuted == baseline


class TestRepeated:
    def test_identical_runs_zero_sd(self, ad_rubric, ad_copy):
        script = evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3])
        client = scripted_client(script)
        repeated = evaluate_repeated(client, ad_copy, ad_rubric, JudgeConfig(runs=5))
        assert repeated.n == 5
        assert repeated.overall_stats.mean == 56
        assert repeated.overall_stats.sd == 0
        for _, stats in repeated.criterion_stats:
            assert stats.sd == 0

    def test_mean_and_sd_match_oracle(self, ad_rubric, ad_copy):
        # Clarity level pattern {3,3,5,3,5} shifts overall by 25*2/5=10 on two
        # runs: overall {56,56,66,56,66}.
        levels = {
            "Clarity": [3, 3, 5, 3, 5],
            "Creativity": 2,
            "Engagement": 3,
            "Brand Alignment": 3,
        }
        script = evaluation_script(ad_copy, ad_rubric, levels)
        client = scripted_client(script)
        repeated = evaluate_repeated(client, ad_copy, ad_rubric, JudgeConfig(runs=5))
        overalls = [float(r.overall) for r in repeated.runs]
        assert overalls == [56, 56, 66, 56, 66]
        assert repeated.overall_stats.mean == Fraction(300, 5)
        assert repeated.overall_stats.sd == pytest.approx(brute_sample_sd(overalls))
        clarity = dict(repeated.criterion_stats)["Clarity"]
        assert clarity.mean == Fraction(19, 5)
        assert clarity.sd == pytest.approx(brute_sample_sd([3, 3, 5, 3, 5]))

    def test_single_run_sd_absent(self, ad_rubric, ad_copy):
        script = evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3])
        client = scripted_client(script)
        repeated = evaluate_repeated(client, ad_copy, ad_rubric, JudgeConfig(runs=1))
        assert repeated.n == 1
        assert repeated.overall_stats.sd is None
        assert repeated.overall_stats.mean == 56

    def test_stats_recomputable_from_runs(self, ad_rubric, ad_copy):
        levels = {"Clarity": [3, 4], "Creativity": 2, "Engagement": 3, "Brand Alignment": 3}
        script = evaluation_script(ad_copy, ad_rubric, levels)
        client = scripted_client(script)
        repeated = evaluate_repeated(client, ad_copy, ad_rubric, JudgeConfig(runs=2))
        criterion_stats, overall_stats = compute_run_stats(list(repeated.runs))
        assert criterion_stats == repeated.criterion_stats
        assert overall_stats == repeated.overall_stats

    def test_failing_run_tagged(self, ad_rubric, ad_copy):
        from rubrickit.judge import prompt_hash

        script = evaluation_script(ad_copy, ad_rubric, [3, 2, 3, 3])
        bundle = criterion_evaluation_prompt(
            ad_copy, ad_rubric.criterion("Clarity"), ad_rubric.task_description
        )
        good = script["evaluate_criterion"][prompt_hash(bundle.user)]
        script["evaluate_criterion"][prompt_hash(bundle.user)] = [good, "broken {"]
        client = scripted_client(script)
        with pytest.raises(EvaluationError, match="run 1"):
            evaluate_repeated(client, ad_copy, ad_rubric, JudgeConfig(runs=3, retries=0))


class TestHolistic:
    def test_writing_score(self):
        client = scripted_client(
            {"holistic_writing": {"*": '{"score": 78, "comment": "Solid narrative arc."}'}}
        )
        result = holistic_evaluate_writing(client, "some essay text")
        assert result.score == 78
        assert "Solid" in result.comment

    def test_writing_prompt_uses_system_and_user(self):
        bundle = holistic_writing_prompt("essay")
        assert bundle.system and "output format" in bundle.system
        assert "essay" in bundle.user

    def test_score_out_of_range_retried_then_error(self):
        client = scripted_client(
            {"holistic_writing": {"*": '{"score": 101, "comment": "x"}'}}
        )
        with pytest.raises(StructuredOutputError) as excinfo:
            holistic_evaluate_writing(client, "text", JudgeConfig(retries=1))
        assert "SCORE_RANGE" in excinfo.value.last_codes
        assert len(client.transcript) == 2

    def test_missing_comment_retried_then_error(self):
        client = scripted_client({"holistic_writing": {"*": '{"score": 50}'}})
        with pytest.raises(StructuredOutputError) as excinfo:
            holistic_evaluate_writing(client, "text", JudgeConfig(retries=1))
        assert "EMPTY_COMMENT" in excinfo.value.last_codes

    def test_non_numeric_score(self):
        client = scripted_client(
            {"holistic_rubric": {"*": '{"score": "great", "comment": "x"}'}}
        )
        with pytest.raises(StructuredOutputError):
            holistic_evaluate_rubric(
                client, builtin_meta_rubric(), "task", JudgeConfig(retries=1)
            )

    def test_rubric_score(self, ad_rubric):
        client = scripted_client(
            {"holistic_rubric": {"*": '{"score": 87, "comment": "Clear separation."}'}}
        )
        result = holistic_evaluate_rubric(client, ad_rubric, ad_rubric.task_description)
        assert result.score == 87

    def test_invalid_rubric_precondition_before_call(self):
        rubric = make_rubric("bad", {"A": 10}, 4)
        client = scripted_client({"*": {"*": "ok"}})
        with pytest.raises(PreconditionError):
            holistic_evaluate_rubric(client, rubric, "task")
        assert len(client.transcript) == 0

    def test_holistic_validator_bool_score_rejected(self):
        assert holistic_validator({"score": True, "comment": "x"})
