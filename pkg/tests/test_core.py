from __future__ import annotations

import json
import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_criterion, make_rubric, random_rubric, random_weights
from rubrickit.builtin_rubrics import builtin_esl_rubric, builtin_meta_rubric
from rubrickit.core import (
    Criterion,
    LevelDescriptor,
    Rubric,
    overall_score,
    parse_rubric,
    render_score,
    rubric_from_dict,
    rubric_hash,
    rubric_to_dict,
    score_band,
    serialize_rubric,
    validate_rubric,
)
from rubrickit.errors import RubricParseError, ScoringError


class TestOverallScore:
    def test_worked_example(self):
        assert overall_score([25, 20, 30, 25], [3, 2, 3, 3], 5) == 56

    def test_all_max_levels_give_100(self):
        for scale in range(3, 7):
            assert overall_score([40, 60], [scale, scale], scale) == 100

    def test_three_criterion_hand_arithmetic(self):
        # (30*3 + 40*4 + 30*3) / 4 = 340/4
        assert overall_score([30, 40, 30], [3, 4, 3], 4) == 85

    def test_exact_rational_no_drift(self):
        score = overall_score([33, 33, 34], [2, 3, 2], 3)
        assert score == Fraction(233, 3)
        assert score * 3 == 233

    def test_minimum_is_100_over_scale(self):
        for scale in range(3, 7):
            assert overall_score([50, 50], [1, 1], scale) == Fraction(100, scale)

    def test_mismatched_lengths(self):
        with pytest.raises(ScoringError, match="2 weights but 3 levels"):
            overall_score([50, 50], [1, 1, 1], 4)

    def test_weight_sum_not_100(self):
        with pytest.raises(ScoringError, match="sum to 100"):
            overall_score([30, 30, 30], [1, 1, 1], 4)

    def test_level_out_of_range_names_criterion_index(self):
        with pytest.raises(ScoringError, match="criterion 1"):
            overall_score([50, 50], [2, 5], 4)

    def test_scale_out_of_range(self):
        with pytest.raises(ScoringError, match="scale"):
            overall_score([100], [1], 7)
        with pytest.raises(ScoringError, match="scale"):
            overall_score([100], [1], 2)

    def test_empty_inputs(self):
        with pytest.raises(ScoringError):
            overall_score([], [], 4)

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_each_level(self, data):
        rng = random.Random(data.draw(st.integers(0, 2**32 - 1)))
        scale = rng.randint(3, 6)
        k = rng.randint(1, 5)
        weights = random_weights(rng, k)
        levels = [rng.randint(1, scale) for _ in range(k)]
        base = overall_score(weights, levels, scale)
        for i in range(k):
            if levels[i] < scale:
                bumped = list(levels)
                bumped[i] += 1
                assert overall_score(weights, bumped, scale) > base


class TestRenderAndBands:
    def test_render_one_decimal(self):
        assert render_score(Fraction(56)) == "56.0"
        assert render_score(Fraction(825, 10)) == "82.5"
        assert render_score(Fraction(233, 3)) == "77.7"  # 77.666... rounds half-up at 1dp

    def test_bands(self):
        assert score_band(90) == "Excellent"
        assert score_band(85) == "Excellent"
        assert score_band(78) == "Good work"
        assert score_band(70) == "Good work"
        assert score_band(Fraction(849, 10)) == "Good work"
        assert score_band(56) == "Needs work"
        assert score_band(40) == "Needs work"
        assert score_band(39) == "Poor"


class TestValidation:
    def test_builtins_validate_empty(self):
        assert validate_rubric(builtin_esl_rubric()) == []
        assert validate_rubric(builtin_meta_rubric()) == []

    def test_weight_sum_violation(self):
        rubric = make_rubric("r", {"A": 30, "B": 30, "C": 30}, 4)
        codes = [v.code for v in validate_rubric(rubric)]
        assert codes == ["WEIGHT_SUM"]

    def test_scale_range_violation(self):
        rubric = make_rubric("r", {"A": 50, "B": 50}, 7)
        codes = [v.code for v in validate_rubric(rubric)]
        assert "SCALE_RANGE" in codes

    def test_duplicate_names_case_insensitive(self):
        rubric = Rubric(
            name="r",
            task_description="t",
            scale=3,
            criteria=(make_criterion("Tone", 50, 3), make_criterion("tone", 50, 3)),
        )
        assert "DUPLICATE_NAME" in [v.code for v in validate_rubric(rubric)]

    def test_missing_level_and_empty_descriptor(self):
        short = Criterion(
            name="A", weight=100, levels=(LevelDescriptor("x"), LevelDescriptor(""))
        )
        rubric = Rubric(name="r", task_description="t", scale=4, criteria=(short,))
        codes = {v.code for v in validate_rubric(rubric)}
        assert {"MISSING_LEVEL", "EMPTY_DESCRIPTOR"} <= codes

    def test_no_criteria(self):
        rubric = Rubric(name="r", task_description="t", scale=4, criteria=())
        assert "NO_CRITERIA" in [v.code for v in validate_rubric(rubric)]

    def test_violations_carry_paths(self):
        rubric = make_rubric("r", {"A": 40, "B": 40}, 4)
        report = validate_rubric(rubric)
        assert report[0].path == "criteria"
        assert "80" in report[0].message


APPENDIX_SKELETON = {
    "rubric": [
        {
            "criteria_name": "Clarity",
            "percentage": 100,
            "criteria": [
                {
                    "score_1": {"text": "vague", "checked": False, "reason": ""},
                    "score_2": {"text": "mixed", "checked": False, "reason": ""},
                    "score_3": {"text": "clear", "checked": True, "reason": "fits"},
                }
            ],
        }
    ]
}


class TestInterchange:
    def test_parse_appendix_shape(self):
        rubric = rubric_from_dict(APPENDIX_SKELETON)
        assert rubric.scale == 3
        assert rubric.criteria[0].name == "Clarity"
        assert rubric.criteria[0].weight == 100
        assert rubric.criteria[0].level(3).checked is True
        assert rubric.criteria[0].level(1).text == "vague"

    def test_parse_serialize_parse_fixpoint(self):
        first = rubric_from_dict(APPENDIX_SKELETON)
        second = parse_rubric(serialize_rubric(first))
        assert second == first
        assert serialize_rubric(second) == serialize_rubric(first)

    def test_roundtrip_random_rubrics(self):
        rng = random.Random(7)
        for i in range(50):
            rubric = random_rubric(rng, tag=f"{i}-")
            assert parse_rubric(serialize_rubric(rubric)) == rubric

    def test_canonical_order_descending_scores(self):
        doc = json.loads(serialize_rubric(builtin_esl_rubric()))
        cells = doc["rubric"][0]["criteria"][0]
        assert list(cells) == ["score_4", "score_3", "score_2", "score_1"]
        entry = doc["rubric"][0]
        assert list(entry) == ["criteria_name", "percentage", "criteria"]

    def test_reader_accepts_any_key_order_and_bare_map(self):
        doc = {
            "rubric": [
                {
                    "criteria": {  # bare map instead of single-element array
                        "score_3": {"text": "c"},
                        "score_1": {"text": "a"},
                        "score_2": {"text": "b"},
                    },
                    "percentage": 100,
                    "criteria_name": "X",
                }
            ]
        }
        rubric = rubric_from_dict(doc)
        assert [d.text for d in rubric.criteria[0].levels] == ["a", "b", "c"]

    def test_absent_reason_and_checked_default(self):
        doc = {
            "rubric": [
                {
                    "criteria_name": "X",
                    "percentage": 100,
                    "criteria": [{f"score_{n}": {"text": "t"} for n in (1, 2, 3)}],
                }
            ]
        }
        rubric = rubric_from_dict(doc)
        descriptor = rubric.criteria[0].level(1)
        assert descriptor.checked is False
        assert descriptor.reason == ""

    def test_missing_percentage_names_path(self):
        doc = {"rubric": [{"criteria_name": "X", "criteria": [{}]}]}
        with pytest.raises(RubricParseError, match=r"rubric\[0\].percentage"):
            rubric_from_dict(doc)

    def test_missing_score_key_names_path(self):
        doc = {
            "rubric": [
                {
                    "criteria_name": "X",
                    "percentage": 100,
                    "criteria": [
                        {"score_1": {"text": "a"}, "score_3": {"text": "c"}}
                    ],
                }
            ]
        }
        with pytest.raises(RubricParseError, match="score_2"):
            rubric_from_dict(doc)

    def test_duplicate_score_key_is_parse_error(self):
        document = (
            '{"rubric": [{"criteria_name": "X", "percentage": 100, "criteria": '
            '[{"score_1": {"text": "a"}, "score_1": {"text": "b"}, '
            '"score_2": {"text": "c"}, "score_3": {"text": "d"}}]}]}'
        )
        with pytest.raises(RubricParseError, match="duplicate key"):
            parse_rubric(document)

    def test_malformed_json(self):
        with pytest.raises(RubricParseError, match="malformed"):
            parse_rubric("{not json")

    def test_fractional_weight_rejected(self):
        doc = {
            "rubric": [
                {
                    "criteria_name": "X",
                    "percentage": 33.5,
                    "criteria": [{f"score_{n}": {"text": "t"} for n in (1, 2, 3)}],
                }
            ]
        }
        with pytest.raises(RubricParseError, match="integer"):
            rubric_from_dict(doc)

    def test_integral_float_weight_accepted(self):
        doc = {
            "rubric": [
                {
                    "criteria_name": "X",
                    "percentage": 100.0,
                    "criteria": [{f"score_{n}": {"text": "t"} for n in (1, 2, 3)}],
                }
            ]
        }
        assert rubric_from_dict(doc).criteria[0].weight == 100

    def test_seven_level_document_parses_then_fails_validation(self):
        doc = {
            "rubric": [
                {
                    "criteria_name": "X",
                    "percentage": 100,
                    "criteria": [{f"score_{n}": {"text": "t"} for n in range(1, 8)}],
                }
            ]
        }
        rubric = rubric_from_dict(doc)
        assert rubric.scale == 7
        assert "SCALE_RANGE" in [v.code for v in validate_rubric(rubric)]

    def test_name_and_task_description_roundtrip(self):
        rubric = builtin_esl_rubric()
        doc = rubric_to_dict(rubric)
        assert doc["name"] == "ESL Composition Profile"
        assert parse_rubric(serialize_rubric(rubric)).task_description == rubric.task_description


class TestBuiltins:
    def test_esl_shape(self):
        rubric = builtin_esl_rubric()
        assert rubric.scale == 4
        assert rubric.criterion_names() == (
            "Content",
            "Organization",
            "Vocabulary",
            "Language Use",
        )
        assert rubric.weights() == (30, 20, 20, 30)
        assert rubric.criterion("Content").weight == 30
        assert "thorough development of thesis" in rubric.criterion("Content").level(4).text

    def test_meta_shape(self):
        rubric = builtin_meta_rubric()
        assert rubric.scale == 4
        assert rubric.criterion("Level Distinction").weight == 40
        assert rubric.weights() == (30, 40, 30)
        assert "essential learning outcomes" in rubric.criterion("Criteria Alignment").level(4).text

    def test_hash_stability(self):
        assert rubric_hash(builtin_esl_rubric()) == rubric_hash(builtin_esl_rubric())
        assert rubric_hash(builtin_esl_rubric()) != rubric_hash(builtin_meta_rubric())

    def test_hash_sensitive_to_content(self):
        rubric = builtin_esl_rubric()
        tweaked = replace(rubric, name="Other")
        assert rubric_hash(tweaked) != rubric_hash(rubric)
