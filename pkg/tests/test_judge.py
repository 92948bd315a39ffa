from __future__ import annotations

import json
import threading

import pytest

from rubrickit.core import Violation
from rubrickit.errors import (
    PreconditionError,
    ProviderError,
    ScriptMissError,
    StructuredOutputError,
    TransportError,
)
from rubrickit.judge import (
    HttpBackend,
    JudgeClient,
    JudgeConfig,
    ScriptedBackend,
    default_config,
    extract_json_block,
    prompt_hash,
    scripted_client,
)
from rubrickit.prompts import TEMPERATURES


def no_problems(_):
    return []


def require_score(parsed):
    if not isinstance(parsed, dict) or "score" not in parsed:
        return [Violation("MISSING_SCORE", "score key required")]
    return []


class TestConfig:
    def test_defaults(self):
        config = JudgeConfig()
        assert config.retries == 2
        assert config.runs == 1

    def test_bounds(self):
        with pytest.raises(PreconditionError):
            JudgeConfig(temperature=-0.1)
        with pytest.raises(PreconditionError):
            JudgeConfig(runs=0)
        with pytest.raises(PreconditionError):
            JudgeConfig(retries=-1)

    def test_per_operation_temperatures(self):
        assert default_config("evaluate_criterion").temperature == 0.0
        assert default_config("howto_writing").temperature == 0.0
        assert default_config("instruct_revision").temperature == 0.2
        assert default_config("enhance_description").temperature == 0.2
        assert default_config("refine_descriptor").temperature == 0.4
        assert default_config("refine_criterion").temperature == 0.6
        assert default_config("recommend_criterion").temperature == 0.8
        assert set(TEMPERATURES.values()) == {0.0, 0.2, 0.4, 0.6, 0.8}

    def test_env_model(self, monkeypatch):
        monkeypatch.setenv("JUDGE_MODEL", "other-model")
        assert default_config().model == "other-model"
        monkeypatch.delenv("JUDGE_MODEL")
        assert default_config().model == "gpt-4.1"


class TestScriptedBackend:
    def test_wildcard_echo(self):
        client = scripted_client({"*": {"*": "ok"}})
        text, entry = client.complete("anything", JudgeConfig())
        assert text == "ok"
        assert entry.response == "ok"

    def test_empty_prompt_precondition(self):
        client = scripted_client({"*": {"*": "ok"}})
        with pytest.raises(PreconditionError):
            client.complete("   ", JudgeConfig())

    def test_script_miss_names_prompt_hash(self):
        client = scripted_client({"other_op": {"*": "x"}})
        with pytest.raises(ScriptMissError) as excinfo:
            client.complete("hello", JudgeConfig(), op="eval")
        assert prompt_hash("hello") in str(excinfo.value)

    def test_exact_hash_beats_wildcard(self):
        key = prompt_hash("hello")
        client = scripted_client({"op": {key: "exact", "*": "fallback"}})
        assert client.complete("hello", JudgeConfig(), op="op")[0] == "exact"
        assert client.complete("other", JudgeConfig(), op="op")[0] == "fallback"

    def test_list_responses_consumed_in_order_then_repeat(self):
        client = scripted_client({"op": {"*": ["one", "two"]}})
        cfg = JudgeConfig()
        assert client.complete("p", cfg, op="op")[0] == "one"
        assert client.complete("p", cfg, op="op")[0] == "two"
        assert client.complete("p", cfg, op="op")[0] == "two"

    def test_non_string_scripted_value_serialized(self):
        client = scripted_client({"op": {"*": {"score": 78}}})
        assert json.loads(client.complete("p", JudgeConfig(), op="op")[0]) == {"score": 78}

    def test_from_file(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps({"*": {"*": "filed"}}))
        backend = ScriptedBackend.from_file(str(path))
        assert JudgeClient(backend).complete("p", JudgeConfig())[0] == "filed"


class TestTranscript:
    def test_every_call_appends(self):
        client = scripted_client({"*": {"*": "ok"}})
        client.complete("a", JudgeConfig())
        client.complete("b", JudgeConfig())
        assert len(client.transcript) == 2
        entries = client.transcript.entries()
        assert [e.id for e in entries] == [0, 1]
        assert entries[0].prompt == "a"

    def test_transcript_length_counts_failed_parses(self):
        client = scripted_client({"op": {"*": ["garbage", '{"score": 1}']}})
        parsed, entries = client.complete_structured(
            "p", JudgeConfig(retries=1), require_score, op="op"
        )
        assert parsed == {"score": 1}
        assert len(client.transcript) == 2
        assert client.transcript.entries()[0].parse_outcome.startswith("PARSE_ERROR")
        assert client.transcript.entries()[1].parse_outcome == "ok"

    def test_concurrent_calls_all_logged(self):
        client = scripted_client({"*": {"*": "ok"}})

        def worker():
            client.complete("p", JudgeConfig())

        threads = [threading.Thread(target=worker) for _ in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(client.transcript) == 16
        assert sorted(e.id for e in client.transcript.entries()) == list(range(16))


class TestExtraction:
    def test_plain_object(self):
        assert extract_json_block('{"a": 1}') == '{"a": 1}'

    def test_prose_wrapped(self):
        text = 'Sure! Here is the result: {"score": 78, "comment": "x"} Hope that helps.'
        assert json.loads(extract_json_block(text)) == {"score": 78, "comment": "x"}

    def test_code_fenced(self):
        text = 'Here you go:\n```json\n{"score": 3}\n```\nDone.'
        assert json.loads(extract_json_block(text)) == {"score": 3}

    def test_nested_braces_and_strings(self):
        text = 'x {"a": {"b": "closing } inside string", "c": [1, {"d": 2}]}} trailing }'
        assert json.loads(extract_json_block(text)) == {
            "a": {"b": "closing } inside string", "c": [1, {"d": 2}]}
        }

    def test_top_level_array(self):
        assert json.loads(extract_json_block("result: [1, 2, 3]!")) == [1, 2, 3]

    def test_truncated_returns_none(self):
        assert extract_json_block('{"a": 1, "b": ') is None

    def test_no_json_returns_none(self):
        assert extract_json_block("no structure here") is None


class TestStructured:
    def test_direct_parse(self):
        client = scripted_client({"op": {"*": '{"score": 78, "comment": "x"}'}})
        parsed, _ = client.complete_structured("p", JudgeConfig(), require_score, op="op")
        assert parsed == {"score": 78, "comment": "x"}

    def test_retry_contract_malformed_then_valid(self):
        client = scripted_client({"op": {"*": ["{broken", '{"score": 2}']}})
        parsed, entries = client.complete_structured(
            "p", JudgeConfig(retries=1), require_score, op="op"
        )
        assert parsed == {"score": 2}
        assert len(entries) == 2
        # The re-ask appends a repair block quoting the complaint.
        assert "repair" in entries[1].prompt
        assert entries[1].prompt.startswith(entries[0].prompt)

    def test_zero_retries_validator_rejection(self):
        client = scripted_client({"op": {"*": '{"other": 1}'}})
        with pytest.raises(StructuredOutputError) as excinfo:
            client.complete_structured("p", JudgeConfig(retries=0), require_score, op="op")
        assert excinfo.value.last_codes == ["MISSING_SCORE"]
        assert len(excinfo.value.attempts) == 1

    def test_exhausted_error_carries_all_attempts_raw_text(self):
        client = scripted_client({"op": {"*": ["bad one", "bad two", "bad three"]}})
        with pytest.raises(StructuredOutputError) as excinfo:
            client.complete_structured("p", JudgeConfig(retries=2), no_problems, op="op")
        raws = [raw for raw, _ in excinfo.value.attempts]
        assert raws == ["bad one", "bad two", "bad three"]

    def test_never_returns_rejected_structure(self):
        # Validator always complains; even parseable output must not escape.
        client = scripted_client({"op": {"*": '{"score": 1}'}})

        def always_reject(_):
            return [Violation("NOPE", "rejected")]

        with pytest.raises(StructuredOutputError):
            client.complete_structured("p", JudgeConfig(retries=1), always_reject, op="op")

    def test_repair_reuses_script_key_of_original_prompt(self):
        key = prompt_hash("p")
        client = scripted_client({"op": {key: ["{bad", '{"score": 9}']}})
        parsed, _ = client.complete_structured("p", JudgeConfig(retries=1), require_score, op="op")
        assert parsed == {"score": 9}


class TestHttpBackend:
    def test_requires_api_key(self, monkeypatch):
        monkeypatch.delenv("JUDGE_API_KEY", raising=False)
        with pytest.raises(PreconditionError, match="JUDGE_API_KEY"):
            HttpBackend()

    def test_request_template_and_parse(self, monkeypatch):
        captured = {}

        class FakeResponse:
            status_code = 200
            text = ""

            @staticmethod
            def json():
                return {"choices": [{"message": {"content": "answer"}}]}

        def fake_post(url, json=None, headers=None, timeout=None):
            captured.update(url=url, body=json, headers=headers, timeout=timeout)
            return FakeResponse()

        monkeypatch.setattr("rubrickit.judge.httpx.post", fake_post)
        backend = HttpBackend(model="m", base_url="http://judge.local/v1", api_key="k")
        out = backend.complete("hi", JudgeConfig(temperature=0.2), "op", system="sys")
        assert out == "answer"
        assert captured["url"] == "http://judge.local/v1/chat/completions"
        assert captured["body"]["messages"] == [
            {"role": "system", "content": "sys"},
            {"role": "user", "content": "hi"},
        ]
        assert captured["body"]["temperature"] == 0.2
        assert captured["headers"]["Authorization"] == "Bearer k"

    def test_provider_error_status_payload(self, monkeypatch):
        class FakeResponse:
            status_code = 429
            text = '{"error": "rate limited"}'

        monkeypatch.setattr("rubrickit.judge.httpx.post", lambda *a, **k: FakeResponse())
        backend = HttpBackend(api_key="k")
        with pytest.raises(ProviderError) as excinfo:
            backend.complete("hi", JudgeConfig(), "op")
        assert excinfo.value.status == 429
        assert "rate limited" in excinfo.value.payload

    def test_transport_error(self, monkeypatch):
        import httpx

        def boom(*a, **k):
            raise httpx.ConnectTimeout("no route")

        monkeypatch.setattr("rubrickit.judge.httpx.post", boom)
        backend = HttpBackend(api_key="k")
        with pytest.raises(TransportError):
            backend.complete("hi", JudgeConfig(), "op")

    def test_env_configuration(self, monkeypatch):
        monkeypatch.setenv("JUDGE_API_KEY", "envkey")
        monkeypatch.setenv("JUDGE_BASE_URL", "http://env.local/v2/")
        monkeypatch.setenv("JUDGE_MODEL", "env-model")
        backend = HttpBackend()
        assert backend.api_key == "envkey"
        assert backend.base_url == "http://env.local/v2"
        assert backend.model == "env-model"
