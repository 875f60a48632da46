import json

import pytest

from civ.charts import ChartSpec, ChartType
from civ.errors import EmptyBank, ParseRejected, TransportError, ValidationError
from civ.generate import generate_spec, make_table as synth_table
from civ.rag import (
    ALLOWED_MAPPINGS,
    GenerationOutcome,
    HttpChatClient,
    SeedBank,
    StubClient,
    build_generation_prompt,
    llm_generate_chart,
)
from civ.tables import make_table


def _bank():
    pairs = []
    for seed in range(5):
        table, _ = synth_table(ChartType.BAR, 100 + seed)
        spec = generate_spec(table, ChartType.BAR, rng_seed=seed)
        pairs.append((table, json.dumps(spec.to_json_dict()), "internal"))
    return SeedBank.from_pairs(pairs)


def test_prompt_retrieves_self_first():
    bank = _bank()
    target = bank.entries[2].table
    prompt = build_generation_prompt(target, bank, shots=3, chart_type=ChartType.BAR)
    assert prompt.few_shot_examples[0][0] == target
    assert len(prompt.few_shot_examples) == 3
    assert prompt.allowed_mappings == ALLOWED_MAPPINGS[ChartType.BAR]
    text = prompt.render()
    assert "Target table" in text and "Example 1:" in text


def test_prompt_clamps_shots_to_bank_size():
    bank = SeedBank.from_pairs(
        [(e.table, e.code_or_spec, e.library_tag) for e in _bank().entries[:2]]
    )
    table, _ = synth_table(ChartType.BAR, 999)
    prompt = build_generation_prompt(table, bank, shots=5)
    assert len(prompt.few_shot_examples) == 2


def test_prompt_ignores_far_bank_entries():
    bank = _bank()
    table, _ = synth_table(ChartType.BAR, 314)
    base = build_generation_prompt(table, bank, shots=2, chart_type=ChartType.BAR)
    far_table = make_table(
        "tiny", [("K", "categorical"), ("V", "numeric")], [("only", 1.0)] ,
    )
    extended = SeedBank.from_pairs(
        [(e.table, e.code_or_spec, e.library_tag) for e in bank.entries]
        + [(far_table, "{}", "noise")]
    )
    again = build_generation_prompt(table, extended, shots=2, chart_type=ChartType.BAR)
    assert [t.to_json_dict() for t, _ in base.few_shot_examples] == [
        t.to_json_dict() for t, _ in again.few_shot_examples
    ]


def test_prompt_errors():
    with pytest.raises(EmptyBank):
        build_generation_prompt(_bank().entries[0].table, SeedBank(entries=()), shots=1)
    with pytest.raises(ValidationError):
        build_generation_prompt(_bank().entries[0].table, _bank(), shots=0)


def test_seed_bank_round_trip(tmp_path):
    bank = _bank()
    path = tmp_path / "bank.jsonl"
    bank.save(path)
    again = SeedBank.load(path)
    assert len(again.entries) == len(bank.entries)
    assert again.entries[0].table == bank.entries[0].table
    assert again.entries[0].feature.values == bank.entries[0].feature.values


def _target_and_prompt():
    bank = _bank()
    table, _ = synth_table(ChartType.BAR, 555)
    prompt = build_generation_prompt(table, bank, shots=2, chart_type=ChartType.BAR)
    return table, prompt


def test_llm_path_accepts_faithful_spec():
    table, prompt = _target_and_prompt()
    spec = generate_spec(table, ChartType.BAR, rng_seed=1)
    client = StubClient(reply=json.dumps(spec.to_json_dict()))
    outcome = llm_generate_chart(prompt, client)
    assert outcome.accepted and outcome.spec is not None
    assert outcome.spec.table == table


def test_llm_path_rejects_perturbed_values():
    table, prompt = _target_and_prompt()
    spec = generate_spec(table, ChartType.BAR, rng_seed=1)
    payload = spec.to_json_dict()
    rows = payload["table"]["rows"]
    rows[0][-1] = str(float(rows[0][-1]) * 1.1)  # drift one value by 10%
    outcome = llm_generate_chart(prompt, StubClient(reply=json.dumps(payload)))
    assert not outcome.accepted
    assert outcome.reason.startswith("table_mismatch")


def test_llm_path_rejects_prose():
    _, prompt = _target_and_prompt()
    with pytest.raises(ParseRejected):
        llm_generate_chart(prompt, StubClient(reply="I would draw a lovely bar chart."))
    with pytest.raises(ParseRejected):
        llm_generate_chart(prompt, StubClient(reply="{not json}"))


def test_llm_path_rejects_invalid_spec():
    table, prompt = _target_and_prompt()
    spec = generate_spec(table, ChartType.BAR, rng_seed=1)
    payload = spec.to_json_dict()
    payload["bar_width_frac"] = 9.0
    outcome = llm_generate_chart(prompt, StubClient(reply=json.dumps(payload)))
    assert not outcome.accepted and outcome.reason.startswith("invalid_spec")


def test_http_client_retries_then_raises():
    sleeps = []
    client = HttpChatClient(
        endpoint="http://127.0.0.1:9/nothing-here",
        max_attempts=3,
        timeout=0.2,
        sleep=sleeps.append,
    )
    with pytest.raises(TransportError):
        client.complete([{"role": "user", "content": "hello"}])
    assert sleeps == [0.5, 1.0]  # exponential backoff between 3 attempts


def test_http_client_from_env(monkeypatch):
    monkeypatch.delenv("CIV_LLM_ENDPOINT", raising=False)
    assert HttpChatClient.from_env() is None
    monkeypatch.setenv("CIV_LLM_ENDPOINT", "http://example.invalid/api")
    monkeypatch.setenv("CIV_LLM_KEY", "sekrit")
    client = HttpChatClient.from_env()
    assert client.endpoint.endswith("/api") and client.api_key == "sekrit"
