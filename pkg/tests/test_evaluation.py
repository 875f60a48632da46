import pytest

from civ.errors import TransportError, UnknownItem
from civ.evaluation import (
    ModelResponse,
    SHORT_ANSWER_SUFFIX,
    benchmark_items,
    collect_responses,
    evaluate_responses,
    read_responses,
    render_report,
    write_responses,
)
from civ.generate import generate_corpus
from civ.qasynth import synthesize_qa
from civ.rag import StubClient
from civ.tasks import enumerate_tasks


@pytest.fixture(scope="module")
def small_benchmark():
    corpus = generate_corpus(charts_per_type=1, seed=21, augmentations_per_chart=0)
    records = []
    for g in corpus:
        qas = []
        for task in enumerate_tasks(g.record.spec.chart_type)[:3]:
            try:
                qas.append(synthesize_qa(g.record, task, g.planted, rng_seed=2))
            except Exception:
                continue
        if len(qas) >= 2:
            records.append(g.record.with_qa_pairs(qas[:2]))
    assert len(records) >= 8
    return records


def test_collect_from_file_flags_missing(tmp_path, small_benchmark):
    items = benchmark_items(small_benchmark)
    responses = [ModelResponse(qa.id, qa.answer.as_text()) for qa in items][:-2]
    path = tmp_path / "resp.jsonl"
    write_responses(path, responses)
    collected = collect_responses(small_benchmark, response_file=path)
    assert len(collected) == len(items)
    missing = [r for r in collected if r.missing]
    assert len(missing) == 2
    result = evaluate_responses(small_benchmark, collected)
    assert sum(1 for it in result.items if not it.correct) == 2
    assert {it.mode for it in result.items if not it.correct} == {"missing"}


def test_round_trip_response_file(tmp_path):
    path = tmp_path / "r.jsonl"
    responses = [ModelResponse("a", "1"), ModelResponse("b", "two words")]
    write_responses(path, responses)
    assert read_responses(path) == responses


def test_unknown_response_ids_rejected(small_benchmark):
    with pytest.raises(UnknownItem):
        evaluate_responses(small_benchmark, [ModelResponse("martian", "42")])


def test_echo_model_scores_100_percent(small_benchmark):
    by_question = {}
    for r in small_benchmark:
        for qa in r.qa_pairs:
            by_question[qa.question] = qa.answer.as_text()

    def reply(messages):
        text = messages[-1]["content"]
        assert text.endswith(SHORT_ANSWER_SUFFIX)
        return by_question[text[: -len(SHORT_ANSWER_SUFFIX)].strip()]

    responses = collect_responses(small_benchmark, model=StubClient(reply=reply))
    result = evaluate_responses(small_benchmark, responses)
    assert result.overall == 1.0
    for key, acc in result.accuracy_by_category.items():
        assert acc in (None, 1.0)


def test_transport_failures_become_missing(small_benchmark):
    class FlakyModel:
        def __init__(self):
            self.n = 0

        def complete(self, messages, temperature=0.0):
            self.n += 1
            if self.n % 3 == 0:
                raise TransportError("blip")
            return "whatever"

    responses = collect_responses(small_benchmark, model=FlakyModel())
    assert any(r.missing for r in responses)
    result = evaluate_responses(small_benchmark, responses)
    assert len(result.items) == len(benchmark_items(small_benchmark))


def test_aggregate_equals_mean_of_items(small_benchmark):
    items = benchmark_items(small_benchmark)
    responses = [
        ModelResponse(qa.id, qa.answer.as_text() if i % 2 == 0 else "definitely wrong answer")
        for i, qa in enumerate(items)
    ]
    result = evaluate_responses(small_benchmark, responses)
    mean = sum(1 for it in result.items if it.correct) / len(result.items)
    assert abs(result.overall - mean) < 1e-12


def test_report_renders_all_sections(small_benchmark):
    items = benchmark_items(small_benchmark)
    responses = [ModelResponse(qa.id, qa.answer.as_text()) for qa in items]
    result = evaluate_responses(small_benchmark, responses)
    text = render_report(result)
    assert "By task category" in text
    assert "By question style" in text
    assert "Overall accuracy: 100.00%" in text
    assert "Find Clusters" in text
    empty_cells = [line for line in text.splitlines() if "n/a" in line]
    assert empty_cells or all(v is not None for v in result.accuracy_by_category.values())
