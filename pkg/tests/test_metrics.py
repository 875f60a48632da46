import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from civ.metrics import (
    JudgeVerdict,
    is_count_question,
    is_year_answer,
    judge_evaluate,
    parse_number,
    parse_numbers,
    relaxed_correctness,
    table_f1,
    tag_question_style,
)
from civ.rag import StubClient
from civ.records import Answer, AnswerKind, QAPair, QAStyle
from civ.tables import Column, ColumnKind, DataTable, make_table
from civ.tasks import TaskCategory, TaskName, ValueMode


def num(v):
    return Answer(AnswerKind.NUMBER, v)


def test_five_percent_boundary_is_inclusive():
    assert relaxed_correctness("42", num(40.0))        # exactly 5%
    assert not relaxed_correctness("42.1", num(40.0))  # 5.25%
    assert relaxed_correctness("38", num(40.0))
    assert not relaxed_correctness("37.9", num(40.0))


def test_text_matching_is_case_insensitive_exact():
    gold = Answer(AnswerKind.TEXT, "asia")
    assert relaxed_correctness("Asia", gold)
    assert relaxed_correctness("  ASIA  ", gold)
    assert not relaxed_correctness("Asia Minor", gold)


def test_numeric_parsing_strips_decorations():
    assert parse_number("$1,250.75") == 1250.75
    assert parse_number("42%") == 42.0
    assert parse_number("about 17 units") == 17.0
    assert parse_number("no digits") is None
    assert parse_numbers("between 3.5 and 7", limit=2) == [3.5, 7.0]
    assert relaxed_correctness("1,250", num(1250.0))
    assert relaxed_correctness("$99", num(100.0))


def test_zero_gold_needs_exact_zero():
    assert relaxed_correctness("0", num(0.0))
    assert relaxed_correctness("0.0000000001", num(0.0))
    assert not relaxed_correctness("0.1", num(0.0))


def test_unparseable_numeric_pred_is_incorrect_not_error():
    assert relaxed_correctness("dunno", num(5.0)) is False


def test_range_answers_check_both_endpoints():
    gold = Answer(AnswerKind.RANGE, (10.0, 20.0))
    assert relaxed_correctness("10 to 20", gold)
    assert relaxed_correctness("from 20 down to 10", gold)  # order-insensitive
    assert relaxed_correctness("10.5 to 19.5", gold)        # both within 5%
    assert not relaxed_correctness("10 to 25", gold)
    assert not relaxed_correctness("15", gold)


def test_boolean_answers():
    gold = Answer(AnswerKind.BOOLEAN, True)
    assert relaxed_correctness("yes", gold)
    assert relaxed_correctness("True", gold)
    assert not relaxed_correctness("no", gold)
    assert not relaxed_correctness("maybe", gold)
    assert relaxed_correctness("no", Answer(AnswerKind.BOOLEAN, False))


def test_list_answers_are_order_insensitive():
    gold = Answer(AnswerKind.LIST, ("alpha", "beta"))
    assert relaxed_correctness("beta, alpha", gold)
    assert relaxed_correctness("alpha and beta", gold)
    assert not relaxed_correctness("alpha", gold)
    nums = Answer(AnswerKind.LIST, ("10", "20"))
    assert relaxed_correctness("20.5, 10", nums)


def test_self_consistency_gold_as_text_is_correct():
    answers = [
        num(42.0), num(0.0), num(-3.25),
        Answer(AnswerKind.TEXT, "Brazil"),
        Answer(AnswerKind.RANGE, (1.5, 9.0)),
        Answer(AnswerKind.BOOLEAN, False),
        Answer(AnswerKind.LIST, ("x", "y", "z")),
    ]
    for gold in answers:
        assert relaxed_correctness(gold.as_text(), gold), gold


def _qa(question, answer):
    return QAPair(
        id="q", chart_id="c", question=question, answer=answer,
        category=TaskCategory(TaskName.DATA_RETRIEVAL, ValueMode.ABSOLUTE),
        qa_style=QAStyle.DATA_RETRIEVAL,
    )


def test_year_answers_permit_no_error_margin():
    qa = _qa("In which year did revenue peak?", num(2017.0))
    # 2016 is within 5% of 2017 but years demand exactness
    assert relaxed_correctness("2016", qa.answer)
    verdict = judge_evaluate(qa, "2016")
    assert verdict.mode == "deterministic_fallback"
    assert not verdict.equivalent
    assert judge_evaluate(qa, "2017").equivalent


def test_count_questions_permit_no_error_margin():
    qa = _qa("How many clusters of points does the chart show?", num(40.0))
    assert not judge_evaluate(qa, "41").equivalent  # within 5% but counted
    assert judge_evaluate(qa, "40").equivalent


def test_count_normalization_matches_units():
    qa = _qa("How many clusters are there?", Answer(AnswerKind.TEXT, "3 clusters"))
    assert judge_evaluate(qa, "3").equivalent
    assert judge_evaluate(qa, "3 clusters").equivalent
    assert not judge_evaluate(qa, "4").equivalent


def test_year_and_count_detectors():
    assert is_year_answer(num(1999.0))
    assert is_year_answer(num(2100.0))
    assert not is_year_answer(num(1850.0))
    assert not is_year_answer(num(2017.5))
    assert is_count_question("How many bars exceed 10?")
    assert not is_count_question("Which bar is tallest?")


def test_no_judge_means_deterministic_fallback_and_reproducible():
    qa = _qa("What is the Sales of Apple?", num(30.5))
    v1 = judge_evaluate(qa, "30.5")
    v2 = judge_evaluate(qa, "30.5")
    assert v1 == v2
    assert v1.mode == "deterministic_fallback" and v1.equivalent


def test_remote_judge_used_when_available():
    qa = _qa("What is the Sales of Apple?", num(30.5))
    yes = judge_evaluate(qa, "30.49", judge=StubClient(reply="yes, close enough"))
    assert yes.mode == "remote_judge" and yes.equivalent
    no = judge_evaluate(qa, "12", judge=StubClient(reply="No - far off."))
    assert no.mode == "remote_judge" and not no.equivalent


def test_judge_transport_failure_falls_back():
    from civ.errors import TransportError

    class FailingJudge:
        def complete(self, messages, temperature=0.0):
            raise TransportError("nope")

    qa = _qa("What is the Sales of Apple?", num(30.5))
    verdict = judge_evaluate(qa, "30.5", judge=FailingJudge())
    assert verdict.mode == "deterministic_fallback"
    assert verdict.equivalent


def test_table_f1_identical_tables(fruit_table):
    score = table_f1(fruit_table, fruit_table)
    assert score.precision == score.recall == score.f1 == 1.0


def _permute(table, rng):
    rows = list(table.rows)
    rng.shuffle(rows)
    col_order = list(range(len(table.columns)))
    rng.shuffle(col_order)
    cols = tuple(table.columns[i] for i in col_order)
    rows = tuple(tuple(r[i] for i in col_order) for r in rows)
    return DataTable(name=table.name, columns=cols, rows=rows)


def test_table_f1_invariant_under_permutations(fruit_table):
    rng = random.Random(0)
    for _ in range(20):
        shuffled = _permute(fruit_table, rng)
        score = table_f1(shuffled, fruit_table)
        assert score.f1 == 1.0


def test_table_f1_counts_corrupted_cells():
    gold = make_table(
        "g", [("K", "categorical"), ("A", "numeric"), ("B", "numeric")],
        [(f"r{i}", float(i), float(10 + i)) for i in range(5)],
    )
    # corrupt half of the 10 numeric cells by 20% (all of column A)
    rows = [(f"r{i}", float(i) * 1.2 + 0.5, float(10 + i)) for i in range(5)]
    pred = make_table("g", [("K", "categorical"), ("A", "numeric"), ("B", "numeric")], rows)
    score = table_f1(pred, gold)
    # 5 key cells + 5 clean numeric cells match; 5 corrupted don't
    assert abs(score.precision - 10 / 15) < 1e-12
    assert abs(score.recall - 10 / 15) < 1e-12


def test_table_f1_monotone_under_increasing_corruption():
    gold = make_table(
        "g", [("K", "categorical"), ("V", "numeric")],
        [(f"r{i}", float(i + 1)) for i in range(8)],
    )
    last_recall = 1.0
    for corrupt in range(0, 9, 2):
        rows = [
            (f"r{i}", float(i + 1) * (2.0 if i < corrupt else 1.0))
            for i in range(8)
        ]
        pred = make_table("g", [("K", "categorical"), ("V", "numeric")], rows)
        score = table_f1(pred, gold)
        assert score.recall <= last_recall + 1e-12
        last_recall = score.recall


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_table_f1_permutation_property(seed):
    rng = random.Random(seed)
    n_rows = rng.randint(1, 8)
    n_num = rng.randint(1, 3)
    cols = [Column("key", ColumnKind.CATEGORICAL)] + [
        Column(f"c{j}", ColumnKind.NUMERIC) for j in range(n_num)
    ]
    rows = tuple(
        (f"row{i}",) + tuple(round(rng.uniform(-50, 50), 2) for _ in range(n_num))
        for i in range(n_rows)
    )
    table = DataTable(name="t", columns=tuple(cols), rows=rows)
    shuffled = _permute(table, rng)
    assert table_f1(shuffled, table).f1 == 1.0
    assert table_f1(table, shuffled).f1 == 1.0


def test_tag_question_style_rules():
    assert tag_question_style("What is the value of Brazil?") is QAStyle.DATA_RETRIEVAL
    assert tag_question_style("What is the difference between A and B?") is QAStyle.COMPOSITIONAL
    assert tag_question_style("Which color bar is on the left?") is QAStyle.VISUAL
    assert tag_question_style("Which color bar has the highest total?") is QAStyle.VISUAL_COMPOSITIONAL
    assert tag_question_style("What is the sum of all values?") is QAStyle.COMPOSITIONAL
    assert tag_question_style("Which is the rightmost point?") is QAStyle.VISUAL
