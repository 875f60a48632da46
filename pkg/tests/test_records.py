import pytest

from civ.charts import ChartType, attributes_from_spec
from civ.errors import ValidationError
from civ.records import Answer, AnswerKind, DatasetRecord, QAPair, QAStyle
from civ.tasks import TaskCategory, TaskName, ValueMode


def test_answer_kinds_validate():
    assert Answer(AnswerKind.NUMBER, 4.5).value == 4.5
    assert Answer(AnswerKind.RANGE, (1.0, 2.0)).value == (1.0, 2.0)
    assert Answer(AnswerKind.BOOLEAN, True).value is True
    assert Answer(AnswerKind.LIST, ("a", "b")).value == ("a", "b")
    with pytest.raises(ValidationError):
        Answer(AnswerKind.NUMBER, float("nan"))
    with pytest.raises(ValidationError):
        Answer(AnswerKind.RANGE, (3.0, 1.0))
    with pytest.raises(ValidationError):
        Answer(AnswerKind.TEXT, "")
    with pytest.raises(ValidationError):
        Answer(AnswerKind.LIST, ())


def test_answer_as_text():
    assert Answer(AnswerKind.NUMBER, 4.0).as_text() == "4"
    assert Answer(AnswerKind.RANGE, (1.5, 2.0)).as_text() == "1.5 to 2"
    assert Answer(AnswerKind.BOOLEAN, False).as_text() == "no"
    assert Answer(AnswerKind.LIST, ("a", "b")).as_text() == "a, b"


def test_answer_number_canonicalized():
    assert Answer(AnswerKind.NUMBER, 1 / 3).value == 0.333333


def _qa(chart_id="bar-1", category=None, **kw):
    category = category or TaskCategory(TaskName.DATA_RETRIEVAL, ValueMode.ABSOLUTE)
    base = dict(
        id="q1",
        chart_id=chart_id,
        question="What is the Sales of Apple?",
        answer=Answer(AnswerKind.NUMBER, 30.5),
        category=category,
        qa_style=QAStyle.DATA_RETRIEVAL,
    )
    base.update(kw)
    return QAPair(**base)


def test_qa_validation():
    qa = _qa()
    assert qa.reasoning is None
    with pytest.raises(ValidationError):
        _qa(question="")
    with pytest.raises(ValidationError):
        _qa(provenance="scraped")
    with pytest.raises(ValidationError):
        _qa(reasoning=())


def test_qa_json_round_trip():
    qa = _qa(reasoning=("step one", "step two"))
    assert QAPair.from_json_dict(qa.to_json_dict()) == qa


def _record(bar_spec, qa_pairs=()):
    return DatasetRecord(
        chart_id=bar_spec.id,
        spec=bar_spec,
        svg_path=f"charts/{bar_spec.id}.svg",
        table=bar_spec.table,
        qa_pairs=tuple(qa_pairs),
        attributes=attributes_from_spec(bar_spec),
    )


def test_record_accepts_consistent_parts(bar_spec):
    rec = _record(bar_spec, [_qa()])
    assert rec.qa_pairs[0].chart_id == bar_spec.id


def test_record_rejects_id_mismatch(bar_spec):
    with pytest.raises(ValidationError) as e:
        DatasetRecord(
            chart_id="other",
            spec=bar_spec,
            svg_path="charts/x.svg",
            table=bar_spec.table,
            qa_pairs=(),
            attributes=attributes_from_spec(bar_spec),
        )
    assert e.value.code == "id_mismatch"


def test_record_rejects_table_mismatch(bar_spec, stacked_table):
    with pytest.raises(ValidationError) as e:
        DatasetRecord(
            chart_id=bar_spec.id,
            spec=bar_spec,
            svg_path="charts/x.svg",
            table=stacked_table,
            qa_pairs=(),
            attributes=attributes_from_spec(bar_spec),
        )
    assert e.value.code == "table_mismatch"


def test_record_rejects_qa_for_wrong_chart(bar_spec):
    with pytest.raises(ValidationError) as e:
        _record(bar_spec, [_qa(chart_id="someone-else")])
    assert e.value.code == "qa_chart_mismatch"


def test_record_rejects_illegal_task_cell(bar_spec):
    illegal = TaskCategory(TaskName.FIND_CLUSTERS, ValueMode.ABSOLUTE)
    with pytest.raises(ValidationError) as e:
        _record(bar_spec, [_qa(category=illegal)])
    assert e.value.code == "illegal_cell"


def test_record_json_round_trip(bar_spec):
    rec = _record(bar_spec, [_qa()])
    again = DatasetRecord.from_json_dict(rec.to_json_dict())
    assert again == rec
    assert again.spec.chart_type is ChartType.BAR
