import json

import pytest

from civ.charts import attributes_from_spec
from civ.errors import DuplicateId, IntegrityError, ParseError
from civ.records import Answer, AnswerKind, DatasetRecord, QAPair, QAStyle
from civ.storage import read_dataset, read_manifest, write_dataset
from civ.tasks import TaskCategory, TaskName, ValueMode


def _record(spec, qa_count=0):
    qas = tuple(
        QAPair(
            id=f"{spec.id}-q{i}",
            chart_id=spec.id,
            question="What is the Sales of Apple?",
            answer=Answer(AnswerKind.NUMBER, 30.5),
            category=TaskCategory(
                [TaskName.DATA_RETRIEVAL, TaskName.FIND_EXTREMUM, TaskName.MAKE_COMPARISONS][i % 3],
                ValueMode.ABSOLUTE,
            ),
            qa_style=QAStyle.DATA_RETRIEVAL,
        )
        for i in range(qa_count)
    )
    return DatasetRecord(
        chart_id=spec.id,
        spec=spec,
        svg_path=f"charts/{spec.id}.svg",
        table=spec.table,
        qa_pairs=qas,
        attributes=attributes_from_spec(spec),
    )


def test_write_read_round_trip(tmp_path, bar_spec, stacked_spec):
    records = [_record(bar_spec, 2), _record(stacked_spec)]
    manifest = write_dataset(records, tmp_path)
    assert manifest["counts_by_chart_type"] == {"bar": 1, "stacked_bar": 1}
    assert (tmp_path / "charts" / "bar-1.svg").exists()
    again = read_dataset(tmp_path)
    assert again == records


def test_manifest_counts_per_category(tmp_path, bar_spec):
    write_dataset([_record(bar_spec, 3)], tmp_path)
    manifest = read_manifest(tmp_path)
    assert sum(manifest["counts_by_category"].values()) == 3
    assert manifest["counts_by_category"] == {
        "data_retrieval": 1, "find_extremum": 1, "make_comparisons": 1,
    }


def test_empty_dataset(tmp_path):
    manifest = write_dataset([], tmp_path)
    assert manifest["total_records"] == 0
    assert (tmp_path / "records.jsonl").read_text() == ""
    assert read_dataset(tmp_path) == []


def test_duplicate_ids_rejected(tmp_path, bar_spec):
    with pytest.raises(DuplicateId):
        write_dataset([_record(bar_spec), _record(bar_spec)], tmp_path)


def test_rewrite_is_byte_identical(tmp_path, bar_spec, stacked_spec):
    records = [_record(bar_spec, 1), _record(stacked_spec)]
    write_dataset(records, tmp_path / "a")
    write_dataset(records, tmp_path / "b")
    for name in ["records.jsonl", "manifest.json", "charts/bar-1.svg", "charts/sb-1.svg"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_malformed_line_reports_line_number(tmp_path, bar_spec):
    write_dataset([_record(bar_spec)], tmp_path)
    path = tmp_path / "records.jsonl"
    path.write_text(path.read_text() + "{not json\n")
    with pytest.raises(ParseError) as e:
        read_dataset(tmp_path)
    assert e.value.line == 2


def test_schema_violation_reports_line_number(tmp_path, bar_spec):
    write_dataset([_record(bar_spec)], tmp_path)
    path = tmp_path / "records.jsonl"
    d = json.loads(path.read_text())
    d["spec"]["bar_width_frac"] = 7.0
    path.write_text(json.dumps(d) + "\n")
    with pytest.raises(ParseError) as e:
        read_dataset(tmp_path)
    assert e.value.line == 1


def test_count_mismatch_is_integrity_error(tmp_path, bar_spec, stacked_spec):
    write_dataset([_record(bar_spec), _record(stacked_spec)], tmp_path)
    path = tmp_path / "records.jsonl"
    lines = path.read_text().splitlines()
    path.write_text(lines[0] + "\n")
    with pytest.raises(IntegrityError):
        read_dataset(tmp_path)


def test_missing_manifest_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        read_dataset(tmp_path)
