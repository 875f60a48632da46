import pytest

from civ.charts import ChartType
from civ.errors import ValidationError
from civ.tasks import (
    LEGAL_CELL_COUNT,
    LEGAL_TRIPLE_COUNT,
    TaskCategory,
    TaskName,
    ValueMode,
    all_legal_cells,
    all_legal_triples,
    enumerate_tasks,
    is_legal,
)


def test_grid_shape_is_pinned():
    assert len(all_legal_cells()) == LEGAL_CELL_COUNT == 54
    assert len(all_legal_triples()) == LEGAL_TRIPLE_COUNT == 59


def test_pie_is_relative_only():
    tasks = enumerate_tasks(ChartType.PIE)
    assert {t.name for t in tasks} == {
        TaskName.DATA_RETRIEVAL, TaskName.FIND_EXTREMUM, TaskName.MAKE_COMPARISONS,
    }
    assert all(t.value_mode is ValueMode.RELATIVE for t in tasks)


def test_scatterplot_supports_all_eight():
    tasks = enumerate_tasks(ChartType.SCATTERPLOT)
    assert len(tasks) == 8
    assert {t.name for t in tasks} == set(TaskName) - {TaskName.ETC_TASK}
    assert all(t.value_mode is ValueMode.ABSOLUTE for t in tasks)


def test_bubble_matches_scatterplot():
    assert enumerate_tasks(ChartType.BUBBLE) == enumerate_tasks(ChartType.SCATTERPLOT)


def test_histogram_has_etc_and_derived_values():
    tasks = enumerate_tasks(ChartType.HISTOGRAM)
    by_name = {t.name: t.value_mode for t in tasks}
    assert by_name[TaskName.ETC_TASK] is ValueMode.DERIVED
    assert by_name[TaskName.DATA_RETRIEVAL] is ValueMode.DERIVED
    assert by_name[TaskName.CHARACTERIZE_DISTRIBUTION] is ValueMode.ABSOLUTE
    assert TaskName.DETERMINE_RANGE not in by_name


def test_etc_only_for_histogram_and_treemap():
    for ct in ChartType:
        has_etc = any(t.name is TaskName.ETC_TASK for t in enumerate_tasks(ct))
        assert has_etc == (ct in (ChartType.HISTOGRAM, ChartType.TREEMAP))


def test_bar_retrieval_supports_both_value_modes():
    modes = {t.value_mode for t in enumerate_tasks(ChartType.BAR) if t.name is TaskName.DATA_RETRIEVAL}
    assert modes == {ValueMode.ABSOLUTE, ValueMode.RELATIVE}


def test_line_has_no_statistical_tasks():
    names = {t.name for t in enumerate_tasks(ChartType.LINE)}
    assert TaskName.FIND_ANOMALIES not in names
    assert TaskName.FIND_CLUSTERS not in names
    assert TaskName.CHARACTERIZE_DISTRIBUTION not in names
    assert TaskName.FIND_CORRELATIONS_TRENDS in names


def test_illegal_cells_rejected():
    with pytest.raises(ValidationError) as e:
        TaskCategory.create(ChartType.PIE, TaskName.DETERMINE_RANGE, ValueMode.ABSOLUTE)
    assert e.value.code == "illegal_cell"
    with pytest.raises(ValidationError):
        TaskCategory.create(ChartType.PIE, TaskName.DATA_RETRIEVAL, ValueMode.ABSOLUTE)
    with pytest.raises(ValidationError):
        TaskCategory.create(ChartType.LINE, TaskName.ETC_TASK, ValueMode.DERIVED)
    ok = TaskCategory.create(ChartType.PIE, TaskName.DATA_RETRIEVAL, ValueMode.RELATIVE)
    assert ok.value_mode is ValueMode.RELATIVE


def test_is_legal_accepts_strings():
    assert is_legal("bar", TaskName.MAKE_COMPARISONS, ValueMode.ABSOLUTE)
    assert not is_legal("bar", TaskName.MAKE_COMPARISONS, ValueMode.RELATIVE)


def test_category_json_round_trip():
    tc = TaskCategory(TaskName.FIND_EXTREMUM, ValueMode.RELATIVE)
    assert TaskCategory.from_json_dict(tc.to_json_dict()) == tc
