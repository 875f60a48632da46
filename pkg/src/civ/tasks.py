"""The chart-task grid: which analytic task applies to which chart type."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .charts import ChartType
from .errors import ValidationError


class TaskName(str, Enum):
    DATA_RETRIEVAL = "data_retrieval"
    FIND_EXTREMUM = "find_extremum"
    DETERMINE_RANGE = "determine_range"
    CHARACTERIZE_DISTRIBUTION = "characterize_distribution"
    FIND_ANOMALIES = "find_anomalies"
    FIND_CLUSTERS = "find_clusters"
    FIND_CORRELATIONS_TRENDS = "find_correlations_trends"
    MAKE_COMPARISONS = "make_comparisons"
    ETC_TASK = "etc_task"


class ValueMode(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"
    DERIVED = "derived"


_A = (ValueMode.ABSOLUTE,)
_R = (ValueMode.RELATIVE,)
_D = (ValueMode.DERIVED,)
_AR = (ValueMode.ABSOLUTE, ValueMode.RELATIVE)

_ALL_EIGHT = {
    TaskName.DATA_RETRIEVAL: _A,
    TaskName.FIND_EXTREMUM: _A,
    TaskName.DETERMINE_RANGE: _A,
    TaskName.CHARACTERIZE_DISTRIBUTION: _A,
    TaskName.FIND_ANOMALIES: _A,
    TaskName.FIND_CLUSTERS: _A,
    TaskName.FIND_CORRELATIONS_TRENDS: _A,
    TaskName.MAKE_COMPARISONS: _A,
}

#: Legal (task -> value modes) per chart type. Point charts support every
#: task; share-based charts are relative-only; histogram reads derive from
#: bin structure.
CHART_TASK_GRID: dict[ChartType, dict[TaskName, tuple[ValueMode, ...]]] = {
    ChartType.LINE: {
        TaskName.DATA_RETRIEVAL: _A,
        TaskName.FIND_EXTREMUM: _A,
        TaskName.DETERMINE_RANGE: _A,
        TaskName.FIND_CORRELATIONS_TRENDS: _A,
        TaskName.MAKE_COMPARISONS: _A,
    },
    ChartType.BAR: {
        TaskName.DATA_RETRIEVAL: _AR,
        TaskName.FIND_EXTREMUM: _A,
        TaskName.DETERMINE_RANGE: _A,
        TaskName.MAKE_COMPARISONS: _A,
    },
    ChartType.STACKED_BAR: {
        TaskName.DATA_RETRIEVAL: _AR,
        TaskName.FIND_EXTREMUM: _A,
        TaskName.DETERMINE_RANGE: _A,
        TaskName.MAKE_COMPARISONS: _AR,
    },
    ChartType.PCT_STACKED_BAR: {
        TaskName.DATA_RETRIEVAL: _R,
        TaskName.FIND_EXTREMUM: _R,
        TaskName.MAKE_COMPARISONS: _R,
    },
    ChartType.PIE: {
        TaskName.DATA_RETRIEVAL: _R,
        TaskName.FIND_EXTREMUM: _R,
        TaskName.MAKE_COMPARISONS: _R,
    },
    ChartType.HISTOGRAM: {
        TaskName.DATA_RETRIEVAL: _D,
        TaskName.FIND_EXTREMUM: _D,
        TaskName.CHARACTERIZE_DISTRIBUTION: _A,
        TaskName.MAKE_COMPARISONS: _D,
        TaskName.ETC_TASK: _D,
    },
    ChartType.SCATTERPLOT: dict(_ALL_EIGHT),
    ChartType.AREA: {
        TaskName.DATA_RETRIEVAL: _A,
        TaskName.FIND_EXTREMUM: _A,
        TaskName.DETERMINE_RANGE: _A,
        TaskName.FIND_CORRELATIONS_TRENDS: _A,
        TaskName.MAKE_COMPARISONS: _A,
    },
    ChartType.STACKED_AREA: {
        TaskName.DATA_RETRIEVAL: _AR,
        TaskName.FIND_EXTREMUM: _A,
        TaskName.DETERMINE_RANGE: _A,
        TaskName.FIND_CORRELATIONS_TRENDS: _A,
        TaskName.MAKE_COMPARISONS: _AR,
    },
    ChartType.BUBBLE: dict(_ALL_EIGHT),
    ChartType.TREEMAP: {
        TaskName.DATA_RETRIEVAL: _R,
        TaskName.FIND_EXTREMUM: _R,
        TaskName.MAKE_COMPARISONS: _R,
        TaskName.ETC_TASK: _D,
    },
}

#: Pin the grid shape so accidental edits fail loudly.
LEGAL_CELL_COUNT = 54
LEGAL_TRIPLE_COUNT = 59


@dataclass(frozen=True)
class TaskCategory:
    """An analytic task plus the value mode its answer reads."""

    name: TaskName
    value_mode: ValueMode

    def __post_init__(self):
        object.__setattr__(self, "name", TaskName(self.name))
        object.__setattr__(self, "value_mode", ValueMode(self.value_mode))

    @classmethod
    def create(
        cls, chart_type: ChartType, name: TaskName | str, value_mode: ValueMode | str
    ) -> "TaskCategory":
        name = TaskName(name)
        value_mode = ValueMode(value_mode)
        if not is_legal(chart_type, name, value_mode):
            raise ValidationError(
                "illegal_cell",
                f"({ChartType(chart_type).value}, {name.value}, {value_mode.value}) "
                "is not a legal chart-task cell",
            )
        return cls(name=name, value_mode=value_mode)

    def to_json_dict(self) -> dict:
        return {"name": self.name.value, "value_mode": self.value_mode.value}

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaskCategory":
        return cls(TaskName(d["name"]), ValueMode(d["value_mode"]))


def is_legal(chart_type: ChartType | str, name: TaskName, value_mode: ValueMode) -> bool:
    modes = CHART_TASK_GRID[ChartType(chart_type)].get(TaskName(name))
    return modes is not None and ValueMode(value_mode) in modes


def enumerate_tasks(chart_type: ChartType | str) -> list[TaskCategory]:
    """All legal task/value-mode combinations for a chart type, fixed order."""
    row = CHART_TASK_GRID[ChartType(chart_type)]
    out = []
    for name in TaskName:
        for mode in row.get(name, ()):
            out.append(TaskCategory(name, mode))
    return out


def all_legal_cells() -> list[tuple[ChartType, TaskName]]:
    return [
        (ct, name)
        for ct in ChartType
        for name in TaskName
        if CHART_TASK_GRID[ct].get(name)
    ]


def all_legal_triples() -> list[tuple[ChartType, TaskName, ValueMode]]:
    return [
        (ct, tc.name, tc.value_mode) for ct in ChartType for tc in enumerate_tasks(ct)
    ]
