"""Chart specifications: declarative descriptions that render deterministically."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

from .errors import ValidationError
from .tables import ColumnKind, DataTable, canon_num, fmt_num


class ChartType(str, Enum):
    LINE = "line"
    BAR = "bar"
    STACKED_BAR = "stacked_bar"
    PCT_STACKED_BAR = "pct_stacked_bar"
    PIE = "pie"
    HISTOGRAM = "histogram"
    SCATTERPLOT = "scatterplot"
    AREA = "area"
    STACKED_AREA = "stacked_area"
    BUBBLE = "bubble"
    TREEMAP = "treemap"


class Grouping(str, Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


class Layout(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


#: Chart types drawn around a center instead of on axes.
RADIAL_TYPES = frozenset({ChartType.PIE, ChartType.TREEMAP})

#: Chart types where axis inversion/truncation make no sense and are rejected.
NO_AXIS_TYPES = frozenset(
    {ChartType.PIE, ChartType.TREEMAP, ChartType.PCT_STACKED_BAR}
)

#: Chart types that may carry a group field (multi-series / stacked / grouped).
GROUPABLE_TYPES = frozenset(
    {
        ChartType.LINE,
        ChartType.BAR,
        ChartType.STACKED_BAR,
        ChartType.PCT_STACKED_BAR,
        ChartType.AREA,
        ChartType.STACKED_AREA,
    }
)

#: Types where the group field is mandatory.
STACKED_TYPES = frozenset(
    {ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR, ChartType.STACKED_AREA}
)

PALETTES: dict[str, list[str]] = {
    "field": ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"],
    "dusk": ["#30426a", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"],
    "bright": ["#0173b2", "#de8f05", "#029e73", "#d55e00", "#cc78bc", "#ca9161"],
    "pastel": ["#a1c9f4", "#ffb482", "#8de5a1", "#ff9f9b", "#d0bbff", "#debb9b"],
    "earth": ["#7f6000", "#38761d", "#134f5c", "#741b47", "#b45309", "#3c4f76"],
}


@dataclass(frozen=True)
class ChartSpec:
    """One chart: type, data, encodings, and augmentation/style knobs."""

    id: str
    chart_type: ChartType
    table: DataTable
    x_field: Optional[str] = None
    y_field: Optional[str] = None
    group_field: Optional[str] = None
    size_field: Optional[str] = None
    number_annotations: bool = False
    grouping: Grouping = Grouping.SINGLE
    layout: Layout = Layout.VERTICAL
    axis_inverted: bool = False
    axis_truncation_min: Optional[float] = None
    bar_width_frac: float = 0.7
    palette_id: str = "field"
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "chart_type", ChartType(self.chart_type))
        object.__setattr__(self, "grouping", Grouping(self.grouping))
        object.__setattr__(self, "layout", Layout(self.layout))
        if self.axis_truncation_min is not None:
            object.__setattr__(
                self, "axis_truncation_min", canon_num(self.axis_truncation_min)
            )
        self._validate()

    # -- validation ----------------------------------------------------------

    def _field_kind(self, field_name: str, value: Optional[str]) -> Optional[ColumnKind]:
        if value is None:
            return None
        try:
            return self.table.column_kind(value)
        except ValidationError:
            raise ValidationError(
                "unknown_field", f"{field_name}={value!r} is not a table column"
            ) from None

    def _validate(self):
        ct = self.chart_type
        if not self.id:
            raise ValidationError("empty_id", "chart id must be non-empty")
        if not isinstance(self.rng_seed, int) or self.rng_seed < 0:
            raise ValidationError("seed_range", "rng_seed must be a non-negative int")
        if not (0.0 < self.bar_width_frac <= 1.0):
            raise ValidationError(
                "bar_width_range", f"bar_width_frac {self.bar_width_frac} not in (0,1]"
            )
        if self.palette_id not in PALETTES:
            raise ValidationError("unknown_palette", f"palette {self.palette_id!r}")

        xk = self._field_kind("x_field", self.x_field)
        yk = self._field_kind("y_field", self.y_field)
        gk = self._field_kind("group_field", self.group_field)
        sk = self._field_kind("size_field", self.size_field)

        if self.size_field is not None:
            if ct is not ChartType.BUBBLE:
                raise ValidationError(
                    "size_field_misuse", "size_field is only valid for bubble charts"
                )
            if sk is not ColumnKind.NUMERIC:
                raise ValidationError("size_field_kind", "size_field must be numeric")

        if self.grouping is Grouping.MULTIPLE and self.group_field is None:
            raise ValidationError(
                "group_field_missing", "grouping=multiple requires group_field"
            )
        if self.group_field is not None and gk is not ColumnKind.CATEGORICAL:
            raise ValidationError("group_field_kind", "group_field must be categorical")
        if (self.group_field is not None) != (self.grouping is Grouping.MULTIPLE):
            raise ValidationError(
                "grouping_inconsistent",
                "group_field must be set exactly when grouping is multiple",
            )
        if self.group_field is not None and ct not in GROUPABLE_TYPES and ct is not ChartType.TREEMAP:
            raise ValidationError(
                "group_field_misuse", f"{ct.value} charts do not take a group field"
            )
        if ct in STACKED_TYPES and self.group_field is None:
            raise ValidationError(
                "group_field_missing", f"{ct.value} requires a group field"
            )

        if ct in NO_AXIS_TYPES and (self.axis_inverted or self.axis_truncation_min is not None):
            raise ValidationError(
                "axis_opts_forbidden",
                f"{ct.value} charts forbid axis inversion/truncation",
            )

        self._validate_fields(ct, xk, yk)
        self._validate_truncation(ct)
        self._validate_values(ct)

    def _validate_fields(self, ct, xk, yk):
        def need(cond, code, msg):
            if not cond:
                raise ValidationError(code, msg)

        if ct is ChartType.HISTOGRAM:
            need(self.x_field is not None and xk is ColumnKind.NUMERIC,
                 "x_field_kind", "histogram needs a numeric x_field")
            need(self.y_field is None, "y_field_misuse", "histogram takes no y_field")
            return
        need(self.y_field is not None and yk is ColumnKind.NUMERIC,
             "y_field_kind", f"{ct.value} needs a numeric y_field")
        need(self.x_field is not None, "x_field_missing", f"{ct.value} needs an x_field")
        if ct in (ChartType.SCATTERPLOT, ChartType.BUBBLE):
            need(xk is ColumnKind.NUMERIC, "x_field_kind", f"{ct.value} x must be numeric")
            if ct is ChartType.BUBBLE:
                need(self.size_field is not None, "size_field_missing",
                     "bubble needs a size_field")
        elif ct is ChartType.PIE:
            need(xk is ColumnKind.CATEGORICAL, "x_field_kind", "pie x must be categorical")
        elif ct is ChartType.TREEMAP:
            need(xk is ColumnKind.CATEGORICAL, "x_field_kind", "treemap leaves must be categorical")
            need(self.group_field is not None, "group_field_missing",
                 "treemap needs a group_field naming the parent column")
        elif ct in (ChartType.BAR, ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR):
            need(xk in (ColumnKind.CATEGORICAL, ColumnKind.TEMPORAL),
                 "x_field_kind", f"{ct.value} x must be categorical or temporal")
        # line/area/stacked_area accept any x kind (ordinal or linear axis).

    def _validate_truncation(self, ct):
        if self.axis_truncation_min is None or self.axis_inverted:
            return
        lo = min(self._value_extents())
        if self.axis_truncation_min >= lo:
            raise ValidationError(
                "truncation_hides_data",
                f"axis floor {self.axis_truncation_min} would hide values >= {lo}",
            )

    def _validate_values(self, ct):
        if ct in STACKED_TYPES or ct is ChartType.PIE:
            ys = self.table.column_values(self.y_field)
            if any(v < 0 for v in ys):
                raise ValidationError(
                    "negative_segment", f"{ct.value} segments must be non-negative"
                )
            if sum(ys) <= 0:
                raise ValidationError("nonpositive_total", f"{ct.value} needs a positive total")
        if ct is ChartType.PCT_STACKED_BAR:
            totals: dict = {}
            for x, y in zip(
                self.table.column_values(self.x_field),
                self.table.column_values(self.y_field),
            ):
                totals[x] = totals.get(x, 0.0) + y
            if any(t <= 0 for t in totals.values()):
                raise ValidationError(
                    "nonpositive_total", "every 100%-stacked bar needs a positive total"
                )
        if ct is ChartType.TREEMAP:
            if any(v <= 0 for v in self.table.column_values(self.y_field)):
                raise ValidationError("nonpositive_value", "treemap cells must be positive")

    def _value_extents(self) -> list[float]:
        if self.chart_type is ChartType.HISTOGRAM:
            return self.table.column_values(self.x_field)
        return self.table.column_values(self.y_field)

    # -- helpers -------------------------------------------------------------

    def with_changes(self, **kwargs) -> "ChartSpec":
        return replace(self, **kwargs)

    def palette(self) -> list[str]:
        return PALETTES[self.palette_id]

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "chart_type": self.chart_type.value,
            "table": self.table.to_json_dict(),
            "x_field": self.x_field,
            "y_field": self.y_field,
            "group_field": self.group_field,
            "size_field": self.size_field,
            "number_annotations": self.number_annotations,
            "grouping": self.grouping.value,
            "layout": self.layout.value,
            "axis_inverted": self.axis_inverted,
            "axis_truncation_min": (
                None if self.axis_truncation_min is None else fmt_num(self.axis_truncation_min)
            ),
            "bar_width_frac": self.bar_width_frac,
            "palette_id": self.palette_id,
            "title": self.title,
            "x_label": self.x_label,
            "y_label": self.y_label,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChartSpec":
        trunc = d.get("axis_truncation_min")
        return cls(
            id=d["id"],
            chart_type=ChartType(d["chart_type"]),
            table=DataTable.from_json_dict(d["table"]),
            x_field=d.get("x_field"),
            y_field=d.get("y_field"),
            group_field=d.get("group_field"),
            size_field=d.get("size_field"),
            number_annotations=bool(d.get("number_annotations", False)),
            grouping=Grouping(d.get("grouping", "single")),
            layout=Layout(d.get("layout", "vertical")),
            axis_inverted=bool(d.get("axis_inverted", False)),
            axis_truncation_min=None if trunc is None else float(trunc),
            bar_width_frac=float(d.get("bar_width_frac", 0.7)),
            palette_id=d.get("palette_id", "field"),
            title=d.get("title", ""),
            x_label=d.get("x_label", ""),
            y_label=d.get("y_label", ""),
            rng_seed=int(d.get("rng_seed", 0)),
        )


TREND_CLASSES = ("increasing", "decreasing", "stable", "fluctuating")
ATTR_LAYOUTS = ("horizontal", "vertical", "radial")


@dataclass(frozen=True)
class ChartAttributes:
    """Fine-grained attributes used for labeling, stratification, and probes."""

    chart_type: ChartType
    number_annotation: str  # present | absent
    data_grouping: str      # single | multiple
    trend: Optional[str]    # increasing | decreasing | stable | fluctuating
    layout: str             # horizontal | vertical | radial

    def __post_init__(self):
        object.__setattr__(self, "chart_type", ChartType(self.chart_type))
        if self.number_annotation not in ("present", "absent"):
            raise ValidationError("bad_attribute", f"number_annotation {self.number_annotation!r}")
        if self.data_grouping not in ("single", "multiple"):
            raise ValidationError("bad_attribute", f"data_grouping {self.data_grouping!r}")
        if self.layout not in ATTR_LAYOUTS:
            raise ValidationError("bad_attribute", f"layout {self.layout!r}")
        if self.chart_type in RADIAL_TYPES:
            if self.trend is not None:
                raise ValidationError(
                    "trend_forbidden", f"{self.chart_type.value} has no trend attribute"
                )
        elif self.trend not in TREND_CLASSES:
            raise ValidationError("bad_attribute", f"trend {self.trend!r}")

    def key(self) -> tuple:
        return (
            self.chart_type.value,
            self.number_annotation,
            self.data_grouping,
            self.trend or "",
            self.layout,
        )

    def to_json_dict(self) -> dict:
        return {
            "chart_type": self.chart_type.value,
            "number_annotation": self.number_annotation,
            "data_grouping": self.data_grouping,
            "trend": self.trend,
            "layout": self.layout,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChartAttributes":
        return cls(
            chart_type=ChartType(d["chart_type"]),
            number_annotation=d["number_annotation"],
            data_grouping=d["data_grouping"],
            trend=d.get("trend"),
            layout=d["layout"],
        )


def classify_trend(ys: Sequence[float]) -> str:
    """Label a value sequence as increasing/decreasing/stable/fluctuating.

    Least-squares slope over index order, normalized by the value range; a
    normalized slope of at least 0.1 counts as a direction, otherwise the
    detrended spread decides between stable and fluctuating.
    """
    ys = [float(v) for v in ys]
    n = len(ys)
    if n < 2:
        return "stable"
    yr = max(ys) - min(ys)
    if yr == 0:
        return "stable"
    xs = list(range(n))
    mx = (n - 1) / 2
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    norm = slope * (n - 1) / yr
    if norm >= 0.1:
        return "increasing"
    if norm <= -0.1:
        return "decreasing"
    resid = [y - (my + slope * (x - mx)) for x, y in zip(xs, ys)]
    spread = math.sqrt(sum(r * r for r in resid) / n)
    return "fluctuating" if spread / yr >= 0.25 else "stable"


def histogram_bins(values: Sequence[float]) -> tuple[list[float], list[int]]:
    """Equal-width bins shared by the renderer and the QA oracles.

    Returns (edges, counts) with len(edges) == len(counts) + 1; the last bin
    is closed on the right.
    """
    vals = [float(v) for v in values]
    lo, hi = min(vals), max(vals)
    if lo == hi:
        return [lo, hi], [len(vals)]
    n_bins = min(10, max(4, int(round(math.sqrt(len(vals))))))
    width = (hi - lo) / n_bins
    edges = [lo + i * width for i in range(n_bins)] + [hi]
    counts = [0] * n_bins
    for v in vals:
        idx = min(n_bins - 1, int((v - lo) / width))
        counts[idx] += 1
    return edges, counts


def bin_label(lo: float, hi: float) -> str:
    return f"{fmt_num(canon_num(lo))} to {fmt_num(canon_num(hi))}"


def attributes_from_spec(spec: ChartSpec) -> ChartAttributes:
    """Derive ground-truth attributes for a generated chart."""
    ct = spec.chart_type
    if ct in RADIAL_TYPES:
        trend = None
        layout = "radial"
    else:
        layout = spec.layout.value
        if ct is ChartType.HISTOGRAM:
            _, counts = histogram_bins(spec.table.column_values(spec.x_field))
            trend = classify_trend([float(c) for c in counts])
        elif spec.group_field is not None and ct in STACKED_TYPES:
            trend = classify_trend(_stacked_totals(spec))
        else:
            trend = classify_trend(_primary_series(spec))
    grouping = "multiple" if spec.grouping is Grouping.MULTIPLE else "single"
    return ChartAttributes(
        chart_type=ct,
        number_annotation="present" if spec.number_annotations else "absent",
        data_grouping=grouping,
        trend=trend,
        layout=layout,
    )


def _primary_series(spec: ChartSpec) -> list[float]:
    ys = spec.table.column_values(spec.y_field)
    if spec.group_field is None:
        return ys
    groups = spec.table.column_values(spec.group_field)
    first = groups[0]
    return [y for y, g in zip(ys, groups) if g == first]


def _stacked_totals(spec: ChartSpec) -> list[float]:
    xs = spec.table.column_values(spec.x_field)
    ys = spec.table.column_values(spec.y_field)
    totals: dict = {}
    order = []
    for x, y in zip(xs, ys):
        if x not in totals:
            totals[x] = 0.0
            order.append(x)
        totals[x] += y
    return [totals[x] for x in order]
