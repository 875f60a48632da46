"""Procedural chart generation over the full chart space.

Tables are synthesized with controllable ground truth (planted outliers,
cluster counts, distribution shapes, target correlations), turned into specs
with seeded style choices, and expanded through encoding augmentations
(annotations, grouping, bar widths, axis truncation/inversion, palettes,
layout). Everything is deterministic given the seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .charts import (
    PALETTES,
    ChartSpec,
    ChartType,
    Grouping,
    Layout,
    attributes_from_spec,
)
from .errors import IllegalToggle, Incompatible, ValidationError
from .qasynth import PlantedKind, PlantedTruth, anomaly_zscore
from .records import DatasetRecord
from .tables import Column, ColumnKind, DataTable, canon_num

# ---------------------------------------------------------------------------
# name pools
# ---------------------------------------------------------------------------

ENTITY_POOLS = {
    "Country": [
        "Brazil", "Canada", "Denmark", "Egypt", "France", "Ghana", "Hungary",
        "India", "Japan", "Kenya", "Mexico", "Norway", "Peru", "Qatar",
        "Spain", "Turkey",
    ],
    "City": [
        "Aleppo", "Bergen", "Cusco", "Dakar", "Esbjerg", "Fukuoka", "Geneva",
        "Hanoi", "Izmir", "Jaipur", "Kyoto", "Lagos", "Malmo", "Nairobi",
        "Oslo", "Porto",
    ],
    "Product": [
        "Alloy", "Briquette", "Cable", "Drill", "Engine", "Fabric", "Gasket",
        "Hinge", "Ingot", "Jack", "Kiln", "Lathe", "Motor", "Nozzle",
        "Oiler", "Pump",
    ],
    "Department": [
        "Assembly", "Billing", "Catering", "Design", "Engineering", "Finance",
        "Grounds", "Housing", "Imaging", "Janitorial", "Kitchens", "Logistics",
        "Marketing", "Nursing", "Operations", "Packing",
    ],
}

METRICS = [
    "Revenue", "Exports", "Population", "Sales", "Score", "Output",
    "Visitors", "Emissions", "Budget", "Yield",
]

GROUP_SETS = [
    ["North", "South", "East", "West"],
    ["Online", "Retail", "Wholesale"],
    ["Alpha", "Beta", "Gamma", "Delta"],
    ["Domestic", "Foreign"],
]


def _pick_theme(rng: random.Random) -> tuple[str, list[str]]:
    unit = rng.choice(sorted(ENTITY_POOLS))
    return unit, list(ENTITY_POOLS[unit])


def _dedupe_floats(vals: list[float], step: float = 0.01) -> list[float]:
    """Nudge duplicate values upward so extremum/comparison answers stay unique."""
    seen: set[float] = set()
    out: list[float] = []
    for v in vals:
        while v in seen:
            v = canon_num(v + step)
        seen.add(v)
        out.append(v)
    return out


def _distinct_values(rng: random.Random, n: int, lo: float, hi: float, nd: int = 1) -> list[float]:
    seen: set[float] = set()
    out: list[float] = []
    while len(out) < n:
        v = canon_num(round(rng.uniform(lo, hi), nd))
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def _walk(rng: random.Random, n: int, drift: float) -> list[float]:
    vals: list[float] = []
    v = rng.uniform(30.0, 70.0)
    seen: set[float] = set()
    for _ in range(n):
        v = max(1.0, v + drift + rng.uniform(-8.0, 8.0))
        cv = canon_num(round(v, 1))
        while cv in seen:
            cv = canon_num(cv + 0.1)
        seen.add(cv)
        vals.append(cv)
    return vals


def _years(rng: random.Random, n: int) -> list[str]:
    start = rng.randint(1995, 2023 - n)
    return [str(start + i) for i in range(n)]


# ---------------------------------------------------------------------------
# table synthesis (with planted truths)
# ---------------------------------------------------------------------------


def _table_categorical_numeric(rng: random.Random, name_hint: str) -> DataTable:
    unit, pool = _pick_theme(rng)
    metric = rng.choice(METRICS)
    n = rng.randint(4, 8)
    labels = rng.sample(pool, n)
    values = _distinct_values(rng, n, 10.0, 100.0)
    return DataTable(
        name=f"{metric} by {unit} ({name_hint})",
        columns=(Column(unit, ColumnKind.CATEGORICAL), Column(metric, ColumnKind.NUMERIC)),
        rows=tuple(zip(labels, values)),
    )


def _table_series(rng: random.Random, name_hint: str, grouped: bool) -> DataTable:
    metric = rng.choice(METRICS)
    n = rng.randint(5, 9)
    years = _years(rng, n)
    drift = rng.choice([-4.0, -2.0, 0.0, 2.0, 4.0])
    if not grouped:
        return DataTable(
            name=f"{metric} over time ({name_hint})",
            columns=(Column("Year", ColumnKind.TEMPORAL), Column(metric, ColumnKind.NUMERIC)),
            rows=tuple(zip(years, _walk(rng, n, drift))),
        )
    groups = rng.choice(GROUP_SETS)[: rng.randint(2, 3)]
    rows = []
    for g in groups:
        for year, v in zip(years, _walk(rng, n, drift + rng.uniform(-2, 2))):
            rows.append((year, g, v))
    return DataTable(
        name=f"{metric} over time by series ({name_hint})",
        columns=(
            Column("Year", ColumnKind.TEMPORAL),
            Column("Series", ColumnKind.CATEGORICAL),
            Column(metric, ColumnKind.NUMERIC),
        ),
        rows=tuple(rows),
    )


def _table_stacked(rng: random.Random, name_hint: str, temporal: bool) -> DataTable:
    metric = rng.choice(METRICS)
    groups = rng.choice(GROUP_SETS)[: rng.randint(2, 4)]
    n = rng.randint(3, 6)
    if temporal:
        xs = _years(rng, n)
        x_col = Column("Year", ColumnKind.TEMPORAL)
    else:
        unit, pool = _pick_theme(rng)
        xs = rng.sample(pool, n)
        x_col = Column(unit, ColumnKind.CATEGORICAL)
    values = _distinct_values(rng, n * len(groups), 5.0, 60.0)
    rows = []
    k = 0
    for x in xs:
        for g in groups:
            rows.append((x, g, values[k]))
            k += 1
    return DataTable(
        name=f"{metric} composition ({name_hint})",
        columns=(x_col, Column("Segment", ColumnKind.CATEGORICAL), Column(metric, ColumnKind.NUMERIC)),
        rows=tuple(rows),
    )


def _shape_values(rng: random.Random, label: str, n: int) -> list[float]:
    if label == "uniform":
        a = rng.uniform(10, 40)
        w = rng.uniform(30, 60)
        vals = [rng.uniform(a, a + w) for _ in range(n)]
    elif label == "normal":
        mu = rng.uniform(40, 60)
        sd = rng.uniform(5, 10)
        vals = [rng.gauss(mu, sd) for _ in range(n)]
    elif label == "right_skewed":
        base = rng.uniform(10, 30)
        scale = rng.uniform(6, 10)
        vals = [base + scale * rng.lognormvariate(0.0, 0.8) for _ in range(n)]
    elif label == "left_skewed":
        top = rng.uniform(80, 100)
        scale = rng.uniform(6, 10)
        vals = [top - scale * rng.lognormvariate(0.0, 0.8) for _ in range(n)]
    else:  # bimodal
        sd = rng.uniform(3, 5)
        mu1 = rng.uniform(20, 35)
        mu2 = mu1 + rng.uniform(6.0, 8.0) * sd
        vals = [rng.gauss(mu1 if i % 2 == 0 else mu2, sd) for i in range(n)]
    return [canon_num(round(v, 2)) for v in vals]


def _table_histogram(rng: random.Random, name_hint: str) -> tuple[DataTable, PlantedTruth]:
    from .charts import histogram_bins

    metric = rng.choice(METRICS)
    label = rng.choice(list(SHAPE_CYCLE))
    for _ in range(50):
        n = rng.randint(150, 220)
        vals = _shape_values(rng, label, n)
        _, counts = histogram_bins(vals)
        peak = max(counts)
        if counts.count(peak) == 1:  # modal bin must be unique for the oracles
            break
    table = DataTable(
        name=f"{metric} distribution ({name_hint})",
        columns=(Column(metric, ColumnKind.NUMERIC),),
        rows=tuple((v,) for v in vals),
    )
    return table, PlantedTruth(PlantedKind.DISTRIBUTION_SHAPE, {"label": label})


SHAPE_CYCLE = ("uniform", "normal", "right_skewed", "left_skewed", "bimodal")
POINT_PLANT_CYCLE = (
    PlantedKind.ANOMALY,
    PlantedKind.CLUSTERS,
    PlantedKind.DISTRIBUTION_SHAPE,
    PlantedKind.CORRELATION,
)


def _correlated(rng: random.Random, n: int, r: float) -> tuple[list[float], list[float]]:
    """x, y with sample Pearson correlation r by construction (pre-rounding)."""
    import numpy as np

    while True:
        x = np.asarray([rng.uniform(10, 90) for _ in range(n)])
        e = np.asarray([rng.gauss(0, 1) for _ in range(n)])
        xs = (x - x.mean())
        if xs.std() == 0:
            continue
        xs = xs / xs.std()
        e = e - e.mean()
        e = e - (e @ xs) / (xs @ xs) * xs
        if e.std() == 0:
            continue
        e = e / e.std()
        y = r * xs + math.sqrt(max(0.0, 1 - r * r)) * e
        y = 50 + 15 * y
        if y.std() > 0:
            return x.tolist(), y.tolist()


def _table_points(
    rng: random.Random, name_hint: str, kind: PlantedKind, with_size: bool
) -> tuple[DataTable, PlantedTruth]:
    unit, pool = _pick_theme(rng)

    if kind is PlantedKind.ANOMALY:
        for _ in range(100):
            n = rng.randint(9, 13)
            labels = rng.sample(pool, n)
            cx, cy = rng.uniform(30, 60), rng.uniform(30, 60)
            sd = rng.uniform(3, 6)
            xs = [canon_num(round(rng.gauss(cx, sd), 2)) for _ in range(n - 1)]
            ys = [canon_num(round(rng.gauss(cy, sd), 2)) for _ in range(n - 1)]
            ang = rng.uniform(0, 2 * math.pi)
            dist = rng.uniform(6.0, 9.0) * sd
            xs.append(canon_num(round(cx + dist * math.cos(ang), 2)))
            ys.append(canon_num(round(cy + dist * math.sin(ang), 2)))
            order = list(range(n))
            rng.shuffle(order)
            labels = [labels[i] for i in order]
            xs = [xs[i] for i in order]
            ys = _dedupe_floats([ys[i] for i in order])
            outlier_pos = order.index(n - 1)
            z = anomaly_zscore(list(zip(xs, ys)), outlier_pos)
            if z >= 3.2:
                break
        payload = {"entity": labels[outlier_pos], "z_score": round(z, 3)}
        truth = PlantedTruth(PlantedKind.ANOMALY, payload)
    elif kind is PlantedKind.CLUSTERS:
        while True:
            k = rng.randint(2, 3)
            per = rng.randint(4, 5)
            sd = rng.uniform(1.5, 2.5)
            centers = []
            tries = 0
            while len(centers) < k and tries < 200:
                tries += 1
                c = (rng.uniform(15, 85), rng.uniform(15, 85))
                if all(math.dist(c, o) >= 7.0 * sd for o in centers):
                    centers.append(c)
            if len(centers) < k:
                continue
            pts = []
            for c in centers:
                for _ in range(per):
                    pts.append(
                        (
                            canon_num(round(rng.gauss(c[0], sd), 2)),
                            canon_num(round(rng.gauss(c[1], sd), 2)),
                        )
                    )
            blob_stds = []
            blob_centroids = []
            for b in range(k):
                blob = pts[b * per : (b + 1) * per]
                mx = sum(p[0] for p in blob) / per
                my = sum(p[1] for p in blob) / per
                blob_centroids.append((mx, my))
                blob_stds.append(
                    math.sqrt(sum((p[0] - mx) ** 2 + (p[1] - my) ** 2 for p in blob) / per)
                )
            sep_ok = all(
                math.dist(blob_centroids[i], blob_centroids[j]) >= 4.0 * max(blob_stds)
                for i in range(k)
                for j in range(i + 1, k)
            )
            if sep_ok:
                break
        n = k * per
        labels = rng.sample(pool, n)
        xs = [p[0] for p in pts]
        ys = _dedupe_floats([p[1] for p in pts])
        truth = PlantedTruth(PlantedKind.CLUSTERS, {"count": k})
    elif kind is PlantedKind.DISTRIBUTION_SHAPE:
        # Shape reads need enough points for the moments to be stable.
        label = rng.choice(list(SHAPE_CYCLE))
        n = rng.randint(140, 180)
        ys = _dedupe_floats(_shape_values(rng, label, n))
        labels = [f"P{i:03d}" for i in range(1, n + 1)]
        xs = _distinct_values(rng, n, 10.0, 90.0, nd=2)
        truth = PlantedTruth(PlantedKind.DISTRIBUTION_SHAPE, {"label": label})
    else:  # correlation
        target = rng.choice([-0.9, -0.8, 0.0, 0.8, 0.9])
        n = rng.randint(10, 14)
        xs_f, ys_f = _correlated(rng, n, target)
        xs = [canon_num(round(v, 2)) for v in xs_f]
        ys = _dedupe_floats([canon_num(round(v, 2)) for v in ys_f])
        labels = rng.sample(pool, n)
        truth = PlantedTruth(PlantedKind.CORRELATION, {"r": target})

    metric_x, metric_y = rng.sample(METRICS, 2)
    cols = [
        Column(unit, ColumnKind.CATEGORICAL),
        Column(metric_x, ColumnKind.NUMERIC),
        Column(metric_y, ColumnKind.NUMERIC),
    ]
    rows = [(l, x, y) for l, x, y in zip(labels, xs, ys)]
    if with_size:
        size_metric = next(m for m in METRICS if m not in (metric_x, metric_y))
        sizes = _distinct_values(rng, len(rows), 10.0, 100.0)
        cols.append(Column(size_metric, ColumnKind.NUMERIC))
        rows = [r + (s,) for r, s in zip(rows, sizes)]
    table = DataTable(
        name=f"{metric_y} vs {metric_x} ({name_hint})",
        columns=tuple(cols),
        rows=tuple(rows),
    )
    return table, truth


def _table_treemap(rng: random.Random, name_hint: str) -> DataTable:
    metric = rng.choice(METRICS)
    parents = rng.sample(sorted(ENTITY_POOLS), rng.randint(2, 3))
    child_pool = list(ENTITY_POOLS["Product"]) + list(ENTITY_POOLS["City"])
    rng.shuffle(child_pool)
    rows = []
    k = 0
    for p in parents:
        for _ in range(rng.randint(2, 4)):
            rows.append((p, child_pool[k], 0.0))
            k += 1
    values = _distinct_values(rng, len(rows), 5.0, 80.0)
    rows = [(p, c, v) for (p, c, _), v in zip(rows, values)]
    return DataTable(
        name=f"{metric} breakdown ({name_hint})",
        columns=(
            Column("Group", ColumnKind.CATEGORICAL),
            Column("Item", ColumnKind.CATEGORICAL),
            Column(metric, ColumnKind.NUMERIC),
        ),
        rows=tuple(rows),
    )


def make_table(
    chart_type: ChartType, seed: int, planted_kind: Optional[PlantedKind] = None
) -> tuple[DataTable, Optional[PlantedTruth]]:
    """Synthesize a table compatible with the chart type, planting truth as needed."""
    rng = random.Random(seed)
    hint = f"#{seed % 100000}"
    ct = ChartType(chart_type)
    if ct in (ChartType.BAR, ChartType.PIE):
        grouped = ct is ChartType.BAR and rng.random() < 0.3
        if grouped:
            return _table_stacked(rng, hint, temporal=False), None
        return _table_categorical_numeric(rng, hint), None
    if ct in (ChartType.LINE, ChartType.AREA):
        grouped = rng.random() < 0.3
        return _table_series(rng, hint, grouped=grouped), None
    if ct in (ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR):
        return _table_stacked(rng, hint, temporal=rng.random() < 0.5), None
    if ct is ChartType.STACKED_AREA:
        return _table_stacked(rng, hint, temporal=True), None
    if ct is ChartType.HISTOGRAM:
        return _table_histogram(rng, hint)
    if ct in (ChartType.SCATTERPLOT, ChartType.BUBBLE):
        kind = planted_kind or rng.choice(POINT_PLANT_CYCLE)
        return _table_points(rng, hint, kind, with_size=ct is ChartType.BUBBLE)
    if ct is ChartType.TREEMAP:
        return _table_treemap(rng, hint), None
    raise Incompatible(ct.value, "no table synthesizer")


# ---------------------------------------------------------------------------
# spec construction
# ---------------------------------------------------------------------------


def _first_of_kind(table: DataTable, kind: ColumnKind, skip: tuple[str, ...] = ()) -> Optional[str]:
    for c in table.columns:
        if c.kind is kind and c.name not in skip:
            return c.name
    return None


def _has_duplicates(values: Sequence) -> bool:
    return len(set(values)) != len(values)


def generate_spec(table: DataTable, chart_type: ChartType, rng_seed: int) -> ChartSpec:
    """Build a valid spec for the table, with seeded style choices."""
    ct = ChartType(chart_type)
    rng = random.Random(rng_seed)
    numeric = table.columns_of_kind(ColumnKind.NUMERIC)
    categorical = table.columns_of_kind(ColumnKind.CATEGORICAL)
    temporal = table.columns_of_kind(ColumnKind.TEMPORAL)

    def fail(reason: str):
        raise Incompatible(ct.value, reason)

    annotations = rng.random() < 0.5
    palette = rng.choice(sorted(PALETTES))
    base = dict(
        id=f"chart-{rng_seed}",
        chart_type=ct,
        table=table,
        number_annotations=annotations,
        palette_id=palette,
        rng_seed=rng_seed,
        title=table.name,
    )

    if ct is ChartType.HISTOGRAM:
        if not numeric:
            fail("histogram needs a numeric column")
        if table.n_rows < 8:
            fail("histogram needs at least 8 observations")
        x = numeric[0]
        return ChartSpec(
            x_field=x,
            x_label=x,
            bar_width_frac=rng.choice([0.9, 1.0]),
            **base,
        )

    if ct in (ChartType.SCATTERPLOT, ChartType.BUBBLE):
        need = 3 if ct is ChartType.BUBBLE else 2
        if len(numeric) < need:
            fail(f"{ct.value} needs {need} numeric columns")
        x, y = numeric[0], numeric[1]
        size = numeric[2] if ct is ChartType.BUBBLE else None
        if size is not None and any(v < 0 for v in table.column_values(size)):
            fail("bubble sizes must be non-negative")
        return ChartSpec(
            x_field=x,
            y_field=y,
            size_field=size,
            x_label=x,
            y_label=y,
            **base,
        )

    if ct is ChartType.TREEMAP:
        if len(categorical) < 2 or not numeric:
            fail("treemap needs parent and leaf label columns plus a numeric column")
        parent, child = categorical[0], categorical[1]
        if _has_duplicates(table.column_values(child)):
            fail("treemap leaf labels must be unique")
        return ChartSpec(
            x_field=child,
            y_field=numeric[0],
            group_field=parent,
            grouping=Grouping.MULTIPLE,
            y_label=numeric[0],
            **base,
        )

    if ct is ChartType.PIE:
        if not categorical or not numeric:
            fail("pie needs a categorical and a numeric column")
        x = categorical[0]
        if _has_duplicates(table.column_values(x)):
            fail("pie categories must be unique")
        if table.n_rows > 12:
            fail("too many slices for a readable pie")
        return ChartSpec(x_field=x, y_field=numeric[0], y_label=numeric[0], **base)

    # axis families: bar/stacked/line/area
    x = temporal[0] if temporal else (categorical[0] if categorical else None)
    if ct in (ChartType.BAR, ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR):
        if x is None:
            fail(f"{ct.value} needs a categorical or temporal x column")
    elif x is None:
        if len(numeric) < 2:
            fail(f"{ct.value} needs an x column")
        x = numeric[0]
    if not numeric:
        fail(f"{ct.value} needs a numeric value column")
    y = next((n for n in numeric if n != x), None)
    if y is None:
        fail(f"{ct.value} needs a numeric value column distinct from x")

    group = _first_of_kind(table, ColumnKind.CATEGORICAL, skip=(x,))
    xs = table.column_values(x)
    needs_group = _has_duplicates(xs)
    if ct in (ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR, ChartType.STACKED_AREA):
        if group is None:
            fail(f"{ct.value} needs a segment column")
        pairs = list(zip(xs, table.column_values(group)))
        if _has_duplicates(pairs):
            fail("x/segment pairs must be unique")
        return ChartSpec(
            x_field=x,
            y_field=y,
            group_field=group,
            grouping=Grouping.MULTIPLE,
            layout=(
                Layout.HORIZONTAL
                if ct is not ChartType.STACKED_AREA and rng.random() < 0.25
                else Layout.VERTICAL
            ),
            bar_width_frac=rng.choice([0.5, 0.6, 0.7, 0.8]),
            x_label=x,
            y_label=y,
            **base,
        )
    if needs_group:
        if group is None:
            fail("repeated x values need a series column")
        pairs = list(zip(xs, table.column_values(group)))
        if _has_duplicates(pairs):
            fail("x/series pairs must be unique")
    legal_horizontal = ct is ChartType.BAR
    return ChartSpec(
        x_field=x,
        y_field=y,
        group_field=group if needs_group else None,
        grouping=Grouping.MULTIPLE if needs_group else Grouping.SINGLE,
        layout=Layout.HORIZONTAL if legal_horizontal and rng.random() < 0.25 else Layout.VERTICAL,
        bar_width_frac=rng.choice([0.5, 0.6, 0.7, 0.8]) if ct is ChartType.BAR else 0.7,
        x_label=x,
        y_label=y,
        **base,
    )


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------

TOGGLES = (
    "flip_number_annotations",
    "regroup",
    "vary_bar_width",
    "truncate_axis",
    "invert_axis",
    "repalette",
    "relayout",
)

#: Which toggles each chart type can legally exercise.
TOGGLE_MATRIX: dict[ChartType, frozenset[str]] = {
    ChartType.LINE: frozenset({"flip_number_annotations", "truncate_axis", "invert_axis", "repalette", "regroup"}),
    ChartType.BAR: frozenset(
        {"flip_number_annotations", "vary_bar_width", "truncate_axis", "invert_axis", "repalette", "relayout", "regroup"}
    ),
    ChartType.STACKED_BAR: frozenset({"flip_number_annotations", "vary_bar_width", "repalette", "relayout", "regroup"}),
    ChartType.PCT_STACKED_BAR: frozenset({"flip_number_annotations", "vary_bar_width", "repalette", "relayout", "regroup"}),
    ChartType.PIE: frozenset({"flip_number_annotations", "repalette", "regroup"}),
    ChartType.HISTOGRAM: frozenset({"flip_number_annotations", "vary_bar_width", "repalette"}),
    ChartType.SCATTERPLOT: frozenset({"flip_number_annotations", "repalette"}),
    ChartType.AREA: frozenset({"flip_number_annotations", "truncate_axis", "invert_axis", "repalette", "regroup"}),
    ChartType.STACKED_AREA: frozenset({"flip_number_annotations", "repalette", "regroup"}),
    ChartType.BUBBLE: frozenset({"flip_number_annotations", "repalette"}),
    ChartType.TREEMAP: frozenset({"flip_number_annotations", "repalette"}),
}


@dataclass(frozen=True)
class AugmentationPlan:
    toggles: tuple[str, ...]
    params: dict = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self):
        if not self.toggles:
            raise ValidationError("empty_plan", "a plan needs at least one toggle")
        bad = [t for t in self.toggles if t not in TOGGLES]
        if bad:
            raise ValidationError("unknown_toggle", f"unknown toggles {bad}")


def legal_toggles(spec: ChartSpec) -> list[str]:
    """Toggles applicable to this concrete spec (type-legal and data-legal)."""
    out = []
    for t in TOGGLES:
        if t not in TOGGLE_MATRIX[spec.chart_type]:
            continue
        if t == "regroup" and _regroup_plan(spec) is None:
            continue
        if t == "truncate_axis" and _truncation_floor(spec) is None:
            continue
        out.append(t)
    return out


def _truncation_floor(spec: ChartSpec) -> Optional[float]:
    values = spec.table.column_values(spec.y_field or spec.x_field)
    vmin, vmax = min(values), max(values)
    if vmin <= 0 or vmax == vmin:
        return None
    floor = canon_num(round(vmin * 0.8, 2))
    while floor >= vmin:
        floor = canon_num(floor - max(abs(vmin) * 0.05, 0.1))
    if floor <= 0:
        return None
    return floor


def _regroup_plan(spec: ChartSpec) -> Optional[tuple[str, str, str]]:
    """(column, label_a, label_b) of the two smallest levels to merge, or None.

    Prefers the group column; falls back to a categorical x when the group
    column has fewer than 3 levels to merge.
    """
    table = spec.table
    candidates = []
    if spec.group_field is not None and spec.chart_type is not ChartType.TREEMAP:
        candidates.append(spec.group_field)
    if spec.x_field and table.column_kind(spec.x_field) is ColumnKind.CATEGORICAL:
        candidates.append(spec.x_field)
    ys = table.column_values(spec.y_field) if spec.y_field else None
    if ys is None:
        return None
    for col in candidates:
        levels: dict[str, float] = {}
        for lab, y in zip(table.column_values(col), ys):
            levels[str(lab)] = levels.get(str(lab), 0.0) + y
        if len(levels) < 3:
            continue
        ranked = sorted(levels.items(), key=lambda kv: (kv[1], kv[0]))
        return col, ranked[0][0], ranked[1][0]
    return None


def _merge_levels(table: DataTable, col: str, a: str, b: str, merged: str) -> DataTable:
    """Sum rows of levels a and b into a single level; other columns untouched."""
    ci = table.column_index(col)
    yi = None
    numeric_cols = [i for i, c in enumerate(table.columns) if c.kind is ColumnKind.NUMERIC]
    merged_rows: list[list] = []
    bucket: dict[tuple, list] = {}
    order: list[tuple] = []
    for row in table.rows:
        row = list(row)
        if str(row[ci]) in (a, b):
            row[ci] = merged
        key = tuple(v for i, v in enumerate(row) if i not in numeric_cols)
        if key in bucket:
            for i in numeric_cols:
                bucket[key][i] = canon_num(bucket[key][i] + row[i])
        else:
            bucket[key] = row
            order.append(key)
    for key in order:
        merged_rows.append(tuple(bucket[key]))
    return DataTable(name=table.name, columns=table.columns, rows=tuple(merged_rows))


def augment_spec(
    spec: ChartSpec, plan: AugmentationPlan
) -> list[tuple[ChartSpec, DataTable]]:
    """One variant per toggle in the plan; data-touching toggles record tables."""
    rng = random.Random(plan.rng_seed)
    out: list[tuple[ChartSpec, DataTable]] = []
    for toggle in plan.toggles:
        if toggle not in TOGGLE_MATRIX[spec.chart_type]:
            raise IllegalToggle(f"{toggle} is illegal for {spec.chart_type.value}")
        new_id = f"{spec.id}-aug-{toggle}"
        if toggle == "flip_number_annotations":
            variant = spec.with_changes(id=new_id, number_annotations=not spec.number_annotations)
        elif toggle == "repalette":
            options = [p for p in sorted(PALETTES) if p != spec.palette_id]
            variant = spec.with_changes(id=new_id, palette_id=rng.choice(options))
        elif toggle == "vary_bar_width":
            width = plan.params.get("bar_width_frac")
            if width is None:
                options = [w for w in (0.4, 0.55, 0.7, 0.85, 1.0) if w != spec.bar_width_frac]
                width = rng.choice(options)
            variant = spec.with_changes(id=new_id, bar_width_frac=float(width))
        elif toggle == "relayout":
            flipped = Layout.HORIZONTAL if spec.layout is Layout.VERTICAL else Layout.VERTICAL
            variant = spec.with_changes(id=new_id, layout=flipped)
        elif toggle == "invert_axis":
            variant = spec.with_changes(id=new_id, axis_inverted=True)
        elif toggle == "truncate_axis":
            floor = plan.params.get("floor", _truncation_floor(spec))
            if floor is None:
                raise IllegalToggle(f"no legal truncation floor for {spec.id}")
            variant = spec.with_changes(id=new_id, axis_truncation_min=float(floor))
        elif toggle == "regroup":
            merge = _regroup_plan(spec)
            if merge is None:
                raise IllegalToggle(f"regroup needs at least 3 levels on {spec.id}")
            col, a, b = merge
            table = _merge_levels(spec.table, col, a, b, f"{a} + {b}")
            variant = spec.with_changes(id=new_id, table=table)
        else:  # pragma: no cover
            raise IllegalToggle(toggle)
        out.append((variant, variant.table))
    return out


# ---------------------------------------------------------------------------
# corpus generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratedChart:
    record: DatasetRecord
    planted: Optional[PlantedTruth]


def generate_corpus(
    charts_per_type: int,
    seed: int = 0,
    augmentations_per_chart: int = 2,
) -> list[GeneratedChart]:
    """The procedural generation lane: base charts plus augmented variants."""
    from .qasynth import stable_seed

    out: list[GeneratedChart] = []
    for ct in ChartType:
        for i in range(charts_per_type):
            table_seed = stable_seed("table", ct.value, i, seed) % (2 ** 31)
            planted_kind = None
            if ct in (ChartType.SCATTERPLOT, ChartType.BUBBLE):
                planted_kind = POINT_PLANT_CYCLE[i % len(POINT_PLANT_CYCLE)]
            table, planted = make_table(ct, table_seed, planted_kind)
            spec_seed = stable_seed("spec", ct.value, i, seed) % (2 ** 31)
            spec = generate_spec(table, ct, spec_seed)
            chart_id = f"gen-{ct.value}-{i:04d}"
            spec = spec.with_changes(id=chart_id)
            record = DatasetRecord(
                chart_id=chart_id,
                spec=spec,
                svg_path=f"charts/{chart_id}.svg",
                table=spec.table,
                qa_pairs=(),
                attributes=attributes_from_spec(spec),
                source_kind="generated",
                source_name="civ",
            )
            out.append(GeneratedChart(record=record, planted=planted))
            if augmentations_per_chart <= 0:
                continue
            legal = legal_toggles(spec)
            rng = random.Random(stable_seed("aug", chart_id, seed))
            rng.shuffle(legal)
            chosen = tuple(sorted(legal[:augmentations_per_chart]))
            if not chosen:
                continue
            plan = AugmentationPlan(toggles=chosen, rng_seed=spec_seed + 1)
            for variant, table2 in augment_spec(spec, plan):
                toggle = variant.id.rsplit("-aug-", 1)[1]
                keeps_data = toggle != "regroup"
                rec = DatasetRecord(
                    chart_id=variant.id,
                    spec=variant,
                    svg_path=f"charts/{variant.id}.svg",
                    table=variant.table,
                    qa_pairs=(),
                    attributes=attributes_from_spec(variant),
                    source_kind="generated",
                    source_name="civ",
                )
                out.append(
                    GeneratedChart(record=rec, planted=planted if keeps_data else None)
                )
    return out
