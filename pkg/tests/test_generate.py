import math

import pytest

from brute import brute_pearson_float, brute_zscore
from civ.charts import ChartSpec, ChartType, Grouping, Layout
from civ.errors import IllegalToggle, Incompatible, ValidationError
from civ.generate import (
    TOGGLE_MATRIX,
    TOGGLES,
    AugmentationPlan,
    augment_spec,
    generate_corpus,
    generate_spec,
    legal_toggles,
    make_table,
)
from civ.qasynth import PlantedKind
from civ.render import extract_table_from_spec
from civ.tables import ColumnKind, make_table as build_table


@pytest.mark.parametrize("chart_type", list(ChartType))
def test_make_table_fits_its_chart_type(chart_type):
    for seed in (1, 2, 3):
        table, planted = make_table(chart_type, seed)
        spec = generate_spec(table, chart_type, rng_seed=seed)
        assert spec.chart_type is chart_type
        if chart_type is ChartType.HISTOGRAM:
            assert planted is not None and planted.kind is PlantedKind.DISTRIBUTION_SHAPE


def test_planted_anomaly_is_sound():
    for seed in range(10):
        table, planted = make_table(ChartType.SCATTERPLOT, 1000 + seed, PlantedKind.ANOMALY)
        assert planted.kind is PlantedKind.ANOMALY
        labels = [str(v) for v in table.column_values(table.columns[0].name)]
        numeric = table.columns_of_kind(ColumnKind.NUMERIC)
        pts = list(zip(table.column_values(numeric[0]), table.column_values(numeric[1])))
        idx = labels.index(planted.payload["entity"])
        assert brute_zscore(pts, idx) >= 3.0


def test_planted_clusters_are_separated():
    for seed in range(10):
        table, planted = make_table(ChartType.SCATTERPLOT, 2000 + seed, PlantedKind.CLUSTERS)
        k = planted.payload["count"]
        assert 2 <= k <= 3
        numeric = table.columns_of_kind(ColumnKind.NUMERIC)
        xs = table.column_values(numeric[0])
        ys = table.column_values(numeric[1])
        per = len(xs) // k
        centroids, spreads = [], []
        for b in range(k):
            bx = xs[b * per:(b + 1) * per]
            by = ys[b * per:(b + 1) * per]
            cx, cy = sum(bx) / per, sum(by) / per
            centroids.append((cx, cy))
            spreads.append(
                math.sqrt(sum((x - cx) ** 2 + (y - cy) ** 2 for x, y in zip(bx, by)) / per)
            )
        for i in range(k):
            for j in range(i + 1, k):
                assert math.dist(centroids[i], centroids[j]) >= 4.0 * max(spreads) - 1e-9


def test_planted_correlation_matches_target():
    for seed in range(10):
        table, planted = make_table(ChartType.SCATTERPLOT, 3000 + seed, PlantedKind.CORRELATION)
        numeric = table.columns_of_kind(ColumnKind.NUMERIC)
        xs = table.column_values(numeric[0])
        ys = table.column_values(numeric[1])
        r = brute_pearson_float(xs, ys)
        assert abs(r - planted.payload["r"]) < 0.05


def test_generate_spec_is_deterministic(fruit_table):
    s1 = generate_spec(fruit_table, ChartType.BAR, rng_seed=4)
    s2 = generate_spec(fruit_table, ChartType.BAR, rng_seed=4)
    assert s1 == s2
    s3 = generate_spec(fruit_table, ChartType.PIE, rng_seed=8)
    assert s3.chart_type is ChartType.PIE and s3.number_annotations in (True, False)


def test_generate_spec_incompatibilities():
    two_numeric = build_table(
        "n", [("A", "numeric"), ("B", "numeric")], [(1.0, 2.0), (3.0, 4.0)]
    )
    with pytest.raises(Incompatible):
        generate_spec(two_numeric, ChartType.TREEMAP, rng_seed=0)
    with pytest.raises(Incompatible):
        generate_spec(two_numeric, ChartType.PIE, rng_seed=0)
    with pytest.raises(Incompatible):
        generate_spec(two_numeric, ChartType.BUBBLE, rng_seed=0)  # needs 3 numerics
    with pytest.raises(Incompatible):
        generate_spec(two_numeric, ChartType.HISTOGRAM, rng_seed=0)  # < 8 rows


def test_flip_annotations_changes_single_field(bar_spec):
    plan = AugmentationPlan(toggles=("flip_number_annotations",), rng_seed=1)
    [(variant, table)] = augment_spec(bar_spec, plan)
    assert variant.number_annotations != bar_spec.number_annotations
    assert table == bar_spec.table
    assert variant.with_changes(id=bar_spec.id, number_annotations=bar_spec.number_annotations) == bar_spec


def test_truncation_keeps_bars_renderable(fruit_table):
    spec = generate_spec(fruit_table, ChartType.BAR, rng_seed=5)
    plan = AugmentationPlan(toggles=("truncate_axis",), params={"floor": 10.0}, rng_seed=1)
    [(variant, table)] = augment_spec(spec, plan)
    assert variant.axis_truncation_min == 10.0
    assert table == spec.table
    extracted = extract_table_from_spec(variant)
    assert extracted == spec.table  # every bar still present


def test_invert_axis_on_pie_is_illegal(fruit_table):
    pie = generate_spec(fruit_table, ChartType.PIE, rng_seed=2)
    with pytest.raises(IllegalToggle):
        augment_spec(pie, AugmentationPlan(toggles=("invert_axis",), rng_seed=0))


def test_plan_requires_known_toggles():
    with pytest.raises(ValidationError):
        AugmentationPlan(toggles=())
    with pytest.raises(ValidationError):
        AugmentationPlan(toggles=("paint_it_black",))


def test_regroup_merges_two_smallest_levels(stacked_spec):
    plan = AugmentationPlan(toggles=("regroup",), rng_seed=3)
    [(variant, table)] = augment_spec(stacked_spec, plan)
    # Region has 2 levels only, so regroup must fall back to Quarter levels
    assert variant.table != stacked_spec.table
    assert table == variant.table
    xs = set(table.column_values("Quarter"))
    assert any("+" in x for x in xs)
    assert table.n_rows < stacked_spec.table.n_rows
    # totals preserved
    assert abs(
        sum(table.column_values("Revenue")) - sum(stacked_spec.table.column_values("Revenue"))
    ) < 1e-9


def test_regroup_on_pie_merges_slices(fruit_table):
    pie = generate_spec(fruit_table, ChartType.PIE, rng_seed=2)
    [(variant, table)] = augment_spec(pie, AugmentationPlan(toggles=("regroup",), rng_seed=1))
    assert table.n_rows == fruit_table.n_rows - 1
    merged = [x for x in table.column_values("Fruit") if " + " in x]
    assert merged == ["Cherry + Apple"]  # the two smallest by value


def test_every_type_exercises_its_toggle_matrix():
    for ct in ChartType:
        assert TOGGLE_MATRIX[ct] <= set(TOGGLES)
        exercised = set()
        for seed in range(12):
            table, _ = make_table(ct, 500 + seed)
            spec = generate_spec(table, ct, rng_seed=seed)
            legal = legal_toggles(spec)
            for toggle in legal:
                plan = AugmentationPlan(toggles=(toggle,), rng_seed=seed)
                [(variant, vtable)] = augment_spec(spec, plan)
                assert variant.table == vtable
                assert extract_table_from_spec(variant) == vtable
                exercised.add(toggle)
        missing = TOGGLE_MATRIX[ct] - exercised
        assert not missing, f"{ct.value} never exercised {missing}"


def test_corpus_ids_unique_and_round_trip():
    corpus = generate_corpus(charts_per_type=2, seed=9, augmentations_per_chart=2)
    ids = [g.record.chart_id for g in corpus]
    assert len(ids) == len(set(ids))
    assert len({g.record.spec.chart_type for g in corpus}) == 11
    for g in corpus:
        assert extract_table_from_spec(g.record.spec) == g.record.table


def test_corpus_is_deterministic():
    a = generate_corpus(charts_per_type=1, seed=3, augmentations_per_chart=1)
    b = generate_corpus(charts_per_type=1, seed=3, augmentations_per_chart=1)
    assert [g.record.to_json_dict() for g in a] == [g.record.to_json_dict() for g in b]


def test_point_chart_planting_cycles():
    corpus = generate_corpus(charts_per_type=4, seed=1, augmentations_per_chart=0)
    scatter = [g for g in corpus if g.record.spec.chart_type is ChartType.SCATTERPLOT]
    kinds = [g.planted.kind for g in scatter]
    assert set(kinds) == {
        PlantedKind.ANOMALY, PlantedKind.CLUSTERS,
        PlantedKind.DISTRIBUTION_SHAPE, PlantedKind.CORRELATION,
    }
