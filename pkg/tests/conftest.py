import pytest

from civ.charts import ChartSpec, ChartType, Grouping
from civ.tables import make_table


@pytest.fixture
def fruit_table():
    return make_table(
        "fruit sales",
        [("Fruit", "categorical"), ("Sales", "numeric")],
        [("Apple", 30.5), ("Banana", 41.0), ("Cherry", 12.25), ("Date", 55.0)],
    )


@pytest.fixture
def bar_spec(fruit_table):
    return ChartSpec(
        id="bar-1",
        chart_type=ChartType.BAR,
        table=fruit_table,
        x_field="Fruit",
        y_field="Sales",
        x_label="Fruit",
        y_label="Sales",
        title="Fruit sales",
    )


@pytest.fixture
def stacked_table():
    return make_table(
        "revenue by region",
        [("Quarter", "categorical"), ("Region", "categorical"), ("Revenue", "numeric")],
        [
            ("Q1", "North", 10.0),
            ("Q1", "South", 20.0),
            ("Q2", "North", 15.0),
            ("Q2", "South", 5.0),
            ("Q3", "North", 30.0),
            ("Q3", "South", 12.0),
        ],
    )


@pytest.fixture
def stacked_spec(stacked_table):
    return ChartSpec(
        id="sb-1",
        chart_type=ChartType.STACKED_BAR,
        table=stacked_table,
        x_field="Quarter",
        y_field="Revenue",
        group_field="Region",
        grouping=Grouping.MULTIPLE,
    )
