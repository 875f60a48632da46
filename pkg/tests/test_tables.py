import math

import pytest

from civ.errors import ValidationError
from civ.tables import Column, ColumnKind, DataTable, canon_num, fmt_num, make_table


def test_canon_num_limits_significant_digits():
    assert canon_num(1 / 3) == 0.333333
    assert canon_num(123455.5) == 123456.0
    assert canon_num(2.0) == 2.0
    assert canon_num(-0.0) == 0.0


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_canon_num_rejects_nonfinite(bad):
    with pytest.raises(ValidationError) as e:
        canon_num(bad)
    assert e.value.code == "nonfinite_numeric"


def test_canon_num_rejects_non_numbers():
    with pytest.raises(ValidationError):
        canon_num("7")
    with pytest.raises(ValidationError):
        canon_num(True)


def test_fmt_num_round_trips_canonical_values():
    for x in [0.0, 2.0, -3.5, 0.333333, 123456.0, 1e20, 0.00012345, -42.125]:
        c = canon_num(x)
        assert float(fmt_num(c)) == c
    assert fmt_num(2.0) == "2"
    assert fmt_num(0.5) == "0.5"


def test_table_requires_rows_and_columns():
    with pytest.raises(ValidationError):
        DataTable(name="x", columns=(), rows=((1,),))
    with pytest.raises(ValidationError):
        make_table("x", [("a", "numeric")], [])


def test_table_rejects_ragged_rows():
    with pytest.raises(ValidationError) as e:
        make_table("x", [("a", "numeric"), ("b", "numeric")], [(1, 2), (3,)])
    assert e.value.code == "row_width"


def test_table_rejects_duplicate_and_empty_column_names():
    with pytest.raises(ValidationError) as e:
        make_table("x", [("a", "numeric"), ("a", "numeric")], [(1, 2)])
    assert e.value.code == "dup_column"
    with pytest.raises(ValidationError):
        Column("", ColumnKind.NUMERIC)


def test_table_cell_types_enforced():
    with pytest.raises(ValidationError):
        make_table("x", [("a", "numeric")], [("oops",)])
    with pytest.raises(ValidationError):
        make_table("x", [("a", "categorical")], [(3,)])


def test_table_canonicalizes_numeric_cells():
    t = make_table("x", [("a", "numeric")], [(1 / 3,), (0.1 + 0.2,)])
    assert t.rows[0][0] == 0.333333
    assert t.rows[1][0] == 0.3


def test_json_round_trip(fruit_table):
    again = DataTable.from_json_dict(fruit_table.to_json_dict())
    assert again == fruit_table


def test_column_accessors(fruit_table):
    assert fruit_table.column_index("Sales") == 1
    assert fruit_table.column_values("Fruit")[0] == "Apple"
    assert fruit_table.columns_of_kind(ColumnKind.NUMERIC) == ["Sales"]
    with pytest.raises(ValidationError):
        fruit_table.column_index("nope")
