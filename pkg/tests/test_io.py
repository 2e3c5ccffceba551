import numpy as np
import pytest

from funcmahal.errors import CurveParseError
from funcmahal.funcspace import FunctionalSample, make_uniform_grid
from funcmahal.io import curves_to_csv, format_number, parse_curves, read_curves, write_curves
from funcmahal.simulate import brownian_pair, contamination_model


def test_round_trip_is_exact(tmp_path):
    s = contamination_model(3, 25, 0.2, seed=4)
    path = tmp_path / "c.csv"
    write_curves(path, s)
    back = read_curves(path)
    np.testing.assert_array_equal(back.sample.curves, s.curves)
    np.testing.assert_array_equal(back.sample.labels, s.labels)
    np.testing.assert_array_equal(back.sample.grid.points, s.grid.points)
    assert back.ids == tuple(str(i) for i in range(25))
    assert not back.rescaled


def test_round_trip_of_truncated_grid():
    s = brownian_pair(0.8125, 5, 50, seed=1)
    back = parse_curves(curves_to_csv(s))
    # points stay inside [0, 1] so no rescaling happens
    np.testing.assert_array_equal(back.sample.grid.points, s.grid.points)
    np.testing.assert_array_equal(back.sample.curves, s.curves)


def test_seventeen_digit_format():
    x = 0.1 + 0.2
    assert float(format_number(x)) == x
    assert format_number(1 / 3) == "0.33333333333333331"


def test_header_layout():
    g = make_uniform_grid(3)
    text = curves_to_csv(FunctionalSample(g, np.zeros((2, 3)), [0, 1]), ids=["a", "b"])
    lines = text.splitlines()
    assert lines[0] == "t,0,0.5,1,label"
    assert lines[1] == "a,0,0,0,0"
    text = curves_to_csv(FunctionalSample(g, np.ones((1, 3))))
    assert text.splitlines()[0] == "t,0,0.5,1"


def test_axis_outside_unit_interval_is_rescaled():
    text = "t,1,4,10\nboy,80,100,140\ngirl,79,101,138\n"
    table = parse_curves(text)
    assert table.rescaled
    np.testing.assert_allclose(table.sample.grid.points, [0, 1 / 3, 1])
    np.testing.assert_array_equal(table.axis, [1, 4, 10])
    assert table.ids == ("boy", "girl")
    assert table.sample.labels is None


@pytest.mark.parametrize(
    "text,row,col",
    [
        ("", 1, 1),
        ("x,0,1\na,1,2\n", 1, 1),
        ("t,0,1\na,1,zz\n", 2, 3),
        ("t,0,1\na,1\n", 2, 3),
        ("t,0,1\na,1,2\nb,1,2,3\n", 3, 4),
        ("t,0,1,label\na,1,2,0.5\n", 2, 4),
        ("t,0,0\na,1,2\n", 1, 3),
        ("t,0,1\n", 2, 1),
        ("t,0,1\na,1,nan\n", 2, 3),
        ("t,0\na,1\n", 1, 2),
    ],
)
def test_parse_errors_carry_location(text, row, col):
    with pytest.raises(CurveParseError) as info:
        parse_curves(text)
    assert (info.value.row, info.value.column) == (row, col)
    assert f"row {row}" in str(info.value)


def test_blank_lines_are_skipped():
    table = parse_curves("t,0,1\n\na,1,2\n\n")
    assert table.sample.n == 1
