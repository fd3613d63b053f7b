import os

import pytest

from tschplots.figures import (
    FigureSpec,
    MalformedCsvError,
    dio_scatter_series,
    energy_bar_values,
    read_dio,
    read_trickle,
    render,
    trickle_step_series,
)


def write(path, text):
    path.write_text(text)
    return str(path)


TRICKLE_HEADER = "time_ms,node,interval_ms\n"
DIO_HEADER = "time_ms,node,trigger_index\n"
ENERGY_HEADER = "window,node,on_ms,window_ms,percent\n"


def test_read_trickle_parses_rows(tmp_path):
    p = write(tmp_path / "trickle.csv", TRICKLE_HEADER + "0,3,4096\n1000,3,8192\n")
    assert read_trickle(p) == [(0.0, 3, 4096.0), (1000.0, 3, 8192.0)]


def test_malformed_row_reports_its_number(tmp_path):
    p = write(tmp_path / "trickle.csv", TRICKLE_HEADER + "0,3,4096\nbogus,x\n")
    with pytest.raises(MalformedCsvError) as err:
        read_trickle(p)
    assert err.value.row == 3
    assert "row 3" in str(err.value)


def test_wrong_header_reports_row_one(tmp_path):
    p = write(tmp_path / "dio.csv", "a,b\n1,2\n")
    with pytest.raises(MalformedCsvError) as err:
        read_dio(p)
    assert err.value.row == 1


def test_empty_csv_renders_empty_axes(tmp_path):
    p = write(tmp_path / "trickle.csv", TRICKLE_HEADER)
    out = str(tmp_path / "fig.png")
    render(FigureSpec("trickle_series", (p,), out))
    assert os.path.exists(out)


def test_step_series_end_at_removal_or_trace_end():
    rows = [
        (0.0, 9, 4096.0), (60_000.0, 9, 8192.0),
        (0.0, 10, 4096.0), (120_000.0, 10, 8192.0),
    ]
    series = trickle_step_series(rows, removals={10: 180_000.0}, t_end_ms=480_000.0)
    assert series[10][0][-1] == pytest.approx(3.0)   # minutes; dies at the mark
    assert series[9][0][-1] == pytest.approx(8.0)    # survivor runs to the end
    assert series[10][1][-1] == 8192.0               # last value held, not dropped


def test_step_series_units_are_minutes():
    series = trickle_step_series([(90_000.0, 1, 4096.0)], t_end_ms=90_000.0)
    assert series[1][0] == [pytest.approx(1.5)]


def test_dio_scatter_series_groups_by_node():
    rows = [(60_000.0, 2, 1), (120_000.0, 2, 2), (30_000.0, 3, 1)]
    series = dio_scatter_series(rows)
    assert series[2] == ([1.0, 2.0], [1, 2])
    assert series[3] == ([0.5], [1])


def test_energy_bars_prefer_transient_window(tmp_path):
    orch = write(
        tmp_path / "orchestra.csv",
        ENERGY_HEADER + "w0,1,1,100,50.0\ntransient,1,1,100,2.9\n",
    )
    mini = write(
        tmp_path / "minimal.csv",
        ENERGY_HEADER + "w0,1,1,100,60.0\ntransient,1,1,100,4.23\n",
    )
    names, values = energy_bar_values((orch, mini), ("orchestra", "minimal"))
    assert names == ["orchestra", "minimal"]
    assert values == [pytest.approx(2.9), pytest.approx(4.23)]
    assert values[0] < values[1]  # the orchestra bar is the shorter one
    out = str(tmp_path / "bars.png")
    render(FigureSpec("energy_bars", (orch, mini), out, labels=("orchestra", "minimal")))
    assert os.path.exists(out)


def test_rendering_never_modifies_inputs(tmp_path):
    p = write(tmp_path / "trickle.csv", TRICKLE_HEADER + "0,3,4096\n")
    before = open(p).read()
    mtime = os.path.getmtime(p)
    render(FigureSpec("trickle_series", (p,), str(tmp_path / "f.png"), removal_min=3.0))
    assert open(p).read() == before
    assert os.path.getmtime(p) == mtime


def test_unknown_figure_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        render(FigureSpec("pie", (), str(tmp_path / "x.png")))
