"""Acceptance for the plotting component: renders every figure kind from a
real comparison run of the bundled scenario, driven purely through the
simulator's command-line interface and trace-file formats.
"""

import os
import subprocess
import sys

import pytest

from tschplots.cli import main as plots_main
from tschplots.figures import read_removals, read_trickle, trickle_step_series

I_MIN_TICKS = 4096.0
REMOVAL_MIN = 3.0


@pytest.fixture(scope="session")
def compare_dir(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("paper") / "cmp")
    paper = subprocess.run(
        [sys.executable, "-c",
         "from importlib import resources;"
         "print(resources.files('tschsim.data').joinpath('paper.json'))"],
        capture_output=True, text=True, check=True,
    ).stdout.strip()
    subprocess.run(
        [sys.executable, "-m", "tschsim.cli", "compare",
         "--scenario", paper, "--out", out],
        check=True, capture_output=True, text=True,
    )
    return out


def test_plots_renders_all_three_kinds(compare_dir, tmp_path):
    fig_dir = str(tmp_path / "figs")
    rc = plots_main(["--in", compare_dir, "--out", fig_dir])
    assert rc == 0
    produced = sorted(os.listdir(fig_dir))
    assert "energy_bars.png" in produced
    for run in ("orchestra", "minimal"):
        assert f"trickle_{run}.png" in produced
        assert f"dio_{run}.png" in produced


def test_removal_run_trickle_chart_features(compare_dir):
    run_dir = os.path.join(compare_dir, "orchestra")
    rows = read_trickle(os.path.join(run_dir, "trickle.csv"))
    removals = read_removals(os.path.join(run_dir, "events.log"))
    series = trickle_step_series(rows, removals)
    # node 10's series ends exactly at the minute-3 removal
    assert series[10][0][-1] == pytest.approx(REMOVAL_MIN)
    # and at least one survivor falls back to the minimum interval after it
    dropped = [
        node
        for node, (xs, ys) in series.items()
        if node != 10 and any(x > REMOVAL_MIN and y == I_MIN_TICKS for x, y in zip(xs, ys))
    ]
    assert dropped


def test_primary_suite_is_independent_of_the_plots_package():
    import tschsim

    src_dir = os.path.dirname(tschsim.__file__)
    offenders = []
    for name in os.listdir(src_dir):
        if name.endswith(".py"):
            text = open(os.path.join(src_dir, name), encoding="utf-8").read()
            if "tschplots" in text or "matplotlib" in text:
                offenders.append(name)
    assert not offenders
