from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from curvespn.dataset import (
    CURVE_KINDS,
    SyntheticSpec,
    class_specs,
    generate_chart,
    generate_dataset,
    read_truth,
)
from curvespn.evaluation import truth_ssim


def test_generation_contract(two_curve_chart):
    d = two_curve_chart["dir"]
    assert {p.name for p in d.iterdir()} >= {"c.png", "c.truth.csv", "c.axis.json", "c.meta.json"}
    truth = read_truth(d / "c.truth.csv")
    assert sorted(truth) == [1, 2] and all(len(v) == 400 for v in truth.values())
    side = json.loads((d / "c.axis.json").read_text())
    assert len(side["x_axis"]["ticks"]) == 6 and side["y_axis"]["label"] == "Value"
    with open(d / "c.truth.csv") as fh:
        assert next(csv.reader(fh)) == ["curve_id", "x", "y"]


def test_same_spec_same_bytes(tmp_path):
    spec = dict(kinds=["quadratic", "arbitrary"], seed=5)
    generate_chart(SyntheticSpec(**spec), tmp_path / "a", "x")
    generate_chart(SyntheticSpec(**spec), tmp_path / "b", "x")
    for suffix in (".png", ".truth.csv", ".axis.json", ".meta.json"):
        assert (tmp_path / "a" / f"x{suffix}").read_bytes() == (tmp_path / "b" / f"x{suffix}").read_bytes()


@pytest.mark.parametrize("kw", [
    dict(kinds=["linear", "linear"], colors=[(255, 0, 0), (255, 0, 0)]),
    dict(kinds=["spiral"]),
    dict(kinds=[]),
    dict(kinds=["linear"], widths=[9]),
    dict(kinds=["linear"], dashes=["wavy"]),
])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        SyntheticSpec(**kw)


def test_truth_inside_plot_area():
    for kind in CURVE_KINDS:
        chart = generate_chart(SyntheticSpec(kinds=[kind], seed=3))
        x0, y0, x1, y1 = chart.meta["plot_bounds"]
        pts = chart.truth[1]
        assert pts[:, 0].min() > x0 and pts[:, 0].max() < x1
        assert pts[:, 1].min() > y0 and pts[:, 1].max() < y1
        assert np.all(np.diff(pts[:, 0]) > 0)


def test_class_specs():
    specs = class_specs("curves3", 4, seed=2)
    assert len(specs) == 4 and all(s.n_curves == 3 for s in specs)
    assert [s.seed for s in specs] == [s.seed for s in class_specs("curves3", 4, seed=2)]
    assert all(s.kinds == ["asymptotic"] for s in class_specs("asymptotic", 3))
    with pytest.raises(ValueError):
        class_specs("curves9", 1)


def test_generate_dataset_layout(tmp_path):
    paths = generate_dataset(tmp_path, {"linear": 2, "curves2": 1}, seed=1)
    assert [p.relative_to(tmp_path).as_posix() for p in paths] == ["linear/000.png", "linear/001.png", "curves2/000.png"]


def test_truth_replay(tmp_path):
    paths = generate_dataset(tmp_path, {"sinusoidal": 1, "curves4": 2}, seed=0)
    for p in paths:
        assert truth_ssim(p) >= 0.97
