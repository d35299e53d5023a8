from __future__ import annotations

import json

from conftest import blank
from PIL import Image

from curvespn.cli import EXIT_ANALYSIS, EXIT_INPUT, EXIT_OK, main


def test_analyze_and_reconstruct(two_curve_chart, tmp_path, capsys):
    out = tmp_path / "b"
    rc = main(["analyze", str(two_curve_chart["png"]), "--axis", str(two_curve_chart["axis"]),
               "--merge-mode", "rule2", "--seed", "4", "-o", str(out)])
    assert rc == EXIT_OK
    assert "2 curve(s)" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["merge_mode"] == "rule2" and report["provenance"]["seed"] == 4
    png = tmp_path / "r.png"
    assert main(["reconstruct", str(out / "spn.json"), "-o", str(png)]) == EXIT_OK
    assert Image.open(png).tobytes() == Image.open(out / "reconstruction.png").tobytes()


def test_analyze_blank_is_analysis_error(tmp_path, capsys):
    p = tmp_path / "blank.png"
    Image.fromarray(blank(200, 300)).save(p)
    assert main(["analyze", str(p), "-o", str(tmp_path / "o")]) == EXIT_ANALYSIS
    assert "no curves found" in capsys.readouterr().err


def test_missing_image_is_input_error(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "nope.png"), "-o", str(tmp_path / "o")]) == EXIT_INPUT
    assert "no such file" in capsys.readouterr().err


def test_bad_config(two_curve_chart, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('merge_mode = "rule9"\n')
    assert main(["analyze", str(two_curve_chart["png"]), "--config", str(cfg), "-o", str(tmp_path / "o")]) == EXIT_INPUT


def test_config_file(two_curve_chart, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('merge_mode = "rule2"\nseed = 9\n[clustering]\nrestarts = 3\n')
    assert main(["analyze", str(two_curve_chart["png"]), "--config", str(cfg), "-o", str(tmp_path / "o")]) == EXIT_OK
    prov = json.loads((tmp_path / "o" / "report.json").read_text())["provenance"]
    assert prov["seed"] == 9 and prov["merge_mode"] == "rule2"


def test_gen_dataset_and_evaluate(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"seed": 2, "classes": {"linear": 2}}))
    assert main(["gen-dataset", str(spec), "-o", str(tmp_path / "ds")]) == EXIT_OK
    assert len(list((tmp_path / "ds" / "linear").glob("*.png"))) == 2
    rc = main(["evaluate", str(tmp_path / "ds"), "-o", str(tmp_path / "r.csv"), "--modes", "rule2"])
    assert rc == EXIT_OK
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "class,mode,n,mean_ssim,std,failures"
    assert "linear" in capsys.readouterr().out


def test_gen_dataset_bad_spec(tmp_path):
    spec = tmp_path / "spec.toml"
    spec.write_text("seed = 1\n")
    assert main(["gen-dataset", str(spec), "-o", str(tmp_path / "ds")]) == EXIT_INPUT
    spec.write_text("[classes]\nspirals = 2\n")
    assert main(["gen-dataset", str(spec), "-o", str(tmp_path / "ds")]) == EXIT_INPUT


def test_reconstruct_bad_net(tmp_path):
    bad = tmp_path / "spn.json"
    bad.write_text("{not json")
    assert main(["reconstruct", str(bad), "-o", str(tmp_path / "x.png")]) == EXIT_INPUT
    assert main(["reconstruct", str(tmp_path / "missing.json"), "-o", str(tmp_path / "x.png")]) == EXIT_INPUT
