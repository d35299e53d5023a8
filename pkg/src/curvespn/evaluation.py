"""Corpus evaluation: reconstruct every chart of a generated dataset and score it with SSIM."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .config import Config
from .dataset import SUPERSAMPLE, draw_curve, read_truth
from .errors import CurveSpnError
from .ingest import apply_hsv_homogeneity, load_chart, segment_regions
from .metrics import ssim
from .pipeline import analyze

MODES = ("rule2", "rule3")


@dataclass
class ChartScore:
    cls: str
    chart: str
    scores: dict[str, float] = field(default_factory=dict)  # mode -> SSIM
    seconds: float = 0.0
    error: str | None = None


@dataclass
class ClassStat:
    cls: str
    mode: str
    n: int
    mean_ssim: float
    std: float
    failures: int


@dataclass
class SsimReport:
    charts: list[ChartScore]
    modes: tuple[str, ...] = MODES

    def classes(self) -> list[str]:
        return sorted({c.cls for c in self.charts})

    def stat(self, cls: str, mode: str) -> ClassStat:
        rows = [c for c in self.charts if c.cls == cls]
        vals = np.array([c.scores[mode] for c in rows if mode in c.scores], dtype=float)
        fails = sum(1 for c in rows if c.error is not None)
        mean = float(vals.mean()) if vals.size else float("nan")
        std = float(vals.std()) if vals.size else float("nan")
        return ClassStat(cls, mode, int(vals.size), mean, std, fails)

    def stats(self) -> list[ClassStat]:
        return [self.stat(c, m) for c in self.classes() for m in self.modes]

    @property
    def failures(self) -> int:
        return sum(1 for c in self.charts if c.error is not None)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["class", "mode", "n", "mean_ssim", "std", "failures"])
            for s in self.stats():
                wr.writerow([s.cls, s.mode, s.n, f"{s.mean_ssim:.6f}", f"{s.std:.6f}", s.failures])
        return path


def _sidecar(png: Path) -> Path | None:
    p = png.with_name(png.name[: -len(".png")] + ".axis.json")
    return p if p.exists() else None


def evaluate_chart(png: str | Path, config: Config | None = None, modes=MODES) -> ChartScore:
    """Analyze one chart once and score the requested merge stages."""
    png = Path(png)
    cfg = config or Config()
    if "rule3" in modes and cfg.merge_mode != "rule3":
        cfg = Config.from_dict({**cfg.to_dict(), "merge_mode": "rule3"})
    score = ChartScore(png.parent.name, png.stem)
    t0 = time.perf_counter()
    try:
        desc = analyze(png, _sidecar(png), cfg)
        for m in modes:
            score.scores[m] = desc.stage_ssim(m)
    except CurveSpnError as exc:
        score.error = str(exc)
    score.seconds = time.perf_counter() - t0
    return score


def _job(args):
    png, cfg_dict, modes = args
    return evaluate_chart(png, Config.from_dict(cfg_dict), modes)


def evaluate_corpus(dataset_dir: str | Path, merge_mode: str | tuple[str, ...] = MODES,
                    config: Config | None = None, workers: int = 1, classes: list[str] | None = None) -> SsimReport:
    """Score every ``<class>/<id>.png`` under ``dataset_dir``; failures are recorded, not raised."""
    modes = (merge_mode,) if isinstance(merge_mode, str) else tuple(merge_mode)
    root = Path(dataset_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"no dataset directory {root}")
    pngs = sorted(p for p in root.glob("*/*.png") if classes is None or p.parent.name in classes)
    cfg = config or Config()
    jobs = [(p, cfg.to_dict(), modes) for p in pngs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            charts = list(ex.map(_job, jobs))
    else:
        charts = [_job(j) for j in jobs]
    return SsimReport(charts, modes)


# -- ground-truth replay ---------------------------------------------------------------

def truth_reconstruction(png: str | Path, config: Config | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw the generator's polylines, in their own colors, widths and dash styles, on the plot region.

    Returns (reconstruction, homogenized region) so the rasterization error can
    be measured without any recognition in the loop.
    """
    png = Path(png)
    cfg = config or Config()
    stem = png.name[: -len(".png")]
    meta = json.loads(png.with_name(stem + ".meta.json").read_text())
    truth = read_truth(png.with_name(stem + ".truth.csv"))
    h = apply_hsv_homogeneity(load_chart(png), cfg.homogeneity)
    region, _ = segment_regions(h)
    ox, oy = region.origin
    spec = meta["spec"]
    S = SUPERSAMPLE if spec.get("antialias", True) else 1
    img = Image.new("RGB", (region.width * S, region.height * S), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for i, (cid, pts) in enumerate(sorted(truth.items())):
        local = np.asarray(pts) - (ox, oy) + 0.5
        draw_curve(draw, local, tuple(spec["colors"][i]), int(spec["widths"][i]), spec["dashes"][i], scale=S)
    if S > 1:
        img = img.resize((region.width, region.height), Image.BOX)
    return np.asarray(img), region.pixels


def truth_ssim(png: str | Path, config: Config | None = None) -> float:
    rec, ref = truth_reconstruction(png, config)
    return ssim(rec, ref)
