"""Synthetic line-chart corpus with ground truth and axis sidecars."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

CURVE_KINDS = ("linear", "quadratic", "asymptotic", "sinusoidal", "arbitrary")
DASH_STYLES = ("solid", "dashed", "dotted-squares")

# saturated colors whose hues sit in distinct 20-degree bins
PALETTE = (
    (255, 0, 0),
    (0, 0, 255),
    (0, 150, 0),
    (255, 140, 0),
    (200, 0, 200),
    (0, 170, 170),
    (170, 0, 255),
)

SUPERSAMPLE = 3


@dataclass
class SyntheticSpec:
    kinds: list[str]
    colors: list[tuple[int, int, int]] | None = None
    widths: list[int] | None = None
    dashes: list[str] | None = None
    canvas: tuple[int, int] = (800, 600)
    margins: tuple[int, int, int, int] = (70, 20, 20, 60)  # left, top, right, bottom
    axis_width: int = 2
    n_x_ticks: int = 6
    n_y_ticks: int = 5
    x_range: tuple[float, float] = (0.0, 10.0)
    y_range: tuple[float, float] = (0.0, 100.0)
    x_label: str = "Time"
    y_label: str = "Value"
    grid: bool = False
    antialias: bool = True
    seed: int = 0
    samples: int = 400

    def __post_init__(self):
        n = len(self.kinds)
        if not 1 <= n <= len(PALETTE):
            raise ValueError(f"need between 1 and {len(PALETTE)} curves, got {n}")
        bad = [k for k in self.kinds if k not in CURVE_KINDS]
        if bad:
            raise ValueError(f"unknown curve kinds {bad}")
        rng = np.random.default_rng(self.seed)
        if self.colors is None:
            idx = rng.permutation(len(PALETTE))[:n]
            self.colors = [PALETTE[i] for i in idx]
        self.colors = [tuple(int(v) for v in c) for c in self.colors]
        if len(self.colors) != n:
            raise ValueError("one color per curve required")
        if len(set(self.colors)) != n:
            raise ValueError("curve colors must be pairwise distinct")
        if self.widths is None:
            self.widths = [int(w) for w in rng.integers(1, 6, size=n)]
        if any(not 1 <= w <= 5 for w in self.widths) or len(self.widths) != n:
            raise ValueError("one stroke width in 1..5 per curve required")
        if self.dashes is None:
            self.dashes = [str(rng.choice(DASH_STYLES, p=[0.6, 0.25, 0.15])) for _ in range(n)]
        if any(d not in DASH_STYLES for d in self.dashes) or len(self.dashes) != n:
            raise ValueError("one dash style per curve required")

    @property
    def n_curves(self) -> int:
        return len(self.kinds)

    @property
    def plot_box(self) -> tuple[int, int, int, int]:
        """Axis positions: (y-axis column, top row, right column, x-axis row)."""
        left, top, right, bottom = self.margins
        w, h = self.canvas
        return left, top, w - right, h - bottom

    def to_dict(self) -> dict:
        d = asdict(self)
        d["colors"] = [list(c) for c in self.colors]
        return d


@dataclass
class GeneratedChart:
    image: Image.Image
    truth: dict[int, np.ndarray]  # curve id -> (N, 2) pixel polyline, image coordinates
    sidecar: dict
    spec: SyntheticSpec
    meta: dict = field(default_factory=dict)


def _curve_values(kind: str, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if kind == "linear":
        a, b = rng.uniform(0.05, 0.95, size=2)
        v = a + (b - a) * u
    elif kind == "quadratic":
        c = rng.uniform(0.2, 0.8)
        v = (u - c) ** 2
        v = v / v.max()
        if rng.random() < 0.5:
            v = 1.0 - v
    elif kind == "asymptotic":
        k = rng.uniform(3.0, 8.0)
        v = 1.0 - np.exp(-k * u)
        if rng.random() < 0.5:
            v = 1.0 - v
    elif kind == "sinusoidal":
        f = rng.uniform(0.75, 2.0)
        phi = rng.uniform(0, 2 * np.pi)
        v = 0.5 + 0.5 * np.sin(2 * np.pi * f * u + phi)
    else:
        knots = int(rng.integers(4, 8))
        kx = np.linspace(0, 1, knots)
        ky = rng.uniform(0, 1, size=knots)
        v = np.interp(u, kx, ky)
    lo, hi = sorted(rng.uniform(0.05, 0.95, size=2))
    if hi - lo < 0.3:
        lo, hi = 0.1, 0.9
    vmin, vmax = v.min(), v.max()
    v = (v - vmin) / (vmax - vmin) if vmax > vmin else np.full_like(v, 0.5)
    return lo + (hi - lo) * v


def _dash_pieces(points: np.ndarray, on: float, off: float) -> list[np.ndarray]:
    """Split a polyline into 'on' pieces of a repeating on/off pattern by arc length."""
    seg = np.diff(points, axis=0)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    period = on + off
    pieces = []
    start = 0.0
    while start < s[-1]:
        stop = min(start + on, s[-1])
        inner = (s > start) & (s < stop)
        xs = np.concatenate([[start], s[inner], [stop]])
        piece = np.stack([np.interp(xs, s, points[:, 0]), np.interp(xs, s, points[:, 1])], axis=1)
        pieces.append(piece)
        start += period
    return pieces


def draw_curve(draw: ImageDraw.ImageDraw, points: np.ndarray, color, width: int, dash: str, scale: float = 1.0) -> None:
    """Draw one polyline (in unscaled pixel units) with the given dash style."""
    pts = np.asarray(points, dtype=float)
    w = max(1, int(round(width * scale)))
    if dash == "solid":
        draw.line([tuple(p) for p in pts * scale], fill=tuple(color), width=w, joint="curve")
    elif dash == "dashed":
        for piece in _dash_pieces(pts, on=4.0 * width + 6.0, off=2.0 * width):
            draw.line([tuple(p) for p in piece * scale], fill=tuple(color), width=w, joint="curve")
    else:
        side = width + 2
        for piece in _dash_pieces(pts, on=1e-6, off=side + 2.0 * width):
            cx, cy = piece[0] * scale
            r = side * scale / 2.0
            draw.rectangle([cx - r, cy - r, cx + r - 1, cy + r - 1], fill=tuple(color))


def _fmt(v: float) -> str:
    return f"{v:g}"


def generate_chart(spec: SyntheticSpec, out_dir: str | Path | None = None, stem: str = "chart") -> GeneratedChart:
    rng = np.random.default_rng(spec.seed + 7919)
    W, H = spec.canvas
    ax, top, right, ay = spec.plot_box
    S = SUPERSAMPLE if spec.antialias else 1
    img = Image.new("RGB", (W * S, H * S), (255, 255, 255))
    draw = ImageDraw.Draw(img)

    def rect(x0, y0, x1, y1, fill):  # inclusive output-pixel rectangle
        draw.rectangle([x0 * S, y0 * S, (x1 + 1) * S - 1, (y1 + 1) * S - 1], fill=fill)

    black = (0, 0, 0)
    aw = spec.axis_width
    rect(ax - aw + 1, top, ax, ay + aw - 1, black)  # y axis
    rect(ax - aw + 1, ay, right, ay + aw - 1, black)  # x axis

    font = ImageFont.load_default(size=12 * S)
    x_ticks_px = np.linspace(ax, right - 10, spec.n_x_ticks).round().astype(int)
    y_ticks_px = np.linspace(ay, top + 10, spec.n_y_ticks).round().astype(int)
    x_vals = np.linspace(*spec.x_range, spec.n_x_ticks)
    y_vals = np.linspace(*spec.y_range, spec.n_y_ticks)
    for px, val in zip(x_ticks_px, x_vals):
        rect(px, ay + aw, px, ay + aw + 5, black)
        draw.text((px * S, (ay + aw + 10) * S), _fmt(val), fill=black, font=font, anchor="mt")
    for py, val in zip(y_ticks_px, y_vals):
        rect(ax - aw - 5, py, ax - aw, py, black)
        draw.text(((ax - aw - 10) * S, py * S), _fmt(val), fill=black, font=font, anchor="rm")
    draw.text((((ax + right) // 2) * S, (H - 12) * S), spec.x_label, fill=black, font=font, anchor="mb")
    draw.text((6 * S, ((top + ay) // 2) * S), spec.y_label, fill=black, font=font, anchor="lm")

    if spec.grid:
        for py in y_ticks_px[1:]:
            for x in range(ax + 4, right, 8):
                rect(x, py, min(x + 3, right), py, black)

    pad = 12
    truth: dict[int, np.ndarray] = {}
    x_lo, x_hi = ax + 1 + pad, right - pad
    y_lo, y_hi = top + pad, ay - 1 - pad
    for cid, kind in enumerate(spec.kinds, start=1):
        u = np.linspace(0.0, 1.0, spec.samples)
        v = _curve_values(kind, u, rng)
        a, b = sorted(rng.uniform(0.0, 1.0, size=2))
        if b - a < 0.6:
            a, b = 0.0, 1.0
        xs = x_lo + (a + (b - a) * u) * (x_hi - x_lo)
        ys = y_hi - v * (y_hi - y_lo)
        pts = np.stack([xs, ys], axis=1)
        truth[cid] = pts
        # strokes are centred on pixel centres
        draw_curve(draw, pts + 0.5, spec.colors[cid - 1], spec.widths[cid - 1], spec.dashes[cid - 1], scale=S)

    if S > 1:
        img = img.resize((W, H), Image.BOX)

    def xval(px):
        return spec.x_range[0] + (px - ax) / (x_ticks_px[-1] - ax) * (spec.x_range[1] - spec.x_range[0])

    sidecar = {
        "x_axis": {
            "label": spec.x_label,
            "ticks": [{"value": float(v), "text": _fmt(v), "px": int(p - ax)} for p, v in zip(x_ticks_px, x_vals)],
        },
        "y_axis": {
            "label": spec.y_label,
            "ticks": [
                {"value": float(v), "text": _fmt(v), "px": int(ay - p)}
                for p, v in sorted(zip(y_ticks_px, y_vals), key=lambda t: t[0])
            ],
        },
    }
    meta = {
        "spec": spec.to_dict(),
        "plot_bounds": [ax + 1, 0, W - 1, ay - 1],
        "axis_px": [int(ax), int(ay)],
    }
    chart = GeneratedChart(image=img, truth=truth, sidecar=sidecar, spec=spec, meta=meta)
    if out_dir is not None:
        write_chart(chart, out_dir, stem)
    return chart


def write_chart(chart: GeneratedChart, out_dir: str | Path, stem: str) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "image": out / f"{stem}.png",
        "truth": out / f"{stem}.truth.csv",
        "axis": out / f"{stem}.axis.json",
        "meta": out / f"{stem}.meta.json",
    }
    chart.image.save(paths["image"], format="PNG")
    with open(paths["truth"], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["curve_id", "x", "y"])
        for cid, pts in chart.truth.items():
            for x, y in pts:
                wr.writerow([cid, f"{x:.3f}", f"{y:.3f}"])
    paths["axis"].write_text(json.dumps(chart.sidecar, indent=2, sort_keys=True) + "\n")
    paths["meta"].write_text(json.dumps(chart.meta, indent=2, sort_keys=True) + "\n")
    return paths


def read_truth(path: str | Path) -> dict[int, np.ndarray]:
    rows: dict[int, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(int(row["curve_id"]), []).append((float(row["x"]), float(row["y"])))
    return {cid: np.array(pts) for cid, pts in rows.items()}


SINGLE_CLASSES = ("linear", "quadratic", "asymptotic", "sinusoidal")
MULTI_CLASSES = {"curves2": 2, "curves3": 3, "curves4": 4}


def class_specs(name: str, count: int, seed: int = 0) -> list[SyntheticSpec]:
    """Specs for one corpus class: a single-curve kind or ``curvesN``."""
    specs = []
    for i in range(count):
        s = seed * 100003 + i * 7 + hash_name(name)
        rng = np.random.default_rng(s)
        if name in SINGLE_CLASSES:
            kinds = [name]
        elif name in MULTI_CLASSES:
            kinds = [str(k) for k in rng.choice(CURVE_KINDS, size=MULTI_CLASSES[name])]
        else:
            raise ValueError(f"unknown corpus class {name!r}")
        specs.append(SyntheticSpec(kinds=kinds, seed=int(s)))
    return specs


def hash_name(name: str) -> int:
    # stable across interpreter runs, unlike hash()
    return sum((i + 1) * ord(c) for i, c in enumerate(name))


def generate_dataset(out_dir: str | Path, classes: dict[str, int], seed: int = 0) -> list[Path]:
    """Write ``<out>/<class>/<id>.png`` plus truth, axis and meta files."""
    written = []
    for name, count in classes.items():
        for i, spec in enumerate(class_specs(name, count, seed)):
            stem = f"{i:03d}"
            generate_chart(spec, Path(out_dir) / name, stem=stem)
            written.append(Path(out_dir) / name / f"{stem}.png")
    return written
