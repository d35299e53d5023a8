"""Chart loading, HSV homogenization, plot-region separation and curve masks."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .config import HomogeneityConfig
from .errors import ChartInputError, NoAxesWarning, NoCurvesError, TickMismatchError

log = logging.getLogger(__name__)

MIN_SIDE = 64
RGB = tuple[int, int, int]


@dataclass
class ChartImage:
    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ChartInputError(f"expected an RGB grid, got shape {self.pixels.shape}")
        if self.height_px < MIN_SIDE or self.width_px < MIN_SIDE:
            raise ChartInputError(
                f"image too small: {self.width_px}x{self.height_px} (minimum {MIN_SIDE}x{MIN_SIDE})"
            )
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]


@dataclass
class HomogenizedImage:
    pixels: np.ndarray
    palette: list[tuple[RGB, int]]  # (color, pixel count), count descending
    background_color: RGB
    # palette entries that came from the black/gray/white anchors
    achromatic: set[RGB] = field(default_factory=set)

    @property
    def colors(self) -> list[RGB]:
        return [c for c, _ in self.palette]


@dataclass
class PlotRegion:
    bounds: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive, image coordinates
    pixels: np.ndarray
    background_color: RGB
    excluded_colors: set[RGB] = field(default_factory=set)

    @property
    def origin(self) -> tuple[int, int]:
        return self.bounds[0], self.bounds[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class CurveMask:
    curve_id: int
    color: RGB
    mask: np.ndarray  # bool, aligned to PlotRegion
    width_estimate_px: int = 1

    @property
    def pixel_count(self) -> int:
        return int(self.mask.sum())


@dataclass
class Tick:
    px: float
    value: float | None = None
    text: str = ""


@dataclass
class AxisModel:
    x_ticks: list[Tick] = field(default_factory=list)
    y_ticks: list[Tick] = field(default_factory=list)
    x_label: str = ""
    y_label: str = ""
    origin_px: tuple[int, int] | None = None
    detected: bool = True

    @property
    def pixel_units(self) -> bool:
        return not (self.has_x_values and self.has_y_values)

    @property
    def has_x_values(self) -> bool:
        return sum(t.value is not None for t in self.x_ticks) >= 2

    @property
    def has_y_values(self) -> bool:
        return sum(t.value is not None for t in self.y_ticks) >= 2

    def x_value(self, px: float) -> float | None:
        return _interp([t for t in self.x_ticks if t.value is not None], px)

    def y_value(self, py: float) -> float | None:
        return _interp([t for t in self.y_ticks if t.value is not None], py)

    def to_dict(self) -> dict:
        return {
            "x_label": self.x_label,
            "y_label": self.y_label,
            "origin_px": list(self.origin_px) if self.origin_px else None,
            "x_ticks": [vars(t) for t in self.x_ticks],
            "y_ticks": [vars(t) for t in self.y_ticks],
            "pixel_units": self.pixel_units,
        }


def _interp(ticks: list[Tick], p: float) -> float | None:
    if len(ticks) < 2:
        return None
    ticks = sorted(ticks, key=lambda t: t.px)
    px = np.array([t.px for t in ticks], dtype=float)
    vals = np.array([t.value for t in ticks], dtype=float)
    # linear extrapolation beyond the outer ticks
    if p <= px[0]:
        i = 0
    elif p >= px[-1]:
        i = len(px) - 2
    else:
        i = int(np.searchsorted(px, p) - 1)
    t = (p - px[i]) / (px[i + 1] - px[i])
    return float(vals[i] + t * (vals[i + 1] - vals[i]))


def load_chart(path: str | Path) -> ChartImage:
    path = Path(path)
    if not path.exists():
        raise ChartInputError(f"no such file: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            arr = np.asarray(im.convert("RGB"))
    except UnidentifiedImageError as exc:
        raise ChartInputError(f"unsupported format: {path}") from exc
    except (OSError, SyntaxError) as exc:
        raise ChartInputError(f"decode failure: {path}: {exc}") from exc
    return ChartImage(arr.copy())


# -- homogenization ---------------------------------------------------------

def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorized RGB (0-255 floats) to HSV with hue in degrees, s and v in [0, 1]."""
    rgb = np.asarray(rgb, dtype=float) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)
    h = np.zeros_like(mx)
    rmax = (mx == r) & (delta > 0)
    gmax = (mx == g) & (delta > 0) & ~rmax
    bmax = (delta > 0) & ~rmax & ~gmax
    h[rmax] = ((g - b)[rmax] / safe[rmax]) % 6.0
    h[gmax] = (b - r)[gmax] / safe[gmax] + 2.0
    h[bmax] = (r - g)[bmax] / safe[bmax] + 4.0
    h = h * 60.0
    s = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return np.stack([h, s, mx], axis=-1)


def _enhance(pixels: np.ndarray, cfg: HomogeneityConfig) -> np.ndarray:
    f = pixels.astype(float)
    blurred = ndimage.uniform_filter(f, size=(3, 3, 1), mode="nearest")
    sharp = np.clip(f + cfg.sharpen_amount * (f - blurred), 0.0, 255.0)
    lo, hi = np.percentile(sharp, [cfg.stretch_low_pct, cfg.stretch_high_pct])
    if hi - lo >= cfg.stretch_min_span:
        sharp = np.clip((sharp - lo) * (255.0 / (hi - lo)), 0.0, 255.0)
    return sharp


def _classify(original: np.ndarray, enhanced: np.ndarray, cfg: HomogeneityConfig) -> tuple[np.ndarray, int]:
    """Class id per pixel: hue bins first, then black/gray/white anchors.

    Hue and brightness come from the original pixel; the enhanced copy only
    lifts faintly tinted pixels (antialiased fringes) over the saturation
    threshold.  Hue taken from the sharpened copy drifts wherever RGB
    clipping occurs, and sharpening drives thin strokes toward black.
    """
    hsv_o = rgb_to_hsv(original)
    s_e = rgb_to_hsv(enhanced)[..., 1]
    h, s_o, v = hsv_o[..., 0], hsv_o[..., 1], hsv_o[..., 2]
    width = 360.0 / cfg.hue_bins
    # bins centred on multiples of the bin width so pure primaries sit mid-bin
    hue_bin = np.floor((h + width / 2.0) / width).astype(int) % cfg.hue_bins
    n = cfg.hue_bins
    cls = hue_bin.copy()
    tinted = (s_o >= cfg.min_saturation) | ((s_o > cfg.min_tint) & (s_e >= cfg.min_saturation))
    achrom = ~tinted | (v < cfg.min_value)
    black = achrom & (v < cfg.gray_low)
    gray = achrom & ~black & (v < cfg.gray_high)
    white = achrom & ~black & ~gray
    cls[black] = n
    cls[gray] = n + 1
    cls[white] = n + 2
    return cls, n


def apply_hsv_homogeneity(img: ChartImage | np.ndarray, cfg: HomogeneityConfig | None = None) -> HomogenizedImage:
    """Replace every shade with the dominant color of its hue bin or achromatic anchor.

    The sharpened/stretched copy only decides class membership; the color a
    class maps to is the modal RGB of the *original* pixels in it, which keeps
    an already-homogeneous image fixed.
    """
    cfg = cfg or HomogeneityConfig()
    pixels = img.pixels if isinstance(img, ChartImage) else np.asarray(img, dtype=np.uint8)
    # class membership depends on the neighbourhood, so one pass can leave a
    # color split over two classes; passes only ever reuse existing colors,
    # and iterating to the fixed point makes the filter idempotent
    out = _homogenize_once(pixels, cfg)
    for _ in range(cfg.max_passes - 1):
        nxt = _homogenize_once(out.pixels, cfg)
        if np.array_equal(nxt.pixels, out.pixels):
            break
        nxt.achromatic |= out.achromatic & set(nxt.colors)
        out = nxt
    return out


def _homogenize_once(pixels: np.ndarray, cfg: HomogeneityConfig) -> HomogenizedImage:
    cls, n_hue = _classify(pixels, _enhance(pixels, cfg), cfg)

    code = (pixels[..., 0].astype(np.int64) << 16) | (pixels[..., 1].astype(np.int64) << 8) | pixels[..., 2]
    key = cls.astype(np.int64) << 24 | code
    uniq, counts = np.unique(key.ravel(), return_counts=True)
    u_cls = uniq >> 24
    u_code = uniq & 0xFFFFFF

    # modal color and size per class; ties resolved by the smaller color code
    modal: dict[int, int] = {}
    size: dict[int, int] = {}
    for c in np.unique(u_cls):
        sel = u_cls == c
        cc, cn = u_code[sel], counts[sel]
        best = np.flatnonzero(cn == cn.max())
        modal[int(c)] = int(cc[best].min())
        size[int(c)] = int(cn.sum())

    # merge classes that landed on the same color
    by_color: dict[int, int] = {}
    for c, col in modal.items():
        by_color[col] = by_color.get(col, 0) + size[c]
    achromatic_codes = {modal[c] for c in modal if c >= n_hue}

    ranked = sorted(by_color.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [col for col, cnt in ranked if cnt >= cfg.min_color_pixels][: cfg.max_palette]
    if not keep:
        keep = [ranked[0][0]]
    keep_rgb = np.array([_decode(c) for c in keep], dtype=float)

    remap: dict[int, int] = {}
    for col in by_color:
        if col in keep:
            remap[col] = col
        else:
            d = ((keep_rgb - np.array(_decode(col), dtype=float)) ** 2).sum(axis=1)
            remap[col] = keep[int(np.argmin(d))]

    class_ids = np.array(sorted(modal))
    lut = np.zeros(class_ids.max() + 1, dtype=np.int64)
    for c in class_ids:
        lut[c] = remap[modal[int(c)]]
    out_code = lut[cls]
    out = np.stack([(out_code >> 16) & 255, (out_code >> 8) & 255, out_code & 255], axis=-1).astype(np.uint8)

    final_counts: dict[int, int] = {}
    for col, cnt in by_color.items():
        final_counts[remap[col]] = final_counts.get(remap[col], 0) + cnt
    palette = [(_decode(c), n) for c, n in sorted(final_counts.items(), key=lambda kv: (-kv[1], kv[0]))]
    return HomogenizedImage(
        pixels=out,
        palette=palette,
        background_color=palette[0][0],
        achromatic={_decode(c) for c in achromatic_codes if c in final_counts},
    )


def _decode(code: int) -> RGB:
    return ((code >> 16) & 255, (code >> 8) & 255, code & 255)


def _brightness(c: RGB) -> float:
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]


# -- region separation -------------------------------------------------------

def _longest_runs(mask: np.ndarray) -> np.ndarray:
    """Longest run of True along axis 1 for every row."""
    best = np.zeros(mask.shape[0], dtype=int)
    cur = np.zeros(mask.shape[0], dtype=int)
    for j in range(mask.shape[1]):
        cur = np.where(mask[:, j], cur + 1, 0)
        np.maximum(best, cur, out=best)
    return best


def _band(runs: np.ndarray, threshold: float) -> tuple[int, int] | None:
    """Contiguous index band around the longest run, all above threshold."""
    i = int(np.argmax(runs))
    if runs[i] <= threshold:
        return None
    lo = hi = i
    while lo > 0 and runs[lo - 1] > threshold:
        lo -= 1
    while hi < len(runs) - 1 and runs[hi + 1] > threshold:
        hi += 1
    return lo, hi


def _run_extent(line: np.ndarray) -> tuple[int, int]:
    """Start and end index of the longest True run in a 1-D mask."""
    padded = np.concatenate([[False], line, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    starts, ends = edges[::2], edges[1::2]
    k = int(np.argmax(ends - starts))
    return int(starts[k]), int(ends[k] - 1)


def _group_centres(idx: np.ndarray) -> list[float]:
    if idx.size == 0:
        return []
    groups = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    return [float(g.mean()) for g in groups]


def segment_regions(h: HomogenizedImage) -> tuple[PlotRegion, AxisModel]:
    """Find the L-shaped axes and return the plot interior plus raw tick positions."""
    pix = h.pixels
    height, width = pix.shape[:2]
    # axes are drawn in black or gray; a long colored run is a curve
    candidates = [c for c in h.colors if c != h.background_color and c in h.achromatic]
    if not candidates:
        return _no_axes(h)
    axis_color = min(candidates, key=_brightness)
    axis_mask = np.all(pix == np.array(axis_color, dtype=np.uint8), axis=-1)

    row_runs = _longest_runs(axis_mask)
    col_runs = _longest_runs(axis_mask.T)
    xband = _band(row_runs, 0.5 * width)
    yband = _band(col_runs, 0.5 * height)
    if xband is None and yband is None:
        return _no_axes(h)

    x0, y1 = 0, height - 1
    axis = AxisModel()
    if yband is not None:
        x0 = yband[1] + 1
    if xband is not None:
        y1 = xband[0] - 1
    if x0 >= width - 1 or y1 <= 0:
        return _no_axes(h)
    axis.origin_px = (yband[1] if yband else 0, xband[0] if xband else height - 1)

    # ticks: axis-colored stubs just outside each axis, within the axis extent
    if xband is not None:
        c_lo, c_hi = _run_extent(axis_mask[xband[1]])
        rows = slice(xband[1] + 1, min(xband[1] + 4, height))
        cols = np.flatnonzero(axis_mask[rows, c_lo : c_hi + 1].any(axis=0)) + c_lo
        axis.x_ticks = [Tick(px=c) for c in _group_centres(cols)]
    if yband is not None:
        r_lo, r_hi = _run_extent(axis_mask[:, yband[0]])
        cols_ = slice(max(yband[0] - 3, 0), yband[0])
        rows_ = np.flatnonzero(axis_mask[r_lo : r_hi + 1, cols_].any(axis=1)) + r_lo
        axis.y_ticks = [Tick(px=r) for r in _group_centres(rows_)]

    excluded = {axis_color} | (h.achromatic - {h.background_color})
    region = PlotRegion(
        bounds=(x0, 0, width - 1, y1),
        pixels=pix[0 : y1 + 1, x0:width].copy(),
        background_color=h.background_color,
        excluded_colors=excluded,
    )
    return region, axis


def _no_axes(h: HomogenizedImage) -> tuple[PlotRegion, AxisModel]:
    warnings.warn("no axes detected; using the full image as plot region", NoAxesWarning, stacklevel=3)
    height, width = h.pixels.shape[:2]
    region = PlotRegion(
        bounds=(0, 0, width - 1, height - 1),
        pixels=h.pixels.copy(),
        background_color=h.background_color,
        excluded_colors=h.achromatic - {h.background_color},
    )
    return region, AxisModel(detected=False)


def extract_curve_masks(region: PlotRegion, min_pixels: int = 50) -> list[CurveMask]:
    pix = region.pixels
    code = (pix[..., 0].astype(np.int64) << 16) | (pix[..., 1].astype(np.int64) << 8) | pix[..., 2]
    uniq, counts = np.unique(code, return_counts=True)
    skip = {region.background_color} | set(region.excluded_colors)
    found = []
    for col, cnt in zip(uniq, counts):
        rgb = _decode(int(col))
        if rgb in skip or cnt < min_pixels:
            continue
        found.append((int(cnt), int(col), rgb))
    if not found:
        raise NoCurvesError("no curves found", stage="ingest")
    found.sort(key=lambda t: (-t[0], t[1]))
    masks: list[CurveMask] = []
    taken = np.zeros(code.shape, dtype=bool)
    for _, col, rgb in found:
        mask = code == col
        if masks and _is_fringe(mask, taken):
            log.info("dropping blend color %s (%d px) hugging other curves", rgb, int(mask.sum()))
            continue
        m = CurveMask(curve_id=len(masks) + 1, color=rgb, mask=mask)
        m.width_estimate_px = estimate_curve_width(m)
        masks.append(m)
        taken |= mask
    return masks


def _is_fringe(mask: np.ndarray, taken: np.ndarray, reach: int = 2, share: float = 0.9) -> bool:
    """Antialiasing blends where two strokes meet sit entirely next to larger curves."""
    near = ndimage.binary_dilation(taken, iterations=reach)
    return bool(near[mask].mean() >= share)


def estimate_curve_width(mask: CurveMask | np.ndarray, reach: int = 2) -> int:
    """Median stroke thickness over occupied columns.

    Each column contributes its longest vertical run, foreshortened by the
    local direction: a stroke of thickness t with slope s covers t*sqrt(1+s^2)
    rows of a column.  The slope comes from the run centres ``reach`` columns
    either side; columns without both neighbours keep their raw run.
    """
    m = mask.mask if isinstance(mask, CurveMask) else np.asarray(mask, dtype=bool)
    W = m.shape[1]
    cols = np.flatnonzero(m.any(axis=0))
    if cols.size == 0:
        return 1
    run = np.zeros(W)
    centre = np.full(W, np.nan)
    for x in cols:
        s, e = _run_extent(m[:, x])
        run[x] = e - s + 1
        centre[x] = (s + e) / 2.0
    thick = []
    for x in cols:
        a, b = x - reach, x + reach
        if a >= 0 and b < W and not (np.isnan(centre[a]) or np.isnan(centre[b])):
            slope = (centre[b] - centre[a]) / (b - a)
            thick.append(run[x] / np.hypot(1.0, slope))
        else:
            thick.append(run[x])
    return max(1, int(round(float(np.median(thick)))))


# -- axis metadata -------------------------------------------------------------

def _numeric(value, text: str) -> float | None:
    for cand in (value, text):
        if isinstance(cand, bool):
            continue
        if isinstance(cand, (int, float)):
            return float(cand)
        if isinstance(cand, str):
            try:
                return float(cand.strip().replace(",", ""))
            except ValueError:
                pass
    return None


def _merge_ticks(entries: list[dict], detected: list[Tick], origin: float, sign: int) -> list[Tick]:
    if not entries:
        return [Tick(px=t.px) for t in detected]
    if not detected:
        if all("px" in e for e in entries):
            return [_tick_from(e, origin + sign * float(e["px"])) for e in entries]
        raise TickMismatchError("tick mismatch: sidecar lists ticks but none were detected")
    n_side, n_det = len(entries), len(detected)
    if abs(n_side - n_det) / n_det > 0.5:
        raise TickMismatchError(f"tick mismatch: {n_side} sidecar ticks vs {n_det} detected")

    det_px = sorted(t.px for t in detected)
    if all("px" in e for e in entries):
        out, used = [], set()
        for e in entries:
            want = origin + sign * float(e["px"])
            j = min((k for k in range(n_det) if k not in used), key=lambda k: abs(det_px[k] - want), default=None)
            if j is None:
                break
            used.add(j)
            out.append(_tick_from(e, det_px[j]))
        return sorted(out, key=lambda t: t.px)
    out = [_tick_from(e, p) for e, p in zip(entries, det_px)]
    return sorted(out, key=lambda t: t.px)


def _tick_from(entry: dict, px: float) -> Tick:
    text = str(entry.get("text", entry.get("value", "")))
    return Tick(px=float(px), value=_numeric(entry.get("value"), text), text=text)


def read_axis_metadata(sidecar: str | Path | dict | None, partial: AxisModel) -> AxisModel:
    """Attach sidecar tick values/labels to the detected tick pixels.

    Sidecar ticks are listed in increasing pixel order (left to right, top to
    bottom).  An optional ``px`` key gives the tick's offset from the origin
    along its axis (rightward for x, upward for y) and switches matching to
    nearest-pixel.
    """
    if sidecar is None:
        return AxisModel(
            x_ticks=[Tick(px=t.px) for t in partial.x_ticks],
            y_ticks=[Tick(px=t.px) for t in partial.y_ticks],
            origin_px=partial.origin_px,
            detected=partial.detected,
        )
    if isinstance(sidecar, dict):
        doc = sidecar
    else:
        try:
            doc = json.loads(Path(sidecar).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ChartInputError(f"malformed sidecar {sidecar}: {exc}") from exc
    try:
        xa = doc.get("x_axis", {}) or {}
        ya = doc.get("y_axis", {}) or {}
        x_entries = list(xa.get("ticks", []))
        y_entries = list(ya.get("ticks", []))
        if not all(isinstance(e, dict) for e in x_entries + y_entries):
            raise TypeError("ticks must be objects")
    except (AttributeError, TypeError) as exc:
        raise ChartInputError(f"malformed sidecar: {exc}") from exc

    ox, oy = partial.origin_px if partial.origin_px else (0, 0)
    x_ticks = _merge_ticks(x_entries, partial.x_ticks, ox, +1)
    y_ticks = _merge_ticks(y_entries, partial.y_ticks, oy, -1)
    _categorical(x_ticks)
    _categorical(y_ticks)
    return AxisModel(
        x_ticks=x_ticks,
        y_ticks=y_ticks,
        x_label=str(xa.get("label", "")),
        y_label=str(ya.get("label", "")),
        origin_px=partial.origin_px,
        detected=partial.detected,
    )


def _categorical(ticks: list[Tick]) -> None:
    # non-numeric labels become ordinal positions
    if ticks and all(t.value is None for t in ticks) and any(t.text for t in ticks):
        for i, t in enumerate(sorted(ticks, key=lambda t: t.px)):
            t.value = float(i)
