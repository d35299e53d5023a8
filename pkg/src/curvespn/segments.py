"""Line segments and the relations between them: merging, intersections,
parallelism, connection angles, growth classes and midpoint association."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .errors import AmbiguousMatchWarning

log = logging.getLogger(__name__)

VERTICAL = math.inf
Point = tuple[float, float]

GROWTH_CLASSES = ("exponential growth", "linear growth", "exponential decay", "linear decay", "steady")


def _slope(p0, p1) -> float:
    if p1[0] == p0[0]:
        return VERTICAL
    return (p1[1] - p0[1]) / (p1[0] - p0[0])


def _num(v: float):
    """Integral floats become ints so identifiers and output stay tidy."""
    return int(v) if float(v).is_integer() else float(v)


@dataclass(frozen=True)
class LineSegment:
    curve_id: int
    seg_index: int
    start: Point
    end: Point

    def __post_init__(self):
        s = (_num(self.start[0]), _num(self.start[1]))
        e = (_num(self.end[0]), _num(self.end[1]))
        if e[0] < s[0]:
            s, e = e, s
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)

    @property
    def id(self) -> str:
        return f"L{self.curve_id}S{self.seg_index}"

    @property
    def key(self) -> tuple[int, int]:
        return (self.curve_id, self.seg_index)

    @property
    def slope(self) -> float:
        if self.start == self.end:
            return 0.0
        return _slope(self.start, self.end)

    @property
    def length_px(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def angle(self) -> float:
        """Direction angle in radians, image coordinates."""
        return math.atan2(self.end[1] - self.start[1], self.end[0] - self.start[0])

    def to_dict(self) -> dict:
        return {"id": self.id, "curve": self.curve_id, "index": self.seg_index,
                "start": list(self.start), "end": list(self.end)}


def parse_segment_id(sid: str) -> tuple[int, int]:
    c, s = sid[1:].split("S")
    return int(c), int(s)


@dataclass(frozen=True)
class Relation:
    kind: str  # connection | parallelism | intersection
    a: str
    b: str
    value: object

    def to_dict(self) -> dict:
        v = self.value
        if self.kind == "intersection":
            v = [float(v[0]), float(v[1])]
        elif self.kind == "parallelism" and math.isinf(v):
            v = "VERTICAL"
        return {"kind": self.kind, "a": self.a, "b": self.b, "value": v}

    @property
    def sort_key(self):
        return (parse_segment_id(self.a), parse_segment_id(self.b), self.kind)


def renumber(segs: list[LineSegment]) -> list[LineSegment]:
    return [replace(s, seg_index=i) for i, s in enumerate(segs)]


def _join(a: LineSegment, b: LineSegment) -> LineSegment:
    return LineSegment(a.curve_id, a.seg_index, a.start, b.end)


def _merge_fixpoint(segs: list[LineSegment], match: Callable[[LineSegment, LineSegment], bool]) -> list[LineSegment]:
    segs = list(segs)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(segs) - 1:
            if match(segs[i], segs[i + 1]):
                segs[i : i + 2] = [_join(segs[i], segs[i + 1])]
                changed = True
            else:
                i += 1
    return renumber(segs)


# -- merging rules -------------------------------------------------------------

def _lemma(dx: float, dy: float, width: int) -> bool:
    return abs(dy) <= 1 and abs(dx) <= width - 1


def rule1_matches(a: LineSegment, b: LineSegment, width: int) -> bool:
    gap = (b.start[0] - a.end[0], b.start[1] - a.end[1])
    if gap != (0, 0):
        return _lemma(*gap, width)
    # chained pair: a jog segment small enough to be the worst-case junction
    for s in (b, a):
        d = (s.end[0] - s.start[0], s.end[1] - s.start[1])
        if d != (0, 0) and _lemma(*d, width):
            return True
    return False


def merge_rule_1(segs: list[LineSegment], width: int) -> list[LineSegment]:
    """Join consecutive segments separated by (or consisting of) a worst-case jog."""
    return _merge_fixpoint(segs, lambda a, b: rule1_matches(a, b, width))


def slope_threshold(width: int) -> float:
    return 0.0 if width <= 1 else 1.0 / (width - 1)


def _line_angle_diff(a: LineSegment, b: LineSegment) -> float:
    d = abs(a.angle - b.angle) % math.pi
    return min(d, math.pi - d)


def similar_direction(a: LineSegment, b: LineSegment, threshold: float) -> bool:
    sa, sb = a.slope, b.slope
    if math.isinf(sa) or math.isinf(sb):
        return _line_angle_diff(a, b) <= math.atan(threshold) + 1e-12
    return abs(sa - sb) <= threshold + 1e-12


def merge_rule_2(segs: list[LineSegment], width: int) -> list[LineSegment]:
    """Join consecutive segments whose slopes differ by at most 1/(width-1)."""
    if width <= 1:
        return renumber(list(segs))
    thr = slope_threshold(width)
    return _merge_fixpoint(segs, lambda a, b: similar_direction(a, b, thr))


# -- intersections and parallelism ---------------------------------------------

@dataclass
class IntersectionSolution:
    T: float
    U: float
    point: Point


def solve_intersection(a: LineSegment, b: LineSegment) -> IntersectionSolution | None:
    """Parametric solution of start_a + T*(end_a - start_a) = start_b + U*(end_b - start_b).

    Returns None for parallel pairs (zero determinant); T and U are returned
    unrestricted, the caller decides validity.
    """
    x1, y1 = a.start
    x2, y2 = a.end
    x3, y3 = b.start
    x4, y4 = b.end
    dx1, dy1 = x2 - x1, y2 - y1
    dx2, dy2 = x4 - x3, y4 - y3
    det = dy2 * dx1 - dx2 * dy1
    if abs(det) < 1e-12:
        return None
    U = ((y1 - y3) * dx1 + (x3 - x1) * dy1) / det
    T = ((x3 - x1) * dy2 - (y3 - y1) * dx2) / det
    return IntersectionSolution(T, U, (x1 + T * dx1, y1 + T * dy1))


def intersect(a: LineSegment, b: LineSegment) -> IntersectionSolution | None:
    sol = solve_intersection(a, b)
    if sol is None or not (0 < sol.T < 1 and 0 < sol.U < 1):
        return None
    return sol


def find_intersections(segs_a: list[LineSegment], segs_b: list[LineSegment]) -> list[Relation]:
    out = []
    for a in segs_a:
        for b in segs_b:
            if a.curve_id == b.curve_id:
                continue
            sol = intersect(a, b)
            if sol is not None:
                first, second = sorted((a, b), key=lambda s: s.key)
                out.append(Relation("intersection", first.id, second.id, sol.point))
    return sorted(out, key=lambda r: r.sort_key)


def collinear_overlap(a: LineSegment, b: LineSegment, tol: float = 1e-9) -> bool:
    """True when both segments lie on one line and share more than a single point."""
    d = np.subtract(a.end, a.start, dtype=float)
    n = float(np.hypot(*d))
    if n == 0:
        return False
    for p in (b.start, b.end):
        q = np.subtract(p, a.start, dtype=float)
        if abs(d[0] * q[1] - d[1] * q[0]) / n > tol:
            return False
    # overlap of the projections onto a's direction
    t = sorted(float(np.dot(np.subtract(p, a.start, dtype=float), d)) / n for p in (b.start, b.end))
    return min(t[1], n) - max(t[0], 0.0) > tol


def find_parallelisms(segs_a: list[LineSegment], segs_b: list[LineSegment], width_a: int, width_b: int | None = None) -> list[Relation]:
    """Non-intersecting cross-curve pairs whose slopes differ by at most 1/(w-1)."""
    w = max(width_a, width_b if width_b is not None else width_a)
    thr = slope_threshold(w)
    out = []
    for a in segs_a:
        for b in segs_b:
            if a.curve_id == b.curve_id or intersect(a, b) is not None or collinear_overlap(a, b):
                continue
            if not similar_direction(a, b, thr):
                continue
            sa, sb = a.slope, b.slope
            common = VERTICAL if (math.isinf(sa) or math.isinf(sb)) else (sa + sb) / 2.0
            first, second = sorted((a, b), key=lambda s: s.key)
            out.append(Relation("parallelism", first.id, second.id, common))
    return sorted(out, key=lambda r: r.sort_key)


def cross_relations(curves: dict[int, list[LineSegment]], widths: dict[int, int]) -> list[Relation]:
    ids = sorted(curves)
    rels = []
    for i, ci in enumerate(ids):
        for ck in ids[i + 1 :]:
            rels += find_intersections(curves[ci], curves[ck])
            rels += find_parallelisms(curves[ci], curves[ck], widths.get(ci, 1), widths.get(ck, 1))
    return sorted(rels, key=lambda r: r.sort_key)


def merge_rule_3(curves: dict[int, list[LineSegment]], widths: dict[int, int]) -> dict[int, list[LineSegment]]:
    """Join consecutive same-curve segments that share a parallel partner on another curve.

    Parallelism is recomputed after every merge, until nothing changes.
    """
    curves = {c: renumber(list(s)) for c, s in curves.items()}
    while True:
        partners: dict[str, set[str]] = {}
        for r in cross_relations(curves, widths):
            if r.kind == "parallelism":
                partners.setdefault(r.a, set()).add(r.b)
                partners.setdefault(r.b, set()).add(r.a)
        hit = None
        for c in sorted(curves):
            segs = curves[c]
            for i in range(len(segs) - 1):
                if partners.get(segs[i].id, set()) & partners.get(segs[i + 1].id, set()):
                    hit = (c, i)
                    break
            if hit:
                break
        if hit is None:
            return curves
        c, i = hit
        segs = curves[c]
        segs[i : i + 2] = [_join(segs[i], segs[i + 1])]
        curves[c] = renumber(segs)


# -- connections -----------------------------------------------------------------

def connection_angle(a: LineSegment, b: LineSegment) -> float:
    """Angle in degrees between the direction vectors, in [0, 180)."""
    da = np.subtract(a.end, a.start, dtype=float)
    db = np.subtract(b.end, b.start, dtype=float)
    if not da.any() or not db.any():
        return 0.0
    # atan2 of cross and dot stays exact for collinear pairs, unlike acos
    return math.degrees(math.atan2(abs(da[0] * db[1] - da[1] * db[0]), float(da @ db))) % 180.0


def compute_connection_angles(segs: list[LineSegment]) -> list[Relation]:
    return [Relation("connection", a.id, b.id, connection_angle(a, b)) for a, b in zip(segs, segs[1:])]


# -- growth ------------------------------------------------------------------------

@dataclass
class GrowthAnnotation:
    curve_id: int
    segment_range: tuple[int, int]
    cls: str
    magnitude: float | None = None
    magnitude_unit: str = "px"
    duration: float | None = None
    duration_unit: str = "pixels"

    @property
    def agent(self) -> str:
        return f"L{self.curve_id}S{self.segment_range[0]}"

    def to_dict(self) -> dict:
        return {
            "curve": self.curve_id,
            "segments": list(self.segment_range),
            "class": self.cls,
            "magnitude": self.magnitude,
            "magnitude_unit": self.magnitude_unit,
            "duration": self.duration,
            "duration_unit": self.duration_unit,
        }


def math_slope(seg: LineSegment) -> float:
    """Slope with y pointing up; vertical segments become +/- infinity."""
    s = seg.slope
    if math.isinf(s):
        return math.inf if seg.end[1] < seg.start[1] else -math.inf
    return -s


def classify_slopes(slopes: list[float], ratio_eps: float = 0.15, zero_eps: float = 0.05) -> list[tuple[int, int, str]]:
    """Label maximal runs of math-orientation slopes; returns (first, last, class)."""
    sign = [0 if abs(s) <= zero_eps else (1 if s > 0 else -1) for s in slopes]
    labels: list[str] = [""] * len(slopes)
    i = 0
    while i < len(slopes):
        j = i
        while j + 1 < len(slopes) and sign[j + 1] == sign[i]:
            j += 1
        if sign[i] == 0:
            for k in range(i, j + 1):
                labels[k] = "steady"
        else:
            word = "growth" if sign[i] > 0 else "decay"
            for k in range(i, j + 1):
                labels[k] = f"linear {word}"
            for k in range(i, j):
                a, b = abs(slopes[k]), abs(slopes[k + 1])
                if math.isinf(b) or (not math.isinf(a) and b >= (1 + ratio_eps) * a):
                    labels[k] = labels[k + 1] = f"exponential {word}"
        i = j + 1
    out = []
    for k, lab in enumerate(labels):
        if out and out[-1][2] == lab:
            out[-1] = (out[-1][0], k, lab)
        else:
            out.append((k, k, lab))
    return out


def classify_growth(segs: list[LineSegment], axis=None, to_image: Callable[[Point], Point] | None = None,
                    ratio_eps: float = 0.15, zero_eps: float = 0.05) -> list[GrowthAnnotation]:
    """Growth/decay/steady classes over a curve's chain, with axis-unit extents when known."""
    if not segs:
        return []
    to_image = to_image or (lambda p: p)
    runs = classify_slopes([math_slope(s) for s in segs], ratio_eps, zero_eps)
    out = []
    for first, last, cls in runs:
        p0 = to_image(segs[first].start)
        p1 = to_image(segs[last].end)
        ann = GrowthAnnotation(segs[0].curve_id, (segs[first].seg_index, segs[last].seg_index), cls)
        v0 = axis.y_value(p0[1]) if axis is not None else None
        v1 = axis.y_value(p1[1]) if axis is not None else None
        if v0 is not None and v1 is not None:
            if v0 != 0:
                ann.magnitude, ann.magnitude_unit = (v1 - v0) / abs(v0) * 100.0, "%"
            else:
                ann.magnitude, ann.magnitude_unit = v1 - v0, axis.y_label or "units"
        else:
            ann.magnitude, ann.magnitude_unit = float(p0[1] - p1[1]), "px"
        x0 = axis.x_value(p0[0]) if axis is not None else None
        x1 = axis.x_value(p1[0]) if axis is not None else None
        if x0 is not None and x1 is not None:
            ann.duration, ann.duration_unit = x1 - x0, axis.x_label or "units"
        else:
            ann.duration, ann.duration_unit = float(p1[0] - p0[0]), "pixels"
        out.append(ann)
    return out


# -- midpoint association ----------------------------------------------------------

@dataclass
class MidpointTemplate:
    midpoint: tuple[int, int]  # plot-region coordinates
    patch: np.ndarray
    offset: tuple[int, int]  # midpoint position inside the patch (col, row)
    curve_id: int = 0
    matched_position: tuple[int, int] | None = None  # original-image coordinates
    ssd: float | None = None
    ambiguous: bool = False


def extract_templates(region_pixels: np.ndarray, midpoints, size: int = 81, curve_id: int = 0) -> list[MidpointTemplate]:
    """Cut a size x size neighbourhood around each midpoint, clipped at the borders."""
    half = size // 2
    h, w = region_pixels.shape[:2]
    out = []
    for mp in midpoints:
        x, y = (int(mp[0]), int(mp[1])) if not hasattr(mp, "position") else mp.position
        x0, y0 = max(0, x - half), max(0, y - half)
        x1, y1 = min(w, x + half + 1), min(h, y + half + 1)
        out.append(MidpointTemplate((x, y), region_pixels[y0:y1, x0:x1].copy(), (x - x0, y - y0), curve_id))
    return out


def _ssd_map(area: np.ndarray, patch: np.ndarray) -> np.ndarray:
    """Exact sum of squared differences for every placement of patch inside area."""
    A = area.astype(np.float64)
    P = patch.astype(np.float64)
    ph, pw = P.shape[:2]
    ones = np.ones((ph, pw))
    a2 = sum(fftconvolve(A[..., c] ** 2, ones, mode="valid") for c in range(A.shape[2]))
    cross = sum(fftconvolve(A[..., c], P[::-1, ::-1, c], mode="valid") for c in range(A.shape[2]))
    # integer inputs: the exact result is integral, FFT noise is far below 0.5
    return np.rint(a2 - 2.0 * cross + (P ** 2).sum())


def associate_midpoints(original, templates: list[MidpointTemplate], region_origin: tuple[int, int] = (0, 0),
                        window: int | None = 20, tie_tol: float = 0.01) -> list[MidpointTemplate]:
    """Slide each patch over the original image near its expected location.

    The best placement minimises the RGB sum of squared differences; ties go
    to the smallest displacement.  Two or more placements within ``tie_tol``
    of the minimum flag the match as ambiguous.
    """
    img = original.pixels if hasattr(original, "pixels") else np.asarray(original)
    H, W = img.shape[:2]
    ox, oy = region_origin
    out = []
    for t in templates:
        ph, pw = t.patch.shape[:2]
        ex = t.midpoint[0] - t.offset[0] + ox  # expected top-left in the image
        ey = t.midpoint[1] - t.offset[1] + oy
        if window is None:
            ax0, ay0, ax1, ay1 = 0, 0, W, H
        else:
            ax0, ay0 = max(0, ex - window), max(0, ey - window)
            ax1, ay1 = min(W, ex + window + pw), min(H, ey + window + ph)
        area = img[ay0:ay1, ax0:ax1]
        if area.shape[0] < ph or area.shape[1] < pw:
            out.append(replace(t, matched_position=(t.midpoint[0] + ox, t.midpoint[1] + oy)))
            continue
        ssd = _ssd_map(area, t.patch)
        best = ssd.min()
        rows, cols = np.nonzero(ssd <= best + tie_tol * best)
        dy = rows + ay0 - ey
        dx = cols + ax0 - ex
        order = np.lexsort((dx, dy, dx * dx + dy * dy))
        k = order[0]
        ambiguous = len(rows) >= 2
        if ambiguous:
            warnings.warn(f"ambiguous match for midpoint {t.midpoint}: {len(rows)} placements tie",
                          AmbiguousMatchWarning, stacklevel=2)
        # among tied placements prefer an exact minimum
        exact = np.flatnonzero(ssd[rows[order], cols[order]] == best)
        k = order[exact[0]] if exact.size else k
        pos = (int(t.midpoint[0] + ox + dx[k]), int(t.midpoint[1] + oy + dy[k]))
        out.append(replace(t, matched_position=pos, ssd=float(best), ambiguous=ambiguous))
    return out
