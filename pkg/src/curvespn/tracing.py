"""Centerline tracing of curve masks and detection of direction changes."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TracingConfig
from .errors import AnalysisError, FragmentedCurveError
from .ingest import CurveMask, PlotRegion

# run == 0; compares as a direction change against every finite slope
VERTICAL = math.inf


def is_vertical(s: float) -> bool:
    return math.isinf(s)


def slope(p0, p1) -> float:
    """Rise over run in image coordinates (y grows downward)."""
    x0, y0 = float(p0[0]), float(p0[1])
    x1, y1 = float(p1[0]), float(p1[1])
    if x0 == x1 and y0 == y1:
        raise ValueError(f"slope undefined for identical points {tuple(p0)}")
    if x1 == x0:
        return VERTICAL
    return (y1 - y0) / (x1 - x0)


def format_slope(s: float) -> str:
    return "VERTICAL" if is_vertical(s) else repr(float(s))


@dataclass
class PixelTrail:
    curve_id: int
    points: np.ndarray  # (N, 2) int, one point per column, x increasing
    gaps: list[tuple[int, int]] = field(default_factory=list)
    long_gaps: list[tuple[int, int]] = field(default_factory=list)

    def __len__(self):
        return len(self.points)


@dataclass
class UnevennessConfig:
    H_U: float
    L_U: float

    def __post_init__(self):
        if self.H_U < 1 or self.L_U < 1:
            raise ValueError("H_U and L_U must be at least 1 pixel")

    @property
    def e(self) -> float:
        return self.H_U / self.L_U

    @property
    def W_U(self) -> float:
        return self.H_U * self.L_U


@dataclass
class UnevennessPoint:
    position: tuple[int, int]
    slope_before: float | None
    slope_after: float | None
    trail_index: int


def unevenness_criteria(region: PlotRegion | tuple[int, int]) -> UnevennessConfig:
    """Window height/length from the plot region's height and width."""
    if isinstance(region, PlotRegion):
        h, w = region.height, region.width
    else:
        h, w = region
    if h < 1 or w < 1:
        raise ValueError("empty region")
    return UnevennessConfig(H_U=float(h), L_U=float(w))


# -- tracing -------------------------------------------------------------------

@dataclass
class _Fragment:
    cols: list[int] = field(default_factory=list)
    runs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def start_x(self):
        return self.cols[0]

    @property
    def end_x(self):
        return self.cols[-1]

    def mids(self):
        return [(c, (s + e) // 2) for c, (s, e) in zip(self.cols, self.runs)]

    def clipped(self, lo: int, hi: int) -> _Fragment:
        keep = [k for k, c in enumerate(self.cols) if lo <= c <= hi]
        return _Fragment([self.cols[k] for k in keep], [self.runs[k] for k in keep])


def _column_runs(col: np.ndarray) -> list[tuple[int, int]]:
    idx = np.flatnonzero(col)
    if idx.size == 0:
        return []
    parts = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    return [(int(p[0]), int(p[-1])) for p in parts]


def _interval_gap(a: tuple[int, int], b: tuple[int, int]) -> int:
    if a[1] < b[0]:
        return b[0] - a[1] - 1
    if b[1] < a[0]:
        return a[0] - b[1] - 1
    return 0


def _fragments(mask: np.ndarray) -> list[_Fragment]:
    """Column-monotone pieces whose consecutive runs touch (8-connectivity)."""
    done: list[_Fragment] = []
    active: list[_Fragment] = []
    for x in range(mask.shape[1]):
        runs = _column_runs(mask[:, x])
        pairs = []
        for fi, f in enumerate(active):
            ls, le = f.runs[-1]
            for ri, (s, e) in enumerate(runs):
                if s <= le + 1 and e >= ls - 1:
                    d = abs((s + e) / 2 - (ls + le) / 2)
                    pairs.append((d, fi, ri))
        pairs.sort()
        used_f, used_r = set(), set()
        nxt = []
        for _, fi, ri in pairs:
            if fi in used_f or ri in used_r:
                continue
            used_f.add(fi)
            used_r.add(ri)
            active[fi].cols.append(x)
            active[fi].runs.append(runs[ri])
            nxt.append(active[fi])
        for fi, f in enumerate(active):
            if fi not in used_f:
                done.append(f)
        for ri, r in enumerate(runs):
            if ri not in used_r:
                nxt.append(_Fragment([x], [r]))
        active = nxt
    done.extend(active)
    return done


def _gap(left: _Fragment, right: _Fragment) -> float:
    dx = max(0, right.start_x - left.end_x - 1)
    dy = _interval_gap(left.runs[-1], right.runs[0])
    return math.hypot(dx, dy)


def _open_gap(left: _Fragment, right: _Fragment, occluded: np.ndarray) -> float:
    """Gap length with the stretch hidden under other curves' pixels discounted."""
    full = _gap(left, right)
    if full == 0:
        return 0.0
    (x0, y0), (x1, y1) = left.mids()[-1], right.mids()[0]
    n = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
    xs = np.rint(np.linspace(x0, x1, n)).astype(int)
    ys = np.rint(np.linspace(y0, y1, n)).astype(int)
    hidden = occluded[ys, xs].mean()
    return full * (1.0 - hidden)


def trace_centerline(mask: CurveMask, cfg: TracingConfig | None = None, occluded: np.ndarray | None = None) -> PixelTrail:
    """Left-to-right column scan emitting run midpoints, bridging dash gaps.

    ``occluded`` marks pixels painted by other curves; gaps running through
    them are treated as hidden stroke rather than empty plot area.
    """
    cfg = cfg or TracingConfig()
    m = np.asarray(mask.mask, dtype=bool)
    if not m.any():
        raise AnalysisError("empty mask", stage="tracing")
    frags = _fragments(m)
    bridge = cfg.bridge_factor * max(1, mask.width_estimate_px)
    substantial = max(bridge, 5.0)
    occ = None if occluded is None else np.asarray(occluded, dtype=bool)

    def gap(a: _Fragment, b: _Fragment) -> float:
        return _gap(a, b) if occ is None else _open_gap(a, b, occ)

    seed = max(frags, key=lambda f: (len(f.cols), -f.start_x))
    chain = [seed]
    links: list[tuple[int, bool]] = []  # (position in chain, bridged)
    used = {id(seed)}

    def pick(cands, dist):
        # cands are (fragment, part beyond the chain end) pairs
        near = min(cands, key=lambda c: (dist(c[1]), c[1].start_x))
        if dist(near[1]) <= bridge:
            return near, True
        big = [c for c in cands if len(c[1].cols) >= substantial]
        if not big:
            return None, False
        return min(big, key=lambda c: (dist(c[1]), c[1].start_x)), False

    # neighbouring dots or dashes may share columns, so only the part of a
    # fragment that extends the chain is considered and kept
    while True:
        last = chain[-1]
        cands = [(f, f.clipped(last.end_x + 1, f.end_x)) for f in frags if id(f) not in used and f.end_x > last.end_x]
        if not cands:
            break
        c, bridged = pick(cands, lambda f: gap(last, f))
        if c is None:
            break
        used.add(id(c[0]))
        chain.append(c[1])
        links.append((len(chain) - 1, bridged))
    while True:
        first = chain[0]
        cands = [(f, f.clipped(f.start_x, first.start_x - 1)) for f in frags if id(f) not in used and f.start_x < first.start_x]
        if not cands:
            break
        c, bridged = pick(cands, lambda f: gap(f, first))
        if c is None:
            break
        used.add(id(c[0]))
        chain.insert(0, c[1])
        links = [(i + 1, b) for i, b in links]
        links.append((1, bridged))

    points, starts = [], []
    for f in chain:
        starts.append(len(points))
        points.extend(f.mids())
    gaps, long_gaps = [], []
    for pos, bridged in sorted(links):
        pair = (starts[pos] - 1, starts[pos])
        (gaps if bridged else long_gaps).append(pair)

    span = chain[-1].end_x - chain[0].start_x + 1
    empty = 1.0 - len(points) / span
    if long_gaps and empty > cfg.max_empty_fraction:
        raise FragmentedCurveError(
            f"fragmented curve {mask.curve_id}: {empty:.0%} of columns empty, gaps exceed {bridge:g} px",
            stage="tracing",
        )
    return PixelTrail(mask.curve_id, np.array(points, dtype=int), gaps, long_gaps)


# -- unevenness ------------------------------------------------------------------

def _deviates(cur: float, ref: float, e: float) -> bool:
    if is_vertical(cur) or is_vertical(ref):
        return is_vertical(cur) != is_vertical(ref)
    return cur < ref - e or cur > ref + e


def _farthest_from_chord(pts: np.ndarray, a: int, b: int) -> tuple[int, float]:
    if b - a < 2:
        return b, 0.0
    p, q = pts[a].astype(float), pts[b].astype(float)
    d = q - p
    inner = pts[a + 1 : b].astype(float) - p
    dist = np.abs(d[0] * inner[:, 1] - d[1] * inner[:, 0]) / math.hypot(*d)
    k = int(np.argmax(dist))
    return a + 1 + k, float(dist[k])


def detect_unevenness(trail: PixelTrail | np.ndarray, cfg: UnevennessConfig) -> list[UnevennessPoint]:
    """Walk the trail and report points where the direction leaves the ``e`` band.

    The slope from the current anchor to each pixel is compared with the
    reference slope.  On a violation the corner is placed at the trail point
    farthest from the anchor-to-pixel chord (the vertex the chord cuts off);
    when that vertex is under a pixel away the violating pixel itself is used.
    The anchor moves to the corner and the reference becomes the slope
    measured there.  Trail endpoints are always reported.
    """
    pts = np.asarray(trail.points if isinstance(trail, PixelTrail) else trail)
    n = len(pts)
    if n < 3:
        raise AnalysisError(f"trail too short ({n} points)", stage="unevenness")
    e = cfg.e
    out = [UnevennessPoint((int(pts[0][0]), int(pts[0][1])), None, None, 0)]
    anchor = 0
    ref = slope(pts[0], pts[1])
    i = 2
    while i < n:
        cur = slope(pts[anchor], pts[i])
        if _deviates(cur, ref, e):
            corner, dist = _farthest_from_chord(pts, anchor, i)
            if dist < 1.0:
                corner = i
            new_ref = cur if corner == i else slope(pts[corner], pts[i])
            out.append(UnevennessPoint((int(pts[corner][0]), int(pts[corner][1])), ref, cur, corner))
            anchor, ref = corner, new_ref
        i += 1
    if out[-1].trail_index != n - 1:
        out.append(UnevennessPoint((int(pts[-1][0]), int(pts[-1][1])), ref, None, n - 1))
    return out


def dump_csv(path: str | Path, trail: PixelTrail, points: list[UnevennessPoint] | None = None) -> None:
    """Write ``curve_id,x,y,slope`` rows: the trail (forward slope), or the unevenness points."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["curve_id", "x", "y", "slope"])
        if points is None:
            pts = trail.points
            for k, (x, y) in enumerate(pts):
                s = slope(pts[k], pts[k + 1]) if k + 1 < len(pts) else None
                wr.writerow([trail.curve_id, x, y, "" if s is None else format_slope(s)])
        else:
            for up in points:
                s = up.slope_after
                wr.writerow([trail.curve_id, *up.position, "" if s is None else format_slope(s)])
