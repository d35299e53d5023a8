"""Reducing unevenness candidates to one middle-point per direction change."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial import cKDTree

from .config import ClusteringConfig
from .errors import DegenerateCurveError
from .segments import LineSegment


@dataclass
class ClusterBounds:
    k_lower: int
    k_upper: int

    def __post_init__(self):
        if not 1 <= self.k_lower <= self.k_upper:
            raise ValueError(f"invalid cluster bounds ({self.k_lower}, {self.k_upper})")


@dataclass
class KMeansResult:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    distortion: float
    # distortion per candidate k (best restart) and every restart's distortion
    curve: dict[int, float] = field(default_factory=dict)
    restarts: dict[int, list[float]] = field(default_factory=dict)
    seed: int = 0


@dataclass
class MiddlePoint:
    position: tuple[int, int]
    cluster_size: int
    curve_id: int = 0


def cut_count(points, distance: float) -> int:
    """Number of single-linkage clusters when merging at ``distance`` or less."""
    pts = np.asarray(points, dtype=float)
    if len(pts) <= 1:
        return len(pts)
    Z = linkage(pts, method="single")
    return int(fcluster(Z, t=distance, criterion="distance").max())


def hierarchical_bounds(points, cfg: ClusteringConfig | None = None) -> ClusterBounds:
    cfg = cfg or ClusteringConfig()
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise ValueError("no points to cluster")
    upper = cut_count(pts, cfg.upper_cut_px)
    lower = cut_count(pts, cfg.lower_cut_px)
    return ClusterBounds(k_lower=lower, k_upper=upper)


def _seed_centroids(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new centre drawn with probability proportional to D^2."""
    n = len(pts)
    idx = [int(rng.integers(n))]
    d2 = ((pts - pts[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            rest = np.setdiff1d(np.arange(n), idx)
            nxt = int(rng.choice(rest)) if rest.size else int(rng.integers(n))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, ((pts - pts[nxt]) ** 2).sum(axis=1))
    return pts[idx].copy()


def kmeans(points, k: int, rng: np.random.Generator, max_iter: int = 100) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd iterations until assignments are stable. Returns (centroids, labels, SSE)."""
    pts = np.asarray(points, dtype=float)
    cent = _seed_centroids(pts, k, rng)
    labels = None
    for _ in range(max_iter):
        d2 = ((pts[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = pts[labels == j]
            if len(members):
                cent[j] = members.mean(axis=0)
            else:
                # empty cluster takes the point worst served by its centre
                far = int(d2[np.arange(len(pts)), labels].argmax())
                cent[j] = pts[far]
                labels[far] = j
    d2 = ((pts[:, None, :] - cent[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    sse = float(d2[np.arange(len(pts)), labels].sum())
    return cent, labels, sse


def best_of_restarts(points, k: int, restarts: int = 5, seed: int = 0, max_iter: int = 100):
    """Run k-means ``restarts`` times; keep the lowest-distortion run."""
    runs = []
    for r in range(restarts):
        rng = np.random.default_rng([seed, k, r])
        runs.append(kmeans(points, k, rng, max_iter))
    dists = [run[2] for run in runs]
    best = int(np.argmin(dists))
    return runs[best], dists


def elbow_index(ks: list[int], distortions: list[float], flat_tol: float = 1e-9) -> int | None:
    """Position of the maximal second difference, or None when the curve is flat."""
    if len(ks) < 3:
        return None
    d = np.asarray(distortions, dtype=float)
    second = d[:-2] - 2 * d[1:-1] + d[2:]
    if second.max() < flat_tol:
        return None
    return int(np.argmax(second)) + 1


def elbow_kmeans(points, bounds: ClusterBounds, cfg: ClusteringConfig | None = None, seed: int = 0) -> KMeansResult:
    cfg = cfg or ClusteringConfig()
    pts = np.asarray(points, dtype=float)
    if len(pts) < bounds.k_lower:
        raise ValueError(f"{len(pts)} points but k_lower = {bounds.k_lower}")
    k_hi = min(bounds.k_upper, len(pts))
    ks = list(range(bounds.k_lower, k_hi + 1))
    results, curve, restarts = {}, {}, {}
    for k in ks:
        (cent, labels, sse), dists = best_of_restarts(pts, k, cfg.restarts, seed, cfg.max_iter)
        results[k] = (cent, labels, sse)
        curve[k] = sse
        restarts[k] = dists
    pos = elbow_index(ks, [curve[k] for k in ks])
    k = ks[0] if pos is None else ks[pos]
    cent, labels, sse = results[k]
    return KMeansResult(k, labels, cent, sse, curve, restarts, seed)


def cluster_middle_points(result: KMeansResult | np.ndarray, points, curve_id: int = 0,
                          pinned: tuple[int, ...] = ()) -> list[MiddlePoint]:
    """Per cluster, the member at the (lower) median x; not the centroid.

    A cluster holding one of the ``pinned`` point indices (the trail ends, in
    the pipeline) is represented by that point instead, so the chain spans
    the whole curve.
    """
    labels = result.labels if isinstance(result, KMeansResult) else np.asarray(result)
    pts = np.asarray(points)
    pin = {int(labels[i]): (int(pts[i][0]), int(pts[i][1])) for i in pinned}
    out = []
    for lab in np.unique(labels):
        members = sorted((int(p[0]), int(p[1])) for p in pts[labels == lab])
        mid = pin.get(int(lab), members[(len(members) - 1) // 2])
        out.append(MiddlePoint(mid, len(members), curve_id))
    out.sort(key=lambda m: m.position)
    return out


def filter_noise(mps: list[MiddlePoint], trail_points, width: int) -> list[MiddlePoint]:
    """Drop middle-points farther than the curve width from the traced trail."""
    if width < 1:
        raise ValueError("width must be at least 1")
    tp = np.asarray(trail_points, dtype=float)
    if len(mps) == 0 or len(tp) == 0:
        return []
    dist, _ = cKDTree(tp).query(np.array([m.position for m in mps], dtype=float))
    return [m for m, d in zip(mps, dist) if d <= width]


def build_segments(mps: list[MiddlePoint], curve_id: int | None = None) -> list[LineSegment]:
    """Chain x-sorted middle-points into directed segments."""
    pos = sorted({m.position for m in mps})
    if len(pos) < 2:
        raise DegenerateCurveError(f"curve degenerate: {len(pos)} distinct middle-point(s)", stage="segments")
    cid = curve_id if curve_id is not None else (mps[0].curve_id if mps else 0)
    return [LineSegment(cid, i, pos[i], pos[i + 1]) for i in range(len(pos) - 1)]
