"""End-to-end chart analysis and the on-disk output bundle."""

from __future__ import annotations

import hashlib
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .clustering import build_segments, cluster_middle_points, elbow_kmeans, filter_noise, hierarchical_bounds
from .config import Config
from .errors import AmbiguousMatchWarning, AnalysisError, NoAxesWarning
from .graphs import AttributedGraph, NlSentence, build_attributed_graphs, graphs_to_json, graphs_to_sentences, sentences_text
from .ingest import (
    AxisModel,
    ChartImage,
    apply_hsv_homogeneity,
    extract_curve_masks,
    load_chart,
    read_axis_metadata,
    segment_regions,
)
from .lang import KyrtosAst, build_ast, serialize
from .metrics import ssim
from .segments import (
    GrowthAnnotation,
    LineSegment,
    MidpointTemplate,
    Relation,
    associate_midpoints,
    classify_growth,
    compute_connection_angles,
    cross_relations,
    extract_templates,
    merge_rule_1,
    merge_rule_2,
    merge_rule_3,
)
from .spn import SpnGraph, kernels_to_spn, reconstruct_curves
from .tracing import detect_unevenness, trace_centerline, unevenness_criteria

log = logging.getLogger(__name__)

BUNDLE_FILES = ("chart.kyr", "sentences.txt", "graphs.json", "spn.json", "reconstruction.png", "report.json")


@dataclass
class CurveInfo:
    curve_id: int
    color: tuple[int, int, int]
    width_px: int
    pixel_count: int
    trail_length: int
    bridged_gaps: int
    unevenness_points: int
    k: int
    middle_points: list[tuple[int, int]]
    trail_ends: tuple[tuple[int, int], tuple[int, int]] = ((0, 0), (0, 0))

    def to_dict(self) -> dict:
        d = dict(vars(self))
        d["color"] = list(self.color)
        d["middle_points"] = [list(p) for p in self.middle_points]
        d["trail_ends"] = [list(p) for p in self.trail_ends]
        return d


@dataclass
class StageResult:
    name: str  # rule2 | rule3
    segments: dict[int, list[LineSegment]]
    relations: list[Relation]
    growth: list[GrowthAnnotation]
    ast: KyrtosAst
    kyrtos: str
    graphs: dict[str, AttributedGraph]
    sentences: list[NlSentence]
    spn: SpnGraph
    _reconstruction: np.ndarray | None = field(default=None, repr=False)

    def segment_ids(self) -> set[str]:
        return {s.id for segs in self.segments.values() for s in segs}

    @property
    def reconstruction(self) -> np.ndarray:
        if self._reconstruction is None:
            self._reconstruction = reconstruct_curves(self.spn)
        return self._reconstruction

    def summary(self) -> dict:
        return {
            "segments": {str(c): [s.to_dict() for s in segs] for c, segs in sorted(self.segments.items())},
            "relations": [r.to_dict() for r in self.relations],
            "growth": [g.to_dict() for g in self.growth],
        }


@dataclass
class ChartDescription:
    source: str | None
    image_size: tuple[int, int]
    region_bounds: tuple[int, int, int, int]
    region_pixels: np.ndarray = field(repr=False)
    curves: list[CurveInfo]
    axis: AxisModel
    templates: list[MidpointTemplate]
    stages: dict[str, StageResult]
    merge_mode: str
    provenance: dict
    notes: list[str] = field(default_factory=list)

    @property
    def stage(self) -> StageResult:
        return self.stages[self.merge_mode]

    def kyrtos_ast(self) -> KyrtosAst:
        return self.stage.ast

    def stage_ssim(self, name: str | None = None) -> float:
        st = self.stages[name or self.merge_mode]
        return ssim(st.reconstruction, self.region_pixels)


def _curve_segments(region, mask, cfg: Config, criteria) -> tuple[list[LineSegment], CurveInfo]:
    occluded = (region.pixels != np.array(region.background_color, dtype=np.uint8)).any(axis=-1) & ~mask.mask
    trail = trace_centerline(mask, cfg.tracing, occluded)
    ups = detect_unevenness(trail, criteria)
    pts = np.array([u.position for u in ups])
    try:
        bounds = hierarchical_bounds(pts, cfg.clustering)
        km = elbow_kmeans(pts, bounds, cfg.clustering, seed=cfg.seed)
    except ValueError as exc:
        raise AnalysisError(f"curve {mask.curve_id}: {exc}", stage="clustering") from exc
    # the trail ends always represent their own clusters
    mids = cluster_middle_points(km, pts, mask.curve_id, pinned=(0, len(pts) - 1))
    mps = filter_noise(mids, trail.points, mask.width_estimate_px)
    segs = build_segments(mps, mask.curve_id)
    w = mask.width_estimate_px
    segs = merge_rule_2(merge_rule_1(segs, w), w)
    info = CurveInfo(mask.curve_id, tuple(mask.color), w, mask.pixel_count, len(trail.points),
                     len(trail.gaps) + len(trail.long_gaps), len(ups), km.k, [m.position for m in mps],
                     (tuple(int(v) for v in trail.points[0]), tuple(int(v) for v in trail.points[-1])))
    return segs, info


def _build_stage(name: str, segments, widths, colors, axis, origin, canvas, cfg: Config) -> StageResult:
    relations = []
    for cid in sorted(segments):
        relations += compute_connection_angles(segments[cid])
    relations += cross_relations(segments, widths)
    relations.sort(key=lambda r: r.sort_key)

    def to_image(p):
        return (p[0] + origin[0], p[1] + origin[1])

    growth = []
    for cid in sorted(segments):
        growth += classify_growth(segments[cid], axis if not axis.pixel_units else None, to_image,
                                  cfg.analysis.growth_ratio_eps, cfg.analysis.growth_zero_eps)
    ast = build_ast(segments, relations)
    graphs = build_attributed_graphs(relations, segments)
    sentences = graphs_to_sentences(graphs, growth, axis)
    net = kernels_to_spn(sentences, segments, colors, widths, canvas)
    return StageResult(name, segments, relations, growth, ast, serialize(ast), graphs, sentences, net)


def analyze(image, axis: str | Path | dict | None = None, config: Config | None = None) -> ChartDescription:
    """Run the whole recognition and analysis chain on one chart image."""
    cfg = config or Config()
    notes: list[str] = []
    source = None
    if isinstance(image, (str, Path)):
        source = str(image)
        img = load_chart(image)
    elif isinstance(image, ChartImage):
        img = image
    else:
        img = ChartImage(np.asarray(image.convert("RGB") if isinstance(image, Image.Image) else image))

    h = apply_hsv_homogeneity(img, cfg.homogeneity)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoAxesWarning)
        region, partial = segment_regions(h)
    notes += [str(w.message) for w in caught]
    axis_model = read_axis_metadata(axis, partial)
    masks = extract_curve_masks(region, cfg.homogeneity.min_color_pixels)
    criteria = unevenness_criteria(region)

    segments, infos = {}, []
    for m in masks:
        segs, info = _curve_segments(region, m, cfg, criteria)
        segments[m.curve_id] = segs
        infos.append(info)
    widths = {i.curve_id: i.width_px for i in infos}
    colors = {i.curve_id: i.color for i in infos}

    tpls = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AmbiguousMatchWarning)
        for info in infos:
            t = extract_templates(region.pixels, info.middle_points, cfg.analysis.template_size, info.curve_id)
            tpls += associate_midpoints(img, t, region.origin, cfg.analysis.template_window)
    ambiguous = sum(issubclass(w.category, AmbiguousMatchWarning) for w in caught)
    if ambiguous:
        notes.append(f"{ambiguous} ambiguous midpoint match(es)")

    canvas = (region.width, region.height)
    stages = {"rule2": _build_stage("rule2", segments, widths, colors, axis_model, region.origin, canvas, cfg)}
    if cfg.merge_mode == "rule3":
        merged = merge_rule_3(segments, widths)
        stages["rule3"] = _build_stage("rule3", merged, widths, colors, axis_model, region.origin, canvas, cfg)

    provenance = {
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "merge_mode": cfg.merge_mode,
        "version": __version__,
        "image_sha256": hashlib.sha256(img.pixels.tobytes()).hexdigest(),
    }
    return ChartDescription(
        source=source,
        image_size=(img.width_px, img.height_px),
        region_bounds=tuple(int(v) for v in region.bounds),
        region_pixels=region.pixels,
        curves=infos,
        axis=axis_model,
        templates=tpls,
        stages=stages,
        merge_mode=cfg.merge_mode,
        provenance=provenance,
        notes=notes,
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def report_dict(desc: ChartDescription) -> dict:
    return {
        "image_size": list(desc.image_size),
        "region_bounds": list(desc.region_bounds),
        "merge_mode": desc.merge_mode,
        "ssim": {name: desc.stage_ssim(name) for name in sorted(desc.stages)},
        "curves": [c.to_dict() for c in desc.curves],
        "axis": desc.axis.to_dict(),
        "stages": {name: st.summary() for name, st in sorted(desc.stages.items())},
        "midpoints": [
            {"curve": t.curve_id, "midpoint": list(t.midpoint),
             "matched": list(t.matched_position) if t.matched_position else None, "ambiguous": t.ambiguous}
            for t in desc.templates
        ],
        "notes": desc.notes,
        "provenance": desc.provenance,
    }


def run_bundle(desc: ChartDescription, out_dir: str | Path) -> dict[str, str]:
    """Write the output files for the description's primary stage; returns name -> sha256."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    st = desc.stage
    (out / "chart.kyr").write_text(st.kyrtos + "\n", encoding="utf-8")
    (out / "sentences.txt").write_text(sentences_text(st.sentences), encoding="utf-8")
    (out / "graphs.json").write_text(graphs_to_json(st.graphs) + "\n", encoding="utf-8")
    (out / "spn.json").write_text(st.spn.to_json() + "\n", encoding="utf-8")
    Image.fromarray(st.reconstruction).save(out / "reconstruction.png", format="PNG")
    (out / "report.json").write_text(json.dumps(report_dict(desc), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files = {name: _sha256(out / name) for name in BUNDLE_FILES}
    manifest = {"files": files, "provenance": desc.provenance}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return files
