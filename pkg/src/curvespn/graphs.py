"""Attributed relation graphs and their natural-language rendering.

Each relation kind gets its own graph: segments are nodes carrying their
start and end pixels, relations are arcs labelled with the angle, the
common slope or the intersection point.  Arcs and growth annotations are
then written out as numbered sentences built from agent-verb-patient
kernels.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .segments import GrowthAnnotation, LineSegment, Relation, parse_segment_id

GRAPH_KINDS = ("connection", "parallelism", "intersection")

VERB_CONNECT = "is connected to"
VERB_PARALLEL = "is parallel to"
VERB_INTERSECT = "is intersecting with"
VERB_ILLUSTRATES = "illustrates"
VERB_GREATER = "greater than"
VERB_DURING = "during"
VERBS = (VERB_CONNECT, VERB_PARALLEL, VERB_INTERSECT, VERB_ILLUSTRATES, VERB_GREATER, VERB_DURING)

_SEG = "the straight-line segment"


@dataclass
class AttributedGraph:
    kind: str
    nodes: dict[str, dict] = field(default_factory=dict)
    arcs: list[tuple[str, str, object]] = field(default_factory=list)

    def to_dict(self) -> dict:
        def label(v):
            if self.kind == "intersection":
                return [float(v[0]), float(v[1])]
            if isinstance(v, float) and math.isinf(v):
                return "VERTICAL"
            return v

        return {
            "kind": self.kind,
            "nodes": [{"id": k, **v} for k, v in self.nodes.items()],
            "arcs": [{"source": a, "target": b, "label": label(v)} for a, b, v in self.arcs],
        }

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph(kind=self.kind)
        for k, v in self.nodes.items():
            g.add_node(k, curve=v["curve"], start_x=float(v["start"][0]), start_y=float(v["start"][1]),
                       end_x=float(v["end"][0]), end_y=float(v["end"][1]))
        for a, b, v in self.arcs:
            if self.kind == "intersection":
                g.add_edge(a, b, x=float(v[0]), y=float(v[1]))
            elif self.kind == "parallelism":
                g.add_edge(a, b, slope="VERTICAL" if math.isinf(v) else repr(float(v)))
            else:
                g.add_edge(a, b, degrees=float(v))
        return g


def _segment_index(segments) -> dict[str, LineSegment]:
    if isinstance(segments, dict):
        segments = [s for c in sorted(segments) for s in segments[c]]
    return {s.id: s for s in segments}


def build_attributed_graphs(relations: list[Relation], segments) -> dict[str, AttributedGraph]:
    """One graph per relation kind; only segments taking part in an arc become nodes."""
    index = _segment_index(segments)
    graphs = {k: AttributedGraph(k) for k in GRAPH_KINDS}
    for r in sorted(relations, key=lambda r: r.sort_key):
        g = graphs[r.kind]
        for sid in (r.a, r.b):
            if sid not in index:
                raise KeyError(f"relation references unknown segment {sid}")
            s = index[sid]
            g.nodes.setdefault(sid, {"curve": s.curve_id, "start": list(s.start), "end": list(s.end)})
        g.arcs.append((r.a, r.b, r.value))
    return graphs


def graphs_to_json(graphs: dict[str, AttributedGraph]) -> str:
    return json.dumps({k: graphs[k].to_dict() for k in GRAPH_KINDS}, indent=2, sort_keys=True)


def write_graphml(graphs: dict[str, AttributedGraph], out_dir: str | Path, stem: str = "graph") -> list[Path]:
    out = []
    for k in GRAPH_KINDS:
        p = Path(out_dir) / f"{stem}_{k}.graphml"
        nx.write_graphml(graphs[k].to_networkx(), p)
        out.append(p)
    return out


# -- sentences ----------------------------------------------------------------------

@dataclass(frozen=True)
class AvpKernel:
    agent: str
    verb: str
    patient: str

    def __post_init__(self):
        if not (self.agent and self.verb and self.patient):
            raise ValueError("kernel parts must be nonempty")
        if self.verb not in VERBS:
            raise ValueError(f"unknown verb {self.verb!r}")


@dataclass
class NlSentence:
    id: str
    text: str
    kernels: list[AvpKernel]
    source: Relation | GrowthAnnotation

    def to_line(self) -> str:
        return f"{self.id}: {self.text}"


def format_number(v: float) -> str:
    """Integral values without a fraction, everything else at full precision."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _relation_sentence(r: Relation) -> tuple[str, list[AvpKernel]]:
    if r.kind == "connection":
        text = f"{_SEG} {r.a} is connected with ({repr(float(r.value))} degrees) to {_SEG} {r.b}"
        return text, [AvpKernel(r.a, VERB_CONNECT, r.b)]
    if r.kind == "parallelism":
        return f"{_SEG} {r.a} is parallel to {_SEG} {r.b}", [AvpKernel(r.a, VERB_PARALLEL, r.b)]
    x, y = (int(round(c)) for c in r.value)
    text = f"{_SEG} {r.a} is intersecting in coordinates X={x} and Y={y} with {_SEG} {r.b}"
    return text, [AvpKernel(r.a, VERB_INTERSECT, r.b)]


def growth_parts(g: GrowthAnnotation) -> tuple[str, str]:
    mag = f"{format_number(abs(g.magnitude) if g.magnitude is not None else 0.0)} {g.magnitude_unit}"
    dur = f"{format_number(g.duration if g.duration is not None else 0.0)} {g.duration_unit}"
    return mag, dur


def _growth_sentence(g: GrowthAnnotation) -> tuple[str, list[AvpKernel]]:
    mag, dur = growth_parts(g)
    text = f"{_SEG} {g.agent} illustrates {g.cls} greater than {mag}) during {dur}"
    return text, [AvpKernel(g.agent, VERB_ILLUSTRATES, g.cls), AvpKernel(g.cls, VERB_GREATER, mag),
                  AvpKernel(g.cls, VERB_DURING, dur)]


def graphs_to_sentences(graphs: dict[str, AttributedGraph], growth: list[GrowthAnnotation] = (), axis=None) -> list[NlSentence]:
    """Connections (by curve), parallelisms, intersections, then growth; numbered from NLS1.

    ``axis`` is accepted for symmetry with the rest of the pipeline; units are
    already resolved on the growth annotations.
    """
    items: list[tuple[str, list[AvpKernel], object]] = []
    for kind in ("connection", "parallelism", "intersection"):
        arcs = sorted(graphs[kind].arcs, key=lambda a: (parse_segment_id(a[0]), parse_segment_id(a[1])))
        for a, b, v in arcs:
            r = Relation(kind, a, b, v)
            items.append((*_relation_sentence(r), r))
    for g in sorted(growth, key=lambda g: (g.curve_id, g.segment_range)):
        items.append((*_growth_sentence(g), g))
    return [NlSentence(f"NLS{i}", text, kernels, src) for i, (text, kernels, src) in enumerate(items, start=1)]


_ID = r"L\d+S\d+"
_NUM = r"-?\d+(?:\.\d+)?(?:e[-+]?\d+)?|-?inf|nan"
_PATTERNS = [
    (re.compile(rf"^{_SEG} ({_ID}) is connected with \(({_NUM}) degrees\) to {_SEG} ({_ID})$"), "connection"),
    (re.compile(rf"^{_SEG} ({_ID}) is parallel to {_SEG} ({_ID})$"), "parallelism"),
    (re.compile(rf"^{_SEG} ({_ID}) is intersecting in coordinates X=(-?\d+) and Y=(-?\d+) with {_SEG} ({_ID})$"), "intersection"),
    (re.compile(rf"^{_SEG} ({_ID}) illustrates ((?:exponential|linear) (?:growth|decay)|steady) "
                rf"greater than ((?:{_NUM}) .*?)\) during ((?:{_NUM}) .+)$"), "growth"),
]


def extract_kernels(text: str) -> list[AvpKernel]:
    """Recover the kernels of a generated sentence (the inverse of the templates)."""
    if re.match(r"^NLS\d+: ", text):
        text = text.split(": ", 1)[1]
    for pat, kind in _PATTERNS:
        m = pat.match(text)
        if m is None:
            continue
        if kind == "connection":
            return [AvpKernel(m.group(1), VERB_CONNECT, m.group(3))]
        if kind == "parallelism":
            return [AvpKernel(m.group(1), VERB_PARALLEL, m.group(2))]
        if kind == "intersection":
            return [AvpKernel(m.group(1), VERB_INTERSECT, m.group(4))]
        agent, cls, mag, dur = m.groups()
        return [AvpKernel(agent, VERB_ILLUSTRATES, cls), AvpKernel(cls, VERB_GREATER, mag), AvpKernel(cls, VERB_DURING, dur)]
    raise ValueError(f"not a generated sentence: {text!r}")


def sentences_text(sentences: list[NlSentence]) -> str:
    return "".join(s.to_line() + "\n" for s in sentences)
