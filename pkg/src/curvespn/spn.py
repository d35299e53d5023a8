"""Coloured stochastic Petri nets built from sentence kernels, and curve
reconstruction by replaying them.

One place per segment; each kernel adds a transition from its agent's place
to its patient's place.  Connection transitions carry the downstream
segment's start point as a token and intersection transitions carry the
crossing point, so replaying every curve's connection chain visits the
curve's vertices in order.  Growth kernels hang token-free transitions off
the segment places into attribute places.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from .errors import CurveSpnError
from .graphs import VERB_CONNECT, VERB_INTERSECT, VERB_PARALLEL, NlSentence
from .segments import GrowthAnnotation, LineSegment, Relation, parse_segment_id

RGB = tuple[int, int, int]
Point = tuple[float, float]

_VERB_KIND = {VERB_CONNECT: "connection", VERB_PARALLEL: "parallelism", VERB_INTERSECT: "intersection"}
_KIND_RANK = {"connection": 0, "growth": 1, "intersection": 2, "parallelism": 3}


class SpnError(CurveSpnError):
    pass


class DeadlockError(SpnError):
    def __init__(self, message: str, marking: list[str], pending: list[str]):
        super().__init__(message)
        self.marking = marking
        self.pending = pending

    def __str__(self):
        return f"{self.args[0]}; marked: {self.marking}; stuck: {self.pending}"


@dataclass
class SpnPlace:
    id: str
    segment: str | None  # None for growth attribute places
    color: RGB
    curve_id: int
    tokens: list[Point] = field(default_factory=list)
    label: str = ""

    def to_dict(self) -> dict:
        d = {"id": self.id, "segment": self.segment, "color": list(self.color), "curve": self.curve_id,
             "tokens": [list(t) for t in self.tokens]}
        if self.label:
            d["label"] = self.label
        return d


@dataclass
class SpnTransition:
    id: str
    kind: str  # connection | intersection | parallelism | growth
    rate: float = 1.0
    payload: object = None
    tokens: list[Point] = field(default_factory=list)
    verb: str = ""

    def __post_init__(self):
        if not self.rate > 0:
            raise SpnError(f"transition {self.id}: firing rate must be positive")

    def to_dict(self) -> dict:
        payload = self.payload
        if isinstance(payload, float) and np.isinf(payload):
            payload = "VERTICAL"
        elif isinstance(payload, tuple):
            payload = list(payload)
        return {"id": self.id, "kind": self.kind, "rate": self.rate, "payload": payload,
                "tokens": [list(t) for t in self.tokens], "verb": self.verb}


@dataclass
class SpnGraph:
    places: dict[str, SpnPlace] = field(default_factory=dict)
    transitions: dict[str, SpnTransition] = field(default_factory=dict)
    arcs: list[tuple[str, str]] = field(default_factory=list)
    initial_marking: list[str] = field(default_factory=list)
    # curve id -> ordered place ids of its segment chain
    chains: dict[int, list[str]] = field(default_factory=dict)
    canvas: tuple[int, int] = (0, 0)  # (width, height) of the plot region
    widths: dict[int, int] = field(default_factory=dict)

    def inputs(self, node: str) -> list[str]:
        return [a for a, b in self.arcs if b == node]

    def outputs(self, node: str) -> list[str]:
        return [b for a, b in self.arcs if a == node]

    def adjacency(self) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
        ins: dict[str, list[str]] = {}
        outs: dict[str, list[str]] = {}
        for a, b in self.arcs:
            outs.setdefault(a, []).append(b)
            ins.setdefault(b, []).append(a)
        return ins, outs

    def is_bipartite(self) -> bool:
        for a, b in self.arcs:
            if (a in self.places) == (b in self.places):
                return False
            if a not in self.places and a not in self.transitions:
                return False
            if b not in self.places and b not in self.transitions:
                return False
        return True

    def connection_path(self, curve_id: int) -> list[str]:
        """Alternating place/transition walk along a curve's connection transitions."""
        chain = self.chains.get(curve_id, [])
        if not chain:
            return []
        conn = sorted(t.id for t in self.transitions.values() if t.kind == "connection")
        ins_of, outs_of = self.adjacency()
        nxt = {}
        for tid in conn:
            ins, outs = ins_of.get(tid, []), outs_of.get(tid, [])
            if len(ins) == 1 and len(outs) == 1 and ins[0] in chain:
                nxt[ins[0]] = (tid, outs[0])
        path = [chain[0]]
        seen = {chain[0]}
        while path[-1] in nxt:
            tid, p = nxt[path[-1]]
            if p in seen:
                break
            path += [tid, p]
            seen.add(p)
        return path

    def to_dict(self) -> dict:
        return {
            "places": [p.to_dict() for p in self.places.values()],
            "transitions": [t.to_dict() for t in self.transitions.values()],
            "arcs": [list(a) for a in self.arcs],
            "initial_marking": list(self.initial_marking),
            "chains": {str(c): list(v) for c, v in sorted(self.chains.items())},
            "canvas": list(self.canvas),
            "widths": {str(c): w for c, w in sorted(self.widths.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> SpnGraph:
        try:
            g = cls()
            for p in d["places"]:
                g.places[p["id"]] = SpnPlace(p["id"], p.get("segment"), tuple(p["color"]), int(p.get("curve", 0)),
                                             [tuple(t) for t in p.get("tokens", [])], p.get("label", ""))
            for t in d["transitions"]:
                payload = t.get("payload")
                if payload == "VERTICAL":
                    payload = float("inf")
                elif isinstance(payload, list):
                    payload = tuple(payload)
                g.transitions[t["id"]] = SpnTransition(t["id"], t["kind"], float(t.get("rate", 1.0)), payload,
                                                       [tuple(x) for x in t.get("tokens", [])], t.get("verb", ""))
            g.arcs = [tuple(a) for a in d["arcs"]]
            g.initial_marking = list(d.get("initial_marking", []))
            g.chains = {int(c): list(v) for c, v in d.get("chains", {}).items()}
            g.canvas = tuple(d.get("canvas", (0, 0)))
            g.widths = {int(c): int(w) for c, w in d.get("widths", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise SpnError(f"malformed net: {exc}") from exc
        return g

    @classmethod
    def from_json(cls, text: str) -> SpnGraph:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpnError(f"malformed net: {exc}") from exc


def _place_id(sid: str) -> str:
    return f"P_{sid}"


def kernels_to_spn(sentences: list[NlSentence], segments: dict[int, list[LineSegment]],
                   colors: dict[int, RGB] | None = None, widths: dict[int, int] | None = None,
                   canvas: tuple[int, int] = (0, 0)) -> SpnGraph:
    """Build the net: a place per segment, a transition per kernel."""
    colors = colors or {}
    g = SpnGraph(canvas=tuple(canvas), widths=dict(widths or {}))
    index: dict[str, LineSegment] = {}
    for cid in sorted(segments):
        chain = []
        for s in segments[cid]:
            index[s.id] = s
            pid = _place_id(s.id)
            g.places[pid] = SpnPlace(pid, s.id, tuple(colors.get(cid, (0, 0, 0))), cid)
            chain.append(pid)
        if chain:
            segs = segments[cid]
            g.places[chain[0]].tokens.append(tuple(segs[0].start))
            g.places[chain[-1]].tokens.append(tuple(segs[-1].end))
            g.initial_marking.append(chain[0])
        g.chains[cid] = chain

    def need(sid: str) -> str:
        if sid not in index:
            raise SpnError(f"kernel references unknown segment {sid}")
        return _place_id(sid)

    for sent in sentences:
        src = sent.source
        if isinstance(src, GrowthAnnotation):
            agent = need(src.agent)
            cls_place = f"G_{sent.id}"
            g.places[cls_place] = SpnPlace(cls_place, None, g.places[agent].color, src.curve_id, label=src.cls)
            for k, kern in enumerate(sent.kernels):
                tid = f"T_{sent.id}_{k}"
                g.transitions[tid] = SpnTransition(tid, "growth", payload=kern.patient, verb=kern.verb)
                if k == 0:
                    g.arcs += [(agent, tid), (tid, cls_place)]
                else:
                    out = f"{cls_place}_{k}"
                    g.places[out] = SpnPlace(out, None, g.places[agent].color, src.curve_id, label=kern.patient)
                    g.arcs += [(cls_place, tid), (tid, out)]
            continue
        for kern in sent.kernels:
            kind = _VERB_KIND[kern.verb]
            a, b = need(kern.agent), need(kern.patient)
            tid = f"T_{sent.id}"
            t = SpnTransition(tid, kind, payload=src.value if isinstance(src, Relation) else None, verb=kern.verb)
            if kind == "connection":
                t.tokens.append(tuple(index[kern.patient].start))
            elif kind == "intersection":
                t.tokens.append((float(src.value[0]), float(src.value[1])))
            g.transitions[tid] = t
            g.arcs += [(a, tid), (tid, b)]
    return g


# -- replay ------------------------------------------------------------------------

@dataclass
class Replay:
    sequence: list[str]
    per_curve: dict[int, list[str]]
    visited: list[str]


def _transition_key(g: SpnGraph, tid: str, ins: list[str]):
    t = g.transitions[tid]
    anchor = parse_segment_id(g.places[ins[0]].segment) if ins and g.places[ins[0]].segment else (0, 0)
    return (_KIND_RANK[t.kind], anchor, tid)


def replay(g: SpnGraph) -> Replay:
    """Deterministic firing with visited-place semantics.

    Initially each curve's first place is marked.  A transition is enabled once
    its input places are marked; cross-curve transitions additionally wait for
    their patient place.  Among enabled transitions the lowest (kind, segment)
    key fires first.  Connection transitions left unfired, or segment places
    never reached, mean the net is deadlocked.
    """
    visited = set(g.initial_marking)
    ins_of, outs_of = g.adjacency()
    order = {tid: _transition_key(g, tid, ins_of.get(tid, [])) for tid in g.transitions}
    pending = set(g.transitions)
    seq: list[str] = []
    per_curve: dict[int, list[str]] = {c: [] for c in g.chains}
    while True:
        enabled = []
        for tid in pending:
            t = g.transitions[tid]
            ins = ins_of.get(tid, [])
            if not ins:
                continue
            need = set(ins)
            if t.kind in ("intersection", "parallelism"):
                need |= set(outs_of.get(tid, []))
            if need <= visited:
                enabled.append(tid)
        if not enabled:
            break
        tid = min(enabled, key=order.__getitem__)
        pending.discard(tid)
        seq.append(tid)
        visited |= set(outs_of.get(tid, []))
        if g.transitions[tid].kind == "connection":
            cid = g.places[ins_of[tid][0]].curve_id
            per_curve.setdefault(cid, []).append(tid)
    stuck = sorted(t for t in pending if g.transitions[t].kind in ("connection", "intersection"))
    unreached = sorted(p for c in g.chains.values() for p in c if p not in visited)
    if stuck or unreached:
        raise DeadlockError("net deadlocked", sorted(visited), stuck + unreached)
    return Replay(seq, per_curve, sorted(visited))


def curve_polylines(g: SpnGraph, r: Replay | None = None) -> dict[int, list[Point]]:
    """Vertex list per curve: start token, connection tokens in firing order, end token."""
    r = r or replay(g)
    out = {}
    for cid, chain in g.chains.items():
        if not chain:
            continue
        first, last = g.places[chain[0]], g.places[chain[-1]]
        if not first.tokens or not last.tokens:
            raise SpnError(f"curve {cid}: missing start or end token")
        pts = [first.tokens[0]]
        for tid in r.per_curve.get(cid, []):
            t = g.transitions[tid]
            if not t.tokens:
                raise SpnError(f"transition {tid}: missing coordinate token")
            pts.append(t.tokens[0])
        if len(r.per_curve.get(cid, [])) != len(chain) - 1:
            raise SpnError(f"curve {cid}: {len(chain) - 1} connections expected")
        pts.append(last.tokens[-1])
        out[cid] = pts
    return out


def reconstruct_curves(g: SpnGraph, canvas: tuple[int, int] | None = None, widths: dict[int, int] | None = None) -> np.ndarray:
    """Replay the net and draw each curve's strokes on a white (width, height) canvas."""
    w, h = canvas or g.canvas
    if w <= 0 or h <= 0:
        raise SpnError(f"invalid canvas {w}x{h}")
    widths = widths if widths is not None else g.widths
    img = Image.new("RGB", (int(w), int(h)), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    if g.chains:
        for cid, pts in sorted(curve_polylines(g).items()):
            color = g.places[g.chains[cid][0]].color
            width = max(1, int(widths.get(cid, 1)))
            xy = [(float(x), float(y)) for x, y in pts]
            if width == 1:
                draw.line(xy, fill=color, width=1)
            else:
                draw.line(xy, fill=color, width=width, joint="curve")
    return np.asarray(img)


# -- interchange -----------------------------------------------------------------------

def to_pnml(g: SpnGraph) -> str:
    """Place/transition net in PNML; colours and tokens go into tool-specific elements."""
    pnml = ET.Element("pnml", xmlns="http://www.pnml.org/version-2009/grammar/pnml")
    net = ET.SubElement(pnml, "net", id="curvespn", type="http://www.pnml.org/version-2009/grammar/ptnet")
    page = ET.SubElement(net, "page", id="page0")
    marked = set(g.initial_marking)
    for p in g.places.values():
        el = ET.SubElement(page, "place", id=p.id)
        ET.SubElement(ET.SubElement(el, "name"), "text").text = p.label or p.segment or p.id
        if p.id in marked:
            ET.SubElement(ET.SubElement(el, "initialMarking"), "text").text = "1"
        tool = ET.SubElement(el, "toolspecific", tool="curvespn", version="1")
        ET.SubElement(tool, "color").text = "#%02x%02x%02x" % tuple(p.color)
        for x, y in p.tokens:
            ET.SubElement(tool, "token", x=repr(float(x)), y=repr(float(y)))
    for t in g.transitions.values():
        el = ET.SubElement(page, "transition", id=t.id)
        ET.SubElement(ET.SubElement(el, "name"), "text").text = t.verb or t.kind
        tool = ET.SubElement(el, "toolspecific", tool="curvespn", version="1")
        ET.SubElement(tool, "kind").text = t.kind
        ET.SubElement(tool, "rate").text = repr(t.rate)
        for x, y in t.tokens:
            ET.SubElement(tool, "token", x=repr(float(x)), y=repr(float(y)))
    for k, (a, b) in enumerate(g.arcs):
        ET.SubElement(page, "arc", id=f"A{k}", source=a, target=b)
    ET.indent(pnml)
    return ET.tostring(pnml, encoding="unicode", xml_declaration=True)
