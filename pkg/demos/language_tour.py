"""The description language on its own: build, print, parse, and break it."""

from __future__ import annotations

from curvespn.lang import build_ast, check, parse, serialize, validate
from curvespn.segments import LineSegment, compute_connection_angles, cross_relations


def chain(points, curve):
    return [LineSegment(curve, i, points[i], points[i + 1]) for i in range(len(points) - 1)]


curves = {
    1: chain([(0, 0), (20, 30), (40, 35), (60, 80)], 1),
    2: chain([(0, 70), (30, 40), (60, 10)], 2),
}
rels = [r for c in curves for r in compute_connection_angles(curves[c])]
rels += cross_relations(curves, {1: 2, 2: 2})

text = serialize(build_ast(curves, rels))
print("serialized:\n ", text)

ast = parse(text)
print("\nparsed back to the same tree:", ast == build_ast(curves, rels))
print("validation diagnostics:", validate(ast) or "none")

broken = [
    "[(SL11 ~ SL13)]",                      # skips a segment
    "[(SL11 ~ SL12)",                       # missing bracket
    "[(SL11)] @ [(SL21)] @ [(SL11 = SL99)]",  # unknown segment
    "[(SL1$)]",                             # not a token
    "[(SL11)] @ [(SL21)] @ [(SL11 = SL21 : VAL_INT(1, 2))]",  # payload of the wrong kind
]
print()
for s in broken:
    print(f"{s!r:60} -> {check(s)[0]}")
