"""The Kyrtos chart language: tokenizer, recursive-descent parser, validator
and canonical serializer.

Concrete syntax::

    gr      := clause ('@' clause)*
    clause  := '[' [group ('@' group)*] ']'
    group   := term ('!' term)*
    term    := '(' IDENT [op IDENT] [':' payload] ')'
    op      := '~' | '=' | '><'
    payload := VAL_CON '(' num ')' | VAL_PAR '(' num | VERTICAL ')'
             | VAL_INT '(' num ',' num ')'

Segment identifiers are ``SL<curve><segment>`` with 1-based indices, or
``SL<curve>_<segment>`` when either index has more than one digit.  Every
clause made of ``~`` terms (or a lone segment) describes one curve; the
trailing clause of ``=`` and ``><`` terms, possibly empty, holds the
cross-curve relations and is present whenever the chart has two or more
curves.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import CurveSpnError
from .segments import connection_angle

OPS = {"CONNECT": "~", "PARALLEL": "=", "INTERSECT": "><"}
PAYLOAD_FOR = {"~": "VAL_CON", "=": "VAL_PAR", "><": "VAL_INT"}
RELATION_OPS = {"=", "><"}


class KyrtosError(CurveSpnError, ValueError):
    def __init__(self, message: str, position: int | None = None, expected: tuple[str, ...] = ()):
        super().__init__(message)
        self.position = position
        self.expected = expected

    def __str__(self):
        msg = self.args[0]
        if self.position is not None:
            msg = f"{msg} at position {self.position}"
        if self.expected:
            msg += f" (expected {' | '.join(self.expected)})"
        return msg


class KyrtosLexError(KyrtosError):
    pass


class KyrtosSyntaxError(KyrtosError):
    pass


class KyrtosSemanticError(KyrtosError):
    pass


# -- tokens ----------------------------------------------------------------------

@dataclass(frozen=True)
class KyrtosToken:
    kind: str
    lexeme: str
    position: int


_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<INTERSECT>><)
  | (?P<LBRACKET>\[) | (?P<RBRACKET>\]) | (?P<LPAREN>\() | (?P<RPAREN>\))
  | (?P<AND>@) | (?P<OR>!) | (?P<CONNECT>~) | (?P<PARALLEL>=)
  | (?P<COLON>:) | (?P<COMMA>,)
  | (?P<VALTAG>VAL_(?:CON|PAR|INT)\b)
  | (?P<IDENT>(?:SL\d+(?:_\d+)?|C\d+)(?![\w.]))
  | (?P<VALUE>VERTICAL\b|[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[KyrtosToken]:
    """Longest-match lexing; whitespace is insignificant."""
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise KyrtosLexError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "WS":
            out.append(KyrtosToken(m.lastgroup, m.group(), pos))
        pos = m.end()
    return out


# -- AST -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Payload:
    tag: str
    args: tuple

    def render(self) -> str:
        parts = []
        for a in self.args:
            if isinstance(a, float) and math.isinf(a):
                parts.append("VERTICAL")
            else:
                parts.append(repr(a))
        return f"{self.tag}({', '.join(parts)})"


@dataclass(frozen=True)
class Term:
    left: str
    op: str | None = None
    right: str | None = None
    payload: Payload | None = None

    def render(self) -> str:
        body = self.left if self.op is None else f"{self.left} {self.op} {self.right}"
        if self.payload is not None:
            body += f" : {self.payload.render()}"
        return f"({body})"


# a "!" group: mutually exclusive alternatives; plain terms are 1-tuples
Group = tuple[Term, ...]


@dataclass(frozen=True)
class CurveClause:
    curve_id: int
    groups: tuple[Group, ...]


@dataclass(frozen=True)
class KyrtosAst:
    curves: tuple[CurveClause, ...]
    relations: tuple[Group, ...] | None = None  # None: no relation clause

    def segments(self) -> set[str]:
        out = set()
        for c in self.curves:
            for g in c.groups:
                for t in g:
                    out.add(t.left)
                    if t.right is not None:
                        out.add(t.right)
        return out


def segment_ident(curve_id: int, seg_index: int) -> str:
    """Identifier for a 0-based segment index, e.g. (1, 0) -> "SL11"."""
    c, s = curve_id, seg_index + 1
    if c < 10 and s < 10:
        return f"SL{c}{s}"
    return f"SL{c}_{s}"


def ident_parts(ident: str) -> tuple[int, int]:
    """Inverse of :func:`segment_ident`: (curve, 0-based segment)."""
    body = ident[2:] if ident.startswith("SL") else None
    if not body:
        raise KyrtosSyntaxError(f"malformed segment identifier {ident!r}")
    if "_" in body:
        c, s = body.split("_")
    elif len(body) == 2:
        c, s = body
    else:
        raise KyrtosSyntaxError(f"ambiguous segment identifier {ident!r}")
    c, s = int(c), int(s)
    if c < 1 or s < 1 or segment_ident(c, s - 1) != ident:
        raise KyrtosSyntaxError(f"malformed segment identifier {ident!r}")
    return c, s - 1


def _ident_from_id(sid: str) -> str:
    c, s = sid[1:].split("S")
    return segment_ident(int(c), int(s))


# -- building and serializing ----------------------------------------------------------

def build_ast(curves: dict, relations=()) -> KyrtosAst:
    """Canonical AST from per-curve segment chains and cross-curve relations.

    ``curves`` maps curve id to its ordered segment list; ``relations`` are
    the parallelism and intersection relations (connections are derived
    from the chains and any connection relations passed in only supply the
    angles).
    """
    angles = {(r.a, r.b): r.value for r in relations if r.kind == "connection"}
    clauses = []
    for cid in sorted(curves):
        segs = curves[cid]
        if not segs:
            raise KyrtosSemanticError(f"curve {cid} has no segments")
        if len(segs) == 1:
            groups = ((Term(segment_ident(cid, segs[0].seg_index)),),)
        else:
            groups = []
            for a, b in zip(segs, segs[1:]):
                ang = angles.get((a.id, b.id), connection_angle(a, b))
                groups.append((Term(segment_ident(cid, a.seg_index), "~", segment_ident(cid, b.seg_index),
                                    Payload("VAL_CON", (float(ang),))),))
            groups = tuple(groups)
        clauses.append(CurveClause(cid, groups))
    known = {segment_ident(c, s.seg_index) for c in curves for s in curves[c]}
    q = []
    for r in relations:
        if r.kind == "connection":
            continue
        a, b = _ident_from_id(r.a), _ident_from_id(r.b)
        if a not in known or b not in known:
            raise KyrtosSemanticError(f"relation references undefined segment ({r.a}, {r.b})")
        if ident_parts(b) < ident_parts(a):
            a, b = b, a
        if r.kind == "parallelism":
            q.append(Term(a, "=", b, Payload("VAL_PAR", (float(r.value),))))
        elif r.kind == "intersection":
            x, y = r.value
            q.append(Term(a, "><", b, Payload("VAL_INT", (int(round(x)), int(round(y))))))
        else:
            raise KyrtosSemanticError(f"unknown relation kind {r.kind!r}")
    q.sort(key=lambda t: (ident_parts(t.left), ident_parts(t.right), t.op))
    rel = tuple((t,) for t in q) if (len(clauses) > 1 or q) else None
    return KyrtosAst(tuple(clauses), rel)


def _render_clause(groups) -> str:
    return "[" + " @ ".join(" ! ".join(t.render() for t in g) for g in groups) + "]"


def serialize(obj) -> str:
    """Canonical text for a :class:`KyrtosAst` or anything exposing ``kyrtos_ast()``."""
    ast = obj if isinstance(obj, KyrtosAst) else obj.kyrtos_ast()
    if not ast.curves:
        raise KyrtosSemanticError("description has no curves")
    parts = [_render_clause(c.groups) for c in ast.curves]
    if ast.relations is not None:
        parts.append(_render_clause(ast.relations))
    return " @ ".join(parts)


# -- parsing -----------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[KyrtosToken], end: int):
        self.toks = tokens
        self.i = 0
        self.end = end

    def peek(self) -> KyrtosToken | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def pos(self) -> int:
        t = self.peek()
        return self.end if t is None else t.position

    def expect(self, *kinds: str) -> KyrtosToken:
        t = self.peek()
        if t is None or t.kind not in kinds:
            found = "end of input" if t is None else repr(t.lexeme)
            raise KyrtosSyntaxError(f"unexpected {found}", self.pos(), kinds)
        self.i += 1
        return t

    def accept(self, kind: str) -> bool:
        t = self.peek()
        if t is not None and t.kind == kind:
            self.i += 1
            return True
        return False

    def gr(self) -> list[tuple[tuple[Group, ...], int]]:
        clauses = [self.clause()]
        while self.accept("AND"):
            clauses.append(self.clause())
        if self.peek() is not None:
            raise KyrtosSyntaxError(f"unexpected {self.peek().lexeme!r}", self.pos(), ("AND",))
        return clauses

    def clause(self):
        start = self.expect("LBRACKET").position
        groups = []
        if not self.accept("RBRACKET"):
            groups.append(self.group())
            while self.accept("AND"):
                groups.append(self.group())
            self.expect("RBRACKET", "AND")
        return tuple(groups), start

    def group(self) -> Group:
        terms = [self.term()]
        while self.accept("OR"):
            terms.append(self.term())
        return tuple(terms)

    def ident(self) -> str:
        t = self.expect("IDENT")
        if not t.lexeme.startswith("SL"):
            raise KyrtosSyntaxError(f"curve identifier {t.lexeme!r} cannot appear in a term", t.position, ("SL identifier",))
        try:
            ident_parts(t.lexeme)
        except KyrtosSyntaxError as exc:
            raise KyrtosSyntaxError(exc.args[0], t.position) from None
        return t.lexeme

    def term(self) -> Term:
        self.expect("LPAREN")
        left = self.ident()
        op = right = payload = None
        t = self.peek()
        if t is not None and t.kind in OPS:
            self.i += 1
            op = OPS[t.kind]
            right = self.ident()
        if self.accept("COLON"):
            payload = self.payload()
        expected = ["RPAREN"]
        if payload is None:
            expected.append("COLON")
            if op is None:
                expected += list(OPS)
        self.expect(*expected)
        return Term(left, op, right, payload)

    def number(self) -> float | int:
        t = self.expect("VALUE")
        if t.lexeme == "VERTICAL":
            return math.inf
        if re.fullmatch(r"[-+]?\d+", t.lexeme):
            return int(t.lexeme)
        return float(t.lexeme)

    def payload(self) -> Payload:
        tag = self.expect("VALTAG").lexeme
        self.expect("LPAREN")
        args = [self.number()]
        while self.accept("COMMA"):
            args.append(self.number())
        self.expect("RPAREN", "COMMA")
        if tag == "VAL_INT":
            if len(args) != 2 or any(not isinstance(a, int) for a in args):
                raise KyrtosSyntaxError("VAL_INT takes two integers", self.pos())
        else:
            if len(args) != 1:
                raise KyrtosSyntaxError(f"{tag} takes one value", self.pos())
            args = [float(args[0])]
            if tag == "VAL_CON" and math.isinf(args[0]):
                raise KyrtosSyntaxError("VAL_CON takes a finite angle", self.pos())
        return Payload(tag, tuple(args))


def _is_relation_clause(groups) -> bool:
    return not groups or any(t.op in RELATION_OPS for g in groups for t in g)


def _curve_clause(groups, pos: int) -> CurveClause:
    """Check a curve clause: one curve, connection terms chaining consecutive segments."""
    for g in groups:
        for t in g:
            if t.op in RELATION_OPS:
                raise KyrtosSemanticError("relation term inside a curve clause", pos)
    if len(groups) == 1 and len(groups[0]) == 1 and groups[0][0].op is None:
        c, s = ident_parts(groups[0][0].left)
        if s != 0:
            raise KyrtosSemanticError(f"single-segment curve C{c} must start at its first segment", pos)
        return CurveClause(c, groups)
    curve = None
    prev_end = None
    for g in groups:
        pairs = set()
        for t in g:
            if t.op is None:
                raise KyrtosSemanticError("lone segment term must be the only term of its curve", pos)
            (ca, sa), (cb, sb) = ident_parts(t.left), ident_parts(t.right)
            curve = ca if curve is None else curve
            if ca != curve or cb != curve:
                raise KyrtosSemanticError(f"connection {t.left} ~ {t.right} leaves curve C{curve}", pos)
            if sb != sa + 1:
                raise KyrtosSemanticError(f"connection {t.left} ~ {t.right} joins non-consecutive segments", pos)
            pairs.add(sa)
        if len(pairs) != 1:
            raise KyrtosSemanticError("alternatives of a connection must join the same segments", pos)
        sa = pairs.pop()
        if prev_end is not None and sa != prev_end:
            raise KyrtosSemanticError("connection chain is broken", pos)
        if prev_end is None and sa != 0:
            raise KyrtosSemanticError(f"curve C{curve} chain does not start at its first segment", pos)
        prev_end = sa + 1
    return CurveClause(curve, groups)


def parse(tokens: list[KyrtosToken] | str) -> KyrtosAst:
    """Recursive-descent parse of a GR expression into a :class:`KyrtosAst`."""
    if isinstance(tokens, str):
        end = len(tokens)
        tokens = tokenize(tokens)
    else:
        end = tokens[-1].position + len(tokens[-1].lexeme) if tokens else 0
    clauses = _Parser(tokens, end).gr()
    curves, relations = [], None
    for k, (groups, pos) in enumerate(clauses):
        if _is_relation_clause(groups):
            if k != len(clauses) - 1:
                raise KyrtosSemanticError("relation clause must be the last clause", pos)
            if any(t.op not in RELATION_OPS for g in groups for t in g):
                raise KyrtosSemanticError("relation clause mixes in connection terms", pos)
            relations = groups
        else:
            curves.append(_curve_clause(groups, pos))
    if not curves:
        raise KyrtosSemanticError("expression has no curve clause", 0)
    ids = [c.curve_id for c in curves]
    if len(set(ids)) != len(ids):
        raise KyrtosSemanticError("curve described by more than one clause", 0)
    ast = KyrtosAst(tuple(curves), relations)
    known = ast.segments()
    for g in relations or ():
        for t in g:
            for s in (t.left, t.right):
                if s not in known:
                    raise KyrtosSemanticError(f"undefined segment {s}", 0)
            if ident_parts(t.left)[0] == ident_parts(t.right)[0]:
                raise KyrtosSemanticError(f"relation {t.left} {t.op} {t.right} within one curve", 0)
    return ast


# -- validation --------------------------------------------------------------------------

def validate(ast: KyrtosAst) -> list[str]:
    """Diagnostics for an AST; an empty list means it is valid."""
    diags = []
    known = ast.segments()
    groups = [g for c in ast.curves for g in c.groups] + list(ast.relations or ())
    for g in groups:
        for t in g:
            if t.payload is None:
                continue
            want = PAYLOAD_FOR.get(t.op)
            if want != t.payload.tag:
                diags.append(f"payload kind mismatch: {t.payload.tag} on {t.render()}")
        if len(g) > 1:
            if len(set(g)) != len(g):
                diags.append(f"duplicate alternatives in {' ! '.join(t.render() for t in g)}")
            if len({frozenset((t.left, t.right)) for t in g}) != 1:
                diags.append(f"alternatives relate different segments in {' ! '.join(t.render() for t in g)}")
    for g in ast.relations or ():
        for t in g:
            for s in (t.left, t.right):
                if s not in known:
                    diags.append(f"undefined segment {s}")
    return diags


def check(text: str) -> list[str]:
    """Tokenize, parse and validate; every failure becomes a diagnostic."""
    try:
        return validate(parse(tokenize(text)))
    except KyrtosError as exc:
        return [str(exc)]


def write_kyr(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_kyr(path: str | Path) -> KyrtosAst:
    return parse(Path(path).read_text(encoding="utf-8").strip())
