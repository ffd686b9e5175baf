"""Parser and elaborator for the .dms system-description format.

A system file declares the independent variables, the unknowns, named
constants and function parameters, optional nonzero assumptions, rewrite
relations between funcparam derivatives, and one labelled equation per
line:

    vars x1, x2;
    unknowns y;
    P: d222(y) + x2*y = u;
    Q: d2(y) + d1(y) = v;

Derivatives are written d<digits>(...) with the digit string read as a
multi-index of repeated 1-based indices; d(1,10,2) is accepted when the
number of variables exceeds nine.  An equation must be linear over the
coefficient field in the unknowns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field

import sympy as sp

from .field import DiffField, DiffmodError, RatFunc
from .ops import OpMatrix, ScalarOp, TermOrder, mono_str


class ParseError(DiffmodError):
    def __init__(self, message, span=(0, 0), expected=()):
        self.span = span
        self.expected = tuple(expected)
        where = f" at {span[0]}..{span[1]}" if span != (0, 0) else ""
        hint = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(message + where + hint)


class ElaborationError(DiffmodError):
    pass


# ---------------------------------------------------------------------------
# tokens

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<deriv>d(?:\d+|\(\s*\d+(?:\s*,\s*\d+)*\s*\))(?=\s*\())
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|!=|[-+*/^();:,=])
""", re.VERBOSE)

_KEYWORDS = {"system", "vars", "unknowns", "params", "funcparams",
             "assume", "order", "split", "rel"}


@dataclass
class Token:
    kind: str
    text: str
    pos: int

    @property
    def span(self):
        return (self.pos, self.pos + len(self.text))


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             span=(pos, pos + 1))
        pos = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        tokens.append(Token(kind, m.group(), m.start()))
    tokens.append(Token("eof", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# AST

@dataclass
class Equation:
    label: str
    expr: object            # expression tree
    member: str
    span: tuple


@dataclass
class SystemDecl:
    name: str = ""
    vars: list = dc_field(default_factory=list)
    unknowns: list = dc_field(default_factory=list)
    params: list = dc_field(default_factory=list)
    func_params: list = dc_field(default_factory=list)
    assumptions: list = dc_field(default_factory=list)   # expression trees
    relations: list = dc_field(default_factory=list)     # (indices, funcparam, expr)
    equations: list = dc_field(default_factory=list)
    order_kind: str = None
    var_seq: list = None
    splits: list = dc_field(default_factory=list)


# expression nodes: ("num", str) ("name", str) ("bin", op, a, b)
# ("neg", a) ("pow", a, int) ("deriv", indices, a)

class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        t = self.tokens[self.k]
        self.k += 1
        return t

    def expect(self, kind, text=None):
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            raise ParseError(f"unexpected {t.text!r}", span=t.span,
                             expected=[text or kind])
        return self.next()

    # -- statements -----------------------------------------------------

    def parse(self):
        decl = SystemDecl()
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "ident" and t.text in _KEYWORDS:
                self._statement(decl)
            elif t.kind == "ident":
                self._equation(decl)
            else:
                raise ParseError(f"unexpected {t.text!r}", span=t.span,
                                 expected=sorted(_KEYWORDS) + ["label"])
        if not decl.vars:
            raise ParseError("no variables declared", expected=["vars"])
        if not decl.unknowns:
            raise ParseError("no unknowns declared", expected=["unknowns"])
        return decl

    def _ident_list(self):
        names = [self.expect("ident").text]
        while self.peek().text == ",":
            self.next()
            names.append(self.expect("ident").text)
        return names

    def _statement(self, decl):
        kw = self.next().text
        if kw == "system":
            decl.name = self.expect("ident").text
        elif kw == "vars":
            decl.vars.extend(self._ident_list())
        elif kw == "unknowns":
            decl.unknowns.extend(self._ident_list())
        elif kw == "params":
            decl.params.extend(self._ident_list())
        elif kw == "funcparams":
            decl.func_params.extend(self._ident_list())
        elif kw == "assume":
            while True:
                expr = self._expr()
                if self.peek().text == "!=":
                    self.next()
                    z = self.expect("num")
                    if z.text != "0":
                        raise ParseError("assumptions read 'expr != 0'",
                                         span=z.span, expected=["0"])
                decl.assumptions.append(expr)
                if self.peek().text != ",":
                    break
                self.next()
        elif kw == "order":
            decl.order_kind = self.expect("ident").text
            if self.peek().kind == "ident" and self.peek().text == "vars":
                self.next()
                self.expect("op", "(")
                decl.var_seq = self._ident_list()
                self.expect("op", ")")
        elif kw == "split":
            decl.splits.extend(self._ident_list())
        elif kw == "rel":
            t = self.expect("deriv")
            indices = _deriv_indices(t.text)
            self.expect("op", "(")
            target = self.expect("ident").text
            self.expect("op", ")")
            self.expect("op", "=")
            rhs = self._expr()
            decl.relations.append((indices, target, rhs))
        self.expect("op", ";")

    def _equation(self, decl):
        label = self.expect("ident")
        self.expect("op", ":")
        expr = self._expr()
        self.expect("op", "=")
        t = self.peek()
        if t.kind == "num" and t.text == "0":
            self.next()
            member = f"rhs_{label.text}"
        else:
            member = self.expect("ident").text
        self.expect("op", ";")
        decl.equations.append(Equation(label.text, expr, member,
                                       label.span))

    # -- expressions ------------------------------------------------------

    def _expr(self):
        node = self._term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self._term()
            node = ("bin", op, node, rhs)
        return node

    def _term(self):
        node = self._factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self._factor()
            node = ("bin", op, node, rhs)
        return node

    def _factor(self):
        t = self.peek()
        if t.text == "-":
            self.next()
            return ("neg", self._factor())
        if t.text == "+":
            self.next()
            return self._factor()
        return self._power()

    def _power(self):
        base = self._atom()
        if self.peek().text in ("^", "**"):
            self.next()
            sign = 1
            if self.peek().text == "-":
                self.next()
                sign = -1
            e = self.expect("num")
            if "/" in e.text:
                raise ParseError("integer exponent required", span=e.span)
            return ("pow", base, sign * int(e.text))
        return base

    def _atom(self):
        t = self.peek()
        if t.kind == "num":
            self.next()
            return ("num", t.text)
        if t.kind == "deriv":
            self.next()
            self.expect("op", "(")
            inner = self._expr()
            self.expect("op", ")")
            return ("deriv", _deriv_indices(t.text), inner)
        if t.kind == "ident":
            self.next()
            return ("name", t.text, t.span)
        if t.text == "(":
            self.next()
            inner = self._expr()
            self.expect("op", ")")
            return inner
        raise ParseError(f"unexpected {t.text!r}", span=t.span,
                         expected=["number", "name", "derivative", "("])


def _deriv_indices(text):
    body = text[1:]
    if body.startswith("("):
        return tuple(int(x) for x in body[1:-1].replace(" ", "").split(","))
    return tuple(int(ch) for ch in body)


def parse_system(text):
    """Parse .dms source text into a SystemDecl."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# elaboration

class _Lin:
    """Value of an expression: coeff + sum_k op_k(unknown_k)."""

    def __init__(self, field, unknowns, coeff=None, ops=None):
        self.field = field
        self.unknowns = unknowns
        self.coeff = coeff if coeff is not None else field.zero
        self.ops = ops or {}

    def is_pure_coeff(self):
        return not self.ops

    def _zip(self, other, fn):
        ops = dict(self.ops)
        for k, v in other.ops.items():
            ops[k] = fn(ops.get(k, ScalarOp.zero(self.field)), v)
            if ops[k].is_zero:
                del ops[k]
        return ops

    def add(self, other):
        return _Lin(self.field, self.unknowns, self.coeff + other.coeff,
                    self._zip(other, lambda a, b: a + b))

    def neg(self):
        return _Lin(self.field, self.unknowns, -self.coeff,
                    {k: -v for k, v in self.ops.items()})

    def mul(self, other, span):
        if not self.is_pure_coeff() and not other.is_pure_coeff():
            raise ElaborationError(
                f"nonlinear term: product of unknowns near offset {span[0]}")
        if other.is_pure_coeff():
            self, other = other, self
        c = self.coeff
        ops = {k: v.scale(c) for k, v in other.ops.items()}
        ops = {k: v for k, v in ops.items() if not v.is_zero}
        return _Lin(self.field, self.unknowns, c * other.coeff, ops)

    def div(self, other, span):
        if not other.is_pure_coeff():
            raise ElaborationError(
                f"division by an unknown near offset {span[0]}")
        inv = self.field.one / other.coeff
        return _Lin(self.field, self.unknowns, self.coeff * inv,
                    {k: v.scale(inv) for k, v in self.ops.items()})

    def deriv(self, indices):
        mono = ScalarOp.d(self.field, *indices)
        c = self.coeff
        for i in indices:
            c = c.derive(i)
        return _Lin(self.field, self.unknowns, c,
                    {k: mono * v for k, v in self.ops.items()})


class UnknownIdentifier(ElaborationError):
    pass


class IndexOutOfRange(ElaborationError):
    pass


def _eval(node, field, decl, names):
    kind = node[0]
    if kind == "num":
        return _Lin(field, decl.unknowns, coeff=field.ratfunc(sp.Rational(node[1])))
    if kind == "name":
        name, span = node[1], node[2]
        if name in decl.unknowns:
            k = decl.unknowns.index(name)
            return _Lin(field, decl.unknowns,
                        ops={k: ScalarOp.constant(field, 1)})
        if name in names:
            return _Lin(field, decl.unknowns, coeff=field.ratfunc(names[name]))
        raise UnknownIdentifier(f"unknown identifier {name!r} at {span[0]}")
    if kind == "neg":
        return _eval(node[1], field, decl, names).neg()
    if kind == "pow":
        base = _eval(node[1], field, decl, names)
        if not base.is_pure_coeff():
            raise ElaborationError("cannot raise an unknown to a power")
        e = node[2]
        if e >= 0:
            c = field.one
            for _ in range(e):
                c = c * base.coeff
        else:
            c = field.one
            for _ in range(-e):
                c = c / base.coeff
        return _Lin(field, decl.unknowns, coeff=c)
    if kind == "bin":
        op, a, b = node[1], node[2], node[3]
        va = _eval(a, field, decl, names)
        vb = _eval(b, field, decl, names)
        if op == "+":
            return va.add(vb)
        if op == "-":
            return va.add(vb.neg())
        if op == "*":
            return va.mul(vb, (0, 0))
        if op == "/":
            return va.div(vb, (0, 0))
    if kind == "deriv":
        indices = node[1]
        for i in indices:
            if not 1 <= i <= field.n:
                raise IndexOutOfRange(
                    f"derivative index {i} exceeds {field.n} variables")
        return _eval(node[2], field, decl, names).deriv(indices)
    raise ElaborationError(f"cannot elaborate node {kind!r}")


def elaborate(decl):
    """Build the differential field and the operator matrix of a SystemDecl.

    Returns (field, matrix, meta) with meta carrying the assumptions,
    split parameters and term order named in the source.
    """
    field = DiffField(var_names=decl.vars, params=decl.params,
                      func_params=decl.func_params)
    names = {}
    for group in (decl.vars, decl.params, decl.func_params):
        for name in group:
            names[name] = field.symbol(name)
    for indices, target, rhs in decl.relations:
        mu = [0] * field.n
        for i in indices:
            if not 1 <= i <= field.n:
                raise IndexOutOfRange(f"relation index {i} out of range")
            mu[i - 1] += 1
        value = _eval(rhs, field, decl, names)
        if not value.is_pure_coeff():
            raise ElaborationError("relation right side must be coefficient-only")
        field.add_rule(target, tuple(mu), value.coeff)
    assumptions = []
    for node in decl.assumptions:
        value = _eval(node, field, decl, names)
        if not value.is_pure_coeff():
            raise ElaborationError("assumptions must be coefficient expressions")
        assumptions.append(value.coeff)
    members = []
    rows = []
    for eq in decl.equations:
        value = _eval(eq.expr, field, decl, names)
        if not value.coeff.is_zero:
            raise ElaborationError(
                f"equation {eq.label} has a non-operator part "
                f"({value.coeff}); systems must be linear homogeneous "
                "in the unknowns")
        if eq.member in members:
            raise ElaborationError(f"duplicate second member {eq.member}")
        members.append(eq.member)
        rows.append([value.ops.get(k, ScalarOp.zero(field))
                     for k in range(len(decl.unknowns))])
    matrix = OpMatrix.from_rows(field, rows, len(decl.unknowns),
                                row_labels=members,
                                col_labels=list(decl.unknowns))
    eq_labels = [eq.label for eq in decl.equations]
    var_seq = None
    if decl.var_seq is not None:
        var_seq = tuple(decl.vars.index(v) + 1 for v in decl.var_seq)
    order = TermOrder(kind=decl.order_kind or "degrevlex", var_seq=var_seq)
    meta = {
        "assumptions": assumptions,
        "splits": list(decl.splits),
        "order": order,
        "equation_labels": eq_labels,
        "name": decl.name,
    }
    return field, matrix, meta


def elaborate_source(text):
    return elaborate(parse_system(text))


# ---------------------------------------------------------------------------
# rendering

def render_system(matrix, decl_name="", params=(), func_params=(),
                  assumptions=(), relations=(), splits=()):
    """Render an operator matrix back to .dms source.

    parse(render(A)) elaborates to a matrix equal to A.
    """
    field = matrix.field
    lines = []
    if decl_name:
        lines.append(f"system {decl_name};")
    lines.append("vars " + ", ".join(field.var_names) + ";")
    lines.append("unknowns " + ", ".join(matrix.col_labels) + ";")
    if field.param_names:
        lines.append("params " + ", ".join(field.param_names) + ";")
    if field.func_param_names:
        lines.append("funcparams " + ", ".join(field.func_param_names) + ";")
    for a in assumptions:
        lines.append(f"assume {_coeff_text(field, a)} != 0;")
    for (fname, base), rhs in getattr(field, "rules", {}).items():
        lines.append(
            f"rel {mono_str(base)}({fname}) = "
            f"{_coeff_text(field, RatFunc(field, rhs))};")
    if splits:
        lines.append("split " + ", ".join(splits) + ";")
    for i in range(matrix.rows):
        body = _row_text(matrix, i)
        lines.append(f"E{i+1}: {body} = {matrix.row_labels[i]};")
    return "\n".join(lines) + "\n"


def _coeff_text(field, c):
    expr = c.expr if isinstance(c, RatFunc) else sp.sympify(c)
    return field.coeff_str(expr)


def _row_text(matrix, i):
    field = matrix.field
    bits = []
    for j in range(matrix.cols):
        entry = matrix.entries[i][j]
        for mu in sorted(entry.terms, key=lambda m: sum(m)):
            c = entry.terms[mu]
            d = mono_str(mu)
            head = (f"{d}({matrix.col_labels[j]})" if d
                    else matrix.col_labels[j])
            text = _coeff_text(field, c)
            if text == "1":
                term = head
            elif text == "-1":
                term = f"-{head}"
            else:
                if any(ch in text for ch in "+- "):
                    text = f"({text})"
                term = f"{text}*{head}"
            bits.append(term)
    if not bits:
        return "0 * " + matrix.col_labels[0] if matrix.cols else "0"
    out = bits[0]
    for b in bits[1:]:
        out += f" - {b[1:]}" if b.startswith("-") else f" + {b}"
    return out
