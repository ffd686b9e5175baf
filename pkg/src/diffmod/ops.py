"""The noncommutative ring D = K[d1..dn] of linear differential operators.

Scalar operators store their coefficients to the LEFT of the derivative
monomials; products commute the d_i past coefficients with the Leibniz
rule d_i a = a d_i + da/dx_i.  Matrices over D represent operators
between free modules, with the formal adjoint and composition used by
every duality computation downstream.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import sympy as sp

from .field import RatFunc


# ---------------------------------------------------------------------------
# multi-indices

def mono_add(a, b):
    return tuple(x + y for x, y in zip(a, b))

def mono_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))

def mono_le(a, b):
    return all(x <= y for x, y in zip(a, b))

def mono_order(a):
    return sum(a)

def mono_binom(a, b):
    out = 1
    for x, y in zip(a, b):
        out *= math.comb(x, y)
    return out

def mono_str(mu, style="d"):
    """Render a derivative multi-index, e.g. (1,0,2) -> 'd133'."""
    if all(m == 0 for m in mu):
        return ""
    digits = []
    for i, m in enumerate(mu, start=1):
        digits.extend([i] * m)
    if len(mu) <= 9:
        return style + "".join(str(i) for i in digits)
    return style + "(" + ",".join(str(i) for i in digits) + ")"


def submonomials(mu):
    """All kappa <= mu componentwise."""
    ranges = [range(m + 1) for m in mu]
    return itertools.product(*ranges)


# ---------------------------------------------------------------------------
# term orders

@dataclass(frozen=True)
class TermOrder:
    """Monomial order on the d_i, extended to module terms.

    kind: degrevlex | deglex | lex.
    var_seq: variable indices (1-based) from lowest to highest priority;
      permuting it reproduces coordinate permutations such as x2<x3<x1.
    row_priority: column indices (0-based) from highest to lowest priority,
      breaking ties between equal monomials in different components.
    position_over_term: compare the component before the monomial.
    """

    kind: str = "degrevlex"
    var_seq: tuple = None
    row_priority: tuple = None
    position_over_term: bool = False

    def seq(self, n):
        if self.var_seq is None:
            return tuple(range(1, n + 1))
        if sorted(self.var_seq) != list(range(1, n + 1)):
            raise ValueError("var_seq must be a permutation of 1..n")
        return self.var_seq

    def mono_key(self, mu):
        seq = self.seq(len(mu))
        if self.kind == "degrevlex":
            return (sum(mu), tuple(-mu[v - 1] for v in seq))
        if self.kind == "deglex":
            return (sum(mu), tuple(mu[v - 1] for v in reversed(seq)))
        if self.kind == "lex":
            return tuple(mu[v - 1] for v in reversed(seq))
        raise ValueError(f"unknown term order kind {self.kind!r}")

    def col_key(self, col, ncols):
        if self.row_priority is not None:
            return -self.row_priority.index(col)
        return -col

    def module_key(self, term, ncols):
        col, mu = term
        if self.position_over_term:
            return (self.col_key(col, ncols), self.mono_key(mu))
        return (self.mono_key(mu), self.col_key(col, ncols))


DEFAULT_ORDER = TermOrder()


# ---------------------------------------------------------------------------
# scalar operators

class ScalarOp:
    """A single differential operator: finite sum coeff * d^mu."""

    __slots__ = ("field", "terms")

    def __init__(self, field, terms=None):
        self.field = field
        clean = {}
        for mu, c in (terms or {}).items():
            c = field.ratfunc(c)
            if not c.is_zero:
                clean[tuple(mu)] = c
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, field):
        return cls(field, {})

    @classmethod
    def constant(cls, field, c):
        return cls(field, {(0,) * field.n: field.ratfunc(c)})

    @classmethod
    def d(cls, field, *indices):
        """The monomial operator d_{i1} d_{i2} ... (1-based indices)."""
        mu = [0] * field.n
        for i in indices:
            if not 1 <= i <= field.n:
                raise IndexError(f"derivative index {i} out of range")
            mu[i - 1] += 1
        return cls(field, {tuple(mu): field.one})

    @classmethod
    def monomial(cls, field, mu, coeff=1):
        return cls(field, {tuple(mu): field.ratfunc(coeff)})

    # -- predicates -----------------------------------------------------

    @property
    def is_zero(self):
        return not self.terms

    @property
    def order(self):
        """Max |mu| over stored terms; -1 for the zero operator."""
        if not self.terms:
            return -1
        return max(mono_order(mu) for mu in self.terms)

    def coeff(self, mu):
        return self.terms.get(tuple(mu), self.field.zero)

    def lead(self, order=DEFAULT_ORDER):
        if not self.terms:
            return None
        return max(self.terms, key=order.mono_key)

    # -- ring operations -------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, ScalarOp):
            return other
        return ScalarOp.constant(self.field, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for mu, c in other.terms.items():
            acc = terms.get(mu)
            s = c if acc is None else acc + c
            if s.is_zero:
                terms.pop(mu, None)
            else:
                terms[mu] = s
        out = ScalarOp.__new__(ScalarOp)
        out.field, out.terms = self.field, terms
        return out

    def __neg__(self):
        out = ScalarOp.__new__(ScalarOp)
        out.field = self.field
        out.terms = {mu: -c for mu, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def scale(self, c):
        c = self.field.ratfunc(c)
        if c.is_zero:
            return ScalarOp.zero(self.field)
        out = ScalarOp.__new__(ScalarOp)
        out.field = self.field
        out.terms = {mu: v * c for mu, v in self.terms.items()}
        return out

    def _compose_term(self, mu, coeff, other):
        """coeff * d^mu applied (as composition) to every term of other."""
        field = self.field
        acc = {}
        # cache partial derivatives of each right coefficient along the way
        for nu, b in other.terms.items():
            derivs = {(0,) * field.n: b}
            for kappa in submonomials(mu):
                kappa = tuple(kappa)
                if kappa not in derivs:
                    # build up from a smaller cached derivative
                    base = kappa
                    path = []
                    while base not in derivs:
                        i = next(j for j, v in enumerate(base) if v > 0)
                        path.append(i)
                        base = tuple(v - (1 if j == i else 0)
                                     for j, v in enumerate(base))
                    val = derivs[base]
                    for i in reversed(path):
                        step = tuple(v + (1 if j == i else 0)
                                     for j, v in enumerate(base))
                        val = val.derive(i + 1)
                        derivs[step] = val
                        base = step
                db = derivs[kappa]
                if db.is_zero:
                    continue
                c = db * mono_binom(mu, kappa)
                key = mono_add(mono_sub(mu, kappa), nu)
                prev = acc.get(key)
                s = c if prev is None else prev + c
                if s.is_zero:
                    acc.pop(key, None)
                else:
                    acc[key] = s
        if not coeff.is_one:
            acc = {k: v * coeff for k, v in acc.items()}
        return acc

    def __mul__(self, other):
        """Composition self o other in the operator sense."""
        other = self._coerce(other)
        field = self.field
        total = {}
        for mu, a in self.terms.items():
            part = self._compose_term(mu, a, other)
            for k, v in part.items():
                prev = total.get(k)
                s = v if prev is None else prev + v
                if s.is_zero:
                    total.pop(k, None)
                else:
                    total[k] = s
        out = ScalarOp.__new__(ScalarOp)
        out.field, out.terms = field, total
        return out

    def __rmul__(self, other):
        return self._coerce(other) * self

    def adjoint(self):
        """Formal adjoint: sum (-1)^|mu| d^mu o (a_mu * ) in normal form."""
        field = self.field
        total = {}
        for mu, a in self.terms.items():
            sign = -1 if mono_order(mu) % 2 else 1
            part = ScalarOp.monomial(field, mu, sign) * ScalarOp.constant(field, a)
            for k, v in part.terms.items():
                prev = total.get(k)
                s = v if prev is None else prev + v
                if s.is_zero:
                    total.pop(k, None)
                else:
                    total[k] = s
        out = ScalarOp.__new__(ScalarOp)
        out.field, out.terms = field, total
        return out

    def apply(self, f):
        """Act on a field element, reading d_i as the derivation d/dx_i."""
        f = self.field.ratfunc(f)
        out = self.field.zero
        for mu, a in self.terms.items():
            g = f
            for i, k in enumerate(mu):
                for _ in range(k):
                    g = g.derive(i + 1)
            out = out + a * g
        return out

    # -- comparisons ------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, ScalarOp):
            try:
                other = self._coerce(other)
            except Exception:
                return NotImplemented
        return (self - other).is_zero

    def __hash__(self):
        return hash(frozenset(self.terms))

    def __repr__(self):
        return self.to_string("y")

    def to_string(self, name="y"):
        if not self.terms:
            return "0"
        order = DEFAULT_ORDER
        bits = []
        for mu in sorted(self.terms, key=order.mono_key, reverse=True):
            c = self.terms[mu]
            d = mono_str(mu)
            if name:
                head = f"{d}({name})" if d else name
            else:
                head = d if d else "1"
            bits.append(_coeff_term(c, head, first=not bits))
        return " ".join(bits)


def _coeff_term(c, head, first):
    expr = c.expr
    neg = expr.could_extract_minus_sign()
    if neg:
        expr = -expr
    s = c.field.coeff_str(expr)
    if s == "1":
        body = head
    else:
        if expr.is_Add or "/" in s or " " in s:
            s = f"({s})"
        body = f"{s}*{head}"
    if head == "1" and s != "1":
        body = s if not (expr.is_Add or " " in s) else f"({s})"
    if first:
        return f"-{body}" if neg else body
    return ("- " if neg else "+ ") + body


# ---------------------------------------------------------------------------
# operator matrices

class ShapeMismatch(ValueError):
    pass


class OpMatrix:
    """p x m matrix over D: an operator between free modules D^m -> D^p."""

    def __init__(self, field, entries, row_labels=None, col_labels=None,
                 cols=None):
        self.field = field
        self.entries = [[self._coerce_entry(field, e) for e in row] for row in entries]
        self.rows = len(self.entries)
        if self.entries:
            self.cols = len(self.entries[0])
        elif cols is not None:
            self.cols = cols
        else:
            self.cols = len(col_labels) if col_labels else 0
        if any(len(r) != self.cols for r in self.entries):
            raise ShapeMismatch("ragged rows")
        self.row_labels = list(row_labels) if row_labels else [
            f"eq{i+1}" for i in range(self.rows)]
        self.col_labels = list(col_labels) if col_labels else [
            f"y{j+1}" for j in range(self.cols)]

    @staticmethod
    def _coerce_entry(field, e):
        if isinstance(e, ScalarOp):
            return e
        return ScalarOp.constant(field, e)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, field, rows, cols, **kw):
        if rows == 0:
            return cls(field, [], cols=cols, **kw)
        return cls(field, [[ScalarOp.zero(field)] * cols for _ in range(rows)], **kw)

    @classmethod
    def identity(cls, field, size, **kw):
        ent = [[ScalarOp.constant(field, 1 if i == j else 0) for j in range(size)]
               for i in range(size)]
        return cls(field, ent, **kw)

    @classmethod
    def from_rows(cls, field, rows, cols, **kw):
        if not rows:
            return cls.zero(field, 0, cols, **kw)
        return cls(field, rows, **kw)

    # -- basic structure -----------------------------------------------------

    @property
    def order(self):
        orders = [e.order for row in self.entries for e in row]
        return max(orders, default=-1)

    @property
    def is_zero(self):
        return all(e.is_zero for row in self.entries for e in row)

    def row(self, i):
        return list(self.entries[i])

    def column(self, j):
        return [self.entries[i][j] for i in range(self.rows)]

    def stack(self, other):
        if other.cols != self.cols:
            raise ShapeMismatch("column mismatch in stack")
        return OpMatrix(self.field, self.entries + other.entries,
                        row_labels=self.row_labels + other.row_labels,
                        col_labels=self.col_labels)

    def __eq__(self, other):
        if not isinstance(other, OpMatrix):
            return NotImplemented
        if (self.rows, self.cols) != (other.rows, other.cols):
            return False
        return all((self.entries[i][j] - other.entries[i][j]).is_zero
                   for i in range(self.rows) for j in range(self.cols))

    def __hash__(self):
        return hash((self.rows, self.cols))

    # -- algebra ---------------------------------------------------------------

    def compose(self, other):
        """Matrix product self o other over D."""
        if self.cols != other.rows:
            raise ShapeMismatch(
                f"compose: {self.rows}x{self.cols} with {other.rows}x{other.cols}")
        ent = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = ScalarOp.zero(self.field)
                for k in range(self.cols):
                    a = self.entries[i][k]
                    b = other.entries[k][j]
                    if a.is_zero or b.is_zero:
                        continue
                    acc = acc + a * b
                row.append(acc)
            ent.append(row)
        return OpMatrix(self.field, ent, row_labels=self.row_labels,
                        col_labels=other.col_labels)

    def __matmul__(self, other):
        return self.compose(other)

    def adjoint(self):
        """Formal adjoint matrix: (ad A)[k][tau] = ad(A[tau][k])."""
        ent = [[self.entries[i][j].adjoint() for i in range(self.rows)]
               for j in range(self.cols)]
        return OpMatrix(self.field, ent, row_labels=self.col_labels,
                        col_labels=self.row_labels)

    def apply_to_section(self, section):
        """Act on a column of field elements, d_i read as d/dx_i."""
        if len(section) != self.cols:
            raise ShapeMismatch("section length mismatch")
        sec = [self.field.ratfunc(s) for s in section]
        out = []
        for i in range(self.rows):
            acc = self.field.zero
            for j in range(self.cols):
                acc = acc + self.entries[i][j].apply(sec[j])
            out.append(acc)
        return out

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeMismatch("add shape mismatch")
        ent = [[self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
               for i in range(self.rows)]
        return OpMatrix(self.field, ent, row_labels=self.row_labels,
                        col_labels=self.col_labels)

    def __neg__(self):
        return OpMatrix(self.field, [[-e for e in row] for row in self.entries],
                        row_labels=self.row_labels, col_labels=self.col_labels)

    def __sub__(self, other):
        return self + (-other)

    def specialize(self, values):
        """Substitute parameter values (case split) into every entry."""
        new_field, mapping = self.field.specialize(values)
        ent = []
        for row in self.entries:
            new_row = []
            for e in row:
                terms = {mu: RatFunc(new_field, c.expr.xreplace(mapping))
                         for mu, c in e.terms.items()}
                new_row.append(ScalarOp(new_field, terms))
            ent.append(new_row)
        return OpMatrix(new_field, ent, row_labels=self.row_labels,
                        col_labels=self.col_labels)

    # -- display ---------------------------------------------------------------

    def row_string(self, i, order=DEFAULT_ORDER):
        terms = []
        for j in range(self.cols):
            for mu in self.entries[i][j].terms:
                terms.append((j, mu))
        if not terms:
            return "0"
        terms.sort(key=lambda t: order.module_key(t, self.cols), reverse=True)
        bits = []
        for j, mu in terms:
            c = self.entries[i][j].terms[mu]
            d = mono_str(mu)
            name = self.col_labels[j]
            head = f"{d}({name})" if d else name
            bits.append(_coeff_term(c, head, first=not bits))
        return " ".join(bits)

    def __repr__(self):
        lines = [f"OpMatrix {self.rows}x{self.cols} over {self.field!r}"]
        for i in range(self.rows):
            lines.append(f"  {self.row_labels[i]}: {self.row_string(i)}")
        return "\n".join(lines)
