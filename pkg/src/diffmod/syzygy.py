"""Compatibility conditions, differential sequences, differential rank.

A compatibility condition (CC) of the inhomogeneous system A(y) = eta is
a row L with L o A = 0; the completion engine surfaces every such row in
the original eta coordinates, and a minimalization pass shrinks the
generating set so that unexpectedly low-order conditions are found.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .field import ResourceLimit, Session
from .janet import complete
from .ops import DEFAULT_ORDER, OpMatrix, mono_order


def _row_order(entries):
    return max((e.order for e in entries), default=-1)


def _minimalize(field, rows, ncols, order, session, labels):
    """Keep an inclusion-minimal generating subset of the given rows."""
    mats = [OpMatrix.from_rows(field, [list(r)], ncols, col_labels=labels)
            for r in rows]
    mats.sort(key=lambda m: (m.order,
                             order.module_key(_lead_of(m, order), ncols)))
    kept = None
    kept_rows = []
    for m in mats:
        if kept is not None and kept.contains(m.row(0)):
            continue
        kept_rows.append(m.row(0))
        kept = complete(OpMatrix.from_rows(field, [list(r) for r in kept_rows],
                                           ncols, col_labels=labels),
                        order=order, session=session, track_src=False)
    return kept_rows


def _lead_of(mat, order):
    best, best_key = None, None
    for j in range(mat.cols):
        for mu in mat.entries[0][j].terms:
            key = order.module_key((j, mu), mat.cols)
            if best_key is None or key > best_key:
                best, best_key = (j, mu), key
    return best if best is not None else (0, (0,) * mat.field.n)


def _monic_row(field, entries, ncols, order, session):
    mat = OpMatrix.from_rows(field, [list(entries)], ncols)
    j, mu = _lead_of(mat, order)
    c = mat.entries[0][j].terms[mu]
    session.check_pivot(c)
    inv = c.inverse()
    return [e.scale(inv) for e in entries]


def compatibility_conditions(A, order=None, session=None, **limits):
    """Generating CC of A, expressed in the original second members.

    The system is completed first (this is not optional: hidden
    integrability conditions produce the low-order CC), every syzygy met
    during completion is collected, and an inclusion-minimal generating
    subset is returned, rows monic and sorted by order.
    """
    order = order or DEFAULT_ORDER
    field = A.field
    session = session or Session(field)
    if A.cols == 0:
        return OpMatrix.identity(field, A.rows, col_labels=A.row_labels,
                                 row_labels=[f"z{i+1}" for i in range(A.rows)])
    if A.rows == 0:
        return OpMatrix.zero(field, 0, 0)
    basis = complete(A, order=order, session=session, track_src=True, **limits)
    raw = [r for r in basis.trace.cc_rows]
    if not raw:
        return OpMatrix.zero(field, 0, A.rows, col_labels=A.row_labels)
    # The raw syzygies generate, but the unexpectedly low-order conditions
    # are D-combinations of them: complete the syzygy module first, then
    # extract a minimal generating subset from its involutive basis.
    raw_matrix = OpMatrix.from_rows(field, raw, A.rows, col_labels=A.row_labels)
    syz_basis = complete(raw_matrix, order=order, session=session,
                         track_src=False, **limits)
    candidates = [list(r.op) for r in syz_basis._rows]
    kept = _minimalize(field, candidates, A.rows, order, session, A.row_labels)
    kept = [_monic_row(field, r, A.rows, order, session) for r in kept]
    labels = [f"z{i+1}" for i in range(len(kept))]
    return OpMatrix.from_rows(field, kept, A.rows,
                              row_labels=labels, col_labels=A.row_labels)


@dataclass
class DiffSequence:
    """A chain of operators, each generating the CC of the one before.

    ops[0] is the presentation; ops[i+1] = CC(ops[i]).  The chain is
    formally exact by construction; the strictly-exact and involutive
    flags follow from the per-operator completion behaviour.
    """

    field: object
    ops: list
    orders: list
    formally_exact: bool
    strictly_exact: bool
    involutive: bool
    terminated: bool
    certificates: list = dc_field(default_factory=list)
    per_op: list = dc_field(default_factory=list)

    def __len__(self):
        return len(self.ops)

    @property
    def shape(self):
        """Free-module sizes (a0, a1, ...) of the resolution."""
        if not self.ops:
            return ()
        return (self.ops[0].cols,) + tuple(op.rows for op in self.ops)

    def alternating_rank_sum(self):
        dims = self.shape
        return sum((-1) ** i * d for i, d in enumerate(dims))


def classify_operator(A, order=None, session=None, **limits):
    """(formally_integrable, involutive) flags for one operator.

    Involutive means completion returns the autoreduced input unchanged:
    every basis lead already appears among the input rows' leads.
    """
    order = order or DEFAULT_ORDER
    session = session or Session(A.field)
    basis = complete(A, order=order, session=session, track_src=False, **limits)
    formally_integrable = not basis.trace.integrability_conditions
    added = {r.lead for r in basis.rows}
    input_leads = set()
    for i in range(A.rows):
        mat = OpMatrix.from_rows(A.field, [A.row(i)], A.cols)
        if mat.is_zero:
            continue
        input_leads.add(_lead_of(mat, order))
    involutive = added <= input_leads
    return formally_integrable, involutive, basis


def build_sequence(A, max_steps=None, order=None, session=None, **limits):
    """Iterate compatibility conditions until they are empty.

    The length is capped at n + 1 operators starting from A; emptiness of
    the final CC is verified rather than assumed.
    """
    order = order or DEFAULT_ORDER
    field = A.field
    session = session or Session(field)
    cap = max_steps if max_steps is not None else field.n + 1
    if cap < 1:
        raise ValueError("max_steps must be >= 1")
    ops = [A]
    per_op = []
    certificates = []
    terminated = False
    while True:
        fi, inv, _ = classify_operator(ops[-1], order=order,
                                       session=session, **limits)
        per_op.append({"formally_integrable": fi, "involutive": inv,
                       "order": ops[-1].order})
        cc = compatibility_conditions(ops[-1], order=order, session=session,
                                      **limits)
        if cc.rows == 0:
            terminated = True
            break
        if len(ops) >= cap:
            break
        certificates.append(cc.compose(ops[-1]).is_zero)
        ops.append(cc)
    if not terminated and len(ops) >= field.n + 1:
        raise ResourceLimit("differential sequence exceeded the n+1 bound")
    return DiffSequence(
        field=field,
        ops=ops,
        orders=[op.order for op in ops],
        formally_exact=True,
        strictly_exact=all(p["formally_integrable"] for p in per_op),
        involutive=all(p["involutive"] for p in per_op),
        terminated=terminated,
        certificates=certificates,
        per_op=per_op,
    )


def differential_rank(A, order=None, session=None, _depth=0, **limits):
    """Rank of A over the skew quotient field of D.

    Computed through the certified syzygy chain: rk A = rows(A) - rk CC(A),
    with rank 0 for an empty or zero matrix.  Equals rk ad(A).
    """
    order = order or DEFAULT_ORDER
    session = session or Session(A.field)
    if A.rows == 0 or A.cols == 0 or A.is_zero:
        return 0
    if _depth > A.field.n + 2:
        raise ResourceLimit("rank recursion exceeded the resolution bound")
    cc = compatibility_conditions(A, order=order, session=session, **limits)
    if cc.rows == 0:
        return A.rows
    return A.rows - differential_rank(cc, order=order, session=session,
                                      _depth=_depth + 1, **limits)
