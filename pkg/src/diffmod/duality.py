"""Double duality, torsion, parametrization and ext modules.

Everything here runs on left row modules: a presentation matrix A gives
M = D^(1xm) / (rows of A).  Duality is taken with the formal adjoint so
that both sides stay left modules; the five-step test compares the
bidualized compatibility conditions with the original presentation, and
the rows that fail to reduce generate the torsion submodule.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .field import DiffmodError, Session
from .janet import complete, count_parametric
from .ops import DEFAULT_ORDER, OpMatrix, ScalarOp
from .syzygy import compatibility_conditions, differential_rank


class NotParametrizable(DiffmodError):
    def __init__(self, certificates):
        self.certificates = certificates
        super().__init__(
            "operator admits no parametrization: torsion generators "
            f"{[c.describe() for c in certificates]}")


@dataclass
class TorsionCertificate:
    """A torsion element with a replayable annihilator identity.

    annihilator o element == witness o presentation holds exactly, and the
    element itself does not reduce modulo the presentation rows.
    """

    element: OpMatrix          # 1 x m row in the presentation coordinates
    annihilator: ScalarOp      # nonzero P with P*element in the row module
    witness: OpMatrix          # 1 x p row with P*element = witness o A
    presentation: OpMatrix

    def describe(self):
        return self.element.row_string(0)

    def verify(self):
        left = OpMatrix(self.element.field,
                        [[self.annihilator]]).compose(self.element)
        right = self.witness.compose(self.presentation)
        return left == right and not self.annihilator.is_zero


@dataclass
class DualityResult:
    torsion_free: bool
    parametrizing: OpMatrix | None    # the operator D with CC(D) ~ D1
    adjoint_cc: OpMatrix              # CC(ad D1) = ad(D)
    d1_prime: OpMatrix                # CC(D)
    extra_cc: list                    # rows of d1_prime not in the row module of D1
    provisos: list


@dataclass
class ExtReport:
    index: int
    generators: OpMatrix
    image: OpMatrix | None
    residues: list
    vanishing: bool
    torsion_generators: list
    provisos: list
    case_context: dict = dc_field(default_factory=dict)

    def nonzero_generator_rows(self):
        return [g for g, r in zip(range(self.generators.rows), self.residues)
                if not all(e.is_zero for e in r)]


@dataclass
class ParametrizationResult:
    parametrizing: OpMatrix
    d1_prime: OpMatrix
    certified: bool
    minimal_rank_bound: int


def kernel_analysis(A, order=None, session=None, **limits):
    """Formal solutions of the homogeneous system A(lam) = 0.

    Completes the system; injective when no parametric derivative is
    left.  The nonzero conditions consumed by pivots along the way are
    exactly the constraints under which injectivity holds.
    """
    order = order or DEFAULT_ORDER
    session = session or Session(A.field)
    basis = complete(A, order=order, session=session, track_src=False, **limits)
    count = count_parametric(basis)
    injective = count.finite_type and count.dim == 0
    conditions = list(session.provisos)
    status = "injective" if injective and not conditions else (
        "conditional" if injective else "not injective")
    return {
        "injective": injective,
        "status": status,
        "conditions": conditions,
        "kernel_basis": basis,
        "parametric": count,
    }


def double_duality_test(D1, order=None, session=None, **limits):
    """The five-step torsion test on the module presented by D1.

    ad(D1) -> its CC (called ad of the parametrizing operator) -> adjoint
    back -> its CC D1' -> reduce D1' against D1.  Rows of D1' that do not
    reduce generate t(M); their absence certifies torsion-freeness.
    """
    order = order or DEFAULT_ORDER
    field = D1.field
    session = session or Session(field)
    ad1 = D1.adjoint()
    ad_d = compatibility_conditions(ad1, order=order, session=session, **limits)
    D = ad_d.adjoint()
    d1_prime = compatibility_conditions(D, order=order, session=session, **limits)
    basis = complete(D1, order=order, session=session, track_src=False, **limits) \
        if not D1.is_zero and D1.rows else None
    extra = []
    for i in range(d1_prime.rows):
        row = d1_prime.row(i)
        if basis is None:
            if not all(e.is_zero for e in row):
                extra.append(OpMatrix.from_rows(field, [row], D1.cols,
                                                col_labels=D1.col_labels))
            continue
        if not basis.contains(row):
            extra.append(OpMatrix.from_rows(field, [row], D1.cols,
                                            col_labels=D1.col_labels))
    return DualityResult(
        torsion_free=not extra,
        parametrizing=D,
        adjoint_cc=ad_d,
        d1_prime=d1_prime,
        extra_cc=extra,
        provisos=list(session.provisos),
    )


def annihilator_of(row, presentation, order=None, session=None, **limits):
    """A nonzero P with P o row inside the row module of the presentation.

    Found through the syzygies of the stacked matrix [row; presentation]:
    any generating syzygy with a nonzero first component is such a P.
    Returns (P, witness) with P*row = witness o presentation, or None.
    """
    order = order or DEFAULT_ORDER
    field = presentation.field
    session = session or Session(field)
    stacked = row.stack(presentation)
    cc = compatibility_conditions(stacked, order=order, session=session, **limits)
    candidates = []
    for i in range(cc.rows):
        P = cc.entries[i][0]
        if not P.is_zero:
            witness = [-cc.entries[i][j] for j in range(1, cc.cols)]
            candidates.append((P, witness))
    if not candidates:
        return None
    P, witness = min(candidates, key=lambda c: c[0].order)
    return P, OpMatrix.from_rows(field, [witness], presentation.rows,
                                 col_labels=presentation.row_labels)


def torsion_submodule(presentation, order=None, session=None, **limits):
    """Generating torsion certificates of M = coker(presentation)."""
    order = order or DEFAULT_ORDER
    session = session or Session(presentation.field)
    result = double_duality_test(presentation, order=order, session=session,
                                 **limits)
    certs = []
    for row in result.extra_cc:
        found = annihilator_of(row, presentation, order=order,
                               session=session, **limits)
        if found is None:
            raise DiffmodError(
                f"no annihilator found for extra CC row {row.row_string(0)}")
        P, witness = found
        cert = TorsionCertificate(element=row, annihilator=P, witness=witness,
                                  presentation=presentation)
        if not cert.verify():
            raise DiffmodError("torsion certificate failed to replay")
        certs.append(cert)
    return certs


def _reduce_rows_mod(rows_matrix, image, order, session, **limits):
    """Normal forms of each row of rows_matrix modulo the rows of image."""
    if image is None or image.rows == 0:
        return [rows_matrix.row(i) for i in range(rows_matrix.rows)]
    basis = complete(image, order=order, session=session, track_src=False,
                     **limits)
    return [basis.normal_form(rows_matrix.row(i))
            for i in range(rows_matrix.rows)]


def ext_module(sequence, i, order=None, session=None, case_context=None,
               **limits):
    """ext^i of the module presented by sequence.ops[0].

    Computed as the cohomology of the adjoint chain: generators are the
    CC of ad(ops[i]) (kernel on the dual side), the image is the row
    module of ad(ops[i-1]), and the report carries torsion certificates
    for the generators that survive reduction.
    """
    order = order or DEFAULT_ORDER
    ops = sequence.ops if hasattr(sequence, "ops") else list(sequence)
    field = ops[0].field
    session = session or Session(field)
    if i < 0:
        raise ValueError("ext index must be >= 0")
    terminated = getattr(sequence, "terminated", None)
    if i > len(ops):
        if terminated is False:
            raise ValueError("resolution too short for the requested index")
        gens = OpMatrix.zero(field, 0, 0)
        return ExtReport(index=i, generators=gens, image=None, residues=[],
                         vanishing=True, torsion_generators=[],
                         provisos=list(session.provisos),
                         case_context=dict(case_context or {}))
    image = ops[i - 1].adjoint() if i >= 1 else None
    if i < len(ops):
        gens = compatibility_conditions(ops[i].adjoint(), order=order,
                                        session=session, **limits)
        width = ops[i].rows
    else:
        # one step past a terminated resolution: the dual chain ends in 0,
        # the kernel is everything
        if terminated is False:
            raise ValueError("resolution too short for the requested index")
        width = ops[-1].rows
        gens = OpMatrix.identity(field, width,
                                 col_labels=[f"m{k+1}" for k in range(width)])
    if gens.rows and image is not None and gens.cols != image.cols:
        raise DiffmodError("chain shapes do not match")
    residues = _reduce_rows_mod(gens, image, order, session, **limits)
    vanishing = all(all(e.is_zero for e in r) for r in residues)
    torsion = []
    if not vanishing and image is not None:
        for k, r in enumerate(residues):
            if all(e.is_zero for e in r):
                continue
            row = OpMatrix.from_rows(field, [gens.row(k)], gens.cols,
                                     col_labels=gens.col_labels)
            found = annihilator_of(row, image, order=order, session=session,
                                   **limits)
            if found is not None:
                P, witness = found
                torsion.append(TorsionCertificate(
                    element=row, annihilator=P, witness=witness,
                    presentation=image))
    return ExtReport(
        index=i,
        generators=gens,
        image=image,
        residues=residues,
        vanishing=vanishing,
        torsion_generators=torsion,
        provisos=list(session.provisos),
        case_context=dict(case_context or {}),
    )


def parametrize(D1, order=None, session=None, **limits):
    """Parametrizing operator of a torsion-free presentation.

    Returns the operator D from the double-duality test together with a
    mutual-reduction certificate that CC(D) and D1 generate the same row
    module, plus the rank bound a minimal parametrization would need.
    """
    order = order or DEFAULT_ORDER
    field = D1.field
    session = session or Session(field)
    result = double_duality_test(D1, order=order, session=session, **limits)
    if not result.torsion_free:
        certs = torsion_submodule(D1, order=order, session=session, **limits)
        raise NotParametrizable(certs)
    D = result.parametrizing
    certified = D1.compose(D).is_zero
    if D1.rows and not D1.is_zero:
        basis_prime = complete(result.d1_prime, order=order, session=session,
                               track_src=False, **limits) \
            if result.d1_prime.rows else None
        if basis_prime is not None:
            certified = certified and basis_prime.contains_matrix(D1)
        basis_d1 = complete(D1, order=order, session=session,
                            track_src=False, **limits)
        certified = certified and basis_d1.contains_matrix(result.d1_prime)
    rank_m = D1.cols - differential_rank(D1, order=order,
                                         session=session, **limits)
    return ParametrizationResult(
        parametrizing=D,
        d1_prime=result.d1_prime,
        certified=certified,
        minimal_rank_bound=rank_m,
    )
