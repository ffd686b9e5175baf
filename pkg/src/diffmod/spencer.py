"""Symbol spaces, prolongations and Spencer delta-cohomology dimensions.

Everything is finite linear algebra over exact rationals: a symbol is a
subspace of S_q T* (x) E cut out by linear equations, its prolongations
shift those equations up in symmetric degree, and the delta complex

    wedge^{s-1} (x) g_{q+1}  ->  wedge^s (x) g_q  ->  wedge^{s+1} (x) g_{q-1}

has cohomology dimensions computed from exact ranks.  The classical
dimension tables (flat metric, conformal, contact families) come out of
these ranks, not out of the closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction


class UnsupportedDimension(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact linear algebra

def rank(rows, ncols):
    """Rank of a matrix given as a list of {col: Fraction} dicts."""
    rows = [dict(r) for r in rows if r]
    rk = 0
    used = set()
    for _ in range(len(rows)):
        pivot_row = None
        pivot_col = None
        for r in rows:
            for c in r:
                if c not in used:
                    pivot_row, pivot_col = r, c
                    break
            if pivot_row is not None:
                break
        if pivot_row is None:
            break
        rk += 1
        used.add(pivot_col)
        pv = pivot_row[pivot_col]
        rows.remove(pivot_row)
        reduced = []
        for r in rows:
            if pivot_col in r:
                f = r[pivot_col] / pv
                new = dict(r)
                for c, v in pivot_row.items():
                    w = new.get(c, Fraction(0)) - f * v
                    if w:
                        new[c] = w
                    else:
                        new.pop(c, None)
                if new:
                    reduced.append(new)
            else:
                reduced.append(r)
        rows = reduced
    return rk


# ---------------------------------------------------------------------------
# index bookkeeping

def sym_monos(n, q):
    """Multi-indices of total degree q (coordinates of S_q T*)."""
    if q < 0:
        return []
    out = []
    for combo in itertools.combinations_with_replacement(range(n), q):
        mu = [0] * n
        for i in combo:
            mu[i] += 1
        out.append(tuple(mu))
    return out


def wedge_sets(n, s):
    """Ascending index tuples (coordinates of wedge^s T*)."""
    if s < 0 or s > n:
        return []
    return list(itertools.combinations(range(n), s))


def sym_dim(n, q):
    return math.comb(n + q - 1, q) if q >= 0 else 0


# ---------------------------------------------------------------------------
# symbol spaces

@dataclass
class SymbolSpace:
    """g_q inside S_q T* (x) E, cut out by linear equations.

    equations: list of {(mu, k): Fraction} with |mu| = q, 0 <= k < m.
    """

    n: int
    m: int
    q: int
    equations: list

    @property
    def ambient_dim(self):
        return self.m * sym_dim(self.n, self.q)

    @property
    def dim(self):
        index = {(mu, k): i for i, (mu, k) in enumerate(
            (mu, k) for mu in sym_monos(self.n, self.q) for k in range(self.m))}
        rows = [{index[key]: Fraction(v) for key, v in eq.items()}
                for eq in self.equations]
        return self.ambient_dim - rank(rows, len(index))

    def prolong(self, r=1):
        """g_{q+r}: every equation shifted by every degree-r monomial."""
        if r < 1:
            raise ValueError("prolongation steps must be >= 1")
        g = self
        for _ in range(r):
            eqs = []
            for eq in g.equations:
                for i in range(g.n):
                    new = {}
                    for (mu, k), v in eq.items():
                        shifted = tuple(m + (1 if j == i else 0)
                                        for j, m in enumerate(mu))
                        new[(shifted, k)] = new.get((shifted, k), Fraction(0)) + v
                    eqs.append({k: v for k, v in new.items() if v})
            g = SymbolSpace(g.n, g.m, g.q + 1, eqs)
        return g

    def at_level(self, level):
        """The symbol at symmetric degree `level`.

        Below q the full space S_level (x) E is used, matching the
        convention that the defining equations only start at order q.
        """
        if level < self.q:
            return SymbolSpace(self.n, self.m, level, [])
        if level == self.q:
            return self
        return self.prolong(level - self.q)


# ---------------------------------------------------------------------------
# the delta complex

def _delta_matrix(n, m, s, q):
    """Matrix of delta: wedge^s (x) S_q (x) E -> wedge^{s+1} (x) S_{q-1} (x) E.

    Returns (rows, source_index) where rows are target equations in
    source coordinates: row[(J, nu, k)] has entries (-1)^t at
    (J minus j_t, nu + j_t, k).
    """
    src = {}
    for I in wedge_sets(n, s):
        for mu in sym_monos(n, q):
            for k in range(m):
                src[(I, mu, k)] = len(src)
    rows = []
    if q < 1 or s + 1 > n:
        return rows, src
    for J in wedge_sets(n, s + 1):
        for nu in sym_monos(n, q - 1):
            for k in range(m):
                row = {}
                for t, jt in enumerate(J):
                    I = tuple(x for x in J if x != jt)
                    shifted = tuple(v + (1 if i == jt else 0)
                                    for i, v in enumerate(nu))
                    col = src[(I, shifted, k)]
                    row[col] = row.get(col, Fraction(0)) + Fraction((-1) ** t)
                row = {c: v for c, v in row.items() if v}
                if row:
                    rows.append(row)
    return rows, src


def _slice_equations(g, s, src):
    """The g-membership equations applied to every wedge slice."""
    rows = []
    for I in wedge_sets(g.n, s):
        for eq in g.equations:
            row = {}
            for (mu, k), v in eq.items():
                row[src[(I, mu, k)]] = Fraction(v)
            if row:
                rows.append(row)
    return rows


def _cycle_dim(g, s, level):
    """dim of {w in wedge^s (x) g_level : delta w = 0}."""
    if s < 0 or s > g.n:
        return 0
    gl = g.at_level(level)
    delta_rows, src = _delta_matrix(g.n, g.m, s, level)
    slice_rows = _slice_equations(gl, s, src)
    ambient = len(src)
    return ambient - rank(delta_rows + slice_rows, ambient)


def _wedge_symbol_dim(g, s, level):
    if s < 0 or s > g.n:
        return 0
    return math.comb(g.n, s) * g.at_level(level).dim


def delta_cohomology_dim(g, s, r=0):
    """dim H^s(g_{q+r}): kernel minus image at wedge^s (x) g_{q+r}."""
    level = g.q + r
    z = _cycle_dim(g, s, level)
    if s == 0:
        return z
    b = _wedge_symbol_dim(g, s - 1, level + 1) - _cycle_dim(g, s - 1, level + 1)
    return z - b


def acyclicity_check(g, k, max_extra=None):
    """True iff H^s(g_{q+r}) = 0 for 1 <= s <= k and all needed r.

    Prolongations are checked until the symbol dies (finite type) or a
    small safety margin past stabilisation is reached.
    """
    extra = max_extra if max_extra is not None else g.n + 2
    r = 0
    while True:
        gl = g.at_level(g.q + r)
        if gl.dim == 0:
            return True
        for s in range(1, k + 1):
            if delta_cohomology_dim(g, s, r) != 0:
                return False
        r += 1
        if r > extra:
            return True


def delta_squared_is_zero(n, m, s, q):
    """Exact check that the composite of two delta maps vanishes."""
    if q < 2 or s + 2 > n:
        return True
    first, src = _delta_matrix(n, m, s, q)
    second, mid = _delta_matrix(n, m, s + 1, q - 1)
    # compose: rows of `second` are functionals on mid coords; each mid
    # coordinate row in `first` is indexed in the same target order
    target_rows = []
    mid_keys = [(I, mu, k) for I in wedge_sets(n, s + 1)
                for mu in sym_monos(n, q - 1) for k in range(m)]
    first_by_target = {}
    pos = 0
    for key in mid_keys:
        row = first[pos] if pos < len(first) else {}
        first_by_target[key] = row
        pos += 1
    for row2 in second:
        acc = {}
        for mid_col, v in row2.items():
            key = mid_keys[mid_col]
            for c, w in first_by_target[key].items():
                acc[c] = acc.get(c, Fraction(0)) + v * w
        if any(acc.values()):
            return False
    return True


# ---------------------------------------------------------------------------
# classical symbol families (flat nondegenerate metric)

def killing_symbol(n, metric=None):
    """First-order symbol of the isometry system: omega-antisymmetric maps."""
    if n < 2:
        raise UnsupportedDimension("need n >= 2")
    om = metric or [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    units = sym_monos(n, 1)
    eqs = []
    for i in range(n):
        for j in range(i, n):
            row = {}
            for r in range(n):
                if om[r][j]:
                    key = (units[i], r)
                    row[key] = row.get(key, Fraction(0)) + Fraction(om[r][j])
                if om[i][r]:
                    key = (units[j], r)
                    row[key] = row.get(key, Fraction(0)) + Fraction(om[i][r])
            eqs.append({k: v for k, v in row.items() if v})
    return SymbolSpace(n, n, 1, eqs)


def conformal_symbol(n, metric=None):
    """First-order symbol of the conformal system: trace part set free."""
    if n < 3:
        raise UnsupportedDimension("need n >= 3")
    om = metric or [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    if rank([{j: Fraction(v) for j, v in enumerate(row) if v} for row in om],
            n) < n:
        raise UnsupportedDimension("metric is degenerate")
    units = sym_monos(n, 1)
    eqs = []
    for i in range(n):
        for j in range(i, n):
            row = {}
            for r in range(n):
                if om[r][j]:
                    key = (units[i], r)
                    row[key] = row.get(key, Fraction(0)) + Fraction(om[r][j])
                if om[i][r]:
                    key = (units[j], r)
                    row[key] = row.get(key, Fraction(0)) + Fraction(om[i][r])
            # the trace of the endomorphism is metric independent
            tr = Fraction(2, n) * Fraction(om[i][j])
            if tr:
                for r in range(n):
                    key = (units[r], r)
                    row[key] = row.get(key, Fraction(0)) - tr
            eqs.append({k: v for k, v in row.items() if v})
    return SymbolSpace(n, n, 1, eqs)


# ---------------------------------------------------------------------------
# dimension tables

def contact_bundle_dim(n, r):
    """Fiber dimension n! / ((r+2)! (n-r-2)!) of the contact sequence."""
    return math.factorial(n) // (math.factorial(r + 2) * math.factorial(n - r - 2))


def classical_dims(family, n):
    """Bundle dimensions and operator orders of the Janet-type sequence.

    Every entry is computed from exact symbol ranks (or the contact
    combinatorial formula); nothing is read off a closed form.
    """
    if family == "killing":
        if n < 2:
            raise UnsupportedDimension("killing needs n >= 2")
        g = killing_symbol(n)
        dims = [n, n * (n + 1) // 2]
        orders = [1, 2]
        for s in range(2, n + 1):
            h = delta_cohomology_dim(g, s, 0)
            if h == 0 and s > 2:
                break
            dims.append(h)
            if s > 2:
                orders.append(1)
        return {"family": family, "n": n, "dims": dims, "orders": orders}
    if family == "conformal":
        if n < 3:
            raise UnsupportedDimension("conformal needs n >= 3")
        g = conformal_symbol(n)
        f0 = n * (n + 1) // 2 - 1
        if n == 3:
            f1 = delta_cohomology_dim(g, 2, 1)
            f2 = delta_cohomology_dim(g, 3, 1)
            return {"family": family, "n": n, "dims": [n, f0, f1, f2],
                    "orders": [1, 3, 1]}
        if n == 4:
            f1 = delta_cohomology_dim(g, 2, 0)
            f2 = delta_cohomology_dim(g, 3, 1)
            f3 = delta_cohomology_dim(g, 4, 1)
            return {"family": family, "n": n, "dims": [n, f0, f1, f2, f3],
                    "orders": [1, 2, 2, 1]}
        # n >= 5: second and third bundles are straight delta-cohomology;
        # the tail closes by adjoint symmetry of the sequence
        f1 = delta_cohomology_dim(g, 2, 0)
        f2 = delta_cohomology_dim(g, 3, 0)
        return {"family": family, "n": n, "dims": [n, f0, f1, f2, f0, n],
                "orders": [1, 2, 1, 2, 1]}
    if family == "contact":
        if n < 3 or n % 2 == 0:
            raise UnsupportedDimension("contact needs odd n >= 3")
        dims = [n] + [contact_bundle_dim(n, r) for r in range(0, n - 1)]
        orders = [1] * (n - 1)
        return {"family": family, "n": n, "dims": dims, "orders": orders}
    raise UnsupportedDimension(f"unknown family {family!r}")


def conformal_diagram_dims(n=5):
    """Fiber dimensions of the commutative diagram tying the two
    third-cohomology descriptions together (the n = 5 instance).

    Returns the six distinct fiber dimensions: Z^3 of the isometry
    symbol, Z^3 and H^3 of the conformal symbol, wedge^2 (x) g2hat,
    delta(T* (x) S_2 T*), and wedge^3 T*.
    """
    if n < 5:
        raise UnsupportedDimension("the diagram needs n >= 5")
    g = killing_symbol(n)
    gh = conformal_symbol(n)
    z3_killing = _cycle_dim(g, 3, 1)
    z3_conformal = _cycle_dim(gh, 3, 1)
    h3_conformal = delta_cohomology_dim(gh, 3, 0)
    wedge2_g2hat = math.comb(n, 2) * gh.prolong(1).dim
    # delta(T* x S2 T*) inside wedge^2 x T*: image dimension of delta
    full = SymbolSpace(n, 1, 2, [])
    src_dim = n * sym_dim(n, 2)
    delta_t_s2 = src_dim - _cycle_dim(full, 1, 2)
    wedge3 = math.comb(n, 3)
    return {
        "z3_isometry": z3_killing,
        "z3_conformal": z3_conformal,
        "h3_conformal": h3_conformal,
        "wedge2_g2hat": wedge2_g2hat,
        "delta_T_S2": delta_t_s2,
        "wedge3": wedge3,
    }


# ---------------------------------------------------------------------------
# the n = 4 potential identification

def _perm_sign(perm):
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def potential_identification_check(n=4):
    """The two descriptions of the degree-3 cocycle space agree for n = 4.

    Compares, inside wedge^3 T* (x) g_1 (flat metric, so g_1 = so(4)),
    the four closure equations of the delta map against the four cyclic
    equations of the 3-index potential obtained by double Hodge duality.
    Returns True when the two constraint sets cut the same subspace.
    """
    if n != 4:
        raise UnsupportedDimension("the identification only holds for n = 4")
    pairs = list(itertools.combinations(range(n), 2))   # g_1 = so(4) coords
    triples = wedge_sets(n, 3)
    coords = {(p, I): i for i, (p, I) in enumerate(
        (p, I) for p in pairs for I in triples)}

    def b(pair, I):
        (a, c) = pair
        if a == c:
            return {}
        sign = 1
        if a > c:
            a, c = c, a
            sign = -1
        return {coords[((a, c), I)]: Fraction(sign)}

    def add(row, other, scale=1):
        for k, v in other.items():
            row[k] = row.get(k, Fraction(0)) + Fraction(scale) * v

    # closure equations: the delta map on wedge^3 (x) T* (x) T written in
    # ambient coordinates, then restricted to so(4) pair coordinates
    amb = {}
    for i in range(n):
        for k in range(n):
            for I in triples:
                amb[(i, k, I)] = len(amb)
    delta_rows = []
    for k in range(n):
        row = {}
        full = (0, 1, 2, 3)
        for t, jt in enumerate(full):
            I = tuple(x for x in full if x != jt)
            row[amb[(jt, k, I)]] = Fraction((-1) ** t)
        delta_rows.append(row)
    # restriction so(4): B_{ik} = -B_{ki}: express ambient through pair coords
    def to_pairs(row):
        out = {}
        for (i, k, I), col in amb.items():
            if col in row:
                add(out, b((i, k), I), row[col])
        return out
    closure = [to_pairs(r) for r in delta_rows]

    # potential equations: L_{ij,k} = eps(ij|comp) eps(k|comp) B_{comp(ij), comp(k)}
    def L(i, j, k):
        rest_pair = tuple(x for x in range(n) if x not in (i, j))
        rest_k = tuple(x for x in range(n) if x != k)
        s1 = _perm_sign((i, j) + rest_pair)
        s2 = _perm_sign((k,) + rest_k)
        out = {}
        add(out, b(rest_pair, rest_k), s1 * s2)
        return out
    cyclic = []
    for (i, j, k) in itertools.combinations(range(n), 3):
        row = {}
        add(row, L(i, j, k))
        add(row, L(j, k, i))
        add(row, L(k, i, j))
        cyclic.append(row)

    ncols = len(coords)
    r1 = rank(closure, ncols)
    r2 = rank(cyclic, ncols)
    r12 = rank(closure + cyclic, ncols)
    return r1 == r2 == r12
