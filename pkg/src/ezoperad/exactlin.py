"""Exact sparse linear algebra over the rationals.

Everything here is exact: entries are ``fractions.Fraction``, never floats.
Matrices are sparse dicts keyed by (row, col); vectors are sparse dicts
keyed by index.  Rank computations run over the integers after clearing
denominators, with gcd-normalized echelon rows, so intermediate blowup
stays modest.  Pivoting is deterministic (first nonzero in column order),
hence all outputs are reproducible.
"""

from fractions import Fraction
from math import gcd, lcm

from .errors import InputError, InvariantError

ZERO = Fraction(0)
ONE = Fraction(1)


def vec_scale(v, a):
    a = Fraction(a)
    if a == 0:
        return {}
    return {i: a * x for i, x in v.items()}


def vec_add(u, v):
    out = dict(u)
    for i, x in v.items():
        y = out.get(i, ZERO) + x
        if y:
            out[i] = y
        else:
            out.pop(i, None)
    return out

def vec_sub(u, v):
    return vec_add(u, vec_scale(v, -1))


def vec_axpy(out, a, v):
    """In place: out += a*v.  Mutates and returns ``out``."""
    if a:
        for i, x in v.items():
            y = out.get(i, ZERO) + a * x
            if y:
                out[i] = y
            else:
                out.pop(i, None)
    return out


def _integerize(v):
    """Scale a Fraction vector to a primitive integer vector (positive lead)."""
    if not v:
        return {}
    mult = lcm(*(x.denominator for x in v.values())) if v else 1
    w = {i: int(x * mult) for i, x in v.items()}
    g = 0
    for x in w.values():
        g = gcd(g, x)
    if g > 1:
        w = {i: x // g for i, x in w.items()}
    lead = min(w)
    if w[lead] < 0:
        w = {i: -x for i, x in w.items()}
    return w


class QMatrix:
    """Sparse exact matrix.  Zero entries are never stored."""

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, nrows, ncols, entries=None):
        self.nrows = nrows
        self.ncols = ncols
        self.entries = {}
        if entries:
            for (r, c), x in entries.items():
                if not (0 <= r < nrows and 0 <= c < ncols):
                    raise InputError(f"entry ({r},{c}) outside {nrows}x{ncols}")
                x = Fraction(x)
                if x:
                    self.entries[(r, c)] = x

    @classmethod
    def from_cols(cls, nrows, cols):
        m = cls(nrows, len(cols))
        for j, col in enumerate(cols):
            for i, x in col.items():
                if x:
                    m.entries[(i, j)] = Fraction(x)
        return m

    @classmethod
    def from_rows(cls, ncols, rows):
        m = cls(len(rows), ncols)
        for i, row in enumerate(rows):
            for j, x in row.items():
                if x:
                    m.entries[(i, j)] = Fraction(x)
        return m

    @classmethod
    def identity(cls, n):
        return cls(n, n, {(i, i): ONE for i in range(n)})

    def __getitem__(self, rc):
        return self.entries.get(rc, ZERO)

    def __eq__(self, other):
        return (
            isinstance(other, QMatrix)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.entries == other.entries
        )

    def __hash__(self):
        return hash((self.nrows, self.ncols, frozenset(self.entries.items())))

    def __repr__(self):
        return f"QMatrix({self.nrows}x{self.ncols}, nnz={len(self.entries)})"

    def is_zero(self):
        return not self.entries

    def __add__(self, other):
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise InputError("shape mismatch in matrix addition")
        out = QMatrix(self.nrows, self.ncols, self.entries)
        for rc, x in other.entries.items():
            y = out.entries.get(rc, ZERO) + x
            if y:
                out.entries[rc] = y
            else:
                out.entries.pop(rc, None)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, a):
        a = Fraction(a)
        if a == 0:
            return QMatrix(self.nrows, self.ncols)
        return QMatrix(
            self.nrows, self.ncols, {rc: a * x for rc, x in self.entries.items()}
        )

    def __matmul__(self, other):
        if self.ncols != other.nrows:
            raise InputError("shape mismatch in matrix product")
        out = QMatrix(self.nrows, other.ncols)
        by_col = {}
        for (r, c), x in other.entries.items():
            by_col.setdefault(c, {})[r] = x
        self_by_col = {}
        for (r, c), x in self.entries.items():
            self_by_col.setdefault(c, {})[r] = x
        for j, col in by_col.items():
            acc = {}
            for k, x in col.items():
                left = self_by_col.get(k)
                if left:
                    vec_axpy(acc, x, left)
            for i, x in acc.items():
                out.entries[(i, j)] = x
        return out

    def apply(self, vec):
        """Matrix times sparse column vector."""
        out = {}
        by_col = {}
        for (r, c), x in self.entries.items():
            by_col.setdefault(c, {})[r] = x
        for j, a in vec.items():
            col = by_col.get(j)
            if col:
                vec_axpy(out, a, col)
        return out

    def col(self, j):
        return {r: x for (r, c), x in self.entries.items() if c == j}

    def cols(self):
        by_col = [{} for _ in range(self.ncols)]
        for (r, c), x in self.entries.items():
            by_col[c][r] = x
        return by_col

    def rows(self):
        by_row = [{} for _ in range(self.nrows)]
        for (r, c), x in self.entries.items():
            by_row[r][c] = x
        return by_row

    def transpose(self):
        return QMatrix(
            self.ncols, self.nrows, {(c, r): x for (r, c), x in self.entries.items()}
        )

    def dense(self):
        return [
            [self.entries.get((i, j), ZERO) for j in range(self.ncols)]
            for i in range(self.nrows)
        ]


class SpanReducer:
    """Incremental row span over Q, kept as gcd-normalized integer echelon rows.

    Feeding vectors one at a time gives the rank of their span; vectors that
    do not grow the span reduce to zero.  Rows are indexed by pivot column,
    pivots are the minimal nonzero column of each row, and reduction is
    deterministic.
    """

    __slots__ = ("rows",)

    def __init__(self):
        self.rows = {}

    @property
    def rank(self):
        return len(self.rows)

    def _reduce(self, w):
        # w: integer dict, mutated until no pivot collision remains
        while w:
            c = min(w)
            row = self.rows.get(c)
            if row is None:
                return w
            a, b = row[c], w[c]
            g = gcd(a, b)
            ka, kb = a // g, b // g
            # w := ka*w - kb*row  kills column c exactly
            new = {}
            for i, x in w.items():
                new[i] = ka * x
            for i, x in row.items():
                y = new.get(i, 0) - kb * x
                if y:
                    new[i] = y
                else:
                    new.pop(i, None)
            w = new
        return w

    def add(self, vec):
        """Add one vector (Fraction or int dict).  True iff the rank grew."""
        w = self._reduce(_integerize(vec))
        if not w:
            return False
        g = 0
        for x in w.values():
            g = gcd(g, x)
        if g > 1:
            w = {i: x // g for i, x in w.items()}
        c = min(w)
        if w[c] < 0:
            w = {i: -x for i, x in w.items()}
        self.rows[c] = w
        return True

    def contains(self, vec):
        return not self._reduce(_integerize(vec))


def rank(matrix):
    """Rank via incremental integer echelon on the rows."""
    red = SpanReducer()
    for row in matrix.rows():
        if row:
            red.add(row)
    return red.rank


def rank_of_vectors(vectors):
    red = SpanReducer()
    for v in vectors:
        if v:
            red.add(v)
    return red.rank


def solve(matrix, target):
    """One exact solution of ``matrix @ x = target``, or None if inconsistent.

    Free variables are set to zero.  ``target`` is a sparse column dict.
    """
    rows = matrix.rows()
    aug = []
    t_col = matrix.ncols
    for i, row in enumerate(rows):
        r = dict(row)
        ti = target.get(i, ZERO)
        if ti:
            r[t_col] = Fraction(ti)
        if r:
            aug.append(r)
    for i in target:
        if not 0 <= i < matrix.nrows:
            raise InputError("target vector index out of range")

    pivots = {}  # col -> row dict with that pivot, pivot coefficient 1
    for r in aug:
        while r:
            c = min(r)
            if c == t_col:
                return None  # 0 = nonzero
            p = pivots.get(c)
            if p is None:
                inv = ONE / r[c]
                pivots[c] = {i: inv * x for i, x in r.items()}
                break
            vec_axpy(r, -r[c], p)
    # back substitution, free variables zero
    x = {}
    for c in sorted(pivots, reverse=True):
        row = pivots[c]
        val = row.get(t_col, ZERO)
        for j, a in row.items():
            if j != c and j != t_col:
                xj = x.get(j)
                if xj:
                    val -= a * xj
        if val:
            x[c] = val
    # verify: cheap insurance, sizes here are small
    residual = vec_sub(matrix.apply(x), {i: Fraction(v) for i, v in target.items()})
    if residual:
        raise InvariantError("solver produced a non-solution")
    return x


def kernel_basis(matrix):
    """Basis of the right kernel, one sparse vector per free column."""
    pivots = {}
    for row in matrix.rows():
        r = dict(row)
        while r:
            c = min(r)
            p = pivots.get(c)
            if p is None:
                inv = ONE / r[c]
                pivots[c] = {i: inv * x for i, x in r.items()}
                break
            vec_axpy(r, -r[c], p)
    # full reduction upward so each pivot row mentions no other pivot column
    for c in sorted(pivots, reverse=True):
        row = pivots[c]
        for c2 in [k for k in row if k != c and k in pivots]:
            vec_axpy(row, -row[c2], pivots[c2])
    basis = []
    for j in range(matrix.ncols):
        if j in pivots:
            continue
        v = {j: ONE}
        for c, row in pivots.items():
            a = row.get(j, ZERO)
            if a:
                v[c] = -a
        basis.append(v)
    return basis


class FiniteComplex:
    """A finite cochain complex of finite-dimensional Q-vector spaces.

    ``dims[p]`` for ``lo <= p <= hi``; differential ``d[p]: C^p -> C^(p+1)``
    stored as a ``dims[p+1] x dims[p]`` matrix for ``lo <= p < hi``.
    """

    __slots__ = ("lo", "hi", "dims", "d")

    def __init__(self, lo, hi, dims, d):
        if lo > hi:
            raise InputError("empty degree range")
        self.lo = lo
        self.hi = hi
        self.dims = dict(dims)
        self.d = dict(d)
        for p in range(lo, hi + 1):
            if p not in self.dims:
                raise InputError(f"missing dimension in degree {p}")
        for p, m in self.d.items():
            if not lo <= p < hi:
                raise InputError(f"differential at degree {p} outside range")
            if (m.nrows, m.ncols) != (self.dims[p + 1], self.dims[p]):
                raise InputError(f"differential shape mismatch at degree {p}")

    def validate(self):
        for p in range(self.lo, self.hi - 1):
            a, b = self.d.get(p), self.d.get(p + 1)
            if a is not None and b is not None and not (b @ a).is_zero():
                raise InvariantError(f"d o d != 0 between degrees {p} and {p + 2}")

    def _dmat(self, p):
        m = self.d.get(p)
        if m is None and self.lo <= p < self.hi:
            m = QMatrix(self.dims[p + 1], self.dims[p])
        return m

    def cohomology_rank(self, p):
        if not self.lo <= p <= self.hi:
            return 0
        r_out = rank(self._dmat(p)) if p < self.hi else 0
        r_in = rank(self._dmat(p - 1)) if p > self.lo else 0
        return self.dims[p] - r_out - r_in

    def cohomology_basis(self, p):
        """Cocycle representatives spanning H^p, as sparse vectors in C^p."""
        if not self.lo <= p <= self.hi:
            return []
        if p < self.hi:
            cocycles = kernel_basis(self._dmat(p))
        else:
            cocycles = [{j: ONE} for j in range(self.dims[p])]
        red = SpanReducer()
        if p > self.lo:
            for col in self._dmat(p - 1).cols():
                if col:
                    red.add(col)
        reps = []
        for v in cocycles:
            if red.add(v):
                reps.append(v)
        return reps
