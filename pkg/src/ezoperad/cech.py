"""Cover-style cosimplicial algebras from combinatorial nerve data.

A :class:`NerveSheaf` stores a finite index set of opens, one
finite-dimensional algebra per nonempty subset, and restriction morphisms
between nested subsets.  :func:`cech_cosimplicial` assembles the truncated
cosimplicial algebra whose level ``p`` is one fiber copy per function
``u: [p] -> opens``, with structure maps given by index precomposition
followed by restriction, and the componentwise operation on each level.

Degeneracies force repeated indices, which is why levels are indexed by all
functions rather than by strictly increasing tuples; the Moore complex of
the result is the classical alternating-sum complex of the cover, and the
tests compare it entry by entry against an independently coded one.

The module also hosts the text format for nerve data (see
``docs/FORMATS.md``) with strict, line-numbered parse errors, and
:func:`cover_module`, the product-agnostic core that other carriers reuse.
"""

from fractions import Fraction
from itertools import combinations, product

from .cosimp import CosimplicialModule
from .errors import InputError
from .exactlin import QMatrix
from .simplexcat import degeneracy, face
from .transfer import CosimplicialAlgebra

ONE = Fraction(1)
ZERO = Fraction(0)


def _subset_name(s):
    return ",".join(str(i) for i in sorted(s))


class NerveSheaf:
    """Combinatorial cover data: fibers on subsets, restrictions between.

    ``fibers`` maps a frozenset of opens to ``(dim, tensor)`` where the
    tensor is the sparse structure-constant table ``{(i, j): {k: coeff}}``.
    ``restrictions`` maps ``(S, T)`` with ``S`` a proper subset of ``T`` to
    the matrix of the restriction morphism; the identity on ``S == S`` is
    implied and never stored.  ``kind`` is ``"lie"`` or ``"com"``.

    Nothing is checked on construction; :meth:`validate` returns a list of
    diagnostics (empty when everything holds), and the builders that
    consume a sheaf insist on an empty list first.
    """

    __slots__ = ("kind", "opens", "fibers", "restrictions")

    def __init__(self, kind, opens, fibers, restrictions):
        if kind not in ("lie", "com"):
            raise InputError(f"unknown algebra kind {kind!r}")
        if opens < 1:
            raise InputError("a cover needs at least one open")
        self.kind = kind
        self.opens = opens
        self.fibers = {frozenset(s): v for s, v in fibers.items()}
        self.restrictions = {
            (frozenset(s), frozenset(t)): m for (s, t), m in restrictions.items()
        }

    def fiber_dim(self, s):
        entry = self.fibers.get(frozenset(s))
        if entry is None:
            raise InputError(f"missing fiber on {{{_subset_name(s)}}}")
        return entry[0]

    def tensor(self, s):
        entry = self.fibers.get(frozenset(s))
        if entry is None:
            raise InputError(f"missing fiber on {{{_subset_name(s)}}}")
        return entry[1]

    def rho(self, s, t):
        s, t = frozenset(s), frozenset(t)
        if s == t:
            return QMatrix.identity(self.fiber_dim(s))
        mat = self.restrictions.get((s, t))
        if mat is None:
            raise InputError(
                f"missing restriction {{{_subset_name(s)}}} -> {{{_subset_name(t)}}}"
            )
        return mat

    def _subsets_to(self, depth):
        universe = range(self.opens)
        for size in range(1, min(depth, self.opens) + 1):
            for s in combinations(universe, size):
                yield frozenset(s)

    def validate(self, depth=None):
        """Diagnostics for every broken invariant, each with a witness.

        ``depth`` bounds the subset size that must be present (levels up to
        ``depth`` need intersections of ``depth + 1`` opens); without it
        only the declared data is cross-checked.  Diagnostics are dicts
        with ``kind``, ``where`` and ``detail`` and never raise.
        """
        out = []
        if depth is not None:
            needed = list(self._subsets_to(depth + 1))
        else:
            needed = sorted(self.fibers, key=lambda s: (len(s), sorted(s)))
        for s in needed:
            if s not in self.fibers:
                out.append(
                    {
                        "kind": "completeness",
                        "where": _subset_name(s),
                        "detail": "missing fiber",
                    }
                )
        present = [s for s in needed if s in self.fibers]
        for s, (dim, tensor) in sorted(
            self.fibers.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))
        ):
            if dim < 0:
                out.append(
                    {
                        "kind": "carrier",
                        "where": _subset_name(s),
                        "detail": f"negative dimension {dim}",
                    }
                )
                continue
            bad = self._tensor_shape_issue(dim, tensor)
            if bad:
                out.append(
                    {"kind": "carrier", "where": _subset_name(s), "detail": bad}
                )
                continue
            issue = self._axiom_issue(dim, tensor)
            if issue:
                out.append(
                    {"kind": "axioms", "where": _subset_name(s), "detail": issue}
                )
        pairs = [
            (s, t)
            for s in present
            for t in present
            if s < t
        ]
        for s, t in pairs:
            if (s, t) not in self.restrictions:
                out.append(
                    {
                        "kind": "completeness",
                        "where": f"{_subset_name(s)} -> {_subset_name(t)}",
                        "detail": "missing restriction",
                    }
                )
        for (s, t), mat in sorted(
            self.restrictions.items(),
            key=lambda kv: (sorted(kv[0][0]), sorted(kv[0][1])),
        ):
            if s not in self.fibers or t not in self.fibers:
                continue
            if not s < t:
                out.append(
                    {
                        "kind": "shape",
                        "where": f"{_subset_name(s)} -> {_subset_name(t)}",
                        "detail": "restriction not between nested subsets",
                    }
                )
                continue
            dim_s, dim_t = self.fibers[s][0], self.fibers[t][0]
            if mat.nrows != dim_t or mat.ncols != dim_s:
                out.append(
                    {
                        "kind": "shape",
                        "where": f"{_subset_name(s)} -> {_subset_name(t)}",
                        "detail": f"matrix is {mat.nrows}x{mat.ncols}, "
                        f"expected {dim_t}x{dim_s}",
                    }
                )
                continue
            witness = self._morphism_witness(s, t, mat)
            if witness:
                out.append(
                    {
                        "kind": "morphism",
                        "where": f"{_subset_name(s)} -> {_subset_name(t)}",
                        "detail": witness,
                    }
                )
        for s in present:
            for t in present:
                if not s < t:
                    continue
                for u in present:
                    if not t < u:
                        continue
                    if (s, t) in self.restrictions and (t, u) in self.restrictions \
                            and (s, u) in self.restrictions:
                        left = self.restrictions[(t, u)] @ self.restrictions[(s, t)]
                        if left != self.restrictions[(s, u)]:
                            out.append(
                                {
                                    "kind": "functoriality",
                                    "where": f"{_subset_name(s)} -> "
                                    f"{_subset_name(t)} -> {_subset_name(u)}",
                                    "detail": "composite disagrees with the "
                                    "direct restriction",
                                }
                            )
        return out

    def _tensor_shape_issue(self, dim, tensor):
        for (a, b), row in tensor.items():
            if not (0 <= a < dim and 0 <= b < dim):
                return f"structure constant indexed ({a}, {b}) out of range"
            for k in row:
                if not 0 <= k < dim:
                    return f"structure constant output {k} out of range"
        return None

    def _axiom_issue(self, dim, tensor):
        def op(x, y):
            out = {}
            for a, ca in x.items():
                for b, cb in y.items():
                    row = tensor.get((a, b))
                    if not row:
                        continue
                    c = ca * cb
                    for k, v in row.items():
                        svv = out.get(k, ZERO) + c * v
                        if svv:
                            out[k] = svv
                        else:
                            out.pop(k, None)
            return out

        for i in range(dim):
            for j in range(dim):
                ij = op({i: ONE}, {j: ONE})
                ji = op({j: ONE}, {i: ONE})
                if self.kind == "lie":
                    if {k: -v for k, v in ji.items()} != ij:
                        return f"antisymmetry fails on basis pair ({i}, {j})"
                else:
                    if ji != ij:
                        return f"commutativity fails on basis pair ({i}, {j})"
        for i in range(dim):
            for j in range(dim):
                for k in range(dim):
                    ei, ej, ek = {i: ONE}, {j: ONE}, {k: ONE}
                    if self.kind == "lie":
                        res = op(ei, op(ej, ek))
                        for vec in (op(ej, op(ei, ek)), op(op(ei, ej), ek)):
                            for a, c in vec.items():
                                v = res.get(a, ZERO) - c
                                if v:
                                    res[a] = v
                                else:
                                    res.pop(a, None)
                        if res:
                            return f"Jacobi fails on basis triple ({i}, {j}, {k})"
                    else:
                        if op(op(ei, ej), ek) != op(ei, op(ej, ek)):
                            return (
                                f"associativity fails on basis triple ({i}, {j}, {k})"
                            )
        return None

    def _morphism_witness(self, s, t, mat):
        dim = self.fibers[s][0]
        src, dst = self.fibers[s][1], self.fibers[t][1]
        cols = {}
        for (r, c), v in mat.entries.items():
            cols.setdefault(c, {})[r] = v

        def op(tensor, x, y):
            out = {}
            for a, ca in x.items():
                for b, cb in y.items():
                    row = tensor.get((a, b))
                    if not row:
                        continue
                    c = ca * cb
                    for k, v in row.items():
                        svv = out.get(k, ZERO) + c * v
                        if svv:
                            out[k] = svv
                        else:
                            out.pop(k, None)
            return out

        for i in range(dim):
            for j in range(dim):
                lhs = op(dst, cols.get(i, {}), cols.get(j, {}))
                rhs = {}
                for k, v in op(src, {i: ONE}, {j: ONE}).items():
                    for r, w in cols.get(k, {}).items():
                        svv = rhs.get(r, ZERO) + v * w
                        if svv:
                            rhs[r] = svv
                        else:
                            rhs.pop(r, None)
                if lhs != rhs:
                    return f"operation not preserved on basis pair ({i}, {j})"
        return None


def identity_cover(kind, tensor, dim, opens):
    """All fibers one algebra, all restrictions the identity."""
    fibers = {}
    restrictions = {}
    subsets = []
    for size in range(1, opens + 1):
        for s in combinations(range(opens), size):
            subsets.append(frozenset(s))
            fibers[frozenset(s)] = (dim, dict(tensor))
    eye = QMatrix.identity(dim)
    for s in subsets:
        for t in subsets:
            if s < t:
                restrictions[(s, t)] = eye
    return NerveSheaf(kind, opens, fibers, restrictions)


# ---------------------------------------------------------------------------
# the cosimplicial carrier of a cover
# ---------------------------------------------------------------------------

def level_components(opens, p):
    """Index functions ``[p] -> opens`` in lexicographic order."""
    return list(product(range(opens), repeat=p + 1))


def cover_module(opens, dim_of, rho_of, top):
    """Product-agnostic cosimplicial carrier of a cover.

    ``dim_of(S)`` gives the fiber dimension on a frozenset of opens and
    ``rho_of(S, T)`` the restriction matrix.  Returns the module together
    with per-level component tables ``(u, S, offset)`` and level offsets,
    so callers can lay their own operations over the same carrier.
    """
    components = []
    offsets = []
    dims = []
    for p in range(top + 1):
        table = []
        offs = {}
        total = 0
        for u in level_components(opens, p):
            s = frozenset(u)
            offs[u] = total
            table.append((u, s, total))
            total += dim_of(s)
        components.append(table)
        offsets.append(offs)
        dims.append(total)

    def act_matrix(f, p_src, p_dst):
        entries = {}
        src_offs = offsets[p_src]
        for v, t_set, v_off in components[p_dst]:
            u = tuple(v[f(k)] for k in range(p_src + 1))
            u_off = src_offs[u]
            block = rho_of(frozenset(u), t_set)
            for (r, c), val in block.entries.items():
                entries[(v_off + r, u_off + c)] = val
        return QMatrix(dims[p_dst], dims[p_src], entries)

    delta = {
        (p, i): act_matrix(face(p, i), p - 1, p)
        for p in range(1, top + 1)
        for i in range(p + 1)
    }
    sigma = {
        (p, i): act_matrix(degeneracy(p, i), p + 1, p)
        for p in range(top)
        for i in range(p + 1)
    }
    module = CosimplicialModule(dims, delta, sigma, check=False)
    return module, components


class CechAlgebra(CosimplicialAlgebra):
    """A cover's cosimplicial algebra, remembering its component layout."""

    __slots__ = ("nerve", "components")


def cech_cosimplicial(nerve, top):
    """The truncated cosimplicial algebra of a cover.

    Validates the sheaf to the depth the truncation needs and refuses on
    any diagnostic.  The resulting algebra's levels carry the componentwise
    operation; the cosimplicial identities are re-checked as exact matrix
    equations rather than trusted to follow from functoriality.
    """
    diagnostics = nerve.validate(depth=top)
    if diagnostics:
        first = diagnostics[0]
        raise InputError(
            f"invalid nerve data ({len(diagnostics)} issue(s)); first: "
            f"{first['kind']} at {first['where']}: {first['detail']}"
        )
    module, components = cover_module(
        nerve.opens, nerve.fiber_dim, nerve.rho, top
    )
    module.validate()
    tensors = []
    labels = []
    for p in range(top + 1):
        t = {}
        names = []
        for u, s, off in components[p]:
            tensor = nerve.tensor(s)
            for (a, b), row in tensor.items():
                t[(off + a, off + b)] = {off + k: v for k, v in row.items()}
            dim = nerve.fiber_dim(s)
            uname = ".".join(str(x) for x in u)
            names.extend(f"{uname}:{k}" for k in range(dim))
        tensors.append(t)
        labels.append(names)
    algebra = CechAlgebra(
        nerve.kind, module, tensors, labels=labels, check=False
    )
    algebra.nerve = nerve
    algebra.components = components
    return algebra


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def _parse_subset(token, line_no, opens):
    try:
        parts = [int(x) for x in token.split(",")]
    except ValueError:
        raise InputError(f"line {line_no}: bad subset {token!r}")
    if len(set(parts)) != len(parts) or parts != sorted(parts):
        raise InputError(
            f"line {line_no}: subset {token!r} must list distinct opens in order"
        )
    for x in parts:
        if not 0 <= x < opens:
            raise InputError(f"line {line_no}: open {x} out of range")
    return frozenset(parts)


def _parse_rational(token, line_no):
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"line {line_no}: bad rational {token!r}")


def parse_nerve(text):
    """Parse the ``nerve-sheaf v1`` text format; errors carry line numbers.

    Grammar (one directive per line, ``#`` comments, blank lines ignored):

        nerve-sheaf v1
        kind lie|com
        opens N
        fiber S dim d          # S like 0 or 0,2; opens ascending
        sc i j k value         # attaches to the last fiber
        restrict S T           # opens an entry block for rho_{S,T}
        entry r c value        # attaches to the last restrict
        restrict S T id        # identity restriction (dims must match)
        restrict S T zero      # explicitly zero restriction
    """
    kind = None
    opens = None
    fibers = {}
    restrictions = {}
    current_fiber = None
    current_restrict = None
    header_seen = False

    def close_restrict():
        nonlocal current_restrict
        if current_restrict is not None:
            (s, t), entries = current_restrict
            dim_s = fibers[s][0] if s in fibers else 0
            dim_t = fibers[t][0] if t in fibers else 0
            restrictions[(s, t)] = QMatrix(dim_t, dim_s, entries)
            current_restrict = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if not header_seen:
            if tokens != ["nerve-sheaf", "v1"]:
                raise InputError(
                    f"line {line_no}: expected header 'nerve-sheaf v1'"
                )
            header_seen = True
            continue
        if head == "kind":
            if len(tokens) != 2 or tokens[1] not in ("lie", "com"):
                raise InputError(f"line {line_no}: kind must be lie or com")
            if kind is not None:
                raise InputError(f"line {line_no}: duplicate kind")
            kind = tokens[1]
        elif head == "opens":
            if len(tokens) != 2 or not tokens[1].isdigit() or int(tokens[1]) < 1:
                raise InputError(f"line {line_no}: opens needs a positive count")
            if opens is not None:
                raise InputError(f"line {line_no}: duplicate opens")
            opens = int(tokens[1])
        elif head == "fiber":
            if opens is None:
                raise InputError(f"line {line_no}: fiber before opens")
            if len(tokens) != 4 or tokens[2] != "dim" or not tokens[3].isdigit():
                raise InputError(f"line {line_no}: expected 'fiber S dim d'")
            close_restrict()
            s = _parse_subset(tokens[1], line_no, opens)
            if s in fibers:
                raise InputError(
                    f"line {line_no}: duplicate fiber on {tokens[1]}"
                )
            fibers[s] = (int(tokens[3]), {})
            current_fiber = s
        elif head == "sc":
            if current_fiber is None:
                raise InputError(f"line {line_no}: sc before any fiber")
            if len(tokens) != 5:
                raise InputError(f"line {line_no}: expected 'sc i j k value'")
            dim, tensor = fibers[current_fiber]
            try:
                i, j, k = int(tokens[1]), int(tokens[2]), int(tokens[3])
            except ValueError:
                raise InputError(f"line {line_no}: bad structure-constant index")
            if not all(0 <= x < dim for x in (i, j, k)):
                raise InputError(
                    f"line {line_no}: structure-constant index out of range "
                    f"for dimension {dim}"
                )
            v = _parse_rational(tokens[4], line_no)
            row = tensor.setdefault((i, j), {})
            row[k] = row.get(k, ZERO) + v
            if not row[k]:
                del row[k]
            if not row:
                del tensor[(i, j)]
        elif head == "restrict":
            if opens is None:
                raise InputError(f"line {line_no}: restrict before opens")
            if len(tokens) not in (3, 4):
                raise InputError(
                    f"line {line_no}: expected 'restrict S T [id|zero]'"
                )
            close_restrict()
            current_fiber = None
            s = _parse_subset(tokens[1], line_no, opens)
            t = _parse_subset(tokens[2], line_no, opens)
            if not s < t:
                raise InputError(
                    f"line {line_no}: {tokens[1]} is not a proper subset of "
                    f"{tokens[2]}"
                )
            if (s, t) in restrictions:
                raise InputError(f"line {line_no}: duplicate restriction")
            if s not in fibers or t not in fibers:
                raise InputError(
                    f"line {line_no}: restriction references an undeclared fiber"
                )
            if len(tokens) == 4:
                if tokens[3] == "id":
                    if fibers[s][0] != fibers[t][0]:
                        raise InputError(
                            f"line {line_no}: identity restriction needs equal "
                            f"dimensions ({fibers[s][0]} vs {fibers[t][0]})"
                        )
                    restrictions[(s, t)] = QMatrix.identity(fibers[s][0])
                elif tokens[3] == "zero":
                    restrictions[(s, t)] = QMatrix(fibers[t][0], fibers[s][0])
                else:
                    raise InputError(
                        f"line {line_no}: unknown restriction form {tokens[3]!r}"
                    )
            else:
                current_restrict = ((s, t), {})
        elif head == "entry":
            if current_restrict is None:
                raise InputError(f"line {line_no}: entry outside a restrict block")
            if len(tokens) != 4:
                raise InputError(f"line {line_no}: expected 'entry r c value'")
            (s, t), entries = current_restrict
            try:
                r, c = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise InputError(f"line {line_no}: bad entry position")
            if not (0 <= r < fibers[t][0] and 0 <= c < fibers[s][0]):
                raise InputError(f"line {line_no}: entry position out of range")
            if (r, c) in entries:
                raise InputError(f"line {line_no}: duplicate entry ({r}, {c})")
            v = _parse_rational(tokens[3], line_no)
            if v:
                entries[(r, c)] = v
        else:
            raise InputError(f"line {line_no}: unknown directive {head!r}")
    if not header_seen:
        raise InputError("line 1: expected header 'nerve-sheaf v1'")
    close_restrict()
    if kind is None:
        raise InputError("missing 'kind' directive")
    if opens is None:
        raise InputError("missing 'opens' directive")
    if not fibers:
        raise InputError("no fibers declared")
    return NerveSheaf(kind, opens, fibers, restrictions)


def load_nerve(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_nerve(fh.read())


def format_nerve(nerve):
    """Render a sheaf back to the text format (inverse of :func:`parse_nerve`)."""
    lines = ["nerve-sheaf v1", f"kind {nerve.kind}", f"opens {nerve.opens}"]
    eye_cache = {}
    for s in sorted(nerve.fibers, key=lambda x: (len(x), sorted(x))):
        dim, tensor = nerve.fibers[s]
        lines.append(f"fiber {_subset_name(s)} dim {dim}")
        for (i, j), row in sorted(tensor.items()):
            for k, v in sorted(row.items()):
                lines.append(f"sc {i} {j} {k} {v}")
    for (s, t) in sorted(
        nerve.restrictions, key=lambda st: (sorted(st[0]), sorted(st[1]))
    ):
        mat = nerve.restrictions[(s, t)]
        dim_s = nerve.fibers[s][0]
        eye = eye_cache.setdefault(dim_s, QMatrix.identity(dim_s))
        name = f"restrict {_subset_name(s)} {_subset_name(t)}"
        if mat.nrows == mat.ncols == dim_s and mat == eye:
            lines.append(f"{name} id")
        elif not mat.entries:
            lines.append(f"{name} zero")
        else:
            lines.append(name)
            for (r, c), v in sorted(mat.entries.items()):
                lines.append(f"entry {r} {c} {v}")
    return "\n".join(lines) + "\n"
