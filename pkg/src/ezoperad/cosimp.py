"""Truncated cosimplicial modules over Q and their chain-level machinery.

A cosimplicial module here is a functor from the ordinal category to
finite-dimensional Q-vector spaces, stored through level ``top`` as
coface and codegeneracy matrices.  On top of that this module provides:

* Moore complexes (alternating sums of cofaces, differential degree +1);
* the graded chain object whose degree ``-m`` piece is the representable
  module on ``[m]`` (levelwise: chains on the standard simplices);
* levelwise tensor powers with Koszul-signed differentials;
* the truncated hom complex out of the chain object, normalized so that
  for a module concentrated in degree 0 it reproduces the Moore complex
  matrix for matrix (the normalization multiplies the degree-d identification
  by ``(-1)^(d(d+1)/2)``).

Levels are ``0..top``.  Complex degrees of graded pieces are non-positive
for the chain object and its tensor powers.  All bases are ordered
deterministically: hom-set bases lexicographically, tensor bases by
degree composition then row-major factor index.
"""

from fractions import Fraction
from itertools import product

from .errors import InputError, InvariantError
from .exactlin import QMatrix, FiniteComplex
from .simplexcat import MonotoneMap, enumerate_maps, epi_mono, face, hom_size

ONE = Fraction(1)


def kron(a, b):
    """Kronecker product, row-major: index (i_a, i_b) -> i_a * b_dim + i_b."""
    out = QMatrix(a.nrows * b.nrows, a.ncols * b.ncols)
    for (ra, ca), va in a.entries.items():
        for (rb, cb), vb in b.entries.items():
            out.entries[(ra * b.nrows + rb, ca * b.ncols + cb)] = va * vb
    return out


def kron_many(mats):
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


class CosimplicialModule:
    """A cosimplicial Q-module truncated at level ``top``.

    ``delta[(p, i)]`` is the matrix of the coface ``[p-1] -> [p]`` omitting
    ``i`` (shape ``dims[p] x dims[p-1]``, ``1 <= p <= top``);
    ``sigma[(p, i)]`` the matrix of the codegeneracy ``[p+1] -> [p]``
    repeating ``i`` (shape ``dims[p] x dims[p+1]``, ``0 <= p < top``).
    """

    def __init__(self, dims, delta, sigma, check=True):
        self.top = len(dims) - 1
        if self.top < 0:
            raise InputError("need at least level 0")
        self.dims = tuple(dims)
        self.delta = dict(delta)
        self.sigma = dict(sigma)
        self._act_cache = {}
        for p in range(1, self.top + 1):
            for i in range(p + 1):
                m = self.delta.get((p, i))
                if m is None:
                    raise InputError(f"missing coface ({p},{i})")
                if (m.nrows, m.ncols) != (self.dims[p], self.dims[p - 1]):
                    raise InputError(f"coface ({p},{i}) has wrong shape")
        for p in range(self.top):
            for i in range(p + 1):
                m = self.sigma.get((p, i))
                if m is None:
                    raise InputError(f"missing codegeneracy ({p},{i})")
                if (m.nrows, m.ncols) != (self.dims[p], self.dims[p + 1]):
                    raise InputError(f"codegeneracy ({p},{i}) has wrong shape")
        if check:
            self.validate()

    def validate(self):
        """Check the cosimplicial identities as exact matrix equations."""
        d, s = self.delta, self.sigma
        for p in range(2, self.top + 1):
            for j in range(p + 1):
                for i in range(j):
                    if d[(p, j)] @ d[(p - 1, i)] != d[(p, i)] @ d[(p - 1, j - 1)]:
                        raise InvariantError(f"coface identity fails at p={p}, i={i}, j={j}")
        for p in range(self.top - 1):
            for j in range(p + 1):
                for i in range(j + 1):
                    if s[(p, i)] @ s[(p + 1, j + 1)] != s[(p, j)] @ s[(p + 1, i)]:
                        raise InvariantError(f"codegeneracy identity fails at p={p}, i={i}, j={j}")
        for p in range(1, self.top + 1):
            for j in range(p):
                for i in range(p + 1):
                    lhs = s[(p - 1, j)] @ d[(p, i)]
                    if i in (j, j + 1):
                        rhs = QMatrix.identity(self.dims[p - 1])
                    elif i < j:
                        rhs = d[(p - 1, i)] @ s[(p - 2, j - 1)]
                    else:
                        rhs = d[(p - 1, i - 1)] @ s[(p - 2, j)]
                    if lhs != rhs:
                        raise InvariantError(f"mixed identity fails at p={p}, i={i}, j={j}")

    def act(self, f):
        """Matrix of the functor on an arbitrary monotone map ``f``.

        Computed by the epi-mono factorization: codegeneracies at the
        doubled positions (innermost first), then cofaces at the missing
        values in ascending order.  Cached per map.
        """
        key = (f.target, f.values)
        cached = self._act_cache.get(key)
        if cached is not None:
            return cached
        if f.source > self.top or f.target > self.top:
            raise InputError("monotone map exceeds the truncation level")
        epi, mono = epi_mono(f)
        mat = QMatrix.identity(self.dims[f.source])
        lvl = f.source
        doubles = [j for j in range(epi.source) if epi.values[j] == epi.values[j + 1]]
        for j in reversed(doubles):
            mat = self.sigma[(lvl - 1, j)] @ mat
            lvl -= 1
        missing = sorted(set(range(f.target + 1)) - set(mono.values))
        for i in missing:
            mat = self.delta[(lvl + 1, i)] @ mat
            lvl += 1
        assert lvl == f.target
        self._act_cache[key] = mat
        return mat

    def moore(self):
        """Moore complex: degrees 0..top, d^p the alternating coface sum."""
        d = {}
        for p in range(self.top):
            m = QMatrix(self.dims[p + 1], self.dims[p])
            for i in range(p + 2):
                term = self.delta[(p + 1, i)]
                m = m + (term if i % 2 == 0 else term.scale(-1))
            d[p] = m
        return FiniteComplex(0, self.top, dict(enumerate(self.dims)), d)


def constant_module(dim, top):
    """All levels ``Q^dim``, every structure map the identity."""
    eye = QMatrix.identity(dim)
    delta = {(p, i): eye for p in range(1, top + 1) for i in range(p + 1)}
    sigma = {(p, i): eye for p in range(top) for i in range(p + 1)}
    return CosimplicialModule([dim] * (top + 1), delta, sigma, check=False)


def representable(m, top):
    """The module whose level ``n`` has basis the monotone maps ``[m] -> [n]``.

    Structure maps act by postcomposition, so every matrix is a 0/1
    basis-to-basis map.
    """

    def post(g, p_from, p_to):
        src = enumerate_maps(m, p_from)
        tgt = {f.values: k for k, f in enumerate(enumerate_maps(m, p_to))}
        mat = QMatrix(len(tgt), len(src))
        for c, f in enumerate(src):
            mat.entries[(tgt[g.compose(f).values], c)] = ONE
        return mat

    dims = [hom_size(m, n) for n in range(top + 1)]
    delta = {
        (p, i): post(face(p, i), p - 1, p)
        for p in range(1, top + 1)
        for i in range(p + 1)
    }
    sigma = {
        (p, i): post(MonotoneMap(p, tuple(k if k <= i else k - 1 for k in range(p + 2))), p + 1, p)
        for p in range(top)
        for i in range(p + 1)
    }
    return CosimplicialModule(dims, delta, sigma, check=False)


def direct_sum(modules):
    if not modules:
        raise InputError("empty direct sum")
    top = modules[0].top
    if any(a.top != top for a in modules):
        raise InputError("summands have different truncation levels")

    def block_diag(mats, rdims, cdims):
        out = QMatrix(sum(rdims), sum(cdims))
        ro = co = 0
        for m, rd, cd in zip(mats, rdims, cdims):
            for (r, c), x in m.entries.items():
                out.entries[(ro + r, co + c)] = x
            ro += rd
            co += cd
        return out

    dims = [sum(a.dims[n] for a in modules) for n in range(top + 1)]
    delta = {}
    sigma = {}
    for p in range(1, top + 1):
        rd = [a.dims[p] for a in modules]
        cd = [a.dims[p - 1] for a in modules]
        for i in range(p + 1):
            delta[(p, i)] = block_diag([a.delta[(p, i)] for a in modules], rd, cd)
    for p in range(top):
        rd = [a.dims[p] for a in modules]
        cd = [a.dims[p + 1] for a in modules]
        for i in range(p + 1):
            sigma[(p, i)] = block_diag([a.sigma[(p, i)] for a in modules], rd, cd)
    return CosimplicialModule(dims, delta, sigma, check=False)


def conjugate(module, units, inverses):
    """Twist by invertible level transformations U_n (with given inverses)."""
    top = module.top
    for n in range(top + 1):
        if (units[n] @ inverses[n]) != QMatrix.identity(module.dims[n]):
            raise InputError(f"unit at level {n} is not invertible with the given inverse")
    delta = {
        (p, i): units[p] @ m @ inverses[p - 1] for (p, i), m in module.delta.items()
    }
    sigma = {
        (p, i): units[p] @ m @ inverses[p + 1] for (p, i), m in module.sigma.items()
    }
    return CosimplicialModule(module.dims, delta, sigma, check=False)


class GradedCosimplicialModule:
    """A finite family of cosimplicial modules in complex degrees, with a
    levelwise differential of degree +1 commuting with the structure maps."""

    def __init__(self, pieces, diff, check=True):
        if not pieces:
            raise InputError("graded module needs at least one piece")
        self.pieces = dict(pieces)
        self.diff = {d: dict(mats) for d, mats in diff.items()}
        tops = {a.top for a in self.pieces.values()}
        if len(tops) != 1:
            raise InputError("pieces have different truncation levels")
        self.top = tops.pop()
        self.lo = min(self.pieces)
        self.hi = max(self.pieces)
        if check:
            self.validate()

    def piece_dim(self, d, n):
        a = self.pieces.get(d)
        return a.dims[n] if a is not None else 0

    @classmethod
    def from_module(cls, module, degree=0):
        """A plain cosimplicial module viewed as concentrated in one degree."""
        return cls({degree: module}, {}, check=False)

    def validate(self):
        for a in self.pieces.values():
            a.validate()
        for d, mats in self.diff.items():
            src, tgt = self.pieces.get(d), self.pieces.get(d + 1)
            if src is None or tgt is None:
                raise InputError(f"differential at degree {d} without both pieces")
            for n in range(self.top + 1):
                m = mats.get(n)
                if m is None or (m.nrows, m.ncols) != (tgt.dims[n], src.dims[n]):
                    raise InputError(f"differential at degree {d}, level {n} malformed")
            # commutes with cofaces and codegeneracies
            for p in range(1, self.top + 1):
                for i in range(p + 1):
                    if mats[p] @ src.delta[(p, i)] != tgt.delta[(p, i)] @ mats[p - 1]:
                        raise InvariantError(
                            f"differential fails to commute with coface ({p},{i}) at degree {d}"
                        )
            for p in range(self.top):
                for i in range(p + 1):
                    if mats[p] @ src.sigma[(p, i)] != tgt.sigma[(p, i)] @ mats[p + 1]:
                        raise InvariantError(
                            f"differential fails to commute with codegeneracy ({p},{i}) at degree {d}"
                        )
        for d in self.diff:
            nxt = self.diff.get(d + 1)
            if nxt:
                for n in range(self.top + 1):
                    if not (nxt[n] @ self.diff[d][n]).is_zero():
                        raise InvariantError(f"d o d != 0 at degree {d}, level {n}")


def chain_object(top, depth=None):
    """The chain object: degree ``-m`` piece is the representable module on
    ``[m]`` for ``0 <= m <= depth`` (default ``top``), each truncated at
    level ``top``; the differential precomposes with the alternating sum of
    cofaces ``[m-1] -> [m]``.

    The hom complex out of this object with column bound B reports the true
    cohomology at degree e only when ``depth >= B + 1 - e``: with shallower
    pieces the top column contributes spurious classes because the
    contracting direction is cut off.
    """
    if depth is None:
        depth = top
    pieces = {-m: representable(m, top) for m in range(depth + 1)}
    diff = {}
    for m in range(1, depth + 1):
        mats = {}
        for n in range(top + 1):
            src = enumerate_maps(m, n)
            tgt = {f.values: k for k, f in enumerate(enumerate_maps(m - 1, n))}
            mat = QMatrix(len(tgt), len(src))
            for c, p in enumerate(src):
                for j in range(m + 1):
                    r = tgt[p.compose(face(m, j)).values]
                    x = mat.entries.get((r, c), 0) + (ONE if j % 2 == 0 else -ONE)
                    if x:
                        mat.entries[(r, c)] = x
                    else:
                        mat.entries.pop((r, c), None)
            mats[n] = mat
        diff[-m] = mats
    return GradedCosimplicialModule(pieces, diff, check=False)


def _compositions(total, n, degrees):
    """All n-tuples over the sorted degree list summing to total, lex order."""
    if n == 1:
        return [(total,)] if total in degrees else []
    out = []
    for d in degrees:
        for rest in _compositions(total - d, n - 1, degrees):
            out.append((d,) + rest)
    return out


class _TensorLayout:
    """Basis layout of one level of one degree piece of a tensor power:
    groups by degree composition, row-major within a group."""

    def __init__(self, x, comps, level):
        self.comps = comps
        self.group_dims = []
        self.offsets = []
        off = 0
        for comp in comps:
            self.offsets.append(off)
            gd = 1
            for d in comp:
                gd *= x.piece_dim(d, level)
            self.group_dims.append(gd)
            off += gd
        self.dim = off


def tensor_power(x, n, floor=None):
    """Levelwise n-th tensor power with Koszul-signed differential.

    Degree pieces with total degree below ``floor`` (default: the lowest
    degree of ``x``) are dropped.
    """
    if n < 1:
        raise InputError("tensor power needs n >= 1")
    if floor is None:
        floor = x.lo
    degrees = sorted(x.pieces)
    top = x.top
    piece_comps = {}
    for e in range(n * x.lo, n * x.hi + 1):
        if e < floor:
            continue
        comps = _compositions(e, n, degrees)
        if comps:
            piece_comps[e] = comps
    layouts = {
        (e, lvl): _TensorLayout(x, comps, lvl)
        for e, comps in piece_comps.items()
        for lvl in range(top + 1)
    }

    def assemble_structure(e, kind, p, i):
        # block-diagonal over compositions; kron of factor structure maps
        if kind == "delta":
            src_lvl, tgt_lvl = p - 1, p
        else:
            src_lvl, tgt_lvl = p + 1, p
        src = layouts[(e, src_lvl)]
        tgt = layouts[(e, tgt_lvl)]
        out = QMatrix(tgt.dim, src.dim)
        for g, comp in enumerate(src.comps):
            mats = []
            for d in comp:
                piece = x.pieces[d]
                mats.append(piece.delta[(p, i)] if kind == "delta" else piece.sigma[(p, i)])
            block = kron_many(mats)
            ro, co = tgt.offsets[g], src.offsets[g]
            for (r, c), v in block.entries.items():
                out.entries[(ro + r, co + c)] = v
        return out

    pieces = {}
    for e, comps in piece_comps.items():
        dims = [layouts[(e, lvl)].dim for lvl in range(top + 1)]
        delta = {
            (p, i): assemble_structure(e, "delta", p, i)
            for p in range(1, top + 1)
            for i in range(p + 1)
        }
        sigma = {
            (p, i): assemble_structure(e, "sigma", p, i)
            for p in range(top)
            for i in range(p + 1)
        }
        pieces[e] = CosimplicialModule(dims, delta, sigma, check=False)

    diff = {}
    for e in piece_comps:
        if e + 1 not in piece_comps:
            continue
        tgt_index = {comp: g for g, comp in enumerate(piece_comps[e + 1])}
        mats = {}
        for lvl in range(top + 1):
            src = layouts[(e, lvl)]
            tgt = layouts[(e + 1, lvl)]
            out = QMatrix(tgt.dim, src.dim)
            for g, comp in enumerate(src.comps):
                for k in range(n):
                    dk = comp[k]
                    if dk + 1 not in x.pieces or x.diff.get(dk) is None:
                        continue
                    comp2 = comp[:k] + (dk + 1,) + comp[k + 1 :]
                    g2 = tgt_index.get(comp2)
                    if g2 is None:
                        continue
                    sign = -ONE if sum(comp[:k]) % 2 else ONE
                    mats_k = [
                        x.diff[dk][lvl] if t == k
                        else QMatrix.identity(x.piece_dim(comp[t], lvl))
                        for t in range(n)
                    ]
                    block = kron_many(mats_k).scale(sign)
                    ro, co = tgt.offsets[g2], src.offsets[g]
                    for (r, c), v in block.entries.items():
                        y = out.entries.get((ro + r, co + c), 0) + v
                        if y:
                            out.entries[(ro + r, co + c)] = y
                        else:
                            out.entries.pop((ro + r, co + c), None)
            mats[lvl] = out
        diff[e] = mats
    return GradedCosimplicialModule(pieces, diff, check=False)


def hom_layout(t, d, bound):
    """Block layout of the degree-d component of the hom complex: a list of
    (column m, piece degree d-m, dimension, offset), m ascending."""
    out = []
    off = 0
    for m in range(bound + 1):
        dim = t.piece_dim(d - m, m)
        if dim:
            out.append((m, d - m, dim, off))
            off += dim
    return out


def hom_complex(t, bound=None):
    """The truncated hom complex out of the chain object, as a FiniteComplex.

    Degree-d component: product over columns ``m <= bound`` of the level-m
    value of the degree ``d-m`` piece of ``t``.  The differential combines
    the internal differential of ``t`` (within a column) with the alternating
    coface action (column ``m-1`` to ``m``); the identification is normalized
    per degree by ``(-1)^(d(d+1)/2)``, which makes the coface part sign-free
    and the internal part carry ``(-1)^(d+1)``.  For ``t`` concentrated in
    degree 0 the output equals the Moore complex of the piece exactly.
    """
    if bound is None:
        bound = t.top
    if bound > t.top:
        raise InputError("bound exceeds the truncation level of the pieces")
    lo = t.lo
    hi = t.hi + bound
    dims = {}
    layouts = {}
    for d in range(lo, hi + 1):
        layouts[d] = hom_layout(t, d, bound)
        dims[d] = sum(b[2] for b in layouts[d])
    diff = {}
    for d in range(lo, hi):
        src, tgt = layouts[d], layouts[d + 1]
        tgt_off = {m: off for (m, _, _, off) in tgt}
        tgt_dim = {m: dim for (m, _, dim, _) in tgt}
        mat = QMatrix(dims[d + 1], dims[d])
        internal_sign = -ONE if d % 2 == 0 else ONE  # (-1)^(d+1)
        for m, pd, dim, off in src:
            inner = t.diff.get(pd)
            if inner is not None and m in tgt_off:
                block = inner[m].scale(internal_sign)
                ro = tgt_off[m]
                for (r, c), v in block.entries.items():
                    y = mat.entries.get((ro + r, off + c), 0) + v
                    if y:
                        mat.entries[(ro + r, off + c)] = y
                    else:
                        mat.entries.pop((ro + r, off + c), None)
            if m + 1 in tgt_off and (d + 1) - (m + 1) == pd and m + 1 <= bound:
                piece = t.pieces[pd]
                ro = tgt_off[m + 1]
                for i in range(m + 2):
                    block = piece.delta[(m + 1, i)]
                    s = ONE if i % 2 == 0 else -ONE
                    for (r, c), v in block.entries.items():
                        y = mat.entries.get((ro + r, off + c), 0) + s * v
                        if y:
                            mat.entries[(ro + r, off + c)] = y
                        else:
                            mat.entries.pop((ro + r, off + c), None)
        diff[d] = mat
    return FiniteComplex(lo, hi, dims, diff)


def yoneda_morphism(module, m, a):
    """The morphism out of the representable module on ``[m]`` classified by
    a level-m element: per level n, the matrix sending the basis map f to
    the functor action of f applied to ``a``.  Returns a dict level -> QMatrix.
    """
    if not 0 <= m <= module.top:
        raise InputError(f"level {m} outside truncation 0..{module.top}")
    col = {i: Fraction(v) for i, v in a.items() if v}
    out = {}
    for n in range(module.top + 1):
        maps = enumerate_maps(m, n)
        mat = QMatrix(module.dims[n], len(maps))
        for c, f in enumerate(maps):
            img = module.act(f).apply(col)
            for r, v in img.items():
                mat.entries[(r, c)] = v
        out[n] = mat
    return out
