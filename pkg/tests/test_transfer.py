"""Transferred operations on cosimplicial algebras.

The cover-style backend here is built by hand, independently of any cover
machinery in the package, so it doubles as a cross-check for builders added
later.
"""

import random
from fractions import Fraction
from itertools import product

import pytest

from ezoperad.cosimp import CosimplicialModule
from ezoperad.errors import InputError, InvariantError, VerificationError
from ezoperad.exactlin import QMatrix
from ezoperad.operad import (
    LieChainOp,
    _expand_tree,
    bracket_cocycle,
    jacobiator,
    left_normed_tree,
    random_chain_op,
)
from ezoperad.simplexcat import degeneracy, face
from ezoperad.transfer import (
    CosimplicialAlgebra,
    F_apply,
    anchored_chain_parts,
    check_homotopy_jacobi,
    cohomology_algebra,
    constant_algebra,
    gv_add,
    gv_is_zero,
    solve_homotopy,
    transferred_bracket,
    transferred_product,
)
from ezoperad.transfer import _add_jacobi, _homotopy_pair

ONE = Fraction(1)

SL2 = {
    (0, 1): {2: ONE},
    (1, 0): {2: -ONE},
    (0, 2): {0: Fraction(-2)},
    (2, 0): {0: Fraction(2)},
    (1, 2): {1: Fraction(2)},
    (2, 1): {1: Fraction(-2)},
}

DUAL_NUMBERS = {
    (0, 0): {0: ONE},
    (0, 1): {1: ONE},
    (1, 0): {1: ONE},
}


def cover_algebra(kind, tensor, dim, opens, top, check=True):
    """Cover-style cosimplicial algebra with identity restriction maps.

    Level p is one fiber copy per function [p] -> opens; a monotone map f
    sends the u-component of the source to every v-component with
    v . f == u.  Everything is written out as explicit matrices.
    """
    def basis(p):
        return list(product(range(opens), repeat=p + 1))

    def act_matrix(f, p_src, p_dst):
        src, dst = basis(p_src), basis(p_dst)
        pos = {u: i for i, u in enumerate(src)}
        entries = {}
        for vi, v in enumerate(dst):
            u = tuple(v[f(k)] for k in range(p_src + 1))
            ui = pos[u]
            for k in range(dim):
                entries[(vi * dim + k, ui * dim + k)] = ONE
        return QMatrix(len(dst) * dim, len(src) * dim, entries)

    dims = [opens ** (p + 1) * dim for p in range(top + 1)]
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
    tensors = []
    for p in range(top + 1):
        t = {}
        for ui in range(opens ** (p + 1)):
            off = ui * dim
            for (a, b), row in tensor.items():
                t[(off + a, off + b)] = {off + k: v for k, v in row.items()}
        tensors.append(t)
    labels = [
        [f"{u}:{k}" for u in basis(p) for k in range(dim)]
        for p in range(top + 1)
    ]
    return CosimplicialAlgebra(kind, module, tensors, labels=labels, check=check)


def d_vec(B, level, vec):
    mat = B.differential(level)
    out = {}
    if mat is None:
        return out
    cols = {}
    for (r, c), v in mat.entries.items():
        cols.setdefault(c, {})[r] = v
    for j, c in vec.items():
        for r, w in cols.get(j, {}).items():
            s = out.get(r, Fraction(0)) + c * w
            if s:
                out[r] = s
            else:
                out.pop(r, None)
    return out


def random_vec(rng, dim, terms=3):
    out = {}
    for _ in range(terms):
        out[rng.randrange(dim)] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    return {i: c for i, c in out.items() if c}


def random_lie_valued(rng, arity, degree, top, parts=2):
    """A bracket-valued cooperation with random chain components."""
    words = {}
    for seq in [tuple(range(1, arity + 1)), (1,) + tuple(range(arity, 1, -1))][:parts]:
        z = random_chain_op(rng, arity, degree, top, terms=3)
        for w, c in _expand_tree(left_normed_tree(seq)).items():
            piece = z.scale(Fraction(int(c)))
            words[w] = words[w] + piece if w in words else piece
    return LieChainOp(arity, degree, top, words)


class TestCosimplicialAlgebra:
    def test_constant_sl2_validates(self):
        B = constant_algebra("lie", SL2, 3, 3)
        assert B.top == 3 and B.dims == (3, 3, 3, 3)

    def test_broken_antisymmetry_rejected(self):
        bad = dict(SL2)
        bad[(1, 0)] = {2: ONE}
        with pytest.raises(InvariantError):
            constant_algebra("lie", bad, 3, 2)

    def test_non_morphism_structure_map_rejected(self):
        from ezoperad.cosimp import constant_module

        module = constant_module(3, 2)
        tensors = [dict(SL2) for _ in range(3)]
        tensors[1] = {k: {a: 2 * v for a, v in row.items()} for k, row in SL2.items()}
        with pytest.raises(InvariantError):
            CosimplicialAlgebra("lie", module, tensors)

    def test_cover_algebra_validates(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        assert B.dims == (6, 12, 24, 48)
        assert B.label(0, 0) == "(0,):0"

    def test_op2_matches_tensor(self):
        B = cover_algebra("lie", SL2, 3, 2, 2)
        # bracket inside one component: [e, f] = h on the (0, 0) patch
        out = B.op2(1, {0: ONE}, {1: ONE})
        assert out == {2: ONE}
        # mismatched components multiply to zero
        assert B.op2(1, {0: ONE}, {4: ONE}) == {}

    def test_dual_numbers_cover_validates(self):
        B = cover_algebra("com", DUAL_NUMBERS, 2, 2, 2)
        assert B.op2(0, {0: ONE, 1: ONE}, {1: ONE}) == {1: ONE}


class TestAnchoredParts:
    def test_bracket_cocycle_single_part(self):
        c = bracket_cocycle(2)
        parts = anchored_chain_parts(c)
        assert len(parts) == 1
        seq, z = parts[0]
        assert seq == (1, 2)
        assert z == c.words[(1, 2)]

    def test_non_bracket_valued_rejected(self):
        from ezoperad.operad import aw_decomposition

        aw = aw_decomposition(2)
        lone = LieChainOp(2, 0, 2, {(1, 2): aw})
        with pytest.raises(InputError):
            anchored_chain_parts(lone)

    def test_jacobiator_recombines(self):
        j = jacobiator(3)
        parts = anchored_chain_parts(j)
        assert 1 <= len(parts) <= 2
        seqs = [seq for seq, _ in parts]
        assert all(seq[0] == 1 for seq in seqs)


class TestDegreeZeroReproduction:
    """Level-0 inputs must recover the plain fiber operations."""

    def test_constant_bracket_is_fiber_bracket(self):
        B = constant_algebra("lie", SL2, 3, 3)
        bk = transferred_bracket(B)
        assert bk.arity == 2 and bk.degree == 0
        out = bk.apply([{0: {0: ONE}}, {0: {1: ONE}}])
        assert out == {0: {2: ONE}}
        out = bk.apply([{0: {2: ONE}}, {0: {0: ONE}}])
        assert out == {0: {0: Fraction(2)}}

    def test_cover_bracket_level_zero(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        bk = transferred_bracket(B)
        # [e on patch 0, f on patch 0] = h on patch 0
        out = bk.apply([{0: {0: ONE}}, {0: {1: ONE}}])
        assert out == {0: {2: ONE}}
        # patches disagree: zero
        out = bk.apply([{0: {0: ONE}}, {0: {4: ONE}}])
        assert gv_is_zero(out)

    def test_cover_product_level_zero(self):
        B = cover_algebra("com", DUAL_NUMBERS, 2, 2, 3)
        prod = transferred_product(B)
        out = prod.apply([{0: {0: ONE}}, {0: {1: ONE}}])
        assert out == {0: {1: ONE}}

    def test_backend_kind_is_enforced(self):
        B = constant_algebra("lie", SL2, 3, 2)
        with pytest.raises(InputError):
            transferred_product(B)
        C = cover_algebra("com", DUAL_NUMBERS, 2, 2, 2)
        with pytest.raises(InputError):
            F_apply(bracket_cocycle(2), C)

    def test_truncation_mismatch_rejected(self):
        B = constant_algebra("lie", SL2, 3, 2)
        with pytest.raises(InputError):
            F_apply(bracket_cocycle(3), B)


class TestChainMapProperty:
    """F intertwines the chain differential with the coface differential.

    The calibrated identity, with no extra evaluation sign on the terms, is

        F(dy) = (-1)**(deg y + 1) * d(F(y))
                + sum_i (-1)**(l_1 + ... + l_(i-1)) * F(y)(..., d b_i, ...)

    exactly the slot signs of the homotopy Jacobi residual.  Level tuples
    touching the truncation from above are excluded, since terms consuming
    levels beyond the top are cut off there.
    """

    def _check(self, B, y, rng, tuples):
        n = y.arity
        Fy = F_apply(y, B)
        Fdy = F_apply(y.diff(), B)
        coface_sign = ONE if y.degree % 2 else -ONE
        for levels in tuples:
            vecs = [
                {lvl: random_vec(rng, B.dims[lvl])} for lvl in levels
            ]
            if any(not v[lvl] for v, lvl in zip(vecs, levels)):
                continue
            lhs = Fdy.apply(vecs)
            rhs = {}
            dFy = Fy.apply(vecs)
            for m, piece in dFy.items():
                img = d_vec(B, m, piece)
                gv_add(rhs, m + 1, img, coface_sign)
            prefix = 0
            for k in range(n):
                dv = d_vec(B, levels[k], vecs[k][levels[k]])
                if dv:
                    shifted = list(vecs)
                    shifted[k] = {levels[k] + 1: dv}
                    term = Fy.apply(shifted)
                    slot_sign = -ONE if prefix % 2 else ONE
                    for m, piece in term.items():
                        gv_add(rhs, m, piece, slot_sign)
                prefix += levels[k]
            diff = dict(lhs)
            for m, piece in rhs.items():
                gv_add(diff, m, piece, -ONE)
            assert gv_is_zero(diff), f"chain map fails at levels {levels}"

    def test_bracket_cocycle_on_cover(self):
        rng = random.Random(7)
        B = cover_algebra("lie", SL2, 3, 2, 3)
        c = bracket_cocycle(3)
        tuples = [(a, b) for a in range(3) for b in range(3)]
        self._check(B, c, rng, tuples)

    def test_random_lie_valued_on_cover(self):
        rng = random.Random(11)
        B = cover_algebra("lie", SL2, 3, 2, 3)
        for degree in (0, -1):
            y = random_lie_valued(rng, 2, degree, 3)
            tuples = [(a, b) for a in range(3) for b in range(3)]
            self._check(B, y, rng, tuples)

    def test_homotopy_on_cover(self):
        rng = random.Random(13)
        B = cover_algebra("lie", SL2, 3, 2, 3)
        _, jp, _ = _homotopy_pair(3, "leibniz")
        tuples = [
            (a, b, c)
            for a in range(3)
            for b in range(3)
            for c in range(3)
            if a + b + c <= 3
        ]
        self._check(B, jp, rng, tuples)

    def test_product_on_com_cover(self):
        rng = random.Random(17)
        B = cover_algebra("com", DUAL_NUMBERS, 2, 2, 3)
        from ezoperad.operad import aw_decomposition

        y = aw_decomposition(3)
        tuples = [(a, b) for a in range(3) for b in range(3)]
        self._check(B, y, rng, tuples)


class TestOperadicCompatibility:
    """F of the chain Jacobi defect equals the Jacobi combination of F."""

    @pytest.mark.parametrize("form", ["leibniz", "cyclic"])
    def test_jacobiator_matches_bracket_blocks(self, form):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        j = jacobiator(3, form)
        Fj = F_apply(j, B)
        bk = transferred_bracket(B)
        for levels in product(range(2), repeat=3):
            if sum(levels) > 3:
                continue
            acc = {}
            _add_jacobi(acc, bk, levels, form, ONE)
            acc = {t: row for t, row in acc.items() if row}
            assert acc == Fj.block(levels), f"mismatch at {levels}"


class TestHomotopyJacobi:
    def test_cover_window_passes(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        report = check_homotopy_jacobi(B, 1)
        assert report["passed"] is True
        assert report["failures"] == []
        assert report["checked"] == 8
        assert report["vacuous"] == 0
        assert report["homotopy"]["differential_matches"] is True

    def test_constant_window_passes(self):
        B = constant_algebra("lie", SL2, 3, 3)
        report = check_homotopy_jacobi(B, (0, 1))
        assert report["passed"] is True

    def test_reports_are_deterministic(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        r1 = check_homotopy_jacobi(B, 1)
        r2 = check_homotopy_jacobi(B, 1)
        assert r1 == r2

    def test_window_beyond_truncation_rejected(self):
        B = cover_algebra("lie", SL2, 3, 2, 2)
        with pytest.raises(InputError):
            check_homotopy_jacobi(B, 3)

    def test_com_backend_rejected(self):
        B = cover_algebra("com", DUAL_NUMBERS, 2, 2, 2)
        with pytest.raises(InputError):
            check_homotopy_jacobi(B, 1)

    def test_broken_backend_fails_with_witness(self):
        # one coface stops being a morphism; check=False smuggles it in
        B = cover_algebra("lie", SL2, 3, 2, 3, check=False)
        mat = B.module.delta[(1, 0)]
        entries = dict(mat.entries)
        entries[(0, 0)] = Fraction(2)
        B.module.delta[(1, 0)] = QMatrix(mat.nrows, mat.ncols, entries)
        B.module._act_cache = {}
        report = check_homotopy_jacobi(B, 1)
        assert report["passed"] is False
        first = report["failures"][0]
        assert first["levels"] in [(a, b, c) for a in range(2) for b in range(2) for c in range(2)]
        assert first["residual"]
        with pytest.raises(VerificationError):
            check_homotopy_jacobi(B, 1, strict=True)

    def test_solve_homotopy_certificate(self):
        j = jacobiator(3)
        jp, cert = solve_homotopy(j)
        assert jp.diff() == j
        assert cert["degree"] == -1
        assert cert["differential_matches"] is True
        assert cert["support"] > 0


class TestCohomologyAlgebra:
    def test_identity_cover_recovers_fiber(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        report = cohomology_algebra(B)
        assert report["h_dims"] == {0: 3}
        assert report["well_defined"] is True
        assert report["law_ok"] is True
        # representatives are the diagonal copies of e, f, h in order
        moore = B.moore()
        basis = moore.cohomology_basis(0)
        assert basis == [{0: ONE, 3: ONE}, {1: ONE, 4: ONE}, {2: ONE, 5: ONE}]
        expected = {}
        for (a, b), row in SL2.items():
            expected[((0, a), (0, b))] = {(0, k): v for k, v in row.items()}
        assert report["structure"] == expected

    def test_com_identity_cover(self):
        B = cover_algebra("com", DUAL_NUMBERS, 2, 2, 2)
        report = cohomology_algebra(B)
        assert report["h_dims"] == {0: 2}
        assert report["law_ok"] is True
        assert report["structure"][((0, 0), (0, 1))] == {(0, 1): ONE}

    def test_constant_backend(self):
        B = constant_algebra("lie", SL2, 3, 2)
        report = cohomology_algebra(B)
        assert report["h_dims"] == {0: 3}
        expected = {}
        for (a, b), row in SL2.items():
            expected[((0, a), (0, b))] = {(0, k): v for k, v in row.items()}
        assert report["structure"] == expected


class TestApplyShape:
    def test_multilinearity_across_levels(self):
        rng = random.Random(23)
        B = cover_algebra("lie", SL2, 3, 2, 3)
        bk = transferred_bracket(B)
        v0 = random_vec(rng, B.dims[0])
        v1 = random_vec(rng, B.dims[1])
        w = random_vec(rng, B.dims[1])
        mixed = bk.apply([{0: v0, 1: v1}, {1: w}])
        split = {}
        for m, piece in bk.apply([{0: v0}, {1: w}]).items():
            gv_add(split, m, piece)
        for m, piece in bk.apply([{1: v1}, {1: w}]).items():
            gv_add(split, m, piece)
        assert mixed == split

    def test_wrong_arity_rejected(self):
        B = constant_algebra("lie", SL2, 3, 2)
        bk = transferred_bracket(B)
        with pytest.raises(InputError):
            bk.apply([{0: {0: ONE}}])

    def test_block_matches_apply(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        bk = transferred_bracket(B)
        block = bk.block((1, 1))
        for (i, j), row in block.items():
            out = bk.apply([{1: {i: ONE}}, {1: {j: ONE}}])
            assert out.get(2, {}) == row

    def test_graded_antisymmetry_of_bracket(self):
        B = cover_algebra("lie", SL2, 3, 2, 3)
        bk = transferred_bracket(B)
        for a, b in ((0, 1), (1, 1), (1, 2)):
            fwd = bk.block((a, b))
            bwd = bk.block((b, a))
            sgn = -ONE if (a * b) % 2 else ONE
            flipped = {}
            for (i, j), row in bwd.items():
                flipped[(j, i)] = {o: -sgn * v for o, v in row.items()}
            assert fwd == flipped


class TestTruncationStability:
    """Raising the bound by one must not move low-degree blocks."""

    def test_bracket_blocks_stable(self):
        B3 = cover_algebra("lie", SL2, 3, 2, 3)
        B4 = cover_algebra("lie", SL2, 3, 2, 4)
        bk3 = transferred_bracket(B3)
        bk4 = transferred_bracket(B4)
        for levels in [(0, 0), (0, 1), (1, 0), (1, 1)]:
            assert bk3.block(levels) == bk4.block(levels)

    def test_homotopy_jacobi_stable_window(self):
        B3 = cover_algebra("lie", SL2, 3, 2, 3)
        B4 = cover_algebra("lie", SL2, 3, 2, 4)
        r3 = check_homotopy_jacobi(B3, 1)
        r4 = check_homotopy_jacobi(B4, 1)
        assert r3["passed"] and r4["passed"]
