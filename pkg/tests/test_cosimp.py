"""Cosimplicial modules: Moore complexes, the chain object, tensor powers,
hom complexes, Yoneda classification."""

import random
from fractions import Fraction

import pytest

from ezoperad.cosimp import (
    CosimplicialModule,
    GradedCosimplicialModule,
    chain_object,
    conjugate,
    constant_module,
    direct_sum,
    hom_complex,
    hom_layout,
    kron,
    representable,
    tensor_power,
    yoneda_morphism,
)
from ezoperad.exactlin import FiniteComplex, QMatrix
from ezoperad.simplexcat import enumerate_maps, face, hom_size

F = Fraction


def random_unimodular(rng, n, steps=8):
    """Integer matrix with determinant ±1, returned with its exact inverse."""
    u = QMatrix.identity(n)
    uinv = QMatrix.identity(n)
    for _ in range(steps):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        c = F(rng.randint(-2, 2))
        e = QMatrix.identity(n)
        e.entries[(j, i)] = c
        einv = QMatrix.identity(n)
        einv.entries[(j, i)] = -c
        u = e @ u
        uinv = uinv @ einv
    return u, uinv


def random_conjugated_module(rng, top, max_dim=4):
    s = rng.randint(1, max_dim)
    units, invs = [], []
    for _ in range(top + 1):
        a, b = random_unimodular(rng, s)
        units.append(a)
        invs.append(b)
    return conjugate(constant_module(s, top), units, invs)


def test_constant_module_moore():
    a = constant_module(2, 4)
    a.validate()
    c = a.moore()
    c.validate()
    # alternating sums of identities: zero in even degree, identity in odd
    assert c.d[0].is_zero()
    assert c.d[1] == QMatrix.identity(2)
    assert c.d[2].is_zero()
    assert c.cohomology_rank(0) == 2
    for p in (1, 2, 3):
        assert c.cohomology_rank(p) == 0


def test_representable_zero_moore_is_acyclic():
    # the level-n space is spanned by the n+1 vertices; the alternating
    # coface sum sends the unique level-0 vector to e1 - e0, so nothing
    # survives in degree 0 either: every cohomology of this complex in
    # degrees 0..top-1 vanishes (rank oracle)
    a = representable(0, 5)
    a.validate()
    c = a.moore()
    c.validate()
    for p in range(5):
        assert c.cohomology_rank(p) == 0


def test_representable_validate_and_act():
    a = representable(1, 4)
    a.validate()
    # act on a composite equals composite of acts
    rng = random.Random(3)
    for _ in range(20):
        n0 = rng.randint(0, 2)
        n1 = rng.randint(n0, 3)
        n2 = rng.randint(n1, 4)
        f = rng.choice(enumerate_maps(n0, n1))
        g = rng.choice(enumerate_maps(n1, n2))
        assert a.act(g.compose(f)) == a.act(g) @ a.act(f)


def test_conjugated_module_is_valid():
    rng = random.Random(5)
    m = random_conjugated_module(rng, 5)
    m.validate()
    nontrivial = any(
        m.delta[(p, i)] != QMatrix.identity(m.dims[p])
        for p in range(1, 6)
        for i in range(p + 1)
    )
    assert nontrivial


def test_chain_object_dims_at_level_one():
    z = chain_object(3)
    assert [z.piece_dim(-m, 1) for m in range(4)] == [2, 3, 4, 5]


def test_chain_object_validates():
    # differential commutes with all structure maps and squares to zero
    chain_object(4).validate()


def column_complex(t, n):
    dims = {-m: t.piece_dim(-m, n) for m in range(t.top + 1)}
    d = {e: mats[n] for e, mats in t.diff.items()}
    return FiniteComplex(-t.top, 0, dims, d)


def test_chain_object_columns_acyclic_below_zero():
    z = chain_object(5)
    for n in (0, 1, 2):
        c = column_complex(z, n)
        c.validate()
        assert c.cohomology_rank(0) == 1
        for e in range(-4, 0):
            assert c.cohomology_rank(e) == 0, (n, e)


def test_tensor_power_identity():
    z = chain_object(2)
    t = tensor_power(z, 1)
    for m in range(3):
        for n in range(3):
            assert t.piece_dim(-m, n) == z.piece_dim(-m, n)
    for e, mats in z.diff.items():
        for n, mat in mats.items():
            assert t.diff[e][n] == mat


def test_tensor_square_dims_and_validity():
    t = tensor_power(chain_object(3), 2)
    for p in range(4):
        for m in range(4):
            want = sum(
                hom_size(p1, m) * hom_size(p - p1, m)
                for p1 in range(p + 1)
            )
            assert t.piece_dim(-p, m) == want, (p, m)
    t.validate()


def test_tensor_square_dd_zero_at_depth_four():
    t = tensor_power(chain_object(4), 2)
    for e in range(-4, -1):
        for n in range(5):
            assert (t.diff[e + 1][n] @ t.diff[e][n]).is_zero(), (e, n)


def test_kron_order_is_row_major():
    a = QMatrix(1, 2, {(0, 0): F(1), (0, 1): F(2)})
    b = QMatrix(2, 1, {(0, 0): F(3), (1, 0): F(5)})
    k = kron(a, b)
    assert k.nrows == 2 and k.ncols == 2
    assert k[(0, 0)] == 3 and k[(1, 0)] == 5 and k[(0, 1)] == 6 and k[(1, 1)] == 10


def test_hom_complex_equals_moore_on_plain_modules():
    rng = random.Random(11)
    for _ in range(6):
        a = random_conjugated_module(rng, 5)
        t = GradedCosimplicialModule.from_module(a)
        h = hom_complex(t, 5)
        m = a.moore()
        assert (h.lo, h.hi) == (m.lo, m.hi)
        assert h.dims == m.dims
        assert h.d == m.d


def test_hom_complex_equals_moore_on_representables():
    for mm in (0, 1):
        a = representable(mm, 3)
        h = hom_complex(GradedCosimplicialModule.from_module(a), 3)
        m = a.moore()
        assert h.dims == m.dims and h.d == m.d


def test_hom_complex_dd_zero_on_tensor_square():
    t = tensor_power(chain_object(3), 2)
    h = hom_complex(t, 3)
    h.validate()


def test_hom_complex_ranks_arity_one():
    # rank oracle for the hom complex out of the chain object: with pieces
    # deep enough for the window (depth >= bound + 1 - e), cohomology is
    # one-dimensional in degree 0 and vanishes below
    z = chain_object(3, depth=6)
    h = hom_complex(z, 3)
    h.validate()
    assert h.cohomology_rank(0) == 1
    for e in (-2, -1):
        assert h.cohomology_rank(e) == 0, e


def test_hom_layout_blocks():
    z = chain_object(4)
    layout = hom_layout(z, -1, 4)
    # degree -1, column m holds the maps out of [m+1]; columns 0..3
    assert [(m, pd) for (m, pd, _, _) in layout] == [
        (0, -1),
        (1, -2),
        (2, -3),
        (3, -4),
    ]
    assert [dim for (_, _, dim, _) in layout] == [
        hom_size(1, 0),
        hom_size(2, 1),
        hom_size(3, 2),
        hom_size(4, 3),
    ]


def test_bound_stability_of_hom_complex():
    # with the graded source fixed, raising the column bound changes nothing
    # in degrees <= bound - top
    z = chain_object(5)
    h4 = hom_complex(z, 4)
    h5 = hom_complex(z, 5)
    for d in (-3, -2, -1):
        assert h4.dims[d] == h5.dims[d]
    for d in (-3, -2):
        assert h4.d[d] == h5.d[d]
    # with depth exactly bound+1 the degree-0 rank is the true value 1;
    # at bound == depth the top column contributes spurious classes
    assert h4.cohomology_rank(0) == 1
    assert h5.cohomology_rank(0) > 1


def test_yoneda_morphism_unit_and_naturality():
    rng = random.Random(7)
    a = random_conjugated_module(rng, 4)
    m = 2
    vec = {i: F(rng.randint(-3, 3)) for i in range(a.dims[m])}
    y = yoneda_morphism(a, m, vec)
    # identity map recovers the element
    maps = enumerate_maps(m, m)
    idcol = next(c for c, f in enumerate(maps) if f.is_identity())
    got = y[m].col(idcol)
    assert got == {i: v for i, v in vec.items() if v}
    # naturality: act(g) o Y_n = Y_n' o (postcompose g)
    for n in (2, 3):
        g = face(n + 1, 1)
        src = enumerate_maps(m, n)
        tgt = {f.values: k for k, f in enumerate(enumerate_maps(m, n + 1))}
        for c, f in enumerate(src):
            lhs = a.act(g).apply(y[n].col(c))
            rhs = y[n + 1].col(tgt[g.compose(f).values])
            assert lhs == rhs


def test_yoneda_zero_element():
    a = constant_module(2, 3)
    y = yoneda_morphism(a, 1, {})
    assert all(mat.is_zero() for mat in y.values())


def test_direct_sum_moore_is_blockwise():
    a = constant_module(1, 3)
    b = constant_module(2, 3)
    s = direct_sum([a, b])
    s.validate()
    assert s.dims == (3, 3, 3, 3)
    assert s.moore().cohomology_rank(0) == 3
