"""Exact linear algebra: rank, solve, kernels, complex cohomology."""

import random
from fractions import Fraction

import pytest

from ezoperad.errors import InputError, InvariantError
from ezoperad.exactlin import (
    FiniteComplex,
    QMatrix,
    SpanReducer,
    kernel_basis,
    rank,
    rank_of_vectors,
    solve,
    vec_add,
    vec_sub,
)

F = Fraction


def random_matrix(rng, nrows, ncols, density=0.5, denom=3):
    entries = {}
    for i in range(nrows):
        for j in range(ncols):
            if rng.random() < density:
                entries[(i, j)] = F(rng.randint(-4, 4), rng.randint(1, denom))
    return QMatrix(nrows, ncols, entries)


def test_matmul_identity_and_assoc():
    rng = random.Random(7)
    a = random_matrix(rng, 4, 5)
    b = random_matrix(rng, 5, 3)
    c = random_matrix(rng, 3, 6)
    assert QMatrix.identity(4) @ a == a
    assert (a @ b) @ c == a @ (b @ c)


def test_matmul_frozen_small():
    a = QMatrix(2, 2, {(0, 0): F(1), (0, 1): F(2), (1, 1): F(1, 2)})
    b = QMatrix(2, 1, {(0, 0): F(3), (1, 0): F(-1)})
    # [[1,2],[0,1/2]] @ [[3],[-1]] = [[1],[-1/2]]
    assert (a @ b).dense() == [[F(1)], [F(-1, 2)]]


def test_rank_frozen():
    # rank-2 matrix: third row = row0 + row1
    m = QMatrix.from_rows(
        3,
        [
            {0: F(1), 1: F(2), 2: F(3)},
            {0: F(1, 2), 2: F(1)},
            {0: F(3, 2), 1: F(2), 2: F(4)},
        ],
    )
    assert rank(m) == 2
    assert rank(QMatrix(5, 5)) == 0
    assert rank(QMatrix.identity(5)) == 5


def test_span_reducer_membership():
    red = SpanReducer()
    assert red.add({0: F(1), 1: F(1)})
    assert red.add({1: F(1), 2: F(1)})
    assert not red.add({0: F(1), 2: F(-1)})  # difference of the two
    assert red.contains({0: F(2), 1: F(1), 2: F(-1)})
    assert not red.contains({0: F(1)})
    assert red.rank == 2


def test_solve_random_consistent():
    rng = random.Random(11)
    for _ in range(20):
        a = random_matrix(rng, 6, 8, density=0.6)
        x_true = {j: F(rng.randint(-3, 3), rng.randint(1, 4)) for j in range(8)}
        b = a.apply(x_true)
        x = solve(a, b)
        assert x is not None
        assert vec_sub(a.apply(x), b) == {}


def test_solve_inconsistent():
    a = QMatrix.from_rows(2, [{0: F(1), 1: F(1)}, {0: F(2), 1: F(2)}])
    assert solve(a, {0: F(1), 1: F(3)}) is None


def test_kernel_basis_rank_nullity():
    rng = random.Random(13)
    for _ in range(15):
        a = random_matrix(rng, 5, 7, density=0.5)
        ker = kernel_basis(a)
        assert len(ker) == 7 - rank(a)
        for v in ker:
            assert a.apply(v) == {}
        # kernel vectors independent
        assert rank_of_vectors(ker) == len(ker)


def test_complex_validation():
    d0 = QMatrix(2, 1, {(0, 0): F(1), (1, 0): F(1)})
    bad = QMatrix(1, 2, {(0, 0): F(1)})
    c = FiniteComplex(0, 2, {0: 1, 1: 2, 2: 1}, {0: d0, 1: bad})
    with pytest.raises(InvariantError):
        c.validate()
    with pytest.raises(InputError):
        FiniteComplex(0, 1, {0: 1, 1: 1}, {0: QMatrix(3, 1)})


def test_circle_cohomology():
    # simplicial circle, cochain complex: 0 -> Q^2 -> Q^2 -> 0 with
    # d = [[-1,1],[1,-1]] (two vertices, two edges each from one vertex
    # to the other).  H^0 = H^1 = Q.
    d = QMatrix(2, 2, {(0, 0): F(-1), (0, 1): F(1), (1, 0): F(1), (1, 1): F(-1)})
    c = FiniteComplex(0, 1, {0: 2, 1: 2}, {0: d})
    c.validate()
    assert c.cohomology_rank(0) == 1
    assert c.cohomology_rank(1) == 1
    reps0 = c.cohomology_basis(0)
    assert len(reps0) == 1
    assert d.apply(reps0[0]) == {}
    reps1 = c.cohomology_basis(1)
    assert len(reps1) == 1


def test_interval_cohomology_trivial_h1():
    # single 1-simplex: d(v0*) = -e*, d(v1*) = e*
    d = QMatrix(1, 2, {(0, 0): F(-1), (0, 1): F(1)})
    c = FiniteComplex(0, 1, {0: 2, 1: 1}, {0: d})
    c.validate()
    assert c.cohomology_rank(0) == 1
    assert c.cohomology_rank(1) == 0
    assert c.cohomology_basis(1) == []


def test_vec_helpers():
    u = {0: F(1), 1: F(2)}
    v = {1: F(-2), 2: F(5)}
    assert vec_add(u, v) == {0: F(1), 2: F(5)}
    assert vec_sub(u, u) == {}
