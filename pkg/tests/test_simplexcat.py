"""Ordinal category: enumeration, composition, cosimplicial identities."""

from itertools import product

import pytest

from ezoperad.errors import InputError
from ezoperad.simplexcat import (
    MonotoneMap,
    constant,
    degeneracy,
    enumerate_maps,
    epi_mono,
    face,
    hom_size,
    identity,
    map_index,
)


def test_enumeration_1_1_frozen():
    # hand enumeration of weakly increasing pairs into {0,1}
    got = [f.values for f in enumerate_maps(1, 1)]
    assert got == [(0, 0), (0, 1), (1, 1)]


def test_enumeration_matches_count_and_is_sorted():
    for m, n in product(range(5), range(5)):
        maps = enumerate_maps(m, n)
        assert len(maps) == hom_size(m, n)
        assert len(set(maps)) == len(maps)
        vals = [f.values for f in maps]
        assert vals == sorted(vals)


def test_face_degeneracy_frozen():
    assert face(1, 0).values == (1,)
    assert face(1, 1).values == (0,)
    assert face(2, 1).values == (0, 2)
    assert degeneracy(1, 0).values == (0, 0, 1)
    assert degeneracy(2, 1).values == (0, 1, 1, 2)


def test_face_composite_frozen():
    # both composites [0] -> [2] hit the top vertex
    assert face(2, 1).compose(face(1, 0)).values == (2,)
    assert face(2, 0).compose(face(1, 0)).values == face(2, 1).compose(
        face(1, 0)
    ).values


def test_cosimplicial_identities_exhaustive():
    # d_j d_i = d_i d_{j-1} for i < j
    for n in range(1, 5):
        for i in range(n + 1):
            for j in range(i + 1, n + 2):
                lhs = face(n + 1, j).compose(face(n, i))
                rhs = face(n + 1, i).compose(face(n, j - 1))
                assert lhs == rhs, (n, i, j)
    # s_j s_i = s_i s_{j+1} for i <= j
    for n in range(4):
        for j in range(n + 1):
            for i in range(j + 1):
                lhs = degeneracy(n, i).compose(degeneracy(n + 1, j + 1))
                rhs = degeneracy(n, j).compose(degeneracy(n + 1, i))
                assert lhs == rhs, (n, i, j)
    # mixed: s_j d_i
    for n in range(1, 5):
        for j in range(n):
            for i in range(n + 1):
                got = degeneracy(n - 1, j).compose(face(n, i))
                if i < j:
                    want = face(n - 1, i).compose(degeneracy(n - 2, j - 1))
                elif i in (j, j + 1):
                    want = identity(n - 1)
                else:
                    want = face(n - 1, i - 1).compose(degeneracy(n - 2, j))
                assert got == want, (n, i, j)


def test_compose_rejects_mismatch():
    with pytest.raises(InputError):
        face(2, 0).compose(face(3, 0))


def test_monotone_validation():
    with pytest.raises(InputError):
        MonotoneMap(2, (1, 0))
    with pytest.raises(InputError):
        MonotoneMap(2, (0, 3))
    with pytest.raises(InputError):
        MonotoneMap(2, ())


def test_identity_and_constant():
    assert identity(3).values == (0, 1, 2, 3)
    assert identity(3).is_identity()
    assert constant(2, 4, 3).values == (3, 3, 3)


def test_map_index_roundtrip():
    for m, n in product(range(4), range(4)):
        for i, f in enumerate(enumerate_maps(m, n)):
            assert map_index(f) == i


def test_epi_mono_roundtrip_exhaustive():
    for m, n in product(range(4), range(4)):
        for f in enumerate_maps(m, n):
            epi, mono = epi_mono(f)
            assert epi.is_surjective()
            assert mono.is_injective()
            assert mono.compose(epi) == f
            # uniqueness: image object determined by distinct value count
            assert epi.target == len(set(f.values)) - 1


def test_hash_and_eq():
    a = face(2, 1)
    b = MonotoneMap(2, (0, 2))
    assert a == b and hash(a) == hash(b)
    assert a != identity(2)
