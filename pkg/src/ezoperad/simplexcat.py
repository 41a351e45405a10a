"""The category of finite nonempty ordinals and weakly monotone maps.

Objects are written ``[n]`` for the ordered set ``{0, 1, ..., n}``.  A
morphism ``[m] -> [n]`` is stored as the tuple of its values
``(f(0), ..., f(m))`` together with the codomain index ``n``; the domain
index is implicit in the tuple length.

Morphisms compare and hash by value, enumerate in lexicographic order of
their value tuples, and compose strictly (mismatched endpoints raise).
"""

from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

from .errors import InputError


class MonotoneMap:
    """A weakly increasing map ``[m] -> [n]``, immutable and hashable."""

    __slots__ = ("target", "values", "_hash")

    def __init__(self, target, values):
        values = tuple(values)
        if not values:
            raise InputError("monotone map needs a nonempty domain")
        if target < 0:
            raise InputError(f"bad codomain [{target}]")
        prev = 0
        for v in values:
            if v < prev or v > target:
                raise InputError(
                    f"values {values} not weakly increasing into [{target}]"
                )
            prev = v
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_hash", hash((target, values)))

    def __setattr__(self, name, value):
        raise AttributeError("MonotoneMap is immutable")

    @property
    def source(self):
        """Domain index ``m``; the map is defined on ``{0, ..., m}``."""
        return len(self.values) - 1

    def __call__(self, k):
        return self.values[k]

    def __eq__(self, other):
        return (
            isinstance(other, MonotoneMap)
            and self.target == other.target
            and self.values == other.values
        )

    def __lt__(self, other):
        return (self.target, self.values) < (other.target, other.values)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"MonotoneMap([{self.source}]->[{self.target}], {self.values})"

    def compose(self, other):
        """Return ``self o other`` (apply ``other`` first)."""
        if other.target != self.source:
            raise InputError(
                f"cannot compose [{other.source}]->[{other.target}] "
                f"then [{self.source}]->[{self.target}]"
            )
        return MonotoneMap(self.target, tuple(self.values[v] for v in other.values))

    def is_injective(self):
        return len(set(self.values)) == len(self.values)

    def is_surjective(self):
        return len(set(self.values)) == self.target + 1

    def is_identity(self):
        return self.target == self.source and all(
            v == i for i, v in enumerate(self.values)
        )


def identity(n):
    """The identity map on ``[n]``."""
    return MonotoneMap(n, range(n + 1))


def face(n, i):
    """The injection ``[n-1] -> [n]`` whose image omits ``i`` (``0 <= i <= n``)."""
    if not 0 <= i <= n:
        raise InputError(f"face index {i} out of range for [{n}]")
    return MonotoneMap(n, tuple(k if k < i else k + 1 for k in range(n)))


def degeneracy(n, i):
    """The surjection ``[n+1] -> [n]`` hitting ``i`` twice (``0 <= i <= n``)."""
    if not 0 <= i <= n:
        raise InputError(f"degeneracy index {i} out of range for [{n}]")
    return MonotoneMap(n, tuple(k if k <= i else k - 1 for k in range(n + 2)))


def constant(m, n, value):
    """The constant map ``[m] -> [n]`` at ``value``."""
    return MonotoneMap(n, (value,) * (m + 1))


def hom_size(m, n):
    """Number of monotone maps ``[m] -> [n]``: multisets of size m+1 from n+1."""
    return comb(m + n + 1, m + 1)


@lru_cache(maxsize=None)
def enumerate_maps(m, n):
    """All monotone maps ``[m] -> [n]`` in lexicographic order of value tuples."""
    if m < 0 or n < 0:
        raise InputError(f"bad hom set [{m}] -> [{n}]")
    return tuple(
        MonotoneMap(n, values)
        for values in combinations_with_replacement(range(n + 1), m + 1)
    )


@lru_cache(maxsize=None)
def _index_table(m, n):
    return {f.values: i for i, f in enumerate(enumerate_maps(m, n))}


def map_index(f):
    """Position of ``f`` within ``enumerate_maps(f.source, f.target)``."""
    return _index_table(f.source, f.target)[f.values]


def epi_mono(f):
    """Factor ``f`` as ``mono o epi`` with epi surjective and mono injective.

    The factorization through the image is unique in this category; the
    composite is asserted equal to ``f``.
    """
    image = sorted(set(f.values))
    lookup = {v: i for i, v in enumerate(image)}
    epi = MonotoneMap(len(image) - 1, tuple(lookup[v] for v in f.values))
    mono = MonotoneMap(f.target, tuple(image))
    assert mono.compose(epi) == f
    return epi, mono
