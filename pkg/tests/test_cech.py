"""Cover algebras checked against an independently coded alternating sum.

The oracle below builds the classical cover differential straight from its
formula, with its own component layout and its own face handling (dropping
a coordinate), so any indexing or sign slip in the package shows up as a
matrix mismatch.
"""

import random
from fractions import Fraction
from itertools import combinations, product

import pytest

from ezoperad.cech import (
    NerveSheaf,
    cech_cosimplicial,
    format_nerve,
    identity_cover,
    parse_nerve,
)
from ezoperad.cech import load_nerve
from ezoperad.errors import InputError
from ezoperad.exactlin import QMatrix
from ezoperad.presets import available, preset_path
from ezoperad.transfer import (
    F_apply,
    check_homotopy_jacobi,
    cohomology_algebra,
    constant_algebra,
)
from ezoperad.operad import bracket_cocycle

from test_cosimp import random_unimodular
from test_transfer import cover_algebra

F = Fraction
ONE = F(1)
ZERO = F(0)

SL2 = {
    (0, 1): {2: ONE},
    (1, 0): {2: -ONE},
    (0, 2): {0: F(-2)},
    (2, 0): {0: F(2)},
    (1, 2): {1: F(2)},
    (2, 1): {1: F(-2)},
}

DUAL_NUMBERS = {
    (0, 0): {0: ONE},
    (0, 1): {1: ONE},
    (1, 0): {1: ONE},
}


def classical_cech_matrix(nerve, p):
    """Level p-1 -> p differential from the alternating restriction formula.

    Components are functions into the opens, ordered lexicographically;
    precomposition with the i-th face drops the i-th coordinate.  Built
    without touching the package's simplex or cover machinery.
    """

    def funcs(k):
        return list(product(range(nerve.opens), repeat=k + 1))

    def layout(us):
        offs, total = {}, 0
        for u in us:
            offs[u] = total
            total += nerve.fiber_dim(frozenset(u))
        return offs, total

    src, dst = funcs(p - 1), funcs(p)
    soffs, scols = layout(src)
    doffs, drows = layout(dst)
    entries = {}
    for v in dst:
        for i in range(p + 1):
            u = v[:i] + v[i + 1 :]
            sign = ONE if i % 2 == 0 else -ONE
            block = nerve.rho(frozenset(u), frozenset(v))
            for (r, c), val in block.entries.items():
                key = (doffs[v] + r, soffs[u] + c)
                acc = entries.get(key, ZERO) + sign * val
                if acc:
                    entries[key] = acc
                else:
                    entries.pop(key, None)
    return QMatrix(drows, scols, entries)


def random_flabby_sheaf(rng, opens=3, dim=3):
    """Abelian fibers with functorial invertible restrictions.

    Each subset S gets an invertible M_S and the restriction S -> T is
    M_T M_S^{-1}, so functoriality holds exactly; a zero bracket makes
    every linear map a morphism.
    """
    fibers = {}
    mats = {}
    for size in range(1, opens + 1):
        for s in combinations(range(opens), size):
            key = frozenset(s)
            fibers[key] = (dim, {})
            mats[key] = random_unimodular(rng, dim)
    restrictions = {}
    for s in mats:
        for t in mats:
            if s < t:
                m_t, _ = mats[t]
                _, s_inv = mats[s]
                restrictions[(s, t)] = m_t @ s_inv
    return NerveSheaf("lie", opens, fibers, restrictions)


class TestMooreAgainstClassical:
    def test_identity_cover_two_opens(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 2), 3)
        for p in range(1, 4):
            assert alg.differential(p - 1) == classical_cech_matrix(alg.nerve, p)

    def test_identity_cover_three_opens(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 3), 3)
        for p in range(1, 4):
            assert alg.differential(p - 1) == classical_cech_matrix(alg.nerve, p)

    def test_random_flabby_sheaves(self):
        for seed in range(5):
            rng = random.Random(seed)
            nerve = random_flabby_sheaf(rng)
            assert nerve.validate(depth=3) == []
            alg = cech_cosimplicial(nerve, 3)
            for p in range(1, 4):
                assert alg.differential(p - 1) == classical_cech_matrix(nerve, p)

    def test_commutative_fiber(self):
        alg = cech_cosimplicial(identity_cover("com", DUAL_NUMBERS, 2, 2), 2)
        for p in range(1, 3):
            assert alg.differential(p - 1) == classical_cech_matrix(alg.nerve, p)


class TestCarrierShape:
    def test_single_open_matches_constant(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 1), 3)
        ref = constant_algebra("lie", SL2, 3, 3)
        assert alg.dims == ref.dims
        assert alg.module.delta == ref.module.delta
        assert alg.module.sigma == ref.module.sigma
        assert alg.op_tensors == ref.op_tensors

    def test_two_open_level_dims(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 2), 3)
        assert list(alg.dims) == [2 ** (p + 1) * 3 for p in range(4)]

    def test_labels_name_component_and_coordinate(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 2), 1)
        assert alg.label(0, 0) == "0:0"
        assert alg.label(1, 5) == "0.1:2"
        assert alg.label(1, 11) == "1.1:2"

    def test_matches_handbuilt_cover_helper(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 2), 3)
        ref = cover_algebra("lie", SL2, 3, 2, 3)
        assert alg.dims == ref.dims
        assert alg.module.delta == ref.module.delta
        assert alg.module.sigma == ref.module.sigma
        assert alg.op_tensors == ref.op_tensors

    def test_cosimplicial_identities_and_axioms(self):
        rng = random.Random(11)
        alg = cech_cosimplicial(random_flabby_sheaf(rng), 3)
        alg.validate()
        small = cech_cosimplicial(identity_cover("lie", SL2, 3, 2), 2)
        small.validate()


class TestCohomology:
    def test_flabby_covers_are_acyclic_in_stable_degrees(self):
        rng = random.Random(3)
        nerve = random_flabby_sheaf(rng)
        moore = cech_cosimplicial(nerve, 3).moore()
        assert moore.cohomology_rank(0) == 3
        assert moore.cohomology_rank(1) == 0
        assert moore.cohomology_rank(2) == 0

    def test_identity_cover_recovers_fiber_bracket(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 2), 3)
        report = cohomology_algebra(alg)
        assert report["h_dims"] == {0: 3}
        assert report["well_defined"] and report["law_ok"]
        gens = [(0, i) for i in range(3)]
        table = {}
        for (a, b), row in report["structure"].items():
            table[(a[1], b[1])] = {k[1]: v for k, v in row.items()}
        assert table == SL2

    def test_three_open_bracket_transfer_and_jacobi_window(self):
        alg = cech_cosimplicial(identity_cover("lie", SL2, 3, 3), 3)
        op = F_apply(bracket_cocycle(3), alg)
        out = op.apply([{0: {0: ONE}}, {0: {1: ONE}}])
        assert out == {0: {2: ONE}}
        report = check_homotopy_jacobi(alg, 1)
        assert report["passed"] and report["vacuous"] == 0


class TestValidate:
    def test_identity_cover_is_clean(self):
        nerve = identity_cover("lie", SL2, 3, 3)
        assert nerve.validate() == []
        assert nerve.validate(depth=2) == []

    def test_missing_fiber_is_reported_at_depth(self):
        nerve = identity_cover("lie", SL2, 3, 2)
        del nerve.fibers[frozenset({0, 1})]
        assert nerve.validate() == []
        diags = nerve.validate(depth=1)
        assert {(d["kind"], d["where"]) for d in diags} == {
            ("completeness", "0,1")
        }
        with pytest.raises(InputError, match="missing fiber"):
            cech_cosimplicial(nerve, 1)

    def test_missing_restriction_is_reported(self):
        nerve = identity_cover("lie", SL2, 3, 2)
        del nerve.restrictions[(frozenset({0}), frozenset({0, 1}))]
        diags = nerve.validate()
        assert diags == [
            {
                "kind": "completeness",
                "where": "0 -> 0,1",
                "detail": "missing restriction",
            }
        ]
        with pytest.raises(InputError, match="missing restriction"):
            cech_cosimplicial(nerve, 1)

    def test_restriction_that_breaks_the_bracket(self):
        nerve = identity_cover("lie", SL2, 3, 2)
        bad = QMatrix(3, 3, {(0, 0): ONE, (1, 1): ONE, (2, 2): F(2)})
        nerve.restrictions[(frozenset({0}), frozenset({0, 1}))] = bad
        diags = nerve.validate()
        assert len(diags) == 1
        d = diags[0]
        assert d["kind"] == "morphism"
        assert d["where"] == "0 -> 0,1"
        assert "basis pair" in d["detail"]

    def test_functoriality_violation_names_the_chain(self):
        nerve = identity_cover("lie", SL2, 3, 3)
        weyl = QMatrix(3, 3, {(1, 0): ONE, (0, 1): ONE, (2, 2): -ONE})
        nerve.restrictions[(frozenset({0}), frozenset({0, 1, 2}))] = weyl
        diags = nerve.validate()
        kinds = {d["kind"] for d in diags}
        assert kinds == {"functoriality"}
        wheres = {d["where"] for d in diags}
        assert "0 -> 0,1 -> 0,1,2" in wheres

    def test_broken_fiber_axioms(self):
        nerve = identity_cover("lie", {(0, 0): {0: ONE}}, 1, 1)
        diags = nerve.validate()
        assert [d["kind"] for d in diags] == ["axioms"]
        assert "antisymmetry" in diags[0]["detail"]

    def test_wrong_shape_restriction(self):
        nerve = identity_cover("lie", SL2, 3, 2)
        nerve.restrictions[(frozenset({0}), frozenset({0, 1}))] = QMatrix(2, 3)
        diags = nerve.validate()
        assert [d["kind"] for d in diags] == ["shape"]


class TestTextFormat:
    def test_round_trip_identity_cover(self):
        nerve = identity_cover("lie", SL2, 3, 3)
        again = parse_nerve(format_nerve(nerve))
        assert again.kind == nerve.kind and again.opens == nerve.opens
        assert again.fibers == nerve.fibers
        assert again.restrictions == nerve.restrictions

    def test_round_trip_random_sheaf(self):
        rng = random.Random(7)
        nerve = random_flabby_sheaf(rng)
        again = parse_nerve(format_nerve(nerve))
        assert again.fibers == nerve.fibers
        assert again.restrictions == nerve.restrictions

    def test_explicit_entries_and_comments(self):
        text = """\
nerve-sheaf v1
kind lie           # fibers carry brackets
opens 2
fiber 0 dim 1
fiber 1 dim 1
fiber 0,1 dim 2

restrict 0 0,1
entry 0 0 1
entry 1 0 1/2
restrict 1 0,1 zero
"""
        nerve = parse_nerve(text)
        assert nerve.fiber_dim({0, 1}) == 2
        mat = nerve.rho({0}, {0, 1})
        assert mat.entries == {(0, 0): ONE, (1, 0): F(1, 2)}
        assert nerve.rho({1}, {0, 1}).entries == {}

    def test_header_must_come_first(self):
        with pytest.raises(InputError, match="line 1"):
            parse_nerve("kind lie\nopens 1\n")

    def test_unknown_directive_has_line_number(self):
        text = "nerve-sheaf v1\nkind lie\nopens 1\nfiber 0 dim 1\nbogus 1 2\n"
        with pytest.raises(InputError, match="line 5: unknown directive"):
            parse_nerve(text)

    def test_sc_out_of_range(self):
        text = "nerve-sheaf v1\nkind lie\nopens 1\nfiber 0 dim 2\nsc 0 2 0 1\n"
        with pytest.raises(InputError, match="line 5: .*out of range"):
            parse_nerve(text)

    def test_duplicate_fiber(self):
        text = "nerve-sheaf v1\nkind lie\nopens 1\nfiber 0 dim 1\nfiber 0 dim 1\n"
        with pytest.raises(InputError, match="line 5: duplicate fiber"):
            parse_nerve(text)

    def test_identity_restriction_needs_matching_dims(self):
        text = (
            "nerve-sheaf v1\nkind lie\nopens 2\n"
            "fiber 0 dim 1\nfiber 1 dim 1\nfiber 0,1 dim 2\n"
            "restrict 0 0,1 id\n"
        )
        with pytest.raises(InputError, match="line 7: identity restriction"):
            parse_nerve(text)

    def test_restriction_needs_declared_fibers(self):
        text = (
            "nerve-sheaf v1\nkind lie\nopens 2\n"
            "fiber 0 dim 1\n"
            "restrict 0 0,1 zero\n"
        )
        with pytest.raises(InputError, match="line 5: .*undeclared fiber"):
            parse_nerve(text)

    def test_subset_must_be_sorted(self):
        text = "nerve-sheaf v1\nkind lie\nopens 2\nfiber 1,0 dim 1\n"
        with pytest.raises(InputError, match="line 4: subset"):
            parse_nerve(text)

    def test_entry_position_out_of_range(self):
        text = (
            "nerve-sheaf v1\nkind lie\nopens 2\n"
            "fiber 0 dim 1\nfiber 1 dim 1\nfiber 0,1 dim 1\n"
            "restrict 0 0,1\nentry 1 0 1\n"
        )
        with pytest.raises(InputError, match="line 8: entry position"):
            parse_nerve(text)

    def test_missing_kind(self):
        text = "nerve-sheaf v1\nopens 1\nfiber 0 dim 1\n"
        with pytest.raises(InputError, match="missing 'kind'"):
            parse_nerve(text)

    def test_improper_restriction_subsets(self):
        text = (
            "nerve-sheaf v1\nkind lie\nopens 2\n"
            "fiber 0 dim 1\nfiber 1 dim 1\n"
            "restrict 0 1 zero\n"
        )
        with pytest.raises(InputError, match="line 6: .*proper subset"):
            parse_nerve(text)


class TestPresets:
    def test_bundled_covers_match_builders(self):
        names = available()
        assert "sl2_3open.nerve" in names
        assert "sl2_2open_identity.nerve" in names
        for name, opens in (
            ("sl2_3open.nerve", 3),
            ("sl2_2open_identity.nerve", 2),
        ):
            nerve = load_nerve(preset_path(name))
            ref = identity_cover("lie", SL2, 3, opens)
            assert nerve.kind == "lie" and nerve.opens == opens
            assert nerve.fibers == ref.fibers
            assert nerve.restrictions == ref.restrictions
            assert nerve.validate(depth=opens) == []

    def test_unknown_preset_is_rejected(self):
        with pytest.raises(InputError, match="unknown preset"):
            preset_path("missing.nerve")
