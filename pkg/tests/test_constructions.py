"""Tests for the blowup constructions and their exact limit statistics."""
from __future__ import annotations

import random
from fractions import Fraction

import pytest

from flagcert.constructions import (
    EpsPolynomial,
    MatchingTriple,
    blowup_parts,
    build_Bn,
    build_Bn_eps,
    build_En_member,
    circulant,
    construction_from_json,
    expected_densities_Bn_eps,
    i_Bn,
    limit_densities_Bn,
    limit_rooted_vectors,
    matching_triple_from_json,
    matching_triple_to_json,
    random_matching_triple,
)
from flagcert.flags import average_rooted_vector, k3_family, main_family
from flagcert.graphs import OrientedGraph, class_counts, triple_census

from helpers import blowup_inline, circulant_inline

import math


THIRD = Fraction(1, 3)


class TestBlowup:
    def test_matches_independent_construction(self):
        for n in (3, 7, 9, 10, 14):
            assert build_Bn(n) == blowup_inline(n)

    def test_small_cases(self):
        b3 = build_Bn(3)
        assert b3.canonical_form() == OrientedGraph.from_edges(
            3, [(0, 1), (1, 2), (2, 0)]
        ).canonical_form()
        census = triple_census(build_Bn(9))
        assert census.transitive == 0
        assert census.i_density == Fraction(1, 28)
        assert i_Bn(10) == Fraction(1, 20)
        assert [len(p) for p in blowup_parts(10)] == [3, 3, 4]

    def test_closed_form_against_census(self):
        for n in range(3, 22):
            census = triple_census(build_Bn(n))
            assert census.transitive == 0
            assert census.i_density == i_Bn(n)
            assert census.objective < Fraction(1, 9)

    def test_perturbed_generator(self):
        b = build_Bn(12)
        g1 = build_Bn_eps(12, 0.3, random.Random(5))
        g2 = build_Bn_eps(12, 0.3, random.Random(5))
        assert g1 == g2
        assert set(g1.edges) <= set(b.edges)
        assert triple_census(g1).transitive == 0
        assert build_Bn_eps(12, 0.0, random.Random(1)) == b


class TestLimitDensities:
    def test_k1_k2(self):
        assert limit_densities_Bn(1) == [Fraction(1)]
        assert limit_densities_Bn(2) == [THIRD, Fraction(2, 3)]

    def test_k4_support(self):
        lam = limit_densities_Bn(4)
        classes = main_family().classes()
        nz = {i: v for i, v in enumerate(lam) if v}
        assert sorted(nz.values()) == [
            Fraction(1, 27),
            Fraction(4, 27),
            Fraction(4, 27),
            Fraction(6, 27),
            Fraction(12, 27),
        ]
        assert sum(lam) == 1
        by_value = {}
        for i, v in nz.items():
            by_value.setdefault(v, []).append(classes[i])
        (empty,) = by_value[Fraction(1, 27)]
        assert empty.edge_count == 0
        stars = by_value[Fraction(4, 27)]
        assert {g.edge_count for g in stars} == {3}
        shapes = {
            (max(g.degree(v)[0] for v in range(4)), max(g.degree(v)[1] for v in range(4)))
            for g in stars
        }
        assert shapes == {(3, 1), (1, 3)}  # a 3-source class and a 3-sink class
        (k22,) = by_value[Fraction(6, 27)]
        assert k22.edge_count == 4
        (dbl,) = by_value[Fraction(12, 27)]
        assert dbl.edge_count == 5

    def test_k3_support_and_objective(self):
        lam = limit_densities_Bn(3)
        assert sum(lam) == 1
        assert sorted(v for v in lam if v) == [
            Fraction(1, 9),
            Fraction(2, 9),
            THIRD,
            THIRD,
        ]
        c = k3_family().objective()
        assert sum(l * ci for l, ci in zip(lam, c)) == Fraction(1, 9)

    def test_k5_support(self):
        lam = limit_densities_Bn(5)
        assert sum(lam) == 1
        assert sum(1 for v in lam if v) == 7

    def test_convergence_to_finite_blowups(self):
        lam = limit_densities_Bn(4)
        errors = []
        for m in (5, 10, 15):
            g = build_Bn(3 * m)
            counts = class_counts(g, 4)
            total = math.comb(3 * m, 4)
            err = max(
                abs(Fraction(c, total) - l) for c, l in zip(counts, lam)
            )
            errors.append(err)
        assert errors[0] > errors[1] > errors[2]

    def test_range_errors(self):
        with pytest.raises(ValueError):
            limit_densities_Bn(6)
        with pytest.raises(ValueError):
            expected_densities_Bn_eps(5)


class TestEpsPolynomials:
    def test_basics(self):
        p = EpsPolynomial.of(1, 0, -1)
        assert p(Fraction(1, 2)) == Fraction(3, 4)
        assert (p + EpsPolynomial.of(0, 0, 1)) == EpsPolynomial.of(1)
        assert EpsPolynomial.of(0, 0).coefficients == ()
        assert p.constant == 1 and p.linear == 0

    def test_zero_deletion_recovers_limits(self):
        for k in (3, 4):
            polys = expected_densities_Bn_eps(k)
            lam = limit_densities_Bn(k)
            assert [p(Fraction(0)) for p in polys] == lam
            assert [p.constant for p in polys] == lam

    def test_total_probability(self):
        polys = expected_densities_Bn_eps(4)
        total = EpsPolynomial(())
        for p in polys:
            total = total + p
        assert total == EpsPolynomial.of(1)

    def test_values_are_probabilities(self):
        for k in (3, 4):
            for p in expected_densities_Bn_eps(k):
                for eps in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)):
                    assert 0 <= p(eps) <= 1

    def test_k3_independent_class_polynomial(self):
        # Derived by conditioning on the parts of the three vertices:
        # same part 1/9 (always independent), two parts 2/3 (both edges
        # must go), three parts 2/9 (all three edges must go).
        polys = expected_densities_Bn_eps(3)
        assert polys[0] == EpsPolynomial.of(
            Fraction(1, 9), 0, Fraction(2, 3), Fraction(2, 9)
        )

    def test_low_order_support(self):
        polys = expected_densities_Bn_eps(4)
        const_pos = [i for i, p in enumerate(polys) if p.constant > 0]
        linear_only = [
            i for i, p in enumerate(polys) if p.constant == 0 and p.linear > 0
        ]
        assert len(const_pos) == 5
        assert len(linear_only) == 6
        assert sorted(polys[i].linear for i in linear_only) == [
            Fraction(4, 9)
        ] * 3 + [Fraction(8, 9)] * 3

    def test_objective_expectation_matches_triple_derivation(self):
        # sum_i lambda_i(eps) c_i must equal the direct triple computation
        # 1/9 + (2/3) eps^2 + (2/9) eps^3 at any deletion probability
        polys = expected_densities_Bn_eps(4)
        c = main_family().objective()
        for eps in (Fraction(1, 7), Fraction(2, 5), Fraction(9, 10)):
            lhs = sum(p(eps) * ci for p, ci in zip(polys, c))
            rhs = (
                Fraction(1, 9)
                + Fraction(2, 3) * eps ** 2
                + Fraction(2, 9) * eps ** 3
            )
            assert lhs == rhs


class TestLimitRootedVectors:
    def test_shapes_and_sums(self):
        vecs = limit_rooted_vectors()
        assert set(vecs) == {"empty", "nonedge", "edge"}
        assert [len(vecs[k]) for k in ("empty", "nonedge", "edge")] == [1, 3, 1]
        for group in vecs.values():
            for v in group:
                assert sum(v) == 1

    def test_supports(self):
        fam = main_family()
        vecs = limit_rooted_vectors()
        assert vecs["empty"][0] == (THIRD, Fraction(2, 3))

        def support(block_idx, vec):
            flags = fam.blocks[block_idx].flags
            return {flags[i].pattern() for i, x in enumerate(vec) if x}

        same_part, twin_fwd, twin_rev = vecs["nonedge"]
        assert support(1, same_part) == {(0, 0), (1, 1), (-1, -1)}
        assert support(1, twin_fwd) == {(0, -1), (1, 0), (-1, 1)}
        assert support(1, twin_rev) == {(0, 1), (-1, 0), (1, -1)}
        assert support(2, vecs["edge"][0]) == {(0, -1), (1, 0), (-1, 1)}
        for group in vecs.values():
            for v in group:
                assert all(x in (0, THIRD, Fraction(2, 3)) for x in v)

    def test_twins_are_orientation_reversals(self):
        fam = main_family()
        block = fam.blocks[1]
        pos = {f.pattern(): i for i, f in enumerate(block.flags)}
        _, fwd, rev = limit_rooted_vectors()["nonedge"]
        flipped = [Fraction(0)] * block.size
        for i, f in enumerate(block.flags):
            a, b = f.pattern()
            flipped[pos[(-a, -b)]] = fwd[i]
        assert tuple(flipped) == rev

    def test_finite_blowup_rooted_averages(self):
        fam = main_family()
        vecs = limit_rooted_vectors()
        for m in (3, 4):
            g = build_Bn(3 * m)
            d = 3 * m - 2
            block = fam.blocks[1]
            pos = {f.pattern(): i for i, f in enumerate(block.flags)}
            expect = [Fraction(0)] * 9
            expect[pos[(0, 0)]] = Fraction(m - 2, d)
            expect[pos[(1, 1)]] = Fraction(m, d)
            expect[pos[(-1, -1)]] = Fraction(m, d)
            assert average_rooted_vector(fam, 1, g) == expect

            block = fam.blocks[2]
            pos = {f.pattern(): i for i, f in enumerate(block.flags)}
            expect = [Fraction(0)] * 9
            expect[pos[(0, -1)]] = Fraction(m - 1, d)
            expect[pos[(1, 0)]] = Fraction(m - 1, d)
            expect[pos[(-1, 1)]] = Fraction(m, d)
            assert average_rooted_vector(fam, 2, g) == expect

            expect = [Fraction(m - 1, 3 * m - 1), Fraction(2 * m, 3 * m - 1)]
            assert average_rooted_vector(fam, 0, g) == expect

    def test_finite_averages_converge(self):
        fam = main_family()
        limit = limit_rooted_vectors()["nonedge"][0]
        errs = []
        for m in (3, 5):
            avg = average_rooted_vector(fam, 1, build_Bn(3 * m))
            errs.append(max(abs(a - l) for a, l in zip(avg, limit)))
        assert errs[1] < errs[0]


class TestEnFamily:
    def test_empty_matchings_give_blowup(self):
        triple = MatchingTriple(((), (), ()))
        assert build_En_member(9, triple) == build_Bn(9)

    def test_objective_preserved(self):
        rng = random.Random(31)
        for _ in range(15):
            n = rng.randint(9, 15)
            triple = random_matching_triple(n, rng)
            g = build_En_member(n, triple)
            census = triple_census(g)
            assert census.transitive == 0
            assert census.objective == triple_census(build_Bn(n)).objective

    def test_deletions_can_be_nontrivial(self):
        rng = random.Random(32)
        assert any(
            random_matching_triple(12, rng).edge_set() for _ in range(10)
        )

    def test_validation_errors(self):
        # parts of 9: {0,1,2}, {3,4,5}, {6,7,8}
        with pytest.raises(ValueError, match="leaves its parts"):
            build_En_member(9, MatchingTriple((((0, 7),), (), ())))
        with pytest.raises(ValueError, match="repeated endpoint"):
            build_En_member(9, MatchingTriple((((0, 3), (0, 4)), (), ())))
        with pytest.raises(ValueError, match="triangle"):
            build_En_member(
                9, MatchingTriple((((0, 3),), ((3, 6),), ((6, 0),)))
            )
        # same edges without the closing one are fine
        g = build_En_member(9, MatchingTriple((((0, 3),), ((3, 6),), ())))
        assert g.edge_count == build_Bn(9).edge_count - 2

    def test_json_round_trip(self):
        rng = random.Random(33)
        triple = random_matching_triple(10, rng)
        back = matching_triple_from_json(matching_triple_to_json(triple))
        assert back == triple


class TestCirculants:
    def test_sporadic_members(self):
        for n, steps in ((7, (1, 3)), (8, (2, 3))):
            g = circulant(n, steps)
            assert g == circulant_inline(n, steps)
            census = triple_census(g)
            assert census.transitive == 0
            assert census.independent == 0
            assert g.edge_count == n * len(steps)

    def test_validation(self):
        with pytest.raises(ValueError, match="anti-parallel"):
            circulant(7, (1, 6))
        with pytest.raises(ValueError, match="anti-parallel"):
            circulant(8, (4,))
        with pytest.raises(ValueError, match="zero step"):
            circulant(7, (7,))
        with pytest.raises(ValueError, match="repeated"):
            circulant(7, (1, 8))


class TestConstructionJson:
    def test_kinds(self):
        assert construction_from_json({"kind": "blowup", "n": 9}) == build_Bn(9)
        assert construction_from_json(
            {"kind": "circulant", "n": 7, "steps": [1, 3]}
        ) == circulant(7, (1, 3))
        rng = random.Random(34)
        triple = random_matching_triple(9, rng)
        spec = {"kind": "en", "n": 9, "matchings": matching_triple_to_json(triple)}
        assert construction_from_json(spec) == build_En_member(9, triple)
        with pytest.raises(ValueError, match="unknown construction"):
            construction_from_json({"kind": "grid", "n": 4})
