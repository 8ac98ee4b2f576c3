"""Tests for rooted flags, pair densities, and flag matrices.

The reference oracle below recomputes pair densities by explicit enumeration:
rootings as injective tuples, petal sets as subsets, and flag isomorphism by
backtracking over petal bijections.  It shares no code with the library's
counting paths.
"""
from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest

from flagcert.exact_arith import is_psd
from flagcert.flags import (
    Flag,
    average_rooted_vector,
    block_inner,
    class_matrices,
    enumerate_flags,
    family_manifest,
    flag_matrix,
    flag_matrix_tilde,
    goodman_family,
    k3_family,
    main_family,
    p_flag_pair,
    p_tilde,
    pair_density_blocks,
    rooted_vector,
    rootings,
)
from flagcert.graphs import (
    OrientedGraph,
    UndirectedGraph,
    class_counts,
    enumerate_oriented,
    triple_census,
)

from helpers import random_oriented, random_undirected


# ---------------------------------------------------------------- oracle

def oracle_rootings(g, tg):
    """All injective tuples inducing the type graph, by direct check."""
    out = []
    for tup in itertools.permutations(range(g.n), tg.n):
        if all(
            g.rel[tup[i]][tup[j]] == tg.rel[i][j]
            for i in range(tg.n)
            for j in range(tg.n)
        ):
            out.append(tup)
    return out


def rooted_isomorphic(g, order, flag):
    """Does g restricted to `order` (roots first) match the flag under some
    petal bijection?"""
    s = flag.root_size
    fg = flag.graph
    petals = order[s:]
    for perm in itertools.permutations(range(len(petals))):
        full = list(order[:s]) + [petals[p] for p in perm]
        ok = True
        for i in range(len(full)):
            for j in range(len(full)):
                if g.rel[full[i]][full[j]] != fg.rel[i][j]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return True
    return False


def oracle_p(f1, f2, g):
    if f1.root_size != f2.root_size:
        return Fraction(0)
    tg = f1.type_graph()
    if tg != f2.type_graph():
        return Fraction(0)
    roots = oracle_rootings(g, tg)
    if not roots:
        return Fraction(0)
    s, l1, l2 = tg.n, f1.petals, f2.petals
    rest_n = g.n - s
    if rest_n < l1 + l2:
        return Fraction(0)
    hits = 0
    for r in roots:
        rest = [v for v in range(g.n) if v not in r]
        for s1 in itertools.combinations(rest, l1):
            for s2 in itertools.combinations([v for v in rest if v not in s1], l2):
                if rooted_isomorphic(g, r + s1, f1) and rooted_isomorphic(
                    g, r + s2, f2
                ):
                    hits += 1
    denom = len(roots) * math.comb(rest_n, l1) * math.comb(rest_n - l1, l2)
    return Fraction(hits, denom)


def oracle_p_tilde(f1, f2, g):
    if f1.root_size != f2.root_size:
        return Fraction(0)
    tg = f1.type_graph()
    if tg != f2.type_graph():
        return Fraction(0)
    roots = oracle_rootings(g, tg)
    if not roots:
        return Fraction(0)
    s, l1, l2 = tg.n, f1.petals, f2.petals
    rest_n = g.n - s
    if rest_n < max(l1, l2):
        return Fraction(0)
    total = Fraction(0)
    for r in roots:
        rest = [v for v in range(g.n) if v not in r]
        c1 = sum(
            1 for s1 in itertools.combinations(rest, l1) if rooted_isomorphic(g, r + s1, f1)
        )
        c2 = sum(
            1 for s2 in itertools.combinations(rest, l2) if rooted_isomorphic(g, r + s2, f2)
        )
        total += Fraction(c1 * c2, math.comb(rest_n, l1) * math.comb(rest_n, l2))
    return total / len(roots)


# ------------------------------------------------- printed 3x3 matrices

# Classes in the order: empty, single edge, in-star, path, out-star,
# transitive tournament, cyclic triangle; flags in the order out, in, non.
THIRD = Fraction(1, 3)
SIXTH = Fraction(1, 6)
HALF = Fraction(1, 2)
K3_FIXTURES = [
    [[0, 0, 0], [0, 0, 0], [0, 0, 1]],
    [[0, 0, SIXTH], [0, 0, SIXTH], [SIXTH, SIXTH, THIRD]],
    [[0, 0, THIRD], [0, THIRD, 0], [THIRD, 0, 0]],
    [[0, SIXTH, SIXTH], [SIXTH, 0, SIXTH], [SIXTH, SIXTH, 0]],
    [[THIRD, 0, 0], [0, 0, THIRD], [0, THIRD, 0]],
    [[THIRD, SIXTH, 0], [SIXTH, THIRD, 0], [0, 0, 0]],
    [[0, HALF, 0], [HALF, 0, 0], [0, 0, 0]],
]
K3_OBJECTIVE = [1, 0, 0, 0, 0, 1, 0]
K3_PAPER_CLASSES = [
    OrientedGraph.from_edges(3, []),
    OrientedGraph.from_edges(3, [(0, 1)]),
    OrientedGraph.from_edges(3, [(0, 2), (1, 2)]),
    OrientedGraph.from_edges(3, [(0, 1), (1, 2)]),
    OrientedGraph.from_edges(3, [(2, 0), (2, 1)]),
    OrientedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)]),
    OrientedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)]),
]
# Flags over the 1-vertex type as (root -> petal) relations.
K3_FLAG_ORDER = [(1,), (-1,), (0,)]

# Undirected analogue: classes empty, edge, path, triangle; flags edge, non.
GOODMAN_FIXTURES = [
    [[0, 0], [0, 1]],
    [[0, THIRD], [THIRD, THIRD]],
    [[THIRD, THIRD], [THIRD, 0]],
    [[1, 0], [0, 0]],
]
GOODMAN_OBJECTIVE = [1, 0, 0, 1]
GOODMAN_PAPER_CLASSES = [
    UndirectedGraph.from_edges(3, []),
    UndirectedGraph.from_edges(3, [(0, 1)]),
    UndirectedGraph.from_edges(3, [(0, 1), (1, 2)]),
    UndirectedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)]),
]
GOODMAN_FLAG_ORDER = [(1,), (0,)]


def relabeled_class_matrices(family, paper_classes, paper_flag_order):
    """Library class matrices rewritten in an external (class, flag) order.

    Classes are matched by canonical form, flags by their root-to-petal
    pattern.  Returns the permuted single-block matrices.
    """
    mine = {g.canonical_form(): i for i, g in enumerate(family.classes())}
    class_perm = [mine[g.canonical_form()] for g in paper_classes]
    block = family.blocks[0]
    flag_pos = {f.pattern(): i for i, f in enumerate(block.flags)}
    flag_perm = [flag_pos[p] for p in paper_flag_order]
    cm = class_matrices(family)
    out = []
    for ci in class_perm:
        a = cm[ci][0]
        out.append([[a[flag_perm[i]][flag_perm[j]] for j in range(len(flag_perm))] for i in range(len(flag_perm))])
    return out, class_perm


class TestEnumeration:
    def test_main_family_shape(self):
        fam = main_family()
        assert fam.k == 4 and fam.kind == "oriented"
        assert fam.block_sizes() == (2, 9, 9)
        assert [b.name for b in fam.blocks] == ["empty", "nonedge", "edge"]
        assert [b.petals for b in fam.blocks] == [2, 1, 1]
        # two flags rooted on a shared type span at most k vertices
        for b in fam.blocks:
            assert 2 * (b.type_graph.n + b.petals) - b.type_graph.n <= fam.k

    def test_small_families(self):
        assert k3_family().block_sizes() == (3,)
        assert goodman_family().block_sizes() == (2,)

    def test_flag_codes_distinct(self):
        for fam in (main_family(), k3_family(), goodman_family()):
            for b in fam.blocks:
                codes = [f.rooted_code() for f in b.flags]
                assert len(set(codes)) == len(codes)
                counts = [f.graph.edge_count for f in b.flags]
                assert counts == sorted(counts)

    def test_single_petal_patterns_cover_all(self):
        fam = main_family()
        for b in fam.blocks[1:]:
            pats = {f.pattern() for f in b.flags}
            assert pats == set(itertools.product((0, 1, -1), repeat=2))

    def test_empty_type_flags_are_pair_classes(self):
        b = main_family().blocks[0]
        assert [f.graph.edge_count for f in b.flags] == [0, 1]
        assert all(f.root_size == 0 for f in b.flags)

    def test_reversed_edge_type_not_included(self):
        # both 2-vertex types appear once; orientation reversal of the edge
        # type gives nothing new since rootings sweep both edge directions
        names = [b.name for b in main_family().blocks]
        assert names.count("edge") == 1

    def test_enumerate_flags_direct(self):
        # petal swaps identify assignments: counts follow from Burnside
        edge = OrientedGraph(2, ((0, 1), (-1, 0)))
        assert len(enumerate_flags(edge, 1)) == 9
        assert len(enumerate_flags(edge, 2)) == (3 ** 5 + 9) // 2
        point = OrientedGraph(1, ((0,),))
        assert len(enumerate_flags(point, 2)) == (3 ** 3 + 3) // 2


class TestPairDensityOracle:
    def test_main_family_matches_oracle(self):
        rng = random.Random(11)
        fam = main_family()
        for _ in range(6):
            g = random_oriented(rng, rng.randint(5, 7))
            for b in fam.blocks:
                pairs = [
                    (rng.randrange(b.size), rng.randrange(b.size)) for _ in range(3)
                ]
                for i, j in pairs:
                    f1, f2 = b.flags[i], b.flags[j]
                    assert p_flag_pair(f1, f2, g) == oracle_p(f1, f2, g)
                    assert p_tilde(f1, f2, g) == oracle_p_tilde(f1, f2, g)

    def test_point_families_match_oracle(self):
        rng = random.Random(12)
        for fam, maker in (
            (k3_family(), random_oriented),
            (goodman_family(), random_undirected),
        ):
            b = fam.blocks[0]
            for _ in range(4):
                g = maker(rng, rng.randint(4, 7))
                for f1 in b.flags:
                    for f2 in b.flags:
                        assert p_flag_pair(f1, f2, g) == oracle_p(f1, f2, g)
                        assert p_tilde(f1, f2, g) == oracle_p_tilde(f1, f2, g)

    def test_zero_conventions(self):
        fam = main_family()
        tournament = OrientedGraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
        ne = fam.blocks[1].flags[0]
        assert rootings(tournament, fam.blocks[1].type_graph) == []
        assert p_flag_pair(ne, ne, tournament) == 0
        assert p_tilde(ne, ne, tournament) == 0
        # mixed types
        e = fam.blocks[2].flags[0]
        assert p_flag_pair(ne, e, tournament) == 0
        # too few petals
        small = OrientedGraph.from_edges(3, [(0, 1)])
        emp = fam.blocks[0].flags
        assert p_flag_pair(emp[0], emp[1], small) == 0

    def test_batched_pair_densities_agree(self):
        rng = random.Random(13)
        fam = main_family()
        for _ in range(3):
            g = random_oriented(rng, rng.randint(5, 8))
            blocks = pair_density_blocks(fam, g)
            for b, mat in zip(fam.blocks, blocks):
                i = rng.randrange(b.size)
                j = rng.randrange(b.size)
                assert mat[i][j] == p_flag_pair(b.flags[i], b.flags[j], g)
                # densities over one block partition the probability space
                if rootings(g, b.type_graph):
                    assert sum(sum(row) for row in mat) == 1

    def test_rooted_vector_sums_to_one(self):
        rng = random.Random(14)
        fam = main_family()
        g = random_oriented(rng, 9)
        for sigma, b in enumerate(fam.blocks):
            for r in rootings(g, b.type_graph)[:5]:
                vec = rooted_vector(fam, sigma, g, r)
                assert sum(vec) == 1
                assert all(x >= 0 for x in vec)

    def test_average_rooted_vector(self):
        fam = main_family()
        g = OrientedGraph.from_edges(4, [(0, 1), (2, 3)])
        avg = average_rooted_vector(fam, 2, g)
        assert sum(avg) == 1
        with pytest.raises(ValueError):
            average_rooted_vector(fam, 2, g, roots=[])


class TestDegreeFormulas:
    def test_point_matrix_degree_formula(self):
        rng = random.Random(15)
        fam = k3_family()
        # flag order within the block: non, out, in
        for _ in range(12):
            n = rng.randint(4, 11)
            g = random_oriented(rng, n)
            expect = [[Fraction(0)] * 3 for _ in range(3)]
            for v in range(n):
                dp, dm, d0 = g.degree(v)
                cnt = (d0, dp, dm)
                for i in range(3):
                    for j in range(3):
                        expect[i][j] += Fraction(
                            cnt[i] * (cnt[j] - (i == j)), n * (n - 1) * (n - 2)
                        )
            assert flag_matrix(fam, g)[0] == expect

    def test_point_tilde_degree_formula(self):
        rng = random.Random(16)
        fam = k3_family()
        for _ in range(8):
            n = rng.randint(4, 10)
            g = random_oriented(rng, n)
            expect = [[Fraction(0)] * 3 for _ in range(3)]
            for v in range(n):
                dp, dm, d0 = g.degree(v)
                cnt = (d0, dp, dm)
                for i in range(3):
                    for j in range(3):
                        expect[i][j] += Fraction(cnt[i] * cnt[j], n * (n - 1) ** 2)
            assert flag_matrix_tilde(fam, g)[0] == expect

    def test_goodman_matrix_degree_formula(self):
        rng = random.Random(17)
        fam = goodman_family()
        for _ in range(8):
            n = rng.randint(4, 11)
            g = random_undirected(rng, n)
            expect = [[Fraction(0)] * 2 for _ in range(2)]
            for v in range(n):
                d, d0 = g.degree(v)
                cnt = (d0, d)
                for i in range(2):
                    for j in range(2):
                        expect[i][j] += Fraction(
                            cnt[i] * (cnt[j] - (i == j)), n * (n - 1) * (n - 2)
                        )
            assert flag_matrix(fam, g)[0] == expect


class TestPrintedMatrices:
    def test_k3_class_matrices(self):
        got, class_perm = relabeled_class_matrices(
            k3_family(), K3_PAPER_CLASSES, K3_FLAG_ORDER
        )
        assert sorted(class_perm) == list(range(7))
        for a, b in zip(got, K3_FIXTURES):
            assert a == [[Fraction(x) for x in row] for row in b]
        mine = k3_family().objective()
        assert [mine[i] for i in class_perm] == K3_OBJECTIVE

    def test_goodman_class_matrices(self):
        got, class_perm = relabeled_class_matrices(
            goodman_family(), GOODMAN_PAPER_CLASSES, GOODMAN_FLAG_ORDER
        )
        assert sorted(class_perm) == list(range(4))
        for a, b in zip(got, GOODMAN_FIXTURES):
            assert a == [[Fraction(x) for x in row] for row in b]
        mine = goodman_family().objective()
        assert [mine[i] for i in class_perm] == GOODMAN_OBJECTIVE


class TestMatrixLinearity:
    def linearity_holds(self, fam, g):
        k = fam.k
        counts = class_counts(g, k)
        total = math.comb(g.n, k)
        cm = class_matrices(fam)
        sizes = fam.block_sizes()
        rhs = [[[Fraction(0)] * m for _ in range(m)] for m in sizes]
        for idx, c in enumerate(counts):
            if not c:
                continue
            p = Fraction(c, total)
            for b in range(len(sizes)):
                blk = cm[idx][b]
                for i in range(sizes[b]):
                    for j in range(sizes[b]):
                        rhs[b][i][j] += p * blk[i][j]
        return flag_matrix(fam, g) == rhs

    def test_linearity_main_family(self):
        rng = random.Random(18)
        fam = main_family()
        for _ in range(12):
            g = random_oriented(rng, rng.randint(5, 11))
            assert self.linearity_holds(fam, g)

    def test_linearity_k3_family(self):
        rng = random.Random(19)
        fam = k3_family()
        for _ in range(12):
            g = random_oriented(rng, rng.randint(4, 12))
            assert self.linearity_holds(fam, g)

    def test_linearity_goodman_family(self):
        rng = random.Random(20)
        fam = goodman_family()
        for _ in range(8):
            g = random_undirected(rng, rng.randint(4, 12))
            assert self.linearity_holds(fam, g)

    def test_rooting_uniform_density_is_not_linear(self):
        # The per-rooting pair density weights subsets by their rooting
        # counts, so it cannot be recovered from class densities alone:
        # one edge plus three isolated vertices is the smallest witness.
        fam = main_family()
        g = OrientedGraph.from_edges(5, [(0, 1)])
        iso = fam.blocks[2].flags[0]  # edge root, isolated petal
        assert p_flag_pair(iso, iso, g) == 1
        # the class-density mixture of the per-rooting densities disagrees
        counts = class_counts(g, 4)
        cm = class_matrices(fam)
        mix = sum(
            Fraction(c, 5) * pair_density_blocks(fam, fam.classes()[i])[2][0][0]
            for i, c in enumerate(counts)
        )
        assert mix == Fraction(3, 5) != 1
        # the tuple-normalized matrix scales by the rooting frequency
        a = flag_matrix(fam, g)[2][0][0]
        assert a == Fraction(1, 20) == 1 * Fraction(1, 20)

    def test_small_graph_matrices_are_zero(self):
        fam = main_family()
        g = OrientedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
        assert all(
            all(all(x == 0 for x in row) for row in blk) for blk in flag_matrix(fam, g)
        )

    def test_k_vertex_graph_hits_class_matrix(self):
        fam = main_family()
        classes = fam.classes()
        cm = class_matrices(fam)
        g = classes[17].relabel((2, 0, 3, 1))
        idx = class_counts(g, 4).index(1)
        assert idx == 17
        assert flag_matrix(fam, g) == list(cm[17])


class TestTildeMatrix:
    def test_tilde_entries_are_independent_pair_densities(self):
        rng = random.Random(21)
        fam = main_family()
        for _ in range(3):
            g = random_oriented(rng, rng.randint(5, 7))
            blocks = flag_matrix_tilde(fam, g)
            for b, mat in zip(fam.blocks, blocks):
                i, j = rng.randrange(b.size), rng.randrange(b.size)
                assert mat[i][j] == p_tilde(b.flags[i], b.flags[j], g)

    def test_tilde_blocks_psd(self):
        rng = random.Random(22)
        for fam, maker in (
            (main_family(), random_oriented),
            (goodman_family(), random_undirected),
        ):
            for _ in range(4):
                g = maker(rng, rng.randint(5, 9))
                for blk in flag_matrix_tilde(fam, g):
                    assert is_psd(blk)

    def test_tilde_zero_without_rootings(self):
        fam = main_family()
        tournament = OrientedGraph.from_edges(
            4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        )
        blk = flag_matrix_tilde(fam, tournament)[1]
        assert all(all(x == 0 for x in row) for row in blk)

    def test_pair_density_close_to_independent_version(self):
        # |p - p~| <= l1*l2/(n-s) entrywise, as exact rationals
        rng = random.Random(23)
        fam = main_family()
        for _ in range(10):
            n = rng.randint(6, 12)
            g = random_oriented(rng, n)
            P = pair_density_blocks(fam, g)
            Pt = flag_matrix_tilde(fam, g)
            for b, mp, mt in zip(fam.blocks, P, Pt):
                s, ell = b.type_graph.n, b.petals
                bound = Fraction(ell * ell, n - s)
                for i in range(b.size):
                    for j in range(b.size):
                        assert abs(mp[i][j] - mt[i][j]) <= bound


class TestObjective:
    def test_objective_vs_census(self):
        rng = random.Random(24)
        fam = main_family()
        c = fam.objective()
        for _ in range(10):
            g = random_oriented(rng, rng.randint(5, 11))
            counts = class_counts(g, 4)
            total = math.comb(g.n, 4)
            lhs = sum(Fraction(cnt, total) * ci for cnt, ci in zip(counts, c))
            assert lhs == triple_census(g).objective

    def test_certificate_slack_identity(self):
        # for any symmetric block matrix M:
        # sum_i p_i (c_i - <M, A_i>) == (t+i) - <M, A_G>
        rng = random.Random(25)
        fam = main_family()
        c = fam.objective()
        cm = class_matrices(fam)
        for _ in range(4):
            sizes = fam.block_sizes()
            M = []
            for m in sizes:
                rows = [[Fraction(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(m)] for _ in range(m)]
                M.append([[rows[i][j] + rows[j][i] for j in range(m)] for i in range(m)])
            g = random_oriented(rng, rng.randint(6, 10))
            counts = class_counts(g, 4)
            total = math.comb(g.n, 4)
            lhs = sum(
                Fraction(cnt, total) * (ci - block_inner(M, list(cm[i])))
                for i, (cnt, ci) in enumerate(zip(counts, c))
            )
            rhs = triple_census(g).objective - block_inner(M, flag_matrix(fam, g))
            assert lhs == rhs


class TestManifest:
    def test_manifest_round_trips_as_json(self):
        import json

        man = family_manifest(main_family())
        text = json.dumps(man)
        back = json.loads(text)
        assert back["k"] == 4
        assert [t["name"] for t in back["types"]] == ["empty", "nonedge", "edge"]
        assert [len(t["flags"]) for t in back["types"]] == [2, 9, 9]
