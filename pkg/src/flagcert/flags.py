"""Rooted flags, density pairings, and flag matrices.

A flag is a small graph with its first ``root_size`` vertices labelled; the
labelled part is the flag's type.  Families bundle the flag lists used by the
semidefinite programs: for each type sigma we take all flags with
floor((k + |sigma|) / 2) vertices, so that two flags rooted on a shared copy
of sigma span at most k vertices.

Densities follow the convention that p(F1, F2; G) is the probability that a
uniformly random rooting of G, extended by disjoint uniformly random petal
sets, induces F1 and F2.  Whenever the construction is impossible (no rooting,
or too few vertices) the density is 0.

Flag matrices average per-rooting statistics over k-vertex subsets: A_G is
the mean of A_{G[U]} over all k-subsets U, which makes A linear in the
k-vertex class densities.  The independent-petal variant A~_G averages the
outer product of the rooted density vector over rootings of all of G.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .exact_arith import Rational
from .graphs import (
    Graph,
    OrientedGraph,
    UndirectedGraph,
    enumerate_oriented,
    enumerate_undirected,
)

Matrix = list[list[Rational]]


@dataclass(frozen=True)
class Flag:
    """A graph whose first ``root_size`` vertices are labelled."""

    graph: Graph
    root_size: int

    def __post_init__(self) -> None:
        if not 0 <= self.root_size <= self.graph.n:
            raise ValueError("root size out of range")

    @property
    def petals(self) -> int:
        return self.graph.n - self.root_size

    def type_graph(self) -> Graph:
        return self.graph.induced(range(self.root_size))

    def rooted_code(self) -> bytes:
        """Canonical encoding: roots stay fixed, petals may permute."""
        return _rooted_code(self.graph, self.root_size)

    def pattern(self) -> tuple[int, ...]:
        """Relations from each root to the petal (single-petal flags only)."""
        if self.petals != 1:
            raise ValueError("pattern is defined for single-petal flags")
        p = self.root_size
        return tuple(self.graph.rel[r][p] for r in range(self.root_size))


def _rooted_code(g: Graph, root_size: int) -> bytes:
    petals = range(root_size, g.n)
    best = None
    for perm in itertools.permutations(petals):
        code = g.pair_code(tuple(range(root_size)) + perm)
        if best is None or code < best:
            best = code
    assert best is not None
    return best


def _petal_extensions(type_graph: Graph, petals: int):
    """All graphs extending the type by ``petals`` new vertices."""
    s = type_graph.n
    n = s + petals
    values = (0, 1, -1) if isinstance(type_graph, OrientedGraph) else (0, 1)
    new_pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if j >= s]
    for assign in itertools.product(values, repeat=len(new_pairs)):
        rel = [[0] * n for _ in range(n)]
        for i in range(s):
            for j in range(s):
                rel[i][j] = type_graph.rel[i][j]
        for (i, j), v in zip(new_pairs, assign):
            rel[i][j] = v
            rel[j][i] = -v if isinstance(type_graph, OrientedGraph) else v
        cls = type(type_graph)
        yield cls(n, tuple(tuple(row) for row in rel))


def enumerate_flags(type_graph: Graph, petals: int) -> tuple[Flag, ...]:
    """All flags over the given type, sorted by edge count then encoding."""
    s = type_graph.n
    seen: dict[bytes, Flag] = {}
    for g in _petal_extensions(type_graph, petals):
        code = _rooted_code(g, s)
        if code not in seen:
            seen[code] = Flag(g, s)
    ordered = sorted(seen.values(), key=lambda f: (f.graph.edge_count, f.rooted_code()))
    return tuple(ordered)


def rootings(g: Graph, type_graph: Graph) -> list[tuple[int, ...]]:
    """Injective vertex tuples of g inducing the type, labels in order."""
    s = type_graph.n
    if s == 0:
        return [()]
    out = []
    for tup in itertools.permutations(range(g.n), s):
        if all(
            g.rel[tup[i]][tup[j]] == type_graph.rel[i][j]
            for i in range(s)
            for j in range(i + 1, s)
        ):
            out.append(tup)
    return out


@dataclass(frozen=True)
class TypeBlock:
    """One type together with its flag list."""

    name: str
    type_graph: Graph
    petals: int
    flags: tuple[Flag, ...]

    @property
    def size(self) -> int:
        return len(self.flags)


def _make_block(name: str, type_graph: Graph, petals: int) -> TypeBlock:
    return TypeBlock(name, type_graph, petals, enumerate_flags(type_graph, petals))


@dataclass(frozen=True)
class FlagFamily:
    """Flag blocks for one target class size k, plus the class list."""

    kind: str
    k: int
    blocks: tuple[TypeBlock, ...]

    def classes(self) -> tuple[Graph, ...]:
        if self.kind == "oriented":
            return enumerate_oriented(self.k)
        return enumerate_undirected(self.k)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(b.size for b in self.blocks)

    def objective(self) -> list[Rational]:
        """Per-class density of good triples: transitive plus independent
        for oriented classes, triangle plus empty for undirected ones."""
        from .graphs import triple_census

        return [triple_census(g).objective for g in self.classes()]


@lru_cache(maxsize=None)
def main_family() -> FlagFamily:
    """k = 4 oriented family: types empty, nonedge, edge."""
    empty = OrientedGraph(0, ())
    nonedge = OrientedGraph(2, ((0, 0), (0, 0)))
    edge = OrientedGraph(2, ((0, 1), (-1, 0)))
    blocks = (
        _make_block("empty", empty, 2),
        _make_block("nonedge", nonedge, 1),
        _make_block("edge", edge, 1),
    )
    return FlagFamily("oriented", 4, blocks)


@lru_cache(maxsize=None)
def k3_family() -> FlagFamily:
    """k = 3 oriented family: the single one-vertex type."""
    point = OrientedGraph(1, ((0,),))
    return FlagFamily("oriented", 3, (_make_block("point", point, 1),))


@lru_cache(maxsize=None)
def goodman_family() -> FlagFamily:
    """k = 3 undirected family for the monochromatic-triangle bound."""
    point = UndirectedGraph(1, ((0,),))
    return FlagFamily("undirected", 3, (_make_block("point", point, 1),))


def _pattern_index(block: TypeBlock) -> dict[tuple[int, ...], int]:
    return {f.pattern(): i for i, f in enumerate(block.flags)}


def _petal_class_index(block: TypeBlock) -> dict[bytes, int]:
    """For multi-petal flags over the empty type: petal graph -> flag."""
    out = {}
    for i, f in enumerate(block.flags):
        out[f.graph.canonical_form()] = i
    return out


def rooted_vector(
    family: FlagFamily, sigma: int, g: Graph, rooting: tuple[int, ...]
) -> list[Rational]:
    """Densities p(F, (g, rooting)) for every flag F of the given block."""
    block = family.blocks[sigma]
    s = block.type_graph.n
    if len(rooting) != s:
        raise ValueError("rooting has wrong size")
    rest = [v for v in range(g.n) if v not in rooting]
    ell = block.petals
    if len(rest) < ell:
        raise ValueError("graph too small for the petals")
    if ell == 1:
        idx = _pattern_index(block)
        counts = [0] * block.size
        for w in rest:
            counts[idx[tuple(g.rel[r][w] for r in rooting)]] += 1
        return [Fraction(c, len(rest)) for c in counts]
    cls = _petal_class_index(block)
    counts = [0] * block.size
    for sub in itertools.combinations(rest, ell):
        counts[cls[g.induced(sub).canonical_form()]] += 1
    return [Fraction(c, math.comb(len(rest), ell)) for c in counts]


def average_rooted_vector(
    family: FlagFamily,
    sigma: int,
    g: Graph,
    roots: list[tuple[int, ...]] | None = None,
) -> list[Rational]:
    """Mean of rooted_vector over the given rootings (default: all)."""
    if roots is None:
        roots = rootings(g, family.blocks[sigma].type_graph)
    if not roots:
        raise ValueError("no rootings to average over")
    total = [Fraction(0)] * family.blocks[sigma].size
    for r in roots:
        vec = rooted_vector(family, sigma, g, r)
        total = [a + b for a, b in zip(total, vec)]
    return [x / len(roots) for x in total]


def _same_type(f1: Flag, f2: Flag) -> bool:
    if f1.root_size != f2.root_size:
        return False
    return f1.type_graph() == f2.type_graph()


def p_flag_pair(f1: Flag, f2: Flag, g: Graph) -> Rational:
    """Probability that a uniform rooting plus disjoint uniform petal sets
    of g induce f1 and f2.  Zero when no rooting exists, the types differ,
    or g is too small."""
    if not _same_type(f1, f2):
        return Fraction(0)
    tg = f1.type_graph()
    roots = rootings(g, tg)
    if not roots:
        return Fraction(0)
    s = tg.n
    l1, l2 = f1.petals, f2.petals
    if g.n - s < l1 + l2:
        return Fraction(0)
    code1, code2 = f1.rooted_code(), f2.rooted_code()
    hits = 0
    for r in roots:
        rest = [v for v in range(g.n) if v not in r]
        for sub1 in itertools.combinations(rest, l1):
            if _rooted_code(g.induced(r + sub1), s) != code1:
                continue
            remaining = [v for v in rest if v not in sub1]
            for sub2 in itertools.combinations(remaining, l2):
                if _rooted_code(g.induced(r + sub2), s) == code2:
                    hits += 1
    n1 = g.n - s
    denom = len(roots) * math.comb(n1, l1) * math.comb(n1 - l1, l2)
    return Fraction(hits, denom)


def p_tilde(f1: Flag, f2: Flag, g: Graph) -> Rational:
    """Like p_flag_pair but with the two petal sets drawn independently,
    so they may overlap."""
    if not _same_type(f1, f2):
        return Fraction(0)
    tg = f1.type_graph()
    roots = rootings(g, tg)
    if not roots:
        return Fraction(0)
    s = tg.n
    l1, l2 = f1.petals, f2.petals
    if g.n - s < max(l1, l2):
        return Fraction(0)
    code1, code2 = f1.rooted_code(), f2.rooted_code()
    total = Fraction(0)
    n1 = g.n - s
    for r in roots:
        rest = [v for v in range(g.n) if v not in r]
        c1 = sum(
            1
            for sub in itertools.combinations(rest, l1)
            if _rooted_code(g.induced(r + sub), s) == code1
        )
        c2 = sum(
            1
            for sub in itertools.combinations(rest, l2)
            if _rooted_code(g.induced(r + sub), s) == code2
        )
        total += Fraction(c1 * c2, math.comb(n1, l1) * math.comb(n1, l2))
    return total / len(roots)


def _block_matrix_small(block: TypeBlock, g: Graph) -> tuple[list[list[int]], int]:
    """Raw rooted pair counts for one block, plus the rooting count.

    acc[i][j] is the number of (rooting, petal sets) triples realizing the
    flag pair (i, j); callers divide by their own normalizer.
    """
    m = block.size
    acc = [[0] * m for _ in range(m)]
    roots = rootings(g, block.type_graph)
    s = block.type_graph.n
    ell = block.petals
    n1 = g.n - s
    if not roots or n1 < 2 * ell:
        return acc, len(roots)
    if ell == 1:
        idx = _pattern_index(block)
        for r in roots:
            counts = [0] * m
            for w in range(g.n):
                if w in r:
                    continue
                counts[idx[tuple(g.rel[a][w] for a in r)]] += 1
            for i in range(m):
                if not counts[i]:
                    continue
                for j in range(m):
                    acc[i][j] += counts[i] * (counts[j] - (i == j))
    else:
        cls = _petal_class_index(block)
        for r in roots:
            rest = [v for v in range(g.n) if v not in r]
            for sub1 in itertools.combinations(rest, ell):
                i = cls[g.induced(sub1).canonical_form()]
                remaining = [v for v in rest if v not in sub1]
                for sub2 in itertools.combinations(remaining, ell):
                    acc[i][cls[g.induced(sub2).canonical_form()]] += 1
    return acc, len(roots)


def _petal_norm(block: TypeBlock, n: int) -> int:
    n1 = n - block.type_graph.n
    ell = block.petals
    return math.comb(n1, ell) * math.comb(n1 - ell, ell)


def pair_density_blocks(family: FlagFamily, g: Graph) -> list[Matrix]:
    """p(F1, F2; g) for every same-type flag pair, one counting pass per
    block.  Agrees entrywise with p_flag_pair."""
    out = []
    for block in family.blocks:
        acc, n_roots = _block_matrix_small(block, g)
        denom = n_roots * _petal_norm(block, g.n)
        if denom == 0:
            denom = 1
        out.append([[Fraction(x, denom) for x in row] for row in acc])
    return out


@lru_cache(maxsize=None)
def _count_table(family: FlagFamily) -> dict[bytes, tuple]:
    """Per canonical k-class code: raw integer pair-count block matrices."""
    table = {}
    for g in family.classes():
        raw = []
        for block in family.blocks:
            acc, _ = _block_matrix_small(block, g)
            raw.append(tuple(tuple(row) for row in acc))
        table[g.canonical_form()] = tuple(raw)
    return table


def flag_matrix(family: FlagFamily, g: Graph) -> list[Matrix]:
    """Blocks of A_g: rooted pair counts per k-subset, normalized by the
    number of ordered root tuples and petal choices.

    Dividing by ordered tuples rather than realized rootings makes the
    matrix exactly linear in the class densities: A_g = sum_i p_i A_{G_i}.
    Blocks of a type with few valid rootings in g scale down accordingly.
    For an n-vertex graph with n < k every block is zero.
    """
    k = family.k
    sizes = family.block_sizes()
    if g.n < k:
        return [[[Fraction(0)] * m for _ in range(m)] for m in sizes]
    table = _count_table(family)
    counts: dict[bytes, int] = {}
    for sub in itertools.combinations(range(g.n), k):
        code = g.induced(sub).canonical_form()
        counts[code] = counts.get(code, 0) + 1
    total = math.comb(g.n, k)
    out = []
    for sigma, m in enumerate(sizes):
        block = family.blocks[sigma]
        acc = [[0] * m for _ in range(m)]
        for code, c in counts.items():
            blk = table[code][sigma]
            for i in range(m):
                row = blk[i]
                if any(row):
                    for j in range(m):
                        acc[i][j] += c * row[j]
        denom = (
            math.perm(k, block.type_graph.n) * _petal_norm(block, k) * total
        )
        out.append([[Fraction(x, denom) for x in row] for row in acc])
    return out


def flag_matrix_tilde(family: FlagFamily, g: Graph) -> list[Matrix]:
    """Blocks of A~_g: rooted density outer products averaged over all
    rootings of g itself, with the two petal sets drawn independently."""
    out = []
    for sigma, block in enumerate(family.blocks):
        m = block.size
        roots = rootings(g, block.type_graph)
        if not roots or g.n - block.type_graph.n < block.petals:
            out.append([[Fraction(0)] * m for _ in range(m)])
            continue
        acc = [[Fraction(0)] * m for _ in range(m)]
        for r in roots:
            vec = rooted_vector(family, sigma, g, r)
            for i in range(m):
                if vec[i]:
                    for j in range(m):
                        acc[i][j] += vec[i] * vec[j]
        out.append([[x / len(roots) for x in row] for row in acc])
    return out


@lru_cache(maxsize=None)
def class_matrices(family: FlagFamily) -> tuple[tuple[Matrix, ...], ...]:
    """A_{G_i} for every k-vertex class, in class order."""
    return tuple(tuple(flag_matrix(family, g)) for g in family.classes())


def block_inner(m1: list[Matrix], m2: list[Matrix]):
    """Frobenius inner product summed over blocks."""
    total = 0
    for a, b in zip(m1, m2):
        for ra, rb in zip(a, b):
            for x, y in zip(ra, rb):
                total += x * y
    return total


def family_manifest(family: FlagFamily) -> dict:
    """JSON-ready description of the family's types and flags."""
    from .graphs import graph_to_json

    return {
        "kind": family.kind,
        "k": family.k,
        "types": [
            {
                "name": b.name,
                "graph": graph_to_json(b.type_graph),
                "petals": b.petals,
                "flags": [
                    {"graph": graph_to_json(f.graph), "roots": f.root_size}
                    for f in b.flags
                ],
            }
            for b in family.blocks
        ],
    }
