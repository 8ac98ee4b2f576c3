"""Oriented and undirected graphs: canonical forms, enumeration, densities.

Oriented graphs store a full relation matrix with rel[u][v] in {0, +1, -1}
(+1 means the edge u -> v).  Undirected graphs use {0, 1}.  Vertices are
0-based.  Isomorphism classes are always represented by the lexicographically
least relabeling of the pair-code string, so class lists have a stable order:
ascending (edge count, canonical bytes).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

_CANONICAL_MAX = 10
_DENSITY_MAX = 30


@dataclass(frozen=True)
class OrientedGraph:
    n: int
    rel: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative vertex count")
        if len(self.rel) != self.n or any(len(r) != self.n for r in self.rel):
            raise ValueError("relation matrix shape mismatch")
        for u in range(self.n):
            if self.rel[u][u] != 0:
                raise ValueError("loops are not allowed")
            for v in range(self.n):
                if self.rel[u][v] not in (-1, 0, 1):
                    raise ValueError("relation values must be -1, 0 or +1")
                if self.rel[u][v] != -self.rel[v][u]:
                    raise ValueError("relation matrix must be antisymmetric")

    @staticmethod
    def from_edges(n: int, edges) -> "OrientedGraph":
        rel = [[0] * n for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            if rel[u][v] or rel[v][u]:
                raise ValueError(f"duplicate or anti-parallel edge ({u}, {v})")
            rel[u][v] = 1
            rel[v][u] = -1
        return OrientedGraph(n, tuple(tuple(r) for r in rel))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [
            (u, v)
            for u in range(self.n)
            for v in range(self.n)
            if self.rel[u][v] == 1
        ]

    @property
    def edge_count(self) -> int:
        return sum(row.count(1) for row in self.rel)

    def induced(self, vertices) -> "OrientedGraph":
        vs = list(vertices)
        return OrientedGraph(
            len(vs), tuple(tuple(self.rel[u][v] for v in vs) for u in vs)
        )

    def relabel(self, perm) -> "OrientedGraph":
        """perm[old] = new vertex number."""
        n = self.n
        rel = [[0] * n for _ in range(n)]
        for u in range(n):
            for v in range(n):
                rel[perm[u]][perm[v]] = self.rel[u][v]
        return OrientedGraph(n, tuple(tuple(r) for r in rel))

    def reverse(self) -> "OrientedGraph":
        return OrientedGraph(
            self.n, tuple(tuple(-x for x in row) for row in self.rel)
        )

    def pair_code(self, order=None) -> bytes:
        """Trit string over vertex pairs in lex order; 0 none, 1 fwd, 2 bwd."""
        vs = list(order) if order is not None else list(range(self.n))
        out = bytearray()
        for i in range(self.n):
            for j in range(i + 1, self.n):
                r = self.rel[vs[i]][vs[j]]
                out.append(0 if r == 0 else (1 if r == 1 else 2))
        return bytes(out)

    def canonical_form(self) -> bytes:
        return _canonical(self)

    def degree(self, v: int) -> tuple[int, int, int]:
        row = self.rel[v]
        dp = row.count(1)
        dm = row.count(-1)
        return dp, dm, self.n - 1 - dp - dm


@dataclass(frozen=True)
class UndirectedGraph:
    n: int
    rel: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.rel) != self.n or any(len(r) != self.n for r in self.rel):
            raise ValueError("relation matrix shape mismatch")
        for u in range(self.n):
            if self.rel[u][u] != 0:
                raise ValueError("loops are not allowed")
            for v in range(self.n):
                if self.rel[u][v] not in (0, 1):
                    raise ValueError("relation values must be 0 or 1")
                if self.rel[u][v] != self.rel[v][u]:
                    raise ValueError("relation matrix must be symmetric")

    @staticmethod
    def from_edges(n: int, edges) -> "UndirectedGraph":
        rel = [[0] * n for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            rel[u][v] = rel[v][u] = 1
        return UndirectedGraph(n, tuple(tuple(r) for r in rel))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [
            (u, v)
            for u in range(self.n)
            for v in range(u + 1, self.n)
            if self.rel[u][v]
        ]

    @property
    def edge_count(self) -> int:
        return sum(row.count(1) for row in self.rel) // 2

    def induced(self, vertices) -> "UndirectedGraph":
        vs = list(vertices)
        return UndirectedGraph(
            len(vs), tuple(tuple(self.rel[u][v] for v in vs) for u in vs)
        )

    def pair_code(self, order=None) -> bytes:
        vs = list(order) if order is not None else list(range(self.n))
        out = bytearray()
        for i in range(self.n):
            for j in range(i + 1, self.n):
                out.append(self.rel[vs[i]][vs[j]])
        return bytes(out)

    def canonical_form(self) -> bytes:
        return _canonical(self)

    def degree(self, v: int) -> tuple[int, int]:
        d = self.rel[v].count(1)
        return d, self.n - 1 - d


Graph = OrientedGraph | UndirectedGraph


def _vertex_invariants(g) -> list:
    if isinstance(g, OrientedGraph):
        base = [(g.rel[v].count(1), g.rel[v].count(-1)) for v in range(g.n)]
    else:
        base = [(g.rel[v].count(1),) for v in range(g.n)]
    # one color-refinement round sharpens the blocks without losing soundness
    refined = []
    for v in range(g.n):
        nb = sorted(
            (g.rel[v][w], base[w]) for w in range(g.n) if g.rel[v][w] != 0
        )
        refined.append((base[v], tuple(nb)))
    return refined


def _canonical(g) -> bytes:
    n = g.n
    if n > _CANONICAL_MAX:
        raise ValueError(f"canonical_form supports at most {_CANONICAL_MAX} vertices")
    if n <= 1:
        return g.pair_code()
    inv = _vertex_invariants(g)
    blocks: dict = {}
    for v in range(n):
        blocks.setdefault(inv[v], []).append(v)
    # positions are filled block by block in sorted invariant order; any
    # isomorphism preserves invariants, so the minimum over within-block
    # arrangements is isomorphism-invariant
    ordered_blocks = [blocks[k] for k in sorted(blocks)]
    best = None
    for arrangement in itertools.product(
        *(itertools.permutations(b) for b in ordered_blocks)
    ):
        order = [v for block in arrangement for v in block]
        code = g.pair_code(order)
        if best is None or code < best:
            best = code
    return best


def _oriented_from_code(n: int, code) -> OrientedGraph:
    rel = [[0] * n for _ in range(n)]
    it = iter(code)
    for i in range(n):
        for j in range(i + 1, n):
            c = next(it)
            if c == 1:
                rel[i][j], rel[j][i] = 1, -1
            elif c == 2:
                rel[i][j], rel[j][i] = -1, 1
    return OrientedGraph(n, tuple(tuple(r) for r in rel))


def _undirected_from_code(n: int, code) -> UndirectedGraph:
    rel = [[0] * n for _ in range(n)]
    it = iter(code)
    for i in range(n):
        for j in range(i + 1, n):
            c = next(it)
            rel[i][j] = rel[j][i] = c
    return UndirectedGraph(n, tuple(tuple(r) for r in rel))


@lru_cache(maxsize=None)
def enumerate_oriented(k: int) -> tuple[OrientedGraph, ...]:
    """All isomorphism classes of oriented graphs on k vertices, 1 <= k <= 5.

    Representatives are in canonical relabeling; the list is ordered by
    (edge count, canonical bytes).
    """
    if not 1 <= k <= 5:
        raise ValueError("enumerate_oriented supports 1 <= k <= 5")
    if k <= 4:
        seen = set()
        for code in itertools.product((0, 1, 2), repeat=comb(k, 2)):
            seen.add(_canonical(_oriented_from_code(k, code)))
    else:
        seen = set()
        for rep in enumerate_oriented(4):
            for col in itertools.product((-1, 0, 1), repeat=4):
                rel = [list(row) + [-col[u]] for u, row in enumerate(rep.rel)]
                rel.append(list(col) + [0])
                g = OrientedGraph(5, tuple(tuple(r) for r in rel))
                seen.add(_canonical(g))
    reps = [_oriented_from_code(k, code) for code in seen]
    reps.sort(key=lambda g: (g.edge_count, g.canonical_form()))
    return tuple(reps)


@lru_cache(maxsize=None)
def enumerate_undirected(k: int) -> tuple[UndirectedGraph, ...]:
    """All isomorphism classes of undirected graphs on k vertices, k <= 5."""
    if not 1 <= k <= 5:
        raise ValueError("enumerate_undirected supports 1 <= k <= 5")
    seen = set()
    for code in itertools.product((0, 1), repeat=comb(k, 2)):
        seen.add(_canonical(_undirected_from_code(k, code)))
    reps = [_undirected_from_code(k, code) for code in seen]
    reps.sort(key=lambda g: (g.edge_count, g.canonical_form()))
    return tuple(reps)


@lru_cache(maxsize=None)
def oriented_class_table(k: int) -> dict[bytes, int]:
    """Map from a k-vertex pair code to its class index; 1 <= k <= 4."""
    if not 1 <= k <= 4:
        raise ValueError("class tables are built for 1 <= k <= 4")
    classes = enumerate_oriented(k)
    index = {g.canonical_form(): i for i, g in enumerate(classes)}
    table = {}
    for code in itertools.product((0, 1, 2), repeat=comb(k, 2)):
        g = _oriented_from_code(k, code)
        table[bytes(code)] = index[_canonical(g)]
    return table


@lru_cache(maxsize=None)
def undirected_class_table(k: int) -> dict[bytes, int]:
    if not 1 <= k <= 4:
        raise ValueError("class tables are built for 1 <= k <= 4")
    classes = enumerate_undirected(k)
    index = {g.canonical_form(): i for i, g in enumerate(classes)}
    table = {}
    for code in itertools.product((0, 1), repeat=comb(k, 2)):
        g = _undirected_from_code(k, code)
        table[bytes(code)] = index[_canonical(g)]
    return table


def class_counts(g, k: int) -> list[int]:
    """Number of k-subsets of V(g) inducing each k-vertex class."""
    classes = (
        enumerate_oriented(k)
        if isinstance(g, OrientedGraph)
        else enumerate_undirected(k)
    )
    counts = [0] * len(classes)
    if k > g.n:
        return counts
    if k <= 4:
        table = (
            oriented_class_table(k)
            if isinstance(g, OrientedGraph)
            else undirected_class_table(k)
        )
        for subset in itertools.combinations(range(g.n), k):
            counts[table[g.induced(subset).pair_code()]] += 1
    else:
        index = {c.canonical_form(): i for i, c in enumerate(classes)}
        memo: dict[bytes, int] = {}
        for subset in itertools.combinations(range(g.n), k):
            code = g.induced(subset).pair_code()
            i = memo.get(code)
            if i is None:
                i = memo[code] = index[_canonical(g.induced(subset))]
            counts[i] += 1
    return counts


def density(h, g) -> Fraction:
    """Induced density of h in g: the probability that |h| random vertices
    of g span a copy of h."""
    if type(h) is not type(g):
        raise TypeError("mixed graph kinds")
    if g.n > _DENSITY_MAX:
        raise ValueError(f"density supports at most {_DENSITY_MAX} vertices")
    k = h.n
    if k > g.n:
        return Fraction(0)
    target = h.canonical_form()
    memo: dict[bytes, bool] = {}
    hits = 0
    for subset in itertools.combinations(range(g.n), k):
        code = g.induced(subset).pair_code()
        ok = memo.get(code)
        if ok is None:
            ok = memo[code] = _canonical(g.induced(subset)) == target
        hits += ok
    return Fraction(hits, comb(g.n, k))


@dataclass(frozen=True)
class TripleCensus:
    """Counts of 3-vertex subsets by kind; mixed = one or two edges."""

    transitive: int
    independent: int
    cyclic: int
    mixed: int

    @property
    def total(self) -> int:
        return self.transitive + self.independent + self.cyclic + self.mixed

    @property
    def t_density(self) -> Fraction:
        return Fraction(self.transitive, self.total)

    @property
    def i_density(self) -> Fraction:
        return Fraction(self.independent, self.total)

    @property
    def c_density(self) -> Fraction:
        return Fraction(self.cyclic, self.total)

    @property
    def objective(self) -> Fraction:
        """t(G) + i(G)."""
        return Fraction(self.transitive + self.independent, self.total)


def _classify_triple(ruv: int, ruw: int, rvw: int) -> int:
    """0 transitive, 1 independent, 2 cyclic, 3 mixed."""
    m = (ruv != 0) + (ruw != 0) + (rvw != 0)
    if m == 0:
        return 1
    if m < 3:
        return 3
    # out-degrees within the triple: cyclic iff all equal 1
    du = (ruv == 1) + (ruw == 1)
    dv = (ruv == -1) + (rvw == 1)
    if du == 1 and dv == 1:
        return 2
    return 0


def triple_census(g: OrientedGraph) -> TripleCensus:
    if g.n < 3:
        raise ValueError("need at least 3 vertices")
    counts = [0, 0, 0, 0]
    rel = g.rel
    for u, v, w in itertools.combinations(range(g.n), 3):
        counts[_classify_triple(rel[u][v], rel[u][w], rel[v][w])] += 1
    return TripleCensus(*counts)


def degree_profile(g: OrientedGraph) -> tuple[tuple[int, int, int], ...]:
    """Per-vertex (out, in, non) degree triples."""
    return tuple(g.degree(v) for v in range(g.n))


def brute_force_tau(n: int) -> tuple[Fraction, OrientedGraph]:
    """Minimum of t+i over all n-vertex oriented graphs, with a witness.

    Exhaustive over isomorphism classes for n <= 5; for n = 6 every class is
    reached as a one-vertex extension of a 5-vertex class representative.
    """
    if not 3 <= n <= 6:
        raise ValueError("brute_force_tau supports 3 <= n <= 6")
    if n <= 5:
        best = None
        for g in enumerate_oriented(n):
            val = triple_census(g).objective
            if best is None or val < best[0]:
                best = (val, g)
        return best
    total = comb(6, 3)
    best_bad = None
    for rep in enumerate_oriented(5):
        base = triple_census(rep)
        base_bad = base.transitive + base.independent
        rel = rep.rel
        for col in itertools.product((-1, 0, 1), repeat=5):
            bad = base_bad
            for u in range(5):
                for v in range(u + 1, 5):
                    kind = _classify_triple(rel[u][v], -col[u], -col[v])
                    bad += kind == 0 or kind == 1
            if best_bad is None or bad < best_bad[0]:
                best_bad = (bad, rep, col)
    bad, rep, col = best_bad
    rows = [list(row) + [-col[u]] for u, row in enumerate(rep.rel)]
    rows.append(list(col) + [0])
    witness = OrientedGraph(6, tuple(tuple(r) for r in rows))
    return Fraction(bad, total), witness


# ---------------------------------------------------------------------------
# serialization


def graph_to_json(g) -> dict:
    obj = {"n": g.n, "edges": sorted([list(e) for e in g.edges])}
    if isinstance(g, UndirectedGraph):
        obj["undirected"] = True
    return obj


def graph_from_json(obj: dict):
    n = obj["n"]
    edges = [tuple(e) for e in obj.get("edges", [])]
    if obj.get("undirected"):
        return UndirectedGraph.from_edges(n, edges)
    return OrientedGraph.from_edges(n, edges)


def parse_digraph6(s: str) -> OrientedGraph:
    """Decode a digraph6 string (leading '&', n <= 62) to an oriented graph.

    Anti-parallel pairs and loops are rejected.
    """
    s = s.strip()
    if not s.startswith("&"):
        raise ValueError("digraph6 strings start with '&'")
    data = [ord(ch) - 63 for ch in s[1:]]
    if not data or any(not 0 <= x < 64 for x in data):
        raise ValueError("malformed digraph6 payload")
    n = data[0]
    if n > 62:
        raise ValueError("only single-byte vertex counts are supported")
    bits = []
    for x in data[1:]:
        bits.extend((x >> shift) & 1 for shift in range(5, -1, -1))
    if len(bits) < n * n:
        raise ValueError("digraph6 payload too short")
    rel = [[0] * n for _ in range(n)]
    for u in range(n):
        for v in range(n):
            if not bits[u * n + v]:
                continue
            if u == v:
                raise ValueError("loops are not allowed")
            if rel[v][u] == 1:
                raise ValueError(f"anti-parallel pair between {u} and {v}")
            rel[u][v] = 1
            rel[v][u] = -1
    return OrientedGraph(n, tuple(tuple(r) for r in rel))
