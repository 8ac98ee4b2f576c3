"""Extremal constructions: cyclic-triangle blowups, their perturbations,
and the sporadic circulants.

The blowup B_n splits n vertices into three nearly equal parts V_0, V_1, V_2
and takes all edges from V_i to V_{i+1 mod 3}.  Limit statistics as n grows
are computed exactly at the pattern level: k vertices land in the parts
uniformly and independently, so each of the 3^k part assignments contributes
weight 3^-k to the class its induced pattern realizes.  Random edge deletion
enters the same computation as an exact polynomial in the deletion
probability.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .exact_arith import Rational
from .graphs import OrientedGraph, enumerate_oriented

Vector = tuple[Rational, ...]


def blowup_parts(n: int) -> list[list[int]]:
    """Vertex lists of the three parts, sizes floor((n+i)/3)."""
    sizes = [(n + i) // 3 for i in range(3)]
    parts = []
    start = 0
    for s in sizes:
        parts.append(list(range(start, start + s)))
        start += s
    return parts


def build_Bn(n: int) -> OrientedGraph:
    """Balanced blowup of the cyclic triangle on n vertices."""
    if n < 1:
        raise ValueError("need at least one vertex")
    parts = blowup_parts(n)
    edges = []
    for i in range(3):
        for u in parts[i]:
            for v in parts[(i + 1) % 3]:
                edges.append((u, v))
    return OrientedGraph.from_edges(n, edges)


def i_Bn(n: int) -> Fraction:
    """Independent-triple density of B_n in closed form: only the
    within-part triples are independent."""
    if n < 3:
        raise ValueError("need at least three vertices")
    sizes = [(n + i) // 3 for i in range(3)]
    return Fraction(sum(math.comb(s, 3) for s in sizes), math.comb(n, 3))


def _part_rel(a: int, b: int) -> int:
    if a == b:
        return 0
    return 1 if b == (a + 1) % 3 else -1


def _pattern_graph(assign: tuple[int, ...]) -> OrientedGraph:
    k = len(assign)
    rel = tuple(
        tuple(_part_rel(assign[u], assign[v]) if u != v else 0 for v in range(k))
        for u in range(k)
    )
    return OrientedGraph(k, rel)


def _class_index(k: int) -> dict[bytes, int]:
    return {g.canonical_form(): i for i, g in enumerate(enumerate_oriented(k))}


def limit_densities_Bn(k: int) -> list[Fraction]:
    """Limit of the k-class density vector of B_n, indexed by class."""
    if not 1 <= k <= 5:
        raise ValueError("limit densities support 1 <= k <= 5")
    index = _class_index(k)
    out = [Fraction(0)] * len(index)
    weight = Fraction(1, 3 ** k)
    for assign in itertools.product(range(3), repeat=k):
        out[index[_pattern_graph(assign).canonical_form()]] += weight
    return out


@dataclass(frozen=True)
class EpsPolynomial:
    """Polynomial in the deletion probability, exact coefficients by power."""

    coefficients: tuple[Rational, ...]

    @staticmethod
    def of(*coeffs) -> "EpsPolynomial":
        return EpsPolynomial(tuple(Fraction(c) for c in coeffs))._trim()

    def _trim(self) -> "EpsPolynomial":
        c = list(self.coefficients)
        while c and c[-1] == 0:
            c.pop()
        return EpsPolynomial(tuple(c))

    def __call__(self, eps: Rational) -> Rational:
        total = Fraction(0)
        for c in reversed(self.coefficients):
            total = total * eps + c
        return total

    def __add__(self, other: "EpsPolynomial") -> "EpsPolynomial":
        a, b = self.coefficients, other.coefficients
        n = max(len(a), len(b))
        pad = lambda t: t + (Fraction(0),) * (n - len(t))
        return EpsPolynomial(
            tuple(x + y for x, y in zip(pad(a), pad(b)))
        )._trim()

    @property
    def constant(self) -> Rational:
        return self.coefficients[0] if self.coefficients else Fraction(0)

    @property
    def linear(self) -> Rational:
        return self.coefficients[1] if len(self.coefficients) > 1 else Fraction(0)


def _survival_polynomial(kept: int, deleted: int) -> EpsPolynomial:
    """(1-eps)^kept * eps^deleted, expanded."""
    coeffs = [Fraction(0)] * (kept + deleted + 1)
    for j in range(kept + 1):
        coeffs[deleted + j] = Fraction((-1) ** j * math.comb(kept, j))
    return EpsPolynomial(tuple(coeffs))._trim()


def expected_densities_Bn_eps(k: int) -> list[EpsPolynomial]:
    """Limit of E[k-class densities] when each blowup edge is deleted
    independently with probability eps, per class, as exact polynomials."""
    if not 1 <= k <= 4:
        raise ValueError("perturbed limit densities support 1 <= k <= 4")
    index = _class_index(k)
    out = [EpsPolynomial(()) for _ in range(len(index))]
    weight = Fraction(1, 3 ** k)
    for assign in itertools.product(range(3), repeat=k):
        pattern = _pattern_graph(assign)
        edges = pattern.edges
        for keep_count in range(len(edges) + 1):
            poly = _survival_polynomial(keep_count, len(edges) - keep_count)
            scaled = EpsPolynomial(tuple(weight * c for c in poly.coefficients))
            for kept in itertools.combinations(edges, keep_count):
                g = OrientedGraph.from_edges(k, kept)
                i = index[g.canonical_form()]
                out[i] = out[i] + scaled
    return out


def limit_rooted_vectors() -> dict[str, tuple[Vector, ...]]:
    """Limit petal distributions of rooted blowups, by type block.

    "empty": the unrooted pair distribution (nonedge, edge) = (1/3, 2/3).
    "edge": petal distribution seen from an edge rooting; uniform over the
    three parts relative to the edge.
    "nonedge": three vectors: the within-part rooting of the intact blowup,
    then the two orientations of a rooting on a freshly deleted edge (the
    deletion-probability-linear rootings, in the zero-deletion limit).
    """
    from .flags import main_family

    fam = main_family()
    third = Fraction(1, 3)

    def pattern_vector(block_idx: int, root_parts: tuple[int, ...]) -> Vector:
        block = fam.blocks[block_idx]
        pos = {f.pattern(): i for i, f in enumerate(block.flags)}
        vec = [Fraction(0)] * block.size
        for p in range(3):
            pattern = tuple(_part_rel(rp, p) for rp in root_parts)
            vec[pos[pattern]] += third
        return tuple(vec)

    empty_vec = [Fraction(0), Fraction(0)]
    for a in range(3):
        for b in range(3):
            empty_vec[0 if a == b else 1] += Fraction(1, 9)

    return {
        "empty": (tuple(empty_vec),),
        "nonedge": (
            pattern_vector(1, (0, 0)),
            pattern_vector(1, (0, 1)),
            pattern_vector(1, (1, 0)),
        ),
        "edge": (pattern_vector(2, (0, 1)),),
    }


@dataclass(frozen=True)
class MatchingTriple:
    """Three partial matchings between consecutive blowup parts; their
    union must not contain a (deleted) cyclic triangle."""

    matchings: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        if len(self.matchings) != 3:
            raise ValueError("need exactly three matchings")

    def validate(self, n: int) -> None:
        parts = blowup_parts(n)
        maps: list[dict[int, int]] = []
        for i, matching in enumerate(self.matchings):
            src, dst = set(parts[i]), set(parts[(i + 1) % 3])
            seen_u: set[int] = set()
            seen_v: set[int] = set()
            m: dict[int, int] = {}
            for u, v in matching:
                if u not in src or v not in dst:
                    raise ValueError("invalid matching: edge leaves its parts")
                if u in seen_u or v in seen_v:
                    raise ValueError("invalid matching: repeated endpoint")
                seen_u.add(u)
                seen_v.add(v)
                m[u] = v
            maps.append(m)
        for u, v in maps[0].items():
            w = maps[1].get(v)
            if w is not None and maps[2].get(w) == u:
                raise ValueError("invalid matching: deleted edges close a triangle")

    def edge_set(self) -> set[tuple[int, int]]:
        return {e for matching in self.matchings for e in matching}


def build_En_member(n: int, m: MatchingTriple) -> OrientedGraph:
    """B_n with the matched edges removed."""
    m.validate(n)
    b = build_Bn(n)
    drop = m.edge_set()
    return OrientedGraph.from_edges(n, [e for e in b.edges if e not in drop])


def random_matching_triple(n: int, rng: random.Random) -> MatchingTriple:
    """A random valid MatchingTriple: sample partial matchings, then break
    any triangle among the deleted edges."""
    parts = blowup_parts(n)
    matchings = []
    for i in range(3):
        left = parts[i][:]
        right = parts[(i + 1) % 3][:]
        rng.shuffle(left)
        rng.shuffle(right)
        size = rng.randint(0, min(len(left), len(right)))
        matchings.append(dict(zip(left[:size], right[:size])))
    changed = True
    while changed:
        changed = False
        for u, v in list(matchings[0].items()):
            w = matchings[1].get(v)
            if w is not None and matchings[2].get(w) == u:
                del matchings[2][w]
                changed = True
    return MatchingTriple(
        tuple(tuple(sorted(m.items())) for m in matchings)
    )


def build_Bn_eps(n: int, eps: float, rng: random.Random) -> OrientedGraph:
    """B_n with each edge kept independently with probability 1 - eps.
    Demonstration generator; exact statistics come from the polynomials."""
    b = build_Bn(n)
    return OrientedGraph.from_edges(
        n, [e for e in b.edges if rng.random() >= eps]
    )


def circulant(n: int, steps) -> OrientedGraph:
    """Vertices 0..n-1 with edges v -> v+s (mod n) for each step s."""
    norm = []
    for s in steps:
        s = s % n if n else s
        if s == 0:
            raise ValueError("zero step")
        norm.append(s)
    if len(set(norm)) != len(norm):
        raise ValueError("repeated step")
    for s in norm:
        if (n - s) % n in norm:
            raise ValueError("anti-parallel step pair")
    edges = [(v, (v + s) % n) for s in norm for v in range(n)]
    return OrientedGraph.from_edges(n, edges)


def matching_triple_to_json(m: MatchingTriple) -> list:
    return [[list(e) for e in matching] for matching in m.matchings]


def matching_triple_from_json(obj) -> MatchingTriple:
    return MatchingTriple(
        tuple(tuple((int(u), int(v)) for u, v in matching) for matching in obj)
    )


def construction_from_json(obj: dict) -> OrientedGraph:
    """Build a graph from a construction spec: blowup, circulant, or en."""
    kind = obj.get("kind")
    if kind == "blowup":
        return build_Bn(int(obj["n"]))
    if kind == "circulant":
        return circulant(int(obj["n"]), [int(s) for s in obj["steps"]])
    if kind == "en":
        return build_En_member(
            int(obj["n"]), matching_triple_from_json(obj["matchings"])
        )
    raise ValueError(f"unknown construction kind: {kind!r}")
