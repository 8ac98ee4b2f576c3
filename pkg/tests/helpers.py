"""Shared test utilities: seeded random generators and reference constructions."""

from __future__ import annotations

import random

from flagcert.graphs import OrientedGraph, UndirectedGraph


def random_oriented(rng: random.Random, n: int, p_edge: float = 2 / 3) -> OrientedGraph:
    """Each pair independently: no edge, or an edge with a fair coin direction."""
    rel = [[0] * n for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p_edge:
                if rng.random() < 0.5:
                    rel[u][v], rel[v][u] = 1, -1
                else:
                    rel[u][v], rel[v][u] = -1, 1
    return OrientedGraph(n, tuple(tuple(r) for r in rel))


def random_undirected(rng: random.Random, n: int, p_edge: float = 1 / 2) -> UndirectedGraph:
    rel = [[0] * n for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p_edge:
                rel[u][v] = rel[v][u] = 1
    return UndirectedGraph(n, tuple(tuple(r) for r in rel))


def blowup_inline(n: int) -> OrientedGraph:
    """Independent reference construction of the cyclic three-part blowup:
    part i has floor((n+i)/3) vertices and sends all edges to part i+1 mod 3."""
    sizes = [(n + i) // 3 for i in range(3)]
    part_of = []
    for i in range(3):
        part_of.extend([i] * sizes[i])
    edges = [
        (u, v)
        for u in range(n)
        for v in range(n)
        if part_of[v] == (part_of[u] + 1) % 3
    ]
    return OrientedGraph.from_edges(n, edges)


def circulant_inline(n: int, steps) -> OrientedGraph:
    edges = [(u, (u + s) % n) for u in range(n) for s in steps]
    return OrientedGraph.from_edges(n, edges)
