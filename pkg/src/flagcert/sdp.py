"""Density SDP assembly, SDPA text interchange, and an embedded solver.

The primal problem built here is

    minimize    sum_i p_i c_i
    subject to  p_i >= 0,  sum_i p_i = 1,  sum_i p_i A_i  PSD (per block),

whose dual is the certificate problem: maximize alpha over PSD block
matrices Q with <Q, A_i> + alpha <= c_i for every class i.  The embedded
solver is a standard primal-dual interior-point method (HKM direction,
Mehrotra predictor-corrector) on the conic form with one 1x1 block per
class variable; the certificate is read off the converged dual slack.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flags import FlagFamily, class_matrices

Entry = tuple[int, int, int]


class SolverError(RuntimeError):
    """The interior-point iteration failed to reach the tolerance."""


@dataclass(frozen=True)
class SdpProblem:
    """Class objectives and constraint matrices sharing a block structure."""

    m: int
    c: tuple
    A: tuple
    block_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.c) != self.m or len(self.A) != self.m:
            raise ValueError("objective/matrix count mismatch")
        for blocks in self.A:
            if tuple(len(b) for b in blocks) != self.block_sizes:
                raise ValueError("constraint matrix block shape mismatch")

    def sym_entries(self) -> list[Entry]:
        """Upper-triangle coordinates in (block, row, col) lexicographic
        order; the canonical coordinatization of symmetric block matrices."""
        out = []
        for b, size in enumerate(self.block_sizes):
            for r in range(size):
                for s in range(r, size):
                    out.append((b, r, s))
        return out


@dataclass(frozen=True)
class CertificateProblem:
    """The same data read dually: maximize alpha with Q PSD and
    <Q, A_i> + alpha <= c_i.  Always feasible (Q = 0, alpha = min c)."""

    problem: SdpProblem


@dataclass
class FloatSolution:
    """Solver output: certificate blocks, bound, and diagnostics."""

    alpha: float
    Q: list[list[list[float]]]
    slacks: list[float]
    p: list[float]
    gap: float
    iterations: int

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.Q)


def assemble(k: int, family: FlagFamily) -> SdpProblem:
    """Problem over the k-vertex classes with A_i = flag_matrix(G_i)."""
    if family.k != k:
        raise ValueError("family does not target this class size")
    matrices = class_matrices(family)
    c = tuple(family.objective())
    return SdpProblem(
        m=len(matrices),
        c=c,
        A=tuple(tuple(blocks) for blocks in matrices),
        block_sizes=family.block_sizes(),
    )


# ------------------------------------------------------------ SDPA text

def export_sdpa(problem: SdpProblem) -> str:
    """SDPA sparse (.dat-s) text for the primal problem.

    Variables are the class weights p.  The constraint matrix has the flag
    blocks first, then a diagonal block of size m for p >= 0, then a
    diagonal 2-block encoding sum p = 1 as two inequalities.  Zero entries
    are omitted.
    """
    m = problem.m
    sizes = list(problem.block_sizes)
    lines = [
        f"{m} = mDIM",
        f"{len(sizes) + 2} = nBLOCK",
        " ".join([str(s) for s in sizes] + [str(-m), "-2"]) + " = bLOCKsTRUCT",
        " ".join(repr(float(ci)) for ci in problem.c),
    ]
    aux_p = len(sizes) + 1
    aux_sum = len(sizes) + 2
    # F_0: only the sum-constraint block (+1, -1)
    lines.append(f"0 {aux_sum} 1 1 1.0")
    lines.append(f"0 {aux_sum} 2 2 -1.0")
    for i in range(m):
        for b, block in enumerate(problem.A[i]):
            for r in range(sizes[b]):
                for s in range(r, sizes[b]):
                    v = float(block[r][s])
                    if v != 0.0:
                        lines.append(f"{i + 1} {b + 1} {r + 1} {s + 1} {v!r}")
        lines.append(f"{i + 1} {aux_p} {i + 1} {i + 1} 1.0")
        lines.append(f"{i + 1} {aux_sum} 1 1 1.0")
        lines.append(f"{i + 1} {aux_sum} 2 2 -1.0")
    return "\n".join(lines) + "\n"


def export_solution(sol: FloatSolution, problem: SdpProblem) -> str:
    """Solution text matching import_solution: class weights on the first
    line, then the two PSD matrices in sparse quintuples."""
    sizes = list(problem.block_sizes)
    aux_p = len(sizes) + 1
    aux_sum = len(sizes) + 2
    lines = [" ".join(repr(v) for v in sol.p)]
    big = _primal_slack_blocks(sol, problem)
    for b, block in enumerate(big):
        n = len(block)
        for r in range(n):
            for s in range(r, n):
                v = block[r][s]
                if v != 0.0:
                    lines.append(f"1 {b + 1} {r + 1} {s + 1} {v!r}")
    for b, block in enumerate(sol.Q):
        for r in range(len(block)):
            for s in range(r, len(block)):
                v = block[r][s]
                if v != 0.0:
                    lines.append(f"2 {b + 1} {r + 1} {s + 1} {v!r}")
    for i, v in enumerate(sol.slacks):
        if v != 0.0:
            lines.append(f"2 {aux_p} {i + 1} {i + 1} {v!r}")
    ap = max(sol.alpha, 0.0)
    am = max(-sol.alpha, 0.0)
    if ap:
        lines.append(f"2 {aux_sum} 1 1 {ap!r}")
    if am:
        lines.append(f"2 {aux_sum} 2 2 {am!r}")
    return "\n".join(lines) + "\n"


def _primal_slack_blocks(sol: FloatSolution, problem: SdpProblem):
    sizes = problem.block_sizes
    out = []
    for b, size in enumerate(sizes):
        acc = [[0.0] * size for _ in range(size)]
        for i, pi in enumerate(sol.p):
            blk = problem.A[i][b]
            for r in range(size):
                for s in range(size):
                    acc[r][s] += pi * float(blk[r][s])
        out.append(acc)
    return out


def import_solution(text: str, problem: SdpProblem) -> FloatSolution:
    """Parse a solution file: first line the class weights, then sparse
    entries 'matno blkno i j value' where matrix 2 carries the certificate
    blocks, the per-class slacks, and the split bound variable."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty solution file")
    try:
        p = [float(tok) for tok in lines[0].split()]
    except ValueError as exc:
        raise ValueError("malformed solution file") from exc
    if len(p) != problem.m:
        raise ValueError("dimension mismatch: wrong class count")
    sizes = list(problem.block_sizes)
    aux_p = len(sizes) + 1
    aux_sum = len(sizes) + 2
    Q = [[[0.0] * s for _ in range(s)] for s in sizes]
    slacks = [0.0] * problem.m
    alpha_parts = [0.0, 0.0]
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 5:
            raise ValueError(f"malformed solution line: {ln!r}")
        try:
            matno, blk, i, j = (int(x) for x in parts[:4])
            v = float(parts[4])
        except ValueError as exc:
            raise ValueError(f"malformed solution line: {ln!r}") from exc
        if matno != 2:
            continue
        if blk <= len(sizes):
            if not (1 <= i <= sizes[blk - 1] and 1 <= j <= sizes[blk - 1]):
                raise ValueError("dimension mismatch: entry outside block")
            Q[blk - 1][i - 1][j - 1] = v
            Q[blk - 1][j - 1][i - 1] = v
        elif blk == aux_p:
            if not (1 <= i <= problem.m and i == j):
                raise ValueError("dimension mismatch: slack index")
            slacks[i - 1] = v
        elif blk == aux_sum:
            if not (1 <= i <= 2 and i == j):
                raise ValueError("dimension mismatch: bound block")
            alpha_parts[i - 1] = v
        else:
            raise ValueError("dimension mismatch: unknown block")
    return FloatSolution(
        alpha=alpha_parts[0] - alpha_parts[1],
        Q=Q,
        slacks=slacks,
        p=p,
        gap=float("nan"),
        iterations=0,
    )


# ------------------------------------------------------- embedded solver

class _Conic:
    """The primal problem in conic form: one 1x1 block per class weight
    plus the flag blocks, with entry-matching equality constraints."""

    def __init__(self, problem: SdpProblem):
        self.m = problem.m
        self.sizes = list(problem.block_sizes)
        self.entries = problem.sym_entries()
        self.n_con = len(self.entries) + 1
        # scalar coefficients: constraint j reads  M[e_j] - sum_i p_i A_i[e_j] = 0
        coef = np.zeros((self.n_con, self.m))
        for j, (b, r, s) in enumerate(self.entries):
            for i in range(self.m):
                coef[j, i] = -float(problem.A[i][b][r][s])
        coef[-1, :] = 1.0
        self.coef = coef
        self.b = np.zeros(self.n_con)
        self.b[-1] = 1.0
        self.c = np.array([float(x) for x in problem.c])
        # per-block constraint index lists for the Schur complement
        self.block_entries = []
        pos = 0
        for b, size in enumerate(self.sizes):
            count = size * (size + 1) // 2
            idx = np.arange(pos, pos + count)
            rows = np.array([self.entries[j][1] for j in idx])
            cols = np.array([self.entries[j][2] for j in idx])
            self.block_entries.append((idx, rows, cols))
            pos += count

    def apply(self, scal: np.ndarray, blocks: list[np.ndarray]) -> np.ndarray:
        out = self.coef @ scal
        for b, (idx, rows, cols) in enumerate(self.block_entries):
            out[idx] += blocks[b][rows, cols]
        return out

    def adjoint(self, y: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        scal = self.coef.T @ y
        blocks = []
        for b, (idx, rows, cols) in enumerate(self.block_entries):
            size = self.sizes[b]
            mat = np.zeros((size, size))
            w = y[idx]
            off = rows != cols
            mat[rows, cols] += np.where(off, w / 2.0, w)
            mat[cols, rows] += np.where(off, w / 2.0, 0.0)
            blocks.append(mat)
        return scal, blocks


def _max_step_scalar(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not neg.any():
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def _max_step_block(x: np.ndarray, dx: np.ndarray) -> float:
    if x.size == 0:
        return math.inf
    try:
        L = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    w = np.linalg.solve(L, np.linalg.solve(L, dx).T)
    lam = float(np.min(np.linalg.eigvalsh((w + w.T) / 2.0)))
    if lam >= 0:
        return math.inf
    return -1.0 / lam


def _is_pd_float(mat: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(mat)
        return True
    except np.linalg.LinAlgError:
        return False


def _pd_safe_step(
    alpha: float,
    scal: np.ndarray,
    dscal: np.ndarray,
    blocks: list[np.ndarray],
    dblocks: list[np.ndarray],
) -> float:
    """Shrink alpha until the stepped iterate factorizes; guards against
    eigenvalue estimates slightly overshooting the cone boundary."""
    while alpha > 1e-16:
        if np.all(scal + alpha * dscal > 0) and all(
            _is_pd_float(b + alpha * d) for b, d in zip(blocks, dblocks)
        ):
            return alpha
        alpha *= 0.5
    return 0.0


def solve_embedded(
    cp: CertificateProblem | SdpProblem,
    tol: float = 1e-8,
    max_iters: int = 100,
) -> FloatSolution:
    """Interior-point solve; returns the certificate read off the dual.

    Raises SolverError when the duality gap and residuals fail to reach
    the tolerance within the iteration budget.
    """
    problem = cp.problem if isinstance(cp, CertificateProblem) else cp
    if problem.m > 128:
        raise ValueError("problem too large for the embedded solver")
    if any(s > 32 for s in problem.block_sizes):
        raise ValueError("block too large for the embedded solver")
    con = _Conic(problem)
    m, sizes = con.m, con.sizes
    dim = m + sum(sizes)

    xs = np.ones(m)
    xb = [np.eye(s) for s in sizes]
    zs = np.ones(m)
    zb = [np.eye(s) for s in sizes]
    y = np.zeros(con.n_con)

    bnorm = 1.0 + float(np.linalg.norm(con.b))
    cnorm = 1.0 + float(np.linalg.norm(con.c))

    def residuals():
        rp = con.b - con.apply(xs, xb)
        ad_s, ad_b = con.adjoint(y)
        rd_s = con.c - ad_s - zs
        rd_b = [-ab - z for ab, z in zip(ad_b, zb)]
        return rp, rd_s, rd_b

    def mu_value() -> float:
        total = float(xs @ zs)
        for xm, zm in zip(xb, zb):
            total += float(np.tensordot(xm, zm))
        return total / dim

    def schur(zinv_s, zinv_b):
        mat = con.coef @ (np.diag(xs * zinv_s) @ con.coef.T)
        for b, (idx, rows, cols) in enumerate(con.block_entries):
            P = zinv_b[b]
            Q = xb[b]
            a, bb = rows, cols
            G = (
                P[np.ix_(bb, bb)] * Q[np.ix_(a, a)]
                + P[np.ix_(bb, a)] * Q[np.ix_(a, bb)]
                + P[np.ix_(a, bb)] * Q[np.ix_(bb, a)]
                + P[np.ix_(a, a)] * Q[np.ix_(bb, bb)]
            ) / 4.0
            mat[np.ix_(idx, idx)] += G
        return mat

    def direction(factor, mu_target, rp, rd_s, rd_b, corr=None):
        # rhs_j = rp_j + tr(E_j Z^-1 Rd X) - mu tr(E_j Z^-1) + tr(E_j X) + corr
        zinv_s = 1.0 / zs
        zinv_b = [np.linalg.inv(z) for z in zb]
        t1_s = zinv_s * rd_s * xs - mu_target * zinv_s + xs
        t1_b = [
            zi @ rd @ xm - mu_target * zi + xm
            for zi, rd, xm in zip(zinv_b, rd_b, xb)
        ]
        if corr is not None:
            dza_s, dza_b, dxa_s, dxa_b = corr
            t1_s += zinv_s * dza_s * dxa_s
            t1_b = [
                t + zi @ dza @ dxa
                for t, zi, dza, dxa in zip(t1_b, zinv_b, dza_b, dxa_b)
            ]
        # apply() reads upper-triangle entries, so hand it symmetric parts
        t1_b = [(t + t.T) / 2.0 for t in t1_b]
        rhs = rp + con.apply(t1_s, t1_b)
        dy = np.linalg.solve(factor, rhs)
        for _ in range(2):
            resid = rhs - factor @ dy
            dy = dy + np.linalg.solve(factor, resid)
        ad_s, ad_b = con.adjoint(dy)
        dz_s = rd_s - ad_s
        dz_b = [rd - ab for rd, ab in zip(rd_b, ad_b)]
        dx_s = mu_target * zinv_s - xs - zinv_s * dz_s * xs
        dx_b = []
        for zi, dz, xm in zip(zinv_b, dz_b, xb):
            raw = mu_target * zi - xm - zi @ dz @ xm
            dx_b.append((raw + raw.T) / 2.0)
        if corr is not None:
            dza_s, dza_b, dxa_s, dxa_b = corr
            dx_s = dx_s - zinv_s * dza_s * dxa_s
            dx_b = [
                d - ((zi @ dza @ dxa) + (zi @ dza @ dxa).T) / 2.0
                for d, zi, dza, dxa in zip(dx_b, zinv_b, dza_b, dxa_b)
            ]
        return dy, dz_s, dz_b, dx_s, dx_b

    def step_lengths(dx_s, dx_b, dz_s, dz_b) -> tuple[float, float]:
        ap = min(
            [_max_step_scalar(xs, dx_s)]
            + [_max_step_block(x, d) for x, d in zip(xb, dx_b)]
        )
        ad = min(
            [_max_step_scalar(zs, dz_s)]
            + [_max_step_block(z, d) for z, d in zip(zb, dz_b)]
        )
        return min(1.0, 0.98 * ap), min(1.0, 0.98 * ad)

    iterations = 0
    for iterations in range(1, max_iters + 1):
        rp, rd_s, rd_b = residuals()
        mu = mu_value()
        pobj = float(con.c @ xs)
        dobj = float(con.b @ y)
        pin = float(np.linalg.norm(rp)) / bnorm
        din = (
            math.sqrt(
                float(np.linalg.norm(rd_s)) ** 2
                + sum(float(np.linalg.norm(rd)) ** 2 for rd in rd_b)
            )
            / cnorm
        )
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if pin <= tol and din <= tol and relgap <= tol:
            break
        zinv_s = 1.0 / zs
        zinv_b = [np.linalg.inv(z) for z in zb]
        M = schur(zinv_s, zinv_b)
        M = (M + M.T) / 2.0
        # regularize minimally for numerical safety near the optimum
        factor = M + np.eye(con.n_con) * (1e-14 * (1.0 + np.trace(M)))
        da = direction(factor, 0.0, rp, rd_s, rd_b)
        dy_a, dz_s_a, dz_b_a, dx_s_a, dx_b_a = da
        ap, ad = step_lengths(dx_s_a, dx_b_a, dz_s_a, dz_b_a)
        mu_aff = (
            float((xs + ap * dx_s_a) @ (zs + ad * dz_s_a))
            + sum(
                float(np.tensordot(xm + ap * dxm, zm + ad * dzm))
                for xm, dxm, zm, dzm in zip(xb, dx_b_a, zb, dz_b_a)
            )
        ) / dim
        sigma = min(1.0, max(0.0, (mu_aff / mu)) ** 3)
        # keep complementarity from outrunning primal feasibility, which
        # pins the iterate to the cone boundary while still infeasible
        pin_abs = float(np.linalg.norm(rp))
        if mu > 0 and sigma * mu < 0.1 * pin_abs:
            sigma = min(1.0, 0.1 * pin_abs / mu)
        corr = (dz_s_a, dz_b_a, dx_s_a, dx_b_a)
        dy, dz_s, dz_b, dx_s, dx_b = direction(
            factor, sigma * mu, rp, rd_s, rd_b, corr
        )
        ap, ad = step_lengths(dx_s, dx_b, dz_s, dz_b)
        ap = _pd_safe_step(ap, xs, dx_s, xb, dx_b)
        ad = _pd_safe_step(ad, zs, dz_s, zb, dz_b)
        if ap < 1e-12 or ad < 1e-12:
            raise SolverError("step length collapsed before convergence")
        xs = xs + ap * dx_s
        xb = [xm + ap * d for xm, d in zip(xb, dx_b)]
        y = y + ad * dy
        zs = zs + ad * dz_s
        zb = [zm + ad * d for zm, d in zip(zb, dz_b)]
    else:
        raise SolverError(
            f"no convergence after {max_iters} iterations (gap {mu_value():.2e})"
        )

    # refinement: symmetrize the certificate and recompute the bound so the
    # dual constraints hold with float slack exactly >= 0
    Q = [(z + z.T) / 2.0 for z in zb]
    inner = np.zeros(m)
    for i in range(m):
        total = 0.0
        for b in range(len(sizes)):
            blk = np.array(
                [[float(x) for x in row] for row in problem.A[i][b]], dtype=float
            )
            total += float(np.tensordot(Q[b], blk))
        inner[i] = total
    alpha = float(np.min(con.c - inner))
    slacks = [float(v) for v in (con.c - inner - alpha)]
    return FloatSolution(
        alpha=alpha,
        Q=[q.tolist() for q in Q],
        slacks=slacks,
        p=[float(v) for v in xs],
        gap=mu_value() * dim,
        iterations=iterations,
    )
