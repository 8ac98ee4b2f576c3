"""Exact certificate machinery for the triple-density bound.

The pipeline: verify candidate certificates over exact scalar rings, derive
the kernel-vector constraints forced by the extremal blowup, detect the
classes whose perturbed-blowup density is Omega(eps) (these force equality),
assemble the constrained solution spaces, project the kernel vectors away,
round a floating-point solver certificate into Q(sqrt2, sqrt3), and pull the
result back to a fully verified exact bound.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .constructions import (
    expected_densities_Bn_eps,
    limit_densities_Bn,
    limit_rooted_vectors,
)
from .exact_arith import (
    FieldOverflowError,
    QuadExt,
    Rational,
    _field_sqrt,
    dot,
    is_pd,
    is_psd,
    orthonormalize,
    quad_sign,
    rank,
    rational_to_str,
    scalar_from_json,
    scalar_to_json,
    solve_linear,
)
from .flags import (
    FlagFamily,
    block_inner,
    class_matrices,
    k3_family,
    main_family,
)
from .sdp import (
    CertificateProblem,
    FloatSolution,
    SdpProblem,
    assemble,
    solve_embedded,
)

Vector = tuple[Rational, ...]

PROVENANCES = ("rounded-from-solver", "paper-data", "handcrafted")


def _exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction, QuadExt))


@dataclass(frozen=True)
class Certificate:
    """A lower-bound witness: block matrix Q with c_i - <Q, A_i> >= alpha.

    Entries live in an exact ring (Rational or QuadExt); floats are refused
    so that verification can never silently degrade to approximate checks.
    """

    alpha: Rational
    Q: tuple
    provenance: str

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        for block in self.Q:
            n = len(block)
            for row in block:
                if len(row) != n:
                    raise ValueError("certificate blocks must be square")
                for x in row:
                    if not _exact_scalar(x):
                        raise ValueError(
                            "ring mismatch: certificate entries must be "
                            "exact scalars, not " + type(x).__name__
                        )
            for r in range(n):
                for s in range(r + 1, n):
                    if not block[r][s] == block[s][r]:
                        raise ValueError("certificate blocks must be symmetric")

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.Q)


@dataclass(frozen=True)
class VerificationReport:
    """Exact per-class slacks and kernel bookkeeping for one certificate."""

    psd_ok: bool
    slacks: tuple
    equality: tuple[int, ...]
    kernel_dims: tuple[int, ...]

    @property
    def valid(self) -> bool:
        return self.psd_ok and all(quad_sign(s) >= 0 for s in self.slacks)


def verify(cert: Certificate, problem: SdpProblem) -> VerificationReport:
    """Exact verification: PSD blocks plus per-class slack signs.

    The slack of class i is c_i - <Q, A_i> - alpha, computed in the
    certificate's ring (the A_i may be rational or QuadExt themselves).
    """
    if cert.block_sizes() != tuple(problem.block_sizes):
        raise ValueError("certificate/problem dimension mismatch")
    slacks = []
    for i in range(problem.m):
        inner = block_inner(cert.Q, problem.A[i])
        slacks.append(problem.c[i] - cert.alpha - inner)
    psd_ok = all(is_psd(block) for block in cert.Q)
    equality = tuple(i for i, s in enumerate(slacks) if quad_sign(s) == 0)
    kernel_dims = tuple(len(b) - rank(b) for b in cert.Q)
    return VerificationReport(psd_ok, tuple(slacks), equality, kernel_dims)


# ---------------------------------------------------------------------------
# kernel vectors and sharp classes


def derive_kernel_constraints(family: FlagFamily) -> dict[str, tuple[Vector, ...]]:
    """Kernel vectors per type block, scaled to primitive integers.

    Any matrix certifying the exact bound must annihilate the limit petal
    distributions of the extremal blowup; those distributions are produced
    by constructions.limit_rooted_vectors and rescaled here.
    """
    if family.kind != "oriented" or family.k != 4:
        raise ValueError("kernel constraints are derived for the k=4 family")
    vectors = limit_rooted_vectors()
    out = {}
    for block in family.blocks:
        scaled = []
        for v in vectors[block.name]:
            den = math.lcm(*(x.denominator for x in v))
            ints = [int(x * den) for x in v]
            g = math.gcd(*ints)
            scaled.append(tuple(Fraction(x, g) for x in ints))
        out[block.name] = tuple(scaled)
    return out


@dataclass(frozen=True)
class SharpStructure:
    """Classes whose expected density in the edge-deleted blowup is
    Omega(eps): positive constant term (induced in the blowup itself) or
    zero constant with positive linear term."""

    ids: tuple[int, ...]
    induced: tuple[int, ...]
    eps_linear: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, i: int) -> bool:
        return i in self.ids

    def __iter__(self):
        return iter(self.ids)


def detect_sharp(k: int = 4) -> SharpStructure:
    polys = expected_densities_Bn_eps(k)
    induced = tuple(i for i, p in enumerate(polys) if p.constant > 0)
    linear = tuple(
        i for i, p in enumerate(polys) if p.constant == 0 and p.linear > 0
    )
    return SharpStructure(tuple(sorted(induced + linear)), induced, linear)


# ---------------------------------------------------------------------------
# the solution spaces W and W-tilde


def _orthogonal_complement(size: int, vecs) -> list[list[Fraction]]:
    """Rational orthogonal (unnormalized) basis of the complement of vecs,
    built by Gram-Schmidt over the standard basis in ascending order."""
    ortho = []
    for v in vecs:
        w = [Fraction(x) for x in v]
        for u in ortho:
            coef = dot(w, u) / dot(u, u)
            w = [x - coef * y for x, y in zip(w, u)]
        if not any(w):
            raise ValueError("dependent kernel vectors")
        ortho.append(w)
    comp = []
    for i in range(size):
        w = [Fraction(0)] * size
        w[i] = Fraction(1)
        for u in ortho + comp:
            d = dot(w, u)
            if d:
                w = [x - (d / dot(u, u)) * y for x, y in zip(w, u)]
        if any(w):
            comp.append(w)
    return comp


def _complement_bases(family: FlagFamily, kernel_vectors) -> list[list[list[Fraction]]]:
    return [
        _orthogonal_complement(block.size, kernel_vectors[block.name])
        for block in family.blocks
    ]


def _sym_basis(family: FlagFamily, comps) -> list:
    """Basis of the space of symmetric block matrices annihilating the
    kernel vectors: symmetrized outer products of complement vectors, in
    ascending (block, j, k) order."""
    sizes = family.block_sizes()
    basis = []
    for b, comp in enumerate(comps):
        for j in range(len(comp)):
            for k in range(j, len(comp)):
                mat = [
                    [
                        comp[j][r] * comp[k][s] + (comp[k][r] * comp[j][s] if j != k else 0)
                        for s in range(sizes[b])
                    ]
                    for r in range(sizes[b])
                ]
                blocks = [
                    [[Fraction(0)] * m for _ in range(m)] for m in sizes
                ]
                blocks[b] = mat
                basis.append(blocks)
    return basis


@dataclass(frozen=True)
class ConstraintLedger:
    """W, the sharp-class equations, and the affine slice they cut out.

    w_basis spans the symmetric block matrices annihilating every kernel
    vector; the affine subspace of those additionally meeting the sharp
    equations is particular + span(directions), all coordinates taken
    against w_basis.  dependency_weights are the two exact left-kernel
    vectors of the sharp system (limit densities on the induced classes;
    the full first-derivative vector of the eps-expansion).
    """

    kernel_vectors: dict
    sharp: SharpStructure
    alpha: Rational
    w_basis: tuple
    particular: tuple
    directions: tuple
    dependency_weights: tuple

    @property
    def w_dim(self) -> int:
        return len(self.w_basis)

    @property
    def wtilde_dim(self) -> int:
        return len(self.directions)

    @property
    def sharp_rank(self) -> int:
        return self.w_dim - self.wtilde_dim


def build_ledger(
    family: FlagFamily,
    kernel_vectors: dict,
    sharp: SharpStructure,
    problem: SdpProblem,
) -> ConstraintLedger:
    """Exact bases for W and the affine subspace cut by the sharp classes.

    Raises ValueError when the sharp equations are inconsistent on W or the
    dependency identities fail; both would indicate an upstream bug.
    """
    if tuple(problem.block_sizes) != family.block_sizes():
        raise ValueError("problem/family block shape mismatch")
    comps = _complement_bases(family, kernel_vectors)
    basis = _sym_basis(family, comps)
    for comp, block in zip(comps, family.blocks):
        if len(comp) + len(kernel_vectors[block.name]) != block.size:
            raise ValueError("kernel vectors do not split the block")
    densities = limit_densities_Bn(family.k)
    alpha = sum(
        (d * ci for d, ci in zip(densities, problem.c)), Fraction(0)
    )
    rows = [
        [block_inner(problem.A[i], bj) for bj in basis] for i in sharp.ids
    ]
    rhs = [problem.c[i] - alpha for i in sharp.ids]
    try:
        lin = solve_linear(rows, rhs)
    except ValueError as exc:
        raise ValueError("inconsistent sharp equations") from exc
    polys = expected_densities_Bn_eps(family.k)
    u1 = [
        densities[i] if i in sharp.induced else Fraction(0) for i in sharp.ids
    ]
    u2 = [polys[i].linear for i in sharp.ids]
    for u in (u1, u2):
        bad = any(
            sum(ui * rows[r][j] for r, ui in enumerate(u)) != 0
            for j in range(len(basis))
        ) or sum(ui * rhs[r] for r, ui in enumerate(u)) != 0
        if bad:
            raise ValueError("sharp dependency identity failed")
    return ConstraintLedger(
        kernel_vectors=kernel_vectors,
        sharp=sharp,
        alpha=alpha,
        w_basis=tuple(basis),
        particular=tuple(lin.particular),
        directions=tuple(tuple(v) for v in lin.kernel),
        dependency_weights=(tuple(u1), tuple(u2)),
    )


# ---------------------------------------------------------------------------
# projection


@dataclass(frozen=True)
class Projection:
    """Per-block complement of the kernel vectors.

    basis holds rational orthogonal (unnormalized) complement vectors and
    norms their squared lengths; scales[b][j][k] = 1/sqrt(q_j q_k) is the
    exact normalizer applied to projected entries.  r_blocks carries the
    literal orthonormal columns where each 1/sqrt(q_j) lies in the field,
    and None where it does not (the 1-column block: its invariants are
    asserted in the scaled form W^T W = diag(norms), W^T v = 0).
    """

    family: FlagFamily
    kernel_vectors: tuple
    basis: tuple
    norms: tuple
    scales: tuple
    r_blocks: tuple

    def projected_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.basis)


def build_projection(kernel_vectors: dict, family: FlagFamily | None = None) -> Projection:
    """Deterministic complement bases, orthonormalized into Q(sqrt2, sqrt3)
    where the field permits; raises FieldOverflowError only through the
    literal R blocks, which are skipped for blocks whose normalizers fall
    outside the field."""
    if family is None:
        family = main_family()
    for block in family.blocks:
        if block.name not in kernel_vectors:
            raise ValueError(f"missing kernel vectors for block {block.name}")
    comps = _complement_bases(family, kernel_vectors)
    norms = [[dot(w, w) for w in comp] for comp in comps]
    scales = []
    for qs in norms:
        scales.append(
            tuple(
                tuple(_field_sqrt(qa * qb).inverse() for qb in qs) for qa in qs
            )
        )
    r_blocks = []
    for comp in comps:
        try:
            rows = orthonormalize(comp)
            r_blocks.append(tuple(zip(*rows)))  # columns are the unit vectors
        except FieldOverflowError:
            r_blocks.append(None)
    return Projection(
        family=family,
        kernel_vectors=tuple(
            (b.name, kernel_vectors[b.name]) for b in family.blocks
        ),
        basis=tuple(tuple(tuple(x for x in w) for w in comp) for comp in comps),
        norms=tuple(tuple(qs) for qs in norms),
        scales=tuple(scales),
        r_blocks=tuple(r_blocks),
    )


def project_matrix(projection: Projection, blocks) -> tuple:
    """R^T A R computed blockwise in exact arithmetic."""
    out = []
    for b, comp in enumerate(projection.basis):
        nb = len(comp)
        raw = [
            [
                dot(comp[j], [dot(row, comp[k]) for row in blocks[b]])
                for k in range(nb)
            ]
            for j in range(nb)
        ]
        out.append(
            tuple(
                tuple(
                    QuadExt.coerce(raw[j][k]) * projection.scales[b][j][k]
                    for k in range(nb)
                )
                for j in range(nb)
            )
        )
    return tuple(out)


def pull_back_matrix(projection: Projection, qbar) -> tuple:
    """R Qbar R^T: transfer a projected block matrix to the flag space."""
    out = []
    for b, comp in enumerate(projection.basis):
        nb = len(comp)
        size = len(comp[0]) if comp else 0
        acc = [[QuadExt(0)] * size for _ in range(size)]
        for j in range(nb):
            for k in range(nb):
                coef = QuadExt.coerce(qbar[b][j][k]) * projection.scales[b][j][k]
                if not coef:
                    continue
                wj, wk = comp[j], comp[k]
                for r in range(size):
                    if wj[r]:
                        for s in range(size):
                            if wk[s]:
                                acc[r][s] = acc[r][s] + coef * (wj[r] * wk[s])
        out.append(tuple(tuple(row) for row in acc))
    return tuple(out)


@lru_cache(maxsize=None)
def projected_class_matrices(projection: Projection) -> tuple:
    mats = class_matrices(projection.family)
    return tuple(project_matrix(projection, m) for m in mats)


def project_problem(problem: SdpProblem, projection: Projection) -> SdpProblem:
    """The same classes and objective against the projected blocks."""
    if tuple(problem.block_sizes) != projection.family.block_sizes():
        raise ValueError("problem/projection block shape mismatch")
    A = tuple(project_matrix(projection, blocks) for blocks in problem.A)
    return SdpProblem(
        m=problem.m,
        c=problem.c,
        A=A,
        block_sizes=projection.projected_sizes(),
    )


def pull_back_certificate(cert: Certificate, projection: Projection) -> Certificate:
    if cert.block_sizes() != projection.projected_sizes():
        raise ValueError("certificate/projection dimension mismatch")
    return Certificate(
        alpha=cert.alpha,
        Q=pull_back_matrix(projection, cert.Q),
        provenance=cert.provenance,
    )


# ---------------------------------------------------------------------------
# rounding


def _snap_round(rows, rhs, float_values, denominator: int):
    """Fix coordinates to grid-snapped solver values, in ascending order,
    skipping any coordinate the equations already pin down.

    The solution set of the equation system is tracked as a particular
    point plus kernel directions; fixing a free coordinate consumes one
    direction, so consistency is preserved exactly throughout.  Returns the
    final coordinate vector and the ids of the deferred (solved) entries.
    """
    lin = solve_linear(rows, rhs)
    x = list(lin.particular)
    kernel = [list(v) for v in lin.kernel]
    deferred = []
    for e, val in enumerate(float_values):
        pivot = next((v for v in kernel if v[e]), None)
        if pivot is None:
            deferred.append(e)
            continue
        target = Fraction(round(val * denominator), denominator)
        step = (target - x[e]) / pivot[e]
        x = [xv + step * kv for xv, kv in zip(x, pivot)]
        kernel = [
            [kv - (vec[e] / pivot[e]) * pv for kv, pv in zip(vec, pivot)]
            for vec in kernel
            if vec is not pivot
        ]
    if kernel:
        raise ArithmeticError("free directions left after visiting all entries")
    return x, deferred


def _blocks_from_coords(x, sizes):
    blocks = []
    pos = 0
    for n in sizes:
        mat = [[None] * n for _ in range(n)]
        for r in range(n):
            for s in range(r, n):
                mat[r][s] = mat[s][r] = x[pos]
                pos += 1
        blocks.append(tuple(tuple(row) for row in mat))
    return tuple(blocks)


def _sym_coefficient_rows(matrices, ids, entries):
    # d<Q,A_i>/dQ[r,s] doubles off-diagonal entries
    rows = []
    for i in ids:
        row = []
        for (b, r, s) in entries:
            v = matrices[i][b][r][s]
            row.append(v if r == s else v + v)
        rows.append(row)
    return rows


DENOMINATORS = (10**4, 10**5, 10**6)


def round_certificate(
    solution: FloatSolution,
    ledger: ConstraintLedger,
    projection: Projection,
    denominators: tuple[int, ...] = DENOMINATORS,
) -> Certificate:
    """Round a projected solver certificate into Q(sqrt2, sqrt3).

    Entries are visited in (block, row, col) order and snapped to the
    denominator grid; entries pinned by the sharp equations are solved
    exactly instead.  A result must be strictly PD and keep every class
    slack nonnegative, otherwise the denominator escalates.
    """
    if solution.gap > 1e-6:
        raise ValueError("solver gap too large to round from")
    sizes = projection.projected_sizes()
    if solution.block_sizes() != sizes:
        raise ValueError("solution does not match the projected blocks")
    matrices = projected_class_matrices(projection)
    problem_c = list(projection.family.objective())
    dummy = SdpProblem(
        m=len(matrices),
        c=tuple(problem_c),
        A=matrices,
        block_sizes=sizes,
    )
    entries = dummy.sym_entries()
    rows = _sym_coefficient_rows(matrices, ledger.sharp.ids, entries)
    rhs = [QuadExt.coerce(problem_c[i] - ledger.alpha) for i in ledger.sharp.ids]
    float_values = [solution.Q[b][r][s] for (b, r, s) in entries]
    failures = []
    for D in denominators:
        x, deferred = _snap_round(rows, rhs, float_values, D)
        blocks = _blocks_from_coords(x, sizes)
        if not all(is_pd(b) for b in blocks):
            failures.append(f"1/{D}: projected block not PD")
            continue
        bad = [
            i
            for i in range(len(matrices))
            if quad_sign(problem_c[i] - ledger.alpha - block_inner(blocks, matrices[i])) < 0
        ]
        if bad:
            failures.append(f"1/{D}: negative slack on classes {bad}")
            continue
        if len(deferred) != ledger.sharp_rank:
            raise ArithmeticError(
                "deferred entry count differs from the sharp system rank"
            )
        return Certificate(
            alpha=ledger.alpha, Q=blocks, provenance="rounded-from-solver"
        )
    raise ValueError("rounding infeasible: " + "; ".join(failures))


# ---------------------------------------------------------------------------
# the full pipeline


class PipelineError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineResult:
    certificate: Certificate
    report: VerificationReport
    projected: Certificate | None
    stages: tuple[tuple[str, float], ...]


def _recover_bound(alpha_float: float) -> Fraction:
    # the exact optima here are small-denominator rationals; the solver
    # lands within its tolerance of one
    guess = Fraction(alpha_float).limit_denominator(100)
    if abs(float(guess) - alpha_float) > 1e-6:
        raise ValueError(f"solver bound {alpha_float} is not near a simple rational")
    return guess


def _tournament_ids(family: FlagFamily) -> tuple[int, ...]:
    full = family.k * (family.k - 1) // 2
    return tuple(
        i for i, g in enumerate(family.classes()) if g.edge_count == full
    )


def _direct_round(
    problem: SdpProblem,
    solution: FloatSolution,
    alpha: Fraction,
    denominators: tuple[int, ...] = DENOMINATORS,
) -> Certificate:
    """Rounding without kernel or sharp machinery: the equality set is read
    off the solver slacks and imposed exactly; works in the rational ring."""
    tight = [i for i, s in enumerate(solution.slacks) if s < 1e-5]
    entries = problem.sym_entries()
    rows = _sym_coefficient_rows(problem.A, tight, entries)
    rhs = [problem.c[i] - alpha for i in tight]
    float_values = [solution.Q[b][r][s] for (b, r, s) in entries]
    failures = []
    for D in denominators:
        x, _ = _snap_round(rows, rhs, float_values, D)
        blocks = _blocks_from_coords(x, problem.block_sizes)
        if not all(is_psd(b) for b in blocks):
            failures.append(f"1/{D}: block not PSD")
            continue
        bad = [
            i
            for i in range(problem.m)
            if quad_sign(problem.c[i] - alpha - block_inner(blocks, problem.A[i])) < 0
        ]
        if bad:
            failures.append(f"1/{D}: negative slack on classes {bad}")
            continue
        return Certificate(alpha=alpha, Q=blocks, provenance="rounded-from-solver")
    raise ValueError("rounding infeasible: " + "; ".join(failures))


_PIPELINE_CACHE: dict[tuple[int, float], PipelineResult] = {}


def full_pipeline(
    k: int = 4,
    tol: float = 1e-8,
    solution: FloatSolution | None = None,
) -> PipelineResult:
    """Solve, round, pull back, and exactly verify the k-vertex bound.

    k=4 runs the constrained path (kernel vectors, sharp equations,
    projection); k=3 solves its problem directly and rounds against the
    solver's own equality set.  An externally produced FloatSolution may be
    substituted for the embedded solve; for k=4 it must solve the projected
    problem.  Runs without an injected solution are deterministic and the
    result is immutable, so they are memoized per (k, tol).
    """
    if solution is None and (k, tol) in _PIPELINE_CACHE:
        return _PIPELINE_CACHE[(k, tol)]
    stages: list[tuple[str, float]] = []

    def run(stage: str, fn):
        t0 = time.perf_counter()
        try:
            value = fn()
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(stage, str(exc)) from exc
        stages.append((stage, time.perf_counter() - t0))
        return value

    if k == 3:
        family = k3_family()
        problem = run("assemble", lambda: assemble(3, family))
        sol = solution or run(
            "solve", lambda: solve_embedded(CertificateProblem(problem), tol=tol)
        )
        alpha = run("bound", lambda: _recover_bound(sol.alpha))
        cert = run("round", lambda: _direct_round(problem, sol, alpha))
        report = run("verify", lambda: verify(cert, problem))
        if not report.valid:
            raise PipelineError("verify", "rounded certificate failed verification")
        result = PipelineResult(cert, report, None, tuple(stages))
        if solution is None:
            _PIPELINE_CACHE[(k, tol)] = result
        return result
    if k != 4:
        raise ValueError("pipeline supports k in (3, 4)")

    family = main_family()
    problem = run("assemble", lambda: assemble(4, family))
    kernel_vectors = run("kernel", lambda: derive_kernel_constraints(family))
    sharp = run("sharp", lambda: detect_sharp(4))
    ledger = run(
        "ledger", lambda: build_ledger(family, kernel_vectors, sharp, problem)
    )
    if (ledger.w_dim, ledger.wtilde_dim) != (58, 49):
        raise PipelineError(
            "ledger",
            f"solution space dims {(ledger.w_dim, ledger.wtilde_dim)} != (58, 49)",
        )
    projection = run("projection", lambda: build_projection(kernel_vectors, family))
    projected = run("project", lambda: project_problem(problem, projection))
    if solution is None:
        sol = run(
            "solve", lambda: solve_embedded(CertificateProblem(projected), tol=tol)
        )
    else:
        sol = solution
        if sol.block_sizes() != projection.projected_sizes():
            raise PipelineError("solve", "imported solution has wrong block sizes")
    if abs(sol.alpha - float(ledger.alpha)) > 1e-6:
        raise PipelineError(
            "solve", f"solver bound {sol.alpha} is far from {ledger.alpha}"
        )
    projected_cert = run(
        "round", lambda: round_certificate(sol, ledger, projection)
    )
    cert = run(
        "pull-back", lambda: pull_back_certificate(projected_cert, projection)
    )
    for name, vecs in projection.kernel_vectors:
        b = [blk.name for blk in family.blocks].index(name)
        for v in vecs:
            image = [
                sum((cert.Q[b][r][s] * v[s] for s in range(len(v))), QuadExt(0))
                for r in range(len(v))
            ]
            if any(image):
                raise PipelineError("pull-back", "kernel vector not annihilated")
    report = run("verify", lambda: verify(cert, problem))
    if not report.valid:
        raise PipelineError("verify", "rounded certificate failed verification")
    if report.equality != ledger.sharp.ids:
        raise PipelineError(
            "verify",
            f"equality set {report.equality} differs from the sharp set",
        )
    slack_by_id = dict(enumerate(report.slacks))
    for i in _tournament_ids(family):
        if quad_sign(slack_by_id[i]) <= 0:
            raise PipelineError("verify", f"tournament class {i} slack not strict")
    result = PipelineResult(cert, report, projected_cert, tuple(stages))
    if solution is None:
        _PIPELINE_CACHE[(k, tol)] = result
    return result


# ---------------------------------------------------------------------------
# published-label resolution and stored fixtures

# class labels used by published tables of this problem, pinned by facts
# that survive any relabeling: the limit densities of the blowup-induced
# classes (positional with _PUBLISHED_DENSITIES), the eps-linear sharp set,
# and the four tournaments.
_PUBLISHED_INDUCED = (1, 7, 10, 27, 32)
_PUBLISHED_DENSITIES = (
    Fraction(1, 27),
    Fraction(4, 27),
    Fraction(4, 27),
    Fraction(6, 27),
    Fraction(12, 27),
)
_PUBLISHED_EPS_LINEAR = (3, 5, 15, 19, 23, 25)
_PUBLISHED_TOURNAMENTS = (39, 40, 41, 42)


def resolve_indices() -> dict[int, tuple[int, ...]]:
    """Partial map from published class labels to this artifact's ids.

    Singleton values are fully resolved; longer tuples record labels only
    determined up to a set (the two star classes share the density 4/27,
    and the eps-linear and tournament labels are pinned as sets only).
    """
    sharp = detect_sharp(4)
    densities = limit_densities_Bn(4)
    out: dict[int, tuple[int, ...]] = {}
    for label, dens in zip(_PUBLISHED_INDUCED, _PUBLISHED_DENSITIES):
        out[label] = tuple(i for i in sharp.induced if densities[i] == dens)
    for label in _PUBLISHED_EPS_LINEAR:
        out[label] = sharp.eps_linear
    for label in _PUBLISHED_TOURNAMENTS:
        out[label] = _tournament_ids(main_family())
    return out


def goodman_certificate() -> Certificate:
    """The classical monochromatic-triangle bound witness, exact."""
    h = Fraction(3, 4)
    return Certificate(
        alpha=Fraction(1, 4),
        Q=(((h, -h), (-h, h)),),
        provenance="paper-data",
    )


def k3_certificate() -> Certificate:
    """The 1/10 witness for the 3-vertex problem, in this artifact's flag
    order (none, out, in)."""
    t = Fraction(1, 10)
    return Certificate(
        alpha=t,
        Q=(
            (
                (9 * t, -6 * t, -6 * t),
                (-6 * t, 9 * t, -1 * t),
                (-6 * t, -1 * t, 9 * t),
            ),
        ),
        provenance="paper-data",
    )


def _ref_scaled(rows, den):
    return tuple(
        tuple(QuadExt.coerce(Fraction(v, den)) for v in row) for row in rows
    )


def reference_projected_blocks() -> Certificate:
    """A previously published projected certificate, stored verbatim for
    comparison runs.  Its row order reflects the source's own flag order,
    which differs from this artifact's; see compare_to_reference."""
    sqrt2 = QuadExt(0, 1)
    sqrt3 = QuadExt(0, 0, 1)
    sqrt6 = QuadExt(0, 0, 0, 1)
    empty = ((QuadExt.coerce(Fraction(337, 10000)),),)
    eb = [
        [193934, 705, 705, 1230, 1230, 0],
        [705, 257730, -34095, -45285, -75735, 80205],
        [705, -34095, 257730, -75735, -45285, 80205],
        [1230, -45285, -75735, 170280, -86385, -46305],
        [1230, -75735, -45285, -86385, 170280, -46305],
        [0, 80205, 80205, -46305, -46305, 153796],
    ]
    ebar = [list(row) for row in _ref_scaled(eb, 150000)]
    ebar[5][5] = ebar[5][5] + sqrt3 * Fraction(6480, 150000)
    m1 = [
        [527985, 0, -315450, -315450, 0, -430920, -375705, -430920],
        [0, 993198, -268740, 150840, -29160, 67680, -27090, -186480],
        [-315450, -268740, 536490, -42030, 0, 233550, 168435, 220815],
        [-315450, 150840, -42030, 536490, 0, 220815, 168435, 233550],
        [0, -29160, 0, 0, 663612, -176265, -46935, -29475],
        [-430920, 67680, 233550, 220815, -176265, 638010, 313920, 281700],
        [-375705, -27090, 168435, 168435, -46935, 313920, 542430, 313920],
        [-430920, -186480, 220815, 233550, -29475, 281700, 313920, 638010],
    ]
    m2 = [
        [0, -3690, 0, 0, 209271],
        [-3690, 0, 0, 0, 0],
        [0, 0, 0, 0, -93902],
        [0, 0, 0, 0, -586954],
        [209271, 0, -93902, -586954, 0],
    ]
    m3 = [
        [0, 0, 0, 0, 0],
        [0, 0, 0, 0, -164793],
        [0, 0, 0, 0, 190140],
        [0, 0, 0, 0, 229440],
        [0, -164793, 190140, 229440, -19440],
    ]
    m6 = [
        [0, 27442, 0, 0, -76965],
        [27442, 0, 0, 0, 0],
        [0, 0, 0, 0, -72495],
        [0, 0, 0, 0, 85455],
        [-76965, 0, -72495, 85455, 0],
    ]
    e = [list(row) for row in _ref_scaled(m1, 450000)]
    for r in range(5):
        for s in range(5):
            irr = sqrt2 * m2[r][s] + sqrt3 * m3[r][s] + sqrt6 * m6[r][s]
            e[r][s] = e[r][s] + irr * Fraction(1, 450000)
    return Certificate(
        alpha=Fraction(1, 9),
        Q=(
            empty,
            tuple(tuple(row) for row in ebar),
            tuple(tuple(row) for row in e),
        ),
        provenance="paper-data",
    )


def compare_to_reference(cert: Certificate) -> dict:
    """Search within-block row/column relabelings matching a projected
    certificate against the stored reference blocks.

    The diagonal multisets prune the search: a candidate position map must
    send equal diagonal entries to equal diagonal entries.  A negative
    outcome is an expected report (the complement bases differ), not an
    error.
    """
    ref = reference_projected_blocks()
    if cert.block_sizes() != ref.block_sizes():
        raise ValueError("certificate/reference dimension mismatch")
    permutations = []
    for ours, theirs in zip(cert.Q, ref.Q):
        n = len(ours)
        candidates = [
            [j for j in range(n) if ours[j][j] == theirs[i][i]] for i in range(n)
        ]
        if any(not c for c in candidates):
            permutations.append(None)
            continue
        perm = [None] * n

        def extend(i: int) -> bool:
            if i == n:
                return True
            for j in candidates[i]:
                if j in perm[:i]:
                    continue
                if any(
                    perm[r] is not None and not ours[perm[r]][j] == theirs[r][i]
                    for r in range(i)
                ):
                    continue
                perm[i] = j
                if extend(i + 1):
                    return True
                perm[i] = None
            return False

        permutations.append(tuple(perm) if extend(0) else None)
    matched = all(p is not None for p in permutations)
    return {
        "match": matched,
        "block_permutations": [
            list(p) if p is not None else None for p in permutations
        ],
    }


# ---------------------------------------------------------------------------
# serialization


def certificate_to_json(
    cert: Certificate,
    block_names: tuple[str, ...] | None = None,
    report: VerificationReport | None = None,
) -> dict:
    blocks = []
    for idx, block in enumerate(cert.Q):
        ring = "rational"
        if any(
            isinstance(x, QuadExt) and not x.is_rational for row in block for x in row
        ):
            ring = "quadext"
        blocks.append(
            {
                "type": block_names[idx] if block_names else f"block{idx}",
                "order": len(block),
                "scalar_ring": ring,
                "entries": [[scalar_to_json(x) for x in row] for row in block],
            }
        )
    out = {
        "alpha": rational_to_str(cert.alpha),
        "provenance": cert.provenance,
        "blocks": blocks,
    }
    if report is not None:
        out["report"] = report_to_json(report)
    return out


def certificate_from_json(obj: dict) -> Certificate:
    Q = tuple(
        tuple(tuple(scalar_from_json(x) for x in row) for row in blk["entries"])
        for blk in obj["blocks"]
    )
    return Certificate(
        alpha=Fraction(obj["alpha"]), Q=Q, provenance=obj["provenance"]
    )


def report_to_json(report: VerificationReport) -> dict:
    return {
        "valid": report.valid,
        "psd_ok": report.psd_ok,
        "equality": list(report.equality),
        "kernel_dims": list(report.kernel_dims),
        "slacks": [scalar_to_json(s) for s in report.slacks],
    }
