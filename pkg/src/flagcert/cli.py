"""Command-line front end: enumeration, densities, SDP exports, the
embedded solver, exact rounding, certificate verification, and the full
pipeline, all as deterministic JSON for scripts and CI.

Exit codes: 0 success, 1 verification or rounding failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from .certify import (
    build_ledger,
    build_projection,
    certificate_from_json,
    certificate_to_json,
    compare_to_reference,
    derive_kernel_constraints,
    detect_sharp,
    full_pipeline,
    goodman_certificate,
    k3_certificate,
    PipelineError,
    project_problem,
    reference_projected_blocks,
    report_to_json,
    resolve_indices,
    round_certificate,
    verify,
)
from .constructions import expected_densities_Bn_eps, limit_densities_Bn
from .exact_arith import rational_to_str
from .flags import FlagFamily, goodman_family, k3_family, main_family
from .graphs import brute_force_tau, graph_to_json
from .sdp import (
    CertificateProblem,
    SolverError,
    assemble,
    export_sdpa,
    export_solution,
    import_solution,
    solve_embedded,
)

BLOCK_NAMES = ("empty", "nonedge", "edge")


def _map(fn, items):
    """Order-preserving map; FLAGCERT_THREADS > 1 enables a worker pool."""
    workers = int(os.environ.get("FLAGCERT_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": message}) + "\n")
    return code


def _family_for(args) -> FlagFamily:
    name = getattr(args, "family", None)
    if name == "goodman":
        return goodman_family()
    if name == "k3" or (name is None and args.k == 3):
        return k3_family()
    if name == "main" or (name is None and args.k == 4):
        return main_family()
    raise ValueError(f"no flag family for k={args.k}")


def _matrix_json(blocks) -> list:
    return [
        [[rational_to_str(x) for x in row] for row in block] for block in blocks
    ]


# ------------------------------------------------------------ subcommands


def cmd_enumerate(args) -> int:
    if args.kind == "oriented":
        from .graphs import enumerate_oriented

        classes = enumerate_oriented(args.k)
    else:
        from .graphs import enumerate_undirected

        classes = enumerate_undirected(args.k)
    _emit(
        {
            "kind": args.kind,
            "k": args.k,
            "count": len(classes),
            "classes": [
                {"id": i, "edge_count": g.edge_count, **graph_to_json(g)}
                for i, g in enumerate(classes)
            ],
        },
        args.out,
    )
    return 0


def cmd_densities(args) -> int:
    limits = limit_densities_Bn(args.k)
    polys = expected_densities_Bn_eps(args.k) if args.k <= 4 else None

    def row(i):
        entry = {"id": i, "limit": rational_to_str(limits[i])}
        if polys is not None:
            entry["eps"] = [rational_to_str(c) for c in polys[i].coefficients]
        return entry

    _emit(
        {"k": args.k, "classes": _map(row, range(len(limits)))},
        args.out,
    )
    return 0


def cmd_matrices(args) -> int:
    family = _family_for(args)
    problem = assemble(args.k, family)
    ids = range(problem.m) if args.class_id is None else [args.class_id]
    if args.class_id is not None and not 0 <= args.class_id < problem.m:
        return _fail(f"class id out of range 0..{problem.m - 1}", 2)
    _emit(
        {
            "k": args.k,
            "blocks": [
                {"name": b.name, "size": b.size} for b in family.blocks
            ],
            "matrices": _map(
                lambda i: {"id": i, "blocks": _matrix_json(problem.A[i])}, ids
            ),
        },
        args.out,
    )
    return 0


def cmd_assemble(args) -> int:
    family = _family_for(args)
    problem = assemble(args.k, family)
    _emit(
        {
            "k": args.k,
            "m": problem.m,
            "block_sizes": list(problem.block_sizes),
            "c": [rational_to_str(ci) for ci in problem.c],
        },
        args.out,
    )
    return 0


def _projected_problem(tol_unused=None):
    family = main_family()
    problem = assemble(4, family)
    projection = build_projection(derive_kernel_constraints(family), family)
    return project_problem(problem, projection), projection


def cmd_sdpa_export(args) -> int:
    if args.projected:
        if args.k != 4:
            return _fail("--projected requires --k 4", 2)
        problem, _ = _projected_problem()
    else:
        problem = assemble(args.k, _family_for(args))
    text = export_sdpa(problem)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(args) -> int:
    if args.projected:
        if args.k != 4:
            return _fail("--projected requires --k 4", 2)
        problem, _ = _projected_problem()
    else:
        problem = assemble(args.k, _family_for(args))
    sol = solve_embedded(CertificateProblem(problem), tol=args.tol, max_iters=args.max_iters)
    if args.solution_out:
        with open(args.solution_out, "w") as fh:
            fh.write(export_solution(sol, problem))
    _emit(
        {
            "alpha": sol.alpha,
            "gap": sol.gap,
            "iterations": sol.iterations,
            "tight": [i for i, s in enumerate(sol.slacks) if s < 1e-5],
        },
        args.out,
    )
    return 0


def cmd_kernel(args) -> int:
    vectors = derive_kernel_constraints(main_family())
    _emit(
        {
            "blocks": {
                name: [[rational_to_str(x) for x in v] for v in vecs]
                for name, vecs in vectors.items()
            }
        },
        args.out,
    )
    return 0


def cmd_sharp(args) -> int:
    sharp = detect_sharp(args.k)
    _emit(
        {
            "ids": list(sharp.ids),
            "induced": list(sharp.induced),
            "eps_linear": list(sharp.eps_linear),
        },
        args.out,
    )
    return 0


def cmd_project(args) -> int:
    family = main_family()
    projection = build_projection(derive_kernel_constraints(family), family)
    _emit(
        {
            "sizes": list(projection.projected_sizes()),
            "norms": [
                [rational_to_str(q) for q in qs] for qs in projection.norms
            ],
            "basis": [
                [[rational_to_str(x) for x in w] for w in comp]
                for comp in projection.basis
            ],
            "literal_r": [rb is not None for rb in projection.r_blocks],
        },
        args.out,
    )
    return 0


def cmd_round(args) -> int:
    family = main_family()
    problem = assemble(4, family)
    kernel_vectors = derive_kernel_constraints(family)
    sharp = detect_sharp(4)
    ledger = build_ledger(family, kernel_vectors, sharp, problem)
    projection = build_projection(kernel_vectors, family)
    projected = project_problem(problem, projection)
    if args.solution_in:
        with open(args.solution_in) as fh:
            sol = import_solution(fh.read(), projected)
    else:
        sol = solve_embedded(CertificateProblem(projected), tol=args.tol)
    denominators = tuple(int(d) for d in args.denominators.split(","))
    try:
        cert = round_certificate(sol, ledger, projection, denominators)
    except ValueError as exc:
        return _fail(str(exc), 1)
    _emit(certificate_to_json(cert, block_names=BLOCK_NAMES), args.out)
    return 0


def cmd_verify(args) -> int:
    try:
        with open(args.cert) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"cannot load certificate: {exc}", 2)
    try:
        cert = certificate_from_json(obj)
    except (KeyError, ValueError) as exc:
        # a file that parses but is not a well-formed certificate fails
        # verification rather than usage
        return _fail(f"invalid certificate: {exc}", 1)
    if args.projected:
        if args.k != 4:
            return _fail("--projected requires --k 4", 2)
        problem, _ = _projected_problem()
    else:
        problem = assemble(args.k, _family_for(args))
    try:
        report = verify(cert, problem)
    except ValueError as exc:
        return _fail(str(exc), 2)
    obj = report_to_json(report)
    obj["alpha"] = rational_to_str(cert.alpha)
    _emit(obj, args.out)
    ok = report.valid
    if args.alpha is not None and Fraction(args.alpha) != cert.alpha:
        ok = False
    return 0 if ok else 1


def cmd_pipeline(args) -> int:
    try:
        result = full_pipeline(k=args.k, tol=args.tol)
    except PipelineError as exc:
        sys.stderr.write(
            json.dumps({"error": str(exc), "stage": exc.stage}) + "\n"
        )
        return 1
    cert = result.certificate
    names = BLOCK_NAMES if args.k == 4 else ("point",)
    if args.cert_out:
        with open(args.cert_out, "w") as fh:
            json.dump(
                certificate_to_json(cert, block_names=names, report=result.report),
                fh,
                sort_keys=True,
                indent=2,
            )
            fh.write("\n")
    if args.report_out:
        with open(args.report_out, "w") as fh:
            json.dump(report_to_json(result.report), fh, sort_keys=True, indent=2)
            fh.write("\n")
    _emit(
        {
            "alpha": rational_to_str(cert.alpha),
            "valid": result.report.valid,
            "equality": list(result.report.equality),
            "kernel_dims": list(result.report.kernel_dims),
            "stages": [name for name, _ in result.stages],
        },
        args.out,
    )
    if args.alpha is not None and Fraction(args.alpha) != cert.alpha:
        return 1
    return 0


def cmd_tau(args) -> int:
    value, witness = brute_force_tau(args.n)
    _emit(
        {"n": args.n, "tau": rational_to_str(value), "witness": graph_to_json(witness)},
        args.out,
    )
    return 0


def cmd_resolve_indices(args) -> int:
    labels = {
        str(label): list(ids) for label, ids in sorted(resolve_indices().items())
    }
    obj = {"labels": labels}
    if args.compare:
        try:
            with open(args.compare) as fh:
                cert = certificate_from_json(json.load(fh))
            obj["comparison"] = compare_to_reference(cert)
        except (OSError, KeyError, ValueError) as exc:
            return _fail(f"cannot compare: {exc}", 2)
    _emit(obj, args.out)
    return 0


def cmd_fixtures(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    written = []
    for name, cert, names in (
        ("goodman.json", goodman_certificate(), ("edge",)),
        ("qtoy2.json", k3_certificate(), ("point",)),
        ("reference_qbar.json", reference_projected_blocks(), BLOCK_NAMES),
    ):
        path = os.path.join(args.out_dir, name)
        with open(path, "w") as fh:
            json.dump(
                certificate_to_json(cert, block_names=names),
                fh,
                sort_keys=True,
                indent=2,
            )
            fh.write("\n")
        written.append(path)
    _emit({"written": written}, args.out)
    return 0


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="flagcert",
        description="Exact flag-algebra certificates for oriented-graph triple densities.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--out", help="write JSON here instead of stdout")
        return p

    p = add("enumerate", cmd_enumerate, help="list graph classes up to isomorphism")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--kind", choices=("oriented", "undirected"), default="oriented")

    p = add("densities", cmd_densities, help="blowup limit densities and eps expansions")
    p.add_argument("--k", type=int, default=4)

    p = add("matrices", cmd_matrices, help="exact flag matrices per class")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--family", choices=("goodman", "k3", "main"))
    p.add_argument("--class-id", type=int, dest="class_id")

    p = add("assemble", cmd_assemble, help="SDP shape and objective")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--family", choices=("goodman", "k3", "main"))

    p = add("sdpa-export", cmd_sdpa_export, help="write SDPA sparse format")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--family", choices=("goodman", "k3", "main"))
    p.add_argument("--projected", action="store_true")

    p = add("solve", cmd_solve, help="run the embedded interior-point solver")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--family", choices=("goodman", "k3", "main"))
    p.add_argument("--projected", action="store_true")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=100, dest="max_iters")
    p.add_argument("--solution-out", dest="solution_out")

    add("kernel", cmd_kernel, help="kernel vectors the certificate must annihilate")

    p = add("sharp", cmd_sharp, help="classes forced to equality")
    p.add_argument("--k", type=int, default=4)

    add("project", cmd_project, help="kernel-complement projection data")

    p = add("round", cmd_round, help="round a solver certificate to exact scalars")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--denominators", default="10000,100000,1000000")
    p.add_argument("--solution-in", dest="solution_in")

    p = add("verify", cmd_verify, help="exactly verify a certificate file")
    p.add_argument("--cert", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--family", choices=("goodman", "k3", "main"))
    p.add_argument("--alpha")
    p.add_argument("--projected", action="store_true")

    p = add("pipeline", cmd_pipeline, help="solve, round, pull back, verify")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--alpha")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--cert-out", dest="cert_out")
    p.add_argument("--report-out", dest="report_out")

    p = add("tau", cmd_tau, help="brute-force optimum over n-vertex graphs")
    p.add_argument("--n", type=int, required=True)

    p = add("resolve-indices", cmd_resolve_indices, help="published label map")
    p.add_argument("--compare", help="projected certificate JSON to compare against the stored reference")

    p = add("fixtures", cmd_fixtures, help="write stored certificates as JSON files")
    p.add_argument("--out-dir", required=True, dest="out_dir")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except SolverError as exc:
        return _fail(str(exc), 1)
    except ValueError as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
