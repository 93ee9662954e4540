"""
Command line front end.

Exit codes: 0 on success or when every check passed, 1 when a law or
invariant was violated, 2 on unreadable or inconsistent input.

All output is JSON with floats rounded to 12 significant digits, so equal
inputs and seeds give byte-identical output.  ``FELLGRID_THREADS`` caps the
worker threads used by ``suite``; results do not depend on it.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io
from .algebra import cstar_suite, essential_seminorm, multiplier_norm_check, random_section
from .bundle import MatrixBundle, TwistedLineBundle, validate_fell
from .groupoid import cyclic_group, direct_product, disjoint_union, pair_groupoid, validate
from .linalg import Tolerance
from .morphism import algebraize, validate_morphism
from .report import Report
from .section import Section, all_norms, convolve, norm_b

__all__ = ["main", "build_parser", "run_suite"]

SUITE_CHUNK = 25
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


def _threads() -> int:
    raw = os.environ.get("FELLGRID_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(4, os.cpu_count() or 1)


def _emit(obj, out: str | None) -> None:
    text = io.dump_json(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rebase(ref, from_file: str, out: str | None):
    """Rewrite a relative file reference found in ``from_file`` so it resolves from ``out``."""
    if not isinstance(ref, str):
        return ref
    target = os.path.abspath(os.path.join(os.path.dirname(from_file), ref))
    here = os.path.dirname(os.path.abspath(out)) if out else os.getcwd()
    return os.path.relpath(target, here)


def _tol(args) -> Tolerance:
    base = Tolerance()
    return Tolerance(
        atol=args.tol_abs if args.tol_abs is not None else base.atol,
        rtol=args.tol_rel if args.tol_rel is not None else base.rtol,
    )


def _chunk_seeds(seed: int, n_chunks: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def run_suite(bundle, seed: int, trials: int, tol: Tolerance, threads: int = 1) -> Report:
    """Bundle axioms, section-algebra laws and the multiplier check.

    Trials are split into fixed chunks of 25 with seeds spawned from
    ``seed``; chunks run in parallel and are merged in index order.
    """
    n_chunks = max(1, -(-trials // SUITE_CHUNK))
    seeds = _chunk_seeds(seed, n_chunks + 1)
    sizes = [min(SUITE_CHUNK, trials - k * SUITE_CHUNK) for k in range(n_chunks)] if trials > 0 else [0]

    # build shared lazy tables once, before threads touch the bundle
    norm_b(Section(bundle, bundle.mask.astype(np.complex128)))
    convolve(Section.zeros(bundle), Section.zeros(bundle))

    def job(k: int) -> Report:
        rep = validate_fell(bundle, trials=sizes[k], seed=seeds[k], tol=tol)
        rep.merge(cstar_suite(bundle, trials=sizes[k], seed=seeds[k], tol=tol))
        return rep

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(job, range(n_chunks)))
    total = Report("suite")
    for part in parts:
        total.merge(part)
    rng = np.random.default_rng(seeds[-1])
    l = random_section(bundle, rng)
    total.merge(multiplier_norm_check(bundle, l, trials=min(trials, 50), seed=seeds[-1], tol=tol))
    return total


# -- commands -------------------------------------------------------------------------


def cmd_validate(args) -> int:
    tol = _tol(args)
    results, ok = [], True
    for path in args.paths:
        d = io.load_json(path)
        kind = io.detect_kind(d)
        entry = {"file": path, "kind": kind}
        if kind == "groupoid":
            rep = validate(io.groupoid_from_dict(d, path))
            entry["valid"] = rep.valid
            entry["violations"] = [{"law": v.law, "witness": list(v.witness), "detail": v.detail} for v in rep.violations]
            ok &= rep.valid
        elif kind == "bundle":
            b = io.bundle_from_dict(d, path)
            grep = validate(b.base)
            rep = validate_fell(b, trials=args.trials, seed=args.seed, tol=tol)
            entry["groupoid_valid"] = grep.valid
            entry["report"] = rep.to_dict()
            ok &= grep.valid and rep.passed
        elif kind == "section":
            a = io.section_from_dict(d, path)
            entry["valid"] = True
            entry["support"] = len(a.support)
        elif kind == "morphism":
            m = io.morphism_from_dict(d, path)
            rep = validate_morphism(m, trials=args.trials, seed=args.seed, tol=tol)
            entry["report"] = rep.to_dict()
            ok &= rep.passed
        elif kind == "negligible":
            io.load_negligible(d, file=path)
            entry["valid"] = True
        else:
            raise io.ParseError("cannot tell which file format this is", path)
        results.append(entry)
    _emit({"passed": ok, "files": results}, args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_norms(args) -> int:
    a = io.load_section(args.section)
    _emit(all_norms(a), args.out)
    return EXIT_OK


def cmd_conv(args) -> int:
    a_raw = io.load_json(args.a)
    b_raw = io.load_json(args.b)
    a = io.section_from_dict(a_raw, args.a)
    b = io.section_from_dict(b_raw, args.b)
    if not a.bundle.same_as(b.bundle):
        raise io.CrossReferenceError("sections live on different bundles", args.b, "$.bundle")
    ref = _rebase(a_raw["bundle"], args.a, args.out)
    _emit(io.section_to_dict(convolve(a, b), bundle_ref=ref), args.out)
    return EXIT_OK


def cmd_ess_norm(args) -> int:
    a = io.load_section(args.section)
    n = io.load_negligible(args.negligible, n_arrows=a.bundle.base.n)
    value, G, H = essential_seminorm(a, n)
    _emit({"value": value, "G": sorted(G), "H": sorted(H)}, args.out)
    return EXIT_OK


def cmd_pullback(args) -> int:
    m_raw = io.load_json(args.morphism)
    m = io.morphism_from_dict(m_raw, args.morphism)
    a = io.load_section(args.section)
    if not a.bundle.same_as(m.source):
        raise io.CrossReferenceError("section does not live on the morphism's source bundle", args.section, "$.bundle")
    rep = validate_morphism(m, trials=args.trials, seed=args.seed, tol=_tol(args))
    if not rep.passed:
        _emit({"passed": False, "report": rep.to_dict()}, args.out)
        return EXIT_VIOLATION
    image = algebraize(m)(a)
    ref = _rebase(m_raw["target"], args.morphism, args.out)
    _emit(io.section_to_dict(image, bundle_ref=ref), args.out)
    return EXIT_OK


def cmd_suite(args) -> int:
    b = io.load_bundle(args.bundle)
    grep = validate(b.base)
    if not grep.valid:
        v = grep.first
        _emit({"passed": False, "groupoid": {"law": v.law, "witness": list(v.witness)}}, args.out)
        return EXIT_VIOLATION
    rep = run_suite(b, args.seed, args.trials, _tol(args), threads=_threads())
    out = rep.to_dict()
    out["seed"] = args.seed
    out["trials"] = args.trials
    _emit(out, args.out)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_groupoid(args) -> int:
    if args.family == "pair":
        g = pair_groupoid(int(args.args[0]))
    elif args.family == "cyclic":
        g = cyclic_group(int(args.args[0]))
    elif args.family in ("union", "product"):
        if len(args.args) != 2:
            raise io.ParseError(f"{args.family} needs two groupoid files")
        g1, g2 = io.load_groupoid(args.args[0]), io.load_groupoid(args.args[1])
        g = disjoint_union(g1, g2) if args.family == "union" else direct_product(g1, g2)
    else:
        raise io.ParseError(f"unknown family {args.family!r}")
    _emit(io.groupoid_to_dict(g), args.out)
    return EXIT_OK


def cmd_bundle(args) -> int:
    g = io.load_groupoid(args.groupoid)
    ref = _rebase(os.path.basename(args.groupoid), args.groupoid, args.out)
    if args.kind == "matrix":
        if args.dims:
            dims = [int(x) for x in args.dims.split(",")]
        else:
            dims = [1] * len(g.units)
        if len(dims) != len(g.units):
            raise io.CrossReferenceError(f"--dims needs {len(g.units)} entries, one per unit", args.groupoid)
        b = MatrixBundle(g, dims)
    else:
        b = TwistedLineBundle(g)
    _emit(io.bundle_to_dict(b, groupoid_ref=ref), args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for randomized checks (default 0)")
    common.add_argument("--trials", type=int, default=100, help="number of randomized trials (default 100)")
    common.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance (default 1e-9)")
    common.add_argument("--tol-rel", type=float, default=None, help="relative tolerance (default 1e-7)")
    common.add_argument("--out", default=None, help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="fellgrid", description="Section algebras of Fell bundles over finite groupoids.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check groupoid, bundle, section or morphism files")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("norms", parents=[common], help="the five norms of a section")
    s.add_argument("section")
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("conv", parents=[common], help="convolution of two sections")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_conv)

    s = sub.add_parser("ess-norm", parents=[common], help="essential seminorm against a negligible arrow set")
    s.add_argument("section")
    s.add_argument("negligible")
    s.set_defaults(func=cmd_ess_norm)

    s = sub.add_parser("pullback", parents=[common], help="image of a section under a Fell morphism")
    s.add_argument("morphism")
    s.add_argument("section")
    s.set_defaults(func=cmd_pullback)

    s = sub.add_parser("suite", parents=[common], help="randomized verification suite for a bundle")
    s.add_argument("bundle")
    s.set_defaults(func=cmd_suite)

    s = sub.add_parser("groupoid", parents=[common], help="write a groupoid file")
    s.add_argument("family", choices=["pair", "cyclic", "union", "product"])
    s.add_argument("args", nargs="+", help="size for pair/cyclic, two groupoid files for union/product")
    s.set_defaults(func=cmd_groupoid)

    s = sub.add_parser("bundle", parents=[common], help="write a bundle file over a groupoid file")
    s.add_argument("kind", choices=["matrix", "line"])
    s.add_argument("groupoid")
    s.add_argument("--dims", default=None, help="comma-separated fibre dimensions, one per unit in id order")
    s.set_defaults(func=cmd_bundle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except io.InputError as exc:
        print(f"fellgrid: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"fellgrid: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
