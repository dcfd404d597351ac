"""Batch command-line surface: decisions, matrices, certificate
verification, reductions, staged model builds, zoo evaluations.

Exit codes: 0 = verdict computed (holds and fails are both successful
outcomes), 1 = usage or internal error, 2 = certificate rejection.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

log = logging.getLogger("rcw")


def _setup_logging():
    level = {"quiet": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("RCW_LOG", "quiet"))
    if level is None:
        level = logging.ERROR
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(message)s")


def _parse_range(text):
    lo, _, hi = text.partition("..")
    return range(int(lo), int(hi) + 1)


def _mode(text):
    return {"complete": "complete", "cyclic": "cyclic_only"}[text]


def _write_cert(cert, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cert.to_json())


def _print_verdict(label, verdict, cert_path=None):
    line = f"{label}: {verdict.summary()}"
    print(line)
    for entry in verdict.scan_report:
        log.info("scan: %s", entry)
    if cert_path and verdict.witness is not None:
        _write_cert(verdict.witness, cert_path)
        print(f"certificate written to {cert_path}")


def cmd_decide(args):
    from . import deciders

    if args.principle == "rc":
        verdict = deciders.decide_local_rc(
            args.arity, args.m, mode=_mode(args.mode), jobs=args.jobs)
        _print_verdict(f"rc arity={args.arity} m={args.m}", verdict,
                       args.cert)
    else:
        verdict = deciders.decide_local_nrc(
            args.arity, args.k, args.bound, mode=_mode(args.mode),
            jobs=args.jobs)
        _print_verdict(f"nrc arity={args.arity} k={args.k} "
                       f"bound={args.bound}", verdict, args.cert)
    return 0


def cmd_matrix(args):
    from . import deciders, report

    if args.principle == "rc":
        results = deciders.implication_matrix(
            args.arity, _parse_range(args.m_range), mode=_mode(args.mode),
            jobs=args.jobs)
        xlabel = "m"
        title = f"rc matrix, arity {args.arity}"
    else:
        results = deciders.loop_matrix(
            args.arity, _parse_range(args.k_range), args.bound,
            mode=_mode(args.mode), jobs=args.jobs)
        xlabel = "k"
        title = f"nrc matrix, arity {args.arity}, bound {args.bound}"
    rows = report.matrix_rows(results)
    for row in rows:
        print(f"{row['param']},{row['kind']},{row['witness']}")
    if args.csv:
        report.write_csv(rows, args.csv)
        print(f"csv written to {args.csv}")
    if args.plot:
        report.render_matrix_png(rows, args.plot, title, xlabel=xlabel)
        print(f"plot written to {args.plot}")
    return 0


def cmd_verify(args):
    from .deciders import Certificate, CertificateError, verify_certificate

    try:
        with open(args.cert, encoding="utf-8") as fh:
            cert = Certificate.from_json(fh.read())
        verify_certificate(cert)
    except CertificateError as exc:
        print(f"rejected: {exc}")
        return 2
    except OSError as exc:
        print(f"error: {exc}")
        return 1
    print("accepted")
    return 0


def cmd_reduce(args):
    from . import reductions

    fam = reductions.load_family(args.family, seed=args.oracle_seed)
    traces = {}
    for i, member in enumerate(fam.members):
        atoms = sorted(member)
        if args.n == 6:
            traces[i] = (frozenset(atoms[:3]), frozenset(atoms[3:5]),
                         frozenset(atoms[5:7]))
        else:
            t = {2: 2, 3: 2, 4: 3}[args.n]
            traces[i] = (frozenset(atoms[:t]), frozenset(atoms[t:t + 1]))
    sel = reductions.reduce(args.n, fam, traces)
    print(f"selected {len(sel.assignments)} of {len(fam.members)} members")
    for i in sorted(sel.assignments):
        print(f"{i}:{','.join(str(a) for a in sorted(sel.assignments[i]))}")
    return 0


def cmd_fraisse_build(args):
    from . import fraisse

    stages = fraisse.build_to_atoms(args.arity, args.atoms) \
        if args.atoms else fraisse.build_model(args.arity, args.stages,
                                               atom_cap=args.atom_cap)
    last = stages[-1]
    fraisse.dump_stage(last, args.out)
    print(f"stage {last.stage_index} with {last.atom_count} atoms"
          f"{' (partial)' if last.partial else ''} written to {args.out}")
    return 0


def cmd_fraisse_check(args):
    from . import fraisse

    stage = fraisse.load_stage(args.file)
    ok, count = fraisse.scan_totality(stage, max_size=stage.arity + 1,
                                      sample=args.sample)
    rep = fraisse.check_extension_property(stage, stage.arity)
    print(f"totality scan: {'ok' if ok else 'FAILED'} ({count} subsets)")
    print(f"extension property: {len(rep['misses'])} misses in "
          f"{rep['checked']} checks ({rep['horizon_sets']}/"
          f"{rep['total_sets']} creation sets in horizon)")
    return 0 if ok and not rep["misses"] else 1


def cmd_zoo(args):
    from . import modelzoo

    params = _parse_zoo_params(args.model, args.params)
    model = modelzoo.make_model(args.model, params)
    verdict = modelzoo.evaluate(model, args.principle, args.n,
                                support_budget=args.support_budget)
    _print_verdict(
        f"zoo {args.model}{params} {args.principle} n={args.n}",
        verdict, args.cert)
    return 0


def _parse_zoo_params(model, text):
    if model == "vlines":
        sizes, _, per = text.partition(":")
        return (tuple(int(s) for s in sizes.split(",")), int(per))
    return (int(text),)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rcw",
        description="decision and search workbench for finite selection "
                    "structures under permutation groups")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="single local verdict")
    ds = p.add_subparsers(dest="principle", required=True)
    rc = ds.add_parser("rc")
    rc.add_argument("--arity", type=int, required=True)
    rc.add_argument("--m", type=int, required=True)
    rc.add_argument("--mode", choices=["complete", "cyclic"],
                    default="complete")
    rc.add_argument("--cert")
    rc.add_argument("--jobs", type=int, default=1)
    rc.set_defaults(fn=cmd_decide)
    nrc = ds.add_parser("nrc")
    nrc.add_argument("--arity", type=int, required=True)
    nrc.add_argument("--k", type=int, required=True)
    nrc.add_argument("--bound", type=int, required=True)
    nrc.add_argument("--mode", choices=["complete", "cyclic"],
                     default="cyclic")
    nrc.add_argument("--cert")
    nrc.add_argument("--jobs", type=int, default=1)
    nrc.set_defaults(fn=cmd_decide)

    p = sub.add_parser("matrix", help="verdict matrix with csv/png output")
    ms = p.add_subparsers(dest="principle", required=True)
    mrc = ms.add_parser("rc")
    mrc.add_argument("--arity", type=int, required=True)
    mrc.add_argument("--m-range", required=True)
    mrc.add_argument("--mode", choices=["complete", "cyclic"],
                     default="complete")
    mrc.add_argument("--csv")
    mrc.add_argument("--plot")
    mrc.add_argument("--jobs", type=int, default=1)
    mrc.set_defaults(fn=cmd_matrix)
    mnrc = ms.add_parser("nrc")
    mnrc.add_argument("--arity", type=int, required=True)
    mnrc.add_argument("--k-range", required=True)
    mnrc.add_argument("--bound", type=int, required=True)
    mnrc.add_argument("--mode", choices=["complete", "cyclic"],
                      default="cyclic")
    mnrc.add_argument("--csv")
    mnrc.add_argument("--plot")
    mnrc.add_argument("--jobs", type=int, default=1)
    mnrc.set_defaults(fn=cmd_matrix)

    p = sub.add_parser("verify", help="independent certificate check")
    p.add_argument("cert")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("reduce", help="partial selection from a family file")
    p.add_argument("--n", type=int, required=True, choices=[2, 3, 4, 6])
    p.add_argument("--family", required=True)
    p.add_argument("--oracle-seed", type=int, default=0)
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("fraisse", help="staged generic model")
    fs = p.add_subparsers(dest="sub", required=True)
    fb = fs.add_parser("build")
    fb.add_argument("--arity", type=int, required=True)
    fb.add_argument("--stages", type=int, default=3)
    fb.add_argument("--atoms", type=int,
                    help="build until this many atoms instead")
    fb.add_argument("--atom-cap", type=int, default=64)
    fb.add_argument("--out", required=True)
    fb.set_defaults(fn=cmd_fraisse_build)
    fc = fs.add_parser("check")
    fc.add_argument("file")
    fc.add_argument("--sample", type=int, default=20000)
    fc.set_defaults(fn=cmd_fraisse_check)

    p = sub.add_parser("zoo", help="named model evaluation")
    zs = p.add_subparsers(dest="sub", required=True)
    ze = zs.add_parser("eval")
    ze.add_argument("--model", required=True,
                    choices=["vfin", "bfm", "vlines"])
    ze.add_argument("--params", required=True)
    ze.add_argument("--principle", required=True,
                    choices=["nrc_fin", "c_n", "rc", "ncfin_minus"])
    ze.add_argument("--n", type=int, required=True)
    ze.add_argument("--support-budget", type=int, default=0)
    ze.add_argument("--cert")
    ze.set_defaults(fn=cmd_zoo)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.fn(args)
    except Exception as exc:  # surfaced as a clean one-line error
        log.debug("internal error", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
