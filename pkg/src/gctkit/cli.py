"""Command line entry point: ``eval``, ``igl`` and ``synth`` subcommands."""
import argparse
import logging
import sys
from pathlib import Path

from .bench import emit_report, evaluate
from .episodes import (
    SUPERVISED_REGIMES,
    EpisodeSpec,
    MultiModalSet,
    align_modalities,
    load_feature_table,
    synth_two_modal,
    write_feature_table,
)
from .errors import GctError
from .gct import GctConfig
from .gl_baseline import GlConfig
from .igl import IglConfig

log = logging.getLogger("gctkit")

LAPLACIAN = {"expanded": "expanded_laplacian", "paper": "paper_literal"}


def _cap(text):
    if text == "auto":
        return "auto"
    if text == "off":
        return None
    return int(text)


def _add_episode_args(p, regimes):
    p.add_argument("--format", choices=["csv", "fvec"], default="csv")
    p.add_argument("--regime", choices=regimes, default=regimes[0])
    p.add_argument("--ways", type=int, default=5)
    p.add_argument("--shots", type=int, default=1)
    p.add_argument("--queries", type=int, default=15)
    p.add_argument("--unlabeled", type=int, default=None,
                   help="pool size; defaults to 80, or 0 for supervised regimes")
    p.add_argument("--episodes", type=int, default=600)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--mu", type=float, default=0.6)
    p.add_argument("--knn", type=int, default=10)
    p.add_argument("--laplacian", choices=sorted(LAPLACIAN), default="expanded")
    p.add_argument("--b-update", choices=["squared", "unsquared"], default="squared")
    p.add_argument("--normalize-features", choices=["on", "off"], default="on")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--report-format", choices=["json", "csv"], default=None,
                   help="defaults to csv for a .csv --out path, json otherwise")
    p.add_argument("--distractors", action="store_true",
                   help="draw the unlabeled pool from all classes, not only the roster")


def build_parser():
    parser = argparse.ArgumentParser(prog="gctkit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="co-training evaluation over two feature views")
    ev.add_argument("--mod-a", type=Path, required=True)
    ev.add_argument("--mod-b", type=Path, required=True)
    _add_episode_args(ev, ["issfsl", "isfsl", "tsfsl", "tssfsl"])
    ev.add_argument("--method", choices=["gct", "gl"], default="gct",
                    help="gl runs label propagation on --mod-a as a baseline")
    ev.add_argument("--confidence", choices=["raw", "softmax"], default="raw")
    ev.add_argument("--class-cap", type=_cap, default="auto",
                    help="per-class pseudo-label cap per view: auto, off, or an integer")
    ev.add_argument("--beta", type=float, default=1.0, help="label propagation weight (gl only)")

    ig = sub.add_parser("igl", help="single-view IGL on one feature table")
    ig.add_argument("--mod-a", type=Path, required=True)
    _add_episode_args(ig, ["isfsl"])

    sy = sub.add_parser("synth", help="write a synthetic two-view feature set")
    sy.add_argument("--classes", type=int, default=5)
    sy.add_argument("--per-class", type=int, default=100)
    sy.add_argument("--dim", type=int, default=32)
    sy.add_argument("--separation", type=float, default=6.0)
    sy.add_argument("--seed", type=int, default=7)
    sy.add_argument("--out-a", type=Path, required=True)
    sy.add_argument("--out-b", type=Path, required=True)
    sy.add_argument("--format", choices=["csv", "fvec"], default=None,
                    help="defaults to csv for .csv paths, fvec otherwise")
    return parser


def _configs(args):
    igl_cfg = IglConfig(
        lam=args.lam,
        mu=args.mu,
        k=args.knn,
        laplacian=LAPLACIAN[args.laplacian],
        b_update=args.b_update,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        normalize_features=args.normalize_features == "on",
    )
    unlabeled = args.unlabeled
    regime = args.regime.upper()
    if unlabeled is None:
        unlabeled = 0 if regime in SUPERVISED_REGIMES else 80
    spec = EpisodeSpec(
        ways=args.ways,
        shots=args.shots,
        queries=args.queries,
        unlabeled=unlabeled,
        regime=regime,
        seed=args.seed,
        distractors=args.distractors,
    )
    cfg = GctConfig(
        igl=igl_cfg,
        confidence=getattr(args, "confidence", "raw"),
        class_cap=getattr(args, "class_cap", "auto"),
    )
    return spec, cfg


def _finish(report, args):
    print(report.summary_line())
    if args.out is not None:
        fmt = args.report_format or ("csv" if args.out.suffix == ".csv" else "json")
        emit_report(report, args.out, fmt)
        log.info("wrote %s", args.out)


def cmd_eval(args):
    spec, cfg = _configs(args)
    a = load_feature_table(args.mod_a, args.format)
    b = load_feature_table(args.mod_b, args.format)
    data = align_modalities(a, b)
    gl_cfg = None
    if args.method == "gl":
        gl_cfg = GlConfig(beta=args.beta, k=args.knn, laplacian=LAPLACIAN[args.laplacian],
                          normalize_features=args.normalize_features == "on")
    report = evaluate(data, spec, cfg, args.episodes, args.seed, args.jobs, args.method, gl_cfg)
    _finish(report, args)


def cmd_igl(args):
    spec, cfg = _configs(args)
    a = load_feature_table(args.mod_a, args.format)
    report = evaluate(MultiModalSet(a, a), spec, cfg, args.episodes, args.seed, args.jobs, "igl")
    _finish(report, args)


def cmd_synth(args):
    data = synth_two_modal(args.classes, args.per_class, args.dim, args.separation, args.seed)
    for fs, path in ((data.modality_a, args.out_a), (data.modality_b, args.out_b)):
        fmt = args.format or ("csv" if path.suffix == ".csv" else "fvec")
        write_feature_table(fs, path, fmt)
    print(f"wrote {len(data.ids)} samples x {args.dim} dims to {args.out_a} and {args.out_b}")


COMMANDS = {"eval": cmd_eval, "igl": cmd_igl, "synth": cmd_synth}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except GctError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
