"""Command line: ``fltrack {track,eval,synth,learn-dict,sweep}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

from .dictlearn import init_dictionary, load_dictionary, save_dictionary
from .encode import METHODS as ENCODERS
from .encode import EncoderSpec
from .lasso import default_lambda
from .lssvm import DEFAULT_GAMMA
from .metrics import evaluate, read_trajectory, write_report, write_trajectory
from .patchgrid import PatchGridSpec
from .pyrpool import PyramidSpec
from .seqio import TRUTH_FILENAME, BoundingBox, load_sequence, parse_truth_line, read_truth, save_sequence, synth_sequence
from .tracker import UPDATE_MODES, TrackerConfig, dilate, track_sequence, window_patches

DICT_METHODS = {"odl": "odl", "kmeans": "kmeans", "rs": "random_sample", "random_sample": "random_sample"}
SWEEP_PARAMS = ("dict-size", "levels", "encoder", "dict-method")


def _pair(text: str, kind=float) -> tuple:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return tuple(kind(p) for p in parts)


def _box(text: str) -> BoundingBox:
    try:
        return parse_truth_line(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _levels(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _tracker_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tracker")
    g.add_argument("--encoder", choices=ENCODERS, default="st")
    g.add_argument("--dict-update", choices=UPDATE_MODES, default="off")
    g.add_argument("--dict-method", choices=sorted(DICT_METHODS), default="odl")
    g.add_argument("--dict-size", type=int, default=100)
    g.add_argument("--dict-in", type=Path, help="FTDICT01 dictionary to start from instead of learning one")
    g.add_argument("--init-epochs", type=int, default=2)
    g.add_argument("--odl-lambda", type=float, default=None, help="default 1.2/sqrt(patch dim)")
    g.add_argument("--levels", type=_levels, default=(1, 2, 3))
    g.add_argument("--patch", type=int, default=None, help="patch size (default 8, or 6 for targets < 30 px)")
    g.add_argument("--stride", type=int, default=None)
    g.add_argument("--st-fraction", type=float, default=0.25)
    g.add_argument("--beta", type=float, default=10.0)
    g.add_argument("--k", type=int, default=10)
    g.add_argument("--sc-lambda", type=float, default=0.25)
    g.add_argument("--lsa-local-denominator", action="store_true")
    g.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    g.add_argument("--bias-verbatim", action="store_true")
    g.add_argument("--search-radius", type=int, default=30)
    g.add_argument("--train-radius", type=int, default=60)
    g.add_argument("--candidate-stride", type=int, default=2)
    g.add_argument("--retrain-every", type=int, default=4)
    g.add_argument("--negatives", type=int, default=40)
    g.add_argument("--neg-vor-max", type=float, default=0.3)
    g.add_argument("--jitter-positives", type=int, default=4)
    g.add_argument("--overlap-threshold", type=float, default=0.9)
    g.add_argument("--gt-frame2", action="store_true", help="use the true frame-2 box for the initial model")
    g.add_argument("--seed", type=int, default=0)


def config_from_args(args) -> TrackerConfig:
    grid = None
    if args.patch is not None or args.stride is not None:
        p = args.patch if args.patch is not None else 8
        grid = PatchGridSpec(p, args.stride if args.stride is not None else max(1, p // 2))
    encoder = EncoderSpec(
        args.encoder,
        st_fraction=args.st_fraction,
        beta=args.beta,
        k=args.k,
        sc_lambda=args.sc_lambda,
        lsa_local_denominator=args.lsa_local_denominator,
    )
    return TrackerConfig(
        search_radius_track=args.search_radius,
        search_radius_train=args.train_radius,
        candidate_stride=args.candidate_stride,
        retrain_every=args.retrain_every,
        negatives_per_frame=args.negatives,
        neg_vor_max=args.neg_vor_max,
        jitter_positives=args.jitter_positives,
        dict_update_mode=args.dict_update,
        dict_method=DICT_METHODS[args.dict_method],
        dict_size=args.dict_size,
        init_epochs=args.init_epochs,
        odl_lambda=args.odl_lambda,
        overlap_threshold=args.overlap_threshold,
        grid=grid,
        encoder=encoder,
        pyramid=PyramidSpec(args.levels),
        gamma=args.gamma,
        bias="verbatim" if args.bias_verbatim else "corrected",
        gt_frame2=args.gt_frame2,
        seed=args.seed,
    )


def _load(seq_dir: Path, truth: Path | None, one_based: bool):
    if truth is None and (seq_dir / TRUTH_FILENAME).exists():
        truth = seq_dir / TRUTH_FILENAME
    return load_sequence(seq_dir, truth, one_based=one_based)


def _run(seq, init_box, cfg, dictionary=None):
    start = time.perf_counter()
    out, tracker = track_sequence(seq, init_box, cfg, dictionary, return_tracker=True)
    return out, time.perf_counter() - start, tracker


# ---------------------------------------------------------------------------


def cmd_track(args) -> int:
    seq = _load(args.seq, args.truth, args.one_based)
    init_box = args.init
    if init_box is None:
        if seq.truth is None:
            raise ValueError("--init is required when no ground truth is available")
        init_box = seq.truth[0]
    cfg = config_from_args(args)
    dictionary = load_dictionary(args.dict_in) if args.dict_in else None
    out, elapsed, tracker = _run(seq, init_box, cfg, dictionary)
    boxes = [b for b, _ in out]
    write_trajectory(args.out, boxes, [s for _, s in out])
    if args.dict_out:
        save_dictionary(args.dict_out, tracker.state.dictionary)
    msg = f"{seq.name}: {len(seq)} frames in {elapsed:.2f}s ({len(seq) / elapsed:.2f} fps)"
    if seq.truth is not None:
        rep = evaluate(boxes, seq.truth)
        msg += f", mean VOR {rep.mean_vor:.4f}, mean CLE {rep.mean_cle:.4f}"
    print(msg)
    return 0


def cmd_eval(args) -> int:
    boxes, _ = read_trajectory(args.traj)
    truth = read_truth(args.truth, one_based=args.one_based)
    report = evaluate(boxes, truth)
    if args.out:
        write_report(args.out, report)
    print(f"frames {len(report.per_frame)} mean_vor {report.mean_vor:.6f} mean_cle {report.mean_cle:.6f}")
    return 0


def cmd_synth(args) -> int:
    seq = synth_sequence(
        args.width,
        args.height,
        args.frames,
        args.target,
        velocity=args.velocity,
        jitter_sigma=args.jitter,
        noise_sigma=args.noise,
        seed=args.seed,
        start=args.start,
    )
    save_sequence(seq, args.out)
    print(f"wrote {len(seq)} frames to {args.out}")
    return 0


def cmd_learn_dict(args) -> int:
    seq = _load(args.seq, args.truth, args.one_based)
    if not 1 <= args.frame <= len(seq):
        raise ValueError(f"--frame {args.frame} outside 1..{len(seq)}")
    frame = seq.frames[args.frame - 1]
    box = args.box
    if box is None:
        box = seq.truth[args.frame - 1] if seq.truth is not None else BoundingBox(0, 0, frame.width, frame.height)
    grid = PatchGridSpec(args.patch, args.stride) if args.patch else PatchGridSpec.for_target(box)
    X = window_patches(frame, dilate(box, args.radius), grid)
    if X is None:
        raise ValueError(f"region around {box.as_tuple()} admits no patch grid")
    lam = args.odl_lambda if args.odl_lambda is not None else default_lambda(grid.dim)
    D, _ = init_dictionary(DICT_METHODS[args.method], X, args.dict_size, args.epochs, lam, args.seed)
    save_dictionary(args.out, D)
    print(f"learned {D.m}x{D.n} dictionary ({args.method}) from {X.shape[1]} patches -> {args.out}")
    return 0


def _sweep_values(param: str, text: str) -> list:
    if param == "levels":
        return [_levels(v) for v in text.split(";") if v.strip()]
    values = [v.strip() for v in text.split(",") if v.strip()]
    if param == "dict-size":
        return [int(v) for v in values]
    if param == "dict-method":
        for v in values:
            if v not in DICT_METHODS:
                raise ValueError(f"unknown dictionary method {v!r}")
    if param == "encoder":
        for v in values:
            if v not in ENCODERS:
                raise ValueError(f"unknown encoder {v!r}")
    return values


DEFAULT_SWEEP = {"dict-size": "25,50,100,200", "levels": "1;1,2;1,2,3;1,2,3,4", "encoder": "st,tk,sa,lsa,sc", "dict-method": "odl,kmeans,rs"}


def cmd_sweep(args) -> int:
    values = _sweep_values(args.param, args.values or DEFAULT_SWEEP[args.param])
    seqs = [_load(d, None, args.one_based) for d in args.seq]
    for s in seqs:
        if s.truth is None:
            raise ValueError(f"sequence {s.name} has no {TRUTH_FILENAME}")
    rows = []
    for seq in seqs:
        for v in values:
            a = argparse.Namespace(**vars(args))
            if args.param == "dict-size":
                a.dict_size = v
            elif args.param == "levels":
                a.levels = v
            elif args.param == "encoder":
                a.encoder = v
            else:
                a.dict_method = v
            out, elapsed, _ = _run(seq, seq.truth[0], config_from_args(a))
            rep = evaluate([b for b, _ in out], seq.truth)
            label = ",".join(map(str, v)) if isinstance(v, tuple) else str(v)
            rows.append([seq.name, args.param, label, f"{rep.mean_vor:.6f}", f"{rep.mean_cle:.6f}", f"{len(seq) / elapsed:.6f}"])
            print(f"{seq.name} {args.param}={label}: VOR {rep.mean_vor:.4f} CLE {rep.mean_cle:.4f}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequence", "param", "value", "mean_vor", "mean_cle", "fps"])
        w.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fltrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track a sequence and write a trajectory CSV")
    p.add_argument("--seq", type=Path, required=True)
    p.add_argument("--init", type=_box, default=None, help='"x,y,w,h" (default: first truth box)')
    p.add_argument("--truth", type=Path, default=None)
    p.add_argument("--one-based", action="store_true", help="truth file uses 1-based coordinates")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dict-out", type=Path, default=None, help="write the final dictionary (FTDICT01)")
    _tracker_options(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="per-frame VOR/CLE report for a trajectory")
    p.add_argument("--traj", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic test sequence")
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--target", type=int, default=40)
    p.add_argument("--velocity", type=_pair, default=(0.0, 0.0))
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=lambda s: _pair(s, int), default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("learn-dict", help="learn a dictionary from one frame and write an FTDICT01 file")
    p.add_argument("--method", choices=sorted(DICT_METHODS), default="odl")
    p.add_argument("--seq", type=Path, required=True)
    p.add_argument("--truth", type=Path, default=None)
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--frame", type=int, default=1)
    p.add_argument("--box", type=_box, default=None)
    p.add_argument("--radius", type=int, default=60, help="margin around the box to draw patches from")
    p.add_argument("--dict-size", type=int, default=100)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--odl-lambda", type=float, default=None)
    p.add_argument("--patch", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_learn_dict)

    p = sub.add_parser("sweep", help="compare one tracker parameter across values and sequences")
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--values", default=None, help="comma list; for levels a ';'-separated list of comma lists")
    p.add_argument("--seq", type=Path, action="append", required=True)
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    _tracker_options(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"fltrack {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
