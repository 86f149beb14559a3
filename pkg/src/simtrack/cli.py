"""Command-line entry point: track, evaluate, bench, train-embed, gen-synth,
report.

Exit codes: 0 success, 1 validation/usage errors, 2 I/O and format errors.
Every subcommand is reproducible given --seed (timing output excluded).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import load_config_file, merge_config, substream_rng, substream_seed
from .embedding import (
    HandcraftedProvider,
    OracleProvider,
    PrecomputedProvider,
    TrainConfig,
    batch_loss,
    init_base_model,
    init_enhanced_model,
    load_model,
    make_synthetic_pairs,
    pair_distances,
    save_model,
    train,
)
from .errors import ConfigError, FormatError, ValidationError
from .io import (
    ResultEntry,
    SyntheticSpec,
    generate_synthetic,
    parse_kitti,
    parse_mot,
    read_descriptors,
    write_descriptors,
    write_mot,
    write_mot_detections,
    write_mot_ground_truth,
)
from .matcher import BenchReport, MatcherConfig, bench_matchers
from .metrics import evaluate, format_table, pair_classification
from .scoring import ScoreParams
from .tracker import TrackerConfig, run_sequence

NET_TO_HEAD = {"base": "base", "esnn": "enhanced"}


class _Parser(argparse.ArgumentParser):
    # spec'd exit code for usage errors is 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="simtrack", description=__doc__)
    parser.add_argument("--version", action="version", version=f"simtrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_track = sub.add_parser("track", help="run the tracker over a detection file")
    p_track.add_argument("--seq", help="sequence directory with det/det.txt and gt/gt.txt")
    p_track.add_argument("--det", help="detection file (overrides --seq)")
    p_track.add_argument("--gt", help="ground-truth file for the oracle provider")
    p_track.add_argument("--descriptors", help="precomputed descriptor CSV (file provider)")
    p_track.add_argument("--config", help="key = value config file")
    p_track.add_argument("--out", required=True, help="output result file")
    p_track.add_argument("--net", choices=("base", "esnn"))
    p_track.add_argument("--matcher", choices=("greedy", "hungarian"))
    p_track.add_argument("--fn", type=int, dest="fn")
    p_track.add_argument("--provider", choices=("handcrafted", "oracle", "file"))
    p_track.add_argument("--model", help="trained embedding model file")
    p_track.add_argument("--min-confidence", type=float, dest="min_confidence")
    p_track.add_argument("--min-score", type=float, dest="min_score")
    p_track.add_argument("--noise", type=float, help="oracle descriptor noise")
    p_track.add_argument("--alpha", type=float)
    p_track.add_argument("--gamma", type=float)
    p_track.add_argument("--delta", type=float)
    p_track.add_argument("--seed", type=int)
    p_track.add_argument("--threads", type=int)

    p_eval = sub.add_parser("evaluate", help="CLEAR-MOT metrics of results vs ground truth")
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--res", required=True)
    p_eval.add_argument("--iou", type=float, default=0.5)
    p_eval.add_argument("--format", choices=("mot", "kitti"), default="mot")
    p_eval.add_argument("--name", default=None, help="row label in the printed table")

    p_bench = sub.add_parser("bench", help="matcher runtime comparison")
    p_bench.add_argument("--sizes", default="50,200,800", help="comma-separated matrix sizes")
    p_bench.add_argument("--trials", type=int, default=5)
    p_bench.add_argument("--seed", type=int, default=42)
    p_bench.add_argument("--out", help="CSV output path")
    p_bench.add_argument("--backend", choices=("numba", "numpy"))
    p_bench.add_argument("--threads", type=int)

    p_train = sub.add_parser("train-embed", help="train an embedding head on synthetic pairs")
    p_train.add_argument("--head", choices=("base", "esnn"))
    p_train.add_argument("--config", help="key = value config file")
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int, dest="batch_size")
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--margin", type=float)
    p_train.add_argument("--freeze-epochs", type=int, dest="freeze_epochs")
    p_train.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p_train.add_argument("--identities", type=int)
    p_train.add_argument("--pairs-per-class", type=int, dest="pairs_per_class")
    p_train.add_argument("--confusers", type=int)
    p_train.add_argument("--noise", type=float)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--out", required=True, help="model output file")

    p_gen = sub.add_parser("gen-synth", help="generate a synthetic sequence")
    p_gen.add_argument("--identities", type=int)
    p_gen.add_argument("--frames", type=int)
    p_gen.add_argument("--speed", type=float)
    p_gen.add_argument("--noise", type=float)
    p_gen.add_argument("--dropout", type=float)
    p_gen.add_argument("--spurious-rate", type=float, dest="spurious_rate")
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--config", help="key = value config file")
    p_gen.add_argument("--out-dir", required=True)

    p_report = sub.add_parser("report", help="summarize bench CSVs or evaluation rows")
    p_report.add_argument("--bench", help="bench CSV file")
    p_report.add_argument("--eval", dest="eval_path", help="JSON-lines evaluation rows")
    return parser


def _load_flags_config(args, keys) -> dict:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    flags = {k: getattr(args, k, None) for k in keys}
    return merge_config(file_values, flags)


def _cmd_track(args) -> int:
    cfg = _load_flags_config(
        args,
        (
            "net",
            "matcher",
            "fn",
            "provider",
            "min_confidence",
            "min_score",
            "noise",
            "alpha",
            "gamma",
            "delta",
            "seed",
            "threads",
        ),
    )
    seed = cfg.get("seed", 42)
    if cfg.get("threads"):
        kernels.set_thread_cap(cfg["threads"])
    det_path = args.det or (Path(args.seq) / "det" / "det.txt" if args.seq else None)
    if det_path is None:
        raise ConfigError("need --det or --seq")
    gt_path = args.gt or (Path(args.seq) / "gt" / "gt.txt" if args.seq else None)

    net = cfg.get("net", "base")
    params = ScoreParams(
        alpha=cfg.get("alpha", 0.8),
        gamma=cfg.get("gamma", 1e-5),
        delta=cfg.get("delta", 0.2),
        net_kind=net,
    )
    provider_kind = cfg.get("provider", "file" if args.descriptors else "oracle")
    tracker_config = TrackerConfig(
        f_n=cfg.get("fn", 1),
        score_params=params,
        matcher=MatcherConfig(algorithm=cfg.get("matcher", "greedy")),
        provider=provider_kind,
        min_confidence=cfg.get("min_confidence", 0.0),
    )

    if args.model:
        model = load_model(args.model)
        expected = NET_TO_HEAD[net]
        if model.head_kind != expected:
            raise ConfigError(f"model head {model.head_kind!r} does not match --net {net}")
    elif net == "base":
        model = init_base_model(seed=seed)
    else:
        model = init_enhanced_model(seed=seed)

    detections, warnings = parse_mot(det_path, kind="detections")
    for line_no, message in warnings:
        print(f"warning: {det_path}:{line_no}: {message}", file=sys.stderr)

    if provider_kind == "oracle":
        if gt_path is None:
            raise ConfigError("oracle provider needs --gt or --seq")
        gt_entries, _ = parse_mot(gt_path, kind="ground_truth")
        provider = OracleProvider(
            gt_entries, noise=cfg.get("noise", 0.0), rng=substream_rng(seed, "oracle")
        )
    elif provider_kind == "file":
        if not args.descriptors:
            raise ConfigError("file provider needs --descriptors")
        provider = PrecomputedProvider(read_descriptors(args.descriptors))
    else:
        provider = HandcraftedProvider()

    results, stats = run_sequence(
        tracker_config,
        model,
        provider,
        detections,
        min_score=cfg.get("min_score", -math.inf),
    )
    write_mot(results, args.out)
    print(
        f"frames={stats.frames} detections={stats.detections} "
        f"tracks={stats.tracks_created} hz={stats.hz:.1f}",
        file=sys.stderr,
    )
    return 0


def _cmd_evaluate(args) -> int:
    if args.format == "kitti":
        gt, gt_warn = parse_kitti(args.gt)
        res_entries, res_warn = parse_kitti(args.res)
        results = [ResultEntry(e.frame, e.identity, e.box) for e in res_entries]
    else:
        gt, gt_warn = parse_mot(args.gt, kind="ground_truth")
        results, res_warn = parse_mot(args.res, kind="results")
    for path, warnings in ((args.gt, gt_warn), (args.res, res_warn)):
        for line_no, message in warnings:
            print(f"warning: {path}:{line_no}: {message}", file=sys.stderr)
    report = evaluate(results, gt, iou_threshold=args.iou)
    name = args.name or Path(args.res).stem
    print(format_table(report, name=name))
    print(report.to_json_line(name=name, iou_threshold=args.iou))
    return 0


def _cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --sizes: {exc}") from exc
    if args.threads:
        kernels.set_thread_cap(args.threads)
    report = bench_matchers(
        sizes, args.trials, seed=substream_seed(args.seed, "bench"), backend=args.backend
    )
    if args.out:
        report.to_csv(args.out)
        print(f"wrote {args.out}", file=sys.stderr)
    print(report.summary_text())
    return 0


def _cmd_train_embed(args) -> int:
    cfg = _load_flags_config(
        args,
        (
            "epochs",
            "batch_size",
            "lr",
            "margin",
            "freeze_epochs",
            "hidden_dim",
            "identities",
            "pairs_per_class",
            "confusers",
            "noise",
            "seed",
        ),
    )
    seed = cfg.get("seed", 42)
    head = args.head or "base"
    enhanced = NET_TO_HEAD[head] == "enhanced"
    margin = cfg.get("margin", 0.5 if enhanced else 3.0)
    hidden = cfg.get("hidden_dim", 16)
    if enhanced:
        model = init_enhanced_model(hidden_dim=hidden, margin=margin, seed=seed)
    else:
        model = init_base_model(hidden_dim=hidden, margin=margin, seed=seed)

    rng = substream_rng(seed, "synth")
    samples = make_synthetic_pairs(
        n_identities=cfg.get("identities", 8),
        pairs_per_class=cfg.get("pairs_per_class", 256),
        noise=cfg.get("noise", 0.05),
        rng=rng,
        enhanced=enhanced,
        confusers=cfg.get("confusers", 0),
    )
    train_config = TrainConfig(
        epochs=cfg.get("epochs", 200),
        batch_size=cfg.get("batch_size", 128),
        lr=cfg.get("lr", 0.01),
        margin=margin,
        seed=substream_seed(seed, "trainer"),
        freeze_epochs=cfg.get("freeze_epochs", 0),
    )
    trained, history = train(model, samples, train_config)
    save_model(trained, args.out)

    distances = pair_distances(trained, samples)
    labels = [s.label for s in samples]
    report = pair_classification(list(zip(distances.tolist(), labels)), trained.margin)
    first = history[0] if history else float("nan")
    last = history[-1] if history else batch_loss(trained, samples)
    print(
        f"samples={len(samples)} epochs={train_config.epochs} "
        f"loss[0]={first:.6f} loss[-1]={last:.6f} "
        f"precision={report.precision:.4f} recall={report.recall:.4f} f1={report.f1:.4f}"
    )
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _cmd_gen_synth(args) -> int:
    cfg = _load_flags_config(
        args,
        ("identities", "frames", "speed", "noise", "dropout", "spurious_rate", "seed"),
    )
    seed = cfg.get("seed", 42)
    spec = SyntheticSpec(
        n_identities=cfg.get("identities", 5),
        n_frames=cfg.get("frames", 100),
        speed=cfg.get("speed", 3.0),
        descriptor_noise=cfg.get("noise", 0.0),
        dropout=cfg.get("dropout", 0.0),
        spurious_rate=cfg.get("spurious_rate", 0.0),
    )
    seq = generate_synthetic(spec, seed=substream_seed(seed, "synth"))
    out_dir = Path(args.out_dir)
    (out_dir / "det").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)
    write_mot_detections(seq.detections, out_dir / "det" / "det.txt")
    write_mot_ground_truth(seq.ground_truth, out_dir / "gt" / "gt.txt")
    write_descriptors(seq.descriptors, out_dir / "descriptors.csv")
    print(
        f"wrote {out_dir}: {len(seq.detections)} detections, "
        f"{len(seq.ground_truth)} gt rows, {len(seq.descriptors)} descriptors"
    )
    return 0


def _cmd_report(args) -> int:
    import json

    if not args.bench and not args.eval_path:
        raise ConfigError("report needs --bench and/or --eval")
    if args.bench:
        report = BenchReport.from_csv(args.bench)
        print(f"{'n':>6} {'hungarian/greedy':>18}")
        for n, ratio in report.ratios().items():
            print(f"{n:>6} {ratio:>18.2f}")
        print(report.summary_text())
    if args.eval_path:
        with open(args.eval_path) as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
        header = f"{'name':<12} {'MOTA':>6} {'MOTP':>6} {'MT':>6} {'PT':>6} {'ML':>6} {'IDs':>5} {'Frag':>5}"
        print(header)
        for row in rows:
            mt, pt, ml = row["mostly_tracked"], row["partially_tracked"], row["mostly_lost"]
            total = mt + pt + ml
            flag = "" if (row["n_trajectories"] == 0 or abs(total - 1.0) < 1e-9) else "  [MT+PT+ML != 100%]"
            print(
                f"{row.get('name', '?'):<12} {row['mota'] * 100:>6.1f} {row['motp'] * 100:>6.1f} "
                f"{mt * 100:>5.1f}% {pt * 100:>5.1f}% {ml * 100:>5.1f}% "
                f"{row['id_switches']:>5} {row['fragmentations']:>5}{flag}"
            )
    return 0


_COMMANDS = {
    "track": _cmd_track,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
    "train-embed": _cmd_train_embed,
    "gen-synth": _cmd_gen_synth,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
