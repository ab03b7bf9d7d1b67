"""
``hmmsnn`` command-line interface.

Subcommands: gen-synthetic, gen-words, segment, train, classify, eval,
roc, inspect. Every subcommand is deterministic for a given ``--seed``,
and ``--jobs`` never changes any output.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import fields
from importlib import resources
from pathlib import Path

import numpy as np

from hmmsnn import persistence
from hmmsnn.errors import FormatError, HmmSnnError, InvalidInputError
from hmmsnn.features import load_pcm, read_frames_csv, save_pcm, spectrogram, write_frames_csv
from hmmsnn.hmm import SegmentedObservation, classify
from hmmsnn.segmentation import auto_segment
from hmmsnn.spikes import SpikeRaster, read_raster, write_raster
from hmmsnn.synthetic import DEFAULT_CLASSES, check_labels, make_sequence
from hmmsnn.training import (
    TrainConfig,
    calibrate_models,
    derived_seed,
    prepare_speech_item,
    report_from_scores,
    score_items,
    sweep_scores,
    train_models,
    winner_weighted_weights,
)
from hmmsnn.wordsynth import WORDS, synthesize_word
from hmmsnn.wta import EMISSIONS, mixing_coefficients

log = logging.getLogger("hmmsnn")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DEMO_MODEL = "demo"


class UsageError(HmmSnnError):
    """Bad combination of arguments that argparse cannot catch."""


# ---------------------------------------------------------------- data loading


def load_frames(path) -> np.ndarray:
    """Magnitude frames from a ``.wav`` file or a frame CSV."""
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return spectrogram(load_pcm(path))
    return read_frames_csv(path)


def load_synthetic_item(path, config: TrainConfig):
    raster = read_raster(path)
    if raster.num_neurons != config.N:
        raise InvalidInputError(f"{path}: raster has {raster.num_neurons} neurons but config N = {config.N}")
    if raster.num_steps != config.P * config.T:
        raise InvalidInputError(
            f"{path}: raster has {raster.num_steps} steps but config P * T = {config.P} * {config.T}"
        )
    return raster.split(config.T)


def load_item(path, kind: str, config: TrainConfig):
    if kind == "synthetic":
        return load_synthetic_item(path, config)
    frames = load_frames(path)
    if frames.shape[1] != config.N:
        raise InvalidInputError(f"{path}: frames have {frames.shape[1]} bins but config N = {config.N}")
    return frames


def load_dataset(directory, config: TrainConfig = None, expect_kind: str = None):
    """``(kind, [(label, item), ...])`` from a data manifest."""
    kind, items, _ = persistence.read_manifest(directory)
    if expect_kind is not None and kind != expect_kind:
        raise InvalidInputError(f"model kind {expect_kind!r} does not match data kind {kind!r}")
    config = config or default_config(kind)
    return kind, [(it["label"], load_item(it["file"], kind, config)) for it in items]


def default_config(kind: str) -> TrainConfig:
    return TrainConfig.synthetic() if kind == "synthetic" else TrainConfig.speech()


def open_models(path):
    if str(path) == DEMO_MODEL:
        text = resources.files("hmmsnn").joinpath("data/demo_synthetic.json").read_text()
        return persistence.loads_models(text)
    return persistence.load_models(path)


def _config_from_args(kind: str, args) -> TrainConfig:
    config = default_config(kind)
    if args.config:
        merged = {**config.as_dict(), **persistence.read_config(args.config)}
        config = TrainConfig.from_dict(merged)
    overrides = {f.name: getattr(args, f"cfg_{f.name}") for f in fields(TrainConfig)}
    return config.with_overrides(**overrides)


def _group_by_label(dataset) -> dict:
    out = {}
    for label, item in dataset:
        out.setdefault(label, []).append(item)
    return out


def _percent(x: float) -> str:
    return f"{100.0 * x:.2f}"


# ---------------------------------------------------------------- subcommands


def cmd_gen_synthetic(args) -> int:
    classes = [check_labels(c) for c in (args.classes.split(",") if args.classes else DEFAULT_CLASSES)]
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = []
    for label in classes:
        for i in range(args.count):
            seed = int(derived_seed(args.seed, label, i).generate_state(1)[0])
            name = f"{label}_{i:04d}.txt"
            rasters = make_sequence(label, seed)
            write_raster(SpikeRaster.concat(rasters), out / name)
            items.append({"label": label, "file": name, "seed": seed})
    path = persistence.write_manifest(out, "synthetic", items, seed=args.seed, classes=classes)
    print(f"wrote {len(items)} sequences and {path}")
    return EXIT_OK


def cmd_gen_words(args) -> int:
    words = args.words.split(",")
    unknown = [w for w in words if w not in WORDS]
    if unknown:
        raise UsageError(f"unknown word(s) {unknown}; known: {', '.join(sorted(WORDS))}")
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = []
    for w in words:
        for i in range(args.count):
            seed = int(derived_seed(args.seed, w, i).generate_state(1)[0])
            signal = synthesize_word(w, seed)
            if args.csv:
                name = f"{w}_{i:04d}.csv"
                write_frames_csv(spectrogram(signal), out / name)
            else:
                name = f"{w}_{i:04d}.wav"
                save_pcm(signal, out / name)
            items.append({"label": w, "file": name, "seed": seed})
    path = persistence.write_manifest(out, "speech", items, seed=args.seed, words=words)
    print(f"wrote {len(items)} utterances and {path}")
    return EXIT_OK


def cmd_segment(args) -> int:
    frames = load_frames(args.input)
    bounds = auto_segment(frames, args.segments, args.threshold, args.max_iter)
    print(bounds)
    return EXIT_OK


def cmd_train(args) -> int:
    kind, items, _ = persistence.read_manifest(args.data_dir)
    config = _config_from_args(kind, args)
    dataset = [(it["label"], load_item(it["file"], kind, config)) for it in items]
    if not dataset:
        raise InvalidInputError(f"{args.data_dir}: manifest lists no training items")
    log.info("training %d classes on %d items (%s)", len(_group_by_label(dataset)), len(dataset), kind)
    models = train_models(_group_by_label(dataset), config, jobs=args.jobs)
    if kind == "speech" and args.calibrate:
        models = calibrate_models(models, dataset, config, seed=config.seed, jobs=args.jobs)
    persistence.save_models(args.output, models, config, kind)
    print(f"wrote {len(models)} class models to {args.output}")
    return EXIT_OK


def cmd_classify(args) -> int:
    models, config, kind = open_models(args.model)
    item = load_item(args.input, kind, config)
    if kind == "synthetic":
        obs = SegmentedObservation.from_subpatterns(item, config.sigma)
    else:
        obs = prepare_speech_item(item, config, args.seed)
    winner, post = classify(obs, models)
    for m, p in zip(models, post):
        print(f"{m.label}\t{p:.6f}")
    print(f"winner\t{winner}")
    return EXIT_OK


def _score_test_set(args):
    models, config, kind = open_models(args.model)
    _, dataset = load_dataset(args.test_dir, config, expect_kind=kind)
    if not dataset:
        raise InvalidInputError(f"{args.test_dir}: test manifest lists no items")
    lp = score_items(models, dataset, config, args.seed, args.jobs)
    if not np.all(np.isfinite(lp)):
        raise ArithmeticError("non-finite log-probability while scoring the test set")
    return models, [lab for lab, _ in dataset], lp


def read_ratios(path) -> list[float]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: not a number: {raw!r}") from None
        if math.isnan(v) or v < 0:
            raise FormatError(f"{path}:{lineno}: ratio must be >= 0")
        out.append(v)
    if not out:
        raise FormatError(f"{path}: no ratios")
    return out


def format_report(report) -> str:
    lines = [f"items: {len(report.item_labels)}", f"accuracy: {_percent(report.accuracy)} %", ""]
    lines.append("per-class accuracy:")
    for lab, acc in report.class_accuracy().items():
        lines.append(f"  {lab}: {_percent(acc)} %")
    width = max(8, *(len(lab) for lab in report.labels)) + 2
    header = "recognized \\ desired".ljust(22) + "".join(lab.rjust(width) for lab in report.labels)
    lines += ["", "mean posteriors:", header]
    for r, lab in enumerate(report.labels):
        row = "".join(f"{v:{width}.3f}" for v in report.posterior_matrix[r])
        lines.append(f"{lab:22s}{row}")
    lines += ["", "confusion (counts):", header]
    for r, lab in enumerate(report.labels):
        row = "".join(f"{v:{width}d}" for v in report.confusion()[r])
        lines.append(f"{lab:22s}{row}")
    return "\n".join(lines) + "\n"


def posterior_csv(report) -> str:
    rows = ["recognized\\desired," + ",".join(report.labels)]
    for r, lab in enumerate(report.labels):
        rows.append(lab + "," + ",".join(repr(float(v)) for v in report.posterior_matrix[r]))
    return "\n".join(rows) + "\n"


def roc_csv(points) -> str:
    # whole-sequence likelihood ratios span hundreds of nats, so the
    # plain ratio under- or overflows; the log ratio is kept alongside
    rows = ["ratio,log_ratio,FP %,TP %,Accuracy %"]
    for pt in points:
        rows.append(
            f"{pt.ratio!r},{pt.log_ratio!r},{_percent(pt.fp)},{_percent(pt.tp)},{_percent(pt.accuracy)}"
        )
    return "\n".join(rows) + "\n"


def roc_dat(points) -> str:
    rows = ["# FP TP accuracy log_ratio"]
    rows += [f"{pt.fp:.6f} {pt.tp:.6f} {pt.accuracy:.6f} {pt.log_ratio!r}" for pt in points]
    return "\n".join(rows) + "\n"


def _roc_points(models, item_labels, lp, ratios, positive):
    if len(models) != 2:
        raise InvalidInputError(f"ROC needs a binary model file, this one has {len(models)} classes")
    labels = [m.label for m in models]
    if positive is not None and positive != labels[1]:
        if positive != labels[0]:
            raise UsageError(f"--positive {positive!r} is not one of {labels}")
        lp = lp[:, ::-1]
        labels = labels[::-1]
    return sweep_scores(lp, item_labels, labels[1], ratios)


def cmd_eval(args) -> int:
    models, item_labels, lp = _score_test_set(args)
    report = report_from_scores([m.label for m in models], item_labels, lp)
    text = format_report(report)
    sys.stdout.write(text)
    if args.output:
        prefix = Path(args.output)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.txt").write_text(text)
        Path(f"{prefix}_posteriors.csv").write_text(posterior_csv(report))
    if args.roc:
        points = _roc_points(models, item_labels, lp, read_ratios(args.roc), None)
        if args.output:
            Path(f"{prefix}_roc.csv").write_text(roc_csv(points))
            Path(f"{prefix}_roc.dat").write_text(roc_dat(points))
        else:
            sys.stdout.write("\n" + roc_csv(points))
    return EXIT_OK


def cmd_roc(args) -> int:
    models, item_labels, lp = _score_test_set(args)
    ratios = read_ratios(args.ratios) if args.ratios else None
    points = _roc_points(models, item_labels, lp, ratios, args.positive)
    text = roc_dat(points) if args.gnuplot else roc_csv(points)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    models, config, kind = open_models(args.model)
    print(f"kind: {kind}")
    print("config: " + ", ".join(f"{k}={v}" for k, v in config.as_dict().items()))
    for m in models:
        if args.label and m.label != args.label:
            continue
        print(f"\nclass {m.label}: {m.num_states} states, emission={m.emission}, log_prior={m.log_prior:.6g}")
        for p, net in enumerate(m.states):
            mix = " ".join(f"{v:.3f}" for v in mixing_coefficients(net))
            wins = net.fire_counts - 1
            avg = winner_weighted_weights(net)
            print(f"  state {p}: wins={wins.sum()} mixing=[{mix}]")
            print(f"    win-weighted weight mean={avg.mean():.4f} min={avg.min():.4f} max={avg.max():.4f}")
            if args.weights:
                print("    " + " ".join(f"{v:.3f}" for v in avg))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_config_flags(parser):
    group = parser.add_argument_group("config overrides (take precedence over --config)")
    for f in fields(TrainConfig):
        flag = f"--{f.name.replace('_', '-')}"
        if f.name == "emission":
            group.add_argument(flag, dest="cfg_emission", choices=EMISSIONS, default=None)
            continue
        caster = float if f.type == "float" else int
        group.add_argument(flag, dest=f"cfg_{f.name}", type=caster, default=None, metavar=f.type.upper())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser = argparse.ArgumentParser(
        prog="hmmsnn", description="HMM with spiking WTA emission networks.", parents=[common]
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("gen-synthetic", help="generate labelled synthetic spike sequences")
    p.add_argument("out_dir")
    p.add_argument("--classes", help="comma-separated label strings (default ABCD,DCBA,ABDC,BACD)")
    p.add_argument("--count", type=int, default=50, help="sequences per class")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("gen-words", help="synthesize a labelled spoken-word corpus")
    p.add_argument("out_dir")
    p.add_argument("--words", default="zero,one")
    p.add_argument("--count", type=int, default=80, help="utterances per word")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", action="store_true", help="write frame CSVs instead of WAV files")
    p.set_defaults(func=cmd_gen_words)

    p = sub.add_parser("segment", help="auto-segment a WAV file or frame CSV")
    p.add_argument("input")
    p.add_argument("--segments", "-P", type=int, default=10)
    p.add_argument("--threshold", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("train", help="train one HMM per class from a data manifest")
    p.add_argument("data_dir")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-calibrate", dest="calibrate", action="store_false",
                   help="speech only: skip fitting class log-priors on the training items")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify one sequence")
    p.add_argument("model", help=f"model file, or '{DEMO_MODEL}' for the bundled synthetic model")
    p.add_argument("input", help="raster file (synthetic) or WAV / frame CSV (speech)")
    p.add_argument("--seed", type=int, default=0, help="spike-encoding seed for speech input")
    p.set_defaults(func=cmd_classify)

    for name, func, helptext in (
        ("eval", cmd_eval, "score a labelled test set; write the report"),
        ("roc", cmd_roc, "binary ROC sweep over prior ratios"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("model")
        p.add_argument("test_dir")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=func)
        if name == "eval":
            p.add_argument("-o", "--output", help="report prefix: writes PREFIX.txt, PREFIX_posteriors.csv, ...")
            p.add_argument("--roc", metavar="RATIOS", help="file of prior ratios, one per line")
        else:
            p.add_argument("--ratios", help="file of prior ratios (default: every ROC corner)")
            p.add_argument("--positive", help="label of the positive class (default: the second model)")
            p.add_argument("--gnuplot", action="store_true", help="whitespace columns instead of CSV")
            p.add_argument("-o", "--output")

    p = sub.add_parser("inspect", help="summarize a model file")
    p.add_argument("model")
    p.add_argument("--label", help="only this class")
    p.add_argument("--weights", action="store_true", help="print win-weighted mean weights")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hmmsnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"hmmsnn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HmmSnnError, ValueError, OSError) as exc:
        print(f"hmmsnn: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
