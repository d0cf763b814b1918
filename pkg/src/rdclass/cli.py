"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from rdclass import LABEL_NAMES
from rdclass.config import build_many, load_config
from rdclass.errors import ConfigError, DataError, RdclassError
from rdclass.harness import (
    BenchmarkConfig,
    DatasetConfig,
    FrameTable,
    buffered_dataset,
    build_dataset,
    evaluate_model,
    fit_classical,
    fit_ensemble,
    holdout_split,
    cnn_config,
    load_frames,
    predict_one,
    profile_dataset,
    read_manifest,
    run_benchmark,
    write_feature_csv,
)
from rdclass.models.io import DEFAULT_INPUT, REGISTRY, load_model, save_model
from rdclass.radar_design import RadarConfig, derive_params
from rdclass.rdmap import compute_rd_map, write_pgm
from rdclass.simulator import read_cube

log = logging.getLogger("rdclass")


def _settings(args) -> tuple[RadarConfig, DatasetConfig, BenchmarkConfig]:
    values = load_config(args.config) if args.config else {}
    return build_many(values, RadarConfig, DatasetConfig, BenchmarkConfig)


def _out(args, default: str) -> Path:
    return Path(args.out or default)


def _manifest_subset(args, bench: BenchmarkConfig):
    manifest = read_manifest(args.manifest)
    if getattr(args, "subset", "all") == "all":
        return manifest
    plan = holdout_split(manifest, bench.test_fraction, bench.val_fraction, bench.split_seed)
    ids = {"train": plan.train + plan.validation, "test": plan.test, "validation": plan.validation}[args.subset]
    return manifest.subset(ids)


def cmd_design(args) -> int:
    radar, _, _ = _settings(args)
    d = derive_params(radar)
    print(f"range_resolution_m = {d.range_resolution:.6g}")
    print(f"samples_per_chirp = {d.samples_per_chirp}")
    print(f"max_velocity_mps = {d.max_velocity:.6g}")
    print(f"chirps_per_frame = {d.chirps_per_frame}")
    print(f"frame_duration_s = {d.frame_duration:.6g}")
    return 0


def cmd_simulate(args) -> int:
    radar, ds, _ = _settings(args)
    out = _out(args, "dataset")

    def progress(i, n):
        log.info("experiment %d/%d", i, n)

    manifest = build_dataset(out, ds, radar, args.seed, progress)
    counts = manifest.class_counts()
    print(f"{len(manifest)} frames ({counts[1]} human, {counts[0]} robot) in "
          f"{len(manifest.experiments())} experiments -> {out / 'manifest.csv'}")
    return 0


def cmd_rdmap(args) -> int:
    cube = read_cube(args.cube)
    out = _out(args, str(Path(args.cube).with_suffix(".pgm")))
    write_pgm(out, compute_rd_map(cube).pixels)
    print(out)
    return 0


def cmd_features(args) -> int:
    _, _, bench = _settings(args)
    manifest = _manifest_subset(args, bench)
    table = load_frames(manifest, profiles=False, images=False)
    data = buffered_dataset(table, sorted(set(table.experiment_ids.tolist())), args.buffer_size)
    out = _out(args, "features.csv")
    write_feature_csv(out, data, "f")
    print(f"{len(data)} rows x {data.n_features} features -> {out}")
    return 0


def cmd_restructure(args) -> int:
    _, _, bench = _settings(args)
    manifest = _manifest_subset(args, bench)
    table = load_frames(manifest, features=False, images=False)
    data = profile_dataset(table, sorted(set(table.experiment_ids.tolist())))
    out = _out(args, "profiles.csv")
    write_feature_csv(out, data, "p")
    print(f"{len(data)} profile vectors -> {out}")
    return 0


def cmd_train(args) -> int:
    from rdclass.convnet import ConvNetClassifier, train as train_convnet

    _, _, bench = _settings(args)
    manifest = read_manifest(args.manifest)
    plan = holdout_split(manifest, bench.test_fraction, bench.val_fraction, bench.split_seed)
    kind = args.model
    input_type = DEFAULT_INPUT[kind]
    table = load_frames(manifest, features=input_type == "features", profiles=input_type == "profile",
                        images=input_type == "image")
    fit_ids = plan.train + plan.validation
    if input_type == "features":
        data = buffered_dataset(table, fit_ids, args.buffer_size)
        model = fit_classical(kind, data, bench, args.seed)
        acc = model.accuracy(data)
    elif input_type == "profile":
        data = profile_dataset(table, fit_ids)
        model = fit_ensemble(kind, data, bench, args.seed)
        acc = model.accuracy(data)
    else:
        tr, va = table.rows(plan.train), table.rows(plan.validation)
        params, history = train_convnet(table.images[tr], table.labels[tr], table.images[va], table.labels[va],
                                        cnn_config(bench), args.seed)
        model = ConvNetClassifier(params, history)
        acc = float(np.mean(model.predict(table.images[tr]) == table.labels[tr]))
    out = _out(args, f"{kind}.json")
    save_model(out, model, input_type, args.buffer_size if input_type == "features" else 1)
    print(f"{kind}: training accuracy {acc:.4f} -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    _, _, bench = _settings(args)
    model, spec = load_model(args.model_file)
    manifest = _manifest_subset(args, bench)
    cm = evaluate_model(model, spec, manifest)
    print(cm.format())
    if args.out:
        Path(args.out).write_text(
            "tp,fp,fn,tn,accuracy\n%d,%d,%d,%d,%r\n" % (cm.tp, cm.fp, cm.fn, cm.tn, cm.accuracy))
    return 0


def cmd_predict(args) -> int:
    model, spec = load_model(args.model_file)
    for path in args.paths:
        cls, score, latency = predict_one(model, spec, path)
        print(f"{path}: {LABEL_NAMES[cls]} score={score:.4f} latency_ms={latency * 1e3:.2f}")
    return 0


def cmd_benchmark(args) -> int:
    _, _, bench = _settings(args)
    if args.seeds:
        bench = BenchmarkConfig(**{**bench.__dict__, "seeds": args.seeds})
    if args.suites:
        bench = BenchmarkConfig(**{**bench.__dict__, "suites": args.suites})
    manifest = read_manifest(args.manifest)
    result = run_benchmark(manifest, _out(args, "benchmark"), bench, echo=print)
    print((result.out_dir / "summary.txt").read_text(), end="")
    if result.failures:
        return 4 if any("Training" in m for m in result.failures.values()) else 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rdclass", description="Radar micro-Doppler human/robot classification workbench",
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("design", parents=[common], help="print derived radar parameters").set_defaults(func=cmd_design)
    sub.add_parser("simulate", parents=[common], help="build a synthetic dataset").set_defaults(func=cmd_simulate)

    s = sub.add_parser("rdmap", parents=[common], help="chirp cube file -> PGM range-Doppler map")
    s.add_argument("cube")
    s.set_defaults(func=cmd_rdmap)

    for name, func, text in (("features", cmd_features, "handcrafted feature CSV"),
                             ("restructure", cmd_restructure, "restructured profile CSV")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--manifest", required=True)
        s.add_argument("--subset", choices=("all", "train", "validation", "test"), default="all")
        if name == "features":
            s.add_argument("--buffer-size", type=int, default=1)
        s.set_defaults(func=func)

    s = sub.add_parser("train", parents=[common], help="train one model on the training split")
    s.add_argument("--manifest", required=True)
    s.add_argument("--model", required=True, choices=sorted(REGISTRY))
    s.add_argument("--buffer-size", type=int, default=1)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="confusion matrix of a model file")
    s.add_argument("--model-file", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--subset", choices=("all", "train", "validation", "test"), default="test")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("predict", parents=[common], help="classify PGM maps or chirp cubes")
    s.add_argument("--model-file", required=True)
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("benchmark", parents=[common], help="run the experiment suites")
    s.add_argument("--manifest", required=True)
    s.add_argument("--seeds", help="comma-separated training seeds (default from config: 0,1,2)")
    s.add_argument("--suites", help="subset of classical,ensemble,convnet,latency")
    s.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors are configuration errors
        return 0 if exc.code == 0 else ConfigError.exit_code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RdclassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
