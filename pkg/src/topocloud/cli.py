"""``topocloud`` command line.

Exit status: 0 success, 1 user error (bad flags, bad input files, bad
config), 2 internal error. ``TACO_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import (BankMismatchError, ShapeMismatchError, TrainingError, evaluate, load_model,
                         precision_recall_points, predict_proba, save_model, train)
from .classifier.serialization import ModelFileError
from .config import ConfigError, RunConfig
from .corrupt import KINDS, SEVERITIES, CorruptionSpec, apply_corruption
from .cubical import build_complex, compute_persistence, oracle_persistence
from .features import (FEATURE_MAGIC, FeatureFileError, FeaturizationError, FiltrationBank,
                       featurize_dataset, read_features, read_manifest, write_features)
from .filtration import FiltrationSpec, apply_filtration
from .pc_io import ParseError, load_cloud, save_xyz
from .voxelizer import (VolumeFormatError, load_binary_image, load_grayscale_volume, save_binary_image,
                        save_grayscale_volume, voxelize)

log = logging.getLogger("topocloud")

USER_ERRORS = (ValueError, OSError, ParseError, VolumeFormatError, FeatureFileError, FeaturizationError,
               ModelFileError, ConfigError, BankMismatchError, ShapeMismatchError, TrainingError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; this CLI reserves 2 for internal errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _load_config(path) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _load_input(path, cfg: RunConfig):
    """A .tbv binary image, or a cloud/mesh file voxelized at the configured size."""
    if Path(path).suffix.lower() == ".tbv":
        return load_binary_image(path)
    return voxelize(load_cloud(path, cfg.mesh_points, cfg.seed), cfg.voxel_size)


def _is_feature_file(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(FEATURE_MAGIC)) == FEATURE_MAGIC.encode()


def _featurize_config(model) -> RunConfig:
    """Rebuild the featurization settings a model's training features were made with."""
    section = dict(model.meta.get("featurize") or {})
    specs = model.meta.get("bank_specs")
    if specs:
        section["bank"] = list(specs)
    return RunConfig.from_dict(section)


# -- subcommands ----------------------------------------------------------------

def cmd_voxelize(args) -> int:
    cfg = _load_config(args.config)
    if args.voxel_size is not None:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "voxel_size": args.voxel_size})
    img = _load_input(args.input, cfg)
    save_binary_image(img, args.output)
    print(f"# config {_canonical(cfg.featurize_section())}")
    print(f"dims {img.dims[0]}x{img.dims[1]}x{img.dims[2]} active {img.n_active}")
    return 0


def cmd_featurize(args) -> int:
    cfg = _load_config(args.config)
    workers = args.workers if args.workers is not None else cfg.workers
    items = read_manifest(args.manifest)
    if not items:
        raise ValueError(f"{args.manifest}: manifest lists no inputs")
    t0 = time.perf_counter()
    ds = featurize_dataset(items, workers=workers, voxel_size=cfg.voxel_size, bank=cfg.filtration_bank,
                           cfg=cfg.sampling, drop_essential=cfg.drop_essential,
                           mesh_points=cfg.mesh_points, seed=cfg.seed, config=cfg.featurize_section())
    write_features(ds, args.out)
    log.info("featurized %d inputs in %.1fs", len(items), time.perf_counter() - t0)
    for name, err in ds.failures:
        print(f"failed: {name}: {err}", file=sys.stderr)
    print(f"# config {_canonical(cfg.featurize_section())}")
    print(f"wrote {len(ds)} rows of dim {ds.dim} (bank {ds.bank_name} {ds.bank_hash}), "
          f"{len(ds.failures)} failed")
    return 0


def cmd_train(args) -> int:
    ds = read_features(args.features)
    cfg = _load_config(args.config)
    meta = {
        "bank_name": ds.bank_name,
        "bank_hash": ds.bank_hash,
        "bank_specs": list(ds.specs),
        "featurize": ds.config,
        "config": cfg.to_dict(),
    }
    model = train(ds.X, ds.labels, cfg.training, channels=cfg.channels, meta=meta)
    save_model(model, args.out)
    hist = model.meta["history"]
    print(f"# config {_canonical(cfg.to_dict())}")
    print(f"trained on {len(ds)} rows, {len(hist)} epochs, final loss {hist[-1]:.6f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    print(f"# model bank {model.bank_hash} featurize {_canonical(model.meta.get('featurize') or {})}")
    if _is_feature_file(args.input):
        ds = read_features(args.input, expected_bank_hash=model.bank_hash)
        if ds.bank_hash != model.bank_hash:
            raise BankMismatchError(f"features come from filtration bank {ds.bank_hash}, "
                                    f"model was trained on bank {model.bank_hash}")
        X, truth = ds.X, ds.labels
    else:
        cfg = _featurize_config(model)
        ds = featurize_dataset([(args.input, "input")], voxel_size=cfg.voxel_size, bank=cfg.filtration_bank,
                               cfg=cfg.sampling, drop_essential=cfg.drop_essential,
                               mesh_points=cfg.mesh_points, seed=cfg.seed)
        X, truth = ds.X, [None]
    probs = predict_proba(model, X)
    print("row,predicted,probability,label")
    for i, (p, t) in enumerate(zip(probs, truth)):
        k = int(np.argmax(p))
        print(f"{i},{model.classes[k]},{p[k]:.6f},{'' if t is None else t}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = read_features(args.features, expected_bank_hash=model.bank_hash)
    report, probs = evaluate(model, ds.X, ds.labels, bank_hash=ds.bank_hash)
    print(f"# model bank {model.bank_hash} training {_canonical(model.meta.get('training') or {})}")
    print(f"# features {_canonical(ds.config)}")
    sys.stdout.write(report.format())
    if args.pr_out:
        with open(args.pr_out, "w") as fh:
            fh.write("threshold,precision,recall\n")
            for thr, prec, rec in precision_recall_points(probs, ds.labels, model.classes):
                fh.write(f"{thr:.17g},{prec:.17g},{rec:.17g}\n")
    return 0


def cmd_corrupt(args) -> int:
    cloud = load_cloud(args.input)
    spec = CorruptionSpec(args.kind, args.severity, args.seed)
    out = apply_corruption(cloud, spec)
    save_xyz(out, args.output)
    print(f"# corruption {_canonical({'kind': spec.kind, 'severity': spec.severity, 'seed': spec.seed})}")
    print(f"{len(cloud.points)} -> {len(out.points)} points")
    return 0


def random_oracle_images(trials: int, max_dim: int, levels: int = 8, seed: int = 0):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        dims = rng.integers(1, max_dim + 1, size=3)
        yield rng.integers(0, levels, size=tuple(dims)).astype(np.float64)


def cmd_oracle_check(args) -> int:
    if args.trials < 1 or args.max_dim < 1 or not 1 <= args.levels:
        raise ValueError("--trials, --max-dim and --levels must be positive")
    t0 = time.perf_counter()
    ok = 0
    for i, img in enumerate(random_oracle_images(args.trials, args.max_dim, args.levels, args.seed)):
        cx = build_complex(img)
        if compute_persistence(cx) == oracle_persistence(cx):
            ok += 1
        else:
            print(f"mismatch on trial {i} (dims {img.shape})", file=sys.stderr)
    print(f"{ok}/{args.trials} matches ({time.perf_counter() - t0:.1f}s)")
    return 0 if ok == args.trials else 2


def cmd_model_info(args) -> int:
    model = load_model(args.model)
    hist = model.meta.get("history") or []
    print(f"classes: {', '.join(model.classes)}")
    print(f"input length: {model.input_len}")
    print(f"channels: {', '.join(map(str, model.channels))}  kernels: {', '.join(map(str, model.kernels))}")
    print(f"parameters: {model.n_parameters()}")
    print(f"bank: {model.meta.get('bank_name')} {model.bank_hash}")
    print(f"training: {_canonical(model.meta.get('training') or {})}")
    if hist:
        print(f"epochs: {len(hist)}  final loss: {hist[-1]:.6f}")
    return 0


def cmd_filtrate(args) -> int:
    cfg = _load_config(args.config)
    spec = FiltrationSpec.parse(args.filtration)
    gray = apply_filtration(_load_input(args.input, cfg), spec)
    save_grayscale_volume(gray.values, args.output)
    print(f"# filtration {spec}")
    print(f"range {gray.values.min():.6g} .. {gray.values.max():.6g}")
    return 0


def cmd_diagram(args) -> int:
    dgm = compute_persistence(build_complex(load_grayscale_volume(args.input)))
    if args.drop_essential:
        dgm = dgm.without_essential()
    sys.stdout.write(dgm.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="topocloud", description="Topological point cloud classification pipeline.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="<command>", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("voxelize", help="voxelize a cloud or mesh into a binary image")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--config")
    s.add_argument("--voxel-size", type=float)
    s.set_defaults(func=cmd_voxelize)

    s = sub.add_parser("featurize", help="featurize a manifest of labeled inputs")
    s.add_argument("--config")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("train", help="train a classifier on a feature file")
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="classify a cloud, mesh, image or feature file")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("eval", help="accuracy report for a labeled feature file")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--pr-out", help="write macro precision/recall points as CSV")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("corrupt", help="apply a seeded corruption to a cloud")
    s.add_argument("--kind", required=True, choices=KINDS)
    s.add_argument("--severity", required=True, choices=SEVERITIES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("oracle-check", help="compare fast persistence with the reference reduction")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--max-dim", type=int, default=5)
    s.add_argument("--levels", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("model-info", help="describe a model file")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_model_info)

    s = sub.add_parser("filtrate", help="debug: write one filtration as a grayscale volume")
    s.add_argument("--filtration", required=True, help="e.g. 'height(0,0,1)', 'radial@c14', 'erosion'")
    s.add_argument("--config")
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_filtrate)

    s = sub.add_parser("diagram", help="debug: persistence diagram of a grayscale volume")
    s.add_argument("input")
    s.add_argument("--drop-essential", action="store_true")
    s.set_defaults(func=cmd_diagram)
    return p


def _setup_logging() -> None:
    name = os.environ.get("TACO_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        print("internal error", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
