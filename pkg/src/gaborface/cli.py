"""Command line interface.

Subcommands cover the full workflow: gen-toyset makes a synthetic
labeled dataset, detect and landmarks run the locator chain on one
image, features builds a feature table for a dataset, train fits the
per-person network ensemble, eval runs the split comparison experiment,
and annotate draws results back onto the source image.

Exit codes: 0 on success, 1 for usage or input problems, 2 when no face
or a required facial feature could be found.  Outputs are deterministic:
the same inputs and options produce byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, imgio, toyface
from .config import RunConfig, default_config, load_config, save_config
from .errors import (FeatureNotFoundError, GaborFaceError,
                     InvalidInputError, LandmarkInconsistencyError,
                     NoFaceFoundError)
from .face_locate import (crop_normalize, external_edge, face_box,
                          largest_skin_component)
from .features import (GEOMETRIC_NAMES, ORIENTATION_STEPS, build_bank,
                       kernel_image)
from .fiducial import ROLES, landmarks
from .imaging import mean_filter, rgb_to_ycbcr
from .pipeline import (experiment_feature_sets, extract_features,
                       extraction_bank, feature_matrix, scan_dataset)
from .recognizer import run_experiment, save_model, train
from .skin import skin_mask

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_FOUND = 2

SPLIT_FRACTIONS = {"60-40": 0.6, "50-50": 0.5, "30-70": 0.3}

BOX_COLOR = np.array([255.0, 64.0, 64.0])
POINT_COLOR = np.array([0.0, 255.0, 64.0])


class _Parser(argparse.ArgumentParser):
    """argparse reserves exit status 2 for its own errors; this tool
    uses 2 for not-found outcomes, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gaborface",
                     description="Skin-color face finder with Gabor and "
                                 "distance features and a neural recognizer.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(p, out_required=True):
        p.add_argument("--config", metavar="JSON",
                       help="configuration file; defaults apply when omitted")
        p.add_argument("--out", required=out_required, metavar="DIR",
                       help="output directory (created if missing)")

    p = sub.add_parser("gen-toyset", help="write a synthetic labeled dataset")
    p.add_argument("out_dir", metavar="DIR")
    p.add_argument("--persons", type=int, default=5)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_gen_toyset)

    p = sub.add_parser("detect", help="find the face in one image")
    p.add_argument("image", metavar="IMAGE")
    common(p)
    p.set_defaults(handler=_cmd_detect)

    p = sub.add_parser("landmarks", help="locate the ten facial points")
    p.add_argument("image", metavar="IMAGE")
    common(p)
    p.set_defaults(handler=_cmd_landmarks)

    p = sub.add_parser("annotate", help="draw box and points on the source image")
    p.add_argument("image", metavar="IMAGE")
    common(p)
    p.set_defaults(handler=_cmd_annotate)

    p = sub.add_parser("features", help="build a feature table for a dataset")
    p.add_argument("dataset", metavar="DIR")
    common(p)
    p.add_argument("--features", choices=("geom", "gabor", "fused"),
                   help="feature kind (default from configuration)")
    p.add_argument("--orientations", type=int, choices=sorted(ORIENTATION_STEPS),
                   help="filter bank orientations (default from configuration)")
    p.add_argument("--export-kernels", action="store_true",
                   help="also write filter kernel images")
    p.add_argument("--augment", type=int, default=0, metavar="N",
                   help="extra jittered copies per image (default 0)")
    p.set_defaults(handler=_cmd_features)

    p = sub.add_parser("train", help="train the recognizer on a dataset or feature table")
    p.add_argument("source", metavar="DIR_OR_CSV")
    common(p)
    p.add_argument("--features", choices=("geom", "gabor", "fused"))
    p.add_argument("--orientations", type=int, choices=sorted(ORIENTATION_STEPS))
    p.add_argument("--seed", type=int, help="training seed override")
    p.add_argument("--augment", type=int, default=0, metavar="N",
                   help="extra jittered copies per image (default 0)")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", help="run the split comparison experiment")
    p.add_argument("dataset", metavar="DIR")
    common(p)
    p.add_argument("--split", choices=sorted(SPLIT_FRACTIONS),
                   help="restrict to one train-test split")
    p.add_argument("--combinations", type=int,
                   help="random splits per cell (default from configuration)")
    p.add_argument("--seed", type=int, help="split and training seed override")
    p.add_argument("--augment", type=int, default=0, metavar="N",
                   help="extra jittered copies per image (default 0)")
    p.set_defaults(handler=_cmd_eval)

    return parser


def _load_effective_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else default_config()
    changes = {}
    if getattr(args, "features", None):
        changes["feature_kind"] = args.features
    if getattr(args, "orientations", None):
        changes["gabor"] = dataclasses.replace(cfg.gabor,
                                               orientations=args.orientations)
    if getattr(args, "seed", None) is not None:
        changes["train"] = dataclasses.replace(cfg.train, seed=args.seed)
        changes["split"] = dataclasses.replace(cfg.split, base_seed=args.seed)
    if getattr(args, "combinations", None):
        split = changes.get("split", cfg.split)
        changes["split"] = dataclasses.replace(split,
                                               combinations=args.combinations)
    if getattr(args, "split", None):
        split = changes.get("split", cfg.split)
        changes["split"] = dataclasses.replace(
            split, fractions=(SPLIT_FRACTIONS[args.split],))
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_rgb(path) -> np.ndarray:
    img = imgio.read_image(path)
    if img.ndim != 3:
        img = np.repeat(img[:, :, None], 3, axis=2)
    return img


def _detect_stages(img_rgb, cfg: RunConfig):
    params = cfg.detect
    smoothed = np.stack([mean_filter(img_rgb[:, :, c], params.mean_filter_size)
                         for c in range(3)], axis=2)
    ycc = rgb_to_ycbcr(smoothed)
    mask = skin_mask(ycc, cfg.skin)
    comp = largest_skin_component(mask)
    edge = external_edge(comp, mask.shape, params)
    box = face_box(edge)
    chip = crop_normalize(img_rgb, box, params.chip_size)
    return mask, edge, box, chip


def _draw_box(img, box, color):
    left, top, right, bottom = box.as_tuple()
    img[top, left:right + 1] = color
    img[bottom, left:right + 1] = color
    img[top:bottom + 1, left] = color
    img[top:bottom + 1, right] = color


def _draw_cross(img, x, y, color, arm=3):
    xi = int(round(x))
    yi = int(round(y))
    h, w = img.shape[:2]
    for d in range(-arm, arm + 1):
        if 0 <= yi + d < h and 0 <= xi < w:
            img[yi + d, xi] = color
        if 0 <= yi < h and 0 <= xi + d < w:
            img[yi, xi + d] = color


def _write_skips(out: Path, skips) -> None:
    lines = [f"{path.as_posix()}\t{reason}" for path, reason in skips]
    (out / "skipped.txt").write_text("".join(line + "\n" for line in lines))
    if skips:
        print(f"skipped {len(skips)} image(s), see skipped.txt", file=sys.stderr)


def _jet_feature_names(bank, magnitude: bool) -> list[str]:
    names = []
    for role in ROLES:
        for ch in bank.channels:
            step = int(round(ch.theta / (np.pi / 8.0)))
            wi = bank.wavelengths.index(ch.wavelength)
            base = f"{role}_o{step}_l{wi}"
            if magnitude:
                names.append(base)
            else:
                names.append(base + "_e")
                names.append(base + "_o")
    return names


def _feature_names(kind: str, num_orientations: int, cfg: RunConfig) -> list[str]:
    bank = build_bank(num_orientations, lambda_scale=cfg.gabor.lambda_scale)
    jet_names = _jet_feature_names(bank, cfg.gabor.magnitude)
    if kind == "geom":
        return list(GEOMETRIC_NAMES)
    if kind == "gabor":
        return jet_names
    return list(GEOMETRIC_NAMES) + jet_names


def _cmd_gen_toyset(args) -> int:
    written = toyface.generate_toyset(args.out_dir, persons=args.persons,
                                      samples=args.samples, seed=args.seed)
    root = Path(args.out_dir)
    lines = [f"{label} {path.relative_to(root).as_posix()}"
             for label, path in written]
    (root / "manifest.txt").write_text("".join(line + "\n" for line in lines))
    print(f"wrote {len(written)} images for "
          f"{args.persons} person(s) under {root}")
    return EXIT_OK


def _cmd_detect(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args)
    img = _read_rgb(args.image)
    mask, edge, box, chip = _detect_stages(img, cfg)
    imgio.write_mask(out / "skin_mask.png", mask)
    imgio.write_mask(out / "edge.png", edge)
    imgio.write_image(out / "chip.png", chip)
    left, top, right, bottom = box.as_tuple()
    (out / "box.txt").write_text(f"{left} {top} {right} {bottom}\n")
    save_config(cfg, out / "effective_config.json")
    print(f"face box: {left} {top} {right} {bottom}")
    return EXIT_OK


def _cmd_landmarks(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args)
    img = _read_rgb(args.image)
    _, _, box, chip = _detect_stages(img, cfg)
    points = landmarks(rgb_to_ycbcr(chip), cfg.fiducial)
    lines = [f"{p.role} {p.x!r} {p.y!r}" for p in points]
    (out / "landmarks.txt").write_text("".join(line + "\n" for line in lines))
    imgio.write_image(out / "chip.png", chip)
    zoom = 4
    big = np.repeat(np.repeat(chip, zoom, axis=0), zoom, axis=1)
    for p in points:
        _draw_cross(big, p.x * zoom + (zoom - 1) / 2.0,
                    p.y * zoom + (zoom - 1) / 2.0, POINT_COLOR)
    imgio.write_image(out / "annotated.png", big)
    save_config(cfg, out / "effective_config.json")
    for line in lines:
        print(line)
    return EXIT_OK


def _cmd_annotate(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args)
    img = _read_rgb(args.image)
    _, _, box, chip = _detect_stages(img, cfg)
    points = landmarks(rgb_to_ycbcr(chip), cfg.fiducial)
    canvas = img.copy()
    _draw_box(canvas, box, BOX_COLOR)
    size = cfg.detect.chip_size
    sx = (box.right - box.left) / (size - 1)
    sy = (box.bottom - box.top) / (size - 1)
    for p in points:
        _draw_cross(canvas, box.left + p.x * sx, box.top + p.y * sy,
                    POINT_COLOR, arm=2)
    imgio.write_image(out / "annotated.png", canvas)
    save_config(cfg, out / "effective_config.json")
    print(f"annotated image written to {out / 'annotated.png'}")
    return EXIT_OK


def _cmd_features(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args)
    entries = scan_dataset(args.dataset)
    bank = extraction_bank(cfg)
    records, skips = extract_features(entries, cfg, bank, augment=args.augment,
                                      augment_seed=cfg.train.seed)
    _write_skips(out, skips)
    if not records:
        print("error: no usable faces in dataset", file=sys.stderr)
        return EXIT_NOT_FOUND
    kind = cfg.feature_kind
    n_orient = cfg.gabor.orientations
    matrix, labels = feature_matrix(records, kind, n_orient, bank,
                                    magnitude=cfg.gabor.magnitude)
    names = _feature_names(kind, n_orient, cfg)
    lines = ["label,path," + ",".join(names)]
    for record, row in zip(records, matrix):
        values = ",".join(repr(float(v)) for v in row)
        lines.append(f"{record.label},{record.path.as_posix()},{values}")
    (out / "features.csv").write_text("".join(line + "\n" for line in lines))
    if args.export_kernels:
        kdir = out / "kernels"
        kdir.mkdir(exist_ok=True)
        small = build_bank(n_orient, lambda_scale=cfg.gabor.lambda_scale)
        for ci, ch in enumerate(small.channels):
            step = int(round(ch.theta / (np.pi / 8.0)))
            wi = small.wavelengths.index(ch.wavelength)
            imgio.write_image(kdir / f"k{ci:02d}_o{step}_l{wi}_even.png",
                              kernel_image(ch, odd=False))
            imgio.write_image(kdir / f"k{ci:02d}_o{step}_l{wi}_odd.png",
                              kernel_image(ch, odd=True))
    save_config(cfg, out / "effective_config.json")
    print(f"extracted {len(records)} of {len(entries)} images "
          f"({kind}, {matrix.shape[1]} values each)")
    return EXIT_OK


def _load_feature_csv(path):
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise InvalidInputError(f"empty feature table: {path}")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "label" or header[1] != "path":
        raise InvalidInputError("feature table must start with label,path columns")
    names = header[2:]
    labels = []
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise InvalidInputError(f"ragged row in feature table: {ln[:60]}...")
        labels.append(parts[0])
        rows.append([float(v) for v in parts[2:]])
    geom_count = sum(1 for n in names if n.startswith("d_"))
    if geom_count == len(names):
        kind = "geom"
    elif geom_count == 0:
        kind = "gabor"
    else:
        kind = "fused"
    steps = {n.split("_o")[1].split("_")[0] for n in names if "_o" in n}
    by_count = {len(v): k for k, v in ORIENTATION_STEPS.items()}
    orientations = by_count.get(len(steps)) if steps else None
    return np.array(rows), labels, kind, orientations


def _cmd_train(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args)
    source = Path(args.source)
    if source.is_dir():
        entries = scan_dataset(source)
        bank = extraction_bank(cfg)
        records, skips = extract_features(entries, cfg, bank, augment=args.augment,
                                          augment_seed=cfg.train.seed)
        _write_skips(out, skips)
        if not records:
            print("error: no usable faces in dataset", file=sys.stderr)
            return EXIT_NOT_FOUND
        kind = cfg.feature_kind
        orientations = cfg.gabor.orientations
        matrix, labels = feature_matrix(records, kind, orientations, bank,
                                        magnitude=cfg.gabor.magnitude)
    else:
        matrix, labels, kind, orientations = _load_feature_csv(source)
    ensemble = train(matrix, labels, cfg.train, feature_kind=kind,
                     orientations=orientations)
    save_model(ensemble, out / "model.txt")
    history = ensemble.loss_history
    means = [float(np.mean(row)) for row in history] if history is not None else []
    log_lines = ["epoch,loss"] + [f"{i},{m!r}" for i, m in enumerate(means)]
    (out / "train_log.csv").write_text("".join(line + "\n" for line in log_lines))
    save_config(cfg, out / "effective_config.json")
    final = means[-1] if means else float("nan")
    print(f"trained {ensemble.num_persons} person(s) on {matrix.shape[0]} samples "
          f"({kind}); final loss {final:.6f}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    cfg = _load_effective_config(args)
    out = _out_dir(args)
    entries = scan_dataset(args.dataset)
    bank = extraction_bank(cfg)
    records, skips = extract_features(entries, cfg, bank, augment=args.augment,
                                      augment_seed=cfg.train.seed)
    _write_skips(out, skips)
    if not records:
        print("error: no usable faces in dataset", file=sys.stderr)
        return EXIT_NOT_FOUND
    names, matrices, labels = experiment_feature_sets(
        records, bank, magnitude=cfg.gabor.magnitude)
    result = run_experiment(dict(zip(names, matrices)), labels,
                            split=cfg.split, cfg=cfg.train)
    csv_text = result.to_csv_text()
    (out / "results.csv").write_text(csv_text)
    failure_lines = [f"{name}\t{_percent_label(frac)}\t{combo}\t{reason}"
                     for name, frac, combo, reason in result.failures]
    (out / "failures.txt").write_text(
        "".join(line + "\n" for line in failure_lines))
    save_config(cfg, out / "effective_config.json")
    print(csv_text, end="")
    if failure_lines:
        print(f"{len(failure_lines)} cell failure(s), see failures.txt",
              file=sys.stderr)
    return EXIT_OK


def _percent_label(fraction: float) -> str:
    train_pct = int(round(fraction * 100))
    return f"{train_pct}-{100 - train_pct}"


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (NoFaceFoundError, FeatureNotFoundError,
            LandmarkInconsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except GaborFaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
