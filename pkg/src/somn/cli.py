"""Command-line surface for the staging pipeline.

Subcommands: synth, featurize, train, search, score, eval, report, serve.
Exit codes: 0 success, 1 usage error, 2 data error. Every subcommand is
deterministic given its flags and seed, and the seed is echoed to output.
The default data directory comes from the SOMN_DATA_DIR environment
variable when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SomnError
from .extract import default_taper_bank, extract_representations
from .features import write_features, write_features_csv
from .hypnogram import Hypnogram, read_sidecar, write_confidence, write_sidecar
from .metrics import metrics_report
from .pipeline import canonical, iter_score, load_recording_file, scored_hypnogram
from .recording import epoch_count, write_recording
from .report import sleep_stats
from .spectral import write_spectrogram
from .synth import (PRNG_ALGORITHM, default_signatures, default_transition_model,
                    gen_hypnogram, gen_recording, parse_params)
from .train import (SearchSpace, TrainConfig, fit, assemble_dataset, load_model_file,
                    make_split, random_search, save_model_file)
from .nn import ModelSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# Desk preset keeps models laptop-sized; paper preset mirrors the published
# architecture (5x1000 LSTM, 32/64/128 filters).
PRESETS = {
    "desk": {"hidden_size": 64, "n_layers": 2, "conv_filters": (8, 16, 32),
             "learning_rate": 0.05, "max_epochs": 40, "batch_size": 128},
    "paper": {"hidden_size": 1000, "n_layers": 5, "conv_filters": (32, 64, 128),
              "learning_rate": 0.001, "max_epochs": 100, "batch_size": 64},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _data_dir(value: str | None) -> Path:
    if value:
        return Path(value)
    return Path(os.environ.get("SOMN_DATA_DIR", "."))


def build_parser() -> _Parser:
    p = _Parser(prog="somn", description=__doc__)
    p.add_argument("--version", action="version", version=f"somn {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate synthetic recordings with known hypnograms")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--n-recordings", type=int, default=4)
    sp.add_argument("--epochs", type=int, default=120, help="epochs per recording")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--params", help="key-value parameter file for signatures/transitions")
    sp.add_argument("--edf", action="store_true", help="write EDF instead of the internal container")

    fp = sub.add_parser("featurize", help="extract features and spectrograms from a recording")
    fp.add_argument("--input", required=True, help="recording file (EDF or internal)")
    fp.add_argument("--out", required=True, help="output directory")
    fp.add_argument("--csv", action="store_true", help="also write features as CSV")

    for name, help_text in (("train", "train one model"),
                            ("search", "random hyperparameter search")):
        tp = sub.add_parser(name, help=help_text)
        tp.add_argument("--input", required=True,
                        help="directory of recordings (*.somn/*.edf) with .hypno sidecars")
        tp.add_argument("--out", required=True, help="model store output path")
        tp.add_argument("--family", default="LSTM",
                        choices=["LR", "MLP", "CNN1D", "CNN2D", "LSTM", "RCNN"])
        tp.add_argument("--representation", default="expert",
                        choices=["expert", "spectrogram", "raw"])
        tp.add_argument("--preset", default="desk", choices=sorted(PRESETS))
        tp.add_argument("--seed", type=int, default=0)
        tp.add_argument("--val-fraction", type=float, default=0.2)
        tp.add_argument("--threads", type=int, default=0, help="0 = all cores")
        if name == "train":
            tp.add_argument("--lookback", type=int, default=10)
            tp.add_argument("--dropout-keep", type=float, default=0.9)
            tp.add_argument("--learning-rate", type=float)
            tp.add_argument("--max-epochs", type=int)
        else:
            tp.add_argument("--budget", type=int, default=50)
            tp.add_argument("--manifest", help="trial manifest output path (JSON lines)")

    cp = sub.add_parser("score", help="score a recording with a trained model")
    cp.add_argument("--input", required=True)
    cp.add_argument("--model", required=True)
    cp.add_argument("--out", help="output prefix for .hypno/.conf sidecars")
    cp.add_argument("--quiet", action="store_true", help="suppress per-epoch streaming output")

    ep = sub.add_parser("eval", help="compare predicted and expert sidecar hypnograms")
    ep.add_argument("--expert", required=True)
    ep.add_argument("--pred", required=True)
    ep.add_argument("--out", help="write the metrics report JSON here as well")

    rp = sub.add_parser("report", help="sleep statistics for a sidecar hypnogram")
    rp.add_argument("--input", required=True)
    rp.add_argument("--out")

    vp = sub.add_parser("serve", help="run the HTTP scoring service")
    vp.add_argument("--data-dir", help="case/model storage directory (default $SOMN_DATA_DIR)")
    vp.add_argument("--host", default="127.0.0.1")
    vp.add_argument("--port", type=int, default=8765)
    vp.add_argument("--ui-dir", help="static UI bundle to serve at /")
    vp.add_argument("--threads", type=int, default=2, help="scoring worker threads")
    return p


def _featurize_path(rec_path_str: str):
    """Worker: (id, per-epoch expert features, labels) for one recording."""
    rec_path = Path(rec_path_str)
    sidecar = rec_path.with_suffix(".hypno")
    if not sidecar.exists():
        raise SomnError(f"missing sidecar {sidecar}")
    rec = canonical(load_recording_file(rec_path))
    h = read_sidecar(sidecar)
    if len(h) != epoch_count(rec):
        raise SomnError(f"{sidecar}: {len(h)} lines but recording has "
                        f"{epoch_count(rec)} epochs")
    reps = extract_representations(rec, default_taper_bank(), keep_raw=False)
    return rec_path.stem, reps.features.values, h.stages


def _load_training_dir(path: Path, threads: int = 0):
    """All recordings with sidecars, feature-extracted recording-parallel."""
    recs = sorted(list(path.glob("*.somn")) + list(path.glob("*.edf")))
    if not recs:
        raise SomnError(f"no recordings found in {path}")
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    workers = min(workers, len(recs))
    if workers <= 1:
        return [_featurize_path(str(p)) for p in recs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_featurize_path, [str(p) for p in recs]))


def _split_norm(items, val_fraction, seed):
    from .features import feature_stats

    ids = [i for i, _, _ in items]
    plan = make_split(ids, (1.0 - val_fraction, val_fraction, 0.0), seed)
    by_id = {i: (f, y) for i, f, y in items}
    train = [by_id[i] for i in plan.train_ids]
    val = [by_id[i] for i in plan.val_ids] or train[-1:]
    mean, std = feature_stats(np.concatenate([f for f, _ in train]))
    scale = np.where(std < 1e-12, 1.0, std)
    norm = lambda ds: [((f - mean) / scale, y) for f, y in ds]
    return norm(train), norm(val), (mean, std)


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.params:
        with open(args.params, "r", encoding="utf-8") as f:
            signatures, tm = parse_params(f.read())
    else:
        signatures, tm = default_signatures(), default_transition_model()
    manifest = {"prng": PRNG_ALGORITHM, "seed": args.seed, "epochs": args.epochs,
                "recordings": []}
    for i in range(args.n_recordings):
        seed = args.seed + i
        h = gen_hypnogram(seed, args.epochs, tm)
        rec = gen_recording(h, seed=seed + 50000, sig=signatures, rec_id=f"synth-{seed}")
        name = f"rec{i:03d}"
        if args.edf:
            from .edf import write_edf
            with open(out / f"{name}.edf", "wb") as f:
                f.write(write_edf(rec))
        else:
            write_recording(out / f"{name}.somn", rec)
        write_sidecar(out / f"{name}.hypno", h)
        manifest["recordings"].append({"name": name, "seed": seed, "n_epochs": len(h)})
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    print(f"seed {args.seed}: wrote {args.n_recordings} recordings to {out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    rec = canonical(load_recording_file(args.input))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    reps = extract_representations(rec, default_taper_bank(), keep_raw=False)
    write_features(out / f"{stem}.feat", reps.features)
    write_spectrogram(out / f"{stem}.spec", reps.spectrogram)
    if args.csv:
        write_features_csv(out / f"{stem}.features.csv", reps.features)
    print(f"{stem}: {reps.features.values.shape[0]} epochs -> {out}")
    return EXIT_OK


def _train_config(args, preset) -> TrainConfig:
    return TrainConfig(
        learning_rate=getattr(args, "learning_rate", None) or preset["learning_rate"],
        max_epochs=getattr(args, "max_epochs", None) or preset["max_epochs"],
        batch_size=preset["batch_size"],
        seed=args.seed,
    )


def cmd_train(args) -> int:
    preset = PRESETS[args.preset]
    items = _load_training_dir(Path(args.input), args.threads)
    train, val, stats = _split_norm(items, args.val_fraction, args.seed)
    spec = ModelSpec(
        family=args.family, representation=args.representation,
        lookback=args.lookback, hidden_size=preset["hidden_size"],
        n_layers=preset["n_layers"], dropout_keep=args.dropout_keep,
        conv_filters=preset["conv_filters"], seed=args.seed,
    )
    x_train, y_train = assemble_dataset(spec, train)
    x_val, y_val = assemble_dataset(spec, val)
    tm = fit(spec, (x_train, y_train), (x_val, y_val), _train_config(args, preset),
             norm_stats=stats if args.representation == "expert" else None)
    save_model_file(args.out, tm)
    print(json.dumps({"seed": args.seed, "model": str(args.out),
                      "val": {k: tm.val_metrics[k] for k in ("loss", "accuracy", "kappa")}},
                     sort_keys=True))
    return EXIT_OK


def cmd_search(args) -> int:
    preset = PRESETS[args.preset]
    items = _load_training_dir(Path(args.input), args.threads)
    train, val, stats = _split_norm(items, args.val_fraction, args.seed)
    space = SearchSpace() if args.preset == "paper" else SearchSpace(
        hidden_units=(32, 64, 128), n_layers=(1, 2), lookback=(3, 5, 10),
        dropout_rate=(0.0, 0.1, 0.2), learning_rate=(0.1, 0.05, 0.01))
    results, best = random_search(
        space, args.budget, args.family, args.representation, train, val,
        seed=args.seed, manifest_path=args.manifest,
        train_config=TrainConfig(max_epochs=preset["max_epochs"],
                                 batch_size=preset["batch_size"], seed=args.seed))
    if best is None:
        print("all trials failed", file=sys.stderr)
        return EXIT_DATA
    best.norm_stats = stats if args.representation == "expert" else None
    save_model_file(args.out, best)
    ok = [r for r in results if r.status == "ok"]
    print(json.dumps({"seed": args.seed, "trials": len(results), "ok": len(ok),
                      "best": {"config": ok[0].config, "metrics": ok[0].metrics}},
                     sort_keys=True))
    return EXIT_OK


def cmd_score(args) -> int:
    tm = load_model_file(args.model)
    rec = canonical(load_recording_file(args.input))
    n = epoch_count(rec)
    probs = np.empty((n, 5))
    for t, row in iter_score(tm, rec):
        probs[t] = row
        if not args.quiet:
            stage = ("W", "N1", "N2", "N3", "R")[int(row.argmax())]
            print(f"{t}\t{stage}\t{row.max():.4f}")
    pred = scored_hypnogram(probs)
    if args.out:
        write_sidecar(f"{args.out}.hypno", pred)
        write_confidence(f"{args.out}.conf", pred)
    print(f"# scored {n} epochs with {Path(args.model).name}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    expert = read_sidecar(args.expert)
    pred = read_sidecar(args.pred)
    doc = metrics_report(expert, pred)
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_report(args) -> int:
    h = read_sidecar(args.input)
    doc = sleep_stats(h).as_dict()
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=_data_dir(args.data_dir), ui_dir=args.ui_dir,
                     n_workers=args.threads)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth, "featurize": cmd_featurize, "train": cmd_train,
    "search": cmd_search, "score": cmd_score, "eval": cmd_eval,
    "report": cmd_report, "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except SomnError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
