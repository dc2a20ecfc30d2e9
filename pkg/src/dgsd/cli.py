"""Command-line entry point.

Subcommands: synth, features, train, eval, gradcheck, inspect, sweep.
Every effective configuration is echoed and written into the run
directory, and all randomness is pinned by explicit seeds, so a run
directory is sufficient to reproduce the run. Environment variables are
ignored on purpose.

Exit codes: 0 success, 1 runtime failure (stderr carries
"error: <category>: <message>"), 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import SynthSpec, read_dataset, verify_dataset, write_synthetic
from .errors import ConfigError, DgsdError
from .features import extract_features, slide_windows, znorm_trial
from .losses import LossWeights
from .metrics import (SubjectResult, accuracy_stats, aggregate_results,
                      paired_t_test, write_subject_csv)
from .model import (DgsdConfig, init_model, load_model, model_from_bytes,
                    parameter_count)
from .train import (TrainConfig, fit, gradient_check, project_w,
                    split_dataset)

GRADCHECK_THRESHOLD = 1e-4


# -- config plumbing ----------------------------------------------------------

def _load_config_file(path, allowed: set[str]) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return doc


def _effective(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults <- config file <- explicit flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config, set(defaults)))
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _parse_ratios(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = [float(v) for v in text.split(",") if v.strip() != ""]
    return tuple(parts)


def _echo_config(label: str, cfg: dict) -> None:
    print(f"[{label}] effective config:")
    for key, value in cfg.items():
        print(f"  {key} = {value}")


TRAIN_DEFAULTS = {
    "window": 1.0,
    "hop": None,
    "subjects": None,          # comma list; None = all
    "znorm": True,
    "learning_rate": 0.004,
    "batch_size": 32,
    "epochs": 200,
    "seed": 1111,
    "alpha": 0.7,
    "beta": 0.3,
    "split": "0.8,0.1,0.1",
    "optimizer": "adam",
    "w_update": "descent",
    "patience": 30,
    "kl_direction": "teacher",
    "hidden": 32,
    "layers": 4,
    "cheb_order": 3,
    "head_dim": 32,
    "reconv_input": False,
}


def _train_configs(cfg: dict, n_nodes: int, n_bands: int,
                   seed_offset: int = 0) -> tuple[TrainConfig, DgsdConfig]:
    patience = cfg["patience"]
    if isinstance(patience, str):
        patience = None if patience.lower() == "none" else int(patience)
    train_cfg = TrainConfig(
        learning_rate=cfg["learning_rate"],
        batch_size=cfg["batch_size"],
        epochs=cfg["epochs"],
        seed=cfg["seed"] + seed_offset,
        weights=LossWeights(cfg["alpha"], cfg["beta"]),
        split=_parse_ratios(cfg["split"]),
        optimizer=cfg["optimizer"],
        w_update=cfg["w_update"],
        early_stop_patience=patience,
        kl_direction=cfg["kl_direction"],
    )
    model_cfg = DgsdConfig(
        n_nodes=n_nodes,
        in_features=n_bands,
        hidden=cfg["hidden"],
        n_layers=cfg["layers"],
        cheb_order=cfg["cheb_order"],
        feature_head_dim=cfg["head_dim"],
        reconv_input=bool(cfg["reconv_input"]),
    )
    return train_cfg, model_cfg


def _subject_features(reader, subject_id: str, window: float, hop, znorm: bool):
    feats = []
    for rec in reader.iter_recordings(subject_id):
        if znorm:
            rec = znorm_trial(rec)
        for w in slide_windows(rec, window, hop):
            feats.append(extract_features(w))
    return feats


def _selected_subjects(reader, cfg) -> list[str]:
    if cfg.get("subjects"):
        wanted = [s.strip() for s in str(cfg["subjects"]).split(",") if s.strip()]
        known = set(reader.subject_ids())
        missing = [s for s in wanted if s not in known]
        if missing:
            raise ConfigError(f"unknown subjects: {', '.join(missing)}")
        return wanted
    return reader.subject_ids()


def _predictions(model, features) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([f.values for f in features]).astype(np.float32)
    y = np.asarray([int(f.label) for f in features])
    from .model import forward
    preds = []
    for start in range(0, len(x), 512):
        dist = forward(model, x[start:start + 512]).distributions[-1].data
        preds.append(np.argmax(dist, axis=1))
    return y, np.concatenate(preds)


def _train_one_subject(features, train_cfg, model_cfg, window, out_dir: Path,
                       subject_id: str):
    report = fit(features, train_cfg, model_cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "model.dgsd").write_bytes(report.checkpoint)
    with open(out_dir / "train_log.jsonl", "w") as fh:
        for rec in report.epochs:
            fh.write(json.dumps({
                "epoch": rec.epoch,
                "loss1": rec.loss.loss1,
                "loss2": rec.loss.loss2,
                "loss3": rec.loss.loss3,
                "total": rec.loss.total,
                "val_accuracy": rec.val_accuracy,
            }) + "\n")

    best_model = model_from_bytes(report.checkpoint)
    test_feats = [features[i] for i in report.test_indices]
    y_true, y_pred = _predictions(best_model, test_feats)
    result = SubjectResult.from_predictions(subject_id, window, y_true, y_pred)
    summary = {
        "subject_id": subject_id,
        "window_seconds": window,
        "n_windows": len(features),
        "n_train": report.n_train,
        "n_val": report.n_val,
        "n_test": report.n_test,
        "epochs_run": len(report.epochs),
        "best_epoch": report.best_epoch,
        "best_val_accuracy": report.best_val_accuracy,
        "test_accuracy": report.test_accuracy,
        "windows_backpropagated": report.windows_backpropagated,
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return report, result


# -- subcommands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    defaults = {"subjects": 4, "trials": 8, "trial_seconds": 60.0,
                "channels": 64, "sample_rate": 128.0, "alpha_asymmetry": 1.0,
                "noise_sigma": 1.0, "seed": 1111}
    cfg = _effective(args, defaults)
    _echo_config("synth", cfg)
    spec = SynthSpec(
        n_subjects=cfg["subjects"], trials_per_subject=cfg["trials"],
        trial_seconds=cfg["trial_seconds"], n_channels=cfg["channels"],
        sample_rate=cfg["sample_rate"], alpha_asymmetry=cfg["alpha_asymmetry"],
        noise_sigma=cfg["noise_sigma"], seed=cfg["seed"])
    manifest = write_synthetic(spec, args.out)
    print(f"wrote {args.out}: {len(manifest.subjects)} subjects, "
          f"{manifest.trial_count()} trials")
    return 0


def cmd_features(args) -> int:
    defaults = {"window": 1.0, "hop": None, "subjects": None, "znorm": True}
    cfg = _effective(args, defaults)
    _echo_config("features", cfg)
    _, reader = read_dataset(args.data)
    xs, ys, subject_col = [], [], []
    for subject in _selected_subjects(reader, cfg):
        feats = _subject_features(reader, subject, cfg["window"], cfg["hop"],
                                  cfg["znorm"])
        xs.extend(f.values.astype(np.float32) for f in feats)
        ys.extend(int(f.label) for f in feats)
        subject_col.extend([subject] * len(feats))
    np.savez(args.out, x=np.stack(xs), y=np.asarray(ys, dtype=np.int64),
             subject=np.asarray(subject_col), window_seconds=cfg["window"])
    print(f"wrote {args.out}: {len(ys)} windows")
    return 0


def cmd_train(args) -> int:
    cfg = _effective(args, TRAIN_DEFAULTS)
    _echo_config("train", cfg)
    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest, reader = read_dataset(args.data)
    with open(run_dir / "effective_config.json", "w") as fh:
        json.dump({"command": "train", "data": str(args.data),
                   "version": __version__, **cfg}, fh, indent=2)

    results = []
    for subject in _selected_subjects(reader, cfg):
        features = _subject_features(reader, subject, cfg["window"],
                                     cfg["hop"], cfg["znorm"])
        train_cfg, model_cfg = _train_configs(
            cfg, manifest.n_channels, features[0].values.shape[1])
        report, result = _train_one_subject(
            features, train_cfg, model_cfg, cfg["window"],
            run_dir / "subjects" / subject, subject)
        results.append(result)
        print(f"{subject}: test accuracy {report.test_accuracy:.4f} "
              f"(best epoch {report.best_epoch}, {len(report.epochs)} epochs run)")

    write_subject_csv(results, run_dir / "results.csv")
    aggregate = aggregate_results(results) if len(results) >= 2 else {
        "n_subjects": len(results)}
    with open(run_dir / "aggregate.json", "w") as fh:
        json.dump(aggregate, fh, indent=2)
    if len(results) >= 2:
        mean, sd = accuracy_stats(results)
        print(f"mean accuracy {mean:.4f} (sd {sd:.4f}) over {len(results)} subjects")
    return 0


def cmd_eval(args) -> int:
    if args.compare:
        return _compare_results(args.compare)
    defaults = {"window": 1.0, "hop": None, "subjects": None, "znorm": True,
                "split": "0.8,0.1,0.1", "seed": 1111, "subset": "test"}
    cfg = _effective(args, defaults)
    _echo_config("eval", cfg)
    run_dir = Path(args.run_dir)
    _, reader = read_dataset(args.data)
    results = []
    for subject in _selected_subjects(reader, cfg):
        ckpt = run_dir / "subjects" / subject / "model.dgsd"
        if not ckpt.exists():
            raise ConfigError(f"no checkpoint for subject {subject} under {run_dir}")
        model = load_model(ckpt)
        features = _subject_features(reader, subject, cfg["window"],
                                     cfg["hop"], cfg["znorm"])
        if cfg["subset"] != "all":
            train_i, val_i, test_i = split_dataset(
                list(range(len(features))), _parse_ratios(cfg["split"]), cfg["seed"])
            chosen = {"train": train_i, "val": val_i, "test": test_i}[cfg["subset"]]
            features = [features[i] for i in chosen]
        y_true, y_pred = _predictions(model, features)
        results.append(SubjectResult.from_predictions(
            subject, cfg["window"], y_true, y_pred))
        print(f"{subject}: accuracy {results[-1].accuracy:.4f} "
              f"on {len(features)} {cfg['subset']} windows")

    out_dir = Path(args.out_dir) if args.out_dir else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    write_subject_csv(results, out_dir / "eval_results.csv")
    if len(results) >= 2:
        with open(out_dir / "eval_aggregate.json", "w") as fh:
            json.dump(aggregate_results(results), fh, indent=2)
    return 0


def _read_accuracy_table(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {row["subject_id"]: float(row["accuracy"]) for row in rows}


def _compare_results(paths) -> int:
    table_a = _read_accuracy_table(paths[0])
    table_b = _read_accuracy_table(paths[1])
    shared = sorted(set(table_a) & set(table_b))
    if len(shared) < 2:
        raise ConfigError("need at least 2 shared subjects to compare")
    a = [table_a[s] for s in shared]
    b = [table_b[s] for s in shared]
    res = paired_t_test(a, b)
    print(f"paired t-test over {len(shared)} subjects: t={res.t:.4f} "
          f"p={res.p:.6f} significant={res.significant}"
          + (" (degenerate)" if res.degenerate else ""))
    return 0


def cmd_gradcheck(args) -> int:
    # Default seeds keep every ReLU pre-activation away from its kink,
    # where central differences straddle two subgradients.
    defaults = {"nodes": 4, "bands": 5, "hidden": 6, "layers": 4,
                "cheb_order": 3, "head_dim": 4, "alpha": 0.7, "beta": 0.3,
                "epsilon": 1e-4, "seed": 2, "batch": 6}
    cfg = _effective(args, defaults)
    _echo_config("gradcheck", cfg)
    model_cfg = DgsdConfig(
        n_nodes=cfg["nodes"], in_features=cfg["bands"], hidden=cfg["hidden"],
        n_layers=cfg["layers"], cheb_order=cfg["cheb_order"],
        feature_head_dim=cfg["head_dim"])
    model = init_model(model_cfg, seed=cfg["seed"], dtype=np.float64)
    project_w(model)
    rng = np.random.default_rng(cfg["seed"] + 14)
    y = np.arange(cfg["batch"]) % 2
    x = rng.standard_normal((cfg["batch"], cfg["nodes"], cfg["bands"]))
    x[:, :, 0] += 2.0 * (2.0 * y - 1.0)[:, None]
    err = gradient_check(model, (x, y),
                         LossWeights(cfg["alpha"], cfg["beta"]),
                         epsilon=cfg["epsilon"])
    print(f"max relative gradient error: {err:.3e} "
          f"(threshold {GRADCHECK_THRESHOLD:.0e})")
    if err >= GRADCHECK_THRESHOLD:
        print(f"error: gradcheck: max relative error {err:.3e} >= "
              f"{GRADCHECK_THRESHOLD:.0e}", file=sys.stderr)
        return 1
    return 0


def cmd_inspect(args) -> int:
    path = Path(args.path)
    if path.suffix == ".dgsd":
        model = load_model(path)
        doc = {"kind": "checkpoint", **model.config.__dict__,
               "trainable_parameters": parameter_count(model.config)}
        violations = []
    else:
        violations = verify_dataset(
            path, expect_channels=args.expect_channels,
            expect_rate=args.expect_rate)
        doc = {"kind": "dataset", "violations": violations}
        if not violations or "magic" not in violations[0]:
            try:
                manifest, _ = read_dataset(path)
                doc.update({
                    "dataset_name": manifest.dataset_name,
                    "sample_rate": manifest.sample_rate,
                    "n_channels": manifest.n_channels,
                    "subjects": {
                        s.subject_id: {
                            "trials": len(s.trials),
                            "minutes": sum(t.n_samples for t in s.trials)
                                       / manifest.sample_rate / 60.0,
                        }
                        for s in manifest.subjects
                    },
                })
            except DgsdError:
                pass
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for key, value in doc.items():
            print(f"{key}: {value}")
    return 1 if violations else 0


def cmd_sweep(args) -> int:
    cfg = _effective(args, TRAIN_DEFAULTS)
    alphas = [float(v) for v in args.alphas.split(",") if v.strip()] if args.alphas else []
    betas = [float(v) for v in args.betas.split(",") if v.strip()] if args.betas else []
    windows = [float(v) for v in args.windows.split(",") if v.strip()] if args.windows else []
    _echo_config("sweep", {**cfg, "alphas": alphas, "betas": betas,
                           "windows": windows})
    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    cells = [(a, b, w) for a in alphas for b in betas for w in windows]

    rows = []
    if cells:
        manifest, reader = read_dataset(args.data)
        subjects = _selected_subjects(reader, cfg)
        for idx, (alpha, beta, window) in enumerate(cells):
            cell_cfg = dict(cfg, alpha=alpha, beta=beta, window=window)
            try:
                accs = []
                for subject in subjects:
                    features = _subject_features(
                        reader, subject, window, cell_cfg["hop"], cell_cfg["znorm"])
                    train_cfg, model_cfg = _train_configs(
                        cell_cfg, manifest.n_channels,
                        features[0].values.shape[1], seed_offset=idx)
                    report = fit(features, train_cfg, model_cfg)
                    accs.append(report.test_accuracy)
                mean = sum(accs) / len(accs)
                sd = (accuracy_stats(accs)[1] if len(accs) >= 2 else 0.0)
                rows.append([alpha, beta, window, "ok", f"{mean:.6f}", f"{sd:.6f}", ""])
                print(f"cell {idx}: alpha={alpha} beta={beta} window={window} "
                      f"mean_accuracy={mean:.4f}")
            except (DgsdError, OSError) as exc:
                rows.append([alpha, beta, window, "error", "", "", str(exc)])
                print(f"cell {idx}: alpha={alpha} beta={beta} window={window} "
                      f"failed: {exc}")

    with open(run_dir / "sweep_results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "beta", "window_seconds", "status",
                         "mean_accuracy", "accuracy_sd", "error"])
        writer.writerows(rows)
    print(f"wrote {run_dir / 'sweep_results.csv'} ({len(rows)} cells)")
    return 0


# -- parser ------------------------------------------------------------------------

def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=float, help="window length in seconds")
    p.add_argument("--hop", type=float, help="hop in seconds (default: window)")
    p.add_argument("--subjects", help="comma-separated subject ids (default: all)")
    p.add_argument("--znorm", action=argparse.BooleanOptionalAction, default=None,
                   help="z-normalize each trial before windowing (default on)")
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, help="cross-entropy weight")
    p.add_argument("--beta", type=float, help="hierarchical-distillation weight")
    p.add_argument("--split", help="train,val,test ratios, e.g. 0.8,0.1,0.1")
    p.add_argument("--optimizer", choices=["adam", "sgd"])
    p.add_argument("--w-update", choices=["descent", "literal_eq12"])
    p.add_argument("--patience", help="early-stop patience in epochs, or 'none'")
    p.add_argument("--kl-direction", choices=["teacher", "student"])
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--cheb-order", type=int)
    p.add_argument("--head-dim", type=int)
    p.add_argument("--reconv-input", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--config", help="JSON config file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgsd",
        description="EEG auditory spatial attention detection: synthetic data, "
                    "DE features, graph-network training and evaluation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic .aadb dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--trial-seconds", type=float)
    p.add_argument("--channels", type=int)
    p.add_argument("--sample-rate", type=float)
    p.add_argument("--alpha-asymmetry", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract DE features to an .npz file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float)
    p.add_argument("--hop", type=float)
    p.add_argument("--subjects")
    p.add_argument("--znorm", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--config")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train per-subject models")
    p.add_argument("--data", required=True)
    p.add_argument("--run-dir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints or compare result tables")
    p.add_argument("--data")
    p.add_argument("--run-dir")
    p.add_argument("--out-dir")
    p.add_argument("--window", type=float)
    p.add_argument("--hop", type=float)
    p.add_argument("--subjects")
    p.add_argument("--znorm", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--split")
    p.add_argument("--seed", type=int)
    p.add_argument("--subset", choices=["train", "val", "test", "all"])
    p.add_argument("--compare", nargs=2, metavar=("A.csv", "B.csv"),
                   help="paired t-test between two results tables")
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--nodes", type=int)
    p.add_argument("--bands", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--cheb-order", type=int)
    p.add_argument("--head-dim", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("inspect", help="validate and summarize a dataset or checkpoint")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    p.add_argument("--expect-channels", type=int)
    p.add_argument("--expect-rate", type=float)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("sweep", help="grid over alpha/beta/window")
    p.add_argument("--data", required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--alphas", help="comma-separated values")
    p.add_argument("--betas", help="comma-separated values")
    p.add_argument("--windows", help="comma-separated values")
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "eval" and not args.compare:
        if not args.data or not args.run_dir:
            print("error: config: eval needs --data and --run-dir "
                  "(or --compare)", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except DgsdError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
