"""Command-line entry point: ``pcgkit <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import SCHEMA, load_config
from .dataio import (AudioSample, SynthConfig, load_manifest, read_wav, synth_corpus,
                     synthesize, write_event_sidecar, write_wav)
from .errors import ConfigError, DataError
from .experiment import KINDS, dumps_report, load_report, report_csv, report_table, run_experiment
from .features import build_feature_matrix, read_feature_csv, write_feature_csv
from .modelio import load_bundle, save_bundle, train_bundle
from .preprocess import preprocess_pipeline
from .reduce import fit_pca, fit_standardizer, load_reduction, save_reduction

log = logging.getLogger("pcgkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _d(key: str) -> str:
    v = SCHEMA[key][0]
    return f"(default: {v})"


def _add_config(p):
    p.add_argument("--config", help="section.key=value file; explicit flags win")


def _add_seed(p):
    p.add_argument("--seed", type=int, help=f"random seed {_d('run.seed')}")


def _add_jobs(p):
    p.add_argument("--jobs", type=int, help=f"worker processes {_d('run.jobs')}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pcgkit", description="Segmentation-free heart-sound classification toolkit.")
    p.add_argument("--version", action="version", version=f"pcgkit {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate synthetic heart sounds")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--out", help="output WAV; event times go to the .json sidecar")
    g.add_argument("--corpus", help="directory for a synthetic patient corpus with manifest.csv")
    s.add_argument("--bpm", type=float, default=72.0, help="heart rate (default: 72)")
    s.add_argument("--duration", type=float, default=10.0, help="seconds (default: 10)")
    s.add_argument("--fs", type=int, default=4000, help="sample rate in Hz (default: 4000)")
    s.add_argument("--murmur", action="store_true", help="add a systolic murmur")
    s.add_argument("--extrasystole", action="store_true", help="insert one extra beat")
    s.add_argument("--noise-rms", type=float,
                   help="white-noise RMS (default: 0 for --out, 0.01 for --corpus)")
    s.add_argument("--patients", default="15,10,5",
                   help="corpus: normal,murmur,extrasys patient counts (default: 15,10,5)")
    s.add_argument("--per-patient", type=int, default=3, help="corpus: recordings per patient (default: 3)")
    s.add_argument("--unlabeled-test", action="store_true", help="corpus: strip labels from test recordings")
    s.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")

    d = sub.add_parser("denoise", help="high-pass, wavelet-denoise and normalize one WAV")
    d.add_argument("--in", dest="inp", required=True, help="input WAV")
    d.add_argument("--out", required=True, help="output WAV")
    d.add_argument("--cutoff", type=float, help=f"high-pass cutoff Hz {_d('fir.cutoff_hz')}")
    d.add_argument("--levels", type=int, help=f"DWT levels {_d('dwt.levels')}")
    d.add_argument("--wavelet", help=f"mother wavelet {_d('dwt.wavelet')}")
    d.add_argument("--threshold", choices=["hard", "soft"], help=f"shrinkage {_d('dwt.thresholding')}")
    d.add_argument("--selection", choices=["heursure", "universal", "sure"],
                   help=f"threshold rule {_d('dwt.selection')}")
    _add_config(d)

    f = sub.add_parser("features", help="extract the feature matrix for a manifest")
    f.add_argument("--manifest", required=True, help="manifest CSV")
    f.add_argument("--out", required=True, help="feature CSV to write")
    f.add_argument("--dump-envelope", metavar="DIR", help="write per-recording envelope/peak CSVs")
    f.add_argument("--no-preprocess", action="store_true", help="audio is already denoised")
    f.add_argument("--window", type=int, help=f"envelope window {_d('envelope.window')}")
    f.add_argument("--height", type=float, help=f"peak height {_d('peak.height')}")
    f.add_argument("--distance", type=int, help=f"peak distance {_d('peak.distance')}")
    _add_jobs(f)
    _add_config(f)

    r = sub.add_parser("reduce", help="fit or apply standardization + PCA")
    mode = r.add_mutually_exclusive_group(required=True)
    mode.add_argument("--fit", action="store_true", help="fit on --features and write the model to --out")
    mode.add_argument("--apply", metavar="MODEL", help="project --features with a fitted model into --out")
    r.add_argument("--features", required=True, help="feature CSV")
    r.add_argument("--out", required=True, help="output path")
    r.add_argument("--components", type=int, help=f"components kept {_d('pca.components')}")
    r.add_argument("--variance-target", type=float,
                   help=f"retain by variance ratio instead {_d('pca.variance_target')}")
    _add_config(r)

    t = sub.add_parser("train", help="train a classifier on a feature CSV")
    t.add_argument("--model", required=True, choices=["svm", "dnn"], help="RBF SVM or 6-layer MLP")
    t.add_argument("--features", required=True, help="feature CSV")
    t.add_argument("--out", required=True, help="model JSON to write")
    t.add_argument("--epochs", type=int, help=f"DNN epochs {_d('epochs.exp2')}")
    _add_seed(t)
    _add_config(t)

    pr = sub.add_parser("predict", help="classify rows of a feature CSV")
    pr.add_argument("--model", required=True, help="model JSON from 'train'")
    pr.add_argument("--features", required=True, help="feature CSV")
    pr.add_argument("--out", help="CSV of id,predicted (default: stdout)")

    e = sub.add_parser("experiment", help="run exp1/exp2/exp3 end to end")
    e.add_argument("--kind", required=True, choices=KINDS,
                   help="exp1 challenge split 3-class, exp2 binary 5-fold, exp3 user-independent 5-fold")
    e.add_argument("--model", required=True, choices=["svm", "dnn"], help="RBF SVM or 6-layer MLP")
    e.add_argument("--manifest", required=True, help="manifest CSV")
    e.add_argument("--features", help="precomputed feature CSV (skips audio processing)")
    e.add_argument("--out", required=True, help="report JSON")
    e.add_argument("--folds", type=int, help=f"folds for exp2/exp3 {_d('cv.folds')}")
    e.add_argument("--epochs", type=int,
                   help=f"override DNN epochs (defaults exp1 {SCHEMA['epochs.exp1'][0]}, "
                        f"exp2 {SCHEMA['epochs.exp2'][0]}, exp3 {SCHEMA['epochs.exp3'][0]})")
    _add_seed(e)
    _add_jobs(e)
    _add_config(e)

    rp = sub.add_parser("report", help="render a report JSON")
    rp.add_argument("--in", dest="inp", required=True, help="report JSON")
    rp.add_argument("--format", choices=["csv", "table", "json"], default="table",
                    help="output format (default: table)")
    return p


def _cfg(args, overrides: dict):
    return load_config(getattr(args, "config", None)).with_overrides(overrides)


def cmd_synth(args):
    if args.corpus:
        try:
            n_norm, n_mur, n_ext = (int(v) for v in args.patients.split(","))
        except ValueError:
            raise UsageError("--patients expects three comma-separated integers") from None
        noise = 0.01 if args.noise_rms is None else args.noise_rms
        m = synth_corpus(args.corpus, n_norm, n_mur, n_ext, args.per_patient, args.duration,
                         args.fs, noise, args.seed, args.unlabeled_test)
        print(f"wrote {len(m)} recordings and {Path(args.corpus) / 'manifest.csv'}")
        return
    cfg = SynthConfig(args.bpm, args.duration, args.fs, args.murmur, args.extrasystole,
                      args.noise_rms or 0.0, args.seed)
    out = synthesize(cfg)
    write_wav(out.sample, args.out)
    sidecar = Path(args.out).with_suffix(".json")
    write_event_sidecar(out.events, sidecar)
    print(f"wrote {args.out} and {sidecar}")


def cmd_denoise(args):
    cfg = _cfg(args, {"fir.cutoff_hz": args.cutoff, "dwt.levels": args.levels,
                      "dwt.wavelet": args.wavelet, "dwt.thresholding": args.threshold,
                      "dwt.selection": args.selection})
    s = read_wav(args.inp)
    y = preprocess_pipeline(s, cfg.denoise_policy())
    write_wav(AudioSample(s.id, y.samples, s.sample_rate_hz), args.out)


def cmd_features(args):
    cfg = _cfg(args, {"envelope.window": args.window, "peak.height": args.height,
                      "peak.distance": args.distance, "run.jobs": args.jobs})
    m = load_manifest(args.manifest)
    fm = build_feature_matrix(m, cfg.feature_config(), preprocess=not args.no_preprocess,
                              jobs=cfg["run.jobs"], dump_dir=args.dump_envelope)
    write_feature_csv(fm, args.out)
    log.info("wrote %d x %d features to %s", *fm.X.shape, args.out)


def cmd_reduce(args):
    overrides = {"pca.components": args.components}
    if args.variance_target is not None:
        overrides.update({"pca.policy": "variance", "pca.variance_target": args.variance_target})
    cfg = _cfg(args, overrides)
    fm = read_feature_csv(args.features)
    if args.fit:
        std = fit_standardizer(fm.X, fm.ids)
        pca = fit_pca(std.transform(fm.X), cfg.pca_policy(), fm.ids)
        save_reduction(args.out, std, pca, fm.config_digest)
        print(f"kept {pca.n_components} components "
              f"(cumulative variance ratio {pca.explained_variance_ratio.sum():.6f})")
        return
    std, pca, digest = load_reduction(args.apply)
    if digest and fm.config_digest and digest != fm.config_digest:
        raise DataError("feature config of --features differs from the one the model was fitted on")
    Z = pca.transform(std.transform(fm.X))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "patient_id", *(f"pc{i + 1}" for i in range(pca.n_components))])
        for i, row in enumerate(Z):
            label = "" if fm.labels[i] == "unlabeled" else fm.labels[i]
            w.writerow([fm.ids[i], label, fm.patient_ids[i], *(repr(float(v)) for v in row)])


def cmd_train(args):
    cfg = _cfg(args, {"run.seed": args.seed, "epochs.exp2": args.epochs})
    fm = read_feature_csv(args.features)
    bundle = train_bundle(fm, args.model, cfg.experiment_config(), cfg["run.seed"], cfg["epochs.exp2"])
    save_bundle(bundle, args.out)


def cmd_predict(args):
    bundle = load_bundle(args.model)
    fm = read_feature_csv(args.features)
    if bundle.feature_config and fm.config_digest and bundle.feature_config != fm.config_digest:
        raise DataError("feature config of --features differs from the model's")
    pred = bundle.predict(fm.X)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "predicted"])
        for rid, lab in zip(fm.ids, pred):
            w.writerow([rid, lab])
    finally:
        if args.out:
            fh.close()


def cmd_experiment(args):
    overrides = {"run.seed": args.seed, "run.jobs": args.jobs, "cv.folds": args.folds}
    if args.epochs is not None:
        overrides[f"epochs.{args.kind}"] = args.epochs
    cfg = _cfg(args, overrides)
    m = load_manifest(args.manifest)
    fm = read_feature_csv(args.features) if args.features else None
    report = run_experiment(args.kind, args.model, m, fm, cfg.experiment_config(),
                            cfg["run.seed"], cfg.feature_config(), cfg["run.jobs"])
    Path(args.out).write_text(dumps_report(report))
    sys.stdout.write(report_table(report))


def cmd_report(args):
    try:
        report = load_report(args.inp)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.inp}: cannot read report ({exc})") from None
    if args.format == "csv":
        sys.stdout.write(report_csv(report))
    elif args.format == "json":
        sys.stdout.write(dumps_report(report))
    else:
        sys.stdout.write(report_table(report))


COMMANDS = {
    "synth": cmd_synth, "denoise": cmd_denoise, "features": cmd_features, "reduce": cmd_reduce,
    "train": cmd_train, "predict": cmd_predict, "experiment": cmd_experiment, "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"pcgkit {args.command}: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"pcgkit {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
