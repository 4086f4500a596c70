"""Command-line interface: synth, featurize, evaluate, report.

Each stage reads and writes plain files so intermediate artifacts stay
inspectable. Exit codes: 0 success, 1 usage, 2 data error, 3 numeric error.
Options fall back to FUSELEARN_<NAME> environment variables, then defaults;
outputs contain no timestamps, so identical inputs and seed reproduce
byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .config import (
    DEFAULT_INTERVAL_MS,
    DEFAULT_RATES,
    CHANNEL_ORDER,
    FeatureConfig,
    canonical_channel,
)
from .errors import DataError, FuselearnError, InvalidConfig, NumericError
from .features.vectors import FeatureMatrix
from .fusion import cross_channel_correlation, fit_pipeline, fuse
from .labeling import LabelWeights
from .models.evaluate import (
    MODEL_LABELS,
    MODEL_NAMES,
    channel_combinations,
    evaluate_combinations,
)
from .pipeline import featurize_session, label_vector, load_dataset
from .synth import SynthConfig, generate_session, write_dataset

ENV_PREFIX = "FUSELEARN_"

LABELS_HEADER = "unit_id,label"


# --- option parsing helpers -------------------------------------------------

def parse_interval(text: str) -> int:
    """Interval in ms from '60s' / '2m' / '90000ms' / bare ms integer."""
    token = text.strip().lower()
    try:
        if token.endswith("ms"):
            value = int(token[:-2])
        elif token.endswith("s"):
            value = int(float(token[:-1]) * 1000)
        elif token.endswith("m"):
            value = int(float(token[:-1]) * 60_000)
        else:
            value = int(token)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse interval {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"interval must be positive: {text!r}")
    return value


def parse_rates(text: str) -> dict[str, float]:
    """'gaze=30,mouse=20,video=15' -> full per-channel rate map."""
    rates = dict(DEFAULT_RATES)
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise argparse.ArgumentTypeError(f"bad rate entry {part!r}")
        name, value = part.split("=", 1)
        try:
            channel = canonical_channel(name)
            rates[channel] = float(value)
        except (InvalidConfig, ValueError):
            raise argparse.ArgumentTypeError(f"bad rate entry {part!r}")
        if rates[channel] <= 0:
            raise argparse.ArgumentTypeError(f"rate must be positive: {part!r}")
    return rates


def parse_channels(text: str) -> tuple[str, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            channel = canonical_channel(part)
        except InvalidConfig:
            raise argparse.ArgumentTypeError(f"unknown channel {part!r}")
        if channel not in out:
            out.append(channel)
    if not out:
        raise argparse.ArgumentTypeError("no channels given")
    return tuple(c for c in CHANNEL_ORDER if c in out)


_MODEL_ALIASES = {"cart": "cart", "forest": "forest", "rf": "forest",
                  "random_forest": "forest", "gbdt": "gbdt"}


def parse_models(text: str) -> tuple[str, ...]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        if part not in _MODEL_ALIASES:
            raise argparse.ArgumentTypeError(f"unknown model {part!r}")
        name = _MODEL_ALIASES[part]
        if name not in out:
            out.append(name)
    if not out:
        raise argparse.ArgumentTypeError("no models given")
    return tuple(m for m in MODEL_NAMES if m in out)


def parse_weights(text: str) -> LabelWeights:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"weights must be three comma-separated numbers, got {text!r}"
        )
    try:
        w = [float(p) for p in parts]
        return LabelWeights(*w)
    except (ValueError, InvalidConfig) as exc:
        raise argparse.ArgumentTypeError(f"bad weights {text!r}: {exc}")


def parse_format(text: str) -> str:
    token = text.strip().lower()
    if token not in ("text", "csv", "json"):
        raise argparse.ArgumentTypeError(f"unknown format {text!r}")
    return token


_OPTION_PARSERS = {
    "interval": parse_interval,
    "rates": parse_rates,
    "channels": parse_channels,
    "models": parse_models,
    "weights": parse_weights,
    "seed": int,
    "k": int,
    "alpha": float,
    "retention": float,
    "format": parse_format,
    "out": str,
    "config": str,
}


def resolve(args: argparse.Namespace, name: str, default):
    """Option precedence: command line, then FUSELEARN_<NAME>, then default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        try:
            return _OPTION_PARSERS[name](env)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise InvalidConfig(
                f"bad {ENV_PREFIX + name.upper()} value {env!r}: {exc}"
            )
    return default


def _config_hash(settings: dict) -> str:
    text = json.dumps(settings, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# --- synth ------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    config_path = resolve(args, "config", None)
    fields = {}
    if config_path is not None:
        if not os.path.exists(config_path):
            raise DataError(f"config file not found: {config_path}")
        with open(config_path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidConfig(f"config {config_path} is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise InvalidConfig(f"config {config_path} must be a JSON object")
        allowed = set(SynthConfig.__dataclass_fields__)
        unknown = set(doc) - allowed
        if unknown:
            raise InvalidConfig(f"unknown synth config keys: {sorted(unknown)}")
        fields.update(doc)
        if "duration_range_ms" in fields:
            fields["duration_range_ms"] = tuple(fields["duration_range_ms"])
    seed = resolve(args, "seed", None)
    if seed is not None:
        fields["seed"] = seed
    config = SynthConfig(**fields)
    out_dir = resolve(args, "out", "synth_out")
    result = generate_session(config)
    paths = write_dataset(result, out_dir)
    print(f"wrote {len(result.session.units)} units to {out_dir}")
    for key in ("manifest", "gaze", "mouse", "frames", "ground_truth"):
        print(f"  {paths[key]}")
    return 0


# --- featurize ----------------------------------------------------------------

def cmd_featurize(args: argparse.Namespace) -> int:
    interval = resolve(args, "interval", DEFAULT_INTERVAL_MS)
    rates = resolve(args, "rates", dict(DEFAULT_RATES))
    weights = resolve(args, "weights", LabelWeights())
    channels = resolve(args, "channels", tuple(CHANNEL_ORDER))
    out_dir = resolve(args, "out", "features_out")
    config = FeatureConfig(interval_ms=interval, rates=rates)

    session, streams = load_dataset(args.manifest)
    matrices = featurize_session(session, streams, config, channels)
    ids, labels = label_vector(session, weights)

    os.makedirs(out_dir, exist_ok=True)
    for channel, matrix in matrices.items():
        matrix.to_csv(os.path.join(out_dir, f"features_{channel}.csv"))
    label_lines = [LABELS_HEADER]
    label_lines += [f"{uid},{repr(float(v))}" for uid, v in zip(ids, labels)]
    with open(os.path.join(out_dir, "labels.csv"), "w") as fh:
        fh.write("\n".join(label_lines) + "\n")

    settings = {
        "interval_ms": interval,
        "rates": rates,
        "channels": list(channels),
        "weights": [weights.w_mastery, weights.w_self, weights.w_class],
    }
    meta = {"config_hash": _config_hash(settings), "settings": settings}
    with open(os.path.join(out_dir, "featurize.json"), "w") as fh:
        fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    print(f"wrote feature matrices for {'+'.join(channels)} to {out_dir}")
    return 0


def _read_labels(path: str) -> dict[str, float]:
    if not os.path.exists(path):
        raise DataError(f"labels file not found: {path}")
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0] != LABELS_HEADER:
        raise DataError(f"labels file {path} missing '{LABELS_HEADER}' header")
    out = {}
    for line in lines[1:]:
        uid, value = line.split(",", 1)
        try:
            out[uid] = float(value)
        except ValueError:
            raise DataError(f"bad label line in {path}: {line!r}")
    return out


# --- evaluate -----------------------------------------------------------------

def cmd_evaluate(args: argparse.Namespace) -> int:
    channels = resolve(args, "channels", tuple(CHANNEL_ORDER))
    models = resolve(args, "models", MODEL_NAMES)
    k = resolve(args, "k", 10)
    seed = resolve(args, "seed", 0)
    alpha = resolve(args, "alpha", 0.05)
    retention = resolve(args, "retention", 0.95)
    out_dir = resolve(args, "out", "report_out")

    features_dir = args.features
    matrices: dict[str, FeatureMatrix] = {}
    for channel in channels:
        path = os.path.join(features_dir, f"features_{channel}.csv")
        if not os.path.exists(path):
            raise DataError(f"feature matrix not found: {path}")
        matrices[channel] = FeatureMatrix.from_csv(path)
    label_map = _read_labels(os.path.join(features_dir, "labels.csv"))
    row_ids = matrices[channels[0]].row_ids
    missing = [uid for uid in row_ids if uid not in label_map]
    if missing:
        raise DataError(f"labels missing for unit(s): {missing[:5]}")
    labels = np.array([label_map[uid] for uid in row_ids], dtype=np.float64)

    report = evaluate_combinations(
        matrices, labels, combos=channel_combinations(channels),
        models=models, k=k, seed=seed, alpha=alpha, retention=retention,
    )

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.csv"), "w") as fh:
        fh.write(report.to_csv())
    settings = {
        "channels": list(channels), "models": list(models), "k": k,
        "seed": seed, "alpha": alpha, "retention": retention,
    }
    doc = json.loads(report.to_json())
    doc["config_hash"] = _config_hash(settings)
    doc["settings"] = settings
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")

    if len(channels) >= 2:
        reduced = {}
        for channel in channels:
            pipe = fit_pipeline(channel, matrices[channel], labels, alpha, retention)
            reduced[channel] = pipe.transform(matrices[channel])
        summary = cross_channel_correlation(fuse(reduced))
        with open(os.path.join(out_dir, "correlation.csv"), "w") as fh:
            fh.write(summary.to_csv())
        with open(os.path.join(out_dir, "correlation.json"), "w") as fh:
            fh.write(summary.to_json() + "\n")

    print(f"wrote evaluation report ({len(report.results)} entries) to {out_dir}")
    return 0


# --- report -------------------------------------------------------------------

def cmd_report(args: argparse.Namespace) -> int:
    fmt = resolve(args, "format", "text")
    report_dir = args.report_dir
    path = os.path.join(report_dir, "report.json")
    if not os.path.exists(path):
        raise DataError(f"no report.json in {report_dir!r}")
    with open(path) as fh:
        doc = json.load(fh)
    pairs = {}
    corr_path = os.path.join(report_dir, "correlation.json")
    if os.path.exists(corr_path):
        with open(corr_path) as fh:
            pairs = json.load(fh).get("pairs", {})

    results = doc.get("results", [])
    if not results:
        raise DataError(f"report.json in {report_dir!r} has no results")
    best = max(results, key=lambda r: r["mean_r2"])

    if fmt == "json":
        print(json.dumps(
            {"best": best, "pairs": pairs, "results": results,
             "seed": doc.get("seed"), "config_hash": doc.get("config_hash")},
            sort_keys=True, indent=2,
        ))
        return 0

    models = [m for m in MODEL_NAMES
              if any(r["model"] == m for r in results)]
    combos: list[str] = []
    for r in results:
        if r["combination"] not in combos:
            combos.append(r["combination"])
    cell = {(r["combination"], r["model"]): r["mean_r2"] for r in results}

    if fmt == "csv":
        print("combination," + ",".join(MODEL_LABELS[m] for m in models))
        for combo in combos:
            row = [combo] + [
                repr(cell[(combo, m)]) if (combo, m) in cell else ""
                for m in models
            ]
            print(",".join(row))
        return 0

    width = max(len(c) for c in combos + ["combination"]) + 2
    header = "combination".ljust(width) + "".join(
        MODEL_LABELS[m].rjust(15) for m in models
    )
    print(f"seed: {doc.get('seed')}  config: {doc.get('config_hash')}")
    print(header)
    print("-" * len(header))
    for combo in combos:
        row = combo.ljust(width)
        for m in models:
            v = cell.get((combo, m))
            row += ("" if v is None else f"{v:.4f}").rjust(15)
        print(row)
    if pairs:
        print("\ncross-channel mean |r|:")
        for pair in sorted(pairs):
            print(f"  {pair}: {pairs[pair]:.4f}")
    print(
        f"\nbest: {best['combination']} / {MODEL_LABELS[best['model']]} "
        f"(R^2 = {best['mean_r2']:.4f})"
    )
    return 0


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuselearn",
        description="Multi-channel learning-unit-state pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--config", help="synth config JSON path")
    p.add_argument("--out", help="output directory (default synth_out)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", help="extract per-channel feature matrices")
    p.add_argument("manifest", help="session manifest JSON path")
    p.add_argument("--out", help="output directory (default features_out)")
    p.add_argument("--interval", type=parse_interval,
                   help="window length, e.g. 60s (default)")
    p.add_argument("--rates", type=parse_rates,
                   help="resample rates, e.g. gaze=30,mouse=20,video=15")
    p.add_argument("--channels", type=parse_channels,
                   help="channels to featurize (default video,gaze,mouse)")
    p.add_argument("--weights", type=parse_weights,
                   help="label weights mastery,self,class (default 0.2,0.4,0.4)")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("evaluate", help="cross-validate models on features")
    p.add_argument("features", help="directory written by featurize")
    p.add_argument("--out", help="output directory (default report_out)")
    p.add_argument("--channels", type=parse_channels,
                   help="channels to combine (default all three)")
    p.add_argument("--models", type=parse_models,
                   help="models to run (default cart,forest,gbdt)")
    p.add_argument("--k", type=int, help="folds (default 10)")
    p.add_argument("--seed", type=int, help="shuffle / model seed (default 0)")
    p.add_argument("--alpha", type=float, help="filter alpha (default 0.05)")
    p.add_argument("--retention", type=float,
                   help="PCA retention (default 0.95)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="summarize an evaluation directory")
    p.add_argument("report_dir", help="directory written by evaluate")
    p.add_argument("--format", choices=("text", "csv", "json"),
                   help="output format (default text)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors; remap per our contract
        # (0 stays 0 for --help).
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FuselearnError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
