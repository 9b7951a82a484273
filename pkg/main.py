"""
ICN Forecast Augment - Command Line Pipeline
Each subcommand is one stage; every stage writes a stage record with the
config hash and is skipped when its record is still current.

    synth -> prep -> train-forecaster -> build-variants -> run-matrix
                                      -> extend / train-classifier / interpret
"""

import argparse
import json
import logging
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import RunConfig, config_hash, get_artifact_store, get_env_settings, load_config
from src.errors import ConfigError, IcnfError

logger = logging.getLogger("icnf")

FORECASTER_KINDS = ("lstm", "brainlm")


def configure_logging(level: str | None) -> None:
    level = (level or get_env_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


# ----------------------------------------------------------------------
# Shared helpers
# ----------------------------------------------------------------------

def _cohort_lengths(config: RunConfig) -> tuple[int, int]:
    return (config.data.regular_length, config.data.extended_length)


def _load_prepped(config: RunConfig, data: str | None):
    from src.data import load_cohort

    path = Path(data or Path(config.paths.cohort_dir) / "prepped")
    get_artifact_store().require(path / "manifest.csv", "z-scored cohort", "prep")
    return path, load_cohort(path, _cohort_lengths(config))


def _load_forecasters(config: RunConfig, variant_ids) -> tuple[dict, dict, list[Path]]:
    from src.experiment import forecaster_key, required_forecasters
    from src.forecast import Forecaster

    store = get_artifact_store()
    forecasters, checkpoints, paths = {}, {}, []
    for kind, base_length in required_forecasters(variant_ids, *_cohort_lengths(config)):
        path = store.forecaster_path(kind.value, base_length, config.paths.forecaster_dir)
        store.require(path, f"{kind.value} forecaster", "train-forecaster")
        key = forecaster_key(kind, base_length)
        forecasters[key] = Forecaster.load(path)
        checkpoints[key] = str(path)
        paths.append(path)
    return forecasters, checkpoints, paths


def _skip_if_current(args, stage: str, digest: str, inputs, record_at) -> bool:
    if args.force:
        return False
    if get_artifact_store().is_up_to_date(stage, digest, inputs, record_at):
        logger.warning(f"Stage '{stage}' is up to date ({record_at}); use --force to rerun")
        return True
    return False


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ----------------------------------------------------------------------
# Stages
# ----------------------------------------------------------------------

def cmd_synth(args, config: RunConfig) -> int:
    from src.data import save_cohort, synth_cohort

    if args.seed is not None:
        config = config.with_updates("data", seed=args.seed)
    digest = config_hash(config)
    out = Path(args.out or Path(config.paths.cohort_dir) / "raw")
    if _skip_if_current(args, "synth", digest, [], out):
        return 0
    d = config.data
    cohort = synth_cohort(d.n_cn, d.n_ad, d.t_regular_fraction, d.seed, d.noise_std, d.regular_length, d.extended_length)
    save_cohort(cohort, out)
    get_artifact_store().write_stage("synth", digest, [], [out], out)
    return 0


def cmd_prep(args, config: RunConfig) -> int:
    from src.data import load_cohort, save_cohort, zscore_cohort

    digest = config_hash(config)
    source = Path(args.data or Path(config.paths.cohort_dir) / "raw")
    out = Path(args.out or Path(config.paths.cohort_dir) / "prepped")
    get_artifact_store().require(source / "manifest.csv", "raw cohort", "synth")
    if _skip_if_current(args, "prep", digest, [source], out):
        return 0
    cohort = zscore_cohort(load_cohort(source, _cohort_lengths(config)))
    save_cohort(cohort, out)
    get_artifact_store().write_stage("prep", digest, [source], [out], out)
    return 0


def cmd_train_forecaster(args, config: RunConfig) -> int:
    from src.experiment import VARIANTS, base_cohort
    from src.forecast import train_forecaster
    from src.windows import slide_cohort

    if args.seed is not None:
        config = config.with_updates("forecast", seed=args.seed)
    digest = config_hash(config)
    data_path, cohort = _load_prepped(config, args.data)
    regular, extended = _cohort_lengths(config)
    lengths = [args.base_length] if args.base_length else [regular, extended]
    if args.out and len(lengths) > 1:
        raise ConfigError("--out names a single checkpoint; pass --base-length too")

    store = get_artifact_store()
    w = config.windows
    for base_length in lengths:
        if base_length not in (regular, extended):
            raise ConfigError(f"--base-length must be {regular} or {extended}, got {base_length}")
        out = Path(args.out) if args.out else store.forecaster_path(args.model, base_length, config.paths.forecaster_dir)
        if _skip_if_current(args, f"train-forecaster:{args.model}:{base_length}", digest, [data_path], out):
            continue
        spec = VARIANTS["a"] if base_length == regular else VARIANTS["d"]
        standardized = base_cohort(cohort, spec, regular, extended)
        batch = slide_cohort(standardized, w.window, w.step, w.context_len)
        result = train_forecaster(args.model, batch, config.forecast, w, config.lstm, config.brainlm, base_length)
        out.parent.mkdir(parents=True, exist_ok=True)
        result.forecaster.save(out, digest)
        curves = out.with_name(out.name + ".curves.csv")
        _write_curves(result, curves)
        store.write_stage(
            f"train-forecaster:{args.model}:{base_length}",
            digest,
            [data_path],
            [out, out.with_name(out.name + ".json"), curves],
            out,
        )
    return 0


def _write_curves(result, path: Path) -> None:
    import pandas as pd

    frame = pd.DataFrame({
        "epoch": range(1, len(result.train_curve) + 1),
        "train_loss": result.train_curve,
        "val_mse": result.val_curve,
    })
    frame.to_csv(path, index=False, lineterminator="\n")


def cmd_extend(args, config: RunConfig) -> int:
    from src.data import load_cohort, save_cohort
    from src.forecast import Forecaster, extend_cohort

    if args.seed is not None:
        config = config.with_updates("experiment", extension_seed=args.seed)
    digest = config_hash(config)
    source = Path(args.data)
    ckpt = get_artifact_store().require(args.ckpt, f"{args.model} forecaster checkpoint", "train-forecaster")
    forecaster = Forecaster.load(ckpt)
    if forecaster.kind.value != args.model:
        raise ConfigError(f"--model {args.model} but {ckpt} holds a {forecaster.kind.value} forecaster")
    out = Path(args.out or f"{source}_{args.model}")
    if _skip_if_current(args, "extend", digest, [source, ckpt], out):
        return 0
    cohort = load_cohort(source, allowed_lengths=None)
    save_cohort(extend_cohort(cohort, forecaster, args.steps, config.experiment.extension_seed), out)
    get_artifact_store().write_stage("extend", digest, [source, ckpt], [out], out)
    return 0


def cmd_build_variants(args, config: RunConfig) -> int:
    from src.data import save_cohort
    from src.experiment import build_variant

    if args.seed is not None:
        config = config.with_updates("experiment", extension_seed=args.seed)
    digest = config_hash(config)
    data_path, cohort = _load_prepped(config, args.data)
    variant_ids = config.experiment.variants
    forecasters, _, ckpt_paths = _load_forecasters(config, variant_ids)
    out = Path(args.out or config.paths.variants_dir)
    inputs = [data_path, *ckpt_paths]
    if _skip_if_current(args, "build-variants", digest, inputs, out):
        return 0
    regular, extended = _cohort_lengths(config)
    outputs = []
    for vid in variant_ids:
        variant = build_variant(
            cohort, vid, forecasters, config.experiment.extension_seed, regular, extended, config.windows.target_len
        )
        outputs.append(save_cohort(variant.cohort, out / vid))
    _write_json(out / "variants.json", {"config_hash": digest, "variants": [v for v in variant_ids]})
    get_artifact_store().write_stage("build-variants", digest, inputs, outputs, out)
    return 0


def cmd_train_classifier(args, config: RunConfig) -> int:
    from src.classify import train_classifier
    from src.data import load_cohort
    from src.experiment import auc, kfold, stratified_split

    if args.seed is not None:
        config = config.with_updates("classifier", seed=args.seed)
    digest = config_hash(config)
    source = Path(args.data)
    get_artifact_store().require(source / "manifest.csv", "dataset variant", "build-variants")
    out = Path(args.out or Path(config.paths.run_dir) / f"classifier_{source.name}.icnf")
    if _skip_if_current(args, "train-classifier", digest, [source], out):
        return 0

    seed = config.classifier.seed
    cohort = load_cohort(source, allowed_lengths=None)
    trainval, test = stratified_split(cohort, config.experiment.test_fraction, seed)
    train, val = kfold(trainval, config.experiment.n_folds, seed)[0]
    result = train_classifier(train, val, config.classifier, seed)

    out.parent.mkdir(parents=True, exist_ok=True)
    result.classifier.save(out, digest)
    metrics = out.with_name(out.name + ".metrics.csv")
    result.history_frame().to_csv(metrics, index=False, lineterminator="\n")
    test_auc = auc(result.classifier.predict_proba(test), test.labels)
    report = out.with_name(out.name + ".report.json")
    _write_json(report, result.to_dict() | {"test_auc": test_auc, "config_hash": digest})
    outputs = [out, out.with_name(out.name + ".json"), metrics, report]
    if args.export_attention:
        attention = Path(args.export_attention)
        result.classifier.attention_frame(cohort).to_csv(attention, index=False, lineterminator="\n")
        outputs.append(attention)
    logger.info(f"Classifier best epoch {result.best_epoch}: val AUC {result.best_val_auc:.4f}, test AUC {test_auc:.4f}")
    get_artifact_store().write_stage("train-classifier", digest, [source], outputs, out)
    return 0


def cmd_run_matrix(args, config: RunConfig) -> int:
    from src.experiment import run_matrix

    digest = config_hash(config)
    data_path, cohort = _load_prepped(config, args.data)
    forecasters, checkpoints, ckpt_paths = _load_forecasters(config, config.experiment.variants)
    out = Path(args.out or config.paths.run_dir)
    inputs = [data_path, *ckpt_paths]
    if _skip_if_current(args, "run-matrix", digest, inputs, out):
        return 0
    run_matrix(cohort, config, forecasters, out, config.experiment.threads, checkpoints)
    get_artifact_store().write_stage(
        "run-matrix", digest, inputs, [out / "manifest.csv", out / "summary.csv"], out
    )
    return 0


def cmd_interpret(args, config: RunConfig) -> int:
    from src.experiment import VARIANTS, base_cohort
    from src.forecast import Forecaster, ForecastModel
    from src.interpret import evaluation_windows, rank_sensitivities, ranking_frame, sensitivity_table

    digest = config_hash(config)
    data_path, cohort = _load_prepped(config, args.data)
    regular, extended = _cohort_lengths(config)
    ckpt_arg = args.ckpt or get_artifact_store().forecaster_path("brainlm", regular, config.paths.forecaster_dir)
    ckpt = get_artifact_store().require(ckpt_arg, "BrainLM forecaster checkpoint", "train-forecaster")
    out = Path(args.out or Path(config.paths.run_dir) / "sensitivity.csv")
    if _skip_if_current(args, "interpret", digest, [data_path, ckpt], out):
        return 0

    forecaster = Forecaster.load(ckpt)
    if forecaster.kind is not ForecastModel.BRAINLM:
        logger.warning(f"{ckpt} holds a {forecaster.kind.value} forecaster; sensitivities use its forecast loss")
    base_length = forecaster.base_length or regular
    spec = VARIANTS["a"] if base_length == regular else VARIANTS["d"]
    standardized = base_cohort(cohort, spec, regular, extended)
    f = config.forecast
    batch = evaluation_windows(
        standardized, config.windows, config.interpret.eval_split, f.train_fraction, f.seed, f.split_by_subject
    )
    table = sensitivity_table(forecaster, batch, config.interpret.batch_size, config.experiment.threads)

    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_frame().to_csv(out, index=False, lineterminator="\n")
    domains = out.with_name(out.stem + "_domains.csv")
    table.domain_frame().to_csv(domains, index=False, lineterminator="\n")
    top = out.with_name(f"{out.stem}_top{config.interpret.top_k}.csv")
    ranked = rank_sensitivities(table, config.interpret.top_k)
    ranking_frame(ranked).to_csv(top, index=False, lineterminator="\n")
    for label, items in ranked.items():
        listing = ", ".join(f"{i.channel_index}({i.domain}) {i.delta_percent:+.2f}% {i.comparison.value}" for i in items)
        logger.info(f"Top {len(items)} {label.value}: {listing}")
    get_artifact_store().write_stage("interpret", digest, [data_path, ckpt], [out, domains, top], out)
    return 0


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (default: $ICNF_CONFIG or configs/desk.ini)")
    common.add_argument("--seed", type=int, help="Seed override for this stage")
    common.add_argument("--out", help="Output path (file or directory, per stage)")
    common.add_argument("--threads", type=int, help="Worker threads for run-matrix and interpret")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR (default: $ICNF_LOG_LEVEL or INFO)")
    common.add_argument("--force", action="store_true", help="Rerun even if the stage record is current")

    parser = argparse.ArgumentParser(prog="icnf", description="ICN generative-forecasting augmentation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common], help="Generate a synthetic two-class ICN cohort")

    p = sub.add_parser("prep", parents=[common], help="Z-score every channel of a cohort")
    p.add_argument("--data", help="Raw cohort directory")

    p = sub.add_parser("train-forecaster", parents=[common], help="Train an LSTM or BrainLM forecaster")
    p.add_argument("--model", choices=FORECASTER_KINDS, required=True)
    p.add_argument("--data", help="Z-scored cohort directory")
    p.add_argument("--base-length", type=int, help="Train only on windows of this series length")

    p = sub.add_parser("extend", parents=[common], help="Append forecasted timestamps to every series")
    p.add_argument("--model", choices=FORECASTER_KINDS, required=True)
    p.add_argument("--ckpt", required=True, help="Forecaster checkpoint")
    p.add_argument("--data", required=True, help="Cohort directory to extend")
    p.add_argument("--steps", type=int, default=4)

    p = sub.add_parser("build-variants", parents=[common], help="Build dataset variants a-f")
    p.add_argument("--data", help="Z-scored cohort directory")

    p = sub.add_parser("train-classifier", parents=[common], help="Train a TA-LSTM on one variant")
    p.add_argument("--data", required=True, help="Variant directory")
    p.add_argument("--export-attention", help="Write attention weights of every subject to this CSV")

    p = sub.add_parser("run-matrix", parents=[common], help="Cross-validate every variant over all seeds")
    p.add_argument("--data", help="Z-scored cohort directory")

    p = sub.add_parser("interpret", parents=[common], help="Per-class channel sensitivity of a forecaster")
    p.add_argument("--ckpt", help="BrainLM checkpoint")
    p.add_argument("--data", help="Z-scored cohort directory")
    return parser


COMMANDS = {
    "synth": cmd_synth,
    "prep": cmd_prep,
    "train-forecaster": cmd_train_forecaster,
    "extend": cmd_extend,
    "build-variants": cmd_build_variants,
    "train-classifier": cmd_train_classifier,
    "run-matrix": cmd_run_matrix,
    "interpret": cmd_interpret,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = load_config(args.config)
        threads = args.threads or get_env_settings().threads
        if threads:
            config = config.with_updates("experiment", threads=threads)
    except ConfigError as e:
        logger.error(str(e))
        return 2

    try:
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        logger.error(str(e))
        return 2
    except IcnfError as e:
        logger.error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
