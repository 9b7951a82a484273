"""
Run Matrix
Cross-validated classification of every dataset variant.

For each seed one stratified test set is held out and the remaining
subjects are cut into k stratified folds. Each (variant, seed, fold) cell
trains a TA-LSTM on the fold's training part, selects the best epoch on
its validation part and scores AUC on the seed's test set. Splits are made
on subject ids and shared by all variants, so scores pair up across
variants for the significance test.
"""

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from src.classify import train_classifier
from src.config import RunConfig, config_hash
from src.data import Cohort
from src.forecast import Forecaster

from .metrics import auc
from .splits import kfold, stratified_split
from .stats import paired_test
from .variants import DatasetVariant, build_variant

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["variant", "seed", "fold", "auc"]
SUMMARY_COLUMNS = ["variant", "mean_auc", "std", "p_vs_ref"]


@dataclass(frozen=True)
class CellResult:
    variant: str
    seed: int
    fold: int
    auc: float

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.variant, self.seed, self.fold)


@dataclass
class ExperimentManifest:
    """Every per-cell test AUC of one run, plus what produced them."""
    config_hash: str
    seeds: list[int]
    n_folds: int
    variants: list[str]
    cells: dict[tuple[str, int, int], CellResult] = field(default_factory=dict)
    checkpoints: dict[str, str] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def expected_per_variant(self) -> int:
        return len(self.seeds) * self.n_folds

    def scores(self, variant: str) -> np.ndarray:
        """AUCs of one variant ordered by (seed, fold)."""
        keys = sorted(k for k in self.cells if k[0] == variant)
        return np.array([self.cells[k].auc for k in keys])

    def is_complete(self, variant: str) -> bool:
        return len(self.scores(variant)) == self.expected_per_variant

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"variant": c.variant, "seed": c.seed, "fold": c.fold, "auc": c.auc}
            for _, c in sorted(self.cells.items())
        ]
        return pd.DataFrame(rows, columns=MANIFEST_COLUMNS)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seeds": self.seeds,
            "n_folds": self.n_folds,
            "variants": self.variants,
            "n_scores": {v: len(self.scores(v)) for v in self.variants},
            "checkpoints": dict(sorted(self.checkpoints.items())),
        }


def summarize(manifest: ExperimentManifest, reference: str = "d", method: str = "ttest") -> pd.DataFrame:
    """
    Per-variant mean and sample std of AUC, with the paired p-value against
    ``reference`` (empty for the reference itself or when undefined).
    """
    reference_scores = manifest.scores(reference) if manifest.is_complete(reference) else None
    rows = []
    for variant in manifest.variants:
        scores = manifest.scores(variant)
        p_value = float("nan")
        if variant != reference and reference_scores is not None and manifest.is_complete(variant):
            p_value = paired_test(scores, reference_scores, method).p_value
        rows.append({
            "variant": variant,
            "mean_auc": float(scores.mean()) if scores.size else float("nan"),
            "std": float(scores.std(ddof=1)) if scores.size > 1 else float("nan"),
            "p_vs_ref": p_value,
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def read_manifest(path: str | Path) -> dict[tuple[str, int, int], CellResult]:
    path = Path(path)
    if not path.exists():
        return {}
    frame = pd.read_csv(path, dtype={"variant": str}, float_precision="round_trip")
    cells = {}
    for row in frame.itertuples(index=False):
        cell = CellResult(str(row.variant), int(row.seed), int(row.fold), float(row.auc))
        cells[cell.key] = cell
    return cells


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    frame.to_csv(tmp, index=False, lineterminator="\n")
    tmp.replace(path)


class MatrixRunner:
    """Runs the (variant, seed, fold) cells and serializes manifest writes."""

    def __init__(self, config: RunConfig, run_dir: str | Path | None = None, threads: int | None = None):
        self.config = config
        self.run_dir = Path(run_dir or config.paths.run_dir)
        self.threads = threads or config.experiment.threads
        self.config_hash = config_hash(config)
        self._lock = threading.Lock()

    @property
    def manifest_path(self) -> Path:
        return self.run_dir / "manifest.csv"

    def _resume(self, manifest: ExperimentManifest) -> None:
        """Adopt finished cells from an earlier run with the same config hash."""
        run_info = self.run_dir / "run.json"
        if run_info.exists():
            previous = json.loads(run_info.read_text(encoding="utf-8")).get("config_hash")
            if previous == self.config_hash:
                wanted = set(manifest.variants)
                done = {k: c for k, c in read_manifest(self.manifest_path).items() if k[0] in wanted}
                manifest.cells.update(done)
                if done:
                    logger.info(f"Resuming run in {self.run_dir}: {len(done)} cells already complete")
                return
            logger.warning(f"Run directory {self.run_dir} holds results of config {previous}; starting over")
            self.manifest_path.unlink(missing_ok=True)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        run_info.write_text(json.dumps({"config_hash": self.config_hash}, indent=2) + "\n", encoding="utf-8")

    def _record(self, manifest: ExperimentManifest, cell: CellResult, seconds: float) -> None:
        with self._lock:
            manifest.cells[cell.key] = cell
            manifest.timing[f"{cell.variant}/{cell.seed}/{cell.fold}"] = round(seconds, 3)
            _write_csv(manifest.to_frame(), self.manifest_path)

    def _run_cell(self, variant: DatasetVariant, seed: int, fold: int, train_ids, val_ids, test_ids) -> CellResult:
        cohort = variant.cohort
        classifier_seed = self.config.classifier.seed + seed * self.config.experiment.n_folds + fold
        result = train_classifier(cohort.subset(train_ids), cohort.subset(val_ids), self.config.classifier, classifier_seed)
        test = cohort.subset(test_ids)
        score = auc(result.classifier.predict_proba(test), test.labels)
        logger.info(
            f"Cell variant={variant.id} seed={seed} fold={fold}: test AUC {score:.4f} "
            f"(best epoch {result.best_epoch}, val AUC {result.best_val_auc:.4f})"
        )
        return CellResult(variant.id, seed, fold, score)

    def run(
        self,
        variants: Mapping[str, DatasetVariant],
        checkpoints: Mapping[str, str] | None = None,
    ) -> tuple[ExperimentManifest, pd.DataFrame]:
        exp = self.config.experiment
        manifest = ExperimentManifest(self.config_hash, list(exp.seeds), exp.n_folds, list(variants))
        manifest.checkpoints.update(checkpoints or {})
        self._resume(manifest)

        source = next(iter(variants.values())).cohort
        jobs = []
        for seed in exp.seeds:
            trainval, test = stratified_split(source, exp.test_fraction, seed)
            for fold, (train, val) in enumerate(kfold(trainval, exp.n_folds, seed)):
                for vid, variant in variants.items():
                    if (vid, seed, fold) in manifest.cells:
                        continue
                    jobs.append((variant, seed, fold, train.subject_ids, val.subject_ids, test.subject_ids))
        logger.info(
            f"Run matrix: {len(variants)} variants x {len(exp.seeds)} seeds x {exp.n_folds} folds; "
            f"{len(jobs)} cells to run on {self.threads} thread(s)"
        )

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = {}
            for job in jobs:
                futures[pool.submit(self._timed_cell, *job)] = job
            for future in as_completed(futures):
                cell, seconds = future.result()
                self._record(manifest, cell, seconds)

        summary = summarize(manifest, exp.reference_variant, exp.significance_test)
        self._write_outputs(manifest, summary)
        self._soft_checks(summary)
        return manifest, summary

    def _timed_cell(self, *job) -> tuple[CellResult, float]:
        start = time.perf_counter()
        cell = self._run_cell(*job)
        return cell, time.perf_counter() - start

    def _write_outputs(self, manifest: ExperimentManifest, summary: pd.DataFrame) -> None:
        _write_csv(manifest.to_frame(), self.manifest_path)
        _write_csv(summary, self.run_dir / "summary.csv")
        (self.run_dir / "experiment.json").write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (self.run_dir / "timing.json").write_text(
            json.dumps(dict(sorted(manifest.timing.items())), indent=2) + "\n", encoding="utf-8"
        )
        incomplete = [v for v in manifest.variants if not manifest.is_complete(v)]
        if incomplete:
            logger.warning(f"Variants with missing cells: {incomplete}")

    @staticmethod
    def _soft_checks(summary: pd.DataFrame) -> None:
        means = dict(zip(summary["variant"], summary["mean_auc"]))
        if "a" in means and "d" in means and means["d"] < means["a"]:
            logger.warning(
                f"Mean AUC of replication (d: {means['d']:.4f}) is below baseline (a: {means['a']:.4f})"
            )


def run_matrix(
    cohort: Cohort,
    config: RunConfig,
    forecasters: Mapping[str, Forecaster] | None = None,
    run_dir: str | Path | None = None,
    threads: int | None = None,
    checkpoints: Mapping[str, str] | None = None,
) -> tuple[ExperimentManifest, pd.DataFrame]:
    """
    Build the configured variants from ``cohort`` and run the full matrix.

    Writes ``manifest.csv`` (variant,seed,fold,auc), ``summary.csv``
    (variant,mean_auc,std,p_vs_ref), ``experiment.json`` and
    ``timing.json`` under ``run_dir``. Cells already present in the
    manifest of an earlier run with the same config hash are not rerun.
    """
    data, windows, exp = config.data, config.windows, config.experiment
    variants = {
        vid: build_variant(
            cohort,
            vid,
            forecasters,
            exp.extension_seed,
            data.regular_length,
            data.extended_length,
            windows.target_len,
        )
        for vid in exp.variants
    }
    return MatrixRunner(config, run_dir, threads).run(variants, checkpoints)
