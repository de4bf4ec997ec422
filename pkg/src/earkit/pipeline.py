"""End-to-end orchestration: extraction to CSV caches, fold evaluation, reports."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import imgproc
from .dataset import (
    DatasetIndex,
    Entry,
    FeatureCache,
    SplitRecord,
    export_features,
    folds_from_records,
    generate_split,
    import_features,
    read_split_list,
    scan_directory,
    write_split_list,
)
from .descriptors import DESCRIPTOR_IDS, descriptor_info, learn_or_load_bsif_bank, make_extractor
from .errors import ConfigError, EarkitError, FormatError, ValidationError
from .evaluation import ProtocolResult, bootstrap_eer, bootstrap_rank1, pool_scores, run_protocol
from .matching import MEASURES, score_matrix

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    splits: str | None = None
    descriptors: list[str] = field(default_factory=lambda: list(DESCRIPTOR_IDS))
    measures: dict[str, str] = field(default_factory=dict)
    k: int = 5
    seed: int = 0
    out: str = "results"
    target: tuple[int, int] = imgproc.DEFAULT_TARGET
    bsif_filters: str | None = None
    bootstrap_sets: int = 100
    bootstrap_fraction: float = 0.6
    evaluate_test: bool = False
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if isinstance(self.descriptors, str):
            self.descriptors = [d for d in self.descriptors.split(",") if d.strip()]
        self.descriptors = [d.strip().upper() for d in self.descriptors]
        if not self.descriptors:
            raise ConfigError("descriptor list is empty")
        for d in self.descriptors:
            if d not in DESCRIPTOR_IDS:
                raise ConfigError(f"unknown descriptor {d!r}; choose from {', '.join(DESCRIPTOR_IDS)}")
        if len(set(self.descriptors)) != len(self.descriptors):
            raise ConfigError("descriptor list has duplicates")
        self.measures = {k.upper(): v.upper() for k, v in (self.measures or {}).items()}
        for d, m in self.measures.items():
            if d not in DESCRIPTOR_IDS or m not in MEASURES:
                raise ConfigError(f"bad measure override {d}={m}")
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        self.target = tuple(int(t) for t in self.target)
        if len(self.target) != 2 or min(self.target) < 32:
            raise ConfigError("target size must be at least 32x32")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def measure_for(self, descriptor: str) -> str:
        return self.measures.get(descriptor, descriptor_info(descriptor).measure)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target"] = list(self.target)
        return d


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def features_dir(out) -> Path:
    return Path(out) / "features"


def cache_path(out, descriptor: str) -> Path:
    return features_dir(out) / f"{descriptor}.csv"


_WORKER_STATE: dict = {}


def _init_worker(descriptors, target, bsif_filters):
    bank = learn_or_load_bsif_bank(bsif_filters)
    _WORKER_STATE["extractors"] = {d: make_extractor(d, bsif_bank=bank) for d in descriptors}
    _WORKER_STATE["target"] = target


def _extract_one(path):
    try:
        img = imgproc.preprocess(imgproc.load_grayscale(path), _WORKER_STATE["target"])
        return {d: ex(img).values for d, ex in _WORKER_STATE["extractors"].items()}, None
    except (EarkitError, OSError) as exc:
        return None, str(exc)


def extract_features(index: DatasetIndex, config: ExperimentConfig) -> dict[str, FeatureCache]:
    """Preprocess every image once and run each configured descriptor on it.

    Raises:
        EarkitError: any image failed; the message lists every failing image.
    """
    init_args = (tuple(config.descriptors), config.target, config.bsif_filters)
    paths = [e.path for e in index.entries]
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs, initializer=_init_worker, initargs=init_args) as pool:
            results = list(pool.map(_extract_one, paths, chunksize=8))
    else:
        _init_worker(*init_args)
        results = [_extract_one(p) for p in paths]
    failures = [f"{e.image_id}: {err}" for e, (_, err) in zip(index.entries, results) if err]
    if failures:
        raise EarkitError("feature extraction failed for %d image(s):\n  %s" % (len(failures), "\n  ".join(failures)))
    caches = {}
    for d in config.descriptors:
        values = np.stack([r[d] for r, _ in results])
        caches[d] = FeatureCache(d, tuple(index.image_ids), tuple(index.labels), values)
    return caches


def cmd_extract(config: ExperimentConfig) -> dict[str, Path]:
    if not config.dataset:
        raise ConfigError("no dataset root configured")
    index = scan_directory(config.dataset)
    for w in index.warnings:
        log.warning("skipped %s", w)
    caches = extract_features(index, config)
    features_dir(config.out).mkdir(parents=True, exist_ok=True)
    written = {}
    for d, cache in caches.items():
        path = cache_path(config.out, d)
        export_features(cache, path)
        written[d] = path
    log.info("wrote %d feature caches for %d images", len(written), len(index))
    return written


def _load_or_extract(config: ExperimentConfig) -> dict[str, FeatureCache]:
    missing = [d for d in config.descriptors if not cache_path(config.out, d).is_file()]
    if missing:
        if not config.dataset:
            raise ConfigError(f"feature caches missing for {', '.join(missing)} and no dataset configured")
        sub = ExperimentConfig.from_mapping({**config.to_dict(), "descriptors": missing})
        cmd_extract(sub)
    return {d: import_features(cache_path(config.out, d), d) for d in config.descriptors}


def _split_records(config: ExperimentConfig, cache: FeatureCache) -> list[SplitRecord]:
    if config.splits:
        return read_split_list(config.splits)
    index = DatasetIndex(tuple(Entry(i, Path(i), l) for i, l in zip(cache.image_ids, cache.labels)))
    return generate_split(index, k=config.k, seed=config.seed)


def _write_xy(path: Path, xy: np.ndarray) -> None:
    lines = ["x,y"] + [f"{float(x)!r},{float(y)!r}" for x, y in xy]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def read_xy(path) -> np.ndarray:
    """Read a two-column ``x,y`` curve file."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != "x,y":
        raise FormatError(f"{path}: missing x,y header")
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected two columns")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows).reshape(-1, 2)


def _check_records(records: Sequence[SplitRecord], cache: FeatureCache) -> None:
    known = set(cache.image_ids)
    unknown = [r.image_id for r in records if r.image_id not in known]
    if unknown:
        raise ValidationError(f"split list names {len(unknown)} image(s) without features, e.g. {unknown[0]!r}")


def evaluate_descriptor(cache: FeatureCache, records: Sequence[SplitRecord], measure: str) -> ProtocolResult:
    folds = folds_from_records(records)
    return run_protocol(cache.values, cache.labels, cache.image_ids, folds, measure)


def cmd_evaluate(config: ExperimentConfig) -> dict:
    """Run the fold protocol for every configured descriptor and write the report files."""
    caches = _load_or_extract(config)
    out = Path(config.out)
    first = caches[config.descriptors[0]]
    records = _split_records(config, first)
    _check_records(records, first)
    splits_file = out / "splits.csv"
    if not config.splits:
        write_split_list(records, splits_file)
    curves = out / "curves"
    curves.mkdir(parents=True, exist_ok=True)

    report: dict = {"config": config.to_dict(), "descriptors": {}, "counts": None}
    for d in config.descriptors:
        measure = config.measure_for(d)
        result = evaluate_descriptor(caches[d], records, measure)
        cmc_files, roc_files = [], []
        for f in result.folds:
            cp = curves / f"{d}_cmc_fold{f.fold}.csv"
            rp = curves / f"{d}_roc_fold{f.fold}.csv"
            _write_xy(cp, f.cmc.as_xy())
            _write_xy(rp, f.roc.as_xy())
            cmc_files.append(str(cp.relative_to(out)))
            roc_files.append(str(rp.relative_to(out)))
        counts = {
            "identification": result.n_identification,
            "genuine": result.n_genuine,
            "impostor": result.n_impostor,
            "folds": [{"fold": f.fold, "probes": f.n_probes, "gallery": f.n_gallery,
                       "genuine": f.n_genuine, "impostor": f.n_impostor} for f in result.folds],
        }
        if report["counts"] is None:
            report["counts"] = counts
        entry = {
            "measure": measure,
            "R1": result.rank1.to_dict(),
            "EER": result.eer.to_dict(),
            "curves": {"cmc": cmc_files, "roc": roc_files},
        }
        if config.evaluate_test:
            entry["test"] = _evaluate_test(caches[d], records, measure, config)
        report["descriptors"][d] = entry

    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(render_report(report), encoding="utf-8")
    return report


def _evaluate_test(cache: FeatureCache, records, measure: str, config: ExperimentConfig) -> dict:
    """Test images probe the development gallery; statistics come from bootstrap sets."""
    dev = [r.image_id for r in records if r.split == "dev"]
    test = [r.image_id for r in records if r.split == "test"]
    if not test:
        raise ValidationError("no test images in the split")
    g, p = cache.select(dev), cache.select(test)
    m = score_matrix(p.values, g.values, measure, p.labels, g.labels)
    genuine, impostor = pool_scores(m)
    kw = dict(n_sets=config.bootstrap_sets, fraction=config.bootstrap_fraction, seed=config.seed)
    return {"R1": bootstrap_rank1(m, **kw).to_dict(), "EER": bootstrap_eer(genuine, impostor, **kw).to_dict()}


def ranked_rows(report: dict) -> list[tuple[str, dict]]:
    """Descriptors ordered by mean R1 descending, ties broken by name."""
    return sorted(report["descriptors"].items(), key=lambda kv: (-kv[1]["R1"]["mean"], kv[0]))


def render_report(report: dict) -> str:
    lines = [f"{'Method':<8} {'R1 (%)':>13} {'EER (%)':>13}  measure"]
    for name, e in ranked_rows(report):
        r1, er = e["R1"], e["EER"]
        lines.append(f"{name:<8} {100 * r1['mean']:6.1f} ± {100 * r1['std']:4.1f} "
                     f"{100 * er['mean']:6.1f} ± {100 * er['std']:4.1f}  {e['measure']}")
    c = report.get("counts") or {}
    if c:
        lines.append("")
        lines.append(f"identification trials: {c['identification']}  "
                     f"genuine trials: {c['genuine']}  impostor trials: {c['impostor']}")
    return "\n".join(lines) + "\n"


def cmd_split(config: ExperimentConfig, dest) -> Path:
    if not config.dataset:
        raise ConfigError("no dataset root configured")
    index = scan_directory(config.dataset)
    records = generate_split(index, k=config.k, seed=config.seed)
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    write_split_list(records, dest)
    return dest
