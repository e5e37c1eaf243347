"""Experiment stages: sample -> corrupt -> score -> report.

Every stage writes a stamp (``<out>/.stamps/<stage>.json``) recording the
hash of the inputs it consumed and of the outputs it produced. Standalone
stages refuse to run on top of upstream artifacts whose bytes no longer match
their stamp; :func:`run_bench` skips any stage whose stamp is current and
rebuilds everything downstream of a change.
"""
import hashlib
import json
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .brisque import brisque_score
from .datasets import (DATASETS, SampleManifest, image_filename, load_dataset, raw_files,
                       read_image_png, sample_images, write_image_png)
from .errors import ConfigError, IncompleteInputsError, ProvenanceError
from .perturb import GAUSS_MODES, REGISTRY_NAMES, apply_condition, parse_condition
from .psnr import psnr
from .rng import check_seed
from .stats import (METRICS, ScoreRecord, builtin_tables, group_average, read_scores_csv,
                    summarize, emit_boxplot_svg, emit_table_csv, write_scores_csv)
from .svr import load_range_file, load_svr_model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchConfig:
    datasets: tuple = ("mnist", "cifar10")
    data_dir: Path = Path("data")
    n: int = 500
    seed: int = 0
    gauss_mode: str = "variance"
    conditions: tuple = REGISTRY_NAMES
    metrics: tuple = METRICS
    model: Path = None
    range: Path = None
    out: Path = Path("bench-out")
    jobs: int = 1
    include_zero: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def validate(self):
        for ds in self.datasets:
            if ds not in DATASETS:
                raise ConfigError(f"unknown dataset {ds!r}")
        if not self.datasets:
            raise ConfigError("no datasets selected")
        if self.n < 1:
            raise ConfigError(f"sample size must be at least 1, got {self.n}")
        try:
            check_seed(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.gauss_mode not in GAUSS_MODES:
            raise ConfigError(f"gauss mode must be one of {GAUSS_MODES}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}")
        names = []
        for c in self.conditions:
            try:
                names.append(parse_condition(c).name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if len(set(names)) != len(names):
            raise ConfigError("duplicate conditions")
        return replace(self, conditions=tuple(names), out=Path(self.out), data_dir=Path(self.data_dir))

    def require_model(self):
        if self.model is None or self.range is None:
            raise ConfigError("BRISQUE scoring needs --model and --range")
        for p in (self.model, self.range):
            if not Path(p).is_file():
                raise ConfigError(f"model file {p} does not exist")


# -- paths -------------------------------------------------------------------

def manifest_path(cfg, ds):
    return cfg.out / ds / "manifest.json"


def pristine_dir(cfg, ds):
    return cfg.out / ds / "pristine"


def corrupted_dir(cfg, ds):
    return cfg.out / ds / "corrupted"


def scores_path(cfg, ds, metric):
    return cfg.out / ds / f"scores_{metric}.csv"


def report_dirs(cfg):
    return cfg.out / "report" / "tables", cfg.out / "report" / "figures"


# -- hashing and stamps ------------------------------------------------------

def _sha(*chunks):
    h = hashlib.sha256()
    for c in chunks:
        h.update(c if isinstance(c, bytes) else str(c).encode())
        h.update(b"\0")
    return h.hexdigest()


def hash_files(paths, root=None):
    h = hashlib.sha256()
    for p in sorted(Path(p) for p in paths):
        name = p.relative_to(root) if root else p.name
        h.update(str(name).encode() + b"\0")
        h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()


def hash_tree(root):
    root = Path(root)
    if not root.exists():
        return None
    return hash_files([p for p in root.rglob("*") if p.is_file()], root)


def _stamp_path(cfg, stage):
    return cfg.out / ".stamps" / f"{stage}.json"


def read_stamp(cfg, stage):
    path = _stamp_path(cfg, stage)
    if not path.is_file():
        return None
    return json.loads(path.read_text())


def write_stamp(cfg, stage, input_hash, output_hash):
    path = _stamp_path(cfg, stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"stage": stage, "input_hash": input_hash, "output_hash": output_hash}, indent=2) + "\n")


def _sample_outputs_hash(cfg, ds):
    if not manifest_path(cfg, ds).is_file():
        return None
    return _sha(hashlib.sha256(manifest_path(cfg, ds).read_bytes()).hexdigest(), hash_tree(pristine_dir(cfg, ds)))


def _corrupt_outputs_hash(cfg, ds):
    return hash_tree(corrupted_dir(cfg, ds))


def _score_outputs_hash(cfg, ds, metric):
    path = scores_path(cfg, ds, metric)
    return hash_files([path]) if path.is_file() else None


def _report_outputs_hash(cfg):
    return hash_tree(cfg.out / "report")


def _stage_inputs(cfg, stage, ds=None, metric=None):
    if stage == "sample":
        return _sha("sample", ds, cfg.n, cfg.seed, hash_files(raw_files(cfg.data_dir, ds)))
    if stage == "corrupt":
        return _sha("corrupt", ds, cfg.seed, cfg.gauss_mode, ",".join(cfg.conditions), _sample_outputs_hash(cfg, ds))
    if stage == "score":
        parts = ["score", ds, metric, _corrupt_outputs_hash(cfg, ds), _sample_outputs_hash(cfg, ds)]
        if metric == "brisque":
            parts.append(hash_files([cfg.model, cfg.range]))
        return _sha(*parts)
    parts = ["report", cfg.include_zero]
    for d in cfg.datasets:
        for m in cfg.metrics:
            parts.append(_score_outputs_hash(cfg, d, m))
    return _sha(*parts)


def _stage_outputs(cfg, stage, ds=None, metric=None):
    if stage == "sample":
        return _sample_outputs_hash(cfg, ds)
    if stage == "corrupt":
        return _corrupt_outputs_hash(cfg, ds)
    if stage == "score":
        return _score_outputs_hash(cfg, ds, metric)
    return _report_outputs_hash(cfg)


def _stage_name(stage, ds=None, metric=None):
    return "-".join(p for p in (stage, ds, metric) if p)


def check_upstream(cfg, stage, ds=None, metric=None):
    """Raise ProvenanceError if an upstream stage's outputs changed since it stamped them."""
    name = _stage_name(stage, ds, metric)
    stamp = read_stamp(cfg, name)
    if stamp is None:
        log.warning("no stamp for %s; provenance of its outputs is unchecked", name)
        return
    actual = _stage_outputs(cfg, stage, ds, metric)
    if actual != stamp["output_hash"]:
        raise ProvenanceError(f"outputs of stage {name} changed since they were produced; rerun {stage}")


def _finish(cfg, stage, ds=None, metric=None, input_hash=None):
    if input_hash is None:
        input_hash = _stage_inputs(cfg, stage, ds, metric)
    write_stamp(cfg, _stage_name(stage, ds, metric), input_hash, _stage_outputs(cfg, stage, ds, metric))


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _reset_dir(path):
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)


# -- stages ------------------------------------------------------------------

def run_sample(cfg, ds):
    images, labels = load_dataset(cfg.data_dir, ds)
    if cfg.n > len(images):
        raise ConfigError(f"cannot sample {cfg.n} images from {len(images)} available {ds} images")
    manifest, sampled = sample_images(images, cfg.n, cfg.seed, labels, ds)
    _reset_dir(pristine_dir(cfg, ds))
    for entry, img in zip(manifest.entries, sampled):
        write_image_png(img, pristine_dir(cfg, ds) / entry.file)
    manifest.save(manifest_path(cfg, ds))
    _finish(cfg, "sample", ds)
    log.info("sampled %d %s images", len(sampled), ds)
    return manifest


def load_manifest(cfg, ds):
    path = manifest_path(cfg, ds)
    if not path.is_file():
        raise IncompleteInputsError(f"{path} is missing; run the sample stage first")
    return SampleManifest.load(path)


def _corrupt_image(args):
    pristine, out_dir, ds, image_id, conditions, seed, gauss_mode = args
    img = read_image_png(pristine)
    for name in conditions:
        target = Path(out_dir) / image_filename(ds, image_id, name)
        if name == "clean":
            shutil.copyfile(pristine, target)
        else:
            write_image_png(apply_condition(img, name, seed, ds, image_id, gauss_mode), target)
    return len(conditions)


def run_corrupt(cfg, ds):
    manifest = load_manifest(cfg, ds)
    check_upstream(cfg, "sample", ds)
    out_dir = corrupted_dir(cfg, ds)
    _reset_dir(out_dir)
    items = [(str(pristine_dir(cfg, ds) / e.file), str(out_dir), ds, e.image_id, cfg.conditions, cfg.seed,
              cfg.gauss_mode) for e in manifest.entries]
    written = sum(_map(_corrupt_image, items, cfg.jobs))
    _finish(cfg, "corrupt", ds)
    log.info("wrote %d corrupted %s images", written, ds)
    return written


def _score_image(args):
    ds, image_id, pristine, out_dir, conditions, metric, model, ranges = args
    ref = read_image_png(pristine) if metric == "psnr" else None
    rows = []
    for name in conditions:
        path = Path(out_dir) / image_filename(ds, image_id, name)
        if not path.is_file():
            raise IncompleteInputsError(f"{path} is missing; run the corrupt stage first")
        img = read_image_png(path)
        score = psnr(ref, img) if metric == "psnr" else brisque_score(img, model, ranges)
        rows.append(ScoreRecord(ds, image_id, name, metric, score))
    return rows


def run_score(cfg, ds, metric):
    model = ranges = None
    if metric == "brisque":
        cfg.require_model()
        model, ranges = load_svr_model(cfg.model), load_range_file(cfg.range)
    manifest = load_manifest(cfg, ds)
    check_upstream(cfg, "sample", ds)
    check_upstream(cfg, "corrupt", ds)
    items = [(ds, e.image_id, str(pristine_dir(cfg, ds) / e.file), str(corrupted_dir(cfg, ds)), cfg.conditions,
              metric, model, ranges) for e in manifest.entries]
    records = [r for rows in _map(_score_image, items, cfg.jobs) for r in rows]
    write_scores_csv(records, scores_path(cfg, ds, metric))
    _finish(cfg, "score", ds, metric)
    log.info("scored %d %s images with %s", len(records), ds, metric)
    return records


def build_report(records_by_key, out_tables, out_figures, include_zero=True):
    """Emit every table and figure for the given ``{(dataset, metric): records}``."""
    out_tables.mkdir(parents=True, exist_ok=True)
    out_figures.mkdir(parents=True, exist_ok=True)
    emitted = []
    for (ds, metric), records in records_by_key.items():
        for table in builtin_tables(ds, metric, include_zero):
            values = {g.label: group_average(records, g) for g in table.groups}
            stats = {label: summarize(v) for label, v in values.items()}
            emit_table_csv(table.groups, stats, out_tables / f"{table.name}.csv")
            ylabel = "PSNR (dB)" if metric == "psnr" else "BRISQUE score"
            n = len(values[table.groups[0].label])
            emit_boxplot_svg(table.groups, values, out_figures / f"{table.name}.svg",
                             title=f"{table.title} (n={n})", ylabel=ylabel)
            emitted.append(table.name)
    return emitted


def run_report(cfg):
    records_by_key = {}
    for ds in cfg.datasets:
        for metric in cfg.metrics:
            path = scores_path(cfg, ds, metric)
            if not path.is_file():
                raise IncompleteInputsError(f"{path} is missing; run the score stage first")
            check_upstream(cfg, "score", ds, metric)
            records_by_key[(ds, metric)] = read_scores_csv(path)
    tables, figures = report_dirs(cfg)
    _reset_dir(cfg.out / "report")
    emitted = build_report(records_by_key, tables, figures, cfg.include_zero)
    _finish(cfg, "report")
    log.info("wrote %d tables and %d figures", len(emitted), len(emitted))
    return emitted


def _current(cfg, stage, ds=None, metric=None):
    stamp = read_stamp(cfg, _stage_name(stage, ds, metric))
    if stamp is None:
        return False
    return (stamp["input_hash"] == _stage_inputs(cfg, stage, ds, metric)
            and stamp["output_hash"] == _stage_outputs(cfg, stage, ds, metric))


def run_bench(cfg):
    """Run all stages, skipping those whose stamps match current inputs and outputs."""
    if "brisque" in cfg.metrics:
        cfg.require_model()
    ran = []
    for ds in cfg.datasets:
        for stage, metric in [("sample", None), ("corrupt", None)] + [("score", m) for m in cfg.metrics]:
            if _current(cfg, stage, ds, metric):
                log.info("%s is up to date", _stage_name(stage, ds, metric))
                continue
            if stage == "sample":
                run_sample(cfg, ds)
            elif stage == "corrupt":
                run_corrupt(cfg, ds)
            else:
                run_score(cfg, ds, metric)
            ran.append(_stage_name(stage, ds, metric))
    if _current(cfg, "report"):
        log.info("report is up to date")
    else:
        run_report(cfg)
        ran.append("report")
    return ran
