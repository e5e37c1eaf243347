"""Command line entry point: ``noisyiqa {sample,corrupt,score,report,bench}``.

Settings come from flags, an optional ``--config`` file of ``key = value``
lines (same keys as the long flags, ``#`` starts a comment), then built-in
defaults, in that order of precedence.
"""
import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .bench import BenchConfig
from .errors import BenchError, ConfigError
from .perturb import GAUSS_MODES, REGISTRY_NAMES
from .stats import METRICS

log = logging.getLogger("noisyiqa")

STAGES = ("sample", "corrupt", "score", "report", "bench")
_KEYS = ("dataset", "data_dir", "n", "seed", "gauss_mode", "conditions", "metric", "model", "range", "out", "jobs",
         "exclude_zero")


def read_config_file(path):
    """Parse ``key = value`` lines into a dict keyed like the CLI flags."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: expected one of {', '.join(_KEYS)} as 'key = value'")
        values[key] = value.strip().strip("\"'")
    return values


def _split(value):
    if isinstance(value, (list, tuple)):
        value = ",".join(value)
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


def _int(key, value):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _bool(key, value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be true or false, got {value!r}")


def build_config(args):
    """Merge flags over the config file over defaults and validate the result."""
    file_values = read_config_file(args.config) if args.config else {}
    merged = {k: getattr(args, k, None) for k in _KEYS}
    for k, v in file_values.items():
        if merged.get(k) is None:
            merged[k] = v

    defaults = BenchConfig()
    kwargs = {}
    if merged["dataset"] is not None:
        names = _split(merged["dataset"])
        kwargs["datasets"] = defaults.datasets if names == ("all",) else names
    if merged["metric"] is not None:
        names = _split(merged["metric"])
        kwargs["metrics"] = METRICS if names == ("all",) else names
    if merged["conditions"] is not None:
        names = _split(merged["conditions"])
        kwargs["conditions"] = REGISTRY_NAMES if names == ("all",) else names
    for key in ("n", "seed", "jobs"):
        if merged[key] is not None:
            kwargs[key] = _int(key, merged[key])
    for key in ("data_dir", "model", "range", "out"):
        if merged[key] is not None:
            kwargs[key] = Path(merged[key])
    if merged["gauss_mode"] is not None:
        kwargs["gauss_mode"] = merged["gauss_mode"]
    if merged["exclude_zero"] is not None:
        kwargs["include_zero"] = not _bool("exclude_zero", merged["exclude_zero"])
    return BenchConfig(**kwargs).validate()


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value settings file; flags override it")
    common.add_argument("--dataset", action="append", help="mnist, cifar10 or all (repeatable or comma separated)")
    common.add_argument("--data-dir", help="directory holding the raw dataset files")
    common.add_argument("--n", help="images sampled per dataset (default 500)")
    common.add_argument("--seed", help="global seed (default 0)")
    common.add_argument("--gauss-mode", choices=GAUSS_MODES, help="GA strength read as variance or stddev")
    common.add_argument("--conditions", help="comma separated condition names (default: all 69)")
    common.add_argument("--metric", action="append", help="psnr, brisque or all")
    common.add_argument("--model", help="libsvm BRISQUE model file")
    common.add_argument("--range", help="svm-scale range file matching --model")
    common.add_argument("--out", help="output directory (default bench-out)")
    common.add_argument("--jobs", help="worker processes (default 1)")
    common.add_argument("--exclude-zero", action="store_true", default=None,
                        help="leave zero-strength members (e.g. SP0.1GA0) out of the Avg-...x groups")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="noisyiqa", description="Image-quality benchmark under synthetic corruption.")
    sub = parser.add_subparsers(dest="stage", required=True)
    helps = {
        "sample": "draw the seeded sample and write pristine PNGs plus manifest",
        "corrupt": "write one PNG per image and condition",
        "score": "score corrupted images with PSNR and/or BRISQUE",
        "report": "summary tables (CSV) and box plots (SVG)",
        "bench": "run every stage, skipping those already up to date",
    }
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=helps[stage])
    return parser


def run(cfg, stage):
    if stage == "bench":
        return bench.run_bench(cfg)
    if stage == "report":
        return bench.run_report(cfg)
    for ds in cfg.datasets:
        if stage == "sample":
            bench.run_sample(cfg, ds)
        elif stage == "corrupt":
            bench.run_corrupt(cfg, ds)
        else:
            for metric in cfg.metrics:
                bench.run_score(cfg, ds, metric)
    return None


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = build_config(args)
        run(cfg, args.stage)
    except BenchError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except ValueError as exc:
        # parse-level value errors from the library are data-format problems
        log.error("%s", exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
