"""Score records, per-image group averages, six-number summaries, and the
CSV / SVG report artifacts."""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DataFormatError, IncompleteGroupError
from .perturb import REGISTRY_NAMES, parse_condition
from .psnr import UNDEFINED, format_score

log = logging.getLogger(__name__)

METRICS = ("psnr", "brisque")
FAMILIES = ("sp_ga", "sp_rot")
STAT_ROWS = ("Min", "1st Qu", "Median", "Mean", "3rd Qu", "Max")
SCORE_COLUMNS = ("dataset", "image_id", "condition", "metric", "score")
DATASET_TITLES = {"mnist": "MNIST", "cifar10": "CIFAR-10"}
FAMILY_TITLES = {"sp_ga": "SP+GA", "sp_rot": "SP+Rotation"}


@dataclass(frozen=True)
class ScoreRecord:
    dataset: str
    image_id: int
    condition: str
    metric: str
    score: object

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.score is UNDEFINED or self.score is None:
            if self.metric != "psnr":
                raise ValueError("only PSNR scores may be undefined")
            object.__setattr__(self, "score", UNDEFINED)
        else:
            object.__setattr__(self, "score", float(self.score))

    @property
    def defined(self):
        return self.score is not UNDEFINED


def write_scores_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for r in records:
            writer.writerow([r.dataset, r.image_id, r.condition, r.metric, format_score(r.score)])


def read_scores_csv(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SCORE_COLUMNS:
            raise DataFormatError(f"{path}: expected header {','.join(SCORE_COLUMNS)}")
        for lineno, row in enumerate(reader, 2):
            try:
                dataset, image_id, condition, metric, score = row
                value = UNDEFINED if score == "NA" else float(score)
                records.append(ScoreRecord(dataset, int(image_id), condition, metric, value))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    return records


@dataclass(frozen=True)
class GroupSpec:
    label: str
    conditions: tuple

    def __post_init__(self):
        if not self.conditions:
            raise ValueError(f"group {self.label!r} has no conditions")
        unknown = [c for c in self.conditions if c not in REGISTRY_NAMES]
        if unknown:
            raise ValueError(f"group {self.label!r} names unknown conditions {unknown}")
        object.__setattr__(self, "conditions", tuple(self.conditions))


@dataclass(frozen=True)
class TableSpec:
    dataset: str
    metric: str
    family: str
    groups: tuple

    @property
    def name(self):
        return f"{self.dataset}_{self.metric}_{self.family}"

    @property
    def title(self):
        return f"{self.metric.upper()} on {DATASET_TITLES.get(self.dataset, self.dataset)}, {FAMILY_TITLES[self.family]} corruptions"


def group_average(records, group):
    """Per-image mean score over ``group.conditions``.

    Images are taken in order of first appearance in ``records``. Undefined
    (NA) scores are skipped and counted in a log warning; an image with no
    defined score in the group is dropped.
    """
    by_key = {}
    images = []
    seen = set()
    for r in records:
        if r.image_id not in seen:
            seen.add(r.image_id)
            images.append(r.image_id)
        by_key[(r.image_id, r.condition)] = r
    missing = [(img, c) for img in images for c in group.conditions if (img, c) not in by_key]
    if missing or not images:
        raise IncompleteGroupError(group.label, missing)

    values, skipped = [], 0
    for img in images:
        scores = [by_key[(img, c)].score for c in group.conditions]
        defined = [s for s in scores if s is not UNDEFINED]
        skipped += len(scores) - len(defined)
        if defined:
            values.append(math.fsum(defined) / len(defined))
    if skipped:
        log.warning("group %s: excluded %d undefined scores", group.label, skipped)
    return values


@dataclass(frozen=True)
class SummaryStats:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float

    def as_row(self):
        return (self.min, self.q1, self.median, self.mean, self.q3, self.max)


def quantile(sorted_values, p):
    """Type-7 quantile: linear interpolation at position (n - 1) p."""
    h = (len(sorted_values) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(sorted_values) - 1)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


def summarize(values):
    xs = sorted(float(v) for v in values)
    if not xs:
        raise ValueError("cannot summarize an empty list")
    mean = math.fsum(xs) / len(xs)
    mean = min(max(mean, xs[0]), xs[-1])
    return SummaryStats(xs[0], quantile(xs, 0.25), quantile(xs, 0.5), mean, quantile(xs, 0.75), xs[-1])


def _fmt_level(v):
    return str(int(v)) if v == int(v) else repr(v)


def _family_groups(family, include_zero):
    """Column groups in table order, expanding each 'x' over the registry."""
    parsed = [parse_condition(n) for n in REGISTRY_NAMES]
    varied = "GA" if family == "sp_ga" else "ROT"
    levels = (0.0, 0.1, 0.15, 0.2)
    groups = []
    for sp_first in (True, False):
        for level in levels:
            members = []
            for c in parsed:
                if len(c.steps) != 2:
                    continue
                sp, other = (c.steps[0], c.steps[1]) if sp_first else (c.steps[1], c.steps[0])
                if sp.kind != "SP" or other.kind != varied or sp.value != level:
                    continue
                if other.value == 0 and not include_zero:
                    continue
                members.append(c.name)
            token = "GA" if varied == "GA" else "RO"
            label = f"Avg-SP{_fmt_level(level)}{token}x" if sp_first else f"Avg-{token}xSP{_fmt_level(level)}"
            groups.append(GroupSpec(label, tuple(members)))
    return groups


def builtin_tables(dataset, metric, include_zero=True):
    """The SP+GA and SP+Rotation table layouts for one dataset and metric.

    BRISQUE tables open with an ``Original-QS`` column (clean images); PSNR
    tables do not, since PSNR is undefined on clean pairs.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    tables = []
    for family in FAMILIES:
        groups = _family_groups(family, include_zero)
        if metric == "brisque":
            groups.insert(0, GroupSpec("Original-QS", ("clean",)))
        tables.append(TableSpec(dataset, metric, family, tuple(groups)))
    return tables


def builtin_group_specs(dataset, metric, include_zero=True):
    return [g for t in builtin_tables(dataset, metric, include_zero) for g in t.groups]


def full_precision_path(path):
    # kept out of the table directory so it holds exactly one CSV per table
    path = Path(path)
    return path.parent / "full" / path.name


def emit_table_csv(groups, stats, path):
    """Write one table: a stat-name column then one column per group.

    ``path`` gets values at 2 decimals; ``full/<name>`` next to it gets
    round-trippable full precision.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("cannot emit a table without groups")
    labels = [g.label for g in groups]
    full_precision_path(path).parent.mkdir(parents=True, exist_ok=True)
    for target, fmt in ((Path(path), "{:.2f}".format), (full_precision_path(path), repr)):
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["stat", *labels])
            for i, row_name in enumerate(STAT_ROWS):
                writer.writerow([row_name, *(fmt(stats[label].as_row()[i]) for label in labels)])


def read_table_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    if [r[0] for r in rows[1:]] != list(STAT_ROWS):
        raise DataFormatError(f"{path}: unexpected stat rows")
    columns = list(zip(*[[float(v) for v in r[1:]] for r in rows[1:]]))
    return {label: SummaryStats(*col) for label, col in zip(labels, columns)}


@dataclass(frozen=True)
class _Axis:
    lo: float
    hi: float
    top: float
    bottom: float

    def y(self, value):
        return self.bottom - (value - self.lo) / (self.hi - self.lo) * (self.bottom - self.top)


def _nice_step(span):
    raw = span / 6.0
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _axis_for(all_stats, top, bottom):
    lo = min(s.min for s in all_stats)
    hi = max(s.max for s in all_stats)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    step = _nice_step(hi - lo)
    return _Axis(math.floor(lo / step) * step, math.ceil(hi / step) * step, top, bottom), step


def _n(v):
    return f"{v:.2f}"


def emit_boxplot_svg(groups, values, path, title="", ylabel="score"):
    """One box per group: box spans the quartiles, a line marks the median,
    whiskers reach min and max, a dot marks the mean. Output bytes depend only
    on the inputs."""
    groups = list(groups)
    if not groups:
        raise ValueError("cannot draw a box plot without groups")
    stats = [summarize(values[g.label]) for g in groups]
    slot, left, right, top, bottom = 90.0, 70.0, 20.0, 50.0, 330.0
    width = left + right + slot * len(groups)
    height = bottom + 90.0
    axis, step = _axis_for(stats, top, bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(width)}" height="{_n(height)}" '
        f'viewBox="0 0 {_n(width)} {_n(height)}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_n(width)}" height="{_n(height)}" fill="white"/>',
        f'<text class="title" x="{_n(width / 2)}" y="25" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line class="axis" x1="{_n(left)}" y1="{_n(top)}" x2="{_n(left)}" y2="{_n(bottom)}" stroke="black"/>',
        f'<line class="axis" x1="{_n(left)}" y1="{_n(bottom)}" x2="{_n(width - right)}" y2="{_n(bottom)}" stroke="black"/>',
        f'<text class="ylabel" x="15" y="{_n((top + bottom) / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 15 {_n((top + bottom) / 2)})">{escape(ylabel)}</text>',
    ]
    n_ticks = int(round((axis.hi - axis.lo) / step))
    for k in range(n_ticks + 1):
        v = axis.lo + k * step
        y = axis.y(v)
        out.append(f'<line class="tick" x1="{_n(left - 4)}" y1="{_n(y)}" x2="{_n(left)}" y2="{_n(y)}" stroke="black"/>')
        out.append(f'<text x="{_n(left - 7)}" y="{_n(y + 4)}" text-anchor="end">{v:g}</text>')

    for i, (g, s) in enumerate(zip(groups, stats)):
        cx = left + slot * (i + 0.5)
        half = slot * 0.3
        y_min, y_q1, y_med, y_q3, y_max, y_mean = (axis.y(v) for v in (s.min, s.q1, s.median, s.q3, s.max, s.mean))
        out.append(f'<g class="box" data-label="{escape(g.label)}">')
        out.append(f'<line class="whisker" x1="{_n(cx)}" y1="{_n(y_max)}" x2="{_n(cx)}" y2="{_n(y_q3)}" stroke="black"/>')
        out.append(f'<line class="whisker" x1="{_n(cx)}" y1="{_n(y_q1)}" x2="{_n(cx)}" y2="{_n(y_min)}" stroke="black"/>')
        for yy, cls in ((y_min, "min"), (y_max, "max")):
            out.append(f'<line class="{cls}" x1="{_n(cx - half / 2)}" y1="{_n(yy)}" x2="{_n(cx + half / 2)}" y2="{_n(yy)}" stroke="black"/>')
        out.append(f'<rect class="iqr" x="{_n(cx - half)}" y="{_n(y_q3)}" width="{_n(2 * half)}" '
                   f'height="{_n(y_q1 - y_q3)}" fill="#9ecae1" stroke="black"/>')
        out.append(f'<line class="median" x1="{_n(cx - half)}" y1="{_n(y_med)}" x2="{_n(cx + half)}" y2="{_n(y_med)}" '
                   f'stroke="#08306b" stroke-width="2"/>')
        out.append(f'<circle class="mean" cx="{_n(cx)}" cy="{_n(y_mean)}" r="3" fill="#d62728"/>')
        out.append(f'<text x="{_n(cx)}" y="{_n(bottom + 14)}" text-anchor="end" '
                   f'transform="rotate(-35 {_n(cx)} {_n(bottom + 14)})">{escape(g.label)}</text>')
        out.append("</g>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return axis

