"""End-to-end acceptance checks A1-A10.

Each test prints a single ``A<k> PASS|FAIL: ...`` line straight to the
terminal and then asserts the same verdict. Real MNIST / CIFAR-10 files are
used when NOISYIQA_DATA_DIR points at them, otherwise the bundled fixtures.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import DATA, MODEL, RANGE, REAL_DATA
from noisyiqa.bench import (BenchConfig, hash_tree, run_bench, run_corrupt, run_sample, run_score,
                            scores_path)
from noisyiqa.brisque import aggd_fit, ggd_fit, mscn_map
from noisyiqa.datasets import load_dataset, parse_cifar10_batch, parse_idx
from noisyiqa.errors import DataFormatError
from noisyiqa.image import Image
from noisyiqa.perturb import REGISTRY_NAMES
from noisyiqa.psnr import UNDEFINED, psnr
from noisyiqa.stats import (STAT_ROWS, builtin_group_specs, builtin_tables, group_average, read_scores_csv,
                            summarize)
from noisyiqa.svr import (format_range_file, format_svr_model, load_range_file, load_svr_model,
                          parse_range_file, parse_svr_model)
from test_brisque import brute_mscn, ggd_sample

DATA_DIR = Path(REAL_DATA) if REAL_DATA else DATA
SEED = 2024
REFERENCE_PSNR_MEANS = {"Avg-SP0GAx": 15.47, "Avg-SP0.1GAx": 11.74, "Avg-SP0.15GAx": 10.48, "Avg-SP0.2GAx": 9.51}


@pytest.fixture
def verdict(capsys):
    def emit(tag, ok, detail):
        with capsys.disabled():
            print(f"\n{tag} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def _score(tmp, ds, metric, conditions, n=100, gauss_mode="variance"):
    cfg = BenchConfig(datasets=(ds,), data_dir=DATA_DIR, n=n, seed=SEED, gauss_mode=gauss_mode,
                      conditions=tuple(conditions), metrics=(metric,), model=MODEL, range=RANGE,
                      out=Path(tmp), jobs=1).validate()
    run_sample(cfg, ds)
    run_corrupt(cfg, ds)
    run_score(cfg, ds, metric)
    return read_scores_csv(scores_path(cfg, ds, metric))


def _groups(ds, metric, labels):
    specs = {g.label: g for g in builtin_group_specs(ds, metric)}
    return {label: specs[label] for label in labels}


def _mean_over(records, conditions):
    vals = [r.score for r in records if r.condition in conditions and r.score is not UNDEFINED]
    return float(np.mean(vals))


def _union(groups):
    return [c for c in REGISTRY_NAMES if any(c in g.conditions for g in groups)]


@pytest.fixture(scope="module")
def cifar_brisque(tmp_path_factory):
    """Scores for every condition A3-A5 look at, computed once."""
    needed = {"clean"} | {f"SP0GA{g}" for g in ("0.1", "0.15", "0.2")} | {f"GA{g}SP0" for g in ("0.1", "0.15", "0.2")}
    needed |= {f"SP0{r}" for r in ("RR30", "RR60", "RL30", "RL60")} | {f"{r}SP0" for r in ("RR30", "RR60", "RL30", "RL60")}
    conditions = [c for c in REGISTRY_NAMES if c in needed]
    return _score(tmp_path_factory.mktemp("a345"), "cifar10", "brisque", conditions)


def test_a1_psnr_gaussian_degradation(tmp_path, verdict):
    start = time.perf_counter()
    groups = _groups("mnist", "psnr", REFERENCE_PSNR_MEANS)
    family = [[f"SP0GA{g}" for g in ("0.1", "0.15", "0.2")], [f"GA{g}SP0" for g in ("0.1", "0.15", "0.2")]]
    wanted = set(_union(groups.values())) | set(family[0] + family[1])
    conditions = [c for c in REGISTRY_NAMES if c in wanted]
    results = {}
    for mode in ("variance", "stddev"):
        records = _score(tmp_path / mode, "mnist", "psnr", conditions, gauss_mode=mode)
        means = {label: float(np.mean(group_average(records, g))) for label, g in groups.items()}
        single = [[_mean_over(records, {c}) for c in fam] for fam in family]
        results[mode] = means, single
    elapsed = time.perf_counter() - start

    def error(mode):
        return max(abs(results[mode][0][k] - REFERENCE_PSNR_MEANS[k]) for k in REFERENCE_PSNR_MEANS)

    best = min(results, key=error)
    means, single = results[best]
    ordered = list(means.values())
    strict = all(a > b for a, b in zip(ordered, ordered[1:])) and all(
        a > b for fam in single for a, b in zip(fam, fam[1:]))
    within = error(best) <= 1.5
    shown = ", ".join(f"{k}={v:.2f}" for k, v in means.items())
    verdict("A1", strict and within and elapsed < 120,
            f"best gauss-mode={best} ({shown}); ordering {'strict' if strict else 'BROKEN'}; "
            f"max |err| vs 15.47/11.74/10.48/9.51 = {error(best):.2f} dB (tol 1.5, other mode "
            f"{error(next(m for m in results if m != best)):.2f}); {elapsed:.1f}s")


def test_a2_psnr_rotation_insensitivity(tmp_path, verdict):
    labels = [f"Avg-SP{s}ROx" for s in ("0", "0.1", "0.15", "0.2")]
    groups = _groups("cifar10", "psnr", labels)
    records = _score(tmp_path, "cifar10", "psnr", _union(groups.values()))
    means = {label: float(np.mean(group_average(records, g))) for label, g in groups.items()}
    band = max(means.values()) - min(means.values())
    shown = ", ".join(f"{k}={v:.2f}" for k, v in means.items())
    verdict("A2", band <= 2.0, f"{shown}; band {band:.2f} dB (tol 2)")


def test_a3_brisque_rotation_lowers_score(cifar_brisque, verdict):
    clean = _mean_over(cifar_brisque, {"clean"})
    rotated = _mean_over(cifar_brisque, {"SP0RR30", "SP0RR60", "SP0RL30", "SP0RL60"})
    verdict("A3", rotated < clean, f"rotated mean {rotated:.2f} vs clean mean {clean:.2f} (need rotated < clean)")


def test_a4_brisque_noise_does_not_raise_score(cifar_brisque, verdict):
    clean = _mean_over(cifar_brisque, {"clean"})
    single = {c for c in REGISTRY_NAMES if c.startswith("SP0GA") or (c.startswith("GA") and c.endswith("SP0"))}
    noisy = _mean_over(cifar_brisque, single)
    verdict("A4", noisy <= clean + 1, f"GA-noised mean {noisy:.2f} vs clean mean {clean:.2f} (need <= clean + 1)")


def test_a5_coinciding_groups_bit_identical(cifar_brisque, verdict):
    groups = _groups("cifar10", "brisque", ["Avg-SP0ROx", "Avg-ROxSP0"])
    a = summarize(group_average(cifar_brisque, groups["Avg-SP0ROx"]))
    b = summarize(group_average(cifar_brisque, groups["Avg-ROxSP0"]))
    verdict("A5", a.as_row() == b.as_row(), f"Avg-SP0ROx {a.as_row()} vs Avg-ROxSP0 {b.as_row()}")


def test_a6_distribution_fit_oracles(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(SEED)
    errors = {}
    for alpha in (0.5, 1.0, 2.0, 4.0):
        errors[alpha] = abs(ggd_fit(ggd_sample(alpha, 10**5, rng)).alpha - alpha) / alpha
    x = ggd_sample(0.8, 10**5, rng)
    x = np.where(x > 0, 1.7 * x, x)
    a, b = aggd_fit(x), aggd_fit(-x)
    anti = max(abs(a.eta + b.eta), abs(a.sigma_l_sq - b.sigma_r_sq), abs(a.sigma_r_sq - b.sigma_l_sq),
               abs(a.alpha - b.alpha))
    sym = aggd_fit(ggd_sample(2.0, 10**5, rng))
    sym_err = max(abs(sym.eta), abs(sym.sigma_l_sq - sym.sigma_r_sq) / max(sym.sigma_l_sq, sym.sigma_r_sq))
    elapsed = time.perf_counter() - start
    ok = max(errors.values()) <= 0.05 and anti <= 1e-2 and sym_err <= 1e-2 and elapsed < 30
    shown = ", ".join(f"{k}:{v:.3%}" for k, v in errors.items())
    verdict("A6", ok, f"ggd rel err {shown}; aggd flip err {anti:.2e}; symmetric err {sym_err:.2e}; {elapsed:.1f}s")


def test_a7_numerical_oracles(verdict):
    rng = np.random.default_rng(SEED)
    mscn_err = max(float(np.max(np.abs(mscn_map(p) - brute_mscn(p))))
                   for p in (rng.integers(0, 256, (16, 16)).astype(np.float64) for _ in range(5)))
    q_err = 0.0
    for _ in range(1000):
        x = rng.normal(size=rng.integers(1, 60)) * 50
        s = summarize(x)
        ref = np.percentile(x, [0, 25, 50, 75, 100])
        q_err = max(q_err, float(np.max(np.abs(np.array([s.min, s.q1, s.median, s.q3, s.max]) - ref))),
                    abs(s.mean - float(np.mean(x))))
    zeros = Image(np.zeros((2, 2), dtype=np.uint8))
    hand = (psnr(zeros, Image(np.full((2, 2), 255, dtype=np.uint8))) == 0.0
            and round(psnr(zeros, Image(np.array([[16, 0], [0, 0]], dtype=np.uint8))), 2) == 30.07
            and psnr(zeros, zeros) is UNDEFINED)
    verdict("A7", mscn_err <= 1e-9 and q_err <= 1e-9 and hand,
            f"mscn max err {mscn_err:.1e}; quantile max err {q_err:.1e}; psnr hand cases {'ok' if hand else 'WRONG'}")


def _rejects(fn, data):
    try:
        fn(data)
    except DataFormatError:
        return True
    return False


def test_a8_parser_suite(verdict):
    notes = []
    mnist, _ = load_dataset(DATA, "mnist")
    cifar, _ = load_dataset(DATA, "cifar10")
    ok = len(mnist) == 5000 and len(cifar) == 1000
    notes.append(f"fixtures {len(mnist)}/{len(cifar)}")
    if REAL_DATA:
        real_m, _ = load_dataset(REAL_DATA, "mnist")
        real_c, _ = load_dataset(REAL_DATA, "cifar10")
        ok &= len(real_m) in (60_000, 70_000) and len(real_c) in (50_000, 60_000)
        notes.append(f"real {len(real_m)}/{len(real_c)}")
    else:
        notes.append("real files not provided")
    idx = bytes([0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2]) + bytes(8)
    ok &= len(parse_idx(idx)) == 2 and _rejects(parse_idx, idx[:-1]) and _rejects(parse_idx, b"\0\0\x08\x01" + idx[4:])
    ok &= _rejects(parse_cifar10_batch, bytes(3072)) and _rejects(parse_cifar10_batch, bytes([10]) + bytes(3072))
    model, ranges = load_svr_model(MODEL), load_range_file(RANGE)
    again = parse_svr_model(format_svr_model(model))
    ok &= np.array_equal(again.support_vectors, model.support_vectors) and np.array_equal(again.coefs, model.coefs)
    ok &= np.array_equal(parse_range_file(format_range_file(ranges)).maxs, ranges.maxs)
    ok &= model.support_vectors.shape[1] == 36
    notes.append(f"canonical model {model.total_sv} SVs x {model.support_vectors.shape[1]} dims")
    verdict("A8", bool(ok), "; ".join(notes))


def _bench(out, jobs):
    cfg = BenchConfig(data_dir=DATA_DIR, n=50, seed=SEED, model=MODEL, range=RANGE, out=out, jobs=jobs).validate()
    start = time.perf_counter()
    run_bench(cfg)
    return cfg, time.perf_counter() - start


def _sorted_rows(path):
    lines = path.read_text().splitlines()
    return [lines[0]] + sorted(lines[1:])


@pytest.fixture(scope="module")
def full_bench(tmp_path_factory):
    root = tmp_path_factory.mktemp("a9")
    first, elapsed = _bench(root / "first", 8)
    return first, elapsed, root


@pytest.mark.slow
def test_a9_end_to_end_determinism(full_bench, verdict):
    first, elapsed, root = full_bench
    again, _ = _bench(root / "again", 8)
    serial, serial_time = _bench(root / "serial", 1)
    same_tree = hash_tree(first.out) == hash_tree(again.out)
    csvs = [(ds, m) for ds in first.datasets for m in first.metrics]
    same_rows = all(_sorted_rows(scores_path(first, ds, m)) == _sorted_rows(scores_path(serial, ds, m))
                    for ds, m in csvs)
    same_report = hash_tree(first.out / "report") == hash_tree(serial.out / "report")
    n_rows = sum(len(read_scores_csv(scores_path(first, ds, m))) for ds, m in csvs)
    verdict("A9", same_tree and same_rows and same_report and elapsed < 600,
            f"{n_rows} scores in {elapsed:.0f}s (--jobs 8), {serial_time:.0f}s (--jobs 1); rerun tree "
            f"{'identical' if same_tree else 'DIFFERS'}; jobs 1 vs 8 {'identical' if same_rows and same_report else 'DIFFER'}")


@pytest.mark.slow
def test_a10_report_shape(full_bench, verdict):
    cfg = full_bench[0]
    tables = sorted((cfg.out / "report" / "tables").glob("*.csv"))
    figures = sorted((cfg.out / "report" / "figures").glob("*.svg"))
    expected = {t.name: t for ds in ("mnist", "cifar10") for m in ("psnr", "brisque") for t in builtin_tables(ds, m)}
    problems = []
    if len(tables) != 8 or len(figures) != 8:
        problems.append(f"{len(tables)} tables / {len(figures)} figures")
    for path in tables:
        rows = [line.split(",") for line in path.read_text().splitlines()]
        spec = expected.get(path.stem)
        if spec is None or rows[0][1:] != [g.label for g in spec.groups]:
            problems.append(f"{path.name} header")
        if [r[0] for r in rows[1:]] != list(STAT_ROWS) or any(not math.isfinite(float(v)) for r in rows[1:] for v in r[1:]):
            problems.append(f"{path.name} rows")
    if {p.stem for p in figures} != set(expected):
        problems.append("figure names")
    verdict("A10", not problems, "; ".join(problems) or "8 tables with expected headers and six stat rows, 8 figures")
