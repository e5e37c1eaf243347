import logging
import subprocess
import sys

import pytest

from conftest import DATA, MODEL, RANGE
from noisyiqa.bench import hash_tree
from noisyiqa.cli import build_config, main, make_parser
from noisyiqa.perturb import REGISTRY_NAMES
from noisyiqa.stats import read_scores_csv


def _args(out, *extra, n=3, seed=1, quiet=True):
    return ["--data-dir", str(DATA), "--out", str(out), "--n", str(n), "--seed", str(seed),
            "--model", str(MODEL), "--range", str(RANGE), *(["-q"] if quiet else []), *extra]


def run(stage, out, *extra, **kw):
    return main([stage, *_args(out, *extra, **kw)])


def test_sample_rejects_zero(tmp_path):
    assert run("sample", tmp_path, n=0) == 2


def test_sample_is_repeatable(tmp_path):
    assert run("sample", tmp_path / "a", "--dataset", "mnist") == 0
    assert run("sample", tmp_path / "b", "--dataset", "mnist") == 0
    a = (tmp_path / "a" / "mnist" / "manifest.json").read_bytes()
    assert a == (tmp_path / "b" / "mnist" / "manifest.json").read_bytes()
    assert len(list((tmp_path / "a" / "mnist" / "pristine").iterdir())) == 3


def test_corrupt_full_and_filtered(tmp_path):
    assert run("sample", tmp_path, "--dataset", "cifar10") == 0
    assert run("corrupt", tmp_path, "--dataset", "cifar10") == 0
    tree = tmp_path / "cifar10" / "corrupted"
    assert len(list(tree.iterdir())) == 69 * 3
    first = hash_tree(tree)
    assert run("corrupt", tmp_path, "--dataset", "cifar10") == 0
    assert hash_tree(tree) == first
    assert run("corrupt", tmp_path, "--dataset", "cifar10", "--conditions", "SP0.1GA0.2") == 0
    assert sorted(p.name.split("_", 2)[2] for p in tree.iterdir()) == ["SP0.1GA0.2.png"] * 3


def test_clean_condition_copies_pristine(tmp_path):
    assert run("sample", tmp_path, "--dataset", "mnist") == 0
    assert run("corrupt", tmp_path, "--dataset", "mnist", "--conditions", "clean") == 0
    for p in (tmp_path / "mnist" / "pristine").iterdir():
        copy = tmp_path / "mnist" / "corrupted" / p.name.replace(".png", "_clean.png")
        assert copy.read_bytes() == p.read_bytes()


def test_corrupt_without_manifest(tmp_path):
    assert run("corrupt", tmp_path, "--dataset", "mnist") == 4


def test_score_rows_and_na(tmp_path):
    assert run("sample", tmp_path, "--dataset", "mnist") == 0
    assert run("corrupt", tmp_path, "--dataset", "mnist") == 0
    assert run("score", tmp_path, "--dataset", "mnist", "--metric", "psnr") == 0
    records = read_scores_csv(tmp_path / "mnist" / "scores_psnr.csv")
    assert len(records) == 3 * 69
    assert [r.condition for r in records[:69]] == list(REGISTRY_NAMES)
    assert all(str(r.score) == "NA" for r in records if r.condition == "clean")


def test_score_parallel_matches_serial(tmp_path):
    assert run("sample", tmp_path, "--dataset", "cifar10") == 0
    assert run("corrupt", tmp_path, "--dataset", "cifar10") == 0
    path = tmp_path / "cifar10" / "scores_brisque.csv"
    assert run("score", tmp_path, "--dataset", "cifar10", "--metric", "brisque", "--jobs", "1") == 0
    serial = path.read_bytes()
    assert run("score", tmp_path, "--dataset", "cifar10", "--metric", "brisque", "--jobs", "4") == 0
    assert sorted(path.read_bytes().splitlines()) == sorted(serial.splitlines())


def test_score_needs_model(tmp_path):
    assert main(["score", "--data-dir", str(DATA), "--out", str(tmp_path), "--metric", "brisque", "-q"]) == 2


def test_bad_model_file_is_a_format_error(tmp_path):
    bad = tmp_path / "model"
    bad.write_text("svm_type c_svc\nkernel_type rbf\ngamma 1\ntotal_sv 1\nrho 0\nSV\n1 1:1\n")
    assert run("sample", tmp_path, "--dataset", "mnist") == 0
    assert run("corrupt", tmp_path, "--dataset", "mnist", "--conditions", "clean") == 0
    assert run("score", tmp_path, "--dataset", "mnist", "--metric", "brisque", "--conditions", "clean",
               "--model", str(bad)) == 3


def test_tampered_upstream_is_refused(tmp_path):
    assert run("sample", tmp_path, "--dataset", "mnist") == 0
    assert run("corrupt", tmp_path, "--dataset", "mnist", "--conditions", "SP0.1GA0") == 0
    victim = next((tmp_path / "mnist" / "corrupted").iterdir())
    victim.write_bytes(victim.read_bytes() + b"x")
    assert run("score", tmp_path, "--dataset", "mnist", "--metric", "psnr", "--conditions", "SP0.1GA0") == 4


def test_report_needs_complete_scores(tmp_path):
    assert run("report", tmp_path, "--dataset", "mnist", "--metric", "psnr") == 4
    assert run("sample", tmp_path, "--dataset", "mnist") == 0
    assert run("corrupt", tmp_path, "--dataset", "mnist", "--conditions", "SP0.1GA0") == 0
    assert run("score", tmp_path, "--dataset", "mnist", "--metric", "psnr", "--conditions", "SP0.1GA0") == 0
    assert run("report", tmp_path, "--dataset", "mnist", "--metric", "psnr") == 4


def test_bench_full_tree_and_resume(tmp_path, caplog):
    out = tmp_path / "run"
    assert run("bench", out) == 0
    tables = sorted(p.name for p in (out / "report" / "tables").glob("*.csv"))
    figures = sorted(p.name for p in (out / "report" / "figures").glob("*.svg"))
    assert len(tables) == len(figures) == 8
    assert "cifar10_brisque_sp_ga.csv" in tables
    before = hash_tree(out)

    with caplog.at_level(logging.INFO, logger="noisyiqa"):
        assert main(["bench", *_args(out, quiet=False)]) == 0
    assert caplog.text.count("is up to date") == 9
    assert hash_tree(out) == before


def test_bench_resumes_after_corrupt(tmp_path, caplog):
    out = tmp_path / "run"
    for stage in ("sample", "corrupt"):
        assert run(stage, out, "--dataset", "mnist") == 0
    stamp = (out / ".stamps" / "corrupt-mnist.json").read_bytes()
    with caplog.at_level(logging.INFO, logger="noisyiqa"):
        assert main(["bench", *_args(out, "--dataset", "mnist", "--metric", "psnr", quiet=False)]) == 0
    assert "corrupt-mnist is up to date" in caplog.text
    assert "scored" in caplog.text
    assert (out / ".stamps" / "corrupt-mnist.json").read_bytes() == stamp


def test_bench_seed_change_rebuilds(tmp_path, caplog):
    out = tmp_path / "run"
    args = ("--dataset", "mnist", "--metric", "psnr")
    assert run("bench", out, *args) == 0
    old = (out / "mnist" / "scores_psnr.csv").read_bytes()
    with caplog.at_level(logging.INFO, logger="noisyiqa"):
        assert main(["bench", *_args(out, *args, seed=2, quiet=False)]) == 0
    assert "up to date" not in caplog.text
    assert (out / "mnist" / "scores_psnr.csv").read_bytes() != old


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "bench.conf"
    cfg.write_text(f"# run settings\ndataset = mnist\nn = 2\nseed = 4\ndata-dir = {DATA}\nout = {tmp_path / 'a'}\n")
    assert main(["sample", "--config", str(cfg), "-q"]) == 0
    assert len(list((tmp_path / "a" / "mnist" / "pristine").iterdir())) == 2
    assert main(["sample", "--config", str(cfg), "--n", "5", "-q"]) == 0
    assert len(list((tmp_path / "a" / "mnist" / "pristine").iterdir())) == 5


@pytest.mark.parametrize("text", ["colour = red\n", "n = lots\n", "gauss_mode = sigma\n"])
def test_bad_config_values(tmp_path, text):
    cfg = tmp_path / "bad.conf"
    cfg.write_text(text)
    assert main(["sample", "--config", str(cfg), "--data-dir", str(DATA), "--out", str(tmp_path), "-q"]) == 2


@pytest.mark.parametrize("extra", [["--seed", "-1"], ["--dataset", "svhn"], ["--conditions", "SP0.1XX"],
                                   ["--jobs", "0"], ["--metric", "ssim"]])
def test_bad_flags(tmp_path, extra):
    assert run("sample", tmp_path, *extra) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "noisyiqa", "sample", *_args(tmp_path, "--dataset", "mnist")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "mnist" / "manifest.json").is_file()


def test_exclude_zero_from_flag_and_file(tmp_path):
    parser = make_parser()
    assert build_config(parser.parse_args(["report"])).include_zero
    assert not build_config(parser.parse_args(["report", "--exclude-zero"])).include_zero
    cfg = tmp_path / "c.conf"
    cfg.write_text("exclude_zero = yes\n")
    assert not build_config(parser.parse_args(["report", "--config", str(cfg)])).include_zero
    cfg.write_text("exclude_zero = maybe\n")
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path), "-q"]) == 2
