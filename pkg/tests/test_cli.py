import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from fsketch.cli import run
from fsketch.data_io import load_sketches


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def synth(tmp_path, capsys):
    path = tmp_path / "data.txt"
    assert call(capsys, "synth", "--out", path, "--points", 50, "--n", 2000, "--sigma", 40, "--c", 6,
                "--seed", 1)[0] == 0
    return path


def test_stats_on_docword(tmp_path, capsys):
    path = tmp_path / "docword.txt"
    path.write_text("1\n3\n1\n1 2 5\n")
    code, out, err = call(capsys, "stats", "--input", path, "--format", "docword")
    assert code == 0 and err == ""
    assert out.strip() == "n=3 c=5 sigma=1 count=1"


def test_stats_three_entries(tmp_path, capsys):
    path = tmp_path / "docword.txt"
    path.write_text("1\n3\n3\n1 1 5\n1 2 2\n1 3 1\n")
    assert call(capsys, "stats", "--input", path, "--format", "docword")[1].strip() == "n=3 c=5 sigma=3 count=1"


def test_stats_reports_sigma_as_max_nnz(tmp_path, capsys):
    path = tmp_path / "docword.txt"
    path.write_text("2\n3\n2\n1 1 5\n2 3 2\n")
    assert call(capsys, "stats", "--input", path, "--format", "docword")[1].strip() == "n=3 c=5 sigma=1 count=2"


def test_noop_update_is_byte_identical(synth, tmp_path, capsys):
    sk = tmp_path / "s.fsk"
    assert call(capsys, "sketch", "--input", synth, "--out", sk, "--d", 64, "--seed", 9, "--k", 3)[0] == 0
    muts = tmp_path / "m.txt"
    muts.write_text("1 5 0 0\n3 17 2 2\n")
    out = tmp_path / "u.fsk"
    assert call(capsys, "update", "--input", sk, "--mutations", muts, "--out", out)[0] == 0
    assert out.read_bytes() == sk.read_bytes()


def test_update_then_estimate_matches_resketch(synth, tmp_path, capsys):
    sk = tmp_path / "s.fsk"
    call(capsys, "sketch", "--input", synth, "--out", sk, "--d", 80, "--seed", 4)
    lines = synth.read_text().splitlines()
    header, rows = lines[0], lines[1:]
    first = dict(tok.split(":") for tok in rows[0].split())
    idx, old = next(iter(first.items()))
    new = 1 if int(old) != 1 else 2
    first[idx] = str(new)
    first["1999"] = "3"
    rows[0] = " ".join(f"{k}:{v}" for k, v in sorted(first.items(), key=lambda t: int(t[0])))
    mutated = tmp_path / "mutated.txt"
    mutated.write_text("\n".join([header] + rows) + "\n")
    muts = tmp_path / "m.txt"
    muts.write_text(f"1 {idx} {old} {new}\n1 1999 0 3\n")
    updated = tmp_path / "u.fsk"
    assert call(capsys, "update", "--input", sk, "--mutations", muts, "--out", updated)[0] == 0
    fresh = tmp_path / "f.fsk"
    call(capsys, "sketch", "--input", mutated, "--out", fresh, "--d", 80, "--seed", 4, "--sigma", 40)
    assert np.array_equal(load_sketches(updated).cells, load_sketches(fresh).cells)
    a = call(capsys, "estimate", "--input", updated, "--sigma", 40)[1]
    b = call(capsys, "estimate", "--input", fresh, "--sigma", 40)[1]
    assert a == b and len(a.splitlines()) == 2 + 50 * 49 // 2


def test_estimate_columns(synth, tmp_path, capsys):
    sk = tmp_path / "s.fsk"
    call(capsys, "sketch", "--input", synth, "--out", sk)
    pairs = tmp_path / "pairs.txt"
    pairs.write_text("1 2\n5 5\n")
    code, out, _ = call(capsys, "estimate", "--input", sk, "--pairs", pairs)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO("\n".join(out.splitlines()[1:]))))
    assert [(r["i"], r["j"]) for r in rows] == [("1", "2"), ("5", "5")]
    assert float(rows[1]["h_hat"]) == 0.0 and rows[1]["f"] == "0"
    assert out.startswith("# fsketch")


def test_rmse_one_row_per_method(synth, tmp_path, capsys):
    out = tmp_path / "rmse.csv"
    assert call(capsys, "rmse", "--input", synth, "--dims", 100, "--out", out)[0] == 0
    text = out.read_text().splitlines()
    assert text[0].startswith("# fsketch") and "seed=0" in text[0]
    rows = list(csv.DictReader(io.StringIO("\n".join(text[1:]))))
    assert sorted(r["method"] for r in rows) == sorted(["fsketch", "fh", "sh", "ohe-binsketch-PROXY"])
    assert all(r["dim"] == "100" and r["metric"] == "rmse" for r in rows)


@pytest.mark.parametrize("command", ["rmse", "search", "cluster", "variance"])
def test_sweeps_are_reproducible(synth, tmp_path, capsys, command):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code, _, err = call(capsys, command, "--input", synth, "--dims", "32,64", "--seed", 3, "--out", path,
                            "--topk", 5, "--query-frac", 0.1, "--repeats", 5, "--clusters", 3)
        assert code == 0, err
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_sketch_is_reproducible(synth, tmp_path, capsys):
    a, b = tmp_path / "a.fsk", tmp_path / "b.fsk"
    call(capsys, "sketch", "--input", synth, "--out", a, "--seed", 2)
    call(capsys, "sketch", "--input", synth, "--out", b, "--seed", 2)
    assert a.read_bytes() == b.read_bytes()


class TestErrors:
    def test_malformed_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("1\n3\n2\n1 1 5\n")
        out = tmp_path / "out.csv"
        code, stdout, err = call(capsys, "rmse", "--input", bad, "--format", "docword", "--out", out)
        assert code != 0 and stdout == ""
        assert len(err.strip().splitlines()) == 1 and err.startswith("error:")
        assert not out.exists()

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = call(capsys, "stats", "--input", tmp_path / "nope.txt")
        assert code == 1 and err.count("\n") == 1

    def test_bad_prime(self, synth, tmp_path, capsys):
        out = tmp_path / "s.fsk"
        code, _, err = call(capsys, "sketch", "--input", synth, "--out", out, "--p", 10)
        assert code == 2 and "not prime" in err and not out.exists()

    def test_usage_error(self, capsys):
        code, _, err = call(capsys, "rmse")
        assert code == 2 and err.count("\n") == 1

    def test_bad_mutation_leaves_no_output(self, synth, tmp_path, capsys):
        sk = tmp_path / "s.fsk"
        call(capsys, "sketch", "--input", synth, "--out", sk)
        muts = tmp_path / "m.txt"
        muts.write_text("1 5 0 1\n99 1 0 1\n")
        out = tmp_path / "u.fsk"
        code, _, err = call(capsys, "update", "--input", sk, "--mutations", muts, "--out", out)
        assert code == 2 and "m.txt:2" in err and not out.exists()


def test_console_entry_point(tmp_path):
    path = tmp_path / "docword.txt"
    path.write_text("1\n3\n1\n1 2 4\n")
    res = subprocess.run([sys.executable, "-m", "fsketch.cli", "stats", "--input", str(path), "--format", "docword"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "n=3 c=4 sigma=1 count=1"
