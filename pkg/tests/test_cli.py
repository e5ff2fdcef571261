import csv
import json
import subprocess
import sys
import time

import pytest

from digof.cli import main


def run(capsys, *argv):
    code = main([str(x) for x in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def planted(tmp_path, capsys):
    out = tmp_path / "net"
    code, _, _ = run(capsys, "generate", "--n", 300, "--ks", 2, "--kr", 2, "--rho", 0.5, "--seed", 7, "-o", out)
    assert code == 0
    return out


def test_generate(tmp_path, capsys):
    out = tmp_path / "net"
    code, stdout, _ = run(capsys, "generate", "--n", 1000, "--ks", 2, "--kr", 3, "--rho", 0.1, "--seed", 7, "-o", out)
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["edges.tsv", "spec.json"]
    doc = json.loads(stdout)
    assert doc["meta"]["seed"] == 7 and doc["separation"] == pytest.approx(0.07)
    spec = json.loads((out / "spec.json").read_text())
    assert spec["ks"] == 2 and spec["kr"] == 3 and len(spec["gs"]) == 1000


def test_generate_reproducible(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "generate", "--n", 100, "--ks", 2, "--kr", 2, "--seed", 3, "-o", tmp_path / name)
    assert (tmp_path / "a" / "edges.tsv").read_bytes() == (tmp_path / "b" / "edges.tsv").read_bytes()


def test_generate_degenerate_warning(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--n", 200, "--ks", 5, "--kr", 3, "--rho", 0.1, "-o", tmp_path / "x")
    assert code == 0 and "separation is 0" in err


def test_generate_from_block_file(tmp_path, capsys):
    bfile = tmp_path / "b.json"
    bfile.write_text(json.dumps([[0.1, 0.9, 0.4, 0.1], [0.7, 0.1, 0.6, 0.3]]))
    code, stdout, _ = run(capsys, "generate", "--n", 100, "--b-file", bfile, "--rho", 0.5, "-o", tmp_path / "x")
    assert code == 0
    # b is stored row-major
    assert json.loads((tmp_path / "x" / "spec.json").read_text())["b"][1] == pytest.approx(0.45)


def test_generate_missing_n(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["generate", "--ks", "2", "--kr", "2", "-o", str(tmp_path)])
    assert info.value.code == 1


def test_generate_missing_ks(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--n", 10, "-o", tmp_path)
    assert code == 1 and "--ks" in err


def test_generate_bad_rho(tmp_path, capsys):
    code, _, _ = run(capsys, "generate", "--n", 10, "--ks", 1, "--kr", 1, "--rho", 0, "-o", tmp_path)
    assert code == 2


def test_gof(planted, capsys):
    code, stdout, _ = run(capsys, "gof", "--input", planted / "edges.tsv", "--nodes", 300, "--ks0", 2, "--kr0", 2)
    doc = json.loads(stdout)
    assert code == 0 and doc["ks0"] == 2 and doc["statistic"] == pytest.approx(doc["sigma1"] - 2)


def test_estimate_with_trace(planted, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code, stdout, _ = run(capsys, "estimate", "--spec", planted / "spec.json", "--sample-seed", 7, "--method", "rdigof",
                          "--trace", trace)
    doc = json.loads(stdout)
    assert code == 0 and (doc["ks_hat"], doc["kr_hat"]) == (2, 2)
    assert set(doc) >= {"ks_hat", "kr_hat", "m_star", "stop_reason", "meta"}
    lines = trace.read_text().splitlines()
    assert lines[0].startswith("# digof ") and "config_hash=" in lines[0]
    assert lines[1] == "m,ks,kr,t_hat,ratio"


def test_spec_sampling_matches_generate(planted, capsys):
    by_file = run(capsys, "gof", "--input", planted / "edges.tsv", "--nodes", 300, "--ks0", 2, "--kr0", 2)[1]
    by_spec = run(capsys, "gof", "--spec", planted / "spec.json", "--sample-seed", 7, "--ks0", 2, "--kr0", 2)[1]
    assert json.loads(by_file)["statistic"] == json.loads(by_spec)["statistic"]


def test_estimate_digof_null(tmp_path, capsys):
    run(capsys, "generate", "--n", 400, "--ks", 1, "--kr", 1, "--rho", 0.1, "--seed", 2, "-o", tmp_path / "n")
    code, stdout, _ = run(capsys, "estimate", "--input", tmp_path / "n" / "edges.tsv", "--method", "digof",
                          "--epsilon", 0.2)
    doc = json.loads(stdout)
    assert code == 0 and (doc["ks_hat"], doc["kr_hat"]) == (1, 1)


def test_estimate_unknown_method(planted):
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--input", str(planted / "edges.tsv"), "--method", "bic"])
    assert info.value.code == 1


def test_missing_input_file(tmp_path, capsys):
    code, _, err = run(capsys, "estimate", "--input", tmp_path / "nope.tsv")
    assert code == 2 and "data error" in err


def _write_config(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_experiment_size_power(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"n_values": [200], "pairs": [[2, 3]], "rho_values": [0.3], "replications": 1})
    out = tmp_path / "report.csv"
    code, stdout, _ = run(capsys, "experiment", "size-power", "--config", cfg, "-o", out, "--jobs", 1)
    assert code == 0 and "size-power" in stdout
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# digof ")
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 6 and {r["param"] for r in rows} == {"1x1", "1x2", "1x3", "2x1", "2x2", "2x3"}
    sidecar = json.loads(out.with_suffix(".json").read_text())
    assert sidecar["config"]["replications"] == 1


def test_experiment_smoke_fast(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"n_values": [400], "pairs": [[2, 3]], "rho_values": [0.1], "replications": 1})
    start = time.perf_counter()
    code, _, _ = run(capsys, "experiment", "accuracy", "--config", cfg, "-o", tmp_path / "r.csv")
    assert code == 0 and time.perf_counter() - start < 10


def test_experiment_jobs_do_not_change_output(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"n_values": [150], "pairs": [[2, 2]], "rho_values": [0.4], "replications": 2})
    for jobs in (1, 2):
        run(capsys, "experiment", "null-convergence", "--config", cfg, "-o", tmp_path / f"r{jobs}.csv", "--jobs", jobs)
    assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()


def test_experiment_bad_config(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"rho_values": [0], "replications": 1})
    code, _, err = run(capsys, "experiment", "accuracy", "--config", cfg, "-o", tmp_path / "r.csv")
    assert code == 2 and "rho_values" in err


def test_ingest(tmp_path, capsys):
    src = tmp_path / "out.test"
    src.write_text("% sym unweighted\n1 2\n2 3\n3 1\n3 3\n7 8\n")
    code, stdout, _ = run(capsys, "ingest", "--input", src, "--format", "konect", "-o", tmp_path / "clean.tsv")
    doc = json.loads(stdout)
    assert code == 0 and doc["n"] == 3 and doc["self_loops"] == 1 and doc["components"] == 2
    assert (tmp_path / "clean.tsv").read_text() == "1\t2\n2\t3\n3\t1\n"


def test_trace(planted, tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code, stdout, _ = run(capsys, "trace", "--input", planted / "edges.tsv", "--kmax", 3, "-o", out)
    assert code == 0 and json.loads(stdout)["accepted"] == [2, 2]
    assert len(out.read_text().splitlines()) == 2 + 9


def test_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "digof.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("digof ")
