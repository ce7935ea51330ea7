import json

import pytest

from smhe.cli_io.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture
def deployment(tmp_path, capsys):
    params = tmp_path / "p.params"
    assert run(capsys, "setup", "--seed", "aa", "--N", 1024, "--out", params)[0] == 0
    for i in (1, 2):
        assert run(capsys, "keygen", "--params", params, "--seed", f"0{i}", "--index", i,
                   "--out", tmp_path / f"k{i}")[0] == 0
    return tmp_path, params


def test_setup_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "setup", "--seed", "01ff", "--N", 1024, "--out", a)
    run(capsys, "setup", "--seed", "01ff", "--N", 1024, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(capsys, "setup", "--seed", "02", "--N", 1024, "--out", b)
    assert code == 0 and json.loads(out)["N"] == 1024
    assert a.read_bytes() != b.read_bytes()


def test_setup_from_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# small ring\nN = 2**10\nt = 65537\n")
    code, out, _ = run(capsys, "setup", "--seed", "aa", "--config", cfg, "--out", tmp_path / "p")
    assert code == 0 and json.loads(out)["N"] == 1024


@pytest.mark.parametrize("mode", ["smhe", "cdks"])
def test_encrypt_add_decrypt(deployment, capsys, mode):
    d, params = deployment
    mus = {1: [3, 1, 4, 1, 5], 2: [2, 7, 1, 8, 2]}
    for i, mu in mus.items():
        argv = ["encrypt", "--params", params, "--seed", f"1{i}", "--pk", d / f"k{i}.pk",
                "--mode", mode, "--message", ",".join(map(str, mu)), "--out", d / f"c{i}"]
        if mode == "smhe":
            argv += ["--sk", d / f"k{i}.sk"]
        assert run(capsys, *argv)[0] == 0
    argv = ["add", "--params", params, "--n", 2, d / "c1.ct", d / "c2.ct", "--mode", mode,
            "--out", d / "sum.ct"]
    if mode == "smhe":
        argv += ["--pks", d / "k1.pk", d / "k2.pk", "--masks", d / "c1.mask", d / "c2.mask"]
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    assert json.loads(out)["masked"] == (mode == "smhe")
    for i in (1, 2):
        assert run(capsys, "partdec", "--params", params, "--seed", f"2{i}", "--ct", d / "sum.ct",
                   "--sk", d / f"k{i}.sk", "--out", d / f"pd{i}")[0] == 0
    code, out, _ = run(capsys, "merge", "--params", params, "--ct", d / "sum.ct",
                       d / "pd1", d / "pd2", "--count", 5)
    assert code == 0
    assert json.loads(out) == {"scheme": "bfv", "plaintext": [5, 8, 5, 9, 7]}


def test_merge_missing_party(deployment, capsys):
    d, params = deployment
    run(capsys, "encrypt", "--params", params, "--seed", "31", "--pk", d / "k1.pk", "--mode", "cdks",
        "--message", "1,2", "--out", d / "c1")
    run(capsys, "encrypt", "--params", params, "--seed", "32", "--pk", d / "k2.pk", "--mode", "cdks",
        "--message", "1,2", "--out", d / "c2")
    run(capsys, "add", "--params", params, "--n", 2, d / "c1.ct", d / "c2.ct", "--mode", "cdks",
        "--out", d / "s")
    run(capsys, "partdec", "--params", params, "--seed", "33", "--ct", d / "s", "--sk", d / "k1.sk",
        "--out", d / "pd1")
    code, out, err = run(capsys, "merge", "--params", params, "--ct", d / "s", d / "pd1")
    assert code == 1 and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["error"] == "MissingMaterialError"


def test_usage_errors(tmp_path, capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "keygen", "--params", tmp_path / "p")[0] == 2
    code, _, err = run(capsys, "setup", "--seed", "zz", "--out", tmp_path / "p")
    assert code == 2 and err


def test_encrypt_smhe_without_sk(deployment, capsys):
    d, params = deployment
    code, _, _ = run(capsys, "encrypt", "--params", params, "--seed", "01", "--pk", d / "k1.pk",
                     "--message", "1", "--out", d / "c")
    assert code == 2


def test_runtime_errors(tmp_path, capsys):
    bad = tmp_path / "junk"
    bad.write_bytes(b"not a params file")
    code, _, err = run(capsys, "keygen", "--params", bad, "--seed", "01", "--index", 1,
                       "--out", tmp_path / "k")
    assert code == 1
    assert set(json.loads(err)) == {"error", "message"}
    code, _, err = run(capsys, "keygen", "--params", tmp_path / "missing", "--seed", "01",
                       "--index", 1, "--out", tmp_path / "k")
    assert code == 1 and json.loads(err)["error"]


@pytest.mark.parametrize("mode,succeeds", [("cdks", True), ("smhe", False)])
def test_attack_demo(capsys, mode, succeeds):
    code, out, _ = run(capsys, "attack-demo", "--seed", "0a", "--mode", mode, "--N", 1024, "--d", 64)
    assert code == 0
    summary = json.loads(out.strip().splitlines()[-1])
    assert summary["attack_succeeds"] is succeeds
    assert (summary["input_head"] == summary["recovered_head"]) is succeeds


def test_simulate_deterministic_with_figures(tmp_path, capsys):
    argv = ["simulate", "--seed", "5e", "--n", 3, "--d", 300, "--N", 1024, "--no-timing",
            "--sweep", "0,0.34"]
    code, a, _ = run(capsys, *argv, "--figures", tmp_path / "fig")
    assert code == 0
    _, b, _ = run(capsys, *argv)
    assert a == b
    names = [json.loads(line)["name"] for line in a.splitlines()]
    assert names.count("summary") == 1 and names.count("elimination") == 2
    assert (tmp_path / "fig" / "phase_bytes.png").stat().st_size > 0
    assert not (tmp_path / "fig" / "phase_time.png").exists()


def test_simulate_config_file(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("n = 4\nm = 2\nd = 200\nN = 1024\nrounds = 2\nweights = 1,1,2,2\n")
    code, out, err = run(capsys, "simulate", "--config", cfg, "--out", tmp_path / "r.jsonl")
    assert code == 0, err
    recs = [json.loads(x) for x in (tmp_path / "r.jsonl").read_text().splitlines()]
    summaries = [r for r in recs if r["name"] == "summary"]
    assert [s["benign"] for s in summaries] == [[1, 2], [1, 2]]
    assert all(r["wall_ns"] is not None for r in recs if r["name"] != "summary")


def test_bench(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "--seed", "bb", "--N", 1024, "--parties", "2,3",
                       "--figures", tmp_path / "fig")
    assert code == 0
    rows = [json.loads(x) for x in out.splitlines()]
    sizes = [r["bytes"] for r in rows if r["name"] == "expanded_size"]
    assert sizes[1] > sizes[0]
    assert (tmp_path / "fig" / "expanded_size.png").exists()
    assert (tmp_path / "fig" / "op_time.png").exists()
