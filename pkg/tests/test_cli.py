import json

import pytest

from shallow_sampler.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_tvd_majmod(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "tvd", "--circuit", "majmod", "--n", "5", "--p", "3", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["experiment"] == "tvd"
    assert rep["metrics"]["tvd"] == pytest.approx(0.20230376, abs=1e-8)


def test_bound_asymptote(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "bound", "--p", "101", "--out", str(tmp_path))
    assert code == 0
    assert json.loads(out)["metrics"]["asymptote"] == pytest.approx(0.1866406, abs=1e-7)


def test_simulate_writes_artifacts(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "simulate", "--circuit", "majmod", "--n", "5", "--p", "3",
                           "--shots", "200", "--seed", "4", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert len(rep["artifacts"]) == 2
    pmf_file = tmp_path / "simulate_majmod_n5.csv"
    assert pmf_file.read_text().splitlines()[0] == "bitstring,probability"
    samples = (tmp_path / "samples_majmod_n5_seed4.csv").read_text().splitlines()
    assert samples[0] == "bitstring" and len(samples) == 201


def test_json_format(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "simulate", "--circuit", "even", "--n", "3", "--format", "json", "--out", str(tmp_path))
    assert code == 0
    [path] = json.loads(out)["artifacts"]
    assert path.endswith(".json")
    # residue tables stay CSV whatever the format flag says
    _, out, _ = run_cli(capsys, "modp", "--t", "9", "--p", "3", "--format", "json", "--out", str(tmp_path))
    assert json.loads(out)["artifacts"][0].endswith(".csv")


def test_dry_run_writes_nothing(capsys, tmp_path):
    target = tmp_path / "nothing"
    code, out, _ = run_cli(capsys, "simulate", "--circuit", "pmghz", "--n", "5", "--dry-run", "--out", str(target))
    assert code == 0
    rep = json.loads(out)
    assert rep["metrics"]["dry_run"] is True and rep["artifacts"] == []
    assert not target.exists()


def test_errors_exit_2_with_json(capsys, tmp_path):
    code, out, err = run_cli(capsys, "tvd", "--circuit", "majmod", "--n", "5", "--p", "4", "--out", str(tmp_path))
    assert code == 2 and out == ""
    payload = json.loads(err)
    assert payload["error"] == "ValueError" and "prime" in payload["message"]
    code, _, err = run_cli(capsys, "simulate", "--circuit", "majmod")
    assert code == 2 and "--n" in json.loads(err)["message"]


def test_threads_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SHALLOW_SAMPLER_THREADS", "3")
    _, out, _ = run_cli(capsys, "modp", "--t", "5", "--p", "3", "--out", str(tmp_path))
    assert json.loads(out)["metrics"]["threads"] == 3
    _, out, _ = run_cli(capsys, "modp", "--t", "5", "--p", "3", "--threads", "2", "--out", str(tmp_path))
    assert json.loads(out)["metrics"]["threads"] == 2
