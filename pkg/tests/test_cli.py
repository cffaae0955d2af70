import csv
import json
import subprocess
import sys

import pytest

from popstab.cli import main


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_writes_outputs(tmp_path, capsys):
    code = main(["simulate", "--protocol", "stable", "--scenario", "fig2", "--n", "32", "--seed", "7",
                 "--fractions", "0.5,0.9", "--out-dir", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("scenario=fig2_adversarial n=32 t_valid=") and "silent_confirmed=true" in out
    runs = _rows(tmp_path / "runs.csv")
    assert len(runs) == 1 and runs[0]["t_frac_0.5"] and runs[0]["silent_confirmed"] == "true"
    assert list(runs[0]) == ["scenario", "n", "seed", "replica", "budget", "interactions_used", "t_valid",
                             "silent_confirmed", "num_resets", "t_frac_0.5", "t_frac_0.9"]
    ts = _rows(tmp_path / "timeseries.csv")
    assert ts and int(ts[-1]["ranked_count"]) == 32
    side = json.loads((tmp_path / "effective_config.json").read_text())
    assert side["n"] == 32 and side["seed"] == 7 and side["scenario"] == "fig2_adversarial"


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--n", "24", "--scenario", "random", "--seed", "3", "--out-dir", str(d)]) == 0
    for name in ("runs.csv", "timeseries.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    sa, sb = (json.loads((d / "effective_config.json").read_text()) for d in (a, b))
    assert sa.pop("out_dir") != sb.pop("out_dir") and sa == sb


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--n", "1"],
        ["simulate", "--protocol", "nonss", "--scenario", "fig2"],
        ["simulate", "--scenario", "canonical"],
        ["simulate", "--n", "8", "--fractions", "0,1"],
        ["simulate", "--n", "8", "--budget", "0"],
        ["simulate", "--protocol", "nonss", "--n", "8", "--l-max", "3"],
        ["simulate", "--scenario", "duplicate_ranks", "--n", "4", "--dup-rank", "9"],
        ["sweep", "--replicas", "0"],
        ["sweep", "--n-list", "1,4"],
        ["audit-states", "--n", "1"],
        ["audit-states", "--sweep", "64:8"],
    ],
)
def test_invalid_arguments_exit_2(argv, tmp_path, capsys):
    assert main(argv + ["--out-dir", str(tmp_path)] if argv[0] != "audit-states" else argv) == 2
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--n", "many"])
    assert exc.value.code == 2


def test_budget_exhausted_exit_1(tmp_path):
    assert main(["simulate", "--n", "16", "--budget", "1", "--out-dir", str(tmp_path)]) == 1
    assert _rows(tmp_path / "runs.csv")[0]["t_valid"] == ""


def test_sweep_row_count(tmp_path):
    code = main(["sweep", "--n-list", "16,32,64", "--replicas", "2", "--fractions", "0.5,0.9,1.0",
                 "--seed", "1", "--out-dir", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert len(rows) == 3 * 3 * 2
    assert len(_rows(tmp_path / "runs.csv")) == 6
    side = json.loads((tmp_path / "effective_config.json").read_text())
    assert side["scenario"] == "fig3_leader"


def test_sweep_defaults_use_standard_constants(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_list": [16], "replicas": 1}))
    assert main(["sweep", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    side = json.loads((tmp_path / "effective_config.json").read_text())
    assert side.get("c_wait") in (None, 2.0) and side.get("c_live") in (None, 4.0)


def test_config_merge_flags_win(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 16, "seed": 5, "scenario": "all_electing"}))
    assert main(["simulate", "--config", str(cfg), "--seed", "6", "--out-dir", str(tmp_path)]) == 0
    side = json.loads((tmp_path / "effective_config.json").read_text())
    assert side["n"] == 16 and side["seed"] == 6 and side["scenario"] == "all_electing"


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 16, "colour": "red"}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("POPSTAB_SEED", "41")
    assert main(["simulate", "--n", "16", "--out-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "effective_config.json").read_text())["seed"] == 41
    monkeypatch.setenv("POPSTAB_SEED", "abc")
    assert main(["simulate", "--n", "16", "--out-dir", str(tmp_path)]) == 2


def test_audit_states(capsys):
    assert main(["audit-states", "--protocol", "nonss", "--n", "256"]) == 0
    assert "states=284" in capsys.readouterr().out
    assert main(["audit-states", "--protocol", "stable", "--n", "16"]) == 0
    out = capsys.readouterr().out
    total = out.split("states=")[1].split()[0]
    assert f"enumerated={total}" in out
    assert main(["audit-states", "--protocol", "stable", "--sweep", "128:8192"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 7
    ratios = [float(line.rsplit("=", 1)[1]) for line in lines]
    assert max(ratios) < 100


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "popstab", "audit-states", "--protocol", "nonss", "--n", "1024"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "states=1058" in proc.stdout
