"""End-to-end coverage of the command line workflows on small specs."""

from __future__ import annotations

import copy
import json

import pytest

from satqlink import read_profile, read_sim_csv
from satqlink.cli import main

NICE = {"name": "nice", "latitude_deg": 43.7034, "longitude_deg": 7.2663}
PARIS = {"name": "paris", "latitude_deg": 48.8566, "longitude_deg": 2.3522}

SINGLE = {
    "name": "single-nice",
    "stations": [NICE],
    "satellite": {
        "orbit_altitude_m": 500e3,
        "orbit_inclination_deg": 97.4,
        "raan_deg": 14.482407753297018,
        "phase_at_epoch_deg": 21.400766963231522,
        "memory_slots": 10,
    },
    "optics": {"wavelength_m": 1.55e-6, "zenith_atmospheric_transmission": 0.85},
    "pass": {"epoch": "2026-03-21T10:00:00Z", "duration_s": 300, "step_s": 1.0},
    "run": {"policy": "single", "seeds": 2, "bin_width_s": 1.0},
}

DUAL = {
    "name": "dual-small",
    "stations": [NICE, PARIS],
    "satellite": SINGLE["satellite"],
    "optics": SINGLE["optics"],
    "pass": {"epoch": "2026-03-21T10:00:00Z", "duration_s": 400, "step_s": 1.0},
    "run": {"policy": "dynamic", "seeds": 2, "capture_rounds": True},
}


def write_spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture
def single_spec(tmp_path):
    return write_spec(tmp_path, SINGLE)


@pytest.fixture
def dual_spec(tmp_path):
    return write_spec(tmp_path, DUAL)


def test_usage_errors_exit_2(single_spec):
    assert main([]) == 2
    assert main(["rate"]) == 2
    assert main(["rate", "--spec", single_spec, "--policy", "bogus"]) == 2


def test_unknown_key_cites_path(tmp_path, capsys):
    doc = copy.deepcopy(SINGLE)
    doc["run"]["sede"] = 1
    assert main(["rate", "--spec", write_spec(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert "spec.run.sede" in capsys.readouterr().err


def test_zero_step_rejected(tmp_path):
    doc = copy.deepcopy(SINGLE)
    doc["pass"]["step_s"] = 0.0
    assert main(["rate", "--spec", write_spec(tmp_path, doc), "--out", str(tmp_path)]) == 2


def test_broken_json_exit_3(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "x",\n  oops\n}', encoding="utf-8")
    assert main(["rate", "--spec", str(path), "--out", str(tmp_path)]) == 3
    assert "line 2" in capsys.readouterr().err


def test_missing_spec_file_exit_3(tmp_path):
    assert main(["rate", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 3


def test_gen_pass_idempotent(single_spec, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["gen-pass", "--spec", single_spec, "--out", str(out)]) == 0
    path = out / "pass_nice.csv"
    first = path.read_bytes()
    profile = read_profile(path)
    assert profile.station == "nice"
    assert profile.visible.any()
    assert main(["gen-pass", "--spec", single_spec, "--out", str(out)]) == 0
    assert path.read_bytes() == first


def test_gen_pass_station_selection(dual_spec, tmp_path):
    out = tmp_path / "out"
    # ambiguous without --station on a two-station spec
    assert main(["gen-pass", "--spec", dual_spec, "--out", str(out)]) == 2
    assert main(["gen-pass", "--spec", dual_spec, "--out", str(out), "--station", "paris"]) == 0
    assert (out / "pass_paris.csv").exists()
    assert main(["gen-pass", "--spec", dual_spec, "--out", str(out), "--station", "lyon"]) == 2


def test_gen_pass_warns_when_never_visible(tmp_path, capsys):
    doc = copy.deepcopy(SINGLE)
    doc["pass"]["duration_s"] = 30
    out = tmp_path / "out"
    assert main(["gen-pass", "--spec", write_spec(tmp_path, doc), "--out", str(out)]) == 0
    assert "never sees the satellite" in capsys.readouterr().err
    assert (out / "pass_nice.csv").exists()


def test_rate_single_drift_cap(single_spec, tmp_path):
    dirs = {name: tmp_path / name for name in ("on", "off", "small_on", "small_off")}
    for name, drift in (("on", "on"), ("off", "off")):
        args = ["rate", "--spec", single_spec, "--out", str(dirs[name]),
                "--m-sat", "100", "--drift", drift]
        assert main(args) == 0
        small = ["rate", "--spec", single_spec, "--out", str(dirs["small_" + name]),
                 "--drift", drift]
        assert main(small) == 0
    read = lambda d: (d / "rate_nice.csv").read_bytes()
    # the train cap binds at 100 slots but 10 slots always fit the window
    assert read(dirs["on"]) != read(dirs["off"])
    assert read(dirs["small_on"]) == read(dirs["small_off"])
    header = read(dirs["on"]).decode().splitlines()[0]
    assert header == "t_s,rate_pairs_per_s"


def test_rate_dual_columns(dual_spec, tmp_path):
    out = tmp_path / "out"
    assert main(["rate", "--spec", dual_spec, "--out", str(out)]) == 0
    lines = (out / "rate_dual.csv").read_text().splitlines()
    assert lines[0] == "t_s,rate_pairs_per_s,m_A,m_B"
    active = 0
    for line in lines[1:]:
        t_s, rate, m_a, m_b = line.split(",")
        if float(rate) > 0.0:
            active += 1
            assert int(m_a) + int(m_b) == 10
    assert active >= 100


def test_allocate_outputs(dual_spec, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["allocate", "--spec", dual_spec, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "static_split=" in stdout
    alloc = json.loads((out / "allocation.json").read_text())
    assert sum(alloc["static_split"]) == 10
    first = (out / "allocation.csv").read_bytes()
    assert main(["allocate", "--spec", dual_spec, "--out", str(out)]) == 0
    assert (out / "allocation.csv").read_bytes() == first


def test_simulate_deterministic_across_workers(dual_spec, tmp_path):
    seq, par = tmp_path / "seq", tmp_path / "par"
    assert main(["simulate", "--spec", dual_spec, "--out", str(seq)]) == 0
    assert main(["simulate", "--spec", dual_spec, "--out", str(par), "--workers", "2"]) == 0
    for seed in (0, 1):
        name = f"sim_seed{seed}.csv"
        assert (seq / name).read_bytes() == (par / name).read_bytes()
        assert (seq / f"rounds_seed{seed}.ndjson").exists()
    manifest = json.loads((seq / "simulate.json").read_text())
    assert manifest["policy"] == "dynamic_int"
    assert manifest["seeds"] == [0, 1]
    counts = read_sim_csv(seq / "sim_seed0.csv")
    assert counts["pairs_end_to_end"].sum() > 0


def test_validate_flow(single_spec, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["validate", "--spec", single_spec, "--out", str(out)]) == 3  # no sims yet
    assert main(["simulate", "--spec", single_spec, "--out", str(out)]) == 0
    assert main(["validate", "--spec", single_spec, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "nice: verdict=true" in stdout
    verdict = json.loads((out / "validation.json").read_text())
    assert verdict["verdict"] is True
    assert verdict["runs_pooled"] == 2
    lines = (out / "validation_nice.csv").read_text().splitlines()
    assert lines[0] == "bin_start_s,mu,sigma,count,z"


def test_validate_detects_wrong_model(single_spec, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--spec", single_spec, "--out", str(out)]) == 0
    # predicting with twice the memory must fail the band check
    assert main(["validate", "--spec", single_spec, "--out", str(out), "--m-sat", "20"]) == 1
    verdict = json.loads((out / "validation.json").read_text())
    assert verdict["verdict"] is False


def test_report_outputs(dual_spec, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--spec", dual_spec, "--out", str(out), "--seeds", "1"]) == 0
    assert main(["report", "--spec", dual_spec, "--out", str(out)]) == 0
    summary = json.loads((out / "report_summary.json").read_text())
    train = summary["train_length"]
    assert train["formula_floor"] == 64
    assert train["with_first_photon"] == 65
    assert train["accepted_range"] == [64, 67]
    assert "67" in train["note"]
    assert sum(summary["dual"]["static_split"]) == 10
    assert summary["dual"]["expected_pairs_dynamic_int"] >= summary["dual"]["expected_pairs_static"]
    for name in ("report_rates_nice.csv", "report_rates_paris.csv", "report_dual.csv", "report_bins.csv"):
        assert (out / name).exists(), name
    header = (out / "report_dual.csv").read_text().splitlines()[0]
    assert header == "t_s,rate_real,rate_int,rate_static,m_A_int,m_B_int"


def test_policy_override_changes_outputs(dual_spec, tmp_path):
    dyn, stat = tmp_path / "dyn", tmp_path / "stat"
    assert main(["rate", "--spec", dual_spec, "--out", str(dyn)]) == 0
    assert main(["rate", "--spec", dual_spec, "--out", str(stat), "--policy", "static"]) == 0
    lines = (stat / "rate_dual.csv").read_text().splitlines()
    splits = {tuple(line.split(",")[2:4]) for line in lines[1:]}
    assert len(splits) == 1  # static policy holds one split for the whole pass
    assert (dyn / "rate_dual.csv").read_bytes() != (stat / "rate_dual.csv").read_bytes()
