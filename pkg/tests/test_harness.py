import json
import os

from polarawgn import build_constellation
from polarawgn.codec import CodeSpec, codespec_from_json
from polarawgn.construction import estimate_reliability, select_info_sets_rate
from polarawgn.harness import (
    _read_sim_results,
    cli_main,
    reports_to_csv,
    run_simulation,
    run_sweep,
)


def tiny_spec(n=16, seed=55):
    c = build_constellation(n, 1.0, 0.0)
    table = estimate_reliability(c, 300, seed=seed)
    sets = select_info_sets_rate(table, 0.25 * c.m)
    return CodeSpec(n=n, m=c.m, power=1.0, gamma=0.0, info_sets=sets,
                    constellation=c, master_seed=seed)


# ---------------------------------------------------------------- library level


def test_single_trial_report_matches_trial():
    spec = tiny_spec()
    report = run_simulation(spec, 1)
    assert report.trials == 1
    assert report.errors in (0, 1)
    assert report.err_rate == report.errors


def test_worker_hint_does_not_change_report(tmp_path):
    spec = tiny_spec()
    r1 = run_simulation(spec, 600, workers=1)
    r8 = run_simulation(spec, 600, workers=8)
    assert r1 == r8
    p1, p8 = tmp_path / "a.csv", tmp_path / "b.csv"
    reports_to_csv([r1], str(p1))
    reports_to_csv([r8], str(p8))
    assert p1.read_bytes() == p8.read_bytes()


def test_dump_writes_record_lines(tmp_path):
    spec = tiny_spec()
    dump = tmp_path / "records.jsonl"
    run_simulation(spec, 5, dump_path=str(dump))
    lines = dump.read_text().splitlines()
    assert len(lines) == 5
    rec = json.loads(lines[0])
    assert "sent_symbols" in rec and "block_error" in rec


def test_sweep_writes_all_artifacts(tmp_path):
    out = tmp_path / "sweep"
    reports, points, fits = run_sweep(
        [16, 32], power=1.0, gamma=0.0, construct_trials=300, trials=400,
        target_union=1e-2, master_seed=9, workers=1, out_dir=str(out),
    )
    for name in ("table_n16.csv", "table_n32.csv", "code_n16.json", "code_n32.json",
                 "sim.csv", "gaps.csv", "fit.json", "gap_vs_n.svg"):
        assert (out / name).exists(), name
    assert len(reports) == 2 and len(points) == 2
    # artifacts re-load cleanly
    spec = codespec_from_json((out / "code_n16.json").read_text())
    assert spec.n == 16
    assert (out / "gap_vs_n.svg").read_text().lstrip().startswith("<?xml")


# ---------------------------------------------------------------- CLI


def test_cli_pipeline_and_refeed(tmp_path):
    tab = str(tmp_path / "table.csv")
    code = str(tmp_path / "code.json")
    sim1 = str(tmp_path / "sim1.csv")
    sim2 = str(tmp_path / "sim2.csv")
    assert cli_main(["construct", "--n", "16", "--power", "1.0", "--gamma", "0",
                     "--trials", "300", "--seed", "42", "--out", tab]) == 0
    assert cli_main(["select", "--table", tab, "--n", "16", "--power", "1.0",
                     "--gamma", "0", "--rule", "rate", "--target-rate", "1.0",
                     "--seed", "42", "--out", code]) == 0
    assert cli_main(["simulate", "--code", code, "--trials", "300", "--table", tab,
                     "--out", sim1]) == 0
    # re-feeding the same artifacts reproduces the simulation bytes
    assert cli_main(["simulate", "--code", code, "--trials", "300", "--table", tab,
                     "--out", sim2, "--workers", "4"]) == 0
    with open(sim1, "rb") as f1, open(sim2, "rb") as f2:
        assert f1.read() == f2.read()
    results = _read_sim_results(sim1)
    assert 16 in results


def test_cli_analyze(tmp_path):
    out = str(tmp_path / "gaps.csv")
    svg = str(tmp_path / "gaps.svg")
    assert cli_main(["analyze", "--n-list", "64,128,256", "--power", "1.0",
                     "--gamma", "0", "--out", out, "--svg", svg]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "n,P,gamma,capacity,mi,gap_mi,rate,gap_rate,err,bound_lhs,bound_rhs"
    assert len(lines) == 4
    assert os.path.exists(svg)


def test_cli_config_file_with_flag_override(tmp_path):
    tab = str(tmp_path / "table.csv")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 16, "power": 1.0, "gamma": 0.0,
                               "trials": 200, "seed": 7}))
    # config supplies everything except the output path; flag overrides trials
    assert cli_main(["construct", "--config", str(cfg), "--trials", "150",
                     "--out", tab]) == 0
    rows = open(tab).read().splitlines()[1:]
    assert rows[0].split(",")[4] == "150"


def test_cli_exit_codes(tmp_path):
    assert cli_main(["construct", "--bogus"]) == 1
    assert cli_main(["nosuchcommand"]) == 1
    assert cli_main(["construct", "--n", "100", "--power", "1", "--trials", "10",
                     "--out", str(tmp_path / "x.csv")]) == 3
    assert cli_main(["simulate", "--code", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path / "y.csv")]) == 3
    assert cli_main(["construct", "--power", "1", "--trials", "10",
                     "--out", str(tmp_path / "z.csv")]) == 3  # missing --n
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text("not json")
    assert cli_main(["construct", "--config", str(bad_cfg), "--n", "16",
                     "--power", "1", "--out", str(tmp_path / "w.csv")]) == 3


def test_cli_demo():
    assert cli_main(["demo", "--seed", "3"]) == 0
