import json
import math

import pytest

from beepsim.harness.cli import EXIT_MISS, EXIT_OK, EXIT_USAGE, main
from beepsim.harness.trials import FIELDS, TrialRecord, format_records, rate, read_records
from beepsim.harness.tuning import trial_success, tune_constants


def run(argv, tmp_path, name="out.csv"):
    path = tmp_path / name
    code = main([*argv, "--out", str(path)])
    text = path.read_text() if path.exists() else ""
    return code, text


def body_without_wall_time(text):
    cfg, recs = read_records(text)
    return cfg, [{k: v for k, v in vars(r).items() if k != "wall_time"} for r in recs]


# ---- exit codes --------------------------------------------------------


def test_usage_errors_exit_1(capsys):
    assert main(["round-trial", "--eps", "0.7", "--trials", "1"]) == EXIT_USAGE
    assert main(["round-trial", "--graph", "bogus"]) == EXIT_USAGE
    assert main(["localbcast", "--L", "5"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["round-trial", "--trials", "many"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_graph_file_errors_exit_1(tmp_path):
    bad = tmp_path / "g.txt"
    bad.write_text("3 1\n0 7\n")
    assert main(["round-trial", "--graph", str(bad), "--trials", "1"]) == EXIT_USAGE


def test_zero_trials(tmp_path):
    code, text = run(["round-trial", "--graph", "k44", "--eps", "0", "--ceps", "4", "--gamma", "1",
                      "--trials", "0"], tmp_path)
    assert code == EXIT_OK
    cfg, recs = read_records(text)
    assert recs == [] and cfg["trials"] == 0


def test_target_miss_exit_2(tmp_path):
    code, _ = run(["round-trial", "--graph", "rand:n=16,dcap=4,p=0.3", "--eps", "0.2",
                   "--ceps", "1", "--trials", "3", "--target", "0.99"], tmp_path)
    assert code == EXIT_MISS


def test_tune_unreachable_target(capsys):
    assert main(["tune", "--target", "1.01", "--trials", "1"]) == EXIT_MISS
    assert "unreachable" in capsys.readouterr().err


def test_tune_cap_miss(capsys):
    code = main(["tune", "--n", "16", "--delta", "4", "--eps", "0.3", "--trials", "5",
                 "--target", "1.0", "--c-max", "2"])
    assert code == EXIT_MISS
    report = json.loads(capsys.readouterr().out)
    assert report["reached"] is False and report["c_eps"] is None


# ---- round trials ------------------------------------------------------


def test_k44_noiseless_success_when_condition_holds(tmp_path):
    code, text = run(["round-trial", "--graph", "k44", "--eps", "0", "--mode", "empirical",
                      "--ceps", "4", "--gamma", "1", "--trials", "40"], tmp_path)
    assert code == EXIT_OK
    _, recs = read_records(text)
    assert len(recs) == 40
    for r in recs:
        if r.condition_ok and not r.collision_flag:
            assert r.success


def test_reproducible_and_job_independent(tmp_path):
    argv = ["round-trial", "--graph", "rand:n=16,dcap=4,p=0.3", "--eps", "0.05", "--ceps", "3",
            "--trials", "12", "--seed", "9"]
    _, a = run(argv, tmp_path, "a.csv")
    _, b = run(argv, tmp_path, "b.csv")
    _, c = run([*argv, "--jobs", "2"], tmp_path, "c.csv")
    assert body_without_wall_time(a) == body_without_wall_time(b) == body_without_wall_time(c)
    _, d = run([*argv[:-1], "10"], tmp_path, "d.csv")
    assert body_without_wall_time(a)[1] != body_without_wall_time(d)[1]


def test_config_echo_reruns(tmp_path):
    argv = ["matching", "--graph", "k44", "--via", "beeps", "--eps", "0.05", "--ceps", "3",
            "--trials", "4", "--seed", "5"]
    _, first = run(argv, tmp_path, "first.csv")
    code = main(["matching", "--config-from", str(tmp_path / "first.csv"),
                 "--out", str(tmp_path / "second.csv")])
    assert code == EXIT_OK
    second = (tmp_path / "second.csv").read_text()
    assert body_without_wall_time(first) == body_without_wall_time(second)
    with pytest.raises(SystemExit) as exc:
        main(["round-trial", "--config-from", str(tmp_path / "first.csv")])
    assert exc.value.code == EXIT_USAGE


def test_json_mirrors_csv(tmp_path):
    argv = ["round-trial", "--graph", "k44", "--eps", "0.05", "--ceps", "3", "--trials", "5"]
    _, csv_text = run(argv, tmp_path, "r.csv")
    _, json_text = run([*argv, "--format", "json"], tmp_path, "r.json")
    lines = json_text.splitlines()
    assert json.loads(lines[0])["schema"] == 1
    assert set(json.loads(lines[1])) == set(FIELDS)
    assert body_without_wall_time(csv_text) == body_without_wall_time(json_text)


def test_summary_matches_records(tmp_path, capsys):
    code, text = run(["round-trial", "--graph", "rand:n=16,dcap=4,p=0.3", "--eps", "0.1",
                      "--ceps", "2", "--trials", "30"], tmp_path)
    summary = capsys.readouterr().out
    _, recs = read_records(text)
    p, se = rate([r.success for r in recs])
    assert f"success={p:.4f} ± {se:.4f}" in summary


def test_csv_header_and_nulls():
    rec = TrialRecord(0, 1, 2, 1)
    text = format_records([rec], {"x": 1})
    lines = text.splitlines()
    assert lines[0] == "# schema=1" and lines[1] == '# config={"x": 1}'
    assert lines[2].split(",") == FIELDS
    cfg, back = read_records(text)
    assert cfg == {"x": 1} and back == [rec]


def test_rate():
    assert rate([True, False, True, True]) == (0.75, math.sqrt(0.75 * 0.25 / 4))
    p, se = rate([])
    assert math.isnan(p) and math.isnan(se)


# ---- sweep -------------------------------------------------------------


def test_sweep_delta_ratios(tmp_path):
    code, text = run(["sweep", "--delta-list", "2,4,8", "--n-list", "32", "--eps-list", "0.05",
                      "--ceps-list", "2", "--trials", "2"], tmp_path)
    assert code == EXIT_OK
    _, recs = read_records(text)
    rounds = {r.delta: r.rounds_used for r in recs}
    base = rounds[2] // 3
    assert rounds == {2: 3 * base, 4: 5 * base, 8: 9 * base}


def test_sweep_n_ratios(tmp_path):
    code, text = run(["sweep", "--delta-list", "3", "--n-list", "16,64,256", "--eps-list", "0.05",
                      "--ceps-list", "2", "--trials", "1"], tmp_path)
    assert code == EXIT_OK
    _, recs = read_records(text)
    rounds = {r.n: r.rounds_used for r in recs}
    base = rounds[16] // 4
    assert rounds == {16: 4 * base, 64: 6 * base, 256: 8 * base}


def test_sweep_cell_cap():
    assert main(["sweep", "--delta-list", "1,2,3", "--eps-list", "0,0.1", "--cell-cap", "5"]) \
        == EXIT_USAGE


# ---- tuning ------------------------------------------------------------


def test_tune_noiseless_respects_floor():
    cfg = {"graph": "rand:n=16,dcap=3,p=0.3", "n": 16, "delta": 3, "eps": 0.0, "seed": 1,
           "gamma": None, "L": None, "mode": "empirical", "policy": "restricted"}
    res = tune_constants(cfg, 0.9, 10)
    assert res.reached and res.c >= res.floor
    assert res.history[0][0] == res.floor and res.rate >= 0.9


def test_trial_success_rules():
    rec = TrialRecord(0, 0, 2, 1, set_decode_ok=True, msg_decode_ok=True, condition_ok=False)
    assert trial_success(rec, 0.05) and not trial_success(rec, 0.0)
    assert not trial_success(TrialRecord(0, 0, 2, 1, verified=False), 0.05, "matching")
    assert not trial_success(TrialRecord(0, 0, 2, 1, verified=True, set_decode_ok=False,
                                         msg_decode_ok=True), 0.05, "matching")


# ---- matching and local broadcast -------------------------------------


def test_matching_native_path3(tmp_path):
    code, text = run(["matching", "--graph", "path3", "--trials", "50", "--native"], tmp_path)
    _, recs = read_records(text)
    assert code == EXIT_OK and all(r.verified and r.task_ok for r in recs)


def test_matching_empty_graph(tmp_path, capsys):
    code, text = run(["matching", "--graph", "empty8", "--trials", "2", "--print-outputs"],
                     tmp_path)
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert [line for line in out.splitlines() if line.endswith(" -")] == [f"{i} -" for i in range(8)]
    _, recs = read_records(text)
    assert all(r.verified for r in recs)


def test_localbcast_native_and_beeps(tmp_path):
    code, text = run(["localbcast", "--graph", "k33", "--B", "3", "--trials", "3"], tmp_path)
    _, recs = read_records(text)
    assert code == EXIT_OK and all(r.task_ok and r.sim_rounds == 4 for r in recs)
    code, text = run(["localbcast", "--graph", "k33", "--B", "3", "--trials", "2", "--via", "beeps",
                      "--eps", "0", "--ceps", "7", "--verify-codes"], tmp_path, "b.csv")
    _, recs = read_records(text)
    assert code == EXIT_OK and all(r.task_ok and r.verified for r in recs)


def test_gen_codes(capsys, tmp_path):
    assert main(["gen-codes", "--family", "distance", "--a", "6", "--cdelta", "24", "--seed", "7"]) \
        == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["method"] == "exhaustive" and rep["pairs_checked"] == 64 * 63 // 2
    assert main(["gen-codes", "--family", "beep", "--a", "6", "--k", "4", "--c", "6",
                 "--trials", "500"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert 0 <= rep["violation_rate"] <= 1
    assert main(["gen-codes", "--family", "distance", "--a", "30", "--cdelta", "12",
                 "--trials", "50"]) == EXIT_OK
    cap = capsys.readouterr()
    assert "a_max=14" in cap.err and json.loads(cap.out)["method"] == "sampled"
