import json
import subprocess
import sys
from pathlib import Path

import pytest

from rehabfuzz.cli import main
from rehabfuzz.traceio import frames_to_csv, read_frames_csv

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
MALFORMED = Path(__file__).parent / "data" / "malformed"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestRun:
    def test_identity_summary(self, capsys, tmp_path):
        code, out, _ = run(capsys, "run", CONFIGS / "identity.json", "--out", tmp_path)
        assert code == 0
        assert out.count("Progression") == 3
        assert "level curve: 0 1 2 3" in out
        for name in ("frames.csv", "reference.csv", "events.jsonl", "decisions.jsonl"):
            assert (tmp_path / name).is_file()
        decisions = [json.loads(line) for line in (tmp_path / "decisions.jsonl").read_text().splitlines()]
        assert [d["action"] for d in decisions] == ["Progression"] * 3

    def test_halt_is_success(self, capsys, tmp_path):
        code, out, _ = run(capsys, "run", CONFIGS / "pinned_range.json", "--out", tmp_path)
        assert code == 0
        assert "halted at task 0" in out and "Harmfulness" in out

    def test_missing_config(self, capsys, tmp_path):
        code, _, err = run(capsys, "run", tmp_path / "nope.json")
        assert code == 2 and "nope.json" in err

    def test_bad_config(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"tasks": 0}')
        assert run(capsys, "run", bad)[0] == 2
        bad.write_text("{not json")
        assert run(capsys, "run", bad)[0] == 2

    def test_runtime_error(self, capsys, tmp_path):
        cfg = tmp_path / "far.json"
        cfg.write_text(json.dumps({"difficulty": {"spawn_radius_min": 80, "spawn_radius_max": 90}}))
        code, _, err = run(capsys, "run", cfg, "--out", tmp_path / "o")
        assert code == 3 and "task 0" in err and "spawn" in err

    def test_seeds_and_jobs_match_serial(self, capsys, tmp_path):
        cfg = CONFIGS / "moderate.json"
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(capsys, "run", cfg, "--out", a, "--seed", 1, "--seed", 2)[0] == 0
        assert run(capsys, "run", cfg, "--out", b, "--seed", 1, "--seed", 2, "--jobs", 2)[0] == 0
        for seed in (1, 2):
            for name in ("frames.csv", "events.jsonl", "decisions.jsonl"):
                assert (a / f"seed_{seed}" / name).read_bytes() == (b / f"seed_{seed}" / name).read_bytes()

    def test_json_summary(self, capsys, tmp_path):
        code, out, _ = run(capsys, "run", CONFIGS / "identity.json", "--out", tmp_path, "--format", "json")
        rows = json.loads(out)
        assert code == 0 and [r["level_after"] for r in rows] == [1, 2, 3]


class TestInfer:
    def test_all_zero(self, capsys):
        code, out, _ = run(capsys, "infer")
        assert code == 0 and "action: Progression" in out
        assert "crisp GameProgress = 10.000000" in out

    def test_single_input(self, capsys):
        code, out, _ = run(capsys, "infer", "O.E_W=45", "--format", "json")
        data = json.loads(out)
        assert code == 0
        fired = [r for r in data["rules"] if r["strength"] > 0]
        # frozen from oracles.weighted_average: O.E_W sits halfway between VG and G, the rest at VG peaks
        assert sum(r["strength"] for r in fired) == pytest.approx(0.007705)
        assert data["crisp"] == pytest.approx(10.713822193380917)
        assert data["action"] == "Progression"

    def test_harm(self, capsys):
        code, out, _ = run(capsys, "infer", "T.E_S=36")
        assert code == 0 and "action: Harmfulness" in out

    def test_unknown_name(self, capsys):
        code, _, err = run(capsys, "infer", "X.Y=3")
        assert code == 2 and "X.Y" in err

    def test_bad_value(self, capsys):
        assert run(capsys, "infer", "O.E_W=abc")[0] == 2
        assert run(capsys, "infer", "O.E_W")[0] == 2

    def test_no_rule_fired(self, capsys, tmp_path):
        rules = tmp_path / "r.frules"
        rules.write_text("INPUT A [0, 1] { H(0, 1, 1) }\nOUTPUT Y [0, 80] { P(0, 10, 20) }\nRULE IF A IS H THEN Y IS P\n")
        code, _, _ = run(capsys, "infer", "--rulebase", rules, "A=0")
        assert code == 4

    def test_inactive_input(self, capsys):
        code, out, _ = run(capsys, "infer", "O.E_W=none", "--format", "json")
        assert code == 0 and json.loads(out)["crisp"] == pytest.approx(10.0)


class TestIk:
    def test_extended(self, capsys):
        code, out, _ = run(capsys, "ik", 0, 1, 1, 2, 0, 0, "--format", "json")
        row = json.loads(out)
        assert code == 0
        assert (row["theta1_deg"], row["theta2_deg"], row["theta3_deg"]) == pytest.approx((0, 0, 0), abs=1e-9)
        assert row["fk_residual"] < 1e-9

    def test_branch_down(self, capsys):
        code, out, _ = run(capsys, "ik", 0, 1, 1, 1, 1, 0, "--branch", "down", "--format", "json")
        assert code == 0 and json.loads(out)["theta3_deg"] == pytest.approx(-90)

    def test_unreachable(self, capsys):
        code, _, err = run(capsys, "ik", 0, 1, 1, 3, 0, 0)
        assert code == 4 and "unreachable" in err

    def test_singular(self, capsys):
        code, _, err = run(capsys, "ik", 0, 1, 1, 0, 0, 1.5)
        assert code == 4 and "singular" in err

    def test_bad_geometry(self, capsys):
        assert run(capsys, "ik", 0, -1, 1, 1, 0, 0)[0] == 2


class TestCheckRules:
    def test_default_asset(self, capsys):
        asset = ROOT / "src" / "rehabfuzz" / "data" / "default.frules"
        code, out, _ = run(capsys, "check-rules", asset)
        assert code == 0 and "0 diagnostics" in out

    @pytest.mark.parametrize("path", sorted(MALFORMED.glob("*.frules")), ids=lambda p: p.stem)
    def test_malformed_exit_2(self, capsys, path):
        code, _, err = run(capsys, "check-rules", path)
        assert code == 2
        assert "line " in err and ", col " in err

    def test_strict(self, capsys, tmp_path):
        rules = tmp_path / "gap.frules"
        rules.write_text("INPUT A [0, 90] { L(0, 0, 40) H(50, 90, 90) }\nOUTPUT Y [0, 80] { P(0, 10, 20) }\nRULE IF A IS L THEN Y IS P\n")
        code, out, _ = run(capsys, "check-rules", rules)
        assert code == 0 and "coverage-gap" in out
        assert run(capsys, "check-rules", rules, "--strict")[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "check-rules", tmp_path / "none.frules")[0] == 2


class TestMetrics:
    @pytest.fixture
    def session(self, tmp_path, capsys):
        assert run(capsys, "run", CONFIGS / "moderate.json", "--out", tmp_path)[0] == 0
        return tmp_path

    def test_identity_zero(self, capsys, tmp_path):
        run(capsys, "run", CONFIGS / "identity.json", "--out", tmp_path)
        code, out, _ = run(
            capsys, "metrics", tmp_path / "frames.csv", tmp_path / "reference.csv",
            "--events", tmp_path / "events.jsonl", "--task", 1, "--format", "json",
        )
        values = json.loads(out)
        assert code == 0 and len(values) == 13 and all(v == 0 for v in values.values())

    def test_matches_decision_inputs(self, capsys, session):
        code, out, _ = run(
            capsys, "metrics", session / "frames.csv", session / "reference.csv",
            "--events", session / "events.jsonl", "--task", 0, "--format", "json",
        )
        first = json.loads((session / "decisions.jsonl").read_text().splitlines()[0])
        assert code == 0
        assert json.loads(out) == pytest.approx(first["inputs"], abs=1e-12)

    def test_needs_task(self, capsys, session):
        assert run(capsys, "metrics", session / "frames.csv", session / "reference.csv")[0] == 2

    def test_without_events_timing_inactive(self, capsys, session):
        code, out, _ = run(capsys, "metrics", session / "frames.csv", session / "reference.csv", "--task", 0)
        assert code == 0 and "T.E_C   inactive" in out

    def test_single_task_file(self, capsys, tmp_path, session):
        frames = read_frames_csv(session / "frames.csv")[0]
        ref = read_frames_csv(session / "reference.csv")[0]
        (tmp_path / "p.csv").write_text(frames_to_csv(frames))
        (tmp_path / "r.csv").write_text(frames_to_csv(ref))
        code, out, _ = run(capsys, "metrics", tmp_path / "p.csv", tmp_path / "r.csv", "--active", "O.E_W")
        assert code == 0 and out.startswith("O.E_W")

    def test_malformed_csv(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,x\n1,2\n")
        assert run(capsys, "metrics", bad, bad)[0] == 2


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["ik", "0", "1"])
    assert info.value.code == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rehabfuzz.cli", "ik", "0", "1", "1", "2", "0", "0"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and "theta1 = 0.000000000 deg" in proc.stdout
