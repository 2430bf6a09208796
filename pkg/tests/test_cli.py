import json

import pytest
from click.testing import CliRunner

from classrecap.cli import main

runner = CliRunner()


def run(args, expect_exit=0):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == expect_exit, result.output + getattr(result, "stderr", "")
    return result


@pytest.fixture
def storage(tmp_path):
    return str(tmp_path / "state.db")


@pytest.fixture
def sim_session(storage):
    """A loaded 6-student simulated class with usage events."""
    result = run([
        "simulate", "--students", "6", "--minutes", "20", "--seed", "7",
        "--partial", "1", "--usage", "--storage", storage,
    ])
    return storage, json.loads(result.output)


class TestRegisterCourse:
    def test_prints_passcodes(self, storage):
        result = run(["register-course", "CA349", "IT Architecture", "--storage", storage])
        data = json.loads(result.output)
        assert data["code"] == "CA349"
        assert len(data["public_passcode"]) == 8

    def test_duplicate_exits_validation(self, storage):
        run(["register-course", "CA349", "t", "--storage", storage])
        result = runner.invoke(
            main, ["register-course", "CA349", "t", "--storage", storage]
        )
        assert result.exit_code == 2
        assert "duplicate-course" in result.stderr


class TestSimulate:
    def test_loads_dataset_into_storage(self, sim_session):
        _, info = sim_session
        assert info["duration_s"] == 1200
        assert len(info["students"]) == 6
        assert info["session_id"].startswith("ses-")

    def test_out_dir_writes_scenario_and_csvs(self, tmp_path):
        out = tmp_path / "dataset"
        run(["simulate", "--students", "3", "--minutes", "5", "--seed", "2",
             "--out", str(out)])
        assert (out / "scenario.json").exists()
        csvs = sorted(p.name for p in out.glob("*.csv"))
        assert csvs == ["sim-00.csv", "sim-01.csv", "sim-02.csv"]
        header = (out / "sim-00.csv").read_text().splitlines()[0]
        assert header == "t_seconds,level,face_detected"

    def test_scenario_file_replay_is_deterministic(self, tmp_path):
        out = tmp_path / "a"
        run(["simulate", "--students", "2", "--minutes", "3", "--seed", "5",
             "--out", str(out)])
        out2 = tmp_path / "b"
        run(["simulate", "--scenario", str(out / "scenario.json"), "--out", str(out2)])
        assert (out / "sim-00.csv").read_text() == (out2 / "sim-00.csv").read_text()


class TestSummarize:
    def test_single_student_json(self, sim_session):
        storage, info = sim_session
        result = run([
            "summarize", "--storage", storage, "--session", info["session_id"],
            "--student", "sim-00", "--strategy", "all_i_missed",
            "--passcode", info["public_passcode"],
        ])
        body = json.loads(result.output)
        assert body["cutlist"]["strategy"] == "all_i_missed"
        assert body["manifest"]["total_playback_s"] == body["cutlist"]["total_playback_s"]

    def test_csv_format(self, sim_session):
        storage, info = sim_session
        result = run([
            "summarize", "--storage", storage, "--session", info["session_id"],
            "--student", "sim-00", "--passcode", info["public_passcode"],
            "--format", "csv",
        ])
        assert result.output.splitlines()[0] == "start_s,end_s"

    def test_all_students_table(self, sim_session):
        storage, info = sim_session
        result = run([
            "summarize", "--storage", storage, "--session", info["session_id"],
            "--all-students", "--passcode", info["public_passcode"],
            "--format", "csv",
        ])
        lines = result.output.splitlines()
        assert lines[0] == "student,segments_minutes,n_segments,duration_min"
        assert len(lines) == 1 + 6

    def test_playlist_written(self, sim_session, tmp_path):
        storage, info = sim_session
        playlist = tmp_path / "recap.ffconcat"
        run([
            "summarize", "--storage", storage, "--session", info["session_id"],
            "--student", "sim-00", "--passcode", info["public_passcode"],
            "--playlist", str(playlist),
        ])
        text = playlist.read_text()
        assert text.startswith("ffconcat version 1.0\n")
        assert "file 'recording.mp4'" in text

    def test_wrong_passcode_exits_authorization(self, sim_session):
        storage, info = sim_session
        result = runner.invoke(main, [
            "summarize", "--storage", storage, "--session", info["session_id"],
            "--student", "sim-00", "--passcode", "WRONG123",
        ])
        assert result.exit_code == 3
        assert "unknown-passcode" in result.stderr

    def test_private_passcode_exits_authorization(self, sim_session):
        storage, info = sim_session
        result = runner.invoke(main, [
            "summarize", "--storage", storage, "--session", info["session_id"],
            "--student", "sim-00", "--passcode", info["private_passcode"],
        ])
        assert result.exit_code == 3
        assert "authorization" in result.stderr

    def test_unknown_session_exits_not_found(self, sim_session):
        storage, info = sim_session
        result = runner.invoke(main, [
            "summarize", "--storage", storage, "--session", "ses-nope",
            "--student", "sim-00", "--passcode", info["public_passcode"],
        ])
        assert result.exit_code == 4
        assert "unknown-session" in result.stderr


class TestVolatilityReport:
    def test_csv_columns(self, sim_session):
        storage, info = sim_session
        result = run([
            "volatility-report", "--storage", storage, "--session", info["session_id"],
            "--format", "csv",
        ])
        lines = result.output.splitlines()
        assert lines[0] == "student,sigma_per_second,sigma_minute_aggregates,mean_minute_volatility"
        assert len(lines) >= 6

    def test_constant_traces_all_zero(self, storage, tmp_path):
        scenario = tmp_path / "flat.json"
        scenario.write_text(json.dumps({
            "session_duration_s": 300,
            "seed": 1,
            "students": [
                {"student_ref": "a", "base_level": 0.5},
                {"student_ref": "b", "base_level": 0.6},
            ],
        }))
        info = json.loads(run([
            "simulate", "--scenario", str(scenario), "--storage", storage,
        ]).output)
        result = run([
            "volatility-report", "--storage", storage, "--session", info["session_id"],
            "--format", "csv",
        ])
        for line in result.output.splitlines()[1:]:
            student, *cols = line.split(",")
            assert cols == ["0.000000", "0.000000", "0.000000"]


class TestClassChart:
    def test_json_matrix(self, sim_session):
        storage, info = sim_session
        result = run([
            "class-chart", "--storage", storage, "--session", info["session_id"],
            "--passcode", info["private_passcode"],
        ])
        body = json.loads(result.output)
        assert body["participant_count"] == 6
        assert len(body["matrix"]["minutes"]) == 20

    def test_public_passcode_rejected(self, sim_session):
        storage, info = sim_session
        result = runner.invoke(main, [
            "class-chart", "--storage", storage, "--session", info["session_id"],
            "--passcode", info["public_passcode"],
        ])
        assert result.exit_code == 3

    def test_csv_chart(self, sim_session):
        storage, info = sim_session
        result = run([
            "class-chart", "--storage", storage, "--session", info["session_id"],
            "--passcode", info["private_passcode"], "--format", "csv",
        ])
        header = result.output.splitlines()[0]
        assert header.startswith("minute,")
        assert len(header.split(",")) == 7  # minute + 6 pseudonyms

    def test_plot_image(self, sim_session, tmp_path):
        pytest.importorskip("matplotlib")
        storage, info = sim_session
        out = tmp_path / "chart.png"
        run([
            "class-chart", "--storage", storage, "--session", info["session_id"],
            "--passcode", info["private_passcode"], "--plot", str(out),
        ])
        assert out.stat().st_size > 1000
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestExport:
    def test_traces_directory(self, sim_session, tmp_path):
        storage, info = sim_session
        out = tmp_path / "traces"
        run(["export", "--storage", storage, "--session", info["session_id"],
             "--what", "traces", "--out", str(out)])
        assert sorted(p.name for p in out.glob("*.csv"))[0] == "sim-00.csv"

    def test_aggregates_csv(self, sim_session, tmp_path):
        storage, info = sim_session
        out = tmp_path / "aggs.csv"
        run(["export", "--storage", storage, "--session", info["session_id"],
             "--what", "aggregates", "--student", "sim-00", "--out", str(out)])
        lines = out.read_text().splitlines()
        assert lines[0] == "minute_index,mean_level,sample_count,covered"
        assert len(lines) == 1 + 20

    def test_cutlist_and_playlist(self, sim_session, tmp_path):
        storage, info = sim_session
        cut_path = tmp_path / "cuts.json"
        run(["export", "--storage", storage, "--session", info["session_id"],
             "--what", "cutlist", "--student", "sim-00",
             "--passcode", info["public_passcode"], "--out", str(cut_path)])
        data = json.loads(cut_path.read_text())
        assert data["strategy"] == "all_i_missed"
        playlist_path = tmp_path / "cuts.ffconcat"
        run(["export", "--storage", storage, "--session", info["session_id"],
             "--what", "playlist", "--student", "sim-00",
             "--passcode", info["public_passcode"], "--out", str(playlist_path),
             "--recording", "lecture.mp4"])
        assert "file 'lecture.mp4'" in playlist_path.read_text()

    def test_chart_json(self, sim_session, tmp_path):
        storage, info = sim_session
        out = tmp_path / "matrix.json"
        run(["export", "--storage", storage, "--session", info["session_id"],
             "--what", "chart", "--passcode", info["private_passcode"],
             "--out", str(out)])
        matrix = json.loads(out.read_text())
        assert set(matrix) == {"minutes", "participants", "values"}
