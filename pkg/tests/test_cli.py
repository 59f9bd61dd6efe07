import numpy as np
import pytest

from mgafem.cli import (ConfigError, expected_windows, load_config, main,
                        rate_report, read_history_csv, run_experiment,
                        write_history_csv)

from conftest import CONFIG_DIR


BASE_CONFIG = CONFIG_DIR / "square_three_goals.toml"


def small_config(tmp_path, **replacements):
    text = BASE_CONFIG.read_text()
    text = text.replace("max_ndof = 120000", "max_ndof = 600")
    text = text.replace('csv_path = "results/square_three_goals_p1.csv"',
                        f'csv_path = "{tmp_path}/run.csv"')
    text = text.replace('report_path = "results/square_three_goals_p1_rates.txt"',
                        f'report_path = "{tmp_path}/run_rates.txt"')
    for old, new in replacements.items():
        assert old in text, old
        text = text.replace(old, new)
    path = tmp_path / "config.toml"
    path.write_text(text)
    return path


class TestLoadConfig:
    def test_bundled_configs_parse(self):
        for name in ("square_three_goals.toml", "square_three_goals_p2.toml",
                     "square_afem_only_p2.toml", "square_two_goals_p2.toml",
                     "zshape_eight_goals_cap.toml", "zshape_eight_goals_cap_sorted.toml",
                     "zshape_eight_goals_empty.toml", "zshape_eight_goals_empty_sorted.toml"):
            exp = load_config(CONFIG_DIR / name)
            mesh = exp.build_mesh()
            assert mesh.n_elements > 0
            assert exp.problem.n_goals == exp.adapt.n_goals

    def test_unknown_key_rejected(self, tmp_path):
        path = small_config(tmp_path, **{"theta = 0.5": "theta = 0.5\nthetaa = 2"})
        with pytest.raises(ConfigError, match="thetaa"):
            load_config(path)

    def test_unknown_table_rejected(self, tmp_path):
        path = small_config(tmp_path, **{"[stop]": "[extra]\nfoo = 1\n\n[stop]"})
        with pytest.raises(ConfigError, match="extra"):
            load_config(path)

    def test_theta_zero_rejected_before_solving(self, tmp_path):
        path = small_config(tmp_path, **{"theta = 0.5": "theta = 0.0"})
        with pytest.raises(Exception, match="theta"):
            load_config(path)

    def test_goal_count_mismatch_rejected(self, tmp_path):
        path = small_config(tmp_path, **{"n_goals = 3": "n_goals = 2"})
        with pytest.raises(ConfigError, match="n_goals"):
            load_config(path)

    def test_bad_ablation_mode_rejected(self, tmp_path):
        path = small_config(tmp_path, **{"[stop]": "[ablation]\nmode = \"dwr\"\n\n[stop]"})
        with pytest.raises(ConfigError, match="mode"):
            load_config(path)

    def test_restrict_bounds_checked(self, tmp_path):
        path = small_config(
            tmp_path, **{"[stop]": "[ablation]\nmode = \"restrict_goals(3)\"\n\n[stop]"})
        with pytest.raises(ConfigError, match="restrict_goals"):
            load_config(path)

    def test_syntax_error_reports_location(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[problem\ndomain = 3")
        with pytest.raises(ConfigError, match="syntax"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            load_config(tmp_path / "nope.toml")


class TestRunExperiment:
    def test_round_trip_deterministic(self, tmp_path):
        path = small_config(tmp_path)
        _, csv_path, report_path = run_experiment(path)
        first_csv = csv_path.read_bytes()
        first_report = report_path.read_bytes()
        run_experiment(path)
        assert csv_path.read_bytes() == first_csv
        assert report_path.read_bytes() == first_report

    def test_csv_schema_and_roundtrip(self, tmp_path):
        path = small_config(tmp_path)
        history, csv_path, _ = run_experiment(path)
        header = csv_path.read_text().splitlines()[0].split(",")
        assert header == ["level", "active_goal", "n_elements", "ndof", "cumndof",
                          "eta", "zeta_1", "zeta_2", "zeta_3", "delta", "marking",
                          "n_mark_u", "n_mark_z", "n_mark_uz", "n_mark",
                          "solves_primal", "solves_dual", "goal_1", "goal_2", "goal_3"]
        parsed = read_history_csv(csv_path)
        assert len(parsed.records) == len(history.records)
        # floats survive the shortest-roundtrip formatting bit for bit
        for ours, theirs in zip(history.records, parsed.records):
            assert theirs.eta == ours.eta
            assert theirs.zeta == ours.zeta
            assert theirs.delta == ours.delta
            assert theirs.goal_values == ours.goal_values
            assert theirs.marking == ours.marking

    def test_max_ndof_override_and_out_dir(self, tmp_path):
        path = small_config(tmp_path)
        out = tmp_path / "elsewhere"
        history, csv_path, report_path = run_experiment(path, max_ndof=300,
                                                        out_dir=out)
        assert csv_path.parent == out and report_path.parent == out
        assert history.records[-1].ndof >= 300

    def test_dump_mesh_flag(self, tmp_path):
        path = small_config(tmp_path)
        _, csv_path, _ = run_experiment(path, dump_mesh=True)
        dump = csv_path.with_name(csv_path.stem + "_mesh.txt")
        lines = dump.read_text().splitlines()
        assert lines[0] == "VERTICES" and "BOUNDARY" in lines

    def test_afem_only_records_zero_dual_solves(self, tmp_path):
        path = small_config(tmp_path, **{
            "[stop]": "[ablation]\nmode = \"afem_only\"\n\n[stop]"})
        _, csv_path, _ = run_experiment(path)
        parsed = read_history_csv(csv_path)
        assert all(r.solves_dual == 0 for r in parsed.records)
        assert all(r.active_goal == 0 for r in parsed.records)


class TestRateReport:
    def test_report_contains_pass(self, tmp_path):
        path = small_config(tmp_path)
        _, csv_path, report_path = run_experiment(path)
        text = report_path.read_text()
        assert "delta" in text and "eta" in text
        assert "PASS" in text or "FAIL" in text

    def test_identical_csvs_identical_report(self, tmp_path):
        path = small_config(tmp_path)
        _, csv_path, _ = run_experiment(path)
        twin = tmp_path / "twin.csv"
        twin.write_bytes(csv_path.read_bytes())
        r1 = rate_report([csv_path, twin], degree=1)
        r2 = rate_report([csv_path, twin], degree=1)
        assert r1 == r2
        assert "comparison" in r1

    def test_single_level_csv_errors(self, tmp_path):
        csv_path = tmp_path / "one.csv"
        header = ("level,active_goal,n_elements,ndof,cumndof,eta,zeta_1,delta,"
                  "marking,n_mark_u,n_mark_z,n_mark_uz,n_mark,solves_primal,"
                  "solves_dual,goal_1")
        csv_path.write_text(header + "\n0,1,4,1,1,0.5,0.5,0.25,initial,1,1,1,1,1,1,0.1\n")
        with pytest.raises(ConfigError, match="window too small"):
            rate_report([csv_path])

    def test_malformed_csv_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("level,stuff\n0,1\n")
        with pytest.raises(ConfigError, match="contract"):
            rate_report([bad])

    def test_expected_windows_match_rates(self):
        w1 = expected_windows(1, "ndof")
        assert w1["delta"] == (-1.15, -0.85)
        assert w1["eta"] == (-0.65, -0.35)
        w2 = expected_windows(2, "cumndof")
        assert w2["delta"] == pytest.approx((-2.4, -1.6))


class TestMainEntry:
    def test_validate_subcommand(self, capsys):
        code = main(["validate", str(BASE_CONFIG)])
        out = capsys.readouterr().out
        assert code == 0
        assert "q_est = 0.923880" in out

    def test_validate_rejects_bad_config(self, tmp_path, capsys):
        path = small_config(tmp_path, **{"theta = 0.5": "theta = 1.7"})
        code = main(["validate", str(path)])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_run_and_report(self, tmp_path, capsys):
        path = small_config(tmp_path)
        assert main(["run", str(path)]) == 0
        out = capsys.readouterr().out
        assert "done:" in out
        assert main(["report", f"{tmp_path}/run.csv", "--degree", "1"]) == 0
        assert "delta" in capsys.readouterr().out

    def test_report_window_flag(self, tmp_path, capsys):
        path = small_config(tmp_path)
        main(["run", str(path)])
        capsys.readouterr()
        assert main(["report", f"{tmp_path}/run.csv", "--window", "last:4"]) == 0
        assert "last:4" in capsys.readouterr().out
