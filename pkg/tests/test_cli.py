import json

from spdnn.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSimulate:
    def test_deterministic_files(self, tmp_path, capsys):
        args = ["simulate", "--dgp", "dgp1", "--n", "100", "--seed", "7",
                "--burn-in", "50", "--out", str(tmp_path)]
        assert main(args) == 0
        first = (tmp_path / "dgp1_n100_seed7.csv").read_bytes()
        assert main(args) == 0
        assert (tmp_path / "dgp1_n100_seed7.csv").read_bytes() == first
        capsys.readouterr()

    def test_seed_comment_present(self, tmp_path, capsys):
        main(["simulate", "--dgp", "dgp2", "--n", "20", "--seed", "3",
              "--burn-in", "10", "--out", str(tmp_path)])
        capsys.readouterr()
        text = (tmp_path / "dgp2_n20_seed3.csv").read_text()
        assert text.startswith("# seed=3\n")


class TestBounds:
    def test_table_contains_rate_exponent(self, capsys):
        code, out, _ = run(["bounds", "--regime", "psi", "--mu", "0",
                            "--nu1", "0.05", "--nu2", "0.05", "--nu4", "0.2"], capsys)
        assert code == 0
        line = next(l for l in out.splitlines() if l.startswith("rate_exponent"))
        assert "0.333333333" in line

    def test_json_mode(self, capsys):
        code, out, _ = run(["bounds", "--json", "--mu", "0",
                            "--nu1", "0.05", "--nu2", "0.05", "--nu4", "0.2"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["rate_exponent"] == 1.0 / 3.0
        assert "lambda_n" in doc and "tau_n_max" in doc and "rho_n" in doc

    def test_regime_violation_is_an_error(self, capsys):
        code, _, err = run(["bounds", "--regime", "psi", "--mu", "0",
                            "--nu1", "0.3", "--nu2", "0.3", "--nu4", "0.3"], capsys)
        assert code == 1
        assert "violated" in err


class TestExperiment:
    def test_row_count_contract(self, tmp_path, capsys):
        code, out, _ = run(["experiment", "--sizes", "40", "--reps", "2",
                            "--test-size", "200", "--burn-in", "50",
                            "--hidden", "6", "--max-epochs", "10",
                            "--seed", "5", "--out", str(tmp_path)], capsys)
        assert code == 0
        lines = (tmp_path / "results.csv").read_text().splitlines()
        # comment + header + sizes*reps*estimators*losses
        assert len(lines) == 2 + 1 * 2 * 2 * 2

    def test_byte_identical_reruns(self, tmp_path, capsys):
        args = ["experiment", "--sizes", "40", "--reps", "1", "--losses", "l2",
                "--test-size", "150", "--burn-in", "50", "--hidden", "5",
                "--max-epochs", "8", "--seed", "11"]
        code, _, _ = run(args + ["--out", str(tmp_path / "a")], capsys)
        assert code == 0
        code, _, _ = run(args + ["--out", str(tmp_path / "b")], capsys)
        assert code == 0
        assert ((tmp_path / "a" / "results.csv").read_bytes()
                == (tmp_path / "b" / "results.csv").read_bytes())


class TestTrainTunePm10:
    def test_train_writes_network_and_log(self, tmp_path, capsys):
        code, out, _ = run(["train", "--dgp", "dgp1", "--n", "60", "--burn-in", "30",
                            "--hidden", "5", "--max-epochs", "6", "--lam", "0.001",
                            "--tau", "0.01", "--seed", "2", "--out", str(tmp_path)], capsys)
        assert code == 0
        assert (tmp_path / "spdnn.net").exists()
        assert (tmp_path / "spdnn_log.csv").exists()
        header = (tmp_path / "spdnn.net").read_text().splitlines()[0]
        assert header.startswith("spdnn-net v1 3 1 5")

    def test_train_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("dgp = dgp2\nn = 50\nburn_in = 20\nhidden = 4\n"
                       "max_epochs = 5\nlam = 0\nseed = 9\n")
        code, out, _ = run(["train", "--config", str(cfg), "--out", str(tmp_path)], capsys)
        assert code == 0
        assert (tmp_path / "npdnn.net").exists()

    def test_tune_emits_score_table(self, tmp_path, capsys):
        code, out, _ = run(["tune", "--dgp", "dgp1", "--n", "50", "--burn-in", "25",
                            "--hidden", "4", "--max-epochs", "5",
                            "--seed", "3", "--out", str(tmp_path)], capsys)
        assert code == 0
        lines = (tmp_path / "score_table.csv").read_text().splitlines()
        assert lines[0] == "# seed=3"
        assert len(lines) == 2 + 6  # header row + one row per lambda index

    def test_pm10_synthetic(self, tmp_path, capsys):
        code, out, _ = run(["pm10", "--synthetic", "--seed", "4", "--max-epochs", "6",
                            "--hidden", "4", "--out", str(tmp_path)], capsys)
        assert code == 0
        assert "dar" in out
        dar_line = next(l for l in out.splitlines() if l.startswith("dar"))
        cells = dar_line.split()
        assert float(cells[1]) == 0.0 and float(cells[2]) == 0.0
        assert (tmp_path / "pm10_predictions.csv").exists()

    def test_pm10_without_data_is_an_error(self, capsys):
        code, _, err = run(["pm10"], capsys)
        assert code == 1
        assert "--data" in err


class TestUsageErrors:
    def test_unknown_subcommand_exits_2(self, capsys):
        assert main(["frobnicate"]) == 2
        capsys.readouterr()

    def test_unknown_flag_exits_2(self, capsys):
        assert main(["simulate", "--n", "10", "--bogus"]) == 2
        capsys.readouterr()

    def test_no_subcommand_exits_2(self, capsys):
        assert main([]) == 2
        capsys.readouterr()
