import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mdpde.cli import main


@pytest.fixture
def path_csv(tmp_path):
    target = tmp_path / "path.csv"
    assert main(["simulate", "--n", "500", "--seed", "3", "--out", str(target)]) == 0
    return target


class TestCli:
    def test_experiment_smoke(self, tmp_path):
        out = tmp_path / "res"
        code = main(["experiment", "--reps", "5", "--n", "200", "--out", str(out)])
        assert code == 0
        assert (out / "mdpde_all_n200.csv").exists()

    def test_fit_and_infer(self, tmp_path, path_csv):
        fit_json = tmp_path / "fit.json"
        assert main(["fit", "--alpha", "0.3", str(path_csv), "--out", str(fit_json)]) == 0
        data = json.loads(fit_json.read_text())
        assert data["converged"] is True
        assert len(data["beta"]) == 6
        out = tmp_path / "wald.json"
        args = ["infer", str(fit_json), "--out", str(out), "--beta-null", *map(repr, data["beta"])]
        assert main(args) == 0
        wald = json.loads(out.read_text())
        assert wald["wald_stat"] == 0.0
        assert wald["wald_pvalue"] == 1.0

    def test_simulate_stdout(self, capsys):
        assert main(["simulate", "--n", "10", "--eps", "0.1"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,x1,x2" and len(lines) == 12

    def test_usage_errors(self, capsys, path_csv):
        assert main(["fit", "--bogus", str(path_csv)]) == 1
        assert main(["nonsense"]) == 1
        assert main(["fit", "/no/such/file.csv"]) == 1
        assert main(["--help"]) == 0
        capsys.readouterr()

    def test_numerical_failure_exit_code(self, tmp_path):
        bad = tmp_path / "flat.csv"
        bad.write_text("t,x1,x2\n" + "".join(f"{i * 0.1},1,1\n" for i in range(20)))
        assert main(["fit", str(bad)]) == 2

    def test_infer_wrong_length(self, tmp_path, path_csv):
        fit_json = tmp_path / "fit.json"
        main(["fit", str(path_csv), "--out", str(fit_json)])
        assert main(["infer", str(fit_json), "--beta-null", "0", "0"]) == 1

    def test_module_entry(self):
        proc = subprocess.run([sys.executable, "-m", "mdpde", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "mdpde" in proc.stdout
