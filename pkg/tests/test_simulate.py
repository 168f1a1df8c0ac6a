import io

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mdpde.exceptions import SimulationDiverged
from mdpde.simulate import (
    ContaminationSpec,
    DriftAffine,
    SamplePath,
    contaminate,
    contaminated_count,
    simulate_path,
    step_size,
)

B_TRUE = np.array([[-0.6, -0.2], [0.1, -0.4]])
b_TRUE = np.array([2.0, 1.0])
SIGMA_TRUE = np.array([[1.0, 0.5], [0.5, 0.7]])


class TestStepSize:
    def test_examples(self):
        assert step_size(1) == 1.0
        assert_allclose(step_size(1024), np.exp(-0.55 * np.log(1024)), rtol=1e-14)
        assert_allclose(step_size(1024), 2 ** -5.5, rtol=1e-14)
        assert_allclose(step_size(100), 0.07943, atol=1e-5)

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_invalid(self, n):
        with pytest.raises(ValueError):
            step_size(n)


class TestDriftAffine:
    def test_beta_is_column_major(self):
        drift = DriftAffine(B_TRUE, b_TRUE)
        assert_array_equal(drift.beta, [-0.6, 0.1, -0.2, -0.4, 2.0, 1.0])
        back = DriftAffine.from_beta(drift.beta, 2)
        assert_array_equal(back.B, B_TRUE)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            DriftAffine(np.eye(2), np.ones(3))


class TestSimulatePath:
    def test_constant_drift(self):
        drift = DriftAffine(np.zeros((2, 2)), [1.0, 0.0])
        path = simulate_path(drift, np.zeros((2, 2)), np.zeros(2), 10, 0.1)
        assert_allclose(path.points[10], [1.0, 0.0], atol=1e-14)

    def test_constant_path(self):
        drift = DriftAffine(np.zeros((2, 2)), np.zeros(2))
        path = simulate_path(drift, np.zeros((2, 2)), [3.0, -2.0], 20, 0.1)
        assert_array_equal(path.points, np.tile([3.0, -2.0], (21, 1)))

    def test_residual_mean_clt(self):
        n = 1000
        h = step_size(n)
        drift = DriftAffine(B_TRUE, b_TRUE)
        path = simulate_path(drift, SIGMA_TRUE, np.zeros(2), n, h, seed=7)
        resid = path.increments() - drift(path.points[:-1]) * h
        bound = 4 * np.sqrt(np.diag(SIGMA_TRUE) * h / n)
        assert np.all(np.abs(resid.mean(axis=0)) < bound)

    def test_increment_covariance(self):
        n, h = 100_000, 0.01
        drift = DriftAffine(B_TRUE, b_TRUE)
        path = simulate_path(drift, SIGMA_TRUE, np.zeros(2), n, h, seed=8)
        resid = path.increments() - drift(path.points[:-1]) * h
        emp = resid.T @ resid / (n * h)
        assert_allclose(emp, SIGMA_TRUE, rtol=0.05, atol=0.02)

    def test_deterministic_given_seed(self):
        drift = DriftAffine(B_TRUE, b_TRUE)
        a = simulate_path(drift, SIGMA_TRUE, np.zeros(2), 50, 0.1, seed=3)
        b = simulate_path(drift, SIGMA_TRUE, np.zeros(2), 50, 0.1, seed=3)
        c = simulate_path(drift, SIGMA_TRUE, np.zeros(2), 50, 0.1, seed=4)
        assert_array_equal(a.points, b.points)
        assert not np.array_equal(a.points, c.points)

    def test_weak_order_one(self):
        # Euler mean of a scalar OU process against the exact mean
        B, b, x0, T = -1.0, 1.0, 0.0, 1.0
        exact = -b / B + (x0 + b / B) * np.exp(B * T)
        errs = []
        for n in (20, 40):
            path = simulate_path(DriftAffine([[B]], [b]), np.zeros((1, 1)), [x0], n, T / n)
            errs.append(abs(path.points[-1, 0] - exact))
        assert 1.7 < errs[0] / errs[1] < 2.3

    def test_divergence(self):
        drift = DriftAffine([[1e4]], [0.0])
        with pytest.raises(SimulationDiverged) as info:
            simulate_path(drift, np.zeros((1, 1)), [1.0], 200, 1.0)
        assert info.value.step > 0


class TestContaminate:
    def setup_method(self):
        drift = DriftAffine(B_TRUE, b_TRUE)
        self.path = simulate_path(drift, SIGMA_TRUE, np.zeros(2), 999, step_size(999), seed=1)

    def test_identity_cases(self):
        assert contaminate(self.path, ContaminationSpec(0.0, 5.0, 1)) is self.path
        assert contaminate(self.path, ContaminationSpec(0.1, 0.0, 1)) is self.path

    def test_count(self):
        out = contaminate(self.path, ContaminationSpec(0.10, 5.0, 2))
        changed = np.any(out.points != self.path.points, axis=1)
        assert changed.sum() == 100

    def test_half_up_rounding(self):
        assert contaminated_count(1001, 0.05) == 50
        assert contaminated_count(10, 0.05) == 1
        assert contaminated_count(30, 0.05) == 2

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            ContaminationSpec(1.0, 5.0)
        with pytest.raises(ValueError):
            ContaminationSpec(0.1, -1.0)


class TestSamplePathCsv:
    def test_round_trip(self, tmp_path):
        drift = DriftAffine(B_TRUE, b_TRUE)
        path = simulate_path(drift, SIGMA_TRUE, np.zeros(2), 30, step_size(30), seed=5)
        target = tmp_path / "p.csv"
        path.to_csv(target)
        back = SamplePath.from_csv(target)
        assert_array_equal(back.points, path.points)
        assert_allclose(back.h, path.h, rtol=1e-12)

    def test_stream_header(self):
        buf = io.StringIO()
        SamplePath(0.5, [[0.0, 1.0], [1.0, 2.0]]).to_csv(buf)
        assert buf.getvalue().splitlines()[:2] == ["t,x1,x2", "0,0,1"]

    def test_uneven_times(self, tmp_path):
        target = tmp_path / "bad.csv"
        target.write_text("t,x1\n0,1\n0.1,2\n0.3,3\n")
        with pytest.raises(ValueError):
            SamplePath.from_csv(target)

    def test_read_only(self):
        path = SamplePath(0.5, [[0.0], [1.0]])
        with pytest.raises(ValueError):
            path.points[0, 0] = 3.0
