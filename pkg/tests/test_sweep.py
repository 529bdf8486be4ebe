import numpy as np
import pytest

from capnav.errors import FileFormatError, InvalidParameterError
from capnav.sweep import (
    FactorialDesign,
    default_design,
    export_longform_csv,
    export_matrix_csv,
    load_longform_csv,
    load_matrix_csv,
    run_factorial,
    spearman_trend,
    success_trend_by_gradient,
    success_trend_by_velocity,
)


def small_design(**overrides):
    base = dict(
        velocities=(0.65, 0.85),
        gradients_tpm=(0.0, 0.2, 0.45),
        entrance_count=4,
        target_branch="A",
    )
    base.update(overrides)
    return FactorialDesign(**base)


@pytest.fixture(scope="module")
def small_result():
    return run_factorial(small_design())


class TestDesign:
    def test_reference_grid(self):
        design = default_design()
        assert design.velocities == (0.65, 0.70, 0.75, 0.80, 0.85)
        assert len(design.gradients_tpm) == 10
        assert design.gradients_tpm[0] == 0.0
        assert design.gradients_tpm[-1] == pytest.approx(0.45, rel=1e-15)
        assert design.entrance_count == 20
        assert design.cells == 50
        assert design.trajectories == 1000

    def test_gradient_grid_uses_plain_floats(self):
        for g in default_design().gradients_tpm:
            assert type(g) is float

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            small_design(velocities=())
        with pytest.raises(InvalidParameterError):
            small_design(gradients_tpm=(-0.1, 0.2))
        with pytest.raises(InvalidParameterError):
            small_design(entrance_count=0)
        with pytest.raises(InvalidParameterError):
            small_design(target_branch="C")


class TestRunFactorial:
    def test_shapes_and_labels(self, small_result):
        design = small_result.design
        n_g, n_v, n_e = len(design.gradients_tpm), len(design.velocities), 4
        assert small_result.outcomes.shape == (n_g, n_v, n_e)
        assert small_result.transit_times.shape == (n_g, n_v, n_e)
        assert small_result.wall_contacts.shape == (n_g, n_v, n_e)
        assert small_result.success_matrix.shape == (n_g, n_v)
        assert np.all(small_result.outcomes != 0) or np.any(small_result.outcomes == 0)

    def test_gradient_steers_the_population(self, small_result):
        # No pull leaves the split roughly even; the strongest pull
        # captures every capsule in this small design.
        m = small_result.success_matrix
        assert m[-1, 0] == 1.0
        assert m[-1, 0] >= m[0, 0]

    def test_repeat_run_is_bitwise_identical(self, small_result):
        again = run_factorial(small_design())
        assert np.array_equal(again.outcomes, small_result.outcomes)
        assert np.array_equal(again.transit_times, small_result.transit_times)
        assert np.array_equal(again.wall_contacts, small_result.wall_contacts)

    def test_worker_count_does_not_change_results(self, small_result):
        threaded = run_factorial(small_design(), workers=3)
        assert np.array_equal(threaded.outcomes, small_result.outcomes)
        assert np.array_equal(threaded.transit_times, small_result.transit_times)

    def test_target_branch_b_mirrors_the_pull(self):
        result = run_factorial(small_design(target_branch="B"))
        assert result.success_matrix[-1, 0] == 1.0

    def test_success_ratio_indexing(self, small_result):
        m = small_result.success_matrix
        assert small_result.success_ratio(2, 1) == m[2, 1]


class TestTrends:
    def test_spearman_perfect_orders(self):
        assert spearman_trend([1, 2, 3, 4], [0.1, 0.2, 0.3, 0.4]) == 1.0
        assert spearman_trend([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_constant_series_reads_flat(self):
        assert spearman_trend([1, 2, 3], [5.0, 5.0, 5.0]) == 0.0

    def test_trend_helpers_shape(self, small_result):
        by_v = success_trend_by_velocity(small_result)
        by_g = success_trend_by_gradient(small_result)
        assert len(by_v) == len(small_result.design.velocities)
        assert len(by_g) == len(small_result.design.gradients_tpm)
        assert all(-1.0 <= t <= 1.0 for t in by_v)


class TestCsvRoundTrips:
    def test_matrix_round_trip(self, small_result, tmp_path):
        path = str(tmp_path / "matrix.csv")
        export_matrix_csv(small_result, path)
        gradients, velocities, matrix = load_matrix_csv(path)
        assert np.allclose(gradients, small_result.design.gradients_tpm, rtol=1e-15)
        assert np.allclose(velocities, small_result.design.velocities, rtol=1e-15)
        # Ratios are quantised to 1/entrance_count, so 3 decimals suffice.
        assert np.allclose(matrix, small_result.success_matrix, atol=5e-4)

    def test_longform_round_trip(self, small_result, tmp_path):
        path = str(tmp_path / "long.csv")
        export_longform_csv(small_result, path)
        table = load_longform_csv(path)
        n = small_result.design.trajectories
        assert len(table["outcome"]) == n
        assert set(table["outcome"]) <= {"stalled", "exited_A", "exited_B", "failed"}
        flat = small_result.transit_times.reshape(-1)
        assert np.array_equal(table["transit_time_s"], flat)

    def test_longform_header(self, small_result, tmp_path):
        path = tmp_path / "long.csv"
        export_longform_csv(small_result, str(path))
        header = path.read_text().splitlines()[0]
        assert header == "velocity,gradient,entrance_index,outcome,transit_time_s,wall_contacts"

    def test_matrix_loader_rejects_bad_header(self, tmp_path):
        path = tmp_path / "matrix.csv"
        path.write_text("velocity,0.65\n0.0,1.0\n")
        with pytest.raises(FileFormatError):
            load_matrix_csv(str(path))
