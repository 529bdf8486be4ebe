import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capnav.errors import FileFormatError, InvalidParameterError, OutOfDomainError
from capnav.flowfield import (
    FlowField,
    FluidProperties,
    GridVectorField,
    cross_section_flux,
    friction_factor_blasius,
    friction_factor_from_pressure,
    load_vfield,
    make_flow,
    power_law_peak_factor,
    reynolds,
    save_vfield,
    trilinear_sample,
)


class TestCorrelations:
    def test_reynolds_bench_point(self, water):
        # 998.3 * 0.85 * 0.005 / 0.001, evaluated by hand.
        assert reynolds(water, 0.85, 0.005) == pytest.approx(4242.775, abs=1e-9)

    def test_friction_factor_from_bench_pressure_drop(self):
        f = friction_factor_from_pressure(279.03, 0.005, 0.096, 998.3, 0.85)
        assert f == pytest.approx(0.04029774492069043, rel=1e-12)

    def test_blasius_at_bench_reynolds(self):
        f = friction_factor_blasius(4242.775)
        assert f == pytest.approx(0.039153859884250804, rel=1e-12)

    def test_blasius_range_enforced(self):
        with pytest.raises(OutOfDomainError):
            friction_factor_blasius(2000.0)
        with pytest.raises(OutOfDomainError):
            friction_factor_blasius(2.0e5)

    def test_power_law_peak_factor_n7(self):
        # (n+1)(2n+1)/(2n^2) with n=7 is 120/98.
        assert power_law_peak_factor(7.0) == pytest.approx(120.0 / 98.0, rel=1e-15)

    def test_fluid_validation(self):
        with pytest.raises(InvalidParameterError):
            FluidProperties(density=0.0, viscosity=0.001)
        with pytest.raises(InvalidParameterError):
            FluidProperties(density=998.3, viscosity=-1.0)


class TestAnalyticProfiles:
    def test_parabolic_centreline_and_wall(self, tube, water):
        flow = make_flow(tube, water, 0.3, profile="parabolic")
        u = flow.velocity_at([0.05, 0.0, 0.0])
        assert u[0] == pytest.approx(0.6, rel=1e-15)
        assert u[1] == 0.0 and u[2] == 0.0
        assert flow.velocity_at([0.05, tube.radius, 0.0])[0] == 0.0
        assert np.all(flow.velocity_at([0.05, 0.004, 0.0]) == 0.0)

    def test_power_law_centreline(self, tube, water):
        flow = make_flow(tube, water, 0.85, profile="power_law")
        u = flow.velocity_at([0.05, 0.0, 0.0])
        assert u[0] == pytest.approx(0.85 * 120.0 / 98.0, rel=1e-15)

    def test_auto_profile_selection(self, tube, water):
        assert make_flow(tube, water, 0.85).profile == "power_law"
        assert make_flow(tube, water, 0.40).profile == "parabolic"

    def test_disk_average_recovers_mean(self, tube, water):
        # Both shapes are normalised so the cross-section average is the
        # configured mean; the midpoint rule should land close.
        area = math.pi * tube.radius**2
        for profile in ("parabolic", "power_law"):
            flow = make_flow(tube, water, 0.5, profile=profile)
            flux = cross_section_flux(flow, [0.05, 0, 0], [1, 0, 0], tube.radius, samples=128)
            assert flux / area == pytest.approx(0.5, rel=2e-3)

    def test_junction_wall_zeros_are_exact(self, junction, water):
        flow = make_flow(junction, water, 0.85, profile="power_law")
        jp = junction.junction_point
        # Main-channel wall upstream of the blend.
        assert np.all(flow.velocity_at([0.04, junction.radius, 0.0]) == 0.0)
        # Branch walls past the crotch: offset along z stays perpendicular
        # to both daughter axes, so these points sit on the union surface.
        for direction in (junction.branch_dir_a, junction.branch_dir_b):
            p = jp + 0.02 * direction + np.array([0.0, 0.0, junction.radius])
            assert np.all(flow.velocity_at(p) == 0.0)
        # Far outside the lumen.
        assert np.all(flow.velocity_at([0.05, 0.02, 0.0]) == 0.0)

    def test_blend_is_continuous_at_entry(self, junction, water):
        flow = make_flow(junction, water, 0.85, profile="power_law")
        x0 = junction.main_length - junction.diameter
        below = flow.velocity_at([x0 - 1e-10, 0.0005, 0.0002])
        above = flow.velocity_at([x0 + 1e-10, 0.0005, 0.0002])
        assert np.allclose(below, above, atol=1e-9)

    def test_split_fraction_shapes_branch_speeds(self, junction, water):
        flow = make_flow(junction, water, 0.85, profile="power_law", split_fraction=1.0)
        jp = junction.junction_point
        on_a = flow.velocity_at(jp + 0.02 * junction.branch_dir_a)
        on_b = flow.velocity_at(jp + 0.02 * junction.branch_dir_b)
        # All flow routed to A: full mean speed there, stagnant B branch.
        assert float(on_a @ junction.branch_dir_a) == pytest.approx(
            0.85 * 120.0 / 98.0, rel=1e-12
        )
        assert np.all(on_b == 0.0)

    def test_branch_flux_follows_split(self, junction, water):
        flow = make_flow(junction, water, 0.85, profile="power_law", split_fraction=0.7)
        jp = junction.junction_point
        qa = cross_section_flux(
            flow, jp + 0.02 * junction.branch_dir_a, junction.branch_dir_a, junction.radius
        )
        qb = cross_section_flux(
            flow, jp + 0.02 * junction.branch_dir_b, junction.branch_dir_b, junction.radius
        )
        assert qa / (qa + qb) == pytest.approx(0.7, abs=1e-12)

    def test_validation(self, tube, water):
        with pytest.raises(InvalidParameterError):
            make_flow(tube, water, -0.1, profile="parabolic")
        with pytest.raises(InvalidParameterError):
            make_flow(tube, water, 0.5, profile="plug")
        with pytest.raises(InvalidParameterError):
            make_flow(tube, water, 0.5, profile="parabolic", split_fraction=1.5)
        with pytest.raises(InvalidParameterError):
            FlowField(tube, water, 0.5, "power_law", power_exponent=0.0)


def _linear_values(origin, spacing, dims, matrix, offset):
    values = np.empty((*dims, 3))
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                p = origin + spacing * np.array([i, j, k])
                values[i, j, k] = matrix @ p + offset
    return values


class TestGridField:
    origin = np.array([-0.01, -0.02, 0.0])
    spacing = np.array([0.004, 0.005, 0.003])
    dims = (5, 4, 3)
    matrix = np.array([[0.3, -1.2, 0.7], [2.0, 0.1, -0.4], [-0.8, 0.9, 1.5]])
    offset = np.array([0.05, -0.02, 0.11])

    def make(self):
        values = _linear_values(self.origin, self.spacing, self.dims, self.matrix, self.offset)
        return GridVectorField(self.origin, self.spacing, values)

    def test_node_queries_return_stored_values_bitwise(self):
        field = self.make()
        for idx in ((0, 0, 0), (4, 3, 2), (2, 1, 1)):
            p = self.origin + self.spacing * np.array(idx)
            assert np.array_equal(field.sample(p), field.values[idx])

    def test_near_node_snapping(self):
        field = self.make()
        p = self.origin + self.spacing * np.array([2, 1, 1]) + 1e-13
        assert np.array_equal(field.sample(p), field.values[2, 1, 1])

    @settings(max_examples=100, deadline=None)
    @given(
        fx=st.floats(0.0, 1.0),
        fy=st.floats(0.0, 1.0),
        fz=st.floats(0.0, 1.0),
    )
    def test_trilinear_reproduces_linear_fields(self, fx, fy, fz):
        field = self.make()
        span = self.spacing * (np.array(self.dims) - 1)
        p = self.origin + span * np.array([fx, fy, fz])
        expected = self.matrix @ p + self.offset
        assert np.allclose(field.sample(p), expected, atol=1e-12)

    def test_out_of_domain_raises(self):
        field = self.make()
        with pytest.raises(OutOfDomainError):
            field.sample(self.origin - np.array([1e-3, 0, 0]))
        with pytest.raises(OutOfDomainError):
            field.sample(self.origin + self.spacing * np.array(self.dims))

    def test_grid_validation(self):
        with pytest.raises(InvalidParameterError):
            GridVectorField([0, 0, 0], [1, 1, -1], np.zeros((2, 2, 2, 3)))
        with pytest.raises(InvalidParameterError):
            GridVectorField([0, 0, 0], [1, 1, 1], np.zeros((1, 2, 2, 3)))
        with pytest.raises(InvalidParameterError):
            GridVectorField([0, 0, 0], [1, 1, 1], np.full((2, 2, 2, 3), np.nan))

    def test_save_load_round_trip_is_bitwise(self, tmp_path):
        field = self.make()
        path = str(tmp_path / "field.vfield")
        save_vfield(path, field)
        loaded = load_vfield(path)
        assert np.array_equal(loaded.values, field.values)
        assert np.array_equal(loaded.origin, field.origin)
        assert np.array_equal(loaded.spacing, field.spacing)

    def test_comments_and_blank_lines_before_header(self, tmp_path):
        field = self.make()
        path = str(tmp_path / "field.vfield")
        save_vfield(path, field)
        text = open(path).read()
        path2 = str(tmp_path / "annotated.vfield")
        with open(path2, "w") as fh:
            fh.write("# exported bench field\n\n" + text)
        loaded = load_vfield(path2)
        assert np.array_equal(loaded.values, field.values)

    @pytest.mark.parametrize(
        "mutate, lineno",
        [
            (lambda lines: lines.__setitem__(0, "VFIELD v9"), 1),
            (lambda lines: lines.__setitem__(1, "dims 5 4"), 2),
            (lambda lines: lines.__setitem__(2, "origin a b c"), 3),
            (lambda lines: lines.__setitem__(4, "1.0 2.0"), 5),
            (lambda lines: lines.__setitem__(4, "1.0 2.0 nan"), 5),
        ],
    )
    def test_malformed_files_name_the_line(self, tmp_path, mutate, lineno):
        field = self.make()
        path = str(tmp_path / "field.vfield")
        save_vfield(path, field)
        lines = open(path).read().splitlines()
        mutate(lines)
        bad = str(tmp_path / "bad.vfield")
        with open(bad, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        with pytest.raises(FileFormatError) as exc:
            load_vfield(bad)
        assert f"line {lineno}" in str(exc.value)

    def test_truncated_file_rejected(self, tmp_path):
        field = self.make()
        path = str(tmp_path / "field.vfield")
        save_vfield(path, field)
        lines = open(path).read().splitlines()
        bad = str(tmp_path / "short.vfield")
        with open(bad, "w") as fh:
            fh.write("\n".join(lines[:-3]) + "\n")
        with pytest.raises(FileFormatError):
            load_vfield(bad)

    def test_trilinear_component_counts(self):
        values = np.zeros((2, 2, 2, 1))
        values[1, :, :, 0] = 2.0
        out = trilinear_sample([0, 0, 0], [1, 1, 1], values, [0.25, 0.5, 0.5])
        assert out.shape == (1,)
        assert out[0] == pytest.approx(0.5, rel=1e-15)
