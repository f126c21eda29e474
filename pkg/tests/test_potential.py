"""Potential spec validation, evaluation, parity, and serialization."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scatter1d import (
    DeltaTerm,
    ParityClass,
    PotentialSpec,
    SampledRegion,
    Segment,
    bundled_spec_path,
    classify_parity,
    evaluate,
    load_spec,
    orthogonal_diagonalize,
    save_spec,
    spec_from_dict,
    spec_to_dict,
    validate,
)
from scatter1d.errors import (
    NonSymmetricMatrix,
    OverlappingSegments,
    SupportOutsideRange,
    ValidationError,
)

from conftest import BUNDLED_NAMES, bundled


def symmetric_matrices(n):
    return hnp.arrays(
        np.float64,
        (n, n),
        elements=st.floats(-3, 3, allow_nan=False, allow_infinity=False, width=32),
    ).map(lambda a: (a + a.T) / 2)


class TestValidate:
    def test_well_formed_segment_spec(self):
        spec = validate(
            PotentialSpec(channels=1, range=1.0, segments=(Segment(-1.0, 1.0, [[-2.0]]),))
        )
        assert spec.channels == 1
        assert spec.segments[0].matrix.shape == (1, 1)

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(NonSymmetricMatrix):
            validate(
                PotentialSpec(
                    channels=2,
                    range=1.0,
                    deltas=(DeltaTerm(0.0, [[0.0, 1.0], [2.0, 0.0]]),),
                )
            )

    def test_delta_outside_range_rejected(self):
        with pytest.raises(SupportOutsideRange):
            validate(PotentialSpec(channels=1, range=1.0, deltas=(DeltaTerm(1.5, [[-1.0]]),)))

    def test_overlapping_segments_rejected(self):
        with pytest.raises(OverlappingSegments):
            validate(
                PotentialSpec(
                    channels=1,
                    range=1.0,
                    segments=(Segment(-1.0, 0.5, [[1.0]]), Segment(0.0, 1.0, [[2.0]])),
                )
            )

    def test_segments_sorted_after_validation(self):
        spec = validate(
            PotentialSpec(
                channels=1,
                range=1.0,
                segments=(Segment(0.0, 1.0, [[2.0]]), Segment(-1.0, 0.0, [[1.0]])),
            )
        )
        assert [seg.lo for seg in spec.segments] == [-1.0, 0.0]

    def test_sampled_exclusive_with_segments(self):
        with pytest.raises(ValidationError):
            validate(
                PotentialSpec(
                    channels=1,
                    range=1.0,
                    segments=(Segment(-1.0, 1.0, [[1.0]]),),
                    sampled=SampledRegion(step=1e-3, evaluator=lambda x: np.eye(1)),
                )
            )

    def test_wrong_matrix_shape_rejected(self):
        with pytest.raises(ValidationError):
            validate(PotentialSpec(channels=2, range=1.0, deltas=(DeltaTerm(0.0, [[-1.0]]),)))


class TestEvaluate:
    def test_segment_value_inside(self):
        spec = validate(
            PotentialSpec(channels=1, range=1.0, segments=(Segment(-1.0, 1.0, [[-2.0]]),))
        )
        assert evaluate(spec, 0.0) == pytest.approx(np.array([[-2.0]]))

    def test_zero_outside_support(self, bundled_spec):
        for x in (-2.0 * bundled_spec.range, 2.0 * bundled_spec.range, 1e6):
            assert np.all(evaluate(bundled_spec, x) == 0.0)

    def test_shared_boundary_owned_by_right_open_interval(self):
        spec = validate(
            PotentialSpec(
                channels=1,
                range=1.0,
                segments=(Segment(-1.0, 0.0, [[1.0]]), Segment(0.0, 1.0, [[2.0]])),
            )
        )
        assert evaluate(spec, 0.0)[0, 0] == 2.0
        assert evaluate(spec, -0.5)[0, 0] == 1.0


class TestClassifyParity:
    def test_single_centered_delta_even(self):
        assert classify_parity(bundled("single_delta")) is ParityClass.EVEN

    def test_unequal_delta_pair_not_even(self):
        assert classify_parity(bundled("double_delta_a1.00")) is ParityClass.NONE

    def test_off_center_barrier_not_even(self):
        assert classify_parity(bundled("barrier")) is ParityClass.NONE

    def test_full_width_well_even(self):
        assert classify_parity(bundled("square_well")) is ParityClass.EVEN


class TestOrthogonalDiagonalize:
    def test_diagonal_input_reordered_by_magnitude(self):
        m = np.diag([-0.5, -1.0])
        u, d = orthogonal_diagonalize(m)
        assert d == pytest.approx([-1.0, -0.5])
        assert u @ np.diag(d) @ u.T == pytest.approx(m, abs=1e-14)

    def test_coupled_pair_eigenvalues(self):
        # characteristic polynomial x^2 + 7x + 2 with roots (-7 +- sqrt(41))/2
        _, d = orthogonal_diagonalize(np.array([[-6.0, -2.0], [-2.0, -1.0]]))
        assert d == pytest.approx([(-7 - np.sqrt(41)) / 2, (-7 + np.sqrt(41)) / 2])

    def test_zero_matrix(self):
        u, d = orthogonal_diagonalize(np.zeros((3, 3)))
        assert np.all(d == 0.0)
        assert u @ u.T == pytest.approx(np.eye(3))

    @given(st.integers(1, 3).flatmap(symmetric_matrices))
    def test_reconstruction_property(self, m):
        u, d = orthogonal_diagonalize(m)
        bound = 1e-12 * (1 + np.max(np.abs(m)))
        assert np.max(np.abs(u @ np.diag(d) @ u.T - m)) < bound
        assert np.max(np.abs(u.T @ u - np.eye(m.shape[0]))) < 1e-12
        assert np.all(np.diff(np.abs(d)) <= 1e-12 * (1 + np.max(np.abs(d))))


class TestSerialization:
    def test_dict_round_trip(self):
        spec = bundled("double_delta_a1.00")
        again = validate(spec_from_dict(spec_to_dict(spec)))
        assert again.channels == spec.channels
        assert again.range == spec.range
        for a, b in zip(again.deltas, spec.deltas):
            assert a.position == b.position
            assert np.array_equal(a.strength, b.strength)

    def test_file_round_trip(self, tmp_path):
        spec = bundled("barrier")
        path = tmp_path / "barrier.json"
        save_spec(spec, str(path))
        again = validate(load_spec(str(path)))
        assert np.array_equal(again.segments[0].matrix, spec.segments[0].matrix)
        assert again.segments[0].lo == spec.segments[0].lo

    def test_json_shape_matches_documented_format(self):
        data = json.loads(open(bundled_spec_path("double_delta_a1.00")).read())
        assert set(data) <= {"channels", "range", "segments", "deltas"}
        assert {"pos", "matrix"} == set(data["deltas"][0])

    def test_sampled_spec_not_serializable(self):
        spec = validate(
            PotentialSpec(
                channels=1,
                range=1.0,
                sampled=SampledRegion(step=1e-3, evaluator=lambda x: np.zeros((1, 1))),
            )
        )
        with pytest.raises(ValidationError):
            spec_to_dict(spec)

    @pytest.mark.parametrize("name", BUNDLED_NAMES)
    def test_every_bundled_spec_validates(self, name):
        spec = bundled(name)
        assert spec.channels >= 1
        assert spec.range > 0
