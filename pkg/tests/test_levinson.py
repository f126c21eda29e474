"""Global phase unwrapping, phase-at-threshold counting, and the trace identity."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatter1d import (
    AnchorNotConverged,
    GridTooCoarse,
    NonUnitaryInput,
    PhaseCurve,
    SMatrix,
    ValidationError,
    amplitudes_at,
    default_k_grid,
    eta_at_threshold,
    levinson_check,
    phase_curve,
    raw_phase,
    s_matrix,
    threshold_trace_check,
    unwrap_mod_pi,
)

from conftest import BUNDLED_NAMES, bundled

SPACING_TAGS = ("0.95", "1.00", "1.05")


class TestRawPhase:
    def test_free_particle_phase_is_zero(self):
        sm = s_matrix(amplitudes_at(bundled("free"), 3.7))
        assert abs(raw_phase(sm)) < 1e-12

    def test_result_in_principal_branch(self):
        for k in (0.05, 0.7, 3.0, 40.0):
            sm = s_matrix(amplitudes_at(bundled("double_delta_a1.00"), k))
            phase = raw_phase(sm)
            assert -np.pi / 2 <= phase <= np.pi / 2

    def test_rejects_non_unitary_matrix(self):
        sm = s_matrix(amplitudes_at(bundled("square_well"), 1.0))
        corrupted = SMatrix(k=sm.k, s=sm.s * 1.01)
        with pytest.raises(NonUnitaryInput):
            raw_phase(corrupted)


class TestUnwrap:
    def test_first_sample_preserved(self):
        out = unwrap_mod_pi([0.3, 0.4, 0.5])
        assert out[0] == 0.3

    def test_continues_through_branch_crossings(self):
        # a steadily climbing phase wrapped to the principal branch
        path = np.linspace(0.0, 4.0, 50)
        raws = np.mod(path + np.pi / 2, np.pi) - np.pi / 2
        np.testing.assert_allclose(unwrap_mod_pi(raws), path, atol=1e-12)

    @settings(max_examples=40)
    @given(
        start=st.floats(min_value=-1.5, max_value=1.5),
        steps=st.lists(
            st.floats(min_value=-1.5, max_value=1.5), min_size=1, max_size=60
        ),
    )
    def test_round_trip_for_resolved_paths(self, start, steps):
        """Any path with steps below pi/2 survives wrap + unwrap exactly."""
        path = start + np.concatenate([[0.0], np.cumsum(steps)])
        raws = np.mod(path + np.pi / 2, np.pi) - np.pi / 2
        unwrapped = unwrap_mod_pi(raws)
        # unwrapping fixes the overall branch from the first sample
        np.testing.assert_allclose(unwrapped - unwrapped[0], path - path[0], atol=1e-9)

    def test_ambiguous_step_raises(self):
        with pytest.raises(GridTooCoarse):
            unwrap_mod_pi([0.0, np.pi / 2])


class TestGrids:
    def test_default_grid_shape(self):
        spec = bundled("square_well")
        ks = default_k_grid(spec)
        assert ks.size == 2000
        assert ks[0] == pytest.approx(100.0 / (2.0 * spec.range))
        assert ks[-1] == pytest.approx(1e-3)
        assert np.all(np.diff(ks) < 0)

    def test_default_grid_validation(self):
        spec = bundled("square_well")
        with pytest.raises(ValidationError):
            default_k_grid(spec, k_min=0.0)
        with pytest.raises(ValidationError):
            default_k_grid(spec, k_min=2.0, k_max=1.0)
        with pytest.raises(ValidationError):
            default_k_grid(spec, points=1)

    def test_phase_curve_rejects_ascending_grid(self):
        spec = bundled("square_well")
        with pytest.raises(ValidationError):
            phase_curve(spec, np.geomspace(1e-3, 50.0, 100))

    def test_phase_curve_rejects_low_anchor(self):
        spec = bundled("square_well")
        with pytest.raises(ValidationError):
            phase_curve(spec, np.geomspace(10.0, 1e-3, 4000))

    def test_phase_curve_rejects_sparse_small_k_sampling(self):
        spec = bundled("square_well")
        with pytest.raises(ValidationError):
            phase_curve(spec, np.geomspace(50.0, 1e-3, 40))


class TestPhaseCurve:
    def test_square_well_threshold_phase(self):
        """One bound state, no half-bound state, one channel:
        eta(0) = pi * (1 - 1/2) = pi/2."""
        curve = phase_curve(bundled("square_well"))
        assert eta_at_threshold(curve) == pytest.approx(np.pi / 2, abs=1e-2 * np.pi)

    def test_curve_fields(self):
        spec = bundled("double_delta_a1.00")
        curve = phase_curve(spec)
        assert np.all(np.diff(curve.ks) > 0)
        assert curve.anchor_k == pytest.approx(50.0 / spec.range)
        assert abs(curve.anchor_raw) < 0.1
        assert curve.max_unitarity_residual < 1e-9
        assert curve.eta.shape == curve.ks.shape

    def test_anchor_tolerance_enforced(self):
        with pytest.raises(AnchorNotConverged):
            phase_curve(bundled("square_well"), anchor_tol=1e-12)

    def test_unitarity_tolerance_enforced(self):
        with pytest.raises(NonUnitaryInput):
            phase_curve(bundled("square_well"), unitarity_tol=1e-16)

    def test_tail_decays_monotonically(self):
        """Beyond k = 10 the phase magnitude must not grow (to 1e-3)."""
        for tag in SPACING_TAGS:
            curve = phase_curve(bundled(f"double_delta_a{tag}"))
            tail = np.abs(curve.eta[curve.ks >= 10.0])
            assert np.max(np.diff(tail)) < 1e-3

    def test_extrapolation_is_exact_on_linear_data(self):
        ks = np.array([1e-3, 2e-3, 5e-3])
        eta = 0.7 + 3.1 * ks
        curve = PhaseCurve(
            ks=ks, eta=eta, anchor_k=50.0, anchor_raw=0.0, max_unitarity_residual=0.0
        )
        assert eta_at_threshold(curve) == pytest.approx(0.7, rel=1e-12)


class TestLevinson:
    def test_counting_identity_on_all_bundled_models(self, bundled_spec):
        """eta(0) = pi (n_bound + n_half/2 - channels/2), end to end."""
        result = levinson_check(bundled_spec)
        assert result.residual < 1e-2 * np.pi
        assert result.predicted == pytest.approx(
            np.pi
            * (result.n_bound + result.n_half_bound / 2.0 - result.channels / 2.0)
        )
        assert result.residual == pytest.approx(abs(result.eta0 - result.predicted))

    def test_free_particle(self):
        result = levinson_check(bundled("free"))
        assert result.n_bound == 0
        assert result.n_half_bound == 1
        assert result.channels == 1
        assert result.predicted == 0.0
        assert abs(result.eta0) < 1e-3

    def test_half_bound_transition_steps_phase_by_pi(self):
        """Crossing the half-bound spacing converts the half state into a
        full bound state: eta(0) climbs by pi, passing through the midpoint
        exactly at the transition."""
        eta0 = {
            tag: levinson_check(bundled(f"double_delta_a{tag}")).eta0
            for tag in SPACING_TAGS
        }
        assert eta0["1.05"] - eta0["0.95"] == pytest.approx(np.pi, abs=2e-2 * np.pi)
        midpoint = 0.5 * (eta0["0.95"] + eta0["1.05"])
        assert eta0["1.00"] == pytest.approx(midpoint, abs=2e-2 * np.pi)

    def test_expected_counts_for_half_bound_family(self):
        expected = {
            "0.95": (2, 0, np.pi),
            "1.00": (2, 1, 1.5 * np.pi),
            "1.05": (3, 0, 2.0 * np.pi),
        }
        for tag, (n_b, n_half, predicted) in expected.items():
            result = levinson_check(bundled(f"double_delta_a{tag}"))
            assert (result.n_bound, result.n_half_bound) == (n_b, n_half)
            assert result.predicted == pytest.approx(predicted)


class TestTraceIdentity:
    def test_threshold_trace_on_all_bundled_models(self, bundled_spec):
        """Tr[rho(0) + rho_tilde(0)] = -2 (channels - n_half)."""
        result = threshold_trace_check(bundled_spec)
        assert result.residual < 5e-2
        assert result.predicted == -2.0 * (result.channels - result.n_half_bound)

    def test_free_particle_trace_vanishes(self):
        result = threshold_trace_check(bundled("free"))
        assert result.predicted == 0.0
        assert abs(result.trace) < 1e-10

    def test_half_bound_shifts_prediction(self):
        full = threshold_trace_check(bundled("double_delta_a0.95"))
        half = threshold_trace_check(bundled("double_delta_a1.00"))
        assert full.predicted == -4.0
        assert half.predicted == -2.0
