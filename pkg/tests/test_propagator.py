"""Fundamental-solution propagation against closed-form references."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scatter1d import (
    DeltaTerm,
    PotentialSpec,
    Segment,
    det_w,
    fundamental_at_R,
    fundamental_batch,
    initial_state,
    ode_step_count,
    validate,
    wronskian_defect,
)
from scatter1d.errors import NonFiniteState, ValidationError
from scatter1d.selftest import ode_test_potential

from conftest import bundled


def scalar_well(v: float, r: float = 1.0):
    return validate(
        PotentialSpec(channels=1, range=r, segments=(Segment(-r, r, [[v]]),))
    )


class TestBoundaryConditions:
    def test_initial_state_blocks(self):
        state = initial_state(3, 1.0, 2.0)
        assert np.array_equal(state.phi, np.eye(3))
        assert np.array_equal(state.chi_prime, np.eye(3))
        assert np.all(state.phi_prime == 0.0)
        assert np.all(state.chi == 0.0)
        assert state.x == -2.0

    def test_complex_k2_off_axis_rejected(self):
        with pytest.raises(ValidationError):
            fundamental_at_R(bundled("free"), 1.0 + 0.5j)


class TestClosedFormBlocks:
    def test_free_particle(self):
        k = 1.3
        state = fundamental_at_R(bundled("free"), k * k).state
        assert state.phi[0, 0] == pytest.approx(np.cos(2 * k), abs=1e-14)
        assert state.chi[0, 0] == pytest.approx(np.sin(2 * k) / k, abs=1e-14)
        assert state.phi_prime[0, 0] == pytest.approx(-k * np.sin(2 * k), abs=1e-14)
        assert state.chi_prime[0, 0] == pytest.approx(np.cos(2 * k), abs=1e-14)

    def test_diagonal_slab_mixed_branches(self):
        # channel 1 oscillatory (k2 > v), channel 2 hyperbolic (k2 < v)
        k = 1.0
        spec = validate(
            PotentialSpec(
                channels=2,
                range=1.0,
                segments=(Segment(-1.0, 1.0, np.diag([-1.0, 4.0])),),
            )
        )
        state = fundamental_at_R(spec, k * k).state
        w = np.sqrt(2.0)
        assert state.phi[0, 0] == pytest.approx(np.cos(2 * w), abs=1e-13)
        assert state.chi[0, 0] == pytest.approx(np.sin(2 * w) / w, abs=1e-13)
        m = np.sqrt(3.0)
        assert state.phi[1, 1] == pytest.approx(np.cosh(2 * m), rel=1e-13)
        assert state.chi[1, 1] == pytest.approx(np.sinh(2 * m) / m, rel=1e-13)
        assert state.phi[0, 1] == pytest.approx(0.0, abs=1e-13)

    def test_degenerate_branch_linear_limit(self):
        # v = k2 exactly: phi stays 1, chi grows linearly across the slab
        state = fundamental_at_R(scalar_well(1.0), 1.0).state
        assert state.phi[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert state.chi[0, 0] == pytest.approx(2.0, abs=1e-9)
        assert state.phi_prime[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_centered_delta(self):
        # free-slab transfer with one derivative jump at x=0 gives
        # phi(R) = cos 2kR + (lambda / 2k) sin 2kR for R=1
        lam, k = -2.0, 0.9
        state = fundamental_at_R(bundled("single_delta"), k * k).state
        assert state.phi[0, 0] == pytest.approx(
            np.cos(2 * k) + lam / (2 * k) * np.sin(2 * k), abs=1e-13
        )

    def test_bound_side_free_particle(self):
        alpha = 0.7
        state = fundamental_at_R(bundled("free"), -alpha * alpha).state
        assert state.phi[0, 0] == pytest.approx(np.cosh(2 * alpha), rel=1e-13)
        assert state.chi[0, 0] == pytest.approx(np.sinh(2 * alpha) / alpha, rel=1e-13)


class TestInvariants:
    @pytest.mark.parametrize(
        "name",
        ["free", "single_delta", "double_delta_a1.00", "barrier", "square_well"],
    )
    def test_det_w_and_wronskian_closed_path(self, name):
        for k2 in (-2.0, 0.0, 0.25, 4.0, 100.0):
            report = fundamental_at_R(bundled(name), k2)
            assert report.det_deviation < 1e-12
            assert abs(det_w(report.state) - 1.0) < 1e-10
            assert wronskian_defect(report.state) < 1e-10

    def test_det_w_square_well_depth_four_sweep(self):
        # frozen example: v = -4, R = 1 well swept over scattering energies
        spec = scalar_well(-4.0)
        for k in np.linspace(0.1, 10.0, 25):
            assert fundamental_at_R(spec, k * k).det_deviation < 1e-8

    def test_det_w_and_wronskian_ode_path(self):
        spec = ode_test_potential()
        for k2 in (0.25, 1.0, 16.0):
            report = fundamental_at_R(spec, k2)
            assert report.det_deviation < 1e-8
            assert wronskian_defect(report.state) < 1e-8

    def test_realness_for_real_k2(self, bundled_spec):
        state = fundamental_at_R(bundled_spec, 2.31).state
        for block in (state.phi, state.phi_prime, state.chi, state.chi_prime):
            assert np.max(np.abs(np.imag(block))) == 0.0

    def test_overflow_raises(self):
        with pytest.raises(NonFiniteState):
            fundamental_at_R(bundled("free"), -(200.0**2))

    @given(
        v=st.floats(-5, 5, allow_nan=False),
        k2=st.floats(-4, 25, allow_nan=False),
        width=st.floats(0.1, 2.0, allow_nan=False),
    )
    def test_det_w_property_random_slab(self, v, k2, width):
        spec = validate(
            PotentialSpec(
                channels=1, range=width, segments=(Segment(-width, width, [[v]]),)
            )
        )
        assert fundamental_at_R(spec, k2).det_deviation < 1e-10


class TestBatch:
    def test_batch_matches_single(self):
        spec = bundled("barrier")
        k2s = np.array([0.3, 1.7, 9.0])
        blocks, dev, _ = fundamental_batch(spec, k2s)
        assert dev < 1e-12
        for i, k2 in enumerate(k2s):
            single = fundamental_at_R(spec, float(k2)).state
            assert np.allclose(blocks[0][i], single.phi, atol=1e-14)
            assert np.allclose(blocks[3][i], single.chi_prime, atol=1e-14)

    def test_batch_matches_single_ode_path(self):
        spec = ode_test_potential()
        k2s = np.array([0.5, 2.0])
        nsteps = ode_step_count(2.0 * spec.range, spec.sampled.step, float(k2s.max()))
        blocks, _, _ = fundamental_batch(spec, k2s, ode_nsteps=nsteps)
        for i, k2 in enumerate(k2s):
            single = fundamental_at_R(spec, float(k2), ode_nsteps=nsteps).state
            assert np.allclose(blocks[1][i], single.phi_prime, atol=1e-13)


class TestStepCount:
    def test_floor_from_base_step(self):
        assert ode_step_count(2.0, 1e-2, 0.01) == 200

    def test_power_of_two_refinement(self):
        base = ode_step_count(2.0, 1e-2, 0.01)
        for k in (30.0, 60.0, 120.0):
            count = ode_step_count(2.0, 1e-2, k * k)
            assert count % base == 0
            ratio = count // base
            assert ratio & (ratio - 1) == 0  # power of two
            assert count >= 2.0 * k / 1e-2  # h |k| below the default cap

    def test_monotone_in_energy(self):
        counts = [ode_step_count(2.0, 1e-3, k2) for k2 in (1.0, 1e2, 1e4, 1e6)]
        assert counts == sorted(counts)
