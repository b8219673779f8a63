import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catbell import analytic as an
from catbell import fock
from catbell.errors import ConsistencyError, DegenerateState, TsirelsonViolation

CUTOFF = 64

coord = st.floats(-3.0, 3.0, allow_nan=False)
amp = st.builds(complex, coord, coord)
small_amp = st.builds(complex, st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
phase = st.floats(0.0, 2 * math.pi, exclude_max=True)


@st.composite
def states(draw, amplitudes=amp):
    sigma, eta, phi = draw(amplitudes), draw(amplitudes), draw(phase)
    denom = 1 + math.cos(phi) * math.exp(-2 * (abs(sigma) ** 2 + abs(eta) ** 2))
    if denom < 1e-6:
        # keep away from the degenerate corner where the normalization blows up
        phi = 0.0
    return an.make_cat_state(sigma, eta, phi)


class TestOverlap:
    @given(amp)
    def test_self_overlap_is_one(self, xi):
        assert an.coherent_overlap(xi, xi) == 1

    def test_opposite_amplitudes(self):
        assert an.coherent_overlap(2, -2) == pytest.approx(math.exp(-8), rel=1e-12)
        assert abs(an.coherent_overlap(2, -2) - 3.3546e-4) < 1e-8

    @given(amp)
    def test_vacuum_overlap_real_positive(self, beta):
        val = an.coherent_overlap(0, beta)
        assert val.imag == 0
        assert val.real == pytest.approx(math.exp(-abs(beta) ** 2 / 2), rel=1e-14)
        assert val.real > 0

    @given(amp, amp)
    def test_modulus_bounded(self, u, v):
        assert abs(an.coherent_overlap(u, v)) <= 1 + 1e-15

    def test_convention_matches_oracle(self):
        u, v = 0.3 - 1.1j, -0.8 + 0.4j
        assert an.coherent_overlap(u, v) == pytest.approx(fock.oracle_overlap(u, v, CUTOFF), abs=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            an.coherent_overlap(complex(math.nan, 0), 1)


class TestWeyl:
    @given(amp)
    def test_identity_displacement(self, xi):
        phase, total = an.weyl_compose(xi, 0)
        assert phase == 0 and total == xi

    @given(amp)
    def test_inverse_gives_identity(self, xi):
        phase, total = an.weyl_compose(xi, -xi)
        assert phase == 0 and total == 0

    def test_i_then_one(self):
        phase, total = an.weyl_compose(1j, 1)
        assert phase == 1.0 and total == 1 + 1j
        lhs = fock.displacement_matrix(1j, CUTOFF) @ fock.displacement_matrix(1, CUTOFF)
        rhs = cmath.exp(1j * phase) * fock.displacement_matrix(total, CUTOFF)
        m = fock.reliable_dimension(abs(total), CUTOFF)
        assert m > 10
        assert abs(lhs - rhs)[:m, :m].max() < 1e-8

    @given(amp, amp)
    def test_phase_antisymmetric(self, a, b):
        assert an.weyl_compose(a, b)[0] == -an.weyl_compose(b, a)[0]


class TestCatState:
    def test_vacuum_normalization(self):
        assert an.make_cat_state(0, 0, 0).norm_factor == 0.5

    def test_degenerate(self):
        with pytest.raises(DegenerateState):
            an.make_cat_state(0, 0, math.pi)

    def test_large_odd_cat(self):
        state = an.make_cat_state(2, 2, math.pi)
        assert state.norm_factor**2 == pytest.approx(1 / (2 * (1 - math.exp(-16))), rel=1e-14)
        assert abs(fock.build_cat_state(state, CUTOFF).norm - 1) < 1e-10

    @given(states())
    def test_normalization_identity(self, state):
        lhs = state.norm_factor**2 * 2 * (
            1 + math.cos(state.phi) * math.exp(-2 * (abs(state.sigma) ** 2 + abs(state.eta) ** 2))
        )
        assert lhs == pytest.approx(1, abs=1e-12)
        assert state.norm_factor > 0

    def test_accepts_pairs(self):
        assert an.make_cat_state((1, 2), 0, 0).sigma == 1 + 2j


class TestProjectors:
    def test_vacuum_single(self):
        assert an.proj_expectation_single(0, an.make_cat_state(0, 0, 0)) == 1

    def test_far_single(self):
        assert an.proj_expectation_single(10, an.make_cat_state(1, 1, math.pi)) < 1e-30

    def test_single_against_oracle(self):
        state = an.make_cat_state(1.2, 0.8, math.pi)
        for mode in "AB":
            expected = fock.oracle_proj_single(1 + 0.5j, state, CUTOFF, mode)
            assert an.proj_expectation_single(1 + 0.5j, state, mode) == pytest.approx(expected, abs=1e-8)

    def test_vacuum_joint(self):
        assert an.proj_expectation_joint(0, 0, an.make_cat_state(0, 0, 0)) == 1

    def test_far_joint(self):
        state = an.make_cat_state(1, 1, math.pi)
        for w in (0, 1, -1j, 2.5):
            assert an.proj_expectation_joint(10, w, state) < 1e-30

    def test_joint_against_oracle(self):
        state = an.make_cat_state(1.5, 1.5, math.pi)
        expected = fock.oracle_proj_joint(1, 1, state, CUTOFF)
        assert an.proj_expectation_joint(1, 1, state) == pytest.approx(expected, abs=1e-8)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            an.proj_expectation_single(0, an.make_cat_state(0, 0, 0), "C")

    @given(amp, amp, states())
    def test_ranges(self, z, w, state):
        pa = an.proj_expectation_single(z, state, "A")
        pb = an.proj_expectation_single(w, state, "B")
        pj = an.proj_expectation_joint(z, w, state)
        assert 0 <= pa <= 1 + 1e-12
        assert 0 <= pb <= 1 + 1e-12
        assert 0 <= pj <= min(pa, pb) + 1e-12


class TestCorrelator:
    def test_vacuum(self):
        assert an.correlator(0, 0, an.make_cat_state(0, 0, 0)) == 1

    def test_far_settings(self):
        assert an.correlator(10, 10, an.make_cat_state(1, 1, math.pi)) == 1

    def test_grid_against_oracle(self):
        grid = [0.2 + 0.45 * i for i in range(5)]
        worst = 0.0
        for a in grid:
            for o in grid:
                state = an.make_cat_state(a, o, math.pi)
                worst = max(worst, abs(an.correlator(1, 1, state) - fock.oracle_correlator(1, 1, state, CUTOFF)))
        assert worst <= 1e-8

    @given(amp, amp, states())
    def test_bounded(self, z, w, state):
        assert abs(an.correlator(z, w, state)) <= 1 + 1e-9

    @given(amp, amp, states())
    def test_mode_exchange(self, z, w, state):
        swapped = an.make_cat_state(state.eta, state.sigma, state.phi)
        assert an.correlator(z, w, state) == pytest.approx(an.correlator(w, z, swapped), abs=1e-12)

    @given(amp, amp, coord, coord)
    def test_parity(self, z, w, s, e):
        state = an.make_cat_state(s, e, 0.0)
        flipped = an.make_cat_state(-s, -e, 0.0)
        assert an.correlator(z, w, state) == pytest.approx(an.correlator(-z, -w, flipped), abs=1e-12)


class TestChsh:
    @given(amp, states())
    def test_identical_settings_degenerate(self, z, state):
        val = an.chsh(an.MeasurementSettings.uniform(z), state)
        assert val.value == pytest.approx(2 * an.correlator(z, z, state), abs=1e-12)
        assert abs(val.value) <= 2 + 1e-12
        assert val.classification == "classical"

    def test_vacuum_boundary(self):
        val = an.chsh(an.MeasurementSettings.uniform(0), an.make_cat_state(0, 0, 0))
        assert val.value == 2
        assert val.classification == "classical"

    def test_reference_violation(self, reference):
        settings, state, best = reference
        val = an.chsh(settings, state)
        assert abs(val.value) > 2
        assert val.violating
        assert abs(val.value) == pytest.approx(best, abs=1e-12)

    @settings(max_examples=300)
    @given(amp, amp, amp, amp, states())
    def test_tsirelson(self, z, zp, w, wp, state):
        val = an.chsh(an.MeasurementSettings(z, zp, w, wp), state)
        assert abs(val.value) <= an.TSIRELSON + 1e-9
        assert val.violating == (abs(val.value) > 2)

    def test_breach_raises(self):
        with pytest.raises(TsirelsonViolation):
            an.combine_chsh(1, 1, 1, -1)

    def test_breach_is_consistency_error(self):
        assert issubclass(TsirelsonViolation, ConsistencyError)
