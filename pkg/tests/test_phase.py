import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpcurv import PhaseState, scalar_invariant
from warpcurv.errors import ArgumentError, CapacityError
from warpcurv.phase import (
    basin_experiment,
    blowup_experiment,
    conjugacy_error,
    draw_blowup_state,
    expected_spectrum,
    field_at,
    in_trap,
    linearize_zero,
    scaling_map,
    scaling_pushforward,
    tanh_parameter,
    zero_matrix,
)

# keep products away from the subnormal range, where rounding is not relative
coords = st.floats(-4, 4, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-6)
nonzero = st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3)


@st.composite
def states(draw):
    k = draw(st.integers(1, 4))
    return PhaseState(draw(st.lists(coords, min_size=k, max_size=k)), draw(st.lists(coords, min_size=k, max_size=k)))


class TestLinearization:
    @pytest.mark.parametrize(
        "q, n, spectrum",
        [
            (1.0, 3, [0.0, 1.0, 2.0, 3.0]),
            (-2.0, 4, [-8.0, -6.0, -6.0, -2.0, -2.0, 0.0]),
            (0.0, 3, [0.0, 0.0, 0.0, 0.0]),
        ],
    )
    def test_spectra(self, q, n, spectrum):
        rep = linearize_zero(q, n)
        np.testing.assert_allclose(rep.eigenvalues, spectrum, atol=1e-10)
        assert rep.ok

    def test_matrix_action(self, rng):
        q, n = -1.3, 5
        M = zero_matrix(q, n)
        yh, ph = rng.normal(size=4), rng.normal(size=4)
        out = M @ np.r_[yh, ph]
        np.testing.assert_allclose(out[:4], ph)
        np.testing.assert_allclose(out[4:], n * q * ph + q * q * yh.sum() - (n - 1) * q * q * yh)

    def test_matches_field_jacobian(self):
        # the linearization is the derivative of the phase field at q(1, 0)
        q, n, h = 0.7, 4, 1e-6
        base = PhaseState.identity_multiple(n, q)
        J = np.empty((6, 6))
        for i in range(6):
            e = np.zeros(6)
            e[i] = h
            plus = field_at(PhaseState.from_flat(base.flat() + e)).flat()
            minus = field_at(PhaseState.from_flat(base.flat() - e)).flat()
            J[:, i] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(J, zero_matrix(q, n), atol=1e-8)

    def test_eigenspaces(self):
        rep = linearize_zero(0.5, 6)
        assert set(rep.eigenspaces) == {"zero", "nq", "(n-1)q", "q"} and all(rep.eigenspaces.values())
        assert rep.to_dict()["ok"]

    def test_expected_multiset(self):
        np.testing.assert_array_equal(expected_spectrum(2.0, 5), [0, 2, 2, 2, 8, 8, 8, 10])

    def test_capacity(self):
        with pytest.raises(CapacityError):
            linearize_zero(1.0, 2)


class TestScaling:
    def test_identity(self):
        s = PhaseState([1.0, 2.0], [3.0, 4.0])
        assert scaling_map(s, 1.0) == s

    def test_hand_value(self):
        s = PhaseState([1.0, 2.0], [0.0, 0.0])
        assert scalar_invariant(s) == -14.0
        assert scalar_invariant(scaling_map(s, 2.0)) == -56.0

    @pytest.mark.parametrize("c", [0.0, math.inf, math.nan])
    def test_invalid(self, c):
        with pytest.raises(ArgumentError):
            scaling_map(PhaseState([1.0], [1.0]), c)

    @given(states(), st.integers(-6, 6), st.integers(-6, 6), st.sampled_from([-1.0, 1.0]), st.sampled_from([-1.0, 1.0]))
    def test_group_law_dyadic(self, s, i, j, si, sj):
        c, d = si * 2.0**i, sj * 2.0**j
        assert scaling_map(scaling_map(s, d), c) == scaling_map(s, c * d)

    @given(states(), nonzero, nonzero)
    def test_group_law(self, s, c, d):
        lhs = scaling_map(scaling_map(s, d), c).flat()
        rhs = scaling_map(s, c * d).flat()
        np.testing.assert_allclose(lhs, rhs, rtol=4 * np.finfo(float).eps, atol=0)

    def test_pullback_law(self, rng):
        eps = np.finfo(float).eps
        for _ in range(1000):
            k = int(rng.integers(1, 6))
            x = PhaseState(rng.uniform(-3, 3, k), rng.uniform(-3, 3, k))
            c = float(rng.uniform(0.1, 3.0)) * rng.choice([-1, 1])
            y, p = x.y, x.p
            terms = max(2 * np.abs(p).sum(), (y * y).sum(), y.sum() ** 2, 1e-300) * c * c
            assert abs(scalar_invariant(scaling_map(x, c)) - c * c * scalar_invariant(x)) <= 8 * eps * terms * k

    @given(states(), nonzero)
    def test_field_relation(self, s, c):
        lhs = field_at(scaling_map(s, c)).flat()
        rhs = c * scaling_pushforward(s, c, field_at(s)).flat()
        scale = max(1.0, float(np.max(np.abs(rhs))))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    @settings(max_examples=5, deadline=None)
    @given(st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4), st.floats(0.3, 2.0), st.sampled_from([-1.0, 1.0]))
    def test_flow_conjugacy(self, x, c, sign):
        err = conjugacy_error(PhaseState(x[:2], x[2:]), sign * c, np.linspace(-0.2, 0.2, 9))
        assert err < 1e-7


class TestTrap:
    def test_tanh_parameter(self):
        assert tanh_parameter(3, 0.0, 6.0) == pytest.approx(1.0)
        assert tanh_parameter(4, 1.0, 2.0) == pytest.approx(math.sqrt((4 + 4) / 16))

    def test_zeta_positive(self):
        with pytest.raises(ArgumentError):
            tanh_parameter(3, 0.0, 0.0)

    def test_in_trap(self):
        assert in_trap(PhaseState([-2.1, -1.9], [0.3, -0.2]), -2.0)
        assert not in_trap(PhaseState([-2.5, -2.0], [0.0, 0.0]), -2.0)


class TestBasin:
    def test_center_is_exact_tanh(self):
        rep = basin_experiment(3, 0.0, 6.0, 0.0, 2)
        assert rep["passed"] == 2
        assert rep["predicted_limits"] == pytest.approx([2.0, -2.0])
        assert max(s["limit_distance"] for s in rep["samples"]) < 1e-9

    def test_small_ball(self):
        rep = basin_experiment(4, 0.5, 3.0, 1e-3, 3, seed=1)
        assert rep["passed"] == 3 and all(s["trapped"] for s in rep["samples"])

    def test_far_ball_is_recorded(self):
        rep = basin_experiment(3, 0.0, 6.0, 10.0, 3, seed=0, horizon=5.0)
        assert len(rep["samples"]) == 3
        assert all(s["completeness"] in {"NumericallyComplete", "Inconclusive", "DomainFinite"} for s in rep["samples"])

    def test_deterministic(self):
        assert basin_experiment(3, 0.0, 6.0, 1e-2, 2, seed=5) == basin_experiment(3, 0.0, 6.0, 1e-2, 2, seed=5)

    @pytest.mark.parametrize("kwargs, error", [(dict(n=2), CapacityError), (dict(epsilon=-1.0), ArgumentError), (dict(count=0), ArgumentError)])
    def test_arguments(self, kwargs, error):
        args = dict(n=3, xi=0.0, zeta=6.0, epsilon=1e-2, count=1) | kwargs
        with pytest.raises(error):
            basin_experiment(**args)


class TestBlowup:
    def test_drawn_states(self, rng):
        for _ in range(200):
            s = draw_blowup_state(3, rng)
            assert scalar_invariant(s) >= 0 and abs(s.y.sum()) >= 1.0

    def test_tan_member(self):
        rep = blowup_experiment(3, 1, states=[PhaseState([0.0, 0.0], [6.0, 6.0])])
        (sample,) = rep["samples"]
        assert rep["finite"] == 1
        assert sample["escape_times"][0] == pytest.approx(-math.pi / 6, abs=1e-3)
        assert sample["escape_times"][1] == pytest.approx(math.pi / 6, abs=1e-3)

    def test_zero_state_excluded(self):
        with pytest.raises(ArgumentError):
            blowup_experiment(3, 1, states=[PhaseState([0.0, 0.0], [0.0, 0.0])])

    def test_count_mismatch(self):
        with pytest.raises(ArgumentError):
            blowup_experiment(3, 2, states=[PhaseState([1.0, 0.0], [0.0, 0.0])])
