import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpcurv import (
    PhaseState,
    harmonic_defect,
    is_ricci_generic,
    phase_vector_field,
    ricci_eigenvalues,
    scalar_invariant,
)
from warpcurv.core import acceleration, as_diag, eigenvalues_distinct
from warpcurv.errors import ArgumentError, DimensionError

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def states(draw, min_k=1, max_k=5):
    k = draw(st.integers(min_k, max_k))
    y = draw(st.lists(finite, min_size=k, max_size=k))
    p = draw(st.lists(finite, min_size=k, max_size=k))
    return PhaseState(y, p)


class TestPhaseState:
    def test_dimension(self):
        assert PhaseState([1.0, 2.0], [0.0, 0.0]).n == 3

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            PhaseState([1.0, 2.0], [0.0])

    @pytest.mark.parametrize("bad", [[], [np.nan], [[1.0, 2.0]]])
    def test_invalid_diag(self, bad):
        with pytest.raises(ArgumentError):
            as_diag(bad)

    def test_flat_round_trip(self):
        s = PhaseState([1.0, -2.0, 3.0], [4.0, 5.0, -6.0])
        assert PhaseState.from_flat(s.flat()) == s

    def test_identity_multiple(self):
        s = PhaseState.identity_multiple(4, -2.0)
        np.testing.assert_array_equal(s.y, [-2.0, -2.0, -2.0])
        np.testing.assert_array_equal(s.p, 0.0)


class TestVectorField:
    @pytest.mark.parametrize("q", [-3.0, -0.5, 0.0, 1.0, 2.5])
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_zero_curve(self, q, n):
        v = phase_vector_field(PhaseState.identity_multiple(n, q))
        assert np.all(v.y == 0) and np.max(np.abs(v.p)) <= 1e-12 * max(1.0, q * q * q)

    def test_origin(self):
        v = phase_vector_field(PhaseState([0.0, 0.0], [0.0, 0.0]))
        assert np.all(v.flat() == 0)

    def test_hand_value(self):
        v = phase_vector_field(PhaseState([1.0, -1.0], [0.0, 0.0]))
        np.testing.assert_allclose(v.p, [2.0, -2.0])

    def test_random_zero_set(self, rng):
        for q in rng.uniform(-10, 10, 1000):
            v = phase_vector_field(PhaseState.identity_multiple(4, q))
            assert np.max(np.abs(v.p)) <= 1e-12 * max(1.0, abs(q) ** 3)

    def test_vectorized_acceleration(self, rng):
        y = rng.normal(size=(6, 3))
        p = rng.normal(size=(6, 3))
        batch = acceleration(y, p)
        for i in range(6):
            np.testing.assert_allclose(batch[i], phase_vector_field(PhaseState(y[i], p[i])).p)

    @given(states())
    def test_time_reversal(self, s):
        # t -> -y(-t) is again a solution, i.e. G(-y, p) = -G(y, p)
        g = phase_vector_field(PhaseState(-s.y, s.p)).p
        g_ref = phase_vector_field(s).p
        np.testing.assert_allclose(g, -g_ref, atol=1e-10)

    @given(states(min_k=2), st.randoms())
    def test_permutation_equivariance(self, s, r):
        perm = list(range(s.y.size))
        r.shuffle(perm)
        ps = PhaseState(s.y[perm], s.p[perm])
        np.testing.assert_allclose(phase_vector_field(ps).p, phase_vector_field(s).p[perm], atol=1e-10)
        mu, mu_p = ricci_eigenvalues(s), ricci_eigenvalues(ps)
        assert mu_p[0] == pytest.approx(mu[0], abs=1e-10)
        np.testing.assert_allclose(mu_p[1:], mu[1:][perm], atol=1e-10)
        assert scalar_invariant(ps) == pytest.approx(scalar_invariant(s), abs=1e-10)


class TestScalarInvariant:
    @pytest.mark.parametrize(
        "y, p, s",
        [
            ([0.0, 0.0], [0.0, 0.0], 0.0),
            ([-2.0, -2.0], [0.0, 0.0], -24.0),
            ([1.0, 2.0], [0.0, 0.0], -14.0),
        ],
    )
    def test_values(self, y, p, s):
        assert scalar_invariant(PhaseState(y, p)) == s

    @settings(max_examples=200)
    @given(states())
    def test_sum_identity(self, s):
        mu = ricci_eigenvalues(s)
        terms = max(1.0, np.max(np.abs(s.p)) * s.y.size, float(np.sum(s.y**2)), float(s.y.sum() ** 2))
        assert abs(mu.sum() - scalar_invariant(s)) <= 8 * np.finfo(float).eps * terms * (s.y.size + 2)


class TestRicciEigenvalues:
    @pytest.mark.parametrize(
        "y, p, mu",
        [
            ([0.0, 0.0], [0.0, 0.0], [0.0, 0.0, 0.0]),
            ([0.0, 0.0], [-6.0, -6.0], [-12.0, -6.0, -6.0]),
            ([1.0, 2.0], [0.0, 0.0], [-5.0, -3.0, -6.0]),
        ],
    )
    def test_values(self, y, p, mu):
        np.testing.assert_allclose(ricci_eigenvalues(PhaseState(y, p)), mu)

    @pytest.mark.parametrize(
        "y, p, expected",
        [
            ([1.0, 2.0], [0.0, 0.0], True),
            ([0.0, 0.0], [0.0, 0.0], False),
            ([0.0, 0.0], [-6.0, -6.0], False),
        ],
    )
    def test_genericity(self, y, p, expected):
        assert is_ricci_generic(PhaseState(y, p), 1e-8) is expected

    @pytest.mark.parametrize("tol", [0.0, -1e-8])
    def test_bad_tolerance(self, tol):
        with pytest.raises(ArgumentError):
            is_ricci_generic(PhaseState([1.0, 2.0], [0.0, 0.0]), tol)

    def test_relative_threshold(self):
        # the threshold scales with the largest eigenvalue: 1e-8 * 1e6 = 1e-2
        assert not eigenvalues_distinct([1e6, 1e6 + 1e-3, 0.0], 1e-8)
        assert eigenvalues_distinct([1e6, 1e6 + 1.0, 0.0], 1e-8)


class TestHarmonicDefect:
    @given(states())
    def test_vanishes_on_field(self, s):
        ydd = acceleration(s.y, s.p)
        scale = max(1.0, float(np.max(np.abs(s.flat())))) ** 3
        assert np.max(np.abs(harmonic_defect(s.y, s.p, ydd))) <= 1e-11 * scale

    @given(states(), st.integers(0, 4), st.floats(0.01, 1.0))
    def test_detects_off_field(self, s, j, eps):
        j = j % s.y.size
        ydd = acceleration(s.y, s.p)
        ydd[j] += eps
        # the defect is linear in ydd with unit coefficient
        scale = max(1.0, float(np.max(np.abs(s.flat())))) ** 3
        assert harmonic_defect(s.y, s.p, ydd)[j] == pytest.approx(eps, abs=1e-11 * scale)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            harmonic_defect([1.0, 2.0], [0.0, 0.0], [0.0])
