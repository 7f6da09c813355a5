import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conesmc.errors import DimensionError
from conesmc.sign_algebra import (
    SignPattern,
    abs_vector,
    enumerate_sign_patterns,
    induced_norm,
    pattern_diagonals,
    sign_matrix,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def vectors(min_size=1, max_size=6):
    return st.integers(min_size, max_size).flatmap(lambda m: arrays(float, m, elements=finite))


def square_matrices(max_m=5):
    return st.integers(1, max_m).flatmap(lambda m: arrays(float, (m, m), elements=finite))


class TestSignMatrix:
    def test_mixed(self):
        assert np.array_equal(sign_matrix([0.5, -2]).diag, [1, -1])

    def test_zero_maps_to_plus(self):
        assert np.array_equal(sign_matrix([0.0, 0.0]).matrix(), np.eye(2))

    def test_all_negative(self):
        assert np.array_equal(sign_matrix([-1, -1, -1]).matrix(), -np.eye(3))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            sign_matrix([1.0, np.nan])

    def test_rejects_matrix(self):
        with pytest.raises(DimensionError):
            sign_matrix(np.zeros((2, 2)))

    @given(vectors())
    def test_recovers_vector(self, x):
        assert np.array_equal(sign_matrix(x).apply(abs_vector(x)), x)

    @given(vectors())
    def test_involution(self, x):
        S = sign_matrix(x).matrix()
        assert np.array_equal(S @ S, np.eye(len(x)))


class TestAbsVector:
    def test_examples(self):
        assert np.array_equal(abs_vector([-3, 2]), [3, 2])
        assert np.array_equal(abs_vector([0.0]), [0.0])


class TestInducedNorm:
    def test_spacecraft_bound(self):
        assert induced_norm([[0.96, 0.13], [0.09, 0.01]], "two") == pytest.approx(0.97, abs=0.01)

    def test_manipulator_bound(self):
        assert induced_norm([[0.79, 0.20], [0.18, 0.68]], "two") == pytest.approx(0.93, abs=0.01)

    @pytest.mark.parametrize("kind", ["one", "two", "infinity"])
    def test_identity(self, kind):
        assert induced_norm(np.eye(4), kind) == pytest.approx(1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            induced_norm(np.eye(2), "frobenius")

    @given(square_matrices())
    def test_matches_numpy(self, A):
        for kind, order in (("one", 1), ("two", 2), ("infinity", np.inf)):
            ref = np.linalg.norm(A, ord=order)
            assert induced_norm(A, kind) == pytest.approx(ref, rel=1e-9, abs=1e-9 * (1 + ref))

    @given(square_matrices())
    def test_two_norm_bounded_by_geometric_mean(self, A):
        bound = np.sqrt(induced_norm(A, "one") * induced_norm(A, "infinity"))
        assert induced_norm(A, "two") <= bound * (1 + 1e-9) + 1e-9


class TestEnumeration:
    def test_m1(self):
        pats = enumerate_sign_patterns(1)
        assert [p.diag.tolist() for p in pats] == [[1.0], [-1.0]]

    def test_m2_distinct(self):
        pats = enumerate_sign_patterns(2)
        assert len(pats) == 4 and len(set(pats)) == 4

    def test_m6_covers_cube(self):
        diags = {tuple(p.diag) for p in enumerate_sign_patterns(6)}
        assert diags == set(itertools.product((1.0, -1.0), repeat=6))

    def test_order_identity_first_minus_identity_last(self):
        pats = enumerate_sign_patterns(3)
        assert np.array_equal(pats[0].matrix(), np.eye(3))
        assert np.array_equal(pats[-1].matrix(), -np.eye(3))

    @pytest.mark.parametrize("m", [0, 17, 2.5])
    def test_bad_dimension(self, m):
        with pytest.raises(DimensionError):
            enumerate_sign_patterns(m)

    @pytest.mark.parametrize("m", [1, 3, 5])
    def test_index_round_trip_and_diagonals(self, m):
        pats = enumerate_sign_patterns(m)
        assert [p.index for p in pats] == list(range(2 ** m))
        assert np.array_equal(np.array([p.diag for p in pats]), pattern_diagonals(m))

    def test_flip_and_negate(self):
        p = SignPattern((True, True, False))
        assert p.flipped([0]).diag.tolist() == [-1, 1, -1]
        assert (-p).diag.tolist() == [-1, -1, 1]
