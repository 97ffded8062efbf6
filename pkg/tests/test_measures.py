import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_w2
from mfglab import (
    EmpiricalMeasure,
    InvalidInputError,
    NumericsError,
    measure,
    push_forward,
    second_moment,
    w2_assignment,
    w2_sorted_1d,
)


class TestConstruction:
    def test_shapes_and_props(self):
        m = measure([[1.0, 2.0], [3.0, 4.0]])
        assert m.n == 2 and m.dim == 2

    def test_flat_list_is_1d(self):
        m = measure([0.0, 1.0, 2.0])
        assert m.n == 3 and m.dim == 1

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            measure([])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            measure([[np.inf]])
        with pytest.raises(InvalidInputError):
            measure([[np.nan, 0.0]])

    def test_points_read_only(self):
        m = measure([1.0, 2.0])
        with pytest.raises(ValueError):
            m.points[0, 0] = 5.0


class TestSorted1D:
    def test_translation_pair(self):
        assert w2_sorted_1d(measure([0.0, 1.0]), measure([1.0, 2.0])) == 1.0

    def test_split_pair(self):
        # brute force over both pairings: both give mean cost 1
        assert w2_sorted_1d(measure([0.0, 2.0]), measure([1.0, 1.0])) == 1.0

    def test_identity(self):
        m = measure([3.0, -1.0, 0.5])
        assert w2_sorted_1d(m, m) == 0.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            w2_sorted_1d(measure([[1.0, 2.0]]), measure([[1.0, 2.0]]))
        with pytest.raises(InvalidInputError):
            w2_sorted_1d(measure([1.0]), measure([1.0, 2.0]))


class TestAssignment:
    def test_matches_sorted_in_1d(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            mu, nu = measure(rng.normal(0, 1, n)), measure(rng.normal(0, 1, n))
            assert abs(w2_assignment(mu, nu) - w2_sorted_1d(mu, nu)) <= 1e-12

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            n, d = int(rng.integers(1, 7)), 2
            mu = measure(rng.normal(0, 1, (n, d)))
            nu = measure(rng.normal(0, 1, (n, d)))
            assert abs(w2_assignment(mu, nu) - brute_force_w2(mu, nu)) <= 1e-12

    def test_zero_on_equal(self):
        m = measure([[1.0, 2.0], [0.0, -1.0]])
        assert w2_assignment(m, m) == 0.0

    def test_rejects_mismatch(self):
        with pytest.raises(InvalidInputError):
            w2_assignment(measure([1.0]), measure([[1.0, 2.0]]))
        with pytest.raises(InvalidInputError):
            w2_assignment(measure([1.0]), measure([1.0, 2.0]))

    def test_permutation_invariance_exact(self):
        rng = np.random.default_rng(2)
        pts_a = rng.normal(0, 1, (6, 2))
        pts_b = rng.normal(0, 1, (6, 2))
        base = w2_assignment(measure(pts_a), measure(pts_b))
        for _ in range(5):
            pa = rng.permutation(6)
            pb = rng.permutation(6)
            assert w2_assignment(measure(pts_a[pa]), measure(pts_b[pb])) == base

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_symmetry_and_triangle(self, n, seed):
        rng = np.random.default_rng(seed)
        mu = measure(rng.normal(0, 2, (n, 2)))
        nu = measure(rng.normal(0, 2, (n, 2)))
        rho = measure(rng.normal(0, 2, (n, 2)))
        dmn = w2_assignment(mu, nu)
        assert abs(dmn - w2_assignment(nu, mu)) <= 1e-10
        assert dmn <= w2_assignment(mu, rho) + w2_assignment(rho, nu) + 1e-10

    def test_translation_equivariance_exact(self):
        # dyadic coordinates keep the shifted differences exactly representable
        mu = measure(np.array([[0.0], [0.5], [1.25], [-2.75]]))
        nu = measure(np.array([[0.25], [1.5], [-0.5], [3.0]]))
        for c in (0.5, -1.25, 4.0):
            mu_c = measure(mu.points + c)
            nu_c = measure(nu.points + c)
            assert w2_assignment(mu_c, nu_c) == w2_assignment(mu, nu)


class TestPushForwardAndMoments:
    def test_identity(self):
        m = measure([[1.0, 2.0]])
        out = push_forward(m, lambda p: p)
        assert np.array_equal(out.points, m.points)

    def test_shift_and_scale(self):
        m = measure([1.0, 2.0])
        shifted = push_forward(m, lambda p: p + 3.0)
        assert np.array_equal(shifted.points.ravel(), [4.0, 5.0])
        assert w2_sorted_1d(m, shifted) == 3.0
        doubled = push_forward(m, lambda p: 2.0 * p)
        assert np.array_equal(doubled.points.ravel(), [2.0, 4.0])

    def test_nonfinite_image_raises(self):
        with np.errstate(invalid="ignore"):
            with pytest.raises(NumericsError):
                push_forward(measure([0.0]), lambda p: p / 0.0)

    def test_second_moment(self):
        assert second_moment(measure([0.0])) == 0.0
        assert second_moment(measure([1.0, -1.0])) == 1.0
        assert second_moment(measure([3.0, 4.0])) == 12.5  # (9+16)/2


class TestSerialization:
    def test_json_round_trip(self):
        m = measure([[1.5, -2.0], [0.25, 3.0]])
        back = EmpiricalMeasure.from_json(m.to_json())
        assert np.array_equal(back.points, m.points)
        assert json.loads(m.to_json()) == [[1.5, -2.0], [0.25, 3.0]]

    def test_csv_export(self, tmp_path):
        m = measure([[1.0, 2.0], [3.0, 4.0]])
        path = tmp_path / "m.csv"
        m.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "index,x_1,x_2"
        assert len(lines) == 3
        assert lines[1].startswith("0,1,2")
