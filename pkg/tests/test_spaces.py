import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from meanfix.examples import example1_T
from meanfix.sampling import PairSampler
from meanfix.spaces import (
    BallDomain,
    as_product_point,
    as_seqvec,
    basis_vector,
    convex_combine,
    diagonal,
    in_ball,
    lp_norm,
    product_norm,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
exponents = st.one_of(st.just(1.0), st.just(2.0), st.floats(1.0, 6.0))
vectors = arrays(np.float64, 5, elements=finite)


class TestSeqVec:
    def test_immutable(self):
        v = as_seqvec([1, 2, 3])
        with pytest.raises(ValueError):
            v[0] = 5.0

    @pytest.mark.parametrize("bad", [[np.nan, 1.0], [np.inf], [], [[1.0, 2.0]]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            as_seqvec(bad)

    def test_product_point_needs_equal_dims(self):
        with pytest.raises(ValueError):
            as_product_point([[1.0, 2.0], [3.0]])
        assert as_product_point([[1.0, 2.0], [3.0, 4.0]]).shape == (2, 2)


class TestLpNorm:
    def test_unit_basis(self):
        assert lp_norm([0, 0, 1, 0], 1) == 1.0

    def test_half_of_e3_difference(self):
        assert lp_norm([1 / 6, 1 / 3, 0], 1) == pytest.approx(0.5, abs=1e-15)

    def test_pythagoras(self):
        assert lp_norm([3, 4], 2) == 5.0

    def test_rejects_nan_and_bad_exponent(self):
        with pytest.raises(ValueError):
            lp_norm([np.nan, 1.0], 2)
        with pytest.raises(ValueError):
            lp_norm([1.0], 0.5)

    @given(vectors, exponents)
    def test_matches_numpy(self, v, p):
        assert lp_norm(v, p) == pytest.approx(np.linalg.norm(v, ord=p), rel=1e-12, abs=1e-300)

    @given(vectors, finite, exponents)
    def test_homogeneous(self, v, c, p):
        assert lp_norm(c * v, p) == pytest.approx(abs(c) * lp_norm(v, p), rel=1e-9, abs=1e-9)

    @given(vectors, vectors, exponents)
    def test_triangle(self, u, v, p):
        assert lp_norm(u + v, p) <= lp_norm(u, p) + lp_norm(v, p) + 1e-9

    def test_zero_iff_zero(self):
        assert lp_norm(np.zeros(4), 3.0) == 0.0
        assert lp_norm([0, 1e-300, 0], 3.0) > 0

    def test_batch(self):
        out = lp_norm(np.array([[3.0, 4.0], [1.0, 0.0]]), 2)
        np.testing.assert_array_equal(out, [5.0, 1.0])


class TestConvexCombine:
    def test_identity(self):
        x = np.array([0.1, -0.2])
        np.testing.assert_array_equal(convex_combine([1.0], [x]), x)

    def test_diagonal(self):
        x = np.array([0.1, -0.2, 0.3])
        np.testing.assert_allclose(convex_combine([0.5, 0.5], [x, x]), x, atol=0)

    def test_half_step_of_example1_at_e3(self):
        # (1/2 x_1 + 1/2 tau(x_2), 1/2 x_2 + 1/3 x_3, 1/2 x_3 + 1/2 x_4, ...) at e_3
        e3 = basis_vector(3, 8)
        got = convex_combine([0.5, 0.5], [e3, example1_T(e3)])
        want = np.zeros(8)
        want[1], want[2] = 1 / 3, 1 / 2
        np.testing.assert_allclose(got, want, atol=1e-15)

    def test_errors(self):
        with pytest.raises(ValueError, match="mismatch"):
            convex_combine([0.5, 0.5], [np.zeros(2)])
        with pytest.raises(ValueError, match="sum to 1"):
            convex_combine([0.5, 0.6], [np.zeros(2), np.zeros(2)])
        with pytest.raises(ValueError):
            convex_combine([1.5, -0.5], [np.zeros(2), np.zeros(2)])

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_stays_in_ball(self, p):
        dom = BallDomain(6, p)
        s = PairSampler(dom, seed=11)
        pts = s.points(3000).reshape(1000, 3, 6)
        w = s.rng.dirichlet(np.ones(3))
        assert np.all(in_ball(convex_combine(w, pts), dom, 1e-12))


class TestProductNorm:
    def test_diagonal_p1(self):
        x = np.array([0.3, -0.1, 0.2])
        assert product_norm([x, x], [0.5, 0.5], 1.0) == pytest.approx(lp_norm(x, 1), abs=1e-15)

    def test_hand_value(self):
        pp = [[3.0, 0.0], [0.0, 4.0]]
        assert product_norm(pp, [0.5, 0.5], 2.0, 2.0) == pytest.approx(math.sqrt(12.5), abs=1e-14)

    def test_zero(self):
        assert product_norm(np.zeros((2, 3)), [0.5, 0.5], 1.0) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            product_norm(np.zeros((3, 2)), [0.5, 0.5], 1.0)

    @settings(max_examples=200)
    @given(vectors, st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5), exponents, exponents)
    def test_diagonal_equals_lp_norm(self, x, raw, p, q):
        w = np.asarray(raw) / np.sum(raw)
        w[-1] = 1.0 - w[:-1].sum()
        got = product_norm(diagonal(x, len(w)), w, p, q)
        assert got == pytest.approx(lp_norm(x, q), rel=1e-12, abs=1e-12)

    @given(vectors, exponents, exponents)
    def test_n1_is_lp_norm(self, x, p, q):
        assert product_norm(x[None, :], [1.0], p, q) == pytest.approx(lp_norm(x, q), rel=1e-12, abs=1e-300)


class TestBall:
    def test_examples(self):
        dom = BallDomain(5, 1.0)
        assert in_ball(basis_vector(3, 5), dom, 0)
        assert not in_ball([1.01, 0, 0, 0, 0], dom, 0)
        assert in_ball(example1_T(basis_vector(3, 5)), dom, 0)

    def test_slack(self):
        dom = BallDomain(2, 2.0)
        assert not in_ball([1.0 + 1e-10, 0.0], dom)
        assert in_ball([1.0 + 1e-10, 0.0], dom, 1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            BallDomain(0)
        with pytest.raises(ValueError):
            BallDomain(3, radius=0)
        with pytest.raises(ValueError):
            BallDomain(3, center=[0, 0])
        with pytest.raises(ValueError):
            in_ball([0.0], BallDomain(3), 0)

    def test_offcentre_interval(self):
        dom = BallDomain(1, 1.0, radius=0.5, center=[0.5])
        assert in_ball([0.0], dom) and in_ball([1.0], dom)
        assert not in_ball([-0.01], dom)

    def test_project(self):
        dom = BallDomain(3, 1.0)
        y = dom.project(np.array([2.0, -2.0, 0.0]))
        assert lp_norm(y, 1) == pytest.approx(1.0)
        np.testing.assert_array_equal(dom.project(np.array([0.1, 0, 0])), [0.1, 0, 0])
