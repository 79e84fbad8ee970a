import numpy as np
import pytest

from meanfix.afps import (
    DivergenceError,
    anchored_afps,
    anchored_iterate,
    gjp_chain_check,
    km_iterate,
    product_diameter,
    residual_family,
)
from meanfix.examples import baseline_maps, get_example
from meanfix.mappings import MappingHandle, MultiIndex, j_map
from meanfix.sampling import PairSampler
from meanfix.spaces import BallDomain, lp_norm


def start(J, seed=0):
    x = PairSampler(J.T.domain, seed).points(1)[0]
    return J.diagonal_point(x)


def affine_J(alpha=(0.6, 0.4), dim=8):
    c = np.zeros(dim)
    c[0] = 0.2
    return j_map(baseline_maps("affine-contraction", dim, offset=c), MultiIndex(alpha))


class TestKM:
    def test_identity_stops_at_step_zero(self):
        J = j_map(baseline_maps("identity", 4), MultiIndex((0.5, 0.5)))
        tr = km_iterate(J, start(J), tol=1e-10)
        assert tr.steps == 0 and tr.final_residual == 0.0 and tr.converged

    def test_affine_contraction_fast(self):
        J = affine_J()
        tr = km_iterate(J, start(J), lam=0.5, tol=1e-10, max_iter=200)
        assert tr.converged and tr.final_residual < 1e-10 and tr.monotone

    def test_example1(self, ex1):
        J = j_map(ex1, MultiIndex((0.5, 0.5)))
        tr = km_iterate(J, start(J), tol=1e-3)
        assert tr.converged and tr.monotone and tr.final_residual < 1e-3

    @pytest.mark.parametrize("eid", ["ex1-l1", "ex2-l2", "affine", "identity", "shift-average"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_residual_nonincreasing(self, eid, seed):
        ex = get_example(eid, 12)
        J = j_map(ex.T, ex.alpha)
        tr = km_iterate(J, start(J, seed), tol=1e-10, max_iter=3000)
        assert tr.monotone
        assert np.all(np.diff(tr.residuals) <= 1e-12)

    def test_lambda_range(self):
        J = affine_J()
        with pytest.raises(ValueError):
            km_iterate(J, start(J), lam=1.0)

    def test_norm_required_for_plain_callables(self):
        with pytest.raises(TypeError):
            km_iterate(lambda z: z, np.zeros(3))
        tr = km_iterate(lambda z: 0.5 * z, np.ones(3), norm=lambda v: lp_norm(v, 2), tol=1e-8)
        assert tr.converged

    def test_non_finite_raises(self):
        F = lambda z: z * np.inf  # noqa: E731
        with pytest.raises(DivergenceError):
            km_iterate(F, np.ones(2), norm=lambda v: lp_norm(v, 2))

    def test_snapshots_and_summary(self, ex1):
        J = j_map(ex1, MultiIndex((0.5, 0.5)))
        tr = km_iterate(J, start(J), tol=1e-3, snapshot_every=5, seed=0)
        assert 0 in tr.snapshots and tr.steps in tr.snapshots
        s = tr.summary()
        assert s["steps"] == tr.steps and "wall_clock" not in s


class TestJNonexpansive:
    @pytest.mark.parametrize("eid", ["ex1-l1", "ex2-l2"])
    def test_sampled_pairs(self, eid):
        ex = get_example(eid, 16)
        J = j_map(ex.T, ex.alpha)
        s = PairSampler(ex.T.domain, 8)
        pp = s.product_points(10_000, J.n)
        qq = s.product_points(10_000, J.n)
        lhs = J.norm(J(pp) - J(qq))
        rhs = J.norm(pp - qq)
        assert np.all(lhs <= rhs + 1e-9)


class TestAnchored:
    @pytest.mark.parametrize("eps", [1e-2, 1e-3])
    def test_example1_bound(self, ex1, eps):
        J = j_map(ex1, MultiIndex((0.5, 0.5)))
        tr = anchored_iterate(J, start(J), eps, inner_tol=1e-10)
        assert tr.final_residual <= eps * product_diameter(J) + 1e-8

    def test_diameter(self, ex1):
        assert product_diameter(j_map(ex1, MultiIndex((0.5, 0.5)))) == 2.0

    def test_affine_tuple_form(self):
        J = affine_J()
        z, r = anchored_afps(J, start(J), 1e-3)
        assert r <= 1e-3 * product_diameter(J) + 1e-8
        assert z.shape == (2, 8)

    def test_eps_range(self):
        J = affine_J()
        with pytest.raises(ValueError):
            anchored_iterate(J, start(J), 0.0)

    def test_expansive_map_does_not_settle(self):
        dom = BallDomain(1, 2.0, radius=1e6)
        F = MappingHandle(dom, lambda z: 3.0 * z + 1.0)
        with pytest.raises(DivergenceError):
            anchored_iterate(F, np.zeros(1), 0.1, max_inner=50, norm=lambda v: lp_norm(v, 2))


class TestResidualFamily:
    def test_zero_at_origin(self):
        T = baseline_maps("affine-contraction", 5)
        rep = residual_family(T, MultiIndex((0.5, 0.5)), np.zeros((2, 5)))
        assert all(v == 0.0 for v in rep.entries().values())

    def test_zero_at_exact_fixed_point(self):
        J = affine_J()
        z = start(J)
        for _ in range(300):
            z = J(z)
        rep = residual_family(J.T, J.alpha, z)
        assert max(rep.entries().values()) < 1e-14

    def test_keys(self, ex1):
        rep = residual_family(ex1, MultiIndex((0.5, 0.3, 0.2)), np.zeros((3, 16)))
        assert list(rep.entries()) == ["r1", "r2", "r3", "r_chain1", "r_chain2", "r_tau", "r_tAlpha", "r_T"]

    def test_collapses_zero_weights(self, ex1):
        rep = residual_family(ex1, MultiIndex((0.5, 0.0, 0.5)), np.zeros((2, 16)))
        assert rep.powers == (1, 3) and len(rep.r) == 2

    def test_length_mismatch(self, ex1):
        with pytest.raises(ValueError):
            residual_family(ex1, MultiIndex((0.5, 0.5)), np.zeros((3, 16)))

    @pytest.mark.parametrize("eid", ["ex1-l1", "ex2-l2"])
    def test_chain_consistent_along_run(self, eid):
        ex = get_example(eid, 16)
        J = j_map(ex.T, ex.alpha)
        tr = km_iterate(J, start(J, 3), tol=1e-6, snapshot_every=3)
        kT = {"ex1-l1": 2.0, "ex2-l2": np.sqrt(2)}[eid]
        for z in tr.snapshots.values():
            assert residual_family(ex.T, ex.alpha, z).chain_consistent(kT)


class TestGJPChain:
    def test_affine_passes(self):
        J = affine_J()
        tr = km_iterate(J, start(J), tol=1e-10)
        rep = residual_family(J.T, J.alpha, tr.final)
        res = gjp_chain_check(J.T, J.alpha, tr.final[0], rep.r_tau)
        assert res.passed and res.observed < 1e-9

    def test_zero_tau_residual_gives_zero_bound(self):
        T = baseline_maps("identity", 3)
        res = gjp_chain_check(T, MultiIndex((0.6, 0.4)), np.full(3, 0.1), 0.0)
        assert res.bound == 0.0 and res.passed

    def test_equality_case_refused(self, ex1):
        with pytest.raises(ValueError, match="refusing"):
            gjp_chain_check(ex1, MultiIndex((0.5, 0.5)), np.zeros(16), 0.0)

    def test_needs_length_two(self, ex1):
        with pytest.raises(ValueError):
            gjp_chain_check(ex1, MultiIndex((0.6, 0.3, 0.1)), np.zeros(16), 0.0)

    def test_bound_holds_off_fixed_point(self):
        # the inequality is pointwise, not just at limits
        J = affine_J((0.7, 0.3))
        x = PairSampler(J.T.domain, 5).points(200)
        for xi in x:
            r_tau = lp_norm(J.T(0.7 * xi + 0.3 * J.T(xi)) - xi, 1)
            assert gjp_chain_check(J.T, J.alpha, xi, r_tau).passed
