import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hevlab.errors import DomainError
from hevlab.typedist import (
    SignedPerturbation,
    TypeDistribution,
    as_atoms,
    convex_order_leq,
    laplace_gap,
    laplace_inverse,
    laplace_moment,
    laplace_transform,
    misallocation_index,
    moment,
    quantile,
    rescaled,
    stop_loss,
    to_quantile_grid,
)

from _oracles import mean_preserving_split, quad_gamma_laplace, quad_lognormal_laplace


class TestConstructors:
    def test_atoms_sorted_and_merged(self):
        d = TypeDistribution.from_atoms([3.0, 1.0, 3.0, 2.0], [0.1, 0.4, 0.3, 0.2])
        assert np.array_equal(d.locations, [1.0, 2.0, 3.0])
        assert np.allclose(d.weights, [0.4, 0.2, 0.4], atol=0)

    def test_zero_weight_atoms_dropped(self):
        d = TypeDistribution.from_atoms([1.0, 2.0, 3.0], [0.5, 0.0, 0.5])
        assert np.array_equal(d.locations, [1.0, 3.0])

    def test_weight_sum_enforced(self):
        with pytest.raises(DomainError):
            TypeDistribution.from_atoms([1.0, 2.0], [0.5, 0.6])

    def test_positive_locations_enforced(self):
        with pytest.raises(DomainError):
            TypeDistribution.from_atoms([0.0, 2.0], [0.5, 0.5])
        with pytest.raises(DomainError):
            TypeDistribution.from_atoms([-1.0, 2.0], [0.5, 0.5])

    def test_two_point_validation(self):
        with pytest.raises(DomainError):
            TypeDistribution.two_point(3.0, 0.5, 0.8)
        with pytest.raises(DomainError):
            TypeDistribution.two_point(0.5, 3.0, 1.0)

    def test_degree_histogram_mean_one_with_raw_mean(self):
        dist, raw = TypeDistribution.from_degree_histogram([1, 2, 3], [10, 5, 1])
        assert raw == pytest.approx((10 + 10 + 3) / 16, abs=0)
        assert dist.mean_one
        assert dist.locations[0] == pytest.approx(1.0 / raw)

    def test_quantile_grid_must_be_monotone(self):
        with pytest.raises(DomainError):
            TypeDistribution.from_quantile_grid([1.0, 0.5])

    def test_parametric_validation(self):
        with pytest.raises(DomainError):
            TypeDistribution.gamma_mean_one(0.0)
        with pytest.raises(DomainError):
            TypeDistribution.lognormal_mean_one(-1.0)


class TestStructure:
    def test_means(self, f0):
        assert f0.mean == pytest.approx(1.0, abs=1e-15)
        assert f0.mean_one
        assert TypeDistribution.gamma_mean_one(2.0).mean == 1.0
        assert TypeDistribution.lognormal_mean_one(0.7).mean == 1.0

    def test_support(self, f0):
        assert f0.min_support == 0.5
        assert f0.max_support == 3.0
        g = TypeDistribution.gamma_mean_one(1.0)
        assert g.min_support == 0.0
        assert g.max_support == math.inf

    def test_as_atoms_grid_is_uniform(self):
        d = TypeDistribution.from_quantile_grid([1.0, 2.0, 4.0, 5.0])
        x, w = as_atoms(d)
        assert np.array_equal(x, [1.0, 2.0, 4.0, 5.0])
        assert np.allclose(w, 0.25, atol=0)

    def test_as_atoms_parametric_needs_opt_in(self):
        g = TypeDistribution.gamma_mean_one(2.0)
        with pytest.raises(DomainError):
            as_atoms(g)
        with pytest.warns(UserWarning, match="discretizing"):
            x, w = as_atoms(g, allow_discretize=True)
        assert x.size == w.size == 4096

    def test_rescaled_atoms_exact(self, f0):
        d = rescaled(f0, 2.0)
        assert np.array_equal(d.locations, [1.0, 6.0])
        assert d.mean == pytest.approx(2.0, rel=1e-15)


class TestLaplace:
    def test_transform_at_zero_is_one(self, f0):
        assert laplace_transform(f0, 0.0) == pytest.approx(1.0, abs=0)

    def test_transform_negative_z_rejected(self, f0):
        with pytest.raises(DomainError):
            laplace_transform(f0, -0.1)

    def test_atoms_closed_sum(self, f0):
        z = 1.7
        expected = 0.8 * math.exp(-0.5 * z) + 0.2 * math.exp(-3.0 * z)
        assert laplace_transform(f0, z) == pytest.approx(expected, abs=1e-16)

    @pytest.mark.parametrize("shape,z", [(0.5, 0.3), (4.0, 2.0), (10.0, 7.5)])
    def test_gamma_closed_form_vs_quadrature(self, shape, z):
        got = laplace_transform(TypeDistribution.gamma_mean_one(shape), z)
        assert got == pytest.approx((1.0 + z / shape) ** (-shape), rel=1e-14)
        assert got == pytest.approx(quad_gamma_laplace(shape, z), rel=1e-9)

    @pytest.mark.parametrize("sigma,z", [(0.3, 0.5), (0.7, 2.0)])
    def test_lognormal_grid_vs_quadrature(self, sigma, z):
        # no closed form: the midpoint grid carries ~1e-6 absolute error
        got = laplace_transform(TypeDistribution.lognormal_mean_one(sigma), z)
        assert got == pytest.approx(quad_lognormal_laplace(sigma, z), abs=1e-5)

    def test_grid_quadrature_matches_gamma_closed_form(self):
        grid = to_quantile_grid(TypeDistribution.gamma_mean_one(2.0), 4096)
        assert laplace_transform(grid, 1.0) == pytest.approx(1.5**-2, abs=1e-6)

    def test_moment_order_zero_is_transform(self, f0):
        z = np.array([0.0, 0.5, 2.0])
        assert np.allclose(
            laplace_moment(f0, z, 0), laplace_transform(f0, z), atol=0
        )

    def test_moment_is_minus_derivative(self, f0):
        z, h = 1.3, 1e-6
        fd = (laplace_transform(f0, z - h) - laplace_transform(f0, z + h)) / (2 * h)
        assert laplace_moment(f0, z, 1) == pytest.approx(fd, rel=1e-9)

    def test_gamma_moment_closed_form(self):
        g = TypeDistribution.gamma_mean_one(4.0)
        z, h = 0.9, 1e-6
        fd = (laplace_transform(g, z - h) - laplace_transform(g, z + h)) / (2 * h)
        assert laplace_moment(g, z, 1) == pytest.approx(fd, rel=1e-9)

    def test_gap_gamma4_at_two(self):
        # closed forms: (1 + 2/4)^(-4) - e^(-2)
        expected = 1.5**-4 - math.exp(-2.0)
        got = laplace_gap(TypeDistribution.gamma_mean_one(4.0), 2.0)
        assert got == pytest.approx(expected, abs=1e-15)
        assert got == pytest.approx(0.0621956, abs=5e-8)

    def test_gap_nonnegative_for_mean_one(self, f0, f3):
        z = np.linspace(0.0, 20.0, 50)
        for d in (f0, f3, TypeDistribution.gamma_mean_one(0.7),
                  TypeDistribution.lognormal_mean_one(0.5)):
            assert np.all(np.asarray(laplace_gap(d, z)) >= -1e-12)

    @pytest.mark.parametrize(
        "dist",
        [
            TypeDistribution.two_point(0.5, 3.0, 0.8),
            TypeDistribution.gamma_mean_one(2.5),
            TypeDistribution.lognormal_mean_one(0.6),
            TypeDistribution.from_quantile_grid(np.linspace(0.2, 5.0, 257)),
        ],
    )
    def test_inverse_roundtrip(self, dist):
        u = np.array([1e-6, 1e-3, 0.05, 0.3, 0.7, 0.95, 0.999, 1.0])
        z = laplace_inverse(dist, u)
        back = laplace_transform(dist, z)
        assert np.allclose(back, u, rtol=1e-10, atol=1e-12)

    def test_inverse_gamma_closed_form(self):
        g = TypeDistribution.gamma_mean_one(3.0)
        u = 0.37
        assert laplace_inverse(g, u) == pytest.approx(
            3.0 * (u ** (-1.0 / 3.0) - 1.0), rel=1e-14
        )

    def test_inverse_domain(self, f0):
        with pytest.raises(DomainError):
            laplace_inverse(f0, 0.0)
        with pytest.raises(DomainError):
            laplace_inverse(f0, 1.5)


class TestMoments:
    def test_gamma_closed_form(self):
        g = TypeDistribution.gamma_mean_one(4.0)
        # E[X^2] = (k+1)/k for mean-one gamma
        assert moment(g, 2.0) == pytest.approx(5.0 / 4.0, rel=1e-14)
        assert moment(g, -4.0) == math.inf
        assert moment(g, -5.0) == math.inf

    def test_lognormal_closed_form(self):
        d = TypeDistribution.lognormal_mean_one(0.5)
        assert moment(d, 2.0) == pytest.approx(math.exp(0.25), rel=1e-14)
        assert moment(d, -1.0) == pytest.approx(math.exp(0.25), rel=1e-14)

    def test_atoms_exact(self, f0):
        assert moment(f0, 3.0) == pytest.approx(0.8 * 0.125 + 0.2 * 27.0, rel=1e-15)

    def test_absolute_log(self, f0):
        expected = 0.8 * abs(math.log(0.5)) + 0.2 * abs(math.log(3.0))
        assert moment(f0, 1.0, absolute_log=True) == pytest.approx(expected, abs=1e-15)
        with pytest.raises(DomainError):
            moment(f0, -1.0, absolute_log=True)

    def test_grid_divergence_warning(self):
        # grid of a law whose -2 moment diverges: mass piling at the left node
        q = quantile(TypeDistribution.gamma_mean_one(0.5), (np.arange(512) + 0.5) / 512)
        d = TypeDistribution.from_quantile_grid(q)
        with pytest.warns(UserWarning, match="boundary node"):
            moment(d, -2.0)


class TestQuantiles:
    def test_atoms_staircase(self, f0):
        assert quantile(f0, 0.5) == 0.5
        assert quantile(f0, 0.8) == 0.5  # left-continuous: F(0.5) = 0.8 >= u
        assert quantile(f0, 0.8000001) == 3.0
        assert quantile(f0, 1.0) == 3.0

    def test_parametric_excludes_one(self):
        g = TypeDistribution.gamma_mean_one(2.0)
        with pytest.raises(DomainError):
            quantile(g, 1.0)
        with pytest.raises(DomainError):
            quantile(g, 0.0)

    def test_grid_roundtrip(self):
        g = TypeDistribution.lognormal_mean_one(0.4)
        gd = to_quantile_grid(g, 128)
        u = (np.arange(128) + 0.5) / 128
        assert np.allclose(quantile(gd, u), quantile(g, u), atol=0)

    @given(st.integers(0, 2**32 - 1))
    def test_quantile_mean_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        locs = np.sort(rng.uniform(0.1, 5.0, n))
        locs = locs + np.arange(n) * 1e-6
        w = rng.dirichlet(np.ones(n))
        d = TypeDistribution.from_atoms(locs, w)
        u = (np.arange(20000) + 0.5) / 20000
        assert np.mean(quantile(d, u)) == pytest.approx(d.mean, abs=5e-4)


class TestOrderAndIndices:
    def test_misallocation_two_point(self, f0):
        assert misallocation_index(f0, 1.0) == 0.8
        assert misallocation_index(f0, 2.0) == 1.0

    def test_misallocation_dirac_zero(self, dirac1):
        assert misallocation_index(dirac1, 1.0) == 0.0
        with pytest.raises(DomainError):
            misallocation_index(dirac1, 0.5)

    def test_stop_loss_atoms(self, f0):
        t = np.array([0.0, 0.5, 1.0, 3.0, 4.0])
        expected = np.array([1.0, 0.5 + 0.0, 0.2 * 2.0, 0.0, 0.0])
        # E[(X-t)+]: at t=0.5 only the 3.0 atom contributes 0.2*2.5
        expected[1] = 0.2 * 2.5
        assert np.allclose(stop_loss(f0, t), expected, atol=1e-15)

    def test_dirac_is_convex_minimum(self, f0, f3, dirac1):
        for d in (f0, f3):
            res = convex_order_leq(dirac1, d)
            assert res.holds and res.max_violation <= 1e-12

    def test_split_is_mps(self, f3):
        rng = np.random.default_rng(11)
        for _ in range(20):
            spread = mean_preserving_split(f3, rng)
            res = convex_order_leq(f3, spread)
            assert res.holds
            rev = convex_order_leq(spread, f3)
            assert not rev.holds and rev.witness is not None

    def test_unequal_means_rejected(self, f0):
        with pytest.raises(DomainError):
            convex_order_leq(f0, TypeDistribution.dirac(2.0))


class TestSignedPerturbation:
    def test_balanced_ok(self):
        nu = SignedPerturbation(np.array([0.5, 1.0, 1.5]), np.array([0.5, -1.0, 0.5]))
        assert nu.weights.sum() == 0.0

    def test_nonzero_mass_rejected(self):
        with pytest.raises(DomainError):
            SignedPerturbation(np.array([1.0, 2.0]), np.array([0.5, 0.5]))

    def test_nonzero_mean_rejected(self):
        with pytest.raises(DomainError):
            SignedPerturbation(np.array([1.0, 2.0]), np.array([0.5, -0.5]))
