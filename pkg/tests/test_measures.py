"""Tests for empirical measures, Wasserstein distances, and path seminorms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvfbm.fbm import TimeGrid
from mvfbm.measures import (
    EmpiricalMeasure,
    PathEnsemble,
    diagonal_path_distance,
    holder_seminorm,
    moment,
    path_measure_norm,
    sup_norm_distance,
    w2_1d,
    w2_assignment,
    w2_exhaustive,
)


class TestEmpiricalMeasure:
    def test_1d_auto_expand(self):
        mu = EmpiricalMeasure(np.array([1.0, 2.0]))
        assert mu.points.shape == (2, 1)
        assert mu.n == 2 and mu.d == 1

    def test_finite_required(self):
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.array([1.0, np.nan]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.empty((0, 1)))


class TestMoment:
    def test_zeros(self):
        assert moment(EmpiricalMeasure(np.zeros(3)), 1) == 0.0

    def test_mean(self):
        assert moment(EmpiricalMeasure(np.array([1.0, 2.0, 3.0])), 1) == 2.0

    def test_second_moment(self):
        got = moment(EmpiricalMeasure(np.array([1.0, 2.0, 3.0])), 2)
        assert got == pytest.approx(14.0 / 3.0)

    def test_bad_coordinate(self):
        with pytest.raises(IndexError):
            moment(EmpiricalMeasure(np.zeros(3)), 1, coordinate=1)


class TestW2:
    def test_identical(self):
        mu = EmpiricalMeasure(np.array([0.3, -1.2]))
        assert w2_1d(mu, mu) == 0.0

    def test_translation(self):
        mu = EmpiricalMeasure(np.array([0.0, 1.0]))
        nu = EmpiricalMeasure(np.array([2.0, 3.0]))
        assert w2_1d(mu, nu) == pytest.approx(2.0)

    def test_derived_example(self):
        mu = EmpiricalMeasure(np.array([0.0, 1.0, 2.0]))
        nu = EmpiricalMeasure(np.array([0.0, 0.0, 3.0]))
        assert w2_1d(mu, nu) == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_unequal_sizes_rejected(self):
        with pytest.raises(ValueError):
            w2_1d(EmpiricalMeasure(np.zeros(2)), EmpiricalMeasure(np.zeros(3)))

    def test_assignment_matches_1d(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            mu = EmpiricalMeasure(rng.standard_normal(n))
            nu = EmpiricalMeasure(rng.standard_normal(n))
            assert abs(w2_1d(mu, nu) - w2_assignment(mu, nu)) <= 1e-12

    def test_assignment_2d_translation(self):
        mu = EmpiricalMeasure(np.array([[0.0, 0.0], [1.0, 0.0]]))
        nu = EmpiricalMeasure(np.array([[0.0, 1.0], [1.0, 1.0]]))
        assert w2_assignment(mu, nu) == pytest.approx(1.0)

    def test_exhaustive_oracle_2d(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            mu = EmpiricalMeasure(rng.standard_normal((n, 2)))
            nu = EmpiricalMeasure(rng.standard_normal((n, 2)))
            assert abs(w2_assignment(mu, nu) - w2_exhaustive(mu, nu)) <= 1e-12

    def test_exhaustive_cap(self):
        big = EmpiricalMeasure(np.zeros(11))
        with pytest.raises(ValueError):
            w2_exhaustive(big, big)

    @given(st.integers(2, 6), st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_metric_properties(self, n, seed):
        rng = np.random.default_rng(seed)
        mu = EmpiricalMeasure(rng.standard_normal(n))
        nu = EmpiricalMeasure(rng.standard_normal(n))
        rho = EmpiricalMeasure(rng.standard_normal(n))
        assert w2_1d(mu, mu) == 0.0
        assert w2_1d(mu, nu) == pytest.approx(w2_1d(nu, mu))
        assert w2_1d(mu, rho) <= w2_1d(mu, nu) + w2_1d(nu, rho) + 1e-12

    def test_translation_scaling_invariance(self):
        rng = np.random.default_rng(31)
        x, y = rng.standard_normal(6), rng.standard_normal(6)
        base = w2_1d(EmpiricalMeasure(x), EmpiricalMeasure(y))
        shifted = w2_1d(EmpiricalMeasure(x + 5.0), EmpiricalMeasure(y + 5.0))
        scaled = w2_1d(EmpiricalMeasure(3.0 * x), EmpiricalMeasure(3.0 * y))
        assert shifted == pytest.approx(base)
        assert scaled == pytest.approx(3.0 * base)


class TestHolderSeminorm:
    def test_constant_zero(self):
        g = TimeGrid(0.0, 1.0, 8)
        assert holder_seminorm(np.ones(9), g, 0.5).value == 0.0

    def test_linear_path(self):
        g = TimeGrid(0.0, 1.0, 16)
        out = holder_seminorm(3.0 * g.nodes(), g, 0.8)
        assert out.value == pytest.approx(3.0)
        assert out.attained_pair == (0, 16)

    def test_derived_tent(self):
        g = TimeGrid(0.0, 1.0, 2)
        out = holder_seminorm(np.array([0.0, 1.0, 0.0]), g, 0.5)
        assert out.value == pytest.approx(math.sqrt(2.0))

    def test_beta_range(self):
        g = TimeGrid(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            holder_seminorm(np.zeros(5), g, 1.0)

    def test_window_monotonicity(self):
        g = TimeGrid(0.0, 1.0, 64)
        v = np.random.default_rng(3).standard_normal(65)
        full = holder_seminorm(v, g, 0.6).value
        sub = holder_seminorm(v, g, 0.6, a_idx=10, b_idx=40).value
        assert full >= sub - 1e-14

    def test_stride_recorded(self):
        g = TimeGrid(0.0, 1.0, 64)
        v = np.random.default_rng(4).standard_normal(65)
        out = holder_seminorm(v, g, 0.6, cap=20)
        assert out.stride > 1
        assert holder_seminorm(v, g, 0.6).stride == 1


class TestSupNorm:
    def test_identical(self):
        x = np.random.default_rng(5).standard_normal(10)
        assert sup_norm_distance(x, x) == 0.0

    def test_constant_shift(self):
        x = np.random.default_rng(6).standard_normal(10)
        assert sup_norm_distance(x, x + 2.5) == pytest.approx(2.5)

    def test_scan_oracle(self):
        rng = np.random.default_rng(7)
        x, y = rng.standard_normal(12), rng.standard_normal(12)
        assert sup_norm_distance(x, y) == pytest.approx(max(abs(x - y)))


class TestPathEnsemble:
    def test_shapes(self):
        g = TimeGrid(0.0, 1.0, 4)
        ens = PathEnsemble(g, np.zeros((3, 5)))
        assert ens.data.shape == (3, 5, 1)
        assert ens.measure_at(2).n == 3

    def test_shape_mismatch(self):
        g = TimeGrid(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            PathEnsemble(g, np.zeros((3, 6)))


class TestDiagonalDistance:
    def _pair(self, seed=9, n=3, steps=3):
        g = TimeGrid(0.0, 1.0, steps)
        rng = np.random.default_rng(seed)
        x = PathEnsemble(g, rng.standard_normal((n, steps + 1)))
        y = PathEnsemble(g, rng.standard_normal((n, steps + 1)))
        return g, x, y

    def test_identical_zero(self):
        g, x, _ = self._pair()
        assert diagonal_path_distance(x, x, 0.6) == 0.0

    def test_constant_shift(self):
        g, x, _ = self._pair()
        y = PathEnsemble(g, x.data[:, :, 0] + 1.5)
        assert diagonal_path_distance(x, y, 0.6) == pytest.approx(1.5)

    def test_matches_direct_formula(self):
        g, x, y = self._pair()
        diff = x.data[:, :, 0] - y.data[:, :, 0]
        sup_sq = np.max(np.abs(diff), axis=1) ** 2
        hol_sq = np.array(
            [holder_seminorm(diff[i], g, 0.6).value ** 2 for i in range(3)]
        )
        want = math.sqrt(sup_sq.mean()) + math.sqrt(hol_sq.mean())
        assert diagonal_path_distance(x, y, 0.6) == pytest.approx(want)

    def test_symmetry(self):
        _, x, y = self._pair(seed=13)
        assert diagonal_path_distance(x, y, 0.7) == pytest.approx(
            diagonal_path_distance(y, x, 0.7)
        )


class TestPathMeasureNorm:
    def test_zero_ensemble(self):
        g = TimeGrid(0.0, 1.0, 4)
        assert path_measure_norm(PathEnsemble(g, np.zeros((3, 5))), 0.6) == 0.0

    def test_single_linear_path(self):
        g = TimeGrid(0.0, 1.0, 16)
        c = 2.0
        ens = PathEnsemble(g, (c * g.nodes())[None, :])
        assert path_measure_norm(ens, 0.8) == pytest.approx(2 * c)

    def test_matches_direct_formula(self):
        g = TimeGrid(0.0, 1.0, 3)
        rng = np.random.default_rng(15)
        data = rng.standard_normal((3, 4))
        ens = PathEnsemble(g, data)
        first = math.sqrt(np.mean(np.max(np.abs(data), axis=1) ** 2))
        t = g.nodes()
        best = 0.0
        for s in range(4):
            for u in range(s + 1, 4):
                rms = math.sqrt(np.mean((data[:, u] - data[:, s]) ** 2))
                best = max(best, rms / (t[u] - t[s]) ** 0.6)
        assert path_measure_norm(ens, 0.6) == pytest.approx(first + best)
