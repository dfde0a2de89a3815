"""Tests for exact fBm sampling: covariance law, kernel representation,
factorization, and multi-resolution coupling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvfbm.fbm import (
    DEFAULT_FACTOR_CAP,
    PAPER_REGIME_THRESHOLD,
    FbmPath,
    HurstParameter,
    TimeGrid,
    UnsupportedRegimeError,
    build_increment_factor,
    coarsen,
    covariance,
    increment_covariance,
    kernel_kh,
    kernel_normalizer,
    sample_fbm,
    sample_fbm_ensemble,
)


class TestHurstParameter:
    def test_range_enforced(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                HurstParameter(bad)

    def test_paper_regime_boundary(self):
        assert not HurstParameter(0.6).in_paper_regime
        assert HurstParameter(0.7).in_paper_regime
        assert math.isclose(PAPER_REGIME_THRESHOLD, (math.sqrt(5) - 1) / 2)


class TestTimeGrid:
    def test_basic_invariants(self):
        g = TimeGrid(0.0, 1.0, 4)
        assert g.dt == 0.25
        assert np.allclose(g.nodes(), [0, 0.25, 0.5, 0.75, 1.0])

    def test_invalid(self):
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, 0)

    def test_refine_coarsen_round_trip(self):
        g = TimeGrid(0.0, 2.0, 8)
        assert g.refined(4).coarsened(4) == g


class TestCovariance:
    def test_diagonal_unit(self):
        assert covariance(1.0, 1.0, HurstParameter(0.7)) == pytest.approx(1.0)

    def test_bm_special_case(self):
        assert covariance(2.0, 1.0, HurstParameter(0.5)) == pytest.approx(1.0)

    def test_derived_value(self):
        # R_H(2,1) = (2^{1.4} + 1 - 1)/2 = 2^{0.4}
        got = covariance(2.0, 1.0, HurstParameter(0.7))
        assert got == pytest.approx(2.0**0.4, rel=1e-14)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            covariance(-1.0, 1.0, HurstParameter(0.7))

    @given(
        st.floats(0.0, 4.0),
        st.floats(0.0, 4.0),
        st.floats(0.05, 0.95),
    )
    @settings(max_examples=50, deadline=None)
    def test_symmetry_and_diagonal(self, t, s, h):
        hp = HurstParameter(h)
        assert covariance(t, s, hp) == pytest.approx(covariance(s, t, hp))
        assert covariance(t, t, hp) == pytest.approx(t ** (2 * h))


class TestKernel:
    def test_t_le_s_convention(self):
        h = HurstParameter(0.7)
        assert kernel_kh(1.0, 1.0, h) == 0.0
        assert kernel_kh(0.5, 1.0, h) == 0.0

    def test_low_regime_rejected(self):
        with pytest.raises(UnsupportedRegimeError):
            kernel_kh(2.0, 1.0, HurstParameter(0.4))

    def test_normalizer_against_mpmath(self):
        mp = pytest.importorskip("mpmath")
        for h in (0.65, 0.7, 0.8, 0.9):
            want = float(
                mp.sqrt(h * (2 * h - 1) / mp.beta(2 - 2 * h, h - 0.5))
            )
            assert kernel_normalizer(HurstParameter(h)) == pytest.approx(
                want, rel=1e-12
            )

    def test_integral_representation(self):
        # int_0^{s} K(t,r) K(s,r) dr = R(t,s)
        from scipy.integrate import quad

        h = HurstParameter(0.7)
        for t, s in ((1.0, 0.5), (2.0, 1.0)):
            val, _ = quad(
                lambda r: kernel_kh(t, r, h) * kernel_kh(s, r, h),
                0.0,
                s,
                points=[s * 0.999],
                limit=200,
            )
            want = covariance(t, s, h)
            assert abs(val - want) / abs(want) <= 1e-3


class TestIncrementFactor:
    def test_n1_factor(self):
        g = TimeGrid(0.0, 1.0, 1)
        for h in (0.55, 0.7, 0.9):
            f = build_increment_factor(g, HurstParameter(h))
            assert f.lower_triangular.shape == (1, 1)
            assert f.lower_triangular[0, 0] == pytest.approx(1.0)  # dt^H = 1

    def test_bm_diagonal(self):
        g = TimeGrid(0.0, 1.0, 8)
        f = build_increment_factor(g, HurstParameter(0.5))
        off = f.lower_triangular - np.diag(np.diag(f.lower_triangular))
        assert np.max(np.abs(off)) <= 1e-12
        assert np.allclose(np.diag(f.lower_triangular), math.sqrt(g.dt))

    def test_factor_reproduces_covariance(self):
        g = TimeGrid(0.0, 1.0, 4)
        h = HurstParameter(0.7)
        f = build_increment_factor(g, h)
        sigma = increment_covariance(g, h)
        assert np.max(np.abs(f.lower_triangular @ f.lower_triangular.T - sigma)) <= 1e-12

    def test_toeplitz_stationarity(self):
        g = TimeGrid(0.0, 1.0, 16)
        sigma = increment_covariance(g, HurstParameter(0.8))
        for k in range(1, 16):
            diag = np.diag(sigma, k)
            assert np.max(np.abs(diag - diag[0])) <= 1e-12

    def test_cap_enforced(self):
        with pytest.raises(ValueError):
            build_increment_factor(
                TimeGrid(0.0, 1.0, DEFAULT_FACTOR_CAP + 1), HurstParameter(0.7)
            )


class TestSampling:
    def test_zero_normals_zero_path(self):
        g = TimeGrid(0.0, 1.0, 8)
        f = build_increment_factor(g, HurstParameter(0.7))
        p = sample_fbm(f, np.zeros(8))
        assert np.all(p.values == 0.0)

    def test_single_step_bm(self):
        g = TimeGrid(0.0, 1.0, 1)
        f = build_increment_factor(g, HurstParameter(0.5))
        p = sample_fbm(f, np.array([1.0]))
        assert p.values == pytest.approx([0.0, 1.0])

    def test_length_mismatch(self):
        g = TimeGrid(0.0, 1.0, 8)
        f = build_increment_factor(g, HurstParameter(0.7))
        with pytest.raises(ValueError):
            sample_fbm(f, np.zeros(7))

    def test_purity(self):
        g = TimeGrid(0.0, 1.0, 16)
        f = build_increment_factor(g, HurstParameter(0.8))
        z = np.random.default_rng(1).standard_normal(16)
        a = sample_fbm(f, z).values
        b = sample_fbm(f, z.copy()).values
        assert np.array_equal(a, b)

    def test_ensemble_matches_single(self):
        g = TimeGrid(0.0, 1.0, 8)
        f = build_increment_factor(g, HurstParameter(0.7))
        z = np.random.default_rng(2).standard_normal((3, 8))
        ens = sample_fbm_ensemble(f, z)
        for i in range(3):
            assert np.allclose(ens[i], sample_fbm(f, z[i]).values, atol=1e-14)

    def test_self_similarity(self):
        # Var(B_{at}) = a^{2H} Var(B_t) within 3 SE.
        h = HurstParameter(0.8)
        g = TimeGrid(0.0, 4.0, 16)
        f = build_increment_factor(g, h)
        rng = np.random.default_rng(7)
        m = 20000
        vals = sample_fbm_ensemble(f, rng.standard_normal((m, 16)))
        t_idx, at_idx = 4, 8  # t=1, at=2, a=2
        for a_mult, idx in ((2, 8), (4, 16)):
            var_t = np.var(vals[:, t_idx])
            var_at = np.var(vals[:, idx])
            ratio = var_at / var_t
            # SE of the variance ratio, crude delta-method bound
            se = ratio * math.sqrt(2.0 / m) * 2
            assert abs(ratio - a_mult ** (2 * h.h)) <= 3 * se + 0.05 * ratio


class TestCoarsen:
    def _path(self, n=16):
        g = TimeGrid(0.0, 1.0, n)
        f = build_increment_factor(g, HurstParameter(0.7))
        z = np.random.default_rng(5).standard_normal(n)
        return sample_fbm(f, z)

    def test_factor_one_identity(self):
        p = self._path()
        q = coarsen(p, 1)
        assert np.array_equal(p.values, q.values)

    def test_restriction_bitwise(self):
        p = self._path()
        q = coarsen(p, 4)
        assert np.array_equal(q.values, p.values[::4])

    def test_composition(self):
        p = self._path()
        a = coarsen(coarsen(p, 2), 2)
        b = coarsen(p, 4)
        assert np.array_equal(a.values, b.values)

    def test_non_divisible(self):
        p = self._path()
        with pytest.raises(ValueError):
            coarsen(p, 3)


class TestFbmPath:
    def test_anchor_enforced(self):
        g = TimeGrid(0.0, 1.0, 2)
        with pytest.raises(ValueError):
            FbmPath(grid=g, values=np.array([1.0, 0.0, 0.0]))
