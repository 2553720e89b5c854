"""
tests/test_preprocess.py
========================
Moving-average smoothing, singular spectrum analysis and the strategy
dispatcher.
"""

import sys
from pathlib import Path

# Ensure project root is importable
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(_PROJECT_ROOT))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.hankel import build_hankel, build_model
from app.errors import ParameterError, WindowError
from app.plant.lti import gaussian_signal
from app.utils.preprocess import (
    PreprocessStrategy,
    StrategyTag,
    apply_strategy,
    default_ssa_window,
    hankelize,
    moving_average,
    smooth,
    ssa_denoise,
)
from app.utils.rng import make_rng


def _sinusoid(length=200, freq=0.05):
    t = np.arange(length)
    return np.sin(2 * np.pi * freq * t)


def _rmse(a, b):
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


# ---------------------------------------------------------------------------
# Smoothing
# ---------------------------------------------------------------------------


class TestSmooth:
    def test_pairwise_means(self):
        _, y = smooth([0, 0, 0], [1, 3, 5], 2)
        np.testing.assert_allclose(y.values, [2, 4])
        assert y.start_index == 1

    def test_identity_window(self):
        z = gaussian_signal(20, seed=1)
        u, y = smooth(z, z, 1)
        np.testing.assert_array_equal(y.values, z.values)
        np.testing.assert_array_equal(u.values, z.values)

    def test_window_longer_than_signal(self):
        with pytest.raises(WindowError):
            smooth([1, 2], [1, 2], 3)

    def test_variance_reduction(self):
        z = np.sqrt(2.0) * gaussian_signal(100_000, seed=3).values
        smoothed = moving_average(z, 10).values
        assert smoothed.var() == pytest.approx(2.0 / 10, rel=0.2)

    def test_removes_columns_from_model(self):
        u = gaussian_signal(101, seed=0)
        y = gaussian_signal(101, seed=1)
        L = 6
        raw = build_model(u, y, L)
        u_s, y_s = smooth(u, y, L)
        assert build_model(u_s, y_s, L).width == raw.width - (L - 1)

    @settings(max_examples=40, deadline=None)
    @given(
        z=st.lists(st.floats(-100, 100), min_size=5, max_size=30),
        scale=st.floats(-10, 10),
        offset=st.floats(-10, 10),
        L=st.integers(1, 5),
    )
    def test_affine_equivariance(self, z, scale, offset, L):
        z = np.asarray(z)
        lhs = moving_average(scale * z + offset, L).values
        rhs = scale * moving_average(z, L).values + offset
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + abs(scale) * 100 + abs(offset)))


# ---------------------------------------------------------------------------
# SSA
# ---------------------------------------------------------------------------


class TestSsa:
    def test_hankelize_of_hankel_is_identity(self):
        z = np.arange(10.0)
        np.testing.assert_allclose(hankelize(build_hankel(z, 4).entries), z)

    def test_full_rank_is_identity(self):
        z = gaussian_signal(60, seed=5)
        np.testing.assert_allclose(ssa_denoise(z, 8, 8).values, z.values, atol=1e-10)

    def test_sinusoid_has_rank_two(self):
        z = _sinusoid()
        np.testing.assert_allclose(ssa_denoise(z, 20, 2).values, z, atol=1e-8)

    def test_denoises_noisy_sinusoid(self):
        clean = _sinusoid()
        wins = 0
        for seed in range(50):
            noisy = clean + 0.3 * make_rng(seed).standard_normal(clean.size)
            if _rmse(ssa_denoise(noisy, 20, 2).values, clean) < _rmse(noisy, clean):
                wins += 1
        assert wins >= 45

    def test_rank_above_depth(self):
        with pytest.raises(ParameterError):
            ssa_denoise(np.arange(10.0), 3, 4)

    def test_window_out_of_range(self):
        with pytest.raises(WindowError):
            ssa_denoise(np.arange(5.0), 6, 1)

    def test_rank_beyond_numeric_rank_is_allowed(self):
        z = np.ones(30)
        np.testing.assert_allclose(ssa_denoise(z, 5, 5).values, z, atol=1e-12)

    def test_default_window(self):
        assert default_ssa_window(251, 5) == 100
        assert default_ssa_window(60, 5) == 30
        assert default_ssa_window(60, 40) == 40
        assert default_ssa_window(10, 40) == 10


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------


class TestApplyStrategy:
    def setup_method(self):
        self.u = gaussian_signal(120, seed=10)
        self.y = gaussian_signal(120, seed=11)

    def test_noisy_is_identity(self):
        u, y = apply_strategy(self.u, self.y, "noisy", 5)
        np.testing.assert_array_equal(u.values, self.u.values)
        np.testing.assert_array_equal(y.values, self.y.values)

    def test_smooth_matches_direct_call(self):
        u, y = apply_strategy(self.u, self.y, StrategyTag.SMOOTH, 4)
        u_ref, y_ref = smooth(self.u, self.y, 4)
        np.testing.assert_array_equal(y.values, y_ref.values)
        np.testing.assert_array_equal(u.values, u_ref.values)

    def test_ssa_keeps_input_by_default(self):
        u, y = apply_strategy(self.u, self.y, "ssa", 4)
        np.testing.assert_array_equal(u.values, self.u.values)
        assert len(y) == len(self.y)
        assert not np.allclose(y.values, self.y.values)

    def test_ssa_both_channels(self):
        u, _ = apply_strategy(self.u, self.y, "ssa", 4, ssa_both=True)
        assert not np.allclose(u.values, self.u.values)

    def test_ssa_full_rank_window_is_identity(self):
        _, y = apply_strategy(self.u, self.y, "ssa", 6, ssa_window=6, ssa_rank=6)
        np.testing.assert_allclose(y.values, self.y.values, atol=1e-10)

    def test_unknown_strategy(self):
        with pytest.raises(ParameterError):
            PreprocessStrategy("median")
