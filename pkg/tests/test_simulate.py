"""Synthetic data generation: designs, determinism, moment fidelity."""

import dataclasses

import numpy as np
import pytest

from msfax.core import covariance_from_model
from msfax.netstats import fisher_threshold
from msfax.simulate import (
    BUILTIN_SETTINGS,
    NEAR_ZERO_RANGE,
    NOISE_SUPPORTS,
    builtin_setting,
    generate_dataset,
    generate_loadings,
    generate_model,
    setting_model,
)


class TestBuiltinSettings:
    def test_ten_settings_all_feasible(self):
        assert len(BUILTIN_SETTINGS) == 10
        for name in BUILTIN_SETTINGS:
            model = setting_model(builtin_setting(name))
            model.validate()

    def test_numeric_and_prefixed_aliases(self):
        assert builtin_setting("1") is builtin_setting("baseline")
        assert builtin_setting("setting1") is builtin_setting("baseline")
        assert builtin_setting("Baseline") is builtin_setting("baseline")

    def test_unknown_setting_raises(self):
        with pytest.raises(ValueError, match="unknown setting"):
            builtin_setting("nonexistent")

    def test_baseline_dimensions(self):
        s = builtin_setting("baseline")
        assert s.n == (1600, 1600)
        assert s.p == 60
        assert s.k == 2
        assert s.j == (2, 2)


class TestLoadings:
    def test_exact_zero_entries_are_signs(self):
        s = builtin_setting("baseline")
        phi, lambdas = generate_loadings(
            s.p, s.k, s.j, np.random.default_rng(0))
        for mat in [phi, *lambdas]:
            vals = np.unique(mat)
            assert set(vals).issubset({-1.0, 0.0, 1.0})
        # constraint pattern: strict upper triangle zeroed
        for i in range(phi.shape[1]):
            assert np.all(phi[i, i + 1:] == 0.0)

    def test_near_zero_entries_below_detection(self):
        setting = builtin_setting("near-zeros")
        phi, lambdas = generate_loadings(
            setting.p, setting.k, setting.j, np.random.default_rng(1),
            exact_zeros=False)
        lo, hi = NEAR_ZERO_RANGE
        for mat in [phi, *lambdas]:
            small = np.abs(mat[(mat != 0) & (np.abs(mat) < 0.5)])
            assert small.size > 0
            assert np.all((small >= lo) & (small <= hi))
        # such entries sit below the network detection threshold
        assert hi < fisher_threshold(min(setting.n), setting.p, 0.05)

    def test_stacked_loadings_full_rank(self):
        setting = builtin_setting("few-predictors")
        total = setting.k + sum(setting.j)
        for seed in range(100):
            model = generate_model(setting, np.random.default_rng(seed))
            stacked = np.hstack([model.phi, *model.lambdas])
            assert np.linalg.matrix_rank(stacked) == total


class TestNoiseRegimes:
    @pytest.mark.parametrize("name,regime", [
        ("baseline", "equal"),
        ("shared-noise", "shared_dominant"),
        ("specific-noise", "specific_dominant"),
    ])
    def test_noise_within_declared_support(self, name, regime):
        setting = builtin_setting(name)
        assert setting.noise == regime
        model = setting_model(setting)
        (g_lo, g_hi), (e_lo, e_hi) = NOISE_SUPPORTS[regime]
        assert np.all((model.gamma >= g_lo) & (model.gamma <= g_hi))
        for eta in model.etas:
            assert np.all((eta >= e_lo) & (eta <= e_hi))


class TestGenerateDataset:
    def test_bitwise_determinism(self):
        setting = builtin_setting("few-predictors")
        d1, m1 = generate_dataset(setting, 3)
        d2, m2 = generate_dataset(setting, 3)
        for a, b in zip(d1.studies, d2.studies):
            assert np.array_equal(a, b)
        assert np.array_equal(m1.phi, m2.phi)

    def test_truth_fixed_across_replicates(self):
        setting = builtin_setting("few-predictors")
        d0, m0 = generate_dataset(setting, 0)
        d1, m1 = generate_dataset(setting, 1)
        assert np.array_equal(m0.phi, m1.phi)
        for a, b in zip(m0.lambdas, m1.lambdas):
            assert np.array_equal(a, b)
        for a, b in zip(m0.psi, m1.psi):
            assert np.array_equal(a, b)
        # but the sampled data differ
        assert not np.array_equal(d0.studies[0], d1.studies[0])
        # and the truth matches the setting's own model
        assert np.array_equal(m0.phi, setting_model(setting).phi)

    def test_data_centered_and_shaped(self):
        setting = builtin_setting("unequal-samples")
        data, _ = generate_dataset(setting, 0)
        assert data.is_centered()
        for x, n in zip(data.studies, setting.n):
            assert x.shape == (n, setting.p)

    def test_empirical_covariance_approaches_model(self):
        setting = dataclasses.replace(
            builtin_setting("few-predictors"), n=(100_000, 100_000))
        data, model = generate_dataset(setting, 0)
        for s, x in enumerate(data.studies):
            emp = x.T @ x / x.shape[0]
            sigma = covariance_from_model(model, s)
            rel = np.linalg.norm(emp - sigma) / np.linalg.norm(sigma)
            assert rel < 0.02

    def test_replicate_must_be_nonnegative_int(self):
        setting = builtin_setting("few-predictors")
        with pytest.raises((ValueError, TypeError)):
            generate_dataset(setting, -1)
