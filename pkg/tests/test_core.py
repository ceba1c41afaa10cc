"""Domain types, loading constraints, and feasibility arithmetic."""

import numpy as np
import pytest

import msfax
from msfax.core import (
    constrain_loadings,
    constraint_violations,
    covariance_from_model,
    free_parameter_count,
)
from conftest import rand_model


class TestMultiStudyDataset:
    def test_rejects_mismatched_predictors(self):
        with pytest.raises(ValueError, match="same predictors"):
            msfax.MultiStudyDataset([np.zeros((5, 3)), np.zeros((5, 4))])

    def test_rejects_tiny_study(self):
        with pytest.raises(ValueError, match="fewer than two"):
            msfax.MultiStudyDataset([np.zeros((1, 3))])

    def test_rejects_nonfinite(self):
        x = np.zeros((4, 3))
        x[2, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            msfax.MultiStudyDataset([x])

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="at least one study"):
            msfax.MultiStudyDataset([])

    def test_center_zeroes_column_means(self):
        rng = np.random.default_rng(0)
        data = msfax.MultiStudyDataset(
            [rng.normal(3.0, 1.0, (40, 5)), rng.normal(-1.0, 2.0, (25, 5))])
        assert not data.is_centered()
        centered = data.center()
        assert centered.is_centered()
        for x in centered.studies:
            assert np.abs(x.mean(axis=0)).max() < 1e-12

    def test_covariances_use_one_over_n(self):
        x = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 2.0], [0.0, -2.0]])
        data = msfax.MultiStudyDataset([x])
        cov = data.covariances()[0]
        assert np.allclose(cov, x.T @ x / 4)

    def test_shapes(self):
        data = msfax.MultiStudyDataset([np.zeros((6, 3)), np.zeros((9, 3))])
        assert data.p == 3
        assert data.n_studies == 2
        assert data.sizes == (6, 9)


class TestConstrainLoadings:
    def test_zeroes_upper_triangle_of_top_block(self):
        rng = np.random.default_rng(1)
        mat = rng.standard_normal((6, 3))
        out = constrain_loadings(mat)
        for i in range(3):
            assert np.all(out[i, i + 1:] == 0.0)
        # rows at or below the block are untouched
        assert np.array_equal(out[3:], mat[3:])
        assert constraint_violations(out) == 0
        assert constraint_violations(mat) > 0

    def test_input_not_modified(self):
        mat = np.ones((4, 2))
        constrain_loadings(mat)
        assert np.all(mat == 1.0)


class TestCovarianceFromModel:
    def test_matches_explicit_formula(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            model = rand_model(rng, 7, 2, (1, 3))
            for s, lam in enumerate(model.lambdas):
                sigma = covariance_from_model(model, s)
                expect = (model.phi @ model.phi.T + lam @ lam.T
                          + np.diag(model.psi[s]))
                assert np.allclose(sigma, expect, atol=1e-12)


class TestModelValidation:
    def test_rejects_negative_noise(self):
        model = msfax.MsfaxModel(phi=np.array([[1.0], [1.0], [0.0]]),
                                 lambdas=[np.array([[1.0], [0.0], [1.0]])],
                                 psi=[np.array([1.0, -0.1, 1.0])])
        with pytest.raises(ValueError, match="positive"):
            model.validate()

    def test_rejects_split_mismatch(self):
        model = msfax.MsfaxModel(phi=np.array([[1.0], [1.0]]),
                                 lambdas=[np.array([[1.0], [-1.0]])],
                                 psi=[np.array([1.0, 1.0])],
                                 gamma=np.array([0.2, 0.2]),
                                 etas=[np.array([0.3, 0.3])])
        with pytest.raises(ValueError, match="reproduce"):
            model.validate()

    def test_rejects_constraint_violation(self):
        model = msfax.MsfaxModel(phi=np.array([[1.0, 0.5], [1.0, 1.0],
                                               [0.0, -1.0]]),
                                 lambdas=[np.array([[1.0], [0.0], [1.0]])],
                                 psi=[np.ones(3)])
        with pytest.raises(ValueError, match="block-triangular"):
            model.validate()

    def test_rejects_rank_deficient_stack(self):
        model = msfax.MsfaxModel(phi=np.array([[1.0], [1.0]]),
                                 lambdas=[np.array([[1.0], [1.0]])],
                                 psi=[np.ones(2)])
        with pytest.raises(ValueError, match="rank"):
            model.validate()

    def test_valid_model_passes(self):
        rng = np.random.default_rng(5)
        rand_model(rng, 6, 2, (1, 2)).validate()


class TestIdentifiability:
    def test_free_parameter_formula(self):
        # recomputed from the constraint structure, not the implementation
        for p, k, j in [(60, 2, (2, 2)), (12, 2, (2, 2)), (60, 4, (3, 5)),
                        (9, 1, (1, 1, 1))]:
            loadings = p * k - k * (k - 1) // 2
            for js in j:
                loadings += p * js - js * (js - 1) // 2
            noise = (len(j) + 1) * p
            assert free_parameter_count(p, k, j) == loadings + noise

    def test_all_builtin_settings_feasible(self):
        for setting in msfax.BUILTIN_SETTINGS.values():
            report = msfax.validate_identifiability(setting.p, setting.k,
                                                    setting.j)
            assert report.feasible, (setting.name, report.reasons)

    def test_overparameterized_rejected(self):
        report = msfax.validate_identifiability(4, 3, (3, 3))
        assert not report.feasible
        assert report.reasons

    def test_minimal_counts_feasible(self):
        # with every count at least one, k + sum(j) always exceeds S
        report = msfax.validate_identifiability(10, 1, (1,))
        assert report.feasible

    def test_zero_counts_rejected(self):
        assert not msfax.validate_identifiability(10, 0, (1, 1)).feasible
        assert not msfax.validate_identifiability(10, 1, (0, 1)).feasible


class TestGgmNetwork:
    def test_requires_square_symmetric_zero_diag(self):
        good = np.array([[0.0, 0.3], [0.3, 0.0]])
        net = msfax.GgmNetwork(good)
        assert net.p == 2
        with pytest.raises(ValueError):
            msfax.GgmNetwork(np.array([[0.0, 0.3], [0.2, 0.0]]))
        with pytest.raises(ValueError):
            msfax.GgmNetwork(np.array([[1.0, 0.3], [0.3, 0.0]]))
