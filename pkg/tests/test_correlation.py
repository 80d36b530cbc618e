import numpy as np
import pytest
from scipy import stats

from judge_audit.errors import InputError, NumericError
from judge_audit.stats.correlation import (
    CorrelationMethod,
    bonferroni,
    correlation_matrix,
    spearman_matrix,
)


class TestSpearmanMatrix:
    def test_self_and_negation(self):
        x = np.arange(20.0)
        result = spearman_matrix(np.column_stack([x, x, -x]))
        assert result.values[0, 1] == pytest.approx(1.0)
        assert result.values[0, 2] == pytest.approx(-1.0)
        assert np.all(np.diag(result.values) == 1.0)

    def test_matches_rank_then_pearson(self):
        rng = np.random.default_rng(3)
        data = rng.integers(1, 6, size=(10, 2)).astype(float)
        expected = np.corrcoef(stats.rankdata(data[:, 0]), stats.rankdata(data[:, 1]))[0, 1]
        assert spearman_matrix(data).values[0, 1] == pytest.approx(expected, abs=1e-12)

    def test_p_values_match_scipy(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(40, 2))
        rho, p = stats.spearmanr(data[:, 0], data[:, 1])
        result = spearman_matrix(data)
        assert result.values[0, 1] == pytest.approx(rho)
        assert result.p_values[0, 1] == pytest.approx(p)

    def test_constant_column_is_undefined(self):
        data = np.column_stack([np.arange(10.0), np.full(10, 3.0)])
        result = spearman_matrix(data)
        assert np.isnan(result.values[0, 1])
        assert np.isnan(result.mean_off_diagonal())

    def test_family_size_defaults_to_pair_count(self):
        result = spearman_matrix(np.random.default_rng(5).normal(size=(30, 5)))
        assert result.tests == 10

    def test_too_few_rows(self):
        with pytest.raises(NumericError):
            spearman_matrix(np.ones((2, 3)))

    def test_pearson_method(self):
        data = np.column_stack([np.exp(np.arange(10.0)), np.arange(10.0)])
        assert correlation_matrix(data, CorrelationMethod.PEARSON).values[0, 1] < 1.0
        assert spearman_matrix(data).values[0, 1] == pytest.approx(1.0)


class TestBonferroni:
    def test_definition(self):
        assert bonferroni([0.01], 10) == pytest.approx([0.1])

    def test_capped_at_one(self):
        assert bonferroni([0.2], 10) == pytest.approx([1.0])

    def test_non_positive_family(self):
        with pytest.raises(InputError):
            bonferroni([0.01], 0)
