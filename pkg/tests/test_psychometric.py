import numpy as np
import pytest

from judge_audit.diagnostics.psychometric import (
    LoadingsMatrix,
    PsychometricReport,
    cronbach_alpha,
    cross_loading_ratio,
    extract_loadings,
    htmt,
    htmt_matrix,
    psychometric_validity,
    sigmoid_normalize_clr,
)
from judge_audit.diagnostics.score_cube import ScoreCube
from judge_audit.errors import InputError, NumericError


def _cube(values: np.ndarray) -> ScoreCube:
    k, n, r = values.shape
    return ScoreCube(
        values=np.asarray(values, dtype=float),
        criteria=tuple(f"f{i + 1}" for i in range(k)),
        questions=tuple(f"q{i}" for i in range(n)),
        observations=tuple(f"o{i}" for i in range(r)),
    )


def _consistent_factors(rng, k: int, n: int, r: int, shared: np.ndarray = None) -> np.ndarray:
    """Each factor has a per-series trait that every question measures with noise."""
    traits = rng.normal(size=(k, r)) if shared is None else shared
    return traits[:, None, :] + 0.5 * rng.normal(size=(k, n, r))


class TestSigmoidNormalizeClr:
    def test_threshold_maps_to_half(self):
        assert sigmoid_normalize_clr(1.5) == 0.5

    def test_zero(self):
        assert 0.045 <= sigmoid_normalize_clr(0.0) <= 0.050
        assert sigmoid_normalize_clr(0.0) == pytest.approx(0.0474, abs=1e-4)

    def test_two(self):
        assert 0.730 <= sigmoid_normalize_clr(2.0) <= 0.732

    def test_infinite_ratio(self):
        assert sigmoid_normalize_clr(float("inf")) == 1.0

    def test_strictly_increasing(self):
        values = [sigmoid_normalize_clr(x) for x in np.linspace(0, 5, 50)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_negative_ratio(self):
        with pytest.raises(InputError):
            sigmoid_normalize_clr(-0.1)


class TestCronbachAlpha:
    def test_identical_items(self):
        base = np.array([1.0, 2.0, 4.0, 5.0, 3.0, 2.0])
        values = np.stack([np.tile(base, (3, 1)), np.tile(base[::-1], (3, 1))])
        assert cronbach_alpha(_cube(values), 0) == pytest.approx(1.0)

    def test_hand_computed_table(self):
        # Rows are observation series, columns are questions
        table = np.array([[1, 2, 3], [2, 3, 3], [3, 3, 4], [4, 5, 5]], dtype=float)
        values = np.stack([table.T, table.T[::-1]])
        assert cronbach_alpha(_cube(values), 0) == pytest.approx(27 / 28, abs=1e-12)

    def test_independent_items(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(2, 5, 5000))
        assert abs(cronbach_alpha(_cube(values), 0)) < 0.05

    def test_too_few_observations(self):
        with pytest.raises(InputError, match="reliability needs"):
            cronbach_alpha(_cube(np.ones((2, 3, 2))), 0)

    def test_incomplete_series_are_dropped(self):
        rng = np.random.default_rng(1)
        values = _consistent_factors(rng, 2, 4, 10)
        with_gap = values.copy()
        with_gap[0, 1, 3] = np.nan
        expected = cronbach_alpha(_cube(np.delete(values, 3, axis=2)), 0)
        assert cronbach_alpha(_cube(with_gap), 0) == pytest.approx(expected)


class TestLoadings:
    def test_independent_factors_give_identity(self):
        rng = np.random.default_rng(2)
        loadings = extract_loadings(_cube(rng.normal(size=(4, 20, 500))))
        assert np.abs(np.diag(loadings.values)) == pytest.approx(np.ones(4), abs=0.05)
        assert all(np.isfinite(cross_loading_ratio(loadings, i)) for i in range(4))
        assert sorted(loadings.assignment) == [0, 1, 2, 3]

    def test_equicorrelated_factors(self):
        rng = np.random.default_rng(3)
        general = rng.normal(size=(1, 40, 500))
        values = np.sqrt(0.95) * general + np.sqrt(0.05) * rng.normal(size=(5, 40, 500))
        loadings = extract_loadings(_cube(values))
        assert loadings.eigenvalues[0] == pytest.approx(5 * 0.95 + 0.05, abs=0.05)
        assert loadings.eigenvalues[1:] == pytest.approx(np.full(4, 0.05), abs=0.02)

    def test_communalities_reproduce_unit_diagonal(self):
        rng = np.random.default_rng(4)
        values = _consistent_factors(rng, 3, 10, 200)
        loadings = extract_loadings(_cube(values))
        assert (loadings.values**2).sum(axis=1) == pytest.approx(np.ones(3), abs=1e-6)

    def test_frame_is_long_form(self):
        rng = np.random.default_rng(5)
        frame = extract_loadings(_cube(rng.normal(size=(3, 5, 50)))).as_frame()
        assert list(frame.columns) == ["observed_factor", "latent_factor", "loading"]
        assert len(frame) == 9


class TestCrossLoadingRatio:
    def test_division(self):
        loadings = LoadingsMatrix(
            values=np.array([[0.6, 0.4], [0.4, 0.6]]),
            eigenvalues=np.ones(2),
            assignment=(0, 1),
            criteria=("f1", "f2"),
        )
        assert cross_loading_ratio(loadings, 0) == pytest.approx(1.5)

    def test_axis_aligned(self):
        loadings = LoadingsMatrix(
            values=np.eye(3), eigenvalues=np.ones(3), assignment=(0, 1, 2), criteria=("a", "b", "c")
        )
        assert cross_loading_ratio(loadings, 1) == float("inf")
        assert sigmoid_normalize_clr(cross_loading_ratio(loadings, 1)) == 1.0


class TestHtmt:
    def test_exact_copy_scores_one(self):
        rng = np.random.default_rng(6)
        values = _consistent_factors(rng, 1, 4, 50)
        cube = _cube(np.concatenate([values, values]))
        assert htmt(cube, 0, 1) == pytest.approx(1.0)

    def test_independent_traits(self):
        rng = np.random.default_rng(7)
        cube = _cube(_consistent_factors(rng, 2, 3, 5000))
        assert htmt(cube, 0, 1) < 0.05

    def test_hand_computed_table(self):
        rng = np.random.default_rng(8)
        values = _consistent_factors(rng, 2, 2, 6)
        items = {(f, q): values[f, q] for f in range(2) for q in range(2)}

        def corr(a, b):
            return np.corrcoef(items[a], items[b])[0, 1]

        within_0 = corr((0, 0), (0, 1))
        within_1 = corr((1, 0), (1, 1))
        cross = (corr((0, 0), (1, 1)) + corr((0, 1), (1, 0))) / 2
        expected = abs(cross) / np.sqrt(within_0 * within_1)
        assert htmt(_cube(values), 0, 1) == pytest.approx(expected, abs=1e-12)

    def test_matrix_properties(self):
        rng = np.random.default_rng(9)
        shared = rng.normal(size=(1, 30))
        traits = np.vstack([shared, shared + rng.normal(size=(1, 30)), rng.normal(size=(1, 30))])
        cube = _cube(_consistent_factors(rng, 3, 4, 30, shared=traits))
        matrix = htmt_matrix(cube)
        assert matrix == pytest.approx(matrix.T)
        assert np.all(matrix >= 0)
        for i in range(3):
            assert htmt(cube, i, i) == pytest.approx(1.0, abs=1e-9)

    def test_unreliable_trait(self):
        rng = np.random.default_rng(10)
        values = _consistent_factors(rng, 2, 2, 40)
        values[1, 1] = -values[1, 0]
        with pytest.raises(NumericError, match="unreliable trait 'f2'"):
            htmt(_cube(values), 0, 1)


class TestPsychometricValidity:
    def test_perfectly_separable(self):
        first = np.array([1.0, -1.0, 1.0, -1.0]) + 3.0
        second = np.array([1.0, 1.0, -1.0, -1.0]) + 3.0
        values = np.stack([np.tile(first, (2, 1)), np.tile(second, (2, 1))])
        report = psychometric_validity(_cube(values))
        assert report.alpha == pytest.approx({"f1": 1.0, "f2": 1.0})
        assert report.clr_norm == pytest.approx({"f1": 1.0, "f2": 1.0})
        assert report.mean_htmt == pytest.approx(0.0, abs=1e-12)
        assert report.unified == pytest.approx(1.0)
        assert report.sensitivity == pytest.approx(0.0, abs=1e-6)

    def test_full_collapse(self):
        base = np.array([1.0, 3.0, 2.0, 5.0, 4.0])
        factor = np.stack([base + 0.1 * q for q in range(3)])
        report = psychometric_validity(_cube(np.stack([factor, factor])))
        assert report.alpha == pytest.approx({"f1": 1.0, "f2": 1.0})
        assert report.mean_htmt == pytest.approx(1.0)
        mean_clr = np.mean(list(report.clr_norm.values()))
        assert mean_clr < 1.0
        assert report.unified == pytest.approx((1.0 + mean_clr + 0.0) / 3)
        assert report.sensitivity > 2.0

    def test_default_score_range(self):
        rng = np.random.default_rng(11)
        report = psychometric_validity(_cube(_consistent_factors(rng, 3, 5, 40)))
        assert report.score_range == 4.0
        assert report.sensitivity == pytest.approx(np.sqrt(max(0, 1 - report.unified)) * 4.0)

    def test_pool_averages_components(self):
        rng = np.random.default_rng(12)
        reports = [
            psychometric_validity(_cube(_consistent_factors(rng, 3, 5, 40))) for _ in range(2)
        ]
        pooled = PsychometricReport.pool(reports)
        assert pooled.alpha["f1"] == pytest.approx(np.mean([r.alpha["f1"] for r in reports]))
        unified = (
            np.mean(list(pooled.alpha.values()))
            + np.mean(list(pooled.clr_norm.values()))
            + 1
            - pooled.mean_htmt
        ) / 3
        assert pooled.unified == pytest.approx(unified)

    def test_invalid_score_range(self):
        rng = np.random.default_rng(13)
        with pytest.raises(InputError):
            psychometric_validity(_cube(_consistent_factors(rng, 2, 3, 10)), score_range=0)


class TestScoreCube:
    def test_from_sample_pivots_series(self, make_sample):
        factors = np.array([[1, 2], [3, 4], [5, 5], [2, 2]], dtype=float)
        sample = make_sample(
            factors,
            np.full(4, 3.0),
            question_ids=["q1", "q1", "q2", "q2"],
            observation_ids=["s1", "s2", "s1", "s2"],
        )
        cube = ScoreCube.from_sample(sample)
        assert (cube.k, cube.n, cube.r) == (2, 2, 2)
        assert cube.values[1, 0, 1] == 4.0
        assert cube.values[0, 1, 0] == 5.0

    def test_repeated_judgments_are_averaged(self, make_sample):
        factors = np.array([[1, 1], [3, 5]], dtype=float)
        sample = make_sample(
            factors, np.full(2, 3.0), question_ids=["q1", "q1"], observation_ids=["s1", "s1"]
        )
        cube = ScoreCube.from_sample(sample)
        assert cube.values[:, 0, 0] == pytest.approx([2.0, 3.0])
