import numpy as np
import pytest

from fuselearn.errors import (
    ConstantTruth,
    DegenerateMatrix,
    DimensionMismatch,
    InvalidConfig,
    RowMismatch,
    TooFewRows,
    ZeroVarianceColumn,
)
from fuselearn.features.vectors import FeatureMatrix
from fuselearn.fusion import (
    ChannelPipeline,
    correlation_matrix,
    cross_channel_correlation,
    fit_pipeline,
    fuse,
    hypothesis_filter,
    pca_fit,
    pca_transform,
    pearson_p_values,
    scaler_apply,
    scaler_fit,
)

from oracles import oracle_pca, oracle_pearson_r, oracle_t_two_sided_p

REL = 1e-9


def matrix_from(data, prefix="f"):
    data = np.asarray(data, dtype=np.float64)
    return FeatureMatrix(
        columns=[f"{prefix}{j}" for j in range(data.shape[1])],
        row_ids=[f"u{i:03d}" for i in range(data.shape[0])],
        data=data,
    )


class TestPearsonFilter:
    def test_p_values_match_oracle(self):
        rng = np.random.default_rng(0)
        n = 30
        labels = rng.normal(size=n)
        data = np.column_stack([
            labels * 2.0 + rng.normal(scale=0.1, size=n),  # strong
            rng.normal(size=n),                            # noise
            labels * -1.0 + rng.normal(scale=2.0, size=n), # weak
        ])
        p, defined = pearson_p_values(data, labels)
        assert defined.all()
        for j in range(3):
            r = oracle_pearson_r(data[:, j].tolist(), labels.tolist())
            want = oracle_t_two_sided_p(r, n)
            assert p[j] == pytest.approx(want, rel=1e-8, abs=1e-300)

    def test_zero_variance_column_masked(self):
        labels = np.arange(10.0)
        data = np.column_stack([labels, np.full(10, 3.0)])
        p, defined = pearson_p_values(data, labels)
        assert defined.tolist() == [True, False]
        assert np.isnan(p[1])
        assert p[0] == pytest.approx(0.0, abs=1e-12)  # |r| = 1 -> p = 0

    def test_independent_noise_dropped_monte_carlo(self):
        # a pure-noise column survives alpha=0.05 about 5% of the time; over
        # 200 seeded trials it must be dropped in >= 90%
        n, dropped = 100, 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            labels = rng.normal(size=n)
            data = np.column_stack([labels + rng.normal(scale=0.2, size=n),
                                    rng.normal(size=n)])
            mask = hypothesis_filter(matrix_from(data), labels, 0.05)
            if "f1" not in mask.kept:
                dropped += 1
        assert dropped >= 180

    def test_keeps_best_column_when_nothing_passes(self):
        rng = np.random.default_rng(42)
        labels = rng.normal(size=20)
        data = rng.normal(size=(20, 4))  # all noise
        mask = hypothesis_filter(matrix_from(data), labels, 1e-12)
        assert len(mask.kept) == 1
        best = min(mask.p_values, key=mask.p_values.get)
        assert mask.kept == (best,)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(1)
        labels = rng.normal(size=50)
        coef = np.concatenate([rng.normal(size=4), np.zeros(4)])
        data = np.outer(labels, coef) + rng.normal(size=(50, 8))
        m = matrix_from(data)
        kept_tight = set(hypothesis_filter(m, labels, 0.01).kept)
        kept_loose = set(hypothesis_filter(m, labels, 0.2).kept)
        assert kept_tight <= kept_loose

    def test_errors(self):
        labels = np.arange(10.0)
        m = matrix_from(np.random.default_rng(2).normal(size=(10, 3)))
        with pytest.raises(InvalidConfig):
            hypothesis_filter(m, labels, 0.0)
        with pytest.raises(RowMismatch):
            hypothesis_filter(m, labels[:-1], 0.05)
        with pytest.raises(ConstantTruth):
            hypothesis_filter(m, np.ones(10), 0.05)
        with pytest.raises(DegenerateMatrix):
            hypothesis_filter(matrix_from(np.ones((10, 2))), labels, 0.05)
        with pytest.raises(TooFewRows):
            pearson_p_values(np.ones((2, 1)), np.arange(2.0))


class TestScaler:
    def test_standardizes_fit_matrix(self):
        rng = np.random.default_rng(3)
        m = matrix_from(rng.normal(5.0, 2.0, size=(40, 6)))
        scaler = scaler_fit(m)
        out = scaler_apply(scaler, m)
        np.testing.assert_allclose(out.data.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.data.std(axis=0, ddof=1), 1.0, rtol=1e-12)

    def test_transform_uses_fit_moments(self):
        rng = np.random.default_rng(4)
        train = matrix_from(rng.normal(size=(30, 3)))
        test = matrix_from(rng.normal(size=(10, 3)))
        scaler = scaler_fit(train)
        out = scaler_apply(scaler, test)
        want = (test.data - train.data.mean(axis=0)) / train.data.std(axis=0, ddof=1)
        np.testing.assert_array_equal(out.data, want)

    def test_errors(self):
        with pytest.raises(ZeroVarianceColumn):
            scaler_fit(matrix_from(np.ones((5, 1))))
        with pytest.raises(TooFewRows):
            scaler_fit(matrix_from(np.ones((1, 2))))
        scaler = scaler_fit(matrix_from(np.random.default_rng(5).normal(size=(5, 2))))
        with pytest.raises(DimensionMismatch):
            scaler_apply(scaler, matrix_from(np.zeros((5, 2)), prefix="g"))


class TestPca:
    @pytest.mark.parametrize("seed,n,p", [(0, 20, 5), (1, 50, 8), (2, 12, 12)])
    def test_matches_eigendecomposition_oracle(self, seed, n, p):
        rng = np.random.default_rng(seed)
        data = rng.normal(size=(n, p)) @ rng.normal(size=(p, p))
        model = pca_fit(matrix_from(data), retention=0.95)
        want_components, want_shares = oracle_pca(data)
        cumulative = np.cumsum(want_shares)
        want_k = int(np.searchsorted(cumulative, 0.95 - 1e-12)) + 1
        assert model.k == want_k
        np.testing.assert_allclose(
            model.components, want_components[:want_k], rtol=1e-7, atol=1e-8
        )
        np.testing.assert_allclose(
            model.shares, want_shares[:want_k], rtol=REL, atol=1e-12
        )

    def test_components_orthonormal(self):
        rng = np.random.default_rng(6)
        model = pca_fit(matrix_from(rng.normal(size=(60, 20))), retention=0.95)
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(model.k), atol=1e-10)

    def test_minimal_k_exactly_covers_retention(self):
        rng = np.random.default_rng(7)
        data = rng.normal(size=(40, 10)) * np.linspace(5.0, 0.1, 10)
        centered = data - data.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        shares = s**2 / (s**2).sum()
        model = pca_fit(matrix_from(data), retention=0.9)
        cum = np.cumsum(shares)
        assert cum[model.k - 1] >= 0.9 - 1e-12
        assert model.k == 1 or cum[model.k - 2] < 0.9

    def test_isotropic_gaussian_keeps_all_three(self):
        rng = np.random.default_rng(8)
        model = pca_fit(matrix_from(rng.normal(size=(5000, 3))), retention=0.95)
        assert model.k == 3

    def test_retention_one_keeps_full_rank(self):
        rng = np.random.default_rng(9)
        model = pca_fit(matrix_from(rng.normal(size=(30, 4))), retention=1.0)
        assert model.k == 4

    def test_sign_convention_largest_entry_positive(self):
        rng = np.random.default_rng(10)
        model = pca_fit(matrix_from(rng.normal(size=(25, 6))), retention=0.99)
        for row in model.components:
            assert row[np.abs(row).argmax()] > 0.0

    def test_transform_projects_onto_components(self):
        rng = np.random.default_rng(11)
        train = matrix_from(rng.normal(size=(30, 5)))
        test = matrix_from(rng.normal(size=(8, 5)))
        model = pca_fit(train, retention=0.95)
        out = pca_transform(model, test)
        want = (test.data - model.mean) @ model.components.T
        np.testing.assert_array_equal(out.data, want)
        assert out.columns == [f"pc{i + 1}" for i in range(model.k)]

    def test_errors(self):
        with pytest.raises(InvalidConfig):
            pca_fit(matrix_from(np.zeros((5, 2))), retention=0.0)
        with pytest.raises(TooFewRows):
            pca_fit(matrix_from(np.zeros((1, 2))), retention=0.9)
        with pytest.raises(DegenerateMatrix):
            pca_fit(matrix_from(np.ones((6, 2))), retention=0.9)


class TestPipeline:
    def build(self, seed=12, n=60):
        rng = np.random.default_rng(seed)
        labels = rng.uniform(size=n)
        signal = labels[:, None] * rng.normal(size=10)
        data = signal + rng.normal(scale=0.4, size=(n, 10))
        return matrix_from(data), labels

    def test_fit_transform_round_trip(self):
        m, labels = self.build()
        pipe = fit_pipeline("gaze", m, labels, alpha=0.05, retention=0.95)
        out = pipe.transform(m)
        assert out.shape[0] == 60
        assert out.shape[1] == pipe.pca.k
        assert pipe.fit_row_ids == tuple(m.row_ids)

    def test_json_round_trip_is_exact(self):
        m, labels = self.build(13)
        pipe = fit_pipeline("mouse", m, labels, alpha=0.05, retention=0.95)
        clone = ChannelPipeline.from_json(pipe.to_json())
        assert clone.to_json() == pipe.to_json()
        np.testing.assert_array_equal(pipe.transform(m).data, clone.transform(m).data)

    def test_transform_on_unseen_rows_uses_fit_artifacts(self):
        m, labels = self.build(14, n=80)
        train = m.take_rows(np.arange(60))
        test = m.take_rows(np.arange(60, 80))
        pipe = fit_pipeline("video", train, labels[:60], 0.05, 0.95)
        out = pipe.transform(test)
        assert out.shape == (20, pipe.pca.k)
        assert out.row_ids == test.row_ids


class TestFuse:
    def test_concatenates_in_canonical_order(self):
        rng = np.random.default_rng(15)
        mats = {
            "mouse": matrix_from(rng.normal(size=(5, 2)), "m"),
            "video": matrix_from(rng.normal(size=(5, 3)), "v"),
            "gaze": matrix_from(rng.normal(size=(5, 1)), "g"),
        }
        fused = fuse(mats)
        assert fused.columns == [
            "video.v0", "video.v1", "video.v2", "gaze.g0", "mouse.m0", "mouse.m1",
        ]
        np.testing.assert_array_equal(fused.data[:, :3], mats["video"].data)
        np.testing.assert_array_equal(fused.data[:, 3:4], mats["gaze"].data)
        np.testing.assert_array_equal(fused.data[:, 4:], mats["mouse"].data)

    def test_errors(self):
        rng = np.random.default_rng(16)
        with pytest.raises(InvalidConfig):
            fuse({})
        with pytest.raises(InvalidConfig):
            fuse({"audio": matrix_from(rng.normal(size=(4, 2)))})
        a = matrix_from(rng.normal(size=(4, 2)))
        b = FeatureMatrix(["x"], ["r1", "r2", "r3", "zz"], rng.normal(size=(4, 1)))
        with pytest.raises(RowMismatch):
            fuse({"video": a, "gaze": b})


class TestCrossChannelCorrelation:
    def test_correlation_matrix_basics(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=50)
        data = np.column_stack([x, -x, rng.normal(size=50), np.ones(50)])
        corr = correlation_matrix(data)
        assert corr[0, 1] == pytest.approx(-1.0, rel=REL)
        assert abs(corr[0, 2]) < 0.5
        assert corr[0, 3] == 0.0  # undefined vs constant -> 0
        np.testing.assert_array_equal(np.diag(corr), np.ones(4))

    def test_duplicated_channel_mean_abs_r_is_one(self):
        # the pair summary averages |r| over every cross-block entry, so the
        # perfect-dependence check duplicates a single-column channel
        rng = np.random.default_rng(18)
        col = rng.normal(size=(30, 1))
        fused = fuse({
            "video": matrix_from(col, "a"),
            "gaze": matrix_from(col.copy(), "b"),
        })
        summary = cross_channel_correlation(fused)
        assert summary.pairs["video~gaze"] == pytest.approx(1.0, rel=1e-12)

    def test_duplicated_block_diagonal_is_all_ones(self):
        rng = np.random.default_rng(21)
        block = rng.normal(size=(30, 3))
        fused = fuse({
            "video": matrix_from(block, "a"),
            "gaze": matrix_from(block.copy(), "b"),
        })
        summary = cross_channel_correlation(fused)
        cross = summary.matrix[:3, 3:]
        np.testing.assert_allclose(np.diag(cross), np.ones(3), rtol=1e-12)

    def test_independent_channels_low_mean_abs_r(self):
        rng = np.random.default_rng(19)
        fused = fuse({
            "video": matrix_from(rng.normal(size=(200, 4)), "a"),
            "gaze": matrix_from(rng.normal(size=(200, 4)), "b"),
        })
        summary = cross_channel_correlation(fused)
        assert summary.pairs["video~gaze"] < 0.15

    def test_pair_keys_cover_all_channel_pairs(self):
        rng = np.random.default_rng(20)
        fused = fuse({
            c: matrix_from(rng.normal(size=(10, 2)), c[0]) for c in ("video", "gaze", "mouse")
        })
        summary = cross_channel_correlation(fused)
        assert set(summary.pairs) == {"video~gaze", "video~mouse", "gaze~mouse"}
