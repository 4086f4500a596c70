"""Acceptance gate: seven end-to-end properties of the package.

Each criterion is one test function, so ``pytest -v`` prints exactly one
pass/fail line per criterion. Tolerances are pinned here and must not be
loosened: 1e-9 relative for numeric oracles and conservation identities,
1e-8 for PCA orthonormality, 1e-9 for the duplicated-channel correlation.
Stated runtime budgets are asserted with ``time.perf_counter``.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import fuselearn.models.evaluate as evaluate_module
from fuselearn.cli import main
from fuselearn.config import CHANNEL_ORDER
from fuselearn.features.spectral import power_spectrum
from fuselearn.features.stats import stat_values
from fuselearn.features.vectors import FeatureMatrix
from fuselearn.features.wavelet import default_levels, haar_dwt
from fuselearn.fusion import (
    cross_channel_correlation,
    fit_pipeline,
    fuse,
    pca_fit,
)
from fuselearn.ingest import LearningUnit
from fuselearn.labeling import LabelWeights, lus_label
from fuselearn.models.cart import _best_split
from fuselearn.models.evaluate import (
    MODEL_NAMES,
    evaluate_combinations,
    kfold_assignments,
    r2_score,
)
from fuselearn.pipeline import featurize_session, label_vector, streams_from_events
from fuselearn.synth import SynthConfig, generate_session
from oracles import (
    oracle_best_split,
    oracle_haar,
    oracle_power_spectrum,
    oracle_r2,
    oracle_stats,
)

REL = 1e-9  # relative tolerance for all numeric-oracle comparisons
ABS = 1e-12  # absolute floor for values at/near zero


def featurized_dataset(config: SynthConfig):
    result = generate_session(config)
    streams = streams_from_events(result.gaze, result.mouse, result.frames)
    matrices = featurize_session(result.session, streams)
    ids, labels = label_vector(result.session)
    return result, matrices, ids, labels


# --------------------------------------------------------------------------
# Criterion 1: numeric-oracle suite (stats, Haar, DFT, R^2, CART splits)
# --------------------------------------------------------------------------

def test_criterion_1_numeric_oracles():
    t0 = time.perf_counter()
    checked = 0

    # every statistical feature on lengths from degenerate to long
    for i, n in enumerate((1, 2, 3, 5, 8, 17, 64, 257)):
        for rep in range(3):
            rng = np.random.default_rng(1000 * i + rep)
            series = np.round(rng.normal(scale=3.0, size=n), 4)
            got = stat_values(series)
            want = oracle_stats(series.tolist())
            assert set(got) == set(want)
            for name in want:
                assert got[name] == pytest.approx(
                    want[name], rel=REL, abs=ABS
                ), f"stat {name} n={n}"
                checked += 1

    # every Haar coefficient, odd and even lengths, full default depth
    for i in range(30):
        rng = np.random.default_rng(2000 + i)
        n = int(rng.integers(2, 200))
        series = rng.normal(size=n)
        levels = default_levels(n)
        pyramid = haar_dwt(series, levels)
        want_details, want_approx = oracle_haar(series.tolist(), levels)
        for got_d, want_d in zip(pyramid.details, want_details):
            np.testing.assert_allclose(got_d, want_d, rtol=REL, atol=ABS)
            checked += got_d.size
        np.testing.assert_allclose(pyramid.approx, want_approx, rtol=REL, atol=ABS)
        checked += pyramid.approx.size

    # every DFT power value
    for i in range(30):
        rng = np.random.default_rng(3000 + i)
        n = int(rng.integers(2, 200))
        series = rng.normal(size=n)
        got = power_spectrum(series)
        want = np.array(oracle_power_spectrum(series.tolist()))
        np.testing.assert_allclose(got, want, rtol=REL, atol=ABS)
        checked += got.size

    # R^2 scores
    for i in range(30):
        rng = np.random.default_rng(4000 + i)
        n = int(rng.integers(2, 50))
        y = rng.normal(size=n)
        pred = y + rng.normal(scale=0.5, size=n)
        assert r2_score(y, pred) == pytest.approx(
            oracle_r2(y.tolist(), pred.tolist()), rel=REL, abs=ABS
        )
        checked += 1

    # CART splits on n <= 12 against the exhaustive Fraction-exact oracle
    for i in range(40):
        rng = np.random.default_rng(5000 + i)
        n = int(rng.integers(2, 13))
        p = int(rng.integers(1, 5))
        if i % 2:  # force ties on a coarse value grid
            X = rng.integers(0, 3, size=(n, p)).astype(np.float64)
        else:
            X = np.round(rng.normal(size=(n, p)), 3)
        y = np.round(rng.normal(size=n), 3)
        min_leaf = int(rng.integers(1, 3))
        got = _best_split(
            X, y, np.arange(n, dtype=np.intp), np.arange(p, dtype=np.intp),
            min_leaf=min_leaf,
        )
        want = oracle_best_split(X.tolist(), y.tolist(), min_leaf=min_leaf)
        if want is None:
            assert got is None
            continue
        assert got is not None
        gain, feature, threshold = got
        want_feature, want_thr, want_gain, want_left = want
        assert feature == want_feature
        assert threshold == pytest.approx(float(want_thr), rel=REL, abs=ABS)
        assert gain == pytest.approx(float(want_gain), rel=REL, abs=ABS)
        left_rows = np.flatnonzero(X[:, feature] <= threshold)
        assert tuple(left_rows.tolist()) == want_left
        checked += 4

    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"numeric-oracle suite took {elapsed:.2f}s (budget 10s)"
    print(f"criterion 1 PASS: {checked} oracle values within 1e-9 in {elapsed:.2f}s")


# --------------------------------------------------------------------------
# Criterion 2: conservation suite (Haar + DFT Parseval, PCA orthonormality)
# --------------------------------------------------------------------------

def test_criterion_2_conservation():
    t0 = time.perf_counter()

    # Haar full-pyramid Parseval on 100 seeded series (power-of-two lengths,
    # where the transform is exactly orthonormal end to end)
    for i in range(100):
        rng = np.random.default_rng(6000 + i)
        n = 2 ** int(rng.integers(1, 11))
        series = rng.normal(size=n)
        pyramid = haar_dwt(series, int(math.log2(n)))
        assert pyramid.approx.size == 1
        assert pyramid.coefficient_energy() == pytest.approx(
            float(np.sum(series**2)), rel=REL
        )

    # DFT Parseval (one-sided spectrum) on 100 seeded series of any length
    for i in range(100):
        rng = np.random.default_rng(7000 + i)
        n = int(rng.integers(2, 500))
        series = rng.normal(size=n)
        power = power_spectrum(series)
        folded = power[0] + 2.0 * power[1:].sum()
        if n % 2 == 0:
            folded -= power[-1]
        assert folded == pytest.approx(float(np.sum(series**2)), rel=REL)

    # PCA: orthonormal components and minimal-k retention >= 0.95
    for i in range(20):
        rng = np.random.default_rng(8000 + i)
        n = int(rng.integers(10, 60))
        p = int(rng.integers(3, 12))
        data = rng.normal(size=(n, p)) * rng.uniform(0.1, 5.0, size=p)
        if i % 3 == 0 and p >= 2:  # exercise rank deficiency
            data[:, -1] = data[:, 0]
        matrix = FeatureMatrix(
            [f"c{j}" for j in range(p)], [f"r{j}" for j in range(n)], data
        )
        model = pca_fit(matrix, retention=0.95)
        k = model.components.shape[0]
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(k), atol=1e-8, rtol=0.0)

        # independent explained-variance route: eigenvalues of the centered data
        centered = data - data.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        shares = (s**2) / float((s**2).sum())
        cumulative = np.cumsum(shares)
        assert cumulative[k - 1] >= 0.95 - 1e-9
        if k > 1:
            assert cumulative[k - 2] < 0.95

    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"conservation suite took {elapsed:.2f}s (budget 10s)"
    print(f"criterion 2 PASS: Parseval x200 + PCA x20 in {elapsed:.2f}s")


# --------------------------------------------------------------------------
# Criterion 3: fusion-trend reproduction on the default synthetic dataset
# --------------------------------------------------------------------------

def test_criterion_3_fusion_trend():
    """200 units, 10 seeds: fused >= single per model, triple >= pairs on the
    model average, forest/gbdt >= cart. Each inequality may fail on at most
    1 of the 10 seeds. Budget: 5 minutes."""
    t0 = time.perf_counter()
    seeds = range(10)
    grid: dict[int, dict[tuple[str, str], float]] = {}
    for seed in seeds:
        _, matrices, _, labels = featurized_dataset(SynthConfig(seed=seed))
        report = evaluate_combinations(matrices, labels, k=10, seed=seed)
        grid[seed] = {(r.combo_label, r.model): r.mean_r2 for r in report.results}

    singles = ("video", "gaze", "mouse")
    pairs = ("video+gaze", "video+mouse", "gaze+mouse")
    triple = "video+gaze+mouse"

    def model_avg(seed, combo):
        return sum(grid[seed][(combo, m)] for m in MODEL_NAMES) / len(MODEL_NAMES)

    inequalities: list[tuple[str, list[int]]] = []
    for m in MODEL_NAMES:  # (a) fused beats every single channel, per model
        for single in singles:
            bad = [s for s in seeds if grid[s][(triple, m)] < grid[s][(single, m)]]
            inequalities.append((f"{m}: {triple} >= {single}", bad))
    for pair in pairs:  # (b) triple beats every pair on the model average
        bad = [s for s in seeds if model_avg(s, triple) < model_avg(s, pair)]
        inequalities.append((f"model-avg: {triple} >= {pair}", bad))
    for m in ("forest", "gbdt"):  # (c) ensembles beat the single tree
        bad = [
            s for s in seeds if grid[s][(triple, m)] < grid[s][(triple, "cart")]
        ]
        inequalities.append((f"{triple}: {m} >= cart", bad))

    failures = [
        f"{name} fails on seeds {bad}" for name, bad in inequalities if len(bad) > 1
    ]
    assert not failures, "; ".join(failures)

    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0, f"trend suite took {elapsed:.1f}s (budget 300s)"
    worst = max(len(bad) for _, bad in inequalities)
    print(
        f"criterion 3 PASS: 14 inequalities over 10 seeds "
        f"(worst inequality fails on {worst} seed(s), allowed 1) in {elapsed:.1f}s"
    )


# --------------------------------------------------------------------------
# Criterion 4: cross-channel independence / duplication checks
# --------------------------------------------------------------------------

def test_criterion_4_independence():
    # all couplings zero: channels are driven by independent noise only
    config = SynthConfig(
        seed=0, beta_video=0.0, beta_gaze=0.0, beta_mouse=0.0
    )
    _, matrices, _, labels = featurized_dataset(config)
    assert len(labels) == 200
    reduced = {
        c: fit_pipeline(c, matrices[c], labels, 0.05, 0.95).transform(matrices[c])
        for c in CHANNEL_ORDER
    }
    summary = cross_channel_correlation(fuse(reduced))
    assert set(summary.pairs) == {"video~gaze", "video~mouse", "gaze~mouse"}
    for pair, value in summary.pairs.items():
        assert value < 0.15, f"mean |r| for {pair} is {value:.4f}"

    # a duplicated (single-column) channel must correlate perfectly
    base = reduced["video"]
    column = base.data[:, :1]
    a = FeatureMatrix(["pc1"], list(base.row_ids), column.copy())
    b = FeatureMatrix(["pc1"], list(base.row_ids), column.copy())
    dup = cross_channel_correlation(fuse({"video": a, "gaze": b}))
    assert dup.pairs["video~gaze"] == pytest.approx(1.0, abs=1e-9)
    print(
        "criterion 4 PASS: decoupled mean |r| "
        f"max={max(summary.pairs.values()):.4f} < 0.15; duplicated channel = 1.0"
    )


# --------------------------------------------------------------------------
# Criterion 5: byte-identical determinism across full CLI reruns
# --------------------------------------------------------------------------

def test_criterion_5_determinism(tmp_path, capsys):
    config = tmp_path / "synth.json"
    config.write_text(json.dumps({"n_units": 12, "seed": 11}))

    def run(tag: str) -> tuple[dict[str, bytes], str]:
        data = tmp_path / tag / "data"
        features = tmp_path / tag / "features"
        report = tmp_path / tag / "report"
        assert main(["synth", "--config", str(config), "--out", str(data)]) == 0
        assert main([
            "featurize", str(data / "manifest.json"), "--out", str(features),
        ]) == 0
        assert main([
            "evaluate", str(features), "--out", str(report), "--k", "3",
        ]) == 0
        capsys.readouterr()
        assert main(["report", str(report), "--format", "json"]) == 0
        printed = capsys.readouterr().out
        blobs = {}
        for directory in (data, features, report):
            for path in sorted(directory.iterdir()):
                blobs[f"{directory.name}/{path.name}"] = path.read_bytes()
        return blobs, printed

    first, printed_first = run("one")
    second, printed_second = run("two")
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], f"{name} differs between reruns"
    assert printed_first == printed_second
    print(f"criterion 5 PASS: {len(first)} artifacts byte-identical across reruns")


# --------------------------------------------------------------------------
# Criterion 6: CV hygiene — every fit touches training-fold rows only
# --------------------------------------------------------------------------

def test_criterion_6_cv_hygiene(monkeypatch):
    _, matrices, ids, labels = featurized_dataset(SynthConfig(n_units=20, seed=3))
    n, k, seed = len(ids), 5, 9

    # independent reconstruction of the fold assignment
    folds = kfold_assignments(n, k, seed)
    expected_train = []
    expected_test = []
    for fold_no in range(k):
        train_idx = [
            i for j, fold in enumerate(folds) for i in fold.tolist() if j != fold_no
        ]
        expected_train.append(tuple(ids[i] for i in train_idx))
        expected_test.append(tuple(ids[i] for i in folds[fold_no].tolist()))
    all_test_ids = {uid for fold in expected_test for uid in fold}
    assert all_test_ids == set(ids)

    pipeline_calls: list[tuple[str, tuple[str, ...]]] = []
    real_fit_pipeline = evaluate_module.fit_pipeline

    def spy_fit_pipeline(channel, matrix, y, alpha, retention):
        pipeline_calls.append((channel, tuple(matrix.row_ids)))
        assert len(matrix.row_ids) == y.shape[0]
        return real_fit_pipeline(channel, matrix, y, alpha, retention)

    model_calls: list[tuple[str, int, int]] = []
    real_fit_predict = evaluate_module.fit_predict

    def spy_fit_predict(name, X_train, y_train, X_test, seed=0):
        model_calls.append((name, X_train.shape[0], X_test.shape[0]))
        return real_fit_predict(name, X_train, y_train, X_test, seed)

    monkeypatch.setattr(evaluate_module, "fit_pipeline", spy_fit_pipeline)
    monkeypatch.setattr(evaluate_module, "fit_predict", spy_fit_predict)

    combos = [("video",), ("video", "gaze", "mouse")]
    report = evaluate_combinations(
        matrices, labels, combos=combos, models=("cart", "forest"), k=k, seed=seed
    )

    # filter/scaler/PCA fits: one per fold per channel, exactly the training
    # rows in fold order, never a test row
    assert len(pipeline_calls) == k * len(CHANNEL_ORDER)
    for fold_no in range(k):
        for offset, channel in enumerate(CHANNEL_ORDER):
            got_channel, got_ids = pipeline_calls[fold_no * 3 + offset]
            assert got_channel == channel
            assert got_ids == expected_train[fold_no]
            assert not set(got_ids) & set(expected_test[fold_no])

    # model fits: train/test row counts match the fold sizes exactly
    assert len(model_calls) == k * len(combos) * 2
    fold_sizes = [fold.size for fold in folds]
    position = 0
    for _ in combos:
        for _ in ("cart", "forest"):
            for fold_no in range(k):
                _, n_train, n_test = model_calls[position]
                assert n_train == n - fold_sizes[fold_no]
                assert n_test == fold_sizes[fold_no]
                assert n_train < n  # a fit never sees the full dataset
                position += 1

    # the report's own audit trail agrees with the instrumentation
    for result in report.results:
        for record in result.folds:
            assert record.train_ids == expected_train[record.fold]
            assert record.test_ids == expected_test[record.fold]
            for channel, fit_ids in record.pipeline_fit_ids.items():
                assert fit_ids == expected_train[record.fold], channel

    print(
        f"criterion 6 PASS: {len(pipeline_calls)} pipeline fits and "
        f"{len(model_calls)} model fits touched training rows only"
    )


# --------------------------------------------------------------------------
# Criterion 7: labeling hand cases and monotonicity sweep
# --------------------------------------------------------------------------

def test_criterion_7_labeling():
    def unit(mastery, self_eval, class_eval):
        return LearningUnit(
            unit_id="u", start=0, end=1000,
            self_eval=float(self_eval), class_eval=float(class_eval),
            mastery=float(mastery),
        )

    # the three hand-computed cases
    assert lus_label(unit(100, 100, 100)).value == pytest.approx(1.0, abs=REL)
    assert lus_label(unit(0, 10, 0)).value == pytest.approx(0.0, abs=REL)
    want = 0.2 * 0.5 + 0.4 * (60.0 / 90.0) + 0.4 * 0.8  # 0.68667 to 5 places
    got = lus_label(unit(50, 70, 80)).value
    assert got == pytest.approx(want, abs=REL)
    assert f"{got:.5f}" == "0.68667"

    # 1,000-case randomized monotonicity sweep over each input
    rng = np.random.default_rng(99)
    for case in range(1000):
        mastery = float(rng.uniform(0, 100))
        self_eval = float(rng.uniform(10, 100))
        class_eval = float(rng.uniform(0, 100))
        weights = LabelWeights(*rng.uniform(0.05, 1.0, size=3))
        before = lus_label(unit(mastery, self_eval, class_eval), weights).value
        assert 0.0 <= before <= 1.0
        which = case % 3
        if which == 0:
            bumped = unit(min(100.0, mastery + rng.uniform(0, 30)),
                          self_eval, class_eval)
        elif which == 1:
            bumped = unit(mastery, min(100.0, self_eval + rng.uniform(0, 30)),
                          class_eval)
        else:
            bumped = unit(mastery, self_eval,
                          min(100.0, class_eval + rng.uniform(0, 30)))
        after = lus_label(bumped, weights).value
        assert after >= before
    print("criterion 7 PASS: 3 hand cases within 1e-9 + 1000-case monotone sweep")
