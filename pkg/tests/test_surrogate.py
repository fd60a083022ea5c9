import numpy as np
import pytest

from schedfront.domain import FrequencyGrid, LaunchTiming, ScheduleConfig, SmGrid
from schedfront.simgpu import simulate_schedule
from schedfront.surrogate import (
    FeatureContext,
    GbtHyper,
    fit,
    fit_ensemble,
    uncertainty,
)
from schedfront.workloads import attention_partition, default_gpu


def grid_dataset(target="time"):
    """50-config (frequency x SM) grid with simulator targets."""
    gpu = default_gpu()
    part = attention_partition()
    freqs = FrequencyGrid(tuple(900.0 + 51.0 * i for i in range(10)))
    sms = SmGrid((2, 6, 10, 14, 18))
    configs = [
        ScheduleConfig(f, s, LaunchTiming.overlap(0, 5))
        for f in freqs.values
        for s in sms.values
    ]
    ctx = FeatureContext.from_space(freqs, sms, span_max=5)
    X = ctx.encode_many(configs)
    y = np.array(
        [
            getattr(
                simulate_schedule(part, c, gpu),
                "time_ms" if target == "time" else "dyn_energy_j",
            )
            for c in configs
        ]
    )
    return X, y


class TestFeatureContext:
    def test_equal_configs_encode_equally(self):
        ctx = FeatureContext(900.0, 1410.0, 1, 20, 5)
        a = ScheduleConfig(1200.0, 8, LaunchTiming.overlap(2, 3))
        b = ScheduleConfig(1200.0, 8, LaunchTiming.overlap(2, 3))
        assert np.array_equal(ctx.encode(a), ctx.encode(b))

    def test_timing_codes_distinct(self):
        ctx = FeatureContext(900.0, 1410.0, 1, 20, 5)
        codes = {ctx.timing_index(LaunchTiming.sequential())}
        for i in range(4):
            for s in range(1, 6):
                codes.add(ctx.timing_index(LaunchTiming.overlap(i, s)))
        assert len(codes) == 21

    def test_normalization_bounds(self):
        ctx = FeatureContext(900.0, 1410.0, 1, 20, 5)
        lo = ctx.encode(ScheduleConfig(900.0, 1, LaunchTiming.sequential()))
        hi = ctx.encode(ScheduleConfig(1410.0, 20, LaunchTiming.sequential()))
        assert lo[0] == 0.0 and hi[0] == 1.0
        assert lo[1] == 0.0 and hi[1] == 1.0


class TestFit:
    def test_constant_target_predicts_constant(self):
        X = np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 1.0], [1.0, 1.0, 2.0]])
        model = fit(X, np.array([4.2, 4.2, 4.2]))
        query = np.array([[0.25, 0.75, 3.0], [9.0, -1.0, 0.0]])
        assert np.allclose(model.predict(query), 4.2)

    def test_training_rmse_beats_constant_mean(self):
        X, y = grid_dataset()
        model = fit(X, y)
        pred = model.predict(X)
        rmse = np.sqrt(np.mean((pred - y) ** 2))
        rmse_mean = np.sqrt(np.mean((y - y.mean()) ** 2))
        assert rmse <= rmse_mean

    def test_held_out_rmse_below_ten_percent_of_range(self):
        for target in ("time", "dyn"):
            X, y = grid_dataset(target)
            rng = np.random.default_rng(42)
            perm = rng.permutation(len(y))
            train, test = perm[:40], perm[40:]
            model = fit(X[train], y[train])
            rmse = np.sqrt(np.mean((model.predict(X[test]) - y[test]) ** 2))
            assert rmse < 0.10 * (y.max() - y.min())

    def test_identical_features_with_differing_targets_predict_mean(self):
        X = np.zeros((4, 3))
        y = np.array([1.0, 2.0, 3.0, 6.0])
        model = fit(X, y)
        assert model.predict(np.zeros((1, 3)))[0] == pytest.approx(y.mean())

    def test_training_points_memorized_on_small_data(self):
        X, y = grid_dataset()
        model = fit(X, y)
        pred_n = model.predict_normalized(X)
        target_n = model.normalize(y)
        assert np.max(np.abs(pred_n - target_n)) < 0.05

    def test_deterministic_refit(self):
        X, y = grid_dataset()
        q = np.random.default_rng(0).random((30, 3))
        a = fit(X, y).predict(q)
        b = fit(X, y).predict(q)
        assert np.array_equal(a, b)

    def test_prediction_query_order_invariant(self):
        X, y = grid_dataset()
        model = fit(X, y)
        q = np.random.default_rng(1).random((20, 3))
        single = np.array([model.predict(q[i : i + 1])[0] for i in range(len(q))])
        assert np.array_equal(model.predict(q), single)

    def test_normalization_roundtrip(self):
        X, y = grid_dataset()
        model = fit(X, y)
        assert np.allclose(model.denormalize(model.normalize(y)), y, rtol=1e-12)

    def test_too_few_rows_rejected(self):
        with pytest.raises(ValueError):
            fit(np.zeros((1, 3)), np.array([1.0]))

    def test_total_energy_composition(self):
        # Predicted total energy = predicted time * static power + predicted
        # dynamic energy, by construction of the two-model decomposition.
        X, y_t = grid_dataset("time")
        _, y_e = grid_dataset("dyn")
        p_static = default_gpu().p_static_w
        model_t, model_e = fit(X, y_t), fit(X, y_e)
        q = X[::7]
        total = model_t.predict(q) / 1000.0 * p_static + model_e.predict(q)
        direct = y_t[::7] / 1000.0 * p_static + y_e[::7]
        assert total == pytest.approx(direct, rel=0.05)


class TestEnsemble:
    def test_identity_resample_equal_seeds_zero_uncertainty(self):
        X, y = grid_dataset()
        # Degenerate ensemble: every member fitted on the identical full
        # dataset disagrees nowhere.
        from schedfront.surrogate import BootstrapEnsemble, _fit_on_normalized

        y_min, y_max = float(y.min()), float(y.max())
        y_norm = (y - y_min) / (y_max - y_min)
        member = _fit_on_normalized(X, y_norm, y_min, y_max, GbtHyper())
        ens = BootstrapEnsemble([member, member, member])
        assert np.allclose(ens.std_normalized(X), 0.0)

    def test_member_count_and_distinct_seeds(self):
        X, y = grid_dataset()
        ens = fit_ensemble(X, y, m=5, fraction=0.8, seed=10)
        assert len(ens.members) == 5
        preds = ens.member_predictions_normalized(X)
        assert len({tuple(np.round(p, 12)) for p in preds}) > 1

    def test_two_point_sigma_example(self):
        # Member time predictions {0.1, 0.3} and energy {0.2, 0.2}:
        # uncertainty = population std 0.1 + 0 = 0.1.
        class Stub:
            def __init__(self, value):
                self.value = value

            def predict_normalized(self, X):
                return np.full(len(X), self.value)

        from schedfront.surrogate import BootstrapEnsemble

        ens_t = BootstrapEnsemble([Stub(0.1), Stub(0.3)])
        ens_e = BootstrapEnsemble([Stub(0.2), Stub(0.2)])
        unc = uncertainty(ens_t, ens_e, np.zeros((3, 3)))
        assert unc == pytest.approx(0.1)

    def test_uncertainty_nonnegative_fuzz(self):
        X, y = grid_dataset()
        rng = np.random.default_rng(5)
        ens_t = fit_ensemble(X, y, seed=1)
        ens_e = fit_ensemble(X, y * 2.0, seed=2)
        q = rng.random((1000, 3))
        assert (uncertainty(ens_t, ens_e, q) >= 0.0).all()

    def test_uncertainty_higher_far_from_training_data(self):
        # 1-D slice: train only at low feature values, query far away.
        rng = np.random.default_rng(8)
        X = np.column_stack([rng.uniform(0.0, 0.3, 40), np.zeros(40), np.zeros(40)])
        y = np.sin(X[:, 0] * 10) + rng.normal(0, 0.05, 40)
        ens = fit_ensemble(X, y, seed=3)
        near = np.array([[X[0, 0], 0.0, 0.0]])
        far = np.array([[1.0, 0.0, 0.0]])
        assert ens.std_normalized(far)[0] >= ens.std_normalized(near)[0]

    def test_small_dataset_rejected(self):
        with pytest.raises(ValueError):
            fit_ensemble(np.zeros((3, 3)), np.array([1.0, 2.0, 3.0]))
