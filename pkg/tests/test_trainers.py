import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwdeep import InvalidInputError, L1Ball, NumericalError, QuadraticObjective
from fwdeep.dataset import Dataset, generate
from fwdeep.fw_core import LineSearchConfig, LmoVertex, StepSizeRule, fw_step
from fwdeep.neural_net import DEFAULT_MODEL, MlpObjective, init_params
from fwdeep.objective import Objective
from fwdeep.trainers import (
    HISTORY_HEADER,
    Method,
    TrainConfig,
    _batches,
    deep_line_search,
    evaluate_accuracy,
    gd_step,
    run_label,
    train,
    train_full_fw,
    train_stochastic_fw,
)

SMALL_TRAIN = generate(120, 42)
SMALL_TEST = generate(80, 43)

RULES = [
    StepSizeRule.fixed(3e-3),
    StepSizeRule.proportional(3e-2),
    StepSizeRule.decreasing(),
    StepSizeRule.line_search_rule(LineSearchConfig(grid_points=10, steps=5)),
]


def fw_config(rule, epochs=5, **kw):
    return TrainConfig(Method.FW, epochs, rule, **kw)


class TestConfig:
    def test_fw_needs_rule(self):
        with pytest.raises(InvalidInputError):
            TrainConfig(Method.FW, 1)

    @pytest.mark.parametrize(
        "kw",
        [dict(epochs=0), dict(batch_size=0), dict(learning_rate=0.0), dict(penalty=-1.0), dict(radius=0.0)],
    )
    def test_rejects_bad_values(self, kw):
        args = dict(method=Method.GD, epochs=1) | kw
        with pytest.raises(InvalidInputError):
            TrainConfig(**args)

    def test_labels(self):
        assert run_label(TrainConfig(Method.GD, 1)) == "gd"
        assert [run_label(fw_config(r)) for r in RULES] == ["fixed", "prop", "decreasing", "linesearch"]


class TestAccuracy:
    def test_perfect_predictor(self):
        w = init_params(0, L1Ball(10))
        x = np.random.default_rng(0).uniform(size=(50, 2))
        y = np.where(DEFAULT_MODEL.predict(w, x) >= 0, 1.0, -1.0)
        assert evaluate_accuracy(w, Dataset(x, y)) == 1.0

    def test_zero_params_is_constant_plus_one(self):
        test = generate(1000, 43)
        acc = evaluate_accuracy(np.zeros(1401), test)
        assert acc == np.mean(test.y == 1.0)
        # pi/4 plus or minus three standard errors
        assert 0.746 <= acc <= 0.824

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            evaluate_accuracy(np.zeros(1401), Dataset(np.zeros((0, 2)), np.zeros(0)))


class TestDeepLineSearch:
    def test_quadratic_proxy(self):
        gamma = deep_line_search(np.array([0.5, 0.5]), LmoVertex(0, -1.0, 2), QuadraticObjective())
        # phi'(g) = 5g - 2
        assert gamma == pytest.approx(0.4, abs=0.01)

    def test_increasing_phi_gives_zero(self):
        # moving toward +e_0 from the minimizer only increases the quadratic
        assert deep_line_search(np.zeros(2), LmoVertex(0, 1.0, 2), QuadraticObjective()) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=6),
        st.integers(0, 5),
        st.sampled_from([-1.0, 1.0]),
    )
    def test_never_worse_than_grid(self, xs, j, sign):
        x = np.array(xs)
        s = LmoVertex(j % x.size, sign * 3.0, x.size)
        obj = QuadraticObjective()
        gamma = deep_line_search(x, s, obj)
        best_grid = min(obj.value(fw_step(x, s, k / 100)) for k in range(100))
        assert obj.value(fw_step(x, s, gamma)) <= best_grid

    def test_never_worse_than_grid_on_network(self):
        data = generate(100, 5)
        obj = MlpObjective(data)
        w = init_params(7, L1Ball(10))
        s = LmoVertex(17, -10.0, 1401)
        gamma = deep_line_search(w, s, data)
        best_grid = min(obj.value(fw_step(w, s, k / 100)) for k in range(100))
        assert obj.value(fw_step(w, s, gamma)) <= best_grid

    def test_non_finite_phi(self):
        class Blowup(Objective):
            def value(self, x):
                return math.inf if x[0] > 0.1 else float(x @ x)

            def gradient(self, x):
                return 2 * x

        with pytest.raises(NumericalError):
            deep_line_search(np.zeros(2), LmoVertex(0, 1.0, 2), Blowup())


class TestGd:
    def test_one_dimensional_step(self):
        assert gd_step(np.array([1.0]), np.array([2.0]), 0.1)[0] == pytest.approx(0.8, abs=1e-15)

    def test_runs_and_records_no_fw_columns(self):
        h = train(TrainConfig(Method.GD, 3), SMALL_TRAIN, SMALL_TEST)
        assert len(h.records) == 3
        assert all(r.gamma is None and r.duality_gap is None for r in h.records)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_is_numerical_error(self):
        with pytest.raises(NumericalError) as err:
            train(TrainConfig(Method.GD, 50, learning_rate=1e300), SMALL_TRAIN, SMALL_TEST)
        assert err.value.iteration is not None


class TestFrankWolfe:
    def test_zero_step_changes_nothing(self):
        seen = []
        cfg = fw_config(StepSizeRule.fixed(0.0), epochs=1)
        h = train(cfg, SMALL_TRAIN, SMALL_TEST, observer=lambda t, w: seen.append(w.copy()))
        w0 = init_params(cfg.seed_init, cfg.ball)
        np.testing.assert_array_equal(seen[0], w0)
        assert h.final.test_accuracy == evaluate_accuracy(w0, SMALL_TEST)

    @pytest.mark.parametrize("rule", RULES, ids=lambda r: r.kind.value)
    @pytest.mark.parametrize("batch", [None, 32])
    def test_every_iterate_feasible(self, rule, batch):
        norms = []
        cfg = fw_config(rule, epochs=4, batch_size=batch)
        h = train(cfg, SMALL_TRAIN, SMALL_TEST, observer=lambda t, w: norms.append(np.abs(w).sum()))
        assert max(norms) <= 10.0 + 1e-9
        assert all(r.l1_norm <= 10.0 + 1e-9 for r in h.records)
        assert all(0.0 <= r.gamma <= 1.0 for r in h.records)

    def test_small_radius_feasible(self):
        norms = []
        cfg = fw_config(StepSizeRule.fixed(0.5), epochs=5, radius=0.3, batch_size=40)
        train(cfg, SMALL_TRAIN, SMALL_TEST, observer=lambda t, w: norms.append(np.abs(w).sum()))
        assert max(norms) <= 0.3 + 1e-9

    @pytest.mark.parametrize("rule", RULES, ids=lambda r: r.kind.value)
    def test_full_batch_equivalence(self, rule):
        full = train_full_fw(fw_config(rule), SMALL_TRAIN, SMALL_TEST)
        stoch = train_stochastic_fw(fw_config(rule, batch_size=len(SMALL_TRAIN)), SMALL_TRAIN, SMALL_TEST)
        strip = lambda h: [r.__dict__ | {"wall_time_ms": 0} for r in h.records]
        assert strip(full) == strip(stoch)

    @pytest.mark.parametrize("batch", [None, 25])
    def test_deterministic(self, batch, tmp_path):
        cfg = fw_config(StepSizeRule.proportional(3e-2), batch_size=batch)
        paths = []
        for k in range(2):
            p = tmp_path / f"{k}.csv"
            train(cfg, SMALL_TRAIN, SMALL_TEST).to_csv(p, timing=False)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_decreasing_counter_is_global(self):
        ts = []
        cfg = fw_config(StepSizeRule.decreasing(), epochs=2, batch_size=40)
        h = train(cfg, SMALL_TRAIN, SMALL_TEST, observer=lambda t, w: ts.append(t))
        assert ts == list(range(6))
        # epoch 2 covers t = 3, 4, 5
        assert h.records[1].gamma == pytest.approx(np.mean([2 / (t + 2) for t in (3, 4, 5)]), rel=1e-15)

    def test_excluded_biases_stay_at_init(self):
        cfg = fw_config(StepSizeRule.fixed(0.1), epochs=3, include_biases=False)
        seen = []
        train(cfg, SMALL_TRAIN, SMALL_TEST, observer=lambda t, w: seen.append(w.copy()))
        mask = DEFAULT_MODEL.weight_mask()
        w0 = init_params(cfg.seed_init, cfg.ball)
        np.testing.assert_array_equal(seen[-1][~mask], w0[~mask])
        assert np.abs(seen[-1][mask]).sum() <= 10 + 1e-9

    def test_batch_larger_than_set(self):
        with pytest.raises(InvalidInputError):
            train(fw_config(RULES[0], batch_size=121), SMALL_TRAIN, SMALL_TEST)


class TestBatches:
    @settings(max_examples=50)
    @given(st.integers(1, 300), st.integers(1, 300), st.integers(0, 2**31))
    def test_partition(self, n, size, seed):
        rng = np.random.default_rng(seed)
        parts = _batches(n, size, rng)
        flat = np.concatenate(parts)
        assert sorted(flat.tolist()) == list(range(n))
        assert all(len(p) <= size for p in parts)
        assert all(np.all(np.diff(p) > 0) for p in parts)

    def test_full_batch(self):
        np.testing.assert_array_equal(_batches(7, None, None)[0], np.arange(7))


def test_history_csv(tmp_path):
    h = train(fw_config(RULES[1], epochs=2), SMALL_TRAIN, SMALL_TEST)
    p = tmp_path / "h.csv"
    h.to_csv(p, timing=False)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(HISTORY_HEADER)
    assert len(lines) == 3
    row = lines[1].split(",")
    assert row[0] == "1" and row[-1] == "0"
    assert float(row[2]) == h.records[0].test_accuracy
