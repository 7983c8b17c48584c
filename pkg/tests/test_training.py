"""Tests for Adam training, snapshots and training checkpoints."""

import math

import numpy as np
import pytest
import torch

import src.training as training
from src.errors import TrainingDivergedError
from src.export import read_loss_log
from src.fieldnet import DTYPE
from src.models import TrainConfig
from src.problems import build_collocation
from src.training import (
    SNAPSHOT_TIMES,
    adam_update,
    init_state,
    load_state,
    save_state,
    train,
)


def parameters(state):
    return [net.parameter_vector() for net in state.networks]


class TestAdam:
    """Tests for the Adam update rule."""

    def test_first_step_moves_by_learning_rate(self):
        """Test that the bias-corrected first step has size lr * sign(g)."""
        config = TrainConfig(learning_rate=0.01)
        params = torch.zeros(3, dtype=DTYPE)
        gradient = torch.tensor([2.0, -0.5, 1e-3], dtype=DTYPE)
        zeros = torch.zeros(3, dtype=DTYPE)
        updated, m, v = adam_update(params, gradient, zeros, zeros, 1, config)
        assert torch.allclose(updated, -0.01 * torch.sign(gradient), rtol=1e-4)
        assert torch.allclose(m, 0.1 * gradient)
        assert torch.allclose(v, 0.001 * gradient**2)

    def test_zero_gradient_entries_are_frozen(self):
        """Test that entries with a zero gradient keep their value despite momentum."""
        config = TrainConfig()
        params = torch.tensor([1.0, 2.0], dtype=DTYPE)
        gradient = torch.tensor([0.0, 1.0], dtype=DTYPE)
        momentum = torch.tensor([5.0, 5.0], dtype=DTYPE)
        updated, m, _ = adam_update(params, gradient, momentum, momentum, 3, config)
        assert updated[0] == 1.0
        assert updated[1] != 2.0
        assert m[0] == pytest.approx(0.9 * 5.0)


class TestTrain:
    """Tests for the training loop."""

    def test_history_and_stop_reason(self, small_spec, tiny_config):
        """Test one row per iteration plus the final evaluation."""
        result = train(small_spec, tiny_config)
        assert result.stop_reason == "max_iters"
        assert result.state.iteration == 5
        assert [row.iteration for row in result.history] == [0, 1, 2, 3, 4, 5]
        assert result.final == result.history[-1]
        assert result.state.best_total <= min(row.total for row in result.history)

    def test_log_interval(self, small_spec, tiny_config):
        """Test that only every log_interval-th row is kept, plus the last."""
        config = tiny_config.model_copy(update={"log_interval": 2})
        result = train(small_spec, config)
        assert [row.iteration for row in result.history] == [0, 2, 4, 5]

    def test_deterministic(self, small_spec, tiny_config):
        """Test that equal seeds give identical parameters and losses."""
        a, b = train(small_spec, tiny_config), train(small_spec, tiny_config)
        for x, y in zip(parameters(a.state), parameters(b.state)):
            assert torch.equal(x, y)
        assert [row.total for row in a.history] == [row.total for row in b.history]

    def test_loss_decreases(self, small_spec, tiny_config):
        """Test that a short run lowers the total loss."""
        config = tiny_config.model_copy(update={"max_iters": 30, "learning_rate": 1e-2})
        result = train(small_spec, config)
        assert result.history[-1].total < result.history[0].total

    def test_threshold_stops_immediately(self, small_spec, tiny_config):
        """Test that a loose threshold stops before any step."""
        config = tiny_config.model_copy(update={"stop_threshold": 1e12})
        result = train(small_spec, config)
        assert result.stop_reason == "threshold"
        assert result.state.iteration == 0
        assert len(result.history) == 1

    def test_loss_log_file(self, tmp_path, small_spec, tiny_config):
        """Test that logged rows are appended to the CSV log."""
        path = tmp_path / "loss.csv"
        result = train(small_spec, tiny_config, loss_log=path)
        rows = read_loss_log(path)
        assert [row.iteration for row in rows] == [row.iteration for row in result.history]
        assert rows[-1].total == pytest.approx(result.history[-1].total, rel=1e-8)

    def test_snapshots(self, small_spec, tiny_config):
        """Test five snapshots on the spatial nodes with g = (eta / 2) phi."""
        result = train(small_spec, tiny_config)
        assert [s.t for s in result.snapshots] == list(SNAPSHOT_TIMES)
        for snapshot in result.snapshots:
            assert len(snapshot) == 36
            assert snapshot.v.shape == (36, 2)
            assert np.all(snapshot.rho > 0)
            assert np.allclose(snapshot.g, 0.5 * small_spec.eta * snapshot.phi)

    def test_divergence_carries_history(self, small_spec, tiny_config, monkeypatch):
        """Test that a non-finite gradient raises with the rows logged so far."""
        original = training.parameter_gradients

        def failing(value, nets, iteration=None):
            if iteration == 2:
                raise TrainingDivergedError("Non-finite parameter gradient", iteration=2)
            return original(value, nets, iteration)

        monkeypatch.setattr(training, "parameter_gradients", failing)
        with pytest.raises(TrainingDivergedError) as info:
            train(small_spec, tiny_config)
        assert info.value.iteration == 2
        assert [row.iteration for row in info.value.history] == [0, 1, 2]


class TestTrainState:
    """Tests for training checkpoints."""

    def test_fresh_state(self, small_spec, tiny_config):
        """Test network heads, seeds and zero moments."""
        state = init_state(small_spec, tiny_config)
        assert state.net_rho.output_head == "softplus"
        assert state.net_phi.output_head == "linear"
        assert state.net_phi.seed == state.net_rho.seed + 1
        assert all(torch.count_nonzero(m) == 0 for m in state.first_moments)
        assert math.isinf(state.best_total)

    def test_save_and_load(self, tmp_path, small_spec, tiny_config):
        """Test that every checkpoint field survives a round trip."""
        result = train(small_spec, tiny_config)
        loaded = load_state(save_state(result.state, tmp_path / "state.json"))
        assert loaded.iteration == result.state.iteration
        assert loaded.best_total == result.state.best_total
        assert loaded.best_iteration == result.state.best_iteration
        for x, y in zip(parameters(loaded), parameters(result.state)):
            assert torch.equal(x, y)
        for x, y in zip(loaded.second_moments, result.state.second_moments):
            assert torch.equal(x, y)

    def test_resume_is_bit_exact(self, tmp_path, small_spec, tiny_config):
        """Test that 3 + 2 resumed iterations equal 5 uninterrupted ones."""
        collocation = build_collocation(small_spec, seed=tiny_config.seed)
        straight = train(small_spec, tiny_config, collocation=collocation)

        first = train(
            small_spec, tiny_config.model_copy(update={"max_iters": 3}), collocation=collocation
        )
        state = load_state(save_state(first.state, tmp_path / "state.json"))
        resumed = train(small_spec, tiny_config, state=state, collocation=collocation)

        assert resumed.state.iteration == 5
        for x, y in zip(parameters(resumed.state), parameters(straight.state)):
            assert torch.equal(x, y)
        assert resumed.state.best_total == straight.state.best_total
