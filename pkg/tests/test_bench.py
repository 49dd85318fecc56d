import csv

import numpy as np
import pytest

from jerktrack.bench import (
    EvalResult,
    SequenceScore,
    aggregate_mse,
    compare_per_sequence,
    eval_model,
    report_table,
    write_per_sequence_csv,
    write_summary_csv,
)
from jerktrack.core import InvalidInputError
from jerktrack.dataset import NormalizedSequence, normalize, synth_corpus
from jerktrack.predictors import (
    ConstantVelocityPredictor,
    DybmPredictor,
    ZeroMotionPredictor,
)


def seq(seq_id, vels, symbol="s"):
    return NormalizedSequence(id=seq_id, symbol=symbol,
                              velocities=np.asarray(vels, dtype=float),
                              start_position=np.zeros(2))


class TestEvalModel:
    def test_constant_velocity_exact_on_ramp(self):
        ramp = seq("r", np.tile([0.1, -0.2], (12, 1)))
        scores = eval_model(ConstantVelocityPredictor(2), [ramp])
        assert scores[0].mse == pytest.approx(0.0, abs=1e-30)
        assert scores[0].n_steps == 11

    def test_zero_motion_mse_is_mean_square_velocity(self):
        vels = np.array([[0.1, 0.0], [0.2, 0.0], [0.3, 0.4]])
        scores = eval_model(ZeroMotionPredictor(2), [seq("z", vels)])
        # predictions start at t=1; mean over components and steps
        expected = np.mean(vels[1:] ** 2)
        assert scores[0].mse == pytest.approx(expected, rel=1e-12)

    def test_state_reset_between_sequences(self):
        a = seq("a", np.tile([0.5, 0.0], (6, 1)))
        b = seq("b", np.tile([0.5, 0.0], (6, 1)))
        one = eval_model(ConstantVelocityPredictor(2), [a])
        two = eval_model(ConstantVelocityPredictor(2), [a, b])
        assert two[0].mse == one[0].mse
        assert two[1].mse == one[0].mse

    def test_online_carries_parameters_across_sequences(self):
        corpus = [seq(f"c{j}", np.tile([0.3, -0.3], (25, 1))) for j in range(6)]
        model = DybmPredictor(2, online=True)
        scores = eval_model(model, corpus, online=True)
        assert scores[-1].mse < scores[0].mse

    def test_online_flag_restored(self):
        model = DybmPredictor(2, online=True)
        eval_model(model, [seq("a", np.tile([0.1, 0.1], (5, 1)))], online=False)
        assert model.online is True

    def test_online_requires_dybm(self):
        with pytest.raises(InvalidInputError):
            eval_model(ZeroMotionPredictor(2),
                       [seq("a", [[0.1, 0.1], [0.1, 0.1]])], online=True)

    def test_empty_corpus_rejected(self):
        with pytest.raises(InvalidInputError):
            eval_model(ZeroMotionPredictor(2), [])


class TestAggregates:
    def test_step_weighted_vs_sequence_average(self):
        scores = [SequenceScore("a", "s", 1.0, 10),
                  SequenceScore("b", "s", 3.0, 30)]
        step_w, seq_avg = aggregate_mse(scores)
        assert step_w == pytest.approx((1.0 * 10 + 3.0 * 30) / 40)
        assert seq_avg == pytest.approx(2.0)

    def test_compare_strict_inequality(self):
        a = [SequenceScore("a", "s", 1.0, 5), SequenceScore("b", "s", 2.0, 5)]
        b = [SequenceScore("a", "s", 1.0, 5), SequenceScore("b", "s", 3.0, 5)]
        assert compare_per_sequence(a, b) == 50.0

    def test_compare_requires_alignment(self):
        a = [SequenceScore("a", "s", 1.0, 5)]
        b = [SequenceScore("x", "s", 1.0, 5)]
        with pytest.raises(InvalidInputError):
            compare_per_sequence(a, b)


class TestReports:
    def make_result(self):
        corpus = [normalize(s) for s in synth_corpus(8, seed=0, noise=0.005)]
        result = EvalResult()
        result.per_sequence["baseline"] = eval_model(
            ConstantVelocityPredictor(2), corpus)
        result.per_sequence["dybm_online"] = eval_model(
            DybmPredictor(2, online=True), corpus, online=True)
        return result

    def test_table_lists_models_in_order(self):
        table = report_table(self.make_result())
        lines = table.splitlines()
        assert lines[1].startswith("baseline")
        assert lines[2].startswith("dybm_online")
        assert "---" in lines[1]  # no self-comparison

    def test_per_sequence_csv(self, tmp_path):
        result = self.make_result()
        path = tmp_path / "per_seq.csv"
        write_per_sequence_csv(path, result)
        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["model", "sequence_id", "symbol", "mse"]
        assert len(rows) == 1 + 2 * 8

    def test_summary_csv(self, tmp_path):
        result = self.make_result()
        path = tmp_path / "summary.csv"
        write_summary_csv(path, result)
        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0][0] == "model"
        by_model = {r[0]: r for r in rows[1:]}
        assert float(by_model["dybm_online"][1]) > 0.0
        assert by_model["baseline"][3] == ""  # no PS against itself
