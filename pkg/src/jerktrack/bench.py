"""Prediction-quality metrics: per-sequence one-step MSE and the
per-sequence win percentages against the baseline and the LSTM."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError
from .dataset import NormalizedSequence
from .predictors import DybmPredictor, LearningDivergedError, Predictor

__all__ = [
    "SequenceScore",
    "EvalResult",
    "eval_model",
    "aggregate_mse",
    "compare_per_sequence",
    "report_table",
    "write_per_sequence_csv",
]

# Paper-matching row order for the report.
TABLE_ORDER = ["baseline", "lstm", "dybm_offline", "dybm_online", "dybm_esn"]


@dataclass(frozen=True)
class SequenceScore:
    sequence_id: str
    symbol: str
    mse: float
    n_steps: int


@dataclass
class EvalResult:
    per_sequence: dict[str, list[SequenceScore]] = field(default_factory=dict)

    def models(self) -> list[str]:
        known = [m for m in TABLE_ORDER if m in self.per_sequence]
        extra = [m for m in self.per_sequence if m not in TABLE_ORDER]
        return known + extra


def eval_model(model: Predictor, corpus: list[NormalizedSequence],
               online: bool = False) -> list[SequenceScore]:
    """One-step prediction MSE per sequence, in velocity space.

    The recurrent state is reset before every sequence; learned parameters
    persist. With online=True each prediction is followed by a learning
    step, carried across sequences in corpus order. A diverged model scores
    an infinite MSE for that sequence and the run continues.
    """
    if not corpus:
        raise InvalidInputError("empty evaluation corpus")
    if online and not isinstance(model, DybmPredictor):
        raise InvalidInputError("online evaluation requires a DyBM model")
    was_online = None
    if isinstance(model, DybmPredictor):
        was_online = model.online
        model.online = online
    try:
        scores = []
        for seq in corpus:
            vels = np.asarray(seq.velocities, dtype=float)
            model.reset(seq.start_position)
            sq_sum, n = 0.0, 0
            try:
                model.observe(vels[0])
                for t in range(1, len(vels)):
                    v_hat = model.predict_one()
                    sq_sum += float(np.mean((v_hat - vels[t]) ** 2))
                    n += 1
                    model.observe(vels[t])
            except LearningDivergedError:
                sq_sum, n = float("inf"), max(n, 1)
            scores.append(SequenceScore(seq.id, seq.symbol,
                                        sq_sum / n if n else 0.0, n))
        return scores
    finally:
        if was_online is not None:
            model.online = was_online


def aggregate_mse(scores: list[SequenceScore]) -> tuple[float, float]:
    """(step-weighted, sequence-averaged) aggregate MSE.

    Step-weighted pools every timestep of the validation set; the
    sequence-averaged variant is reported alongside for comparison.
    """
    steps = np.array([s.n_steps for s in scores], dtype=float)
    mses = np.array([s.mse for s in scores])
    return (float(np.sum(mses * steps) / np.sum(steps)), float(np.mean(mses)))


def compare_per_sequence(a: list[SequenceScore], b: list[SequenceScore]) -> float:
    """Percentage of sequences where a's MSE is strictly below b's."""
    if len(a) != len(b) or any(x.sequence_id != y.sequence_id
                               for x, y in zip(a, b)):
        raise InvalidInputError("per-sequence lists are not aligned")
    wins = sum(1 for x, y in zip(a, b) if x.mse < y.mse)
    return 100.0 * wins / len(a)


def report_table(result: EvalResult) -> str:
    """Formatted summary: MSE (step-weighted and per-sequence), PS-B, PS-LSTM."""
    if not result.per_sequence:
        raise InvalidInputError("empty evaluation result")
    baseline = result.per_sequence.get("baseline")
    lstm = result.per_sequence.get("lstm")
    lines = [f"{'model':<14} {'MSE':>12} {'MSE(seq)':>12} {'PS-B':>7} {'PS-LSTM':>8}"]
    for name in result.models():
        scores = result.per_sequence[name]
        mse_step, mse_seq = aggregate_mse(scores)
        ps_b = (f"{compare_per_sequence(scores, baseline):.0f}%"
                if baseline is not None and name != "baseline" else "---")
        ps_l = (f"{compare_per_sequence(scores, lstm):.0f}%"
                if lstm is not None and name != "lstm" else "---")
        lines.append(f"{name:<14} {mse_step:>12.6g} {mse_seq:>12.6g} "
                     f"{ps_b:>7} {ps_l:>8}")
    return "\n".join(lines)


def write_per_sequence_csv(path, result: EvalResult) -> None:
    """model,sequence_id,symbol,mse rows; enables per-symbol grouping."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "sequence_id", "symbol", "mse"])
        for name in result.models():
            for s in result.per_sequence[name]:
                w.writerow([name, s.sequence_id, s.symbol, f"{s.mse:.10g}"])


def write_summary_csv(path, result: EvalResult) -> None:
    baseline = result.per_sequence.get("baseline")
    lstm = result.per_sequence.get("lstm")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "mse_step_weighted", "mse_seq_averaged",
                    "ps_baseline", "ps_lstm"])
        for name in result.models():
            scores = result.per_sequence[name]
            mse_step, mse_seq = aggregate_mse(scores)
            ps_b = (compare_per_sequence(scores, baseline)
                    if baseline is not None and name != "baseline" else "")
            ps_l = (compare_per_sequence(scores, lstm)
                    if lstm is not None and name != "lstm" else "")
            w.writerow([name, f"{mse_step:.10g}", f"{mse_seq:.10g}", ps_b, ps_l])
