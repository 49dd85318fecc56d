import json
import logging

import numpy as np
import pytest

from jerktrack.core import InvalidInputError
from jerktrack.dataset import (
    EXPECTED_COUNTS,
    STOP_ZEROS,
    ParseError,
    StrokeSequence,
    SYNTH_KINDS,
    ingest,
    normalize,
    read_normalized,
    reconstruct_positions,
    synth_corpus,
    synth_generate,
    write_normalized,
    write_strokes,
)


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


class TestIngest:
    def test_two_point_sequence(self, tmp_path):
        p = tmp_path / "strokes.jsonl"
        write_jsonl(p, [{"id": "a", "symbol": "x",
                         "points": [[0.0, 0.0], [1.0, 1.0]]}])
        seqs = ingest(p)
        assert len(seqs) == 1
        assert seqs[0].symbol == "x"
        assert np.array_equal(seqs[0].points, [[0, 0], [1, 1]])

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "strokes.jsonl"
        p.write_text('\n{"id": "a", "points": [[0,0],[1,0]]}\n\n')
        assert len(ingest(p)) == 1

    def test_malformed_line_reports_number(self, tmp_path):
        p = tmp_path / "strokes.jsonl"
        p.write_text('{"id": "a", "points": [[0,0],[1,0]]}\n{"id": "b"}\n')
        with pytest.raises(ParseError) as exc:
            ingest(p)
        assert exc.value.line == 2
        assert "line 2" in str(exc.value)

    def test_bad_json_reports_number(self, tmp_path):
        p = tmp_path / "strokes.jsonl"
        p.write_text("not json\n")
        with pytest.raises(ParseError) as exc:
            ingest(p)
        assert exc.value.line == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ingest(tmp_path / "nope.jsonl")

    def test_count_mismatch_warns_only(self, tmp_path, caplog):
        name = next(iter(EXPECTED_COUNTS))
        p = tmp_path / f"{name}.jsonl"
        write_jsonl(p, [{"id": "a", "points": [[0, 0], [1, 0]]}])
        with caplog.at_level(logging.WARNING, logger="jerktrack.dataset"):
            seqs = ingest(p)
        assert len(seqs) == 1
        assert any("expected" in r.message for r in caplog.records)


class TestStrokeValidation:
    def test_single_point_rejected(self):
        with pytest.raises(InvalidInputError):
            StrokeSequence(id="a", symbol="", points=[[0.0, 0.0]])

    def test_pen_events_must_increase(self):
        with pytest.raises(InvalidInputError):
            StrokeSequence(id="a", symbol="", points=[[0, 0], [1, 1], [2, 2]],
                           pen_events=[(2, "up"), (1, "down")])


class TestNormalize:
    def test_finite_differences_plus_stop_zeros(self):
        s = StrokeSequence(id="a", symbol="", points=[[0, 0], [1, 0], [1, 2]])
        ns = normalize(s)
        assert ns.velocities.shape == (2 + STOP_ZEROS, 2)
        assert np.array_equal(ns.velocities[:2], [[1, 0], [0, 2]])
        assert np.all(ns.velocities[2:] == 0.0)
        assert np.array_equal(ns.start_position, [0, 0])

    def test_pen_jump_not_interpolated(self):
        # A pen-up jump stays as one large velocity step.
        s = StrokeSequence(id="a", symbol="",
                           points=[[0, 0], [0.1, 0], [0.9, 0.9], [1, 0.9]],
                           pen_events=[(1, "up"), (2, "down")])
        ns = normalize(s)
        assert np.allclose(ns.velocities[1], [0.8, 0.9])

    def test_reconstruct_roundtrip(self):
        s = synth_generate("arc", seed=3)
        ns = normalize(s)
        pos = reconstruct_positions(ns)
        assert np.allclose(pos[: len(s.points)], s.points, atol=1e-12)
        # trailing stop samples hold the final position
        assert np.allclose(pos[len(s.points):], s.points[-1], atol=1e-12)


class TestRoundtrips:
    def test_strokes_roundtrip(self, tmp_path):
        seqs = synth_corpus(4, seed=0, noise=0.01)
        p = tmp_path / "out.jsonl"
        write_strokes(p, seqs)
        back = ingest(p)
        assert [s.id for s in back] == [s.id for s in seqs]
        for a, b in zip(seqs, back):
            assert np.array_equal(a.points, b.points)

    def test_normalized_roundtrip(self, tmp_path):
        seqs = [normalize(s) for s in synth_corpus(3, seed=1)]
        p = tmp_path / "norm.jsonl"
        write_normalized(p, seqs)
        back = read_normalized(p)
        for a, b in zip(seqs, back):
            assert a.id == b.id and a.symbol == b.symbol
            assert np.array_equal(a.velocities, b.velocities)
            assert np.array_equal(a.start_position, b.start_position)


class TestSynth:
    @pytest.mark.parametrize("kind", SYNTH_KINDS)
    def test_inside_unit_box(self, kind):
        s = synth_generate(kind, noise=0.01, seed=7)
        assert np.all(s.points >= 0.0) and np.all(s.points <= 1.0)
        assert len(s.points) >= 2

    @pytest.mark.parametrize("kind", SYNTH_KINDS)
    def test_deterministic_per_seed(self, kind):
        a = synth_generate(kind, noise=0.02, seed=5)
        b = synth_generate(kind, noise=0.02, seed=5)
        assert np.array_equal(a.points, b.points)

    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            synth_generate("squiggle")

    def test_corpus_cycles_kinds(self):
        seqs = synth_corpus(8, seed=0)
        kinds = [s.id.split("-")[0] for s in seqs]
        assert kinds[:4] == list(SYNTH_KINDS)
        assert kinds[4:] == list(SYNTH_KINDS)

    def test_letter_symbol(self):
        s = synth_generate("letter", seed=0, symbol="K")
        assert s.symbol == "K"
