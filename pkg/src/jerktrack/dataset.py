"""Stroke corpus handling: JSONL ingestion, velocity normalization and a
synthetic generator for desk-scale runs without the external corpus.

Normalization converts positions to per-step velocities by finite
differencing, leaves pen-event jumps in place as one large velocity, and
appends five zero velocities so models can learn the concept of stopping.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError

__all__ = [
    "ParseError",
    "StrokeSequence",
    "NormalizedSequence",
    "STOP_ZEROS",
    "EXPECTED_COUNTS",
    "ingest",
    "normalize",
    "reconstruct_positions",
    "write_strokes",
    "write_normalized",
    "read_normalized",
    "synth_generate",
    "synth_corpus",
]

log = logging.getLogger(__name__)

STOP_ZEROS = 5

# Sequence counts of the reference corpus splits, checked (warning only)
# when a converted copy is ingested under these names.
EXPECTED_COUNTS = {"training1": 6590, "testing": 8136}


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class StrokeSequence:
    id: str
    symbol: str
    points: np.ndarray  # (n, 2)
    pen_events: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise InvalidInputError(
                f"sequence {self.id!r} needs >= 2 points of 2 coordinates")
        object.__setattr__(self, "points", pts)
        events = tuple((int(i), str(kind)) for i, kind in self.pen_events)
        for (a, _), (b, _) in zip(events, events[1:]):
            if b <= a:
                raise InvalidInputError("pen event indices must be increasing")
        object.__setattr__(self, "pen_events", events)


@dataclass(frozen=True)
class NormalizedSequence:
    id: str
    symbol: str
    velocities: np.ndarray  # (n, 2), units per step
    start_position: np.ndarray  # (2,)

    def __post_init__(self):
        object.__setattr__(self, "velocities",
                           np.asarray(self.velocities, dtype=float))
        object.__setattr__(self, "start_position",
                           np.asarray(self.start_position, dtype=float))


def ingest(path) -> list[StrokeSequence]:
    """Parse a JSONL stroke corpus, one sequence object per line."""
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                seq = StrokeSequence(
                    id=str(rec["id"]),
                    symbol=str(rec.get("symbol", "")),
                    points=rec["points"],
                    pen_events=tuple((int(i), str(k))
                                     for i, k in rec.get("pen_events", [])),
                )
            except (KeyError, TypeError, ValueError, InvalidInputError) as exc:
                raise ParseError(str(exc), lineno) from exc
            out.append(seq)
    for name, expected in EXPECTED_COUNTS.items():
        if name in str(path) and len(out) != expected:
            log.warning("corpus %s has %d sequences, expected %d",
                        path, len(out), expected)
    return out


def normalize(s: StrokeSequence) -> NormalizedSequence:
    """Finite-difference the positions and append the stopping zeros.

    Pen-event gaps are deliberately not interpolated; the jump stays in the
    stream as one large velocity.
    """
    v = np.diff(s.points, axis=0)
    v = np.vstack([v, np.zeros((STOP_ZEROS, 2))])
    return NormalizedSequence(id=s.id, symbol=s.symbol, velocities=v,
                              start_position=s.points[0].copy())


def reconstruct_positions(ns: NormalizedSequence) -> np.ndarray:
    """Positions implied by the velocities (includes the trailing holds)."""
    return ns.start_position + np.vstack(
        [np.zeros(2), np.cumsum(ns.velocities, axis=0)])


def write_strokes(path, sequences: list[StrokeSequence]) -> None:
    with open(path, "w") as f:
        for s in sequences:
            f.write(json.dumps({
                "id": s.id, "symbol": s.symbol,
                "points": s.points.tolist(),
                "pen_events": [[i, k] for i, k in s.pen_events],
            }) + "\n")


def write_normalized(path, sequences: list[NormalizedSequence]) -> None:
    with open(path, "w") as f:
        for s in sequences:
            f.write(json.dumps({
                "id": s.id, "symbol": s.symbol,
                "velocities": s.velocities.tolist(),
                "start_position": s.start_position.tolist(),
            }) + "\n")


def read_normalized(path) -> list[NormalizedSequence]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out.append(NormalizedSequence(
                    id=str(rec["id"]), symbol=str(rec.get("symbol", "")),
                    velocities=rec["velocities"],
                    start_position=rec["start_position"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(str(exc), lineno) from exc
    return out


# Polyline letters in a unit box; "K" kept deliberately sharp-cornered so
# the constant-velocity baseline struggles on it.
_LETTERS = {
    "K": [(0.1, 0.1), (0.1, 0.9), (0.1, 0.5), (0.8, 0.9), (0.1, 0.5), (0.8, 0.1)],
    "N": [(0.1, 0.1), (0.1, 0.9), (0.8, 0.1), (0.8, 0.9)],
    "Z": [(0.1, 0.9), (0.8, 0.9), (0.1, 0.1), (0.8, 0.1)],
    "V": [(0.1, 0.9), (0.45, 0.1), (0.8, 0.9)],
}

SYNTH_KINDS = ("line", "arc", "lissajous", "letter")


def _polyline_points(vertices, points_per_edge: int) -> np.ndarray:
    pts = []
    for a, b in zip(vertices, vertices[1:]):
        a, b = np.asarray(a, float), np.asarray(b, float)
        for t in np.linspace(0.0, 1.0, points_per_edge, endpoint=False):
            pts.append(a + t * (b - a))
    pts.append(np.asarray(vertices[-1], float))
    return np.asarray(pts)


def synth_generate(kind: str, noise: float = 0.0, seed: int = 0,
                   n_points: int = 40, symbol: str | None = None) -> StrokeSequence:
    """Deterministic synthetic stroke inside the unit box."""
    rng = np.random.default_rng(seed)
    if kind == "line":
        start = rng.uniform(0.1, 0.4, 2)
        end = rng.uniform(0.6, 0.9, 2)
        t = np.linspace(0.0, 1.0, n_points)[:, None]
        pts = start + t * (end - start)
        symbol = symbol or "-"
    elif kind == "arc":
        center = rng.uniform(0.35, 0.65, 2)
        radius = rng.uniform(0.15, 0.3)
        a0 = rng.uniform(0.0, 2 * math.pi)
        sweep = rng.uniform(0.8, 1.8) * math.pi * rng.choice([-1.0, 1.0])
        ang = a0 + np.linspace(0.0, sweep, n_points)
        pts = center + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        symbol = symbol or "c"
    elif kind == "lissajous":
        fx, fy = rng.integers(1, 4), rng.integers(1, 4)
        phase = rng.uniform(0.0, 2 * math.pi)
        t = np.linspace(0.0, 2 * math.pi, n_points)
        pts = 0.5 + 0.35 * np.stack(
            [np.sin(fx * t + phase), np.sin(fy * t)], axis=1)
        symbol = symbol or "0"
    elif kind == "letter":
        name = symbol or rng.choice(list(_LETTERS))
        pts = _polyline_points(_LETTERS[name], max(2, n_points // 5))
        symbol = name
    else:
        raise InvalidInputError(f"unknown stroke kind {kind!r}")
    if noise > 0:
        pts = pts + rng.normal(0.0, noise, pts.shape)
    pts = np.clip(pts, 0.0, 1.0)
    return StrokeSequence(id=f"{kind}-{seed}", symbol=symbol, points=pts)


def synth_corpus(n: int, seed: int = 0, noise: float = 0.0) -> list[StrokeSequence]:
    """Mixed corpus cycling through all synthetic kinds."""
    return [synth_generate(SYNTH_KINDS[i % len(SYNTH_KINDS)], noise=noise,
                           seed=seed + i) for i in range(n)]
