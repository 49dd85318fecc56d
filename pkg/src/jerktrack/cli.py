"""Command-line entry point: ingest, train, eval, simulate, serve.

Options may come from a JSON config file (--config); explicit flags
override file values. Exit codes: 0 success, 1 usage/config error, 2 data
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

# Worker-thread cap must land in the environment before numpy's BLAS spins
# up its pools.
if "JERKTRACK_THREADS" in os.environ:
    _n = os.environ["JERKTRACK_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _n)

import numpy as np

from . import bench, dataset, sim
from .core import InvalidInputError
from .dataset import ParseError
from .mpc import SolverError
from .predictors import (
    ConstantVelocityPredictor,
    DybmPredictor,
    EsnReservoir,
    LstmPredictor,
    load_model,
    save_model,
)
from .training import (
    TrainConfig,
    TrainingDivergedError,
    train_dybm_offline,
    train_lstm,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_corpus(path):
    """Normalized JSONL corpus, or raw strokes normalized on the fly."""
    try:
        return dataset.read_normalized(path)
    except ParseError:
        return [dataset.normalize(s) for s in dataset.ingest(path)]


def cmd_ingest(args) -> int:
    strokes = dataset.ingest(args.input)
    dataset.write_normalized(args.output, [dataset.normalize(s) for s in strokes])
    print(len(strokes))
    return EXIT_OK


def _synth_normalized(n, seed, noise):
    return [dataset.normalize(s) for s in dataset.synth_corpus(n, seed, noise)]


def cmd_train(args) -> int:
    if args.corpus:
        corpus = _load_corpus(args.corpus)
    else:
        corpus = _synth_normalized(args.synth, args.seed, args.noise)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, seed=args.seed)
    if args.model == "lstm":
        predictor, report = train_lstm(corpus, cfg)
        if args.report:
            report.write_csv(args.report)
    elif args.model in ("dybm", "dybm_esn"):
        esn = EsnReservoir(2, seed=args.seed) if args.model == "dybm_esn" else None
        base = DybmPredictor(2, online=False, esn=esn)
        predictor = train_dybm_offline(corpus, cfg, predictor=base)
    else:
        raise UsageError(f"unknown model kind {args.model!r}")
    save_model(args.out, predictor)
    print(f"wrote {args.out} checksum={predictor.param_checksum()[:16]}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.corpus:
        corpus = _load_corpus(args.corpus)
    else:
        corpus = _synth_normalized(args.synth, args.seed, args.noise)
    result = bench.EvalResult()
    result.per_sequence["baseline"] = bench.eval_model(
        ConstantVelocityPredictor(2), corpus)
    if args.lstm:
        result.per_sequence["lstm"] = bench.eval_model(load_model(args.lstm), corpus)
    if args.dybm_offline:
        result.per_sequence["dybm_offline"] = bench.eval_model(
            load_model(args.dybm_offline), corpus, online=False)
    if args.dybm_online:
        model = (load_model(args.dybm_online) if args.dybm_online != "fresh"
                 else DybmPredictor(2, online=True))
        result.per_sequence["dybm_online"] = bench.eval_model(
            model, corpus, online=True)
    if args.dybm_esn:
        model = (load_model(args.dybm_esn) if args.dybm_esn != "fresh"
                 else DybmPredictor(2, online=True, esn=EsnReservoir(2, seed=args.seed)))
        result.per_sequence["dybm_esn"] = bench.eval_model(
            model, corpus, online=True)
    print(bench.report_table(result))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        bench.write_per_sequence_csv(
            os.path.join(args.out_dir, "per_sequence.csv"), result)
        bench.write_summary_csv(
            os.path.join(args.out_dir, "summary.csv"), result)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.corpus:
        corpus = _load_corpus(args.corpus)
        seq = corpus[args.index]
    else:
        seq = dataset.normalize(
            dataset.synth_generate("letter", seed=args.seed, symbol=args.letter))
    os.makedirs(args.out_dir, exist_ok=True)
    mse_by_mode = {}
    for mode in args.modes.split(","):
        mode = mode.strip()
        predictor = load_model(args.model) if args.model and \
            mode in ("with_prediction", "switching") else None
        schedule = sim.SwitchSchedule(args.switch_start, args.switch_end) \
            if mode == "switching" else None
        cfg = sim.SimConfig(mode=mode, sequence=seq, predictor=predictor,
                            schedule=schedule, horizon=args.horizon,
                            dt=args.dt, scale=args.scale)
        trace = sim.run_closed_loop(cfg)
        sim.write_trace_csv(os.path.join(args.out_dir, f"trace_{mode}.csv"), trace)
        mse_by_mode[mode] = sim.tracking_mse(trace)
        print(f"{mode}: tracking MSE {mse_by_mode[mode]:.6g} m^2")
    sim.write_summary_json(os.path.join(args.out_dir, "summary.json"), mse_by_mode)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionConfig, create_app

    factory = None
    if args.model:
        factory = lambda: load_model(args.model)
    config = SessionConfig(horizon=args.horizon, dt=args.dt,
                           retain_online=args.retain_online)
    host, _, port = args.addr.partition(":")
    app = create_app(factory, config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8700),
                log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="jerktrack")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.sub_commands = sub

    p = sub.add_parser("ingest", help="normalize a stroke corpus")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a predictor")
    p.add_argument("--config")
    p.add_argument("--model", default="lstm",
                   choices=["lstm", "dybm", "dybm_esn"])
    p.add_argument("--corpus")
    p.add_argument("--synth", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="prediction-quality benchmark")
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--synth", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lstm")
    p.add_argument("--dybm-offline")
    p.add_argument("--dybm-online", help="model file or 'fresh'")
    p.add_argument("--dybm-esn", help="model file or 'fresh'")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="closed-loop tracking runs")
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--letter", default="K")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes",
                   default="feedback_only,perfect_prediction")
    p.add_argument("--model", help="predictor file for with_prediction")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--switch-start", type=int, default=30)
    p.add_argument("--switch-end", type=int, default=40)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="live tracking session server")
    p.add_argument("--config")
    p.add_argument("--addr", default="127.0.0.1:8700")
    p.add_argument("--model")
    p.add_argument("--retain-online", action="store_true")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--horizon", type=int, default=10)
    p.set_defaults(func=cmd_serve)

    return parser


def _apply_config_file(parser, argv):
    """Seed parser defaults from --config JSON so flags still override."""
    probe = _Parser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config) as f:
                values = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad config file: {exc}") from exc
        if not isinstance(values, dict):
            raise UsageError("config file must hold a JSON object")
        defaults = {k.replace("-", "_"): v for k, v in values.items()}
        # Subparsers parse into their own namespace, so defaults set on the
        # root parser alone would be shadowed by the subcommand's.
        parser.set_defaults(**defaults)
        for sub in parser.sub_commands.choices.values():
            sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, IndexError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, TrainingDivergedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
