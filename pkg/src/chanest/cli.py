"""Command-line interface: simulate, train, evaluate, sweep."""

import argparse
import sys
from pathlib import Path

from .channel import ScenarioConfig
from .cnn import TrainConfig, load_model, save_model, train
from .harness import (
    DEFAULT_SNR_GRID,
    ESTIMATOR_NAMES,
    SweepSpec,
    emit_csv,
    run_sweep,
)
from .pilots import dft_pilots, load_pilots


def _pilots_factory(spec_text: str):
    """--pilots dft | file:<path>; returns a factory scenario -> PilotSet."""
    if spec_text == "dft":
        return lambda sc: dft_pilots(sc.U, sc.N, sc.S)
    if spec_text.startswith("file:"):
        path = spec_text[len("file:"):]
        return lambda sc: load_pilots(path, sc.S)
    raise ValueError(f"--pilots must be 'dft' or 'file:<path>', got {spec_text!r}")


def _parse_estimators(text: str) -> list:
    names = [t.strip() for t in text.split(",") if t.strip()]
    unknown = [n for n in names if n not in ESTIMATOR_NAMES]
    if unknown:
        raise ValueError(f"unknown estimators {unknown}; choose from {ESTIMATOR_NAMES}")
    return names


def _parse_values(text: str, kind: str) -> list:
    cast = float if kind == "snr" else int
    return [cast(t) for t in text.split(",") if t.strip()]


def _load_cnn_models(args, values):
    """Resolve --model / --model-dir into run_sweep's cnn_models argument.
    Missing files are all reported at once."""
    if args.model:
        params, _, _ = load_model(args.model)
        return params
    if args.model_dir:
        paths = {v: Path(args.model_dir) / f"model_{args.kind}_{v:g}.cnn"
                 for v in values}
        missing = [str(p) for p in paths.values() if not p.exists()]
        if missing:
            raise FileNotFoundError("missing cnn model files:\n  "
                                    + "\n  ".join(missing))
        return {v: load_model(p)[0] for v, p in paths.items()}
    raise ValueError("the cnn estimator needs --model or --model-dir")


def _add_common_eval_args(p):
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--draws", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pilots", default="dft", help="dft | file:<path>")
    p.add_argument("--ge-filters", choices=("exact", "circulant"), default="exact")
    p.add_argument("--ge-points", type=int, default=None,
                   help="grid size for the gridded estimator (default 16*S)")
    p.add_argument("--out", default=None, help="write results CSV here")


def _cmd_simulate(args) -> int:
    scenario = ScenarioConfig.from_json(args.scenario)
    estimators = _parse_estimators(args.estimators)
    spec = SweepSpec("snr", [scenario.snr_db], scenario, estimators,
                     num_draws=args.draws, seed=args.seed)
    cnn_models = _load_cnn_models(args, spec.values) if "cnn" in estimators else None
    rows = run_sweep(spec, cnn_models=cnn_models,
                     ge_filter_type=args.ge_filters, ge_points=args.ge_points,
                     pilots_factory=_pilots_factory(args.pilots))
    _report(rows)
    if args.out:
        emit_csv(rows, args.out)
    return 0


def _cmd_train(args) -> int:
    scenario = ScenarioConfig.from_json(args.scenario)
    cfg = TrainConfig(epochs=args.epochs, batches_per_epoch=args.batches,
                      batch_size=args.batch_size, learning_rate=args.lr,
                      l2_lambda=args.l2, init_std=args.init_std, seed=args.seed)
    params, history = train(cfg, scenario, activation=args.activation,
                            init=args.init)
    save_model(params, scenario.S, scenario.U, args.out)
    print(f"trained {args.activation} model: first-epoch nmse {history[0]:.4f}, "
          f"last-epoch nmse {history[-1]:.4f} -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    scenario = ScenarioConfig.from_json(args.scenario)
    params, s, u = load_model(args.model)
    if (s, u) != (scenario.S, scenario.U):
        raise ValueError(f"model is for S={s}, U={u}; scenario has "
                         f"S={scenario.S}, U={scenario.U}")
    estimators = _parse_estimators(args.estimators) if args.estimators else []
    if "cnn" not in estimators:
        estimators = ["cnn"] + estimators
    spec = SweepSpec("snr", [scenario.snr_db], scenario, estimators,
                     num_draws=args.draws, seed=args.seed)
    rows = run_sweep(spec, cnn_models=params, ge_filter_type=args.ge_filters,
                     ge_points=args.ge_points,
                     pilots_factory=_pilots_factory(args.pilots))
    _report(rows)
    if args.out:
        emit_csv(rows, args.out)
    return 0


def _cmd_sweep(args) -> int:
    if not args.out:
        raise ValueError("sweep requires --out <csv path>")
    scenario = ScenarioConfig.from_json(args.scenario)
    kind = {"antennas": "bs_antennas"}.get(args.kind, args.kind)
    estimators = _parse_estimators(args.estimators)
    if args.values:
        values = _parse_values(args.values, kind)
    elif kind == "snr":
        values = list(DEFAULT_SNR_GRID)
    else:
        raise ValueError(f"--values is required for {args.kind} sweeps")
    spec = SweepSpec(kind, values, scenario, estimators,
                     num_draws=args.draws, seed=args.seed)
    cnn_models = _load_cnn_models(args, values) if "cnn" in estimators else None
    rows = run_sweep(spec, cnn_models=cnn_models,
                     ge_filter_type=args.ge_filters, ge_points=args.ge_points,
                     pilots_factory=_pilots_factory(args.pilots))
    emit_csv(rows, args.out)
    _report(rows)
    print(f"wrote {args.out}")
    return 0


def _report(rows) -> None:
    for r in rows:
        per_draw = r.wall_time_ms / r.draws if r.draws else float("nan")
        print(f"{r.estimator:>6s} @ {r.sweep_kind}={r.sweep_value:g}: "
              f"nmse={r.nmse:.6g}  ({r.draws} draws, {per_draw:.3f} ms/draw)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanest",
        description="MIMO channel-estimation benchmarks: simulate, train, "
                    "evaluate and sweep.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evaluate estimators at one scenario point")
    _add_common_eval_args(p)
    p.add_argument("--estimators", required=True,
                   help=f"comma list from {','.join(ESTIMATOR_NAMES)}")
    p.add_argument("--model", default=None, help="cnn model file")
    p.add_argument("--model-dir", default=None)
    p.set_defaults(func=_cmd_simulate, kind="snr")

    p = sub.add_parser("train", help="train the cnn estimator")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--activation", choices=("relu", "softmax"), default="relu")
    p.add_argument("--epochs", type=int, default=250)
    p.add_argument("--batches", type=int, default=40)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=1e-5)
    p.add_argument("--init-std", type=float, default=0.05)
    p.add_argument("--init", choices=("random", "fe"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained cnn model")
    _add_common_eval_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--estimators", default="",
                   help="additional baselines to evaluate alongside the model")
    p.set_defaults(func=_cmd_evaluate, kind="snr")

    p = sub.add_parser("sweep", help="run a sweep and write a CSV")
    _add_common_eval_args(p)
    p.add_argument("--kind", choices=("snr", "pilots", "antennas", "bs_antennas"),
                   required=True)
    p.add_argument("--estimators", required=True)
    p.add_argument("--values", default=None, help="comma list of sweep values")
    p.add_argument("--model", default=None)
    p.add_argument("--model-dir", default=None)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
