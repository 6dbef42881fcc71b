"""Experiment orchestration: sweeps over SNR, pilot count or antenna count,
Monte-Carlo evaluation with common random numbers across estimators, and CSV
emission.

Seeds split hierarchically (run seed -> sweep point -> draw), so results are
identical no matter how draws are chunked and every estimator at a sweep
point consumes the exact same observation stream.
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from .channel import ScenarioConfig, draw_realizations, nominal_noise_variance
from .cnn import CnnParams, cnn_estimate
from .estimators import (
    build_grid,
    fe_estimate,
    fe_reference_params,
    ge_estimate,
    genie_mmse,
    ls_estimate,
    ml_estimate,
    omp_genie,
)
from .pilots import PilotSet, SpectralTransform, dft_pilots

ESTIMATOR_NAMES = ("genie", "ge", "fe", "ml", "ls", "omp", "cnn")
SWEEP_KINDS = ("snr", "pilots", "bs_antennas")
DEFAULT_EVAL_DRAWS = 20_000
DEFAULT_SNR_GRID = list(range(-15, 21, 5))
CHUNK = 512


def nmse(h_hats, hs, S: int, U: int) -> float:
    """Mean squared error over draws, normalized by S*U (which, under the
    package's power normalization, is also the mean channel energy)."""
    if len(h_hats) != len(hs):
        raise ValueError("estimate and reference lists differ in length")
    if not len(hs):
        raise ValueError("need at least one draw")
    total = 0.0
    for h_hat, h in zip(h_hats, hs):
        diff = np.asarray(h) - np.asarray(h_hat)
        total += float(np.real(np.vdot(diff, diff)))
    return total / (len(hs) * S * U)


@dataclass
class SweepSpec:
    kind: str
    values: list
    fixed: ScenarioConfig
    estimators: list
    num_draws: int = DEFAULT_EVAL_DRAWS
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"kind must be one of {SWEEP_KINDS}, got {self.kind!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if sorted(self.values) != list(self.values):
            raise ValueError("sweep values must be sorted ascending")
        if self.num_draws < 1:
            raise ValueError("num_draws must be >= 1")
        unknown = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if unknown:
            raise ValueError(f"unknown estimators {unknown}; "
                             f"choose from {ESTIMATOR_NAMES}")


@dataclass
class ResultRow:
    estimator: str
    sweep_kind: str
    sweep_value: float
    nmse: float
    draws: int
    wall_time_ms: float


def scenario_for_value(base: ScenarioConfig, kind: str, value) -> ScenarioConfig:
    if kind == "snr":
        return replace(base, snr_db=float(value))
    if kind == "pilots":
        return replace(base, N=int(value))
    if kind == "bs_antennas":
        return replace(base, S=int(value))
    raise ValueError(f"unknown sweep kind {kind!r}")


def make_estimators(names, scenario: ScenarioConfig, pilots: PilotSet,
                    qt: SpectralTransform, cnn_params: CnnParams | None = None,
                    ge_filter_type: str = "exact", ge_points: int | None = None,
                    omp_oversampling: int = 4) -> dict:
    """Per-scenario estimator closures taking one Draw. Expensive setup
    (filter grids, reference kernels) happens here, not per draw."""
    sigma2 = nominal_noise_variance(pilots, scenario.snr_db)
    spread_tx = np.deg2rad(scenario.spread_tx_deg)
    spread_rx = np.deg2rad(scenario.spread_rx_deg)
    fns = {}
    for name in names:
        if name == "genie":
            fns[name] = lambda d: genie_mmse(d.y, d.cov, pilots, d.sigma2)
        elif name == "ge":
            points = ge_points if ge_points is not None else 16 * scenario.S
            grid = build_grid(scenario.S, scenario.U, pilots, qt, sigma2,
                              points, spread_tx, spread_rx,
                              filter_type=ge_filter_type)
            fns[name] = lambda d, g=grid: ge_estimate(d.y, g, pilots, d.sigma2, qt)
        elif name == "fe":
            fe = fe_reference_params(scenario.S, scenario.U, pilots, qt,
                                     sigma2, spread_tx, spread_rx)
            fns[name] = lambda d, f=fe: fe_estimate(d.y, f, pilots, qt, d.sigma2)
        elif name == "ml":
            fns[name] = lambda d: ml_estimate(d.y, pilots, qt, d.sigma2)
        elif name == "ls":
            fns[name] = lambda d: ls_estimate(d.y, pilots)
        elif name == "omp":
            k_max = 2 * scenario.num_clusters * scenario.U
            fns[name] = lambda d, k=k_max: omp_genie(d.y, d.h, pilots,
                                                     omp_oversampling, k)
        elif name == "cnn":
            if cnn_params is None:
                raise ValueError("the cnn estimator needs trained parameters")
            fns[name] = lambda d, p=cnn_params: cnn_estimate(p, d.y, pilots,
                                                             qt, d.sigma2)
        else:
            raise ValueError(f"unknown estimator {name!r}")
    return fns


@dataclass
class PointResult:
    nmse: float
    wall_time_ms: float
    draw_times_ms: np.ndarray | None = None


def evaluate_point(scenario: ScenarioConfig, estimator_fns: dict, num_draws: int,
                   seed_seq: np.random.SeedSequence, pilots: PilotSet,
                   measure_time: bool = True, collect_times: bool = False) -> dict:
    """Monte-Carlo evaluation of several estimators on one shared stream of
    draws (common random numbers). Returns {name: PointResult}."""
    S, U = scenario.S, scenario.U
    children = seed_seq.spawn(num_draws)
    errors = {name: 0.0 for name in estimator_fns}
    walls = {name: 0.0 for name in estimator_fns}
    times = {name: [] for name in estimator_fns} if collect_times else None

    for start in range(0, num_draws, CHUNK):
        rngs = [np.random.default_rng(c) for c in children[start:start + CHUNK]]
        for draw in draw_realizations(scenario, pilots, rngs):
            for name, fn in estimator_fns.items():
                if measure_time:
                    t0 = time.perf_counter()
                    h_hat = fn(draw)
                    dt = (time.perf_counter() - t0) * 1e3
                    walls[name] += dt
                    if collect_times:
                        times[name].append(dt)
                else:
                    h_hat = fn(draw)
                diff = draw.h - h_hat
                errors[name] += float(np.real(np.vdot(diff, diff)))

    out = {}
    for name in estimator_fns:
        out[name] = PointResult(
            nmse=errors[name] / (num_draws * S * U),
            wall_time_ms=walls[name],
            draw_times_ms=np.asarray(times[name]) if collect_times else None,
        )
    return out


def _resolve_cnn_params(cnn_models, values):
    """Accepts a single CnnParams (reused everywhere) or a mapping from sweep
    value to CnnParams; reports every missing point at once."""
    if isinstance(cnn_models, CnnParams):
        return {v: cnn_models for v in values}
    mapping = dict(cnn_models or {})
    missing = [v for v in values if v not in mapping]
    if missing:
        raise ValueError("no cnn model for sweep value(s): "
                         + ", ".join(str(v) for v in missing))
    return mapping


def run_sweep(spec: SweepSpec, cnn_models=None, measure_time: bool = True,
              ge_filter_type: str = "exact", ge_points: int | None = None,
              pilots_factory=None) -> list[ResultRow]:
    """Run every (sweep value x estimator) cell and return one row per cell.

    wall_time_ms counts estimation only; grid construction and model loading
    are excluded. With measure_time=False the timing column is zeroed, which
    makes the emitted CSV a pure function of (spec, seed).
    """
    cnn_map = (_resolve_cnn_params(cnn_models, spec.values)
               if "cnn" in spec.estimators else {})
    rows = []
    for point_idx, value in enumerate(spec.values):
        scenario = scenario_for_value(spec.fixed, spec.kind, value)
        if pilots_factory is not None:
            pilots = pilots_factory(scenario)
        else:
            pilots = dft_pilots(scenario.U, scenario.N, scenario.S)
        qt = SpectralTransform(scenario.S, scenario.U)
        fns = make_estimators(spec.estimators, scenario, pilots, qt,
                              cnn_params=cnn_map.get(value),
                              ge_filter_type=ge_filter_type,
                              ge_points=ge_points)
        seed_seq = np.random.SeedSequence(entropy=spec.seed, spawn_key=(point_idx,))
        results = evaluate_point(scenario, fns, spec.num_draws, seed_seq,
                                 pilots, measure_time=measure_time)
        for name in spec.estimators:
            res = results[name]
            rows.append(ResultRow(name, spec.kind, float(value), res.nmse,
                                  spec.num_draws, res.wall_time_ms))
    return rows


CSV_HEADER = "estimator,sweep_kind,sweep_value,nmse,draws,wall_time_ms"


def emit_csv(rows, path) -> None:
    """UTF-8, LF line endings; decimals carry full float64 precision, so a
    parse-back reproduces the rows exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for r in rows:
            f.write(f"{r.estimator},{r.sweep_kind},{r.sweep_value:.17g},"
                    f"{r.nmse:.17g},{r.draws},{r.wall_time_ms:.17g}\n")


def read_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}:1: unexpected header {header!r}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            try:
                rows.append(ResultRow(parts[0], parts[1], float(parts[2]),
                                      float(parts[3]), int(parts[4]), float(parts[5])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows
