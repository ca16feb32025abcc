"""Closed-loop braking runs: plant, sensors, estimator and controller wiring,
trace/metrics capture, config files and deterministic seeding.

Every run is a pure function of its config. The seed feeds a SeedSequence
that spawns independent generators for sensor noise, particle
initialisation, filter operations and controller downsampling, so traces
are byte-identical across repeats and across sweep worker counts.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import plant
from .baselines import BisectionConfig, BisectionController, CspConfig, CspController
from .dcee import DceeConfig, select_action
from .estimation_model import X_D, X_U, predicted_accel
from .estimator import (DEFAULT_SENSOR_VARIANCE, ParticleEnsemble, PriorSpec,
                        effective_sample_size, initialize, maybe_resample,
                        posterior_mean, propagate_and_weight, retrogressive_resample)
from .tyre import SURFACES, MagicParams, RoadSchedule, friction, slip_ratio
from .vehicle import DEFAULT_VEHICLE, VehicleParams

MPH = 0.44704  # m/s per mph

CONTROLLERS = ("dcee", "csp", "bisection")

# Model-fit watchdog: the per-step evidence (mean particle likelihood)
# collapses when the measurements stop matching what the ensemble predicts,
# which is the one signal a confidently wrong posterior cannot hide. Its
# belief-side uncertainty stays small through a road change, so the
# retrogressive redraw is forced from this data-side test instead: a fast
# EMA of the log evidence falling a fixed margin below its slow baseline
# for several consecutive steps.
FIT_FAST_ALPHA = 0.2
FIT_SLOW_ALPHA = 0.005
FIT_SLOW_CLIP = 2.0
FIT_DROP = 1.4
FIT_HOLD_STEPS = 8
FIT_WARMUP_STEPS = 50

# Deceleration cross-check: the posterior's implied body deceleration against
# a sliding-window regression of the measured speed. A gentle surface drop
# can hide from the per-step likelihood (at shallow slip the force error is
# far below sensor noise), but the integrated deceleration shortfall cannot.
ACCEL_FIT_WINDOW = 250
ACCEL_FIT_TOL = 1.5
ACCEL_FIT_HOLD = 30

# shared by both watchdogs: after any forced redraw the ensemble and the
# sliding regression both need to flush before either signal means anything
RETRO_COOLDOWN = 400

_ACCEL_X = np.arange(ACCEL_FIT_WINDOW) - (ACCEL_FIT_WINDOW - 1) / 2.0
_slope_x = _ACCEL_X / float(_ACCEL_X @ _ACCEL_X)

# Minimum regularization kernel width for the tyre parameters, as a fraction
# of the prior box. Keeps a trickle of parameter exploration alive after the
# ensemble has concentrated.
THETA_JITTER_FRAC = 0.02
STATE_JITTER_FLOOR = (0.05, 0.15, 0.15)

# Soft-start: small torque steps while the filter beds in on the first
# measurements, and no uncertainty-reset evaluation below this speed, where
# predicted slip scatter blows up as 1/U and the reset would only thrash.
PRECHARGE_STEPS = 15
PRECHARGE_INCREMENTS = (-50.0, 0.0, 50.0)
RETRO_MIN_SPEED = 3.0

TRACE_COLUMNS = (
    "t", "U_true", "omega_f_true", "omega_r_true",
    "U_meas", "omega_f_meas", "omega_r_meas",
    "U_est", "omega_f_est", "omega_r_est",
    "B_est", "C_est", "D_est", "E_est", "D_min", "D_max",
    "kappa_f", "mu_f_true", "torque", "J", "P_pred", "N_eff",
    "resampled", "retro", "lock",
)
_COL = {name: i for i, name in enumerate(TRACE_COLUMNS)}


class ScenarioAbort(RuntimeError):
    """Run failed mid-flight; carries whatever trace was recorded."""

    def __init__(self, message: str, partial_trace: np.ndarray):
        super().__init__(message)
        self.partial_trace = partial_trace


@dataclass(frozen=True)
class ScenarioConfig:
    initial_speed: float                      # m/s
    road: RoadSchedule
    controller: str = "dcee"
    seed: int = 0
    n_particles: int = 1000
    dt: float = 1e-3
    max_time: float = 15.0
    stop_speed: float = 0.5                   # m/s, stop rule threshold
    sensor_variance: tuple[float, float, float] = DEFAULT_SENSOR_VARIANCE
    retro_enabled: bool = True
    name: str = "run"
    output: str | None = None
    vehicle: VehicleParams = DEFAULT_VEHICLE
    prior: PriorSpec = PriorSpec()
    dcee: DceeConfig = DceeConfig()
    csp: CspConfig = CspConfig()
    bisection: BisectionConfig = BisectionConfig()

    def __post_init__(self) -> None:
        if self.initial_speed <= 0:
            raise ValueError("initial speed must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if any(v <= 0 for v in self.sensor_variance):
            raise ValueError("sensor variances must be positive")


@dataclass
class RunMetrics:
    name: str
    controller: str
    road: str
    initial_speed: float
    seed: int
    n_particles: int
    dt: float
    stopped: bool
    sim_time: float
    stopping_time: float
    stopping_distance: float
    distance_travelled: float
    lock_events: int
    mu_tracking_error: float
    max_rel_err_U: float
    max_rel_err_wf: float
    max_rel_err_wr: float
    resample_count: int
    retro_count: int
    underflow_count: int
    wall_time: float


@dataclass
class RunResult:
    metrics: RunMetrics
    trace: np.ndarray  # (steps, len(TRACE_COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return self.trace[:, _COL[name]]


def spawn_rngs(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators per noise consumer, all derived from one seed."""
    sensor, init, filt, ctrl = np.random.SeedSequence(seed).spawn(4)
    return {
        "sensor": np.random.default_rng(sensor),
        "init": np.random.default_rng(init),
        "filter": np.random.default_rng(filt),
        "controller": np.random.default_rng(ctrl),
    }


def surface_label(road: RoadSchedule) -> str:
    names = []
    for t, theta in road.entries:
        name = next((k for k, v in SURFACES.items() if v == theta), "custom")
        names.append(name if t == 0.0 else f"{name}@{t:g}")
    return ">".join(names)


def run(cfg: ScenarioConfig) -> RunResult:
    """Simulate one braking manoeuvre to the stop rule or timeout."""
    t_wall = time.perf_counter()
    p = cfg.vehicle
    dt = cfg.dt
    rngs = spawn_rngs(cfg.seed)
    sigma = np.sqrt(np.asarray(cfg.sensor_variance))

    state = plant.initial_state(cfg.initial_speed, p)
    ref = np.array([cfg.initial_speed, cfg.initial_speed / p.R, cfg.initial_speed / p.R])
    theta_box = (np.asarray(cfg.prior.theta_lo), np.asarray(cfg.prior.theta_hi))
    jitter_floor = np.concatenate([STATE_JITTER_FLOOR,
                                   THETA_JITTER_FRAC * (theta_box[1] - theta_box[0])])
    torque = 0.0
    is_dcee = cfg.controller == "dcee"
    baseline = None
    if cfg.controller == "csp":
        baseline = CspController(cfg.csp, p.m, p.R)
    elif cfg.controller == "bisection":
        baseline = BisectionController(cfg.bisection, p.m, p.R)

    n_steps = int(round(cfg.max_time / dt))
    trace = np.full((n_steps, len(TRACE_COLUMNS)), np.nan)
    ens: ParticleEnsemble | None = None
    p_pred = math.nan
    trigger_p = -math.inf
    p0 = math.inf
    distance = 0.0
    stopped = False
    sim_time = 0.0
    lock_events = 0
    resample_count = 0
    retro_count = 0
    underflow_count = 0
    mu_err_sum = 0.0
    mu_err_n = 0
    max_rel = [0.0, 0.0, 0.0]
    locked_prev = [False] * 4
    last_switch = 0.0
    guard_ema = 0.0
    fit_fast = 0.0
    fit_slow = 0.0
    fit_run = 0
    u_window = np.zeros(ACCEL_FIT_WINDOW)
    accel_run = 0
    retro_cooldown = 0
    force_retro = False

    for k in range(n_steps):
        t = k * dt
        theta_true = cfg.road.at(t)
        for start, _ in cfg.road.entries:
            if 0.0 < start <= t:
                last_switch = max(last_switch, start)
        truth = np.array([state[plant.U], state[plant.W_FL], state[plant.W_RL]])
        y = truth + rngs["sensor"].normal(0.0, 1.0, 3) * sigma

        # measured wheel run-away backstop: smoothed front slip past the floor
        # means the wheel is diving regardless of what the belief says
        kappa_meas = (y[1] * p.R - y[0]) / max(y[0], 1e-6)
        guard_ema = 0.7 * guard_ema + 0.3 * kappa_meas
        # measured slip noise grows as 1/U, so the backstop floor deepens at
        # low speed or hover noise would trip it and bleed the brake off
        guard_floor = cfg.dcee.kappa_floor - 0.8 / max(y[0], 1.0)
        runaway = guard_ema < guard_floor

        retro_fired = False
        if is_dcee:
            if ens is None:
                ens = initialize(y, cfg.n_particles, cfg.prior, rngs["filter"])
            else:
                if cfg.retro_enabled:
                    ens, retro_fired = retrogressive_resample(
                        ens, trigger_p, p0, cfg.prior,
                        force=ens.underflow or force_retro)
                    retro_count += retro_fired
                    force_retro = False
                    trigger_p = -math.inf
                ens = propagate_and_weight(ens, torque, y, dt, p, cfg.sensor_variance)
                underflow_count += ens.underflow
                ens = maybe_resample(ens, y, cfg.sensor_variance,
                                     jitter_floor=jitter_floor,
                                     theta_box=theta_box)
                resample_count += ens.resampled
            est = posterior_mean(ens)
            ll = ens.last_log_evidence
            if math.isfinite(ll):
                ll = max(ll, fit_slow - 20.0)
            else:
                ll = fit_slow - 20.0
            if k == FIT_WARMUP_STEPS:
                fit_fast = fit_slow = ll
            elif k > FIT_WARMUP_STEPS:
                fit_fast = (1.0 - FIT_FAST_ALPHA) * fit_fast + FIT_FAST_ALPHA * ll
                # clipped update lets the baseline follow regime shifts in both
                # directions without being dragged by collapse outliers
                fit_slow += FIT_SLOW_ALPHA * min(max(ll - fit_slow, -FIT_SLOW_CLIP),
                                                 FIT_SLOW_CLIP)
                fit_run = fit_run + 1 if fit_fast < fit_slow - FIT_DROP else 0
            u_window[k % ACCEL_FIT_WINDOW] = y[0]
            if k >= ACCEL_FIT_WINDOW + FIT_WARMUP_STEPS:
                ordered = np.roll(u_window, -(k + 1) % ACCEL_FIT_WINDOW)
                slope = float(_slope_x @ ordered) / dt
                mismatch = abs(predicted_accel(est, p) - slope)
                accel_run = accel_run + 1 if mismatch > ACCEL_FIT_TOL else 0
            retro_cooldown = max(0, retro_cooldown - 1)
            if (retro_cooldown == 0 and est[X_U] >= RETRO_MIN_SPEED
                    and (fit_run >= FIT_HOLD_STEPS or accel_run >= ACCEL_FIT_HOLD)):
                force_retro = True
                fit_run = 0
                accel_run = 0
                fit_fast = fit_slow
                retro_cooldown = RETRO_COOLDOWN
            if not np.all(np.isfinite(est)):
                raise ScenarioAbort(f"non-finite posterior mean at t={t:.3f}", trace[:k])
            n_eff = effective_sample_size(ens.weights)
            d_col = ens.states[:, X_D]
            j_cost = math.nan
            if est[X_U] >= cfg.dcee.hold_speed:
                if runaway and k > 0:
                    # reflex release: the measured wheel is running away, so
                    # step the torque toward zero without consulting the cost
                    torque = float(np.clip(torque + max(cfg.dcee.increments),
                                           cfg.dcee.torque_min,
                                           cfg.dcee.torque_max))
                else:
                    dcee_cfg = cfg.dcee
                    if k < PRECHARGE_STEPS:
                        dcee_cfg = replace(dcee_cfg,
                                           increments=PRECHARGE_INCREMENTS)
                    accel_est = predicted_accel(est, p)
                    decision = select_action(ens, torque, accel_est, dt, p,
                                             dcee_cfg, rngs["controller"])
                    p_step = float(decision.candidate_p.max())
                    if k <= 1:
                        # the first evaluations define P0; the trigger arms
                        # once a non-degenerate candidate set has been scored
                        p0 = max(p0, p_step) if k else p_step
                    else:
                        p_pred = p_step
                        trigger_p = p_step if est[X_U] >= RETRO_MIN_SPEED else -math.inf
                    torque = decision.torque
                    j_cost = decision.cost
            est_row = (est[0], est[1], est[2], est[3], est[4], est[5], est[6],
                       float(d_col.min()), float(d_col.max()))
            filter_row = (n_eff, float(ens.resampled), float(retro_fired))
        else:
            torque = baseline.step(y, dt)
            tr = baseline.tracker
            est = np.array([tr.u_f, tr.wf_f, tr.wr_f])
            est_row = (tr.u_f, tr.wf_f, tr.wr_f, math.nan, math.nan, math.nan,
                       math.nan, math.nan, math.nan)
            j_cost = math.nan
            filter_row = (math.nan, 0.0, 0.0)

        kappa_f = float(slip_ratio(state[plant.W_FL], state[plant.U], p.R))
        mu_f = float(friction(kappa_f, theta_true))
        locked_now = [state[j] == 0.0 for j in range(plant.W_FL, plant.STATE_SIZE)]
        trace[k] = (t, truth[0], truth[1], truth[2], y[0], y[1], y[2],
                    *est_row[:7], est_row[7], est_row[8],
                    kappa_f, mu_f, torque, j_cost, p_pred,
                    filter_row[0], filter_row[1], filter_row[2],
                    float(any(locked_now)))

        # steady-phase friction tracking, outside start/switch transients
        if truth[0] > 2.0 and t >= 0.3 and t >= last_switch + 0.3:
            mu_err_sum += theta_true.D - abs(mu_f)
            mu_err_n += 1
        if k >= 13:
            for i in range(3):
                rel = abs(est[i] - truth[i]) / ref[i]
                if rel > max_rel[i]:
                    max_rel[i] = rel

        try:
            state = plant.step(state, (torque, torque, 0.0, 0.0), theta_true, p, dt)
        except (FloatingPointError, ValueError) as exc:
            # non-finite state or the plant leaving its valid domain mid-step
            raise ScenarioAbort(str(exc), trace[: k + 1]) from exc
        sim_time = (k + 1) * dt
        distance += 0.5 * dt * (truth[0] + state[plant.U])
        for j in range(4):
            now = state[plant.W_FL + j] == 0.0
            if now and not locked_prev[j] and state[plant.U] > 1.5:
                lock_events += 1
            locked_prev[j] = now
        if state[plant.U] <= cfg.stop_speed:
            stopped = True
            break

    trace = trace[: k + 1] if n_steps else trace
    stopping_time = math.nan
    stopping_distance = math.nan
    if stopped:
        # extrapolate the tail below the stop threshold at the final
        # deceleration, taken as realized over the last step; the
        # instantaneous derivative at the threshold can be transiently
        # polluted by the unbraked wheels shedding spin
        a_end = (state[plant.U] - truth[0]) / dt
        u_end = state[plant.U]
        if a_end < -1e-3:
            stopping_time = sim_time + u_end / -a_end
            stopping_distance = distance + 0.5 * u_end * u_end / -a_end
        else:
            stopping_time = sim_time
            stopping_distance = distance

    metrics = RunMetrics(
        name=cfg.name,
        controller=cfg.controller,
        road=surface_label(cfg.road),
        initial_speed=cfg.initial_speed,
        seed=cfg.seed,
        n_particles=cfg.n_particles,
        dt=dt,
        stopped=stopped,
        sim_time=sim_time,
        stopping_time=stopping_time,
        stopping_distance=stopping_distance,
        distance_travelled=distance,
        lock_events=lock_events,
        mu_tracking_error=mu_err_sum / mu_err_n if mu_err_n else math.nan,
        max_rel_err_U=max_rel[0],
        max_rel_err_wf=max_rel[1],
        max_rel_err_wr=max_rel[2],
        resample_count=resample_count,
        retro_count=retro_count,
        underflow_count=underflow_count,
        wall_time=time.perf_counter() - t_wall,
    )
    return RunResult(metrics=metrics, trace=trace)


def sweep(configs: Sequence[ScenarioConfig], workers: int = 1) -> list[RunResult]:
    """Run a batch of configs, optionally across processes. Results are
    independent of the worker count."""
    configs = list(configs)
    if not configs:
        return []
    if workers <= 1 or len(configs) == 1:
        return [run(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


def compare(cfg: ScenarioConfig, workers: int = 1) -> list[RunResult]:
    """The same scenario and seed under every controller."""
    variants = [replace(cfg, controller=c, name=f"{cfg.name}_{c}") for c in CONTROLLERS]
    return sweep(variants, workers=workers)


# ---------------------------------------------------------------------------
# config files

_TOP_KEYS = {
    "name", "initial_speed", "initial_speed_mph", "controller", "seed",
    "n_particles", "dt", "max_time", "stop_speed", "sensor_variance",
    "retro_enabled", "output", "road", "vehicle", "prior", "dcee", "csp",
    "bisection",
}


def _sub_config(cls, defaults, data: dict, context: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown {context} keys: {sorted(unknown)}")
    coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    return replace(defaults, **coerced)


def _road_from_data(entries) -> RoadSchedule:
    if entries is None:
        return RoadSchedule.constant(SURFACES["dry"])
    if not entries:
        raise ValueError("road schedule must not be empty")
    segments = []
    for e in entries:
        t = float(e.get("t", 0.0))
        if "surface" in e:
            name = e["surface"]
            if name not in SURFACES:
                raise ValueError(f"unknown surface {name!r}")
            theta = SURFACES[name]
        elif "theta" in e:
            vals = e["theta"]
            if len(vals) != 4:
                raise ValueError("explicit theta needs four values [B, C, D, E]")
            theta = MagicParams(*map(float, vals))
        else:
            raise ValueError("road entry needs 'surface' or 'theta'")
        segments.append((t, theta))
    return RoadSchedule.from_segments(segments)


def build_config(data: dict, name: str = "run") -> ScenarioConfig:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "initial_speed" in data and "initial_speed_mph" in data:
        raise ValueError("give initial_speed or initial_speed_mph, not both")
    if "initial_speed_mph" in data:
        speed = float(data["initial_speed_mph"]) * MPH
    elif "initial_speed" in data:
        speed = float(data["initial_speed"])
    else:
        raise ValueError("config needs initial_speed or initial_speed_mph")

    kwargs = {
        "initial_speed": speed,
        "road": _road_from_data(data.get("road")),
        "name": data.get("name", name),
    }
    for key in ("controller", "seed", "n_particles", "dt", "max_time",
                "stop_speed", "retro_enabled", "output"):
        if key in data:
            kwargs[key] = data[key]
    if "sensor_variance" in data:
        kwargs["sensor_variance"] = tuple(map(float, data["sensor_variance"]))
    if "vehicle" in data:
        kwargs["vehicle"] = _sub_config(VehicleParams, DEFAULT_VEHICLE,
                                        data["vehicle"], "vehicle")
    if "prior" in data:
        kwargs["prior"] = _sub_config(PriorSpec, PriorSpec(), data["prior"], "prior")
    if "dcee" in data:
        kwargs["dcee"] = _sub_config(DceeConfig, DceeConfig(), data["dcee"], "dcee")
    if "csp" in data:
        kwargs["csp"] = _sub_config(CspConfig, CspConfig(), data["csp"], "csp")
    if "bisection" in data:
        kwargs["bisection"] = _sub_config(BisectionConfig, BisectionConfig(),
                                          data["bisection"], "bisection")
    return ScenarioConfig(**kwargs)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(text)
    return build_config(data, name=path.stem)


# ---------------------------------------------------------------------------
# persistence

def write_trace(path: str | Path, trace: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace:
            fh.write(",".join(f"{v:.10g}" for v in row) + "\n")


def metrics_fields() -> list[str]:
    return [f.name for f in fields(RunMetrics)]


def write_metrics(path: str | Path, metrics: Sequence[RunMetrics]) -> None:
    names = metrics_fields()
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for m in metrics:
            vals = []
            for n in names:
                v = getattr(m, n)
                if isinstance(v, bool):
                    vals.append(str(int(v)))
                elif isinstance(v, float):
                    vals.append(f"{v:.10g}")
                else:
                    vals.append(str(v))
            fh.write(",".join(vals) + "\n")


def read_trace(path: str | Path) -> np.ndarray:
    return np.genfromtxt(path, delimiter=",", skip_header=1)
