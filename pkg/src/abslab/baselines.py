"""Model-free braking baselines: sine-dither extremum seeking and bisection.

Both consume only the noisy sensor stream, low-pass filtered (body channel
and wheel channels separately), and share the same inner loop: a
proportional controller with gain c maps the slip-setpoint error, expressed
as a wheel-speed error, to brake torque. A feedforward term derived from
the filtered deceleration carries the equilibrium torque, so the
proportional part only works on the residual; without it the P-droop grows
like 1/U and walks the wheel past the peak at low speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class LowPass:
    """First-order IIR low-pass, initialised on the first sample."""

    def __init__(self, cutoff_hz: float):
        if cutoff_hz <= 0:
            raise ValueError("cutoff must be positive")
        self.tau = 1.0 / (2.0 * math.pi * cutoff_hz)
        self.y: float | None = None

    def step(self, x: float, dt: float) -> float:
        if self.y is None:
            self.y = x
        else:
            alpha = dt / (self.tau + dt)
            self.y += alpha * (x - self.y)
        return self.y


class _SlipTracker:
    """Shared measurement front-end and torque inner loop.

    The torque law is proportional on the wheel-speed error with gain c,
    plus a deceleration feedforward that carries the equilibrium torque so
    the P part only works on the residual. The loop rings and undershoots
    the target wheel speed by design budget; the baselines are meant to be
    oscillatory foils, not polished trackers.

    Two guards bracket the servo's usable band. Above hold_speed a wheel
    seen below release_slip gets the torque cut so it cannot spin to zero
    while the car is still moving fast; below hold_speed the servo is
    abandoned for a full-torque hold, since the slip loop loses its margin
    there (the unstable branch stiffens like 1/U) and the stop is close.
    """

    def __init__(self, p_gain: float, body_cutoff: float, wheel_cutoff: float,
                 accel_cutoff: float, torque_min: float, torque_max: float,
                 m: float, R: float, hold_speed: float, release_slip: float):
        self.p_gain = p_gain
        self.torque_min = torque_min
        self.torque_max = torque_max
        self.m = m
        self.R = R
        self.hold_speed = hold_speed
        self.release_slip = release_slip
        self.released = False
        self.holding = False
        self.dt = 1e-3
        self.f_u = LowPass(body_cutoff)
        self.f_wf = LowPass(wheel_cutoff)
        self.f_wr = LowPass(wheel_cutoff)
        self.f_accel = LowPass(accel_cutoff)
        self.f_wdot = LowPass(accel_cutoff)
        self._u_prev: float | None = None
        self._wf_prev: float | None = None
        self.u_f = 0.0
        self.wf_f = 0.0
        self.wr_f = 0.0
        self.accel_f = 0.0
        self.wdot_f = 0.0

    def update(self, y, dt: float) -> None:
        self.dt = dt
        u_f = self.f_u.step(float(y[0]), dt)
        wf_f = self.f_wf.step(float(y[1]), dt)
        self.wr_f = self.f_wr.step(float(y[2]), dt)
        accel_raw = 0.0 if self._u_prev is None else (u_f - self._u_prev) / dt
        wdot_raw = 0.0 if self._wf_prev is None else (wf_f - self._wf_prev) / dt
        self._u_prev = u_f
        self._wf_prev = wf_f
        self.u_f = u_f
        self.wf_f = wf_f
        self.accel_f = self.f_accel.step(accel_raw, dt)
        self.wdot_f = self.f_wdot.step(wdot_raw, dt)

    def torque_for(self, kappa_sp: float) -> float:
        if self.holding or self.u_f < self.hold_speed:
            self.holding = True  # latched: no servo re-entry during the stop
            return self.torque_min
        if self.wf_f * self.R < (1.0 + self.release_slip) * self.u_f:
            self.released = True  # wheel diving, dump the brake
            return self.torque_max
        self.released = False
        w_target = (1.0 + kappa_sp) * self.u_f / self.R
        feedforward = 0.5 * self.m * self.accel_f * self.R
        u = self.p_gain * (w_target - self.wf_f) + feedforward
        return min(max(u, self.torque_min), self.torque_max)


@dataclass(frozen=True)
class CspConfig:
    p_gain: float = 500.0
    body_cutoff: float = 20.0     # Hz
    wheel_cutoff: float = 250.0   # Hz
    accel_cutoff: float = 10.0    # Hz, derivative smoothing
    dither_amplitude: float = 0.02
    dither_freq: float = 2.0      # Hz, kept under the slip servo bandwidth
    integrator_gain: float = 0.3
    washout_cutoff: float = 1.0   # Hz, removes the slow trend before demodulation
    start_delay: float = 0.4      # s, outrides the brake engagement transient
    slip_init: float = -0.08
    slip_min: float = -0.25
    slip_max: float = -0.01
    hold_speed: float = 1.2       # m/s, below this the servo yields to a hold
    release_slip: float = -0.45
    torque_min: float = -4000.0
    torque_max: float = 0.0


class CspController:
    """Constant-speed-perturbation extremum seeker on the slip setpoint.

    The deceleration signal is washed out, demodulated with the dither and
    integrated; with the dither amplitude at zero the setpoint stays frozen.
    """

    def __init__(self, cfg: CspConfig, m: float, R: float):
        self.cfg = cfg
        self.tracker = _SlipTracker(cfg.p_gain, cfg.body_cutoff, cfg.wheel_cutoff,
                                    cfg.accel_cutoff, cfg.torque_min, cfg.torque_max,
                                    m, R, cfg.hold_speed, cfg.release_slip)
        self.f_washout = LowPass(cfg.washout_cutoff)
        self.slip_hat = cfg.slip_init
        self.slip_sp = cfg.slip_init
        self.t = 0.0

    def step(self, y, dt: float) -> float:
        cfg = self.cfg
        self.tracker.update(y, dt)
        perf = -self.tracker.accel_f  # deceleration, larger is better
        trend = self.f_washout.step(perf, dt)
        dither = math.sin(2.0 * math.pi * cfg.dither_freq * self.t)
        if cfg.dither_amplitude > 0.0 and self.t >= cfg.start_delay:
            gradient = (perf - trend) * dither
            self.slip_hat += cfg.integrator_gain * gradient * dt
            self.slip_hat = min(max(self.slip_hat, cfg.slip_min), cfg.slip_max)
        self.slip_sp = min(max(self.slip_hat + cfg.dither_amplitude * dither,
                               cfg.slip_min), cfg.slip_max)
        self.t += dt
        return self.tracker.torque_for(self.slip_sp)


class SlipBracket:
    """Bisection bracket over slip magnitude."""

    def __init__(self, lo: float, hi: float, tolerance: float):
        if not (0.0 < lo < hi):
            raise ValueError("need 0 < lo < hi")
        self.lo = lo
        self.hi = hi
        self.tolerance = tolerance
        self.verdicts: list[bool] = []

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def done(self) -> bool:
        return self.width <= self.tolerance

    def refine(self, departed: bool) -> None:
        """Shrink towards the peak: departure at mid means the peak sits at a
        smaller slip magnitude."""
        if departed:
            self.hi = self.mid
        else:
            self.lo = self.mid
        self.verdicts.append(departed)


@dataclass(frozen=True)
class BisectionConfig:
    p_gain: float = 500.0
    body_cutoff: float = 20.0
    wheel_cutoff: float = 250.0
    accel_cutoff: float = 10.0
    bracket_lo: float = 0.1
    bracket_hi: float = 0.2
    tolerance: float = 0.001
    dwell: float = 0.12           # s spent probing each midpoint
    settle: float = 0.04          # s of each dwell ignored before measuring
    eta_threshold: float = 1.3    # normalised wheel acceleration above this = departure
    runaway_slip: float = 0.1     # realised slip this far past the setpoint aborts the dwell
    min_decel: float = 0.5        # m/s^2 of braking needed before eta is meaningful
    start_delay: float = 0.3      # s of plain tracking before the first verdict
    hold_speed: float = 1.2       # m/s, below this the servo yields to a hold
    release_slip: float = -0.45
    torque_min: float = -4000.0
    torque_max: float = 0.0


class BisectionController:
    """Bisection extremum seeker using the normalised wheel acceleration
    eta = (dw/dt R) / (dU/dt) as the departure criterion: near a stable slip
    eta tracks 1 + kappa, while a wheel running away past the peak drives it
    far above one."""

    def __init__(self, cfg: BisectionConfig, m: float, R: float):
        self.cfg = cfg
        self.tracker = _SlipTracker(cfg.p_gain, cfg.body_cutoff, cfg.wheel_cutoff,
                                    cfg.accel_cutoff, cfg.torque_min, cfg.torque_max,
                                    m, R, cfg.hold_speed, cfg.release_slip)
        self.bracket = SlipBracket(cfg.bracket_lo, cfg.bracket_hi, cfg.tolerance)
        self.t = 0.0
        self.phase_t = 0.0
        self.eta_sum = 0.0
        self.eta_n = 0
        self.releasing = False
        self.stuck_log = 0  # phases whose verdict matched every earlier one
        self.slip_sp = -self.bracket.mid

    def step(self, y, dt: float) -> float:
        cfg = self.cfg
        tr = self.tracker
        tr.update(y, dt)
        self.t += dt
        if self.bracket.done:
            self.slip_sp = -self.bracket.mid
            return tr.torque_for(self.slip_sp)
        if self.t < cfg.start_delay:
            # plain tracking while the brake bites; verdicts made against the
            # engagement transient would throw away good bracket halves
            self.slip_sp = -self.bracket.mid
            self.phase_t = 0.0
            return tr.torque_for(self.slip_sp)

        self.phase_t += dt
        if self.releasing:
            self.slip_sp = -self.bracket.lo
            if self.phase_t >= cfg.settle:
                self._next_phase()
            return tr.torque_for(self.slip_sp)

        self.slip_sp = -self.bracket.mid
        tau = tr.torque_for(self.slip_sp)
        realized = (tr.wf_f * tr.R - tr.u_f) / tr.u_f if tr.u_f > 0.5 else 0.0
        dived = tr.released or realized < self.slip_sp - cfg.runaway_slip
        if dived and -tr.accel_f > cfg.min_decel:
            self._verdict(departed=True)  # caught the wheel running away
            return tau
        if self.phase_t >= cfg.settle and -tr.accel_f > cfg.min_decel:
            eta = tr.wdot_f * tr.R / tr.accel_f
            self.eta_sum += eta
            self.eta_n += 1
        if self.phase_t >= cfg.dwell:
            eta_mean = self.eta_sum / self.eta_n if self.eta_n else 0.0
            self._verdict(departed=eta_mean > cfg.eta_threshold)
        return tau

    def _verdict(self, departed: bool) -> None:
        previous = self.bracket.verdicts
        if previous and all(v == departed for v in previous):
            self.stuck_log += 1  # criterion keeps pointing the same way; keep halving
        self.bracket.refine(departed)
        self.releasing = departed and not self.bracket.done
        self.phase_t = 0.0
        self.eta_sum = 0.0
        self.eta_n = 0

    def _next_phase(self) -> None:
        self.releasing = False
        self.phase_t = 0.0
        self.eta_sum = 0.0
        self.eta_n = 0
