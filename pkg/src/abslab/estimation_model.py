"""Reduced double-corner model the estimator and controller reason with.

Augmented particle vector (7 columns): [U, w_f, w_r, B, C, D, E]. One front
and one rear wheel stand in for each axle; both braked wheels share the
commanded torque, so u below is the per-wheel front torque and the front
axle receives 2u against twice the wheel inertia.

Axle loads come from quasi-static weight transfer. The transfer term needs
the very deceleration the tyre forces produce, so the fixed point

    a_x = g (mu_f |b| + mu_r a) / L / (1 + (mu_f - mu_r) |z_G| / L)

is solved in closed form and the loads follow from it.
"""

from __future__ import annotations

import numpy as np

from .tyre import friction_components
from .vehicle import VehicleParams

# augmented-state columns
X_U, X_WF, X_WR, X_B, X_C, X_D, X_E = range(7)
N_AUG = 7

# numeric guard only; honest physics stays within a 1.6 g envelope
_ACCEL_LIMIT = 30.0


def vertical_loads(accel: float, p: VehicleParams) -> tuple[float, float]:
    """Front and rear axle loads (N) under longitudinal acceleration accel
    (negative while braking). The pair always sums to m g."""
    L = p.wheelbase
    transfer = p.m * p.cg_height * (-accel) / L
    f_front = p.m * p.g * abs(p.b) / L + transfer
    f_rear = p.m * p.g * p.a / L - transfer
    return f_front, f_rear


def quasi_static_accel(mu_f, mu_r, p: VehicleParams):
    """Self-consistent body acceleration for per-axle frictions, broadcasting."""
    L = p.wheelbase
    h = p.cg_height
    denom = 1.0 + (np.asarray(mu_f) - mu_r) * h / L
    accel = p.g * (mu_f * abs(p.b) + mu_r * p.a) / L / denom
    return np.clip(accel, -_ACCEL_LIMIT, _ACCEL_LIMIT)


def predict_state(chi: np.ndarray, u, dt: float, p: VehicleParams) -> np.ndarray:
    """Advance particles one explicit-Euler step under per-wheel front torque u.

    chi is (..., 7); u broadcasts over rows. Rows with U <= 0 are frozen
    (vehicle stopped), wheel speeds are floored at zero, and the tyre
    parameter columns pass through untouched.
    """
    chi = np.asarray(chi, dtype=float)
    single = chi.ndim == 1
    x = np.atleast_2d(chi).copy()
    u_arr = np.broadcast_to(np.asarray(u, dtype=float), x.shape[:1])

    live = x[:, X_U] > 0.0
    if np.any(live):
        Uv = x[live, X_U]
        wf = x[live, X_WF]
        wr = x[live, X_WR]
        B, C, D, E = (x[live, X_B], x[live, X_C], x[live, X_D], x[live, X_E])
        kf = (wf * p.R - Uv) / Uv
        kr = (wr * p.R - Uv) / Uv
        mu_f = friction_components(kf, B, C, D, E)
        mu_r = friction_components(kr, B, C, D, E)
        accel = quasi_static_accel(mu_f, mu_r, p)
        f_front, f_rear = vertical_loads(accel, p)
        fx_f = mu_f * f_front
        fx_r = mu_r * f_rear
        x[live, X_U] = np.maximum(Uv + dt * accel, 0.0)
        x[live, X_WF] = np.maximum(wf + dt * (2.0 * u_arr[live] - p.R * fx_f) / (2.0 * p.I_w), 0.0)
        x[live, X_WR] = np.maximum(wr + dt * (-p.R * fx_r) / (2.0 * p.I_w), 0.0)
    return x[0] if single else x


def predicted_accel(chi: np.ndarray, p: VehicleParams):
    """Quasi-static acceleration implied by particles (or a posterior mean).
    Stopped rows report zero."""
    chi = np.asarray(chi, dtype=float)
    x = np.atleast_2d(chi)
    Uv = x[:, X_U]
    out = np.zeros(x.shape[0])
    live = Uv > 0.0
    if np.any(live):
        kf = (x[live, X_WF] * p.R - Uv[live]) / Uv[live]
        kr = (x[live, X_WR] * p.R - Uv[live]) / Uv[live]
        mu_f = friction_components(kf, x[live, X_B], x[live, X_C], x[live, X_D], x[live, X_E])
        mu_r = friction_components(kr, x[live, X_B], x[live, X_C], x[live, X_D], x[live, X_E])
        out[live] = quasi_static_accel(mu_f, mu_r, p)
    return float(out[0]) if chi.ndim == 1 else out


def measure(chi: np.ndarray) -> np.ndarray:
    """Measured subset of the augmented state: [U, w_f, w_r]."""
    return np.asarray(chi)[..., :3]
