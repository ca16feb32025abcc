"""7-DOF longitudinal truth plant: body speed, heave, pitch and four wheels.

State vector (9 entries, 7 dynamic DOF):

    [U, W, q, z, phi, w_fl, w_fr, w_rl, w_rr]

U forward speed, W heave rate (z down), q pitch rate, z heave displacement
from the free-spring position, phi pitch angle (positive nose up), w_* wheel
spin rates. Wheel order is front-left, front-right, rear-left, rear-right.

The three body accelerations are coupled through the CoG offset (x_G, z_G)
and are solved each evaluation as one linear system; with the origin at
ground level the braking forces enter the pitch balance only through the
m z_G dU/dt term, which is what produces brake dive and forward load
transfer. Gravity is applied explicitly.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .tyre import MagicParams
from .vehicle import VehicleParams

# state indices
U, W, Q, Z, PHI = 0, 1, 2, 3, 4
W_FL, W_FR, W_RL, W_RR = 5, 6, 7, 8
STATE_SIZE = 9


@lru_cache(maxsize=8)
def _body_matrix_inv(p: VehicleParams) -> tuple[float, ...]:
    """Inverse of the symmetric 3x3 mass matrix coupling (U_dot, W_dot, q_dot)."""
    m, zg, xg = p.m, p.z_G, p.x_G
    A = np.array([
        [m, 0.0, m * zg],
        [0.0, m, -m * xg],
        [m * zg, -m * xg, p.I_yy],
    ])
    return tuple(np.linalg.inv(A).ravel())


def static_equilibrium(p: VehicleParams) -> tuple[float, float]:
    """Heave and pitch (z*, phi*) where suspension carries the weight with zero
    net pitch moment. Linear in (z, phi), solved directly."""
    babs = abs(p.b)
    A = np.array([
        [2 * p.k_f + 2 * p.k_r, -2 * p.k_f * p.a + 2 * p.k_r * babs],
        [2 * p.a * p.k_f - 2 * babs * p.k_r, -2 * p.a ** 2 * p.k_f - 2 * babs ** 2 * p.k_r],
    ])
    rhs = np.array([p.m * p.g, 0.0])
    z, phi = np.linalg.solve(A, rhs)
    return float(z), float(phi)


def initial_state(v0: float, p: VehicleParams) -> np.ndarray:
    """Free-rolling trimmed state at speed v0: suspension at static equilibrium,
    wheels at v0 / R."""
    if v0 <= 0:
        raise ValueError("initial speed must be positive")
    z, phi = static_equilibrium(p)
    s = np.zeros(STATE_SIZE)
    s[U] = v0
    s[Z] = z
    s[PHI] = phi
    s[W_FL:] = v0 / p.R
    return s


def suspension_forces(state: np.ndarray, p: VehicleParams) -> tuple[float, float]:
    """Per-corner suspension forces (front, rear), positive in compression.
    These are also the vertical tyre loads of the massless wheels."""
    babs = abs(p.b)
    s_f = state[Z] - p.a * state[PHI]
    s_r = state[Z] + babs * state[PHI]
    ds_f = state[W] - p.a * state[Q]
    ds_r = state[W] + babs * state[Q]
    return (p.k_f * s_f + p.c_f * ds_f, p.k_r * s_r + p.c_r * ds_r)


def _mu(kappa: float, th: MagicParams) -> float:
    bk = th.B * kappa
    return th.D * math.sin(th.C * math.atan(bk - th.E * (bk - math.atan(bk))))


def derivatives(state: np.ndarray, torques, theta: MagicParams,
                p: VehicleParams) -> np.ndarray:
    """Time derivative of the full state under per-wheel torques (N m, braking
    negative) on surface theta. Valid only while U > 0."""
    u = state[U]
    if u <= 0.0:
        raise ValueError("plant derivatives undefined for U <= 0")
    w_body, q = state[W], state[Q]
    nf, nr = suspension_forces(state, p)
    # tyre loads cannot pull the road; the suspension can still pull the body
    nf_c = nf if nf > 0.0 else 0.0
    nr_c = nr if nr > 0.0 else 0.0
    loads = (nf_c, nf_c, nr_c, nr_c)

    r = p.R
    fx = [0.0, 0.0, 0.0, 0.0]
    for j in range(4):
        kappa = (state[W_FL + j] * r - u) / u
        fx[j] = _mu(kappa, theta) * loads[j]

    m, xg, zg = p.m, p.x_G, p.z_G
    sum_fx = fx[0] + fx[1] + fx[2] + fx[3]
    sum_n = 2.0 * nf + 2.0 * nr
    sum_xn = 2.0 * p.a * nf + 2.0 * p.b * nr

    r1 = sum_fx - m * w_body * q + m * xg * q * q
    r2 = m * p.g - sum_n + m * u * q + m * zg * q * q
    r3 = sum_xn - xg * m * p.g - m * zg * w_body * q - m * xg * u * q
    i00, i01, i02, i10, i11, i12, i20, i21, i22 = _body_matrix_inv(p)
    u_dot = i00 * r1 + i01 * r2 + i02 * r3
    w_dot = i10 * r1 + i11 * r2 + i12 * r3
    q_dot = i20 * r1 + i21 * r2 + i22 * r3

    out = np.empty(STATE_SIZE)
    out[U], out[W], out[Q] = u_dot, w_dot, q_dot
    out[Z], out[PHI] = w_body, q
    for j in range(4):
        out[W_FL + j] = (torques[j] - r * fx[j]) / p.I_w
    return out


def step(state: np.ndarray, torques, theta: MagicParams, p: VehicleParams,
         dt: float) -> np.ndarray:
    """One fixed-step RK4 update. Wheel speeds are floored at zero afterwards
    (a locked wheel slides, it does not spin backwards)."""
    k1 = derivatives(state, torques, theta, p)
    k2 = derivatives(state + 0.5 * dt * k1, torques, theta, p)
    k3 = derivatives(state + 0.5 * dt * k2, torques, theta, p)
    k4 = derivatives(state + dt * k3, torques, theta, p)
    new = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    for j in range(W_FL, STATE_SIZE):
        if new[j] < 0.0:
            new[j] = 0.0
    if not np.all(np.isfinite(new)):
        raise FloatingPointError(f"non-finite plant state after step: {new!r}")
    return new
