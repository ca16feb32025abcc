"""Truth-plant tests.

Two independent oracles anchor this file: the static axle-load distribution
(closed form, no linear solve) for the trim pose, and a scalar re-statement
of the body/wheel dynamics integrated with a locally written RK4 for the
stepper. Both are derived directly from the model equations, not from the
module under test.
"""

import math

import numpy as np
import pytest

from abslab import plant
from abslab.tyre import SURFACES, MagicParams
from abslab.vehicle import DEFAULT_VEHICLE, VehicleParams

DRY = SURFACES["dry"]
FRONT_BRAKE = (-1200.0, -1200.0, 0.0, 0.0)


def equilibrium_oracle(p: VehicleParams) -> tuple[float, float]:
    """Trim pose from the static axle-load split: moments about the CoG give
    the per-axle loads, spring rates give the deflections, geometry gives
    (z, phi). Valid for x_G = 0."""
    mg = p.m * p.g
    wl = p.a + abs(p.b)
    front = mg * abs(p.b) / wl
    rear = mg * p.a / wl
    s_f = front / (2.0 * p.k_f)
    s_r = rear / (2.0 * p.k_r)
    phi = (s_r - s_f) / wl
    return s_f + p.a * phi, phi


def derivatives_oracle(s, torques, th: MagicParams, p: VehicleParams):
    """Scalar restatement of the 7-DOF dynamics."""
    u, w, q, z, phi = s[0], s[1], s[2], s[3], s[4]
    babs = abs(p.b)
    nf = p.k_f * (z - p.a * phi) + p.c_f * (w - p.a * q)
    nr = p.k_r * (z + babs * phi) + p.c_r * (w + babs * q)
    loads = [max(nf, 0.0)] * 2 + [max(nr, 0.0)] * 2
    fx = []
    for j in range(4):
        kappa = (s[5 + j] * p.R - u) / u
        bk = th.B * kappa
        mu = th.D * math.sin(th.C * math.atan(bk - th.E * (bk - math.atan(bk))))
        fx.append(mu * loads[j])
    A = np.array([
        [p.m, 0.0, p.m * p.z_G],
        [0.0, p.m, -p.m * p.x_G],
        [p.m * p.z_G, -p.m * p.x_G, p.I_yy],
    ])
    rhs = np.array([
        sum(fx) - p.m * w * q + p.m * p.x_G * q * q,
        p.m * p.g - (2 * nf + 2 * nr) + p.m * u * q + p.m * p.z_G * q * q,
        2 * p.a * nf + 2 * p.b * nr - p.x_G * p.m * p.g
        - p.m * p.z_G * w * q - p.m * p.x_G * u * q,
    ])
    acc = np.linalg.solve(A, rhs)
    out = np.empty(9)
    out[:3] = acc
    out[3], out[4] = w, q
    for j in range(4):
        out[5 + j] = (torques[j] - p.R * fx[j]) / p.I_w
    return out


def rk4_oracle(s, torques, th, p, dt):
    k1 = derivatives_oracle(s, torques, th, p)
    k2 = derivatives_oracle(s + 0.5 * dt * k1, torques, th, p)
    k3 = derivatives_oracle(s + 0.5 * dt * k2, torques, th, p)
    k4 = derivatives_oracle(s + dt * k3, torques, th, p)
    return s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class TestVehicleParams:
    def test_defaults_are_consistent(self):
        p = DEFAULT_VEHICLE
        assert p.wheelbase == pytest.approx(3.03)
        assert p.cg_height == pytest.approx(0.4427)

    def test_rejects_nonpositive_mass(self):
        with pytest.raises(ValueError):
            VehicleParams(m=0.0)

    def test_rejects_bad_axle_layout(self):
        with pytest.raises(ValueError):
            VehicleParams(a=-1.0, b=-1.5)
        with pytest.raises(ValueError):
            VehicleParams(a=1.455, b=0.2)

    def test_frozen(self):
        with pytest.raises(AttributeError):
            DEFAULT_VEHICLE.m = 1.0


class TestStaticEquilibrium:
    def test_matches_load_split_oracle(self):
        z_o, phi_o = equilibrium_oracle(DEFAULT_VEHICLE)
        z, phi = plant.static_equilibrium(DEFAULT_VEHICLE)
        assert z == pytest.approx(z_o, abs=1e-12)
        assert phi == pytest.approx(phi_o, abs=1e-12)

    def test_nose_up_rake(self):
        # softer front springs under a lighter front axle: positive pitch = nose up,
        # so the equilibrium rake is slightly nose down (rear sits lower)
        z, phi = plant.static_equilibrium(DEFAULT_VEHICLE)
        assert z > 0.0
        assert phi < 0.0

    def test_body_settles_onto_equilibrium(self):
        # drop test: springs unloaded, free rolling, no brake; the damped body
        # must come to rest on the analytic trim pose
        p = DEFAULT_VEHICLE
        z_star, phi_star = plant.static_equilibrium(p)
        s = np.zeros(plant.STATE_SIZE)
        s[plant.U] = 30.0
        s[plant.W_FL:] = 30.0 / p.R
        for _ in range(6000):
            s = plant.step(s, (0.0,) * 4, DRY, p, 1e-3)
        assert abs(s[plant.Z] - z_star) < 1e-6
        assert abs(s[plant.PHI] - phi_star) < 1e-6
        assert abs(s[plant.W]) < 1e-5
        assert abs(s[plant.Q]) < 1e-5

    def test_trim_state_is_stationary_without_brakes(self):
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        d = plant.derivatives(s, (0.0,) * 4, DRY, p)
        assert np.max(np.abs(d)) < 1e-9


class TestDerivatives:
    def test_matches_scalar_oracle_at_trim(self):
        s = plant.initial_state(20.0, DEFAULT_VEHICLE)
        got = plant.derivatives(s, FRONT_BRAKE, DRY, DEFAULT_VEHICLE)
        want = derivatives_oracle(s, FRONT_BRAKE, DRY, DEFAULT_VEHICLE)
        assert np.allclose(got, want, rtol=0.0, atol=1e-10)

    def test_matches_scalar_oracle_mid_stop(self):
        # exercise nonzero heave/pitch rates and all coupling terms
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        for _ in range(300):
            s = plant.step(s, FRONT_BRAKE, DRY, p, 1e-3)
        got = plant.derivatives(s, FRONT_BRAKE, DRY, p)
        want = derivatives_oracle(s, FRONT_BRAKE, DRY, p)
        assert np.allclose(got, want, rtol=0.0, atol=1e-10)

    def test_braking_decelerates_and_dives(self):
        # at trim the slip is zero, so the torque bites the wheel spin first
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        d0 = plant.derivatives(s, FRONT_BRAKE, DRY, p)
        assert d0[plant.U] == pytest.approx(0.0, abs=1e-12)
        assert d0[plant.W_FL] < 0.0
        assert d0[plant.W_RL] == pytest.approx(0.0, abs=1e-12)
        s = plant.step(s, FRONT_BRAKE, DRY, p, 1e-3)
        d1 = plant.derivatives(s, FRONT_BRAKE, DRY, p)
        assert d1[plant.U] < 0.0

    def test_rejects_stopped_vehicle(self):
        s = plant.initial_state(20.0, DEFAULT_VEHICLE)
        s[plant.U] = 0.0
        with pytest.raises(ValueError):
            plant.derivatives(s, (0.0,) * 4, DRY, DEFAULT_VEHICLE)

    def test_airborne_wheel_sees_no_road_force(self):
        # suspension in deep droop: tyre load clamps at zero, wheel spins on
        # brake torque alone
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        s[plant.Z] = -0.5
        s[plant.PHI] = 0.0
        d = plant.derivatives(s, (-100.0, -100.0, -100.0, -100.0), DRY, p)
        for j in range(4):
            assert d[plant.W_FL + j] == pytest.approx(-100.0 / p.I_w)


class TestStep:
    def test_one_step_matches_rk4_oracle(self):
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        got = plant.step(s, FRONT_BRAKE, DRY, p, 1e-3)
        want = rk4_oracle(s, FRONT_BRAKE, DRY, p, 1e-3)
        assert np.allclose(got, want, rtol=0.0, atol=1e-12)

    def test_long_segment_matches_oracle(self):
        p = DEFAULT_VEHICLE
        got = plant.initial_state(20.0, p)
        want = got.copy()
        for _ in range(500):
            got = plant.step(got, FRONT_BRAKE, DRY, p, 1e-3)
            want = rk4_oracle(want, FRONT_BRAKE, DRY, p, 1e-3)
        assert np.allclose(got, want, rtol=0.0, atol=1e-9)

    def test_convergence_order_at_least_four(self):
        p = DEFAULT_VEHICLE
        s0 = plant.initial_state(20.0, p)

        def integrate(dt, horizon=0.2):
            s = s0.copy()
            for _ in range(int(round(horizon / dt))):
                s = plant.step(s, FRONT_BRAKE, DRY, p, dt)
            return s

        ref = integrate(1e-3 / 16)
        e1 = np.linalg.norm(integrate(1e-3) - ref)
        e2 = np.linalg.norm(integrate(5e-4) - ref)
        assert math.log2(e1 / e2) >= 4.0

    def test_wheel_speeds_floored_at_zero(self):
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        s[plant.W_FL] = 0.05
        s[plant.W_FR] = 0.05
        out = plant.step(s, (-4000.0, -4000.0, 0.0, 0.0), DRY, p, 1e-3)
        assert out[plant.W_FL] == 0.0
        assert out[plant.W_FR] == 0.0
        assert out[plant.U] > 0.0

    def test_byte_exact_repeatability(self):
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        a = plant.step(s, FRONT_BRAKE, DRY, p, 1e-3)
        b = plant.step(s.copy(), FRONT_BRAKE, DRY, p, 1e-3)
        assert a.tobytes() == b.tobytes()

    def test_input_state_not_mutated(self):
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        keep = s.copy()
        plant.step(s, FRONT_BRAKE, DRY, p, 1e-3)
        assert np.array_equal(s, keep)

    def test_nonfinite_state_raises(self):
        p = DEFAULT_VEHICLE
        s = plant.initial_state(20.0, p)
        s[plant.W] = math.inf
        with np.errstate(invalid="ignore"), pytest.raises(FloatingPointError):
            plant.step(s, FRONT_BRAKE, DRY, p, 1e-3)


class TestInitialState:
    def test_free_rolling_wheels(self):
        s = plant.initial_state(15.0, DEFAULT_VEHICLE)
        assert np.all(s[plant.W_FL:] == 15.0 / DEFAULT_VEHICLE.R)
        assert s[plant.W] == 0.0
        assert s[plant.Q] == 0.0

    def test_rejects_nonpositive_speed(self):
        with pytest.raises(ValueError):
            plant.initial_state(0.0, DEFAULT_VEHICLE)
        with pytest.raises(ValueError):
            plant.initial_state(-5.0, DEFAULT_VEHICLE)
