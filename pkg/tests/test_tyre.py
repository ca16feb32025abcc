"""Friction curve oracle tests.

The peak location oracle is an independent grid search over the slip axis,
refined by golden-section; it never reuses the closed-form under test.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from abslab.tyre import (SURFACES, MagicParams, RoadSchedule, friction,
                         friction_components, optimal_slip, slip_ratio)

# peak slip ratios for the three stock surfaces (dry, wet, snow)
EXPECTED_OPTIMA = {"dry": -0.15, "wet": -0.104, "snow": -0.18}


def grid_peak(theta: MagicParams, n: int = 400_001) -> tuple[float, float]:
    """Brute-force peak of |mu| on kappa in [-1, 0]."""
    kappa = np.linspace(-1.0, 0.0, n)
    mu = friction(kappa, theta)
    i = int(np.argmax(np.abs(mu)))
    return float(kappa[i]), float(abs(mu[i]))


class TestFrictionCurve:
    def test_zero_slip_gives_zero_friction(self):
        for theta in SURFACES.values():
            assert friction(0.0, theta) == 0.0

    @pytest.mark.parametrize("name", ["dry", "wet", "snow"])
    def test_peak_magnitude_equals_d(self, name):
        theta = SURFACES[name]
        k_star = optimal_slip(theta)
        assert abs(abs(friction(k_star, theta)) - theta.D) < 1e-6

    @pytest.mark.parametrize("name", ["dry", "wet", "snow"])
    def test_peak_location_matches_grid_oracle(self, name):
        theta = SURFACES[name]
        k_grid, mu_grid = grid_peak(theta)
        k_star = optimal_slip(theta)
        assert abs(k_star - k_grid) < 1e-3
        assert abs(abs(friction(k_star, theta)) - mu_grid) < 1e-6

    @pytest.mark.parametrize("name", ["dry", "wet", "snow"])
    def test_tabulated_optimum(self, name):
        # published optimum quoted to 2-3 decimals; match at that precision
        assert abs(optimal_slip(SURFACES[name]) - EXPECTED_OPTIMA[name]) < 1e-3

    def test_braking_slip_gives_braking_friction(self):
        kappa = np.linspace(-0.999, -1e-4, 500)
        for theta in SURFACES.values():
            assert np.all(friction(kappa, theta) < 0.0)

    def test_components_broadcast(self):
        theta = SURFACES["dry"]
        kappa = np.array([-0.3, -0.15, 0.0])
        out = friction_components(kappa, theta.B, theta.C, theta.D, theta.E)
        assert out.shape == (3,)
        assert out[2] == 0.0

    def test_vector_theta_columns(self):
        # per-particle parameter columns evaluate row-wise
        kappa = np.array([-0.15, -0.15])
        b = np.array([5.0, 10.695])
        c = np.array([1.4601, 1.4])
        d = np.array([1.3, 0.8])
        e = np.array([-10.3522, -3.5])
        out = friction_components(kappa, b, c, d, e)
        assert abs(out[0] - friction(-0.15, SURFACES["dry"])) < 1e-12
        assert abs(out[1] - friction(-0.15, SURFACES["wet"])) < 1e-12

    @given(st.floats(min_value=-1.0, max_value=0.0))
    def test_peak_bounds_friction_everywhere(self, kappa):
        for theta in SURFACES.values():
            assert abs(friction(kappa, theta)) <= theta.D + 1e-9

    def test_negative_peak_factor_rejected(self):
        with pytest.raises(ValueError):
            MagicParams(B=5.0, C=1.4601, D=-0.1, E=-10.3522)


class TestSlipRatio:
    def test_free_rolling(self):
        assert slip_ratio(20.0 / 0.29, 20.0, 0.29) == 0.0

    def test_locked_wheel(self):
        assert slip_ratio(0.0, 20.0, 0.29) == -1.0

    def test_braking_sign(self):
        assert slip_ratio(0.8 * 20.0 / 0.29, 20.0, 0.29) == pytest.approx(-0.2)

    def test_rejects_nonpositive_speed(self):
        with pytest.raises(ValueError):
            slip_ratio(10.0, 0.0, 0.29)
        with pytest.raises(ValueError):
            slip_ratio(10.0, -1.0, 0.29)


class TestRoadSchedule:
    def test_constant_surface(self):
        sched = RoadSchedule.constant(SURFACES["dry"])
        assert sched.at(0.0) == SURFACES["dry"]
        assert sched.at(100.0) == SURFACES["dry"]

    def test_switch_semantics(self):
        sched = RoadSchedule.from_segments([(0.0, SURFACES["dry"]),
                                            (0.5, SURFACES["wet"])])
        assert sched.at(0.499) == SURFACES["dry"]
        assert sched.at(0.5) == SURFACES["wet"]
        assert sched.at(2.0) == SURFACES["wet"]

    def test_empty_schedule_rejected(self):
        with pytest.raises(ValueError):
            RoadSchedule(entries=())

    def test_must_start_at_zero(self):
        with pytest.raises(ValueError):
            RoadSchedule(entries=((0.1, SURFACES["dry"]),))

    def test_times_strictly_increasing(self):
        with pytest.raises(ValueError):
            RoadSchedule(entries=((0.0, SURFACES["dry"]),
                                  (0.5, SURFACES["wet"]),
                                  (0.5, SURFACES["snow"])))
