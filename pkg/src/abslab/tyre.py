"""Magic-formula tyre friction, slip kinematics and piecewise road schedules.

Slip convention: kappa = (omega R - U) / U, so free rolling is 0 and a locked
wheel under forward motion is -1. Braking friction is negative; the curve
peaks at |mu| = D.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class MagicParams:
    """Stiffness B, shape C, peak D and curvature E of one road surface."""

    B: float
    C: float
    D: float
    E: float

    def __post_init__(self) -> None:
        if self.D < 0:
            raise ValueError("peak friction D must be non-negative")


SURFACES = {
    "dry": MagicParams(5.0, 1.4601, 1.3, -10.3522),
    "wet": MagicParams(10.695, 1.4, 0.8, -3.5),
    "snow": MagicParams(20.0, 1.5354, 0.3, 0.8525),
}


def friction_components(kappa, B, C, D, E):
    """mu = D sin(C arctan(B k - E (B k - arctan(B k)))), broadcasting over inputs."""
    bk = np.multiply(B, kappa)
    return D * np.sin(C * np.arctan(bk - E * (bk - np.arctan(bk))))


def friction(kappa, theta: MagicParams):
    return friction_components(kappa, theta.B, theta.C, theta.D, theta.E)


def slip_ratio(omega, U, R: float):
    """Longitudinal slip of a wheel spinning at omega while the body moves at U > 0."""
    if np.any(np.asarray(U) <= 0.0):
        raise ValueError("slip ratio undefined for U <= 0")
    return (np.multiply(omega, R) - U) / U


def optimal_slip(theta: MagicParams, lo: float = -1.0, hi: float = 0.0) -> float:
    """Slip of peak braking friction on [lo, hi], located by coarse grid plus
    golden-section refinement. The curve has a single interior minimum for
    every surface handled here."""
    grid = np.linspace(lo, hi, 2001)
    mu = friction(grid, theta)
    i = int(np.argmin(mu))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = friction(c, theta)
    fd = friction(d, theta)
    while b - a > 1e-10:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = friction(c, theta)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = friction(d, theta)
    return float(0.5 * (a + b))


@dataclass(frozen=True)
class RoadSchedule:
    """Step changes of surface over time: ((t0, theta0), (t1, theta1), ...)."""

    entries: tuple[tuple[float, MagicParams], ...]

    def __post_init__(self) -> None:
        if len(self.entries) == 0:
            raise ValueError("road schedule must contain at least one entry")
        times = [t for t, _ in self.entries]
        if times[0] != 0.0:
            raise ValueError("road schedule must start at t = 0")
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("road schedule switch times must be strictly increasing")

    @classmethod
    def constant(cls, theta: MagicParams) -> "RoadSchedule":
        return cls(((0.0, theta),))

    @classmethod
    def from_segments(cls, segments: Sequence[tuple[float, MagicParams]]) -> "RoadSchedule":
        return cls(tuple(segments))

    def at(self, t: float) -> MagicParams:
        active = self.entries[0][1]
        for start, theta in self.entries:
            if t >= start:
                active = theta
            else:
                break
        return active
