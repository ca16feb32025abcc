"""Vehicle parameter set for the longitudinal braking models.

SAE-style body frame: x forward, z down, pitch about y. The body origin sits
at ground level below the static centre of gravity, so z_G < 0 means the CoG
is above ground and axle positions are signed x offsets (a > 0 front,
b < 0 rear).
"""

from __future__ import annotations

from dataclasses import dataclass

G = 9.81  # m/s^2


@dataclass(frozen=True)
class VehicleParams:
    """Rigid-body, suspension and wheel constants for a large saloon."""

    m: float = 1838.35      # sprung mass, kg
    I_yy: float = 3983.0    # pitch inertia about the body origin, kg m^2
    I_w: float = 1.25       # spin inertia per wheel, kg m^2
    R: float = 0.29         # rolling radius, m
    a: float = 1.455        # CoG to front axle, m (positive forward)
    b: float = -1.575       # CoG to rear axle, m (negative rearward)
    x_G: float = 0.0        # CoG offset from body origin, m
    z_G: float = -0.4427    # CoG offset from body origin, m (z down, so < 0 is up)
    k_f: float = 20090.0    # front suspension stiffness per corner, N/m
    k_r: float = 22700.0    # rear suspension stiffness per corner, N/m
    c_f: float = 2000.0     # front suspension damping per corner, N s/m
    c_r: float = 2260.0     # rear suspension damping per corner, N s/m
    g: float = G

    def __post_init__(self) -> None:
        if min(self.m, self.I_yy, self.I_w, self.R, self.k_f, self.k_r) <= 0:
            raise ValueError("masses, inertias, radius and stiffnesses must be positive")
        if not (self.a > 0 > self.b):
            raise ValueError("front axle offset must be positive, rear negative")

    @property
    def wheelbase(self) -> float:
        return self.a + abs(self.b)

    @property
    def cg_height(self) -> float:
        return abs(self.z_G)


DEFAULT_VEHICLE = VehicleParams()
