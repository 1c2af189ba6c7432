"""Lambertian line-of-sight channel between ceiling LEDs and upward-facing photodetectors.

All angles passed to the public helpers are in radians unless the argument name
ends in ``_deg``. LEDs face straight down and photodetectors straight up, so the
irradiance and incidence angles of a link coincide and ``cos(angle) = z / d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

# Typical indoor-room defaults; all overridable.
DEFAULT_PD_AREA = 1e-4  # m^2 (1 cm^2)
DEFAULT_REFRACTIVE_INDEX = 1.5
DEFAULT_FILTER_GAIN = 1.0
DEFAULT_LED_POWER = 10.0  # W, optical
DEFAULT_SEMI_ANGLES = (45.0, 60.0)
DEFAULT_FOVS = (15.0, 30.0, 50.0)


class ChannelError(ValueError):
    """Raised for invalid optical parameters or degenerate geometry."""


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ChannelError(f"non-finite coordinate in {self!r}")

    def distance_to(self, other: "Point3") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))

    def horizontal_distance_to(self, other: "Point3") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def _check_angle_deg(value: float, what: str) -> None:
    if not 0.0 < value < 90.0:
        raise ChannelError(f"{what} must lie in (0, 90) degrees, got {value}")


@dataclass(frozen=True)
class LedTransmitter:
    """A ceiling LED cell with two selectable half-power semi-angles."""

    id: int
    position: Point3
    semi_angle_settings: tuple[float, float] = DEFAULT_SEMI_ANGLES
    active_setting_index: int = 0
    power_budget: float = DEFAULT_LED_POWER

    def __post_init__(self):
        settings = tuple(float(s) for s in self.semi_angle_settings)
        if len(settings) != 2:
            raise ChannelError(f"LED {self.id}: exactly two semi-angle settings required, got {len(settings)}")
        for s in settings:
            _check_angle_deg(s, f"LED {self.id} semi-angle")
        object.__setattr__(self, "semi_angle_settings", settings)
        if self.active_setting_index not in (0, 1):
            raise ChannelError(f"LED {self.id}: active_setting_index must be 0 or 1")
        if not self.power_budget > 0:
            raise ChannelError(f"LED {self.id}: power_budget must be positive")

    @property
    def semi_angle_deg(self) -> float:
        return self.semi_angle_settings[self.active_setting_index]

    @property
    def lambertian_order(self) -> float:
        return lambertian_order(self.semi_angle_deg)

    def with_setting(self, index: int) -> "LedTransmitter":
        return replace(self, active_setting_index=index)

    def narrowest_index(self) -> int:
        return min(range(2), key=lambda i: self.semi_angle_settings[i])

    def widest_index(self) -> int:
        return max(range(2), key=lambda i: self.semi_angle_settings[i])


@dataclass(frozen=True)
class PhotoDetector:
    """Upward-facing photodetector with three selectable FOV half-angles."""

    area: float = DEFAULT_PD_AREA
    fov_settings: tuple[float, float, float] = DEFAULT_FOVS
    active_fov_index: int = 2
    refractive_index: float = DEFAULT_REFRACTIVE_INDEX
    filter_gain: float = DEFAULT_FILTER_GAIN

    def __post_init__(self):
        fovs = tuple(float(f) for f in self.fov_settings)
        if len(fovs) != 3:
            raise ChannelError(f"exactly three FOV settings required, got {len(fovs)}")
        for f in fovs:
            _check_angle_deg(f, "FOV")
        object.__setattr__(self, "fov_settings", fovs)
        if not 0 <= self.active_fov_index < 3:
            raise ChannelError("active_fov_index must be 0, 1 or 2")
        if not self.area > 0:
            raise ChannelError("PD area must be positive")
        if self.refractive_index < 1:
            raise ChannelError("refractive index must be >= 1")
        if not 0 < self.filter_gain <= 1:
            raise ChannelError("filter gain must lie in (0, 1]")

    @property
    def fov_deg(self) -> float:
        return self.fov_settings[self.active_fov_index]

    def with_fov(self, index: int) -> "PhotoDetector":
        return replace(self, active_fov_index=index)

    def fov_indices_ascending(self) -> list[int]:
        return sorted(range(3), key=lambda i: self.fov_settings[i])


@dataclass(frozen=True)
class ChannelGain:
    value: float
    led_id: int
    user_id: int
    # Optical-to-electrical conversion; folded in as a plain scale factor.
    responsivity: float = field(default=1.0)

    def __post_init__(self):
        if self.value < 0:
            raise ChannelError("channel gain cannot be negative")

    @property
    def effective(self) -> float:
        return self.value * self.responsivity


def lambertian_order(semi_angle_deg: float) -> float:
    """Order ``m`` of Lambertian emission for a half-power semi-angle.

    Uses the positive convention ``m = -ln 2 / ln cos(semi_angle)`` so that
    60 degrees gives ``m = 1`` and 45 degrees gives ``m = 2``.
    """
    _check_angle_deg(semi_angle_deg, "semi-angle")
    return -math.log(2.0) / math.log(math.cos(math.radians(semi_angle_deg)))


def radiant_intensity(m: float, irradiance_angle: float) -> float:
    """Normalised Lambertian radiant intensity ``(m+1)/(2 pi) cos^m(angle)``."""
    if not m > 0:
        raise ChannelError(f"Lambertian order must be positive, got {m}")
    if not 0.0 <= irradiance_angle <= math.pi / 2:
        raise ChannelError(f"irradiance angle {irradiance_angle} outside [0, pi/2]")
    c = math.cos(irradiance_angle)
    # cos(pi/2) is ~6e-17 in floating point, not 0
    if irradiance_angle == math.pi / 2:
        c = 0.0
    return (m + 1.0) / (2.0 * math.pi) * c**m


def concentrator_gain(n: float, incidence_angle: float, fov: float) -> float:
    """Gain of a non-imaging concentrator; zero outside the field of view."""
    if n < 1:
        raise ChannelError(f"refractive index must be >= 1, got {n}")
    if not 0.0 < fov <= math.pi / 2:
        raise ChannelError(f"FOV {fov} outside (0, pi/2]")
    if incidence_angle > fov:
        return 0.0
    return n * n / math.sin(fov) ** 2


def link_angle(led_pos: Point3, user_pos: Point3) -> tuple[float, float]:
    """Return ``(distance, angle)`` for a vertically aligned link.

    The angle serves as both irradiance and incidence angle.
    """
    z = led_pos.z - user_pos.z
    d = led_pos.distance_to(user_pos)
    if d == 0.0:
        raise ChannelError("user coincides with LED")
    if z <= 0.0:
        raise ChannelError("LED must be above the receiver plane")
    return d, math.acos(min(1.0, z / d))


def los_gain(
    led: LedTransmitter,
    pd: PhotoDetector,
    led_pos: Point3,
    user_pos: Point3,
    user_id: int = -1,
) -> ChannelGain:
    d, angle = link_angle(led_pos, user_pos)
    fov = math.radians(pd.fov_deg)
    if angle > fov:
        return ChannelGain(0.0, led.id, user_id)
    m = led.lambertian_order
    value = (
        pd.area
        / d**2
        * radiant_intensity(m, angle)
        * pd.filter_gain
        * concentrator_gain(pd.refractive_index, angle, fov)
        * math.cos(angle)
    )
    return ChannelGain(value, led.id, user_id)


def simplified_gain_rank_key(
    led: LedTransmitter, pd: PhotoDetector, led_pos: Point3, user_pos: Point3
) -> float:
    """Proportional gain ``1 / (d^(m+3) sin^2 FOV)`` used only for ranking users."""
    d, _ = link_angle(led_pos, user_pos)
    m = led.lambertian_order
    return 1.0 / (d ** (m + 3.0) * math.sin(math.radians(pd.fov_deg)) ** 2)


def in_coverage(
    led: LedTransmitter,
    pd: PhotoDetector,
    led_pos: Point3,
    user_pos: Point3,
) -> bool:
    """True when the user sees the LED and lies inside its beam footprint.

    The footprint is the cone whose half-angle is the LED's active semi-angle.
    """
    try:
        _, angle = link_angle(led_pos, user_pos)
    except ChannelError:
        return False
    # 1e-12 rad slack so a user exactly on the footprint edge is inside
    if angle > math.radians(pd.fov_deg) + 1e-12:
        return False
    return angle <= math.radians(led.semi_angle_deg) + 1e-12


def footprint_radius(semi_angle_deg: float, height: float) -> float:
    """Radius on the receiver plane of a cone with the given half-angle."""
    return height * math.tan(math.radians(semi_angle_deg))
