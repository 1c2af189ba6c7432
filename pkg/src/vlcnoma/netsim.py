"""Time-stepped NOMA-VLC network simulation with mobile users."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import noma
from .channel import (
    LedTransmitter,
    PhotoDetector,
    Point3,
    footprint_radius,
    in_coverage,
    los_gain,
)

TUNING_MODES = ("none", "angle", "fov")
MAX_SPEED = 2.0  # m/s


class SimError(ValueError):
    """Raised for invalid simulation configuration or state."""


@dataclass(frozen=True)
class Room:
    width: float = 6.0
    depth: float = 6.0
    height: float = 3.0
    leds: tuple[LedTransmitter, ...] = ()
    receiver_plane_height: float = 0.85

    def __post_init__(self):
        object.__setattr__(self, "leds", tuple(self.leds))
        if min(self.width, self.depth, self.height) <= 0:
            raise SimError("room dimensions must be positive")
        if not 0 <= self.receiver_plane_height < self.height:
            raise SimError("receiver plane must lie below the ceiling")
        for led in self.leds:
            if not math.isclose(led.position.z, self.height):
                raise SimError(f"LED {led.id} is not at ceiling height")
        if len({led.id for led in self.leds}) != len(self.leds):
            raise SimError("duplicate LED ids")

    @property
    def link_height(self) -> float:
        return self.height - self.receiver_plane_height

    def led(self, led_id: int) -> LedTransmitter:
        for led in self.leds:
            if led.id == led_id:
                return led
        raise SimError(f"no LED with id {led_id}")

    def with_leds(self, leds: Sequence[LedTransmitter]) -> "Room":
        return replace(self, leds=tuple(leds))

    def contains(self, p: Point3) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.depth

    @classmethod
    def default(
        cls,
        spacing: float | None = None,
        overlap: float = 0.1,
        semi_angles: tuple[float, float] = (45.0, 60.0),
        active_index: int = 0,
        power: float = 10.0,
        width: float = 6.0,
        depth: float = 6.0,
        height: float = 3.0,
        receiver_plane_height: float = 0.85,
    ) -> "Room":
        """Two LEDs symmetric about the room centre along x.

        Without an explicit ``spacing`` the LEDs are placed so that their
        footprints under the first semi-angle setting overlap by ``overlap``
        times the footprint radius.
        """
        if spacing is None:
            r = footprint_radius(semi_angles[0], height - receiver_plane_height)
            spacing = (2.0 - overlap) * r
        cx, cy = width / 2.0, depth / 2.0
        leds = tuple(
            LedTransmitter(
                id=k + 1,
                position=Point3(cx + sign * spacing / 2.0, cy, height),
                semi_angle_settings=semi_angles,
                active_setting_index=active_index,
                power_budget=power,
            )
            for k, sign in enumerate((-1.0, 1.0))
        )
        return cls(width, depth, height, leds, receiver_plane_height)


@dataclass(frozen=True)
class UserState:
    id: int
    position: Point3
    heading: float = 0.0
    speed: float = 0.0
    pd: PhotoDetector = field(default_factory=PhotoDetector)
    associations: frozenset = frozenset()
    handover_count: int = 0
    serving: int | None = None  # kept through outages until re-association
    walk_clock: float = 0.0  # seconds until the next heading/speed draw

    @property
    def is_edge(self) -> bool:
        return len(self.associations) == 2

    @property
    def in_outage(self) -> bool:
        return not self.associations


@dataclass(frozen=True)
class SimConfig:
    time_step: float = 0.1
    total_time: float = 100.0
    tuning_mode: str = "none"
    fov_handover_avoidance: bool = False
    allocation: noma.AllocationScheme = field(default_factory=noma.AllocationScheme)
    rng_seed: int = 0
    walk_epoch: float = 1.0
    max_speed: float = MAX_SPEED
    fixed_semi_angle: float = 45.0
    fixed_fov: float = 50.0
    noise: noma.NoiseModel = field(default_factory=noma.NoiseModel)
    electrical_sinr: bool = False
    ber_symbols: int = 0  # 0 disables BER sampling
    ber_every: int = 0  # sample BER every k steps (0: once, at the first step serving anyone)

    def __post_init__(self):
        if not self.time_step > 0:
            raise SimError("time_step must be positive")
        if self.total_time < self.time_step - 1e-12:
            raise SimError("total_time must be at least one time_step")
        if self.tuning_mode not in TUNING_MODES:
            raise SimError(f"tuning_mode must be one of {TUNING_MODES}, got {self.tuning_mode!r}")
        if not self.walk_epoch > 0:
            raise SimError("walk_epoch must be positive")
        if not 0 <= self.max_speed <= MAX_SPEED:
            raise SimError(f"max_speed must lie in [0, {MAX_SPEED}]")
        if self.ber_symbols < 0 or self.ber_every < 0:
            raise SimError("BER sampling parameters must be non-negative")
        if self.rng_seed < 0:
            raise SimError("rng_seed must be non-negative")

    @property
    def num_steps(self) -> int:
        return max(1, int(round(self.total_time / self.time_step)))


@dataclass
class StepMetrics:
    time: float
    sum_rate: float
    sinr: dict[int, float]
    rate: dict[int, float]
    handovers: int  # cumulative over all users
    outages: int
    avg_ber: float | None = None


@dataclass
class SimMetrics:
    steps: list[StepMetrics] = field(default_factory=list)

    @property
    def sum_rate(self) -> list[float]:
        return [s.sum_rate for s in self.steps]

    @property
    def handovers(self) -> list[int]:
        return [s.handovers for s in self.steps]

    @property
    def mean_sum_rate(self) -> float:
        return float(np.mean(self.sum_rate)) if self.steps else 0.0

    @property
    def total_handovers(self) -> int:
        return self.steps[-1].handovers if self.steps else 0

    @property
    def mean_ber(self) -> float | None:
        samples = [s.avg_ber for s in self.steps if s.avg_ber is not None]
        return float(np.mean(samples)) if samples else None


@dataclass
class SimState:
    room: Room
    users: list[UserState]
    rng: np.random.Generator
    time: float = 0.0
    step_index: int = 0
    ber_sampled: bool = False


# --- mobility --------------------------------------------------------------


def _reflect(x: float, v: float, upper: float) -> tuple[float, float]:
    """Fold ``x`` into [0, upper] by mirror reflection, flipping ``v`` per bounce."""
    while x < 0.0 or x > upper:
        if x < 0.0:
            x = -x
        else:
            x = 2.0 * upper - x
        v = -v
    return x, v


def random_walk_step(
    user: UserState,
    dt: float,
    room: Room,
    rng: np.random.Generator,
    walk_epoch: float = 1.0,
    max_speed: float = MAX_SPEED,
) -> UserState:
    if not dt > 0:
        raise SimError("dt must be positive")
    heading, speed, clock = user.heading, user.speed, user.walk_clock
    if clock <= 1e-9:
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        speed = float(rng.uniform(0.0, max_speed))
        clock = walk_epoch
    vx, vy = speed * math.cos(heading), speed * math.sin(heading)
    x, vx = _reflect(user.position.x + vx * dt, vx, room.width)
    y, vy = _reflect(user.position.y + vy * dt, vy, room.depth)
    if speed > 0:
        heading = math.atan2(vy, vx) % (2.0 * math.pi)
    return replace(
        user,
        position=Point3(x, y, user.position.z),
        heading=heading,
        speed=speed,
        walk_clock=clock - dt,
    )


# --- association and tuning ------------------------------------------------


def associate(user: UserState, room: Room) -> frozenset:
    return frozenset(
        led.id for led in room.leds if in_coverage(led, user.pd, led.position, user.position)
    )


def _nearest(led_ids, room: Room, pos: Point3) -> int | None:
    if not led_ids:
        return None
    return min(led_ids, key=lambda i: (room.led(i).position.horizontal_distance_to(pos), i))


def _footprints_overlap(a: LedTransmitter, b: LedTransmitter, height: float) -> bool:
    ra = footprint_radius(a.semi_angle_deg, height)
    rb = footprint_radius(b.semi_angle_deg, height)
    return a.position.horizontal_distance_to(b.position) < ra + rb


def apply_angle_tuning(room: Room, users: Sequence[UserState]) -> Room:
    """Narrow each LED's beam when that removes overlap without dropping users.

    An LED switches to its narrow setting only if its narrow footprint is
    disjoint from every other LED's narrow footprint and every user it
    currently covers under its wide setting stays covered. Otherwise it
    uses its wide setting.
    """
    h = room.link_height
    narrow = [led.with_setting(led.narrowest_index()) for led in room.leds]
    wide = [led.with_setting(led.widest_index()) for led in room.leds]
    tuned = []
    for k, led in enumerate(room.leds):
        disjoint = all(
            not _footprints_overlap(narrow[k], narrow[j], h) for j in range(len(narrow)) if j != k
        )
        keeps_users = all(
            in_coverage(narrow[k], u.pd, led.position, u.position)
            for u in users
            if led.id in u.associations or in_coverage(wide[k], u.pd, led.position, u.position)
        )
        tuned.append(narrow[k] if disjoint and keeps_users else wide[k])
    return room.with_leds(tuned)


def _coverage_by_fov(user: UserState, room: Room) -> dict[int, frozenset]:
    out = {}
    for idx in user.pd.fov_indices_ascending():
        pd = user.pd.with_fov(idx)
        out[idx] = frozenset(
            led.id for led in room.leds if in_coverage(led, pd, led.position, user.position)
        )
    return out


def _moving_outward(user: UserState, led: LedTransmitter) -> bool:
    dx = user.position.x - led.position.x
    dy = user.position.y - led.position.y
    radial = dx * math.cos(user.heading) + dy * math.sin(user.heading)
    return user.speed > 0 and radial > 0


def select_fov(user: UserState, room: Room, handover_avoidance: bool = False) -> int:
    """FOV index for one user under the gain/handover policy."""
    cover = _coverage_by_fov(user, room)
    ascending = user.pd.fov_indices_ascending()
    widest = ascending[-1]
    if not cover[widest]:
        return widest
    if handover_avoidance and user.serving is not None and user.serving in cover[widest]:
        if _moving_outward(user, room.led(user.serving)):
            return widest
    nearest = _nearest(cover[widest], room, user.position)
    if len(cover[widest]) >= 2:
        for idx in ascending:
            if cover[idx] == {nearest}:
                return idx
        return next(idx for idx in ascending if cover[idx])
    return next(idx for idx in ascending if nearest in cover[idx])


def apply_fov_tuning(
    users: Sequence[UserState], room: Room, handover_avoidance: bool = False
) -> list[UserState]:
    return [
        replace(u, pd=u.pd.with_fov(select_fov(u, room, handover_avoidance))) for u in users
    ]


def handover_check(
    user: UserState,
    prev_associations: frozenset,
    new_associations: frozenset,
    room: Room,
    sticky: bool = False,
) -> tuple[UserState, int]:
    """Update the serving LED and count a handover when it changes.

    The serving LED is the nearest associated LED. With ``sticky`` the user
    stays on its current LED for as long as that LED remains associated.
    With no coverage at all the old server is kept pending, so re-entering
    it is not a handover.
    """
    serving = user.serving
    events = 0
    if new_associations:
        if sticky and serving in new_associations:
            target = serving
        else:
            target = _nearest(new_associations, room, user.position)
        if serving is not None and target != serving:
            events = 1
        serving = target
    return (
        replace(
            user,
            associations=frozenset(new_associations),
            serving=serving,
            handover_count=user.handover_count + events,
        ),
        events,
    )


# --- per-step NOMA ---------------------------------------------------------


def link_gain(led: LedTransmitter, user: UserState) -> float:
    if not in_coverage(led, user.pd, led.position, user.position):
        return 0.0
    return los_gain(led, user.pd, led.position, user.position, user.id).value


def build_network(room: Room, users: Sequence[UserState], config: SimConfig):
    """Group users per LED, order them, allocate power and build link realizations."""
    by_id = {u.id: u for u in users}
    gains = {u.id: {led.id: link_gain(led, u) for led in room.leds} for u in users}
    allocations: dict[int, noma.PowerAllocation] = {}
    for led in room.leds:
        members = sorted(u.id for u in users if led.id in u.associations)
        if not members:
            continue
        group = noma.UserGroup(led.id, tuple(members), tuple(by_id[m].is_edge for m in members))
        dists = [led.position.distance_to(by_id[m].position) for m in members]
        order = noma.decoding_order(group, dists)
        ordered_gains = [gains[m][led.id] for m in order.ordering]
        allocations[led.id] = noma.allocate(order, config.allocation, led.power_budget, ordered_gains)
    links = {}
    for u in users:
        if u.in_outage:
            continue
        g = {l: v for l, v in gains[u.id].items() if v > 0}
        received = sum(v * room.led(l).power_budget for l, v in g.items())
        links[u.id] = noma.LinkRealization(u.id, g, config.noise.variance(received))
    return allocations, links


def snapshot_scenario(state: SimState, config: SimConfig) -> noma.BerScenario:
    allocations, links = build_network(state.room, state.users, config)
    return noma.BerScenario(allocations, links)


# --- driver ----------------------------------------------------------------


def initial_room(room: Room, config: SimConfig) -> Room:
    """LED settings at t=0: the fixed angle, or the wide setting when tuning angles."""
    leds = []
    for led in room.leds:
        if config.tuning_mode == "angle":
            leds.append(led.with_setting(led.widest_index()))
        else:
            idx = min(range(2), key=lambda i: abs(led.semi_angle_settings[i] - config.fixed_semi_angle))
            leds.append(led.with_setting(idx))
    return room.with_leds(leds)


def place_users(
    num_users: int, room: Room, rng: np.random.Generator, pd: PhotoDetector | None = None
) -> list[UserState]:
    """Uniform placement on the receiver plane."""
    pd = pd or PhotoDetector()
    users = []
    for uid in range(num_users):
        x = float(rng.uniform(0.0, room.width))
        y = float(rng.uniform(0.0, room.depth))
        users.append(UserState(uid, Point3(x, y, room.receiver_plane_height), pd=pd))
    return users


def init_state(config: SimConfig, room: Room, users_init: Sequence[UserState]) -> SimState:
    rng = np.random.default_rng(config.rng_seed)
    room = initial_room(room, config)
    users = []
    for u in users_init:
        if not room.contains(u.position):
            raise SimError(f"user {u.id} starts outside the room")
        if not math.isclose(u.position.z, room.receiver_plane_height):
            raise SimError(f"user {u.id} is not on the receiver plane")
        idx = min(range(3), key=lambda i: abs(u.pd.fov_settings[i] - config.fixed_fov))
        u = replace(u, pd=u.pd.with_fov(idx))
        assoc = associate(u, room)
        users.append(replace(u, associations=assoc, serving=_nearest(assoc, room, u.position)))
    return SimState(room, users, rng)


def step(state: SimState, config: SimConfig) -> tuple[SimState, StepMetrics]:
    """Advance one time step: mobility, tuning, association, NOMA, metrics."""
    dt = config.time_step
    users = [
        random_walk_step(u, dt, state.room, state.rng, config.walk_epoch, config.max_speed)
        for u in state.users
    ]
    room = state.room
    if config.tuning_mode == "angle":
        room = apply_angle_tuning(room, users)
    elif config.tuning_mode == "fov":
        users = apply_fov_tuning(users, room, config.fov_handover_avoidance)

    updated = []
    for u in users:
        sticky = config.tuning_mode == "fov" and config.fov_handover_avoidance
        u, _ = handover_check(u, u.associations, associate(u, room), room, sticky)
        updated.append(u)
    users = updated

    allocations, links = build_network(room, users, config)
    sinrs = {
        uid: noma.sinr(uid, link, allocations, config.electrical_sinr) for uid, link in links.items()
    }
    rates = {uid: noma.user_rate(g, config.noise.bandwidth) for uid, g in sinrs.items()}
    for u in users:
        rates.setdefault(u.id, 0.0)

    avg_ber = None
    k = state.step_index
    due = (not state.ber_sampled) if config.ber_every == 0 else k % config.ber_every == 0
    if config.ber_symbols and links and due:
        seed = int(np.random.SeedSequence([config.rng_seed, k]).generate_state(1)[0])
        res = noma.monte_carlo_ber(noma.BerScenario(allocations, links), config.ber_symbols, seed)
        avg_ber = res.average

    new_state = SimState(
        room, users, state.rng, state.time + dt, k + 1, state.ber_sampled or avg_ber is not None
    )
    metrics = StepMetrics(
        time=new_state.time,
        sum_rate=float(sum(rates.values())),
        sinr=sinrs,
        rate=rates,
        handovers=sum(u.handover_count for u in users),
        outages=sum(1 for u in users if u.in_outage),
        avg_ber=avg_ber,
    )
    return new_state, metrics


def run(config: SimConfig, room: Room, users_init: Sequence[UserState]) -> SimMetrics:
    state = init_state(config, room, users_init)
    metrics = SimMetrics()
    for _ in range(config.num_steps):
        state, m = step(state, config)
        metrics.steps.append(m)
    return metrics


def run_random(config: SimConfig, num_users: int, room: Room | None = None) -> SimMetrics:
    """Run with ``num_users`` placed uniformly using a stream derived from the seed."""
    room = room or Room.default()
    place_rng = np.random.default_rng(np.random.SeedSequence([config.rng_seed, 0x5EED]))
    return run(config, room, place_users(num_users, room, place_rng))
