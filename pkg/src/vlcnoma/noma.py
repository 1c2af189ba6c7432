"""Per-LED NOMA mechanics: SIC ordering, power allocation, SINR, rates and BER."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


class NomaError(ValueError):
    """Raised for invalid allocation parameters or inconsistent groups."""


@dataclass(frozen=True)
class UserGroup:
    """Users connected to one LED, with a flag for those in a beam overlap."""

    led_id: int
    members: tuple[int, ...]
    edge_flags: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "edge_flags", tuple(bool(f) for f in self.edge_flags))
        if len(set(self.members)) != len(self.members):
            raise NomaError(f"duplicate user ids in group of LED {self.led_id}")
        if len(self.edge_flags) != len(self.members):
            raise NomaError("edge_flags must align with members")


@dataclass(frozen=True)
class DecodingOrder:
    """SIC order of one LED group; index 0 is decoded first."""

    led_id: int
    ordering: tuple[int, ...]

    def position(self, user_id: int) -> int:
        """1-based SIC position of ``user_id``."""
        try:
            return self.ordering.index(user_id) + 1
        except ValueError:
            raise NomaError(f"user {user_id} not in group of LED {self.led_id}") from None

    def __len__(self):
        return len(self.ordering)

    def __contains__(self, user_id):
        return user_id in self.ordering


@dataclass(frozen=True)
class PowerAllocation:
    led_id: int
    ordering: tuple[int, ...]
    powers: tuple[float, ...]
    budget: float

    def power_of(self, user_id: int) -> float:
        return self.powers[self.ordering.index(user_id)]

    def position(self, user_id: int) -> int:
        return self.ordering.index(user_id) + 1

    def __contains__(self, user_id):
        return user_id in self.ordering


@dataclass
class LinkRealization:
    """What one receiver sees: gain from every LED it hears, plus its noise."""

    user_id: int
    gains: dict[int, float]
    noise_variance: float

    def __post_init__(self):
        if any(g < 0 for g in self.gains.values()):
            raise NomaError(f"negative gain for user {self.user_id}")
        if not self.noise_variance > 0:
            raise NomaError(f"noise variance must be positive for user {self.user_id}")


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise variance.

    With ``shot_coefficient == 0`` and ``thermal_variance is None`` the
    variance is the flat ``n0 * bandwidth``. Otherwise it is
    ``shot_coefficient * received_power + thermal_variance``.
    """

    n0: float = 1e-21
    bandwidth: float = 10e6
    shot_coefficient: float = 0.0
    thermal_variance: float | None = None

    def __post_init__(self):
        if not self.n0 > 0 or not self.bandwidth > 0:
            raise NomaError("noise density and bandwidth must be positive")
        if self.shot_coefficient < 0:
            raise NomaError("shot coefficient must be non-negative")
        if self.thermal_variance is not None and not self.thermal_variance > 0:
            raise NomaError("thermal variance must be positive")

    @property
    def two_term(self) -> bool:
        return self.shot_coefficient > 0 or self.thermal_variance is not None

    def variance(self, received_power: float = 0.0) -> float:
        if not self.two_term:
            return self.n0 * self.bandwidth
        thermal = self.thermal_variance if self.thermal_variance is not None else self.n0 * self.bandwidth
        return self.shot_coefficient * received_power + thermal


@dataclass(frozen=True)
class AllocationScheme:
    """``static`` (geometric with ratio ``alpha``) or ``grpa``."""

    kind: str = "grpa"
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "static":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise NomaError(f"static allocation factor alpha must lie in (0, 1), got {self.alpha}")
        elif self.kind == "grpa":
            if self.alpha is not None:
                raise NomaError("grpa takes no alpha")
        else:
            raise NomaError(f"unknown allocation scheme {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "AllocationScheme":
        text = text.strip().lower()
        if text == "grpa":
            return cls("grpa")
        kind, sep, value = text.partition(":")
        if kind != "static" or not sep:
            raise NomaError(f"allocation must be 'grpa' or 'static:<alpha>', got {text!r}")
        try:
            alpha = float(value)
        except ValueError:
            raise NomaError(f"bad alpha in {text!r}") from None
        return cls("static", alpha)

    @property
    def label(self) -> str:
        return "grpa" if self.kind == "grpa" else f"static:{self.alpha:g}"


# --- ordering --------------------------------------------------------------


def decoding_order(group: UserGroup, distances: Sequence[float]) -> DecodingOrder:
    """Centre users by decreasing distance, then edge users by decreasing distance.

    Ties are broken by ascending user id.
    """
    if len(distances) != len(group.members):
        raise NomaError("one distance per group member required")
    if any(not d > 0 for d in distances):
        raise NomaError("distances must be positive")
    rows = list(zip(group.members, group.edge_flags, distances))
    rows.sort(key=lambda r: (r[1], -r[2], r[0]))
    return DecodingOrder(group.led_id, tuple(r[0] for r in rows))


# --- power allocation ------------------------------------------------------


def _normalise(log_weights: np.ndarray, budget: float) -> tuple[float, ...]:
    w = np.exp(log_weights - log_weights.max())
    return tuple(float(p) for p in budget * w / w.sum())


def static_allocation(order: DecodingOrder, alpha: float, budget: float) -> PowerAllocation:
    """Geometric allocation ``P_i = alpha * P_{i-1}`` summing to ``budget``."""
    if not 0.0 < alpha < 1.0:
        raise NomaError(f"power allocation factor alpha must lie in (0, 1), got {alpha}")
    if not budget > 0:
        raise NomaError("budget must be positive")
    n = len(order)
    if n == 0:
        raise NomaError("cannot allocate power to an empty group")
    powers = _normalise(np.arange(n) * math.log(alpha), budget)
    return PowerAllocation(order.led_id, order.ordering, powers, float(budget))


def grpa_allocation(order: DecodingOrder, gains: Sequence[float], budget: float) -> PowerAllocation:
    """Gain-ratio allocation ``P_i = (h_1 / h_i)^i P_{i-1}`` summing to ``budget``.

    ``gains`` are aligned with the decoding order. The recurrence is evaluated
    in the log domain so large groups with strong ratios do not overflow.
    """
    n = len(order)
    if n == 0:
        raise NomaError("cannot allocate power to an empty group")
    if len(gains) != n:
        raise NomaError("one gain per ordered user required")
    if not budget > 0:
        raise NomaError("budget must be positive")
    h = np.asarray(gains, dtype=float)
    if np.any(h <= 0):
        raise NomaError("grpa needs strictly positive gains; zero-gain users must leave the group")
    log_ratio = math.log(h[0]) - np.log(h)
    idx = np.arange(1, n + 1)
    steps = idx * log_ratio
    steps[0] = 0.0
    powers = _normalise(np.cumsum(steps), budget)
    return PowerAllocation(order.led_id, order.ordering, powers, float(budget))


def allocate(
    order: DecodingOrder, scheme: AllocationScheme, budget: float, gains: Sequence[float] | None = None
) -> PowerAllocation:
    if scheme.kind == "static":
        return static_allocation(order, scheme.alpha, budget)
    if gains is None:
        raise NomaError("grpa needs per-user gains")
    return grpa_allocation(order, gains, budget)


# --- SINR and rates --------------------------------------------------------


def sinr(
    user_id: int,
    link: LinkRealization,
    allocations: Mapping[int, PowerAllocation],
    squared: bool = False,
) -> float:
    """Sum over serving LEDs of the per-LED SINR after perfect SIC.

    Interference comes only from users later than ``user_id`` in each
    LED's decoding order. With ``squared=True`` signal and interference are
    taken in the electrical domain, ``(h P)^2``.
    """
    total = 0.0
    served = False
    for led_id, alloc in allocations.items():
        if user_id not in alloc:
            continue
        served = True
        h = link.gains.get(led_id, 0.0)
        k = alloc.position(user_id)
        signal = h * alloc.powers[k - 1]
        later = [h * p for p in alloc.powers[k:]]
        if squared:
            total += signal**2 / (sum(x * x for x in later) + link.noise_variance)
        else:
            total += signal / (sum(later) + link.noise_variance)
    if not served:
        raise NomaError(f"user {user_id} is not served by any LED")
    return total


def user_rate(gamma: float, bandwidth: float) -> float:
    if gamma < 0:
        raise NomaError("SINR cannot be negative")
    if not bandwidth > 0:
        raise NomaError("bandwidth must be positive")
    return bandwidth * math.log2(1.0 + gamma)


def sum_rate(
    users: Iterable[int],
    links: Mapping[int, LinkRealization],
    allocations: Mapping[int, PowerAllocation],
    bandwidth: float,
    squared: bool = False,
) -> float:
    return sum(user_rate(sinr(u, links[u], allocations, squared), bandwidth) for u in users)


# --- Monte-Carlo BER -------------------------------------------------------


@dataclass
class BerScenario:
    """Snapshot of a network for link-level simulation.

    ``links`` lists the receivers to evaluate; every user appearing in an
    allocation transmits an independent OOK stream.
    """

    allocations: dict[int, PowerAllocation]
    links: dict[int, LinkRealization]

    def transmitters(self) -> list[int]:
        ids = set()
        for alloc in self.allocations.values():
            ids.update(alloc.ordering)
        return sorted(ids)


@dataclass
class BerResult:
    per_user: dict[int, float]
    errors: dict[int, int]
    num_symbols: int

    @property
    def average(self) -> float:
        if not self.per_user:
            return 0.0
        return float(np.mean(list(self.per_user.values())))


@dataclass
class _ReceiverPlan:
    user_id: int
    # (user id, amplitude) for every stream reaching the receiver
    amplitudes: dict[int, float]
    sequence: list[int]  # earlier users in detection order
    sigma: float


def _receiver_plan(uid: int, scenario: BerScenario) -> _ReceiverPlan:
    link = scenario.links[uid]
    amplitudes: dict[int, float] = {}
    first_pos: dict[int, int] = {}
    for led_id, alloc in scenario.allocations.items():
        h = link.gains.get(led_id, 0.0)
        if h > 0 or uid in alloc:
            for j, p in zip(alloc.ordering, alloc.powers):
                amplitudes[j] = amplitudes.get(j, 0.0) + h * p
        if uid in alloc:
            own = alloc.position(uid)
            for pos, j in enumerate(alloc.ordering[: own - 1], start=1):
                first_pos[j] = min(pos, first_pos.get(j, pos))
    amplitudes.setdefault(uid, 0.0)
    sequence = sorted(first_pos, key=lambda j: (first_pos[j], j))
    return _ReceiverPlan(uid, amplitudes, sequence, math.sqrt(link.noise_variance))


# Beyond this many undecoded streams the constellation is not enumerated.
MAX_ENUMERATED_STREAMS = 14


def _ml_decide(residual: np.ndarray, a: float, others: list[float]) -> np.ndarray:
    """Decide one OOK bit with the undecoded streams ``others`` as interference.

    The interference is a discrete superposition, so the decision picks the
    bit of the nearest point in the joint constellation (max-log ML). Very
    large constellations fall back to a Gaussian model of the interference.
    """
    if len(others) > MAX_ENUMERATED_STREAMS:
        return residual > 0.5 * (a + sum(others))
    levels = np.zeros(1)
    for amp in others:
        levels = np.concatenate([levels, levels + amp])
    points = np.concatenate([levels, levels + a])
    bits = np.concatenate([np.zeros(levels.size, bool), np.ones(levels.size, bool)])
    order = np.argsort(points, kind="stable")
    points, bits = points[order], bits[order]
    hi = np.clip(np.searchsorted(points, residual), 1, points.size - 1)
    lo = hi - 1
    pick = np.where(residual - points[lo] <= points[hi] - residual, lo, hi)
    return bits[pick]


def _sic_detect(plan: _ReceiverPlan, y: np.ndarray) -> np.ndarray:
    """SIC on the received samples; returns own-symbol decisions."""
    residual = y.copy()
    pending = {j: a for j, a in plan.amplitudes.items() if a > 0 or j == plan.user_id}
    for j in plan.sequence:
        a = pending.pop(j, 0.0)
        if a == 0.0:
            continue
        x_hat = _ml_decide(residual, a, list(pending.values()))
        residual -= a * x_hat
    a = pending.pop(plan.user_id)
    if a == 0.0:
        return residual > 0.5 * sum(pending.values())
    return _ml_decide(residual, a, list(pending.values()))


def _ber_chunk(plans, tx_ids, n, seed_seq):
    rng = np.random.default_rng(seed_seq)
    symbols = rng.integers(0, 2, size=(len(tx_ids), n), dtype=np.int8)
    noise = rng.standard_normal(size=(len(plans), n))
    row = {u: k for k, u in enumerate(tx_ids)}
    errors = {}
    for r, plan in enumerate(plans):
        y = plan.sigma * noise[r]
        for j, a in plan.amplitudes.items():
            if a and j in row:
                y = y + a * symbols[row[j]]
        own = plan.user_id
        truth = symbols[row[own]] if own in row else np.zeros(n, dtype=np.int8)
        x_hat = _sic_detect(plan, y)
        errors[own] = int(np.count_nonzero(x_hat != truth.astype(bool)))
    return errors


def monte_carlo_ber(
    scenario: BerScenario,
    num_symbols: int,
    rng_seed: int,
    chunk_size: int = 16384,
    workers: int = 1,
) -> BerResult:
    """Estimate per-user BER of OOK superposition with nearest-point SIC receivers.

    Symbols are split into fixed-size chunks, each driven by its own child of
    ``SeedSequence(rng_seed)``. The chunking does not depend on ``workers``,
    so results are identical for serial and parallel execution.
    """
    if num_symbols < 1:
        raise NomaError("num_symbols must be >= 1")
    if not isinstance(rng_seed, (int, np.integer)) or rng_seed < 0:
        raise NomaError(f"rng_seed must be a non-negative integer, got {rng_seed!r}")
    if not scenario.links:
        raise NomaError("scenario has no receivers")
    tx_ids = scenario.transmitters()
    plans = [_receiver_plan(uid, scenario) for uid in sorted(scenario.links)]
    sizes = [chunk_size] * (num_symbols // chunk_size)
    if num_symbols % chunk_size:
        sizes.append(num_symbols % chunk_size)
    children = np.random.SeedSequence(int(rng_seed)).spawn(len(sizes))
    jobs = list(zip(sizes, children))

    def run(job):
        return _ber_chunk(plans, tx_ids, job[0], job[1])

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    errors = {p.user_id: sum(part[p.user_id] for part in parts) for p in plans}
    per_user = {u: e / num_symbols for u, e in errors.items()}
    return BerResult(per_user, errors, num_symbols)


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def ook_ber_theory(amplitude: float, sigma: float) -> float:
    """Exact BER of a single equiprobable OOK stream with a midpoint threshold."""
    return q_function(amplitude / (2.0 * sigma))
