"""End-to-end acceptance criteria 1-8.

Each test prints one ``ACCEPTANCE k: PASS|FAIL`` line and asserts the
outcome. Sweep-based criteria go through the same harness as the CLI.
"""

import math
from collections import defaultdict
from dataclasses import replace

import numpy as np
import pytest

from vlcnoma import noma
from vlcnoma.channel import LedTransmitter, PhotoDetector, Point3, lambertian_order, los_gain
from vlcnoma.expcli import cli
from vlcnoma.expcli.config import parse_config
from vlcnoma.expcli.sweep import run_sweep

pytestmark = pytest.mark.acceptance

SEEDS = 20
GRPA = noma.AllocationScheme("grpa")
STATIC_04 = noma.AllocationScheme("static", 0.4)


def seed_means(rows, metric):
    acc = defaultdict(list)
    for r in rows:
        acc[(r.scenario, r.allocation, r.num_users)].append(getattr(r, metric))
    return {k: float(np.mean(v)) for k, v in acc.items()}


def sweep(users, scenarios, allocations, total_time, ber_symbols=0, seed=2024):
    spec = parse_config()
    spec = replace(
        spec,
        base=replace(spec.base, total_time=total_time),
        users=tuple(users),
        scenarios=tuple(scenarios),
        allocations=tuple(allocations),
        repetitions=SEEDS,
        base_seed=seed,
        ber_symbols=ber_symbols,
    )
    return run_sweep(spec)


# --- 1 ---------------------------------------------------------------------


def _reference_gain(area, n, ts, fov_deg, semi_deg, led_xyz, user_xyz):
    dx, dy, dz = (a - b for a, b in zip(led_xyz, user_xyz))
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    cos_psi = dz / d
    if cos_psi < math.cos(math.radians(fov_deg)):
        return 0.0
    m = math.log(2) / -math.log(math.cos(math.radians(semi_deg)))
    intensity = (m + 1) / (2 * math.pi) * cos_psi**m
    conc = (n / math.sin(math.radians(fov_deg))) ** 2
    return area * intensity * ts * conc * cos_psi / d**2


def test_criterion_1_channel_oracle(acceptance_report):
    rng = np.random.default_rng(1)
    worst = 0.0
    zeros_agree = True
    for _ in range(100):
        semi = tuple(rng.uniform(10, 80, size=2))
        led = LedTransmitter(1, Point3(*rng.uniform(0, 6, 2), 3.0), semi, int(rng.integers(2)))
        pd = PhotoDetector(
            area=rng.uniform(1e-5, 1e-3),
            fov_settings=tuple(rng.uniform(5, 85, size=3)),
            active_fov_index=int(rng.integers(3)),
            refractive_index=rng.uniform(1.0, 2.0),
            filter_gain=rng.uniform(0.1, 1.0),
        )
        user = Point3(*rng.uniform(0, 6, 2), rng.uniform(0, 2))
        got = los_gain(led, pd, led.position, user).value
        want = _reference_gain(
            pd.area, pd.refractive_index, pd.filter_gain, pd.fov_deg, led.semi_angle_deg,
            (led.position.x, led.position.y, 3.0), (user.x, user.y, user.z),
        )
        if want == 0.0:
            zeros_agree &= got == 0.0
        else:
            worst = max(worst, abs(got - want) / want)
    m60, m45 = lambertian_order(60.0), lambertian_order(45.0)
    ok = worst <= 1e-12 and zeros_agree and abs(m60 - 1) <= 1e-12 and abs(m45 - 2) <= 1e-12
    acceptance_report(1, ok, f"max rel err {worst:.2e}, m(60)={m60!r}, m(45)={m45!r}")
    assert ok


# --- 2 ---------------------------------------------------------------------


def test_criterion_2_allocation_invariants(acceptance_report):
    rng = np.random.default_rng(2)
    cases = 10_000
    failures = defaultdict(int)
    for _ in range(cases):
        n = int(rng.integers(1, 11))
        order = noma.DecodingOrder(1, tuple(range(n)))
        budget = float(rng.uniform(0.1, 50))
        alpha = float(rng.uniform(0.01, 0.99))
        gains = rng.uniform(1e-8, 1e-4, n)

        st = noma.static_allocation(order, alpha, budget)
        gr = noma.grpa_allocation(order, gains, budget)
        for a in (st, gr):
            if abs(sum(a.powers) - budget) > 1e-9 * budget:
                failures["sum"] += 1
        ratios = np.divide(st.powers[1:], st.powers[:-1])
        if n > 1 and not np.allclose(ratios, alpha, rtol=1e-9, atol=0):
            failures["geometric"] += 1

        eq = noma.grpa_allocation(order, [gains[0]] * n, budget)
        if not np.allclose(eq.powers, budget / n, rtol=1e-9, atol=0):
            failures["uniform"] += 1

        inc = noma.grpa_allocation(order, np.sort(gains), budget)
        if np.any(np.diff(inc.powers) > 1e-12 * budget):
            failures["monotone"] += 1

        c = float(10 ** rng.uniform(-3, 3))
        sc = noma.grpa_allocation(order, gains * c, budget)
        if not np.allclose(sc.powers, gr.powers, rtol=1e-9, atol=0):
            failures["scale"] += 1
    ok = not failures
    acceptance_report(2, ok, f"{cases} random cases, failures={dict(failures) or 'none'}")
    assert ok


# --- 3 ---------------------------------------------------------------------


def test_criterion_3_decoding_order(acceptance_report):
    rng = np.random.default_rng(3)
    bad = 0
    cases = 5_000
    for _ in range(cases):
        n = int(rng.integers(1, 12))
        ids = tuple(int(i) for i in rng.permutation(100)[:n])
        edge = tuple(bool(b) for b in rng.random(n) < 0.3)
        # coarse distances so ties are common
        dist = [float(d) for d in rng.integers(1, 5, n) * 0.5]
        order = noma.decoding_order(noma.UserGroup(1, ids, edge), dist)
        info = {u: (e, d) for u, e, d in zip(ids, edge, dist)}
        seq = [(info[u][0], info[u][1], u) for u in order.ordering]
        flags = [s[0] for s in seq]
        if flags != sorted(flags):  # centre block, then edge block
            bad += 1
            continue
        for a, b in zip(seq, seq[1:]):
            if a[0] == b[0] and (a[1] < b[1] or (a[1] == b[1] and a[2] > b[2])):
                bad += 1
                break
    ok = bad == 0
    acceptance_report(3, ok, f"{cases} random groups, violations={bad}")
    assert ok


# --- 4 ---------------------------------------------------------------------


def test_criterion_4_sinr_degenerate(acceptance_report):
    h, p, s2 = 3.7e-6, 10.0, 1e-14
    single = noma.sinr(1, noma.LinkRealization(1, {1: h}, s2), {1: noma.PowerAllocation(1, (1,), (p,), p)})
    e1 = abs(single - h * p / s2) / (h * p / s2)

    alloc = noma.PowerAllocation(1, (1, 2, 3), (6.0, 3.0, 1.0), 10.0)
    last = noma.sinr(3, noma.LinkRealization(3, {1: h}, s2), {1: alloc})
    e2 = abs(last - h * 1.0 / s2) / (h / s2)

    a1 = noma.PowerAllocation(1, (1, 9), (7.0, 3.0), 10.0)
    a2 = noma.PowerAllocation(2, (2, 9), (7.0, 3.0), 10.0)
    link = noma.LinkRealization(9, {1: h, 2: h}, s2)
    per_led = noma.sinr(9, link, {1: a1})
    both = noma.sinr(9, link, {1: a1, 2: a2})
    e3 = abs(both - 2 * per_led) / (2 * per_led)
    ok = max(e1, e2, e3) <= 1e-12
    acceptance_report(4, ok, f"single-user err {e1:.1e}, last-user err {e2:.1e}, dual-LED ratio err {e3:.1e}")
    assert ok


# --- 5 ---------------------------------------------------------------------


def _max_users_below(series, users, limit=1e-3):
    best = 0
    for n in users:
        if series[n] > limit:
            break
        best = n
    return best


def test_criterion_5_ber_trend(acceptance_report):
    users = range(2, 9)
    rows = sweep(users, ["none"], [GRPA, STATIC_04], total_time=100.0, ber_symbols=100_000)
    m = seed_means(rows, "avg_ber")
    g = {n: m[("none", "grpa", n)] for n in users}
    s = {n: m[("none", "static:0.4", n)] for n in users}
    order_ok = all(g[n] <= s[n] for n in users)
    cap_g, cap_s = _max_users_below(g, users), _max_users_below(s, users)
    ok = order_ok and cap_g >= cap_s
    fmt = lambda d: " ".join(f"{n}:{d[n]:.2e}" for n in users)
    acceptance_report(
        5, ok,
        f"BER grpa [{fmt(g)}] static0.4 [{fmt(s)}]; users at BER<=1e-3: grpa {cap_g}, static {cap_s}",
    )
    assert ok


# --- 6 ---------------------------------------------------------------------


def test_criterion_6_sum_rate_trends(acceptance_report):
    users = (2, 8, 9, 10)
    rows = sweep(users, ["none", "angle", "fov"], [STATIC_04, GRPA], total_time=100.0)
    m = seed_means(rows, "sum_rate_bps")
    allocs = ("static:0.4", "grpa")
    low = all(
        m[(sc, a, 2)] >= m[("none", a, 2)] for a in allocs for sc in ("angle", "fov")
    )
    rank = all(
        m[("fov", a, n)] > m[("none", a, n)] > m[("angle", a, n)] for a in allocs for n in users[1:]
    )
    gain = {
        a: {n: m[("fov", a, n)] - m[("none", a, n)] for n in users[1:]} for a in allocs
    }
    grpa_boost = all(gain["grpa"][n] > gain["static:0.4"][n] for n in users[1:])
    ok = low and rank and grpa_boost
    mb = lambda v: f"{v / 1e6:.1f}"
    detail = (
        f"2 users tuning>=none: {low}; >=8 users fov first, angle last: {rank}; "
        f"fov gain (Mb/s) grpa {[mb(gain['grpa'][n]) for n in users[1:]]} "
        f"vs static {[mb(gain['static:0.4'][n]) for n in users[1:]]}"
    )
    acceptance_report(6, ok, detail)
    assert ok


# --- 7 ---------------------------------------------------------------------


def test_criterion_7_handover_trend(acceptance_report):
    users = range(2, 11)
    rows = sweep(users, ["none", "fov-ho"], [GRPA], total_time=100.0)
    m = seed_means(rows, "handover_count")
    fixed = {n: m[("none", "grpa", n)] for n in users}
    tunable = {n: m[("fov-ho", "grpa", n)] for n in users}
    le = all(tunable[n] <= fixed[n] for n in users)
    strict = sum(tunable[n] < fixed[n] for n in users)
    ok = le and strict >= math.ceil(len(users) / 2)
    pairs = " ".join(f"{n}:{fixed[n]:.1f}/{tunable[n]:.1f}" for n in users)
    acceptance_report(7, ok, f"fixed/tunable handovers [{pairs}]; strict at {strict}/{len(users)}")
    assert ok


# --- 8 ---------------------------------------------------------------------


def test_criterion_8_determinism_and_q(acceptance_report, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[sim]\ntotal_time = 2\n[ber]\nsymbols = 5000\n[sweep]\nusers = 2..5\nrepetitions = 3\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli.main(["--config", str(cfg), "--out", str(out), "--seed", "7", "-q"]) == 0
        outs.append((out / "results.csv").read_bytes())
    identical = outs[0] == outs[1]

    sigma, amp, n = 0.45, 1.0, 200_000
    sc = noma.BerScenario(
        {1: noma.PowerAllocation(1, (0,), (amp,), amp)},
        {0: noma.LinkRealization(0, {1: 1.0}, sigma**2)},
    )
    est = noma.monte_carlo_ber(sc, n, rng_seed=8).per_user[0]
    p = noma.ook_ber_theory(amp, sigma)
    se = math.sqrt(est * (1 - est) / n)
    within = abs(est - p) <= 3 * se
    ok = identical and within
    acceptance_report(
        8, ok,
        f"CSV byte-identical: {identical}; BER {est:.5f} vs Q {p:.5f} ({abs(est - p) / se:.2f} SE)",
    )
    assert ok
